//! A minimal reduced ordered binary decision diagram.
//!
//! Each [`Bdd`] is a self-contained value: a node array plus a root index.
//! After every operation the reachable nodes are renumbered in a canonical
//! depth-first order, so structural equality coincides with semantic equality
//! (standard ROBDD canonicity under the fixed variable order `0 < 1 < ...`).

use std::collections::HashMap;

/// Sentinel level for terminal nodes (sorts after every real variable).
const TERMINAL: u32 = u32::MAX;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
struct Node {
    var: u32,
    lo: u32,
    hi: u32,
}

const FALSE_NODE: Node = Node { var: TERMINAL, lo: 0, hi: 0 };
const TRUE_NODE: Node = Node { var: TERMINAL, lo: 1, hi: 1 };

/// A boolean function over variables identified by `u32` indices.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Bdd {
    /// `nodes[0]` is the false terminal, `nodes[1]` the true terminal.
    nodes: Vec<Node>,
    root: u32,
}

/// Builder holding a unique-table during construction.
struct Builder {
    nodes: Vec<Node>,
    unique: HashMap<Node, u32>,
}

impl Builder {
    fn new() -> Builder {
        Builder { nodes: vec![FALSE_NODE, TRUE_NODE], unique: HashMap::new() }
    }

    fn mk(&mut self, var: u32, lo: u32, hi: u32) -> u32 {
        if lo == hi {
            return lo;
        }
        let node = Node { var, lo, hi };
        if let Some(&i) = self.unique.get(&node) {
            return i;
        }
        let i = self.nodes.len() as u32;
        self.nodes.push(node);
        self.unique.insert(node, i);
        i
    }

    /// Renumbers the nodes reachable from `root` in a canonical DFS order.
    fn finish(self, root: u32) -> Bdd {
        let mut map: HashMap<u32, u32> = HashMap::new();
        map.insert(0, 0);
        map.insert(1, 1);
        let mut out = vec![FALSE_NODE, TRUE_NODE];
        let mut order = Vec::new();
        // Iterative post-order over the DAG.
        let mut stack = vec![(root, false)];
        while let Some((n, expanded)) = stack.pop() {
            if map.contains_key(&n) {
                continue;
            }
            if expanded {
                order.push(n);
                map.insert(n, 0); // placeholder, fixed below
            } else {
                stack.push((n, true));
                let node = self.nodes[n as usize];
                stack.push((node.hi, false));
                stack.push((node.lo, false));
            }
        }
        // Assign final indices in post-order (children before parents).
        for (k, n) in order.iter().enumerate() {
            map.insert(*n, (k + 2) as u32);
        }
        out.resize(order.len() + 2, FALSE_NODE);
        for n in &order {
            let node = self.nodes[*n as usize];
            out[map[n] as usize] = Node { var: node.var, lo: map[&node.lo], hi: map[&node.hi] };
        }
        Bdd { nodes: out, root: map[&root] }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    And,
    Or,
    /// Biimplication (XNOR).
    Iff,
    /// `a ∧ ¬b`; used for entailment checks.
    AndNot,
}

impl Op {
    fn terminal(self, a: Option<bool>, b: Option<bool>) -> Option<bool> {
        match self {
            Op::And => match (a, b) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                (Some(true), None) | (None, Some(true)) | (None, None) => None,
            },
            Op::Or => match (a, b) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            },
            Op::Iff => match (a, b) {
                (Some(x), Some(y)) => Some(x == y),
                _ => None,
            },
            Op::AndNot => match (a, b) {
                (Some(false), _) | (_, Some(true)) => Some(false),
                (Some(true), Some(false)) => Some(true),
                _ => None,
            },
        }
    }
}

impl Bdd {
    pub fn constant(value: bool) -> Bdd {
        Bdd { nodes: vec![FALSE_NODE, TRUE_NODE], root: value as u32 }
    }

    pub fn var(v: u32) -> Bdd {
        assert!(v < TERMINAL);
        Bdd { nodes: vec![FALSE_NODE, TRUE_NODE, Node { var: v, lo: 0, hi: 1 }], root: 2 }
    }

    pub fn is_true(&self) -> bool {
        self.root == 1
    }

    pub fn is_false(&self) -> bool {
        self.root == 0
    }

    fn node(&self, i: u32) -> Node {
        self.nodes[i as usize]
    }

    fn term_value(&self, i: u32) -> Option<bool> {
        match i {
            0 => Some(false),
            1 => Some(true),
            _ => None,
        }
    }

    pub fn apply(op: Op, a: &Bdd, b: &Bdd) -> Bdd {
        let mut builder = Builder::new();
        let mut memo: HashMap<(u32, u32), u32> = HashMap::new();
        let root = apply_rec(op, a, a.root, b, b.root, &mut builder, &mut memo);
        builder.finish(root)
    }

    pub fn and(&self, other: &Bdd) -> Bdd {
        Bdd::apply(Op::And, self, other)
    }

    pub fn or(&self, other: &Bdd) -> Bdd {
        Bdd::apply(Op::Or, self, other)
    }

    pub fn iff(&self, other: &Bdd) -> Bdd {
        Bdd::apply(Op::Iff, self, other)
    }

    /// `self ⊨ other`.
    pub fn entails(&self, other: &Bdd) -> bool {
        Bdd::apply(Op::AndNot, self, other).is_false()
    }

    /// Cofactor: fixes `var` to `value`.
    pub fn restrict(&self, var: u32, value: bool) -> Bdd {
        let mut builder = Builder::new();
        let mut memo: HashMap<u32, u32> = HashMap::new();
        let root = restrict_rec(self, self.root, var, value, &mut builder, &mut memo);
        builder.finish(root)
    }

    /// Existential quantification of one variable (Schröder elimination):
    /// `φ[v/true] ∨ φ[v/false]`.
    pub fn exists(&self, var: u32) -> Bdd {
        self.restrict(var, true).or(&self.restrict(var, false))
    }

    /// Evaluates under the assignment where exactly the variables for which
    /// `truthy` returns true are true.
    pub fn eval(&self, truthy: impl Fn(u32) -> bool) -> bool {
        let mut i = self.root;
        loop {
            match self.term_value(i) {
                Some(v) => return v,
                None => {
                    let n = self.node(i);
                    i = if truthy(n.var) { n.hi } else { n.lo };
                }
            }
        }
    }

    /// The set of variables the function actually depends on.
    pub fn support(&self) -> Vec<u32> {
        let mut vars: Vec<u32> = self
            .nodes
            .iter()
            .skip(2)
            .map(|n| n.var)
            .collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    /// Renames variables via a strictly monotonic partial map given as sorted
    /// `(from, to)` pairs; variables not listed keep their index.  Monotonicity
    /// preserves the variable order, so the node structure is unchanged.
    pub fn rename_monotonic(&self, pairs: &[(u32, u32)]) -> Bdd {
        debug_assert!(pairs.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        let map = |v: u32| pairs.iter().find(|(f, _)| *f == v).map_or(v, |(_, t)| *t);
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                if n.var == TERMINAL {
                    *n
                } else {
                    Node { var: map(n.var), lo: n.lo, hi: n.hi }
                }
            })
            .collect();
        Bdd { nodes, root: self.root }
    }
}

fn apply_rec(
    op: Op,
    a: &Bdd,
    ai: u32,
    b: &Bdd,
    bi: u32,
    builder: &mut Builder,
    memo: &mut HashMap<(u32, u32), u32>,
) -> u32 {
    if let Some(v) = op.terminal(a.term_value(ai), b.term_value(bi)) {
        return v as u32;
    }
    if let Some(&r) = memo.get(&(ai, bi)) {
        return r;
    }
    let an = a.node(ai);
    let bn = b.node(bi);
    let var = an.var.min(bn.var);
    let (alo, ahi) = if an.var == var { (an.lo, an.hi) } else { (ai, ai) };
    let (blo, bhi) = if bn.var == var { (bn.lo, bn.hi) } else { (bi, bi) };
    let lo = apply_rec(op, a, alo, b, blo, builder, memo);
    let hi = apply_rec(op, a, ahi, b, bhi, builder, memo);
    let r = builder.mk(var, lo, hi);
    memo.insert((ai, bi), r);
    r
}

fn restrict_rec(
    bdd: &Bdd,
    i: u32,
    var: u32,
    value: bool,
    builder: &mut Builder,
    memo: &mut HashMap<u32, u32>,
) -> u32 {
    if bdd.term_value(i).is_some() {
        return i;
    }
    if let Some(&r) = memo.get(&i) {
        return r;
    }
    let n = bdd.node(i);
    let r = if n.var == var {
        let branch = if value { n.hi } else { n.lo };
        restrict_rec(bdd, branch, var, value, builder, memo)
    } else if n.var > var {
        // `var` does not occur below here.
        copy_rec(bdd, i, builder, memo)
    } else {
        let lo = restrict_rec(bdd, n.lo, var, value, builder, memo);
        let hi = restrict_rec(bdd, n.hi, var, value, builder, memo);
        builder.mk(n.var, lo, hi)
    };
    memo.insert(i, r);
    r
}

fn copy_rec(bdd: &Bdd, i: u32, builder: &mut Builder, memo: &mut HashMap<u32, u32>) -> u32 {
    if bdd.term_value(i).is_some() {
        return i;
    }
    if let Some(&r) = memo.get(&i) {
        return r;
    }
    let n = bdd.node(i);
    let lo = copy_rec(bdd, n.lo, builder, memo);
    let hi = copy_rec(bdd, n.hi, builder, memo);
    let r = builder.mk(n.var, lo, hi);
    memo.insert(i, r);
    r
}
