//! Term representation for a Prolog subset: variables of interest, first-order
//! terms, bindings `x = t`, and normalized clauses ready for abstract
//! interpretation.
//!
//! Every analysis works over a finite, fixed set of *variables of interest*
//! (VI).  Variables are small integer indices into a per-clause [`VarTable`];
//! sets of variables are bitsets ([`VarSet`]) so that sharing-group operations
//! are cheap and deterministic.

mod normal;
mod parse;

pub use normal::{normalize_clause, normalize_program, BodyItem, NormalClause, Predicate, Program};
pub use parse::{
    parse_program, program_to_string, term_to_string, EntryGoal, ParseError, ParsedClause,
    ParsedProgram,
};

use std::collections::BTreeMap;
use std::fmt;

/// A variable of interest: an index into the enclosing [`VarTable`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Var(pub u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Maximum number of variables in one analysis context (clause VI plus
/// temporaries introduced at call sites).
pub const MAX_VARS: usize = 128;

/// A set of variables, backed by a 128-bit bitset.
///
/// The `Ord` instance gives a canonical, deterministic iteration order for
/// collections of variable sets (sharing groups).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct VarSet(u128);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub fn singleton(v: Var) -> VarSet {
        debug_assert!(v.index() < MAX_VARS);
        VarSet(1u128 << v.0)
    }

    /// The set `{0, 1, ..., n-1}` of the first `n` variables.
    pub fn first_n(n: usize) -> VarSet {
        assert!(n <= MAX_VARS, "variable limit exceeded ({n} > {MAX_VARS})");
        if n == MAX_VARS {
            VarSet(u128::MAX)
        } else {
            VarSet((1u128 << n) - 1)
        }
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, v: Var) -> bool {
        self.0 & (1u128 << v.0) != 0
    }

    pub fn insert(&mut self, v: Var) {
        debug_assert!(v.index() < MAX_VARS);
        self.0 |= 1u128 << v.0;
    }

    pub fn remove(&mut self, v: Var) {
        self.0 &= !(1u128 << v.0);
    }

    pub fn with(self, v: Var) -> VarSet {
        VarSet(self.0 | (1u128 << v.0))
    }

    pub fn union(self, other: VarSet) -> VarSet {
        VarSet(self.0 | other.0)
    }

    pub fn inter(self, other: VarSet) -> VarSet {
        VarSet(self.0 & other.0)
    }

    pub fn diff(self, other: VarSet) -> VarSet {
        VarSet(self.0 & !other.0)
    }

    pub fn intersects(self, other: VarSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_subset(self, other: VarSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Var> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros();
                bits &= bits - 1;
                Some(Var(i))
            }
        })
    }
}

impl FromIterator<Var> for VarSet {
    fn from_iter<I: IntoIterator<Item = Var>>(iter: I) -> VarSet {
        let mut s = VarSet::EMPTY;
        for v in iter {
            s.insert(v);
        }
        s
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_set().entries(self.iter().map(|v| v.0)).finish()
    }
}

/// Maps variable names to indices within one analysis context.
#[derive(Clone, Debug, Default)]
pub struct VarTable {
    names: Vec<String>,
}

impl VarTable {
    pub fn new() -> VarTable {
        VarTable::default()
    }

    /// Interns `name`, returning the existing index if already present.
    pub fn intern(&mut self, name: &str) -> Var {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            return Var(i as u32);
        }
        self.push(name.to_owned())
    }

    /// Adds a variable that is guaranteed fresh (panics on name clash in debug).
    pub fn push(&mut self, name: String) -> Var {
        assert!(
            self.names.len() < MAX_VARS,
            "variable limit exceeded: more than {MAX_VARS} variables in one context"
        );
        self.names.push(name);
        Var(self.names.len() as u32 - 1)
    }

    /// A fresh variable with a generated name avoiding clashes.
    pub fn fresh(&mut self, hint: &str) -> Var {
        let mut name = hint.to_owned();
        let mut k = 0;
        while self.names.iter().any(|n| *n == name) {
            k += 1;
            name = format!("{hint}_{k}");
        }
        self.push(name)
    }

    pub fn name(&self, v: Var) -> &str {
        &self.names[v.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn all_vars(&self) -> VarSet {
        VarSet::first_n(self.names.len())
    }
}

/// A first-order term.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Term {
    Var(Var),
    /// An atomic constant: atom or integer.
    Atom(String),
    Int(i64),
    /// A compound term `functor(args...)`; arity is `args.len()` ≥ 1.
    Comp(String, Vec<Term>),
}

impl Term {
    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<Var> {
        match self {
            Term::Var(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_compound(&self) -> bool {
        matches!(self, Term::Comp(_, _))
    }

    /// The set of variables occurring in the term.
    pub fn vars(&self) -> VarSet {
        let mut set = VarSet::EMPTY;
        self.visit_vars(&mut |v| set.insert(v));
        set
    }

    fn visit_vars(&self, f: &mut impl FnMut(Var)) {
        match self {
            Term::Var(v) => f(*v),
            Term::Atom(_) | Term::Int(_) => {}
            Term::Comp(_, args) => {
                for a in args {
                    a.visit_vars(f);
                }
            }
        }
    }
}

/// `vars(t)` and `mvars(t)`: the set and the multiset of variables in `t`.
pub fn term_vars(t: &Term) -> (VarSet, BTreeMap<Var, u32>) {
    let mut set = VarSet::EMPTY;
    let mut multi = BTreeMap::new();
    t.visit_vars(&mut |v| {
        set.insert(v);
        *multi.entry(v).or_insert(0) += 1;
    });
    (set, multi)
}

/// Variables occurring more than once in `t`.
pub fn repeated_vars(t: &Term) -> VarSet {
    term_vars(t)
        .1
        .into_iter()
        .filter(|&(_, n)| n > 1)
        .map(|(v, _)| v)
        .collect()
}

/// A binding `x = t`.  The right-hand side may contain `x` (cyclic binding);
/// the occurs-check is not imposed.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Binding {
    pub lhs: Var,
    pub rhs: Term,
}

impl Binding {
    pub fn new(lhs: Var, rhs: Term) -> Binding {
        debug_assert!(rhs != Term::Var(lhs), "binding x = x is a no-op, not a Binding");
        Binding { lhs, rhs }
    }

    /// True when the bound variable occurs inside the right-hand side.
    pub fn is_cyclic(&self) -> bool {
        self.rhs.vars().contains(self.lhs)
    }

    /// `V_x = {x}`.
    pub fn lhs_vars(&self) -> VarSet {
        VarSet::singleton(self.lhs)
    }

    /// `V_t = vars(t)`.
    pub fn rhs_vars(&self) -> VarSet {
        self.rhs.vars()
    }

    /// `V_xt = V_x ∪ V_t`.
    pub fn all_vars(&self) -> VarSet {
        self.lhs_vars().union(self.rhs_vars())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tbl(names: &[&str]) -> VarTable {
        let mut t = VarTable::new();
        for n in names {
            t.intern(n);
        }
        t
    }

    #[test]
    fn varset_basic_ops() {
        let a: VarSet = [Var(0), Var(2)].into_iter().collect();
        let b: VarSet = [Var(2), Var(3)].into_iter().collect();
        assert_eq!(a.union(b).len(), 3);
        assert_eq!(a.inter(b), VarSet::singleton(Var(2)));
        assert_eq!(a.diff(b), VarSet::singleton(Var(0)));
        assert!(a.intersects(b));
        assert!(!a.is_subset(b));
        assert!(VarSet::EMPTY.is_subset(a));
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![Var(0), Var(2)]);
    }

    #[test]
    fn term_vars_multiset() {
        // f(X, X, Y) has vars {X, Y} and multiset {X: 2, Y: 1}.
        let mut t = tbl(&["X", "Y"]);
        let x = t.intern("X");
        let y = t.intern("Y");
        let term = Term::Comp(
            "f".into(),
            vec![Term::Var(x), Term::Var(x), Term::Var(y)],
        );
        let (vs, ms) = term_vars(&term);
        assert_eq!(vs, [x, y].into_iter().collect());
        assert_eq!(ms.get(&x), Some(&2));
        assert_eq!(ms.get(&y), Some(&1));
        assert_eq!(repeated_vars(&term), VarSet::singleton(x));
    }

    #[test]
    fn term_vars_ground_and_single() {
        let (vs, ms) = term_vars(&Term::Atom("a".into()));
        assert!(vs.is_empty());
        assert!(ms.is_empty());

        let (vs, ms) = term_vars(&Term::Var(Var(0)));
        assert_eq!(vs, VarSet::singleton(Var(0)));
        assert_eq!(ms.get(&Var(0)), Some(&1));
    }

    #[test]
    fn multiset_support_equals_var_set() {
        let mut t = tbl(&[]);
        let x = t.intern("X");
        let y = t.intern("Y");
        let term = Term::Comp(
            "g".into(),
            vec![
                Term::Comp("f".into(), vec![Term::Var(x), Term::Var(y)]),
                Term::Var(y),
            ],
        );
        let (vs, ms) = term_vars(&term);
        let support: VarSet = ms.keys().copied().collect();
        assert_eq!(vs, support);
    }

    #[test]
    fn cyclic_binding_detection() {
        let mut t = tbl(&[]);
        let x = t.intern("X");
        let y = t.intern("Y");
        let b = Binding::new(x, Term::Comp("f".into(), vec![Term::Var(x), Term::Var(y)]));
        assert!(b.is_cyclic());
        assert_eq!(b.all_vars(), [x, y].into_iter().collect());
        let b2 = Binding::new(x, Term::Var(y));
        assert!(!b2.is_cyclic());
    }
}
