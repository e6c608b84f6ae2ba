//! The Pos domain of positive Boolean functions: groundness dependencies like
//! `x ↔ (y ∧ z)`, with entailment queries, projection, least upper bound, and
//! explicit model enumeration (needed by the reduce operator).
//!
//! Positivity — the all-true assignment is a model — is an invariant of every
//! constructor used here (`true`, variables, `∧`, `∨`, `↔` of positive
//! operands are positive).

mod bdd;

use crate::kernel_terms::{Binding, Var, VarSet, VarTable};
use bdd::Bdd;
use std::collections::BTreeSet;

/// Default variable-count bound for explicit model enumeration.
pub const DEFAULT_MODEL_BOUND: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PosError {
    #[error("model enumeration bound exceeded: |VI| = {vi_len} > {bound}")]
    ModelBoundExceeded { vi_len: usize, bound: usize },
}

/// The set of models of a formula, each model given as its true variables.
/// Contains VI itself by positivity.
pub type ModelSet = BTreeSet<VarSet>;

/// A positive Boolean function over VI.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PosFormula(Bdd);

impl PosFormula {
    pub fn tt() -> PosFormula {
        PosFormula(Bdd::constant(true))
    }

    pub fn var(v: Var) -> PosFormula {
        PosFormula(Bdd::var(v.0))
    }

    pub fn and(&self, other: &PosFormula) -> PosFormula {
        PosFormula(self.0.and(&other.0))
    }

    pub fn or(&self, other: &PosFormula) -> PosFormula {
        PosFormula(self.0.or(&other.0))
    }

    pub fn iff(&self, other: &PosFormula) -> PosFormula {
        PosFormula(self.0.iff(&other.0))
    }

    /// `∧ V`, with the empty conjunction being `true`.
    pub fn conj(vars: VarSet) -> PosFormula {
        vars.iter()
            .fold(PosFormula::tt(), |acc, v| acc.and(&PosFormula::var(v)))
    }

    pub fn is_true(&self) -> bool {
        self.0.is_true()
    }

    pub fn entails(&self, other: &PosFormula) -> bool {
        self.0.entails(&other.0)
    }

    /// Evaluates the formula under the assignment whose true variables are
    /// exactly `trues`.
    pub fn eval(&self, trues: VarSet) -> bool {
        self.0.eval(|v| trues.contains(Var(v)))
    }

    /// Renames variables by strictly increasing `(from, to)` pairs.
    pub fn rename_monotonic(&self, pairs: &[(Var, Var)]) -> PosFormula {
        let raw: Vec<(u32, u32)> = pairs.iter().map(|&(f, t)| (f.0, t.0)).collect();
        PosFormula(self.0.rename_monotonic(&raw))
    }

    /// The variables the formula depends on.
    pub fn support(&self) -> VarSet {
        self.0.support().into_iter().map(Var).collect()
    }
}

/// The effect of a binding `x = t` on groundness: `φ ∧ (x ↔ ∧vars(t))`.
/// For a cyclic binding (`x ∈ vars(t)`) the occurrence of `x` in `t` carries
/// no constraint: `φ ∧ (x ↔ ∧(vars(t) \ {x}))`.
pub fn pos_amgu(phi: &PosFormula, b: &Binding) -> PosFormula {
    let mut rhs_vars = b.rhs_vars();
    rhs_vars.remove(b.lhs);
    phi.and(&PosFormula::var(b.lhs).iff(&PosFormula::conj(rhs_vars)))
}

/// `{ x ∈ VI | φ ⊨ x }`: the definitely ground variables.
pub fn ground_vars(phi: &PosFormula, vi: VarSet) -> VarSet {
    vi.iter()
        .filter(|&x| phi.entails(&PosFormula::var(x)))
        .collect()
}

/// Existentially quantifies `V` out of `φ` (Schröder elimination per
/// variable).  The result is the strongest consequence of `φ` not mentioning
/// `V`.
pub fn pos_project(phi: &PosFormula, v: VarSet) -> PosFormula {
    let mut b = phi.0.clone();
    for x in v.iter() {
        b = b.exists(x.0);
    }
    PosFormula(b)
}

/// The least upper bound on Pos: disjunction.
pub fn pos_lub(phi1: &PosFormula, phi2: &PosFormula) -> PosFormula {
    phi1.or(phi2)
}

/// `φ ⊨ x ∨ y`: the variables cannot both be non-ground, which forces the
/// pair independent regardless of the sharing component.
pub fn entails_binary_disjunction(phi: &PosFormula, x: Var, y: Var) -> bool {
    phi.entails(&PosFormula::var(x).or(&PosFormula::var(y)))
}

/// The finest partition of VI where `x` and `y` share a class iff
/// `φ ⊨ (x ↔ y)` (entailed biimplication is an equivalence relation).
pub fn ground_equiv_classes(phi: &PosFormula, vi: VarSet) -> Vec<VarSet> {
    let mut classes: Vec<VarSet> = Vec::new();
    let mut placed = VarSet::EMPTY;
    for x in vi.iter() {
        if placed.contains(x) {
            continue;
        }
        let mut class = VarSet::singleton(x);
        for y in vi.iter() {
            if y > x
                && !placed.contains(y)
                && phi.entails(&PosFormula::var(x).iff(&PosFormula::var(y)))
            {
                class.insert(y);
            }
        }
        placed = placed.union(class);
        classes.push(class);
    }
    classes
}

/// Enumerates the models of `φ` over `vi` explicitly.  Errors when `|vi|`
/// exceeds `bound`, signalling callers to skip model-based enhancements.
pub fn models(phi: &PosFormula, vi: VarSet, bound: usize) -> Result<ModelSet, PosError> {
    if vi.len() > bound {
        return Err(PosError::ModelBoundExceeded { vi_len: vi.len(), bound });
    }
    let vars: Vec<Var> = vi.iter().collect();
    let mut out = ModelSet::new();
    let mut assignment = VarSet::EMPTY;
    enumerate(phi, &vars, 0, &mut assignment, &mut out);
    Ok(out)
}

fn enumerate(phi: &PosFormula, vars: &[Var], i: usize, assignment: &mut VarSet, out: &mut ModelSet) {
    if i == vars.len() {
        if phi.eval(*assignment) {
            out.insert(*assignment);
        }
        return;
    }
    for value in [false, true] {
        if value {
            assignment.insert(vars[i]);
        } else {
            assignment.remove(vars[i]);
        }
        enumerate(phi, vars, i + 1, assignment, out);
    }
    assignment.remove(vars[i]);
}

/// Parses the debug syntax for test fixtures: `x<->y&z`, `x\/y`, `true`,
/// parentheses.  `&` binds tighter than `<->`, which binds tighter than `\/`;
/// a chain `x<->y<->z` means mutual equivalence.  Variable names are single
/// characters interned in `table`.
pub fn parse_pos(text: &str, table: &mut VarTable) -> PosFormula {
    let mut p = PosParser { chars: text.chars().filter(|c| !c.is_whitespace()).collect(), pos: 0 };
    let f = p.disj(table);
    assert!(p.pos == p.chars.len(), "trailing input in pos fixture: {text}");
    f
}

struct PosParser {
    chars: Vec<char>,
    pos: usize,
}

impl PosParser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, s: &str) -> bool {
        let cs: Vec<char> = s.chars().collect();
        if self.chars[self.pos..].starts_with(&cs) {
            self.pos += cs.len();
            true
        } else {
            false
        }
    }

    fn disj(&mut self, table: &mut VarTable) -> PosFormula {
        let mut f = self.iff_chain(table);
        while self.eat("\\/") {
            f = f.or(&self.iff_chain(table));
        }
        f
    }

    fn iff_chain(&mut self, table: &mut VarTable) -> PosFormula {
        let first = self.conj(table);
        let mut parts = vec![first];
        while self.eat("<->") {
            parts.push(self.conj(table));
        }
        if parts.len() == 1 {
            return parts.pop().unwrap();
        }
        // x <-> y <-> z is mutual: (x↔y) ∧ (y↔z).
        let mut f = PosFormula::tt();
        for w in parts.windows(2) {
            f = f.and(&w[0].iff(&w[1]));
        }
        f
    }

    fn conj(&mut self, table: &mut VarTable) -> PosFormula {
        let mut f = self.atom(table);
        while self.eat("&") {
            f = f.and(&self.atom(table));
        }
        f
    }

    fn atom(&mut self, table: &mut VarTable) -> PosFormula {
        if self.eat("true") {
            return PosFormula::tt();
        }
        if self.eat("(") {
            let f = self.disj(table);
            assert!(self.eat(")"), "missing ')' in pos fixture");
            return f;
        }
        let c = self.peek().expect("unexpected end of pos fixture");
        assert!(c.is_ascii_lowercase(), "unexpected '{c}' in pos fixture");
        self.pos += 1;
        PosFormula::var(table.intern(&c.to_string()))
    }
}
