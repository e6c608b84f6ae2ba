//! A small concrete semantics used as a testing oracle: idempotent
//! substitutions, Robinson unification, and the abstraction function mapping
//! sets of substitutions into the sharing/freeness/linearity domain.

use crate::kernel_terms::{Binding, Term, Var, VarSet};
use crate::mode_domains::SflElement;
use crate::set_sharing::SharingSet;
use std::collections::BTreeMap;

/// An idempotent substitution: no bound variable occurs in any binding's
/// right-hand side.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Substitution {
    map: BTreeMap<Var, Term>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UnifyError {
    #[error("unification failed")]
    Failure,
    /// Without the occurs-check, unifying `x` with a term containing `x`
    /// would build an infinite (rational) term, which finite terms cannot
    /// represent.
    #[error("unification result is not a finite term")]
    OutOfScope,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, v: Var) -> Option<&Term> {
        self.map.get(&v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, &Term)> {
        self.map.iter().map(|(v, t)| (*v, t))
    }

    /// Applies the substitution to a term, fully resolving bound variables.
    pub fn apply(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => match self.map.get(v) {
                Some(bound) => bound.clone(),
                None => t.clone(),
            },
            Term::Atom(_) | Term::Int(_) => t.clone(),
            Term::Comp(name, args) => Term::Comp(
                name.clone(),
                args.iter().map(|a| self.apply(a)).collect(),
            ),
        }
    }

    /// Adds `v ↦ t` and restores idempotency by substituting `t` for `v`
    /// throughout the existing range.
    fn bind(&mut self, v: Var, t: Term) {
        let single = Substitution { map: BTreeMap::from([(v, t.clone())]) };
        for rhs in self.map.values_mut() {
            *rhs = single.apply(rhs);
        }
        self.map.insert(v, t);
    }
}

/// Unifies `lhs` with `rhs` under `subst`, extending it on success.  With
/// `occurs_check` set, cyclic bindings fail; without it they are reported as
/// out of scope instead of looping.
pub fn concrete_unify(
    subst: &Substitution,
    lhs: &Term,
    rhs: &Term,
    occurs_check: bool,
) -> Result<Substitution, UnifyError> {
    let mut out = subst.clone();
    let mut queue = vec![(subst.apply(lhs), subst.apply(rhs))];
    while let Some((a, b)) = queue.pop() {
        let a = out.apply(&a);
        let b = out.apply(&b);
        match (a, b) {
            (Term::Var(x), Term::Var(y)) if x == y => {}
            (Term::Var(x), t) | (t, Term::Var(x)) => {
                if t.vars().contains(x) {
                    return Err(if occurs_check {
                        UnifyError::Failure
                    } else {
                        UnifyError::OutOfScope
                    });
                }
                out.bind(x, t);
            }
            (Term::Atom(a), Term::Atom(b)) if a == b => {}
            (Term::Int(a), Term::Int(b)) if a == b => {}
            (Term::Comp(f, xs), Term::Comp(g, ys)) if f == g && xs.len() == ys.len() => {
                queue.extend(xs.into_iter().zip(ys));
            }
            _ => return Err(UnifyError::Failure),
        }
    }
    Ok(out)
}

/// [`concrete_unify`] specialized to a binding `x = t`.
pub fn unify_binding(
    subst: &Substitution,
    b: &Binding,
    occurs_check: bool,
) -> Result<Substitution, UnifyError> {
    concrete_unify(subst, &Term::Var(b.lhs), &b.rhs, occurs_check)
}

fn occ_groups(subst: &Substitution, vi: VarSet) -> SharingSet {
    // The occurrence group of a heap variable v collects the interesting
    // variables whose images contain v.
    let mut heap_vars = VarSet::EMPTY;
    for x in vi.iter() {
        heap_vars = heap_vars.union(subst.apply(&Term::Var(x)).vars());
    }
    let mut sh = SharingSet::new();
    for v in heap_vars.iter() {
        let group: VarSet = vi
            .iter()
            .filter(|&x| subst.apply(&Term::Var(x)).vars().contains(v))
            .collect();
        if !group.is_empty() {
            sh.insert(group);
        }
    }
    sh
}

fn is_linear_term(t: &Term) -> bool {
    let (_, multi) = crate::kernel_terms::term_vars(t);
    multi.values().all(|&n| n <= 1)
}

/// Abstracts a single substitution over the variables of interest.
pub fn alpha_one(subst: &Substitution, vi: VarSet) -> SflElement {
    let sh = occ_groups(subst, vi);
    let f: VarSet = vi
        .iter()
        .filter(|&x| matches!(subst.apply(&Term::Var(x)), Term::Var(_)))
        .collect();
    let l: VarSet = vi
        .iter()
        .filter(|&x| is_linear_term(&subst.apply(&Term::Var(x))))
        .collect();
    SflElement { sh, f, l }
}

/// Abstracts a set of substitutions: sharing groups accumulate, freeness and
/// linearity must hold in every substitution.
pub fn alpha(substs: &[Substitution], vi: VarSet) -> SflElement {
    let mut sh = SharingSet::new();
    let mut f = vi;
    let mut l = vi;
    for s in substs {
        let a = alpha_one(s, vi);
        sh = sh.union(&a.sh);
        f = f.inter(a.f);
        l = l.inter(a.l);
    }
    SflElement { sh, f, l }
}

/// The oracle check: abstracting the concrete unifier of every substitution
/// described by `d` must stay below the abstract result `d_after`.
pub fn soundness_holds(
    substs: &[Substitution],
    b: &Binding,
    vi: VarSet,
    d_after: &SflElement,
) -> bool {
    let mut unified = Vec::new();
    for s in substs {
        match unify_binding(s, b, true) {
            Ok(s2) => unified.push(s2),
            Err(_) => {} // failed branches contribute nothing
        }
    }
    alpha(&unified, vi).le(d_after)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel_terms::VarTable;
    use crate::mode_domains::{amgu_sfl, StarMode};

    fn t3() -> (VarTable, Var, Var, Var) {
        let mut t = VarTable::new();
        let x = t.intern("x");
        let y = t.intern("y");
        let z = t.intern("z");
        (t, x, y, z)
    }

    #[test]
    fn unify_basics() {
        let (_, x, y, _) = t3();
        let s = concrete_unify(
            &Substitution::new(),
            &Term::Var(x),
            &Term::Comp("f".into(), vec![Term::Var(y)]),
            true,
        )
        .unwrap();
        assert_eq!(
            s.apply(&Term::Var(x)),
            Term::Comp("f".into(), vec![Term::Var(y)])
        );
        // Clash fails.
        assert_eq!(
            concrete_unify(&Substitution::new(), &Term::Atom("a".into()), &Term::Atom("b".into()), true),
            Err(UnifyError::Failure)
        );
    }

    #[test]
    fn unify_is_idempotent() {
        let (_, x, y, z) = t3();
        // x = f(y), then y = g(z): x's image must be fully resolved.
        let s = concrete_unify(
            &Substitution::new(),
            &Term::Var(x),
            &Term::Comp("f".into(), vec![Term::Var(y)]),
            true,
        )
        .unwrap();
        let s = concrete_unify(
            &s,
            &Term::Var(y),
            &Term::Comp("g".into(), vec![Term::Var(z)]),
            true,
        )
        .unwrap();
        for (_, rhs) in s.iter() {
            for v in rhs.vars().iter() {
                assert!(s.get(v).is_none(), "range var bound again");
            }
        }
        assert_eq!(
            s.apply(&Term::Var(x)),
            Term::Comp("f".into(), vec![Term::Comp("g".into(), vec![Term::Var(z)])])
        );
    }

    #[test]
    fn occurs_check_vs_out_of_scope() {
        let (_, x, y, _) = t3();
        let cyclic = Term::Comp("f".into(), vec![Term::Var(x), Term::Var(y)]);
        assert_eq!(
            concrete_unify(&Substitution::new(), &Term::Var(x), &cyclic, true),
            Err(UnifyError::Failure)
        );
        assert_eq!(
            concrete_unify(&Substitution::new(), &Term::Var(x), &cyclic, false),
            Err(UnifyError::OutOfScope)
        );
    }

    #[test]
    fn alpha_of_identity_is_top() {
        let (t, _, _, _) = t3();
        let vi = t.all_vars();
        let a = alpha_one(&Substitution::new(), vi);
        assert_eq!(a, SflElement::top(vi));
    }

    #[test]
    fn alpha_examples() {
        let (mut t, x, y, z) = t3();
        let vi = t.all_vars();
        // σ = {x ↦ f(y,y)}: x shares with y, x non-linear, y still free.
        let s = concrete_unify(
            &Substitution::new(),
            &Term::Var(x),
            &Term::Comp("f".into(), vec![Term::Var(y), Term::Var(y)]),
            true,
        )
        .unwrap();
        let a = alpha_one(&s, vi);
        assert_eq!(a.sh, SharingSet::parse("{xy, z}", &mut t));
        assert_eq!(a.f, VarSet::from_iter([y, z]));
        assert_eq!(a.l, VarSet::from_iter([y, z]));
        // Grounding: x ↦ a drops x from every component's support.
        let s = concrete_unify(&Substitution::new(), &Term::Var(x), &Term::Atom("a".into()), true)
            .unwrap();
        let a = alpha_one(&s, vi);
        assert_eq!(a.sh, SharingSet::parse("{y, z}", &mut t));
        assert!(!a.f.contains(x));
        assert!(a.l.contains(x)); // ground terms are linear
    }

    #[test]
    fn soundness_on_a_concrete_case() {
        let (t, x, y, z) = t3();
        let vi = t.all_vars();
        let d0 = SflElement::top(vi);
        let b = Binding::new(x, Term::Comp("f".into(), vec![Term::Var(y), Term::Var(z)]));
        let d1 = amgu_sfl(&d0, &b, vi, StarMode::Star);
        assert!(soundness_holds(&[Substitution::new()], &b, vi, &d1));
    }
}
