//! Precision enhancements layered over the base domains: groundness
//! propagation from Pos, the model-based reduce operator, binding-ordering
//! heuristics, the enhanced-linearity unification, freeness-based
//! decomposition, and the occurs-check-guarded compoundness reduction.

use crate::groundness_pos::{ground_vars, models, PosError, PosFormula};
use crate::kernel_terms::{term_vars, Binding, Term, Var, VarSet};
use crate::mode_domains::{
    amgu_sfl, free, ind, lin, sfl_lub, SflElement, SgflElement, StarMode,
};
use crate::set_sharing::{bin, nrel, rel, star_union, SharingSet};
use std::collections::BTreeSet;

/// How to order a run of consecutive bindings before abstract execution.
/// Grounding bindings always come first, whatever the strategy.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum OrderingStrategy {
    #[default]
    Textual,
    Reverse,
    /// Greedily pick the binding needing the fewest star-unions next.
    DelayStarUnions,
    /// Greedily pick the binding preserving the most freeness, then
    /// linearity.
    MaxFreeLin,
}

/// A Pos component paired with a sharing-based description.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CombinedElement {
    pub phi: PosFormula,
    pub d: SflElement,
}

/// A binding `x = t` is grounding w.r.t. `sh` when one side is already
/// definitely ground: `rel({x}, sh) = ∅` or `rel(vars(t), sh) = ∅` (in
/// particular when `vars(t) = ∅`).
pub fn is_grounding(sh: &SharingSet, b: &Binding) -> bool {
    rel(b.lhs_vars(), sh).is_empty() || rel(b.rhs_vars(), sh).is_empty()
}

/// Stable partition into (grounding, non-grounding).
pub fn partition_grounding(sh: &SharingSet, bs: &[Binding]) -> (Vec<Binding>, Vec<Binding>) {
    bs.iter().cloned().partition(|b| is_grounding(sh, b))
}

/// Propagates definite groundness from the Pos component: drops every sharing
/// group containing a ground variable and recovers linearity (and
/// ground-or-freeness) for the groundness thus discovered.
pub fn apply_groundness(phi: &PosFormula, d: &SflElement, vi: VarSet) -> SflElement {
    let g = ground_vars(phi, vi);
    let sh: SharingSet = d.sh.iter().filter(|s| !s.intersects(g)).collect();
    let l = d.l.union(g).union(vi.diff(sh.vars()));
    SflElement { sh, f: d.f, l }
}

/// [`apply_groundness`] for SGFL: ground variables are also ground-or-free.
pub fn apply_groundness_sgfl(phi: &PosFormula, d: &SgflElement, vi: VarSet) -> SgflElement {
    let g = ground_vars(phi, vi);
    let sh: SharingSet = d.sh.iter().filter(|s| !s.intersects(g)).collect();
    let recovered = g.union(vi.diff(sh.vars()));
    SgflElement { sh, f: d.f, gf: d.gf.union(recovered), l: d.l.union(recovered) }
}

/// The reduced-product filter: keeps exactly the sharing groups whose
/// complements are models of the groundness formula.
///
/// `sh` must be a full (non-ρ-reduced) representation: on reduced elements
/// the filter can unsoundly discard the information carried by redundant
/// groups.  Errors when VI is too large for model enumeration, in which case
/// the caller skips the enhancement.
pub fn reduce_product(
    phi_g: &PosFormula,
    sh: &SharingSet,
    vi: VarSet,
    bound: usize,
) -> Result<SharingSet, PosError> {
    let ms = models(phi_g, vi, bound)?;
    Ok(sh.iter().filter(|s| ms.contains(&vi.diff(*s))).collect())
}

/// How many of the two components get star-unioned when executing `b`
/// against `d` (0, 1 or 2) — the cost measure of the delay heuristic.
pub fn star_count(d: &SflElement, b: &Binding) -> usize {
    let x_term = Term::Var(b.lhs);
    let free_x = free(d, &x_term);
    let independent = ind(&d.sh, &x_term, &b.rhs);
    let mut count = 0;
    if b.is_cyclic() {
        if !(free_x || (lin(&d.sh, d.l, &b.rhs) && independent)) {
            count += 1; // S_x
        }
        if !free_x {
            count += 1; // CS_t
        }
        return count;
    }
    let free_t = free(d, &b.rhs);
    if !(free_x || free_t || (lin(&d.sh, d.l, &b.rhs) && independent)) {
        count += 1; // S_x
    }
    if !(free_x || free_t || (lin(&d.sh, d.l, &x_term) && independent)) {
        count += 1; // S_t
    }
    count
}

/// Orders a run of bindings: grounding bindings first, each part arranged by
/// the strategy.  The greedy strategies re-evaluate their measure against the
/// current description after every placement, advancing it with `amgu`.
pub fn order_bindings(
    strategy: OrderingStrategy,
    d: &SflElement,
    bs: &[Binding],
    vi: VarSet,
    mode: StarMode,
) -> Vec<Binding> {
    let (grounding, rest) = partition_grounding(&d.sh, bs);
    let mut current = d.clone();
    let mut out = Vec::with_capacity(bs.len());
    for part in [grounding, rest] {
        let ordered = order_part(strategy, &mut current, part, vi, mode);
        out.extend(ordered);
    }
    out
}

fn order_part(
    strategy: OrderingStrategy,
    current: &mut SflElement,
    mut part: Vec<Binding>,
    vi: VarSet,
    mode: StarMode,
) -> Vec<Binding> {
    match strategy {
        OrderingStrategy::Textual => {
            for b in &part {
                *current = amgu_sfl(current, b, vi, mode);
            }
            part
        }
        OrderingStrategy::Reverse => {
            part.reverse();
            for b in &part {
                *current = amgu_sfl(current, b, vi, mode);
            }
            part
        }
        OrderingStrategy::DelayStarUnions => greedy(current, part, vi, mode, |d, b| {
            // Fewest star-unions first; usize ordering, so negate via Reverse
            // is avoided by picking the minimum.
            star_count(d, b)
        }),
        OrderingStrategy::MaxFreeLin => greedy(current, part, vi, mode, |d, b| {
            // Lexicographically largest (|f'|, |l'|); expressed as a
            // minimized cost by complementing against the variable count.
            let after = amgu_sfl(d, b, vi, mode);
            let n = crate::kernel_terms::MAX_VARS + 1;
            (n - after.f.len()) * n + (n - after.l.len())
        }),
    }
}

/// Repeatedly extracts the binding minimizing `cost` against the current
/// description (ties broken by textual order), applying it as it goes.
fn greedy(
    current: &mut SflElement,
    mut part: Vec<Binding>,
    vi: VarSet,
    mode: StarMode,
    cost: impl Fn(&SflElement, &Binding) -> usize,
) -> Vec<Binding> {
    let mut out = Vec::with_capacity(part.len());
    while !part.is_empty() {
        let best = part
            .iter()
            .enumerate()
            .min_by_key(|(i, b)| (cost(current, b), *i))
            .map(|(i, _)| i)
            .unwrap();
        let b = part.remove(best);
        *current = amgu_sfl(current, &b, vi, mode);
        out.push(b);
    }
    out
}

/// Enhanced-linearity abstract unification: when `x` is linear but not free,
/// `t` is non-linear, and `x` and `t` are independent, only the groups
/// relevant to the *non-linear* variables of `t` need the star-union of
/// `R_x`.  Falls back to [`amgu_sfl`] when not applicable.
pub fn amgu_klin(d: &SflElement, b: &Binding, vi: VarSet, mode: StarMode) -> SflElement {
    let x = b.lhs;
    let t = &b.rhs;
    let x_term = Term::Var(x);
    let applicable = d.l.contains(x)
        && !d.f.contains(x)
        && !lin(&d.sh, d.l, t)
        && ind(&d.sh, &x_term, t);
    if !applicable {
        return amgu_sfl(d, b, vi, mode);
    }
    // V_t^l: the variables of t that cannot cause non-linearity — linear,
    // not multiply-occurring (unless outside vars(sh)), and independent of
    // every other variable of t.
    let (vt, multi) = term_vars(t);
    let sh_vars = d.sh.vars();
    let vt_lin: VarSet = vt
        .iter()
        .filter(|&y| {
            d.l.contains(y)
                && (multi[&y] <= 1 || !sh_vars.contains(y))
                && vt
                    .iter()
                    .all(|z| z == y || ind(&d.sh, &Term::Var(y), &Term::Var(z)))
        })
        .collect();
    let vt_nonlin = vt.diff(vt_lin);
    let r_x = rel(b.lhs_vars(), &d.sh);
    let r_t_lin = rel(vt_lin, &d.sh);
    let r_t_nonlin = rel(vt_nonlin, &d.sh);
    if r_t_lin.is_empty() || r_t_nonlin.is_empty() {
        return amgu_sfl(d, b, vi, mode);
    }
    let closed_r_x = match mode {
        StarMode::Star => star_union(&r_x),
        StarMode::Sbin => crate::set_sharing::sbin(&r_x),
    };
    let sh_k = nrel(b.all_vars(), &d.sh)
        .union(&bin(&r_x, &r_t_lin))
        .union(&bin(&closed_r_x, &r_t_nonlin));
    // Freeness and linearity exactly as in the standard operator.
    let std = amgu_sfl(d, b, vi, mode);
    let f2 = std.f.inter(sh_k.vars());
    let l2 = std.l.union(vi.diff(sh_k.vars()));
    SflElement { sh: sh_k, f: f2, l: l2 }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("freeness decomposition produced more than {bound} components")]
pub struct TooManyComponents {
    pub bound: usize,
}

/// Default bound on the number of decomposition components.
pub const DEFAULT_COMPONENT_BOUND: usize = 4096;

/// Decomposes `d` into the maximal sub-elements in which every free variable
/// occurring in `sh` occurs in *exactly one* sharing group.  Groups without
/// free variables belong to every component.
///
/// Requires a full (non-ρ-reduced) `sh`: on reduced elements a component can
/// unsoundly retain linearity.
pub fn free_decompose(
    d: &SflElement,
    bound: usize,
) -> Result<Vec<SflElement>, TooManyComponents> {
    let fv = d.f.inter(d.sh.vars());
    if fv.is_empty() {
        return Ok(vec![d.clone()]);
    }
    let base: SharingSet = d.sh.iter().filter(|g| !g.intersects(fv)).collect();
    let free_groups: Vec<VarSet> = d.sh.iter().filter(|g| g.intersects(fv)).collect();
    // Exact cover of the free variables by the groups' free-variable traces.
    let mut covers: BTreeSet<BTreeSet<VarSet>> = BTreeSet::new();
    let mut chosen: Vec<VarSet> = Vec::new();
    exact_cover(fv, VarSet::EMPTY, &free_groups, &mut chosen, &mut covers, bound)
        .map_err(|()| TooManyComponents { bound })?;
    Ok(covers
        .into_iter()
        .map(|groups| {
            let mut sh = base.clone();
            for g in groups {
                sh.insert(g);
            }
            SflElement { sh, f: d.f, l: d.l }
        })
        .collect())
}

fn exact_cover(
    fv: VarSet,
    covered: VarSet,
    groups: &[VarSet],
    chosen: &mut Vec<VarSet>,
    out: &mut BTreeSet<BTreeSet<VarSet>>,
    bound: usize,
) -> Result<(), ()> {
    if covered == fv {
        out.insert(chosen.iter().copied().collect());
        if out.len() > bound {
            return Err(());
        }
        return Ok(());
    }
    // Branch on the smallest uncovered free variable.
    let target = fv.diff(covered).iter().next().unwrap();
    for &g in groups {
        let trace = g.inter(fv);
        if trace.contains(target) && !trace.intersects(covered) {
            chosen.push(g);
            exact_cover(fv, covered.union(trace), groups, chosen, out, bound)?;
            chosen.pop();
        }
    }
    Ok(())
}

/// Executes a binding by decomposing on freeness, applying the standard
/// operator per component and joining the results.  Returns the result plus a
/// flag reporting whether the bound forced a fallback to plain `amgu_sfl`.
pub fn amgu_free_split(
    d: &SflElement,
    b: &Binding,
    vi: VarSet,
    bound: usize,
) -> (SflElement, bool) {
    match free_decompose(d, bound) {
        Ok(components) => {
            let result = components
                .iter()
                .map(|c| amgu_sfl(c, b, vi, StarMode::Star))
                .reduce(|a, c| sfl_lub(&a, &c))
                .unwrap_or_else(|| SflElement::bottom(vi));
            (result, false)
        }
        Err(_) => (amgu_sfl(d, b, vi, StarMode::Star), true),
    }
}

/// Result of the compoundness reduction.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Reduced {
    Element(SflElement),
    /// Definite failure: a free variable lost all its sharing groups.
    Bottom,
}

/// Compoundness reduction: when `x` is free and `t` is definitely compound
/// (syntactically, or a variable from the definitely-compound set), a
/// successful occurs-check-respecting unification cannot leave `x` sharing
/// with `vars(t)`, so those groups are removed *before* the binding executes.
/// If this empties the sharing groups of some free variable, the state is
/// inconsistent and `Bottom` is returned.
///
/// The technique relies on the occurs-check; with the flag unset the
/// enhancement is skipped and `d` is returned unchanged.
pub fn compound_reduce(
    d: &SflElement,
    b: &Binding,
    compound: VarSet,
    occurs_check: bool,
) -> Reduced {
    if !occurs_check {
        return Reduced::Element(d.clone());
    }
    let definitely_compound = b.rhs.is_compound()
        || b.rhs.as_var().is_some_and(|v| compound.contains(v));
    if !d.f.contains(b.lhs) || !definitely_compound {
        return Reduced::Element(d.clone());
    }
    let vt = b.rhs_vars();
    let sh: SharingSet = d
        .sh
        .iter()
        .filter(|s| !(s.contains(b.lhs) && s.intersects(vt)))
        .collect();
    let before = d.sh.vars();
    let after = sh.vars();
    let orphaned = d.f.inter(before).diff(after);
    if !orphaned.is_empty() {
        return Reduced::Bottom;
    }
    Reduced::Element(SflElement { sh, f: d.f, l: d.l })
}

/// Threads a minimal definitely-compound variable set through a binding: a
/// variable bound to a non-variable compound term becomes definitely
/// compound.
pub fn track_compound(compound: VarSet, b: &Binding) -> VarSet {
    let mut out = compound;
    if b.rhs.is_compound() {
        out.insert(b.lhs);
    } else if let Some(v) = b.rhs.as_var() {
        // x = y propagates compoundness in both directions.
        if compound.contains(v) {
            out.insert(b.lhs);
        } else if compound.contains(b.lhs) {
            out.insert(v);
        }
    }
    out
}

/// Pairs `(x, y)` forced independent by the Pos component: `φ ⊨ x ∨ y` means
/// at success at least one side is ground.
pub fn pos_independent_pair(phi: &PosFormula, x: Var, y: Var) -> bool {
    crate::groundness_pos::entails_binary_disjunction(phi, x, y)
}
