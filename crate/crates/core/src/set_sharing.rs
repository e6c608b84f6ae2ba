//! The set-sharing domain SH: sets of sharing groups over the variables of
//! interest, with the abstract unification operator, its polynomial
//! pair-sharing variant, and equivalence modulo the redundancy closure ρ.
//!
//! A *sharing group* is a non-empty set of variables that may be bound to
//! terms sharing a common variable.  `amgu_sh` is the classical exponential
//! operator built from star-unions; `amgu_psd` replaces star-unions with
//! self-binary-unions and agrees with `amgu_sh` up to ρ, which is exactly the
//! pair-sharing (and groundness) observable.

use crate::kernel_terms::{Binding, VarSet, VarTable};
use std::collections::BTreeSet;
use std::fmt;

/// An element of SH: a set of non-empty sharing groups.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct SharingSet {
    groups: BTreeSet<VarSet>,
}

impl SharingSet {
    pub fn new() -> SharingSet {
        SharingSet::default()
    }

    pub fn from_groups<I: IntoIterator<Item = VarSet>>(groups: I) -> SharingSet {
        let mut sh = SharingSet::new();
        for g in groups {
            sh.insert(g);
        }
        sh
    }

    /// The initial description for `n` distinct fresh variables: all
    /// singletons.
    pub fn all_singletons(vi: VarSet) -> SharingSet {
        SharingSet::from_groups(vi.iter().map(VarSet::singleton))
    }

    pub fn insert(&mut self, group: VarSet) {
        debug_assert!(!group.is_empty(), "sharing groups are non-empty");
        self.groups.insert(group);
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn contains(&self, group: VarSet) -> bool {
        self.groups.contains(&group)
    }

    pub fn iter(&self) -> impl Iterator<Item = VarSet> + '_ {
        self.groups.iter().copied()
    }

    /// `vars(sh)`: the union of all groups.
    pub fn vars(&self) -> VarSet {
        self.iter().fold(VarSet::EMPTY, VarSet::union)
    }

    pub fn union(&self, other: &SharingSet) -> SharingSet {
        SharingSet { groups: self.groups.union(&other.groups).copied().collect() }
    }

    pub fn is_subset(&self, other: &SharingSet) -> bool {
        self.groups.is_subset(&other.groups)
    }

    /// Textual form: groups as concatenated variable names, e.g. `{vwxy, xy}`.
    pub fn to_text(&self, table: &VarTable) -> String {
        let mut names: Vec<String> = self
            .iter()
            .map(|g| {
                let mut vs: Vec<&str> = g.iter().map(|v| table.name(v)).collect();
                vs.sort_unstable();
                vs.concat()
            })
            .collect();
        names.sort_unstable();
        format!("{{{}}}", names.join(", "))
    }

    /// Parses the textual form for test fixtures, e.g. `{vy, wy, xy, yz}`.
    /// Variable names must be single characters present in `table`.
    pub fn parse(text: &str, table: &mut VarTable) -> SharingSet {
        let inner = text
            .trim()
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .unwrap_or_else(|| panic!("malformed sharing set fixture: {text}"));
        let mut sh = SharingSet::new();
        for group in inner.split(',') {
            let group = group.trim();
            if group.is_empty() {
                continue;
            }
            sh.insert(group.chars().map(|c| table.intern(&c.to_string())).collect());
        }
        sh
    }
}

impl FromIterator<VarSet> for SharingSet {
    fn from_iter<I: IntoIterator<Item = VarSet>>(iter: I) -> SharingSet {
        SharingSet::from_groups(iter)
    }
}

impl fmt::Debug for SharingSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// `rel(V, sh)`: the groups relevant to `V`.
pub fn rel(v: VarSet, sh: &SharingSet) -> SharingSet {
    sh.iter().filter(|g| g.intersects(v)).collect()
}

/// `nrel(V, sh) = sh \ rel(V, sh)`.
pub fn nrel(v: VarSet, sh: &SharingSet) -> SharingSet {
    sh.iter().filter(|g| !g.intersects(v)).collect()
}

/// `sh*`: closure under non-empty unions of groups (star-union).
pub fn star_union(sh: &SharingSet) -> SharingSet {
    let mut result: BTreeSet<VarSet> = sh.iter().collect();
    let mut frontier: Vec<VarSet> = result.iter().copied().collect();
    while let Some(g) = frontier.pop() {
        let unions: Vec<VarSet> = result
            .iter()
            .map(|&h| g.union(h))
            .filter(|u| !result.contains(u))
            .collect();
        for u in unions {
            result.insert(u);
            frontier.push(u);
        }
    }
    SharingSet { groups: result }
}

/// `bin(sh1, sh2)`: pairwise unions of one group from each side.
pub fn bin(sh1: &SharingSet, sh2: &SharingSet) -> SharingSet {
    let mut out = SharingSet::new();
    for g1 in sh1.iter() {
        for g2 in sh2.iter() {
            out.insert(g1.union(g2));
        }
    }
    out
}

/// `sbin(sh) = bin(sh, sh)`: self-binary-union, the polynomial replacement
/// for the star-union.
pub fn sbin(sh: &SharingSet) -> SharingSet {
    bin(sh, sh)
}

/// Abstract existential quantification: forget everything about `V`, keeping
/// each variable of `V` as an unconstrained singleton.
pub fn aexists(sh: &SharingSet, v: VarSet) -> SharingSet {
    let mut out: SharingSet = sh
        .iter()
        .map(|g| g.diff(v))
        .filter(|g| !g.is_empty())
        .collect();
    for x in v.iter() {
        out.insert(VarSet::singleton(x));
    }
    out
}

/// The abstract unification of Eq (1):
/// `amgu(sh, x=t) = nrel(V_xt, sh) ∪ bin(rel(V_x, sh)*, rel(V_t, sh)*)`.
pub fn amgu_sh(sh: &SharingSet, b: &Binding) -> SharingSet {
    let vx = b.lhs_vars();
    let vt = b.rhs_vars();
    let starred = bin(&star_union(&rel(vx, sh)), &star_union(&rel(vt, sh)));
    nrel(vx.union(vt), sh).union(&starred)
}

/// The Eq (2) variant: star-unions replaced by self-binary-unions.  The result
/// is ρ-equivalent to [`amgu_sh`] on the same input.
pub fn amgu_psd(sh: &SharingSet, b: &Binding) -> SharingSet {
    let vx = b.lhs_vars();
    let vt = b.rhs_vars();
    let binned = bin(&sbin(&rel(vx, sh)), &sbin(&rel(vt, sh)));
    nrel(vx.union(vt), sh).union(&binned)
}

/// Evidence that a group is ρ-redundant: the covering groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RhoWitness {
    pub group: VarSet,
    pub covered_by: Vec<VarSet>,
}

/// True iff `group` belongs to the ρ-closure of `sh`: every pair of its
/// variables (including single variables) lies inside some `T ∈ sh` with
/// `T ⊆ group`.
pub fn rho_member(group: VarSet, sh: &SharingSet) -> bool {
    pair_cover(group, sh.iter().filter(|t| t.is_subset(group)))
}

fn pair_cover(group: VarSet, cover: impl Iterator<Item = VarSet>) -> bool {
    let cover: Vec<VarSet> = cover.collect();
    let vars: Vec<_> = group.iter().collect();
    for (i, &x) in vars.iter().enumerate() {
        for &y in &vars[i..] {
            let pair = VarSet::singleton(x).with(y);
            if !cover.iter().any(|t| pair.is_subset(*t)) {
                return false;
            }
        }
    }
    true
}

/// When `group` is ρ-redundant for `sh` (covered by *other* groups of `sh`),
/// returns the witness.
pub fn rho_witness(group: VarSet, sh: &SharingSet) -> Option<RhoWitness> {
    let covered_by: Vec<VarSet> = sh
        .iter()
        .filter(|&t| t != group && t.is_subset(group))
        .collect();
    if pair_cover(group, covered_by.iter().copied()) {
        Some(RhoWitness { group, covered_by })
    } else {
        None
    }
}

/// `sh1 =_ρ sh2`: the ρ-closures coincide.  Because ρ is a closure operator,
/// this holds iff each side is contained in the closure of the other.
pub fn rho_eq(sh1: &SharingSet, sh2: &SharingSet) -> bool {
    sh1.iter().all(|g| rho_member(g, sh2)) && sh2.iter().all(|g| rho_member(g, sh1))
}

/// Removes every ρ-redundant group (opt-in normalization; most operations keep
/// the full representation because some enhancements are unsound on reduced
/// elements).
pub fn rho_reduce(sh: &SharingSet) -> SharingSet {
    sh.iter().filter(|&g| rho_witness(g, sh).is_none()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel_terms::{Term, VarTable};

    fn table(names: &str) -> VarTable {
        let mut t = VarTable::new();
        for c in names.chars() {
            t.intern(&c.to_string());
        }
        t
    }

    fn sh(t: &mut VarTable, s: &str) -> SharingSet {
        SharingSet::parse(s, t)
    }

    fn bind_var(t: &mut VarTable, x: &str, y: &str) -> Binding {
        let xv = t.intern(x);
        let yv = t.intern(y);
        Binding::new(xv, Term::Var(yv))
    }

    #[test]
    fn rel_and_nrel() {
        let mut t = table("vwxyz");
        let s = sh(&mut t, "{vy, wy, xy, yz}");
        let x = t.intern("x");
        assert_eq!(rel(VarSet::singleton(x), &s), sh(&mut t, "{xy}"));
        assert_eq!(rel(VarSet::EMPTY, &s), SharingSet::new());
        let all: VarSet = "xvwyz".chars().map(|c| t.intern(&c.to_string())).collect();
        assert_eq!(nrel(all, &s), SharingSet::new());
    }

    #[test]
    fn star_bin_sbin() {
        let mut t = table("xy");
        assert_eq!(star_union(&sh(&mut t, "{x, y}")), sh(&mut t, "{x, y, xy}"));
        assert_eq!(bin(&sh(&mut t, "{x}"), &sh(&mut t, "{y}")), sh(&mut t, "{xy}"));
        assert_eq!(star_union(&SharingSet::new()), SharingSet::new());
        assert_eq!(bin(&sh(&mut t, "{x, y}"), &SharingSet::new()), SharingSet::new());
        assert_eq!(sbin(&sh(&mut t, "{x, y}")), sh(&mut t, "{x, y, xy}"));
    }

    #[test]
    fn aexists_examples() {
        let mut t = table("xyz");
        let y = t.intern("y");
        assert_eq!(
            aexists(&sh(&mut t, "{xy, z}"), VarSet::singleton(y)),
            sh(&mut t, "{x, y, z}")
        );
        let s = sh(&mut t, "{xy, z}");
        assert_eq!(aexists(&s, VarSet::EMPTY), s);
        let x = t.intern("x");
        assert_eq!(
            aexists(&sh(&mut t, "{x}"), VarSet::singleton(x)),
            sh(&mut t, "{x}")
        );
    }

    #[test]
    fn amgu_sh_basic() {
        // sh = {x, y, z}, x = f(y)  →  {xy, z}
        let mut t = table("xyz");
        let s = sh(&mut t, "{x, y, z}");
        let x = t.intern("x");
        let y = t.intern("y");
        let b = Binding::new(x, Term::Comp("f".into(), vec![Term::Var(y)]));
        assert_eq!(amgu_sh(&s, &b), sh(&mut t, "{xy, z}"));
        assert_eq!(amgu_psd(&s, &b), sh(&mut t, "{xy, z}"));
    }

    #[test]
    fn amgu_sh_irrelevant_binding() {
        let mut t = table("xyz");
        let s = sh(&mut t, "{z}");
        let b = bind_var(&mut t, "x", "y");
        assert_eq!(amgu_sh(&s, &b), s);
    }

    #[test]
    fn amgu_sh_star_side() {
        // sh = {vw, wx, wy, z}, binding x = z: {wx} ∪ {z} = wxz appears.
        let mut t = table("vwxyz");
        let s = sh(&mut t, "{vw, wx, wy, z}");
        let b = bind_var(&mut t, "x", "z");
        let out = amgu_sh(&s, &b);
        let wxz: VarSet = ["w", "x", "z"].iter().map(|n| t.intern(n)).collect();
        assert!(out.contains(wxz));
        // Full expected set from Eq (1): rel_x = {wx}, rel_t = {z}; both stars
        // are trivial, so the result is nrel ∪ bin = {vw, wy, wxz}.
        assert_eq!(out, sh(&mut t, "{vw, wy, wxz}"));
    }

    #[test]
    fn amgu_idempotent_per_binding() {
        let mut t = table("vwxyz");
        let s = sh(&mut t, "{vw, wx, wy, z}");
        let b = bind_var(&mut t, "x", "z");
        let once = amgu_sh(&s, &b);
        assert_eq!(amgu_sh(&once, &b), once);
    }

    #[test]
    fn rho_equivalence_examples() {
        let mut t = table("xyz");
        let full = sh(&mut t, "{xy, xz, yz, xyz}");
        let red = sh(&mut t, "{xy, xz, yz}");
        assert!(rho_eq(&full, &red));
        assert!(rho_eq(&full, &full));
        assert!(!rho_eq(&sh(&mut t, "{xy}"), &sh(&mut t, "{xz}")));
    }

    #[test]
    fn rho_reduce_and_witness() {
        let mut t = table("xyz");
        let full = sh(&mut t, "{xy, xz, yz, xyz}");
        assert_eq!(rho_reduce(&full), sh(&mut t, "{xy, xz, yz}"));
        let xyz: VarSet = "xyz".chars().map(|c| t.intern(&c.to_string())).collect();
        let w = rho_witness(xyz, &full).expect("xyz is redundant");
        assert_eq!(w.covered_by.len(), 3);
        // A singleton sharing set has no redundancy.
        let single = sh(&mut t, "{xy}");
        let xy: VarSet = "xy".chars().map(|c| t.intern(&c.to_string())).collect();
        assert!(rho_witness(xy, &single).is_none());
    }

    #[test]
    fn psd_equals_sh_on_small_relevant_components() {
        // With ≤1 relevant group on each side, star and sbin coincide.
        let mut t = table("wxyz");
        let s = sh(&mut t, "{wx, y, z}");
        let b = bind_var(&mut t, "x", "y");
        assert_eq!(amgu_psd(&s, &b), amgu_sh(&s, &b));
    }

    #[test]
    fn textual_round_trip() {
        let mut t = table("vwxy");
        let s = sh(&mut t, "{vwxy, xy}");
        assert_eq!(s.to_text(&t), "{vwxy, xy}");
    }
}
