//! The SFL domain (sharing × freeness × linearity) and its SGFL extension
//! with the ground-or-free mode.
//!
//! The abstract unification operator follows the classical case analysis: the
//! relevant components of the two sides are star-unioned unless freeness or
//! linearity information proves it unnecessary.  Definitely cyclic bindings
//! (`x ∈ vars(t)`) get a refined sharing component instead of being treated
//! as failures, since the analyzed language may omit the occurs-check.
//!
//! Both operators support two closure modes: the exact star-union, and the
//! polynomial self-binary-union used by the pair-sharing-oriented variants.

use crate::kernel_terms::{Binding, Term, VarSet, VarTable};
use crate::set_sharing::{aexists, bin, nrel, rel, sbin, star_union, SharingSet};

/// Which closure replaces `R*` in the amgu: the exact star-union (SH backend)
/// or the self-binary-union (pair-sharing backend).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StarMode {
    Star,
    Sbin,
}

impl StarMode {
    fn close(self, sh: &SharingSet) -> SharingSet {
        match self {
            StarMode::Star => star_union(sh),
            StarMode::Sbin => sbin(sh),
        }
    }
}

/// An element of SFL: sharing groups plus definitely-free and
/// definitely-linear variables.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SflElement {
    pub sh: SharingSet,
    pub f: VarSet,
    pub l: VarSet,
}

/// An element of SGFL: SFL plus the ground-or-free variables.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SgflElement {
    pub sh: SharingSet,
    pub f: VarSet,
    pub gf: VarSet,
    pub l: VarSet,
}

impl SflElement {
    pub fn new(sh: SharingSet, f: VarSet, l: VarSet) -> SflElement {
        SflElement { sh, f, l }
    }

    /// The initial description for distinct fresh variables.
    pub fn top(vi: VarSet) -> SflElement {
        SflElement { sh: SharingSet::all_singletons(vi), f: vi, l: vi }
    }

    /// `⊥ = ⟨∅, VI, VI⟩`.
    pub fn bottom(vi: VarSet) -> SflElement {
        SflElement { sh: SharingSet::new(), f: vi, l: vi }
    }

    /// The SFL approximation order.
    pub fn le(&self, other: &SflElement) -> bool {
        self.sh.is_subset(&other.sh)
            && other.f.is_subset(self.f)
            && other.l.is_subset(self.l)
    }

    /// Textual form `<{groups}, {free}, {linear}>`.
    pub fn to_text(&self, table: &VarTable) -> String {
        format!(
            "<{}, {}, {}>",
            self.sh.to_text(table),
            set_text(self.f, table),
            set_text(self.l, table)
        )
    }

    /// Parses the textual form for test fixtures (single-character names).
    pub fn parse(text: &str, table: &mut VarTable) -> SflElement {
        let parts = split_element(text, 3);
        SflElement {
            sh: SharingSet::parse(&parts[0], table),
            f: parse_set(&parts[1], table),
            l: parse_set(&parts[2], table),
        }
    }
}

impl SgflElement {
    pub fn top(vi: VarSet) -> SgflElement {
        SgflElement { sh: SharingSet::all_singletons(vi), f: vi, gf: vi, l: vi }
    }

    pub fn le(&self, other: &SgflElement) -> bool {
        self.sh.is_subset(&other.sh)
            && other.f.is_subset(self.f)
            && other.gf.is_subset(self.gf)
            && other.l.is_subset(self.l)
    }

    /// The SFL projection (drops `gf`).
    pub fn to_sfl(&self) -> SflElement {
        SflElement { sh: self.sh.clone(), f: self.f, l: self.l }
    }

    /// Textual form `<{groups}, {free}, {gf}, {linear}>`.
    pub fn to_text(&self, table: &VarTable) -> String {
        format!(
            "<{}, {}, {}, {}>",
            self.sh.to_text(table),
            set_text(self.f, table),
            set_text(self.gf, table),
            set_text(self.l, table)
        )
    }

    pub fn parse(text: &str, table: &mut VarTable) -> SgflElement {
        let parts = split_element(text, 4);
        SgflElement {
            sh: SharingSet::parse(&parts[0], table),
            f: parse_set(&parts[1], table),
            gf: parse_set(&parts[2], table),
            l: parse_set(&parts[3], table),
        }
    }
}

fn set_text(s: VarSet, table: &VarTable) -> String {
    let mut names: Vec<&str> = s.iter().map(|v| table.name(v)).collect();
    names.sort_unstable();
    format!("{{{}}}", names.join(","))
}

fn parse_set(text: &str, table: &mut VarTable) -> VarSet {
    let inner = text
        .trim()
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .unwrap_or_else(|| panic!("malformed var set fixture: {text}"));
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| table.intern(s))
        .collect()
}

/// Splits `<{..}, {..}, ...>` into its brace-delimited parts.
fn split_element(text: &str, n: usize) -> Vec<String> {
    let inner = text
        .trim()
        .strip_prefix('<')
        .and_then(|s| s.strip_suffix('>'))
        .unwrap_or_else(|| panic!("malformed element fixture: {text}"));
    let mut parts = Vec::new();
    let mut depth = 0;
    let mut cur = String::new();
    for c in inner.chars() {
        match c {
            '{' => {
                depth += 1;
                cur.push(c);
            }
            '}' => {
                depth -= 1;
                cur.push(c);
            }
            ',' if depth == 0 => {
                parts.push(cur.trim().to_owned());
                cur = String::new();
            }
            _ => cur.push(c),
        }
    }
    parts.push(cur.trim().to_owned());
    assert_eq!(parts.len(), n, "expected {n} components in fixture: {text}");
    parts
}

/// `ind_d(s, t)`: definite independence — no sharing group is relevant to
/// both terms.
pub fn ind(sh: &SharingSet, s: &Term, t: &Term) -> bool {
    let vs = s.vars();
    let vt = t.vars();
    !sh.iter().any(|g| g.intersects(vs) && g.intersects(vt))
}

/// `free_d(t)`: `t` is a variable known to be free.
pub fn free(d: &SflElement, t: &Term) -> bool {
    t.as_var().is_some_and(|v| d.f.contains(v))
}

/// `lin_d(t)`: every variable of `t` is linear, `t`'s variables are pairwise
/// independent, and multiply-occurring variables do not occur in `sh`.
pub fn lin(sh: &SharingSet, l: VarSet, t: &Term) -> bool {
    let (vt, multi) = crate::kernel_terms::term_vars(t);
    if !vt.is_subset(l) {
        return false;
    }
    let sh_vars = sh.vars();
    for (&x, &count) in &multi {
        if count > 1 && sh_vars.contains(x) {
            return false;
        }
    }
    let vars: Vec<_> = vt.iter().collect();
    for (i, &x) in vars.iter().enumerate() {
        for &y in &vars[i + 1..] {
            if !ind(sh, &Term::Var(x), &Term::Var(y)) {
                return false;
            }
        }
    }
    true
}

/// `gfree_d(t)`: `t` is ground (empty relevant component) or a variable known
/// to be ground-or-free.
pub fn gfree(d: &SgflElement, t: &Term) -> bool {
    rel(t.vars(), &d.sh).is_empty() || t.as_var().is_some_and(|v| d.gf.contains(v))
}

/// Enforces the canonical-form conditions `f ⊆ vars(sh)` and
/// `VI \ vars(sh) ⊆ l` (spurious violations are harmless but inexact).
fn canonicalize(sh: &SharingSet, f: &mut VarSet, l: &mut VarSet, vi: VarSet) {
    let sv = sh.vars();
    *f = f.inter(sv);
    *l = l.union(vi.diff(sv));
}

/// The components of the Def-style case analysis shared by SFL and SGFL.
struct AmguParts {
    nrel_xt: SharingSet,
    r_x: SharingSet,
    r_t: SharingSet,
    s_x: SharingSet,
    /// `S_t` for acyclic bindings, `CS_t` for cyclic ones.
    s_t: SharingSet,
}

/// Computes the sharing-side case analysis.  `guard_x`/`guard_t` are the
/// freeness-like predicates applied to `x` and `t` (freeness for SFL,
/// ground-or-free for SGFL).
fn amgu_parts(
    sh: &SharingSet,
    l: VarSet,
    b: &Binding,
    guard_x: bool,
    guard_t: bool,
    mode: StarMode,
) -> AmguParts {
    let x_term = Term::Var(b.lhs);
    let r_x = rel(b.lhs_vars(), sh);
    let r_t = rel(b.rhs_vars(), sh);
    let independent = ind(sh, &x_term, &b.rhs);
    if b.is_cyclic() {
        // Refined sharing component for definitely cyclic bindings.  Here
        // guard_t is automatically false and ind(x,t) iff R_x = ∅.
        let s_x = if guard_x || (lin(sh, l, &b.rhs) && independent) {
            r_x.clone()
        } else {
            mode.close(&r_x)
        };
        let cr_t = rel(b.rhs_vars().diff(b.lhs_vars()), sh);
        let cs_t = if guard_x { cr_t } else { mode.close(&cr_t) };
        return AmguParts { nrel_xt: nrel(b.all_vars(), sh), r_x, r_t, s_x, s_t: cs_t };
    }
    let s_x = if guard_x || guard_t || (lin(sh, l, &b.rhs) && independent) {
        r_x.clone()
    } else {
        mode.close(&r_x)
    };
    let s_t = if guard_x || guard_t || (lin(sh, l, &x_term) && independent) {
        r_t.clone()
    } else {
        mode.close(&r_t)
    };
    AmguParts { nrel_xt: nrel(b.all_vars(), sh), r_x, r_t, s_x, s_t }
}

/// The freeness-style four-way case analysis shared by `f'` and `gf''`.
fn narrow_free_set(set: VarSet, on_x: bool, on_t: bool, r_x: &SharingSet, r_t: &SharingSet) -> VarSet {
    match (on_x, on_t) {
        (true, true) => set,
        (true, false) => set.diff(r_x.vars()),
        (false, true) => set.diff(r_t.vars()),
        (false, false) => set.diff(r_x.vars().union(r_t.vars())),
    }
}

/// `l''`: the linearity case analysis of Def-style amgu.
fn narrow_linear_set(l: VarSet, lin_x: bool, lin_t: bool, r_x: &SharingSet, r_t: &SharingSet) -> VarSet {
    match (lin_x, lin_t) {
        (true, true) => l.diff(r_x.vars().inter(r_t.vars())),
        (true, false) => l.diff(r_x.vars()),
        (false, true) => l.diff(r_t.vars()),
        (false, false) => l.diff(r_x.vars().union(r_t.vars())),
    }
}

/// Abstract unification on SFL.
pub fn amgu_sfl(d: &SflElement, b: &Binding, vi: VarSet, mode: StarMode) -> SflElement {
    let x_term = Term::Var(b.lhs);
    let free_x = free(d, &x_term);
    let free_t = free(d, &b.rhs);
    let parts = amgu_parts(&d.sh, d.l, b, free_x, free_t, mode);
    let sh2 = parts.nrel_xt.union(&bin(&parts.s_x, &parts.s_t));
    let mut f2 = narrow_free_set(d.f, free_x, free_t, &parts.r_x, &parts.r_t);
    let lin_x = lin(&d.sh, d.l, &x_term);
    let lin_t = lin(&d.sh, d.l, &b.rhs);
    let l_narrow = narrow_linear_set(d.l, lin_x, lin_t, &parts.r_x, &parts.r_t);
    let mut l2 = vi.diff(sh2.vars()).union(f2).union(l_narrow);
    canonicalize(&sh2, &mut f2, &mut l2, vi);
    SflElement { sh: sh2, f: f2, l: l2 }
}

/// Abstract unification on SGFL: ground-or-free takes the role of freeness in
/// the sharing component, and `gf'` feeds the new linearity set.
pub fn amgu_sgfl(d: &SgflElement, b: &Binding, vi: VarSet, mode: StarMode) -> SgflElement {
    let x_term = Term::Var(b.lhs);
    let gfree_x = gfree(d, &x_term);
    let gfree_t = gfree(d, &b.rhs);
    let parts = amgu_parts(&d.sh, d.l, b, gfree_x, gfree_t, mode);
    let sh2 = parts.nrel_xt.union(&bin(&parts.s_x, &parts.s_t));
    // f' and l'' exactly as on SFL (freeness-based, not gfree-based).
    let sfl_view = d.to_sfl();
    let free_x = free(&sfl_view, &x_term);
    let free_t = free(&sfl_view, &b.rhs);
    let mut f2 = narrow_free_set(d.f, free_x, free_t, &parts.r_x, &parts.r_t);
    let gf_narrow = narrow_free_set(d.gf, gfree_x, gfree_t, &parts.r_x, &parts.r_t);
    let gf2 = vi.diff(sh2.vars()).union(gf_narrow);
    let lin_x = lin(&d.sh, d.l, &x_term);
    let lin_t = lin(&d.sh, d.l, &b.rhs);
    let l_narrow = narrow_linear_set(d.l, lin_x, lin_t, &parts.r_x, &parts.r_t);
    let mut l2 = gf2.union(l_narrow);
    canonicalize(&sh2, &mut f2, &mut l2, vi);
    SgflElement { sh: sh2, f: f2, gf: gf2, l: l2 }
}

/// Abstract existential quantification on SFL: forget `V`.
pub fn aexists_sfl(d: &SflElement, v: VarSet) -> SflElement {
    SflElement { sh: aexists(&d.sh, v), f: d.f.union(v), l: d.l.union(v) }
}

pub fn aexists_sgfl(d: &SgflElement, v: VarSet) -> SgflElement {
    SgflElement { sh: aexists(&d.sh, v), f: d.f.union(v), gf: d.gf.union(v), l: d.l.union(v) }
}

/// Least upper bound on SFL: union on sharing, intersection on the
/// definite-mode sets.
pub fn sfl_lub(d1: &SflElement, d2: &SflElement) -> SflElement {
    SflElement { sh: d1.sh.union(&d2.sh), f: d1.f.inter(d2.f), l: d1.l.inter(d2.l) }
}

/// Least upper bound on SGFL, componentwise like SFL.
pub fn sgfl_lub(d1: &SgflElement, d2: &SgflElement) -> SgflElement {
    SgflElement {
        sh: d1.sh.union(&d2.sh),
        f: d1.f.inter(d2.f),
        gf: d1.gf.inter(d2.gf),
        l: d1.l.inter(d2.l),
    }
}
