//! The analysis driver: builds a weak topological ordering of the call
//! graph and iterates abstract clause evaluation to a least fixpoint,
//! computing success patterns (and, goal-dependently, call patterns) for
//! every predicate under the configured domain and enhancements.

use crate::enhancements::{
    amgu_free_split, amgu_klin, apply_groundness, compound_reduce, order_bindings, reduce_product,
    track_compound, CombinedElement, OrderingStrategy, Reduced, DEFAULT_COMPONENT_BOUND,
};
use crate::groundness_pos::{pos_amgu, pos_lub, pos_project, PosFormula, DEFAULT_MODEL_BOUND};
use crate::kernel_terms::{
    Binding, BodyItem, NormalClause, Program, Term, Var, VarSet, MAX_VARS,
};
use crate::mode_domains::{
    amgu_sfl, amgu_sgfl, sfl_lub, sgfl_lub, SflElement, SgflElement, StarMode,
};
use crate::set_sharing::{amgu_psd, amgu_sh, nrel, rel, rho_reduce, sbin, star_union, SharingSet};
use std::time::{Duration, Instant};

/// The analysis domains exposed by the harness.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DomainId {
    /// Plain set-sharing.
    Sh,
    /// Set-sharing for pair-sharing: `sbin` closure plus ρ-reduction.
    Psd,
    /// Sharing × freeness × linearity.
    Sfl,
    /// SFL over the pair-sharing closure.
    Sfl2,
    /// Sharing × freeness × ground-or-freeness × linearity, pair-sharing.
    Sgfl2,
    /// Pos groundness alone.
    Pos,
    /// Pos combined with SFL2 via groundness propagation.
    PosXSfl2,
    /// Pos combined with full SFL via the model-based reduce.
    PosRedSfl,
}

impl DomainId {
    pub fn parse(s: &str) -> Option<DomainId> {
        Some(match s {
            "sh" => DomainId::Sh,
            "psd" => DomainId::Psd,
            "sfl" => DomainId::Sfl,
            "sfl2" => DomainId::Sfl2,
            "sgfl2" => DomainId::Sgfl2,
            "pos" => DomainId::Pos,
            "pos_x_sfl2" => DomainId::PosXSfl2,
            "pos_red_sfl" => DomainId::PosRedSfl,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            DomainId::Sh => "sh",
            DomainId::Psd => "psd",
            DomainId::Sfl => "sfl",
            DomainId::Sfl2 => "sfl2",
            DomainId::Sgfl2 => "sgfl2",
            DomainId::Pos => "pos",
            DomainId::PosXSfl2 => "pos_x_sfl2",
            DomainId::PosRedSfl => "pos_red_sfl",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AnalysisMode {
    GoalIndependent,
    GoalDependent,
}

/// Full analysis configuration.
#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub domain: DomainId,
    pub mode: AnalysisMode,
    pub strategy: OrderingStrategy,
    /// ρ-reduced representation backend.
    pub psd_backend: bool,
    pub klin: bool,
    pub free_split: bool,
    pub compound_reduce: bool,
    pub occurs_check: bool,
    pub timeout: Duration,
}

impl EngineConfig {
    pub fn new(domain: DomainId, mode: AnalysisMode) -> EngineConfig {
        EngineConfig {
            domain,
            mode,
            strategy: OrderingStrategy::Textual,
            psd_backend: false,
            klin: false,
            free_split: false,
            compound_reduce: false,
            occurs_check: false,
            timeout: Duration::from_secs(600),
        }
    }

    fn star_mode(&self) -> StarMode {
        if self.psd_backend {
            return StarMode::Sbin;
        }
        match self.domain {
            DomainId::Psd | DomainId::Sfl2 | DomainId::Sgfl2 | DomainId::PosXSfl2 => StarMode::Sbin,
            _ => StarMode::Star,
        }
    }

    fn reduce_sh(&self) -> bool {
        self.psd_backend || self.domain == DomainId::Psd
    }
}

/// One abstract description, tagged by domain family.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum AbsElem {
    Sh(SharingSet),
    Sfl(SflElement),
    Sgfl(SgflElement),
    Pos(PosFormula),
    Combined(CombinedElement),
}

impl AbsElem {
    /// The sharing component, when the domain has one.
    pub fn sharing(&self) -> Option<&SharingSet> {
        match self {
            AbsElem::Sh(sh) => Some(sh),
            AbsElem::Sfl(d) => Some(&d.sh),
            AbsElem::Sgfl(d) => Some(&d.sh),
            AbsElem::Pos(_) => None,
            AbsElem::Combined(c) => Some(&c.d.sh),
        }
    }

    pub fn freeness(&self) -> Option<VarSet> {
        match self {
            AbsElem::Sfl(d) => Some(d.f),
            AbsElem::Sgfl(d) => Some(d.f),
            AbsElem::Combined(c) => Some(c.d.f),
            _ => None,
        }
    }

    pub fn linearity(&self) -> Option<VarSet> {
        match self {
            AbsElem::Sfl(d) => Some(d.l),
            AbsElem::Sgfl(d) => Some(d.l),
            AbsElem::Combined(c) => Some(c.d.l),
            _ => None,
        }
    }

    pub fn ground_or_free(&self) -> Option<VarSet> {
        match self {
            AbsElem::Sgfl(d) => Some(d.gf),
            _ => None,
        }
    }

    pub fn pos(&self) -> Option<&PosFormula> {
        match self {
            AbsElem::Pos(phi) => Some(phi),
            AbsElem::Combined(c) => Some(&c.phi),
            _ => None,
        }
    }

    /// A freeness/linearity view used by the ordering heuristics.
    fn sfl_view(&self) -> Option<SflElement> {
        match self {
            AbsElem::Sfl(d) => Some(d.clone()),
            AbsElem::Sgfl(d) => Some(d.to_sfl()),
            AbsElem::Combined(c) => Some(c.d.clone()),
            AbsElem::Sh(sh) => Some(SflElement::new(sh.clone(), VarSet::EMPTY, VarSet::EMPTY)),
            AbsElem::Pos(_) => None,
        }
    }
}

/// The most general description of distinct fresh variables.
pub fn top_element(domain: DomainId, vi: VarSet) -> AbsElem {
    match domain {
        DomainId::Sh | DomainId::Psd => AbsElem::Sh(SharingSet::all_singletons(vi)),
        DomainId::Sfl | DomainId::Sfl2 => AbsElem::Sfl(SflElement::top(vi)),
        DomainId::Sgfl2 => AbsElem::Sgfl(SgflElement::top(vi)),
        DomainId::Pos => AbsElem::Pos(PosFormula::tt()),
        DomainId::PosXSfl2 | DomainId::PosRedSfl => AbsElem::Combined(CombinedElement {
            phi: PosFormula::tt(),
            d: SflElement::top(vi),
        }),
    }
}

fn lub(a: &AbsElem, b: &AbsElem) -> AbsElem {
    match (a, b) {
        (AbsElem::Sh(x), AbsElem::Sh(y)) => AbsElem::Sh(x.union(y)),
        (AbsElem::Sfl(x), AbsElem::Sfl(y)) => AbsElem::Sfl(sfl_lub(x, y)),
        (AbsElem::Sgfl(x), AbsElem::Sgfl(y)) => AbsElem::Sgfl(sgfl_lub(x, y)),
        (AbsElem::Pos(x), AbsElem::Pos(y)) => AbsElem::Pos(pos_lub(x, y)),
        (AbsElem::Combined(x), AbsElem::Combined(y)) => AbsElem::Combined(CombinedElement {
            phi: pos_lub(&x.phi, &y.phi),
            d: sfl_lub(&x.d, &y.d),
        }),
        _ => unreachable!("lub across domains"),
    }
}

fn remap_varset(vs: VarSet, map: &[(Var, Var)]) -> VarSet {
    map.iter()
        .filter(|(from, _)| vs.contains(*from))
        .map(|(_, to)| *to)
        .collect()
}

fn remap_sh(sh: &SharingSet, map: &[(Var, Var)]) -> SharingSet {
    sh.iter()
        .map(|g| remap_varset(g, map))
        .filter(|g| !g.is_empty())
        .collect()
}

/// Renames an element along strictly monotonic `(from, to)` pairs; variables
/// outside the map are dropped from the sets (callers project first).
fn rename(elem: &AbsElem, map: &[(Var, Var)]) -> AbsElem {
    match elem {
        AbsElem::Sh(sh) => AbsElem::Sh(remap_sh(sh, map)),
        AbsElem::Sfl(d) => AbsElem::Sfl(SflElement {
            sh: remap_sh(&d.sh, map),
            f: remap_varset(d.f, map),
            l: remap_varset(d.l, map),
        }),
        AbsElem::Sgfl(d) => AbsElem::Sgfl(SgflElement {
            sh: remap_sh(&d.sh, map),
            f: remap_varset(d.f, map),
            gf: remap_varset(d.gf, map),
            l: remap_varset(d.l, map),
        }),
        AbsElem::Pos(phi) => AbsElem::Pos(phi.rename_monotonic(map)),
        AbsElem::Combined(c) => AbsElem::Combined(CombinedElement {
            phi: c.phi.rename_monotonic(map),
            d: SflElement {
                sh: remap_sh(&c.d.sh, map),
                f: remap_varset(c.d.f, map),
                l: remap_varset(c.d.l, map),
            },
        }),
    }
}

fn project_sh(sh: &SharingSet, remove: VarSet) -> SharingSet {
    sh.iter()
        .map(|g| g.diff(remove))
        .filter(|g| !g.is_empty())
        .collect()
}

/// Projects `remove` out of the element (existential quantification).
fn project_out(elem: &AbsElem, remove: VarSet) -> AbsElem {
    match elem {
        AbsElem::Sh(sh) => AbsElem::Sh(project_sh(sh, remove)),
        AbsElem::Sfl(d) => AbsElem::Sfl(SflElement {
            sh: project_sh(&d.sh, remove),
            f: d.f.diff(remove),
            l: d.l.diff(remove),
        }),
        AbsElem::Sgfl(d) => AbsElem::Sgfl(SgflElement {
            sh: project_sh(&d.sh, remove),
            f: d.f.diff(remove),
            gf: d.gf.diff(remove),
            l: d.l.diff(remove),
        }),
        AbsElem::Pos(phi) => AbsElem::Pos(pos_project(phi, remove)),
        AbsElem::Combined(c) => AbsElem::Combined(CombinedElement {
            phi: pos_project(&c.phi, remove),
            d: SflElement {
                sh: project_sh(&c.d.sh, remove),
                f: c.d.f.diff(remove),
                l: c.d.l.diff(remove),
            },
        }),
    }
}

/// Conjoins two descriptions over disjoint variable supports.
fn extend(a: &AbsElem, b: &AbsElem) -> AbsElem {
    match (a, b) {
        (AbsElem::Sh(x), AbsElem::Sh(y)) => AbsElem::Sh(x.union(y)),
        (AbsElem::Sfl(x), AbsElem::Sfl(y)) => AbsElem::Sfl(SflElement {
            sh: x.sh.union(&y.sh),
            f: x.f.union(y.f),
            l: x.l.union(y.l),
        }),
        (AbsElem::Sgfl(x), AbsElem::Sgfl(y)) => AbsElem::Sgfl(SgflElement {
            sh: x.sh.union(&y.sh),
            f: x.f.union(y.f),
            gf: x.gf.union(y.gf),
            l: x.l.union(y.l),
        }),
        (AbsElem::Pos(x), AbsElem::Pos(y)) => AbsElem::Pos(x.and(y)),
        (AbsElem::Combined(x), AbsElem::Combined(y)) => AbsElem::Combined(CombinedElement {
            phi: x.phi.and(&y.phi),
            d: SflElement {
                sh: x.d.sh.union(&y.d.sh),
                f: x.d.f.union(y.d.f),
                l: x.d.l.union(y.d.l),
            },
        }),
        _ => unreachable!("extend across domains"),
    }
}

/// A weak topological ordering of the dependency graph: vertices and nested
/// components, each component headed by its entry vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WtoNode {
    Vertex(usize),
    Component(Box<WtoComponent>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WtoComponent {
    pub head: usize,
    pub body: Vec<WtoNode>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Wto(pub Vec<WtoNode>);

impl Wto {
    /// Flat listing: vertices in iteration order, component members grouped.
    pub fn flatten(&self) -> Vec<usize> {
        fn walk(nodes: &[WtoNode], out: &mut Vec<usize>) {
            for n in nodes {
                match n {
                    WtoNode::Vertex(v) => out.push(*v),
                    WtoNode::Component(c) => {
                        out.push(c.head);
                        walk(&c.body, out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.0, &mut out);
        out
    }
}

struct WtoBuilder<'a> {
    succ: &'a [Vec<usize>],
    dfn: Vec<u32>,
    num: u32,
    stack: Vec<usize>,
}

impl WtoBuilder<'_> {
    fn visit(&mut self, v: usize, partition: &mut Vec<WtoNode>) -> u32 {
        self.stack.push(v);
        self.num += 1;
        self.dfn[v] = self.num;
        let mut head = self.dfn[v];
        let mut in_loop = false;
        for i in 0..self.succ[v].len() {
            let w = self.succ[v][i];
            let min = if self.dfn[w] == 0 { self.visit(w, partition) } else { self.dfn[w] };
            if min <= head {
                head = min;
                in_loop = true;
            }
        }
        if head == self.dfn[v] {
            self.dfn[v] = u32::MAX;
            let mut element = self.stack.pop().unwrap();
            if in_loop {
                while element != v {
                    self.dfn[element] = 0;
                    element = self.stack.pop().unwrap();
                }
                let node = self.component(v);
                partition.insert(0, node);
            } else {
                partition.insert(0, WtoNode::Vertex(v));
            }
        }
        head
    }

    fn component(&mut self, v: usize) -> WtoNode {
        let mut body = Vec::new();
        for i in 0..self.succ[v].len() {
            let w = self.succ[v][i];
            if self.dfn[w] == 0 {
                self.visit(w, &mut body);
            }
        }
        WtoNode::Component(Box::new(WtoComponent { head: v, body }))
    }
}

/// Bourdoncle's weak topological ordering over the *dependency* graph
/// (edges callee → caller), so callees precede their callers and recursive
/// groups become nested components.
pub fn weak_topological_order(program: &Program) -> Wto {
    let n = program.preds.len();
    // dependency edge: callee → caller
    let mut succ = vec![Vec::new(); n];
    for (caller, pred) in program.preds.iter().enumerate() {
        for clause in &pred.clauses {
            for item in &clause.body {
                if let BodyItem::Call { name, arity, .. } = item {
                    if let Some(callee) = program.lookup(name, *arity) {
                        if !succ[callee].contains(&caller) {
                            succ[callee].push(caller);
                        }
                    }
                }
            }
        }
    }
    let mut builder = WtoBuilder { succ: &succ, dfn: vec![0; n], num: 0, stack: Vec::new() };
    let mut partition = Vec::new();
    for v in 0..n {
        if builder.dfn[v] == 0 {
            builder.visit(v, &mut partition);
        }
    }
    Wto(partition)
}

/// Per-predicate outcome: patterns over the canonical head variables
/// `X1..Xn` (internally `Var(0)..Var(n-1)`).  `None` means the predicate was
/// never reached (goal-dependent) or definitely fails.
#[derive(Clone, Debug)]
pub struct PredResult {
    pub name: String,
    pub arity: usize,
    pub success: Option<AbsElem>,
    pub call: Option<AbsElem>,
}

#[derive(Clone, Debug, Default)]
pub struct AnalysisResult {
    pub preds: Vec<PredResult>,
    pub timed_out: bool,
    pub warnings: Vec<String>,
}

/// Goals executed directly by the engine rather than looked up.
fn grounding_builtin(name: &str, arity: usize) -> bool {
    arity == 2 && matches!(name, "is" | "<" | ">" | "=<" | ">=" | "=:=" | "=\\=")
}

fn noop_builtin(name: &str, arity: usize) -> bool {
    arity == 0 && matches!(name, "true" | "!" | "fail" | "nl" | "halt")
        || (arity == 1 && matches!(name, "write" | "print" | "var" | "nonvar" | "atom"))
}

struct Analyzer<'p> {
    program: &'p Program,
    cfg: EngineConfig,
    success: Vec<Option<AbsElem>>,
    call: Vec<Option<AbsElem>>,
    deadline: Instant,
    timed_out: bool,
    changed: bool,
    warnings: Vec<String>,
}

impl Analyzer<'_> {
    fn out_of_time(&mut self) -> bool {
        if Instant::now() >= self.deadline {
            self.timed_out = true;
        }
        self.timed_out
    }

    fn warn(&mut self, msg: String) {
        if !self.warnings.contains(&msg) {
            self.warnings.push(msg);
        }
    }

    /// Makes every variable of `g` definitely ground.
    fn exec_ground(&self, elem: &AbsElem, g: VarSet, vi: VarSet) -> AbsElem {
        let filter = |sh: &SharingSet| -> SharingSet {
            sh.iter().filter(|s| !s.intersects(g)).collect()
        };
        match elem {
            AbsElem::Sh(sh) => AbsElem::Sh(filter(sh)),
            AbsElem::Sfl(d) => {
                let sh = filter(&d.sh);
                let recovered = vi.diff(sh.vars());
                AbsElem::Sfl(SflElement { f: d.f.inter(sh.vars()), l: d.l.union(recovered), sh })
            }
            AbsElem::Sgfl(d) => {
                let sh = filter(&d.sh);
                let recovered = vi.diff(sh.vars());
                AbsElem::Sgfl(SgflElement {
                    f: d.f.inter(sh.vars()),
                    gf: d.gf.union(recovered),
                    l: d.l.union(recovered),
                    sh,
                })
            }
            AbsElem::Pos(phi) => AbsElem::Pos(phi.and(&PosFormula::conj(g))),
            AbsElem::Combined(c) => {
                let phi = c.phi.and(&PosFormula::conj(g));
                let sh = filter(&c.d.sh);
                let recovered = vi.diff(sh.vars());
                AbsElem::Combined(CombinedElement {
                    phi,
                    d: SflElement { f: c.d.f.inter(sh.vars()), l: c.d.l.union(recovered), sh },
                })
            }
        }
    }

    /// Worst-case effect of an unknown goal on its argument variables: all
    /// relevant groups may merge, and freeness/linearity of the touched
    /// variables is lost.  Groundness knowledge survives (instantiation can
    /// only extend it).
    fn exec_havoc(&self, elem: &AbsElem, args: VarSet, vi: VarSet) -> AbsElem {
        let close = |sh: &SharingSet| match self.cfg.star_mode() {
            StarMode::Star => star_union(sh),
            StarMode::Sbin => sbin(sh),
        };
        let havoc_sfl = |d: &SflElement| -> SflElement {
            let r = rel(args, &d.sh);
            let touched = r.vars();
            let sh = nrel(args, &d.sh).union(&close(&r));
            SflElement {
                sh,
                f: d.f.diff(touched),
                l: d.l.diff(touched).union(vi.diff(touched)),
            }
        };
        match elem {
            AbsElem::Sh(sh) => {
                let r = rel(args, sh);
                AbsElem::Sh(nrel(args, sh).union(&close(&r)))
            }
            AbsElem::Sfl(d) => AbsElem::Sfl(havoc_sfl(d)),
            AbsElem::Sgfl(d) => {
                let touched = rel(args, &d.sh).vars();
                let base = havoc_sfl(&d.to_sfl());
                AbsElem::Sgfl(SgflElement {
                    sh: base.sh,
                    f: base.f,
                    gf: d.gf.diff(touched),
                    l: base.l,
                })
            }
            AbsElem::Pos(phi) => AbsElem::Pos(phi.clone()),
            AbsElem::Combined(c) => AbsElem::Combined(CombinedElement {
                phi: c.phi.clone(),
                d: havoc_sfl(&c.d),
            }),
        }
    }

    /// Executes one binding under the configured operators and enhancements.
    /// `None` signals definite failure (compoundness reduction bottom).
    fn exec_bind(
        &mut self,
        elem: &AbsElem,
        b: &Binding,
        vi: VarSet,
        compound: &mut VarSet,
    ) -> Option<AbsElem> {
        let mode = self.cfg.star_mode();
        let sfl_step = |an: &mut Self, d: &SflElement| -> Option<SflElement> {
            let d = if an.cfg.compound_reduce {
                match compound_reduce(d, b, *compound, an.cfg.occurs_check) {
                    Reduced::Element(d2) => d2,
                    Reduced::Bottom => return None,
                }
            } else {
                d.clone()
            };
            let mut out = if an.cfg.klin {
                amgu_klin(&d, b, vi, mode)
            } else if an.cfg.free_split {
                let (out, warned) = amgu_free_split(&d, b, vi, DEFAULT_COMPONENT_BOUND);
                if warned {
                    an.warn("freeness decomposition bound exceeded; used plain unification".into());
                }
                out
            } else {
                amgu_sfl(&d, b, vi, mode)
            };
            if an.cfg.reduce_sh() {
                out.sh = rho_reduce(&out.sh);
                out.f = out.f.inter(out.sh.vars());
            }
            Some(out)
        };
        let result = match elem {
            AbsElem::Sh(sh) => {
                let mut out = match self.cfg.domain {
                    DomainId::Psd => amgu_psd(sh, b),
                    _ if self.cfg.psd_backend => amgu_psd(sh, b),
                    _ => amgu_sh(sh, b),
                };
                if self.cfg.reduce_sh() {
                    out = rho_reduce(&out);
                }
                Some(AbsElem::Sh(out))
            }
            AbsElem::Sfl(d) => sfl_step(self, d).map(AbsElem::Sfl),
            AbsElem::Sgfl(d) => {
                let mut out = amgu_sgfl(d, b, vi, mode);
                if self.cfg.reduce_sh() {
                    out.sh = rho_reduce(&out.sh);
                    out.f = out.f.inter(out.sh.vars());
                }
                Some(AbsElem::Sgfl(out))
            }
            AbsElem::Pos(phi) => Some(AbsElem::Pos(pos_amgu(phi, b))),
            AbsElem::Combined(c) => {
                let phi = pos_amgu(&c.phi, b);
                let d = sfl_step(self, &c.d)?;
                let mut d = apply_groundness(&phi, &d, vi);
                if self.cfg.domain == DomainId::PosRedSfl {
                    match reduce_product(&phi, &d.sh, vi, DEFAULT_MODEL_BOUND) {
                        Ok(sh) => {
                            d.f = d.f.inter(sh.vars());
                            d.l = d.l.union(vi.diff(sh.vars()));
                            d.sh = sh;
                        }
                        Err(_) => self.warn(
                            "model bound exceeded; reduce skipped for a wide clause".into(),
                        ),
                    }
                }
                Some(AbsElem::Combined(CombinedElement { phi, d }))
            }
        };
        *compound = track_compound(*compound, b);
        result
    }

    /// Executes a maximal run of consecutive bindings, reordered per the
    /// configured strategy when the domain tracks freeness.
    fn exec_run(
        &mut self,
        mut elem: AbsElem,
        run: &[Binding],
        vi: VarSet,
        compound: &mut VarSet,
    ) -> Option<AbsElem> {
        let ordered: Vec<Binding> = match (self.cfg.strategy, elem.sfl_view()) {
            (OrderingStrategy::Textual, _) | (_, None) => run.to_vec(),
            (strategy, Some(view)) => {
                order_bindings(strategy, &view, run, vi, self.cfg.star_mode())
            }
        };
        for b in &ordered {
            elem = self.exec_bind(&elem, b, vi, compound)?;
        }
        Some(elem)
    }

    /// Canonical call pattern of `elem` restricted to `args` (handles
    /// repeated arguments by routing through fresh formal parameters).
    fn pattern_at(&mut self, elem: &AbsElem, args: &[Var], vi: VarSet, base: u32) -> Option<AbsElem> {
        let formals: Vec<Var> = (0..args.len() as u32).map(|i| Var(base + i)).collect();
        let fset: VarSet = formals.iter().copied().collect();
        let mut ext = extend(elem, &top_element(self.cfg.domain, fset));
        let vi_ext = vi.union(fset);
        let mut compound = VarSet::EMPTY;
        for (fv, a) in formals.iter().zip(args) {
            ext = self.exec_bind(&ext, &Binding::new(*fv, Term::Var(*a)), vi_ext, &mut compound)?;
        }
        let onto_formals = project_out(&ext, vi_ext.diff(fset));
        let map: Vec<(Var, Var)> =
            formals.iter().enumerate().map(|(i, fv)| (*fv, Var(i as u32))).collect();
        Some(rename(&onto_formals, &map))
    }

    /// Applies a callee's success pattern at a call site by extend-bind-project.
    fn apply_success(
        &mut self,
        elem: &AbsElem,
        pattern: &AbsElem,
        args: &[Var],
        vi: VarSet,
        base: u32,
    ) -> Option<AbsElem> {
        let formals: Vec<Var> = (0..args.len() as u32).map(|i| Var(base + i)).collect();
        let fset: VarSet = formals.iter().copied().collect();
        let map: Vec<(Var, Var)> =
            formals.iter().enumerate().map(|(i, fv)| (Var(i as u32), *fv)).collect();
        let shifted = rename(pattern, &map);
        let mut ext = extend(elem, &shifted);
        let vi_ext = vi.union(fset);
        let mut compound = VarSet::EMPTY;
        for (fv, a) in formals.iter().zip(args) {
            ext = self.exec_bind(&ext, &Binding::new(*fv, Term::Var(*a)), vi_ext, &mut compound)?;
        }
        Some(project_out(&ext, fset))
    }

    fn eval_call(
        &mut self,
        elem: AbsElem,
        name: &str,
        arity: usize,
        args: &[Var],
        vi: VarSet,
        base: u32,
    ) -> Option<AbsElem> {
        if noop_builtin(name, arity) {
            return Some(elem);
        }
        if grounding_builtin(name, arity) {
            let g: VarSet = args.iter().copied().collect();
            return Some(self.exec_ground(&elem, g, vi));
        }
        let Some(callee) = self.program.lookup(name, arity) else {
            self.warn(format!("unknown predicate {name}/{arity} treated as worst case"));
            let g: VarSet = args.iter().copied().collect();
            return Some(self.exec_havoc(&elem, g, vi));
        };
        if base as usize + arity > MAX_VARS {
            self.warn(format!("variable budget exceeded at call to {name}/{arity}"));
            let g: VarSet = args.iter().copied().collect();
            return Some(self.exec_havoc(&elem, g, vi));
        }
        if self.cfg.mode == AnalysisMode::GoalDependent {
            if let Some(cp) = self.pattern_at(&elem, args, vi, base) {
                self.record_call(callee, cp);
            }
        }
        let pattern = self.success[callee].clone()?;
        self.apply_success(&elem, &pattern, args, vi, base)
    }

    fn record_call(&mut self, pred: usize, cp: AbsElem) {
        let merged = match &self.call[pred] {
            Some(old) => lub(old, &cp),
            None => cp,
        };
        if self.call[pred].as_ref() != Some(&merged) {
            self.call[pred] = Some(merged);
            self.changed = true;
        }
    }

    /// Evaluates one clause to a success pattern over canonical head
    /// variables; `None` means this clause contributes nothing (yet).
    fn eval_clause(&mut self, pred: usize, clause: &NormalClause) -> Option<AbsElem> {
        let vi = clause.vi();
        let base = clause.table.len() as u32;
        let head: VarSet = clause.head_vars.iter().copied().collect();
        let mut elem = match (self.cfg.mode, &self.call[pred]) {
            (AnalysisMode::GoalDependent, Some(cp)) => {
                let map: Vec<(Var, Var)> = clause
                    .head_vars
                    .iter()
                    .enumerate()
                    .map(|(i, hv)| (Var(i as u32), *hv))
                    .collect();
                extend(&rename(cp, &map), &top_element(self.cfg.domain, vi.diff(head)))
            }
            (AnalysisMode::GoalDependent, None) => return None,
            (AnalysisMode::GoalIndependent, _) => top_element(self.cfg.domain, vi),
        };
        let mut compound = VarSet::EMPTY;
        let mut run: Vec<Binding> = Vec::new();
        for item in &clause.body {
            if self.out_of_time() {
                return None;
            }
            match item {
                BodyItem::Bind(b) => run.push(b.clone()),
                BodyItem::Call { name, arity, args } => {
                    if !run.is_empty() {
                        elem = self.exec_run(elem, &run, vi, &mut compound)?;
                        run.clear();
                    }
                    elem = self.eval_call(elem, name, *arity, args, vi, base)?;
                }
            }
        }
        if !run.is_empty() {
            elem = self.exec_run(elem, &run, vi, &mut compound)?;
        }
        let projected = project_out(&elem, vi.diff(head));
        let map: Vec<(Var, Var)> = clause
            .head_vars
            .iter()
            .enumerate()
            .map(|(i, hv)| (*hv, Var(i as u32)))
            .collect();
        Some(rename(&projected, &map))
    }

    fn eval_pred(&mut self, pred: usize) {
        if self.out_of_time() {
            return;
        }
        if self.cfg.mode == AnalysisMode::GoalDependent && self.call[pred].is_none() {
            return;
        }
        let clauses = self.program.preds[pred].clauses.clone();
        let mut acc: Option<AbsElem> = self.success[pred].clone();
        for clause in &clauses {
            if let Some(s) = self.eval_clause(pred, clause) {
                acc = Some(match &acc {
                    Some(old) => lub(old, &s),
                    None => s,
                });
            }
        }
        if acc != self.success[pred] {
            self.success[pred] = acc;
            self.changed = true;
        }
    }

    fn stabilize_nodes(&mut self, nodes: &[WtoNode]) {
        for node in nodes {
            if self.out_of_time() {
                return;
            }
            match node {
                WtoNode::Vertex(p) => self.eval_pred(*p),
                WtoNode::Component(c) => self.stabilize_component(c),
            }
        }
    }

    fn stabilize_component(&mut self, c: &WtoComponent) {
        loop {
            let before_changed = self.changed;
            self.changed = false;
            self.eval_pred(c.head);
            self.stabilize_nodes(&c.body);
            let component_changed = self.changed;
            self.changed = before_changed || component_changed;
            if !component_changed || self.out_of_time() {
                return;
            }
        }
    }

    fn seed_entries(&mut self) {
        let entries = self.program.entries.clone();
        for (key, pseudo) in &entries {
            let Some(target) = self.program.lookup(&key.0, key.1) else {
                self.warn(format!("entry goal for unknown predicate {}/{}", key.0, key.1));
                continue;
            };
            // The pseudo-clause body instantiates the formal parameters from
            // the entry goal's arguments.
            let vi = pseudo.vi();
            let mut elem = top_element(self.cfg.domain, vi);
            let mut compound = VarSet::EMPTY;
            let mut ok = true;
            for item in &pseudo.body {
                match item {
                    BodyItem::Bind(b) => match self.exec_bind(&elem, b, vi, &mut compound) {
                        Some(e) => elem = e,
                        None => {
                            ok = false;
                            break;
                        }
                    },
                    BodyItem::Call { .. } => unreachable!("entry goals have flat bodies"),
                }
            }
            if !ok {
                continue;
            }
            let head: VarSet = pseudo.head_vars.iter().copied().collect();
            let projected = project_out(&elem, vi.diff(head));
            let map: Vec<(Var, Var)> = pseudo
                .head_vars
                .iter()
                .enumerate()
                .map(|(i, hv)| (*hv, Var(i as u32)))
                .collect();
            self.record_call(target, rename(&projected, &map));
        }
        if self.program.entries.is_empty() {
            // Without entry goals every predicate may be called most
            // generally.
            for p in 0..self.program.preds.len() {
                let arity = self.program.preds[p].arity;
                let vi = VarSet::first_n(arity);
                self.record_call(p, top_element(self.cfg.domain, vi));
            }
        }
    }
}

/// Runs the configured analysis to its least fixpoint.
pub fn analyze(program: &Program, cfg: &EngineConfig) -> AnalysisResult {
    let n = program.preds.len();
    let mut analyzer = Analyzer {
        program,
        cfg: cfg.clone(),
        success: vec![None; n],
        call: vec![None; n],
        deadline: Instant::now() + cfg.timeout,
        timed_out: false,
        changed: false,
        warnings: Vec::new(),
    };
    if cfg.mode == AnalysisMode::GoalDependent {
        analyzer.seed_entries();
    }
    let wto = weak_topological_order(program);
    // Outer chaotic iteration: goal-dependent call patterns flow against the
    // WTO direction, so repeat the whole ordering until globally stable.
    loop {
        analyzer.changed = false;
        analyzer.stabilize_nodes(&wto.0);
        if !analyzer.changed || analyzer.timed_out {
            break;
        }
    }
    AnalysisResult {
        preds: program
            .preds
            .iter()
            .enumerate()
            .map(|(i, p)| PredResult {
                name: p.name.clone(),
                arity: p.arity,
                success: analyzer.success[i].clone(),
                call: match cfg.mode {
                    AnalysisMode::GoalDependent => analyzer.call[i].clone(),
                    AnalysisMode::GoalIndependent => None,
                },
            })
            .collect(),
        timed_out: analyzer.timed_out,
        warnings: analyzer.warnings,
    }
}
