//! The measurement harness: runs configured analyses over benchmark
//! programs, extracts the precision quantities (independent pairs, ground,
//! free, ground-or-free, linear variables), and compares two result sets by
//! bucketing per-benchmark percentage changes into precision classes.

use crate::fixpoint_engine::{
    analyze, AbsElem, AnalysisMode, AnalysisResult, DomainId, EngineConfig,
};
use crate::groundness_pos::{entails_binary_disjunction, ground_vars, models, DEFAULT_MODEL_BOUND};
use crate::kernel_terms::{normalize_program, parse_program, Var, VarSet};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Duration;

/// The five precision quantities, aggregated over a benchmark.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct Metrics {
    #[serde(rename = "I")]
    pub i: u64,
    #[serde(rename = "G")]
    pub g: u64,
    #[serde(rename = "F")]
    pub f: u64,
    #[serde(rename = "GF")]
    pub gf: u64,
    #[serde(rename = "L")]
    pub l: u64,
}

impl Metrics {
    fn add(&mut self, other: Metrics) {
        self.i += other.i;
        self.g += other.g;
        self.f += other.f;
        self.gf += other.gf;
        self.l += other.l;
    }

    pub fn get(&self, q: Quantity) -> u64 {
        match q {
            Quantity::I => self.i,
            Quantity::G => self.g,
            Quantity::F => self.f,
            Quantity::GF => self.gf,
            Quantity::L => self.l,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Quantity {
    I,
    G,
    F,
    GF,
    L,
}

pub const QUANTITIES: [Quantity; 5] =
    [Quantity::I, Quantity::G, Quantity::F, Quantity::GF, Quantity::L];

impl Quantity {
    pub fn label(self) -> &'static str {
        match self {
            Quantity::I => "I",
            Quantity::G => "G",
            Quantity::F => "F",
            Quantity::GF => "GF",
            Quantity::L => "L",
        }
    }
}

/// Measures one abstract description over `arity` canonical variables.
pub fn measure_element(elem: &AbsElem, arity: usize) -> Metrics {
    let vi = VarSet::first_n(arity);
    let gset = match elem.sharing() {
        Some(sh) => vi.diff(sh.vars()),
        None => elem.pos().map(|p| ground_vars(p, vi)).unwrap_or(VarSet::EMPTY),
    };
    let fset = elem.freeness().unwrap_or(VarSet::EMPTY);
    let l = match elem.linearity() {
        Some(l) => l.len(),
        // Pos alone: only definite groundness implies linearity.
        None => gset.len(),
    };
    let gf = match elem.ground_or_free() {
        Some(gf) => gf.len(),
        None => gset.union(fset).len(),
    };
    let mut independent = 0u64;
    let vars: Vec<Var> = vi.iter().collect();
    for (ai, &x) in vars.iter().enumerate() {
        for &y in &vars[ai + 1..] {
            let pair = VarSet::singleton(x).with(y);
            let by_sharing = elem
                .sharing()
                .map(|sh| !sh.iter().any(|g| pair.is_subset(g)))
                .unwrap_or(false);
            let by_pos = elem
                .pos()
                .map(|p| entails_binary_disjunction(p, x, y))
                .unwrap_or(false);
            if by_sharing || by_pos {
                independent += 1;
            }
        }
    }
    Metrics { i: independent, g: gset.len() as u64, f: fset.len() as u64, gf: gf as u64, l: l as u64 }
}

/// Aggregates over all patterns of a completed analysis: success patterns
/// always, call patterns when present (goal-dependent runs).
pub fn measure(result: &AnalysisResult) -> Option<Metrics> {
    if result.timed_out {
        return None;
    }
    let mut total = Metrics::default();
    for pred in &result.preds {
        for pattern in [&pred.success, &pred.call].into_iter().flatten() {
            total.add(measure_element(pattern, pred.arity));
        }
    }
    Some(total)
}

/// Precision classes for a percentage change `p`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum PrecClass {
    DegGt20,
    Deg10To20,
    Deg5To10,
    Deg2To5,
    Deg0To2,
    Same,
    Imp0To2,
    Imp2To5,
    Imp5To10,
    Imp10To20,
    ImpGt20,
    Unknown,
}

impl PrecClass {
    pub fn label(self) -> &'static str {
        match self {
            PrecClass::ImpGt20 => "p>20",
            PrecClass::Imp10To20 => "10<p<=20",
            PrecClass::Imp5To10 => "5<p<=10",
            PrecClass::Imp2To5 => "2<p<=5",
            PrecClass::Imp0To2 => "0<p<=2",
            PrecClass::Same => "same",
            PrecClass::Deg0To2 => "-2<=p<0",
            PrecClass::Deg2To5 => "-5<=p<-2",
            PrecClass::Deg5To10 => "-10<=p<-5",
            PrecClass::Deg10To20 => "-20<=p<-10",
            PrecClass::DegGt20 => "p<-20",
            PrecClass::Unknown => "unknown",
        }
    }

    pub fn is_degradation(self) -> bool {
        matches!(
            self,
            PrecClass::Deg0To2
                | PrecClass::Deg2To5
                | PrecClass::Deg5To10
                | PrecClass::Deg10To20
                | PrecClass::DegGt20
        )
    }

    pub fn is_improvement(self) -> bool {
        matches!(
            self,
            PrecClass::Imp0To2
                | PrecClass::Imp2To5
                | PrecClass::Imp5To10
                | PrecClass::Imp10To20
                | PrecClass::ImpGt20
        )
    }

    fn of_percent(p: f64) -> PrecClass {
        if p == 0.0 {
            PrecClass::Same
        } else if p > 20.0 {
            PrecClass::ImpGt20
        } else if p > 10.0 {
            PrecClass::Imp10To20
        } else if p > 5.0 {
            PrecClass::Imp5To10
        } else if p > 2.0 {
            PrecClass::Imp2To5
        } else if p > 0.0 {
            PrecClass::Imp0To2
        } else if p >= -2.0 {
            PrecClass::Deg0To2
        } else if p >= -5.0 {
            PrecClass::Deg2To5
        } else if p >= -10.0 {
            PrecClass::Deg5To10
        } else if p >= -20.0 {
            PrecClass::Deg10To20
        } else {
            PrecClass::DegGt20
        }
    }
}

pub const CLASSES: [PrecClass; 12] = [
    PrecClass::ImpGt20,
    PrecClass::Imp10To20,
    PrecClass::Imp5To10,
    PrecClass::Imp2To5,
    PrecClass::Imp0To2,
    PrecClass::Same,
    PrecClass::Deg0To2,
    PrecClass::Deg2To5,
    PrecClass::Deg5To10,
    PrecClass::Deg10To20,
    PrecClass::DegGt20,
    PrecClass::Unknown,
];

fn classify(base: Option<u64>, enh: Option<u64>) -> PrecClass {
    match (base, enh) {
        (Some(b), Some(e)) => {
            if b == e {
                PrecClass::Same
            } else if b == 0 {
                // No measurable baseline: any gain is a maximal improvement.
                PrecClass::ImpGt20
            } else {
                PrecClass::of_percent((e as f64 - b as f64) / b as f64 * 100.0)
            }
        }
        _ => PrecClass::Unknown,
    }
}

/// Per-quantity comparison: class per benchmark, class distribution as
/// percentages, and the overall class (best improvement, overridden by the
/// worst degradation if any benchmark regressed).
#[derive(Clone, Debug)]
pub struct QuantityComparison {
    pub quantity: Quantity,
    pub per_benchmark: Vec<(String, PrecClass)>,
    pub distribution: Vec<(PrecClass, f64)>,
    pub overall: PrecClass,
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub quantities: Vec<QuantityComparison>,
}

impl Comparison {
    pub fn for_quantity(&self, q: Quantity) -> &QuantityComparison {
        self.quantities.iter().find(|c| c.quantity == q).unwrap()
    }
}

/// Compares two metric sets keyed by benchmark name.
pub fn compare(
    baseline: &[(String, Option<Metrics>)],
    enhanced: &[(String, Option<Metrics>)],
) -> Result<Comparison, String> {
    let base_keys: Vec<&String> = baseline.iter().map(|(k, _)| k).collect();
    let enh_keys: Vec<&String> = enhanced.iter().map(|(k, _)| k).collect();
    if base_keys != enh_keys {
        let missing: Vec<&str> = base_keys
            .iter()
            .filter(|k| !enh_keys.contains(k))
            .map(|k| k.as_str())
            .chain(enh_keys.iter().filter(|k| !base_keys.contains(k)).map(|k| k.as_str()))
            .collect();
        return Err(format!("benchmark sets differ: {}", missing.join(", ")));
    }
    let n = baseline.len().max(1) as f64;
    let mut quantities = Vec::new();
    for q in QUANTITIES {
        let per_benchmark: Vec<(String, PrecClass)> = baseline
            .iter()
            .zip(enhanced)
            .map(|((name, b), (_, e))| {
                (name.clone(), classify(b.map(|m| m.get(q)), e.map(|m| m.get(q))))
            })
            .collect();
        let distribution: Vec<(PrecClass, f64)> = CLASSES
            .iter()
            .map(|&c| {
                let count = per_benchmark.iter().filter(|(_, pc)| *pc == c).count();
                (c, count as f64 / n * 100.0)
            })
            .collect();
        let worst_deg =
            per_benchmark.iter().map(|(_, c)| *c).filter(|c| c.is_degradation()).min();
        let best_imp =
            per_benchmark.iter().map(|(_, c)| *c).filter(|c| c.is_improvement()).max();
        let overall = match (worst_deg, best_imp) {
            (Some(d), _) => d,
            (None, Some(i)) => i,
            (None, None) => {
                if per_benchmark.iter().all(|(_, c)| *c == PrecClass::Unknown)
                    && !per_benchmark.is_empty()
                {
                    PrecClass::Unknown
                } else {
                    PrecClass::Same
                }
            }
        };
        quantities.push(QuantityComparison { quantity: q, per_benchmark, distribution, overall });
    }
    Ok(Comparison { quantities })
}

// ---------------------------------------------------------------------------
// Run configuration and serialized reports
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub engine: EngineConfig,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub inputs: Vec<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OutputFormat {
    Json,
    Table,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConfigReport {
    pub domain: String,
    pub mode: String,
    pub order: String,
    pub klin: bool,
    pub free_split: bool,
    pub compound_reduce: bool,
    pub occurs_check: bool,
    pub psd: bool,
    pub timeout_secs: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PatternReport {
    pub sh: Vec<Vec<String>>,
    pub f: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gf: Option<Vec<String>>,
    pub l: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pos: Option<Vec<Vec<String>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PredReport {
    pub name: String,
    pub arity: usize,
    pub success: Option<PatternReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub call: Option<PatternReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchReport {
    pub benchmark: String,
    pub config: ConfigReport,
    pub status: String,
    pub per_predicate: Vec<PredReport>,
    pub metrics: Option<Metrics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn var_name(v: Var) -> String {
    format!("X{}", v.0 + 1)
}

fn set_names(vs: VarSet) -> Vec<String> {
    vs.iter().map(var_name).collect()
}

fn pattern_report(elem: &AbsElem, arity: usize) -> PatternReport {
    let vi = VarSet::first_n(arity);
    let sh = match elem.sharing() {
        Some(sh) => sh.iter().map(set_names).collect(),
        None => Vec::new(),
    };
    let pos = elem.pos().and_then(|phi| {
        models(phi, vi, DEFAULT_MODEL_BOUND)
            .ok()
            .map(|ms| ms.into_iter().map(set_names).collect())
    });
    PatternReport {
        sh,
        f: set_names(elem.freeness().unwrap_or(VarSet::EMPTY)),
        gf: elem.ground_or_free().map(set_names),
        l: set_names(elem.linearity().unwrap_or(VarSet::EMPTY)),
        pos,
    }
}

fn config_report(cfg: &EngineConfig, order: &str) -> ConfigReport {
    ConfigReport {
        domain: cfg.domain.name().to_string(),
        mode: match cfg.mode {
            AnalysisMode::GoalIndependent => "gi".into(),
            AnalysisMode::GoalDependent => "gd".into(),
        },
        order: order.to_string(),
        klin: cfg.klin,
        free_split: cfg.free_split,
        compound_reduce: cfg.compound_reduce,
        occurs_check: cfg.occurs_check,
        psd: cfg.psd_backend,
        timeout_secs: cfg.timeout.as_secs(),
    }
}

/// Analyzes one program file into a serializable report.
pub fn run_benchmark(path: &Path, cfg: &EngineConfig, order: &str) -> Result<BenchReport, String> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let parsed = parse_program(&src).map_err(|e| format!("{}: {e}", path.display()))?;
    let program = normalize_program(&parsed);
    let result = analyze(&program, cfg);
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(BenchReport {
        benchmark: name,
        config: config_report(cfg, order),
        status: if result.timed_out { "timeout".into() } else { "ok".into() },
        per_predicate: result
            .preds
            .iter()
            .map(|p| PredReport {
                name: p.name.clone(),
                arity: p.arity,
                success: p.success.as_ref().map(|e| pattern_report(e, p.arity)),
                call: p.call.as_ref().map(|e| pattern_report(e, p.arity)),
            })
            .collect(),
        metrics: measure(&result),
        warnings: result.warnings.clone(),
    })
}

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(name = "shana", about = "Sharing analysis for logic programs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze one or more programs and report patterns and metrics.
    Analyze(AnalyzeArgs),
    /// Compare two previously produced JSON result files.
    Compare(CompareArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Abstract domain: sh, psd, sfl, sfl2, sgfl2, pos, pos_x_sfl2, pos_red_sfl
    #[arg(long, default_value = "sfl2")]
    domain: String,
    /// gi (goal-independent) or gd (goal-dependent, uses entry directives)
    #[arg(long, default_value = "gi")]
    mode: String,
    /// Binding order: textual, reverse, stardelay, freelin
    #[arg(long, default_value = "textual")]
    order: String,
    /// Enhanced-linearity unification
    #[arg(long)]
    klin: bool,
    /// Freeness-based decomposition of unifications
    #[arg(long)]
    free_split: bool,
    /// Compoundness reduction (needs --occurs-check to take effect)
    #[arg(long)]
    compound_reduce: bool,
    /// Assume occurs-check-respecting unification
    #[arg(long)]
    occurs_check: bool,
    /// ρ-reduced sharing representation backend
    #[arg(long)]
    psd: bool,
    /// Per-program timeout in seconds
    #[arg(long, default_value_t = 600)]
    timeout: u64,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// json or table
    #[arg(long, default_value = "json")]
    format: String,
    /// Program files
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    baseline: PathBuf,
    #[arg(long)]
    enhanced: PathBuf,
    /// json or table
    #[arg(long, default_value = "table")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn usage_error(msg: &str) -> i32 {
    eprintln!("error: {msg}");
    2
}

fn parse_order(s: &str) -> Option<crate::enhancements::OrderingStrategy> {
    use crate::enhancements::OrderingStrategy::*;
    Some(match s {
        "textual" => Textual,
        "reverse" => Reverse,
        "stardelay" => DelayStarUnions,
        "freelin" => MaxFreeLin,
        _ => return None,
    })
}

fn parse_format(s: &str) -> Option<OutputFormat> {
    Some(match s {
        "json" => OutputFormat::Json,
        "table" => OutputFormat::Table,
        _ => return None,
    })
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            use std::io::Write;
            // Tolerate a closed pipe (e.g. piping into `head`).
            match writeln!(std::io::stdout(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(format!("stdout: {e}"))
                }
                _ => Ok(()),
            }
        }
    }
}

fn metrics_cell(m: &Option<Metrics>) -> String {
    match m {
        Some(m) => format!(
            "{:>6} {:>6} {:>6} {:>6} {:>6}",
            m.i, m.g, m.f, m.gf, m.l
        ),
        None => format!("{:>6} {:>6} {:>6} {:>6} {:>6}", "?", "?", "?", "?", "?"),
    }
}

fn analyze_table(reports: &[BenchReport]) -> String {
    let mut width = "benchmark".len();
    for r in reports {
        width = width.max(r.benchmark.len());
    }
    let mut out = format!(
        "{:<width$}  {:>8}  {:>6} {:>6} {:>6} {:>6} {:>6}\n",
        "benchmark", "status", "I", "G", "F", "GF", "L"
    );
    for r in reports {
        out.push_str(&format!(
            "{:<width$}  {:>8}  {}\n",
            r.benchmark,
            r.status,
            metrics_cell(&r.metrics)
        ));
    }
    out
}

fn compare_table(cmp: &Comparison) -> String {
    let mut out = format!("{:<4}", "");
    for c in CLASSES {
        out.push_str(&format!("{:>12}", c.label()));
    }
    out.push_str(&format!("{:>12}\n", "O"));
    for qc in &cmp.quantities {
        out.push_str(&format!("{:<4}", qc.quantity.label()));
        for (_, pct) in &qc.distribution {
            out.push_str(&format!("{:>11.1}%", pct));
        }
        out.push_str(&format!("{:>12}\n", qc.overall.label()));
    }
    out
}

fn run_analyze(args: &AnalyzeArgs) -> i32 {
    let Some(domain) = DomainId::parse(&args.domain) else {
        return usage_error(&format!("unknown domain '{}'", args.domain));
    };
    let mode = match args.mode.as_str() {
        "gi" => AnalysisMode::GoalIndependent,
        "gd" => AnalysisMode::GoalDependent,
        other => return usage_error(&format!("unknown mode '{other}'")),
    };
    let Some(strategy) = parse_order(&args.order) else {
        return usage_error(&format!("unknown order '{}'", args.order));
    };
    let Some(format) = parse_format(&args.format) else {
        return usage_error(&format!("unknown format '{}'", args.format));
    };
    if args.psd && domain == DomainId::PosRedSfl {
        return usage_error(
            "the model-based reduce requires the full sharing representation; \
             --psd cannot be combined with --domain pos_red_sfl",
        );
    }
    if args.psd && args.free_split {
        return usage_error(
            "freeness decomposition requires the full sharing representation; \
             --psd cannot be combined with --free-split",
        );
    }
    let mut cfg = EngineConfig::new(domain, mode);
    cfg.strategy = strategy;
    cfg.psd_backend = args.psd;
    cfg.klin = args.klin;
    cfg.free_split = args.free_split;
    cfg.compound_reduce = args.compound_reduce;
    cfg.occurs_check = args.occurs_check;
    cfg.timeout = Duration::from_secs(args.timeout);
    let mut reports = Vec::new();
    for file in &args.files {
        match run_benchmark(file, &cfg, &args.order) {
            Ok(r) => reports.push(r),
            Err(e) => {
                eprintln!("error: {e}");
                return 1;
            }
        }
    }
    let text = match format {
        OutputFormat::Json => serde_json::to_string_pretty(&reports).expect("serializable"),
        OutputFormat::Table => analyze_table(&reports),
    };
    match emit(&text, &args.out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load_metrics(path: &Path) -> Result<Vec<(String, Option<Metrics>)>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let reports: Vec<BenchReport> =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(reports.into_iter().map(|r| (r.benchmark, r.metrics)).collect())
}

fn run_compare(args: &CompareArgs) -> i32 {
    let Some(format) = parse_format(&args.format) else {
        return usage_error(&format!("unknown format '{}'", args.format));
    };
    let (baseline, enhanced) = match (load_metrics(&args.baseline), load_metrics(&args.enhanced)) {
        (Ok(b), Ok(e)) => (b, e),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let cmp = match compare(&baseline, &enhanced) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let text = match format {
        OutputFormat::Table => compare_table(&cmp),
        OutputFormat::Json => {
            let value: Vec<serde_json::Value> = cmp
                .quantities
                .iter()
                .map(|qc| {
                    serde_json::json!({
                        "quantity": qc.quantity.label(),
                        "overall": qc.overall.label(),
                        "per_benchmark": qc.per_benchmark.iter()
                            .map(|(n, c)| serde_json::json!({"benchmark": n, "class": c.label()}))
                            .collect::<Vec<_>>(),
                        "distribution": qc.distribution.iter()
                            .map(|(c, p)| serde_json::json!({"class": c.label(), "percent": p}))
                            .collect::<Vec<_>>(),
                    })
                })
                .collect();
            serde_json::to_string_pretty(&value).expect("serializable")
        }
    };
    match emit(&text, &args.out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// CLI entry point; returns the process exit code.
pub fn run_cli() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match &cli.command {
        Command::Analyze(args) => run_analyze(args),
        Command::Compare(args) => run_compare(args),
    }
}
