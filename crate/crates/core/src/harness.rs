//! Replays a trace through one of the algorithms, compares against the
//! oracles, and produces per-event metrics and a run summary.

use std::collections::BTreeMap;
use std::f64::consts::E;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::combiner::BucketRouter;
use crate::dynamic::{
    affinity_factor, affinity_recourse_bound, default_gamma, greedy_factor, power_law_budget,
    shannon_budget, unit_recourse_bound, AuditTally, CoverConfig, DynamicCover, EventKind,
};
use crate::error::RunError;
use crate::function::SetFunction;
use crate::ground::GroundSet;
use crate::oracles::{brute_force_cover, exact_mst, exact_steiner, offline_greedy};
use crate::permutation::MffMode;
use crate::potentials::PotentialSpec;
use crate::rational::Rational;
use crate::rjunta::JuntaState;
use crate::trace::{Trace, TraceEvent};
use crate::trees::{TreeMaintainer, TreeMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Unit,
    Cost,
    Affinity,
    Rjunta,
    Combiner,
    Mst,
    Steiner,
}

impl RunMode {
    pub const ALL: [RunMode; 7] = [
        RunMode::Unit,
        RunMode::Cost,
        RunMode::Affinity,
        RunMode::Rjunta,
        RunMode::Combiner,
        RunMode::Mst,
        RunMode::Steiner,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RunMode::Unit => "unit",
            RunMode::Cost => "cost",
            RunMode::Affinity => "affinity",
            RunMode::Rjunta => "rjunta",
            RunMode::Combiner => "combiner",
            RunMode::Mst => "mst",
            RunMode::Steiner => "steiner",
        }
    }

    fn engine_mode(self) -> Option<MffMode> {
        match self {
            RunMode::Unit => Some(MffMode::UnitCost),
            RunMode::Cost => Some(MffMode::CostRatio),
            RunMode::Affinity => Some(MffMode::MutualAffinity),
            _ => None,
        }
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RunMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        RunMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    #[default]
    None,
    Greedy,
    Brute,
}

impl FromStr for OracleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(OracleKind::None),
            "greedy" => Ok(OracleKind::Greedy),
            "brute" => Ok(OracleKind::Brute),
            _ => Err(format!("unknown oracle {s:?}")),
        }
    }
}

/// Potentials that can be requested for auditing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditChoice {
    Tsallis,
    H,
    Sqrt,
    Shannon,
    All,
}

impl FromStr for AuditChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tsallis" => Ok(AuditChoice::Tsallis),
            "h" => Ok(AuditChoice::H),
            "sqrt" => Ok(AuditChoice::Sqrt),
            "shannon" => Ok(AuditChoice::Shannon),
            "all" => Ok(AuditChoice::All),
            _ => Err(format!("unknown potential {s:?}")),
        }
    }
}

/// Parses `e`, `e2` or a rational literal.
pub fn parse_gamma(s: &str) -> Result<Rational, String> {
    let g = match s {
        "e" => Rational::ceil_from_f64(E, 12),
        "e2" => Rational::ceil_from_f64(E * E, 12),
        _ => s
            .parse::<Rational>()
            .map_err(|e| format!("bad gamma {s:?}: {e}"))?,
    };
    if g <= Rational::ONE {
        return Err(format!("gamma must exceed 1, got {s}"));
    }
    Ok(g)
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub mode: RunMode,
    pub gamma: Option<Rational>,
    pub audit: Vec<AuditChoice>,
    pub oracle: OracleKind,
    pub seed: u64,
    pub fmin: Option<Rational>,
    pub fmax: Option<Rational>,
}

impl RunOptions {
    pub fn new(mode: RunMode) -> Self {
        RunOptions {
            mode,
            gamma: None,
            audit: Vec::new(),
            oracle: OracleKind::None,
            seed: 0,
            fmin: None,
            fmax: None,
        }
    }
}

/// One CSV row per event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub t: usize,
    pub event: String,
    pub target: u64,
    pub cost: f64,
    pub opt: Option<f64>,
    pub ratio: Option<f64>,
    /// Competitive factor the step is checked against.
    pub factor: Option<f64>,
    pub competitive_ok: Option<bool>,
    pub recourse: usize,
    pub cumulative_recourse: usize,
    pub cumulative_upfront: usize,
    pub sum_g: f64,
    /// `name=value` pairs separated by `;`.
    pub potentials: String,
    pub audit_failures: usize,
    pub feasible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PotentialSummary {
    pub name: &'static str,
    pub events: usize,
    pub failed: usize,
    pub insert_budget: f64,
    pub move_decrease: f64,
    pub gamma_moves: usize,
    pub budget_identity: bool,
}

impl From<&AuditTally> for PotentialSummary {
    fn from(t: &AuditTally) -> Self {
        PotentialSummary {
            name: t.potential,
            events: t.events,
            failed: t.failed,
            insert_budget: t.insert_budget,
            move_decrease: t.move_decrease,
            gamma_moves: t.gamma_moves,
            budget_identity: t.budget_identity_holds(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub mode: RunMode,
    pub events: usize,
    pub gamma: f64,
    pub fmin: f64,
    pub total_recourse: usize,
    pub upfront_recourse: usize,
    pub gamma_moves: usize,
    pub swaps: usize,
    pub probes: Option<usize>,
    pub sum_g: f64,
    pub sum_g_inserted: f64,
    /// The recourse quantity the bound applies to, and the bound.
    pub recourse_measured: usize,
    pub recourse_bound: Option<f64>,
    pub recourse_ok: bool,
    pub competitive_checked: usize,
    pub competitive_violations: usize,
    pub max_ratio: Option<f64>,
    pub infeasible_steps: usize,
    pub audit_failures: usize,
    pub audits: Vec<PotentialSummary>,
    /// γ-move budgets implied by each audited potential, side by side.
    pub budgets: BTreeMap<String, f64>,
    /// Constants the inequalities were checked with.
    pub constants: BTreeMap<String, f64>,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<MetricsRow>,
    pub summary: RunSummary,
}

struct Book {
    rows: Vec<MetricsRow>,
    checked: usize,
    violations: usize,
    max_ratio: Option<f64>,
    infeasible: usize,
    sum_g: f64,
}

impl Book {
    fn new() -> Self {
        Book {
            rows: Vec::new(),
            checked: 0,
            violations: 0,
            max_ratio: None,
            infeasible: 0,
            sum_g: 0.0,
        }
    }

    /// `exact` marks OPT values that are true optima, so the factor is enforced.
    fn push(&mut self, mut row: MetricsRow, opt: Option<(Rational, bool)>, cost: Rational) {
        if let Some((opt, exact)) = opt {
            row.opt = Some(opt.to_f64());
            if opt.is_positive() {
                let ratio = (cost / opt).to_f64();
                row.ratio = Some(ratio);
                self.max_ratio = Some(self.max_ratio.map_or(ratio, |m: f64| m.max(ratio)));
            }
            if exact {
                if let Some(factor) = row.factor {
                    let ok = cost.to_f64() <= factor * opt.to_f64();
                    row.competitive_ok = Some(ok);
                    self.checked += 1;
                    self.violations += usize::from(!ok);
                }
            }
        }
        self.infeasible += usize::from(!row.feasible);
        self.rows.push(row);
    }
}

fn event_name(k: EventKind) -> &'static str {
    match k {
        EventKind::Insert => "insert",
        EventKind::Delete => "delete",
    }
}

fn potentials_field(names: &[&str], values: &[f64]) -> String {
    names
        .iter()
        .zip(values)
        .map(|(n, v)| format!("{n}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn opt_of<F: SetFunction + ?Sized>(
    oracle: OracleKind,
    f: &F,
    ground: &GroundSet,
) -> Result<Option<(Rational, bool)>, RunError> {
    Ok(match oracle {
        OracleKind::None => None,
        OracleKind::Greedy => Some((offline_greedy(f, ground).cost, false)),
        OracleKind::Brute => Some((brute_force_cover(f, ground)?.cost, true)),
    })
}

/// Runs `trace` under `opts`.
pub fn run_trace(trace: &Trace, opts: &RunOptions) -> Result<RunOutput, RunError> {
    match opts.mode {
        RunMode::Mst | RunMode::Steiner => run_tree(trace, opts),
        _ if trace.is_metric() => Err(RunError::Config(format!(
            "mode {} needs a function trace",
            opts.mode
        ))),
        RunMode::Unit | RunMode::Cost | RunMode::Affinity => run_cover(trace, opts),
        RunMode::Rjunta => run_rjunta(trace, opts),
        RunMode::Combiner => run_combiner(trace, opts),
    }
}

fn declared_fmin(trace: &Trace, opts: &RunOptions) -> Rational {
    opts.fmin.or(trace.header.fmin).unwrap_or(Rational::ONE)
}

fn gamma_of(trace: &Trace, opts: &RunOptions, mode: MffMode) -> Result<Rational, RunError> {
    match (opts.gamma, &trace.header.gamma) {
        (Some(g), _) => Ok(g),
        (None, Some(s)) => parse_gamma(s).map_err(RunError::Config),
        (None, None) => Ok(default_gamma(mode)),
    }
}

fn extra_potentials(
    opts: &RunOptions,
    mode: MffMode,
    fmax: Option<Rational>,
    ground: &GroundSet,
) -> Result<Vec<PotentialSpec>, RunError> {
    let mut out = Vec::new();
    let all = opts.audit.contains(&AuditChoice::All);
    let shannon = |fmax: Rational| PotentialSpec::Shannon {
        cmin: ground.cmin().to_f64(),
        fmax: fmax.to_f64(),
    };
    let wants = |c: AuditChoice| all || opts.audit.contains(&c);
    if wants(AuditChoice::Shannon) && mode != MffMode::MutualAffinity {
        match fmax {
            Some(f) => out.push(shannon(f)),
            None if !all => {
                return Err(RunError::Config(
                    "the shannon potential needs a declared fmax".into(),
                ))
            }
            None => {}
        }
    }
    for (choice, name, m) in [
        (AuditChoice::Tsallis, "tsallis", MffMode::UnitCost),
        (AuditChoice::H, "h", MffMode::CostRatio),
        (AuditChoice::Sqrt, "sqrt", MffMode::MutualAffinity),
    ] {
        if opts.audit.contains(&choice) && m != mode {
            return Err(RunError::Config(format!(
                "potential {name} does not apply in {mode:?} mode"
            )));
        }
    }
    Ok(out)
}

fn run_cover(trace: &Trace, opts: &RunOptions) -> Result<RunOutput, RunError> {
    let mode = opts
        .mode
        .engine_mode()
        .expect("cover modes have an engine mode");
    let ground = trace.header.ground()?;
    if mode == MffMode::UnitCost && !ground.is_unit() {
        return Err(RunError::Config(
            "unit mode needs unit costs; use cost mode".into(),
        ));
    }
    let fmin = declared_fmin(trace, opts);
    let fmax = opts.fmax.or(trace.header.fmax);
    let mut config = CoverConfig::new(mode);
    config.gamma = gamma_of(trace, opts, mode)?;
    config.fmin = fmin;
    config.extra_potentials = extra_potentials(opts, mode, fmax, &ground)?;
    let mut dc = DynamicCover::new(ground.clone(), config)?;
    let names: Vec<&str> = dc.potentials().iter().map(|p| p.name()).collect();
    let gamma = dc.params().gamma;
    let fmin_f = fmin.to_f64();
    let mut book = Book::new();
    let mut max_factor: f64 = 0.0;
    for ev in trace.function_events()? {
        let rec = dc.step(ev)?;
        let factor = match mode {
            MffMode::MutualAffinity => affinity_factor(gamma, rec.f_total.to_f64(), fmin_f),
            _ => greedy_factor(gamma, rec.fmax.to_f64().max(fmin_f), fmin_f),
        };
        max_factor = max_factor.max(factor);
        book.sum_g += rec.g_total.to_f64();
        let opt = opt_of(opts.oracle, dc.active(), &ground)?;
        let row = MetricsRow {
            t: rec.t,
            event: event_name(rec.kind).into(),
            target: rec.function.0,
            cost: rec.cost.to_f64(),
            opt: None,
            ratio: None,
            factor: Some(factor),
            competitive_ok: None,
            recourse: rec.recourse,
            cumulative_recourse: rec.cumulative_recourse,
            cumulative_upfront: rec.cumulative_upfront,
            sum_g: book.sum_g,
            potentials: potentials_field(&names, &rec.potentials),
            audit_failures: rec.audit_failures,
            feasible: true,
        };
        book.push(row, opt, rec.cost);
    }

    let totals = dc.totals().clone();
    let p = *dc.params();
    let sum_g = totals.sum_g.to_f64();
    let mut budgets = BTreeMap::new();
    let mut constants = BTreeMap::new();
    constants.insert("max_competitive_factor".into(), max_factor);
    let (measured, bound) = match mode {
        MffMode::UnitCost => (totals.upfront(), unit_recourse_bound(gamma, sum_g, p.fmin)),
        MffMode::CostRatio => {
            let PotentialSpec::PowerLaw(h) = dc.potentials()[0] else {
                unreachable!("cost mode audits h")
            };
            constants.insert("delta".into(), h.delta);
            constants.insert("epsilon".into(), h.epsilon);
            let b = power_law_budget(&h, sum_g, p.fmin, p.cmin, p.cmax);
            budgets.insert("h".into(), b);
            (totals.recourse, b)
        }
        MffMode::MutualAffinity => (
            totals.upfront(),
            affinity_recourse_bound(gamma, sum_g, p.fmin),
        ),
    };
    if mode == MffMode::UnitCost {
        let tsallis = &dc.tallies()[0];
        budgets.insert(
            "tsallis".into(),
            tsallis.insert_budget / tsallis.move_decrease,
        );
    }
    if let Some(PotentialSpec::Shannon { fmax, .. }) =
        dc.potentials().iter().find(|s| s.name() == "shannon")
    {
        budgets.insert(
            "shannon".into(),
            shannon_budget(gamma, sum_g, p.fmin, *fmax, p.cmin, p.cmax),
        );
    }
    let audits: Vec<PotentialSummary> = dc.tallies().iter().map(PotentialSummary::from).collect();
    Ok(finish(
        opts.mode,
        trace,
        book,
        FinishParts {
            gamma,
            fmin: p.fmin,
            total_recourse: totals.recourse,
            upfront: totals.upfront(),
            gamma_moves: totals.gamma_moves,
            swaps: totals.swaps,
            probes: None,
            sum_g_inserted: totals.sum_g_inserted.to_f64(),
            measured,
            bound: Some(bound),
            audits,
            budgets,
            constants,
        },
    ))
}

struct FinishParts {
    gamma: f64,
    fmin: f64,
    total_recourse: usize,
    upfront: usize,
    gamma_moves: usize,
    swaps: usize,
    probes: Option<usize>,
    sum_g_inserted: f64,
    measured: usize,
    bound: Option<f64>,
    audits: Vec<PotentialSummary>,
    budgets: BTreeMap<String, f64>,
    constants: BTreeMap<String, f64>,
}

fn finish(mode: RunMode, trace: &Trace, book: Book, p: FinishParts) -> RunOutput {
    let audit_failures: usize = p.audits.iter().map(|a| a.failed).sum();
    let recourse_ok = p.bound.is_none_or(|b| p.measured as f64 <= b);
    let passed = audit_failures == 0 && book.violations == 0 && book.infeasible == 0 && recourse_ok;
    let summary = RunSummary {
        mode,
        events: trace.events.len(),
        gamma: p.gamma,
        fmin: p.fmin,
        total_recourse: p.total_recourse,
        upfront_recourse: p.upfront,
        gamma_moves: p.gamma_moves,
        swaps: p.swaps,
        probes: p.probes,
        sum_g: book.sum_g,
        sum_g_inserted: p.sum_g_inserted,
        recourse_measured: p.measured,
        recourse_bound: p.bound,
        recourse_ok,
        competitive_checked: book.checked,
        competitive_violations: book.violations,
        max_ratio: book.max_ratio,
        infeasible_steps: book.infeasible,
        audit_failures,
        audits: p.audits,
        budgets: p.budgets,
        constants: p.constants,
        passed,
    };
    RunOutput {
        rows: book.rows,
        summary,
    }
}

fn run_rjunta(trace: &Trace, opts: &RunOptions) -> Result<RunOutput, RunError> {
    let ground = trace.header.ground()?;
    let fmin = declared_fmin(trace, opts).to_f64();
    let mut state = JuntaState::new(ground.clone(), opts.seed);
    let mut book = Book::new();
    let mut max_r = 0usize;
    for ev in trace.function_events()? {
        let rec = state.step(ev)?;
        book.sum_g += rec.g_total.to_f64();
        let live: Vec<_> = state.functions().map(|(_, g)| g.clone()).collect();
        let r = live
            .iter()
            .filter_map(|g| g.junta_arity())
            .max()
            .unwrap_or(0);
        max_r = max_r.max(r);
        let sum = crate::function::SubmodularFunction::sum(ground.len(), live.clone())?;
        let opt = opt_of(opts.oracle, &sum, &ground)?;
        let row = MetricsRow {
            t: rec.t,
            event: event_name(rec.kind).into(),
            target: rec.function.0,
            cost: rec.cost.to_f64(),
            opt: None,
            ratio: None,
            factor: None,
            competitive_ok: None,
            recourse: rec.recourse,
            cumulative_recourse: rec.cumulative_recourse,
            cumulative_upfront: rec.cumulative_recourse,
            sum_g: book.sum_g,
            potentials: String::new(),
            audit_failures: 0,
            feasible: state.check_invariants(),
        };
        book.push(row, opt, rec.cost);
    }
    let totals = state.totals().clone();
    let mut constants = BTreeMap::new();
    constants.insert("max_arity".into(), max_r as f64);
    let sum_g = totals.sum_g.to_f64();
    Ok(finish(
        RunMode::Rjunta,
        trace,
        book,
        FinishParts {
            gamma: 0.0,
            fmin,
            total_recourse: totals.recourse,
            upfront: totals.recourse,
            gamma_moves: 0,
            swaps: 0,
            probes: Some(totals.probes),
            sum_g_inserted: sum_g,
            measured: totals.probes,
            bound: Some(sum_g / fmin),
            audits: Vec::new(),
            budgets: BTreeMap::new(),
            constants,
        },
    ))
}

fn run_combiner(trace: &Trace, opts: &RunOptions) -> Result<RunOutput, RunError> {
    let ground = trace.header.ground()?;
    let fmin = declared_fmin(trace, opts);
    let mode = if ground.is_unit() {
        MffMode::UnitCost
    } else {
        MffMode::CostRatio
    };
    let mut config = CoverConfig::new(mode);
    config.gamma = gamma_of(trace, opts, mode)?;
    config.fmin = fmin;
    let f_total = trace
        .header
        .f_total
        .ok_or_else(|| RunError::Config("combiner needs a declared f_total".into()))?;
    let mut router = BucketRouter::new(ground.clone(), config, f_total, opts.seed)?;
    let mut book = Book::new();
    let mut child_recourse = 0usize;
    let mut max_factor: f64 = 0.0;
    for ev in trace.function_events()? {
        let g_total = match &ev.action {
            crate::dynamic::Action::Insert(_, g) => g.total(),
            crate::dynamic::Action::Delete(id) => {
                let live = router.general().active().get(*id).map(|g| g.total());
                live.or_else(|| {
                    (0..router.levels())
                        .filter_map(|l| router.bucket(l))
                        .find_map(|b| b.functions().find(|(i, _)| i == id).map(|(_, g)| g.total()))
                })
                .unwrap_or(Rational::ZERO)
            }
        };
        let rec = router.step(ev)?;
        child_recourse += rec.child_recourse;
        book.sum_g += g_total.to_f64();
        max_factor = max_factor.max(rec.factor);
        let mut live: Vec<_> = router
            .general()
            .active()
            .iter()
            .map(|(_, g)| g.clone())
            .collect();
        for l in 0..router.levels() {
            live.extend(
                router
                    .bucket(l)
                    .expect("level exists")
                    .functions()
                    .map(|(_, g)| g.clone()),
            );
        }
        let sum = crate::function::SubmodularFunction::sum(ground.len(), live)?;
        let opt = opt_of(opts.oracle, &sum, &ground)?;
        let row = MetricsRow {
            t: rec.t,
            event: event_name(rec.kind).into(),
            target: rec.function.0,
            cost: rec.cost.to_f64(),
            opt: None,
            ratio: None,
            factor: Some(rec.factor),
            competitive_ok: None,
            recourse: rec.recourse,
            cumulative_recourse: rec.cumulative_recourse,
            cumulative_upfront: child_recourse,
            sum_g: book.sum_g,
            potentials: String::new(),
            audit_failures: 0,
            feasible: router.covers_all(),
        };
        book.push(row, opt, rec.cost);
    }
    let total = book.rows.last().map_or(0, |r| r.cumulative_recourse);
    let mut constants = BTreeMap::new();
    constants.insert("max_competitive_factor".into(), max_factor);
    constants.insert("levels".into(), f64::from(router.levels()));
    constants.insert(
        "general_used".into(),
        f64::from(u8::from(router.general_used())),
    );
    let audits = router
        .general()
        .tallies()
        .iter()
        .map(PotentialSummary::from)
        .collect();
    Ok(finish(
        RunMode::Combiner,
        trace,
        book,
        FinishParts {
            gamma: router.general().params().gamma,
            fmin: fmin.to_f64(),
            total_recourse: total,
            upfront: child_recourse,
            gamma_moves: router.general().totals().gamma_moves,
            swaps: router.general().totals().swaps,
            probes: None,
            sum_g_inserted: 0.0,
            measured: total,
            bound: Some(child_recourse as f64),
            audits,
            budgets: BTreeMap::new(),
            constants,
        },
    ))
}

fn run_tree(trace: &Trace, opts: &RunOptions) -> Result<RunOutput, RunError> {
    let metric = trace
        .header
        .metric()?
        .ok_or_else(|| RunError::Config("tree modes need a metric trace".into()))?;
    let mode = if opts.mode == RunMode::Mst {
        TreeMode::Mst
    } else {
        TreeMode::Steiner
    };
    let gamma = gamma_of(trace, opts, MffMode::CostRatio)?;
    let mut tm = TreeMaintainer::with_gamma(metric.clone(), mode, gamma)?;
    let g = gamma.to_f64();
    let factor = match mode {
        TreeMode::Mst => greedy_factor(g, 1.0, 1.0),
        TreeMode::Steiner => 4.0 * g,
    };
    let mut book = Book::new();
    let mut budget_ok = true;
    for ev in &trace.events {
        let rec = match *ev {
            TraceEvent::Arrive { t, vertex } => tm.arrive(t, vertex)?,
            TraceEvent::Depart { t, vertex } => tm.depart(t, vertex)?,
            _ => {
                return Err(RunError::Config(
                    "tree modes take vertex events only".into(),
                ))
            }
        };
        book.sum_g += match ev {
            TraceEvent::Arrive { .. } => 1.0,
            _ => 0.0,
        };
        budget_ok &= rec.cumulative_recourse as f64 <= tm.recourse_budget();
        let terminals: Vec<usize> = rec.terminals.clone();
        let opt = match opts.oracle {
            OracleKind::None => None,
            _ if terminals.is_empty() => Some((Rational::ZERO, true)),
            _ => Some(match mode {
                TreeMode::Mst => (exact_mst(&metric, &terminals).cost, true),
                TreeMode::Steiner => (exact_steiner(&metric, &terminals)?.cost, true),
            }),
        };
        let row = MetricsRow {
            t: rec.t,
            event: match rec.event {
                crate::trees::VertexEvent::Arrive => "arrive".into(),
                crate::trees::VertexEvent::Depart => "depart".into(),
            },
            target: rec.vertex as u64,
            cost: rec.cost.to_f64(),
            opt: None,
            ratio: None,
            factor: Some(factor),
            competitive_ok: None,
            recourse: rec.recourse,
            cumulative_recourse: rec.cumulative_recourse,
            cumulative_upfront: 2 * tm.totals().joins,
            sum_g: book.sum_g,
            potentials: format!("h={}", rec.potential),
            audit_failures: rec.audit_failures,
            feasible: tm.is_valid_tree(),
        };
        book.push(row, opt, rec.cost);
    }
    let totals = tm.totals().clone();
    let h = tm.power_law();
    let budget = tm.recourse_budget();
    let d = metric.aspect_ratio();
    let mut constants = BTreeMap::new();
    constants.insert("competitive_factor".into(), factor);
    constants.insert("delta".into(), h.delta);
    constants.insert("epsilon".into(), h.epsilon);
    constants.insert("aspect_ratio".into(), d);
    let events = trace.events.len().max(1) as f64;
    constants.insert("c_prime".into(), budget / (events * d.ln().max(1.0)));
    let mut budgets = BTreeMap::new();
    budgets.insert("h".into(), budget);
    let mut out = finish(
        opts.mode,
        trace,
        book,
        FinishParts {
            gamma: g,
            fmin: 1.0,
            total_recourse: totals.recourse,
            upfront: 2 * totals.joins,
            gamma_moves: totals.gamma_moves,
            swaps: totals.swaps,
            probes: None,
            sum_g_inserted: totals.arrivals as f64,
            measured: totals.recourse,
            bound: Some(budget),
            audits: vec![PotentialSummary::from(tm.tally())],
            budgets,
            constants,
        },
    );
    out.summary.recourse_ok &= budget_ok;
    out.summary.passed &= budget_ok;
    Ok(out)
}

pub fn write_metrics<W: Write>(rows: &[MetricsRow], w: W) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_metrics<R: Read>(r: R) -> Result<Vec<MetricsRow>, csv::Error> {
    csv::Reader::from_reader(r).deserialize().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotPoint {
    pub series: &'static str,
    pub x: f64,
    pub y: f64,
}

/// Cumulative recourse against `Σ g_t(𝒩)`, and the competitive ratio against time.
pub fn plot_data(rows: &[MetricsRow]) -> Vec<PlotPoint> {
    let mut out: Vec<PlotPoint> = rows
        .iter()
        .map(|r| PlotPoint {
            series: "recourse_vs_sum_g",
            x: r.sum_g,
            y: r.cumulative_recourse as f64,
        })
        .collect();
    out.extend(rows.iter().filter_map(|r| {
        r.ratio.map(|y| PlotPoint {
            series: "ratio_vs_t",
            x: r.t as f64,
            y,
        })
    }));
    out
}

pub fn write_plot_data<W: Write>(points: &[PlotPoint], w: W) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    for p in points {
        out.serialize(p)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{generate, GenKind, GenParams};

    #[test]
    fn gamma_tokens() {
        assert!((parse_gamma("e2").unwrap().to_f64() - E * E).abs() < 1e-11);
        assert!((parse_gamma("e").unwrap().to_f64() - E).abs() < 1e-11);
        assert_eq!(parse_gamma("5/2").unwrap(), Rational::new(5, 2));
        assert!(parse_gamma("1").is_err());
        assert!(parse_gamma("x").is_err());
    }

    #[test]
    fn every_mode_runs_on_its_trace_family() {
        let cases = [
            (RunMode::Unit, GenKind::Hvc),
            (RunMode::Cost, GenKind::Coverage),
            (RunMode::Affinity, GenKind::Coverage),
            (RunMode::Rjunta, GenKind::Junta),
            (RunMode::Combiner, GenKind::Mixed),
            (RunMode::Mst, GenKind::MetricMst),
            (RunMode::Steiner, GenKind::MetricSteiner),
        ];
        for (mode, kind) in cases {
            let trace = generate(&GenParams::new(kind, 7, 25, 11)).unwrap();
            let mut opts = RunOptions::new(mode);
            opts.oracle = OracleKind::Brute;
            let out = run_trace(&trace, &opts).unwrap();
            assert_eq!(out.rows.len(), trace.events.len(), "{mode}");
            assert_eq!(out.summary.infeasible_steps, 0, "{mode}");
            assert_eq!(out.summary.competitive_violations, 0, "{mode}");
        }
    }

    #[test]
    fn metrics_csv_round_trip() {
        let trace = generate(&GenParams::new(GenKind::Hvc, 6, 15, 1)).unwrap();
        let mut opts = RunOptions::new(RunMode::Unit);
        opts.oracle = OracleKind::Brute;
        opts.audit = vec![AuditChoice::All];
        let out = run_trace(&trace, &opts).unwrap();
        let mut buf = Vec::new();
        write_metrics(&out.rows, &mut buf).unwrap();
        assert_eq!(read_metrics(&buf[..]).unwrap(), out.rows);
        assert!(out.rows[0].potentials.contains("shannon="));
        let pts = plot_data(&out.rows);
        assert!(pts.iter().any(|p| p.series == "ratio_vs_t"));
    }

    #[test]
    fn mismatched_modes_are_rejected() {
        let hvc = generate(&GenParams::new(GenKind::Hvc, 5, 10, 1)).unwrap();
        assert!(run_trace(&hvc, &RunOptions::new(RunMode::Mst)).is_err());
        let mut costly = GenParams::new(GenKind::Hvc, 5, 10, 1);
        costly.cost_spread = 5.0;
        assert!(run_trace(&generate(&costly).unwrap(), &RunOptions::new(RunMode::Unit)).is_err());
        let mut opts = RunOptions::new(RunMode::Unit);
        opts.audit = vec![AuditChoice::Sqrt];
        assert!(run_trace(&hvc, &opts).is_err());
    }
}
