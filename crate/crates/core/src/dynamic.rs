//! The fully-dynamic driver: applies function arrivals and departures,
//! restabilizes the permutation, and keeps the recourse and audit books.

use std::f64::consts::E;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::active::{ActiveSet, FunctionId};
use crate::error::RunError;
use crate::function::SubmodularFunction;
use crate::ground::GroundSet;
use crate::permutation::{MffMode, Move, MoveCap, PermutationEngine, Snapshot};
use crate::potentials::{
    audit_event, AtomicEvent, AuditParams, PotentialSpec, PowerLaw, PropertyAudit,
};
use crate::rational::Rational;
use crate::set::ElementSet;
use crate::SetFunction;

/// Environment variable that overrides the γ-move circuit breaker.
pub const MOVE_CAP_ENV: &str = "DYNCOVER_MOVE_CAP";

/// Failures kept verbatim per potential; the rest are only counted.
const KEPT_FAILURES: usize = 20;

#[derive(Debug, Clone)]
pub enum Action {
    Insert(FunctionId, Arc<SubmodularFunction>),
    Delete(FunctionId),
}

#[derive(Debug, Clone)]
pub struct Event {
    pub t: usize,
    pub action: Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Insert,
    Delete,
}

/// `γ = e²` for the unit and cost-ratio modes, `γ = 5` for mutual affinity.
pub fn default_gamma(mode: MffMode) -> Rational {
    match mode {
        MffMode::UnitCost | MffMode::CostRatio => Rational::ceil_from_f64(E * E, 12),
        MffMode::MutualAffinity => Rational::from(5i64),
    }
}

/// The potential whose inequalities back the recourse bound of `mode`.
pub fn primary_potential(
    mode: MffMode,
    gamma: f64,
    spread: f64,
) -> Result<PotentialSpec, RunError> {
    Ok(match mode {
        MffMode::UnitCost => PotentialSpec::tsallis_for(gamma),
        MffMode::CostRatio => PotentialSpec::PowerLaw(PowerLaw::for_cost_spread(spread, gamma)?),
        MffMode::MutualAffinity => PotentialSpec::Sqrt,
    })
}

#[derive(Debug, Clone)]
pub struct CoverConfig {
    pub mode: MffMode,
    pub gamma: Rational,
    /// Lower bound on every positive marginal; checked against what the run observes.
    pub fmin: Rational,
    /// Extra potentials to audit besides the mode's primary one.
    pub extra_potentials: Vec<PotentialSpec>,
    /// Overrides the potential-derived γ-move cap.
    pub move_cap: Option<usize>,
}

impl CoverConfig {
    pub fn new(mode: MffMode) -> Self {
        CoverConfig {
            mode,
            gamma: default_gamma(mode),
            fmin: Rational::ONE,
            extra_potentials: Vec::new(),
            move_cap: std::env::var(MOVE_CAP_ENV)
                .ok()
                .and_then(|v| v.parse().ok()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub t: usize,
    pub kind: EventKind,
    pub function: FunctionId,
    pub g_total: Rational,
    pub solution: Vec<usize>,
    pub cost: Rational,
    pub f_total: Rational,
    pub fmax: Rational,
    /// `|S_{t-1} △ S_t|`.
    pub recourse: usize,
    pub cumulative_recourse: usize,
    /// Elements that joined the solution at any atomic event of this step.
    pub joins: usize,
    /// `2 ×` cumulative joins.
    pub cumulative_upfront: usize,
    pub swaps: usize,
    pub gamma_moves: usize,
    /// Potential values after the step, in the order of [`DynamicCover::potentials`].
    pub potentials: Vec<f64>,
    pub audit_failures: usize,
}

/// Running totals for one audited potential.
#[derive(Debug, Clone, Serialize)]
pub struct AuditTally {
    pub potential: &'static str,
    pub events: usize,
    pub failed: usize,
    pub failures: Vec<(usize, PropertyAudit)>,
    pub insert_budget: f64,
    pub move_decrease: f64,
    pub gamma_moves: usize,
}

impl AuditTally {
    pub(crate) fn new(spec: &PotentialSpec, params: &AuditParams) -> Self {
        AuditTally {
            potential: spec.name(),
            events: 0,
            failed: 0,
            failures: Vec::new(),
            insert_budget: 0.0,
            move_decrease: spec.move_decrease(params),
            gamma_moves: 0,
        }
    }

    pub(crate) fn record(&mut self, t: usize, a: PropertyAudit) {
        self.events += 1;
        match a.event {
            AtomicEvent::Insert { .. } => self.insert_budget += a.bound,
            AtomicEvent::GammaMove => self.gamma_moves += 1,
            _ => {}
        }
        if !a.pass {
            self.failed += 1;
            if self.failures.len() < KEPT_FAILURES {
                self.failures.push((t, a));
            }
        }
    }

    /// γ-moves times the guaranteed decrease never exceed the insertion budgets.
    pub fn budget_identity_holds(&self) -> bool {
        self.gamma_moves as f64 * self.move_decrease <= self.insert_budget * (1.0 + 1e-9) + 1e-9
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Totals {
    pub recourse: usize,
    pub joins: usize,
    pub swaps: usize,
    pub gamma_moves: usize,
    /// `Σ_t g_t(𝒩)` over every event, arrivals and departures.
    pub sum_g: Rational,
    /// `Σ_t g_t(𝒩)` over arrivals only.
    pub sum_g_inserted: Rational,
}

impl Totals {
    pub fn upfront(&self) -> usize {
        2 * self.joins
    }
}

/// Algorithm state for one run over a fixed ground set.
#[derive(Debug)]
pub struct DynamicCover {
    ground: GroundSet,
    config: CoverConfig,
    active: ActiveSet,
    engine: PermutationEngine,
    potentials: Vec<PotentialSpec>,
    params: AuditParams,
    tallies: Vec<AuditTally>,
    totals: Totals,
    solution: ElementSet,
}

impl DynamicCover {
    pub fn new(ground: GroundSet, config: CoverConfig) -> Result<Self, RunError> {
        if config.gamma <= Rational::ONE {
            return Err(RunError::Config(format!(
                "gamma must exceed 1, got {}",
                config.gamma
            )));
        }
        if !config.fmin.is_positive() {
            return Err(RunError::Config(format!(
                "fmin must be positive, got {}",
                config.fmin
            )));
        }
        let gamma = config.gamma.to_f64();
        let spread = (ground.cmax() / ground.cmin()).to_f64();
        let mut potentials = vec![primary_potential(config.mode, gamma, spread)?];
        for p in &config.extra_potentials {
            if !p.supports(config.mode) {
                return Err(RunError::Config(format!(
                    "potential {} does not apply in {:?} mode",
                    p.name(),
                    config.mode
                )));
            }
            if p.name() != potentials[0].name() {
                potentials.push(*p);
            }
        }
        let params = AuditParams {
            gamma,
            fmin: config.fmin.to_f64(),
            cmin: ground.cmin().to_f64(),
            cmax: ground.cmax().to_f64(),
        };
        let tallies = potentials
            .iter()
            .map(|p| AuditTally::new(p, &params))
            .collect();
        Ok(DynamicCover {
            active: ActiveSet::new(ground.len()),
            engine: PermutationEngine::new(config.mode, &ground),
            ground,
            config,
            potentials,
            params,
            tallies,
            totals: Totals::default(),
            solution: ElementSet::new(),
        })
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn config(&self) -> &CoverConfig {
        &self.config
    }

    pub fn active(&self) -> &ActiveSet {
        &self.active
    }

    pub fn engine(&self) -> &PermutationEngine {
        &self.engine
    }

    pub fn potentials(&self) -> &[PotentialSpec] {
        &self.potentials
    }

    pub fn params(&self) -> &AuditParams {
        &self.params
    }

    pub fn tallies(&self) -> &[AuditTally] {
        &self.tallies
    }

    pub fn totals(&self) -> &Totals {
        &self.totals
    }

    pub fn solution(&self) -> &ElementSet {
        &self.solution
    }

    fn move_cap(&self) -> MoveCap {
        let n = self.engine.len().max(1);
        let gamma_moves = self.config.move_cap.unwrap_or_else(|| {
            let spec = &self.potentials[0];
            let phi = spec
                .evaluate(self.config.mode, &self.engine.snapshot())
                .unwrap_or(0.0);
            let per_move = spec.move_decrease(&self.params);
            if per_move > 0.0 && phi.is_finite() {
                10 * (phi / per_move).ceil() as usize + 10
            } else {
                usize::MAX
            }
        });
        MoveCap {
            gamma_moves,
            swaps: 10 * n * n,
        }
    }

    fn audit(
        tallies: &mut [AuditTally],
        specs: &[PotentialSpec],
        params: &AuditParams,
        t: usize,
        before: &Snapshot,
        after: &Snapshot,
        ev: AtomicEvent,
    ) -> usize {
        let mut failed = 0;
        for (tally, spec) in tallies.iter_mut().zip(specs) {
            let a = audit_event(spec, before, after, ev, params);
            failed += usize::from(!a.pass);
            tally.record(t, a);
        }
        failed
    }

    fn validate(&self, ev: &Event) -> Result<(), RunError> {
        let invalid = |reason: String| Err(RunError::InvalidEvent { t: ev.t, reason });
        match &ev.action {
            Action::Insert(id, g) => {
                if self.active.contains(*id) {
                    return invalid(format!("function {id} is already live"));
                }
                if g.ground_size() != self.ground.len() {
                    return invalid(format!(
                        "function {id} has ground size {}, expected {}",
                        g.ground_size(),
                        self.ground.len()
                    ));
                }
            }
            Action::Delete(id) => {
                if !self.active.contains(*id) {
                    return invalid(format!("function {id} is not live"));
                }
            }
        }
        Ok(())
    }

    /// Applies one event and restabilizes. An invalid event leaves the state unchanged.
    pub fn step(&mut self, ev: Event) -> Result<StepRecord, RunError> {
        self.validate(&ev)?;
        let t = ev.t;
        let before = self.engine.snapshot();
        let (kind, id, g_total, atomic) = match ev.action {
            Action::Insert(id, g) => {
                let total = g.total();
                self.active.insert(id, g)?;
                (
                    EventKind::Insert,
                    id,
                    total,
                    AtomicEvent::Insert {
                        g_total: total.to_f64(),
                    },
                )
            }
            Action::Delete(id) => {
                let g = self.active.remove(id)?;
                (EventKind::Delete, id, g.total(), AtomicEvent::Delete)
            }
        };
        let (joined, _) = self.engine.rebuild(&self.active);
        let mut failures = Self::audit(
            &mut self.tallies,
            &self.potentials,
            &self.params,
            t,
            &before,
            &self.engine.snapshot(),
            atomic,
        );

        let cap = self.move_cap();
        let DynamicCover {
            engine,
            active,
            config,
            tallies,
            potentials,
            params,
            ..
        } = self;
        let log = engine.stabilize(active, config.gamma, cap, |out, b, a| {
            let ev = match out.mv {
                Move::Swap { .. } => AtomicEvent::Swap,
                Move::Gamma(_) => AtomicEvent::GammaMove,
            };
            failures += Self::audit(tallies, potentials, params, t, b, a, ev);
        })?;

        if let Some(observed) = self.engine.min_positive_marginal() {
            if observed < self.config.fmin {
                return Err(RunError::FminViolated {
                    declared: self.config.fmin,
                    observed,
                });
            }
        }
        let solution = self.engine.solution();
        if !self.active.covers(&solution) {
            return Err(RunError::Infeasible { t });
        }

        let recourse = solution.symmetric_difference_len(&self.solution);
        let joins = joined.len() + log.joined;
        self.solution = solution;
        let totals = &mut self.totals;
        totals.recourse += recourse;
        totals.joins += joins;
        totals.swaps += log.swaps;
        totals.gamma_moves += log.gamma_moves;
        totals.sum_g += g_total;
        if kind == EventKind::Insert {
            totals.sum_g_inserted += g_total;
        }

        let snap = self.engine.snapshot();
        let fmax = (0..self.ground.len())
            .map(|e| self.active.eval(&ElementSet::singleton(e)))
            .max()
            .unwrap_or(Rational::ZERO);
        Ok(StepRecord {
            t,
            kind,
            function: id,
            g_total,
            solution: self.solution.iter().collect(),
            cost: self.ground.cost_of(&self.solution),
            f_total: self.active.total(),
            fmax,
            recourse,
            cumulative_recourse: self.totals.recourse,
            joins,
            cumulative_upfront: self.totals.upfront(),
            swaps: log.swaps,
            gamma_moves: log.gamma_moves,
            potentials: self
                .potentials
                .iter()
                .map(|p| p.evaluate(self.config.mode, &snap).unwrap_or(f64::NAN))
                .collect(),
            audit_failures: failures,
        })
    }
}

/// `γ (ln(fmax/fmin) + 1)`, the per-step competitive factor of the unit and
/// cost-ratio modes.
pub fn greedy_factor(gamma: f64, fmax: f64, fmin: f64) -> f64 {
    gamma * ((fmax / fmin).ln() + 1.0)
}

/// Competitive constant of the mutual-affinity mode:
/// `γ² (2 log_γ(F/fmin) + 3) + √γ` with `F = f(𝒩)`.
pub fn affinity_factor(gamma: f64, f_total: f64, fmin: f64) -> f64 {
    let levels = ((f_total / fmin).ln() / gamma.ln()).max(0.0);
    gamma * gamma * (2.0 * levels + 3.0) + gamma.sqrt()
}

/// Unit-cost recourse bound `2 (e ln γ)/(γ − e ln γ) · Σ g_t(𝒩)/fmin`.
pub fn unit_recourse_bound(gamma: f64, sum_g: f64, fmin: f64) -> f64 {
    let el = E * gamma.ln();
    2.0 * el / (gamma - el) * sum_g / fmin
}

/// γ-move budget of the power-law potential:
/// `Σ g_t(𝒩)/(ε fmin) · (cmax/cmin) · h(fmin/cmax)/h(fmin/cmin)`.
pub fn power_law_budget(h: &PowerLaw, sum_g: f64, fmin: f64, cmin: f64, cmax: f64) -> f64 {
    sum_g / (h.epsilon * fmin) * (cmax / cmin) * h.h(fmin / cmax) / h.h(fmin / cmin)
}

/// Mutual-affinity recourse bound `2 · Σ g_t(𝒩)/√fmin · 2/(√fmin (√γ − 2))`.
pub fn affinity_recourse_bound(gamma: f64, sum_g: f64, fmin: f64) -> f64 {
    2.0 * sum_g / fmin.sqrt() * 2.0 / (fmin.sqrt() * (gamma.sqrt() - 2.0))
}

/// γ-move budget implied by the Shannon potential:
/// `Σ g_t(𝒩)/fmin · ln(cmax/cmin · e fmax/fmin) / ln(γ/e)`.
pub fn shannon_budget(gamma: f64, sum_g: f64, fmin: f64, fmax: f64, cmin: f64, cmax: f64) -> f64 {
    sum_g / fmin * (cmax / cmin * E * fmax / fmin).ln() / (gamma / E).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(n: usize, a: usize, b: usize) -> Arc<SubmodularFunction> {
        Arc::new(SubmodularFunction::indicator(n, vec![a, b]).unwrap())
    }

    fn insert(t: usize, id: u64, g: Arc<SubmodularFunction>) -> Event {
        Event {
            t,
            action: Action::Insert(FunctionId(id), g),
        }
    }

    #[test]
    fn zero_function_changes_nothing() {
        let mut dc =
            DynamicCover::new(GroundSet::unit(3), CoverConfig::new(MffMode::UnitCost)).unwrap();
        let zero = Arc::new(SubmodularFunction::modular(vec![Rational::ZERO; 3]).unwrap());
        let rec = dc.step(insert(0, 0, zero)).unwrap();
        assert_eq!(rec.recourse, 0);
        assert!(rec.solution.is_empty());
    }

    #[test]
    fn insert_then_delete_restores_requirement() {
        let mut dc =
            DynamicCover::new(GroundSet::unit(3), CoverConfig::new(MffMode::UnitCost)).unwrap();
        dc.step(insert(0, 0, edge(3, 0, 1))).unwrap();
        let rec = dc.step(insert(1, 1, edge(3, 1, 2))).unwrap();
        assert_eq!(rec.f_total, 2);
        let rec = dc
            .step(Event {
                t: 2,
                action: Action::Delete(FunctionId(1)),
            })
            .unwrap();
        assert_eq!(rec.f_total, 1);
        assert!(dc.active().covers(dc.solution()));
    }

    #[test]
    fn invalid_events_leave_state_alone() {
        let mut dc =
            DynamicCover::new(GroundSet::unit(3), CoverConfig::new(MffMode::UnitCost)).unwrap();
        dc.step(insert(0, 0, edge(3, 0, 1))).unwrap();
        let before = dc.solution().clone();
        assert!(matches!(
            dc.step(insert(1, 0, edge(3, 1, 2))),
            Err(RunError::InvalidEvent { t: 1, .. })
        ));
        assert!(matches!(
            dc.step(Event {
                t: 1,
                action: Action::Delete(FunctionId(9))
            }),
            Err(RunError::InvalidEvent { .. })
        ));
        assert!(matches!(
            dc.step(insert(1, 5, edge(4, 1, 2))),
            Err(RunError::InvalidEvent { .. })
        ));
        assert_eq!(dc.solution(), &before);
        assert_eq!(dc.active().len(), 1);
    }

    #[test]
    fn triangle_is_covered() {
        let mut dc =
            DynamicCover::new(GroundSet::unit(3), CoverConfig::new(MffMode::UnitCost)).unwrap();
        for (t, (a, b)) in [(0, 1), (1, 2), (0, 2)].into_iter().enumerate() {
            dc.step(insert(t, t as u64, edge(3, a, b))).unwrap();
        }
        assert!(dc.active().covers(dc.solution()));
        assert_eq!(dc.solution().len(), 2);
        assert!(dc
            .tallies()
            .iter()
            .all(|t| t.failed == 0 && t.budget_identity_holds()));
    }

    #[test]
    fn declared_fmin_is_enforced() {
        let mut cfg = CoverConfig::new(MffMode::UnitCost);
        cfg.fmin = Rational::from(2i64);
        let mut dc = DynamicCover::new(GroundSet::unit(3), cfg).unwrap();
        assert!(matches!(
            dc.step(insert(0, 0, edge(3, 0, 1))),
            Err(RunError::FminViolated { .. })
        ));
    }

    #[test]
    fn bound_formulas() {
        let gamma = E * E;
        // 2 · 2e / (e² − 2e) = 4 / (e − 2)
        assert!((unit_recourse_bound(gamma, 1.0, 1.0) - 4.0 / (E - 2.0)).abs() < 1e-12);
        assert!((affinity_recourse_bound(5.0, 1.0, 1.0) - 4.0 / (5f64.sqrt() - 2.0)).abs() < 1e-12);
        assert!((greedy_factor(2.0, E, 1.0) - 4.0).abs() < 1e-12);
        let h = PowerLaw::for_cost_spread(100.0, gamma).unwrap();
        let direct = 1.0 / h.epsilon * 100f64.powf(h.delta);
        assert!((power_law_budget(&h, 1.0, 1.0, 1.0, 100.0) - direct).abs() < 1e-9);
    }
}
