//! Potential functions over permutation states and per-event audits of the
//! inequalities that bound recourse.
//!
//! Values are computed in `f64` from the exact cached marginals; audits
//! compare with a relative tolerance of `1e-9`.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::PotentialError;
use crate::permutation::{MffMode, Snapshot};

pub const AUDIT_TOLERANCE: f64 = 1e-9;

/// `h(x) = x^{1-δ} / (1-δ)` together with its `ε_γ = γ^δ (1-δ) - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub delta: f64,
    pub epsilon: f64,
}

impl PowerLaw {
    /// Validates the shape requirements on `h` over a log-spaced grid.
    pub fn new(delta: f64, gamma: f64) -> Result<Self, PotentialError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(PotentialError::InvalidH(format!(
                "delta {delta} outside (0, 1)"
            )));
        }
        let epsilon = gamma.powf(delta) * (1.0 - delta) - 1.0;
        let h = PowerLaw { delta, epsilon };
        h.check_grid(gamma)?;
        Ok(h)
    }

    /// `δ = 1 / (ln(cmax/cmin) + 1)`, capped at `1/2`.
    pub fn for_cost_spread(spread: f64, gamma: f64) -> Result<Self, PotentialError> {
        let delta = (1.0 / (spread.ln() + 1.0)).min(0.5);
        Self::new(delta, gamma)
    }

    pub fn h(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            x.powf(1.0 - self.delta) / (1.0 - self.delta)
        }
    }

    fn dh(&self, x: f64) -> f64 {
        x.powf(-self.delta)
    }

    fn check_grid(&self, gamma: f64) -> Result<(), PotentialError> {
        let fail =
            |what: &str, x: f64| Err(PotentialError::InvalidH(format!("{what} fails at x = {x}")));
        if self.h(0.0) != 0.0 {
            return fail("h(0) = 0", 0.0);
        }
        if self.epsilon <= 0.0 {
            return Err(PotentialError::InvalidH(format!(
                "epsilon {} is not positive",
                self.epsilon
            )));
        }
        if self.epsilon < self.delta * (1.0 - self.delta) {
            return Err(PotentialError::InvalidH(format!(
                "epsilon {} below delta(1-delta) = {}",
                self.epsilon,
                self.delta * (1.0 - self.delta)
            )));
        }
        let grid: Vec<f64> = (-60..=60).map(|k| 10f64.powf(k as f64 / 10.0)).collect();
        for w in grid.windows(3) {
            let (a, b, c) = (self.h(w[0]), self.h(w[1]), self.h(w[2]));
            if !(a <= b && b <= c) {
                return fail("monotonicity", w[1]);
            }
            let chord = a + (c - a) * (w[1] - w[0]) / (w[2] - w[0]);
            if b < chord * (1.0 - 1e-12) {
                return fail("concavity", w[1]);
            }
        }
        for &x in &grid {
            if x * self.dh(x / gamma) < (1.0 + self.epsilon) * self.h(x) * (1.0 - 1e-12) {
                return fail("x h'(x/γ) ≥ (1+ε) h(x)", x);
            }
            for &y in &[0.5, 1.0, 2.0, 10.0] {
                if y * self.h(x / y) > 2.0 * y * self.h(x / (2.0 * y)) * (1.0 + 1e-12) {
                    return fail("monotonicity of y h(x/y)", x);
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialSpec {
    /// `Σ mff^α` over unit-cost values.
    Tsallis { alpha: f64 },
    /// `Σ c · h(mff)` over cost-ratio values.
    PowerLaw(PowerLaw),
    /// `Σ c · √mff` over mutual-affinity values.
    Sqrt,
    /// `Σ m' ln(c'/m')` with marginals scaled by `1/(e·fmax)` and costs by `1/cmin`.
    Shannon { cmin: f64, fmax: f64 },
}

impl PotentialSpec {
    /// Tsallis with `α = 1 / ln γ`.
    pub fn tsallis_for(gamma: f64) -> Self {
        PotentialSpec::Tsallis {
            alpha: 1.0 / gamma.ln(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PotentialSpec::Tsallis { .. } => "tsallis",
            PotentialSpec::PowerLaw(_) => "h",
            PotentialSpec::Sqrt => "sqrt",
            PotentialSpec::Shannon { .. } => "shannon",
        }
    }

    pub fn supports(&self, mode: MffMode) -> bool {
        match self {
            PotentialSpec::Tsallis { .. } => mode == MffMode::UnitCost,
            PotentialSpec::PowerLaw(_) => mode == MffMode::CostRatio,
            PotentialSpec::Sqrt => mode == MffMode::MutualAffinity,
            PotentialSpec::Shannon { .. } => mode != MffMode::MutualAffinity,
        }
    }

    pub fn evaluate(&self, mode: MffMode, s: &Snapshot) -> Result<f64, PotentialError> {
        if !self.supports(mode) {
            return Err(PotentialError::IncompatibleMode {
                potential: self.name(),
                mode,
            });
        }
        Ok(self.evaluate_unchecked(s))
    }

    fn evaluate_unchecked(&self, s: &Snapshot) -> f64 {
        let terms = s.mff.iter().zip(&s.marginal).zip(&s.cost);
        match *self {
            PotentialSpec::Tsallis { alpha } => {
                s.mff.iter().map(|m| m.to_f64().max(0.0).powf(alpha)).sum()
            }
            PotentialSpec::PowerLaw(h) => {
                terms.map(|((m, _), c)| c.to_f64() * h.h(m.to_f64())).sum()
            }
            PotentialSpec::Sqrt => terms
                .map(|((m, _), c)| c.to_f64() * m.to_f64().max(0.0).sqrt())
                .sum(),
            PotentialSpec::Shannon { cmin, fmax } => terms
                .filter(|((_, g), _)| g.is_positive())
                .map(|((_, g), c)| {
                    let m = g.to_f64() / (E * fmax);
                    m * (c.to_f64() / cmin / m).ln()
                })
                .sum(),
        }
    }

    /// Largest allowed increase when a function with total value `g_total` arrives.
    pub fn insert_budget(&self, g_total: f64, p: &AuditParams) -> f64 {
        match *self {
            PotentialSpec::Tsallis { alpha } => g_total * p.fmin.powf(alpha - 1.0),
            PotentialSpec::PowerLaw(h) => g_total / p.fmin * p.cmax * h.h(p.fmin / p.cmax),
            PotentialSpec::Sqrt => g_total / p.fmin.sqrt(),
            PotentialSpec::Shannon { cmin, fmax } => {
                let scale = E * fmax;
                (g_total / scale) * (p.cmax / cmin / (p.fmin / scale)).ln()
            }
        }
    }

    /// Guaranteed decrease of every γ-move.
    pub fn move_decrease(&self, p: &AuditParams) -> f64 {
        let gamma = p.gamma;
        match *self {
            PotentialSpec::Tsallis { alpha } => {
                (gamma / (E * gamma.ln()) - 1.0) * p.fmin.powf(alpha)
            }
            PotentialSpec::PowerLaw(h) => h.epsilon * p.cmin * h.h(p.fmin / p.cmin),
            PotentialSpec::Sqrt => (gamma.sqrt() / 2.0 - 1.0) * p.fmin.sqrt(),
            PotentialSpec::Shannon { fmax, .. } => p.fmin / (E * fmax) * (gamma / E).ln(),
        }
    }

    /// Preconditions of the potential on one state: for Shannon, scaled costs
    /// at least 1 and scaled marginals at most `1/e`.
    pub fn scaling_holds(&self, s: &Snapshot) -> bool {
        match *self {
            PotentialSpec::Shannon { cmin, fmax } => {
                s.marginal.iter().zip(&s.cost).all(|(m, c)| {
                    c.to_f64() / cmin >= 1.0 - 1e-12 && m.to_f64() <= fmax * (1.0 + 1e-12)
                })
            }
            _ => true,
        }
    }
}

/// Run-level constants the budgets depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditParams {
    pub gamma: f64,
    pub fmin: f64,
    pub cmin: f64,
    pub cmax: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum AtomicEvent {
    Insert {
        g_total: f64,
    },
    Delete,
    Swap,
    GammaMove,
    /// Tree shortcut or Steiner-vertex removal.
    Cleanup,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyAudit {
    pub potential: &'static str,
    pub event: AtomicEvent,
    pub before: f64,
    pub after: f64,
    /// Largest allowed `after - before`.
    pub bound: f64,
    pub pass: bool,
}

impl PropertyAudit {
    pub fn delta(&self) -> f64 {
        self.after - self.before
    }
}

/// Checks one atomic event against the potential's inequality for that event kind.
pub fn audit_event(
    spec: &PotentialSpec,
    before: &Snapshot,
    after: &Snapshot,
    event: AtomicEvent,
    params: &AuditParams,
) -> PropertyAudit {
    let (b, a) = (
        spec.evaluate_unchecked(before),
        spec.evaluate_unchecked(after),
    );
    let bound = match event {
        AtomicEvent::Insert { g_total } => spec.insert_budget(g_total, params),
        AtomicEvent::Delete | AtomicEvent::Swap | AtomicEvent::Cleanup => 0.0,
        AtomicEvent::GammaMove => -spec.move_decrease(params),
    };
    let tol = AUDIT_TOLERANCE * 1f64.max(b.abs()).max(a.abs());
    let pass = a - b <= bound + tol && spec.scaling_holds(before) && spec.scaling_holds(after);
    PropertyAudit {
        potential: spec.name(),
        event,
        before: b,
        after: a,
        bound,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::Rational;

    fn snap(mff: &[i64], costs: &[i64]) -> Snapshot {
        Snapshot {
            order: (0..mff.len()).collect(),
            mff: mff.iter().map(|&m| Rational::from(m)).collect(),
            marginal: mff
                .iter()
                .zip(costs)
                .map(|(&m, &c)| Rational::from(m * c))
                .collect(),
            cost: costs.iter().map(|&c| Rational::from(c)).collect(),
        }
    }

    fn params(gamma: f64) -> AuditParams {
        AuditParams {
            gamma,
            fmin: 1.0,
            cmin: 1.0,
            cmax: 1.0,
        }
    }

    #[test]
    fn sqrt_potential_breaks_with_costs() {
        use std::sync::Arc;

        use crate::active::{ActiveSet, FunctionId};
        use crate::function::SubmodularFunction;
        use crate::ground::GroundSet;
        use crate::permutation::PermutationEngine;

        let ground = GroundSet::new(vec![Rational::from(100i64), Rational::ONE]).unwrap();
        let mut f = ActiveSet::new(2);
        f.insert(
            FunctionId(0),
            Arc::new(SubmodularFunction::indicator(2, vec![0]).unwrap()),
        )
        .unwrap();
        let mut engine = PermutationEngine::new(MffMode::MutualAffinity, &ground);
        engine.rebuild(&f);
        let before = PotentialSpec::Sqrt
            .evaluate(MffMode::MutualAffinity, &engine.snapshot())
            .unwrap();
        f.insert(
            FunctionId(1),
            Arc::new(SubmodularFunction::indicator(2, vec![0, 1]).unwrap()),
        )
        .unwrap();
        engine.rebuild(&f);
        let after = PotentialSpec::Sqrt
            .evaluate(MffMode::MutualAffinity, &engine.snapshot())
            .unwrap();
        let p = AuditParams {
            gamma: E * E,
            fmin: 1.0,
            cmin: 1.0,
            cmax: 100.0,
        };
        assert!(
            after - before > PotentialSpec::Sqrt.insert_budget(1.0, &p),
            "{before} -> {after}"
        );
    }

    #[test]
    fn tsallis_half_example() {
        let s = snap(&[4, 1, 0], &[1, 1, 1]);
        let phi = PotentialSpec::Tsallis { alpha: 0.5 }
            .evaluate(MffMode::UnitCost, &s)
            .unwrap();
        assert!((phi - 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_state_is_zero() {
        let s = snap(&[], &[]);
        let h = PowerLaw::for_cost_spread(10.0, E * E).unwrap();
        for spec in [
            PotentialSpec::Tsallis { alpha: 0.5 },
            PotentialSpec::PowerLaw(h),
            PotentialSpec::Sqrt,
            PotentialSpec::Shannon {
                cmin: 1.0,
                fmax: 1.0,
            },
        ] {
            assert_eq!(spec.evaluate_unchecked(&s), 0.0);
        }
    }

    #[test]
    fn incompatible_mode_is_rejected() {
        let s = snap(&[1], &[1]);
        assert!(PotentialSpec::Sqrt.evaluate(MffMode::UnitCost, &s).is_err());
        assert!(PotentialSpec::Tsallis { alpha: 0.5 }
            .evaluate(MffMode::MutualAffinity, &s)
            .is_err());
    }

    #[test]
    fn tsallis_budgets() {
        let spec = PotentialSpec::Tsallis { alpha: 0.5 };
        assert!((spec.insert_budget(7.0, &params(E * E)) - 7.0).abs() < 1e-12);
        let gamma = E * E;
        let tsallis = PotentialSpec::tsallis_for(gamma);
        let expected = gamma / (E * gamma.ln()) - 1.0;
        assert!((tsallis.move_decrease(&params(gamma)) - expected).abs() < 1e-12);
    }

    #[test]
    fn power_law_epsilon_bounds() {
        for spread in [1.0, 2.0, 10.0, 100.0, 1000.0] {
            let h = PowerLaw::for_cost_spread(spread, E * E).unwrap();
            assert!(h.epsilon > 0.0);
            assert!(h.epsilon >= h.delta * (1.0 - h.delta));
            // the sharper claim ε ≥ δ does not hold for any δ in (0, 1)
            assert!(h.epsilon < h.delta);
        }
    }

    #[test]
    fn invalid_delta_is_rejected() {
        assert!(PowerLaw::new(1.0, E * E).is_err());
        assert!(PowerLaw::new(0.9, E * E).is_err());
    }

    #[test]
    fn deletion_audit_catches_increase() {
        let before = snap(&[1, 0], &[1, 1]);
        let after = snap(&[2, 0], &[1, 1]);
        let a = audit_event(
            &PotentialSpec::Tsallis { alpha: 0.5 },
            &before,
            &after,
            AtomicEvent::Delete,
            &params(E * E),
        );
        assert!(!a.pass);
        let a = audit_event(
            &PotentialSpec::Tsallis { alpha: 0.5 },
            &after,
            &before,
            AtomicEvent::Delete,
            &params(E * E),
        );
        assert!(a.pass);
    }

    #[test]
    fn shannon_flags_undeclared_fmax() {
        let s = snap(&[3], &[1]);
        assert!(!PotentialSpec::Shannon {
            cmin: 1.0,
            fmax: 2.0
        }
        .scaling_holds(&s));
        assert!(PotentialSpec::Shannon {
            cmin: 1.0,
            fmax: 3.0
        }
        .scaling_holds(&s));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn power_law_matches_formula(vals in prop::collection::vec((0i64..20, 1i64..9, 1i64..50), 0..12),
                                        spread in 1.0f64..1000.0) {
                let s = Snapshot {
                    order: (0..vals.len()).collect(),
                    mff: vals.iter().map(|&(m, d, _)| Rational::new(m as i128, d as i128)).collect(),
                    marginal: vals.iter().map(|&(m, d, c)| Rational::new((m * c) as i128, d as i128)).collect(),
                    cost: vals.iter().map(|&(_, _, c)| Rational::from(c)).collect(),
                };
                let h = PowerLaw::for_cost_spread(spread, E * E).unwrap();
                let delta = h.delta;
                let direct: f64 = vals.iter().map(|&(m, d, c)| {
                    let x = m as f64 / d as f64;
                    c as f64 * x.powf(1.0 - delta) / (1.0 - delta)
                }).sum();
                let got = PotentialSpec::PowerLaw(h).evaluate(MffMode::CostRatio, &s).unwrap();
                prop_assert!((got - direct).abs() <= 1e-9 * direct.max(1.0));
            }
        }
    }
}
