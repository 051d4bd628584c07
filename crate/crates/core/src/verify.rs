//! Exhaustive structural checks and value bounds for small ground sets.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::rational::Rational;
use crate::set::ElementSet;
use crate::SetFunction;

/// Largest ground set the exhaustive verifiers accept.
pub const VERIFY_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueBounds {
    pub fmax: Rational,
    pub fmin: Rational,
}

/// All `2^n` values, indexed by bitmask.
fn value_table<F: SetFunction + ?Sized>(f: &F) -> Result<Vec<Rational>, CoreError> {
    let n = f.ground_size();
    if n > VERIFY_CAP {
        return Err(CoreError::VerificationCapExceeded { n, cap: VERIFY_CAP });
    }
    Ok((0u64..1 << n)
        .map(|m| f.eval(&ElementSet::from_mask(m)))
        .collect())
}

/// Monotone and submodular, checked through single-element marginals:
/// `f(e | S) ≥ 0` and `f(e | S) ≥ f(e | S + x)` for all `S` and `e, x ∉ S`.
pub fn verify_submodular<F: SetFunction + ?Sized>(f: &F) -> Result<bool, CoreError> {
    let v = value_table(f)?;
    let n = f.ground_size();
    for s in 0usize..1 << n {
        for e in (0..n).filter(|e| s >> e & 1 == 0) {
            let gain = v[s | 1 << e] - v[s];
            if gain.is_negative() {
                return Ok(false);
            }
            for x in (0..n).filter(|&x| x != e && s >> x & 1 == 0) {
                let t = s | 1 << x;
                if v[t | 1 << e] - v[t] > gain {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Nonnegative third derivatives: `I(x; y | S) ≥ I(x; y | S + z)` for all
/// distinct `x, y, z ∉ S`.
pub fn verify_3increasing<F: SetFunction + ?Sized>(f: &F) -> Result<bool, CoreError> {
    let v = value_table(f)?;
    let n = f.ground_size();
    let mutual = |s: usize, x: usize, y: usize| {
        v[s | 1 << x] + v[s | 1 << y] - v[s | 1 << x | 1 << y] - v[s]
    };
    for s in 0usize..1 << n {
        let outside: Vec<usize> = (0..n).filter(|e| s >> e & 1 == 0).collect();
        for (i, &x) in outside.iter().enumerate() {
            for &y in &outside[i + 1..] {
                let base = mutual(s, x, y);
                for &z in outside.iter().filter(|&&z| z != x && z != y) {
                    if mutual(s | 1 << z, x, y) > base {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// `fmax` is the largest singleton value. `fmin` is `declared` when given,
/// otherwise the exact smallest nonzero marginal (small ground sets only).
pub fn bounds_of<F: SetFunction + ?Sized>(
    f: &F,
    declared_fmin: Option<Rational>,
) -> Result<ValueBounds, CoreError> {
    let n = f.ground_size();
    let fmax = (0..n)
        .map(|e| f.eval(&ElementSet::singleton(e)))
        .max()
        .unwrap_or(Rational::ZERO);
    if !fmax.is_positive() {
        return Err(CoreError::DegenerateFunction);
    }
    let fmin = match declared_fmin {
        Some(d) if d.is_positive() => d,
        Some(d) => {
            return Err(CoreError::InvalidFunction(format!(
                "declared fmin {d} is not positive"
            )))
        }
        None => {
            let v = value_table(f)?;
            let mut best: Option<Rational> = None;
            for s in 0usize..1 << n {
                for e in (0..n).filter(|e| s >> e & 1 == 0) {
                    let gain = v[s | 1 << e] - v[s];
                    if gain.is_positive() && best.is_none_or(|b| gain < b) {
                        best = Some(gain);
                    }
                }
            }
            best.expect("a positive singleton is a positive marginal")
        }
    };
    Ok(ValueBounds { fmax, fmin })
}
