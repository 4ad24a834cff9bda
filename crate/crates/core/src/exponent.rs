//! The auxiliary function `E_q(pi, s) = -ln Tr[(sum_i pi_i S_i^{1/(1+s)})^{1+s}]`,
//! its finite-difference derivative, the scalar (commuting) reduction and a
//! grid-based concavity diagnostic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{check_s, mixed_power_state_weights, Channel, Prior};
use crate::error::{Error, Result};

/// Default finite-difference step for [`eq_derivative`].
pub const DERIVATIVE_STEP: f64 = 1e-4;

fn check_range(s: f64) -> Result<()> {
    check_s(s)?;
    if s > 1.0 {
        return Err(Error::InvalidParameter(format!("s = {s} exceeds 1")));
    }
    Ok(())
}

/// `E_q(pi, s)` in nats for `s` in `(-1, 1]`.
pub fn eq_aux(ch: &Channel, prior: &Prior, s: f64) -> Result<f64> {
    ch.check_prior(prior)?;
    eq_aux_weights(ch, prior.weights(), s)
}

pub(crate) fn eq_aux_weights(ch: &Channel, weights: &[f64], s: f64) -> Result<f64> {
    check_range(s)?;
    let a = mixed_power_state_weights(ch, weights, s)?;
    if s == 0.0 {
        return Ok(-a.trace().ln());
    }
    let q = 1.0 + s;
    let tr: f64 = a.eigh()?.psd_values()?.into_iter().map(|m| m.powf(q)).sum();
    Ok(-tr.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scheme {
    Forward,
    Central,
    Backward,
}

/// `dE_q/ds` by finite differences with one level of Richardson
/// extrapolation; one-sided at `s = 0` and near `s = 1`.
pub fn eq_derivative(ch: &Channel, prior: &Prior, s: f64) -> Result<f64> {
    eq_derivative_with_step(ch, prior, s, DERIVATIVE_STEP)
}

pub fn eq_derivative_with_step(ch: &Channel, prior: &Prior, s: f64, step: f64) -> Result<f64> {
    ch.check_prior(prior)?;
    check_range(s)?;
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("step {step} must be positive")));
    }
    let scheme = if s + step > 1.0 {
        Scheme::Backward
    } else if s == 0.0 || s - step <= -1.0 {
        Scheme::Forward
    } else {
        Scheme::Central
    };
    let f = |x: f64| eq_aux_weights(ch, prior.weights(), x);
    let diff = |h: f64| -> Result<f64> {
        Ok(match scheme {
            Scheme::Forward => (f(s + h)? - f(s)?) / h,
            Scheme::Backward => (f(s)? - f(s - h)?) / h,
            Scheme::Central => (f(s + h)? - f(s - h)?) / (2.0 * h),
        })
    };
    let coarse = diff(step)?;
    let fine = diff(step / 2.0)?;
    Ok(match scheme {
        Scheme::Central => (4.0 * fine - coarse) / 3.0,
        _ => 2.0 * fine - coarse,
    })
}

/// Classical Gallager function `-ln sum_j (sum_i pi_i p_i(j)^{1/(1+s)})^{1+s}`
/// for a row-stochastic transition matrix.
pub fn gallager_e0_scalar(transition: &[Vec<f64>], prior: &Prior, s: f64) -> Result<f64> {
    check_range(s)?;
    if transition.len() != prior.len() {
        return Err(Error::DimensionMismatch {
            expected: transition.len(),
            found: prior.len(),
            index: None,
        });
    }
    let outputs = transition.first().map_or(0, Vec::len);
    for (i, row) in transition.iter().enumerate() {
        if row.len() != outputs {
            return Err(Error::DimensionMismatch {
                expected: outputs,
                found: row.len(),
                index: Some(i),
            });
        }
        if let Some(&x) = row.iter().find(|&&x| !(x >= 0.0)) {
            return Err(Error::InvalidParameter(format!("row {i} has entry {x}")));
        }
        let total: f64 = row.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("row {i} sums to {total}")));
        }
    }
    let p = 1.0 / (1.0 + s);
    let q = 1.0 + s;
    let mut total = 0.0;
    for j in 0..outputs {
        let inner: f64 = transition
            .iter()
            .zip(prior.weights())
            .filter(|(_, &w)| w > 0.0)
            .map(|(row, &w)| w * row[j].powf(p))
            .sum();
        total += inner.powf(q);
    }
    Ok(-total.ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityReport {
    pub s_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Nonuniform-grid second differences; equal to `v[k-1] - 2 v[k] + v[k+1]`
    /// on a uniform grid.
    pub second_differences: Vec<f64>,
    pub max_second_difference: f64,
    /// Largest decrease `v[k] - v[k+1]`, or 0 when the values are nondecreasing.
    pub monotone_violation: f64,
}

impl ConcavityReport {
    /// `1 + max |E_q|` over the grid.
    pub fn scale(&self) -> f64 {
        1.0 + self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_concave(&self, tol: f64) -> bool {
        self.max_second_difference <= tol * self.scale()
    }
}

pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2);
    let n = (points - 1) as f64;
    (0..points)
        .map(|k| if k + 1 == points { hi } else { lo + (hi - lo) * k as f64 / n })
        .collect()
}

pub fn concavity_scan(ch: &Channel, prior: &Prior, grid: &[f64]) -> Result<ConcavityReport> {
    ch.check_prior(prior)?;
    if grid.len() < 3 {
        return Err(Error::InvalidParameter("concavity grid needs at least 3 points".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("concavity grid must be strictly increasing".into()));
    }
    for &s in grid {
        check_range(s)?;
    }
    let values = grid
        .par_iter()
        .map(|&s| eq_aux(ch, prior, s))
        .collect::<Result<Vec<_>>>()?;
    let second_differences: Vec<f64> = (1..grid.len() - 1)
        .map(|k| {
            let h1 = grid[k] - grid[k - 1];
            let h2 = grid[k + 1] - grid[k];
            2.0 * (h2 * values[k - 1] - (h1 + h2) * values[k] + h1 * values[k + 1]) / (h1 + h2)
        })
        .collect();
    let max_second_difference = second_differences.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let monotone_violation = values
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(0.0_f64, f64::max);
    Ok(ConcavityReport {
        s_grid: grid.to_vec(),
        values,
        second_differences,
        max_second_difference,
        monotone_violation,
    })
}
