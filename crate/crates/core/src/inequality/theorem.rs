//! The concavity trace inequality
//!
//! `Tr[M^s sum_i pi_i A_i (log A_i)^2 - M^{s-1} (sum_i pi_i A_i log A_i)^2] >= 0`
//!
//! with `M = sum_k pi_k A_k`, either for given PSD `A_i` or for density
//! matrices `S_i` with `A_i = S_i^{1/(1+s)}`. The density-matrix route uses
//! the matrix entropy `H(A) = -A log A` and the spectra of the `S_i`
//! directly; the other route re-diagonalizes each `A_i`.

use super::{InequalityId, InequalityReport, FORMULATION_TOL};
use crate::channel::{Channel, Prior};
use crate::error::{Error, Result};
use crate::spectral::{eigen_floor, trace_product, HermitianMatrix, SpectralDecomposition};

fn xlogx(x: f64) -> f64 {
    x * x.ln()
}

fn xlog2x(x: f64) -> f64 {
    let l = x.ln();
    x * l * l
}

/// Maps PSD eigenvalues through `f`; those within the floor become 0 when
/// `support_only` is set and are an error otherwise.
fn map_support<F: Fn(f64) -> f64>(
    e: &SpectralDecomposition,
    f: F,
    support_only: bool,
    restricted: &mut bool,
) -> Result<HermitianMatrix> {
    let floor = eigen_floor();
    let values = e.psd_values()?;
    let mut mapped = Vec::with_capacity(values.len());
    for l in values {
        if l <= floor {
            if !support_only {
                return Err(Error::Singular { eigenvalue: l });
            }
            *restricted = true;
            mapped.push(0.0);
        } else {
            mapped.push(f(l));
        }
    }
    Ok(e.rebuild(&mapped))
}

/// Lhs/rhs traces given `M`, `sum pi A (log A)^2` and `X = sum pi A log A`.
fn trace_sides(
    mixture: &HermitianMatrix,
    weighted_log_sq: &HermitianMatrix,
    weighted_log: &HermitianMatrix,
    s: f64,
    support_only: bool,
    restricted: &mut bool,
) -> Result<(f64, f64, f64)> {
    let e = mixture.eigh()?;
    // both powers act on the same support of M
    let ms = map_support(&e, |m| m.powf(s), support_only, restricted)?;
    let ms1 = map_support(&e, |m| m.powf(s - 1.0), support_only, restricted)?;
    let lhs = trace_product(ms.matrix(), weighted_log_sq.matrix());
    let rhs = trace_product(ms1.matrix(), weighted_log.square().matrix());
    Ok((lhs.re, rhs.re, lhs.im.abs().max(rhs.im.abs())))
}

/// Concavity trace gap for given PSD operators `A_i`.
pub fn concavity_trace_gap(
    a_list: &[HermitianMatrix],
    prior: &Prior,
    s: f64,
    support_only: bool,
) -> Result<InequalityReport> {
    if a_list.is_empty() || a_list.len() != prior.len() {
        return Err(Error::DimensionMismatch {
            expected: a_list.len(),
            found: prior.len(),
            index: None,
        });
    }
    if !(s > -1.0) {
        return Err(Error::InvalidParameter(format!("s = {s} must satisfy s > -1")));
    }
    let d = a_list[0].dim();
    let mut restricted = false;
    let mut mixture = HermitianMatrix::zeros(d);
    let mut log_sq = HermitianMatrix::zeros(d);
    let mut log = HermitianMatrix::zeros(d);
    for (i, (a, &w)) in a_list.iter().zip(prior.weights()).enumerate() {
        if a.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: a.dim(),
                index: Some(i),
            });
        }
        if w <= 0.0 {
            continue;
        }
        let e = a.eigh()?;
        e.check_psd(Some(i))?;
        mixture = mixture.add(&a.scaled(w));
        log_sq = log_sq.add(&map_support(&e, xlog2x, support_only, &mut restricted)?.scaled(w));
        log = log.add(&map_support(&e, xlogx, support_only, &mut restricted)?.scaled(w));
    }
    let (lhs, rhs, imag) = trace_sides(&mixture, &log_sq, &log, s, support_only, &mut restricted)?;
    let mut r = InequalityReport::new(InequalityId::Theorem, lhs, rhs, imag);
    r.support_restricted = restricted;
    Ok(r)
}

/// Density-matrix form of the inequality, computed from the spectra of
/// the `S_i` with `H` the matrix entropy.
fn eq3_sides(ch: &Channel, prior: &Prior, s: f64, restricted: &mut bool) -> Result<(f64, f64, f64)> {
    let p = 1.0 / (1.0 + s);
    let floor = eigen_floor();
    let d = ch.dim();
    let mut mixture = HermitianMatrix::zeros(d);
    let mut log_sq = HermitianMatrix::zeros(d);
    let mut entropy = HermitianMatrix::zeros(d);
    for (state, &w) in ch.states().iter().zip(prior.weights()) {
        if w <= 0.0 {
            continue;
        }
        let e = state.spectrum();
        let lambda = e.psd_values()?;
        let on_support = |f: &dyn Fn(f64) -> f64, restricted: &mut bool| -> Vec<f64> {
            lambda
                .iter()
                .map(|&l| {
                    if l <= floor {
                        *restricted = true;
                        0.0
                    } else {
                        f(l)
                    }
                })
                .collect()
        };
        // S^p, S^p (log S^p)^2 and H(S^p) = -S^p log S^p
        let pow = on_support(&|l| l.powf(p), restricted);
        let sq = on_support(&|l| l.powf(p) * (p * l.ln()).powi(2), restricted);
        let h = on_support(&|l| -(l.powf(p) * p * l.ln()), restricted);
        mixture = mixture.add(&e.rebuild(&pow).scaled(w));
        log_sq = log_sq.add(&e.rebuild(&sq).scaled(w));
        entropy = entropy.add(&e.rebuild(&h).scaled(w));
    }
    // (sum pi H)^2 = (sum pi A log A)^2, so the entropy sum also serves as X
    trace_sides(&mixture, &log_sq, &entropy, s, true, restricted)
}

/// Evaluates both formulations for the states of `ch` and fails if they
/// disagree by more than `1e-10`. `id` selects which one provides the gap:
/// [`InequalityId::Eq3`] for the density-matrix form, anything else for the
/// power-operator form. Singular states are handled on their support.
pub fn eq3_gap(ch: &Channel, prior: &Prior, s: f64, id: InequalityId) -> Result<InequalityReport> {
    ch.check_prior(prior)?;
    if !(s > -1.0) {
        return Err(Error::InvalidParameter(format!("s = {s} must satisfy s > -1")));
    }
    let p = 1.0 / (1.0 + s);
    let powers = ch
        .states()
        .iter()
        .map(|st| st.power(p))
        .collect::<Result<Vec<_>>>()?;
    let theorem = concavity_trace_gap(&powers, prior, s, true)?;
    let mut restricted = false;
    let (lhs, rhs, imag) = eq3_sides(ch, prior, s, &mut restricted)?;
    let eq3 = InequalityReport::new(InequalityId::Eq3, lhs, rhs, imag);
    let residual = (theorem.gap - eq3.gap).abs();
    if !(residual <= FORMULATION_TOL) {
        return Err(Error::FormulationMismatch { residual });
    }
    let mut r = if id == InequalityId::Eq3 { eq3 } else { theorem.clone() };
    r.inequality = if id == InequalityId::Eq3 {
        InequalityId::Eq3
    } else {
        InequalityId::Theorem
    };
    r.support_restricted = restricted || theorem.support_restricted;
    r.formulation_residual = Some(residual);
    Ok(r)
}

/// Operators shared by the proof steps: `A_i`, `M`, `X = sum pi A log A`
/// and `sum pi A (log A)^2`. Requires every weighted `A_i` and `M` to be
/// positive definite.
#[derive(Debug, Clone)]
pub struct ProofOperators {
    pub s: f64,
    pub powers: Vec<HermitianMatrix>,
    pub mixture: HermitianMatrix,
    pub weighted_log: HermitianMatrix,
    pub weighted_log_sq: HermitianMatrix,
}

pub fn proof_operators(ch: &Channel, prior: &Prior, s: f64) -> Result<ProofOperators> {
    ch.check_prior(prior)?;
    let p = 1.0 / (1.0 + s);
    let d = ch.dim();
    let mut restricted = false;
    let mut powers = Vec::with_capacity(ch.alphabet_size());
    let mut mixture = HermitianMatrix::zeros(d);
    let mut log = HermitianMatrix::zeros(d);
    let mut log_sq = HermitianMatrix::zeros(d);
    for (state, &w) in ch.states().iter().zip(prior.weights()) {
        let a = state.power(p)?;
        if w > 0.0 {
            let e = a.eigh()?;
            mixture = mixture.add(&a.scaled(w));
            log = log.add(&map_support(&e, xlogx, false, &mut restricted)?.scaled(w));
            log_sq = log_sq.add(&map_support(&e, xlog2x, false, &mut restricted)?.scaled(w));
        }
        powers.push(a);
    }
    Ok(ProofOperators {
        s,
        powers,
        mixture,
        weighted_log: log,
        weighted_log_sq: log_sq,
    })
}

/// `Tr[M^s sum pi A (log A)^2] >= Tr[M^s X M^{-1} X]`, the trace of the
/// Jensen step after congruence by `M^{s/2}`.
pub fn jensen_trace_gap(ops: &ProofOperators) -> Result<InequalityReport> {
    let e = ops.mixture.eigh()?;
    let mut restricted = false;
    let ms = map_support(&e, |m| m.powf(ops.s), false, &mut restricted)?;
    let inv = map_support(&e, |m| 1.0 / m, false, &mut restricted)?;
    let lhs = trace_product(ms.matrix(), ops.weighted_log_sq.matrix());
    let x = ops.weighted_log.matrix();
    let rhs = trace_product(&(ms.matrix() * x), &(inv.matrix() * x));
    Ok(InequalityReport::new(
        InequalityId::JensenTrace,
        lhs.re,
        rhs.re,
        lhs.im.abs().max(rhs.im.abs()),
    ))
}
