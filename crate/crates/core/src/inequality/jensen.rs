//! Operator Jensen inequality for `x^2`:
//! `sum C_i† X_i^2 C_i >= (sum C_i† X_i C_i)^2` whenever `sum C_i† C_i = I`.

use super::{InequalityId, InequalityReport};
use crate::channel::Prior;
use crate::error::{Error, Result};
use crate::spectral::{max_abs, ComplexMatrix, HermitianMatrix};

pub const PARTITION_TOL: f64 = 1e-8;

fn jensen_sides(c_list: &[ComplexMatrix], x_list: &[HermitianMatrix]) -> Result<(HermitianMatrix, HermitianMatrix)> {
    if c_list.is_empty() || c_list.len() != x_list.len() {
        return Err(Error::InvalidParameter(format!(
            "need matching nonempty lists, got {} and {}",
            c_list.len(),
            x_list.len()
        )));
    }
    let d = x_list[0].dim();
    for (i, (c, x)) in c_list.iter().zip(x_list).enumerate() {
        for found in [c.nrows(), c.ncols(), x.dim()] {
            if found != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found,
                    index: Some(i),
                });
            }
        }
    }
    let mut partition = ComplexMatrix::zeros(d, d);
    for c in c_list {
        partition += c.adjoint() * c;
    }
    let residual = max_abs(&(partition - ComplexMatrix::identity(d, d)));
    if residual > PARTITION_TOL {
        return Err(Error::Partition { residual });
    }
    let mut outer = HermitianMatrix::zeros(d);
    let mut inner = HermitianMatrix::zeros(d);
    for (c, x) in c_list.iter().zip(x_list) {
        outer = outer.add(&x.square().congruence(c));
        inner = inner.add(&x.congruence(c));
    }
    Ok((outer, inner.square()))
}

/// `sum C_i† X_i^2 C_i - (sum C_i† X_i C_i)^2`.
pub fn jensen_gap(c_list: &[ComplexMatrix], x_list: &[HermitianMatrix]) -> Result<HermitianMatrix> {
    let (outer, inner_sq) = jensen_sides(c_list, x_list)?;
    Ok(outer.sub(&inner_sq))
}

/// Reports the smallest eigenvalue of [`jensen_gap`] as `lhs` against 0,
/// with scale `1 + ||outer|| + ||inner^2||` in spectral norm.
pub fn jensen_report(c_list: &[ComplexMatrix], x_list: &[HermitianMatrix]) -> Result<InequalityReport> {
    let (outer, inner_sq) = jensen_sides(c_list, x_list)?;
    let gap = outer.sub(&inner_sq).eigh()?;
    let norm = |h: &HermitianMatrix| -> Result<f64> {
        let e = h.eigh()?;
        Ok(e.min_eigenvalue().abs().max(e.max_eigenvalue().abs()))
    };
    let mut r = InequalityReport::new(InequalityId::Jensen, gap.min_eigenvalue(), 0.0, 0.0);
    r.scale = 1.0 + norm(&outer)? + norm(&inner_sq)?;
    Ok(r)
}

/// `C_i = (pi_i A_i)^{1/2} M^{-1/2}` and `X_i = log A_i` with `M = sum pi_k A_k`.
/// Requires positive definite `A_i` for inputs with nonzero weight.
pub fn jensen_instance(
    a_list: &[HermitianMatrix],
    prior: &Prior,
) -> Result<(Vec<ComplexMatrix>, Vec<HermitianMatrix>)> {
    if a_list.len() != prior.len() || a_list.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: a_list.len(),
            found: prior.len(),
            index: None,
        });
    }
    let d = a_list[0].dim();
    let floor = crate::spectral::eigen_floor();
    let mut mixture = HermitianMatrix::zeros(d);
    for (a, &w) in a_list.iter().zip(prior.weights()) {
        if w > 0.0 {
            mixture = mixture.add(&a.scaled(w));
        }
    }
    let m = mixture.eigh()?;
    if m.min_eigenvalue() <= floor {
        return Err(Error::Singular {
            eigenvalue: m.min_eigenvalue(),
        });
    }
    let m_inv_sqrt = m.apply(|x| 1.0 / x.sqrt(), false)?;
    let mut cs = Vec::new();
    let mut xs = Vec::new();
    for (a, &w) in a_list.iter().zip(prior.weights()) {
        if w <= 0.0 {
            continue;
        }
        let e = a.eigh()?;
        if e.min_eigenvalue() <= floor {
            return Err(Error::Singular {
                eigenvalue: e.min_eigenvalue(),
            });
        }
        let root = e.apply(|x| (w * x).sqrt(), false)?;
        cs.push(root.matrix() * m_inv_sqrt.matrix());
        xs.push(e.apply(f64::ln, false)?);
    }
    Ok((cs, xs))
}
