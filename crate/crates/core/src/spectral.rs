//! Dense Hermitian linear algebra and spectral function calculus.
//!
//! Every operator function used elsewhere in the crate (fractional powers,
//! logarithms, the matrix entropy, inverse square roots) goes through
//! [`SpectralDecomposition::apply`] or [`SpectralDecomposition::apply_psd`].
//! The eigensolver is nalgebra's Hermitian QR iteration behind a
//! reconstruction contract; exactly diagonal inputs bypass it.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type Complex = nalgebra::Complex<f64>;
pub type ComplexMatrix = DMatrix<Complex>;

/// Eigenvalues with magnitude at or below this are treated as roundoff.
pub const DEFAULT_EIGEN_FLOOR: f64 = 1e-12;
/// Iteration cap for the eigensolver is `factor * dim^2`.
pub const DEFAULT_ITER_FACTOR: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    pub eigen_floor: f64,
    pub iter_factor: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            eigen_floor: DEFAULT_EIGEN_FLOOR,
            iter_factor: DEFAULT_ITER_FACTOR,
        }
    }
}

impl SpectralConfig {
    /// Defaults, overridden by `CQREL_EIGEN_FLOOR` and `CQREL_EIG_ITER_FACTOR`.
    pub fn from_env() -> Self {
        let mut cfg = SpectralConfig::default();
        if let Some(v) = env_parse::<f64>("CQREL_EIGEN_FLOOR") {
            if v.is_finite() && v >= 0.0 {
                cfg.eigen_floor = v;
            }
        }
        if let Some(v) = env_parse::<usize>("CQREL_EIG_ITER_FACTOR") {
            if v > 0 {
                cfg.iter_factor = v;
            }
        }
        cfg
    }
}

pub(crate) fn env_parse<T: std::str::FromStr>(key: &str) -> Option<T> {
    std::env::var(key).ok().and_then(|v| v.trim().parse().ok())
}

static CONFIG: OnceLock<SpectralConfig> = OnceLock::new();

/// Process-wide spectral configuration, read from the environment once.
pub fn config() -> &'static SpectralConfig {
    CONFIG.get_or_init(SpectralConfig::from_env)
}

pub fn eigen_floor() -> f64 {
    config().eigen_floor
}

/// A dense complex Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

fn check_square_finite(m: &ComplexMatrix) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn symmetrize(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.nrows();
    ComplexMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

impl HermitianMatrix {
    /// Validates that `m` is Hermitian within `1e-12 * (1 + max|m|)` and
    /// stores its Hermitian part.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        check_square_finite(&m)?;
        let n = m.nrows();
        let scale = max_abs(&m);
        let mut asym: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                asym = asym.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        let tol = 1e-12 * (1.0 + scale);
        if asym > tol {
            return Err(Error::NotHermitian {
                asymmetry: asym,
                tolerance: tol,
            });
        }
        Ok(HermitianMatrix(symmetrize(&m)))
    }

    /// Takes `(m + m†)/2` without checking how far `m` was from Hermitian.
    pub fn hermitian_part(m: &ComplexMatrix) -> Result<Self> {
        check_square_finite(m)?;
        Ok(HermitianMatrix(symmetrize(m)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        HermitianMatrix(ComplexMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex::new(diag[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        }))
    }

    /// Builds from separate real and imaginary parts given row-major.
    pub fn from_parts(re: &[Vec<f64>], im: Option<&[Vec<f64>]>) -> Result<Self> {
        let n = re.len();
        if let Some(row) = re.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare { rows: n, cols: row.len() });
        }
        if let Some(im) = im {
            if im.len() != n || im.iter().any(|r| r.len() != n) {
                return Err(Error::Malformed(
                    "imaginary part shape differs from real part".into(),
                ));
            }
        }
        let m = ComplexMatrix::from_fn(n, n, |i, j| {
            Complex::new(re[i][j], im.map_or(0.0, |im| im[i][j]))
        });
        HermitianMatrix::new(m)
    }

    pub fn identity(dim: usize) -> Self {
        HermitianMatrix(ComplexMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix(ComplexMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// Real and imaginary parts, row-major.
    pub fn to_parts(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n = self.dim();
        let re = (0..n).map(|i| (0..n).map(|j| self.0[(i, j)].re).collect()).collect();
        let im = (0..n).map(|i| (0..n).map(|j| self.0[(i, j)].im).collect()).collect();
        (re, im)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        HermitianMatrix(&self.0 * Complex::new(c, 0.0))
    }

    pub fn add(&self, other: &HermitianMatrix) -> Self {
        HermitianMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Self {
        HermitianMatrix(&self.0 - &other.0)
    }

    /// `U A U†`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Self {
        HermitianMatrix(symmetrize(&(u * &self.0 * u.adjoint())))
    }

    /// `C† A C` for a general square `C`.
    pub fn congruence(&self, c: &ComplexMatrix) -> Self {
        HermitianMatrix(symmetrize(&(c.adjoint() * &self.0 * c)))
    }

    /// `A B A`, Hermitian whenever both factors are.
    pub fn sandwich(&self, inner: &HermitianMatrix) -> Self {
        HermitianMatrix(symmetrize(&(&self.0 * &inner.0 * &self.0)))
    }

    pub fn square(&self) -> Self {
        HermitianMatrix(symmetrize(&(&self.0 * &self.0)))
    }

    pub fn kron(&self, other: &HermitianMatrix) -> Self {
        HermitianMatrix(self.0.kronecker(&other.0))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|i| i == j || self.0[(i, j)] == Complex::new(0.0, 0.0)))
    }

    pub fn eigh(&self) -> Result<SpectralDecomposition> {
        eigh(self)
    }
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `Tr(AB)` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex {
    let n = a.nrows();
    let mut acc = Complex::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Eigenvalues ascending with matching orthonormal eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    /// Sorts an eigensystem given in arbitrary order.
    pub fn from_unsorted(values: Vec<f64>, vectors: ComplexMatrix) -> Self {
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        let eigenvalues = order.iter().map(|&i| values[i]).collect();
        let eigenvectors = ComplexMatrix::from_fn(vectors.nrows(), n, |i, j| vectors[(i, order[j])]);
        SpectralDecomposition {
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// `V diag(values) V†` for an arbitrary list of mapped eigenvalues.
    pub fn rebuild(&self, values: &[f64]) -> HermitianMatrix {
        let v = &self.eigenvectors;
        let n = v.nrows();
        let mut scaled = v.clone();
        for (j, &w) in values.iter().enumerate() {
            for i in 0..n {
                scaled[(i, j)] *= w;
            }
        }
        HermitianMatrix(symmetrize(&(scaled * v.adjoint())))
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.rebuild(&self.eigenvalues)
    }

    /// `V f(Λ) V†`. With `support_only`, eigenvalues inside the eigen-floor
    /// map to zero without calling `f`. A non-finite `f(λ)` is a domain
    /// error reporting `λ`.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F, support_only: bool) -> Result<HermitianMatrix> {
        let values = self.map_values(f, support_only)?;
        Ok(self.rebuild(&values))
    }

    pub fn map_values<F: Fn(f64) -> f64>(&self, f: F, support_only: bool) -> Result<Vec<f64>> {
        let floor = eigen_floor();
        self.eigenvalues
            .iter()
            .map(|&l| {
                if support_only && l.abs() <= floor {
                    return Ok(0.0);
                }
                let y = f(l);
                if y.is_finite() {
                    Ok(y)
                } else {
                    Err(Error::Domain { eigenvalue: l })
                }
            })
            .collect()
    }

    /// Fails with [`Error::NotPsd`] if any eigenvalue is below `-eigen_floor`.
    pub fn check_psd(&self, index: Option<usize>) -> Result<()> {
        let l = self.min_eigenvalue();
        if l < -eigen_floor() {
            Err(Error::NotPsd { index, eigenvalue: l })
        } else {
            Ok(())
        }
    }

    /// Eigenvalues of a PSD operator with roundoff negatives clipped to 0.
    pub fn psd_values(&self) -> Result<Vec<f64>> {
        self.check_psd(None)?;
        Ok(self.eigenvalues.iter().map(|&l| l.max(0.0)).collect())
    }

    /// Like [`apply`](Self::apply) for a PSD operator: negatives within the
    /// floor are clipped to zero before `f` sees them.
    pub fn apply_psd<F: Fn(f64) -> f64>(&self, f: F, support_only: bool) -> Result<HermitianMatrix> {
        Ok(self.rebuild(&self.map_psd_values(f, support_only)?))
    }

    pub fn map_psd_values<F: Fn(f64) -> f64>(&self, f: F, support_only: bool) -> Result<Vec<f64>> {
        self.check_psd(None)?;
        let floor = eigen_floor();
        self.eigenvalues
            .iter()
            .map(|&l| {
                let l = l.max(0.0);
                if support_only && l <= floor {
                    return Ok(0.0);
                }
                let y = f(l);
                if y.is_finite() {
                    Ok(y)
                } else {
                    Err(Error::Domain { eigenvalue: l })
                }
            })
            .collect()
    }
}

/// Hermitian eigendecomposition with eigenvalues ascending.
pub fn eigh(a: &HermitianMatrix) -> Result<SpectralDecomposition> {
    let n = a.dim();
    if a.is_diagonal() {
        let diag = a.diagonal();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
        let eigenvalues = order.iter().map(|&i| diag[i]).collect();
        let mut v = ComplexMatrix::zeros(n, n);
        for (col, &row) in order.iter().enumerate() {
            v[(row, col)] = Complex::new(1.0, 0.0);
        }
        return Ok(SpectralDecomposition {
            eigenvalues,
            eigenvectors: v,
        });
    }
    let max_iter = config().iter_factor.saturating_mul(n * n).max(1);
    let eig = SymmetricEigen::try_new(a.0.clone(), f64::EPSILON, max_iter)
        .ok_or(Error::NoConvergence { dim: n, max_iter })?;
    let raw: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw[i].total_cmp(&raw[j]));
    let eigenvalues = order.iter().map(|&i| raw[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

pub fn apply_spectral_fn<F: Fn(f64) -> f64>(
    a: &HermitianMatrix,
    f: F,
    support_only: bool,
) -> Result<HermitianMatrix> {
    eigh(a)?.apply(f, support_only)
}

/// `-x ln x` with `0 ln 0 = 0`.
pub fn entropy_scalar(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// `H(A) = -A log A` for PSD `A`.
pub fn matrix_entropy(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    eigh(a)?.apply_psd(entropy_scalar, false)
}

/// `A^p` for PSD `A`. Negative exponents act on the support only.
pub fn psd_power(a: &HermitianMatrix, p: f64) -> Result<HermitianMatrix> {
    eigh(a)?.apply_psd(|x| x.powf(p), p <= 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn random_hermitian(n: usize, seed: u64) -> HermitianMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = ComplexMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        HermitianMatrix::hermitian_part(&m).unwrap()
    }

    fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        max_abs(&(a - b))
    }

    #[test]
    fn diagonal_eigenvalues_sorted() {
        let d = eigh(&HermitianMatrix::from_real_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(d.eigenvalues(), &[1.0, 2.0, 3.0]);
        assert!(max_diff(d.reconstruct().matrix(), HermitianMatrix::from_real_diagonal(&[3.0, 1.0, 2.0]).matrix()) == 0.0);
    }

    #[test]
    fn pauli_x_eigenvalues() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let d = eigh(&HermitianMatrix::new(m).unwrap()).unwrap();
        assert!((d.eigenvalues()[0] + 1.0).abs() < 1e-14);
        assert!((d.eigenvalues()[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_reconstruction_and_orthonormality() {
        for seed in 0..20 {
            let a = random_hermitian(5, seed);
            let d = eigh(&a).unwrap();
            let scale = 1.0 + a.max_abs();
            assert!(max_diff(d.reconstruct().matrix(), a.matrix()) <= 1e-9 * scale);
            let v = d.eigenvectors();
            assert!(max_diff(&(v.adjoint() * v), &ComplexMatrix::identity(5, 5)) <= 1e-10);
            assert!(d.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn deterministic() {
        let a = random_hermitian(6, 99);
        assert_eq!(eigh(&a).unwrap(), eigh(&a).unwrap());
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian { .. })));
        let m = ComplexMatrix::from_row_slice(1, 2, &[c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotSquare { .. })));
        let m = ComplexMatrix::from_row_slice(1, 1, &[c(f64::NAN, 0.0)]);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn square_root_of_diagonal() {
        let r = apply_spectral_fn(&HermitianMatrix::from_real_diagonal(&[4.0, 1.0]), f64::sqrt, false).unwrap();
        assert_eq!(r.diagonal(), vec![2.0, 1.0]);
    }

    #[test]
    fn log_of_identity_is_zero() {
        let r = apply_spectral_fn(&HermitianMatrix::identity(3), f64::ln, false).unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn power_one_over_one_plus_s() {
        let s = 1.0;
        let r = apply_spectral_fn(&HermitianMatrix::from_real_diagonal(&[0.9, 0.1]), |x| x.powf(1.0 / (1.0 + s)), false).unwrap();
        let d = r.diagonal();
        assert!((d[0] - 0.9f64.sqrt()).abs() < 1e-15);
        assert!((d[1] - 0.1f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn log_domain_violation_reports_eigenvalue() {
        let err = apply_spectral_fn(&HermitianMatrix::from_real_diagonal(&[1.0, -0.5]), f64::ln, false).unwrap_err();
        assert_eq!(err, Error::Domain { eigenvalue: -0.5 });
        // singular: log 0 is only admissible on the support
        assert!(apply_spectral_fn(&HermitianMatrix::from_real_diagonal(&[1.0, 0.0]), f64::ln, false).is_err());
        let r = apply_spectral_fn(&HermitianMatrix::from_real_diagonal(&[2.0, 1e-13]), f64::ln, true).unwrap();
        assert!((r.diagonal()[0] - 2f64.ln()).abs() < 1e-15);
        assert_eq!(r.diagonal()[1], 0.0);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(matrix_entropy(&HermitianMatrix::from_real_diagonal(&[1.0, 0.0])).unwrap().max_abs(), 0.0);
        let h = matrix_entropy(&HermitianMatrix::identity(2).scaled(0.5)).unwrap();
        let expect = 2f64.ln() / 2.0;
        assert!(h.diagonal().iter().all(|&x| (x - expect).abs() < 1e-15));
        let h = matrix_entropy(&HermitianMatrix::from_real_diagonal(&[0.9, 0.1])).unwrap().diagonal();
        assert!((h[0] - 0.094_824_464_0).abs() < 1e-9);
        assert!((h[1] - 0.230_258_509_3).abs() < 1e-9);
    }

    #[test]
    fn entropy_rejects_negative_beyond_floor() {
        let err = matrix_entropy(&HermitianMatrix::from_real_diagonal(&[1.0, -1e-6])).unwrap_err();
        assert!(matches!(err, Error::NotPsd { .. }));
        assert!(matrix_entropy(&HermitianMatrix::from_real_diagonal(&[1.0, -1e-14])).is_ok());
    }

    #[test]
    fn hermitian_part_symmetrizes() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.3), c(2.0, 1.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let h = HermitianMatrix::hermitian_part(&m).unwrap();
        assert_eq!(h.matrix()[(0, 1)], c(1.0, 0.5));
        assert_eq!(h.matrix()[(1, 0)], c(1.0, -0.5));
        assert_eq!(h.matrix()[(0, 0)], c(1.0, 0.0));
    }
}
