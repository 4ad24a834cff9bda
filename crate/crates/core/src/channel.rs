//! Classical-quantum channels `i -> S_i`, priors, and the entropic
//! functionals built on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    entropy_scalar, Complex, ComplexMatrix, HermitianMatrix, SpectralDecomposition,
};

pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-12;
pub const PRIOR_TOL: f64 = 1e-12;

/// A unit-trace PSD operator together with its eigensystem.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: HermitianMatrix,
    spectrum: SpectralDecomposition,
}

impl DensityMatrix {
    pub fn new(matrix: HermitianMatrix) -> Result<Self> {
        Self::validate(matrix, None)
    }

    fn validate(matrix: HermitianMatrix, index: Option<usize>) -> Result<Self> {
        let spectrum = matrix.eigh()?;
        let min = spectrum.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::NotPsd { index, eigenvalue: min });
        }
        let trace = matrix.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::Trace {
                index: index.unwrap_or(0),
                trace,
            });
        }
        Ok(DensityMatrix { matrix, spectrum })
    }

    /// Rescales a PSD operator to unit trace.
    pub fn normalized(matrix: HermitianMatrix) -> Result<Self> {
        let t = matrix.trace();
        if !(t > 0.0) {
            return Err(Error::Trace { index: 0, trace: t });
        }
        Self::new(matrix.scaled(1.0 / t))
    }

    /// `|v><v| / <v|v>`.
    pub fn pure(v: &[Complex]) -> Result<Self> {
        let n = v.len();
        let m = ComplexMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj());
        Self::normalized(HermitianMatrix::hermitian_part(&m)?)
    }

    pub fn from_diagonal(p: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::from_real_diagonal(p))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::new(HermitianMatrix::identity(dim).scaled(1.0 / dim as f64))
            .expect("maximally mixed state is valid")
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `S^p` on the support: eigenvalues within the eigen-floor map to 0.
    pub fn power(&self, p: f64) -> Result<HermitianMatrix> {
        if p == 1.0 {
            return Ok(self.matrix.clone());
        }
        self.spectrum.apply_psd(|x| x.powf(p), true)
    }

    pub fn entropy(&self) -> f64 {
        self.spectrum
            .eigenvalues()
            .iter()
            .map(|&l| entropy_scalar(l.max(0.0)))
            .sum()
    }

    pub fn conjugated(&self, u: &ComplexMatrix) -> Result<Self> {
        Self::new(self.matrix.conjugate_by(u))
    }

    /// Tensor product; the eigensystem is assembled from the factors.
    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        let matrix = self.matrix.kron(&other.matrix);
        let la = self.spectrum.eigenvalues();
        let lb = other.spectrum.eigenvalues();
        let vecs = self.spectrum.eigenvectors().kronecker(other.spectrum.eigenvectors());
        let mut vals = Vec::with_capacity(la.len() * lb.len());
        for &x in la {
            for &y in lb {
                vals.push(x * y);
            }
        }
        let spectrum = SpectralDecomposition::from_unsorted(vals, vecs);
        DensityMatrix { matrix, spectrum }
    }
}

/// A probability distribution over the input alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Prior(Vec<f64>);

impl Prior {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidPrior("empty".into()));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidPrior(format!("weight {i} is {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > PRIOR_TOL {
            return Err(Error::InvalidPrior(format!("weights sum to {total}")));
        }
        Ok(Prior(weights))
    }

    pub fn uniform(a: usize) -> Self {
        Prior(vec![1.0 / a as f64; a])
    }

    pub fn vertex(a: usize, i: usize) -> Self {
        let mut w = vec![0.0; a];
        w[i] = 1.0;
        Prior(w)
    }

    /// Clamps negatives to zero and renormalizes.
    pub fn normalize(weights: &[f64]) -> Result<Self> {
        let clipped: Vec<f64> = weights.iter().map(|&w| w.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidPrior("no positive mass".into()));
        }
        Ok(Prior(clipped.iter().map(|w| w / total).collect()))
    }

    pub(crate) fn from_simplex_unchecked(weights: Vec<f64>) -> Self {
        Prior(weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for Prior {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Prior::new(v)
    }
}

impl From<Prior> for Vec<f64> {
    fn from(p: Prior) -> Self {
        p.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    states: Vec<DensityMatrix>,
}

impl Channel {
    pub fn new(states: Vec<DensityMatrix>) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::Malformed("channel has no states".into()))?;
        let d = first.dim();
        if let Some((i, s)) = states.iter().enumerate().find(|(_, s)| s.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: s.dim(),
                index: Some(i),
            });
        }
        Ok(Channel { states })
    }

    /// Channel whose states are the diagonal matrices given by the rows of
    /// a row-stochastic matrix.
    pub fn diagonal(transition: &[Vec<f64>]) -> Result<Self> {
        let states = transition
            .iter()
            .map(|row| DensityMatrix::from_diagonal(row))
            .collect::<Result<Vec<_>>>()?;
        Channel::new(states)
    }

    pub fn alphabet_size(&self) -> usize {
        self.states.len()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &DensityMatrix {
        &self.states[i]
    }

    pub fn uniform_prior(&self) -> Prior {
        Prior::uniform(self.alphabet_size())
    }

    pub fn check_prior(&self, prior: &Prior) -> Result<()> {
        if prior.len() != self.alphabet_size() {
            return Err(Error::DimensionMismatch {
                expected: self.alphabet_size(),
                found: prior.len(),
                index: None,
            });
        }
        Ok(())
    }

    pub fn conjugated(&self, u: &ComplexMatrix) -> Result<Self> {
        Channel::new(self.states.iter().map(|s| s.conjugated(u)).collect::<Result<_>>()?)
    }

    /// Reorders states so that new state `k` is old state `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Channel {
            states: perm.iter().map(|&i| self.states[i].clone()).collect(),
        }
    }
}

/// One state in the channel file: row-major real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDocument {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDocument {
    pub dim: usize,
    pub states: Vec<StateDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
}

impl ChannelDocument {
    pub fn from_channel(ch: &Channel, prior: Option<&Prior>) -> Self {
        ChannelDocument {
            dim: ch.dim(),
            states: ch
                .states()
                .iter()
                .map(|s| {
                    let (re, im) = s.matrix().to_parts();
                    StateDocument { re, im: Some(im) }
                })
                .collect(),
            prior: prior.map(|p| p.weights().to_vec()),
        }
    }

    pub fn to_channel(&self) -> Result<(Channel, Prior)> {
        if self.states.is_empty() {
            return Err(Error::Malformed("\"states\" is empty".into()));
        }
        let mut states = Vec::with_capacity(self.states.len());
        for (i, doc) in self.states.iter().enumerate() {
            let rows = doc.re.len();
            let bad_shape = rows != self.dim
                || doc.re.iter().any(|r| r.len() != self.dim)
                || doc
                    .im
                    .as_ref()
                    .is_some_and(|im| im.len() != self.dim || im.iter().any(|r| r.len() != self.dim));
            if bad_shape {
                let found = if rows != self.dim {
                    rows
                } else {
                    doc.re.iter().map(Vec::len).find(|&n| n != self.dim).unwrap_or(rows)
                };
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found,
                    index: Some(i),
                });
            }
            let h = HermitianMatrix::from_parts(&doc.re, doc.im.as_deref())?;
            states.push(DensityMatrix::validate(h, Some(i))?);
        }
        let channel = Channel::new(states)?;
        let prior = match &self.prior {
            Some(w) => {
                let p = Prior::new(w.clone())?;
                channel.check_prior(&p)?;
                p
            }
            None => channel.uniform_prior(),
        };
        Ok((channel, prior))
    }
}

/// Parses and validates a channel file; the prior defaults to uniform.
pub fn load_channel(document: &str) -> Result<(Channel, Prior)> {
    let doc: ChannelDocument = serde_json::from_str(document)?;
    doc.to_channel()
}

pub fn load_channel_file(path: &std::path::Path) -> Result<(Channel, Prior)> {
    load_channel(&std::fs::read_to_string(path)?)
}

pub fn save_channel(ch: &Channel, prior: Option<&Prior>) -> String {
    serde_json::to_string_pretty(&ChannelDocument::from_channel(ch, prior))
        .expect("channel document serializes")
}

/// `A(s) = sum_i pi_i S_i^{1/(1+s)}`, skipping zero-weight inputs.
pub fn mixed_power_state(ch: &Channel, prior: &Prior, s: f64) -> Result<HermitianMatrix> {
    ch.check_prior(prior)?;
    mixed_power_state_weights(ch, prior.weights(), s)
}

pub(crate) fn mixed_power_state_weights(ch: &Channel, weights: &[f64], s: f64) -> Result<HermitianMatrix> {
    check_s(s)?;
    let p = 1.0 / (1.0 + s);
    let mut acc = HermitianMatrix::zeros(ch.dim());
    for (state, &w) in ch.states().iter().zip(weights) {
        if w > 0.0 {
            acc = acc.add(&state.power(p)?.scaled(w));
        }
    }
    Ok(acc)
}

pub(crate) fn check_s(s: f64) -> Result<()> {
    if !(s > -1.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("s = {s} must satisfy s > -1")));
    }
    Ok(())
}

/// Von Neumann entropy in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    rho.entropy()
}

/// Entropy of a PSD operator that need not have unit trace.
pub(crate) fn operator_entropy(a: &HermitianMatrix) -> Result<f64> {
    Ok(a.eigh()?.psd_values()?.into_iter().map(entropy_scalar).sum())
}

/// Holevo quantity `S(sum pi_i S_i) - sum pi_i S(S_i)` in nats.
pub fn holevo_quantity(ch: &Channel, prior: &Prior) -> Result<f64> {
    ch.check_prior(prior)?;
    holevo_weights(ch, prior.weights())
}

pub(crate) fn holevo_weights(ch: &Channel, weights: &[f64]) -> Result<f64> {
    let mut avg = HermitianMatrix::zeros(ch.dim());
    let mut cond = 0.0;
    for (state, &w) in ch.states().iter().zip(weights) {
        if w > 0.0 {
            avg = avg.add(&state.matrix().scaled(w));
            cond += w * state.entropy();
        }
    }
    Ok(operator_entropy(&avg)? - cond)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_channel, random_unitary, StateEnsemble};
    use rand::SeedableRng;

    pub(crate) fn ortho_qubit() -> Channel {
        Channel::diagonal(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    fn bsc(p: f64) -> Channel {
        Channel::diagonal(&[vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap()
    }

    const QUBIT_DOC: &str = r#"{
        "dim": 2,
        "states": [
            {"re": [[0.75, 0.25], [0.25, 0.25]], "im": [[0, 0.1], [-0.1, 0]]},
            {"re": [[0.5, 0], [0, 0.5]]}
        ],
        "prior": [0.5, 0.5]
    }"#;

    #[test]
    fn load_qubit_document() {
        let (ch, prior) = load_channel(QUBIT_DOC).unwrap();
        assert_eq!(ch.alphabet_size(), 2);
        assert_eq!(ch.dim(), 2);
        assert_eq!(prior.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn default_prior_is_uniform() {
        let doc = r#"{"dim":2,"states":[{"re":[[1,0],[0,0]]},{"re":[[0,0],[0,1]]},{"re":[[0.5,0],[0,0.5]]}]}"#;
        let (_, prior) = load_channel(doc).unwrap();
        assert_eq!(prior, Prior::uniform(3));
    }

    #[test]
    fn trace_violation_is_reported() {
        let doc = r#"{"dim":2,"states":[{"re":[[0.5,0],[0,0.4]]}]}"#;
        match load_channel(doc) {
            Err(Error::Trace { index: 0, trace }) => assert!((trace - 0.9).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn psd_violation_names_state() {
        let doc = r#"{"dim":2,"states":[{"re":[[1,0],[0,0]]},{"re":[[1.5,0],[0,-0.5]]}]}"#;
        match load_channel(doc) {
            Err(Error::NotPsd { index: Some(1), eigenvalue }) => assert_eq!(eigenvalue, -0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_and_malformed() {
        let doc = r#"{"dim":2,"states":[{"re":[[1,0,0],[0,0,0],[0,0,0]]}]}"#;
        assert!(matches!(load_channel(doc), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(load_channel("{\"dim\": 2"), Err(Error::Malformed(_))));
        let doc = r#"{"dim":2,"states":[{"re":[[1,0],[0,0]]}],"prior":[0.5,0.5]}"#;
        assert!(matches!(load_channel(doc), Err(Error::DimensionMismatch { .. })));
        let doc = r#"{"dim":2,"states":[{"re":[[1,0],[0,0]]}],"prior":[0.9]}"#;
        assert!(matches!(load_channel(doc), Err(Error::InvalidPrior(_))));
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let ch = random_channel(&mut rng, 3, 4, StateEnsemble::HaarMixed);
        let prior = Prior::new(vec![0.2, 0.3, 0.5]).unwrap();
        let text = save_channel(&ch, Some(&prior));
        let (back, p2) = load_channel(&text).unwrap();
        assert_eq!(p2, prior);
        for (a, b) in ch.states().iter().zip(back.states()) {
            let diff = crate::spectral::max_abs(&(a.matrix().matrix() - b.matrix().matrix()));
            assert!(diff <= 1e-15);
        }
        assert_eq!(save_channel(&back, Some(&p2)), text);
    }

    #[test]
    fn mixed_power_state_examples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let ch = random_channel(&mut rng, 3, 3, StateEnsemble::HaarMixed);
        let prior = Prior::new(vec![0.1, 0.6, 0.3]).unwrap();
        let a0 = mixed_power_state(&ch, &prior, 0.0).unwrap();
        let mut avg = HermitianMatrix::zeros(3);
        for (s, w) in ch.states().iter().zip(prior.weights()) {
            avg = avg.add(&s.matrix().scaled(*w));
        }
        assert!(crate::spectral::max_abs(&(a0.matrix() - avg.matrix())) < 1e-15);
        assert!((a0.trace() - 1.0).abs() < 1e-12);

        let ortho = ortho_qubit();
        for s in [-0.5, 0.0, 0.3, 1.0] {
            let a = mixed_power_state(&ortho, &Prior::uniform(2), s).unwrap();
            assert!(crate::spectral::max_abs(&(a.matrix() - HermitianMatrix::identity(2).scaled(0.5).matrix())) < 1e-15);
        }

        let single = Channel::new(vec![ch.state(1).clone()]).unwrap();
        let a = mixed_power_state(&single, &Prior::uniform(1), 0.5).unwrap();
        let direct = ch.state(1).power(1.0 / 1.5).unwrap();
        assert!(crate::spectral::max_abs(&(a.matrix() - direct.matrix())) < 1e-15);
        assert!(mixed_power_state(&single, &Prior::uniform(1), -1.0).is_err());
    }

    #[test]
    fn entropy_examples() {
        let pure = DensityMatrix::pure(&[Complex::new(0.6, 0.0), Complex::new(0.0, 0.8)]).unwrap();
        assert!(von_neumann_entropy(&pure).abs() < 1e-12);
        assert!((von_neumann_entropy(&DensityMatrix::maximally_mixed(2)) - 2f64.ln()).abs() < 1e-15);
        let e = von_neumann_entropy(&DensityMatrix::from_diagonal(&[0.9, 0.1]).unwrap());
        // -0.9 ln 0.9 - 0.1 ln 0.1
        let oracle = -(0.9f64 * 0.9f64.ln()) - 0.1 * 0.1f64.ln();
        assert!((e - oracle).abs() < 1e-15);
        assert!((e - 0.325083).abs() < 5e-7);
    }

    #[test]
    fn holevo_examples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let one = random_channel(&mut rng, 1, 3, StateEnsemble::HaarMixed);
        let same = Channel::new(vec![one.state(0).clone(); 3]).unwrap();
        assert!(holevo_quantity(&same, &Prior::uniform(3)).unwrap().abs() < 1e-12);
        let chi = holevo_quantity(&ortho_qubit(), &Prior::uniform(2)).unwrap();
        assert!((chi - 2f64.ln()).abs() < 1e-15);
        let h = |p: f64| -(p * p.ln()) - (1.0 - p) * (1.0 - p).ln();
        let chi = holevo_quantity(&bsc(0.1), &Prior::uniform(2)).unwrap();
        assert!((chi - (2f64.ln() - h(0.1))).abs() < 1e-14);
        assert!((chi - 0.368064).abs() < 5e-7);
    }

    #[test]
    fn holevo_unitary_and_permutation_invariance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let ch = random_channel(&mut rng, 3, 4, StateEnsemble::HaarMixed);
            let prior = Prior::new(vec![0.5, 0.2, 0.3]).unwrap();
            let chi = holevo_quantity(&ch, &prior).unwrap();
            assert!(chi >= -1e-10);
            let u = random_unitary(&mut rng, 4);
            let rotated = ch.conjugated(&u).unwrap();
            assert!((holevo_quantity(&rotated, &prior).unwrap() - chi).abs() < 1e-9);
            let perm = [2, 0, 1];
            let pp = Prior::new(perm.iter().map(|&i| prior.weights()[i]).collect()).unwrap();
            assert!((holevo_quantity(&ch.permuted(&perm), &pp).unwrap() - chi).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_weight_states_are_dropped() {
        let ch = ortho_qubit();
        let p = Prior::vertex(2, 0);
        let a = mixed_power_state(&ch, &p, 0.5).unwrap();
        assert_eq!(a.diagonal(), vec![1.0, 0.0]);
    }

    #[test]
    fn prior_validation() {
        assert!(Prior::new(vec![0.5, 0.6]).is_err());
        assert!(Prior::new(vec![-0.1, 1.1]).is_err());
        assert!(Prior::new(vec![]).is_err());
        assert!(Prior::new(vec![0.0, 1.0]).is_ok());
    }
}
