//! Finite-blocklength random coding: codebooks, tensor-product codeword
//! states, square-root-measurement decoding and per-word error probabilities.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{Channel, DensityMatrix, Prior};
use crate::error::{Error, Result};
use crate::random::instance_rng;
use crate::spectral::{eigen_floor, trace_product, HermitianMatrix};

pub const DEFAULT_DIM_CAP: usize = 16384;
pub const POVM_PSD_TOL: f64 = 1e-10;
pub const COMPLETENESS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codebook {
    n: usize,
    words: Vec<Vec<usize>>,
}

impl Codebook {
    pub fn new(alphabet: usize, n: usize, words: Vec<Vec<usize>>) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::InvalidParameter("codebook needs at least one word".into()));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("block length must be at least 1".into()));
        }
        for (j, w) in words.iter().enumerate() {
            if w.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: w.len(),
                    index: Some(j),
                });
            }
            if let Some(&x) = w.iter().find(|&&x| x >= alphabet) {
                return Err(Error::InvalidParameter(format!(
                    "word {j} uses symbol {x} outside alphabet of size {alphabet}"
                )));
            }
        }
        Ok(Codebook { n, words })
    }

    /// `m` words with i.i.d. symbols drawn from `prior`.
    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R, prior: &Prior, n: usize, m: usize) -> Result<Self> {
        let dist = WeightedIndex::new(prior.weights()).map_err(|e| Error::InvalidPrior(e.to_string()))?;
        let words = (0..m).map(|_| (0..n).map(|_| dist.sample(rng)).collect()).collect();
        Codebook::new(prior.len(), n, words)
    }

    pub fn block_length(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[Vec<usize>] {
        &self.words
    }

    /// `ln M / n`.
    pub fn rate(&self) -> f64 {
        (self.size() as f64).ln() / self.n as f64
    }
}

fn block_dim(d: usize, n: usize, cap: usize) -> Result<usize> {
    let mut dim = 1usize;
    for _ in 0..n {
        dim = dim.checked_mul(d).filter(|&x| x <= cap).ok_or(Error::DimensionCap {
            dim: d.saturating_pow(n as u32),
            cap,
        })?;
    }
    Ok(dim)
}

/// `S_{w_1} ⊗ ... ⊗ S_{w_n}`.
pub fn codeword_state(ch: &Channel, word: &[usize]) -> Result<DensityMatrix> {
    codeword_state_with_cap(ch, word, DEFAULT_DIM_CAP)
}

pub fn codeword_state_with_cap(ch: &Channel, word: &[usize], cap: usize) -> Result<DensityMatrix> {
    let Some((&first, rest)) = word.split_first() else {
        return Err(Error::InvalidParameter("empty word".into()));
    };
    block_dim(ch.dim(), word.len(), cap)?;
    let a = ch.alphabet_size();
    if let Some(&x) = word.iter().find(|&&x| x >= a) {
        return Err(Error::InvalidParameter(format!("symbol {x} outside alphabet of size {a}")));
    }
    Ok(rest
        .iter()
        .fold(ch.state(first).clone(), |acc, &x| acc.kron(ch.state(x))))
}

pub fn codebook_states(ch: &Channel, code: &Codebook) -> Result<Vec<DensityMatrix>> {
    code.words().iter().map(|w| codeword_state(ch, w)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    pub elements: Vec<HermitianMatrix>,
    /// Projector onto the support of the summed states.
    pub support: HermitianMatrix,
}

impl Povm {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        self.elements
            .iter()
            .map(|x| x.eigh().map(|e| e.min_eigenvalue()))
            .try_fold(f64::INFINITY, |m, v| Ok(m.min(v?)))
    }

    /// `max |sum X_j - P|` entrywise.
    pub fn completeness_residual(&self) -> f64 {
        let total = self
            .elements
            .iter()
            .fold(HermitianMatrix::zeros(self.support.dim()), |acc, x| acc.add(x));
        total.sub(&self.support).max_abs()
    }

    pub fn check(&self) -> Result<()> {
        let lo = self.min_eigenvalue()?;
        if lo < -POVM_PSD_TOL {
            return Err(Error::NotPsd {
                index: None,
                eigenvalue: lo,
            });
        }
        let residual = self.completeness_residual();
        if residual > COMPLETENESS_TOL {
            return Err(Error::Partition { residual });
        }
        Ok(())
    }
}

/// `X_j = T^{-1/2} S_j T^{-1/2}` with `T = sum_k S_k`, inverting on the
/// support of `T`.
pub fn square_root_measurement(states: &[DensityMatrix]) -> Result<Povm> {
    let first = states
        .first()
        .ok_or_else(|| Error::InvalidParameter("need at least one state".into()))?;
    let d = first.dim();
    let mut total = HermitianMatrix::zeros(d);
    for (i, s) in states.iter().enumerate() {
        if s.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: s.dim(),
                index: Some(i),
            });
        }
        total = total.add(s.matrix());
    }
    if states.iter().all(|s| s.matrix().is_diagonal()) {
        return Ok(diagonal_srm(states, &total.diagonal()));
    }
    let spec = total.eigh()?;
    let cut = eigen_floor() * spec.max_eigenvalue().max(1.0);
    let on_support = |x: f64| x > cut;
    let inv_sqrt = spec.rebuild(
        &spec
            .eigenvalues()
            .iter()
            .map(|&x| if on_support(x) { 1.0 / x.sqrt() } else { 0.0 })
            .collect::<Vec<_>>(),
    );
    let support = spec.rebuild(
        &spec
            .eigenvalues()
            .iter()
            .map(|&x| if on_support(x) { 1.0 } else { 0.0 })
            .collect::<Vec<_>>(),
    );
    let elements = states.par_iter().map(|s| inv_sqrt.sandwich(s.matrix())).collect();
    Ok(Povm { elements, support })
}

fn diagonal_srm(states: &[DensityMatrix], total: &[f64]) -> Povm {
    let max = total.iter().copied().fold(1.0, f64::max);
    let cut = eigen_floor() * max;
    let support: Vec<f64> = total.iter().map(|&t| if t > cut { 1.0 } else { 0.0 }).collect();
    let elements = states
        .iter()
        .map(|s| {
            let x: Vec<f64> = s
                .matrix()
                .diagonal()
                .iter()
                .zip(total)
                .map(|(&p, &t)| if t > cut { p / t } else { 0.0 })
                .collect();
            HermitianMatrix::from_real_diagonal(&x)
        })
        .collect();
    Povm {
        elements,
        support: HermitianMatrix::from_real_diagonal(&support),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorProfile {
    pub per_word: Vec<f64>,
    pub average: f64,
    pub max: f64,
}

impl ErrorProfile {
    pub fn from_per_word(per_word: Vec<f64>) -> Self {
        let average = per_word.iter().sum::<f64>() / per_word.len() as f64;
        let max = per_word.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ErrorProfile { per_word, average, max }
    }
}

/// `P_j = 1 - Tr S_j X_j`; outcome mass outside every `X_j` counts as error.
pub fn error_profile(states: &[DensityMatrix], povm: &Povm) -> Result<ErrorProfile> {
    if states.len() != povm.len() || states.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: povm.len(),
            found: states.len(),
            index: None,
        });
    }
    let mut per_word = Vec::with_capacity(states.len());
    for (j, (s, x)) in states.iter().zip(&povm.elements).enumerate() {
        if s.dim() != x.dim() {
            return Err(Error::DimensionMismatch {
                expected: x.dim(),
                found: s.dim(),
                index: Some(j),
            });
        }
        // clamp roundoff below zero; success probability cannot exceed 1
        per_word.push((1.0 - trace_product(s.matrix().matrix(), x.matrix()).re).max(0.0));
    }
    Ok(ErrorProfile::from_per_word(per_word))
}

pub fn decode_profile(ch: &Channel, code: &Codebook) -> Result<ErrorProfile> {
    let states = codebook_states(ch, code)?;
    let povm = square_root_measurement(&states)?;
    error_profile(&states, &povm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub n: usize,
    pub m: usize,
    pub rate_nats: f64,
    pub trials: usize,
    pub mean_average_error: f64,
    pub mean_max_error: f64,
    /// `-ln(mean P_avg) / n`; absent when no trial made an error.
    pub exponent_proxy: Option<f64>,
}

/// Mean SRM error over `trials` random codebooks; trial `t` draws its
/// codebook from stream `t` of `seed`.
pub fn random_code_trial(
    ch: &Channel,
    prior: &Prior,
    n: usize,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<TrialSummary> {
    ch.check_prior(prior)?;
    if trials == 0 || m == 0 || n == 0 {
        return Err(Error::InvalidParameter("n, M and trials must be at least 1".into()));
    }
    block_dim(ch.dim(), n, DEFAULT_DIM_CAP)?;
    let profiles: Vec<ErrorProfile> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let code = Codebook::random(&mut instance_rng(seed, t), prior, n, m)?;
            decode_profile(ch, &code)
        })
        .collect::<Result<_>>()?;
    let mean_average_error = profiles.iter().map(|p| p.average).sum::<f64>() / trials as f64;
    let mean_max_error = profiles.iter().map(|p| p.max).sum::<f64>() / trials as f64;
    let exponent_proxy = (mean_average_error > 0.0).then(|| -mean_average_error.ln() / n as f64);
    Ok(TrialSummary {
        n,
        m,
        rate_nats: (m as f64).ln() / n as f64,
        trials,
        mean_average_error,
        mean_max_error,
        exponent_proxy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_channel, random_mixed_state, random_rank_deficient_state, random_unitary, StateEnsemble};

    fn orthogonal_qubit() -> Channel {
        Channel::diagonal(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    fn bsc(p: f64) -> Channel {
        Channel::diagonal(&[vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap()
    }

    #[test]
    fn codebook_validation() {
        assert!(Codebook::new(2, 2, vec![]).is_err());
        assert!(Codebook::new(2, 2, vec![vec![0, 2]]).is_err());
        assert!(Codebook::new(2, 2, vec![vec![0]]).is_err());
        let c = Codebook::new(2, 2, vec![vec![0, 1], vec![1, 1]]).unwrap();
        assert!((c.rate() - 2f64.ln() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_letter_codeword_is_channel_state() {
        let mut rng = instance_rng(1, 0);
        let ch = random_channel(&mut rng, 2, 3, StateEnsemble::HaarMixed);
        assert_eq!(codeword_state(&ch, &[1]).unwrap().matrix(), ch.state(1).matrix());
    }

    #[test]
    fn diagonal_product_state() {
        let ch = Channel::diagonal(&[vec![0.7, 0.3], vec![0.2, 0.8]]).unwrap();
        let s = codeword_state(&ch, &[0, 0]).unwrap();
        let expected = [0.49, 0.21, 0.21, 0.09];
        for (x, e) in s.matrix().diagonal().iter().zip(expected) {
            assert!((x - e).abs() < 1e-15);
        }
        assert!(s.matrix().is_diagonal());
    }

    #[test]
    fn product_trace_is_one() {
        let mut rng = instance_rng(2, 0);
        let ch = random_channel(&mut rng, 3, 2, StateEnsemble::HaarMixed);
        let s = codeword_state(&ch, &[0, 2, 1, 1]).unwrap();
        assert_eq!(s.dim(), 16);
        assert!((s.matrix().trace() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dimension_cap_enforced() {
        let ch = bsc(0.1);
        assert!(matches!(
            codeword_state(&ch, &[0; 15]),
            Err(Error::DimensionCap { dim: 32768, cap: DEFAULT_DIM_CAP })
        ));
        assert!(matches!(
            codeword_state_with_cap(&ch, &[0; 3], 4),
            Err(Error::DimensionCap { .. })
        ));
        assert!(random_code_trial(&ch, &Prior::uniform(2), 15, 2, 1, 0).is_err());
    }

    #[test]
    fn orthogonal_pure_states_give_projectors() {
        let ch = orthogonal_qubit();
        let states = vec![ch.state(0).clone(), ch.state(1).clone()];
        let povm = square_root_measurement(&states).unwrap();
        for (x, s) in povm.elements.iter().zip(&states) {
            assert!(x.sub(s.matrix()).max_abs() < 1e-12);
        }
        let prof = error_profile(&states, &povm).unwrap();
        assert!(prof.average.abs() < 1e-12);
    }

    #[test]
    fn identical_states_split_support() {
        let mut rng = instance_rng(3, 0);
        let s = random_rank_deficient_state(&mut rng, 4);
        let povm = square_root_measurement(&[s.clone(), s.clone()]).unwrap();
        for x in &povm.elements {
            assert!(x.sub(&povm.support.scaled(0.5)).max_abs() < 1e-9);
        }
        assert!((povm.support.trace() - s.spectrum().eigenvalues().iter().filter(|&&x| x > 1e-12).count() as f64).abs() < 1e-9);
        let prof = error_profile(&[s.clone(), s], &povm).unwrap();
        assert!((prof.average - 0.5).abs() < 1e-9);
    }

    #[test]
    fn random_qubit_pairs_complete_on_support() {
        let mut rng = instance_rng(4, 0);
        let states: Vec<DensityMatrix> = (0..3)
            .map(|_| random_mixed_state(&mut rng, 2).kron(&random_mixed_state(&mut rng, 2)))
            .collect();
        let povm = square_root_measurement(&states).unwrap();
        assert!(povm.completeness_residual() < 1e-9);
        povm.check().unwrap();
    }

    #[test]
    fn diagonal_matches_scalar_srm_formula() {
        let mut rng = instance_rng(5, 0);
        for _ in 0..10 {
            let ch = random_channel(&mut rng, 3, 4, StateEnsemble::Diagonal);
            let states: Vec<DensityMatrix> = (0..3).map(|i| ch.state(i).clone()).collect();
            let prof = error_profile(&states, &square_root_measurement(&states).unwrap()).unwrap();
            // a common rotation takes the dense path and must not change P_j
            let u = random_unitary(&mut rng, 4);
            let rotated: Vec<DensityMatrix> = states.iter().map(|s| s.conjugated(&u).unwrap()).collect();
            let dense = error_profile(&rotated, &square_root_measurement(&rotated).unwrap()).unwrap();
            let p: Vec<Vec<f64>> = states.iter().map(|s| s.matrix().diagonal()).collect();
            for j in 0..3 {
                let oracle = 1.0 - (0..4).map(|x| p[j][x] * p[j][x] / (0..3).map(|k| p[k][x]).sum::<f64>()).sum::<f64>();
                assert!((prof.per_word[j] - oracle).abs() < 1e-10);
                assert!((dense.per_word[j] - oracle).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn exhaustive_two_word_orthogonal_codebooks() {
        let ch = orthogonal_qubit();
        let mut total = 0.0;
        for w0 in 0..2 {
            for w1 in 0..2 {
                let code = Codebook::new(2, 1, vec![vec![w0], vec![w1]]).unwrap();
                total += decode_profile(&ch, &code).unwrap().average;
            }
        }
        assert!((total / 4.0 - 0.25).abs() < 1e-12);
        let mc = random_code_trial(&ch, &Prior::uniform(2), 1, 2, 4000, 0).unwrap();
        // binomial standard error is 0.25 / sqrt(4000) ~ 0.004
        assert!((mc.mean_average_error - 0.25).abs() < 0.02, "{mc:?}");
    }

    #[test]
    fn single_word_never_errs() {
        let mut rng = instance_rng(6, 0);
        let ch = random_channel(&mut rng, 2, 2, StateEnsemble::HaarMixed);
        let t = random_code_trial(&ch, &Prior::uniform(2), 3, 1, 5, 0).unwrap();
        assert!(t.mean_average_error.abs() < 1e-12);
    }

    #[test]
    fn profile_invariants_and_permutation_equivariance() {
        let mut rng = instance_rng(7, 0);
        let ch = random_channel(&mut rng, 3, 2, StateEnsemble::HaarMixed);
        let code = Codebook::random(&mut rng, &Prior::uniform(3), 2, 5).unwrap();
        let prof = decode_profile(&ch, &code).unwrap();
        assert!(prof.per_word.iter().all(|&p| (0.0..=1.0 + 1e-10).contains(&p)));
        assert!((prof.average - prof.per_word.iter().sum::<f64>() / 5.0).abs() < 1e-15);
        let perm = [3, 0, 4, 1, 2];
        let permuted = Codebook::new(3, 2, perm.iter().map(|&i| code.words()[i].clone()).collect()).unwrap();
        let pp = decode_profile(&ch, &permuted).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            assert!((pp.per_word[k] - prof.per_word[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn trials_are_deterministic() {
        let ch = bsc(0.1);
        let a = random_code_trial(&ch, &Prior::uniform(2), 3, 3, 50, 17).unwrap();
        let b = random_code_trial(&ch, &Prior::uniform(2), 3, 3, 50, 17).unwrap();
        assert_eq!(a, b);
        assert!((a.rate_nats - 3f64.ln() / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bsc_error_trend_report() {
        // fixed rate ln2/2 with M = 2^(n/2), well below capacity
        let ch = bsc(0.01);
        let errs: Vec<f64> = [2usize, 4, 6]
            .iter()
            .map(|&n| {
                random_code_trial(&ch, &Prior::uniform(2), n, 1 << (n / 2), 1000, 1)
                    .unwrap()
                    .mean_average_error
            })
            .collect();
        eprintln!("BSC(0.01) mean P_avg at R = ln2/2 for n = 2, 4, 6: {errs:?}");
        assert!(errs.iter().all(|e| (0.0..=1.0).contains(e)));
        // Monte-Carlo slack of a few standard errors
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 0.02));
    }
}
