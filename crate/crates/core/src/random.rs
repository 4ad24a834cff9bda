//! Random states, channels, priors and unitaries for test ensembles.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::{Channel, DensityMatrix, Prior};
use crate::spectral::{Complex, ComplexMatrix, HermitianMatrix};

/// Smallest eigenvalue kept by the positive-definite ensembles.
pub const PD_FLOOR: f64 = 1e-6;

/// Independent stream `index` of the generator seeded by `seed`.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateEnsemble {
    /// Normalized `G G†` with complex Gaussian `G`, floored to be positive definite.
    HaarMixed,
    /// Normalized `G G†` with `G` of rank below the dimension.
    RankDeficient,
    /// Commuting diagonal states.
    Diagonal,
    /// A common state plus small independent perturbations.
    NearIdentical,
}

impl StateEnsemble {
    pub const ALL: [StateEnsemble; 4] = [
        StateEnsemble::HaarMixed,
        StateEnsemble::RankDeficient,
        StateEnsemble::Diagonal,
        StateEnsemble::NearIdentical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StateEnsemble::HaarMixed => "haar-mixed",
            StateEnsemble::RankDeficient => "rank-deficient",
            StateEnsemble::Diagonal => "diagonal",
            StateEnsemble::NearIdentical => "near-identical",
        }
    }

    /// Ensembles whose states are strictly positive definite.
    pub fn is_positive_definite(self) -> bool {
        self != StateEnsemble::RankDeficient
    }
}

impl fmt::Display for StateEnsemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StateEnsemble {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        StateEnsemble::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown ensemble '{s}'"))
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(re, im)
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// GUE-like random Hermitian matrix.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianMatrix {
    HermitianMatrix::hermitian_part(&ginibre(rng, dim, dim)).expect("finite")
}

/// Eigenvector matrix of a random Hermitian matrix with random column phases.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let mut v = random_hermitian(rng, dim)
        .eigh()
        .expect("eigensolver converges")
        .eigenvectors()
        .clone();
    for j in 0..dim {
        let phase = Complex::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
        for i in 0..dim {
            v[(i, j)] *= phase;
        }
    }
    v
}

fn floored(h: HermitianMatrix, floor: f64) -> DensityMatrix {
    let eig = h.eigh().expect("eigensolver converges");
    let vals: Vec<f64> = eig.eigenvalues().iter().map(|&l| l.max(floor)).collect();
    let total: f64 = vals.iter().sum();
    let vals: Vec<f64> = vals.iter().map(|l| l / total).collect();
    let m = eig.rebuild(&vals);
    let t = m.trace();
    DensityMatrix::new(m.scaled(1.0 / t)).expect("floored state is valid")
}

fn wishart_state<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> HermitianMatrix {
    let g = ginibre(rng, dim, rank);
    let m = HermitianMatrix::hermitian_part(&(&g * g.adjoint())).expect("finite");
    let t = m.trace();
    m.scaled(1.0 / t)
}

/// Full-rank mixed state with eigenvalues at least [`PD_FLOOR`] (before renormalization).
pub fn random_mixed_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityMatrix {
    floored(wishart_state(rng, dim, dim), PD_FLOOR)
}

pub fn random_rank_deficient_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityMatrix {
    let rank = if dim > 1 { rng.random_range(1..dim) } else { 1 };
    DensityMatrix::normalized(wishart_state(rng, dim, rank)).expect("Wishart state is valid")
}

pub fn random_probability_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

pub fn random_diagonal_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityMatrix {
    let p: Vec<f64> = random_probability_vector(rng, dim)
        .into_iter()
        .map(|x| x.max(PD_FLOOR))
        .collect();
    let total: f64 = p.iter().sum();
    let p: Vec<f64> = p.iter().map(|x| x / total).collect();
    DensityMatrix::normalized(HermitianMatrix::from_real_diagonal(&p)).expect("diagonal state is valid")
}

/// Uniform (flat Dirichlet) prior.
pub fn random_prior<R: Rng + ?Sized>(rng: &mut R, a: usize) -> Prior {
    Prior::from_simplex_unchecked(random_probability_vector(rng, a))
}

pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, a: usize, dim: usize, ensemble: StateEnsemble) -> Channel {
    let states = match ensemble {
        StateEnsemble::HaarMixed => (0..a).map(|_| random_mixed_state(rng, dim)).collect(),
        StateEnsemble::RankDeficient => (0..a).map(|_| random_rank_deficient_state(rng, dim)).collect(),
        StateEnsemble::Diagonal => (0..a).map(|_| random_diagonal_state(rng, dim)).collect(),
        StateEnsemble::NearIdentical => {
            let base = random_mixed_state(rng, dim);
            (0..a)
                .map(|_| {
                    // log-uniform perturbation size in [1e-6, 1e-2]
                    let eps = 10f64.powf(rng.random_range(-6.0..-2.0));
                    let other = random_mixed_state(rng, dim);
                    let m = base.matrix().scaled(1.0 - eps).add(&other.matrix().scaled(eps));
                    DensityMatrix::normalized(m).expect("convex combination is valid")
                })
                .collect()
        }
    };
    Channel::new(states).expect("uniform dimension")
}
