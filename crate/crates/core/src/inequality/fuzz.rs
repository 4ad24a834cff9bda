//! Seeded random campaigns over channels, priors and `s`.
//!
//! Instance `i` draws everything from stream `i` of the campaign seed, so a
//! campaign is reproducible regardless of thread scheduling; the reduction
//! (count, min) takes instances in index order.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, tau, InequalityId, InequalityReport, Witness};
use crate::channel::{Channel, DensityMatrix, Prior};
use crate::error::{Error, Result};
use crate::exponent::uniform_grid;
use crate::random::{instance_rng, random_channel, random_prior, StateEnsemble};
use crate::spectral::HermitianMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SSampling {
    Uniform,
    /// Uniform choice among this many equally spaced points of the range.
    Grid(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzConfig {
    /// Inclusive alphabet-size range.
    pub a_range: (usize, usize),
    /// Inclusive dimension range.
    pub d_range: (usize, usize),
    pub s_range: (f64, f64),
    pub s_sampling: SSampling,
    pub instance_count: usize,
    pub seed: u64,
    /// Instance `i` uses `ensembles[i % len]`.
    pub ensembles: Vec<StateEnsemble>,
    pub tau: f64,
    pub shrink: bool,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            a_range: (1, 4),
            d_range: (2, 6),
            s_range: (0.0, 1.0),
            s_sampling: SSampling::Uniform,
            instance_count: 1000,
            seed: 0,
            ensembles: vec![StateEnsemble::HaarMixed],
            tau: tau(),
            shrink: true,
        }
    }
}

impl FuzzConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.a_range.0 < 1 || self.a_range.0 > self.a_range.1 {
            return bad(format!("alphabet range {:?}", self.a_range));
        }
        if self.d_range.0 < 1 || self.d_range.0 > self.d_range.1 {
            return bad(format!("dimension range {:?}", self.d_range));
        }
        let (lo, hi) = self.s_range;
        if !(lo > -1.0) || !(lo <= hi) || !hi.is_finite() {
            return bad(format!("s range ({lo}, {hi}) must lie in (-1, inf) and be nonempty"));
        }
        if let SSampling::Grid(n) = self.s_sampling {
            if n < 2 {
                return bad("s grid needs at least 2 points".into());
            }
        }
        if self.instance_count == 0 {
            return bad("instance count must be at least 1".into());
        }
        if self.ensembles.is_empty() {
            return bad("no state ensemble selected".into());
        }
        if !(self.tau >= 0.0) {
            return bad(format!("tolerance {}", self.tau));
        }
        Ok(())
    }

    /// Campaigns reaching below `s = 0` gather evidence only.
    pub fn is_exploratory(&self) -> bool {
        self.s_range.0 < 0.0
    }
}

#[derive(Debug, Clone)]
pub struct FuzzInstance {
    pub index: u64,
    pub ensemble: StateEnsemble,
    pub channel: Channel,
    pub prior: Prior,
    pub s: f64,
}

pub fn generate_instance(cfg: &FuzzConfig, id: InequalityId, index: u64) -> FuzzInstance {
    let mut rng = instance_rng(cfg.seed, index);
    let a = if id == InequalityId::TwoState {
        2
    } else {
        rng.random_range(cfg.a_range.0..=cfg.a_range.1)
    };
    let d = rng.random_range(cfg.d_range.0..=cfg.d_range.1);
    let (lo, hi) = cfg.s_range;
    let s = match cfg.s_sampling {
        SSampling::Uniform if lo == hi => lo,
        SSampling::Uniform => rng.random_range(lo..=hi),
        SSampling::Grid(n) => uniform_grid(lo, hi, n)[rng.random_range(0..n)],
    };
    let ensemble = cfg.ensembles[(index % cfg.ensembles.len() as u64) as usize];
    let channel = random_channel(&mut rng, a, d, ensemble);
    let prior = if id == InequalityId::TwoState {
        Prior::uniform(2)
    } else {
        random_prior(&mut rng, a)
    };
    FuzzInstance {
        index,
        ensemble,
        channel,
        prior,
        s,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzSummary {
    pub inequality: InequalityId,
    pub exploratory: bool,
    pub seed: u64,
    pub tau: f64,
    pub instances: usize,
    pub evaluated: usize,
    pub errors: usize,
    /// First few evaluation errors, with their instance index.
    pub error_samples: Vec<String>,
    pub violations: usize,
    pub support_restricted: usize,
    /// Smallest `gap / scale`.
    pub min_normalized_gap: f64,
    pub max_imag_residue: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_formulation_residual: Option<f64>,
    /// Instance attaining `min_normalized_gap` (after shrinking when it is a
    /// violation), with its witness.
    pub worst: Option<InequalityReport>,
    pub shrunk: bool,
}

impl FuzzSummary {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.errors == 0
    }
}

const ERROR_SAMPLES: usize = 5;

pub fn fuzz(id: InequalityId, cfg: &FuzzConfig) -> Result<FuzzSummary> {
    cfg.validate()?;
    let results: Vec<Result<InequalityReport>> = (0..cfg.instance_count as u64)
        .into_par_iter()
        .map(|i| {
            let inst = generate_instance(cfg, id, i);
            evaluate(id, &inst.channel, &inst.prior, inst.s)
        })
        .collect();

    let mut summary = FuzzSummary {
        inequality: id,
        exploratory: cfg.is_exploratory(),
        seed: cfg.seed,
        tau: cfg.tau,
        instances: cfg.instance_count,
        evaluated: 0,
        errors: 0,
        error_samples: Vec::new(),
        violations: 0,
        support_restricted: 0,
        min_normalized_gap: f64::INFINITY,
        max_imag_residue: 0.0,
        max_formulation_residual: None,
        worst: None,
        shrunk: false,
    };
    let mut worst_index = None;
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok(r) => {
                summary.evaluated += 1;
                if !r.holds(cfg.tau) {
                    summary.violations += 1;
                }
                if r.support_restricted {
                    summary.support_restricted += 1;
                }
                summary.max_imag_residue = summary.max_imag_residue.max(r.imag_residue / r.scale);
                if let Some(f) = r.formulation_residual {
                    let m = summary.max_formulation_residual.get_or_insert(0.0);
                    *m = m.max(f);
                }
                if r.normalized_gap() < summary.min_normalized_gap {
                    summary.min_normalized_gap = r.normalized_gap();
                    summary.worst = Some(r);
                    worst_index = Some(i as u64);
                }
            }
            Err(e) => {
                summary.errors += 1;
                if summary.error_samples.len() < ERROR_SAMPLES {
                    summary.error_samples.push(format!("instance {i}: {e}"));
                }
            }
        }
    }

    if let (Some(index), Some(worst)) = (worst_index, summary.worst.take()) {
        let inst = generate_instance(cfg, id, index);
        let (inst, mut report) = if cfg.shrink && !worst.holds(cfg.tau) {
            summary.shrunk = true;
            shrink(inst, |c| evaluate(id, &c.channel, &c.prior, c.s), cfg.tau)
        } else {
            (inst, worst)
        };
        report.witness = Some(Witness::new(id, &inst.channel, &inst.prior, inst.s, cfg.seed, inst.index));
        summary.worst = Some(report);
    }
    Ok(summary)
}

fn principal_compression(ch: &Channel, drop: usize) -> Option<Channel> {
    let states = ch
        .states()
        .iter()
        .map(|s| {
            let m = s.matrix().matrix().clone().remove_row(drop).remove_column(drop);
            let h = HermitianMatrix::hermitian_part(&m).ok()?;
            DensityMatrix::normalized(h).ok()
        })
        .collect::<Option<Vec<_>>>()?;
    Channel::new(states).ok()
}

fn contraction(ch: &Channel, prior: &Prior, t: f64) -> Option<Channel> {
    let mut mean = HermitianMatrix::zeros(ch.dim());
    for (s, &w) in ch.states().iter().zip(prior.weights()) {
        mean = mean.add(&s.matrix().scaled(w));
    }
    let states = ch
        .states()
        .iter()
        .map(|s| DensityMatrix::normalized(mean.scaled(1.0 - t).add(&s.matrix().scaled(t))).ok())
        .collect::<Option<Vec<_>>>()?;
    Channel::new(states).ok()
}

fn spread(ch: &Channel, prior: &Prior) -> f64 {
    let mut mean = HermitianMatrix::zeros(ch.dim());
    for (s, &w) in ch.states().iter().zip(prior.weights()) {
        mean = mean.add(&s.matrix().scaled(w));
    }
    ch.states()
        .iter()
        .map(|s| s.matrix().sub(&mean).max_abs())
        .fold(0.0, f64::max)
}

const SHRINK_ROUNDS: usize = 200;

/// Greedy reduction of a violating instance: drop one basis direction
/// (principal compression) or halve every state's distance to the weighted
/// mean, keeping a step only while `eval` still reports a violation.
pub fn shrink<F>(inst: FuzzInstance, eval: F, tau: f64) -> (FuzzInstance, InequalityReport)
where
    F: Fn(&FuzzInstance) -> Result<InequalityReport>,
{
    let mut current = inst;
    let mut report = match eval(&current) {
        Ok(r) => r,
        Err(_) => return (current.clone(), InequalityReport::new(InequalityId::Theorem, f64::NAN, f64::NAN, 0.0)),
    };
    for _ in 0..SHRINK_ROUNDS {
        let mut candidates: Vec<Channel> = Vec::new();
        if current.channel.dim() > 1 {
            candidates.extend((0..current.channel.dim()).filter_map(|k| principal_compression(&current.channel, k)));
        }
        if spread(&current.channel, &current.prior) > 1e-12 {
            candidates.extend(contraction(&current.channel, &current.prior, 0.5));
        }
        let mut accepted = false;
        for ch in candidates {
            let cand = FuzzInstance {
                channel: ch,
                ..current.clone()
            };
            if let Ok(r) = eval(&cand) {
                if !r.holds(tau) {
                    current = cand;
                    report = r;
                    accepted = true;
                    break;
                }
            }
        }
        if !accepted {
            break;
        }
    }
    (current, report)
}
