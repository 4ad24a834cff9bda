//! Property suite over one channel: the auxiliary-function properties and
//! every trace inequality, on seeded random priors and `s` in `[0, 1]`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{holevo_quantity, Channel, Prior};
use crate::error::Result;
use crate::exponent::{concavity_scan, eq_aux, eq_derivative, uniform_grid};
use crate::inequality::{evaluate, InequalityId, FORMULATION_TOL};
use crate::random::{instance_rng, random_prior};

pub const ZERO_TOL: f64 = 1e-12;
pub const DERIVATIVE_TOL: f64 = 1e-5;
pub const SIGN_TOL: f64 = 1e-10;
pub const MONOTONE_TOL: f64 = 1e-8;
pub const CONCAVITY_TOL: f64 = 1e-8;
pub const SCAN_POINTS: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    /// The worst value must be at least the bound.
    AtLeast,
    /// The worst value must be at most the bound.
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check: String,
    pub evaluated: usize,
    /// Instances the check could not be evaluated on (e.g. singular states
    /// for the log-based proof steps).
    pub skipped: usize,
    pub violations: usize,
    pub worst: Option<f64>,
    pub sense: Sense,
    pub bound: f64,
}

impl CheckSummary {
    fn new(check: &str, sense: Sense, bound: f64) -> Self {
        CheckSummary {
            check: check.into(),
            evaluated: 0,
            skipped: 0,
            violations: 0,
            worst: None,
            sense,
            bound,
        }
    }

    fn record(&mut self, value: Option<f64>) {
        let Some(v) = value else {
            self.skipped += 1;
            return;
        };
        self.evaluated += 1;
        let ok = match self.sense {
            Sense::AtLeast => v >= self.bound,
            Sense::AtMost => v <= self.bound,
        };
        if !ok {
            self.violations += 1;
        }
        self.worst = Some(match (self.worst, self.sense) {
            (None, _) => v,
            (Some(w), Sense::AtLeast) => w.min(v),
            (Some(w), Sense::AtMost) => w.max(v),
        });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub instances: usize,
    pub seed: u64,
    pub tau: f64,
    pub checks: Vec<CheckSummary>,
}

impl VerifySummary {
    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }
}

struct InstanceOutcome {
    values: Vec<Option<f64>>,
}

const CHECKS: [(&str, Sense); 13] = [
    ("eq-at-zero", Sense::AtMost),
    ("derivative-at-zero", Sense::AtMost),
    ("sign", Sense::AtLeast),
    ("monotone", Sense::AtLeast),
    ("concave", Sense::AtMost),
    ("theorem", Sense::AtLeast),
    ("eq3", Sense::AtLeast),
    ("formulation", Sense::AtMost),
    ("imag-residue", Sense::AtMost),
    ("jensen", Sense::AtLeast),
    ("jensen-trace", Sense::AtLeast),
    ("trace-pair", Sense::AtLeast),
    ("two-state", Sense::AtLeast),
];

fn bounds(tau: f64) -> [f64; 13] {
    [
        ZERO_TOL,
        DERIVATIVE_TOL,
        -SIGN_TOL,
        -MONOTONE_TOL,
        CONCAVITY_TOL,
        -tau,
        -tau,
        FORMULATION_TOL,
        1e-10,
        -tau,
        -tau,
        -tau,
        -tau,
    ]
}

fn run_instance(ch: &Channel, prior: &Prior, s: f64, grid: &[f64]) -> Result<InstanceOutcome> {
    let mut values = Vec::with_capacity(CHECKS.len());
    values.push(Some(eq_aux(ch, prior, 0.0)?.abs()));
    let chi = holevo_quantity(ch, prior)?;
    values.push(Some((eq_derivative(ch, prior, 0.0)? - chi).abs()));
    // the sign property only concerns channels with non-identical states
    let distinct = ch
        .states()
        .iter()
        .zip(prior.weights())
        .filter(|(_, &w)| w > 0.0)
        .any(|(st, _)| st.matrix().sub(ch.state(0).matrix()).max_abs() > 1e-12);
    values.push(if distinct { Some(eq_aux(ch, prior, s)?) } else { None });
    let scan = concavity_scan(ch, prior, grid)?;
    values.push(Some(-scan.monotone_violation));
    values.push(Some(scan.max_second_difference / scan.scale()));
    let theorem = evaluate(InequalityId::Theorem, ch, prior, s)?;
    values.push(Some(theorem.normalized_gap()));
    values.push(Some(evaluate(InequalityId::Eq3, ch, prior, s)?.normalized_gap()));
    values.push(theorem.formulation_residual);
    values.push(Some(theorem.imag_residue / theorem.scale));
    for id in [InequalityId::Jensen, InequalityId::JensenTrace, InequalityId::TracePair] {
        values.push(evaluate(id, ch, prior, s).ok().map(|r| r.normalized_gap()));
    }
    values.push(if ch.alphabet_size() == 2 {
        Some(evaluate(InequalityId::TwoState, ch, &Prior::uniform(2), s)?.normalized_gap())
    } else {
        None
    });
    Ok(InstanceOutcome { values })
}

/// Instance 0 uses `prior`; instance `k > 0` draws a flat-Dirichlet prior
/// from stream `k` of `seed`. Every instance draws `s` uniformly from `[0, 1]`.
pub fn verify_channel(ch: &Channel, prior: &Prior, instances: usize, seed: u64, tau: f64) -> Result<VerifySummary> {
    ch.check_prior(prior)?;
    let grid = uniform_grid(0.0, 1.0, SCAN_POINTS);
    let outcomes: Vec<Result<InstanceOutcome>> = (0..instances as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = instance_rng(seed, k);
            let s: f64 = rng.random_range(0.0..=1.0);
            let p = if k == 0 {
                prior.clone()
            } else {
                random_prior(&mut rng, ch.alphabet_size())
            };
            run_instance(ch, &p, s, &grid)
        })
        .collect();
    let bounds = bounds(tau);
    let mut checks: Vec<CheckSummary> = CHECKS
        .iter()
        .zip(bounds)
        .map(|(&(name, sense), b)| CheckSummary::new(name, sense, b))
        .collect();
    for o in outcomes {
        let o = o?;
        for (c, v) in checks.iter_mut().zip(o.values) {
            c.record(v);
        }
    }
    Ok(VerifySummary {
        instances,
        seed,
        tau,
        checks,
    })
}
