//! Random-coding exponent `E_r(R) = max_pi max_{s in [0,1]} [E_q(pi, s) - sR]`,
//! rate-exponent curves and a capacity estimate.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{holevo_weights, Channel, Prior};
use crate::error::{Error, Result};
use crate::exponent::eq_aux_weights;
use crate::random::{instance_rng, random_probability_vector};

/// Absolute tolerance on `s` for the golden-section search.
pub const S_TOL: f64 = 1e-8;
pub const DEFAULT_STARTS: usize = 20;
const FD_STEP: f64 = 1e-6;
const MAX_ASCENT_ITERS: usize = 500;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateExponentPoint {
    /// Nats per channel use.
    pub rate: f64,
    pub s_star: f64,
    pub prior_star: Prior,
    /// Nats.
    pub value: f64,
}

fn check_rate(rate: f64) -> Result<()> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::InvalidParameter(format!("rate {rate} must be finite and nonnegative")));
    }
    Ok(())
}

/// Maximizes `E_q(pi, s) - s R` over `s` in `[0, 1]`; returns `(s_star, value)`
/// with value clamped at 0 (and `s_star = 0` whenever the maximum is not positive).
pub fn sup_over_s(ch: &Channel, prior: &Prior, rate: f64) -> Result<(f64, f64)> {
    ch.check_prior(prior)?;
    check_rate(rate)?;
    sup_over_s_weights(ch, prior.weights(), rate)
}

fn sup_over_s_weights(ch: &Channel, weights: &[f64], rate: f64) -> Result<(f64, f64)> {
    let f = |s: f64| -> Result<f64> { Ok(eq_aux_weights(ch, weights, s)? - s * rate) };
    let (s_mid, v_mid) = golden_section_max(&f, 0.0, 1.0, S_TOL)?;
    // E_q(pi, 0) = -ln Tr sum pi_i S_i = 0 exactly
    let mut best = (0.0, 0.0);
    for cand in [(s_mid, v_mid), (1.0, f(1.0)?)] {
        if cand.1 >= best.1 {
            best = cand;
        }
    }
    if best.1 <= 0.0 {
        return Ok((0.0, 0.0));
    }
    Ok(best)
}

/// Golden-section search for the maximum of a unimodal function on `[lo, hi]`.
pub fn golden_section_max<F>(f: &F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    let w: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSearch {
    pub weights: Vec<f64>,
    pub value: f64,
    pub starts: usize,
    /// Starts whose ascent never improved on the starting value.
    pub non_improving: usize,
    /// Starts abandoned on an evaluation error.
    pub failed: usize,
}

fn compare_candidates(a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)) -> Ordering {
    // larger value wins, then the lexicographically smaller prior
    a.1.total_cmp(&b.1).then_with(|| {
        for (x, y) in a.0.iter().zip(&b.0) {
            match y.total_cmp(x) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    })
}

/// Start points: uniform, the vertices, then flat-Dirichlet draws.
pub fn start_points(a: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut starts = vec![vec![1.0 / a as f64; a]];
    for i in 0..a {
        if starts.len() >= count {
            break;
        }
        let mut v = vec![0.0; a];
        v[i] = 1.0;
        starts.push(v);
    }
    let mut k = 0;
    while starts.len() < count {
        starts.push(random_probability_vector(&mut instance_rng(seed, k), a));
        k += 1;
    }
    starts
}

struct Ascent {
    weights: Vec<f64>,
    value: f64,
    improved: bool,
}

fn ascend<F>(f: &F, start: Vec<f64>) -> Result<Ascent>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let a = start.len();
    let mut w = start;
    let mut v = f(&w)?;
    let mut improved = false;
    let mut eta = 1.0;
    for _ in 0..MAX_ASCENT_ITERS {
        let mut dir = vec![0.0; a];
        for (i, di) in dir.iter_mut().enumerate() {
            let probe: Vec<f64> = w
                .iter()
                .enumerate()
                .map(|(k, &wk)| wk + FD_STEP * (if k == i { 1.0 } else { 0.0 } - wk))
                .collect();
            *di = (f(&probe)? - v) / FD_STEP;
        }
        let mean = dir.iter().sum::<f64>() / a as f64;
        let grad: Vec<f64> = dir.iter().map(|d| d - mean).collect();
        if grad.iter().all(|g| g.abs() < 1e-14) {
            break;
        }
        let mut accepted = None;
        eta *= 2.0;
        for _ in 0..MAX_HALVINGS {
            let cand = project_to_simplex(&w.iter().zip(&grad).map(|(x, g)| x + eta * g).collect::<Vec<_>>());
            let fv = f(&cand)?;
            if fv > v {
                accepted = Some((cand, fv));
                break;
            }
            eta *= 0.5;
        }
        let Some((cand, fv)) = accepted else { break };
        let gain = fv - v;
        w = cand;
        v = fv;
        improved = true;
        if gain <= 1e-15 * (1.0 + v.abs()) {
            break;
        }
    }
    Ok(Ascent {
        weights: w,
        value: v,
        improved,
    })
}

/// Multi-start projected finite-difference ascent of `f` over the
/// `a`-simplex. Starts run in parallel; the reduction is order-independent.
pub fn maximize_on_simplex<F>(a: usize, f: F, starts: usize, seed: u64) -> Result<SimplexSearch>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if a == 0 {
        return Err(Error::InvalidParameter("empty alphabet".into()));
    }
    if a == 1 {
        let w = vec![1.0];
        let value = f(&w)?;
        return Ok(SimplexSearch {
            weights: w,
            value,
            starts: 1,
            non_improving: 0,
            failed: 0,
        });
    }
    let points = start_points(a, starts.max(1), seed);
    let outcomes: Vec<Result<Ascent>> = points.into_par_iter().map(|p| ascend(&f, p)).collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut non_improving = 0;
    let mut failed = 0;
    let mut first_error = None;
    for o in outcomes {
        match o {
            Ok(asc) => {
                if !asc.improved {
                    non_improving += 1;
                }
                let cand = (asc.weights, asc.value);
                if best.as_ref().is_none_or(|b| compare_candidates(&cand, b) == Ordering::Greater) {
                    best = Some(cand);
                }
            }
            Err(e) => {
                failed += 1;
                first_error.get_or_insert(e);
            }
        }
    }
    let Some((weights, value)) = best else {
        return Err(first_error.expect("at least one start"));
    };
    Ok(SimplexSearch {
        weights,
        value,
        starts: starts.max(1),
        non_improving,
        failed,
    })
}

/// `E_r(R)` with the maximizing prior and `s`.
pub fn max_over_prior(ch: &Channel, rate: f64, seed: u64) -> Result<RateExponentPoint> {
    Ok(max_over_prior_search(ch, rate, seed)?.0)
}

/// As [`max_over_prior`], also returning the search statistics.
pub fn max_over_prior_search(ch: &Channel, rate: f64, seed: u64) -> Result<(RateExponentPoint, SimplexSearch)> {
    check_rate(rate)?;
    let search = maximize_on_simplex(
        ch.alphabet_size(),
        |w| Ok(sup_over_s_weights(ch, w, rate)?.1),
        DEFAULT_STARTS,
        seed,
    )?;
    let (s_star, value) = sup_over_s_weights(ch, &search.weights, rate)?;
    let point = RateExponentPoint {
        rate,
        s_star,
        prior_star: Prior::from_simplex_unchecked(search.weights.clone()),
        value,
    };
    Ok((point, search))
}

/// `max_pi chi(pi)` in nats.
pub fn capacity_estimate(ch: &Channel, seed: u64) -> Result<(f64, Prior)> {
    let search = maximize_on_simplex(ch.alphabet_size(), |w| holevo_weights(ch, w), DEFAULT_STARTS, seed)?;
    Ok((search.value, Prior::from_simplex_unchecked(search.weights)))
}

/// Curve over an increasing rate grid. Every point is also re-evaluated with
/// the priors found at the other rates, so a better prior found anywhere on
/// the grid is used everywhere.
pub fn curve(ch: &Channel, rates: &[f64], seed: u64) -> Result<Vec<RateExponentPoint>> {
    for r in rates {
        check_rate(*r)?;
    }
    if rates.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("rate grid must be strictly increasing".into()));
    }
    let points: Vec<RateExponentPoint> = rates
        .par_iter()
        .map(|&r| max_over_prior(ch, r, seed))
        .collect::<Result<_>>()?;
    let priors: Vec<&Prior> = points.iter().map(|p| &p.prior_star).collect();
    points
        .par_iter()
        .map(|p| {
            let mut best = p.clone();
            for prior in &priors {
                let (s_star, value) = sup_over_s_weights(ch, prior.weights(), p.rate)?;
                let cand = (prior.weights().to_vec(), value);
                let cur = (best.prior_star.weights().to_vec(), best.value);
                if compare_candidates(&cand, &cur) == Ordering::Greater {
                    best = RateExponentPoint {
                        rate: p.rate,
                        s_star,
                        prior_star: (*prior).clone(),
                        value,
                    };
                }
            }
            Ok(best)
        })
        .collect()
}
