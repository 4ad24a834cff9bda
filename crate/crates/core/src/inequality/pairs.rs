//! Monotone and antimonotone pairs of scalar functions and the trace
//! inequality `Tr[f(A) X g(A) X] <= Tr[f(A) g(A) X^2]` they control.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{InequalityId, InequalityReport};
use crate::error::{Error, Result};
use crate::random::instance_rng;
use crate::spectral::{trace_product, HermitianMatrix};

/// Registry of scalar functions, composable with `outer@inner`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarFn {
    Identity,
    Power(f64),
    Inverse,
    Log,
    /// `-x ln x`
    Entropy,
    /// `outer(inner(x))`
    Compose(Box<ScalarFn>, Box<ScalarFn>),
}

impl ScalarFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ScalarFn::Identity => x,
            ScalarFn::Power(p) => x.powf(*p),
            ScalarFn::Inverse => 1.0 / x,
            ScalarFn::Log => x.ln(),
            ScalarFn::Entropy => -x * x.ln(),
            ScalarFn::Compose(outer, inner) => outer.eval(inner.eval(x)),
        }
    }

    pub fn try_eval(&self, x: f64) -> Result<f64> {
        let y = self.eval(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::FunctionDomain { x })
        }
    }
}

impl fmt::Display for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarFn::Identity => f.write_str("x"),
            ScalarFn::Power(p) => write!(f, "pow:{p}"),
            ScalarFn::Inverse => f.write_str("inv"),
            ScalarFn::Log => f.write_str("log"),
            ScalarFn::Entropy => f.write_str("entropy"),
            ScalarFn::Compose(o, i) => write!(f, "{o}@{i}"),
        }
    }
}

impl FromStr for ScalarFn {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if let Some((outer, inner)) = s.split_once('@') {
            return Ok(ScalarFn::Compose(Box::new(outer.parse()?), Box::new(inner.parse()?)));
        }
        match s {
            "x" | "id" => Ok(ScalarFn::Identity),
            "inv" => Ok(ScalarFn::Inverse),
            "log" => Ok(ScalarFn::Log),
            "entropy" => Ok(ScalarFn::Entropy),
            _ => match s.strip_prefix("pow:") {
                Some(p) => p
                    .parse::<f64>()
                    .map(ScalarFn::Power)
                    .map_err(|e| format!("bad exponent in '{s}': {e}")),
                None => Err(format!("unknown scalar function '{s}'")),
            },
        }
    }
}

impl Serialize for ScalarFn {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ScalarFn {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Open interval `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!("empty domain ({lo}, {hi})")));
        }
        Ok(Domain { lo, hi })
    }

    pub fn positive() -> Self {
        Domain {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    /// Sampling window: unbounded ends are cut at `1e3` in magnitude and a
    /// lower end at 0 is lifted to `1e-9`.
    fn sampling_window(&self) -> (f64, f64) {
        let lo = if self.lo == 0.0 {
            1e-9
        } else if self.lo == f64::NEG_INFINITY {
            -1e3
        } else {
            self.lo
        };
        let hi = if self.hi == f64::INFINITY { 1e3 } else { self.hi };
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonePairSpec {
    pub f: ScalarFn,
    pub g: ScalarFn,
    pub domain: Domain,
}

impl MonotonePairSpec {
    pub fn new(f: ScalarFn, g: ScalarFn, domain: Domain) -> Self {
        MonotonePairSpec { f, g, domain }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairKind {
    Monotone,
    Antimonotone,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub kind: PairKind,
    /// Smallest sampled `(f(a)-f(b))(g(a)-g(b))`.
    pub min_product: f64,
    pub max_product: f64,
    /// Sample attaining `min_product`.
    pub worst_pair: (f64, f64),
}

impl PairCheck {
    pub fn is_monotone(&self) -> bool {
        self.kind == PairKind::Monotone
    }

    pub fn is_antimonotone(&self) -> bool {
        self.kind == PairKind::Antimonotone
    }
}

/// Samples `sample_count` pairs uniformly from the domain. A pair whose
/// products all vanish (e.g. a constant `f`) is reported as monotone.
pub fn monotone_pair_check(spec: &MonotonePairSpec, sample_count: usize, seed: u64) -> Result<PairCheck> {
    if sample_count == 0 {
        return Err(Error::InvalidParameter("sample_count must be positive".into()));
    }
    let (lo, hi) = spec.domain.sampling_window();
    let mut rng = instance_rng(seed, 0);
    let mut min_product = f64::INFINITY;
    let mut max_product = f64::NEG_INFINITY;
    let mut worst_pair = (lo, lo);
    for _ in 0..sample_count {
        let a = rng.random_range(lo..hi);
        let b = rng.random_range(lo..hi);
        let p = (spec.f.try_eval(a)? - spec.f.try_eval(b)?) * (spec.g.try_eval(a)? - spec.g.try_eval(b)?);
        if p < min_product {
            min_product = p;
            worst_pair = (a, b);
        }
        max_product = max_product.max(p);
    }
    let kind = if min_product >= 0.0 {
        PairKind::Monotone
    } else if max_product <= 0.0 {
        PairKind::Antimonotone
    } else {
        PairKind::Neither
    };
    Ok(PairCheck {
        kind,
        min_product,
        max_product,
        worst_pair,
    })
}

const CLASSIFY_SAMPLES: usize = 512;

/// `Tr[f(A) X g(A) X]` against `Tr[f(A) g(A) X^2]`, oriented by the pair's
/// classification so that a nonnegative gap means the inequality holds.
pub fn trace_pair_gap(spec: &MonotonePairSpec, a: &HermitianMatrix, x: &HermitianMatrix) -> Result<InequalityReport> {
    if a.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: x.dim(),
            index: None,
        });
    }
    let eig = a.eigh()?;
    if let Some(&l) = eig.eigenvalues().iter().find(|&&l| !spec.domain.contains(l)) {
        return Err(Error::SpectrumOutsideDomain {
            eigenvalue: l,
            lo: spec.domain.lo,
            hi: spec.domain.hi,
        });
    }
    let kind = monotone_pair_check(spec, CLASSIFY_SAMPLES, 0)?.kind;
    let fa = eig.apply(|l| spec.f.eval(l), false)?;
    let ga = eig.apply(|l| spec.g.eval(l), false)?;
    let fga = eig.apply(|l| spec.f.eval(l) * spec.g.eval(l), false)?;
    let mixed = trace_product(&(fa.matrix() * x.matrix()), &(ga.matrix() * x.matrix()));
    let squared = trace_product(fga.matrix(), x.square().matrix());
    let imag = mixed.im.abs().max(squared.im.abs());
    let report = match kind {
        PairKind::Monotone => InequalityReport::new(InequalityId::TracePair, squared.re, mixed.re, imag),
        PairKind::Antimonotone => InequalityReport::new(InequalityId::TracePair, mixed.re, squared.re, imag),
        PairKind::Neither => return Err(Error::UnclassifiedPair),
    };
    Ok(report)
}
