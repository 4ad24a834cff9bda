//! Numerical checks of the trace inequalities behind concavity of `E_q`,
//! each link of their proof, and a seeded fuzzer that hunts for
//! counterexamples.
//!
//! Every check produces an [`InequalityReport`] whose `gap` is oriented so
//! that `gap >= 0` means the inequality holds. An instance is accepted when
//! `gap >= -tau * scale` with `scale = 1 + |lhs| + |rhs|`.

mod fuzz;
mod jensen;
mod pairs;
mod theorem;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{Channel, ChannelDocument, Prior, StateDocument};
use crate::error::{Error, Result};
use crate::spectral::env_parse;

pub use fuzz::{fuzz, shrink, FuzzConfig, FuzzInstance, FuzzSummary, SSampling};
pub use jensen::{jensen_gap, jensen_instance, jensen_report};
pub use pairs::{
    monotone_pair_check, trace_pair_gap, Domain, MonotonePairSpec, PairCheck, PairKind, ScalarFn,
};
pub use theorem::{
    concavity_trace_gap, eq3_gap, jensen_trace_gap, proof_operators, ProofOperators,
};

/// Default relative tolerance `tau`.
pub const DEFAULT_TAU: f64 = 1e-9;
/// Allowed disagreement between the density-matrix and power-operator
/// formulations of the concavity trace inequality.
pub const FORMULATION_TOL: f64 = 1e-10;

/// `tau`, overridable through `CQREL_TAU`.
pub fn tau() -> f64 {
    env_parse::<f64>("CQREL_TAU")
        .filter(|t| t.is_finite() && *t >= 0.0)
        .unwrap_or(DEFAULT_TAU)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InequalityId {
    /// `Tr[M^s sum pi A (log A)^2 - M^{s-1} (sum pi A log A)^2] >= 0`, `A_i = S_i^{1/(1+s)}`.
    Theorem,
    /// The same inequality written with `S_i` and the matrix entropy `H`.
    Eq3,
    /// Two inputs with equal weights.
    TwoState,
    /// Operator Jensen inequality for `x^2` with the partition built from `A_i`.
    Jensen,
    /// `Tr[M^s sum pi A (log A)^2] >= Tr[M^s X M^{-1} X]`, `X = sum pi A log A`.
    JensenTrace,
    /// `Tr[M^s X M^{-1} X] >= Tr[M^{s-1} X^2]` for the antimonotone pair `(x^s, 1/x)`.
    TracePair,
}

impl InequalityId {
    pub const ALL: [InequalityId; 6] = [
        InequalityId::Theorem,
        InequalityId::Eq3,
        InequalityId::TwoState,
        InequalityId::Jensen,
        InequalityId::JensenTrace,
        InequalityId::TracePair,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InequalityId::Theorem => "theorem",
            InequalityId::Eq3 => "eq3",
            InequalityId::TwoState => "two-state",
            InequalityId::Jensen => "jensen",
            InequalityId::JensenTrace => "jensen-trace",
            InequalityId::TracePair => "trace-pair",
        }
    }

    /// Whether the check needs `log A_i` on the whole space.
    pub fn needs_positive_definite(self) -> bool {
        matches!(self, InequalityId::Jensen | InequalityId::JensenTrace | InequalityId::TracePair)
    }
}

impl fmt::Display for InequalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InequalityId {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        InequalityId::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| format!("unknown inequality '{s}'"))
    }
}

/// Replayable description of one instance: the channel file schema plus
/// the evaluation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub dim: usize,
    pub states: Vec<StateDocument>,
    pub prior: Vec<f64>,
    pub s: f64,
    pub seed: u64,
    #[serde(default)]
    pub instance: u64,
    pub inequality: InequalityId,
}

impl Witness {
    pub fn new(id: InequalityId, ch: &Channel, prior: &Prior, s: f64, seed: u64, instance: u64) -> Self {
        let doc = ChannelDocument::from_channel(ch, None);
        Witness {
            dim: doc.dim,
            states: doc.states,
            prior: prior.weights().to_vec(),
            s,
            seed,
            instance,
            inequality: id,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("witness serializes")
    }

    pub fn channel(&self) -> Result<(Channel, Prior)> {
        ChannelDocument {
            dim: self.dim,
            states: self.states.clone(),
            prior: Some(self.prior.clone()),
        }
        .to_channel()
    }

    /// Re-evaluates the recorded instance.
    pub fn replay(&self) -> Result<InequalityReport> {
        let (ch, prior) = self.channel()?;
        let mut report = evaluate(self.inequality, &ch, &prior, self.s)?;
        report.witness = Some(self.clone());
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub inequality: InequalityId,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`; nonnegative when the inequality holds.
    pub gap: f64,
    pub scale: f64,
    /// Largest imaginary part among the traces that make up `lhs` and `rhs`.
    pub imag_residue: f64,
    /// Set when singular operators were handled on their support.
    pub support_restricted: bool,
    /// Disagreement between the two algebraic formulations, when computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formulation_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl InequalityReport {
    pub(crate) fn new(inequality: InequalityId, lhs: f64, rhs: f64, imag_residue: f64) -> Self {
        InequalityReport {
            inequality,
            lhs,
            rhs,
            gap: lhs - rhs,
            scale: 1.0 + lhs.abs() + rhs.abs(),
            imag_residue,
            support_restricted: false,
            formulation_residual: None,
            witness: None,
        }
    }

    pub fn normalized_gap(&self) -> f64 {
        self.gap / self.scale
    }

    pub fn holds(&self, tau: f64) -> bool {
        self.gap >= -tau * self.scale
    }
}

/// Evaluates inequality `id` for the states of `ch` under `prior` at `s`.
pub fn evaluate(id: InequalityId, ch: &Channel, prior: &Prior, s: f64) -> Result<InequalityReport> {
    ch.check_prior(prior)?;
    if !(s > -1.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("s = {s} must satisfy s > -1")));
    }
    match id {
        InequalityId::Theorem | InequalityId::Eq3 => eq3_gap(ch, prior, s, id),
        InequalityId::TwoState => {
            if ch.alphabet_size() != 2 || prior.weights() != [0.5, 0.5] {
                return Err(Error::InvalidParameter(
                    "two-state check needs two inputs with weights (1/2, 1/2)".into(),
                ));
            }
            let mut r = eq3_gap(ch, prior, s, InequalityId::Theorem)?;
            r.inequality = InequalityId::TwoState;
            Ok(r)
        }
        InequalityId::Jensen => {
            let ops = proof_operators(ch, prior, s)?;
            let (c, x) = jensen_instance(&ops.powers, prior)?;
            jensen_report(&c, &x)
        }
        InequalityId::JensenTrace => jensen_trace_gap(&proof_operators(ch, prior, s)?),
        InequalityId::TracePair => {
            let ops = proof_operators(ch, prior, s)?;
            let spec = MonotonePairSpec::new(ScalarFn::Power(s), ScalarFn::Inverse, Domain::positive());
            let mut r = trace_pair_gap(&spec, &ops.mixture, &ops.weighted_log)?;
            r.inequality = InequalityId::TracePair;
            Ok(r)
        }
    }
}
