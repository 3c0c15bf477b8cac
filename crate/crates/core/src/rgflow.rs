//! Running-coupling recursions and the power-counting classifier.
//!
//! The flow runs from scale `h = 0` towards `h = hmin < 0`:
//!
//! ```text
//! lambda_{h-1} = lambda_h + beta_lambda(h - 1, lambda_h)
//! Z_{h-1}      = Z_h (1 + b lambda_h^2)
//! ```
//!
//! The increment of a step is evaluated at the scale being reached, so an
//! anchored beta function `c gamma^h lambda^2` contributes
//! `c lambda_0^2 / (gamma - 1)` at leading order. A field-strength ratio
//! tending to `gamma^eta` defines the anomalous exponent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `|lambda_h|` beyond which a flow is declared divergent.
pub const DIVERGENCE_GUARD: f64 = 10.0;
/// Last increment below which an anchored flow counts as converged.
pub const CONVERGENCE_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("initial coupling {0} outside |lambda_0| < 0.5")]
    CouplingOutOfRange(f64),
    #[error("hmin = {0} must be <= -10")]
    ShallowFlow(i64),
    #[error("scale ratio gamma = {0} must exceed 1")]
    BadGamma(f64),
    #[error("invalid beta function: {0}")]
    BadSpec(String),
    #[error("flow did not converge (last increment {0:e})")]
    NotConverged(f64),
    #[error("n = {0} must be even and at least 2")]
    BadFieldCount(u32),
}

/// Form of the coupling beta function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BetaMode {
    /// `c gamma^h lambda^2`: asymptotically vanishing.
    Anchored { c: f64 },
    /// `a lambda^2` at every scale.
    Runaway { a: f64 },
    /// `a_h lambda^2` with `a_h = coefficients[-h]`.
    Tabulated { coefficients: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSpec {
    pub mode: BetaMode,
    /// Field-strength coefficient, `beta_z = b lambda^2`.
    pub b: f64,
}

impl BetaSpec {
    pub fn anchored(c: f64, b: f64) -> Self {
        BetaSpec {
            mode: BetaMode::Anchored { c },
            b,
        }
    }

    pub fn runaway(a: f64, b: f64) -> Self {
        BetaSpec {
            mode: BetaMode::Runaway { a },
            b,
        }
    }

    fn validate(&self, steps: usize) -> Result<(), FlowError> {
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(FlowError::BadSpec(format!("b = {} must be positive", self.b)));
        }
        match &self.mode {
            BetaMode::Anchored { c: x } | BetaMode::Runaway { a: x } if !x.is_finite() => {
                Err(FlowError::BadSpec("non-finite coefficient".into()))
            }
            BetaMode::Tabulated { coefficients } => {
                if coefficients.len() < steps {
                    Err(FlowError::BadSpec(format!(
                        "table has {} coefficients, flow needs {steps}",
                        coefficients.len()
                    )))
                } else if coefficients.iter().any(|a| !a.is_finite()) {
                    Err(FlowError::BadSpec("non-finite coefficient".into()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Coupling increment for reaching scale `h` from `lambda`.
    pub fn beta_lambda(&self, h: i64, lambda: f64, gamma: f64) -> f64 {
        let coef = match &self.mode {
            BetaMode::Anchored { c } => c * gamma.powi(h as i32),
            BetaMode::Runaway { a } => *a,
            BetaMode::Tabulated { coefficients } => coefficients[(-h - 1) as usize],
        };
        coef * lambda * lambda
    }

    pub fn beta_z(&self, lambda: f64) -> f64 {
        self.b * lambda * lambda
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub h: i64,
    pub lambda: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FlowOutcome {
    /// Increments fell below [`CONVERGENCE_TOL`].
    Converged { lambda_inf: f64 },
    /// `|lambda_h|` passed [`DIVERGENCE_GUARD`] at scale `h`.
    Diverged { h: i64 },
    /// Reached `hmin` without either.
    Unconverged { last_increment: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub gamma: f64,
    pub spec: BetaSpec,
    /// States for `h = 0, -1, ...`.
    pub states: Vec<FlowState>,
    pub outcome: FlowOutcome,
}

impl Flow {
    /// `ln(Z_{h-1} / Z_h) / ln gamma` at the deepest step.
    pub fn deepest_ratio_exponent(&self) -> Option<f64> {
        let n = self.states.len();
        (n >= 2).then(|| (self.states[n - 1].z / self.states[n - 2].z).ln() / self.gamma.ln())
    }
}

/// Iterates the recursion from `lambda0`, `Z_0 = 1`, down to `hmin`.
pub fn run_flow(lambda0: f64, spec: &BetaSpec, gamma: f64, hmin: i64) -> Result<Flow, FlowError> {
    if !(lambda0.abs() < 0.5) {
        return Err(FlowError::CouplingOutOfRange(lambda0));
    }
    if hmin > -10 {
        return Err(FlowError::ShallowFlow(hmin));
    }
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(FlowError::BadGamma(gamma));
    }
    spec.validate((-hmin) as usize)?;
    let mut states = vec![FlowState {
        h: 0,
        lambda: lambda0,
        z: 1.0,
    }];
    let mut last = 0.0;
    for h in (hmin..0).rev() {
        let cur = *states.last().expect("non-empty");
        let d = spec.beta_lambda(h, cur.lambda, gamma);
        let next = FlowState {
            h,
            lambda: cur.lambda + d,
            z: cur.z * (1.0 + spec.beta_z(cur.lambda)),
        };
        states.push(next);
        last = d;
        if !(next.lambda.abs() <= DIVERGENCE_GUARD) {
            return Ok(Flow {
                gamma,
                spec: spec.clone(),
                states,
                outcome: FlowOutcome::Diverged { h },
            });
        }
    }
    let outcome = if last.abs() <= CONVERGENCE_TOL {
        FlowOutcome::Converged {
            lambda_inf: states.last().expect("non-empty").lambda,
        }
    } else {
        FlowOutcome::Unconverged { last_increment: last }
    };
    Ok(Flow {
        gamma,
        spec: spec.clone(),
        states,
        outcome,
    })
}

/// Anomalous exponent of a converged flow,
/// `eta = lim ln(Z_{h-1}/Z_h) / ln gamma`.
pub fn eta_from_flow(flow: &Flow) -> Result<f64, FlowError> {
    match flow.outcome {
        FlowOutcome::Converged { lambda_inf } => {
            let eta = flow.deepest_ratio_exponent().ok_or(FlowError::NotConverged(f64::NAN))?;
            let small = flow.spec.b * lambda_inf * lambda_inf / flow.gamma.ln();
            log::debug!("eta = {eta:.6e}, small-coupling estimate {small:.6e}");
            Ok(eta)
        }
        FlowOutcome::Diverged { .. } => Err(FlowError::NotConverged(f64::INFINITY)),
        FlowOutcome::Unconverged { last_increment } => Err(FlowError::NotConverged(last_increment)),
    }
}

/// Stationary value `ln(1 + b lambda^2) / ln gamma`.
pub fn eta_stationary(lambda: f64, b: f64, gamma: f64) -> f64 {
    (b * lambda * lambda).ln_1p() / gamma.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relevance {
    Relevant,
    Marginal,
    Irrelevant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalingDimension {
    pub d: i64,
    pub relevance: Relevance,
}

/// `D = 2 - n/2 - s` for a monomial with `n` fermion fields and `s`
/// derivatives.
pub fn scaling_dimension(n: u32, s: u32) -> Result<ScalingDimension, FlowError> {
    if n < 2 || n % 2 == 1 {
        return Err(FlowError::BadFieldCount(n));
    }
    let d = 2 - (n / 2) as i64 - s as i64;
    let relevance = match d.cmp(&0) {
        std::cmp::Ordering::Greater => Relevance::Relevant,
        std::cmp::Ordering::Equal => Relevance::Marginal,
        std::cmp::Ordering::Less => Relevance::Irrelevant,
    };
    Ok(ScalingDimension { d, relevance })
}
