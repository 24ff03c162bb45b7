//! Model symbols and right-hand sides.
//!
//! Agents are either *automatic* (consume an acquired good at once) or
//! *controlled* (spread it evenly over the expected wait for the next one).
//! `x` is the fraction of controlled agents, `rho` the per-step probability
//! of finding a good, `beta` the acquisition advantage of automatic agents and
//! `a` the diminishing-returns constant of the consumption utility
//! `z / (a + z)`.
//!
//! Everything here is a pure function of its inputs.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Fixed model parameters `(a, rho, beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: f64,
    pub rho: f64,
    pub beta: f64,
}

impl ModelParams {
    pub fn new(a: f64, rho: f64, beta: f64) -> Result<Self> {
        let p = Self { a, rho, beta };
        p.validate()?;
        Ok(p)
    }

    /// Checks `a > 0`, `0 < rho <= 1`, `0 <= beta <= 1`. Out-of-range values
    /// are rejected, never clamped.
    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a > 0.0) {
            return domain(format!("a must be positive, got {}", self.a));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return domain(format!("rho must lie in (0, 1], got {}", self.rho));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return domain(format!("beta must lie in [0, 1], got {}", self.beta));
        }
        Ok(())
    }
}

/// Which environmental quantities follow the population, and how slowly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    ConstantEnv,
    BetaFeedback { tau_beta: f64 },
    RhoFeedback { tau_rho: f64 },
    DualFeedback { tau_beta: f64, tau_rho: f64 },
}

/// Scenario without its lag constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    ConstantEnv,
    BetaFeedback,
    RhoFeedback,
    DualFeedback,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::ConstantEnv => "const",
            ScenarioKind::BetaFeedback => "beta",
            ScenarioKind::RhoFeedback => "rho",
            ScenarioKind::DualFeedback => "both",
        }
    }

    pub fn beta_dynamic(self) -> bool {
        matches!(self, ScenarioKind::BetaFeedback | ScenarioKind::DualFeedback)
    }

    pub fn rho_dynamic(self) -> bool {
        matches!(self, ScenarioKind::RhoFeedback | ScenarioKind::DualFeedback)
    }

    pub fn dim(self) -> usize {
        1 + self.beta_dynamic() as usize + self.rho_dynamic() as usize
    }

    /// Attach lag constants. Unused lags are ignored.
    pub fn with_lags(self, tau_beta: f64, tau_rho: f64) -> Scenario {
        match self {
            ScenarioKind::ConstantEnv => Scenario::ConstantEnv,
            ScenarioKind::BetaFeedback => Scenario::BetaFeedback { tau_beta },
            ScenarioKind::RhoFeedback => Scenario::RhoFeedback { tau_rho },
            ScenarioKind::DualFeedback => Scenario::DualFeedback { tau_beta, tau_rho },
        }
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "const" | "constant" => Ok(ScenarioKind::ConstantEnv),
            "beta" => Ok(ScenarioKind::BetaFeedback),
            "rho" => Ok(ScenarioKind::RhoFeedback),
            "both" | "dual" => Ok(ScenarioKind::DualFeedback),
            other => domain(format!(
                "unknown scenario '{other}' (expected const, beta, rho or both)"
            )),
        }
    }
}

impl Scenario {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            Scenario::ConstantEnv => ScenarioKind::ConstantEnv,
            Scenario::BetaFeedback { .. } => ScenarioKind::BetaFeedback,
            Scenario::RhoFeedback { .. } => ScenarioKind::RhoFeedback,
            Scenario::DualFeedback { .. } => ScenarioKind::DualFeedback,
        }
    }

    pub fn dim(&self) -> usize {
        self.kind().dim()
    }

    pub fn tau_beta(&self) -> Option<f64> {
        match *self {
            Scenario::BetaFeedback { tau_beta } | Scenario::DualFeedback { tau_beta, .. } => {
                Some(tau_beta)
            }
            _ => None,
        }
    }

    pub fn tau_rho(&self) -> Option<f64> {
        match *self {
            Scenario::RhoFeedback { tau_rho } | Scenario::DualFeedback { tau_rho, .. } => {
                Some(tau_rho)
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, tau) in [("tau_beta", self.tau_beta()), ("tau_rho", self.tau_rho())] {
            if let Some(t) = tau {
                if !(t.is_finite() && t > 0.0) {
                    return domain(format!("{name} must be positive, got {t}"));
                }
            }
        }
        Ok(())
    }

    /// State at `x0` with every dynamic environment variable started at its
    /// `ModelParams` value.
    pub fn initial_state(&self, params: &ModelParams, x0: f64) -> SystemState {
        let kind = self.kind();
        SystemState {
            x: x0,
            beta: kind.beta_dynamic().then_some(params.beta),
            rho: kind.rho_dynamic().then_some(params.rho),
        }
    }
}

/// Population state. `beta`/`rho` are `Some` exactly when they are dynamic
/// in the scenario; otherwise the `ModelParams` values apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub x: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

impl SystemState {
    pub fn constant(x: f64) -> Self {
        Self { x, beta: None, rho: None }
    }

    pub fn with_beta(x: f64, beta: f64) -> Self {
        Self { x, beta: Some(beta), rho: None }
    }

    pub fn with_rho(x: f64, rho: f64) -> Self {
        Self { x, beta: None, rho: Some(rho) }
    }

    pub fn dual(x: f64, beta: f64, rho: f64) -> Self {
        Self { x, beta: Some(beta), rho: Some(rho) }
    }

    pub fn dim(&self) -> usize {
        1 + self.beta.is_some() as usize + self.rho.is_some() as usize
    }

    /// Effective `(beta, rho)`: dynamic values override the parameters.
    pub fn effective(&self, params: &ModelParams) -> (f64, f64) {
        (self.beta.unwrap_or(params.beta), self.rho.unwrap_or(params.rho))
    }

    pub fn check_matches(&self, scenario: &Scenario) -> Result<()> {
        let kind = scenario.kind();
        if self.beta.is_some() != kind.beta_dynamic() || self.rho.is_some() != kind.rho_dynamic()
        {
            return Err(Error::DimensionMismatch {
                scenario: kind.name(),
                expected: kind.dim(),
                got: self.dim(),
            });
        }
        Ok(())
    }

    pub fn to_vector(&self) -> StateVector {
        let mut v = StateVector::zeros(self.dim());
        v.data[0] = self.x;
        let mut i = 1;
        if let Some(b) = self.beta {
            v.data[i] = b;
            i += 1;
        }
        if let Some(r) = self.rho {
            v.data[i] = r;
        }
        v
    }

    pub fn from_vector(kind: ScenarioKind, v: &[f64]) -> Result<Self> {
        if v.len() != kind.dim() {
            return Err(Error::DimensionMismatch {
                scenario: kind.name(),
                expected: kind.dim(),
                got: v.len(),
            });
        }
        let mut i = 1;
        let beta = kind.beta_dynamic().then(|| {
            i += 1;
            v[i - 1]
        });
        let rho = kind.rho_dynamic().then(|| v[i]);
        Ok(Self { x: v[0], beta, rho })
    }

    pub fn components(&self) -> impl Iterator<Item = f64> {
        std::iter::once(self.x).chain(self.beta).chain(self.rho)
    }

    pub(crate) fn check_unit_box(&self) -> Result<()> {
        for v in self.components() {
            if !(0.0..=1.0).contains(&v) {
                return domain(format!("state component {v} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Fixed-capacity state or derivative vector, ordered `(x, beta?, rho?)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub data: [f64; 3],
    pub dim: usize,
}

impl StateVector {
    pub fn zeros(dim: usize) -> Self {
        Self { data: [0.0; 3], dim }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.dim]
    }

    pub fn max_abs(&self) -> f64 {
        self.as_slice().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Acquisition probabilities and expected waiting times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Acquisition {
    pub p_a: f64,
    pub p_c: f64,
    pub tau_a: f64,
    pub tau_c: f64,
    /// `p_a` above one strains its reading as a probability; the formulas
    /// are still evaluated as written.
    pub p_a_exceeds_one: bool,
}

/// Per-step fitness of both types together with the acquisition data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessPair {
    pub f_a: f64,
    pub f_c: f64,
    pub acquisition: Acquisition,
}

/// Validate `params` and `x`, then compute `p_A = rho (1 + beta x)` and
/// `p_C = rho (1 - beta (1 - x))`.
pub fn acquisition(params: &ModelParams, x: f64) -> Result<Acquisition> {
    params.validate()?;
    check_x(x)?;
    Ok(acquisition_raw(params.rho, params.beta, x))
}

pub fn fitness(params: &ModelParams, x: f64) -> Result<FitnessPair> {
    params.validate()?;
    check_x(x)?;
    Ok(fitness_raw(params.a, params.rho, params.beta, x))
}

/// `dx/dt` of the replicator equation in the constant environment.
pub fn replicator_rhs(params: &ModelParams, x: f64) -> Result<f64> {
    params.validate()?;
    check_x(x)?;
    Ok(xdot(params.a, params.beta, params.rho, x))
}

/// Full derivative for the scenario. Dynamic `beta`/`rho` in `state` replace
/// the parameter values inside the replicator term.
pub fn system_rhs(
    scenario: &Scenario,
    params: &ModelParams,
    state: &SystemState,
) -> Result<StateVector> {
    params.validate()?;
    scenario.validate()?;
    state.check_matches(scenario)?;
    state.check_unit_box()?;
    Ok(rhs_vector(scenario, params, state.to_vector().as_slice()))
}

fn check_x(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("x must lie in [0, 1], got {x}"));
    }
    Ok(())
}

pub(crate) fn acquisition_raw(rho: f64, beta: f64, x: f64) -> Acquisition {
    let p_a = rho * (1.0 + beta * x);
    let p_c = rho * (1.0 - beta * (1.0 - x));
    Acquisition {
        p_a,
        p_c,
        tau_a: 1.0 / p_a,
        tau_c: 1.0 / p_c,
        p_a_exceeds_one: p_a > 1.0,
    }
}

pub(crate) fn fitness_raw(a: f64, rho: f64, beta: f64, x: f64) -> FitnessPair {
    let acq = acquisition_raw(rho, beta, x);
    FitnessPair {
        f_a: (rho + beta * rho * x) / (a + 1.0),
        f_c: acq.p_c / (a + acq.p_c),
        acquisition: acq,
    }
}

/// `f_C - f_A`; its sign is the sign of `dx/dt` on the open interval.
#[inline]
pub(crate) fn fitness_gap(a: f64, beta: f64, rho: f64, x: f64) -> f64 {
    let p_c = rho * (1.0 - beta * (1.0 - x));
    p_c / (a + p_c) - rho * (1.0 + beta * x) / (1.0 + a)
}

/// Replicator right-hand side in the expanded form
/// `(x-1) x (a / (a - beta rho + rho + beta rho x) + (rho + beta rho x)/(a+1) - 1)`.
#[inline]
pub(crate) fn xdot(a: f64, beta: f64, rho: f64, x: f64) -> f64 {
    let br = beta * rho;
    (x - 1.0) * x * (a / (a - br + rho + br * x) + (rho + br * x) / (a + 1.0) - 1.0)
}

/// Unchecked derivative on a packed `(x, beta?, rho?)` slice.
#[inline]
pub(crate) fn rhs_vector(scenario: &Scenario, params: &ModelParams, y: &[f64]) -> StateVector {
    let mut out = StateVector::zeros(y.len());
    rhs_into(scenario, params, y, &mut out.data);
    out
}

#[inline]
pub(crate) fn rhs_into(scenario: &Scenario, params: &ModelParams, y: &[f64], dy: &mut [f64; 3]) {
    let x = y[0];
    match *scenario {
        Scenario::ConstantEnv => {
            dy[0] = xdot(params.a, params.beta, params.rho, x);
        }
        Scenario::BetaFeedback { tau_beta } => {
            dy[0] = xdot(params.a, y[1], params.rho, x);
            dy[1] = (x - y[1]) / tau_beta;
        }
        Scenario::RhoFeedback { tau_rho } => {
            dy[0] = xdot(params.a, params.beta, y[1], x);
            dy[1] = (x - y[1]) / tau_rho;
        }
        Scenario::DualFeedback { tau_beta, tau_rho } => {
            dy[0] = xdot(params.a, y[1], y[2], x);
            dy[1] = (x - y[1]) / tau_beta;
            dy[2] = (x - y[2]) / tau_rho;
        }
    }
}
