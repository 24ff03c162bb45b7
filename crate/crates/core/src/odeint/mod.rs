//! Time integration of every scenario and long-run attractor classification.

mod attractor;
mod dopri;

pub use attractor::{
    classify_longrun, default_budget, default_initial_conditions, detect_attractor,
    AttractorConfig, AttractorKind, AttractorLabel, DistinctAttractor, Outcome,
    DOMINANCE_TOL,
};
pub use dopri::{solve, DenseStep, Dopri5, IntegratorStats, Tolerances, VectorField};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{fitness_gap, rhs_into, ModelParams, Scenario, SystemState};

/// A scenario with fixed parameters, viewed as a vector field.
///
/// Runs that start strictly inside (0, 1) integrate `u = ln(x / (1 - x))`
/// instead of `x`, with `du/dt = f_C - f_A`. This keeps full resolution near
/// both endpoints, where `1 - x` would otherwise round to zero and freeze the
/// state on an unstable boundary.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioField {
    pub scenario: Scenario,
    pub params: ModelParams,
    logit: bool,
}

pub(crate) fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

impl ScenarioField {
    /// Field in the plain `(x, beta?, rho?)` coordinates.
    pub fn new(scenario: Scenario, params: ModelParams) -> Self {
        Self { scenario, params, logit: false }
    }

    /// Field in the coordinates used for a run starting at `state0`.
    pub fn for_start(scenario: Scenario, params: ModelParams, state0: &SystemState) -> Self {
        Self { scenario, params, logit: state0.x > 0.0 && state0.x < 1.0 }
    }

    pub fn to_internal(&self, mut y: [f64; 3]) -> [f64; 3] {
        if self.logit {
            y[0] = y[0].ln() - (-y[0]).ln_1p();
        }
        y
    }

    pub fn to_physical(&self, mut y: [f64; 3]) -> [f64; 3] {
        if self.logit {
            y[0] = sigmoid(y[0]);
        }
        y
    }
}

impl VectorField for ScenarioField {
    fn dim(&self) -> usize {
        self.scenario.dim()
    }

    #[inline]
    fn eval(&self, y: &[f64; 3], dy: &mut [f64; 3]) {
        let dim = self.scenario.dim();
        if !self.logit {
            rhs_into(&self.scenario, &self.params, &y[..dim], dy);
            return;
        }
        let p = self.to_physical(*y);
        rhs_into(&self.scenario, &self.params, &p[..dim], dy);
        let kind = self.scenario.kind();
        let beta = if kind.beta_dynamic() { p[1] } else { self.params.beta };
        let rho = if kind.rho_dynamic() { p[dim - 1] } else { self.params.rho };
        dy[0] = fitness_gap(self.params.a, beta, rho, p[0]);
    }

    fn bounded(&self, i: usize) -> bool {
        !(self.logit && i == 0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub tol: Tolerances,
    /// Report states on the grid `0, dt, 2 dt, ..., t_end` via dense output.
    /// `None` records every accepted step.
    pub sample_dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub scenario: Scenario,
    pub params: ModelParams,
    pub times: Vec<f64>,
    pub states: Vec<SystemState>,
    pub stats: IntegratorStats,
}

pub fn pack(state: &SystemState) -> [f64; 3] {
    let v = state.to_vector();
    v.data
}

pub(crate) fn check_start(
    scenario: &Scenario,
    params: &ModelParams,
    state0: &SystemState,
) -> Result<()> {
    params.validate()?;
    scenario.validate()?;
    state0.check_matches(scenario)?;
    state0.check_unit_box()
}

pub fn integrate(
    scenario: &Scenario,
    params: &ModelParams,
    state0: &SystemState,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    check_start(scenario, params, state0)?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return domain(format!("t_end must be positive, got {t_end}"));
    }
    if let Some(dt) = opts.sample_dt {
        if !(dt.is_finite() && dt > 0.0) {
            return domain(format!("sampling interval must be positive, got {dt}"));
        }
    }
    let kind = scenario.kind();
    let field = ScenarioField::for_start(*scenario, *params, state0);
    let y0 = field.to_internal(pack(state0));
    let unpack = |y: &[f64; 3]| {
        let p = field.to_physical(*y);
        SystemState::from_vector(kind, &p[..kind.dim()]).expect("dimension")
    };

    let mut times = vec![0.0];
    let mut states = vec![*state0];
    let mut k = 1_u64;
    let (stats, _, _) = solve(&field, 0.0, y0, t_end, opts.tol, |step| {
        match opts.sample_dt {
            None => {
                times.push(step.t1);
                states.push(unpack(&step.y1));
            }
            Some(dt) => loop {
                let t = (k as f64 * dt).min(t_end);
                if t > step.t1 || t <= *times.last().unwrap() {
                    break;
                }
                let y = if t == step.t1 { step.y1 } else { step.eval(t) };
                times.push(t);
                states.push(unpack(&y));
                if t >= t_end {
                    break;
                }
                k += 1;
            },
        }
        true
    })?;
    Ok(Trajectory { scenario: *scenario, params: *params, times, states, stats })
}
