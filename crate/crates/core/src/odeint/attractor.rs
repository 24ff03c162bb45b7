//! Long-run attractor detection: fixed point, limit cycle or undetermined.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dopri::{Dopri5, DenseStep, Tolerances, VectorField};
use super::{check_start, pack, ScenarioField};
use crate::equilibria::{equilibria, jacobian_packed, FixedPointReport, Stability};
use crate::error::Result;
use crate::model::{rhs_vector, ModelParams, Scenario, ScenarioKind, SystemState};

/// A converged run is reported at the computed equilibrium within this
/// max-norm distance.
const SNAP_RADIUS: f64 = 1e-4;

/// A fixed point with `x` this close to 0 or 1 counts as dominance.
pub const DOMINANCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttractorConfig {
    /// Integration time of the first attempt; `None` means
    /// `50 max(tau_beta, tau_rho, 100)`.
    pub budget: Option<f64>,
    /// Leading fraction of the run discarded as transient.
    pub transient_fraction: f64,
    pub fp_range_tol: f64,
    pub fp_rhs_tol: f64,
    pub min_peaks: usize,
    /// Largest relative spread of successive periods.
    pub period_rtol: f64,
    pub min_amplitude: f64,
    /// Largest spread of peak heights relative to the amplitude.
    pub peak_spread_rtol: f64,
    /// Undetermined runs are continued this many times, doubling the total
    /// integration time each time.
    pub extensions: u32,
    pub tol: Tolerances,
}

impl Default for AttractorConfig {
    fn default() -> Self {
        Self {
            budget: None,
            transient_fraction: 0.5,
            fp_range_tol: 1e-6,
            fp_rhs_tol: 1e-8,
            min_peaks: 5,
            period_rtol: 0.01,
            min_amplitude: 1e-4,
            peak_spread_rtol: 0.01,
            extensions: 4,
            tol: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AttractorKind {
    FixedPoint {
        state: SystemState,
    },
    LimitCycle {
        period: f64,
        amplitude_x: f64,
        mean_x: f64,
        /// State at the last detected maximum of `x`.
        peak_state: SystemState,
    },
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttractorLabel {
    pub kind: AttractorKind,
    pub initial_condition: SystemState,
    pub transient_discarded: f64,
    pub total_time: f64,
}

/// Qualitative outcome of a run. The discriminants are bits so several
/// outcomes can be OR-ed into a multistability mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    ControlDominance = 1,
    AutomaticDominance = 2,
    Coexistence = 4,
    LimitCycle = 8,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [
        Outcome::ControlDominance,
        Outcome::AutomaticDominance,
        Outcome::Coexistence,
        Outcome::LimitCycle,
    ];

    pub fn bit(self) -> u16 {
        self as u16
    }

    pub fn name(self) -> &'static str {
        match self {
            Outcome::ControlDominance => "control_dominance",
            Outcome::AutomaticDominance => "automatic_dominance",
            Outcome::Coexistence => "coexistence",
            Outcome::LimitCycle => "limit_cycle",
        }
    }

    pub fn from_mask(mask: u16) -> Vec<Outcome> {
        Self::ALL.into_iter().filter(|o| mask & o.bit() != 0).collect()
    }
}

impl AttractorKind {
    pub fn outcome(&self) -> Option<Outcome> {
        match self {
            AttractorKind::FixedPoint { state } if state.x <= DOMINANCE_TOL => {
                Some(Outcome::AutomaticDominance)
            }
            AttractorKind::FixedPoint { state } if state.x >= 1.0 - DOMINANCE_TOL => {
                Some(Outcome::ControlDominance)
            }
            AttractorKind::FixedPoint { .. } => Some(Outcome::Coexistence),
            AttractorKind::LimitCycle { .. } => Some(Outcome::LimitCycle),
            AttractorKind::Undetermined => None,
        }
    }
}

impl AttractorLabel {
    pub fn outcome(&self) -> Option<Outcome> {
        self.kind.outcome()
    }
}

pub fn default_budget(scenario: &Scenario) -> f64 {
    50.0 * scenario.tau_beta().unwrap_or(0.0).max(scenario.tau_rho().unwrap_or(0.0)).max(100.0)
}

/// Fixed initial-condition lattice: `x0` and every dynamic environment
/// variable range over {0.05, 0.5, 0.95}.
pub fn default_initial_conditions(kind: ScenarioKind) -> Vec<SystemState> {
    const L: [f64; 3] = [0.05, 0.5, 0.95];
    let mut out = Vec::new();
    for &x in &L {
        match kind {
            ScenarioKind::ConstantEnv => out.push(SystemState::constant(x)),
            ScenarioKind::BetaFeedback => out.extend(L.iter().map(|&b| SystemState::with_beta(x, b))),
            ScenarioKind::RhoFeedback => out.extend(L.iter().map(|&r| SystemState::with_rho(x, r))),
            ScenarioKind::DualFeedback => {
                for &b in &L {
                    out.extend(L.iter().map(|&r| SystemState::dual(x, b, r)));
                }
            }
        }
    }
    out
}

/// Root of `g` on `[lo, hi]` given a sign change, by bisection.
fn bisect(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> f64) -> f64 {
    let glo = g(lo);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) > 0.0) == (glo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

struct Extremum {
    t: f64,
    x: f64,
    y: [f64; 3],
}

fn extrema(steps: &[DenseStep], field: &ScenarioField) -> (Vec<Extremum>, Vec<Extremum>) {
    let (mut maxima, mut minima) = (Vec::new(), Vec::new());
    for s in steps {
        let (d0, d1) = (s.f0[0], s.f1[0]);
        let is_max = d0 > 0.0 && d1 <= 0.0;
        let is_min = d0 < 0.0 && d1 >= 0.0;
        if !(is_max || is_min) {
            continue;
        }
        let xdot_at = |t: f64| {
            let mut dy = [0.0; 3];
            field.eval(&s.eval(t), &mut dy);
            dy[0]
        };
        let t = bisect(s.t0, s.t1, xdot_at);
        let y = field.to_physical(s.eval(t));
        let e = Extremum { t, x: y[0], y };
        if is_max {
            maxima.push(e);
        } else {
            minima.push(e);
        }
    }
    (maxima, minima)
}

/// Time average of `x` over `[ta, tb]` by Simpson's rule on each step.
fn mean_x(steps: &[DenseStep], field: &ScenarioField, ta: f64, tb: f64) -> f64 {
    let x = |t: f64, s: &DenseStep| field.to_physical(s.eval(t))[0];
    let mut acc = 0.0;
    for s in steps {
        let (u, v) = (s.t0.max(ta), s.t1.min(tb));
        if v <= u {
            continue;
        }
        let m = 0.5 * (u + v);
        acc += (v - u) / 6.0 * (x(u, s) + 4.0 * x(m, s) + x(v, s));
    }
    acc / (tb - ta)
}

/// Newton refinement of a near-equilibrium; kept only if it stays close and
/// lowers the residual.
fn polish(field: &ScenarioField, y: [f64; 3]) -> [f64; 3] {
    let dim = field.dim();
    let resid = |y: &[f64; 3]| rhs_vector(&field.scenario, &field.params, &y[..dim]).max_abs();
    let mut best = y;
    let mut best_r = resid(&y);
    let mut cur = y;
    for _ in 0..4 {
        let f = rhs_vector(&field.scenario, &field.params, &cur[..dim]);
        let j = jacobian_packed(&field.scenario, &field.params, &cur[..dim]);
        let Some(dx) = j.solve(f.as_slice()) else { break };
        let mut next = cur;
        for i in 0..dim {
            next[i] = (cur[i] - dx[i]).clamp(0.0, 1.0);
        }
        if (0..dim).any(|i| (next[i] - y[i]).abs() > 1e-5) {
            break;
        }
        let r = resid(&next);
        if r < best_r {
            best = next;
            best_r = r;
        }
        cur = next;
    }
    best
}

fn distance(u: &[f64; 3], v: &[f64; 3], dim: usize) -> f64 {
    (0..dim).fold(0.0_f64, |m, i| m.max((u[i] - v[i]).abs()))
}

/// Equilibrium nearest to `y` in the max norm, with its distance.
fn nearest<'e>(eqs: &'e [FixedPointReport], y: &[f64; 3], dim: usize) -> Option<(&'e FixedPointReport, f64)> {
    eqs.iter()
        .map(|e| (e, distance(&pack(&e.state), y, dim)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Slow approach to a non-hyperbolic equilibrium (the collapse point of the
/// feedback systems attracts only algebraically): the distance to it must
/// shrink at every retained step and end below `SLOW_APPROACH_RADIUS`.
const SLOW_APPROACH_RADIUS: f64 = 1e-3;

fn slow_approach<'e>(
    steps: &[DenseStep],
    field: &ScenarioField,
    eqs: &'e [FixedPointReport],
    dim: usize,
) -> Option<&'e FixedPointReport> {
    let last = steps.last()?;
    let (e, d_end) = nearest(eqs, &field.to_physical(last.y1), dim)?;
    if e.stability != Stability::NonHyperbolic || d_end > SLOW_APPROACH_RADIUS {
        return None;
    }
    let target = pack(&e.state);
    let d_start = distance(&field.to_physical(steps[0].y0), &target, dim);
    let mut prev = d_start;
    for s in steps {
        let d = distance(&field.to_physical(s.y1), &target, dim);
        if d > prev {
            return None;
        }
        prev = d;
    }
    (d_end < 0.9 * d_start).then_some(e)
}

fn analyze(
    steps: &[DenseStep],
    field: &ScenarioField,
    eqs: &[FixedPointReport],
    cfg: &AttractorConfig,
) -> AttractorKind {
    let dim = field.dim();
    let kind = field.scenario.kind();
    let unpack = |y: &[f64; 3]| SystemState::from_vector(kind, &y[..dim]).expect("dimension");
    let Some(last) = steps.last() else {
        return AttractorKind::Undetermined;
    };

    let y_end = field.to_physical(last.y1);
    let mut lo = y_end;
    let mut hi = y_end;
    for s in steps {
        let y = field.to_physical(s.y0);
        for i in 0..dim {
            lo[i] = lo[i].min(y[i]);
            hi[i] = hi[i].max(y[i]);
        }
    }
    let ranges_small = (0..dim).all(|i| hi[i] - lo[i] < cfg.fp_range_tol);
    let rhs = rhs_vector(&field.scenario, &field.params, &y_end[..dim]).max_abs();
    if ranges_small && rhs <= cfg.fp_rhs_tol {
        let y = polish(field, y_end);
        let state = match nearest(eqs, &y, dim) {
            Some((e, d)) if d <= SNAP_RADIUS => e.state,
            _ => unpack(&y),
        };
        return AttractorKind::FixedPoint { state };
    }
    if let Some(e) = slow_approach(steps, field, eqs, dim) {
        return AttractorKind::FixedPoint { state: e.state };
    }

    let (maxima, minima) = extrema(steps, field);
    let want = (2 * cfg.min_peaks).max(cfg.min_peaks);
    if maxima.len() < cfg.min_peaks.max(2) {
        return AttractorKind::Undetermined;
    }
    let used = &maxima[maxima.len().saturating_sub(want)..];
    let periods: Vec<f64> = used.windows(2).map(|w| w[1].t - w[0].t).collect();
    let (pmin, pmax) = periods
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(a, b), &p| (a.min(p), b.max(p)));
    if !(pmin > 0.0) || (pmax - pmin) > cfg.period_rtol * pmin {
        return AttractorKind::Undetermined;
    }
    let (t_first, t_last) = (used[0].t, used[used.len() - 1].t);
    let peak_hi = used.iter().fold(f64::NEG_INFINITY, |m, e| m.max(e.x));
    let peak_lo = used.iter().fold(f64::INFINITY, |m, e| m.min(e.x));
    let trough = minima
        .iter()
        .filter(|e| e.t > t_first && e.t < t_last)
        .fold(f64::INFINITY, |m, e| m.min(e.x));
    if !trough.is_finite() {
        return AttractorKind::Undetermined;
    }
    let amplitude = peak_hi - trough;
    if amplitude < cfg.min_amplitude || peak_hi - peak_lo > cfg.peak_spread_rtol * amplitude {
        return AttractorKind::Undetermined;
    }
    let period = (t_last - t_first) / (used.len() - 1) as f64;
    AttractorKind::LimitCycle {
        period,
        amplitude_x: amplitude,
        mean_x: mean_x(steps, field, t_first, t_last),
        peak_state: unpack(&used[used.len() - 1].y),
    }
}

/// Integrate from `state0`, discard the transient and classify what is left.
/// Undetermined runs are extended up to `cfg.extensions` times.
pub fn detect_attractor(
    scenario: &Scenario,
    params: &ModelParams,
    state0: &SystemState,
    cfg: &AttractorConfig,
) -> Result<AttractorLabel> {
    check_start(scenario, params, state0)?;
    if !(0.0..1.0).contains(&cfg.transient_fraction) {
        return crate::error::domain("transient fraction must lie in [0, 1)");
    }
    let budget = cfg.budget.unwrap_or_else(|| default_budget(scenario));
    if !(budget.is_finite() && budget > 0.0) {
        return crate::error::domain(format!("budget must be positive, got {budget}"));
    }
    cfg.tol.validate()?;
    let field = ScenarioField::for_start(*scenario, *params, state0);
    let eqs = equilibria(scenario, params)?;
    let mut solver = Dopri5::new(&field, 0.0, field.to_internal(pack(state0)), cfg.tol);
    let mut window: Vec<DenseStep> = Vec::new();
    let mut total = budget;
    for attempt in 0..=cfg.extensions {
        let start = total * cfg.transient_fraction;
        window.retain(|s| s.t0 >= start);
        while solver.time() < total {
            let s = solver.step(total)?;
            if s.t0 >= start {
                window.push(s);
            }
        }
        let kind = analyze(&window, &field, &eqs, cfg);
        if !matches!(kind, AttractorKind::Undetermined) || attempt == cfg.extensions {
            return Ok(AttractorLabel {
                kind,
                initial_condition: *state0,
                transient_discarded: start,
                total_time: total,
            });
        }
        total *= 2.0;
    }
    unreachable!()
}

/// One distinct attractor reached from one or more initial conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinctAttractor {
    pub kind: AttractorKind,
    pub initial_conditions: Vec<SystemState>,
}

fn same_attractor(u: &AttractorKind, v: &AttractorKind) -> bool {
    match (u, v) {
        (AttractorKind::FixedPoint { state: a }, AttractorKind::FixedPoint { state: b }) => {
            a.components().zip(b.components()).all(|(p, q)| (p - q).abs() <= 1e-5)
        }
        (
            AttractorKind::LimitCycle { period: p, .. },
            AttractorKind::LimitCycle { period: q, .. },
        ) => (p - q).abs() <= 0.02 * p.max(*q),
        (AttractorKind::Undetermined, AttractorKind::Undetermined) => true,
        _ => false,
    }
}

/// Run [`detect_attractor`] from every initial condition (in parallel) and
/// merge agreeing labels, in initial-condition order.
pub fn classify_longrun(
    scenario: &Scenario,
    params: &ModelParams,
    ics: &[SystemState],
    cfg: &AttractorConfig,
) -> Result<Vec<DistinctAttractor>> {
    if ics.is_empty() {
        return crate::error::domain("initial-condition set is empty");
    }
    let labels: Vec<AttractorLabel> = ics
        .par_iter()
        .map(|ic| detect_attractor(scenario, params, ic, cfg))
        .collect::<Result<_>>()?;
    let mut out: Vec<DistinctAttractor> = Vec::new();
    for l in labels {
        match out.iter_mut().find(|d| same_attractor(&d.kind, &l.kind)) {
            Some(d) => d.initial_conditions.push(l.initial_condition),
            None => out.push(DistinctAttractor {
                kind: l.kind,
                initial_conditions: vec![l.initial_condition],
            }),
        }
    }
    Ok(out)
}
