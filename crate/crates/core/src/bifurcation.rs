//! Stability diagrams: analytic transcritical and saddle-node curves, Hopf
//! thresholds of the single-feedback systems, region grids and areas.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{classify_const_region, equilibria_feedback, jacobian_packed};
use crate::error::{domain, Error, Result};
use crate::model::{ModelParams, Scenario, ScenarioKind, SystemState};
use crate::odeint::{detect_attractor, pack, AttractorConfig};

/// Code of a cell whose label could not be decided.
pub const UNDETERMINED: u16 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    TranscriticalX0,
    TranscriticalX1,
    SaddleNode,
    Hopf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub sweep: f64,
    pub value: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationCurve {
    pub kind: CurveKind,
    pub sweep_param: Param,
    pub value_param: Param,
    pub points: Vec<CurvePoint>,
}

/// Model quantities that can label a grid axis or a curve coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    A,
    Rho,
    Beta,
    TauBeta,
    TauRho,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::A => "a",
            Param::Rho => "rho",
            Param::Beta => "beta",
            Param::TauBeta => "tau_beta",
            Param::TauRho => "tau_rho",
        }
    }
}

impl std::str::FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "a" => Param::A,
            "rho" => Param::Rho,
            "beta" => Param::Beta,
            "tau_beta" | "tau-beta" => Param::TauBeta,
            "tau_rho" | "tau-rho" => Param::TauRho,
            _ => return domain(format!("unknown parameter '{s}'")),
        })
    }
}

/// `rho` at which `x = 0` exchanges stability: `1 - a beta / (1 - beta)`.
pub fn rho_tc0(a: f64, beta: f64) -> f64 {
    1.0 - a * beta / (1.0 - beta)
}

/// `rho` at which `x = 1` exchanges stability: `(1 + a)/(1 + beta) - a`.
pub fn rho_tc1(a: f64, beta: f64) -> f64 {
    (1.0 + a) / (1.0 + beta) - a
}

/// Value of `rho beta` on the saddle-node hyperbola.
pub fn saddle_node_product(a: f64) -> f64 {
    1.0 + 2.0 * a - 2.0 * (a * (a + 1.0)).sqrt()
}

fn check_a(a: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return domain(format!("a must be positive, got {a}"));
    }
    Ok(())
}

fn check_monotone(betas: &[f64]) -> Result<()> {
    if betas.windows(2).any(|w| w[1] <= w[0]) {
        return domain("sweep values must be strictly increasing");
    }
    Ok(())
}

/// Transcritical curves of `x = 0` and `x = 1` in the `(beta, rho)` plane.
/// Points are flagged invalid where `rho` leaves (0, 1].
pub fn transcritical_curves(a: f64, betas: &[f64]) -> Result<[BifurcationCurve; 2]> {
    check_a(a)?;
    check_monotone(betas)?;
    if betas.iter().any(|b| !(0.0..1.0).contains(b)) {
        return domain("transcritical sweep must lie in [0, 1)");
    }
    let curve = |kind, f: fn(f64, f64) -> f64| BifurcationCurve {
        kind,
        sweep_param: Param::Beta,
        value_param: Param::Rho,
        points: betas
            .iter()
            .map(|&b| {
                let rho = f(a, b);
                CurvePoint { sweep: b, value: rho, valid: rho > 0.0 && rho <= 1.0 }
            })
            .collect(),
    };
    Ok([curve(CurveKind::TranscriticalX0, rho_tc0), curve(CurveKind::TranscriticalX1, rho_tc1)])
}

/// Saddle-node curve `rho = s / beta`. A point is valid when `rho` lies in
/// (0, 1] and the double root maps to `x` in (0, 1).
pub fn saddle_node_curve(a: f64, betas: &[f64]) -> Result<BifurcationCurve> {
    check_a(a)?;
    check_monotone(betas)?;
    let s = saddle_node_product(a);
    let points = betas
        .iter()
        .filter(|&&b| b > 0.0 && b <= 1.0)
        .map(|&b| {
            let rho = s / b;
            let p_c = 0.5 * (1.0 - s);
            let x = 1.0 - (1.0 - p_c / rho) / b;
            CurvePoint { sweep: b, value: rho, valid: rho > 0.0 && rho <= 1.0 && x > 0.0 && x < 1.0 }
        })
        .collect();
    Ok(BifurcationCurve {
        kind: CurveKind::SaddleNode,
        sweep_param: Param::Beta,
        value_param: Param::Rho,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisScale {
    Linear,
    Log,
}

/// A cell-centred grid axis: `n` cells over `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: Param,
    pub min: f64,
    pub max: f64,
    pub n: usize,
    pub scale: AxisScale,
}

impl Axis {
    pub fn linear(param: Param, min: f64, max: f64, n: usize) -> Self {
        Self { param, min, max, n, scale: AxisScale::Linear }
    }

    pub fn log(param: Param, min: f64, max: f64, n: usize) -> Self {
        Self { param, min, max, n, scale: AxisScale::Log }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return domain(format!("axis {} needs at least one cell", self.param.name()));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return domain(format!("axis {} needs min < max", self.param.name()));
        }
        if self.scale == AxisScale::Log && self.min <= 0.0 {
            return domain(format!("log axis {} needs a positive minimum", self.param.name()));
        }
        Ok(())
    }

    fn fwd(&self, v: f64) -> f64 {
        match self.scale {
            AxisScale::Linear => v,
            AxisScale::Log => v.ln(),
        }
    }

    fn inv(&self, u: f64) -> f64 {
        match self.scale {
            AxisScale::Linear => u,
            AxisScale::Log => u.exp(),
        }
    }

    /// Centre of cell `i`.
    pub fn value(&self, i: usize) -> f64 {
        let (lo, hi) = (self.fwd(self.min), self.fwd(self.max));
        self.inv(lo + (i as f64 + 0.5) * (hi - lo) / self.n as f64)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i)).collect()
    }

    /// Cell containing `v`, if any.
    pub fn index_of(&self, v: f64) -> Option<usize> {
        if !(v >= self.min && v <= self.max) {
            return None;
        }
        let (lo, hi) = (self.fwd(self.min), self.fwd(self.max));
        let k = ((self.fwd(v) - lo) / (hi - lo) * self.n as f64).floor() as usize;
        Some(k.min(self.n - 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelScheme {
    /// Constant-environment regions 1..=5.
    ConstRegions,
    /// OR of [`crate::odeint::Outcome`] bits over the initial conditions.
    OutcomeMask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub scenario: Scenario,
    pub params: ModelParams,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial_conditions: Vec<SystemState>,
    /// Runs that ended Undetermined; they do not contribute to the mask.
    pub undetermined_runs: usize,
    /// Cells where some integration failed.
    pub failed_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub x_axis: Axis,
    pub y_axis: Axis,
    pub scheme: LabelScheme,
    /// Row-major, `labels[j * x_axis.n + i]` for x cell `i`, y cell `j`.
    pub labels: Vec<u16>,
    pub meta: GridMeta,
}

impl RegionGrid {
    pub fn label(&self, i: usize, j: usize) -> u16 {
        self.labels[j * self.x_axis.n + i]
    }

    /// Label of the cell containing the point `(xv, yv)`.
    pub fn label_at(&self, xv: f64, yv: f64) -> Option<u16> {
        Some(self.label(self.x_axis.index_of(xv)?, self.y_axis.index_of(yv)?))
    }

    pub fn counts(&self) -> BTreeMap<u16, usize> {
        let mut m = BTreeMap::new();
        for &l in &self.labels {
            *m.entry(l).or_insert(0) += 1;
        }
        m
    }

    pub fn is_multistable(&self, code: u16) -> bool {
        self.scheme == LabelScheme::OutcomeMask && code.count_ones() >= 2
    }
}

/// Default constant-environment grid: 512 x 512 cells over the unit square
/// of `(beta, rho)`.
pub fn default_const_axes(n: usize) -> (Axis, Axis) {
    (Axis::linear(Param::Beta, 0.0, 1.0, n), Axis::linear(Param::Rho, 0.0, 1.0, n))
}

fn set_param(param: Param, v: f64, params: &mut ModelParams, scenario: &mut Scenario) -> Result<()> {
    match (param, scenario) {
        (Param::A, _) => params.a = v,
        (Param::Rho, _) => params.rho = v,
        (Param::Beta, _) => params.beta = v,
        (Param::TauBeta, Scenario::BetaFeedback { tau_beta })
        | (Param::TauBeta, Scenario::DualFeedback { tau_beta, .. }) => *tau_beta = v,
        (Param::TauRho, Scenario::RhoFeedback { tau_rho })
        | (Param::TauRho, Scenario::DualFeedback { tau_rho, .. }) => *tau_rho = v,
        (p, s) => {
            return Err(Error::Unsupported(format!(
                "{} is not a parameter of the {} scenario",
                p.name(),
                s.kind().name()
            )))
        }
    }
    Ok(())
}

/// Region label of every cell of a `(beta, rho)`-type grid at fixed `a`.
/// Other axis parameters are allowed; the remaining values come from `base`.
pub fn const_region_scan(base: &ModelParams, x_axis: Axis, y_axis: Axis) -> Result<RegionGrid> {
    x_axis.validate()?;
    y_axis.validate()?;
    let mut probe = Scenario::ConstantEnv;
    let mut p = *base;
    set_param(x_axis.param, x_axis.value(0), &mut p, &mut probe)?;
    set_param(y_axis.param, y_axis.value(0), &mut p, &mut probe)?;
    let xs = x_axis.values();
    let ys = y_axis.values();
    let labels: Vec<u16> = ys
        .par_iter()
        .flat_map_iter(|&yv| {
            let xs = &xs;
            xs.iter().map(move |&xv| {
                let mut p = *base;
                let mut sc = Scenario::ConstantEnv;
                set_param(x_axis.param, xv, &mut p, &mut sc).expect("checked above");
                set_param(y_axis.param, yv, &mut p, &mut sc).expect("checked above");
                match classify_const_region(&p) {
                    Ok(r) => r.label.map_or(UNDETERMINED, u16::from),
                    Err(_) => UNDETERMINED,
                }
            })
        })
        .collect();
    Ok(RegionGrid {
        x_axis,
        y_axis,
        scheme: LabelScheme::ConstRegions,
        labels,
        meta: GridMeta {
            scenario: Scenario::ConstantEnv,
            params: *base,
            initial_conditions: Vec::new(),
            undetermined_runs: 0,
            failed_cells: 0,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaRow {
    pub a: f64,
    /// Fractions of the unit `(beta, rho)` square in regions 1..=5.
    pub regions: [f64; 5],
    pub undetermined: f64,
}

/// Region area fractions over the unit square for each `a`, on an `n x n`
/// cell-centred grid.
pub fn region_areas(a_values: &[f64], n: usize) -> Result<Vec<AreaRow>> {
    a_values
        .iter()
        .map(|&a| {
            check_a(a)?;
            let (xa, ya) = default_const_axes(n);
            let grid = const_region_scan(&ModelParams { a, rho: 0.5, beta: 0.5 }, xa, ya)?;
            let total = grid.labels.len() as f64;
            let counts = grid.counts();
            let frac = |c: u16| *counts.get(&c).unwrap_or(&0) as f64 / total;
            Ok(AreaRow {
                a,
                regions: [frac(1), frac(2), frac(3), frac(4), frac(5)],
                undetermined: frac(UNDETERMINED),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfPoint {
    pub tau_star: f64,
    pub x_star: f64,
    /// Angular frequency of the pure-imaginary pair at `tau_star`.
    pub omega: f64,
}

fn check_single_feedback(kind: ScenarioKind) -> Result<()> {
    match kind {
        ScenarioKind::BetaFeedback | ScenarioKind::RhoFeedback => Ok(()),
        k => Err(Error::Unsupported(format!(
            "Hopf thresholds need a single-feedback scenario, got {}",
            k.name()
        ))),
    }
}

/// The parameter swept along a Hopf curve: the fixed one of `beta`, `rho`.
pub fn hopf_sweep_param(kind: ScenarioKind) -> Result<Param> {
    check_single_feedback(kind)?;
    Ok(if kind == ScenarioKind::BetaFeedback { Param::Rho } else { Param::Beta })
}

/// Lag at which an interior equilibrium of a single-feedback system loses
/// stability. The 2x2 Jacobian has trace `J11 - 1/tau` and determinant
/// `-(J11 + J12)/tau`, so a pure-imaginary pair occurs at `tau* = 1/J11`
/// when `J11 > 0` and `J11 + J12 < 0`. With several interior equilibria the
/// smallest threshold is returned.
pub fn hopf_threshold_tau(kind: ScenarioKind, params: &ModelParams) -> Result<Option<HopfPoint>> {
    check_single_feedback(kind)?;
    let scenario = kind.with_lags(1.0, 1.0);
    let mut best: Option<HopfPoint> = None;
    for fp in equilibria_feedback(&scenario, params)? {
        if fp.kind != crate::equilibria::FixedPointKind::Interior {
            continue;
        }
        let y = pack(&fp.state);
        let j = jacobian_packed(&scenario, params, &y[..2]);
        let (j11, j12) = (j.m[0][0], j.m[0][1]);
        if j11 > 0.0 && j11 + j12 < 0.0 {
            let p = HopfPoint { tau_star: 1.0 / j11, x_star: fp.state.x, omega: (-(j11 + j12) * j11).sqrt() };
            if best.is_none_or(|b| p.tau_star < b.tau_star) {
                best = Some(p);
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfSweep {
    pub min: f64,
    pub max: f64,
    pub n: usize,
    /// Target width of the asymptote brackets.
    pub bracket_width: f64,
}

impl Default for HopfSweep {
    fn default() -> Self {
        Self { min: 0.0, max: 1.0, n: 1000, bracket_width: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfCurve {
    pub scenario: ScenarioKind,
    pub a: f64,
    pub curve: BifurcationCurve,
    /// Location and value of the smallest threshold.
    pub minimum: Option<CurvePoint>,
    /// Sweep intervals across which a finite threshold appears or vanishes.
    pub asymptotes: Vec<Bracket>,
}

fn hopf_at(kind: ScenarioKind, a: f64, s: f64) -> Result<Option<HopfPoint>> {
    let mut p = ModelParams { a, rho: 0.5, beta: 0.5 };
    let mut sc = kind.with_lags(1.0, 1.0);
    set_param(hopf_sweep_param(kind)?, s, &mut p, &mut sc)?;
    hopf_threshold_tau(kind, &p)
}

/// Trace `tau*` over a cell-centred sweep of the fixed environment parameter,
/// locate the edges of the Hopf window by bisection and refine the minimum
/// by golden-section search.
pub fn hopf_curve(kind: ScenarioKind, a: f64, sweep: &HopfSweep) -> Result<HopfCurve> {
    check_a(a)?;
    let param = hopf_sweep_param(kind)?;
    let axis = Axis::linear(param, sweep.min, sweep.max, sweep.n);
    axis.validate()?;
    if sweep.min < 0.0 || sweep.max > 1.0 || !(sweep.bracket_width > 0.0) {
        return domain("Hopf sweep must lie in [0, 1] with a positive bracket width");
    }
    let samples: Vec<(f64, Option<HopfPoint>)> = axis
        .values()
        .into_par_iter()
        .map(|s| hopf_at(kind, a, s).map(|h| (s, h)))
        .collect::<Result<_>>()?;

    let exists = |s: f64| hopf_at(kind, a, s).map(|h| h.is_some());
    let mut asymptotes = Vec::new();
    for w in samples.windows(2) {
        if w[0].1.is_some() != w[1].1.is_some() {
            let (mut lo, mut hi) = (w[0].0, w[1].0);
            let lo_state = w[0].1.is_some();
            while hi - lo > sweep.bracket_width {
                let mid = 0.5 * (lo + hi);
                if exists(mid)? == lo_state {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            asymptotes.push(Bracket { lo, hi });
        }
    }

    let points: Vec<CurvePoint> = samples
        .iter()
        .filter_map(|(s, h)| h.map(|h| CurvePoint { sweep: *s, value: h.tau_star, valid: true }))
        .collect();

    let minimum = match points.iter().enumerate().min_by(|a, b| a.1.value.total_cmp(&b.1.value)) {
        None => None,
        Some((k, _)) => {
            let step = (sweep.max - sweep.min) / sweep.n as f64;
            let centre = points[k].sweep;
            let f = |s: f64| -> Result<f64> {
                Ok(hopf_at(kind, a, s)?.map_or(f64::INFINITY, |h| h.tau_star))
            };
            let (mut lo, mut hi) = ((centre - step).max(sweep.min), (centre + step).min(sweep.max));
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let (mut c, mut d) = (hi - g * (hi - lo), lo + g * (hi - lo));
            let (mut fc, mut fd) = (f(c)?, f(d)?);
            while hi - lo > 1e-10 {
                if fc < fd {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - g * (hi - lo);
                    fc = f(c)?;
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + g * (hi - lo);
                    fd = f(d)?;
                }
            }
            let s = 0.5 * (lo + hi);
            let v = f(s)?.min(points[k].value);
            Some(CurvePoint { sweep: s, value: v, valid: v.is_finite() })
        }
    };

    Ok(HopfCurve {
        scenario: kind,
        a,
        curve: BifurcationCurve { kind: CurveKind::Hopf, sweep_param: param, value_param: tau_param(kind), points },
        minimum,
        asymptotes,
    })
}

fn tau_param(kind: ScenarioKind) -> Param {
    if kind == ScenarioKind::BetaFeedback {
        Param::TauBeta
    } else {
        Param::TauRho
    }
}

/// Classify every cell of a feedback-scenario grid by running attractor
/// detection from each initial condition and OR-ing the outcome bits.
/// Cells where an integration fails are [`UNDETERMINED`]. Cells are
/// independent and evaluated in parallel; the result does not depend on
/// scheduling.
pub fn feedback_region_scan(
    scenario: &Scenario,
    base: &ModelParams,
    x_axis: Axis,
    y_axis: Axis,
    ics: &[SystemState],
    cfg: &AttractorConfig,
) -> Result<RegionGrid> {
    if scenario.kind() == ScenarioKind::ConstantEnv {
        return Err(Error::Unsupported("feedback scan needs a feedback scenario".into()));
    }
    if ics.is_empty() {
        return domain("initial-condition set is empty");
    }
    x_axis.validate()?;
    y_axis.validate()?;
    scenario.validate()?;
    cfg.tol.validate()?;
    for ic in ics {
        ic.check_matches(scenario)?;
    }
    let (mut p0, mut s0) = (*base, *scenario);
    set_param(x_axis.param, x_axis.value(0), &mut p0, &mut s0)?;
    set_param(y_axis.param, y_axis.value(0), &mut p0, &mut s0)?;

    let nx = x_axis.n;
    let cells: Vec<(u16, usize)> = (0..nx * y_axis.n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            let (mut p, mut sc) = (*base, *scenario);
            set_param(x_axis.param, x_axis.value(i), &mut p, &mut sc).expect("checked above");
            set_param(y_axis.param, y_axis.value(j), &mut p, &mut sc).expect("checked above");
            if p.validate().is_err() || sc.validate().is_err() {
                return (UNDETERMINED, usize::MAX);
            }
            let mut mask = 0u16;
            let mut undetermined = 0;
            for ic in ics {
                match detect_attractor(&sc, &p, ic, cfg) {
                    Ok(l) => match l.outcome() {
                        Some(o) => mask |= o.bit(),
                        None => undetermined += 1,
                    },
                    Err(_) => return (UNDETERMINED, usize::MAX),
                }
            }
            (mask, undetermined)
        })
        .collect();

    let failed_cells = cells.iter().filter(|c| c.1 == usize::MAX).count();
    let undetermined_runs = cells.iter().filter(|c| c.1 != usize::MAX).map(|c| c.1).sum();
    Ok(RegionGrid {
        x_axis,
        y_axis,
        scheme: LabelScheme::OutcomeMask,
        labels: cells.into_iter().map(|c| c.0).collect(),
        meta: GridMeta {
            scenario: *scenario,
            params: *base,
            initial_conditions: ics.to_vec(),
            undetermined_runs,
            failed_cells,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transcritical_fixtures() {
        assert!((rho_tc0(0.15, 0.3) - 0.935714).abs() < 1e-6);
        assert!((rho_tc1(0.15, 0.3) - 0.734615).abs() < 1e-6);
        assert_eq!(rho_tc0(0.7, 0.0), 1.0);
    }

    #[test]
    fn saddle_node_fixture_and_limit() {
        assert!((saddle_node_product(0.15) - 0.469337).abs() < 1e-6);
        assert!((saddle_node_product(1e-12) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn saddle_node_validity_flag() {
        let c = saddle_node_curve(0.15, &[0.3, 0.7, 0.95]).unwrap();
        // beta = 0.3 puts rho above 1.
        assert!(!c.points[0].valid);
        assert!(c.points[1].valid);
    }

    #[test]
    fn axis_cells() {
        let ax = Axis::linear(Param::Beta, 0.0, 1.0, 4);
        assert_eq!(ax.values(), vec![0.125, 0.375, 0.625, 0.875]);
        assert_eq!(ax.index_of(0.3), Some(1));
        assert_eq!(ax.index_of(1.0), Some(3));
        assert_eq!(ax.index_of(1.1), None);
        let lg = Axis::log(Param::TauRho, 10.0, 1000.0, 2);
        assert!((lg.value(0) - 10f64.powf(1.5)).abs() < 1e-9);
        assert_eq!(lg.index_of(200.0), Some(1));
    }

    #[test]
    fn hopf_rejects_constant_env() {
        let p = ModelParams::new(0.8, 0.3, 0.5).unwrap();
        assert!(hopf_threshold_tau(ScenarioKind::ConstantEnv, &p).is_err());
        assert!(hopf_threshold_tau(ScenarioKind::DualFeedback, &p).is_err());
    }

    #[test]
    fn set_param_rejects_missing_lag() {
        let mut p = ModelParams::new(0.8, 0.3, 0.5).unwrap();
        let mut sc = Scenario::BetaFeedback { tau_beta: 1.0 };
        assert!(set_param(Param::TauRho, 5.0, &mut p, &mut sc).is_err());
        set_param(Param::TauBeta, 5.0, &mut p, &mut sc).unwrap();
        assert_eq!(sc, Scenario::BetaFeedback { tau_beta: 5.0 });
    }
}
