//! Fixed points, Jacobians and stability for every scenario.
//!
//! Constant-environment interior points come from a quadratic in `p_C`.
//! With feedback, equilibria satisfy `beta = x` and/or `rho = x`; the
//! remaining scalar equation `f_C = f_A` is bracketed on a sign grid and
//! bisected.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::SmallMatrix;
use crate::model::{
    fitness_gap, rhs_vector, ModelParams, Scenario, ScenarioKind, SystemState,
};

/// Eigenvalue real parts below this magnitude are treated as zero.
pub const HYPERBOLICITY_TOL: f64 = 1e-8;
/// Interior roots this close to 0 or 1 are endpoint duplicates.
pub const ENDPOINT_DUPLICATE_TOL: f64 = 1e-9;
/// Largest admissible `max |rhs|` at a reported fixed point.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Equality tolerance in the endpoint invasion test.
pub const INVASION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Saddle,
    NonHyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointKind {
    EndpointX0,
    EndpointX1,
    Interior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub state: SystemState,
    pub kind: FixedPointKind,
    pub eigenvalues: Vec<Complex64>,
    pub stability: Stability,
    /// `max |rhs|` at `state`.
    pub residual: f64,
    /// False when the residual exceeds [`RESIDUAL_TOL`]; such points are
    /// still reported.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteriorPoint {
    pub x: f64,
    pub stability: Stability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstEnvRegion {
    /// Region 1..=5, or `None` when the fixed-point pattern matches no
    /// region (the parameters sit on a bifurcation boundary).
    pub label: Option<u8>,
    pub interior_points: Vec<InteriorPoint>,
    pub endpoints: (Stability, Stability),
}

/// Classify from eigenvalues with the shared hyperbolicity tolerance.
pub fn classify_eigenvalues(eigs: &[Complex64]) -> Stability {
    if eigs.iter().any(|z| z.re.abs() < HYPERBOLICITY_TOL) {
        Stability::NonHyperbolic
    } else if eigs.iter().all(|z| z.re < 0.0) {
        Stability::Stable
    } else if eigs.iter().all(|z| z.re > 0.0) {
        Stability::Unstable
    } else {
        Stability::Saddle
    }
}

fn scalar_stability(slope: f64) -> Stability {
    classify_eigenvalues(&[Complex64::new(slope, 0.0)])
}

/// `d(f_C - f_A)/dx` at fixed `beta`, `rho`.
fn gap_dx(a: f64, beta: f64, rho: f64, x: f64) -> f64 {
    let p_c = rho * (1.0 - beta * (1.0 - x));
    a * rho * beta / ((a + p_c) * (a + p_c)) - rho * beta / (1.0 + a)
}

/// Interior fixed points of the constant-environment replicator equation,
/// sorted by `x`.
///
/// `f_C = f_A` reduces to `p_C^2 + (rho beta - 1) p_C + a rho beta = 0`;
/// each root maps back through `x = 1 - (1 - p_C/rho)/beta`. With `beta = 0`
/// the gap has constant sign on (0, 1) and the list is empty.
pub fn interior_fixed_points_const(params: &ModelParams) -> Result<Vec<InteriorPoint>> {
    params.validate()?;
    let ModelParams { a, rho, beta } = *params;
    if beta == 0.0 {
        return Ok(Vec::new());
    }
    let s = rho * beta;
    let disc = (1.0 - s) * (1.0 - s) - 4.0 * a * s;
    if disc < 0.0 {
        return Ok(Vec::new());
    }
    let q = 0.5 * ((1.0 - s) + disc.sqrt());
    let mut roots = vec![q];
    if q > 0.0 && disc > 0.0 {
        roots.push(a * s / q);
    }
    let mut out: Vec<InteriorPoint> = roots
        .into_iter()
        .map(|p_c| 1.0 - (1.0 - p_c / rho) / beta)
        .filter(|x| *x > ENDPOINT_DUPLICATE_TOL && *x < 1.0 - ENDPOINT_DUPLICATE_TOL)
        .map(|x| {
            // One Newton step on the gap removes the cancellation in the
            // back-mapping when beta is small.
            let g = fitness_gap(a, beta, rho, x);
            let dg = gap_dx(a, beta, rho, x);
            let polished = if dg != 0.0 { x - g / dg } else { x };
            let x = if fitness_gap(a, beta, rho, polished).abs() <= g.abs() {
                polished
            } else {
                x
            };
            let slope = x * (1.0 - x) * gap_dx(a, beta, rho, x);
            InteriorPoint { x, stability: scalar_stability(slope) }
        })
        .collect();
    out.sort_by(|u, v| u.x.total_cmp(&v.x));
    Ok(out)
}

/// Stability of `x = 0` and `x = 1`: `x = 0` is stable iff
/// `f_C(0) < f_A(0)`, `x = 1` iff `f_C(1) > f_A(1)`.
pub fn endpoint_stability(params: &ModelParams) -> Result<(Stability, Stability)> {
    params.validate()?;
    let ModelParams { a, rho, beta } = *params;
    let classify = |slope: f64| {
        if slope.abs() <= INVASION_TOL {
            Stability::NonHyperbolic
        } else if slope < 0.0 {
            Stability::Stable
        } else {
            Stability::Unstable
        }
    };
    // d(xdot)/dx is gap(0) at x = 0 and -gap(1) at x = 1.
    Ok((
        classify(fitness_gap(a, beta, rho, 0.0)),
        classify(-fitness_gap(a, beta, rho, 1.0)),
    ))
}

pub fn classify_const_region(params: &ModelParams) -> Result<ConstEnvRegion> {
    use Stability::*;
    let endpoints = endpoint_stability(params)?;
    let interior_points = interior_fixed_points_const(params)?;
    let pattern: Vec<Stability> = interior_points.iter().map(|p| p.stability).collect();
    let label = match (endpoints, pattern.as_slice()) {
        ((Unstable, Unstable), [Stable]) => Some(1),
        ((Unstable, Stable), []) => Some(2),
        ((Stable, Stable), [Unstable]) => Some(3),
        ((Stable, Unstable), []) => Some(4),
        ((Stable, Unstable), [Unstable, Stable]) => Some(5),
        _ => None,
    };
    Ok(ConstEnvRegion { label, interior_points, endpoints })
}

/// Analytic Jacobian of [`crate::model::system_rhs`].
pub fn jacobian(
    scenario: &Scenario,
    params: &ModelParams,
    state: &SystemState,
) -> Result<SmallMatrix> {
    params.validate()?;
    scenario.validate()?;
    state.check_matches(scenario)?;
    Ok(jacobian_packed(scenario, params, state.to_vector().as_slice()))
}

pub(crate) fn jacobian_packed(scenario: &Scenario, params: &ModelParams, y: &[f64]) -> SmallMatrix {
    let kind = scenario.kind();
    let x = y[0];
    let mut idx = 1;
    let beta = if kind.beta_dynamic() {
        idx += 1;
        y[idx - 1]
    } else {
        params.beta
    };
    let rho = if kind.rho_dynamic() { y[idx] } else { params.rho };
    let a = params.a;

    let p_c = rho * (1.0 - beta * (1.0 - x));
    let denom = (a + p_c) * (a + p_c);
    let gap = fitness_gap(a, beta, rho, x);
    let w = x * (1.0 - x);
    let dgap_dx = a * rho * beta / denom - rho * beta / (1.0 + a);
    let dgap_dbeta = -a * rho * (1.0 - x) / denom - rho * x / (1.0 + a);
    let dgap_drho = a * (1.0 - beta * (1.0 - x)) / denom - (1.0 + beta * x) / (1.0 + a);

    let mut j = SmallMatrix::zeros(kind.dim());
    j.m[0][0] = (1.0 - 2.0 * x) * gap + w * dgap_dx;
    let mut col = 1;
    if let Some(tau) = scenario.tau_beta() {
        j.m[0][col] = w * dgap_dbeta;
        j.m[col][0] = 1.0 / tau;
        j.m[col][col] = -1.0 / tau;
        col += 1;
    }
    if let Some(tau) = scenario.tau_rho() {
        j.m[0][col] = w * dgap_drho;
        j.m[col][0] = 1.0 / tau;
        j.m[col][col] = -1.0 / tau;
    }
    j
}

/// State with every dynamic environment variable pinned to `value`.
fn pinned_state(kind: ScenarioKind, x: f64, value: f64) -> SystemState {
    SystemState {
        x,
        beta: kind.beta_dynamic().then_some(value),
        rho: kind.rho_dynamic().then_some(value),
    }
}

fn report(
    scenario: &Scenario,
    params: &ModelParams,
    state: SystemState,
    kind: FixedPointKind,
) -> FixedPointReport {
    let y = state.to_vector();
    let residual = rhs_vector(scenario, params, y.as_slice()).max_abs();
    let eigenvalues = jacobian_packed(scenario, params, y.as_slice()).eigenvalues();
    FixedPointReport {
        state,
        kind,
        stability: classify_eigenvalues(&eigenvalues),
        eigenvalues,
        residual,
        converged: residual <= RESIDUAL_TOL,
    }
}

/// The reduced equilibrium condition `f_C - f_A` along `beta = x` and/or
/// `rho = x`.
pub(crate) fn reduced_gap(kind: ScenarioKind, params: &ModelParams, x: f64) -> f64 {
    let beta = if kind.beta_dynamic() { x } else { params.beta };
    let rho = if kind.rho_dynamic() { x } else { params.rho };
    fitness_gap(params.a, beta, rho, x)
}

/// Sample abscissae: 10^3 uniform intervals on [0, 1] plus log-spaced points
/// toward both endpoints so roots approaching an endpoint stay bracketed.
fn sign_grid() -> Vec<f64> {
    let mut pts: Vec<f64> = (1..1000).map(|i| i as f64 / 1000.0).collect();
    for k in 4..=9 {
        let e = 10f64.powi(-k);
        pts.push(2.0 * e);
        pts.push(1.0 - 2.0 * e);
    }
    pts.sort_by(f64::total_cmp);
    pts
}

/// Roots of `f` on (0, 1) by sign-grid bracketing and bisection to 1e-12.
pub(crate) fn bracket_roots(f: impl Fn(f64) -> f64) -> Vec<f64> {
    let grid = sign_grid();
    let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for i in 0..grid.len() {
        if vals[i] == 0.0 {
            roots.push(grid[i]);
            continue;
        }
        if i + 1 < grid.len() && vals[i + 1] != 0.0 && vals[i].signum() != vals[i + 1].signum() {
            let (mut lo, mut hi, mut flo) = (grid[i], grid[i + 1], vals[i]);
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    roots
        .into_iter()
        .filter(|x| *x > ENDPOINT_DUPLICATE_TOL && *x < 1.0 - ENDPOINT_DUPLICATE_TOL)
        .collect()
}

/// Equilibria of a feedback scenario: the interior roots of the reduced
/// condition plus the two endpoint equilibria, each with its full-Jacobian
/// spectrum. Points whose residual exceeds [`RESIDUAL_TOL`] are returned
/// with `converged = false`.
pub fn equilibria_feedback(scenario: &Scenario, params: &ModelParams) -> Result<Vec<FixedPointReport>> {
    params.validate()?;
    scenario.validate()?;
    let kind = scenario.kind();
    if kind == ScenarioKind::ConstantEnv {
        return Err(crate::Error::Unsupported(
            "equilibria_feedback needs a feedback scenario".into(),
        ));
    }
    let mut out = vec![report(scenario, params, pinned_state(kind, 0.0, 0.0), FixedPointKind::EndpointX0)];
    for x in bracket_roots(|x| reduced_gap(kind, params, x)) {
        out.push(report(scenario, params, pinned_state(kind, x, x), FixedPointKind::Interior));
    }
    out.push(report(scenario, params, pinned_state(kind, 1.0, 1.0), FixedPointKind::EndpointX1));
    Ok(out)
}

/// All fixed points of any scenario, ordered by `x`.
pub fn equilibria(scenario: &Scenario, params: &ModelParams) -> Result<Vec<FixedPointReport>> {
    if scenario.kind() != ScenarioKind::ConstantEnv {
        return equilibria_feedback(scenario, params);
    }
    params.validate()?;
    let mut out = vec![report(scenario, params, SystemState::constant(0.0), FixedPointKind::EndpointX0)];
    for p in interior_fixed_points_const(params)? {
        out.push(report(scenario, params, SystemState::constant(p.x), FixedPointKind::Interior));
    }
    out.push(report(scenario, params, SystemState::constant(1.0), FixedPointKind::EndpointX1));
    Ok(out)
}

/// With `beta = x` imposed, `x = 1` (and `beta = 1`) is stable iff
/// `rho < (1 - a)/2`.
pub fn beta_feedback_control_threshold(a: f64) -> f64 {
    0.5 * (1.0 - a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::system_rhs;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p(a: f64, rho: f64, beta: f64) -> ModelParams {
        ModelParams::new(a, rho, beta).unwrap()
    }

    /// Bisection oracle on f_C - f_A over a uniform grid.
    fn oracle_roots(params: &ModelParams, n: usize) -> Vec<f64> {
        let g = |x: f64| fitness_gap(params.a, params.beta, params.rho, x);
        let mut roots = Vec::new();
        for i in 0..n {
            let (mut lo, mut hi) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
            let (mut glo, ghi) = (g(lo), g(hi));
            if glo == 0.0 || glo.signum() == ghi.signum() {
                continue;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if gm.signum() == glo.signum() {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        roots
    }

    #[test]
    fn coexistence_fixture() {
        let params = p(0.15, 0.9, 0.25);
        let pts = interior_fixed_points_const(&params).unwrap();
        assert_eq!(pts.len(), 1);
        assert_abs_diff_eq!(pts[0].x, 0.23861, epsilon = 5e-5); // quoted to five digits
        assert_eq!(pts[0].stability, Stability::Stable);
        let oracle = oracle_roots(&params, 10_000);
        assert_eq!(oracle.len(), 1);
        assert_abs_diff_eq!(pts[0].x, oracle[0], epsilon = 1e-12);
    }

    #[test]
    fn bistability_fixture() {
        let params = p(0.15, 0.3, 0.9);
        let pts = interior_fixed_points_const(&params).unwrap();
        assert_eq!(pts.len(), 1);
        assert_abs_diff_eq!(pts[0].x, 0.11292, epsilon = 5e-5);
        assert_eq!(pts[0].stability, Stability::Unstable);
        assert_abs_diff_eq!(pts[0].x, oracle_roots(&params, 10_000)[0], epsilon = 1e-12);
    }

    #[test]
    fn control_dominance_fixture_has_no_interior_point() {
        let params = p(0.15, 0.8, 0.2);
        assert!(interior_fixed_points_const(&params).unwrap().is_empty());
        let g = |x: f64| fitness_gap(0.15, 0.2, 0.8, x);
        assert!((0..=10_000).all(|i| g(i as f64 / 10_000.0) > 0.0));
    }

    #[test]
    fn endpoint_fixtures() {
        use Stability::*;
        assert_eq!(endpoint_stability(&p(0.15, 0.9, 0.25)).unwrap(), (Unstable, Unstable));
        assert_eq!(endpoint_stability(&p(0.15, 0.3, 0.9)).unwrap(), (Stable, Stable));
        // Cross-check against the sign of xdot just inside each endpoint.
        let params = p(0.15, 0.9, 0.25);
        assert!(crate::model::replicator_rhs(&params, 1e-6).unwrap() > 0.0);
        assert!(crate::model::replicator_rhs(&params, 1.0 - 1e-6).unwrap() < 0.0);
        for (a, rho) in [(0.15, 0.5), (0.9, 0.3), (2.0, 0.7)] {
            let (s0, s1) = endpoint_stability(&p(a, rho, 0.0)).unwrap();
            assert_ne!(s0, s1);
        }
    }

    #[test]
    fn region_fixtures() {
        assert_eq!(classify_const_region(&p(0.15, 0.8, 0.2)).unwrap().label, Some(2));
        assert_eq!(classify_const_region(&p(0.15, 0.9, 0.25)).unwrap().label, Some(1));
        assert_eq!(classify_const_region(&p(0.15, 0.3, 0.9)).unwrap().label, Some(3));
    }

    #[test]
    fn region_five_has_two_interior_points() {
        // Just above the saddle-node hyperbola and below the x = 0 transcritical curve.
        let a: f64 = 0.15;
        let s_sn = 1.0 + 2.0 * a - 2.0 * (a * (a + 1.0)).sqrt();
        let beta = 0.7;
        let rho = s_sn / beta - 0.002;
        let region = classify_const_region(&p(a, rho, beta)).unwrap();
        assert_eq!(region.interior_points.len(), 2, "{region:?}");
        assert_eq!(region.label, Some(5));
    }

    #[test]
    fn jacobian_feedback_rows() {
        let params = p(0.8, 0.3, 0.3);
        let sc = Scenario::BetaFeedback { tau_beta: 400.0 };
        let j = jacobian(&sc, &params, &SystemState::with_beta(0.4, 0.6)).unwrap();
        assert_eq!(j.get(1, 0), 1.0 / 400.0);
        assert_eq!(j.get(1, 1), -1.0 / 400.0);

        let sc = Scenario::DualFeedback { tau_beta: 1000.0, tau_rho: 1500.0 };
        let j = jacobian(&sc, &params, &SystemState::dual(0.4, 0.6, 0.2)).unwrap();
        assert_eq!(j.get(2, 1), 0.0);
        assert_eq!(j.get(1, 2), 0.0);
        assert_eq!(j.get(2, 2), -1.0 / 1500.0);
    }

    #[test]
    fn jacobian_matches_central_difference_const() {
        let params = p(0.15, 0.2, 0.3);
        let j = jacobian(&Scenario::ConstantEnv, &params, &SystemState::constant(0.5)).unwrap();
        let h = 1e-6;
        let fd = (crate::model::replicator_rhs(&params, 0.5 + h).unwrap()
            - crate::model::replicator_rhs(&params, 0.5 - h).unwrap())
            / (2.0 * h);
        assert!((j.get(0, 0) - fd).abs() <= 1e-6 * fd.abs());
    }

    #[test]
    fn rho_feedback_collapse_point() {
        let params = p(1.5, 0.5, 0.3);
        let eq = equilibria_feedback(&Scenario::RhoFeedback { tau_rho: 1000.0 }, &params).unwrap();
        let origin = &eq[0];
        assert_eq!(origin.kind, FixedPointKind::EndpointX0);
        assert_eq!(origin.state, SystemState::with_rho(0.0, 0.0));
        assert_eq!(origin.residual, 0.0);
        let f = crate::model::fitness_raw(1.5, 0.0, 0.3, 0.0);
        assert_eq!((f.f_a, f.f_c), (0.0, 0.0));
    }

    #[test]
    fn beta_feedback_fig2_equilibria() {
        let interior = |rho: f64| {
            let eq = equilibria_feedback(
                &Scenario::BetaFeedback { tau_beta: 400.0 },
                &p(0.8, rho, 0.5),
            )
            .unwrap();
            let pts: Vec<_> = eq.into_iter().filter(|r| r.kind == FixedPointKind::Interior).collect();
            assert_eq!(pts.len(), 1);
            pts.into_iter().next().unwrap()
        };
        let coexist = interior(0.65);
        assert!(coexist.eigenvalues.iter().all(|z| z.re < 0.0));
        assert!(coexist.converged);
        let cycling = interior(0.2);
        assert!(cycling.eigenvalues.iter().all(|z| z.re > 0.0 && z.im.abs() > 0.0));
        assert_eq!(cycling.stability, Stability::Unstable);
    }

    #[test]
    fn dual_feedback_interior_is_stationary() {
        let params = p(1.5, 0.5, 0.5);
        let sc = Scenario::DualFeedback { tau_beta: 1000.0, tau_rho: 1500.0 };
        let eq = equilibria_feedback(&sc, &params).unwrap();
        let interior: Vec<_> = eq.iter().filter(|r| r.kind == FixedPointKind::Interior).collect();
        assert!(!interior.is_empty());
        for r in interior {
            let d = system_rhs(&sc, &params, &r.state).unwrap();
            assert!(d.max_abs() <= 1e-12);
            assert_eq!(r.state.beta, Some(r.state.x));
            assert_eq!(r.state.rho, Some(r.state.x));
        }
    }

    #[test]
    fn endpoint_criterion_with_beta_equal_x() {
        for a in [0.2, 0.5, 0.8] {
            let thr = beta_feedback_control_threshold(a);
            for (rho, stable) in [(thr - 0.01, true), (thr + 0.01, false)] {
                let gap1 = fitness_gap(a, 1.0, rho, 1.0);
                assert_eq!(gap1 > 0.0, stable, "a={a} rho={rho}");
            }
        }
        assert_abs_diff_eq!(beta_feedback_control_threshold(0.8), 0.1, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn reported_points_are_fixed(a in 0.05f64..2.0, rho in 0.01f64..=1.0, beta in 0.0f64..=1.0,
                                     kind in 0usize..4) {
            let sc = [
                Scenario::ConstantEnv,
                Scenario::BetaFeedback { tau_beta: 100.0 },
                Scenario::RhoFeedback { tau_rho: 100.0 },
                Scenario::DualFeedback { tau_beta: 100.0, tau_rho: 150.0 },
            ][kind];
            let params = ModelParams { a, rho, beta };
            for r in equilibria(&sc, &params).unwrap() {
                prop_assert!(r.residual <= RESIDUAL_TOL, "{:?}", r);
                let near_zero = r.eigenvalues.iter().any(|z| z.re.abs() < HYPERBOLICITY_TOL);
                prop_assert_eq!(near_zero, r.stability == Stability::NonHyperbolic);
            }
        }
    }
}
