//! Dormand–Prince 5(4) with PI step control and 4th-order dense output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Autonomous vector field of dimension 1..=3. Unused trailing components of
/// the buffers are ignored.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval(&self, y: &[f64; 3], dy: &mut [f64; 3]);

    /// Whether component `i` is confined to [0, 1] under
    /// [`Tolerances::unit_box`].
    fn bounded(&self, _i: usize) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Components must stay in [0, 1]; accepted steps that overshoot by at
    /// most `overshoot_guard` are projected back, larger overshoots are
    /// rejected and retried with a smaller step.
    pub unit_box: bool,
    pub overshoot_guard: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 20_000_000,
            unit_box: true,
            overshoot_guard: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(ok(self.rtol) && ok(self.atol) && self.rtol + self.atol > 0.0) {
            return Err(Error::Domain(format!(
                "tolerances must be finite, nonnegative and not both zero (rtol {}, atol {})",
                self.rtol, self.atol
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::Domain("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejections: usize,
    pub evals: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const PI_BETA: f64 = 0.04;

/// One accepted step with its continuous extension.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; 3],
    pub y1: [f64; 3],
    pub f0: [f64; 3],
    pub f1: [f64; 3],
    pub dim: usize,
    cont: [[f64; 3]; 5],
}

impl DenseStep {
    /// Interpolated state at `t` in `[t0, t1]`.
    pub fn eval(&self, t: f64) -> [f64; 3] {
        let h = self.t1 - self.t0;
        let s = if h > 0.0 { (t - self.t0) / h } else { 1.0 };
        let s1 = 1.0 - s;
        let c = &self.cont;
        let mut y = [0.0; 3];
        for i in 0..self.dim {
            y[i] = c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i])));
        }
        y
    }
}

pub struct Dopri5<'f, F: VectorField> {
    field: &'f F,
    tol: Tolerances,
    dim: usize,
    t: f64,
    y: [f64; 3],
    k1: [f64; 3],
    h: f64,
    fac_old: f64,
    fixed_step: Option<f64>,
    pub stats: IntegratorStats,
}

impl<'f, F: VectorField> Dopri5<'f, F> {
    pub fn new(field: &'f F, t0: f64, y0: [f64; 3], tol: Tolerances) -> Self {
        let dim = field.dim();
        let mut k1 = [0.0; 3];
        field.eval(&y0, &mut k1);
        let mut s = Self {
            field,
            tol,
            dim,
            t: t0,
            y: y0,
            k1,
            h: 0.0,
            fac_old: 1e-4,
            fixed_step: None,
            stats: IntegratorStats { evals: 1, ..Default::default() },
        };
        s.h = s.initial_step();
        s
    }

    /// Disable error control and take steps of exactly `h`.
    pub fn with_fixed_step(mut self, h: f64) -> Self {
        self.fixed_step = Some(h);
        self.h = h;
        self
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> [f64; 3] {
        self.y
    }

    fn norm(&self, v: &[f64; 3], scale_from: &[f64; 3]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            let sk = self.tol.atol + self.tol.rtol * scale_from[i].abs();
            s += (v[i] / sk).powi(2);
        }
        (s / self.dim as f64).sqrt()
    }

    fn initial_step(&mut self) -> f64 {
        let d0 = self.norm(&self.y, &self.y);
        let d1 = self.norm(&self.k1, &self.y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let mut y1 = [0.0; 3];
        for i in 0..self.dim {
            y1[i] = self.y[i] + h0 * self.k1[i];
        }
        let mut f1 = [0.0; 3];
        self.field.eval(&y1, &mut f1);
        self.stats.evals += 1;
        let mut diff = [0.0; 3];
        for i in 0..self.dim {
            diff[i] = f1[i] - self.k1[i];
        }
        let d2 = self.norm(&diff, &self.y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }

    /// Advance by one accepted step without passing `t_end`.
    pub fn step(&mut self, t_end: f64) -> Result<DenseStep> {
        let dim = self.dim;
        let mut reject_streak = false;
        loop {
            if self.stats.steps + self.stats.rejections >= self.tol.max_steps {
                return Err(Error::TooManySteps { t: self.t, max_steps: self.tol.max_steps });
            }
            let remaining = t_end - self.t;
            let mut h = self.h.min(remaining);
            // Swallow a sliver that would otherwise become its own tiny step.
            if remaining - h < 1e-12 * remaining.abs().max(1.0) {
                h = remaining;
            }
            let h_floor = 1e-14 * self.t.abs().max(1.0);
            if h < h_floor && h < remaining {
                return Err(Error::StepUnderflow { t: self.t, h });
            }

            let (y, k1) = (self.y, self.k1);
            let mut ys = [0.0; 3];
            let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
                ([0.0; 3], [0.0; 3], [0.0; 3], [0.0; 3], [0.0; 3], [0.0; 3]);
            for i in 0..dim {
                ys[i] = y[i] + h * A21 * k1[i];
            }
            self.field.eval(&ys, &mut k2);
            for i in 0..dim {
                ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            self.field.eval(&ys, &mut k3);
            for i in 0..dim {
                ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            self.field.eval(&ys, &mut k4);
            for i in 0..dim {
                ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            self.field.eval(&ys, &mut k5);
            for i in 0..dim {
                ys[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            self.field.eval(&ys, &mut k6);
            let mut y1 = [0.0; 3];
            for i in 0..dim {
                y1[i] = y[i]
                    + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            self.field.eval(&y1, &mut k7);
            self.stats.evals += 6;
            let _ = (C2, C3, C4, C5);

            let mut errv = [0.0; 3];
            let mut scale = [0.0; 3];
            for i in 0..dim {
                errv[i] = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                scale[i] = y[i].abs().max(y1[i].abs());
            }
            let err = if self.fixed_step.is_some() { 0.0 } else { self.norm(&errv, &scale) };

            if err > 1.0 {
                self.stats.rejections += 1;
                let fac11 = err.powf(0.2);
                self.h = h / (1.0 / FAC_MIN).min(fac11 / SAFETY);
                reject_streak = true;
                continue;
            }

            let mut projected = false;
            if self.tol.unit_box {
                let g = self.tol.overshoot_guard;
                if let Some(i) =
                    (0..dim).find(|&i| self.field.bounded(i) && (y1[i] < -g || y1[i] > 1.0 + g))
                {
                    self.stats.rejections += 1;
                    if h <= h_floor * 16.0 || self.fixed_step.is_some() {
                        return Err(Error::Overshoot { t: self.t + h, component: i, value: y1[i] });
                    }
                    self.h = 0.25 * h;
                    reject_streak = true;
                    continue;
                }
                for (i, v) in y1.iter_mut().enumerate().take(dim) {
                    if self.field.bounded(i) && (*v < 0.0 || *v > 1.0) {
                        *v = v.clamp(0.0, 1.0);
                        projected = true;
                    }
                }
            }
            if projected {
                self.field.eval(&y1, &mut k7);
                self.stats.evals += 1;
            }

            let mut cont = [[0.0; 3]; 5];
            for i in 0..dim {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * k7[i] - bspl;
                cont[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let step = DenseStep {
                t0: self.t,
                t1: if h == remaining { t_end } else { self.t + h },
                y0: y,
                y1,
                f0: k1,
                f1: k7,
                dim,
                cont,
            };

            self.stats.steps += 1;
            self.t = step.t1;
            self.y = y1;
            self.k1 = k7;

            if let Some(hf) = self.fixed_step {
                self.h = hf;
            } else {
                let fac11 = err.max(1e-300).powf(0.2 - PI_BETA * 0.75);
                let mut fac = fac11 / self.fac_old.powf(PI_BETA);
                fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut h_new = h / fac;
                if reject_streak {
                    h_new = h_new.min(h);
                }
                self.fac_old = err.max(1e-4);
                self.h = h_new;
            }
            return Ok(step);
        }
    }
}

/// Integrate `field` from `y0` over `[t0, t_end]`, handing every accepted
/// step to `on_step`. Returning `false` from the callback stops early.
pub fn solve<F: VectorField>(
    field: &F,
    t0: f64,
    y0: [f64; 3],
    t_end: f64,
    tol: Tolerances,
    mut on_step: impl FnMut(&DenseStep) -> bool,
) -> Result<(IntegratorStats, f64, [f64; 3])> {
    tol.validate()?;
    let mut solver = Dopri5::new(field, t0, y0, tol);
    while solver.time() < t_end {
        let step = solver.step(t_end)?;
        if !on_step(&step) {
            break;
        }
    }
    Ok((solver.stats, solver.time(), solver.state()))
}
