//! Finite-population Wright-Fisher model of foraging and selection, used as
//! a stochastic cross-check of the replicator equation.
//!
//! Each generation lasts `T` foraging steps. An automatic agent acquires a
//! good with probability `p_A` per step and scores `1/(1+a)` per good; a
//! controlled agent accrues its expected smoothed payoff `f_C` every step.
//! The next generation is drawn by fitness-proportional resampling of types.
//!
//! All randomness is keyed by `(seed, generation, role, agent index)`, so a
//! run is reproducible regardless of scheduling.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::odeint::{solve, Tolerances, VectorField};
use crate::error::{domain, Result};
use crate::model::{fitness_raw, xdot, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbmConfig {
    pub params: ModelParams,
    pub population: usize,
    pub generation_length: u32,
    pub generations: u32,
    pub seed: u64,
}

impl AbmConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.population < 2 {
            return domain("population must be at least 2");
        }
        if self.generation_length == 0 {
            return domain("generation length must be at least 1");
        }
        if self.generations == 0 {
            return domain("at least one generation is required");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbmRun {
    /// Controlled fraction at generations `0..=G`.
    pub x_hat: Vec<f64>,
    /// First generation at which the population was monomorphic.
    pub absorbed_at: Option<u32>,
    /// Generations where the total fitness was zero and resampling fell back
    /// to uniform.
    pub degenerate_generations: Vec<u32>,
    /// Set when `p_A > 1` had to be capped at 1 for sampling.
    pub p_a_capped: bool,
}

const ROLE_FORAGE: u64 = 0;
const ROLE_RESAMPLE: u64 = 1;

/// Generator positioned at the start of the block reserved for `index`.
fn keyed_rng(base: &ChaCha8Rng, generation: u32, role: u64, index: usize) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(((generation as u64) << 1) | role);
    rng.set_word_pos((index as u128) << 24);
    rng
}

fn unit(u: u64) -> f64 {
    (u >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Run the model from the controlled fraction `x0` (rounded to a whole
/// number of agents).
pub fn run_abm(cfg: &AbmConfig, x0: f64) -> Result<AbmRun> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&x0) {
        return domain(format!("x0 must lie in [0, 1], got {x0}"));
    }
    let n = cfg.population;
    let t = cfg.generation_length;
    let ModelParams { a, rho, beta } = cfg.params;
    let base = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut n_c = (x0 * n as f64).round() as usize;
    let mut x_hat = vec![n_c as f64 / n as f64];
    let mut absorbed_at = (n_c == 0 || n_c == n).then_some(0);
    let mut degenerate_generations = Vec::new();
    let mut p_a_capped = false;

    for g in 0..cfg.generations {
        let x = n_c as f64 / n as f64;
        if n_c == 0 || n_c == n {
            x_hat.push(x);
            continue;
        }
        let fit = fitness_raw(a, rho, beta, x);
        let p_a = fit.acquisition.p_a;
        if p_a > 1.0 {
            p_a_capped = true;
        }
        let forage = Binomial::new(t as u64, p_a.min(1.0)).expect("probability in [0, 1]");

        // Agents 0..n_c are controlled, the rest automatic.
        let w_c = n_c as f64 * t as f64 * fit.f_c;
        let mut goods_a = 0u64;
        for i in n_c..n {
            goods_a += forage.sample(&mut keyed_rng(&base, g, ROLE_FORAGE, i));
        }
        let w_a = goods_a as f64 / (1.0 + a);
        let total = w_c + w_a;
        let pi = if total > 0.0 {
            w_c / total
        } else {
            degenerate_generations.push(g);
            x
        };

        let mut rng = keyed_rng(&base, g, ROLE_RESAMPLE, 0);
        n_c = (0..n).filter(|_| unit(rng.next_u64()) < pi).count();
        x_hat.push(n_c as f64 / n as f64);
        if absorbed_at.is_none() && (n_c == 0 || n_c == n) {
            absorbed_at = Some(g + 1);
        }
    }
    Ok(AbmRun { x_hat, absorbed_at, degenerate_generations, p_a_capped })
}

/// Replicator flow in generation units: `x(1-x)(f_C - f_A)` divided by the
/// mean fitness per step, the selection strength of one Wright-Fisher
/// generation.
struct GenerationField {
    params: ModelParams,
}

impl VectorField for GenerationField {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, y: &[f64; 3], dy: &mut [f64; 3]) {
        let ModelParams { a, rho, beta } = self.params;
        let x = y[0];
        let f = fitness_raw(a, rho, beta, x);
        let mean = x * f.f_c + (1.0 - x) * f.f_a;
        dy[0] = if mean > 0.0 { xdot(a, beta, rho, x) / mean } else { 0.0 };
    }
}

/// Mean-field prediction at generations `0..=generations`.
pub fn ode_generations(params: &ModelParams, x0: f64, generations: u32) -> Result<Vec<f64>> {
    params.validate()?;
    let field = GenerationField { params: *params };
    let mut out = vec![x0];
    let mut next = 1u32;
    let t_end = generations as f64;
    solve(&field, 0.0, [x0, 0.0, 0.0], t_end, Tolerances::default(), |s| {
        while next <= generations && next as f64 <= s.t1 {
            out.push(s.eval(next as f64)[0]);
            next += 1;
        }
        true
    })?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Drift {
    Up,
    Down,
    Flat,
}

fn drift(from: f64, to: f64) -> Drift {
    if to > from + 1e-3 {
        Drift::Up
    } else if to < from - 1e-3 {
        Drift::Down
    } else {
        Drift::Flat
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbmComparison {
    pub abm: AbmRun,
    pub ode: Vec<f64>,
    /// RMS of `x_hat - x` over generations before the first absorption.
    pub rms: f64,
    pub generations_compared: usize,
    pub abm_drift: Drift,
    pub ode_drift: Drift,
    pub drift_agrees: bool,
}

pub fn compare_to_ode(cfg: &AbmConfig, x0: f64) -> Result<AbmComparison> {
    let abm = run_abm(cfg, x0)?;
    let start = abm.x_hat[0];
    let ode = ode_generations(&cfg.params, start, cfg.generations)?;
    let upto = abm.absorbed_at.map_or(abm.x_hat.len(), |g| (g as usize).max(1));
    let sq: f64 = abm.x_hat[..upto].iter().zip(&ode).map(|(p, q)| (p - q) * (p - q)).sum();
    let rms = (sq / upto as f64).sqrt();
    let abm_drift = drift(start, *abm.x_hat.last().unwrap());
    let ode_drift = drift(start, *ode.last().unwrap());
    Ok(AbmComparison {
        rms,
        generations_compared: upto,
        abm_drift,
        ode_drift,
        drift_agrees: abm_drift == ode_drift,
        abm,
        ode,
    })
}

/// Draw a seed sequence for replicate runs from a master seed.
pub fn replicate_seeds(master: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..count).map(|_| rng.random()).collect()
}
