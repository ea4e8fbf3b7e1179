//! Monte-Carlo watermelon probabilities by sampling the strands one at a
//! time, leftmost first, each as an SLE_κ(ρ) with its force point fused to
//! the seed on the right.
//!
//! One strand is simulated in a scale-free form. With gap `X = V - W` and
//! `ζ = g_t(z) - V`, the ratio `u = ζ/X` is driven on the clock
//! `dσ = dt/X²` by
//!
//! ```text
//! dℓ = (-2 Re 1/(u+1) - a) dσ + √κ dβ,   dφ = 2 Im u / |u+1|² dσ,
//! ```
//!
//! where `u = e^{ℓ + iφ}`, `a = ρ + 2 - κ/2` and `β` is a standard Brownian
//! motion. `φ` increases and freezes once `u → 0`, which happens when the
//! point ends right of the strand; the frozen value is the angle handed to
//! the next strand. A point ending on the left has `arg(u + 1) → π`, the
//! angle of `g_t(z)` seen from the tip.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("seeds must be strictly increasing: x[{0}] >= x[{1}]")]
    Seeds(usize, usize),
    #[error("cannot build a worker pool: {0}")]
    Pool(String),
}

/// Default base step on the log clock.
pub const DEFAULT_DT: f64 = 0.01;
/// Initial gap relative to `|z|`.
pub const SEED_GAP: f64 = 1e-6;
/// `|ℓ|` beyond which the angle has nearly stopped moving and steps grow.
const FINE_BAND: f64 = 6.0;
/// Steps per strand before a sample is declared undecided.
pub const MAX_STEPS: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct McConfig {
    pub n: u32,
    pub kappa: f64,
    pub theta: f64,
    pub samples: u64,
    pub dt: f64,
    pub rng_seed: u64,
    pub stop_radius_factor: f64,
    pub left_threshold: f64,
}

impl McConfig {
    pub fn new(n: u32, kappa: f64, theta: f64, samples: u64, rng_seed: u64) -> Self {
        McConfig {
            n,
            kappa,
            theta,
            samples,
            dt: DEFAULT_DT,
            rng_seed,
            stop_radius_factor: 100.0,
            left_threshold: PI - 1e-3,
        }
    }

    pub fn validate(&self) -> Result<(), McError> {
        let bad = |m: String| Err(McError::InvalidConfig(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if !(self.kappa > 0.0 && self.kappa <= 4.0) {
            return bad(format!("kappa = {} is outside (0, 4]", self.kappa));
        }
        if !(self.theta > 0.0 && self.theta < PI) {
            return bad(format!("theta = {} is outside (0, pi)", self.theta));
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.stop_radius_factor > 1.0 && self.stop_radius_factor.is_finite()) {
            return bad(format!("stop radius factor {} must exceed 1", self.stop_radius_factor));
        }
        if !(self.left_threshold > 0.0 && self.left_threshold < PI) {
            return bad(format!("left threshold {} is outside (0, pi)", self.left_threshold));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct McEstimate {
    pub config: McConfig,
    pub f_hat: Vec<f64>,
    pub std_err: Vec<f64>,
    /// Samples landing in each sector; sums to `samples_used`.
    pub counts: Vec<u64>,
    pub samples_used: u64,
    pub flagged_undecided: u64,
}

impl McEstimate {
    fn from_counts(config: McConfig, counts: Vec<u64>, undecided: u64) -> Self {
        let total: u64 = counts.iter().sum();
        let n = total as f64;
        let f_hat: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
        let std_err = f_hat.iter().map(|f| (f * (1.0 - f) / n).sqrt()).collect();
        McEstimate { config, f_hat, std_err, counts, samples_used: total, flagged_undecided: undecided }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

/// Dimension of the Bessel process behind the gap of SLE_κ(ρ).
pub fn bessel_dimension(kappa: f64, rho: f64) -> f64 {
    1.0 + 2.0 * (rho + 2.0) / kappa
}

/// Outcome of one strand: `Some(Θ)` with `Θ = π` for a left passage, or
/// `None` when the step budget ran out.
pub fn sample_strand_angle<R: Rng>(kappa: f64, rho: f64, theta_in: f64, config: &McConfig, rng: &mut R) -> Option<f64> {
    let a = rho + 2.0 - 0.5 * kappa;
    let sqrt_k = kappa.sqrt();
    let l_max = -SEED_GAP.ln();
    let l_stop = -2.0 * config.stop_radius_factor.ln();
    let drift = |l: f64, phi: f64| {
        let e = l.exp();
        let (sin, cos) = phi.sin_cos();
        let (re, im) = (e * cos + 1.0, e * sin);
        let m = re * re + im * im;
        ((-2.0 * re / m - a), 2.0 * im / m, m)
    };
    let (mut l, mut phi) = (l_max, theta_in);
    for _ in 0..MAX_STEPS {
        // the angle seen from the tip, arg(u + 1) ≤ φ, tends to π on the left and to 0 on the right
        let e = l.exp();
        if phi >= config.left_threshold && (e * phi.sin()).atan2(e * phi.cos() + 1.0) >= config.left_threshold {
            return Some(PI);
        }
        if l < l_stop {
            return Some(phi);
        }
        let (dl, dp, m) = drift(l, phi);
        // steps shrink near u = -1 and grow quadratically outside the band
        let far = (l.abs() - FINE_BAND).max(0.0);
        let h = config.dt * (1.0 + far * far) * m.min(1.0);
        let noise = sqrt_k * h.sqrt() * rng.sample::<f64, _>(StandardNormal);
        // stochastic Heun: exact for the additive noise, trapezoidal drift
        let (lp, pp) = ((l + dl * h + noise).min(l_max), phi + dp * h);
        let (dl2, dp2, _) = drift(lp, pp);
        l = (l + 0.5 * (dl + dl2) * h + noise).min(l_max);
        phi += 0.5 * (dp + dp2) * h;
    }
    None
}

/// Sector of one sample and the number of undecided attempts before it.
fn sample_sector(config: &McConfig, index: u64) -> (usize, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(index);
    let n = config.n as usize;
    let mut undecided = 0;
    'attempt: loop {
        let mut theta = config.theta;
        for k in 1..=n {
            let rho = 2.0 * (n - k) as f64;
            match sample_strand_angle(config.kappa, rho, theta, config, &mut rng) {
                Some(t) if t == PI => return (k - 1, undecided),
                Some(t) => theta = t,
                None => {
                    undecided += 1;
                    continue 'attempt;
                }
            }
        }
        return (n, undecided);
    }
}

fn run(config: &McConfig) -> McEstimate {
    let n = config.n as usize;
    let (counts, undecided) = (0..config.samples)
        .into_par_iter()
        .fold(
            || (vec![0u64; n + 1], 0u64),
            |(mut c, u), i| {
                let (k, d) = sample_sector(config, i);
                c[k] += 1;
                (c, u + d)
            },
        )
        .reduce(
            || (vec![0u64; n + 1], 0u64),
            |(mut a, ua), (b, ub)| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                (a, ua + ub)
            },
        );
    McEstimate::from_counts(config.clone(), counts, undecided)
}

/// Estimates `(f_0, …, f_n)` on the current rayon pool. Each sample draws
/// from its own stream of the seeded generator, so the result does not
/// depend on scheduling.
pub fn watermelon_mc(config: &McConfig) -> Result<McEstimate, McError> {
    config.validate()?;
    Ok(run(config))
}

/// [`watermelon_mc`] on a dedicated pool with `threads` workers.
pub fn watermelon_mc_with_threads(config: &McConfig, threads: usize) -> Result<McEstimate, McError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| McError::Pool(e.to_string()))?;
    Ok(pool.install(|| run(config)))
}

/// One estimate per angle, sharing everything else in `config`.
pub fn watermelon_mc_batch(config: &McConfig, thetas: &[f64]) -> Result<Vec<McEstimate>, McError> {
    thetas.iter().map(|&theta| watermelon_mc(&McConfig { theta, ..config.clone() })).collect()
}

/// `theta,f0…fn,stderr0…stderrn,samples,undecided`.
pub fn batch_csv(estimates: &[McEstimate]) -> String {
    let n = estimates.first().map_or(0, |e| e.f_hat.len());
    let mut out = String::from("theta");
    (0..n).for_each(|k| out.push_str(&format!(",f{k}")));
    (0..n).for_each(|k| out.push_str(&format!(",stderr{k}")));
    out.push_str(",samples,undecided\n");
    for e in estimates {
        out.push_str(&format!("{}", e.config.theta));
        e.f_hat.iter().chain(&e.std_err).for_each(|v| out.push_str(&format!(",{v}")));
        out.push_str(&format!(",{},{}\n", e.samples_used, e.flagged_undecided));
    }
    out
}

/// `Π_{i<j} (x_j - x_i)^{2/κ}` for seeds on ℝ with the target at ∞.
pub fn partition_function_h(kappa: f64, xs: &[f64]) -> Result<f64, McError> {
    if !(kappa > 0.0) {
        return Err(McError::InvalidConfig(format!("kappa = {kappa} must be positive")));
    }
    if let Some(i) = (1..xs.len()).find(|&i| !(xs[i] > xs[i - 1])) {
        return Err(McError::Seeds(i - 1, i));
    }
    let mut log = 0.0;
    for j in 0..xs.len() {
        for i in 0..j {
            log += (xs[j] - xs[i]).ln();
        }
    }
    Ok((2.0 / kappa * log).exp())
}
