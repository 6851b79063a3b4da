//! Monte Carlo oracle: samples every fading gain and applies the exact SINR
//! chains for AF and DF relaying.
//!
//! Each trial owns a ChaCha stream selected by its index, so the estimate
//! does not depend on how trials are split across workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fas::CorrelationModel;
use crate::scenario::Scenario;

/// Trials handled by one parallel work item.
const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Af,
    Df,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialDraw {
    pub w1: f64,
    pub w2: f64,
    pub x: f64,
    pub port_gains: Vec<f64>,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub p_hat: f64,
    pub trials: u64,
    /// Trials counted in the denominator; equals `trials` for AF.
    pub accepted: u64,
    pub outages: u64,
    pub std_err: f64,
    pub seed: u64,
}

impl McEstimate {
    fn from_counts(trials: u64, accepted: u64, outages: u64, seed: u64) -> Self {
        let p_hat = outages as f64 / accepted as f64;
        Self {
            p_hat,
            trials,
            accepted,
            outages,
            std_err: (p_hat * (1.0 - p_hat) / accepted as f64).sqrt(),
            seed,
        }
    }
}

/// Generator for trial `index` under `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Port gains `|g_l|^2 / rate` for `g = factor * CN(0, I)`, written into `out`.
pub fn sample_port_gains<R: Rng + ?Sized>(model: &CorrelationModel, rate: f64, rng: &mut R, out: &mut [f64]) {
    let n = model.dim();
    let f = model.factor();
    let mut re = [0.0f64; 64];
    let mut im = [0.0f64; 64];
    let (re, im) = if n <= 64 {
        (&mut re[..n], &mut im[..n])
    } else {
        // large arrays are rare; fall back to the heap
        return sample_port_gains_heap(model, rate, rng, out);
    };
    for k in 0..n {
        re[k] = rng.sample::<f64, _>(StandardNormal) * std::f64::consts::FRAC_1_SQRT_2;
        im[k] = rng.sample::<f64, _>(StandardNormal) * std::f64::consts::FRAC_1_SQRT_2;
    }
    for (l, o) in out.iter_mut().enumerate().take(n) {
        let (mut gr, mut gi) = (0.0, 0.0);
        for k in 0..n {
            let c = f[(l, k)];
            gr += c * re[k];
            gi += c * im[k];
        }
        *o = (gr * gr + gi * gi) / rate;
    }
}

fn sample_port_gains_heap<R: Rng + ?Sized>(model: &CorrelationModel, rate: f64, rng: &mut R, out: &mut [f64]) {
    let n = model.dim();
    let re: Vec<f64> = (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * std::f64::consts::FRAC_1_SQRT_2)
        .collect();
    let im: Vec<f64> = (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * std::f64::consts::FRAC_1_SQRT_2)
        .collect();
    let f = model.factor();
    for (l, o) in out.iter_mut().enumerate().take(n) {
        let gr: f64 = (0..n).map(|k| f[(l, k)] * re[k]).sum();
        let gi: f64 = (0..n).map(|k| f[(l, k)] * im[k]).sum();
        *o = (gr * gr + gi * gi) / rate;
    }
}

pub fn sample_draw<R: Rng + ?Sized>(model: &CorrelationModel, s: &Scenario, rng: &mut R) -> TrialDraw {
    let w1 = rng.sample::<f64, _>(Exp1) / s.rate_bu1();
    let w2 = rng.sample::<f64, _>(Exp1) / s.rate_bu2();
    let x = rng.sample::<f64, _>(Exp1) / s.rate_bf();
    let mut port_gains = vec![0.0; model.dim()];
    sample_port_gains(model, s.rate_fu2(), rng, &mut port_gains);
    let z = port_gains.iter().copied().fold(0.0, f64::max);
    TrialDraw {
        w1,
        w2,
        x,
        port_gains,
        z,
    }
}

/// First-phase SINR of x2 at user 2.
fn direct_sinr(w2: f64, s: &Scenario) -> f64 {
    let rho_b = s.rho_b();
    let beta = s.beta_b();
    w2 * (1.0 - beta) * rho_b / (w2 * beta * rho_b + 1.0)
}

fn af_outage(w2: f64, x: f64, z: f64, s: &Scenario) -> bool {
    let (rho_b, rho_f) = s.linear_snr_factors();
    let beta = s.beta_b();
    let relayed = x * z * (1.0 - beta) * rho_b * rho_f / (x * z * beta * rho_b * rho_f + x * rho_b + z * rho_f + 1.0);
    direct_sinr(w2, s) + relayed < s.gamma_u2()
}

/// Returns `None` when the relay fails to decode x2 (trial rejected).
fn df_outage(w2: f64, x: f64, z: f64, s: &Scenario) -> Option<bool> {
    let (rho_b, rho_f) = s.linear_snr_factors();
    let (beta_b, beta_f) = (s.beta_b(), s.beta_f());
    let at_far = x * (1.0 - beta_b) * rho_b / (x * beta_b * rho_b + 1.0);
    if at_far < s.gamma_u2() {
        return None;
    }
    let relayed = if x * beta_b * rho_b >= s.gamma_u1() {
        z * rho_f * (1.0 - beta_f) / (z * beta_f * rho_f + 1.0)
    } else {
        z * rho_f
    };
    Some(direct_sinr(w2, s) + relayed < s.gamma_u2())
}

pub fn trial_af(draw: &TrialDraw, s: &Scenario) -> bool {
    af_outage(draw.w2, draw.x, draw.z, s)
}

/// `(conditioning_ok, outage)`; `outage` is false for rejected draws.
pub fn trial_df(draw: &TrialDraw, s: &Scenario) -> (bool, bool) {
    match df_outage(draw.w2, draw.x, draw.z, s) {
        Some(o) => (true, o),
        None => (false, false),
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    af_out: u64,
    df_acc: u64,
    df_out: u64,
}

impl std::ops::Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts {
            af_out: self.af_out + o.af_out,
            df_acc: self.df_acc + o.df_acc,
            df_out: self.df_out + o.df_out,
        }
    }
}

fn run_counts(s: &Scenario, model: &CorrelationModel, trials: u64, seed: u64) -> Counts {
    let base = ChaCha8Rng::seed_from_u64(seed);
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut gains = vec![0.0; model.dim()];
            let mut acc = Counts::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut rng = base.clone();
                rng.set_stream(i);
                let _w1 = rng.sample::<f64, _>(Exp1);
                let w2 = rng.sample::<f64, _>(Exp1) / s.rate_bu2();
                let x = rng.sample::<f64, _>(Exp1) / s.rate_bf();
                sample_port_gains(model, s.rate_fu2(), &mut rng, &mut gains);
                let z = gains.iter().copied().fold(0.0, f64::max);
                acc.af_out += u64::from(af_outage(w2, x, z, s));
                if let Some(o) = df_outage(w2, x, z, s) {
                    acc.df_acc += 1;
                    acc.df_out += u64::from(o);
                }
            }
            acc
        })
        .reduce(Counts::default, |a, b| a + b)
}

/// AF and DF estimates from one shared set of draws. Identical to two
/// [`estimate_op`] calls with the same seed.
pub fn estimate_pair(s: &Scenario, model: &CorrelationModel, trials: u64, seed: u64) -> Result<(McEstimate, Result<McEstimate>)> {
    if trials == 0 {
        return Err(Error::Invalid {
            key: "mc.trials".into(),
            reason: "must be at least 1".into(),
        });
    }
    let c = run_counts(s, model, trials, seed);
    let af = McEstimate::from_counts(trials, trials, c.af_out, seed);
    let df = if c.df_acc == 0 {
        Err(Error::NoAcceptance { trials })
    } else {
        Ok(McEstimate::from_counts(trials, c.df_acc, c.df_out, seed))
    };
    Ok((af, df))
}

pub fn estimate_op(scheme: Scheme, s: &Scenario, model: &CorrelationModel, trials: u64, seed: u64) -> Result<McEstimate> {
    let (af, df) = estimate_pair(s, model, trials, seed)?;
    match scheme {
        Scheme::Af => Ok(af),
        Scheme::Df => df,
    }
}

/// Best-port gains `max_l |g_l|^2 / rate` for trials `0..n`.
pub fn sample_best_port_gains(model: &CorrelationModel, rate: f64, n: u64, seed: u64) -> Vec<f64> {
    let base = ChaCha8Rng::seed_from_u64(seed);
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut gains = vec![0.0; model.dim()];
            let base = base.clone();
            (c * CHUNK..((c + 1) * CHUNK).min(n)).map(move |i| {
                let mut rng = base.clone();
                rng.set_stream(i);
                sample_port_gains(model, rate, &mut rng, &mut gains);
                gains.iter().copied().fold(0.0, f64::max)
            })
        })
        .collect()
}

/// Sample correlation of `Re(g_l)` across ports, from `n` draws.
pub fn empirical_port_correlation(model: &CorrelationModel, n: u64, seed: u64) -> nalgebra::DMatrix<f64> {
    let dim = model.dim();
    let f = model.factor();
    let mut sum = nalgebra::DMatrix::<f64>::zeros(dim, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = nalgebra::DVector::<f64>::zeros(dim);
    for _ in 0..n {
        let e = nalgebra::DVector::<f64>::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        f.mul_to(&e, &mut g);
        sum.ger(1.0, &g, &g, 1.0);
    }
    let d: Vec<f64> = (0..dim).map(|i| sum[(i, i)].sqrt()).collect();
    nalgebra::DMatrix::from_fn(dim, dim, |i, j| sum[(i, j)] / (d[i] * d[j]))
}
