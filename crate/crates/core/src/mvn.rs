//! Standard normal quantile and the multivariate normal CDF.
//!
//! The multivariate CDF uses Genz's separation-of-variables transform to
//! the unit cube, integrated with a randomly shifted rank-1 (Richtmyer)
//! lattice, tent periodization and antithetic pairs. The reported error
//! is the standard error across the random shifts.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::fas::{semidefinite_cholesky, CorrelationModel};

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Inverse of [`std_normal_cdf`]. `0` and `1` map to `-inf` and `+inf`.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(quantile_unchecked(p))
}

#[inline]
fn quantile_unchecked(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else if p > 0.5 {
        // 1 - p is exact here; reflecting keeps the upper tail as precise as the lower.
        -quantile_unchecked(1.0 - p)
    } else {
        // erfc_inv keeps full relative precision in the lower tail where
        // the erf_inv(2p - 1) form cancels.
        -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvnSpec {
    pub target_abs_error: f64,
    /// Lattice points per randomization.
    pub sample_budget: usize,
    pub randomizations: usize,
    pub seed: u64,
}

impl Default for MvnSpec {
    fn default() -> Self {
        Self {
            target_abs_error: 1e-4,
            sample_budget: 1 << 13,
            randomizations: 12,
            seed: 0x5eed_f00d,
        }
    }
}

impl MvnSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: String| Err(Error::Invalid { key: key.into(), reason });
        if !(self.target_abs_error > 0.0) {
            return bad("mvn.target_abs_error", format!("must be > 0, got {}", self.target_abs_error));
        }
        if self.sample_budget < 128 {
            return bad("mvn.sample_budget", format!("must be >= 128, got {}", self.sample_budget));
        }
        if self.randomizations < 2 {
            return bad("mvn.randomizations", format!("must be >= 2, got {}", self.randomizations));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvnResult {
    pub value: f64,
    pub err_estimate: f64,
    /// Set when `err_estimate` exceeds the requested target.
    pub above_target: bool,
}

impl MvnResult {
    fn exact(value: f64) -> Self {
        Self {
            value,
            err_estimate: 0.0,
            above_target: false,
        }
    }
}

/// `P(X_1 <= upper_1, ..., X_n <= upper_n)` for `X ~ N(0, J)`.
pub fn mvn_cdf(model: &CorrelationModel, upper: &[f64], spec: &MvnSpec) -> Result<MvnResult> {
    spec.validate()?;
    let n = model.dim();
    if upper.len() != n {
        return Err(Error::Domain(format!(
            "bound vector has length {}, correlation model has dimension {n}",
            upper.len()
        )));
    }
    if upper.iter().any(|b| b.is_nan()) {
        return Err(Error::Domain("NaN integration bound".into()));
    }
    if upper.iter().any(|&b| b == f64::NEG_INFINITY) {
        return Ok(MvnResult::exact(0.0));
    }

    // Integrate the tightest bounds first. A no-op when all bounds are
    // equal, which is the only case the copula needs.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| upper[a].total_cmp(&upper[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| upper[i]).collect();
    let permuted;
    let chol = if order.iter().enumerate().all(|(i, &o)| i == o) {
        model.cholesky()
    } else {
        let f = model.factor();
        let rep = f * f.transpose();
        permuted = semidefinite_cholesky(&DMatrix::from_fn(n, n, |r, c| rep[(order[r], order[c])]));
        &permuted
    };

    Ok(genz_lattice(chol, &sorted, spec))
}

/// [`mvn_cdf`] at the all-equal bound `(t, ..., t)`.
pub fn mvn_cdf_constant(model: &CorrelationModel, t: f64, spec: &MvnSpec) -> Result<MvnResult> {
    if t.is_nan() {
        return Err(Error::Domain("NaN integration bound".into()));
    }
    if t == f64::INFINITY {
        spec.validate()?;
        return Ok(MvnResult::exact(1.0));
    }
    mvn_cdf(model, &vec![t; model.dim()], spec)
}

/// Genz's transformed integrand at one point `w` of the unit cube
/// (only the first `n - 1` coordinates are used).
fn genz_integrand(chol: &DMatrix<f64>, upper: &[f64], w: &[f64], y: &mut [f64]) -> f64 {
    let n = upper.len();
    let mut f = 1.0;
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..i {
            s += chol[(i, j)] * y[j];
        }
        let piv = chol[(i, i)];
        let e = if piv > 0.0 {
            if upper[i] == f64::INFINITY {
                1.0
            } else {
                std_normal_cdf((upper[i] - s) / piv)
            }
        } else {
            // degenerate: X_i is fully determined by the previous variables
            if s <= upper[i] {
                1.0
            } else {
                0.0
            }
        };
        f *= e;
        if f == 0.0 {
            return 0.0;
        }
        if i + 1 < n {
            y[i] = if piv > 0.0 {
                quantile_unchecked((w[i] * e).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
            } else {
                0.0
            };
        }
    }
    f
}

fn genz_lattice(chol: &DMatrix<f64>, upper: &[f64], spec: &MvnSpec) -> MvnResult {
    let n = upper.len();
    if n == 1 {
        let v = if upper[0] == f64::INFINITY {
            1.0
        } else {
            std_normal_cdf(upper[0])
        };
        return MvnResult::exact(v);
    }
    let dims = n - 1;
    let gen: Vec<f64> = first_primes(dims).into_iter().map(|p| (p as f64).sqrt().fract()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut w = vec![0.0; dims];
    let mut w_anti = vec![0.0; dims];
    let mut y = vec![0.0; n];
    let mut means = Vec::with_capacity(spec.randomizations);
    for _ in 0..spec.randomizations {
        let shift: Vec<f64> = (0..dims).map(|_| rng.random::<f64>()).collect();
        let mut acc = 0.0;
        for k in 1..=spec.sample_budget {
            for d in 0..dims {
                let x = (k as f64 * gen[d] + shift[d]).fract();
                let tent = (2.0 * x - 1.0).abs();
                w[d] = tent;
                w_anti[d] = 1.0 - tent;
            }
            acc += 0.5
                * (genz_integrand(chol, upper, &w, &mut y) + genz_integrand(chol, upper, &w_anti, &mut y));
        }
        means.push(acc / spec.sample_budget as f64);
    }

    let r = means.len() as f64;
    let mean = means.iter().sum::<f64>() / r;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (r - 1.0);
    let err = (var / r).sqrt();
    MvnResult {
        value: mean.clamp(0.0, 1.0),
        err_estimate: err,
        above_target: err > spec.target_abs_error,
    }
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(count);
    let mut c = 2u64;
    while primes.len() < count {
        if primes.iter().take_while(|&&p| p * p <= c).all(|&p| c % p != 0) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}
