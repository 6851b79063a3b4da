//! Closed-form outage probability of the weak user under AF and DF
//! relaying, evaluated by adaptive quadrature.
//!
//! Notation: `W2 = |h_BU2|^2`, `X = |h_BF|^2`, `Z = |h_FU2|^2` (best relay
//! port). `W2` and `X` are exponential with rates `d^alpha`; `Z` follows
//! the copula CDF of [`CopulaChannel`].
//!
//! Each piecewise expression is integrated in its complementary form:
//! `q = int f_W2(w) P(outage | W2 = w) dw` over the region where outage is
//! not already decided. This is algebraically identical to the `1 - ...`
//! form but does not cancel when `q` is tiny at high SNR.

use std::cell::{Cell, RefCell};

use crate::copula::CopulaChannel;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadResult, QuadratureSpec};
use crate::scenario::{Point3, Scenario};

/// Scalar thresholds shared by the AF and DF expressions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdConstants {
    pub xi_b: f64,
    pub xi_f: f64,
    pub i1: f64,
    /// `W2` above which the direct link alone succeeds; `+inf` when `xi_b <= 0`.
    pub c_w2: f64,
    pub c_0: f64,
    /// `X` above which the relay also decodes the strong user's symbol.
    pub d_w1: f64,
}

pub fn scalar_constants(s: &Scenario) -> ThresholdConstants {
    let (rho_b, _) = s.linear_snr_factors();
    let (beta_b, beta_f) = (s.beta_b(), s.beta_f());
    let (g1, g2) = (s.gamma_u1(), s.gamma_u2());
    let xi_b = 1.0 - beta_b - beta_b * g2;
    let xi_f = 1.0 - beta_f - beta_f * g2;
    let i1 = rho_b * (beta_f * (1.0 - beta_b) + xi_f * beta_b);
    let c_w2 = if xi_b > 0.0 {
        g2 / (xi_b * rho_b)
    } else {
        f64::INFINITY
    };
    let c0_den = rho_b * beta_b * (xi_b + 1.0 - beta_b);
    let c_0 = if beta_b == 0.0 || c0_den == 0.0 {
        f64::INFINITY
    } else {
        -xi_b / c0_den
    };
    // A zero threshold is met by any X, including with no power on x1.
    let d_w1 = if g1 == 0.0 {
        0.0
    } else if beta_b == 0.0 {
        f64::INFINITY
    } else {
        g1 / (rho_b * beta_b)
    };
    ThresholdConstants {
        xi_b,
        xi_f,
        i1,
        c_w2,
        c_0,
        d_w1,
    }
}

/// Smallest `X` for which the relayed AF term can be positive, given `W2 = w2`.
pub fn c_x(w2: f64, s: &Scenario) -> f64 {
    let rho_b = s.rho_b();
    let beta = s.beta_b();
    let xi = 1.0 - beta - beta * s.gamma_u2();
    let den = rho_b * (xi + w2 * beta * rho_b * (1.0 + xi - beta));
    if den == 0.0 {
        return f64::INFINITY;
    }
    (s.gamma_u2() - xi * w2 * rho_b) / den
}

/// AF threshold on `Z` given `W2 = w2`, `X = x`.
pub fn c_z(w2: f64, x: f64, s: &Scenario) -> f64 {
    let (rho_b, rho_f) = s.linear_snr_factors();
    let beta = s.beta_b();
    let g2 = s.gamma_u2();
    let xi = 1.0 - beta - beta * g2;
    let num = (g2 - w2 * rho_b * xi) * (1.0 + x * rho_b);
    let den = rho_f * (x * rho_b * (w2 * rho_b * beta * (xi + 1.0 - beta) + xi) + w2 * rho_b * xi - g2);
    if den == 0.0 {
        return f64::INFINITY;
    }
    num / den
}

/// DF threshold on `Z` when the relay forwards only the weak user's symbol.
pub fn d_z(w2: f64, s: &Scenario) -> f64 {
    let (rho_b, rho_f) = s.linear_snr_factors();
    let beta = s.beta_b();
    let g2 = s.gamma_u2();
    let xi = 1.0 - beta - beta * g2;
    (g2 - w2 * xi * rho_b) / (rho_f * (w2 * rho_b * beta + 1.0))
}

/// DF threshold on `Z` when the relay re-superposes both symbols.
pub fn d_zprime(w2: f64, s: &Scenario) -> f64 {
    let (rho_b, rho_f) = s.linear_snr_factors();
    let (beta_b, beta_f) = (s.beta_b(), s.beta_f());
    let g2 = s.gamma_u2();
    let xi_b = 1.0 - beta_b - beta_b * g2;
    let xi_f = 1.0 - beta_f - beta_f * g2;
    let den = rho_f * (w2 * rho_b * (beta_f * (1.0 - beta_b) + xi_f * beta_b) + xi_f);
    if den == 0.0 {
        return f64::INFINITY;
    }
    (g2 - w2 * xi_b * rho_b) / den
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// AF with `beta_b < 1/(1+gamma)`.
    FeasibleXiPos,
    /// AF with `1/(1+gamma) <= beta_b < 2/(2+gamma)`.
    FeasibleXiMid,
    AlwaysOutage,
    /// DF with `beta_b` below the strong-user decoding bound.
    DfLowBeta,
    /// DF between that bound and `1/(1+gamma)`.
    DfMidBeta,
    DfAlwaysOutage,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::FeasibleXiPos => "feasible_xi_pos",
            Branch::FeasibleXiMid => "feasible_xi_mid",
            Branch::AlwaysOutage => "always_outage",
            Branch::DfLowBeta => "df_low_beta",
            Branch::DfMidBeta => "df_mid_beta",
            Branch::DfAlwaysOutage => "df_always_outage",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageReport {
    pub q: f64,
    pub branch: Branch,
    pub err_estimate: f64,
}

impl OutageReport {
    fn certain(branch: Branch) -> Self {
        Self {
            q: 1.0,
            branch,
            err_estimate: 0.0,
        }
    }
}

/// `P(Z < threshold)`, with the support of `Z` handled exactly.
fn z_below(ch: &CopulaChannel, threshold: f64, first_err: &RefCell<Option<Error>>) -> f64 {
    if threshold.is_nan() {
        // only reachable at the removable pole where outage is certain
        return 1.0;
    }
    match ch.cdf_value(threshold) {
        Ok(v) => v,
        Err(e) => {
            first_err.borrow_mut().get_or_insert(e);
            0.0
        }
    }
}

fn exp_cdf(x: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x == f64::INFINITY {
        1.0
    } else {
        -(-rate * x).exp_m1()
    }
}

fn check_channel(s: &Scenario, ch: &CopulaChannel) -> Result<()> {
    let want = s.rate_fu2();
    if ((ch.rate() - want) / want).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "copula channel rate {} does not match the scenario's relay-to-user-2 rate {want}",
            ch.rate()
        )));
    }
    Ok(())
}

/// Tolerances for a nested inner integral.
fn inner_spec(quad: &QuadratureSpec) -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: quad.abs_tol * 0.1,
        ..*quad
    }
}

/// `integral of f over [start, start + len]`, integrated in `s = ln(w - start)`.
///
/// The thresholds have poles or saturate on a scale near `1/SNR` at the
/// lower end while the weights vary on the scale of the whole range; a log
/// variable resolves both. `[start, start + cut]` is charged at its midpoint
/// value with error `cut * bound`, where `bound >= sup |f|`.
fn log_span(mut f: impl FnMut(f64) -> f64, start: f64, len: f64, cut: f64, bound: f64, quad: &QuadratureSpec) -> Result<QuadResult> {
    if !(len > 0.0) {
        return Ok(QuadResult { value: 0.0, err: 0.0, evals: 0 });
    }
    let cut = cut.min(0.5 * len);
    let r = integrate(
        |s| {
            let t = s.exp();
            t * f(start + t)
        },
        cut.ln(),
        len.ln(),
        quad,
    )?;
    Ok(QuadResult {
        value: r.value + cut * f(start + 0.5 * cut),
        err: r.err + cut * bound,
        evals: r.evals + 1,
    })
}

/// Exponential-weighted `integral over [start, start + len]` for densities
/// `rate * exp(-rate w)` and `g` valued in `[0, 1]`.
fn exp_weighted(rate: f64, start: f64, len: f64, mut g: impl FnMut(f64) -> f64, quad: &QuadratureSpec) -> Result<QuadResult> {
    log_span(
        |w| rate * (-rate * w).exp() * g(w),
        start,
        len,
        quad.tail_mass / rate,
        rate * (-rate * start).exp(),
        quad,
    )
}

/// `E[g(start + T)]` for `T ~ Exp(rate)` and `g` valued in `[0, 1]`; `T`
/// beyond its `tail_mass` quantile is dropped into the error.
fn exp_shift_mean(rate: f64, start: f64, mut g: impl FnMut(f64) -> f64, quad: &QuadratureSpec) -> Result<QuadResult> {
    let mut r = exp_weighted(rate, 0.0, -quad.tail_mass.ln() / rate, |t| g(start + t), quad)?;
    r.err += quad.tail_mass;
    Ok(r)
}

/// `P(outage | W2 = w2)` for AF in the region where `C_x` is finite and
/// non-negative: `P(X < C_x) + P(X >= C_x, Z < C_z)`.
fn af_conditional(
    w2: f64,
    s: &Scenario,
    ch: &CopulaChannel,
    quad: &QuadratureSpec,
    first_err: &RefCell<Option<Error>>,
    inner_err: &Cell<f64>,
) -> f64 {
    let b = s.rate_bf();
    let cx = c_x(w2, s).max(0.0);
    if cx == f64::INFINITY {
        return 1.0;
    }
    let surv = (-b * cx).exp();
    if surv == 0.0 {
        return 1.0;
    }
    let inner = exp_shift_mean(b, cx, |x| z_below(ch, c_z(w2, x, s), first_err), &inner_spec(quad));
    match inner {
        Ok(r) => {
            inner_err.set(inner_err.get().max(surv * r.err));
            -(-b * cx).exp_m1() + surv * r.value
        }
        Err(e) => {
            first_err.borrow_mut().get_or_insert(e);
            1.0
        }
    }
}

/// Outage probability with amplify-and-forward relaying.
pub fn op_af(s: &Scenario, ch: &CopulaChannel, quad: &QuadratureSpec) -> Result<OutageReport> {
    quad.validate()?;
    check_channel(s, ch)?;
    let beta = s.beta_b();
    let g2 = s.gamma_u2();
    let k = scalar_constants(s);
    let a = s.rate_bu2();

    let first_err = RefCell::new(None);
    let inner_err = Cell::new(0.0);
    let (branch, q, quad_err, z_mass) = if beta < 1.0 / (1.0 + g2) {
        // Direct link alone succeeds for W2 >= C_w2.
        let outer = exp_weighted(a, 0.0, k.c_w2, |w2| af_conditional(w2, s, ch, quad, &first_err, &inner_err), quad)?;
        (Branch::FeasibleXiPos, outer.value, outer.err, exp_cdf(k.c_w2, a))
    } else if beta < 2.0 / (2.0 + g2) && k.c_0.is_finite() && k.c_0 >= 0.0 {
        // W2 < C_0 always outages; W2 - C_0 is again exponential.
        let c0 = k.c_0;
        let outer = exp_shift_mean(a, c0, |w2| af_conditional(w2, s, ch, quad, &first_err, &inner_err), quad)?;
        let tail = (-a * c0).exp();
        (Branch::FeasibleXiMid, exp_cdf(c0, a) + tail * outer.value, tail * outer.err, tail)
    } else {
        return Ok(OutageReport::certain(Branch::AlwaysOutage));
    };

    if let Some(e) = first_err.into_inner() {
        return Err(e);
    }
    Ok(OutageReport {
        q: q.clamp(0.0, 1.0),
        branch,
        err_estimate: quad_err + z_mass * (inner_err.get() + ch.pointwise_error_bound()),
    })
}

/// Outage probability with decode-and-forward relaying, conditional on the
/// relay decoding the weak user's symbol (`X >= C_w2`).
pub fn op_df(s: &Scenario, ch: &CopulaChannel, quad: &QuadratureSpec) -> Result<OutageReport> {
    quad.validate()?;
    check_channel(s, ch)?;
    let (g1, g2) = (s.gamma_u1(), s.gamma_u2());
    let beta = s.beta_b();
    if !(beta < 1.0 / (1.0 + g2)) {
        return Ok(OutageReport::certain(Branch::DfAlwaysOutage));
    }
    let k = scalar_constants(s);
    let a = s.rate_bu2();
    let b = s.rate_bf();
    let branch = if beta < g1 / (g1 + g2 + g1 * g2) {
        Branch::DfLowBeta
    } else {
        Branch::DfMidBeta
    };
    // P(relay also decodes x1 | relay decodes x2)
    let p_full = if k.d_w1 > k.c_w2 {
        (b * (k.c_w2 - k.d_w1)).exp()
    } else {
        1.0
    };

    let first_err = RefCell::new(None);
    let mut q = 0.0;
    let mut quad_err = 0.0;

    // Relay forwards x2 alone: Z < D_z is outage.
    if p_full < 1.0 {
        let r = exp_weighted(a, 0.0, k.c_w2, |w2| z_below(ch, d_z(w2, s), &first_err), quad)?;
        q += (1.0 - p_full) * r.value;
        quad_err += (1.0 - p_full) * r.err;
    }

    // Relay re-superposes x1 and x2: Z < D_z' is outage where the
    // denominator of D_z' is positive, certain outage elsewhere below C_w2.
    if p_full > 0.0 {
        let (lo, hi) = df_full_window(k.i1, k.xi_f, k.c_w2);
        let certain = exp_cdf(k.c_w2, a) - (exp_cdf(hi, a) - exp_cdf(lo, a));
        let r = exp_weighted(a, lo, hi - lo, |w2| z_below(ch, d_zprime(w2, s), &first_err), quad)?;
        q += p_full * (certain.max(0.0) + r.value);
        quad_err += p_full * r.err;
    }

    if let Some(e) = first_err.into_inner() {
        return Err(e);
    }
    Ok(OutageReport {
        q: q.clamp(0.0, 1.0),
        branch,
        err_estimate: quad_err + exp_cdf(k.c_w2, a) * ch.pointwise_error_bound(),
    })
}

/// Sub-interval of `[0, c_w2]` on which `w2 * i1 + xi_f > 0`.
fn df_full_window(i1: f64, xi_f: f64, c_w2: f64) -> (f64, f64) {
    if i1 > 0.0 {
        ((-xi_f / i1).max(0.0).min(c_w2), c_w2)
    } else if i1 == 0.0 {
        if xi_f > 0.0 {
            (0.0, c_w2)
        } else {
            (0.0, 0.0)
        }
    } else if xi_f > 0.0 {
        (0.0, (-xi_f / i1).min(c_w2))
    } else {
        (0.0, 0.0)
    }
}

/// `1` selects DF, `0` selects AF. Ties go to DF.
pub fn select_relaying(q_af: f64, q_df: f64) -> u8 {
    u8::from(q_af - q_df >= 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuCell {
    pub far_pos: Point3,
    pub q_af: f64,
    pub q_df: f64,
    pub mu: u8,
    pub err_af: f64,
    pub err_df: f64,
    /// Set when this cell could not be evaluated; the numeric fields are NaN.
    pub error: Option<String>,
}

/// Evaluates one relay position.
pub fn mu_cell(base: &Scenario, far_pos: Point3, ch: &CopulaChannel, quad: &QuadratureSpec) -> MuCell {
    let eval = || -> Result<(OutageReport, OutageReport)> {
        let s = base.with_far_pos(far_pos)?;
        let ch = ch.with_rate(s.rate_fu2())?;
        Ok((op_af(&s, &ch, quad)?, op_df(&s, &ch, quad)?))
    };
    match eval() {
        Ok((af, df)) => MuCell {
            far_pos,
            q_af: af.q,
            q_df: df.q,
            mu: select_relaying(af.q, df.q),
            err_af: af.err_estimate,
            err_df: df.err_estimate,
            error: None,
        },
        Err(e) => MuCell {
            far_pos,
            q_af: f64::NAN,
            q_df: f64::NAN,
            mu: 0,
            err_af: f64::NAN,
            err_df: f64::NAN,
            error: Some(e.to_string()),
        },
    }
}

/// Relay-scheme selection over a list of relay positions. `ch` supplies the
/// correlation model and copula table; its rate is replaced per cell.
pub fn mu_map(base: &Scenario, far_positions: &[Point3], ch: &CopulaChannel, quad: &QuadratureSpec) -> Vec<MuCell> {
    use rayon::prelude::*;
    far_positions
        .par_iter()
        .map(|&p| mu_cell(base, p, ch, quad))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    use crate::fas::CorrelationModel;
    use crate::mvn::MvnSpec;
    use crate::scenario::ScenarioParams;

    fn unit_scenario(beta_b: f64, beta_f: f64, g1: f64, g2: f64) -> Scenario {
        // rho_b = rho_f = 1
        Scenario::new(ScenarioParams {
            p_b_dbm: -130.0,
            p_f_dbm: -130.0,
            beta_b,
            beta_f,
            gamma_u1: g1,
            gamma_u2: g2,
            ..Default::default()
        })
        .unwrap()
    }

    fn single_port(s: &Scenario) -> CopulaChannel {
        CopulaChannel::direct(Arc::new(CorrelationModel::identity(1)), s.rate_fu2(), MvnSpec::default()).unwrap()
    }

    #[test]
    fn exp_weighted_integrals() {
        let quad = QuadratureSpec::default();
        let r = exp_weighted(4.0, 0.5, 2.0, |_| 1.0, &quad).unwrap();
        assert_abs_diff_eq!(r.value, (-2.0f64).exp() - (-10.0f64).exp(), epsilon = 1e-12);
        // a 1/w feature far below the range scale; c e^c (E1(c) - E1(1 + c)), c = 1e-7
        let r = exp_weighted(1.0, 0.0, 1.0, |w| 1e-7 / (w + 1e-7), &quad).unwrap();
        assert_abs_diff_eq!(r.value, 1.53214977205989e-6, epsilon = 1e-12);
        let r = exp_shift_mean(2.0, 3.0, |x| if x < 3.5 { 1.0 } else { 0.0 }, &quad);
        assert!(r.is_ok() || matches!(r, Err(Error::Quadrature { .. })));
        assert_eq!(exp_weighted(1.0, 0.0, 0.0, |_| 1.0, &quad).unwrap().value, 0.0);
    }

    #[test]
    fn converges_where_thresholds_are_multiscale() {
        // beta just below 1/(1+gamma): C_x changes on a 1e-7 scale in W2
        let s = Scenario::new(ScenarioParams {
            beta_b: 0.40081443960917673,
            beta_f: 0.0132,
            gamma_u1: 1.4941527885277774,
            gamma_u2: 1.4941527885277774,
            far_pos: [0.914, 0.2, 0.108],
            ..Default::default()
        })
        .unwrap()
        .with_snr_db(35.89)
        .unwrap();
        // mid branch at high SNR: C_0 near 6e-6
        let m = Scenario::new(ScenarioParams {
            beta_b: 0.3107,
            beta_f: 0.0,
            gamma_u1: 2.2635,
            gamma_u2: 2.2635,
            far_pos: [0.2, 0.2, 0.1],
            ..Default::default()
        })
        .unwrap()
        .with_snr_db(40.3)
        .unwrap();
        for (sc, branch) in [(s, Branch::FeasibleXiPos), (m, Branch::FeasibleXiMid)] {
            let r = op_af(&sc, &single_port(&sc), &QuadratureSpec::default()).unwrap();
            assert_eq!(r.branch, branch);
            assert!((0.0..=1.0).contains(&r.q));
            op_df(&sc, &single_port(&sc), &QuadratureSpec::default()).unwrap();
        }
    }

    #[test]
    fn constants_fixtures() {
        let k = scalar_constants(&unit_scenario(0.1, 0.1, 3.0, 3.0));
        assert_abs_diff_eq!(k.xi_b, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(k.c_w2, 3.0 / 0.6, epsilon = 1e-12);
        let k = scalar_constants(&unit_scenario(0.25, 0.1, 3.0, 3.0));
        assert_eq!(k.xi_b, 0.0);
        assert_eq!(k.c_w2, f64::INFINITY);
        // beta 0.6 is outside the NOMA range, so check the formula directly
        let (beta, g, rho) = (0.6f64, 1.0f64, 1.0f64);
        let xi = 1.0 - beta - beta * g;
        assert_abs_diff_eq!(xi, -0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(-xi / (rho * beta * (xi + 1.0 - beta)), 1.6666666666666667, epsilon = 1e-12);
        let k = scalar_constants(&unit_scenario(0.0, 0.2, 3.0, 3.0));
        assert_eq!(k.c_0, f64::INFINITY);
        assert_eq!(k.d_w1, f64::INFINITY);
        let k = scalar_constants(&unit_scenario(0.2, 0.2, 1.0, 1.0));
        assert_abs_diff_eq!(k.i1, 0.28, epsilon = 1e-15);
        assert_abs_diff_eq!(k.d_w1, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn threshold_fixtures() {
        let s = unit_scenario(0.2, 0.2, 1.0, 1.0);
        assert_abs_diff_eq!(c_x(0.0, &s), 1.0 / 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(c_x(1.0, &s), 0.4 / 0.88, epsilon = 1e-12);
        let cw2 = scalar_constants(&s).c_w2;
        assert_abs_diff_eq!(c_x(cw2, &s), 0.0, epsilon = 1e-12);

        assert_abs_diff_eq!(c_z(0.0, 5.0, &s), 3.0, epsilon = 1e-12);
        assert!(c_z(cw2 * 1.5, 5.0, &s) <= 0.0);
        // approaching C_x from above sends C_z to +inf
        let cx = c_x(0.5, &s);
        assert!(c_z(0.5, cx * (1.0 + 1e-9), &s) > 1e6);

        assert_abs_diff_eq!(d_z(0.0, &s), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d_z(cw2, &s), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d_z(1.0, &s), 0.4 / 1.2, epsilon = 1e-12);

        assert_abs_diff_eq!(d_zprime(0.0, &s), 1.0 / 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(d_zprime(1.0, &s), 0.4 / (0.28 + 0.6), epsilon = 1e-12);
    }

    #[test]
    fn selection_rule() {
        assert_eq!(select_relaying(0.2, 0.2), 1);
        assert_eq!(select_relaying(0.1, 0.2), 0);
        assert_eq!(select_relaying(0.3, 0.2), 1);
    }

    #[test]
    fn always_outage_branches() {
        for beta in [0.40, 0.45, 0.49] {
            let s = unit_scenario(beta, 0.1, 3.0, 3.0);
            let r = op_af(&s, &single_port(&s), &QuadratureSpec::default()).unwrap();
            assert_eq!((r.q, r.err_estimate, r.branch), (1.0, 0.0, Branch::AlwaysOutage));
        }
        for beta in [0.25, 0.30, 0.49] {
            let s = unit_scenario(beta, 0.1, 3.0, 3.0);
            let r = op_df(&s, &single_port(&s), &QuadratureSpec::default()).unwrap();
            assert_eq!((r.q, r.err_estimate, r.branch), (1.0, 0.0, Branch::DfAlwaysOutage));
        }
    }

    #[test]
    fn zero_threshold_never_outages() {
        let s = unit_scenario(0.1, 0.1, 3.0, 0.0);
        let ch = single_port(&s);
        assert_eq!(op_af(&s, &ch, &QuadratureSpec::default()).unwrap().q, 0.0);
        assert_eq!(op_df(&s, &ch, &QuadratureSpec::default()).unwrap().q, 0.0);
    }

    #[test]
    fn branch_labels() {
        let s = unit_scenario(0.1, 0.1, 3.0, 3.0);
        let ch = single_port(&s);
        assert_eq!(op_af(&s, &ch, &QuadratureSpec::default()).unwrap().branch, Branch::FeasibleXiPos);
        let s = unit_scenario(0.3, 0.1, 3.0, 3.0);
        assert_eq!(op_af(&s, &single_port(&s), &QuadratureSpec::default()).unwrap().branch, Branch::FeasibleXiMid);
        // gamma1 = gamma2 = 3: strong-user bound is 3/15 = 0.2
        let s = unit_scenario(0.1, 0.1, 3.0, 3.0);
        assert_eq!(op_df(&s, &ch, &QuadratureSpec::default()).unwrap().branch, Branch::DfLowBeta);
        let s = unit_scenario(0.22, 0.1, 3.0, 3.0);
        assert_eq!(op_df(&s, &single_port(&s), &QuadratureSpec::default()).unwrap().branch, Branch::DfMidBeta);
    }

    #[test]
    fn rejects_mismatched_channel() {
        let s = unit_scenario(0.1, 0.1, 3.0, 3.0);
        let ch = CopulaChannel::direct(Arc::new(CorrelationModel::identity(1)), s.rate_fu2() * 2.0, MvnSpec::default()).unwrap();
        assert!(op_af(&s, &ch, &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn full_window_cases() {
        assert_eq!(df_full_window(1.0, 0.5, 2.0), (0.0, 2.0));
        assert_eq!(df_full_window(1.0, -0.5, 2.0), (0.5, 2.0));
        assert_eq!(df_full_window(1.0, -5.0, 2.0), (2.0, 2.0));
        assert_eq!(df_full_window(0.0, -0.1, 2.0), (0.0, 0.0));
        assert_eq!(df_full_window(-1.0, 0.5, 2.0), (0.0, 0.5));
    }
}
