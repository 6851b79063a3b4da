//! Cross-checks of the analytic evaluator against independent routes:
//! brute-force integration of the SINR chain for a single-port relay, and
//! Monte Carlo for the same configuration.

use std::sync::{Arc, OnceLock};

use far_outage::analytic::{mu_cell, op_af, op_df, select_relaying};
use far_outage::copula::{CopulaChannel, CopulaTable};
use far_outage::fas::{CorrelationModel, FasGeometry};
use far_outage::montecarlo::estimate_pair;
use far_outage::mvn::MvnSpec;
use far_outage::quadrature::QuadratureSpec;
use far_outage::scenario::{Scenario, ScenarioParams};
use proptest::prelude::*;

fn single_port(s: &Scenario) -> CopulaChannel {
    CopulaChannel::direct(Arc::new(CorrelationModel::identity(1)), s.rate_fu2(), MvnSpec::default()).unwrap()
}

fn desk(snr: f64, beta_f: f64) -> Scenario {
    Scenario::new(ScenarioParams {
        beta_f,
        ..Default::default()
    })
    .unwrap()
    .with_snr_db(snr)
    .unwrap()
}

fn direct(w2: f64, s: &Scenario) -> f64 {
    let (rho, beta) = (s.rho_b(), s.beta_b());
    w2 * (1.0 - beta) * rho / (w2 * beta * rho + 1.0)
}

/// Smallest `z` with `base + relayed(z) >= gamma`, by bisection on the
/// increasing function `relayed`; `None` if it never gets there.
fn z_threshold(base: f64, gamma: f64, relayed: impl Fn(f64) -> f64) -> Option<f64> {
    if base >= gamma {
        return Some(0.0);
    }
    let mut hi = 1.0;
    while base + relayed(hi) < gamma {
        hi *= 2.0;
        if hi > 1e12 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if base + relayed(mid) < gamma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Composite 3-point Gauss-Legendre rule on `(0, 1)` with `n` equal cells.
fn panels(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let d = 0.5 * (0.6f64).sqrt();
    let h = 1.0 / n as f64;
    (0..n)
        .map(|i| {
            let m = (i as f64 + 0.5) * h;
            (5.0 * f(m - d * h) + 8.0 * f(m) + 5.0 * f(m + d * h)) / 18.0
        })
        .sum::<f64>()
        * h
}

/// `E[g(W2)]` where `g` vanishes once the direct link alone succeeds.
fn over_w2(s: &Scenario, n: usize, g: impl Fn(f64) -> f64) -> f64 {
    let a = s.rate_bu2();
    match z_threshold(0.0, s.gamma_u2(), |w| direct(w, s)) {
        Some(w_max) => w_max * panels(n, |t| {
            let w = t * w_max;
            a * (-a * w).exp() * g(w)
        }),
        None => panels(n, |u| g(-u.ln() / a)),
    }
}

/// AF outage for one exponential port: integrate `P(Z < z*(w2, x))` over
/// `W2` and `X`.
fn af_brute(s: &Scenario, n: usize) -> f64 {
    let (b, c) = (s.rate_bf(), s.rate_fu2());
    let (rho_b, rho_f, beta, g) = (s.rho_b(), s.rho_f(), s.beta_b(), s.gamma_u2());
    over_w2(s, n, |w2| {
        let base = direct(w2, s);
        panels(n, |ux| {
            let x = -ux.ln() / b;
            let relay = |z: f64| x * z * (1.0 - beta) * rho_b * rho_f / (x * z * beta * rho_b * rho_f + x * rho_b + z * rho_f + 1.0);
            match z_threshold(base, g, relay) {
                Some(z) => -(-c * z).exp_m1(),
                None => 1.0,
            }
        })
    })
}

/// DF outage for one exponential port, conditioned on the relay decoding x2.
fn df_brute(s: &Scenario, n: usize) -> f64 {
    let (b, c) = (s.rate_bf(), s.rate_fu2());
    let (rho_b, rho_f, beta_b, beta_f) = (s.rho_b(), s.rho_f(), s.beta_b(), s.beta_f());
    let (g1, g2) = (s.gamma_u1(), s.gamma_u2());
    // X at which the relay's SINR for x2 reaches g2
    let x_dec = z_threshold(0.0, g2, |x| x * (1.0 - beta_b) * rho_b / (x * beta_b * rho_b + 1.0)).unwrap();
    // the relayed SINR switches form where the relay also decodes x1; the
    // inner rule is split there so the jump falls on a cell edge
    let u_split = if beta_b == 0.0 { 0.0 } else { (-b * (g1 / (beta_b * rho_b) - x_dec).max(0.0)).exp() };
    over_w2(s, n, |w2| {
        let base = direct(w2, s);
        let p_out = |ux: f64| {
            let x = x_dec - ux.ln() / b;
            let z = if x * beta_b * rho_b >= g1 {
                z_threshold(base, g2, |z| z * rho_f * (1.0 - beta_f) / (z * beta_f * rho_f + 1.0))
            } else {
                z_threshold(base, g2, |z| z * rho_f)
            };
            match z {
                Some(z) => -(-c * z).exp_m1(),
                None => 1.0,
            }
        };
        u_split * panels(n, |t| p_out(t * u_split)) + (1.0 - u_split) * panels(n, |t| p_out(u_split + t * (1.0 - u_split)))
    })
}

#[test]
fn single_port_af_matches_brute_force() {
    for snr in [5.0, 10.0, 15.0] {
        let s = desk(snr, 0.1);
        let r = op_af(&s, &single_port(&s), &QuadratureSpec::default()).unwrap();
        let want = af_brute(&s, 400);
        assert!((r.q - want).abs() < 5e-6, "snr {snr}: {} vs {want}", r.q);
    }
}

#[test]
fn single_port_df_matches_brute_force() {
    for (snr, beta_f) in [(0.0, 0.1), (5.0, 0.1), (10.0, 0.3), (20.0, 0.3), (10.0, 0.26)] {
        let s = desk(snr, beta_f);
        let r = op_df(&s, &single_port(&s), &QuadratureSpec::default()).unwrap();
        let want = df_brute(&s, 400);
        assert!((r.q - want).abs() < 5e-6, "snr {snr} beta_f {beta_f}: {} vs {want}", r.q);
    }
}

#[test]
fn mid_branch_af_matches_brute_force() {
    // 1/(1+gamma) <= beta_b < 2/(2+gamma): direct link alone can never succeed
    let s = Scenario::new(ScenarioParams {
        beta_b: 0.3,
        ..Default::default()
    })
    .unwrap()
    .with_snr_db(20.0)
    .unwrap();
    let r = op_af(&s, &single_port(&s), &QuadratureSpec::default()).unwrap();
    let want = af_brute(&s, 400);
    assert!((r.q - want).abs() < 5e-6, "{} vs {want}", r.q);
}

#[test]
fn single_port_agrees_with_monte_carlo() {
    let model = CorrelationModel::identity(1);
    for (snr, beta_f) in [(5.0, 0.1), (10.0, 0.1), (10.0, 0.3)] {
        let s = desk(snr, beta_f);
        let ch = single_port(&s);
        let af = op_af(&s, &ch, &QuadratureSpec::default()).unwrap().q;
        let df = op_df(&s, &ch, &QuadratureSpec::default()).unwrap().q;
        let (maf, mdf) = estimate_pair(&s, &model, 400_000, 3).unwrap();
        let mdf = mdf.unwrap();
        assert!((af - maf.p_hat).abs() <= (4.0 * maf.std_err).max(1e-3), "af {af} vs {}", maf.p_hat);
        assert!((df - mdf.p_hat).abs() <= (4.0 * mdf.std_err).max(1e-3), "df {df} vs {}", mdf.p_hat);
    }
}

fn light_channel() -> &'static CopulaChannel {
    static CH: OnceLock<CopulaChannel> = OnceLock::new();
    CH.get_or_init(|| {
        let model = Arc::new(CorrelationModel::from_geometry(&FasGeometry::default()).unwrap());
        let spec = MvnSpec {
            sample_budget: 1024,
            randomizations: 4,
            seed: 11,
            ..Default::default()
        };
        let table = Arc::new(CopulaTable::build(&model, &spec).unwrap());
        CopulaChannel::tabulated(model, table, 1.0, spec).unwrap()
    })
}

#[test]
fn mu_cell_matches_direct_calls() {
    let base = desk(15.0, 0.26);
    let pos = [1.4, 0.3, 0.6];
    let cell = mu_cell(&base, pos, light_channel(), &QuadratureSpec::default());
    let s = base.with_far_pos(pos).unwrap();
    let ch = light_channel().with_rate(s.rate_fu2()).unwrap();
    let af = op_af(&s, &ch, &QuadratureSpec::default()).unwrap();
    let df = op_df(&s, &ch, &QuadratureSpec::default()).unwrap();
    assert_eq!((cell.q_af, cell.q_df), (af.q, df.q));
    assert_eq!(cell.mu, select_relaying(af.q, df.q));
    assert!(cell.error.is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn outage_is_a_probability(
        snr in -5.0..45.0f64,
        beta_b in 0.0..0.5f64,
        beta_f in 0.0..0.5f64,
        gamma in 0.1..5.0f64,
        fx in 0.2..1.8f64,
        fz in 0.1..1.5f64,
    ) {
        let s = Scenario::new(ScenarioParams {
            beta_b, beta_f, gamma_u1: gamma, gamma_u2: gamma,
            far_pos: [fx, 0.2, fz],
            ..Default::default()
        }).unwrap().with_snr_db(snr).unwrap();
        let ch = light_channel().with_rate(s.rate_fu2()).unwrap();
        let af = op_af(&s, &ch, &QuadratureSpec::default()).unwrap();
        let df = op_df(&s, &ch, &QuadratureSpec::default()).unwrap();
        prop_assert!((0.0..=1.0).contains(&af.q) && (0.0..=1.0).contains(&df.q));
        prop_assert!(af.err_estimate >= 0.0 && df.err_estimate >= 0.0);
    }

    #[test]
    fn equal_splits_never_favour_af(snr in 0.0..30.0f64, fx in 0.2..1.8f64, fz in 0.1..1.5f64) {
        // with beta_f = beta_b the DF relayed SINR dominates the AF one pointwise
        let s = Scenario::new(ScenarioParams { far_pos: [fx, 0.0, fz], ..Default::default() })
            .unwrap().with_snr_db(snr).unwrap();
        let ch = light_channel().with_rate(s.rate_fu2()).unwrap();
        let af = op_af(&s, &ch, &QuadratureSpec::default()).unwrap();
        let df = op_df(&s, &ch, &QuadratureSpec::default()).unwrap();
        prop_assert!(df.q <= af.q + af.err_estimate + df.err_estimate, "{} > {}", df.q, af.q);
    }
}
