//! Analytic AF and DF outage probabilities for the desk geometry, with the
//! branch each expression took.
//!
//! Run: `cargo run --example outage_point -- 15` (SNR in dB)

use std::sync::Arc;

use far_outage::analytic::{op_af, op_df, scalar_constants, select_relaying};
use far_outage::copula::{CopulaChannel, CopulaTable};
use far_outage::fas::{CorrelationModel, FasGeometry};
use far_outage::mvn::MvnSpec;
use far_outage::quadrature::QuadratureSpec;
use far_outage::scenario::{Scenario, ScenarioParams};

fn main() -> far_outage::Result<()> {
    let snr: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10.0);
    let s = Scenario::new(ScenarioParams::default())?.with_snr_db(snr)?;
    let model = Arc::new(CorrelationModel::from_geometry(&FasGeometry::default())?);
    let spec = MvnSpec {
        sample_budget: 1024,
        randomizations: 4,
        ..MvnSpec::default()
    };
    let table = Arc::new(CopulaTable::build(&model, &spec)?);
    let ch = CopulaChannel::tabulated(model, table, s.rate_fu2(), spec)?;
    let quad = QuadratureSpec::default();

    let k = scalar_constants(&s);
    println!("snr {snr} dB: xi_b {:.3}, C_w2 {:.4e}, D_w1 {:.4e}", k.xi_b, k.c_w2, k.d_w1);
    let af = op_af(&s, &ch, &quad)?;
    let df = op_df(&s, &ch, &quad)?;
    println!("AF  q = {:.6e} +- {:.1e}  [{}]", af.q, af.err_estimate, af.branch.as_str());
    println!("DF  q = {:.6e} +- {:.1e}  [{}]", df.q, df.err_estimate, df.branch.as_str());
    let mu = select_relaying(af.q, df.q);
    println!("relay picks {}", if mu == 1 { "DF" } else { "AF" });
    Ok(())
}
