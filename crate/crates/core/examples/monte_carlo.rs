//! Monte Carlo outage estimates next to the analytic values.
//!
//! Run: `cargo run --release --example monte_carlo -- 20 1000000`

use std::sync::Arc;

use far_outage::analytic::{op_af, op_df};
use far_outage::copula::{CopulaChannel, CopulaTable};
use far_outage::fas::{CorrelationModel, FasGeometry};
use far_outage::montecarlo::estimate_pair;
use far_outage::mvn::MvnSpec;
use far_outage::quadrature::QuadratureSpec;
use far_outage::scenario::{Scenario, ScenarioParams};

fn main() -> far_outage::Result<()> {
    let mut args = std::env::args().skip(1);
    let snr: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(10.0);
    let trials: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(200_000);

    let s = Scenario::new(ScenarioParams::default())?.with_snr_db(snr)?;
    let model = Arc::new(CorrelationModel::from_geometry(&FasGeometry::default())?);
    let spec = MvnSpec {
        sample_budget: 1024,
        randomizations: 4,
        ..MvnSpec::default()
    };
    let table = Arc::new(CopulaTable::build(&model, &spec)?);
    let ch = CopulaChannel::tabulated(model.clone(), table, s.rate_fu2(), spec)?;
    let quad = QuadratureSpec::default();

    let (af, df) = estimate_pair(&s, &model, trials, 7)?;
    println!("AF  analytic {:.5e}  mc {:.5e} +- {:.1e}", op_af(&s, &ch, &quad)?.q, af.p_hat, af.std_err);
    match df {
        Ok(df) => println!(
            "DF  analytic {:.5e}  mc {:.5e} +- {:.1e}  ({} of {} trials accepted)",
            op_df(&s, &ch, &quad)?.q,
            df.p_hat,
            df.std_err,
            df.accepted,
            df.trials
        ),
        Err(e) => println!("DF  {e}"),
    }
    Ok(())
}
