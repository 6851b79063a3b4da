//! Gaussian-copula CDF of the best-port gain next to its empirical CDF.
//!
//! The copula ignores the exact dependence of squared complex Gaussians, so
//! the two curves differ by a few 1e-3 around the median.

use std::sync::Arc;

use far_outage::copula::CopulaChannel;
use far_outage::fas::{CorrelationModel, FasGeometry};
use far_outage::montecarlo::sample_best_port_gains;
use far_outage::mvn::MvnSpec;

fn main() -> far_outage::Result<()> {
    let model = Arc::new(CorrelationModel::from_geometry(&FasGeometry::default())?);
    let spec = MvnSpec {
        sample_budget: 2048,
        randomizations: 6,
        ..MvnSpec::default()
    };
    let ch = CopulaChannel::direct(model.clone(), 1.0, spec)?;
    let n = 200_000;
    let mut z = sample_best_port_gains(&model, 1.0, n, 42);
    z.sort_by(f64::total_cmp);

    println!("{:>10} {:>10} {:>10} {:>10}", "x", "empirical", "copula", "diff");
    for k in 0..10 {
        let x = z[((k as f64 + 0.5) / 10.0 * n as f64) as usize];
        let emp = z.partition_point(|&v| v <= x) as f64 / n as f64;
        let (cop, _) = ch.best_port_cdf(x)?;
        println!("{x:>10.4} {emp:>10.5} {cop:>10.5} {:>+10.5}", emp - cop);
    }
    Ok(())
}
