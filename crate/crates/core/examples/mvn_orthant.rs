//! Multivariate normal CDF against closed forms.

use far_outage::fas::{psd_factorization, CorrelationModel};
use far_outage::mvn::{mvn_cdf, mvn_cdf_constant, MvnSpec};
use nalgebra::DMatrix;

fn main() -> far_outage::Result<()> {
    let spec = MvnSpec::default();
    println!("{:>6} {:>12} {:>12} {:>10}", "rho", "qmc", "exact", "err est");
    for rho in [-0.9f64, -0.5, 0.0, 0.5, 0.9] {
        let m = psd_factorization(&DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]))?;
        let r = mvn_cdf(&m, &[0.0, 0.0], &spec)?;
        let exact = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
        println!("{rho:>6} {:>12.8} {exact:>12.8} {:>10.1e}", r.value, r.err_estimate);
    }
    let r = mvn_cdf_constant(&CorrelationModel::identity(16), 0.0, &spec)?;
    println!("16 independent at 0: {:.6e} (exact {:.6e})", r.value, 0.5f64.powi(16));
    Ok(())
}
