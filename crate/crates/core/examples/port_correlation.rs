//! Spatial correlation of the relay's fluid-antenna ports.
//!
//! Run: `cargo run --example port_correlation -- 4 4 1.0 1.0`

use far_outage::fas::{port_index, CorrelationModel, FasGeometry};

fn main() -> far_outage::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let num = |i: usize, d: f64| args.get(i).and_then(|a| a.parse().ok()).unwrap_or(d);
    let geom = FasGeometry::new(num(0, 4.0) as usize, num(1, 4.0) as usize, num(2, 1.0), num(3, 1.0))?;
    let model = CorrelationModel::from_geometry(&geom)?;
    let j = model.j_matrix();

    println!("{} x {} ports over {} x {} wavelengths", geom.n1, geom.n2, geom.l1, geom.l2);
    println!("smallest eigenvalue  {:.3e}", model.min_eigenvalue());
    println!("eigenvalue floor hit {}", model.eigen_floor_applied());
    println!("reconstruction error {:.3e}", model.reconstruction_error());

    // correlation of port (1,1) with every port in its row
    let first = port_index(1, 1, geom.n2)?;
    print!("row 1:");
    for c in 1..=geom.n2 {
        print!(" {:+.4}", j[(first - 1, port_index(1, c, geom.n2)? - 1)]);
    }
    println!();
    Ok(())
}
