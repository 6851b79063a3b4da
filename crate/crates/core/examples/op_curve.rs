//! SNR sweep from a config file, printed as CSV.
//!
//! Run: `cargo run --release --example op_curve -- crates/core/configs/quick.toml`

use std::path::PathBuf;

use far_outage::config::RunConfig;
use far_outage::sweep::run_op_curve;

fn main() -> far_outage::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/quick.toml"));
    let cfg = RunConfig::load(&path)?;
    print!("{}", run_op_curve(&cfg)?);
    Ok(())
}
