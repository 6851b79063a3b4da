//! Relay-scheme selection map for three user-2 outage thresholds, drawn as text:
//! `#` where DF wins, `.` where AF wins.
//!
//! Run: `cargo run --release --example mu_map`

use far_outage::config::RunConfig;
use far_outage::sweep::Engine;

fn main() -> far_outage::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/mu_map.toml");
    let mut cfg = RunConfig::load(&path)?;
    cfg.apply_override("mvn.sample_budget=1024")?;
    cfg.apply_override("mvn.randomizations=4")?;

    for gamma in [2.6, 2.8, 3.0] {
        cfg.apply_override(&format!("scenario.gamma_u2={gamma}"))?;
        let engine = Engine::new(cfg.clone())?;
        let cells = engine.mu_map()?;
        println!("gamma = {gamma}");
        for row in cells.chunks(cfg.sweep.nx).rev() {
            let line: String = row.iter().map(|c| if c.mu == 1 { '#' } else { '.' }).collect();
            println!("  {line}");
        }
    }
    Ok(())
}
