//! Recovery success over an (N, M) grid next to the predicted regime.
//!
//! ```text
//! cargo run --release --example phase_transition -- 100
//! ```

use crystal_pr::bounds::predicted_guarantee;
use crystal_pr::harness::{run_scan, ScanConfig};
use crystal_pr::recover::RecoveryConfig;
use crystal_pr::Field;

fn main() -> crystal_pr::Result<()> {
    let trials = std::env::args().nth(1).and_then(|t| t.parse().ok()).unwrap_or(40);
    let cfg = ScanConfig {
        n_values: vec![8, 10, 12, 16],
        m_min: 1,
        m_max: 64,
        m_above_half: Some(2),
        trials,
        seed: 1,
        // Basins shrink as M approaches N/2.
        recovery: RecoveryConfig { starts: 1000, ..RecoveryConfig::default() },
        ..ScanConfig::default()
    };
    let cells = run_scan(&cfg)?;
    println!("{:>3} {:>2} {:>6}  predicted", "N", "M", "rate");
    for c in &cells {
        let level = predicted_guarantee(c.n, c.m, Field::Real)?.level;
        let bar = "#".repeat((c.rate * 20.0).round() as usize);
        println!("{:>3} {:>2} {:>6.2}  {:<13} {bar}", c.n, c.m, c.rate, level.to_string());
    }
    Ok(())
}
