//! Compare a direct linear probe against probes that first pass through a
//! bottleneck of floor(n * l) units, for several magnifications n.
//!
//! The composite map's rank is capped by its middle width. With n below 1
//! the cap bites and accuracy must fall; with n at or above 1 the cap is
//! inactive and the trained composite should match the direct probe.
//!
//! ```text
//! cargo run --example updown_mapping
//! ```

use gmf_lab::entropy::mapping::{up_down_experiment, MappingExperimentConfig};
use gmf_lab::Result;

fn main() -> Result<()> {
    let mut cfg = MappingExperimentConfig::new();
    // A hard margin and a long budget let every probe train to its ceiling,
    // so the differences left over are capacity, not optimization.
    cfg.margin = 1.0;
    cfg.epochs = 200;
    cfg.validate()?;

    println!(
        "feature dim {}, {} classes, seeds {:?}",
        cfg.feature_dim, cfg.classes, cfg.seeds
    );
    for &n in &cfg.magnifications {
        println!("  n = {:<4} -> middle width {}", n, cfg.middle_dim(n));
    }

    let report = up_down_experiment(&cfg)?;
    println!("\n{:<14} {:>8} {:>8} {:>8}", "probe", "mean", "min", "max");
    for cell in &report.cells {
        println!(
            "{:<14} {:>8.4} {:>8.4} {:>8.4}",
            cell.label, cell.mean, cell.min, cell.max
        );
    }

    let direct = report.cell("direct").unwrap().mean;
    let half = report.cell("updown n=0.5").unwrap().mean;
    let four = report.cell("updown n=4").unwrap().mean;
    println!("\nn=1/2 loses {:.1} points to the direct probe", (direct - half) * 100.0);
    println!("n=4 sits within {:.2} points of it", (four - direct).abs() * 100.0);
    Ok(())
}
