//! Two capacity experiments: a hidden-width sweep on a low-dimensional
//! classification task, and Monte Carlo rank statistics of random
//! floor(n*d) x d matrices.
//!
//! The sweep shows accuracy saturating once the width clears the task's
//! intrinsic dimension. The rank trials show why: random maps that do not
//! shrink the dimension are almost surely full rank, while maps below it
//! can never reach rank d.
//!
//! ```text
//! cargo run --example width_and_rank
//! ```

use gmf_lab::entropy::rank::{rank_trial, RankTrialConfig};
use gmf_lab::entropy::width::{width_sweep, WidthSweepConfig};
use gmf_lab::Result;

fn main() -> Result<()> {
    let cfg = WidthSweepConfig::new();
    cfg.validate()?;
    println!(
        "{} classes, intrinsic dim {}, ambient dim {}, seeds {:?}",
        cfg.classes, cfg.intrinsic_dim, cfg.ambient_dim, cfg.seeds
    );

    let report = width_sweep(&cfg)?;
    println!("\n{:>6} {:>12} {:>12} {:>8}", "width", "train acc", "test acc", "ratio");
    for cell in &report.cells {
        println!(
            "{:>6} {:>12.4} {:>12.4} {:>8.4}",
            cell.width, cell.mean_train, cell.mean_test, cell.generalization_ratio
        );
    }
    match report.plateau_width(0.02) {
        Some(w) => println!("accuracy plateaus from width {w} on"),
        None => println!("no plateau within the swept widths"),
    }

    println!();
    for n in [2.0, 1.0, 0.5] {
        let cfg = RankTrialConfig { d: 8, n, trials: 1000, seed: 5 };
        let r = rank_trial(&cfg)?;
        println!(
            "rank of {}x{} gaussian maps over {} trials: mean {:.3}, full-rank fraction {:.3}, rank-d fraction {:.3}",
            r.rows, r.cols, 1000, r.mean_rank, r.full_rank_fraction, r.rank_d_fraction
        );
    }
    Ok(())
}
