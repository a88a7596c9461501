//! Train the four fusion maps alone against the dissociation loss on fixed
//! random features and watch the loss fall.
//!
//! The reconstruction target is reachable (an explicit identity path
//! exists), so momentum SGD should drive the loss far below its starting
//! value within a few hundred steps.
//!
//! ```text
//! cargo run --example dissociation_training
//! ```

use gmf_lab::bench::train::train_dissociation_only;
use gmf_lab::gmf::GmfConfig;
use gmf_lab::tensor::SgdConfig;
use gmf_lab::Result;

fn main() -> Result<()> {
    let cfg = GmfConfig::new(vec![16, 16]);
    let sgd = SgdConfig::default();
    println!(
        "dims {:?}, magnification {}, sgd lr={} momentum={} weight_decay={}",
        cfg.dims, cfg.magnification, sgd.lr, sgd.momentum, sgd.weight_decay
    );

    for seed in 1..=3u64 {
        let curve = train_dissociation_only(&cfg, 8, 500, &sgd, seed)?;
        let initial = curve[0];
        let last = *curve.last().unwrap();
        println!("seed {seed}:");
        for step in [0usize, 10, 50, 100, 250, 500] {
            println!("  step {step:>3}: loss {:.6e}", curve[step]);
        }
        println!("  final/initial = {:.3e}", last / initial);
    }
    Ok(())
}
