//! Train the fusion front-end and the concatenation baseline on the stock
//! synthetic benchmark and compare test accuracy, then look at how much of
//! the shared latent each invariant code retains.
//!
//! Runs two full training loops; takes a few seconds.
//!
//! ```text
//! cargo run --example benchmark_training
//! ```

use gmf_lab::bench::synth::{generate_dataset, linear_predictability, SyntheticSpec};
use gmf_lab::bench::train::{train_fusion, FusionMethod, TrainConfig};
use gmf_lab::gmf::GmfConfig;
use gmf_lab::Result;

fn main() -> Result<()> {
    let spec = SyntheticSpec::pinned();
    let seed = 1;
    let dataset = generate_dataset(&spec, seed)?;
    println!(
        "dataset: {} modalities, {} classes, {} train + {} test samples",
        spec.modalities,
        spec.classes,
        dataset.train_idx.len(),
        dataset.test_idx.len()
    );

    let mut cfg = TrainConfig::new(FusionMethod::Gmf);
    cfg.seed = seed;
    let gmf_cfg = GmfConfig::new(spec.observed_dims.clone());
    let (model, report) = train_fusion(&dataset, &cfg, Some(gmf_cfg))?;
    println!("\nfusion run:");
    for e in report.epochs.iter().step_by(5) {
        println!(
            "  epoch {:>2}: task loss {:.4}  dis loss {:.4}  train acc {:.4}  test acc {:.4}",
            e.epoch,
            e.mean_task_loss,
            e.mean_dis_loss.unwrap_or(f64::NAN),
            e.train_accuracy,
            e.test_accuracy
        );
    }
    println!(
        "  dissociation loss {:.4} -> {:.4}",
        report.initial_dis_loss.unwrap(),
        report.final_dis_loss.unwrap()
    );
    println!("  final test accuracy {:.4}", report.final_test_accuracy);

    let mut base_cfg = TrainConfig::new(FusionMethod::ConcatBaseline);
    base_cfg.seed = seed;
    let (_, base_report) = train_fusion(&dataset, &base_cfg, None)?;
    println!("\nconcat baseline:");
    println!("  final test accuracy {:.4}", base_report.final_test_accuracy);

    // How linearly recoverable is the generator's shared latent from each
    // modality's invariant code? Values near 1 mean the code kept it.
    let (xs, _) = dataset.test();
    let shared = dataset.shared_latent.gather_rows(&dataset.test_idx);
    for j in 0..spec.modalities {
        let codes = model.invariant_codes(&xs, j)?;
        let r2 = linear_predictability(&codes, &shared, 1e-6)?;
        println!("\nR^2(shared latent | invariant code of modality {j}) = {r2:.4}");
    }
    Ok(())
}
