//! Ablation of the gradient barrier under missing modalities.
//!
//! Both runs train the fusion model with trainable feature extractors in a
//! regime where the dissociation loss cannot be satisfied inside one
//! modality (narrow specific band) and carries real weight (large lambda).
//! Without the barrier, the dissociation gradients reach the extractors and
//! reshape the features; the damage shows up when a modality is dropped at
//! test time. With the barrier the extractors only ever see task gradients.
//!
//! Runs two full training loops with trainable extractors; takes around ten
//! seconds.
//!
//! ```text
//! cargo run --example missing_modality
//! ```

use gmf_lab::bench::synth::{generate_dataset, SyntheticSpec};
use gmf_lab::bench::train::{
    missing_modality_eval, train_fusion, ExtractorMode, FusionMethod, TrainConfig,
};
use gmf_lab::gmf::GmfConfig;
use gmf_lab::Result;

fn main() -> Result<()> {
    let spec = SyntheticSpec::pinned();
    let seed = 1;
    let dataset = generate_dataset(&spec, seed)?;

    let mut results = Vec::new();
    for barrier in [true, false] {
        let method = if barrier { FusionMethod::Gmf } else { FusionMethod::GmfNoBarrier };
        let mut cfg = TrainConfig::new(method);
        cfg.extractor = ExtractorMode::Trainable;
        cfg.lambda = 32.0;
        cfg.seed = seed;
        let mut gmf_cfg = GmfConfig::new(spec.observed_dims.clone());
        gmf_cfg.boundary_fraction = 0.9375;

        let (model, report) = train_fusion(&dataset, &cfg, Some(gmf_cfg))?;
        if let Some(msg) = &report.diverged {
            println!("barrier={barrier}: diverged: {msg}");
            continue;
        }
        let full = missing_modality_eval(&model, &dataset, None)?;
        let mut dropped = Vec::new();
        for j in 0..spec.modalities {
            dropped.push(missing_modality_eval(&model, &dataset, Some(j))?);
        }
        results.push((barrier, full, dropped, report.final_dis_loss.unwrap()));
    }

    println!("{:<10} {:>10} {:>12} {:>12} {:>12}", "barrier", "full", "drop mod 0", "drop mod 1", "final L_dis");
    for (barrier, full, dropped, dis) in &results {
        println!(
            "{:<10} {:>10.4} {:>12.4} {:>12.4} {:>12.4}",
            barrier, full.accuracy, dropped[0].accuracy, dropped[1].accuracy, dis
        );
    }
    println!();
    println!("The no-barrier run reaches a lower dissociation loss precisely");
    println!("because it is allowed to bend the extractors toward it.");
    Ok(())
}
