//! Save fusion parameters and a generated dataset to disk, load them back,
//! and verify both roundtrips are bit-exact.
//!
//! ```text
//! cargo run --example checkpoint_roundtrip
//! ```

use gmf_lab::bench::synth::{generate_dataset, load_dataset, save_dataset, SyntheticSpec};
use gmf_lab::gmf::{GmfConfig, GmfParams};
use gmf_lab::tensor::checkpoint::{load_params, save_params};
use gmf_lab::tensor::{ParamSet, SplitMix64};
use gmf_lab::Result;

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("gmf-lab-roundtrip-example");
    std::fs::create_dir_all(&dir)?;

    // Fusion parameters: write, reload into a freshly initialized set with
    // the same names, compare every scalar.
    let cfg = GmfConfig::new(vec![8, 12]);
    let mut params = ParamSet::new();
    let mut rng = SplitMix64::stream(9, "roundtrip-example");
    GmfParams::init(&mut params, &cfg, &mut rng)?;
    let ckpt = dir.join("fusion.ckpt");
    save_params(&ckpt, &params)?;

    let mut reloaded = ParamSet::new();
    let mut rng2 = SplitMix64::stream(10, "roundtrip-example-other");
    GmfParams::init(&mut reloaded, &cfg, &mut rng2)?;
    load_params(&ckpt, &mut reloaded)?;

    let mut identical = true;
    for (id, p) in params.iter() {
        let q = &reloaded.get(id).value;
        identical &= p.value.data() == q.data();
    }
    println!("fusion params roundtrip bit-exact: {identical}");

    // Dataset: the checkpoint stores features, latents, labels, and the
    // generating spec; the loader verifies shapes against the sidecar.
    let spec = SyntheticSpec::pinned();
    let ds = generate_dataset(&spec, 4)?;
    save_dataset(&ds, &dir, "demo")?;
    let back = load_dataset(&dir, "demo")?;

    let same = ds.labels == back.labels
        && ds.features.len() == back.features.len()
        && ds
            .features
            .iter()
            .zip(&back.features)
            .all(|(a, b)| a.data() == b.data())
        && ds.shared_latent.data() == back.shared_latent.data();
    println!("dataset roundtrip bit-exact:       {same}");

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
