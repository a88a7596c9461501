//! Walk through the fusion block's geometry: dissolved lengths, the
//! invariant/specific boundary, fused widths, and the exact parameter and
//! FLOP counts for three reference shapes.
//!
//! ```text
//! cargo run --example fusion_shapes
//! ```

use gmf_lab::gmf::{GmfConfig, GmfParams};
use gmf_lab::tensor::{ParamSet, SplitMix64};
use gmf_lab::Result;

fn describe(dims: Vec<usize>) -> Result<()> {
    let cfg = GmfConfig::new(dims);
    cfg.validate()?;
    println!("dims {:?}, magnification {}, boundary fraction {}", cfg.dims, cfg.magnification, cfg.boundary_fraction);
    for j in 0..cfg.modalities() {
        println!(
            "  modality {j}: l={:<5} dissolved={:<6} boundary={:<6} fused={}",
            cfg.dims[j],
            cfg.dissolved_len(j),
            cfg.boundary(j),
            cfg.fused_len(j)
        );
    }
    println!("  invariant width l* = {}", cfg.invariant_len());
    println!("  parameters = {}", cfg.param_count());
    println!("  forward FLOPs ~= {:.4} G", cfg.flops_estimate() / 1e9);

    // The count law is exact: instantiating the parameters and counting
    // scalars gives the same number.
    let mut params = ParamSet::new();
    let mut rng = SplitMix64::stream(1, "shapes-example");
    GmfParams::init(&mut params, &cfg, &mut rng)?;
    println!("  instantiated scalars = {}", params.scalar_count());
    println!();
    Ok(())
}

fn main() -> Result<()> {
    describe(vec![512, 512])?;
    describe(vec![128, 128])?;
    describe(vec![128, 4096])?;
    // Mixed widths with three modalities: the invariant width follows the
    // narrowest modality.
    describe(vec![8, 12, 20])?;
    Ok(())
}
