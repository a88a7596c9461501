//! Dissolve / concentrate / reconstruct fusion with a gradient-scoped
//! reconstruction loss.
//!
//! For d modalities, the j-th carrying a feature vector of length `l_j`:
//!
//! * dissolve: an affine map lifts `l_j` to `n * l_j` (`n` is the
//!   magnification factor);
//! * split: the first `b_j = floor(fraction * n * l_j)` dissolved entries are
//!   concentrated into a shared-width invariant code of length
//!   `l* = min_j l_j`, the remaining `n*l_j - b_j` into a specific code of
//!   length `l_j`;
//! * route: the fused vector for modality j is
//!   `Z^(j) = [invariant of modality (j+1) mod d ; specific of modality j]`,
//!   so each modality donates its invariant half to its cyclic neighbour;
//! * reconstruct: an affine map takes `Z^(j)` back to length `l_j` and a mean
//!   squared error against the original features, summed over modalities,
//!   gives the dissociation loss.
//!
//! The loss branch reads its inputs through gradient barriers: when
//! `barrier_enabled` is set, the dissociation loss cannot push gradients into
//! whatever produced the features (a trainable extractor, say), while the
//! fused `Z^(j)` handed downstream stays fully differentiable. All four map
//! families still receive dissociation gradients either way.

use crate::error::{Error, Result};
use crate::tensor::{Matrix, NodeId, ParamId, ParamSet, SplitMix64, Tape};

/// Static description of a fusion block.
#[derive(Debug, Clone, PartialEq)]
pub struct GmfConfig {
    /// Feature length per modality; the number of modalities is `dims.len()`.
    pub dims: Vec<usize>,
    /// Magnification factor `n >= 2` used by the dissolving map.
    pub magnification: usize,
    /// Fraction of the dissolved length concentrated into the invariant code,
    /// strictly between 0 and 1.
    pub boundary_fraction: f64,
    /// Weight of the dissociation loss when combined with a task loss.
    pub lambda: f64,
    /// Whether the dissociation loss is gradient-scoped away from the inputs.
    pub barrier_enabled: bool,
}

impl GmfConfig {
    /// Standard settings: magnification 4, boundary at half the dissolved
    /// length, dissociation weight 1, barrier on.
    pub fn new(dims: Vec<usize>) -> Self {
        GmfConfig {
            dims,
            magnification: 4,
            boundary_fraction: 0.5,
            lambda: 1.0,
            barrier_enabled: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.len() < 2 {
            return Err(Error::Config(format!(
                "fusion needs at least 2 modalities, got {}",
                self.dims.len()
            )));
        }
        if self.dims.iter().any(|&l| l == 0) {
            return Err(Error::Config("modality feature lengths must be positive".into()));
        }
        if self.magnification < 2 {
            return Err(Error::Config(format!(
                "magnification must be at least 2, got {}",
                self.magnification
            )));
        }
        if !(self.boundary_fraction > 0.0 && self.boundary_fraction < 1.0) {
            return Err(Error::Config(format!(
                "boundary fraction must lie strictly inside (0, 1), got {}",
                self.boundary_fraction
            )));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::Config(format!(
                "dissociation weight must be non-negative, got {}",
                self.lambda
            )));
        }
        for (j, &l) in self.dims.iter().enumerate() {
            let b = self.boundary(j);
            let nl = self.magnification * l;
            if b == 0 || b >= nl {
                return Err(Error::Config(format!(
                    "modality {j}: boundary {b} leaves an empty band of the dissolved length {nl}"
                )));
            }
        }
        Ok(())
    }

    pub fn modalities(&self) -> usize {
        self.dims.len()
    }

    /// Dissolved length `n * l_j`.
    pub fn dissolved_len(&self, j: usize) -> usize {
        self.magnification * self.dims[j]
    }

    /// Split point `b_j = floor(fraction * n * l_j)` inside the dissolved
    /// vector: entries below it feed the invariant code, the rest the
    /// specific code.
    pub fn boundary(&self, j: usize) -> usize {
        (self.boundary_fraction * self.dissolved_len(j) as f64).floor() as usize
    }

    /// Shared invariant width `l* = min_j l_j`.
    pub fn invariant_len(&self) -> usize {
        *self.dims.iter().min().expect("validated non-empty")
    }

    /// Fused length for modality j: `l* + l_j`.
    pub fn fused_len(&self, j: usize) -> usize {
        self.invariant_len() + self.dims[j]
    }

    /// Exact learnable-scalar count: for every modality, the four affine maps
    /// including their biases.
    pub fn param_count(&self) -> u64 {
        let ls = self.invariant_len() as u64;
        let mut total = 0u64;
        for (j, &l) in self.dims.iter().enumerate() {
            let l = l as u64;
            let nl = self.dissolved_len(j) as u64;
            let b = self.boundary(j) as u64;
            total += nl * l + nl; // dissolve
            total += ls * b + ls; // concentrate, invariant band
            total += l * (nl - b) + l; // concentrate, specific band
            total += l * (l + ls) + l; // reconstruct
        }
        total
    }

    /// Multiply-accumulate cost of one fused pass for a single sample,
    /// counted as 2 flops per weight element, biases excluded.
    pub fn flops_estimate(&self) -> f64 {
        let ls = self.invariant_len() as f64;
        let mut weights = 0.0;
        for (j, &l) in self.dims.iter().enumerate() {
            let l = l as f64;
            let nl = self.dissolved_len(j) as f64;
            let b = self.boundary(j) as f64;
            weights += nl * l + ls * b + l * (nl - b) + l * (l + ls);
        }
        2.0 * weights
    }
}

/// Parameter handles for one modality's four affine maps.
#[derive(Debug, Clone, Copy)]
pub struct ModalityMaps {
    pub dis_w: ParamId,
    pub dis_b: ParamId,
    pub cinv_w: ParamId,
    pub cinv_b: ParamId,
    pub cspec_w: ParamId,
    pub cspec_b: ParamId,
    pub recon_w: ParamId,
    pub recon_b: ParamId,
}

/// Handles into a `ParamSet` for a whole fusion block.
///
/// Canonical parameter names are `P_dis.<j>`, `P_cinv.<j>`, `P_cspec.<j>`,
/// `P_recon.<j>` with a `.bias` suffix for the bias rows, `j` counted from 0.
/// Checkpoints written from the owning set use exactly these names.
#[derive(Debug, Clone)]
pub struct GmfParams {
    pub maps: Vec<ModalityMaps>,
}

impl GmfParams {
    /// Register freshly initialized maps into `params`. Weights and biases
    /// draw uniformly from +-1/sqrt(fan_in) off the given stream, in
    /// modality order, weight before bias, dissolve / concentrate-invariant /
    /// concentrate-specific / reconstruct.
    pub fn init(params: &mut ParamSet, cfg: &GmfConfig, rng: &mut SplitMix64) -> Result<Self> {
        cfg.validate()?;
        let ls = cfg.invariant_len();
        let mut maps = Vec::with_capacity(cfg.modalities());
        for (j, &l) in cfg.dims.iter().enumerate() {
            let nl = cfg.dissolved_len(j);
            let b = cfg.boundary(j);
            let dis_w = params.insert_linear_weight(format!("P_dis.{j}"), nl, l, rng)?;
            let dis_b = params.insert_bias(format!("P_dis.{j}.bias"), nl, l, rng)?;
            let cinv_w = params.insert_linear_weight(format!("P_cinv.{j}"), ls, b, rng)?;
            let cinv_b = params.insert_bias(format!("P_cinv.{j}.bias"), ls, b, rng)?;
            let cspec_w =
                params.insert_linear_weight(format!("P_cspec.{j}"), l, nl - b, rng)?;
            let cspec_b = params.insert_bias(format!("P_cspec.{j}.bias"), l, nl - b, rng)?;
            let recon_w =
                params.insert_linear_weight(format!("P_recon.{j}"), l, l + ls, rng)?;
            let recon_b = params.insert_bias(format!("P_recon.{j}.bias"), l, l + ls, rng)?;
            maps.push(ModalityMaps {
                dis_w,
                dis_b,
                cinv_w,
                cinv_b,
                cspec_w,
                cspec_b,
                recon_w,
                recon_b,
            });
        }
        Ok(GmfParams { maps })
    }

    /// Exact-identity construction: the dissolving map copies the input into
    /// the head of the specific band, the specific concentrator reads it back
    /// unchanged, and the reconstructor selects the specific half of the
    /// fused vector. Reconstruction then reproduces any input exactly and the
    /// dissociation loss is zero in exact arithmetic (and in f64, since only
    /// 0/1 weights and zero biases are involved).
    pub fn init_identity_path(params: &mut ParamSet, cfg: &GmfConfig) -> Result<Self> {
        cfg.validate()?;
        let ls = cfg.invariant_len();
        let mut maps = Vec::with_capacity(cfg.modalities());
        for (j, &l) in cfg.dims.iter().enumerate() {
            let nl = cfg.dissolved_len(j);
            let b = cfg.boundary(j);
            if nl - b < l {
                return Err(Error::Config(format!(
                    "modality {j}: specific band {} too narrow to carry a copy of {l} features",
                    nl - b
                )));
            }
            // Rows b..b+l of the dissolving map form an identity block.
            let dis = Matrix::from_fn(nl, l, |r, c| if r >= b && r - b == c { 1.0 } else { 0.0 });
            // The specific concentrator selects those l entries back out.
            let cspec = Matrix::from_fn(l, nl - b, |r, c| if r == c { 1.0 } else { 0.0 });
            // The reconstructor drops the invariant half and keeps the rest.
            let recon = Matrix::from_fn(l, l + ls, |r, c| if c >= ls && c - ls == r { 1.0 } else { 0.0 });

            let dis_w = params.insert(format!("P_dis.{j}"), dis)?;
            let dis_b = params.insert(format!("P_dis.{j}.bias"), Matrix::zeros(1, nl))?;
            let cinv_w = params.insert(format!("P_cinv.{j}"), Matrix::zeros(ls, b))?;
            let cinv_b = params.insert(format!("P_cinv.{j}.bias"), Matrix::zeros(1, ls))?;
            let cspec_w = params.insert(format!("P_cspec.{j}"), cspec)?;
            let cspec_b = params.insert(format!("P_cspec.{j}.bias"), Matrix::zeros(1, l))?;
            let recon_w = params.insert(format!("P_recon.{j}"), recon)?;
            let recon_b = params.insert(format!("P_recon.{j}.bias"), Matrix::zeros(1, l))?;
            maps.push(ModalityMaps {
                dis_w,
                dis_b,
                cinv_w,
                cinv_b,
                cspec_w,
                cspec_b,
                recon_w,
                recon_b,
            });
        }
        Ok(GmfParams { maps })
    }

    pub fn ids(&self) -> Vec<ParamId> {
        self.maps
            .iter()
            .flat_map(|m| {
                [
                    m.dis_w, m.dis_b, m.cinv_w, m.cinv_b, m.cspec_w, m.cspec_b, m.recon_w,
                    m.recon_b,
                ]
            })
            .collect()
    }
}

/// Everything a fused forward pass produces, as tape handles.
///
/// `z[j]` is the routed fusion result `[inv of (j+1) mod d ; spec of j]`
/// delivered downstream; `recon[j]` and `loss_targets[j]` belong to the
/// gradient-scoped loss branch (their values are bit-identical to what the
/// unscoped graph would produce).
#[derive(Debug, Clone)]
pub struct FusionOutput {
    pub z: Vec<NodeId>,
    pub z_inv: Vec<NodeId>,
    pub z_spec: Vec<NodeId>,
    pub recon: Vec<NodeId>,
    /// Feature nodes the caller passed in, recorded for contract checks.
    pub originals: Vec<NodeId>,
    /// Barrier-wrapped originals used as reconstruction targets.
    pub loss_targets: Vec<NodeId>,
}

/// Dissolve one modality and concentrate the two bands.
///
/// `x` is batch x `l_j`. Returns `(invariant, specific)` with widths
/// `l*` and `l_j`.
pub fn element_split(
    tape: &mut Tape,
    params: &ParamSet,
    gmf: &GmfParams,
    cfg: &GmfConfig,
    j: usize,
    x: NodeId,
) -> Result<(NodeId, NodeId)> {
    cfg.validate()?;
    if j >= cfg.modalities() {
        return Err(Error::Contract(format!(
            "modality index {j} out of range for {} modalities",
            cfg.modalities()
        )));
    }
    let l = cfg.dims[j];
    if tape.value(x).cols() != l {
        return Err(Error::shape(
            "element_split",
            format!("batch x {l}"),
            tape.value(x).shape_str(),
        ));
    }
    let m = &gmf.maps[j];
    let nl = cfg.dissolved_len(j);
    let b = cfg.boundary(j);

    let dis_w = tape.param(params, m.dis_w);
    let dis_b = tape.param(params, m.dis_b);
    let dissolved = tape.linear(x, dis_w, dis_b)?;

    let head = tape.slice_cols(dissolved, 0, b)?;
    let tail = tape.slice_cols(dissolved, b, nl - b)?;

    let cinv_w = tape.param(params, m.cinv_w);
    let cinv_b = tape.param(params, m.cinv_b);
    let invariant = tape.linear(head, cinv_w, cinv_b)?;

    let cspec_w = tape.param(params, m.cspec_w);
    let cspec_b = tape.param(params, m.cspec_b);
    let specific = tape.linear(tail, cspec_w, cspec_b)?;

    Ok((invariant, specific))
}

/// Full fused pass over all modalities.
///
/// `features[j]` must be batch x `l_j`, one node per modality, all sharing
/// the batch size. The reconstruction branch re-runs the split on
/// barrier-wrapped copies of the features so the dissociation loss cannot
/// reach anything upstream of them when `cfg.barrier_enabled` holds; forward
/// values are unaffected.
pub fn gmf_forward(
    tape: &mut Tape,
    params: &ParamSet,
    gmf: &GmfParams,
    cfg: &GmfConfig,
    features: &[NodeId],
) -> Result<FusionOutput> {
    cfg.validate()?;
    let d = cfg.modalities();
    if features.len() != d {
        return Err(Error::Contract(format!(
            "expected {d} feature nodes, got {}",
            features.len()
        )));
    }
    let batch = tape.value(features[0]).rows();
    for (j, &f) in features.iter().enumerate() {
        let (r, c) = tape.value(f).shape();
        if r != batch || c != cfg.dims[j] {
            return Err(Error::shape(
                "gmf_forward",
                format!("{batch}x{} for modality {j}", cfg.dims[j]),
                tape.value(f).shape_str(),
            ));
        }
    }

    // Downstream branch: fully differentiable w.r.t. the features.
    let mut inv = Vec::with_capacity(d);
    let mut spec = Vec::with_capacity(d);
    for j in 0..d {
        let (i, s) = element_split(tape, params, gmf, cfg, j, features[j])?;
        inv.push(i);
        spec.push(s);
    }
    let mut z = Vec::with_capacity(d);
    for j in 0..d {
        z.push(tape.concat_cols(&[inv[(j + 1) % d], spec[j]])?);
    }

    // Loss branch: identical arithmetic on barrier-wrapped features.
    let blocks = cfg.barrier_enabled;
    let targets: Vec<NodeId> = features.iter().map(|&f| tape.barrier(f, blocks)).collect();
    let mut binv = Vec::with_capacity(d);
    let mut bspec = Vec::with_capacity(d);
    for j in 0..d {
        let (i, s) = element_split(tape, params, gmf, cfg, j, targets[j])?;
        binv.push(i);
        bspec.push(s);
    }
    let mut recon = Vec::with_capacity(d);
    for j in 0..d {
        let zb = tape.concat_cols(&[binv[(j + 1) % d], bspec[j]])?;
        let m = &gmf.maps[j];
        let rw = tape.param(params, m.recon_w);
        let rb = tape.param(params, m.recon_b);
        recon.push(tape.linear(zb, rw, rb)?);
    }

    Ok(FusionOutput {
        z,
        z_inv: inv,
        z_spec: spec,
        recon,
        originals: features.to_vec(),
        loss_targets: targets,
    })
}

/// Dissociation loss: sum over modalities of the mean squared error between
/// reconstruction and original features. `originals` must be the same nodes
/// that were passed to `gmf_forward`.
pub fn reconstruction_loss(
    tape: &mut Tape,
    output: &FusionOutput,
    originals: &[NodeId],
) -> Result<NodeId> {
    if originals != output.originals.as_slice() {
        return Err(Error::Contract(
            "reconstruction_loss must receive the exact feature nodes the forward pass consumed"
                .into(),
        ));
    }
    let mut total: Option<NodeId> = None;
    for (j, &r) in output.recon.iter().enumerate() {
        // Targets go through the same barrier as the reconstruction branch,
        // so a blocked loss cannot leak upstream through the target slot.
        let term = tape.mse_loss(r, output.loss_targets[j])?;
        total = Some(match total {
            Some(t) => tape.add(t, term)?,
            None => term,
        });
    }
    total.ok_or_else(|| Error::Contract("reconstruction_loss over zero modalities".into()))
}
