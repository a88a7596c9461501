//! Synthetic multimodal data with known shared and private structure.
//!
//! Each sample draws a shared latent `s` and one private latent `u_j` per
//! modality; the observation is `x_j = M_j [s; u_j] + noise` with frozen
//! random mixing maps. The label is the argmax of a frozen linear readout
//! of the full latent `[s; u_1; ...; u_d]`, so it depends on shared and
//! private factors alike. Because the ground-truth factorization is known,
//! claims such as "the invariant slot captures shared structure" can be
//! checked directly instead of being inferred from benchmark accuracy.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::checkpoint::{load_matrices, save_matrices};
use crate::tensor::{Matrix, SplitMix64};

/// Draw budget per accepted sample before rejection sampling gives up.
const MAX_DRAWS_PER_SAMPLE: usize = 10_000;

/// Generator settings. `pinned()` is the reference configuration used by
/// the stock benchmark runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Modality count d.
    pub modalities: usize,
    /// Shared latent width k_s.
    pub shared_dim: usize,
    /// Private latent widths k_j, one per modality.
    pub specific_dims: Vec<usize>,
    /// Observation widths m_j, one per modality.
    pub observed_dims: Vec<usize>,
    /// Standard deviation of the additive observation noise.
    pub noise: f64,
    pub classes: usize,
    pub samples: usize,
    /// Fraction of each class sent to the training split (taken from the
    /// front of the generation order).
    pub train_fraction: f64,
    /// Minimum top-two logit gap of the label rule; positive values reject
    /// boundary samples and make the task cleanly separable.
    pub label_margin: f64,
    /// Optional prior ratio between the first and last class; classes in
    /// between interpolate geometrically. `None` keeps plain independent
    /// draws.
    pub imbalance: Option<f64>,
}

impl SyntheticSpec {
    pub fn pinned() -> Self {
        SyntheticSpec {
            modalities: 2,
            shared_dim: 8,
            specific_dims: vec![8, 8],
            observed_dims: vec![32, 32],
            noise: 0.1,
            classes: 4,
            samples: 4000,
            train_fraction: 0.7,
            label_margin: 0.0,
            imbalance: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.modalities == 0 {
            return Err(Error::Config("need at least one modality".into()));
        }
        if self.specific_dims.len() != self.modalities
            || self.observed_dims.len() != self.modalities
        {
            return Err(Error::Config(format!(
                "specific_dims and observed_dims must list {} entries, got {} and {}",
                self.modalities,
                self.specific_dims.len(),
                self.observed_dims.len()
            )));
        }
        if self.observed_dims.contains(&0) {
            return Err(Error::Config("observed_dims must be positive".into()));
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return Err(Error::Config(format!(
                "noise must be finite and non-negative, got {}",
                self.noise
            )));
        }
        if self.classes < 2 {
            return Err(Error::Config(format!(
                "need at least two classes, got {}",
                self.classes
            )));
        }
        if self.samples < 2 * self.classes {
            return Err(Error::Config(format!(
                "need at least {} samples for a per-class split, got {}",
                2 * self.classes,
                self.samples
            )));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if !self.label_margin.is_finite() || self.label_margin < 0.0 {
            return Err(Error::Config(format!(
                "label_margin must be finite and non-negative, got {}",
                self.label_margin
            )));
        }
        if let Some(r) = self.imbalance {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::Config(format!(
                    "imbalance must be positive and finite, got {r}"
                )));
            }
        }
        Ok(())
    }

    /// Width of the full latent `[s; u_1; ...; u_d]`.
    pub fn latent_dim(&self) -> usize {
        self.shared_dim + self.specific_dims.iter().sum::<usize>()
    }
}

/// A generated dataset plus the ground truth that produced it.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub spec: SyntheticSpec,
    pub seed: u64,
    /// Per-modality observations, each `samples x m_j`.
    pub features: Vec<Matrix>,
    pub labels: Vec<usize>,
    /// Row indices of the training split, grouped by class in generation
    /// order.
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    /// Ground-truth shared latents, `samples x k_s`.
    pub shared_latent: Matrix,
    /// Ground-truth private latents, `samples x k_j` per modality.
    pub specific_latents: Vec<Matrix>,
    /// Frozen label readout, `classes x latent_dim`.
    pub rule: Matrix,
    /// Frozen mixing maps, `m_j x (k_s + k_j)` per modality.
    pub mixing: Vec<Matrix>,
}

impl Dataset {
    /// Gathers the listed rows from every modality plus their labels.
    pub fn gather(&self, idx: &[usize]) -> (Vec<Matrix>, Vec<usize>) {
        let xs = self.features.iter().map(|f| f.gather_rows(idx)).collect();
        let ys = idx.iter().map(|&i| self.labels[i]).collect();
        (xs, ys)
    }

    pub fn train(&self) -> (Vec<Matrix>, Vec<usize>) {
        self.gather(&self.train_idx)
    }

    pub fn test(&self) -> (Vec<Matrix>, Vec<usize>) {
        self.gather(&self.test_idx)
    }
}

/// Per-class quotas proportional to a geometric prior with the given
/// first-to-last ratio, rounded by largest remainder.
fn class_quotas(samples: usize, classes: usize, ratio: f64) -> Vec<usize> {
    let weights: Vec<f64> = (0..classes)
        .map(|c| {
            if classes == 1 {
                1.0
            } else {
                ratio.powf((classes - 1 - c) as f64 / (classes - 1) as f64)
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights
        .iter()
        .map(|w| samples as f64 * w / total)
        .collect();
    let mut quotas: Vec<usize> = exact.iter().map(|&e| e.floor() as usize).collect();
    let mut short = samples - quotas.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..classes).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &c in &order {
        if short == 0 {
            break;
        }
        quotas[c] += 1;
        short -= 1;
    }
    quotas
}

/// Draws the dataset as a pure function of `(spec, seed)`.
pub fn generate_dataset(spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let d = spec.modalities;
    let latent = spec.latent_dim();

    let mut rule_rng = SplitMix64::stream(seed, "synth-rule");
    let rule = Matrix::standard_normal(spec.classes, latent, &mut rule_rng);
    check_rule_blocks(spec, &rule)?;

    let mut mix_rng = SplitMix64::stream(seed, "synth-mixing");
    let mixing: Vec<Matrix> = (0..d)
        .map(|j| {
            let cols = spec.shared_dim + spec.specific_dims[j];
            let scale = 1.0 / (cols.max(1) as f64).sqrt();
            Matrix::standard_normal(spec.observed_dims[j], cols, &mut mix_rng).scale(scale)
        })
        .collect();

    let quotas = spec
        .imbalance
        .map(|r| class_quotas(spec.samples, spec.classes, r));
    if let Some(q) = &quotas {
        if q.contains(&0) {
            return Err(Error::Config(format!(
                "imbalance {} leaves a class without samples at N={}",
                spec.imbalance.unwrap(),
                spec.samples
            )));
        }
    }
    let mut remaining = quotas.clone();

    let mut data_rng = SplitMix64::stream(seed, "synth-data");
    let mut shared_rows = Vec::with_capacity(spec.samples * spec.shared_dim);
    let mut specific_rows: Vec<Vec<f64>> = (0..d)
        .map(|j| Vec::with_capacity(spec.samples * spec.specific_dims[j]))
        .collect();
    let mut feature_rows: Vec<Vec<f64>> = (0..d)
        .map(|j| Vec::with_capacity(spec.samples * spec.observed_dims[j]))
        .collect();
    let mut labels = Vec::with_capacity(spec.samples);

    let mut s = vec![0.0; spec.shared_dim];
    let mut us: Vec<Vec<f64>> = spec.specific_dims.iter().map(|&k| vec![0.0; k]).collect();
    let budget = spec.samples.saturating_mul(MAX_DRAWS_PER_SAMPLE);
    let mut draws = 0usize;
    while labels.len() < spec.samples {
        if draws >= budget {
            return Err(Error::Config(format!(
                "rejection sampling exhausted {budget} draws; margin {} or imbalance {:?} \
                 is unreachable under this rule",
                spec.label_margin, spec.imbalance
            )));
        }
        draws += 1;
        for v in s.iter_mut() {
            *v = data_rng.normal();
        }
        for u in us.iter_mut() {
            for v in u.iter_mut() {
                *v = data_rng.normal();
            }
        }
        let (label, gap) = label_of(&rule, spec, &s, &us);
        if gap < spec.label_margin {
            continue;
        }
        if let Some(rem) = &mut remaining {
            if rem[label] == 0 {
                continue;
            }
            rem[label] -= 1;
        }
        labels.push(label);
        shared_rows.extend_from_slice(&s);
        for (j, u) in us.iter().enumerate() {
            specific_rows[j].extend_from_slice(u);
            let mj = &mixing[j];
            for r in 0..spec.observed_dims[j] {
                let mut v = 0.0;
                for (k, &sv) in s.iter().enumerate() {
                    v += mj.get(r, k) * sv;
                }
                for (k, &uv) in u.iter().enumerate() {
                    v += mj.get(r, spec.shared_dim + k) * uv;
                }
                if spec.noise > 0.0 {
                    v += spec.noise * data_rng.normal();
                }
                feature_rows[j].push(v);
            }
        }
    }

    let mut class_counts = vec![0usize; spec.classes];
    for &y in &labels {
        class_counts[y] += 1;
    }
    if let Some(c) = class_counts.iter().position(|&n| n < 2) {
        return Err(Error::Config(format!(
            "class {c} received {} samples; the rule achieves fewer than {} usable classes \
             at N={}",
            class_counts[c], spec.classes, spec.samples
        )));
    }

    let (train_idx, test_idx) = per_class_split(&labels, spec.classes, spec.train_fraction);

    let features = feature_rows
        .into_iter()
        .enumerate()
        .map(|(j, rows)| Matrix::from_vec(spec.samples, spec.observed_dims[j], rows))
        .collect::<Result<Vec<_>>>()?;
    let specific_latents = specific_rows
        .into_iter()
        .enumerate()
        .map(|(j, rows)| Matrix::from_vec(spec.samples, spec.specific_dims[j], rows))
        .collect::<Result<Vec<_>>>()?;

    Ok(Dataset {
        spec: spec.clone(),
        seed,
        features,
        labels,
        train_idx,
        test_idx,
        shared_latent: Matrix::from_vec(spec.samples, spec.shared_dim, shared_rows)?,
        specific_latents,
        rule,
        mixing,
    })
}

/// Label and top-two logit gap of one latent draw.
fn label_of(rule: &Matrix, spec: &SyntheticSpec, s: &[f64], us: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    let mut second_v = f64::NEG_INFINITY;
    for c in 0..spec.classes {
        let mut v = 0.0;
        let mut col = 0;
        for &sv in s {
            v += rule.get(c, col) * sv;
            col += 1;
        }
        for u in us {
            for &uv in u {
                v += rule.get(c, col) * uv;
                col += 1;
            }
        }
        if v > best_v {
            second_v = best_v;
            best_v = v;
            best = c;
        } else if v > second_v {
            second_v = v;
        }
    }
    if spec.classes == 1 {
        return (0, f64::INFINITY);
    }
    (best, best_v - second_v)
}

/// The label rule must touch every latent block that exists.
fn check_rule_blocks(spec: &SyntheticSpec, rule: &Matrix) -> Result<()> {
    let mut start = 0;
    let check = |name: String, width: usize, start: usize| -> Result<()> {
        if width == 0 {
            return Ok(());
        }
        let mut m: f64 = 0.0;
        for c in 0..rule.rows() {
            for k in start..start + width {
                m = m.max(rule.get(c, k).abs());
            }
        }
        if m == 0.0 {
            return Err(Error::Contract(format!(
                "label rule has an all-zero weight block on {name}"
            )));
        }
        Ok(())
    };
    check("the shared latent".into(), spec.shared_dim, start)?;
    start += spec.shared_dim;
    for (j, &k) in spec.specific_dims.iter().enumerate() {
        check(format!("the private latent of modality {j}"), k, start)?;
        start += k;
    }
    Ok(())
}

/// Sends the first `train_fraction` of each class (in generation order) to
/// the training split and the rest to the test split.
fn per_class_split(
    labels: &[usize],
    classes: usize,
    train_fraction: f64,
) -> (Vec<usize>, Vec<usize>) {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &y) in labels.iter().enumerate() {
        by_class[y].push(i);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for members in by_class {
        let n = members.len();
        if n == 0 {
            continue;
        }
        let cut = ((n as f64 * train_fraction).floor() as usize).clamp(1, n - 1);
        train.extend_from_slice(&members[..cut]);
        test.extend_from_slice(&members[cut..]);
    }
    (train, test)
}

/// Ridge-regularized linear fit of `to` from `from` (with intercept),
/// returning the coefficient of determination R^2 over all output columns.
pub fn linear_predictability(from: &Matrix, to: &Matrix, ridge: f64) -> Result<f64> {
    if from.rows() != to.rows() || from.rows() == 0 {
        return Err(Error::shape(
            "linear_predictability",
            format!("{} paired rows", from.rows()),
            to.shape_str(),
        ));
    }
    if !(ridge >= 0.0) {
        return Err(Error::Config(format!("ridge must be >= 0, got {ridge}")));
    }
    let n = from.rows();
    let p = from.cols() + 1;
    let x = Matrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { from.get(i, j - 1) });
    let xt = x.transpose();
    let mut gram = xt.matmul(&x)?;
    for k in 0..p {
        let v = gram.get(k, k) + ridge;
        gram.set(k, k, v);
    }
    let w = gram.solve(&xt.matmul(to)?)?;
    let pred = x.matmul(&w)?;

    let mut sse = 0.0;
    let mut sst = 0.0;
    for j in 0..to.cols() {
        let mean = (0..n).map(|i| to.get(i, j)).sum::<f64>() / n as f64;
        for i in 0..n {
            sse += (to.get(i, j) - pred.get(i, j)).powi(2);
            sst += (to.get(i, j) - mean).powi(2);
        }
    }
    if sst == 0.0 {
        return Err(Error::Domain(
            "linear_predictability target has zero variance".into(),
        ));
    }
    Ok(1.0 - sse / sst)
}

/// Writes the dataset as a checkpoint container `<name>.ckpt` plus a JSON
/// sidecar `<name>.json` echoing the spec and seed.
pub fn save_dataset(ds: &Dataset, dir: &Path, name: &str) -> Result<()> {
    let mut records: Vec<(String, &Matrix)> = Vec::new();
    for (j, f) in ds.features.iter().enumerate() {
        records.push((format!("features.{j}"), f));
    }
    let labels = Matrix::from_vec(
        1,
        ds.labels.len(),
        ds.labels.iter().map(|&y| y as f64).collect(),
    )?;
    let train = index_row(&ds.train_idx)?;
    let test = index_row(&ds.test_idx)?;
    records.push(("labels".into(), &labels));
    records.push(("train_idx".into(), &train));
    records.push(("test_idx".into(), &test));
    records.push(("latent.shared".into(), &ds.shared_latent));
    for (j, u) in ds.specific_latents.iter().enumerate() {
        records.push((format!("latent.{j}"), u));
    }
    records.push(("rule".into(), &ds.rule));
    for (j, m) in ds.mixing.iter().enumerate() {
        records.push((format!("mixing.{j}"), m));
    }
    let refs: Vec<(&str, &Matrix)> = records.iter().map(|(n, m)| (n.as_str(), *m)).collect();
    save_matrices(&dir.join(format!("{name}.ckpt")), &refs)?;

    let sidecar = serde_json::json!({ "seed": ds.seed, "spec": ds.spec });
    let text = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::Contract(format!("sidecar serialization failed: {e}")))?;
    std::fs::write(dir.join(format!("{name}.json")), text)?;
    Ok(())
}

/// Reads a dataset written by `save_dataset`.
pub fn load_dataset(dir: &Path, name: &str) -> Result<Dataset> {
    let sidecar: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(
        dir.join(format!("{name}.json")),
    )?)
    .map_err(|e| Error::Contract(format!("dataset sidecar is not valid JSON: {e}")))?;
    let spec: SyntheticSpec = serde_json::from_value(sidecar["spec"].clone())
        .map_err(|e| Error::Contract(format!("dataset sidecar spec is malformed: {e}")))?;
    let seed = sidecar["seed"]
        .as_u64()
        .ok_or_else(|| Error::Contract("dataset sidecar lacks a seed".into()))?;
    spec.validate()?;

    let mut by_name = load_matrices(&dir.join(format!("{name}.ckpt")))?;
    let mut take = |key: String| -> Result<Matrix> {
        let pos = by_name
            .iter()
            .position(|(n, _)| *n == key)
            .ok_or_else(|| Error::Contract(format!("dataset container lacks record {key}")))?;
        Ok(by_name.remove(pos).1)
    };

    let features = (0..spec.modalities)
        .map(|j| take(format!("features.{j}")))
        .collect::<Result<Vec<_>>>()?;
    let labels_row = take("labels".into())?;
    let labels: Vec<usize> = labels_row.data().iter().map(|&v| v as usize).collect();
    let train_idx = row_to_indices(&take("train_idx".into())?);
    let test_idx = row_to_indices(&take("test_idx".into())?);
    let shared_latent = take("latent.shared".into())?;
    let specific_latents = (0..spec.modalities)
        .map(|j| take(format!("latent.{j}")))
        .collect::<Result<Vec<_>>>()?;
    let rule = take("rule".into())?;
    let mixing = (0..spec.modalities)
        .map(|j| take(format!("mixing.{j}")))
        .collect::<Result<Vec<_>>>()?;

    for (j, f) in features.iter().enumerate() {
        if f.rows() != spec.samples || f.cols() != spec.observed_dims[j] {
            return Err(Error::Contract(format!(
                "cached modality {j} is {}, expected {}x{}",
                f.shape_str(),
                spec.samples,
                spec.observed_dims[j]
            )));
        }
    }
    if labels.len() != spec.samples {
        return Err(Error::Contract(format!(
            "cached labels count {} does not match spec samples {}",
            labels.len(),
            spec.samples
        )));
    }

    Ok(Dataset {
        spec,
        seed,
        features,
        labels,
        train_idx,
        test_idx,
        shared_latent,
        specific_latents,
        rule,
        mixing,
    })
}

fn index_row(idx: &[usize]) -> Result<Matrix> {
    Matrix::from_vec(1, idx.len(), idx.iter().map(|&i| i as f64).collect())
}

fn row_to_indices(m: &Matrix) -> Vec<usize> {
    m.data().iter().map(|&v| v as usize).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::mutual_information;
    use crate::entropy::rank::numerical_rank;

    #[test]
    fn pinned_spec_generates_consistent_shapes_and_splits() {
        let spec = SyntheticSpec::pinned();
        let ds = generate_dataset(&spec, 7).unwrap();
        assert_eq!(ds.features.len(), 2);
        for f in &ds.features {
            assert_eq!(f.shape(), (4000, 32));
            assert!(f.all_finite());
        }
        assert!(ds.labels.iter().all(|&y| y < 4));

        // Splits are disjoint and cover every row.
        let mut seen = vec![0u8; 4000];
        for &i in ds.train_idx.iter().chain(ds.test_idx.iter()) {
            seen[i] += 1;
        }
        assert!(seen.iter().all(|&c| c == 1));

        // Within each class the training rows precede the test rows in
        // generation order and take the first 70%.
        for c in 0..4 {
            let tr: Vec<usize> = ds.train_idx.iter().cloned().filter(|&i| ds.labels[i] == c).collect();
            let te: Vec<usize> = ds.test_idx.iter().cloned().filter(|&i| ds.labels[i] == c).collect();
            let n = tr.len() + te.len();
            assert_eq!(tr.len(), (n as f64 * 0.7).floor() as usize);
            assert!(tr.iter().max().unwrap() < te.iter().min().unwrap());
        }
    }

    #[test]
    fn generation_is_bitwise_deterministic() {
        let spec = SyntheticSpec::pinned();
        let a = generate_dataset(&spec, 11).unwrap();
        let b = generate_dataset(&spec, 11).unwrap();
        for (fa, fb) in a.features.iter().zip(b.features.iter()) {
            for (u, v) in fa.data().iter().zip(fb.data().iter()) {
                assert_eq!(u.to_bits(), v.to_bits());
            }
        }
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.train_idx, b.train_idx);
    }

    #[test]
    fn noiseless_shared_only_modalities_are_linearly_predictable() {
        let mut spec = SyntheticSpec::pinned();
        spec.noise = 0.0;
        spec.specific_dims = vec![0, 0];
        spec.samples = 400;
        let ds = generate_dataset(&spec, 3).unwrap();

        // Both modalities are exact linear images of the same 8-dim latent,
        // so stacking them adds no rank.
        let stacked = Matrix::from_fn(400, 64, |i, j| {
            if j < 32 {
                ds.features[0].get(i, j)
            } else {
                ds.features[1].get(i, j - 32)
            }
        });
        assert_eq!(numerical_rank(&stacked), 8);

        let r2 = linear_predictability(&ds.features[0], &ds.features[1], 1e-8).unwrap();
        assert!(r2 > 0.999, "cross-modal R^2 was {r2}");
    }

    #[test]
    fn without_shared_structure_cross_modal_information_vanishes() {
        let mut spec = SyntheticSpec::pinned();
        spec.shared_dim = 0;
        spec.samples = 10000;
        let ds = generate_dataset(&spec, 5).unwrap();
        let col = |m: &Matrix, j: usize| (0..m.rows()).map(|i| m.get(i, j)).collect::<Vec<_>>();
        let a = col(&ds.features[0], 0);
        let b = col(&ds.features[1], 0);
        let mi_indep = mutual_information(&a, &b, 6).unwrap();
        assert!(mi_indep < 0.02, "independent modalities gave MI {mi_indep}");

        // Control: a single noiseless shared latent makes the same
        // coordinates deterministic functions of each other.
        let mut spec = SyntheticSpec::pinned();
        spec.shared_dim = 1;
        spec.specific_dims = vec![0, 0];
        spec.noise = 0.0;
        spec.classes = 2;
        spec.samples = 10000;
        let shared = generate_dataset(&spec, 5).unwrap();
        let a = col(&shared.features[0], 0);
        let b = col(&shared.features[1], 0);
        let mi_shared = mutual_information(&a, &b, 6).unwrap();
        assert!(
            mi_shared > 0.5,
            "fully shared coordinates should carry high information, got {mi_shared}"
        );
    }

    #[test]
    fn labels_match_the_rule_and_respect_the_margin() {
        let mut spec = SyntheticSpec::pinned();
        spec.samples = 300;
        spec.label_margin = 0.8;
        let ds = generate_dataset(&spec, 9).unwrap();
        for i in 0..300 {
            let s: Vec<f64> = (0..8).map(|k| ds.shared_latent.get(i, k)).collect();
            let us: Vec<Vec<f64>> = (0..2)
                .map(|j| (0..8).map(|k| ds.specific_latents[j].get(i, k)).collect())
                .collect();
            let (label, gap) = label_of(&ds.rule, &spec, &s, &us);
            assert_eq!(label, ds.labels[i]);
            assert!(gap >= 0.8);
        }
    }

    #[test]
    fn imbalance_quotas_are_exact() {
        assert_eq!(class_quotas(400, 2, 3.0), vec![300, 100]);
        assert_eq!(class_quotas(100, 4, 1.0), vec![25, 25, 25, 25]);

        let mut spec = SyntheticSpec::pinned();
        spec.classes = 2;
        spec.samples = 400;
        spec.imbalance = Some(3.0);
        let ds = generate_dataset(&spec, 13).unwrap();
        let ones = ds.labels.iter().filter(|&&y| y == 1).count();
        assert_eq!(ones, 100);
    }

    #[test]
    fn degenerate_specs_are_rejected() {
        let mut spec = SyntheticSpec::pinned();
        spec.shared_dim = 0;
        spec.specific_dims = vec![0, 0];
        // No latent varies, so only one label is achievable.
        assert!(generate_dataset(&spec, 1).is_err());

        let mut spec = SyntheticSpec::pinned();
        spec.specific_dims = vec![8];
        assert!(spec.validate().is_err());

        let mut spec = SyntheticSpec::pinned();
        spec.train_fraction = 1.0;
        assert!(spec.validate().is_err());

        let mut spec = SyntheticSpec::pinned();
        spec.noise = -0.1;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn cache_roundtrip_is_bit_exact() {
        let mut spec = SyntheticSpec::pinned();
        spec.samples = 120;
        let ds = generate_dataset(&spec, 21).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path(), "cache-test").unwrap();
        let back = load_dataset(dir.path(), "cache-test").unwrap();
        assert_eq!(back.seed, 21);
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.train_idx, ds.train_idx);
        assert_eq!(back.test_idx, ds.test_idx);
        for (fa, fb) in ds.features.iter().zip(back.features.iter()) {
            for (u, v) in fa.data().iter().zip(fb.data().iter()) {
                assert_eq!(u.to_bits(), v.to_bits());
            }
        }
        for (u, v) in ds.rule.data().iter().zip(back.rule.data().iter()) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
    }
}
