//! Training harness for the synthetic benchmark: a concatenation baseline
//! against the fusion front-end, with missing-modality evaluation and a
//! cross-modal retrieval analog.

use crate::bench::metrics::{accuracy, argmax_rows, auc};
use crate::bench::synth::Dataset;
use crate::error::{Error, Result};
use crate::gmf::{
    element_split, gmf_forward, reconstruction_loss, FusionOutput, GmfConfig, GmfParams,
};
use crate::tensor::{sgd_step, Matrix, NodeId, ParamId, ParamSet, SgdConfig, SplitMix64, Tape};

/// Loss value beyond which a run is declared diverged.
const DIVERGENCE_LOSS: f64 = 1e12;
/// Parameter magnitude beyond which a run is declared diverged.
const DIVERGENCE_PARAM: f64 = 1e50;

/// How the per-modality features are fused before the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionMethod {
    ConcatBaseline,
    Gmf,
    /// The fusion front-end with the gradient barrier disabled, for
    /// ablation runs.
    GmfNoBarrier,
}

impl FusionMethod {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "concat-baseline" => Ok(FusionMethod::ConcatBaseline),
            "gmf" => Ok(FusionMethod::Gmf),
            "gmf-no-barrier" => Ok(FusionMethod::GmfNoBarrier),
            other => Err(Error::Config(format!(
                "unknown fusion method {other:?}; expected concat-baseline, gmf, or \
                 gmf-no-barrier"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FusionMethod::ConcatBaseline => "concat-baseline",
            FusionMethod::Gmf => "gmf",
            FusionMethod::GmfNoBarrier => "gmf-no-barrier",
        }
    }

    pub fn uses_gmf(&self) -> bool {
        !matches!(self, FusionMethod::ConcatBaseline)
    }
}

/// Whether features reach the fusion stage raw or through a small trainable
/// linear map per modality.
///
/// The trainable map starts at the identity, so training begins from the
/// exact features the frozen mode uses and the run measures what the
/// gradients flowing into the extractor do to them. A random start would
/// instead measure how fast an extractor can be learned from scratch,
/// which is a different question.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractorMode {
    FrozenIdentity,
    Trainable,
}

impl ExtractorMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "frozen-identity" => Ok(ExtractorMode::FrozenIdentity),
            "trainable" => Ok(ExtractorMode::Trainable),
            other => Err(Error::Config(format!(
                "unknown extractor mode {other:?}; expected frozen-identity or trainable"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ExtractorMode::FrozenIdentity => "frozen-identity",
            ExtractorMode::Trainable => "trainable",
        }
    }
}

/// Settings for one training run.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub method: FusionMethod,
    pub extractor: ExtractorMode,
    pub sgd: SgdConfig,
    pub epochs: usize,
    pub batch: usize,
    /// Weight of the dissociation loss in the total objective. Zero leaves
    /// the term out of the graph's differentiated part entirely.
    pub lambda: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(method: FusionMethod) -> Self {
        TrainConfig {
            method,
            extractor: ExtractorMode::FrozenIdentity,
            sgd: SgdConfig::default(),
            epochs: 20,
            batch: 64,
            lambda: 1.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch == 0 {
            return Err(Error::Config("epochs and batch must be positive".into()));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::Config(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        self.sgd.validate()
    }
}

/// Accuracy and loss summary for one epoch.
#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_task_loss: f64,
    /// Mean dissociation loss over the epoch's batches; absent for the
    /// concat baseline.
    pub mean_dis_loss: Option<f64>,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

/// Full record of one training run.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub method: FusionMethod,
    pub extractor: ExtractorMode,
    pub lambda: f64,
    pub seed: u64,
    pub epochs: Vec<EpochStats>,
    /// Total trainable scalars.
    pub parameter_scalars: usize,
    /// Dissociation loss over the whole training split before the first
    /// update and after the last, for fusion methods.
    pub initial_dis_loss: Option<f64>,
    pub final_dis_loss: Option<f64>,
    pub final_train_accuracy: f64,
    pub final_test_accuracy: f64,
    /// Diagnostics when the run blew up; the model is returned as-is at
    /// the step where training stopped.
    pub diverged: Option<String>,
}

#[derive(Debug)]
struct Arch {
    method: FusionMethod,
    extractor: ExtractorMode,
    extractor_ids: Vec<(ParamId, ParamId)>,
    gmf: Option<(GmfParams, GmfConfig)>,
    classifier_w: ParamId,
    classifier_b: ParamId,
}

/// A trained classifier plus everything needed to rerun its forward pass.
#[derive(Debug)]
pub struct TrainedModel {
    pub params: ParamSet,
    arch: Arch,
}

/// Metrics from evaluating with an optional modality zeroed out.
#[derive(Debug, Clone)]
pub struct MissingModalityMetrics {
    pub dropped: Option<usize>,
    pub accuracy: f64,
    /// Present only for binary tasks; score is the class-1 logit margin.
    pub auc: Option<f64>,
}

impl TrainedModel {
    pub fn method(&self) -> FusionMethod {
        self.arch.method
    }

    pub fn gmf_config(&self) -> Option<&GmfConfig> {
        self.arch.gmf.as_ref().map(|(_, c)| c)
    }

    /// Feature nodes after the (optional) extractor.
    fn feature_nodes(&self, tape: &mut Tape, xs: &[Matrix]) -> Result<Vec<NodeId>> {
        feature_nodes(tape, &self.params, &self.arch, xs)
    }

    /// Classifier logits plus the fusion internals when the method has any.
    pub fn forward(
        &self,
        tape: &mut Tape,
        xs: &[Matrix],
    ) -> Result<(NodeId, Option<FusionOutput>)> {
        let features = self.feature_nodes(tape, xs)?;
        head(tape, &self.params, &self.arch, &features)
    }

    pub fn predict(&self, xs: &[Matrix]) -> Result<Vec<usize>> {
        let mut tape = Tape::new();
        let (logits, _) = self.forward(&mut tape, xs)?;
        Ok(argmax_rows(tape.value(logits)))
    }

    /// Class-1 logit margin per row, the score used for binary AUC.
    pub fn binary_scores(&self, xs: &[Matrix]) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let (logits, _) = self.forward(&mut tape, xs)?;
        let m = tape.value(logits);
        if m.cols() != 2 {
            return Err(Error::Contract(format!(
                "binary scores need a two-class head, this one has {}",
                m.cols()
            )));
        }
        Ok((0..m.rows()).map(|i| m.get(i, 1) - m.get(i, 0)).collect())
    }

    /// Invariant code of one modality (batch x l*), for retrieval.
    pub fn invariant_codes(&self, xs: &[Matrix], modality: usize) -> Result<Matrix> {
        let (gmf, cfg) = self
            .arch
            .gmf
            .as_ref()
            .ok_or_else(|| Error::Contract("the concat baseline has no invariant codes".into()))?;
        if modality >= cfg.modalities() {
            return Err(Error::Contract(format!(
                "modality {modality} out of range for {} modalities",
                cfg.modalities()
            )));
        }
        let mut tape = Tape::new();
        let features = self.feature_nodes(&mut tape, xs)?;
        let (inv, _) = element_split(&mut tape, &self.params, gmf, cfg, modality, features[modality])?;
        Ok(tape.value(inv).clone())
    }
}

fn feature_nodes(
    tape: &mut Tape,
    params: &ParamSet,
    arch: &Arch,
    xs: &[Matrix],
) -> Result<Vec<NodeId>> {
    let mut nodes = Vec::with_capacity(xs.len());
    for (j, x) in xs.iter().enumerate() {
        let raw = tape.constant(x.clone());
        match arch.extractor {
            ExtractorMode::FrozenIdentity => nodes.push(raw),
            ExtractorMode::Trainable => {
                let (w, b) = arch.extractor_ids[j];
                let w = tape.param(params, w);
                let b = tape.param(params, b);
                nodes.push(tape.linear(raw, w, b)?);
            }
        }
    }
    Ok(nodes)
}

fn head(
    tape: &mut Tape,
    params: &ParamSet,
    arch: &Arch,
    features: &[NodeId],
) -> Result<(NodeId, Option<FusionOutput>)> {
    let (pooled, fusion) = match &arch.gmf {
        None => (tape.concat_cols(features)?, None),
        Some((gmf, cfg)) => {
            let out = gmf_forward(tape, params, gmf, cfg, features)?;
            (tape.concat_cols(&out.z)?, Some(out))
        }
    };
    let w = tape.param(params, arch.classifier_w);
    let b = tape.param(params, arch.classifier_b);
    Ok((tape.linear(pooled, w, b)?, fusion))
}

fn build_arch(
    params: &mut ParamSet,
    dataset: &Dataset,
    cfg: &TrainConfig,
    gmf_cfg: Option<GmfConfig>,
    rng: &mut SplitMix64,
) -> Result<Arch> {
    let dims = &dataset.spec.observed_dims;
    let mut extractor_ids = Vec::new();
    if cfg.extractor == ExtractorMode::Trainable {
        for (j, &m) in dims.iter().enumerate() {
            let w = params.insert(format!("extractor.{j}"), Matrix::identity(m))?;
            let b = params.insert(format!("extractor.{j}.bias"), Matrix::zeros(1, m))?;
            extractor_ids.push((w, b));
        }
    }

    let gmf = match (cfg.method.uses_gmf(), gmf_cfg) {
        (false, None) => None,
        (false, Some(_)) => {
            return Err(Error::Config(
                "the concat baseline takes no fusion config".into(),
            ));
        }
        (true, None) => {
            return Err(Error::Config(format!(
                "method {} needs a fusion config",
                cfg.method.as_str()
            )));
        }
        (true, Some(mut fusion_cfg)) => {
            if fusion_cfg.dims != *dims {
                return Err(Error::Config(format!(
                    "fusion dims {:?} must match the modality feature widths {:?}",
                    fusion_cfg.dims, dims
                )));
            }
            // The training config is authoritative for the ablation switch
            // and the loss weight.
            fusion_cfg.barrier_enabled = cfg.method == FusionMethod::Gmf;
            fusion_cfg.lambda = cfg.lambda;
            fusion_cfg.validate()?;
            let maps = GmfParams::init(params, &fusion_cfg, rng)?;
            Some((maps, fusion_cfg))
        }
    };

    let head_width = match &gmf {
        None => dims.iter().sum::<usize>(),
        Some((_, c)) => (0..c.modalities()).map(|j| c.fused_len(j)).sum(),
    };
    let classes = dataset.spec.classes;
    let classifier_w = params.insert_linear_weight("classifier", classes, head_width, rng)?;
    let classifier_b = params.insert_bias("classifier.bias", classes, head_width, rng)?;

    Ok(Arch {
        method: cfg.method,
        extractor: cfg.extractor,
        extractor_ids,
        gmf,
        classifier_w,
        classifier_b,
    })
}

fn eval_accuracy(
    params: &ParamSet,
    arch: &Arch,
    xs: &[Matrix],
    ys: &[usize],
) -> Result<f64> {
    let mut tape = Tape::new();
    let features = feature_nodes(&mut tape, params, arch, xs)?;
    let (logits, _) = head(&mut tape, params, arch, &features)?;
    accuracy(&argmax_rows(tape.value(logits)), ys)
}

/// Dissociation loss of the current parameters over the given batch,
/// without touching gradients.
fn eval_dis_loss(params: &ParamSet, arch: &Arch, xs: &[Matrix]) -> Result<Option<f64>> {
    let Some((gmf, cfg)) = &arch.gmf else {
        return Ok(None);
    };
    let mut tape = Tape::new();
    let features = feature_nodes(&mut tape, params, arch, xs)?;
    let out = gmf_forward(&mut tape, params, gmf, cfg, &features)?;
    let dis = reconstruction_loss(&mut tape, &out, &out.originals)?;
    Ok(Some(tape.value(dis).get(0, 0)))
}

/// Trains one model on the dataset's training split.
///
/// `gmf_cfg` must be present exactly when the method uses the fusion
/// front-end; its barrier flag and lambda are overwritten from the training
/// config. A diverging run stops early and is returned with `diverged` set
/// rather than as an error.
pub fn train_fusion(
    dataset: &Dataset,
    cfg: &TrainConfig,
    gmf_cfg: Option<GmfConfig>,
) -> Result<(TrainedModel, ExperimentReport)> {
    cfg.validate()?;
    let mut params = ParamSet::new();
    let mut init_rng = SplitMix64::stream(cfg.seed, "bench-init");
    let arch = build_arch(&mut params, dataset, cfg, gmf_cfg, &mut init_rng)?;

    let (xtr, ytr) = dataset.train();
    let (xte, yte) = dataset.test();
    let n_train = ytr.len();

    let initial_dis_loss = eval_dis_loss(&params, &arch, &xtr)?;
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut diverged = None;

    let mut order: Vec<usize> = (0..n_train).collect();
    let mut batch_rng = SplitMix64::stream(cfg.seed, "bench-batches");
    'training: for epoch in 0..cfg.epochs {
        batch_rng.shuffle(&mut order);
        let mut task_sum = 0.0;
        let mut dis_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch) {
            let xb: Vec<Matrix> = xtr.iter().map(|f| f.gather_rows(chunk)).collect();
            let yb: Vec<usize> = chunk.iter().map(|&i| ytr[i]).collect();

            let mut tape = Tape::new();
            let features = feature_nodes(&mut tape, &params, &arch, &xb)?;
            let (logits, fusion) = head(&mut tape, &params, &arch, &features)?;
            let task = tape.cross_entropy_loss(logits, &yb)?;
            let mut total = task;
            let mut dis_value = None;
            if let Some(out) = &fusion {
                let dis = reconstruction_loss(&mut tape, out, &out.originals)?;
                dis_value = Some(tape.value(dis).get(0, 0));
                if cfg.lambda != 0.0 {
                    let weighted = tape.scale(dis, cfg.lambda);
                    total = tape.add(total, weighted)?;
                }
            }

            let total_value = tape.value(total).get(0, 0);
            if !total_value.is_finite() || total_value > DIVERGENCE_LOSS {
                diverged = Some(format!(
                    "loss reached {total_value:.3e} at epoch {epoch}, batch {batches}"
                ));
                break 'training;
            }
            task_sum += tape.value(task).get(0, 0);
            dis_sum += dis_value.unwrap_or(0.0);
            batches += 1;

            tape.backward(total, &mut params)?;
            sgd_step(&mut params, &cfg.sgd)?;
            let worst = params
                .iter()
                .map(|(_, p)| p.value.max_abs())
                .fold(0.0, f64::max);
            if !worst.is_finite() || worst > DIVERGENCE_PARAM {
                diverged = Some(format!(
                    "parameters reached magnitude {worst:.3e} at epoch {epoch}, batch {batches}"
                ));
                break 'training;
            }
        }
        epochs.push(EpochStats {
            epoch,
            mean_task_loss: task_sum / batches.max(1) as f64,
            mean_dis_loss: arch.gmf.as_ref().map(|_| dis_sum / batches.max(1) as f64),
            train_accuracy: eval_accuracy(&params, &arch, &xtr, &ytr)?,
            test_accuracy: eval_accuracy(&params, &arch, &xte, &yte)?,
        });
    }

    let final_dis_loss = eval_dis_loss(&params, &arch, &xtr)?;
    let final_train_accuracy = eval_accuracy(&params, &arch, &xtr, &ytr)?;
    let final_test_accuracy = eval_accuracy(&params, &arch, &xte, &yte)?;
    let report = ExperimentReport {
        method: cfg.method,
        extractor: cfg.extractor,
        lambda: cfg.lambda,
        seed: cfg.seed,
        epochs,
        parameter_scalars: params.scalar_count(),
        initial_dis_loss,
        final_dis_loss,
        final_train_accuracy,
        final_test_accuracy,
        diverged,
    };
    Ok((TrainedModel { params, arch }, report))
}

/// Evaluates the model on the test split with modality `drop` zeroed at the
/// input, the convention for absent modalities. For fusion models this also
/// verifies the locality law: codes of surviving modalities must be
/// bit-identical to their full-input values.
pub fn missing_modality_eval(
    model: &TrainedModel,
    dataset: &Dataset,
    drop: Option<usize>,
) -> Result<MissingModalityMetrics> {
    let d = dataset.spec.modalities;
    if let Some(j) = drop {
        if j >= d {
            return Err(Error::Contract(format!(
                "cannot drop modality {j}; the dataset has {d}"
            )));
        }
    }
    let (mut xs, ys) = dataset.test();
    let full_xs = xs.clone();
    if let Some(j) = drop {
        xs[j] = Matrix::zeros(xs[j].rows(), xs[j].cols());
    }

    if model.arch.gmf.is_some() {
        if let Some(j) = drop {
            let mut full_tape = Tape::new();
            let (_, full_out) = model.forward(&mut full_tape, &full_xs)?;
            let mut drop_tape = Tape::new();
            let (_, drop_out) = model.forward(&mut drop_tape, &xs)?;
            let (full_out, drop_out) = (full_out.unwrap(), drop_out.unwrap());
            for i in 0..d {
                if i == j {
                    continue;
                }
                let pairs = [
                    (full_out.z_spec[i], drop_out.z_spec[i]),
                    (full_out.z_inv[i], drop_out.z_inv[i]),
                ];
                for (a, b) in pairs {
                    let (va, vb) = (full_tape.value(a), drop_tape.value(b));
                    for (u, v) in va.data().iter().zip(vb.data().iter()) {
                        if u.to_bits() != v.to_bits() {
                            return Err(Error::Contract(format!(
                                "dropping modality {j} disturbed the codes of modality {i}"
                            )));
                        }
                    }
                }
            }
        }
    }

    let pred = model.predict(&xs)?;
    let acc = accuracy(&pred, &ys)?;
    let auc_value = if dataset.spec.classes == 2 {
        Some(auc(&model.binary_scores(&xs)?, &ys)?)
    } else {
        None
    };
    Ok(MissingModalityMetrics {
        dropped: drop,
        accuracy: acc,
        auc: auc_value,
    })
}

/// Cross-modal retrieval analog: cosine-rank the invariant codes of the
/// query modality against those of the gallery modality over the test
/// split, and report how often the true counterpart lands in the top k.
pub fn cross_modal_recall_at_k(
    model: &TrainedModel,
    dataset: &Dataset,
    query_modality: usize,
    gallery_modality: usize,
    k: usize,
) -> Result<f64> {
    let (xs, _) = dataset.test();
    let n = xs[0].rows();
    if k == 0 || k > n {
        return Err(Error::Contract(format!(
            "recall@k needs 1 <= k <= {n}, got {k}"
        )));
    }
    let q = model.invariant_codes(&xs, query_modality)?;
    let g = model.invariant_codes(&xs, gallery_modality)?;
    let norm = |m: &Matrix, i: usize| -> f64 {
        (0..m.cols())
            .map(|c| m.get(i, c) * m.get(i, c))
            .sum::<f64>()
            .sqrt()
            .max(1e-300)
    };
    let mut hits = 0usize;
    for i in 0..n {
        let qi = norm(&q, i);
        let scores: Vec<f64> = (0..n)
            .map(|t| {
                let dot: f64 = (0..q.cols()).map(|c| q.get(i, c) * g.get(t, c)).sum();
                dot / (qi * norm(&g, t))
            })
            .collect();
        let own = scores[i];
        // Rank of the true counterpart, counting strictly better rows.
        let better = scores.iter().filter(|&&s| s > own).count();
        if better < k {
            hits += 1;
        }
    }
    Ok(hits as f64 / n as f64)
}

/// Trains the fusion maps alone on fixed random features, minimizing only
/// the dissociation loss, and returns the loss value at every step with the
/// step-0 entry taken before the first update.
pub fn train_dissociation_only(
    cfg: &GmfConfig,
    batch: usize,
    steps: usize,
    sgd: &SgdConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if batch == 0 || steps == 0 {
        return Err(Error::Config("batch and steps must be positive".into()));
    }
    let mut data_rng = SplitMix64::stream(seed, "dissociation-data");
    let inputs: Vec<Matrix> = cfg
        .dims
        .iter()
        .map(|&l| Matrix::standard_normal(batch, l, &mut data_rng))
        .collect();
    let mut params = ParamSet::new();
    let mut init_rng = SplitMix64::stream(seed, "dissociation-init");
    let gmf = GmfParams::init(&mut params, cfg, &mut init_rng)?;

    let mut curve = Vec::with_capacity(steps + 1);
    for _ in 0..steps {
        let mut tape = Tape::new();
        let features: Vec<NodeId> = inputs.iter().map(|x| tape.constant(x.clone())).collect();
        let out = gmf_forward(&mut tape, &params, &gmf, cfg, &features)?;
        let dis = reconstruction_loss(&mut tape, &out, &out.originals)?;
        curve.push(tape.value(dis).get(0, 0));
        tape.backward(dis, &mut params)?;
        sgd_step(&mut params, sgd)?;
    }
    // Loss after the final update.
    let mut tape = Tape::new();
    let features: Vec<NodeId> = inputs.iter().map(|x| tape.constant(x.clone())).collect();
    let out = gmf_forward(&mut tape, &params, &gmf, cfg, &features)?;
    let dis = reconstruction_loss(&mut tape, &out, &out.originals)?;
    curve.push(tape.value(dis).get(0, 0));
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::synth::{generate_dataset, SyntheticSpec};

    fn small_spec() -> SyntheticSpec {
        let mut spec = SyntheticSpec::pinned();
        spec.observed_dims = vec![8, 8];
        spec.specific_dims = vec![2, 2];
        spec.shared_dim = 2;
        spec.classes = 3;
        spec.samples = 500;
        spec.label_margin = 1.0;
        spec
    }

    fn small_gmf(dims: Vec<usize>) -> GmfConfig {
        let mut cfg = GmfConfig::new(dims);
        cfg.magnification = 2;
        cfg
    }

    #[test]
    fn concat_baseline_solves_a_separable_task() {
        let ds = generate_dataset(&small_spec(), 1).unwrap();
        let mut cfg = TrainConfig::new(FusionMethod::ConcatBaseline);
        cfg.epochs = 10;
        let (_, report) = train_fusion(&ds, &cfg, None).unwrap();
        assert!(report.diverged.is_none());
        assert_eq!(report.epochs.len(), 10);
        assert!(
            report.final_test_accuracy > 0.9,
            "separable task should be solved, got {}",
            report.final_test_accuracy
        );
        assert!(report.initial_dis_loss.is_none());
        // Task loss falls across training.
        assert!(report.epochs[9].mean_task_loss < report.epochs[0].mean_task_loss);
    }

    #[test]
    fn fusion_front_end_trains_both_losses() {
        let ds = generate_dataset(&small_spec(), 2).unwrap();
        let mut cfg = TrainConfig::new(FusionMethod::Gmf);
        cfg.epochs = 10;
        let (model, report) = train_fusion(&ds, &cfg, Some(small_gmf(vec![8, 8]))).unwrap();
        assert!(report.diverged.is_none());
        let initial = report.initial_dis_loss.unwrap();
        let fin = report.final_dis_loss.unwrap();
        assert!(fin < 0.8 * initial, "dissociation loss {initial} -> {fin}");
        assert!(
            report.final_test_accuracy > 0.8,
            "fusion model should learn the task, got {}",
            report.final_test_accuracy
        );
        assert!(model.gmf_config().unwrap().barrier_enabled);
    }

    #[test]
    fn ablation_method_disables_the_barrier_flag() {
        let ds = generate_dataset(&small_spec(), 2).unwrap();
        let mut cfg = TrainConfig::new(FusionMethod::GmfNoBarrier);
        cfg.epochs = 1;
        let (model, _) = train_fusion(&ds, &cfg, Some(small_gmf(vec![8, 8]))).unwrap();
        assert!(!model.gmf_config().unwrap().barrier_enabled);
    }

    #[test]
    fn fusion_config_presence_is_checked_both_ways() {
        let ds = generate_dataset(&small_spec(), 3).unwrap();
        let cfg = TrainConfig::new(FusionMethod::ConcatBaseline);
        assert!(train_fusion(&ds, &cfg, Some(small_gmf(vec![8, 8]))).is_err());
        let cfg = TrainConfig::new(FusionMethod::Gmf);
        assert!(train_fusion(&ds, &cfg, None).is_err());
        // Mismatched dims are named.
        let err = train_fusion(&ds, &cfg, Some(small_gmf(vec![4, 4]))).unwrap_err();
        assert!(err.to_string().contains("dims"));
    }

    #[test]
    fn zero_lambda_matches_a_graph_without_the_loss_term() {
        let ds = generate_dataset(&small_spec(), 4).unwrap();
        let (xb, yb) = ds.gather(&ds.train_idx[..32]);

        let build = |with_zero_term: bool| -> ParamSet {
            let mut params = ParamSet::new();
            let mut rng = SplitMix64::stream(9, "lambda-zero");
            let cfg = TrainConfig::new(FusionMethod::Gmf);
            let arch =
                build_arch(&mut params, &ds, &cfg, Some(small_gmf(vec![8, 8])), &mut rng).unwrap();
            let mut tape = Tape::new();
            let features = feature_nodes(&mut tape, &params, &arch, &xb).unwrap();
            let (logits, fusion) = head(&mut tape, &params, &arch, &features).unwrap();
            let task = tape.cross_entropy_loss(logits, &yb).unwrap();
            let total = if with_zero_term {
                let out = fusion.as_ref().unwrap();
                let dis = reconstruction_loss(&mut tape, out, &out.originals).unwrap();
                let weighted = tape.scale(dis, 0.0);
                tape.add(task, weighted).unwrap()
            } else {
                task
            };
            tape.backward(total, &mut params).unwrap();
            sgd_step(&mut params, &SgdConfig::default()).unwrap();
            params
        };

        let with_term = build(true);
        let without = build(false);
        for ((_, a), (_, b)) in with_term.iter().zip(without.iter()) {
            assert_eq!(a.name, b.name);
            for (u, v) in a.value.data().iter().zip(b.value.data().iter()) {
                assert_eq!(u.to_bits(), v.to_bits(), "parameter {} moved differently", a.name);
            }
        }
    }

    #[test]
    fn dropping_nothing_reproduces_standard_metrics() {
        let ds = generate_dataset(&small_spec(), 5).unwrap();
        let mut cfg = TrainConfig::new(FusionMethod::Gmf);
        cfg.epochs = 3;
        let (model, report) = train_fusion(&ds, &cfg, Some(small_gmf(vec![8, 8]))).unwrap();
        let m = missing_modality_eval(&model, &ds, None).unwrap();
        assert_eq!(m.accuracy.to_bits(), report.final_test_accuracy.to_bits());
        assert!(m.auc.is_none());
    }

    #[test]
    fn dropping_a_modality_checks_locality_and_stays_in_range() {
        let ds = generate_dataset(&small_spec(), 6).unwrap();
        let mut cfg = TrainConfig::new(FusionMethod::Gmf);
        cfg.extractor = ExtractorMode::Trainable;
        cfg.epochs = 3;
        let (model, _) = train_fusion(&ds, &cfg, Some(small_gmf(vec![8, 8]))).unwrap();
        for j in 0..2 {
            let m = missing_modality_eval(&model, &ds, Some(j)).unwrap();
            assert!((0.0..=1.0).contains(&m.accuracy));
        }
        assert!(missing_modality_eval(&model, &ds, Some(2)).is_err());
    }

    #[test]
    fn binary_tasks_report_auc() {
        let mut spec = small_spec();
        spec.classes = 2;
        let ds = generate_dataset(&spec, 7).unwrap();
        let mut cfg = TrainConfig::new(FusionMethod::ConcatBaseline);
        cfg.epochs = 6;
        let (model, _) = train_fusion(&ds, &cfg, None).unwrap();
        let m = missing_modality_eval(&model, &ds, None).unwrap();
        let a = m.auc.unwrap();
        assert!(a > 0.9, "trained binary model should rank well, got {a}");
    }

    #[test]
    fn self_retrieval_is_perfect_and_bounds_are_enforced() {
        let ds = generate_dataset(&small_spec(), 8).unwrap();
        let mut cfg = TrainConfig::new(FusionMethod::Gmf);
        cfg.epochs = 1;
        let (model, _) = train_fusion(&ds, &cfg, Some(small_gmf(vec![8, 8]))).unwrap();
        let r = cross_modal_recall_at_k(&model, &ds, 0, 0, 1).unwrap();
        assert_eq!(r, 1.0);
        assert!(cross_modal_recall_at_k(&model, &ds, 0, 1, 0).is_err());
        let r5 = cross_modal_recall_at_k(&model, &ds, 0, 1, 5).unwrap();
        assert!((0.0..=1.0).contains(&r5));
    }

    #[test]
    fn runaway_learning_rates_mark_the_run_diverged() {
        let ds = generate_dataset(&small_spec(), 9).unwrap();
        let mut cfg = TrainConfig::new(FusionMethod::Gmf);
        cfg.epochs = 3;
        cfg.sgd.lr = 1e6;
        let (_, report) = train_fusion(&ds, &cfg, Some(small_gmf(vec![8, 8]))).unwrap();
        let msg = report.diverged.expect("run should be marked failed");
        assert!(msg.contains("epoch"), "diagnostics should locate the blowup: {msg}");
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let ds = generate_dataset(&small_spec(), 10).unwrap();
        let mut cfg = TrainConfig::new(FusionMethod::Gmf);
        cfg.epochs = 2;
        let (_, a) = train_fusion(&ds, &cfg, Some(small_gmf(vec![8, 8]))).unwrap();
        let (_, b) = train_fusion(&ds, &cfg, Some(small_gmf(vec![8, 8]))).unwrap();
        assert_eq!(
            a.final_test_accuracy.to_bits(),
            b.final_test_accuracy.to_bits()
        );
        assert_eq!(
            a.final_dis_loss.unwrap().to_bits(),
            b.final_dis_loss.unwrap().to_bits()
        );
    }

    #[test]
    fn dissociation_only_training_descends() {
        let mut cfg = GmfConfig::new(vec![8, 8]);
        cfg.magnification = 2;
        let curve =
            train_dissociation_only(&cfg, 16, 60, &SgdConfig::default(), 3).unwrap();
        assert_eq!(curve.len(), 61);
        let initial = curve[0];
        let fin = *curve.last().unwrap();
        assert!(fin < 0.5 * initial, "loss {initial} -> {fin}");
        assert!(curve.iter().all(|v| v.is_finite()));
    }
}
