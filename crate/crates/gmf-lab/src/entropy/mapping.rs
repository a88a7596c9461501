//! Up/down mapping experiment.
//!
//! A frozen synthetic task provides features `f` in R^l and labels given by
//! the argmax of a fixed full-rank linear rule over those features. A direct
//! linear probe can represent the rule; a probe that first routes `f`
//! through a down-projection to `floor(n * l)` dimensions and back up,
//! `W U1 (U2 f)`, has composite rank at most `floor(n * l)`. For `n < 1`
//! the bottleneck makes the rule unrepresentable and accuracy must drop;
//! for `n >= 1` the stacked probe should match the direct one after
//! training. The experiment trains every cell over a shared seed set and
//! reports per-cell accuracy statistics.

use crate::bench::metrics::{accuracy, argmax_rows};
use crate::error::{Error, Result};
use crate::tensor::{sgd_step, Matrix, NodeId, ParamId, ParamSet, SgdConfig, SplitMix64, Tape};

/// Attempt budget for margin rejection sampling, per accepted row.
const MAX_DRAWS_PER_SAMPLE: usize = 1000;

/// Settings for one up/down mapping run.
#[derive(Debug, Clone)]
pub struct MappingExperimentConfig {
    /// Feature dimension l of the frozen task.
    pub feature_dim: usize,
    /// Number of classes in the linear rule.
    pub classes: usize,
    /// Bottleneck magnifications n; each probe uses `floor(n * l)` middle
    /// units (at least one).
    pub magnifications: Vec<f64>,
    /// Seeds shared by every cell; statistics are taken across them.
    pub seeds: Vec<u64>,
    pub train_samples: usize,
    pub test_samples: usize,
    pub epochs: usize,
    pub batch: usize,
    /// Minimum logit gap between the best and second-best class when
    /// sampling task rows. A positive margin keeps the task cleanly
    /// separable so trained probes saturate rather than chase boundary
    /// noise.
    pub margin: f64,
    pub sgd: SgdConfig,
}

impl MappingExperimentConfig {
    pub fn new() -> Self {
        MappingExperimentConfig {
            feature_dim: 16,
            classes: 16,
            magnifications: vec![0.5, 1.0, 2.0, 4.0],
            seeds: vec![1, 2, 3],
            train_samples: 2000,
            test_samples: 2000,
            epochs: 40,
            batch: 64,
            margin: 0.25,
            sgd: SgdConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_dim == 0 {
            return Err(Error::Config("feature_dim must be positive".into()));
        }
        if self.classes < 2 {
            return Err(Error::Config(format!(
                "need at least two classes, got {}",
                self.classes
            )));
        }
        if self.magnifications.is_empty() {
            return Err(Error::Config("magnifications must not be empty".into()));
        }
        for &n in &self.magnifications {
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::Config(format!(
                    "magnifications must be positive and finite, got {n}"
                )));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if self.train_samples == 0 || self.test_samples == 0 {
            return Err(Error::Config("sample counts must be positive".into()));
        }
        if self.epochs == 0 || self.batch == 0 {
            return Err(Error::Config("epochs and batch must be positive".into()));
        }
        if !self.margin.is_finite() || self.margin < 0.0 {
            return Err(Error::Config(format!(
                "margin must be finite and non-negative, got {}",
                self.margin
            )));
        }
        self.sgd.validate()
    }

    /// Middle width used for magnification `n`.
    pub fn middle_dim(&self, n: f64) -> usize {
        ((n * self.feature_dim as f64).floor() as usize).max(1)
    }
}

impl Default for MappingExperimentConfig {
    fn default() -> Self {
        MappingExperimentConfig::new()
    }
}

/// Accuracy statistics for one probe shape across the seed set.
#[derive(Debug, Clone)]
pub struct MappingCell {
    pub label: String,
    /// `None` for the direct probe.
    pub magnification: Option<f64>,
    /// Test accuracy per seed, in `seeds` order.
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Full experiment output: the direct probe first, then one cell per
/// magnification in configuration order.
#[derive(Debug, Clone)]
pub struct MappingReport {
    pub cells: Vec<MappingCell>,
}

impl MappingReport {
    pub fn cell(&self, label: &str) -> Option<&MappingCell> {
        self.cells.iter().find(|c| c.label == label)
    }
}

/// A probe is a stack of bias-free down/up maps followed by a classifier
/// layer with bias. The direct probe has an empty stack.
struct Probe {
    maps: Vec<ParamId>,
    classifier: ParamId,
    bias: ParamId,
}

fn probe_logits(tape: &mut Tape, ps: &ParamSet, probe: &Probe, x: NodeId) -> Result<NodeId> {
    let mut h = x;
    for &u in &probe.maps {
        let w = tape.param(ps, u);
        let wt = tape.transpose(w);
        h = tape.matmul(h, wt)?;
    }
    let w = tape.param(ps, probe.classifier);
    let b = tape.param(ps, probe.bias);
    tape.linear(h, w, b)
}

fn init_probe(
    ps: &mut ParamSet,
    rng: &mut SplitMix64,
    feature_dim: usize,
    classes: usize,
    middle: Option<usize>,
) -> Result<Probe> {
    let mut maps = Vec::new();
    if let Some(m) = middle {
        maps.push(ps.insert_linear_weight("probe.down", m, feature_dim, rng)?);
        maps.push(ps.insert_linear_weight("probe.up", feature_dim, m, rng)?);
    }
    let classifier = ps.insert_linear_weight("probe.classifier", classes, feature_dim, rng)?;
    let bias = ps.insert_bias("probe.classifier.bias", classes, feature_dim, rng)?;
    Ok(Probe {
        maps,
        classifier,
        bias,
    })
}

/// Draws `count` rows of the frozen task, rejecting rows whose top-two
/// logit gap falls below the margin.
fn sample_task(
    rule: &Matrix,
    rng: &mut SplitMix64,
    count: usize,
    margin: f64,
) -> Result<(Matrix, Vec<usize>)> {
    let l = rule.cols();
    let classes = rule.rows();
    let mut rows = Vec::with_capacity(count * l);
    let mut labels = Vec::with_capacity(count);
    let mut f = vec![0.0; l];
    for _ in 0..count {
        let mut accepted = false;
        for _ in 0..MAX_DRAWS_PER_SAMPLE {
            for v in f.iter_mut() {
                *v = rng.normal();
            }
            let mut best = 0;
            let mut best_v = f64::NEG_INFINITY;
            let mut second_v = f64::NEG_INFINITY;
            for c in 0..classes {
                let mut s = 0.0;
                for k in 0..l {
                    s += rule.get(c, k) * f[k];
                }
                if s > best_v {
                    second_v = best_v;
                    best_v = s;
                    best = c;
                } else if s > second_v {
                    second_v = s;
                }
            }
            if best_v - second_v >= margin {
                rows.extend_from_slice(&f);
                labels.push(best);
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(Error::Config(format!(
                "margin {margin} rejected {MAX_DRAWS_PER_SAMPLE} consecutive draws; lower it"
            )));
        }
    }
    Ok((Matrix::from_vec(count, l, rows)?, labels))
}

fn train_probe(
    ps: &mut ParamSet,
    probe: &Probe,
    xtr: &Matrix,
    ytr: &[usize],
    cfg: &MappingExperimentConfig,
    rng: &mut SplitMix64,
) -> Result<()> {
    let n = xtr.rows();
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch) {
            let xb = xtr.gather_rows(chunk);
            let yb: Vec<usize> = chunk.iter().map(|&i| ytr[i]).collect();
            let mut tape = Tape::new();
            let x = tape.constant(xb);
            let logits = probe_logits(&mut tape, ps, probe, x)?;
            let loss = tape.cross_entropy_loss(logits, &yb)?;
            tape.backward(loss, ps)?;
            sgd_step(ps, &cfg.sgd)?;
        }
    }
    Ok(())
}

fn eval_probe(ps: &ParamSet, probe: &Probe, x: &Matrix, y: &[usize]) -> Result<f64> {
    let mut tape = Tape::new();
    let xn = tape.constant(x.clone());
    let logits = probe_logits(&mut tape, ps, probe, xn)?;
    accuracy(&argmax_rows(tape.value(logits)), y)
}

fn run_cell(
    cfg: &MappingExperimentConfig,
    magnification: Option<f64>,
) -> Result<MappingCell> {
    let mut accuracies = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let mut task_rng = SplitMix64::stream(seed, "updown-task");
        let rule = Matrix::standard_normal(cfg.classes, cfg.feature_dim, &mut task_rng);
        let mut data_rng = SplitMix64::stream(seed, "updown-data");
        let (xtr, ytr) = sample_task(&rule, &mut data_rng, cfg.train_samples, cfg.margin)?;
        let (xte, yte) = sample_task(&rule, &mut data_rng, cfg.test_samples, cfg.margin)?;

        let mut ps = ParamSet::new();
        let mut init_rng = SplitMix64::stream(seed, "updown-init");
        let probe = init_probe(
            &mut ps,
            &mut init_rng,
            cfg.feature_dim,
            cfg.classes,
            magnification.map(|n| cfg.middle_dim(n)),
        )?;
        let mut train_rng = SplitMix64::stream(seed, "updown-train");
        train_probe(&mut ps, &probe, &xtr, &ytr, cfg, &mut train_rng)?;
        accuracies.push(eval_probe(&ps, &probe, &xte, &yte)?);
    }
    let mean = accuracies.iter().sum::<f64>() / accuracies.len() as f64;
    let min = accuracies.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = accuracies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(MappingCell {
        label: match magnification {
            None => "direct".to_string(),
            Some(n) => format!("updown n={n}"),
        },
        magnification,
        accuracies,
        mean,
        min,
        max,
    })
}

/// Trains the direct probe and one up/down probe per magnification, all on
/// the same frozen tasks and seed set, and collects accuracy statistics.
pub fn up_down_experiment(cfg: &MappingExperimentConfig) -> Result<MappingReport> {
    cfg.validate()?;
    let mut cells = vec![run_cell(cfg, None)?];
    for &n in &cfg.magnifications {
        cells.push(run_cell(cfg, Some(n))?);
    }
    Ok(MappingReport { cells })
}
