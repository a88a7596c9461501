//! Hidden-width sweep on a task with controlled intrinsic dimension.
//!
//! The task draws class-conditional Gaussian blobs in a k-dimensional
//! latent space and embeds them linearly into a wider ambient space, so the
//! data occupy an exactly k-dimensional subspace. One-hidden-layer ReLU
//! classifiers are trained across a grid of hidden widths and a shared seed
//! set. Three regimes are of interest: test accuracy saturating once the
//! width clears the task's needs, a single hidden unit failing on three or
//! more non-collinear classes (its logits depend on one scalar projection,
//! so decision regions are intervals), and, under label noise, wider nets
//! fitting the noise so the test-to-train accuracy ratio falls.

use crate::bench::metrics::{accuracy, argmax_rows};
use crate::error::{Error, Result};
use crate::tensor::{sgd_step, Matrix, ParamSet, SgdConfig, SplitMix64, Tape};

/// Settings for one width sweep.
#[derive(Debug, Clone)]
pub struct WidthSweepConfig {
    pub classes: usize,
    /// Latent dimension k of the blobs.
    pub intrinsic_dim: usize,
    /// Ambient dimension the latents are embedded into.
    pub ambient_dim: usize,
    /// Hidden widths to train, typically a geometric grid.
    pub widths: Vec<usize>,
    /// Seeds shared by every width; statistics are taken across them.
    pub seeds: Vec<u64>,
    pub train_samples: usize,
    pub test_samples: usize,
    pub epochs: usize,
    pub batch: usize,
    /// Probability that a training label is replaced by a uniformly random
    /// other class. Test labels stay clean.
    pub label_noise: f64,
    /// Scale of the latent blob centers.
    pub center_scale: f64,
    /// Within-blob standard deviation in latent space.
    pub cluster_spread: f64,
    /// Explicit latent centers (classes x intrinsic_dim). When absent,
    /// centers are drawn per seed.
    pub centers: Option<Matrix>,
    pub sgd: SgdConfig,
}

impl WidthSweepConfig {
    pub fn new() -> Self {
        WidthSweepConfig {
            classes: 3,
            intrinsic_dim: 2,
            ambient_dim: 16,
            widths: vec![1, 2, 4, 8, 16, 32, 64],
            seeds: vec![1, 2, 3],
            train_samples: 600,
            test_samples: 600,
            epochs: 30,
            batch: 64,
            label_noise: 0.0,
            center_scale: 3.0,
            cluster_spread: 1.0,
            centers: None,
            sgd: SgdConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::Config(format!(
                "need at least two classes, got {}",
                self.classes
            )));
        }
        if self.intrinsic_dim == 0 || self.ambient_dim < self.intrinsic_dim {
            return Err(Error::Config(format!(
                "need 0 < intrinsic_dim <= ambient_dim, got {} and {}",
                self.intrinsic_dim, self.ambient_dim
            )));
        }
        if self.widths.is_empty() || self.widths.contains(&0) {
            return Err(Error::Config("widths must be positive and non-empty".into()));
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
        if !(0.0..1.0).contains(&self.label_noise) {
            return Err(Error::Config(format!(
                "label_noise must lie in [0, 1), got {}",
                self.label_noise
            )));
        }
        if !(self.center_scale > 0.0) || !(self.cluster_spread > 0.0) {
            return Err(Error::Config(
                "center_scale and cluster_spread must be positive".into(),
            ));
        }
        if let Some(c) = &self.centers {
            if c.rows() != self.classes || c.cols() != self.intrinsic_dim {
                return Err(Error::Config(format!(
                    "centers must be {} x {}, got {} x {}",
                    self.classes,
                    self.intrinsic_dim,
                    c.rows(),
                    c.cols()
                )));
            }
            if !c.all_finite() {
                return Err(Error::Config("centers must be finite".into()));
            }
        }
        self.sgd.validate()
    }
}

impl Default for WidthSweepConfig {
    fn default() -> Self {
        WidthSweepConfig::new()
    }
}

/// Accuracy statistics for one hidden width across the seed set.
#[derive(Debug, Clone)]
pub struct WidthCell {
    pub width: usize,
    /// Accuracy on the (possibly noisy) training labels, per seed.
    pub train_accuracies: Vec<f64>,
    /// Accuracy on clean test labels, per seed.
    pub test_accuracies: Vec<f64>,
    pub mean_train: f64,
    pub mean_test: f64,
    /// mean_test / mean_train; falls when extra capacity goes into
    /// memorizing noisy training labels.
    pub generalization_ratio: f64,
}

/// Sweep output, one cell per width in configuration order.
#[derive(Debug, Clone)]
pub struct WidthSweepReport {
    pub cells: Vec<WidthCell>,
}

impl WidthSweepReport {
    pub fn cell(&self, width: usize) -> Option<&WidthCell> {
        self.cells.iter().find(|c| c.width == width)
    }

    /// Best mean test accuracy over all widths.
    pub fn best_mean_test(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.mean_test)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest width from which every wider cell stays within `tolerance`
    /// of the best mean test accuracy.
    pub fn plateau_width(&self, tolerance: f64) -> Option<usize> {
        let best = self.best_mean_test();
        let mut candidate = None;
        for cell in &self.cells {
            if cell.mean_test >= best - tolerance {
                if candidate.is_none() {
                    candidate = Some(cell.width);
                }
            } else {
                candidate = None;
            }
        }
        candidate
    }
}

struct WidthTask {
    xtr: Matrix,
    ytr: Vec<usize>,
    xte: Matrix,
    yte: Vec<usize>,
}

fn sample_split(
    centers: &Matrix,
    embed: &Matrix,
    spread: f64,
    count: usize,
    rng: &mut SplitMix64,
) -> Result<(Matrix, Vec<usize>)> {
    let k = centers.cols();
    let m = embed.rows();
    let classes = centers.rows();
    let mut rows = Vec::with_capacity(count * m);
    let mut labels = Vec::with_capacity(count);
    let mut z = vec![0.0; k];
    for _ in 0..count {
        let c = rng.below(classes);
        for (j, v) in z.iter_mut().enumerate() {
            *v = centers.get(c, j) + spread * rng.normal();
        }
        for i in 0..m {
            let mut s = 0.0;
            for (j, &zj) in z.iter().enumerate() {
                s += embed.get(i, j) * zj;
            }
            rows.push(s);
        }
        labels.push(c);
    }
    Ok((Matrix::from_vec(count, m, rows)?, labels))
}

fn make_task(cfg: &WidthSweepConfig, seed: u64) -> Result<WidthTask> {
    let centers = match &cfg.centers {
        Some(c) => c.clone(),
        None => {
            let mut rng = SplitMix64::stream(seed, "width-centers");
            let mut c = Matrix::standard_normal(cfg.classes, cfg.intrinsic_dim, &mut rng);
            c = c.scale(cfg.center_scale);
            c
        }
    };
    let mut embed_rng = SplitMix64::stream(seed, "width-embed");
    let embed = Matrix::standard_normal(cfg.ambient_dim, cfg.intrinsic_dim, &mut embed_rng)
        .scale(1.0 / (cfg.intrinsic_dim as f64).sqrt());

    let mut data_rng = SplitMix64::stream(seed, "width-data");
    let (xtr, mut ytr) = sample_split(
        &centers,
        &embed,
        cfg.cluster_spread,
        cfg.train_samples,
        &mut data_rng,
    )?;
    let (xte, yte) = sample_split(
        &centers,
        &embed,
        cfg.cluster_spread,
        cfg.test_samples,
        &mut data_rng,
    )?;

    if cfg.label_noise > 0.0 {
        let mut noise_rng = SplitMix64::stream(seed, "width-noise");
        for y in ytr.iter_mut() {
            if noise_rng.next_f64() < cfg.label_noise {
                let shift = 1 + noise_rng.below(cfg.classes - 1);
                *y = (*y + shift) % cfg.classes;
            }
        }
    }

    Ok(WidthTask { xtr, ytr, xte, yte })
}

struct Mlp {
    w1: crate::tensor::ParamId,
    b1: crate::tensor::ParamId,
    w2: crate::tensor::ParamId,
    b2: crate::tensor::ParamId,
}

fn init_mlp(
    ps: &mut ParamSet,
    width: usize,
    ambient: usize,
    classes: usize,
    rng: &mut SplitMix64,
) -> Result<Mlp> {
    Ok(Mlp {
        w1: ps.insert_linear_weight("mlp.hidden", width, ambient, rng)?,
        b1: ps.insert_bias("mlp.hidden.bias", width, ambient, rng)?,
        w2: ps.insert_linear_weight("mlp.readout", classes, width, rng)?,
        b2: ps.insert_bias("mlp.readout.bias", classes, width, rng)?,
    })
}

fn mlp_logits(
    tape: &mut Tape,
    ps: &ParamSet,
    mlp: &Mlp,
    x: crate::tensor::NodeId,
) -> Result<crate::tensor::NodeId> {
    let w1 = tape.param(ps, mlp.w1);
    let b1 = tape.param(ps, mlp.b1);
    let w2 = tape.param(ps, mlp.w2);
    let b2 = tape.param(ps, mlp.b2);
    let h = tape.linear(x, w1, b1)?;
    let h = tape.relu(h);
    tape.linear(h, w2, b2)
}

fn train_mlp(
    ps: &mut ParamSet,
    mlp: &Mlp,
    task: &WidthTask,
    cfg: &WidthSweepConfig,
    rng: &mut SplitMix64,
) -> Result<()> {
    let n = task.xtr.rows();
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch) {
            let xb = task.xtr.gather_rows(chunk);
            let yb: Vec<usize> = chunk.iter().map(|&i| task.ytr[i]).collect();
            let mut tape = Tape::new();
            let x = tape.constant(xb);
            let logits = mlp_logits(&mut tape, ps, mlp, x)?;
            let loss = tape.cross_entropy_loss(logits, &yb)?;
            tape.backward(loss, ps)?;
            sgd_step(ps, &cfg.sgd)?;
        }
    }
    Ok(())
}

fn eval_mlp(ps: &ParamSet, mlp: &Mlp, x: &Matrix, y: &[usize]) -> Result<f64> {
    let mut tape = Tape::new();
    let xn = tape.constant(x.clone());
    let logits = mlp_logits(&mut tape, ps, mlp, xn)?;
    accuracy(&argmax_rows(tape.value(logits)), y)
}

/// Trains one classifier per (width, seed) pair and gathers accuracy
/// statistics per width.
pub fn width_sweep(cfg: &WidthSweepConfig) -> Result<WidthSweepReport> {
    cfg.validate()?;
    let mut cells = Vec::with_capacity(cfg.widths.len());
    for &width in &cfg.widths {
        let mut train_accuracies = Vec::with_capacity(cfg.seeds.len());
        let mut test_accuracies = Vec::with_capacity(cfg.seeds.len());
        for &seed in &cfg.seeds {
            let task = make_task(cfg, seed)?;
            let mut ps = ParamSet::new();
            let mut init_rng = SplitMix64::stream(seed, "width-init");
            let mlp = init_mlp(&mut ps, width, cfg.ambient_dim, cfg.classes, &mut init_rng)?;
            let mut train_rng = SplitMix64::stream(seed, "width-train");
            train_mlp(&mut ps, &mlp, &task, cfg, &mut train_rng)?;
            train_accuracies.push(eval_mlp(&ps, &mlp, &task.xtr, &task.ytr)?);
            test_accuracies.push(eval_mlp(&ps, &mlp, &task.xte, &task.yte)?);
        }
        let mean_train = train_accuracies.iter().sum::<f64>() / train_accuracies.len() as f64;
        let mean_test = test_accuracies.iter().sum::<f64>() / test_accuracies.len() as f64;
        cells.push(WidthCell {
            width,
            train_accuracies,
            test_accuracies,
            mean_train,
            mean_test,
            generalization_ratio: mean_test / mean_train,
        });
    }
    Ok(WidthSweepReport { cells })
}

/// Latent centers of an equilateral triangle, a three-class task no single
/// hidden unit can solve.
pub fn triangle_centers(scale: f64) -> Matrix {
    let h = scale * 0.75_f64.sqrt();
    Matrix::from_vec(3, 2, vec![scale, 0.0, -scale / 2.0, h, -scale / 2.0, -h])
        .expect("static shape")
}
