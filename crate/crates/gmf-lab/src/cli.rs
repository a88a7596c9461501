//! Command-line front end: one entry point that wires flat configs to the
//! experiments and writes machine-readable artifacts.
//!
//! Every subcommand shares the same plumbing. Settings resolve in three
//! layers: built-in defaults, then a `--config FILE` of flat `key = value`
//! lines, then `--key value` flags. Unknown keys are rejected at every
//! layer with a message naming the key. Each run writes a CSV table and a
//! JSON document into the output directory (`--out`, else the
//! `GMF_LAB_OUT` environment variable, else `./runs`); both files land via
//! temp-and-rename, and a failed run removes whatever it had already
//! written. The JSON echoes the fully resolved config so a report is
//! always reproducible from its own metadata. Wall-clock timestamps exist
//! only in the JSON; CSV bodies are byte-identical across reruns of the
//! same argv.
//!
//! Exit codes: 0 success, 2 configuration error, 1 runtime failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::bench::synth::{generate_dataset, load_dataset, save_dataset, Dataset, SyntheticSpec};
use crate::bench::train::{
    missing_modality_eval, train_fusion, ExperimentReport, ExtractorMode, FusionMethod,
    TrainConfig,
};
use crate::entropy::mapping::{up_down_experiment, MappingExperimentConfig};
use crate::entropy::rank::{rank_trial, RankTrialConfig};
use crate::entropy::width::{triangle_centers, width_sweep, WidthSweepConfig};
use crate::error::{Error, Result};
use crate::gmf::GmfConfig;
use crate::pnp::PnpSystem;
use crate::report::{format_float, write_csv, write_json, CsvTable};
use crate::tensor::SgdConfig;

/// Environment variable consulted when `out` is left empty.
pub const OUT_ENV: &str = "GMF_LAB_OUT";
const DEFAULT_OUT: &str = "runs";

/// One registered setting: its key, default, and a help line.
#[derive(Debug, Clone, Copy)]
struct KeySpec {
    name: &'static str,
    default: &'static str,
    help: &'static str,
}

const COMMON_KEYS: &[KeySpec] = &[
    KeySpec {
        name: "seed",
        default: "0",
        help: "global seed; every component derives named substreams from it",
    },
    KeySpec {
        name: "out",
        default: "",
        help: "output directory (empty: $GMF_LAB_OUT, else ./runs)",
    },
];

const PARAM_COUNT_KEYS: &[KeySpec] = &[
    KeySpec { name: "dims", default: "512,512", help: "per-modality feature lengths" },
    KeySpec { name: "n", default: "4", help: "dissolving magnification (integer >= 2)" },
    KeySpec { name: "boundary", default: "0.5", help: "concentration boundary fraction in (0,1)" },
];

const RANK_SIM_KEYS: &[KeySpec] = &[
    KeySpec { name: "d", default: "8", help: "base dimension" },
    KeySpec { name: "n", default: "2", help: "magnification; sampled maps are floor(n*d) x d" },
    KeySpec { name: "trials", default: "1000", help: "number of sampled matrices" },
];

const UPDOWN_KEYS: &[KeySpec] = &[
    KeySpec { name: "dim", default: "16", help: "feature dimension of the probe task" },
    KeySpec { name: "classes", default: "16", help: "number of classes" },
    KeySpec { name: "mags", default: "0.5,1,2,4", help: "magnifications for the up-down maps" },
    KeySpec { name: "seeds", default: "3", help: "seed count; cells run at seed+1..seed+count" },
    KeySpec { name: "train", default: "2000", help: "training samples per seed" },
    KeySpec { name: "test", default: "2000", help: "test samples per seed" },
    KeySpec { name: "epochs", default: "40", help: "probe training epochs" },
    KeySpec { name: "batch", default: "64", help: "minibatch size" },
    KeySpec { name: "margin", default: "0.25", help: "top-two logit gap required of sampled data" },
];

const DIM_SWEEP_KEYS: &[KeySpec] = &[
    KeySpec { name: "classes", default: "3", help: "number of classes" },
    KeySpec { name: "k", default: "2", help: "intrinsic dimension of the class clusters" },
    KeySpec { name: "ambient", default: "16", help: "observed feature dimension" },
    KeySpec { name: "widths", default: "1,2,4,8,16,32,64", help: "hidden widths to sweep" },
    KeySpec { name: "seeds", default: "3", help: "seed count; cells run at seed+1..seed+count" },
    KeySpec { name: "train", default: "600", help: "training samples per seed" },
    KeySpec { name: "test", default: "600", help: "test samples per seed" },
    KeySpec { name: "epochs", default: "30", help: "training epochs" },
    KeySpec { name: "batch", default: "64", help: "minibatch size" },
    KeySpec { name: "noise", default: "0", help: "training label corruption rate in [0,1)" },
    KeySpec { name: "center-scale", default: "3", help: "cluster center scale" },
    KeySpec { name: "spread", default: "1", help: "within-cluster spread" },
    KeySpec { name: "task", default: "blobs", help: "latent layout: blobs | triangle" },
    KeySpec { name: "plateau-tol", default: "0.02", help: "tolerance for the plateau detector" },
];

const PNP_SOLVE_KEYS: &[KeySpec] = &[
    KeySpec { name: "length", default: "1", help: "cell length" },
    KeySpec { name: "cells", default: "80", help: "number of finite-volume cells" },
    KeySpec { name: "eps0", default: "0.005", help: "nondimensional permittivity" },
    KeySpec { name: "u0", default: "1", help: "electrode potential; phi(0)=+u0, phi(L)=-u0" },
    KeySpec { name: "diffusivity", default: "1", help: "shared species diffusivity" },
    KeySpec { name: "c0", default: "1", help: "bulk concentration of each species" },
    KeySpec { name: "mode", default: "steady", help: "steady | transient" },
    KeySpec { name: "dt", default: "1e-5", help: "time step (transient mode)" },
    KeySpec { name: "steps", default: "1000", help: "number of steps (transient mode)" },
];

const TRAIN_KEYS: &[KeySpec] = &[
    KeySpec { name: "method", default: "gmf", help: "concat-baseline | gmf | gmf-no-barrier" },
    KeySpec { name: "extractor", default: "frozen-identity", help: "frozen-identity | trainable" },
    KeySpec { name: "epochs", default: "20", help: "training epochs" },
    KeySpec { name: "batch", default: "64", help: "minibatch size" },
    KeySpec { name: "lambda", default: "1", help: "dissociation loss weight" },
    KeySpec { name: "lr", default: "0.01", help: "SGD learning rate" },
    KeySpec { name: "momentum", default: "0.9", help: "SGD momentum" },
    KeySpec { name: "weight-decay", default: "0.0001", help: "SGD weight decay" },
    KeySpec { name: "magnification", default: "4", help: "fusion dissolving magnification" },
    KeySpec { name: "boundary", default: "0.5", help: "fusion concentration boundary fraction" },
    KeySpec { name: "shared-dim", default: "8", help: "shared latent dimension k_s" },
    KeySpec { name: "specific-dims", default: "8,8", help: "per-modality private latent dims" },
    KeySpec { name: "observed-dims", default: "32,32", help: "per-modality observed dims" },
    KeySpec { name: "noise", default: "0.1", help: "observation noise sigma" },
    KeySpec { name: "classes", default: "4", help: "number of classes" },
    KeySpec { name: "samples", default: "4000", help: "dataset size" },
    KeySpec { name: "train-fraction", default: "0.7", help: "per-class train split fraction" },
    KeySpec { name: "label-margin", default: "0", help: "required top-two logit gap of the rule" },
    KeySpec { name: "imbalance", default: "", help: "largest-to-smallest class ratio (empty: iid)" },
    KeySpec {
        name: "dataset-cache",
        default: "",
        help: "directory holding dataset.ckpt/dataset.json; generated on first use",
    },
];

/// How a finished handler wants the process to end. `Failed` keeps its
/// (complete) artifacts as diagnostics but still exits nonzero.
enum Outcome {
    Success,
    Failed(String),
}

/// Runs one CLI invocation in-process; `args` excludes the program name.
/// Returns the intended process exit code.
pub fn run(args: &[String]) -> i32 {
    match run_inner(args) {
        Ok(Outcome::Success) => 0,
        Ok(Outcome::Failed(msg)) => {
            eprintln!("gmf-lab: run failed: {msg}");
            1
        }
        Err(e) => {
            eprintln!("gmf-lab: {e}");
            match e {
                Error::Config(_) => 2,
                _ => 1,
            }
        }
    }
}

fn run_inner(args: &[String]) -> Result<Outcome> {
    let Some(cmd) = args.first() else {
        return Err(Error::Config(format!(
            "missing subcommand\n\n{}",
            usage()
        )));
    };
    if cmd == "help" || cmd == "--help" || cmd == "-h" {
        println!("{}", usage());
        return Ok(Outcome::Success);
    }
    let keys = keys_for(cmd).ok_or_else(|| {
        Error::Config(format!("unknown subcommand `{cmd}`\n\n{}", usage()))
    })?;
    let cfg = resolve_config(cmd, &keys, &args[1..])?;
    let mut sink = Sink::new(Path::new(&cfg["out"]));
    let result = match cmd.as_str() {
        "param-count" => cmd_param_count(&cfg, &mut sink),
        "rank-sim" => cmd_rank_sim(&cfg, &mut sink),
        "updown" => cmd_updown(&cfg, &mut sink),
        "dim-sweep" => cmd_dim_sweep(&cfg, &mut sink),
        "pnp-solve" => cmd_pnp_solve(&cfg, &mut sink),
        "gmf-train" => cmd_gmf_train(&cfg, &mut sink),
        "eval-missing" => cmd_eval_missing(&cfg, &mut sink),
        _ => unreachable!("keys_for accepted the name"),
    };
    if result.is_err() {
        sink.discard_all();
    }
    result
}

fn keys_for(cmd: &str) -> Option<Vec<KeySpec>> {
    let specific: &[KeySpec] = match cmd {
        "param-count" => PARAM_COUNT_KEYS,
        "rank-sim" => RANK_SIM_KEYS,
        "updown" => UPDOWN_KEYS,
        "dim-sweep" => DIM_SWEEP_KEYS,
        "pnp-solve" => PNP_SOLVE_KEYS,
        "gmf-train" | "eval-missing" => TRAIN_KEYS,
        _ => return None,
    };
    let mut keys = COMMON_KEYS.to_vec();
    keys.extend_from_slice(specific);
    Some(keys)
}

fn usage() -> String {
    let mut s = String::from(
        "usage: gmf-lab <subcommand> [--config FILE] [--key value]...\n\
         \n\
         Settings resolve defaults < config file < flags; unknown keys are\n\
         rejected. Config files hold flat `key = value` lines ('#' comments).\n\
         Artifacts: <out>/<subcommand>.csv and .json.\n",
    );
    for cmd in [
        "param-count",
        "rank-sim",
        "updown",
        "dim-sweep",
        "pnp-solve",
        "gmf-train",
        "eval-missing",
    ] {
        s.push_str(&format!("\n{cmd}\n"));
        for k in keys_for(cmd).expect("listed command") {
            s.push_str(&format!(
                "  --{:<14} {} [default: {}]\n",
                k.name,
                k.help,
                if k.default.is_empty() { "(empty)" } else { k.default }
            ));
        }
    }
    s
}

/// Layered key resolution with fail-closed key checking.
fn resolve_config(
    cmd: &str,
    keys: &[KeySpec],
    args: &[String],
) -> Result<BTreeMap<String, String>> {
    let known = |k: &str| keys.iter().any(|s| s.name == k);
    let unknown = |k: &str| {
        let names: Vec<&str> = keys.iter().map(|s| s.name).collect();
        Error::Config(format!(
            "unknown key `{k}` for `{cmd}` (known keys: {})",
            names.join(", ")
        ))
    };

    // Flags first, so a --config file loads before the remaining flags
    // override it.
    let mut flag_pairs: Vec<(String, String)> = Vec::new();
    let mut config_path: Option<String> = None;
    let mut i = 0;
    while i < args.len() {
        let arg = &args[i];
        let Some(body) = arg.strip_prefix("--") else {
            return Err(Error::Config(format!(
                "unexpected positional argument `{arg}` (flags look like --key value)"
            )));
        };
        let (key, value) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                i += 1;
                let Some(v) = args.get(i) else {
                    return Err(Error::Config(format!("flag --{body} is missing its value")));
                };
                (body.to_string(), v.clone())
            }
        };
        if key == "config" {
            config_path = Some(value);
        } else if known(&key) {
            flag_pairs.push((key, value));
        } else {
            return Err(unknown(&key));
        }
        i += 1;
    }

    let mut cfg: BTreeMap<String, String> = keys
        .iter()
        .map(|k| (k.name.to_string(), k.default.to_string()))
        .collect();
    if let Some(path) = config_path {
        for (key, value) in parse_config_file(&path)? {
            if !known(&key) {
                return Err(unknown(&key));
            }
            cfg.insert(key, value);
        }
    }
    for (key, value) in flag_pairs {
        cfg.insert(key, value);
    }

    // Resolve the output directory here so the echoed config names the
    // directory actually used.
    if cfg["out"].is_empty() {
        let dir = std::env::var(OUT_ENV).unwrap_or_else(|_| DEFAULT_OUT.to_string());
        cfg.insert("out".into(), dir);
    }
    Ok(cfg)
}

fn parse_config_file(path: &str) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config file {path}: {e}")))?;
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "{path}:{}: expected `key = value`, got `{line}`",
                lineno + 1
            )));
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

// ---------------------------------------------------------------------------
// Typed accessors. Every parse failure names the key it came from.

fn get_u64(cfg: &BTreeMap<String, String>, key: &str) -> Result<u64> {
    cfg[key]
        .parse()
        .map_err(|_| Error::Config(format!("key `{key}`: expected an integer, got `{}`", cfg[key])))
}

fn get_usize(cfg: &BTreeMap<String, String>, key: &str) -> Result<usize> {
    cfg[key]
        .parse()
        .map_err(|_| Error::Config(format!("key `{key}`: expected an integer, got `{}`", cfg[key])))
}

fn get_f64(cfg: &BTreeMap<String, String>, key: &str) -> Result<f64> {
    cfg[key]
        .parse()
        .map_err(|_| Error::Config(format!("key `{key}`: expected a number, got `{}`", cfg[key])))
}

fn get_usize_list(cfg: &BTreeMap<String, String>, key: &str) -> Result<Vec<usize>> {
    cfg[key]
        .split(',')
        .map(|s| {
            s.trim().parse().map_err(|_| {
                Error::Config(format!(
                    "key `{key}`: expected comma-separated integers, got `{}`",
                    cfg[key]
                ))
            })
        })
        .collect()
}

fn get_f64_list(cfg: &BTreeMap<String, String>, key: &str) -> Result<Vec<f64>> {
    cfg[key]
        .split(',')
        .map(|s| {
            s.trim().parse().map_err(|_| {
                Error::Config(format!(
                    "key `{key}`: expected comma-separated numbers, got `{}`",
                    cfg[key]
                ))
            })
        })
        .collect()
}

fn get_opt_f64(cfg: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>> {
    if cfg[key].is_empty() {
        Ok(None)
    } else {
        get_f64(cfg, key).map(Some)
    }
}

// ---------------------------------------------------------------------------
// Artifact sink: lazily creates the output directory, remembers what it
// wrote, and can take it all back after a failure.

struct Sink {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Sink {
    fn new(dir: &Path) -> Sink {
        Sink {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        }
    }

    fn ensure_dir(&self) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        Ok(())
    }

    fn csv(&mut self, name: &str, table: &CsvTable) -> Result<PathBuf> {
        self.ensure_dir()?;
        let path = self.dir.join(format!("{name}.csv"));
        write_csv(&path, table)?;
        self.written.push(path.clone());
        Ok(path)
    }

    fn json(&mut self, name: &str, doc: &serde_json::Value) -> Result<PathBuf> {
        self.ensure_dir()?;
        let path = self.dir.join(format!("{name}.json"));
        write_json(&path, doc)?;
        self.written.push(path.clone());
        Ok(path)
    }

    fn discard_all(&mut self) {
        for path in self.written.drain(..) {
            let _ = fs::remove_file(path);
        }
    }
}

fn now_unix_seconds() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Standard report envelope: command name, echoed config, timestamp,
/// results. The timestamp is the only non-reproducible field.
fn report_doc(
    command: &str,
    cfg: &BTreeMap<String, String>,
    results: serde_json::Value,
) -> serde_json::Value {
    serde_json::json!({
        "command": command,
        "config": cfg,
        "created_unix_seconds": now_unix_seconds(),
        "results": results,
    })
}

fn opt_float_cell(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

// ---------------------------------------------------------------------------
// Subcommands.

fn cmd_param_count(cfg: &BTreeMap<String, String>, sink: &mut Sink) -> Result<Outcome> {
    let dims = get_usize_list(cfg, "dims")?;
    let mut fusion = GmfConfig::new(dims);
    fusion.magnification = get_usize(cfg, "n")?;
    fusion.boundary_fraction = get_f64(cfg, "boundary")?;
    fusion.validate()?;
    let params = fusion.param_count();
    let flops = fusion.flops_estimate();

    let mut table = CsvTable::new(&["dims", "n", "boundary", "parameters", "flops_per_sample"]);
    table.push(vec![
        cfg["dims"].clone(),
        fusion.magnification.to_string(),
        format_float(fusion.boundary_fraction),
        params.to_string(),
        format_float(flops),
    ])?;
    sink.csv("param-count", &table)?;
    sink.json(
        "param-count",
        &report_doc(
            "param-count",
            cfg,
            serde_json::json!({
                "parameters": params,
                "flops_per_sample": flops,
                "invariant_len": fusion.invariant_len(),
                "fused_lens": (0..fusion.modalities())
                    .map(|j| fusion.fused_len(j))
                    .collect::<Vec<_>>(),
            }),
        ),
    )?;
    println!("{params}");
    Ok(Outcome::Success)
}

fn cmd_rank_sim(cfg: &BTreeMap<String, String>, sink: &mut Sink) -> Result<Outcome> {
    let trial_cfg = RankTrialConfig {
        d: get_usize(cfg, "d")?,
        n: get_f64(cfg, "n")?,
        trials: get_usize(cfg, "trials")?,
        seed: get_u64(cfg, "seed")?,
    };
    let result = rank_trial(&trial_cfg)?;

    let mut table = CsvTable::new(&[
        "d",
        "n",
        "rows",
        "trials",
        "full_rank_fraction",
        "rank_d_fraction",
        "mean_rank",
    ]);
    table.push(vec![
        trial_cfg.d.to_string(),
        format_float(trial_cfg.n),
        result.rows.to_string(),
        trial_cfg.trials.to_string(),
        format_float(result.full_rank_fraction),
        format_float(result.rank_d_fraction),
        format_float(result.mean_rank),
    ])?;
    sink.csv("rank-sim", &table)?;
    sink.json(
        "rank-sim",
        &report_doc(
            "rank-sim",
            cfg,
            serde_json::json!({
                "rows": result.rows,
                "cols": result.cols,
                "full_rank_fraction": result.full_rank_fraction,
                "rank_d_fraction": result.rank_d_fraction,
                "mean_rank": result.mean_rank,
            }),
        ),
    )?;
    println!(
        "{} x {} maps: full-rank fraction {}, rank-{} fraction {} over {} trials",
        result.rows,
        result.cols,
        result.full_rank_fraction,
        trial_cfg.d,
        result.rank_d_fraction,
        trial_cfg.trials
    );
    Ok(Outcome::Success)
}

/// Seeds used by the multi-seed experiments: `count` consecutive values
/// starting just above the global seed.
fn seed_list(base: u64, count: usize) -> Vec<u64> {
    (1..=count as u64).map(|i| base + i).collect()
}

fn cmd_updown(cfg: &BTreeMap<String, String>, sink: &mut Sink) -> Result<Outcome> {
    let seeds = seed_list(get_u64(cfg, "seed")?, get_usize(cfg, "seeds")?);
    let exp_cfg = MappingExperimentConfig {
        feature_dim: get_usize(cfg, "dim")?,
        classes: get_usize(cfg, "classes")?,
        magnifications: get_f64_list(cfg, "mags")?,
        seeds: seeds.clone(),
        train_samples: get_usize(cfg, "train")?,
        test_samples: get_usize(cfg, "test")?,
        epochs: get_usize(cfg, "epochs")?,
        batch: get_usize(cfg, "batch")?,
        margin: get_f64(cfg, "margin")?,
        sgd: SgdConfig::default(),
    };
    let report = up_down_experiment(&exp_cfg)?;

    let mut table = CsvTable::new(&["cell", "magnification", "record", "seed", "accuracy"]);
    for cell in &report.cells {
        let mag = opt_float_cell(cell.magnification);
        for (s, &acc) in seeds.iter().zip(cell.accuracies.iter()) {
            table.push(vec![
                cell.label.clone(),
                mag.clone(),
                "seed".into(),
                s.to_string(),
                format_float(acc),
            ])?;
        }
        for (record, value) in [("mean", cell.mean), ("min", cell.min), ("max", cell.max)] {
            table.push(vec![
                cell.label.clone(),
                mag.clone(),
                record.into(),
                String::new(),
                format_float(value),
            ])?;
        }
    }
    sink.csv("updown", &table)?;

    let cells_json: Vec<serde_json::Value> = report
        .cells
        .iter()
        .map(|c| {
            serde_json::json!({
                "label": c.label,
                "magnification": c.magnification,
                "accuracies": c.accuracies,
                "mean": c.mean,
                "min": c.min,
                "max": c.max,
            })
        })
        .collect();
    sink.json(
        "updown",
        &report_doc("updown", cfg, serde_json::json!({ "cells": cells_json })),
    )?;
    for cell in &report.cells {
        println!(
            "{}: mean accuracy {:.4} (min {:.4}, max {:.4})",
            cell.label, cell.mean, cell.min, cell.max
        );
    }
    Ok(Outcome::Success)
}

fn cmd_dim_sweep(cfg: &BTreeMap<String, String>, sink: &mut Sink) -> Result<Outcome> {
    let mut sweep_cfg = WidthSweepConfig {
        classes: get_usize(cfg, "classes")?,
        intrinsic_dim: get_usize(cfg, "k")?,
        ambient_dim: get_usize(cfg, "ambient")?,
        widths: get_usize_list(cfg, "widths")?,
        seeds: seed_list(get_u64(cfg, "seed")?, get_usize(cfg, "seeds")?),
        train_samples: get_usize(cfg, "train")?,
        test_samples: get_usize(cfg, "test")?,
        epochs: get_usize(cfg, "epochs")?,
        batch: get_usize(cfg, "batch")?,
        label_noise: get_f64(cfg, "noise")?,
        center_scale: get_f64(cfg, "center-scale")?,
        cluster_spread: get_f64(cfg, "spread")?,
        centers: None,
        sgd: SgdConfig::default(),
    };
    match cfg["task"].as_str() {
        "blobs" => {}
        "triangle" => {
            if sweep_cfg.classes != 3 || sweep_cfg.intrinsic_dim != 2 {
                return Err(Error::Config(
                    "key `task`: triangle requires classes=3 and k=2".into(),
                ));
            }
            sweep_cfg.centers = Some(triangle_centers(sweep_cfg.center_scale));
        }
        other => {
            return Err(Error::Config(format!(
                "key `task`: expected blobs or triangle, got `{other}`"
            )));
        }
    }
    let tol = get_f64(cfg, "plateau-tol")?;
    let report = width_sweep(&sweep_cfg)?;

    let mut table = CsvTable::new(&[
        "width",
        "record",
        "seed",
        "train_accuracy",
        "test_accuracy",
        "generalization_ratio",
    ]);
    for cell in &report.cells {
        for (i, s) in sweep_cfg.seeds.iter().enumerate() {
            table.push(vec![
                cell.width.to_string(),
                "seed".into(),
                s.to_string(),
                format_float(cell.train_accuracies[i]),
                format_float(cell.test_accuracies[i]),
                String::new(),
            ])?;
        }
        table.push(vec![
            cell.width.to_string(),
            "mean".into(),
            String::new(),
            format_float(cell.mean_train),
            format_float(cell.mean_test),
            format_float(cell.generalization_ratio),
        ])?;
    }
    sink.csv("dim-sweep", &table)?;

    let cells_json: Vec<serde_json::Value> = report
        .cells
        .iter()
        .map(|c| {
            serde_json::json!({
                "width": c.width,
                "mean_train": c.mean_train,
                "mean_test": c.mean_test,
                "generalization_ratio": c.generalization_ratio,
            })
        })
        .collect();
    sink.json(
        "dim-sweep",
        &report_doc(
            "dim-sweep",
            cfg,
            serde_json::json!({
                "cells": cells_json,
                "best_mean_test": report.best_mean_test(),
                "plateau_tolerance": tol,
                "plateau_width": report.plateau_width(tol),
            }),
        ),
    )?;
    for cell in &report.cells {
        println!(
            "width {:>4}: train {:.4}, test {:.4}",
            cell.width, cell.mean_train, cell.mean_test
        );
    }
    match report.plateau_width(tol) {
        Some(w) => println!("test accuracy plateaus from width {w} (tolerance {tol})"),
        None => println!("no plateau within tolerance {tol}"),
    }
    Ok(Outcome::Success)
}

fn cmd_pnp_solve(cfg: &BTreeMap<String, String>, sink: &mut Sink) -> Result<Outcome> {
    let system = PnpSystem::symmetric_binary(
        get_f64(cfg, "length")?,
        get_usize(cfg, "cells")?,
        get_f64(cfg, "eps0")?,
        get_f64(cfg, "u0")?,
        get_f64(cfg, "diffusivity")?,
        get_f64(cfg, "c0")?,
    );
    system.validate()?;

    let mode = cfg["mode"].clone();
    let (state, results, summary_line) = match mode.as_str() {
        "steady" => {
            let (state, steady) = system.solve_steady()?;
            let mut worst_nernst: f64 = 0.0;
            for p in 0..system.species.len() {
                for i1 in 0..system.cells {
                    for i2 in (i1 + 1)..system.cells {
                        worst_nernst = worst_nernst.max(system.nernst_check(&state, p, i1, i2)?);
                    }
                }
            }
            let results = serde_json::json!({
                "mode": "steady",
                "steps": steady.steps,
                "change_rate": steady.change_rate,
                "max_flux": steady.max_flux,
                "poisson_residual": system.poisson_residual(&state.phi, &state.conc),
                "nernst_max_deviation": worst_nernst,
                "total_mass": (0..system.species.len())
                    .map(|p| system.total_mass(&state, p))
                    .collect::<Vec<_>>(),
                "phi_zero_crossing": system.phi_zero_crossing(&state),
            });
            let line = format!(
                "steady state after {} steps: max flux {:.2e}, worst Nernst deviation {:.2e}",
                steady.steps, steady.max_flux, worst_nernst
            );
            (state, results, line)
        }
        "transient" => {
            let dt = get_f64(cfg, "dt")?;
            let steps = get_usize(cfg, "steps")?;
            let initial = system.initial_state()?;
            let mass0: Vec<f64> = (0..system.species.len())
                .map(|p| system.total_mass(&initial, p))
                .collect();
            let mut state = initial;
            for _ in 0..steps {
                state = system.transient_step(&state, dt)?;
            }
            let mass: Vec<f64> = (0..system.species.len())
                .map(|p| system.total_mass(&state, p))
                .collect();
            let drift = mass
                .iter()
                .zip(mass0.iter())
                .map(|(a, b)| (a - b).abs() / b.abs().max(1e-30))
                .fold(0.0f64, f64::max);
            let results = serde_json::json!({
                "mode": "transient",
                "steps": steps,
                "time": state.time,
                "max_flux": system.max_abs_flux(&state),
                "poisson_residual": system.poisson_residual(&state.phi, &state.conc),
                "total_mass": mass,
                "mass_drift": drift,
                "phi_zero_crossing": system.phi_zero_crossing(&state),
            });
            let line = format!(
                "transient: {} steps to t = {:.3e}, relative mass drift {:.2e}",
                steps, state.time, drift
            );
            (state, results, line)
        }
        other => {
            return Err(Error::Config(format!(
                "key `mode`: expected steady or transient, got `{other}`"
            )));
        }
    };

    let mut table = CsvTable::new(&["x", "phi", "c_pos", "c_neg"]);
    for i in 0..system.cells {
        table.push(vec![
            format_float(system.x_center(i)),
            format_float(system.phi_center(&state.phi, i)),
            format_float(state.conc[0][i]),
            format_float(state.conc[1][i]),
        ])?;
    }
    sink.csv("pnp-solve", &table)?;
    sink.json("pnp-solve", &report_doc("pnp-solve", cfg, results))?;
    println!("{summary_line}");
    Ok(Outcome::Success)
}

// ---------------------------------------------------------------------------
// Fusion benchmark commands.

fn build_spec(cfg: &BTreeMap<String, String>) -> Result<SyntheticSpec> {
    let specific_dims = get_usize_list(cfg, "specific-dims")?;
    let observed_dims = get_usize_list(cfg, "observed-dims")?;
    if specific_dims.len() != observed_dims.len() {
        return Err(Error::Config(format!(
            "keys `specific-dims` and `observed-dims` must list the same number of modalities, got {} and {}",
            specific_dims.len(),
            observed_dims.len()
        )));
    }
    let spec = SyntheticSpec {
        modalities: observed_dims.len(),
        shared_dim: get_usize(cfg, "shared-dim")?,
        specific_dims,
        observed_dims,
        noise: get_f64(cfg, "noise")?,
        classes: get_usize(cfg, "classes")?,
        samples: get_usize(cfg, "samples")?,
        train_fraction: get_f64(cfg, "train-fraction")?,
        label_margin: get_f64(cfg, "label-margin")?,
        imbalance: get_opt_f64(cfg, "imbalance")?,
    };
    spec.validate()?;
    Ok(spec)
}

fn build_train_config(cfg: &BTreeMap<String, String>) -> Result<TrainConfig> {
    let method = FusionMethod::parse(&cfg["method"])
        .map_err(|e| Error::Config(format!("key `method`: {e}")))?;
    let extractor = ExtractorMode::parse(&cfg["extractor"])
        .map_err(|e| Error::Config(format!("key `extractor`: {e}")))?;
    let mut train = TrainConfig::new(method);
    train.extractor = extractor;
    train.epochs = get_usize(cfg, "epochs")?;
    train.batch = get_usize(cfg, "batch")?;
    train.lambda = get_f64(cfg, "lambda")?;
    train.seed = get_u64(cfg, "seed")?;
    train.sgd = SgdConfig {
        lr: get_f64(cfg, "lr")?,
        momentum: get_f64(cfg, "momentum")?,
        weight_decay: get_f64(cfg, "weight-decay")?,
    };
    train.validate()?;
    Ok(train)
}

fn build_fusion_config(
    cfg: &BTreeMap<String, String>,
    spec: &SyntheticSpec,
    method: FusionMethod,
) -> Result<Option<GmfConfig>> {
    if !method.uses_gmf() {
        return Ok(None);
    }
    let mut fusion = GmfConfig::new(spec.observed_dims.clone());
    fusion.magnification = get_usize(cfg, "magnification")?;
    fusion.boundary_fraction = get_f64(cfg, "boundary")?;
    fusion.lambda = get_f64(cfg, "lambda")?;
    fusion.barrier_enabled = method == FusionMethod::Gmf;
    fusion.validate()?;
    Ok(Some(fusion))
}

/// Loads the dataset from the cache directory when one is configured (and
/// already populated), otherwise generates it, populating the cache on the
/// way out. A cache holding a different spec or seed is rejected rather
/// than silently regenerated.
fn obtain_dataset(cfg: &BTreeMap<String, String>, spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    let cache = cfg["dataset-cache"].clone();
    if cache.is_empty() {
        return generate_dataset(spec, seed);
    }
    let dir = Path::new(&cache);
    let name = "dataset";
    if dir.join(format!("{name}.ckpt")).exists() {
        let ds = load_dataset(dir, name)?;
        let same_spec = serde_json::to_string(&ds.spec).ok() == serde_json::to_string(spec).ok();
        if !same_spec || ds.seed != seed {
            return Err(Error::Config(format!(
                "key `dataset-cache`: {} holds a dataset for a different spec or seed; \
                 point it elsewhere or delete it",
                dir.display()
            )));
        }
        return Ok(ds);
    }
    let ds = generate_dataset(spec, seed)?;
    fs::create_dir_all(dir)?;
    save_dataset(&ds, dir, name)?;
    Ok(ds)
}

fn epoch_csv(report: &ExperimentReport) -> Result<CsvTable> {
    let mut table = CsvTable::new(&[
        "epoch",
        "task_loss",
        "dis_loss",
        "train_accuracy",
        "test_accuracy",
    ]);
    for e in &report.epochs {
        table.push(vec![
            e.epoch.to_string(),
            format_float(e.mean_task_loss),
            opt_float_cell(e.mean_dis_loss),
            format_float(e.train_accuracy),
            format_float(e.test_accuracy),
        ])?;
    }
    Ok(table)
}

fn train_summary_json(report: &ExperimentReport) -> serde_json::Value {
    serde_json::json!({
        "method": report.method.as_str(),
        "extractor": report.extractor.as_str(),
        "lambda": report.lambda,
        "seed": report.seed,
        "parameter_scalars": report.parameter_scalars,
        "epochs_run": report.epochs.len(),
        "initial_dis_loss": report.initial_dis_loss,
        "final_dis_loss": report.final_dis_loss,
        "final_train_accuracy": report.final_train_accuracy,
        "final_test_accuracy": report.final_test_accuracy,
        "diverged": report.diverged,
    })
}

fn cmd_gmf_train(cfg: &BTreeMap<String, String>, sink: &mut Sink) -> Result<Outcome> {
    let spec = build_spec(cfg)?;
    let train_cfg = build_train_config(cfg)?;
    let fusion_cfg = build_fusion_config(cfg, &spec, train_cfg.method)?;
    let dataset = obtain_dataset(cfg, &spec, train_cfg.seed)?;
    let (_, report) = train_fusion(&dataset, &train_cfg, fusion_cfg)?;

    sink.csv("gmf-train", &epoch_csv(&report)?)?;
    sink.json(
        "gmf-train",
        &report_doc("gmf-train", cfg, train_summary_json(&report)),
    )?;
    for e in &report.epochs {
        let dis = e
            .mean_dis_loss
            .map(|v| format!(", dissociation {v:.4}"))
            .unwrap_or_default();
        println!(
            "epoch {:>3}: task loss {:.4}{dis}, train {:.4}, test {:.4}",
            e.epoch, e.mean_task_loss, e.train_accuracy, e.test_accuracy
        );
    }
    if let Some(reason) = &report.diverged {
        return Ok(Outcome::Failed(format!("training diverged: {reason}")));
    }
    println!(
        "final: train {:.4}, test {:.4} ({} scalars)",
        report.final_train_accuracy, report.final_test_accuracy, report.parameter_scalars
    );
    Ok(Outcome::Success)
}

fn cmd_eval_missing(cfg: &BTreeMap<String, String>, sink: &mut Sink) -> Result<Outcome> {
    let spec = build_spec(cfg)?;
    let train_cfg = build_train_config(cfg)?;
    let fusion_cfg = build_fusion_config(cfg, &spec, train_cfg.method)?;
    let dataset = obtain_dataset(cfg, &spec, train_cfg.seed)?;
    let (model, report) = train_fusion(&dataset, &train_cfg, fusion_cfg)?;

    let mut table = CsvTable::new(&["dropped", "accuracy", "auc"]);
    let mut evals_json: Vec<serde_json::Value> = Vec::new();
    if report.diverged.is_none() {
        let mut scenarios: Vec<Option<usize>> = vec![None];
        scenarios.extend((0..spec.modalities).map(Some));
        for dropped in scenarios {
            let m = missing_modality_eval(&model, &dataset, dropped)?;
            table.push(vec![
                m.dropped.map(|j| j.to_string()).unwrap_or_default(),
                format_float(m.accuracy),
                opt_float_cell(m.auc),
            ])?;
            evals_json.push(serde_json::json!({
                "dropped": m.dropped,
                "accuracy": m.accuracy,
                "auc": m.auc,
            }));
            let label = m
                .dropped
                .map(|j| format!("modality {j} zeroed"))
                .unwrap_or_else(|| "all modalities".into());
            let auc = m.auc.map(|v| format!(", auc {v:.4}")).unwrap_or_default();
            println!("{label}: accuracy {:.4}{auc}", m.accuracy);
        }
    }
    sink.csv("eval-missing", &table)?;
    sink.json(
        "eval-missing",
        &report_doc(
            "eval-missing",
            cfg,
            serde_json::json!({
                "train": train_summary_json(&report),
                "evaluations": evals_json,
            }),
        ),
    )?;
    if let Some(reason) = &report.diverged {
        return Ok(Outcome::Failed(format!("training diverged: {reason}")));
    }
    Ok(Outcome::Success)
}
