//! Acceptance gate for the laboratory.
//!
//! Each criterion below is a self-contained check of one deliverable, run
//! against the public API exactly as a user would call it. The gate prints
//! one line per criterion and exits nonzero if any of them fail or run over
//! their time budget. Checks are ordered from cheap structural facts to the
//! full training studies.

use std::time::Instant;

use gmf_lab::bench::synth::{generate_dataset, SyntheticSpec};
use gmf_lab::bench::train::{
    missing_modality_eval, train_dissociation_only, train_fusion, ExtractorMode, FusionMethod,
    TrainConfig,
};
use gmf_lab::entropy::mapping::{up_down_experiment, MappingExperimentConfig};
use gmf_lab::entropy::rank::{rank_trial, RankTrialConfig};
use gmf_lab::entropy::{histogram_entropy, mutual_information};
use gmf_lab::gmf::{gmf_forward, reconstruction_loss, GmfConfig, GmfParams};
use gmf_lab::pnp::PnpSystem;
use gmf_lab::tensor::{Matrix, ParamId, ParamSet, SgdConfig, SplitMix64, Tape};
use gmf_lab::{cli, Error};

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: Vec<(&str, Option<f64>, Check)> = vec![
        ("01 parameter counts", None, parameter_counts),
        ("02 flop estimates", None, flop_estimates),
        ("03 autodiff vs finite differences", Some(10.0), autodiff_suite),
        ("04 gradient barrier scoping", Some(1.0), barrier_suite),
        ("05 fusion structure laws", Some(5.0), structure_suite),
        ("06 dissociation trainability", Some(30.0), trainability),
        ("07 synthetic benchmark and ablation", Some(600.0), benchmark_suite),
        ("08 electrolytic cell physics", Some(60.0), electrolyte_suite),
        ("09 bottleneck mapping accuracy", Some(300.0), mapping_suite),
        ("10 random map rank law", Some(5.0), rank_suite),
        ("11 information estimators", Some(10.0), estimator_suite),
        ("12 rerun determinism", None, determinism),
    ];

    let mut failures = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed().as_secs_f64();
        let over_budget = budget.is_some_and(|b| elapsed > b);
        match outcome {
            Ok(detail) if !over_budget => {
                println!("criterion {name}: PASS [{elapsed:.1}s] {detail}");
            }
            Ok(detail) => {
                failures += 1;
                let b = budget.unwrap();
                println!(
                    "criterion {name}: FAIL [{elapsed:.1}s] over the {b:.0}s budget ({detail})"
                );
            }
            Err(reason) => {
                failures += 1;
                println!("criterion {name}: FAIL [{elapsed:.1}s] {reason}");
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ---------------------------------------------------------------------------
// 01: exact parameter counts for the three reference shapes, both through
// the library and through the CLI artifact.

fn parameter_counts() -> Result<String, String> {
    let expected: [(Vec<usize>, u64); 3] = [
        (vec![512, 512], 5_250_048),
        (vec![128, 128], 329_472),
        (vec![128, 4096], 119_202_816),
    ];
    for (dims, want) in &expected {
        let cfg = GmfConfig::new(dims.clone());
        let got = cfg.param_count();
        if got != *want {
            return Err(format!("dims {dims:?}: param_count {got}, expected {want}"));
        }

        // Count law: the instantiated parameter set has exactly that many
        // scalars.
        let mut params = ParamSet::new();
        let mut rng = SplitMix64::stream(1, "acceptance-params");
        GmfParams::init(&mut params, &cfg, &mut rng).map_err(fail)?;
        if params.scalar_count() as u64 != *want {
            return Err(format!(
                "dims {dims:?}: instantiated {} scalars, expected {want}",
                params.scalar_count()
            ));
        }

        // Same number through the command-line layer.
        let dir = tempfile::tempdir().map_err(fail)?;
        let dims_arg = dims
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let code = cli::run(&args([
            "param-count",
            "--dims",
            &dims_arg,
            "--n",
            "4",
            "--boundary",
            "0.5",
            "--out",
            dir.path().to_str().unwrap(),
        ]));
        if code != 0 {
            return Err(format!("param-count CLI exited with {code}"));
        }
        let doc = read_json(dir.path().join("param-count.json"))?;
        let got_cli = doc["results"]["parameters"]
            .as_u64()
            .ok_or("param-count.json lacks results.parameters")?;
        if got_cli != *want {
            return Err(format!("CLI reported {got_cli}, expected {want}"));
        }
    }
    Ok("5250048 / 329472 / 119202816, count law exact".into())
}

// ---------------------------------------------------------------------------
// 02: forward FLOP estimates sit on the published coarse values.

fn flop_estimates() -> Result<String, String> {
    let small = GmfConfig::new(vec![512, 512]).flops_estimate();
    if (small - 0.01e9).abs() > 0.005e9 {
        return Err(format!("dims [512,512]: {:.4}G not within 0.01G +- 0.005G", small / 1e9));
    }
    let large = GmfConfig::new(vec![128, 4096]).flops_estimate();
    if (large - 0.23e9).abs() > 0.01e9 {
        return Err(format!("dims [128,4096]: {:.4}G not within 0.23G +- 0.01G", large / 1e9));
    }
    Ok(format!("{:.4}G and {:.4}G per sample", small / 1e9, large / 1e9))
}

// ---------------------------------------------------------------------------
// 03: one hundred randomized graphs, every parameter gradient against
// central finite differences.
//
// A graph is generated as a plan (pure data) so it can be re-evaluated at
// perturbed parameter values. Every parameter also contributes a small
// linear term to the loss, so no gradient is identically zero and the
// relative-error test is meaningful everywhere.

#[derive(Clone, Copy)]
enum PlanOp {
    Relu(usize),
    Scale(usize, f64),
    Transpose(usize),
    Add(usize, usize),
    Sub(usize, usize),
    MulElem(usize, usize),
    Matmul(usize, usize),
    ConcatCols(usize, usize),
    SliceCols(usize, usize, usize),
}

enum Reduce {
    SumAll,
    Mse(Matrix),
    CrossEntropy(Vec<usize>),
}

struct GraphPlan {
    param_shapes: Vec<(usize, usize)>,
    constants: Vec<Matrix>,
    ops: Vec<PlanOp>,
    reduce: Reduce,
}

const MAX_DIM: usize = 8;

fn random_plan(rng: &mut SplitMix64) -> GraphPlan {
    let dim = |rng: &mut SplitMix64| 1 + rng.below(MAX_DIM);
    let param_shapes: Vec<(usize, usize)> = (0..1 + rng.below(2))
        .map(|_| (dim(rng), dim(rng)))
        .collect();
    let constants: Vec<Matrix> = (0..1 + rng.below(2))
        .map(|_| {
            let (r, c) = (dim(rng), dim(rng));
            let data: Vec<f64> = (0..r * c).map(|_| rng.uniform(-1.0, 1.0)).collect();
            Matrix::from_vec(r, c, data).unwrap()
        })
        .collect();

    let mut shapes: Vec<(usize, usize)> = param_shapes.clone();
    shapes.extend(constants.iter().map(|c| c.shape()));

    let mut ops = Vec::new();
    let steps = 4 + rng.below(5);
    for _ in 0..steps {
        let mut chosen = None;
        for _ in 0..50 {
            let i = rng.below(shapes.len());
            let (ri, ci) = shapes[i];
            let candidate = match rng.below(9) {
                0 => Some((PlanOp::Relu(i), (ri, ci))),
                1 => Some((PlanOp::Scale(i, rng.uniform(-1.5, 1.5)), (ri, ci))),
                2 => Some((PlanOp::Transpose(i), (ci, ri))),
                k @ 3..=5 => {
                    let j = rng.below(shapes.len());
                    (shapes[j] == (ri, ci)).then(|| {
                        let op = match k {
                            3 => PlanOp::Add(i, j),
                            4 => PlanOp::Sub(i, j),
                            _ => PlanOp::MulElem(i, j),
                        };
                        (op, (ri, ci))
                    })
                }
                6 => {
                    let j = rng.below(shapes.len());
                    (shapes[j].0 == ci).then(|| (PlanOp::Matmul(i, j), (ri, shapes[j].1)))
                }
                7 => {
                    let j = rng.below(shapes.len());
                    (shapes[j].0 == ri && ci + shapes[j].1 <= MAX_DIM)
                        .then(|| (PlanOp::ConcatCols(i, j), (ri, ci + shapes[j].1)))
                }
                _ => (ci >= 2).then(|| {
                    let start = rng.below(ci - 1);
                    let len = 1 + rng.below(ci - start);
                    (PlanOp::SliceCols(i, start, len), (ri, len))
                }),
            };
            if let Some((op, shape)) = candidate {
                chosen = Some((op, shape));
                break;
            }
        }
        let (op, shape) = chosen.unwrap_or_else(|| {
            let i = shapes.len() - 1;
            (PlanOp::Relu(i), shapes[i])
        });
        ops.push(op);
        shapes.push(shape);
    }

    let (rows, cols) = *shapes.last().unwrap();
    let reduce = match rng.below(3) {
        0 => Reduce::SumAll,
        1 => {
            let data: Vec<f64> = (0..rows * cols).map(|_| rng.uniform(-1.0, 1.0)).collect();
            Reduce::Mse(Matrix::from_vec(rows, cols, data).unwrap())
        }
        _ if cols >= 2 => Reduce::CrossEntropy((0..rows).map(|_| rng.below(cols)).collect()),
        _ => Reduce::SumAll,
    };

    GraphPlan { param_shapes, constants, ops, reduce }
}

fn eval_plan(plan: &GraphPlan, params: &ParamSet, ids: &[ParamId]) -> Result<f64, Error> {
    let mut tape = Tape::new();
    let mut nodes: Vec<_> = ids.iter().map(|&id| tape.param(params, id)).collect();
    for c in &plan.constants {
        nodes.push(tape.constant(c.clone()));
    }
    for op in &plan.ops {
        let node = match *op {
            PlanOp::Relu(i) => tape.relu(nodes[i]),
            PlanOp::Scale(i, c) => tape.scale(nodes[i], c),
            PlanOp::Transpose(i) => tape.transpose(nodes[i]),
            PlanOp::Add(i, j) => tape.add(nodes[i], nodes[j])?,
            PlanOp::Sub(i, j) => tape.sub(nodes[i], nodes[j])?,
            PlanOp::MulElem(i, j) => tape.mul_elem(nodes[i], nodes[j])?,
            PlanOp::Matmul(i, j) => tape.matmul(nodes[i], nodes[j])?,
            PlanOp::ConcatCols(i, j) => tape.concat_cols(&[nodes[i], nodes[j]])?,
            PlanOp::SliceCols(i, s, l) => tape.slice_cols(nodes[i], s, l)?,
        };
        nodes.push(node);
    }
    let last = *nodes.last().unwrap();
    let mut loss = match &plan.reduce {
        Reduce::SumAll => tape.sum_all(last),
        Reduce::Mse(target) => {
            let t = tape.constant(target.clone());
            tape.mse_loss(last, t)?
        }
        Reduce::CrossEntropy(labels) => tape.cross_entropy_loss(last, labels)?,
    };
    // Anchor terms: tie every parameter into the loss with slope 1/2.
    for &node in &nodes[..ids.len()] {
        let s = tape.sum_all(node);
        let anchored = tape.scale(s, 0.5);
        loss = tape.add(loss, anchored)?;
    }
    Ok(tape.value(loss).get(0, 0))
}

fn backward_plan(
    plan: &GraphPlan,
    params: &mut ParamSet,
    ids: &[ParamId],
) -> Result<(), Error> {
    let mut tape = Tape::new();
    let mut nodes: Vec<_> = ids.iter().map(|&id| tape.param(params, id)).collect();
    for c in &plan.constants {
        nodes.push(tape.constant(c.clone()));
    }
    for op in &plan.ops {
        let node = match *op {
            PlanOp::Relu(i) => tape.relu(nodes[i]),
            PlanOp::Scale(i, c) => tape.scale(nodes[i], c),
            PlanOp::Transpose(i) => tape.transpose(nodes[i]),
            PlanOp::Add(i, j) => tape.add(nodes[i], nodes[j])?,
            PlanOp::Sub(i, j) => tape.sub(nodes[i], nodes[j])?,
            PlanOp::MulElem(i, j) => tape.mul_elem(nodes[i], nodes[j])?,
            PlanOp::Matmul(i, j) => tape.matmul(nodes[i], nodes[j])?,
            PlanOp::ConcatCols(i, j) => tape.concat_cols(&[nodes[i], nodes[j]])?,
            PlanOp::SliceCols(i, s, l) => tape.slice_cols(nodes[i], s, l)?,
        };
        nodes.push(node);
    }
    let last = *nodes.last().unwrap();
    let mut loss = match &plan.reduce {
        Reduce::SumAll => tape.sum_all(last),
        Reduce::Mse(target) => {
            let t = tape.constant(target.clone());
            tape.mse_loss(last, t)?
        }
        Reduce::CrossEntropy(labels) => tape.cross_entropy_loss(last, labels)?,
    };
    for &node in &nodes[..ids.len()] {
        let s = tape.sum_all(node);
        let anchored = tape.scale(s, 0.5);
        loss = tape.add(loss, anchored)?;
    }
    tape.backward(loss, params)
}

fn autodiff_suite() -> Result<String, String> {
    let graphs = 100;
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    for g in 0..graphs {
        let mut rng = SplitMix64::stream(g, "acceptance-autodiff");
        let plan = random_plan(&mut rng);

        let mut params = ParamSet::new();
        let ids: Vec<ParamId> = plan
            .param_shapes
            .iter()
            .enumerate()
            .map(|(k, &(r, c))| {
                let data: Vec<f64> = (0..r * c).map(|_| rng.uniform(-1.0, 1.0)).collect();
                params.insert(format!("p{k}"), Matrix::from_vec(r, c, data).unwrap())
            })
            .collect::<Result<_, _>>()
            .map_err(fail)?;

        backward_plan(&plan, &mut params, &ids).map_err(fail)?;
        let analytic: Vec<Vec<f64>> = ids
            .iter()
            .map(|&id| params.get(id).grad.data().to_vec())
            .collect();

        let h = 1e-5;
        for (k, &id) in ids.iter().enumerate() {
            for e in 0..params.get(id).value.data().len() {
                let orig = params.get(id).value.data()[e];
                params.get_mut(id).value.data_mut()[e] = orig + h;
                let up = eval_plan(&plan, &params, &ids).map_err(fail)?;
                params.get_mut(id).value.data_mut()[e] = orig - h;
                let down = eval_plan(&plan, &params, &ids).map_err(fail)?;
                params.get_mut(id).value.data_mut()[e] = orig;
                let fd = (up - down) / (2.0 * h);
                let an = analytic[k][e];
                let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-8);
                if rel >= 1e-5 {
                    return Err(format!(
                        "graph {g}, param {k}, entry {e}: analytic {an} vs finite difference \
                         {fd} (relative error {rel:.2e})"
                    ));
                }
                worst = worst.max(rel);
                checked += 1;
            }
        }
    }
    Ok(format!(
        "{graphs} graphs, {checked} gradient entries, worst relative error {worst:.1e}"
    ))
}

// ---------------------------------------------------------------------------
// 04: the dissociation loss must not reach upstream of the features when
// the barrier is on, while the task loss always does.

struct BarrierProbe {
    params: ParamSet,
    extractor_ids: Vec<ParamId>,
    dis_loss_grads_upstream: bool,
    task_loss_grads_upstream: bool,
    map_grads_move_under_dis: bool,
}

fn barrier_probe(barrier_enabled: bool) -> Result<BarrierProbe, Error> {
    let raw_dims = [4usize, 6];
    let feat_dims = vec![5usize, 7];
    let batch = 3;

    let mut rng = SplitMix64::stream(17, "acceptance-barrier");
    let mut params = ParamSet::new();
    let mut extractor_ids = Vec::new();
    for (j, &raw) in raw_dims.iter().enumerate() {
        let w = params.insert_linear_weight(format!("ext.{j}"), feat_dims[j], raw, &mut rng)?;
        let b = params.insert_bias(format!("ext.{j}.bias"), feat_dims[j], raw, &mut rng)?;
        extractor_ids.push(w);
        extractor_ids.push(b);
    }
    let mut cfg = GmfConfig::new(feat_dims.clone());
    cfg.barrier_enabled = barrier_enabled;
    let gmf = GmfParams::init(&mut params, &cfg, &mut rng)?;

    let mut tape = Tape::new();
    let mut feats = Vec::new();
    for (j, &raw) in raw_dims.iter().enumerate() {
        let x = tape.constant(Matrix::standard_normal(batch, raw, &mut rng));
        let w = tape.param(&params, extractor_ids[2 * j]);
        let b = tape.param(&params, extractor_ids[2 * j + 1]);
        feats.push(tape.linear(x, w, b)?);
    }
    let out = gmf_forward(&mut tape, &params, &gmf, &cfg, &feats)?;
    let dis = reconstruction_loss(&mut tape, &out, &feats)?;
    let fused = tape.concat_cols(&out.z)?;
    let fused_cols = (0..cfg.modalities()).map(|j| cfg.fused_len(j)).sum();
    let target = tape.constant(Matrix::standard_normal(batch, fused_cols, &mut rng));
    let task = tape.mse_loss(fused, target)?;

    let upstream_nonzero = |params: &ParamSet, ids: &[ParamId]| {
        ids.iter().any(|&id| {
            params
                .get(id)
                .grad
                .data()
                .iter()
                .any(|v| v.to_bits() != 0.0f64.to_bits())
        })
    };

    tape.backward(dis, &mut params)?;
    let dis_loss_grads_upstream = upstream_nonzero(&params, &extractor_ids);
    let map_grads_move_under_dis = upstream_nonzero(&params, &gmf.ids());
    params.zero_grads();

    tape.backward(task, &mut params)?;
    let task_loss_grads_upstream = upstream_nonzero(&params, &extractor_ids);
    params.zero_grads();

    Ok(BarrierProbe {
        params,
        extractor_ids,
        dis_loss_grads_upstream,
        task_loss_grads_upstream,
        map_grads_move_under_dis,
    })
}

fn barrier_suite() -> Result<String, String> {
    let on = barrier_probe(true).map_err(fail)?;
    if on.dis_loss_grads_upstream {
        return Err("barrier on: dissociation gradients reached the extractors".into());
    }
    if !on.task_loss_grads_upstream {
        return Err("barrier on: task gradients failed to reach the extractors".into());
    }
    if !on.map_grads_move_under_dis {
        return Err("barrier on: dissociation loss left the fusion maps untrained".into());
    }
    // The zero must be bitwise, not merely small.
    for &id in &on.extractor_ids {
        let p = on.params.get(id);
        if p.grad.data().iter().any(|v| v.to_bits() != 0.0f64.to_bits()) {
            return Err("barrier on: extractor gradient accumulator not bitwise zero".into());
        }
    }

    let off = barrier_probe(false).map_err(fail)?;
    if !off.dis_loss_grads_upstream {
        return Err("barrier off: dissociation gradients should reach the extractors".into());
    }
    if !off.task_loss_grads_upstream {
        return Err("barrier off: task gradients should reach the extractors".into());
    }
    Ok("dissociation gradients stop at the barrier bitwise; task gradients pass".into())
}

// ---------------------------------------------------------------------------
// 05: structural laws of the fused representation for 2 to 4 modalities.

fn structure_suite() -> Result<String, String> {
    for d in 2..=4usize {
        let dims: Vec<usize> = (0..d).map(|j| 4 + 3 * j).collect();
        let cfg = GmfConfig::new(dims.clone());
        let mut params = ParamSet::new();
        let mut rng = SplitMix64::stream(d as u64, "acceptance-structure");
        let gmf = GmfParams::init(&mut params, &cfg, &mut rng).map_err(fail)?;
        let batch = 3;

        let features: Vec<Matrix> = dims
            .iter()
            .map(|&l| Matrix::standard_normal(batch, l, &mut rng))
            .collect();

        let forward = |inputs: &[Matrix]| -> Result<(Vec<Matrix>, Vec<Matrix>, Vec<Matrix>), Error> {
            let mut tape = Tape::new();
            let nodes: Vec<_> = inputs.iter().map(|x| tape.constant(x.clone())).collect();
            let out = gmf_forward(&mut tape, &params, &gmf, &cfg, &nodes)?;
            let grab = |ids: &[gmf_lab::tensor::NodeId]| {
                ids.iter().map(|&id| tape.value(id).clone()).collect::<Vec<_>>()
            };
            Ok((grab(&out.z), grab(&out.z_inv), grab(&out.z_spec)))
        };

        let (z0, inv0, spec0) = forward(&features).map_err(fail)?;

        // Shape law.
        for j in 0..d {
            if z0[j].cols() != cfg.fused_len(j)
                || inv0[j].cols() != cfg.invariant_len()
                || spec0[j].cols() != cfg.dims[j]
            {
                return Err(format!("d={d}: fused output widths off at modality {j}"));
            }
        }

        // Cyclic routing: perturbing modality k touches exactly its own
        // codes, and exactly the fused vectors that route them.
        for k in 0..d {
            let mut perturbed = features.clone();
            let mut bump = perturbed[k].clone();
            bump.data_mut()[0] += 0.5;
            perturbed[k] = bump;
            let (z1, inv1, spec1) = forward(&perturbed).map_err(fail)?;
            for j in 0..d {
                let code_should_change = j == k;
                if (inv1[j].data() != inv0[j].data()) != code_should_change
                    || (spec1[j].data() != spec0[j].data()) != code_should_change
                {
                    return Err(format!(
                        "d={d}: perturbing modality {k} moved the codes of modality {j}"
                    ));
                }
                let fused_should_change = j == k || (j + 1) % d == k;
                if (z1[j].data() != z0[j].data()) != fused_should_change {
                    return Err(format!(
                        "d={d}: perturbing modality {k} routed wrongly into fused vector {j}"
                    ));
                }
            }
        }

        // Locality: zeroing one modality leaves every other code bitwise
        // untouched.
        for k in 0..d {
            let mut zeroed = features.clone();
            zeroed[k] = Matrix::zeros(batch, dims[k]);
            let (_, inv1, spec1) = forward(&zeroed).map_err(fail)?;
            for j in 0..d {
                if j == k {
                    continue;
                }
                if inv1[j].data() != inv0[j].data() || spec1[j].data() != spec0[j].data() {
                    return Err(format!(
                        "d={d}: zeroing modality {k} changed the codes of modality {j}"
                    ));
                }
            }
        }

        // The explicit identity path drives the dissociation loss to an
        // exact zero.
        let mut id_params = ParamSet::new();
        let id_gmf = GmfParams::init_identity_path(&mut id_params, &cfg).map_err(fail)?;
        let mut tape = Tape::new();
        let nodes: Vec<_> = features.iter().map(|x| tape.constant(x.clone())).collect();
        let out = gmf_forward(&mut tape, &id_params, &id_gmf, &cfg, &nodes).map_err(fail)?;
        let loss = reconstruction_loss(&mut tape, &out, &nodes).map_err(fail)?;
        let v = tape.value(loss).get(0, 0);
        if v != 0.0 {
            return Err(format!("d={d}: identity path left dissociation loss {v:e}"));
        }
    }
    Ok("shape, routing, locality, and identity-path laws hold for 2-4 modalities".into())
}

// ---------------------------------------------------------------------------
// 06: the dissociation loss trains to a small fraction of its initial
// value on fixed random features, for every seed.

fn trainability() -> Result<String, String> {
    let cfg = GmfConfig::new(vec![16, 16]);
    let sgd = SgdConfig::default();
    let mut ratios = Vec::new();
    for seed in 1..=5u64 {
        let curve = train_dissociation_only(&cfg, 8, 500, &sgd, seed).map_err(fail)?;
        let ratio = curve.last().unwrap() / curve[0];
        if !(ratio < 0.05) {
            return Err(format!(
                "seed {seed}: loss only fell to {:.2}% of its initial value",
                ratio * 100.0
            ));
        }
        ratios.push(ratio);
    }
    let worst = ratios.iter().cloned().fold(0.0f64, f64::max);
    Ok(format!("5/5 seeds below 5%, worst final/initial = {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// 07: the synthetic benchmark. Part one, with frozen extractors and full
// modalities, fusion must hold the concat baseline within a point. Part
// two, with trainable extractors in a regime where the dissociation loss
// has real pull (narrow specific band, large lambda), the barrier must
// protect missing-modality accuracy against the unscoped variant.

fn benchmark_suite() -> Result<String, String> {
    let spec = SyntheticSpec::pinned();
    let seeds: Vec<u64> = (1..=5).collect();
    let mut full_gmf = Vec::new();
    let mut full_concat = Vec::new();
    let mut dropped_barrier = Vec::new();
    let mut dropped_unscoped = Vec::new();

    for &seed in &seeds {
        let dataset = generate_dataset(&spec, seed).map_err(fail)?;

        // Part one: stock geometry, frozen identity extractors.
        for method in [FusionMethod::Gmf, FusionMethod::ConcatBaseline] {
            let mut cfg = TrainConfig::new(method);
            cfg.seed = seed;
            let gmf_cfg = method
                .uses_gmf()
                .then(|| GmfConfig::new(spec.observed_dims.clone()));
            let (_, report) = train_fusion(&dataset, &cfg, gmf_cfg).map_err(fail)?;
            if let Some(msg) = report.diverged {
                return Err(format!("seed {seed}, {}: diverged: {msg}", method.as_str()));
            }
            match method {
                FusionMethod::Gmf => full_gmf.push(report.final_test_accuracy),
                _ => full_concat.push(report.final_test_accuracy),
            }
        }

        // Part two: trainable extractors, narrow specific band, heavy
        // dissociation weight; score the mean over both single-modality
        // drops.
        for method in [FusionMethod::Gmf, FusionMethod::GmfNoBarrier] {
            let mut cfg = TrainConfig::new(method);
            cfg.seed = seed;
            cfg.extractor = ExtractorMode::Trainable;
            cfg.lambda = 32.0;
            let mut gmf_cfg = GmfConfig::new(spec.observed_dims.clone());
            gmf_cfg.boundary_fraction = 0.9375;
            let (model, report) = train_fusion(&dataset, &cfg, Some(gmf_cfg)).map_err(fail)?;
            if let Some(msg) = report.diverged {
                return Err(format!("seed {seed}, {}: diverged: {msg}", method.as_str()));
            }
            let mut acc = 0.0;
            for j in 0..spec.modalities {
                acc += missing_modality_eval(&model, &dataset, Some(j))
                    .map_err(fail)?
                    .accuracy;
            }
            acc /= spec.modalities as f64;
            match method {
                FusionMethod::Gmf => dropped_barrier.push(acc),
                _ => dropped_unscoped.push(acc),
            }
        }
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mg, mc) = (mean(&full_gmf), mean(&full_concat));
    if mg < mc - 0.01 {
        return Err(format!(
            "full modalities: fusion mean {mg:.4} fell more than a point below concat {mc:.4}"
        ));
    }
    let (mb, mu) = (mean(&dropped_barrier), mean(&dropped_unscoped));
    if mb < mu {
        return Err(format!(
            "dropped modality: barrier mean {mb:.4} below unscoped mean {mu:.4}"
        ));
    }
    Ok(format!(
        "full: fusion {mg:.4} vs concat {mc:.4}; dropped: barrier {mb:.4} vs unscoped {mu:.4}, \
         5 paired seeds"
    ))
}

// ---------------------------------------------------------------------------
// 08: the electrolytic cell. Exact Laplace solution, second-order grid
// convergence, conserved ion totals, and the equilibrium potential-
// concentration relation between every pair of points.

fn electrolyte_suite() -> Result<String, String> {
    // Zero charge reduces the potential solve to the linear ramp, exactly.
    let sys = PnpSystem::symmetric_binary(1.0, 32, 0.005, 1.0, 1.0, 1.0);
    let phi = sys.solve_poisson_rho(&vec![0.0; 32]).map_err(fail)?;
    for (i, &p) in phi.iter().enumerate() {
        let exact = 1.0 - 2.0 * i as f64 / 32.0;
        if (p - exact).abs() > 1e-13 {
            return Err(format!("Laplace node {i}: {p} vs {exact}"));
        }
    }

    // Manufactured charge: max-norm error falls at second order.
    let u0 = 0.7;
    let pi = std::f64::consts::PI;
    let mut errors = Vec::new();
    for &n in &[16usize, 32, 64, 128] {
        let sys = PnpSystem::symmetric_binary(1.0, n, 0.25, u0, 1.0, 1.0);
        let rho: Vec<f64> = (0..n)
            .map(|i| sys.eps0 * pi * pi * (pi * sys.x_center(i)).sin())
            .collect();
        let phi = sys.solve_poisson_rho(&rho).map_err(fail)?;
        let err = phi
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let x = i as f64 / n as f64;
                (p - ((pi * x).sin() + u0 * (1.0 - 2.0 * x))).abs()
            })
            .fold(0.0f64, f64::max);
        errors.push(err);
    }
    let mut orders = Vec::new();
    for w in errors.windows(2) {
        let slope = (w[0] / w[1]).log2();
        if (slope - 2.0).abs() > 0.2 {
            return Err(format!("grid refinement slope {slope:.3}, errors {errors:?}"));
        }
        orders.push(slope);
    }

    // Ten thousand transient steps must not leak ions.
    let sys = PnpSystem::symmetric_binary(1.0, 32, 0.005, 1.0, 1.0, 1.0);
    let mut state = sys.initial_state().map_err(fail)?;
    let m0: Vec<f64> = (0..2).map(|p| sys.total_mass(&state, p)).collect();
    for _ in 0..10_000 {
        state = sys.transient_step(&state, 1e-5).map_err(fail)?;
    }
    let mut drift = 0.0f64;
    for p in 0..2 {
        drift = drift.max(((sys.total_mass(&state, p) - m0[p]) / m0[p]).abs());
    }
    if drift >= 1e-8 {
        return Err(format!("mass drift {drift:.2e} over 10^4 steps"));
    }

    // Equilibrium: the potential difference between any two points matches
    // the log concentration ratio for both species.
    let sys = PnpSystem::symmetric_binary(1.0, 80, 0.005, 1.0, 1.0, 1.0);
    let (state, _) = sys.solve_steady().map_err(fail)?;
    let mut worst = 0.0f64;
    for p in 0..2 {
        for i in 0..sys.cells {
            for k in 0..sys.cells {
                worst = worst.max(sys.nernst_check(&state, p, i, k).map_err(fail)?.abs());
            }
        }
    }
    if worst >= 1e-6 {
        return Err(format!("equilibrium relation deviates by {worst:.2e}"));
    }

    Ok(format!(
        "Laplace exact, refinement orders {:.2}/{:.2}/{:.2}, mass drift {drift:.1e}, \
         equilibrium deviation {worst:.1e}",
        orders[0], orders[1], orders[2]
    ))
}

// ---------------------------------------------------------------------------
// 09: the bottleneck mapping study. A width-halving middle layer must cost
// accuracy; a width-quadrupling one must not.

fn mapping_suite() -> Result<String, String> {
    let mut cfg = MappingExperimentConfig::new();
    // A hard sampling margin and a long budget let every probe reach its
    // capacity ceiling, so the comparison measures the bottleneck alone.
    cfg.margin = 1.0;
    cfg.epochs = 200;
    let report = up_down_experiment(&cfg).map_err(fail)?;

    let direct = report.cell("direct").ok_or("missing direct cell")?.mean;
    let half = report.cell("updown n=0.5").ok_or("missing n=0.5 cell")?.mean;
    let four = report.cell("updown n=4").ok_or("missing n=4 cell")?.mean;

    if !(half < direct) {
        return Err(format!(
            "halving bottleneck mean {half:.4} failed to land strictly below direct {direct:.4}"
        ));
    }
    if (four - direct).abs() > 0.01 {
        return Err(format!(
            "quadrupling bottleneck mean {four:.4} strayed over a point from direct {direct:.4}"
        ));
    }
    Ok(format!(
        "direct {direct:.4}, n=1/2 {half:.4} (capacity bound bites), n=4 {four:.4} (within a \
         point), 3 seeds"
    ))
}

// ---------------------------------------------------------------------------
// 10: rank statistics of random projection pairs.

fn rank_suite() -> Result<String, String> {
    let up = rank_trial(&RankTrialConfig { d: 8, n: 2.0, trials: 1000, seed: 1 }).map_err(fail)?;
    if up.full_rank_fraction != 1.0 {
        return Err(format!(
            "16x8 maps: full-rank fraction {} over 1000 trials",
            up.full_rank_fraction
        ));
    }
    let down = rank_trial(&RankTrialConfig { d: 8, n: 0.5, trials: 1000, seed: 1 }).map_err(fail)?;
    if down.rank_d_fraction != 0.0 {
        return Err(format!(
            "4x8 maps: rank-8 fraction {} should be impossible",
            down.rank_d_fraction
        ));
    }
    Ok("n=2 always full rank, n=1/2 never reaches rank d, 1000 trials each".into())
}

// ---------------------------------------------------------------------------
// 11: plug-in estimators against closed-form values.

fn estimator_suite() -> Result<String, String> {
    let n = 100_000;
    let mut rng = SplitMix64::stream(2, "acceptance-estimators");

    let uniform: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
    let h_uniform = histogram_entropy(&uniform, 8).map_err(fail)?;
    if (h_uniform - (8.0f64).ln()).abs() > 0.01 {
        return Err(format!("uniform entropy {h_uniform:.5} vs ln 8"));
    }

    let xs: Vec<f64> = (0..n).map(|_| (rng.next_u64() & 1) as f64).collect();
    let ys: Vec<f64> = (0..n).map(|_| (rng.next_u64() & 1) as f64).collect();
    let mi = mutual_information(&xs, &ys, 2).map_err(fail)?;
    if mi >= 0.01 {
        return Err(format!("independent coins leaked {mi:.5} nats"));
    }

    let bern: Vec<f64> = (0..n)
        .map(|_| if rng.next_f64() < 0.25 { 1.0 } else { 0.0 })
        .collect();
    let h_bern = histogram_entropy(&bern, 2).map_err(fail)?;
    let exact = -(0.25f64.ln() * 0.25 + 0.75f64.ln() * 0.75);
    if (h_bern - exact).abs() > 0.01 {
        return Err(format!("Bernoulli(0.25) entropy {h_bern:.5} vs {exact:.5}"));
    }

    Ok(format!(
        "uniform {h_uniform:.4} nats, coins {mi:.1e} nats, Bernoulli {h_bern:.4} nats"
    ))
}

// ---------------------------------------------------------------------------
// 12: repeating a run with the same seed and config reproduces every CSV
// byte for byte, across the main pipelines.

fn determinism() -> Result<String, String> {
    let cases: Vec<(&str, Vec<&str>, &str)> = vec![
        (
            "rank-sim",
            vec!["rank-sim", "--d", "8", "--n", "2", "--trials", "1000", "--seed", "7"],
            "rank-sim.csv",
        ),
        (
            "pnp-solve",
            vec!["pnp-solve", "--cells", "40", "--mode", "steady", "--seed", "7"],
            "pnp-solve.csv",
        ),
        (
            "gmf-train",
            vec![
                "gmf-train",
                "--samples",
                "200",
                "--classes",
                "2",
                "--shared-dim",
                "2",
                "--specific-dims",
                "2,2",
                "--observed-dims",
                "8,8",
                "--epochs",
                "2",
                "--batch",
                "32",
                "--seed",
                "7",
            ],
            "gmf-train.csv",
        ),
        (
            "updown",
            vec![
                "updown",
                "--dim",
                "4",
                "--classes",
                "4",
                "--mags",
                "0.5,1",
                "--seeds",
                "1",
                "--train",
                "100",
                "--test",
                "100",
                "--epochs",
                "2",
                "--seed",
                "7",
            ],
            "updown.csv",
        ),
    ];

    let mut compared = Vec::new();
    for (label, argv, artifact) in cases {
        let mut bodies = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().map_err(fail)?;
            let mut full: Vec<String> = argv.iter().map(|s| s.to_string()).collect();
            full.push("--out".into());
            full.push(dir.path().to_str().unwrap().into());
            let code = cli::run(&full);
            if code != 0 {
                return Err(format!("{label} exited with {code}"));
            }
            bodies.push(std::fs::read(dir.path().join(artifact)).map_err(fail)?);
        }
        if bodies[0] != bodies[1] {
            return Err(format!("{label}: reruns differ in {artifact}"));
        }
        compared.push(label);
    }
    Ok(format!("byte-identical CSV reruns for {}", compared.join(", ")))
}

// ---------------------------------------------------------------------------
// Small helpers.

fn args(a: [&str; 9]) -> Vec<String> {
    a.iter().map(|s| s.to_string()).collect()
}

fn read_json(path: std::path::PathBuf) -> Result<serde_json::Value, String> {
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("reading {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("parsing {}: {e}", path.display()))
}
