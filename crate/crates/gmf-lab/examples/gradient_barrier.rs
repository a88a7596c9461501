//! Show what the gradient barrier does: forward values pass through
//! untouched, but the adjoint stream stops at the barrier node.
//!
//! The same two-layer graph is built twice, once with the barrier blocking
//! and once with it transparent. The downstream layer sees identical
//! gradients in both cases; the upstream layer only receives gradient when
//! the barrier is open.
//!
//! ```text
//! cargo run --example gradient_barrier
//! ```

use gmf_lab::tensor::{Matrix, ParamSet, SplitMix64, Tape};
use gmf_lab::Result;

fn run(blocks: bool) -> Result<(f64, f64, f64)> {
    let mut rng = SplitMix64::stream(21, "barrier-example");
    let mut params = ParamSet::new();
    let w_up = params.insert_linear_weight("w_up", 4, 4, &mut rng)?;
    let b_up = params.insert_bias("b_up", 4, 4, &mut rng)?;
    let w_down = params.insert_linear_weight("w_down", 2, 4, &mut rng)?;
    let b_down = params.insert_bias("b_down", 2, 4, &mut rng)?;

    let x = Matrix::standard_normal(6, 4, &mut rng);
    let t = Matrix::standard_normal(6, 2, &mut rng);

    let mut tape = Tape::new();
    let xn = tape.constant(x);
    let tn = tape.constant(t);
    let wu = tape.param(&params, w_up);
    let bu = tape.param(&params, b_up);
    let feat = tape.linear(xn, wu, bu)?;
    let gated = tape.barrier(feat, blocks);
    let wd = tape.param(&params, w_down);
    let bd = tape.param(&params, b_down);
    let out = tape.linear(gated, wd, bd)?;
    let loss = tape.mse_loss(out, tn)?;
    tape.backward(loss, &mut params)?;

    let grad_norm = |m: &Matrix| m.data().iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok((
        tape.value(loss).get(0, 0),
        grad_norm(&params.get(w_up).grad),
        grad_norm(&params.get(w_down).grad),
    ))
}

fn main() -> Result<()> {
    let (loss_open, up_open, down_open) = run(false)?;
    let (loss_blocked, up_blocked, down_blocked) = run(true)?;

    println!("barrier open:    loss {loss_open:.6}  |grad upstream| {up_open:.6}  |grad downstream| {down_open:.6}");
    println!("barrier blocked: loss {loss_blocked:.6}  |grad upstream| {up_blocked:.6}  |grad downstream| {down_blocked:.6}");
    println!();
    println!("forward value unchanged: {}", loss_open == loss_blocked);
    println!("downstream grad unchanged: {}", down_open == down_blocked);
    println!("upstream grad removed:   {}", up_blocked == 0.0 && up_open > 0.0);
    Ok(())
}
