//! Build a small computation graph on the tape, differentiate it, and
//! check one gradient against central finite differences.
//!
//! ```text
//! cargo run --example autodiff_basics
//! ```

use gmf_lab::tensor::{Matrix, ParamSet, SplitMix64, Tape};
use gmf_lab::Result;

fn main() -> Result<()> {
    let mut rng = SplitMix64::stream(7, "autodiff-example");

    // One trainable layer applied to a fixed batch, squared error against a
    // fixed target: loss = mse(relu(x W^T + b), t).
    let mut params = ParamSet::new();
    let w = params.insert_linear_weight("w", 3, 4, &mut rng)?;
    let b = params.insert_bias("b", 3, 4, &mut rng)?;

    let x = Matrix::standard_normal(5, 4, &mut rng);
    let t = Matrix::standard_normal(5, 3, &mut rng);

    let build = |ps: &ParamSet| -> Result<f64> {
        let mut tape = Tape::new();
        let xn = tape.constant(x.clone());
        let tn = tape.constant(t.clone());
        let wn = tape.param(ps, w);
        let bn = tape.param(ps, b);
        let h = tape.linear(xn, wn, bn)?;
        let a = tape.relu(h);
        let loss = tape.mse_loss(a, tn)?;
        Ok(tape.value(loss).get(0, 0))
    };

    // Analytic gradients.
    let mut tape = Tape::new();
    let xn = tape.constant(x.clone());
    let tn = tape.constant(t.clone());
    let wn = tape.param(&params, w);
    let bn = tape.param(&params, b);
    let h = tape.linear(xn, wn, bn)?;
    let a = tape.relu(h);
    let loss = tape.mse_loss(a, tn)?;
    tape.backward(loss, &mut params)?;

    println!("loss = {:.6}", tape.value(loss).get(0, 0));
    println!("grad w[0,0] (tape)  = {:+.10}", params.get(w).grad.get(0, 0));

    // Finite-difference check of the same entry.
    let step = 1e-5;
    let orig = params.get(w).value.get(0, 0);
    params.get_mut(w).value.data_mut()[0] = orig + step;
    let up = build(&params)?;
    params.get_mut(w).value.data_mut()[0] = orig - step;
    let down = build(&params)?;
    params.get_mut(w).value.data_mut()[0] = orig;
    let fd = (up - down) / (2.0 * step);
    println!("grad w[0,0] (fd)    = {fd:+.10}");

    let rel = (params.get(w).grad.get(0, 0) - fd).abs() / fd.abs().max(1e-12);
    println!("relative difference = {rel:.2e}");
    Ok(())
}
