//! Histogram plug-in estimators for entropy and mutual information on
//! distributions whose true values are known in closed form.
//!
//! ```text
//! cargo run --example information_estimators
//! ```

use gmf_lab::entropy::{histogram_entropy, mutual_information};
use gmf_lab::tensor::SplitMix64;
use gmf_lab::Result;

fn main() -> Result<()> {
    let n = 100_000;
    let mut rng = SplitMix64::stream(3, "estimator-example");

    // Uniform on [0,1) with 8 bins: every bin equally likely, H = ln 8.
    let uniform: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
    let h = histogram_entropy(&uniform, 8)?;
    println!("uniform, 8 bins:      H = {:.5} nats (ln 8 = {:.5})", h, (8.0f64).ln());

    // Bernoulli(0.25): H = -(p ln p + q ln q) ~= 0.5623 nats.
    let bern: Vec<f64> = (0..n)
        .map(|_| if rng.next_f64() < 0.25 { 1.0 } else { 0.0 })
        .collect();
    let h = histogram_entropy(&bern, 2)?;
    let exact = -(0.25f64.ln() * 0.25 + 0.75f64.ln() * 0.75);
    println!("Bernoulli(0.25):      H = {h:.5} nats (exact {exact:.5})");

    // Two independent coins: MI should vanish up to estimation noise.
    let xs: Vec<f64> = (0..n).map(|_| (rng.next_u64() & 1) as f64).collect();
    let ys: Vec<f64> = (0..n).map(|_| (rng.next_u64() & 1) as f64).collect();
    let mi = mutual_information(&xs, &ys, 2)?;
    println!("independent coins:    I = {mi:.6} nats (exact 0)");

    // Fully dependent pair: MI equals the coin's entropy, ln 2.
    let mi = mutual_information(&xs, &xs, 2)?;
    println!("identical coins:      I = {:.5} nats (ln 2 = {:.5})", mi, (2.0f64).ln());

    // A noisy channel in between: y copies x with probability 0.9.
    let ys_noisy: Vec<f64> = xs
        .iter()
        .map(|&x| if rng.next_f64() < 0.9 { x } else { 1.0 - x })
        .collect();
    let mi = mutual_information(&xs, &ys_noisy, 2)?;
    let h2 = |p: f64| -(p * p.ln() + (1.0 - p) * (1.0 - p).ln());
    println!("90% faithful channel: I = {:.5} nats (exact {:.5})", mi, (2.0f64).ln() - h2(0.1));
    Ok(())
}
