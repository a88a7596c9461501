//! Solve the one-dimensional electrolytic cell between blocking electrodes
//! and inspect the equilibrium it reaches.
//!
//! A symmetric binary electrolyte sits between plates held at +-U0. The
//! steady state must satisfy the Nernst relation between every pair of
//! points, conserve each species' total amount, and have vanishing fluxes.
//!
//! ```text
//! cargo run --example electrolytic_cell
//! ```

use gmf_lab::pnp::PnpSystem;
use gmf_lab::Result;

fn main() -> Result<()> {
    let sys = PnpSystem::symmetric_binary(1.0, 80, 0.005, 1.0, 1.0, 1.0);
    sys.validate()?;

    let (state, report) = sys.solve_steady()?;
    println!(
        "steady state after {} outer iterations (last change rate {:.2e})",
        report.steps, report.change_rate
    );
    println!("largest residual ion flux     = {:.3e}", sys.max_abs_flux(&state));
    println!(
        "Poisson residual at solution  = {:.3e}",
        sys.poisson_residual(&state.phi, &state.conc)
    );
    if let Some(x0) = sys.phi_zero_crossing(&state) {
        println!("potential crosses zero at x   = {x0:.6}");
    }

    // Nernst relation between the midpoint and every other cell.
    let mid = sys.cells / 2;
    let mut worst = 0.0f64;
    for p in 0..2 {
        for i in 0..sys.cells {
            worst = worst.max(sys.nernst_check(&state, p, mid, i)?.abs());
        }
    }
    println!("worst Nernst deviation        = {worst:.3e}");

    // Profile snapshot: Debye layers hug the electrodes, the bulk stays
    // electroneutral.
    println!("\n{:>8} {:>12} {:>12} {:>12}", "x", "phi", "c_plus", "c_minus");
    for &i in &[0usize, 1, 2, 4, 8, 20, 40, 60, 72, 76, 78, 79] {
        println!(
            "{:>8.4} {:>12.6} {:>12.6} {:>12.6}",
            sys.x_center(i),
            state.phi[i],
            state.conc[0][i],
            state.conc[1][i]
        );
    }

    // A short transient from the uniform initial condition: total amounts
    // stay fixed because the electrodes block ion flow.
    let mut s = sys.initial_state()?;
    let m0 = sys.total_mass(&s, 0);
    for _ in 0..200 {
        s = sys.transient_step(&s, 1e-5)?;
    }
    let drift = (sys.total_mass(&s, 0) - m0).abs() / m0;
    println!("\nrelative mass drift over 200 transient steps = {drift:.3e}");
    Ok(())
}
