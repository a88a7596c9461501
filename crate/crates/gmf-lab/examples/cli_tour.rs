//! Drive the command-line layer programmatically: run a tiny experiment
//! twice into two directories and show that the CSV artifacts are
//! byte-identical, then demonstrate the fail-closed config check.
//!
//! The same subcommands are available from the shell:
//!
//! ```text
//! gmf-lab rank-sim --d 8 --n 2 --trials 1000 --out runs/rank
//! gmf-lab param-count --dims 512,512 --n 4 --boundary 0.5
//! ```
//!
//! ```text
//! cargo run --example cli_tour
//! ```

use gmf_lab::cli;

fn main() {
    let base = std::env::temp_dir().join("gmf-lab-cli-tour");
    let _ = std::fs::remove_dir_all(&base);

    let arg = |s: &str| s.to_string();
    let mut bodies = Vec::new();
    for run in ["first", "second"] {
        let out = base.join(run);
        let code = cli::run(&[
            arg("rank-sim"),
            arg("--d"),
            arg("8"),
            arg("--n"),
            arg("2"),
            arg("--trials"),
            arg("200"),
            arg("--seed"),
            arg("11"),
            arg("--out"),
            out.display().to_string(),
        ]);
        println!("rank-sim into {} -> exit code {code}", out.display());
        bodies.push(std::fs::read(out.join("rank-sim.csv")).expect("csv written"));
    }
    println!("reruns byte-identical: {}", bodies[0] == bodies[1]);

    // Unknown keys are rejected before anything is written.
    let code = cli::run(&[arg("rank-sim"), arg("--trails"), arg("5")]);
    println!("misspelled flag -> exit code {code} (2 is a config error)");

    let _ = std::fs::remove_dir_all(&base);
}
