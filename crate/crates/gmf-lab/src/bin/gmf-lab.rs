//! Thin process wrapper around the in-process CLI; see `gmf_lab::cli`.

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    std::process::exit(gmf_lab::cli::run(&args));
}
