//! Lower-bound report: certified catalog constants against curve statistics
//! and the matrix upper constant, written as CSV and JSON artifacts.

use rhlab::assembly::config::RunOptions;
use rhlab::assembly::run_experiment;

pub fn run_example() -> rhlab::Result<()> {
    let dir = std::env::temp_dir().join("rhlab-report-example");
    std::fs::create_dir_all(&dir)?;
    let cfg = dir.join("report.toml");
    std::fs::write(
        &cfg,
        "experiment = \"report\"\nseed = 4\nmodels = [\"circle\"]\ndegrees = [6, 10]\ntrials = 100\nmatrix_trials = 20000\ncertificate_degree = 30\n",
    )?;
    let out = run_experiment(&cfg, &RunOptions { out_dir: dir.join("out"), ..Default::default() })?;
    for a in &out.artifacts {
        println!("wrote {}", a.display());
    }
    println!("partial bound 10^{:.1}", out.details["partial_log10"].as_f64().unwrap_or(f64::NAN));
    println!("all verdicts passed: {}", out.details["all_verdicts_passed"]);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
