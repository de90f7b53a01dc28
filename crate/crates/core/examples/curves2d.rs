//! Components of random plane curves: per-degree statistics, the Harnack
//! ceiling, and stability under grid refinement.

use rhlab::curves2d::{betti_statistics, refinement_stability};

pub fn run_example() -> rhlab::Result<()> {
    for d in [3, 6, 10] {
        let s = betti_statistics(d, 200, None, 21)?;
        let lines = s.samples.iter().filter(|t| t.noncontractible == 1).count();
        println!(
            "d={d:>2} level {}: mean b0 {:.3} +- {:.3}, max {} (Harnack {}), pseudoline in {lines}/{}",
            s.level, s.mean_b0, s.std_error, s.max_b0_observed, s.harnack_bound, s.trials
        );
    }
    let r = refinement_stability(8, 50, 5, 22)?;
    println!("refinement agreement at d=8: {}/{}", r.agreeing, r.compared);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
