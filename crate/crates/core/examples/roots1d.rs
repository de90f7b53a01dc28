//! Expected number of real roots of random binary forms: Monte Carlo counts
//! next to the integral-geometric value, for both ensembles.

use rhlab::ensembles::{EnsembleKind, EnsembleSpec};
use rhlab::roots1d::{expected_roots_crofton, expected_roots_mc};

pub fn run_example() -> rhlab::Result<()> {
    println!("{:>8} {:>5} {:>10} {:>9} {:>10}", "ensemble", "d", "mc mean", "se", "crofton");
    for kind in [EnsembleKind::Kostlan, EnsembleKind::Kac] {
        for d in [4, 16, 64] {
            let spec = EnsembleSpec { kind, nvars: 2, degree: d, seed: 11 };
            let s = expected_roots_mc(&spec, 4000)?;
            let c = expected_roots_crofton(&spec)?;
            println!("{kind:>8} {d:>5} {:>10.4} {:>9.4} {c:>10.4}", s.estimate.mean, s.estimate.std_error);
        }
    }
    // Kostlan gives sqrt(d) exactly; Kac grows like (2/pi) log d.
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
