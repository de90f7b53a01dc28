//! Maximal separated sets on the sphere and the projective plane, with the
//! normalized counts against their asymptotic window.

use rhlab::packing::{packing_sweep, Manifold};

pub fn run_example() -> rhlab::Result<()> {
    for m in [Manifold::Sphere(2), Manifold::ProjectiveSpace(2)] {
        for s in packing_sweep(m, &[0.2, 0.1, 0.05], 3)? {
            println!(
                "{m} eps={:.3}: N={:>5}  eps^2 N = {:.4} in [{:.4}, {:.4}]  covering {}",
                s.epsilon,
                s.count,
                s.normalized,
                s.bound,
                s.ceiling,
                if s.covering.passed() { "ok" } else { "FAILED" }
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
