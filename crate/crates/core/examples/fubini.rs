//! Peak sections: L2 normalization and how their mass concentrates in
//! balls of radius R / sqrt(d).

use rhlab::ensembles::AffinePolynomial;
use rhlab::fubini::{build_peak_section, fs_l2_norm_sq, mass_fraction_in_ball, ProjectivePoint};

pub fn run_example() -> rhlab::Result<()> {
    // x^2 - 1/4 on the projective line, peaked at [1 : 0.3].
    let p = AffinePolynomial::from_terms(1, &[(1.0, vec![2]), (-0.25, vec![0])])?;
    let center = ProjectivePoint::new(&[1.0, 0.3])?;
    for d in [20, 80, 200] {
        let peak = build_peak_section(&p, d, &center)?;
        let norm = fs_l2_norm_sq(&peak.section)?.sqrt();
        let fracs: Vec<String> = [1.0, 2.0, 3.0]
            .iter()
            .map(|r| mass_fraction_in_ball(&peak.section, &center, r / (d as f64).sqrt()).map(|f| format!("{f:.4}")))
            .collect::<rhlab::Result<_>>()?;
        println!("d={d:>3}  |sigma| = {norm:.4}  mass in R=1,2,3: {}", fracs.join(" "));
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
