//! Barrier certificate for the unit circle: transversality constants, sup
//! constants, the barrier measure, a trapped-isotopy check and a direct
//! presence estimate.

use rhlab::transversality::{
    assemble_certificate, isotopy_trap_check, markov_filter_mass, presence_probability_mc, Amplitude,
    CertificateOptions, HypersurfaceModel,
};

pub fn run_example() -> rhlab::Result<()> {
    let model = HypersurfaceModel::unit_circle();
    let d = 40;
    let opts = CertificateOptions { cells: 64, sup_trials: 100, seed: 7 };
    let cert = assemble_certificate(&model, d, opts)?;
    println!("delta' = {:.4e}  epsilon' = {:.4e}", cert.delta, cert.epsilon);
    println!("C1 = {:.4}  C2 = {:.4}  M = {:.2}", cert.c1, cert.c2, cert.m);
    println!("c_tilde = {}", rhlab::special::LogScale::from_ln(cert.ln_c_tilde));

    let sup = rhlab::transversality::estimate_c1_c2(2, &[d], 100, model.radius, 64, 7)?;
    let kept = markov_filter_mass(&sup, d, 100, 4.0, 8)?;
    println!("filtered mass {:.3}", kept.mean);

    let trap = isotopy_trap_check(&model, &cert, 10, Amplitude::Barrier, 64, 9)?;
    println!("trapped isotopies {}/{}", trap.verified, trap.trials);
    let control = isotopy_trap_check(&model, &cert, 10, Amplitude::Fixed(0.5), 64, 9)?;
    println!("control with a = 0.5: {}/{}", control.verified, control.trials);

    let p = presence_probability_mc(&model, d, 200, 64, 10)?;
    println!("presence probability {:.3} +- {:.3} ({} indeterminate)", p.probability, p.std_error, p.indeterminate);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
