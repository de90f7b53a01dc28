//! Determinant statistics of Gaussian symmetric matrices split by
//! signature, the growth profile of their total, and the low-index tail.

use rhlab::matrixstats::{asymptotic_ratio, estimate_e_table, low_index_tail};

pub fn run_example() -> rhlab::Result<()> {
    let t = estimate_e_table(3, 50_000, 5)?;
    let cp = t.c_plus();
    for i in 0..=t.m {
        println!("m=3 i={i}: e = {:.5} +- {:.5}  c+ = {:.5}  ({} hits)", t.e_hat[i], t.std_errors[i], cp[i], t.hits[i]);
    }
    println!("total {:.5} +- {:.5}", t.total(), t.total_std_error());

    for r in asymptotic_ratio(&[1, 4, 9], 20_000, 6)? {
        println!("n={:>2}: total / profile = {:.4} +- {:.4}", r.n, r.ratio, r.ratio_std_error);
    }
    let tail = low_index_tail(8, 0.25, 50_000, 7)?;
    let kind = if tail.upper_bound { "bound" } else { "estimate" };
    println!("n=8 tail up to i={}: {:.3e} ({kind})", tail.cutoff, tail.value);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
