//! Every example runs to completion.

macro_rules! example {
    ($name:ident, $file:literal) => {
        #[path = $file]
        mod $name;
    };
}

example!(roots1d, "../examples/roots1d.rs");
example!(matrixstats, "../examples/matrixstats.rs");
example!(fubini, "../examples/fubini.rs");
example!(barrier, "../examples/barrier.rs");
example!(curves2d, "../examples/curves2d.rs");
example!(packing, "../examples/packing.rs");
example!(report, "../examples/report.rs");

#[test]
fn roots1d_runs() {
    roots1d::run_example().unwrap();
}

#[test]
fn matrixstats_runs() {
    matrixstats::run_example().unwrap();
}

#[test]
fn fubini_runs() {
    fubini::run_example().unwrap();
}

#[test]
fn barrier_runs() {
    barrier::run_example().unwrap();
}

#[test]
fn curves2d_runs() {
    curves2d::run_example().unwrap();
}

#[test]
fn packing_runs() {
    packing::run_example().unwrap();
}

#[test]
fn report_runs() {
    report::run_example().unwrap();
}
