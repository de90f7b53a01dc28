//! Acceptance run: one PASS/FAIL line per criterion, followed by the
//! measured values. Exits nonzero when any criterion fails.

use rhlab::assembly::config::RunOptions;
use rhlab::assembly::{run_experiment, LowerBoundReport};
use rhlab::curves2d::{betti_statistics, harnack_bound, level_for_degree, refinement_stability};
use rhlab::ensembles::{kostlan_weight, AffinePolynomial, EnsembleSpec, HomogeneousPolynomial};
use rhlab::fubini::{
    build_peak_section, fs_l2_inner, fs_l2_norm_sq, fs_pointwise_norm_sq, mass_fraction_in_ball, ProjectivePoint,
};
use rhlab::matrixstats::{asymptotic_ratio, estimate_e_table, low_index_tail};
use rhlab::packing::{packing_sweep, Manifold};
use rhlab::roots1d::{expected_roots_crofton, expected_roots_mc};
use rhlab::transversality::{
    assemble_certificate, estimate_c1_c2, isotopy_trap_check, markov_filter_mass, presence_probability_mc,
    Amplitude, CertificateOptions, HypersurfaceModel,
};
use std::f64::consts::PI;
use std::time::Instant;

/// Monte Carlo agreement, in standard errors.
const Z: f64 = 3.0;
const KOSTLAN_TRIALS: usize = 100_000;
const KOSTLAN_RUNTIME_S: f64 = 600.0;
const CROFTON_ABS: f64 = 1e-6;
const KAC_LOG_REL: f64 = 0.10;
const E_ABS_REL: f64 = 0.01;
const X0_POWER_REL: f64 = 1e-12;
const GRAM_ABS: f64 = 1e-4;
const PEAK_NORM_REL: f64 = 0.02;
const PEAK_MASS: f64 = 0.95;
const MARKOV_MASS: f64 = 0.5;
const CURVE_SAMPLES: usize = 10_000;
const PER_DEGREE_SPREAD: f64 = 0.25;
const REFINEMENT: f64 = 0.99;
const PACKING_LOW: f64 = 0.9;
const PACKING_HIGH: f64 = 1.1;

type Checks = Vec<(bool, String)>;

fn check(checks: &mut Checks, ok: bool, msg: String) {
    checks.push((ok, msg));
}

fn kostlan_exactness() -> rhlab::Result<Checks> {
    let mut c = Checks::new();
    let start = Instant::now();
    for d in [1u32, 4, 16, 25, 100] {
        let s = expected_roots_mc(&EnsembleSpec::kostlan(2, d, 101), KOSTLAN_TRIALS)?;
        let target = (d as f64).sqrt();
        let dev = (s.estimate.mean - target).abs();
        check(
            &mut c,
            dev <= Z * s.estimate.std_error,
            format!("d={d}: mean {:.5} se {:.5} target {target}", s.estimate.mean, s.estimate.std_error),
        );
    }
    let t = start.elapsed().as_secs_f64();
    check(&mut c, t < KOSTLAN_RUNTIME_S, format!("runtime {t:.1} s"));
    Ok(c)
}

fn crofton_cross_check() -> rhlab::Result<Checks> {
    let mut c = Checks::new();
    let mut worst = (0u32, 0.0f64);
    for d in 1..=400u32 {
        let v = expected_roots_crofton(&EnsembleSpec::kostlan(2, d, 0))?;
        let e = (v - (d as f64).sqrt()).abs();
        if e > worst.1 {
            worst = (d, e);
        }
    }
    check(&mut c, worst.1 <= CROFTON_ABS, format!("Kostlan d<=400: worst |error| {:.2e} at d={}", worst.1, worst.0));
    let kac = EnsembleSpec::kac(100, 102);
    let q = expected_roots_crofton(&kac)?;
    let mc = expected_roots_mc(&kac, 100_000)?;
    check(
        &mut c,
        (q - mc.estimate.mean).abs() <= Z * mc.estimate.std_error,
        format!("Kac d=100: quadrature {q:.5}, mc {:.5} se {:.5}", mc.estimate.mean, mc.estimate.std_error),
    );
    let q = expected_roots_crofton(&EnsembleSpec::kac(10_000, 0))?;
    let asym = 2.0 / PI * 10_000f64.ln();
    let rel = q / asym - 1.0;
    check(&mut c, rel.abs() <= KAC_LOG_REL, format!("Kac d=1e4: quadrature {q:.5} vs (2/pi) log d = {asym:.5}, rel {rel:+.4}"));
    Ok(c)
}

/// `E|det|` for 2x2 matrices with density proportional to `exp(-tr A^2/2)`,
/// split by the number of positive eigenvalues, from the eigenvalue density
/// `|l1 - l2| exp(-(l1^2 + l2^2)/2)` on a midpoint grid.
fn two_by_two_oracle() -> [f64; 3] {
    let h = 0.004;
    let n = (18.0 / h) as usize;
    let x = |k: usize| -9.0 + (k as f64 + 0.5) * h;
    let (mut z, mut e) = (0.0, [0.0; 3]);
    for i in 0..n {
        let a = x(i);
        for j in 0..n {
            let b = x(j);
            let w = (a - b).abs() * (-(a * a + b * b) / 2.0).exp();
            z += w;
            let pos = (a > 0.0) as usize + (b > 0.0) as usize;
            e[pos] += (a * b).abs() * w;
        }
    }
    e.map(|v| v / z)
}

fn goe_constants() -> rhlab::Result<Checks> {
    let mut c = Checks::new();
    let t1 = estimate_e_table(1, 1_000_000, 201)?;
    let target = (2.0 / PI).sqrt();
    let rel = t1.mean_abs_det / target - 1.0;
    check(&mut c, rel.abs() < E_ABS_REL, format!("m=1: E|a| {:.5} vs {target:.5}, rel {rel:+.2e}", t1.mean_abs_det));

    let t2 = estimate_e_table(2, 1_000_000, 202)?;
    let oracle = two_by_two_oracle();
    let total: f64 = oracle.iter().sum();
    check(
        &mut c,
        (t2.mean_abs_det - total).abs() <= Z * t2.total_se,
        format!("m=2: E|det| {:.5} se {:.5} vs quadrature {total:.5}", t2.mean_abs_det, t2.total_se),
    );
    for i in 0..3 {
        check(
            &mut c,
            (t2.e_hat[i] - oracle[i]).abs() <= Z * t2.std_errors[i],
            format!("m=2 e({i}): {:.5} se {:.5} vs quadrature {:.5}", t2.e_hat[i], t2.std_errors[i], oracle[i]),
        );
    }

    let mut worst = (0usize, 0usize, 0.0f64);
    for m in 1..=10 {
        let t = estimate_e_table(m, 100_000, 203 + m as u64)?;
        for i in 0..=m / 2 {
            let se = (t.std_errors[i].powi(2) + t.std_errors[m - i].powi(2)).sqrt();
            let z = if se > 0.0 { (t.e_hat[i] - t.e_hat[m - i]).abs() / se } else { 0.0 };
            if z > worst.2 {
                worst = (m, i, z);
            }
        }
    }
    check(&mut c, worst.2 <= Z, format!("symmetry e(i)=e(m-i), m<=10: worst {:.2} se at m={} i={}", worst.2, worst.0, worst.1));

    let r = asymptotic_ratio(&[1, 19], 100_000, 220)?;
    let (a, b) = ((r[0].ratio - 1.0).abs(), (r[1].ratio - 1.0).abs());
    check(
        &mut c,
        b < a,
        format!(
            "ratio n=2: {:.4} +- {:.4}, n=20: {:.4} +- {:.4}",
            r[0].ratio, r[0].ratio_std_error, r[1].ratio, r[1].ratio_std_error
        ),
    );

    let tails = [4usize, 8, 12, 16]
        .iter()
        .map(|&n| low_index_tail(n, 0.25, 100_000, 230 + n as u64))
        .collect::<rhlab::Result<Vec<_>>>()?;
    let scaled: Vec<f64> = tails.iter().map(|t| t.value.ln() / (t.n * t.n) as f64).collect();
    let desc = scaled.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = tails
        .iter()
        .zip(&scaled)
        .map(|(t, s)| format!("n={}: {s:.4}{}", t.n, if t.upper_bound { " (bound)" } else { "" }))
        .collect();
    check(&mut c, desc, format!("log(tail)/n^2, alpha=0.25: {}", shown.join(", ")));
    Ok(c)
}

fn fubini_study_norms() -> rhlab::Result<Checks> {
    let mut c = Checks::new();
    let mut worst = 0.0f64;
    for d in [1u32, 2, 7, 50, 137, 400] {
        let q = HomogeneousPolynomial::monomial(&[d, 0, 0]);
        for x in [[0.0, 0.0], [0.1, -0.2], [1.0, 0.5], [-3.0, 4.0]] {
            let r2: f64 = 1.0 + x[0] * x[0] + x[1] * x[1];
            let exact = (-(d as f64) * r2.ln()).exp();
            let v = fs_pointwise_norm_sq(&q, &[1.0, x[0], x[1]])?;
            worst = worst.max((v - exact).abs() / exact);
        }
    }
    check(&mut c, worst <= X0_POWER_REL, format!("|X0^d|^2 vs (1+|x|^2)^-d, d<=400: worst rel {worst:.2e}"));

    let mut gram_err = 0.0f64;
    for d in 1..=5u32 {
        let basis: Vec<HomogeneousPolynomial> = (0..=d)
            .map(|k| {
                let a = [d - k, k];
                HomogeneousPolynomial::monomial(&a).scale(kostlan_weight(1, d, &a).unwrap())
            })
            .collect();
        for (i, p) in basis.iter().enumerate() {
            for (j, q) in basis.iter().enumerate() {
                let g = fs_l2_inner(p, q)?;
                gram_err = gram_err.max((g - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
    }
    check(&mut c, gram_err <= GRAM_ABS, format!("Kostlan Gram matrix n=1, d<=5: max |G - I| {gram_err:.2e}"));

    // x^2 - 1/4 on the projective line; the ball has R = 2.
    let p = AffinePolynomial::from_terms(1, &[(1.0, vec![2]), (-0.25, vec![0])])?;
    let o = ProjectivePoint::origin(1);
    for d in [50u32, 100, 200, 400] {
        let s = build_peak_section(&p, d, &o)?;
        let norm = fs_l2_norm_sq(&s.section)?.sqrt();
        check(&mut c, (norm - 1.0).abs() < PEAK_NORM_REL, format!("n=1 d={d}: |sigma_P| = {norm:.5}"));
    }
    let s = build_peak_section(&p, 200, &o)?;
    let f = mass_fraction_in_ball(&s.section, &o, 2.0 / 200f64.sqrt())?;
    check(&mut c, f >= PEAK_MASS, format!("n=1 d=200: mass in B(x, 2/sqrt d) = {f:.5}"));
    let circle = HypersurfaceModel::unit_circle();
    let o2 = ProjectivePoint::origin(2);
    let s2 = build_peak_section(&circle.p, 200, &o2)?;
    let f2 = mass_fraction_in_ball(&s2.section, &o2, circle.radius / 200f64.sqrt())?;
    check(&mut c, f2 >= PEAK_MASS, format!("n=2 circle d=200: mass in B(x, 2/sqrt d) = {f2:.5}"));
    Ok(c)
}

fn barrier_pipeline() -> rhlab::Result<Checks> {
    let mut c = Checks::new();
    let model = HypersurfaceModel::unit_circle();
    let cells = 64;
    let opts = CertificateOptions { cells, sup_trials: 200, seed: 301 };
    let cert = assemble_certificate(&model, 60, opts)?;
    check(
        &mut c,
        cert.ln_c_tilde.is_finite(),
        format!(
            "d=60: delta {:.4e} epsilon {:.4e} C1 {:.3} C2 {:.3} M {:.1} c_tilde = {}",
            cert.delta,
            cert.epsilon,
            cert.c1,
            cert.c2,
            cert.m,
            cert.c_tilde_log()
        ),
    );
    let ds = [20u32, 40, 60, 80];
    let sup = estimate_c1_c2(2, &ds, 200, model.radius, cells, 302)?;
    for &d in &ds {
        let m = markov_filter_mass(&sup, d, 400, 4.0, 303 + d as u64)?;
        check(&mut c, m.mean >= MARKOV_MASS, format!("d={d}: Markov-filtered mass {:.4}", m.mean));
    }
    let trap = isotopy_trap_check(&model, &cert, 200, Amplitude::Barrier, cells, 304)?;
    check(
        &mut c,
        trap.fraction == 1.0,
        format!("d=60: trapped isotopies {}/{} (worst margin {:.3})", trap.verified, trap.trials, trap.worst_margin),
    );
    let mut ps = Vec::new();
    for d in [20u32, 40, 80] {
        let p = presence_probability_mc(&model, d, 2000, cells, 305)?;
        ps.push(p.probability);
        check(
            &mut c,
            p.probability > 0.0,
            format!("d={d}: presence {:.4} +- {:.4}, indeterminate {:.3}", p.probability, p.std_error, p.indeterminate_fraction),
        );
    }
    let min = ps.iter().cloned().fold(f64::INFINITY, f64::min);
    let floor = 0.5 * ps[0];
    check(
        &mut c,
        min >= floor && min.ln() >= cert.ln_c_tilde,
        format!("min presence {min:.4} >= max(c_tilde, {floor:.4})"),
    );
    Ok(c)
}

fn curve_topology() -> rhlab::Result<Checks> {
    let mut c = Checks::new();
    let degrees = [4u32, 8, 12, 16];
    let per = CURVE_SAMPLES / degrees.len();
    let mut total = 0;
    let mut over = 0;
    let mut parity = 0;
    let mut ratios = Vec::new();
    for &d in &degrees {
        let s = betti_statistics(d, per, None, 400 + d as u64)?;
        total += s.samples.len();
        over += s.samples.iter().filter(|t| t.b0 > harnack_bound(d)).count();
        parity += s.samples.iter().filter(|t| t.noncontractible != (d % 2) as usize).count();
        if d >= 8 {
            ratios.push((d, s.per_degree, s.std_error / d as f64));
        }
    }
    check(&mut c, over == 0 && total >= CURVE_SAMPLES, format!("{total} samples, {over} above the Harnack bound"));
    check(&mut c, parity == 0, format!("pseudoline parity violations: {parity}"));
    let mut spread = 0.0f64;
    for a in &ratios {
        for b in &ratios {
            spread = spread.max(a.1 / b.1 - 1.0);
        }
    }
    let shown: Vec<String> = ratios.iter().map(|r| format!("d={}: {:.4} +- {:.4}", r.0, r.1, r.2)).collect();
    check(&mut c, spread <= PER_DEGREE_SPREAD, format!("mean_b0/d {}; max pairwise excess {spread:.3}", shown.join(", ")));
    let (mut cmp, mut agree) = (0, 0);
    for d in [8u32, 12, 16] {
        let r = refinement_stability(d, 300, level_for_degree(d)?, 410 + d as u64)?;
        cmp += r.compared;
        agree += r.agreeing;
    }
    let frac = agree as f64 / cmp as f64;
    check(&mut c, frac >= REFINEMENT, format!("refinement agreement {agree}/{cmp} = {frac:.4}"));
    Ok(c)
}

fn packing() -> rhlab::Result<Checks> {
    let mut c = Checks::new();
    for m in [Manifold::Sphere(2), Manifold::ProjectiveSpace(2)] {
        let stats = packing_sweep(m, &[0.1, 0.05, 0.025], 501)?;
        let last = stats.last().unwrap();
        check(
            &mut c,
            last.normalized >= PACKING_LOW * last.bound && last.normalized <= PACKING_HIGH * last.ceiling,
            format!("{m} eps={}: eps^2 N = {:.4}, window [{:.4}, {:.4}]", last.epsilon, last.normalized, last.bound, last.ceiling),
        );
        for s in &stats {
            check(
                &mut c,
                s.covering.passed(),
                format!("{m} eps={}: N={} covering {}/{} uncovered", s.epsilon, s.count, s.covering.uncovered, s.covering.samples),
            );
        }
    }
    Ok(c)
}

fn assembly_sandwich() -> rhlab::Result<Checks> {
    let mut c = Checks::new();
    let dir = tempfile::tempdir()?;
    let cfg = dir.path().join("report.toml");
    std::fs::write(
        &cfg,
        "experiment = \"report\"\nseed = 601\nmodels = [\"circle\", \"two_ovals\", \"nested\"]\n\
         degrees = [8, 12, 16]\ntrials = 500\nmatrix_trials = 100000\ncertificate_degree = 60\n",
    )?;
    let runs = ["a", "b"]
        .iter()
        .map(|s| run_experiment(&cfg, &RunOptions { out_dir: dir.path().join(s), ..Default::default() }))
        .collect::<rhlab::Result<Vec<_>>>()?;
    let report: LowerBoundReport = serde_json::from_slice(&std::fs::read(dir.path().join("a/report.json"))?)?;
    let partial = report.partial();
    check(&mut c, partial.is_positive(), format!("partial c0- = {partial}"));
    for row in &report.empirical {
        let se = (row.normalized_std_error.powi(2) + report.c_plus_total_std_error.powi(2)).sqrt();
        check(
            &mut c,
            partial.value() <= row.normalized && row.normalized <= report.c_plus_total + Z * se,
            format!(
                "d={}: {partial} <= {:.5} <= {:.5} + 3 * {:.2e}",
                row.d, row.normalized, report.c_plus_total, se
            ),
        );
    }
    let mut identical = true;
    for p in &runs[0].artifacts {
        let q = runs[1].artifacts.iter().find(|q| q.file_name() == p.file_name());
        identical &= q.is_some_and(|q| std::fs::read(p).ok() == std::fs::read(q).ok());
    }
    check(&mut c, identical, format!("{} artifacts byte-identical across reruns: {identical}", runs[0].artifacts.len()));
    Ok(c)
}

fn main() {
    let criteria: [(u32, &str, fn() -> rhlab::Result<Checks>); 8] = [
        (1, "Kostlan exactness", kostlan_exactness),
        (2, "Crofton cross-check", crofton_cross_check),
        (3, "GOE constants", goe_constants),
        (4, "Fubini-Study norms", fubini_study_norms),
        (5, "barrier pipeline", barrier_pipeline),
        (6, "curve topology", curve_topology),
        (7, "packing", packing),
        (8, "assembly sandwich", assembly_sandwich),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (ok, lines) = match run() {
            Ok(checks) => (checks.iter().all(|c| c.0), checks),
            Err(e) => (false, vec![(false, format!("error: {e}"))]),
        };
        let secs = start.elapsed().as_secs_f64();
        println!("{} criterion {id} ({name}) [{secs:.1} s]", if ok { "PASS" } else { "FAIL" });
        for (pass, msg) in lines {
            println!("    {} {msg}", if pass { "ok  " } else { "MISS" });
        }
        failed += !ok as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
