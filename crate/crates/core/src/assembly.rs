//! Lower-bound assembly: catalog constants, the comparison report, and the
//! experiment driver behind the command-line tool.

pub mod config;
pub mod output;

pub use config::{run_experiment, Config, ExperimentKind, RunOutcome};

use crate::curves2d::{harnack_bound, BettiStats};
use crate::error::{Error, Result};
use crate::fubini::{fs_length_scale, fs_volume_rp};
use crate::matrixstats::DetExpectationTable;
use crate::special::{unit_ball_volume, LogScale};
use crate::transversality::{
    assemble_certificate, presence_probability_mc, BarrierCertificate, CertificateOptions, HypersurfaceModel,
    ModelFile,
};
use serde::{Deserialize, Serialize};

/// `c_tilde / (2^n Vol(B(0, R)))` with `R` in the length unit of the volume
/// normalization used for the comparison.
pub fn compute_c_sigma(c_tilde: LogScale, n: usize, radius: f64) -> Result<LogScale> {
    if !c_tilde.is_positive() {
        return Err(Error::invalid("c_tilde must be positive"));
    }
    if !(radius > 0.0) || n == 0 {
        return Err(Error::invalid("radius and dimension must be positive"));
    }
    let vol = unit_ball_volume(n) * radius.powi(n as i32);
    Ok(c_tilde.scale(1.0 / (2f64.powi(n as i32) * vol)))
}

/// Built-in catalog models, parsed from the files under `models/`.
pub fn builtin_models() -> Result<Vec<HypersurfaceModel>> {
    [
        include_str!("../models/circle.toml"),
        include_str!("../models/two_ovals.toml"),
        include_str!("../models/nested.toml"),
    ]
    .iter()
    .map(|text| {
        let f: ModelFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        HypersurfaceModel::from_file(f)
    })
    .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SigmaCatalogEntry {
    pub name: String,
    pub n: usize,
    pub signature: String,
    pub betti: Vec<usize>,
    /// Ball radius in rescaled chart units.
    pub radius: f64,
    /// The same radius in the volume-normalized metric.
    pub radius_fs: f64,
    pub certificate: BarrierCertificate,
    pub ln_c_sigma: f64,
    /// Direct Monte Carlo estimate of the presence probability, reported
    /// beside the certified bound and never substituted for it.
    pub presence_probability: Option<f64>,
    pub presence_std_error: Option<f64>,
}

impl SigmaCatalogEntry {
    pub fn c_sigma(&self) -> LogScale {
        LogScale::from_ln(self.ln_c_sigma)
    }

    pub fn c_tilde(&self) -> LogScale {
        LogScale::from_ln(self.certificate.ln_c_tilde)
    }
}

/// Certifies one model at degree `d` and derives its catalog constant.
pub fn catalog_entry(
    model: &HypersurfaceModel,
    d: u32,
    opts: CertificateOptions,
    presence_trials: usize,
) -> Result<SigmaCatalogEntry> {
    let cert = assemble_certificate(model, d, opts)?;
    let n = model.n();
    let radius_fs = fs_length_scale(n) * model.radius;
    let c_sigma = compute_c_sigma(LogScale::from_ln(cert.ln_c_tilde), n, radius_fs)?;
    let presence = if presence_trials > 0 {
        Some(presence_probability_mc(model, d, presence_trials, opts.cells, opts.seed)?)
    } else {
        None
    };
    Ok(SigmaCatalogEntry {
        name: model.name.clone(),
        n,
        signature: model.signature.clone(),
        betti: model.betti(),
        radius: model.radius,
        radius_fs,
        certificate: cert,
        ln_c_sigma: c_sigma.ln,
        presence_probability: presence.map(|p| p.probability),
        presence_std_error: presence.map(|p| p.std_error),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalRow {
    pub d: u32,
    pub trials: usize,
    pub mean_b0: f64,
    pub std_error: f64,
    /// `mean_b0 / (sqrt(d)^n Vol_FS(RP^n))`.
    pub normalized: f64,
    pub normalized_std_error: f64,
    /// Harnack bound in the same normalization.
    pub ceiling: f64,
    pub max_b0: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub n: usize,
    pub i: usize,
    /// `sum c_sigma b_i(Sigma)` over the catalog, a partial lower bound.
    pub ln_partial: f64,
    pub partial_log10: f64,
    pub catalog: Vec<SigmaCatalogEntry>,
    pub empirical: Vec<EmpiricalRow>,
    /// `c_i^+` and the sum over `i` of the `c^+`, from the matrix table.
    pub c_plus_i: f64,
    pub c_plus_i_std_error: f64,
    pub c_plus_total: f64,
    pub c_plus_total_std_error: f64,
    pub verdicts: Vec<Verdict>,
}

impl LowerBoundReport {
    pub fn partial(&self) -> LogScale {
        LogScale::from_ln(self.ln_partial)
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

fn verdict(name: &str, passed: bool, detail: String) -> Verdict {
    Verdict { name: name.to_string(), passed, detail }
}

/// Combines catalog constants, the matrix upper constant and the curve
/// statistics into the comparison chain
/// `0 < partial <= empirical <= c^+ (+ 3 se) ` and the ceiling checks.
pub fn lower_bound_report(
    catalog: &[SigmaCatalogEntry],
    i: usize,
    matrix: &DetExpectationTable,
    curves: &[BettiStats],
) -> Result<LowerBoundReport> {
    let n = matrix.m + 1;
    if n != 2 {
        return Err(Error::invalid(format!("curve statistics are plane curves (n = 2), matrix table gives n = {n}")));
    }
    if i >= n {
        return Err(Error::invalid(format!("index i = {i} out of range for n = {n}")));
    }
    let mut partial = LogScale::zero();
    for e in catalog {
        if e.n != n {
            return Err(Error::invalid(format!("catalog entry {} has n = {}, matrix table gives n = {n}", e.name, e.n)));
        }
        let b = *e.betti.get(i).ok_or_else(|| Error::invalid(format!("{}: no b_{i}", e.name)))?;
        if b > 0 {
            partial = partial.add(e.c_sigma().scale(b as f64));
        }
    }
    let vol = fs_volume_rp(n);
    let empirical: Vec<EmpiricalRow> = curves
        .iter()
        .map(|s| EmpiricalRow {
            d: s.d,
            trials: s.trials,
            mean_b0: s.mean_b0,
            std_error: s.std_error,
            normalized: s.normalized,
            normalized_std_error: s.normalized_std_error,
            ceiling: harnack_bound(s.d) as f64 / (s.d as f64 * vol),
            max_b0: s.max_b0_observed,
        })
        .collect();
    // c_i^+ comes from signature (i, n - 1 - i), i.e. i positive eigenvalues.
    let cp = matrix.c_plus();
    let cps = matrix.c_plus_std_errors();
    let c_plus_i = cp[i];
    let c_plus_i_se = cps[i];
    let total = matrix.total();
    let total_se = matrix.total_std_error();

    let mut verdicts = Vec::new();
    let partial_value = partial.value();
    if catalog.is_empty() {
        verdicts.push(verdict("partial_nonnegative", true, "empty catalog: partial bound is 0".into()));
    } else {
        verdicts.push(verdict("partial_positive", partial.is_positive(), format!("partial = {partial}")));
    }
    for row in &empirical {
        verdicts.push(verdict(
            &format!("partial_below_empirical_d{}", row.d),
            partial_value <= row.normalized,
            format!("{partial} <= {:.6}", row.normalized),
        ));
        let combined = (row.normalized_std_error.powi(2) + total_se.powi(2)).sqrt();
        verdicts.push(verdict(
            &format!("empirical_below_c_plus_d{}", row.d),
            row.normalized <= total + 3.0 * combined,
            format!("{:.6} <= {:.6} + 3 * {:.2e}", row.normalized, total, combined),
        ));
        verdicts.push(verdict(
            &format!("empirical_below_harnack_d{}", row.d),
            row.normalized <= row.ceiling,
            format!("{:.6} <= {:.6}", row.normalized, row.ceiling),
        ));
        let dd = (row.d as usize).pow(n as u32);
        verdicts.push(verdict(
            &format!("betti_sum_below_d_power_d{}", row.d),
            row.max_b0 <= dd,
            format!("max b0 {} <= d^n = {dd}", row.max_b0),
        ));
    }
    verdicts.push(verdict(
        "partial_below_c_plus_i",
        partial_value <= c_plus_i + 3.0 * c_plus_i_se,
        format!("{partial} <= {c_plus_i:.6}"),
    ));
    Ok(LowerBoundReport {
        n,
        i,
        ln_partial: partial.ln,
        partial_log10: partial.ln / std::f64::consts::LN_10,
        catalog: catalog.to_vec(),
        empirical,
        c_plus_i,
        c_plus_i_std_error: c_plus_i_se,
        c_plus_total: total,
        c_plus_total_std_error: total_se,
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixstats::estimate_e_table;
    use std::f64::consts::PI;

    #[test]
    fn c_sigma_formula() {
        let c = compute_c_sigma(LogScale::from_value(0.25), 2, 1.0).unwrap();
        assert!((c.value() - 1.0 / (16.0 * PI)).abs() < 1e-15);
        let c2 = compute_c_sigma(LogScale::from_value(0.25), 2, 2.0).unwrap();
        assert!((c.value() / c2.value() - 4.0).abs() < 1e-12);
        assert!(compute_c_sigma(LogScale::zero(), 2, 1.0).is_err());
        assert!(compute_c_sigma(LogScale::from_value(0.25), 2, 0.0).is_err());
    }

    #[test]
    fn builtin_models_parse_and_validate() {
        let models = builtin_models().unwrap();
        let sigs: Vec<&str> = models.iter().map(|m| m.signature.as_str()).collect();
        assert_eq!(sigs, ["()", "()()", "(())"]);
        for m in &models {
            crate::transversality::validate_model(m, 256).unwrap();
        }
    }

    #[test]
    fn empty_catalog_passes_vacuously() {
        let t = estimate_e_table(1, 2_000, 1).unwrap();
        let r = lower_bound_report(&[], 0, &t, &[]).unwrap();
        assert_eq!(r.partial().value(), 0.0);
        assert!(r.all_passed());
    }

    #[test]
    fn inconsistent_dimension_rejected() {
        let t = estimate_e_table(3, 100, 1).unwrap();
        assert!(lower_bound_report(&[], 0, &t, &[]).is_err());
    }
}
