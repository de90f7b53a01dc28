//! Flat TOML configuration and the experiment driver.
//!
//! Units: `degrees` are polynomial degrees, `epsilons` are round radians on
//! the unit sphere, `radii` are multiples of `1 / sqrt(d)` in the
//! volume-normalized metric, trial counts are sample counts.

use super::output::{num, ArtifactSink, Table};
use super::{builtin_models, catalog_entry, lower_bound_report};
use crate::curves2d::{betti_statistics, harnack_bound, polylines, trial_topology, SphereGrid};
use crate::ensembles::{EnsembleKind, EnsembleSpec, Sampler};
use crate::error::{Error, Result};
use crate::fubini::{build_peak_section, fs_l2_norm_sq, mass_fraction_in_ball, ProjectivePoint};
use crate::matrixstats::{asymptotic_profile, estimate_e_table, low_index_tail};
use crate::packing::{packing_sweep, Manifold};
use crate::roots1d::{expected_roots_crofton, expected_roots_mc};
use crate::transversality::{
    assemble_certificate, isotopy_trap_check, presence_probability_mc, Amplitude, CertificateOptions,
    HypersurfaceModel,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Roots1d,
    Matrixstats,
    Fubini,
    Barrier,
    Curves2d,
    Packing,
    Report,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Roots1d,
        ExperimentKind::Matrixstats,
        ExperimentKind::Fubini,
        ExperimentKind::Barrier,
        ExperimentKind::Curves2d,
        ExperimentKind::Packing,
        ExperimentKind::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Roots1d => "roots1d",
            ExperimentKind::Matrixstats => "matrixstats",
            ExperimentKind::Fubini => "fubini",
            ExperimentKind::Barrier => "barrier",
            ExperimentKind::Curves2d => "curves2d",
            ExperimentKind::Packing => "packing",
            ExperimentKind::Report => "report",
        }
    }

    /// Keys this experiment reads besides `experiment` and `seed`.
    fn fields(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::Roots1d => &["ensemble", "degrees", "trials"],
            ExperimentKind::Matrixstats => &["sizes", "trials", "alpha"],
            ExperimentKind::Fubini => &["model", "degrees", "radii"],
            ExperimentKind::Barrier => &["model", "degrees", "cells", "sup_trials", "trap_trials", "presence_trials"],
            ExperimentKind::Curves2d => &["degrees", "trials", "level", "dump_polyline"],
            ExperimentKind::Packing => &["manifold", "epsilons"],
            ExperimentKind::Report => &[
                "models",
                "degrees",
                "trials",
                "matrix_trials",
                "certificate_degree",
                "cells",
                "sup_trials",
                "presence_trials",
                "index",
            ],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

/// Every key any experiment understands. Keys not read by the selected
/// experiment are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degrees: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    /// Built-in model name or a model file path relative to the config.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub models: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sup_trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trap_trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub presence_trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump_polyline: Option<bool>,
    /// `S1`, `S2`, `RP1` or `RP2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifold: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix_trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_degree: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
}

impl FromStr for Config {
    type Err = Error;
    fn from_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn positive(name: &str, v: usize) -> Result<usize> {
    if v == 0 {
        return Err(config_err(format!("field `{name}` must be positive")));
    }
    Ok(v)
}

fn nonempty<T: Clone>(name: &str, v: &Option<Vec<T>>, default: &[T]) -> Result<Vec<T>> {
    let v = v.clone().unwrap_or_else(|| default.to_vec());
    if v.is_empty() {
        return Err(config_err(format!("field `{name}` must not be empty")));
    }
    Ok(v)
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        text.parse::<Config>().map_err(|e| match e {
            Error::Config(m) => config_err(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Picks the experiment from the command line and the file; they must
    /// agree when both are given.
    pub fn resolve_kind(&self, requested: Option<ExperimentKind>) -> Result<ExperimentKind> {
        match (requested, self.experiment) {
            (Some(a), Some(b)) if a != b => {
                Err(config_err(format!("config declares experiment `{b}` but `{a}` was requested")))
            }
            (Some(a), _) | (None, Some(a)) => Ok(a),
            (None, None) => Err(config_err("missing field `experiment`")),
        }
    }

    /// Rejects keys the experiment does not read.
    pub fn check_fields(&self, kind: ExperimentKind) -> Result<()> {
        let v = serde_json::to_value(self)?;
        let allowed = kind.fields();
        for (k, val) in v.as_object().into_iter().flatten() {
            if val.is_null() || k == "experiment" || k == "seed" {
                continue;
            }
            if !allowed.contains(&k.as_str()) {
                return Err(config_err(format!("field `{k}` is not used by experiment `{kind}`")));
            }
        }
        Ok(())
    }
}

/// Options supplied by the command line.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub experiment: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub experiment: ExperimentKind,
    pub manifest: PathBuf,
    pub artifacts: Vec<PathBuf>,
    pub details: Value,
}

fn parse_manifold(s: &str) -> Result<Manifold> {
    match s {
        "S1" => Ok(Manifold::Sphere(1)),
        "S2" => Ok(Manifold::Sphere(2)),
        "RP1" => Ok(Manifold::ProjectiveSpace(1)),
        "RP2" => Ok(Manifold::ProjectiveSpace(2)),
        other => Err(config_err(format!("field `manifold`: expected S1, S2, RP1 or RP2, got {other:?}"))),
    }
}

/// A built-in model by name, or a model file relative to `base`.
pub fn resolve_model(spec: &str, base: &Path) -> Result<HypersurfaceModel> {
    if let Some(m) = builtin_models()?.into_iter().find(|m| m.name == spec) {
        return Ok(m);
    }
    let path = base.join(spec);
    if !path.is_file() {
        return Err(config_err(format!("model {spec:?} is neither built in nor a file under {}", base.display())));
    }
    HypersurfaceModel::load(&path)
}

/// Reads the config, runs the experiment, and writes its artifacts plus a
/// manifest into `opts.out_dir`. On failure after parsing, a manifest with
/// the error and any partial value is still written.
pub fn run_experiment(config_path: &Path, opts: &RunOptions) -> Result<RunOutcome> {
    let bytes = std::fs::read(config_path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", config_path.display())))?;
    let cfg = Config::load(config_path)?;
    let kind = cfg.resolve_kind(opts.experiment)?;
    cfg.check_fields(kind)?;
    let seed = opts.seed.or(cfg.seed).unwrap_or(1);
    let base = config_path.parent().map(Path::to_path_buf).unwrap_or_default();

    let mut sink = ArtifactSink::new(&opts.out_dir)?;
    let start = Instant::now();
    let result = run_kind(kind, &cfg, seed, &base, &mut sink);
    let wall = start.elapsed().as_secs_f64();

    let (status, error, partial, details) = match &result {
        Ok(d) => ("ok", Value::Null, Value::Null, d.clone()),
        Err(e) => {
            let partial = match e {
                Error::NumericalFailure { partial: Some(p), .. } => json!(p),
                _ => Value::Null,
            };
            let status = if matches!(e, Error::NumericalFailure { .. }) { "numerical_failure" } else { "failed" };
            (status, json!(e.to_string()), partial, Value::Null)
        }
    };
    let manifest = json!({
        "experiment": kind.name(),
        "status": status,
        "error": error,
        "partial": partial,
        "seed": seed,
        "config_file": config_path.display().to_string(),
        "config_sha256": super::output::sha256_hex(&bytes),
        "config": cfg,
        "versions": { "rhlab": env!("CARGO_PKG_VERSION") },
        "wall_time_seconds": wall,
        "artifacts": sink.records(),
        "details": details,
    });
    let manifest_path = sink.write_json(&format!("{}_manifest.json", kind.name()), &manifest)?;
    let details = result?;
    let artifacts = sink.paths().into_iter().filter(|p| *p != manifest_path).collect();
    Ok(RunOutcome { experiment: kind, manifest: manifest_path, artifacts, details })
}

fn run_kind(kind: ExperimentKind, cfg: &Config, seed: u64, base: &Path, sink: &mut ArtifactSink) -> Result<Value> {
    match kind {
        ExperimentKind::Roots1d => run_roots1d(cfg, seed, sink),
        ExperimentKind::Matrixstats => run_matrixstats(cfg, seed, sink),
        ExperimentKind::Fubini => run_fubini(cfg, base, sink),
        ExperimentKind::Barrier => run_barrier(cfg, seed, base, sink),
        ExperimentKind::Curves2d => run_curves2d(cfg, seed, sink),
        ExperimentKind::Packing => run_packing(cfg, seed, sink),
        ExperimentKind::Report => run_report(cfg, seed, base, sink),
    }
}

fn run_roots1d(cfg: &Config, seed: u64, sink: &mut ArtifactSink) -> Result<Value> {
    let kind = cfg.ensemble.unwrap_or(EnsembleKind::Kostlan);
    let degrees = nonempty("degrees", &cfg.degrees, &[25])?;
    let trials = positive("trials", cfg.trials.unwrap_or(1000))?;
    let mut t = Table::new(&["kind", "d", "trials", "mean", "std_error", "crofton_value", "sturm_fallbacks"]);
    let mut fallbacks = 0;
    for &d in &degrees {
        let spec = EnsembleSpec { kind, nvars: 2, degree: d, seed };
        let s = expected_roots_mc(&spec, trials)?;
        let crofton = expected_roots_crofton(&spec)?;
        fallbacks += s.sturm_fallbacks;
        t.push(vec![
            kind.to_string(),
            d.to_string(),
            trials.to_string(),
            num(s.estimate.mean),
            num(s.estimate.std_error),
            num(crofton),
            s.sturm_fallbacks.to_string(),
        ])?;
    }
    sink.write_csv("roots1d.csv", &t)?;
    Ok(json!({ "ensemble": kind, "degrees": degrees, "trials": trials, "sturm_fallbacks": fallbacks }))
}

fn run_matrixstats(cfg: &Config, seed: u64, sink: &mut ArtifactSink) -> Result<Value> {
    let sizes = nonempty("sizes", &cfg.sizes, &[1, 2, 3])?;
    if sizes.contains(&0) {
        return Err(config_err("field `sizes`: matrix sizes must be positive"));
    }
    let trials = positive("trials", cfg.trials.unwrap_or(100_000))?;
    let mut t = Table::new(&["m", "i", "e_hat", "std_error", "hits", "c_plus", "total", "gamma_ratio"]);
    for &m in &sizes {
        let tab = estimate_e_table(m, trials, seed)?;
        let cp = tab.c_plus();
        let ratio = tab.total() / asymptotic_profile(m + 1);
        for i in 0..=m {
            t.push(vec![
                m.to_string(),
                i.to_string(),
                num(tab.e_hat[i]),
                num(tab.std_errors[i]),
                tab.hits[i].to_string(),
                num(cp[i]),
                num(tab.total()),
                num(ratio),
            ])?;
        }
    }
    sink.write_csv("matrixstats.csv", &t)?;
    if let Some(alpha) = cfg.alpha {
        let mut tail = Table::new(&["n", "alpha", "cutoff", "value", "std_error", "upper_bound"]);
        for &m in &sizes {
            let e = low_index_tail(m + 1, alpha, trials, seed)?;
            tail.push(vec![
                e.n.to_string(),
                num(alpha),
                e.cutoff.to_string(),
                num(e.value),
                num(e.std_error),
                e.upper_bound.to_string(),
            ])?;
        }
        sink.write_csv("matrixstats_tail.csv", &tail)?;
    }
    Ok(json!({ "sizes": sizes, "trials": trials, "alpha": cfg.alpha }))
}

fn run_fubini(cfg: &Config, base: &Path, sink: &mut ArtifactSink) -> Result<Value> {
    let model = resolve_model(cfg.model.as_deref().unwrap_or("circle"), base)?;
    let degrees = nonempty("degrees", &cfg.degrees, &[50, 100, 200])?;
    let radii = nonempty("radii", &cfg.radii, &[1.0, 2.0, 3.0])?;
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(config_err("field `radii` must hold positive values"));
    }
    let n = model.n();
    let center = ProjectivePoint::origin(n);
    let mut t = Table::new(&["d", "radius_factor", "radius", "l2_norm_sq", "mass_fraction"]);
    for &d in &degrees {
        let peak = build_peak_section(&model.p, d, &center)?;
        let norm = fs_l2_norm_sq(&peak.section)?;
        for &r in &radii {
            let radius = r / (d as f64).sqrt();
            let frac = mass_fraction_in_ball(&peak.section, &center, radius)?;
            t.push(vec![d.to_string(), num(r), num(radius), num(norm), num(frac)])?;
        }
    }
    sink.write_csv("fubini.csv", &t)?;
    Ok(json!({ "model": model.name, "n": n, "degrees": degrees, "radii": radii }))
}

fn run_barrier(cfg: &Config, seed: u64, base: &Path, sink: &mut ArtifactSink) -> Result<Value> {
    let model = resolve_model(cfg.model.as_deref().unwrap_or("circle"), base)?;
    let degrees = nonempty("degrees", &cfg.degrees, &[20, 40])?;
    let cells = positive("cells", cfg.cells.unwrap_or(64))?;
    let opts = CertificateOptions { cells, sup_trials: positive("sup_trials", cfg.sup_trials.unwrap_or(100))?, seed };
    let trap_trials = cfg.trap_trials.unwrap_or(20);
    let presence_trials = cfg.presence_trials.unwrap_or(200);
    let mut t = Table::new(&[
        "d",
        "delta",
        "epsilon",
        "C1",
        "C2",
        "M",
        "ln_c_tilde",
        "log10_c_tilde",
        "trap_trials",
        "trap_fraction",
        "presence_trials",
        "presence_probability",
        "presence_std_error",
        "presence_indeterminate_fraction",
    ]);
    let mut certs = Vec::new();
    for &d in &degrees {
        let cert = assemble_certificate(&model, d, opts)?;
        let trap = if trap_trials > 0 {
            Some(isotopy_trap_check(&model, &cert, trap_trials, Amplitude::Barrier, cells, seed)?)
        } else {
            None
        };
        let presence = if presence_trials > 0 {
            Some(presence_probability_mc(&model, d, presence_trials, cells, seed)?)
        } else {
            None
        };
        let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
        t.push(vec![
            d.to_string(),
            num(cert.delta),
            num(cert.epsilon),
            num(cert.c1),
            num(cert.c2),
            num(cert.m),
            num(cert.ln_c_tilde),
            num(cert.ln_c_tilde / std::f64::consts::LN_10),
            trap_trials.to_string(),
            opt(trap.as_ref().map(|r| r.fraction)),
            presence_trials.to_string(),
            opt(presence.map(|p| p.probability)),
            opt(presence.map(|p| p.std_error)),
            opt(presence.map(|p| p.indeterminate_fraction)),
        ])?;
        certs.push(cert);
    }
    sink.write_csv("barrier.csv", &t)?;
    sink.write_json("barrier_certificates.json", &certs)?;
    Ok(json!({
        "model": model.name,
        "degrees": degrees,
        "cells": cells,
        "sup_trials": opts.sup_trials,
        "trap_trials": trap_trials,
        "presence_trials": presence_trials,
    }))
}

fn run_curves2d(cfg: &Config, seed: u64, sink: &mut ArtifactSink) -> Result<Value> {
    let degrees = nonempty("degrees", &cfg.degrees, &[8])?;
    let trials = positive("trials", cfg.trials.unwrap_or(100))?;
    let mut per = Table::new(&["d", "trial", "level", "b0", "n_noncontractible", "flagged", "refined"]);
    let mut agg = Table::new(&[
        "d",
        "trials",
        "level",
        "mean_b0",
        "std_error",
        "max_b0",
        "harnack_bound",
        "normalized",
        "normalized_std_error",
        "refined",
        "residual_flagged_fraction",
    ]);
    let mut levels = Vec::new();
    for &d in &degrees {
        let s = betti_statistics(d, trials, cfg.level, seed)?;
        for x in &s.samples {
            per.push(vec![
                d.to_string(),
                x.trial.to_string(),
                x.level.to_string(),
                x.b0.to_string(),
                x.noncontractible.to_string(),
                x.flagged.to_string(),
                x.refined.to_string(),
            ])?;
        }
        agg.push(vec![
            d.to_string(),
            trials.to_string(),
            s.level.to_string(),
            num(s.mean_b0),
            num(s.std_error),
            s.max_b0_observed.to_string(),
            harnack_bound(d).to_string(),
            num(s.normalized),
            num(s.normalized_std_error),
            s.refined.to_string(),
            num(s.residual_flagged_fraction),
        ])?;
        levels.push(s.level);
    }
    sink.write_csv("curves2d.csv", &per)?;
    sink.write_csv("curves2d_summary.csv", &agg)?;
    if cfg.dump_polyline.unwrap_or(false) {
        let d = degrees[0];
        let sampler = Sampler::new(EnsembleSpec::kostlan(3, d, seed))?;
        let (_, topo) = trial_topology(&sampler, 0, levels[0])?;
        let grid = SphereGrid::get(topo.level);
        let values = grid.evaluate(&sampler.sample(0))?;
        let mut t = Table::new(&["component", "point", "x", "y", "z"]);
        for (c, line) in polylines(&values, &grid, &topo).iter().enumerate() {
            for (k, p) in line.iter().enumerate() {
                t.push(vec![c.to_string(), k.to_string(), num(p[0]), num(p[1]), num(p[2])])?;
            }
        }
        sink.write_csv("curves2d_polyline.csv", &t)?;
    }
    Ok(json!({ "degrees": degrees, "trials": trials, "levels": levels }))
}

fn run_packing(cfg: &Config, seed: u64, sink: &mut ArtifactSink) -> Result<Value> {
    let manifold = parse_manifold(cfg.manifold.as_deref().unwrap_or("RP2"))?;
    let epsilons = nonempty("epsilons", &cfg.epsilons, &[0.2, 0.1, 0.05])?;
    if epsilons.iter().any(|e| !(*e > 0.0)) || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(config_err("field `epsilons` must be positive and strictly decreasing (radians)"));
    }
    let stats = packing_sweep(manifold, &epsilons, seed)?;
    let mut t = Table::new(&[
        "manifold",
        "epsilon",
        "N",
        "normalized",
        "bound",
        "ceiling",
        "covering_samples",
        "uncovered",
        "max_distance",
    ]);
    for s in &stats {
        t.push(vec![
            s.manifold.to_string(),
            num(s.epsilon),
            s.count.to_string(),
            num(s.normalized),
            num(s.bound),
            num(s.ceiling),
            s.covering.samples.to_string(),
            s.covering.uncovered.to_string(),
            num(s.covering.max_distance),
        ])?;
    }
    sink.write_csv("packing.csv", &t)?;
    Ok(json!({
        "manifold": manifold.to_string(),
        "epsilons": epsilons,
        "covering_passed": stats.iter().all(|s| s.covering.passed()),
    }))
}

fn run_report(cfg: &Config, seed: u64, base: &Path, sink: &mut ArtifactSink) -> Result<Value> {
    let names = nonempty("models", &cfg.models, &["circle".to_string()])?;
    let models = names.iter().map(|m| resolve_model(m, base)).collect::<Result<Vec<_>>>()?;
    let degrees = nonempty("degrees", &cfg.degrees, &[8, 12, 16])?;
    let trials = positive("trials", cfg.trials.unwrap_or(200))?;
    let matrix_trials = positive("matrix_trials", cfg.matrix_trials.unwrap_or(100_000))?;
    let cert_d = cfg.certificate_degree.unwrap_or(60);
    let cells = positive("cells", cfg.cells.unwrap_or(64))?;
    let opts = CertificateOptions { cells, sup_trials: positive("sup_trials", cfg.sup_trials.unwrap_or(100))?, seed };
    let presence_trials = cfg.presence_trials.unwrap_or(0);
    let i = cfg.index.unwrap_or(0);

    let catalog = models.iter().map(|m| catalog_entry(m, cert_d, opts, presence_trials)).collect::<Result<Vec<_>>>()?;
    let n = models[0].n();
    let matrix = estimate_e_table(n - 1, matrix_trials, seed)?;
    let curves = degrees.iter().map(|&d| betti_statistics(d, trials, None, seed)).collect::<Result<Vec<_>>>()?;
    let report = lower_bound_report(&catalog, i, &matrix, &curves)?;

    let mut cat = Table::new(&[
        "name",
        "signature",
        "b_i",
        "radius",
        "radius_fs",
        "d",
        "delta",
        "epsilon",
        "M",
        "ln_c_tilde",
        "ln_c_sigma",
        "log10_c_sigma",
        "presence_probability",
        "presence_std_error",
    ]);
    for e in &catalog {
        cat.push(vec![
            e.name.clone(),
            e.signature.clone(),
            e.betti[i].to_string(),
            num(e.radius),
            num(e.radius_fs),
            e.certificate.d.to_string(),
            num(e.certificate.delta),
            num(e.certificate.epsilon),
            num(e.certificate.m),
            num(e.certificate.ln_c_tilde),
            num(e.ln_c_sigma),
            num(e.ln_c_sigma / std::f64::consts::LN_10),
            e.presence_probability.map(num).unwrap_or_default(),
            e.presence_std_error.map(num).unwrap_or_default(),
        ])?;
    }
    let mut emp = Table::new(&["d", "trials", "mean_b0", "std_error", "normalized", "normalized_std_error", "ceiling", "max_b0"]);
    for r in &report.empirical {
        emp.push(vec![
            r.d.to_string(),
            r.trials.to_string(),
            num(r.mean_b0),
            num(r.std_error),
            num(r.normalized),
            num(r.normalized_std_error),
            num(r.ceiling),
            r.max_b0.to_string(),
        ])?;
    }
    let mut ver = Table::new(&["name", "passed", "detail"]);
    for v in &report.verdicts {
        ver.push(vec![v.name.clone(), v.passed.to_string(), v.detail.clone()])?;
    }
    sink.write_csv("report_catalog.csv", &cat)?;
    sink.write_csv("report_empirical.csv", &emp)?;
    sink.write_csv("report_verdicts.csv", &ver)?;
    sink.write_json("report.json", &report)?;
    Ok(json!({
        "n": n,
        "i": i,
        "models": names,
        "certificate_degree": cert_d,
        "cells": cells,
        "sup_trials": opts.sup_trials,
        "presence_trials": presence_trials,
        "curve_degrees": degrees,
        "curve_trials": trials,
        "curve_levels": curves.iter().map(|c| c.level).collect::<Vec<_>>(),
        "matrix_trials": matrix_trials,
        "partial_log10": report.partial_log10,
        "all_verdicts_passed": report.all_passed(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_and_experiments_are_config_errors() {
        let e = "experiment = \"roots1d\"\ntrails = 3\n".parse::<Config>().unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("trails") && m.contains("line 2")), "{e}");
        let e = "experiment = \"roots2d\"\n".parse::<Config>().unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!("roots2d".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn fields_must_belong_to_the_experiment() {
        let c: Config = "experiment = \"roots1d\"\nepsilons = [0.1]\n".parse().unwrap();
        let e = c.check_fields(ExperimentKind::Roots1d).unwrap_err();
        assert!(e.to_string().contains("epsilons"));
        assert!(c.resolve_kind(Some(ExperimentKind::Packing)).is_err());
        let c: Config = "degrees = [3]\n".parse().unwrap();
        assert_eq!(c.resolve_kind(Some(ExperimentKind::Roots1d)).unwrap(), ExperimentKind::Roots1d);
        assert!(c.resolve_kind(None).is_err());
    }

    #[test]
    fn roots1d_run_writes_csv_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("r.toml");
        std::fs::write(&cfg, "experiment = \"roots1d\"\nensemble = \"kostlan\"\ndegrees = [25]\ntrials = 1000\nseed = 3\n")
            .unwrap();
        let out = dir.path().join("out");
        let r = run_experiment(&cfg, &RunOptions { out_dir: out.clone(), ..Default::default() }).unwrap();
        let text = std::fs::read_to_string(out.join("roots1d.csv")).unwrap();
        let lines: Vec<&str> = text.split("\r\n").filter(|l| !l.is_empty()).collect();
        assert_eq!(lines.len(), 2);
        let mean: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
        assert!((mean - 5.0).abs() < 0.3, "{mean}");
        let m: Value = serde_json::from_slice(&std::fs::read(&r.manifest).unwrap()).unwrap();
        assert_eq!(m["status"], "ok");
        assert_eq!(m["seed"], 3);
        assert_eq!(m["artifacts"][0]["file"], "roots1d.csv");
    }

    #[test]
    fn bad_field_values_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("p.toml");
        std::fs::write(&cfg, "experiment = \"packing\"\nmanifold = \"T2\"\n").unwrap();
        let e = run_experiment(&cfg, &RunOptions { out_dir: dir.path().join("o"), ..Default::default() }).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        std::fs::write(&cfg, "experiment = \"packing\"\nepsilons = [0.1, 0.2]\n").unwrap();
        let e = run_experiment(&cfg, &RunOptions { out_dir: dir.path().join("o"), ..Default::default() }).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
