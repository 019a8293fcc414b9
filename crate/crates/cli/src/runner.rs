//! Executes the requested methods on one model and writes every artifact.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::json;
use sha2::{Digest, Sha256};
use sgfem_core::sampling::draw_points;
use sgfem_core::stats::{exceedance, moments_from_gpc, pdf_estimate, rmse, sample_moments, PdfEstimate};
use sgfem_core::{collocation, monte_carlo, sg_newton_raphson, CollocationResult, NrHistory, SampleEnsemble, SgHistory};

use crate::config::{self, ConfigErrors, Method, Problem, RunConfig, Spectral};
use crate::output::{write_atomic, Csv, Field};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `[output] directory`.
    pub output_dir: Option<PathBuf>,
    /// Uses `[monte_carlo] long_samples`.
    pub long: bool,
    /// Caps the worker threads of this run.
    pub workers: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration errors:\n{0}")]
    Config(ConfigErrors),
    #[error("{0}")]
    Runtime(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Runtime(_) => 3,
        }
    }
}

impl From<ConfigErrors> for RunError {
    fn from(e: ConfigErrors) -> Self {
        RunError::Config(e)
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    /// Method failures; outputs cover the increments that converged.
    pub failures: Vec<String>,
}

pub fn run_file(path: &Path, options: &RunOptions) -> Result<RunSummary, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::Config(ConfigErrors(vec![format!("cannot read {}: {e}", path.display())])))?;
    let config = config::parse(&text)?;
    run(&config, &text, options)
}

/// Runs every requested method, writing CSVs and `metadata.json`.
pub fn run(config: &RunConfig, config_text: &str, options: &RunOptions) -> Result<RunSummary, RunError> {
    match options.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| RunError::Runtime(format!("thread pool: {e}")))?
            .install(|| run_inner(config, config_text, options)),
        None => run_inner(config, config_text, options),
    }
}

struct Results {
    det: NrHistory,
    mc: Option<SampleEnsemble>,
    sc: Option<CollocationResult>,
    sg: Option<SgHistory>,
    spectral: Option<Spectral>,
    timing: BTreeMap<&'static str, f64>,
    failures: Vec<String>,
    samples: usize,
}

fn run_inner(config: &RunConfig, config_text: &str, options: &RunOptions) -> Result<RunSummary, RunError> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let problem = config.build()?;
    let dir = options
        .output_dir
        .clone()
        .or_else(|| config.output.directory.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("output"));
    fs::create_dir_all(&dir).map_err(|e| RunError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let results = execute(config, &problem, options)?;
    let files = write_outputs(config, config_text, &problem, &results, &dir, started)
        .map_err(|e| RunError::Runtime(format!("writing outputs in {}: {e}", dir.display())))?;
    Ok(RunSummary {
        output_dir: dir,
        files,
        failures: results.failures,
    })
}

fn execute(config: &RunConfig, problem: &Problem, options: &RunOptions) -> Result<Results, RunError> {
    let model = &problem.model;
    let program = &problem.program;
    let observables: Vec<_> = problem.observables.iter().map(|(_, o)| *o).collect();
    let mut timing = BTreeMap::new();
    let mut failures = Vec::new();

    let t = Instant::now();
    let det = model
        .solve_mean(program, &observables)
        .map_err(|e| RunError::Runtime(format!("det: {e}")))?;
    timing.insert("det", t.elapsed().as_secs_f64());
    if let Some(e) = &det.failure {
        failures.push(format!("det: increment {}: {e}", det.increments.len() + 1));
    }

    let samples = if options.long {
        config.monte_carlo.long_samples
    } else {
        config.monte_carlo.samples
    };
    let mc = if config.has(Method::Mc) {
        let t = Instant::now();
        let mc = monte_carlo(model, program, &observables, samples, config.monte_carlo.seed)
            .map_err(|e| RunError::Runtime(format!("mc: {e}")))?;
        timing.insert("mc", t.elapsed().as_secs_f64());
        for (s, r) in mc.results.iter().enumerate() {
            if let Some(e) = &r.failure {
                failures.push(format!("mc: sample {s}: increment {}: {e}", r.observations.len() + 1));
            }
        }
        Some(mc)
    } else {
        None
    };

    let spectral = config
        .spectral(model.dim())
        .transpose()
        .map_err(|e| RunError::Runtime(format!("spectral setup: {e}")))?;
    let (mut sc, mut sg) = (None, None);
    if let Some(sp) = &spectral {
        if config.has(Method::Sc) {
            let t = Instant::now();
            let r = collocation(model, program, &sp.rule, &sp.basis, &observables)
                .map_err(|e| RunError::Runtime(format!("sc: {e}")))?;
            timing.insert("sc", t.elapsed().as_secs_f64());
            if let Some(e) = &r.failure {
                failures.push(format!("sc: increment {}: {e}", r.coefficients.len() + 1));
            }
            sc = Some(r);
        }
        if config.has(Method::Sg) {
            let t = Instant::now();
            let h = sg_newton_raphson(model, program, &sp.basis, &sp.rule, &sp.options, &observables)
                .map_err(|e| RunError::Runtime(format!("sg: {e}")))?;
            timing.insert("sg", t.elapsed().as_secs_f64());
            if let Some(e) = &h.failure {
                failures.push(format!("sg: increment {}: {e}", h.increments.len() + 1));
            }
            sg = Some(h);
        }
    }
    Ok(Results {
        det,
        mc,
        sc,
        sg,
        spectral,
        timing,
        failures,
        samples,
    })
}

/// One observable of one method at one increment.
struct Stats {
    mu: f64,
    sigma: f64,
    rmse: Option<f64>,
    exceedance: Vec<Option<f64>>,
    pdf: Option<PdfEstimate>,
}

fn write_outputs(
    config: &RunConfig,
    config_text: &str,
    problem: &Problem,
    r: &Results,
    dir: &Path,
    started: u64,
) -> std::io::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut put = |name: &str, text: &str| -> std::io::Result<()> {
        files.push(write_atomic(dir, name, text.as_bytes())?);
        Ok(())
    };

    if config.has(Method::Det) {
        let mut csv = Csv::new(&["increment", "dof", "value"]);
        for (n, inc) in r.det.increments.iter().enumerate() {
            for (&g, &v) in problem.global_dofs.iter().zip(&inc.u) {
                csv.row(&[(n + 1).into(), g.into(), v.into()]);
            }
        }
        put("displacements.csv", csv.as_str())?;
    }
    if let Some(sg) = &r.sg {
        let coeffs: Vec<_> = sg.increments.iter().map(|i| &i.u).collect();
        put("gpc_sg.csv", gpc_csv(&coeffs, &problem.global_dofs).as_str())?;
        put("solver_report.csv", solver_csv(sg).as_str())?;
        put("residual_history.csv", residual_csv(sg).as_str())?;
        if config.solver.spd_probe > 0 {
            let mut csv = Csv::new(&["increment", "smallest_ritz_value"]);
            for (n, inc) in sg.increments.iter().enumerate() {
                csv.row(&[(n + 1).into(), inc.smallest_ritz.into()]);
            }
            put("spd_probe.csv", csv.as_str())?;
        }
    }
    if let Some(sc) = &r.sc {
        let coeffs: Vec<_> = sc.coefficients.iter().collect();
        put("gpc_sc.csv", gpc_csv(&coeffs, &problem.global_dofs).as_str())?;
    }
    if let Some(mc) = &r.mc {
        put("ensemble_mc.csv", ensemble_csv(mc, problem).as_str())?;
    }

    let stochastic = r.mc.is_some() || r.sc.is_some() || r.sg.is_some();
    if stochastic {
        let dim = problem.model.dim();
        let points = match &r.mc {
            Some(mc) => mc.points.clone(),
            None => draw_points(dim, r.samples, config.monte_carlo.seed),
        };
        let psi: Vec<Vec<f64>> = match &r.spectral {
            Some(sp) if r.sc.is_some() || r.sg.is_some() => points
                .iter()
                .map(|x| sp.basis.eval_all(x).expect("sample inside the support"))
                .collect(),
            _ => Vec::new(),
        };
        let multipliers = &config.statistics.exceedance;
        for (o, (name, _)) in problem.observables.iter().enumerate() {
            let mut header = vec!["method".to_string(), "increment".into(), "mu".into(), "sigma".into(), "rmse".into()];
            header.extend(multipliers.iter().map(|m| format!("pr_{m}")));
            let mut summary = Csv::new(&header);
            let mut pdf = Csv::new(&["method", "increment", "x", "density"]);
            let n_inc = problem.program.n_increments();
            for n in 0..n_inc {
                let u_m = r.det.increments.get(n).map(|i| i.observations[o]);
                let thresholds: Vec<Option<f64>> = multipliers.iter().map(|m| u_m.map(|u| m * u)).collect();
                let mc_values = r.mc.as_ref().filter(|mc| !mc.converged_at(n).is_empty()).map(|mc| (mc.converged_at(n), mc.values(n, o)));
                let mut rows: Vec<(&str, Stats)> = Vec::new();
                if let Some((_, values)) = &mc_values {
                    let (mu, sigma) = sample_moments(values);
                    rows.push((
                        "mc",
                        Stats {
                            mu,
                            sigma,
                            rmse: None,
                            exceedance: thresholds.iter().map(|t| t.map(|t| exceedance(values, t))).collect(),
                            pdf: pdf_estimate(values, config.statistics.pdf_points).ok(),
                        },
                    ));
                }
                let spectral_rows = [
                    ("sc", r.sc.as_ref().and_then(|sc| sc.observations.get(n)).map(|obs| &obs[o])),
                    ("sg", r.sg.as_ref().and_then(|sg| sg.increments.get(n)).map(|inc| &inc.observations[o])),
                ];
                for (method, coeffs) in spectral_rows {
                    let Some(coeffs) = coeffs else { continue };
                    let (mu, sigma) = moments_from_gpc(coeffs);
                    let surrogate: Vec<f64> = psi.iter().map(|p| p.iter().zip(coeffs).map(|(a, b)| a * b).sum()).collect();
                    let error = mc_values.as_ref().map(|(idx, values)| {
                        let at: Vec<f64> = idx.iter().map(|&s| surrogate[s]).collect();
                        rmse(values, &at).expect("paired values")
                    });
                    rows.push((
                        method,
                        Stats {
                            mu,
                            sigma,
                            rmse: error,
                            exceedance: thresholds.iter().map(|t| t.map(|t| exceedance(&surrogate, t))).collect(),
                            pdf: pdf_estimate(&surrogate, config.statistics.pdf_points).ok(),
                        },
                    ));
                }
                for (method, s) in rows {
                    let mut fields: Vec<Field> = vec![method.into(), (n + 1).into(), s.mu.into(), s.sigma.into(), s.rmse.into()];
                    fields.extend(s.exceedance.iter().map(|&p| Field::from(p)));
                    summary.row(&fields);
                    match s.pdf {
                        Some(PdfEstimate::Density { grid, density }) => {
                            for (x, d) in grid.iter().zip(&density) {
                                pdf.row(&[method.into(), (n + 1).into(), (*x).into(), (*d).into()]);
                            }
                        }
                        Some(PdfEstimate::Degenerate { value }) => {
                            pdf.row(&[method.into(), (n + 1).into(), value.into(), "inf".into()]);
                        }
                        None => {}
                    }
                }
            }
            put(&format!("summary_{name}.csv"), summary.as_str())?;
            put(&format!("pdf_{name}.csv"), pdf.as_str())?;
        }
    }

    let metadata = metadata(config, config_text, r, started);
    put("metadata.json", &serde_json::to_string_pretty(&metadata).expect("metadata serializes"))?;
    Ok(files)
}

fn gpc_csv(coeffs: &[&sgfem_core::GpcVector], global_dofs: &[usize]) -> Csv {
    let mut csv = Csv::new(&["increment", "basis_index", "dof", "coefficient"]);
    for (n, u) in coeffs.iter().enumerate() {
        for k in 0..u.n_xi() {
            for (&g, &v) in global_dofs.iter().zip(u.block(k)) {
                csv.row(&[(n + 1).into(), k.into(), g.into(), v.into()]);
            }
        }
    }
    csv
}

fn ensemble_csv(mc: &SampleEnsemble, problem: &Problem) -> Csv {
    let dim = problem.model.dim();
    let mut header = vec!["sample_id".to_string()];
    header.extend((1..=dim).map(|d| format!("xi_{d}")));
    header.extend(["increment".into(), "observable".into(), "value".into()]);
    let mut csv = Csv::new(&header);
    for (s, (point, result)) in mc.points.iter().zip(&mc.results).enumerate() {
        for (n, obs) in result.observations.iter().enumerate() {
            for ((name, _), &v) in problem.observables.iter().zip(obs) {
                let mut fields: Vec<Field> = vec![s.into()];
                fields.extend(point.iter().map(|&x| Field::from(x)));
                fields.extend([Field::from(n + 1), name.as_str().into(), v.into()]);
                csv.row(&fields);
            }
        }
    }
    csv
}

fn solver_csv(sg: &SgHistory) -> Csv {
    let mut csv = Csv::new(&["increment", "step", "preconditioner", "iterations", "final_relative_residual"]);
    for (n, inc) in sg.increments.iter().enumerate() {
        for step in &inc.solves {
            for rep in &step.reports {
                csv.row(&[
                    (n + 1).into(),
                    step.step.into(),
                    rep.preconditioner.tag().into(),
                    rep.iterations.into(),
                    rep.final_relative_residual().into(),
                ]);
            }
        }
    }
    csv
}

fn residual_csv(sg: &SgHistory) -> Csv {
    let mut csv = Csv::new(&["increment", "step", "preconditioner", "iteration", "relative_residual"]);
    for (n, inc) in sg.increments.iter().enumerate() {
        for step in &inc.solves {
            for rep in &step.reports {
                for (it, &res) in rep.history.iter().enumerate() {
                    csv.row(&[(n + 1).into(), step.step.into(), rep.preconditioner.tag().into(), it.into(), res.into()]);
                }
            }
        }
    }
    csv
}

fn metadata(config: &RunConfig, config_text: &str, r: &Results, started: u64) -> serde_json::Value {
    let hash: String = Sha256::digest(config_text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    let converged = json!({
        "det": r.det.increments.len(),
        "mc_failed_samples": r.mc.as_ref().map(|mc| mc.results.iter().filter(|s| s.failure.is_some()).count()),
        "sc": r.sc.as_ref().map(|s| s.coefficients.len()),
        "sg": r.sg.as_ref().map(|s| s.increments.len()),
    });
    json!({
        "name": config.name,
        "config_sha256": hash,
        "seed": config.monte_carlo.seed,
        "samples": r.samples,
        "methods": config.analysis.methods.iter().map(|m| m.tag()).collect::<Vec<_>>(),
        "versions": { "sgfem-cli": env!("CARGO_PKG_VERSION") },
        "started_unix": started,
        "timing_seconds": r.timing,
        "converged_increments": converged,
        "failures": r.failures,
        "spectral": r.spectral.as_ref().map(|s| json!({
            "basis_size": s.basis.len(),
            "degree": s.basis.degree(),
            "quadrature_nodes": s.rule.len(),
        })),
        "choices": {
            "internal_force_projection": "same quadrature nodes as the stiffness projection",
            "cg_initial_guess": "zero",
            "exceedance_reference": "multiples of the mean-parameter deterministic solution",
            "surrogate_sampling": "expansions evaluated at the Monte Carlo sample points",
        },
    })
}
