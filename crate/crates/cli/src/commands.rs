//! Subcommand implementations. Every file written embeds the config hash and
//! seed; wall-clock timestamps appear only in `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use gstlab::envelopes::{
    critical_constant_general, empirical_limsup, escape_constant, integral_test_general, integral_test_profile,
    Classification, CriticalConstant, EscapeConstant, KappaFunction, ProfileFunction, ProfileIntegral,
    ProfileSetting, Verdict,
};
use gstlab::gst::{gst_fields, intrinsic_kernel};
use gstlab::potentials::PotentialKind;
use gstlab::simulate::{
    chain_path, ks_critical_1pct, ks_statistic, sample_stationary, simulate_sde_farm, GridCdf, GstPath,
    PathDiagnostics, RngSpec, States, TransitionTable,
};
use gstlab::spectral::{artifact, solve, SpectralSolution};
use gstlab::verify::{self, CriterionResult, VERIFY_SEED};
use gstlab::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{EmpiricalSource, ExperimentConfig, IntegralChoice, SamplerKind, StartSpec};

pub const SOLUTION_FILE: &str = "solution.gstlab";
pub const EIGEN_REPORT: &str = "eigen_report.json";
pub const SIMULATE_SUMMARY: &str = "simulate_summary.json";
pub const ENVELOPE_SUMMARY: &str = "envelope_summary.json";
pub const VERIFY_FILE: &str = "verify.json";
pub const REPORT_FILE: &str = "report.md";
pub const MANIFEST: &str = "manifest.json";

/// RNG streams per purpose, so outputs do not depend on which commands ran.
const STREAM_SAMPLER: u64 = 1;
const STREAM_EMPIRICAL: u64 = 2;
const STREAM_STARTS: u64 = 3;
const STREAM_JITTER: u64 = 4;

/// Outcome of a command: files written and whether its checks passed.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub passed: bool,
    pub messages: Vec<String>,
}

/// Provenance stamped into every output.
#[derive(Debug, Clone)]
pub struct Stamp {
    pub config_hash: String,
    pub seed: u64,
}

impl Stamp {
    fn of(cfg: &ExperimentConfig) -> Self {
        Self {
            config_hash: cfg.hash(),
            seed: cfg.seed,
        }
    }

    fn csv(&self, body: &str) -> String {
        format!("# config_hash={} seed={}\n{body}", self.config_hash, self.seed)
    }

    fn json(&self, mut v: Value) -> Value {
        if let Some(m) = v.as_object_mut() {
            m.insert("config_hash".into(), json!(self.config_hash));
            m.insert("seed".into(), json!(self.seed));
        }
        v
    }
}

fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    fs::write(path, text)?;
    Ok(path.to_path_buf())
}

fn write_json(path: &Path, v: &Value) -> Result<PathBuf> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    write_text(path, &s)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn file_hash(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Records one command run in `manifest.json`, keeping entries of other
/// commands.
pub fn update_manifest(
    out: &Path,
    command: &str,
    cfg: Option<&ExperimentConfig>,
    started: f64,
    outcome: &Outcome,
) -> Result<()> {
    let path = out.join(MANIFEST);
    let mut manifest: Value = match fs::read_to_string(&path) {
        Ok(s) => serde_json::from_str(&s).unwrap_or_else(|_| json!({})),
        Err(_) => json!({}),
    };
    let mut outputs = serde_json::Map::new();
    for f in &outcome.files {
        let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        outputs.insert(name, json!(file_hash(f)?));
    }
    let entry = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "started_unix_s": started,
        "finished_unix_s": unix_now(),
        "passed": outcome.passed,
        "config": cfg.map(|c| c.resolved_json()),
        "config_hash": cfg.map(|c| c.hash()),
        "seed": cfg.map(|c| c.seed).unwrap_or(VERIFY_SEED),
        "outputs": outputs,
    });
    if !manifest.is_object() {
        manifest = json!({});
    }
    manifest
        .as_object_mut()
        .expect("object")
        .insert(command.to_string(), entry);
    write_json(&path, &manifest)?;
    Ok(())
}

fn store_modes(cfg: &ExperimentConfig) -> usize {
    cfg.store_modes.unwrap_or(usize::MAX)
}

/// Solves and persists the solution artifact with its eigen report.
pub fn cmd_solve(cfg: &ExperimentConfig, out: &Path) -> Result<(SpectralSolution, Outcome)> {
    fs::create_dir_all(out)?;
    let stamp = Stamp::of(cfg);
    let model = cfg.model.build()?;
    let (sol, _) = solve(&model, &cfg.potential, cfg.grid, &cfg.solver)?;
    let art_path = out.join(SOLUTION_FILE);
    let provenance = json!({
        "config_hash": stamp.config_hash,
        "seed": stamp.seed,
        "solve_hash": cfg.solve_hash(),
    });
    let artifact_hash = artifact::save_solution_tagged(&sol, &art_path, store_modes(cfg), Some(provenance))?;
    let passed = sol.residual <= cfg.solver.residual_tol;
    let report = stamp.json(json!({
        "solve_hash": cfg.solve_hash(),
        "artifact": SOLUTION_FILE,
        "artifact_hash": artifact_hash,
        "model_hash": sol.model_hash,
        "grid": sol.grid,
        "method": sol.method,
        "lambda0": sol.lambda0,
        "lambda1": sol.lambda1,
        "gap": sol.gap(),
        "mode_lambdas": sol.modes.iter().map(|m| m.lambda).collect::<Vec<_>>(),
        "residual": sol.residual,
        "residual_tol": cfg.solver.residual_tol,
        "boundary_ratio": sol.boundary_ratio,
        "sign_repairs": sol.sign_repairs,
        "certified_radius": sol.certified_radius(),
        "passed": passed,
    }));
    let report_path = write_json(&out.join(EIGEN_REPORT), &report)?;
    let messages = vec![format!(
        "λ₀ = {:.10e}, λ₁ = {:.10e}, residual = {:.3e}, artifact {}",
        sol.lambda0, sol.lambda1, sol.residual, artifact_hash
    )];
    Ok((
        sol,
        Outcome {
            files: vec![art_path, report_path],
            passed,
            messages,
        },
    ))
}

/// Reuses a stored solution whose solve inputs match, else solves inline.
pub fn load_or_solve(cfg: &ExperimentConfig, out: &Path) -> Result<(SpectralSolution, Option<Outcome>)> {
    let path = out.join(SOLUTION_FILE);
    if let Ok(art) = artifact::read(&path) {
        let stored = art.header.meta.get("provenance").and_then(|p| p.get("solve_hash"));
        if stored.and_then(Value::as_str) == Some(cfg.solve_hash().as_str()) {
            return Ok((artifact::load_solution(&path)?, None));
        }
    }
    let (sol, outcome) = cmd_solve(cfg, out)?;
    Ok((sol, Some(outcome)))
}

fn starts(cfg: &ExperimentConfig, sol: &SpectralSolution, start: &StartSpec, n: usize) -> Result<States> {
    match start {
        StartSpec::Stationary => sample_stationary(sol, n, RngSpec::new(cfg.seed, STREAM_STARTS)),
        StartSpec::Point { x } => Ok(States {
            d: x.len(),
            data: x.iter().copied().cycle().take(n * x.len()).collect(),
        }),
    }
}

fn paths_csv(paths: &[GstPath]) -> String {
    let d = paths.first().map(|p| p.states.d).unwrap_or(1);
    let mut s = String::from("path,time");
    for k in 0..d {
        s.push_str(&format!(",x{k}"));
    }
    s.push('\n');
    for (p, path) in paths.iter().enumerate() {
        for (i, t) in path.times.iter().enumerate() {
            s.push_str(&format!("{p},{t:.9e}"));
            for v in path.states.get(i) {
                s.push_str(&format!(",{v:.12e}"));
            }
            s.push('\n');
        }
    }
    s
}

fn states_csv(states: &States) -> String {
    let mut s = String::from("index");
    for k in 0..states.d {
        s.push_str(&format!(",x{k}"));
    }
    s.push('\n');
    for i in 0..states.len() {
        s.push_str(&i.to_string());
        for v in states.get(i) {
            s.push_str(&format!(",{v:.12e}"));
        }
        s.push('\n');
    }
    s
}

fn final_states(paths: &[GstPath]) -> States {
    let d = paths.first().map(|p| p.states.d).unwrap_or(1);
    let mut data = Vec::with_capacity(paths.len() * d);
    for p in paths {
        data.extend_from_slice(p.states.get(p.states.len() - 1));
    }
    States { d, data }
}

fn total_diagnostics(paths: &[GstPath]) -> PathDiagnostics {
    let mut t = PathDiagnostics::default();
    for p in paths {
        let q = &p.diagnostics;
        t.clamp_count += q.clamp_count;
        t.max_norm = t.max_norm.max(q.max_norm);
        t.proposals += q.proposals;
        t.accepted += q.accepted;
        t.envelope_violations += q.envelope_violations;
    }
    t
}

/// Runs the configured sampler and compares the terminal law with `φ₀²`.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let sampler = cfg.sampler.as_ref().ok_or_else(|| Error::Config {
        path: "sampler".into(),
        reason: "the simulate command needs a [sampler] section".into(),
    })?;
    fs::create_dir_all(out)?;
    let stamp = Stamp::of(cfg);
    let (sol, solved) = load_or_solve(cfg, out)?;
    let mut files = solved.map(|o| o.files).unwrap_or_default();
    let rng = RngSpec::new(cfg.seed, STREAM_SAMPLER);
    let (terminal, diagnostics, node_valued) = match sampler.kind {
        SamplerKind::Iid => {
            let draws = sample_stationary(&sol, sampler.paths, rng)?;
            files.push(write_text(&out.join("samples.csv"), &stamp.csv(&states_csv(&draws)))?);
            (draws, None, false)
        }
        SamplerKind::Chain => {
            let kernel = intrinsic_kernel(&sol, sampler.t, sampler.kernel_modes)?;
            let table = TransitionTable::new(&kernel, sol.grid)?;
            let x0 = starts(cfg, &sol, &sampler.start, sampler.paths)?;
            let paths: Vec<GstPath> = (0..sampler.paths)
                .into_par_iter()
                .map(|k| chain_path(&table, x0.get(k), sampler.steps, rng.child(k as u64)))
                .collect::<Result<_>>()?;
            files.push(write_text(&out.join("paths.csv"), &stamp.csv(&paths_csv(&paths)))?);
            (final_states(&paths), Some(total_diagnostics(&paths)), true)
        }
        SamplerKind::Sde => {
            let model = cfg.model.build()?;
            let fields = gst_fields(&sol, &model)?;
            let x0 = starts(cfg, &sol, &sampler.start, sampler.paths)?;
            let paths = simulate_sde_farm(&sol, &fields, &x0, sampler.sde, rng)?;
            files.push(write_text(&out.join("paths.csv"), &stamp.csv(&paths_csv(&paths)))?);
            (final_states(&paths), Some(total_diagnostics(&paths)), false)
        }
    };
    // Chain states sit on nodes; spread them over their cells before
    // comparing with the cell-uniform reference law.
    let terminal = if node_valued {
        terminal.cell_jittered(sol.grid.spacing(), RngSpec::new(cfg.seed, STREAM_JITTER))
    } else {
        terminal
    };
    let cdf = GridCdf::stationary(&sol, 0);
    let ks = ks_statistic(&terminal.coordinate(0), |x| cdf.eval(x));
    let critical = ks_critical_1pct(terminal.len());
    // The terminal law is φ₀² only when the paths start stationary (or are iid).
    let ks_applies = sampler.kind == SamplerKind::Iid || sampler.start == StartSpec::Stationary;
    let violations = diagnostics.as_ref().map(|d| d.envelope_violations).unwrap_or(0);
    let passed = (!ks_applies || ks <= critical) && violations == 0;
    let summary = stamp.json(json!({
        "kind": sampler.kind,
        "paths": sampler.paths,
        "ks_statistic": ks,
        "ks_critical_1pct": critical,
        "ks_applies": ks_applies,
        "diagnostics": diagnostics,
        "passed": passed,
    }));
    files.push(write_json(&out.join(SIMULATE_SUMMARY), &summary)?);
    let mut messages = vec![format!(
        "{} terminal states: KS = {ks:.4} (1% critical {critical:.4}{})",
        terminal.len(),
        if ks_applies { "" } else { ", informational" }
    )];
    if violations > 0 {
        messages.push(format!("{violations} thinning envelope violations"));
    }
    Ok(Outcome {
        files,
        passed,
        messages,
    })
}

fn classification_rows(label: &str, c: &Classification, rows: &mut String) {
    for (lo, hi, ln) in &c.partial_values {
        rows.push_str(&format!("{label},{lo:.9e},{hi:.9e},{ln:.12e}\n"));
    }
}

fn critical_json(c: &Option<CriticalConstant>) -> Value {
    to_value(c)
}

fn verdict_json(c: &Option<Classification>) -> Value {
    match c {
        Some(c) => json!({
            "verdict": c.verdict,
            "ln_accumulated": c.ln_accumulated,
            "ln_extrapolated_tail": c.ln_extrapolated_tail,
            "ratios": c.ratios,
        }),
        None => Value::Null,
    }
}

/// Runs integral tests, the escape-constant lookup and the empirical limsup.
pub fn cmd_envelope(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let env = cfg.envelope.as_ref().ok_or_else(|| Error::Config {
        path: "envelope".into(),
        reason: "the envelope command needs an [envelope] section".into(),
    })?;
    fs::create_dir_all(out)?;
    let stamp = Stamp::of(cfg);
    let model = cfg.model.build()?;
    let escape: Option<EscapeConstant> = env.escape.as_ref().map(escape_constant).transpose()?;
    let tau: ProfileFunction = match (&env.profile, &escape) {
        (Some(p), _) => p.clone(),
        (None, Some(e)) => e.profile.clone(),
        (None, None) => unreachable!("validated"),
    };
    tau.validate().map_err(|e| Error::Config {
        path: "envelope.profile".into(),
        reason: e.to_string(),
    })?;
    let needs_solution = env.integral == IntegralChoice::General || env.empirical.is_some();
    let mut files = Vec::new();
    let sol = if needs_solution {
        let (sol, solved) = load_or_solve(cfg, out)?;
        files.extend(solved.map(|o| o.files).unwrap_or_default());
        Some(sol)
    } else {
        None
    };
    let mut messages = Vec::new();
    let mut windows = String::from("integral,u_lo,u_hi,ln_window_mass\n");
    let mut inconclusive = false;
    let integrals = match env.integral {
        IntegralChoice::None => Value::Null,
        IntegralChoice::General => {
            let sol = sol.as_ref().expect("solved");
            let rep = integral_test_general(sol, &tau, env.c)?;
            let crit = critical_constant_general(sol, &tau)?;
            classification_rows("general", &rep.classification, &mut windows);
            inconclusive |= rep.classification.verdict == Verdict::Inconclusive;
            messages.push(format!(
                "I_φ₀(c = {}) {:?}; c_φ₀(τ) = {:.6e} ({:?})",
                env.c, rep.classification.verdict, crit.value, crit.status
            ));
            json!({
                "kind": "general",
                "general": verdict_json(&Some(rep.classification)),
                "c_general": crit,
            })
        }
        IntegralChoice::Profile => {
            let potential = (cfg.potential.kind() == PotentialKind::Confining).then(|| cfg.potential.clone());
            let kappa = env
                .kappa
                .clone()
                .unwrap_or_else(|| KappaFunction::for_setting(&model.density_profile, potential.as_ref()));
            let setting = ProfileSetting {
                density: model.density_profile,
                potential,
                kappa,
            };
            let eps = env.lambda_eps.map(|l| ProfileIntegral::LambdaEps {
                theta: l.theta,
                lambda0: l.lambda0,
                epsilon: l.epsilon,
            });
            let rep = integral_test_profile(&setting, &tau, env.c, eps)?;
            for (label, c) in [
                ("low", &rep.low),
                ("up", &rep.up),
                ("nu_kappa", &rep.nu_kappa),
                ("lambda_eps", &rep.lambda_eps),
            ] {
                if let Some(c) = c {
                    classification_rows(label, c, &mut windows);
                    messages.push(format!("I_{label}(c = {}) {:?}", env.c, c.verdict));
                }
            }
            for (label, c) in [
                ("c_low", &rep.c_low),
                ("c_up", &rep.c_up),
                ("c_nu_kappa", &rep.c_nu_kappa),
                ("c_lambda_eps", &rep.c_lambda_eps),
            ] {
                if let Some(c) = c {
                    messages.push(format!("{label} = {:.6e} ({:?})", c.value, c.status));
                }
            }
            inconclusive |= rep.inconclusive;
            json!({
                "kind": "profile",
                "kappa": setting.kappa,
                "low": verdict_json(&rep.low),
                "up": verdict_json(&rep.up),
                "nu_kappa": verdict_json(&rep.nu_kappa),
                "lambda_eps": verdict_json(&rep.lambda_eps),
                "c_low": critical_json(&rep.c_low),
                "c_up": critical_json(&rep.c_up),
                "c_nu_kappa": critical_json(&rep.c_nu_kappa),
                "c_lambda_eps": critical_json(&rep.c_lambda_eps),
            })
        }
    };
    if env.integral != IntegralChoice::None {
        files.push(write_text(&out.join("integral_windows.csv"), &stamp.csv(&windows))?);
    }
    if let Some(e) = &escape {
        messages.push(format!("escape constant ({:?}, {:?}) = {:.6e}", e.regime, e.kind, e.value));
    }
    let empirical = match (&env.empirical, &sol) {
        (Some(emp), Some(sol)) => {
            let rng = RngSpec::new(cfg.seed, STREAM_EMPIRICAL);
            let states = match emp.source {
                EmpiricalSource::Iid => sample_stationary(sol, emp.n_max, rng)?,
                EmpiricalSource::Chain => {
                    let t = cfg.sampler.as_ref().map(|s| s.t).unwrap_or(1.0);
                    let modes = cfg.sampler.as_ref().and_then(|s| s.kernel_modes);
                    let kernel = intrinsic_kernel(sol, t, modes)?;
                    let table = TransitionTable::new(&kernel, sol.grid)?;
                    let x0 = sample_stationary(sol, 1, RngSpec::new(cfg.seed, STREAM_STARTS))?;
                    let path = chain_path(&table, x0.get(0), emp.n_max, rng)?;
                    let tail = States {
                        d: path.states.d,
                        data: path.states.data[path.states.d..].to_vec(),
                    };
                    tail.cell_jittered(sol.grid.spacing(), RngSpec::new(cfg.seed, STREAM_JITTER))
                }
            };
            let mut c_grid = emp.c_grid.clone();
            if let Some(e) = &escape {
                if e.value.is_finite() && e.value > 0.0 && !c_grid.contains(&e.value) {
                    c_grid.push(e.value);
                }
            }
            c_grid.sort_by(f64::total_cmp);
            let lim = empirical_limsup(&states.norms(), &tau, &c_grid)?;
            files.push(write_text(&out.join("limsup_trace.csv"), &stamp.csv(&lim.trace_csv()))?);
            files.push(write_text(&out.join("exceedances.csv"), &stamp.csv(&lim.exceedance_csv()))?);
            messages.push(format!(
                "empirical ĉ = {:.6e} over n = {} (band [{:.4e}, {:.4e}])",
                lim.c_hat, lim.n_max, lim.band.0, lim.band.1
            ));
            json!({
                "source": emp.source,
                "n_max": lim.n_max,
                "burn_in": lim.burn_in,
                "c_hat": lim.c_hat,
                "band": [lim.band.0, lim.band.1],
                "exceedances": lim.exceedances,
            })
        }
        _ => Value::Null,
    };
    if inconclusive {
        messages.push("warning: some classifications are inconclusive".into());
    }
    let summary = stamp.json(json!({
        "profile": tau,
        "c": env.c,
        "escape_constant": escape,
        "integrals": integrals,
        "inconclusive": inconclusive,
        "empirical": empirical,
        "passed": true,
    }));
    files.push(write_json(&out.join(ENVELOPE_SUMMARY), &summary)?);
    Ok(Outcome {
        files,
        passed: true,
        messages,
    })
}

/// Runs an acceptance suite with pinned seeds.
pub fn cmd_verify(suite: &str, out: &Path) -> Result<(Vec<CriterionResult>, Outcome)> {
    verify::suite_criteria(suite)?;
    fs::create_dir_all(out)?;
    let results = verify::run_suite(suite)?;
    let passed = results.iter().all(CriterionResult::passed);
    let messages = results.iter().map(CriterionResult::line).collect();
    let v = json!({
        "suite": suite,
        "seed": VERIFY_SEED,
        "config_hash": Value::Null,
        "passed": passed,
        "criteria": results.iter().map(|r| {
            let mut v = to_value(r);
            v["passed"] = json!(r.passed());
            v
        }).collect::<Vec<_>>(),
    });
    let path = write_json(&out.join(VERIFY_FILE), &v)?;
    Ok((
        results,
        Outcome {
            files: vec![path],
            passed,
            messages,
        },
    ))
}

/// Collects the summaries present in `out` into `report.md`.
pub fn cmd_report(out: &Path) -> Result<(String, Outcome)> {
    let read = |name: &str| -> Option<Value> {
        fs::read_to_string(out.join(name))
            .ok()
            .and_then(|s| serde_json::from_str(&s).ok())
    };
    let mut md = String::from("# gstlab report\n\n");
    let mut passed = true;
    let mut found = false;
    let status = |v: &Value| if v["passed"].as_bool() == Some(true) { "pass" } else { "FAIL" };
    if let Some(v) = read(EIGEN_REPORT) {
        found = true;
        passed &= v["passed"].as_bool() == Some(true);
        md.push_str(&format!(
            "## Spectral solve ({})\n\n- config hash: `{}`\n- λ₀ = {}\n- λ₁ = {}\n- gap = {}\n- residual = {} (tolerance {})\n- boundary ratio = {}\n- artifact hash: `{}`\n\n",
            status(&v), v["config_hash"], v["lambda0"], v["lambda1"], v["gap"], v["residual"], v["residual_tol"],
            v["boundary_ratio"], v["artifact_hash"]
        ));
    }
    if let Some(v) = read(SIMULATE_SUMMARY) {
        found = true;
        passed &= v["passed"].as_bool() == Some(true);
        md.push_str(&format!(
            "## Simulation ({})\n\n- sampler: {} with {} paths, seed {}\n- KS statistic = {} (1% critical {}, applies: {})\n\n",
            status(&v), v["kind"], v["paths"], v["seed"], v["ks_statistic"], v["ks_critical_1pct"], v["ks_applies"]
        ));
    }
    if let Some(v) = read(ENVELOPE_SUMMARY) {
        found = true;
        passed &= v["passed"].as_bool() == Some(true);
        md.push_str(&format!("## Envelope ({})\n\n- profile: `{}`\n", status(&v), v["profile"]));
        if !v["escape_constant"].is_null() {
            md.push_str(&format!(
                "- escape constant: {} ({}, {})\n",
                v["escape_constant"]["value"], v["escape_constant"]["regime"], v["escape_constant"]["kind"]
            ));
        }
        if let Some(obj) = v["integrals"].as_object() {
            for (k, val) in obj {
                if let Some(verdict) = val.get("verdict") {
                    md.push_str(&format!("- {k} at c = {}: {verdict}\n", v["c"]));
                } else if let Some(c) = val.get("value") {
                    md.push_str(&format!("- {k} = {c} ({})\n", val["status"]));
                }
            }
        }
        if !v["empirical"].is_null() {
            md.push_str(&format!(
                "- empirical ĉ = {} over n = {}\n",
                v["empirical"]["c_hat"], v["empirical"]["n_max"]
            ));
        }
        md.push_str(&format!("- inconclusive: {}\n\n", v["inconclusive"]));
    }
    if let Some(v) = read(VERIFY_FILE) {
        found = true;
        passed &= v["passed"].as_bool() == Some(true);
        md.push_str(&format!("## Verification suite `{}` ({})\n\n", v["suite"].as_str().unwrap_or("?"), status(&v)));
        md.push_str("| criterion | name | result | time (s) |\n|---|---|---|---|\n");
        for c in v["criteria"].as_array().into_iter().flatten() {
            md.push_str(&format!(
                "| {} | {} | {} | {:.2} |\n",
                c["id"],
                c["name"].as_str().unwrap_or(""),
                status(c),
                c["elapsed_s"].as_f64().unwrap_or(f64::NAN)
            ));
        }
        md.push('\n');
    }
    if !found {
        return Err(Error::Config {
            path: out.display().to_string(),
            reason: "no summaries found; run solve, simulate, envelope or verify first".into(),
        });
    }
    let path = write_text(&out.join(REPORT_FILE), &md)?;
    Ok((
        md,
        Outcome {
            files: vec![path],
            passed,
            messages: vec![],
        },
    ))
}
