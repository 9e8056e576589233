//! Command-line surface: builds or reads inputs, runs one certification
//! command and writes its documents.
//!
//! Exit statuses: 0 success, 2 invalid configuration, 3 malformed input file,
//! 4 infeasible certification input (error rate at or above one half, or a
//! score below the quantum bound).

use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::certify::{
    certify_design_at, certify_efficiency, choose_epsilon, quantum_bound, score, sic_efficiency_bound,
    CertificationReport, NonProjectiveVerdict,
};
use crate::designs::{
    basis_ensemble, bloch_ensemble, design_bound, minimize_frame_potential, mub_ensemble, random_ensemble,
    tetrahedron_sic, StateEnsemble,
};
use crate::error::Error;
use crate::io::{
    behavior_to_string, ensemble_to_string, format_float, read_behavior, read_bloch_vertices, read_ensemble,
    write_atomic,
};
use crate::projective::{certify_nonprojective, PROJECTIVE_BOUND_422};
use crate::tol::TOL;
use crate::usd::{alpha, optimal_measurements, simulate_behavior, BehaviorTable, NoiseModel, SimulationMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FORMAT: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Write an ensemble document.
    Ensemble,
    /// Simulate a behavior table.
    Simulate,
    /// Certify a t-design in the assumed dimension.
    CertifyDesign,
    /// Lower-bound the detection efficiency.
    CertifyEfficiency,
    /// Certify that four qubit preparations need non-projective measurements.
    CertifyNonprojective,
    /// Smallest dimension compatible with the score.
    WitnessDimension,
    /// Minimize the frame potential.
    Optimize,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_possible_value().expect("no skipped variants");
        f.write_str(v.get_name())
    }
}

/// Named parameters shared by every command. Unset values take the
/// command's default when the configuration is resolved.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
pub struct Params {
    /// Hilbert-space dimension (assumed dimension for certification).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Number of states N.
    #[arg(long = "n-states")]
    pub n_states: Option<usize>,
    /// Design order t.
    #[arg(long)]
    pub order: Option<u32>,
    /// Depolarizing probability of the detectors.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Detection efficiency of the simulated experiment.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Rounds per (x, y) cell; 0 selects exact probabilities.
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random restarts for `optimize`.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Tolerance for saturation verdicts.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Error bound epsilon; defaults to the worst error rate in the data.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Behavior table to certify.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// tetrahedron | mub:<d> | basis:<d> | file:<path> | bloch:<path> | random:<N>:<d>
    #[arg(long)]
    pub ensemble: Option<String>,
    /// Write a plot-ready sweep table to this file.
    #[arg(long)]
    pub sweep: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Parser)]
#[command(name = "design-certify", version, about = "Certify quantum state designs from discrimination statistics")]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    #[command(flatten)]
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Infeasible(_) | Error::EpsilonOutOfDomain(_) => EXIT_INFEASIBLE,
            Error::InvalidParameter(_) | Error::MissingMeasurement(..) => EXIT_CONFIG,
            _ => EXIT_FORMAT,
        };
        Self { code, message: e.to_string() }
    }
}

/// What a run printed and the status it ends with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub code: i32,
    /// Text for standard output (empty when everything went to `--out`).
    pub stdout: String,
    /// Human-readable diagnostics for standard error.
    pub messages: Vec<String>,
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Fills in command defaults and checks required parameters.
pub fn resolve(config: &RunConfig) -> CliResult<RunConfig> {
    let mut p = config.params.clone();
    let certifying = matches!(
        config.command,
        Command::CertifyDesign | Command::CertifyEfficiency | Command::CertifyNonprojective | Command::WitnessDimension
    );
    let simulating = certifying || config.command == Command::Simulate;

    if let Some(tol) = p.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(CliError::config(format!("--tol must be positive, got {tol}")));
        }
    }
    if matches!(p.order, Some(0)) {
        return Err(CliError::config("--order must be >= 1"));
    }
    if matches!(p.dim, Some(0)) {
        return Err(CliError::config("--dim must be >= 1"));
    }
    if let Some(eps) = p.epsilon {
        if !(0.0..0.5).contains(&eps) {
            return Err(CliError { code: EXIT_INFEASIBLE, message: format!("epsilon {eps} outside [0, 1/2)") });
        }
    }

    match config.command {
        Command::Ensemble => {
            if p.ensemble.is_none() {
                return Err(CliError::config("ensemble requires --ensemble"));
            }
        }
        Command::Optimize => {
            if p.n_states.is_none() || p.dim.is_none() {
                return Err(CliError::config("optimize requires --n-states and --dim"));
            }
            if p.seed.is_none() {
                return Err(CliError::config("optimize requires --seed"));
            }
            p.order.get_or_insert(2);
            let restarts = *p.restarts.get_or_insert(20);
            if restarts == 0 {
                return Err(CliError::config("--restarts must be >= 1"));
            }
        }
        _ => {}
    }

    if simulating {
        match (&p.input, &p.ensemble) {
            (Some(_), Some(_)) => return Err(CliError::config("give either --in or --ensemble, not both")),
            (None, None) => return Err(CliError::config(format!("{} requires --in or --ensemble", config.command))),
            (Some(_), None) if config.command == Command::Simulate => {
                return Err(CliError::config("simulate requires --ensemble"))
            }
            _ => {}
        }
        if p.ensemble.is_some() {
            let gamma = *p.gamma.get_or_insert(0.0);
            let eta = *p.eta.get_or_insert(1.0);
            NoiseModel::new(gamma, eta).map_err(|e| CliError::config(e.to_string()))?;
            if *p.shots.get_or_insert(0) > 0 && p.seed.is_none() {
                return Err(CliError::config("sampling (--shots > 0) requires --seed"));
            }
        } else if p.gamma.is_some() || p.eta.is_some() || p.shots.is_some() {
            return Err(CliError::config("--gamma, --eta and --shots apply only to inline simulation"));
        }
    }
    if let Some(spec) = &p.ensemble {
        if spec.starts_with("random:") && p.seed.is_none() {
            return Err(CliError::config("random ensembles require --seed"));
        }
    }
    if certifying {
        p.tol.get_or_insert(TOL.saturation);
        if config.command == Command::CertifyNonprojective {
            if p.order.is_some_and(|t| t != 2) || p.dim.is_some_and(|d| d != 2) || p.n_states.is_some_and(|n| n != 4) {
                return Err(CliError::config("certify-nonprojective applies to N = 4, d = 2, t = 2"));
            }
            p.dim = Some(2);
            p.n_states = Some(4);
        }
        p.order.get_or_insert(2);
    }
    Ok(RunConfig { command: config.command, params: p })
}

/// Builds a named ensemble.
pub fn build_ensemble(spec: &str, seed: Option<u64>) -> CliResult<StateEnsemble> {
    let parse_usize = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| CliError::config(format!("bad number {s:?} in --ensemble {spec}")))
    };
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let ens = match kind {
        "tetrahedron" if arg.is_empty() => tetrahedron_sic(),
        "mub" => mub_ensemble(parse_usize(arg)?)?,
        "basis" => basis_ensemble(parse_usize(arg)?)?,
        "random" => {
            let (n, d) = arg
                .split_once(':')
                .ok_or_else(|| CliError::config("random ensembles are written random:<N>:<d>"))?;
            let seed = seed.ok_or_else(|| CliError::config("random ensembles require --seed"))?;
            random_ensemble(parse_usize(n)?, parse_usize(d)?, seed)?
        }
        "file" => read_ensemble(open(Path::new(arg))?)?,
        "bloch" => {
            let vertices = read_bloch_vertices(open(Path::new(arg))?)?;
            bloch_ensemble(&vertices).map_err(|e| CliError { code: EXIT_FORMAT, message: e.to_string() })?
        }
        _ => return Err(CliError::config(format!("unknown ensemble {spec:?}"))),
    };
    Ok(ens)
}

fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| CliError { code: EXIT_FORMAT, message: format!("{}: {e}", path.display()) })
}

fn emit(path: Option<&Path>, text: &str, stdout: &mut String) -> CliResult<()> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes())
            .map_err(|e| CliError { code: EXIT_FORMAT, message: format!("{}: {e}", p.display()) }),
        None => {
            stdout.push_str(text);
            Ok(())
        }
    }
}

fn simulate_inline(ens: &StateEnsemble, p: &Params, gamma: f64) -> CliResult<BehaviorTable> {
    let noise = NoiseModel::new(gamma, p.eta.unwrap_or(1.0)).map_err(|e| CliError::config(e.to_string()))?;
    let mode = match p.shots.unwrap_or(0) {
        0 => SimulationMode::Exact,
        shots => SimulationMode::Sampled { shots, seed: p.seed.expect("checked by resolve") },
    };
    let measurements = optimal_measurements(ens)?;
    Ok(simulate_behavior(ens, &measurements, noise, mode)?)
}

fn load_behavior(p: &Params) -> CliResult<BehaviorTable> {
    match (&p.input, &p.ensemble) {
        (Some(path), _) => {
            let b = read_behavior(open(path)?, p.dim)?;
            if let Some(n) = p.n_states {
                if n != b.n_states() {
                    return Err(CliError::config(format!("--n-states {n} but the table has N = {}", b.n_states())));
                }
            }
            Ok(b)
        }
        (None, Some(spec)) => {
            let ens = build_ensemble(spec, p.seed)?;
            simulate_inline(&ens, p, p.gamma.unwrap_or(0.0))
        }
        (None, None) => unreachable!("checked by resolve"),
    }
}

fn report_document(config: &RunConfig, report: &CertificationReport, extra: Option<(&str, serde_json::Value)>) -> String {
    let mut doc = json!({ "config": config, "report": report });
    if let Some((key, value)) = extra {
        doc[key] = value;
    }
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    text
}

fn certify(behavior: &BehaviorTable, p: &Params) -> CliResult<CertificationReport> {
    let d = p.dim.unwrap_or(behavior.dim());
    let t = p.order.unwrap_or(2);
    let eps = match p.epsilon {
        Some(e) => e,
        None => choose_epsilon(behavior)?,
    };
    Ok(certify_design_at(behavior, d, t, eps, p.tol.unwrap_or(TOL.saturation))?)
}

fn sweep_table(config: &RunConfig, behavior: &BehaviorTable) -> CliResult<String> {
    let p = &config.params;
    let n = behavior.n_states();
    let d = p.dim.unwrap_or(behavior.dim());
    let t = p.order.unwrap_or(2);
    let eta_cell = |s: f64, eps: f64| match certify_efficiency(s, eps, n, d, t) {
        Ok(c) => format_float(c.eta_lower),
        Err(_) => "nan".to_string(),
    };
    let mut out = String::new();
    if let Some(spec) = &p.ensemble {
        // Score and certified efficiency against detector noise.
        let ens = build_ensemble(spec, p.seed)?;
        out.push_str("gamma,epsilon,score,eta_lower\n");
        for k in 0..=20 {
            let gamma = 0.005 * k as f64;
            let b = simulate_inline(&ens, p, gamma)?;
            let eps = match choose_epsilon(&b) {
                Ok(e) => e,
                Err(_) => continue,
            };
            let s = score(&b, t, eps)?;
            out.push_str(&format!(
                "{},{},{},{}\n",
                format_float(gamma),
                format_float(eps),
                format_float(s),
                eta_cell(s, eps)
            ));
        }
    } else {
        // Certified efficiency across the feasible score range at the
        // observed error rate.
        let eps = match p.epsilon {
            Some(e) => e,
            None => choose_epsilon(behavior)?,
        };
        let a2t = alpha(eps)?.powi(2 * t as i32);
        let lo = a2t * quantum_bound(n, d, t)?;
        let hi = a2t * (n * (n - 1) / 2) as f64;
        out.push_str("score,eta_lower\n");
        for k in 0..=50 {
            let s = lo + (hi - lo) * k as f64 / 50.0;
            out.push_str(&format!("{},{}\n", format_float(s), eta_cell(s, eps)));
        }
    }
    Ok(out)
}

/// Runs one command. Documents go to `--out` (atomically) or to the
/// returned standard-output text.
pub fn run(config: &RunConfig) -> CliResult<RunOutput> {
    let config = resolve(config)?;
    let p = &config.params;
    let out_path = p.out.as_deref();
    let mut stdout = String::new();
    let mut messages = Vec::new();
    let mut code = EXIT_OK;

    match config.command {
        Command::Ensemble => {
            let ens = build_ensemble(p.ensemble.as_deref().expect("checked by resolve"), p.seed)?;
            emit(out_path, &ensemble_to_string(&ens), &mut stdout)?;
        }
        Command::Simulate => {
            let ens = build_ensemble(p.ensemble.as_deref().expect("checked by resolve"), p.seed)?;
            let b = simulate_inline(&ens, p, p.gamma.unwrap_or(0.0))?;
            let resolved = serde_json::to_string(&config).expect("config serializes");
            let text = behavior_to_string(&b);
            // Metadata line first, then the resolved configuration.
            let (meta, rest) = text.split_once('\n').expect("metadata line");
            emit(out_path, &format!("{meta}\n# config={resolved}\n{rest}"), &mut stdout)?;
        }
        Command::CertifyDesign => {
            let behavior = load_behavior(p)?;
            let report = certify(&behavior, p)?;
            if report.gap < -p.tol.unwrap_or(TOL.saturation) {
                code = EXIT_INFEASIBLE;
                messages.push(format!(
                    "score {} below the quantum bound {} for d = {}",
                    report.score, report.bound, report.d_assumed
                ));
            }
            emit(out_path, &report_document(&config, &report, None), &mut stdout)?;
            write_sweep(&config, &behavior)?;
        }
        Command::CertifyEfficiency => {
            let behavior = load_behavior(p)?;
            let report = certify(&behavior, p)?;
            let (n, d, t) = (report.n_states, report.d_assumed, report.t);
            let cert = certify_efficiency(report.score, report.epsilon_used, n, d, t);
            let mut extra = json!({});
            match &cert {
                Ok(c) => extra["kind"] = json!(c.kind),
                Err(e) => {
                    code = EXIT_INFEASIBLE;
                    messages.push(e.to_string());
                }
            }
            if n == d * d && t == 2 {
                if let Ok(v) = sic_efficiency_bound(report.score, report.epsilon_used, d) {
                    extra["closed_form"] = json!(v);
                }
            }
            emit(out_path, &report_document(&config, &report, Some(("efficiency", extra))), &mut stdout)?;
            write_sweep(&config, &behavior)?;
        }
        Command::CertifyNonprojective => {
            let behavior = load_behavior(p)?;
            if behavior.n_states() != 4 {
                return Err(CliError::config(format!(
                    "certify-nonprojective needs N = 4 preparations, got {}",
                    behavior.n_states()
                )));
            }
            // The projective bound holds for error-free discrimination only.
            let observed = choose_epsilon(&behavior)?;
            if observed > TOL.structural {
                return Err(CliError {
                    code: EXIT_INFEASIBLE,
                    message: format!("the projective bound needs error-free data; observed error rate {observed}"),
                });
            }
            let params = Params { epsilon: Some(0.0), ..p.clone() };
            let mut report = certify(&behavior, &params)?;
            let certified = certify_nonprojective(report.score, p.tol.unwrap_or(TOL.saturation));
            report.nonprojective = Some(NonProjectiveVerdict { projective_bound: PROJECTIVE_BOUND_422, certified });
            emit(out_path, &report_document(&config, &report, None), &mut stdout)?;
            write_sweep(&config, &behavior)?;
        }
        Command::WitnessDimension => {
            let behavior = load_behavior(p)?;
            let n = behavior.n_states();
            let t = p.order.unwrap_or(2);
            let eps = match p.epsilon {
                Some(e) => e,
                None => choose_epsilon(&behavior)?,
            };
            let s = score(&behavior, t, eps)?;
            let min_dimension = crate::certify::dimension_witness(s, eps, n, t)?;
            let a2t = alpha(eps)?.powi(2 * t as i32);
            let bounds: Vec<_> = (1..=min_dimension + 1)
                .filter_map(|d| quantum_bound(n, d, t).ok().map(|q| json!({ "dim": d, "bound": a2t * q })))
                .collect();
            let doc = json!({
                "config": config,
                "report": {
                    "n_states": n,
                    "t": t,
                    "epsilon_used": eps,
                    "score": s,
                    "min_dimension": min_dimension,
                    "bounds": bounds,
                },
            });
            let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
            text.push('\n');
            emit(out_path, &text, &mut stdout)?;
            write_sweep(&config, &behavior)?;
        }
        Command::Optimize => {
            let (n, d, t) = (p.n_states.unwrap(), p.dim.unwrap(), p.order.unwrap());
            let seed = p.seed.unwrap();
            let result = minimize_frame_potential(n, d, t, p.restarts.unwrap(), seed)?;
            let bound = design_bound(n, d, t).map(|b| b.value()).ok();
            if let Some(path) = out_path {
                write_atomic(path, ensemble_to_string(&result.ensemble).as_bytes())
                    .map_err(|e| CliError { code: EXIT_FORMAT, message: format!("{}: {e}", path.display()) })?;
            }
            let doc = json!({
                "config": config,
                "result": {
                    "n_states": n,
                    "dim": d,
                    "t": t,
                    "frame_potential": result.value,
                    "design_bound": bound,
                    "gap": bound.map(|b| result.value - b),
                    "converged": result.converged,
                    "iterations": result.iterations,
                    "restart": result.restart,
                },
            });
            let mut text = serde_json::to_string_pretty(&doc).expect("result serializes");
            text.push('\n');
            stdout.push_str(&text);
        }
    }
    Ok(RunOutput { code, stdout, messages })
}

fn write_sweep(config: &RunConfig, behavior: &BehaviorTable) -> CliResult<()> {
    if let Some(path) = &config.params.sweep {
        let table = sweep_table(config, behavior)?;
        write_atomic(path, table.as_bytes())
            .map_err(|e| CliError { code: EXIT_FORMAT, message: format!("{}: {e}", path.display()) })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(args: &[&str]) -> RunConfig {
        let mut argv = vec!["design-certify"];
        argv.extend_from_slice(args);
        RunConfig::try_parse_from(argv).unwrap()
    }

    #[test]
    fn parses_flags() {
        let c = config(&["certify-design", "--ensemble", "tetrahedron", "--order", "2", "--gamma", "0.01"]);
        assert_eq!(c.command, Command::CertifyDesign);
        assert_eq!(c.params.order, Some(2));
        assert_eq!(c.params.gamma, Some(0.01));
    }

    #[test]
    fn resolve_fills_defaults() {
        let r = resolve(&config(&["certify-efficiency", "--ensemble", "tetrahedron"])).unwrap();
        assert_eq!(r.params.gamma, Some(0.0));
        assert_eq!(r.params.eta, Some(1.0));
        assert_eq!(r.params.shots, Some(0));
        assert_eq!(r.params.order, Some(2));
        assert_eq!(r.params.tol, Some(TOL.saturation));
    }

    #[test]
    fn seed_is_mandatory_for_sampling_and_optimization() {
        for args in [
            &["simulate", "--ensemble", "tetrahedron", "--shots", "10"][..],
            &["optimize", "--n-states", "4", "--dim", "2"][..],
            &["ensemble", "--ensemble", "random:3:2"][..],
        ] {
            assert_eq!(resolve(&config(args)).unwrap_err().code, EXIT_CONFIG, "{args:?}");
        }
    }

    #[test]
    fn conflicting_or_missing_inputs_are_config_errors() {
        for args in [
            &["certify-design"][..],
            &["certify-design", "--ensemble", "tetrahedron", "--in", "x.csv"][..],
            &["certify-design", "--in", "x.csv", "--gamma", "0.1"][..],
            &["certify-design", "--ensemble", "tetrahedron", "--eta", "1.5"][..],
            &["certify-nonprojective", "--ensemble", "mub:3", "--dim", "3"][..],
            &["ensemble", "--ensemble", "cube"][..],
        ] {
            assert_eq!(run(&config(args)).unwrap_err().code, EXIT_CONFIG, "{args:?}");
        }
    }

    #[test]
    fn noiseless_tetrahedron_is_certified() {
        let out = run(&config(&["certify-design", "--ensemble", "tetrahedron"])).unwrap();
        assert_eq!(out.code, EXIT_OK);
        let doc: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(doc["report"]["design_certified"], true);
        assert!(doc["report"]["gap"].as_f64().unwrap().abs() <= 1e-9);
        assert_eq!(doc["config"]["command"], "certify-design");
    }

    #[test]
    fn wrong_dimension_assumption_exits_infeasible() {
        // Qubit basis states look like a qutrit design only if d is understated.
        let out = run(&config(&["certify-design", "--ensemble", "mub:3", "--dim", "2"])).unwrap();
        assert_eq!(out.code, EXIT_INFEASIBLE);
    }

    #[test]
    fn exact_simulation_is_deterministic() {
        let c = config(&["simulate", "--ensemble", "tetrahedron", "--gamma", "0.005", "--eta", "0.55"]);
        assert_eq!(run(&c).unwrap().stdout, run(&c).unwrap().stdout);
    }

    #[test]
    fn explicit_epsilon_out_of_domain_is_infeasible() {
        let c = config(&["certify-design", "--ensemble", "tetrahedron", "--epsilon", "0.5"]);
        assert_eq!(run(&c).unwrap_err().code, EXIT_INFEASIBLE);
    }
}
