//! Command line interface: `generate`, `exact`, `sample` and `compare`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::engine::{run_likelihood_weighting, run_varis, sis_star, RunOptions, RunReport, SamplerConfig};
use crate::error::{Error, Result};
use crate::exact::{exact_likelihood, Limits, DEFAULT_ENUMERATION_CAP, DEFAULT_TABLE_CAP};
use crate::model::{
    generate_random_network, parse_network, serialize_network, BayesianNetwork, Evidence, GeneratorConfig,
};
use crate::simplify::FitMethod;

#[derive(Debug, Parser)]
#[command(name = "varis", version, about = "Importance sampling for Bayesian networks with deterministic tables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random network with evidence and print its exact likelihood.
    Generate(GenerateArgs),
    /// Print the exact log likelihood of the evidence.
    Exact(ExactArgs),
    /// Estimate the log likelihood by sampling.
    Sample(SampleArgs),
    /// Run several samplers over a directory of networks and tabulate errors.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 12)]
    pub nodes: usize,
    #[arg(long, default_value_t = 3)]
    pub max_parents: usize,
    #[arg(long, default_value_t = 2)]
    pub states: usize,
    /// Minimum fraction of deterministic CPT rows.
    #[arg(long, default_value_t = 0.4)]
    pub det: f64,
    /// Number of observed leaves.
    #[arg(long, default_value_t = 4)]
    pub evidence: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CapArgs {
    /// Largest joint state space enumerated before switching to bucket elimination.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub enum_cap: usize,
    /// Largest intermediate table.
    #[arg(long, default_value_t = DEFAULT_TABLE_CAP)]
    pub table_cap: usize,
}

impl CapArgs {
    fn limits(&self) -> Limits {
        Limits { enumeration: self.enum_cap, table: self.table_cap }
    }
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    pub network: PathBuf,
    /// Observation `VAR=STATE`; when given, replaces the evidence in the file.
    #[arg(long = "evidence", value_name = "VAR=STATE")]
    pub evidence: Vec<String>,
    #[command(flatten)]
    pub caps: CapArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Varis,
    VarisStatic,
    Lw,
    Sis,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Varis => "varis",
            Algorithm::VarisStatic => "varis-static",
            Algorithm::Lw => "lw",
            Algorithm::Sis => "sis",
        }
    }
}

/// Sampler settings; unset flags keep the defaults of [`SamplerConfig`].
#[derive(Debug, Default, Args)]
pub struct SamplerArgs {
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long)]
    pub eta0: Option<f64>,
    #[arg(long)]
    pub etaf: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub w0: Option<f64>,
    #[arg(long)]
    pub significance: Option<f64>,
    #[arg(long)]
    pub cooldown: Option<usize>,
    #[arg(long)]
    pub width_bound: Option<usize>,
    /// Table fit after edge deletion.
    #[arg(long, value_enum)]
    pub fit: Option<FitMethod>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long)]
    pub fit_tol: Option<f64>,
    #[arg(long)]
    pub table_cap: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Disable the annealed proposal updates.
    #[arg(long)]
    pub no_adapt: bool,
    /// Disable correlation-directed sharpening and flattening.
    #[arg(long)]
    pub no_direct: bool,
}

impl SamplerArgs {
    pub fn config(&self) -> Result<SamplerConfig> {
        let mut c = SamplerConfig::default();
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag { c.$field = v; })*
            };
        }
        set!(samples => samples, batch => batch, eta0 => eta0, etaf => eta_final, alpha => alpha, beta => beta,
             window => window, w0 => w0, significance => significance, width_bound => width_bound,
             fit => fit, sweeps => fit_sweeps, fit_tol => fit_tol, table_cap => table_cap, workers => workers, seed => seed);
        c.k_max = self.kmax;
        c.cooldown = self.cooldown;
        c.check()?;
        Ok(c)
    }

    pub fn options(&self) -> RunOptions {
        RunOptions { adaptive: !self.no_adapt, directing: !self.no_direct }
    }
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    pub network: PathBuf,
    #[arg(value_enum)]
    pub algorithm: Algorithm,
    #[arg(long = "evidence", value_name = "VAR=STATE")]
    pub evidence: Vec<String>,
    /// Directory receiving `trace.csv` and `summary.json`. The summary goes
    /// to standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the final proposal as a network document.
    #[arg(long)]
    pub dump_proposal: Option<PathBuf>,
    #[command(flatten)]
    pub sampler: SamplerArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Directory of network documents (`*.json`).
    pub dir: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Algorithm::Varis, Algorithm::Lw])]
    pub algorithms: Vec<Algorithm>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Results table; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub enum_cap: usize,
    #[command(flatten)]
    pub sampler: SamplerArgs,
}

/// Runs a parsed command, writing its console output to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a, stdout),
        Command::Exact(a) => cmd_exact(a, stdout),
        Command::Sample(a) => cmd_sample(a, stdout),
        Command::Compare(a) => cmd_compare(a, stdout),
    }
}

fn load(path: &Path, overrides: &[String]) -> Result<(BayesianNetwork<f64>, Evidence)> {
    let text = fs::read_to_string(path)?;
    let (net, inline) = parse_network::<f64>(&text)?;
    let ev = if overrides.is_empty() {
        inline.unwrap_or_default()
    } else {
        let mut labels = BTreeMap::new();
        for o in overrides {
            let (var, state) = o
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("evidence `{o}` is not of the form VAR=STATE")))?;
            labels.insert(var.trim().to_string(), state.trim().to_string());
        }
        Evidence::from_labels(&net, &labels)?
    };
    ev.check(&net)?;
    Ok((net, ev))
}

#[derive(Serialize)]
struct ExactOutput {
    ln_likelihood: Option<f64>,
    method: &'static str,
}

fn exact_line(net: &BayesianNetwork<f64>, ev: &Evidence, limits: Limits) -> Result<String> {
    let (ln, method) = exact_likelihood(net, ev, limits)?;
    let out = ExactOutput { ln_likelihood: ln.is_finite().then_some(ln), method: method.as_str() };
    Ok(serde_json::to_string(&out).expect("serializes"))
}

fn cmd_generate(a: &GenerateArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = GeneratorConfig {
        nodes: a.nodes,
        max_parents: a.max_parents,
        states: a.states,
        deterministic_fraction: a.det,
        evidence_leaves: a.evidence,
    };
    let (net, ev) = generate_random_network::<f64>(&cfg, a.seed)?;
    fs::write(&a.out, serialize_network(&net, Some(&ev)))?;
    match exact_line(&net, &ev, Limits::default()) {
        Ok(line) => writeln!(stdout, "{line}")?,
        Err(Error::CapExceeded { .. }) => {}
        Err(e) => return Err(e),
    }
    Ok(())
}

fn cmd_exact(a: &ExactArgs, stdout: &mut dyn Write) -> Result<()> {
    let (net, ev) = load(&a.network, &a.evidence)?;
    writeln!(stdout, "{}", exact_line(&net, &ev, a.caps.limits())?)?;
    Ok(())
}

fn run_algorithm(
    alg: Algorithm,
    net: &BayesianNetwork<f64>,
    ev: &Evidence,
    cfg: &SamplerConfig,
    opts: RunOptions,
) -> Result<RunReport<f64>> {
    match alg {
        Algorithm::Varis => run_varis(net, ev, cfg, opts),
        Algorithm::VarisStatic => run_varis(net, ev, cfg, RunOptions::STATIC),
        Algorithm::Lw => run_likelihood_weighting(net, ev, cfg),
        Algorithm::Sis => sis_star(net, ev, cfg),
    }
}

fn cmd_sample(a: &SampleArgs, stdout: &mut dyn Write) -> Result<()> {
    let (net, ev) = load(&a.network, &a.evidence)?;
    let cfg = a.sampler.config()?;
    let report = run_algorithm(a.algorithm, &net, &ev, &cfg, a.sampler.options())?;
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("trace.csv"), report.trace_csv())?;
            fs::write(dir.join("summary.json"), report.summary_json())?;
        }
        None => stdout.write_all(report.summary_json().as_bytes())?,
    }
    if let Some(path) = &a.dump_proposal {
        let q = report
            .proposal
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig(format!("{} has no proposal to dump", a.algorithm.as_str())))?;
        fs::write(path, q.to_document(&net))?;
    }
    Ok(())
}

fn cmd_compare(a: &CompareArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut paths: Vec<PathBuf> = fs::read_dir(&a.dir)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|x| x == "json"));
    paths.sort();
    let base = a.sampler.config()?;
    let limits = Limits { enumeration: a.enum_cap, table: base.table_cap };

    let mut loaded = Vec::with_capacity(paths.len());
    for p in &paths {
        let (net, ev) = load(p, &[])?;
        let (exact, _) = exact_likelihood(&net, &ev, limits)?;
        let name = p.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        loaded.push((name, net, ev, exact));
    }

    let mut out = String::from("network,algorithm,trial,ln_exact,ln_estimate,error,percent_error\n");
    for (name, net, ev, exact) in &loaded {
        for &alg in &a.algorithms {
            for trial in 0..a.trials {
                let cfg = SamplerConfig { seed: base.seed.wrapping_add(trial as u64), ..base.clone() };
                let report = run_algorithm(alg, net, ev, &cfg, a.sampler.options())?;
                let est = report.estimate_ln;
                let err = if est == *exact { 0.0 } else { (est - exact).abs() };
                let pct = if err == 0.0 { 0.0 } else { 100.0 * err / exact.abs() };
                let _ = writeln!(out, "{name},{},{trial},{exact},{est},{err},{pct}", alg.as_str());
            }
        }
    }
    match &a.out {
        Some(path) => fs::write(path, out)?,
        None => stdout.write_all(out.as_bytes())?,
    }
    Ok(())
}
