//! Argument handling for the `tbell` binary.
//!
//! Settings come from an optional flat `key = value` file (`--config`) and
//! from flags; flags win. Keys are the long flag names without dashes, e.g.
//! `omega = 2.0` or `eps-steps = 51`.
//!
//! Exit codes: 0 success, 1 validation or runtime failure, 2 configuration
//! error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::correlators::{QuadratureConfig, QuadratureScheme, DEFAULT_NODES};
use crate::dynamics::Outcome;
use crate::error::Error;
use crate::inequalities::{InequalitySpec, Preset, Term};
use crate::sweep::{
    cmd_correlate, cmd_fig1, cmd_fig2, cmd_threshold, cmd_trajectory, cmd_validate, Frequency,
    InequalityChoice, OutputFormat, Range, RunConfig, Table,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Environment variable capping sweep parallelism; `0` means automatic.
pub const THREADS_ENV: &str = "TBELL_THREADS";

#[derive(Debug, Parser)]
#[command(name = "tbell", version, about = "Temporal Bell inequalities under projective measurement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Free Q(t) and the stationary three-time combination over ωt
    Fig1(CommonArgs),
    /// Fractional violation versus distinguishability threshold
    Fig2(CommonArgs),
    /// Check the phase-averaged oracle against A_ε·K over an (ε, lag) grid
    Validate(CommonArgs),
    /// Threshold ε* above which an inequality is no longer violated
    Threshold(CommonArgs),
    /// Single K_ε(t1, t2) query
    Correlate {
        #[arg(long, allow_hyphen_values = true)]
        t1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        t2: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Record sequence of one measured trajectory
    Trajectory {
        /// Comma-separated ascending measurement times
        #[arg(long, allow_hyphen_values = true)]
        times: Option<String>,
        /// Comma-separated outcomes, each +1 or -1
        #[arg(long, allow_hyphen_values = true)]
        outcomes: Option<String>,
        /// The instant t′ at which the system was in |+⟩
        #[arg(long, allow_hyphen_values = true)]
        phase: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Flat key = value settings file; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    /// Bare Rabi frequency; combine with --n for ω = Ω_R √(n+1)
    #[arg(long, allow_hyphen_values = true)]
    pub rabi: Option<f64>,
    #[arg(long)]
    pub n: Option<u32>,
    /// paz4, santos-minus or santos-plus
    #[arg(long)]
    pub preset: Option<String>,
    /// Custom inequality terms "i,j,kappa;i,j,kappa;…" (1-based)
    #[arg(long, allow_hyphen_values = true)]
    pub terms: Option<String>,
    /// Classical bound B of a custom inequality
    #[arg(long, allow_hyphen_values = true)]
    pub bound: Option<f64>,
    #[arg(long = "n-times")]
    pub n_times: Option<usize>,
    /// Wrap a custom combination in an absolute value
    #[arg(long = "abs")]
    pub abs_mode: bool,
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    #[arg(long = "eps-min", allow_hyphen_values = true)]
    pub eps_min: Option<f64>,
    #[arg(long = "eps-max")]
    pub eps_max: Option<f64>,
    #[arg(long = "eps-steps")]
    pub eps_steps: Option<usize>,
    /// Lower end of the ωt axis
    #[arg(long = "t-min", allow_hyphen_values = true)]
    pub t_min: Option<f64>,
    #[arg(long = "t-max")]
    pub t_max: Option<f64>,
    #[arg(long = "t-steps")]
    pub t_steps: Option<usize>,
    /// Phase-grid size for the oracle
    #[arg(long)]
    pub nodes: Option<usize>,
    /// uniform-midpoint or gauss-legendre
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json-lines
    #[arg(long)]
    pub format: Option<String>,
    /// Reserved for a sampling mode; accepted and recorded only
    #[arg(long)]
    pub seed: Option<u64>,
    /// Apply the threshold to the second measurement as well
    #[arg(long = "select-both")]
    pub select_both: bool,
    /// Emit the time axis as t instead of ωt
    #[arg(long = "physical-time")]
    pub physical_time: bool,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::InvalidInequality(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

/// Flat `key = value` settings; `#` starts a comment.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
            let key = key.trim().replace('_', "-");
            entries.insert(key, value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> std::result::Result<Self, String> {
        let text =
            fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn value<T: FromStr>(&self, key: &str) -> std::result::Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| format!("config key {key}: {e}")))
            .transpose()
    }

    fn flag(&self, key: &str) -> std::result::Result<bool, String> {
        match self.get(key) {
            None => Ok(false),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(other) => Err(format!("config key {key}: expected a boolean, got {other:?}")),
        }
    }
}

/// Fills unset flags from the config file.
fn pick<T: FromStr>(flag: Option<T>, file: &ConfigFile, key: &str) -> std::result::Result<Option<T>, String>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.value(key),
    }
}

fn parse_list<T: FromStr>(text: &str, what: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<T>().map_err(|e| format!("{what}: {e}")))
        .collect()
}

/// Parses `"i,j,kappa;i,j,kappa"`.
pub fn parse_terms(text: &str) -> std::result::Result<Vec<Term>, String> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|chunk| {
            let parts: Vec<&str> = chunk.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(format!("term {chunk:?}: expected i,j,kappa"));
            }
            let i = parts[0].parse().map_err(|e| format!("term {chunk:?}: {e}"))?;
            let j = parts[1].parse().map_err(|e| format!("term {chunk:?}: {e}"))?;
            let kappa = parts[2].parse().map_err(|e| format!("term {chunk:?}: {e}"))?;
            Ok(Term { i, j, kappa })
        })
        .collect()
}

/// Merges flags over the config file into a [`RunConfig`].
pub fn resolve(args: &CommonArgs) -> std::result::Result<(RunConfig, Option<PathBuf>), String> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };

    let omega = pick(args.omega, &file, "omega")?;
    let rabi = pick(args.rabi, &file, "rabi")?;
    let n = pick(args.n, &file, "n")?;
    let frequency = match (omega, rabi, n) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err("give either --omega or --rabi/--n, not both".into())
        }
        (Some(w), None, None) => Frequency::Omega(w),
        (None, Some(rabi), n) => Frequency::JaynesCummings {
            rabi,
            n: n.unwrap_or(0),
        },
        (None, None, Some(_)) => return Err("--n needs --rabi".into()),
        (None, None, None) => Frequency::Omega(1.0),
    };
    frequency.params().map_err(|e| e.to_string())?;

    let preset: Option<String> = pick(args.preset.clone(), &file, "preset")?;
    let terms: Option<String> = pick(args.terms.clone(), &file, "terms")?;
    let inequality = match (preset, terms) {
        (Some(_), Some(_)) => return Err("give either --preset or --terms, not both".into()),
        (Some(p), None) => Some(InequalityChoice::Preset(
            p.parse::<Preset>().map_err(|e| e.to_string())?,
        )),
        (None, Some(t)) => {
            let terms = parse_terms(&t)?;
            let max_index = terms.iter().map(|t| t.i.max(t.j)).max().unwrap_or(0);
            let n_times = pick(args.n_times, &file, "n-times")?.unwrap_or(max_index.max(3));
            let bound = pick(args.bound, &file, "bound")?
                .ok_or_else(|| "custom inequality needs --bound".to_string())?;
            let abs_mode = args.abs_mode || file.flag("abs")?;
            Some(InequalityChoice::Custom(
                InequalitySpec::new(n_times, terms, bound, abs_mode).map_err(|e| e.to_string())?,
            ))
        }
        (None, None) => None,
    };

    let epsilon = pick(args.epsilon, &file, "epsilon")?.unwrap_or(0.0);
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(format!("epsilon must lie in [0, 1], got {epsilon}"));
    }

    let eps_min = pick(args.eps_min, &file, "eps-min")?;
    let eps_max = pick(args.eps_max, &file, "eps-max")?;
    let eps_steps = pick(args.eps_steps, &file, "eps-steps")?;
    let eps_range = if eps_min.is_some() || eps_max.is_some() || eps_steps.is_some() {
        let r = Range::new(
            eps_min.unwrap_or(0.0),
            eps_max.unwrap_or(1.0),
            eps_steps.unwrap_or(101),
        )
        .map_err(|e| e.to_string())?;
        if r.min < 0.0 || r.max > 1.0 {
            return Err("epsilon range must lie within [0, 1]".into());
        }
        Some(r)
    } else {
        None
    };

    let t_min = pick(args.t_min, &file, "t-min")?;
    let t_max = pick(args.t_max, &file, "t-max")?;
    let t_steps = pick(args.t_steps, &file, "t-steps")?;
    let t_range = match (t_min, t_max, t_steps) {
        (None, None, None) => None,
        (min, Some(max), steps) => Some(
            Range::new(min.unwrap_or(0.0), max, steps.unwrap_or(1001)).map_err(|e| e.to_string())?,
        ),
        _ => return Err("a time range needs --t-max".into()),
    };

    let nodes = pick(args.nodes, &file, "nodes")?.unwrap_or(DEFAULT_NODES);
    let scheme = pick(args.scheme.clone(), &file, "scheme")?
        .map(|s| s.parse::<QuadratureScheme>())
        .transpose()
        .map_err(|e| e.to_string())?
        .unwrap_or_default();
    let quadrature = QuadratureConfig::new(nodes, scheme).map_err(|e| e.to_string())?;

    let format = pick(args.format.clone(), &file, "format")?
        .map(|s| s.parse::<OutputFormat>())
        .transpose()
        .map_err(|e| e.to_string())?
        .unwrap_or_default();

    let out = pick(args.out.clone(), &file, "out")?;
    let seed = pick(args.seed, &file, "seed")?;
    let select_both = args.select_both || file.flag("select-both")?;
    let physical_time = args.physical_time || file.flag("physical-time")?;

    Ok((
        RunConfig {
            frequency,
            inequality,
            epsilon,
            eps_range,
            t_range,
            quadrature,
            format,
            physical_time,
            select_both,
            seed,
        },
        out,
    ))
}

/// Reads [`THREADS_ENV`]; unset, empty or unparsable means automatic (0).
pub fn thread_count_from_env() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

fn emit_table(table: &Table, format: OutputFormat, out: Option<&Path>) -> std::result::Result<(), Failure> {
    match out {
        Some(path) => {
            let file = fs::File::create(path)
                .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
            let mut w = io::BufWriter::new(file);
            table
                .write_to(format, &mut w)
                .and_then(|_| w.flush())
                .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
        }
        None => table
            .write_to(format, io::stdout().lock())
            .map_err(|e| Failure::Runtime(e.to_string())),
    }
}

fn dispatch(command: Command) -> std::result::Result<(), Failure> {
    match command {
        Command::Fig1(args) => {
            let (cfg, out) = resolve(&args).map_err(Failure::Config)?;
            let table = cmd_fig1(&cfg)?;
            emit_table(&table, cfg.format, out.as_deref())
        }
        Command::Fig2(args) => {
            let (cfg, out) = resolve(&args).map_err(Failure::Config)?;
            let table = cmd_fig2(&cfg)?;
            emit_table(&table, cfg.format, out.as_deref())
        }
        Command::Validate(args) => {
            let (cfg, out) = resolve(&args).map_err(Failure::Config)?;
            let report = cmd_validate(&cfg)?;
            if out.is_some() {
                emit_table(&report.table, cfg.format, out.as_deref())?;
            }
            let w = report.worst;
            println!(
                "cells = {}\nmax_deviation = {:e}\nworst: epsilon = {} omega_lag = {} deviation = {:e} tolerance = {:e}",
                report.cells.len(),
                report.max_deviation,
                w.epsilon,
                w.lag * cfg.params()?.omega(),
                w.deviation,
                w.tolerance
            );
            if report.passed {
                println!("PASS");
                Ok(())
            } else {
                println!("FAIL");
                Err(Failure::Runtime(format!(
                    "deviation {:e} exceeds {:e} at epsilon = {}, omega_lag = {}",
                    w.deviation,
                    w.tolerance,
                    w.epsilon,
                    w.lag * cfg.params()?.omega()
                )))
            }
        }
        Command::Threshold(args) => {
            let (cfg, _) = resolve(&args).map_err(Failure::Config)?;
            let report = cmd_threshold(&cfg)?;
            print!("{}", report.render());
            Ok(())
        }
        Command::Correlate { t1, t2, common } => {
            let (cfg, _) = resolve(&common).map_err(Failure::Config)?;
            let t1 = t1.ok_or_else(|| Failure::Config("correlate needs --t1".into()))?;
            let t2 = t2.ok_or_else(|| Failure::Config("correlate needs --t2".into()))?;
            print!("{}", cmd_correlate(&cfg, t1, t2)?.render());
            Ok(())
        }
        Command::Trajectory {
            times,
            outcomes,
            phase,
            common,
        } => {
            let (cfg, out) = resolve(&common).map_err(Failure::Config)?;
            let times: Vec<f64> = parse_list(
                &times.ok_or_else(|| Failure::Config("trajectory needs --times".into()))?,
                "times",
            )
            .map_err(Failure::Config)?;
            let outcomes: Vec<Outcome> = parse_list(
                &outcomes.ok_or_else(|| Failure::Config("trajectory needs --outcomes".into()))?,
                "outcomes",
            )
            .map_err(Failure::Config)?;
            let report = cmd_trajectory(&cfg, phase.unwrap_or(0.0), &times, &outcomes)?;
            emit_table(&report.table, cfg.format, out.as_deref())?;
            print!("{}", report.summary());
            Ok(())
        }
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count_from_env())
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return EXIT_FAILURE;
        }
    };

    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => EXIT_OK,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_parsing() {
        let f = ConfigFile::parse("# header\nomega = 2.5\neps_steps=11 # trailing\n\nselect-both = true\n")
            .unwrap();
        assert_eq!(f.get("omega"), Some("2.5"));
        assert_eq!(f.get("eps-steps"), Some("11"));
        assert!(f.flag("select-both").unwrap());
        assert!(ConfigFile::parse("omega 2").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "omega = 2.0\nepsilon = 0.3\nnodes = 64\n").unwrap();
        let args = CommonArgs {
            config: Some(path),
            epsilon: Some(0.6),
            ..CommonArgs::default()
        };
        let (cfg, _) = resolve(&args).unwrap();
        assert_eq!(cfg.epsilon, 0.6);
        assert_eq!(cfg.params().unwrap().omega(), 2.0);
        assert_eq!(cfg.quadrature.n_nodes(), 64);
    }

    #[test]
    fn frequency_choices_are_exclusive() {
        let args = CommonArgs {
            omega: Some(1.0),
            rabi: Some(1.0),
            ..CommonArgs::default()
        };
        assert!(resolve(&args).is_err());
        let args = CommonArgs {
            rabi: Some(0.5),
            n: Some(3),
            ..CommonArgs::default()
        };
        let (cfg, _) = resolve(&args).unwrap();
        assert_eq!(cfg.params().unwrap().omega(), 1.0);
    }

    #[test]
    fn custom_terms() {
        let terms = parse_terms("1,2,-1; 2,3,-1;1,3,-1").unwrap();
        assert_eq!(terms.len(), 3);
        assert_eq!(terms[2], Term { i: 1, j: 3, kappa: -1.0 });
        assert!(parse_terms("1,2").is_err());
    }

    #[test]
    fn bad_values_are_config_errors() {
        assert_eq!(run(["tbell", "fig1", "--omega", "-1"]), EXIT_CONFIG);
        assert_eq!(run(["tbell", "validate", "--nodes", "4"]), EXIT_CONFIG);
        assert_eq!(run(["tbell", "fig2", "--eps-steps", "1"]), EXIT_CONFIG);
        assert_eq!(run(["tbell", "nonsense"]), EXIT_CONFIG);
    }
}
