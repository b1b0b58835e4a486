//! Argument parsing and the six commands.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use myopic_core::model::validate_model;
use myopic_core::solver::{self, Mode};
use myopic_core::structural::{self, assumption_report, VerifyInputs};
use myopic_core::{fixtures, Matrix, PomdpModel};
use serde_json::json;

use crate::config::{self, MethodKind, RunConfig};
use crate::error::{CliError, Result};
use crate::format::{load_model, model_to_json, read_model};
use crate::report::{write_policy_csv, Report};
use crate::sampling::{sample_beliefs, sample_line_bases};

#[derive(Debug, Parser)]
#[command(name = "myopic", version, about = "Check whether the myopic policy lower-bounds the optimal POMDP policy")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a model file is well formed and stochastic.
    Validate { model: PathBuf },
    /// Run the assumption checkers.
    Check {
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a model and write its value function.
    Solve {
        model: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Policy table at the grid beliefs.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Solve a model and test the structural predictions against the solution.
    Verify {
        model: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        sampling: SampleArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare the optimal values of a precise and a noisier model.
    Compare {
        strong: PathBuf,
        weak: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a bundled example model.
    Gen {
        #[command(subcommand)]
        which: Example,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    Grid,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Grid resolution d; beliefs have coordinates in multiples of 1/d.
    #[arg(long, default_value_t = config::DEFAULT_GRID)]
    pub grid: usize,
    /// Run exactly k backups.
    #[arg(long, conflicts_with = "residual")]
    pub horizon: Option<usize>,
    /// Back up until the sup-norm change is at most this [default: 1e-8].
    #[arg(long)]
    pub residual: Option<f64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Grid)]
    pub method: MethodArg,
    /// Override a tolerance, e.g. `--tol capacity=20000`.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Random beliefs for the ψ sweep and range checks.
    #[arg(long, default_value_t = config::DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Random lines for the monotonicity and convexity checks.
    #[arg(long, default_value_t = config::DEFAULT_LINES)]
    pub lines: usize,
    #[arg(long, default_value_t = config::DEFAULT_LINE_STEPS)]
    pub line_steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConfusionArg {
    /// Mostly diagonal 3x3 confusion.
    Default,
    Identity,
}

#[derive(Debug, Subcommand)]
pub enum Example {
    Ex1,
    Ex2,
    /// Sensors where `B(0) = M B(1)` but `B(1)` does not Blackwell-dominate `B(0)`.
    #[command(name = "reversed_factor", alias = "reversed-factor")]
    ReversedFactor,
    /// Hierarchical sensing over the three-state source.
    Hierarchical {
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[arg(long, value_enum, default_value_t = ConfusionArg::Default)]
        confusion: ConfusionArg,
        /// Garble the confusion by a birth-death matrix (the noisier network).
        #[arg(long)]
        garbled: bool,
    },
    /// Tridiagonal interior and boundary sensors.
    Tridiagonal {
        #[arg(long, default_value_t = 4)]
        states: usize,
        #[arg(long, default_value_t = 0.6)]
        p: f64,
        #[arg(long, default_value_t = 0.7)]
        q: f64,
        #[arg(long, default_value_t = 0.8)]
        qb: f64,
    },
}

impl RunArgs {
    pub fn config(&self) -> Result<RunConfig> {
        let mut c = RunConfig {
            grid: self.grid,
            method: match self.method {
                MethodArg::Exact => MethodKind::Exact,
                MethodArg::Grid => MethodKind::Grid,
            },
            mode: match (self.horizon, self.residual) {
                (Some(k), _) => Mode::Horizon(k),
                (None, Some(t)) => Mode::Residual(t),
                (None, None) => Mode::Residual(config::DEFAULT_RESIDUAL),
            },
            ..RunConfig::default()
        };
        for t in &self.tol {
            c.apply_tol(t)?;
        }
        c.check()?;
        Ok(c)
    }
}

/// Where a command's document goes: a file, or the command's stdout.
fn emit(text: &str, path: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Write {
            path: p.to_path_buf(),
            source,
        }),
        None => stdout.write_all(text.as_bytes()).map_err(|source| CliError::Write {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn emit_csv(m: &PomdpModel, v: &solver::ValueFunction, d: usize, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })?;
    write_policy_csv(m, v, d, std::io::BufWriter::new(file))
}

pub fn cmd_validate(path: &Path, stdout: &mut dyn Write) -> Result<u8> {
    let m = read_model(path)?;
    let violations = validate_model(&m);
    let mut text = String::new();
    if violations.is_empty() {
        text.push_str(&format!("ok: {}\n", m.name));
    } else {
        for v in &violations {
            text.push_str(&format!("{v}\n"));
        }
    }
    emit(&text, None, stdout)?;
    Ok(u8::from(!violations.is_empty()))
}

pub fn cmd_check(path: &Path, out: Option<&Path>, stdout: &mut dyn Write) -> Result<u8> {
    let m = load_model(path)?;
    emit(&Report::from_assumptions(&assumption_report(&m)).to_json(), out, stdout)?;
    Ok(0)
}

pub fn cmd_solve(path: &Path, c: &RunConfig, out: Option<&Path>, csv: Option<&Path>, stdout: &mut dyn Write) -> Result<u8> {
    let m = load_model(path)?;
    let v = solver::solve(&m, c.method(), c.mode, &c.solve)?;
    let doc = json!({
        "model": m.name,
        "method": match c.method {
            MethodKind::Exact => "exact",
            MethodKind::Grid => "grid",
        },
        "mode": c.mode,
        "residual": v.residual(),
        "value_function": v,
    });
    emit(&(serde_json::to_string_pretty(&doc)? + "\n"), out, stdout)?;
    if let Some(p) = csv {
        emit_csv(&m, &v, c.grid, p)?;
    }
    Ok(0)
}

pub fn cmd_verify(path: &Path, c: &RunConfig, out: Option<&Path>, csv: Option<&Path>, stdout: &mut dyn Write) -> Result<u8> {
    let m = load_model(path)?;
    let v = solver::solve(&m, c.method(), c.mode, &c.solve)?;
    let samples = sample_beliefs(m.num_states, c.samples, c.seed);
    let bases = sample_line_bases(m.num_states, c.lines, c.seed);
    let inputs = VerifyInputs {
        grid: c.grid,
        slack: c.slack(m.discount),
        samples: &samples,
        line_bases: &bases,
        line_steps: c.line_steps,
    };
    let rep = structural::verify(&m, &v, &inputs)?;
    let doc = Report::from_verification(&assumption_report(&m), &rep, &v, c.mode);
    emit(&doc.to_json(), out, stdout)?;
    if let Some(p) = csv {
        emit_csv(&m, &v, c.grid, p)?;
    }
    Ok(u8::from(!rep.expectations_met()))
}

pub fn cmd_compare(strong: &Path, weak: &Path, c: &RunConfig, out: Option<&Path>, stdout: &mut dyn Write) -> Result<u8> {
    let s = load_model(strong)?;
    let w = load_model(weak)?;
    let rep = structural::compare_models(&s, &w, c.grid, c.method(), c.mode, &c.solve)?;
    let doc = Report::from_comparison(&assumption_report(&s), &assumption_report(&w), &rep);
    emit(&doc.to_json(), out, stdout)?;
    let predicted = rep.hypotheses.statement1 || rep.hypotheses.statement2;
    Ok(u8::from(predicted && !rep.holds))
}

pub fn gen_example(which: &Example) -> Result<PomdpModel> {
    Ok(match *which {
        Example::Ex1 => fixtures::ex1(),
        Example::Ex2 => fixtures::ex2(),
        Example::ReversedFactor => fixtures::reversed_factor(),
        Example::Hierarchical {
            levels,
            confusion,
            garbled,
        } => {
            let mut conf = match confusion {
                ConfusionArg::Default => fixtures::default_confusion(),
                ConfusionArg::Identity => Matrix::identity(3),
            };
            if garbled {
                conf = conf.matmul(&fixtures::birth_death(3))?;
            }
            let base = fixtures::ex1_observations()[0].clone();
            fixtures::hierarchical(&conf, &base, levels)?
        }
        Example::Tridiagonal { states, p, q, qb } => fixtures::tridiagonal(states, p, q, qb)?,
    })
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<u8> {
    match &cli.command {
        Command::Validate { model } => cmd_validate(model, stdout),
        Command::Check { model, out } => cmd_check(model, out.as_deref(), stdout),
        Command::Solve { model, run, out, csv } => cmd_solve(model, &run.config()?, out.as_deref(), csv.as_deref(), stdout),
        Command::Verify {
            model,
            run,
            sampling,
            out,
            csv,
        } => {
            let c = RunConfig {
                samples: sampling.samples,
                lines: sampling.lines,
                line_steps: sampling.line_steps,
                seed: sampling.seed,
                ..run.config()?
            };
            cmd_verify(model, &c, out.as_deref(), csv.as_deref(), stdout)
        }
        Command::Compare { strong, weak, run, out } => cmd_compare(strong, weak, &run.config()?, out.as_deref(), stdout),
        Command::Gen { which, out } => {
            emit(&model_to_json(&gen_example(which)?), out.as_deref(), stdout)?;
            Ok(0)
        }
    }
}

/// Parses `args` (program name first) and runs the command.
/// Returns the exit status: 0 success, 1 violated expectations, 2 input errors.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}
