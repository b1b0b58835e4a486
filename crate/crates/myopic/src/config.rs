//! Run settings shared by the solving commands.

use myopic_core::solver::{slack_for, Method, Mode, SolveOptions};

use crate::error::{CliError, Result};

pub const DEFAULT_GRID: usize = 100;
pub const DEFAULT_RESIDUAL: f64 = 1e-8;
pub const DEFAULT_SAMPLES: usize = 200;
pub const DEFAULT_LINES: usize = 100;
pub const DEFAULT_LINE_STEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    Exact,
    Grid,
}

/// Resolved settings for one solve-and-check run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: usize,
    pub mode: Mode,
    pub method: MethodKind,
    pub solve: SolveOptions,
    /// Overrides the contraction slack `2τ/(1−ρ)` when set.
    pub slack: Option<f64>,
    pub samples: usize,
    pub lines: usize,
    pub line_steps: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: DEFAULT_GRID,
            mode: Mode::Residual(DEFAULT_RESIDUAL),
            method: MethodKind::Grid,
            solve: SolveOptions::default(),
            slack: None,
            samples: DEFAULT_SAMPLES,
            lines: DEFAULT_LINES,
            line_steps: DEFAULT_LINE_STEPS,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn method(&self) -> Method {
        match self.method {
            MethodKind::Exact => Method::Exact,
            MethodKind::Grid => Method::Grid { resolution: self.grid },
        }
    }

    pub fn slack(&self, discount: f64) -> f64 {
        self.slack.unwrap_or_else(|| slack_for(self.mode, discount))
    }

    pub fn check(&self) -> Result<()> {
        if self.grid == 0 {
            return Err(CliError::Usage("--grid must be at least 1".into()));
        }
        if let Mode::Residual(t) = self.mode {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Usage(format!("--residual must be positive, got {t}")));
            }
        }
        Ok(())
    }

    /// Applies one `name=value` override.
    pub fn apply_tol(&mut self, arg: &str) -> Result<()> {
        let (name, value) = arg
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected name=value, got {arg:?}")))?;
        let float = || -> Result<f64> {
            match value.trim().parse::<f64>() {
                Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
                _ => Err(CliError::Usage(format!("{name}: not a nonnegative number: {value:?}"))),
            }
        };
        let count = || -> Result<usize> {
            value
                .trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("{name}: not a count: {value:?}")))
        };
        match name.trim() {
            "lp_feasibility" => self.solve.lp.feasibility_tol = float()?,
            "lp_pivot" => self.solve.lp.pivot_tol = float()?,
            "lp_optimality" => self.solve.lp.optimality_tol = float()?,
            "lp_max_iterations" => self.solve.lp.max_iterations = count()?,
            "capacity" => self.solve.capacity = count()?,
            "max_iterations" => self.solve.max_iterations = count()?,
            "slack" => self.slack = Some(float()?),
            other => {
                return Err(CliError::Usage(format!(
                    "unknown tolerance {other:?} (known: lp_feasibility, lp_pivot, lp_optimality, \
                     lp_max_iterations, capacity, max_iterations, slack)"
                )))
            }
        }
        Ok(())
    }
}
