//! Run configuration: command-line flags layered over an optional JSON file.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Every setting any subcommand reads. Keys in a `--config` file use these
/// field names (`J` and `B` are upper case, as on the command line).
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "J")]
    pub j: Option<f64>,
    #[serde(rename = "B")]
    pub b: Option<f64>,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub hbar: Option<f64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub paper_units: Option<bool>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,

    pub b_min: Option<f64>,
    pub b_max: Option<f64>,
    pub b_points: Option<usize>,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub alpha_points: Option<usize>,
    pub j_min: Option<f64>,
    pub j_max: Option<f64>,
    pub j_points: Option<usize>,
    pub workers: Option<usize>,

    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub t_points: Option<usize>,
    pub initial: Option<usize>,
    pub target: Option<usize>,
    pub allow_dissipative: Option<bool>,

    pub element: Option<PathBuf>,
    pub realization: Option<PathBuf>,
    pub check: Option<bool>,

    pub group: Option<Vec<String>>,
    pub inject_fault: Option<bool>,
}

macro_rules! overlay_fields {
    ($dst:expr, $src:expr, $($f:ident),* $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f; } )*
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("reading {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }

    /// Settings present in `top` replace those in `self`.
    pub fn overlay(&mut self, top: RunConfig) {
        overlay_fields!(
            self, top, j, b, alpha1, alpha2, hbar, tol, seed, paper_units, out, format, b_min, b_max, b_points,
            alpha_min, alpha_max, alpha_points, j_min, j_max, j_points, workers, t_start, t_end, t_points, initial,
            target, allow_dissipative, element, realization, check, group, inject_fault
        );
    }

    pub fn tol(&self) -> Result<f64, CliError> {
        let tol = self.tol.unwrap_or(1e-9);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Validation(format!("tolerance must be positive, got {tol}")));
        }
        Ok(tol)
    }

    pub fn energy_scale(&self) -> f64 {
        if self.paper_units.unwrap_or(false) {
            4.0
        } else {
            1.0
        }
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }
}

fn flag(b: bool) -> Option<bool> {
    b.then_some(true)
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON file with default settings; flags override it.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Exchange coupling.
    #[arg(long = "J", allow_negative_numbers = true)]
    pub j: Option<f64>,
    /// Field amplitude (> 0).
    #[arg(long = "B", allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Damping parameter of the first site.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha1: Option<f64>,
    /// Damping parameter of the second site.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub hbar: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report energies with the overall factor 4 restored.
    #[arg(long)]
    pub paper_units: bool,
    /// Write output here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl CommonArgs {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            j: self.j,
            b: self.b,
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            hbar: self.hbar,
            tol: self.tol,
            seed: self.seed,
            paper_units: flag(self.paper_units),
            out: self.out.clone(),
            format: self.format,
            ..Default::default()
        }
    }

    /// File settings (if any) with these and `extra` flags on top.
    pub fn resolve(&self, extra: RunConfig) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        cfg.overlay(self.to_config());
        cfg.overlay(extra);
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub b_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b_max: Option<f64>,
    #[arg(long)]
    pub b_points: Option<usize>,
    /// Sweep the toy model alpha1 = -alpha2 = alpha instead of fixed dampings.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha_max: Option<f64>,
    #[arg(long)]
    pub alpha_points: Option<usize>,
    /// Sweep the coupling instead of holding it fixed.
    #[arg(long, allow_negative_numbers = true)]
    pub j_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub j_max: Option<f64>,
    #[arg(long)]
    pub j_points: Option<usize>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    pub workers: Option<usize>,
}

impl SweepArgs {
    pub fn to_config(&self) -> RunConfig {
        RunConfig {
            b_min: self.b_min,
            b_max: self.b_max,
            b_points: self.b_points,
            alpha_min: self.alpha_min,
            alpha_max: self.alpha_max,
            alpha_points: self.alpha_points,
            j_min: self.j_min,
            j_max: self.j_max,
            j_points: self.j_points,
            workers: self.workers,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvolveArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub t_start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub t_points: Option<usize>,
    /// Basis index of the initial state ζ (0..4).
    #[arg(long)]
    pub initial: Option<usize>,
    /// Basis index of the projected state ξ (0..4).
    #[arg(long)]
    pub target: Option<usize>,
    /// Evolve even when no positive metric exists.
    #[arg(long)]
    pub allow_dissipative: bool,
}

impl EvolveArgs {
    pub fn to_config(&self) -> RunConfig {
        RunConfig {
            t_start: self.t_start,
            t_end: self.t_end,
            t_points: self.t_points,
            initial: self.initial,
            target: self.target,
            allow_dissipative: flag(self.allow_dissipative),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct QuantizeArgs {
    /// Grassmann element JSON.
    #[arg(long, value_name = "PATH")]
    pub element: Option<PathBuf>,
    /// Realization JSON, e.g. {"families":[3,3],"hbar":1.0}.
    #[arg(long, value_name = "PATH")]
    pub realization: Option<PathBuf>,
    /// Also check hermiticity when the element is star-real.
    #[arg(long)]
    pub check: bool,
}

impl QuantizeArgs {
    pub fn to_config(&self) -> RunConfig {
        RunConfig {
            element: self.element.clone(),
            realization: self.realization.clone(),
            check: flag(self.check),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct VerifyArgs {
    /// Run only this group (repeatable).
    #[arg(long)]
    pub group: Vec<String>,
    /// Corrupt one generator of every realization before checking.
    #[arg(long)]
    pub inject_fault: bool,
}

impl VerifyArgs {
    pub fn to_config(&self) -> RunConfig {
        RunConfig {
            group: (!self.group.is_empty()).then(|| self.group.clone()),
            inject_fault: flag(self.inject_fault),
            ..Default::default()
        }
    }
}
