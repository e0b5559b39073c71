//! Flat TOML scenario files. See `docs/scenario-format.md`.

use std::path::{Path, PathBuf};

use reconsense::detector::DetectorParams;
use reconsense::fusion::FusionParams;
use reconsense::reconfig::{CsiMode, ReconfigParams};
use reconsense::simkit::{Scheme, SweepMode};
use serde::Deserialize;

use crate::CliError;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Noncoop,
    Coop,
    Switching,
    Selection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Analytic,
    Mc,
    Both,
}

impl From<Mode> for SweepMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Analytic => SweepMode::Analytic,
            Mode::Mc => SweepMode::MonteCarlo,
            Mode::Both => SweepMode::Both,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub scheme: SchemeName,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// M: samples per user, or the total for the single-antenna schemes.
    pub samples: u32,
    /// N and n for the cooperative scheme.
    pub users: Option<u32>,
    pub votes: Option<u32>,
    /// Q for the reconfigurable schemes.
    pub states: Option<u32>,
    #[serde(default = "default_start")]
    pub start_db: f64,
    #[serde(default = "default_stop")]
    pub stop_db: f64,
    #[serde(default = "default_step")]
    pub step_db: f64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub output: Option<PathBuf>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    /// Slope window; without it the fit uses every cell with P_md in [1e-5, 1e-2].
    pub window_lo_db: Option<f64>,
    pub window_hi_db: Option<f64>,
}

fn default_alpha() -> f64 {
    0.05
}
fn default_start() -> f64 {
    -20.0
}
fn default_stop() -> f64 {
    20.0
}
fn default_step() -> f64 {
    1.0
}
fn default_trials() -> u64 {
    100_000
}
fn default_seed() -> u64 {
    1
}
fn default_mode() -> Mode {
    Mode::Both
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let s: Scenario = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if s.schema != SCHEMA {
            return Err(CliError::Config(format!(
                "schema {} not supported, expected {SCHEMA}",
                s.schema
            )));
        }
        s.grid()?;
        s.window()?;
        s.build()?;
        Ok(s)
    }

    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        grid(self.start_db, self.stop_db, self.step_db)
    }

    pub fn window(&self) -> Result<Option<(f64, f64)>, CliError> {
        match (self.window_lo_db, self.window_hi_db) {
            (None, None) => Ok(None),
            (Some(lo), Some(hi)) if lo < hi => Ok(Some((lo, hi))),
            _ => Err(CliError::Config(
                "window_lo_db and window_hi_db must be given together with lo < hi".into(),
            )),
        }
    }

    fn need(v: Option<u32>, key: &str, scheme: SchemeName) -> Result<u32, CliError> {
        v.ok_or_else(|| CliError::Config(format!("scheme {scheme:?} needs `{key}`")))
    }

    /// The calibrated scheme this scenario describes.
    pub fn build(&self) -> Result<Scheme, CliError> {
        let scheme = match self.scheme {
            SchemeName::Noncoop => Scheme::NonCoop(DetectorParams::calibrated(self.samples, self.alpha)?),
            SchemeName::Coop => {
                let n = Self::need(self.users, "users", self.scheme)?;
                let votes = self.votes.unwrap_or(1);
                Scheme::Coop(FusionParams::calibrated(n, votes, self.samples, self.alpha)?)
            }
            SchemeName::Switching | SchemeName::Selection => {
                let q = Self::need(self.states, "states", self.scheme)?;
                let mode = if self.scheme == SchemeName::Switching {
                    CsiMode::Switching
                } else {
                    CsiMode::Selection
                };
                Scheme::Reconfig(ReconfigParams::calibrated(q, self.samples, self.alpha, mode)?)
            }
        };
        Ok(scheme)
    }
}

pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
        return Err(CliError::Config(format!(
            "bad grid start {start}, stop {stop}, step {step}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    if n > 100_000 {
        return Err(CliError::Config(format!("grid of {} points is too long", n + 1)));
    }
    // index-based so values do not accumulate rounding
    Ok((0..=n).map(|k| start + step * k as f64).collect())
}

/// Short label used in the `scheme` CSV column.
pub fn label(scheme: &Scheme) -> String {
    match scheme {
        Scheme::NonCoop(d) => format!("noncoop_M{}", d.samples()),
        Scheme::Coop(f) => format!("coop_N{}_n{}_M{}", f.users(), f.votes(), f.per_user().samples()),
        Scheme::Reconfig(r) => format!("{}_Q{}_M{}", r.mode(), r.states(), r.samples()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let s = Scenario::parse("schema = 1\nscheme = \"noncoop\"\nsamples = 10\n").unwrap();
        assert_eq!(s.alpha, 0.05);
        assert_eq!(s.grid().unwrap().len(), 41);
        assert_eq!(s.mode, Mode::Both);
    }

    #[test]
    fn rejects_bad_files() {
        for text in [
            "schema = 2\nscheme = \"noncoop\"\nsamples = 10\n",
            "schema = 1\nscheme = \"coop\"\nsamples = 10\n",
            "schema = 1\nscheme = \"noncoop\"\nsamples = 0\n",
            "schema = 1\nscheme = \"noncoop\"\nsamples = 10\nalpha = 1.5\n",
            "schema = 1\nscheme = \"noncoop\"\nsamples = 10\nstep_db = 0\n",
            "schema = 1\nscheme = \"noncoop\"\nsamples = 10\ncolour = 3\n",
            "schema = 1\nscheme = \"selection\"\nsamples = 10\nstates = 2\nwindow_lo_db = 4\n",
        ] {
            assert!(matches!(Scenario::parse(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn grid_endpoints() {
        let g = grid(-7.0, 0.0, 0.25).unwrap();
        assert_eq!(g.len(), 29);
        assert_eq!(*g.last().unwrap(), 0.0);
    }
}
