//! Run configuration: command-line flags layered over an optional flat config file.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use qkd_core::adversary::EveKind;
use qkd_core::{Protocol, SystemParams};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_ROUNDS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_EPSILON1: f64 = 0.25;
/// Upper bound on the number of lengths in one curve.
pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolSel {
    Bb84,
    Qutrit,
    Both,
}

impl ProtocolSel {
    pub fn protocols(self) -> &'static [Protocol] {
        match self {
            ProtocolSel::Bb84 => &[Protocol::Bb84],
            ProtocolSel::Qutrit => &[Protocol::Qutrit],
            ProtocolSel::Both => &Protocol::ALL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Every setting that can come from a flag or the config file. Keys in the file use the
/// flag names with `-` replaced by `_` (and `p_d` for `--pd`).
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Flat TOML config file (a `.json` file holding a report's `config` echo also works).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub protocol: Option<ProtocolSel>,
    /// Fiber attenuation in dB/km.
    #[arg(long)]
    pub alpha_db_per_km: Option<f64>,
    #[arg(long)]
    pub length_km: Option<f64>,
    /// Transmittance of Bob's apparatus.
    #[arg(long)]
    pub gamma_b: Option<f64>,
    /// Detector efficiency.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Dark-count probability per detector per gate.
    #[arg(long = "pd")]
    pub p_d: Option<f64>,
    /// Misalignment error.
    #[arg(long)]
    pub q_opt: Option<f64>,
    /// Mean photon number per pulse.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub l_from: Option<f64>,
    #[arg(long)]
    pub l_to: Option<f64>,
    #[arg(long)]
    pub l_step: Option<f64>,
    /// none, intercept_resend_bb84, qutrit_forward, qubit_forward or pns.
    #[arg(long)]
    pub strategy: Option<EveKind>,
    #[arg(long)]
    pub epsilon1: Option<f64>,
    #[arg(long)]
    pub rounds: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; never changes the output.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Overrides {
    fn layer_over(self, base: Overrides) -> Overrides {
        Overrides {
            config: self.config.or(base.config),
            protocol: self.protocol.or(base.protocol),
            alpha_db_per_km: self.alpha_db_per_km.or(base.alpha_db_per_km),
            length_km: self.length_km.or(base.length_km),
            gamma_b: self.gamma_b.or(base.gamma_b),
            eta: self.eta.or(base.eta),
            p_d: self.p_d.or(base.p_d),
            q_opt: self.q_opt.or(base.q_opt),
            mu: self.mu.or(base.mu),
            l_from: self.l_from.or(base.l_from),
            l_to: self.l_to.or(base.l_to),
            l_step: self.l_step.or(base.l_step),
            strategy: self.strategy.or(base.strategy),
            epsilon1: self.epsilon1.or(base.epsilon1),
            rounds: self.rounds.or(base.rounds),
            seed: self.seed.or(base.seed),
            workers: self.workers.or(base.workers),
            format: self.format.or(base.format),
            out: self.out.or(base.out),
        }
    }
}

/// The fully resolved configuration, echoed verbatim in every report. Feeding the echo back
/// as a config file reproduces the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub protocol: ProtocolSel,
    pub alpha_db_per_km: f64,
    pub length_km: f64,
    pub gamma_b: f64,
    pub eta: f64,
    pub p_d: f64,
    pub q_opt: f64,
    pub mu: f64,
    pub l_from: f64,
    pub l_to: f64,
    pub l_step: f64,
    pub strategy: EveKind,
    pub epsilon1: f64,
    pub rounds: u64,
    pub seed: u64,
}

/// Settings that shape where and how output goes but never what it contains.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub workers: Option<usize>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn params(&self) -> SystemParams {
        SystemParams {
            alpha: self.alpha_db_per_km,
            length: self.length_km,
            gamma_b: self.gamma_b,
            eta: self.eta,
            p_d: self.p_d,
            q_opt: self.q_opt,
            mu: self.mu,
        }
    }

    /// Distances `l_from, l_from + l_step, ...` up to `l_to` inclusive.
    pub fn lengths(&self) -> Result<Vec<f64>, CliError> {
        let bad = |reason: String| Err(CliError::Config(reason));
        let (from, to, step) = (self.l_from, self.l_to, self.l_step);
        if !(step.is_finite() && step > 0.0) {
            return bad(format!("l_step must be positive, got {step}"));
        }
        if !(from.is_finite() && from >= 0.0) {
            return bad(format!("l_from must be a non-negative length, got {from}"));
        }
        if !(to.is_finite() && to >= from) {
            return bad(format!("l_to must be at least l_from, got {to}"));
        }
        let span = ((to - from) / step + 1e-9).floor();
        if span >= MAX_GRID_POINTS as f64 {
            return bad(format!("grid has more than {MAX_GRID_POINTS} points"));
        }
        Ok((0..=span as usize)
            .map(|i| from + i as f64 * step)
            .collect())
    }

    fn validate(&self) -> Result<(), CliError> {
        self.params().validate()?;
        if !(0.0..=0.5).contains(&self.epsilon1) {
            return Err(CliError::Config(format!(
                "epsilon1 must lie in [0, 0.5], got {}",
                self.epsilon1
            )));
        }
        if self.rounds == 0 {
            return Err(CliError::Config("rounds must be at least 1".into()));
        }
        Ok(())
    }
}

fn read_file(path: &Path) -> Result<Overrides, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let parsed = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Merges flags over the config file over the defaults and validates the result.
pub fn resolve(flags: Overrides) -> Result<(RunConfig, OutputSpec), CliError> {
    let file = match &flags.config {
        Some(path) => read_file(path)?,
        None => Overrides::default(),
    };
    let o = flags.layer_over(file);
    let reference = SystemParams::reference(0.0, 0.1);
    let config = RunConfig {
        protocol: o.protocol.unwrap_or(ProtocolSel::Both),
        alpha_db_per_km: o.alpha_db_per_km.unwrap_or(reference.alpha),
        length_km: o.length_km.unwrap_or(reference.length),
        gamma_b: o.gamma_b.unwrap_or(reference.gamma_b),
        eta: o.eta.unwrap_or(reference.eta),
        p_d: o.p_d.unwrap_or(reference.p_d),
        q_opt: o.q_opt.unwrap_or(reference.q_opt),
        mu: o.mu.unwrap_or(reference.mu),
        l_from: o.l_from.unwrap_or(0.0),
        l_to: o.l_to.unwrap_or(80.0),
        l_step: o.l_step.unwrap_or(1.0),
        strategy: o.strategy.unwrap_or(EveKind::None),
        epsilon1: o.epsilon1.unwrap_or(DEFAULT_EPSILON1),
        rounds: o.rounds.unwrap_or(DEFAULT_ROUNDS),
        seed: o.seed.unwrap_or(DEFAULT_SEED),
    };
    config.validate()?;
    if o.workers == Some(0) {
        return Err(CliError::Config("workers must be at least 1".into()));
    }
    Ok((
        config,
        OutputSpec {
            workers: o.workers,
            format: o.format,
            out: o.out,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_grid(from: f64, to: f64, step: f64) -> RunConfig {
        let (mut c, _) = resolve(Overrides::default()).unwrap();
        c.l_from = from;
        c.l_to = to;
        c.l_step = step;
        c
    }

    #[test]
    fn defaults_are_the_reference_setup() {
        let (c, out) = resolve(Overrides::default()).unwrap();
        assert_eq!(c.params(), SystemParams::reference(0.0, 0.1));
        assert_eq!(c.protocol, ProtocolSel::Both);
        assert_eq!(c.strategy, EveKind::None);
        assert_eq!(
            out,
            OutputSpec {
                workers: None,
                format: None,
                out: None
            }
        );
    }

    #[test]
    fn grids() {
        assert_eq!(with_grid(0.0, 80.0, 1.0).lengths().unwrap().len(), 81);
        let g = with_grid(0.0, 1.0, 0.1).lengths().unwrap();
        assert_eq!(g.len(), 11);
        assert!((g[10] - 1.0).abs() < 1e-12);
        assert_eq!(with_grid(5.0, 5.0, 1.0).lengths().unwrap(), vec![5.0]);
        assert!(with_grid(0.0, 10.0, 0.0).lengths().is_err());
        assert!(with_grid(10.0, 0.0, 1.0).lengths().is_err());
        assert!(with_grid(-1.0, 0.0, 1.0).lengths().is_err());
        assert!(with_grid(0.0, f64::INFINITY, 1.0).lengths().is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "mu = 0.3\neta = 0.2\nstrategy = \"pns\"\n").unwrap();
        let flags = Overrides {
            config: Some(path),
            mu: Some(0.4),
            ..Overrides::default()
        };
        let (c, _) = resolve(flags).unwrap();
        assert_eq!(c.mu, 0.4);
        assert_eq!(c.eta, 0.2);
        assert_eq!(c.strategy, EveKind::Pns);
    }

    #[test]
    fn bad_files_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        for body in [
            "colour = 3\n",
            "mu = \"high\"\n",
            "mu = 1.5\n",
            "q_opt = 0.6\n",
        ] {
            let path = dir.path().join("bad.toml");
            std::fs::write(&path, body).unwrap();
            let err = resolve(Overrides {
                config: Some(path),
                ..Overrides::default()
            })
            .unwrap_err();
            assert_eq!(err.exit_code(), 2, "{body}: {err}");
        }
        let missing = Overrides {
            config: Some(dir.path().join("nope.toml")),
            ..Overrides::default()
        };
        assert_eq!(resolve(missing).unwrap_err().exit_code(), 2);
    }
}
