use std::fmt;
use std::fs;
use std::path::Path;

use lck_core::{DerivativeMode, Settings, Tolerances};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    LckIdentities,
    EinsteinChain,
    ParallelField,
    CommutingPair,
    HamiltonianForm,
    AverageMetric,
    Holonomy,
    Classify,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::LckIdentities,
        Suite::EinsteinChain,
        Suite::ParallelField,
        Suite::CommutingPair,
        Suite::HamiltonianForm,
        Suite::AverageMetric,
        Suite::Holonomy,
        Suite::Classify,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::LckIdentities => "lck-identities",
            Suite::EinsteinChain => "einstein-chain",
            Suite::ParallelField => "parallel-field",
            Suite::CommutingPair => "commuting-pair",
            Suite::HamiltonianForm => "hamiltonian-form",
            Suite::AverageMetric => "average-metric",
            Suite::Holonomy => "holonomy",
            Suite::Classify => "classify",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Fd,
    Analytic,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Fd => "fd",
            Mode::Analytic => "analytic",
        }
    }
}

impl From<Mode> for DerivativeMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Fd => DerivativeMode::FiniteDifference,
            Mode::Analytic => DerivativeMode::Analytic,
        }
    }
}

/// Every field optional, as read from a config file or collected from flags.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub manifold: Option<String>,
    pub suites: Option<Vec<Suite>>,
    pub samples: Option<i64>,
    pub seed: Option<u64>,
    pub fd_step: Option<f64>,
    pub tol_id: Option<f64>,
    pub tol_chain: Option<f64>,
    pub tol_ode: Option<f64>,
    pub mode: Option<Mode>,
    pub at: Option<Vec<f64>>,
}

impl PartialConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `self` win over those in `base`.
    pub fn over(self, base: PartialConfig) -> PartialConfig {
        PartialConfig {
            manifold: self.manifold.or(base.manifold),
            suites: self.suites.or(base.suites),
            samples: self.samples.or(base.samples),
            seed: self.seed.or(base.seed),
            fd_step: self.fd_step.or(base.fd_step),
            tol_id: self.tol_id.or(base.tol_id),
            tol_chain: self.tol_chain.or(base.tol_chain),
            tol_ode: self.tol_ode.or(base.tol_ode),
            mode: self.mode.or(base.mode),
            at: self.at.or(base.at),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub manifold: String,
    pub suites: Vec<Suite>,
    pub samples: usize,
    pub seed: u64,
    pub fd_step: f64,
    pub tol_id: f64,
    pub tol_chain: f64,
    pub tol_ode: f64,
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub at: Option<Vec<f64>>,
}

impl SuiteConfig {
    pub const DEFAULT_SAMPLES: usize = 20;

    pub fn new(manifold: impl Into<String>, suites: Vec<Suite>) -> Self {
        let settings = Settings::default();
        let tol = settings.tol;
        SuiteConfig {
            manifold: manifold.into(),
            suites,
            samples: Self::DEFAULT_SAMPLES,
            seed: 0,
            fd_step: settings.fd_step,
            tol_id: tol.id,
            tol_chain: tol.chain,
            tol_ode: tol.ode,
            mode: Mode::Fd,
            at: None,
        }
    }

    /// Fills the gaps with defaults and validates. Tolerances default to the
    /// values of the chosen mode.
    pub fn from_partial(p: PartialConfig) -> Result<Self, CliError> {
        let manifold = p.manifold.ok_or_else(|| CliError::Config("no manifold given".into()))?;
        let mode = p.mode.unwrap_or_default();
        let tol = Tolerances::for_mode(mode.into());
        let samples = match p.samples {
            None => Self::DEFAULT_SAMPLES,
            Some(s) if s >= 1 => s as usize,
            Some(s) => return Err(CliError::Config(format!("samples must be at least 1, got {s}"))),
        };
        let cfg = SuiteConfig {
            manifold,
            suites: p.suites.unwrap_or_default(),
            samples,
            seed: p.seed.unwrap_or(0),
            fd_step: p.fd_step.unwrap_or(Settings::default().fd_step),
            tol_id: p.tol_id.unwrap_or(tol.id),
            tol_chain: p.tol_chain.unwrap_or(tol.chain),
            tol_ode: p.tol_ode.unwrap_or(tol.ode),
            mode,
            at: p.at,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.samples == 0 {
            return Err(CliError::Config("samples must be at least 1".into()));
        }
        for (name, v) in [
            ("fd_step", self.fd_step),
            ("tol_id", self.tol_id),
            ("tol_chain", self.tol_chain),
            ("tol_ode", self.tol_ode),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("{name} must be a positive number, got {v}")));
            }
        }
        if let Some(at) = &self.at {
            if at.iter().any(|v| !v.is_finite()) {
                return Err(CliError::Config(format!("point {at:?} has non-finite coordinates")));
            }
        }
        Ok(())
    }

    pub fn settings(&self) -> Settings {
        let mode = self.mode.into();
        let mut s = Settings::default().with_mode(mode).with_fd_step(self.fd_step);
        s.tol = Tolerances { id: self.tol_id, chain: self.tol_chain, ode: self.tol_ode, ..Tolerances::for_mode(mode) };
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = PartialConfig::from_toml("manifold = \"hopf{n=2}\"\nsamples = 5\nseed = 3\n").unwrap();
        let flags = PartialConfig { samples: Some(9), ..Default::default() };
        let cfg = SuiteConfig::from_partial(flags.over(file)).unwrap();
        assert_eq!(cfg.manifold, "hopf{n=2}");
        assert_eq!(cfg.samples, 9);
        assert_eq!(cfg.seed, 3);
    }

    #[test]
    fn analytic_mode_tightens_default_tolerance() {
        let p = PartialConfig { manifold: Some("flat_c2".into()), mode: Some(Mode::Analytic), ..Default::default() };
        let cfg = SuiteConfig::from_partial(p).unwrap();
        assert_eq!(cfg.tol_id, 1e-8);
        assert_eq!(cfg.settings().mode, DerivativeMode::Analytic);
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(PartialConfig::from_toml("suites = [\"lck-identities\", \"bogus\"]").is_err());
        assert!(PartialConfig::from_toml("colour = 1").is_err());
        let base = || PartialConfig { manifold: Some("flat_c2".into()), ..Default::default() };
        assert!(SuiteConfig::from_partial(PartialConfig { samples: Some(0), ..base() }).is_err());
        assert!(SuiteConfig::from_partial(PartialConfig { tol_id: Some(0.0), ..base() }).is_err());
        assert!(SuiteConfig::from_partial(PartialConfig { tol_ode: Some(-1.0), ..base() }).is_err());
        assert!(SuiteConfig::from_partial(PartialConfig::default()).is_err());
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            let parsed: PartialConfig = PartialConfig::from_toml(&format!("suites = [\"{s}\"]")).unwrap();
            assert_eq!(parsed.suites, Some(vec![s]));
        }
    }
}
