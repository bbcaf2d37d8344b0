//! Scenario files.
//!
//! ```toml
//! [channel]
//! l_ac_km = 20.0
//! l_bc_km = 0.0
//! eps1_snu = 0.002
//! eps2_snu = 0.002
//!
//! [modulation]
//! v_a_snu = 1e5
//!
//! [reconciliation]
//! beta = 0.969
//!
//! [finite]            # omit for the asymptotic rate
//! n_total = 1e10
//! ```

use std::path::Path;

use cvmdi::estimation::Sampler;
use cvmdi::finite_size::{DetectorUncertainty, FiniteSizeParams, KeyRateOptions, ModulationMode, MutualInfoMode};
use cvmdi::optimizer::{Sampling, Scenario};
use cvmdi::protocol::{DetectorModel, ProtocolParams, DEFAULT_ALPHA_DB_PER_KM};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub channel: ChannelSection,
    pub modulation: ModulationSection,
    pub reconciliation: ReconciliationSection,
    pub finite: Option<FiniteSection>,
    pub detector: Option<DetectorSection>,
    pub mode: Option<ModeSection>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub l_ac_km: f64,
    #[serde(default)]
    pub l_bc_km: f64,
    #[serde(default = "default_alpha")]
    pub alpha_db_per_km: f64,
    pub eps1_snu: f64,
    pub eps2_snu: f64,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA_DB_PER_KM
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationSection {
    pub v_a_snu: f64,
    /// Defaults to `v_a_snu`.
    pub v_b_snu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconciliationSection {
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteSection {
    /// Float so that `1e10` is accepted; must be a whole number.
    pub n_total: f64,
    #[serde(default = "half")]
    pub est_fraction: f64,
    #[serde(default = "default_eps")]
    pub eps_pe: f64,
    #[serde(default = "default_eps")]
    pub eps_smooth: f64,
    #[serde(default = "default_eps")]
    pub eps_pa: f64,
    #[serde(default = "yes")]
    pub modulation_intervals: bool,
    #[serde(default)]
    pub worst_case_mutual_info: bool,
}

fn half() -> f64 {
    0.5
}

fn default_eps() -> f64 {
    cvmdi::finite_size::DEFAULT_EPSILON
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub eta: f64,
    pub v_el_snu: f64,
    #[serde(default)]
    pub eta_half_width: f64,
    #[serde(default)]
    pub v_el_half_width_snu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    #[default]
    Theory,
    Montecarlo,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    #[serde(default)]
    pub kind: ModeKind,
    pub seed: Option<u64>,
}

pub(crate) fn block_length(value: f64) -> Result<u64, CliError> {
    if !(value >= 2.0 && value.fract() == 0.0 && value < u64::MAX as f64) {
        return Err(CliError::Config(format!(
            "n_total = {value} must be a whole number of signals, at least 2"
        )));
    }
    Ok(value as u64)
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn protocol(&self) -> Result<ProtocolParams, CliError> {
        let detector = self
            .detector
            .as_ref()
            .map(|d| DetectorModel::new(d.eta, d.v_el_snu))
            .transpose()?;
        let p = ProtocolParams {
            v_a: self.modulation.v_a_snu,
            v_b: self.modulation.v_b_snu.unwrap_or(self.modulation.v_a_snu),
            l_ac: self.channel.l_ac_km,
            l_bc: self.channel.l_bc_km,
            alpha: self.channel.alpha_db_per_km,
            eps1: self.channel.eps1_snu,
            eps2: self.channel.eps2_snu,
            beta: self.reconciliation.beta,
            detector,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn finite_size(&self) -> Result<Option<FiniteSizeParams>, CliError> {
        self.finite
            .as_ref()
            .map(|f| {
                let fs = FiniteSizeParams {
                    est_fraction: f.est_fraction,
                    eps_pe: f.eps_pe,
                    eps_smooth: f.eps_smooth,
                    eps_pa: f.eps_pa,
                    ..FiniteSizeParams::new(block_length(f.n_total)?)
                };
                fs.validate()?;
                Ok(fs)
            })
            .transpose()
    }

    pub fn options(&self) -> KeyRateOptions {
        let finite = self.finite.as_ref();
        KeyRateOptions {
            modulation: if finite.is_none_or(|f| f.modulation_intervals) {
                ModulationMode::Estimated
            } else {
                ModulationMode::Exact
            },
            mutual_info: if finite.is_some_and(|f| f.worst_case_mutual_info) {
                MutualInfoMode::WorstCase
            } else {
                MutualInfoMode::Central
            },
            detector_uncertainty: self
                .detector
                .as_ref()
                .filter(|d| d.eta_half_width > 0.0 || d.v_el_half_width_snu > 0.0)
                .map(|d| DetectorUncertainty {
                    eta_half_width: d.eta_half_width,
                    v_el_half_width: d.v_el_half_width_snu,
                }),
        }
    }

    /// Seed from the command line wins over the file; the default is 0.
    pub fn seed(&self, cli_seed: Option<u64>) -> u64 {
        cli_seed.or(self.mode.as_ref().and_then(|m| m.seed)).unwrap_or(0)
    }

    pub fn scenario(&self, cli_seed: Option<u64>) -> Result<Scenario, CliError> {
        let finite = self.finite_size()?;
        let kind = self.mode.as_ref().map(|m| m.kind).unwrap_or_default();
        let sampling = match kind {
            ModeKind::Theory => None,
            ModeKind::Montecarlo => {
                if finite.is_none() {
                    return Err(CliError::Config("mode.kind = \"montecarlo\" requires a [finite] section".into()));
                }
                Some(Sampling {
                    seed: self.seed(cli_seed),
                    trial: 0,
                    sampler: Sampler::Auto,
                })
            }
        };
        Ok(Scenario {
            protocol: self.protocol()?,
            finite,
            options: self.options(),
            sampling,
        })
    }
}
