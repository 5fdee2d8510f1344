//! Scenario files (TOML). Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dispatch::{DispatchOptions, ForecastNoise, MpcOptions, SolveMode};
use crate::models::Assets;
use crate::plant::PlantConfig;
use crate::profiles::{load_profiles, synth_profiles, Climate, ProfileError, ProfileSet, SynthTemplate};
use crate::sizing::{Catalog, SizingConfig};
use crate::tariff::Tariff;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClimatePreset {
    Mild,
    ColdWinter,
    HotSummer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClimateSpec {
    Preset(ClimatePreset),
    Custom(Climate),
}

impl ClimateSpec {
    pub fn climate(&self) -> Climate {
        match self {
            ClimateSpec::Preset(ClimatePreset::Mild) => Climate::mild(),
            ClimateSpec::Preset(ClimatePreset::ColdWinter) => Climate::cold_winter(),
            ClimateSpec::Preset(ClimatePreset::HotSummer) => Climate::hot_summer(),
            ClimateSpec::Custom(c) => c.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticProfiles {
    pub seed: u64,
    pub peak_cooling_kw: f64,
    pub peak_electric_kw: f64,
    pub climate: ClimateSpec,
    #[serde(default)]
    pub year: Option<i32>,
    /// 1-based day of the year to start on.
    #[serde(default)]
    pub start_day: Option<u32>,
    #[serde(default)]
    pub days: Option<u32>,
    #[serde(default)]
    pub steps_per_hour: Option<u32>,
}

impl SyntheticProfiles {
    pub fn template(&self) -> SynthTemplate {
        let mut t = SynthTemplate::new(self.peak_cooling_kw, self.peak_electric_kw, self.climate.climate());
        if let Some(y) = self.year {
            t.year = y;
        }
        if let Some(d) = self.start_day {
            t.start_day = d;
        }
        if let Some(d) = self.days {
            t.days = d;
        }
        if let Some(s) = self.steps_per_hour {
            t.steps_per_hour = s;
        }
        t
    }
}

/// Exactly one of `csv` and `synthetic`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSource {
    /// Relative paths are resolved against the scenario file.
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SyntheticProfiles>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcConfig {
    /// Look-ahead K, in profile steps.
    pub horizon: usize,
    /// Control interval ΔT in hours; defaults to the profile step.
    pub control_interval_h: Option<f64>,
    pub breakpoints: usize,
    pub mode: SolveMode,
    pub terminal_credit_tes: f64,
    pub terminal_credit_bes: f64,
    pub initial_soc_tes: Option<f64>,
    pub initial_soc_bes: Option<f64>,
    pub forecast_noise: Option<ForecastNoise>,
}

impl Default for MpcConfig {
    fn default() -> Self {
        let d = DispatchOptions::default();
        Self {
            horizon: 24,
            control_interval_h: None,
            breakpoints: d.breakpoints,
            mode: d.mode,
            terminal_credit_tes: d.terminal_credit_tes,
            terminal_credit_bes: d.terminal_credit_bes,
            initial_soc_tes: None,
            initial_soc_bes: None,
            forecast_noise: None,
        }
    }
}

impl MpcConfig {
    /// Steps applied per solve: ΔT / dt.
    pub fn apply_steps(&self, dt: f64) -> Result<usize, ConfigError> {
        let interval = self.control_interval_h.unwrap_or(dt);
        let ratio = interval / dt;
        let m = ratio.round();
        if !(m >= 1.0 && (ratio - m).abs() < 1e-9) {
            return Err(ConfigError::Invalid(format!(
                "mpc.control_interval_h = {interval} h is not a positive multiple of the profile step {dt} h"
            )));
        }
        Ok(m as usize)
    }

    pub fn options(&self, dt: f64) -> Result<MpcOptions, ConfigError> {
        Ok(MpcOptions {
            horizon: self.horizon,
            apply_steps: self.apply_steps(dt)?,
            dispatch: DispatchOptions {
                breakpoints: self.breakpoints,
                mode: self.mode,
                terminal_credit_tes: self.terminal_credit_tes,
                terminal_credit_bes: self.terminal_credit_bes,
                ..DispatchOptions::default()
            },
            initial_soc_tes: self.initial_soc_tes,
            initial_soc_bes: self.initial_soc_bes,
            forecast_noise: self.forecast_noise,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Chiller of the storage-free reference plant; sized to the peak
    /// cooling load when absent.
    pub chiller_kw: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    #[serde(default)]
    pub description: String,
    pub profiles: ProfileSource,
    #[serde(default)]
    pub plant: PlantConfig,
    /// Curves, efficiencies and SOC limits; capacities are the sizes used
    /// when dispatching without a sizing run.
    pub assets: Assets,
    pub tariff: Tariff,
    pub sizing: SizingConfig,
    #[serde(default)]
    pub mpc: MpcConfig,
    #[serde(default)]
    pub baseline: BaselineConfig,
    #[serde(default)]
    pub catalog: Option<Catalog>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: base_dir.to_path_buf(),
            source,
        })?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate_static()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let mut cfg: ScenarioConfig = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.base_dir = base;
        cfg.validate_static()?;
        Ok(cfg)
    }

    /// Checks that need no profile data.
    pub fn validate_static(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.id.trim().is_empty() {
            return invalid("id must not be empty".into());
        }
        match (&self.profiles.csv, &self.profiles.synthetic) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return invalid("profiles: give exactly one of `csv` and `synthetic`".into()),
        }
        if let Err(e) = self.assets.validate() {
            return invalid(format!("assets: {e}"));
        }
        if let Err(e) = self.tariff.validate() {
            return invalid(format!("tariff: {e}"));
        }
        if let Err(e) = self.sizing.validate() {
            return invalid(format!("sizing: {e}"));
        }
        if self.mpc.horizon == 0 {
            return invalid("mpc.horizon must be positive".into());
        }
        if self.mpc.breakpoints == 0 {
            return invalid("mpc.breakpoints must be positive".into());
        }
        if let Some(c) = self.baseline.chiller_kw {
            if !(c >= 0.0) {
                return invalid(format!("baseline.chiller_kw = {c}"));
            }
        }
        Ok(())
    }

    /// Checks against the loaded profiles: ΔT a multiple of dt and the
    /// horizon no longer than the data.
    pub fn validate_with(&self, profiles: &ProfileSet) -> Result<(), ConfigError> {
        let dt = profiles.dt;
        let m = self.mpc.apply_steps(dt)?;
        if m > self.mpc.horizon {
            return Err(ConfigError::Invalid(format!(
                "control interval of {m} steps exceeds the {}-step horizon",
                self.mpc.horizon
            )));
        }
        if self.mpc.horizon > profiles.len() {
            return Err(ConfigError::Invalid(format!(
                "horizon of {} steps ({} h) exceeds the {}-step profile",
                self.mpc.horizon,
                self.mpc.horizon as f64 * dt,
                profiles.len()
            )));
        }
        Ok(())
    }

    pub fn load_profiles(&self) -> Result<ProfileSet, ConfigError> {
        let p = match (&self.profiles.csv, &self.profiles.synthetic) {
            (Some(path), _) => load_profiles(&self.base_dir.join(path))?,
            (None, Some(s)) => synth_profiles(s.seed, &s.template())?,
            (None, None) => return Err(ConfigError::Invalid("no profile source".into())),
        };
        self.validate_with(&p)?;
        Ok(p)
    }
}
