//! Per-command JSON configs. Missing fields take their defaults; flags
//! are applied on top by the command.

use std::path::Path;

use anyhow::{Context, Result};
use dswgan::dswgan::TrainingConfig;
use dswgan::epochs::EpochMode;
use dswgan::queueing::ServiceSpec;
use dswgan::synthetic::{CirConfig, PgnortaConfig, RateProfile};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthModel {
    Cir,
    Pgnorta,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub model: SynthModel,
    pub days: usize,
    pub seed: u64,
    pub cir: CirConfig,
    pub pgnorta: PgnortaSection,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            model: SynthModel::Cir,
            days: 300,
            seed: 0,
            cir: CirConfig::default(),
            pgnorta: PgnortaSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PgnortaSection {
    /// Operating-day length in hours; `p` is the number of base rates.
    pub hours: f64,
    #[serde(flatten)]
    pub model: PgnortaConfig,
}

impl Default for PgnortaSection {
    fn default() -> Self {
        // 22 half-hour intervals of the default hump profile
        let h = CirConfig::default().horizon;
        let rates = RateProfile::default_hump().interval_integrals(&h);
        PgnortaSection {
            hours: h.t,
            model: PgnortaConfig::ar1(rates, vec![10.0; h.p], 0.6),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CleanConfig {
    pub lower: f64,
    pub upper: f64,
    pub hours: f64,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            lower: 0.025,
            upper: 0.975,
            hours: 11.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub ratio: (u32, u32),
    pub seed: u64,
    pub hours: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratio: (2, 1),
            seed: 0,
            hours: 11.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hours: f64,
    #[serde(flatten)]
    pub training: TrainingConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hours: 11.0,
            training: TrainingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleConfig {
    pub days: usize,
    pub scale: f64,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            days: 300,
            scale: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EpochsConfig {
    pub mode: EpochMode,
    pub hours: f64,
    pub seed: u64,
}

impl Default for EpochsConfig {
    fn default() -> Self {
        EpochsConfig {
            mode: EpochMode::Pwc,
            hours: 11.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueueMode {
    Infinite,
    Many,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Staffing {
    Sqrt,
    Power,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct QueueConfig {
    pub mode: QueueMode,
    pub service: ServiceSpec,
    pub staffing: Staffing,
    pub beta: f64,
    pub alpha: f64,
    pub macro_reps: usize,
    /// Occupancy checkpoint spacing in hours.
    pub checkpoint_step: f64,
    pub hours: f64,
    /// Number of staffing intervals.
    pub intervals: usize,
    /// Offered-load profile; staffing uses its integral over each interval.
    pub profile: RateProfile,
    pub seed: u64,
}

impl Default for QueueConfig {
    fn default() -> Self {
        QueueConfig {
            mode: QueueMode::Infinite,
            service: ServiceSpec::Lognormal {
                mean: 0.1,
                variance: 0.1,
            },
            staffing: Staffing::Sqrt,
            beta: 1.0,
            alpha: 0.3,
            macro_reps: 100,
            checkpoint_step: 1.0 / 60.0,
            hours: 11.0,
            intervals: 22,
            profile: RateProfile::default_hump(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct StatsConfig {
    pub hours: f64,
    pub days: usize,
    pub macro_reps: usize,
    pub scale: f64,
    pub seed: u64,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            hours: 11.0,
            days: 300,
            macro_reps: 100,
            scale: 1.0,
            seed: 0,
        }
    }
}
