//! Run-through-queue harness: infinite-server occupancy and time-varying
//! many-server FCFS waiting times driven by arrival epochs.

mod report;
mod sim;
mod staffing;

pub use report::{interval_average_waits, summarize_runs, QueueReport, ReportKind, ReportRow, Statistic};
pub use sim::{checkpoints_every, run_infinite_server, run_many_server, ManyServerRun};
pub use staffing::{staffing_power, staffing_sqrt, StaffingPlan};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::rng::RngStream;

/// Service-time distribution, in hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ServiceSpec {
    Lognormal { mean: f64, variance: f64 },
    Exponential { mean: f64 },
    Deterministic { duration: f64 },
}

impl ServiceSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ServiceSpec::Lognormal { mean, variance } => mean > 0.0 && variance > 0.0,
            ServiceSpec::Exponential { mean } => mean > 0.0,
            ServiceSpec::Deterministic { duration } => duration >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(domain(format!("invalid service distribution {self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ServiceSpec::Lognormal { mean, .. } | ServiceSpec::Exponential { mean } => mean,
            ServiceSpec::Deterministic { duration } => duration,
        }
    }

    pub fn draw(&self, stream: &mut RngStream) -> Result<f64> {
        match *self {
            ServiceSpec::Lognormal { mean, variance } => stream.lognormal(mean, variance),
            ServiceSpec::Exponential { mean } => Ok(stream.exponential(mean)),
            ServiceSpec::Deterministic { duration } => Ok(duration),
        }
    }
}
