use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::types::Horizon;

/// Absorbs float noise such as `70 × 0.1 = 7.000000000000001` before the
/// ceiling.
const CEIL_SLACK: f64 = 1e-9;

/// Servers per staffing interval; interval `i` covers `[(i-1)Δ, iΔ)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaffingPlan(pub Vec<u32>);

impl StaffingPlan {
    pub fn new(servers: Vec<u32>) -> Result<Self> {
        if servers.is_empty() || servers.contains(&0) {
            return Err(domain("staffing plan needs at least one server in every interval"));
        }
        Ok(StaffingPlan(servers))
    }

    /// Servers on duty at time `t`; the last level persists after `T`.
    pub fn servers_at(&self, t: f64, horizon: &Horizon) -> u32 {
        let p = self.0.len();
        let i = ((t / horizon.t) * p as f64).floor().max(0.0) as usize;
        self.0[i.min(p - 1)]
    }
}

/// `s_i = ⌈R_i E(S) + β (R_i E(S))^(1/2 + α)⌉`.
pub fn staffing_power(rates: &[f64], mean_service: f64, beta: f64, alpha: f64) -> Result<StaffingPlan> {
    if !(mean_service > 0.0) {
        return Err(domain("mean service time must be positive"));
    }
    if !(0.0..=0.5).contains(&alpha) {
        return Err(domain(format!("variability exponent must lie in [0, 1/2], got {alpha}")));
    }
    let servers = rates
        .iter()
        .map(|&r| {
            if !(r > 0.0) {
                return Err(domain(format!("offered rate must be positive, got {r}")));
            }
            let load = r * mean_service;
            let s = (load + beta * load.powf(0.5 + alpha) - CEIL_SLACK).ceil();
            if s < 1.0 {
                return Err(domain(format!("staffing formula gives {s} servers for rate {r}")));
            }
            Ok(s as u32)
        })
        .collect::<Result<Vec<_>>>()?;
    StaffingPlan::new(servers)
}

/// Square-root staffing `s_i = ⌈R_i E(S) + β √(R_i E(S))⌉`.
pub fn staffing_sqrt(rates: &[f64], mean_service: f64, beta: f64) -> Result<StaffingPlan> {
    staffing_power(rates, mean_service, beta, 0.0)
}
