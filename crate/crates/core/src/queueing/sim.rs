use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use super::{ServiceSpec, StaffingPlan};
use crate::error::Result;
use crate::rng::RngStream;
use crate::types::{EpochList, Horizon};

/// Checkpoints `k·step` for `k = 1..`, up to and including `T`.
pub fn checkpoints_every(horizon: &Horizon, step: f64) -> Vec<f64> {
    let n = (horizon.t / step + 1e-9).floor() as usize;
    (1..=n).map(|k| k as f64 * step).collect()
}

/// Number in system `V(t) = #{k : a_k ≤ t < a_k + S_k}` at each checkpoint
/// of an infinite-server queue.
pub fn run_infinite_server(
    epochs: &EpochList,
    service: &ServiceSpec,
    checkpoints: &[f64],
    stream: &mut RngStream,
) -> Result<Vec<u32>> {
    service.validate()?;
    let arrivals = epochs.times();
    let mut departures = arrivals
        .iter()
        .map(|&a| Ok(a + service.draw(stream)?))
        .collect::<Result<Vec<f64>>>()?;
    departures.sort_by(f64::total_cmp);
    Ok(checkpoints
        .iter()
        .map(|&t| {
            let arrived = arrivals.partition_point(|&a| a <= t);
            let left = departures.partition_point(|&d| d <= t);
            (arrived - left) as u32
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Time(f64);

impl Eq for Time {}

impl PartialOrd for Time {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Time {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Per-customer outcome of a many-server run, indexed by arrival order.
#[derive(Debug, Clone, PartialEq)]
pub struct ManyServerRun {
    pub waits: Vec<f64>,
    pub service_starts: Vec<f64>,
    pub departures: Vec<f64>,
    /// Largest number in service at an admission instant, relative to the
    /// servers on duty then (never positive).
    pub max_admission_excess: i64,
}

/// FCFS single-queue, time-varying many-server simulation. A drop in
/// staffing lets in-progress services finish; it only blocks admissions.
pub fn run_many_server(
    epochs: &EpochList,
    service: &ServiceSpec,
    plan: &StaffingPlan,
    horizon: &Horizon,
    stream: &mut RngStream,
) -> Result<ManyServerRun> {
    service.validate()?;
    let arrivals = epochs.times();
    let n = arrivals.len();
    let durations = (0..n).map(|_| service.draw(stream)).collect::<Result<Vec<f64>>>()?;
    let p = plan.0.len();
    let change_times: Vec<f64> = (1..p).map(|i| horizon.t * i as f64 / p as f64).collect();

    let mut waits = vec![0.0; n];
    let mut starts = vec![0.0; n];
    let mut ends = vec![0.0; n];
    let mut queue = VecDeque::new();
    let mut in_service: BinaryHeap<Reverse<Time>> = BinaryHeap::new();
    let mut next_arrival = 0;
    let mut next_change = 0;
    let mut level = 0;
    let mut max_excess = i64::MIN;

    loop {
        let t_change = change_times.get(next_change).copied();
        let t_dep = in_service.peek().map(|r| r.0 .0);
        let t_arr = arrivals.get(next_arrival).copied();
        let now = match [t_change, t_dep, t_arr].into_iter().flatten().min_by(f64::total_cmp) {
            Some(t) => t,
            None => break,
        };
        if next_arrival >= n && queue.is_empty() && in_service.is_empty() {
            break;
        }
        // ties: staffing change, then departure, then arrival
        if t_change == Some(now) {
            level = next_change + 1;
            next_change += 1;
        } else if t_dep == Some(now) {
            in_service.pop();
        } else {
            queue.push_back(next_arrival);
            next_arrival += 1;
        }
        let servers = plan.0[level] as usize;
        while in_service.len() < servers {
            let Some(k) = queue.pop_front() else { break };
            starts[k] = now;
            waits[k] = now - arrivals[k];
            ends[k] = now + durations[k];
            in_service.push(Reverse(Time(ends[k])));
            max_excess = max_excess.max(in_service.len() as i64 - servers as i64);
        }
    }
    Ok(ManyServerRun {
        waits,
        service_starts: starts,
        departures: ends,
        max_admission_excess: if n == 0 { 0 } else { max_excess },
    })
}
