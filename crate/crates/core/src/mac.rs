//! Per-cell MAC: periodic TDD reconfiguration from queued traffic and
//! per-subframe proportional-fair user selection.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::frame::{TddConfiguration, SUBFRAMES_PER_FRAME};
use crate::traffic::{LinkDirection, UeQueue};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconfigPolicy {
    /// Reconfiguration (and power-control) period.
    pub period_ms: u64,
    /// PF averaging window in subframes.
    pub pf_window: f64,
    /// Floor on the PF average, bit/s.
    pub pf_epsilon_bps: f64,
    /// Configuration every cell starts with.
    pub initial_config: u8,
}

impl Default for ReconfigPolicy {
    fn default() -> Self {
        Self {
            period_ms: 10,
            pf_window: 100.0,
            pf_epsilon_bps: 1.0,
            initial_config: 1,
        }
    }
}

impl ReconfigPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.period_ms == 0 || !self.period_ms.is_multiple_of(SUBFRAMES_PER_FRAME as u64) {
            return Err(invalid(
                "mac.period_ms",
                "must be a positive multiple of 10",
            ));
        }
        if !(self.pf_window.is_finite() && self.pf_window >= 1.0) {
            return Err(invalid("mac.pf_window", "must be >= 1"));
        }
        if !(self.pf_epsilon_bps.is_finite() && self.pf_epsilon_bps > 0.0) {
            return Err(invalid("mac.pf_epsilon_bps", "must be positive"));
        }
        TddConfiguration::new(self.initial_config)
            .map(|_| ())
            .map_err(|e| invalid("mac.initial_config", e.to_string()))
    }
}

/// Fraction of downlink subframes (Special counted as downlink).
pub fn dl_fraction(config: TddConfiguration) -> f64 {
    config.downlink_subframes() as f64 / SUBFRAMES_PER_FRAME as f64
}

/// Pick the configuration whose downlink fraction is closest to the share of
/// downlink bits in the queues, lowest id on ties. With nothing queued the
/// current configuration is kept.
pub fn select_configuration(
    dl_queued_bits: u64,
    ul_queued_bits: u64,
    current: TddConfiguration,
) -> TddConfiguration {
    let total = dl_queued_bits as u128 + ul_queued_bits as u128;
    if total == 0 {
        return current;
    }
    // |dl/total - n/10| compared as |10·dl - n·total| to keep ties exact
    let dl10 = dl_queued_bits as u128 * SUBFRAMES_PER_FRAME as u128;
    TddConfiguration::all()
        .min_by_key(|c| dl10.abs_diff(c.downlink_subframes() as u128 * total))
        .expect("seven configurations")
}

/// Exponentially averaged served rate per UE and direction.
#[derive(Debug, Clone)]
pub struct PfState {
    window: f64,
    epsilon: f64,
    avg_bps: Vec<[f64; 2]>,
}

impl PfState {
    pub fn new(n_ues: usize, window: f64, epsilon: f64) -> Self {
        assert!(window >= 1.0, "PF window must be >= 1");
        Self {
            window,
            epsilon,
            avg_bps: vec![[0.0; 2]; n_ues],
        }
    }

    pub fn average(&self, ue: usize, dir: LinkDirection) -> f64 {
        self.avg_bps[ue][dir.index()]
    }

    pub fn metric(&self, ue: usize, dir: LinkDirection, achievable_bps: f64) -> f64 {
        achievable_bps / self.average(ue, dir).max(self.epsilon)
    }
}

/// Proportional-fair choice among `(ue, queue, achievable_bps)` candidates.
/// UEs with an empty queue are skipped; ties go to the earliest candidate.
pub fn schedule<'a, I>(candidates: I, pf: &PfState, dir: LinkDirection) -> Option<usize>
where
    I: IntoIterator<Item = (usize, &'a UeQueue, f64)>,
{
    let mut best: Option<(usize, f64)> = None;
    for (ue, queue, rate) in candidates {
        if queue.is_empty() {
            continue;
        }
        let m = pf.metric(ue, dir, rate);
        if best.is_none_or(|(_, bm)| m > bm) {
            best = Some((ue, m));
        }
    }
    best.map(|(ue, _)| ue)
}

/// One averaging step for the backlogged UEs of a direction: the served UE
/// moves towards `served_bps`, the others decay towards zero.
pub fn update_pf<I>(
    pf: &mut PfState,
    dir: LinkDirection,
    backlogged: I,
    served: Option<(usize, f64)>,
) where
    I: IntoIterator<Item = usize>,
{
    let keep = 1.0 - 1.0 / pf.window;
    let w = 1.0 / pf.window;
    for ue in backlogged {
        let r = &mut pf.avg_bps[ue][dir.index()];
        *r = match served {
            Some((s, bps)) if s == ue => keep * *r + w * bps,
            _ => keep * *r,
        };
    }
}
