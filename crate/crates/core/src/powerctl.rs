//! Interference-aware uplink power control for flexible subframes.
//!
//! Each victim eNB keeps the set of neighbour eNBs whose pathloss towards it
//! is at most `p_threshold_db`. Once per reconfiguration period the neighbours
//! send their configuration number (3 bits), which the victim expands into a
//! 5-bit flexible bitmap. For every flexible subframe the victim computes an
//! interference level indicator
//!
//! ```text
//! I(s) = log2( Σ_k α_k(s) · P_k · PL_k / N )
//! ```
//!
//! where `α_k(s)` is neighbour `k`'s downlink bit for subframe `s`, `P_k` its
//! transmit power, `PL_k` the linear pathloss gain and `N` the thermal noise
//! over the system bandwidth. `I_max` is the same sum with every bit set. The
//! ratio `I / I_max` selects a boost `Δ` that its UEs add to the open-loop
//! power `P0 + α·PL` in that subframe.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channel::CouplingMatrix;
use crate::error::{invalid, Result};
use crate::frame::{
    decode_config_id, FlexibleBitmap, SubframeClass, TddConfiguration, FLEXIBLE_SUBFRAMES,
};
use crate::topology::NodeId;
use crate::units::dbm_to_mw;

/// Upper edge of an indicator region (as a fraction of `I_max`) and the
/// boost applied inside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaStep {
    pub fraction: f64,
    pub delta_db: f64,
}

impl DeltaStep {
    pub const fn new(fraction: f64, delta_db: f64) -> Self {
        Self { fraction, delta_db }
    }
}

pub fn default_delta_table() -> Vec<DeltaStep> {
    vec![
        DeltaStep::new(1.0 / 3.0, 0.0),
        DeltaStep::new(1.0 / 2.0, 1.0),
        DeltaStep::new(2.0 / 3.0, 3.0),
        DeltaStep::new(1.0, 5.0),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerControlParams {
    pub p0_dbm: f64,
    /// Fractional pathloss compensation factor.
    pub alpha: f64,
    pub p_threshold_db: f64,
    pub ue_pmax_dbm: f64,
    pub delta_table: Vec<DeltaStep>,
    /// Weight indicator terms by the eNB antenna gains as well.
    pub indicator_antenna_gains: bool,
}

impl Default for PowerControlParams {
    fn default() -> Self {
        Self {
            p0_dbm: -76.0,
            alpha: 0.8,
            p_threshold_db: 130.0,
            ue_pmax_dbm: 23.0,
            delta_table: default_delta_table(),
            indicator_antenna_gains: false,
        }
    }
}

impl PowerControlParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid(
                "power_control.alpha",
                format!("must lie in [0, 1], got {}", self.alpha),
            ));
        }
        for (name, v) in [
            ("power_control.p0_dbm", self.p0_dbm),
            ("power_control.p_threshold_db", self.p_threshold_db),
            ("power_control.ue_pmax_dbm", self.ue_pmax_dbm),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        let table = &self.delta_table;
        if table.is_empty() {
            return Err(invalid("power_control.delta_table", "must not be empty"));
        }
        for w in table.windows(2) {
            if w[1].fraction.is_nan() || w[1].fraction <= w[0].fraction {
                return Err(invalid(
                    "power_control.delta_table",
                    "fractions must be strictly increasing",
                ));
            }
            if w[1].delta_db < w[0].delta_db {
                return Err(invalid(
                    "power_control.delta_table",
                    "boosts must be non-decreasing",
                ));
            }
        }
        if table[0].fraction.is_nan()
            || table[0].fraction <= 0.0
            || table.last().map(|s| s.fraction) != Some(1.0)
        {
            return Err(invalid(
                "power_control.delta_table",
                "fractions must be positive and end at 1",
            ));
        }
        if table
            .iter()
            .any(|s| !s.delta_db.is_finite() || s.delta_db < 0.0)
        {
            return Err(invalid(
                "power_control.delta_table",
                "boosts must be finite and >= 0",
            ));
        }
        Ok(())
    }

    /// Same parameters with every boost set to zero (the baseline scheme).
    pub fn without_boost(&self) -> Self {
        let mut p = self.clone();
        for step in &mut p.delta_table {
            step.delta_db = 0.0;
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterfererSet {
    pub victim: usize,
    /// Neighbour eNB indices, ascending.
    pub members: Vec<usize>,
}

/// Neighbours of `victim` whose pathloss is at most the threshold (inclusive).
pub fn select_interferers(
    victim: usize,
    coupling: &CouplingMatrix,
    params: &PowerControlParams,
) -> InterfererSet {
    let members = (0..coupling.n_enb())
        .filter(|&k| k != victim)
        .filter(|&k| {
            coupling.pathloss_db(NodeId::enb(victim), NodeId::enb(k)) <= params.p_threshold_db
        })
        .collect();
    InterfererSet { victim, members }
}

/// Flexible bitmaps a victim has received from its interferers for the
/// current period.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NeighborConfigState {
    pub bitmaps: BTreeMap<usize, FlexibleBitmap>,
}

/// Ideal exchange: each interferer sends the 3-bit code of its chosen
/// configuration, the victim decodes it into the 5-bit bitmap.
pub fn exchange_configs(
    sets: &[InterfererSet],
    configs: &[TddConfiguration],
) -> Result<Vec<NeighborConfigState>> {
    sets.iter()
        .map(|set| {
            let mut bitmaps = BTreeMap::new();
            for &k in &set.members {
                let wire = configs[k].code().to_string();
                bitmaps.insert(k, decode_config_id(&wire)?);
            }
            Ok(NeighborConfigState { bitmaps })
        })
        .collect()
}

/// Inputs to the indicator that do not change within a run.
#[derive(Debug, Clone, Copy)]
pub struct IndicatorContext<'a> {
    pub coupling: &'a CouplingMatrix,
    pub enb_power_dbm: &'a [f64],
    /// Normalising noise power over the system bandwidth, mW.
    pub noise_mw: f64,
    pub antenna_gains: bool,
}

impl IndicatorContext<'_> {
    /// `P_k · PL_{i,k}` in mW, optionally times `G_i · G_k`.
    fn received_mw(&self, victim: usize, k: usize) -> f64 {
        let pl = self
            .coupling
            .pathloss_db(NodeId::enb(victim), NodeId::enb(k));
        let mut db = self.enb_power_dbm[k] - pl;
        if self.antenna_gains {
            db += 2.0 * self.coupling.antenna_gains().enb_dbi;
        }
        dbm_to_mw(db)
    }

    fn indicator<I>(&self, victim: usize, active: I) -> f64
    where
        I: IntoIterator<Item = usize>,
    {
        let sum: f64 = active
            .into_iter()
            .map(|k| self.received_mw(victim, k))
            .sum();
        if sum > 0.0 {
            (sum / self.noise_mw).log2()
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Indicator `I` of `victim` in flexible subframe `subframe`; `−∞` when no
/// interferer is downlink there.
pub fn interference_indicator(
    victim: usize,
    subframe: usize,
    state: &NeighborConfigState,
    ctx: &IndicatorContext<'_>,
) -> f64 {
    ctx.indicator(
        victim,
        state
            .bitmaps
            .iter()
            .filter(|(_, bm)| bm.is_downlink(subframe))
            .map(|(&k, _)| k),
    )
}

/// `I` with every interferer treated as downlink.
pub fn indicator_max(victim: usize, set: &InterfererSet, ctx: &IndicatorContext<'_>) -> f64 {
    ctx.indicator(victim, set.members.iter().copied())
}

/// Map `I` to a boost. Regions are closed on the right, so `I = f·I_max`
/// falls into the region whose upper edge is `f`. Negative `I` counts as 0;
/// `I = −∞` or `I_max ≤ 0` (aggregate interference never above noise) give
/// the first region.
pub fn delta_lookup(i: f64, i_max: f64, table: &[DeltaStep]) -> f64 {
    let Some(first) = table.first() else {
        return 0.0;
    };
    if i == f64::NEG_INFINITY || i.is_nan() || i_max.is_nan() || i_max <= 0.0 {
        return first.delta_db;
    }
    let level = i.max(0.0);
    table
        .iter()
        .find(|step| level <= step.fraction * i_max)
        .unwrap_or_else(|| table.last().expect("non-empty"))
        .delta_db
}

/// Uplink transmit power in dBm: `min(Pmax, P0 + α·PL + Δ)`. The boost only
/// applies in flexible subframes.
pub fn ul_transmit_power(
    serving_pathloss_db: f64,
    class: SubframeClass,
    delta_db: f64,
    params: &PowerControlParams,
) -> f64 {
    let boost = match class {
        SubframeClass::Fixed => 0.0,
        SubframeClass::Flexible => delta_db,
    };
    let open_loop = params.p0_dbm + params.alpha * serving_pathloss_db;
    params.ue_pmax_dbm.min(open_loop + boost)
}

/// Per-victim output of one power-control period.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorState {
    pub i_max: f64,
    /// `I` per flexible subframe, in `FLEXIBLE_SUBFRAMES` order.
    pub indicator: [f64; 5],
    pub delta_db: [f64; 5],
}

impl IndicatorState {
    pub fn none() -> Self {
        Self {
            i_max: f64::NEG_INFINITY,
            indicator: [f64::NEG_INFINITY; 5],
            delta_db: [0.0; 5],
        }
    }
}

/// Runs the per-period steps for every cell: exchange, indicator and boost.
#[derive(Debug, Clone)]
pub struct PowerController {
    params: PowerControlParams,
    sets: Vec<InterfererSet>,
    i_max: Vec<f64>,
}

impl PowerController {
    pub fn new(params: PowerControlParams, ctx: &IndicatorContext<'_>) -> Self {
        let sets: Vec<_> = (0..ctx.coupling.n_enb())
            .map(|v| select_interferers(v, ctx.coupling, &params))
            .collect();
        let i_max = sets
            .iter()
            .map(|s| indicator_max(s.victim, s, ctx))
            .collect();
        Self {
            params,
            sets,
            i_max,
        }
    }

    pub fn params(&self) -> &PowerControlParams {
        &self.params
    }

    pub fn interferer_sets(&self) -> &[InterfererSet] {
        &self.sets
    }

    pub fn update(
        &self,
        configs: &[TddConfiguration],
        ctx: &IndicatorContext<'_>,
    ) -> Result<Vec<IndicatorState>> {
        let states = exchange_configs(&self.sets, configs)?;
        Ok(states
            .iter()
            .enumerate()
            .map(|(victim, state)| {
                let i_max = self.i_max[victim];
                let mut out = IndicatorState {
                    i_max,
                    ..IndicatorState::none()
                };
                for (slot, &sf) in FLEXIBLE_SUBFRAMES.iter().enumerate() {
                    let i = interference_indicator(victim, sf, state, ctx);
                    out.indicator[slot] = i;
                    out.delta_db[slot] = delta_lookup(i, i_max, &self.params.delta_table);
                }
                out
            })
            .collect())
    }
}
