//! Per-subframe SINR for uplink and downlink receivers and Shannon-based link
//! adaptation.
//!
//! Each cell has at most one transmitter per subframe (full-band grant). An
//! uplink receiver at eNB `v` sees downlink eNBs of other cells (eNB→eNB) and,
//! unless disabled, other cells' scheduled UEs (UE→eNB). A downlink receiver
//! sees other downlink eNBs (eNB→UE) and other cells' uplink UEs (UE→UE).

use serde::{Deserialize, Serialize};

use crate::channel::CouplingMatrix;
use crate::error::{invalid, Error, Result};
use crate::topology::NodeId;
use crate::units::{dbm_to_mw, linear_to_db, noise_power_dbm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudgetParams {
    pub noise_density_dbm_hz: f64,
    /// Bandwidth used for data (50 RB × 180 kHz).
    pub effective_bandwidth_hz: f64,
    /// Channel bandwidth; normalises the power-control indicator.
    pub system_bandwidth_hz: f64,
    /// Spectral-efficiency ceiling, bit/s/Hz.
    pub spectral_efficiency_cap: f64,
    pub enb_power_dbm: f64,
    /// Count co-channel UL→UL interference at uplink receivers.
    pub ul_co_channel: bool,
}

impl Default for LinkBudgetParams {
    fn default() -> Self {
        Self {
            noise_density_dbm_hz: -174.0,
            effective_bandwidth_hz: 9e6,
            system_bandwidth_hz: 10e6,
            spectral_efficiency_cap: 4.8,
            enb_power_dbm: 24.0,
            ul_co_channel: true,
        }
    }
}

impl LinkBudgetParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("link.effective_bandwidth_hz", self.effective_bandwidth_hz),
            ("link.system_bandwidth_hz", self.system_bandwidth_hz),
            ("link.spectral_efficiency_cap", self.spectral_efficiency_cap),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !self.noise_density_dbm_hz.is_finite() || !self.enb_power_dbm.is_finite() {
            return Err(invalid(
                "link",
                "noise density and eNB power must be finite",
            ));
        }
        Ok(())
    }

    /// Receiver noise over the effective bandwidth, mW.
    pub fn noise_mw(&self) -> f64 {
        dbm_to_mw(noise_power_dbm(
            self.noise_density_dbm_hz,
            self.effective_bandwidth_hz,
        ))
    }

    /// Noise over the full channel bandwidth, mW.
    pub fn system_noise_mw(&self) -> f64 {
        dbm_to_mw(noise_power_dbm(
            self.noise_density_dbm_hz,
            self.system_bandwidth_hz,
        ))
    }
}

/// What a cell does in one subframe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellActivity {
    Idle,
    /// The eNB transmits to `ue`.
    Downlink {
        ue: usize,
        power_dbm: f64,
    },
    /// `ue` transmits to the eNB.
    Uplink {
        ue: usize,
        power_dbm: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubframeSnapshot {
    pub subframe: u64,
    /// Indexed by cell (= serving eNB index).
    pub cells: Vec<CellActivity>,
}

impl SubframeSnapshot {
    pub fn idle(subframe: u64, n_cells: usize) -> Self {
        Self {
            subframe,
            cells: vec![CellActivity::Idle; n_cells],
        }
    }
}

/// Received powers at one receiver, mW.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SinrBreakdown {
    pub signal_mw: f64,
    /// From downlink eNBs of other cells.
    pub enb_interference_mw: f64,
    /// From uplink UEs of other cells.
    pub ue_interference_mw: f64,
    pub noise_mw: f64,
}

impl SinrBreakdown {
    pub fn sinr_linear(&self) -> f64 {
        self.signal_mw / (self.enb_interference_mw + self.ue_interference_mw + self.noise_mw)
    }

    pub fn sinr_db(&self) -> f64 {
        linear_to_db(self.sinr_linear())
    }
}

fn receive(
    rx: NodeId,
    victim_cell: usize,
    snapshot: &SubframeSnapshot,
    coupling: &CouplingMatrix,
    include_ue: bool,
) -> (f64, f64) {
    let mut from_enb = 0.0;
    let mut from_ue = 0.0;
    for (k, activity) in snapshot.cells.iter().enumerate() {
        if k == victim_cell {
            continue;
        }
        match *activity {
            CellActivity::Idle => {}
            CellActivity::Downlink { power_dbm, .. } => {
                from_enb += dbm_to_mw(power_dbm) * coupling.gain_linear(NodeId::enb(k), rx);
            }
            CellActivity::Uplink { ue, power_dbm } if include_ue => {
                from_ue += dbm_to_mw(power_dbm) * coupling.gain_linear(NodeId::ue(ue), rx);
            }
            CellActivity::Uplink { .. } => {}
        }
    }
    (from_enb, from_ue)
}

pub fn ul_sinr(
    victim_cell: usize,
    snapshot: &SubframeSnapshot,
    coupling: &CouplingMatrix,
    link: &LinkBudgetParams,
) -> Result<SinrBreakdown> {
    let (ue, power_dbm) = match snapshot.cells.get(victim_cell) {
        Some(CellActivity::Uplink { ue, power_dbm }) => (*ue, *power_dbm),
        Some(CellActivity::Downlink { .. }) => {
            return Err(Error::WrongDirection {
                cell: victim_cell,
                expected: "uplink",
            })
        }
        _ => return Err(Error::NoTransmitter(victim_cell)),
    };
    let rx = NodeId::enb(victim_cell);
    let (enb, ue_i) = receive(rx, victim_cell, snapshot, coupling, link.ul_co_channel);
    Ok(SinrBreakdown {
        signal_mw: dbm_to_mw(power_dbm) * coupling.gain_linear(NodeId::ue(ue), rx),
        enb_interference_mw: enb,
        ue_interference_mw: ue_i,
        noise_mw: link.noise_mw(),
    })
}

pub fn dl_sinr(
    victim_cell: usize,
    snapshot: &SubframeSnapshot,
    coupling: &CouplingMatrix,
    link: &LinkBudgetParams,
) -> Result<SinrBreakdown> {
    let (ue, power_dbm) = match snapshot.cells.get(victim_cell) {
        Some(CellActivity::Downlink { ue, power_dbm }) => (*ue, *power_dbm),
        Some(CellActivity::Uplink { .. }) => {
            return Err(Error::WrongDirection {
                cell: victim_cell,
                expected: "downlink",
            })
        }
        _ => return Err(Error::NoTransmitter(victim_cell)),
    };
    let rx = NodeId::ue(ue);
    let (enb, ue_i) = receive(rx, victim_cell, snapshot, coupling, true);
    Ok(SinrBreakdown {
        signal_mw: dbm_to_mw(power_dbm) * coupling.gain_linear(NodeId::enb(victim_cell), rx),
        enb_interference_mw: enb,
        ue_interference_mw: ue_i,
        noise_mw: link.noise_mw(),
    })
}

pub fn ul_sinr_db(
    victim_cell: usize,
    snapshot: &SubframeSnapshot,
    coupling: &CouplingMatrix,
    link: &LinkBudgetParams,
) -> Result<f64> {
    ul_sinr(victim_cell, snapshot, coupling, link).map(|b| b.sinr_db())
}

pub fn dl_sinr_db(
    victim_cell: usize,
    snapshot: &SubframeSnapshot,
    coupling: &CouplingMatrix,
    link: &LinkBudgetParams,
) -> Result<f64> {
    dl_sinr(victim_cell, snapshot, coupling, link).map(|b| b.sinr_db())
}

/// `B · min(log2(1 + SINR), cap)` in bit/s; zero for `−∞` dB.
pub fn capacity_bps(sinr_db: f64, link: &LinkBudgetParams) -> f64 {
    if sinr_db == f64::NEG_INFINITY || sinr_db.is_nan() {
        return 0.0;
    }
    let se = (1.0 + 10f64.powf(sinr_db / 10.0)).log2();
    link.effective_bandwidth_hz * se.min(link.spectral_efficiency_cap)
}
