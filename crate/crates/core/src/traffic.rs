//! FTP-style traffic: Poisson file arrivals per cell and direction, fixed file
//! size, and FIFO byte queues per UE and direction.

use std::collections::VecDeque;
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{substream, Stream};

/// 0.5 MB with a binary megabyte: 2^19 bytes.
pub const FTP_PACKET_BITS: u64 = 4_194_304;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LinkDirection {
    #[serde(rename = "DL")]
    Downlink,
    #[serde(rename = "UL")]
    Uplink,
}

impl LinkDirection {
    pub const BOTH: [LinkDirection; 2] = [LinkDirection::Downlink, LinkDirection::Uplink];

    pub fn index(self) -> usize {
        match self {
            LinkDirection::Downlink => 0,
            LinkDirection::Uplink => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LinkDirection::Downlink => "DL",
            LinkDirection::Uplink => "UL",
        }
    }
}

impl fmt::Display for LinkDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Arrival rates are per cell. The uplink rate is always half the downlink
/// rate, so only the downlink rate is configurable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficParams {
    /// Downlink file arrivals per second per cell.
    pub lambda_dl: f64,
    pub packet_bits: u64,
}

impl Default for TrafficParams {
    fn default() -> Self {
        Self {
            lambda_dl: 1.0,
            packet_bits: FTP_PACKET_BITS,
        }
    }
}

impl TrafficParams {
    pub fn new(lambda_dl: f64) -> Self {
        Self {
            lambda_dl,
            ..Self::default()
        }
    }

    pub fn lambda_ul(&self) -> f64 {
        self.lambda_dl / 2.0
    }

    pub fn rate(&self, dir: LinkDirection) -> f64 {
        match dir {
            LinkDirection::Downlink => self.lambda_dl,
            LinkDirection::Uplink => self.lambda_ul(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_dl.is_finite() && self.lambda_dl >= 0.0) {
            return Err(invalid(
                "traffic.lambda_dl",
                format!("must be >= 0, got {}", self.lambda_dl),
            ));
        }
        if self.packet_bits == 0 {
            return Err(invalid("traffic.packet_bits", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketRecord {
    pub id: u64,
    pub direction: LinkDirection,
    /// UE index in the layout.
    pub ue: usize,
    pub cell: usize,
    pub size_bits: u64,
    pub arrival_ms: u64,
    pub remaining_bits: u64,
    pub completion_ms: Option<u64>,
}

impl PacketRecord {
    pub fn is_complete(&self) -> bool {
        self.completion_ms.is_some()
    }

    /// Size over sojourn time, in bits per second. `None` until completed.
    pub fn throughput_bps(&self) -> Option<f64> {
        let done = self.completion_ms?;
        let elapsed_ms = done.saturating_sub(self.arrival_ms);
        (elapsed_ms > 0).then(|| self.size_bits as f64 * 1000.0 / elapsed_ms as f64)
    }
}

fn poisson_times<R: Rng>(rng: &mut R, rate_per_s: f64, duration_ms: u64) -> Vec<u64> {
    if rate_per_s <= 0.0 {
        return Vec::new();
    }
    let exp = Exp::new(rate_per_s / 1000.0).expect("positive rate");
    let mut t = 0.0f64;
    let mut out = Vec::new();
    loop {
        t += exp.sample(rng);
        // arrivals are handed to the scheduler at the next subframe boundary
        let slot = t.ceil() as u64;
        if slot >= duration_ms {
            return out;
        }
        out.push(slot);
    }
}

/// All file arrivals of one cell over `duration_ms`, both directions, sorted
/// by arrival time. Each file goes to a UE of `ues` drawn uniformly.
pub fn generate_arrivals(
    params: &TrafficParams,
    cell: usize,
    ues: &[usize],
    duration_ms: u64,
    seed: u64,
) -> Vec<PacketRecord> {
    if ues.is_empty() {
        return Vec::new();
    }
    let dl = poisson_times(
        &mut substream(seed, Stream::DownlinkArrivals { cell }),
        params.lambda_dl,
        duration_ms,
    );
    let ul = poisson_times(
        &mut substream(seed, Stream::UplinkArrivals { cell }),
        params.lambda_ul(),
        duration_ms,
    );

    let mut pick = substream(seed, Stream::UeAssignment { cell });
    let mut packets: Vec<PacketRecord> = dl
        .into_iter()
        .map(|t| (LinkDirection::Downlink, t))
        .chain(ul.into_iter().map(|t| (LinkDirection::Uplink, t)))
        .map(|(direction, arrival_ms)| PacketRecord {
            id: 0,
            direction,
            ue: ues[pick.random_range(0..ues.len())],
            cell,
            size_bits: params.packet_bits,
            arrival_ms,
            remaining_bits: params.packet_bits,
            completion_ms: None,
        })
        .collect();
    // stable: DL before UL at equal times, otherwise generation order
    packets.sort_by_key(|p| (p.arrival_ms, p.direction));
    for (seq, p) in packets.iter_mut().enumerate() {
        p.id = ((cell as u64) << 32) | seq as u64;
    }
    packets
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ServeReport {
    pub served_bits: u64,
    pub completed: Vec<PacketRecord>,
}

/// FIFO of incomplete packets for one (UE, direction).
#[derive(Debug, Clone, Default)]
pub struct UeQueue {
    packets: VecDeque<PacketRecord>,
    queued_bits: u64,
}

impl UeQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, packet: PacketRecord) {
        debug_assert!(self
            .packets
            .back()
            .is_none_or(|last| last.arrival_ms <= packet.arrival_ms));
        self.queued_bits += packet.remaining_bits;
        self.packets.push_back(packet);
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn queued_bits(&self) -> u64 {
        self.queued_bits
    }

    pub fn head(&self) -> Option<&PacketRecord> {
        self.packets.front()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PacketRecord> {
        self.packets.iter()
    }

    /// Drain up to `bits` from the head of the queue. Packets that finish
    /// are stamped with `now_ms` and returned; leftover capacity spills into
    /// the next packet.
    pub fn serve(&mut self, bits: u64, now_ms: u64) -> ServeReport {
        let mut report = ServeReport::default();
        let mut budget = bits;
        while budget > 0 {
            let Some(head) = self.packets.front_mut() else {
                break;
            };
            let take = budget.min(head.remaining_bits);
            head.remaining_bits -= take;
            budget -= take;
            report.served_bits += take;
            if head.remaining_bits == 0 {
                let mut done = self.packets.pop_front().expect("head exists");
                done.completion_ms = Some(now_ms);
                report.completed.push(done);
            }
        }
        self.queued_bits -= report.served_bits;
        report
    }
}
