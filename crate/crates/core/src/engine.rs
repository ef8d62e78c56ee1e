//! Subframe-stepped simulation loop.
//!
//! Every reconfiguration period each cell picks a TDD configuration from its
//! queues and, under the proposed scheme, the power controller refreshes the
//! per-flexible-subframe boosts. Every subframe each cell schedules one UE in
//! the direction its configuration dictates, UL powers are set, SINRs are
//! evaluated against all simultaneous transmitters and the granted bits are
//! drained from the FIFO queues.

use serde::{Deserialize, Serialize};

use crate::channel::{build_coupling_matrix, AntennaGains, CouplingMatrix, PathlossModel};
use crate::error::{invalid, Result};
use crate::frame::{classify_subframe, flexible_slot, TddConfiguration, SUBFRAMES_PER_FRAME};
use crate::mac::{schedule, select_configuration, update_pf, PfState, ReconfigPolicy};
use crate::phy::{
    capacity_bps, dl_sinr, ul_sinr, CellActivity, LinkBudgetParams, SinrBreakdown, SubframeSnapshot,
};
use crate::powerctl::{
    ul_transmit_power, IndicatorContext, IndicatorState, PowerControlParams, PowerController,
};
use crate::topology::{generate_layout, LayoutParams, NetworkLayout, NodeId};
use crate::trace::{NoTrace, PeriodRecord, SubframeRecord, TraceSink};
use crate::traffic::{generate_arrivals, LinkDirection, PacketRecord, TrafficParams, UeQueue};
use crate::units::{dbm_to_mw, linear_to_db};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Open-loop power only.
    Baseline,
    /// Open-loop power plus the indicator-driven boost in flexible subframes.
    Proposed,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Baseline => "baseline",
            Scheme::Proposed => "proposed",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub layout: LayoutParams,
    pub pathloss: PathlossModel,
    pub antenna: AntennaGains,
    pub traffic: TrafficParams,
    pub power_control: PowerControlParams,
    pub link: LinkBudgetParams,
    pub mac: ReconfigPolicy,
    pub scheme: Scheme,
    pub duration_ms: u64,
    /// Packets arriving before this time are excluded from the metrics.
    pub warmup_ms: u64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            layout: LayoutParams::default(),
            pathloss: PathlossModel::default(),
            antenna: AntennaGains::default(),
            traffic: TrafficParams::default(),
            power_control: PowerControlParams::default(),
            link: LinkBudgetParams::default(),
            mac: ReconfigPolicy::default(),
            scheme: Scheme::Proposed,
            duration_ms: 60_000,
            warmup_ms: 1_000,
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        self.pathloss.validate()?;
        self.traffic.validate()?;
        self.power_control.validate()?;
        self.link.validate()?;
        self.mac.validate()?;
        if self.duration_ms == 0 {
            return Err(invalid("duration_ms", "must be positive"));
        }
        if self.warmup_ms >= self.duration_ms {
            return Err(invalid("warmup_ms", "must be shorter than the run"));
        }
        if !(self.antenna.enb_dbi.is_finite() && self.antenna.ue_dbi.is_finite()) {
            return Err(invalid("antenna", "gains must be finite"));
        }
        Ok(())
    }
}

/// Mean and 5th percentile of a throughput sample; `None` fields when empty.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ThroughputSummary {
    pub count: usize,
    pub mean_bps: Option<f64>,
    pub p5_bps: Option<f64>,
}

/// Linear-interpolation percentile at 1-based rank `p·(n−1) + 1`.
pub fn percentile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

pub fn collect_metrics(samples: &[f64]) -> ThroughputSummary {
    if samples.is_empty() {
        return ThroughputSummary::default();
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    ThroughputSummary {
        count: samples.len(),
        mean_bps: Some(samples.iter().sum::<f64>() / samples.len() as f64),
        p5_bps: percentile(&sorted, 0.05),
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct DirectionMetrics {
    pub throughput: ThroughputSummary,
    /// Packets that arrived after warm-up.
    pub arrived: usize,
    /// Of those, how many completed before the end of the run.
    pub completed: usize,
}

impl DirectionMetrics {
    pub fn completion_ratio(&self) -> f64 {
        if self.arrived == 0 {
            1.0
        } else {
            self.completed as f64 / self.arrived as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RunMetrics {
    pub downlink: DirectionMetrics,
    pub uplink: DirectionMetrics,
    /// Mean boost over each cell's uplink transmissions in flexible subframes.
    pub mean_delta_db_per_cell: Vec<f64>,
    /// Mean boost over all uplink transmissions in flexible subframes.
    pub mean_delta_db: f64,
}

impl RunMetrics {
    pub fn direction(&self, dir: LinkDirection) -> &DirectionMetrics {
        match dir {
            LinkDirection::Downlink => &self.downlink,
            LinkDirection::Uplink => &self.uplink,
        }
    }
}

/// SINR of every active cell in a snapshot (`None` for idle cells).
pub fn evaluate_snapshot(
    snapshot: &SubframeSnapshot,
    coupling: &CouplingMatrix,
    link: &LinkBudgetParams,
) -> Result<Vec<Option<SinrBreakdown>>> {
    snapshot
        .cells
        .iter()
        .enumerate()
        .map(|(cell, activity)| match activity {
            CellActivity::Idle => Ok(None),
            CellActivity::Downlink { .. } => dl_sinr(cell, snapshot, coupling, link).map(Some),
            CellActivity::Uplink { .. } => ul_sinr(cell, snapshot, coupling, link).map(Some),
        })
        .collect()
}

struct Cell {
    config: TddConfiguration,
    ues: Vec<usize>,
    arrivals: Vec<PacketRecord>,
    next_arrival: usize,
    /// Boost per flexible slot for the current period.
    delta_db: [f64; 5],
    delta_sum: f64,
    delta_count: u64,
}

/// A prepared run: layout, channel and traffic fixed, ready to step.
pub struct Simulation {
    config: SimConfig,
    layout: NetworkLayout,
    coupling: CouplingMatrix,
    enb_power_dbm: Vec<f64>,
    serving_pathloss_db: Vec<f64>,
    controller: Option<PowerController>,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let layout = generate_layout(&config.layout, config.seed)?;
        Self::with_layout(config, layout)
    }

    pub fn with_layout(config: SimConfig, layout: NetworkLayout) -> Result<Self> {
        config.validate()?;
        let coupling = build_coupling_matrix(&layout, &config.pathloss, &config.antenna)?;
        let enb_power_dbm = vec![config.link.enb_power_dbm; layout.n_cells()];
        let serving_pathloss_db = layout
            .ues
            .iter()
            .enumerate()
            .map(|(i, ue)| coupling.pathloss_db(NodeId::ue(i), NodeId::enb(ue.serving)))
            .collect();
        let mut sim = Self {
            config,
            layout,
            coupling,
            enb_power_dbm,
            serving_pathloss_db,
            controller: None,
        };
        if sim.config.scheme == Scheme::Proposed {
            let ctx = sim.indicator_context();
            sim.controller = Some(PowerController::new(sim.config.power_control.clone(), &ctx));
        }
        Ok(sim)
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn layout(&self) -> &NetworkLayout {
        &self.layout
    }

    pub fn coupling(&self) -> &CouplingMatrix {
        &self.coupling
    }

    pub fn controller(&self) -> Option<&PowerController> {
        self.controller.as_ref()
    }

    fn indicator_context(&self) -> IndicatorContext<'_> {
        IndicatorContext {
            coupling: &self.coupling,
            enb_power_dbm: &self.enb_power_dbm,
            noise_mw: self.config.link.system_noise_mw(),
            antenna_gains: self.config.power_control.indicator_antenna_gains,
        }
    }

    fn ul_power(&self, ue: usize, subframe: usize, delta_db: &[f64; 5]) -> f64 {
        let class = classify_subframe(subframe % SUBFRAMES_PER_FRAME).expect("subframe in range");
        let delta = flexible_slot(subframe).map_or(0.0, |slot| delta_db[slot]);
        ul_transmit_power(
            self.serving_pathloss_db[ue],
            class,
            delta,
            &self.config.power_control,
        )
    }

    /// Interference-free rate used as the scheduler's rate estimate.
    fn achievable_bps(&self, cell: usize, ue: usize, dir: LinkDirection, power_dbm: f64) -> f64 {
        let gain = match dir {
            LinkDirection::Downlink => self.coupling.gain_linear(NodeId::enb(cell), NodeId::ue(ue)),
            LinkDirection::Uplink => self.coupling.gain_linear(NodeId::ue(ue), NodeId::enb(cell)),
        };
        let snr = dbm_to_mw(power_dbm) * gain / self.config.link.noise_mw();
        capacity_bps(linear_to_db(snr), &self.config.link)
    }

    pub fn run(&self) -> Result<RunMetrics> {
        self.run_traced(&mut NoTrace)
    }

    pub fn run_traced(&self, trace: &mut dyn TraceSink) -> Result<RunMetrics> {
        let cfg = &self.config;
        let n_cells = self.layout.n_cells();
        let initial = TddConfiguration::new(cfg.mac.initial_config)?;
        let mut cells: Vec<Cell> = (0..n_cells)
            .map(|c| {
                let ues = self.layout.ues_of(c);
                let arrivals = generate_arrivals(&cfg.traffic, c, &ues, cfg.duration_ms, cfg.seed);
                Cell {
                    config: initial,
                    ues,
                    arrivals,
                    next_arrival: 0,
                    delta_db: [0.0; 5],
                    delta_sum: 0.0,
                    delta_count: 0,
                }
            })
            .collect();

        let mut queues: Vec<[UeQueue; 2]> = vec![Default::default(); self.layout.n_ues()];
        let mut pf = PfState::new(
            self.layout.n_ues(),
            cfg.mac.pf_window,
            cfg.mac.pf_epsilon_bps,
        );
        let mut samples: [Vec<f64>; 2] = Default::default();
        let mut arrived = [0usize; 2];
        for cell in &cells {
            for p in &cell.arrivals {
                if p.arrival_ms >= cfg.warmup_ms {
                    arrived[p.direction.index()] += 1;
                }
            }
        }

        let ctx = self.indicator_context();
        let mut snapshot = SubframeSnapshot::idle(0, n_cells);
        let mut backlog: Vec<Vec<usize>> = vec![Vec::new(); n_cells];

        for t in 0..cfg.duration_ms {
            let sf = (t % SUBFRAMES_PER_FRAME as u64) as usize;
            let measured = t >= cfg.warmup_ms;

            for cell in cells.iter_mut() {
                while let Some(p) = cell.arrivals.get(cell.next_arrival) {
                    if p.arrival_ms > t {
                        break;
                    }
                    queues[p.ue][p.direction.index()].push(p.clone());
                    cell.next_arrival += 1;
                }
            }

            if t % cfg.mac.period_ms == 0 {
                for cell in cells.iter_mut() {
                    let (dl, ul) = cell.ues.iter().fold((0u64, 0u64), |(dl, ul), &u| {
                        (
                            dl + queues[u][0].queued_bits(),
                            ul + queues[u][1].queued_bits(),
                        )
                    });
                    cell.config = select_configuration(dl, ul, cell.config);
                }
                if let Some(pc) = &self.controller {
                    let configs: Vec<_> = cells.iter().map(|c| c.config).collect();
                    let states = pc.update(&configs, &ctx)?;
                    for (c, (cell, state)) in cells.iter_mut().zip(&states).enumerate() {
                        cell.delta_db = state.delta_db;
                        trace.period(&PeriodRecord {
                            time_ms: t,
                            cell: c,
                            config: cell.config,
                            state,
                        });
                    }
                } else if trace.wants_periods() {
                    let none = IndicatorState::none();
                    for (c, cell) in cells.iter().enumerate() {
                        trace.period(&PeriodRecord {
                            time_ms: t,
                            cell: c,
                            config: cell.config,
                            state: &none,
                        });
                    }
                }
            }

            snapshot.subframe = t;
            for (c, cell) in cells.iter().enumerate() {
                let dir = if cell.config.direction(sf).is_downlink() {
                    LinkDirection::Downlink
                } else {
                    LinkDirection::Uplink
                };
                let power_of = |ue: usize| match dir {
                    LinkDirection::Downlink => self.enb_power_dbm[c],
                    LinkDirection::Uplink => self.ul_power(ue, sf, &cell.delta_db),
                };
                backlog[c].clear();
                backlog[c].extend(
                    cell.ues
                        .iter()
                        .copied()
                        .filter(|&u| !queues[u][dir.index()].is_empty()),
                );
                let chosen = schedule(
                    backlog[c].iter().map(|&u| {
                        (
                            u,
                            &queues[u][dir.index()],
                            self.achievable_bps(c, u, dir, power_of(u)),
                        )
                    }),
                    &pf,
                    dir,
                );
                snapshot.cells[c] = match (chosen, dir) {
                    (None, _) => CellActivity::Idle,
                    (Some(ue), LinkDirection::Downlink) => CellActivity::Downlink {
                        ue,
                        power_dbm: power_of(ue),
                    },
                    (Some(ue), LinkDirection::Uplink) => CellActivity::Uplink {
                        ue,
                        power_dbm: power_of(ue),
                    },
                };
            }

            let sinrs = evaluate_snapshot(&snapshot, &self.coupling, &cfg.link)?;

            for (c, cell) in cells.iter_mut().enumerate() {
                let (ue, dir, power_dbm) = match snapshot.cells[c] {
                    CellActivity::Idle => continue,
                    CellActivity::Downlink { ue, power_dbm } => {
                        (ue, LinkDirection::Downlink, power_dbm)
                    }
                    CellActivity::Uplink { ue, power_dbm } => {
                        (ue, LinkDirection::Uplink, power_dbm)
                    }
                };
                let breakdown = sinrs[c].expect("active cell has a SINR");
                let sinr_db = breakdown.sinr_db();
                let rate = capacity_bps(sinr_db, &cfg.link);
                let grant = (rate / 1000.0).floor() as u64;
                let report = queues[ue][dir.index()].serve(grant, t + 1);
                update_pf(
                    &mut pf,
                    dir,
                    backlog[c].iter().copied(),
                    Some((ue, report.served_bits as f64 * 1000.0)),
                );

                let delta_applied = match (dir, flexible_slot(sf)) {
                    (LinkDirection::Uplink, Some(slot)) => Some(cell.delta_db[slot]),
                    _ => None,
                };
                if measured {
                    if let Some(d) = delta_applied {
                        cell.delta_sum += d;
                        cell.delta_count += 1;
                    }
                    for done in &report.completed {
                        if done.arrival_ms >= cfg.warmup_ms {
                            if let Some(tp) = done.throughput_bps() {
                                samples[dir.index()].push(tp);
                            }
                        }
                    }
                }
                trace.subframe(&SubframeRecord {
                    time_ms: t,
                    cell: c,
                    direction: dir,
                    ue,
                    power_dbm,
                    delta_db: delta_applied.unwrap_or(0.0),
                    breakdown: &breakdown,
                    served_bits: report.served_bits,
                });
            }
        }

        let direction = |d: LinkDirection| DirectionMetrics {
            throughput: collect_metrics(&samples[d.index()]),
            arrived: arrived[d.index()],
            completed: samples[d.index()].len(),
        };
        let per_cell: Vec<f64> = cells
            .iter()
            .map(|c| {
                if c.delta_count == 0 {
                    0.0
                } else {
                    c.delta_sum / c.delta_count as f64
                }
            })
            .collect();
        let (sum, count) = cells.iter().fold((0.0, 0u64), |(s, n), c| {
            (s + c.delta_sum, n + c.delta_count)
        });
        Ok(RunMetrics {
            downlink: direction(LinkDirection::Downlink),
            uplink: direction(LinkDirection::Uplink),
            mean_delta_db_per_cell: per_cell,
            mean_delta_db: if count == 0 { 0.0 } else { sum / count as f64 },
        })
    }
}

/// Build and run one replication.
pub fn run(config: &SimConfig) -> Result<RunMetrics> {
    Simulation::new(config.clone())?.run()
}
