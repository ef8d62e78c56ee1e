use tdd_sim::frame::{classify_subframe, SubframeClass, SUBFRAMES_PER_FRAME};
use tdd_sim::phy::capacity_bps;
use tdd_sim::powerctl::{DeltaStep, PowerControlParams};
use tdd_sim::topology::NodeId;
use tdd_sim::trace::{PeriodRecord, SubframeRecord, TraceSink};
use tdd_sim::traffic::LinkDirection;
use tdd_sim::{run, Scheme, SimConfig, Simulation};

fn small(seed: u64, scheme: Scheme) -> SimConfig {
    let mut cfg = SimConfig {
        scheme,
        seed,
        duration_ms: 4_000,
        warmup_ms: 500,
        ..SimConfig::default()
    };
    cfg.layout.n_sites = 1;
    cfg.layout.picos_per_sector = 2;
    cfg.layout.ues_per_pico = 4;
    cfg
}

/// time, cell, direction, ue, power, delta, sinr_db, served bits
type Row = (u64, usize, LinkDirection, usize, f64, f64, f64, u64);

#[derive(Default)]
struct Recorder {
    subframes: Vec<Row>,
    periods: Vec<(u64, usize, u8, [f64; 5])>,
}

impl TraceSink for Recorder {
    fn wants_periods(&self) -> bool {
        true
    }

    fn period(&mut self, r: &PeriodRecord<'_>) {
        self.periods
            .push((r.time_ms, r.cell, r.config.id(), r.state.delta_db));
    }

    fn subframe(&mut self, r: &SubframeRecord<'_>) {
        self.subframes.push((
            r.time_ms,
            r.cell,
            r.direction,
            r.ue,
            r.power_dbm,
            r.delta_db,
            r.breakdown.sinr_db(),
            r.served_bits,
        ));
    }
}

#[test]
fn same_seed_same_metrics() {
    for scheme in [Scheme::Baseline, Scheme::Proposed] {
        let a = run(&small(3, scheme)).unwrap();
        let b = run(&small(3, scheme)).unwrap();
        assert_eq!(a, b);
        assert!(a.uplink.throughput.count > 0 && a.downlink.throughput.count > 0);
    }
}

#[test]
fn different_seed_different_metrics() {
    let a = run(&small(3, Scheme::Proposed)).unwrap();
    let b = run(&small(4, Scheme::Proposed)).unwrap();
    assert_ne!(a, b);
}

#[test]
fn zero_boost_table_matches_baseline() {
    let base = run(&small(5, Scheme::Baseline)).unwrap();
    let mut cfg = small(5, Scheme::Proposed);
    cfg.power_control = PowerControlParams::default().without_boost();
    let zeroed = run(&cfg).unwrap();
    assert_eq!(zeroed.uplink, base.uplink);
    assert_eq!(zeroed.downlink, base.downlink);
    assert_eq!(zeroed.mean_delta_db, 0.0);
}

#[test]
fn schemes_see_the_same_traffic() {
    let b = run(&small(8, Scheme::Baseline)).unwrap();
    let p = run(&small(8, Scheme::Proposed)).unwrap();
    assert_eq!(b.downlink.arrived, p.downlink.arrived);
    assert_eq!(b.uplink.arrived, p.uplink.arrived);
    assert_eq!(b.mean_delta_db, 0.0);
    assert!(p.mean_delta_db > 0.0);
}

#[test]
fn no_traffic_no_samples() {
    let mut cfg = small(1, Scheme::Proposed);
    cfg.traffic.lambda_dl = 0.0;
    let mut rec = Recorder::default();
    let m = Simulation::new(cfg).unwrap().run_traced(&mut rec).unwrap();
    assert_eq!(m.uplink.arrived, 0);
    assert_eq!(m.downlink.throughput.count, 0);
    assert_eq!(m.uplink.throughput.mean_bps, None);
    assert_eq!(m.uplink.completion_ratio(), 1.0);
    assert!(rec.subframes.is_empty());
    // nothing queued, so every cell keeps its starting configuration
    assert!(rec.periods.iter().all(|p| p.2 == 1));
}

#[test]
fn trace_invariants() {
    let cfg = small(2, Scheme::Proposed);
    let sim = Simulation::new(cfg.clone()).unwrap();
    let mut rec = Recorder::default();
    sim.run_traced(&mut rec).unwrap();
    assert!(!rec.subframes.is_empty());

    let cap_bits = (capacity_bps(f64::INFINITY, &cfg.link) / 1000.0).floor() as u64;
    let mut last = (0u64, 0usize);
    for &(t, cell, dir, ue, power, delta, sinr, served) in &rec.subframes {
        // one transmitter per cell and subframe
        assert!(
            (t, cell) > last || last == (0, 0),
            "duplicate transmitter at t={t} cell={cell}"
        );
        last = (t, cell);
        assert_eq!(sim.layout().ues[ue].serving, cell);
        assert!(served <= (capacity_bps(sinr, &cfg.link) / 1000.0).floor() as u64);
        assert!(served <= cap_bits);
        assert!(power <= cfg.power_control.ue_pmax_dbm || dir == LinkDirection::Downlink);
        let sf = (t % SUBFRAMES_PER_FRAME as u64) as usize;
        if dir == LinkDirection::Uplink {
            let pl = sim
                .coupling()
                .pathloss_db(NodeId::ue(ue), NodeId::enb(cell));
            let open_loop = (-76.0 + 0.8 * pl).min(23.0);
            match classify_subframe(sf).unwrap() {
                SubframeClass::Fixed => {
                    assert_eq!(power, open_loop);
                    assert_eq!(delta, 0.0);
                }
                SubframeClass::Flexible => assert_eq!(power, (-76.0 + 0.8 * pl + delta).min(23.0)),
            }
        } else {
            assert_eq!(power, cfg.link.enb_power_dbm);
        }
    }

    // the direction used matches the configuration in force
    for &(t, cell, dir, ..) in &rec.subframes {
        let period_start = t - t % cfg.mac.period_ms;
        let idx = rec
            .periods
            .iter()
            .position(|p| p.0 == period_start && p.1 == cell)
            .unwrap();
        let config = tdd_sim::frame::TddConfiguration::new(rec.periods[idx].2).unwrap();
        let sf = (t % SUBFRAMES_PER_FRAME as u64) as usize;
        assert_eq!(
            config.direction(sf).is_downlink(),
            dir == LinkDirection::Downlink
        );
    }
}

#[test]
fn lone_cell_is_noise_limited() {
    let mut cfg = small(6, Scheme::Proposed);
    cfg.layout.sectors_per_site = 1;
    cfg.layout.picos_per_sector = 1;
    let sim = Simulation::new(cfg.clone()).unwrap();
    assert_eq!(sim.layout().n_cells(), 1);
    let mut rec = Recorder::default();
    let m = sim.run_traced(&mut rec).unwrap();
    // no neighbours: empty interferer set, no boost
    assert_eq!(m.mean_delta_db, 0.0);
    assert!(rec.periods.iter().all(|p| p.3 == [0.0; 5]));
    for &(_, _, dir, ue, power, _, sinr, _) in &rec.subframes {
        let gain_db = sim.coupling().coupling_gain_db(
            match dir {
                LinkDirection::Downlink => NodeId::enb(0),
                LinkDirection::Uplink => NodeId::ue(ue),
            },
            match dir {
                LinkDirection::Downlink => NodeId::ue(ue),
                LinkDirection::Uplink => NodeId::enb(0),
            },
        );
        let noise_dbm = -174.0 + 10.0 * 9e6f64.log10();
        let snr = power + gain_db - noise_dbm;
        assert!((sinr - snr).abs() < 1e-9, "{sinr} vs {snr}");
    }
}

#[test]
fn larger_boost_never_lowers_powers() {
    let mut cfg = small(9, Scheme::Proposed);
    cfg.power_control.delta_table = vec![DeltaStep::new(1.0, 20.0)];
    let sim = Simulation::new(cfg.clone()).unwrap();
    let mut rec = Recorder::default();
    sim.run_traced(&mut rec).unwrap();
    assert!(rec.subframes.iter().all(|s| s.4 <= 24.0));
    assert!(rec
        .subframes
        .iter()
        .filter(|s| s.2 == LinkDirection::Uplink)
        .all(|s| s.4 <= cfg.power_control.ue_pmax_dbm));
}
