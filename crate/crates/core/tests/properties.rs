use proptest::prelude::*;

use tdd_sim::channel::{pathloss_db, LinkType, PathlossModel};
use tdd_sim::engine::{collect_metrics, percentile};
use tdd_sim::frame::{
    decode_config_id, encode_config_id, FlexibleBitmap, SubframeClass, TddConfiguration,
};
use tdd_sim::mac::select_configuration;
use tdd_sim::powerctl::{default_delta_table, delta_lookup, ul_transmit_power, PowerControlParams};
use tdd_sim::traffic::{generate_arrivals, TrafficParams};

fn config() -> impl Strategy<Value = TddConfiguration> {
    (0u8..7).prop_map(|id| TddConfiguration::new(id).unwrap())
}

proptest! {
    #[test]
    fn codec_round_trip(c in config()) {
        let wire = encode_config_id(c.id()).unwrap().to_string();
        prop_assert_eq!(wire.len(), 3);
        prop_assert_eq!(decode_config_id(&wire).unwrap(), c.flexible_bitmap());
        let bitmap: FlexibleBitmap = c.flexible_bitmap().to_string().parse().unwrap();
        prop_assert_eq!(bitmap, c.flexible_bitmap());
    }

    #[test]
    fn boost_monotone_in_indicator(a in 0.0f64..40.0, b in 0.0f64..40.0, i_max in 0.1f64..40.0) {
        let table = default_delta_table();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(delta_lookup(lo, i_max, &table) <= delta_lookup(hi, i_max, &table));
        let d = delta_lookup(a, i_max, &table);
        prop_assert!([0.0, 1.0, 3.0, 5.0].contains(&d));
    }

    #[test]
    fn power_never_above_cap(pl in 40.0f64..200.0, delta in 0.0f64..30.0, alpha in 0.0f64..=1.0, flex in any::<bool>()) {
        let params = PowerControlParams { alpha, ..PowerControlParams::default() };
        let class = if flex { SubframeClass::Flexible } else { SubframeClass::Fixed };
        let p = ul_transmit_power(pl, class, delta, &params);
        prop_assert!(p <= params.ue_pmax_dbm);
        prop_assert!(p >= ul_transmit_power(pl, SubframeClass::Fixed, 0.0, &params));
    }

    #[test]
    fn selection_is_nearest_fraction(dl in 0u64..1u64 << 40, ul in 0u64..1u64 << 40, current in config()) {
        let chosen = select_configuration(dl, ul, current);
        if dl + ul == 0 {
            prop_assert_eq!(chosen, current);
        } else {
            let rho = dl as f64 / (dl + ul) as f64;
            let dist = |c: TddConfiguration| (rho - c.downlink_subframes() as f64 / 10.0).abs();
            for other in TddConfiguration::all() {
                prop_assert!(dist(chosen) <= dist(other) + 1e-12);
            }
        }
    }

    #[test]
    fn pathloss_nondecreasing(d in 1.0f64..2000.0, step in 0.0f64..500.0) {
        let model = PathlossModel::default();
        for link in [LinkType::EnbToUe, LinkType::EnbToEnb, LinkType::UeToUe] {
            prop_assert!(pathloss_db(&model, link, d).unwrap() <= pathloss_db(&model, link, d + step).unwrap());
        }
    }

    #[test]
    fn percentile_within_range(mut v in prop::collection::vec(0.0f64..1e9, 1..200), p in 0.0f64..=1.0) {
        v.sort_by(f64::total_cmp);
        let q = percentile(&v, p).unwrap();
        prop_assert!(v[0] <= q && q <= v[v.len() - 1]);
        let s = collect_metrics(&v);
        prop_assert!(s.p5_bps.unwrap() <= s.mean_bps.unwrap() + 1e-6);
    }

    #[test]
    fn arrivals_sorted_and_in_range(seed in any::<u64>(), lambda in 0.0f64..4.0) {
        let params = TrafficParams::new(lambda);
        let ues = [3, 7, 11];
        let arrivals = generate_arrivals(&params, 2, &ues, 5_000, seed);
        for w in arrivals.windows(2) {
            prop_assert!(w[0].arrival_ms <= w[1].arrival_ms);
        }
        for p in &arrivals {
            prop_assert!(p.arrival_ms < 5_000);
            prop_assert!(ues.contains(&p.ue));
            prop_assert_eq!(p.cell, 2);
            prop_assert_eq!(p.remaining_bits, p.size_bits);
        }
    }
}
