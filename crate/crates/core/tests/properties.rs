use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use linkpc_core::clustering::{backoff_base, calc_priority, scaled_backoff_wait};
use linkpc_core::config::{LinkProbability, ScenarioConfig, Strategy};
use linkpc_core::net::{compute_etx, tx_energy, NetworkGraph, NodeId, Position, RadioParams};
use linkpc_core::sim::report_quality_check;
use linkpc_core::sim::run_scenario;

fn strategy() -> impl proptest::strategy::Strategy<Value = Strategy> {
    prop::sample::select(Strategy::ALL.to_vec())
}

proptest! {
    #[test]
    fn etx_never_below_one(pf in 1e-6..=1.0f64, pr in 1e-6..=1.0f64) {
        prop_assert!(compute_etx(pf, pr).unwrap() >= 1.0);
    }

    #[test]
    fn tx_energy_grows_with_distance(bits in 1u64..4096, a in 0.0..300.0f64, b in 0.0..300.0f64) {
        let rp = RadioParams::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(tx_energy(bits, lo, &rp) <= tx_energy(bits, hi, &rp));
    }

    #[test]
    fn priority_is_a_member_and_matches_the_rule(
        ptx in prop::collection::vec(0.0..100.0f64, 1..30),
        n_req in 0.5..80.0f64,
    ) {
        let pairs: Vec<_> = ptx.iter().enumerate().map(|(i, &p)| (NodeId(i as u32), p)).collect();
        let got = calc_priority(&pairs, n_req).unwrap();
        prop_assert!(ptx.contains(&got));
        let sat: Vec<f64> = ptx.iter().copied().filter(|&p| p >= n_req).collect();
        let want = if sat.is_empty() {
            ptx.iter().copied().fold(f64::MIN, f64::max)
        } else {
            sat.iter().copied().fold(f64::MAX, f64::min)
        };
        prop_assert_eq!(got, want);
    }

    #[test]
    fn backoff_stays_in_its_slot(rho in 1e-3..1e3f64, slot in 1e-4..1.0f64, seed: u64) {
        let base = backoff_base(rho, slot, 1.0).unwrap();
        prop_assert_eq!(base, slot * (1.0 / rho).floor());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = scaled_backoff_wait(rho, slot, 1.0, &mut rng).unwrap();
        prop_assert!(w >= base && w < base + slot);
    }

    #[test]
    fn graphs_are_symmetric(
        pts in prop::collection::vec((0.0..100.0f64, 0.0..100.0f64), 1..40),
        range in 1.0..50.0f64,
    ) {
        let pos: Vec<Position> = pts.iter().map(|&(x, y)| Position::new(x, y)).collect();
        let g = NetworkGraph::from_positions(&pos, range).unwrap();
        for a in g.ids() {
            for &b in g.neighbors(a) {
                prop_assert!(a != b);
                prop_assert!(g.has_edge(b, a));
                prop_assert!(g.distance(a, b).unwrap() <= range);
            }
        }
    }

    #[test]
    fn config_echo_round_trips(n in 1usize..200, seed: u64, s in strategy(), p in 0.1..=1.0f64) {
        let mut c = ScenarioConfig::new(n, seed, s);
        c.link_p_true = LinkProbability::Fixed(p);
        let back = ScenarioConfig::from_toml_str(&c.to_toml_string()).unwrap();
        prop_assert_eq!(back, c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn small_runs_keep_their_books(
        n in 2usize..25,
        seed in 0u64..1000,
        s in strategy(),
        p in 0.5..=1.0f64,
        e_ini in 0.005..0.5f64,
    ) {
        let mut c = ScenarioConfig::new(n, seed, s);
        c.field_width = 80.0;
        c.field_height = 80.0;
        c.require_connected = false;
        c.link_p_true = LinkProbability::Uniform { min: p.min(0.99), max: 1.0 };
        c.e_ini = e_ini;
        c.duration = 30.0;
        c.report_interval = 2.0;
        let a = run_scenario(&c).unwrap();
        prop_assert!(a.conservation_error() < 1e-9);
        prop_assert!(a.series.check_invariants().is_ok());
        prop_assert_eq!(a.series.len(), 31);
        prop_assert_eq!(report_quality_check(&a.series, c.n_req).len(), a.series.len() - 1);
        let b = run_scenario(&c).unwrap();
        prop_assert_eq!(a.series.to_csv_string(), b.series.to_csv_string());
    }
}
