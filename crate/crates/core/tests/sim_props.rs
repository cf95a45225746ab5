use fluidc_core::fchdl::parse_circuit;
use fluidc_core::simulator::{run, SimConfig, Simulator, Stimulus};
use proptest::prelude::*;

mod common;
use common::{gate_net, GateNet, PRIMARY};

fn settle_all(net: &GateNet, src: &str) -> Vec<([u8; 3], Vec<u8>)> {
    let n = parse_circuit(src).unwrap();
    let mut out = Vec::new();
    for code in 0..8u8 {
        let abc = [(code >> 2) & 1, (code >> 1) & 1, code & 1];
        let mut sim = Simulator::new(&n, SimConfig::default()).unwrap();
        let pairs: Vec<(&str, u8)> = PRIMARY
            .iter()
            .zip(abc)
            .filter(|(p, _)| n.primary_inputs().contains(**p))
            .map(|(p, v)| (*p, v))
            .collect();
        sim.set_inputs(&pairs).unwrap();
        let values = (0..net.gates.len())
            .map(|i| sim.value(&format!("n{i}")).unwrap())
            .collect();
        out.push((abc, values));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn combinational_networks_match_direct_evaluation(net in gate_net(10)) {
        for (abc, values) in settle_all(&net, &net.to_hdl()) {
            prop_assert_eq!(values, net.eval(abc), "inputs {:?} in {}", abc, net.to_hdl());
        }
    }

    #[test]
    fn operator_order_does_not_change_settled_values(net in gate_net(10)) {
        let forward = net.to_hdl();
        let mut parts: Vec<String> = parse_circuit(&forward)
            .unwrap()
            .operators()
            .iter()
            .map(|op| op.to_hdl())
            .collect();
        parts.reverse();
        prop_assert_eq!(settle_all(&net, &forward), settle_all(&net, &parts.join(" ")));
    }

    #[test]
    fn timer_rises_once_after_its_duration(t_ticks in 1u32..60, start_ticks in 0u32..20) {
        let t = t_ticks as f64 / 10.0;
        let start = start_ticks as f64 / 10.0;
        let n = parse_circuit(&format!("Timer(A, {t}; Q)")).unwrap();
        let trace = run(&n, &Stimulus::new().at(start, "A", 1), start + t + 2.0, SimConfig::default()).unwrap();
        let rises = trace.rising_edges("Q");
        prop_assert_eq!(rises.len(), 1);
        prop_assert!((rises[0] - (start + t)).abs() < 1e-6, "{:?}", rises);
        prop_assert!(trace.falling_edges("Q").is_empty());
    }

    #[test]
    fn edge_pulses_integrate_to_count_times_width(
        gaps in prop::collection::vec(8u32..30, 1..5),
        tau_ticks in 1u32..7,
    ) {
        let tau = tau_ticks as f64 / 10.0;
        let n = parse_circuit(&format!("EdgeDetector(A; Q, {tau})")).unwrap();
        let mut stim = Stimulus::new();
        let mut t = 0.5;
        for g in &gaps {
            stim = stim.at(t, "A", 1).at(t + 0.3, "A", 0);
            t += *g as f64 / 10.0;
        }
        let trace = run(&n, &stim, t + 1.0, SimConfig::default()).unwrap();
        let expected = gaps.len() as f64 * tau;
        prop_assert!((trace.high_duration("Q") - expected).abs() < 0.1 + 1e-9);
        prop_assert_eq!(trace.rising_edges("Q").len(), gaps.len());
    }

    #[test]
    fn time_scale_shrinks_timer_delay(t in 1u32..100, s_exp in 1u32..4) {
        let scale = 10f64.powi(-(s_exp as i32));
        let n = parse_circuit(&format!("Timer(A, {}; Q)", t as f64 * 10f64.powi(s_exp as i32 - 1))).unwrap();
        let cfg = SimConfig { time_scale: scale, ..Default::default() };
        let trace = run(&n, &Stimulus::new().at(0.0, "A", 1), t as f64 / 10.0 + 1.0, cfg).unwrap();
        prop_assert_eq!(trace.rising_edges("Q"), vec![t as f64 / 10.0]);
    }

    #[test]
    fn runs_are_deterministic(net in gate_net(6), flips in prop::collection::vec((0u32..30, 0usize..3), 0..8)) {
        let n = parse_circuit(&format!("{} Timer(n0, 0.5; T) EdgeDetector(T; Output E, 0.3)", net.to_hdl())).unwrap();
        let mut stim = Stimulus::new();
        for (tick, k) in flips {
            if n.primary_inputs().contains(PRIMARY[k]) {
                stim = stim.at(tick as f64 / 10.0, PRIMARY[k], (tick % 2) as u8);
            }
        }
        let a = run(&n, &stim, 4.0, SimConfig::default()).unwrap();
        let b = run(&n, &stim, 4.0, SimConfig::default()).unwrap();
        prop_assert_eq!(a, b);
    }
}
