use dyncover::harness::{run_trace, RunMode, RunOptions};
use dyncover::trace::{generate, GenKind, GenParams, Trace};
use proptest::prelude::*;

fn kinds() -> impl Strategy<Value = GenKind> {
    prop_oneof![
        Just(GenKind::Hvc),
        Just(GenKind::Coverage),
        Just(GenKind::Junta),
        Just(GenKind::Mixed),
        Just(GenKind::MetricMst),
        Just(GenKind::MetricSteiner),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_traces_round_trip(kind in kinds(), n in 4usize..9, ops in 1usize..25, seed in any::<u64>()) {
        let trace = generate(&GenParams::new(kind, n, ops, seed)).unwrap();
        let back = Trace::parse(&trace.to_jsonl()).unwrap();
        prop_assert_eq!(&back, &trace);
        prop_assert_eq!(generate(&GenParams::new(kind, n, ops, seed)).unwrap(), trace);
    }

    #[test]
    fn replay_is_deterministic(n in 4usize..8, seed in any::<u64>()) {
        let trace = generate(&GenParams::new(GenKind::Coverage, n, 20, seed)).unwrap();
        let opts = RunOptions::new(RunMode::Cost);
        let a = run_trace(&trace, &opts).unwrap();
        let b = run_trace(&trace, &opts).unwrap();
        prop_assert_eq!(a.summary.recourse_measured, b.summary.recourse_measured);
        prop_assert_eq!(a.rows.len(), 20);
        prop_assert!(a.summary.infeasible_steps == 0);
    }
}
