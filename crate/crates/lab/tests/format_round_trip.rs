use proptest::prelude::*;

use saclab::format::{
    checkpoints_json, parse_checkpoints, read_trace_csv, trace_csv_bytes, FeatureDocument, MdpDocument,
};
use saclab_core::mdp::{generate_garnet, two_state};
use saclab_core::rng::SeededStreams;
use saclab_core::simulate::{run_markovian, stepsizes, LearnerInit, RunConfig};
use saclab_core::{FeatureMap, GarnetSpec};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trace_rows_survive_csv_bit_for_bit(seed in any::<u64>(), t in 1u64..400, c in 0.01f64..5.0, every in 1u64..50) {
        let mdp = two_state();
        let map = FeatureMap::two_state_scalar();
        let mut config = RunConfig::new(stepsizes(t, c).unwrap(), 2.0);
        config.checkpoint_every = every;
        let trace = run_markovian(&mdp, &map, &LearnerInit::zeros(&mdp, &map), &config, &mut SeededStreams::new(seed, &[t])).unwrap();

        let rows = read_trace_csv(trace_csv_bytes(&trace).unwrap().as_slice()).unwrap();
        prop_assert_eq!(rows.len(), trace.records.len());
        for (row, rec) in rows.iter().zip(&trace.records) {
            prop_assert_eq!((row.t, row.s, row.a), (rec.t, rec.s, rec.a));
            prop_assert_eq!(row.r.to_bits(), rec.r.to_bits());
            prop_assert_eq!(row.delta.to_bits(), rec.delta.to_bits());
            prop_assert_eq!(row.eta.to_bits(), rec.eta.to_bits());
            prop_assert_eq!(row.omega_norm.to_bits(), rec.omega_norm.to_bits());
        }

        let text = serde_json::to_string(&checkpoints_json(&trace.checkpoints)).unwrap();
        let back = parse_checkpoints(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(back, trace.checkpoints);
    }

    #[test]
    fn mdp_and_feature_documents_round_trip(n in 2usize..8, na in 1usize..4, seed in any::<u64>(), dim in 1usize..5) {
        let mdp = generate_garnet(&GarnetSpec::new(n, na, n.min(3)), seed).unwrap();
        let text = serde_json::to_string(&MdpDocument::from_mdp(&mdp)).unwrap();
        let back = serde_json::from_str::<MdpDocument>(&text).unwrap().to_mdp().unwrap();
        prop_assert_eq!(back, mdp);

        let map = FeatureMap::random_bounded(n, dim, seed).unwrap();
        let text = serde_json::to_string(&FeatureDocument::from_map(&map)).unwrap();
        let back = serde_json::from_str::<FeatureDocument>(&text).unwrap().to_map().unwrap();
        prop_assert_eq!(back.table(), map.table());
    }
}
