//! Round-trip property: saving a loaded scene reproduces the bytes.

use proptest::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use splatprune::ply::{load_ply, payload_of, save_ply};
use splatprune::testkit::fuzzed_scene;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn save_load_save_is_identity(seed in any::<u64>()) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let scene = fuzzed_scene(&mut rng);
        let bytes = save_ply(&scene).unwrap();
        let loaded = load_ply(&bytes).unwrap();
        prop_assert_eq!(loaded.sh_degree, scene.sh_degree);
        prop_assert_eq!(loaded.len(), scene.len());
        let again = save_ply(&loaded).unwrap();
        prop_assert_eq!(payload_of(&bytes), payload_of(&again));
        prop_assert_eq!(bytes, again);
    }
}
