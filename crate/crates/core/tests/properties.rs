use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use anonelect::advice::Advice;
use anonelect::gen::{canonical_form, canonical_graph, random_connected};
use anonelect::view::{build_view, canonical_encoding, decode_encoding, refine_classes, views_equal};
use anonelect::{parse_plg, serialize_plg};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plg_roundtrip(seed in any::<u64>(), n in 1usize..30, extra in 0.0f64..0.3) {
        let g = random_connected(&mut ChaCha8Rng::seed_from_u64(seed), n, extra);
        prop_assert_eq!(parse_plg(&serialize_plg(&g)).unwrap(), g);
    }

    #[test]
    fn encoding_roundtrip(seed in any::<u64>(), n in 1usize..15, h in 0usize..4) {
        let g = random_connected(&mut ChaCha8Rng::seed_from_u64(seed), n, 0.2);
        let v = build_view(&g, seed as usize % n, h).unwrap();
        let enc = canonical_encoding(&v);
        let back = decode_encoding(&enc).unwrap();
        prop_assert_eq!(canonical_encoding(&back), enc);
        prop_assert!(back == v);
    }

    #[test]
    fn canonical_graph_keeps_classes(seed in any::<u64>(), n in 2usize..20, h in 0usize..4) {
        let g = random_connected(&mut ChaCha8Rng::seed_from_u64(seed), n, 0.2);
        let c = canonical_graph(&g);
        prop_assert_eq!(canonical_form(&c), canonical_form(&g));
        let (pg, pc) = (refine_classes(&g, h), refine_classes(&c, h));
        prop_assert_eq!(pg.class_sizes(h).len(), pc.class_sizes(h).len());
    }

    #[test]
    fn cross_graph_equality_matches_encodings(s1 in any::<u64>(), s2 in any::<u64>(), h in 0usize..4) {
        let a = random_connected(&mut ChaCha8Rng::seed_from_u64(s1), 8, 0.1);
        let b = random_connected(&mut ChaCha8Rng::seed_from_u64(s2), 8, 0.1);
        for v in 0..8 {
            let ea = canonical_encoding(&build_view(&a, v, h).unwrap());
            let eb = canonical_encoding(&build_view(&b, v, h).unwrap());
            prop_assert_eq!(views_equal(&a, v, &b, v, h), ea == eb);
        }
    }

    #[test]
    fn advice_file_roundtrip(bits in proptest::collection::vec(any::<bool>(), 0..200)) {
        let a = Advice::from_bits(&bits);
        prop_assert_eq!(Advice::from_file_bytes(&a.to_file_bytes()).unwrap(), a);
    }
}
