use proptest::prelude::*;
use tamarkin_core::grid::{brute_force_interleaved, GridModule};
use tamarkin_core::interleave::{is_interleaved, translation_distance, Decision, SearchConfig};
use tamarkin_core::rat::rat;
use tamarkin_core::{Bar, ExtRat, Field, GradedBarcode};

fn endpoint(v: i64) -> ExtRat {
    match v {
        -1 => ExtRat::NegInf,
        9 => ExtRat::PosInf,
        v => ExtRat::Fin(rat(v, 2)),
    }
}

/// Up to three bars, endpoints in {−∞, 0, 1/2, …, 4, +∞}, degrees 0 and 1.
fn barcode() -> impl Strategy<Value = GradedBarcode> {
    proptest::collection::vec((-1i64..9, 1i64..6, 0i32..2), 0..4).prop_map(|v| {
        v.into_iter()
            .map(|(b, l, deg)| {
                let d = if b == -1 { l + 1 } else { (b + l).min(9) };
                Bar::new(deg, endpoint(b), endpoint(d)).unwrap()
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1500))]

    #[test]
    fn decision_matches_oracle(f in barcode(), g in barcode(), a in 0i64..6, b in 0i64..6) {
        let (a, b) = (rat(a, 2), rat(b, 2));
        let fast = is_interleaved(&f, &g, &a, &b, &SearchConfig::default()).unwrap();
        prop_assert!(!matches!(fast, Decision::Unknown(_)));
        let slow = brute_force_interleaved(&GridModule::from_barcode(&f, Field::F2), &GridModule::from_barcode(&g, Field::F2), &a, &b).unwrap();
        prop_assert_eq!(fast.is_yes(), slow, "F={} G={} a={} b={}", f, g, a, b);
    }

    #[test]
    fn distance_to_zero_is_torsion_threshold(f in barcode()) {
        let d = translation_distance(&f, &GradedBarcode::empty(), &SearchConfig::default()).unwrap();
        prop_assert_eq!(d.value, f.torsion_threshold());
    }
}
