use gft_core::dist::{check_fsd, fsd_report, product_support, Distribution, Piece};
use gft_core::scalar::{int, ratio, Rational};
use proptest::prelude::*;

/// Discrete distribution on a subset of {0, .., 5} with weights summing to 1.
fn discrete() -> impl Strategy<Value = Distribution> {
    prop::collection::btree_map(0i64..6, 1i64..5, 1..5).prop_map(|atoms| {
        let total: i64 = atoms.values().sum();
        Distribution::discrete(atoms.into_iter().map(|(v, w)| (int(v), ratio(w, total))).collect()).unwrap()
    })
}

/// Piecewise-uniform distribution with up to three pieces, some of them atoms.
fn piecewise() -> impl Strategy<Value = Distribution> {
    (prop::collection::vec((1i64..4, 0i64..3, 0i64..3), 1..4)).prop_map(|raw| {
        let total: i64 = raw.iter().map(|r| r.0).sum();
        let mut q = int(0);
        let mut v = int(0);
        let mut pieces = Vec::new();
        let mut acc = 0;
        for (w, gap, width) in raw {
            acc += w;
            let q_hi = ratio(acc, total);
            let v_lo = &v + int(gap);
            let v_hi = &v_lo + int(width);
            pieces.push(Piece { q_lo: q.clone(), q_hi: q_hi.clone(), v_lo, v_hi: v_hi.clone() });
            q = q_hi;
            v = v_hi;
        }
        Distribution::piecewise(pieces).unwrap()
    })
}

fn any_dist() -> impl Strategy<Value = Distribution> {
    prop_oneof![discrete(), piecewise()]
}

fn grid(n: i64) -> impl Iterator<Item = Rational> {
    (1..n).map(move |i| ratio(i, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn quantile_is_monotone(d in any_dist()) {
        let vals: Vec<Rational> = grid(200).map(|q| d.quantile_value(&q).unwrap()).collect();
        prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn float_quantile_tracks_exact(d in any_dist()) {
        for q in grid(97) {
            let exact = gft_core::scalar::rational_to_f64(&d.quantile_value(&q).unwrap());
            let float = d.quantile_value_f64(gft_core::scalar::rational_to_f64(&q));
            prop_assert!((exact - float).abs() < 1e-9, "{} vs {}", exact, float);
        }
    }

    #[test]
    fn fsd_is_sound_with_witness(b in any_dist(), s in any_dist()) {
        let report = fsd_report(&b, &s);
        if report.dominates {
            for q in grid(10_000) {
                prop_assert!(b.quantile_value(&q).unwrap() >= s.quantile_value(&q).unwrap());
            }
        } else {
            let w = report.witness.unwrap();
            prop_assert!(w > int(0) && w < int(1));
            prop_assert!(b.quantile_value(&w).unwrap() < s.quantile_value(&w).unwrap());
        }
    }

    #[test]
    fn fsd_is_reflexive(d in any_dist()) {
        prop_assert!(check_fsd(&d, &d));
    }

    #[test]
    fn literal_round_trips(d in any_dist()) {
        let text = serde_json::to_string(&d).unwrap();
        let back: Distribution = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
        prop_assert_eq!(back, d);
    }

    #[test]
    fn product_probabilities_sum_to_one(a in discrete(), b in discrete(), c in discrete()) {
        let total: Rational = product_support(&[&a, &b, &c], 1_000_000).unwrap().map(|(_, p)| p).sum();
        prop_assert_eq!(total, int(1));
    }
}
