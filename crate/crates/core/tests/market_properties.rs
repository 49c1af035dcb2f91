use gft_core::market::audit::fuzz_profiles;
use gft_core::market::{btr, fixed_price, mcafee92, str, Mechanism, MechanismKind, Role, ValueProfile};
use gft_core::scalar::{int, ratio, Rational};
use proptest::prelude::*;

fn profile_strategy(max_s: usize, max_b: usize) -> impl Strategy<Value = ValueProfile<Rational>> {
    (
        prop::collection::vec(0i64..4, 0..=max_s),
        prop::collection::vec(0i64..4, 0..=max_b),
    )
        .prop_map(|(s, b)| ValueProfile::new(s.into_iter().map(int).collect(), b.into_iter().map(int).collect()))
}

/// Welfare-maximizing gains by trying every equal-size pair of seller and
/// buyer subsets.
fn brute_force_opt(p: &ValueProfile<Rational>) -> Rational {
    let mut best = int(0);
    for sm in 0u32..(1 << p.m_s()) {
        for bm in 0u32..(1 << p.m_b()) {
            if sm.count_ones() != bm.count_ones() {
                continue;
            }
            let gain: Rational = (0..p.m_b()).filter(|j| bm >> j & 1 == 1).map(|j| p.buyers[j].clone()).sum::<Rational>()
                - (0..p.m_s()).filter(|i| sm >> i & 1 == 1).map(|i| p.sellers[i].clone()).sum::<Rational>();
            best = best.max(gain);
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn opt_matches_brute_force(p in profile_strategy(4, 4)) {
        prop_assert_eq!(p.opt_gft(), brute_force_opt(&p));
        prop_assert!(p.trade_size() <= p.m_s().min(p.m_b()));
    }

    #[test]
    fn dual_is_involutive_and_preserves_opt(p in profile_strategy(4, 4)) {
        prop_assert_eq!(p.dual().dual(), p.clone());
        prop_assert_eq!(p.dual().opt_gft(), p.opt_gft());
    }

    #[test]
    fn str_is_dual_of_btr(p in profile_strategy(4, 4)) {
        prop_assert_eq!(str(&p).gft, btr(&p.dual()).gft);
    }

    #[test]
    fn btr_surplus_and_pairs(p in profile_strategy(4, 4)) {
        let o = btr(&p);
        prop_assert!(o.budget_surplus >= int(0));
        if o.trade_count() == p.trade_size() {
            prop_assert_eq!(o.budget_surplus.clone(), int(0));
        }
        for out in [o, str(&p), mcafee92(&p)] {
            for &(s, b) in &out.pairs {
                prop_assert!(p.buyers[b] >= p.sellers[s]);
            }
            let mut sellers: Vec<usize> = out.pairs.iter().map(|x| x.0).collect();
            let mut buyers: Vec<usize> = out.pairs.iter().map(|x| x.1).collect();
            sellers.sort();
            sellers.dedup();
            buyers.sort();
            buyers.dedup();
            prop_assert_eq!(sellers.len(), out.trade_count());
            prop_assert_eq!(buyers.len(), out.trade_count());
        }
    }

    #[test]
    fn btr_loss_characterization(p in profile_strategy(4, 4)) {
        let opt = p.opt_gft();
        let got = btr(&p).gft;
        match p.first_excluded_value() {
            None => prop_assert_eq!(got, opt),
            Some(x) => {
                let some_buyer_at_x = p.buyers.contains(&x);
                prop_assert_eq!(got == opt, some_buyer_at_x);
                if got != opt {
                    let q = p.trade_size();
                    prop_assert!(q >= 1);
                    let bq = p.buyers[p.ranked_buyers()[q - 1]].clone();
                    prop_assert_eq!(opt - got, bq - x);
                }
            }
        }
    }

    #[test]
    fn trading_is_monotone_in_own_report(p in profile_strategy(3, 3), shift in 1i64..4) {
        for kind in [MechanismKind::Btr, MechanismKind::McAfee92, MechanismKind::Str] {
            let o = kind.run(&p).unwrap();
            for a in p.agents().filter(|a| o.trades(*a)) {
                let mut q = p.clone();
                let v = q.value_mut(a);
                *v = match a.role {
                    Role::Buyer => v.clone() + int(shift),
                    Role::Seller => v.clone() - int(shift),
                };
                prop_assert!(kind.run(&q).unwrap().trades(a), "{} {} {}", kind, p, a);
            }
        }
    }

    #[test]
    fn fixed_price_never_beats_opt(p in profile_strategy(4, 4), num in 0i64..13) {
        let price = ratio(num, 4);
        prop_assert!(fixed_price(&p, &price).gft <= p.opt_gft());
    }

    #[test]
    fn mechanisms_are_deterministic(p in profile_strategy(3, 3)) {
        for kind in ["btr", "str", "vcg", "mcafee92", "fixed-price:3/2"] {
            let m: MechanismKind = kind.parse().unwrap();
            prop_assert_eq!(m.run(&p).unwrap(), m.run(&p.clone()).unwrap());
        }
    }
}

#[test]
fn vcg_gains_equal_opt_on_fuzz() {
    let grid: Vec<Rational> = (0..4).map(int).collect();
    for p in fuzz_profiles(&grid, 3, 3, 3000, 4) {
        let o = MechanismKind::Vcg.run(&p).unwrap();
        assert_eq!(o.gft, p.opt_gft());
        for a in p.agents() {
            if !o.trades(a) {
                assert_eq!(o.payment(a), &int(0));
            }
        }
    }
}

#[test]
fn float_and_rational_paths_agree() {
    let grid: Vec<Rational> = [0, 1, 2, 3].iter().map(|&v| ratio(v, 2)).collect();
    for p in fuzz_profiles(&grid, 4, 4, 3000, 9) {
        let f = p.map(gft_core::scalar::rational_to_f64);
        for kind in ["btr", "str", "mcafee92", "vcg"] {
            let m: MechanismKind = kind.parse().unwrap();
            let exact = m.run(&p).unwrap();
            let float = m.run(&f).unwrap();
            assert_eq!(exact.pairs, float.pairs, "{kind} {p}");
            assert_eq!(gft_core::scalar::rational_to_f64(&exact.gft), float.gft);
        }
    }
}
