use num_traits::Zero;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shiftlab::cubeshift::{dbox_diameter, dbox_splice, dyadic_family};
use shiftlab::graphshift::{base_point, build_z_i, product_metric, validate_walk};
use shiftlab::hyperspace::{hausdorff, induced_map};
use shiftlab::rational::{self, pow2_inv, ratio, Rational};
use shiftlab::shadowlab::gamma_membership;
use shiftlab::{
    seq_metric, BiSeq, BoxSide, DBox, FiniteCompact, FullShift, HilbertCube, LoopGraph, LoopShift, RateDeadline,
    SampleBudget, ShiftSystem,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn budget() -> SampleBudget {
    SampleBudget::default()
}

fn points<S: ShiftSystem>(sys: &S, seed: u64, n: usize) -> Vec<S::Point> {
    let mut r = rng(seed);
    (0..n).map(|_| sys.sample_point(&mut r, &budget())).collect()
}

fn d(x: &BiSeq, y: &BiSeq) -> Rational {
    seq_metric(x, y).unwrap().value
}

fn check_axioms(p: &[BiSeq]) {
    let (x, y, z) = (&p[0], &p[1], &p[2]);
    assert!(d(x, x).is_zero());
    assert_eq!(d(x, y), d(y, x));
    assert!(d(x, z) <= d(x, y) + d(y, z));
    assert_eq!(d(x, y).is_zero(), x.same_function(y));
    // Shifting moves every weight by at most a factor of 2.
    let two = rational::int(2);
    assert!(d(&x.shift(1), &y.shift(1)) <= &two * d(x, y));
    assert!(d(&x.shift(-1), &y.shift(-1)) <= &two * d(x, y));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn metric_axioms_full_shift(seed in any::<u64>(), alphabet in 2u32..5) {
        check_axioms(&points(&FullShift { alphabet }, seed, 3));
    }

    #[test]
    fn metric_axioms_cube(seed in any::<u64>()) {
        check_axioms(&points(&HilbertCube, seed, 3));
    }

    #[test]
    fn canonical_and_shift_invariants(seed in any::<u64>(), k in -40i64..40) {
        for x in points(&HilbertCube, seed, 2).into_iter().chain(points(&FullShift { alphabet: 3 }, seed, 2)) {
            let c = x.canonical();
            prop_assert_eq!(c.canonical(), c.clone());
            prop_assert!(c.same_function(&x));
            prop_assert_eq!(x.shift(k).shift(-k).canonical(), c.clone());
            prop_assert_eq!(x.shift(k).value_at(0).clone(), x.value_at(k).clone());
            let text = serde_json::to_string(&x).unwrap();
            prop_assert_eq!(serde_json::from_str::<BiSeq>(&text).unwrap(), x);
        }
    }

    #[test]
    fn hausdorff_matches_brute_force(seed in any::<u64>(), na in 1usize..5, nb in 1usize..5, k in -6i64..6) {
        let ps = points(&HilbertCube, seed, na + nb);
        let a = FiniteCompact::new(&HilbertCube, ps[..na].to_vec()).unwrap();
        let b = FiniteCompact::new(&HilbertCube, ps[na..].to_vec()).unwrap();
        let (a, b) = (induced_map(&HilbertCube, &a, k), induced_map(&HilbertCube, &b, k));
        let directed = |u: &[BiSeq], v: &[BiSeq]| {
            u.iter().map(|p| v.iter().map(|q| d(p, q)).min().unwrap()).max().unwrap()
        };
        let brute = directed(a.points(), b.points()).max(directed(b.points(), a.points()));
        prop_assert_eq!(hausdorff(&HilbertCube, &a, &b).unwrap().value, brute);
        prop_assert!(hausdorff(&HilbertCube, &a, &a).unwrap().value.is_zero());
    }

    #[test]
    fn dbox_diameter_halves(seed in any::<u64>(), num in 1i64..16, stable in any::<bool>()) {
        let center = points(&HilbertCube, seed, 1).remove(0);
        let eps = ratio(num, 64);
        let (side, sign) = if stable { (BoxSide::Stable, 1) } else { (BoxSide::Unstable, -1) };
        let b = DBox::new(center, eps.clone(), side).unwrap();
        let d0 = dbox_diameter(&b, 0).unwrap();
        prop_assert!(eps <= d0 && d0 <= &eps * rational::int(4));
        for n in 1..=20i64 {
            prop_assert_eq!(dbox_diameter(&b, sign * n).unwrap(), &d0 * pow2_inv(n as u64));
        }
    }

    #[test]
    fn splice_is_in_gamma_and_later_deadlines_stay(seed in any::<u64>(), extra in 0u32..5) {
        let mut r = rng(seed);
        let eps = ratio(1, 4);
        let x = HilbertCube.sample_point(&mut r, &budget());
        let y = HilbertCube.sample_near(&mut r, &x, &ratio(1, 16), &budget());
        let z = dbox_splice(&x, &y, &eps).unwrap().point;
        let family = dyadic_family(&eps, 40);
        prop_assert!(gamma_membership(&HilbertCube, &z, &x, &y, &eps, &family, 48).unwrap().member);
        let later: Vec<RateDeadline> =
            family.iter().map(|d| RateDeadline { r: d.r.clone(), k_r: d.k_r + extra }).collect();
        prop_assert!(gamma_membership(&HilbertCube, &z, &x, &y, &eps, &later, 48).unwrap().member);
    }

    #[test]
    fn loop_shift_samples_are_walks(seed in any::<u64>(), k in -20i64..20) {
        let sys = LoopShift { graph: LoopGraph::new(2, 3).unwrap(), window: 12 };
        let mut r = rng(seed);
        let x = sys.sample_point(&mut r, &budget());
        let y = sys.sample_near(&mut r, &x, &ratio(1, 8), &budget());
        for p in [&x, &y, &sys.shift(&x, k)] {
            prop_assert!(validate_walk(p, &sys.graph).unwrap());
        }
        prop_assert!(sys.distance(&x, &y).unwrap() < ratio(1, 8));
        if let Ok(z) = sys.local_splice(&x, &y) {
            prop_assert!(validate_walk(&z, &sys.graph).unwrap());
        }
    }
}

#[test]
fn z_i_distance_drops_by_a_factor_2_pow_p_per_step() {
    let x = base_point(&[2, 3, 5], 2).unwrap();
    let mut prev = product_metric(&x, &build_z_i(&x, 1, 1).unwrap()).unwrap().value;
    for i in 2..=21 {
        let z = build_z_i(&x, 1, i).unwrap();
        assert!(validate_walk(z.factor(1), &z.graph(1)).unwrap());
        let next = product_metric(&x, &z).unwrap().value;
        assert_eq!(next, &prev * pow2_inv(2), "i = {i}");
        prev = next;
    }
}

#[test]
fn far_differences_resurface_under_the_shift() {
    // A difference at coordinate m shrinks d(x, y) but reaches weight 1 at time m.
    let x = BiSeq::constant(shiftlab::ValueSpace::UnitInterval, ratio(1, 2)).unwrap();
    let mut last = Rational::zero();
    for m in 1..30 {
        let y = x.with_values(m, &[ratio(3, 4)]).unwrap();
        let at_zero = d(&x, &y);
        assert!(at_zero < last || m == 1);
        let peak = (0..=m).map(|k| d(&x.shift(k), &y.shift(k))).max().unwrap();
        assert_eq!(peak, ratio(1, 4));
        last = at_zero;
    }
}
