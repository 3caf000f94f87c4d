use ccg_core::game::*;
use ccg_core::verify::random_behavior;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn target_value_examples() {
    let s3 = GameSpec::new(3).unwrap();
    assert_eq!(s3.target_values(&GameInput::new(0, 0, 0, 0), 0).unwrap(), (0, 1));
    let s7 = GameSpec::new(7).unwrap();
    assert_eq!(s7.target_values(&GameInput::new(3, 1, 5, 1), 2).unwrap(), (5, 3));
    let s2 = GameSpec::new(2).unwrap();
    assert_eq!(s2.target_values(&GameInput::new(1, 1, 0, 1), 0).unwrap(), (0, 1));
    assert!(s3.target_values(&GameInput::new(0, 0, 0, 0), 1).is_err());
    assert!(s3.target_values(&GameInput::new(3, 0, 0, 0), 0).is_err());
}

#[test]
fn kernel_row_examples() {
    let k2 = build_payoff_kernel(&GameSpec::new(2).unwrap());
    assert_eq!(k2.row(&GameInput::new(0, 0, 0, 0)), &[1, -1]);
    let k3 = build_payoff_kernel(&GameSpec::new(3).unwrap());
    assert_eq!(k3.row(&GameInput::new(1, 1, 2, 1)), &[-2, 0, 2]);
    let s4 = GameSpec::new(4).unwrap();
    let k4 = build_payoff_kernel(&s4);
    for i in s4.inputs() {
        let row = k4.row(&i);
        assert_eq!(row.iter().filter(|w| **w > 0).count(), 2);
        assert_eq!(row.iter().filter(|w| **w < 0).count(), 2);
    }
}

#[test]
fn kernel_rows_balanced_for_all_d() {
    for d in 2..=11 {
        let spec = GameSpec::new(d).unwrap();
        let k = build_payoff_kernel(&spec);
        for i in spec.inputs() {
            k.check_row(&spec, &i).unwrap();
            assert_eq!(k.row(&i).iter().sum::<i64>(), 0);
            assert_eq!(k.row(&i).iter().filter(|w| **w == 0).count(), d - 2 * spec.kmax());
        }
    }
}

#[test]
fn x0_collapse() {
    // Payoff of G = a + x0 does not depend on x0.
    for d in [3, 6] {
        let spec = GameSpec::new(d).unwrap();
        let k = build_payoff_kernel(&spec);
        for x1 in 0..2 {
            for y0 in 0..d {
                for y1 in 0..2 {
                    for a in 0..d {
                        let first = k.payoff(&GameInput::new(0, x1, y0, y1), a);
                        for x0 in 1..d {
                            assert_eq!(k.payoff(&GameInput::new(x0, x1, y0, y1), (a + x0) % d), first);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn uniform_policy_scores_zero() {
    for d in 2..=6 {
        let spec = GameSpec::new(d).unwrap();
        let v = delta_of_output_policy(&spec, |_| vec![1.0 / d as f64; d]).unwrap();
        assert!(v.abs() < 1e-14);
        assert!(cglmp_value(&build_cglmp_tensor(d).unwrap(), &Behavior::uniform(d)).unwrap().abs() < 1e-14);
    }
}

#[test]
fn unnormalized_policy_rejected() {
    let spec = GameSpec::new(3).unwrap();
    assert!(matches!(
        delta_of_output_policy(&spec, |_| vec![0.5, 0.0, 0.0]),
        Err(ccg_core::CoreError::UnnormalizedPolicy { .. })
    ));
}

#[test]
fn linear_zero_policy_d3_is_half() {
    let spec = GameSpec::new(3).unwrap();
    let strat = LinearStrategy { a_map: [0, 0], b_map: [0, 0] };
    let v = delta_of_deterministic_policy(&spec, |i| strat.output(3, i)).unwrap();
    assert_eq!(v, num_rational::BigRational::new(1.into(), 2.into()));
}

#[test]
fn deterministic_local_behaviors_bounded() {
    for d in 2..=4 {
        let t = build_cglmp_tensor(d).unwrap();
        let half = t.classical_bound();
        for code in 0..d.pow(4) {
            let alice = [code % d, code / d % d];
            let bob = [code / (d * d) % d, code / (d * d * d)];
            assert!(t.deterministic_value(alice, bob) <= half);
            let beh = Behavior::deterministic(d, alice, bob);
            let spec = GameSpec::new(d).unwrap();
            let g = game_value_of_behavior(&spec, &beh).unwrap();
            assert!((g - rational_to_f64(&t.deterministic_value(alice, bob))).abs() < 1e-12);
        }
    }
}

#[test]
fn equivalence_on_random_behaviors() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for d in [2, 3, 5, 7] {
        let spec = GameSpec::new(d).unwrap();
        let t = build_cglmp_tensor(d).unwrap();
        for _ in 0..100 {
            let beh = random_behavior(d, &mut rng);
            let g = game_value_of_behavior(&spec, &beh).unwrap();
            let c = cglmp_value(&t, &beh).unwrap();
            assert!((g - c).abs() <= 1e-10, "d = {d}: {g} vs {c}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn equivalence_property(d in prop::sample::select(vec![2usize, 3, 5, 7]), raw in prop::collection::vec(0.0f64..1.0, 4 * 49)) {
        let mut p: Vec<f64> = raw[..4 * d * d].iter().map(|v| v + 1e-3).collect();
        for block in p.chunks_mut(d * d) {
            let s: f64 = block.iter().sum();
            block.iter_mut().for_each(|v| *v /= s);
        }
        let beh = Behavior::new(d, p).unwrap();
        let g = game_value_of_behavior(&GameSpec::new(d).unwrap(), &beh).unwrap();
        let c = cglmp_value(&build_cglmp_tensor(d).unwrap(), &beh).unwrap();
        prop_assert!((g - c).abs() <= 1e-10);
    }
}

#[test]
fn behavior_validation() {
    assert!(Behavior::new(2, vec![0.25; 15]).is_err());
    let mut p = vec![0.25; 16];
    p[0] = -0.1;
    assert!(Behavior::new(2, p).is_err());
    assert!(Behavior::new(2, vec![0.3; 16]).is_err());
}
