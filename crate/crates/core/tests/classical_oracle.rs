use ccg_core::classical::*;
use ccg_core::game::*;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

#[test]
fn exhaustive_values() {
    // d = 2..4 agree with a plain enumeration written directly from the
    // target functions; d = 5 is certified by the replay below.
    let want = [(2, q(1, 2)), (3, q(2, 3)), (4, q(2, 3)), (5, q(29, 40))];
    for (d, v) in want {
        let spec = GameSpec::new(d).unwrap();
        let sol = classical_optimum(&spec, ClassicalOptions { prune_symmetry: d >= 4, ..Default::default() }).unwrap();
        assert_eq!(sol.value, v, "d = {d}");
        let replay = delta_of_deterministic_policy(&spec, |i| {
            sol.response.answer(i.x0, i.x1, sol.message.message(i.y0, i.y1))
        })
        .unwrap();
        assert_eq!(replay, sol.value);
        assert_eq!(best_response(&spec, &sol.message).unwrap().0, sol.scaled_score);
    }
}

#[test]
fn d3_witness_table() {
    let spec = GameSpec::new(3).unwrap();
    let msg = MessageFunction::new(3, vec![0, 0, 0, 1, 2, 0]).unwrap();
    let (score, _) = best_response(&spec, &msg).unwrap();
    assert_eq!(spec.delta_from_scaled(score), q(2, 3));
}

#[test]
fn paired_message_for_even_d() {
    // m = 2 floor(y0 / 2) + y1 scores (d - 2) / (d - 1).
    for d in [4usize, 6, 8, 10] {
        let spec = GameSpec::new(d).unwrap();
        let msg = MessageFunction::from_fn(d, |y0, y1| 2 * (y0 / 2) + y1);
        let (score, _) = best_response(&spec, &msg).unwrap();
        assert_eq!(spec.delta_from_scaled(score), q(d as i64 - 2, d as i64 - 1), "d = {d}");
    }
}

#[test]
fn linear_strategies_never_beat_optimum() {
    for d in 2..=4 {
        let spec = GameSpec::new(d).unwrap();
        let opt = classical_optimum(&spec, ClassicalOptions::default()).unwrap().value;
        for code in 0..d.pow(4) {
            let s = LinearStrategy {
                a_map: [code % d, code / d % d],
                b_map: [code / (d * d) % d, code / (d * d * d)],
            };
            assert!(linear_strategy_value(&spec, &s) <= opt);
        }
    }
}

#[test]
fn mixed_strategies_never_beat_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for d in 2..=3 {
        let spec = GameSpec::new(d).unwrap();
        let opt = rational_to_f64(&classical_optimum(&spec, ClassicalOptions::default()).unwrap().value);
        for _ in 0..50 {
            // A random mixture of five deterministic strategies.
            let parts: Vec<(f64, MessageFunction, Vec<usize>)> = (0..5)
                .map(|_| {
                    let msg = MessageFunction::new(d, (0..2 * d).map(|_| rng.random_range(0..d)).collect()).unwrap();
                    let resp = (0..2 * d * d).map(|_| rng.random_range(0..d)).collect();
                    (rng.random::<f64>(), msg, resp)
                })
                .collect();
            let total: f64 = parts.iter().map(|p| p.0).sum();
            let v = delta_of_output_policy(&spec, |i| {
                let mut dist = vec![0.0; d];
                for (w, msg, resp) in &parts {
                    let m = msg.message(i.y0, i.y1);
                    dist[resp[(i.x0 * 2 + i.x1) * d + m]] += w / total;
                }
                dist
            })
            .unwrap();
            assert!(v <= opt + 1e-12);
        }
    }
}

#[test]
fn ties_are_counted() {
    let spec = GameSpec::new(2).unwrap();
    let sol = classical_optimum(&spec, ClassicalOptions::default()).unwrap();
    assert!(sol.ties >= 1);
    assert_eq!(sol.searched, 16);
}

#[test]
fn heavy_guard() {
    let spec = GameSpec::new(6).unwrap();
    assert!(matches!(
        classical_optimum(&spec, ClassicalOptions::default()),
        Err(ccg_core::CoreError::SearchSpaceTooLarge { d: 6, .. })
    ));
}
