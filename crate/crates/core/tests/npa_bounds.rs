use ccg_core::game::{build_cglmp_tensor, cglmp_value};
use ccg_core::npa::*;
use ccg_core::seesaw::{behavior_of, bell_operator, canonical_bases, update_state, EntangledStrategy};
use ccg_numeric::SolverOptions;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn canonical_strategy(d: usize) -> EntangledStrategy {
    let t = build_cglmp_tensor(d).unwrap();
    let (alice, bob) = canonical_bases(d);
    let (_, state) = update_state(&bell_operator(&t, &alice, &bob).unwrap());
    EntangledStrategy { d, state, alice, bob }
}

#[test]
fn quantum_moments_are_feasible() {
    for (d, level) in [(2, Level::One), (3, Level::One), (3, Level::OneAB), (4, Level::One)] {
        let (mp, _) = build_moment_problem(d, level).unwrap();
        let s = canonical_strategy(d);
        let v = mp.moment_vector(&s).unwrap();
        let gamma = mp.moment_matrix(&v);
        let min = gamma.symmetric_eigenvalues().min();
        assert!(min > -1e-9, "d = {d}, level {level}: {min}");

        let t = build_cglmp_tensor(d).unwrap();
        let beh = behavior_of(&s).unwrap();
        let direct = cglmp_value(&t, &beh).unwrap();
        assert!((mp.objective.eval(&v) - direct).abs() < 1e-9);
        for (i, p) in mp.probabilities.iter().enumerate() {
            assert!((p.eval(&v) - beh.probabilities()[i]).abs() < 1e-9, "event {i}");
        }
    }
}

#[test]
fn level_one_d2_is_tsirelson() {
    let r = upper_bound(2, Level::One, &opts()).unwrap();
    assert!((r.value - 0.5f64.sqrt()).abs() < 1e-6, "{}", r.value);
    assert!(r.rigorous >= r.value);
    assert!(r.rigorous - r.value < 1e-6);
}

#[test]
fn level_one_matches_table() {
    for (d, want) in [(3, 0.7887), (4, 0.8032), (5, 0.8249)] {
        let r = upper_bound(d, Level::One, &opts()).unwrap();
        assert!((r.value - want).abs() <= 1e-3, "d = {d}: {}", r.value);
    }
}

#[test]
fn sandwich_d3() {
    let s = canonical_strategy(3);
    let t = build_cglmp_tensor(3).unwrap();
    let lower = cglmp_value(&t, &behavior_of(&s).unwrap()).unwrap();
    let ab = upper_bound(3, Level::OneAB, &opts()).unwrap();
    let one = upper_bound(3, Level::One, &opts()).unwrap();
    assert!(lower <= ab.value + 1e-6, "{lower} > {}", ab.value);
    assert!(ab.value <= one.value + 1e-6);
    // The canonical bases are optimal for d = 3, so the hierarchy is tight.
    assert!(ab.value - lower < 1e-3, "{} vs {lower}", ab.value);
}

#[test]
fn certificate_residuals_small() {
    for level in [Level::One, Level::OneAB] {
        let r = upper_bound(3, level, &opts()).unwrap();
        assert!(r.status.is_optimal(), "{:?}", r.status);
        assert!(r.primal_residual < 1e-8 && r.dual_residual < 1e-8);
        assert!(r.min_eig_certificate > -1e-8);
        assert!((r.value - r.lower_value).abs() < 1e-6);
    }
}

#[test]
fn level_parsing() {
    assert_eq!("1".parse::<Level>().unwrap(), Level::One);
    assert_eq!("1+AB".parse::<Level>().unwrap(), Level::OneAB);
    assert!("2".parse::<Level>().is_err());
    assert_eq!(Level::OneAB.to_string(), "1+AB");
}

#[test]
fn rejects_bad_dimension() {
    assert!(upper_bound(1, Level::One, &opts()).is_err());
}
