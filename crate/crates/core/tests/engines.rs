use ccg_core::engine::*;
use ccg_core::report::*;
use ccg_core::simulate::{simulate, analytic_value, StrategyDocument};
use ccg_core::verify::{run_verify, VerifyOptions};
use ccg_core::{CoreError, GameSpec};

#[test]
fn registry_names() {
    let r = EngineRegistry::standard();
    let names: Vec<_> = r.names().collect();
    for n in ["classical", "tqs", "tqs-frozen", "eacc", "ml", "qbound"] {
        assert!(names.contains(&n), "{n} missing");
    }
    assert!(matches!(r.get("nope"), Err(CoreError::UnknownEngine(_))));
}

struct Constant;

impl ValueEngine for Constant {
    fn name(&self) -> &'static str {
        "constant"
    }
    fn description(&self) -> &'static str {
        "always one half"
    }
    fn compute(&self, spec: &GameSpec, _: &EngineContext) -> ccg_core::Result<Cell> {
        Ok(Cell {
            task: "constant".into(),
            d: spec.d(),
            value: 0.5,
            exact: Some("1/2".into()),
            kind: BoundKind::Exact,
            certificate: Certificate::ExplicitStrategy,
            provenance: Provenance::default(),
            strategy: None,
        })
    }
}

#[test]
fn custom_engine_registration() {
    let mut r = EngineRegistry::empty();
    r.register(Box::new(Constant));
    let cell = r.run("constant", &GameSpec::new(4).unwrap(), &EngineContext::default()).unwrap();
    assert_eq!(cell.value, 0.5);
    assert_eq!(r.names().collect::<Vec<_>>(), ["constant"]);
}

#[test]
fn classical_cell_is_exact() {
    let r = EngineRegistry::standard();
    let c = r.run("classical", &GameSpec::new(2).unwrap(), &EngineContext::default()).unwrap();
    assert_eq!(c.exact.as_deref(), Some("1/2"));
    assert_eq!(c.kind, BoundKind::Exact);
    let strat = c.strategy.unwrap();
    assert!((analytic_value(&strat).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn heavy_requests_are_refused() {
    let r = EngineRegistry::standard();
    let ctx = EngineContext::default();
    for (task, d) in [("classical", 6), ("tqs", 9), ("eacc", 9), ("qbound", 6), ("ml", 12)] {
        let e = r.run(task, &GameSpec::new(d).unwrap(), &ctx).unwrap_err();
        assert!(matches!(e, CoreError::SearchSpaceTooLarge { .. }), "{task} {d}: {e}");
    }
}

#[test]
fn csv_header_and_rows() {
    let r = EngineRegistry::standard();
    let ctx = EngineContext { restarts: Some(1), ..Default::default() };
    let rows: Vec<_> = (2..=3).map(|d| compute_row(&r, d, &TABLE_TASKS, &ctx).unwrap()).collect();
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "d,classical,tqs_lb,eacc_lb,ml,qbound_1ab,gap");
    let first: Vec<_> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 7);
    assert_eq!(first[0], "2");
    assert_eq!(first[1], "1/2");
    assert_eq!(first[4], "0.707107");
    assert!(rows.iter().all(|r| r.errors.is_empty()));
}

#[test]
fn json_schema_round_trip() {
    let r = EngineRegistry::standard();
    let ctx = EngineContext { restarts: Some(1), ..Default::default() };
    let row = compute_row(&r, 2, &TABLE_TASKS, &ctx).unwrap();
    let doc = TableDocument::new(vec![row]);
    let text = serde_json::to_string(&doc).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["schema"], TABLE_SCHEMA);
    assert!(v["rows"][0]["tqs_lb"]["provenance"]["seed"].is_u64());
    assert_eq!(v["rows"][0]["ml"]["kind"], "upper");
    let back: TableDocument = serde_json::from_str(&text).unwrap();
    assert_eq!(back, doc);
}

#[test]
fn reproducible_cells() {
    let r = EngineRegistry::standard();
    let ctx = EngineContext { restarts: Some(2), seed: 3, ..Default::default() };
    let spec = GameSpec::new(3).unwrap();
    for task in ["tqs", "eacc"] {
        let a = r.run(task, &spec, &ctx).unwrap();
        let b = r.run(task, &spec, &ctx).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.strategy, b.strategy);
        assert_eq!(a.provenance.best_restart, b.provenance.best_restart);
    }
}

#[test]
fn exported_strategy_replays() {
    let r = EngineRegistry::standard();
    let ctx = EngineContext { restarts: Some(1), ..Default::default() };
    let cell = r.run("tqs", &GameSpec::new(3).unwrap(), &ctx).unwrap();
    let doc = StrategyDocument::new(cell.strategy.clone().unwrap());
    let parsed = StrategyDocument::parse(&serde_json::to_string(&doc).unwrap()).unwrap();
    let exact = analytic_value(&parsed.strategy).unwrap();
    assert!((exact - cell.value).abs() < 1e-9);
    let est = simulate(&parsed.strategy, 200_000, 1).unwrap();
    assert!(est.sigmas_from(exact) < 4.0, "{est:?} vs {exact}");
}

#[test]
fn verify_suite_passes() {
    let report = run_verify(&VerifyOptions::default()).unwrap();
    let failed: Vec<_> = report.failures().map(|c| c.name.clone()).collect();
    assert!(report.passed(), "{failed:?}");
}

#[test]
fn verify_catches_corrupted_kernel() {
    let opts = VerifyOptions {
        kernel_mutation: Some(Box::new(|k| k.entries_mut()[0] += 1)),
        behaviors_per_d: 5,
        mc_rounds: 10_000,
        ..Default::default()
    };
    let report = run_verify(&opts).unwrap();
    assert!(!report.passed());
    assert!(report.failures().any(|c| c.name.starts_with("kernel")), "{:?}", report.failures().collect::<Vec<_>>());
}
