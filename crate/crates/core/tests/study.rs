use lumped_maxwell::harness::{
    emit_results, parse_results, run_convergence_study, CaseTag, ConvergenceRow, RunConfig,
};
use lumped_maxwell::refelem::Family;

fn csv_without_runtime(rows: &[ConvergenceRow]) -> String {
    let mut buf = Vec::new();
    emit_results(rows, &mut buf).unwrap();
    String::from_utf8(buf)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_owned())
        .collect::<Vec<_>>()
        .join("\n")
}

fn short(family: Family, case: CaseTag, levels: Vec<usize>) -> RunConfig {
    RunConfig { family, case, levels, t_end: 0.5, sample_every: 1, ..RunConfig::default() }
}

#[test]
fn identical_configs_give_identical_csv() {
    let config = short(Family::Mej1, CaseTag::NonDivFree, vec![1, 2]);
    let a = run_convergence_study(&config).unwrap();
    let b = run_convergence_study(&config).unwrap();
    assert_eq!(csv_without_runtime(&a), csv_without_runtime(&b));
}

#[test]
fn mej1_errors_decrease() {
    for case in [CaseTag::DivFree, CaseTag::NonDivFree] {
        let rows = run_convergence_study(&short(Family::Mej1, case, vec![1, 2, 3])).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].err_l2 < w[0].err_l2, "{case}: {rows:?}");
            assert!(w[1].err_curl < w[0].err_curl, "{case}: {rows:?}");
        }
    }
}

#[test]
fn n1_study_runs_with_iterative_mass() {
    let rows = run_convergence_study(&short(Family::N1, CaseTag::DivFree, vec![1, 2])).unwrap();
    assert!(rows.iter().all(|r| r.err_l2.is_finite() && r.err_l2 > 0.0));
}

#[test]
fn results_roundtrip_at_six_digits() {
    let rows = run_convergence_study(&short(Family::Ej1, CaseTag::DivFree, vec![1, 2])).unwrap();
    let mut buf = Vec::new();
    emit_results(&rows, &mut buf).unwrap();
    let back = parse_results(std::str::from_utf8(&buf).unwrap()).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() <= 5e-6 * a.abs();
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!((a.level, a.ndof), (b.level, b.ndof));
        assert!(close(a.h, b.h) && close(a.err_l2, b.err_l2) && close(a.err_curl, b.err_curl));
        match (a.eoc_l2, b.eoc_l2) {
            (None, None) => {}
            (Some(x), Some(y)) => assert!(close(x, y)),
            other => panic!("{other:?}"),
        }
    }
}
