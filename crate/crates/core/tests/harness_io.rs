use naum::harness::io::{coordinate_string, dense_binary_bytes, dense_csv_string, parse_coordinate, parse_dense_binary, parse_dense_csv};
use naum::harness::rng::StreamRng;
use naum::harness::{load_matrix, run_trials_with, write_matrix, LoadedMatrix, MatrixFormat, TrialConfig};
use naum::linalg::CsrMatrix;
use naum::par::Execution;
use naum::NaumError;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dense_formats_round_trip_bitwise(seed in any::<u64>(), m in 1usize..10, n in 1usize..10) {
        let x = StreamRng::new(seed, 30).normal_matrix(m, n).map(|v| v * 1e3);
        prop_assert_eq!(parse_dense_csv(&dense_csv_string(&x)).unwrap(), x.clone());
        prop_assert_eq!(parse_dense_binary(&dense_binary_bytes(&x)).unwrap(), x);
    }

    #[test]
    fn coordinate_round_trip(seed in any::<u64>()) {
        let mut rng = StreamRng::new(seed, 31);
        let mut triples = Vec::new();
        for i in 0..6 {
            for j in 0..5 {
                if rng.uniform() < 0.4 {
                    triples.push((i, j, rng.normal()));
                }
            }
        }
        let c = CsrMatrix::from_triples(6, 5, triples).unwrap();
        prop_assert_eq!(parse_coordinate(&coordinate_string(&c)).unwrap(), c);
    }
}

#[test]
fn files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let x = StreamRng::new(1, 32).uniform_matrix(7, 4);
    for (name, format) in [("a.csv", MatrixFormat::DenseCsv), ("a.bin", MatrixFormat::DenseBinary)] {
        let path = dir.path().join(name);
        write_matrix(&path, &LoadedMatrix::Dense(x.clone()), format).unwrap();
        assert_eq!(MatrixFormat::from_extension(&path), Some(format));
        assert_eq!(load_matrix(&path, format).unwrap().into_dense(), x);
    }
}

#[test]
fn malformed_inputs_are_rejected() {
    assert!(matches!(parse_dense_csv("1,2\n3\n"), Err(NaumError::ParseError { line: 2, .. })));
    assert!(parse_dense_csv("1,nan\n").is_err());
    assert!(parse_dense_binary(b"short").is_err());
    assert!(matches!(
        parse_coordinate("2 2 2\n1 1 1.0\n1 1 2.0\n"),
        Err(NaumError::ParseError { .. })
    ));
    let err = load_matrix(std::path::Path::new("/nonexistent/m.csv"), MatrixFormat::DenseCsv).unwrap_err();
    assert!(matches!(err, NaumError::Io { .. }));
}

#[test]
fn file_backed_trials_share_one_instance() {
    let dir = tempfile::tempdir().unwrap();
    let data = StreamRng::new(2, 33).uniform_matrix(15, 12);
    let path = dir.path().join("m.csv");
    write_matrix(&path, &LoadedMatrix::Dense(data), MatrixFormat::DenseCsv).unwrap();
    let config = TrialConfig::from_json(&format!(
        r#"{{"problem": {{"kind": "nmf", "rank": 3, "source": {{"type": "file", "path": {:?}}}}},
            "algorithms": [{{"name": "naum", "alpha": 0.6}}, {{"name": "hals"}}],
            "seeds": [1, 2, 3], "max_iters": 40, "mode": "budget"}}"#,
        path.to_str().unwrap()
    ))
    .unwrap();
    let report = run_trials_with(&config, Execution::Parallel(2)).unwrap();
    assert!(report.trials.iter().all(|t| t.instance == 0));
    assert_eq!(report.summaries.len(), 2);
    let out = dir.path().join("out/report.json");
    let written = report.write_files(&out).unwrap();
    assert_eq!(written.len(), 7);
    let back: naum::harness::Report = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(back.trials.len(), 6);
}
