use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kronsketch::bench::{parse_report, save_matrix, save_sparse_vector, RecordKind, CSV_HEADER};
use kronsketch::linalg::{DenseMatrix, SparseVector};
use kronsketch::solvers::SplineSpec;

fn kronsketch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kronsketch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Two 6×2 factors, a dense label and a stream touching both factors.
fn fixture(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    save_matrix(dir.join("a1.kmat"), &random(6, 2, &mut rng)).unwrap();
    save_matrix(dir.join("a2.kmat"), &random(6, 2, &mut rng)).unwrap();
    save_matrix(dir.join("b1.kmat"), &random(6, 2, &mut rng).scale(0.1)).unwrap();
    save_matrix(dir.join("b2.kmat"), &random(6, 2, &mut rng).scale(0.1)).unwrap();
    let b: Vec<f64> = (0..36).map(|_| rng.random_range(-1.0..1.0)).collect();
    save_sparse_vector(dir.join("b.vec"), &SparseVector::from_dense(&b)).unwrap();
    save_sparse_vector(dir.join("db.vec"), &SparseVector::new(36, vec![(3, 0.5)]).unwrap()).unwrap();
    save_matrix(dir.join("L.kmat"), &SplineSpec::first_difference(4)).unwrap();
    std::fs::write(
        dir.join("stream.txt"),
        "# two updates\nQ\nU 1 b1.kmat\nQ\nU 2 b2.kmat\nB db.vec\nQ\n",
    )
    .unwrap();
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

#[test]
fn regression_replay_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let out = path(dir.path(), "out.csv");
    let res = kronsketch(&[
        "--factors",
        &path(dir.path(), "a1.kmat"),
        &path(dir.path(), "a2.kmat"),
        "--label",
        &path(dir.path(), "b.vec"),
        "--stream",
        &path(dir.path(), "stream.txt"),
        "--m",
        "30",
        "--oracle",
        "--out",
        &out,
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    let records = parse_report(&text).unwrap();
    let kinds: Vec<RecordKind> = records.iter().map(|r| r.kind).collect();
    use RecordKind::*;
    assert_eq!(kinds, [Init, Query, Update, Query, Update, Label, Query]);
    assert_eq!(records[0].nodes_recomputed, Some(3));
    assert_eq!(records[2].nodes_recomputed, Some(2));
    for r in records.iter().filter(|r| r.kind == Query) {
        let ratio = r.ratio.unwrap();
        assert!((1.0 - 1e-9..2.0).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn solvers_and_stdout() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let (a1, a2) = (path(dir.path(), "a1.kmat"), path(dir.path(), "a2.kmat"));
    let stream = path(dir.path(), "stream.txt");
    let label = path(dir.path(), "b.vec");
    let l = path(dir.path(), "L.kmat");
    let cases: [&[&str]; 4] = [
        &[
            "--solver",
            "spline",
            "--spline-L",
            &l,
            "--lambda",
            "0.5",
            "--cfactor",
            "0.05",
        ],
        &[
            "--solver",
            "lowrank",
            "--rank",
            "2",
            "--cbase",
            "osnap",
            "--tbase",
            "tensorsrht",
            "--m",
            "20",
        ],
        &["--solver", "baseline", "--delta", "0.2"],
        &["--cbase", "srht", "--tbase", "tensor-srht", "--m", "24", "--adaptive"],
    ];
    for extra in cases {
        let mut args = vec![
            "--factors",
            &a1,
            &a2,
            "--label",
            &label,
            "--stream",
            &stream,
            "--oracle",
        ];
        args.extend_from_slice(extra);
        let res = kronsketch(&args);
        assert!(
            res.status.success(),
            "{extra:?}: {}",
            String::from_utf8_lossy(&res.stderr)
        );
        let records = parse_report(&String::from_utf8(res.stdout).unwrap()).unwrap();
        assert_eq!(records.len(), 7, "{extra:?}");
        assert!(records
            .iter()
            .filter(|r| r.kind == RecordKind::Query)
            .all(|r| r.ratio.is_some()));
    }
}

#[test]
fn aggregated_seeds_report_pass_rate() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let res = kronsketch(&[
        "--factors",
        &path(dir.path(), "a1.kmat"),
        &path(dir.path(), "a2.kmat"),
        "--label",
        &path(dir.path(), "b.vec"),
        "--stream",
        &path(dir.path(), "stream.txt"),
        "--m",
        "30",
        "--oracle",
        "--seeds",
        "4",
    ]);
    assert!(res.status.success());
    let records = parse_report(&String::from_utf8(res.stdout).unwrap()).unwrap();
    assert_eq!(records.len(), 28);
    let stderr = String::from_utf8(res.stderr).unwrap();
    assert!(
        stderr.contains("pass rate") && stderr.contains("/4 evaluated seeds"),
        "{stderr}"
    );
}

#[test]
fn snapshot_resume_continues_stream() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let snap = path(dir.path(), "tree.snap");
    let res = kronsketch(&[
        "--factors",
        &path(dir.path(), "a1.kmat"),
        &path(dir.path(), "a2.kmat"),
        "--m",
        "16",
        "--snapshot-out",
        &snap,
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let res = kronsketch(&[
        "--resume",
        &snap,
        "--label",
        &path(dir.path(), "b.vec"),
        "--stream",
        &path(dir.path(), "stream.txt"),
        "--oracle",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(parse_report(&String::from_utf8(res.stdout).unwrap()).unwrap().len(), 7);
}

#[test]
fn errors_exit_nonzero_with_message() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    std::fs::write(dir.path().join("bad.kmat"), "2 2\n1 2 3").unwrap();
    let res = kronsketch(&["--factors", &path(dir.path(), "bad.kmat")]);
    assert!(!res.status.success());
    let stderr = String::from_utf8(res.stderr).unwrap();
    assert!(stderr.contains("truncated"), "{stderr}");

    let res = kronsketch(&["--factors", &path(dir.path(), "a1.kmat"), "--cbase", "gaussian"]);
    assert!(!res.status.success());

    let res = kronsketch(&[
        "--factors",
        &path(dir.path(), "a1.kmat"),
        "--cbase",
        "countsketch",
        "--tbase",
        "tensorsrht",
    ]);
    assert!(!res.status.success());
    assert!(String::from_utf8(res.stderr).unwrap().contains("countsketch"));

    let res = kronsketch(&["--factors", &path(dir.path(), "missing.kmat")]);
    assert!(!res.status.success());
}
