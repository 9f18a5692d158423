use std::path::Path;
use std::process::{Command, Output};

fn sln(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sln")).args(args).output().expect("failed to launch sln")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "sln failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines().skip(1).map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect()).collect()
}

fn assert_rectangular(csv: &str, cols: usize) {
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), cols);
    for l in lines {
        assert_eq!(l.split(',').count(), cols, "ragged row: {l}");
    }
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn kernels_at_zero_frequency_is_two_over_beta() {
    let csv = stdout(&sln(&["kernels", "--beta", "1", "--t-max", "2"]));
    assert_rectangular(&csv, 4);
    let zero = rows(&csv).into_iter().find(|r| r[0] == 0.0).expect("no omega = 0 row");
    assert!((zero[1] - 2.0).abs() < 1e-12);
    assert_eq!(zero[2], 0.0);

    let filt = stdout(&sln(&["kernels", "--beta", "1", "--t-max", "2", "--filters", "--scheme", "like"]));
    assert_rectangular(&filt, 5);
    assert!(rows(&filt).iter().all(|r| r[1..].iter().all(|v| v.is_finite() && *v >= 0.0)));
}

#[test]
fn gen_noise_writes_one_block_per_realization() {
    let csv = stdout(&sln(&["gen-noise", "--beta", "1", "--t-max", "1", "--count", "3", "--seed", "4"]));
    assert_rectangular(&csv, 6);
    let data = rows(&csv);
    let per = data.iter().filter(|r| r[0] == 0.0).count();
    assert_eq!(data.len(), 3 * per);
    assert_eq!(data.last().unwrap()[0], 2.0);
}

#[test]
fn validate_like_scheme_recovers_eta_correlation() {
    let csv = stdout(&sln(&[
        "validate", "--scheme", "like", "--beta", "1", "--t-max", "2", "--n", "2000", "--max-lag", "0.5",
    ]));
    assert_rectangular(&csv, 13);
    for r in rows(&csv) {
        let z = (r[2] - r[1]).hypot(r[3]) / r[4];
        assert!(z < 6.0, "lag {}: z = {z}", r[0]);
    }
}

#[test]
fn simulate_from_config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.cfg",
        "# short run\nscheme = etanu-optimised\nbeta = 1\nt_max = 0.5\nn_realizations = 16\nseed = 9\nstats_window = 5\n",
    );
    let out_path = dir.path().join("trace.csv");
    let out = sln(&["simulate", "-c", &cfg, "--n", "32", "-o", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert_rectangular(&csv, 10);
    let data = rows(&csv);
    assert_eq!(data.len(), 51);
    assert_eq!(data[0][1], 1.0);
    assert!(data.iter().all(|r| r[9] == 0.0));
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["simulate", "--beta", "1", "--epsilon", "-1", "--t-max", "0.3", "--n", "40", "--seed", "123"];
    let a = stdout(&sln(&args));
    let b = stdout(&sln(&args));
    assert_eq!(a, b);
    let c = stdout(&sln(&["simulate", "--beta", "1", "--t-max", "0.3", "--n", "40", "--seed", "124"]));
    assert_ne!(a, c);
}

#[test]
fn qnd_verify_tracks_exact_coherence() {
    let csv = stdout(&sln(&["qnd-verify", "--n", "2000", "--t-max", "2", "--seed", "5"]));
    assert_rectangular(&csv, 6);
    for r in rows(&csv) {
        assert!((r[1] - r[2]).abs() < 0.1, "t = {}: exact {} vs {}", r[0], r[1], r[2]);
    }
}

#[test]
fn scan_lambda_reports_each_point() {
    let out = sln(&[
        "scan-lambda", "--beta", "1", "--t-max", "0.5", "--set", "lambda_points=3", "--set", "runs_per_point=20",
    ]);
    let csv = stdout(&out);
    assert_rectangular(&csv, 2);
    assert_eq!(rows(&csv).len(), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("argmin"));
}

#[test]
fn configuration_errors_exit_with_status_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<(Vec<String>, &str)> = vec![
        (vec!["simulate".into(), "--t-max".into(), "1".into()], "beta"),
        (
            vec!["simulate".into(), "-c".into(), write_config(dir.path(), "dup.cfg", "beta = 1\nt_max = 1\nbeta = 2\n")],
            "dup.cfg:3",
        ),
        (vec!["simulate".into(), "-c".into(), write_config(dir.path(), "unk.cfg", "beta = 1\nbetta = 2\n")], "unk.cfg:2"),
        (
            vec!["kernels".into(), "--beta".into(), "1".into(), "--scheme".into(), "constrained".into(), "--gamma".into(), "0".into(), "--filters".into()],
            "hard-cutoff",
        ),
        (vec!["kernels".into(), "--beta".into(), "-1".into()], "beta"),
        (vec!["kernels".into(), "--beta".into(), "1".into(), "--bogus".into()], "bogus"),
        (vec!["kernels".into(), "--beta".into(), "1".into(), "--set".into(), "nonsense".into()], "KEY=VALUE"),
    ];
    for (args, needle) in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = sln(&args);
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {err}");
        assert!(err.contains(needle), "{args:?}: stderr lacks '{needle}': {err}");
    }
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cfg") {
            // A tiny step count keeps this a parse-and-wire check.
            let out = sln(&["simulate", "-c", path.to_str().unwrap(), "--t-max", "0.05", "--n", "2"]);
            assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}
