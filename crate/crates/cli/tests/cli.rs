use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn covshift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covshift"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/heart")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn curves_file_has_a_row_per_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let out = covshift(&["curves", "--out-dir", path_str(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("curves.tsv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    // header, 601 grid rows, argmin row; λ plus five variances
    assert_eq!(lines.len(), 603);
    assert!(lines.iter().all(|l| l.split('\t').count() == 6));
    let argmins: Vec<f64> = lines[602].split('\t').skip(1).map(|v| v.parse().unwrap()).collect();
    assert_eq!(argmins[1], 0.0);
    assert!(argmins[1..].windows(2).all(|w| w[1] >= w[0]), "{argmins:?}");
}

#[test]
fn artificial_outputs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = covshift(&[
            "artificial",
            "--repeats",
            "2",
            "--estimators",
            "nn,rg",
            "--seed",
            "17",
            "--out-dir",
            path_str(dir.path()),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["artificial.csv", "artificial.md", "artificial.manifest.json"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
    let md = fs::read_to_string(a.path().join("artificial.md")).unwrap();
    assert!(md.contains("| rG |") && md.contains("| NN |") && !md.contains("KLIEP"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# small run\nseed = 5\nrepeats = 1\nestimators = nn\nformats = csv\n").unwrap();
    let out = covshift(&[
        "artificial",
        "--config",
        path_str(&cfg),
        "--seed",
        "7",
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: String = fs::read_to_string(dir.path().join("artificial.manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 7"), "{manifest}");
    assert!(dir.path().join("artificial.csv").exists());
    assert!(!dir.path().join("artificial.md").exists());
}

#[test]
fn configuration_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = covshift(&["artificial", "--estimators", "bogus", "--out-dir", path_str(dir.path())]);
    assert_eq!(code(&out), 1);

    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "no_such_key = 3\n").unwrap();
    let out = covshift(&["curves", "--config", path_str(&cfg), "--out-dir", path_str(dir.path())]);
    assert_eq!(code(&out), 1);

    let out = covshift(&["artificial", "--no-such-flag"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn missing_heart_data_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = covshift(&["heart", "--data-dir", path_str(dir.path()), "--out-dir", path_str(dir.path())]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Cleveland"));
}

#[test]
fn heart_failure_budget_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixtures();
    let base = [
        "heart",
        "--data-dir",
        path_str(&data),
        "--repeats",
        "1",
        "--out-dir",
        path_str(dir.path()),
    ];
    let out = covshift(&base);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("heart.md").exists());

    // the fixtures make the Gaussian ratio fit singular, so a zero budget fails
    let cfg = dir.path().join("strict.cfg");
    fs::write(&cfg, "failure_budget = 0\n").unwrap();
    let mut args = base.to_vec();
    args.extend(["--config", path_str(&cfg)]);
    let out = covshift(&args);
    assert_eq!(code(&out), 3);
}
