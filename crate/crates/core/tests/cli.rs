use std::path::Path;
use std::process::{Command, Output};

fn spatfun(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spatfun"))
        .args(args)
        .current_dir(dir)
        .env_remove("SPATFUN_THREADS")
        .output()
        .expect("spawn spatfun")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

const MEAN_CONFIG: &str = r#"{
    "experiment": "mc-mean",
    "model": {"kind": "gaussian", "order": 1, "grid": 8,
              "scores": [{"index": 1, "family": {"kind": "powered-exponential", "variance": 1.0, "range": 1.0, "power": 1.0}}]},
    "design": {"kind": "family", "family": {"design": {"kind": "regular-grid"}, "region": "cube", "dim": 1,
               "alpha": {"growth": "power", "beta": 0.5}}},
    "ladder": [50, 100, 200],
    "replicates": 20,
    "seed": 5
}"#;

#[test]
fn help_and_version_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let out = spatfun(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["classify", "mc-mean", "mc-cov", "mc-xstar", "figure2", "bounds", "rates", "kriging"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
    assert_eq!(spatfun(&["--version"], dir.path()).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(spatfun(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(spatfun(&["mc-mean"], dir.path()).status.code(), Some(2));
    assert_eq!(spatfun(&["mc-mean", "--config", "missing.json"], dir.path()).status.code(), Some(2));
    assert_eq!(spatfun(&["mc-mean", "--threads", "many"], dir.path()).status.code(), Some(2));

    let bad_json = write(dir.path(), "bad.json", "{ not json");
    assert_eq!(spatfun(&["mc-mean", "--config", &bad_json], dir.path()).status.code(), Some(2));

    let unknown = write(dir.path(), "unknown.json", &MEAN_CONFIG.replace("\"seed\": 5", "\"seed\": 5, \"extra\": 1"));
    let out = spatfun(&["mc-mean", "--config", &unknown], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("extra"));

    let figure2_order1 = write(dir.path(), "order1.json", MEAN_CONFIG);
    assert_eq!(spatfun(&["figure2", "--config", &figure2_order1], dir.path()).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    // The tent function is not a valid covariance in two dimensions.
    let cfg = write(
        dir.path(),
        "tent2d.json",
        r#"{"experiment": "mc-mean",
            "model": {"kind": "gaussian", "order": 1, "grid": 8, "scores": [{"index": 1, "family": {"kind": "tent"}}]},
            "design": {"kind": "family", "family": {"design": {"kind": "regular-grid"}, "region": "cube", "dim": 2,
                       "alpha": {"growth": "bounded", "c": 2.0}}},
            "ladder": [400], "replicates": 1, "seed": 1}"#,
    );
    let out = spatfun(&["mc-mean", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not positive definite"));
}

#[test]
fn figure2_without_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = spatfun(&["figure2", "--seed", "7", "--out", "fig2", "--svg"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let fig = dir.path().join("fig2");
    let curves = std::fs::read_to_string(fig.join("efpc_curves.csv")).unwrap();
    let header: Vec<&str> = curves.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 11);
    assert_eq!(header[0], "t");
    assert_eq!(header[10], "v1_rep10");
    assert_eq!(curves.lines().count(), 1 + 256);
    let svg = std::fs::read_to_string(fig.join("efpc_curves.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 10);
    assert!(fig.join("efpc_summary.csv").exists());
}

#[test]
fn mc_mean_writes_report_and_honours_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "mean.json", MEAN_CONFIG);
    let run = |seed: &str, out: &str| {
        let o = spatfun(&["mc-mean", "--config", &cfg, "--seed", seed, "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read_to_string(dir.path().join(out).join("mc_mean.csv")).unwrap()
    };
    let a = run("1", "a");
    let b = run("1", "b");
    let c = run("2", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
    let mut lines = a.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,param,loss_mean,loss_se,bound_5_1,bound_5_2,bound_5_3,replicates"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row[0], k.to_string());
        assert!(!row[4].is_empty() && !row[5].is_empty());
        assert!(row[6].is_empty(), "regular design has no random-design bound");
        assert_eq!(row[7], "20");
    }
}

#[test]
fn threads_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "mean.json", MEAN_CONFIG);
    let run = |threads: &str, out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_spatfun"))
            .args(["mc-mean", "--config", &cfg, "--out", out])
            .current_dir(dir.path())
            .env("SPATFUN_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(dir.path().join(out).join("mc_mean.csv")).unwrap()
    };
    assert_eq!(run("1", "one"), run("3", "three"));
    let o = Command::new(env!("CARGO_BIN_EXE_spatfun"))
        .args(["mc-mean", "--config", &cfg])
        .current_dir(dir.path())
        .env("SPATFUN_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn classify_reports_type() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "classify.json",
        &MEAN_CONFIG.replace("\"mc-mean\"", "\"classify\"").replace("\"beta\": 0.5", "\"beta\": 1.0"),
    );
    let out = spatfun(&["classify", "--config", &cfg, "--out", "cls", "--svg"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("type C"));
    let profile = std::fs::read_to_string(dir.path().join("cls/intensity_profile.csv")).unwrap();
    assert_eq!(profile.lines().next().unwrap(), "rho,intensity");
    assert_eq!(
        std::fs::read_to_string(dir.path().join("cls/classification.txt")).unwrap(),
        "type C\n"
    );
}

#[test]
fn bounds_and_rates_and_kriging() {
    let dir = tempfile::tempdir().unwrap();
    let bounds = write(dir.path(), "bounds.json", &MEAN_CONFIG.replace("\"mc-mean\"", "\"bounds\""));
    let out = spatfun(&["bounds", "--config", &bounds, "--out", "b"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("b/bounds.csv")).unwrap();
    assert!(csv.starts_with("step,param,which,value"));
    for tag in ["prop5.1", "prop5.2", "prop6.1", "prop6.2", "example2.1", "prop7.2-lower"] {
        assert!(csv.contains(tag), "{tag} missing");
    }

    let rates = write(dir.path(), "rates.json", &MEAN_CONFIG.replace("\"mc-mean\"", "\"rates\""));
    let out = spatfun(&["rates", "--config", &rates, "--out", "r", "--svg"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("r/rates.csv")).unwrap();
    assert!(csv.starts_with("metric,axis,slope,intercept,r_squared\nmean,n,"));
    assert!(dir.path().join("r/mc_mean.svg").exists());

    let kriging = write(
        dir.path(),
        "kriging.json",
        &MEAN_CONFIG
            .replace("\"mc-mean\"", "\"kriging\"")
            .replace("\"seed\": 5", "\"seed\": 5, \"target\": [0.01]"),
    );
    let out = spatfun(&["kriging", "--config", &kriging, "--out", "k"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("k/kriging.csv")).unwrap();
    let mses: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(mses.len(), 3);
    assert!(mses.iter().all(|m| *m >= 0.0 && *m < 1.0));
}
