use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = "\
suite.d = 6
suite.n = 3
suite.mu = 0.5
suite.L = 4
suite.zeta_star_sq = 1
suite.sigma = 0.2
suite.seed = 5
algo.name = defsgd
algo.compressor = topk:2
algo.gamma = tuned
algo.rounds = 200
run.seeds = 0..3
";

fn hetsgd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetsgd")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("exp.cfg");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_writes_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("out");
    let o = hetsgd(&["run", &cfg, "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let merged = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(merged.starts_with("seed,t,"));
    assert_eq!(merged.lines().count(), 1 + 3 * 201);
    let single = std::fs::read_to_string(out.join("seed-1.csv")).unwrap();
    assert_eq!(single.lines().count(), 202);
    let outputs = std::fs::read_to_string(out.join("outputs.csv")).unwrap();
    assert_eq!(outputs.lines().next(), Some("seed,index,sampled_gap,average_gap"));
    assert_eq!(outputs.lines().count(), 4);
    assert!(stdout(&o).contains("F_out="));

    let again = dir.path().join("again");
    assert!(hetsgd(&["run", &cfg, "--output", again.to_str().unwrap()])
        .status
        .success());
    assert_eq!(
        std::fs::read(out.join("trace.csv")).unwrap(),
        std::fs::read(again.join("trace.csv")).unwrap()
    );
}

#[test]
fn sweep_reports_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let o = hetsgd(&["sweep", &cfg, "--axis", "algo.gamma", "--values", "0.001,0.002"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "algo.gamma,plateau,plateau_stderr,rho,ratio");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.001,"));
}

#[test]
fn tune_prints_stepsize_and_cap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let o = hetsgd(&["tune", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    let value = |key: &str| -> f64 {
        let line = s.lines().find(|l| l.starts_with(key)).unwrap();
        line[key.len()..].trim().parse().unwrap()
    };
    let gamma = value("gamma ");
    let cap = value("theorem cap ");
    assert!(gamma > 0.0 && gamma <= cap, "{s}");
    assert!(s.contains("branch "));
}

#[test]
fn verify_compressor_passes_for_valid_operators() {
    for spec in ["topk:2", "randk-unbiased:2", "randk:3", "sketch:coord:4"] {
        let o = hetsgd(&[
            "verify-compressor",
            spec,
            "--dim",
            "8",
            "--samples",
            "20000",
            "--vectors",
            "3",
        ]);
        assert!(o.status.success(), "{spec}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("all 3 vectors within bounds"));
    }
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), &CONFIG.replace("algo.rounds = 200", "algo.rounds = lots"));
    let o = hetsgd(&["run", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exp.cfg:11"));

    assert_eq!(
        hetsgd(&["verify-compressor", "topk:9", "--dim", "4"]).status.code(),
        Some(2)
    );
    assert_eq!(
        hetsgd(&["verify-compressor", "nonsense", "--dim", "4"]).status.code(),
        Some(2)
    );
    assert_eq!(hetsgd(&["frobnicate"]).status.code(), Some(2));

    let ec = CONFIG.replace("defsgd", "ecsgd-diana");
    assert_eq!(hetsgd(&["tune", &write_config(dir.path(), &ec)]).status.code(), Some(2));
    let ec = write_config(
        dir.path(),
        &format!("{ec}algo.alpha = auto\nalgo.quantizer = randk-unbiased:2\n"),
    );
    let o = hetsgd(&["tune", &ec]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("theorem cap n/a"));
}

#[test]
fn divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &CONFIG
            .replace("algo.gamma = tuned", "algo.gamma = 10")
            .replace("algo.rounds = 200", "algo.rounds = 2000"),
    );
    let o = hetsgd(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
