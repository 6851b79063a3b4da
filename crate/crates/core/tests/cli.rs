use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use far_outage::sweep::{MU_MAP_HEADER, OP_CURVE_HEADER};

const LIGHT: &str = "\
mvn.sample_budget = 512
mvn.randomizations = 4
mc.trials = 20_000
sweep.snr_db = [0.0, 10.0, 20.0]
sweep.betas = [0.1, 0.45]
sweep.nx = 3
sweep.ny = 2
validate.snr_db = [0.0, 10.0, 20.0]
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_far-outage"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_config_is_a_usage_error() {
    let o = run(&["op-curve", "--config", "/nonexistent/far.toml"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = run(&["op-curve"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_configs_exit_2_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown.toml", "scenario.betaB = 0.2\n", "scenario.beta_b"),
        ("range.toml", "scenario.beta_b = 0.6\n", "scenario.beta_b"),
        ("syntax.toml", "fas.n1 = 4\nfas.n2 = \n", "line 2"),
        ("mode.toml", "sweep.mode = \"mu_map\"\n", "mu_map"),
    ];
    for (name, body, needle) in cases {
        let p = write_config(dir.path(), name, body);
        let o = run(&["op-curve", "--config", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{name}: {}", stderr(&o));
    }
}

#[test]
fn op_curve_output_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "light.toml", LIGHT);
    let cfg = cfg.to_str().unwrap();
    let out1 = dir.path().join("a.csv");
    let o = run(&["op-curve", "--config", cfg, "--threads", "1", "--out", out1.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o2 = run(&["op-curve", "--config", cfg, "--threads", "2"]);
    assert!(o2.status.success());

    let csv = std::fs::read_to_string(&out1).unwrap();
    assert_eq!(csv.as_bytes(), &o2.stdout[..], "thread count changed the output");
    let mut lines = csv.lines();
    // the relay can never decode x2 at beta_b = 0.45, so conditional DF
    // Monte Carlo has nothing to count and says so in the errors column
    assert_eq!(lines.next(), Some(format!("{OP_CURVE_HEADER},errors").as_str()));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(r[14].contains("no accepted trials"), r[1] == "0.45", "{r:?}");
    }
    for r in &rows {
        let (q_af, q_df): (f64, f64) = (r[5].parse().unwrap(), r[7].parse().unwrap());
        assert!((0.0..=1.0).contains(&q_af) && (0.0..=1.0).contains(&q_df));
        assert_eq!(r[13], if q_af - q_df >= 0.0 { "1" } else { "0" });
    }
    // beta_b = 0.45 is past both feasibility bounds
    for r in rows.iter().filter(|r| r[1] == "0.45") {
        assert_eq!((r[5], r[7]), ("1", "1"));
    }

    let echo = std::fs::read_to_string(dir.path().join("a.csv.resolved.toml")).unwrap();
    assert!(echo.contains("sample_budget = 512"));

    let o3 = run(&["op-curve", "--config", cfg, "--seed", "5"]);
    assert_ne!(o3.stdout, o2.stdout, "seed override had no effect");
}

#[test]
fn op_curve_without_mc_drops_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "nomc.toml", &format!("{LIGHT}mc.trials = 0\n").replace("mc.trials = 20_000\n", ""));
    let o = run(&["op-curve", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "snr_db,beta_b,beta_f,gamma_u1,gamma_u2,q_af,q_af_err,q_df,q_df_err,mu"
    );
}

#[test]
fn mu_map_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "map.toml", &format!("{LIGHT}scenario.beta_f = 0.26\n"));
    let o = run(&["mu-map", "--config", cfg.to_str().unwrap(), "--set", "sweep.heights=[0.5, 1.0]"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(MU_MAP_HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3 * 2 * 2);
    assert!(rows[0].starts_with("-0.4,-1.4,0.5,"));
    for r in rows {
        let f: Vec<&str> = r.split(',').collect();
        let (q_af, q_df): (f64, f64) = (f[3].parse().unwrap(), f[5].parse().unwrap());
        assert_eq!(f[7], if q_af >= q_df { "1" } else { "0" });
    }
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // 1000 draws widen every Monte Carlo interval past the copula bias
    let small = format!("{LIGHT}mc.trials = 1000\n").replace("mc.trials = 20_000\n", "");
    let cfg = write_config(dir.path(), "v.toml", &small);
    let o = run(&["validate", "--config", cfg.to_str().unwrap()]);
    let report = String::from_utf8_lossy(&o.stdout).into_owned();
    assert_eq!(o.status.code(), Some(0), "{report}");
    assert!(report.contains("PASS copula_vs_empirical"), "{report}");

    let o = run(&["validate", "--config", cfg.to_str().unwrap(), "--set", "validate.corrupt_correlation=true"]);
    let report = String::from_utf8_lossy(&o.stdout).into_owned();
    assert_eq!(o.status.code(), Some(1), "{report}");
    assert!(report.contains("FAIL copula_vs_empirical"), "{report}");
}
