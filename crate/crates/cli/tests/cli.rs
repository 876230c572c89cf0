use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_priorbench")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn close(v: &Value, expect: f64) {
    assert!((v.as_f64().unwrap() - expect).abs() < 1e-12, "{v} vs {expect}");
}

#[test]
fn prior_eval_gumbel() {
    let v = json(&["prior", "eval", "gumbel", "mm", "--theta", "0"]);
    close(&v["log_grad"][0], 0.5);
    let v = json(&["prior", "eval", "gumbel", "bm", "--theta", "-1.5"]);
    close(&v["log_grad"][0], -0.5);
}

#[test]
fn prior_eval_normal_br() {
    let v = json(&["prior", "eval", "normal", "br", "--theta", "0.5,4"]);
    close(&v["log_grad"][0], 0.0);
    close(&v["log_grad"][1], -0.5);
}

#[test]
fn cox_snell_exponential() {
    let v = json(&["bias", "coxsnell", "exponential", "--theta", "2", "--n", "20"]);
    close(&v["values"][0], 0.1);
}

#[test]
fn posterior_bias_with_uniform_prior() {
    let v = json(&["bias", "posterior", "exponential", "--theta", "2", "--prior", "uniform", "--n", "20"]);
    close(&v["values"][0], 0.2);
    let v = json(&["bias", "posterior", "exponential", "--theta", "2", "--prior", "br", "--n", "20"]);
    close(&v["values"][0], 0.0);
}

#[test]
fn analytic_and_monte_carlo_cumulants() {
    let a = json(&["cumulants", "poisson", "--theta", "3"]);
    close(&a["fisher"][0][0], 1.0 / 3.0);
    let b = json(&["--seed", "4", "cumulants", "poisson", "--theta", "3", "--mc", "2000"]);
    let c = json(&["--seed", "4", "cumulants", "poisson", "--theta", "3", "--mc", "2000"]);
    assert_eq!(b, c);
}

#[test]
fn laplace_reads_inline_and_file_data() {
    let inline = json(&["laplace", "normal", "--prior", "br", "--data", "1,2,4,-1,0.5"]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("y.txt");
    std::fs::write(&path, "1 2\n4\n-1, 0.5\n").unwrap();
    let from_file = json(&["laplace", "normal", "--prior", "br", "--data", &format!("@{}", path.display())]);
    assert_eq!(inline, from_file);
}

#[test]
fn simulate_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.json");
    std::fs::write(
        &cfg,
        r#"{"schema_version": 1, "model": {"name": "exponential"}, "true_theta": [2.0],
            "priors": ["br", "uniform"], "n": 20, "replicates": 50, "mcmc": "exact", "master_seed": 3}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let v = json(&["simulate", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(v["included"], 50);
    let csv = std::fs::read_to_string(out.join("biases.csv")).unwrap();
    assert_eq!(csv.lines().count(), 101);
    assert!(out.join("summary.json").exists() && out.join("boxplot.json").exists());
}

#[test]
fn probe_order_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&[
        "probe-order", "exponential", "uniform", "--theta", "2", "--n-grid", "10,20", "--replicates", "200", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(v["levels"].as_array().unwrap().len(), 2);
    let csv = std::fs::read_to_string(dir.path().join("probe.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("n,replicate,component,bias"));
    assert_eq!(csv.lines().count(), 1 + 2 * 200);
}

#[test]
fn usage_errors_exit_one() {
    let out = run(&["prior", "eval", "weibull", "br"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exponential"));
    let out = run(&["prior", "eval", "gumbel", "nonsense"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["simulate", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["bias", "coxsnell", "exponential", "--theta", "-2", "--n", "5"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numeric_failures_exit_two() {
    // All-zero exponential data push the MLE of the rate to infinity.
    let out = run(&["laplace", "exponential", "--data", "0,0,0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn too_few_monte_carlo_draws_is_a_usage_error() {
    let out = run(&["cumulants", "gumbel", "--theta", "0", "--mc", "10"]);
    assert_eq!(out.status.code(), Some(1));
}
