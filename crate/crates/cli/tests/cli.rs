use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use awgnbc_core::symmetric::blocklength_point;

fn awgnbc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_awgnbc")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Rows of a schema-tagged CSV, header included.
fn rows(text: &str) -> (String, Vec<csv::StringRecord>) {
    let (first, body) = text.split_once('\n').unwrap();
    let schema = first.strip_prefix("# schema: ").expect("schema line").to_string();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let mut out = vec![r.headers().unwrap().clone()];
    out.extend(r.records().map(|x| x.unwrap()));
    (schema, out)
}

fn num(rec: &csv::StringRecord, i: usize) -> f64 {
    rec[i].parse().unwrap()
}

/// serde_json's default float parser can be one ulp off.
fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-15 * b.abs()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn fig_blocklength_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    stdout(&awgnbc(&["fig-blocklength", "--out", out.to_str().unwrap()]));
    let got = std::fs::read_to_string(&out).unwrap();
    assert_eq!(got, std::fs::read_to_string(fixture("blocklength_curve.csv")).unwrap());
    let gp = std::fs::read_to_string(dir.path().join("curve.gp")).unwrap();
    assert!(gp.contains("'curve.csv'"));

    let (schema, recs) = rows(&got);
    assert_eq!(schema, "fig_blocklength/1");
    assert_eq!(&recs[0], vec!["R", "gamma", "beta", "L_ub"]);
    let data = &recs[1..];
    assert_eq!(data.len(), 25);
    assert!(data.windows(2).all(|w| num(&w[1], 0) > num(&w[0], 0)));
    assert!(data.windows(2).all(|w| num(&w[1], 3) >= num(&w[0], 3)));
}

#[test]
fn fig_blocklength_single_fraction_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[fig_blocklength]\nfraction = 0.5\n");
    let text = stdout(&awgnbc(&["fig-blocklength", "--config", cfg.to_str().unwrap()]));
    let (_, recs) = rows(&text);
    assert_eq!(recs.len(), 2);
    let want = blocklength_point(10.0, 2, 0.5, 0.2).unwrap();
    assert_eq!(num(&recs[1], 0), want.rate);
    assert_eq!(num(&recs[1], 1), want.gamma);
    assert_eq!(num(&recs[1], 2), want.beta);
    assert_eq!(recs[1][3].parse::<u64>().unwrap(), want.ltilde_ub);
}

#[test]
fn fig_sumrate_crossover() {
    let text = stdout(&awgnbc(&["fig-sumrate"]));
    let (schema, recs) = rows(&text);
    assert_eq!(schema, "fig_sumrate/1");
    let data = &recs[1..];
    assert_eq!(data.len(), 4);
    assert!(data.windows(2).all(|w| num(&w[1], 0) < num(&w[0], 0)));
    let by_noise = |s2: f64| data.iter().find(|r| num(r, 0) == s2).unwrap();
    let hi = by_noise(1e-3);
    assert_eq!(&hi[2], "1");
    assert!((num(hi, 1) - 1.729716).abs() < 1e-6);
    let mid: usize = by_noise(1e-5)[2].parse().unwrap();
    assert!((6..=10).contains(&mid), "Ltilde {mid}");
    assert!(num(by_noise(1e-6), 1) > num(by_noise(1e-6), 5));
}

#[test]
fn rate_region_is_fast_and_well_formed() {
    let t = Instant::now();
    let text = stdout(&awgnbc(&["rate-region"]));
    assert!(t.elapsed().as_secs_f64() < 10.0);
    let (schema, recs) = rows(&text);
    assert_eq!(schema, "rate_region/1");
    let data = &recs[1..];
    assert_eq!(data.len(), 101);
    let flips = data.windows(2).filter(|w| w[0][3] != w[1][3]).count();
    assert!(flips <= 1);
    assert_eq!(&data[0][3], "full");

    let json = stdout(&awgnbc(&["rate-region", "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let pts = v.as_array().unwrap();
    assert_eq!(pts.len(), 101);
    for (p, r) in pts.iter().zip(data) {
        assert!(close(p["r2"].as_f64().unwrap(), num(r, 2)));
        assert_eq!(p["branch"].as_str().unwrap(), &r[3]);
    }
}

#[test]
fn simulate_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        stdout(&awgnbc(&["simulate", "--trials", "20000", "--seed", "5", "--format", "json", "--out", p.to_str().unwrap()]));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(v["trials"], 20000);
    assert_eq!(v["empirical_snr"].as_array().unwrap().len(), 2);
}

#[test]
fn simulate_sk_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "seed = 3\n[simulate]\nscheme = \"sk\"\ntrials = 20000\n[simulate.sk]\nblocklength = 12\nfeedback_noise = 1e-3\n",
    );
    let text = stdout(&awgnbc(&["simulate", "--config", cfg.to_str().unwrap()]));
    let (schema, recs) = rows(&text);
    assert_eq!(schema, "simulate/1");
    assert_eq!(recs.len(), 2);
}

#[test]
fn bad_config_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[simulate]\ntrails = 10\n");
    let out = dir.path().join("never.csv");
    let o = awgnbc(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("trails"), "{err}");
    assert!(!out.exists());

    let o = awgnbc(&["simulate", "--trials", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let cfg = write_config(dir.path(), "[fig_blocklength]\nmargin = 1.5\n");
    assert_eq!(awgnbc(&["fig-blocklength", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn failed_check_exits_two_but_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    // Total power 2·LP: the power check must fail.
    let cfg = write_config(
        dir.path(),
        "[simulate]\nscheme = \"general\"\ntrials = 5000\n[simulate.general]\npower = 1.0\n\
         forward_noise = [1.0]\nfeedback_noise = [-1.0]\ngains = [[1.0]]\nfilters = [[[0.0]]]\n\
         combiners = [[1.0]]\nmsg_power = [2.0]\n",
    );
    let out = dir.path().join("report.csv");
    let o = awgnbc(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.exists());
}

#[test]
fn optimize_trace_cap_and_determinism() {
    let o = awgnbc(&["optimize", "--lmax", "6", "--verbose", "--format", "json"]);
    let text = stdout(&o);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["ltilde"].as_u64().unwrap() <= 6);
    assert_eq!(v["trace"].as_array().unwrap().len(), 6);
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().filter(|l| l.starts_with("trace ")).count(), 6);

    let quiet = stdout(&awgnbc(&["optimize", "--lmax", "6"]));
    assert_eq!(quiet, stdout(&awgnbc(&["optimize", "--lmax", "6"])));
    let (schema, recs) = rows(&quiet);
    assert_eq!(schema, "optimize/1");
    assert!(close(v["achieved_sum_rate"].as_f64().unwrap(), num(&recs[1], 1)));
}
