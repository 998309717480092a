use std::process::Command;

use gbc_feedback::classifier::{classify, sweep_onesided_rx1};
use gbc_feedback::cli::run;
use gbc_feedback::lowpower::certify;
use gbc_feedback::model::{ChannelParams, SchemeParams};
use gbc_feedback::montecarlo::simulate;
use gbc_feedback::regions::{sample_boundary, RegionKind};
use gbc_feedback::zf_scheme::{derive, scheme_rates};
use serde_json::Value;

const INF: f64 = f64::INFINITY;

fn run_args(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("gbc-feedback").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn channel_flags<'a>(s1: &'a str, s2: &'a str, f1: &'a str, f2: &'a str, p: &'a str) -> Vec<&'a str> {
    vec![
        "--sigma1-sq", s1, "--sigma2-sq", s2, "--sigma-fb1-sq", f1, "--sigma-fb2-sq", f2, "--power", p,
    ]
}

#[test]
fn classify_prints_sorted_json() {
    let mut args = vec!["classify"];
    args.extend(channel_flags("1", "4", "inf", "inf", "1"));
    let (code, out, err) = run_args(&args);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out, "{\"margin\":-3.0,\"verdict\":\"unchanged\"}\n");
}

#[test]
fn classify_matches_library_bits() {
    let mut args = vec!["classify"];
    args.extend(channel_flags("0.37", "2.9", "1.3", "INF", "1"));
    let (code, out, _) = run_args(&args);
    assert_eq!(code, 0);
    let v = json(&out);
    let lib = classify(&ChannelParams::new(0.37, 2.9, 1.3, INF, 1.0).unwrap()).unwrap();
    assert_eq!(v["margin"].as_f64().unwrap().to_bits(), lib.margin.to_bits());
    assert_eq!(v["verdict"], lib.verdict.as_str());
}

#[test]
fn boundary_csv_has_one_row_per_sample() {
    let mut args = vec!["boundary", "--kind", "nofb", "--samples", "101"];
    args.extend(channel_flags("1", "4", "inf", "inf", "3"));
    let (code, out, _) = run_args(&args);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "theta,r1_bits,r2_bits");
    assert_eq!(lines.len(), 102);
    let lib = sample_boundary(&ChannelParams::new(1.0, 4.0, INF, INF, 3.0).unwrap(), RegionKind::NoFeedback, 101).unwrap();
    for (line, s) in lines[1..].iter().zip(&lib) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(f, vec![s.theta, s.rates.r1, s.rates.r2]);
    }
}

#[test]
fn boundary_weakfb_json() {
    let mut args = vec!["boundary", "--kind", "weakfb", "--samples", "3", "--format", "json"];
    args.extend(channel_flags("1", "2", "inf", "2", "1"));
    let (code, out, _) = run_args(&args);
    assert_eq!(code, 0);
    let v = json(&out);
    let r1 = v["samples"][2]["r1_bits"].as_f64().unwrap();
    assert!((r1 - 0.5 * 2.25f64.log2()).abs() < 1e-15);
}

#[test]
fn scheme_reports_closed_forms() {
    let mut args = vec!["scheme", "--theta-prime", "0.5", "--gamma1", "-0.2", "--gamma2", "0"];
    args.extend(channel_flags("1", "1", "1", "inf", "1"));
    let (code, out, err) = run_args(&args);
    assert_eq!(code, 0, "{err}");
    let v = json(&out);
    let p = ChannelParams::new(1.0, 1.0, 1.0, INF, 1.0).unwrap();
    let s = SchemeParams::new(0.5, -0.2, 0.0).unwrap();
    let d = derive(&p, &s).unwrap();
    let r = scheme_rates(&p, &s).unwrap();
    assert_eq!(v["eff_var1"].as_f64().unwrap(), d.eff_var1);
    assert_eq!(v["alpha"].as_f64().unwrap(), d.alpha);
    assert_eq!(v["r1_bits"].as_f64().unwrap(), r.r1);
    assert_eq!(v["r2_bits"].as_f64().unwrap(), r.r2);
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn certify_lowpower_json() {
    let mut args = vec!["certify-lowpower"];
    args.extend(channel_flags("1", "2", "1", "2", "1"));
    let (code, out, _) = run_args(&args);
    assert_eq!(code, 0);
    let v = json(&out);
    let c = certify(&ChannelParams::new(1.0, 2.0, 1.0, 2.0, 1.0).unwrap()).unwrap();
    assert_eq!(v["feasible"], true);
    assert_eq!(v["g_at_xstar"].as_f64().unwrap(), c.g_at_xstar);
    assert_eq!(v["x_star"].as_f64().unwrap(), c.x_star);
}

#[test]
fn search_found_and_not_found() {
    let mut args = vec!["search"];
    args.extend(channel_flags("1", "1", "1", "inf", "1"));
    let (code, out, _) = run_args(&args);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["found"], true);
    assert!(v["excess"].as_f64().unwrap() > 1e-4);

    let mut args = vec!["search", "--max-halvings", "10"];
    args.extend(channel_flags("1", "4", "inf", "inf", "1"));
    let (code, out, _) = run_args(&args);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["found"], false);
    assert!(v.get("best_excess").is_some());

    let mut args = vec!["search", "--multistarts", "0"];
    args.extend(channel_flags("1", "4", "inf", "inf", "1"));
    assert_eq!(run_args(&args).0, 2);
}

#[test]
fn simulate_requires_and_echoes_seed() {
    let mut args = vec!["simulate", "--blocks", "5000", "--theta-prime", "0.5", "--gamma1", "-0.2"];
    args.extend(channel_flags("1", "1", "1", "inf", "1"));
    let (code, _, err) = run_args(&args);
    assert_eq!(code, 2);
    assert!(err.contains("--seed"), "{err}");

    args.extend(["--seed", "42"]);
    let (code, out, _) = run_args(&args);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["seed"], 42);
    let lib = simulate(
        &ChannelParams::new(1.0, 1.0, 1.0, INF, 1.0).unwrap(),
        &SchemeParams::new(0.5, -0.2, 0.0).unwrap(),
        5000,
        42,
    )
    .unwrap();
    assert_eq!(v["emp_var_s1"].as_f64().unwrap(), lib.emp_var_s1);
    assert_eq!(v["emp_cross2"].as_f64().unwrap(), lib.emp_cross2);
}

#[test]
fn sweep_csv_matches_library() {
    let (code, out, _) = run_args(&["sweep", "--x-max", "5.2", "--y-max", "5.2", "--resolution", "50"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "x,y,verdict,margin");
    assert_eq!(lines.len(), 50 * 50 + 1);
    let grid = sweep_onesided_rx1((0.0, 5.2), (0.0, 5.2), 50).unwrap();
    for (line, (x, y, c)) in lines[1..].iter().zip(grid.cells()) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[0].parse::<f64>().unwrap(), x);
        assert_eq!(f[1].parse::<f64>().unwrap(), y);
        assert_eq!(f[2], c.verdict.as_str());
        assert_eq!(f[3].parse::<f64>().unwrap(), c.margin);
    }
}

#[test]
fn json_only_commands_reject_csv() {
    let mut args = vec!["classify", "--format", "csv"];
    args.extend(channel_flags("1", "4", "inf", "inf", "1"));
    let (code, out, err) = run_args(&args);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(!err.is_empty());
}

#[test]
fn infinity_spellings() {
    let mut args = vec!["classify"];
    args.extend(channel_flags("1", "4", "Inf", "iNF", "1"));
    assert_eq!(run_args(&args).0, 0);

    for bad in ["infinity", "+inf", "nan", "1e999"] {
        let mut args = vec!["classify"];
        args.extend(channel_flags("1", "4", bad, "inf", "1"));
        assert_eq!(run_args(&args).0, 2, "{bad}");
    }
    let mut args = vec!["classify"];
    args.extend(channel_flags("inf", "4", "1", "inf", "1"));
    assert_eq!(run_args(&args).0, 2);
}

#[test]
fn validation_errors_exit_two() {
    let mut args = vec!["classify"];
    args.extend(channel_flags("1", "4", "0", "inf", "1"));
    let (code, _, err) = run_args(&args);
    assert_eq!(code, 2);
    assert!(err.contains("sigma_fb1_sq"), "{err}");

    let mut args = vec!["scheme", "--theta-prime", "1.5"];
    args.extend(channel_flags("1", "4", "1", "inf", "1"));
    assert_eq!(run_args(&args).0, 2);

    let mut args = vec!["scheme", "--theta-prime", "0.5", "--epsilon", "2"];
    args.extend(channel_flags("1", "4", "1", "inf", "1"));
    assert_eq!(run_args(&args).0, 2);
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("channel.json");
    std::fs::write(
        &path,
        r#"{"sigma1_sq":1,"sigma2_sq":4,"sigma_fb1_sq":"inf","sigma_fb2_sq":"inf","power":1}"#,
    )
    .unwrap();
    let path_str = path.to_str().unwrap();
    let (code, out, _) = run_args(&["classify", "--config", path_str]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["verdict"], "unchanged");

    let (code, out, _) = run_args(&["classify", "--config", path_str, "--sigma-fb1-sq", "0.1"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["verdict"], "enlarged");

    std::fs::write(&path, "{\"sigma1_sq\":1}").unwrap();
    assert_eq!(run_args(&["classify", "--config", path_str]).0, 2);
    assert_eq!(run_args(&["classify", "--config", "/nonexistent/channel.json"]).0, 2);
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let mut args = vec!["classify", "--output", path.to_str().unwrap()];
    args.extend(channel_flags("1", "4", "inf", "inf", "1"));
    let (code, out, _) = run_args(&args);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        "{\"margin\":-3.0,\"verdict\":\"unchanged\"}\n"
    );

    let mut args = vec!["classify", "--output", "/nonexistent/dir/out.json"];
    args.extend(channel_flags("1", "4", "inf", "inf", "1"));
    assert_eq!(run_args(&args).0, 1);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_gbc-feedback");
    let ok = Command::new(bin)
        .args(["classify", "--sigma1-sq", "1", "--sigma2-sq", "4", "--sigma-fb1-sq", "inf", "--sigma-fb2-sq", "inf", "--power", "1"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&ok.stdout), "{\"margin\":-3.0,\"verdict\":\"unchanged\"}\n");

    let bad = Command::new(bin).args(["classify"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(!bad.stderr.is_empty());

    let help = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}
