//! End-to-end runs of the `rank1ks` binary.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

fn rank1ks(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rank1ks"))
        .args(args)
        .env_remove("RANK1KS_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

/// Small case counts for the quick suites.
const SMALL: &str = r#"{
  "verify": {
    "kappa_samples": 20000, "abel_random": 20, "rearrange_cases": 200, "row_embedding_cases": 50,
    "chain_models": 3, "endpoint_samples": 20000, "probe_samples": 20000, "probe_layers": 3,
    "theorem8_models": 2, "covering_families": 5
  }
}"#;

const QUICK: &str = "kernel,surface,abel_l21,rearrange,chain,theorem8,covering";

#[test]
fn space_info_prints_rho_and_a_density_table() {
    let o = rank1ks(&["space-info", "--m1", "2", "--m2", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("rho = 2.0\n"), "{text}");
    assert!(text.contains("dimension = 4\n"));
    let csv: Vec<&str> = text.split("\n\n").nth(1).unwrap().lines().collect();
    assert_eq!(csv[0], "t,radial_density,ball_volume");
    assert_eq!(csv.len(), 1 + 13);
}

#[test]
fn kernel_table_ratios_sit_inside_the_pinned_interval() {
    let o = rank1ks(&["kernel-table", "--m1", "2", "--m2", "1", "--t", "0..6", "--s", "-3..3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,s,psi,comparator,ratio,within_pinned"));
    let mut n = 0;
    for l in lines {
        let cols: Vec<&str> = l.split(',').collect();
        let (t, s, ratio): (f64, f64, f64) = (
            cols[0].parse().unwrap(),
            cols[1].parse().unwrap(),
            cols[4].parse().unwrap(),
        );
        assert!(t >= s.abs() + 0.01);
        assert!(ratio > 1.0 / 3.1 && ratio < 3.1);
        assert_eq!(cols[5], "true");
        n += 1;
    }
    assert!(n > 50);
}

#[test]
fn verify_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.json");
    std::fs::write(&cfg, SMALL).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = rank1ks(&[
            "verify",
            "--suite",
            QUICK,
            "--seed",
            "7",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(
            matches!(o.status.code(), Some(0 | 1)),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let (fa, fb) = (files(&a), files(&b));
    assert!(fa.contains_key("summary.json") && fa.contains_key("covering.csv") && fa.contains_key("chain_abel.csv"));
    assert_eq!(fa, fb);

    // a different seed changes the randomized tables but not the kernel grid
    let c = tmp.path().join("c");
    rank1ks(&[
        "verify",
        "--suite",
        QUICK,
        "--seed",
        "8",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        c.to_str().unwrap(),
    ]);
    let fc = files(&c);
    assert_eq!(fa["kernel.csv"], fc["kernel.csv"]);
    assert_ne!(fa["covering.csv"], fc["covering.csv"]);
}

#[test]
fn thread_count_does_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for threads in ["1", "3"] {
        let dir = tmp.path().join(threads);
        let o = Command::new(env!("CARGO_BIN_EXE_rank1ks"))
            .args([
                "covering",
                "--families",
                "6",
                "--seed",
                "3",
                "--out",
                dir.to_str().unwrap(),
            ])
            .env("RANK1KS_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        outs.push(files(&dir));
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn report_consolidates_a_verify_run() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    let o = rank1ks(&["verify", "--suite", "kernel,rearrange", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_owned).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("criterion  1 kernel      PASS"));
    assert!(lines[1].starts_with("criterion  4 rearrange   PASS"));

    let r = rank1ks(&["report", "--dir", dir.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    let text = stdout(&r);
    assert!(text.contains("| 1 | kernel | "), "{text}");
    assert!(text.contains("2 of 2 suites pass"));

    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("kernel_summary.json")).unwrap()).unwrap();
    let keys: Vec<&str> = summary.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["cases", "max_ratio", "pass", "pinned_constant", "suite"]);
}

#[test]
fn verification_failures_exit_with_one() {
    // far too few samples to resolve kappa to 2%
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("thin.json");
    std::fs::write(&cfg, r#"{"verify": {"kappa_samples": 1000}}"#).unwrap();
    let o = rank1ks(&["verify", "--suite", "surface", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
    let r = rank1ks(&["report", "--dir", tmp.path().to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2), "no summary.json was written");
}

#[test]
fn configuration_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"verify": {"chain_modles": 3}}"#).unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["space-info", "--m1", "0", "--m2", "0"],
        vec!["space-info", "--m1", "2", "--m2", "-1"],
        vec!["verify", "--suite", "kernel", "--config", bad.to_str().unwrap()],
        vec!["verify", "--config", "/nonexistent/config.json"],
        vec!["no-such-command"],
        vec!["kernel-table", "--t", "6..0"],
        vec!["maximal-run", "--m1", "2", "--m2", "1"],
        vec![
            "maximal-run",
            "--m1",
            "1",
            "--m2",
            "0",
            "--v-half",
            "2",
            "--s-half",
            "1",
            "--n-v",
            "32",
            "--n-s",
            "16",
        ],
        vec!["weak-type", "--m1", "2", "--m2", "0"],
        vec!["lorentz-norm", "--values", "1,2", "--weights", "1"],
    ];
    for args in cases {
        let o = rank1ks(&args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!o.stderr.is_empty());
    }
    let o = Command::new(env!("CARGO_BIN_EXE_rank1ks"))
        .args(["space-info"])
        .env("RANK1KS_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_and_flags_layer_over_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"m1": 3, "lorentz": {"values": [4.0], "weights": [1.0], "p": 2.0, "q": 1.0}}"#,
    )
    .unwrap();
    let o = rank1ks(&["space-info", "--config", cfg.to_str().unwrap()]);
    assert!(stdout(&o).starts_with("m1 = 3\nm2 = 0\nrho = 1.5\n"));
    let o = rank1ks(&["space-info", "--config", cfg.to_str().unwrap(), "--m1", "1"]);
    assert!(stdout(&o).starts_with("m1 = 1\n"));
    // ‖4χ_E‖_{2,1} = 2·4·|E|^{1/2} with |E| = 1
    let o = rank1ks(&["lorentz-norm", "--config", cfg.to_str().unwrap()]);
    assert_eq!(
        stdout(&o),
        "p,q,norm\n2.0000000000000000e0,1.0000000000000000e0,8.0000000000000000e0\n"
    );
}

#[test]
fn small_commands_produce_tables() {
    let o = rank1ks(&[
        "abel",
        "--m1",
        "2",
        "--m2",
        "0",
        "--intervals",
        "0:1",
        "--s",
        "0..1",
        "--n-s",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let (abel, bound) = text.split_once("\n\n").unwrap();
    assert_eq!(abel.lines().count(), 6);
    assert!(bound.starts_with("sup_abel,norm,ratio,pinned_constant\n"));

    let o = rank1ks(&["trilinear", "--m1", "2", "--m2", "0", "--samples", "20000"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("r_f,r_g,r_h,samples,estimate"));

    let o = rank1ks(&[
        "maximal-run",
        "--m1",
        "1",
        "--m2",
        "0",
        "--n-v",
        "160",
        "--n-s",
        "128",
        "--fields",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 4);

    let o = rank1ks(&["weak-type", "--m1", "1", "--m2", "0", "--counts", "1,2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 3);

    let o = rank1ks(&["chain-verify", "--models", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("criterion  5 chain       PASS"));
}
