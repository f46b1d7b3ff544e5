use std::path::Path;
use std::process::{Command, Output};

fn ppi(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppi"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn make_inputs(dir: &Path) {
    let out = ppi(
        dir,
        &[
            "gen-data", "--rho", "0.8", "--size", "1200", "--seed", "4", "--out", "bank.csv",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let bank = std::fs::read_to_string(dir.join("bank.csv")).unwrap();
    let mut lines = bank.lines().skip(1);
    let paired: Vec<&str> = lines.by_ref().take(60).collect();
    let sim: Vec<String> = lines
        .take(500)
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            format!("{},{}", cols[0], cols[2])
        })
        .collect();
    std::fs::write(
        dir.join("paired.csv"),
        format!("id,y,f\n{}\n", paired.join("\n")),
    )
    .unwrap();
    std::fs::write(dir.join("sim.csv"), format!("id,f\n{}\n", sim.join("\n"))).unwrap();
}

const SWEEP: &[&str] = &[
    "sweep",
    "--axis",
    "nsim",
    "--grid",
    "100,400",
    "--n",
    "40",
    "--redraws",
    "4",
    "--seed",
    "9",
    "--methods",
    "classical,suresim,two-stage,cv",
];

#[test]
fn sweep_csv_header_is_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = ppi(dir.path(), SWEEP);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# provenance: {"));
    assert_eq!(
        lines.next().unwrap(),
        "axis,axis_value,method,mean_width,se_width,mean_lower,mean_upper,trunc_lo_freq,trunc_hi_freq,n,N,alpha,delta,redraws,seed"
    );
    assert_eq!(lines.count(), 2 * 5);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for format in ["csv", "json"] {
        let mut args = SWEEP.to_vec();
        args.extend(["--format", format, "--out", "a"]);
        assert!(ppi(dir.path(), &args).status.success());
        let first = std::fs::read(dir.path().join("a")).unwrap();
        assert!(ppi(dir.path(), &args).status.success());
        assert_eq!(first, std::fs::read(dir.path().join("a")).unwrap());
    }
}

#[test]
fn gen_data_writes_bank_and_sidecar_deterministically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    make_inputs(a.path());
    make_inputs(b.path());
    for f in ["bank.csv", "bank.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap()
        );
    }
    let side: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.path().join("bank.json")).unwrap()).unwrap();
    assert!((side["achieved_rho"].as_f64().unwrap() - 0.8).abs() <= 0.01);
    assert!(side["true_mu"].is_f64());
    assert_eq!(side["spec"]["size"], 1200);
}

#[test]
fn interval_prints_documented_fields() {
    let dir = tempfile::tempdir().unwrap();
    make_inputs(dir.path());
    for method in [
        "classical",
        "suresim",
        "suresim-ub",
        "two-stage",
        "two-stage-ub",
        "rectifier",
        "cv",
        "cv-split",
    ] {
        let out = ppi(
            dir.path(),
            &[
                "interval",
                "--method",
                method,
                "--paired",
                "paired.csv",
                "--sim",
                "sim.csv",
            ],
        );
        assert!(
            out.status.success(),
            "{method}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "N",
                "alpha",
                "lower",
                "method",
                "n",
                "truncated_lower",
                "truncated_upper",
                "upper",
                "width"
            ]
        );
        assert_eq!(v["method"], method);
        assert_eq!(v["n"], 60);
        assert_eq!(v["N"], 500);
        let (lo, hi) = (v["lower"].as_f64().unwrap(), v["upper"].as_f64().unwrap());
        assert!((v["width"].as_f64().unwrap() - (hi - lo)).abs() < 1e-12);
    }
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.cfg"),
        "# override\nredraws = 2\nmethods = classical\n",
    )
    .unwrap();
    let mut args = SWEEP.to_vec();
    args.extend(["--config", "run.cfg", "--format", "json"]);
    let out = ppi(dir.path(), &args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2 * 2);
    assert!(rows.iter().all(|r| r["redraws"] == 2));
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    make_inputs(dir.path());
    let code = |args: &[&str]| ppi(dir.path(), args).status.code().unwrap();
    assert_eq!(code(&["sweep", "--axis", "sideways", "--grid", "1"]), 2);
    assert_eq!(
        code(&[
            "interval",
            "--method",
            "classical",
            "--alpha",
            "2",
            "--paired",
            "paired.csv"
        ]),
        2
    );
    assert_eq!(
        code(&["sweep", "--axis", "nsim", "--grid", "10", "--bogus-flag"]),
        2
    );
    std::fs::write(dir.path().join("bad.cfg"), "redraws twenty\n").unwrap();
    assert_eq!(
        code(&["sweep", "--axis", "nsim", "--grid", "10", "--config", "bad.cfg"]),
        2
    );
    assert_eq!(
        code(&[
            "interval",
            "--method",
            "classical",
            "--paired",
            "missing.csv"
        ]),
        3
    );
    std::fs::write(dir.path().join("oob.csv"), "id,y,f\na,0.5,-0.1\n").unwrap();
    assert_eq!(code(&["summary", "--paired", "oob.csv"]), 3);
    assert_eq!(
        code(&[
            "interval",
            "--method",
            "two-stage",
            "--paired",
            "paired.csv"
        ]),
        3
    );
    assert_eq!(
        code(&[
            "gen-data", "--mu", "0.5", "--mu-sim", "0.02", "--rho", "1", "--size", "500", "--tol",
            "0.001", "--out", "x.csv"
        ]),
        4
    );
    assert_eq!(
        code(&[
            "savings",
            "--n",
            "60",
            "--N",
            "700",
            "--redraws",
            "8",
            "--methods",
            "suresim",
            "--savings-cap",
            "70"
        ]),
        4
    );
}

#[test]
fn summary_reports_undefined_correlation_as_null() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("flat.csv"),
        "id,y,f\na,0.5,0.5\nb,0.5,0.5\n",
    )
    .unwrap();
    let out = ppi(dir.path(), &["summary", "--paired", "flat.csv"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["rho"].is_null());
    assert_eq!(v["var_rect"], 0.0);
}
