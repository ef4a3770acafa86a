use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fieldbracket"))
}

fn model(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("models")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_model(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("model.toml");
    std::fs::write(&p, text).unwrap();
    p
}

/// `{f, h}` for `f = u^5 + t p^3 + u p`, `H = (p² + u²)/2`, written out by hand.
fn probe_bracket(t: f64, u: f64, p: f64) -> f64 {
    let df_dt = p.powi(3);
    let df_du = 5.0 * u.powi(4) + p;
    let df_dp = 3.0 * t * p * p + u;
    df_dt + df_du * p - df_dp * u
}

#[test]
fn bracket_values_match_hand_computation() {
    let m = model("oscillator.toml");
    let o = run(&[
        "bracket",
        "--model",
        m.to_str().unwrap(),
        "--current",
        "probe",
        "--at",
        "x1=1.5,u1=-0.25,p1_1=0.75",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<(String, f64)> = out
        .lines()
        .skip_while(|l| !l.starts_with("point\t"))
        .skip(1)
        .map(|l| {
            let (pt, v) = l.split_once('\t').unwrap();
            (pt.to_string(), v.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 3, "{out}");
    for (pt, v) in rows {
        let get = |k: &str| -> f64 {
            pt.split(',')
                .find_map(|kv| {
                    kv.strip_prefix(&format!("{k}="))
                        .map(|s| s.parse().unwrap())
                })
                .unwrap()
        };
        let expected = probe_bracket(get("x1"), get("u1"), get("p1_1"));
        assert!(
            (v - expected).abs() <= 1e-12 * (1.0 + expected.abs()),
            "{pt}: {v} vs {expected}"
        );
    }
}

#[test]
fn unknown_current_lists_available_names() {
    let m = model("oscillator.toml");
    let o = run(&[
        "bracket",
        "--model",
        m.to_str().unwrap(),
        "--current",
        "nope",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(
        err.contains("nope") && err.contains("energy") && err.contains("probe"),
        "{err}"
    );
}

#[test]
fn unknown_model_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_model(
        dir.path(),
        "[model]\nbuiltin = \"wave\"\ncolour = \"red\"\n",
    );
    let o = run(&["parse-check", "--model", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
}

#[test]
fn domain_error_exits_with_numeric_code() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_model(
        dir.path(),
        "[model]\nname = \"log\"\nm = 1\nn = 1\nhamiltonian = \"p1_1^2/2 + ln(u1)\"\n\n\
         [[currents]]\nname = \"q\"\nf = \"ln(u1)*p1_1\"\n",
    );
    let o = run(&[
        "bracket",
        "--model",
        p.to_str().unwrap(),
        "--current",
        "q",
        "--at",
        "x1=0,u1=-1,p1_1=1",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn parse_check_reports_syntax_errors() {
    let ok = run(&["parse-check", "u1*0 + sin(x1)"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).starts_with("ok: sin(x1)"), "{}", stdout(&ok));
    let bad = run(&["parse-check", "sin("]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("offset 4"), "{}", stderr(&bad));
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn simulate_is_byte_reproducible() {
    let m = model("wave.toml");
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let o = run(&[
            "simulate",
            "--model",
            m.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    std::fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        files.sort();
        assert!(files.iter().any(|(n, _)| n.ends_with(".csv")));
        assert!(files.iter().any(|(n, _)| n.ends_with(".json")));
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn simulate_oscillator_tracks_cosine() {
    let dir = tempfile::tempdir().unwrap();
    let m = model("oscillator.toml");
    let o = run(&[
        "simulate",
        "--model",
        m.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("oscillator.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,u1,p1_1"));
    let last = lines.last().unwrap();
    let v: Vec<f64> = last.split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(v[0], 10.0);
    assert!((v[1] - 10f64.cos()).abs() < 1e-10, "{last}");
    assert!((v[2] + 10f64.sin()).abs() < 1e-10, "{last}");
}

#[test]
fn verify_single_suite_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "verify",
        "--suite",
        "affine_round_trip",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(
        out.trim_end()
            .ends_with("1 checks, 0 failed (seed 20240611, 3 levels)"),
        "{out}"
    );
    let json: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(json.len(), 1);
    let text = std::fs::read_to_string(json[0].as_ref().unwrap().path()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["status"], "pass");
}

#[test]
fn verify_unknown_suite_is_a_usage_error() {
    let o = run(&["verify", "--suite", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("representation"), "{}", stderr(&o));
}

#[test]
fn in_process_runner_matches_binary() {
    let m = model("oscillator.toml");
    let args = [
        "fieldbracket",
        "bracket",
        "--model",
        m.to_str().unwrap(),
        "--current",
        "energy",
    ];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = fieldbracket::cli::run(args, &mut out, &mut err);
    let o = run(&args[1..]);
    assert_eq!(Some(code), o.status.code());
    assert_eq!(out, o.stdout);
}
