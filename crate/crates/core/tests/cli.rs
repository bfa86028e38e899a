use multibubble::cli::{from_csv, parse_history_csv, run};
use serde_json::Value;

fn invoke(args: &[&str], env_seed: Option<&str>) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("multibubble").chain(args.iter().copied());
    let code = run(argv, env_seed, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).expect("stdout is JSON")
}

fn temp_path(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("multibubble-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn profile_of_half_split() {
    let (code, out, _) = invoke(&["profile", "--v", "0.5,0.5"], None);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["command"], "profile");
    assert!((v["value"].as_f64().unwrap() - 0.398_942_3).abs() < 1e-7);
}

#[test]
fn exit_codes() {
    assert_eq!(invoke(&["profile", "--v", "1,0"], None).0, 3);
    assert_eq!(invoke(&["profile", "--v", "0.5,0.4"], None).0, 2);
    assert_eq!(invoke(&["profile", "--v", "a,b"], None).0, 2);
    assert_eq!(invoke(&["check", "--q", "9"], None).0, 2);
    assert_eq!(invoke(&["optimize", "--q", "5", "--n", "2", "--v", "0.2,0.2,0.2,0.2,0.2"], None).0, 2);
    assert_eq!(invoke(&["frobnicate"], None).0, 2);
    assert_eq!(invoke(&["profile", "--v", "0.5,0.5"], Some("nope")).0, 2);
    assert_ne!(invoke(&["homology", "/nonexistent/complex.json"], None).0, 0);
}

#[test]
fn homology_rejects_open_complex() {
    let path = temp_path("open.json");
    std::fs::write(&path, r#"{"q": 3, "edges": [[0, 1]], "triangles": [[0, 1, 2]]}"#).unwrap();
    let (code, _, err) = invoke(&["homology", path.to_str().unwrap()], None);
    assert_eq!(code, 2);
    assert!(!err.is_empty());
}

#[test]
fn homology_of_circle() {
    let path = temp_path("circle.json");
    std::fs::write(&path, r#"{"q": 3, "edges": [[0, 1], [1, 2], [0, 2]]}"#).unwrap();
    let (code, out, _) = invoke(&["homology", path.to_str().unwrap()], None);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!((v["b0"].as_u64(), v["b1"].as_u64()), (Some(1), Some(1)));
}

#[test]
fn env_seed_overrides_flag() {
    let args = ["check", "--q", "2", "--mc-samples", "20000"];
    let (_, with_env, _) = invoke(&[&args[..], &["--seed", "1"]].concat(), Some("7"));
    let (_, with_flag, _) = invoke(&[&args[..], &["--seed", "7"]].concat(), None);
    let (_, other, _) = invoke(&[&args[..], &["--seed", "1"]].concat(), None);
    assert_eq!(with_env, with_flag);
    assert_ne!(with_env, other);
}

#[test]
fn csv_matches_json() {
    let (_, as_json, _) = invoke(&["profile", "--v", "0.2,0.3,0.5"], None);
    let (code, as_csv, _) = invoke(&["profile", "--v", "0.2,0.3,0.5", "--format", "csv"], None);
    assert_eq!(code, 0);
    assert!(as_csv.starts_with("path,value"));
    assert_eq!(from_csv(&as_csv).unwrap(), json(&as_json));
}

#[test]
fn output_file_and_history() {
    let out = temp_path("opt.json");
    let history = temp_path("hist.csv");
    let (code, stdout, _) = invoke(
        &[
            "optimize", "--q", "2", "--n", "1", "--v", "0.6,0.4", "--starts", "2", "--mc-samples", "20000",
            "-o", out.to_str().unwrap(), "--history", history.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let report = json(&std::fs::read_to_string(&out).unwrap());
    let p = report["perimeter"].as_f64().unwrap();
    // phi(Phi^-1(0.6))
    assert!((p - 0.386_342_7).abs() < 1e-4, "perimeter {p}");
    let rows = parse_history_csv(&std::fs::read_to_string(&history).unwrap()).unwrap();
    assert!(!rows.is_empty());
    assert!(rows.windows(2).all(|w| w[0].iteration < w[1].iteration || w[0].rho < w[1].rho));
}
