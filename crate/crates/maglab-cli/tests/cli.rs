use std::path::PathBuf;
use std::process::{Command, Output};

fn maglab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maglab")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("maglab-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn kahler_tensors_pass() {
    let out = scratch("kahler");
    let o = maglab(&["verify", "tensors", "--system", "kahler-t4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let r = &summary[0];
    assert_eq!(r["suite"], "tensors");
    assert!(r["max_residual"].as_f64().unwrap() < 1e-8);
    assert!(out.join("summary.json").exists());
    let csv = std::fs::read_to_string(out.join("tensors_checks.csv")).unwrap();
    assert!(csv.contains("bianchi-cyclic-sum"));
}

#[test]
fn pinching_row_for_seven() {
    let o = maglab(&["pinching", "--n", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let row: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(row["nu_max"], "16");
    assert_eq!(row["delta_star"], "8/11");
    assert_eq!(row["margin"].as_f64().unwrap(), 0.0);
}

#[test]
fn tomo_sweep_is_byte_identical() {
    let (a, b) = (scratch("tomo-a"), scratch("tomo-b"));
    for d in [&a, &b] {
        let o = maglab(&["tomo", "--max-m", "40", "--max-n", "40", "--out", d.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["tomo_sweep.csv", "tomo_checks.csv"] {
        let x = std::fs::read(a.join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let sweep = std::fs::read_to_string(a.join("tomo_sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 1 + 1559);
    assert!(!sweep.contains(",false,"));
}

#[test]
fn exit_codes() {
    assert_eq!(maglab(&["verify", "nonsense"]).status.code(), Some(2));
    assert_eq!(maglab(&["verify", "pestov", "--system", "sphere2"]).status.code(), Some(2));
    assert_eq!(maglab(&["run", "--config", "/nonexistent.toml"]).status.code(), Some(2));

    let dir = scratch("cfg");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("bad.toml");
    std::fs::write(&cfg, "suites = [\"tensors\"]\nunknown_key = 1\n").unwrap();
    assert_eq!(maglab(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));

    let failing = format!(
        "suites = [\"brackets\"]\n[system]\nbuiltin = \"nonclosed-t3\"\n[grids]\npoints = 2\n\
         [tolerances]\nstructure = 1e-18\ncurvature_oracle = 1e-18\n[output]\ndir = {:?}\n",
        dir.join("out").to_str().unwrap()
    );
    std::fs::write(&cfg, failing).unwrap();
    let o = maglab(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(dir.join("out/brackets_checks.csv").exists());
}

#[test]
fn lists_systems() {
    let o = maglab(&["systems"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l == "hyperbolic3-magnetic"));
    assert_eq!(text.lines().collect::<Vec<_>>(), maglab::manifold::BUILTIN_NAMES.to_vec());
}
