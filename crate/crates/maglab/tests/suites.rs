use maglab::config::*;
use maglab::par::Execution;
use maglab::suites::{self, SuiteError};

fn quick(system: &str, suite: Suite) -> RunConfig {
    let mut cfg = RunConfig::new(SystemSpec::named(system), vec![suite]);
    cfg.grids.points = 4;
    cfg.grids.pestov = 16;
    cfg.grids.pestov_samples = 2;
    cfg.grids.base_degree = 3;
    cfg.grids.fiber_degree = 3;
    cfg.grids.haar = 16;
    cfg.grids.poincare_samples = 3;
    cfg.grids.fm_torus = 4;
    cfg.grids.fm_haar = 6;
    cfg.grids.tomo_max_m = 10;
    cfg.grids.tomo_max_n = 10;
    cfg.grids.pinching_max_n = 20;
    cfg.grids.plane_mesh = 200;
    cfg.grids.jacobi_time = 2.0;
    cfg
}

#[test]
fn parses_full_config() {
    let text = r#"
        suites = ["tensors", "pestov", "tomo"]
        seed = 9
        execution = "sequential"

        [system]
        builtin = "larmor-t2"
        b = 0.5

        [grids]
        points = 3
        pestov = 16
        localized_degrees = [2, 5]

        [steps]
        bracket = 2e-5

        [tolerances]
        bianchi = 1e-9

        [output]
        dir = "out"
    "#;
    let cfg = RunConfig::parse(text).unwrap();
    assert_eq!(cfg.suites, vec![Suite::Tensors, Suite::Pestov, Suite::Tomo]);
    assert_eq!(cfg.exec(), Execution::Sequential);
    assert_eq!(cfg.grids.localized_degrees, vec![2, 5]);
    assert_eq!(cfg.grids.haar, 48);
    assert_eq!(cfg.tolerances.bianchi, 1e-9);
    assert_eq!(cfg.tolerances.pestov, 1e-8);
    assert_eq!(cfg.output.summary, "summary.json");
    let s = cfg.system.build().unwrap();
    assert_eq!(s.sigma(&maglab::Vector::zeros(2))[(0, 1)], 0.5);
    let back = RunConfig::parse(&toml::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn rejects_bad_configs() {
    let bad = [
        "suites = [\"tensors\"]\ncolour = 1",
        "suites = [\"tensors\"]\n[grids]\npointz = 3",
        "suites = [\"bianchi\"]",
        "suites = [\"tensors\"]\n[system]\nbuiltin = \"klein-bottle\"",
        "suites = [\"tensors\"]\n[system]\nbuiltin = \"sphere2\"\nb = 1.0",
        "suites = [\"tensors\"]\n[system]\nbuiltin = \"kahler-t4\"\nc = 0.3\nb = 1.0",
        "suites = [\"tensors\"]\n[grids]\npoints = 0",
        "seed = 3",
    ];
    for text in bad {
        assert!(RunConfig::parse(text).is_err(), "{text}");
    }
    assert!(matches!("nope".parse::<Suite>(), Err(ConfigError::UnknownSuite(_))));
    for s in Suite::ALL {
        assert_eq!(s.name().parse::<Suite>().unwrap(), s);
    }
}

#[test]
fn pointwise_suites_pass_on_builtins() {
    for (system, suite) in [
        ("kahler-t4", Suite::Tensors),
        ("nonclosed-t3", Suite::Tensors),
        ("hyperbolic3-magnetic", Suite::Tensors),
        ("conformal-t2", Suite::Brackets),
        ("nonclosed-t3", Suite::Brackets),
        ("larmor-t2", Suite::Jacobi),
        ("sphere3", Suite::Jacobi),
    ] {
        let out = suites::run(suite, &quick(system, suite)).unwrap();
        assert!(out.report.passed, "{system} {suite}: {:?}", out.report);
        assert_eq!(out.report.checks, out.checks.len());
        assert!(out.report.checks > 0);
    }
    let out = suites::run(Suite::Tensors, &quick("kahler-t4", Suite::Tensors)).unwrap();
    assert!(out.checks.iter().any(|r| r.check == "bianchi-cyclic-sum"));
    let out = suites::run(Suite::Tensors, &quick("hyperbolic3-magnetic", Suite::Tensors)).unwrap();
    assert!(out.checks.iter().any(|r| r.check == "pinched-remainder-bound"));
    let out = suites::run(Suite::Jacobi, &quick("larmor-t2", Suite::Jacobi)).unwrap();
    assert!(out.checks.iter().any(|r| r.check == "larmor-conjugate-time" && r.passed));
}

#[test]
fn spectral_and_exact_suites_pass() {
    for suite in [Suite::Pestov, Suite::Localized, Suite::Tomo, Suite::Pinching, Suite::Poincare] {
        let out = suites::run(suite, &quick("conformal-t2", suite)).unwrap();
        assert!(out.report.passed, "{suite}: {:?}", out.report);
    }
    let mut cfg = quick("nonclosed-t3", Suite::Fmquad);
    cfg.grids.fm_torus = 6;
    cfg.grids.fm_haar = 8;
    let out = suites::run(Suite::Fmquad, &cfg).unwrap();
    assert!(out.report.passed, "{:?}", out.checks);
}

#[test]
fn tables_and_labels() {
    let out = suites::run(Suite::Pinching, &quick("flat-t2", Suite::Pinching)).unwrap();
    assert_eq!(out.report.system, "-");
    let t = &out.tables[0];
    assert_eq!(t.file, "pinching_table.csv");
    let row7 = t.csv.lines().find(|l| l.starts_with("7,")).unwrap();
    assert!(row7.contains(",16,8/11,"), "{row7}");
    let out = suites::run(Suite::Tomo, &quick("flat-t2", Suite::Tomo)).unwrap();
    assert!(out.tables[0].csv.starts_with("m,n,alpha,beta,gamma,C,closed_form_equal,signs_ok\n"));
    assert!(out.checks_csv().starts_with("suite,check,sample,residual,tolerance,passed\n"));
}

#[test]
fn inapplicable_systems_are_reported() {
    let e = suites::run(Suite::Pestov, &quick("sphere2", Suite::Pestov)).unwrap_err();
    assert!(matches!(e, SuiteError::Unsupported { .. }), "{e}");
    let e = suites::run(Suite::Fmquad, &quick("conformal-t2", Suite::Fmquad)).unwrap_err();
    assert!(matches!(e, SuiteError::Unsupported { .. }), "{e}");
}

#[test]
fn tightened_budget_fails() {
    let mut cfg = quick("nonclosed-t3", Suite::Brackets);
    cfg.tolerances.structure = 1e-16;
    cfg.tolerances.curvature_oracle = 1e-16;
    let out = suites::run(Suite::Brackets, &cfg).unwrap();
    assert!(!out.report.passed);
    assert!(out.report.worst_ratio > 1.0);
}

#[test]
fn runs_are_reproducible() {
    let mut cfg = quick("conformal-t2", Suite::Localized);
    let a = suites::run(Suite::Localized, &cfg).unwrap().checks_csv();
    cfg.execution = ExecutionMode::Sequential;
    let b = suites::run(Suite::Localized, &cfg).unwrap().checks_csv();
    assert_eq!(a, b);
    cfg.seed = 1;
    let c = suites::run(Suite::Localized, &cfg).unwrap().checks_csv();
    assert_ne!(a, c);
}
