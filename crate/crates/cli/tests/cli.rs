use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn maxwell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxwell"))
        .args(args)
        .env_remove("MAXWELL_OUT_DIR")
        .output()
        .expect("run maxwell")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    let out = dir.to_str().unwrap();
    all.extend(["--out", out]);
    maxwell(&all)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(dir: &Path, name: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    serde_json::from_str(&text).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn gap_for_builtin_kernels() {
    let d = TempDir::new().unwrap();
    let o = run_in(d.path(), &["gap", "--kernel", "linear"]);
    assert_eq!(code(&o), 0);
    let g = json(d.path(), "gap.json");
    assert!((num(&g["spectral_gap"]) + 1.0 / 3.0).abs() < 1e-12);
    assert!((num(&g["delta"]) - 1.0 / 48.0).abs() < 1e-12);
    assert!(d.path().join("moments.csv").exists());

    let o = run_in(d.path(), &["gap", "--kernel", "quintic"]);
    assert_eq!(code(&o), 0);
    let g = json(d.path(), "gap.json");
    assert!((num(&g["spectral_gap"]) + 0.4).abs() < 1e-12);
    assert!((num(&g["delta"]) - 1.0 / 40.0).abs() < 1e-12);
}

#[test]
fn invalid_family_is_a_usage_error() {
    let d = TempDir::new().unwrap();
    let o = run_in(d.path(), &["gap", "--kernel", "family:1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("must be 2"));
}

#[test]
fn constant_kernel_fails_checks() {
    let d = TempDir::new().unwrap();
    let o = run_in(d.path(), &["check-kernel", "--kernel", "expr:1"]);
    assert_eq!(code(&o), 1);
    let r = json(d.path(), "check_kernel.json");
    assert_eq!(r["report"]["pass"], Value::Bool(false));
    assert!(num(&r["report"]["symmetry_residual"]) > 0.42);

    let o = run_in(d.path(), &["verify", "--kernel", "expr:1"]);
    assert_eq!(code(&o), 1);
    let v = json(d.path(), "verify.json");
    assert_eq!(v["pass"], Value::Bool(false));
    assert!(v.get("structure").is_none());
}

#[test]
fn builtin_kernels_pass_check() {
    let d = TempDir::new().unwrap();
    for k in ["linear", "quintic"] {
        assert_eq!(code(&run_in(d.path(), &["check-kernel", "--kernel", k])), 0);
    }
}

#[test]
fn verify_small_basis_reports_unresolved_gap() {
    let d = TempDir::new().unwrap();
    let o = run_in(d.path(), &["verify", "--degree", "2", "--set", "samples=20000", "--set", "oracle_entries=5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v = json(d.path(), "verify.json");
    assert_eq!(v["gap_consistency"], "not stabilized");
    for key in ["structure", "spectral_inequality", "trilinear_bound", "conservation", "oracle"] {
        assert_eq!(v[key]["pass"], Value::Bool(true), "{key}");
    }
}

#[test]
fn verify_resolved_basis() {
    let d = TempDir::new().unwrap();
    let o = run_in(
        d.path(),
        &["verify", "--kernel", "quintic", "--degree", "4", "--set", "samples=20000", "--set", "trials=100"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v = json(d.path(), "verify.json");
    assert_eq!(v["gap_consistency"], "stabilized");
    assert!(num(&v["structure"]["gap_error"]) < 1e-8);
}

#[test]
fn theorem_gap_eigenvector_passes_and_is_reproducible() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["theorem", "--set", "t_end=6", "--set", "compare_degree=7"];
    assert_eq!(code(&run_in(a.path(), &args)), 0);
    assert_eq!(code(&run_in(b.path(), &args)), 0);
    let t = json(a.path(), "theorem.json");
    assert_eq!(t["report"]["status"], "pass");
    assert_eq!(t["picard"]["pass"], Value::Bool(true));
    assert!(num(&t["truncation"]["relative_change"]) < 1e-6);
    for f in ["trajectory.csv", "picard.csv", "theorem.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between identical runs");
    }
    let csv = std::fs::read_to_string(a.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,theta,sup_norm,C_star_bound,riccati_envelope,l1_estimate,l1_bound_sqrtCstar,invariant_residual\n"));
}

#[test]
fn theorem_product_gaussian_satisfies_hypothesis() {
    let d = TempDir::new().unwrap();
    let o = run_in(d.path(), &["theorem", "--set", "initial=product-gaussian(1.00643,1,0.99357)", "--set", "t_end=5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let t = json(d.path(), "theorem.json");
    assert_eq!(t["report"]["hypothesis_satisfied"], Value::Bool(true));
    assert!(num(&t["report"]["initial_norm"]) <= num(&t["report"]["delta"]));
}

#[test]
fn theorem_outside_ball_fails_hypothesis() {
    let d = TempDir::new().unwrap();
    let o = run_in(d.path(), &["theorem", "--set", "initial=random(5)", "--set", "initial_norm=0.0625"]);
    assert_eq!(code(&o), 1);
    let t = json(d.path(), "theorem.json");
    assert_eq!(t["report"]["status"], "hypothesis_failed");
    assert!(!d.path().join("trajectory.csv").exists());
}

#[test]
fn gaussian_example_table() {
    let d = TempDir::new().unwrap();
    let o = run_in(d.path(), &["gaussian-example"]);
    assert_eq!(code(&o), 0);
    let g = json(d.path(), "gaussian_example.json");
    let rows = g["rows"].as_array().unwrap();
    let find = |s: [f64; 3]| {
        rows.iter()
            .find(|r| (0..3).all(|i| (num(&r["sigma2"][i]) - s[i]).abs() < 1e-12))
            .unwrap()
    };
    let center = find([1.0, 1.0, 1.0]);
    assert_eq!(num(&center["chi"]), 0.0);
    assert_eq!(center["admissible"], Value::Bool(true));
    let wide = find([1.1, 1.0, 0.9]);
    assert!((num(&wide["chi"]) - 0.1005).abs() < 1e-4);
    assert_eq!(wide["admissible"], Value::Bool(false));
    assert!((num(&wide["chi_square_quadrature"]) - num(&wide["chi_square"])).abs() < 1e-10);
    let (lo, hi) = (num(&g["interval"][0]), num(&g["interval"][1]));
    for s in [[hi, 1.0, lo], [lo, 1.0, hi]] {
        let r = find(s);
        assert_eq!(r["admissible"], Value::Bool(true));
        assert!(num(&r["margin"]) >= 0.0);
    }

    let o = run_in(d.path(), &["gaussian-example", "--sigma", "2.5,0.25,0.25"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn linear_evolution_decays_at_twice_the_gap() {
    let d = TempDir::new().unwrap();
    let o = run_in(d.path(), &["evolve", "--set", "nonlinear=false"]);
    assert_eq!(code(&o), 0);
    let e = json(d.path(), "evolve.json");
    let rate = num(&e["decay_fit"]["rate"]);
    assert!((rate + 2.0 / 3.0).abs() < 1e-6, "rate {rate}");
    assert!(num(&e["max_invariant_residual"]) <= 1e-10);
    assert!(d.path().join("final_state.csv").exists());
}

#[test]
fn assemble_writes_text_exports() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&run_in(d.path(), &["assemble", "--degree", "3"])), 0);
    let l = std::fs::read_to_string(d.path().join("L.txt")).unwrap();
    assert!(l.starts_with("# gamma1 gamma2 gamma3 alpha1 alpha2 alpha3 value"));
    let s = json(d.path(), "assembly.json");
    assert_eq!(s["dimension"], 20);
}

#[test]
fn picard_and_oracle_subcommands() {
    let d = TempDir::new().unwrap();
    let o = run_in(d.path(), &["picard", "--set", "t_end=3", "--set", "initial=random(9)"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let p = json(d.path(), "picard.json");
    assert!(num(&p["max_contraction_factor"]) <= 0.55);

    let o = run_in(d.path(), &["oracle", "--degree", "3", "--set", "samples=20000", "--set", "oracle_entries=6"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let csv = std::fs::read_to_string(d.path().join("oracle.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
}

#[test]
fn config_file_and_overrides() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("run.cfg");
    let from_cfg = d.path().join("from-config");
    std::fs::write(&cfg, format!("# quintic run\nkernel = quintic\nout_dir = {}\n", from_cfg.display())).unwrap();
    let c = cfg.to_str().unwrap();

    assert_eq!(code(&maxwell(&["gap", "--config", c])), 0);
    let g = json(&from_cfg, "gap.json");
    assert!((num(&g["spectral_gap"]) + 0.4).abs() < 1e-12);
    let resolved = std::fs::read_to_string(from_cfg.join("config.txt")).unwrap();
    assert!(resolved.contains("kernel = quintic"));

    // environment beats the config file, --out beats both
    let from_env = d.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_maxwell"))
        .args(["gap", "--config", c, "--kernel", "linear"])
        .env("MAXWELL_OUT_DIR", &from_env)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!((num(&json(&from_env, "gap.json")["spectral_gap"]) + 1.0 / 3.0).abs() < 1e-12);
    let from_flag = d.path().join("from-flag");
    let o = Command::new(env!("CARGO_BIN_EXE_maxwell"))
        .args(["gap", "--config", c, "--out", from_flag.to_str().unwrap()])
        .env("MAXWELL_OUT_DIR", &from_env)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(from_flag.join("gap.json").exists());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&maxwell(&["gap", "--set", "colour=red"])), 2);
    assert_eq!(code(&maxwell(&["gap", "--set", "degree"])), 2);
    assert_eq!(code(&maxwell(&["frobnicate"])), 2);
    assert_eq!(code(&maxwell(&["gap", "--config", "/nonexistent/run.cfg"])), 2);
    assert_eq!(code(&maxwell(&["theorem", "--set", "initial=sideways"])), 2);
    assert_eq!(code(&maxwell(&["assemble", "--degree", "1"])), 2);
}
