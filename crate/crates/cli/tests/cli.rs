use std::path::Path;
use std::process::{Command, Output};

fn fiv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fiv"))
        .args(args)
        .output()
        .expect("run fiv")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn footer(csv: &str, key: &str) -> String {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("# {key}=")))
        .unwrap_or_else(|| panic!("no {key} in {csv}"))
        .to_string()
}

const FIV_ARGS: &[&str] = &[
    "fiv", "--n", "2", "--i", "1", "--f", "radial:square", "--zeta", "triangle:1", "--eps0", "0.1",
    "--ratio", "0.5", "--count", "8",
];

#[test]
fn fiv_triangle_oracle() {
    let o = fiv(FIV_ARGS);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = stdout(&o);
    assert!(csv.starts_with("epsilon,value\n"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 9);
    let v: f64 = footer(&csv, "extrapolated").parse().unwrap();
    assert!((v - 2.0 * std::f64::consts::PI / 3.0).abs() < 1e-6, "{v}");
    assert_eq!(footer(&csv, "converged"), "true");
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_fiv"))
            .args(FIV_ARGS)
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    assert_eq!(one, run("4"));
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"command": "fiv", "n": 2, "i": 1, "f": "radial:square", "zeta": "triangle:1",
            "eps0": 0.1, "ratio": 0.5, "count": 8}"#,
    )
    .unwrap();
    let a = fiv(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, fiv(FIV_ARGS).stdout);
}

#[test]
fn check_forms_passes() {
    let o = fiv(&["check-forms", "--n", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let table = stdout(&o);
    assert!(table.contains("r2_kappa") && table.contains("G_t pullback"));
    assert!(!table.lines().any(|l| l.ends_with("FAIL")));
}

#[test]
fn template_then_invert_recovers_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.csv");
    let zeta = dir.path().join("zeta.csv");
    let t = fiv(&["template", "--n", "2", "--i", "1", "--zeta", "triangle:1", "--out", curve.to_str().unwrap()]);
    assert_eq!(t.status.code(), Some(0), "{}", stderr(&t));
    let i = fiv(&[
        "invert", "--n", "2", "--i", "1", "--support", "1", "--input", curve.to_str().unwrap(), "--out",
        zeta.to_str().unwrap(),
    ]);
    assert_eq!(i.status.code(), Some(0), "{}", stderr(&i));
    let text = std::fs::read_to_string(&zeta).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,zeta_hat"));
    let mut checked = 0;
    for l in lines {
        let (t, z) = l.split_once(',').unwrap();
        let (t, z): (f64, f64) = (t.parse().unwrap(), z.parse().unwrap());
        if (0.01..=1.0).contains(&t) {
            assert!((z - (1.0 - t)).abs() < 1e-6, "t={t} z={z}");
            checked += 1;
        }
    }
    assert!(checked > 1000);
}

#[test]
fn norm_of_power_density() {
    let o = fiv(&["norm", "--n", "2", "--i", "1", "--zeta", "power:0.5,1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let norm: f64 = out.lines().next().unwrap().strip_prefix("norm=").unwrap().parse().unwrap();
    // (n-i) eta(0) + rho(0) = 4/3 + 4/3
    assert!((norm - 8.0 / 3.0).abs() < 1e-6, "{norm}");
    assert!(out.contains("membership=Pass"));
}

#[test]
fn legendre_of_lattice_quadratic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("conj.csv");
    let o = fiv(&[
        "legendre", "--n", "2", "--f", "quadratic:1,1", "--half-width", "2", "--h", "0.1",
        "--dual-half-width", "1", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let g = fiv_core::GridFn::read_csv(std::io::BufReader::new(std::fs::File::open(&out).unwrap())).unwrap();
    for k in 0..g.spec().len() {
        let y = g.spec().point(k);
        let exact = 0.5 * (y[0] * y[0] + y[1] * y[1]);
        assert!((g.values()[k] - exact).abs() < 0.02);
    }
}

#[test]
fn verify_suite_and_tolerance_override() {
    let o = fiv(&["verify", "--suite", "continuity"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("suite,inputs,residual,tolerance,pass\n"));
    let strict = fiv(&["verify", "--suite", "continuity", "--tolerance", "0"]);
    assert_eq!(strict.status.code(), Some(1));
}

fn assert_error(o: &Output, code: i32, tag: &str) {
    assert_eq!(o.status.code(), Some(code));
    let err = stderr(o);
    let line = err.lines().find(|l| l.starts_with("ERROR: ")).expect("error line");
    assert!(line.starts_with(&format!("ERROR: {tag}: ")), "{line}");
}

#[test]
fn validation_errors() {
    assert_error(&fiv(&["norm", "--n", "2", "--i", "2", "--zeta", "triangle:1"]), 2, "config");
    let mut args = FIV_ARGS.to_vec();
    args[12] = "1.5";
    assert_error(&fiv(&args), 2, "config");
    assert_error(&fiv(&["check-forms", "--n", "5"]), 2, "invalid-argument");
    assert_error(&fiv(&["fiv", "--n", "2"]), 2, "usage");
    assert_error(&fiv(&["norm", "--n", "2", "--i", "1", "--zeta", "wave:1"]), 2, "parse");
    assert_error(
        &fiv(&["invert", "--n", "2", "--i", "1", "--support", "1", "--input", "/nonexistent.csv"]),
        2,
        "io",
    );
    assert!(!Path::new("/nonexistent.csv").exists());
}
