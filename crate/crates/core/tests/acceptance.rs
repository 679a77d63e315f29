//! Acceptance criteria, one line per criterion.
//!
//! Runs without the libtest harness so every line is printed. The process
//! exits nonzero if a criterion fails, except those listed in `UNATTAINABLE`,
//! which must fail in the way their analysis predicts.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fiv_core::convexfn::{legendre, legendre_brute, Quadratic};
use fiv_core::density::Density;
use fiv_core::forms::{check_identities, q, Q};
use fiv_core::harness::{invariance_suite, rotation_case, valuation_identity_suite, Affine, CapStudy};
use fiv_core::hessmeasure::{bound_check, det_expansion_check, fiv_pv, phi_integral, GeometricSchedule, Region, Weight};
use fiv_core::template::{
    default_t_grid, roundtrip_with, template_numeric, template_value, TailSign, DEFAULT_GRID_INTERVALS,
};
use fiv_core::{make_radial, ConvexFn, GridFn, GridSpec, RadialProfile, SymMatrix};

/// Criteria that cannot be met as stated; see `regularization`.
const UNATTAINABLE: &[u32] = &[12];

struct Outcome {
    pass: bool,
    detail: String,
    /// For unattainable criteria: the failure matches its analysis.
    explained: bool,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
        explained: false,
    }
}

fn square(n: usize) -> ConvexFn {
    make_radial(RadialProfile::square(), n).unwrap()
}

fn radial_oracle() -> Outcome {
    let start = Instant::now();
    let d = Density::triangle(2, 1, 1.0).unwrap();
    let v = phi_integral(&square(2), &Weight::density(&d), 1, Region::ball(1.0).unwrap()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let err = (v - 2.0 * PI / 3.0).abs();
    outcome(err <= 1e-6 && secs < 1.0, format!("V={v:.12} err={err:.2e} time={secs:.3}s"))
}

fn singular_pv() -> Outcome {
    let d = Density::power(2, 1, 0.5, 1.0).unwrap();
    let schedule = GeometricSchedule::new(0.1, 0.5, 8).unwrap().radii();
    let r = fiv_pv(&square(2), &d, 1, &schedule).unwrap();
    let err = (r.extrapolated - 16.0 * PI / 15.0).abs();
    let order_ok = (1.3..=1.7).contains(&r.order_estimate);
    outcome(
        err <= 1e-4 && order_ok && r.converged,
        format!("V={:.9} err={err:.2e} order={:.4}", r.extrapolated, r.order_estimate),
    )
}

fn divergence() -> Outcome {
    let d = Density::power(2, 1, 1.0, 1.0).unwrap();
    let schedule = GeometricSchedule::new(0.1, 0.5, 8).unwrap().radii();
    let cone = make_radial(RadialProfile::cone(), 2).unwrap();
    let r = fiv_pv(&cone, &d, 1, &schedule).unwrap();
    // against |x|^2/2 the Jacobian r cancels the singularity and the values converge
    let smooth = fiv_pv(&square(2), &d, 1, &schedule).unwrap();
    outcome(
        !r.converged,
        format!(
            "f=|x| converged={} last={:.6}; f=|x|^2/2 converged={} to {:.6}",
            r.converged,
            r.values.last().unwrap(),
            smooth.converged,
            smooth.extrapolated
        ),
    )
}

fn template_closed_form() -> Outcome {
    let d = Density::triangle(2, 1, 1.0).unwrap();
    let mut worst_closed: f64 = 0.0;
    let mut worst_numeric: f64 = 0.0;
    for t in [0.0, 0.25, 0.5, 0.75] {
        let exact = PI * (1.0 - t * t);
        worst_closed = worst_closed.max((template_value(&d, t).unwrap() - exact).abs());
        worst_numeric = worst_numeric.max((template_numeric(&d, t, 1e-3).unwrap() - exact).abs());
    }
    outcome(
        worst_closed <= 1e-10 && worst_numeric <= 5e-3,
        format!("closed err={worst_closed:.2e} numeric err={worst_numeric:.2e}"),
    )
}

fn inversion() -> Outcome {
    let grid = default_t_grid(1.0, DEFAULT_GRID_INTERVALS);
    let tri = Density::triangle(2, 1, 1.0).unwrap();
    let pow = Density::power(2, 1, 0.5, 1.0).unwrap();
    let a = roundtrip_with(&tri, &grid, 0.01, TailSign::Minus).unwrap();
    let b = roundtrip_with(&pow, &grid, 0.05, TailSign::Minus).unwrap();
    let plus = roundtrip_with(&tri, &grid, 0.01, TailSign::Plus).unwrap();
    outcome(
        a.sup_error <= 1e-6 && b.sup_error <= 1e-4 && plus.sup_error > 1e-6,
        format!(
            "triangle={:.2e} power={:.2e} plus-variant={:.2e} (must exceed 1e-6)",
            a.sup_error, b.sup_error, plus.sup_error
        ),
    )
}

fn exterior() -> Outcome {
    let start = Instant::now();
    let mut total = 0;
    let mut failed = Vec::new();
    for n in 2..=4 {
        let r = check_identities(n).unwrap();
        total += r.checks.len();
        failed.extend(r.failures().iter().map(|c| format!("n={n} {} i={:?}", c.name, c.i)));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failed.is_empty() && secs < 30.0,
        format!("{total} checks, failures={failed:?} time={secs:.2}s"),
    )
}

fn det_expansion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ts: Vec<Q> = (-2..=2).map(|t| q(t, 1)).collect();
    let mut cases = 0;
    let mut bad = 0;
    for _ in 0..50 {
        let a = SymMatrix::<Q>::from_fn(4, |_, _| q(rng.gen_range(-9..=9), rng.gen_range(1..=7)));
        for c in det_expansion_check(&a, &ts).cases {
            cases += 1;
            if c.determinant != c.expansion {
                bad += 1;
            }
        }
    }
    outcome(bad == 0 && cases == 250, format!("{cases} exact cases, {bad} mismatches"))
}

fn invariance() -> Outcome {
    let d2 = vec![
        Density::triangle(2, 1, 1.0).unwrap(),
        Density::power(2, 1, 0.5, 1.0).unwrap(),
    ];
    let d3 = vec![
        Density::triangle(3, 2, 1.0).unwrap(),
        Density::log(3, 2, 1.0).unwrap(),
    ];
    let quartic = make_radial(RadialProfile::square().sum(&RadialProfile::quartic()), 2).unwrap();
    let r2 = invariance_suite(&[square(2), quartic], &d2, 1).unwrap();
    let r3 = invariance_suite(&[square(3)], &d3, 2).unwrap();
    let worst = |r: &fiv_core::harness::SuiteReport, key: &str| {
        r.cases
            .iter()
            .filter(|c| c.inputs.starts_with(key))
            .fold(0.0f64, |a, c| a.max(c.residual))
    };
    let shift = worst(&r2, "shift").max(worst(&r3, "shift"));
    let scale = worst(&r2, "scale").max(worst(&r3, "scale"));

    let h = 0.02;
    let src = GridSpec::new(2, 2.2, h).unwrap();
    let g = GridFn::sample(src, |x| {
        0.5 * x[0] * x[0] + 1.5 * x[1] * x[1] + 0.1 * (x[0] + 0.5 * x[1]).powi(4)
    });
    let f = ConvexFn::grid(g);
    let tri = Density::triangle(2, 1, 1.0).unwrap();
    let rot = rotation_case(&f, &tri, 1, h, 1.5, PI / 6.0).unwrap();
    outcome(
        r2.all_pass() && r3.all_pass() && rot.pass,
        format!(
            "shift={shift:.1e} scale(rel)={scale:.1e} rotation={:.2e} (tol {:.2})",
            rot.residual, rot.tolerance
        ),
    )
}

fn valuation() -> Outcome {
    let study = CapStudy {
        base: square(2),
        l1: Affine::new(vec![1.0, 0.0], -0.3),
        l2: Affine::new(vec![-1.0, 0.0], -0.3),
        half_width: 2.0,
        h0: 0.04,
        levels: 3,
        density: Density::triangle(2, 1, 1.0).unwrap(),
        i: 1,
        eps_floor: 0.0,
    };
    let out = fiv_core::harness::cap_study(&study).unwrap();
    let report = valuation_identity_suite(&study).unwrap();
    let last = out.levels.last().unwrap();
    let residuals: Vec<String> = out.levels.iter().map(|l| format!("{:.1e}", l.residual)).collect();
    outcome(
        out.levels.len() == 3
            && out.refines(1.5)
            && last.residual <= 1e-2 * last.max_term()
            && report.all_pass(),
        format!(
            "residuals={residuals:?} max term={:.4} (ratio test or roundoff floor)",
            last.max_term()
        ),
    )
}

fn bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut violations = 0;
    let mut tightest: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(2..=3);
        let i = rng.gen_range(1..n);
        let support = rng.gen_range(0.5..2.0);
        let d = match rng.gen_range(0..3) {
            0 => Density::triangle(n, i, support),
            1 => Density::power(n, i, rng.gen_range(0.1..0.9) * (n - i) as f64, support),
            _ => Density::log(n, i, support),
        }
        .unwrap();
        let b: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect())
            .collect();
        let a = SymMatrix::from_fn(n, |r, c| (0..n).map(|k| b[r][k] * b[c][k]).sum());
        let lin: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = ConvexFn::quadratic(Quadratic::new(a, lin, rng.gen_range(-1.0..1.0)).unwrap());
        let r = bound_check(&f, &d, i).unwrap();
        if !r.pass {
            violations += 1;
        }
        if r.rhs > 0.0 {
            tightest = tightest.max(r.lhs / r.rhs);
        }
    }
    outcome(violations == 0, format!("100 instances, {violations} violations, max lhs/rhs={tightest:.2e}"))
}

fn legendre_checks() -> Outcome {
    // involution
    let h = 0.05;
    let k = 0.05;
    let primal = GridSpec::new(2, 1.0, h).unwrap();
    let dual = GridSpec::new(2, 1.5, k).unwrap();
    let f = GridFn::sample(primal, |x| 0.5 * x[0] * x[0] + 0.25 * x[1] * x[1] + 0.05 * (x[0] + x[1]).powi(4));
    let fs = legendre(&f, &dual).unwrap();
    let fss = legendre(&fs.grid, &primal).unwrap();
    let mut inv_err: f64 = 0.0;
    for j in 0..primal.len() {
        if fss.is_reliable(j) {
            inv_err = inv_err.max((fss.grid.values()[j] - f.values()[j]).abs());
        }
    }
    let inv_ok = inv_err <= 4.0 * h * h + 4.0 * k * k && fs.reliable_count() > 0;

    // fast path against brute force
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut exact = true;
    for (half, hp, hq) in [(5usize, 0.2, 0.25), (10, 0.1, 0.12), (20, 0.05, 0.06)] {
        let p = GridSpec::from_half(2, half, hp).unwrap();
        let dq = GridSpec::from_half(2, half, hq).unwrap();
        let (a, b, c) = (rng.gen_range(0.2..2.0), rng.gen_range(0.2..2.0), rng.gen_range(-0.5..0.5));
        let g = GridFn::sample(p, |x| a * x[0] * x[0] + b * x[1] * x[1] + c * x[0] + (x[0] - x[1]).abs());
        let fast = legendre(&g, &dq).unwrap();
        let brute = legendre_brute(&g, &dq).unwrap();
        exact &= fast.grid.values() == brute.grid.values() && fast.boundary == brute.boundary;
    }

    // u_1 conjugate
    let hu = 0.02;
    let u = GridFn::sample(GridSpec::new(2, 2.0, hu).unwrap(), |x| (x[0].hypot(x[1]) - 1.0).max(0.0));
    let ud = GridSpec::new(2, 1.0, hu).unwrap();
    let uc = legendre(&u, &ud).unwrap();
    let mut u_err: f64 = 0.0;
    for j in 0..ud.len() {
        let y = ud.point(j);
        let r = y[0].hypot(y[1]);
        if r <= 0.9 {
            u_err = u_err.max((uc.grid.values()[j] - r).abs());
        }
    }
    let u_ok = u_err <= 2.0 * hu;
    outcome(
        inv_ok && exact && u_ok,
        format!(
            "involution err={inv_err:.2e} (tol {:.2e}) fast==brute:{exact} u_1 err={u_err:.2e} (tol {:.2e})",
            4.0 * h * h + 4.0 * k * k,
            2.0 * hu
        ),
    )
}

/// `||zeta - zeta^r|| / ||zeta||` at `r = 2^-12 R`.
fn regularization_ratio(d: &Density) -> f64 {
    let r = d.support() * 2f64.powi(-12);
    let diff = d.combine(1.0, &d.regularize(r).unwrap(), -1.0).unwrap();
    diff.norm().unwrap().norm / d.norm().unwrap().norm
}

/// For `t^-p (1 - t)`, `n - i = 1`, `p = 1/2`: the difference norm is
/// `2 (sqrt r + r^{3/2}/3)` and `||zeta|| = 8/3`, a ratio of about `0.0117`.
fn power_half_prediction(r: f64) -> f64 {
    2.0 * (r.sqrt() + r.powf(1.5) / 3.0) / (8.0 / 3.0)
}

fn regularization() -> Outcome {
    let catalog = vec![
        ("triangle n=2 i=1", Density::triangle(2, 1, 1.0).unwrap()),
        ("triangle n=3 i=2", Density::triangle(3, 2, 1.0).unwrap()),
        ("power p=0.5 n=2 i=1", Density::power(2, 1, 0.5, 1.0).unwrap()),
        ("power p=0.25 n=3 i=1", Density::power(3, 1, 0.25, 1.0).unwrap()),
        ("log n=2 i=1", Density::log(2, 1, 1.0).unwrap()),
        ("zero n=2 i=1", Density::zero(2, 1, 1.0).unwrap()),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    let mut explained = true;
    for (name, d) in &catalog {
        let ratio = if d.norm().unwrap().norm == 0.0 { 0.0 } else { regularization_ratio(d) };
        let ok = ratio <= 1e-3;
        pass &= ok;
        if *name == "power p=0.5 n=2 i=1" {
            let predicted = power_half_prediction(2f64.powi(-12));
            explained &= ((ratio - predicted) / predicted).abs() < 1e-3;
            parts.push(format!("{name}: {ratio:.3e} (predicted {predicted:.3e})"));
        } else {
            if !ok {
                explained = false;
            }
            parts.push(format!("{name}: {ratio:.3e}"));
        }
    }
    Outcome {
        pass,
        detail: format!(
            "{}; power densities decay like r^(n-i-p), too slowly at this r",
            parts.join(", ")
        ),
        explained: explained && !pass,
    }
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        (1, "radial oracle", radial_oracle),
        (2, "singular principal value", singular_pv),
        (3, "divergence detection", divergence),
        (4, "template closed form", template_closed_form),
        (5, "inversion round trip", inversion),
        (6, "exterior identities", exterior),
        (7, "determinant expansion", det_expansion),
        (8, "invariance suite", invariance),
        (9, "valuation identity", valuation),
        (10, "bound check", bound),
        (11, "legendre transform", legendre_checks),
        (12, "regularization", regularization),
    ];
    let mut unexpected = 0;
    for (id, name, run) in criteria {
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let known = UNATTAINABLE.contains(&id);
        let note = match (o.pass, known) {
            (false, true) if o.explained => " [unattainable as stated, failure matches analysis]",
            (false, true) => " [unattainable, but failure does not match analysis]",
            (true, true) => " [expected to be unattainable, now passes]",
            _ => "",
        };
        println!("{tag} criterion {id:>2} {name}: {}{note}", o.detail);
        let ok = if known { !o.pass && o.explained } else { o.pass };
        if !ok {
            unexpected += 1;
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} criteria with unexpected outcome");
        ExitCode::FAILURE
    }
}
