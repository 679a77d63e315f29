//! Command dispatch.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use fiv_core::convexfn::{legendre, Quadratic};
use fiv_core::forms::check_identities;
use fiv_core::harness::{
    continuity_suite, invariance_suite, rotation_case, valuation_identity_suite, Affine, CapStudy,
    SuiteReport,
};
use fiv_core::hessmeasure::{fiv_pv, GeometricSchedule};
use fiv_core::template::{default_t_grid, invert, u_profile, TemplateCurve, DEFAULT_GRID_INTERVALS};
use fiv_core::util::{fmt17, parse_f64};
use fiv_core::{make_radial, ConvexFn, Density, Error, GridFn, GridSpec, RadialProfile};

use crate::config::{Command, RunConfig};

/// Failure with a machine-readable code and the process exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: &'static str,
    pub message: String,
    pub exit: u8,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure {
            code: "config",
            message: message.into(),
            exit: 2,
        }
    }

    fn io(path: &Path, e: std::io::Error, exit: u8) -> Self {
        Failure {
            code: "io",
            message: format!("{}: {e}", path.display()),
            exit,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, exit) = match &e {
            Error::Quadrature(_) => ("quadrature", 1),
            Error::InvalidProfile(_) => ("invalid-profile", 2),
            Error::InvalidGrid(_) => ("invalid-grid", 2),
            Error::InvalidDensity(_) => ("invalid-density", 2),
            Error::DimensionMismatch { .. } => ("dimension-mismatch", 2),
            Error::InvalidArgument(_) => ("invalid-argument", 2),
            Error::KernelUnderResolved { .. } => ("kernel-under-resolved", 2),
            Error::NotInConv0Plus(_) => ("not-in-conv0plus", 1),
            Error::HessianUndefined { .. } => ("hessian-undefined", 1),
            Error::TooSmall { .. } => ("too-small", 2),
            Error::Unsupported(_) => ("unsupported", 2),
            Error::Parse(_) => ("parse", 2),
        };
        Failure {
            code,
            message: e.to_string(),
            exit,
        }
    }
}

type Outcome = Result<u8, Failure>;

fn need<T: Clone>(v: &Option<T>, name: &str) -> Result<T, Failure> {
    v.clone()
        .ok_or_else(|| Failure::config(format!("missing required option --{name}")))
}

fn dims(c: &RunConfig) -> Result<(usize, usize), Failure> {
    let n = need(&c.n, "n")?;
    let i = need(&c.i, "i")?;
    if !(1..n).contains(&i) {
        return Err(Failure::config(format!("need 1 <= i <= n-1, got n = {n}, i = {i}")));
    }
    Ok((n, i))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::io(path, e, 2))
}

fn numbers(args: &str, spec: &str) -> Result<Vec<f64>, Failure> {
    args.split(',')
        .map(|s| parse_f64(s).ok_or_else(|| Failure::config(format!("bad number '{s}' in '{spec}'"))))
        .collect()
}

/// `triangle:R`, `power:p,R`, `log:R`, `zero:R` or `csv:path,R`.
pub fn parse_density(spec: &str, n: usize, i: usize) -> Result<Density, Failure> {
    if let Some(rest) = spec.strip_prefix("csv:") {
        let (path, r) = rest
            .rsplit_once(',')
            .ok_or_else(|| Failure::config(format!("density spec '{spec}' needs csv:path,R")))?;
        let r = numbers(r, spec)?[0];
        return Ok(Density::read_csv(open(Path::new(path))?, n, i, r)?);
    }
    Ok(Density::parse(spec, n, i)?)
}

/// `radial:square|quartic|cone|ut:t,delta`, `quadratic:d1,..,dn` or `grid:path`.
pub fn parse_function(spec: &str, n: usize) -> Result<ConvexFn, Failure> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| Failure::config(format!("function spec '{spec}' lacks ':'")))?;
    match kind {
        "radial" => {
            let profile = match rest {
                "square" => RadialProfile::square(),
                "quartic" => RadialProfile::quartic(),
                "cone" => RadialProfile::cone(),
                _ => match rest.strip_prefix("ut:") {
                    Some(args) => match numbers(args, spec)?.as_slice() {
                        [t, delta] => u_profile(*t, *delta)?,
                        _ => return Err(Failure::config(format!("'{spec}' needs ut:t,delta"))),
                    },
                    None => return Err(Failure::config(format!("unknown radial profile '{rest}'"))),
                },
            };
            Ok(make_radial(profile, n)?)
        }
        "quadratic" => {
            let diag = numbers(rest, spec)?;
            if diag.len() != n {
                return Err(Failure::config(format!(
                    "'{spec}' has {} diagonal entries for n = {n}",
                    diag.len()
                )));
            }
            Ok(ConvexFn::quadratic(Quadratic::diagonal(&diag)?))
        }
        "grid" => {
            let g = GridFn::read_csv(open(Path::new(rest))?)?;
            if g.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: g.dim(),
                }
                .into());
            }
            Ok(ConvexFn::grid(g))
        }
        _ => Err(Failure::config(format!("unknown function kind '{kind}'"))),
    }
}

/// Writes to `--out` if given, else to standard output.
fn emit(c: &RunConfig, text: &str) -> Result<(), Failure> {
    match &c.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::io(path, e, 1)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::io(Path::new("<stdout>"), e, 1))
        }
    }
}

pub fn run(c: &RunConfig) -> Outcome {
    let command = need(&c.command, "command")?;
    if let Some(r) = c.ratio {
        if !(r > 0.0 && r < 1.0) {
            return Err(Failure::config(format!("ratio {r} must lie in (0, 1)")));
        }
    }
    match command {
        Command::Fiv => run_fiv(c),
        Command::Template => run_template(c),
        Command::Invert => run_invert(c),
        Command::CheckForms => run_check_forms(c),
        Command::Verify => run_verify(c),
        Command::Norm => run_norm(c),
        Command::Legendre => run_legendre(c),
    }
}

fn run_fiv(c: &RunConfig) -> Outcome {
    let (n, i) = dims(c)?;
    let d = parse_density(&need(&c.zeta, "zeta")?, n, i)?;
    let f = parse_function(&need(&c.f, "f")?, n)?;
    let schedule = GeometricSchedule::new(
        c.eps0.unwrap_or(d.support() / 10.0),
        c.ratio.unwrap_or(0.5),
        c.count.unwrap_or(8),
    )?;
    let report = fiv_pv(&f, &d, i, &schedule.radii())?;
    emit(c, &report.to_csv_string())?;
    Ok(0)
}

fn run_template(c: &RunConfig) -> Outcome {
    let (n, i) = dims(c)?;
    let d = parse_density(&need(&c.zeta, "zeta")?, n, i)?;
    let intervals = c.intervals.unwrap_or(DEFAULT_GRID_INTERVALS);
    if intervals < 2 {
        return Err(Failure::config("intervals must be at least 2"));
    }
    let curve = TemplateCurve::from_density(&d, &default_t_grid(d.support(), intervals))?;
    emit(c, &curve.to_csv_string())?;
    Ok(0)
}

fn run_invert(c: &RunConfig) -> Outcome {
    let (n, i) = dims(c)?;
    let input = need(&c.input, "input")?;
    let support = need(&c.support, "support")?;
    let curve = TemplateCurve::read_csv(open(&input)?, n, i, support)?;
    emit(c, &invert(&curve)?.to_csv_string())?;
    Ok(0)
}

fn run_check_forms(c: &RunConfig) -> Outcome {
    let n = need(&c.n, "n")?;
    let report = check_identities(n)?;
    emit(c, &format!("{report}\n"))?;
    Ok(if report.all_pass() { 0 } else { 1 })
}

fn run_norm(c: &RunConfig) -> Outcome {
    let (n, i) = dims(c)?;
    let d = parse_density(&need(&c.zeta, "zeta")?, n, i)?;
    let r = d.norm()?;
    let m = d.membership()?;
    emit(
        c,
        &format!(
            "norm={}\nsup_eta={}\nsup_rho={}\nmembership={:?}\n",
            fmt17(r.norm),
            fmt17(r.sup_eta),
            fmt17(r.sup_rho),
            m.verdict
        ),
    )?;
    Ok(0)
}

fn run_legendre(c: &RunConfig) -> Outcome {
    let g = match (&c.input, &c.f) {
        (Some(path), None) => GridFn::read_csv(open(path)?)?,
        (None, Some(spec)) => {
            let n = need(&c.n, "n")?;
            let f = parse_function(spec, n)?;
            let spec = GridSpec::new(n, c.half_width.unwrap_or(1.0), c.h.unwrap_or(0.05))?;
            f.to_grid(spec)?
        }
        _ => return Err(Failure::config("legendre needs exactly one of --input and --f")),
    };
    let dual = GridSpec::new(
        g.dim(),
        c.dual_half_width.unwrap_or(g.spec().half_width()),
        c.dual_h.unwrap_or(g.h()),
    )?;
    let conj = legendre(&g, &dual)?;
    emit(c, &conj.with_sentinel().to_csv_string())?;
    Ok(0)
}

fn verify_suites(c: &RunConfig, which: &str) -> Result<Vec<SuiteReport>, Failure> {
    let n = c.n.unwrap_or(2);
    let i = c.i.unwrap_or(1);
    if !(1..n).contains(&i) {
        return Err(Failure::config(format!("need 1 <= i <= n-1, got n = {n}, i = {i}")));
    }
    let d = parse_density(c.zeta.as_deref().unwrap_or("triangle:1"), n, i)?;
    let square = make_radial(RadialProfile::square(), n)?;
    let mut out = Vec::new();
    let all = which == "all";
    if all || which == "valuation" {
        let mut e1 = vec![0.0; n];
        e1[0] = 1.0;
        let study = CapStudy {
            base: square.clone(),
            l1: Affine::new(e1.clone(), -0.3),
            l2: Affine::new(e1.iter().map(|v| -v).collect(), -0.3),
            half_width: 2.0 * d.support(),
            h0: 0.04 * d.support(),
            levels: 3,
            density: d.clone(),
            i,
            eps_floor: 0.0,
        };
        out.push(valuation_identity_suite(&study)?);
    }
    if all || which == "invariance" {
        let quartic = make_radial(RadialProfile::square().sum(&RadialProfile::quartic()), n)?;
        let mut r = invariance_suite(&[square.clone(), quartic], std::slice::from_ref(&d), i)?;
        if n == 2 {
            let h = 0.02 * d.support();
            let src = GridSpec::new(2, 2.2 * d.support(), h)?;
            let g = GridFn::sample(src, |x| {
                0.5 * x[0] * x[0] + 1.5 * x[1] * x[1] + 0.1 * (x[0] + 0.5 * x[1]).powi(4)
            });
            r.cases.push(rotation_case(
                &ConvexFn::grid(g),
                &d,
                i,
                h,
                1.5 * d.support(),
                std::f64::consts::PI / 6.0,
            )?);
        }
        out.push(r);
    }
    if all || which == "continuity" {
        out.push(continuity_suite(&d)?);
    }
    if out.is_empty() {
        return Err(Failure::config(format!(
            "unknown suite '{which}' (valuation, invariance, continuity, all)"
        )));
    }
    Ok(out)
}

fn run_verify(c: &RunConfig) -> Outcome {
    let which = c.suite.clone().unwrap_or_else(|| "all".into());
    let mut reports = verify_suites(c, &which)?;
    if let Some(tol) = c.tolerance {
        if tol.is_nan() || tol < 0.0 {
            return Err(Failure::config(format!("tolerance {tol} must be >= 0")));
        }
        for r in &mut reports {
            for case in &mut r.cases {
                case.tolerance = tol;
                case.pass = case.residual <= tol;
            }
        }
    }
    let text: String = reports.iter().map(|r| r.to_csv_string()).collect();
    emit(c, &text)?;
    for r in &reports {
        eprintln!("{}", r.summary());
    }
    Ok(if reports.iter().all(|r| r.all_pass()) { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn function_specs() {
        assert_eq!(parse_function("radial:square", 2).unwrap().dim(), 2);
        assert!(parse_function("radial:ut:0.5,0.01", 3).is_ok());
        assert!(parse_function("quadratic:1,2", 2).is_ok());
        assert_eq!(parse_function("quadratic:1,2", 3).unwrap_err().exit, 2);
        assert_eq!(parse_function("radial:banana", 2).unwrap_err().code, "config");
        assert_eq!(parse_function("quadratic:1,-2", 2).unwrap_err().exit, 2);
    }

    #[test]
    fn density_specs() {
        assert!(parse_density("power:0.5,1", 2, 1).is_ok());
        assert_eq!(parse_density("wave:1", 2, 1).unwrap_err().code, "parse");
    }

    #[test]
    fn validation_errors_exit_2() {
        let c = RunConfig {
            command: Some(Command::Norm),
            n: Some(2),
            i: Some(2),
            zeta: Some("triangle:1".into()),
            ..Default::default()
        };
        assert_eq!(run(&c).unwrap_err().exit, 2);
        let c = RunConfig {
            command: Some(Command::Fiv),
            ratio: Some(1.5),
            ..Default::default()
        };
        assert_eq!(run(&c).unwrap_err().exit, 2);
    }
}
