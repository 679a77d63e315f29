//! End-to-end property suites: valuation identity on cap families,
//! invariances and continuity along convergent sequences.

use std::io::Write;

use rayon::prelude::*;

use crate::convexfn::{make_radial, mollify, ConvexFn, GridFn, GridSpec, RadialProfile};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::hessmeasure::{default_schedule, fiv_pv, phi_integral_grid, Region, Weight};
use crate::template::{template_numeric, template_value};
use crate::util::fmt17;

#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub inputs: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Case {
    pub fn new(inputs: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Case {
            inputs: inputs.into(),
            residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: String,
    pub cases: Vec<Case>,
    /// Inputs that were not run, with the reason.
    pub skipped: Vec<String>,
}

impl SuiteReport {
    pub fn new(name: impl Into<String>) -> Self {
        SuiteReport {
            name: name.into(),
            cases: Vec::new(),
            skipped: Vec::new(),
        }
    }

    pub fn passed(&self) -> usize {
        self.cases.iter().filter(|c| c.pass).count()
    }

    pub fn failed(&self) -> usize {
        self.cases.len() - self.passed()
    }

    pub fn all_pass(&self) -> bool {
        self.failed() == 0
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: {} passed, {} failed, {} skipped",
            self.name,
            self.passed(),
            self.failed(),
            self.skipped.len()
        )
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "suite,inputs,residual,tolerance,pass")?;
        for c in &self.cases {
            writeln!(
                w,
                "{},\"{}\",{},{},{}",
                self.name,
                c.inputs.replace('"', "'"),
                fmt17(c.residual),
                fmt17(c.tolerance),
                c.pass
            )?;
        }
        for s in &self.skipped {
            writeln!(w, "# skipped: {s}")?;
        }
        writeln!(w, "# {}", self.summary())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf8")
    }
}

/// Affine function `<slope, x> + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub slope: Vec<f64>,
    pub offset: f64,
}

impl Affine {
    pub fn new(slope: Vec<f64>, offset: f64) -> Self {
        Affine { slope, offset }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.slope.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.offset
    }
}

/// Cap family `f = F v l1`, `h = F v l2` over a lattice, refined `levels`
/// times with `h` and `sigma = 4h` halved together.
#[derive(Clone)]
pub struct CapStudy {
    pub base: ConvexFn,
    pub l1: Affine,
    pub l2: Affine,
    pub half_width: f64,
    pub h0: f64,
    pub levels: usize,
    pub density: Density,
    pub i: usize,
    /// Inner radius excluded from the integral, for singular densities.
    pub eps_floor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapLevel {
    pub h: f64,
    pub sigma: f64,
    /// `V(f v h), V(f ^ h), V(f), V(h)`.
    pub values: [f64; 4],
    pub residual: f64,
    pub overlap_nodes: usize,
}

impl CapLevel {
    pub fn max_term(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapOutcome {
    pub levels: Vec<CapLevel>,
    pub skipped: Vec<String>,
}

impl CapOutcome {
    /// Residual ratios between consecutive levels.
    pub fn ratios(&self) -> Vec<f64> {
        self.levels
            .windows(2)
            .map(|w| w[0].residual / w[1].residual)
            .collect()
    }

    /// Each refinement shrinks the residual by `factor`, unless the residual
    /// already sits at the roundoff floor `1e-12` times the largest term.
    pub fn refines(&self, factor: f64) -> bool {
        self.levels.windows(2).all(|w| {
            let floor = 1e-12 * w[1].max_term().max(1.0);
            w[1].residual <= floor || w[0].residual >= factor * w[1].residual
        })
    }
}

fn grid_value(g: &GridFn, d: &Density, i: usize, eps: f64) -> Result<f64> {
    let region = Region::new(eps, d.support())?;
    Ok(phi_integral_grid(g, &Weight::density(d), i, region)?.value)
}

/// Runs the cap study; pairs whose active sets meet are skipped, not failed.
pub fn cap_study(s: &CapStudy) -> Result<CapOutcome> {
    let n = s.base.dim();
    if s.l1.slope.len() != n || s.l2.slope.len() != n || s.density.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: s.l1.slope.len(),
        });
    }
    let mut levels = Vec::new();
    let mut skipped = Vec::new();
    for k in 0..s.levels {
        let h = s.h0 / 2f64.powi(k as i32);
        let sigma = 4.0 * h;
        let spec = GridSpec::new(n, s.half_width, h)?;
        let base = s.base.to_grid(spec)?;
        let l1 = GridFn::sample(spec, |x| s.l1.eval(x));
        let l2 = GridFn::sample(spec, |x| s.l2.eval(x));
        let overlap_nodes = (0..spec.len())
            .filter(|&j| {
                let f = base.values()[j];
                l1.values()[j] > f && l2.values()[j] > f
            })
            .count();
        // l1 = l2 gives f = h, where the identity needs no disjointness
        if overlap_nodes > 0 && s.l1 != s.l2 {
            skipped.push(format!("h={h}: active sets share {overlap_nodes} nodes"));
            continue;
        }
        let f = base.vee(&l1)?;
        let g = base.vee(&l2)?;
        let join = f.vee(&g)?;
        let (meet, meet_convex) = f.wedge(&g)?;
        if !meet_convex {
            skipped.push(format!("h={h}: f ^ h is not convex"));
            continue;
        }
        let fns = [join, meet, f, g];
        let values: Vec<f64> = fns
            .par_iter()
            .map(|g| {
                let m = mollify(g, sigma)?;
                grid_value(&m.grid, &s.density, s.i, s.eps_floor)
            })
            .collect::<Result<_>>()?;
        let values = [values[0], values[1], values[2], values[3]];
        let residual = (values[0] + values[1] - values[2] - values[3]).abs();
        levels.push(CapLevel {
            h,
            sigma,
            values,
            residual,
            overlap_nodes,
        });
    }
    Ok(CapOutcome { levels, skipped })
}

/// Valuation identity `V(f v h) + V(f ^ h) = V(f) + V(h)` on the cap family,
/// one case per level with tolerance 1% of the largest term, plus the
/// chain identity on template pairs `u_s, u_t`.
pub fn valuation_identity_suite(s: &CapStudy) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("valuation");
    let out = cap_study(s)?;
    for l in &out.levels {
        report.cases.push(Case::new(
            format!("cap h={} sigma={}", l.h, l.sigma),
            l.residual,
            1e-2 * l.max_term(),
        ));
    }
    if out.levels.len() >= 2 {
        let ratios: Vec<String> = out
            .levels
            .windows(2)
            .map(|w| {
                if w[1].residual <= 1e-12 * w[1].max_term().max(1.0) {
                    "floor".to_string()
                } else {
                    format!("{:.3}", w[0].residual / w[1].residual)
                }
            })
            .collect();
        report.cases.push(Case::new(
            format!("cap refinement ratios={}", ratios.join("/")),
            if out.refines(1.5) { 0.0 } else { 1.0 },
            0.0,
        ));
    }
    report.skipped = out.skipped;
    if s.density.n() >= 2 {
        // u_s v u_t = u_min(s,t) and u_s ^ u_t = u_max(s,t)
        for (a, b) in [(0.2, 0.6), (0.1, 0.3)] {
            let r = s.density.support();
            let (ta, tb) = (a * r, b * r);
            let (va, vb) = (template_value(&s.density, ta)?, template_value(&s.density, tb)?);
            let join = template_value(&s.density, ta.min(tb))?;
            let meet = template_value(&s.density, ta.max(tb))?;
            let residual = (join + meet - va - vb).abs();
            report
                .cases
                .push(Case::new(format!("chain s={} t={}", a * r, b * r), residual, 1e-12));
        }
    }
    Ok(report)
}

/// Epi-translation and homogeneity over `fs x ds`, each with `fiv_pv` on the
/// default schedule.
pub fn invariance_suite(fs: &[ConvexFn], ds: &[Density], i: usize) -> Result<SuiteReport> {
    let mut jobs = Vec::new();
    for f in fs {
        for d in ds {
            jobs.push((f, d));
        }
    }
    let cases: Vec<Vec<Case>> = jobs
        .par_iter()
        .map(|(f, d)| invariance_cases(f, d, i))
        .collect::<Result<_>>()?;
    let mut report = SuiteReport::new("invariance");
    report.cases = cases.into_iter().flatten().collect();
    Ok(report)
}

fn invariance_cases(f: &ConvexFn, d: &Density, i: usize) -> Result<Vec<Case>> {
    let n = f.dim();
    let schedule = default_schedule(d);
    let base = fiv_pv(f, d, i, &schedule)?.extrapolated;
    let label = format!("f={} zeta={}", f.describe(), d.tag().unwrap_or("custom"));
    let mut out = Vec::new();
    let slope: Vec<f64> = (0..n).map(|k| 0.3 - 0.25 * k as f64).collect();
    let shifted = fiv_pv(&f.shifted(slope, 1.7)?, d, i, &schedule)?.extrapolated;
    out.push(Case::new(
        format!("shift {label}"),
        (shifted - base).abs(),
        1e-12,
    ));
    for t in [0.5, 2.0, 3.0] {
        let scaled = fiv_pv(&f.scaled(t)?, d, i, &schedule)?.extrapolated;
        let expect = t.powi(i as i32) * base;
        let residual = if expect == 0.0 {
            scaled.abs()
        } else {
            ((scaled - expect) / expect).abs()
        };
        out.push(Case::new(format!("scale t={t} {label}"), residual, 1e-9));
    }
    Ok(out)
}

/// `V(f o g)` against `V(f)` for a planar rotation `g` by `angle`, both
/// sampled on a lattice of spacing `h`, mollified with `sigma = 4h`.
/// `f o g` is evaluated through `f` itself, so a grid `f` is interpolated.
pub fn rotation_case(f: &ConvexFn, d: &Density, i: usize, h: f64, half_width: f64, angle: f64) -> Result<Case> {
    if f.dim() != 2 {
        return Err(Error::Unsupported("rotation case is planar".into()));
    }
    let spec = GridSpec::new(2, half_width, h)?;
    let (c, s) = (angle.cos(), angle.sin());
    let plain = GridFn::sample(spec, |x| f.eval(x));
    let rotated = GridFn::sample(spec, |x| f.eval(&[c * x[0] - s * x[1], s * x[0] + c * x[1]]));
    let sigma = 4.0 * h;
    let a = grid_value(&mollify(&plain, sigma)?.grid, d, i, 0.0)?;
    let b = grid_value(&mollify(&rotated, sigma)?.grid, d, i, 0.0)?;
    Ok(Case::new(
        format!("rotate angle={angle} h={h} f={}", f.describe()),
        (a - b).abs(),
        10.0 * h,
    ))
}

/// Continuity along `u_{t, delta}` with `delta = 2^-k`, `k` in `ks`, towards
/// the closed form `mu(u_t)`. Each case allows `2 delta`; a final case
/// requires the error to decrease along the sequence.
pub fn template_continuity(d: &Density, t: f64, ks: &[u32]) -> Result<SuiteReport> {
    let target = template_value(d, t)?;
    let errs: Vec<(f64, f64)> = ks
        .par_iter()
        .map(|&k| {
            let delta = 2f64.powi(-(k as i32));
            Ok((delta, (template_numeric(d, t, delta)? - target).abs()))
        })
        .collect::<Result<_>>()?;
    let mut report = SuiteReport::new("continuity");
    for (delta, e) in &errs {
        report
            .cases
            .push(Case::new(format!("u t={t} delta={delta}"), *e, 2.0 * delta));
    }
    let monotone = errs.windows(2).all(|w| w[1].1 <= w[0].1);
    report
        .cases
        .push(Case::new("u sequence decreasing", if monotone { 0.0 } else { 1.0 }, 0.0));
    Ok(report)
}

/// Continuity along an explicit sequence `f_j -> limit` with known limit value.
/// Errors must decrease and the last must be within `tolerance`.
pub fn sequence_continuity(
    name: &str,
    fs: &[ConvexFn],
    d: &Density,
    i: usize,
    limit: f64,
    tolerance: f64,
) -> Result<Vec<Case>> {
    let schedule = default_schedule(d);
    let errs: Vec<f64> = fs
        .par_iter()
        .map(|f| Ok((fiv_pv(f, d, i, &schedule)?.extrapolated - limit).abs()))
        .collect::<Result<_>>()?;
    let monotone = errs.windows(2).all(|w| w[1] <= w[0]);
    let last = errs.last().copied().unwrap_or(f64::INFINITY);
    Ok(vec![
        Case::new(format!("{name} last of {}", fs.len()), last, tolerance),
        Case::new(format!("{name} decreasing"), if monotone { 0.0 } else { 1.0 }, 0.0),
    ])
}

/// The standard continuity suite for `n = 2, i = 1`: template smoothing,
/// a constant sequence and `|x|^2/2 + |x|^4 / j`.
pub fn continuity_suite(d: &Density) -> Result<SuiteReport> {
    let (n, i) = (d.n(), d.i());
    let mut report = template_continuity(d, 0.5 * d.support(), &[3, 4, 5, 6, 7, 8])?;
    let square = make_radial(RadialProfile::square(), n)?;
    let target = fiv_pv(&square, d, i, &default_schedule(d))?.extrapolated;
    report.cases.extend(sequence_continuity(
        "constant",
        &vec![square.clone(); 3],
        d,
        i,
        target,
        0.0,
    )?);
    let js = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
    let fs: Vec<ConvexFn> = js
        .iter()
        .map(|j| {
            make_radial(
                RadialProfile::square().sum(&RadialProfile::quartic().scaled(1.0 / j)),
                n,
            )
        })
        .collect::<Result<_>>()?;
    report
        .cases
        .extend(sequence_continuity("square+quartic/j", &fs, d, i, target, 0.1)?);
    Ok(report)
}
