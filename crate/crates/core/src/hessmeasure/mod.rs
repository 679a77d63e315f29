//! Hessian-measure integrals `int w(x) e_i(D^2 f(x)) dx`, truncated functional
//! intrinsic volumes and their principal-value limits.

mod matrix;
mod pv;

pub use matrix::{
    det, det_expansion_check, for_each_subset, DetExpansionCase, DetExpansionReport, Scalar,
    SymMatrix,
};
pub use pv::{fit_power_law, GeometricSchedule, PowerFit, PVReport};

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::convexfn::{grid_hessian, ConvexFn, FnKind, GridFn, RadialProfile};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::quadrature::{compensated_sum, integrate, QuadConfig};
use crate::util::{binomial, norm, unit_ball_volume};

/// Weight `w` in `int w e_i(D^2 f)`.
type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Weight {
    /// `w(x) = g(|x|)`; `breakpoints` are radii where `g` is not smooth.
    Radial {
        g: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        breakpoints: Vec<f64>,
    },
    General(PointFn),
}

impl Weight {
    pub fn radial(g: impl Fn(f64) -> f64 + Send + Sync + 'static, breakpoints: Vec<f64>) -> Self {
        Weight::Radial {
            g: Arc::new(g),
            breakpoints,
        }
    }

    /// `zeta(|x|)`.
    pub fn density(d: &Density) -> Self {
        let d2 = d.clone();
        let mut bps = d.kinks().to_vec();
        bps.push(d.support());
        Weight::radial(move |r| d2.zeta(r), bps)
    }

    pub fn general(w: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Weight::General(Arc::new(w))
    }

    pub fn at(&self, x: &[f64]) -> f64 {
        match self {
            Weight::Radial { g, .. } => g(norm(x)),
            Weight::General(w) => w(x),
        }
    }
}

/// The annulus `eps <= |x| <= r_out`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub eps: f64,
    pub r_out: f64,
}

impl Region {
    pub fn new(eps: f64, r_out: f64) -> Result<Self> {
        if !(eps >= 0.0 && r_out.is_finite() && eps <= r_out) {
            return Err(Error::InvalidArgument(format!(
                "annulus needs 0 <= eps <= r_out, got [{eps}, {r_out}]"
            )));
        }
        Ok(Region { eps, r_out })
    }

    pub fn ball(r_out: f64) -> Result<Self> {
        Self::new(0.0, r_out)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let r = norm(x);
        r >= self.eps && r <= self.r_out
    }
}

fn quad_cfg() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_intervals: 8000,
    }
}

/// `e_i` of the Hessian of `phi(|x|)` at radius `r`, multiplied by `r^{n-1}`.
fn radial_ei_jacobian(p: &RadialProfile, n: usize, i: usize, r: f64) -> f64 {
    if i == 0 {
        return r.powi(n as i32 - 1);
    }
    let d1 = p.deriv1(r);
    let d2 = p.deriv2(r);
    // C(n-1,i) (phi'/r)^i r^{n-1} + C(n-1,i-1) phi'' (phi'/r)^{i-1} r^{n-1}
    let a = binomial(n - 1, i) * d1.powi(i as i32) * r.powi(n as i32 - 1 - i as i32);
    let b = binomial(n - 1, i - 1) * d2 * d1.powi(i as i32 - 1) * r.powi((n - i) as i32);
    a + b
}

/// Breakpoints for a radial integral over `[a, b]`: the given kinks plus a
/// geometric ladder toward the inner radius, where singular weights live.
fn radial_cuts(a: f64, b: f64, kinks: &[f64]) -> Vec<f64> {
    let mut cuts: Vec<f64> = kinks.to_vec();
    if a > 0.0 {
        let mut p = 2.0 * a;
        while p < b {
            cuts.push(p);
            p *= 2.0;
        }
    } else {
        let mut p = 0.5 * b;
        for _ in 0..40 {
            cuts.push(p);
            p *= 0.5;
        }
    }
    cuts
}

fn check_i(f: &ConvexFn, i: usize) -> Result<()> {
    if i > f.dim() {
        return Err(Error::InvalidArgument(format!(
            "degree i = {i} exceeds dimension {}",
            f.dim()
        )));
    }
    Ok(())
}

/// `int_{region} w(x) e_i(D^2 f(x)) dx`.
///
/// Dispatch: radial profile with radial weight reduces to one radial integral;
/// a constant Hessian factors out; grid functions use a node sum; other
/// analytic functions use nested polar quadrature (`n <= 3`).
pub fn phi_integral(f: &ConvexFn, w: &Weight, i: usize, region: Region) -> Result<f64> {
    check_i(f, i)?;
    let n = f.dim();
    if region.eps == region.r_out {
        return Ok(0.0);
    }
    if let (Some(p), Weight::Radial { g, breakpoints }) = (f.hessian_profile(), w) {
        let mut kinks = p.kinks().to_vec();
        kinks.extend(breakpoints);
        let cuts = radial_cuts(region.eps, region.r_out, &kinks);
        let v = integrate(
            |r| g(r) * radial_ei_jacobian(&p, n, i, r),
            region.eps,
            region.r_out,
            &cuts,
            quad_cfg(),
        )?;
        return Ok(n as f64 * unit_ball_volume(n) * v.value);
    }
    if let Some(a) = f.constant_hessian() {
        let e = a.elem_sym(i);
        let mass = weight_mass(w, n, region)?;
        return Ok(e * mass);
    }
    if let Some(g) = f.as_grid() {
        return Ok(phi_integral_grid(g, w, i, region)?.value);
    }
    polar_integral(n, region, |x| w.at(x) * f.hess(x).elem_sym(i))
}

/// `int_{region} w dx`.
pub fn weight_mass(w: &Weight, n: usize, region: Region) -> Result<f64> {
    match w {
        Weight::Radial { g, breakpoints } => {
            let cuts = radial_cuts(region.eps, region.r_out, breakpoints);
            let v = integrate(
                |r| g(r) * r.powi(n as i32 - 1),
                region.eps,
                region.r_out,
                &cuts,
                quad_cfg(),
            )?;
            Ok(n as f64 * unit_ball_volume(n) * v.value)
        }
        Weight::General(g) => polar_integral(n, region, |x| g(x)),
    }
}

/// Nested adaptive quadrature in polar coordinates.
fn polar_integral(n: usize, region: Region, h: impl Fn(&[f64]) -> f64 + Sync) -> Result<f64> {
    let inner = QuadConfig {
        abs_tol: 1e-12,
        rel_tol: 1e-11,
        max_intervals: 2000,
    };
    let outer = QuadConfig {
        abs_tol: 1e-11,
        rel_tol: 1e-10,
        max_intervals: 2000,
    };
    let (a, b) = (region.eps, region.r_out);
    let cuts = radial_cuts(a, b, &[]);
    let err = std::cell::Cell::new(None);
    let record = |e: Error| {
        if err.take().is_none() {
            err.set(Some(e));
        }
    };
    let value = match n {
        1 => integrate(|r| h(&[r]) + h(&[-r]), a, b, &cuts, outer)?.value,
        2 => {
            integrate(
                |r| {
                    let ring = integrate(
                        |th| h(&[r * th.cos(), r * th.sin()]),
                        0.0,
                        2.0 * PI,
                        &[],
                        inner,
                    );
                    match ring {
                        Ok(v) => r * v.value,
                        Err(e) => {
                            record(e.into());
                            f64::NAN
                        }
                    }
                },
                a,
                b,
                &cuts,
                outer,
            )?
            .value
        }
        3 => {
            integrate(
                |r| {
                    let shell = integrate(
                        |ph| {
                            let (s, c) = ph.sin_cos();
                            let ring = integrate(
                                |th| h(&[r * s * th.cos(), r * s * th.sin(), r * c]),
                                0.0,
                                2.0 * PI,
                                &[],
                                inner,
                            );
                            ring.map(|v| v.value * s).unwrap_or(f64::NAN)
                        },
                        0.0,
                        PI,
                        &[],
                        inner,
                    );
                    match shell {
                        Ok(v) => r * r * v.value,
                        Err(e) => {
                            record(e.into());
                            f64::NAN
                        }
                    }
                },
                a,
                b,
                &cuts,
                outer,
            )?
            .value
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "non-radial quadrature in dimension {n}"
            )))
        }
    };
    match err.take() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// Node sum over a lattice function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridIntegral {
    pub value: f64,
    pub cells: usize,
    /// Cells with a negative lattice second difference (treated as kink cells).
    pub flagged: usize,
}

/// Midpoint sum of `w e_i(H_h)` over interior nodes in the region, with `H_h`
/// the central-difference Hessian. Kink cells are flagged but keep full weight.
pub fn phi_integral_grid(g: &GridFn, w: &Weight, i: usize, region: Region) -> Result<GridIntegral> {
    let spec = *g.spec();
    let n = spec.dim();
    if n > 3 {
        return Err(Error::Unsupported(format!("grid quadrature in dimension {n}")));
    }
    if i > n {
        return Err(Error::InvalidArgument(format!("degree {i} exceeds dimension {n}")));
    }
    if region.r_out > spec.half_width() - spec.h() {
        return Err(Error::InvalidGrid(format!(
            "region radius {} leaves no margin inside half-width {}",
            region.r_out,
            spec.half_width()
        )));
    }
    let cell = spec.h().powi(n as i32);
    let terms: Vec<(f64, bool, bool)> = (0..spec.len())
        .into_par_iter()
        .map(|k| {
            let idx = spec.unravel(k);
            if !spec.is_interior(&idx, 1) {
                return (0.0, false, false);
            }
            let x = spec.point(k);
            if !region.contains(&x) {
                return (0.0, false, false);
            }
            let hess = grid_hessian(g, &idx);
            let scale = hess.max_abs_entry().max(1.0);
            let bad = g
                .directional_second_differences(&idx)
                .iter()
                .any(|&d| d < -1e-6 * scale);
            (w.at(&x) * hess.elem_sym(i) * cell, true, bad)
        })
        .collect();
    let cells = terms.iter().filter(|t| t.1).count();
    let flagged = terms.iter().filter(|t| t.2).count();
    if cells > 0 && flagged * 100 > cells {
        return Err(Error::HessianUndefined {
            bad: flagged,
            total: cells,
        });
    }
    Ok(GridIntegral {
        value: compensated_sum(terms.iter().map(|t| t.0)),
        cells,
        flagged,
    })
}

fn check_density(f: &ConvexFn, d: &Density, i: usize) -> Result<()> {
    if d.n() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: d.n(),
        });
    }
    if d.i() != i {
        return Err(Error::InvalidArgument(format!(
            "density built for i = {} used with i = {i}",
            d.i()
        )));
    }
    Ok(())
}

/// `int_{|x| >= eps} zeta(|x|) e_i(D^2 f) dx`.
pub fn fiv_truncated(f: &ConvexFn, d: &Density, i: usize, eps: f64) -> Result<f64> {
    check_density(f, d, i)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("truncation radius {eps} must be positive")));
    }
    if eps >= d.support() {
        return Ok(0.0);
    }
    phi_integral(f, &Weight::density(d), i, Region::new(eps, d.support())?)
}

/// Truncated values along `schedule` and their extrapolated limit.
pub fn fiv_pv(f: &ConvexFn, d: &Density, i: usize, schedule: &[f64]) -> Result<PVReport> {
    check_density(f, d, i)?;
    if schedule.len() < 6 {
        return Err(Error::InvalidArgument(format!(
            "schedule needs at least 6 radii, got {}",
            schedule.len()
        )));
    }
    if schedule.windows(2).any(|w| !(w[1] < w[0])) || !(schedule[schedule.len() - 1] > 0.0) {
        return Err(Error::InvalidArgument(
            "schedule must be positive and strictly decreasing".into(),
        ));
    }
    let values = schedule
        .par_iter()
        .map(|&e| fiv_truncated(f, d, i, e))
        .collect::<Result<Vec<f64>>>()?;
    Ok(PVReport::from_values(schedule.to_vec(), values))
}

/// Default schedule: `eps0 = R/10`, ratio `1/2`, 8 radii.
pub fn default_schedule(d: &Density) -> Vec<f64> {
    GeometricSchedule::new(d.support() / 10.0, 0.5, 8)
        .expect("valid default")
        .radii()
}

/// One-sided check of `|V| <= 2^{3i+1} n omega_n C(n,i) (sup_{|x|<=R+1}|f|)^i ||zeta||`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    /// Same bound without the binomial factor.
    pub rhs_without_binomial: f64,
    pub sup_f: f64,
    pub norm: f64,
    pub pass: bool,
    pub pass_without_binomial: bool,
}

pub fn bound_check(f: &ConvexFn, d: &Density, i: usize) -> Result<BoundReport> {
    check_density(f, d, i)?;
    let pv = fiv_pv(f, d, i, &default_schedule(d))?;
    let lhs = if pv.extrapolated.is_finite() {
        pv.extrapolated.abs()
    } else {
        pv.values.last().copied().unwrap_or(0.0).abs()
    };
    let n = f.dim();
    let (sup_f, _) = f.sup_abs_on_ball(d.support() + 1.0);
    let norm = d.norm()?.norm;
    let base = 2f64.powi(3 * i as i32 + 1) * n as f64 * unit_ball_volume(n) * sup_f.powi(i as i32) * norm;
    let rhs = base * binomial(n, i);
    Ok(BoundReport {
        lhs,
        rhs,
        rhs_without_binomial: base,
        sup_f,
        norm,
        pass: lhs <= rhs,
        pass_without_binomial: lhs <= base,
    })
}

/// [`bound_check`] after subtracting the first-order Taylor polynomial at 0.
pub fn bound_check_shifted(f: &ConvexFn, d: &Density, i: usize) -> Result<BoundReport> {
    let origin = vec![0.0; f.dim()];
    let slope: Vec<f64> = f.grad(&origin).iter().map(|g| -g).collect();
    let g = f.shifted(slope, -f.eval(&origin))?;
    bound_check(&g, d, i)
}

/// True if `f` carries a Hessian the radial fast path can use.
pub fn has_radial_path(f: &ConvexFn) -> bool {
    f.hessian_profile().is_some() || matches!(f.kind(), FnKind::Quadratic(_))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convexfn::{make_radial, Quadratic};

    fn square(n: usize) -> ConvexFn {
        make_radial(RadialProfile::square(), n).unwrap()
    }

    #[test]
    fn radial_triangle_oracle() {
        let d = Density::triangle(2, 1, 1.0).unwrap();
        let v = phi_integral(&square(2), &Weight::density(&d), 1, Region::ball(1.0).unwrap()).unwrap();
        // 2 * 2 pi * int_0^1 (1 - r) r dr
        assert!((v - 2.0 * PI / 3.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn top_degree_gives_weight_mass() {
        // bump of mass m: w(x) = max(0, 1 - |x|^2)^2 has mass pi/3 in 2D
        let w = Weight::general(|x: &[f64]| (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0).powi(2));
        let v = phi_integral(&square(2), &w, 2, Region::ball(1.0).unwrap()).unwrap();
        assert!((v - PI / 3.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn constant_trace() {
        let f = ConvexFn::quadratic(Quadratic::diagonal(&[1.0, 4.0]).unwrap());
        let w = Weight::general(|x: &[f64]| (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0).powi(2));
        let v = phi_integral(&f, &w, 1, Region::ball(1.0).unwrap()).unwrap();
        assert!((v - 5.0 * PI / 3.0).abs() < 1e-9);
    }

    #[test]
    fn polar_path_matches_radial_path() {
        struct Quartic;
        impl crate::convexfn::SmoothConvex for Quartic {
            fn dim(&self) -> usize {
                2
            }
            fn eval(&self, x: &[f64]) -> f64 {
                (x[0] * x[0] + x[1] * x[1]).powi(2)
            }
            fn grad(&self, x: &[f64]) -> Vec<f64> {
                let s = 4.0 * (x[0] * x[0] + x[1] * x[1]);
                vec![s * x[0], s * x[1]]
            }
            fn hess(&self, x: &[f64]) -> SymMatrix {
                let r2 = x[0] * x[0] + x[1] * x[1];
                SymMatrix::from_fn(2, |i, j| {
                    8.0 * x[i] * x[j] + if i == j { 4.0 * r2 } else { 0.0 }
                })
            }
        }
        let d = Density::triangle(2, 1, 1.0).unwrap();
        let a = ConvexFn::analytic(Arc::new(Quartic));
        let b = make_radial(RadialProfile::quartic(), 2).unwrap();
        let w = Weight::density(&d);
        let r = Region::new(0.1, 1.0).unwrap();
        let va = phi_integral(&a, &w, 1, r).unwrap();
        let vb = phi_integral(&b, &w, 1, r).unwrap();
        assert!((va - vb).abs() < 1e-8 * vb.abs(), "{va} {vb}");
    }

    #[test]
    fn truncated_power_oracle() {
        let d = Density::power(2, 1, 0.5, 1.0).unwrap();
        let v = fiv_truncated(&square(2), &d, 1, 0.01).unwrap();
        let anti = |e: f64| 2.0 / 3.0 * e.powf(1.5) - 0.4 * e.powf(2.5);
        let exact = 4.0 * PI * (anti(1.0) - anti(0.01));
        assert!((v - exact).abs() < 1e-11, "{v} {exact}");
        assert_eq!(fiv_truncated(&square(2), &d, 1, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn grid_path_close_to_radial() {
        use crate::convexfn::GridSpec;
        let d = Density::triangle(2, 1, 1.0).unwrap();
        let h = 0.02;
        let g = GridFn::sample(GridSpec::new(2, 1.5, h).unwrap(), |x| 0.5 * (x[0] * x[0] + x[1] * x[1]) + x[0].powi(4));
        let grid = phi_integral_grid(&g, &Weight::density(&d), 1, Region::ball(1.0).unwrap()).unwrap();
        // radial part 2 pi/3 plus int zeta * 12 x^2
        let extra = 12.0 * integrate(|r| (1.0 - r) * r.powi(3) * PI, 0.0, 1.0, &[], quad_cfg()).unwrap().value;
        let exact = 2.0 * PI / 3.0 + extra;
        assert!((grid.value - exact).abs() < 5.0 * h * h * exact, "{} {exact}", grid.value);
        assert_eq!(grid.flagged, 0);
    }

    #[test]
    fn indefinite_grid_rejected() {
        use crate::convexfn::GridSpec;
        let g = GridFn::sample(GridSpec::new(2, 1.5, 0.05).unwrap(), |x| x[0] * x[0] - x[1] * x[1]);
        let w = Weight::radial(|_| 1.0, vec![]);
        assert!(matches!(
            phi_integral_grid(&g, &w, 1, Region::ball(1.0).unwrap()),
            Err(Error::HessianUndefined { .. })
        ));
    }

    #[test]
    fn bound_check_examples() {
        let d = Density::triangle(2, 1, 1.0).unwrap();
        let zero = ConvexFn::quadratic(Quadratic::diagonal(&[0.0, 0.0]).unwrap());
        let r = bound_check(&zero, &d, 1).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.pass);
        let r = bound_check(&square(2), &d, 1).unwrap();
        assert!((r.lhs - 2.0 * PI / 3.0).abs() < 1e-6);
        assert!(r.pass && r.pass_without_binomial);
    }
}
