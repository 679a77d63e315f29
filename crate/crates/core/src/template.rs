//! The template family `u_t(x) = max(0, |x| - t)`: smoothed profiles, the
//! closed-form values `mu(u_t)`, and inversion of a sampled curve
//! `t -> mu(u_t)` back to a density.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::convexfn::{make_radial, Grade, RadialProfile};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::hessmeasure::{fiv_pv, GeometricSchedule, PVReport};
use crate::quadrature::{compensated_sum, integrate, QuadConfig};
use crate::util::{binomial, fmt17, parse_f64, unit_ball_volume};

/// `C^{1,1}` smoothing of `max(0, r - t)`: zero up to `t`, the parabola
/// `(r - t)^2 / (2 delta)` on `[t, t + delta]`, then `r - t - delta/2`.
pub fn u_profile(t: f64, delta: f64) -> Result<RadialProfile> {
    if !(t >= 0.0 && t.is_finite()) || !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "template profile needs t >= 0 and delta > 0, got t = {t}, delta = {delta}"
        )));
    }
    let e = t + delta;
    Ok(RadialProfile::new(
        format!("u[{t},{delta}]"),
        move |r| {
            if r <= t {
                0.0
            } else if r <= e {
                (r - t) * (r - t) / (2.0 * delta)
            } else {
                r - t - 0.5 * delta
            }
        },
        move |r| {
            if r <= t {
                0.0
            } else if r <= e {
                (r - t) / delta
            } else {
                1.0
            }
        },
        move |r| if r > t && r < e { 1.0 / delta } else { 0.0 },
        Grade::C11,
        vec![t, e],
    ))
}

fn normaliser(n: usize, i: usize) -> f64 {
    unit_ball_volume(n) * binomial(n, i)
}

/// `omega_n C(n,i) (t^{n-i} zeta(t) + (n-i) eta(t))`; 0 for `t > R`, and at
/// `t = 0` the first term is taken as its limit 0.
pub fn template_value(d: &Density, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("template radius {t} must be >= 0")));
    }
    if t > d.support() {
        return Ok(0.0);
    }
    let m = d.codegree();
    let inner = if t == 0.0 {
        m as f64 * d.eta_at_zero()?
    } else {
        t.powi(m as i32) * d.zeta(t) + m as f64 * d.eta(t)?
    };
    Ok(normaliser(d.n(), d.i()) * inner)
}

/// Principal-value FIV of the smoothed template `u_{t,delta}`.
pub fn template_numeric_report(d: &Density, t: f64, delta: f64) -> Result<PVReport> {
    if t > 0.0 && delta > t / 4.0 {
        return Err(Error::InvalidArgument(format!(
            "smoothing width {delta} exceeds t/4 = {}",
            t / 4.0
        )));
    }
    let f = make_radial(u_profile(t, delta)?, d.n())?;
    let eps0 = if t > 0.0 { t / 2.0 } else { delta / 8.0 };
    let schedule = GeometricSchedule::new(eps0, 0.5, 8)?.radii();
    fiv_pv(&f, d, d.i(), &schedule)
}

pub fn template_numeric(d: &Density, t: f64, delta: f64) -> Result<f64> {
    Ok(template_numeric_report(d, t, delta)?.extrapolated)
}

/// Samples of `t -> mu(u_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateCurve {
    pub n: usize,
    pub i: usize,
    pub support: f64,
    pub ts: Vec<f64>,
    pub values: Vec<f64>,
}

/// `R (k/N)^2`, `k = 0..=N`: dense near 0 where singular densities vary fastest.
pub fn default_t_grid(support: f64, intervals: usize) -> Vec<f64> {
    (0..=intervals)
        .map(|k| support * (k as f64 / intervals as f64).powi(2))
        .collect()
}

pub const DEFAULT_GRID_INTERVALS: usize = 4000;

impl TemplateCurve {
    pub fn new(n: usize, i: usize, support: f64, ts: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if ts.len() != values.len() || ts.len() < 2 {
            return Err(Error::InvalidArgument("template curve needs >= 2 samples".into()));
        }
        if ts[0] != 0.0 || ts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "template radii must start at 0 and increase strictly".into(),
            ));
        }
        if n < 2 || i == 0 || i >= n || !(support > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bad curve parameters n = {n}, i = {i}, R = {support}"
            )));
        }
        Ok(TemplateCurve {
            n,
            i,
            support,
            ts,
            values,
        })
    }

    /// Closed-form values of `d` on `ts` (which must start at 0).
    pub fn from_density(d: &Density, ts: &[f64]) -> Result<Self> {
        if ts.first() != Some(&0.0) {
            return Err(Error::InvalidArgument("template radii must start at 0".into()));
        }
        let inside: Vec<f64> = ts[1..].iter().copied().filter(|&t| t <= d.support()).collect();
        let eta = d.eta_table(&inside)?;
        let c = normaliser(d.n(), d.i());
        let m = d.codegree();
        let mut values = Vec::with_capacity(ts.len());
        values.push(template_value(d, 0.0)?);
        for (k, &t) in ts[1..].iter().enumerate() {
            values.push(if k < inside.len() {
                c * (t.powi(m as i32) * d.zeta(t) + m as f64 * eta[k])
            } else {
                0.0
            });
        }
        Self::new(d.n(), d.i(), d.support(), ts.to_vec(), values)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,mu")?;
        for (t, v) in self.ts.iter().zip(&self.values) {
            writeln!(w, "{},{}", fmt17(*t), fmt17(*v))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn read_csv<R: BufRead>(r: R, n: usize, i: usize, support: f64) -> Result<Self> {
        let (ts, values) = read_pairs(r)?;
        Self::new(n, i, support, ts, values)
    }

    /// Largest `|mu(t)|` sampled beyond `R`.
    pub fn tail_magnitude(&self) -> f64 {
        self.ts
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t > self.support)
            .fold(0.0, |a, (_, v)| a.max(v.abs()))
    }
}

fn read_pairs<R: BufRead>(r: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(',');
        match (
            parts.next().and_then(parse_f64),
            parts.next().and_then(parse_f64),
        ) {
            (Some(x), Some(y)) => {
                a.push(x);
                b.push(y);
            }
            _ if lineno == 0 => continue,
            _ => return Err(Error::Parse(format!("line {}: expected two numbers", lineno + 1))),
        }
    }
    Ok((a, b))
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Pchip {
    fn new(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let del: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
        let mut ds = vec![0.0; n];
        if n == 2 {
            ds[0] = del[0];
            ds[1] = del[0];
        } else {
            for k in 1..n - 1 {
                if del[k - 1] * del[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    ds[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
                }
            }
            ds[0] = end_slope(h[0], h[1], del[0], del[1]);
            ds[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        }
        Pchip {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            ds,
        }
    }

    fn segment(&self, k: usize, x: f64) -> f64 {
        let h = self.xs[k + 1] - self.xs[k];
        let s = (x - self.xs[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.ys[k] + h10 * h * self.ds[k] + h01 * self.ys[k + 1] + h11 * h * self.ds[k + 1]
    }
}

/// Three-point one-sided slope, limited to preserve shape.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Sign in front of the tail integral in the inversion formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailSign {
    /// `zeta = (mu/t^{n-i} - (n-i) int_t mu(s)/s^{n-i+1} ds) / (omega_n C(n,i))`.
    Minus,
    /// The same with `+`; kept only to show that it does not invert.
    Plus,
}

/// Recovered density samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Inverted {
    pub ts: Vec<f64>,
    pub zeta_hat: Vec<f64>,
}

impl Inverted {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,zeta_hat")?;
        for (t, z) in self.ts.iter().zip(&self.zeta_hat) {
            writeln!(w, "{},{}", fmt17(*t), fmt17(*z))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("ascii")
    }
}

pub fn invert(curve: &TemplateCurve) -> Result<Inverted> {
    invert_with_sign(curve, TailSign::Minus)
}

/// Invert on every positive sample radius of the curve.
pub fn invert_with_sign(curve: &TemplateCurve, sign: TailSign) -> Result<Inverted> {
    let m = (curve.n - curve.i) as i32;
    let pchip = Pchip::new(&curve.ts, &curve.values);
    let cfg = QuadConfig {
        abs_tol: 1e-14,
        rel_tol: 1e-13,
        max_intervals: 200,
    };
    let k_max = curve.ts.len() - 1;
    // tail pieces int_{t_k}^{t_{k+1}} mu(s) s^{-(m+1)} ds, k >= 1
    let pieces = (1..k_max)
        .into_par_iter()
        .map(|k| {
            let (a, b) = (curve.ts[k], curve.ts[k + 1]);
            integrate(|s| pchip.segment(k, s) / s.powi(m + 1), a, b, &[], cfg).map(|r| r.value)
        })
        .collect::<std::result::Result<Vec<f64>, _>>()?;
    let c = normaliser(curve.n, curve.i);
    let signed = match sign {
        TailSign::Minus => -1.0,
        TailSign::Plus => 1.0,
    };
    let mut zeta_hat = vec![0.0; k_max];
    for k in (1..=k_max).rev() {
        let t = curve.ts[k];
        let tail = compensated_sum(pieces[k - 1..].iter().copied());
        zeta_hat[k - 1] = (curve.values[k] / t.powi(m) + signed * m as f64 * tail) / c;
    }
    Ok(Inverted {
        ts: curve.ts[1..].to_vec(),
        zeta_hat,
    })
}

/// Inverted value at a single radius `t`, interpolating the curve.
pub fn invert_at(curve: &TemplateCurve, t: f64) -> Result<f64> {
    let first = curve.ts[1];
    if t < first {
        return Err(Error::TooSmall { t, first });
    }
    let m = (curve.n - curve.i) as i32;
    let pchip = Pchip::new(&curve.ts, &curve.values);
    let last = *curve.ts.last().expect("nonempty");
    if t >= last {
        return Ok(0.0);
    }
    let k0 = curve.ts.partition_point(|&s| s <= t) - 1;
    let cfg = QuadConfig::default();
    let mut pieces = vec![integrate(
        |s| pchip.segment(k0, s) / s.powi(m + 1),
        t,
        curve.ts[k0 + 1],
        &[],
        cfg,
    )?
    .value];
    for k in k0 + 1..curve.ts.len() - 1 {
        pieces.push(
            integrate(
                |s| pchip.segment(k, s) / s.powi(m + 1),
                curve.ts[k],
                curve.ts[k + 1],
                &[],
                cfg,
            )?
            .value,
        );
    }
    let mu = pchip.segment(k0, t);
    Ok((mu / t.powi(m) - m as f64 * compensated_sum(pieces)) / normaliser(curve.n, curve.i))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundtripReport {
    pub sup_error: f64,
    pub at_t: f64,
    pub lower: f64,
    pub samples: usize,
}

/// `sup |invert(curve(d)) - zeta|` over grid radii in `[lower_frac R, R]`.
pub fn roundtrip_with(d: &Density, ts: &[f64], lower_frac: f64, sign: TailSign) -> Result<RoundtripReport> {
    let curve = TemplateCurve::from_density(d, ts)?;
    let inv = invert_with_sign(&curve, sign)?;
    let lower = lower_frac * d.support();
    let mut report = RoundtripReport {
        sup_error: 0.0,
        at_t: f64::NAN,
        lower,
        samples: 0,
    };
    for (&t, &z) in inv.ts.iter().zip(&inv.zeta_hat) {
        if t < lower || t > d.support() {
            continue;
        }
        report.samples += 1;
        let e = (z - d.zeta(t)).abs();
        if !(e <= report.sup_error) {
            report.sup_error = e;
            report.at_t = t;
        }
    }
    Ok(report)
}

/// Round trip on the default grid over `[0.01 R, R]`.
pub fn roundtrip(d: &Density) -> Result<RoundtripReport> {
    roundtrip_with(
        d,
        &default_t_grid(d.support(), DEFAULT_GRID_INTERVALS),
        0.01,
        TailSign::Minus,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tri() -> Density {
        Density::triangle(2, 1, 1.0).unwrap()
    }

    #[test]
    fn profile_pieces() {
        let p = u_profile(0.5, 0.01).unwrap();
        assert_eq!(p.value(0.3), 0.0);
        assert_eq!(p.deriv1(0.3), 0.0);
        assert!((p.value(0.51) - 0.005).abs() < 1e-15);
        assert!((p.deriv1(0.51) - 1.0).abs() < 1e-12);
        assert!((p.deriv2(0.505) - 100.0).abs() < 1e-12);
        let sup = (0..=2000)
            .map(|k| k as f64 / 1000.0)
            .map(|r| (p.value(r) - (r - 0.5f64).max(0.0)).abs())
            .fold(0.0, f64::max);
        assert!((sup - 0.005).abs() < 1e-12);
    }

    #[test]
    fn flat_region_has_zero_hessian() {
        let f = make_radial(u_profile(0.5, 0.01).unwrap(), 2).unwrap();
        let h = f.hess(&[0.2, -0.1]);
        assert_eq!(h.max_abs_entry(), 0.0);
    }

    #[test]
    fn closed_form_triangle() {
        let d = tri();
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let v = template_value(&d, t).unwrap();
            assert!((v - PI * (1.0 - t * t)).abs() < 1e-12, "t={t}");
        }
        assert_eq!(template_value(&d, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn numeric_matches_closed_form() {
        let d = tri();
        let v = template_numeric(&d, 0.5, 1e-3).unwrap();
        assert!((v - 0.75 * PI).abs() < 5e-3, "{v}");
        let v0 = template_numeric(&d, 0.0, 1e-3).unwrap();
        assert!((v0 - PI).abs() < 5e-3, "{v0}");
        assert!(template_numeric(&d, 1.2, 1e-3).unwrap().abs() < 1e-12);
        assert!(template_numeric(&d, 0.5, 0.2).is_err());
    }

    #[test]
    fn minus_sign_inverts_and_plus_does_not() {
        let d = tri();
        let ts = default_t_grid(1.0, 2000);
        let curve = TemplateCurve::from_density(&d, &ts).unwrap();
        let good = invert(&curve).unwrap();
        let bad = invert_with_sign(&curve, TailSign::Plus).unwrap();
        for (k, &t) in good.ts.iter().enumerate() {
            if t >= 0.01 {
                assert!((good.zeta_hat[k] - (1.0 - t)).abs() < 1e-6, "t={t}");
                assert!((bad.zeta_hat[k] - (1.0 / t - 1.0)).abs() < 1e-6, "t={t}");
            }
        }
    }

    #[test]
    fn zero_curve_zero_density() {
        let ts = default_t_grid(1.0, 100);
        let curve = TemplateCurve::new(2, 1, 1.0, ts.clone(), vec![0.0; ts.len()]).unwrap();
        assert!(invert(&curve).unwrap().zeta_hat.iter().all(|&z| z == 0.0));
    }

    #[test]
    fn invert_at_interpolates_and_rejects_small_t() {
        let d = tri();
        let curve = TemplateCurve::from_density(&d, &default_t_grid(1.0, 400)).unwrap();
        assert!((invert_at(&curve, 0.333).unwrap() - 0.667).abs() < 1e-6);
        assert!(matches!(invert_at(&curve, 1e-9), Err(Error::TooSmall { .. })));
    }

    #[test]
    fn curve_csv_roundtrip() {
        let curve = TemplateCurve::from_density(&tri(), &default_t_grid(1.0, 10)).unwrap();
        let s = curve.to_csv_string();
        assert!(s.starts_with("t,mu\n"));
        let back = TemplateCurve::read_csv(s.as_bytes(), 2, 1, 1.0).unwrap();
        assert_eq!(back, curve);
    }
}
