//! Radial densities `zeta` of the classes `D^n_i` and their derived functions
//! `eta`, `rho`, `Psi`, the norm, regularisation and membership diagnostics.

use std::fmt;
use std::io::BufRead;
use std::sync::Arc;

use crate::convexfn::ScalarFn;
use crate::error::{Error, Result};
use crate::quadrature::{compensated_sum, integrate, QuadConfig};
use crate::util::parse_f64;

/// Uniform samples of `(0, R]` used by the norm, in addition to the geometric grid.
pub const NORM_UNIFORM_POINTS: usize = 2048;
/// Geometric grid `R 2^{-k/4}`, `k = 0..=GEOMETRIC_STEPS`, reaching `2^{-60} R`.
pub const GEOMETRIC_STEPS: usize = 240;

const ETA_TOL: f64 = 1e-12;

#[derive(Clone)]
pub struct Density {
    n: usize,
    i: usize,
    support: f64,
    zeta: ScalarFn,
    /// Points where `zeta` is not smooth; passed to quadrature as breakpoints.
    kinks: Vec<f64>,
    tag: Option<String>,
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density")
            .field("n", &self.n)
            .field("i", &self.i)
            .field("R", &self.support)
            .field("tag", &self.tag)
            .finish()
    }
}

fn check_params(n: usize, i: usize, support: f64) -> Result<()> {
    if n < 2 || i == 0 || i >= n {
        return Err(Error::InvalidDensity(format!(
            "need n >= 2 and 1 <= i <= n-1, got n = {n}, i = {i}"
        )));
    }
    if !(support > 0.0 && support.is_finite()) {
        return Err(Error::InvalidDensity(format!(
            "support bound R = {support} must be positive and finite"
        )));
    }
    Ok(())
}

impl Density {
    /// `zeta` is only consulted on `(0, R]`; it is taken as 0 beyond `R`.
    pub fn new(
        n: usize,
        i: usize,
        support: f64,
        zeta: impl Fn(f64) -> f64 + Send + Sync + 'static,
        kinks: Vec<f64>,
        tag: Option<String>,
    ) -> Result<Self> {
        check_params(n, i, support)?;
        Ok(Density {
            n,
            i,
            support,
            zeta: Arc::new(zeta),
            kinks,
            tag,
        })
    }

    /// `max(0, 1 - t/R)`.
    pub fn triangle(n: usize, i: usize, support: f64) -> Result<Self> {
        Self::new(
            n,
            i,
            support,
            move |t| (1.0 - t / support).max(0.0),
            vec![],
            Some(format!("triangle:{support}")),
        )
    }

    /// `t^{-p} max(0, 1 - t/R)`; a member of `D^n_i` iff `p < n - i`.
    pub fn power(n: usize, i: usize, p: f64, support: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidDensity(format!("power exponent {p} must be positive")));
        }
        Self::new(
            n,
            i,
            support,
            move |t| t.powf(-p) * (1.0 - t / support).max(0.0),
            vec![],
            Some(format!("power:{p},{support}")),
        )
    }

    /// `log(R/t) max(0, 1 - t/R)`.
    pub fn log(n: usize, i: usize, support: f64) -> Result<Self> {
        Self::new(
            n,
            i,
            support,
            move |t| (support / t).ln() * (1.0 - t / support).max(0.0),
            vec![],
            Some(format!("log:{support}")),
        )
    }

    pub fn zero(n: usize, i: usize, support: f64) -> Result<Self> {
        Self::new(n, i, support, |_| 0.0, vec![], Some("zero".into()))
    }

    /// Piecewise-linear interpolation of `(t, zeta)` samples, held constant
    /// before the first and after the last sample, and 0 beyond `R`.
    pub fn from_samples(n: usize, i: usize, support: f64, ts: Vec<f64>, zs: Vec<f64>) -> Result<Self> {
        if ts.is_empty() || ts.len() != zs.len() {
            return Err(Error::InvalidDensity("need equally many t and zeta samples".into()));
        }
        if ts.windows(2).any(|w| !(w[1] > w[0])) || !(ts[0] > 0.0) {
            return Err(Error::InvalidDensity(
                "sample radii must be positive and strictly increasing".into(),
            ));
        }
        if zs.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidDensity("non-finite zeta sample".into()));
        }
        let kinks = ts.clone();
        let (ts, zs): (Arc<[f64]>, Arc<[f64]>) = (ts.into(), zs.into());
        Self::new(
            n,
            i,
            support,
            move |t| interp_linear(&ts, &zs, t),
            kinks,
            Some("samples".into()),
        )
    }

    /// Rows `t,zeta`; lines starting with `#` and a non-numeric header are skipped.
    pub fn read_csv<R: BufRead>(r: R, n: usize, i: usize, support: f64) -> Result<Self> {
        let mut ts = Vec::new();
        let mut zs = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',');
            let (a, b) = (parts.next(), parts.next());
            match (a.and_then(parse_f64), b.and_then(parse_f64)) {
                (Some(t), Some(z)) => {
                    ts.push(t);
                    zs.push(z);
                }
                _ if lineno == 0 => continue,
                _ => return Err(Error::Parse(format!("line {}: expected t,zeta", lineno + 1))),
            }
        }
        Self::from_samples(n, i, support, ts, zs)
    }

    /// Catalog spec: `triangle:R`, `power:p,R`, `log:R`, `zero:R`.
    pub fn parse(spec: &str, n: usize, i: usize) -> Result<Self> {
        let (kind, args) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("density spec '{spec}' lacks ':'")))?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|s| parse_f64(s).ok_or_else(|| Error::Parse(format!("bad number '{s}' in '{spec}'"))))
            .collect::<Result<_>>()?;
        match (kind, nums.as_slice()) {
            ("triangle", [r]) => Self::triangle(n, i, *r),
            ("power", [p, r]) => Self::power(n, i, *p, *r),
            ("log", [r]) => Self::log(n, i, *r),
            ("zero", [r]) => Self::zero(n, i, *r),
            _ => Err(Error::Parse(format!("unknown density spec '{spec}'"))),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn i(&self) -> usize {
        self.i
    }

    /// `n - i`.
    pub fn codegree(&self) -> usize {
        self.n - self.i
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn tag(&self) -> Option<&str> {
        self.tag.as_deref()
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn zeta(&self, t: f64) -> f64 {
        if t > self.support {
            0.0
        } else {
            (self.zeta)(t)
        }
    }

    /// `c * zeta`.
    pub fn scaled(&self, c: f64) -> Density {
        let z = self.zeta.clone();
        Density {
            zeta: Arc::new(move |t| c * z(t)),
            tag: self.tag.as_ref().map(|t| format!("{c}*{t}")),
            ..self.clone()
        }
    }

    /// `a * self + b * other`, same `n` and `i`.
    pub fn combine(&self, a: f64, other: &Density, b: f64) -> Result<Density> {
        if self.n != other.n || self.i != other.i {
            return Err(Error::InvalidDensity("combining densities of different classes".into()));
        }
        let (z1, z2) = (self.clone(), other.clone());
        let mut kinks = self.kinks.clone();
        kinks.extend(&other.kinks);
        kinks.push(self.support.min(other.support));
        kinks.sort_by(f64::total_cmp);
        kinks.dedup();
        Ok(Density {
            n: self.n,
            i: self.i,
            support: self.support.max(other.support),
            zeta: Arc::new(move |t| a * z1.zeta(t) + b * z2.zeta(t)),
            kinks,
            tag: None,
        })
    }

    /// `zeta^r(t) = zeta(max(t, r))`.
    pub fn regularize(&self, r: f64) -> Result<Density> {
        if !(r > 0.0 && r <= self.support) {
            return Err(Error::InvalidArgument(format!(
                "regularisation radius {r} outside (0, {}]",
                self.support
            )));
        }
        let z = self.zeta.clone();
        let mut kinks: Vec<f64> = self.kinks.iter().copied().filter(|&k| k > r).collect();
        kinks.push(r);
        Ok(Density {
            zeta: Arc::new(move |t| z(t.max(r))),
            kinks,
            tag: self.tag.as_ref().map(|t| format!("{t}^r={r}")),
            ..self.clone()
        })
    }

    fn weight(&self, s: f64) -> f64 {
        s.powi(self.codegree() as i32 - 1) * self.zeta(s)
    }

    /// `int_a^b s^{n-i-1} zeta(s) ds` with geometric breakpoints from `a` upward.
    fn eta_segment(&self, a: f64, b: f64) -> Result<f64> {
        if a >= b {
            return Ok(0.0);
        }
        let mut cuts: Vec<f64> = self.kinks.clone();
        let mut p = 2.0 * a;
        while p < b {
            cuts.push(p);
            p *= 2.0;
        }
        let cfg = QuadConfig {
            abs_tol: ETA_TOL,
            rel_tol: ETA_TOL,
            max_intervals: 8000,
        };
        Ok(integrate(|s| self.weight(s), a, b, &cuts, cfg)?.value)
    }

    /// `eta(t) = int_t^R s^{n-i-1} zeta(s) ds`; exactly 0 for `t >= R`.
    pub fn eta(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!("eta needs t > 0, got {t}")));
        }
        self.eta_segment(t, self.support)
    }

    /// `eta(0+) = int_0^R s^{n-i-1} zeta(s) ds`, an improper integral for
    /// singular members.
    pub fn eta_at_zero(&self) -> Result<f64> {
        let r = self.support;
        let mut cuts: Vec<f64> = self.kinks.clone();
        cuts.extend((1..=60).map(|k| r * 0.5f64.powi(k)));
        let cfg = QuadConfig {
            abs_tol: ETA_TOL,
            rel_tol: ETA_TOL,
            max_intervals: 8000,
        };
        Ok(integrate(|s| self.weight(s), 0.0, r, &cuts, cfg)?.value)
    }

    /// `eta` at every point of an increasing grid, accumulated from `R` downward.
    pub fn eta_table(&self, ts: &[f64]) -> Result<Vec<f64>> {
        if ts.windows(2).any(|w| !(w[1] > w[0])) || ts.first().is_some_and(|&t| !(t > 0.0)) {
            return Err(Error::InvalidArgument("eta table needs increasing positive radii".into()));
        }
        let mut out = vec![0.0; ts.len()];
        let mut pieces = Vec::with_capacity(ts.len());
        let mut upper = self.support;
        for k in (0..ts.len()).rev() {
            let t = ts[k];
            if t < upper {
                pieces.push(self.eta_segment(t, upper)?);
                upper = t;
            }
            out[k] = compensated_sum(pieces.iter().copied());
        }
        Ok(out)
    }

    /// `rho(t) = t^{n-i} zeta(t) + (n-i) eta(t)`.
    pub fn rho(&self, t: f64) -> Result<f64> {
        Ok(self.rho_from_eta(t, self.eta(t)?))
    }

    fn rho_from_eta(&self, t: f64, eta: f64) -> f64 {
        let m = self.codegree() as i32;
        t.powi(m) * self.zeta(t) + m as f64 * eta
    }

    /// `Psi(r) = -eta(r) / r^{n-i}`.
    pub fn psi(&self, r: f64) -> Result<f64> {
        Ok(-self.eta(r)? / r.powi(self.codegree() as i32))
    }

    /// Union of the uniform and geometric sample grids, increasing.
    pub fn norm_grid(&self) -> Vec<f64> {
        let r = self.support;
        let mut ts: Vec<f64> = (1..=NORM_UNIFORM_POINTS)
            .map(|k| r * k as f64 / NORM_UNIFORM_POINTS as f64)
            .chain(geometric_grid(r))
            .collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }

    /// `(n-i) sup|eta| + sup|rho|` over [`Density::norm_grid`].
    pub fn norm(&self) -> Result<NormReport> {
        let ts = self.norm_grid();
        let eta = self.eta_table(&ts)?;
        let m = self.codegree() as f64;
        let sup_eta = eta.iter().fold(0.0f64, |a, e| a.max(e.abs()));
        let sup_rho = ts
            .iter()
            .zip(&eta)
            .fold(0.0f64, |a, (&t, &e)| a.max(self.rho_from_eta(t, e).abs()));
        Ok(NormReport {
            norm: m * sup_eta + sup_rho,
            sup_eta,
            sup_rho,
            samples: ts.len(),
            min_t: ts[0],
        })
    }

    /// Diagnostics for `t^{n-i} zeta(t) -> 0` and convergence of `eta(t)` as `t -> 0`.
    pub fn membership(&self) -> Result<MembershipReport> {
        let mut ts = geometric_grid(self.support);
        ts.reverse();
        let eta = self.eta_table(&ts)?;
        let m = self.codegree() as i32;
        // finest scale first
        let tz: Vec<f64> = ts.iter().map(|&t| (t.powi(m) * self.zeta(t)).abs()).collect();
        let scale = {
            let norm = self.norm()?.norm;
            if norm > 0.0 {
                norm
            } else {
                tz.iter().fold(0.0f64, |a, &b| a.max(b))
            }
        };
        const TAIL: usize = 5;
        let tail_tz = &tz[..TAIL];
        let limit_pass = tail_tz.iter().all(|&v| v <= 1e-6 * scale);
        let diffs: Vec<f64> = eta[..=TAIL].windows(2).map(|w| (w[0] - w[1]).abs()).collect();
        let cauchy_pass = diffs.iter().all(|&d| d <= 1e-8 * scale.max(1.0));
        // moving toward 0 the samples should settle monotonically
        // reversals at roundoff level do not count
        let monotone = |v: &[f64]| {
            let slack = 1e-12 * v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            v.windows(2).all(|w| w[0] <= w[1] + slack) || v.windows(2).all(|w| w[0] + slack >= w[1])
        };
        let eta_tail: Vec<f64> = eta[..TAIL].to_vec();
        let verdict = if limit_pass && cauchy_pass {
            Verdict::Pass
        } else if (!limit_pass && !monotone(tail_tz)) || (!cauchy_pass && !monotone(&eta_tail)) {
            Verdict::Inconclusive
        } else {
            Verdict::Fail
        };
        Ok(MembershipReport {
            limit_t_pow_zeta: tz[0],
            eta_at_zero_estimate: eta[0],
            finest_t: ts[0],
            limit_pass,
            cauchy_pass,
            verdict,
        })
    }
}

fn interp_linear(ts: &[f64], zs: &[f64], t: f64) -> f64 {
    if t <= ts[0] {
        return zs[0];
    }
    let last = ts.len() - 1;
    if t >= ts[last] {
        return zs[last];
    }
    let k = ts.partition_point(|&s| s <= t) - 1;
    let w = (t - ts[k]) / (ts[k + 1] - ts[k]);
    zs[k] + w * (zs[k + 1] - zs[k])
}

/// `R 2^{-k/4}` for `k = 0..=GEOMETRIC_STEPS`, decreasing.
pub fn geometric_grid(support: f64) -> Vec<f64> {
    (0..=GEOMETRIC_STEPS)
        .map(|k| support * 2f64.powf(-(k as f64) / 4.0))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub norm: f64,
    pub sup_eta: f64,
    pub sup_rho: f64,
    pub samples: usize,
    pub min_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipReport {
    pub limit_t_pow_zeta: f64,
    pub eta_at_zero_estimate: f64,
    pub finest_t: f64,
    pub limit_pass: bool,
    pub cauchy_pass: bool,
    pub verdict: Verdict,
}

impl MembershipReport {
    pub fn pass(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> Density {
        Density::triangle(2, 1, 1.0).unwrap()
    }

    #[test]
    fn eta_triangle_closed_form() {
        let d = tri();
        for t in [1e-9, 0.1, 0.5, 0.9] {
            let exact = 0.5 * (1.0 - t) * (1.0 - t);
            assert!((d.eta(t).unwrap() - exact).abs() < 1e-12);
        }
        assert_eq!(d.eta(1.0).unwrap(), 0.0);
        assert_eq!(d.eta(3.0).unwrap(), 0.0);
        assert!(d.eta(0.0).is_err());
    }

    #[test]
    fn eta_at_zero_values() {
        assert!((tri().eta_at_zero().unwrap() - 0.5).abs() < 1e-13);
        let d = Density::power(2, 1, 0.5, 1.0).unwrap();
        assert!((d.eta_at_zero().unwrap() - 4.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn eta_power_half() {
        let d = Density::power(2, 1, 0.5, 1.0).unwrap();
        // antiderivative 2 s^{1/2} - (2/3) s^{3/2}
        let anti = |s: f64| 2.0 * s.sqrt() - 2.0 / 3.0 * s.powf(1.5);
        for t in [1e-12, 1e-4, 0.3] {
            let exact = anti(1.0) - anti(t);
            assert!((d.eta(t).unwrap() - exact).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn rho_and_psi_examples() {
        let d = tri();
        assert!((d.rho(0.5).unwrap() - 0.375).abs() < 1e-14);
        assert!((d.psi(0.5).unwrap() + 0.25).abs() < 1e-14);
        assert_eq!(d.rho(1.5).unwrap(), 0.0);
        assert_eq!(d.psi(1.0).unwrap(), 0.0);
    }

    #[test]
    fn psi_ode_residual() {
        for d in [tri(), Density::power(3, 1, 0.5, 1.0).unwrap(), Density::log(2, 1, 1.0).unwrap()] {
            let r = 0.3;
            let h = 1e-5;
            let dpsi = (d.psi(r + h).unwrap() - d.psi(r - h).unwrap()) / (2.0 * h);
            let lhs = d.codegree() as f64 * d.psi(r).unwrap() + r * dpsi;
            assert!((lhs - d.zeta(r)).abs() < 1e-6, "{:?}", d);
        }
    }

    #[test]
    fn eta_table_matches_pointwise() {
        let d = Density::power(3, 1, 0.5, 2.0).unwrap();
        let ts = [0.01, 0.2, 0.7, 1.9, 2.0];
        let tab = d.eta_table(&ts).unwrap();
        for (t, e) in ts.iter().zip(tab) {
            assert!((d.eta(*t).unwrap() - e).abs() < 1e-11);
        }
    }

    #[test]
    fn triangle_norm_is_one() {
        let r = tri().norm().unwrap();
        assert!((r.norm - 1.0).abs() < 1e-9, "{:?}", r);
        assert!(r.samples >= NORM_UNIFORM_POINTS);
    }

    #[test]
    fn norm_homogeneity_and_zero() {
        let d = Density::log(3, 2, 1.5).unwrap();
        let a = d.norm().unwrap().norm;
        let b = d.scaled(-3.0).norm().unwrap().norm;
        assert!((b - 3.0 * a).abs() < 1e-10 * a);
        assert_eq!(Density::zero(2, 1, 1.0).unwrap().norm().unwrap().norm, 0.0);
    }

    #[test]
    fn regularize_examples() {
        let d = Density::power(2, 1, 0.5, 1.0).unwrap();
        let r = d.regularize(0.25).unwrap();
        assert!((r.zeta(0.1) - 1.5).abs() < 1e-15);
        assert_eq!(r.zeta(0.5), d.zeta(0.5));
        let full = d.regularize(1.0).unwrap();
        assert_eq!(full.zeta(0.3), 0.0);
        assert!(d.regularize(0.0).is_err());
    }

    #[test]
    fn membership_catalog() {
        assert!(tri().membership().unwrap().pass());
        assert!(Density::power(2, 1, 0.5, 1.0).unwrap().membership().unwrap().pass());
        assert!(Density::log(2, 1, 1.0).unwrap().membership().unwrap().pass());
        let bad = Density::power(2, 1, 1.0, 1.0).unwrap().membership().unwrap();
        assert_eq!(bad.verdict, Verdict::Fail);
        assert!(!bad.limit_pass && !bad.cauchy_pass);
    }

    #[test]
    fn parse_specs() {
        assert_eq!(Density::parse("power:0.5,2", 3, 1).unwrap().support(), 2.0);
        assert!(Density::parse("triangle:1", 2, 2).is_err());
        assert!(Density::parse("cosine:1", 2, 1).is_err());
        assert!(Density::parse("triangle", 2, 1).is_err());
    }

    #[test]
    fn csv_samples_interpolate() {
        let csv = "t,zeta\n0.25,0.75\n0.5,0.5\n1.0,0.0\n";
        let d = Density::read_csv(csv.as_bytes(), 2, 1, 1.0).unwrap();
        assert!((d.zeta(0.75) - 0.25).abs() < 1e-15);
        assert_eq!(d.zeta(0.1), 0.75);
        assert_eq!(d.zeta(1.5), 0.0);
    }
}
