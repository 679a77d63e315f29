//! Principal-value extrapolation: truncated values `V(eps)` are fitted by
//! `V - c eps^q` on the last four radii.

use std::io::Write;

use crate::error::{Error, Result};
use crate::util::fmt17;

/// `eps0, eps0 r, eps0 r^2, ...` with `count` entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricSchedule {
    pub eps0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl GeometricSchedule {
    pub fn new(eps0: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(eps0 > 0.0 && eps0.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps0 = {eps0} must be positive")));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidArgument(format!("ratio = {ratio} must lie in (0, 1)")));
        }
        Ok(GeometricSchedule { eps0, ratio, count })
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.count)
            .map(|k| self.eps0 * self.ratio.powi(k as i32))
            .collect()
    }
}

pub const FIT_POINTS: usize = 4;
pub const MIN_ORDER: f64 = 0.05;
pub const MAX_ORDER: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub limit: f64,
    pub coeff: f64,
    pub order: f64,
    /// Largest absolute residual of the fit.
    pub residual: f64,
}

fn fit_fixed(eps: &[f64], v: &[f64], q: f64) -> (f64, f64, f64) {
    let m = eps.len() as f64;
    let x: Vec<f64> = eps.iter().map(|e| e.powf(q)).collect();
    let mx = x.iter().sum::<f64>() / m;
    let mv = v.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxv: f64 = x.iter().zip(v).map(|(a, b)| (a - mx) * (b - mv)).sum();
    let slope = if sxx > 0.0 { sxv / sxx } else { 0.0 };
    let limit = mv - slope * mx;
    let sse = x
        .iter()
        .zip(v)
        .map(|(a, b)| (limit + slope * a - b).powi(2))
        .sum();
    (limit, -slope, sse)
}

/// Least-squares fit of `V - c eps^q`; `q` by log-grid search plus golden section.
pub fn fit_power_law(eps: &[f64], v: &[f64]) -> PowerFit {
    const GRID: usize = 200;
    let lq = |k: f64| (MIN_ORDER.ln() + (MAX_ORDER / MIN_ORDER).ln() * k / GRID as f64).exp();
    let sse = |q: f64| fit_fixed(eps, v, q).2;
    let mut best_k = 0;
    let mut best = f64::INFINITY;
    for k in 0..=GRID {
        let s = sse(lq(k as f64));
        if s < best {
            best = s;
            best_k = k;
        }
    }
    let (mut a, mut b) = (
        lq((best_k as f64 - 1.0).max(0.0)),
        lq((best_k as f64 + 1.0).min(GRID as f64)),
    );
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (sse(c), sse(d));
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = sse(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = sse(d);
        }
    }
    let mut q = 0.5 * (a + b);
    if sse(lq(best_k as f64)) < sse(q) {
        q = lq(best_k as f64);
    }
    let (limit, coeff, _) = fit_fixed(eps, v, q);
    let residual = eps
        .iter()
        .zip(v)
        .map(|(e, val)| (limit - coeff * e.powf(q) - val).abs())
        .fold(0.0, f64::max);
    PowerFit {
        limit,
        coeff,
        order: q,
        residual,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PVReport {
    pub epsilons: Vec<f64>,
    pub values: Vec<f64>,
    pub extrapolated: f64,
    pub order_estimate: f64,
    pub converged: bool,
    pub tolerance_achieved: f64,
    pub fit_residual: f64,
}

impl PVReport {
    /// Extrapolate and classify. Values that no longer move are a converged
    /// limit with undefined order; otherwise the fit residual must be at most
    /// `1e-6 max(1, |V|)`, the last three increments must shrink (or sit at
    /// roundoff) and the order must stay off its lower search bound.
    pub fn from_values(epsilons: Vec<f64>, values: Vec<f64>) -> Self {
        let k = values.len();
        let last = values[k - 1];
        let tail_eps = &epsilons[k - FIT_POINTS..];
        let tail = &values[k - FIT_POINTS..];
        let scale = last.abs().max(1.0);
        let floor = 1e-13 * scale;
        let diffs: Vec<f64> = tail.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        if diffs.iter().all(|&d| d <= floor) {
            return PVReport {
                epsilons,
                values,
                extrapolated: last,
                order_estimate: f64::NAN,
                converged: true,
                tolerance_achieved: diffs.iter().fold(0.0, |a: f64, &b| a.max(b)),
                fit_residual: 0.0,
            };
        }
        let fit = fit_power_law(tail_eps, tail);
        let shrinking = diffs.windows(2).all(|w| w[1] < w[0] || w[1] <= floor);
        let converged = fit.residual <= 1e-6 * fit.limit.abs().max(1.0)
            && shrinking
            && fit.order > 2.0 * MIN_ORDER
            && fit.limit.is_finite();
        PVReport {
            tolerance_achieved: (last - fit.limit).abs().max(fit.residual),
            extrapolated: fit.limit,
            order_estimate: fit.order,
            converged,
            fit_residual: fit.residual,
            epsilons,
            values,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epsilon,value")?;
        for (e, v) in self.epsilons.iter().zip(&self.values) {
            writeln!(w, "{},{}", fmt17(*e), fmt17(*v))?;
        }
        writeln!(w, "# extrapolated={}", fmt17(self.extrapolated))?;
        writeln!(w, "# order={}", fmt17(self.order_estimate))?;
        writeln!(w, "# converged={}", self.converged)?;
        writeln!(w, "# tolerance={}", fmt17(self.tolerance_achieved))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("ascii")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_power_law() {
        let eps: Vec<f64> = GeometricSchedule::new(0.1, 0.5, 8).unwrap().radii();
        let v: Vec<f64> = eps.iter().map(|e| 3.0 - 2.0 * e.powf(1.5)).collect();
        let r = PVReport::from_values(eps, v);
        assert!(r.converged);
        assert!((r.extrapolated - 3.0).abs() < 1e-10);
        assert!((r.order_estimate - 1.5).abs() < 1e-4);
    }

    #[test]
    fn flat_values_converge() {
        let eps = GeometricSchedule::new(0.1, 0.5, 6).unwrap().radii();
        let r = PVReport::from_values(eps, vec![2.5; 6]);
        assert!(r.converged && r.extrapolated == 2.5 && r.order_estimate.is_nan());
    }

    #[test]
    fn logarithmic_growth_does_not_converge() {
        let eps = GeometricSchedule::new(0.1, 0.5, 8).unwrap().radii();
        let v: Vec<f64> = eps.iter().map(|e| -e.ln()).collect();
        assert!(!PVReport::from_values(eps, v).converged);
    }

    #[test]
    fn schedule_validation() {
        assert!(GeometricSchedule::new(0.1, 1.0, 8).is_err());
        assert!(GeometricSchedule::new(-0.1, 0.5, 8).is_err());
    }

    #[test]
    fn csv_footer() {
        let eps = GeometricSchedule::new(0.1, 0.5, 6).unwrap().radii();
        let s = PVReport::from_values(eps, vec![1.0; 6]).to_csv_string();
        assert!(s.starts_with("epsilon,value\n"));
        assert!(s.contains("# extrapolated=1.0000000000000000e0"));
        assert!(s.contains("# converged=true"));
    }
}
