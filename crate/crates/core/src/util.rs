//! Small numeric helpers shared across modules.

use std::f64::consts::PI;

/// Volume of the unit ball in `R^n`, `pi^{n/2} / Gamma(n/2 + 1)`.
pub fn unit_ball_volume(n: usize) -> f64 {
    // omega_n = omega_{n-2} * 2 pi / n
    let (mut w, start) = if n.is_multiple_of(2) { (1.0, 2) } else { (2.0, 3) };
    let mut k = start;
    while k <= n {
        w *= 2.0 * PI / k as f64;
        k += 2;
    }
    w
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc.round()
}

/// 17 significant digits; parses back to the identical `f64`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{:.16e}", x)
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn parse_f64(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" | "Infinity" => Some(f64::INFINITY),
        "-inf" | "-Infinity" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Lattice points of `[-radius, radius]^n` with `per_side` intervals, kept if
/// inside the closed ball.
pub fn ball_net(n: usize, radius: f64, per_side: usize) -> (Vec<Vec<f64>>, f64) {
    let spacing = 2.0 * radius / per_side as f64;
    let count = per_side + 1;
    let total = count.pow(n as u32);
    let mut pts = Vec::new();
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let x: Vec<f64> = idx.iter().map(|&j| -radius + j as f64 * spacing).collect();
        if norm(&x) <= radius * (1.0 + 1e-12) {
            pts.push(x);
        }
        for d in (0..n).rev() {
            idx[d] += 1;
            if idx[d] < count {
                break;
            }
            idx[d] = 0;
        }
    }
    (pts, spacing)
}

/// Net resolution giving roughly `budget` lattice points in dimension `n`.
pub fn net_resolution(n: usize, budget: usize) -> usize {
    let per = (budget as f64).powf(1.0 / n as f64).floor() as usize;
    per.saturating_sub(1).max(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(0), 1.0);
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(3, 0), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(binomial(10, 3), 120.0);
    }

    #[test]
    fn fmt17_round_trips() {
        for x in [0.1, 2.0 / 3.0, -1e-300, 12345.678, f64::MIN_POSITIVE] {
            assert_eq!(parse_f64(&fmt17(x)).unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(parse_f64(&fmt17(f64::INFINITY)), Some(f64::INFINITY));
    }
}
