//! Discrete Legendre–Fenchel transform over a primal lattice.
//!
//! The conjugate `f*(y) = max_x <y, x> - f(x)` is computed one coordinate at a
//! time, last axis first:
//! `S_n = -f`, `S_{k}(x_<k, y_>=k) = max_{x_k} y_k x_k + S_{k+1}(x_<=k, y_>k)`.
//! Rounding is monotone, so `fl(a + max b) = max fl(a + b)` and the result
//! equals the brute-force maximum of `y_0 x_0 + (y_1 x_1 + (... + (-f(x))))`
//! bit for bit.

use rayon::prelude::*;

use super::grid::{GridFn, GridSpec};
use super::ConvexFn;
use crate::error::{Error, Result};

/// Conjugate values on the dual lattice.
#[derive(Debug, Clone)]
pub struct Conjugate {
    /// Lattice maximum at every dual node (finite).
    pub grid: GridFn,
    /// The maximiser sits on a face of the primal box; the true conjugate may
    /// be larger or `+inf` there.
    pub boundary: Vec<bool>,
    /// Largest slope of the primal samples along any axis.
    pub gradient_bound: f64,
    /// Dual box contains `[-gradient_bound, gradient_bound]^n`.
    pub covers: bool,
}

impl Conjugate {
    /// Values with boundary-attained nodes replaced by `+inf`.
    pub fn with_sentinel(&self) -> GridFn {
        let values = self
            .grid
            .values()
            .iter()
            .zip(&self.boundary)
            .map(|(&v, &b)| if b { f64::INFINITY } else { v })
            .collect();
        GridFn::new(*self.grid.spec(), values).expect("same lattice")
    }

    pub fn is_reliable(&self, flat: usize) -> bool {
        !self.boundary[flat]
    }

    pub fn reliable_count(&self) -> usize {
        self.boundary.iter().filter(|b| !**b).count()
    }
}

fn check_dims(f: &GridFn, dual: &GridSpec) -> Result<()> {
    if f.dim() != dual.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: dual.dim(),
        });
    }
    Ok(())
}

fn finish(f: &GridFn, dual: &GridSpec, values: Vec<f64>, boundary: Vec<bool>) -> Conjugate {
    let gradient_bound = f.lipschitz_estimate();
    Conjugate {
        grid: GridFn::new(*dual, values).expect("dual lattice size"),
        boundary,
        gradient_bound,
        covers: dual.half_width() >= gradient_bound,
    }
}

/// Separable conjugate of the sampled function `f` on the lattice `dual`.
pub fn legendre(f: &GridFn, dual: &GridSpec) -> Result<Conjugate> {
    check_dims(f, dual)?;
    let primal = *f.spec();
    let n = primal.dim();
    let pp = primal.per_axis();
    let pd = dual.per_axis();
    let xs: Vec<f64> = (0..pp).map(|j| primal.coord(j)).collect();
    let ys: Vec<f64> = (0..pd).map(|j| dual.coord(j)).collect();

    // shape[a] is pp for axes not yet transformed and pd afterwards
    let mut shape = vec![pp; n];
    let mut cur: Vec<f64> = f.values().iter().map(|v| -v).collect();
    let mut flag = vec![false; cur.len()];

    for axis in (0..n).rev() {
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let mut next = vec![0.0; outer * pd * inner];
        let mut next_flag = vec![false; next.len()];
        next.par_chunks_mut(pd * inner)
            .zip(next_flag.par_chunks_mut(pd * inner))
            .enumerate()
            .for_each(|(o, (out, out_flag))| {
                let base = o * pp * inner;
                for q in 0..inner {
                    for (jy, &y) in ys.iter().enumerate() {
                        let mut best = f64::NEG_INFINITY;
                        let mut arg = 0;
                        for (jx, &x) in xs.iter().enumerate() {
                            let v = y * x + cur[base + jx * inner + q];
                            if v > best {
                                best = v;
                                arg = jx;
                            }
                        }
                        out[jy * inner + q] = best;
                        out_flag[jy * inner + q] =
                            arg == 0 || arg == pp - 1 || flag[base + arg * inner + q];
                    }
                }
            });
        cur = next;
        flag = next_flag;
        shape[axis] = pd;
    }
    Ok(finish(f, dual, cur, flag))
}

/// Brute-force conjugate: every dual node scans every primal node. Test oracle.
pub fn legendre_brute(f: &GridFn, dual: &GridSpec) -> Result<Conjugate> {
    check_dims(f, dual)?;
    let primal = *f.spec();
    let n = primal.dim();
    let pp = primal.per_axis();
    let primal_idx: Vec<Vec<usize>> = (0..primal.len()).map(|k| primal.unravel(k)).collect();
    let (values, boundary): (Vec<f64>, Vec<bool>) = (0..dual.len())
        .into_par_iter()
        .map(|kd| {
            let y = dual.point(kd);
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            // lexicographic order with the last axis fastest; ties keep the
            // first maximiser, as in the per-axis sweeps
            for (k, idx) in primal_idx.iter().enumerate() {
                let mut acc = -f.values()[k];
                for a in (0..n).rev() {
                    acc += y[a] * primal.coord(idx[a]);
                }
                if acc > best {
                    best = acc;
                    arg = k;
                }
            }
            let on_face = primal_idx[arg].iter().any(|&j| j == 0 || j == pp - 1);
            (best, on_face)
        })
        .unzip();
    Ok(finish(f, dual, values, boundary))
}

/// Sample `f` on `primal` and conjugate onto `dual`.
pub fn legendre_fn(f: &ConvexFn, primal: GridSpec, dual: &GridSpec) -> Result<Conjugate> {
    legendre(&f.to_grid(primal)?, dual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convexfn::{make_radial, RadialProfile};

    #[test]
    fn quadratic_is_self_dual() {
        let h = 0.05;
        let primal = GridSpec::new(2, 2.0, h).unwrap();
        let dual = GridSpec::new(2, 1.0, h).unwrap();
        let f = GridFn::sample(primal, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let c = legendre(&f, &dual).unwrap();
        for k in 0..dual.len() {
            assert!(c.is_reliable(k));
            let y = dual.point(k);
            let exact = 0.5 * (y[0] * y[0] + y[1] * y[1]);
            assert!((c.grid.values()[k] - exact).abs() <= 2.0 * h * h);
        }
    }

    #[test]
    fn anisotropic_quadratic() {
        let primal = GridSpec::new(2, 3.0, 0.05).unwrap();
        let dual = GridSpec::new(2, 2.0, 0.05).unwrap();
        let f = GridFn::sample(primal, |x| 0.5 * (x[0] * x[0] + 4.0 * x[1] * x[1]));
        let c = legendre(&f, &dual).unwrap();
        let k = dual.ravel(&[60, 80]);
        let y = dual.point(k);
        assert!((y[0] - 1.0).abs() < 1e-12 && (y[1] - 2.0).abs() < 1e-12);
        assert!((c.grid.values()[k] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fast_equals_brute_bitwise() {
        let primal = GridSpec::new(2, 1.0, 0.1).unwrap();
        let dual = GridSpec::new(2, 1.5, 0.1).unwrap();
        let f = GridFn::sample(primal, |x| (x[0] - 0.1).powi(4) + x[0] * x[1] * 0.3 + x[1] * x[1]);
        let a = legendre(&f, &dual).unwrap();
        let b = legendre_brute(&f, &dual).unwrap();
        for (u, v) in a.grid.values().iter().zip(b.grid.values()) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
        assert_eq!(a.boundary, b.boundary);
    }

    #[test]
    fn cone_conjugate_outside_unit_ball_hits_boundary() {
        let primal = GridSpec::new(1, 4.0, 0.05).unwrap();
        let dual = GridSpec::new(1, 2.0, 0.05).unwrap();
        let f = make_radial(RadialProfile::cone(), 1).unwrap();
        let c = legendre_fn(&f, primal, &dual).unwrap();
        let s = c.with_sentinel();
        let at = |y: f64| s.values()[((y + 2.0) / 0.05).round() as usize];
        assert_eq!(at(0.5), 0.0);
        assert_eq!(at(1.5), f64::INFINITY);
    }
}
