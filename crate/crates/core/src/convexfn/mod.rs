//! Finite-valued convex functions on `R^n`: analytic, radial and sampled
//! representations, Legendre transform, lattice operations and mollification.

mod grid;
mod legendre;
mod mollify;
mod profile;

pub use grid::{ConvexityReport, GridFn, GridSpec, MAX_GRID_DIM};
pub use legendre::{legendre, legendre_brute, legendre_fn, Conjugate};
pub use mollify::{kernel, mollify, Kernel, Mollified};
pub use profile::{Grade, RadialProfile, ScalarFn};

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hessmeasure::SymMatrix;
use crate::util::{ball_net, dot, net_resolution, norm};

/// A smooth convex function given by closed-form oracles.
pub trait SmoothConvex: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64]) -> Vec<f64>;
    fn hess(&self, x: &[f64]) -> SymMatrix;
    fn name(&self) -> String {
        "analytic".into()
    }
}

/// `x^T A x / 2 + <b, x> + c`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub a: SymMatrix,
    pub b: Vec<f64>,
    pub c: f64,
}

impl Quadratic {
    pub fn new(a: SymMatrix, b: Vec<f64>, c: f64) -> Result<Self> {
        if b.len() != a.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                got: b.len(),
            });
        }
        if a.min_eigenvalue() < -1e-12 * a.max_abs_entry().max(1.0) {
            return Err(Error::InvalidArgument(
                "quadratic form is not positive semidefinite".into(),
            ));
        }
        Ok(Quadratic { a, b, c })
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(SymMatrix::diagonal(diag), vec![0.0; diag.len()], 0.0)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                q += x[i] * self.a.get(i, j) * x[j];
            }
        }
        0.5 * q + dot(&self.b, x) + self.c
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.a.get(i, j) * x[j]).sum::<f64>() + self.b[i])
            .collect()
    }
}

#[derive(Clone)]
pub enum FnKind {
    Radial(RadialProfile),
    Quadratic(Quadratic),
    Analytic(Arc<dyn SmoothConvex>),
    Grid(GridFn),
    /// `inner + <slope, x> + offset`; the Hessian is that of `inner`.
    Shifted {
        inner: Arc<ConvexFn>,
        slope: Vec<f64>,
        offset: f64,
    },
    /// `factor * inner`.
    Scaled { inner: Arc<ConvexFn>, factor: f64 },
}

/// A finite convex function on `R^n` with value, gradient and Hessian access.
#[derive(Clone)]
pub struct ConvexFn {
    dim: usize,
    kind: FnKind,
}

impl fmt::Debug for ConvexFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConvexFn(dim={}, {})", self.dim, self.describe())
    }
}

/// Build the radial function `x -> phi(|x|)` on `R^n`.
pub fn make_radial(profile: RadialProfile, n: usize) -> Result<ConvexFn> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    profile.validate(10.0)?;
    Ok(ConvexFn {
        dim: n,
        kind: FnKind::Radial(profile),
    })
}

impl ConvexFn {
    pub fn quadratic(q: Quadratic) -> Self {
        ConvexFn {
            dim: q.a.dim(),
            kind: FnKind::Quadratic(q),
        }
    }

    pub fn analytic(f: Arc<dyn SmoothConvex>) -> Self {
        ConvexFn {
            dim: f.dim(),
            kind: FnKind::Analytic(f),
        }
    }

    pub fn grid(g: GridFn) -> Self {
        ConvexFn {
            dim: g.dim(),
            kind: FnKind::Grid(g),
        }
    }

    /// `f + <slope, x> + offset`.
    pub fn shifted(&self, slope: Vec<f64>, offset: f64) -> Result<Self> {
        if slope.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: slope.len(),
            });
        }
        Ok(ConvexFn {
            dim: self.dim,
            kind: FnKind::Shifted {
                inner: Arc::new(self.clone()),
                slope,
                offset,
            },
        })
    }

    /// `factor * f`, `factor >= 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scaling factor {factor} must be nonnegative"
            )));
        }
        Ok(ConvexFn {
            dim: self.dim,
            kind: FnKind::Scaled {
                inner: Arc::new(self.clone()),
                factor,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &FnKind {
        &self.kind
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            FnKind::Radial(p) => format!("radial:{}", p.name()),
            FnKind::Quadratic(_) => "quadratic".into(),
            FnKind::Analytic(a) => a.name(),
            FnKind::Grid(g) => format!("grid(h={})", g.h()),
            FnKind::Shifted { inner, .. } => format!("{} + affine", inner.describe()),
            FnKind::Scaled { inner, factor } => format!("{} * {}", factor, inner.describe()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            FnKind::Radial(p) => p.value(norm(x)),
            FnKind::Quadratic(q) => q.eval(x),
            FnKind::Analytic(a) => a.eval(x),
            FnKind::Grid(g) => g.interpolate(x).unwrap_or(f64::NAN),
            FnKind::Shifted {
                inner,
                slope,
                offset,
            } => inner.eval(x) + dot(slope, x) + offset,
            FnKind::Scaled { inner, factor } => factor * inner.eval(x),
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            FnKind::Radial(p) => {
                let r = norm(x);
                if r == 0.0 {
                    vec![0.0; self.dim]
                } else {
                    let s = p.deriv1(r) / r;
                    x.iter().map(|v| s * v).collect()
                }
            }
            FnKind::Quadratic(q) => q.grad(x),
            FnKind::Analytic(a) => a.grad(x),
            FnKind::Grid(g) => {
                let h = g.h();
                (0..self.dim)
                    .map(|a| {
                        let mut xp = x.to_vec();
                        let mut xm = x.to_vec();
                        xp[a] += h;
                        xm[a] -= h;
                        match (g.interpolate(&xp), g.interpolate(&xm)) {
                            (Some(p), Some(m)) => (p - m) / (2.0 * h),
                            _ => f64::NAN,
                        }
                    })
                    .collect()
            }
            FnKind::Shifted { inner, slope, .. } => inner
                .grad(x)
                .iter()
                .zip(slope)
                .map(|(g, s)| g + s)
                .collect(),
            FnKind::Scaled { inner, factor } => inner.grad(x).iter().map(|g| factor * g).collect(),
        }
    }

    /// Hessian at `x`. Radial functions use `phi''` in the radial direction
    /// and `phi'(r)/r` tangentially; at the origin both are `phi''(0)`.
    pub fn hess(&self, x: &[f64]) -> SymMatrix {
        match &self.kind {
            FnKind::Radial(p) => {
                let r = norm(x);
                let n = self.dim;
                if r == 0.0 {
                    return SymMatrix::identity(n).scale(p.deriv2(0.0));
                }
                let radial = p.deriv2(r);
                let tangential = p.deriv1(r) / r;
                SymMatrix::from_fn(n, |i, j| {
                    let uu = x[i] * x[j] / (r * r);
                    let delta = if i == j { 1.0 } else { 0.0 };
                    radial * uu + tangential * (delta - uu)
                })
            }
            FnKind::Quadratic(q) => q.a.clone(),
            FnKind::Analytic(a) => a.hess(x),
            FnKind::Grid(g) => {
                let spec = g.spec();
                let idx: Vec<usize> = x
                    .iter()
                    .map(|&c| {
                        ((c / spec.h() + spec.half() as f64).round().max(1.0) as usize)
                            .min(spec.per_axis() - 2)
                    })
                    .collect();
                grid_hessian(g, &idx)
            }
            FnKind::Shifted { inner, .. } => inner.hess(x),
            FnKind::Scaled { inner, factor } => inner.hess(x).scale(*factor),
        }
    }

    /// Radial profile governing the Hessian, if the function is radial up to
    /// scaling and affine terms.
    pub fn hessian_profile(&self) -> Option<RadialProfile> {
        match &self.kind {
            FnKind::Radial(p) => Some(p.clone()),
            FnKind::Shifted { inner, .. } => inner.hessian_profile(),
            FnKind::Scaled { inner, factor } => inner.hessian_profile().map(|p| p.scaled(*factor)),
            _ => None,
        }
    }

    /// The Hessian if it is the same at every point.
    pub fn constant_hessian(&self) -> Option<SymMatrix> {
        match &self.kind {
            FnKind::Quadratic(q) => Some(q.a.clone()),
            FnKind::Shifted { inner, .. } => inner.constant_hessian(),
            FnKind::Scaled { inner, factor } => inner.constant_hessian().map(|a| a.scale(*factor)),
            _ => None,
        }
    }

    pub fn as_grid(&self) -> Option<&GridFn> {
        match &self.kind {
            FnKind::Grid(g) => Some(g),
            _ => None,
        }
    }

    /// Sample on a lattice.
    pub fn to_grid(&self, spec: GridSpec) -> Result<GridFn> {
        if spec.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: spec.dim(),
            });
        }
        Ok(GridFn::sample(spec, |x| self.eval(x)))
    }

    /// Sup of `|f|` over a lattice net of the closed ball of `radius`,
    /// together with the net spacing.
    pub fn sup_abs_on_ball(&self, radius: f64) -> (f64, f64) {
        let per_side = net_resolution(self.dim, 200_000).min(400);
        let (pts, spacing) = ball_net(self.dim, radius, per_side);
        let mut sup = pts.iter().map(|x| self.eval(x).abs()).fold(0.0, f64::max);
        // axis endpoints lie on the sphere where convex |f| tends to peak
        for a in 0..self.dim {
            for s in [-1.0, 1.0] {
                let mut x = vec![0.0; self.dim];
                x[a] = s * radius;
                sup = sup.max(self.eval(&x).abs());
            }
        }
        (sup, spacing)
    }
}

/// Second-order central-difference Hessian at an interior lattice node.
pub fn grid_hessian(g: &GridFn, idx: &[usize]) -> SymMatrix {
    let spec = g.spec();
    let n = spec.dim();
    let h2 = spec.h() * spec.h();
    let k = spec.ravel(idx) as isize;
    let v = g.values();
    let strides: Vec<isize> = (0..n).map(|a| spec.stride(a) as isize).collect();
    let at = |off: isize| v[(k + off) as usize];
    SymMatrix::from_fn(n, |i, j| {
        if i == j {
            (at(strides[i]) - 2.0 * at(0) + at(-strides[i])) / h2
        } else {
            let (si, sj) = (strides[i], strides[j]);
            (at(si + sj) - at(si - sj) - at(sj - si) + at(-si - sj)) / (4.0 * h2)
        }
    })
}

/// `(2/eps) sup_{X + eps B} |f|` with `X` the ball of radius `radius`.
#[derive(Debug, Clone, Copy)]
pub struct LipschitzReport {
    pub bound: f64,
    pub sup_abs: f64,
    pub net_spacing: f64,
}

pub fn lipschitz_bound(f: &ConvexFn, radius: f64, eps: f64) -> Result<LipschitzReport> {
    if !(eps > 0.0) || radius < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "need radius >= 0 and eps > 0, got {radius}, {eps}"
        )));
    }
    let (sup_abs, net_spacing) = f.sup_abs_on_ball(radius + eps);
    Ok(LipschitzReport {
        bound: 2.0 / eps * sup_abs,
        sup_abs,
        net_spacing,
    })
}

/// Check of the gradient and conjugate bounds at a point for `f` in Conv0+
/// (`f(0) = 0 <= f`).
#[derive(Debug, Clone)]
pub struct SubgradReport {
    pub y: Vec<f64>,
    pub y_norm: f64,
    pub bound_y: f64,
    pub fstar: f64,
    pub bound_fstar: f64,
    pub sup_abs: f64,
    pub pass: bool,
}

pub fn subgrad_bound_check(f: &ConvexFn, x0: &[f64]) -> Result<SubgradReport> {
    if x0.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: x0.len(),
        });
    }
    let radius = norm(x0) + 1.0;
    let origin = vec![0.0; f.dim()];
    let f0 = f.eval(&origin);
    if f0.abs() > 1e-12 {
        return Err(Error::NotInConv0Plus(format!("f(0) = {f0}")));
    }
    let per_side = net_resolution(f.dim(), 50_000).min(200);
    let (pts, _) = ball_net(f.dim(), radius, per_side);
    let min = pts.iter().map(|x| f.eval(x)).fold(f64::INFINITY, f64::min);
    if min < -1e-12 {
        return Err(Error::NotInConv0Plus(format!(
            "sampled minimum {min} lies below f(0) = 0"
        )));
    }
    let (sup_abs, _) = f.sup_abs_on_ball(radius);
    let y = f.grad(x0);
    let y_norm = norm(&y);
    let fstar = dot(&y, x0) - f.eval(x0);
    let bound_y = 2.0 * sup_abs;
    let bound_fstar = (1.0 + 2.0 * norm(x0)) * sup_abs;
    Ok(SubgradReport {
        pass: y_norm <= bound_y && fstar.abs() <= bound_fstar,
        y,
        y_norm,
        bound_y,
        fstar,
        bound_fstar,
        sup_abs,
    })
}

/// Number of sampled triples violating midpoint convexity beyond `tol`.
pub fn midpoint_violations(f: &ConvexFn, pairs: &[(Vec<f64>, Vec<f64>)], tol: f64) -> usize {
    pairs
        .iter()
        .filter(|(x, y)| {
            let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
            f.eval(&mid) > 0.5 * (f.eval(x) + f.eval(y)) + tol
        })
        .count()
}
