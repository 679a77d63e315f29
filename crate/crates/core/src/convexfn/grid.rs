//! Uniform tensor lattices on `[-L, L]^n` and sampled convex functions.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::util::{fmt17, parse_f64};

pub const MAX_GRID_DIM: usize = 4;

/// Lattice `{(j - m) h : j = 0..=2m}^n`, so `L = m h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    half: usize,
    h: f64,
}

impl GridSpec {
    /// `half_width` must be an integer multiple of `h` (relative slack 1e-9).
    pub fn new(dim: usize, half_width: f64, h: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_GRID_DIM {
            return Err(Error::InvalidGrid(format!(
                "grid dimension {dim} outside 1..={MAX_GRID_DIM}"
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing h = {h} must be positive")));
        }
        let ratio = half_width / h;
        let half = ratio.round();
        if half < 1.0 || (ratio - half).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "half-width {half_width} is not a positive multiple of h = {h}"
            )));
        }
        Self::from_half(dim, half as usize, h)
    }

    pub fn from_half(dim: usize, half: usize, h: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_GRID_DIM {
            return Err(Error::InvalidGrid(format!(
                "grid dimension {dim} outside 1..={MAX_GRID_DIM}"
            )));
        }
        if half == 0 || !(h > 0.0) {
            return Err(Error::InvalidGrid("empty lattice".into()));
        }
        // bound checks and quadrature need a margin around the unit region
        if (half as f64) * h < 1.0 - 1e-12 {
            return Err(Error::InvalidGrid(format!(
                "half-width {} is below 1",
                half as f64 * h
            )));
        }
        Ok(GridSpec { dim, half, h })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn half(&self) -> usize {
        self.half
    }

    pub fn half_width(&self) -> f64 {
        self.half as f64 * self.h
    }

    pub fn per_axis(&self) -> usize {
        2 * self.half + 1
    }

    pub fn len(&self) -> usize {
        self.per_axis().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of lattice index `j` along any axis.
    #[inline]
    pub fn coord(&self, j: usize) -> f64 {
        (j as f64 - self.half as f64) * self.h
    }

    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let p = self.per_axis();
        let mut idx = vec![0; self.dim];
        for d in (0..self.dim).rev() {
            idx[d] = flat % p;
            flat /= p;
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        let p = self.per_axis();
        idx.iter().fold(0, |acc, &j| acc * p + j)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat).into_iter().map(|j| self.coord(j)).collect()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.per_axis().pow((self.dim - 1 - axis) as u32)
    }

    /// True if every index is at least `margin` away from the lattice faces.
    pub fn is_interior(&self, idx: &[usize], margin: usize) -> bool {
        idx.iter()
            .all(|&j| j >= margin && j + margin < self.per_axis())
    }

    /// Same spacing, `by` fewer nodes on each side.
    pub fn shrink(&self, by: usize) -> Result<GridSpec> {
        if by >= self.half {
            return Err(Error::InvalidGrid(format!(
                "cannot shrink lattice with half-count {} by {by}",
                self.half
            )));
        }
        GridSpec::from_half(self.dim, self.half - by, self.h)
    }
}

/// Values of a function on a [`GridSpec`] lattice (row-major, last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    spec: GridSpec,
    values: Vec<f64>,
}

/// Outcome of the discrete convexity scan.
#[derive(Debug, Clone, Copy)]
pub struct ConvexityReport {
    pub min_second_derivative: f64,
    pub violations: usize,
    pub checked: usize,
    pub tolerance: f64,
}

impl ConvexityReport {
    pub fn convex(&self) -> bool {
        self.violations == 0
    }
}

impl GridFn {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        Ok(GridFn { spec, values })
    }

    pub fn sample(spec: GridSpec, f: impl Fn(&[f64]) -> f64 + Sync) -> Self {
        let values = (0..spec.len())
            .into_par_iter()
            .map(|k| f(&spec.point(k)))
            .collect();
        GridFn { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn h(&self) -> f64 {
        self.spec.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, idx: &[usize]) -> f64 {
        self.values[self.spec.ravel(idx)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFn {
        GridFn {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_with(&self, other: &GridFn, f: impl Fn(f64, f64) -> f64) -> Result<GridFn> {
        if self.spec != other.spec {
            return Err(Error::InvalidGrid("grids differ".into()));
        }
        Ok(GridFn {
            spec: self.spec,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Nodewise maximum `f v g`.
    pub fn vee(&self, other: &GridFn) -> Result<GridFn> {
        self.zip_with(other, f64::max)
    }

    /// Nodewise minimum `f ^ g` and whether the result is still discretely convex.
    pub fn wedge(&self, other: &GridFn) -> Result<(GridFn, bool)> {
        let w = self.zip_with(other, f64::min)?;
        let convex = w.convexity(1.0).convex();
        Ok((w, convex))
    }

    pub fn add(&self, other: &GridFn) -> Result<GridFn> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sup_distance(&self, other: &GridFn) -> Result<f64> {
        if self.spec != other.spec {
            return Err(Error::InvalidGrid("grids differ".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Restrict to the centred sub-lattice `target` (same spacing, smaller box).
    pub fn restrict(&self, target: &GridSpec) -> Result<GridFn> {
        if target.dim != self.spec.dim
            || target.h != self.spec.h
            || target.half > self.spec.half
        {
            return Err(Error::InvalidGrid("target is not a sub-lattice".into()));
        }
        let off = self.spec.half - target.half;
        let values = (0..target.len())
            .map(|k| {
                let idx: Vec<usize> = target.unravel(k).into_iter().map(|j| j + off).collect();
                self.value_at(&idx)
            })
            .collect();
        Ok(GridFn {
            spec: *target,
            values,
        })
    }

    /// Second differences along every axis and every diagonal `e_a +- e_b`,
    /// normalised to directional second-derivative estimates, must be
    /// `>= -c h` at interior nodes.
    pub fn convexity(&self, c: f64) -> ConvexityReport {
        let spec = self.spec;
        let tol = c * spec.h;
        let (min, violations, checked) = (0..spec.len())
            .into_par_iter()
            .map(|k| {
                let idx = spec.unravel(k);
                if !spec.is_interior(&idx, 1) {
                    return (f64::INFINITY, 0usize, 0usize);
                }
                let d2 = self.directional_second_differences(&idx);
                let local_min = d2.iter().copied().fold(f64::INFINITY, f64::min);
                let bad = d2.iter().filter(|&&v| v < -tol).count();
                (local_min, bad, d2.len())
            })
            .reduce(
                || (f64::INFINITY, 0, 0),
                |a, b| (a.0.min(b.0), a.1 + b.1, a.2 + b.2),
            );
        ConvexityReport {
            min_second_derivative: min,
            violations,
            checked,
            tolerance: tol,
        }
    }

    /// Second difference quotients at an interior node along every axis and
    /// every diagonal `e_a +- e_b`. All are `>= 0` for samples of a convex
    /// function, and lattice averaging preserves this.
    pub fn directional_second_differences(&self, idx: &[usize]) -> Vec<f64> {
        let spec = self.spec;
        let n = spec.dim;
        let k = spec.ravel(idx) as isize;
        let h2 = spec.h * spec.h;
        let strides: Vec<isize> = (0..n).map(|a| spec.stride(a) as isize).collect();
        let c0 = self.values[k as usize];
        let d2 = |off: isize, len2: f64| {
            (self.values[(k + off) as usize] - 2.0 * c0 + self.values[(k - off) as usize]) / (len2 * h2)
        };
        let mut out = Vec::with_capacity(n * n);
        for a in 0..n {
            out.push(d2(strides[a], 1.0));
            for b in (a + 1)..n {
                out.push(d2(strides[a] + strides[b], 2.0));
                out.push(d2(strides[a] - strides[b], 2.0));
            }
        }
        out
    }

    /// Multilinear interpolation; `None` outside the box.
    pub fn interpolate(&self, x: &[f64]) -> Option<f64> {
        let spec = self.spec;
        let n = spec.dim;
        let p = spec.per_axis();
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for a in 0..n {
            let s = x[a] / spec.h + spec.half as f64;
            if !(s >= -1e-12 && s <= (p - 1) as f64 + 1e-12) {
                return None;
            }
            let s = s.clamp(0.0, (p - 1) as f64);
            let j = (s.floor() as usize).min(p - 2);
            base[a] = j;
            frac[a] = s - j as f64;
        }
        let mut total = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = base.clone();
            for a in 0..n {
                if corner >> a & 1 == 1 {
                    idx[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w != 0.0 {
                total += w * self.value_at(&idx);
            }
        }
        Some(total)
    }

    /// Largest absolute forward difference quotient along any axis.
    pub fn lipschitz_estimate(&self) -> f64 {
        let spec = self.spec;
        let p = spec.per_axis();
        let mut best = 0.0f64;
        for a in 0..spec.dim {
            let s = spec.stride(a);
            for k in 0..spec.len() {
                if (k / s) % p + 1 < p {
                    best = best.max((self.values[k + s] - self.values[k]).abs() / spec.h);
                }
            }
        }
        best
    }

    /// Header `# dim,n; L; h`, then one row `i1,...,in,value` per node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "# dim,{}; {}; {}",
            self.spec.dim,
            fmt17(self.spec.half_width()),
            fmt17(self.spec.h)
        )?;
        let mut line = String::new();
        for (k, v) in self.values.iter().enumerate() {
            line.clear();
            for j in self.spec.unravel(k) {
                line.push_str(&j.to_string());
                line.push(',');
            }
            line.push_str(&fmt17(*v));
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<GridFn> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty grid file".into()))?
            .map_err(|e| Error::Parse(e.to_string()))?;
        let body = header
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse(format!("bad grid header: {header}")))?;
        let parts: Vec<&str> = body.split(';').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("bad grid header: {header}")));
        }
        let dim: usize = parts[0]
            .strip_prefix("dim,")
            .and_then(|d| d.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad dim field: {}", parts[0])))?;
        let half_width =
            parse_f64(parts[1]).ok_or_else(|| Error::Parse(format!("bad L: {}", parts[1])))?;
        let h = parse_f64(parts[2]).ok_or_else(|| Error::Parse(format!("bad h: {}", parts[2])))?;
        let spec = GridSpec::new(dim, half_width, h)?;
        let mut values = vec![f64::NAN; spec.len()];
        let mut seen = vec![false; spec.len()];
        for line in lines {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim + 1 {
                return Err(Error::Parse(format!("bad grid row: {line}")));
            }
            let mut idx = Vec::with_capacity(dim);
            for f in &fields[..dim] {
                let j: usize = f
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad index in row: {line}")))?;
                if j >= spec.per_axis() {
                    return Err(Error::Parse(format!("index out of range in row: {line}")));
                }
                idx.push(j);
            }
            let v = parse_f64(fields[dim])
                .ok_or_else(|| Error::Parse(format!("bad value in row: {line}")))?;
            let k = spec.ravel(&idx);
            values[k] = v;
            seen[k] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Parse(format!(
                "grid file misses node {:?}",
                spec.unravel(missing)
            )));
        }
        GridFn::new(spec, values)
    }
}
