//! Convolution of lattice functions with a normalised polynomial bump.

use rayon::prelude::*;

use super::grid::{GridFn, GridSpec};
use crate::error::{Error, Result};

/// Discrete kernel `w_j ∝ (1 - |j h|^2 / sigma^2)^2` on `|j h| < sigma`.
#[derive(Debug, Clone)]
pub struct Kernel {
    /// Integer offsets and weights; weights sum to one.
    pub taps: Vec<(Vec<isize>, f64)>,
    /// `sum_j w_j |j h|^2`.
    pub second_moment: f64,
    /// Nodes trimmed from each face of the input box.
    pub reach: usize,
}

pub fn kernel(dim: usize, h: f64, sigma: f64) -> Result<Kernel> {
    if !(sigma >= 2.0 * h * (1.0 - 1e-12)) {
        return Err(Error::KernelUnderResolved {
            sigma,
            min: 2.0 * h,
        });
    }
    let reach = (sigma / h - 1e-9).ceil() as usize;
    let r = reach as isize;
    let side = 2 * reach + 1;
    let mut taps = Vec::new();
    for flat in 0..side.pow(dim as u32) {
        let mut rem = flat;
        let mut off = vec![0isize; dim];
        for a in (0..dim).rev() {
            off[a] = (rem % side) as isize - r;
            rem /= side;
        }
        let d2 = off.iter().map(|&j| (j as f64 * h).powi(2)).sum::<f64>();
        let u = 1.0 - d2 / (sigma * sigma);
        if u > 0.0 {
            taps.push((off, u * u));
        }
    }
    let total: f64 = taps.iter().map(|t| t.1).sum();
    for t in &mut taps {
        t.1 /= total;
    }
    let second_moment = taps
        .iter()
        .map(|(off, w)| w * off.iter().map(|&j| (j as f64 * h).powi(2)).sum::<f64>())
        .sum();
    Ok(Kernel {
        taps,
        second_moment,
        reach,
    })
}

#[derive(Debug, Clone)]
pub struct Mollified {
    pub grid: GridFn,
    pub second_moment: f64,
    pub kernel_points: usize,
}

impl Mollified {
    /// Constant by which a mollified `|x|^2 / 2` exceeds the original.
    pub fn quadratic_offset(&self) -> f64 {
        0.5 * self.second_moment
    }
}

/// `g * k_sigma` on the box shrunk by the kernel reach.
pub fn mollify(g: &GridFn, sigma: f64) -> Result<Mollified> {
    let spec = *g.spec();
    let k = kernel(spec.dim(), spec.h(), sigma)?;
    let out: GridSpec = spec.shrink(k.reach)?;
    let strides: Vec<isize> = (0..spec.dim()).map(|a| spec.stride(a) as isize).collect();
    let offsets: Vec<(isize, f64)> = k
        .taps
        .iter()
        .map(|(off, w)| (off.iter().zip(&strides).map(|(j, s)| j * s).sum(), *w))
        .collect();
    let values: Vec<f64> = (0..out.len())
        .into_par_iter()
        .map(|kk| {
            let idx: Vec<usize> = out.unravel(kk).into_iter().map(|j| j + k.reach).collect();
            let centre = spec.ravel(&idx) as isize;
            offsets
                .iter()
                .map(|(o, w)| w * g.values()[(centre + o) as usize])
                .sum()
        })
        .collect();
    Ok(Mollified {
        grid: GridFn::new(out, values)?,
        second_moment: k.second_moment,
        kernel_points: k.taps.len(),
    })
}
