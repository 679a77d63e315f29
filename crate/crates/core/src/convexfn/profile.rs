use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Smoothness class of a radial profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grade {
    /// Twice continuously differentiable, including at the origin.
    C2,
    /// Hessian defined almost everywhere; `kinks` lists where `deriv2` jumps.
    C11,
}

/// A convex profile `phi: [0, inf) -> R` together with its first and second
/// derivatives. `phi(|x|)` is the radial convex function it generates.
#[derive(Clone)]
pub struct RadialProfile {
    name: String,
    value: ScalarFn,
    deriv1: ScalarFn,
    deriv2: ScalarFn,
    grade: Grade,
    kinks: Vec<f64>,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("name", &self.name)
            .field("grade", &self.grade)
            .field("kinks", &self.kinks)
            .finish()
    }
}

impl RadialProfile {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv2: impl Fn(f64) -> f64 + Send + Sync + 'static,
        grade: Grade,
        kinks: Vec<f64>,
    ) -> Self {
        RadialProfile {
            name: name.into(),
            value: Arc::new(value),
            deriv1: Arc::new(deriv1),
            deriv2: Arc::new(deriv2),
            grade,
            kinks,
        }
    }

    /// `r^2 / 2`, generating `|x|^2 / 2`.
    pub fn square() -> Self {
        Self::new("square", |r| 0.5 * r * r, |r| r, |_| 1.0, Grade::C2, vec![])
    }

    /// `r^4`.
    pub fn quartic() -> Self {
        Self::new(
            "quartic",
            |r| r.powi(4),
            |r| 4.0 * r.powi(3),
            |r| 12.0 * r * r,
            Grade::C2,
            vec![],
        )
    }

    /// `r`, generating the cone `|x|`; its Hessian is undefined only at 0.
    pub fn cone() -> Self {
        Self::new("cone", |r| r, |_| 1.0, |_| 0.0, Grade::C11, vec![0.0])
    }

    /// `sum_k c_k r^k`. C2 at the origin iff `c_1 = 0`.
    pub fn polynomial(coeffs: &[f64]) -> Self {
        let c: Arc<[f64]> = coeffs.into();
        let (c0, c1, c2) = (c.clone(), c.clone(), c.clone());
        let grade = if coeffs.get(1).copied().unwrap_or(0.0) == 0.0 {
            Grade::C2
        } else {
            Grade::C11
        };
        Self::new(
            format!("poly{:?}", coeffs),
            move |r| c0.iter().rev().fold(0.0, |acc, &a| acc * r + a),
            move |r| {
                c1.iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (k, &a)| acc * r + k as f64 * a)
            },
            move |r| {
                c2.iter()
                    .enumerate()
                    .skip(2)
                    .rev()
                    .fold(0.0, |acc, (k, &a)| acc * r + (k * (k - 1)) as f64 * a)
            },
            grade,
            vec![],
        )
    }

    /// `c * phi`.
    pub fn scaled(&self, c: f64) -> Self {
        let (v, d1, d2) = (self.value.clone(), self.deriv1.clone(), self.deriv2.clone());
        RadialProfile {
            name: format!("{}*{}", c, self.name),
            value: Arc::new(move |r| c * v(r)),
            deriv1: Arc::new(move |r| c * d1(r)),
            deriv2: Arc::new(move |r| c * d2(r)),
            grade: self.grade,
            kinks: self.kinks.clone(),
        }
    }

    pub fn sum(&self, other: &RadialProfile) -> Self {
        let (v, d1, d2) = (self.value.clone(), self.deriv1.clone(), self.deriv2.clone());
        let (w, e1, e2) = (
            other.value.clone(),
            other.deriv1.clone(),
            other.deriv2.clone(),
        );
        let grade = if self.grade == Grade::C2 && other.grade == Grade::C2 {
            Grade::C2
        } else {
            Grade::C11
        };
        let mut kinks = self.kinks.clone();
        kinks.extend(&other.kinks);
        kinks.sort_by(f64::total_cmp);
        kinks.dedup();
        RadialProfile {
            name: format!("{}+{}", self.name, other.name),
            value: Arc::new(move |r| v(r) + w(r)),
            deriv1: Arc::new(move |r| d1(r) + e1(r)),
            deriv2: Arc::new(move |r| d2(r) + e2(r)),
            grade,
            kinks,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn grade(&self) -> Grade {
        self.grade
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn value(&self, r: f64) -> f64 {
        (self.value)(r)
    }

    pub fn deriv1(&self, r: f64) -> f64 {
        (self.deriv1)(r)
    }

    pub fn deriv2(&self, r: f64) -> f64 {
        (self.deriv2)(r)
    }

    /// Check convexity and origin regularity on a uniform sample of `[0, r_max]`.
    pub fn validate(&self, r_max: f64) -> Result<()> {
        const SAMPLES: usize = 2000;
        let tol = 1e-12;
        let mut prev = self.deriv1(0.0);
        if self.grade == Grade::C2 && prev.abs() > tol {
            return Err(Error::InvalidProfile(format!(
                "{}: deriv1(0) = {} but C2 grade requires 0",
                self.name, prev
            )));
        }
        for k in 0..=SAMPLES {
            let r = r_max * k as f64 / SAMPLES as f64;
            let d1 = self.deriv1(r);
            let d2 = self.deriv2(r);
            if d1 < prev - tol * prev.abs().max(1.0) {
                return Err(Error::InvalidProfile(format!(
                    "{}: deriv1 decreases at r = {}",
                    self.name, r
                )));
            }
            if d2 < -tol * d2.abs().max(1.0) {
                return Err(Error::InvalidProfile(format!(
                    "{}: deriv2 = {} < 0 at r = {}",
                    self.name, d2, r
                )));
            }
            prev = d1;
        }
        Ok(())
    }
}
