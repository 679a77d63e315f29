//! Multivariate polynomials with rational coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Q = BigRational;

/// `p / q` as a rational.
pub fn q(p: i64, r: i64) -> Q {
    BigRational::new(p.into(), r.into())
}

/// Sparse polynomial in `nvars` variables; zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Q>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mono: Vec<String> = e
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(v, &k)| if k == 1 { format!("z{v}") } else { format!("z{v}^{k}") })
                    .collect();
                if mono.is_empty() {
                    format!("{c}")
                } else {
                    format!("{c}*{}", mono.join("*"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Q) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Q::one())
    }

    /// The coordinate `z_k`.
    pub fn var(nvars: usize, k: usize) -> Self {
        let mut e = vec![0; nvars];
        e[k] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, Q::one());
        p
    }

    pub fn monomial(exponents: Vec<u32>, c: Q) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Q)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum())
            .max()
            .unwrap_or(0)
    }

    fn add_term(&mut self, e: Vec<u32>, c: Q) {
        use std::collections::btree_map::Entry;
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        self.scale(&-Q::one())
    }

    pub fn scale(&self, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        (0..k).fold(Poly::one(self.nvars), |acc, _| acc.mul(self))
    }

    /// `d/dz_k`.
    pub fn deriv(&self, k: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[k] > 0 {
                let mut e2 = e.clone();
                e2[k] -= 1;
                out.add_term(e2, c * Q::from_integer(e[k].into()));
            }
        }
        out
    }

    /// Substitute `z_k -> images[k]`.
    pub fn compose(&self, images: &[Poly]) -> Poly {
        let nv = images.first().map_or(self.nvars, |p| p.nvars);
        let mut out = Poly::zero(nv);
        for (e, c) in &self.terms {
            let mut term = Poly::constant(nv, c.clone());
            for (k, &pw) in e.iter().enumerate() {
                if pw > 0 {
                    term = term.mul(&images[k].pow(pw));
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// `s -> sum_k c_k s^k` evaluated at `s = self`.
    pub fn substitute_into(&self, coeffs: &[Q]) -> Poly {
        coeffs
            .iter()
            .rev()
            .fold(Poly::zero(self.nvars), |acc, c| {
                acc.mul(self).add(&Poly::constant(self.nvars, c.clone()))
            })
    }
}

/// Formal derivative of `sum_k c_k s^k`.
pub fn poly1_deriv(coeffs: &[Q]) -> Vec<Q> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * Q::from_integer((k as i64).into()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let s = x.add(&y);
        let sq = s.mul(&s);
        let expect = x.mul(&x).add(&x.mul(&y).scale(&q(2, 1))).add(&y.mul(&y));
        assert_eq!(sq, expect);
        assert!(s.sub(&s).is_zero());
        assert_eq!(sq.degree(), 2);
    }

    #[test]
    fn derivative_and_composition() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let p = x.pow(3).mul(&y);
        assert_eq!(p.deriv(0), x.pow(2).mul(&y).scale(&q(3, 1)));
        // (x, y) -> (y, x)
        assert_eq!(p.compose(&[y.clone(), x.clone()]), y.pow(3).mul(&x));
    }

    #[test]
    fn univariate_substitution() {
        let x = Poly::var(1, 0);
        let p = x.substitute_into(&[q(1, 1), q(0, 1), q(1, 2)]);
        assert_eq!(p, Poly::one(1).add(&x.pow(2).scale(&q(1, 2))));
        assert_eq!(poly1_deriv(&[q(1, 1), q(3, 1), q(1, 2)]), vec![q(3, 1), q(1, 1)]);
    }
}
