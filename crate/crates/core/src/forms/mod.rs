//! Exact exterior algebra on `R^n x R^n` with generators
//! `dx_1..dx_n, dy_1..dy_n` and polynomial coefficients in `x_1..x_n, y_1..y_n`.
//!
//! Generator and variable `k < n` is `x_{k+1}`, `k >= n` is `y_{k-n+1}`.
//! A basis element is a bitmask of generators, read in increasing order.

mod identities;
mod poly;

pub use identities::{check_identities, IdentityCheck, IdentityReport};
pub use poly::{poly1_deriv, q, Poly, Q};

use std::collections::BTreeMap;

use num_traits::{One, Zero};

/// Rational `2n x 2n` matrix acting on `(x, y)` coordinates.
pub type LinearMap = Vec<Vec<Q>>;

#[derive(Clone, PartialEq, Eq)]
pub struct Form {
    n: usize,
    terms: BTreeMap<u32, Poly>,
}

impl std::fmt::Debug for Form {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, p)| format!("({:?}) {}", p, basis_name(self.n, *m)))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

fn basis_name(n: usize, mask: u32) -> String {
    let names: Vec<String> = (0..2 * n)
        .filter(|g| mask >> g & 1 == 1)
        .map(|g| {
            if g < n {
                format!("dx{}", g + 1)
            } else {
                format!("dy{}", g - n + 1)
            }
        })
        .collect();
    if names.is_empty() {
        "1".into()
    } else {
        names.join("^")
    }
}

/// Sign of moving the generators of `b` past those of `a`: `(-1)^{#{(p, q) in a x b : p > q}}`.
fn merge_sign(a: u32, b: u32) -> bool {
    let mut inversions = 0;
    let mut rest = b;
    while rest != 0 {
        let q = rest.trailing_zeros();
        inversions += (a >> (q + 1)).count_ones();
        rest &= rest - 1;
    }
    inversions % 2 == 1
}

impl Form {
    pub fn zero(n: usize) -> Self {
        Form {
            n,
            terms: BTreeMap::new(),
        }
    }

    /// The 0-form `p`.
    pub fn function(n: usize, p: Poly) -> Self {
        Self::from_terms(n, vec![(0, p)])
    }

    pub fn constant(n: usize, c: Q) -> Self {
        Self::function(n, Poly::constant(2 * n, c))
    }

    /// `dz_g`.
    pub fn generator(n: usize, g: usize) -> Self {
        Self::from_terms(n, vec![(1 << g, Poly::one(2 * n))])
    }

    pub fn dx(n: usize, k: usize) -> Self {
        Self::generator(n, k)
    }

    pub fn dy(n: usize, k: usize) -> Self {
        Self::generator(n, n + k)
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (u32, Poly)>) -> Self {
        let mut f = Self::zero(n);
        for (m, p) in terms {
            f.add_term(m, p);
        }
        f
    }

    fn add_term(&mut self, mask: u32, p: Poly) {
        if p.is_zero() {
            return;
        }
        let sum = match self.terms.remove(&mask) {
            Some(old) => old.add(&p),
            None => p,
        };
        if !sum.is_zero() {
            self.terms.insert(mask, sum);
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&u32, &Poly)> {
        self.terms.iter()
    }

    /// Degrees present among the terms.
    pub fn degrees(&self) -> Vec<u32> {
        let mut d: Vec<u32> = self.terms.keys().map(|m| m.count_ones()).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    pub fn add(&self, other: &Form) -> Form {
        let mut out = self.clone();
        for (m, p) in &other.terms {
            out.add_term(*m, p.clone());
        }
        out
    }

    pub fn sub(&self, other: &Form) -> Form {
        self.add(&other.scale(&-Q::one()))
    }

    pub fn scale(&self, c: &Q) -> Form {
        self.mul_poly(&Poly::constant(2 * self.n, c.clone()))
    }

    pub fn mul_poly(&self, p: &Poly) -> Form {
        Form::from_terms(self.n, self.terms.iter().map(|(m, c)| (*m, c.mul(p))))
    }

    pub fn wedge(&self, other: &Form) -> Form {
        assert_eq!(self.n, other.n, "wedge of forms over different spaces");
        let mut out = Form::zero(self.n);
        for (a, p) in &self.terms {
            for (b, r) in &other.terms {
                if a & b != 0 {
                    continue;
                }
                let c = p.mul(r);
                out.add_term(a | b, if merge_sign(*a, *b) { c.neg() } else { c });
            }
        }
        out
    }

    /// Exterior derivative.
    pub fn d(&self) -> Form {
        let mut out = Form::zero(self.n);
        for (mask, p) in &self.terms {
            for k in 0..2 * self.n {
                if mask >> k & 1 == 1 {
                    continue;
                }
                let dp = p.deriv(k);
                if dp.is_zero() {
                    continue;
                }
                let below = (mask & ((1u32 << k) - 1)).count_ones();
                out.add_term(mask | 1 << k, if below % 2 == 1 { dp.neg() } else { dp });
            }
        }
        out
    }

    /// Pullback along `z -> M z`.
    pub fn pullback(&self, m: &LinearMap) -> Form {
        let dim = 2 * self.n;
        assert!(m.len() == dim && m.iter().all(|r| r.len() == dim), "map must be 2n x 2n");
        let var_images: Vec<Poly> = (0..dim)
            .map(|k| {
                (0..dim).fold(Poly::zero(dim), |acc, j| {
                    acc.add(&Poly::var(dim, j).scale(&m[k][j]))
                })
            })
            .collect();
        let gen_images: Vec<Form> = (0..dim)
            .map(|k| {
                Form::from_terms(
                    self.n,
                    (0..dim).map(|j| (1u32 << j, Poly::constant(dim, m[k][j].clone()))),
                )
            })
            .collect();
        let mut out = Form::zero(self.n);
        for (mask, p) in &self.terms {
            let mut basis = Form::constant(self.n, Q::one());
            for g in 0..dim {
                if mask >> g & 1 == 1 {
                    basis = basis.wedge(&gen_images[g]);
                }
            }
            out = out.add(&basis.mul_poly(&p.compose(&var_images)));
        }
        out
    }
}

pub fn x(n: usize, k: usize) -> Poly {
    Poly::var(2 * n, k)
}

pub fn y(n: usize, k: usize) -> Poly {
    Poly::var(2 * n, n + k)
}

/// `|x|^2`.
pub fn r2(n: usize) -> Poly {
    (0..n).fold(Poly::zero(2 * n), |acc, k| acc.add(&x(n, k).pow(2)))
}

/// `sum y_k dx_k`.
pub fn alpha(n: usize) -> Form {
    (0..n).fold(Form::zero(n), |acc, k| acc.add(&Form::dx(n, k).mul_poly(&y(n, k))))
}

/// `sum x_k dy_k`.
pub fn beta(n: usize) -> Form {
    (0..n).fold(Form::zero(n), |acc, k| acc.add(&Form::dy(n, k).mul_poly(&x(n, k))))
}

/// `sum x_k dx_k`.
pub fn gamma(n: usize) -> Form {
    (0..n).fold(Form::zero(n), |acc, k| acc.add(&Form::dx(n, k).mul_poly(&x(n, k))))
}

/// `sum dx_k ^ dy_k`.
pub fn omega_s(n: usize) -> Form {
    (0..n).fold(Form::zero(n), |acc, k| acc.add(&Form::dx(n, k).wedge(&Form::dy(n, k))))
}

/// All permutations of `0..n` with their signs.
pub fn permutations(n: usize) -> Vec<(Vec<usize>, bool)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out.into_iter()
        .map(|p| {
            let inv = (0..n)
                .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
                .filter(|&(a, b)| p[a] > p[b])
                .count();
            (p, inv % 2 == 1)
        })
        .collect()
}

fn factorial(k: usize) -> i64 {
    (1..=k as i64).product()
}

/// `sum_pi sign(pi) c_pi dx_{pi(skip)} .. dx_{pi(n-i-1)} ^ dy_{pi(n-i)} .. dy_{pi(n-1)}`
/// divided by `i! (n-i)!`, where `c_pi = x_{pi(0)}` if `skip = 1` and 1 if `skip = 0`.
fn perm_form(n: usize, i: usize, skip: usize) -> Form {
    let norm = q(1, factorial(i) * factorial(n - i));
    let mut out = Form::zero(n);
    for (p, odd) in permutations(n) {
        let mut term = if skip == 1 {
            Form::function(n, x(n, p[0]))
        } else {
            Form::constant(n, Q::one())
        };
        for &k in &p[skip..n - i] {
            term = term.wedge(&Form::dx(n, k));
        }
        for &k in &p[n - i..] {
            term = term.wedge(&Form::dy(n, k));
        }
        out = if odd { out.sub(&term) } else { out.add(&term) };
    }
    out.scale(&norm)
}

/// `kappa_i`, `0 <= i <= n`, from the permutation sum.
pub fn kappa(n: usize, i: usize) -> Form {
    assert!(i <= n);
    perm_form(n, i, 0)
}

/// `kappa_i` as the sum over `|S| = i` of `dx_1 ^ .. ^ dx_n` with `dx_k`
/// replaced by `dy_k` for `k` in `S`.
pub fn kappa_by_subsets(n: usize, i: usize) -> Form {
    let mut out = Form::zero(n);
    for s in 0u32..(1 << n) {
        if s.count_ones() as usize != i {
            continue;
        }
        let term = (0..n).fold(Form::constant(n, Q::one()), |acc, k| {
            acc.wedge(&if s >> k & 1 == 1 {
                Form::dy(n, k)
            } else {
                Form::dx(n, k)
            })
        });
        out = out.add(&term);
    }
    out
}

/// `tau_i`, `0 <= i <= n-1`, with `d tau_i = kappa_i`.
pub fn tau(n: usize, i: usize) -> Form {
    assert!(i < n);
    perm_form(n, i, 1)
}

/// `G_t(x, y) = (x, y + t x)`.
pub fn g_t(n: usize, t: &Q) -> LinearMap {
    let dim = 2 * n;
    let mut m = vec![vec![Q::zero(); dim]; dim];
    for k in 0..dim {
        m[k][k] = Q::one();
    }
    for k in 0..n {
        m[n + k][k] = t.clone();
    }
    m
}

/// The same rotation `R` (n x n) acting on `x` and on `y`.
pub fn diagonal_rotation(r: &[Vec<Q>]) -> LinearMap {
    let n = r.len();
    let mut m = vec![vec![Q::zero(); 2 * n]; 2 * n];
    for a in 0..n {
        for b in 0..n {
            m[a][b] = r[a][b].clone();
            m[n + a][n + b] = r[a][b].clone();
        }
    }
    m
}

/// `(x, y) -> (y, x)`.
pub fn swap_map(n: usize) -> LinearMap {
    let mut m = vec![vec![Q::zero(); 2 * n]; 2 * n];
    for k in 0..n {
        m[k][n + k] = Q::one();
        m[n + k][k] = Q::one();
    }
    m
}
