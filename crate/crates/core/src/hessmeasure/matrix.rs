//! Symmetric matrices stored by their upper triangle, elementary symmetric
//! functions of their eigenvalues, and the characteristic-polynomial check.

use std::fmt::Debug;

use num_traits::{Num, Signed};

/// Scalar field for exact (rational) and floating-point matrix code.
pub trait Scalar: Clone + Num + Signed + PartialOrd + Debug {}
impl<T: Clone + Num + Signed + PartialOrd + Debug> Scalar for T {}

#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T = f64> {
    n: usize,
    upper: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            upper: vec![T::zero(); n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.set(i, i, d.clone());
        }
        m
    }

    /// Build from `entry(i, j)` evaluated for `i <= j` only.
    pub fn from_fn(n: usize, mut entry: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, entry(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.upper[self.index(i, j)].clone()
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let k = self.index(i, j);
        self.upper[k] = v;
    }

    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // rows 0..i hold n + (n-1) + ... + (n-i+1) entries
        i * (2 * self.n - i + 1) / 2 + (j - i)
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn scale(&self, c: T) -> Self {
        SymMatrix {
            n: self.n,
            upper: self.upper.iter().map(|v| v.clone() * c.clone()).collect(),
        }
    }

    pub fn add_diagonal(&self, t: T) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            let v = m.get(i, i) + t.clone();
            m.set(i, i, v);
        }
        m
    }

    pub fn trace(&self) -> T {
        (0..self.n).fold(T::zero(), |acc, i| acc + self.get(i, i))
    }

    pub fn det(&self) -> T {
        det(self.to_dense())
    }

    /// Determinant of the principal submatrix on the index set `rows`.
    pub fn principal_minor(&self, rows: &[usize]) -> T {
        let sub = rows
            .iter()
            .map(|&i| rows.iter().map(|&j| self.get(i, j)).collect())
            .collect();
        det(sub)
    }

    /// `e_k(A)`: the sum of all principal `k x k` minors, which equals the
    /// `k`-th elementary symmetric polynomial of the eigenvalues. `e_0 = 1`.
    pub fn elem_sym(&self, k: usize) -> T {
        if k == 0 {
            return T::one();
        }
        if k > self.n {
            return T::zero();
        }
        let mut total = T::zero();
        for_each_subset(self.n, k, |rows| {
            total = total.clone() + self.principal_minor(rows);
        });
        total
    }

    /// All of `e_0..=e_n`.
    pub fn elem_sym_all(&self) -> Vec<T> {
        (0..=self.n).map(|k| self.elem_sym(k)).collect()
    }
}

impl SymMatrix<f64> {
    /// Eigenvalues in ascending order (cyclic Jacobi).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = self.to_dense();
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>() + off;
            if off <= 1e-30 * scale.max(f64::MIN_POSITIVE) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[p][q] == 0.0 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.upper.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Determinant by Gaussian elimination with partial pivoting on `|.|`.
pub fn det<T: Scalar>(mut a: Vec<Vec<T>>) -> T {
    let n = a.len();
    let mut sign = T::one();
    let mut acc = T::one();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| {
                a[x][col]
                    .abs()
                    .partial_cmp(&a[y][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(y.cmp(&x))
            })
            .expect("non-empty column");
        if a[pivot][col].is_zero() {
            return T::zero();
        }
        if pivot != col {
            a.swap(pivot, col);
            sign = -sign;
        }
        let p = a[col][col].clone();
        for r in (col + 1)..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone() / p.clone();
            for c in col..n {
                let v = a[col][c].clone() * factor.clone();
                a[r][c] = a[r][c].clone() - v;
            }
        }
        acc = acc * p;
    }
    sign * acc
}

/// Visit every strictly increasing `k`-subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if idx[pos] < n - k + pos {
                idx[pos] += 1;
                for q in (pos + 1)..k {
                    idx[q] = idx[q - 1] + 1;
                }
                break;
            }
            if pos == 0 {
                return;
            }
        }
        if k == 0 {
            return;
        }
    }
}

/// Result of comparing `det(A + t I)` with `sum_i t^{n-i} e_i(A)`.
#[derive(Debug, Clone)]
pub struct DetExpansionCase<T> {
    pub t: T,
    pub determinant: T,
    pub expansion: T,
}

#[derive(Debug, Clone)]
pub struct DetExpansionReport<T> {
    pub cases: Vec<DetExpansionCase<T>>,
}

impl DetExpansionReport<f64> {
    pub fn max_relative_error(&self) -> f64 {
        self.cases
            .iter()
            .map(|c| (c.determinant - c.expansion).abs() / c.determinant.abs().max(1.0))
            .fold(0.0, f64::max)
    }

    pub fn passes(&self, rel_tol: f64) -> bool {
        self.max_relative_error() <= rel_tol
    }
}

impl<T: Scalar> DetExpansionReport<T> {
    pub fn exact(&self) -> bool {
        self.cases.iter().all(|c| c.determinant == c.expansion)
    }
}

pub fn det_expansion_check<T: Scalar>(a: &SymMatrix<T>, ts: &[T]) -> DetExpansionReport<T> {
    let n = a.dim();
    let e = a.elem_sym_all();
    let cases = ts
        .iter()
        .map(|t| {
            let determinant = a.add_diagonal(t.clone()).det();
            // Horner in t: sum_i e_i t^{n-i}
            let expansion = e
                .iter()
                .fold(T::zero(), |acc, ei| acc * t.clone() + ei.clone());
            debug_assert_eq!(e.len(), n + 1);
            DetExpansionCase {
                t: t.clone(),
                determinant,
                expansion,
            }
        })
        .collect();
    DetExpansionReport { cases }
}
