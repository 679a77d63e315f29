//! Exact verification of the invariant-form identities.

use std::fmt;

use num_traits::One;
use rayon::prelude::*;

use super::{
    alpha, beta, g_t, gamma, kappa, kappa_by_subsets, omega_s, poly1_deriv, q, r2, tau, Form,
    Q,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub i: Option<usize>,
    pub param: Option<String>,
    pub holds: bool,
    /// Controls are expected to fail.
    pub expected: bool,
}

impl IdentityCheck {
    pub fn pass(&self) -> bool {
        self.holds == self.expected
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub n: usize,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(IdentityCheck::pass)
    }

    pub fn failures(&self) -> Vec<&IdentityCheck> {
        self.checks.iter().filter(|c| !c.pass()).collect()
    }
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<28} {:>3} {:>6} {:>8} {:>8}  result", "identity", "i", "param", "holds", "expected")?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<28} {:>3} {:>6} {:>8} {:>8}  {}",
                c.name,
                c.i.map_or("-".to_string(), |i| i.to_string()),
                c.param.as_deref().unwrap_or("-"),
                c.holds,
                c.expected,
                if c.pass() { "PASS" } else { "FAIL" }
            )?;
        }
        write!(
            f,
            "n={}: {}/{} pass",
            self.n,
            self.checks.iter().filter(|c| c.pass()).count(),
            self.checks.len()
        )
    }
}

/// `p(s) = 1 + 2s - s^2/3 + s^3`, the radial test polynomial.
fn test_poly() -> Vec<Q> {
    vec![q(1, 1), q(2, 1), q(-1, 3), q(1, 1)]
}

type Job = Box<dyn Fn() -> IdentityCheck + Send + Sync>;

fn job(
    name: &'static str,
    i: Option<usize>,
    param: Option<String>,
    expected: bool,
    test: impl Fn() -> bool + Send + Sync + 'static,
) -> Job {
    Box::new(move || IdentityCheck {
        name,
        i,
        param: param.clone(),
        holds: test(),
        expected,
    })
}

fn jobs(n: usize) -> Vec<Job> {
    let mut out: Vec<Job> = Vec::new();
    let r2p = move || r2(n);
    let coeffs = test_poly();
    let dcoeffs = poly1_deriv(&coeffs);

    out.push(job("d_alpha = -omega_s", None, None, true, move || {
        alpha(n).d() == omega_s(n).scale(&q(-1, 1))
    }));
    out.push(job("d_gamma = 0", None, None, true, move || gamma(n).d().is_zero()));
    out.push(job("d_beta = omega_s", None, None, true, move || beta(n).d() == omega_s(n)));
    for i in 0..n {
        out.push(job("d_tau = kappa", Some(i), None, true, move || tau(n, i).d() == kappa(n, i)));
    }
    for i in 0..=n {
        out.push(job("kappa_subsets", Some(i), None, true, move || {
            kappa(n, i) == kappa_by_subsets(n, i)
        }));
        out.push(job("d_kappa = 0", Some(i), None, true, move || kappa(n, i).d().is_zero()));
    }

    // (a)
    // with d tau_0 = kappa_0 the i = 0 case carries the factor n of the general formula
    out.push(job("r2_kappa", Some(0), None, true, move || {
        kappa(n, 0).mul_poly(&r2p()) == gamma(n).wedge(&tau(n, 0)).scale(&q(n as i64, 1))
    }));
    out.push(job("control r2_kappa_0 unit", Some(0), None, false, move || {
        kappa(n, 0).mul_poly(&r2p()) == gamma(n).wedge(&tau(n, 0))
    }));
    for i in 1..n {
        out.push(job("r2_kappa", Some(i), None, true, move || {
            let lhs = kappa(n, i).mul_poly(&r2p());
            let rhs = gamma(n)
                .wedge(&tau(n, i))
                .scale(&q((n - i) as i64, 1))
                .add(&beta(n).wedge(&tau(n, i - 1)).scale(&q((n - i + 1) as i64, 1)));
            lhs == rhs
        }));
    }
    out.push(job("r2_kappa", Some(n), None, true, move || {
        kappa(n, n).mul_poly(&r2p()) == beta(n).wedge(&tau(n, n - 1))
    }));

    // (b)
    for i in 0..n {
        out.push(job("primitive gamma^tau", Some(i), None, true, move || {
            gamma(n).wedge(&tau(n, i)).wedge(&omega_s(n)).is_zero()
        }));
        out.push(job("primitive beta^tau", Some(i), None, true, move || {
            beta(n).wedge(&tau(n, i)).wedge(&omega_s(n)).is_zero()
        }));
    }
    for i in 0..=n {
        out.push(job("primitive kappa", Some(i), None, true, move || {
            kappa(n, i).wedge(&omega_s(n)).is_zero()
        }));
    }
    // the n-form omega_s ^ dx_1 ^ .. ^ dx_{n-2} is not primitive
    out.push(job("control omega_s^dx primitive", None, None, false, move || {
        let form = (0..n - 2).fold(omega_s(n), |acc, k| acc.wedge(&Form::dx(n, k)));
        form.wedge(&omega_s(n)).is_zero()
    }));

    // (c) with Psi = p(r^2)
    for i in 0..n {
        let (c, dc) = (coeffs.clone(), dcoeffs.clone());
        out.push(job("d(p tau) direct", Some(i), None, true, move || {
            let r = r2(n);
            let (p, dp) = (r.substitute_into(&c), r.substitute_into(&dc));
            let lhs = tau(n, i).mul_poly(&p).d();
            let rhs = kappa(n, i)
                .mul_poly(&p)
                .add(&gamma(n).wedge(&tau(n, i)).mul_poly(&dp).scale(&q(2, 1)));
            lhs == rhs
        }));
    }
    for i in 1..n {
        let (c, dc) = (coeffs.clone(), dcoeffs.clone());
        out.push(job("d(p tau) corrected", Some(i), None, true, move || {
            let r = r2(n);
            let (p, dp) = (r.substitute_into(&c), r.substitute_into(&dc));
            let lhs = tau(n, i).mul_poly(&p).d();
            let k = (n - i) as i64;
            let bracket = kappa(n, i)
                .mul_poly(&r)
                .sub(&beta(n).wedge(&tau(n, i - 1)).scale(&q(k + 1, 1)));
            let rhs = kappa(n, i)
                .mul_poly(&p)
                .add(&bracket.mul_poly(&dp).scale(&q(2, k)));
            lhs == rhs
        }));
        let (c, dc) = (coeffs.clone(), dcoeffs.clone());
        out.push(job("control d(p tau) literal", Some(i), None, false, move || {
            let r = r2(n);
            let (p, dp) = (r.substitute_into(&c), r.substitute_into(&dc));
            let lhs = tau(n, i).mul_poly(&p).d();
            let rhs = kappa(n, i)
                .mul_poly(&p)
                .add(&kappa(n, i).mul_poly(&r.mul(&dp)).scale(&q(2, 1)))
                .sub(&beta(n).wedge(&tau(n, i - 1)).mul_poly(&dp).scale(&q(2, 1)));
            lhs == rhs
        }));
    }

    // (d) with phi = p
    for i in 0..=n {
        let (c, dc) = (coeffs.clone(), dcoeffs.clone());
        out.push(job("d(phi kappa)", Some(i), None, true, move || {
            let r = r2(n);
            let (phi, dphi) = (r.substitute_into(&c), r.substitute_into(&dc));
            kappa(n, i).mul_poly(&phi).d()
                == gamma(n).wedge(&kappa(n, i)).mul_poly(&dphi).scale(&q(2, 1))
        }));
    }
    for i in 0..n {
        let dc = dcoeffs.clone();
        out.push(job("d(phi' gamma tau)", Some(i), None, true, move || {
            let dphi = r2(n).substitute_into(&dc);
            gamma(n).wedge(&tau(n, i)).mul_poly(&dphi).d()
                == gamma(n).wedge(&kappa(n, i)).mul_poly(&dphi).scale(&q(-1, 1))
        }));
    }

    // (e)
    for t in [q(1, 1), q(2, 1), q(-1, 1), q(1, 2)] {
        let label = t.to_string();
        out.push(job("G_t pullback", None, Some(label), true, move || {
            let lhs = kappa(n, n).pullback(&g_t(n, &t));
            let mut rhs = Form::zero(n);
            let mut power = Q::one();
            for i in (0..=n).rev() {
                rhs = rhs.add(&kappa(n, i).scale(&power));
                power *= t.clone();
            }
            lhs == rhs
        }));
    }
    out
}

/// Run every identity for `2 <= n <= 4`, in parallel, in a fixed order.
pub fn check_identities(n: usize) -> Result<IdentityReport> {
    if !(2..=4).contains(&n) {
        return Err(Error::InvalidArgument(format!("n = {n} must lie in 2..=4")));
    }
    let checks = jobs(n).par_iter().map(|j| j()).collect();
    Ok(IdentityReport { n, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_identities_hold_n2() {
        let r = check_identities(2).unwrap();
        assert!(r.all_pass(), "{r}");
    }

    #[test]
    fn all_identities_hold_n3() {
        let r = check_identities(3).unwrap();
        assert!(r.all_pass(), "{r}");
        assert!(r
            .checks
            .iter()
            .any(|c| c.name == "r2_kappa" && c.i == Some(1) && c.holds));
        assert!(r.checks.iter().any(|c| c.name.starts_with("control") && !c.holds));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(check_identities(1).is_err());
        assert!(check_identities(5).is_err());
    }
}
