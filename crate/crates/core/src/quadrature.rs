//! Adaptive one-dimensional Gauss-Kronrod quadrature.
//!
//! The integrator bisects the interval with the largest error estimate until
//! the global estimate falls below `max(abs_tol, rel_tol * |I|)`. The 21-point
//! rule never evaluates the integrand at interval endpoints, so integrable
//! endpoint singularities (`t^{-1/2}`, `log t`) are handled by bisection alone.
//! Known kinks of the integrand should be passed as breakpoints.

use crate::error::QuadError;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-13,
            rel_tol: 1e-13,
            max_intervals: 4000,
        }
    }
}

impl QuadConfig {
    pub fn absolute(abs_tol: f64) -> Self {
        QuadConfig {
            abs_tol,
            rel_tol: 0.0,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = 0.0;
    let mut res_k = fc * WGK[10];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..5 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += WG[j] * (f1 + f2);
        res_k += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let err = (res_k - res_g) * half;
    let habs = half.abs();
    (
        res_k * half,
        rescale_error(err, res_abs * habs, res_asc * habs),
    )
}

/// Neumaier-compensated sum in slice order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Integrate `f` over `[a, b]`, splitting first at every breakpoint strictly
/// inside the interval.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    cfg: QuadConfig,
) -> Result<QuadResult, QuadError> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(QuadError::InvalidInterval { a, b });
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_err: 0.0,
            intervals: 0,
        });
    }
    if a > b {
        let r = integrate(f, b, a, breakpoints, cfg)?;
        return Ok(QuadResult {
            value: -r.value,
            ..r
        });
    }

    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&p| p > a && p < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);

    let mut segs: Vec<Segment> = edges
        .windows(2)
        .map(|w| {
            let (value, err) = gk21(&f, w[0], w[1]);
            Segment {
                a: w[0],
                b: w[1],
                value,
                err,
            }
        })
        .collect();

    loop {
        let total = compensated_sum(segs.iter().map(|s| s.value));
        let err: f64 = segs.iter().map(|s| s.err).sum();
        let target = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if !total.is_finite() || !err.is_finite() {
            return Err(QuadError::NonFinite { a, b });
        }
        if err <= target {
            segs.sort_by(|x, y| x.a.total_cmp(&y.a));
            return Ok(QuadResult {
                value: compensated_sum(segs.iter().map(|s| s.value)),
                abs_err: err,
                intervals: segs.len(),
            });
        }
        if segs.len() >= cfg.max_intervals {
            return Err(QuadError::NoConvergence {
                value: total,
                achieved: err,
                requested: target,
            });
        }
        // Bisect the worst segment; ties resolved by position for determinism.
        let (worst, _) = segs
            .iter()
            .enumerate()
            .max_by(|(_, x), (_, y)| x.err.total_cmp(&y.err).then(y.a.total_cmp(&x.a)))
            .expect("at least one segment");
        let s = segs[worst];
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            return Err(QuadError::NoConvergence {
                value: total,
                achieved: err,
                requested: target,
            });
        }
        let (v1, e1) = gk21(&f, s.a, mid);
        let (v2, e2) = gk21(&f, mid, s.b);
        segs[worst] = Segment {
            a: s.a,
            b: mid,
            value: v1,
            err: e1,
        };
        segs.push(Segment {
            a: mid,
            b: s.b,
            value: v2,
            err: e2,
        });
    }
}

/// Integrate with the default (tight) tolerances.
pub fn integrate_default<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
) -> Result<f64, QuadError> {
    integrate(f, a, b, breakpoints, QuadConfig::default()).map(|r| r.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, &[], QuadConfig::default()).unwrap();
        assert!((r.value - 8.0).abs() < 1e-14);
    }

    #[test]
    fn inverse_sqrt_endpoint_singularity() {
        let r = integrate(|x| x.powf(-0.5), 0.0, 1.0, &[], QuadConfig::absolute(1e-10)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn reversed_interval_negates() {
        let r = integrate(|x| x, 1.0, 0.0, &[], QuadConfig::default()).unwrap();
        assert!((r.value + 0.5).abs() < 1e-15);
    }

    #[test]
    fn kink_at_breakpoint() {
        let f = |x: f64| (x - 0.3).abs();
        let r = integrate(f, 0.0, 1.0, &[0.3], QuadConfig::default()).unwrap();
        let exact = 0.5 * 0.09 + 0.5 * 0.49;
        assert!((r.value - exact).abs() < 1e-15);
        assert_eq!(r.intervals, 2);
    }

    #[test]
    fn non_integrable_reports_failure() {
        let r = integrate(|x| 1.0 / x, 0.0, 1.0, &[], QuadConfig::absolute(1e-10));
        assert!(matches!(
            r,
            Err(QuadError::NoConvergence { .. } | QuadError::NonFinite { .. })
        ));
    }
}
