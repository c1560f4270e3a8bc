//! Special functions behind the t, F and normal distributions.

use crate::error::{Error, Result};
use crate::Scalar;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        // reflection: Γ(x)Γ(1−x) = π / sin(πx)
        let pi = T::lit(std::f64::consts::PI);
        return (pi / (pi * x).sin().abs()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut a = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += T::lit(c) / (x + T::from_usize_lossy(i));
    }
    let t = x + T::lit(LANCZOS_G) + half;
    T::lit(0.5 * (2.0 * std::f64::consts::PI).ln()) + (x + half) * t.ln() - t + a.ln()
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn inc_beta<T: Scalar>(x: T, a: T, b: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x >= T::one() {
        return T::one();
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (T::one() - x).ln();
    let front = ln_front.exp();
    if x < (a + T::one()) / (a + b + T::lit(2.0)) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        T::one() - front * beta_continued_fraction(T::one() - x, b, a) / b
    }
}

// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction<T: Scalar>(x: T, a: T, b: T) -> T {
    let tiny = T::min_positive_value() / T::epsilon();
    let eps = T::epsilon();
    let one = T::one();
    let two = T::lit(2.0);
    let qab = a + b;
    let qap = a + one;
    let qam = a - one;
    let mut c = one;
    let mut d = one - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = one / d;
    let mut h = d;
    for m in 1..=100_000usize {
        let m = T::from_usize_lossy(m);
        let m2 = two * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        let del = d * c;
        h *= del;
        if (del - one).abs() <= eps {
            break;
        }
    }
    h
}

/// Two-sided p-value of a Student t statistic with `df` degrees of freedom.
pub fn student_t_pvalue<T: Scalar>(t: T, df: T) -> Result<T> {
    if t.is_nan() || !(df > T::zero()) {
        return Err(Error::Domain(format!("t = {t}, df = {df}")));
    }
    if t.is_infinite() {
        return Ok(T::zero());
    }
    let x = df / (df + t * t);
    Ok(inc_beta(x, df * T::lit(0.5), T::lit(0.5)))
}

/// Upper-tail p-value of an F statistic with `(df1, df2)` degrees of freedom.
pub fn f_pvalue<T: Scalar>(f: T, df1: T, df2: T) -> Result<T> {
    if f.is_nan() || f < T::zero() || !(df1 > T::zero()) || !(df2 > T::zero()) {
        return Err(Error::Domain(format!("F = {f}, df1 = {df1}, df2 = {df2}")));
    }
    if f.is_infinite() {
        return Ok(T::zero());
    }
    let x = df2 / (df2 + df1 * f);
    Ok(inc_beta(x, df2 * T::lit(0.5), df1 * T::lit(0.5)))
}

/// Complementary error function.
pub fn erfc<T: Scalar>(z: T) -> T {
    if z < T::zero() {
        return T::lit(2.0) - erfc(-z);
    }
    let two_over_sqrt_pi = T::lit(std::f64::consts::FRAC_2_SQRT_PI);
    if z < T::lit(2.5) {
        // Maclaurin series of erf
        let z2 = z * z;
        let mut term = z;
        let mut sum = z;
        let mut n = 0usize;
        loop {
            n += 1;
            let nf = T::from_usize_lossy(n);
            term = -term * z2 / nf;
            let add = term / (T::lit(2.0) * nf + T::one());
            sum += add;
            if add.abs() <= T::epsilon() * sum.abs() || n > 500 {
                break;
            }
        }
        T::one() - two_over_sqrt_pi * sum
    } else {
        // Lentz evaluation of erfc(z) = e^{−z²}/√π · 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + …))))
        let tiny = T::min_positive_value() / T::epsilon();
        let mut f = z;
        let mut c = z;
        let mut d = T::zero();
        for k in 1..500usize {
            let ak = T::from_usize_lossy(k) * T::lit(0.5);
            d = z + ak * d;
            if d.abs() < tiny {
                d = tiny;
            }
            c = z + ak / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = T::one() / d;
            let del = c * d;
            f *= del;
            if (del - T::one()).abs() <= T::epsilon() {
                break;
            }
        }
        (-z * z).exp() * T::lit(0.5) * two_over_sqrt_pi / f
    }
}

/// Standard normal CDF.
pub fn norm_cdf<T: Scalar>(x: T) -> T {
    T::lit(0.5) * erfc(-x / T::lit(std::f64::consts::SQRT_2))
}

/// Inverse standard normal CDF: rational approximation refined by one Halley step.
pub fn inv_norm_cdf<T: Scalar>(q: T) -> Result<T> {
    if !(q > T::zero() && q < T::one()) {
        return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {q}")));
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let p = q.to_f64_lossy();
    let low = 0.02425;
    let x0 = if p < low {
        let r = (-2.0 * p.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    } else if p <= 1.0 - low {
        let r = p - 0.5;
        let s = r * r;
        (((((A[0] * s + A[1]) * s + A[2]) * s + A[3]) * s + A[4]) * s + A[5]) * r
            / (((((B[0] * s + B[1]) * s + B[2]) * s + B[3]) * s + B[4]) * s + 1.0)
    } else {
        let r = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    };
    let x = T::lit(x0);
    if q == T::lit(0.5) {
        return Ok(T::zero());
    }
    let e = norm_cdf(x) - q;
    let u = e * T::lit((2.0 * std::f64::consts::PI).sqrt()) * (x * x * T::lit(0.5)).exp();
    Ok(x - u / (T::one() + x * u * T::lit(0.5)))
}
