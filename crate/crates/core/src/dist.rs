//! Normal and Student-t distribution functions used by the significance tests.

use std::f64::consts::{PI, SQRT_2};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 10_000;

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.5 {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x < 2.5 {
        erf_series(x)
    } else {
        1.0 - erfc_continued_fraction(x)
    }
}

// erf(x) = 2/sqrt(pi) exp(-x^2) sum_n 2^n x^(2n+1) / (2n+1)!!, all terms positive.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= 2.0 * x2 / (2.0 * k + 1.0);
        sum += term;
        if term <= sum * CF_EPS {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

// erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))),
// evaluated with the modified Lentz method.
fn erfc_continued_fraction(x: f64) -> f64 {
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..CF_MAX_ITER {
        let a = k as f64 / 2.0;
        d = x + a * d;
        d = if d.abs() < CF_TINY { CF_TINY } else { d };
        c = x + a / c;
        c = if c.abs() < CF_TINY { CF_TINY } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < CF_EPS {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Upper tail `P(Z > z)`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Two-sided p-value `P(|Z| > |z|)`.
pub fn normal_two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / SQRT_2).min(1.0)
}

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

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized incomplete beta `I_x(a, b)`. `one_minus_x` is passed
/// separately so callers can supply it without cancellation.
pub fn beta_inc(a: f64, b: f64, x: f64, one_minus_x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if one_minus_x <= 0.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * one_minus_x.ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(b, a, one_minus_x) / b
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    d = if d.abs() < CF_TINY { CF_TINY } else { d };
    d = 1.0 / d;
    let mut h = d;
    for m in 1..CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        d = if d.abs() < CF_TINY { CF_TINY } else { d };
        c = 1.0 + aa / c;
        c = if c.abs() < CF_TINY { CF_TINY } else { c };
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        d = if d.abs() < CF_TINY { CF_TINY } else { d };
        c = 1.0 + aa / c;
        c = if c.abs() < CF_TINY { CF_TINY } else { c };
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Two-sided p-value `P(|T| > |t|)` for Student's t with `dof` degrees of
/// freedom.
pub fn t_two_sided_p(t: f64, dof: f64) -> f64 {
    if t.is_nan() || dof <= 0.0 {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let t2 = t * t;
    let x = dof / (dof + t2);
    let one_minus_x = t2 / (dof + t2);
    beta_inc(0.5 * dof, 0.5, x, one_minus_x).clamp(0.0, 1.0)
}

/// Upper tail `P(T > t)`.
pub fn t_sf(t: f64, dof: f64) -> f64 {
    let half = 0.5 * t_two_sided_p(t, dof);
    if t >= 0.0 {
        half
    } else {
        1.0 - half
    }
}

pub fn t_cdf(t: f64, dof: f64) -> f64 {
    1.0 - t_sf(t, dof)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson rule, used as an independent quadrature oracle.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut s = f(a) + f(b);
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    fn normal_cdf_oracle(z: f64) -> f64 {
        let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
        0.5 + z.signum() * simpson(pdf, 0.0, z.abs(), 20_000)
    }

    // With t = sqrt(nu) tan(theta) the t kernel becomes cos^(nu-1)(theta).
    fn t_cdf_oracle(t: f64, nu: f64) -> f64 {
        let kernel = |th: f64| th.cos().powf(nu - 1.0);
        let total = simpson(kernel, -PI / 2.0, PI / 2.0, 40_000);
        let upto = simpson(kernel, 0.0, (t / nu.sqrt()).atan().abs(), 40_000);
        0.5 + t.signum() * upto / total
    }

    #[test]
    fn normal_cdf_matches_quadrature() {
        for &z in &[-6.0, -3.3, -1.96, -0.5, 0.0, 0.1, 1.0, 1.6449, 2.4, 2.6, 3.5355, 5.0] {
            let got = normal_cdf(z);
            let want = normal_cdf_oracle(z);
            assert!((got - want).abs() < 1e-12, "z={z}: {got} vs {want}");
        }
    }

    #[test]
    fn normal_reference_points() {
        assert!((normal_two_sided_p(1.959_963_984_540_054) - 0.05).abs() < 1e-14);
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        // Far tail keeps relative precision.
        let p = normal_sf(10.0);
        assert!((p / 7.619_853_024_160_527e-24 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn t_cdf_matches_quadrature() {
        for &nu in &[1.0, 2.0, 3.0, 5.0, 6.0, 10.0, 30.0, 97.0, 497.0] {
            for &t in &[-4.0, -2.1, -0.3, 0.0, 0.7, 1.5, 2.5, 6.0] {
                let got = t_cdf(t, nu);
                let want = t_cdf_oracle(t, nu);
                assert!((got - want).abs() < 1e-11, "nu={nu} t={t}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn t_closed_forms() {
        // Cauchy: P(T > t) = 1/2 - atan(t)/pi
        for &t in &[0.5, 1.0, 3.0] {
            assert!((t_sf(t, 1.0) - (0.5 - t.atan() / PI)).abs() < 1e-14);
        }
        // nu = 2: P(T > t) = 1/2 - t / (2 sqrt(2 + t^2))
        for &t in &[0.5, 1.0, 3.0] {
            assert!((t_sf(t, 2.0) - (0.5 - t / (2.0 * (2.0 + t * t).sqrt()))).abs() < 1e-14);
        }
    }

    #[test]
    fn ln_gamma_integers() {
        let mut fact = 1.0_f64;
        for k in 1..20 {
            fact *= k as f64;
            assert!((ln_gamma(k as f64 + 1.0) - fact.ln()).abs() < 1e-12);
        }
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-14);
    }
}
