//! Log-gamma, digamma, trigamma and log-beta on the positive reals.
//!
//! All three are evaluated the same way: the upward recurrence moves the
//! argument past [`SHIFT_THRESHOLD`], where the Stirling-type asymptotic
//! series with Bernoulli coefficients converges to full double precision
//! after seven terms.

use crate::error::{domain, Result};

/// Arguments are shifted up to at least this value before the asymptotic series.
pub const SHIFT_THRESHOLD: f64 = 10.0;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

// B_{2k} / (2k (2k-1)) for k = 1..=7, then the k = 8 coefficient as a truncation estimate.
const LGAMMA_COEFFS: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
];
const LGAMMA_NEXT: f64 = -3617.0 / 122_400.0;

// B_{2k} / (2k)
const DIGAMMA_COEFFS: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
];
const DIGAMMA_NEXT: f64 = -3617.0 / 8160.0;

// B_{2k}
const TRIGAMMA_COEFFS: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];
const TRIGAMMA_NEXT: f64 = -3617.0 / 510.0;

/// A function value with an a-posteriori bound on its absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialFunctionResult {
    pub value: f64,
    pub estimated_abs_error: f64,
}

fn check_arg(name: &str, z: f64) -> Result<()> {
    if z.is_finite() && z > 0.0 {
        Ok(())
    } else {
        domain(format!("{name} requires a finite positive argument, got {z}"))
    }
}

/// Evaluates `sum c_k w^k` for `w = 1/z^2`, `k = 0..7`, Horner style.
fn poly(coeffs: &[f64; 7], w: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * w + c)
}

pub fn log_gamma_with_error(z: f64) -> Result<SpecialFunctionResult> {
    check_arg("log_gamma", z)?;
    let mut y = z;
    let mut prod = 1.0;
    let mut shifts = 0u32;
    while y < SHIFT_THRESHOLD {
        prod *= y;
        y += 1.0;
        shifts += 1;
    }
    let inv = 1.0 / y;
    let w = inv * inv;
    let series = inv * poly(&LGAMMA_COEFFS, w);
    let head = (y - 0.5) * y.ln() - y + HALF_LN_2PI;
    let correction = if shifts > 0 { prod.ln() } else { 0.0 };
    let value = head + series - correction;
    let magnitude = head.abs() + y + correction.abs();
    let truncation = (LGAMMA_NEXT * inv * w.powi(7)).abs();
    Ok(SpecialFunctionResult {
        value,
        estimated_abs_error: truncation + 4.0 * f64::EPSILON * magnitude,
    })
}

pub fn digamma_with_error(z: f64) -> Result<SpecialFunctionResult> {
    check_arg("digamma", z)?;
    let mut y = z;
    let mut shift_sum = 0.0;
    let mut magnitude = 0.0;
    while y < SHIFT_THRESHOLD {
        let t = 1.0 / y;
        shift_sum += t;
        magnitude += t;
        y += 1.0;
    }
    let inv = 1.0 / y;
    let w = inv * inv;
    let asym = y.ln() - 0.5 * inv - w * poly(&DIGAMMA_COEFFS, w);
    let value = asym - shift_sum;
    magnitude += asym.abs();
    let truncation = (DIGAMMA_NEXT * w.powi(8)).abs();
    Ok(SpecialFunctionResult {
        value,
        estimated_abs_error: truncation + 2.0 * f64::EPSILON * magnitude,
    })
}

pub fn trigamma_with_error(z: f64) -> Result<SpecialFunctionResult> {
    check_arg("trigamma", z)?;
    let mut y = z;
    let mut shift_sum = 0.0;
    while y < SHIFT_THRESHOLD {
        shift_sum += 1.0 / (y * y);
        y += 1.0;
    }
    let inv = 1.0 / y;
    let w = inv * inv;
    let asym = inv + 0.5 * w + inv * w * poly(&TRIGAMMA_COEFFS, w);
    let value = asym + shift_sum;
    let truncation = (TRIGAMMA_NEXT * inv * w.powi(8)).abs();
    Ok(SpecialFunctionResult {
        value,
        estimated_abs_error: truncation + 2.0 * f64::EPSILON * value,
    })
}

/// `ln Γ(z)` for `z > 0`.
pub fn log_gamma(z: f64) -> Result<f64> {
    log_gamma_with_error(z).map(|r| r.value)
}

/// Digamma `Ψ(z) = Γ'(z)/Γ(z)` for `z > 0`.
pub fn digamma(z: f64) -> Result<f64> {
    digamma_with_error(z).map(|r| r.value)
}

/// Trigamma `Ψ'(z)` for `z > 0`.
pub fn trigamma(z: f64) -> Result<f64> {
    trigamma_with_error(z).map(|r| r.value)
}

/// `ln B(a, b) = ln Γ(a) + ln Γ(b) − ln Γ(a + b)`.
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    Ok(log_gamma(a)? + log_gamma(b)? - log_gamma(a + b)?)
}

/// `n` points spaced evenly in log scale over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Outcome of one family of inequalities checked over a grid.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub points: usize,
    pub violations: usize,
    /// Smallest observed `rhs − lhs`; negative means a violation.
    pub min_slack: f64,
}

impl InequalityCheck {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            points: 0,
            violations: 0,
            min_slack: f64::INFINITY,
        }
    }

    fn record(&mut self, lhs: f64, rhs: f64) {
        let slack = rhs - lhs;
        self.points += 1;
        if slack < 0.0 {
            self.violations += 1;
        }
        self.min_slack = self.min_slack.min(slack);
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.points > 0
    }
}

/// Checks the digamma/trigamma inequalities used in the moment asymptotics
/// at every point of `grid` (and every ordered pair for the log bounds).
pub fn check_inequalities(grid: &[f64]) -> Result<Vec<InequalityCheck>> {
    let mut tri_lower = InequalityCheck::new("trigamma >= 1/z^2 + 1/(z+1)");
    let mut tri_upper = InequalityCheck::new("trigamma <= 1/z^2 + 1/z");
    let mut half_upper_a = InequalityCheck::new("psi(z+1/2) - psi(z) <= 1/z");
    let mut half_upper_b = InequalityCheck::new("psi(z+1/2) - psi(z) <= 1/(2z) + 1/(2z^2)");
    let mut half_lower_a = InequalityCheck::new("psi(z+1/2) - psi(z) >= 1/(z(2z+1))");
    let mut half_lower_b = InequalityCheck::new("psi(z+1/2) - psi(z) >= 1/(2z), z >= 1/2");
    let mut log_lower = InequalityCheck::new("psi(t) - psi(s) >= ln t - ln s - 1/t");
    let mut log_upper = InequalityCheck::new("psi(t) - psi(s) <= ln t - ln s + 1/s");

    let psi: Vec<f64> = grid.iter().map(|&z| digamma(z)).collect::<Result<_>>()?;
    for (&z, &pz) in grid.iter().zip(&psi) {
        let tg = trigamma(z)?;
        tri_lower.record(1.0 / (z * z) + 1.0 / (z + 1.0), tg);
        tri_upper.record(tg, 1.0 / (z * z) + 1.0 / z);

        let half = digamma(z + 0.5)? - pz;
        half_upper_a.record(half, 1.0 / z);
        half_upper_b.record(half, 0.5 / z + 0.5 / (z * z));
        half_lower_a.record(1.0 / (z * (2.0 * z + 1.0)), half);
        if z >= 0.5 {
            half_lower_b.record(0.5 / z, half);
        }
    }
    for (&s, &ps) in grid.iter().zip(&psi) {
        for (&t, &pt) in grid.iter().zip(&psi) {
            let diff = pt - ps;
            let logs = t.ln() - s.ln();
            log_lower.record(logs - 1.0 / t, diff);
            log_upper.record(diff, logs + 1.0 / s);
        }
    }
    Ok(vec![
        tri_lower,
        tri_upper,
        half_upper_a,
        half_upper_b,
        half_lower_a,
        half_lower_b,
        log_lower,
        log_upper,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    /// Compensated summation for the slow oracles.
    #[derive(Default)]
    struct Kahan {
        sum: f64,
        c: f64,
    }

    impl Kahan {
        fn add(&mut self, x: f64) {
            let y = x - self.c;
            let t = self.sum + y;
            self.c = (t - self.sum) - y;
            self.sum = t;
        }
    }

    const N: usize = 200_000;

    /// `Ψ(z) = −γ − Σ_k (1/(z+k) − 1/(1+k))`, truncated at `N` with an
    /// Euler–Maclaurin tail.
    fn digamma_oracle(z: f64) -> f64 {
        let mut acc = Kahan::default();
        for k in 0..N {
            let k = k as f64;
            acc.add(1.0 / (z + k) - 1.0 / (1.0 + k));
        }
        let n = N as f64;
        let f = |k: f64| 1.0 / (z + k) - 1.0 / (1.0 + k);
        let df = |k: f64| -1.0 / ((z + k) * (z + k)) + 1.0 / ((1.0 + k) * (1.0 + k));
        let integral = ((1.0 + n) / (z + n)).ln();
        acc.add(integral + f(n) / 2.0 - df(n) / 12.0);
        -EULER_GAMMA - acc.sum
    }

    /// `Ψ'(z) = Σ_k 1/(z+k)^2` with an integral tail.
    fn trigamma_oracle(z: f64) -> f64 {
        let mut acc = Kahan::default();
        for k in 0..N {
            let t = z + k as f64;
            acc.add(1.0 / (t * t));
        }
        let t = z + N as f64;
        acc.add(1.0 / t + 0.5 / (t * t) + 1.0 / (6.0 * t * t * t));
        acc.sum
    }

    /// Weierstrass product `ln Γ(z) = −γz − ln z + Σ_{k≥1} (z/k − ln(1 + z/k))`.
    fn log_gamma_oracle(z: f64) -> f64 {
        let n = 1_000_000usize;
        let mut acc = Kahan::default();
        for k in 1..=n {
            let r = z / k as f64;
            acc.add(r - r.ln_1p());
        }
        let nf = n as f64;
        // Integral of the summand over [N, ∞) plus the Euler–Maclaurin end corrections.
        let g = |k: f64| z / k - (z / k).ln_1p();
        let tail = (nf + z) * (z / nf).ln_1p() - z;
        acc.add(tail - g(nf) / 2.0 + z * z / (12.0 * nf * nf * (nf + z)));
        -EULER_GAMMA * z - z.ln() + acc.sum
    }

    #[test]
    fn digamma_examples() {
        assert_abs_diff_eq!(digamma(1.0).unwrap(), -0.577_215_664_901_532_9, epsilon = 1e-14);
        assert_abs_diff_eq!(digamma(0.5).unwrap(), -1.963_510_026_021_423_5, epsilon = 1e-13);
        assert_abs_diff_eq!(digamma(1.5).unwrap(), 0.036_489_973_978_576_52, epsilon = 1e-13);
        // The example values themselves, rebuilt from the defining series.
        assert_abs_diff_eq!(digamma_oracle(0.5), -1.963_510_026_021_423_5, epsilon = 1e-11);
        assert_abs_diff_eq!(digamma_oracle(1.0), -EULER_GAMMA, epsilon = 1e-11);
    }

    #[test]
    fn digamma_difference_is_ln4() {
        let d = digamma(1.0).unwrap() - digamma(0.5).unwrap();
        assert_abs_diff_eq!(d, 4f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn trigamma_examples() {
        let p1 = trigamma_oracle(1.0);
        let ph = trigamma_oracle(0.5);
        assert_abs_diff_eq!(p1, PI * PI / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ph, PI * PI / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(trigamma(1.0).unwrap(), 1.644_934_066_848_226_4, epsilon = 1e-13);
        assert_abs_diff_eq!(trigamma(0.5).unwrap(), 4.934_802_200_544_679, epsilon = 1e-13);
        assert_abs_diff_eq!(trigamma(2.0).unwrap(), 0.644_934_066_848_226_4, epsilon = 1e-13);
    }

    #[test]
    fn log_gamma_examples() {
        assert_abs_diff_eq!(log_gamma(1.0).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(log_gamma(5.0).unwrap(), 24f64.ln(), epsilon = 1e-13);
        // Reflection: Γ(1/2)^2 = π / sin(π/2).
        let reflected = 0.5 * PI.ln();
        assert_abs_diff_eq!(reflected, 0.572_364_942_924_700_1, epsilon = 1e-15);
        assert_abs_diff_eq!(log_gamma(0.5).unwrap(), reflected, epsilon = 1e-13);
        assert_abs_diff_eq!(log_gamma_oracle(0.5), reflected, epsilon = 1e-10);
    }

    #[test]
    fn log_beta_examples() {
        assert_abs_diff_eq!(log_beta(1.0, 1.0).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(log_beta(0.5, 1.0).unwrap(), 2f64.ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(log_beta(0.5, 3.0).unwrap(), (16.0f64 / 15.0).ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(
            log_beta(2.5, 0.3).unwrap(),
            log_beta(0.3, 2.5).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn domain_errors() {
        for f in [digamma, trigamma, log_gamma] {
            assert!(f(0.0).is_err());
            assert!(f(-1.5).is_err());
            assert!(f(f64::NAN).is_err());
        }
        assert!(log_beta(-1.0, 1.0).is_err());
    }

    #[test]
    fn agrees_with_series_oracles() {
        for &z in &[1e-3, 0.013, 0.25, 0.7, 1.3, 2.9, 7.5, 9.99, 10.0, 33.3, 420.0, 1e3] {
            let d = digamma(z).unwrap();
            let scale = d.abs().max(1.0);
            assert!((d - digamma_oracle(z)).abs() <= 1e-11 * scale, "digamma z={z}");
            let t = trigamma(z).unwrap();
            assert!((t - trigamma_oracle(z)).abs() <= 1e-11 * t, "trigamma z={z}");
        }
        for &z in &[0.1, 0.5, 1.7, 3.2, 6.0] {
            let g = log_gamma(z).unwrap();
            assert!((g - log_gamma_oracle(z)).abs() <= 1e-9, "log_gamma z={z}");
        }
    }

    #[test]
    fn recurrences_on_log_grid() {
        for z in log_grid(1e-4, 1e4, 400) {
            let d = digamma(z + 1.0).unwrap() - digamma(z).unwrap() - 1.0 / z;
            let t = trigamma(z + 1.0).unwrap() - trigamma(z).unwrap() + 1.0 / (z * z);
            let g = log_gamma(z + 1.0).unwrap() - log_gamma(z).unwrap() - z.ln();
            // Absolute 1e-10, measured against the size of the terms involved.
            let scale = |v: f64| v.abs().max(1.0);
            assert!(d.abs() <= 1e-10 * scale(1.0 / z), "digamma recurrence z={z}: {d}");
            assert!(t.abs() <= 1e-10 * scale(1.0 / (z * z)), "trigamma recurrence z={z}: {t}");
            assert!(g.abs() <= 1e-10 * scale(z.ln()), "log_gamma recurrence z={z}: {g}");
        }
    }

    #[test]
    fn trigamma_positive_and_decreasing() {
        let grid = log_grid(1e-4, 1e4, 300);
        let vals: Vec<f64> = grid.iter().map(|&z| trigamma(z).unwrap()).collect();
        assert!(vals.iter().all(|&v| v > 0.0));
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn inequality_suite_holds() {
        let grid = log_grid(1e-4, 1e4, 200);
        for check in check_inequalities(&grid).unwrap() {
            assert!(check.passed(), "{check:?}");
        }
    }

    #[test]
    fn error_estimates_are_small() {
        for z in log_grid(1e-6, 1e6, 200) {
            for r in [
                digamma_with_error(z).unwrap(),
                trigamma_with_error(z).unwrap(),
                log_gamma_with_error(z).unwrap(),
            ] {
                assert!(
                    r.estimated_abs_error <= 1e-10 * r.value.abs().max(1.0),
                    "z={z}: {r:?}"
                );
            }
        }
    }
}
