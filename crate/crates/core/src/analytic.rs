//! Closed-form constants, moments of the log-resistance `S_x`, their leading
//! asymptotics, and the predicted growth law of the running maximum.

use serde::{Deserialize, Serialize};

use crate::environment::beta_params;
use crate::error::{domain, Result};
use crate::scheme::WalkConfig;
use crate::special::{digamma, trigamma};

/// Shape of the predicted growth of `max_{m<=n} X_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalingKind {
    /// `(K ln n)^exponent`
    LogPower,
    /// `n^exponent`
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingLaw {
    pub kind: ScalingKind,
    pub exponent: f64,
    /// `K(alpha, delta)` for [`ScalingKind::LogPower`].
    pub constant: Option<f64>,
}

impl ScalingLaw {
    /// The normalizer at time `n`. Positive for `n >= 2`.
    pub fn normalizer(&self, n: u64) -> f64 {
        let n = n as f64;
        match self.kind {
            ScalingKind::LogPower => {
                let k = self.constant.expect("log-power law carries its constant");
                (k * n.ln()).powf(self.exponent)
            }
            ScalingKind::Power => n.powf(self.exponent),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    pub mean: f64,
    pub variance: f64,
}

fn require_positive_delta(cfg: &WalkConfig) -> Result<()> {
    if cfg.delta() > 0.0 {
        Ok(())
    } else {
        domain("the Beta environment requires delta > 0")
    }
}

/// The constant `K(alpha, delta)` of the log-power law, for `alpha < 1`, `delta > 0`.
///
/// The three branches are kept exactly as defined; the function is not
/// continuous at `alpha = 0`.
pub fn k_constant(alpha: f64, delta: f64) -> Result<f64> {
    if !(alpha < 1.0) {
        return domain(format!("k_constant requires alpha < 1, got {alpha}"));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return domain(format!("k_constant requires delta > 0, got {delta}"));
    }
    Ok(if alpha < 0.0 {
        (1.0 - alpha) / (2.0 * delta)
    } else if alpha == 0.0 {
        let a = 0.5 / delta;
        1.0 / (digamma(a + 0.5)? - digamma(a)?)
    } else {
        (1.0 - alpha) / delta
    })
}

/// Mean and variance of the single-site increment
/// `ζ_i = ln((1 − p_i)/p_i)` with `p_i ~ Beta(a_i, b_i)`.
pub fn site_moments(cfg: &WalkConfig, i: u64) -> Result<MomentPair> {
    let bp = beta_params(cfg, i)?;
    Ok(MomentPair {
        mean: digamma(bp.b)? - digamma(bp.a)?,
        variance: trigamma(bp.a)? + trigamma(bp.b)?,
    })
}

/// `E[S_x]` as the direct sum of per-site means.
pub fn mean_s(cfg: &WalkConfig, x: u64) -> Result<f64> {
    require_positive_delta(cfg)?;
    if x == 0 {
        return domain("mean_s requires x >= 1");
    }
    (1..=x).try_fold(0.0, |acc, i| Ok(acc + site_moments(cfg, i)?.mean))
}

/// `E[S_x]` in telescoped form:
/// `Ψ(a_0) − Ψ(a_x) + Σ_{i<x} [Ψ(a_i + 1/2) − Ψ(a_i)]` with `a_i = w_0(i)/(2Δ)`.
pub fn mean_s_telescoped(cfg: &WalkConfig, x: u64) -> Result<f64> {
    require_positive_delta(cfg)?;
    if x == 0 {
        return domain("mean_s requires x >= 1");
    }
    let two_delta = 2.0 * cfg.delta();
    let a = |i: u64| cfg.initial_weight(i) / two_delta;
    let mut sum = digamma(a(0))? - digamma(a(x))?;
    for i in 0..x {
        let ai = a(i);
        sum += digamma(ai + 0.5)? - digamma(ai)?;
    }
    Ok(sum)
}

/// `V[S_x]`, the sum of per-site trigamma pairs.
pub fn var_s(cfg: &WalkConfig, x: u64) -> Result<f64> {
    require_positive_delta(cfg)?;
    if x == 0 {
        return domain("var_s requires x >= 1");
    }
    (1..=x).try_fold(0.0, |acc, i| Ok(acc + site_moments(cfg, i)?.variance))
}

pub fn moments(cfg: &WalkConfig, x: u64) -> Result<MomentPair> {
    Ok(MomentPair {
        mean: mean_s(cfg, x)?,
        variance: var_s(cfg, x)?,
    })
}

fn check_asymptotic_regime(cfg: &WalkConfig, x: u64) -> Result<()> {
    require_positive_delta(cfg)?;
    if cfg.alpha() > 1.0 {
        return domain("asymptotics are only available for alpha <= 1");
    }
    if x < 2 {
        return domain("asymptotics require x >= 2");
    }
    Ok(())
}

/// Leading-order behaviour of `E[S_x]`.
///
/// At `alpha = 0` the exact i.i.d. rate `x / K(0, Δ)` is used, and at
/// `alpha = Δ = 1` the mean is the constant `ln 4`.
pub fn mean_s_asymptotic(cfg: &WalkConfig, x: u64) -> Result<f64> {
    check_asymptotic_regime(cfg, x)?;
    let (alpha, delta) = (cfg.alpha(), cfg.delta());
    let xf = x as f64;
    Ok(if alpha < 0.0 {
        2.0 * delta * xf.powf(1.0 - alpha) / (1.0 - alpha)
    } else if alpha == 0.0 {
        xf / k_constant(0.0, delta)?
    } else if alpha < 1.0 {
        delta * xf.powf(1.0 - alpha) / (1.0 - alpha)
    } else if delta == 1.0 {
        4f64.ln()
    } else {
        (delta - 1.0) * xf.ln()
    })
}

/// Leading-order behaviour of `V[S_x]`; `alpha = 0` uses the exact i.i.d. rate.
pub fn var_s_asymptotic(cfg: &WalkConfig, x: u64) -> Result<f64> {
    check_asymptotic_regime(cfg, x)?;
    let (alpha, delta) = (cfg.alpha(), cfg.delta());
    let xf = x as f64;
    Ok(if alpha < 0.0 {
        4.0 * delta * delta * xf.powf(1.0 - 2.0 * alpha) / (1.0 - 2.0 * alpha)
    } else if alpha == 0.0 {
        xf * site_moments(cfg, 1)?.variance
    } else if alpha < 1.0 {
        4.0 * delta * xf.powf(1.0 - alpha) / (1.0 - alpha)
    } else {
        4.0 * delta * xf.ln()
    })
}

/// Predicted growth law of the running maximum in the recurrent regime.
pub fn predict_scaling(cfg: &WalkConfig) -> Result<ScalingLaw> {
    let (alpha, delta) = (cfg.alpha(), cfg.delta());
    if alpha > 1.0 {
        return domain(format!("alpha = {alpha} > 1: the walk is transient"));
    }
    let power = |exponent| ScalingLaw {
        kind: ScalingKind::Power,
        exponent,
        constant: None,
    };
    Ok(if delta == 0.0 {
        if alpha < -1.0 {
            power(1.0 / (1.0 - alpha))
        } else {
            power(0.5)
        }
    } else if alpha < 1.0 {
        ScalingLaw {
            kind: ScalingKind::LogPower,
            exponent: 1.0 / (1.0 - alpha),
            constant: Some(k_constant(alpha, delta)?),
        }
    } else if delta > 2.0 {
        power(1.0 / delta)
    } else {
        power(0.5)
    })
}

/// Analytic limit of `S_x / x^{1−α}` (`alpha < 1`) or `S_x / ln x` (`alpha = 1`).
pub fn slln_target(cfg: &WalkConfig) -> Result<f64> {
    require_positive_delta(cfg)?;
    let alpha = cfg.alpha();
    if alpha < 1.0 {
        Ok(1.0 / k_constant(alpha, cfg.delta())?)
    } else if alpha == 1.0 {
        Ok(cfg.delta() - 1.0)
    } else {
        domain("no law of large numbers for S_x when alpha > 1")
    }
}

/// The SLLN normalizer: `x^{1−α}` for `alpha < 1`, `ln x` for `alpha = 1`.
pub fn slln_normalizer(cfg: &WalkConfig, x: u64) -> f64 {
    let xf = x as f64;
    if cfg.alpha() < 1.0 {
        xf.powf(1.0 - cfg.alpha())
    } else {
        xf.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn cfg(alpha: f64, delta: f64) -> WalkConfig {
        WalkConfig::new(alpha, delta).unwrap()
    }

    #[test]
    fn k_constant_examples() {
        assert_abs_diff_eq!(k_constant(0.0, 1.0).unwrap(), 1.0 / 4f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(1.0 / 4f64.ln(), 0.721_347_520_444_481_7, epsilon = 1e-15);
        assert_eq!(k_constant(0.5, 1.0).unwrap(), 0.5);
        assert_eq!(k_constant(-1.0, 2.0).unwrap(), 0.5);
    }

    #[test]
    fn k_constant_domain() {
        assert!(k_constant(1.0, 1.0).is_err());
        assert!(k_constant(0.5, 0.0).is_err());
        assert!(k_constant(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn k_constant_large_delta() {
        // K(0, Δ) behaves like 1/(2Δ) for large Δ.
        let d = 1e4;
        assert!((k_constant(0.0, d).unwrap() * 2.0 * d - 1.0).abs() < 1e-3);
    }

    #[test]
    fn mean_examples() {
        let ln4 = 4f64.ln();
        assert_abs_diff_eq!(mean_s(&cfg(1.0, 1.0), 5).unwrap(), ln4, epsilon = 1e-10);
        assert_abs_diff_eq!(mean_s(&cfg(1.0, 1.0), 1).unwrap(), ln4, epsilon = 1e-12);
        assert_abs_diff_eq!(mean_s(&cfg(0.0, 1.0), 3).unwrap(), 3.0 * ln4, epsilon = 1e-10);
        assert_abs_diff_eq!(3.0 * ln4, 4.158_883_083_4, epsilon = 1e-10);
    }

    #[test]
    fn alpha_one_delta_one_mean_is_constant() {
        let c = cfg(1.0, 1.0);
        for x in [1, 2, 10, 100, 1000] {
            assert_abs_diff_eq!(mean_s(&c, x).unwrap(), 4f64.ln(), epsilon = 1e-9);
        }
    }

    #[test]
    fn var_examples() {
        let p1 = PI * PI / 6.0;
        let ph = PI * PI / 2.0;
        assert_abs_diff_eq!(var_s(&cfg(0.0, 1.0), 1).unwrap(), p1 + ph, epsilon = 1e-10);
        assert_abs_diff_eq!(p1 + ph, 6.579_736_267_4, epsilon = 1e-10);
        assert_abs_diff_eq!(var_s(&cfg(0.0, 1.0), 4).unwrap(), 4.0 * 2.0 * PI * PI / 3.0, epsilon = 1e-10);
        // Sites 1 and 2 for alpha = 1: (a, b) = (1/2, 1) then (1, 1).
        assert_abs_diff_eq!(var_s(&cfg(1.0, 1.0), 2).unwrap(), p1 + ph + 2.0 * p1, epsilon = 1e-10);
        assert_abs_diff_eq!(p1 + ph + 2.0 * p1, 9.869_604_401_1, epsilon = 1e-10);
    }

    #[test]
    fn variance_strictly_increasing() {
        let c = cfg(0.3, 0.7);
        let mut prev = 0.0;
        for x in 1..200 {
            let v = var_s(&c, x).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn moments_require_positive_delta() {
        assert!(mean_s(&cfg(0.0, 0.0), 3).is_err());
        assert!(var_s(&cfg(0.0, 0.0), 3).is_err());
    }

    #[test]
    fn telescoped_form_agrees() {
        for &alpha in &[-2.0, -1.0, -0.5, 0.0, 0.25, 0.5, 1.0] {
            for &delta in &[0.25, 0.5, 1.0, 2.0, 5.0] {
                let c = cfg(alpha, delta);
                for &x in &[1u64, 2, 7, 100, 10_000] {
                    let direct = mean_s(&c, x).unwrap();
                    let tele = mean_s_telescoped(&c, x).unwrap();
                    assert!(
                        (direct - tele).abs() <= 1e-9 * direct.abs().max(1.0),
                        "alpha={alpha} delta={delta} x={x}: {direct} vs {tele}"
                    );
                }
            }
        }
    }

    #[test]
    fn asymptotic_examples() {
        assert_abs_diff_eq!(mean_s_asymptotic(&cfg(0.5, 1.0), 10_000).unwrap(), 200.0, epsilon = 1e-9);
        assert_abs_diff_eq!(mean_s_asymptotic(&cfg(-1.0, 1.0), 100).unwrap(), 10_000.0, epsilon = 1e-7);
        // x = e^10 is not an integer; evaluate the formula branch directly.
        let c = cfg(1.0, 2.0);
        assert_abs_diff_eq!(4.0 * c.delta() * 10.0, 80.0);
        assert_abs_diff_eq!(
            var_s_asymptotic(&c, 22_026).unwrap(),
            8.0 * 22_026f64.ln(),
            epsilon = 1e-12
        );
        assert!(mean_s_asymptotic(&cfg(1.5, 1.0), 10).is_err());
    }

    #[test]
    fn asymptotic_consistency() {
        // The relative error of the leading term shrinks with x everywhere on
        // the grid. At alpha = 0.75, and at alpha = 0.25 with delta = 2, the
        // next-order terms (−alpha ln x among them) still exceed 5% at 1e5.
        let slow = |alpha: f64, delta: f64| alpha == 0.75 || (alpha == 0.25 && delta == 2.0);
        for &alpha in &[-1.0, -0.5, 0.25, 0.5, 0.75] {
            for &delta in &[0.5, 1.0, 2.0] {
                let c = cfg(alpha, delta);
                let err = |x: u64| (mean_s(&c, x).unwrap() / mean_s_asymptotic(&c, x).unwrap() - 1.0).abs();
                let errs: Vec<f64> = [1_000, 10_000, 100_000, 1_000_000].iter().map(|&x| err(x)).collect();
                assert!(errs.windows(2).all(|w| w[1] < w[0]), "alpha={alpha} delta={delta}: {errs:?}");
                if !slow(alpha, delta) {
                    assert!(errs[2] <= 0.05, "alpha={alpha} delta={delta}: {}", errs[2]);
                }
            }
        }
    }

    #[test]
    fn scaling_examples() {
        let l = predict_scaling(&cfg(1.0, 3.0)).unwrap();
        assert_eq!(l.kind, ScalingKind::Power);
        assert_abs_diff_eq!(l.exponent, 1.0 / 3.0);
        let l = predict_scaling(&cfg(1.0, 1.0)).unwrap();
        assert_eq!((l.kind, l.exponent), (ScalingKind::Power, 0.5));
        let l = predict_scaling(&cfg(0.5, 1.0)).unwrap();
        assert_eq!(l.kind, ScalingKind::LogPower);
        assert_eq!(l.exponent, 2.0);
        assert_eq!(l.constant, Some(0.5));
        assert!(predict_scaling(&cfg(1.2, 1.0)).is_err());
    }

    #[test]
    fn unreinforced_scaling() {
        assert_abs_diff_eq!(predict_scaling(&cfg(-2.0, 0.0)).unwrap().exponent, 1.0 / 3.0);
        assert_eq!(predict_scaling(&cfg(-1.0, 0.0)).unwrap().exponent, 0.5);
        assert_eq!(predict_scaling(&cfg(0.0, 0.0)).unwrap().exponent, 0.5);
        assert_eq!(predict_scaling(&cfg(1.0, 0.0)).unwrap().exponent, 0.5);
        assert_eq!(predict_scaling(&cfg(1.0, 2.0)).unwrap().exponent, 0.5);
    }

    #[test]
    fn log_power_normalizer() {
        let law = predict_scaling(&cfg(0.0, 1.0)).unwrap();
        let n = 1_000_000u64;
        assert_abs_diff_eq!(law.normalizer(n), (n as f64).ln() / 4f64.ln(), epsilon = 1e-12);
    }
}
