//! Closed-form noise factors built from scalar variances and correlations.
//!
//! [`noise_factor_from_variances`] assembles `B(h)` from the variances and the
//! correlation of two auxiliary stochastic integrals per regime
//! (`Z_a, Z_b` with rates `γ(1±ω)/2` when overdamped; the sine and cosine
//! integrals when underdamped; `∫e^{-γu/2}u dB` and `∫e^{-γu/2} dB` when
//! critical) through the two-Gaussian construction.
//! [`expanded_noise_factor`] is the fully expanded entrywise form of the same
//! factor. Both serve as cross-checks of [`super::compute_coeffs`].

use crate::error::{nonnegative, positive, Error, Result};
use crate::linalg::Mat2;

use super::Regime;

/// Tolerance on `|ρ| − 1` before a correlation is reported as degenerate.
const CORRELATION_SLACK: f64 = 1e-9;

fn one_minus_exp(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// `e^{−x} Σ_{n≥m} xⁿ/n!`, i.e. `1 − e^{−x} Σ_{n<m} xⁿ/n!` without cancellation.
fn exp_tail(x: f64, m: u32) -> f64 {
    if x >= 1.0 {
        let mut term = 1.0;
        let mut head = 1.0;
        for n in 1..m {
            term *= x / n as f64;
            head += term;
        }
        return 1.0 - (-x).exp() * head;
    }
    let mut term = (1..=m).fold(1.0, |t, n| t * x / n as f64);
    let mut sum = 0.0;
    let mut n = m;
    while term > sum * 1e-18 {
        sum += term;
        n += 1;
        term *= x / n as f64;
    }
    (-x).exp() * sum
}

/// Underdamped numerators `(1+ω²)(1−e^{−x}) − 1 + e^{−x}(cos ωx − ω sin ωx)`
/// and `ω − e^{−x}(sin ωx + ω cos ωx)`, both `O(x²)` or smaller.
/// Below `|1 − iω| x = 1` they are summed as power series in `x`.
fn underdamped_numerators(omega: f64, x: f64) -> (f64, f64) {
    let w2 = 1.0 + omega * omega;
    if w2.sqrt() * x >= 1.0 {
        let e = (-x).exp();
        let (sin, cos) = (omega * x).sin_cos();
        return (
            w2 * one_minus_exp(x) - 1.0 + e * (cos - omega * sin),
            omega - e * (sin + omega * cos),
        );
    }
    // coefficients of xⁿ/n!: (1 + iω)(−z)ⁿ with z = 1 − iω
    let (mut re, mut im) = (1.0, omega);
    let (mut var, mut cov) = (0.0, 0.0);
    let mut scale = 1.0;
    let mut sign = 1.0;
    for n in 1..80 {
        // multiply by −z = −1 + iω
        (re, im) = (-re - omega * im, omega * re - im);
        scale *= x / n as f64;
        sign = -sign;
        let dv = (re - w2 * sign) * scale;
        let dc = -im * scale;
        var += dv;
        cov += dc;
        if n > 3 && dv.abs() <= var.abs() * 1e-18 && dc.abs() <= cov.abs() * 1e-18 {
            break;
        }
    }
    (var, cov)
}

fn correlation(c: f64, sa: f64, sb: f64) -> Result<f64> {
    let rho = c / (sa * sb);
    if !rho.is_finite() || rho.abs() > 1.0 + CORRELATION_SLACK {
        return Err(Error::DegenerateCorrelation { rho });
    }
    Ok(rho.clamp(-1.0, 1.0))
}

/// Builds `M` with `M Mᵀ = Σ(h)` from the per-regime variance/correlation
/// closed forms. Requires `h > 0`.
pub fn noise_factor_from_variances(k: f64, gamma: f64, h: f64) -> Result<Mat2<f64>> {
    positive("k", k)?;
    positive("gamma", gamma)?;
    positive("h", h)?;
    let (regime, disc) = Regime::classify(k, gamma);
    let omega = disc.abs().sqrt();
    let root = (2.0 * gamma).sqrt();
    let m = match regime {
        Regime::Overdamped => {
            let a = 0.5 * gamma * (1.0 + omega);
            let b = 0.5 * gamma * (1.0 - omega);
            let sa = (one_minus_exp(2.0 * h * a) / (2.0 * a)).sqrt();
            let sb = (one_minus_exp(2.0 * h * b) / (2.0 * b)).sqrt();
            let c = one_minus_exp(gamma * h) / gamma;
            let rho = correlation(c, sa, sb)?;
            // Z̃_a = sa ξ, Z̃_b = (c/sa) ξ + sb √(1−ρ²) ζ
            let (za_xi, zb_xi, zb_zeta) = (sa, c / sa, sb * (1.0 - rho * rho).sqrt());
            // 𝒵₁ = (Z_b − Z_a)/(γω), 𝒵₂ = ((1+ω) Z_a − (1−ω) Z_b)/(2ω)
            let go = gamma * omega;
            Mat2::new(
                (zb_xi - za_xi) / go,
                zb_zeta / go,
                ((1.0 + omega) * za_xi - (1.0 - omega) * zb_xi) / (2.0 * omega),
                -(1.0 - omega) * zb_zeta / (2.0 * omega),
            )
        }
        Regime::Underdamped => {
            let x = gamma * h;
            let e = (-x).exp();
            let (sin, cos) = (omega * x).sin_cos();
            let w2 = 1.0 + omega * omega;
            let norm = 2.0 * w2 * gamma;
            let (num_sin, num_c) = underdamped_numerators(omega, x);
            let var_sin = num_sin / norm;
            let var_cos = (1.0 - e * cos + omega * e * sin + one_minus_exp(x) * w2) / norm;
            let c = num_c / norm;
            let s_sin = var_sin.sqrt();
            correlation(c, s_sin, var_cos.sqrt())?;
            Mat2::new(
                2.0 * s_sin / (gamma * omega),
                0.0,
                -s_sin / omega + c / s_sin,
                (var_cos - c * c / var_sin).max(0.0).sqrt(),
            )
        }
        Regime::Critical => {
            let x = gamma * h;
            let var1 = 2.0 * exp_tail(x, 3) / gamma.powi(3);
            let var2 = one_minus_exp(x) / gamma;
            let c = exp_tail(x, 2) / (gamma * gamma);
            let s1 = var1.sqrt();
            correlation(c, s1, var2.sqrt())?;
            Mat2::new(
                s1,
                0.0,
                -0.5 * gamma * s1 + c / s1,
                (var2 - c * c / var1).max(0.0).sqrt(),
            )
        }
    };
    let m = m.scale(root);
    if !m.is_finite() {
        return Err(Error::DegenerateCorrelation { rho: f64::NAN });
    }
    Ok(m)
}

/// Entrywise expanded closed form of the noise factor, regime by regime.
///
/// In the underdamped case the (2,1) entry is scaled by `1/ω`; the expanded
/// expression is otherwise missing that factor and fails to reproduce `Σ(h)`.
pub fn expanded_noise_factor(k: f64, gamma: f64, h: f64) -> Result<Mat2<f64>> {
    expanded(k, gamma, h, true)
}

/// Same expanded form with the underdamped (2,1) entry lacking the `1/ω`
/// factor. Kept so `verify` can quantify that discrepancy.
pub fn expanded_noise_factor_unscaled_b21(k: f64, gamma: f64, h: f64) -> Result<Mat2<f64>> {
    expanded(k, gamma, h, false)
}

fn expanded(k: f64, gamma: f64, h: f64, corrected: bool) -> Result<Mat2<f64>> {
    positive("k", k)?;
    positive("gamma", gamma)?;
    nonnegative("h", h)?;
    let (regime, disc) = Regime::classify(k, gamma);
    let w = disc.abs().sqrt();
    let e = (-gamma * h).exp();
    let em = one_minus_exp(gamma * h);
    let s2 = std::f64::consts::SQRT_2;
    let m = match regime {
        Regime::Overdamped => {
            let ep = one_minus_exp(gamma * (1.0 + w) * h);
            let en = one_minus_exp(gamma * (1.0 - w) * h);
            let den = (ep * (1.0 + w)).sqrt();
            let tail = (en / (1.0 - w) - em * em * (1.0 + w) / ep).max(0.0).sqrt();
            Mat2::new(
                s2 / (gamma * w) * ((1.0 + w) * em - ep) / den,
                s2 / (gamma * w) * tail,
                (1.0 + w) / (s2 * w) * (ep - (1.0 - w) * em) / den,
                (w - 1.0) / (s2 * w) * tail,
            )
        }
        Regime::Underdamped => {
            let theta = w * gamma * h;
            let (sin, cos) = theta.sin_cos();
            let w2 = 1.0 + w * w;
            let b = w2 * em - 1.0 + e * cos - w * e * sin;
            let b21 = e * (1.0 - cos) * w2.sqrt() / b.sqrt();
            Mat2::new(
                2.0 / (gamma * w) * (b / w2).sqrt(),
                0.0,
                if corrected { b21 / w } else { b21 },
                ((em * em * w * w - 2.0 * e * (1.0 - cos)).max(0.0)).sqrt() / b.sqrt(),
            )
        }
        Regime::Critical => {
            let gh = gamma * h;
            let q = 4.0 * em - 2.0 * e * gh * gh - 4.0 * e * gh;
            Mat2::new(
                q.sqrt() / gamma,
                0.0,
                e * gh * gh / q.sqrt(),
                (2.0 * (em * em - e * gh * gh)).max(0.0).sqrt()
                    / (2.0 * em - e * gh * gh - 2.0 * e * gh).sqrt(),
            )
        }
    };
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_velocity_variance_plug_in() {
        // σ₂² = (1 − e^{−γh})/γ for the plain exponential integral
        let (gamma, h): (f64, f64) = (2.0, 0.1);
        let var2 = one_minus_exp(gamma * h) / gamma;
        assert!((var2 - (1.0 - (-0.2_f64).exp()) / 2.0).abs() < 1e-16);
        let m = noise_factor_from_variances(1.0, gamma, h).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
        // Σ₂₂ = 2γ·E|𝒵₂|² with 𝒵₂ = −(γ/2)Z₁ + Z₂, independent of the factor choice
        assert!(m.gram().get(1, 1) > 0.0);
    }

    #[test]
    fn vanishing_step_gives_vanishing_covariance() {
        for &(k, g) in &[(0.5, 2.0), (1.0, 2.0), (10.0, 2.0)] {
            let m = noise_factor_from_variances(k, g, 1e-8).unwrap();
            assert!(m.gram().max_abs() <= 1e-7);
        }
    }

    #[test]
    fn series_and_direct_numerators_agree_at_switch() {
        assert!((exp_tail(1.0 - 1e-15, 3) - exp_tail(1.0, 3)).abs() < 1e-12);
        let omega: f64 = 1.5;
        let x = 1.0 / (1.0 + omega * omega).sqrt();
        let below = underdamped_numerators(omega, x * (1.0 - 1e-15));
        let above = underdamped_numerators(omega, x);
        assert!((below.0 - above.0).abs() < 1e-12);
        assert!((below.1 - above.1).abs() < 1e-12);
    }

    #[test]
    fn rejects_zero_step() {
        assert!(noise_factor_from_variances(1.0, 2.0, 0.0).is_err());
    }
}
