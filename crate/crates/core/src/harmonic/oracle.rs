//! Independent reference computations for the harmonic coefficients.
//!
//! Nothing here shares code with the closed forms: the matrix exponential is
//! a scaled-and-squared Taylor series and the covariance is adaptive
//! Gauss–Legendre quadrature of `e^{As} D e^{Aᵀs}`.

use crate::error::{nonnegative, positive, Result};
use crate::linalg::Mat2;
use crate::quadrature::GaussLegendre;

use super::drift_matrix;

const PANEL_ORDER: usize = 16;
const QUAD_TOL: f64 = 1e-14;
const MAX_DEPTH: u32 = 40;

/// `exp(M)` by scaling and squaring of a truncated Taylor series.
pub fn expm_series(m: &Mat2<f64>) -> Mat2<f64> {
    let norm = m.norm_inf();
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as i32
    } else {
        0
    };
    let scaled = m.scale(0.5_f64.powi(squarings));
    let mut term = Mat2::identity();
    let mut sum = Mat2::identity();
    for n in 1..=30 {
        term = (term * scaled).scale(1.0 / n as f64);
        sum = sum + term;
        if term.max_abs() < 1e-20 * sum.max_abs() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// `exp(A h)` for the drift `[[0, 1], [−k, −γ]]`.
pub fn propagator_oracle(k: f64, gamma: f64, h: f64) -> Result<Mat2<f64>> {
    positive("k", k)?;
    positive("gamma", gamma)?;
    nonnegative("h", h)?;
    Ok(expm_series(&drift_matrix(k, gamma).scale(h)))
}

/// `Σ(h) = ∫₀ʰ e^{As} diag(0, 2γ) e^{Aᵀs} ds` by adaptive panel quadrature,
/// converged to about `1e-14` absolute.
pub fn covariance_oracle(k: f64, gamma: f64, h: f64) -> Result<Mat2<f64>> {
    positive("k", k)?;
    positive("gamma", gamma)?;
    nonnegative("h", h)?;
    if h == 0.0 {
        return Ok(Mat2::zero());
    }
    let drift = drift_matrix(k, gamma);
    let noise = Mat2::diag(0.0, 2.0 * gamma);
    let rule = GaussLegendre::new(PANEL_ORDER);
    let integrand = |s: f64| {
        let e = expm_series(&drift.scale(s));
        e * noise * e.transpose()
    };
    let panel = |a: f64, b: f64| {
        rule.mapped(a, b)
            .fold(Mat2::zero(), |acc, (s, w)| acc + integrand(s).scale(w))
    };

    // Initial panels resolve the fastest time scale of the drift.
    let panels = ((h * drift.norm_inf()).ceil() as usize).max(1);
    let width = h / panels as f64;
    let mut total = Mat2::zero();
    for i in 0..panels {
        let a = i as f64 * width;
        let b = if i + 1 == panels { h } else { a + width };
        total = total + adaptive(&panel, a, b, panel(a, b), QUAD_TOL / panels as f64, 0);
    }
    let off = 0.5 * (total.get(0, 1) + total.get(1, 0));
    Ok(Mat2::new(total.get(0, 0), off, off, total.get(1, 1)))
}

fn adaptive<F: Fn(f64, f64) -> Mat2<f64>>(
    panel: &F,
    a: f64,
    b: f64,
    whole: Mat2<f64>,
    tol: f64,
    depth: u32,
) -> Mat2<f64> {
    let mid = 0.5 * (a + b);
    let left = panel(a, mid);
    let right = panel(mid, b);
    let halves = left + right;
    if halves.max_abs_diff(&whole) <= tol || depth >= MAX_DEPTH {
        halves
    } else {
        adaptive(panel, a, mid, left, 0.5 * tol, depth + 1)
            + adaptive(panel, mid, b, right, 0.5 * tol, depth + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_diagonal_and_nilpotent() {
        let d = expm_series(&Mat2::diag(1.0, -3.0));
        assert!((d.get(0, 0) - 1.0_f64.exp()).abs() < 1e-14);
        assert!((d.get(1, 1) - (-3.0_f64).exp()).abs() < 1e-15);
        let n = expm_series(&Mat2::new(0.0, 2.5, 0.0, 0.0));
        assert!(n.max_abs_diff(&Mat2::new(1.0, 2.5, 0.0, 1.0)) < 1e-15);
    }

    #[test]
    fn empty_integral() {
        assert_eq!(covariance_oracle(1.0, 2.0, 0.0).unwrap(), Mat2::zero());
    }

    #[test]
    fn long_horizon_reaches_stationary_covariance() {
        let s = covariance_oracle(1.0, 2.0, 50.0).unwrap();
        assert!(s.max_abs_diff(&Mat2::identity()) < 1e-8, "{s:?}");
    }

    #[test]
    fn leading_order_velocity_variance() {
        let s = covariance_oracle(10.0, 2.0, 0.01).unwrap();
        assert!((s.get(1, 1) - 0.04).abs() < 1e-3);
        assert!(s.det() > 0.0);
    }
}
