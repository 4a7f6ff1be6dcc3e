//! Exact integration of the harmonic Langevin step
//!
//! ```text
//! dx = v dt,   dv = -k x dt - γ v dt + √(2γ) dB
//! ```
//!
//! per coordinate. Over a step `h` the flow is the affine-Gaussian map
//! `(x, v) ↦ A(h)(x, v) + B(h)(ξ, ζ)` with `A(h) = exp(A h)` and
//! `B(h)B(h)ᵀ = Σ(h)` the exact noise covariance.
//!
//! `A(h)` is evaluated in the unified form
//!
//! ```text
//! e^{-γh/2} [ γh/2·S + C    h·S        ]
//!           [ -k h·S        -γh/2·S + C ]
//! ```
//!
//! where `(S, C)` is `(sinh y / y, cosh y)` when overdamped, `(sin y / y, cos y)`
//! when underdamped and `(1, 1)` when critical, `y = γωh/2`. The ratio forms
//! stay finite as `ω → 0`, so the three regimes join continuously.
//!
//! `Σ(h)` is evaluated from its Taylor series in `h` when `‖A‖h ≤ 1` and from
//! the stationary identity `Σ(h) = Σ∞ − A(h) Σ∞ A(h)ᵀ`, `Σ∞ = diag(1/k, 1)`,
//! otherwise. `B(h)` is its lower-triangular factor: the two-Gaussian
//! construction `Z̃₁ = σ₁ξ`, `Z̃₂ = (c/σ₁)ξ + √(σ₂² − c²/σ₁²) ζ` applied to the
//! two noise components.

mod closed_form;
pub mod oracle;

pub use closed_form::{
    expanded_noise_factor, expanded_noise_factor_unscaled_b21, noise_factor_from_variances,
};

use std::fmt;

use crate::error::{nonnegative, positive, Error, Result};
use crate::linalg::Mat2;
use crate::potential::{PhaseState, PotentialModel};
use crate::scalar::Scalar;

/// Relative width of the band `|1 − 4k/γ²| < CRITICAL_BAND` tagged critical.
pub const CRITICAL_BAND: f64 = 1e-6;

/// Damping regime of one coordinate, by the sign of `γ² − 4k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regime {
    Overdamped,
    Underdamped,
    Critical,
}

impl Regime {
    /// Classifies `(k, γ)` and returns the signed `1 − 4k/γ²` alongside.
    pub fn classify(k: f64, gamma: f64) -> (Self, f64) {
        let disc = 1.0 - 4.0 * k / (gamma * gamma);
        let regime = if disc.abs() < CRITICAL_BAND {
            Self::Critical
        } else if disc > 0.0 {
            Self::Overdamped
        } else {
            Self::Underdamped
        };
        (regime, disc)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Overdamped => "overdamped",
            Self::Underdamped => "underdamped",
            Self::Critical => "critical",
        })
    }
}

/// Exact one-step coefficients for a single coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicCoeffs<T> {
    pub regime: Regime,
    /// `exp(A h)`.
    pub a_mat: Mat2<T>,
    /// Lower-triangular factor of `covariance`.
    pub b_mat: Mat2<T>,
    /// `Σ(h)`.
    pub covariance: Mat2<T>,
    /// `√|1 − 4k/γ²|`.
    pub omega: T,
    pub k: T,
    pub gamma: T,
    pub h: T,
}

/// Drift matrix `[[0, 1], [−k, −γ]]`.
pub fn drift_matrix<T: Scalar>(k: T, gamma: T) -> Mat2<T> {
    Mat2::new(T::zero(), T::one(), -k, -gamma)
}

/// Computes `A(h)` and `B(h)` for stiffness `k`, friction `gamma`, step `h`.
pub fn compute_coeffs<T: Scalar>(k: T, gamma: T, h: T) -> Result<HarmonicCoeffs<T>> {
    positive("k", k.as_f64())?;
    positive("gamma", gamma.as_f64())?;
    nonnegative("h", h.as_f64())?;

    let (regime, disc) = Regime::classify(k.as_f64(), gamma.as_f64());
    let disc_t = T::one() - T::lit(4.0) * k / (gamma * gamma);
    let omega = disc_t.abs().sqrt();
    let half = T::lit(0.5);
    let y = half * gamma * omega * h;
    let (s, c) = if disc > 0.0 {
        (y.sinhc(), y.cosh())
    } else if disc < 0.0 {
        (y.sinc(), y.cos())
    } else {
        (T::one(), T::one())
    };
    let decay = (-half * gamma * h).exp();
    let gh2 = half * gamma * h;
    let a_mat = Mat2::new(gh2 * s + c, h * s, -k * h * s, -gh2 * s + c).scale(decay);

    let covariance = noise_covariance(k, gamma, h, &a_mat);
    let b_mat = covariance.cholesky_psd();
    Ok(HarmonicCoeffs {
        regime,
        a_mat,
        b_mat,
        covariance,
        omega,
        k,
        gamma,
        h,
    })
}

/// `Σ(h) = ∫₀ʰ e^{As} diag(0, 2γ) e^{Aᵀs} ds`; `a_mat` must be `exp(A h)`.
fn noise_covariance<T: Scalar>(k: T, gamma: T, h: T, a_mat: &Mat2<T>) -> Mat2<T> {
    let drift = drift_matrix(k, gamma);
    if drift.norm_inf() * h <= T::one() {
        // Σ' = AΣ + ΣAᵀ + D, Σ(0) = 0: term_n = hⁿ/n! · Sₙ with S₁ = D.
        let mut term = Mat2::diag(T::zero(), T::lit(2.0) * gamma * h);
        let mut sum = term;
        for n in 2..48 {
            let next = drift * term + term * drift.transpose();
            term = next.scale(h / T::lit(n as f64));
            sum = sum + term;
            if term.max_abs() <= T::min_positive_value() {
                break;
            }
        }
        sum
    } else {
        let stationary = Mat2::diag(T::one() / k, T::one());
        let s = stationary - *a_mat * stationary * a_mat.transpose();
        // symmetrize rounding
        let off = T::lit(0.5) * (s.get(0, 1) + s.get(1, 0));
        Mat2::new(s.get(0, 0), off, off, s.get(1, 1))
    }
}

/// Two independent standard normal vectors driving one step.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseDraw<T> {
    pub xi: Vec<T>,
    pub zeta: Vec<T>,
}

impl<T: Scalar> NoiseDraw<T> {
    pub fn zeros(d: usize) -> Self {
        Self {
            xi: vec![T::zero(); d],
            zeta: vec![T::zero(); d],
        }
    }

    pub fn dim(&self) -> usize {
        self.xi.len()
    }
}

/// Cached per-coordinate coefficients for a fixed `(model, γ, h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicStep<T> {
    coeffs: Vec<HarmonicCoeffs<T>>,
}

impl<T: Scalar> HarmonicStep<T> {
    pub fn new(model: &PotentialModel<T>, gamma: T, h: T) -> Result<Self> {
        let coeffs = model
            .k()
            .iter()
            .map(|&kj| compute_coeffs(kj, gamma, h))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { coeffs })
    }

    pub fn from_coeffs(coeffs: Vec<HarmonicCoeffs<T>>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[HarmonicCoeffs<T>] {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// Applies the exact step in place. Lengths are assumed checked.
    #[inline]
    pub fn apply(&self, state: &mut PhaseState<T>, noise: &NoiseDraw<T>) {
        for (j, c) in self.coeffs.iter().enumerate() {
            let (ax, av) = c.a_mat.apply(state.x[j], state.v[j]);
            let (bx, bv) = c.b_mat.apply(noise.xi[j], noise.zeta[j]);
            state.x[j] = ax + bx;
            state.v[j] = av + bv;
        }
    }

    pub(crate) fn check(&self, state: &PhaseState<T>, noise: &NoiseDraw<T>) -> Result<()> {
        let d = self.dim();
        for got in [
            state.x.len(),
            state.v.len(),
            noise.xi.len(),
            noise.zeta.len(),
        ] {
            if got != d {
                return Err(Error::DimensionMismatch { expected: d, got });
            }
        }
        Ok(())
    }

    /// `𝒢`: the exact harmonic Langevin step.
    pub fn g_step(&self, state: &PhaseState<T>, noise: &NoiseDraw<T>) -> Result<PhaseState<T>> {
        self.check(state, noise)?;
        let mut out = state.clone();
        self.apply(&mut out, noise);
        Ok(out)
    }
}
