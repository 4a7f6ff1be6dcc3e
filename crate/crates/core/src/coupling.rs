//! Twisted phase-space metric, contraction constants and the synchronous
//! coupling experiment.
//!
//! The metric on a coordinate difference `(z, w)` is
//!
//! ```text
//! ρ² = Σⱼ a_j z_j² + 2b z_j w_j + c w_j²
//! a_j = k_j/γ² + (1−2τ)²/2,  b = (1−2τ)/(2γ),  c = 1/γ²,  τ = min(1/8, κ/(4γ²))
//! ```
//!
//! The off-diagonal block carries the factor `1/γ`; without it the form is
//! indefinite already for `κ = 1, γ = 2`.

use rayon::prelude::*;

use crate::error::{positive, Error, Result};
use crate::harmonic::NoiseDraw;
use crate::potential::{PhaseState, PotentialModel};
use crate::rng::NoiseStream;
use crate::samplers::{Sampler, SchemeConfig};
use crate::scalar::Scalar;

/// `τ = min(1/8, κγ⁻²/4)`.
pub fn twist<T: Scalar>(kappa: T, gamma: T) -> T {
    T::lit(0.125).min(kappa / (T::lit(4.0) * gamma * gamma))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwistedMetric<T> {
    pub tau: T,
    pub a_block: Vec<T>,
    pub b_block: T,
    pub c_block: T,
}

impl<T: Scalar> TwistedMetric<T> {
    /// Builds the metric for stiffnesses `k` (with `κ = min k`) and friction
    /// `gamma`, verifying that every 2×2 block is positive definite.
    pub fn new(k: &[T], gamma: T) -> Result<Self> {
        positive("gamma", gamma.as_f64())?;
        let kappa = k.iter().copied().fold(T::infinity(), T::min);
        positive("kappa", kappa.as_f64())?;
        let tau = twist(kappa, gamma);
        let one_m = T::one() - T::lit(2.0) * tau;
        let g2 = gamma * gamma;
        let a_block: Vec<T> = k
            .iter()
            .map(|&kj| kj / g2 + one_m * one_m * T::lit(0.5))
            .collect();
        let b_block = one_m / (T::lit(2.0) * gamma);
        let c_block = T::one() / g2;
        let metric = Self {
            tau,
            a_block,
            b_block,
            c_block,
        };
        if let Some(bad) = (0..metric.dim()).find(|&j| !metric.block_is_positive_definite(j)) {
            return Err(Error::InvalidParameter {
                name: "metric block",
                value: bad as f64,
                reason: "twisted metric block is not positive definite",
            });
        }
        Ok(metric)
    }

    pub fn for_model(model: &PotentialModel<T>, gamma: T) -> Result<Self> {
        Self::new(model.k(), gamma)
    }

    pub fn dim(&self) -> usize {
        self.a_block.len()
    }

    pub fn block_det(&self, j: usize) -> T {
        self.a_block[j] * self.c_block - self.b_block * self.b_block
    }

    pub fn block_is_positive_definite(&self, j: usize) -> bool {
        self.a_block[j] > T::zero() && self.block_det(j) > T::zero()
    }

    /// `ρ²` of a phase-space difference `(z, w)`.
    #[inline]
    pub fn squared_norm(&self, z: &[T], w: &[T]) -> T {
        let two = T::lit(2.0);
        let mut acc = T::zero();
        for j in 0..self.a_block.len() {
            acc = acc
                + self.a_block[j] * z[j] * z[j]
                + two * self.b_block * z[j] * w[j]
                + self.c_block * w[j] * w[j];
        }
        acc
    }

    /// `ρ(s1, s2)`.
    pub fn distance(&self, s1: &PhaseState<T>, s2: &PhaseState<T>) -> T {
        let z: Vec<T> = s1.x.iter().zip(&s2.x).map(|(&a, &b)| a - b).collect();
        let w: Vec<T> = s1.v.iter().zip(&s2.v).map(|(&a, &b)| a - b).collect();
        self.squared_norm(&z, &w).max(T::zero()).sqrt()
    }
}

/// `ρ(s1, s2)` with dimension checks.
pub fn rho_distance<T: Scalar>(
    metric: &TwistedMetric<T>,
    s1: &PhaseState<T>,
    s2: &PhaseState<T>,
) -> Result<T> {
    for got in [s1.x.len(), s1.v.len(), s2.x.len(), s2.v.len()] {
        if got != metric.dim() {
            return Err(Error::DimensionMismatch {
                expected: metric.dim(),
                got,
            });
        }
    }
    Ok(metric.distance(s1, s2))
}

/// Rate and prefactors of the contraction estimates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractionConstants<T> {
    pub tau: T,
    /// `c = min(γ/8, κγ⁻¹/4)`.
    pub c: T,
    /// Euclidean/ρ equivalence prefactor.
    pub m1: T,
    /// `max(2γ, (9/128 + κγ⁻²)^{-1/2})`.
    pub m2: T,
}

/// Lower and upper bounds of `ρ²/|·|²`.
pub fn equivalence_bounds<T: Scalar>(kappa: T, gamma: T, l_k: T) -> (T, T) {
    let ig2 = T::one() / (gamma * gamma);
    let lower = (T::lit(0.25) * ig2).min(T::lit(9.0 / 128.0) + kappa * ig2);
    let upper = (l_k * ig2 + T::one()).max(T::lit(1.5) * ig2);
    (lower, upper)
}

pub fn contraction_constants<T: Scalar>(
    kappa: T,
    gamma: T,
    l_k: T,
) -> Result<ContractionConstants<T>> {
    positive("kappa", kappa.as_f64())?;
    positive("gamma", gamma.as_f64())?;
    positive("l_k", l_k.as_f64())?;
    let ig2 = T::one() / (gamma * gamma);
    let (lower, upper) = equivalence_bounds(kappa, gamma, l_k);
    Ok(ContractionConstants {
        tau: twist(kappa, gamma),
        c: (gamma / T::lit(8.0)).min(kappa / (gamma * T::lit(4.0))),
        m1: (upper / lower).sqrt(),
        m2: (T::lit(2.0) * gamma).max(T::one() / (T::lit(9.0 / 128.0) + kappa * ig2).sqrt()),
    })
}

/// Step size and step count delivering `ε` accuracy for the first-order chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonBudget {
    /// `None` when `L_G = 0`: the chain is exact and any step size works.
    pub h_max: Option<f64>,
    pub k_min: Option<f64>,
    /// Whether `γ² = 2κ`, the friction the formulas are stated for.
    pub optimal_friction: bool,
    pub m1: f64,
}

/// `h⁻¹ ≥ 64 √d (L_G/κ) √(5 L_K/κ) ε⁻¹` and
/// `k ≥ h⁻¹ · 8/√(2κ) · log(2 M₁ W₂(ν₀, μ_h)/ε)`.
pub fn epsilon_budget(
    model: &PotentialModel<f64>,
    gamma: f64,
    eps: f64,
    w2_init: f64,
) -> Result<EpsilonBudget> {
    positive("eps", eps)?;
    positive("gamma", gamma)?;
    let kappa = model.kappa();
    let consts = contraction_constants(kappa, gamma, model.l_k())?;
    let optimal_friction = ((gamma * gamma) / (2.0 * kappa) - 1.0).abs() < 1e-12;
    if model.l_g() == 0.0 {
        return Ok(EpsilonBudget {
            h_max: None,
            k_min: None,
            optimal_friction,
            m1: consts.m1,
        });
    }
    let d = model.dim() as f64;
    let inv_h = 64.0 * d.sqrt() * (model.l_g() / kappa) * (5.0 * model.l_k() / kappa).sqrt() / eps;
    let log_term = (2.0 * consts.m1 * w2_init / eps).ln().max(0.0);
    let k_min = inv_h * 8.0 / (2.0 * kappa).sqrt() * log_term;
    Ok(EpsilonBudget {
        h_max: Some(1.0 / inv_h),
        k_min: Some(k_min),
        optimal_friction,
        m1: consts.m1,
    })
}

/// One row of the coupling time series, averaged over replicas.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub step: usize,
    pub time: f64,
    pub mean_rho: f64,
    pub se_rho: f64,
    pub mean_euclid: f64,
    pub se_euclid: f64,
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `replicas` synchronously coupled pairs from `init_a` and `init_b`.
/// Replica `r` draws noise from stream `r` of the configured seed; both chains
/// of a pair consume the identical draws. Output has `n_steps + 1` rows
/// (step 0 included).
pub fn couple_run<T: Scalar>(
    model: &PotentialModel<T>,
    config: SchemeConfig<T>,
    init_a: &PhaseState<T>,
    init_b: &PhaseState<T>,
    n_steps: usize,
    replicas: usize,
) -> Result<Vec<ExperimentRecord>> {
    if replicas == 0 {
        return Err(Error::InvalidParameter {
            name: "replicas",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    let d = model.dim();
    for got in [
        init_a.x.len(),
        init_a.v.len(),
        init_b.x.len(),
        init_b.v.len(),
    ] {
        if got != d {
            return Err(Error::DimensionMismatch { expected: d, got });
        }
    }
    let sampler = Sampler::new(model.clone(), config)?;
    let metric = TwistedMetric::for_model(model, config.gamma)?;

    // per replica: (ρ, Euclid) for steps 0..=n_steps
    let traces: Vec<Vec<(f64, f64)>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| coupled_trace(&sampler, &metric, init_a, init_b, n_steps, r))
        .collect::<Result<_>>()?;

    let h = config.h.as_f64();
    Ok((0..=n_steps)
        .map(|step| {
            let (mean_rho, se_rho) = mean_and_se(traces.iter().map(|t| t[step].0));
            let (mean_euclid, se_euclid) = mean_and_se(traces.iter().map(|t| t[step].1));
            ExperimentRecord {
                step,
                time: step as f64 * h,
                mean_rho,
                se_rho,
                mean_euclid,
                se_euclid,
            }
        })
        .collect())
}

fn coupled_trace<T: Scalar>(
    sampler: &Sampler<T>,
    metric: &TwistedMetric<T>,
    init_a: &PhaseState<T>,
    init_b: &PhaseState<T>,
    n_steps: usize,
    stream: u64,
) -> Result<Vec<(f64, f64)>> {
    let d = sampler.dim();
    let mut rng = NoiseStream::new(sampler.config().seed, stream);
    let mut noise = NoiseDraw::zeros(d);
    let mut grad = vec![T::zero(); d];
    let (mut a, mut b) = (init_a.clone(), init_b.clone());
    let record = |a: &PhaseState<T>, b: &PhaseState<T>| {
        (
            metric.distance(a, b).as_f64(),
            a.euclidean_distance(b).as_f64(),
        )
    };
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(record(&a, &b));
    for step in 1..=n_steps {
        rng.fill(&mut noise);
        sampler.step_in_place(&mut a, &noise, &mut grad);
        sampler.step_in_place(&mut b, &noise, &mut grad);
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::NonFinite { step });
        }
        out.push(record(&a, &b));
    }
    Ok(out)
}

/// Exponential decay rate fitted to a distance series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub rate: f64,
    pub r_squared: f64,
    pub points: usize,
    pub t_start: f64,
    pub t_end: f64,
}

/// Leading points skipped as transient.
pub const FIT_SKIP: usize = 5;
/// Points below this fraction of the first value are treated as noise.
pub const FIT_FLOOR: f64 = 1e-10;
pub const FIT_MIN_POINTS: usize = 10;

/// Least-squares slope of `log d(t)` against `t`, negated. The window drops
/// the first [`FIT_SKIP`] points and ends before the first point under
/// [`FIT_FLOOR`] times the initial value.
pub fn fit_rate(series: &[(f64, f64)]) -> Result<RateFit> {
    let Some(&(_, d0)) = series.first() else {
        return Err(Error::Insufficient("empty series".into()));
    };
    let floor = FIT_FLOOR * d0.abs();
    let window: Vec<(f64, f64)> = series
        .iter()
        .skip(FIT_SKIP)
        .take_while(|(_, d)| *d > floor && d.is_finite())
        .map(|&(t, d)| (t, d.ln()))
        .collect();
    if window.len() < FIT_MIN_POINTS {
        return Err(Error::Insufficient(format!(
            "{} points above the noise floor, need {FIT_MIN_POINTS}",
            window.len()
        )));
    }
    let fit = ols(&window);
    Ok(RateFit {
        rate: -fit.slope,
        r_squared: fit.r_squared,
        points: window.len(),
        t_start: window[0].0,
        t_end: window[window.len() - 1].0,
    })
}

/// Ordinary least squares `y = a + b x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct LineFit {
    pub slope: f64,
    pub slope_se: f64,
    pub r_squared: f64,
}

pub(crate) fn ols(points: &[(f64, f64)]) -> LineFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let sse: f64 = points
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_se = if n > 2.0 && sxx > 0.0 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    LineFit {
        slope,
        slope_se,
        r_squared,
    }
}
