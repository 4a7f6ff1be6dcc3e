//! Target potentials `U(x) = ½ xᵀKx + G(x)` with diagonal `K`.
//!
//! The quadratic part is integrated exactly by the harmonic step; only the
//! convex remainder `G` is handled by explicit gradient kicks.

use crate::error::{positive, Error, Result};
use crate::samplers::Scheme;
use crate::scalar::Scalar;

/// Convex remainder `G` of the potential.
#[derive(Clone, Debug, PartialEq)]
pub enum Perturbation<T> {
    /// `G ≡ 0`.
    Zero,
    /// `G(x) = s·(½|x₁|² + ½|x₂|² + ½ sin(x₁ + x₂))`.
    Oscillation { scale: T },
    /// `G(x) = s·Σᵢ log(1 + exp(aᵢᵀx))`.
    Logistic { scale: T, directions: Vec<Vec<T>> },
}

impl<T: Scalar> Perturbation<T> {
    fn value(&self, x: &[T]) -> T {
        let half = T::lit(0.5);
        match self {
            Self::Zero => T::zero(),
            Self::Oscillation { scale } => {
                let (a, b) = (x[0], x[1]);
                *scale * (half * a * a + half * b * b + half * (a + b).sin())
            }
            Self::Logistic { scale, directions } => {
                let sum = directions
                    .iter()
                    .map(|dir| softplus(dot(dir, x)))
                    .fold(T::zero(), |acc, v| acc + v);
                *scale * sum
            }
        }
    }

    #[inline]
    fn gradient_into(&self, x: &[T], out: &mut [T]) {
        match self {
            Self::Zero => out.iter_mut().for_each(|o| *o = T::zero()),
            Self::Oscillation { scale } => {
                let c = T::lit(0.5) * (x[0] + x[1]).cos();
                out[0] = *scale * (x[0] + c);
                out[1] = *scale * (x[1] + c);
            }
            Self::Logistic { scale, directions } => {
                out.iter_mut().for_each(|o| *o = T::zero());
                for dir in directions {
                    let w = *scale * sigmoid(dot(dir, x));
                    for (o, &a) in out.iter_mut().zip(dir) {
                        *o = *o + w * a;
                    }
                }
            }
        }
    }
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&p, &q)| acc + p * q)
}

fn softplus<T: Scalar>(z: T) -> T {
    z.max(T::zero()) + (-z.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Potential with diagonal quadratic part `k` and convex remainder `G`.
///
/// Immutable after construction; shared freely between replica workers.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialModel<T> {
    k: Vec<T>,
    perturbation: Perturbation<T>,
    kappa: T,
    l_k: T,
    l_g: T,
    l_h: Option<T>,
    name: String,
}

impl<T: Scalar> PotentialModel<T> {
    /// Builds a model from its parts. `l_g` must bound the Lipschitz constant
    /// of `∇G`; it is not checked here.
    pub fn new(
        name: impl Into<String>,
        k: Vec<T>,
        perturbation: Perturbation<T>,
        l_g: T,
        l_h: Option<T>,
    ) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::InvalidParameter {
                name: "k",
                value: 0.0,
                reason: "need at least one dimension",
            });
        }
        for &kj in &k {
            positive("k_j", kj.as_f64())?;
        }
        if !(l_g >= T::zero()) {
            return Err(Error::InvalidParameter {
                name: "l_g",
                value: l_g.as_f64(),
                reason: "must be nonnegative",
            });
        }
        let d = k.len();
        match &perturbation {
            Perturbation::Oscillation { .. } if d != 2 => {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    got: d,
                })
            }
            Perturbation::Logistic { directions, .. } => {
                if let Some(bad) = directions.iter().find(|a| a.len() != d) {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: bad.len(),
                    });
                }
            }
            _ => {}
        }
        let kappa = k.iter().copied().fold(T::infinity(), T::min);
        let l_k = k.iter().copied().fold(T::zero(), T::max);
        Ok(Self {
            k,
            perturbation,
            kappa,
            l_k,
            l_g,
            l_h,
            name: name.into(),
        })
    }

    /// `K = diag(1, 10)`, `G(x) = ¼(½x₁² + ½x₂² + ½ sin(x₁+x₂))`, `L_G = 1/2`.
    pub fn oscillation() -> Self {
        Self::new(
            "oscillation",
            vec![T::one(), T::lit(10.0)],
            Perturbation::Oscillation {
                scale: T::lit(0.25),
            },
            T::lit(0.5),
            None,
        )
        .expect("built-in model is valid")
    }

    /// `K = diag(1, 10)`, `G(x) = (1/10) Σ log(1 + exp(aᵢᵀx))` with
    /// `a₁ = (1, 0)`, `a₂ = (0, 2)`, `L_G ≤ 2/5`.
    pub fn logistic() -> Self {
        Self::new(
            "logistic",
            vec![T::one(), T::lit(10.0)],
            Perturbation::Logistic {
                scale: T::lit(0.1),
                directions: vec![vec![T::one(), T::zero()], vec![T::zero(), T::lit(2.0)]],
            },
            T::lit(0.4),
            None,
        )
        .expect("built-in model is valid")
    }

    /// Pure Gaussian target, `G ≡ 0`.
    pub fn gaussian(k: Vec<T>) -> Result<Self> {
        Self::new(
            "gaussian",
            k,
            Perturbation::Zero,
            T::zero(),
            Some(T::zero()),
        )
    }

    /// Resolves a built-in model by name. `k` is only used by `gaussian`.
    pub fn by_name(name: &str, k: Option<Vec<T>>) -> Result<Self> {
        match name {
            "oscillation" => Ok(Self::oscillation()),
            "logistic" => Ok(Self::logistic()),
            "gaussian" => Self::gaussian(k.unwrap_or_else(|| vec![T::one(), T::lit(10.0)])),
            other => Err(Error::Unknown {
                kind: "model",
                name: other.to_string(),
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.k.len()
    }

    pub fn k(&self) -> &[T] {
        &self.k
    }

    pub fn perturbation(&self) -> &Perturbation<T> {
        &self.perturbation
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn l_k(&self) -> T {
        self.l_k
    }

    pub fn l_g(&self) -> T {
        self.l_g
    }

    pub fn l_h(&self) -> Option<T> {
        self.l_h
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn has_perturbation(&self) -> bool {
        !matches!(self.perturbation, Perturbation::Zero)
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: len,
            })
        }
    }

    /// Scalar `G(x)`.
    pub fn g_value(&self, x: &[T]) -> Result<T> {
        self.check_dim(x.len())?;
        Ok(self.perturbation.value(x))
    }

    /// Scalar `U(x)`.
    pub fn u_value(&self, x: &[T]) -> Result<T> {
        let quad = self
            .k
            .iter()
            .zip(x)
            .fold(T::zero(), |acc, (&k, &xi)| acc + k * xi * xi);
        Ok(T::lit(0.5) * quad + self.g_value(x)?)
    }

    pub fn grad_g(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x.len())?;
        let mut out = vec![T::zero(); x.len()];
        self.perturbation.gradient_into(x, &mut out);
        Ok(out)
    }

    /// `∇U(x) = Kx + ∇G(x)`.
    pub fn grad_u(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x.len())?;
        let mut out = vec![T::zero(); x.len()];
        self.grad_u_into(x, &mut out);
        Ok(out)
    }

    /// Unchecked `∇G` into a caller buffer; lengths must equal `dim()`.
    #[inline]
    pub(crate) fn grad_g_into(&self, x: &[T], out: &mut [T]) {
        self.perturbation.gradient_into(x, out);
    }

    #[inline]
    pub(crate) fn grad_u_into(&self, x: &[T], out: &mut [T]) {
        self.perturbation.gradient_into(x, out);
        for ((o, &k), &xi) in out.iter_mut().zip(&self.k).zip(x) {
            *o = *o + k * xi;
        }
    }

    /// Checks the sufficient step-size conditions of the contraction results.
    /// Never fails: the conditions are sufficient, not necessary.
    pub fn validate_step(&self, gamma: T, h: T, scheme: Scheme) -> StepValidity<T> {
        let two = T::lit(2.0);
        let divisor = match scheme {
            Scheme::Pg => two,
            Scheme::Pgp | Scheme::Obabo => T::lit(4.0),
        };
        let friction_ratio = self.l_g / (gamma * gamma);
        let friction_bound = T::one() / (divisor * gamma);
        let stiffness_bound = gamma / (divisor * self.l_k);
        let (h_bound, binding) = if friction_bound <= stiffness_bound {
            (friction_bound, BindingBound::Friction)
        } else {
            (stiffness_bound, BindingBound::Stiffness)
        };
        let origin = vec![T::zero(); self.dim()];
        let mut g0 = vec![T::zero(); self.dim()];
        self.grad_g_into(&origin, &mut g0);
        StepValidity {
            scheme,
            friction_ratio,
            friction_ok: friction_ratio <= T::lit(0.5),
            h,
            h_bound,
            binding,
            step_ok: h <= h_bound,
            grad_g_vanishes_at_origin: g0.iter().all(|v| *v == T::zero()),
        }
    }
}

/// Which term of `min(1/(cγ), γ/(c L_K))` is active.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BindingBound {
    Friction,
    Stiffness,
}

/// Outcome of [`PotentialModel::validate_step`].
#[derive(Clone, Debug, PartialEq)]
pub struct StepValidity<T> {
    pub scheme: Scheme,
    /// `L_G γ⁻²`, must not exceed 1/2.
    pub friction_ratio: T,
    pub friction_ok: bool,
    pub h: T,
    pub h_bound: T,
    pub binding: BindingBound,
    pub step_ok: bool,
    /// Informational only; the experiments' models have `∇G(0) ≠ 0`.
    pub grad_g_vanishes_at_origin: bool,
}

impl<T: Scalar> StepValidity<T> {
    pub fn passes(&self) -> bool {
        self.friction_ok && self.step_ok
    }

    /// Human-readable warnings for every failed condition.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.friction_ok {
            out.push(format!(
                "L_G/gamma^2 = {} exceeds 1/2; contraction guarantee does not apply",
                self.friction_ratio
            ));
        }
        if !self.step_ok {
            let which = match self.binding {
                BindingBound::Friction => "friction",
                BindingBound::Stiffness => "stiffness",
            };
            out.push(format!(
                "h = {} exceeds the {which} bound {} for {}",
                self.h, self.h_bound, self.scheme
            ));
        }
        out
    }
}

/// Position and velocity of one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseState<T> {
    pub x: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Scalar> PhaseState<T> {
    pub fn new(x: Vec<T>, v: Vec<T>) -> Result<Self> {
        if x.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: v.len(),
            });
        }
        Ok(Self { x, v })
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            x: vec![T::zero(); d],
            v: vec![T::zero(); d],
        }
    }

    /// Parses the flat layout `x_1..x_d, v_1..v_d`.
    pub fn from_flat(values: &[T]) -> Result<Self> {
        if values.len() % 2 != 0 || values.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 2 * (values.len() / 2 + 1),
                got: values.len(),
            });
        }
        let d = values.len() / 2;
        Ok(Self {
            x: values[..d].to_vec(),
            v: values[d..].to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.v).all(|v| v.is_finite())
    }

    /// Euclidean distance in phase space.
    pub fn euclidean_distance(&self, other: &Self) -> T {
        self.x
            .iter()
            .zip(&other.x)
            .chain(self.v.iter().zip(&other.v))
            .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b))
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grad_u_examples() {
        let g = PotentialModel::<f64>::gaussian(vec![1.0, 10.0]).unwrap();
        assert_eq!(g.grad_u(&[1.0, 1.0]).unwrap(), vec![1.0, 10.0]);

        let osc = PotentialModel::<f64>::oscillation();
        assert_eq!(osc.grad_u(&[0.0, 0.0]).unwrap(), vec![0.125, 0.125]);

        let log = PotentialModel::<f64>::logistic();
        let gl = log.grad_u(&[0.0, 0.0]).unwrap();
        assert!((gl[0] - 0.05).abs() < 1e-15 && (gl[1] - 0.10).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let osc = PotentialModel::<f64>::oscillation();
        assert_eq!(
            osc.grad_u(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
        assert!(PhaseState::new(vec![0.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn built_in_constants() {
        let osc = PotentialModel::<f64>::oscillation();
        assert_eq!((osc.kappa(), osc.l_k(), osc.l_g()), (1.0, 10.0, 0.5));
        let log = PotentialModel::<f64>::logistic();
        assert_eq!((log.kappa(), log.l_k(), log.l_g()), (1.0, 10.0, 0.4));
        let g = PotentialModel::<f64>::gaussian(vec![1.0, 10.0]).unwrap();
        assert_eq!(g.l_g(), 0.0);
        assert_eq!(g.grad_g(&[3.0, -2.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn gaussian_rejects_nonpositive_k() {
        assert!(PotentialModel::<f64>::gaussian(vec![1.0, 0.0]).is_err());
        assert!(PotentialModel::<f64>::gaussian(vec![-1.0]).is_err());
        assert!(PotentialModel::<f64>::by_name("banana", None).is_err());
    }

    #[test]
    fn validate_step_examples() {
        let osc = PotentialModel::<f64>::oscillation();
        let ok = osc.validate_step(2.0, 0.01, Scheme::Pgp);
        assert!(ok.passes());
        assert_eq!(ok.friction_ratio, 0.125);
        assert_eq!(ok.h_bound, 0.05);
        assert!(!ok.grad_g_vanishes_at_origin);

        let bad = osc.validate_step(2.0, 0.06, Scheme::Pgp);
        assert!(bad.friction_ok && !bad.step_ok);
        assert_eq!(bad.binding, BindingBound::Stiffness);
        assert_eq!(bad.warnings().len(), 1);

        let g = PotentialModel::<f64>::gaussian(vec![1.0, 10.0]).unwrap();
        for gamma in [0.5, 2.0, 8.0] {
            let v = g.validate_step(gamma, 1.0 / (2.0 * gamma), Scheme::Pg);
            assert!(v.friction_ok);
            // boundary h = 1/(2γ) passes whenever it is the binding bound
            assert_eq!(v.step_ok, 1.0 / (2.0 * gamma) <= gamma / 20.0);
        }
        assert!(g.validate_step(8.0, 1.0 / 16.0, Scheme::Pg).passes());
    }
}
