//! Splitting samplers: the gradient kick `𝒫`, the first-order chain `𝒫𝒢`,
//! the symmetric chain `𝒫_{h/2} 𝒢 𝒫_{h/2}`, and an OBABO baseline.
//!
//! Every scheme consumes exactly one [`NoiseDraw`] (`2d` standard normals)
//! per step, so chains of different schemes can share a noise sequence.

use std::fmt;
use std::str::FromStr;

use crate::error::{positive, Error, Result};
use crate::harmonic::{HarmonicStep, NoiseDraw};
use crate::potential::{PhaseState, PotentialModel};
use crate::rng::NoiseStream;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// `𝒫 ∘ 𝒢`.
    Pg,
    /// `𝒫_{h/2} ∘ 𝒢 ∘ 𝒫_{h/2}`.
    Pgp,
    /// Half-O, half-B, full-A, half-B, half-O.
    Obabo,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Pg, Scheme::Pgp, Scheme::Obabo];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Pg => "pg",
            Self::Pgp => "pgp",
            Self::Obabo => "obabo",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pg" => Ok(Self::Pg),
            "pgp" => Ok(Self::Pgp),
            "obabo" => Ok(Self::Obabo),
            other => Err(Error::Unknown {
                kind: "scheme",
                name: other.to_string(),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeConfig<T> {
    pub scheme: Scheme,
    pub gamma: T,
    pub h: T,
    pub seed: u64,
}

impl<T: Scalar> SchemeConfig<T> {
    pub fn new(scheme: Scheme, gamma: T, h: T, seed: u64) -> Result<Self> {
        positive("gamma", gamma.as_f64())?;
        positive("h", h.as_f64())?;
        Ok(Self {
            scheme,
            gamma,
            h,
            seed,
        })
    }
}

/// `𝒫(x, v, t) = (x, v − t ∇G(x))`.
pub fn p_step<T: Scalar>(
    model: &PotentialModel<T>,
    state: &PhaseState<T>,
    t: T,
) -> Result<PhaseState<T>> {
    let grad = model.grad_g(&state.x)?;
    let mut out = state.clone();
    for (v, g) in out.v.iter_mut().zip(grad) {
        *v = *v - t * g;
    }
    Ok(out)
}

/// One `𝒫𝒢` step: the exact harmonic step, then a full gradient kick.
pub fn pg_step<T: Scalar>(
    model: &PotentialModel<T>,
    harmonic: &HarmonicStep<T>,
    state: &PhaseState<T>,
    noise: &NoiseDraw<T>,
) -> Result<PhaseState<T>> {
    let after_g = harmonic.g_step(state, noise)?;
    p_step(model, &after_g, harmonic.coeffs()[0].h)
}

/// One `𝒫𝒢𝒫` step: half kick, exact harmonic step, half kick.
pub fn pgp_step<T: Scalar>(
    model: &PotentialModel<T>,
    harmonic: &HarmonicStep<T>,
    state: &PhaseState<T>,
    noise: &NoiseDraw<T>,
) -> Result<PhaseState<T>> {
    let half = T::lit(0.5) * harmonic.coeffs()[0].h;
    let first = p_step(model, state, half)?;
    let after_g = harmonic.g_step(&first, noise)?;
    p_step(model, &after_g, half)
}

/// One OBABO step with `η = e^{−γh/2}`; `ξ` drives the first O stage and
/// `ζ` the second.
pub fn obabo_step<T: Scalar>(
    model: &PotentialModel<T>,
    gamma: T,
    h: T,
    state: &PhaseState<T>,
    noise: &NoiseDraw<T>,
) -> Result<PhaseState<T>> {
    let sampler = Sampler::new(
        model.clone(),
        SchemeConfig::new(Scheme::Obabo, gamma, h, 0)?,
    )?;
    sampler.step(state, noise)
}

/// A scheme bound to a model with all per-run constants precomputed.
#[derive(Clone, Debug)]
pub struct Sampler<T> {
    model: PotentialModel<T>,
    config: SchemeConfig<T>,
    harmonic: HarmonicStep<T>,
    eta: T,
    eta_noise: T,
}

impl<T: Scalar> Sampler<T> {
    pub fn new(model: PotentialModel<T>, config: SchemeConfig<T>) -> Result<Self> {
        let harmonic = HarmonicStep::new(&model, config.gamma, config.h)?;
        let eta = (-T::lit(0.5) * config.gamma * config.h).exp();
        // √(1 − η²) = √(−expm1(−γh))
        let eta_noise = (-(-config.gamma * config.h).exp_m1()).sqrt();
        Ok(Self {
            model,
            config,
            harmonic,
            eta,
            eta_noise,
        })
    }

    pub fn model(&self) -> &PotentialModel<T> {
        &self.model
    }

    pub fn config(&self) -> &SchemeConfig<T> {
        &self.config
    }

    pub fn harmonic(&self) -> &HarmonicStep<T> {
        &self.harmonic
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// Allocating single step with dimension checks.
    pub fn step(&self, state: &PhaseState<T>, noise: &NoiseDraw<T>) -> Result<PhaseState<T>> {
        self.harmonic.check(state, noise)?;
        let mut out = state.clone();
        let mut grad = vec![T::zero(); self.dim()];
        self.step_in_place(&mut out, noise, &mut grad);
        Ok(out)
    }

    #[inline]
    fn kick(&self, state: &mut PhaseState<T>, t: T, grad: &mut [T]) {
        if !self.model.has_perturbation() {
            return;
        }
        self.model.grad_g_into(&state.x, grad);
        for (v, &g) in state.v.iter_mut().zip(grad.iter()) {
            *v = *v - t * g;
        }
    }

    /// Advances `state` by one step. `grad` is scratch of length `dim()`;
    /// all lengths are assumed to match.
    #[inline]
    pub fn step_in_place(&self, state: &mut PhaseState<T>, noise: &NoiseDraw<T>, grad: &mut [T]) {
        let h = self.config.h;
        let half = T::lit(0.5) * h;
        match self.config.scheme {
            Scheme::Pg => {
                self.harmonic.apply(state, noise);
                self.kick(state, h, grad);
            }
            Scheme::Pgp => {
                self.kick(state, half, grad);
                self.harmonic.apply(state, noise);
                self.kick(state, half, grad);
            }
            Scheme::Obabo => {
                for (v, &z) in state.v.iter_mut().zip(&noise.xi) {
                    *v = self.eta * *v + self.eta_noise * z;
                }
                self.model.grad_u_into(&state.x, grad);
                for (v, &g) in state.v.iter_mut().zip(grad.iter()) {
                    *v = *v - half * g;
                }
                for (x, &v) in state.x.iter_mut().zip(&state.v) {
                    *x = *x + h * v;
                }
                self.model.grad_u_into(&state.x, grad);
                for (v, &g) in state.v.iter_mut().zip(grad.iter()) {
                    *v = *v - half * g;
                }
                for (v, &z) in state.v.iter_mut().zip(&noise.zeta) {
                    *v = self.eta * *v + self.eta_noise * z;
                }
            }
        }
    }

    /// Iterates the chain from `initial` on noise stream `stream`, calling
    /// `observe(step, state)` after every step `1..=n_steps`.
    pub fn run_observed<F>(
        &self,
        initial: &PhaseState<T>,
        n_steps: usize,
        stream: u64,
        mut observe: F,
    ) -> Result<PhaseState<T>>
    where
        F: FnMut(usize, &PhaseState<T>),
    {
        let d = self.dim();
        if initial.x.len() != d || initial.v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: initial.x.len().max(initial.v.len()),
            });
        }
        let mut rng = NoiseStream::new(self.config.seed, stream);
        let mut noise = NoiseDraw::zeros(d);
        let mut grad = vec![T::zero(); d];
        let mut state = initial.clone();
        for step in 1..=n_steps {
            rng.fill(&mut noise);
            self.step_in_place(&mut state, &noise, &mut grad);
            if !state.is_finite() {
                return Err(Error::NonFinite { step });
            }
            observe(step, &state);
        }
        Ok(state)
    }
}

/// Thinned chain samples stored row-major as `x_1..x_d, v_1..v_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainOutput<T> {
    pub dim: usize,
    pub n_steps: usize,
    pub thin: usize,
    pub seed: u64,
    pub stream: u64,
    pub steps: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Scalar> ChainOutput<T> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Row `i` as a flat slice `x_1..x_d, v_1..v_d`.
    pub fn row(&self, i: usize) -> &[T] {
        let w = 2 * self.dim;
        &self.data[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(2 * self.dim)
    }

    pub fn state(&self, i: usize) -> PhaseState<T> {
        PhaseState::from_flat(self.row(i)).expect("row has even width")
    }
}

/// Runs one chain and keeps every `thin`-th state.
pub fn run_chain<T: Scalar>(
    model: &PotentialModel<T>,
    config: SchemeConfig<T>,
    initial: &PhaseState<T>,
    n_steps: usize,
    thin: usize,
) -> Result<ChainOutput<T>> {
    run_chain_on_stream(model, config, initial, n_steps, thin, 0)
}

pub fn run_chain_on_stream<T: Scalar>(
    model: &PotentialModel<T>,
    config: SchemeConfig<T>,
    initial: &PhaseState<T>,
    n_steps: usize,
    thin: usize,
    stream: u64,
) -> Result<ChainOutput<T>> {
    if n_steps == 0 {
        return Err(Error::InvalidParameter {
            name: "n_steps",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    if thin == 0 {
        return Err(Error::InvalidParameter {
            name: "thin",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    let sampler = Sampler::new(model.clone(), config)?;
    let d = model.dim();
    let mut steps = Vec::with_capacity(n_steps / thin);
    let mut data = Vec::with_capacity(2 * d * (n_steps / thin));
    sampler.run_observed(initial, n_steps, stream, |step, s| {
        if step % thin == 0 {
            steps.push(step);
            data.extend_from_slice(&s.x);
            data.extend_from_slice(&s.v);
        }
    })?;
    Ok(ChainOutput {
        dim: d,
        n_steps,
        thin,
        seed: config.seed,
        stream,
        steps,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(x: [f64; 2], v: [f64; 2]) -> PhaseState<f64> {
        PhaseState::new(x.to_vec(), v.to_vec()).unwrap()
    }

    #[test]
    fn p_step_examples() {
        let g = PotentialModel::gaussian(vec![1.0, 10.0]).unwrap();
        let s = st([0.3, -1.0], [2.0, 0.5]);
        assert_eq!(p_step(&g, &s, 0.01).unwrap(), s);

        let osc = PotentialModel::oscillation();
        let out = p_step(&osc, &st([0.0, 0.0], [1.0, 1.0]), 0.01).unwrap();
        assert_eq!(out.x, vec![0.0, 0.0]);
        assert!((out.v[0] - 0.99875).abs() < 1e-15 && (out.v[1] - 0.99875).abs() < 1e-15);
        assert_eq!(p_step(&osc, &s, 0.0).unwrap(), s);
    }

    #[test]
    fn gaussian_pg_and_pgp_are_bitwise_g_step() {
        let g = PotentialModel::gaussian(vec![1.0, 10.0]).unwrap();
        let hs = HarmonicStep::new(&g, 2.0, 0.05).unwrap();
        let mut rng = NoiseStream::new(3, 0);
        let mut s = st([1.0, -0.5], [0.2, 0.1]);
        for _ in 0..50 {
            let n = rng.draw(2);
            let gs = hs.g_step(&s, &n).unwrap();
            assert_eq!(pg_step(&g, &hs, &s, &n).unwrap(), gs);
            assert_eq!(pgp_step(&g, &hs, &s, &n).unwrap(), gs);
            for scheme in [Scheme::Pg, Scheme::Pgp] {
                let sm = Sampler::new(g.clone(), SchemeConfig::new(scheme, 2.0, 0.05, 0).unwrap())
                    .unwrap();
                assert_eq!(sm.step(&s, &n).unwrap(), gs);
            }
            s = gs;
        }
    }

    #[test]
    fn staged_composition_matches_fused_sampler() {
        let osc = PotentialModel::oscillation();
        let hs = HarmonicStep::new(&osc, 2.0, 0.01).unwrap();
        let s = st([1.0, 1.0], [0.0, 0.0]);
        let zero = NoiseDraw::zeros(2);

        let manual_pg = p_step(&osc, &hs.g_step(&s, &zero).unwrap(), 0.01).unwrap();
        assert_eq!(pg_step(&osc, &hs, &s, &zero).unwrap(), manual_pg);

        let n = NoiseStream::new(11, 2).draw(2);
        let manual_pgp = p_step(
            &osc,
            &hs.g_step(&p_step(&osc, &s, 0.005).unwrap(), &n).unwrap(),
            0.005,
        )
        .unwrap();
        assert_eq!(pgp_step(&osc, &hs, &s, &n).unwrap(), manual_pgp);

        for (scheme, expect) in [
            (Scheme::Pg, pg_step(&osc, &hs, &s, &n).unwrap()),
            (Scheme::Pgp, manual_pgp),
        ] {
            let sm = Sampler::new(
                osc.clone(),
                SchemeConfig::new(scheme, 2.0, 0.01, 0).unwrap(),
            )
            .unwrap();
            let got = sm.step(&s, &n).unwrap();
            assert!(got.euclidean_distance(&expect) < 1e-15);
        }
    }

    #[test]
    fn obabo_limits() {
        let osc = PotentialModel::oscillation();
        let s = st([0.4, -0.2], [1.0, -1.0]);
        let n = NoiseStream::new(5, 0).draw(2);
        // h → 0: η = 1 and all stages vanish
        let tiny = obabo_step(&osc, 2.0, 1e-300, &s, &n).unwrap();
        assert!(tiny.euclidean_distance(&s) < 1e-140);

        // γ → ∞: the O stages fully refresh v to ζ
        let big = Sampler::new(
            osc.clone(),
            SchemeConfig::new(Scheme::Obabo, 1e6, 0.01, 0).unwrap(),
        )
        .unwrap();
        let out = big.step(&s, &n).unwrap();
        assert_eq!(out.v, n.zeta);
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("PGP".parse::<Scheme>().unwrap(), Scheme::Pgp);
        assert_eq!(" obabo".parse::<Scheme>().unwrap(), Scheme::Obabo);
        assert!("ubu".parse::<Scheme>().is_err());
    }

    #[test]
    fn run_chain_is_deterministic_and_thinned() {
        let osc = PotentialModel::oscillation();
        let cfg = SchemeConfig::new(Scheme::Pgp, 2.0, 0.01, 42).unwrap();
        let init = st([1.0, 1.0], [1.0, 1.0]);
        let a = run_chain(&osc, cfg, &init, 1000, 10).unwrap();
        let b = run_chain(&osc, cfg, &init, 1000, 10).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        assert_eq!(a.steps[0], 10);
        assert!(a.data.iter().all(|v| v.is_finite()));
        assert!(run_chain(&osc, cfg, &init, 0, 1).is_err());
        assert!(run_chain(&osc, cfg, &init, 10, 0).is_err());
    }

    #[test]
    fn divergence_aborts_with_step_index() {
        let g = PotentialModel::gaussian(vec![1.0]).unwrap();
        let cfg = SchemeConfig::new(Scheme::Obabo, 0.1, 5.0, 1).unwrap();
        let init = PhaseState::new(vec![1.0], vec![0.0]).unwrap();
        match run_chain(&g, cfg, &init, 100_000, 1) {
            Err(Error::NonFinite { step }) => assert!(step > 1),
            other => panic!("expected abort, got {other:?}"),
        }
    }
}
