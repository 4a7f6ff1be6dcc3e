//! Invariant-measure bias of stationary moments as a function of step size.

use rayon::prelude::*;

use crate::coupling::{contraction_constants, ols};
use crate::error::{positive, Error, Result};
use crate::potential::{PhaseState, PotentialModel};
use crate::samplers::{Sampler, Scheme, SchemeConfig};

use super::moments::{raw_moment_ids, raw_moment_values, BatchMeans};
use super::reference::{reference_moments, ReferenceMoments};

/// A bias point counts only when it exceeds this many standard errors.
pub const CONCLUSIVE_SE_RATIO: f64 = 5.0;
const BATCHES: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct BiasSweepConfig {
    pub schemes: Vec<Scheme>,
    pub gamma: f64,
    pub h_list: Vec<f64>,
    /// Post-burn-in steps per `(scheme, h)` cell.
    pub steps: usize,
    pub seed: u64,
    /// Moments reported; all must have a reference value.
    pub moments: Vec<String>,
    /// Burn-in in units of the relaxation time `1/c`; `10` by default.
    pub burn_in_relaxations: f64,
}

impl BiasSweepConfig {
    pub fn new(
        schemes: Vec<Scheme>,
        gamma: f64,
        h_list: Vec<f64>,
        steps: usize,
        seed: u64,
    ) -> Self {
        Self {
            schemes,
            gamma,
            h_list,
            steps,
            seed,
            moments: ["E[x1^2]", "E[x2^2]", "E[x1x2]", "E[v1^2]", "E[x1v1]"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            burn_in_relaxations: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiasSweepRow {
    pub h: f64,
    pub scheme: Scheme,
    pub moment: String,
    pub estimate: f64,
    pub reference: f64,
    pub abs_bias: f64,
    pub se: f64,
    /// `abs_bias > 5·se`.
    pub conclusive: bool,
}

/// Log–log slope of `|bias|` against `h` for one scheme and moment.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderFit {
    pub scheme: Scheme,
    pub moment: String,
    /// Fitted over the conclusive points when at least two exist.
    pub slope: Option<f64>,
    pub slope_se: f64,
    pub points_used: usize,
    pub points_total: usize,
    /// Every point conclusive and at least two of them.
    pub conclusive: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiasSweep {
    pub rows: Vec<BiasSweepRow>,
    pub orders: Vec<OrderFit>,
    pub reference: ReferenceMoments,
    pub burn_in: Vec<usize>,
}

impl BiasSweep {
    pub fn order(&self, scheme: Scheme, moment: &str) -> Option<&OrderFit> {
        self.orders
            .iter()
            .find(|o| o.scheme == scheme && o.moment == moment)
    }
}

/// Runs one chain per `(scheme, h)` from the origin, discards
/// `ceil(burn_in_relaxations / (c h))` steps and averages the next `steps`
/// states against quadrature reference moments. Cells run in parallel on
/// distinct noise streams.
pub fn bias_sweep(model: &PotentialModel<f64>, config: &BiasSweepConfig) -> Result<BiasSweep> {
    positive("gamma", config.gamma)?;
    if config.h_list.is_empty() || config.schemes.is_empty() {
        return Err(Error::Insufficient("empty h list or scheme set".into()));
    }
    for &h in &config.h_list {
        positive("h", h)?;
    }
    let reference = reference_moments(model)?;
    let all_ids = raw_moment_ids(model.dim());
    let picks: Vec<(usize, f64)> = config
        .moments
        .iter()
        .map(|id| {
            let idx = all_ids.iter().position(|a| a == id);
            let reference = reference.get(id);
            match (idx, reference) {
                (Some(i), Some(r)) => Ok((i, r)),
                _ => Err(Error::Unknown {
                    kind: "moment",
                    name: id.clone(),
                }),
            }
        })
        .collect::<Result<_>>()?;

    let rate = contraction_constants(model.kappa(), config.gamma, model.l_k())?.c;
    let burn_in: Vec<usize> = config
        .h_list
        .iter()
        .map(|&h| (config.burn_in_relaxations / (rate * h)).ceil() as usize)
        .collect();

    let cells: Vec<(usize, usize)> = (0..config.schemes.len())
        .flat_map(|s| (0..config.h_list.len()).map(move |i| (s, i)))
        .collect();
    let results: Vec<Vec<BiasSweepRow>> = cells
        .par_iter()
        .map(|&(si, hi)| {
            let scheme = config.schemes[si];
            let h = config.h_list[hi];
            let stream = ((scheme as u64) << 32) | hi as u64;
            let sampler = Sampler::new(
                model.clone(),
                SchemeConfig::new(scheme, config.gamma, h, config.seed)?,
            )?;
            let mut acc: Vec<BatchMeans> = picks
                .iter()
                .map(|_| BatchMeans::new(config.steps, BATCHES))
                .collect::<Result<_>>()?;
            let d = model.dim();
            let mut row = vec![0.0; 2 * d];
            let mut values = Vec::with_capacity(all_ids.len());
            let skip = burn_in[hi];
            sampler.run_observed(
                &PhaseState::zeros(d),
                skip + config.steps,
                stream,
                |step, s| {
                    if step <= skip {
                        return;
                    }
                    row[..d].copy_from_slice(&s.x);
                    row[d..].copy_from_slice(&s.v);
                    raw_moment_values(&row, d, &mut values);
                    for (a, &(i, _)) in acc.iter_mut().zip(&picks) {
                        a.push(values[i]);
                    }
                },
            )?;
            Ok(acc
                .iter()
                .zip(&picks)
                .zip(&config.moments)
                .map(|((a, &(_, reference)), id)| {
                    let rep = a.report(id.clone());
                    let abs_bias = (rep.estimate - reference).abs();
                    BiasSweepRow {
                        h,
                        scheme,
                        moment: id.clone(),
                        estimate: rep.estimate,
                        reference,
                        abs_bias,
                        se: rep.se,
                        conclusive: abs_bias > CONCLUSIVE_SE_RATIO * rep.se,
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let rows: Vec<BiasSweepRow> = results.into_iter().flatten().collect();

    let mut orders = Vec::new();
    for &scheme in &config.schemes {
        for id in &config.moments {
            let pts: Vec<&BiasSweepRow> = rows
                .iter()
                .filter(|r| r.scheme == scheme && &r.moment == id)
                .collect();
            let good: Vec<(f64, f64)> = pts
                .iter()
                .filter(|r| r.conclusive)
                .map(|r| (r.h.ln(), r.abs_bias.ln()))
                .collect();
            let fit = (good.len() >= 2).then(|| ols(&good));
            orders.push(OrderFit {
                scheme,
                moment: id.clone(),
                slope: fit.map(|f| f.slope),
                slope_se: fit.map_or(f64::NAN, |f| f.slope_se),
                points_used: good.len(),
                points_total: pts.len(),
                conclusive: good.len() >= 2 && good.len() == pts.len(),
            });
        }
    }
    Ok(BiasSweep {
        rows,
        orders,
        reference,
        burn_in,
    })
}
