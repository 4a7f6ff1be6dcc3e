//! Reference moments of `μ ∝ exp(−U(x) − |v|²/2)` for two-dimensional models
//! by tensor-product Gauss–Legendre quadrature on `[−L, L]²`, `L = 10/√κ`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::potential::PotentialModel;
use crate::quadrature::GaussLegendre;

pub const COARSE_NODES: usize = 128;
pub const FINE_NODES: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceMoments {
    pub values: BTreeMap<String, f64>,
    /// Largest change between the coarse and fine grids.
    pub refinement_delta: f64,
}

impl ReferenceMoments {
    pub fn get(&self, id: &str) -> Option<f64> {
        self.values.get(id).copied()
    }
}

/// Position moments on an `n × n` grid, plus the exact velocity moments.
pub fn reference_moments_with(
    model: &PotentialModel<f64>,
    nodes: usize,
) -> Result<BTreeMap<String, f64>> {
    if model.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "quadrature reference needs d = 2, model has d = {}",
            model.dim()
        )));
    }
    let half_width = 10.0 / model.kappa().sqrt();
    let rule = GaussLegendre::new(nodes);
    let pts: Vec<(f64, f64)> = rule.mapped(-half_width, half_width).collect();
    let u0 = model.u_value(&[0.0, 0.0])?;

    let (mut z, mut m1, mut m2, mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for &(a, wa) in &pts {
        for &(b, wb) in &pts {
            let w = wa * wb * (u0 - model.u_value(&[a, b])?).exp();
            z += w;
            m1 += w * a;
            m2 += w * b;
            s11 += w * a * a;
            s22 += w * b * b;
            s12 += w * a * b;
        }
    }
    let mut values = BTreeMap::new();
    values.insert("E[x1]".to_string(), m1 / z);
    values.insert("E[x2]".to_string(), m2 / z);
    values.insert("E[x1^2]".to_string(), s11 / z);
    values.insert("E[x2^2]".to_string(), s22 / z);
    values.insert("E[x1x2]".to_string(), s12 / z);
    for j in 1..=2 {
        values.insert(format!("E[v{j}^2]"), 1.0);
        values.insert(format!("E[x{j}v{j}]"), 0.0);
    }
    Ok(values)
}

/// Reference moments on the fine grid, with the coarse-grid change recorded.
pub fn reference_moments(model: &PotentialModel<f64>) -> Result<ReferenceMoments> {
    let coarse = reference_moments_with(model, COARSE_NODES)?;
    let fine = reference_moments_with(model, FINE_NODES)?;
    let refinement_delta = coarse
        .iter()
        .map(|(k, v)| (v - fine[k]).abs())
        .fold(0.0, f64::max);
    Ok(ReferenceMoments {
        values: fine,
        refinement_delta,
    })
}
