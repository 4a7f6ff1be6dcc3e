use crate::error::{Error, Result};
use crate::samplers::ChainOutput;
use crate::scalar::Scalar;

pub const MIN_BATCHES: usize = 20;

/// Post-burn-in estimate of one moment with its batch-means standard error.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    pub id: String,
    pub estimate: f64,
    pub se: f64,
    /// Sample variance over squared standard error.
    pub effective_samples: f64,
}

/// Streaming batch-means accumulator for a series of known length.
#[derive(Clone, Debug)]
pub struct BatchMeans {
    batch_size: usize,
    batches: usize,
    current: f64,
    filled: usize,
    means: Vec<f64>,
    sum: f64,
    sum_sq: f64,
    count: usize,
}

impl BatchMeans {
    /// Splits `total` values into `batches` equal batches; a remainder at the
    /// end is ignored.
    pub fn new(total: usize, batches: usize) -> Result<Self> {
        if batches < MIN_BATCHES || total < batches {
            return Err(Error::Insufficient(format!(
                "{total} values cannot fill {batches} batches (need at least {MIN_BATCHES})"
            )));
        }
        Ok(Self {
            batch_size: total / batches,
            batches,
            current: 0.0,
            filled: 0,
            means: Vec::with_capacity(batches),
            sum: 0.0,
            sum_sq: 0.0,
            count: 0,
        })
    }

    /// Batch count of `floor(√n)`, at least [`MIN_BATCHES`].
    pub fn for_len(total: usize) -> Result<Self> {
        let b = ((total as f64).sqrt() as usize).max(MIN_BATCHES);
        Self::new(total, b)
    }

    #[inline]
    pub fn push(&mut self, value: f64) {
        if self.means.len() == self.batches {
            return;
        }
        self.current += value;
        self.sum += value;
        self.sum_sq += value * value;
        self.count += 1;
        self.filled += 1;
        if self.filled == self.batch_size {
            self.means.push(self.current / self.batch_size as f64);
            self.current = 0.0;
            self.filled = 0;
        }
    }

    pub fn report(&self, id: impl Into<String>) -> MomentReport {
        let b = self.means.len() as f64;
        let mean = self.means.iter().sum::<f64>() / b;
        let var_b = self.means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1.0);
        let se = (var_b / b).sqrt();
        let n = self.count as f64;
        let var = (self.sum_sq / n - (self.sum / n).powi(2)).max(0.0);
        MomentReport {
            id: id.into(),
            estimate: mean,
            se,
            effective_samples: if se > 0.0 { var / (se * se) } else { n },
        }
    }
}

/// Observables tracked per coordinate and across the first pair.
pub(crate) fn raw_moment_ids(d: usize) -> Vec<String> {
    let mut ids = Vec::new();
    for j in 1..=d {
        ids.push(format!("E[x{j}]"));
    }
    for j in 1..=d {
        ids.push(format!("E[x{j}^2]"));
    }
    if d >= 2 {
        ids.push("E[x1x2]".into());
    }
    for j in 1..=d {
        ids.push(format!("E[v{j}^2]"));
    }
    for j in 1..=d {
        ids.push(format!("E[x{j}v{j}]"));
    }
    ids
}

pub(crate) fn raw_moment_values(row: &[f64], d: usize, out: &mut Vec<f64>) {
    out.clear();
    let (x, v) = row.split_at(d);
    out.extend_from_slice(x);
    out.extend(x.iter().map(|a| a * a));
    if d >= 2 {
        out.push(x[0] * x[1]);
    }
    out.extend(v.iter().map(|a| a * a));
    out.extend(x.iter().zip(v).map(|(a, b)| a * b));
}

/// Batch-means estimates of the raw moments and of the per-coordinate
/// variances and position–velocity covariances after dropping `burn_in` rows.
pub fn estimate_moments<T: Scalar>(
    samples: &ChainOutput<T>,
    burn_in: usize,
) -> Result<Vec<MomentReport>> {
    let n = samples.len();
    if n <= burn_in + 1000 {
        return Err(Error::Insufficient(format!(
            "{n} samples with burn-in {burn_in}; need more than burn-in + 1000"
        )));
    }
    let d = samples.dim;
    let used = n - burn_in;
    let rows: Vec<Vec<f64>> = samples
        .rows()
        .skip(burn_in)
        .map(|r| r.iter().map(|v| v.as_f64()).collect())
        .collect();

    let ids = raw_moment_ids(d);
    let mut acc: Vec<BatchMeans> = (0..ids.len())
        .map(|_| BatchMeans::for_len(used))
        .collect::<Result<_>>()?;
    let mut buf = Vec::with_capacity(ids.len());
    let mut mean = vec![0.0; 2 * d];
    for row in &rows {
        raw_moment_values(row, d, &mut buf);
        for (a, &val) in acc.iter_mut().zip(&buf) {
            a.push(val);
        }
        for (m, &val) in mean.iter_mut().zip(row) {
            *m += val;
        }
    }
    mean.iter_mut().for_each(|m| *m /= used as f64);

    let mut reports: Vec<MomentReport> = acc
        .iter()
        .zip(&ids)
        .map(|(a, id)| a.report(id.clone()))
        .collect();

    // central second moments
    let mut central: Vec<(String, BatchMeans)> = Vec::new();
    for j in 1..=d {
        central.push((format!("Var[x{j}]"), BatchMeans::for_len(used)?));
    }
    for j in 1..=d {
        central.push((format!("Var[v{j}]"), BatchMeans::for_len(used)?));
    }
    for j in 1..=d {
        central.push((format!("Cov[x{j},v{j}]"), BatchMeans::for_len(used)?));
    }
    for row in &rows {
        for j in 0..d {
            let dx = row[j] - mean[j];
            let dv = row[d + j] - mean[d + j];
            central[j].1.push(dx * dx);
            central[d + j].1.push(dv * dv);
            central[2 * d + j].1.push(dx * dv);
        }
    }
    reports.extend(central.iter().map(|(id, a)| a.report(id.clone())));
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::NoiseStream;

    fn synthetic(rows: Vec<[f64; 2]>) -> ChainOutput<f64> {
        ChainOutput {
            dim: 1,
            n_steps: rows.len(),
            thin: 1,
            seed: 0,
            stream: 0,
            steps: (1..=rows.len()).collect(),
            data: rows.into_iter().flatten().collect(),
        }
    }

    fn find<'a>(r: &'a [MomentReport], id: &str) -> &'a MomentReport {
        r.iter().find(|m| m.id == id).unwrap()
    }

    #[test]
    fn iid_normal_second_moment() {
        let mut rng = NoiseStream::new(9, 0);
        let rows = (0..100_000).map(|_| [rng.normal(), rng.normal()]).collect();
        let r = estimate_moments(&synthetic(rows), 0).unwrap();
        let m = find(&r, "E[x1^2]");
        assert!((m.estimate - 1.0).abs() < 4.0 * m.se, "{m:?}");
        assert!(m.effective_samples > 50_000.0);
    }

    #[test]
    fn constant_input_has_zero_error() {
        let rows = vec![[2.0, -1.0]; 5000];
        let r = estimate_moments(&synthetic(rows), 100).unwrap();
        let m = find(&r, "E[x1^2]");
        assert_eq!((m.estimate, m.se), (4.0, 0.0));
        assert_eq!(find(&r, "Var[x1]").estimate, 0.0);
        assert_eq!(find(&r, "E[x1v1]").estimate, -2.0);
    }

    #[test]
    fn too_few_samples() {
        let rows = vec![[0.0, 0.0]; 1500];
        assert!(estimate_moments(&synthetic(rows), 600).is_err());
        assert!(BatchMeans::new(100, 10).is_err());
    }
}
