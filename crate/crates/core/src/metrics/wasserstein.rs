//! Exact `W₂` between equal-size empirical measures.

use crate::error::{Error, Result};

pub const MAX_ASSIGNMENT_SIZE: usize = 2048;

fn check(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Insufficient("empty samples".into()));
    }
    if a.len() > MAX_ASSIGNMENT_SIZE {
        return Err(Error::Unsupported(format!(
            "sample size {} exceeds {MAX_ASSIGNMENT_SIZE}",
            a.len()
        )));
    }
    let m = a[0].len();
    if !matches!(m, 1 | 2 | 4) {
        return Err(Error::Unsupported(format!("point dimension {m}")));
    }
    if let Some(p) = a.iter().chain(b).find(|p| p.len() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: p.len(),
        });
    }
    Ok(m)
}

/// `√(min_π (1/n) Σᵢ |aᵢ − b_{π(i)}|²)`. One-dimensional samples are matched
/// by sorting; higher dimensions go through [`wasserstein2_assignment`].
pub fn wasserstein2_exact(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    let m = check(a, b)?;
    if m == 1 {
        let mut xs: Vec<f64> = a.iter().map(|p| p[0]).collect();
        let mut ys: Vec<f64> = b.iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        let cost: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - y).powi(2)).sum();
        return Ok((cost / xs.len() as f64).sqrt());
    }
    wasserstein2_assignment(a, b)
}

/// Same distance through the optimal assignment, any supported dimension.
pub fn wasserstein2_assignment(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    check(a, b)?;
    let n = a.len();
    let cost: Vec<f64> = a
        .iter()
        .flat_map(|p| {
            b.iter()
                .map(move |q| p.iter().zip(q).map(|(x, y)| (x - y).powi(2)).sum())
        })
        .collect();
    let (total, _) = assignment_cost(n, &cost);
    Ok((total.max(0.0) / n as f64).sqrt())
}

/// Minimum-cost perfect matching of a dense `n×n` row-major cost matrix by
/// the shortest-augmenting-path Hungarian method, `O(n³)`. Returns the cost
/// and `assign[row] = column`.
pub fn assignment_cost(n: usize, cost: &[f64]) -> (f64, Vec<usize>) {
    assert_eq!(cost.len(), n * n, "cost matrix must be n×n");
    // 1-based potentials; column 0 is a virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[row_of[j] - 1] = j - 1;
    }
    let total = assign
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .sum();
    (total, assign)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_cases() {
        let a: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 * 0.3, -(i as f64)]).collect();
        assert_eq!(wasserstein2_exact(&a, &a).unwrap(), 0.0);

        let zeros = vec![vec![0.0]; 10];
        let ones = vec![vec![1.0]; 10];
        assert_eq!(wasserstein2_exact(&zeros, &ones).unwrap(), 1.0);

        let t = [0.3, -0.4];
        let b: Vec<Vec<f64>> = a.iter().map(|p| vec![p[0] + t[0], p[1] + t[1]]).collect();
        assert!((wasserstein2_exact(&a, &b).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn argument_validation() {
        let a = vec![vec![0.0, 1.0]; 3];
        assert!(wasserstein2_exact(&a, &a[..2]).is_err());
        let odd = vec![vec![0.0; 3]; 3];
        assert!(wasserstein2_exact(&odd, &odd).is_err());
        let big = vec![vec![0.0]; MAX_ASSIGNMENT_SIZE + 1];
        assert!(wasserstein2_exact(&big, &big).is_err());
    }

    #[test]
    fn hungarian_on_known_matrix() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let (total, assign) = assignment_cost(3, &cost);
        assert_eq!(total, 5.0);
        assert_eq!(assign, vec![1, 0, 2]);
    }
}
