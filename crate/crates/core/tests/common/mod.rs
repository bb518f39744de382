#![allow(dead_code)]

/// Lag-`t` products `(x_p - mean)(x_{p+t} - mean)`.
pub fn lag_products(values: &[f64], t: usize) -> Vec<f64> {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values[..values.len() - t]
        .iter()
        .zip(&values[t..])
        .map(|(a, b)| (a - mean) * (b - mean))
        .collect()
}

/// Standard error of the mean of a serially correlated series by
/// non-overlapping batch means.
pub fn batch_means_se(series: &[f64], batches: usize) -> f64 {
    let size = series.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| series[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

/// Number of eigenvalues of the symmetric `a` strictly below `x`, from the
/// signs of the pivots of an unpivoted LDL^T factorization of `a - x I`
/// (Sylvester's law of inertia).
pub fn count_below(a: &[Vec<f64>], x: f64) -> usize {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= x;
    }
    let mut negatives = 0;
    for k in 0..n {
        let mut pivot = m[k][k];
        if pivot == 0.0 {
            pivot = -1e-300;
        }
        if pivot < 0.0 {
            negatives += 1;
        }
        for i in k + 1..n {
            let f = m[i][k] / pivot;
            for j in k + 1..n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    negatives
}

/// Eigenvalues by bisection on the inertia count, ascending.
pub fn bisection_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let bound: f64 = a
        .iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;
    (0..n)
        .map(|i| {
            // smallest x with count_below(x) > i is the (i+1)-th eigenvalue
            let (mut lo, mut hi) = (-bound, bound);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if count_below(a, mid) > i {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo < 1e-13 {
                    break;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// `(k - 1)!!` for even `k`.
pub fn double_factorial_odd(k: u64) -> u64 {
    (1..k).step_by(2).product()
}
