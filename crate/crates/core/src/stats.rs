//! Pointwise moments of curve collections.

/// Pointwise mean and sample standard deviation (N−1 divisor) of `rows`.
///
/// The mean is accumulated relative to the first row, so identical rows give
/// an exactly zero deviation.
pub(crate) fn mean_std(rows: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let mean = mean(rows);
    let len = mean.len();
    let mut var = vec![0.0; len];
    for row in rows {
        for ((v, x), m) in var.iter_mut().zip(row.iter()).zip(&mean) {
            let d = x - m;
            *v += d * d;
        }
    }
    let denom = (rows.len().max(2) - 1) as f64;
    let std = var.into_iter().map(|v| (v / denom).sqrt()).collect();
    (mean, std)
}

pub(crate) fn mean(rows: &[&[f64]]) -> Vec<f64> {
    let first = rows[0];
    let mut acc = vec![0.0; first.len()];
    for row in &rows[1..] {
        for ((a, x), x0) in acc.iter_mut().zip(row.iter()).zip(first) {
            *a += x - x0;
        }
    }
    let n = rows.len() as f64;
    acc.iter().zip(first).map(|(a, x0)| x0 + a / n).collect()
}

/// Mean and sample standard deviation of scalars; the std of a single value
/// is zero.
pub(crate) fn scalar_mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let first = values[0];
    let mean = first + values.iter().map(|v| v - first).sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// `max_t |x(t) − center(t)| / scale(t)`.
pub(crate) fn max_standardized_deviation(x: &[f64], center: &[f64], inv_scale: &[f64]) -> f64 {
    x.iter().zip(center).zip(inv_scale).map(|((x, c), s)| (x - c).abs() * s).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_rows_have_exactly_zero_spread() {
        let row = [0.1, 0.7, -1.3, 1e-3];
        let rows = [&row[..], &row[..], &row[..]];
        let (m, s) = mean_std(&rows);
        assert_eq!(m, row);
        assert!(s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_rows() {
        let a = [1.0, 2.0];
        let b = [3.0, 6.0];
        let (m, s) = mean_std(&[&a, &b]);
        assert_eq!(m, vec![2.0, 4.0]);
        assert!((s[0] - 2f64.sqrt()).abs() < 1e-15);
        assert!((s[1] - 8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn scalar_moments() {
        let (m, s) = scalar_mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(scalar_mean_std(&[7.0]), (7.0, 0.0));
    }
}
