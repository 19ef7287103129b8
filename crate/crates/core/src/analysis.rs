//! Least-squares fits and cross-run statistics.

use crate::error::ExperimentError;

/// Ordinary least-squares line with Pearson correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub correlation_r: f64,
}

/// Fits `y = slope * x + intercept`.
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> Result<RegressionResult, ExperimentError> {
    if xs.len() != ys.len() {
        return Err(ExperimentError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(ExperimentError::TooFewPoints(n));
    }
    let nf = n as f64;
    let mean_x = xs.iter().sum::<f64>() / nf;
    let mean_y = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if !(sxx > 0.0) {
        return Err(ExperimentError::DegenerateVariance);
    }
    let slope = sxy / sxx;
    let correlation_r = if syy > 0.0 {
        (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    Ok(RegressionResult {
        slope,
        intercept: mean_y - slope * mean_x,
        correlation_r,
    })
}

/// `offset + amplitude * sin(2π f t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineFit {
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
}

/// Three-parameter least-squares sine fit at a known frequency.
pub fn fit_sine(time: &[f64], ys: &[f64], frequency_hz: f64) -> Option<SineFit> {
    if time.len() != ys.len() || time.len() < 3 {
        return None;
    }
    let w = 2.0 * std::f64::consts::PI * frequency_hz;
    // Normal equations for the basis [sin, cos, 1].
    let mut a = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for (&t, &y) in time.iter().zip(ys) {
        let basis = [(w * t).sin(), (w * t).cos(), 1.0];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += basis[i] * basis[j];
            }
            b[i] += basis[i] * y;
        }
    }
    let c = solve3(a, b)?;
    Some(SineFit {
        amplitude: c[0].hypot(c[1]),
        phase: c[1].atan2(c[0]),
        offset: c[2],
    })
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Pointwise mean and sample standard deviation across aligned series.
///
/// Deviations are accumulated relative to the first series, so identical
/// inputs give a mean equal to that input and a standard deviation of
/// exactly zero.
pub fn pointwise_mean_std(series: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let Some(first) = series.first() else {
        return (Vec::new(), Vec::new());
    };
    let n = series.len() as f64;
    let len = first.len();
    let mut mean = Vec::with_capacity(len);
    let mut std = Vec::with_capacity(len);
    for i in 0..len {
        let shift = first[i];
        let (mut s1, mut s2) = (0.0, 0.0);
        for s in series {
            let d = s[i] - shift;
            s1 += d;
            s2 += d * d;
        }
        mean.push(shift + s1 / n);
        if series.len() < 2 {
            std.push(0.0);
        } else {
            let var = ((s2 - s1 * s1 / n) / (n - 1.0)).max(0.0);
            std.push(var.sqrt());
        }
    }
    (mean, std)
}

/// Mean and sample standard deviation of a set of scalars.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let columns: Vec<[f64; 1]> = values.iter().map(|&v| [v]).collect();
    let refs: Vec<&[f64]> = columns.iter().map(|c| c.as_slice()).collect();
    let (m, s) = pointwise_mean_std(&refs);
    (
        m.first().copied().unwrap_or(f64::NAN),
        s.first().copied().unwrap_or(0.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_line() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let r = linear_regression(&xs, &ys).unwrap();
        assert!((r.slope - 2.0).abs() < 1e-12);
        assert!((r.intercept - 1.0).abs() < 1e-12);
        assert!((r.correlation_r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_slope_gives_negative_r() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -3.0 * x).collect();
        let r = linear_regression(&xs, &ys).unwrap();
        assert!((r.slope + 3.0).abs() < 1e-12);
        assert!((r.correlation_r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_point_closed_form() {
        let r = linear_regression(&[0.0, 1.0, 2.0], &[0.0, 1.0, 1.0]).unwrap();
        assert!((r.slope - 0.5).abs() < 1e-15);
        assert!((r.intercept - 1.0 / 6.0).abs() < 1e-15);
        assert!((r.correlation_r - 0.75f64.sqrt()).abs() < 1e-12);
        assert!((r.correlation_r - 0.866).abs() < 1e-3);
    }

    #[test]
    fn regression_errors() {
        assert_eq!(
            linear_regression(&[1.0, 2.0], &[1.0, 2.0]),
            Err(ExperimentError::TooFewPoints(2))
        );
        assert_eq!(
            linear_regression(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(ExperimentError::LengthMismatch(3, 2))
        );
        assert_eq!(
            linear_regression(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(ExperimentError::DegenerateVariance)
        );
    }

    #[test]
    fn sine_fit_recovers_parameters() {
        let t: Vec<f64> = (0..2000).map(|i| i as f64 * 1e-3).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|&t| 3.0 + 7.5 * (2.0 * std::f64::consts::PI * 2.0 * t + 0.4).sin())
            .collect();
        let fit = fit_sine(&t, &y, 2.0).unwrap();
        assert!((fit.amplitude - 7.5).abs() < 1e-9);
        assert!((fit.phase - 0.4).abs() < 1e-9);
        assert!((fit.offset - 3.0).abs() < 1e-9);
    }

    #[test]
    fn identical_series_have_exactly_zero_std() {
        let a = [0.1, 0.7, -3.3, 1e-9];
        let (m, s) = pointwise_mean_std(&[&a, &a, &a, &a, &a, &a, &a, &a, &a, &a]);
        assert_eq!(m, a.to_vec());
        assert!(s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pointwise_std_matches_textbook() {
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert!((m - 5.0).abs() < 1e-12);
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn regression_is_permutation_invariant(pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40),
                                               seed in any::<u64>()) {
            let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let Ok(a) = linear_regression(&xs, &ys) else { return Ok(()) };
            let mut idx: Vec<usize> = (0..xs.len()).collect();
            // Deterministic shuffle from the seed.
            let mut s = seed | 1;
            for i in (1..idx.len()).rev() {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                idx.swap(i, (s % (i as u64 + 1)) as usize);
            }
            let px: Vec<f64> = idx.iter().map(|&i| xs[i]).collect();
            let py: Vec<f64> = idx.iter().map(|&i| ys[i]).collect();
            let b = linear_regression(&px, &py).unwrap();
            let scale = 1.0 + a.slope.abs();
            prop_assert!((a.slope - b.slope).abs() <= 1e-9 * scale);
            prop_assert!((a.intercept - b.intercept).abs() <= 1e-9 * (1.0 + a.intercept.abs()) * scale);
            prop_assert!((a.correlation_r - b.correlation_r).abs() <= 1e-9);
            prop_assert!(a.correlation_r.abs() <= 1.0);
        }
    }
}
