//! Summary statistics, log-log slope fits and bootstrap intervals.

use rand::Rng;
use varifold_core::sampling::stream_rng;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n − 1` denominator); 0 for one value.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn std_err(xs: &[f64]) -> f64 {
    std_dev(xs) / (xs.len() as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than
/// two points or any nonpositive value.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() || x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

/// 95% percentile interval of the log-log slope of `statistic`, resampling
/// trials with replacement independently at each grid point.
pub fn bootstrap_slope_ci(
    x: &[f64],
    samples: &[Vec<f64>],
    statistic: fn(&[f64]) -> f64,
    resamples: usize,
    seed: u64,
) -> Option<(f64, f64)> {
    log_log_slope(x, &samples.iter().map(|s| statistic(s)).collect::<Vec<_>>())?;
    let mut rng = stream_rng(seed, u64::MAX);
    let mut slopes = Vec::with_capacity(resamples);
    let mut stat = vec![0.0; samples.len()];
    let mut draw = Vec::new();
    for _ in 0..resamples {
        for (m, s) in stat.iter_mut().zip(samples) {
            draw.clear();
            draw.extend((0..s.len()).map(|_| s[rng.random_range(0..s.len())]));
            *m = statistic(&draw);
        }
        if let Some(slope) = log_log_slope(x, &stat) {
            slopes.push(slope);
        }
    }
    if slopes.is_empty() {
        return None;
    }
    slopes.sort_by(f64::total_cmp);
    let at = |q: f64| slopes[((q * (slopes.len() - 1) as f64).round() as usize).min(slopes.len() - 1)];
    Some((at(0.025), at(0.975)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        assert!((log_log_slope(&x, &y).unwrap() + 0.5).abs() < 1e-12);
        assert!(log_log_slope(&x[..1], &y[..1]).is_none());
        assert!(log_log_slope(&x, &[1.0, 0.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn summaries() {
        let xs = [1.0, 2.0, 3.0, 10.0];
        assert_eq!(mean(&xs), 4.0);
        assert_eq!(median(&xs), 2.5);
        assert!((std_dev(&[2.0, 4.0]) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bootstrap_brackets_truth() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let samples: Vec<Vec<f64>> =
            x.iter().map(|v: &f64| (0..20).map(|k| v.powf(-1.0) * (1.0 + 0.01 * (k as f64 - 9.5))).collect()).collect();
        let (lo, hi) = bootstrap_slope_ci(&x, &samples, mean, 500, 3).unwrap();
        assert!(lo <= -1.0 && -1.0 <= hi && hi - lo < 0.05);
    }
}
