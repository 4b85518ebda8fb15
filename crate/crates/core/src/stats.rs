//! Small statistics helpers shared by the finite-data limit protocols.

/// Ordinary least-squares fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    /// Largest absolute residual.
    pub max_residual: f64,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Least-squares line through `(x, y)`. `None` when fewer than two points
/// or when `x` has zero variance.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for i in 0..n {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if sxx <= f64::EPSILON * f64::EPSILON * nf * (1.0 + mx * mx) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = (0..n)
        .map(|i| (y[i] - intercept - slope * x[i]).abs())
        .fold(0.0, f64::max);
    Some(LinearFit {
        intercept,
        slope,
        max_residual,
    })
}

/// Median of a slice (NaNs excluded). `None` on empty input.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Direction of a monotone trend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Increasing,
    Decreasing,
    None,
}

/// Mann-Kendall sign statistic `S = sum_{i<j} sign(v_j - v_i)`, normalised
/// to `[-1, 1]` by the number of pairs.
pub fn mann_kendall(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let d = values[j] - values[i];
            if d > 0.0 {
                s += 1;
            } else if d < 0.0 {
                s -= 1;
            }
        }
    }
    s as f64 / (n * (n - 1) / 2) as f64
}

/// Trend verdict from the normalised Mann-Kendall statistic. `threshold`
/// is the minimum `|S|` accepted as a trend; 0.5 means at least three
/// quarters of all pairs agree on the direction.
pub fn trend(values: &[f64], threshold: f64) -> Trend {
    let s = mann_kendall(values);
    if s >= threshold {
        Trend::Increasing
    } else if s <= -threshold {
        Trend::Decreasing
    } else {
        Trend::None
    }
}

/// Index of the first element of the trailing third of a sequence of
/// length `n` (at least three points kept when possible).
pub fn tail_window_start(n: usize) -> usize {
    let keep = (n / 3).max(3).min(n);
    n - keep
}
