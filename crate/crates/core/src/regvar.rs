//! Numerical diagnostics for regularly and slowly varying functions.
//!
//! Limits at infinity are read off a tail window of the supplied grid; trend
//! verdicts use the normalised Mann-Kendall statistic from [`crate::stats`].

use crate::quadrature::{log_integrate_offset, QuadOptions};
use crate::stats::{linear_fit, mann_kendall, median, tail_window_start, trend, Trend};
use crate::{Error, Result};

/// Default probe factors.
pub const DEFAULT_LAMBDAS: [f64; 3] = [2.0, 5.0, 10.0];

/// Spread of the index estimates below which a function counts as
/// regularly varying.
pub const RV_SPREAD: f64 = 0.1;

/// Largest `d log(ratio) / d log log x` on the tail window for which a
/// remainder ratio still counts as bounded.
pub const BOUNDED_GROWTH: f64 = 0.25;

/// Mann-Kendall threshold used for trend verdicts.
pub const TREND_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RvVerdict {
    RegularlyVarying,
    SlowlyVarying,
    SlowlyVaryingWithRemainder,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RVDiagnostics {
    pub index_hat: f64,
    pub lambda_probes: Vec<f64>,
    /// Largest remainder ratio over the whole grid.
    pub max_remainder_ratio: f64,
    /// Largest remainder ratio over the tail window.
    pub fitted_constant: f64,
    /// Spread (max - min) of the index estimates on the tail window.
    pub spread: f64,
    /// Finite-difference `x f'(x) / f(x)` at the last grid point.
    pub smooth_index: f64,
    pub verdict: RvVerdict,
}

fn log_eval(f: &dyn Fn(f64) -> f64, x: f64) -> Result<f64> {
    let v = f(x);
    if v > 0.0 && v.is_finite() {
        Ok(v.ln())
    } else {
        Err(Error::NonPositive { at: x, value: v })
    }
}

fn check_inputs(x_grid: &[f64], lambdas: &[f64], decades: f64) -> Result<()> {
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 1.0)) {
        return Err(Error::Domain("probe factors must all exceed 1".into()));
    }
    if x_grid.len() < 6 {
        return Err(Error::InsufficientGrid(format!(
            "{} grid points, at least 6 needed",
            x_grid.len()
        )));
    }
    if x_grid.windows(2).any(|w| !(w[0] > 0.0 && w[1] > w[0])) {
        return Err(Error::Domain("grid must be positive and increasing".into()));
    }
    let span = (x_grid[x_grid.len() - 1] / x_grid[0]).log10();
    if span < decades {
        return Err(Error::InsufficientGrid(format!(
            "grid spans {span:.2} decades, at least {decades} needed"
        )));
    }
    Ok(())
}

// d log f / d log x by a central difference in log x
fn smooth_index(f: &dyn Fn(f64) -> f64, x: f64) -> Result<f64> {
    let u = x.ln();
    let h = 1e-4 * u.abs().max(1.0);
    let up = log_eval(f, (u + h).exp())?;
    let dn = log_eval(f, (u - h).exp())?;
    Ok((up - dn) / (2.0 * h))
}

// per grid point, the index estimates log(f(lx)/f(x))/log l for every probe
fn index_rows(f: &dyn Fn(f64) -> f64, x_grid: &[f64], lambdas: &[f64]) -> Result<Vec<Vec<f64>>> {
    x_grid
        .iter()
        .map(|&x| {
            let fx = log_eval(f, x)?;
            lambdas
                .iter()
                .map(|&l| Ok((log_eval(f, l * x)? - fx) / l.ln()))
                .collect()
        })
        .collect()
}

/// Estimates the index of regular variation as the median, over the tail
/// window and all probes, of `log(f(lx)/f(x)) / log l`.
pub fn rv_index_estimate(f: &dyn Fn(f64) -> f64, x_grid: &[f64], lambdas: &[f64]) -> Result<RVDiagnostics> {
    check_inputs(x_grid, lambdas, 3.0)?;
    let rows = index_rows(f, x_grid, lambdas)?;
    let start = tail_window_start(x_grid.len());
    let window: Vec<f64> = rows[start..].iter().flatten().copied().collect();
    let index_hat = median(&window).expect("window is non-empty");
    let spread = window.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - window.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    // remainder against the fitted power
    let mut all = 0.0f64;
    let mut tail = 0.0f64;
    for (i, row) in rows.iter().enumerate() {
        for (est, &l) in row.iter().zip(lambdas) {
            let r = (((est - index_hat) * l.ln()).exp() - 1.0).abs();
            all = all.max(r);
            if i >= start {
                tail = tail.max(r);
            }
        }
    }
    let verdict = if spread < RV_SPREAD {
        if index_hat.abs() < RV_SPREAD {
            RvVerdict::SlowlyVarying
        } else {
            RvVerdict::RegularlyVarying
        }
    } else {
        RvVerdict::Inconclusive
    };
    Ok(RVDiagnostics {
        index_hat,
        lambda_probes: lambdas.to_vec(),
        max_remainder_ratio: all,
        fitted_constant: tail,
        spread,
        smooth_index: smooth_index(f, x_grid[x_grid.len() - 1])?,
        verdict,
    })
}

/// Checks `|l(lx)/l(x) - 1| = O(g(x))`. The ratio counts as bounded when its
/// log-growth against `log log x` over the tail window stays below
/// [`BOUNDED_GROWTH`].
pub fn svr_check(
    l: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
    x_grid: &[f64],
    lambdas: &[f64],
) -> Result<RVDiagnostics> {
    check_inputs(x_grid, lambdas, 1.0)?;
    let rows = index_rows(l, x_grid, lambdas)?;
    let mut ratios = Vec::with_capacity(x_grid.len());
    for (&x, row) in x_grid.iter().zip(&rows) {
        let gx = log_eval(g, x)?.exp();
        let r = row
            .iter()
            .zip(lambdas)
            .map(|(est, l)| (est * l.ln()).exp_m1().abs() / gx)
            .fold(0.0, f64::max);
        ratios.push(r);
    }
    let start = tail_window_start(x_grid.len());
    let window: Vec<f64> = rows[start..].iter().flatten().copied().collect();
    let index_hat = median(&window).expect("window is non-empty");
    let spread = window.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - window.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let max_remainder_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let fitted_constant = ratios[start..].iter().copied().fold(0.0, f64::max);

    let bounded = if fitted_constant == 0.0 {
        true
    } else {
        let pts: Vec<(f64, f64)> = x_grid[start..]
            .iter()
            .zip(&ratios[start..])
            .filter(|(x, r)| **r > 0.0 && x.ln() > 1.0)
            .map(|(x, r)| (x.ln().ln(), r.ln()))
            .collect();
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        match linear_fit(&xs, &ys) {
            Some(fit) => fit.slope < BOUNDED_GROWTH,
            None => false,
        }
    };
    let verdict = if bounded {
        RvVerdict::SlowlyVaryingWithRemainder
    } else if index_hat.abs() < RV_SPREAD && spread < RV_SPREAD {
        RvVerdict::SlowlyVarying
    } else {
        RvVerdict::Inconclusive
    };
    Ok(RVDiagnostics {
        index_hat,
        lambda_probes: lambdas.to_vec(),
        max_remainder_ratio,
        fitted_constant,
        spread,
        smooth_index: smooth_index(l, x_grid[x_grid.len() - 1])?,
        verdict,
    })
}

/// Ratios at each grid point and their expected limit.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub points: Vec<f64>,
    pub ratios: Vec<f64>,
    pub target: f64,
    /// Trend of `|ratio - target|` along the grid.
    pub trend: Trend,
}

impl RatioReport {
    /// `|ratio - target|` at the last point.
    pub fn last_deviation(&self) -> f64 {
        (self.ratios[self.ratios.len() - 1] - self.target).abs()
    }
}

fn report(points: &[f64], ratios: Vec<f64>, target: f64) -> RatioReport {
    let dev: Vec<f64> = ratios.iter().map(|r| (r - target).abs()).collect();
    RatioReport {
        points: points.to_vec(),
        trend: trend(&dev, TREND_THRESHOLD),
        ratios,
        target,
    }
}

fn quad_opts() -> QuadOptions {
    QuadOptions::with_rel_tol(1e-12)
}

/// `-log(int_K^inf e^{-f(y)} dy) / f(K)` at each `K`; the limit is 1 for
/// regularly varying `f` of positive index.
pub fn bingham_check(f: &dyn Fn(f64) -> f64, alpha_hint: f64, k_grid: &[f64]) -> Result<RatioReport> {
    if !(alpha_hint > 0.0) {
        return Err(Error::Domain(format!("index must be positive, got {alpha_hint}")));
    }
    let mut ratios = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        let fk = f(k);
        let scale = k.abs().max(1.0);
        let r = log_integrate_offset(
            |s| {
                let y = k + s * scale;
                if y.is_finite() { -f(y) } else { f64::NEG_INFINITY }
            },
            &[],
            quad_opts(),
        )?;
        ratios.push(-(r.log_value + scale.ln()) / fk);
    }
    Ok(report(k_grid, ratios, 1.0))
}

/// `x^{alpha+1} l(x) / int_x^inf t^alpha l(t) dt` at each grid point; the
/// limit is `-alpha - 1`.
pub fn karamata_check(l: &dyn Fn(f64) -> f64, alpha: f64, x_grid: &[f64]) -> Result<RatioReport> {
    if !(alpha < -1.0) {
        return Err(Error::Domain(format!("Karamata index must be below -1, got {alpha}")));
    }
    let mut ratios = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let u = x.ln();
        let lx = log_eval(l, x)?;
        // substitute t = e^{u + s}
        let r = log_integrate_offset(
            |s| {
                let t = (u + s).exp();
                if !t.is_finite() {
                    return f64::NEG_INFINITY;
                }
                let v = l(t);
                if v > 0.0 { (alpha + 1.0) * (u + s) + v.ln() } else { f64::NAN }
            },
            &[],
            quad_opts(),
        )?;
        ratios.push(((alpha + 1.0) * u + lx - r.log_value).exp());
    }
    Ok(report(x_grid, ratios, -alpha - 1.0))
}

/// Which asymptotic relation to test.
pub enum AsymMode<'a> {
    /// `a1 f1 <= f2 <= a2 f1` eventually.
    Comparable,
    /// `f1 / f2 -> 1`.
    Equivalent,
    /// `f1 / f2 - 1 = O(rho)`.
    BigO(&'a dyn Fn(f64) -> f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymVerdict {
    pub holds: bool,
    /// Bounds on `f2 / f1` over the tail window.
    pub alpha1: f64,
    pub alpha2: f64,
    /// Fitted constant in `O(rho)` mode.
    pub constant: Option<f64>,
    pub trend: Trend,
}

/// Tolerance on `|f1/f2 - 1|` at the end of the grid in equivalence mode.
pub const EQUIV_TOL: f64 = 0.05;

/// Checks an asymptotic relation between two positive functions on the tail
/// window of `grid`.
pub fn asym_relation_check(
    f1: &dyn Fn(f64) -> f64,
    f2: &dyn Fn(f64) -> f64,
    mode: AsymMode<'_>,
    grid: &[f64],
) -> Result<AsymVerdict> {
    if grid.len() < 3 {
        return Err(Error::InsufficientGrid("at least 3 points needed".into()));
    }
    let start = tail_window_start(grid.len());
    let mut q = Vec::new();
    for &y in &grid[start..] {
        q.push((log_eval(f2, y)? - log_eval(f1, y)?).exp());
    }
    let alpha1 = q.iter().copied().fold(f64::INFINITY, f64::min);
    let alpha2 = q.iter().copied().fold(0.0, f64::max);
    let dev: Vec<f64> = q.iter().map(|r| (1.0 / r - 1.0).abs()).collect();
    let tr = trend(&dev, TREND_THRESHOLD);
    let (holds, constant) = match mode {
        AsymMode::Comparable => (alpha1 > 0.0 && alpha2.is_finite(), None),
        AsymMode::Equivalent => {
            let last = dev[dev.len() - 1];
            (last < EQUIV_TOL && tr != Trend::Increasing, None)
        }
        AsymMode::BigO(rho) => {
            let mut scaled = Vec::with_capacity(dev.len());
            for (d, &y) in dev.iter().zip(&grid[start..]) {
                scaled.push(d / log_eval(rho, y)?.exp());
            }
            let c = scaled.iter().copied().fold(0.0, f64::max);
            // bounded unless the scaled deviation keeps rising
            (c.is_finite() && mann_kendall(&scaled) < 0.9 || c == 0.0, Some(c))
        }
    };
    Ok(AsymVerdict {
        holds,
        alpha1,
        alpha2,
        constant,
        trend: tr,
    })
}
