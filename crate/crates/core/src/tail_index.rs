//! Distributions given by a density, their call/put prices, and tail-index
//! estimators behind the moment formulas.
//!
//! Densities are described by `u -> log D(e^u)`. All integrals run in
//! `u = log x` with log-domain quadrature, so tails such as `x^-5` at
//! `x = e^200` are handled without underflow.

use std::sync::Arc;

use rayon::prelude::*;

use crate::bs::MarketFrame;
use crate::curve::PriceCurve;
use crate::quadrature::{log_integrate, log_integrate_offset, QuadOptions};
use crate::special::{gauss_legendre_20, log_add_exp};
use crate::stats::{linear_fit, tail_window_start, trend, Trend};
use crate::{Error, Result};

const INNER: f64 = 1e-12;
const OUTER: f64 = 1e-10;

type LogDensity = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Closed form of the survival function far in the right tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailForm {
    /// `log P[X > y] = log_scale - alpha log y` for `y >= from`.
    Power { from: f64, log_scale: f64, alpha: f64 },
}

/// Probability density of a non-negative terminal price.
#[derive(Clone)]
pub struct DistributionSpec {
    log_density: LogDensity,
    pub support_low: f64,
    pub support_high: f64,
    pub tail: Option<TailForm>,
    /// Breakpoints in `u = log x` where the density has structure.
    pub hints: Vec<f64>,
}

impl std::fmt::Debug for DistributionSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DistributionSpec")
            .field("support_low", &self.support_low)
            .field("support_high", &self.support_high)
            .field("tail", &self.tail)
            .finish_non_exhaustive()
    }
}

impl DistributionSpec {
    /// Density given as `u -> log D(e^u)` on `[support_low, support_high]`.
    pub fn new(
        log_density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support_low: f64,
        support_high: f64,
    ) -> Result<Self> {
        if !(support_low >= 0.0 && support_high > support_low) {
            return Err(Error::Domain(format!(
                "invalid support [{support_low}, {support_high}]"
            )));
        }
        Ok(Self {
            log_density: Arc::new(log_density),
            support_low,
            support_high,
            tail: None,
            hints: Vec::new(),
        })
    }

    pub fn with_hints(mut self, hints: Vec<f64>) -> Self {
        self.hints = hints;
        self
    }

    pub fn with_tail(mut self, tail: TailForm) -> Self {
        self.tail = Some(tail);
        self
    }

    /// Drops the closed-form tail so that every value comes from quadrature.
    pub fn without_tail(mut self) -> Self {
        self.tail = None;
        self
    }

    /// Pareto density `(beta - 1) x^-beta` on `[1, inf)`.
    pub fn pareto(beta: f64) -> Result<Self> {
        if !(beta > 1.0) {
            return Err(Error::Domain(format!("Pareto exponent must exceed 1, got {beta}")));
        }
        let c = (beta - 1.0).ln();
        Ok(Self::new(move |u| c - beta * u, 1.0, f64::INFINITY)?
            .with_hints(vec![0.5, 1.0, 2.0, 4.0])
            .with_tail(TailForm::Power {
                from: 1.0,
                log_scale: 0.0,
                alpha: beta - 1.0,
            }))
    }

    /// Mean of [`DistributionSpec::pareto`], `(beta - 1)/(beta - 2)`.
    pub fn pareto_mean(beta: f64) -> f64 {
        (beta - 1.0) / (beta - 2.0)
    }

    /// Risk-neutral lognormal density of the Black-Scholes model.
    pub fn lognormal(frame: &MarketFrame, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Domain(format!("volatility must be positive, got {sigma}")));
        }
        let s = sigma * frame.t.sqrt();
        let mu = frame.x0.ln() + (frame.r - 0.5 * sigma * sigma) * frame.t;
        let norm = (s * (2.0 * std::f64::consts::PI).sqrt()).ln();
        let hints = (-12..=12).map(|j| mu + j as f64 * s).collect();
        Ok(Self::new(
            move |u| {
                let z = (u - mu) / s;
                -0.5 * z * z - norm - u
            },
            0.0,
            f64::INFINITY,
        )?
        .with_hints(hints))
    }

    /// `log D(e^u)`, `-inf` outside the support.
    pub fn log_density_at_log(&self, u: f64) -> f64 {
        if u < self.log_low() || u > self.log_high() {
            return f64::NEG_INFINITY;
        }
        (self.log_density)(u)
    }

    pub fn density(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        self.log_density_at_log(x.ln()).exp()
    }

    fn log_low(&self) -> f64 {
        self.support_low.ln()
    }

    fn log_high(&self) -> f64 {
        self.support_high.ln()
    }

    fn center(&self) -> f64 {
        let mut h = self.hints.clone();
        h.sort_by(|a, b| a.total_cmp(b));
        let c = if h.is_empty() { 0.0 } else { h[h.len() / 2] };
        c.clamp(self.log_low(), self.log_high())
    }
}

fn opts(rel: f64) -> QuadOptions {
    QuadOptions::with_rel_tol(rel)
}

/// `log int_a^b e^{g(a + s)} ds`, `b` possibly infinite; `g` is given as a
/// function of the offset from `a`.
fn int_up(hints: &[f64], a: f64, b: f64, g: impl Fn(f64) -> f64, rel: f64) -> Result<f64> {
    let h: Vec<f64> = hints.iter().map(|x| x - a).filter(|s| *s > 0.0).collect();
    let r = if b.is_finite() {
        log_integrate(g, 0.0, b - a, &h, opts(rel))?
    } else {
        log_integrate_offset(g, &h, opts(rel))?
    };
    Ok(r.log_value)
}

/// `log int_a^b e^{g(b - s)} ds`, `a` possibly `-inf`.
fn int_down(hints: &[f64], b: f64, a: f64, g: impl Fn(f64) -> f64, rel: f64) -> Result<f64> {
    let h: Vec<f64> = hints.iter().map(|x| b - x).filter(|s| *s > 0.0).collect();
    let r = if a.is_finite() {
        log_integrate(g, 0.0, b - a, &h, opts(rel))?
    } else {
        log_integrate_offset(g, &h, opts(rel))?
    };
    Ok(r.log_value)
}

/// `log int e^{g(u)} du` over the whole support.
fn int_whole(spec: &DistributionSpec, g: impl Fn(f64) -> f64 + Copy, rel: f64) -> Result<f64> {
    let (lo, hi) = (spec.log_low(), spec.log_high());
    if lo.is_finite() {
        return int_up(&spec.hints, lo, hi, |s| g(lo + s), rel);
    }
    if hi.is_finite() {
        return int_down(&spec.hints, hi, lo, |s| g(hi - s), rel);
    }
    let c = spec.center();
    let up = int_up(&spec.hints, c, hi, |s| g(c + s), rel)?;
    let down = int_down(&spec.hints, c, lo, |s| g(c - s), rel)?;
    Ok(log_add_exp(up, down))
}

/// `log P[X > e^u]`.
pub fn log_ccdf_at_log(spec: &DistributionSpec, u: f64) -> Result<f64> {
    ccdf_with(spec, u, INNER)
}

fn ccdf_with(spec: &DistributionSpec, u: f64, rel: f64) -> Result<f64> {
    if let Some(TailForm::Power { from, log_scale, alpha }) = spec.tail {
        if u >= from.ln() {
            return Ok(log_scale - alpha * u);
        }
    }
    let a = u.max(spec.log_low());
    let hi = spec.log_high();
    if a >= hi {
        return Ok(f64::NEG_INFINITY);
    }
    int_up(&spec.hints, a, hi, |s| spec.log_density_at_log(a + s) + a + s, rel)
}

/// `log P[X <= e^u]`.
pub fn log_cdf_at_log(spec: &DistributionSpec, u: f64) -> Result<f64> {
    let b = u.min(spec.log_high());
    let lo = spec.log_low();
    if b <= lo {
        return Ok(f64::NEG_INFINITY);
    }
    int_down(&spec.hints, b, lo, |s| spec.log_density_at_log(b - s) + b - s, INNER)
}

/// Survival function `P[X > y] = int_y^inf D(x) dx`.
pub fn ccdf_from_density(spec: &DistributionSpec, y: f64) -> Result<f64> {
    if !(y >= spec.support_low) {
        return Err(Error::Domain(format!(
            "y = {y} lies below the support edge {}",
            spec.support_low
        )));
    }
    Ok(log_ccdf_at_log(spec, y.ln())?.exp())
}

/// Distribution function `P[X <= y]`.
pub fn cdf_from_density(spec: &DistributionSpec, y: f64) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::Domain(format!("y must be non-negative, got {y}")));
    }
    Ok(log_cdf_at_log(spec, y.ln())?.exp())
}

/// Total mass of the density.
pub fn mass(spec: &DistributionSpec) -> Result<f64> {
    Ok(int_whole(spec, |u| spec.log_density_at_log(u) + u, INNER)?.exp())
}

/// Mean `int x D(x) dx`.
pub fn mean(spec: &DistributionSpec) -> Result<f64> {
    Ok(int_whole(spec, |u| spec.log_density_at_log(u) + 2.0 * u, INNER)?.exp())
}

fn check_strike(k: f64) -> Result<()> {
    if k >= 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("strike must be non-negative, got {k}")))
    }
}

/// `log` of the undiscounted `int_K^inf P[X > y] dy`.
fn log_call_integral_ccdf(spec: &DistributionSpec, k: f64) -> Result<f64> {
    let lk = k.ln();
    if let Some(TailForm::Power { from, log_scale, alpha }) = spec.tail {
        if k >= from {
            if alpha <= 1.0 {
                return Err(Error::NonIntegrable(format!(
                    "survival index {alpha} leaves the mean infinite"
                )));
            }
            return Ok(log_scale + (1.0 - alpha) * lk - (alpha - 1.0).ln());
        }
    }
    let a = lk.max(spec.log_low());
    let hi = spec.log_high();
    let tail = if a >= hi {
        f64::NEG_INFINITY
    } else {
        int_up(
            &spec.hints,
            a,
            hi,
            |s| ccdf_with(spec, a + s, INNER).unwrap_or(f64::NAN) + a + s,
            OUTER,
        )?
    };
    let below = if k < spec.support_low {
        (spec.support_low - k).ln()
    } else {
        f64::NEG_INFINITY
    };
    Ok(log_add_exp(below, tail))
}

/// `log` of the undiscounted `int_0^K P[X <= y] dy`.
fn log_put_integral_cdf(spec: &DistributionSpec, k: f64) -> Result<f64> {
    let b = k.ln().min(spec.log_high());
    let lo = spec.log_low();
    let body = if b <= lo {
        f64::NEG_INFINITY
    } else {
        int_down(
            &spec.hints,
            b,
            lo,
            |s| log_cdf_at_log(spec, b - s).unwrap_or(f64::NAN) + b - s,
            OUTER,
        )?
    };
    let above = if k > spec.support_high {
        (k - spec.support_high).ln()
    } else {
        f64::NEG_INFINITY
    };
    Ok(log_add_exp(body, above))
}

/// Log of `e^{-rT} int_K^inf P[X_T > y] dy`.
pub fn log_call_from_ccdf(frame: &MarketFrame, spec: &DistributionSpec, k: f64) -> Result<f64> {
    check_strike(k)?;
    if k == 0.0 {
        return Ok(mean(spec)?.ln() - frame.r * frame.t);
    }
    Ok(log_call_integral_ccdf(spec, k)? - frame.r * frame.t)
}

/// Call price `e^{-rT} int_K^inf P[X_T > y] dy`.
pub fn call_from_ccdf(frame: &MarketFrame, spec: &DistributionSpec, k: f64) -> Result<f64> {
    Ok(log_call_from_ccdf(frame, spec, k)?.exp())
}

/// Log of `e^{-rT} int_0^K P[X_T <= y] dy`.
pub fn log_put_from_cdf(frame: &MarketFrame, spec: &DistributionSpec, k: f64) -> Result<f64> {
    check_strike(k)?;
    if k == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(log_put_integral_cdf(spec, k)? - frame.r * frame.t)
}

/// Put price `e^{-rT} int_0^K P[X_T <= y] dy`.
pub fn put_from_cdf(frame: &MarketFrame, spec: &DistributionSpec, k: f64) -> Result<f64> {
    Ok(log_put_from_cdf(frame, spec, k)?.exp())
}

// log(e^{k+t} - e^k) for t >= 0
fn log_excess(k: f64, t: f64) -> f64 {
    if t < 30.0 {
        k + t.exp_m1().ln()
    } else {
        k + t + (-(-t).exp()).ln_1p()
    }
}

/// Log of `e^{-rT} E[(X - K)^+]` by direct payoff quadrature.
pub fn log_call_from_payoff(frame: &MarketFrame, spec: &DistributionSpec, k: f64) -> Result<f64> {
    check_strike(k)?;
    if k == 0.0 {
        return Ok(mean(spec)?.ln() - frame.r * frame.t);
    }
    let lk = k.ln();
    let a = lk.max(spec.log_low());
    let hi = spec.log_high();
    if a >= hi {
        return Ok(f64::NEG_INFINITY);
    }
    let d = a - lk;
    let v = int_up(
        &spec.hints,
        a,
        hi,
        |s| spec.log_density_at_log(a + s) + a + s + log_excess(lk, s + d),
        INNER,
    )?;
    Ok(v - frame.r * frame.t)
}

/// `e^{-rT} E[(X - K)^+]` by direct payoff quadrature.
pub fn call_from_payoff(frame: &MarketFrame, spec: &DistributionSpec, k: f64) -> Result<f64> {
    Ok(log_call_from_payoff(frame, spec, k)?.exp())
}

/// Log of `e^{-rT} E[(K - X)^+]` by direct payoff quadrature.
pub fn log_put_from_payoff(frame: &MarketFrame, spec: &DistributionSpec, k: f64) -> Result<f64> {
    check_strike(k)?;
    if k == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let lk = k.ln();
    let b = lk.min(spec.log_high());
    let lo = spec.log_low();
    if b <= lo {
        return Ok(f64::NEG_INFINITY);
    }
    let d = lk - b;
    let v = int_down(
        &spec.hints,
        b,
        lo,
        |s| spec.log_density_at_log(b - s) + b - s + lk + (-(-(s + d)).exp_m1()).ln(),
        INNER,
    )?;
    Ok(v - frame.r * frame.t)
}

/// Call or put curve priced by payoff quadrature against a density.
#[derive(Clone, Debug)]
pub struct SpecCurve {
    pub frame: MarketFrame,
    pub spec: DistributionSpec,
    pub kind: crate::bs::OptionKind,
}

impl SpecCurve {
    pub fn call(frame: MarketFrame, spec: DistributionSpec) -> Self {
        Self {
            frame,
            spec,
            kind: crate::bs::OptionKind::Call,
        }
    }

    pub fn put(frame: MarketFrame, spec: DistributionSpec) -> Self {
        Self {
            frame,
            spec,
            kind: crate::bs::OptionKind::Put,
        }
    }
}

impl PriceCurve for SpecCurve {
    fn log_price(&self, k: f64) -> Result<f64> {
        if !(k > 0.0) {
            return Err(Error::Domain(format!("strike must be positive, got {k}")));
        }
        match self.kind {
            crate::bs::OptionKind::Call => log_call_from_payoff(&self.frame, &self.spec, k),
            crate::bs::OptionKind::Put => log_put_from_payoff(&self.frame, &self.spec, k),
        }
    }
}

/// Threshold above which an index is reported as infinite.
pub const INFINITE_INDEX: f64 = 50.0;

const MOMENT_RESOLUTION: f64 = 0.05;
const MOMENT_WINDOWS: usize = 8;

/// Extrapolation diagnostics of a liminf estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeta {
    pub strikes: Vec<f64>,
    /// `log(1/price) / |log K|` per strike.
    pub ratios: Vec<f64>,
    pub window_start: usize,
    /// Intercept and slope of the fit of the ratio on `1/|log K|`.
    pub intercept: f64,
    pub slope: f64,
    /// Amount by which the estimate was lowered to lie under every window
    /// point of the fit.
    pub envelope_shift: f64,
}

/// Right-wing index estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct TailIndexReport {
    /// `liminf log(1/C) / log K`; `INFINITY` when flagged infinite.
    pub l_hat: f64,
    pub infinite: bool,
    /// Moment index from the divergence onset of `int y^p rho(y) dy`.
    pub p_tilde_hat: Option<f64>,
    /// Power-decay index of the call price.
    pub r_star_hat: f64,
    /// Power-decay index of the survival function (`rho = O(y^-(1+s))`).
    pub s_star_hat: Option<f64>,
    /// `sqrt(1 + l) - sqrt(l)`.
    pub lee_slope: f64,
    /// Pairwise absolute differences among the available estimates.
    pub deltas: Vec<(String, f64)>,
    pub grid_meta: GridMeta,
    pub caveat: &'static str,
}

/// Left-wing index estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct LeftIndexReport {
    /// `liminf log(1/P) / log(1/K)`; `INFINITY` when flagged infinite.
    pub m_hat: f64,
    pub infinite: bool,
    pub q_tilde_hat: Option<f64>,
    /// Power index of the put price as `K -> 0`.
    pub u_star_hat: f64,
    /// Power index of the distribution function as `y -> 0`.
    pub v_star_hat: Option<f64>,
    /// `sqrt(m) - sqrt(m - 1)`.
    pub lee_slope_left: f64,
    /// Differences among `q + 1`, `m`, `u*` and `v* + 1`.
    pub deltas: Vec<(String, f64)>,
    pub grid_meta: GridMeta,
    pub caveat: &'static str,
}

const CAVEAT: &str = "finite-grid liminf estimate; oscillating tails cannot be distinguished from their lower envelope";

struct Liminf {
    value: f64,
    infinite: bool,
    meta: GridMeta,
}

/// Lower-envelope extrapolation of `ratios` (against `1/|log K|`) to the
/// limit over the trailing third of the grid.
fn liminf_estimate(strikes: &[f64], log_abs: &[f64], ratios: Vec<f64>) -> Result<Liminf> {
    let start = tail_window_start(ratios.len());
    let x: Vec<f64> = log_abs[start..].iter().map(|l| 1.0 / l).collect();
    let y = &ratios[start..];
    let fit = linear_fit(&x, y)
        .ok_or_else(|| Error::InsufficientGrid("tail window has no spread in log K".into()))?;
    let shift = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| fit.predict(xi) - yi)
        .fold(0.0, f64::max);
    let mut value = (fit.intercept - shift).max(0.0);
    let last = *y.last().unwrap();
    let infinite = (last > INFINITE_INDEX && trend(y, 0.5) == Trend::Increasing)
        || fit.intercept > INFINITE_INDEX;
    if infinite {
        value = f64::INFINITY;
    }
    Ok(Liminf {
        value,
        infinite,
        meta: GridMeta {
            strikes: strikes.to_vec(),
            ratios,
            window_start: start,
            intercept: fit.intercept,
            slope: fit.slope,
            envelope_shift: shift,
        },
    })
}

fn check_grid(log_abs: &[f64]) -> Result<()> {
    if log_abs.len() < 6 {
        return Err(Error::InsufficientGrid(format!(
            "need at least 6 strikes, got {}",
            log_abs.len()
        )));
    }
    let span = log_abs[log_abs.len() - 1] - log_abs[0];
    if !(span >= 4.0 * std::f64::consts::LN_10 - 1e-9) {
        return Err(Error::InsufficientGrid(format!(
            "strikes span {:.2} decades, at least 4 needed",
            span / std::f64::consts::LN_10
        )));
    }
    if log_abs.windows(2).any(|w| !(w[1] > w[0])) || !(log_abs[0] > 0.0) {
        return Err(Error::InsufficientGrid(
            "strikes must move monotonically away from 1".into(),
        ));
    }
    Ok(())
}

fn log_prices(c: &dyn PriceCurve, grid: &[f64]) -> Result<Vec<f64>> {
    grid.par_iter()
        .map(|&k| {
            let lp = c.log_price(k)?;
            if lp.is_nan() || lp == f64::NEG_INFINITY {
                Err(Error::NonPositive { at: k, value: lp.exp() })
            } else {
                Ok(lp)
            }
        })
        .collect()
}

fn tail_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let start = tail_window_start(x.len());
    linear_fit(&x[start..], &y[start..])
        .map(|f| f.slope)
        .ok_or_else(|| Error::InsufficientGrid("tail window has no spread".into()))
}

fn pairwise(names: &[&str], values: &[f64]) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            out.push((format!("{}-{}", names[i], names[j]), (values[i] - values[j]).abs()));
        }
    }
    out
}

/// Divergence onset of `int e^{p u} e^{w(u)} du` on windows marching away
/// along `u`: `log_w` holds `w` at Gauss-Legendre nodes of each window, and
/// `direction` is +1 (right tail) or -1 (left tail).
fn moment_onset(windows: &[(f64, f64)], log_w: &[Vec<f64>], direction: f64) -> f64 {
    let (nodes, weights) = gauss_legendre_20();
    let diverges = |p: f64| -> bool {
        let centers: Vec<f64> = windows.iter().map(|(a, b)| 0.5 * (a + b)).collect();
        let incs: Vec<f64> = windows
            .iter()
            .zip(log_w)
            .map(|(&(a, b), w)| {
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                let terms: Vec<f64> = nodes
                    .iter()
                    .zip(weights)
                    .zip(w)
                    .map(|((&t, &wt), &lw)| wt.ln() + half.ln() + direction * p * (mid + half * t) + lw)
                    .collect();
                terms.iter().copied().fold(f64::NEG_INFINITY, log_add_exp)
            })
            .collect();
        let dist: Vec<f64> = centers.iter().map(|c| direction * c).collect();
        match linear_fit(&dist, &incs) {
            Some(f) => f.slope >= 0.0,
            None => true,
        }
    };
    if diverges(0.0) {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = MOMENT_RESOLUTION;
    while !diverges(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 2.0 * INFINITE_INDEX {
            return f64::INFINITY;
        }
    }
    while hi - lo > MOMENT_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if diverges(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn onset_windows(u_from: f64, u_to: f64) -> Vec<(f64, f64)> {
    let h = (u_to - u_from) / MOMENT_WINDOWS as f64;
    (0..MOMENT_WINDOWS)
        .map(|j| {
            let a = u_from + h * j as f64;
            let b = a + h;
            if a <= b {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect()
}

fn window_values(windows: &[(f64, f64)], f: impl Fn(f64) -> Result<f64> + Sync) -> Result<Vec<Vec<f64>>> {
    let (nodes, _) = gauss_legendre_20();
    windows
        .par_iter()
        .map(|&(a, b)| {
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            nodes.iter().map(|t| f(mid + half * t)).collect()
        })
        .collect()
}

/// Right-tail index estimates from a call curve (and, optionally, the
/// density behind it).
pub fn estimate_right_index(
    _frame: &MarketFrame,
    c: &dyn PriceCurve,
    grid: &[f64],
    spec: Option<&DistributionSpec>,
) -> Result<TailIndexReport> {
    let log_k: Vec<f64> = grid.iter().map(|k| k.ln()).collect();
    check_grid(&log_k)?;
    let lp = log_prices(c, grid)?;
    let ratios: Vec<f64> = lp.iter().zip(&log_k).map(|(p, l)| -p / l).collect();
    let est = liminf_estimate(grid, &log_k, ratios)?;
    let l_hat = est.value;
    let lee_slope = if est.infinite {
        0.0
    } else {
        1.0 / ((1.0 + l_hat).sqrt() + l_hat.sqrt())
    };
    // C(K) ~ K^-r, discount factor drops out of the slope
    let r_star_hat = -tail_slope(&log_k, &lp)?;

    let (mut p_tilde_hat, mut s_star_hat) = (None, None);
    if let Some(spec) = spec {
        let lr: Vec<f64> = log_k
            .par_iter()
            .map(|&u| log_ccdf_at_log(spec, u))
            .collect::<Result<_>>()?;
        s_star_hat = Some(-tail_slope(&log_k, &lr)? - 1.0);
        let n = log_k.len();
        let windows = onset_windows(log_k[n / 2], log_k[n - 1]);
        // int y^p rho(y) dy = int e^{p u} e^{u + log rho(e^u)} du
        let w = window_values(&windows, |u| Ok(u + log_ccdf_at_log(spec, u)?))?;
        p_tilde_hat = Some(moment_onset(&windows, &w, 1.0));
    }
    let mut names = vec!["l"];
    let mut vals = vec![l_hat];
    if let Some(p) = p_tilde_hat {
        names.push("p");
        vals.push(p);
    }
    names.push("r*");
    vals.push(r_star_hat);
    if let Some(s) = s_star_hat {
        names.push("s*");
        vals.push(s);
    }
    Ok(TailIndexReport {
        l_hat,
        infinite: est.infinite,
        p_tilde_hat,
        r_star_hat,
        s_star_hat,
        lee_slope,
        deltas: if est.infinite { Vec::new() } else { pairwise(&names, &vals) },
        grid_meta: est.meta,
        caveat: CAVEAT,
    })
}

/// Left-tail index estimates from a put curve on strikes decreasing to 0.
pub fn estimate_left_index(
    _frame: &MarketFrame,
    p: &dyn PriceCurve,
    grid: &[f64],
    spec: Option<&DistributionSpec>,
) -> Result<LeftIndexReport> {
    let log_inv: Vec<f64> = grid.iter().map(|k| -k.ln()).collect();
    check_grid(&log_inv)?;
    let lp = log_prices(p, grid)?;
    if let Some(i) = (0..grid.len()).find(|&i| !(lp[i] < grid[i].ln())) {
        return Err(Error::Inconsistent(format!(
            "P(K) >= K at strike {:e}",
            grid[i]
        )));
    }
    let ratios: Vec<f64> = lp.iter().zip(&log_inv).map(|(p, l)| -p / l).collect();
    let est = liminf_estimate(grid, &log_inv, ratios)?;
    let m_hat = est.value;
    if m_hat < 1.0 {
        return Err(Error::Inconsistent(format!(
            "left index {m_hat:.4} is below 1, so K/P(K) does not blow up"
        )));
    }
    let lee_slope_left = if est.infinite {
        0.0
    } else {
        1.0 / (m_hat.sqrt() + (m_hat - 1.0).sqrt())
    };
    let log_k: Vec<f64> = grid.iter().map(|k| k.ln()).collect();
    // P(K) ~ K^u with log K decreasing: slope of log P against log K
    let u_star_hat = {
        let neg: Vec<f64> = log_k.iter().map(|x| -x).collect();
        let lpn: Vec<f64> = lp.iter().map(|x| -x).collect();
        tail_slope(&neg, &lpn)?
    };
    let (mut q_tilde_hat, mut v_star_hat) = (None, None);
    if let Some(spec) = spec {
        let le: Vec<f64> = log_k
            .par_iter()
            .map(|&u| log_cdf_at_log(spec, u))
            .collect::<Result<_>>()?;
        let neg: Vec<f64> = log_k.iter().map(|x| -x).collect();
        let len: Vec<f64> = le.iter().map(|x| -x).collect();
        v_star_hat = Some(tail_slope(&neg, &len)?);
        let n = log_k.len();
        let windows = onset_windows(log_k[n / 2], log_k[n - 1]);
        // E X^-q = q int y^{-q-1} eta(y) dy = q int e^{-q u} eta(e^u) du
        let w = window_values(&windows, |u| log_cdf_at_log(spec, u))?;
        q_tilde_hat = Some(moment_onset(&windows, &w, -1.0));
    }
    let mut names = vec!["m"];
    let mut vals = vec![m_hat];
    if let Some(q) = q_tilde_hat {
        names.push("q+1");
        vals.push(q + 1.0);
    }
    names.push("u*");
    vals.push(u_star_hat);
    if let Some(v) = v_star_hat {
        names.push("v*+1");
        vals.push(v + 1.0);
    }
    Ok(LeftIndexReport {
        m_hat,
        infinite: est.infinite,
        q_tilde_hat,
        u_star_hat,
        v_star_hat,
        lee_slope_left,
        deltas: if est.infinite { Vec::new() } else { pairwise(&names, &vals) },
        grid_meta: est.meta,
        caveat: CAVEAT,
    })
}

/// Trend of `e^{rT} K^p C(K)` over the tail window of `grid`.
pub fn moment_criterion(frame: &MarketFrame, c: &dyn PriceCurve, grid: &[f64], p: f64) -> Result<Trend> {
    let lp = log_prices(c, grid)?;
    let v: Vec<f64> = grid
        .iter()
        .zip(&lp)
        .map(|(k, l)| frame.r * frame.t + p * k.ln() + l)
        .collect();
    let start = tail_window_start(v.len());
    Ok(trend(&v[start..], 0.5))
}

/// Strikes `e^{a}, ..., e^{b}` equally spaced in `log K`.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bs::{bs_call_price, bs_put_price, OptionKind, Vol};
    use crate::curve::{BsCurve, FnCurve};
    use crate::special::norm_cdf;

    fn pareto_frame() -> MarketFrame {
        MarketFrame::new(4.0 / 3.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn pareto_ccdf_by_quadrature() {
        let spec = DistributionSpec::pareto(5.0).unwrap().without_tail();
        let v = ccdf_from_density(&spec, 2.0).unwrap();
        assert!((v - 0.0625).abs() < 1e-12);
        assert!((ccdf_from_density(&spec, 1.0).unwrap() - 1.0).abs() < 1e-9);
        let with_tail = DistributionSpec::pareto(5.0).unwrap();
        assert_eq!(ccdf_from_density(&with_tail, 2.0).unwrap(), 0.0625);
        assert!(ccdf_from_density(&spec, 0.5).is_err());
    }

    #[test]
    fn lognormal_ccdf() {
        let f = MarketFrame::unit(1.0).unwrap();
        let spec = DistributionSpec::lognormal(&f, 0.2).unwrap();
        let v = ccdf_from_density(&spec, std::f64::consts::E).unwrap();
        let want = norm_cdf(-(1.0 + 0.02) / 0.2);
        assert!(((v - want) / want).abs() < 1e-9);
        assert!((mass(&spec).unwrap() - 1.0).abs() < 1e-10);
        assert!((mean(&spec).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pareto_call_chain() {
        let f = pareto_frame();
        let spec = DistributionSpec::pareto(5.0).unwrap().without_tail();
        let c = call_from_ccdf(&f, &spec, 2.0).unwrap();
        assert!((c - 1.0 / 24.0).abs() < 1e-12);
        let d = call_from_payoff(&f, &spec, 2.0).unwrap();
        assert!((d - 1.0 / 24.0).abs() < 1e-12);
        let at_zero = call_from_ccdf(&f, &spec, 0.0).unwrap();
        assert!((at_zero - 4.0 / 3.0).abs() < 1e-10);
        assert_eq!(put_from_cdf(&f, &spec, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn lognormal_prices_match_black_scholes() {
        let f = MarketFrame::new(1.0, 0.03, 1.0).unwrap();
        let spec = DistributionSpec::lognormal(&f, 0.2).unwrap();
        let v = Vol::new(0.2).unwrap();
        for k in [0.5, 1.0, f.forward(), 1.7] {
            let c = call_from_ccdf(&f, &spec, k).unwrap();
            let bs = bs_call_price(&f, k, v).unwrap();
            assert!(((c - bs) / bs).abs() < 1e-8, "call {k}: {c} {bs}");
            let p = put_from_cdf(&f, &spec, k).unwrap();
            let bp = bs_put_price(&f, k, v).unwrap();
            assert!(((p - bp) / bp).abs() < 1e-8, "put {k}: {p} {bp}");
            let parity = c - p - f.discount() * (mean(&spec).unwrap() - k);
            assert!(parity.abs() < 1e-8);
        }
    }

    #[test]
    fn put_tends_to_discounted_strike() {
        let f = pareto_frame();
        let spec = DistributionSpec::pareto(5.0).unwrap();
        let k = 1e6;
        let p = put_from_cdf(&f, &spec, k).unwrap();
        assert!((p / k - 1.0).abs() < 1e-5);
    }

    #[test]
    fn infinite_mean_is_rejected() {
        let f = MarketFrame::unit(1.0).unwrap();
        let spec = DistributionSpec::pareto(2.0).unwrap();
        assert!(matches!(call_from_ccdf(&f, &spec, 2.0), Err(Error::NonIntegrable(_))));
        let spec = spec.without_tail();
        assert!(matches!(call_from_payoff(&f, &spec, 2.0), Err(Error::NonIntegrable(_))));
    }

    #[test]
    fn right_index_of_pareto_curve() {
        let f = pareto_frame();
        let c = FnCurve::from_log(|k: f64| -3.0 * k.ln() - 3f64.ln());
        let grid = log_grid(10.0, 100.0, 16);
        let rep = estimate_right_index(&f, &c, &grid, None).unwrap();
        assert!((rep.l_hat - 3.0).abs() < 0.05);
        assert!((rep.lee_slope - (2.0 - 3f64.sqrt())).abs() < 0.01);
        assert!((rep.r_star_hat - 3.0).abs() < 1e-9);
    }

    #[test]
    fn thin_tail_is_flagged_infinite() {
        let f = MarketFrame::unit(1.0).unwrap();
        let c = FnCurve::from_log(|k: f64| -k.ln().powi(2));
        let rep = estimate_right_index(&f, &c, &log_grid(10.0, 100.0, 16), None).unwrap();
        assert!(rep.infinite);
        assert_eq!(rep.lee_slope, 0.0);
    }

    #[test]
    fn slowly_varying_factor_is_ignored() {
        let f = MarketFrame::unit(1.0).unwrap();
        let c = FnCurve::from_log(|k: f64| -k.ln() + 10.0 * k.ln().ln());
        let rep = estimate_right_index(&f, &c, &log_grid(20.0, 200.0, 19), None).unwrap();
        assert!((rep.l_hat - 1.0).abs() < 0.1, "{}", rep.l_hat);
    }

    #[test]
    fn grid_requirements() {
        let f = MarketFrame::unit(1.0).unwrap();
        let c = FnCurve::from_log(|k: f64| -3.0 * k.ln());
        assert!(matches!(
            estimate_right_index(&f, &c, &log_grid(10.0, 15.0, 10), None),
            Err(Error::InsufficientGrid(_))
        ));
        assert!(matches!(
            estimate_right_index(&f, &c, &log_grid(10.0, 30.0, 4), None),
            Err(Error::InsufficientGrid(_))
        ));
    }

    #[test]
    fn left_index_examples() {
        let f = MarketFrame::unit(1.0).unwrap();
        let grid = log_grid(-10.0, -100.0, 16);
        let p = FnCurve::from_log(|k: f64| 4.0 * k.ln());
        let rep = estimate_left_index(&f, &p, &grid, None).unwrap();
        assert!((rep.m_hat - 4.0).abs() < 0.05);
        assert!((rep.lee_slope_left - (2.0 - 3f64.sqrt())).abs() < 0.01);
        assert!((rep.u_star_hat - 4.0).abs() < 1e-9);

        let p = FnCurve::from_log(|k: f64| k.ln() - 10.0 * (-k.ln()).ln());
        let rep = estimate_left_index(&f, &p, &log_grid(-20.0, -200.0, 19), None).unwrap();
        assert!((rep.m_hat - 1.0).abs() < 0.1, "{}", rep.m_hat);

        let bs = BsCurve::put(f, Vol::new(0.2).unwrap());
        let rep = estimate_left_index(&f, &bs, &log_grid(-5.0, -50.0, 16), None).unwrap();
        assert!(rep.infinite);

        let bad = FnCurve::from_log(|k: f64| 0.5 * k.ln() - 1.0);
        assert!(matches!(
            estimate_left_index(&f, &bad, &grid, None),
            Err(Error::Inconsistent(_))
        ));
    }

    #[test]
    fn moment_index_of_pareto_specs() {
        for beta in [3.5, 5.0, 8.0] {
            let f = MarketFrame::new(DistributionSpec::pareto_mean(beta), 0.0, 1.0).unwrap();
            let spec = DistributionSpec::pareto(beta).unwrap();
            let c = SpecCurve::call(f, spec.clone());
            let rep = estimate_right_index(&f, &c, &log_grid(10.0, 100.0, 16), Some(&spec)).unwrap();
            let l = beta - 2.0;
            assert!((rep.l_hat - l).abs() < 0.1, "beta {beta}: l {}", rep.l_hat);
            assert!((rep.p_tilde_hat.unwrap() - l).abs() < 0.1);
            assert!((rep.s_star_hat.unwrap() - l).abs() < 0.1);
            assert!(rep.deltas.iter().all(|(_, d)| *d < 0.1), "{:?}", rep.deltas);
        }
    }

    #[test]
    fn moment_criterion_brackets_index() {
        let f = pareto_frame();
        let c = FnCurve::from_log(|k: f64| -3.0 * k.ln() - 3f64.ln());
        let grid = log_grid(10.0, 100.0, 16);
        assert_eq!(moment_criterion(&f, &c, &grid, 2.7).unwrap(), Trend::Decreasing);
        assert_eq!(moment_criterion(&f, &c, &grid, 3.3).unwrap(), Trend::Increasing);
    }

    #[test]
    fn spec_curve_kinds() {
        let f = MarketFrame::unit(1.0).unwrap();
        let spec = DistributionSpec::lognormal(&f, 0.3).unwrap();
        let c = SpecCurve::call(f, spec.clone());
        let p = SpecCurve::put(f, spec);
        let v = Vol::new(0.3).unwrap();
        let k = 20f64.exp();
        let want = crate::bs::bs_log_price(&f, OptionKind::Call, k, v).unwrap();
        assert!((c.log_price(k).unwrap() - want).abs() < 1e-8);
        let k = (-20f64).exp();
        let want = crate::bs::bs_log_price(&f, OptionKind::Put, k, v).unwrap();
        assert!((p.log_price(k).unwrap() - want).abs() < 1e-8);
    }
}
