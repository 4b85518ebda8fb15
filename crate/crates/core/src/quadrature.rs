//! Adaptive Gauss-Kronrod quadrature with log-domain wrappers.
//!
//! Tail integrals in this crate routinely have magnitudes like `e^-800`, so
//! the public entry points take the *logarithm* of the integrand and return
//! the logarithm of the integral. Semi-infinite ranges are parametrised by
//! the offset `s >= 0` from the finite endpoint; callers build the abscissa
//! from the offset themselves, which keeps full precision next to huge
//! endpoints such as `log K = 200`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1] (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for the adaptive driver.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-11,
            abs_tol: 0.0,
            max_intervals: 5000,
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

/// Value and absolute error estimate of a real integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Logarithm of a positive integral with its relative error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogIntegral {
    pub log_value: f64,
    pub rel_error: f64,
}

struct Cell {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    (resk * h, ((resk - resg) * h).abs())
}

/// Adaptive G7-K15 integration of `f` over `[points[0], points[last]]`,
/// starting from the cells delimited by `points` (sorted, at least two).
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, points: &[f64], opts: QuadOptions) -> Result<Integral> {
    if points.len() < 2 {
        return Err(Error::Domain("integration needs at least two points".into()));
    }
    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (0.0, 0.0);
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let (v, e) = kronrod15(&f, a, b);
        total += v;
        err += e;
        heap.push(Cell { a, b, value: v, error: e });
    }
    let mut count = heap.len();
    while err > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if count >= opts.max_intervals || !total.is_finite() {
            return Err(Error::Quadrature {
                achieved: err / total.abs(),
                requested: opts.rel_tol,
            });
        }
        let Some(cell) = heap.pop() else { break };
        let m = 0.5 * (cell.a + cell.b);
        if !(m > cell.a && m < cell.b) {
            // interval can no longer be split in floating point
            heap.push(Cell { error: 0.0, ..cell });
            err = heap.iter().map(|c| c.error).sum();
            if heap.iter().all(|c| c.error == 0.0) {
                break;
            }
            continue;
        }
        let (v1, e1) = kronrod15(&f, cell.a, m);
        let (v2, e2) = kronrod15(&f, m, cell.b);
        total += v1 + v2 - cell.value;
        err += e1 + e2 - cell.error;
        heap.push(Cell { a: cell.a, b: m, value: v1, error: e1 });
        heap.push(Cell { a: m, b: cell.b, value: v2, error: e2 });
        count += 1;
        if count % 64 == 0 {
            // refresh running sums to limit cancellation drift
            total = heap.iter().map(|c| c.value).sum();
            err = heap.iter().map(|c| c.error).sum();
        }
    }
    total = heap.iter().map(|c| c.value).sum();
    err = heap.iter().map(|c| c.error).sum();
    Ok(Integral { value: total, error: err })
}

fn shifted_integral<G: Fn(f64) -> f64>(g: &G, points: &[f64], mut shift: f64, opts: QuadOptions) -> Result<LogIntegral> {
    // exponents of size |g| carry an absolute rounding error of about
    // eps |g|, which bounds the attainable relative accuracy
    let scale = finite_max(points.iter().map(|&s| g(s).abs()));
    let opts = QuadOptions {
        rel_tol: opts.rel_tol.max(64.0 * f64::EPSILON * scale),
        ..opts
    };
    for _ in 0..4 {
        let overflow = std::cell::Cell::new(f64::NEG_INFINITY);
        let res = gauss_kronrod(
            |s| {
                let v = g(s);
                if v.is_nan() || v == f64::NEG_INFINITY {
                    return 0.0;
                }
                if v - shift > 600.0 && v > overflow.get() {
                    overflow.set(v);
                }
                (v - shift).exp()
            },
            points,
            opts,
        );
        if overflow.get() > f64::NEG_INFINITY {
            shift = overflow.get();
            continue;
        }
        let r = res?;
        if !(r.value > 0.0) {
            return Ok(LogIntegral {
                log_value: f64::NEG_INFINITY,
                rel_error: 0.0,
            });
        }
        return Ok(LogIntegral {
            log_value: r.value.ln() + shift,
            rel_error: r.error / r.value,
        });
    }
    Err(Error::Quadrature {
        achieved: f64::INFINITY,
        requested: opts.rel_tol,
    })
}

fn finite_max(values: impl Iterator<Item = f64>) -> f64 {
    values
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `log ∫_a^b exp(g(u)) du` with optional interior breakpoints.
pub fn log_integrate<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, hints: &[f64], opts: QuadOptions) -> Result<LogIntegral> {
    if !(b > a) {
        if a == b {
            return Ok(LogIntegral {
                log_value: f64::NEG_INFINITY,
                rel_error: 0.0,
            });
        }
        return Err(Error::Domain(format!("empty interval [{a}, {b}]")));
    }
    let n = 32;
    let mut points: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    points.extend(hints.iter().copied().filter(|&h| h > a && h < b));
    points.sort_by(|x, y| x.total_cmp(y));
    points.dedup();
    let shift = finite_max(points.iter().map(|&u| g(u)));
    if shift == f64::NEG_INFINITY {
        return Ok(LogIntegral {
            log_value: f64::NEG_INFINITY,
            rel_error: 0.0,
        });
    }
    shifted_integral(&g, &points, shift, opts)
}

/// `log ∫_0^∞ exp(g(s)) ds` where `g` is parametrised by the offset `s`.
///
/// The range is cut into octaves `[2^j, 2^{j+1}]` until the octave
/// contributions fall 46 nats below the largest one; an integrand whose
/// octave contributions never decay yields [`Error::NonIntegrable`].
pub fn log_integrate_offset<G: Fn(f64) -> f64>(g: G, hints: &[f64], opts: QuadOptions) -> Result<LogIntegral> {
    const FIRST: i32 = -12;
    const LAST: i32 = 1020;
    let mut points = vec![0.0];
    let mut best = f64::NEG_INFINITY;
    let mut below = 0;
    let mut prev = f64::INFINITY;
    let mut closed = false;
    for j in FIRST..=LAST {
        let s = 2f64.powi(j);
        points.push(s);
        let v = g(s) + s.ln();
        if v.is_finite() {
            best = best.max(v);
        }
        if j >= 6 && (v < best - 46.0 || v == f64::NEG_INFINITY) && v <= prev {
            below += 1;
            if below >= 3 {
                closed = true;
                break;
            }
        } else {
            below = 0;
        }
        prev = v;
    }
    if !closed {
        return Err(Error::NonIntegrable(
            "integrand does not decay over the probed offsets".into(),
        ));
    }
    let end = *points.last().unwrap();
    points.extend(hints.iter().copied().filter(|&h| h > 0.0 && h < end));
    points.sort_by(|x, y| x.total_cmp(y));
    points.dedup();
    let shift = finite_max(points.iter().map(|&s| g(s)));
    if shift == f64::NEG_INFINITY {
        return Ok(LogIntegral {
            log_value: f64::NEG_INFINITY,
            rel_error: 0.0,
        });
    }
    shifted_integral(&g, &points, shift, opts)
}
