//! Static-arbitrage validation of sampled call price surfaces.
//!
//! A surface `C(T, K)` is a call pricing function iff, for every expiry,
//! `K -> C(T, K)` is convex (1), the second derivative of `K -> e^{rT} C(T, K)`
//! is a probability measure with mean `x0 e^{rT}` (2),
//! `T -> C(T, e^{rT} K)` is non-decreasing (3), `C(0, K) = (x0 - K)^+` (4) and
//! `C(T, K) -> 0` as `K -> inf` (5). Finite grids can only test these
//! approximately; the conventions used are documented on each check.

use rayon::prelude::*;

use crate::bs::MarketFrame;
use crate::stats::{mann_kendall, Trend};
use crate::{Error, Result};

/// Sampled call prices. `frame.t` is ignored; each row has its own expiry.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    pub frame: MarketFrame,
    pub expiries: Vec<f64>,
    pub strikes: Vec<Vec<f64>>,
    pub prices: Vec<Vec<f64>>,
}

impl SurfaceGrid {
    pub fn new(frame: MarketFrame, expiries: Vec<f64>, strikes: Vec<Vec<f64>>, prices: Vec<Vec<f64>>) -> Result<Self> {
        if expiries.is_empty() {
            return Err(Error::InsufficientGrid("surface has no expiries".into()));
        }
        if strikes.len() != expiries.len() || prices.len() != expiries.len() {
            return Err(Error::Misaligned(format!(
                "{} expiries, {} strike rows, {} price rows",
                expiries.len(),
                strikes.len(),
                prices.len()
            )));
        }
        if expiries[0] < 0.0 || expiries.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("expiries must be non-negative and strictly increasing".into()));
        }
        for (i, (ks, ps)) in strikes.iter().zip(&prices).enumerate() {
            if ks.len() != ps.len() {
                return Err(Error::Misaligned(format!(
                    "expiry {}: {} strikes but {} prices",
                    expiries[i],
                    ks.len(),
                    ps.len()
                )));
            }
            if ks.is_empty() || ks[0] <= 0.0 || ks.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Domain(format!(
                    "expiry {}: strikes must be positive and strictly increasing",
                    expiries[i]
                )));
            }
            if let Some((k, p)) = ks.iter().zip(ps).find(|(_, p)| !(**p > 0.0 && p.is_finite())) {
                return Err(Error::NonPositive { at: *k, value: *p });
            }
        }
        Ok(Self {
            frame,
            expiries,
            strikes,
            prices,
        })
    }

    fn growth(&self, i: usize) -> f64 {
        (self.frame.r * self.expiries[i]).exp()
    }
}

/// Tolerances; the absolute ones are multiplied by `x0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub convex: f64,
    pub measure: f64,
    pub calendar: f64,
    pub decay: f64,
    pub parity: f64,
    /// Expiries below this count as `T = 0`.
    pub zero_expiry: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            convex: 1e-10,
            measure: 1e-3,
            calendar: 1e-10,
            decay: 1e-3,
            parity: 1e-9,
            zero_expiry: 1e-12,
        }
    }
}

/// Second derivative of `K -> e^{rT} C(T, K)` on a strike grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    /// Interior strikes carrying point masses.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Mass on `[0, K_first]`, `1 + slope of the first cell`.
    pub left_mass: f64,
    /// Mass beyond `K_last`, minus the slope of the last cell.
    pub right_mass: f64,
    pub mass: f64,
    /// Mean, with the left cell mass placed at `K_first / 2`.
    pub mean: f64,
    /// Largest possible error of `mean` from that placement.
    pub truncation: f64,
}

// convexity gap at each interior node, in price units of e^{rT} C
fn convexity_gaps(ks: &[f64], us: &[f64]) -> Vec<f64> {
    (1..ks.len() - 1)
        .map(|j| {
            let lam = (ks[j + 1] - ks[j]) / (ks[j + 1] - ks[j - 1]);
            lam * us[j - 1] + (1.0 - lam) * us[j + 1] - us[j]
        })
        .collect()
}

fn measure_unchecked(grid: &SurfaceGrid, i: usize) -> Result<DiscreteMeasure> {
    let ks = &grid.strikes[i];
    let n = ks.len();
    if n < 3 {
        return Err(Error::InsufficientGrid(format!(
            "expiry {} has {n} strikes, at least 3 needed",
            grid.expiries[i]
        )));
    }
    let g = grid.growth(i);
    let us: Vec<f64> = grid.prices[i].iter().map(|c| g * c).collect();
    let slopes: Vec<f64> = (0..n - 1).map(|j| (us[j + 1] - us[j]) / (ks[j + 1] - ks[j])).collect();
    let weights: Vec<f64> = (1..n - 1).map(|j| slopes[j] - slopes[j - 1]).collect();
    let left_mass = 1.0 + slopes[0];
    let right_mass = -slopes[n - 2];
    let mass = left_mass + weights.iter().sum::<f64>() + right_mass;
    // beyond the last strike, E[X 1{X > K}] = U(K) + K P(X > K)
    let mean = left_mass * 0.5 * ks[0]
        + ks[1..n - 1].iter().zip(&weights).map(|(k, w)| k * w).sum::<f64>()
        + us[n - 1]
        + ks[n - 1] * right_mass;
    Ok(DiscreteMeasure {
        nodes: ks[1..n - 1].to_vec(),
        weights,
        left_mass,
        right_mass,
        mass,
        mean,
        truncation: left_mass.abs() * 0.5 * ks[0],
    })
}

/// Point masses from scaled second differences of `e^{rT} C(T, .)` at
/// expiry `i`. Fails on the most negative convexity gap below
/// `-1e-10 x0`.
pub fn discrete_measure(grid: &SurfaceGrid, i: usize) -> Result<DiscreteMeasure> {
    discrete_measure_with(grid, i, Tolerances::default().convex)
}

pub fn discrete_measure_with(grid: &SurfaceGrid, i: usize, tol_convex: f64) -> Result<DiscreteMeasure> {
    if i >= grid.expiries.len() {
        return Err(Error::Domain(format!("no expiry with index {i}")));
    }
    let m = measure_unchecked(grid, i)?;
    let g = grid.growth(i);
    let us: Vec<f64> = grid.prices[i].iter().map(|c| g * c).collect();
    let gaps = convexity_gaps(&grid.strikes[i], &us);
    let tol = tol_convex * grid.frame.x0 * g;
    if let Some((j, _)) = gaps
        .iter()
        .enumerate()
        .filter(|(_, gap)| **gap < -tol)
        .min_by(|a, b| a.1.total_cmp(b.1))
    {
        return Err(Error::NegativeWeight {
            expiry: i,
            strike: m.nodes[j],
            weight: m.weights[j],
        });
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    Convexity,
    Measure,
    Calendar,
    Initial,
    Decay,
    Parity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    NotTestable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionResult {
    pub condition: Condition,
    pub status: Status,
    pub detail: String,
}

/// Where a condition is violated worst.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub expiry: usize,
    pub strike: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub conditions: Vec<ConditionResult>,
    /// Most negative convexity gap (price units).
    pub worst_convexity: Option<Witness>,
    /// Most negative `C(T_{i+1}, e^{rT_{i+1}} k) - C(T_i, e^{rT_i} k)`; the
    /// strike is the normalised `k` and `expiry` the earlier index.
    pub worst_calendar: Option<Witness>,
    /// Mass and mean of the discrete measure per expiry.
    pub masses: Vec<f64>,
    pub means: Vec<f64>,
    pub parity_deviation: Option<f64>,
    pub pass: bool,
}

impl ValidationReport {
    pub fn status(&self, c: Condition) -> Option<Status> {
        self.conditions.iter().find(|r| r.condition == c).map(|r| r.status)
    }
}

/// `max |C - P - x0 + K e^{-rT}|` over the grid.
pub fn parity_check(grid: &SurfaceGrid, puts: &[Vec<f64>]) -> Result<f64> {
    if puts.len() != grid.expiries.len()
        || puts.iter().zip(&grid.prices).any(|(p, c)| p.len() != c.len())
    {
        return Err(Error::Misaligned("put matrix does not match the call grid".into()));
    }
    let x0 = grid.frame.x0;
    let mut worst = 0.0f64;
    for (i, t) in grid.expiries.iter().enumerate() {
        let d = (-grid.frame.r * t).exp();
        for ((k, c), p) in grid.strikes[i].iter().zip(&grid.prices[i]).zip(&puts[i]) {
            worst = worst.max((c - p - x0 + k * d).abs());
        }
    }
    Ok(worst)
}

fn interpolate(ks: &[f64], cs: &[f64], k: f64) -> Option<f64> {
    if k < ks[0] || k > ks[ks.len() - 1] {
        return None;
    }
    let j = ks.partition_point(|&x| x <= k).clamp(1, ks.len() - 1);
    let w = (k - ks[j - 1]) / (ks[j] - ks[j - 1]);
    Some(cs[j - 1] + w * (cs[j] - cs[j - 1]))
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Runs every testable condition; failures are entries of the report.
pub fn validate_surface(grid: &SurfaceGrid, puts: Option<&[Vec<f64>]>) -> ValidationReport {
    validate_surface_with(grid, puts, &Tolerances::default())
}

pub fn validate_surface_with(grid: &SurfaceGrid, puts: Option<&[Vec<f64>]>, tol: &Tolerances) -> ValidationReport {
    let x0 = grid.frame.x0;
    let ne = grid.expiries.len();
    let mut conditions = Vec::new();

    // condition 1, per expiry in parallel
    let worst_convexity = (0..ne)
        .into_par_iter()
        .filter(|&i| grid.strikes[i].len() >= 3)
        .filter_map(|i| {
            let g = grid.growth(i);
            let us: Vec<f64> = grid.prices[i].iter().map(|c| g * c).collect();
            convexity_gaps(&grid.strikes[i], &us)
                .into_iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(j, gap)| Witness {
                    expiry: i,
                    strike: grid.strikes[i][j + 1],
                    value: gap / g,
                })
        })
        .min_by(|a, b| a.value.total_cmp(&b.value));
    let convex_ok = worst_convexity.is_none_or(|w| w.value >= -tol.convex * x0);
    conditions.push(ConditionResult {
        condition: Condition::Convexity,
        status: status(convex_ok),
        detail: match worst_convexity {
            Some(w) => format!(
                "worst convexity gap {:.3e} at expiry {} strike {}",
                w.value, grid.expiries[w.expiry], w.strike
            ),
            None => "fewer than 3 strikes per expiry".into(),
        },
    });

    // condition 2
    let measures: Vec<Option<DiscreteMeasure>> = (0..ne)
        .into_par_iter()
        .map(|i| measure_unchecked(grid, i).ok())
        .collect();
    let mut masses = Vec::new();
    let mut means = Vec::new();
    let mut measure_fail = None;
    for (i, m) in measures.iter().enumerate() {
        let Some(m) = m else { continue };
        masses.push(m.mass);
        means.push(m.mean);
        if measure_fail.is_some() || grid.expiries[i] < tol.zero_expiry {
            continue;
        }
        let fwd = x0 * grid.growth(i);
        if (m.mass - 1.0).abs() > tol.measure || m.left_mass < -tol.measure || m.right_mass < -tol.measure {
            measure_fail = Some(format!(
                "expiry {}: mass {:.6} (left {:.3e}, right {:.3e})",
                grid.expiries[i], m.mass, m.left_mass, m.right_mass
            ));
        } else if (m.mean - fwd).abs() > tol.measure * fwd + m.truncation {
            measure_fail = Some(format!(
                "expiry {}: mean {:.6} against forward {:.6}",
                grid.expiries[i], m.mean, fwd
            ));
        }
    }
    conditions.push(ConditionResult {
        condition: Condition::Measure,
        status: if masses.is_empty() {
            Status::NotTestable
        } else {
            status(measure_fail.is_none())
        },
        detail: measure_fail.unwrap_or_else(|| "mass and mean within tolerance".into()),
    });

    // condition 3
    let mut worst_calendar: Option<Witness> = None;
    for i in 0..ne.saturating_sub(1) {
        let (gi, gj) = (grid.growth(i), grid.growth(i + 1));
        for (k, c) in grid.strikes[i].iter().zip(&grid.prices[i]) {
            let kappa = k / gi;
            if let Some(next) = interpolate(&grid.strikes[i + 1], &grid.prices[i + 1], kappa * gj) {
                let diff = next - c;
                if worst_calendar.is_none_or(|w| diff < w.value) {
                    worst_calendar = Some(Witness {
                        expiry: i,
                        strike: kappa,
                        value: diff,
                    });
                }
            }
        }
    }
    conditions.push(ConditionResult {
        condition: Condition::Calendar,
        status: match worst_calendar {
            None => Status::NotTestable,
            Some(w) => status(w.value >= -tol.calendar * x0),
        },
        detail: match worst_calendar {
            Some(w) => format!(
                "worst calendar difference {:.3e} between expiries {} and {} at normalised strike {}",
                w.value,
                grid.expiries[w.expiry],
                grid.expiries[w.expiry + 1],
                w.strike
            ),
            None => "fewer than two overlapping expiries".into(),
        },
    });

    // condition 4
    let initial = if grid.expiries[0] < tol.zero_expiry {
        let dev = grid.strikes[0]
            .iter()
            .zip(&grid.prices[0])
            .map(|(k, c)| (c - (x0 - k).max(0.0)).abs())
            .fold(0.0, f64::max);
        ConditionResult {
            condition: Condition::Initial,
            status: status(dev <= tol.convex * x0),
            detail: format!("max |C(0,K) - (x0-K)^+| = {dev:.3e}"),
        }
    } else {
        ConditionResult {
            condition: Condition::Initial,
            status: Status::NotTestable,
            detail: "no expiry at T = 0".into(),
        }
    };
    conditions.push(initial);

    // condition 5: decreasing over the last decade and ending below tol.decay x0
    let mut decay_fail = None;
    for i in 0..ne {
        if grid.expiries[i] < tol.zero_expiry {
            continue;
        }
        let ks = &grid.strikes[i];
        let top = ks[ks.len() - 1];
        let from = ks.partition_point(|&k| k < top / 10.0).min(ks.len().saturating_sub(3));
        let tail = &grid.prices[i][from..];
        let last = tail[tail.len() - 1];
        let falling = tail.len() < 2 || mann_kendall(tail) <= -0.5;
        if !(falling && last < tol.decay * x0) {
            decay_fail = Some(format!(
                "expiry {}: last price {:.3e}, trend {:?}",
                grid.expiries[i],
                last,
                if falling { Trend::Decreasing } else { Trend::None }
            ));
            break;
        }
    }
    conditions.push(ConditionResult {
        condition: Condition::Decay,
        status: status(decay_fail.is_none()),
        detail: decay_fail.unwrap_or_else(|| "prices decay in the last strike decade".into()),
    });

    let parity_deviation = puts.map(|p| parity_check(grid, p));
    if let Some(dev) = &parity_deviation {
        conditions.push(match dev {
            Ok(d) => ConditionResult {
                condition: Condition::Parity,
                status: status(*d <= tol.parity * x0),
                detail: format!("max parity deviation {d:.3e}"),
            },
            Err(e) => ConditionResult {
                condition: Condition::Parity,
                status: Status::Fail,
                detail: e.to_string(),
            },
        });
    }

    let pass = conditions.iter().all(|c| c.status != Status::Fail);
    ValidationReport {
        conditions,
        worst_convexity,
        worst_calendar,
        masses,
        means,
        parity_deviation: parity_deviation.and_then(|d| d.ok()),
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bs::{bs_call_price, bs_put_price, Vol};

    fn strikes(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
        let n = ((hi / lo).log10() * per_decade as f64).round() as usize;
        (0..=n).map(|j| lo * 10f64.powf(j as f64 / per_decade as f64)).collect()
    }

    fn bs_surface(frame: MarketFrame, sigma: f64, ts: &[f64], ks: &[f64]) -> (SurfaceGrid, Vec<Vec<f64>>) {
        let v = Vol::new(sigma).unwrap();
        let mut calls = Vec::new();
        let mut puts = Vec::new();
        for &t in ts {
            let f = frame.with_expiry(t).unwrap();
            calls.push(ks.iter().map(|&k| bs_call_price(&f, k, v).unwrap()).collect());
            puts.push(ks.iter().map(|&k| bs_put_price(&f, k, v).unwrap()).collect());
        }
        let g = SurfaceGrid::new(frame, ts.to_vec(), vec![ks.to_vec(); ts.len()], calls).unwrap();
        (g, puts)
    }

    #[test]
    fn bs_measure_is_normalised() {
        let frame = MarketFrame::new(1.0, 0.03, 1.0).unwrap();
        let ks = strikes(0.01, 100.0, 200);
        let (g, _) = bs_surface(frame, 0.2, &[1.0], &ks);
        let m = discrete_measure(&g, 0).unwrap();
        assert!((m.mass - 1.0).abs() < 1e-3);
        assert!((m.mean - frame.forward()).abs() < 1e-3);
        // deep in the money the second differences are pure rounding noise
        assert!(m.weights.iter().all(|w| *w >= -1e-6));
    }

    #[test]
    fn affine_segment_carries_no_mass() {
        let frame = MarketFrame::unit(1.0).unwrap();
        let ks = vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
        let cs = vec![0.6, 0.3, 0.2, 0.1, 0.05, 0.01];
        let g = SurfaceGrid::new(frame, vec![1.0], vec![ks], vec![cs]).unwrap();
        let m = discrete_measure(&g, 0).unwrap();
        // 0.3, 0.2, 0.1 lie on a line
        assert!(m.weights[1].abs() < 1e-12);
        assert!(m.weights[0] > 0.0);
    }

    #[test]
    fn bumps_are_located() {
        let frame = MarketFrame::unit(1.0).unwrap();
        let ks = strikes(0.5, 2.0, 200);
        let (g, _) = bs_surface(frame, 0.2, &[1.0], &ks);
        let j = ks.len() / 2;
        // raising one price makes that node concave
        let mut up = g.clone();
        up.prices[0][j] *= 1.01;
        match discrete_measure(&up, 0) {
            Err(Error::NegativeWeight { strike, .. }) => assert_eq!(strike, ks[j]),
            other => panic!("{other:?}"),
        }
        // lowering it pushes the neighbours negative
        let mut down = g;
        down.prices[0][j] *= 0.99;
        match discrete_measure(&down, 0) {
            Err(Error::NegativeWeight { strike, .. }) => {
                assert!(strike == ks[j - 1] || strike == ks[j + 1], "{strike}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bs_surface_passes() {
        let frame = MarketFrame::new(1.0, 0.02, 1.0).unwrap();
        let ks = strikes(0.01, 100.0, 200);
        let (g, puts) = bs_surface(frame, 0.3, &[0.25, 0.5, 1.0, 2.0], &ks);
        let r = validate_surface(&g, Some(&puts));
        assert!(r.pass, "{:#?}", r.conditions);
        assert_eq!(r.status(Condition::Initial), Some(Status::NotTestable));
        assert!(r.parity_deviation.unwrap() < 1e-12);
    }

    #[test]
    fn zero_expiry_slice_is_checked() {
        let frame = MarketFrame::unit(1.0).unwrap();
        let ks = strikes(0.1, 10.0, 20);
        let (mut g, _) = bs_surface(frame, 0.3, &[0.5], &ks);
        g.expiries.insert(0, 0.0);
        g.strikes.insert(0, ks.clone());
        g.prices.insert(0, ks.iter().map(|k| (1.0 - k).max(1e-300)).collect());
        let r = validate_surface(&g, None);
        assert_eq!(r.status(Condition::Initial), Some(Status::Pass));
    }

    #[test]
    fn calendar_inversion_is_caught() {
        let frame = MarketFrame::unit(1.0).unwrap();
        let ks = strikes(0.1, 10.0, 50);
        let (mut g, _) = bs_surface(frame, 0.3, &[0.5, 1.0], &ks);
        let j = ks.iter().position(|k| (k - 1.0).abs() < 1e-12).unwrap();
        g.prices[1][j] = g.prices[0][j] * 0.99;
        let r = validate_surface(&g, None);
        assert_eq!(r.status(Condition::Calendar), Some(Status::Fail));
        let w = r.worst_calendar.unwrap();
        assert_eq!(w.expiry, 0);
        assert!((w.strike - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaled_surface_fails_on_mean() {
        let frame = MarketFrame::unit(1.0).unwrap();
        let ks = strikes(0.01, 100.0, 100);
        let (mut g, _) = bs_surface(frame, 0.3, &[1.0], &ks);
        for p in g.prices[0].iter_mut() {
            *p *= 1.5;
        }
        let r = validate_surface(&g, None);
        assert_eq!(r.status(Condition::Measure), Some(Status::Fail));
        assert!((r.means[0] - 1.5).abs() < 0.01);
    }

    #[test]
    fn parity_deviation_of_zeroed_puts() {
        let frame = MarketFrame::new(1.0, 0.05, 1.0).unwrap();
        let ks = strikes(0.5, 2.0, 10);
        let (g, puts) = bs_surface(frame, 0.2, &[1.0], &ks);
        let zero = vec![vec![0.0; ks.len()]];
        let expect = ks
            .iter()
            .zip(&g.prices[0])
            .map(|(k, c)| (c - 1.0 + k * (-0.05f64).exp()).abs())
            .fold(0.0, f64::max);
        assert!((parity_check(&g, &zero).unwrap() - expect).abs() < 1e-15);
        assert!(parity_check(&g, &puts).unwrap() < 1e-12);
        assert!(matches!(parity_check(&g, &[vec![0.0]]), Err(Error::Misaligned(_))));
    }

    #[test]
    fn invalid_grids_are_rejected() {
        let frame = MarketFrame::unit(1.0).unwrap();
        assert!(SurfaceGrid::new(frame, vec![1.0], vec![vec![1.0, 0.5]], vec![vec![0.1, 0.2]]).is_err());
        assert!(SurfaceGrid::new(frame, vec![1.0], vec![vec![1.0, 2.0]], vec![vec![0.1, 0.0]]).is_err());
        assert!(SurfaceGrid::new(frame, vec![1.0, 0.5], vec![vec![1.0]; 2], vec![vec![0.1]; 2]).is_err());
    }
}
