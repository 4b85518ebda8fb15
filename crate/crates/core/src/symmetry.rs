//! Put-call duality about the squared forward and implied-volatility
//! symmetry.
//!
//! With `F = x0 e^{rT}` the map `K -> F^2 / K` turns a put curve `P` into the
//! call curve `G(K) = (K/F) P(F^2/K)`; the put belonging to `G` is
//! `(K/F) C(F^2/K)`. Implied volatilities satisfy `I_C(K) = I_G(F^2/K)`.

use crate::bs::{implied_vol_log, MarketFrame, OptionKind};
use crate::curve::PriceCurve;
use crate::tail_index::DistributionSpec;
use crate::{Error, Result};

/// Pivot of the strike inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualFrame {
    /// `(x0 e^{rT})^2`.
    pub pivot: f64,
    pub frame: MarketFrame,
}

impl DualFrame {
    pub fn new(frame: MarketFrame) -> Self {
        let f = frame.forward();
        Self { pivot: f * f, frame }
    }

    /// `F^2 / K`.
    pub fn dual_strike(&self, k: f64) -> f64 {
        (2.0 * self.frame.forward().ln() - k.ln()).exp()
    }
}

/// The dual of a price curve: a put curve becomes the call curve `G`, a call
/// curve becomes the put curve of `G`.
pub struct DualCurve<C> {
    pub frame: MarketFrame,
    pub source: C,
}

impl<C: PriceCurve> DualCurve<C> {
    pub fn new(frame: MarketFrame, source: C) -> Self {
        Self { frame, source }
    }
}

impl<C: PriceCurve> PriceCurve for DualCurve<C> {
    fn log_price(&self, k: f64) -> Result<f64> {
        if !(k > 0.0) {
            return Err(Error::Domain(format!("strike must be positive, got {k}")));
        }
        let lf = self.frame.forward().ln();
        let lk = k.ln();
        Ok(lk - lf + self.source.log_price((2.0 * lf - lk).exp())?)
    }
}

/// `G(K) = (K / F) P(F^2 / K)`.
pub fn dual_call_g(frame: &MarketFrame, p: &dyn PriceCurve, k: f64) -> Result<f64> {
    DualCurve::new(*frame, p).price(k)
}

/// `F^3 x^-3 D(F^2 / x)`.
pub fn dual_density(frame: &MarketFrame, d: &dyn Fn(f64) -> f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("dual density needs x > 0, got {x}")));
    }
    let lf = frame.forward().ln();
    let lx = x.ln();
    Ok((3.0 * (lf - lx)).exp() * d((2.0 * lf - lx).exp()))
}

/// Density of the dual measure as a [`DistributionSpec`].
pub fn dual_spec(frame: &MarketFrame, spec: &DistributionSpec) -> Result<DistributionSpec> {
    let lf = frame.forward().ln();
    let pivot = (2.0 * lf).exp();
    let inner = spec.clone();
    let low = if spec.support_high.is_finite() {
        pivot / spec.support_high
    } else {
        0.0
    };
    let high = if spec.support_low > 0.0 {
        pivot / spec.support_low
    } else {
        f64::INFINITY
    };
    let hints = spec.hints.iter().map(|h| 2.0 * lf - h).collect();
    Ok(DistributionSpec::new(
        move |u| 3.0 * (lf - u) + inner.log_density_at_log(2.0 * lf - u),
        low,
        high,
    )?
    .with_hints(hints))
}

/// Outcome of [`symmetry_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport {
    pub strikes: Vec<f64>,
    /// Implied volatility of `C` at each strike.
    pub iv_c: Vec<f64>,
    /// Implied volatility of `G` at the dual strike.
    pub iv_g: Vec<f64>,
    pub max_deviation: f64,
    /// Largest parity residual relative to `max(C, P, x0)`.
    pub parity_residual: f64,
}

/// Relative parity tolerance applied before symmetry is attempted.
pub const PARITY_TOL: f64 = 1e-9;

/// Compares `I_C(K)` with `I_G(F^2/K)`, each obtained by inverting the
/// out-of-the-money leg of the respective curve.
pub fn symmetry_check(
    frame: &MarketFrame,
    c: &dyn PriceCurve,
    p: &dyn PriceCurve,
    grid: &[f64],
) -> Result<SymmetryReport> {
    let fwd = frame.forward();
    let dual = DualFrame::new(*frame);
    let mut parity_residual: f64 = 0.0;
    let mut iv_c = Vec::with_capacity(grid.len());
    let mut iv_g = Vec::with_capacity(grid.len());
    for &k in grid {
        let lc = c.log_price(k)?;
        let lp = p.log_price(k)?;
        let (cv, pv) = (lc.exp(), lp.exp());
        let dev = (cv - pv - frame.x0 + k * frame.discount()).abs();
        let rel = dev / cv.max(pv).max(frame.x0);
        if !(rel <= PARITY_TOL) {
            return Err(Error::Parity {
                strike: k,
                deviation: dev,
            });
        }
        parity_residual = parity_residual.max(rel);

        let kd = dual.dual_strike(k);
        let shift = kd.ln() - fwd.ln();
        let (ic, ig) = if k >= fwd {
            // C out of the money; G's put (K'/F) C(K) likewise
            (
                implied_vol_log(frame, OptionKind::Call, k, lc)?,
                implied_vol_log(frame, OptionKind::Put, kd, shift + lc)?,
            )
        } else {
            (
                implied_vol_log(frame, OptionKind::Put, k, lp)?,
                implied_vol_log(frame, OptionKind::Call, kd, shift + lp)?,
            )
        };
        iv_c.push(ic.sigma());
        iv_g.push(ig.sigma());
    }
    let max_deviation = iv_c
        .iter()
        .zip(&iv_g)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(SymmetryReport {
        strikes: grid.to_vec(),
        iv_c,
        iv_g,
        max_deviation,
        parity_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bs::{bs_call_price, Vol};
    use crate::curve::{BsCurve, FnCurve};
    use crate::tail_index::{log_grid, mass, mean, SpecCurve};

    fn unit() -> MarketFrame {
        MarketFrame::unit(1.0).unwrap()
    }

    #[test]
    fn lognormal_is_self_dual() {
        let f = unit();
        let v = Vol::new(0.2).unwrap();
        let p = BsCurve::put(f, v);
        for k in [0.3, 0.9, 1.0, 1.7, 5.0] {
            let g = dual_call_g(&f, &p, k).unwrap();
            let c = bs_call_price(&f, k, v).unwrap();
            assert!((g - c).abs() < 1e-12, "{k}");
        }
        let at_pivot = dual_call_g(&f, &p, 1.0).unwrap();
        assert!((at_pivot - p.price(1.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn dual_density_lognormal_and_involution() {
        let f = MarketFrame::new(1.2, 0.02, 0.7).unwrap();
        let spec = DistributionSpec::lognormal(&f, 0.3).unwrap();
        let d = |x: f64| spec.density(x);
        for x in [0.5, 1.0, 1.3, 2.0] {
            let dd = dual_density(&f, &d, x).unwrap();
            assert!((dd - d(x)).abs() < 1e-12 * d(x).max(1.0));
            let back = dual_density(&f, &|y| dual_density(&f, &d, y).unwrap(), x).unwrap();
            assert!((back - d(x)).abs() < 1e-10);
        }
        assert!(dual_density(&f, &d, 0.0).is_err());
    }

    #[test]
    fn pareto_dual_mass_and_mean() {
        let f = MarketFrame::new(4.0 / 3.0, 0.0, 1.0).unwrap();
        let spec = DistributionSpec::pareto(5.0).unwrap();
        let dual = dual_spec(&f, &spec).unwrap();
        assert!((mass(&dual).unwrap() - 1.0).abs() < 1e-7);
        assert!((mean(&dual).unwrap() - 4.0 / 3.0).abs() < 1e-7);
        let pivot = DualFrame::new(f).pivot;
        // the support edge x = 1 maps onto the pivot, where the dual density
        // takes the value F^-3 D(1)
        let d = |x: f64| spec.density(x);
        let at = dual_density(&f, &d, pivot * (1.0 - 1e-12)).unwrap();
        assert!((at - 4.0 * 0.75f64.powi(3)).abs() < 1e-10);
        assert_eq!(dual_density(&f, &d, pivot * 1.001).unwrap(), 0.0);
    }

    #[test]
    fn bs_symmetry() {
        let f = MarketFrame::new(1.0, 0.05, 1.0).unwrap();
        let v = Vol::new(0.25).unwrap();
        let grid = log_grid(-2.0, 2.0, 20);
        let rep = symmetry_check(&f, &BsCurve::call(f, v), &BsCurve::put(f, v), &grid).unwrap();
        assert!(rep.max_deviation < 1e-10);
    }

    #[test]
    fn pareto_symmetry() {
        let f = MarketFrame::new(4.0 / 3.0, 0.0, 1.0).unwrap();
        let spec = DistributionSpec::pareto(5.0).unwrap();
        let c = SpecCurve::call(f, spec.clone());
        let p = SpecCurve::put(f, spec);
        let grid = log_grid(0.1, 4.0, 20);
        let rep = symmetry_check(&f, &c, &p, &grid).unwrap();
        assert!(rep.max_deviation < 1e-6, "{}", rep.max_deviation);
    }

    #[test]
    fn parity_violation_is_rejected() {
        let f = unit();
        let v = Vol::new(0.2).unwrap();
        let c = BsCurve::call(f, v);
        let bumped = FnCurve::from_log(move |k| {
            let l = c.log_price(k).unwrap();
            if (k - 1.2).abs() < 1e-12 {
                l + 1.01f64.ln()
            } else {
                l
            }
        });
        let grid = [0.8, 1.0, 1.2, 1.5];
        let r = symmetry_check(&f, &bumped, &BsCurve::put(f, v), &grid);
        assert!(matches!(r, Err(Error::Parity { strike, .. }) if (strike - 1.2).abs() < 1e-12));
    }

    #[test]
    fn dual_of_dual_reproduces_prices() {
        let f = MarketFrame::new(1.0, 0.03, 2.0).unwrap();
        let c = BsCurve::call(f, Vol::new(0.4).unwrap());
        let twice = DualCurve::new(f, DualCurve::new(f, c));
        for k in [0.2, 1.0, 3.0] {
            assert!((twice.price(k).unwrap() - c.price(k).unwrap()).abs() < 1e-9);
        }
    }
}
