//! Strike-to-price maps at a fixed expiry.
//!
//! Curves report the *logarithm* of the premium; deep-wing premia routinely
//! underflow `f64` while their logarithms are perfectly ordinary numbers.

use crate::bs::{bs_log_price, MarketFrame, OptionKind, Vol};
use crate::{Error, Result};

/// An evaluable call or put price curve.
pub trait PriceCurve: Send + Sync {
    /// Natural logarithm of the premium at strike `k`.
    fn log_price(&self, k: f64) -> Result<f64>;

    fn price(&self, k: f64) -> Result<f64> {
        Ok(self.log_price(k)?.exp())
    }
}

impl<C: PriceCurve + ?Sized> PriceCurve for &C {
    fn log_price(&self, k: f64) -> Result<f64> {
        (**self).log_price(k)
    }
}

impl<C: PriceCurve + ?Sized> PriceCurve for Box<C> {
    fn log_price(&self, k: f64) -> Result<f64> {
        (**self).log_price(k)
    }
}

/// Black-Scholes curve with a flat volatility.
#[derive(Debug, Clone, Copy)]
pub struct BsCurve {
    pub frame: MarketFrame,
    pub vol: Vol,
    pub kind: OptionKind,
}

impl BsCurve {
    pub fn call(frame: MarketFrame, vol: Vol) -> Self {
        Self {
            frame,
            vol,
            kind: OptionKind::Call,
        }
    }

    pub fn put(frame: MarketFrame, vol: Vol) -> Self {
        Self {
            frame,
            vol,
            kind: OptionKind::Put,
        }
    }
}

impl PriceCurve for BsCurve {
    fn log_price(&self, k: f64) -> Result<f64> {
        bs_log_price(&self.frame, self.kind, k, self.vol)
    }
}

type LogFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Curve given by a closure.
pub struct FnCurve {
    log_price: LogFn,
}

impl FnCurve {
    /// Closure returning the log premium.
    pub fn from_log(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { log_price: Box::new(f) }
    }

    /// Closure returning the premium itself.
    pub fn from_price(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::from_log(move |k| f(k).ln())
    }
}

impl PriceCurve for FnCurve {
    fn log_price(&self, k: f64) -> Result<f64> {
        if !(k > 0.0) {
            return Err(Error::Domain(format!("strike must be positive, got {k}")));
        }
        let v = (self.log_price)(k);
        if v.is_nan() || v == f64::INFINITY {
            return Err(Error::NonPositive { at: k, value: v.exp() });
        }
        Ok(v)
    }
}

/// Sampled curve, interpolated linearly in `(log K, log price)`.
#[derive(Debug, Clone)]
pub struct TabulatedCurve {
    log_strikes: Vec<f64>,
    log_prices: Vec<f64>,
}

impl TabulatedCurve {
    pub fn new(strikes: &[f64], prices: &[f64]) -> Result<Self> {
        if strikes.len() != prices.len() {
            return Err(Error::Misaligned(format!(
                "{} strikes but {} prices",
                strikes.len(),
                prices.len()
            )));
        }
        if strikes.len() < 2 {
            return Err(Error::InsufficientGrid("a tabulated curve needs two points".into()));
        }
        for w in strikes.windows(2) {
            if !(w[0] > 0.0 && w[1] > w[0]) {
                return Err(Error::Domain("strikes must be positive and increasing".into()));
            }
        }
        if let Some((&k, &p)) = strikes.iter().zip(prices).find(|(_, &p)| !(p > 0.0)) {
            return Err(Error::NonPositive { at: k, value: p });
        }
        Ok(Self {
            log_strikes: strikes.iter().map(|k| k.ln()).collect(),
            log_prices: prices.iter().map(|p| p.ln()).collect(),
        })
    }
}

impl PriceCurve for TabulatedCurve {
    fn log_price(&self, k: f64) -> Result<f64> {
        let lk = k.ln();
        let xs = &self.log_strikes;
        let n = xs.len();
        if !(lk >= xs[0] && lk <= xs[n - 1]) {
            return Err(Error::Domain(format!("strike {k:e} outside the tabulated range")));
        }
        let i = xs.partition_point(|&x| x <= lk).clamp(1, n - 1);
        let w = (lk - xs[i - 1]) / (xs[i] - xs[i - 1]);
        Ok(self.log_prices[i - 1] + w * (self.log_prices[i] - self.log_prices[i - 1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_reproduces_power_law() {
        let ks: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let ps: Vec<f64> = ks.iter().map(|k| k.powi(-3) / 3.0).collect();
        let c = TabulatedCurve::new(&ks, &ps).unwrap();
        let k = 2.5f64;
        assert!((c.price(k).unwrap() - k.powi(-3) / 3.0).abs() < 1e-15);
        assert!(c.log_price(11.0).is_err());
    }

    #[test]
    fn fn_curve_rejects_nonpositive() {
        let c = FnCurve::from_price(|k| 1.0 - k);
        assert!(c.log_price(0.5).is_ok());
        assert!(matches!(c.log_price(2.0), Err(Error::NonPositive { .. })));
    }
}
