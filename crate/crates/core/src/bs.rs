//! Black-Scholes prices, parity and implied-volatility inversion.
//!
//! Prices are available both directly and as logarithms. The log form stays
//! accurate for out-of-the-money premia far below the smallest `f64`, which
//! is what the wing formulas need at strikes like `e^100`.

use crate::special::{log_norm_pdf, mills_diff, norm_cdf};
use crate::{Error, Result};

/// Spot, rate and expiry shared by every formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketFrame {
    pub x0: f64,
    pub r: f64,
    pub t: f64,
}

impl MarketFrame {
    pub fn new(x0: f64, r: f64, t: f64) -> Result<Self> {
        if !(x0 > 0.0 && x0.is_finite()) {
            return Err(Error::Domain(format!("spot must be positive, got {x0}")));
        }
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!("rate must be non-negative, got {r}")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("expiry must be positive, got {t}")));
        }
        Ok(Self { x0, r, t })
    }

    /// Frame with `x0 = 1`, `r = 0` and the given expiry.
    pub fn unit(t: f64) -> Result<Self> {
        Self::new(1.0, 0.0, t)
    }

    /// Forward price `x0 e^{rT}`.
    pub fn forward(&self) -> f64 {
        self.x0 * (self.r * self.t).exp()
    }

    pub fn discount(&self) -> f64 {
        (-self.r * self.t).exp()
    }

    /// Same market with another expiry.
    pub fn with_expiry(&self, t: f64) -> Result<Self> {
        Self::new(self.x0, self.r, t)
    }
}

/// Positive Black-Scholes volatility.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Vol(f64);

impl Vol {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma > 0.0 && sigma.is_finite() {
            Ok(Self(sigma))
        } else {
            Err(Error::Domain(format!("volatility must be positive, got {sigma}")))
        }
    }

    pub fn sigma(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionKind {
    Call,
    Put,
}

fn check_strike(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("strike must be positive, got {k}")))
    }
}

fn d1_d2(frame: &MarketFrame, k: f64, sigma: f64) -> (f64, f64) {
    let s = sigma * frame.t.sqrt();
    let d1 = ((frame.x0 / k).ln() + frame.r * frame.t) / s + 0.5 * s;
    (d1, d1 - s)
}

/// `log(K e^{-rT} phi(d2))`, the common prefactor of the wing formulas.
fn log_prefactor(frame: &MarketFrame, k: f64, d2: f64) -> f64 {
    k.ln() - frame.r * frame.t + log_norm_pdf(d2)
}

/// Natural logarithm of the Black-Scholes price.
pub fn bs_log_price(frame: &MarketFrame, kind: OptionKind, k: f64, vol: Vol) -> Result<f64> {
    check_strike(k)?;
    let (d1, d2) = d1_d2(frame, k, vol.sigma());
    let disc_k = k * frame.discount();
    match kind {
        OptionKind::Call if d1 <= -1.0 => Ok(log_prefactor(frame, k, d2) + mills_diff(-d1, -d2).ln()),
        OptionKind::Put if d2 >= 1.0 => Ok(log_prefactor(frame, k, d2) + mills_diff(d2, d1).ln()),
        OptionKind::Call if d2 >= 1.0 => {
            let put = bs_log_price(frame, OptionKind::Put, k, vol)?.exp();
            Ok((frame.x0 - disc_k + put).ln())
        }
        OptionKind::Put if d1 <= -1.0 => {
            let call = bs_log_price(frame, OptionKind::Call, k, vol)?.exp();
            Ok((disc_k - frame.x0 + call).ln())
        }
        OptionKind::Call => Ok((frame.x0 * norm_cdf(d1) - disc_k * norm_cdf(d2)).ln()),
        OptionKind::Put => Ok((disc_k * norm_cdf(-d2) - frame.x0 * norm_cdf(-d1)).ln()),
    }
}

/// Black-Scholes price of a call or put.
pub fn bs_price(frame: &MarketFrame, kind: OptionKind, k: f64, vol: Vol) -> Result<f64> {
    Ok(bs_log_price(frame, kind, k, vol)?.exp())
}

/// `x0 N(d1) - K e^{-rT} N(d2)`.
pub fn bs_call_price(frame: &MarketFrame, k: f64, vol: Vol) -> Result<f64> {
    bs_price(frame, OptionKind::Call, k, vol)
}

/// Put price; satisfies `C - P = x0 - K e^{-rT}`.
pub fn bs_put_price(frame: &MarketFrame, k: f64, vol: Vol) -> Result<f64> {
    bs_price(frame, OptionKind::Put, k, vol)
}

/// Open no-arbitrage band `(lower, upper)` for a premium.
pub fn price_band(frame: &MarketFrame, kind: OptionKind, k: f64) -> (f64, f64) {
    let disc_k = k * frame.discount();
    match kind {
        OptionKind::Call => ((frame.x0 - disc_k).max(0.0), frame.x0),
        OptionKind::Put => ((disc_k - frame.x0).max(0.0), disc_k),
    }
}

// Prices closer than this (relative to the band scale) to an edge carry no
// usable volatility information.
const BAND_MARGIN: f64 = 1e-14;

/// Implied volatility of a call premium.
pub fn implied_vol(frame: &MarketFrame, k: f64, price: f64) -> Result<Vol> {
    implied_vol_kind(frame, OptionKind::Call, k, price)
}

/// Implied volatility of a put premium.
pub fn implied_vol_put(frame: &MarketFrame, k: f64, price: f64) -> Result<Vol> {
    implied_vol_kind(frame, OptionKind::Put, k, price)
}

/// Implied volatility of a premium given in price space.
///
/// In-the-money premia are converted to the out-of-the-money leg by parity
/// and inverted there.
pub fn implied_vol_kind(frame: &MarketFrame, kind: OptionKind, k: f64, price: f64) -> Result<Vol> {
    check_strike(k)?;
    let (lower, upper) = price_band(frame, kind, k);
    let scale = frame.x0.max(k * frame.discount());
    if !(price > lower + BAND_MARGIN * scale && price < upper - BAND_MARGIN * scale) {
        return Err(Error::Band { price, lower, upper });
    }
    let fwd = frame.forward();
    let parity = frame.x0 - k * frame.discount();
    match kind {
        OptionKind::Call if k < fwd => implied_vol_log(frame, OptionKind::Put, k, (price - parity).ln()),
        OptionKind::Put if k > fwd => implied_vol_log(frame, OptionKind::Call, k, (price + parity).ln()),
        _ => implied_vol_log(frame, kind, k, price.ln()),
    }
}

/// Implied volatility from the logarithm of a premium.
///
/// Bisection-safeguarded Newton iteration on `log price`, whose derivative
/// in `sigma` is `K e^{-rT} phi(d2) sqrt(T) / price`.
pub fn implied_vol_log(frame: &MarketFrame, kind: OptionKind, k: f64, log_price: f64) -> Result<Vol> {
    check_strike(k)?;
    let (lower, upper) = price_band(frame, kind, k);
    let band_err = || Error::Band {
        price: log_price.exp(),
        lower,
        upper,
    };
    if !(log_price < upper.ln()) || log_price.is_nan() {
        return Err(band_err());
    }
    if lower > 0.0 && !(log_price > lower.ln()) {
        return Err(band_err());
    }
    let f = |s: f64| -> f64 {
        bs_log_price(frame, kind, k, Vol(s)).map_or(f64::NAN, |lp| lp - log_price)
    };

    // bracket
    let (mut lo, mut hi) = (0.25, 1.0);
    let mut f_lo = f(lo);
    while !(f_lo < 0.0) {
        lo *= 0.5;
        if lo < 1e-12 {
            return Err(band_err());
        }
        f_lo = f(lo);
    }
    let mut f_hi = f(hi);
    while !(f_hi > 0.0) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(band_err());
        }
        f_hi = f(hi);
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return Vol::new(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let (_, d2) = d1_d2(frame, k, x);
        let dlog = (log_prefactor(frame, k, d2) + 0.5 * frame.t.ln() - (fx + log_price)).exp();
        let mut next = x - fx / dlog;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Vol::new(next);
        }
        x = next;
    }
    Err(Error::NoConvergence(format!(
        "implied volatility at strike {k:e} did not converge within the bracket [{lo}, {hi}]"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> MarketFrame {
        MarketFrame::unit(1.0).unwrap()
    }

    #[test]
    fn atm_reference_price() {
        // 2 N(0.1) - 1
        let c = bs_call_price(&unit(), 1.0, Vol::new(0.2).unwrap()).unwrap();
        assert!((c - 0.079_655_674_554_057_96).abs() < 1e-15);
        let p = bs_put_price(&unit(), 1.0, Vol::new(0.2).unwrap()).unwrap();
        assert!((p - c).abs() < 1e-15);
    }

    #[test]
    fn limits() {
        let v = Vol::new(0.2).unwrap();
        let c = bs_call_price(&unit(), 1e-12, v).unwrap();
        assert!((c - 1.0).abs() < 1e-9);
        assert!(bs_put_price(&unit(), 1e-12, v).unwrap() < 1e-300);
        let tiny = bs_call_price(&unit(), 1.1, Vol::new(1e-8).unwrap()).unwrap();
        assert!(tiny < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(bs_call_price(&unit(), 0.0, Vol(0.2)), Err(Error::Domain(_))));
        assert!(matches!(bs_put_price(&unit(), -1.0, Vol(0.2)), Err(Error::Domain(_))));
        assert!(Vol::new(0.0).is_err());
        assert!(MarketFrame::new(1.0, -0.1, 1.0).is_err());
    }

    #[test]
    fn deep_wing_log_price_matches_asymptotic_expansion() {
        // log C ~ log(K phi(d2)) + log(R(-d1) - R(-d2)) ~ -d2^2/2 - log|d2|^2 ... check
        // against the leading Mills expansion at K = e^100.
        let v = Vol::new(0.2).unwrap();
        let k = 100f64.exp();
        let lc = bs_log_price(&unit(), OptionKind::Call, k, v).unwrap();
        let (d1, d2) = d1_d2(&unit(), k, 0.2);
        let (a, b) = (-d1, -d2);
        // R(x) = 1/x - 1/x^3 + 3/x^5 - 15/x^7 + ...
        let r = |x: f64| 1.0 / x - 1.0 / x.powi(3) + 3.0 / x.powi(5) - 15.0 / x.powi(7);
        let want = k.ln() + log_norm_pdf(d2) + (r(a) - r(b)).ln();
        assert!((lc - want).abs() < 1e-9, "{lc} vs {want}");
    }

    #[test]
    fn band_edges_rejected() {
        let f = unit();
        assert!(matches!(implied_vol(&f, 1.0, 1.0 - 1e-15), Err(Error::Band { .. })));
        assert!(matches!(implied_vol(&f, 1.0, 0.0), Err(Error::Band { .. })));
        assert!(matches!(implied_vol(&f, 0.5, 0.49), Err(Error::Band { .. })));
    }

    #[test]
    fn inverts_reference_price() {
        let s = implied_vol(&unit(), 1.0, 0.0796557).unwrap().sigma();
        assert!((s - 0.2).abs() < 1e-6);
    }

    #[test]
    fn round_trip_at_extreme_log_prices() {
        let v = Vol::new(0.37).unwrap();
        for lk in [-200.0, -40.0, 40.0, 200.0] {
            let k = f64::exp(lk);
            let kind = if lk > 0.0 { OptionKind::Call } else { OptionKind::Put };
            let lp = bs_log_price(&unit(), kind, k, v).unwrap();
            let s = implied_vol_log(&unit(), kind, k, lp).unwrap().sigma();
            assert!((s - 0.37).abs() < 1e-12, "{lk}: {s}");
        }
    }

    proptest! {
        #[test]
        fn parity_holds(s in 0.01f64..2.0, lk in -5.0f64..5.0, t in 0.05f64..10.0, r in 0.0f64..0.1) {
            let f = MarketFrame::new(1.3, r, t).unwrap();
            let k = lk.exp();
            let v = Vol::new(s).unwrap();
            let c = bs_call_price(&f, k, v).unwrap();
            let p = bs_put_price(&f, k, v).unwrap();
            let scale = 1.3f64.max(k);
            prop_assert!((c - p - f.x0 + k * f.discount()).abs() <= 1e-14 * scale);
        }

        #[test]
        fn round_trip(s in 0.01f64..2.0, lk in -9.2f64..9.2, t in 0.05f64..10.0) {
            let f = MarketFrame::unit(t).unwrap();
            let k = lk.exp();
            let kind = if k >= f.forward() { OptionKind::Call } else { OptionKind::Put };
            let lp = bs_log_price(&f, kind, k, Vol::new(s).unwrap()).unwrap();
            let got = implied_vol_log(&f, kind, k, lp).unwrap().sigma();
            prop_assert!((got - s).abs() < 1e-8, "got {} want {}", got, s);
        }

        #[test]
        fn monotone_in_sigma_and_strike(s in 0.05f64..1.5, lk in -2.0f64..2.0) {
            // strict on the out-of-the-money leg, where the premium is resolvable
            let f = unit();
            let k = lk.exp();
            let kind = if k >= 1.0 { OptionKind::Call } else { OptionKind::Put };
            let l1 = bs_log_price(&f, kind, k, Vol::new(s).unwrap()).unwrap();
            let l2 = bs_log_price(&f, kind, k, Vol::new(s * 1.01).unwrap()).unwrap();
            prop_assert!(l2 > l1);
            let c1 = bs_log_price(&f, OptionKind::Call, k, Vol::new(s).unwrap()).unwrap();
            let c3 = bs_log_price(&f, OptionKind::Call, k * 1.01, Vol::new(s).unwrap()).unwrap();
            prop_assert!(c3 <= c1);
            if kind == OptionKind::Call {
                prop_assert!(c3 < c1);
            }
        }

        #[test]
        fn convex_in_strike(s in 0.05f64..1.5, k0 in 0.2f64..3.0) {
            let f = unit();
            let v = Vol::new(s).unwrap();
            let h = 0.01;
            let c: Vec<f64> = (0..3).map(|i| bs_call_price(&f, k0 + h * i as f64, v).unwrap()).collect();
            prop_assert!(c[0] - 2.0 * c[1] + c[2] >= -1e-12);
        }
    }
}
