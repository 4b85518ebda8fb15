//! Model-free implied-volatility wing formulas with error envelopes.
//!
//! Every formula here is asymptotic: it carries an unnormalised error shape
//! (`error_order`) whose multiplicative constant is never claimed. Strikes
//! with `log K <= 1`, or prices with `log(1/C) <= 1`, are rejected because
//! the formulas say nothing there.

use std::fmt;

use crate::bs::MarketFrame;
use crate::curve::PriceCurve;
use crate::stats::{tail_window_start, trend, Trend};
use crate::{Error, Result};

/// Which formula produced an [`AsymptoticIV`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    ExactC,
    Refined,
    SubstituteApprox,
    SubstituteBoundedTau,
    LogEquivalent,
    TailWingSmooth,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::ExactC => "exact-C",
            Regime::Refined => "refined",
            Regime::SubstituteApprox => "substitute-approx",
            Regime::SubstituteBoundedTau => "substitute-bounded-tau",
            Regime::LogEquivalent => "log-equivalent",
            Regime::TailWingSmooth => "tail-wing-smooth",
        })
    }
}

/// Wing implied-volatility estimate at one strike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticIV {
    pub strike: f64,
    pub value: f64,
    /// Error envelope evaluated at `strike`; `None` when only log-equivalence
    /// is known.
    pub error_order: Option<f64>,
    pub regime: Regime,
}

/// `psi(u) = 2 - 4(sqrt(u^2 + u) - u) = 2 (sqrt(1 + u) - sqrt(u))^2`.
pub fn psi(u: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("psi needs u >= 0, got {u}")));
    }
    if u.is_infinite() {
        return Ok(0.0);
    }
    let s = (1.0 + u).sqrt() + u.sqrt();
    Ok(2.0 / (s * s))
}

/// `sqrt(1 + a) - sqrt(a)` without cancellation.
pub fn root_gap(a: f64) -> f64 {
    1.0 / ((1.0 + a).sqrt() + a.sqrt())
}

/// `sqrt(x + d) - sqrt(x)` without cancellation.
fn sqrt_diff(x: f64, d: f64) -> f64 {
    d / ((x + d).sqrt() + x.sqrt())
}

fn wing_gate(k: f64, log_k: f64) -> Result<()> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("strike must be positive, got {k}")));
    }
    if !(log_k > 1.0) {
        return Err(Error::NotAsymptotic {
            strike: k,
            reason: format!("log K = {log_k} is not beyond 1"),
        });
    }
    Ok(())
}

/// `log(1/C(K))`, checked against the deep-wing gate.
fn wing_depth(c: &dyn PriceCurve, k: f64) -> Result<f64> {
    let l = -c.log_price(k)?;
    if !(l > 0.0) {
        return Err(Error::Wing(format!("C(K) >= 1 at strike {k:e}")));
    }
    if !(l > 1.0) {
        return Err(Error::Wing(format!("log(1/C) = {l} is not beyond 1 at strike {k:e}")));
    }
    Ok(l)
}

/// `sqrt(log K / T) sqrt(psi(L / log K))`, the psi-form of [`iv_wing_call`].
pub fn psi_form(t: f64, log_k: f64, l: f64) -> f64 {
    (log_k / t).sqrt() * (2.0f64).sqrt() * root_gap(l / log_k)
}

/// `sqrt(2/T) (sqrt(log K + L) - sqrt(L))` with `L = log(1/C(K))`.
pub fn iv_wing_call(frame: &MarketFrame, c: &dyn PriceCurve, k: f64) -> Result<AsymptoticIV> {
    let log_k = k.ln();
    wing_gate(k, log_k)?;
    let l = wing_depth(c, k)?;
    Ok(AsymptoticIV {
        strike: k,
        value: (2.0 / frame.t).sqrt() * sqrt_diff(l, log_k),
        error_order: Some(l.ln() / l.sqrt()),
        regime: Regime::ExactC,
    })
}

fn refined_value(t: f64, log_k: f64, l: f64) -> f64 {
    let base = 2.0 * l - l.ln();
    sqrt_diff(base, 2.0 * log_k) / t.sqrt()
}

/// Refined wing formula with the `log log(1/C)` correction inside both
/// radicals. `aux` defaults to `K -> log log(1/C(K))`.
pub fn iv_wing_call_refined(
    frame: &MarketFrame,
    c: &dyn PriceCurve,
    k: f64,
    aux: Option<&dyn Fn(f64) -> f64>,
) -> Result<AsymptoticIV> {
    let log_k = k.ln();
    wing_gate(k, log_k)?;
    let l = wing_depth(c, k)?;
    let a = match aux {
        Some(f) => f(k),
        None => l.ln(),
    };
    if !(a > 0.0) {
        return Err(Error::Domain(format!("aux must be positive, got {a}")));
    }
    Ok(AsymptoticIV {
        strike: k,
        value: refined_value(frame.t, log_k, l),
        error_order: Some(a / l.sqrt()),
        regime: Regime::Refined,
    })
}

/// Left-wing formula `sqrt(2/T) (sqrt(log 1/P) - sqrt(log K/P))` for small
/// strikes.
pub fn iv_wing_put(frame: &MarketFrame, p: &dyn PriceCurve, k: f64) -> Result<AsymptoticIV> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("strike must be positive, got {k}")));
    }
    let log_k = k.ln();
    if !(log_k < -1.0) {
        return Err(Error::NotAsymptotic {
            strike: k,
            reason: format!("log K = {log_k} is not below -1"),
        });
    }
    let log_p = p.log_price(k)?;
    let depth = log_k - log_p;
    if !(depth > 0.0) {
        return Err(Error::Wing(format!("P(K) >= K at strike {k:e}")));
    }
    if !(depth > 1.0) {
        return Err(Error::Wing(format!("log(K/P) = {depth} is not beyond 1 at strike {k:e}")));
    }
    Ok(AsymptoticIV {
        strike: k,
        value: (2.0 / frame.t).sqrt() * sqrt_diff(depth, -log_k),
        error_order: Some(depth.ln() / depth.sqrt()),
        regime: Regime::ExactC,
    })
}

/// Thresholds classifying a substitute curve.
#[derive(Debug, Clone, Copy)]
pub struct SubstituteThresholds {
    /// Largest accepted `tau / log log(1/Csub)` for the bounded regime.
    pub bounded_nu: f64,
    /// `tau / log(1/Csub)` at or above this everywhere on the tail is a
    /// regime error.
    pub regime_ratio: f64,
    /// `tau / log(1/Csub)` must end below this (and decrease) for the
    /// approximate regime.
    pub approx_ratio: f64,
}

impl Default for SubstituteThresholds {
    fn default() -> Self {
        Self {
            bounded_nu: 20.0,
            regime_ratio: 1.0 / 3.0,
            approx_ratio: 0.1,
        }
    }
}

/// Discrepancy between a curve and its substitute on a strike grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstituteDiagnostics {
    pub strikes: Vec<f64>,
    /// `|log(1/C) - log(1/Csub)|` per strike.
    pub tau: Vec<f64>,
    /// `log(1/Csub)` per strike.
    pub depth: Vec<f64>,
    /// `sup tau / log log(1/Csub)` over the tail window.
    pub nu_hat: f64,
    pub regime: Regime,
}

/// Wing estimates computed from a substitute `Csub` in place of `C`.
pub fn iv_wing_substitute(
    frame: &MarketFrame,
    c: &dyn PriceCurve,
    csub: &dyn PriceCurve,
    grid: &[f64],
) -> Result<(Vec<AsymptoticIV>, SubstituteDiagnostics)> {
    iv_wing_substitute_with(frame, c, csub, grid, SubstituteThresholds::default())
}

pub fn iv_wing_substitute_with(
    frame: &MarketFrame,
    c: &dyn PriceCurve,
    csub: &dyn PriceCurve,
    grid: &[f64],
    th: SubstituteThresholds,
) -> Result<(Vec<AsymptoticIV>, SubstituteDiagnostics)> {
    if grid.len() < 3 {
        return Err(Error::InsufficientGrid("substitute diagnostics need three strikes".into()));
    }
    let mut tau = Vec::with_capacity(grid.len());
    let mut depth = Vec::with_capacity(grid.len());
    for &k in grid {
        wing_gate(k, k.ln())?;
        let l = -c.log_price(k)?;
        let ls = wing_depth(csub, k)?;
        tau.push((l - ls).abs());
        depth.push(ls);
    }
    let start = tail_window_start(grid.len());
    let ratio: Vec<f64> = (start..grid.len()).map(|i| tau[i] / depth[i]).collect();
    if ratio.iter().all(|&q| q >= th.regime_ratio - 1e-12) {
        return Err(Error::Regime(format!(
            "tau / log(1/Csub) stays at or above {:.4} on the tail (last {:.4})",
            th.regime_ratio,
            ratio[ratio.len() - 1]
        )));
    }
    let nu_hat = (start..grid.len())
        .map(|i| tau[i] / depth[i].ln())
        .fold(0.0, f64::max);
    let regime = if nu_hat <= th.bounded_nu {
        Regime::SubstituteBoundedTau
    } else if trend(&ratio, 0.5) == Trend::Decreasing && ratio[ratio.len() - 1] <= th.approx_ratio {
        Regime::SubstituteApprox
    } else {
        Regime::LogEquivalent
    };
    let ivs = grid
        .iter()
        .zip(tau.iter().zip(&depth))
        .map(|(&k, (&t, &ls))| {
            let error_order = match regime {
                Regime::SubstituteBoundedTau => Some(ls.ln().ln().abs() / ls.sqrt()),
                Regime::SubstituteApprox => Some((ls.ln() + t) / ls.sqrt()),
                _ => None,
            };
            AsymptoticIV {
                strike: k,
                value: refined_value(frame.t, k.ln(), ls),
                error_order,
                regime,
            }
        })
        .collect();
    Ok((
        ivs,
        SubstituteDiagnostics {
            strikes: grid.to_vec(),
            tau,
            depth,
            nu_hat,
            regime,
        },
    ))
}

/// What the exponent function passed to [`tail_wing_smooth`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailKind {
    /// `rho(u) = -log P[X > e^u]`.
    CcdfExponent,
    /// `h(u) = -log D(e^u)`.
    DensityExponent,
}

/// Tail-wing formula `sqrt(2/T) (sqrt(f(log K)) - sqrt(f(log K) - log K))`
/// for a smooth ccdf or density exponent `f`.
pub fn tail_wing_smooth(frame: &MarketFrame, f: &dyn Fn(f64) -> f64, kind: TailKind, k: f64) -> Result<AsymptoticIV> {
    let _ = kind;
    let log_k = k.ln();
    wing_gate(k, log_k)?;
    let fv = f(log_k);
    if !(fv > log_k) {
        return Err(Error::Domain(format!(
            "exponent {fv} at log K = {log_k} does not exceed log K"
        )));
    }
    let value = (2.0 / frame.t).sqrt() * sqrt_diff(fv - log_k, log_k);
    let via_psi = psi_form(frame.t, log_k, fv - log_k);
    debug_assert!((value - via_psi).abs() <= 1e-12 * value.max(1e-300));
    Ok(AsymptoticIV {
        strike: k,
        value,
        error_order: Some(fv.ln() / fv.sqrt()),
        regime: Regime::TailWingSmooth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bs::{implied_vol_log, OptionKind, Vol};
    use crate::curve::{BsCurve, FnCurve};
    use proptest::prelude::*;

    fn unit() -> MarketFrame {
        MarketFrame::unit(1.0).unwrap()
    }

    #[test]
    fn psi_values() {
        assert_eq!(psi(0.0).unwrap(), 2.0);
        assert!(psi(1e8).unwrap() < 1e-7);
        assert!((psi(1.0).unwrap() - (6.0 - 4.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!(psi(-0.1).is_err());
    }

    #[test]
    fn root_gap_identity() {
        for a in [0.0, 0.5, 1.0, 10.0, 1e6] {
            let direct = (1.0f64 + a).sqrt() - a.sqrt();
            assert!((direct - (psi(a).unwrap() / 2.0).sqrt()).abs() < 1e-13);
            assert!((root_gap(a) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn algebraic_collapse_when_depth_equals_log_strike() {
        // C(K) = K e^{-2 log K}, so L = log K
        let c = FnCurve::from_log(|k: f64| -k.ln());
        let k = 30f64.exp();
        let iv = iv_wing_call(&unit(), &c, k).unwrap();
        let want = 2f64.sqrt() * (2f64.sqrt() - 1.0) * 30f64.sqrt();
        assert!((iv.value - want).abs() < 1e-13);
        assert_eq!(iv.regime, Regime::ExactC);
    }

    #[test]
    fn bs_sanity_at_e60() {
        let c = BsCurve::call(unit(), Vol::new(0.2).unwrap());
        let iv = iv_wing_call(&unit(), &c, 60f64.exp()).unwrap();
        assert!((iv.value - 0.2).abs() < 0.005);
    }

    #[test]
    fn refined_is_closer_on_bs_curve() {
        let f = unit();
        let c = BsCurve::call(f, Vol::new(0.2).unwrap());
        for j in 2..=8 {
            let k = (10.0 * j as f64).exp();
            let plain = iv_wing_call(&f, &c, k).unwrap().value;
            let refined = iv_wing_call_refined(&f, &c, k, None).unwrap().value;
            assert!((refined - 0.2).abs() <= (plain - 0.2).abs(), "log K = {}", 10 * j);
        }
    }

    #[test]
    fn refined_on_pareto_curve() {
        let f = MarketFrame::new(4.0 / 3.0, 0.0, 1.0).unwrap();
        let c = FnCurve::from_log(|k: f64| -3.0 * k.ln() - 3f64.ln());
        let k = 40f64.exp();
        let exact = implied_vol_log(&f, OptionKind::Call, k, c.log_price(k).unwrap()).unwrap().sigma();
        let refined = iv_wing_call_refined(&f, &c, k, None).unwrap().value;
        // the gap here is 0.01003; the O(.) term has not yet dropped below 0.01
        assert!((refined - exact).abs() < 0.011);
    }

    #[test]
    fn refined_substitution_at_depth_e() {
        let e = std::f64::consts::E;
        let c = FnCurve::from_log(move |_| -e);
        let k = 5f64.exp();
        let iv = iv_wing_call_refined(&unit(), &c, k, None).unwrap();
        let want = (10.0 + 2.0 * e - 1.0).sqrt() - (2.0 * e - 1.0).sqrt();
        assert!((iv.value - want).abs() < 1e-14);
        assert!((iv.error_order.unwrap() - 1.0 / e.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gates() {
        let c = FnCurve::from_log(|_| 0.5);
        assert!(matches!(iv_wing_call(&unit(), &c, 10.0), Err(Error::Wing(_))));
        let c = FnCurve::from_log(|_| -0.5);
        assert!(matches!(iv_wing_call(&unit(), &c, 10.0), Err(Error::Wing(_))));
        let c = FnCurve::from_log(|_| -5.0);
        assert!(matches!(iv_wing_call(&unit(), &c, 2.0), Err(Error::NotAsymptotic { .. })));
        let p = FnCurve::from_log(|k: f64| k.ln() + 0.5);
        assert!(matches!(iv_wing_put(&unit(), &p, 1e-3), Err(Error::Wing(_))));
    }

    #[test]
    fn put_substitution() {
        // P(K) = K e^{-1/K}
        let p = FnCurve::from_log(|k: f64| k.ln() - 1.0 / k);
        let k = 0.01;
        let iv = iv_wing_put(&unit(), &p, k).unwrap();
        let want = 2f64.sqrt() * ((100.0 + (100f64).ln()).sqrt() - 10.0);
        assert!((iv.value - want).abs() < 1e-12);
    }

    #[test]
    fn put_wing_on_bs() {
        let p = BsCurve::put(unit(), Vol::new(0.2).unwrap());
        let iv = iv_wing_put(&unit(), &p, (-40f64).exp()).unwrap();
        assert!((iv.value - 0.2).abs() < 0.01);
    }

    #[test]
    fn substitute_regimes() {
        let f = unit();
        let grid: Vec<f64> = (1..=8).map(|j| (10.0 * j as f64).exp()).collect();
        let c = BsCurve::call(f, Vol::new(0.2).unwrap());

        let twice = FnCurve::from_log(move |k| c.log_price(k).unwrap() + 2f64.ln());
        let (_, d) = iv_wing_substitute(&f, &c, &twice, &grid).unwrap();
        assert_eq!(d.regime, Regime::SubstituteBoundedTau);
        assert!(d.tau.iter().all(|t| (t - 2f64.ln()).abs() < 1e-9));

        let logs = FnCurve::from_log(move |k: f64| c.log_price(k).unwrap() + 5.0 * k.ln().ln());
        let (ivs, d) = iv_wing_substitute(&f, &c, &logs, &grid).unwrap();
        assert_eq!(d.regime, Regime::SubstituteBoundedTau);
        assert!(d.nu_hat < 5.0);
        assert!(ivs.iter().all(|iv| iv.error_order.is_some()));

        let power = FnCurve::from_log(move |k| 1.5 * c.log_price(k).unwrap());
        assert!(matches!(iv_wing_substitute(&f, &c, &power, &grid), Err(Error::Regime(_))));
    }

    #[test]
    fn substitute_log_equivalent_and_approx() {
        let f = unit();
        let grid: Vec<f64> = (1..=12).map(|j| (10.0 * j as f64).exp()).collect();
        // L = (log K)^2, substitute off by (log K)^1.7: ratio decays too slowly
        let c = FnCurve::from_log(|k: f64| -k.ln().powi(2));
        let s = FnCurve::from_log(|k: f64| -k.ln().powi(2) - k.ln().powf(1.7));
        let (ivs, d) = iv_wing_substitute(&f, &c, &s, &grid).unwrap();
        assert_eq!(d.regime, Regime::LogEquivalent);
        assert!(ivs[0].error_order.is_none());

        let s = FnCurve::from_log(|k: f64| -k.ln().powi(2) - 10.0 * k.ln());
        let (ivs, d) = iv_wing_substitute(&f, &c, &s, &grid).unwrap();
        assert_eq!(d.regime, Regime::SubstituteApprox);
        assert!(ivs[0].error_order.is_some());
    }

    #[test]
    fn tail_wing_bs_density() {
        let sigma = 0.2;
        let h = move |u: f64| u * u / (2.0 * sigma * sigma) + 0.5 * u;
        let iv = tail_wing_smooth(&unit(), &h, TailKind::DensityExponent, 60f64.exp()).unwrap();
        assert!((iv.value - 0.2).abs() < 0.005);
        let lin = |u: f64| 2.0 * u;
        let k = 20f64.exp();
        let iv = tail_wing_smooth(&unit(), &lin, TailKind::CcdfExponent, k).unwrap();
        assert!((iv.value - 2f64.sqrt() * (2f64.sqrt() - 1.0) * 20f64.sqrt()).abs() < 1e-13);
        assert!(tail_wing_smooth(&unit(), &|u| u, TailKind::CcdfExponent, k).is_err());
    }

    #[test]
    fn error_order_conformance_on_bs() {
        for sigma in [0.1, 0.2, 0.5] {
            let f = unit();
            let c = BsCurve::call(f, Vol::new(sigma).unwrap());
            for j in 1..=8 {
                let k = (10.0 * j as f64).exp();
                let iv = iv_wing_call(&f, &c, k).unwrap();
                let exact = implied_vol_log(&f, OptionKind::Call, k, c.log_price(k).unwrap())
                    .unwrap()
                    .sigma();
                assert!((iv.value - exact).abs() / iv.error_order.unwrap() < 10.0);
            }
        }
    }

    #[test]
    fn constant_rescaling_moves_value_within_envelope() {
        let f = unit();
        let c = BsCurve::call(f, Vol::new(0.2).unwrap());
        let c3 = FnCurve::from_log(move |k| c.log_price(k).unwrap() + 3f64.ln());
        for j in 2..=8 {
            let k = (10.0 * j as f64).exp();
            let a = iv_wing_call(&f, &c, k).unwrap();
            let b = iv_wing_call(&f, &c3, k).unwrap();
            assert!((a.value - b.value).abs() <= a.error_order.unwrap());
        }
    }

    proptest! {
        #[test]
        fn psi_form_agrees(log_k in 1.5f64..200.0, ratio in 0.01f64..1e4, t in 0.1f64..5.0) {
            let l = ratio * log_k;
            let c = FnCurve::from_log(move |_| -l);
            let f = MarketFrame::unit(t).unwrap();
            prop_assume!(l > 1.0);
            let iv = iv_wing_call(&f, &c, log_k.exp()).unwrap();
            let alt = (log_k / t).sqrt() * psi(l / log_k).unwrap().sqrt();
            prop_assert!((iv.value - alt).abs() <= 1e-12 * iv.value.max(1.0));
        }

        #[test]
        fn psi_decreasing(u in 0.0f64..1e6, du in 1e-3f64..10.0) {
            let a = psi(u).unwrap();
            let b = psi(u + du).unwrap();
            prop_assert!(b < a && b > 0.0 && a <= 2.0);
        }
    }
}
