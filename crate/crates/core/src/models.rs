//! Pareto-type tails of the uncorrelated Stein-Stein, Heston and Hull-White
//! models, the call-price asymptotics they imply, and a Monte Carlo engine
//! for the underlying stochastic-volatility systems.
//!
//! Tail constants are inputs. Every density here is the leading term only,
//! i.e. the asymptotic formula with its `1 + O(.)` factor dropped.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::bs::MarketFrame;
use crate::tail_index::{log_call_from_payoff, log_ccdf_at_log, DistributionSpec};
use crate::{Error, Result};

/// Stein-Stein density tail `B0 (log x)^{-1/2} e^{B2 sqrt(log x)} x^{-B3}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteinSteinTail {
    pub b0: f64,
    pub b2: f64,
    pub b3: f64,
}

impl SteinSteinTail {
    pub fn new(b0: f64, b2: f64, b3: f64) -> Result<Self> {
        if !(b0 > 0.0 && b2 >= 0.0 && b3 > 2.0) {
            return Err(Error::Domain(format!(
                "Stein-Stein tail needs B0 > 0, B2 >= 0, B3 > 2 (got {b0}, {b2}, {b3})"
            )));
        }
        Ok(Self { b0, b2, b3 })
    }
}

/// Heston density tail `A0 (log x)^{-3/4 + qm/c^2} e^{A2 sqrt(log x)} x^{-A3}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HestonTail {
    pub a0: f64,
    pub a2: f64,
    pub a3: f64,
    pub q: f64,
    pub m: f64,
    pub c: f64,
}

impl HestonTail {
    pub fn new(a0: f64, a2: f64, a3: f64, q: f64, m: f64, c: f64) -> Result<Self> {
        if !(a0 > 0.0 && a2 >= 0.0 && a3 > 2.0 && q >= 0.0 && m >= 0.0 && c > 0.0) {
            return Err(Error::Domain(format!(
                "Heston tail needs A0 > 0, A2 >= 0, A3 > 2, q >= 0, m >= 0, c > 0 \
                 (got {a0}, {a2}, {a3}, {q}, {m}, {c})"
            )));
        }
        let s = Self { a0, a2, a3, q, m, c };
        if !s.log_power().is_finite() {
            return Err(Error::Domain("exponent -3/4 + qm/c^2 is not finite".into()));
        }
        Ok(s)
    }

    /// `-3/4 + qm/c^2`.
    pub fn log_power(&self) -> f64 {
        -0.75 + self.q * self.m / (self.c * self.c)
    }
}

/// Hull-White density tail
/// `C0 x^-2 (log x)^{(c2-1)/2} (log log x)^{c3} exp{-(a + log(a)/2)^2 / (2 t xi^2)}`
/// with `a = log[(1/y0) sqrt(2 log x / t)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullWhiteTail {
    pub c0: f64,
    pub c2: f64,
    pub c3: f64,
    pub xi: f64,
    pub y0: f64,
    pub t: f64,
}

impl HullWhiteTail {
    pub fn new(c0: f64, c2: f64, c3: f64, xi: f64, y0: f64, t: f64) -> Result<Self> {
        if !(c0 > 0.0 && c2.is_finite() && c3.is_finite() && xi > 0.0 && y0 > 0.0 && t > 0.0) {
            return Err(Error::Domain(format!(
                "Hull-White tail needs C0, xi, y0, t > 0 and finite c2, c3 \
                 (got {c0}, {c2}, {c3}, {xi}, {y0}, {t})"
            )));
        }
        Ok(Self { c0, c2, c3, xi, y0, t })
    }

    // log[(1/y0) sqrt(2 u / t)]
    fn inner(&self, u: f64) -> f64 {
        -self.y0.ln() + 0.5 * (2.0 * u / self.t).ln()
    }

    fn gauss(&self, u: f64) -> f64 {
        let a = self.inner(u);
        let w = a + 0.5 * a.ln();
        w * w / (2.0 * self.t * self.xi * self.xi)
    }

    /// `b(u)` with `D(x) = x^-2 exp{-b(log x)}`.
    pub fn b(&self, u: f64) -> f64 {
        -self.c0.ln() - 0.5 * (self.c2 - 1.0) * u.ln() - self.c3 * u.ln().ln() + self.gauss(u)
    }

    // log((1/y0) sqrt(2/t))
    fn ell(&self) -> f64 {
        -self.y0.ln() + 0.5 * (2.0 / self.t).ln()
    }

    /// `B(v) = b(e^v)`.
    pub fn big_b(&self, v: f64) -> f64 {
        let s = self.ell() + 0.5 * v;
        let w = s + 0.5 * s.ln();
        -self.c0.ln() - 0.5 * (self.c2 - 1.0) * v - self.c3 * v.ln()
            + w * w / (2.0 * self.t * self.xi * self.xi)
    }

    /// `B'(v)`.
    pub fn big_b_prime(&self, v: f64) -> f64 {
        let s = self.ell() + 0.5 * v;
        let w = s + 0.5 * s.ln();
        let dw = 0.5 + 0.25 / s;
        -0.5 * (self.c2 - 1.0) - self.c3 / v + w * dw / (self.t * self.xi * self.xi)
    }
}

/// One of the three model tails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel {
    SteinStein(SteinSteinTail),
    Heston(HestonTail),
    HullWhite(HullWhiteTail),
}

impl TailModel {
    /// Smallest `log x` (exclusive) at which the leading term is defined.
    pub fn log_floor(&self) -> f64 {
        match self {
            TailModel::SteinStein(_) | TailModel::Heston(_) => 0.0,
            TailModel::HullWhite(h) => (0.5 * h.t * h.y0 * h.y0).max(1.0),
        }
    }

    /// Power index `beta` in `D(x) ~ x^-beta h(x)`.
    pub fn beta(&self) -> f64 {
        match self {
            TailModel::SteinStein(s) => s.b3,
            TailModel::Heston(h) => h.a3,
            TailModel::HullWhite(_) => 2.0,
        }
    }

    /// Pareto-type index of the survival function.
    pub fn alpha(&self) -> f64 {
        self.beta() - 1.0
    }

    fn check(&self, u: f64) -> Result<()> {
        let floor = self.log_floor();
        if u > floor && u.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "log x = {u} is not above the model floor {floor}"
            )))
        }
    }

    /// `log h(e^u)`, the slowly varying factor.
    pub fn log_h(&self, u: f64) -> Result<f64> {
        self.check(u)?;
        Ok(match self {
            TailModel::SteinStein(s) => s.b0.ln() - 0.5 * u.ln() + s.b2 * u.sqrt(),
            TailModel::Heston(h) => h.a0.ln() + h.log_power() * u.ln() + h.a2 * u.sqrt(),
            TailModel::HullWhite(h) => -h.b(u),
        })
    }

    /// `log D(e^u)`.
    pub fn log_density(&self, u: f64) -> Result<f64> {
        Ok(self.log_h(u)? - self.beta() * u)
    }

    /// The leading-term density as a [`DistributionSpec`] supported above the
    /// floor. It is not normalised; only tail functionals are meaningful.
    pub fn spec(&self) -> DistributionSpec {
        let model = *self;
        let floor = self.log_floor();
        DistributionSpec::new(
            move |u| model.log_density(u).unwrap_or(f64::NEG_INFINITY),
            floor.exp(),
            f64::INFINITY,
        )
        .expect("floor is finite")
    }
}

/// Leading-term density at `x`.
pub fn tail_density(model: &TailModel, x: f64) -> Result<f64> {
    Ok(log_tail_density(model, x.ln())?.exp())
}

/// `log D(e^u)`.
pub fn log_tail_density(model: &TailModel, log_x: f64) -> Result<f64> {
    model.log_density(log_x)
}

/// Pareto-type index and leading term `y^{-alpha} h(y) / alpha` of the
/// survival function.
pub fn pareto_tail(model: &TailModel, y: f64) -> Result<(f64, f64)> {
    let (alpha, l) = log_pareto_tail(model, y.ln())?;
    Ok((alpha, l.exp()))
}

/// [`pareto_tail`] with the value in logs, at `log y`.
pub fn log_pareto_tail(model: &TailModel, log_y: f64) -> Result<(f64, f64)> {
    let alpha = model.alpha();
    Ok((alpha, model.log_h(log_y)? - alpha * log_y - alpha.ln()))
}

/// Survival function of the leading-term density by quadrature, in logs.
pub fn log_quadrature_ccdf(model: &TailModel, log_y: f64) -> Result<f64> {
    model.check(log_y)?;
    log_ccdf_at_log(&model.spec(), log_y)
}

/// Call price of the leading-term density by payoff quadrature, in logs.
pub fn log_quadrature_call(frame: &MarketFrame, model: &TailModel, k: f64) -> Result<f64> {
    model.check(k.ln())?;
    log_call_from_payoff(frame, &model.spec(), k)
}

/// Leading-term call price at a large strike.
pub fn call_wing_price(frame: &MarketFrame, model: &TailModel, k: f64) -> Result<f64> {
    Ok(log_call_wing_price(frame, model, k)?.exp())
}

/// Logarithm of [`call_wing_price`].
pub fn log_call_wing_price(frame: &MarketFrame, model: &TailModel, k: f64) -> Result<f64> {
    let lk = k.ln();
    model.check(lk)?;
    let disc = -frame.r * frame.t;
    Ok(match model {
        TailModel::SteinStein(_) | TailModel::Heston(_) => {
            let beta = model.beta();
            disc + model.log_h(lk)? + (2.0 - beta) * lk - ((beta - 1.0) * (beta - 2.0)).ln()
        }
        TailModel::HullWhite(h) => {
            if (h.t - frame.t).abs() > 1e-12 * h.t {
                return Err(Error::Domain(format!(
                    "Hull-White tail is for expiry {} but the frame has {}",
                    h.t, frame.t
                )));
            }
            let llk = lk.ln();
            disc + (4.0 * h.t * h.xi * h.xi * h.c0).ln() + 0.5 * (h.c2 + 1.0) * llk
                + (h.c3 - 1.0) * llk.ln()
                - h.gauss(lk)
        }
    })
}

/// `e^{-rT} K^{beta+2} h(K) / ((beta+1)(beta+2))` for a density
/// `x^beta h(x)` with `beta < -2`.
pub fn rv_call_asympt(frame: &MarketFrame, beta: f64, h: &dyn Fn(f64) -> f64, k: f64) -> Result<f64> {
    if !(beta < -2.0) {
        return Err(Error::Domain(format!(
            "density index {beta} must be below -2 for a finite call price"
        )));
    }
    if !(k > 0.0) {
        return Err(Error::Domain(format!("strike must be positive, got {k}")));
    }
    Ok(frame.discount() * k.powf(beta + 2.0) * h(k) / ((beta + 1.0) * (beta + 2.0)))
}

/// `e^{-rT} exp{-b(log K)} log K / B'(log log K)` for a density
/// `x^-2 exp{-b(log x)}` with `b(u) = B(log u)`.
pub fn logscale_call_asympt(
    frame: &MarketFrame,
    b: &dyn Fn(f64) -> f64,
    b_prime: &dyn Fn(f64) -> f64,
    k: f64,
) -> Result<f64> {
    Ok(log_logscale_call_asympt(frame, b, b_prime, k)?.exp())
}

/// Logarithm of [`logscale_call_asympt`].
pub fn log_logscale_call_asympt(
    frame: &MarketFrame,
    b: &dyn Fn(f64) -> f64,
    b_prime: &dyn Fn(f64) -> f64,
    k: f64,
) -> Result<f64> {
    let lk = k.ln();
    if !(lk > 1.0) {
        return Err(Error::Domain(format!("log log K undefined or negative at K = {k}")));
    }
    let d = b_prime(lk.ln());
    if !(d > 0.0) {
        return Err(Error::Domain(format!("B'(log log K) = {d} is not positive at K = {k}")));
    }
    Ok(-frame.r * frame.t - b(lk) + lk.ln() - d.ln())
}

/// Stochastic-volatility dynamics driving `dX = r X dt + vol X dW` with an
/// independent Brownian motion in the volatility equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SdeModel {
    /// `dY = nu Y dt + xi Y dZ`, `vol = Y`.
    HullWhite { nu: f64, xi: f64 },
    /// `dY = q (m - Y) dt + sigma dZ`, `vol = |Y|`.
    SteinStein { q: f64, m: f64, sigma: f64 },
    /// `dY = q (m - Y) dt + c sqrt(Y) dZ`, `vol = sqrt(Y)`.
    Heston { q: f64, m: f64, c: f64 },
}

/// Simulation set-up; `x0`, `r` and `T` come from the [`MarketFrame`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeSpec {
    pub model: SdeModel,
    pub y0: f64,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
}

pub const MIN_STEPS: usize = 100;

impl SdeSpec {
    pub fn new(model: SdeModel, y0: f64, steps: usize, paths: usize, seed: u64) -> Result<Self> {
        let s = Self { model, y0, steps, paths, seed };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.steps < MIN_STEPS {
            return Err(Error::Domain(format!(
                "at least {MIN_STEPS} time steps are required, got {}",
                self.steps
            )));
        }
        if self.paths < 2 {
            return Err(Error::Domain("at least two paths are required".into()));
        }
        let ok = match self.model {
            SdeModel::HullWhite { nu, xi } => nu.is_finite() && xi >= 0.0 && self.y0 > 0.0,
            SdeModel::SteinStein { q, m, sigma } => {
                q >= 0.0 && m.is_finite() && sigma >= 0.0 && self.y0.is_finite()
            }
            SdeModel::Heston { q, m, c } => q >= 0.0 && m >= 0.0 && c >= 0.0 && self.y0 >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid model parameters {self:?}")))
        }
    }
}

/// A Monte Carlo estimate and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    fn from_sample(xs: impl Iterator<Item = f64>) -> Self {
        let (mut n, mut mean, mut m2) = (0.0f64, 0.0f64, 0.0f64);
        for x in xs {
            n += 1.0;
            let d = x - mean;
            mean += d / n;
            m2 += d * (x - mean);
        }
        Self {
            value: mean,
            std_error: (m2 / (n - 1.0) / n).sqrt(),
        }
    }

    /// Whether `target` lies within `k` standard errors.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

/// Terminal sample of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub terminal: Vec<f64>,
    pub frame: MarketFrame,
}

impl McResult {
    /// `e^{-rT} X_T` averaged; a martingale gives `x0`.
    pub fn discounted_mean(&self) -> Estimate {
        let d = self.frame.discount();
        Estimate::from_sample(self.terminal.iter().map(|x| d * x))
    }

    pub fn call_price(&self, k: f64) -> Estimate {
        let d = self.frame.discount();
        Estimate::from_sample(self.terminal.iter().map(|x| d * (x - k).max(0.0)))
    }

    pub fn put_price(&self, k: f64) -> Estimate {
        let d = self.frame.discount();
        Estimate::from_sample(self.terminal.iter().map(|x| d * (k - x).max(0.0)))
    }
}

/// Simulates terminal prices: log-Euler for `X`, Euler for Stein-Stein,
/// full-truncation Euler for Heston and the exact lognormal step for the
/// Hull-White volatility. Path `i` draws from its own ChaCha stream, so the
/// sample does not depend on thread scheduling.
pub fn mc_paths(spec: &SdeSpec, frame: &MarketFrame) -> Result<McResult> {
    spec.validate()?;
    let terminal = (0..spec.paths)
        .into_par_iter()
        .map(|i| simulate_path(spec, frame, i))
        .collect::<Result<Vec<f64>>>()?;
    Ok(McResult {
        terminal,
        frame: *frame,
    })
}

fn simulate_path(spec: &SdeSpec, frame: &MarketFrame, path: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(path as u64);
    let dt = frame.t / spec.steps as f64;
    let sq = dt.sqrt();
    let mut lx = frame.x0.ln();
    let mut y = spec.y0;
    for step in 0..spec.steps {
        let dw: f64 = StandardNormal.sample(&mut rng);
        let dz: f64 = StandardNormal.sample(&mut rng);
        let var = match spec.model {
            SdeModel::HullWhite { nu, xi } => {
                let v = y * y;
                y *= ((nu - 0.5 * xi * xi) * dt + xi * sq * dz).exp();
                v
            }
            SdeModel::SteinStein { q, m, sigma } => {
                let v = y * y;
                y += q * (m - y) * dt + sigma * sq * dz;
                v
            }
            SdeModel::Heston { q, m, c } => {
                let yp = y.max(0.0);
                y += q * (m - yp) * dt + c * yp.sqrt() * sq * dz;
                yp
            }
        };
        lx += (frame.r - 0.5 * var) * dt + var.sqrt() * sq * dw;
        if !(lx.is_finite() && y.is_finite() && lx < 700.0) {
            return Err(Error::Instability {
                path,
                step,
                guidance: format!(
                    "increase the step count (currently {}) or reduce the volatility parameters",
                    spec.steps
                ),
            });
        }
    }
    Ok(lx.exp())
}
