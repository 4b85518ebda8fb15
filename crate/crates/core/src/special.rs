//! Normal distribution helpers that stay accurate deep in the tails.
//!
//! Far-tail probabilities are represented through the Mills ratio
//! `R(x) = N(-x) / phi(x)`, evaluated by continued fraction for `x >= 3`
//! and by the complementary error function below that.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;
const CF_SWITCH: f64 = 3.0;

/// Standard normal density.
pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

/// Natural logarithm of the standard normal density.
pub fn log_norm_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// Standard normal distribution function `N(z)`.
pub fn norm_cdf(z: f64) -> f64 {
    if z < -CF_SWITCH {
        norm_pdf(z) * mills_ratio(-z)
    } else if z > CF_SWITCH {
        1.0 - norm_pdf(z) * mills_ratio(z)
    } else {
        0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
    }
}

/// `log N(z)`, finite for every finite `z`.
pub fn log_norm_cdf(z: f64) -> f64 {
    if z < -CF_SWITCH {
        log_norm_pdf(z) + mills_ratio(-z).ln()
    } else if z > CF_SWITCH {
        (-norm_pdf(z) * mills_ratio(z)).ln_1p()
    } else {
        (0.5 * libm::erfc(-z * FRAC_1_SQRT_2)).ln()
    }
}

/// Mills ratio `R(x) = N(-x) / phi(x)` for `x >= 0`.
pub fn mills_ratio(x: f64) -> f64 {
    if x >= CF_SWITCH {
        1.0 / (x + mills_tail_cf(x))
    } else {
        0.5 * libm::erfc(x * FRAC_1_SQRT_2) * (2.0 * PI).sqrt() * (0.5 * x * x).exp()
    }
}

/// `S(x) = 1/R(x) - x`, computed without cancellation.
///
/// Satisfies `1 - x R(x) = R(x) S(x)`, which is the (positive) derivative
/// of `-R`.
pub fn mills_tail(x: f64) -> f64 {
    if x >= CF_SWITCH {
        mills_tail_cf(x)
    } else {
        1.0 / mills_ratio(x) - x
    }
}

// S(x) = 1/(x + 2/(x + 3/(x + ...))), modified Lentz.
fn mills_tail_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = f;
    let mut d = 0.0;
    for j in 1..20_000 {
        let a = (j + 1) as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// `R(a) - R(b)` for `1 <= a <= b`, accurate when `b - a` is small.
///
/// Uses `R' = -R S` and Gauss-Legendre integration over `[a, b]` when the
/// interval is short compared to `a`.
pub fn mills_diff(a: f64, b: f64) -> f64 {
    debug_assert!(a <= b);
    if b - a > 0.25 * a {
        return mills_ratio(a) - mills_ratio(b);
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let (nodes, weights) = gauss_legendre_20();
    nodes
        .iter()
        .zip(weights)
        .map(|(&t, &w)| {
            let x = mid + half * t;
            w * mills_ratio(x) * mills_tail(x)
        })
        .sum::<f64>()
        * half
}

/// Nodes and weights of the 20-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre_20() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(20))
}

/// Gauss-Legendre rule of order `n` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `log(exp(a) + exp(b))` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `log(exp(a) - exp(b))` for `a >= b`.
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    a + (-(b - a).exp()).ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_at_zero_is_half() {
        assert_eq!(norm_cdf(0.0), 0.5);
    }

    #[test]
    fn cdf_reference_values() {
        // 40-digit reference values
        let cases = [
            (0.1, 0.539_827_837_277_029),
            (-1.5, 0.066_807_201_268_858_07),
            (-3.5, 2.326_290_790_355_250_4e-4),
            (-10.0, 7.619_853_024_160_526e-24),
        ];
        for (z, want) in cases {
            let got = norm_cdf(z);
            assert!((got - want).abs() <= 1e-15, "z={z}: {got} vs {want}");
            assert!(((got - want) / want).abs() < 1e-13, "z={z}: {got} vs {want}");
        }
        assert!(norm_cdf(8.0) > 1.0 - 1e-15);
    }

    #[test]
    fn log_cdf_far_tail() {
        assert!((log_norm_cdf(-40.0) - (-804.608_442_013_753_8)).abs() < 1e-10);
        assert!((log_norm_cdf(-1000.0) - (-500_007.826_694_812_2)).abs() < 1e-7);
    }

    #[test]
    fn symmetry_of_cdf() {
        for i in -80..=80 {
            let z = i as f64 * 0.1;
            assert!((norm_cdf(z) + norm_cdf(-z) - 1.0).abs() < 2e-16);
        }
    }

    #[test]
    fn mills_branches_agree_at_switch() {
        let a = 0.5 * libm::erfc(3.0 * FRAC_1_SQRT_2) * (2.0 * PI).sqrt() * 4.5f64.exp();
        let b = 1.0 / (3.0 + mills_tail_cf(3.0));
        assert!(((a - b) / a).abs() < 1e-14);
    }

    #[test]
    fn mills_diff_matches_direct_difference() {
        for &(a, b) in &[(1.0, 1.2), (2.9, 3.1), (5.0, 5.5), (40.0, 40.2)] {
            let direct = mills_ratio(a) - mills_ratio(b);
            let quad = mills_diff(a, b);
            assert!(((direct - quad) / quad).abs() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(20);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(38)).sum();
        assert!((s - 2.0 / 39.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }
}
