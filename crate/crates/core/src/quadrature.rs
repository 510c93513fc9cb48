//! Gauss rules with degree doubling, and a rule for `∫_0^T t^{-p} g(t) dt`
//! with smooth `g` and `p < 1`.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::{FiniteAboveNegOneF64, GaussLaguerre, GaussLegendre};
use serde::Serialize;

const DEGREES: [usize; 6] = [16, 32, 64, 128, 256, 512];

fn legendre_rule(i: usize) -> &'static GaussLegendre {
    static RULES: [OnceLock<GaussLegendre>; 6] = [const { OnceLock::new() }; 6];
    RULES[i].get_or_init(|| GaussLegendre::new(NonZeroUsize::new(DEGREES[i]).expect("nonzero")))
}

fn laguerre_rule(i: usize) -> &'static GaussLaguerre {
    static RULES: [OnceLock<GaussLaguerre>; 6] = [const { OnceLock::new() }; 6];
    RULES[i].get_or_init(|| {
        GaussLaguerre::new(
            NonZeroUsize::new(DEGREES[i]).expect("nonzero"),
            FiniteAboveNegOneF64::new(0.0).expect("alpha = 0"),
        )
    })
}

/// A quadrature value and the difference between the last two degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;

    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

impl Estimate {
    pub const ZERO: Estimate = Estimate {
        value: 0.0,
        error: 0.0,
    };

    fn scaled(self, c: f64) -> Self {
        Self {
            value: self.value * c,
            error: self.error * c.abs(),
        }
    }
}

fn doubling(tol: f64, mut rule: impl FnMut(usize) -> f64) -> Estimate {
    let mut prev = rule(0);
    let mut error = f64::INFINITY;
    for i in 1..DEGREES.len() {
        let next = rule(i);
        error = (next - prev).abs();
        prev = next;
        if error <= tol {
            break;
        }
    }
    Estimate { value: prev, error }
}

/// `∫_a^b f(t) dt`.
pub fn legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Estimate {
    if a == b {
        return Estimate::ZERO;
    }
    doubling(tol, |i| legendre_rule(i).integrate(a, b, &f))
}

/// `∫_0^∞ f(s) e^{-s} ds`.
pub fn laguerre(f: impl Fn(f64) -> f64, tol: f64) -> Estimate {
    doubling(tol, |i| laguerre_rule(i).integrate(&f))
}

/// `∫_T^∞ g(t) e^{-a t} dt` for smooth, slowly varying `g`.
pub fn exponential_tail(g: impl Fn(f64) -> f64, a: f64, start: f64, tol: f64) -> Estimate {
    let scale = (-a * start).exp() / a;
    if scale == 0.0 {
        return Estimate::ZERO;
    }
    laguerre(|s| g(start + s / a), tol / scale).scaled(scale)
}

/// Number of dyadic shells `[2^{-j-1} T, 2^{-j} T]` used by [`singular_head`].
const SHELLS: i32 = 40;

/// `∫_0^T t^{-p} g(t) dt` for `p < 1` and `g` smooth on `[0, T]`.
///
/// Dyadic shells resolve the algebraic decay; on the innermost interval
/// `[0, δ]` the substitution `t = δ u^k`, `k = 1/(1−p)`, absorbs the
/// singularity: `∫_0^δ t^{-p} g = δ^{1−p} k ∫_0^1 g(δ u^k) du`.
pub fn singular_head(g: impl Fn(f64) -> f64, p: f64, t_end: f64, tol: f64) -> Estimate {
    assert!(p < 1.0, "singular exponent must be below one");
    let shell_tol = tol / (SHELLS as f64 + 1.0);
    let mut total = Estimate::ZERO;
    let mut hi = t_end;
    for _ in 0..SHELLS {
        let lo = hi * 0.5;
        total = total + legendre(|t| t.powf(-p) * g(t), lo, hi, shell_tol);
        hi = lo;
    }
    let delta = hi;
    let k = 1.0 / (1.0 - p);
    let pre = delta.powf(1.0 - p) * k;
    let inner = legendre(
        |u| g(delta * u.powf(k)),
        0.0,
        1.0,
        shell_tol / pre.max(1e-300),
    );
    total + inner.scaled(pre)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_exponentials() {
        let e = legendre(|x| x * x, 0.0, 3.0, 1e-14);
        assert!((e.value - 9.0).abs() < 1e-13);
        let e = laguerre(|s| s, 1e-14);
        assert!((e.value - 1.0).abs() < 1e-13);
        let e = exponential_tail(|_| 1.0, 2.0, 1.0, 1e-14);
        assert!((e.value - (-2.0f64).exp() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_head_matches_beta_integrals() {
        // ∫_0^1 t^{-p} dt = 1/(1−p).
        for p in [0.0, 0.25, 0.5, 0.9, 0.99] {
            let e = singular_head(|_| 1.0, p, 1.0, 1e-12);
            assert!((e.value - 1.0 / (1.0 - p)).abs() < 1e-9, "p={p}: {e:?}");
        }
        // ∫_0^1 t^{-1/2} e^{-t} dt = √π erf(1).
        let e = singular_head(|t| (-t).exp(), 0.5, 1.0, 1e-12);
        let expected = 1.493_648_265_624_854_f64;
        assert!((e.value - expected).abs() < 1e-10, "{e:?}");
    }
}
