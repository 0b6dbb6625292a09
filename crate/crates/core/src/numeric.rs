//! Small numerical toolkit: extended reals, monotone bisection, Gauss–Legendre
//! quadrature and the Hurwitz zeta function.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// A nonnegative extended real: either finite or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(x) => Some(x),
            Extended::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Extended::Infinite)
    }

    /// `self >= x`, with `∞ >= x` for every finite `x`.
    pub fn at_least(self, x: f64) -> bool {
        match self {
            Extended::Finite(v) => v >= x,
            Extended::Infinite => true,
        }
    }

    pub fn min_f64(self, x: f64) -> f64 {
        match self {
            Extended::Finite(v) => v.min(x),
            Extended::Infinite => x,
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(x) => write!(f, "{x}"),
            Extended::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(x) => s.serialize_f64(*x),
            Extended::Infinite => s.serialize_str("inf"),
        }
    }
}

/// Outcome of a bisection: the root estimate, its residual and the final
/// sign-change bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

pub const BISECTION_TOL: f64 = 1e-12;
pub const BISECTION_MAX_ITER: usize = 200;

/// Root of a nondecreasing function on `(lo, hi)` with `f(lo) < 0 < f(hi)`.
///
/// The endpoints are never evaluated, so `f` may blow up at `hi`. Stops once
/// `|f(mid)| < tol` or the bracket has collapsed to adjacent floats.
pub fn bisect_increasing<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<Root> {
    let (mut lo, mut hi) = (lo, hi);
    let mut best = Root {
        x: 0.5 * (lo + hi),
        residual: f64::INFINITY,
        lo,
        hi,
        iterations: 0,
    };
    for it in 1..=BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(best);
        }
        let v = f(mid);
        if !v.is_finite() && !v.is_nan() && v > 0.0 {
            hi = mid;
            continue;
        }
        if v.is_nan() {
            return Err(Error::NonconvergentSeries(format!("NaN at {mid}")));
        }
        best = Root {
            x: mid,
            residual: v,
            lo,
            hi,
            iterations: it,
        };
        if v.abs() < tol {
            return Ok(best);
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        best.lo = lo;
        best.hi = hi;
    }
    Ok(best)
}

/// Finds `hi > start` with `f(hi) > 0` by doubling.
pub fn grow_bracket<F: FnMut(f64) -> f64>(mut f: F, start: f64) -> Result<f64> {
    let mut hi = start;
    for _ in 0..1100 {
        if f(hi) > 0.0 {
            return Ok(hi);
        }
        hi *= 2.0;
    }
    Err(Error::NonconvergentSeries(
        "no sign change while growing bracket".into(),
    ))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..order {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = order as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / dp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[order - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// `∫_a^b f` by Gauss–Legendre with precomputed nodes.
pub fn integrate(nodes: &[f64], weights: &[f64], a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    nodes
        .iter()
        .zip(weights)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

// B_{2j} / (2j)! for j = 1..=8
const BERNOULLI_OVER_FACT: [f64; 8] = [
    0.083_333_333_333_333_33,
    -0.001_388_888_888_888_889,
    3.306_878_306_878_307e-5,
    -8.267_195_767_195_768e-7,
    2.087_675_698_786_81e-8,
    -5.284_190_138_687_493e-10,
    1.338_253_653_068_467_9e-11,
    -3.389_680_296_322_582_7e-13,
];

/// Hurwitz zeta `ζ(s, a) = Σ_{k≥0} (k + a)^{-s}` for `s > 1`, `a > 0`, by
/// Euler–Maclaurin summation.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0 && a > 0.0, "hurwitz_zeta needs s > 1, a > 0");
    const N: usize = 16;
    let mut sum = 0.0;
    for k in 0..N {
        sum += (k as f64 + a).powf(-s);
    }
    let x = N as f64 + a;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // tail corrections: B_{2j}/(2j)! * s(s+1)...(s+2j-2) * x^{-s-2j+1}
    let mut rising = s;
    let mut xpow = x.powf(-s - 1.0);
    for (j, &b) in BERNOULLI_OVER_FACT.iter().enumerate() {
        let term = b * rising * xpow;
        sum += term;
        let m = 2.0 * j as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        xpow /= x * x;
    }
    sum
}

/// Riemann zeta for `s > 1`.
pub fn zeta(s: f64) -> f64 {
    hurwitz_zeta(s, 1.0)
}
