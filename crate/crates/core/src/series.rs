//! Exact partition functions and counts by Lagrange inversion.
//!
//! The generating function `F` of weighted plane trees solves `F = zΦ(F)`, so
//! `Z_n = [z^{n+1}] F = [t^n] Φ(t)^{n+1} / (n+1)`. The power coefficient is
//! taken from the recurrence `k a_0 p_k = Σ_{j=1..k} ((m+1) j - k) a_j p_{k-j}`
//! for `p = (Σ a_j t^j)^m`, which needs `O(n · |supp|)` big-integer products.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::bijections::partition_from_walk;
use crate::error::{Error, Result};
use crate::model::{LukaWalk, NCPartition};
use crate::weights::{equivalent_distribution, MemberSet, TiltedLaw, WeightSeq};

/// Largest `n` accepted by [`brute_force_enumerate`].
pub const BRUTE_FORCE_LIMIT: usize = 16;

/// `[t^k] (Σ_j a_j t^j)^m` for `k = 0..=n`, exact. Needs `a_0 != 0`.
pub fn power_coefficients(a: &[BigInt], m: usize, n: usize) -> Vec<BigInt> {
    assert!(
        !a.is_empty() && !a[0].is_zero(),
        "constant term must be nonzero"
    );
    let a0 = &a[0];
    let mut p: Vec<BigInt> = Vec::with_capacity(n + 1);
    p.push(num_traits::pow(a0.clone(), m));
    let support: Vec<usize> = (1..a.len()).filter(|&j| !a[j].is_zero()).collect();
    let m1 = BigInt::from(m + 1);
    for k in 1..=n {
        let mut acc = BigInt::zero();
        for &j in support.iter().take_while(|&&j| j <= k) {
            let coef = &m1 * BigInt::from(j) - BigInt::from(k);
            acc += coef * &a[j] * &p[k - j];
        }
        let (q, r) = acc.div_rem(&(a0 * BigInt::from(k)));
        debug_assert!(r.is_zero());
        p.push(q);
    }
    p
}

/// Same coefficients by truncated repeated squaring.
pub fn power_coefficients_by_squaring(a: &[BigInt], m: usize, n: usize) -> Vec<BigInt> {
    let truncate = |mut v: Vec<BigInt>| {
        v.truncate(n + 1);
        v
    };
    let mul = |x: &[BigInt], y: &[BigInt]| -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); (x.len() + y.len()).saturating_sub(1).min(n + 1)];
        for (i, xi) in x.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
            for (j, yj) in y.iter().enumerate().take(n + 1 - i) {
                out[i + j] += xi * yj;
            }
        }
        out
    };
    let mut result = vec![BigInt::one()];
    let mut base = truncate(a.to_vec());
    let mut e = m;
    while e > 0 {
        if e & 1 == 1 {
            result = truncate(mul(&result, &base));
        }
        e >>= 1;
        if e > 0 {
            base = truncate(mul(&base, &base));
        }
    }
    result.resize(n + 1, BigInt::zero());
    result
}

/// Exact `Z_n = Σ_{P ∈ NC_n} Π_B w(|B|)` for rational weights `w(0), w(1), ...`
/// (entries past the slice are zero).
pub fn tree_partition_function(w: &[BigRational], n: usize) -> BigRational {
    assert!(!w.is_empty() && w[0].is_positive(), "w(0) must be positive");
    let w = &w[..w.len().min(n + 1)];
    let denom = w.iter().fold(BigInt::one(), |d, x| d.lcm(x.denom()));
    let a: Vec<BigInt> = w.iter().map(|x| x.numer() * (&denom / x.denom())).collect();
    let p = power_coefficients(&a, n + 1, n);
    let scale = num_traits::pow(denom, n + 1) * BigInt::from(n + 1);
    BigRational::new(p[n].clone(), scale)
}

/// [`tree_partition_function`] in double precision. Relative error grows
/// roughly linearly in `n`; the result overflows to `inf` for large `n`.
pub fn tree_partition_function_f64(w: &[f64], n: usize) -> f64 {
    assert!(!w.is_empty() && w[0] > 0.0, "w(0) must be positive");
    let m = (n + 1) as f64;
    let mut p = Vec::with_capacity(n + 1);
    p.push(w[0].powf(m));
    for k in 1..=n {
        let mut acc = 0.0;
        for j in 1..=k.min(w.len() - 1) {
            if w[j] != 0.0 {
                acc += ((m + 1.0) * j as f64 - k as f64) * w[j] * p[k - j];
            }
        }
        p.push(acc / (k as f64 * w[0]));
    }
    p[n] / m
}

/// Weighted sum `Z_n` for any weight sequence with exact values.
pub fn partition_function(w: &WeightSeq, n: usize) -> Result<BigRational> {
    Ok(tree_partition_function(&w.exact_weights(n)?, n))
}

/// `#NC_n^𝒜`, the number of non-crossing partitions of `[n]` with all block
/// sizes in `𝒜`.
pub fn count_constrained(set: &MemberSet, n: usize) -> BigUint {
    let mut a = vec![BigInt::zero(); n + 1];
    a[0] = BigInt::one();
    for k in set.members_up_to(n) {
        a[k] = BigInt::one();
    }
    let p = power_coefficients(&a, n + 1, n);
    let (q, r) = p[n].div_rem(&BigInt::from(n + 1));
    debug_assert!(r.is_zero());
    q.to_biguint().expect("counts are nonnegative")
}

/// Which closed-form count to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMode {
    /// `#NC^{{k}}_{kn} = C(kn, n) / ((k-1)n + 1)`.
    Equal,
    /// `#NC^{kℕ}_{kn} = C((k+1)n, n) / (kn + 1)`.
    Divisible,
}

/// The k-equal and k-divisible partition counts of `[kn]`.
pub fn closed_form_counts(k: usize, n: usize, mode: CountMode) -> BigUint {
    let (top, den) = match mode {
        CountMode::Equal => (k * n, (k - 1) * n + 1),
        CountMode::Divisible => ((k + 1) * n, k * n + 1),
    };
    let c: BigUint = num_integer::binomial(BigUint::from(top), BigUint::from(n));
    let (q, r) = c.div_rem(&BigUint::from(den));
    debug_assert!(r.is_zero());
    q
}

/// Natural logarithm of a positive big integer.
pub fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64 bits fit");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln` of `g · sqrt(Φ(ξ)/(2πΦ''(ξ))) · (Φ(ξ)/ξ)^{n+1} · n^{-3/2}`.
pub fn asymptotic_log_partition(law: &TiltedLaw, n: usize) -> Result<f64> {
    let g = law.weights().gcd();
    if !n.is_multiple_of(g) {
        return Err(Error::NotDivisible { n, gcd: g });
    }
    if !law.is_critical() {
        return Err(Error::NonconvergentSeries(format!(
            "the local limit form needs mean 1, found {}",
            law.mean()
        )));
    }
    let xi = law.xi();
    let [p, _, d2] = law.weights().phi(xi)?;
    if !(d2.is_finite() && d2 > 0.0) {
        return Err(Error::NonconvergentSeries(format!("Phi''({xi}) = {d2}")));
    }
    let nf = n as f64;
    Ok((g as f64).ln()
        + 0.5 * (p / (2.0 * std::f64::consts::PI * d2)).ln()
        + (nf + 1.0) * (p / xi).ln()
        - 1.5 * nf.ln())
}

/// Asymptotic estimate of `#NC_n^𝒜`.
pub fn asymptotic_count(set: &MemberSet, n: usize) -> Result<f64> {
    let law = equivalent_distribution(&WeightSeq::set(set.clone())?)?;
    Ok(asymptotic_log_partition(&law, n)?.exp())
}

/// `exact / asymptotic`, computed in log space.
pub fn asymptotic_ratio(set: &MemberSet, n: usize) -> Result<f64> {
    let law = equivalent_distribution(&WeightSeq::set(set.clone())?)?;
    let log_asym = asymptotic_log_partition(&law, n)?;
    let exact = count_constrained(set, n);
    if exact.is_zero() {
        return Ok(0.0);
    }
    Ok((ln_big(&exact) - log_asym).exp())
}

/// Calls `visit` on every Łukasiewicz walk coding a tree with `n + 1`
/// vertices, in lexicographic order of degree sequences.
pub fn enumerate_walks(n: usize, mut visit: impl FnMut(&LukaWalk)) -> Result<usize> {
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let len = n + 1;
    let mut values = vec![0i64; len + 1];
    let mut count = 0usize;
    // degrees chosen so far, as a stack of next candidates
    fn rec(
        j: usize,
        len: usize,
        remaining: usize,
        values: &mut Vec<i64>,
        count: &mut usize,
        visit: &mut dyn FnMut(&LukaWalk),
    ) {
        if j == len {
            if values[len] == -1 {
                *count += 1;
                visit(&LukaWalk::from_valid(values.clone()));
            }
            return;
        }
        let h = values[j];
        // after this step the height must stay >= 0 until the last vertex
        for k in 0..=remaining {
            let next = h + k as i64 - 1;
            let last = j + 1 == len;
            if (!last && next < 0) || (last && next != -1) {
                continue;
            }
            // the remaining vertices can lower the height by at most one each
            if next + 1 > (len - j - 1) as i64 {
                break;
            }
            values[j + 1] = next;
            rec(j + 1, len, remaining - k, values, count, visit);
        }
    }
    rec(0, len, n, &mut values, &mut count, &mut visit);
    Ok(count)
}

/// Visits every non-crossing partition of `[n]` exactly once.
pub fn brute_force_enumerate(n: usize, mut visit: impl FnMut(&NCPartition)) -> Result<usize> {
    enumerate_walks(n, |w| visit(&partition_from_walk(w)))
}
