//! Weight sequences and the probability law equivalent to them.
//!
//! A weight sequence `w(0), w(1), ...` gives a plane tree the weight
//! `Π_u w(k_u)` and a non-crossing partition the weight `Π_B w(|B|)` (with
//! `w(0) = 1`). Its generating function is `Φ(t) = Σ w(k) t^k` with radius of
//! convergence `ρ`, and `Ψ(t) = tΦ'(t)/Φ(t)` is nondecreasing on `(0, ρ)` with
//! limit `ν`. The tilted law `π(k) = w(k) ξ^k / Φ(ξ)` uses the root `ξ` of
//! `Ψ = 1` when `ν >= 1` and `ξ = ρ` otherwise.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{bisect_increasing, grow_bracket, zeta, Extended, Root, BISECTION_TOL};

/// Ratio `term / partial sum` below which an infinite series is truncated.
pub const SERIES_REL_TOL: f64 = 1e-16;
/// Hard cap on the number of terms of an infinite series.
pub const SERIES_MAX_TERMS: usize = 1_000_000;
/// `|ν - 1|` below which the two regimes are treated as coinciding.
pub const NU_BAND: f64 = 1e-9;
/// Members scanned when computing the gcd of a set given by a predicate
/// without a closed form.
pub const GCD_CUTOFF: usize = 10_000;

/// Named infinite subsets of `{1, 2, ...}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Predicate {
    All,
    Odd,
    Even,
    Multiples(usize),
    Prime,
}

/// A set `𝒜` of allowed block sizes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MemberSet {
    Finite(BTreeSet<usize>),
    Predicate(Predicate),
}

fn primes() -> &'static [bool] {
    static SIEVE: OnceLock<Vec<bool>> = OnceLock::new();
    SIEVE.get_or_init(|| {
        let len = SERIES_MAX_TERMS + 1;
        let mut is_prime = vec![true; len];
        is_prime[0] = false;
        is_prime[1] = false;
        let mut p = 2;
        while p * p < len {
            if is_prime[p] {
                let mut q = p * p;
                while q < len {
                    is_prime[q] = false;
                    q += p;
                }
            }
            p += 1;
        }
        is_prime
    })
}

fn is_prime(k: usize) -> bool {
    match primes().get(k) {
        Some(&b) => b,
        None => (2..)
            .take_while(|d| d * d <= k)
            .all(|d| !k.is_multiple_of(d)),
    }
}

impl MemberSet {
    pub fn finite<I: IntoIterator<Item = usize>>(members: I) -> Self {
        MemberSet::Finite(members.into_iter().collect())
    }

    pub fn contains(&self, k: usize) -> bool {
        match self {
            MemberSet::Finite(s) => s.contains(&k),
            MemberSet::Predicate(p) => {
                k >= 1
                    && match *p {
                        Predicate::All => true,
                        Predicate::Odd => k % 2 == 1,
                        Predicate::Even => k.is_multiple_of(2),
                        Predicate::Multiples(m) => k.is_multiple_of(m),
                        Predicate::Prime => is_prime(k),
                    }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, MemberSet::Finite(_))
    }

    /// Largest member, `None` for infinite sets.
    pub fn max(&self) -> Option<usize> {
        match self {
            MemberSet::Finite(s) => s.iter().next_back().copied(),
            MemberSet::Predicate(_) => None,
        }
    }

    /// Members in `1..=n`, increasing.
    pub fn members_up_to(&self, n: usize) -> Vec<usize> {
        match self {
            MemberSet::Finite(s) => s
                .iter()
                .copied()
                .filter(|&k| (1..=n).contains(&k))
                .collect(),
            MemberSet::Predicate(_) => (1..=n).filter(|&k| self.contains(k)).collect(),
        }
    }

    /// `gcd(𝒜)`. Exact except for primes, where it is computed from the
    /// members up to [`GCD_CUTOFF`].
    pub fn gcd(&self) -> usize {
        match self {
            MemberSet::Finite(s) => s.iter().fold(0, |g, &k| num_integer::gcd(g, k)),
            MemberSet::Predicate(Predicate::Even) => 2,
            MemberSet::Predicate(Predicate::Multiples(m)) => *m,
            MemberSet::Predicate(Predicate::All | Predicate::Odd) => 1,
            MemberSet::Predicate(Predicate::Prime) => self
                .members_up_to(GCD_CUTOFF)
                .into_iter()
                .fold(0, num_integer::gcd),
        }
    }

    /// Rejects `𝒜 = ∅`, `𝒜 = {1}` and sets containing `0`.
    pub fn validate(&self) -> Result<()> {
        match self {
            MemberSet::Finite(s) => {
                if s.contains(&0) {
                    return Err(Error::DegenerateSet("block sizes start at 1".into()));
                }
                if s.is_empty() {
                    return Err(Error::DegenerateSet("empty set".into()));
                }
                if s.iter().all(|&k| k == 1) {
                    return Err(Error::DegenerateSet("{1} only allows singletons".into()));
                }
                Ok(())
            }
            MemberSet::Predicate(Predicate::Multiples(0)) => {
                Err(Error::DegenerateSet("multiples of 0".into()))
            }
            MemberSet::Predicate(_) => Ok(()),
        }
    }

    /// `Σ_{k∈𝒜} t^k` and its first two derivatives, for `0 <= t < 1` (any `t`
    /// for finite sets).
    fn sums(&self, t: f64) -> Result<[f64; 3]> {
        match self {
            MemberSet::Finite(s) => Ok(finite_sums(s.iter().map(|&k| (k, 1.0)), t)),
            MemberSet::Predicate(p) => {
                if t >= 1.0 {
                    return Ok([f64::INFINITY; 3]);
                }
                match *p {
                    Predicate::All => Ok(multiples_sums(1, t)),
                    Predicate::Even => Ok(multiples_sums(2, t)),
                    Predicate::Multiples(m) => Ok(multiples_sums(m, t)),
                    Predicate::Odd => {
                        let a = multiples_sums(1, t);
                        let e = multiples_sums(2, t);
                        Ok([a[0] - e[0], a[1] - e[1], a[2] - e[2]])
                    }
                    Predicate::Prime => series_sums(|k| if is_prime(k) { 1.0 } else { 0.0 }, t, 2),
                }
            }
        }
    }

    fn label(&self) -> String {
        match self {
            MemberSet::Finite(s) => {
                let items: Vec<String> = s.iter().map(usize::to_string).collect();
                format!("set:{{{}}}", items.join(","))
            }
            MemberSet::Predicate(Predicate::All) => "all".into(),
            MemberSet::Predicate(Predicate::Odd) => "odd".into(),
            MemberSet::Predicate(Predicate::Even) => "even".into(),
            MemberSet::Predicate(Predicate::Prime) => "prime".into(),
            MemberSet::Predicate(Predicate::Multiples(m)) => format!("multiples:{m}"),
        }
    }

    /// Parses `all`, `odd`, `even`, `prime`, `multiples:k`, `divisible:k`,
    /// `set:k` and `set:{a,b,...}` (braces optional).
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |x: &str| -> Result<usize> {
            x.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad integer '{x}' in set '{s}'")))
        };
        let set = match s {
            "all" | "N" => MemberSet::Predicate(Predicate::All),
            "odd" => MemberSet::Predicate(Predicate::Odd),
            "even" => MemberSet::Predicate(Predicate::Even),
            "prime" => MemberSet::Predicate(Predicate::Prime),
            _ => {
                if let Some(k) = s
                    .strip_prefix("multiples:")
                    .or_else(|| s.strip_prefix("divisible:"))
                {
                    MemberSet::Predicate(Predicate::Multiples(num(k)?))
                } else if let Some(rest) = s.strip_prefix("set:") {
                    let rest = rest.trim().trim_start_matches('{').trim_end_matches('}');
                    let members = rest
                        .split(',')
                        .filter(|x| !x.trim().is_empty())
                        .map(num)
                        .collect::<Result<BTreeSet<usize>>>()?;
                    MemberSet::Finite(members)
                } else if let Ok(k) = s.parse::<usize>() {
                    MemberSet::finite([k])
                } else {
                    return Err(Error::Parse(format!("unknown set '{s}'")));
                }
            }
        };
        Ok(set)
    }
}

impl fmt::Display for MemberSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn finite_sums(terms: impl Iterator<Item = (usize, f64)>, t: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (k, w) in terms {
        if w == 0.0 {
            continue;
        }
        let kf = k as f64;
        out[0] += w * t.powi(k as i32);
        if k >= 1 {
            out[1] += w * kf * t.powi(k as i32 - 1);
        }
        if k >= 2 {
            out[2] += w * kf * (kf - 1.0) * t.powi(k as i32 - 2);
        }
    }
    out
}

/// `Σ_{j>=1} t^{mj}` and derivatives in closed form.
fn multiples_sums(m: usize, t: f64) -> [f64; 3] {
    let mf = m as f64;
    let u = t.powi(m as i32);
    let d = 1.0 - u;
    let f = u / d;
    let f1 = mf * t.powi(m as i32 - 1) / (d * d);
    let f2 = if m == 1 {
        2.0 / (d * d * d)
    } else {
        mf * t.powi(m as i32 - 2) * ((mf - 1.0) + (mf + 1.0) * u) / (d * d * d)
    };
    [f, f1, f2]
}

/// `Σ_{k>=start} w(k) t^k` and derivatives for `0 <= t < 1`, truncated once
/// `k² t^k` drops below `SERIES_REL_TOL` times the partial sum past the peak.
fn series_sums(w: impl Fn(usize) -> f64, t: f64, start: usize) -> Result<[f64; 3]> {
    if t <= 0.0 {
        return Ok([0.0; 3]);
    }
    let mut out = [0.0; 3];
    let peak = (2.0 / -t.ln()).ceil();
    let mut pow = t.powi(start as i32 - 2);
    for k in start..SERIES_MAX_TERMS {
        let kf = k as f64;
        let wk = w(k);
        out[0] += wk * pow * t * t;
        out[1] += wk * kf * pow * t;
        out[2] += wk * kf * (kf - 1.0) * pow;
        pow *= t;
        if kf > peak && kf * kf * pow < SERIES_REL_TOL * out[0].max(f64::MIN_POSITIVE) {
            return Ok(out);
        }
    }
    Err(Error::NonconvergentSeries(format!(
        "no convergence after {SERIES_MAX_TERMS} terms at t = {t}"
    )))
}

/// Weights given by closed-form generating functions.
pub trait AnalyticWeights: fmt::Debug + Send + Sync {
    fn weight(&self, k: usize) -> f64;
    /// Radius of convergence of `Φ`.
    fn rho(&self) -> Extended;
    /// `lim_{t↑ρ} Ψ(t)`.
    fn nu(&self) -> Extended;
    /// `(Φ, Φ', Φ'')` at `t`; must accept `t = ρ` when `Φ(ρ)` is finite and may
    /// return `+∞` entries there.
    fn phi(&self, t: f64) -> Result<[f64; 3]>;
    fn name(&self) -> String;
}

/// `w(0) = 1`, `w(k) = c k^{-1-α}`. With `c = 1/(ζ(α) - ζ(1+α))` the law is
/// critical at `ξ = ρ = 1`; its variance is infinite for `α <= 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub alpha: f64,
    pub c: f64,
}

impl PowerLaw {
    pub fn new(alpha: f64, c: f64) -> Result<Self> {
        if !(alpha > 1.0) || !(c > 0.0) || !alpha.is_finite() || !c.is_finite() {
            return Err(Error::InvalidWeights(format!(
                "power law needs alpha > 1 and c > 0, got alpha = {alpha}, c = {c}"
            )));
        }
        Ok(PowerLaw { alpha, c })
    }

    /// The critical member of the family.
    pub fn critical(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0) {
            return Err(Error::InvalidWeights(format!(
                "alpha = {alpha} must exceed 1"
            )));
        }
        PowerLaw::new(alpha, 1.0 / (zeta(alpha) - zeta(1.0 + alpha)))
    }
}

impl AnalyticWeights for PowerLaw {
    fn weight(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.c * (k as f64).powf(-1.0 - self.alpha)
        }
    }

    fn rho(&self) -> Extended {
        Extended::Finite(1.0)
    }

    fn nu(&self) -> Extended {
        let a = self.alpha;
        Extended::Finite(self.c * zeta(a) / (1.0 + self.c * zeta(1.0 + a)))
    }

    fn phi(&self, t: f64) -> Result<[f64; 3]> {
        let a = self.alpha;
        if t >= 1.0 {
            let d2 = if a > 2.0 {
                self.c * (zeta(a - 1.0) - zeta(a))
            } else {
                f64::INFINITY
            };
            return Ok([1.0 + self.c * zeta(1.0 + a), self.c * zeta(a), d2]);
        }
        let s = series_sums(|k| self.weight(k), t, 1)?;
        Ok([1.0 + s[0], s[1], s[2]])
    }

    fn name(&self) -> String {
        format!("power:{},{}", self.alpha, self.c)
    }
}

/// A weight sequence `(w(k); k >= 0)`.
#[derive(Debug, Clone)]
pub enum WeightSeq {
    /// `w(0) = 1`, `w(k) = 1` for `k ∈ 𝒜`, else `0`.
    Membership(MemberSet),
    /// `w(0), w(1), ...`, zero beyond the list.
    Explicit(Vec<f64>),
    Analytic(Arc<dyn AnalyticWeights>),
}

impl PartialEq for WeightSeq {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (WeightSeq::Membership(a), WeightSeq::Membership(b)) => a == b,
            (WeightSeq::Explicit(a), WeightSeq::Explicit(b)) => a == b,
            (WeightSeq::Analytic(a), WeightSeq::Analytic(b)) => a.name() == b.name(),
            _ => false,
        }
    }
}

/// JSON form of a weight sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightSpec {
    Set { members: Vec<usize> },
    Predicate { name: String },
    Explicit { values: Vec<f64> },
    Power { alpha: f64, c: Option<f64> },
}

impl WeightSeq {
    pub fn set(set: MemberSet) -> Result<Self> {
        set.validate()?;
        Ok(WeightSeq::Membership(set))
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        let w = WeightSeq::Explicit(values);
        w.validate()?;
        Ok(w)
    }

    pub fn all() -> Self {
        WeightSeq::Membership(MemberSet::Predicate(Predicate::All))
    }

    pub fn power_law(p: PowerLaw) -> Self {
        WeightSeq::Analytic(Arc::new(p))
    }

    /// Checks `w(0) > 0`, nonnegativity and `w(k) > 0` for some `k >= 2`.
    pub fn validate(&self) -> Result<()> {
        match self {
            WeightSeq::Membership(s) => s.validate(),
            WeightSeq::Explicit(v) => {
                if let Some((k, x)) = v
                    .iter()
                    .enumerate()
                    .find(|(_, x)| !(x.is_finite() && **x >= 0.0))
                {
                    return Err(Error::InvalidWeights(format!(
                        "w({k}) = {x} is not a finite nonnegative number"
                    )));
                }
                if v.first().is_none_or(|&w0| w0 <= 0.0) {
                    return Err(Error::InvalidWeights("w(0) must be positive".into()));
                }
                if !v.iter().skip(2).any(|&x| x > 0.0) {
                    return Err(Error::InvalidWeights(
                        "need w(k) > 0 for some k >= 2".into(),
                    ));
                }
                Ok(())
            }
            WeightSeq::Analytic(a) => {
                if !(a.weight(0) > 0.0) {
                    return Err(Error::InvalidWeights("w(0) must be positive".into()));
                }
                Ok(())
            }
        }
    }

    pub fn weight(&self, k: usize) -> f64 {
        match self {
            WeightSeq::Membership(s) => {
                if k == 0 || s.contains(k) {
                    1.0
                } else {
                    0.0
                }
            }
            WeightSeq::Explicit(v) => v.get(k).copied().unwrap_or(0.0),
            WeightSeq::Analytic(a) => a.weight(k),
        }
    }

    /// Degrees `k <= n` with `w(k) > 0`, increasing (always starts with 0).
    pub fn support_up_to(&self, n: usize) -> Vec<usize> {
        match self {
            WeightSeq::Membership(s) => {
                let mut out = vec![0];
                out.extend(s.members_up_to(n));
                out
            }
            _ => (0..=n).filter(|&k| self.weight(k) > 0.0).collect(),
        }
    }

    /// Largest degree with positive weight, if finite.
    pub fn max_degree(&self) -> Option<usize> {
        match self {
            WeightSeq::Membership(s) => s.max(),
            WeightSeq::Explicit(v) => v.iter().rposition(|&x| x > 0.0),
            WeightSeq::Analytic(_) => None,
        }
    }

    /// gcd of the positive degrees in the support.
    pub fn gcd(&self) -> usize {
        match self {
            WeightSeq::Membership(s) => s.gcd(),
            WeightSeq::Explicit(v) => (1..v.len())
                .filter(|&k| v[k] > 0.0)
                .fold(0, num_integer::gcd),
            WeightSeq::Analytic(a) => (1..=GCD_CUTOFF)
                .filter(|&k| a.weight(k) > 0.0)
                .fold(0, num_integer::gcd),
        }
    }

    pub fn rho(&self) -> Extended {
        match self {
            WeightSeq::Membership(s) if s.is_finite() => Extended::Infinite,
            WeightSeq::Membership(_) => Extended::Finite(1.0),
            WeightSeq::Explicit(_) => Extended::Infinite,
            WeightSeq::Analytic(a) => a.rho(),
        }
    }

    pub fn nu(&self) -> Extended {
        match self {
            WeightSeq::Membership(_) | WeightSeq::Explicit(_) => match self.max_degree() {
                Some(d) => Extended::Finite(d as f64),
                None => Extended::Infinite,
            },
            WeightSeq::Analytic(a) => a.nu(),
        }
    }

    /// `(Φ(t), Φ'(t), Φ''(t))`.
    pub fn phi(&self, t: f64) -> Result<[f64; 3]> {
        match self {
            WeightSeq::Membership(s) => {
                let [a, b, c] = s.sums(t)?;
                Ok([1.0 + a, b, c])
            }
            WeightSeq::Explicit(v) => Ok(finite_sums(v.iter().copied().enumerate(), t)),
            WeightSeq::Analytic(a) => a.phi(t),
        }
    }

    /// `Ψ(t) = tΦ'(t)/Φ(t)`.
    pub fn psi(&self, t: f64) -> Result<f64> {
        let [p, d, _] = self.phi(t)?;
        Ok(t * d / p)
    }

    /// Exact weights `w(0..=n)`: 0/1 for sets, the exact binary value of each
    /// float for explicit lists.
    pub fn exact_weights(&self, n: usize) -> Result<Vec<BigRational>> {
        match self {
            WeightSeq::Membership(_) => Ok((0..=n)
                .map(|k| BigRational::from_integer(BigInt::from(self.weight(k) as u8)))
                .collect()),
            WeightSeq::Explicit(v) => (0..=n)
                .map(|k| {
                    let x = v.get(k).copied().unwrap_or(0.0);
                    if x == 0.0 {
                        Ok(BigRational::zero())
                    } else if x == 1.0 {
                        Ok(BigRational::one())
                    } else {
                        BigRational::from_f64(x)
                            .ok_or_else(|| Error::InvalidWeights(format!("w({k}) = {x}")))
                    }
                })
                .collect(),
            WeightSeq::Analytic(a) => Err(Error::InvalidWeights(format!(
                "{} has no exact rational values",
                a.name()
            ))),
        }
    }

    /// Short label used in output metadata.
    pub fn label(&self) -> String {
        match self {
            WeightSeq::Membership(s) => s.label(),
            WeightSeq::Explicit(v) => {
                let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                format!("explicit:[{}]", items.join(","))
            }
            WeightSeq::Analytic(a) => a.name(),
        }
    }

    /// Parses a preset (`all`, `odd`, `even`, `prime`, `set:k`, `set:{a,b}`,
    /// `divisible:k`, `multiples:k`, `stable:α`) or an inline JSON weight spec.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            let spec: WeightSpec =
                serde_json::from_str(s).map_err(|e| Error::Parse(format!("weight spec: {e}")))?;
            return WeightSeq::from_spec(&spec);
        }
        if let Some(a) = s.strip_prefix("stable:") {
            let alpha: f64 = a
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent in '{s}'")))?;
            return Ok(WeightSeq::power_law(PowerLaw::critical(alpha)?));
        }
        WeightSeq::set(MemberSet::parse(s)?)
    }

    pub fn from_spec(spec: &WeightSpec) -> Result<Self> {
        match spec {
            WeightSpec::Set { members } => {
                WeightSeq::set(MemberSet::finite(members.iter().copied()))
            }
            WeightSpec::Predicate { name } => WeightSeq::set(MemberSet::parse(name)?),
            WeightSpec::Explicit { values } => WeightSeq::explicit(values.clone()),
            WeightSpec::Power { alpha, c } => {
                let p = match c {
                    Some(c) => PowerLaw::new(*alpha, *c)?,
                    None => PowerLaw::critical(*alpha)?,
                };
                Ok(WeightSeq::power_law(p))
            }
        }
    }
}

/// The law `π` equivalent to a weight sequence, together with `ρ`, `ν`, `ξ`.
#[derive(Debug)]
pub struct TiltedLaw {
    weights: WeightSeq,
    rho: Extended,
    nu: Extended,
    xi: f64,
    phi_at_xi: f64,
    mean: f64,
    variance: Extended,
    root: Option<Root>,
    cache: RwLock<Vec<f64>>,
}

impl Clone for TiltedLaw {
    fn clone(&self) -> Self {
        TiltedLaw {
            weights: self.weights.clone(),
            rho: self.rho,
            nu: self.nu,
            xi: self.xi,
            phi_at_xi: self.phi_at_xi,
            mean: self.mean,
            variance: self.variance,
            root: self.root,
            cache: RwLock::new(self.cache.read().expect("pmf cache poisoned").clone()),
        }
    }
}

/// Computes `ρ`, `ν`, `ξ` and `π` for `w`.
pub fn equivalent_distribution(w: &WeightSeq) -> Result<TiltedLaw> {
    w.validate()?;
    let rho = w.rho();
    if rho == Extended::Finite(0.0) {
        return Err(Error::RhoZero);
    }
    let nu = w.nu();
    let (xi, root) = if nu.at_least(1.0 + NU_BAND) {
        let psi = |t: f64| w.psi(t).map(|p| p - 1.0).unwrap_or(f64::INFINITY);
        let hi = match rho {
            Extended::Finite(r) => r,
            Extended::Infinite => grow_bracket(psi, 1.0)?,
        };
        let r = bisect_increasing(psi, 0.0, hi, BISECTION_TOL)?;
        (r.x, Some(r))
    } else {
        match rho {
            Extended::Finite(r) => (r, None),
            Extended::Infinite => {
                return Err(Error::InvalidWeights(format!(
                    "nu = {nu} < 1 with infinite radius of convergence"
                )))
            }
        }
    };
    let [p, d, d2] = w.phi(xi)?;
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::NonconvergentSeries(format!("Phi({xi}) = {p}")));
    }
    let mean = xi * d / p;
    let second = xi * xi * d2 / p;
    let variance = if second.is_finite() {
        Extended::Finite(second + mean - mean * mean)
    } else {
        Extended::Infinite
    };
    Ok(TiltedLaw {
        weights: w.clone(),
        rho,
        nu,
        xi,
        phi_at_xi: p,
        mean,
        variance,
        root,
        cache: RwLock::new(Vec::new()),
    })
}

/// Solves `1 + Σ_{i∈𝒜} ξ^i = Σ_{i∈𝒜} i ξ^i`, i.e. `Σ_{i∈𝒜} (i-1) ξ^i = 1`.
pub fn xi_for_set(set: &MemberSet) -> Result<(f64, TiltedLaw)> {
    set.validate()?;
    let excess = |t: f64| -> f64 {
        match set.sums(t) {
            // Σ (i-1) t^i = t Σ i t^{i-1} - Σ t^i
            Ok([s, d, _]) => t * d - s - 1.0,
            Err(_) => f64::INFINITY,
        }
    };
    let hi = if set.is_finite() {
        grow_bracket(excess, 1.0)?
    } else {
        1.0
    };
    let root = bisect_increasing(excess, 0.0, hi, BISECTION_TOL)?;
    let law = equivalent_distribution(&WeightSeq::Membership(set.clone()))?;
    Ok((root.x, law))
}

impl TiltedLaw {
    pub fn weights(&self) -> &WeightSeq {
        &self.weights
    }
    pub fn rho(&self) -> Extended {
        self.rho
    }
    pub fn nu(&self) -> Extended {
        self.nu
    }
    pub fn xi(&self) -> f64 {
        self.xi
    }
    pub fn phi_at_xi(&self) -> f64 {
        self.phi_at_xi
    }
    pub fn mean(&self) -> f64 {
        self.mean
    }
    /// `σ² = ξ²Φ''(ξ)/Φ(ξ) + m - m²`.
    pub fn variance(&self) -> Extended {
        self.variance
    }
    /// The bisection certificate when `ξ` solved `Ψ(ξ) = 1`.
    pub fn root(&self) -> Option<Root> {
        self.root
    }

    /// `true` when the mean is 1, i.e. `ν >= 1` up to [`NU_BAND`].
    pub fn is_critical(&self) -> bool {
        self.nu.at_least(1.0 - NU_BAND)
    }

    fn compute(&self, k: usize) -> f64 {
        let w = self.weights.weight(k);
        if w == 0.0 {
            return 0.0;
        }
        (w.ln() + k as f64 * self.xi.ln() - self.phi_at_xi.ln()).exp()
    }

    /// `π(k)`.
    pub fn pmf(&self, k: usize) -> f64 {
        if let Some(&p) = self.cache.read().expect("pmf cache poisoned").get(k) {
            return p;
        }
        self.compute(k)
    }

    /// `π(0), ..., π(len - 1)`, memoized.
    pub fn pmf_table(&self, len: usize) -> Vec<f64> {
        {
            let cache = self.cache.read().expect("pmf cache poisoned");
            if cache.len() >= len {
                return cache[..len].to_vec();
            }
        }
        let mut cache = self.cache.write().expect("pmf cache poisoned");
        let start = cache.len();
        for k in start..len {
            let p = self.compute(k);
            cache.push(p);
        }
        cache[..len].to_vec()
    }

    /// `P(X >= k)`.
    pub fn tail(&self, k: usize) -> f64 {
        let head: f64 = self.pmf_table(k).iter().sum();
        (1.0 - head).max(0.0)
    }

    /// `π(A) = Σ_{k∈A} π(k)`.
    pub fn mass(&self, set: &MemberSet) -> f64 {
        self.sum_over(set, |_, p| p)
    }

    /// `Σ_{k∈A} f(k, π(k))` over the support, truncated where the tail of `π`
    /// is negligible.
    pub fn sum_over(&self, set: &MemberSet, f: impl Fn(usize, f64) -> f64) -> f64 {
        let limit = match set.max() {
            Some(m) => m,
            None => self.effective_support(1e-17),
        };
        let table = self.pmf_table(limit + 1);
        (1..=limit)
            .filter(|&k| set.contains(k))
            .map(|k| f(k, table[k]))
            .sum()
    }

    /// Smallest `K` with `P(X > K) < eps`, capped at [`SERIES_MAX_TERMS`].
    pub fn effective_support(&self, eps: f64) -> usize {
        if let Some(d) = self.weights.max_degree() {
            return d;
        }
        let mut acc = 0.0;
        let mut k = 0;
        let mut chunk = 64;
        loop {
            let table = self.pmf_table((k + chunk).min(SERIES_MAX_TERMS));
            while k < table.len() {
                acc += table[k];
                if 1.0 - acc < eps {
                    return k;
                }
                k += 1;
            }
            if k >= SERIES_MAX_TERMS {
                return SERIES_MAX_TERMS;
            }
            chunk *= 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(s: &str) -> MemberSet {
        MemberSet::parse(s).unwrap()
    }

    fn law(s: &str) -> TiltedLaw {
        equivalent_distribution(&WeightSeq::parse(s).unwrap()).unwrap()
    }

    #[test]
    fn uniform_weights_give_geometric_half() {
        let l = law("all");
        assert!((l.xi() - 0.5).abs() < 1e-12);
        for k in 0..30 {
            assert!((l.pmf(k) - 0.5f64.powi(k as i32 + 1)).abs() < 1e-13);
        }
        assert_eq!(l.rho(), Extended::Finite(1.0));
        assert!(l.nu().is_infinite());
        assert!((l.variance().finite().unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn multiples_closed_form() {
        for m in 1..=6usize {
            let l = law(&format!("multiples:{m}"));
            let mf = m as f64;
            for k in 0..60 {
                let expected = if k % m == 0 {
                    mf / (1.0 + mf).powf(1.0 + k as f64 / mf)
                } else {
                    0.0
                };
                assert!((l.pmf(k) - expected).abs() < 1e-11, "m={m} k={k}");
            }
        }
    }

    #[test]
    fn odd_closed_form() {
        // root of 1 - 2z^2 - 2z^3 + z^4 in [0, 1], by bisection on the quartic
        let quartic = |z: f64| 1.0 - 2.0 * z * z - 2.0 * z.powi(3) + z.powi(4);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if quartic(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let z = 0.5 * (lo + hi);
        let l = law("odd");
        assert!((l.xi() - z).abs() < 1e-11);
        for k in 0..40 {
            let expected = if k == 0 || k % 2 == 1 {
                (1.0 - z * z) / (1.0 + z - z * z) * z.powi(k as i32)
            } else {
                0.0
            };
            assert!((l.pmf(k) - expected).abs() < 1e-11);
        }
    }

    #[test]
    fn finite_sets() {
        let l = law("set:2");
        assert!((l.xi() - 1.0).abs() < 1e-12);
        assert!((l.pmf(0) - 0.5).abs() < 1e-12);
        assert!((l.pmf(2) - 0.5).abs() < 1e-12);
        assert!((l.variance().finite().unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(l.rho(), Extended::Infinite);
        assert_eq!(l.nu(), Extended::Finite(2.0));

        let (xi, _) = xi_for_set(&set("set:3")).unwrap();
        assert!((xi - 2f64.powf(-1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_sets_are_rejected() {
        assert!(matches!(
            xi_for_set(&set("set:1")),
            Err(Error::DegenerateSet(_))
        ));
        assert!(matches!(
            xi_for_set(&MemberSet::finite([])),
            Err(Error::DegenerateSet(_))
        ));
        assert!(matches!(
            WeightSeq::parse("set:{1}"),
            Err(Error::DegenerateSet(_))
        ));
        assert!(matches!(
            WeightSeq::explicit(vec![1.0, 1.0]),
            Err(Error::InvalidWeights(_))
        ));
        assert!(WeightSeq::explicit(vec![0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn both_routes_to_xi_agree() {
        for s in [
            "all",
            "odd",
            "even",
            "prime",
            "multiples:5",
            "set:2",
            "set:{2,3}",
            "set:{3,7}",
        ] {
            let (xi, l) = xi_for_set(&set(s)).unwrap();
            assert!((xi - l.xi()).abs() < 1e-10, "{s}: {xi} vs {}", l.xi());
            let psi = l.weights().psi(l.xi()).unwrap();
            assert!((psi - 1.0).abs() < 1e-12, "{s}");
            assert!((l.mean() - 1.0).abs() < 1e-9);
            let total: f64 = l.pmf_table(l.effective_support(1e-18) + 1).iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "{s}: {total}");
        }
    }

    #[test]
    fn subcritical_power_law() {
        // c small: ν < 1, ξ = ρ = 1, mean ν
        let p = PowerLaw::new(2.5, 0.3).unwrap();
        let l = equivalent_distribution(&WeightSeq::power_law(p)).unwrap();
        assert_eq!(l.xi(), 1.0);
        let nu = l.nu().finite().unwrap();
        assert!(nu < 1.0);
        assert!((l.mean() - nu).abs() < 1e-12);
        assert!(!l.is_critical());

        let crit = PowerLaw::critical(1.5).unwrap();
        let l = equivalent_distribution(&WeightSeq::power_law(crit)).unwrap();
        assert!((l.mean() - 1.0).abs() < 1e-9);
        assert!(l.variance().is_infinite());
        assert!(l.is_critical());
    }

    #[test]
    fn json_spec_forms() {
        let w = WeightSeq::parse(r#"{"kind":"set","members":[2,4]}"#).unwrap();
        assert_eq!(w, WeightSeq::Membership(MemberSet::finite([2, 4])));
        let w = WeightSeq::parse(r#"{"kind":"predicate","name":"odd"}"#).unwrap();
        assert_eq!(
            w,
            WeightSeq::Membership(MemberSet::Predicate(Predicate::Odd))
        );
        let w = WeightSeq::parse(r#"{"kind":"explicit","values":[1,1,0.5]}"#).unwrap();
        assert_eq!(w, WeightSeq::Explicit(vec![1.0, 1.0, 0.5]));
        assert!(WeightSeq::parse(r#"{"kind":"nope"}"#).is_err());
        assert_eq!(
            set("divisible:5"),
            MemberSet::Predicate(Predicate::Multiples(5))
        );
        assert_eq!(set("set:{2, 3}").to_string(), "set:{2,3}");
    }

    #[test]
    fn gcds() {
        assert_eq!(set("set:{4,6}").gcd(), 2);
        assert_eq!(set("multiples:5").gcd(), 5);
        assert_eq!(set("prime").gcd(), 1);
        assert_eq!(set("odd").gcd(), 1);
    }

    #[test]
    fn cache_is_consistent_across_threads() {
        let l = Arc::new(law("odd"));
        let handles: Vec<_> = (0..4)
            .map(|i| {
                let l = Arc::clone(&l);
                std::thread::spawn(move || l.pmf_table(50 + 10 * i))
            })
            .collect();
        for h in handles {
            let t = h.join().unwrap();
            for (k, &p) in t.iter().enumerate() {
                assert_eq!(p, l.compute(k));
            }
        }
    }
}
