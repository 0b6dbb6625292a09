//! Free cumulants: the moment-cumulant sum over non-crossing partitions and the
//! right edge of the support of a measure with nonnegative free cumulants.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{
    bisect_increasing, gauss_legendre, grow_bracket, integrate, zeta, Extended, BISECTION_TOL,
};
use crate::series::tree_partition_function;
use crate::weights::{equivalent_distribution, AnalyticWeights, WeightSeq, NU_BAND};

/// Cumulant sequences with a closed-form `R` transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// `R(z) = coth z - 1/z + 1/(1 - z)`
    OrtmannUniform,
    /// `R(z) = 1/z - π cot(πz)`, `κ_{2k} = 2ζ(2k)`
    LevyArea,
    /// `κ_1 = 0`, `κ_{n+1} = c B(n, α + 1)`
    BetaTail { alpha: f64, c: f64 },
}

/// Free cumulants `κ_1, κ_2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub enum CumulantSeq {
    /// `κ_1..κ_m` as listed, zero afterwards.
    Finite(Vec<f64>),
    /// The listed head, then `κ_n = scale · ratio^n`.
    GeometricTail {
        head: Vec<f64>,
        scale: f64,
        ratio: f64,
    },
    /// The first terms of an infinite sequence whose tail is unknown; fine
    /// for moments, rejected by [`support_max`].
    Truncated(Vec<f64>),
    Analytic(Preset),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    NuGe1,
    NuLt1,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::NuGe1 => "nu_ge_1",
            Branch::NuLt1 => "nu_lt_1",
        })
    }
}

/// Output of [`support_max`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportResult {
    pub rho: Extended,
    pub nu: Extended,
    pub xi: f64,
    pub s_max: f64,
    pub branch: Branch,
    /// `ξ²R'(ξ) - 1` in the `ν >= 1` branch
    pub residual: Option<f64>,
    /// final sign-change bracket of the bisection
    pub bracket: Option<(f64, f64)>,
}

fn beta_panels() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(24))
}

/// `∫_0^1 g(y) dy` on panels graded geometrically toward 0.
fn graded_integral(g: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = beta_panels();
    let mut total = 0.0;
    let mut hi = 1.0;
    for _ in 0..20 {
        let lo = hi * 0.1;
        total += integrate(x, w, lo, hi, &g);
        hi = lo;
    }
    total + integrate(x, w, 0.0, hi, &g)
}

impl Preset {
    pub fn parse(s: &str) -> Result<CumulantSeq> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {x:?} in preset {s:?}")))
        };
        match (name, arg) {
            ("semicircle", None) => Ok(CumulantSeq::semicircle()),
            ("free-poisson", None) => CumulantSeq::free_poisson(1.0),
            ("free-poisson", Some(a)) => CumulantSeq::free_poisson(num(a)?),
            ("ortmann-uniform", None) => Ok(CumulantSeq::Analytic(Preset::OrtmannUniform)),
            ("levy-area", None) => Ok(CumulantSeq::Analytic(Preset::LevyArea)),
            ("beta-tail", Some(a)) => {
                let (alpha, c) = a
                    .split_once(',')
                    .ok_or_else(|| Error::Parse(format!("beta-tail needs alpha,c in {s:?}")))?;
                Ok(CumulantSeq::Analytic(Preset::BetaTail {
                    alpha: num(alpha)?,
                    c: num(c)?,
                }))
            }
            _ => Err(Error::Parse(format!(
                "unknown preset {s:?} (semicircle, free-poisson:λ, ortmann-uniform, levy-area, beta-tail:α,c)"
            ))),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Preset::BetaTail { alpha, .. } if !(alpha > 0.0 && alpha.is_finite()) => Err(
                Error::InvalidWeights(format!("beta-tail alpha = {alpha} must be positive")),
            ),
            Preset::BetaTail { c, .. } if c < 0.0 => {
                Err(Error::NegativeCumulant { index: 2, value: c })
            }
            Preset::BetaTail { c, .. } if c == 0.0 => Err(Error::DiracInput),
            _ => Ok(()),
        }
    }

    pub fn kappa(&self, n: usize) -> f64 {
        match *self {
            Preset::OrtmannUniform => {
                if n == 0 {
                    0.0
                } else if n % 2 == 1 {
                    1.0
                } else {
                    let j = (n / 2) as i32;
                    let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                    1.0 + sign * 2.0 * zeta(2.0 * j as f64) / PI.powi(2 * j)
                }
            }
            Preset::LevyArea => {
                if n == 0 || n % 2 == 1 {
                    0.0
                } else {
                    2.0 * zeta(n as f64)
                }
            }
            Preset::BetaTail { alpha, c } => {
                if n <= 1 {
                    return 0.0;
                }
                // B(1, α+1) = 1/(α+1); B(m+1, α+1) = B(m, α+1) m/(m+α+1)
                let mut b = 1.0 / (alpha + 1.0);
                for m in 1..n - 1 {
                    b *= m as f64 / (m as f64 + alpha + 1.0);
                }
                c * b
            }
        }
    }

    fn rho(&self) -> Extended {
        Extended::Finite(1.0)
    }

    fn nu(&self) -> Extended {
        match *self {
            Preset::BetaTail { alpha, c } if alpha > 1.0 => {
                Extended::Finite((2.0 * alpha - 1.0) * c / ((alpha - 1.0) * (alpha + c)))
            }
            _ => Extended::Infinite,
        }
    }

    /// `(R, R', R'')` at `0 <= t <= ρ`.
    fn r_transform(&self, t: f64) -> [f64; 3] {
        match *self {
            Preset::OrtmannUniform => {
                if t >= 1.0 {
                    return [f64::INFINITY; 3];
                }
                let pole = 1.0 / (1.0 - t);
                let [a, b, c] = if t < 0.05 {
                    // coth z - 1/z = z/3 - z³/45 + 2z⁵/945 - z⁷/4725
                    let t2 = t * t;
                    [
                        t * (1.0 / 3.0 - t2 / 45.0 + 2.0 * t2 * t2 / 945.0 - t2 * t2 * t2 / 4725.0),
                        1.0 / 3.0 - t2 / 15.0 + 2.0 * t2 * t2 / 189.0 - t2 * t2 * t2 / 675.0,
                        t * (-2.0 / 15.0 + 8.0 * t2 / 189.0 - 6.0 * t2 * t2 / 675.0),
                    ]
                } else {
                    let coth = 1.0 / t.tanh();
                    let csch2 = 1.0 / t.sinh().powi(2);
                    [
                        coth - 1.0 / t,
                        -csch2 + 1.0 / (t * t),
                        2.0 * csch2 * coth - 2.0 / (t * t * t),
                    ]
                };
                [a + pole, b + pole * pole, c + 2.0 * pole * pole * pole]
            }
            Preset::LevyArea => {
                if t >= 1.0 {
                    return [f64::INFINITY; 3];
                }
                if t < 0.05 {
                    // Σ 2ζ(2k) t^{2k-1}
                    let mut out = [0.0; 3];
                    for k in 1..=8 {
                        let a = 2.0 * zeta(2.0 * k as f64);
                        let p = 2 * k - 1;
                        out[0] += a * t.powi(p);
                        out[1] += a * p as f64 * t.powi(p - 1);
                        if p >= 2 {
                            out[2] += a * (p * (p - 1)) as f64 * t.powi(p - 2);
                        }
                    }
                    out
                } else {
                    let (s, c) = (PI * t).sin_cos();
                    let csc2 = 1.0 / (s * s);
                    [
                        1.0 / t - PI * c / s,
                        -1.0 / (t * t) + PI * PI * csc2,
                        2.0 / (t * t * t) - 2.0 * PI.powi(3) * csc2 * c / s,
                    ]
                }
            }
            Preset::BetaTail { alpha, c } => {
                if t >= 1.0 {
                    let d1 = if alpha > 1.0 {
                        c / (alpha - 1.0)
                    } else {
                        f64::INFINITY
                    };
                    // 2c ∫ x (1-x)^{α-3} dx = 2c B(2, α-2)
                    let d2 = if alpha > 2.0 {
                        2.0 * c / ((alpha - 2.0) * (alpha - 1.0))
                    } else {
                        f64::INFINITY
                    };
                    return [c / alpha, d1, d2];
                }
                // substitute y = 1 - x: 1 - xt = 1 - t + ty
                let base = |y: f64| 1.0 - t + t * y;
                [
                    c * graded_integral(|y| t * y.powf(alpha) / base(y)),
                    c * graded_integral(|y| y.powf(alpha) / base(y).powi(2)),
                    c * graded_integral(|y| 2.0 * (1.0 - y) * y.powf(alpha) / base(y).powi(3)),
                ]
            }
        }
    }

    fn name(&self) -> String {
        match self {
            Preset::OrtmannUniform => "ortmann-uniform".into(),
            Preset::LevyArea => "levy-area".into(),
            Preset::BetaTail { alpha, c } => format!("beta-tail:{alpha},{c}"),
        }
    }
}

/// JSON shapes accepted by [`CumulantSeq::from_json`].
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CumulantJson {
    List(Vec<f64>),
    Object {
        cumulants: Vec<f64>,
        #[serde(default)]
        tail: Option<TailJson>,
        #[serde(default)]
        truncated: bool,
    },
}

#[derive(Debug, Deserialize)]
struct TailJson {
    scale: f64,
    ratio: f64,
}

impl CumulantSeq {
    pub fn semicircle() -> Self {
        CumulantSeq::Finite(vec![0.0, 1.0])
    }

    /// Free Poisson law with rate `λ`: every cumulant equals `λ`.
    pub fn free_poisson(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidWeights(format!(
                "free Poisson rate {lambda} must be positive"
            )));
        }
        Ok(CumulantSeq::GeometricTail {
            head: Vec::new(),
            scale: lambda,
            ratio: 1.0,
        })
    }

    /// A JSON list `[κ1, κ2, ...]`, or an object
    /// `{"cumulants": [...], "tail": {"scale": s, "ratio": r}}` /
    /// `{"cumulants": [...], "truncated": true}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: CumulantJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("cumulants: {e}")))?;
        Ok(match parsed {
            CumulantJson::List(v) => CumulantSeq::Finite(v),
            CumulantJson::Object {
                cumulants,
                tail: Some(t),
                ..
            } => CumulantSeq::GeometricTail {
                head: cumulants,
                scale: t.scale,
                ratio: t.ratio,
            },
            CumulantJson::Object {
                cumulants,
                truncated: true,
                ..
            } => CumulantSeq::Truncated(cumulants),
            CumulantJson::Object { cumulants, .. } => CumulantSeq::Finite(cumulants),
        })
    }

    /// `κ_n` (`n >= 1`; `κ_0 = 0`).
    pub fn kappa(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        match self {
            CumulantSeq::Finite(v) | CumulantSeq::Truncated(v) => {
                v.get(n - 1).copied().unwrap_or(0.0)
            }
            CumulantSeq::GeometricTail { head, scale, ratio } => match head.get(n - 1) {
                Some(&k) => k,
                None => scale * ratio.powi(n as i32),
            },
            CumulantSeq::Analytic(p) => p.kappa(n),
        }
    }

    /// Nonnegativity and the non-Dirac condition.
    pub fn validate(&self) -> Result<()> {
        let listed: &[f64] = match self {
            CumulantSeq::Finite(v) | CumulantSeq::Truncated(v) => v,
            CumulantSeq::GeometricTail { head, .. } => head,
            CumulantSeq::Analytic(p) => return p.validate(),
        };
        for (i, &k) in listed.iter().enumerate() {
            if !k.is_finite() {
                return Err(Error::InvalidWeights(format!("kappa_{} = {k}", i + 1)));
            }
            if k < 0.0 {
                return Err(Error::NegativeCumulant {
                    index: i + 1,
                    value: k,
                });
            }
        }
        let mut nontrivial = listed.iter().skip(1).any(|&k| k > 0.0);
        if let CumulantSeq::GeometricTail { head, scale, ratio } = self {
            if !(scale.is_finite() && ratio.is_finite()) || *ratio < 0.0 {
                return Err(Error::InvalidWeights(format!(
                    "tail needs finite scale and ratio >= 0, got {scale}, {ratio}"
                )));
            }
            if *scale < 0.0 {
                return Err(Error::NegativeCumulant {
                    index: head.len() + 1,
                    value: *scale,
                });
            }
            nontrivial |= *scale > 0.0 && *ratio > 0.0;
        }
        if nontrivial {
            Ok(())
        } else {
            Err(Error::DiracInput)
        }
    }

    fn rho(&self) -> Result<Extended> {
        match self {
            CumulantSeq::Finite(_) => Ok(Extended::Infinite),
            CumulantSeq::Truncated(_) => Err(Error::RhoUndetermined(
                "tail of the cumulant sequence is unspecified".into(),
            )),
            CumulantSeq::GeometricTail { scale, ratio, .. } => {
                Ok(if *scale > 0.0 && *ratio > 0.0 {
                    Extended::Finite(1.0 / ratio)
                } else {
                    Extended::Infinite
                })
            }
            CumulantSeq::Analytic(p) => Ok(p.rho()),
        }
    }

    /// `lim_{t↑ρ} Ψ(t) = 1 + lim (t²R'(t) - 1)/(tR(t) + 1)`; infinite whenever
    /// `R'` blows up at `ρ`.
    fn nu(&self) -> Extended {
        match self {
            CumulantSeq::Analytic(p) => p.nu(),
            _ => Extended::Infinite,
        }
    }

    /// `(R, R', R'')` at `t`, where `R(t) = Σ_{n>=0} κ_{n+1} t^n`.
    pub fn r_transform(&self, t: f64) -> [f64; 3] {
        let poly = |coeffs: &[f64]| {
            let mut out = [0.0; 3];
            for (n, &k) in coeffs.iter().enumerate() {
                out[0] += k * t.powi(n as i32);
                if n >= 1 {
                    out[1] += k * n as f64 * t.powi(n as i32 - 1);
                }
                if n >= 2 {
                    out[2] += k * (n * (n - 1)) as f64 * t.powi(n as i32 - 2);
                }
            }
            out
        };
        match self {
            CumulantSeq::Finite(v) | CumulantSeq::Truncated(v) => poly(v),
            CumulantSeq::GeometricTail { head, scale, ratio } => {
                let mut out = poly(head);
                let h = head.len() as i32;
                let q = 1.0 - ratio * t;
                if q <= 0.0 {
                    return [f64::INFINITY; 3];
                }
                // scale r^{h+1} t^h / (1 - r t)
                let a = scale * ratio.powi(h + 1);
                let hf = h as f64;
                let th = t.powi(h);
                let th1 = if h >= 1 { t.powi(h - 1) } else { 0.0 };
                let th2 = if h >= 2 { t.powi(h - 2) } else { 0.0 };
                out[0] += a * th / q;
                out[1] += a * (hf * th1 / q + ratio * th / (q * q));
                out[2] += a
                    * (hf * (hf - 1.0) * th2 / q
                        + 2.0 * hf * ratio * th1 / (q * q)
                        + 2.0 * ratio * ratio * th / (q * q * q));
                out
            }
            CumulantSeq::Analytic(p) => p.r_transform(t),
        }
    }

    pub fn label(&self) -> String {
        match self {
            CumulantSeq::Finite(v) => format!("cumulants:{v:?}"),
            CumulantSeq::Truncated(v) => format!("truncated:{v:?}"),
            CumulantSeq::GeometricTail { head, scale, ratio } => {
                format!("cumulants:{head:?}+{scale}*{ratio}^n")
            }
            CumulantSeq::Analytic(p) => p.name(),
        }
    }

    /// Weights `w(0) = 1`, `w(k) = κ_k`.
    pub fn as_weights(&self) -> Result<WeightSeq> {
        self.validate()?;
        match self {
            CumulantSeq::Finite(v) => {
                let mut w = Vec::with_capacity(v.len() + 1);
                w.push(1.0);
                w.extend_from_slice(v);
                WeightSeq::explicit(w)
            }
            CumulantSeq::Truncated(_) => Err(self.rho().unwrap_err()),
            _ => Ok(WeightSeq::Analytic(Arc::new(CumulantWeights(self.clone())))),
        }
    }
}

/// Adapter exposing `Φ(t) = 1 + tR(t)` to the weights module.
#[derive(Debug, Clone)]
struct CumulantWeights(CumulantSeq);

impl AnalyticWeights for CumulantWeights {
    fn weight(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.0.kappa(k)
        }
    }

    fn rho(&self) -> Extended {
        self.0.rho().unwrap_or(Extended::Infinite)
    }

    fn nu(&self) -> Extended {
        self.0.nu()
    }

    fn phi(&self, t: f64) -> Result<[f64; 3]> {
        let [r, d1, d2] = self.0.r_transform(t);
        Ok([1.0 + t * r, r + t * d1, 2.0 * d1 + t * d2])
    }

    fn name(&self) -> String {
        self.0.label()
    }
}

/// The right edge of the support: `1/ξ + R(ξ)` with `ξ²R'(ξ) = 1` when `ν >= 1`,
/// `1/ρ + R(ρ)` otherwise.
pub fn support_max(kappa: &CumulantSeq) -> Result<SupportResult> {
    kappa.validate()?;
    let rho = kappa.rho()?;
    let nu = kappa.nu();
    let excess = |t: f64| {
        let d = kappa.r_transform(t)[1];
        t * t * d - 1.0
    };
    if nu.at_least(1.0 + NU_BAND) {
        let hi = match rho {
            Extended::Finite(r) => r,
            Extended::Infinite => grow_bracket(excess, 1.0)?,
        };
        let root = bisect_increasing(excess, 0.0, hi, BISECTION_TOL * 1e-2)?;
        let xi = polish(kappa, root.x, root.lo, root.hi);
        let [r, ..] = kappa.r_transform(xi);
        return Ok(SupportResult {
            rho,
            nu,
            xi,
            s_max: 1.0 / xi + r,
            branch: Branch::NuGe1,
            residual: Some(excess(xi)),
            bracket: Some((root.lo, root.hi)),
        });
    }
    let r = rho
        .finite()
        .ok_or_else(|| Error::RhoUndetermined(format!("nu = {nu} < 1 requires a finite radius")))?;
    let [rr, ..] = kappa.r_transform(r);
    let branch = if (nu.min_f64(f64::MAX) - 1.0).abs() < NU_BAND {
        Branch::NuGe1
    } else {
        Branch::NuLt1
    };
    Ok(SupportResult {
        rho,
        nu,
        xi: r,
        s_max: 1.0 / r + rr,
        branch,
        residual: None,
        bracket: None,
    })
}

/// Newton steps on `t²R'(t) - 1`, kept only while they stay in the bracket
/// and shrink the residual.
fn polish(kappa: &CumulantSeq, mut x: f64, lo: f64, hi: f64) -> f64 {
    let f = |t: f64| {
        let [_, d1, d2] = kappa.r_transform(t);
        (t * t * d1 - 1.0, 2.0 * t * d1 + t * t * d2)
    };
    for _ in 0..4 {
        let (v, dv) = f(x);
        if v == 0.0 || !(dv > 0.0) {
            break;
        }
        let next = x - v / dv;
        if !(next > lo && next < hi) || f(next).0.abs() >= v.abs() {
            break;
        }
        x = next;
    }
    x
}

/// `Φ(ξ)/ξ` from the tilted law of `w = (1, κ_1, κ_2, ...)`.
pub fn support_via_weights(kappa: &CumulantSeq) -> Result<f64> {
    let law = equivalent_distribution(&kappa.as_weights()?)?;
    Ok(law.phi_at_xi() / law.xi())
}

/// `m_1..m_N` with `m_n = Σ_{P∈NC_n} Π_B κ_{|B|}`, exact.
pub fn moments_exact(kappa: &[BigRational], count: usize) -> Vec<BigRational> {
    let mut w = Vec::with_capacity(kappa.len() + 1);
    w.push(BigRational::one());
    w.extend_from_slice(kappa);
    (1..=count)
        .map(|n| tree_partition_function(&w, n))
        .collect()
}

/// Table `P[s][j] = [z^j] M(z)^s` grown column by column, where
/// `M = 1 + Σ m_i z^i` and column `j` needs only `m_1..m_j`.
fn moment_cumulant_sweep<T>(count: usize, mut step: impl FnMut(usize, &[Vec<T>]) -> T) -> Vec<T>
where
    T: Clone + Zero + One + std::ops::Mul<Output = T>,
{
    // powers[s][j] for s in 0..=count, j in 0..count
    let mut powers: Vec<Vec<T>> = (0..=count)
        .map(|_| {
            let mut row = Vec::with_capacity(count);
            row.push(T::one());
            row
        })
        .collect();
    let mut m: Vec<T> = vec![T::one()];
    for n in 1..=count {
        // powers columns 0..n-1 are final; m_n from step
        let mn = step(n, &powers);
        m.push(mn);
        if n == count {
            break;
        }
        // column n of every power
        powers[0].push(T::zero());
        for s in 1..=count {
            let mut acc = T::zero();
            for i in 0..=n {
                acc = acc + m[i].clone() * powers[s - 1][n - i].clone();
            }
            powers[s].push(acc);
        }
    }
    m.remove(0);
    m
}

/// Moments `m_1..m_N` of the measure with free cumulants `kappa`.
pub fn moments_from_cumulants(kappa: &CumulantSeq, count: usize) -> Vec<f64> {
    // m_n = Σ_{s=1}^n κ_s [z^{n-s}] M^s
    moment_cumulant_sweep(count, |n, p| {
        (1..=n).map(|s| kappa.kappa(s) * p[s][n - s]).sum()
    })
}

/// Inverts the moment-cumulant relation order by order: `κ_n` enters `m_n`
/// with coefficient 1.
pub fn cumulants_from_moments(moments: &[f64], count: usize) -> Vec<f64> {
    let mut kappa = Vec::with_capacity(count);
    moment_cumulant_sweep(count, |n, p| {
        let lower: f64 = (1..n).map(|s| kappa[s - 1] * p[s][n - s]).sum();
        kappa.push(moments[n - 1] - lower);
        moments[n - 1]
    });
    kappa
}

/// Exact version of [`cumulants_from_moments`].
pub fn cumulants_exact(moments: &[BigRational], count: usize) -> Vec<BigRational> {
    let mut kappa: Vec<BigRational> = Vec::with_capacity(count);
    moment_cumulant_sweep(count, |n, p| {
        let mut lower = BigRational::zero();
        for s in 1..n {
            lower += &kappa[s - 1] * &p[s][n - s];
        }
        kappa.push(&moments[n - 1] - lower);
        moments[n - 1].clone()
    });
    kappa
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn catalan(k: u64) -> f64 {
        (0..k).fold(1.0, |c, i| c * 2.0 * (2 * i + 1) as f64 / (i + 2) as f64)
    }

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn semicircle_and_free_poisson_moments() {
        let m = moments_from_cumulants(&CumulantSeq::semicircle(), 12);
        for k in 1..=6 {
            assert_eq!(m[2 * k - 1], catalan(k as u64));
            assert_eq!(m[2 * k - 2], 0.0);
        }
        let m = moments_from_cumulants(&CumulantSeq::free_poisson(1.0).unwrap(), 10);
        for n in 1..=10 {
            assert!((m[n - 1] - catalan(n as u64)).abs() < 1e-9 * catalan(n as u64));
        }
        assert_eq!(m[2], 5.0);
        let m = moments_from_cumulants(&CumulantSeq::Finite(vec![1.5]), 6);
        for n in 1..=6 {
            assert!((m[n - 1] - 1.5f64.powi(n as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_moments_agree_with_sweep() {
        let kappa = vec![q(2), q(0), q(3), BigRational::new(1.into(), 7.into())];
        let exact = moments_exact(&kappa, 14);
        let floats =
            moments_from_cumulants(&CumulantSeq::Finite(vec![2.0, 0.0, 3.0, 1.0 / 7.0]), 14);
        for (e, f) in exact.iter().zip(&floats) {
            let e = num_traits::ToPrimitive::to_f64(e).unwrap();
            assert!((e - f).abs() <= 1e-12 * e.abs());
        }
        assert_eq!(cumulants_exact(&exact, 14)[..4], kappa[..]);
        assert!(cumulants_exact(&exact, 14)[4..].iter().all(Zero::is_zero));
        let back = cumulants_from_moments(&floats, 10);
        assert!((back[2] - 3.0).abs() < 1e-9 && back[5].abs() < 1e-6);
    }

    #[test]
    fn closed_form_supports() {
        let r = support_max(&CumulantSeq::semicircle()).unwrap();
        assert!((r.xi - 1.0).abs() < 1e-12 && (r.s_max - 2.0).abs() < 1e-12);
        assert_eq!(r.branch, Branch::NuGe1);
        for lambda in [0.25, 1.0, 4.0] {
            let r = support_max(&CumulantSeq::free_poisson(lambda).unwrap()).unwrap();
            let edge = (1.0 + f64::sqrt(lambda)).powi(2);
            assert!((r.s_max - edge).abs() < 1e-10, "{lambda}: {}", r.s_max);
            assert!(r.residual.unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn preset_supports() {
        let o = support_max(&Preset::parse("ortmann-uniform").unwrap()).unwrap();
        // ξ solves sinh ξ = 1 - ξ
        assert!((o.xi.sinh() - (1.0 - o.xi)).abs() < 1e-9);
        assert!((o.s_max - 4.16).abs() < 0.01);
        let l = support_max(&Preset::parse("levy-area").unwrap()).unwrap();
        let x = PI * l.xi;
        assert!((x.sin() / x - 0.5f64.sqrt()).abs() < 1e-9);
        assert!((l.s_max - 3.94).abs() < 0.01);
        let b = support_max(&Preset::parse("beta-tail:2,0.5").unwrap()).unwrap();
        assert_eq!(b.branch, Branch::NuLt1);
        assert!((b.nu.finite().unwrap() - 0.6).abs() < 1e-12);
        assert!((b.s_max - 1.25).abs() < 1e-12);
    }

    #[test]
    fn preset_transforms_match_their_cumulants() {
        for p in [
            Preset::OrtmannUniform,
            Preset::LevyArea,
            Preset::BetaTail { alpha: 2.0, c: 0.5 },
            Preset::BetaTail { alpha: 3.5, c: 2.0 },
        ] {
            for t in [0.01f64, 0.2, 0.45, 0.6] {
                let series: f64 = (0..4000).map(|n| p.kappa(n + 1) * t.powi(n as i32)).sum();
                let deriv: f64 = (1..4000)
                    .map(|n| p.kappa(n + 1) * n as f64 * t.powi(n as i32 - 1))
                    .sum();
                let [r, d, _] = p.r_transform(t);
                assert!((r - series).abs() < 1e-10, "{p:?} R({t}) {r} vs {series}");
                assert!((d - deriv).abs() < 1e-9, "{p:?} R'({t}) {d} vs {deriv}");
            }
        }
    }

    #[test]
    fn cross_identity_with_weights() {
        for seq in [
            CumulantSeq::semicircle(),
            CumulantSeq::free_poisson(1.0).unwrap(),
            CumulantSeq::Finite(vec![0.3, 0.0, 2.0]),
            Preset::parse("ortmann-uniform").unwrap(),
            Preset::parse("levy-area").unwrap(),
            Preset::parse("beta-tail:2,0.5").unwrap(),
        ] {
            let direct = support_max(&seq).unwrap().s_max;
            let via = support_via_weights(&seq).unwrap();
            assert!(
                (direct - via).abs() < 1e-10,
                "{}: {direct} vs {via}",
                seq.label()
            );
        }
    }

    #[test]
    fn input_errors() {
        assert!(matches!(
            support_max(&CumulantSeq::Finite(vec![1.0, -1.0])),
            Err(Error::NegativeCumulant { index: 2, .. })
        ));
        assert!(matches!(
            support_max(&CumulantSeq::Finite(vec![3.0])),
            Err(Error::DiracInput)
        ));
        assert!(matches!(
            support_max(&CumulantSeq::Truncated(vec![1.0, 1.0, 1.0])),
            Err(Error::RhoUndetermined(_))
        ));
        assert_eq!(
            CumulantSeq::from_json("[0, 1]").unwrap(),
            CumulantSeq::semicircle()
        );
        assert_eq!(
            CumulantSeq::from_json(r#"{"cumulants": [], "tail": {"scale": 1, "ratio": 1}}"#)
                .unwrap(),
            CumulantSeq::free_poisson(1.0).unwrap()
        );
        assert!(Preset::parse("nope").is_err());
    }
}
