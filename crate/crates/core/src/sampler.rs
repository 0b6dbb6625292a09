//! Exact sampling of weighted non-crossing partitions.
//!
//! A partition of `[n]` with law `ℙ^w_n` is the image under `P∘` of a tree with
//! `n + 1` vertices whose degree sequence is i.i.d. `π` conditioned on summing
//! to `n`. The pipeline draws such a sequence, rotates it uniformly, moves it
//! to the unique rotation that is a Łukasiewicz path (cycle lemma) and reads
//! the partition off the path.
//!
//! Conditioning on the sum equal to `n` makes degrees above `n` impossible, so
//! every method works with `π` restricted to `{0, ..., n}`.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::bijections::partition_from_walk;
use crate::error::{Error, Result};
use crate::model::{LukaWalk, NCPartition};
use crate::weights::TiltedLaw;

/// `Method::Auto` uses the table up to this size and count sampling above.
pub const DP_TABLE_AUTO_LIMIT: usize = 256;

/// Normalization guard on the table conditionals.
const NORM_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Method {
    #[default]
    Auto,
    /// Exact sequential conditionals from a log-space table of
    /// `q_m(s) = P(m draws sum to s)`.
    DpTable,
    /// Whole sequences of i.i.d. draws until the sum is `n`.
    Rejection,
    /// Degree counts by sequential binomials until `Σ k N_k = n`, then a
    /// uniform arrangement.
    Multinomial,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Method::Auto),
            "dp_table" | "dp-table" => Ok(Method::DpTable),
            "rejection" => Ok(Method::Rejection),
            "multinomial" => Ok(Method::Multinomial),
            _ => Err(Error::Parse(format!("unknown sampling method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub law: Arc<TiltedLaw>,
    pub n: usize,
    pub seed: u64,
    pub method: Method,
}

impl SamplerConfig {
    pub fn new(law: TiltedLaw, n: usize, seed: u64) -> Self {
        SamplerConfig {
            law: Arc::new(law),
            n,
            seed,
            method: Method::Auto,
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for replica `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed ^ mix(stream)))
}

/// Whether `n` is a sum of elements of `parts` (all positive).
fn representable(parts: &[usize], n: usize) -> bool {
    if n == 0 {
        return true;
    }
    let g = parts.iter().fold(0, |g, &k| num_integer::gcd(g, k));
    if g == 0 || !n.is_multiple_of(g) {
        return false;
    }
    let lo = parts[0] / g;
    let hi = parts[parts.len() - 1] / g;
    // Schur: every multiple of g from (lo-1)(hi-1)·g on is representable
    if n / g >= (lo - 1) * (hi - 1) {
        return true;
    }
    let mut reach = vec![false; n + 1];
    reach[0] = true;
    for s in 1..=n {
        reach[s] = parts.iter().take_while(|&&k| k <= s).any(|&k| reach[s - k]);
    }
    reach[n]
}

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[derive(Debug)]
struct DpTable {
    /// row `m`, column `s`: ln q_m(s); row length n + 1
    log_q: Vec<f64>,
    width: usize,
}

impl DpTable {
    fn build(n: usize, support: &[usize], log_pi: &[f64]) -> Self {
        let width = n + 1;
        let rows = n + 2;
        let mut log_q = vec![f64::NEG_INFINITY; rows * width];
        log_q[0] = 0.0;
        for m in 1..rows {
            let (prev, cur) = log_q.split_at_mut(m * width);
            let prev = &prev[(m - 1) * width..];
            let cur = &mut cur[..width];
            for s in 0..width {
                cur[s] = log_sum_exp(
                    support
                        .iter()
                        .zip(log_pi)
                        .take_while(|(&k, _)| k <= s)
                        .map(|(&k, &lp)| lp + prev[s - k]),
                );
            }
        }
        DpTable { log_q, width }
    }

    fn get(&self, m: usize, s: usize) -> f64 {
        self.log_q[m * self.width + s]
    }
}

#[derive(Debug)]
enum Plan {
    Table(DpTable),
    Rejection(WeightedAliasIndex<f64>),
    /// conditional probabilities `π_i / Σ_{j>=i} π_j` along the support
    Counts(Vec<f64>),
}

/// A sampler prepared for one `(law, n)`. Cheap to share across threads.
#[derive(Debug, Clone)]
pub struct Sampler {
    cfg: SamplerConfig,
    support: Arc<Vec<usize>>,
    log_pi: Arc<Vec<f64>>,
    plan: Arc<Plan>,
}

impl Sampler {
    pub fn new(cfg: SamplerConfig) -> Result<Self> {
        let n = cfg.n;
        let support = cfg.law.weights().support_up_to(n);
        let positive: Vec<usize> = support.iter().copied().filter(|&k| k > 0).collect();
        if !representable(&positive, n) {
            let g = positive.iter().fold(0, |g, &k| num_integer::gcd(g, k));
            return Err(Error::Infeasible(format!(
                "no tree with {} vertices has all outdegrees in the support (n = {n}, gcd = {g})",
                n + 1
            )));
        }
        let table = cfg.law.pmf_table(n + 1);
        let restricted: Vec<f64> = support.iter().map(|&k| table[k]).collect();
        let total: f64 = restricted.iter().sum();
        let pi: Vec<f64> = restricted.iter().map(|p| p / total).collect();
        let log_pi: Vec<f64> = pi.iter().map(|p| p.ln()).collect();
        let method = match cfg.method {
            Method::Auto if n <= DP_TABLE_AUTO_LIMIT => Method::DpTable,
            Method::Auto => Method::Multinomial,
            m => m,
        };
        let plan = match method {
            Method::DpTable => Plan::Table(DpTable::build(n, &support, &log_pi)),
            Method::Rejection => Plan::Rejection(
                WeightedAliasIndex::new(pi.clone())
                    .map_err(|e| Error::InvalidWeights(format!("alias table: {e}")))?,
            ),
            Method::Multinomial => {
                let mut tail = 0.0;
                let mut cond = vec![0.0; pi.len()];
                for i in (0..pi.len()).rev() {
                    tail += pi[i];
                    cond[i] = (pi[i] / tail).clamp(0.0, 1.0);
                }
                if let Some(last) = cond.last_mut() {
                    *last = 1.0;
                }
                Plan::Counts(cond)
            }
            Method::Auto => unreachable!(),
        };
        Ok(Sampler {
            cfg,
            support: Arc::new(support),
            log_pi: Arc::new(log_pi),
            plan: Arc::new(plan),
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    pub fn n(&self) -> usize {
        self.cfg.n
    }

    /// i.i.d. `π` degrees `d_0..d_n` conditioned on `Σ d_i = n`.
    pub fn degree_sequence<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let n = self.cfg.n;
        match &*self.plan {
            Plan::Table(dp) => {
                let mut out = Vec::with_capacity(n + 1);
                let mut s = n;
                let mut weights = Vec::with_capacity(self.support.len());
                for i in 0..=n {
                    let m = n + 1 - i;
                    let norm = dp.get(m, s);
                    weights.clear();
                    let mut total = 0.0;
                    for (&k, &lp) in self.support.iter().zip(self.log_pi.iter()) {
                        if k > s {
                            break;
                        }
                        let w = (lp + dp.get(m - 1, s - k) - norm).exp();
                        total += w;
                        weights.push(w);
                    }
                    debug_assert!((total - 1.0).abs() < 1e-6, "conditional mass {total}");
                    let total = total.max(NORM_GUARD);
                    let mut u = rng.random::<f64>() * total;
                    let mut pick = weights.len() - 1;
                    for (j, &w) in weights.iter().enumerate() {
                        if u < w {
                            pick = j;
                            break;
                        }
                        u -= w;
                    }
                    // rounding can land on a zero-mass tail entry
                    while weights[pick] == 0.0 && pick > 0 {
                        pick -= 1;
                    }
                    let k = self.support[pick];
                    out.push(k);
                    s -= k;
                }
                out
            }
            Plan::Rejection(alias) => {
                let mut out = Vec::with_capacity(n + 1);
                'attempt: loop {
                    out.clear();
                    let mut sum = 0usize;
                    for _ in 0..=n {
                        let k = self.support[alias.sample(rng)];
                        sum += k;
                        if sum > n {
                            continue 'attempt;
                        }
                        out.push(k);
                    }
                    if sum == n {
                        return out;
                    }
                }
            }
            Plan::Counts(cond) => loop {
                let mut remaining = (n + 1) as u64;
                let mut sum = 0usize;
                let mut counts: Vec<(usize, u64)> = Vec::new();
                for (i, &p) in cond.iter().enumerate() {
                    if remaining == 0 {
                        break;
                    }
                    let c = if p >= 1.0 {
                        remaining
                    } else {
                        Binomial::new(remaining, p)
                            .expect("p in [0, 1]")
                            .sample(rng)
                    };
                    if c == 0 {
                        continue;
                    }
                    let k = self.support[i];
                    sum += k * c as usize;
                    if sum > n {
                        break;
                    }
                    remaining -= c;
                    counts.push((k, c));
                }
                if sum == n && remaining == 0 {
                    let mut out = Vec::with_capacity(n + 1);
                    for (k, c) in counts {
                        out.extend(std::iter::repeat_n(k, c as usize));
                    }
                    out.shuffle(rng);
                    return out;
                }
            },
        }
    }

    /// One draw of the partition law.
    pub fn partition<R: Rng + ?Sized>(&self, rng: &mut R) -> NCPartition {
        let mut degrees = self.degree_sequence(rng);
        let r = rng.random_range(0..degrees.len());
        degrees.rotate_left(r);
        let walk = cycle_shift(&degrees).expect("sampled degrees sum to n");
        partition_from_walk(&walk)
    }

    /// Replica `index` of this configuration.
    pub fn replica(&self, index: u64) -> NCPartition {
        self.partition(&mut stream_rng(self.cfg.seed, index))
    }

    /// Replicas `0..count`, computed in parallel and returned in order.
    pub fn replicas(&self, count: usize) -> Vec<NCPartition> {
        (0..count as u64)
            .into_par_iter()
            .map(|i| self.replica(i))
            .collect()
    }
}

/// Rotates `degrees` so that `W_{j+1} = W_j + d_j - 1` is a Łukasiewicz
/// path: the rotation starts right after the first minimum of the partial
/// sums.
pub fn cycle_shift(degrees: &[usize]) -> Result<LukaWalk> {
    let len = degrees.len();
    let sum: usize = degrees.iter().sum();
    if len == 0 || sum + 1 != len {
        return Err(Error::BadSum {
            sum: sum as i64,
            expected: len as i64 - 1,
        });
    }
    let mut h = 0i64;
    let mut best = (i64::MAX, 0usize);
    for (j, &d) in degrees.iter().enumerate() {
        h += d as i64 - 1;
        if h < best.0 {
            best = (h, j + 1);
        }
    }
    let start = best.1 % len;
    let mut values = Vec::with_capacity(len + 1);
    let mut w = 0i64;
    values.push(w);
    for i in 0..len {
        w += degrees[(start + i) % len] as i64 - 1;
        values.push(w);
    }
    Ok(LukaWalk::from_valid(values))
}

/// Degree sequence of one draw, seeded by `rng`.
pub fn sample_degree_sequence<R: Rng + ?Sized>(
    law: &TiltedLaw,
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let sampler = Sampler::new(SamplerConfig::new(law.clone(), n, 0))?;
    Ok(sampler.degree_sequence(rng))
}

/// One partition from `cfg` (replica 0 of its seed).
pub fn sample_partition(cfg: &SamplerConfig) -> Result<NCPartition> {
    Ok(Sampler::new(cfg.clone())?.replica(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bijections::t_circ;
    use crate::weights::{equivalent_distribution, WeightSeq};
    use std::collections::HashMap;

    fn law(s: &str) -> TiltedLaw {
        equivalent_distribution(&WeightSeq::parse(s).unwrap()).unwrap()
    }

    #[test]
    fn cycle_shift_examples() {
        assert_eq!(cycle_shift(&[0, 2, 0]).unwrap().values(), &[0, 1, 0, -1]);
        assert_eq!(cycle_shift(&[0]).unwrap().values(), &[0, -1]);
        let valid = [3, 1, 0, 1, 0, 4, 0, 1, 2, 0, 0, 0, 0];
        assert_eq!(cycle_shift(&valid).unwrap().degrees(), valid);
        assert_eq!(
            cycle_shift(&[1, 1]).unwrap_err(),
            Error::BadSum {
                sum: 2,
                expected: 1
            }
        );
    }

    #[test]
    fn cycle_shift_picks_the_unique_valid_rotation() {
        let base = [2usize, 0, 1, 4, 0, 0, 1, 0, 0];
        for r in 0..base.len() {
            let mut d = base.to_vec();
            d.rotate_left(r);
            let w = cycle_shift(&d).unwrap();
            assert!(LukaWalk::new(w.values().to_vec()).is_ok());
            let valid: Vec<usize> = (0..d.len())
                .filter(|&s| {
                    let mut rot = d.clone();
                    rot.rotate_left(s);
                    crate::model::PlaneTree::new(rot).is_ok()
                })
                .collect();
            assert_eq!(valid.len(), 1);
        }
    }

    #[test]
    fn binary_degrees_are_forced() {
        let l = law("set:2");
        for method in [Method::DpTable, Method::Rejection, Method::Multinomial] {
            let s = Sampler::new(SamplerConfig::new(l.clone(), 2, 7).with_method(method)).unwrap();
            for i in 0..50 {
                let mut d = s.degree_sequence(&mut stream_rng(1, i));
                d.sort_unstable();
                assert_eq!(d, vec![0, 0, 2]);
            }
        }
    }

    #[test]
    fn infeasible_sizes() {
        let err = Sampler::new(SamplerConfig::new(law("set:3"), 4, 0)).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
        assert!(Sampler::new(SamplerConfig::new(law("set:{3,5}"), 7, 0)).is_err());
        assert!(Sampler::new(SamplerConfig::new(law("set:{3,5}"), 8, 0)).is_ok());
        assert!(Sampler::new(SamplerConfig::new(law("multiples:3"), 3000, 0)).is_ok());
        assert!(Sampler::new(SamplerConfig::new(law("multiples:3"), 3001, 0)).is_err());
    }

    #[test]
    fn degree_multiset_law_for_three() {
        // trees with 4 vertices: one of type 3000, three of type 2100, one of type 1110
        let l = law("all");
        for method in [Method::DpTable, Method::Rejection, Method::Multinomial] {
            let s = Sampler::new(SamplerConfig::new(l.clone(), 3, 0).with_method(method)).unwrap();
            let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
            let reps = 60_000;
            for i in 0..reps {
                let mut d = s.degree_sequence(&mut stream_rng(11, i));
                d.sort_unstable_by(|a, b| b.cmp(a));
                *counts.entry(d).or_default() += 1;
            }
            for (key, p) in [
                (vec![3, 0, 0, 0], 0.2),
                (vec![2, 1, 0, 0], 0.6),
                (vec![1, 1, 1, 0], 0.2),
            ] {
                let f = counts[&key] as f64 / reps as f64;
                // 5 standard errors
                let se = (p * (1.0 - p) / reps as f64).sqrt();
                assert!((f - p).abs() < 5.0 * se, "{method:?} {key:?}: {f}");
            }
        }
    }

    #[test]
    fn pipeline_consistency_and_determinism() {
        for (w, n) in [
            ("all", 40),
            ("odd", 301),
            ("set:{2,3}", 50),
            ("multiples:5", 500),
        ] {
            let l = law(w);
            let s = Sampler::new(SamplerConfig::new(l, n, 99)).unwrap();
            let a = s.replicas(8);
            assert_eq!(a, s.replicas(8));
            for p in &a {
                assert_eq!(p.n(), n);
                assert!(p
                    .block_sizes()
                    .iter()
                    .all(|&k| s.config().law.weights().weight(k) > 0.0));
                let mut from_tree: Vec<usize> = t_circ(p).degrees().to_vec();
                from_tree.sort_unstable();
                let mut expected: Vec<usize> = p.block_sizes();
                expected.resize(n + 1, 0);
                expected.sort_unstable();
                assert_eq!(from_tree, expected);
            }
        }
    }

    #[test]
    fn heavy_tail_law_samples() {
        let l = equivalent_distribution(&WeightSeq::parse("stable:1.5").unwrap()).unwrap();
        let s = Sampler::new(SamplerConfig::new(l, 3000, 5)).unwrap();
        for p in s.replicas(4) {
            assert_eq!(p.block_sizes().iter().sum::<usize>(), 3000);
        }
    }
}
