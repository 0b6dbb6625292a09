//! Block statistics of partitions and their large-`n` predictions.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::NCPartition;
use crate::sampler::{Sampler, SamplerConfig};
use crate::series::brute_force_enumerate;
use crate::weights::{MemberSet, Predicate, TiltedLaw, WeightSeq};

/// Block census of one partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockReport {
    pub n: usize,
    /// size of the block containing 1 (0 for the empty partition)
    pub s1: usize,
    /// `N_k`: number of blocks of size `k`
    pub histogram: BTreeMap<usize, usize>,
    /// `ζ_A`: number of blocks with size in `A`, keyed by the label of `A`
    pub zeta: Vec<(String, usize)>,
    /// the `m` largest block sizes, nonincreasing
    pub largest: Vec<usize>,
}

impl BlockReport {
    pub fn block_count(&self) -> usize {
        self.histogram.values().sum()
    }

    pub fn count(&self, k: usize) -> usize {
        self.histogram.get(&k).copied().unwrap_or(0)
    }
}

/// One pass over the blocks of `p`.
pub fn block_report(p: &NCPartition, sets: &[MemberSet], m: usize) -> BlockReport {
    let mut histogram = BTreeMap::new();
    for b in p.blocks() {
        *histogram.entry(b.len()).or_insert(0) += 1;
    }
    // blocks are sorted by smallest element, so block 0 holds 1
    let s1 = p.blocks().first().map_or(0, Vec::len);
    let zeta = sets
        .iter()
        .map(|a| {
            let z = histogram
                .iter()
                .filter(|(&k, _)| a.contains(k))
                .map(|(_, &c)| c)
                .sum();
            (a.to_string(), z)
        })
        .collect();
    let mut largest: Vec<usize> = histogram
        .iter()
        .rev()
        .flat_map(|(&k, &c)| std::iter::repeat_n(k, c))
        .take(m)
        .collect();
    largest.shrink_to_fit();
    BlockReport {
        n: p.n(),
        s1,
        histogram,
        zeta,
        largest,
    }
}

/// Limits of the root-block law `k π(k)` and of the law of a uniformly
/// chosen block `π(k) / (1 - π(0))`.
#[derive(Debug, Clone)]
pub struct LimitLaws<'a> {
    law: &'a TiltedLaw,
    non_leaf: f64,
}

impl LimitLaws<'_> {
    pub fn root(&self, k: usize) -> f64 {
        k as f64 * self.law.pmf(k)
    }

    pub fn typical(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.law.pmf(k) / self.non_leaf
        }
    }

    /// `Σ_k k π(k)` over the effective support: 1 in the critical case.
    pub fn root_total(&self) -> f64 {
        let kmax = self.law.effective_support(1e-18);
        (1..=kmax).map(|k| self.root(k)).sum()
    }
}

pub fn limit_block_laws(law: &TiltedLaw) -> Result<LimitLaws<'_>> {
    let non_leaf = 1.0 - law.pmf(0);
    if non_leaf <= 0.0 {
        return Err(Error::DegeneratePi);
    }
    Ok(LimitLaws { law, non_leaf })
}

/// Limiting covariance of `(ζ_A - nπ(A))/√n` and `(ζ_B - nπ(B))/√n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CltCovariance {
    /// `π(A∩B) - π(A)π(B) - S_A S_B / σ²` with `S_A = Σ_{r∈A} (r-1)π(r)`
    pub corrected: f64,
    /// the variant with `Σ_{r∈A} (r-1)²π(r)` in the correction term, defined
    /// for `A = B` and for disjoint sets
    pub printed: Option<f64>,
}

pub fn clt_covariance(law: &TiltedLaw, a: &MemberSet, b: &MemberSet) -> Result<CltCovariance> {
    if !law.is_critical() || (law.mean() - 1.0).abs() > 1e-9 {
        return Err(Error::NotCritical { mean: law.mean() });
    }
    let sigma2 = match law.variance().finite() {
        Some(v) if v > 0.0 => v,
        _ => {
            return Err(Error::InfiniteVariance(format!(
                "sigma^2 = {}",
                law.variance()
            )))
        }
    };
    let pa = law.mass(a);
    let pb = law.mass(b);
    let first = |s: &MemberSet| law.sum_over(s, |r, p| (r as f64 - 1.0) * p);
    let second = |s: &MemberSet| law.sum_over(s, |r, p| (r as f64 - 1.0).powi(2) * p);
    let both = law.sum_over(a, |r, p| if b.contains(r) { p } else { 0.0 });
    let corrected = both - pa * pb - first(a) * first(b) / sigma2;
    let printed = if a == b {
        Some(pa * (1.0 - pa) - second(a) / sigma2)
    } else if both == 0.0 && disjoint(law, a, b) {
        Some(-pa * pb - second(a) * second(b) / sigma2)
    } else {
        None
    };
    Ok(CltCovariance { corrected, printed })
}

fn disjoint(law: &TiltedLaw, a: &MemberSet, b: &MemberSet) -> bool {
    let limit = a
        .max()
        .or(b.max())
        .unwrap_or_else(|| law.effective_support(1e-17));
    (1..=limit).all(|k| !(a.contains(k) && b.contains(k)))
}

/// Exact law of the root-block size `S_1` under the weighted partition law
/// on `[n]`, by enumeration (`n <= 16`). Entry `k` is `P(S_1 = k)`.
pub fn exact_root_block_law(w: &WeightSeq, n: usize) -> Result<Vec<f64>> {
    let mut mass = vec![0.0; n + 1];
    let mut total = 0.0;
    brute_force_enumerate(n, |p| {
        let weight: f64 = p.blocks().iter().map(|b| w.weight(b.len())).product();
        if weight > 0.0 {
            mass[p.blocks()[0].len()] += weight;
            total += weight;
        }
    })?;
    Ok(mass.into_iter().map(|x| x / total).collect())
}

/// One row of an empirical report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub statistic: String,
    pub k_or_set: String,
    pub observed: f64,
    pub predicted: Option<f64>,
    pub stderr: f64,
}

/// Monte Carlo comparison of block statistics with their limits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalReport {
    pub n: usize,
    pub replicas: usize,
    pub seed: u64,
    pub rows: Vec<SuiteRow>,
}

impl EmpiricalReport {
    pub fn row(&self, statistic: &str, key: &str) -> Option<&SuiteRow> {
        self.rows
            .iter()
            .find(|r| r.statistic == statistic && r.k_or_set == key)
    }

    /// CSV with columns `statistic,k_or_set,observed,predicted,stderr,n,replicas,seed`.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("statistic,k_or_set,observed,predicted,stderr,n,replicas,seed\n");
        for r in &self.rows {
            let predicted = r.predicted.map(|p| format!("{p:.10}")).unwrap_or_default();
            let key = if r.k_or_set.contains(',') {
                format!("\"{}\"", r.k_or_set)
            } else {
                r.k_or_set.clone()
            };
            writeln!(
                out,
                "{},{},{:.10},{},{:.10},{},{},{}",
                r.statistic, key, r.observed, predicted, r.stderr, self.n, self.replicas, self.seed
            )
            .expect("writing to a String");
        }
        out
    }
}

struct Summary {
    s1: usize,
    blocks: usize,
    /// N_k for k in 1..=kmax (index 0 unused)
    counts: Vec<usize>,
    zeta: Vec<usize>,
    largest: usize,
}

fn mean_and_stderr(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64, f64) {
    let r = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / r;
    let var = if r > 1.0 {
        xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0)
    } else {
        0.0
    };
    (mean, (var / r).sqrt(), var)
}

/// Draws `replicas` partitions from `cfg` and compares, for `k <= kmax`, the
/// root-block and typical-block laws and, for every set, the density
/// `ζ_A/n` and the variance of `(ζ_A - nπ(A))/√n` with their limits.
///
/// Replicas run in parallel; the reduction follows replica order.
pub fn empirical_suite(
    cfg: &SamplerConfig,
    sets: &[MemberSet],
    replicas: usize,
    kmax: usize,
) -> Result<EmpiricalReport> {
    let sampler = Sampler::new(cfg.clone())?;
    let law = &*cfg.law;
    let n = cfg.n;
    let summaries: Vec<Summary> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let p = sampler.replica(i);
            let mut counts = vec![0usize; kmax + 1];
            let mut largest = 0;
            for b in p.blocks() {
                if b.len() <= kmax {
                    counts[b.len()] += 1;
                }
                largest = largest.max(b.len());
            }
            let zeta = sets
                .iter()
                .map(|a| p.blocks().iter().filter(|b| a.contains(b.len())).count())
                .collect();
            Summary {
                s1: p.blocks().first().map_or(0, Vec::len),
                blocks: p.block_count(),
                counts,
                zeta,
                largest,
            }
        })
        .collect();

    let limits = limit_block_laws(law)?;
    let r = replicas as f64;
    let mut rows = Vec::new();
    for k in 1..=kmax {
        let hits = summaries.iter().filter(|s| s.s1 == k).count() as f64;
        let p = hits / r;
        rows.push(SuiteRow {
            statistic: "root_block".into(),
            k_or_set: k.to_string(),
            observed: p,
            predicted: Some(limits.root(k)),
            stderr: (p * (1.0 - p) / r).sqrt(),
        });
    }
    for k in 1..=kmax {
        let (mean, se, _) = mean_and_stderr(
            summaries
                .iter()
                .map(move |s| s.counts[k] as f64 / s.blocks.max(1) as f64),
        );
        rows.push(SuiteRow {
            statistic: "typical_block".into(),
            k_or_set: k.to_string(),
            observed: mean,
            predicted: Some(limits.typical(k)),
            stderr: se,
        });
    }
    let nf = n as f64;
    for (j, a) in sets.iter().enumerate() {
        let pa = law.mass(a);
        let (mean, se, _) = mean_and_stderr(summaries.iter().map(move |s| s.zeta[j] as f64 / nf));
        rows.push(SuiteRow {
            statistic: "density".into(),
            k_or_set: a.to_string(),
            observed: mean,
            predicted: Some(pa),
            stderr: se,
        });
        let (_, _, var) = mean_and_stderr(
            summaries
                .iter()
                .map(move |s| (s.zeta[j] as f64 - nf * pa) / nf.sqrt()),
        );
        let cov = clt_covariance(law, a, a).ok();
        let var_se = var * (2.0 / (r - 1.0).max(1.0)).sqrt();
        rows.push(SuiteRow {
            statistic: "fluctuation_variance".into(),
            k_or_set: a.to_string(),
            observed: var,
            predicted: cov.map(|c| c.corrected),
            stderr: var_se,
        });
        rows.push(SuiteRow {
            statistic: "fluctuation_variance_printed".into(),
            k_or_set: a.to_string(),
            observed: var,
            predicted: cov.and_then(|c| c.printed),
            stderr: var_se,
        });
    }
    let (mean, se, _) = mean_and_stderr(summaries.iter().map(|s| s.blocks as f64 / nf));
    rows.push(SuiteRow {
        statistic: "density".into(),
        k_or_set: "blocks".into(),
        observed: mean,
        predicted: Some(law.mass(&MemberSet::Predicate(Predicate::All))),
        stderr: se,
    });
    let (mean, se, _) = mean_and_stderr(summaries.iter().map(|s| s.largest as f64));
    rows.push(SuiteRow {
        statistic: "largest_block".into(),
        k_or_set: "mean".into(),
        observed: mean,
        predicted: None,
        stderr: se,
    });
    Ok(EmpiricalReport {
        n,
        replicas,
        seed: cfg.seed,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_partition;
    use crate::weights::equivalent_distribution;

    fn law(s: &str) -> TiltedLaw {
        equivalent_distribution(&WeightSeq::parse(s).unwrap()).unwrap()
    }

    fn set(s: &str) -> MemberSet {
        MemberSet::parse(s).unwrap()
    }

    #[test]
    fn running_example_census() {
        let p = validate_partition(
            vec![
                vec![1, 3, 5],
                vec![2],
                vec![4],
                vec![6, 7, 11, 12],
                vec![8],
                vec![9, 10],
            ],
            12,
        )
        .unwrap();
        let r = block_report(&p, &[set("all"), set("odd")], 3);
        assert_eq!(r.s1, 3);
        assert_eq!(
            (r.count(1), r.count(2), r.count(3), r.count(4)),
            (3, 1, 1, 1)
        );
        assert_eq!(r.zeta[0], ("all".to_string(), 6));
        assert_eq!(r.zeta[1].1, 4);
        assert_eq!(r.largest, vec![4, 3, 2]);
        assert_eq!(r.histogram.iter().map(|(k, c)| k * c).sum::<usize>(), 12);

        let r = block_report(&NCPartition::one_block(7), &[set("all")], 10);
        assert_eq!((r.s1, r.zeta[0].1), (7, 1));
        let r = block_report(&NCPartition::singletons(7), &[set("all")], 10);
        assert_eq!((r.s1, r.count(1)), (1, 7));
    }

    #[test]
    fn limit_laws() {
        let l = law("all");
        let lim = limit_block_laws(&l).unwrap();
        for k in 1..20 {
            assert!((lim.root(k) - k as f64 / 2f64.powi(k as i32 + 1)).abs() < 1e-12);
            assert!((lim.typical(k) - 0.5f64.powi(k as i32)).abs() < 1e-12);
        }
        assert!((lim.root_total() - 1.0).abs() < 1e-12);
        let l = law("set:2");
        let lim = limit_block_laws(&l).unwrap();
        assert!((lim.root(2) - 1.0).abs() < 1e-12);
        assert!((lim.typical(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clt_values() {
        let l = law("set:2");
        let c = clt_covariance(&l, &set("set:2"), &set("set:2")).unwrap();
        assert!(c.corrected.abs() < 1e-12);
        assert!((c.printed.unwrap() + 0.25).abs() < 1e-12);

        let l = law("all");
        let c = clt_covariance(&l, &set("set:1"), &set("set:1")).unwrap();
        assert!((c.corrected - 3.0 / 16.0).abs() < 1e-12);
        assert_eq!(c.printed, Some(c.corrected));

        let l = law("set:{2,3}");
        let c = clt_covariance(&l, &set("set:{7}"), &set("set:{7}")).unwrap();
        assert_eq!(c.corrected, 0.0);

        let sub = equivalent_distribution(&WeightSeq::power_law(
            crate::weights::PowerLaw::new(2.5, 0.3).unwrap(),
        ))
        .unwrap();
        assert!(matches!(
            clt_covariance(&sub, &set("set:1"), &set("set:1")),
            Err(Error::NotCritical { .. })
        ));
        let heavy = law("stable:1.5");
        assert!(matches!(
            clt_covariance(&heavy, &set("set:1"), &set("set:1")),
            Err(Error::InfiniteVariance(_))
        ));
    }

    #[test]
    fn covariance_matrix_is_positive_semidefinite_on_a_partition_of_sizes() {
        // the sets {1}, {2}, {3,4,...} cover every block
        let l = law("all");
        let sets = [set("set:1"), set("set:2"), set("set:{3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20,21,22,23,24,25,26,27,28,29,30,31,32,33,34,35,36,37,38,39,40,41,42,43,44,45,46,47,48,49,50,51,52,53,54,55,56,57,58,59,60}")];
        let mut c = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] = clt_covariance(&l, &sets[i], &sets[j]).unwrap().corrected;
            }
        }
        let det2 = c[0][0] * c[1][1] - c[0][1] * c[1][0];
        assert!(c[0][0] > 0.0 && det2 > 0.0);
        // ζ_{1} + ζ_{2} + ζ_{≥3} counts every block, whose variance is finite
        let total: f64 = c.iter().flatten().sum();
        assert!(total > -1e-9);
    }

    #[test]
    fn exact_root_law_moves_toward_the_limit() {
        let w = WeightSeq::all();
        let l = law("all");
        let lim = limit_block_laws(&l).unwrap();
        let tv = |n: usize| {
            let exact = exact_root_block_law(&w, n).unwrap();
            let kmax = 60;
            0.5 * (1..=kmax)
                .map(|k| (exact.get(k).copied().unwrap_or(0.0) - lim.root(k)).abs())
                .sum::<f64>()
        };
        let (a, b, c) = (tv(4), tv(6), tv(8));
        assert!(a > b && b > c, "{a} {b} {c}");
    }

    #[test]
    fn suite_is_reproducible_and_sane() {
        let cfg = SamplerConfig::new(law("all"), 300, 3);
        let sets = [set("set:1"), set("all")];
        let a = empirical_suite(&cfg, &sets, 400, 5).unwrap();
        let b = empirical_suite(&cfg, &sets, 400, 5).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        let row = a.row("root_block", "1").unwrap();
        assert!((row.observed - 0.25).abs() < 5.0 * row.stderr.max(0.01));
        let d = a.row("density", "all").unwrap();
        assert!((d.observed - 0.5).abs() < 0.02);
        assert!(a
            .to_csv()
            .starts_with("statistic,k_or_set,observed,predicted,stderr,n,replicas,seed\n"));
    }
}
