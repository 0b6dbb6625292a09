//! Slow reference implementations used to check the fast paths.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::model::{validate_partition, NCPartition};

/// All non-crossing partitions of `[n]` as canonical block lists, by
/// backtracking over restricted growth strings: element `i` may join block
/// `B` only if no element strictly between `max B` and `i` belongs to a block
/// that also has an element below `max B`.
pub fn nc_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn extend(
        i: usize,
        n: usize,
        owner: &mut Vec<usize>,
        blocks: &mut Vec<Vec<usize>>,
        out: &mut Vec<Vec<Vec<usize>>>,
    ) {
        if i > n {
            out.push(blocks.clone());
            return;
        }
        for b in 0..blocks.len() {
            let last = *blocks[b].last().expect("blocks are nonempty");
            let blocked = (last + 1..i).any(|j| blocks[owner[j]][0] < last);
            if blocked {
                continue;
            }
            blocks[b].push(i);
            owner[i] = b;
            extend(i + 1, n, owner, blocks, out);
            blocks[b].pop();
        }
        blocks.push(vec![i]);
        owner[i] = blocks.len() - 1;
        extend(i + 1, n, owner, blocks, out);
        blocks.pop();
    }
    let mut out = Vec::new();
    let mut owner = vec![0; n + 1];
    extend(1, n, &mut owner, &mut Vec::new(), &mut out);
    out
}

/// Same as [`nc_partitions`], validated into [`NCPartition`]s.
pub fn nc_partition_values(n: usize) -> Vec<NCPartition> {
    nc_partitions(n)
        .into_iter()
        .map(|b| validate_partition(b, n).expect("oracle emits non-crossing partitions"))
        .collect()
}

/// Looks for `a < b < c < d` with `a, c` in one block and `b, d` in another.
pub fn has_crossing(blocks: &[Vec<usize>]) -> bool {
    for (i, x) in blocks.iter().enumerate() {
        for (j, y) in blocks.iter().enumerate() {
            if i == j {
                continue;
            }
            for &a in x {
                for &c in x {
                    if c <= a {
                        continue;
                    }
                    let inner = y.iter().any(|&b| a < b && b < c);
                    let outer = y.iter().any(|&d| d > c);
                    if inner && outer {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// The coarsest `Q` such that `P` on the odd points and `Q` on the even
/// points of `[2n]` are jointly non-crossing, by exhaustive search.
pub fn kreweras_bruteforce(p: &NCPartition) -> NCPartition {
    let n = p.n();
    let odd: Vec<Vec<usize>> = p
        .blocks()
        .iter()
        .map(|b| b.iter().map(|&x| 2 * x - 1).collect())
        .collect();
    let mut best: Option<Vec<Vec<usize>>> = None;
    for q in nc_partitions(n) {
        if best.as_ref().is_some_and(|b| b.len() <= q.len()) {
            continue;
        }
        let mut all = odd.clone();
        all.extend(q.iter().map(|b| b.iter().map(|&x| 2 * x).collect()));
        if !has_crossing(&all) {
            best = Some(q);
        }
    }
    validate_partition(best.unwrap_or_default(), n).expect("oracle output is non-crossing")
}

/// Pearson chi-square test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Goodness of fit of `observed` counts to `probs`. Cells with expected
/// count below 5 are pooled.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let total = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * total;
        if e < 5.0 {
            pooled.0 += o as f64;
            pooled.1 += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pooled.1 > 0.0 {
        cells.push(pooled);
    }
    let statistic: f64 = cells.iter().map(|&(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len().saturating_sub(1).max(1);
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    ChiSquare {
        statistic,
        dof,
        p_value: dist.sf(statistic),
    }
}

/// `sup |F_n - F|` for a sample against a continuous CDF.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (((i + 1) as f64 / m) - f).max(f - i as f64 / m)
        })
        .fold(0.0, f64::max)
}

/// `sup |F_a - F_b|` between two empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}
