use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use ncpart::bijections::{kreweras, t_circ};
use ncpart::model::validate_partition;
use ncpart::oracle::{
    chi_square, has_crossing, kreweras_bruteforce, nc_partition_values, nc_partitions,
};
use ncpart::sampler::{Method, Sampler, SamplerConfig};
use ncpart::series::{brute_force_enumerate, partition_function, tree_partition_function_f64};
use ncpart::weights::{equivalent_distribution, WeightSeq};

/// Restricted growth strings of length `n`.
fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn go(i: usize, n: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i > n {
            out.push(blocks.clone());
            return;
        }
        for b in 0..blocks.len() {
            blocks[b].push(i);
            go(i + 1, n, blocks, out);
            blocks[b].pop();
        }
        blocks.push(vec![i]);
        go(i + 1, n, blocks, out);
        blocks.pop();
    }
    let mut out = Vec::new();
    go(1, n, &mut Vec::new(), &mut out);
    out
}

#[test]
fn validation_over_all_set_partitions() {
    for n in 0..=8 {
        let mut accepted = 0;
        for blocks in set_partitions(n) {
            let crossing = has_crossing(&blocks);
            assert_eq!(
                validate_partition(blocks.clone(), n).is_ok(),
                !crossing,
                "{blocks:?}"
            );
            accepted += usize::from(!crossing);
        }
        assert_eq!(accepted, nc_partitions(n).len());
    }
}

#[test]
fn kreweras_exhaustive_up_to_8() {
    for p in nc_partition_values(8) {
        assert_eq!(kreweras(&p), kreweras_bruteforce(&p));
    }
}

#[test]
fn weighted_partition_function_matches_enumeration() {
    let w = WeightSeq::explicit(vec![1.0, 0.5, 3.0, 0.0, 2.0, 0.25]).unwrap();
    for n in 1..=11 {
        let mut total = 0.0;
        brute_force_enumerate(n, |p| {
            total += p
                .blocks()
                .iter()
                .map(|b| w.weight(b.len()))
                .product::<f64>();
        })
        .unwrap();
        let exact: BigRational = partition_function(&w, n).unwrap();
        let exact = exact.to_f64().unwrap();
        assert!(
            (exact - total).abs() <= 1e-9 * total,
            "n = {n}: {exact} vs {total}"
        );
        let float = tree_partition_function_f64(&[1.0, 0.5, 3.0, 0.0, 2.0, 0.25], n);
        assert!((float - total).abs() <= 1e-9 * total);
    }
}

#[test]
fn enumeration_routes_agree() {
    for n in 0..=10 {
        let mut via_walks = Vec::new();
        brute_force_enumerate(n, |p| via_walks.push(p.clone())).unwrap();
        let mut oracle = nc_partition_values(n);
        via_walks.sort_by(|a, b| a.blocks().cmp(b.blocks()));
        oracle.sort_by(|a, b| a.blocks().cmp(b.blocks()));
        assert_eq!(via_walks, oracle);
        let mut trees: Vec<_> = oracle.iter().map(t_circ).collect();
        trees.sort_by(|a, b| a.degrees().cmp(b.degrees()));
        trees.dedup();
        assert_eq!(trees.len(), oracle.len());
    }
}

fn chi_square_for(
    spec: &str,
    weights: Option<Vec<f64>>,
    n: usize,
    method: Method,
    samples: usize,
    seed: u64,
) -> f64 {
    let w = match weights {
        Some(v) => WeightSeq::explicit(v).unwrap(),
        None => WeightSeq::parse(spec).unwrap(),
    };
    let law = equivalent_distribution(&w).unwrap();
    let support = nc_partitions(n);
    let probs: Vec<f64> = support
        .iter()
        .map(|p| p.iter().map(|b| w.weight(b.len())).product())
        .collect();
    let total: f64 = probs.iter().sum();
    let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
    let index: HashMap<&[Vec<usize>], usize> = support
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_slice(), i))
        .collect();
    let sampler = Sampler::new(SamplerConfig::new(law, n, seed).with_method(method)).unwrap();
    let hits: Vec<usize> = (0..samples as u64)
        .into_par_iter()
        .map(|i| index[sampler.replica(i).blocks()])
        .collect();
    let mut observed = vec![0u64; support.len()];
    for h in hits {
        observed[h] += 1;
    }
    chi_square(&observed, &probs).p_value
}

#[test]
fn every_method_is_exact() {
    for method in [Method::DpTable, Method::Rejection, Method::Multinomial] {
        for (spec, n) in [("all", 6), ("set:{2,3}", 9), ("odd", 7)] {
            let p = chi_square_for(spec, None, n, method, 60_000, 11);
            assert!(p > 1e-3, "{method:?} {spec} n = {n}: p = {p}");
        }
        let p = chi_square_for(
            "explicit",
            Some(vec![1.0, 0.3, 2.0, 0.0, 5.0]),
            8,
            method,
            60_000,
            12,
        );
        assert!(p > 1e-3, "{method:?} explicit: p = {p}");
    }
}

#[test]
fn heavy_tailed_sampler_is_exact_at_small_n() {
    let p = chi_square_for("stable:1.5", None, 7, Method::Auto, 60_000, 13);
    assert!(p > 1e-3, "p = {p}");
}
