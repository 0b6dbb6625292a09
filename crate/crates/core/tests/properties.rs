use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use ncpart::bijections::{
    b_transform, kreweras, p_bullet, p_circ, partition_from_walk, t_bullet, t_circ, walk_of,
};
use ncpart::freeprob::{cumulants_exact, moments_exact};
use ncpart::geometry::{block_hulls, chord_system, longest_chord_exact};
use ncpart::model::{lukasiewicz_path, tree_from_walk, validate_partition, NCPartition};
use ncpart::oracle::has_crossing;
use ncpart::sampler::{cycle_shift, Sampler, SamplerConfig};
use ncpart::series::{power_coefficients, power_coefficients_by_squaring};
use ncpart::stats::block_report;
use ncpart::weights::{equivalent_distribution, MemberSet, WeightSeq};
use ncpart::Error;

fn sampled(spec: &str, n: usize, seed: u64) -> NCPartition {
    let law = equivalent_distribution(&WeightSeq::parse(spec).unwrap()).unwrap();
    Sampler::new(SamplerConfig::new(law, n, seed))
        .unwrap()
        .replica(0)
}

fn partition() -> impl Strategy<Value = NCPartition> {
    (
        prop::sample::select(vec!["all", "odd", "set:{1,2}", "set:{3,4,5}", "even"]),
        1usize..150,
        any::<u64>(),
    )
        .prop_filter_map("size must be reachable", |(spec, n, seed)| {
            let law = equivalent_distribution(&WeightSeq::parse(spec).ok()?).ok()?;
            let s = Sampler::new(SamplerConfig::new(law, n, seed)).ok()?;
            Some(s.replica(0))
        })
}

fn rotate(p: &NCPartition, d: usize) -> NCPartition {
    let n = p.n();
    let blocks = p
        .blocks()
        .iter()
        .map(|b| b.iter().map(|&x| (x - 1 + d) % n + 1).collect())
        .collect();
    validate_partition(blocks, n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bijections_round_trip(p in partition()) {
        let tc = t_circ(&p);
        let tb = t_bullet(&p);
        prop_assert_eq!(&p_circ(&tc), &p);
        prop_assert_eq!(&p_bullet(&tb), &p);
        prop_assert_eq!(&b_transform(&tc), &tb);
        prop_assert_eq!(&partition_from_walk(&walk_of(&p)), &p);
        prop_assert_eq!(&lukasiewicz_path(&tc), &walk_of(&p));
        prop_assert_eq!(tree_from_walk(&walk_of(&p)), tc);
    }

    #[test]
    fn tree_degrees_are_block_sizes(p in partition()) {
        let tc = t_circ(&p);
        let mut from_tree: Vec<usize> = tc.degrees().iter().copied().filter(|&d| d > 0).collect();
        let mut sizes = p.block_sizes();
        from_tree.sort_unstable();
        sizes.sort_unstable();
        prop_assert_eq!(from_tree, sizes);
        prop_assert_eq!(tc.len(), p.n() + 1);
    }

    #[test]
    fn kreweras_block_count_and_involution_up_to_rotation(p in partition()) {
        let k = kreweras(&p);
        prop_assert_eq!(k.block_count() + p.block_count(), p.n() + 1);
        let mut twice = kreweras(&k).block_sizes();
        let mut sizes = p.block_sizes();
        twice.sort_unstable();
        sizes.sort_unstable();
        prop_assert_eq!(twice, sizes);
    }

    #[test]
    fn validation_agrees_with_bruteforce(labels in prop::collection::vec(0usize..4, 1..11)) {
        let n = labels.len();
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            groups.entry(l).or_default().push(i + 1);
        }
        let blocks: Vec<Vec<usize>> = groups.into_values().collect();
        let crossing = has_crossing(&blocks);
        match validate_partition(blocks, n) {
            Ok(_) => prop_assert!(!crossing),
            Err(Error::Crossing { a, b, c, d }) => {
                prop_assert!(crossing);
                prop_assert!(a < b && b < c && c < d);
                let owner = |x: usize| labels[x - 1];
                prop_assert_eq!(owner(a), owner(c));
                prop_assert_eq!(owner(b), owner(d));
                prop_assert_ne!(owner(a), owner(b));
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn block_report_is_consistent(p in partition()) {
        let sets = [MemberSet::parse("all").unwrap(), MemberSet::parse("odd").unwrap()];
        let r = block_report(&p, &sets, 10);
        prop_assert_eq!(r.histogram.iter().map(|(k, c)| k * c).sum::<usize>(), p.n());
        prop_assert_eq!(r.zeta[0].1, p.block_count());
        let odd: usize = r.histogram.iter().filter(|(k, _)| *k % 2 == 1).map(|(_, c)| c).sum();
        prop_assert_eq!(r.zeta[1].1, odd);
        prop_assert!(r.largest.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn chords_do_not_cross_and_rotate(p in partition(), d in 0usize..1000) {
        let chords = chord_system(&p);
        prop_assert!(chords.is_non_crossing());
        prop_assert_eq!(chords.chords.len(), p.n());
        let (k, n) = longest_chord_exact(&p);
        prop_assert!(2 * k <= n);
        prop_assert_eq!(longest_chord_exact(&rotate(&p, d % n)), (k, n));
    }

    #[test]
    fn hull_area_is_bounded(p in partition()) {
        let n = p.n() as f64;
        let polygon = 0.5 * n * (2.0 * std::f64::consts::PI / n).sin();
        let total = block_hulls(&p).total_area;
        prop_assert!(total >= 0.0 && total <= polygon + 1e-9);
        prop_assert!(total < std::f64::consts::PI);
    }

    #[test]
    fn cycle_shift_finds_the_unique_rotation(degrees in prop::collection::vec(0usize..4, 1..60), r in 0usize..60) {
        // pad with leaves so that the sum is len - 1
        let mut d = degrees;
        let sum: usize = d.iter().sum();
        if sum + 1 < d.len() {
            return Ok(());
        }
        d.extend(std::iter::repeat_n(0, sum + 1 - d.len()));
        let len = d.len();
        d.rotate_left(r % len);
        let walk = cycle_shift(&d).unwrap();
        let shifted = walk.degrees();
        let doubled: Vec<usize> = d.iter().chain(d.iter()).copied().collect();
        prop_assert!(doubled.windows(len).any(|w| w == shifted.as_slice()));
        prop_assert!(walk.values()[..len].iter().all(|&v| v >= 0));
    }

    #[test]
    fn power_recurrence_matches_squaring(a in prop::collection::vec(0i64..5, 1..6), m in 1usize..9, n in 0usize..14) {
        let mut a: Vec<BigInt> = a.into_iter().map(BigInt::from).collect();
        a[0] = 1 + a[0].clone();
        prop_assert_eq!(power_coefficients(&a, m, n), power_coefficients_by_squaring(&a, m, n));
    }

    #[test]
    fn cumulants_round_trip(kappa in prop::collection::vec((0i64..6, 1i64..4), 1..6)) {
        let kappa: Vec<BigRational> = kappa
            .into_iter()
            .map(|(a, b)| BigRational::new(a.into(), b.into()))
            .collect();
        let m = moments_exact(&kappa, 10);
        let back = cumulants_exact(&m, 10);
        prop_assert_eq!(&back[..kappa.len()], &kappa[..]);
        prop_assert!(back[kappa.len()..].iter().all(|k| *k == BigRational::from_integer(0.into())));
    }

    #[test]
    fn tilting_does_not_change_the_law(a in 0.2f64..5.0, b in 0.2f64..3.0) {
        let base = vec![1.0, 0.5, 0.0, 2.0, 0.25];
        let tilted: Vec<f64> = base.iter().enumerate().map(|(i, w)| a * b.powi(i as i32) * w).collect();
        let l1 = equivalent_distribution(&WeightSeq::explicit(base).unwrap()).unwrap();
        let l2 = equivalent_distribution(&WeightSeq::explicit(tilted).unwrap()).unwrap();
        for k in 0..5 {
            prop_assert!((l1.pmf(k) - l2.pmf(k)).abs() < 1e-9);
        }
    }
}

#[test]
fn sampled_partitions_are_valid() {
    for (spec, n) in [
        ("all", 1000),
        ("multiples:5", 1000),
        ("prime", 997),
        ("stable:1.5", 2000),
    ] {
        let p = sampled(spec, n, 7);
        assert_eq!(validate_partition(p.blocks().to_vec(), n).unwrap(), p);
    }
}
