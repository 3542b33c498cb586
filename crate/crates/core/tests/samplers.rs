use std::collections::{HashMap, HashSet};

use pdc_core::binary::{BinaryConfig, BinarySampler, BinaryStrategy};
use pdc_core::contingency::{BitStrategy, CtConfig, CtSampler};
use pdc_core::count::{enumerate_binary_tables, enumerate_integer_tables, CountQuery, OracleLimits};
use pdc_core::latin::{sample_latin_with, LatinConfig};
use pdc_core::partition::{sample_distinct_partition, sample_partition};
use pdc_core::pmf::TableKind;
use pdc_core::sampling::rng_from_seed;
use pdc_core::table::{validate_table, MarginSpec, Mask};
use pdc_core::uniformity::chi_square_uniformity;
use proptest::prelude::*;

const SIGNIFICANCE: f64 = 0.01;
const FREQUENCY_TOLERANCE: f64 = 0.01;

fn ct(rows: &[u64], cols: &[u64], zeros: &Mask, strategy: BitStrategy) -> CtSampler {
    let margins = MarginSpec::new(rows.to_vec(), cols.to_vec()).unwrap();
    CtSampler::new(margins, zeros.clone(), CtConfig { strategy, ..CtConfig::default() }).unwrap()
}

fn bin(rows: &[u64], cols: &[u64], zeros: &Mask, strategy: BinaryStrategy) -> BinarySampler {
    let margins = MarginSpec::new(rows.to_vec(), cols.to_vec()).unwrap();
    BinarySampler::new(margins, zeros.clone(), BinaryConfig { strategy, ..BinaryConfig::default() }).unwrap()
}

#[test]
fn exact_integer_two_by_two_is_fair() {
    let mut s = ct(&[1, 1], &[1, 1], &Mask::empty(2, 2), BitStrategy::ExactCount);
    let mut rng = rng_from_seed(2024);
    let n = 50_000;
    let diagonal = (0..n).filter(|_| s.sample(&mut rng).unwrap().0[0][0] == 1).count();
    assert!((diagonal as f64 / n as f64 - 0.5).abs() < FREQUENCY_TOLERANCE);
}

#[test]
fn exact_integer_sampler_is_uniform_on_masked_three_by_three() {
    let rows = [3, 2, 3];
    let cols = [2, 3, 3];
    let zeros = Mask::from_cells(3, 3, &[(0, 1), (2, 0)]).unwrap();
    let mut index = HashMap::new();
    let q = CountQuery::new(rows.to_vec(), cols.to_vec()).with_zeros(zeros.clone());
    enumerate_integer_tables(&q, &OracleLimits::default(), |t| {
        let k = index.len();
        index.insert(t.to_vec(), k);
    })
    .unwrap();
    assert!(index.len() > 5);
    let mut s = ct(&rows, &cols, &zeros, BitStrategy::ExactCount);
    let mut rng = rng_from_seed(77);
    let mut counts = vec![0u64; index.len()];
    for _ in 0..100 * index.len() {
        counts[index[&s.sample(&mut rng).unwrap().0]] += 1;
    }
    let report = chi_square_uniformity(&counts, SIGNIFICANCE).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn exact_binary_sampler_is_uniform_on_four_by_four_margins_two() {
    let rows = [2u64; 4];
    let zeros = Mask::empty(4, 4);
    let mut index = HashMap::new();
    enumerate_binary_tables(&rows, &rows, &zeros, &OracleLimits::default(), |t| {
        let k = index.len();
        index.insert(t.to_vec(), k);
    })
    .unwrap();
    assert_eq!(index.len(), 90);
    let mut s = bin(&rows, &rows, &zeros, BinaryStrategy::ExactCount);
    let mut rng = rng_from_seed(5);
    let mut counts = vec![0u64; 90];
    for _ in 0..100 * 90 {
        counts[index[&s.sample(&mut rng).unwrap().0]] += 1;
    }
    let report = chi_square_uniformity(&counts, SIGNIFICANCE).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn weighted_binary_two_by_two_is_fair() {
    for strategy in [BinaryStrategy::HWeight, BinaryStrategy::BWeight] {
        let mut s = bin(&[1, 1], &[1, 1], &Mask::empty(2, 2), strategy);
        let mut rng = rng_from_seed(31);
        let n = 50_000;
        let diagonal = (0..n).filter(|_| s.sample(&mut rng).unwrap().0[0][0] == 1).count();
        assert!((diagonal as f64 / n as f64 - 0.5).abs() < FREQUENCY_TOLERANCE, "{strategy:?}");
    }
}

#[test]
fn weighted_binary_modes_have_full_support() {
    for (rows, expected) in [(vec![2u64; 3], 6usize), (vec![2u64; 4], 90)] {
        let m = rows.len();
        let zeros = Mask::empty(m, m);
        let mut all = HashSet::new();
        enumerate_binary_tables(&rows, &rows, &zeros, &OracleLimits::default(), |t| {
            all.insert(t.to_vec());
        })
        .unwrap();
        assert_eq!(all.len(), expected);
        for strategy in [BinaryStrategy::HWeight, BinaryStrategy::BWeight] {
            let mut s = bin(&rows, &rows, &zeros, strategy);
            let mut rng = rng_from_seed(404);
            let mut seen = HashSet::new();
            for _ in 0..200 * expected {
                let (t, _) = s.sample(&mut rng).unwrap();
                assert!(all.contains(&t));
                seen.insert(t);
                if seen.len() == expected {
                    break;
                }
            }
            assert_eq!(seen.len(), expected, "{strategy:?} on {m}x{m}");
        }
    }
}

#[test]
fn binary_six_by_six_outputs_are_members() {
    let rows = [3u64; 6];
    let zeros = Mask::empty(6, 6);
    for strategy in [BinaryStrategy::HWeight, BinaryStrategy::BWeight] {
        let mut s = bin(&rows, &rows, &zeros, strategy);
        let mut rng = rng_from_seed(6);
        for _ in 0..300 {
            let (t, _) = s.sample(&mut rng).unwrap();
            assert!(validate_table(&t, &rows, &rows, &zeros, TableKind::Binary));
        }
    }
}

#[test]
fn order_two_latin_squares_are_fair() {
    let mut rng = rng_from_seed(12);
    let n = 50_000;
    let mut first = 0;
    for _ in 0..n {
        let (sq, _) = sample_latin_with(2, &LatinConfig::default(), &mut rng).unwrap();
        if sq.values()[0][0] == 1 {
            first += 1;
        }
    }
    assert!((first as f64 / n as f64 - 0.5).abs() < FREQUENCY_TOLERANCE);
}

#[test]
fn distinct_partitions_of_three_are_fair() {
    let mut rng = rng_from_seed(3);
    let n = 50_000;
    let mut single = 0;
    for _ in 0..n {
        let (p, _) = sample_distinct_partition(3, None, &mut rng).unwrap();
        match p.parts().as_slice() {
            [3] => single += 1,
            [2, 1] => {}
            other => panic!("unexpected {other:?}"),
        }
    }
    assert!((single as f64 / n as f64 - 0.5).abs() < FREQUENCY_TOLERANCE);
}

#[test]
fn partitions_of_six_are_uniform_for_several_tilts() {
    for tilt in [0.2, 0.5, 0.9] {
        let mut rng = rng_from_seed(60);
        let mut counts: HashMap<Vec<u64>, u64> = HashMap::new();
        for _ in 0..22_000 {
            let (p, _) = sample_partition(6, Some(tilt), &mut rng).unwrap();
            *counts.entry(p.parts()).or_default() += 1;
        }
        assert_eq!(counts.len(), 11);
        let c: Vec<u64> = counts.into_values().collect();
        let report = chi_square_uniformity(&c, SIGNIFICANCE).unwrap();
        assert!(report.pass, "tilt {tilt}: {report:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]
    #[test]
    fn approximate_tables_always_validate(seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (g.random_range(1..=5), g.random_range(1..=5));
        let mut zeros = Mask::empty(m, n);
        let table: Vec<Vec<u64>> = (0..m)
            .map(|i| (0..n).map(|j| {
                if g.random_bool(0.2) { zeros.set(i, j, true); 0 } else { g.random_range(0..=9) }
            }).collect())
            .collect();
        let rows: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
        let cols: Vec<u64> = (0..n).map(|j| table.iter().map(|r| r[j]).sum()).collect();
        let margins = MarginSpec::new(rows.clone(), cols.clone()).unwrap();
        let mut s = CtSampler::new(margins, zeros.clone(), CtConfig::default()).unwrap();
        let mut rng = rng_from_seed(seed);
        for _ in 0..5 {
            let (t, _) = s.sample(&mut rng).unwrap();
            prop_assert!(validate_table(&t, &rows, &cols, &zeros, TableKind::Integer));
        }
    }

    #[test]
    fn weighted_binary_tables_always_validate(seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (g.random_range(1..=7), g.random_range(1..=7));
        let mut zeros = Mask::empty(m, n);
        let table: Vec<Vec<u64>> = (0..m)
            .map(|i| (0..n).map(|j| {
                if g.random_bool(0.2) { zeros.set(i, j, true); 0 } else { g.random_range(0..=1) }
            }).collect())
            .collect();
        let rows: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
        let cols: Vec<u64> = (0..n).map(|j| table.iter().map(|r| r[j]).sum()).collect();
        for strategy in [BinaryStrategy::HWeight, BinaryStrategy::BWeight] {
            let mut s = bin(&rows, &cols, &zeros, strategy);
            let mut rng = rng_from_seed(seed);
            for _ in 0..5 {
                let (t, _) = s.sample(&mut rng).unwrap();
                prop_assert!(validate_table(&t, &rows, &cols, &zeros, TableKind::Binary));
            }
        }
    }
}
