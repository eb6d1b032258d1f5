use std::collections::HashSet;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qfl_core::crypto::{gen_pad, PadKey};
use qfl_core::dlp::*;
use qfl_core::protocol::{account, Channel};
use qfl_core::Error;

fn seven() -> (DlpGroup, FeatureConfig) {
    (DlpGroup::new(7).unwrap(), FeatureConfig::new(1))
}

// Orbit overlap computed by direct enumeration, independent of the library.
fn oracle_kernel(p: u64, a: u64, k: u32, x1: u64, x2: u64) -> f64 {
    let orbit = |x: u64| {
        let mut set = HashSet::new();
        let mut v = x;
        for _ in 0..1u64 << k {
            set.insert(v);
            v = v * a % p;
        }
        set
    };
    orbit(x1).intersection(&orbit(x2)).count() as f64 / (1u64 << k) as f64
}

#[test]
fn generator_and_dlog_tables() {
    assert_eq!(find_generator(7).unwrap(), 3);
    assert_eq!(find_generator(5).unwrap(), 2);
    assert!(matches!(find_generator(4), Err(Error::Domain(_))));
    let (g, _) = seven();
    let table: Vec<u64> = (1..7).map(|x| g.dlog_bruteforce(x).unwrap()).collect();
    // 3^j mod 7 for j = 0..5 is 1, 3, 2, 6, 4, 5.
    assert_eq!(table, vec![0, 2, 1, 4, 5, 3]);
    assert!(matches!(g.dlog_bruteforce(0), Err(Error::Domain(_))));
}

#[test]
fn concept_table_at_seven() {
    let (g, _) = seven();
    let c = Concept::new(g.clone(), 1).unwrap();
    let plus: Vec<u64> = (1..7).filter(|&x| c.label(x).unwrap() == 1.0).collect();
    assert_eq!(plus, vec![2, 3, 6]);
    assert_eq!(c.label(1).unwrap(), -1.0);
    for i in 1..7 {
        let c = Concept::new(g.clone(), i).unwrap();
        assert_eq!((1..7).filter(|&x| c.label(x).unwrap() == 1.0).count(), 3);
    }
    assert!(c.label(7).is_err());
}

#[test]
fn feature_state_and_kernel_examples() {
    let (g, cfg) = seven();
    let phi = feature_state(&g, &cfg, 1).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for x in 0..8 {
        let want = if x == 1 || x == 3 { s } else { 0.0 };
        assert!((phi.amplitudes()[x].re - want).abs() < 1e-15);
        assert_eq!(phi.amplitudes()[x].im, 0.0);
    }
    assert_eq!(kernel_entry(&g, &cfg, 1, 3).unwrap(), 0.5);
    assert_eq!(kernel_entry(&g, &cfg, 5, 5).unwrap(), 1.0);
    let m = kernel_matrix(&g, &cfg, &[1, 3]).unwrap();
    assert_eq!(m.values(), &DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]));
    assert_eq!(kernel_matrix(&g, &cfg, &[4]).unwrap().values(), &DMatrix::from_element(1, 1, 1.0));
    assert!(matches!(FeatureConfig::new(3).validate(&g), Err(Error::Config { .. })));
}

#[test]
fn full_orbit_gives_one_state() {
    for (p, k) in [(5u64, 2usize), (17, 4)] {
        let g = DlpGroup::new(p).unwrap();
        let cfg = FeatureConfig::new(k);
        let first = feature_state(&g, &cfg, 1).unwrap();
        for x in g.units() {
            assert!(feature_state(&g, &cfg, x).unwrap().fidelity(&first).unwrap() > 1.0 - 1e-12);
        }
    }
}

#[test]
fn orbits_are_injective() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let primes: Vec<u64> = (3..8192).filter(|&p| is_prime(p)).collect();
    for _ in 0..200 {
        let p = *primes.choose(&mut rng).unwrap();
        let g = DlpGroup::new(p).unwrap();
        let max_k = (63 - (p - 1).leading_zeros()) as usize;
        let cfg = FeatureConfig::new(rng.random_range(1..=max_k.max(1)));
        if cfg.validate(&g).is_err() {
            continue;
        }
        let x = rng.random_range(1..p);
        let orbit = orbit(&g, &cfg, x).unwrap();
        let distinct: HashSet<_> = orbit.iter().collect();
        assert_eq!(distinct.len(), orbit.len());
        let amps = feature_state(&g, &cfg, x).unwrap();
        assert!((amps.norm_sqr() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn padded_kernel_is_pad_invariant() {
    let (g, cfg) = seven();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let big = DlpGroup::new(127).unwrap();
    let big_cfg = FeatureConfig::new(5);
    for _ in 0..500 {
        let (group, c) = if rng.random::<bool>() { (&g, &cfg) } else { (&big, &big_cfg) };
        let x1 = rng.random_range(1..group.p());
        let x2 = rng.random_range(1..group.p());
        let pad = gen_pad(group.bits(), &mut rng).unwrap();
        let got = padded_kernel_entry(group, c, x1, &pad, x2, &pad).unwrap();
        assert!((got - kernel_entry(group, c, x1, x2).unwrap()).abs() < 1e-12);
    }
    let id = PadKey::identity(3).unwrap();
    assert!((padded_kernel_entry(&g, &cfg, 1, &id, 3, &id).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn mismatched_pads_are_flagged_and_change_the_value() {
    let (g, cfg) = seven();
    let id = PadKey::identity(3).unwrap();
    let flip = PadKey::new(vec![false; 3], vec![true, false, false]).unwrap();
    assert!(matches!(padded_kernel_entry(&g, &cfg, 1, &id, 3, &flip), Err(Error::Protocol(_))));
    let mut found = false;
    'search: for x1 in 1..7u64 {
        for x2 in 1..7u64 {
            if x1 == x2 {
                continue;
            }
            let s1 = qfl_core::crypto::qotp_encrypt(&feature_state(&g, &cfg, x1).unwrap(), &id).unwrap();
            let s2 = qfl_core::crypto::qotp_encrypt(&feature_state(&g, &cfg, x2).unwrap(), &flip).unwrap();
            if (s1.inner_product(&s2).unwrap().re - kernel_entry(&g, &cfg, x1, x2).unwrap()).abs() > 1e-6 {
                found = true;
                break 'search;
            }
        }
    }
    assert!(found);
}

#[test]
fn ridge_examples() {
    let k = DMatrix::<f64>::identity(4, 4);
    let y = [1.0, -1.0, -1.0, 1.0];
    let model = train_kernel_classifier(&k, &y, 0.0).unwrap();
    assert_eq!(model.alpha, y.to_vec());
    assert_eq!(model.predict_block(&k).unwrap(), y.to_vec());

    let dup = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.2, 1.0, 1.0, 0.2, 0.2, 0.2, 1.0]);
    assert!(matches!(train_kernel_classifier(&dup, &[1.0, 1.0, -1.0], 0.0), Err(Error::Solver(_))));
    let reg = train_kernel_classifier(&dup, &[1.0, 1.0, -1.0], 1e-6).unwrap();
    let pred = reg.predict_block(&dup).unwrap();
    assert_eq!(pred[0], pred[1]);
    assert_eq!(pred, vec![1.0, 1.0, -1.0]);
    assert_eq!(model.predict_row(&[0.0; 4]).unwrap(), 1.0);
}

#[test]
fn delegated_pipeline_at_127() {
    let g = DlpGroup::new(127).unwrap();
    let cfg = FeatureConfig::new(5);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut units: Vec<u64> = g.units().collect();
    units.shuffle(&mut rng);
    let samples = &units[..100];
    let mut channel = Channel::new(0, 4);
    let (k, report) = delegated_kernel_pipeline(&mut channel, samples, &g, &cfg, KernelEstimation::exact(0.1)).unwrap();
    for i in 0..100 {
        for j in 0..100 {
            let want = oracle_kernel(127, g.generator(), 5, samples[i], samples[j]);
            assert!((k.get(i, j) - want).abs() < 1e-10);
        }
    }
    assert!(k.is_psd() && k.is_symmetric(1e-12) && k.has_unit_diagonal(1e-12));
    assert_eq!(report.rounds, 1);
    assert_eq!(account(&channel.transcript).unwrap().rounds, 1);
    assert_eq!(report.copies, 100);
    assert!(report.bound_ratio < 1.0);
}

#[test]
fn sampled_pipeline_within_shot_error() {
    let g = DlpGroup::new(31).unwrap();
    let cfg = FeatureConfig::new(3);
    let samples: Vec<u64> = (1..31).step_by(3).collect();
    let mut channel = Channel::new(0, 5);
    let est = KernelEstimation { epsilon: 0.02, sampled: true };
    let (k, _) = delegated_kernel_pipeline(&mut channel, &samples, &g, &cfg, est).unwrap();
    let plain = kernel_matrix(&g, &cfg, &samples).unwrap();
    let shots = est.shots() as f64;
    assert!(plain.max_abs_diff(&k).unwrap() < 5.0 / shots.sqrt());
}

#[test]
fn pipeline_round_trips_samples() {
    let g = DlpGroup::new(127).unwrap();
    for x in g.units() {
        assert_eq!(decode_sample(&g, &encode_sample(&g, x).unwrap()), x);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn concepts_are_balanced(idx in 0usize..40, i_frac in 0.0f64..1.0) {
        let primes: Vec<u64> = (3..400).filter(|&p| is_prime(p)).collect();
        let p = primes[idx % primes.len()];
        let g = DlpGroup::new(p).unwrap();
        let i = 1 + ((p - 2) as f64 * i_frac) as u64;
        let c = Concept::new(g.clone(), i).unwrap();
        let plus = g.units().filter(|&x| c.label(x).unwrap() == 1.0).count() as u64;
        prop_assert_eq!(plus, (p - 1) / 2);
    }

    #[test]
    fn kernel_matches_enumeration(x1 in 1u64..127, x2 in 1u64..127, k in 1u32..=6) {
        let g = DlpGroup::new(127).unwrap();
        let got = kernel_entry(&g, &FeatureConfig::new(k as usize), x1, x2).unwrap();
        prop_assert_eq!(got, oracle_kernel(127, g.generator(), k, x1, x2));
        prop_assert_eq!(got, kernel_entry(&g, &FeatureConfig::new(k as usize), x2, x1).unwrap());
    }
}
