use morai_core::stats::{
    encode_split, midranks, spearman_rho, wilcoxon_exact, wilcoxon_normal, wilcoxon_rank_sum, StatsError,
};
use proptest::prelude::*;

fn split_p(a: usize, b: usize) -> f64 {
    wilcoxon_rank_sum(&encode_split(a, b), &encode_split(b, a)).unwrap().p_value
}

#[test]
fn reproduces_table_one() {
    // Reported values: 9:19 -> 0.0083, 10:18 -> 0.0349, 15:13 -> 0.6029,
    // 11:17 -> 0.1142, 16:12 -> 0.2937, 14:14 -> 1.
    assert!((split_p(9, 19) - 0.0083).abs() < 5e-5);
    assert!((split_p(10, 18) - 0.0349).abs() < 5e-5);
    assert!((split_p(15, 13) - 0.6029).abs() < 5e-5);
    assert!((split_p(11, 17) - 0.1142).abs() < 5e-5);
    assert!((split_p(16, 12) - 0.2937).abs() < 5e-5);
    assert_eq!(split_p(14, 14), 1.0);
}

#[test]
fn small_distinct_samples_agree_with_enumeration() {
    let (x, y) = ([1.0, 2.0, 3.0], [4.0, 5.0, 6.0]);
    let exact = wilcoxon_exact(&x, &y).unwrap().p_value;
    assert!((exact - 0.1).abs() < 1e-15);
    assert!((wilcoxon_normal(&x, &y).unwrap().p_value - exact).abs() < 0.05);
}

/// Independent oracle: enumerate every labelling of the pooled sample and
/// recompute midranks from scratch for each one.
fn brute_force_exact(x: &[f64], y: &[f64]) -> f64 {
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let n = pooled.len();
    let rank_of = |v: f64| {
        let below = pooled.iter().filter(|&&u| u < v).count() as f64;
        let equal = pooled.iter().filter(|&&u| u == v).count() as f64;
        below + (equal + 1.0) / 2.0
    };
    let mean = x.len() as f64 * (n as f64 + 1.0) / 2.0;
    let observed: f64 = x.iter().map(|&v| rank_of(v)).sum::<f64>() - mean;
    let (mut hit, mut total) = (0, 0);
    for mask in 0u32..1 << n {
        if mask.count_ones() as usize != x.len() {
            continue;
        }
        total += 1;
        let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| rank_of(pooled[i])).sum();
        if (s - mean).abs() >= observed.abs() - 1e-9 {
            hit += 1;
        }
    }
    hit as f64 / total as f64
}

#[test]
fn exact_matches_brute_force() {
    for n in 1..=6 {
        for a in 0..=n {
            for b in 0..=n {
                let (x, y) = (encode_split(a, n - a), encode_split(b, n - b));
                let got = wilcoxon_exact(&x, &y).unwrap().p_value;
                assert!((got - brute_force_exact(&x, &y)).abs() < 1e-12, "n={n} a={a} b={b}");
            }
        }
    }
}

#[test]
fn rho_equals_phi_on_binary_data() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    while checked < 200 {
        let n = rng.gen_range(4..40);
        let x: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let y: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let count = |vx: f64, vy: f64| x.iter().zip(&y).filter(|&(&a, &b)| a == vx && b == vy).count() as f64;
        let (n11, n10, n01, n00) = (count(1.0, 1.0), count(1.0, -1.0), count(-1.0, 1.0), count(-1.0, -1.0));
        let denom = ((n11 + n10) * (n01 + n00) * (n11 + n01) * (n10 + n00)).sqrt();
        if denom == 0.0 {
            assert_eq!(spearman_rho(&x, &y), Err(StatsError::ZeroVariance));
            continue;
        }
        let phi = (n11 * n00 - n10 * n01) / denom;
        let rho = spearman_rho(&x, &y).unwrap().rho;
        assert!((rho - phi).abs() < 1e-12, "rho {rho} phi {phi}");
        checked += 1;
    }
}

proptest! {
    #[test]
    fn rank_sum_is_symmetric_and_bounded(
        x in prop::collection::vec(-5i32..5, 1..20),
        y in prop::collection::vec(-5i32..5, 1..20),
    ) {
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        let y: Vec<f64> = y.into_iter().map(f64::from).collect();
        let a = wilcoxon_rank_sum(&x, &y).unwrap();
        let b = wilcoxon_rank_sum(&y, &x).unwrap();
        prop_assert_eq!(a.p_value.to_bits(), b.p_value.to_bits());
        prop_assert!((0.0..=1.0).contains(&a.p_value));
        let n = wilcoxon_normal(&x, &y).unwrap().p_value;
        prop_assert!((0.0..=1.0).contains(&n));
        prop_assert_eq!(n.to_bits(), wilcoxon_normal(&y, &x).unwrap().p_value.to_bits());
    }

    #[test]
    fn rho_is_bounded_and_monotone_invariant(
        pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..30),
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        match spearman_rho(&x, &y) {
            Ok(r) => {
                prop_assert!((-1.0..=1.0).contains(&r.rho));
                prop_assert!((0.0..=1.0).contains(&r.p_value));
                let tx: Vec<f64> = x.iter().map(|v| v.exp().max(f64::MIN_POSITIVE) * 3.0 + 1.0).collect();
                let ty: Vec<f64> = y.iter().map(|v| v * v * v).collect();
                if midranks(&tx) == midranks(&x) && midranks(&ty) == midranks(&y) {
                    let r2 = spearman_rho(&tx, &ty).unwrap();
                    prop_assert!((r2.rho - r.rho).abs() < 1e-12);
                }
            }
            Err(e) => prop_assert_eq!(e, StatsError::ZeroVariance),
        }
    }
}
