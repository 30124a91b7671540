//! Property tests for the metric axioms, the screening statistic's exact
//! invariances, and the threshold rule.

use mkfilter::{
    adaptive_threshold, chol_lower, dist_cholesky, dist_frobenius, dist_log_cholesky, emdf_value,
    build_profiles, omega_hat, omega_hat_naive, wasserstein_empirical, ClassFilter,
    DistanceMatrix, EmpiricalDistribution, Label, SpdMatrix,
};
use proptest::prelude::*;

fn empirical(max_len: usize) -> impl Strategy<Value = EmpiricalDistribution> {
    prop::collection::vec(-5.0f64..5.0, 1..=max_len)
        .prop_map(|v| EmpiricalDistribution::new(v).unwrap())
}

/// Random SPD matrix as `A Aᵀ + dim · I` over a raw square factor.
fn spd(dim: usize) -> impl Strategy<Value = SpdMatrix> {
    prop::collection::vec(-1.0f64..1.0, dim * dim).prop_map(move |raw| {
        let mut entries = vec![0.0f64; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let mut s = if i == j { dim as f64 } else { 0.0 };
                for k in 0..dim {
                    s += raw[i * dim + k] * raw[j * dim + k];
                }
                entries[i * dim + j] = s;
            }
        }
        SpdMatrix::new(dim, entries).unwrap()
    })
}

/// Distance matrix from random points on the line (a true metric), with a
/// coarse value grid so ties occur.
fn tied_distance_matrix(n: usize) -> impl Strategy<Value = DistanceMatrix> {
    prop::collection::vec(0u8..16, n).prop_map(move |points| {
        DistanceMatrix::from_pairwise(n, |i, j| {
            Ok((points[i] as f64 - points[j] as f64).abs() / 4.0)
        })
        .unwrap()
    })
}

fn mixed_labels(n: usize) -> impl Strategy<Value = Vec<Label>> {
    prop::collection::vec(prop::bool::ANY, n).prop_map(|bits| {
        let mut l: Vec<Label> = bits
            .into_iter()
            .map(|b| if b { Label::Pos } else { Label::Neg })
            .collect();
        l[0] = Label::Pos;
        l[1] = Label::Neg;
        l
    })
}

proptest! {
    #[test]
    fn wasserstein_is_symmetric_and_zero_on_the_diagonal(
        a in empirical(8),
        b in empirical(8),
    ) {
        let dab = wasserstein_empirical(&a, &b);
        let dba = wasserstein_empirical(&b, &a);
        prop_assert!((dab - dba).abs() <= 1e-9);
        prop_assert!(dab >= 0.0 && dab.is_finite());
        prop_assert_eq!(wasserstein_empirical(&a, &a), 0.0);
    }

    // The size-dependent rescaling keeps the order-statistic convention at
    // equal sizes, so the metric axioms are guaranteed on each fixed sample
    // size — the regime a feature column actually lives in.
    #[test]
    fn wasserstein_triangle_inequality_at_fixed_size(
        triple in (1usize..=8).prop_flat_map(|m| (
            prop::collection::vec(-5.0f64..5.0, m),
            prop::collection::vec(-5.0f64..5.0, m),
            prop::collection::vec(-5.0f64..5.0, m),
        )),
    ) {
        let (x, y, z) = triple;
        let a = EmpiricalDistribution::new(x).unwrap();
        let b = EmpiricalDistribution::new(y).unwrap();
        let c = EmpiricalDistribution::new(z).unwrap();
        let dab = wasserstein_empirical(&a, &b);
        let dac = wasserstein_empirical(&a, &c);
        let dcb = wasserstein_empirical(&c, &b);
        prop_assert!(dab <= dac + dcb + 1e-9);
    }

    #[test]
    fn wasserstein_equal_m_matches_order_statistic_formula(
        pair in (1usize..=10).prop_flat_map(|m| (
            prop::collection::vec(-5.0f64..5.0, m),
            prop::collection::vec(-5.0f64..5.0, m),
        )),
    ) {
        let (x, y) = pair;
        let a = EmpiricalDistribution::new(x).unwrap();
        let b = EmpiricalDistribution::new(y).unwrap();
        let mut sum = 0.0f64;
        for (u, v) in a.samples().iter().zip(b.samples()) {
            let d = u - v;
            sum += d * d;
        }
        prop_assert_eq!(wasserstein_empirical(&a, &b), sum.sqrt());
    }

    #[test]
    fn spd_metrics_satisfy_the_axioms(
        (a, b, c) in (1usize..=6).prop_flat_map(|d| (spd(d), spd(d), spd(d))),
    ) {
        for metric in [dist_frobenius, dist_cholesky, dist_log_cholesky] {
            let dab = metric(&a, &b).unwrap();
            prop_assert!((dab - metric(&b, &a).unwrap()).abs() <= 1e-9);
            prop_assert_eq!(metric(&a, &a).unwrap(), 0.0);
            prop_assert!(dab <= metric(&a, &c).unwrap() + metric(&c, &b).unwrap() + 1e-9);
        }
    }

    #[test]
    fn cholesky_reconstructs_up_to_dim_ten(x in (1usize..=10).prop_flat_map(spd)) {
        let l = chol_lower(&x).unwrap();
        let dim = x.dim();
        let mut err = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let mut s = 0.0;
                for k in 0..dim {
                    s += l.get(i, k) * l.get(j, k);
                }
                err += (s - x.get(i, j)).powi(2);
            }
        }
        prop_assert!(err.sqrt() <= 1e-9);
        for i in 0..dim {
            prop_assert!(l.get(i, i) > 0.0);
        }
    }

    #[test]
    fn omega_hat_bounds_flip_and_oracle(
        (d, labels) in (6usize..=20).prop_flat_map(|n| (tied_distance_matrix(n), mixed_labels(n))),
    ) {
        let w = omega_hat(&d, &labels).unwrap();
        prop_assert!((0.0..=2.0).contains(&w));
        prop_assert_eq!(w, omega_hat_naive(&d, &labels).unwrap());
        let flipped: Vec<Label> = labels.iter().map(|l| l.flipped()).collect();
        prop_assert_eq!(w, omega_hat(&d, &flipped).unwrap());
    }

    #[test]
    fn omega_hat_ignores_monotone_rescaling(
        (d, labels) in (6usize..=16).prop_flat_map(|n| (tied_distance_matrix(n), mixed_labels(n))),
        scale in prop::sample::select(vec![0.1f64, 7.3, 2.0]),
    ) {
        let base = omega_hat(&d, &labels).unwrap();
        let scaled: Vec<f64> = d.entries().iter().map(|&x| scale * x).collect();
        let squared: Vec<f64> = d.entries().iter().map(|&x| x * x).collect();
        let ds = DistanceMatrix::from_raw(d.n(), scaled).unwrap();
        let dq = DistanceMatrix::from_raw(d.n(), squared).unwrap();
        prop_assert_eq!(omega_hat(&ds, &labels).unwrap(), base);
        prop_assert_eq!(omega_hat(&dq, &labels).unwrap(), base);
    }

    #[test]
    fn emdf_is_monotone_and_normalized(
        (d, labels) in (4usize..=12).prop_flat_map(|n| (tied_distance_matrix(n), mixed_labels(n))),
    ) {
        let profiles = build_profiles(&d, &labels).unwrap();
        for p in &profiles {
            for filter in [ClassFilter::All, ClassFilter::Class(Label::Pos)] {
                let mut prev = 0.0;
                for step in 0..12 {
                    let r = step as f64 * 0.4;
                    let v = emdf_value(p, filter, r).unwrap();
                    prop_assert!((0.0..=1.0).contains(&v));
                    prop_assert!(v >= prev);
                    prev = v;
                }
                let rmax = p.radii().iter().cloned().fold(0.0, f64::max);
                prop_assert_eq!(emdf_value(p, filter, rmax).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn threshold_is_invariant_under_permutation(
        w in prop::collection::vec(-4.0f64..4.0, 1..40).prop_shuffle(),
        alpha in 0.05f64..0.9,
    ) {
        let t = adaptive_threshold(&w, alpha);
        let mut reversed = w.clone();
        reversed.reverse();
        prop_assert_eq!(adaptive_threshold(&reversed, alpha), t);
    }

    #[test]
    fn threshold_scaling_by_powers_of_two_is_exact(
        w in prop::collection::vec(-4.0f64..4.0, 1..40),
        alpha in 0.05f64..0.9,
    ) {
        let t = adaptive_threshold(&w, alpha);
        for c in [0.5f64, 2.0, 8.0] {
            let scaled: Vec<f64> = w.iter().map(|x| c * x).collect();
            let ts = adaptive_threshold(&scaled, alpha);
            if t.is_finite() {
                prop_assert_eq!(ts, c * t);
                let sel: Vec<usize> = (0..w.len()).filter(|&j| w[j] >= t).collect();
                let sel_scaled: Vec<usize> =
                    (0..w.len()).filter(|&j| scaled[j] >= ts).collect();
                prop_assert_eq!(sel, sel_scaled);
            } else {
                prop_assert!(ts.is_infinite());
            }
        }
    }
}
