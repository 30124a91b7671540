//! Seeded statistical checks: EMDF uniform convergence, null behavior of the
//! screening score under label permutation, and screening power on the
//! distributional generators.

use mkfilter::rng::substream;
use mkfilter::{
    build_profiles, omega_hat, screen_all, DistanceMatrix, Label, ObjectColumn, Scenario,
    SimulationConfig,
};
use rand::seq::SliceRandom;
use rand::Rng;

fn uniform_points(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = substream(seed, &[100]);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

fn line_matrix(points: &[f64]) -> DistanceMatrix {
    DistanceMatrix::from_pairwise(points.len(), |i, j| Ok((points[i] - points[j]).abs())).unwrap()
}

fn alternating_labels(n: usize) -> Vec<Label> {
    (0..n)
        .map(|i| if i % 2 == 0 { Label::Pos } else { Label::Neg })
        .collect()
}

/// Closed-form metric distribution function for Uniform(0,1) with the
/// absolute-difference metric: the mass of [u-r, u+r] within [0,1].
fn uniform_mdf(u: f64, r: f64) -> f64 {
    (u + r).min(1.0) - (u - r).max(0.0)
}

/// Sup over observed (center, radius) pairs of |EMDF - MDF| for one sample.
fn sup_emdf_error(points: &[f64]) -> f64 {
    let n = points.len();
    let d = line_matrix(points);
    let profiles = build_profiles(&d, &alternating_labels(n)).unwrap();
    let mut sup = 0.0f64;
    for p in &profiles {
        let u = points[p.center_index()];
        let order = p.sort_order();
        let radii = p.radii();
        let mut i = 0;
        while i < n {
            let r = radii[order[i]];
            let mut j = i;
            while j < n && radii[order[j]] == r {
                j += 1;
            }
            let emdf = j as f64 / n as f64;
            sup = sup.max((emdf - uniform_mdf(u, r)).abs());
            i = j;
        }
    }
    sup
}

#[test]
fn emdf_uniform_convergence_improves_with_n() {
    let seeds = 50u64;
    let mut medians = Vec::new();
    for &n in &[50usize, 200, 800] {
        let mut errors: Vec<f64> = (0..seeds)
            .map(|s| sup_emdf_error(&uniform_points(s + 1, n)))
            .collect();
        errors.sort_unstable_by(f64::total_cmp);
        medians.push(errors[errors.len() / 2]);
    }
    assert!(
        medians[0] > medians[1] && medians[1] > medians[2],
        "medians not decreasing: {medians:?}"
    );
}

#[test]
fn permuted_labels_score_below_a_separated_feature() {
    let n = 200;
    // Separated clusters: the positive class near 0, the negative near 10.
    let mut separated: Vec<f64> = Vec::with_capacity(n);
    let mut rng = substream(7, &[1]);
    let labels = {
        let mut l = alternating_labels(n);
        l.shuffle(&mut rng);
        l
    };
    for &l in &labels {
        let base = if l == Label::Pos { 0.0 } else { 10.0 };
        separated.push(base + rng.random::<f64>());
    }
    let signal = omega_hat(&line_matrix(&separated), &labels).unwrap();

    // Null: same geometry, labels repeatedly permuted.
    let points = uniform_points(3, n);
    let d = line_matrix(&points);
    let mut perm = labels.clone();
    let mut null_scores: Vec<f64> = (0..200)
        .map(|_| {
            perm.shuffle(&mut rng);
            omega_hat(&d, &perm).unwrap()
        })
        .collect();
    null_scores.sort_unstable_by(f64::total_cmp);
    let q95 = null_scores[(0.95 * null_scores.len() as f64) as usize];
    assert!(
        q95 < signal,
        "null 95th percentile {q95} not below signal {signal}"
    );
}

#[test]
fn null_score_is_small_at_n_400() {
    let n = 400;
    let points = uniform_points(11, n);
    let d = line_matrix(&points);
    let mut rng = substream(11, &[2]);
    let mut labels = alternating_labels(n);
    let mut sum = 0.0;
    let perms = 500;
    for _ in 0..perms {
        labels.shuffle(&mut rng);
        sum += omega_hat(&d, &labels).unwrap();
    }
    let mean = sum / perms as f64;
    assert!(mean < 0.2, "mean null score {mean} at n = {n}");
}

#[test]
fn null_score_decreases_with_n() {
    let mut medians = Vec::new();
    for &n in &[100usize, 400, 1600] {
        let mut scores: Vec<f64> = (0..20u64)
            .map(|s| {
                let points = uniform_points(1000 + s, n);
                let mut rng = substream(2000 + s, &[3]);
                let mut labels = alternating_labels(n);
                labels.shuffle(&mut rng);
                omega_hat(&line_matrix(&points), &labels).unwrap()
            })
            .collect();
        scores.sort_unstable_by(f64::total_cmp);
        medians.push(scores[scores.len() / 2]);
    }
    assert!(
        medians[0] > medians[1] && medians[1] > medians[2],
        "null medians not decreasing: {medians:?}"
    );
}

/// Two-sample Kolmogorov–Smirnov statistic (test-local oracle).
fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    ys.sort_unstable_by(f64::total_cmp);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        let diff = (i as f64 / xs.len() as f64 - j as f64 / ys.len() as f64).abs();
        sup = sup.max(diff);
    }
    sup
}

#[test]
fn distributional_noise_features_pass_a_ks_null_check() {
    let cfg = SimulationConfig::distributional(100, 40, 20, 5);
    let (ds, _) = mkfilter::build_distributional_dataset(&cfg).unwrap();
    // Pool each noise feature's raw samples by class and KS-test them at
    // level 0.01 (asymptotic critical value).
    let critical = 1.6276 * ((400.0 + 400.0) / (400.0 * 400.0) as f64).sqrt();
    let mut passes = 0usize;
    let mut total = 0usize;
    for j in 8..ds.p() {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        match ds.column(j).objects() {
            ObjectColumn::Distributions(objs) => {
                for (i, o) in objs.iter().enumerate() {
                    if ds.labels()[i] == Label::Pos {
                        pos.extend_from_slice(o.samples());
                    } else {
                        neg.extend_from_slice(o.samples());
                    }
                }
            }
            _ => panic!("expected distributions"),
        }
        total += 1;
        if ks_two_sample(&pos, &neg) < critical {
            passes += 1;
        }
    }
    assert!(
        passes as f64 >= 0.95 * total as f64,
        "{passes}/{total} noise features passed"
    );
}

#[test]
fn mean_shift_feature_has_the_designed_gap() {
    let cfg = SimulationConfig::distributional(9, 200, 40, 17);
    let (ds, _) = mkfilter::build_distributional_dataset(&cfg).unwrap();
    let (mut pos_sum, mut pos_n, mut neg_sum, mut neg_n) = (0.0, 0usize, 0.0, 0usize);
    match ds.column(0).objects() {
        ObjectColumn::Distributions(objs) => {
            for (i, o) in objs.iter().enumerate() {
                let s: f64 = o.samples().iter().sum();
                if ds.labels()[i] == Label::Pos {
                    pos_sum += s;
                    pos_n += o.len();
                } else {
                    neg_sum += s;
                    neg_n += o.len();
                }
            }
        }
        _ => panic!("expected distributions"),
    }
    let gap = pos_sum / pos_n as f64 - neg_sum / neg_n as f64;
    assert!((gap - 0.6).abs() < 0.1, "gap {gap}");
}

#[test]
fn mean_shift_feature_ranks_high_in_reduced_power_study() {
    let mut hits = 0usize;
    let seeds = 100u64;
    for s in 0..seeds {
        let cfg = SimulationConfig {
            seed: s,
            ..SimulationConfig::distributional(100, 40, 20, 0)
        };
        assert_eq!(cfg.scenario, Scenario::Distributional);
        let (ds, _) = mkfilter::build_distributional_dataset(&cfg).unwrap();
        let res = screen_all(&ds).unwrap();
        if res.rank_of(0).unwrap() <= 10 {
            hits += 1;
        }
    }
    assert!(hits >= 95, "feature 0 in top 10 only {hits}/{seeds} times");
}
