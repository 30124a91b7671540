//! Feature selection: top-`s` cutoff and the data-splitting threshold that
//! controls the false discovery rate.
//!
//! The split-based procedure works in four steps:
//!
//! 1. stratified random split of the rows into parts of sizes
//!    `n₁ = n(K−1)/K` and `n₂ = n/K` (`K >= 3`);
//! 2. screening scores `ω̂₁ⱼ`, `ω̂₂ⱼ` computed independently on the parts;
//! 3. the signed statistic
//!    `W_j = sign(n₁^γ ω̂₁ⱼ − n₂^γ ω̂₂ⱼ) · max(n₁^γ ω̂₁ⱼ, n₂^γ ω̂₂ⱼ)`,
//!    symmetric about zero for uninformative features;
//! 4. the data-adaptive threshold
//!    `T = inf { t > 0 : (1 + #{W_j <= −t}) / max(#{W_j >= t}, 1) <= α }`,
//!    with the selected set `{ j : W_j >= T }`.
//!
//! Both counts in step 4 are piecewise constant with breakpoints exactly at
//! the nonzero `|W_j|`, so the infimum is attained on that grid and the scan
//! is exact.

use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::mks::{screen_all, ScreeningResult};
use crate::rng::substream;
use serde::{Deserialize, Serialize};

/// Default model size `s = ⌊n / ln n⌋`.
pub fn default_model_size(n: usize) -> usize {
    (n as f64 / (n as f64).ln()).floor() as usize
}

/// Indices of the `s` features with the largest screening scores, returned
/// sorted ascending. `s` defaults to [`default_model_size`].
pub fn top_s(res: &ScreeningResult, s: Option<usize>) -> Result<Vec<usize>> {
    let p = res.ranking.len();
    let s = s.unwrap_or_else(|| default_model_size(res.n));
    if s < 1 || s > p {
        return Err(Error::BadSize {
            got: s,
            min: 1,
            max: p,
        });
    }
    let mut out: Vec<usize> = res.ranking[..s].to_vec();
    out.sort_unstable();
    Ok(out)
}

/// Stratified random split into parts of sizes `(n(K−1)/K, n/K)`.
///
/// Both parts keep at least one member of each class (scores are undefined
/// on single-class data). When `K` does not divide `n` the part sizes are
/// rounded so `|n₁ − n(K−1)/K| <= 1`. Deterministic given the seed.
pub fn split_dataset(
    ds: &LabeledDataset,
    k: usize,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if k < 3 {
        return Err(Error::BadParam {
            name: "K",
            reason: format!("K must be at least 3, got {k}"),
        });
    }
    let n = ds.n();
    let (np, nm) = (ds.n_pos(), ds.n_neg());
    for (class, count) in [(1i8, np), (-1i8, nm)] {
        if count < 2 {
            return Err(Error::TooFewPerClass {
                class,
                got: count,
                need: 2,
            });
        }
    }
    let n2 = (n as f64 / k as f64).round() as usize;
    if n2 < 2 || n - n2 < 2 {
        return Err(Error::BadConfig(format!(
            "cannot stratify a split of sizes ({}, {n2}) over two classes",
            n - n2
        )));
    }
    // Per-class allocation for the small part: proportional, clamped so both
    // parts retain both classes, with the total pinned to n2.
    let lo = 1usize.max(n2.saturating_sub(nm - 1));
    let hi = (np - 1).min(n2 - 1);
    if lo > hi {
        return Err(Error::TooFewPerClass {
            class: 1,
            got: np,
            need: 2,
        });
    }
    let ideal = (np as f64 * n2 as f64 / n as f64).round() as usize;
    let n2_pos = ideal.clamp(lo, hi);
    let n2_neg = n2 - n2_pos;

    let mut rng = substream(seed, &[0x53_50_4C_49_54]); // "SPLIT"
    let mut pos: Vec<usize> = (0..n).filter(|&i| ds.labels()[i] == Label::Pos).collect();
    let mut neg: Vec<usize> = (0..n).filter(|&i| ds.labels()[i] == Label::Neg).collect();
    use rand::seq::SliceRandom;
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let mut part2: Vec<usize> = pos[..n2_pos].iter().chain(&neg[..n2_neg]).copied().collect();
    let mut part1: Vec<usize> = pos[n2_pos..].iter().chain(&neg[n2_neg..]).copied().collect();
    part1.sort_unstable();
    part2.sort_unstable();
    Ok((ds.subset(&part1)?, ds.subset(&part2)?))
}

/// Signed split statistics `W_j`; `sign(0)` is taken as `+1`, which is inert
/// because a zero never enters the threshold's candidate grid.
pub fn w_statistics(
    omega1: &[f64],
    omega2: &[f64],
    n1: usize,
    n2: usize,
    gamma: f64,
) -> Result<Vec<f64>> {
    if omega1.len() != omega2.len() {
        return Err(Error::LengthMismatch {
            left: omega1.len(),
            right: omega2.len(),
        });
    }
    if gamma <= 0.0 {
        return Err(Error::BadParam {
            name: "gamma",
            reason: format!("gamma must be positive, got {gamma}"),
        });
    }
    let s1 = (n1 as f64).powf(gamma);
    let s2 = (n2 as f64).powf(gamma);
    Ok(omega1
        .iter()
        .zip(omega2)
        .map(|(&w1, &w2)| {
            let (a, b) = (s1 * w1, s2 * w2);
            let sign = if a - b >= 0.0 { 1.0 } else { -1.0 };
            sign * a.max(b)
        })
        .collect())
}

/// The two split-screening score vectors and the derived `W` statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitStatistics {
    pub omega1: Vec<f64>,
    pub omega2: Vec<f64>,
    pub n1: usize,
    pub n2: usize,
    pub gamma: f64,
    pub w: Vec<f64>,
}

impl SplitStatistics {
    pub fn new(
        omega1: Vec<f64>,
        omega2: Vec<f64>,
        n1: usize,
        n2: usize,
        gamma: f64,
    ) -> Result<Self> {
        let w = w_statistics(&omega1, &omega2, n1, n2, gamma)?;
        Ok(Self {
            omega1,
            omega2,
            n1,
            n2,
            gamma,
            w,
        })
    }
}

/// Data-adaptive threshold: the smallest candidate `t ∈ {|W_j| : W_j ≠ 0}`
/// (scanned ascending) with `(1 + #{W_j <= −t}) / max(#{W_j >= t}, 1) <= α`,
/// or `+∞` when no candidate qualifies.
pub fn adaptive_threshold(w: &[f64], alpha: f64) -> f64 {
    let mut sorted: Vec<f64> = w.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let p = sorted.len();
    let mut candidates: Vec<f64> = w.iter().filter(|&&x| x != 0.0).map(|x| x.abs()).collect();
    candidates.sort_unstable_by(f64::total_cmp);
    candidates.dedup();
    for &t in &candidates {
        // #{W_j <= -t} and #{W_j >= t} by binary search on the sorted copy.
        let neg = sorted.partition_point(|&x| x <= -t);
        let pos = p - sorted.partition_point(|&x| x < t);
        let ratio = (1 + neg) as f64 / pos.max(1) as f64;
        if ratio <= alpha {
            return t;
        }
    }
    f64::INFINITY
}

/// Output of the split-based selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FdrSelection {
    /// Selected threshold; `+∞` (serialized as `null`) when nothing passes.
    #[serde(with = "serde_inf_as_null")]
    pub threshold: f64,
    /// `{ j : W_j >= threshold }`, sorted ascending.
    pub selected: Vec<usize>,
    pub alpha: f64,
    pub split_seed: u64,
}

mod serde_inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Split, screen both parts, form `W`, pick the threshold, select.
///
/// Deterministic given `(dataset, alpha, k, gamma, seed)`; the two split
/// screens run concurrently.
pub fn fdr_select(
    ds: &LabeledDataset,
    alpha: f64,
    k: usize,
    gamma: f64,
    seed: u64,
) -> Result<FdrSelection> {
    fdr_select_detailed(ds, alpha, k, gamma, seed).map(|(sel, _)| sel)
}

/// [`fdr_select`] that also returns the split statistics, for reporting.
pub fn fdr_select_detailed(
    ds: &LabeledDataset,
    alpha: f64,
    k: usize,
    gamma: f64,
    seed: u64,
) -> Result<(FdrSelection, SplitStatistics)> {
    if !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
        return Err(Error::BadParam {
            name: "alpha",
            reason: format!("alpha must lie in (0, 1), got {alpha}"),
        });
    }
    if ds.n() < 2 * k {
        return Err(Error::BadConfig(format!(
            "n = {} is too small for K = {k}: need n >= 2K",
            ds.n()
        )));
    }
    let (part1, part2) = split_dataset(ds, k, seed)?;
    let (res1, res2) = rayon::join(|| screen_all(&part1), || screen_all(&part2));
    let (res1, res2) = (res1?, res2?);
    let stats = SplitStatistics::new(
        res1.omega_hat,
        res2.omega_hat,
        part1.n(),
        part2.n(),
        gamma,
    )?;
    let threshold = adaptive_threshold(&stats.w, alpha);
    let selected: Vec<usize> = stats
        .w
        .iter()
        .enumerate()
        .filter(|&(_, &wj)| wj >= threshold)
        .map(|(j, _)| j)
        .collect();
    Ok((
        FdrSelection {
            threshold,
            selected,
            alpha,
            split_seed: seed,
        },
        stats,
    ))
}

/// False discovery proportion of `selected` against a known informative set,
/// with the `0/0 → 0` convention for empty selections.
pub fn false_discovery_proportion(selected: &[usize], true_set: &[usize]) -> f64 {
    if selected.is_empty() {
        return 0.0;
    }
    let false_hits = selected
        .iter()
        .filter(|j| !true_set.contains(j))
        .count();
    false_hits as f64 / selected.len() as f64
}
