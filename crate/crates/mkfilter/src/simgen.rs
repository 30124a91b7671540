//! Synthetic data generators and the replicated evaluation harness.
//!
//! Two scenarios are covered. The *distributional* scenario produces columns
//! of univariate empirical distributions (eight informative contrasts: mean
//! and support shifts, variance inflation, heavy tails, and two generalized
//! extreme value contrasts, then pure noise). The *spd* scenario produces
//! columns of Wishart-distributed SPD matrices (ten informative features
//! built from scale, autoregressive, and heterogeneous-compound covariance
//! contrasts). [`run_simulation`] replicates either scenario, screens every
//! replicate, and aggregates minimum model sizes, top-`s` selection
//! proportions, and — when a nominal level is set — the empirical false
//! discovery rate of the adaptive threshold.
//!
//! All randomness flows through per-`(replicate, feature)` ChaCha8 substreams
//! (see [`crate::rng`]), so a configuration reproduces bit-identical reports
//! on any platform and thread count.

use crate::dataset::{FeatureColumn, Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::metrics::{chol_lower, CholeskyFactor, EmpiricalDistribution, MetricKind, SpdMatrix};
use crate::mks::screen_all;
use crate::mks::ScreeningResult;
use crate::rng::{derive_seed, substream};
use crate::select::{default_model_size, false_discovery_proportion, fdr_select, top_s};
use rand::distr::Open01;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Normal, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const TAG_DIST_COL: u64 = 1;
const TAG_SPD_COL: u64 = 2;
const TAG_REPLICATE: u64 = 3;
const TAG_FDR_SPLIT: u64 = 4;

/// Which generator family a simulation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Distributional,
    Spd,
}

/// Full description of one simulation study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub scenario: Scenario,
    /// Number of feature columns.
    pub p: usize,
    /// Number of samples (even; labels are balanced exactly).
    pub n: usize,
    /// Samples per empirical distribution (distributional scenario).
    pub m: usize,
    /// Matrix dimension, 3 or 5 (spd scenario).
    pub spd_dim: usize,
    pub metric: MetricKind,
    /// Nominal FDR level; `None` disables the selection step.
    pub alpha: Option<f64>,
    /// Split count `K` for the adaptive threshold.
    pub k_split: usize,
    /// Stabilization exponent `γ` for the split statistics.
    pub gamma: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl SimulationConfig {
    /// Distributional scenario with the default Wasserstein metric.
    pub fn distributional(p: usize, n: usize, m: usize, seed: u64) -> Self {
        Self {
            scenario: Scenario::Distributional,
            p,
            n,
            m,
            spd_dim: 3,
            metric: MetricKind::Wasserstein,
            alpha: None,
            k_split: 3,
            gamma: 0.5,
            replicates: 1,
            seed,
        }
    }

    /// SPD scenario with the given matrix dimension and metric.
    pub fn spd(p: usize, n: usize, spd_dim: usize, metric: MetricKind, seed: u64) -> Self {
        Self {
            scenario: Scenario::Spd,
            p,
            n,
            m: 0,
            spd_dim,
            metric,
            alpha: None,
            k_split: 3,
            gamma: 0.5,
            replicates: 1,
            seed,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn with_replicates(mut self, replicates: usize) -> Self {
        self.replicates = replicates;
        self
    }

    fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.seed = seed;
        c
    }

    /// Informative feature indices for the scenario.
    pub fn true_set(&self) -> Vec<usize> {
        match self.scenario {
            Scenario::Distributional => (0..8).collect(),
            Scenario::Spd => (0..10).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let informative = self.true_set().len();
        if self.p < informative {
            return Err(Error::BadConfig(format!(
                "p = {} is below the {informative} informative features of the scenario",
                self.p
            )));
        }
        if self.n < 2 || self.n % 2 != 0 {
            return Err(Error::BadConfig(format!(
                "n = {} must be even and positive for balanced labels",
                self.n
            )));
        }
        if self.replicates == 0 {
            return Err(Error::BadConfig("replicates must be positive".into()));
        }
        match self.scenario {
            Scenario::Distributional => {
                if self.m == 0 {
                    return Err(Error::BadConfig(
                        "m (samples per distribution) must be positive".into(),
                    ));
                }
                if self.metric != MetricKind::Wasserstein {
                    return Err(Error::BadConfig(format!(
                        "distributional scenario requires the wasserstein metric, got {}",
                        self.metric
                    )));
                }
            }
            Scenario::Spd => {
                if self.spd_dim != 3 && self.spd_dim != 5 {
                    return Err(Error::BadConfig(format!(
                        "spd_dim must be 3 or 5, got {}",
                        self.spd_dim
                    )));
                }
                if !matches!(
                    self.metric,
                    MetricKind::Frobenius | MetricKind::Cholesky | MetricKind::LogCholesky
                ) {
                    return Err(Error::BadConfig(format!(
                        "spd scenario requires an spd metric, got {}",
                        self.metric
                    )));
                }
            }
        }
        if let Some(alpha) = self.alpha {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::BadConfig(format!(
                    "alpha must lie in (0, 1), got {alpha}"
                )));
            }
            if self.k_split < 3 {
                return Err(Error::BadConfig(format!(
                    "K must be at least 3, got {}",
                    self.k_split
                )));
            }
            if self.gamma <= 0.0 {
                return Err(Error::BadConfig(format!(
                    "gamma must be positive, got {}",
                    self.gamma
                )));
            }
            if self.n < 2 * self.k_split {
                return Err(Error::BadConfig(format!(
                    "n = {} is too small for K = {}",
                    self.n, self.k_split
                )));
            }
        }
        Ok(())
    }
}

/// Inverse-CDF sample of the generalized extreme value distribution.
///
/// For shape `ξ ≠ 0` this is `μ + σ((−ln u)^{−ξ} − 1)/ξ`; the Gumbel limit
/// `ξ = 0` gives `μ − σ ln(−ln u)`. `u` must lie strictly inside `(0, 1)`.
pub fn sample_gev(mu: f64, sigma: f64, xi: f64, u: f64) -> Result<f64> {
    if sigma <= 0.0 {
        return Err(Error::BadParam {
            name: "sigma",
            reason: format!("scale must be positive, got {sigma}"),
        });
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::BadParam {
            name: "u",
            reason: format!("uniform draw must lie in (0, 1), got {u}"),
        });
    }
    let e = -u.ln(); // strictly positive
    Ok(if xi == 0.0 {
        mu - sigma * e.ln()
    } else {
        mu + sigma * (e.powf(-xi) - 1.0) / xi
    })
}

/// Wishart sampler `W_m(v, Σ)` via the Bartlett construction: with
/// `L = chol(Σ)` and `A` lower triangular having `A_ii = sqrt(χ²(v − i))`
/// (`i` zero-based) and standard normals below the diagonal, the draw is
/// `(LA)(LA)ᵀ`.
pub struct WishartSampler {
    dim: usize,
    scale_factor: CholeskyFactor,
    chi: Vec<ChiSquared<f64>>,
}

impl WishartSampler {
    pub fn new(dof: f64, scale: &SpdMatrix) -> Result<Self> {
        let m = scale.dim();
        if dof <= (m - 1) as f64 {
            return Err(Error::BadParam {
                name: "dof",
                reason: format!("Wishart needs v > m - 1 = {}, got {dof}", m - 1),
            });
        }
        let chi = (0..m)
            .map(|i| {
                ChiSquared::new(dof - i as f64).map_err(|e| Error::BadParam {
                    name: "dof",
                    reason: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: m,
            scale_factor: chol_lower(scale)?,
            chi,
        })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<SpdMatrix> {
        let m = self.dim;
        let mut a = vec![0.0f64; m * m];
        for i in 0..m {
            for j in 0..i {
                a[i * m + j] = rng.sample::<f64, _>(StandardNormal);
            }
            a[i * m + i] = self.chi[i].sample(rng).sqrt();
        }
        // T = L A, both lower triangular.
        let l = &self.scale_factor;
        let mut t = vec![0.0f64; m * m];
        for i in 0..m {
            for j in 0..=i {
                let mut s = 0.0;
                for k in j..=i {
                    s += l.get(i, k) * a[k * m + j];
                }
                t[i * m + j] = s;
            }
        }
        let mut x = vec![0.0f64; m * m];
        for i in 0..m {
            for j in 0..=i {
                let mut s = 0.0;
                for k in 0..=j.min(i) {
                    s += t[i * m + k] * t[j * m + k];
                }
                x[i * m + j] = s;
                x[j * m + i] = s;
            }
        }
        SpdMatrix::new(m, x)
    }
}

/// One-shot Wishart draw; see [`WishartSampler`].
pub fn sample_wishart<R: Rng>(dof: f64, scale: &SpdMatrix, rng: &mut R) -> Result<SpdMatrix> {
    WishartSampler::new(dof, scale)?.sample(rng)
}

/// Autoregressive covariance `Σ_kl = ρ^|k−l|`, positive definite for
/// `|ρ| < 1`.
pub fn cov_ar(m: usize, rho: f64) -> Result<SpdMatrix> {
    if rho.abs() >= 1.0 {
        return Err(Error::BadParam {
            name: "rho",
            reason: format!("|rho| must be below 1, got {rho}"),
        });
    }
    let mut entries = vec![0.0f64; m * m];
    for k in 0..m {
        for l in 0..m {
            entries[k * m + l] = rho.powi((k as i32 - l as i32).abs());
        }
    }
    SpdMatrix::new(m, entries)
}

/// Heterogeneous compound covariance: `Σ_kl = ρ λ_k λ_l` off the diagonal,
/// `λ_k²` on it. Positive definiteness is validated, not assumed.
pub fn cov_hc(m: usize, rho: f64, lambda: &[f64]) -> Result<SpdMatrix> {
    if lambda.len() != m {
        return Err(Error::DimMismatch {
            left: lambda.len(),
            right: m,
        });
    }
    if let Some(bad) = lambda.iter().find(|x| **x <= 0.0) {
        return Err(Error::BadParam {
            name: "lambda",
            reason: format!("diagonal loadings must be positive, got {bad}"),
        });
    }
    let mut entries = vec![0.0f64; m * m];
    for k in 0..m {
        for l in 0..m {
            entries[k * m + l] = if k == l {
                lambda[k] * lambda[k]
            } else {
                rho * lambda[k] * lambda[l]
            };
        }
    }
    SpdMatrix::new(m, entries)
}

/// Class-conditional sampler for one distributional feature.
enum DistSampler {
    Normal(Normal<f64>),
    Uniform(Uniform<f64>),
    StudentT { df: f64, chi: ChiSquared<f64> },
    Gev { mu: f64, sigma: f64, xi: f64 },
}

impl DistSampler {
    fn normal(mean: f64, sd: f64) -> Self {
        DistSampler::Normal(Normal::new(mean, sd).expect("valid normal"))
    }

    fn uniform(lo: f64, hi: f64) -> Self {
        DistSampler::Uniform(Uniform::new(lo, hi).expect("valid uniform"))
    }

    fn student_t(df: f64) -> Self {
        DistSampler::StudentT {
            df,
            chi: ChiSquared::new(df).expect("valid chi-squared"),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            DistSampler::Normal(d) => d.sample(rng),
            DistSampler::Uniform(d) => d.sample(rng),
            // t(ν) as N(0,1) / sqrt(χ²_ν / ν); ν = 1 is Cauchy and its heavy
            // tails are intended.
            DistSampler::StudentT { df, chi } => {
                let z: f64 = rng.sample(StandardNormal);
                let c: f64 = chi.sample(rng);
                z / (c / df).sqrt()
            }
            DistSampler::Gev { mu, sigma, xi } => {
                let u: f64 = rng.sample(Open01);
                sample_gev(*mu, *sigma, *xi, u).expect("u in (0,1)")
            }
        }
    }
}

/// `(positive-class, negative-class)` samplers for distributional feature `j`.
fn distributional_samplers(j: usize) -> (DistSampler, DistSampler) {
    match j {
        0 => (DistSampler::normal(0.3, 1.0), DistSampler::normal(-0.3, 1.0)),
        1 => (
            DistSampler::uniform(-1.0, 1.0),
            DistSampler::uniform(-0.8, 1.2),
        ),
        // Variance contrast: N(0, 1) vs N(0, 1.5) with 1.5 the variance.
        2 => (
            DistSampler::normal(0.0, 1.0),
            DistSampler::normal(0.0, 1.5f64.sqrt()),
        ),
        3 => (
            DistSampler::uniform(-1.0, 1.0),
            DistSampler::uniform(-1.4, 1.4),
        ),
        4 => (DistSampler::normal(0.0, 1.0), DistSampler::student_t(3.0)),
        5 => (DistSampler::student_t(3.0), DistSampler::student_t(1.0)),
        6 => (
            DistSampler::Gev {
                mu: 0.0,
                sigma: 0.1,
                xi: 0.0,
            },
            DistSampler::Gev {
                mu: 0.0,
                sigma: 0.2,
                xi: 0.0,
            },
        ),
        7 => (
            DistSampler::Gev {
                mu: 0.0,
                sigma: 0.1,
                xi: 0.1,
            },
            DistSampler::Gev {
                mu: 0.0,
                sigma: 0.1,
                xi: 0.4,
            },
        ),
        _ => (DistSampler::normal(0.0, 1.0), DistSampler::normal(0.0, 1.0)),
    }
}

/// Balanced labels: the first `n/2` rows are positive.
fn balanced_labels(n: usize) -> Vec<Label> {
    (0..n)
        .map(|i| if i < n / 2 { Label::Pos } else { Label::Neg })
        .collect()
}

/// Generate the distributional scenario. Returns the dataset and the
/// informative index set `{0, .., 7}`.
pub fn build_distributional_dataset(
    cfg: &SimulationConfig,
) -> Result<(LabeledDataset, Vec<usize>)> {
    if cfg.scenario != Scenario::Distributional {
        return Err(Error::BadConfig(
            "config does not describe the distributional scenario".into(),
        ));
    }
    cfg.validate()?;
    let labels = balanced_labels(cfg.n);
    let per_column: Vec<Result<FeatureColumn>> = (0..cfg.p)
        .into_par_iter()
        .map(|j| {
            let mut rng = substream(cfg.seed, &[TAG_DIST_COL, j as u64]);
            let (pos, neg) = distributional_samplers(j);
            let objects = labels
                .iter()
                .map(|&label| {
                    let sampler = if label == Label::Pos { &pos } else { &neg };
                    let samples: Vec<f64> =
                        (0..cfg.m).map(|_| sampler.sample(&mut rng)).collect();
                    EmpiricalDistribution::new(samples)
                })
                .collect::<Result<Vec<_>>>()?;
            FeatureColumn::distributions(objects)
        })
        .collect();
    let mut columns = Vec::with_capacity(cfg.p);
    for (j, col) in per_column.into_iter().enumerate() {
        columns.push(col.map_err(|e| e.in_column(j))?);
    }
    Ok((
        LabeledDataset::new(columns, labels)?,
        cfg.true_set(),
    ))
}

/// Diagonal loadings for the heterogeneous compound matrices.
fn hc_lambda(dim: usize) -> Vec<f64> {
    match dim {
        3 => vec![1.0, 1.1, 1.2],
        5 => vec![1.0, 1.05, 1.1, 1.15, 1.2],
        _ => unreachable!("validated spd_dim"),
    }
}

/// Wishart degrees of freedom shared by both SPD settings.
const WISHART_DOF: f64 = 10.0;

/// `(positive, negative)` scale matrices for spd feature `j`. Uninformative
/// features (`j >= 10`) draw one shared scale from a fixed palette; the draw
/// is the first use of the feature's substream, so it depends only on the
/// feature index and seed.
fn spd_scales<R: Rng>(j: usize, dim: usize, rng: &mut R) -> Result<(SpdMatrix, SpdMatrix)> {
    let lambda = hc_lambda(dim);
    let scaled_identity = |c: f64| SpdMatrix::diagonal(&vec![c; dim]);
    Ok(match j {
        0 | 1 => (SpdMatrix::identity(dim), scaled_identity(0.6)?),
        2 | 3 => (SpdMatrix::identity(dim), cov_ar(dim, 0.4)?),
        4 | 5 => (SpdMatrix::identity(dim), cov_hc(dim, 0.5, &lambda)?),
        6 | 7 => (cov_ar(dim, -0.25)?, cov_ar(dim, 0.25)?),
        8 | 9 => (cov_hc(dim, 0.2, &lambda)?, cov_hc(dim, 0.5, &lambda)?),
        _ => {
            let sigma = match rng.random_range(0..4u32) {
                0 => SpdMatrix::identity(dim),
                1 => cov_ar(dim, -0.2)?,
                2 => cov_ar(dim, 0.5)?,
                _ => cov_hc(dim, 0.5, &lambda)?,
            };
            (sigma.clone(), sigma)
        }
    })
}

/// Generate the SPD scenario. Returns the dataset and the informative index
/// set `{0, .., 9}`.
pub fn build_spd_dataset(cfg: &SimulationConfig) -> Result<(LabeledDataset, Vec<usize>)> {
    if cfg.scenario != Scenario::Spd {
        return Err(Error::BadConfig(
            "config does not describe the spd scenario".into(),
        ));
    }
    cfg.validate()?;
    let labels = balanced_labels(cfg.n);
    let per_column: Vec<Result<FeatureColumn>> = (0..cfg.p)
        .into_par_iter()
        .map(|j| {
            let mut rng = substream(cfg.seed, &[TAG_SPD_COL, j as u64]);
            let (sigma_pos, sigma_neg) = spd_scales(j, cfg.spd_dim, &mut rng)?;
            let pos = WishartSampler::new(WISHART_DOF, &sigma_pos)?;
            let neg = WishartSampler::new(WISHART_DOF, &sigma_neg)?;
            let objects = labels
                .iter()
                .map(|&label| {
                    if label == Label::Pos {
                        pos.sample(&mut rng)
                    } else {
                        neg.sample(&mut rng)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            FeatureColumn::spd(objects, cfg.metric)
        })
        .collect();
    let mut columns = Vec::with_capacity(cfg.p);
    for (j, col) in per_column.into_iter().enumerate() {
        columns.push(col.map_err(|e| e.in_column(j))?);
    }
    Ok((
        LabeledDataset::new(columns, labels)?,
        cfg.true_set(),
    ))
}

/// Minimum model size: the largest 1-based rank over the informative set, so
/// the smallest ranking prefix that covers every informative feature.
pub fn mms(res: &ScreeningResult, true_set: &[usize]) -> Result<usize> {
    let p = res.ranking.len();
    if true_set.is_empty() {
        return Err(Error::BadSet("true set is empty".into()));
    }
    if let Some(&bad) = true_set.iter().find(|&&j| j >= p) {
        return Err(Error::BadSet(format!(
            "feature {bad} out of range for p = {p}"
        )));
    }
    let mut rank_of = vec![0usize; p];
    for (pos, &j) in res.ranking.iter().enumerate() {
        rank_of[j] = pos + 1;
    }
    Ok(true_set.iter().map(|&j| rank_of[j]).max().unwrap())
}

/// Everything recorded for one replicate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub mms: usize,
    /// For each informative feature, whether it landed in the top-`s` set.
    pub top_s_hits: Vec<bool>,
    /// False discovery proportion of the adaptive selection (when run).
    pub fdp: Option<f64>,
    pub selected_size: Option<usize>,
}

/// Aggregated study output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: SimulationConfig,
    /// Model size used for the selection proportions.
    pub s_used: usize,
    /// 25%, 50%, 75% quantiles of the minimum model size (nearest rank).
    pub mms_quantiles: [usize; 3],
    /// Selection proportion per informative feature at size `s_used`.
    pub proportions: Vec<f64>,
    /// Mean false discovery proportion across replicates (when alpha set).
    pub empirical_fdr: Option<f64>,
    pub per_replicate: Vec<ReplicateRecord>,
}

fn nearest_rank_quantile(sorted: &[usize], q: f64) -> usize {
    let n = sorted.len();
    let idx = ((q * n as f64).ceil() as usize).max(1) - 1;
    sorted[idx.min(n - 1)]
}

/// Run the configured study: generate, screen, rank, and (optionally) select
/// with the adaptive threshold, once per replicate. Replicates run in
/// parallel on independent substreams and aggregate in replicate order.
pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationReport> {
    cfg.validate()?;
    let s_used = default_model_size(cfg.n);
    let per_replicate: Vec<Result<ReplicateRecord>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let data_cfg = cfg.with_seed(derive_seed(cfg.seed, &[TAG_REPLICATE, r as u64]));
            let (ds, true_set) = match cfg.scenario {
                Scenario::Distributional => build_distributional_dataset(&data_cfg)?,
                Scenario::Spd => build_spd_dataset(&data_cfg)?,
            };
            let res = screen_all(&ds)?;
            let mms_value = mms(&res, &true_set)?;
            let top = top_s(&res, Some(s_used))?;
            let top_s_hits = true_set
                .iter()
                .map(|j| top.binary_search(j).is_ok())
                .collect();
            let (fdp, selected_size) = match cfg.alpha {
                Some(alpha) => {
                    let sel = fdr_select(
                        &ds,
                        alpha,
                        cfg.k_split,
                        cfg.gamma,
                        derive_seed(cfg.seed, &[TAG_FDR_SPLIT, r as u64]),
                    )?;
                    (
                        Some(false_discovery_proportion(&sel.selected, &true_set)),
                        Some(sel.selected.len()),
                    )
                }
                None => (None, None),
            };
            Ok(ReplicateRecord {
                replicate: r,
                mms: mms_value,
                top_s_hits,
                fdp,
                selected_size,
            })
        })
        .collect();
    let mut records = Vec::with_capacity(cfg.replicates);
    for rec in per_replicate {
        records.push(rec?);
    }

    let mut mms_sorted: Vec<usize> = records.iter().map(|r| r.mms).collect();
    mms_sorted.sort_unstable();
    let mms_quantiles = [
        nearest_rank_quantile(&mms_sorted, 0.25),
        nearest_rank_quantile(&mms_sorted, 0.50),
        nearest_rank_quantile(&mms_sorted, 0.75),
    ];
    let informative = cfg.true_set().len();
    let proportions: Vec<f64> = (0..informative)
        .map(|t| {
            records.iter().filter(|r| r.top_s_hits[t]).count() as f64 / records.len() as f64
        })
        .collect();
    let empirical_fdr = cfg.alpha.map(|_| {
        records.iter().map(|r| r.fdp.unwrap_or(0.0)).sum::<f64>() / records.len() as f64
    });
    Ok(SimulationReport {
        config: cfg.clone(),
        s_used,
        mms_quantiles,
        proportions,
        empirical_fdr,
        per_replicate: records,
    })
}
