//! Metric implementations for the supported object kinds.
//!
//! Three families of objects are supported:
//!
//! * [`EmpiricalDistribution`] — a univariate sample, compared with the
//!   quadratic Wasserstein distance between empirical quantile functions;
//! * [`SpdMatrix`] — a symmetric positive-definite matrix, compared with the
//!   Euclidean (Frobenius), Cholesky, or Log-Cholesky metric;
//! * precomputed distance matrices, for objects whose metric was evaluated
//!   elsewhere.
//!
//! All distances here are proper metrics: symmetric, nonnegative, zero on the
//! diagonal, and the screening statistics downstream only ever compare
//! distances, so any strictly increasing rescaling of a metric leaves the
//! screening output unchanged.

use crate::dataset::{FeatureColumn, ObjectColumn, ObjectRef};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Absolute tolerance for symmetry of an SPD matrix.
pub const SPD_SYMMETRY_TOL: f64 = 1e-10;
/// A Cholesky pivot at or below this value means "not positive definite".
pub const CHOL_PIVOT_TOL: f64 = 1e-12;
/// Absolute tolerance for symmetry of a user-supplied distance matrix.
pub const DIST_SYMMETRY_TOL: f64 = 1e-9;

/// Which metric a feature column is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Wasserstein,
    Frobenius,
    Cholesky,
    LogCholesky,
    Precomputed,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Wasserstein => "wasserstein",
            MetricKind::Frobenius => "frobenius",
            MetricKind::Cholesky => "cholesky",
            MetricKind::LogCholesky => "log_cholesky",
            MetricKind::Precomputed => "precomputed",
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wasserstein" => Ok(MetricKind::Wasserstein),
            "frobenius" | "euclidean" => Ok(MetricKind::Frobenius),
            "cholesky" => Ok(MetricKind::Cholesky),
            "log_cholesky" | "log-cholesky" => Ok(MetricKind::LogCholesky),
            "precomputed" => Ok(MetricKind::Precomputed),
            other => Err(Error::BadParam {
                name: "metric",
                reason: format!("unknown metric '{other}'"),
            }),
        }
    }
}

/// A univariate empirical distribution, stored as its sorted sample vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
}

impl EmpiricalDistribution {
    /// Validates (nonempty, finite) and sorts the sample vector.
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::BadParam {
                name: "samples",
                reason: "empirical distribution needs at least one sample".into(),
            });
        }
        if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
            return Err(Error::BadParam {
                name: "samples",
                reason: format!("non-finite sample {bad}"),
            });
        }
        samples.sort_unstable_by(f64::total_cmp);
        Ok(Self { samples })
    }

    /// The samples, sorted ascending.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least one sample
    }
}

/// A dense symmetric positive-definite matrix.
///
/// Construction validates symmetry (absolute tolerance `1e-10`) and positive
/// definiteness (every Cholesky pivot above `1e-12`); the tolerances admit
/// covariance matrices computed in double precision from real data.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    dim: usize,
    entries: Vec<f64>, // row-major, dim * dim
}

impl SpdMatrix {
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::BadParam {
                name: "dim",
                reason: "matrix dimension must be positive".into(),
            });
        }
        if entries.len() != dim * dim {
            return Err(Error::DimMismatch {
                left: entries.len(),
                right: dim * dim,
            });
        }
        if let Some(bad) = entries.iter().find(|x| !x.is_finite()) {
            return Err(Error::BadParam {
                name: "entries",
                reason: format!("non-finite entry {bad}"),
            });
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let a = entries[i * dim + j];
                let b = entries[j * dim + i];
                if (a - b).abs() > SPD_SYMMETRY_TOL {
                    return Err(Error::BadParam {
                        name: "entries",
                        reason: format!("asymmetry {:.3e} at ({i}, {j})", (a - b).abs()),
                    });
                }
            }
        }
        chol_lower_raw(dim, &entries)?;
        Ok(Self { dim, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimMismatch {
                    left: r.len(),
                    right: dim,
                });
            }
        }
        Self::new(dim, rows.concat())
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim]).expect("identity is SPD")
    }

    /// Diagonal matrix with the given strictly positive diagonal.
    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let dim = diag.len();
        let mut entries = vec![0.0; dim * dim];
        for (i, &d) in diag.iter().enumerate() {
            entries[i * dim + i] = d;
        }
        Self::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    /// Principal submatrix on the given (strictly increasing) index set.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Result<SpdMatrix> {
        let q = idx.len();
        let mut entries = Vec::with_capacity(q * q);
        for &i in idx {
            for &j in idx {
                if i >= self.dim || j >= self.dim {
                    return Err(Error::BadSet(format!(
                        "index {} out of range for dimension {}",
                        i.max(j),
                        self.dim
                    )));
                }
                entries.push(self.get(i, j));
            }
        }
        SpdMatrix::new(q, entries)
    }
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = A`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    dim: usize,
    entries: Vec<f64>, // row-major, upper triangle zeroed
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }
}

fn chol_lower_raw(dim: usize, a: &[f64]) -> Result<CholeskyFactor> {
    let mut l = vec![0.0f64; dim * dim];
    for j in 0..dim {
        let mut d = a[j * dim + j];
        for k in 0..j {
            d -= l[j * dim + k] * l[j * dim + k];
        }
        if d <= CHOL_PIVOT_TOL {
            return Err(Error::NotPositiveDefinite {
                index: j,
                pivot: d,
                tol: CHOL_PIVOT_TOL,
            });
        }
        let diag = d.sqrt();
        l[j * dim + j] = diag;
        for i in (j + 1)..dim {
            let mut s = a[i * dim + j];
            for k in 0..j {
                s -= l[i * dim + k] * l[j * dim + k];
            }
            l[i * dim + j] = s / diag;
        }
    }
    Ok(CholeskyFactor { dim, entries: l })
}

/// Lower Cholesky factor of an SPD matrix.
///
/// Fails with [`Error::NotPositiveDefinite`] when a pivot drops to `1e-12`
/// or below, which cannot happen for a validated [`SpdMatrix`] but matters
/// when this routine is used to *perform* that validation.
pub fn chol_lower(x: &SpdMatrix) -> Result<CholeskyFactor> {
    chol_lower_raw(x.dim, &x.entries)
}

/// Quadratic Wasserstein distance between two empirical distributions.
///
/// For equal sample sizes this is the order-statistic form
/// `[Σ_l (x_(l) − y_(l))²]^(1/2)` (no `1/m` normalization), accumulated left
/// to right so results are bit-reproducible. For unequal sizes the exact
/// integral of the squared quantile-function difference is computed on the
/// merged grid of breakpoints and rescaled by the square root of the
/// geometric mean of the two sizes, which reduces to the order-statistic
/// form when the sizes agree.
pub fn wasserstein_empirical(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let xs = a.samples();
    let ys = b.samples();
    let (ma, mb) = (xs.len(), ys.len());
    if ma == mb {
        let mut sum = 0.0;
        for l in 0..ma {
            let d = xs[l] - ys[l];
            sum += d * d;
        }
        return sum.sqrt();
    }
    // Unequal sizes: piecewise-constant quantile functions. Breakpoints are
    // compared by integer cross-multiplication so grid alignment is exact.
    let mut integral = 0.0f64;
    let mut prev = 0.0f64;
    let (mut ia, mut ib) = (0usize, 0usize);
    while ia < ma && ib < mb {
        let ta = (ia + 1) * mb;
        let tb = (ib + 1) * ma;
        let next = if ta <= tb {
            (ia + 1) as f64 / ma as f64
        } else {
            (ib + 1) as f64 / mb as f64
        };
        let d = xs[ia] - ys[ib];
        integral += (next - prev) * d * d;
        if ta <= tb {
            ia += 1;
        }
        if tb <= ta {
            ib += 1;
        }
        prev = next;
    }
    (integral * (ma as f64 * mb as f64).sqrt()).sqrt()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        sum += d * d;
    }
    sum.sqrt()
}

/// Euclidean (Frobenius) metric `‖A − B‖_F`.
pub fn dist_frobenius(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimMismatch {
            left: a.dim,
            right: b.dim,
        });
    }
    Ok(euclid(&a.entries, &b.entries))
}

/// Flattens the part of an SPD matrix that the given metric compares
/// euclideanly: all entries (Frobenius), the lower Cholesky triangle
/// (Cholesky), or the strict lower triangle plus log-diagonal of the factor
/// (Log-Cholesky).
pub(crate) fn spd_embedding(x: &SpdMatrix, metric: MetricKind) -> Result<Vec<f64>> {
    match metric {
        MetricKind::Frobenius => Ok(x.entries.clone()),
        MetricKind::Cholesky => {
            let l = chol_lower(x)?;
            let mut v = Vec::with_capacity(x.dim * (x.dim + 1) / 2);
            for i in 0..x.dim {
                for j in 0..=i {
                    v.push(l.get(i, j));
                }
            }
            Ok(v)
        }
        MetricKind::LogCholesky => {
            let l = chol_lower(x)?;
            let mut v = Vec::with_capacity(x.dim * (x.dim + 1) / 2);
            for i in 0..x.dim {
                for j in 0..i {
                    v.push(l.get(i, j));
                }
            }
            for i in 0..x.dim {
                v.push(l.get(i, i).ln());
            }
            Ok(v)
        }
        other => Err(Error::KindMismatch {
            metric: other.name(),
            kind: "spd",
        }),
    }
}

/// Cholesky metric `‖chol(A) − chol(B)‖_F`.
pub fn dist_cholesky(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimMismatch {
            left: a.dim,
            right: b.dim,
        });
    }
    Ok(euclid(
        &spd_embedding(a, MetricKind::Cholesky)?,
        &spd_embedding(b, MetricKind::Cholesky)?,
    ))
}

/// Log-Cholesky metric: strict lower parts compared euclideanly, diagonals
/// compared on the log scale.
pub fn dist_log_cholesky(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimMismatch {
            left: a.dim,
            right: b.dim,
        });
    }
    Ok(euclid(
        &spd_embedding(a, MetricKind::LogCholesky)?,
        &spd_embedding(b, MetricKind::LogCholesky)?,
    ))
}

/// Distance between two borrowed objects of matching kind under `metric`.
pub fn object_distance(metric: MetricKind, a: ObjectRef<'_>, b: ObjectRef<'_>) -> Result<f64> {
    match (metric, a, b) {
        (MetricKind::Wasserstein, ObjectRef::Distribution(x), ObjectRef::Distribution(y)) => {
            Ok(wasserstein_empirical(x, y))
        }
        (MetricKind::Frobenius, ObjectRef::Spd(x), ObjectRef::Spd(y)) => dist_frobenius(x, y),
        (MetricKind::Cholesky, ObjectRef::Spd(x), ObjectRef::Spd(y)) => dist_cholesky(x, y),
        (MetricKind::LogCholesky, ObjectRef::Spd(x), ObjectRef::Spd(y)) => dist_log_cholesky(x, y),
        (m, x, _) => Err(Error::KindMismatch {
            metric: m.name(),
            kind: x.kind_name(),
        }),
    }
}

/// A validated `n × n` distance matrix: symmetric within `1e-9`, exactly zero
/// diagonal, nonnegative finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>, // row-major
}

impl DistanceMatrix {
    pub fn from_raw(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimMismatch {
                left: entries.len(),
                right: n * n,
            });
        }
        for i in 0..n {
            let d = entries[i * n + i];
            if d != 0.0 {
                return Err(Error::InvalidDistanceMatrix {
                    row: i,
                    col: i,
                    reason: format!("nonzero diagonal entry {d}"),
                });
            }
            for j in 0..n {
                let x = entries[i * n + j];
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::InvalidDistanceMatrix {
                        row: i,
                        col: j,
                        reason: format!("negative or non-finite entry {x}"),
                    });
                }
                if j > i {
                    let y = entries[j * n + i];
                    if (x - y).abs() > DIST_SYMMETRY_TOL {
                        return Err(Error::InvalidDistanceMatrix {
                            row: i,
                            col: j,
                            reason: format!("asymmetry {:.3e}", (x - y).abs()),
                        });
                    }
                }
            }
        }
        Ok(Self { n, entries })
    }

    /// Builds an exactly symmetric matrix from a pairwise distance function
    /// evaluated once per unordered pair.
    pub fn from_pairwise<F>(n: usize, mut dist: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Result<f64>,
    {
        let mut entries = vec![0.0f64; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = dist(i, j)?;
                entries[i * n + j] = d;
                entries[j * n + i] = d;
            }
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Restriction to the given rows/columns (used when splitting datasets
    /// holding precomputed columns).
    pub fn principal_submatrix(&self, idx: &[usize]) -> DistanceMatrix {
        let k = idx.len();
        let mut entries = Vec::with_capacity(k * k);
        for &i in idx {
            for &j in idx {
                entries.push(self.get(i, j));
            }
        }
        DistanceMatrix { n: k, entries }
    }
}

/// Pairwise distance matrix of a feature column under its own metric.
///
/// Precomputed columns are returned as stored (they were validated at
/// construction); object columns are evaluated once per unordered pair and
/// mirrored, so the result is exactly symmetric with a zero diagonal.
pub fn pairwise_distances(col: &FeatureColumn) -> Result<DistanceMatrix> {
    let n = col.len();
    match (col.metric(), col.objects()) {
        (MetricKind::Wasserstein, ObjectColumn::Distributions(objs)) => {
            DistanceMatrix::from_pairwise(n, |i, j| Ok(wasserstein_empirical(&objs[i], &objs[j])))
        }
        (metric, ObjectColumn::SpdMatrices(objs))
            if matches!(
                metric,
                MetricKind::Frobenius | MetricKind::Cholesky | MetricKind::LogCholesky
            ) =>
        {
            let embeddings = objs
                .iter()
                .map(|x| spd_embedding(x, metric))
                .collect::<Result<Vec<_>>>()?;
            DistanceMatrix::from_pairwise(n, |i, j| Ok(euclid(&embeddings[i], &embeddings[j])))
        }
        (MetricKind::Precomputed, ObjectColumn::Precomputed(d)) => Ok(d.clone()),
        (metric, objects) => Err(Error::KindMismatch {
            metric: metric.name(),
            kind: objects.kind_name(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(samples: &[f64]) -> EmpiricalDistribution {
        EmpiricalDistribution::new(samples.to_vec()).unwrap()
    }

    #[test]
    fn wasserstein_identical_is_zero() {
        let a = dist(&[1.0, 2.0, 3.0]);
        assert_eq!(wasserstein_empirical(&a, &a), 0.0);
    }

    #[test]
    fn wasserstein_equal_m_order_statistic_form() {
        let a = dist(&[0.0, 1.0]);
        let b = dist(&[1.0, 2.0]);
        assert_eq!(wasserstein_empirical(&a, &b), 2.0f64.sqrt());
    }

    /// Independent oracle for the unequal-size case: midpoint-rule
    /// integration of the squared quantile difference on a 10^6-point grid.
    fn quantile_integral_oracle(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
        let steps = 1_000_000usize;
        let qa = |s: f64| a.samples()[((s * a.len() as f64).ceil() as usize - 1).min(a.len() - 1)];
        let qb = |s: f64| b.samples()[((s * b.len() as f64).ceil() as usize - 1).min(b.len() - 1)];
        let mut sum = 0.0;
        for k in 0..steps {
            let s = (k as f64 + 0.5) / steps as f64;
            let d = qa(s) - qb(s);
            sum += d * d;
        }
        sum / steps as f64
    }

    #[test]
    fn wasserstein_unequal_m_matches_quantile_oracle() {
        let a = dist(&[0.0, 1.0]);
        let b = dist(&[0.0, 0.5, 1.0, 1.5]);
        let integral = quantile_integral_oracle(&a, &b);
        let expected = (integral * (2.0f64 * 4.0).sqrt()).sqrt();
        let got = wasserstein_empirical(&a, &b);
        assert!((got - expected).abs() < 1e-6, "got {got}, oracle {expected}");
        // Frozen value: integral = 1/8, scale = sqrt(8), distance = 2^(-3/4).
        assert!((got - 2.0f64.powf(-0.75)).abs() < 1e-12);
        assert_eq!(got, wasserstein_empirical(&b, &a));
    }

    #[test]
    fn chol_identity_and_diagonal() {
        let l = chol_lower(&SpdMatrix::identity(3)).unwrap();
        assert_eq!(l.entries(), SpdMatrix::identity(3).entries());
        let l = chol_lower(&SpdMatrix::diagonal(&[4.0, 9.0]).unwrap()).unwrap();
        assert_eq!(l.get(0, 0), 2.0);
        assert_eq!(l.get(1, 1), 3.0);
        assert_eq!(l.get(1, 0), 0.0);
    }

    #[test]
    fn chol_two_by_two_hand_solution() {
        // L L^T = [[2,1],[1,2]] expands to l00^2 = 2, l10 l00 = 1,
        // l10^2 + l11^2 = 2.
        let a = SpdMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let l = chol_lower(&a).unwrap();
        assert!((l.get(0, 0) - 2.0f64.sqrt()).abs() < 1e-15);
        assert!((l.get(1, 0) - 1.0 / 2.0f64.sqrt()).abs() < 1e-15);
        assert!((l.get(1, 1) - 1.5f64.sqrt()).abs() < 1e-15);
        // Reconstruction within 1e-9 Frobenius.
        let mut err = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for k in 0..2 {
                    s += l.get(i, k) * l.get(j, k);
                }
                err += (s - a.get(i, j)).powi(2);
            }
        }
        assert!(err.sqrt() < 1e-9);
    }

    #[test]
    fn chol_rejects_indefinite() {
        let r = SpdMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(r, Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn frobenius_examples() {
        let i2 = SpdMatrix::identity(2);
        assert_eq!(dist_frobenius(&i2, &i2).unwrap(), 0.0);
        let two = SpdMatrix::diagonal(&[2.0, 2.0]).unwrap();
        assert_eq!(dist_frobenius(&i2, &two).unwrap(), 2.0f64.sqrt());
    }

    #[test]
    fn frobenius_matches_elementwise_loop() {
        let a = SpdMatrix::from_rows(&[
            vec![2.0, 0.3, 0.1],
            vec![0.3, 1.5, -0.2],
            vec![0.1, -0.2, 1.0],
        ])
        .unwrap();
        let b = SpdMatrix::from_rows(&[
            vec![1.0, 0.1, 0.0],
            vec![0.1, 2.5, 0.4],
            vec![0.0, 0.4, 3.0],
        ])
        .unwrap();
        let mut sum = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                sum += (a.get(i, j) - b.get(i, j)).powi(2);
            }
        }
        assert!((dist_frobenius(&a, &b).unwrap() - sum.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cholesky_metric_examples() {
        let a = SpdMatrix::diagonal(&[4.0, 1.0]).unwrap();
        let b = SpdMatrix::identity(2);
        assert_eq!(dist_cholesky(&a, &a).unwrap(), 0.0);
        assert_eq!(dist_cholesky(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn cholesky_metric_matches_composition() {
        let a = SpdMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let b = SpdMatrix::from_rows(&[vec![3.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let la = chol_lower(&a).unwrap();
        let lb = chol_lower(&b).unwrap();
        let mut sum = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                sum += (la.get(i, j) - lb.get(i, j)).powi(2);
            }
        }
        assert!((dist_cholesky(&a, &b).unwrap() - sum.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn log_cholesky_examples() {
        let a = SpdMatrix::diagonal(&[4.0, 1.0]).unwrap();
        let b = SpdMatrix::identity(2);
        assert_eq!(dist_log_cholesky(&a, &a).unwrap(), 0.0);
        assert!((dist_log_cholesky(&a, &b).unwrap() - 2.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn log_cholesky_matches_independent_formula() {
        let a = SpdMatrix::from_rows(&[
            vec![2.0, 0.3, 0.1],
            vec![0.3, 1.5, -0.2],
            vec![0.1, -0.2, 1.0],
        ])
        .unwrap();
        let b = SpdMatrix::from_rows(&[
            vec![1.0, 0.1, 0.0],
            vec![0.1, 2.5, 0.4],
            vec![0.0, 0.4, 3.0],
        ])
        .unwrap();
        let la = chol_lower(&a).unwrap();
        let lb = chol_lower(&b).unwrap();
        let mut sum = 0.0;
        for i in 0..3 {
            for j in 0..i {
                sum += (la.get(i, j) - lb.get(i, j)).powi(2);
            }
            sum += (la.get(i, i).ln() - lb.get(i, i).ln()).powi(2);
        }
        assert!((dist_log_cholesky(&a, &b).unwrap() - sum.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn log_cholesky_equals_cholesky_for_unit_diagonal_factors() {
        // L with unit diagonal: log-diagonal terms vanish on both sides.
        let build = |low: f64| {
            let l = [[1.0, 0.0], [low, 1.0]];
            let mut e = vec![0.0; 4];
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        e[i * 2 + j] += l[i][k] * l[j][k];
                    }
                }
            }
            SpdMatrix::new(2, e).unwrap()
        };
        let a = build(0.7);
        let b = build(-0.4);
        let dc = dist_cholesky(&a, &b).unwrap();
        let dlc = dist_log_cholesky(&a, &b).unwrap();
        assert!((dc - dlc).abs() < 1e-12);
    }

    #[test]
    fn pairwise_point_masses_reduce_to_absolute_difference() {
        let col = FeatureColumn::distributions(vec![
            dist(&[0.0]),
            dist(&[1.0]),
            dist(&[3.0]),
        ])
        .unwrap();
        let d = pairwise_distances(&col).unwrap();
        assert_eq!(d.get(0, 2), 3.0);
        assert_eq!(d.get(0, 1), 1.0);
        assert_eq!(d.get(1, 2), 2.0);
    }

    #[test]
    fn pairwise_identical_objects_give_zero_matrix() {
        let col = FeatureColumn::distributions(vec![dist(&[1.0, 2.0]); 3]).unwrap();
        let d = pairwise_distances(&col).unwrap();
        assert!(d.entries().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn precomputed_asymmetry_is_rejected() {
        let r = DistanceMatrix::from_raw(2, vec![0.0, 1.0, 2.0, 0.0]);
        assert!(matches!(r, Err(Error::InvalidDistanceMatrix { .. })));
    }

    #[test]
    fn dim_mismatch_is_reported() {
        let a = SpdMatrix::identity(2);
        let b = SpdMatrix::identity(3);
        assert!(matches!(
            dist_frobenius(&a, &b),
            Err(Error::DimMismatch { left: 2, right: 3 })
        ));
    }
}
