//! Dataset files and the submatrix feature-pool builder.
//!
//! ## On-disk layout
//!
//! A dataset is a JSON manifest plus one CSV file per feature column and one
//! for the labels. Every CSV starts with a versioned header line:
//!
//! ```text
//! #mkfilter-csv v1 kind=<labels|distribution|spd|precomputed>[ m=<dim>]
//! ```
//!
//! * `labels` — one `+1` or `-1` per line;
//! * `distribution` — `n × m` values, one row per object (its samples);
//! * `spd` — `n × m·m` values, one row per object, matrix entries row-major,
//!   with the dimension declared as `m=` in the header;
//! * `precomputed` — an `n × n` distance matrix.
//!
//! Values use `.` as the decimal separator and are written with 17
//! significant digits, so they round-trip exactly. Parsing is strict: any
//! malformed cell aborts with its file, line, and column.
//!
//! ## Submatrix pools
//!
//! [`build_submatrix_pool`] turns `n` whole covariance matrices over `R`
//! regions into `C(R, q)` SPD feature columns, one per `q`-subset of regions
//! in lexicographic order, by extracting the corresponding principal
//! submatrix from every subject.

use crate::dataset::{FeatureColumn, Label, LabeledDataset, ObjectColumn};
use crate::error::{Error, Result};
use crate::metrics::{DistanceMatrix, EmpiricalDistribution, MetricKind, SpdMatrix};
use itertools::Itertools;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Manifest format version understood by this crate.
pub const MANIFEST_VERSION: &str = "mkfilter.dataset.v1";
const CSV_MAGIC: &str = "#mkfilter-csv v1";

/// Kind of objects stored in a column file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Distribution,
    Spd,
    Precomputed,
}

impl ObjectKind {
    fn name(self) -> &'static str {
        match self {
            ObjectKind::Distribution => "distribution",
            ObjectKind::Spd => "spd",
            ObjectKind::Precomputed => "precomputed",
        }
    }
}

/// One column entry of a dataset manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub kind: ObjectKind,
    pub metric: MetricKind,
    /// Path relative to the manifest file.
    pub path: String,
}

/// JSON manifest tying the label file and per-column files together.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: String,
    pub n: usize,
    pub p: usize,
    /// Label file path, relative to the manifest.
    pub labels: String,
    pub columns: Vec<ColumnSpec>,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        file: path.display().to_string(),
        line,
        reason: reason.into(),
    }
}

/// Header attributes: the declared kind and optional `m=` dimension.
fn parse_csv_header(path: &Path, first_line: &str) -> Result<(ObjectKind, Option<usize>)> {
    let rest = first_line.strip_prefix(CSV_MAGIC).ok_or_else(|| {
        parse_err(
            path,
            1,
            format!("expected header starting with '{CSV_MAGIC}'"),
        )
    })?;
    let mut kind = None;
    let mut m = None;
    for token in rest.split_whitespace() {
        if let Some(v) = token.strip_prefix("kind=") {
            kind = Some(match v {
                "labels" => None,
                "distribution" => Some(ObjectKind::Distribution),
                "spd" => Some(ObjectKind::Spd),
                "precomputed" => Some(ObjectKind::Precomputed),
                other => return Err(parse_err(path, 1, format!("unknown kind '{other}'"))),
            });
        } else if let Some(v) = token.strip_prefix("m=") {
            m = Some(v.parse::<usize>().map_err(|e| {
                parse_err(path, 1, format!("bad m attribute '{v}': {e}"))
            })?);
        } else {
            return Err(parse_err(path, 1, format!("unknown header token '{token}'")));
        }
    }
    match kind {
        Some(Some(k)) => Ok((k, m)),
        // "labels" is encoded as kind=labels but has no ObjectKind; callers
        // reading labels use read_labels_file which handles it directly.
        Some(None) => Err(parse_err(path, 1, "label file where a column was expected")),
        None => Err(parse_err(path, 1, "header is missing the kind attribute")),
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(text.lines().map(str::to_owned).collect())
}

fn parse_row(path: &Path, line_no: usize, line: &str) -> Result<Vec<f64>> {
    line.split(',')
        .enumerate()
        .map(|(c, cell)| {
            cell.trim().parse::<f64>().map_err(|e| {
                parse_err(path, line_no, format!("column {}: '{cell}': {e}", c + 1))
            })
        })
        .collect()
}

/// Read a `kind=labels` file.
pub fn read_labels_file(path: &Path) -> Result<Vec<Label>> {
    let lines = read_lines(path)?;
    let first = lines
        .first()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    if !first.starts_with(CSV_MAGIC) || !first.contains("kind=labels") {
        return Err(parse_err(path, 1, "expected a kind=labels header"));
    }
    lines[1..]
        .iter()
        .enumerate()
        .map(|(i, line)| {
            let v: i64 = line.trim().parse().map_err(|e| {
                parse_err(path, i + 2, format!("'{line}': {e}"))
            })?;
            Label::from_signed(v).map_err(|e| parse_err(path, i + 2, e.to_string()))
        })
        .collect()
}

/// Read a `kind=distribution` column: one row of samples per object.
pub fn read_distribution_column(path: &Path) -> Result<Vec<EmpiricalDistribution>> {
    let lines = read_lines(path)?;
    let first = lines
        .first()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let (kind, _) = parse_csv_header(path, first)?;
    if kind != ObjectKind::Distribution {
        return Err(parse_err(path, 1, "expected kind=distribution"));
    }
    let mut width = None;
    lines[1..]
        .iter()
        .enumerate()
        .map(|(i, line)| {
            let row = parse_row(path, i + 2, line)?;
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(parse_err(
                        path,
                        i + 2,
                        format!("expected {w} values per row, found {}", row.len()),
                    ))
                }
                _ => {}
            }
            EmpiricalDistribution::new(row).map_err(|e| parse_err(path, i + 2, e.to_string()))
        })
        .collect()
}

/// Read a `kind=spd` column: one row-major `m × m` matrix per line.
pub fn read_spd_column(path: &Path) -> Result<Vec<SpdMatrix>> {
    let lines = read_lines(path)?;
    let first = lines
        .first()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let (kind, m) = parse_csv_header(path, first)?;
    if kind != ObjectKind::Spd {
        return Err(parse_err(path, 1, "expected kind=spd"));
    }
    let m = m.ok_or_else(|| parse_err(path, 1, "spd header must declare m=<dim>"))?;
    lines[1..]
        .iter()
        .enumerate()
        .map(|(i, line)| {
            let row = parse_row(path, i + 2, line)?;
            if row.len() != m * m {
                return Err(parse_err(
                    path,
                    i + 2,
                    format!("expected {} values for a {m}x{m} matrix, found {}", m * m, row.len()),
                ));
            }
            SpdMatrix::new(m, row).map_err(|e| parse_err(path, i + 2, e.to_string()))
        })
        .collect()
}

/// Read a `kind=precomputed` column: an `n × n` distance matrix.
pub fn read_precomputed_column(path: &Path) -> Result<DistanceMatrix> {
    let lines = read_lines(path)?;
    let first = lines
        .first()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let (kind, _) = parse_csv_header(path, first)?;
    if kind != ObjectKind::Precomputed {
        return Err(parse_err(path, 1, "expected kind=precomputed"));
    }
    let n = lines.len() - 1;
    let mut entries = Vec::with_capacity(n * n);
    for (i, line) in lines[1..].iter().enumerate() {
        let row = parse_row(path, i + 2, line)?;
        if row.len() != n {
            return Err(parse_err(
                path,
                i + 2,
                format!("expected {n} values per row, found {}", row.len()),
            ));
        }
        entries.extend(row);
    }
    DistanceMatrix::from_raw(n, entries)
}

/// 17-significant-digit float formatting; parses back to the same bits.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| io_err(path, e))
}

pub fn write_labels_file(path: &Path, labels: &[Label]) -> Result<()> {
    let mut out = String::from("#mkfilter-csv v1 kind=labels\n");
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    write_file(path, &out)
}

pub fn write_distribution_column(path: &Path, objects: &[EmpiricalDistribution]) -> Result<()> {
    if let Some(first) = objects.first() {
        if objects.iter().any(|o| o.len() != first.len()) {
            return Err(Error::BadConfig(
                "distribution column files are rectangular; objects have differing sample counts"
                    .into(),
            ));
        }
    }
    let mut out = String::from("#mkfilter-csv v1 kind=distribution\n");
    for o in objects {
        out.push_str(&o.samples().iter().map(|&x| fmt_f64(x)).join(","));
        out.push('\n');
    }
    write_file(path, &out)
}

pub fn write_spd_column(path: &Path, objects: &[SpdMatrix]) -> Result<()> {
    let m = objects.first().map(|o| o.dim()).unwrap_or(0);
    let mut out = format!("#mkfilter-csv v1 kind=spd m={m}\n");
    for o in objects {
        out.push_str(&o.entries().iter().map(|&x| fmt_f64(x)).join(","));
        out.push('\n');
    }
    write_file(path, &out)
}

pub fn write_precomputed_column(path: &Path, d: &DistanceMatrix) -> Result<()> {
    let mut out = String::from("#mkfilter-csv v1 kind=precomputed\n");
    for i in 0..d.n() {
        out.push_str(&d.row(i).iter().map(|&x| fmt_f64(x)).join(","));
        out.push('\n');
    }
    write_file(path, &out)
}

/// Load a dataset from its manifest. Validation is strict: row counts must
/// agree everywhere, and errors carry the offending column index and file
/// position.
pub fn load_dataset(manifest_path: &Path) -> Result<LabeledDataset> {
    let text = fs::read_to_string(manifest_path).map_err(|e| io_err(manifest_path, e))?;
    let manifest: DatasetManifest = serde_json::from_str(&text)
        .map_err(|e| parse_err(manifest_path, e.line(), e.to_string()))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(Error::BadConfig(format!(
            "unsupported manifest version '{}', expected '{MANIFEST_VERSION}'",
            manifest.version
        )));
    }
    if manifest.columns.len() != manifest.p {
        return Err(Error::BadConfig(format!(
            "manifest declares p = {} but lists {} columns",
            manifest.p,
            manifest.columns.len()
        )));
    }
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let labels = read_labels_file(&dir.join(&manifest.labels))?;
    if labels.len() != manifest.n {
        return Err(Error::BadConfig(format!(
            "manifest declares n = {} but the label file has {} rows",
            manifest.n,
            labels.len()
        )));
    }
    let mut columns = Vec::with_capacity(manifest.p);
    for (j, spec) in manifest.columns.iter().enumerate() {
        let path = dir.join(&spec.path);
        let column = load_column(spec, &path).map_err(|e| e.in_column(j))?;
        if column.len() != manifest.n {
            return Err(Error::Validation {
                column: j,
                reason: format!(
                    "file '{}' has {} rows, manifest declares n = {}",
                    spec.path,
                    column.len(),
                    manifest.n
                ),
            });
        }
        columns.push(column);
    }
    LabeledDataset::new(columns, labels)
}

fn load_column(spec: &ColumnSpec, path: &Path) -> Result<FeatureColumn> {
    match (spec.kind, spec.metric) {
        (ObjectKind::Distribution, MetricKind::Wasserstein) => {
            FeatureColumn::distributions(read_distribution_column(path)?)
        }
        (
            ObjectKind::Spd,
            m @ (MetricKind::Frobenius | MetricKind::Cholesky | MetricKind::LogCholesky),
        ) => FeatureColumn::spd(read_spd_column(path)?, m),
        (ObjectKind::Precomputed, MetricKind::Precomputed) => {
            Ok(FeatureColumn::precomputed(read_precomputed_column(path)?))
        }
        (kind, metric) => Err(Error::KindMismatch {
            metric: metric.name(),
            kind: kind.name(),
        }),
    }
}

/// Write a dataset (labels, one file per column, manifest) into `dir` and
/// return the manifest path. The manifest is written last, atomically, so a
/// failed save never leaves a loadable dataset behind.
pub fn save_dataset(ds: &LabeledDataset, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let labels_name = "labels.csv".to_string();
    write_labels_file(&dir.join(&labels_name), ds.labels())?;
    let mut columns = Vec::with_capacity(ds.p());
    for (j, col) in ds.columns().iter().enumerate() {
        let name = format!("col_{j:05}.csv");
        let path = dir.join(&name);
        let kind = match col.objects() {
            ObjectColumn::Distributions(objs) => {
                write_distribution_column(&path, objs).map_err(|e| e.in_column(j))?;
                ObjectKind::Distribution
            }
            ObjectColumn::SpdMatrices(objs) => {
                write_spd_column(&path, objs).map_err(|e| e.in_column(j))?;
                ObjectKind::Spd
            }
            ObjectColumn::Precomputed(d) => {
                write_precomputed_column(&path, d).map_err(|e| e.in_column(j))?;
                ObjectKind::Precomputed
            }
        };
        columns.push(ColumnSpec {
            kind,
            metric: col.metric(),
            path: name,
        });
    }
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION.to_string(),
        n: ds.n(),
        p: ds.p(),
        labels: labels_name,
        columns,
    };
    let manifest_path = dir.join("manifest.json");
    let tmp = dir.join("manifest.json.tmp");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&tmp, &json)?;
    fs::rename(&tmp, &manifest_path).map_err(|e| io_err(&manifest_path, e))?;
    Ok(manifest_path)
}

/// Exact binomial coefficient `C(n, k)` (small arguments).
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Mapping between feature indices and region subsets of a submatrix pool.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovariancePool {
    pub region_count: usize,
    pub q: usize,
    /// Lexicographically ordered `q`-subsets; entry `j` names the regions of
    /// feature column `j`.
    pub index_map: Vec<Vec<usize>>,
}

impl CovariancePool {
    /// Feature index of a region subset (which must be sorted ascending).
    pub fn feature_index(&self, regions: &[usize]) -> Option<usize> {
        self.index_map
            .binary_search_by(|probe| probe.as_slice().cmp(regions))
            .ok()
    }
}

/// Expand `n` whole covariance matrices over `R` regions into the pool of all
/// `C(R, q)` principal `q × q` submatrices, one feature column per subset.
///
/// Principal submatrices of SPD matrices are SPD, so a validation failure
/// here indicates corrupted input; the error names the subject and subset.
pub fn build_submatrix_pool(
    covs: &[SpdMatrix],
    labels: &[Label],
    q: usize,
    metric: MetricKind,
) -> Result<(LabeledDataset, CovariancePool)> {
    if covs.is_empty() {
        return Err(Error::BadParam {
            name: "covs",
            reason: "need at least one covariance matrix".into(),
        });
    }
    if covs.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: covs.len(),
            right: labels.len(),
        });
    }
    let r = covs[0].dim();
    if let Some(bad) = covs.iter().find(|c| c.dim() != r) {
        return Err(Error::DimMismatch {
            left: bad.dim(),
            right: r,
        });
    }
    if q < 2 || q > r {
        return Err(Error::BadParam {
            name: "q",
            reason: format!("q must lie in [2, {r}], got {q}"),
        });
    }
    let index_map: Vec<Vec<usize>> = (0..r).combinations(q).collect();
    debug_assert_eq!(index_map.len(), binomial(r, q));
    let mut columns = Vec::with_capacity(index_map.len());
    for (feature, subset) in index_map.iter().enumerate() {
        let mut objects = Vec::with_capacity(covs.len());
        for (subject, cov) in covs.iter().enumerate() {
            let sub = cov
                .principal_submatrix(subset)
                .map_err(|e| Error::Submatrix {
                    feature,
                    regions: subset.clone(),
                    subject,
                    source: Box::new(e),
                })?;
            objects.push(sub);
        }
        columns.push(FeatureColumn::spd(objects, metric).map_err(|e| e.in_column(feature))?);
    }
    let pool = CovariancePool {
        region_count: r,
        q,
        index_map,
    };
    Ok((LabeledDataset::new(columns, labels.to_vec())?, pool))
}

/// Sample covariance `(1/(T−1)) Σ (x_t − x̄)(x_t − x̄)ᵀ` of `T` observation
/// rows, validated SPD (rejected otherwise, e.g. when `T <= R`).
pub fn sample_covariance(rows: &[Vec<f64>]) -> Result<SpdMatrix> {
    let t = rows.len();
    if t < 2 {
        return Err(Error::BadParam {
            name: "rows",
            reason: format!("need at least two observations, got {t}"),
        });
    }
    let r = rows[0].len();
    if let Some(bad) = rows.iter().find(|row| row.len() != r) {
        return Err(Error::DimMismatch {
            left: bad.len(),
            right: r,
        });
    }
    let mut mean = vec![0.0f64; r];
    for row in rows {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= t as f64;
    }
    let mut cov = vec![0.0f64; r * r];
    for row in rows {
        for i in 0..r {
            let ci = row[i] - mean[i];
            for j in 0..r {
                cov[i * r + j] += ci * (row[j] - mean[j]);
            }
        }
    }
    for c in &mut cov {
        *c /= (t - 1) as f64;
    }
    SpdMatrix::new(r, cov)
}
