//! Feature columns and labeled datasets.
//!
//! A [`FeatureColumn`] is one feature observed on all `n` samples: either `n`
//! metric objects of a single kind, or a precomputed `n × n` distance matrix.
//! A [`LabeledDataset`] bundles `p` such columns with one shared `±1` label
//! vector.

use crate::error::{Error, Result};
use crate::metrics::{DistanceMatrix, EmpiricalDistribution, MetricKind, SpdMatrix};
use serde::{Deserialize, Serialize};

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "+1")]
    Pos,
    #[serde(rename = "-1")]
    Neg,
}

impl Label {
    pub fn sign(self) -> i8 {
        match self {
            Label::Pos => 1,
            Label::Neg => -1,
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }

    pub fn from_signed(v: i64) -> Result<Label> {
        match v {
            1 => Ok(Label::Pos),
            -1 => Ok(Label::Neg),
            other => Err(Error::BadParam {
                name: "label",
                reason: format!("expected +1 or -1, got {other}"),
            }),
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Label::Pos => "+1",
            Label::Neg => "-1",
        })
    }
}

/// `(n_pos, n_neg)` counts of a label vector.
pub fn class_counts(labels: &[Label]) -> (usize, usize) {
    let pos = labels.iter().filter(|l| **l == Label::Pos).count();
    (pos, labels.len() - pos)
}

/// An owned metric object, used to hand test rows to the k-NN classifier.
#[derive(Debug, Clone)]
pub enum MetricObject {
    Distribution(EmpiricalDistribution),
    Spd(SpdMatrix),
}

impl MetricObject {
    pub fn as_ref(&self) -> ObjectRef<'_> {
        match self {
            MetricObject::Distribution(d) => ObjectRef::Distribution(d),
            MetricObject::Spd(m) => ObjectRef::Spd(m),
        }
    }
}

/// A borrowed metric object.
#[derive(Debug, Clone, Copy)]
pub enum ObjectRef<'a> {
    Distribution(&'a EmpiricalDistribution),
    Spd(&'a SpdMatrix),
}

impl ObjectRef<'_> {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ObjectRef::Distribution(_) => "distribution",
            ObjectRef::Spd(_) => "spd",
        }
    }
}

/// The payload of a feature column.
#[derive(Debug, Clone)]
pub enum ObjectColumn {
    Distributions(Vec<EmpiricalDistribution>),
    SpdMatrices(Vec<SpdMatrix>),
    Precomputed(DistanceMatrix),
}

impl ObjectColumn {
    pub fn len(&self) -> usize {
        match self {
            ObjectColumn::Distributions(v) => v.len(),
            ObjectColumn::SpdMatrices(v) => v.len(),
            ObjectColumn::Precomputed(d) => d.n(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ObjectColumn::Distributions(_) => "distribution",
            ObjectColumn::SpdMatrices(_) => "spd",
            ObjectColumn::Precomputed(_) => "precomputed",
        }
    }
}

/// One feature: `n` objects of a single kind (or a precomputed distance
/// matrix) plus the metric they are compared with.
#[derive(Debug, Clone)]
pub struct FeatureColumn {
    metric: MetricKind,
    objects: ObjectColumn,
}

impl FeatureColumn {
    /// Column of empirical distributions under the Wasserstein metric.
    pub fn distributions(objects: Vec<EmpiricalDistribution>) -> Result<Self> {
        if objects.is_empty() {
            return Err(Error::BadParam {
                name: "objects",
                reason: "feature column must hold at least one object".into(),
            });
        }
        Ok(Self {
            metric: MetricKind::Wasserstein,
            objects: ObjectColumn::Distributions(objects),
        })
    }

    /// Column of SPD matrices under one of the SPD metrics. All objects must
    /// share a dimension.
    pub fn spd(objects: Vec<SpdMatrix>, metric: MetricKind) -> Result<Self> {
        if objects.is_empty() {
            return Err(Error::BadParam {
                name: "objects",
                reason: "feature column must hold at least one object".into(),
            });
        }
        if !matches!(
            metric,
            MetricKind::Frobenius | MetricKind::Cholesky | MetricKind::LogCholesky
        ) {
            return Err(Error::KindMismatch {
                metric: metric.name(),
                kind: "spd",
            });
        }
        let dim = objects[0].dim();
        if let Some(bad) = objects.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimMismatch {
                left: bad.dim(),
                right: dim,
            });
        }
        Ok(Self {
            metric,
            objects: ObjectColumn::SpdMatrices(objects),
        })
    }

    /// Column backed by an externally computed distance matrix.
    pub fn precomputed(distances: DistanceMatrix) -> Self {
        Self {
            metric: MetricKind::Precomputed,
            objects: ObjectColumn::Precomputed(distances),
        }
    }

    /// Number of samples in the column.
    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn objects(&self) -> &ObjectColumn {
        &self.objects
    }

    pub fn kind_name(&self) -> &'static str {
        self.objects.kind_name()
    }

    /// Borrow the `i`th object, if the column stores objects (not a
    /// precomputed matrix).
    pub fn object(&self, i: usize) -> Option<ObjectRef<'_>> {
        match &self.objects {
            ObjectColumn::Distributions(v) => v.get(i).map(ObjectRef::Distribution),
            ObjectColumn::SpdMatrices(v) => v.get(i).map(ObjectRef::Spd),
            ObjectColumn::Precomputed(_) => None,
        }
    }

    /// Restriction of the column to the given rows. Precomputed columns keep
    /// the corresponding principal submatrix.
    pub fn subset(&self, rows: &[usize]) -> FeatureColumn {
        let objects = match &self.objects {
            ObjectColumn::Distributions(v) => {
                ObjectColumn::Distributions(rows.iter().map(|&i| v[i].clone()).collect())
            }
            ObjectColumn::SpdMatrices(v) => {
                ObjectColumn::SpdMatrices(rows.iter().map(|&i| v[i].clone()).collect())
            }
            ObjectColumn::Precomputed(d) => ObjectColumn::Precomputed(d.principal_submatrix(rows)),
        };
        FeatureColumn {
            metric: self.metric,
            objects,
        }
    }
}

/// `p` feature columns sharing one `±1` label vector of length `n`.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    columns: Vec<FeatureColumn>,
    labels: Vec<Label>,
    n_pos: usize,
    n_neg: usize,
}

impl LabeledDataset {
    /// Validates that every column has `labels.len()` rows and that both
    /// classes are present.
    pub fn new(columns: Vec<FeatureColumn>, labels: Vec<Label>) -> Result<Self> {
        let n = labels.len();
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::Validation {
                    column: j,
                    reason: format!("column has {} rows, labels have {}", col.len(), n),
                });
            }
        }
        let (n_pos, n_neg) = class_counts(&labels);
        if n_pos == 0 || n_neg == 0 {
            return Err(Error::SingleClass);
        }
        Ok(Self {
            columns,
            labels,
            n_pos,
            n_neg,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &FeatureColumn {
        &self.columns[j]
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n_neg(&self) -> usize {
        self.n_neg
    }

    /// Row restriction. `rows` must hold distinct valid indices and the
    /// restriction must still contain both classes.
    pub fn subset(&self, rows: &[usize]) -> Result<LabeledDataset> {
        if let Some(&bad) = rows.iter().find(|&&i| i >= self.n()) {
            return Err(Error::BadSet(format!(
                "row index {bad} out of range for n = {}",
                self.n()
            )));
        }
        let labels = rows.iter().map(|&i| self.labels[i]).collect();
        let columns = self.columns.iter().map(|c| c.subset(rows)).collect();
        LabeledDataset::new(columns, labels)
    }
}
