//! Empirical metric distribution functions.
//!
//! For a center `u` and candidate `v`, the metric distribution function is
//! the probability mass of the closed ball around `u` with radius `d(u, v)`.
//! Its empirical counterpart is the fraction of sample points inside that
//! ball; restricted to one class it becomes the class-conditional EMDF that
//! the screening statistic compares across classes.
//!
//! A [`DistanceProfile`] caches everything the EMDF needs for one fixed
//! center: the distances from the center to every sample (the center itself
//! included, at radius zero), the sample labels, and the ascending radius
//! order with ties broken by sample index.

use crate::dataset::{class_counts, Label};
use crate::error::{Error, Result};
use crate::metrics::DistanceMatrix;

/// Restrict EMDF counting to one class, or use the pooled sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassFilter {
    All,
    Class(Label),
}

/// Distances from one fixed center to every sample, with labels and a stable
/// ascending sort order.
#[derive(Debug, Clone)]
pub struct DistanceProfile {
    center_index: usize,
    radii: Vec<f64>,
    class_of: Vec<Label>,
    sort_order: Vec<usize>,
}

impl DistanceProfile {
    pub fn center_index(&self) -> usize {
        self.center_index
    }

    /// Distance from the center to every sample; `radii[center_index] == 0`.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn class_of(&self) -> &[Label] {
        &self.class_of
    }

    /// Permutation sorting `radii` ascending, ties by ascending sample index.
    pub fn sort_order(&self) -> &[usize] {
        &self.sort_order
    }
}

/// One profile per row of a validated distance matrix.
pub fn build_profiles(d: &DistanceMatrix, labels: &[Label]) -> Result<Vec<DistanceProfile>> {
    let n = d.n();
    if labels.len() != n {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: n,
        });
    }
    let (n_pos, n_neg) = class_counts(labels);
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((0..n)
        .map(|u| {
            let radii = d.row(u).to_vec();
            let mut sort_order: Vec<usize> = (0..n).collect();
            sort_order.sort_unstable_by(|&a, &b| {
                radii[a].total_cmp(&radii[b]).then(a.cmp(&b))
            });
            DistanceProfile {
                center_index: u,
                radii,
                class_of: labels.to_vec(),
                sort_order,
            }
        })
        .collect())
}

/// EMDF value at the given radius: the fraction of (class-filtered) samples
/// whose distance to the center is `<=` the radius.
///
/// The closed-ball convention means the center always counts toward its own
/// ball, so the value at radius zero is at least `1 / class count` whenever
/// the center belongs to the filtered class.
pub fn emdf_value(profile: &DistanceProfile, filter: ClassFilter, radius: f64) -> Result<f64> {
    let matches = |i: usize| match filter {
        ClassFilter::All => true,
        ClassFilter::Class(c) => profile.class_of[i] == c,
    };
    let total = (0..profile.radii.len()).filter(|&i| matches(i)).count();
    if total == 0 {
        return Err(Error::EmptyClass);
    }
    let inside = (0..profile.radii.len())
        .filter(|&i| matches(i) && profile.radii[i] <= radius)
        .count();
    Ok(inside as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_matrix(points: &[f64]) -> DistanceMatrix {
        DistanceMatrix::from_pairwise(points.len(), |i, j| Ok((points[i] - points[j]).abs()))
            .unwrap()
    }

    fn labels(pattern: &[i8]) -> Vec<Label> {
        pattern
            .iter()
            .map(|&s| if s > 0 { Label::Pos } else { Label::Neg })
            .collect()
    }

    #[test]
    fn line_example_counts_closed_ball() {
        let d = line_matrix(&[0.0, 1.0, 3.0]);
        let profiles = build_profiles(&d, &labels(&[1, -1, 1])).unwrap();
        // Center 0, radius 1: ball contains {0, 1}.
        let v = emdf_value(&profiles[0], ClassFilter::All, 1.0).unwrap();
        assert_eq!(v, 2.0 / 3.0);
    }

    #[test]
    fn reaches_one_at_max_radius() {
        let d = line_matrix(&[0.0, 1.0, 3.0, 7.5]);
        let profiles = build_profiles(&d, &labels(&[1, -1, 1, -1])).unwrap();
        for p in &profiles {
            let max = p.radii().iter().cloned().fold(0.0, f64::max);
            assert_eq!(emdf_value(p, ClassFilter::All, max).unwrap(), 1.0);
        }
    }

    #[test]
    fn center_counts_toward_its_own_ball() {
        let d = line_matrix(&[0.0, 1.0, 3.0]);
        let profiles = build_profiles(&d, &labels(&[1, -1, 1])).unwrap();
        let v = emdf_value(&profiles[0], ClassFilter::Class(Label::Pos), 0.0).unwrap();
        assert!(v >= 1.0 / 2.0);
    }

    #[test]
    fn zero_matrix_profiles() {
        let d = DistanceMatrix::from_raw(2, vec![0.0; 4]).unwrap();
        let profiles = build_profiles(&d, &labels(&[1, -1])).unwrap();
        assert_eq!(profiles[0].radii(), &[0.0, 0.0]);
        assert_eq!(profiles[1].radii(), &[0.0, 0.0]);
    }

    #[test]
    fn profile_at_center_one_is_sorted() {
        let d = line_matrix(&[0.0, 1.0, 3.0]);
        let profiles = build_profiles(&d, &labels(&[1, -1, 1])).unwrap();
        let p = &profiles[1];
        let sorted: Vec<f64> = p.sort_order().iter().map(|&i| p.radii()[i]).collect();
        assert_eq!(sorted, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn monotone_in_radius() {
        let d = line_matrix(&[0.2, 0.9, 0.9, 1.4, 5.0]);
        let profiles = build_profiles(&d, &labels(&[1, -1, 1, -1, 1])).unwrap();
        for p in &profiles {
            for filter in [
                ClassFilter::All,
                ClassFilter::Class(Label::Pos),
                ClassFilter::Class(Label::Neg),
            ] {
                let mut prev = -1.0;
                for k in 0..20 {
                    let r = 0.3 * k as f64;
                    let v = emdf_value(p, filter, r).unwrap();
                    assert!(v >= prev);
                    assert!((0.0..=1.0).contains(&v));
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn empty_class_is_an_error() {
        let d = line_matrix(&[0.0, 1.0]);
        let profiles = build_profiles(&d, &labels(&[1, -1])).unwrap();
        // Profiles can be interrogated with a synthetic filter only through
        // the public API; both classes exist here, so exercise the error via
        // a profile built by hand.
        let single = DistanceProfile {
            center_index: 0,
            radii: vec![0.0, 1.0],
            class_of: vec![Label::Pos, Label::Pos],
            sort_order: vec![0, 1],
        };
        assert!(matches!(
            emdf_value(&single, ClassFilter::Class(Label::Neg), 1.0),
            Err(Error::EmptyClass)
        ));
        // And the built profiles do not error.
        assert!(emdf_value(&profiles[0], ClassFilter::Class(Label::Neg), 1.0).is_ok());
    }

    #[test]
    fn single_class_labels_rejected() {
        let d = line_matrix(&[0.0, 1.0]);
        assert!(matches!(
            build_profiles(&d, &labels(&[1, 1])),
            Err(Error::SingleClass)
        ));
    }
}
