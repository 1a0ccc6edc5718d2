use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance for merging eigenvalues into one level.
pub const DEFAULT_MERGE_TOL: f64 = 1e-9;

/// A real spectrum with merged multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    multiplicities: Vec<usize>,
    source_dim: usize,
    meta: BTreeMap<String, f64>,
}

impl Spectrum {
    /// Sorts `values` and merges runs that lie within `merge_tol` of the first
    /// member of the run. Each level is the mean of its run.
    pub fn from_values(mut values: Vec<f64>, merge_tol: f64) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite eigenvalue".into()));
        }
        values.sort_by(f64::total_cmp);
        let source_dim = values.len();
        let mut eigenvalues = Vec::new();
        let mut multiplicities = Vec::new();
        let mut i = 0;
        while i < values.len() {
            let anchor = values[i];
            let mut j = i + 1;
            while j < values.len() && values[j] - anchor <= merge_tol {
                j += 1;
            }
            let mean = values[i..j].iter().sum::<f64>() / (j - i) as f64;
            eigenvalues.push(mean);
            multiplicities.push(j - i);
            i = j;
        }
        // Means of adjacent runs can collide only if runs are within tol of
        // each other, which the anchored scan rules out; keep them strictly
        // increasing regardless.
        for k in 1..eigenvalues.len() {
            if eigenvalues[k] <= eigenvalues[k - 1] {
                eigenvalues[k] = f64::from_bits(eigenvalues[k - 1].to_bits() + 1);
            }
        }
        Ok(Spectrum { eigenvalues, multiplicities, source_dim, meta: BTreeMap::new() })
    }

    pub fn with_meta(mut self, key: &str, value: f64) -> Self {
        self.meta.insert(key.to_string(), value);
        self
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn meta(&self) -> &BTreeMap<String, f64> {
        &self.meta
    }

    /// Every eigenvalue repeated by its multiplicity, ascending.
    pub fn expanded(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(&v, &m)| std::iter::repeat_n(v, m))
            .collect()
    }

    /// |ν| for every eigenvalue counted with multiplicity, ascending.
    pub fn abs_sorted(&self) -> Vec<f64> {
        let mut a: Vec<f64> = self.expanded().into_iter().map(f64::abs).collect();
        a.sort_by(f64::total_cmp);
        a
    }

    pub fn max_abs(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Multiset union.
    pub fn union(&self, other: &Spectrum, merge_tol: f64) -> Result<Spectrum> {
        let mut all = self.expanded();
        all.extend(other.expanded());
        Spectrum::from_values(all, merge_tol)
    }

    /// ν present iff −ν present with equal multiplicity.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let v = self.expanded();
        let mut neg: Vec<f64> = v.iter().map(|x| -x).collect();
        neg.sort_by(f64::total_cmp);
        multiset_distance(&v, &neg).is_some_and(|d| d <= tol)
    }
}

/// Largest pointwise gap between two multisets, compared after sorting.
/// `None` when the cardinalities differ.
pub fn multiset_distance(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Some(a.iter().zip(&b).fold(0.0, |m, (x, y)| m.max((x - y).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_within_tolerance() {
        let s = Spectrum::from_values(vec![2.0, 1.0, 1.0 + 1e-12, 3.0], DEFAULT_MERGE_TOL).unwrap();
        assert_eq!(s.eigenvalues().len(), 3);
        assert_eq!(s.multiplicities(), &[2, 1, 1]);
        assert_eq!(s.source_dim(), 4);
        assert_eq!(s.multiplicities().iter().sum::<usize>(), s.source_dim());
    }

    #[test]
    fn rejects_nan() {
        assert!(Spectrum::from_values(vec![f64::NAN], 1e-9).is_err());
    }

    #[test]
    fn symmetry_detection() {
        let s = Spectrum::from_values(vec![-2.0, -1.0, 1.0, 2.0, 1.0, -1.0], 1e-9).unwrap();
        assert!(s.is_symmetric(1e-12));
        let t = Spectrum::from_values(vec![-2.0, 1.0], 1e-9).unwrap();
        assert!(!t.is_symmetric(1e-12));
    }

    #[test]
    fn multiset_distance_requires_equal_cardinality() {
        assert_eq!(multiset_distance(&[1.0, 2.0], &[2.0, 1.0]), Some(0.0));
        assert_eq!(multiset_distance(&[1.0], &[1.0, 2.0]), None);
    }
}
