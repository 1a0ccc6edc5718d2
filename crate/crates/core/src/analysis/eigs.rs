use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linop::{multiset_distance, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigCheck {
    pub pass: bool,
    pub max_dev: f64,
}

/// {±√(λ² + μ²)} over all pairs.
pub fn d1_formula(lam: &[f64], mu: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * lam.len() * mu.len());
    for &l in lam {
        for &m in mu {
            let v = l.hypot(m);
            out.push(v);
            out.push(-v);
        }
    }
    out
}

/// Primed sequence λ' = λ₁, −λ₁, λ₂, −λ₂, …
pub fn primed(lam: &[f64]) -> Vec<f64> {
    lam.iter().flat_map(|&l| [l, -l]).collect()
}

/// {±√(λ'² + μ²)} with λ' the ±-interleaved quotient eigenvalues.
pub fn di_formula(lam: &[f64], mu: &[f64]) -> Vec<f64> {
    d1_formula(&primed(lam), mu)
}

fn compare(formula: Vec<f64>, spec: &Spectrum, tol: f64) -> Result<EigCheck> {
    if formula.len() != spec.source_dim() {
        return Err(Error::contract(format!(
            "formula predicts {} eigenvalues, spectrum has {}",
            formula.len(),
            spec.source_dim()
        )));
    }
    let max_dev = multiset_distance(&formula, &spec.expanded()).unwrap_or(f64::INFINITY);
    Ok(EigCheck { pass: max_dev <= tol, max_dev })
}

/// Compares a D1 spectrum against the closed form.
pub fn verify_d1_eigs(lam: &[f64], mu: &[f64], spec: &Spectrum, tol: f64) -> Result<EigCheck> {
    compare(d1_formula(lam, mu), spec, tol)
}

/// Compares a D_I spectrum against the closed form in the primed sequences.
pub fn verify_di_eigs(lam: &[f64], mu: &[f64], spec: &Spectrum, tol: f64) -> Result<EigCheck> {
    compare(di_formula(lam, mu), spec, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::build_bundle;
    use crate::linop::eig_hermitian;
    use crate::models::podles_model;

    fn spec(values: &[f64]) -> Spectrum {
        Spectrum::from_values(values.to_vec(), 1e-9).unwrap()
    }

    #[test]
    fn tiny_oracles() {
        assert!(verify_d1_eigs(&[0.0], &[0.0], &spec(&[0.0, 0.0]), 1e-12).unwrap().pass);
        assert!(verify_d1_eigs(&[3.0], &[4.0], &spec(&[-5.0, 5.0]), 1e-12).unwrap().pass);
        assert!(verify_di_eigs(&[1.0], &[0.0], &spec(&[1.0, 1.0, -1.0, -1.0]), 1e-12).unwrap().pass);
        assert!(verify_di_eigs(&[0.0], &[1.0], &spec(&[1.0, 1.0, -1.0, -1.0]), 1e-12).unwrap().pass);
    }

    #[test]
    fn cardinality_mismatch_is_an_error() {
        assert!(verify_d1_eigs(&[1.0, 2.0], &[0.0], &spec(&[1.0, -1.0]), 1e-9).is_err());
    }

    #[test]
    fn wrong_values_fail() {
        let r = verify_d1_eigs(&[3.0], &[4.0], &spec(&[-5.0, 5.5]), 1e-9).unwrap();
        assert!(!r.pass);
        assert!((r.max_dev - 0.5).abs() < 1e-12);
    }

    #[test]
    fn podles_di_matches_formula() {
        let b = build_bundle(podles_model(0.5, 8, 0.5).unwrap()).unwrap();
        let (lam, mu) = b.eigenvalue_lists();
        let s = eig_hermitian(&b.di().unwrap()).unwrap();
        assert!(verify_di_eigs(&lam, &mu, &s, 1e-9).unwrap().pass);
        let s1 = eig_hermitian(b.d1()).unwrap();
        assert!(verify_d1_eigs(&lam, &mu, &s1, 1e-9).unwrap().pass);
    }
}
