use serde::{Deserialize, Serialize};

use super::extension::ExtensionModel;
use crate::error::Result;
use crate::linop::{commutator, opnorm, LinOp};

/// Toeplitz-type and regularity diagnostics for one quotient generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConditions {
    pub generator: String,
    pub norm_p_comm: f64,
    /// Singular values of [P, a] in decreasing order, zeros below 1e−14 dropped.
    pub p_comm_singular_values: Vec<f64>,
    pub norm_dp_comm: f64,
    pub norm_dq_comm: f64,
    pub norm_signed_comm: f64,
    /// max |[Δ, a] − [Δ^p, a] − [Δ^q, a]|.
    pub split_identity_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToeplitzReport {
    pub generators: Vec<GeneratorConditions>,
}

impl ToeplitzReport {
    pub fn all_finite(&self) -> bool {
        self.generators.iter().all(|g| {
            [g.norm_p_comm, g.norm_dp_comm, g.norm_dq_comm, g.norm_signed_comm].iter().all(|v| v.is_finite())
        })
    }
}

/// Evaluates P-commutators and the Δ^p/Δ^q split for every quotient generator.
pub fn check_toeplitz_conditions(ext: &ExtensionModel) -> Result<ToeplitzReport> {
    let quotient = ext.quotient();
    let p = ext.projection();
    let delta = quotient.dirac();
    let dp = p.compose(delta)?;
    let dq = delta.sub(&dp)?;
    let signed = dp.sub(&dq)?;
    let mut rows = Vec::new();
    for (name, a) in quotient.generators() {
        let pc = commutator(p, a)?;
        let mut sv: Vec<f64> = pc
            .mat()
            .singular_values()
            .map_err(|e| crate::error::Error::Numerical(format!("svd failed: {e:?}")))?;
        sv.retain(|&s| s > 1e-14);
        let full = commutator(delta, a)?;
        let cp = commutator(&dp, a)?;
        let cq = commutator(&dq, a)?;
        let defect = full.max_abs_diff(&cp.add(&cq)?)?;
        rows.push(GeneratorConditions {
            generator: name.clone(),
            norm_p_comm: opnorm(&pc)?,
            p_comm_singular_values: sv,
            norm_dp_comm: opnorm(&cp)?,
            norm_dq_comm: opnorm(&cq)?,
            norm_signed_comm: opnorm(&commutator(&signed, a)?)?,
            split_identity_defect: defect,
        });
    }
    Ok(ToeplitzReport { generators: rows })
}

/// Δ^p = PΔ_A and Δ^q = (1 − P)Δ_A.
pub(crate) fn split_dirac(ext: &ExtensionModel) -> Result<(LinOp, LinOp)> {
    let dp = ext.projection().compose(ext.quotient().dirac())?;
    let dq = ext.quotient().dirac().sub(&dp)?;
    Ok((dp, dq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{podles_model, toeplitz_model};

    #[test]
    fn circle_shift_crosses_once() {
        let ext = toeplitz_model(8, 0.5).unwrap();
        let r = check_toeplitz_conditions(&ext).unwrap();
        for g in &r.generators {
            assert_eq!(g.p_comm_singular_values.len(), 1, "{}", g.generator);
            assert_eq!(g.split_identity_defect, 0.0);
            assert!((g.norm_p_comm - 1.0).abs() < 1e-12);
        }
        assert!(r.all_finite());
    }

    #[test]
    fn identity_has_vanishing_commutators() {
        let ext = podles_model(0.5, 6, 0.5).unwrap();
        let id = LinOp::identity(ext.quotient().space()).unwrap();
        assert_eq!(commutator(ext.projection(), &id).unwrap().max_abs(), 0.0);
        let (dp, dq) = split_dirac(&ext).unwrap();
        assert_eq!(commutator(&dp, &id).unwrap().max_abs(), 0.0);
        assert_eq!(commutator(&dq, &id).unwrap().max_abs(), 0.0);
    }
}
