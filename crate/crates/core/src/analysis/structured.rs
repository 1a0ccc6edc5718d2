use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::eigs::{d1_formula, di_formula, verify_d1_eigs, verify_di_eigs, EigCheck};
use crate::dirac::build_bundle;
use crate::error::{Error, Result};
use crate::linop::{eig_hermitian, multiset_distance, Spectrum, DEFAULT_MERGE_TOL};
use crate::models::{bare_model, circle_triple, podles_model, suq2_model, toeplitz_model, two_point_triple, ExtensionModel, ModelDescriptor, ModelKind};

/// Model families whose Dirac spectra have closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuredFamily {
    /// Circle quotient with the one-point fiber.
    Circle,
    /// Circle quotient with a circle fiber.
    CircleTimesCircle,
    /// Circle quotient with the two-point fiber.
    CircleTimesTwoPoint,
}

/// Which operator's spectrum to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumTarget {
    Quotient,
    D1,
    DI,
    D,
}

/// Outcome of certifying one family on a small dense instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub family: StructuredFamily,
    pub d1: EigCheck,
    pub di: EigCheck,
    /// Largest multiset gap between the closed form and the dense D spectrum.
    pub structured_vs_dense: f64,
    pub pass: bool,
}

/// Record of families verified densely in this run.
#[derive(Debug, Clone, Default)]
pub struct TrustChain {
    certified: BTreeMap<StructuredFamily, Certification>,
}

const CERT_TOL: f64 = 1e-9;
const AGREE_TOL: f64 = 1e-10;

fn probe_models(family: StructuredFamily) -> Result<Vec<ExtensionModel>> {
    Ok(match family {
        StructuredFamily::Circle => vec![toeplitz_model(8, 0.5)?, toeplitz_model(6, 0.0)?],
        StructuredFamily::CircleTimesCircle => vec![suq2_model(0.5, 5, 4, 0.5)?],
        StructuredFamily::CircleTimesTwoPoint => {
            vec![podles_model(0.5, 8, 0.5)?, bare_model(circle_triple(8, 0.0)?, two_point_triple()?)?]
        }
    })
}

impl TrustChain {
    pub fn new() -> Self {
        Self::default()
    }

    /// Runs the dense eigenvalue checks and the closed-form comparison on
    /// small instances of `family`; the family is trusted only if all pass.
    pub fn certify(&mut self, family: StructuredFamily) -> Result<Certification> {
        let mut d1 = EigCheck { pass: true, max_dev: 0.0 };
        let mut di = EigCheck { pass: true, max_dev: 0.0 };
        let mut agree: f64 = 0.0;
        for ext in probe_models(family)? {
            let bundle = build_bundle(ext)?;
            let (lam, mu) = bundle.eigenvalue_lists();
            let s1 = eig_hermitian(bundle.d1())?;
            let si = eig_hermitian(&bundle.di()?)?;
            let sd = eig_hermitian(&bundle.d()?)?;
            let c1 = verify_d1_eigs(&lam, &mu, &s1, CERT_TOL)?;
            let ci = verify_di_eigs(&lam, &mu, &si, CERT_TOL)?;
            d1 = EigCheck { pass: d1.pass && c1.pass, max_dev: d1.max_dev.max(c1.max_dev) };
            di = EigCheck { pass: di.pass && ci.pass, max_dev: di.max_dev.max(ci.max_dev) };
            let structured = target_values(&lam, &mu, SpectrumTarget::D);
            agree = agree.max(multiset_distance(&structured, &sd.expanded()).unwrap_or(f64::INFINITY));
        }
        let cert = Certification { family, d1, di, structured_vs_dense: agree, pass: d1.pass && di.pass && agree <= AGREE_TOL };
        if cert.pass {
            self.certified.insert(family, cert.clone());
        }
        Ok(cert)
    }

    pub fn is_certified(&self, family: StructuredFamily) -> bool {
        self.certified.contains_key(&family)
    }

    pub fn certifications(&self) -> impl Iterator<Item = &Certification> {
        self.certified.values()
    }
}

fn target_values(lam: &[f64], mu: &[f64], target: SpectrumTarget) -> Vec<f64> {
    match target {
        SpectrumTarget::Quotient => lam.to_vec(),
        SpectrumTarget::D1 => d1_formula(lam, mu),
        SpectrumTarget::DI => di_formula(lam, mu),
        SpectrumTarget::D => {
            let mut v = d1_formula(lam, mu);
            v.extend(di_formula(lam, mu));
            v
        }
    }
}

/// Quotient eigenvalues n + λ for |n| ≤ window.
pub fn circle_eigenvalues(window: usize, lambda: f64) -> Vec<f64> {
    let w = window as i64;
    (-w..=w).map(|n| n as f64 + lambda).collect()
}

/// Closed-form spectrum from explicit eigenvalue lists; refuses families not
/// certified in `chain`.
pub fn structured_from_lists(
    chain: &TrustChain,
    family: StructuredFamily,
    lam: &[f64],
    mu: &[f64],
    target: SpectrumTarget,
) -> Result<Spectrum> {
    if !chain.is_certified(family) {
        return Err(Error::contract(format!("family {family:?} has not been verified in this run")));
    }
    Spectrum::from_values(target_values(lam, mu, target), DEFAULT_MERGE_TOL)
}

/// Family and eigenvalue lists a descriptor corresponds to.
pub fn descriptor_lists(desc: &ModelDescriptor) -> Result<(StructuredFamily, Vec<f64>, Vec<f64>)> {
    match desc.model {
        ModelKind::Circle => Ok((StructuredFamily::Circle, circle_eigenvalues(desc.w, desc.lambda), vec![0.0])),
        ModelKind::Suq2 => {
            if desc.n < 2 {
                return Err(Error::contract("cutoff N must be at least 2"));
            }
            Ok((
                StructuredFamily::CircleTimesCircle,
                circle_eigenvalues(desc.n - 1, desc.lambda),
                circle_eigenvalues(desc.w, 0.0),
            ))
        }
        ModelKind::Podles => {
            if desc.n < 2 {
                return Err(Error::contract("cutoff N must be at least 2"));
            }
            Ok((StructuredFamily::CircleTimesTwoPoint, circle_eigenvalues(desc.n - 1, desc.lambda), vec![-1.0, 1.0]))
        }
        ModelKind::TwoPoint => Err(Error::contract("two_point is a finite triple, not an extension family")),
    }
}

/// Closed-form spectrum for a descriptor without building any matrix.
pub fn structured_eigs(chain: &TrustChain, desc: &ModelDescriptor, target: SpectrumTarget) -> Result<Spectrum> {
    let (family, lam, mu) = descriptor_lists(desc)?;
    structured_from_lists(chain, family, &lam, &mu, target)
}
