use std::collections::BTreeMap;
use std::sync::Arc;

use faer::c64;
use serde::{Deserialize, Serialize};

use super::triple::TripleModel;
use crate::error::{Error, Result};
use crate::linop::{tensor, BasisSpace, LinOp, SpaceKind};

/// Which concrete construction an [`ExtensionModel`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Suq2,
    Podles,
    Toeplitz,
    Bare,
}

/// An element of the extension written as x + PaP⊗I, with the ideal part
/// `x` on H_A⊗H_B (supported on PH_A⊗H_B) and the quotient part `a` on H_A.
#[derive(Debug, Clone)]
pub struct SplitElement {
    x: LinOp,
    a: LinOp,
}

impl SplitElement {
    pub fn x(&self) -> &LinOp {
        &self.x
    }

    pub fn a(&self) -> &LinOp {
        &self.a
    }

    pub fn add(&self, other: &SplitElement) -> Result<SplitElement> {
        Ok(SplitElement { x: self.x.add(&other.x)?, a: self.a.add(&other.a)? })
    }

    pub fn sub(&self, other: &SplitElement) -> Result<SplitElement> {
        Ok(SplitElement { x: self.x.sub(&other.x)?, a: self.a.sub(&other.a)? })
    }

    pub fn scale(&self, c: c64) -> SplitElement {
        SplitElement { x: self.x.scale(c), a: self.a.scale(c) }
    }

    pub fn scale_real(&self, c: f64) -> SplitElement {
        SplitElement { x: self.x.scale_real(c), a: self.a.scale_real(c) }
    }

    pub fn adjoint(&self) -> SplitElement {
        SplitElement { x: self.x.adjoint(), a: self.a.adjoint() }
    }

    /// (e + e*)/2.
    pub fn hermitian_part(&self) -> SplitElement {
        SplitElement { x: self.x.hermitian_part(), a: self.a.hermitian_part() }
    }

    /// (e − e*)/(2i).
    pub fn skew_part(&self) -> SplitElement {
        SplitElement { x: self.x.skew_part(), a: self.a.skew_part() }
    }

    pub fn is_hermitian(&self) -> bool {
        self.x.is_hermitian() && self.a.is_hermitian()
    }

    pub fn max_abs(&self) -> f64 {
        self.x.max_abs().max(self.a.max_abs())
    }

    pub fn max_abs_diff(&self, other: &SplitElement) -> Result<f64> {
        Ok(self.x.max_abs_diff(&other.x)?.max(self.a.max_abs_diff(&other.a)?))
    }

    /// Σ cᵢ eᵢ over a non-empty family.
    pub fn combine(coeffs: &[f64], elems: &[&SplitElement]) -> Result<SplitElement> {
        if coeffs.len() != elems.len() || elems.is_empty() {
            return Err(Error::contract("coefficient count differs from element count"));
        }
        let mut acc = elems[0].scale_real(coeffs[0]);
        for (c, e) in coeffs.iter().zip(elems).skip(1) {
            acc = acc.add(&e.scale_real(*c))?;
        }
        Ok(acc)
    }
}

/// Residual of one defining relation on the interior subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationResidual {
    pub name: String,
    pub residual: f64,
}

/// Quotient triple A on a windowed line, fiber triple B, Toeplitz projection
/// P and a family of generators given by their action on PH_A⊗H_B together
/// with their image in the quotient.
#[derive(Debug, Clone)]
pub struct ExtensionModel {
    family: Family,
    q: Option<f64>,
    lambda: f64,
    quotient: TripleModel,
    fiber: TripleModel,
    projection: LinOp,
    p_mask: Vec<bool>,
    total: Arc<BasisSpace>,
    ideal: Arc<BasisSpace>,
    ideal_map: Vec<usize>,
    support: Vec<bool>,
    identity_b: LinOp,
    native: BTreeMap<String, LinOp>,
    generators: BTreeMap<String, SplitElement>,
}

/// A generator given by its action on the ideal space and its quotient symbol.
pub struct GeneratorSpec {
    pub name: String,
    pub native: LinOp,
    pub symbol: LinOp,
}

impl ExtensionModel {
    pub fn assemble(
        family: Family,
        q: Option<f64>,
        lambda: f64,
        quotient: TripleModel,
        fiber: TripleModel,
        specs: Vec<GeneratorSpec>,
    ) -> Result<Self> {
        let SpaceKind::Line { window } = *quotient.space().kind() else {
            return Err(Error::contract("quotient triple must live on a windowed line"));
        };
        let projection = quotient.nonnegative_projection()?;
        let p_mask: Vec<bool> = (0..projection.dim()).map(|i| projection.entry(i, i).re == 1.0).collect();
        let total = BasisSpace::product(quotient.space(), fiber.space())?;
        let ideal = BasisSpace::product(&BasisSpace::half_line(window + 1)?, fiber.space())?;
        let db = fiber.space().dim();
        let ideal_map: Vec<usize> = (0..ideal.dim()).map(|i| (window + i / db) * db + i % db).collect();
        let mut support = vec![false; total.dim()];
        for &k in &ideal_map {
            support[k] = true;
        }
        let identity_b = LinOp::identity(fiber.space())?;
        let mut ext = ExtensionModel {
            family,
            q,
            lambda,
            quotient,
            fiber,
            projection,
            p_mask,
            total,
            ideal,
            ideal_map,
            support,
            identity_b,
            native: BTreeMap::new(),
            generators: BTreeMap::new(),
        };
        for spec in specs {
            if spec.native.space() != &ext.ideal {
                return Err(Error::SpaceMismatch(format!("generator {} is not on the ideal space", spec.name)));
            }
            let embedded = spec.native.embed(&ext.total, &ext.ideal_map)?;
            let pap = ext.lift_quotient(&spec.symbol)?;
            let x = embedded.sub(&pap)?;
            let elem = ext.split(x, spec.symbol)?;
            ext.generators.insert(spec.name.clone(), elem);
            ext.native.insert(spec.name, spec.native);
        }
        Ok(ext)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn q(&self) -> Option<f64> {
        self.q
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn quotient(&self) -> &TripleModel {
        &self.quotient
    }

    pub fn fiber(&self) -> &TripleModel {
        &self.fiber
    }

    /// P on H_A.
    pub fn projection(&self) -> &LinOp {
        &self.projection
    }

    pub fn p_mask(&self) -> &[bool] {
        &self.p_mask
    }

    /// H_A ⊗ H_B.
    pub fn total_space(&self) -> &Arc<BasisSpace> {
        &self.total
    }

    /// ℓ²(ℕ₀)-truncation ⊗ H_B, identified with PH_A ⊗ H_B.
    pub fn ideal_space(&self) -> &Arc<BasisSpace> {
        &self.ideal
    }

    /// Mask of PH_A ⊗ H_B inside H_A ⊗ H_B.
    pub fn support_mask(&self) -> &[bool] {
        &self.support
    }

    pub fn identity_b(&self) -> &LinOp {
        &self.identity_b
    }

    /// Number of basis vectors of PH_A.
    pub fn cutoff(&self) -> usize {
        self.ideal.dim() / self.fiber.space().dim()
    }

    pub fn generators(&self) -> &BTreeMap<String, SplitElement> {
        &self.generators
    }

    pub fn generator(&self, name: &str) -> Result<&SplitElement> {
        self.generators.get(name).ok_or_else(|| Error::contract(format!("no generator {name}")))
    }

    /// Generator as an operator on the ideal space.
    pub fn native(&self, name: &str) -> Result<&LinOp> {
        self.native.get(name).ok_or_else(|| Error::contract(format!("no generator {name}")))
    }

    /// PaP ⊗ I_B on H_A ⊗ H_B.
    pub fn lift_quotient(&self, a: &LinOp) -> Result<LinOp> {
        if a.space() != self.quotient.space() {
            return Err(Error::SpaceMismatch("quotient part must act on H_A".into()));
        }
        tensor(&a.compress(&self.p_mask)?, &self.identity_b)
    }

    /// Validates and wraps an (x, a) pair.
    pub fn split(&self, x: LinOp, a: LinOp) -> Result<SplitElement> {
        if x.space() != &self.total {
            return Err(Error::SpaceMismatch("ideal part must act on H_A ⊗ H_B".into()));
        }
        if a.space() != self.quotient.space() {
            return Err(Error::SpaceMismatch("quotient part must act on H_A".into()));
        }
        let n = x.dim();
        let scale = x.max_abs().max(1.0);
        for j in 0..n {
            for i in 0..n {
                if (!self.support[i] || !self.support[j]) && x.entry(i, j).norm() > 1e-12 * scale {
                    return Err(Error::contract("ideal part leaves PH_A ⊗ H_B"));
                }
            }
        }
        Ok(SplitElement { x, a })
    }

    pub fn identity_element(&self) -> Result<SplitElement> {
        Ok(SplitElement { x: LinOp::zeros(&self.total)?, a: LinOp::identity(self.quotient.space())? })
    }

    pub fn zero_element(&self) -> Result<SplitElement> {
        Ok(SplitElement { x: LinOp::zeros(&self.total)?, a: LinOp::zeros(self.quotient.space())? })
    }

    /// The element PaP ⊗ I (ideal part zero).
    pub fn quotient_element(&self, a: LinOp) -> Result<SplitElement> {
        self.split(LinOp::zeros(&self.total)?, a)
    }

    /// A pure ideal element, given on the ideal space.
    pub fn ideal_element(&self, native: &LinOp) -> Result<SplitElement> {
        let x = native.embed(&self.total, &self.ideal_map)?;
        self.split(x, LinOp::zeros(self.quotient.space())?)
    }

    /// Checks that `e` lies in the span this model can represent.
    pub fn ensure_contains(&self, e: &SplitElement) -> Result<()> {
        self.split(e.x.clone(), e.a.clone()).map(|_| ())
    }

    /// Product in the extension; exact at truncation.
    pub fn mul(&self, e: &SplitElement, f: &SplitElement) -> Result<SplitElement> {
        let pap = self.lift_quotient(&e.a)?;
        let pbp = self.lift_quotient(&f.a)?;
        let q_mask: Vec<bool> = self.p_mask.iter().map(|p| !p).collect();
        let middle = e.a.compose(&LinOp::identity(self.quotient.space())?.compress(&q_mask)?)?.compose(&f.a)?;
        let cross = tensor(&middle.compress(&self.p_mask)?, &self.identity_b)?;
        let x = e
            .x
            .compose(&f.x)?
            .add(&e.x.compose(&pbp)?)?
            .add(&pap.compose(&f.x)?)?
            .sub(&cross)?;
        Ok(SplitElement { x, a: e.a.compose(&f.a)? })
    }

    /// π(e) = x + PaP ⊗ I on H_A ⊗ H_B.
    pub fn pi(&self, e: &SplitElement) -> Result<LinOp> {
        self.ensure_contains(e)?;
        e.x.add(&self.lift_quotient(&e.a)?)
    }

    /// π_σ(e) = a ⊗ I on H_A ⊗ H_B.
    pub fn pi_sigma(&self, e: &SplitElement) -> Result<LinOp> {
        tensor(&e.a, &self.identity_b)
    }

    /// Mask of ideal-space basis vectors at distance ≥ `margin` from every
    /// truncation boundary.
    pub fn interior_mask(&self, margin: usize) -> Vec<bool> {
        let n = self.cutoff();
        let fiber = self.fiber.space();
        let db = fiber.dim();
        (0..self.ideal.dim())
            .map(|i| {
                let k = i / db;
                let f = i % db;
                let fiber_ok = match fiber.kind() {
                    SpaceKind::Line { window } => {
                        fiber.position(f).is_some_and(|p| p.unsigned_abs() as usize + margin <= *window)
                    }
                    SpaceKind::HalfLine { cutoff } => f + margin < *cutoff || *cutoff == 1,
                    _ => true,
                };
                k + margin < n && fiber_ok
            })
            .collect()
    }

    /// Frobenius norm of R restricted to interior columns; an upper bound on
    /// the operator norm of that restriction.
    pub fn interior_residual(&self, r: &LinOp, margin: usize) -> f64 {
        let mask = self.interior_mask(margin);
        let n = r.dim();
        let mut s = 0.0;
        for (j, keep) in mask.iter().enumerate() {
            if *keep {
                for i in 0..n {
                    s += r.entry(i, j).norm_sqr();
                }
            }
        }
        s.sqrt()
    }

    /// Interior residuals of the defining relations of the model's algebra.
    pub fn relation_residuals(&self, margin: usize) -> Result<Vec<RelationResidual>> {
        let id = LinOp::identity(&self.ideal)?;
        let mut out = Vec::new();
        let mut push = |name: &str, r: LinOp| {
            out.push(RelationResidual { name: name.to_string(), residual: self.interior_residual(&r, margin) });
        };
        match self.family {
            Family::Suq2 => {
                let q = self.q.unwrap_or(0.0);
                let a = self.native("alpha")?;
                let b = self.native("beta")?;
                let (ad, bd) = (a.adjoint(), b.adjoint());
                push("alpha beta = q beta alpha", a.compose(b)?.sub(&b.compose(a)?.scale_real(q))?);
                push("alpha beta* = q beta* alpha", a.compose(&bd)?.sub(&bd.compose(a)?.scale_real(q))?);
                push("beta* beta = beta beta*", bd.compose(b)?.sub(&b.compose(&bd)?)?);
                push("alpha* alpha + beta* beta = I", ad.compose(a)?.add(&bd.compose(b)?)?.sub(&id)?);
                push(
                    "alpha alpha* + q^2 beta beta* = I",
                    a.compose(&ad)?.add(&b.compose(&bd)?.scale_real(q * q))?.sub(&id)?,
                );
            }
            Family::Podles => {
                let q = self.q.unwrap_or(0.0);
                let q4 = q.powi(4);
                let a = self.native("alpha")?;
                let b = self.native("beta")?;
                let ad = a.adjoint();
                let b2 = b.compose(b)?;
                push("beta* = beta", b.adjoint().sub(b)?);
                push("alpha* alpha + beta^2 = I", ad.compose(a)?.add(&b2)?.sub(&id)?);
                push("q^4 alpha alpha* + beta^2 = q^4", a.compose(&ad)?.scale_real(q4).add(&b2)?.sub(&id.scale_real(q4))?);
                push("beta alpha = q^2 alpha beta", b.compose(a)?.sub(&a.compose(b)?.scale_real(q * q))?);
            }
            Family::Toeplitz => {
                let t = self.native("T")?;
                push("T* T = I", t.adjoint().compose(t)?.sub(&id)?);
            }
            Family::Bare => {}
        }
        Ok(out)
    }

    /// Generators together with their adjoints, duplicates removed.
    pub fn letters(&self) -> Result<Vec<(String, SplitElement)>> {
        let mut out: Vec<(String, SplitElement)> = Vec::new();
        let mut candidates = Vec::new();
        for (name, g) in &self.generators {
            candidates.push((name.clone(), g.clone()));
            let starred = if name.ends_with('*') { name.trim_end_matches('*').to_string() } else { format!("{name}*") };
            candidates.push((starred, g.adjoint()));
        }
        for (name, g) in candidates {
            let mut dup = false;
            for (_, h) in &out {
                if g.max_abs_diff(h)? <= 1e-14 {
                    dup = true;
                    break;
                }
            }
            if !dup {
                out.push((name, g));
            }
        }
        Ok(out)
    }

    /// Real basis of Hermitian elements: real and imaginary parts of all words
    /// of length 1..=degree in the letters, plus cos/sin of quotient Fourier
    /// modes T^k for k = 1..=fourier_degree. Zero and repeated (up to sign)
    /// elements are dropped.
    pub fn hermitian_basis(&self, degree: usize, fourier_degree: usize) -> Result<Vec<(String, SplitElement)>> {
        let letters = self.letters()?;
        let mut raw: Vec<(String, SplitElement)> = Vec::new();
        let mut layer: Vec<(String, SplitElement)> = letters.clone();
        for len in 1..=degree {
            if len > 1 {
                let mut next = Vec::with_capacity(layer.len() * letters.len());
                for (wn, w) in &layer {
                    for (ln, l) in &letters {
                        next.push((format!("{wn} {ln}"), self.mul(w, l)?));
                    }
                }
                layer = next;
            }
            for (name, w) in &layer {
                raw.push((format!("re[{name}]"), w.hermitian_part()));
                raw.push((format!("im[{name}]"), w.skew_part()));
            }
        }
        if fourier_degree > 0 {
            let t = self.quotient.generator("T")?;
            let mut power = t.clone();
            for k in 1..=fourier_degree {
                let mode = self.quotient_element(power.clone())?;
                raw.push((format!("cos[{k}]"), mode.hermitian_part()));
                raw.push((format!("sin[{k}]"), mode.skew_part()));
                power = power.compose(t)?;
            }
        }
        let mut out: Vec<(String, SplitElement)> = Vec::new();
        for (name, e) in raw {
            if e.max_abs() <= 1e-14 {
                continue;
            }
            let neg = e.scale_real(-1.0);
            let mut dup = false;
            for (_, h) in &out {
                if e.max_abs_diff(h)? <= 1e-12 || neg.max_abs_diff(h)? <= 1e-12 {
                    dup = true;
                    break;
                }
            }
            if !dup {
                out.push((name, e));
            }
        }
        Ok(out)
    }
}
