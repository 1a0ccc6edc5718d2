//! Extension Dirac operators and the representations Π₁, Π₂, Π.
//!
//! Spaces: H_AB = H_A ⊗ H_B, S2 = H_AB ⊕ H_AB (the ℂ² factor written as the
//! outer block index, row-major in the order the blocks are written), and
//! S2 ⊕ S2 ⊕ S2 for D and Π. D_I lives on S2 ⊕ S2.

use std::sync::Arc;

use faer::c64;

use crate::error::{Error, Result};
use crate::linop::{block, commutator, opnorm, tensor, BasisSpace, LinOp};
use crate::models::{check_toeplitz_conditions, ExtensionModel, SplitElement};
use crate::models::conditions::split_dirac;

#[derive(Debug, Clone)]
pub struct DiracBundle {
    source: Arc<ExtensionModel>,
    lambda: f64,
    delta_a: LinOp,
    delta_p: LinOp,
    delta_q: LinOp,
    delta_p_ab: LinOp,
    delta_b_ab: LinOp,
    s2: Arc<BasisSpace>,
    d1: LinOp,
    d2: LinOp,
    d3: LinOp,
}

fn i_unit() -> c64 {
    c64::new(0.0, 1.0)
}

impl DiracBundle {
    pub fn source(&self) -> &ExtensionModel {
        &self.source
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Δ_A on H_A, including the shift λ.
    pub fn delta_a(&self) -> &LinOp {
        &self.delta_a
    }

    /// Δ^p = PΔ_A.
    pub fn delta_p(&self) -> &LinOp {
        &self.delta_p
    }

    /// Δ^q = (1 − P)Δ_A.
    pub fn delta_q(&self) -> &LinOp {
        &self.delta_q
    }

    /// Δ^p ⊗ 1 on H_AB.
    pub fn delta_p_ab(&self) -> &LinOp {
        &self.delta_p_ab
    }

    /// 1 ⊗ Δ_B on H_AB.
    pub fn delta_b_ab(&self) -> &LinOp {
        &self.delta_b_ab
    }

    /// H_AB ⊕ H_AB.
    pub fn s2(&self) -> &Arc<BasisSpace> {
        &self.s2
    }

    pub fn d1(&self) -> &LinOp {
        &self.d1
    }

    pub fn d2(&self) -> &LinOp {
        &self.d2
    }

    pub fn d3(&self) -> &LinOp {
        &self.d3
    }

    /// D2 + iD3 (sign = +1) or D2 − iD3 (sign = −1).
    pub fn d_pm(&self, sign: f64) -> Result<LinOp> {
        self.d2.add(&self.d3.scale(i_unit() * sign))
    }

    /// D_I = [[0, D2 − iD3], [D2 + iD3, 0]] on S2 ⊕ S2.
    pub fn di(&self) -> Result<LinOp> {
        let minus = self.d_pm(-1.0)?;
        let plus = self.d_pm(1.0)?;
        block(&[vec![None, Some(&minus)], vec![Some(&plus), None]])
    }

    /// D = diag(D1, D_I) on S2 ⊕ S2 ⊕ S2.
    pub fn d(&self) -> Result<LinOp> {
        let minus = self.d_pm(-1.0)?;
        let plus = self.d_pm(1.0)?;
        block(&[
            vec![Some(&self.d1), None, None],
            vec![None, None, Some(&minus)],
            vec![None, Some(&plus), None],
        ])
    }

    /// Quotient Dirac eigenvalues n + λ and fiber Dirac eigenvalues.
    pub fn eigenvalue_lists(&self) -> (Vec<f64>, Vec<f64>) {
        let lam = self.source.quotient().dirac_eigs().expanded();
        let mu = self.source.fiber().dirac_eigs().expanded();
        (lam, mu)
    }
}

/// Assembles D1, D2, D3 (and lazily D_I and D) for an extension model.
pub fn build_bundle(ext: ExtensionModel) -> Result<DiracBundle> {
    build_bundle_shared(Arc::new(ext))
}

pub fn build_bundle_shared(ext: Arc<ExtensionModel>) -> Result<DiracBundle> {
    let report = check_toeplitz_conditions(&ext)?;
    if !report.all_finite() {
        return Err(Error::contract("Toeplitz conditions produced non-finite norms"));
    }
    let delta_a = ext.quotient().dirac().clone();
    let p = ext.projection();
    if commutator(p, &delta_a)?.max_abs() != 0.0 {
        return Err(Error::contract("P must commute with the quotient Dirac operator"));
    }
    let (delta_p, delta_q) = split_dirac(&ext)?;
    let id_a = LinOp::identity(ext.quotient().space())?;
    let id_b = ext.identity_b();
    let da = tensor(&delta_a, id_b)?;
    let dp = tensor(&delta_p, id_b)?;
    let dq = tensor(&delta_q, id_b)?;
    let db = tensor(&id_a, ext.fiber().dirac())?;
    let d1 = block(&[vec![Some(&da), Some(&db)], vec![Some(&db), Some(&da.scale_real(-1.0))]])?;
    let d2 = block(&[vec![Some(&dq), Some(&dp)], vec![Some(&dp), Some(&dq.scale_real(-1.0))]])?;
    let d3 = block(&[vec![Some(&db), None], vec![None, Some(&db)]])?;
    let s2 = Arc::clone(d1.space());
    Ok(DiracBundle {
        lambda: ext.lambda(),
        source: ext,
        delta_a,
        delta_p,
        delta_q,
        delta_p_ab: dp,
        delta_b_ab: db,
        s2,
        d1,
        d2,
        d3,
    })
}

/// Π₁(e) and Π₂(e) on S2; Π(e) on S2 ⊕ S2 ⊕ S2 on request.
#[derive(Debug, Clone)]
pub struct Represented {
    pub pi1: LinOp,
    pub pi2: LinOp,
}

impl Represented {
    /// Π(e) = Π₁(e) ⊕ Π₂(e) ⊕ Π₂(e).
    pub fn pi(&self) -> Result<LinOp> {
        block(&[
            vec![Some(&self.pi1), None, None],
            vec![None, Some(&self.pi2), None],
            vec![None, None, Some(&self.pi2)],
        ])
    }

    /// Π₂(e) ⊕ Π₂(e) on S2 ⊕ S2.
    pub fn pi2_doubled(&self) -> Result<LinOp> {
        block(&[vec![Some(&self.pi2), None], vec![None, Some(&self.pi2)]])
    }
}

/// Π₁ = π_σ ⊕ π_σ, Π₂ = π ⊕ π_σ.
pub fn represent(bundle: &DiracBundle, e: &SplitElement) -> Result<Represented> {
    let ext = bundle.source();
    ext.ensure_contains(e)?;
    let ps = ext.pi_sigma(e)?;
    let p = ext.pi(e)?;
    let pi1 = block(&[vec![Some(&ps), None], vec![None, Some(&ps)]])?;
    let pi2 = block(&[vec![Some(&p), None], vec![None, Some(&ps)]])?;
    Ok(Represented { pi1, pi2 })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PInjectivity {
    pub min_singular: f64,
    pub pass: bool,
}

/// Smallest singular value of Δ^p restricted to PH_A.
pub fn check_p_injectivity(bundle: &DiracBundle) -> Result<PInjectivity> {
    let mask = bundle.source().p_mask();
    let idx: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    let sub = bundle.delta_p.submatrix(&idx, &idx);
    let sv = sub.singular_values().map_err(|e| Error::Numerical(format!("svd failed: {e:?}")))?;
    let min_singular = sv.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PInjectivity { min_singular, pass: min_singular > 1e-10 })
}

/// The specialization to a one-point fiber, written directly in terms of
/// Δ_A, Δ^p and Δ^q on six copies of H_A (D3 = 0).
pub fn split_compact_case(ext: ExtensionModel) -> Result<DiracBundle> {
    let fiber = ext.fiber();
    if fiber.space().dim() != 1 || fiber.dirac().max_abs() != 0.0 {
        return Err(Error::contract("compact case needs the one-point fiber"));
    }
    let total = Arc::clone(ext.total_space());
    let on_total = |op: &LinOp| LinOp::from_mat(&total, op.mat().to_owned());
    let delta_a = ext.quotient().dirac().clone();
    let (delta_p, delta_q) = split_dirac(&ext)?;
    let da = on_total(&delta_a)?;
    let dp = on_total(&delta_p)?;
    let dq = on_total(&delta_q)?;
    let zero = LinOp::zeros(&total)?;
    let d1 = block(&[vec![Some(&da), None], vec![None, Some(&da.scale_real(-1.0))]])?;
    let d2 = block(&[vec![Some(&dq), Some(&dp)], vec![Some(&dp), Some(&dq.scale_real(-1.0))]])?;
    let d3 = block(&[vec![Some(&zero), None], vec![None, Some(&zero)]])?;
    let s2 = Arc::clone(d1.space());
    Ok(DiracBundle {
        lambda: ext.lambda(),
        source: Arc::new(ext),
        delta_a,
        delta_p,
        delta_q,
        delta_p_ab: dp,
        delta_b_ab: zero,
        s2,
        d1,
        d2,
        d3,
    })
}

/// Commutators of the Dirac parts with Π(e), assembled from the block
/// formulas without forming D_I or Π.
#[derive(Debug, Clone)]
pub struct CommutatorBlocks {
    /// [Δ_A, a] on H_A; ‖[D1, Π₁(e)]‖ equals its norm.
    pub quotient: LinOp,
    /// [D2 + iD3, Π₂(e)] on S2.
    pub c_plus: LinOp,
    /// [D2 − iD3, Π₂(e)] on S2.
    pub c_minus: LinOp,
}

pub fn commutator_blocks(bundle: &DiracBundle, e: &SplitElement) -> Result<CommutatorBlocks> {
    let ext = bundle.source();
    ext.ensure_contains(e)?;
    let id_b = ext.identity_b();
    let a = e.a();
    let x = e.x();
    let p = ext.projection();
    let quotient = commutator(&bundle.delta_a, a)?;
    let cp = commutator(&bundle.delta_p, a)?;
    let cq = commutator(&bundle.delta_q, a)?;
    let tl = commutator(&bundle.delta_b_ab, x)?.scale(i_unit());
    let tr = tensor(&p.compose(&cp)?, id_b)?.sub(&x.compose(&bundle.delta_p_ab)?)?;
    let bl = tensor(&cp.compose(p)?, id_b)?.add(&bundle.delta_p_ab.compose(x)?)?;
    let br = tensor(&cq, id_b)?.scale_real(-1.0);
    let tl_minus = tl.scale_real(-1.0);
    let c_plus = block(&[vec![Some(&tl), Some(&tr)], vec![Some(&bl), Some(&br)]])?;
    let c_minus = block(&[vec![Some(&tl_minus), Some(&tr)], vec![Some(&bl), Some(&br)]])?;
    Ok(CommutatorBlocks { quotient, c_plus, c_minus })
}

/// ‖[D1, Π₁(e)]‖ and ‖[D_I, Π₂(e) ⊕ Π₂(e)]‖ from the block formulas.
/// For Hermitian e the two D_I blocks have equal norm and only one is solved.
pub fn commutator_norms(bundle: &DiracBundle, e: &SplitElement) -> Result<(f64, f64)> {
    let blocks = commutator_blocks(bundle, e)?;
    let n1 = opnorm(&blocks.quotient)?;
    let np = opnorm(&blocks.c_plus)?;
    let ni = if e.is_hermitian() { np } else { np.max(opnorm(&blocks.c_minus)?) };
    Ok((n1, ni))
}

/// The same two norms from dense D1, D_I, Π₁, Π₂ ⊕ Π₂; an oracle for small sizes.
pub fn commutator_norms_dense(bundle: &DiracBundle, e: &SplitElement) -> Result<(f64, f64)> {
    let rep = represent(bundle, e)?;
    let n1 = opnorm(&commutator(bundle.d1(), &rep.pi1)?)?;
    let ni = opnorm(&commutator(&bundle.di()?, &rep.pi2_doubled()?)?)?;
    Ok((n1, ni))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{eig_hermitian, multiset_distance};
    use crate::models::{bare_model, circle_triple, podles_model, suq2_model, toeplitz_model, two_point_triple};

    fn circle_two_point(w: usize, lambda: f64) -> DiracBundle {
        build_bundle(bare_model(circle_triple(w, lambda).unwrap(), two_point_triple().unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn small_d1_spectrum() {
        let b = circle_two_point(1, 0.0);
        let s = eig_hermitian(b.d1()).unwrap().expanded();
        // n ∈ {−1, 0, 1}, μ ∈ {±1}: ±√(n²+1) for every pair.
        let mut full = Vec::new();
        for n in [-1.0f64, 0.0, 1.0] {
            for mu in [-1.0f64, 1.0] {
                let v = (n * n + mu * mu).sqrt();
                full.extend([v, -v]);
            }
        }
        assert!(multiset_distance(&s, &full).unwrap() < 1e-12);
    }

    #[test]
    fn operators_are_hermitian_and_d2_d3_commute() {
        let b = circle_two_point(3, 0.5);
        for op in [b.d1().clone(), b.d2().clone(), b.d3().clone(), b.di().unwrap(), b.d().unwrap()] {
            assert!(op.is_hermitian());
        }
        assert_eq!(commutator(b.d2(), b.d3()).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn d_is_block_diagonal_union() {
        let b = circle_two_point(2, 0.5);
        let sd = eig_hermitian(&b.d().unwrap()).unwrap();
        let s1 = eig_hermitian(b.d1()).unwrap();
        let si = eig_hermitian(&b.di().unwrap()).unwrap();
        assert!(s1.is_symmetric(1e-10));
        assert!(si.is_symmetric(1e-10));
        let u = s1.union(&si, 1e-9).unwrap();
        assert!(multiset_distance(&sd.expanded(), &u.expanded()).unwrap() < 1e-10);
    }

    #[test]
    fn point_fiber_d1_is_plus_minus_delta() {
        let b = build_bundle(toeplitz_model(3, 0.5).unwrap()).unwrap();
        let s = eig_hermitian(b.d1()).unwrap().expanded();
        let mut want: Vec<f64> = (-3..=3).flat_map(|n| [n as f64 + 0.5, -(n as f64 + 0.5)]).collect();
        want.sort_by(f64::total_cmp);
        assert!(multiset_distance(&s, &want).unwrap() < 1e-12);
    }

    #[test]
    fn representations_behave() {
        let b = build_bundle(suq2_model(0.5, 4, 2, 0.5).unwrap()).unwrap();
        let ext = b.source();
        let id = ext.identity_element().unwrap();
        let r = represent(&b, &id).unwrap();
        assert_eq!(r.pi1.max_abs_diff(&LinOp::identity(b.s2()).unwrap()).unwrap(), 0.0);
        let beta = ext.generator("beta").unwrap();
        assert_eq!(represent(&b, beta).unwrap().pi1.max_abs(), 0.0);
        let pi = r.pi().unwrap();
        assert_eq!(pi.dim(), 3 * b.s2().dim());
    }

    #[test]
    fn p_injectivity_cases() {
        for (lambda, pass, min) in [(0.5, true, 0.5), (0.0, false, 0.0), (-3.0, false, 0.0)] {
            let b = build_bundle(toeplitz_model(8, lambda).unwrap()).unwrap();
            let r = check_p_injectivity(&b).unwrap();
            assert_eq!(r.pass, pass, "λ = {lambda}");
            assert!((r.min_singular - min).abs() < 1e-12);
        }
    }

    #[test]
    fn compact_case_matches_general_assembly() {
        let general = build_bundle(toeplitz_model(4, 0.5).unwrap()).unwrap();
        let compact = split_compact_case(toeplitz_model(4, 0.5).unwrap()).unwrap();
        let d = general.d().unwrap().max_abs_diff(&compact.d().unwrap()).unwrap();
        assert!(d <= 1e-14);
        let si = eig_hermitian(&compact.di().unwrap()).unwrap().expanded();
        let mut want: Vec<f64> = (-4..=4).flat_map(|n| {
            let v = (n as f64 + 0.5).abs();
            [v, v, -v, -v]
        }).collect();
        want.sort_by(f64::total_cmp);
        assert!(multiset_distance(&si, &want).unwrap() < 1e-12);
        assert!(split_compact_case(podles_model(0.5, 4, 0.5).unwrap()).is_err());
    }

    #[test]
    fn identity_commutes_with_d() {
        let b = split_compact_case(toeplitz_model(4, 0.5).unwrap()).unwrap();
        let id = b.source().identity_element().unwrap();
        let pi = represent(&b, &id).unwrap().pi().unwrap();
        assert_eq!(commutator(&b.d().unwrap(), &pi).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn block_formulas_match_dense_commutators() {
        let b = build_bundle(suq2_model(0.5, 5, 2, 0.5).unwrap()).unwrap();
        let ext = b.source();
        let mut elems: Vec<SplitElement> = ext.generators().values().cloned().collect();
        elems.extend(ext.hermitian_basis(2, 2).unwrap().into_iter().map(|(_, e)| e));
        for e in &elems {
            let blocks = commutator_blocks(&b, e).unwrap();
            let rep = represent(&b, e).unwrap();
            let k1 = commutator(b.d1(), &rep.pi1).unwrap();
            let q = tensor(&blocks.quotient, ext.identity_b()).unwrap();
            let expect1 = block(&[vec![Some(&q), None], vec![None, Some(&q.scale_real(-1.0))]]).unwrap();
            assert!(k1.max_abs_diff(&expect1).unwrap() < 1e-13);
            let kp = commutator(&b.d_pm(1.0).unwrap(), &rep.pi2).unwrap();
            let km = commutator(&b.d_pm(-1.0).unwrap(), &rep.pi2).unwrap();
            assert!(kp.max_abs_diff(&blocks.c_plus).unwrap() < 1e-13);
            assert!(km.max_abs_diff(&blocks.c_minus).unwrap() < 1e-13);
            let (a1, ai) = commutator_norms(&b, e).unwrap();
            let (o1, oi) = commutator_norms_dense(&b, e).unwrap();
            assert!((a1 - o1).abs() <= 1e-10 * o1.max(1.0));
            assert!((ai - oi).abs() <= 1e-10 * oi.max(1.0));
        }
    }
}
