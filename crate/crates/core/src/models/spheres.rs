use faer::c64;

use super::extension::{ExtensionModel, Family, GeneratorSpec};
use super::triple::{circle_triple, point_triple, two_point_triple, TripleModel};
use crate::error::{Error, Result};
use crate::linop::{tensor, BasisSpace, LinOp};

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::contract(format!("q must lie in (0, 1), got {q}")))
    }
}

fn check_cutoff(n: usize) -> Result<()> {
    if n >= 2 {
        Ok(())
    } else {
        Err(Error::contract("cutoff N must be at least 2"))
    }
}

/// Weighted lowering shift e_k ↦ w_k e_{k−1} on HalfLine(N).
fn lowering(n: usize, w: impl Fn(usize) -> f64) -> Result<LinOp> {
    let s = BasisSpace::half_line(n)?;
    LinOp::from_fn(&s, |i, j| if j == i + 1 { c64::new(w(j), 0.0) } else { c64::new(0.0, 0.0) })
}

/// Weighted raising shift e_k ↦ w_k e_{k+1} on HalfLine(N).
fn raising(n: usize, w: impl Fn(usize) -> f64) -> Result<LinOp> {
    let s = BasisSpace::half_line(n)?;
    LinOp::from_fn(&s, |i, j| if i == j + 1 { c64::new(w(j), 0.0) } else { c64::new(0.0, 0.0) })
}

/// C(S³_q) on ℓ²(ℕ₀)⊗ℓ²(ℤ): α = S*√(1 − N_q²) ⊗ I, β = N_q ⊗ T*, with
/// quotient circle on Line(N − 1) carrying n + λ and fiber circle Line(W).
pub fn suq2_model(q: f64, n: usize, w: usize, lambda: f64) -> Result<ExtensionModel> {
    check_q(q)?;
    check_cutoff(n)?;
    if w < 2 {
        return Err(Error::contract("fiber window W must be at least 2"));
    }
    let quotient = circle_triple(n - 1, lambda)?;
    let fiber = circle_triple(w, 0.0)?;
    let id_b = LinOp::identity(fiber.space())?;
    let alpha_h = lowering(n, |k| (1.0 - q.powi(2 * k as i32)).sqrt())?;
    let nq = LinOp::diagonal(alpha_h.space(), &(0..n).map(|k| q.powi(k as i32)).collect::<Vec<_>>())?;
    let t_b = fiber.generator("T")?.clone();
    let alpha = tensor(&alpha_h, &id_b)?;
    let beta = tensor(&nq, &t_b.adjoint())?;
    let t_star = quotient.generator("T*")?.clone();
    let zero_a = LinOp::zeros(quotient.space())?;
    ExtensionModel::assemble(
        Family::Suq2,
        Some(q),
        lambda,
        quotient,
        fiber,
        vec![
            GeneratorSpec { name: "alpha".into(), native: alpha, symbol: t_star },
            GeneratorSpec { name: "beta".into(), native: beta, symbol: zero_a },
        ],
    )
}

/// C(S²_q) on ℓ²(ℕ₀)⊗ℂ² with α e_k = √(1 − q^{4k+4}) e_{k+1} ⊗ I₂ and
/// β = q^{2k+2} ⊗ diag(1, −1); quotient circle on Line(N − 1), fiber two-point.
pub fn podles_model(q: f64, n: usize, lambda: f64) -> Result<ExtensionModel> {
    check_q(q)?;
    check_cutoff(n)?;
    let quotient = circle_triple(n - 1, lambda)?;
    let fiber = two_point_triple()?;
    let id_b = LinOp::identity(fiber.space())?;
    let alpha_h = raising(n, |k| (1.0 - q.powi(4 * k as i32 + 4)).sqrt())?;
    let beta_h = LinOp::diagonal(alpha_h.space(), &(0..n).map(|k| q.powi(2 * k as i32 + 2)).collect::<Vec<_>>())?;
    let alpha = tensor(&alpha_h, &id_b)?;
    let beta = tensor(&beta_h, &LinOp::diagonal(fiber.space(), &[1.0, -1.0])?)?;
    let t = quotient.generator("T")?.clone();
    let zero_a = LinOp::zeros(quotient.space())?;
    ExtensionModel::assemble(
        Family::Podles,
        Some(q),
        lambda,
        quotient,
        fiber,
        vec![
            GeneratorSpec { name: "alpha".into(), native: alpha, symbol: t },
            GeneratorSpec { name: "beta".into(), native: beta, symbol: zero_a },
        ],
    )
}

/// The Toeplitz algebra as an extension of C(𝕋) by the compacts: quotient
/// circle on Line(W), one-point fiber, generator T acting as the unilateral
/// shift on PH.
pub fn toeplitz_model(w: usize, lambda: f64) -> Result<ExtensionModel> {
    let quotient = circle_triple(w, lambda)?;
    let fiber = point_triple()?;
    let s = raising(w + 1, |_| 1.0)?;
    let id_b = LinOp::identity(fiber.space())?;
    let native = tensor(&s, &id_b)?;
    let t = quotient.generator("T")?.clone();
    ExtensionModel::assemble(
        Family::Toeplitz,
        None,
        lambda,
        quotient,
        fiber,
        vec![GeneratorSpec { name: "T".into(), native, symbol: t }],
    )
}

/// Extension with the quotient generators acting as PaP and, for every fiber
/// generator b, the rank-one ideal element e₀e₀* ⊗ b.
pub fn bare_model(quotient: TripleModel, fiber: TripleModel) -> Result<ExtensionModel> {
    let lambda = quotient.dirac_diagonal().get(quotient.space().dim() / 2).copied().unwrap_or(0.0);
    let n = quotient.space().dim() / 2 + 1;
    let half = BasisSpace::half_line(n)?;
    let id_b = LinOp::identity(fiber.space())?;
    let mut specs = Vec::new();
    for (name, a) in quotient.generators() {
        let p = quotient.nonnegative_projection()?;
        let mask: Vec<bool> = (0..p.dim()).map(|i| p.entry(i, i).re == 1.0).collect();
        let rows: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
        let pap = LinOp::from_mat(&half, a.submatrix(&rows, &rows))?;
        specs.push(GeneratorSpec { name: name.clone(), native: tensor(&pap, &id_b)?, symbol: a.clone() });
    }
    let e00 = LinOp::from_fn(&half, |i, j| if i == 0 && j == 0 { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) })?;
    let zero_a = LinOp::zeros(quotient.space())?;
    for (name, b) in fiber.generators() {
        specs.push(GeneratorSpec { name: format!("k[{name}]"), native: tensor(&e00, b)?, symbol: zero_a.clone() });
    }
    ExtensionModel::assemble(Family::Bare, None, lambda, quotient, fiber, specs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{commutator, opnorm};

    #[test]
    fn suq2_relations_hold_on_interior() {
        let ext = suq2_model(0.5, 16, 16, 0.5).unwrap();
        for r in ext.relation_residuals(1).unwrap() {
            assert!(r.residual <= 1e-12, "{}: {:e}", r.name, r.residual);
        }
    }

    #[test]
    fn suq2_boundary_defect_is_visible_without_margin() {
        let ext = suq2_model(0.5, 8, 4, 0.5).unwrap();
        let worst = ext.relation_residuals(0).unwrap().iter().map(|r| r.residual).fold(0.0, f64::max);
        assert!(worst > 1e-3);
    }

    #[test]
    fn podles_relations_hold_on_interior() {
        let ext = podles_model(0.6, 32, 0.5).unwrap();
        for r in ext.relation_residuals(1).unwrap() {
            assert!(r.residual <= 1e-12, "{}: {:e}", r.name, r.residual);
        }
    }

    #[test]
    fn podles_boundary_relation_holds_everywhere() {
        let ext = podles_model(0.6, 12, 0.5).unwrap();
        let r = ext.relation_residuals(0).unwrap();
        let q4 = r.iter().find(|r| r.name.starts_with("q^4")).unwrap();
        assert!(q4.residual <= 1e-12);
        let b = ext.native("beta").unwrap();
        assert_eq!(b.max_abs_diff(&b.adjoint()).unwrap(), 0.0);
    }

    #[test]
    fn q_out_of_range_is_rejected() {
        assert!(suq2_model(1.0, 4, 4, 0.5).is_err());
        assert!(podles_model(0.0, 4, 0.5).is_err());
    }

    #[test]
    fn small_q_alpha_is_near_shift() {
        let q = 1e-3;
        let ext = suq2_model(q, 6, 2, 0.5).unwrap();
        let a = ext.native("alpha").unwrap();
        let s = tensor(&lowering(6, |k| if k == 0 { 0.0 } else { 1.0 }).unwrap(), ext.identity_b()).unwrap();
        assert!(a.max_abs_diff(&s).unwrap() <= q * q);
    }

    #[test]
    fn quotient_map_kills_ideal_generators() {
        let ext = suq2_model(0.5, 6, 3, 0.5).unwrap();
        let beta = ext.generator("beta").unwrap();
        assert_eq!(ext.pi_sigma(beta).unwrap().max_abs(), 0.0);
        let alpha = ext.generator("alpha").unwrap();
        let expected = tensor(ext.quotient().generator("T*").unwrap(), ext.identity_b()).unwrap();
        assert_eq!(ext.pi_sigma(alpha).unwrap().max_abs_diff(&expected).unwrap(), 0.0);
    }

    #[test]
    fn pi_recovers_native_generators() {
        let ext = podles_model(0.5, 6, 0.5).unwrap();
        for name in ["alpha", "beta"] {
            let pi = ext.pi(ext.generator(name).unwrap()).unwrap();
            let native = ext.native(name).unwrap().embed(ext.total_space(), &ideal_map(&ext)).unwrap();
            assert!(pi.max_abs_diff(&native).unwrap() < 1e-15);
        }
    }

    fn ideal_map(ext: &ExtensionModel) -> Vec<usize> {
        let db = ext.fiber().space().dim();
        let offset = ext.quotient().space().dim() / 2;
        (0..ext.ideal_space().dim()).map(|i| (offset + i / db) * db + i % db).collect()
    }

    #[test]
    fn split_product_is_multiplicative() {
        let ext = suq2_model(0.5, 6, 3, 0.5).unwrap();
        let gens: Vec<_> = ext.letters().unwrap();
        for (_, g) in &gens {
            for (_, h) in &gens {
                let gh = ext.mul(g, h).unwrap();
                let lhs = ext.pi(&gh).unwrap();
                let rhs = ext.pi(g).unwrap().compose(&ext.pi(h).unwrap()).unwrap();
                assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
                let ls = ext.pi_sigma(&gh).unwrap();
                let rs = ext.pi_sigma(g).unwrap().compose(&ext.pi_sigma(h).unwrap()).unwrap();
                assert!(ls.max_abs_diff(&rs).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn toeplitz_generator_is_unilateral_shift() {
        let ext = toeplitz_model(4, 0.5).unwrap();
        let t = ext.generator("T").unwrap();
        assert_eq!(t.x().max_abs(), 0.0);
        let tt = ext.mul(&t.adjoint(), t).unwrap();
        // T*T has no ideal part, TT* = I − e₀e₀* on PH.
        assert!(tt.x().max_abs() < 1e-15);
        let ttd = ext.mul(t, &t.adjoint()).unwrap();
        assert!((ttd.x().entry(4, 4).re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn toeplitz_commutator_with_projection_has_rank_one() {
        let ext = toeplitz_model(6, 0.5).unwrap();
        let t = ext.quotient().generator("T").unwrap();
        let k = commutator(ext.projection(), t).unwrap();
        let sv = k.mat().singular_values().unwrap();
        assert_eq!(sv.iter().filter(|&&s| s > 1e-12).count(), 1);
        assert!((opnorm(&k).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_basis_is_hermitian_and_distinct() {
        let ext = podles_model(0.5, 6, 0.5).unwrap();
        let basis = ext.hermitian_basis(2, 3).unwrap();
        assert!(basis.len() > 6);
        for (name, e) in &basis {
            assert!(e.is_hermitian(), "{name}");
            ext.ensure_contains(e).unwrap();
        }
    }
}
