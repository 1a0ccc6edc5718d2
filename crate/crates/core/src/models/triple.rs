use std::collections::BTreeMap;
use std::sync::Arc;

use faer::c64;

use crate::error::{Error, Result};
use crate::linop::{eig_hermitian, BasisSpace, LinOp, SpaceKind, Spectrum};

/// A truncated spectral triple: a space, named generators and a Dirac operator.
#[derive(Debug, Clone)]
pub struct TripleModel {
    name: String,
    space: Arc<BasisSpace>,
    generators: BTreeMap<String, LinOp>,
    dirac: LinOp,
    dirac_eigs: Spectrum,
    smooth_set: Vec<String>,
}

impl TripleModel {
    pub fn new(name: &str, dirac: LinOp, generators: BTreeMap<String, LinOp>) -> Result<Self> {
        if !dirac.is_hermitian() {
            return Err(Error::contract("Dirac operator must be Hermitian"));
        }
        for (g, op) in &generators {
            if op.space() != dirac.space() {
                return Err(Error::SpaceMismatch(format!("generator {g} is not on the Dirac space")));
            }
        }
        let dirac_eigs = eig_hermitian(&dirac)?;
        let smooth_set = generators.keys().cloned().collect();
        Ok(TripleModel {
            name: name.to_string(),
            space: Arc::clone(dirac.space()),
            generators,
            dirac,
            dirac_eigs,
            smooth_set,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &Arc<BasisSpace> {
        &self.space
    }

    pub fn generators(&self) -> &BTreeMap<String, LinOp> {
        &self.generators
    }

    pub fn generator(&self, name: &str) -> Result<&LinOp> {
        self.generators
            .get(name)
            .ok_or_else(|| Error::contract(format!("{} has no generator {name}", self.name)))
    }

    pub fn dirac(&self) -> &LinOp {
        &self.dirac
    }

    pub fn dirac_eigs(&self) -> &Spectrum {
        &self.dirac_eigs
    }

    /// Generator names whose commutator with the Dirac operator is bounded.
    pub fn smooth_set(&self) -> &[String] {
        &self.smooth_set
    }

    /// Diagonal of the Dirac operator (all model Diracs built here are diagonal
    /// except the two-point one).
    pub fn dirac_diagonal(&self) -> Vec<f64> {
        (0..self.space.dim()).map(|i| self.dirac.entry(i, i).re).collect()
    }

    /// Indicator of n ≥ 0 on a windowed line.
    pub fn nonnegative_projection(&self) -> Result<LinOp> {
        match self.space.kind() {
            SpaceKind::Line { .. } => {
                let d: Vec<f64> = (0..self.space.dim())
                    .map(|i| if self.space.position(i).unwrap_or(-1) >= 0 { 1.0 } else { 0.0 })
                    .collect();
                LinOp::diagonal(&self.space, &d)
            }
            _ => Err(Error::contract("projection onto n ≥ 0 needs a line space")),
        }
    }
}

fn zero() -> c64 {
    c64::new(0.0, 0.0)
}

fn one() -> c64 {
    c64::new(1.0, 0.0)
}

/// Truncated bilateral shift T e_n = e_{n+1} on Line(W); e_W ↦ 0.
pub fn bilateral_shift(space: &Arc<BasisSpace>) -> Result<LinOp> {
    LinOp::from_fn(space, |i, j| if i == j + 1 { one() } else { zero() })
}

/// Circle triple on Line(W) with Dirac n + λ.
pub fn circle_triple(window: usize, lambda: f64) -> Result<TripleModel> {
    if window == 0 {
        return Err(Error::contract("circle window must be at least 1"));
    }
    let space = BasisSpace::line(window);
    let diag: Vec<f64> =
        (0..space.dim()).map(|i| space.position(i).unwrap_or(0) as f64 + lambda).collect();
    let dirac = LinOp::diagonal(&space, &diag)?;
    let t = bilateral_shift(&space)?;
    let mut gens = BTreeMap::new();
    gens.insert("T*".to_string(), t.adjoint());
    gens.insert("T".to_string(), t);
    TripleModel::new("circle", dirac, gens)
}

/// The two-point triple on ℂ² with Dirac γ = [[0,1],[1,0]].
pub fn two_point_triple() -> Result<TripleModel> {
    let space = BasisSpace::qubit();
    let gamma = LinOp::from_fn(&space, |i, j| if i != j { one() } else { zero() })?;
    let mut gens = BTreeMap::new();
    gens.insert("p1".to_string(), LinOp::diagonal(&space, &[1.0, 0.0])?);
    gens.insert("p2".to_string(), LinOp::diagonal(&space, &[0.0, 1.0])?);
    TripleModel::new("two_point", gamma, gens)
}

/// The one-point triple (ℂ, ℂ, 0).
pub fn point_triple() -> Result<TripleModel> {
    let space = BasisSpace::half_line(1)?;
    let dirac = LinOp::zeros(&space)?;
    TripleModel::new("point", dirac, BTreeMap::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{commutator, opnorm};

    #[test]
    fn circle_small_dirac() {
        let c = circle_triple(1, 0.0).unwrap();
        assert_eq!(c.dirac_diagonal(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(c.dirac_eigs().expanded(), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn circle_commutator_is_shift_on_interior() {
        let c = circle_triple(2, 0.0).unwrap();
        let t = c.generator("T").unwrap();
        let k = commutator(c.dirac(), t).unwrap();
        // [M, T] e_n = T e_n for every n whose image stays in the window.
        assert!(k.max_abs_diff(t).unwrap() < 1e-15);
        assert!((opnorm(&k).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circle_projection_margin() {
        let c = circle_triple(8, 0.5).unwrap();
        let p = c.nonnegative_projection().unwrap();
        let d = c.dirac_diagonal();
        let min = (0..d.len()).filter(|&i| p.entry(i, i).re == 1.0).map(|i| d[i].abs()).fold(f64::INFINITY, f64::min);
        assert_eq!(min, 0.5);
    }

    #[test]
    fn two_point_basics() {
        let t = two_point_triple().unwrap();
        assert_eq!(t.dirac_eigs().expanded(), vec![-1.0, 1.0]);
        let k = commutator(t.dirac(), t.generator("p1").unwrap()).unwrap();
        assert!((opnorm(&k).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn point_triple_is_trivial() {
        let p = point_triple().unwrap();
        assert_eq!(p.space().dim(), 1);
        assert_eq!(p.dirac_eigs().expanded(), vec![0.0]);
    }
}
