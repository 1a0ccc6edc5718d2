use std::fmt;

use faer::c64;

use crate::error::{Error, Result};
use crate::linop::{BasisLabel, LinOp};
use crate::models::{ExtensionModel, SplitElement};

/// Representation a vector state is taken in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rep {
    /// π on H_A ⊗ H_B.
    Pi,
    /// π_σ, evaluated on the symbol a acting on H_A.
    PiSigma,
}

#[derive(Debug, Clone, PartialEq)]
pub enum State {
    /// ω(Tⁿ) = e^{inθ} on the circle, read off the symbol.
    PointOnCircle { theta: f64 },
    VectorState { psi: Vec<c64>, rep: Rep, label: Option<String> },
    /// δ₁ or δ₂ on the two-point space.
    QubitPoint { index: u8 },
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            State::PointOnCircle { theta } => write!(f, "theta:{theta}"),
            State::VectorState { psi, rep, label } => {
                let tag = match rep {
                    Rep::Pi => "pi",
                    Rep::PiSigma => "pisigma",
                };
                match label {
                    Some(l) => write!(f, "{l}"),
                    None => write!(f, "{tag}:vector[{}]", psi.len()),
                }
            }
            State::QubitPoint { index } => write!(f, "delta{index}"),
        }
    }
}

fn unit(dim: usize, index: usize) -> Vec<c64> {
    (0..dim).map(|i| c64::new(if i == index { 1.0 } else { 0.0 }, 0.0)).collect()
}

impl State {
    pub fn point(theta: f64) -> Self {
        State::PointOnCircle { theta }
    }

    /// Vector state ψ; normalized here.
    pub fn vector(psi: Vec<c64>, rep: Rep) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::contract("vector state needs a nonzero finite vector"));
        }
        let psi = if norm == 1.0 { psi } else { psi.into_iter().map(|z| z / norm).collect() };
        Ok(State::VectorState { psi, rep, label: None })
    }

    pub fn basis_vector(dim: usize, index: usize, rep: Rep) -> Result<Self> {
        if index >= dim {
            return Err(Error::contract(format!("basis index {index} out of range for dimension {dim}")));
        }
        let tag = match rep {
            Rep::Pi => "pi",
            Rep::PiSigma => "pisigma",
        };
        Ok(State::VectorState { psi: unit(dim, index), rep, label: Some(format!("{tag}:{index}")) })
    }

    pub fn qubit(index: u8) -> Result<Self> {
        if index == 1 || index == 2 {
            Ok(State::QubitPoint { index })
        } else {
            Err(Error::contract("qubit point index must be 1 or 2"))
        }
    }

    /// Parses `delta1`, `delta2`, `theta:<radians>` (or `theta:pi`),
    /// `pi:<index>` and `pisigma:<index>`. `pi:k` is the k-th basis vector of
    /// PH_A ⊗ H_B, where π acts unitally; `pisigma:k` is the k-th basis vector
    /// of H_A. Basis-vector tokens need an extension model.
    pub fn parse(token: &str, ext: Option<&ExtensionModel>) -> Result<Self> {
        let token = token.trim();
        match token {
            "delta1" => return State::qubit(1),
            "delta2" => return State::qubit(2),
            _ => {}
        }
        let (head, tail) = token
            .split_once(':')
            .ok_or_else(|| Error::contract(format!("unrecognized state token '{token}'")))?;
        match head {
            "theta" => {
                let theta = match tail {
                    "pi" => std::f64::consts::PI,
                    "-pi" => -std::f64::consts::PI,
                    t => t.parse::<f64>().map_err(|_| Error::contract(format!("bad angle '{t}'")))?,
                };
                Ok(State::point(theta))
            }
            "pi" | "pisigma" => {
                let index: usize = tail.parse().map_err(|_| Error::contract(format!("bad basis index '{tail}'")))?;
                let ext = ext.ok_or_else(|| Error::contract("vector states need an extension model"))?;
                if head == "pi" {
                    let support: Vec<usize> =
                        ext.support_mask().iter().enumerate().filter(|p| *p.1).map(|p| p.0).collect();
                    let at = *support.get(index).ok_or_else(|| {
                        Error::contract(format!("basis index {index} out of range for dimension {}", support.len()))
                    })?;
                    let psi = unit(ext.total_space().dim(), at);
                    Ok(State::VectorState { psi, rep: Rep::Pi, label: Some(format!("pi:{index}")) })
                } else {
                    State::basis_vector(ext.quotient().space().dim(), index, Rep::PiSigma)
                }
            }
            _ => Err(Error::contract(format!("unrecognized state token '{token}'"))),
        }
    }

    /// ω(e) for an element of an extension model.
    pub fn evaluate_split(&self, ext: &ExtensionModel, e: &SplitElement) -> Result<c64> {
        match self {
            State::PointOnCircle { theta } => fourier_functional(e.a(), *theta),
            State::VectorState { psi, rep, .. } => match rep {
                Rep::Pi => expectation(&ext.pi(e)?, psi),
                Rep::PiSigma => expectation(e.a(), psi),
            },
            State::QubitPoint { .. } => Err(Error::contract("qubit points are states of the two-point triple")),
        }
    }

    /// ω(a) for an operator of a plain triple.
    pub fn evaluate_op(&self, a: &LinOp) -> Result<c64> {
        match self {
            State::PointOnCircle { theta } => fourier_functional(a, *theta),
            State::VectorState { psi, .. } => expectation(a, psi),
            State::QubitPoint { index } => {
                if a.dim() != 2 {
                    return Err(Error::contract("qubit points need a two-dimensional space"));
                }
                let i = (*index - 1) as usize;
                Ok(a.entry(i, i))
            }
        }
    }
}

fn expectation(a: &LinOp, psi: &[c64]) -> Result<c64> {
    if psi.len() != a.dim() {
        return Err(Error::SpaceMismatch(format!("state vector has length {}, operator dimension {}", psi.len(), a.dim())));
    }
    let m = a.mat();
    let mut acc = c64::new(0.0, 0.0);
    for c in 0..psi.len() {
        if psi[c] == c64::new(0.0, 0.0) {
            continue;
        }
        for r in 0..psi.len() {
            acc += psi[r].conj() * m[(r, c)] * psi[c];
        }
    }
    Ok(acc)
}

/// Σₖ cₖ e^{ikθ} where cₖ are the entries of the central column of a
/// Laurent-type operator on ℓ²(ℤ).
fn fourier_functional(a: &LinOp, theta: f64) -> Result<c64> {
    let space = a.space();
    let centre = space
        .index_of(&BasisLabel::Line(0))
        .ok_or_else(|| Error::contract("point states need an operator on a Line space"))?;
    let mut acc = c64::new(0.0, 0.0);
    for r in 0..a.dim() {
        let v = a.entry(r, centre);
        if v != c64::new(0.0, 0.0) {
            let k = space.position(r).unwrap_or(0) as f64;
            acc += v * c64::new((k * theta).cos(), (k * theta).sin());
        }
    }
    Ok(acc)
}
