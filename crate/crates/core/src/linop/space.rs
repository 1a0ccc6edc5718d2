use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Shape of a finite orthonormal basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpaceKind {
    /// Truncated ℓ²(ℕ₀) with basis e₀..e_{N−1}.
    HalfLine { cutoff: usize },
    /// Windowed ℓ²(ℤ) with basis e_{−W}..e_{W}.
    Line { window: usize },
    /// ℂ².
    Qubit,
    /// Tensor product; index = i_left · dim(right) + i_right.
    Product(Arc<BasisSpace>, Arc<BasisSpace>),
    /// Orthogonal direct sum; summands are laid out consecutively.
    DirectSum(Vec<Arc<BasisSpace>>),
}

/// Label of a single basis vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisLabel {
    Half(usize),
    Line(i64),
    Qubit(u8),
    Pair(Box<BasisLabel>, Box<BasisLabel>),
    Summand(usize, Box<BasisLabel>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisSpace {
    kind: SpaceKind,
    dim: usize,
}

impl BasisSpace {
    pub fn half_line(cutoff: usize) -> Result<Arc<Self>> {
        if cutoff == 0 {
            return Err(Error::contract("half-line cutoff must be positive"));
        }
        Ok(Arc::new(BasisSpace { kind: SpaceKind::HalfLine { cutoff }, dim: cutoff }))
    }

    pub fn line(window: usize) -> Arc<Self> {
        Arc::new(BasisSpace { kind: SpaceKind::Line { window }, dim: 2 * window + 1 })
    }

    pub fn qubit() -> Arc<Self> {
        Arc::new(BasisSpace { kind: SpaceKind::Qubit, dim: 2 })
    }

    pub fn product(left: &Arc<Self>, right: &Arc<Self>) -> Result<Arc<Self>> {
        let dim = left
            .dim
            .checked_mul(right.dim)
            .ok_or(Error::DimensionCap { dim: usize::MAX, cap: usize::MAX })?;
        Ok(Arc::new(BasisSpace {
            kind: SpaceKind::Product(Arc::clone(left), Arc::clone(right)),
            dim,
        }))
    }

    pub fn direct_sum(parts: Vec<Arc<Self>>) -> Result<Arc<Self>> {
        if parts.is_empty() {
            return Err(Error::contract("direct sum needs at least one summand"));
        }
        let dim = parts.iter().map(|p| p.dim).sum();
        Ok(Arc::new(BasisSpace { kind: SpaceKind::DirectSum(parts), dim }))
    }

    /// `count` copies of `part`.
    pub fn power(part: &Arc<Self>, count: usize) -> Result<Arc<Self>> {
        Self::direct_sum(vec![Arc::clone(part); count])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn index_of(&self, label: &BasisLabel) -> Option<usize> {
        match (&self.kind, label) {
            (SpaceKind::HalfLine { cutoff }, BasisLabel::Half(k)) => (*k < *cutoff).then_some(*k),
            (SpaceKind::Line { window }, BasisLabel::Line(n)) => {
                let w = *window as i64;
                (-w..=w).contains(n).then(|| (n + w) as usize)
            }
            (SpaceKind::Qubit, BasisLabel::Qubit(i)) => (*i < 2).then_some(*i as usize),
            (SpaceKind::Product(l, r), BasisLabel::Pair(a, b)) => {
                Some(l.index_of(a)? * r.dim + r.index_of(b)?)
            }
            (SpaceKind::DirectSum(parts), BasisLabel::Summand(s, inner)) => {
                let part = parts.get(*s)?;
                let offset: usize = parts[..*s].iter().map(|p| p.dim).sum();
                Some(offset + part.index_of(inner)?)
            }
            _ => None,
        }
    }

    pub fn label_of(&self, index: usize) -> Option<BasisLabel> {
        if index >= self.dim {
            return None;
        }
        Some(match &self.kind {
            SpaceKind::HalfLine { .. } => BasisLabel::Half(index),
            SpaceKind::Line { window } => BasisLabel::Line(index as i64 - *window as i64),
            SpaceKind::Qubit => BasisLabel::Qubit(index as u8),
            SpaceKind::Product(l, r) => BasisLabel::Pair(
                Box::new(l.label_of(index / r.dim)?),
                Box::new(r.label_of(index % r.dim)?),
            ),
            SpaceKind::DirectSum(parts) => {
                let mut offset = 0;
                let mut found = None;
                for (s, p) in parts.iter().enumerate() {
                    if index < offset + p.dim {
                        found = Some(BasisLabel::Summand(s, Box::new(p.label_of(index - offset)?)));
                        break;
                    }
                    offset += p.dim;
                }
                found?
            }
        })
    }

    /// Offset of summand `s` inside a direct sum.
    pub fn summand_offset(&self, s: usize) -> Option<usize> {
        match &self.kind {
            SpaceKind::DirectSum(parts) if s < parts.len() => {
                Some(parts[..s].iter().map(|p| p.dim).sum())
            }
            _ => None,
        }
    }

    /// Integer position carried by a Line or HalfLine basis vector.
    pub fn position(&self, index: usize) -> Option<i64> {
        match &self.kind {
            SpaceKind::HalfLine { cutoff } => (index < *cutoff).then_some(index as i64),
            SpaceKind::Line { window } => {
                (index < self.dim).then_some(index as i64 - *window as i64)
            }
            _ => None,
        }
    }
}

impl fmt::Display for BasisSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SpaceKind::HalfLine { cutoff } => write!(f, "HalfLine({cutoff})"),
            SpaceKind::Line { window } => write!(f, "Line({window})"),
            SpaceKind::Qubit => write!(f, "Qubit"),
            SpaceKind::Product(l, r) => write!(f, "({l} ⊗ {r})"),
            SpaceKind::DirectSum(parts) => {
                write!(f, "(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ⊕ ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ")")
            }
        }
    }
}
