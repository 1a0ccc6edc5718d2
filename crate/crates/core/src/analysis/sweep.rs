use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dirac::{build_bundle, commutator_norms};
use crate::error::{Error, Result};
use crate::models::{podles_model, suq2_model, toeplitz_model, ExtensionModel};

/// Model family swept over the cutoff N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SweepFamily {
    Suq2 { q: f64, w: usize, lambda: f64 },
    Podles { q: f64, lambda: f64 },
    /// The Toeplitz extension; the cutoff is used as the circle window.
    Toeplitz { lambda: f64 },
}

impl SweepFamily {
    pub fn build(&self, n: usize) -> Result<ExtensionModel> {
        match *self {
            SweepFamily::Suq2 { q, w, lambda } => suq2_model(q, n, w, lambda),
            SweepFamily::Podles { q, lambda } => podles_model(q, n, lambda),
            SweepFamily::Toeplitz { lambda } => toeplitz_model(n, lambda),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub size: usize,
    pub norm_d1: f64,
    pub norm_di: f64,
    /// L at this size over L at the previous size.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub generator: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,norm_d1,norm_di,ratio\n");
        for r in &self.rows {
            let ratio = r.ratio.map(|v| format!("{v:.16e}")).unwrap_or_default();
            let _ = writeln!(out, "{},{:.16e},{:.16e},{}", r.size, r.norm_d1, r.norm_di, ratio);
        }
        out
    }

    /// Largest |ratio − 1| over the sweep.
    pub fn stability(&self) -> f64 {
        self.rows.iter().filter_map(|r| r.ratio).map(|v| (v - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// ‖[D1, Π1(g)]‖ and ‖[D_I, Π2(g)⊕Π2(g)]‖ for a fixed generator across a
/// strictly increasing ladder of cutoffs. `"I"` names the identity.
pub fn commutator_norm_sweep(family: &SweepFamily, generator: &str, ladder: &[usize]) -> Result<SweepTable> {
    if ladder.len() < 3 {
        return Err(Error::contract("ladder needs at least three sizes"));
    }
    if ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::contract("ladder must be strictly increasing"));
    }
    let mut rows: Vec<SweepRow> = Vec::with_capacity(ladder.len());
    let mut prev: Option<f64> = None;
    for &n in ladder {
        let ext = family.build(n)?;
        let e = if generator == "I" { ext.identity_element()? } else { ext.generator(generator)?.clone() };
        let bundle = build_bundle(ext)?;
        let (norm_d1, norm_di) = commutator_norms(&bundle, &e)?;
        let l = norm_d1.max(norm_di);
        let ratio = prev.map(|p| if p == 0.0 && l == 0.0 { 1.0 } else { l / p });
        rows.push(SweepRow { size: n, norm_d1, norm_di, ratio });
        prev = Some(l);
    }
    Ok(SweepTable { generator: generator.to_string(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_zero_norms() {
        let t = commutator_norm_sweep(&SweepFamily::Podles { q: 0.5, lambda: 0.5 }, "I", &[4, 8, 16]).unwrap();
        assert!(t.rows.iter().all(|r| r.norm_d1 == 0.0 && r.norm_di == 0.0));
        assert_eq!(t.rows[0].ratio, None);
        assert_eq!(t.rows[2].ratio, Some(1.0));
    }

    #[test]
    fn podles_alpha_is_stable() {
        let t = commutator_norm_sweep(&SweepFamily::Podles { q: 0.5, lambda: 0.5 }, "alpha", &[8, 16, 32]).unwrap();
        assert!(t.stability() < 0.05, "{t:?}");
        assert!(t.rows[2].norm_d1 > 0.0);
    }

    #[test]
    fn bad_ladders_are_refused() {
        let f = SweepFamily::Toeplitz { lambda: 0.5 };
        assert!(commutator_norm_sweep(&f, "T", &[4, 8]).is_err());
        assert!(commutator_norm_sweep(&f, "T", &[4, 8, 8]).is_err());
        assert!(commutator_norm_sweep(&f, "nope", &[4, 8, 16]).is_err());
    }

    #[test]
    fn csv_header() {
        let t = commutator_norm_sweep(&SweepFamily::Toeplitz { lambda: 0.5 }, "T", &[4, 8, 16]).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("size,norm_d1,norm_di,ratio\n4,"));
        assert_eq!(csv.lines().count(), 4);
    }
}
