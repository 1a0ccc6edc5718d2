use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distance::{DistanceOptions, Geometry, LipschitzProblem};
use super::state::State;
use crate::analysis::sampling::{SampleBasis, SamplingConfig};
use crate::dirac::build_bundle;
use crate::error::{Error, Result};
use crate::models::{podles_model, suq2_model, ExtensionModel};

/// Quantum-sphere family rebuilt at every q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SphereFamily {
    Suq2 { n: usize, w: usize, lambda: f64 },
    Podles { n: usize, lambda: f64 },
}

impl SphereFamily {
    pub fn build(&self, q: f64) -> Result<ExtensionModel> {
        match *self {
            SphereFamily::Suq2 { n, w, lambda } => suq2_model(q, n, w, lambda),
            SphereFamily::Podles { n, lambda } => podles_model(q, n, lambda),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub id: String,
    pub first: State,
    pub second: State,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSweepRow {
    pub q: f64,
    pub pair_id: String,
    pub distance: Option<f64>,
    pub seminorm_at_witness: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSweepTable {
    pub rows: Vec<QSweepRow>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

impl QSweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,pair_id,distance,seminorm_at_witness,iterations,converged\n");
        for r in &self.rows {
            let it = r.iterations.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{:.16e},{},{},{},{},{}",
                r.q,
                r.pair_id,
                opt(r.distance),
                opt(r.seminorm_at_witness),
                it,
                r.converged
            );
        }
        out
    }

    /// Largest |d(q_k) − d(q_{k−1})| per pair over adjacent grid points.
    pub fn max_adjacent_jump(&self, pair_id: &str) -> f64 {
        let vals: Vec<f64> = self.rows.iter().filter(|r| r.pair_id == pair_id).filter_map(|r| r.distance).collect();
        vals.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
    }
}

fn solve_at(family: &SphereFamily, q: f64, pairs: &[StatePair], cfg: &SamplingConfig, opts: &DistanceOptions) -> Vec<QSweepRow> {
    let fail = |msg: String| -> Vec<QSweepRow> {
        pairs
            .iter()
            .map(|p| QSweepRow {
                q,
                pair_id: p.id.clone(),
                distance: None,
                seminorm_at_witness: None,
                iterations: None,
                converged: false,
                error: Some(msg.clone()),
            })
            .collect()
    };
    let setup = (|| -> Result<_> {
        let ext = family.build(q)?;
        let basis = SampleBasis::from_model(&ext, cfg)?;
        Ok((build_bundle(ext)?, basis))
    })();
    let (bundle, basis) = match setup {
        Ok(v) => v,
        Err(e) => return fail(e.to_string()),
    };
    let problem = match LipschitzProblem::new(Geometry::Bundle { bundle: &bundle, basis: basis.elements() }) {
        Ok(p) => p,
        Err(e) => return fail(e.to_string()),
    };
    pairs
        .iter()
        .map(|p| match problem.distance(&p.first, &p.second, opts) {
            Ok(r) => QSweepRow {
                q,
                pair_id: p.id.clone(),
                distance: Some(r.value),
                seminorm_at_witness: Some(r.seminorm_at_witness),
                iterations: Some(r.iterations),
                converged: r.converged,
                error: None,
            },
            Err(e) => QSweepRow {
                q,
                pair_id: p.id.clone(),
                distance: None,
                seminorm_at_witness: None,
                iterations: None,
                converged: false,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

/// Distances for fixed state pairs as q varies; exploratory data only.
pub fn q_sweep(
    family: &SphereFamily,
    q_grid: &[f64],
    pairs: &[StatePair],
    cfg: &SamplingConfig,
    opts: &DistanceOptions,
) -> Result<QSweepTable> {
    if q_grid.is_empty() {
        return Err(Error::contract("q grid is empty"));
    }
    if let Some(q) = q_grid.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
        return Err(Error::contract(format!("q = {q} is outside (0, 1)")));
    }
    let rows: Vec<Vec<QSweepRow>> = q_grid.par_iter().map(|&q| solve_at(family, q, pairs, cfg, opts)).collect();
    Ok(QSweepTable { rows: rows.into_iter().flatten().collect() })
}

/// q values from `from` to `to` inclusive in steps of `step`.
pub fn q_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && from <= to) {
        return Err(Error::contract("q grid needs step > 0 and from ≤ to"));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| from + step * k as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(id: &str, a: &str, b: &str) -> StatePair {
        StatePair { id: id.into(), first: State::parse(a, None).unwrap(), second: State::parse(b, None).unwrap() }
    }

    fn opts() -> DistanceOptions {
        DistanceOptions { max_iter: 4000, ..Default::default() }
    }

    const CFG: SamplingConfig = SamplingConfig { degree: 1, fourier_degree: 3 };

    #[test]
    fn grid_is_inclusive() {
        let g = q_grid(0.3, 0.5, 0.05).unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[4] - 0.5).abs() < 1e-12);
        assert!(q_grid(0.5, 0.3, 0.1).is_err());
    }

    #[test]
    fn identical_states_give_zero_everywhere() {
        let fam = SphereFamily::Podles { n: 4, lambda: 0.5 };
        let t = q_sweep(&fam, &[0.3, 0.6], &[pair("same", "theta:0.4", "theta:0.4")], &CFG, &opts()).unwrap();
        assert_eq!(t.rows.len(), 2);
        for r in &t.rows {
            assert_eq!(r.distance, Some(0.0));
        }
    }

    #[test]
    fn single_point_matches_standalone() {
        let fam = SphereFamily::Podles { n: 4, lambda: 0.5 };
        let p = pair("ends", "theta:0", "theta:pi");
        let swept = q_sweep(&fam, &[0.2, 0.5, 0.7], std::slice::from_ref(&p), &CFG, &opts()).unwrap();
        let ext = fam.build(0.5).unwrap();
        let basis = SampleBasis::from_model(&ext, &CFG).unwrap();
        let bundle = build_bundle(ext).unwrap();
        let problem = LipschitzProblem::new(Geometry::Bundle { bundle: &bundle, basis: basis.elements() }).unwrap();
        let alone = problem.distance(&p.first, &p.second, &opts()).unwrap();
        assert_eq!(swept.rows[1].distance.unwrap().to_bits(), alone.value.to_bits());
    }

    #[test]
    fn podles_distances_vary_slowly() {
        let fam = SphereFamily::Podles { n: 4, lambda: 0.5 };
        let grid = q_grid(0.3, 0.5, 0.05).unwrap();
        let t = q_sweep(&fam, &grid, &[pair("ends", "theta:0", "theta:pi")], &CFG, &opts()).unwrap();
        assert!(t.rows.iter().all(|r| r.error.is_none()));
        assert!(t.max_adjacent_jump("ends") <= 0.1, "{}", t.to_csv());
        assert!(t.to_csv().starts_with("q,pair_id,distance"));
    }

    #[test]
    fn q_outside_unit_interval_is_refused() {
        let fam = SphereFamily::Podles { n: 4, lambda: 0.5 };
        assert!(q_sweep(&fam, &[1.0], &[pair("x", "theta:0", "theta:1")], &CFG, &opts()).is_err());
    }
}
