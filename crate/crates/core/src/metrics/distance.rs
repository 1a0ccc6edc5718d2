use faer::{c64, Mat, Side};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::state::State;
use crate::analysis::sampling::sample_stream;
use crate::dirac::{commutator_blocks, commutator_norms, commutator_norms_dense, DiracBundle};
use crate::error::{Error, Result};
use crate::linop::{commutator, hermitian_defect, matmul, opnorm, opnorm_mat, LinOp};
use crate::models::{SplitElement, TripleModel};

/// L(e) = max(‖[D1, Π₁(e)]‖, ‖[D_I, Π₂(e) ⊕ Π₂(e)]‖) from the block formulas.
pub fn seminorm_l(bundle: &DiracBundle, e: &SplitElement) -> Result<f64> {
    let (a, b) = commutator_norms(bundle, e)?;
    Ok(a.max(b))
}

/// L(e) from dense D1, D_I and Π; for cross-checks at small size.
pub fn seminorm_l_dense(bundle: &DiracBundle, e: &SplitElement) -> Result<f64> {
    let (a, b) = commutator_norms_dense(bundle, e)?;
    Ok(a.max(b))
}

/// ‖[D, a]‖ on a plain triple.
pub fn triple_seminorm(triple: &TripleModel, a: &LinOp) -> Result<f64> {
    opnorm(&commutator(triple.dirac(), a)?)
}

/// Hermitian basis of a plain triple: cos and sin of Tᵏ for k ≤ `fourier_degree`
/// when the triple has a shift generator, otherwise the Hermitian parts of the
/// generators.
pub fn triple_basis(triple: &TripleModel, fourier_degree: usize) -> Result<Vec<(String, LinOp)>> {
    let mut out = Vec::new();
    if let Ok(t) = triple.generator("T") {
        let mut power = t.clone();
        for k in 1..=fourier_degree {
            out.push((format!("cos[{k}]"), power.hermitian_part()));
            out.push((format!("sin[{k}]"), power.skew_part()));
            power = power.compose(t)?;
        }
    } else {
        for (name, g) in triple.generators() {
            let h = g.hermitian_part();
            if h.max_abs() > 0.0 {
                out.push((name.clone(), h));
            }
        }
    }
    Ok(out)
}

/// Where the seminorm and the states come from.
#[derive(Debug, Clone, Copy)]
pub enum Geometry<'a> {
    Bundle { bundle: &'a DiracBundle, basis: &'a [SplitElement] },
    Triple { triple: &'a TripleModel, basis: &'a [LinOp] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceOptions {
    pub seed: u64,
    pub max_iter: usize,
    /// Stall window for the relative-change stopping rule.
    pub window: usize,
    pub rel_tol: f64,
    pub restarts: usize,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        DistanceOptions { seed: 0, max_iter: 20000, window: 50, rel_tol: 1e-8, restarts: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub value: f64,
    /// Coefficients of the witness over the input basis.
    pub witness: Vec<f64>,
    pub seminorm_at_witness: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final target gap of the Polyak step of the best restart.
    pub gap_estimate: f64,
}

/// Sparse copy of one commutator component for one basis element.
#[derive(Debug, Clone)]
struct Terms(Vec<(u32, u32, c64)>);

#[derive(Debug, Clone)]
struct Component {
    dim: usize,
    anti_hermitian: bool,
    terms: Vec<Terms>,
}

fn sparse(m: &LinOp, scale: f64) -> Terms {
    let mat = m.mat();
    let mut out = Vec::new();
    for c in 0..mat.ncols() {
        for r in 0..mat.nrows() {
            let v = mat[(r, c)];
            if v != c64::new(0.0, 0.0) {
                out.push((r as u32, c as u32, v * scale));
            }
        }
    }
    Terms(out)
}

/// The seminorm as a maximum of spectral norms of linear maps of the
/// coefficient vector, with basis elements rescaled to unit seminorm.
#[derive(Debug, Clone)]
pub struct LipschitzProblem<'a> {
    geometry: Geometry<'a>,
    components: Vec<Component>,
    /// Seminorm of each input basis element.
    scales: Vec<f64>,
    /// Input indices kept after dropping scalar directions.
    active: Vec<usize>,
}

const SCALAR_TOL: f64 = 1e-10;

impl<'a> LipschitzProblem<'a> {
    pub fn new(geometry: Geometry<'a>) -> Result<Self> {
        let per_element: Vec<Vec<LinOp>> = match geometry {
            Geometry::Bundle { bundle, basis } => basis
                .par_iter()
                .map(|e| {
                    if !e.is_hermitian() {
                        return Err(Error::contract("distance basis elements must be Hermitian"));
                    }
                    let b = commutator_blocks(bundle, e)?;
                    Ok(vec![b.quotient, b.c_plus])
                })
                .collect::<Result<_>>()?,
            Geometry::Triple { triple, basis } => basis
                .par_iter()
                .map(|a| {
                    if !a.is_hermitian() {
                        return Err(Error::contract("distance basis elements must be Hermitian"));
                    }
                    Ok(vec![commutator(triple.dirac(), a)?])
                })
                .collect::<Result<_>>()?,
        };
        if per_element.is_empty() {
            return Err(Error::contract("distance basis is empty"));
        }
        let scales: Vec<f64> = per_element
            .par_iter()
            .map(|ops| ops.iter().try_fold(0.0f64, |m, op| Ok::<_, Error>(m.max(opnorm(op)?))))
            .collect::<Result<_>>()?;
        let top = scales.iter().copied().fold(0.0, f64::max);
        let active: Vec<usize> = (0..scales.len()).filter(|&i| scales[i] > SCALAR_TOL * top.max(1.0)).collect();
        let count = per_element[0].len();
        let mut components = Vec::with_capacity(count);
        for k in 0..count {
            let first = &per_element[0][k];
            let anti = per_element.iter().all(|ops| {
                let m = &ops[k];
                hermitian_defect(m.scale(c64::new(0.0, 1.0)).mat()) <= 1e-13 * m.max_abs().max(1.0)
            });
            components.push(Component {
                dim: first.dim(),
                anti_hermitian: anti,
                terms: active.iter().map(|&i| sparse(&per_element[i][k], 1.0 / scales[i])).collect(),
            });
        }
        Ok(LipschitzProblem { geometry, components, scales, active })
    }

    pub fn basis_len(&self) -> usize {
        self.scales.len()
    }

    /// Seminorm of each input basis element.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// L(Σ cᵢ hᵢ) for coefficients over the input basis.
    pub fn seminorm(&self, coeffs: &[f64]) -> Result<f64> {
        if coeffs.len() != self.scales.len() {
            return Err(Error::contract("coefficient vector length does not match the basis"));
        }
        let y: Vec<f64> = self.active.iter().map(|&i| coeffs[i] * self.scales[i]).collect();
        let mut best = 0.0f64;
        for comp in &self.components {
            best = best.max(opnorm_mat(assemble(comp, &y).as_ref())?);
        }
        Ok(best)
    }

    /// (ω₁ − ω₂)(hᵢ) for every input basis element.
    pub fn functional(&self, w1: &State, w2: &State) -> Result<Vec<f64>> {
        match self.geometry {
            Geometry::Bundle { bundle, basis } => {
                let ext = bundle.source();
                basis.iter().map(|e| Ok((w1.evaluate_split(ext, e)? - w2.evaluate_split(ext, e)?).re)).collect()
            }
            Geometry::Triple { basis, .. } => {
                basis.iter().map(|a| Ok((w1.evaluate_op(a)? - w2.evaluate_op(a)?).re)).collect()
            }
        }
    }

    fn decompose(&self, y: &[f64]) -> Result<Vec<Decomp>> {
        self.components.iter().map(|comp| decompose(comp, y)).collect()
    }

    /// Schatten-p norm of the stacked components and its gradient.
    fn smooth(&self, y: &[f64], p: f64) -> Result<(f64, Vec<f64>)> {
        let decs = self.decompose(y)?;
        let top = decs.iter().flat_map(|d| d.sigma.iter().copied()).fold(0.0, f64::max);
        if !(top > 0.0) {
            return Err(Error::Numerical("seminorm vanished at an iterate; L is degenerate on the span".into()));
        }
        let sum: f64 = decs.iter().flat_map(|d| d.sigma.iter()).map(|s| (s / top).powf(p)).sum();
        let value = top * sum.powf(1.0 / p);
        let norm = sum.powf((p - 1.0) / p);
        let mut grad = vec![0.0; y.len()];
        for (comp, dec) in self.components.iter().zip(&decs) {
            let w: Vec<f64> = dec.sigma.iter().map(|s| (s / top).powf(p - 1.0) / norm).collect();
            accumulate(comp, dec, &w, &mut grad);
        }
        Ok((value, grad))
    }

    /// L and one subgradient: the outer product of top singular vectors.
    fn exact(&self, y: &[f64]) -> Result<(f64, Vec<f64>)> {
        let decs = self.decompose(y)?;
        let mut best = (0.0f64, 0usize, 0usize);
        for (k, dec) in decs.iter().enumerate() {
            for (j, &s) in dec.sigma.iter().enumerate() {
                if s > best.0 {
                    best = (s, k, j);
                }
            }
        }
        let (value, k, j) = best;
        let mut grad = vec![0.0; y.len()];
        if value > 0.0 {
            let mut w = vec![0.0; decs[k].sigma.len()];
            w[j] = 1.0;
            accumulate(&self.components[k], &decs[k], &w, &mut grad);
        }
        Ok((value, grad))
    }

    /// Lower bound on the Connes distance between two states.
    pub fn distance(&self, w1: &State, w2: &State, opts: &DistanceOptions) -> Result<DistanceResult> {
        let g_full = self.functional(w1, w2)?;
        for (i, &gi) in g_full.iter().enumerate() {
            if !self.active.contains(&i) && gi.abs() > 1e-10 {
                return Err(Error::contract(format!(
                    "basis element {i} has vanishing seminorm but separates the states; L is degenerate on the span"
                )));
            }
        }
        // The sup is over |ω₁(a) − ω₂(a)| and the span is closed under a ↦ −a,
        // so both orderings solve the same problem with the sign fixed.
        let flip = self
            .active
            .iter()
            .map(|&i| g_full[i])
            .find(|v| *v != 0.0)
            .is_some_and(|v| v < 0.0);
        let sign = if flip { -1.0 } else { 1.0 };
        let g: Vec<f64> = self.active.iter().map(|&i| sign * g_full[i] / self.scales[i]).collect();
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            return Ok(DistanceResult {
                value: 0.0,
                witness: vec![0.0; self.scales.len()],
                seminorm_at_witness: 0.0,
                iterations: 0,
                converged: true,
                gap_estimate: 0.0,
            });
        }
        let starts = self.initial_points(&g, opts);
        let runs: Vec<Result<Run>> = starts.into_par_iter().map(|y0| self.ascend(&g, y0, opts)).collect();
        let runs: Vec<Run> = runs.into_iter().collect::<Result<_>>()?;
        let iterations = runs.iter().map(|r| r.iterations).sum();
        let best = runs
            .into_iter()
            .reduce(|a, b| if b.value > a.value { b } else { a })
            .expect("at least one restart");
        let mut witness = vec![0.0; self.scales.len()];
        for (j, &i) in self.active.iter().enumerate() {
            witness[i] = sign * best.y[j] / self.scales[i];
        }
        let seminorm_at_witness = self.seminorm(&witness)?;
        let value: f64 = witness.iter().zip(&g_full).map(|(c, gi)| c * gi).sum();
        Ok(DistanceResult {
            value,
            witness,
            seminorm_at_witness,
            iterations,
            converged: best.converged,
            gap_estimate: best.gap,
        })
    }

    fn initial_points(&self, g: &[f64], opts: &DistanceOptions) -> Vec<Vec<f64>> {
        let m = g.len();
        let mut out = vec![g.to_vec()];
        let j = (0..m).max_by(|&a, &b| g[a].abs().total_cmp(&g[b].abs()).then(b.cmp(&a))).unwrap_or(0);
        let mut e = vec![0.0; m];
        e[j] = g[j].signum();
        out.push(e);
        let mut k = 0u64;
        while out.len() < opts.restarts.max(1) {
            let mut rng = sample_stream(opts.seed, k);
            let mut y: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
            if y.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() < 0.0 {
                y.iter_mut().for_each(|v| *v = -*v);
            }
            out.push(y);
            k += 1;
        }
        out.truncate(opts.restarts.max(1));
        out
    }

    /// One restart: L-BFGS on the smoothed ratio for increasing p, then
    /// Polyak-stepped subgradient ascent on the exact ratio g·y / L(y).
    fn ascend(&self, g: &[f64], y0: Vec<f64>, opts: &DistanceOptions) -> Result<Run> {
        let mut budget = opts.max_iter;
        let mut y = self.normalized(y0)?;
        let mut evals = 0;
        for &p in &SCHEDULE {
            if budget == 0 {
                break;
            }
            let (ny, used) = self.lbfgs_stage(g, y, p, budget.min(STAGE_ITER))?;
            budget -= used.min(budget);
            evals += used;
            y = self.normalized(ny)?;
        }
        let dot = |y: &[f64]| y.iter().zip(g).map(|(a, b)| a * b).sum::<f64>();
        let (_, mut sub) = self.exact(&y)?;
        let mut value = dot(&y);
        let mut delta = 1e-3 * value.abs().max(1e-9);
        let mut history = vec![value];
        let mut converged = false;
        let mut iterations = 0;
        while iterations < budget {
            iterations += 1;
            let d: Vec<f64> = g.iter().zip(&sub).map(|(gi, si)| gi - value * si).collect();
            let dn2: f64 = d.iter().map(|v| v * v).sum();
            if dn2 == 0.0 {
                converged = true;
                break;
            }
            let t = delta / dn2;
            let cand = self.normalized(y.iter().zip(&d).map(|(a, b)| a + t * b).collect())?;
            let cv = dot(&cand);
            if cv > value {
                sub = self.exact(&cand)?.1;
                y = cand;
                value = cv;
                delta *= 1.5;
            } else {
                delta *= 0.5;
            }
            history.push(value);
            let n = history.len();
            if n > opts.window && (value - history[n - 1 - opts.window]).abs() <= opts.rel_tol * value.abs() {
                converged = true;
                break;
            }
        }
        Ok(Run { y, value, iterations: evals + iterations, converged, gap: delta })
    }

    /// y / L(y).
    fn normalized(&self, y: Vec<f64>) -> Result<Vec<f64>> {
        let (l, _) = self.exact(&y)?;
        if !(l > 1e-300) || !l.is_finite() {
            return Err(Error::Numerical("seminorm vanished at an iterate; L is degenerate on the span".into()));
        }
        Ok(y.into_iter().map(|v| v / l).collect())
    }

    /// Minimizes −g·y / F_p(y) by limited-memory BFGS with backtracking.
    fn lbfgs_stage(&self, g: &[f64], y0: Vec<f64>, p: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
        let objective = |y: &[f64]| -> Result<(f64, Vec<f64>)> {
            let (f, df) = self.smooth(y, p)?;
            let r = y.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() / f;
            let grad = g.iter().zip(&df).map(|(gi, di)| -(gi - r * di) / f).collect();
            Ok((-r, grad))
        };
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut y = y0;
        let (mut fx, mut gx) = objective(&y)?;
        let mut pairs: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
        let mut used = 0;
        let mut stall = 0;
        while used < max_iter {
            let mut q = gx.clone();
            let mut alphas = Vec::with_capacity(pairs.len());
            for (s, t, rho) in pairs.iter().rev() {
                let a = rho * dot(s, &q);
                q.iter_mut().zip(t).for_each(|(qi, ti)| *qi -= a * ti);
                alphas.push(a);
            }
            let gamma = match pairs.last() {
                Some((s, t, _)) => dot(s, t) / dot(t, t),
                None => 0.1 * dot(&y, &y).sqrt() / dot(&gx, &gx).sqrt().max(1e-300),
            };
            q.iter_mut().for_each(|v| *v *= gamma);
            for ((s, t, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
                let b = rho * dot(t, &q);
                q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
            }
            let mut dir: Vec<f64> = q.into_iter().map(|v| -v).collect();
            let mut slope = dot(&gx, &dir);
            if !(slope < 0.0) {
                pairs.clear();
                let scale = 0.1 * dot(&y, &y).sqrt() / dot(&gx, &gx).sqrt().max(1e-300);
                dir = gx.iter().map(|v| -v * scale).collect();
                slope = dot(&gx, &dir);
                if !(slope < 0.0) {
                    break;
                }
            }
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let cand: Vec<f64> = y.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
                used += 1;
                let (fc, gc) = objective(&cand)?;
                if fc <= fx + 1e-4 * step * slope {
                    accepted = Some((cand, fc, gc));
                    break;
                }
                step *= 0.5;
            }
            let Some((cand, fc, gc)) = accepted else { break };
            let s: Vec<f64> = cand.iter().zip(&y).map(|(a, b)| a - b).collect();
            let t: Vec<f64> = gc.iter().zip(&gx).map(|(a, b)| a - b).collect();
            let st = dot(&s, &t);
            if st > 1e-16 * dot(&s, &s).sqrt() * dot(&t, &t).sqrt() {
                pairs.push((s, t, 1.0 / st));
                if pairs.len() > MEMORY {
                    pairs.remove(0);
                }
            }
            let gain = (fx - fc) / fx.abs().max(1e-300);
            y = cand;
            fx = fc;
            gx = gc;
            stall = if gain < STAGE_TOL { stall + 1 } else { 0 };
            if stall >= 3 {
                break;
            }
        }
        Ok((y, used))
    }
}

const SCHEDULE: [f64; 8] = [8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0];
const STAGE_ITER: usize = 400;
const STAGE_TOL: f64 = 1e-10;
const MEMORY: usize = 8;

struct Run {
    y: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
    gap: f64,
}

fn assemble(comp: &Component, y: &[f64]) -> Mat<c64> {
    let mut m = Mat::<c64>::zeros(comp.dim, comp.dim);
    for (t, &c) in comp.terms.iter().zip(y) {
        if c == 0.0 {
            continue;
        }
        for &(r, col, v) in &t.0 {
            m[(r as usize, col as usize)] += v * c;
        }
    }
    m
}

/// Singular values of one component with what is needed for derivatives.
struct Decomp {
    sigma: Vec<f64>,
    kind: DecompKind,
}

enum DecompKind {
    /// Eigenvectors of iM with the signs of its eigenvalues.
    Anti { w: Mat<c64>, sign: Vec<f64> },
    /// Right singular vectors from the Gram matrix, and M itself.
    General { v: Mat<c64>, m: Mat<c64> },
}

fn decompose(comp: &Component, y: &[f64]) -> Result<Decomp> {
    let m = assemble(comp, y);
    let fail = |e| Error::Numerical(format!("eigensolver failed: {e:?}"));
    if comp.anti_hermitian {
        let h = Mat::from_fn(comp.dim, comp.dim, |r, c| m[(r, c)] * c64::new(0.0, 1.0));
        let evd = h.self_adjoint_eigen(Side::Lower).map_err(fail)?;
        let lam: Vec<f64> = (0..comp.dim).map(|j| evd.S().column_vector()[j].re).collect();
        Ok(Decomp {
            sigma: lam.iter().map(|l| l.abs()).collect(),
            kind: DecompKind::Anti { w: evd.U().to_owned(), sign: lam.iter().map(|l| l.signum()).collect() },
        })
    } else {
        let mh = m.adjoint().to_owned();
        let gram = matmul(mh.as_ref(), m.as_ref());
        let evd = gram.self_adjoint_eigen(Side::Lower).map_err(fail)?;
        let sigma = (0..comp.dim).map(|j| evd.S().column_vector()[j].re.max(0.0).sqrt()).collect();
        Ok(Decomp { sigma, kind: DecompKind::General { v: evd.U().to_owned(), m } })
    }
}

/// grad_i += Σ_j w_j ∂σ_j/∂y_i.
fn accumulate(comp: &Component, dec: &Decomp, weights: &[f64], grad: &mut [f64]) {
    let top = weights.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..weights.len()).filter(|&j| weights[j] > 1e-14 * top && weights[j] > 0.0).collect();
    if keep.is_empty() {
        return;
    }
    let n = comp.dim;
    // tr(G C) = Re Σ G[c, r] C[r, c] gives the derivative along C.
    let (g, factor) = match &dec.kind {
        DecompKind::Anti { w, sign } => {
            let left = Mat::from_fn(n, keep.len(), |r, k| w[(r, keep[k])] * (weights[keep[k]] * sign[keep[k]]));
            let right = Mat::from_fn(keep.len(), n, |k, c| w[(c, keep[k])].conj());
            (matmul(left.as_ref(), right.as_ref()), c64::new(0.0, 1.0))
        }
        DecompKind::General { v, m } => {
            let keep: Vec<usize> = keep.into_iter().filter(|&j| dec.sigma[j] > 0.0).collect();
            let left = Mat::from_fn(n, keep.len(), |r, k| v[(r, keep[k])] * (weights[keep[k]] / dec.sigma[keep[k]]));
            let right = Mat::from_fn(keep.len(), n, |k, c| v[(c, keep[k])].conj());
            let vv = matmul(left.as_ref(), right.as_ref());
            let mh = m.adjoint().to_owned();
            (matmul(vv.as_ref(), mh.as_ref()), c64::new(1.0, 0.0))
        }
    };
    for (gi, t) in grad.iter_mut().zip(&comp.terms) {
        let mut acc = 0.0;
        for &(r, c, val) in &t.0 {
            acc += (g[(c as usize, r as usize)] * val * factor).re;
        }
        *gi += acc;
    }
}

/// Connes distance lower bound between two states.
pub fn connes_distance(geometry: Geometry<'_>, w1: &State, w2: &State, opts: &DistanceOptions) -> Result<DistanceResult> {
    LipschitzProblem::new(geometry)?.distance(w1, w2, opts)
}

/// Largest pairwise distance over a grid of states; a lower bound on the diameter.
pub fn diameter_estimate(problem: &LipschitzProblem<'_>, grid: &[State], opts: &DistanceOptions) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::contract("state grid is empty"));
    }
    let pairs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|i| (i + 1..grid.len()).map(move |j| (i, j))).collect();
    let values: Vec<Result<f64>> =
        pairs.par_iter().map(|&(i, j)| Ok(problem.distance(&grid[i], &grid[j], opts)?.value)).collect();
    values.into_iter().try_fold(0.0f64, |m, v| Ok(m.max(v?)))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::time::Instant;

    use super::*;
    use crate::analysis::sampling::{SampleBasis, SamplingConfig};
    use crate::dirac::build_bundle;
    use crate::models::{circle_triple, podles_model, toeplitz_model, two_point_triple};

    fn circle_problem(k: usize) -> (TripleModel, Vec<LinOp>) {
        let c = circle_triple(k, 0.0).unwrap();
        let basis: Vec<LinOp> = triple_basis(&c, k).unwrap().into_iter().map(|p| p.1).collect();
        (c, basis)
    }

    #[test]
    fn seminorm_vanishes_on_scalars_and_matches_dense() {
        let ext = toeplitz_model(8, 0.5).unwrap();
        let t = ext.generator("T").unwrap().clone();
        let b = build_bundle(ext).unwrap();
        let id = b.source().identity_element().unwrap();
        assert_eq!(seminorm_l(&b, &id).unwrap(), 0.0);
        assert_eq!(seminorm_l(&b, &id.scale_real(-3.5)).unwrap(), 0.0);
        for e in [t.clone(), t.hermitian_part(), t.skew_part()] {
            let fast = seminorm_l(&b, &e).unwrap();
            let dense = seminorm_l_dense(&b, &e).unwrap();
            assert!((fast - dense).abs() <= 1e-10, "{fast} {dense}");
        }
    }

    #[test]
    fn two_point_distance_is_one() {
        let tp = two_point_triple().unwrap();
        let basis: Vec<LinOp> = triple_basis(&tp, 0).unwrap().into_iter().map(|p| p.1).collect();
        let geom = Geometry::Triple { triple: &tp, basis: &basis };
        let r = connes_distance(geom, &State::qubit(1).unwrap(), &State::qubit(2).unwrap(), &DistanceOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() <= 1e-9, "{r:?}");
        assert!(r.seminorm_at_witness <= 1.0 + 1e-9);
        assert!(r.converged);
        let same = connes_distance(geom, &State::qubit(1).unwrap(), &State::qubit(1).unwrap(), &DistanceOptions::default()).unwrap();
        assert_eq!(same.value, 0.0);
    }

    #[test]
    fn circle_antipodal_distance() {
        let (c, basis) = circle_problem(64);
        let start = Instant::now();
        let r = connes_distance(
            Geometry::Triple { triple: &c, basis: &basis },
            &State::point(0.0),
            &State::point(PI),
            &DistanceOptions::default(),
        )
        .unwrap();
        let elapsed = start.elapsed().as_secs_f64();
        assert!(r.value >= 0.9 * PI && r.value <= PI, "{} {elapsed}", r.value);
        assert!(r.seminorm_at_witness <= 1.0 + 1e-9);
        let direct: f64 = basis
            .iter()
            .zip(&r.witness)
            .map(|(h, c)| c * (State::point(0.0).evaluate_op(h).unwrap() - State::point(PI).evaluate_op(h).unwrap()).re)
            .sum();
        assert!((direct - r.value).abs() <= 1e-10);
        assert!(elapsed < 30.0, "{elapsed}");
    }

    #[test]
    fn symmetric_and_monotone_in_basis() {
        let (c, basis) = circle_problem(16);
        let opts = DistanceOptions::default();
        let p = LipschitzProblem::new(Geometry::Triple { triple: &c, basis: &basis }).unwrap();
        let (a, b) = (State::point(0.3), State::point(2.0));
        let ab = p.distance(&a, &b, &opts).unwrap().value;
        let ba = p.distance(&b, &a, &opts).unwrap().value;
        assert!((ab - ba).abs() <= 1e-8, "{ab} {ba}");
        let small: Vec<LinOp> = basis[..8].to_vec();
        let ps = LipschitzProblem::new(Geometry::Triple { triple: &c, basis: &small }).unwrap();
        assert!(ps.distance(&a, &b, &opts).unwrap().value <= ab + 1e-8);
    }

    #[test]
    fn adding_identity_to_basis_changes_nothing() {
        let (c, basis) = circle_problem(8);
        let id = LinOp::identity(c.space()).unwrap();
        let shifted: Vec<LinOp> = basis.iter().map(|h| h.add(&id.scale_real(0.25)).unwrap()).collect();
        let opts = DistanceOptions::default();
        let (a, b) = (State::point(0.0), State::point(1.0));
        let d0 = connes_distance(Geometry::Triple { triple: &c, basis: &basis }, &a, &b, &opts).unwrap().value;
        let d1 = connes_distance(Geometry::Triple { triple: &c, basis: &shifted }, &a, &b, &opts).unwrap().value;
        // Rounding in the functional moves the lower bound by far less than the
        // triangle-inequality slack.
        assert!((d0 - d1).abs() <= 1e-6, "{d0} {d1}");
    }

    #[test]
    fn extension_distance_is_feasible_and_deterministic() {
        let ext = podles_model(0.5, 8, 0.5).unwrap();
        let basis = SampleBasis::from_model(&ext, &SamplingConfig { degree: 2, fourier_degree: 4 }).unwrap();
        let b = build_bundle(ext).unwrap();
        let p = LipschitzProblem::new(Geometry::Bundle { bundle: &b, basis: basis.elements() }).unwrap();
        let (w1, w2) = (State::point(0.0), State::point(PI));
        let r1 = p.distance(&w1, &w2, &DistanceOptions::default()).unwrap();
        let r2 = p.distance(&w1, &w2, &DistanceOptions::default()).unwrap();
        assert_eq!(r1, r2);
        assert!(r1.value > 0.0);
        let e = basis.combine(&r1.witness).unwrap();
        assert!(seminorm_l(&b, &e).unwrap() <= 1.0 + 1e-9);
    }

    #[test]
    fn diameter_of_small_grids() {
        let tp = two_point_triple().unwrap();
        let basis: Vec<LinOp> = triple_basis(&tp, 0).unwrap().into_iter().map(|p| p.1).collect();
        let p = LipschitzProblem::new(Geometry::Triple { triple: &tp, basis: &basis }).unwrap();
        let opts = DistanceOptions::default();
        let grid = [State::qubit(1).unwrap(), State::qubit(2).unwrap()];
        assert!((diameter_estimate(&p, &grid, &opts).unwrap() - 1.0).abs() <= 1e-9);
        assert_eq!(diameter_estimate(&p, &grid[..1], &opts).unwrap(), 0.0);
        assert!(diameter_estimate(&p, &[], &opts).is_err());
    }
}
