use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{sample_stream, SampleBasis};
use crate::dirac::{check_p_injectivity, commutator_norms, DiracBundle};
use crate::error::{Error, Result};
use crate::linop::{commutator, eig_hermitian, eigh, opnorm, tensor, BasisSpace, LinOp};
use crate::metrics::seminorm_l;
use crate::models::SplitElement;

/// Absolute slack added to every bound.
pub const BOUND_TOL: f64 = 1e-9;

const MAX_ATTEMPTS: usize = 32;

/// Label attached to every sampled report.
pub const SURROGATE_NOTE: &str = "sampled surrogate: random combinations over a finite Hermitian generator basis";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub bound: f64,
    pub max_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub sample: usize,
    pub check: String,
    pub value: f64,
    pub bound: f64,
}

fn tally(names: &[(&str, f64)], per_sample: &[Vec<f64>], tol: f64) -> (Vec<BoundCheck>, Vec<Violation>) {
    let mut checks: Vec<BoundCheck> =
        names.iter().map(|(n, b)| BoundCheck { name: n.to_string(), bound: *b, max_value: 0.0 }).collect();
    let mut violations = Vec::new();
    for (s, values) in per_sample.iter().enumerate() {
        for (k, &v) in values.iter().enumerate() {
            let c = &mut checks[k];
            c.max_value = c.max_value.max(v);
            if !(v <= c.bound + tol) {
                violations.push(Violation { sample: s, check: c.name.clone(), value: v, bound: c.bound });
            }
        }
    }
    (checks, violations)
}

fn ideal_part(bundle: &DiracBundle, e: &SplitElement) -> Result<SplitElement> {
    let ext = bundle.source();
    ext.split(e.x().clone(), LinOp::zeros(ext.quotient().space())?)
}

fn require_injective(bundle: &DiracBundle) -> Result<()> {
    if check_p_injectivity(bundle)?.pass {
        Ok(())
    } else {
        Err(Error::contract("bundle is not P-injective"))
    }
}

/// Draws until `accept` returns a scale > 1e−12, then returns e / scale.
fn draw_scaled(
    basis: &SampleBasis,
    seed: u64,
    index: usize,
    scale: impl Fn(&SplitElement) -> Result<f64>,
) -> Result<(SplitElement, usize)> {
    let mut rng = sample_stream(seed, index as u64);
    for attempt in 0..MAX_ATTEMPTS {
        let e = basis.combine(&basis.draw(&mut rng))?;
        let s = scale(&e)?;
        if s > 1e-12 {
            return Ok((e.scale_real(1.0 / s), attempt));
        }
    }
    Err(Error::Numerical(format!("sample {index}: every draw had vanishing scale")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bound7Report {
    pub note: String,
    pub samples: usize,
    pub seed: u64,
    pub basis_size: usize,
    pub resampled: usize,
    pub tol: f64,
    pub checks: Vec<BoundCheck>,
    pub violations: Vec<Violation>,
}

impl Bound7Report {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

const BOUND7_CHECKS: [(&str, f64); 9] = [
    ("(i) |[D_A, a]|", 1.0),
    ("(ii) |[1 x D_B, x]|", 1.0),
    ("(iii) |P[D^p, a] x 1 - x(D^p x 1)|", 1.0),
    ("(iv) |[D^p, a]P x 1 + (D^p x 1)x|", 1.0),
    ("(v) |[D^q, a]|", 1.0),
    ("|[D^p, a]|", 2.0),
    ("|(D^p x 1)x|", 3.0),
    ("|x(D^p x 1)|", 3.0),
    ("|[D_I, Pi2(x) + Pi2(x)]|", 7.0),
];

/// Samples Hermitian e = x + PaP⊗I, rescales to L(e) = 1 and evaluates the
/// decomposition bounds: each block entry ≤ 1, ‖[Δ^p, a]‖ ≤ 2,
/// ‖(Δ^p⊗1)x‖, ‖x(Δ^p⊗1)‖ ≤ 3 and ‖[D_I, Π₂(x)⊕Π₂(x)]‖ ≤ 7.
pub fn check_bound_7(bundle: &DiracBundle, basis: &SampleBasis, samples: usize, seed: u64) -> Result<Bound7Report> {
    require_injective(bundle)?;
    if basis.is_empty() {
        return Err(Error::contract("sampling basis is empty"));
    }
    let ext = bundle.source();
    let p = ext.projection();
    let id_b = ext.identity_b();
    let dp_ab = bundle.delta_p_ab();
    let rows: Vec<Result<(Vec<f64>, usize)>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let (e, attempts) = draw_scaled(basis, seed, s, |e| seminorm_l(bundle, e))?;
            let a = e.a();
            let x = e.x();
            let ca = commutator(bundle.delta_a(), a)?;
            let cp = commutator(bundle.delta_p(), a)?;
            let cq = commutator(bundle.delta_q(), a)?;
            let tr = tensor(&p.compose(&cp)?, id_b)?.sub(&x.compose(dp_ab)?)?;
            let bl = tensor(&cp.compose(p)?, id_b)?.add(&dp_ab.compose(x)?)?;
            let (_, ideal) = commutator_norms(bundle, &ideal_part(bundle, &e)?)?;
            let values = vec![
                opnorm(&ca)?,
                opnorm(&commutator(bundle.delta_b_ab(), x)?)?,
                opnorm(&tr)?,
                opnorm(&bl)?,
                opnorm(&cq)?,
                opnorm(&cp)?,
                opnorm(&dp_ab.compose(x)?)?,
                opnorm(&x.compose(dp_ab)?)?,
                ideal,
            ];
            Ok((values, attempts))
        })
        .collect();
    let rows: Vec<(Vec<f64>, usize)> = rows.into_iter().collect::<Result<_>>()?;
    let resampled = rows.iter().map(|r| r.1).sum();
    let values: Vec<Vec<f64>> = rows.into_iter().map(|r| r.0).collect();
    let (checks, violations) = tally(&BOUND7_CHECKS, &values, BOUND_TOL);
    Ok(Bound7Report {
        note: SURROGATE_NOTE.to_string(),
        samples,
        seed,
        basis_size: basis.len(),
        resampled,
        tol: BOUND_TOL,
        checks,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRung {
    pub n: usize,
    /// 6·max(‖Y − YQ_n‖, ‖Y − Q_nY‖).
    pub epsilon: f64,
    pub max_norm_xn: f64,
    pub max_tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bound3YReport {
    pub note: String,
    pub samples: usize,
    pub seed: u64,
    pub basis_size: usize,
    pub norm_y: f64,
    pub tol: f64,
    pub rungs: Vec<LadderRung>,
    pub violations: Vec<Violation>,
}

impl Bound3YReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Y = (Δ^p|PH)^{-1} with Q_n the sum of the first n spectral projections of
/// Y ordered by decreasing |eigenvalue|. For ideal parts x rescaled to
/// ‖[D_I, Π₂(x)⊕Π₂(x)]‖ = 1 checks ‖x_n‖ ≤ 3‖Y‖ and ‖x − x_n‖ ≤ ε_n.
pub fn check_bound_3y(
    bundle: &DiracBundle,
    basis: &SampleBasis,
    samples: usize,
    ladder: &[usize],
    seed: u64,
) -> Result<Bound3YReport> {
    require_injective(bundle)?;
    if basis.is_empty() {
        return Err(Error::contract("sampling basis is empty"));
    }
    let ext = bundle.source();
    let mask = ext.p_mask();
    let idx: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    let ph = BasisSpace::half_line(idx.len())?;
    let dp_ph = LinOp::hermitian_from_mat(&ph, bundle.delta_p().submatrix(&idx, &idx))?;
    let (vals, vecs) = eigh(&dp_ph)?;
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| (1.0 / vals[j].abs()).total_cmp(&(1.0 / vals[i].abs())).then(i.cmp(&j)));
    let y = LinOp::from_fn(&ph, |r, c| {
        (0..vals.len()).map(|k| vecs[(r, k)] * vecs[(c, k)].conj() * (1.0 / vals[k])).sum()
    })?;
    let norm_y = opnorm(&y)?;
    let quotient_space = ext.quotient().space();
    let mut rung_ops = Vec::new();
    for &n in ladder {
        let n_eff = n.min(vals.len());
        let chosen = &order[..n_eff];
        let qn = LinOp::from_fn(&ph, |r, c| chosen.iter().map(|&k| vecs[(r, k)] * vecs[(c, k)].conj()).sum())?;
        let eps = 6.0 * opnorm(&y.sub(&y.compose(&qn)?)?)?.max(opnorm(&y.sub(&qn.compose(&y)?)?)?);
        let qn_a = qn.embed(quotient_space, &idx)?;
        rung_ops.push((n, eps, tensor(&qn_a, ext.identity_b())?));
    }
    let rows: Vec<Result<Vec<(f64, f64)>>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let (e, _) = draw_scaled(basis, seed, s, |e| Ok(commutator_norms(bundle, &ideal_part(bundle, e)?)?.1))?;
            let x = e.x();
            rung_ops
                .iter()
                .map(|(_, _, q)| {
                    let xn = q.compose(x)?.compose(q)?;
                    Ok((opnorm(&xn)?, opnorm(&x.sub(&xn)?)?))
                })
                .collect()
        })
        .collect();
    let rows: Vec<Vec<(f64, f64)>> = rows.into_iter().collect::<Result<_>>()?;
    let mut rungs: Vec<LadderRung> =
        rung_ops.iter().map(|(n, eps, _)| LadderRung { n: *n, epsilon: *eps, max_norm_xn: 0.0, max_tail: 0.0 }).collect();
    let mut violations = Vec::new();
    for (s, row) in rows.iter().enumerate() {
        for (k, &(xn, tail)) in row.iter().enumerate() {
            let r = &mut rungs[k];
            r.max_norm_xn = r.max_norm_xn.max(xn);
            r.max_tail = r.max_tail.max(tail);
            if !(xn <= 3.0 * norm_y + BOUND_TOL) {
                violations.push(Violation { sample: s, check: format!("|x_{}| <= 3|Y|", r.n), value: xn, bound: 3.0 * norm_y });
            }
            if !(tail <= r.epsilon + BOUND_TOL) {
                violations.push(Violation { sample: s, check: format!("|x - x_{}| <= eps", r.n), value: tail, bound: r.epsilon });
            }
        }
    }
    Ok(Bound3YReport {
        note: SURROGATE_NOTE.to_string(),
        samples,
        seed,
        basis_size: basis.len(),
        norm_y,
        tol: BOUND_TOL,
        rungs,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub note: String,
    pub samples: usize,
    pub seed: u64,
    pub basis_size: usize,
    pub l_identity: f64,
    pub threshold: f64,
    pub min_l: f64,
    /// Largest |L(e + cI) − L(e)| over the samples.
    pub max_shift_dev: f64,
    pub violations: Vec<Violation>,
}

impl NondegeneracyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.l_identity == 0.0
    }
}

/// Distance of Π(e) from ℝI in operator norm, for Hermitian e.
pub fn distance_from_scalars(bundle: &DiracBundle, e: &SplitElement) -> Result<f64> {
    let ext = bundle.source();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for op in [ext.pi(e)?, e.a().clone()] {
        let s = eig_hermitian(&op)?;
        let v = s.eigenvalues();
        lo = lo.min(v[0]);
        hi = hi.max(v[v.len() - 1]);
    }
    Ok((hi - lo) / 2.0)
}

/// L(I) = 0, and L(e) > threshold for Hermitian samples rescaled to unit
/// distance from ℝI; also checks L(e + cI) = L(e).
pub fn check_nondegeneracy(bundle: &DiracBundle, basis: &SampleBasis, samples: usize, seed: u64) -> Result<NondegeneracyReport> {
    const THRESHOLD: f64 = 1e-6;
    let ext = bundle.source();
    let id = ext.identity_element()?;
    let l_identity = seminorm_l(bundle, &id)?;
    let rows: Vec<Result<(f64, f64)>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let (e, _) = draw_scaled(basis, seed, s, |e| distance_from_scalars(bundle, e))?;
            let l = seminorm_l(bundle, &e)?;
            let shifted = e.add(&id.scale_real(0.75))?;
            let ls = seminorm_l(bundle, &shifted)?;
            Ok((l, (ls - l).abs()))
        })
        .collect();
    let rows: Vec<(f64, f64)> = rows.into_iter().collect::<Result<_>>()?;
    let mut violations = Vec::new();
    let mut min_l = f64::INFINITY;
    let mut max_shift_dev: f64 = 0.0;
    for (s, &(l, dev)) in rows.iter().enumerate() {
        min_l = min_l.min(l);
        max_shift_dev = max_shift_dev.max(dev);
        if !(l > THRESHOLD) {
            violations.push(Violation { sample: s, check: "L(e) > 1e-6".into(), value: l, bound: THRESHOLD });
        }
        if !(dev <= 1e-10) {
            violations.push(Violation { sample: s, check: "L(e + cI) = L(e)".into(), value: dev, bound: 1e-10 });
        }
    }
    Ok(NondegeneracyReport {
        note: SURROGATE_NOTE.to_string(),
        samples,
        seed,
        basis_size: basis.len(),
        l_identity,
        threshold: THRESHOLD,
        min_l,
        max_shift_dev,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::sampling::SamplingConfig;
    use crate::dirac::build_bundle;
    use crate::models::{podles_model, suq2_model, toeplitz_model};

    fn podles_small() -> (DiracBundle, SampleBasis) {
        let ext = podles_model(0.5, 8, 0.5).unwrap();
        let basis = SampleBasis::from_model(&ext, &SamplingConfig { degree: 2, fourier_degree: 4 }).unwrap();
        (build_bundle(ext).unwrap(), basis)
    }

    #[test]
    fn bound7_holds_on_small_podles() {
        let (b, basis) = podles_small();
        let r = check_bound_7(&b, &basis, 20, 11).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
        assert!(r.checks.iter().all(|c| c.max_value > 0.0));
    }

    #[test]
    fn bound7_holds_on_small_suq2() {
        let ext = suq2_model(0.5, 5, 2, 0.5).unwrap();
        let basis = SampleBasis::from_model(&ext, &SamplingConfig { degree: 2, fourier_degree: 2 }).unwrap();
        let b = build_bundle(ext).unwrap();
        let r = check_bound_7(&b, &basis, 10, 3).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
    }

    #[test]
    fn pure_quotient_has_zero_ideal_component() {
        let ext = toeplitz_model(6, 0.5).unwrap();
        let t = ext.quotient().generator("T").unwrap().clone();
        let e = ext.quotient_element(t).unwrap().hermitian_part();
        let basis = SampleBasis::from_parts(vec!["re[T]".into()], vec![e]);
        let b = build_bundle(ext).unwrap();
        let r = check_bound_7(&b, &basis, 3, 1).unwrap();
        assert!(r.passed());
        assert_eq!(r.checks[8].max_value, 0.0);
    }

    #[test]
    fn bound3y_on_circle_has_norm_two() {
        let ext = toeplitz_model(8, 0.5).unwrap();
        let basis = SampleBasis::from_model(&ext, &SamplingConfig { degree: 3, fourier_degree: 2 }).unwrap();
        let b = build_bundle(ext).unwrap();
        let r = check_bound_3y(&b, &basis, 10, &[2, 4, 8], 5).unwrap();
        assert!((r.norm_y - 2.0).abs() < 1e-12);
        assert!(r.passed(), "{:?}", r.violations);
    }

    #[test]
    fn bound3y_on_small_podles() {
        let (b, basis) = podles_small();
        let r = check_bound_3y(&b, &basis, 10, &[2, 4, 8], 9).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
    }

    #[test]
    fn non_injective_bundle_is_refused() {
        let ext = toeplitz_model(4, 0.0).unwrap();
        let basis = SampleBasis::from_model(&ext, &SamplingConfig { degree: 1, fourier_degree: 1 }).unwrap();
        let b = build_bundle(ext).unwrap();
        assert!(check_bound_7(&b, &basis, 1, 0).is_err());
    }

    #[test]
    fn nondegeneracy_on_small_podles() {
        let (b, basis) = podles_small();
        let r = check_nondegeneracy(&b, &basis, 20, 2).unwrap();
        assert_eq!(r.l_identity, 0.0);
        assert!(r.passed(), "{:?}", r.violations);
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let (b, basis) = podles_small();
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let wide = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = serial.install(|| check_bound_7(&b, &basis, 6, 4).unwrap());
        let c = wide.install(|| check_bound_7(&b, &basis, 6, 4).unwrap());
        assert_eq!(a, c);
    }
}
