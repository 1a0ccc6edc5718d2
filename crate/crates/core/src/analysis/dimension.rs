use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linop::Spectrum;

/// Fraction-of-max window and grid size for the counting-function fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPolicy {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy { lo: 0.1, hi: 0.8, points: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub slope: f64,
    /// Two standard errors of the fitted slope.
    pub ci_halfwidth: f64,
    pub intercept: f64,
    pub window: [f64; 2],
    pub count_points: usize,
    /// (R, N(R)) at every grid point used in the fit.
    pub counts: Vec<[f64; 2]>,
}

impl DimensionEstimate {
    /// (log R, log N, fitted log N) rows for plotting.
    pub fn loglog_table(&self) -> Vec<[f64; 3]> {
        self.counts
            .iter()
            .map(|&[r, n]| {
                let x = r.ln();
                [x, n.ln(), self.intercept + self.slope * x]
            })
            .collect()
    }
}

/// Least-squares slope of log N(R) against log R, N(R) = #{|ν| ≤ R}, on a
/// log-spaced grid inside [lo, hi]·max|ν|.
pub fn estimate_spectral_dimension(spec: &Spectrum, policy: &WindowPolicy) -> Result<DimensionEstimate> {
    if spec.source_dim() < 100 {
        return Err(Error::contract(format!(
            "spectrum has {} eigenvalues, at least 100 needed",
            spec.source_dim()
        )));
    }
    if !(policy.lo > 0.0 && policy.lo < policy.hi && policy.hi <= 0.8) {
        return Err(Error::contract("window must satisfy 0 < lo < hi ≤ 0.8"));
    }
    if policy.points < 8 {
        return Err(Error::contract("at least 8 grid points are needed"));
    }
    let abs = spec.abs_sorted();
    let top = spec.max_abs();
    let (r_min, r_max) = (policy.lo * top, policy.hi * top);
    let step = (r_max / r_min).ln() / (policy.points - 1) as f64;
    let mut counts = Vec::with_capacity(policy.points);
    for k in 0..policy.points {
        let r = r_min * (step * k as f64).exp();
        let n = abs.partition_point(|&v| v <= r);
        if n > 0 {
            counts.push([r, n as f64]);
        }
    }
    if counts.len() < 8 {
        return Err(Error::contract("too few grid points with nonzero count in window"));
    }
    let m = counts.len() as f64;
    let xs: Vec<f64> = counts.iter().map(|c| c[0].ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|c| c[1].ln()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let se = (ssr / (m - 2.0) / sxx).sqrt();
    Ok(DimensionEstimate {
        slope,
        ci_halfwidth: 2.0 * se,
        intercept,
        window: [r_min, r_max],
        count_points: counts.len(),
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::structured::circle_eigenvalues;
    use crate::analysis::eigs::d1_formula;

    fn spec(v: Vec<f64>) -> Spectrum {
        Spectrum::from_values(v, 1e-9).unwrap()
    }

    #[test]
    fn circle_is_one_dimensional() {
        let e = estimate_spectral_dimension(&spec(circle_eigenvalues(2048, 0.0)), &WindowPolicy::default()).unwrap();
        assert!((e.slope - 1.0).abs() < 0.1, "{e:?}");
        assert!(e.window[1] <= 0.8 * 2048.0 + 1e-9);
        assert!(e.count_points >= 8);
    }

    #[test]
    fn torus_is_two_dimensional() {
        let lam = circle_eigenvalues(128, 0.0);
        let e = estimate_spectral_dimension(&spec(d1_formula(&lam, &lam)), &WindowPolicy::default()).unwrap();
        assert!((e.slope - 2.0).abs() < 0.15, "{e:?}");
    }

    #[test]
    fn finite_spectrum_is_refused() {
        assert!(estimate_spectral_dimension(&spec(vec![-1.0, 1.0]), &WindowPolicy::default()).is_err());
    }

    #[test]
    fn window_beyond_tail_cut_is_refused() {
        let p = WindowPolicy { hi: 0.9, ..Default::default() };
        assert!(estimate_spectral_dimension(&spec(circle_eigenvalues(256, 0.0)), &p).is_err());
    }

    #[test]
    fn doubling_is_scale_consistent() {
        for w in [512usize, 1024] {
            let a = estimate_spectral_dimension(&spec(circle_eigenvalues(w, 0.0)), &WindowPolicy::default()).unwrap();
            let b = estimate_spectral_dimension(&spec(circle_eigenvalues(2 * w, 0.0)), &WindowPolicy::default()).unwrap();
            assert!((a.slope - b.slope).abs() <= a.ci_halfwidth.max(b.ci_halfwidth), "{a:?} {b:?}");
        }
    }
}
