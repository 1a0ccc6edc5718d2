use proptest::prelude::*;

use spectral_forge::analysis::{SampleBasis, SamplingConfig};
use spectral_forge::dirac::{build_bundle, DiracBundle};
use spectral_forge::metrics::{seminorm_l, DistanceOptions, Geometry, LipschitzProblem, State};
use spectral_forge::models::{podles_model, toeplitz_model};

fn podles() -> (DiracBundle, SampleBasis) {
    let ext = podles_model(0.5, 6, 0.5).unwrap();
    let basis = SampleBasis::from_model(&ext, &SamplingConfig { degree: 2, fourier_degree: 3 }).unwrap();
    (build_bundle(ext).unwrap(), basis)
}

fn coeffs(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn seminorm_is_homogeneous_and_subadditive(seed in any::<u64>(), t in -4.0f64..4.0) {
        let (bundle, basis) = podles();
        let mut rng = spectral_forge::analysis::sample_stream(seed, 0);
        let a = basis.combine(&basis.draw(&mut rng)).unwrap();
        let b = basis.combine(&basis.draw(&mut rng)).unwrap();
        let la = seminorm_l(&bundle, &a).unwrap();
        let lb = seminorm_l(&bundle, &b).unwrap();
        let lta = seminorm_l(&bundle, &a.scale_real(t)).unwrap();
        prop_assert!((lta - t.abs() * la).abs() <= 1e-10 * (1.0 + la * t.abs()));
        let lab = seminorm_l(&bundle, &a.add(&b).unwrap()).unwrap();
        prop_assert!(lab <= la + lb + 1e-10 * (1.0 + la + lb));
    }

    #[test]
    fn identity_shift_leaves_seminorm(c in coeffs(5), s in -3.0f64..3.0) {
        let ext = toeplitz_model(6, 0.5).unwrap();
        let basis = SampleBasis::from_model(&ext, &SamplingConfig { degree: 1, fourier_degree: 2 }).unwrap();
        let n = basis.len().min(c.len());
        let mut full = vec![0.0; basis.len()];
        full[..n].copy_from_slice(&c[..n]);
        let e = basis.combine(&full).unwrap();
        let id = ext.identity_element().unwrap();
        let bundle = build_bundle(ext).unwrap();
        let l0 = seminorm_l(&bundle, &e).unwrap();
        let l1 = seminorm_l(&bundle, &e.add(&id.scale_real(s)).unwrap()).unwrap();
        prop_assert!((l0 - l1).abs() <= 1e-12 * (1.0 + l0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn distances_obey_triangle_and_feasibility(a in -3.1f64..3.1, b in -3.1f64..3.1, c in -3.1f64..3.1) {
        let ext = toeplitz_model(8, 0.5).unwrap();
        let basis = SampleBasis::from_model(&ext, &SamplingConfig { degree: 1, fourier_degree: 4 }).unwrap();
        let bundle = build_bundle(ext).unwrap();
        let problem = LipschitzProblem::new(Geometry::Bundle { bundle: &bundle, basis: basis.elements() }).unwrap();
        let opts = DistanceOptions { max_iter: 6000, ..Default::default() };
        let (pa, pb, pc) = (State::point(a), State::point(b), State::point(c));
        let ab = problem.distance(&pa, &pb, &opts).unwrap();
        let bc = problem.distance(&pb, &pc, &opts).unwrap();
        let ac = problem.distance(&pa, &pc, &opts).unwrap();
        for r in [&ab, &bc, &ac] {
            prop_assert!(r.seminorm_at_witness <= 1.0 + 1e-9);
            prop_assert!(r.value >= 0.0);
        }
        prop_assert!(ac.value <= ab.value + bc.value + 1e-6, "{} > {} + {}", ac.value, ab.value, bc.value);
    }
}
