mod common;

use std::f64::consts::PI;

use common::{oracle_project, oracle_tensor};
use ddi_fluor::geometry::{coherent_couplings, incoherent_couplings, CouplingSet, DriveConfig, Geometry};
use ddi_fluor::hilbert::{build_hamiltonian, Op16};
use ddi_fluor::inference::{detect_peaks, PeakSet};
use ddi_fluor::liouville::{unvectorize, vectorize, Liouvillian};
use ddi_fluor::observables::{Channel, DetuningGrid, Normalization, Spectrum};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn geometry() -> impl Strategy<Value = Geometry> {
    (0.01f64..0.5, 0.0f64..=PI, 0.0f64..2.0 * PI).prop_map(|(r, t, p)| Geometry::with_default_r1(r, t, p).unwrap())
}

fn op16() -> impl Strategy<Value = Op16> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 256)
        .prop_map(|v| Op16::from_iterator(v.into_iter().map(|(a, b)| C64::new(a, b))))
}

fn lorentzians(centers: &[f64], grid: &[f64]) -> Spectrum {
    let values = grid
        .iter()
        .map(|x| centers.iter().map(|c| 1.0 / (1.0 + (x - c).powi(2))).sum())
        .collect();
    Spectrum {
        detuning_grid: grid.to_vec(),
        values,
        channel: Channel::Pi,
        direction: [0.0, 1.0, 0.0],
        normalization: Normalization::Raw,
        regularized: vec![],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coupling_tables_are_hermitian(g in geometry()) {
        for m in [coherent_couplings(&g).unwrap(), incoherent_couplings(&g).unwrap()] {
            prop_assert!((m - m.adjoint()).iter().all(|z| z.norm() < 1e-12 * m.iter().map(|z| z.norm()).fold(1.0, f64::max)));
        }
    }

    #[test]
    fn closed_forms_match_tensor(g in geometry()) {
        let chi = oracle_tensor(g.r, g.theta, g.phi);
        let want = oracle_project(&chi.map(|z| z.re));
        let got = coherent_couplings(&g).unwrap();
        let scale = want.iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!((got - want).iter().all(|z| z.norm() <= 1e-10 * scale));
    }

    #[test]
    fn couplings_invariant_under_azimuth_for_driven_pair(r in 0.01f64..0.5, t in 0.0f64..=PI, p in 0.0f64..2.0 * PI) {
        // Ω_11, Ω_22 and Γ_22 depend on R and θ only.
        let a = coherent_couplings(&Geometry::with_default_r1(r, t, p).unwrap()).unwrap();
        let b = coherent_couplings(&Geometry::with_default_r1(r, t, 0.0).unwrap()).unwrap();
        prop_assert!((a[(0, 0)] - b[(0, 0)]).norm() < 1e-9 * a[(0, 0)].norm().max(1.0));
        prop_assert!((a[(1, 1)] - b[(1, 1)]).norm() < 1e-9 * a[(1, 1)].norm().max(1.0));
    }

    #[test]
    fn hamiltonian_is_hermitian(g in geometry(), omega in 0.0f64..400.0, det in proptest::array::uniform3(-10.0f64..10.0)) {
        let d = DriveConfig::with_detunings(omega, det).unwrap();
        let h = build_hamiltonian(&d, &CouplingSet::compute(&g, &d).unwrap());
        prop_assert!(h.is_hermitian(1e-12));
    }

    #[test]
    fn liouvillian_preserves_trace_and_hermiticity(g in geometry(), omega in 0.0f64..300.0, a in op16()) {
        let d = DriveConfig::new(omega).unwrap();
        let c = CouplingSet::compute(&g, &d).unwrap();
        let l = Liouvillian::build(&build_hamiltonian(&d, &c), &c);
        let out = l.apply(&a);
        let scale = l.max_row_sum();
        prop_assert!(out.trace().norm() < 1e-12 * scale);
        prop_assert!((l.apply(&a.adjoint()) - out.adjoint()).camax() < 1e-12 * scale);
    }

    #[test]
    fn vectorization_round_trips(a in op16()) {
        prop_assert_eq!(unvectorize(&vectorize(&a)), a);
    }

    #[test]
    fn grid_points_are_increasing(min in -500.0f64..0.0, width in 0.1f64..1000.0, count in 2usize..5000) {
        let pts = DetuningGrid::new(min, min + width, count).unwrap().points();
        prop_assert_eq!(pts.len(), count);
        prop_assert_eq!(pts[0], min);
        prop_assert_eq!(pts[count - 1], min + width);
        prop_assert!(pts.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn separated_lorentzians_are_found(a in 5.0f64..40.0, gap in 10.0f64..60.0) {
        let centers = [-a - gap, -a, 0.0, a, a + gap];
        let grid: Vec<f64> = (0..=4000).map(|k| -120.0 + 0.06 * k as f64).collect();
        let p = detect_peaks(&lorentzians(&centers, &grid), 0.02).unwrap();
        prop_assert_eq!(p.len(), 5);
        for (x, c) in p.positions.iter().zip(centers) {
            prop_assert!((x - c).abs() < 0.05, "{} vs {}", x, c);
        }
    }

    #[test]
    fn peak_set_from_positions_is_sorted(v in proptest::collection::vec(-300.0f64..300.0, 0..20)) {
        let p = PeakSet::from_positions(v);
        prop_assert!(p.positions.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(p.heights.len(), p.len());
    }
}
