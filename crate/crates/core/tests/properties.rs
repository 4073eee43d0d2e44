use std::sync::Arc;

use conveyor::control::{ImpulseResponse, Signal};
use conveyor::geometry::{fs_distance, ELL_GEO_MAX};
use conveyor::lattice::{phase_from_position, position_from_phase, SITE};
use conveyor::optimizer::crossing;
use conveyor::protocols::{envelope_duration, envelope_fidelity, EnvelopeProtocol, Trajectory};
use conveyor::{Grid, GridSpec, LatticeParams, WaveFunction};
use proptest::prelude::*;

fn grid() -> Arc<Grid> {
    Arc::new(
        Grid::new(GridSpec {
            n_sites: 4,
            pts_per_site: 32,
        })
        .unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trajectories_start_and_end_on_target(
        tau in 0.05f64..2.0,
        sites in 1u32..4,
        coeffs in prop::collection::vec(-0.3f64..0.3, 2..8),
    ) {
        let d = sites as f64 * SITE;
        let mut all = vec![
            Trajectory::linear(d, tau).unwrap(),
            Trajectory::parabolic(d, tau).unwrap(),
            Trajectory::adiabatic_sine(d, tau).unwrap(),
        ];
        all.push(Trajectory::fourier(d, tau, coeffs).unwrap());
        for t in &all {
            prop_assert!(t.position(0.0).abs() < 1e-12);
            prop_assert!((t.position(tau) - d).abs() < 1e-9 * d);
        }
        let smooth = &all[2];
        prop_assert!(smooth.velocity(0.0).abs() < 1e-9 * d / tau);
        prop_assert!(smooth.velocity(tau).abs() < 1e-9 * d / tau);
    }

    #[test]
    fn phase_and_position_are_inverse(x in -50.0f64..50.0) {
        prop_assert!((position_from_phase(phase_from_position(x)) - x).abs() < 1e-12 * (1.0 + x.abs()));
    }

    #[test]
    fn envelope_duration_inverts_fidelity(f in 0.05f64..0.999, l in 1.0f64..20.0, u0 in 20.0f64..400.0) {
        let p = LatticeParams::new(u0).unwrap();
        for proto in [EnvelopeProtocol::Linear, EnvelopeProtocol::Parabolic, EnvelopeProtocol::Adiabatic] {
            let tau = envelope_duration(proto, f, l, &p).unwrap();
            prop_assert!((envelope_fidelity(proto, tau, l, &p) - f).abs() < 1e-9);
        }
    }

    #[test]
    fn fs_distance_is_a_bounded_symmetric_metric(a in -3.0f64..3.0, b in -3.0f64..3.0, w in 0.2f64..0.8) {
        let g = grid();
        let x = WaveFunction::gaussian(g.clone(), a, w);
        let y = WaveFunction::gaussian(g, b, w);
        let dxy = fs_distance(&x, &y).unwrap();
        prop_assert!((dxy - fs_distance(&y, &x).unwrap()).abs() < 1e-12);
        prop_assert!((0.0..=ELL_GEO_MAX + 1e-12).contains(&dxy));
        prop_assert!(fs_distance(&x, &x).unwrap() < 1e-7);
    }

    #[test]
    fn crossing_lies_inside_its_bracket(values in prop::collection::vec(0.0f64..1.0, 2..12), th in 0.1f64..0.9) {
        let mut v = values;
        v.sort_by(f64::total_cmp);
        let taus: Vec<f64> = (0..v.len()).map(|k| 1.0 + k as f64).collect();
        if let Some(t) = crossing(&taus, &v, th) {
            prop_assert!(t >= taus[0] && t <= taus[taus.len() - 1]);
            let k = taus.iter().position(|&x| x >= t).unwrap();
            prop_assert!(v[k] >= th);
        } else {
            prop_assert!(v[v.len() - 1] < th || v[0] >= th);
        }
    }

    #[test]
    fn convolution_has_unit_dc_gain(
        raw in prop::collection::vec(0.0f64..1.0, 1..40),
        level in -2.0f64..2.0,
    ) {
        prop_assume!(raw.iter().sum::<f64>() > 1e-3);
        let k = ImpulseResponse::new(raw, 0.05).unwrap();
        let flat = vec![level; 200];
        let out = k.convolve(&flat);
        prop_assert_eq!(out.len(), flat.len());
        prop_assert!(out.iter().all(|v| (v - level).abs() < 1e-12 * (1.0 + level.abs())));
    }

    #[test]
    fn signal_interpolation_hits_samples(values in prop::collection::vec(-1.0f64..1.0, 2..30), t0 in -5.0f64..5.0) {
        let s = Signal::new(t0, 0.1, values.clone()).unwrap();
        for (t, v) in s.times().iter().zip(&values) {
            prop_assert!((s.at(*t) - v).abs() < 1e-12);
        }
    }
}
