//! Spin-dependent transport interferometer.
//!
//! A superposition of both spin states starts in the ground state. The
//! spin-up component rides the conveyor to `d` and back; the spin-down
//! component sees the polarization-synthesized lattice, which either stays
//! put (φ_L compensates the moving R wave) or wobbles with it.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Conveyor, Propagator, SpinDownConveyor};
use crate::error::{Error, Result};
use crate::lattice::{compensation_phase, phase_from_position, LatticeParams, SpinDownField};
use crate::protocols::Trajectory;
use crate::transport::{SimConfig, TransportSim};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerResult {
    /// |⟨ψ↓(2τ)|ψ↑(2τ)⟩|.
    pub contrast: f64,
    /// |⟨ψ_init|ψ↑(2τ)⟩|, the square root of the round-trip fidelity.
    pub sqrt_f2: f64,
    pub compensated: bool,
}

/// Round trip x(t) for t ≤ τ, x(2τ − t) afterwards.
pub fn round_trip(traj: &Trajectory, t: f64) -> f64 {
    let tau = traj.tau();
    if t <= tau {
        traj.position(t)
    } else {
        traj.position(2.0 * tau - t)
    }
}

/// Runs both interferometer arms over [0, 2τ].
///
/// The R standing wave follows φ_R(t) = field.phi_r + 2·x(t). With
/// `compensate`, φ_L(t) holds the spin-down lattice at its initial position;
/// otherwise φ_L stays at `field.phi_l`.
pub fn interferometer_contrast(
    traj: &Trajectory,
    params: &LatticeParams,
    field: &SpinDownField,
    compensate: bool,
    sim: SimConfig,
) -> Result<InterferometerResult> {
    field.validate()?;
    let sim = TransportSim::for_duration(params, sim, traj.tau())?;
    let x_hold = field.position();
    if compensate {
        // the R phase sweeps a full circle for d ≥ 1 site; check every phase once
        for k in 0..256 {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / 256.0;
            compensation_phase(phi, field, x_hold)?;
        }
    }
    let field_at = |t: f64| {
        let phi_r = field.phi_r + phase_from_position(round_trip(traj, t));
        let mut f = SpinDownField { phi_r, ..*field };
        if compensate {
            f.phi_l = compensation_phase(phi_r, field, x_hold).unwrap_or(field.phi_l);
        }
        f
    };
    let grid = sim.grid().clone();
    let steps = 2 * sim.steps_for(traj.tau());
    let dt = 2.0 * traj.tau() / steps as f64;
    let init = sim.ground().clone();

    let mut up = init.clone();
    let conveyor = Conveyor::new(&grid, params.u0, |t| round_trip(traj, t));
    Propagator::new(grid.clone(), dt).run(&mut up, &conveyor, 0.0, steps, usize::MAX, None);

    let mut down = init.clone();
    let down_pot = SpinDownConveyor::new(&grid, field_at);
    Propagator::new(grid, dt).run(&mut down, &down_pot, 0.0, steps, usize::MAX, None);

    let contrast = down.inner(&up)?.norm();
    let sqrt_f2 = init.inner(&up)?.norm();
    if !contrast.is_finite() {
        return Err(Error::Domain("non-finite contrast".into()));
    }
    Ok(InterferometerResult {
        contrast: contrast.min(1.0),
        sqrt_f2: sqrt_f2.min(1.0),
        compensated: compensate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::SITE;

    #[test]
    fn round_trip_returns_home() {
        let t = Trajectory::linear(SITE, 2.0).unwrap();
        assert_eq!(round_trip(&t, 0.0), 0.0);
        assert_eq!(round_trip(&t, 2.0), SITE);
        assert!((round_trip(&t, 3.0) - SITE / 2.0).abs() < 1e-12);
        assert_eq!(round_trip(&t, 4.0), 0.0);
    }

    #[test]
    fn slow_round_trip_keeps_contrast() {
        let p = LatticeParams::new(150.0).unwrap();
        let traj = Trajectory::adiabatic_sine(SITE, 5.0 * p.tau_ho()).unwrap();
        let field = SpinDownField::balanced(p.u0);
        let r = interferometer_contrast(&traj, &p, &field, true, SimConfig::default()).unwrap();
        assert!(r.contrast > 0.99, "{}", r.contrast);
        assert!(r.sqrt_f2 > 0.99);
    }

    #[test]
    fn compensation_raises_contrast() {
        let p = LatticeParams::new(150.0).unwrap();
        let traj = Trajectory::adiabatic_sine(SITE, 2.0 * p.tau_ho()).unwrap();
        let field = SpinDownField::balanced(p.u0);
        let on = interferometer_contrast(&traj, &p, &field, true, SimConfig::default()).unwrap();
        let off = interferometer_contrast(&traj, &p, &field, false, SimConfig::default()).unwrap();
        assert!(off.contrast < on.contrast, "{} vs {}", off.contrast, on.contrast);
        // the spin-up arm does not depend on the spin-down control
        assert_eq!(on.sqrt_f2, off.sqrt_f2);
    }

    #[test]
    fn uncompensable_field_is_rejected() {
        let p = LatticeParams::new(150.0).unwrap();
        let traj = Trajectory::linear(SITE, p.tau_ho()).unwrap();
        let field = SpinDownField {
            i_l: 1.0,
            i_r: 20.0,
            ..SpinDownField::balanced(1.0)
        };
        let err = interferometer_contrast(&traj, &p, &field, true, SimConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InfeasibleCompensation { .. }));
    }
}
