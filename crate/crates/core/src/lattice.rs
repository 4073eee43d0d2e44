//! Conveyor-belt potentials and unit conventions.
//!
//! Everything is expressed in recoil units: ℏ = 1, E_rec = 1 and k = 2π/λ = 1.
//! The wavelength is therefore 2π, one lattice site is π, the atomic mass is ½
//! and the spin-up Hamiltonian reads `H = p² − u0·cos²(x − x_trap(t))`.
//! Time is measured in ℏ/E_rec. The optional SI anchors (`e_rec_hz`,
//! `lambda_nm`) are only needed when converting to or from laboratory units.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice wavelength λ in units of 1/k.
pub const WAVELENGTH: f64 = 2.0 * PI;
/// Lattice constant λ/2 in units of 1/k.
pub const SITE: f64 = PI;

const PLANCK: f64 = 6.626_070_15e-34;

/// Depth of the spin-up conveyor belt plus the optional SI anchors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeParams {
    /// Trap depth in recoil energies.
    pub u0: f64,
    /// Recoil frequency E_rec/(2πℏ) in Hz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_rec_hz: Option<f64>,
    /// Lattice wavelength in nm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_nm: Option<f64>,
}

impl LatticeParams {
    pub fn new(u0: f64) -> Result<Self> {
        let params = Self {
            u0,
            e_rec_hz: None,
            lambda_nm: None,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_si(u0: f64, e_rec_hz: f64, lambda_nm: f64) -> Result<Self> {
        let params = Self {
            u0,
            e_rec_hz: Some(e_rec_hz),
            lambda_nm: Some(lambda_nm),
        };
        params.validate()?;
        Ok(params)
    }

    /// Caesium in an 865.9 nm lattice, E_rec = 2πℏ × 2 kHz.
    pub fn cesium(u0: f64) -> Result<Self> {
        Self::with_si(u0, 2.0e3, 865.9)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u0 > 0.0) || !self.u0.is_finite() {
            return Err(Error::Domain(format!("trap depth must be positive, got {}", self.u0)));
        }
        for (name, value) in [("e_rec_hz", self.e_rec_hz), ("lambda_nm", self.lambda_nm)] {
            if let Some(v) = value {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::Domain(format!("{name} must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }

    /// Same SI anchors, different depth.
    pub fn with_depth(&self, u0: f64) -> Self {
        Self { u0, ..*self }
    }

    /// Harmonic trap frequency in E_rec/ℏ.
    pub fn omega_ho(&self) -> f64 {
        2.0 * self.u0.sqrt()
    }

    /// Harmonic oscillation period π/√u0 in ℏ/E_rec.
    pub fn tau_ho(&self) -> f64 {
        PI / self.u0.sqrt()
    }

    /// Checked variant of [`tau_ho`](Self::tau_ho).
    pub fn harmonic_period(&self) -> Result<f64> {
        self.validate()?;
        Ok(self.tau_ho())
    }

    /// Harmonic period in seconds; requires `e_rec_hz`.
    pub fn harmonic_period_s(&self) -> Result<f64> {
        Ok(self.harmonic_period()? * self.time_unit_s()?)
    }

    /// Harmonic ground-state width √(ℏ/(2mω)) in 1/k.
    pub fn delta_x(&self) -> f64 {
        1.0 / self.omega_ho().sqrt()
    }

    /// Harmonic ground-state momentum width ℏ/(2Δx) in ℏk.
    pub fn delta_p(&self) -> f64 {
        0.5 / self.delta_x()
    }

    /// Duration of one ℏ/E_rec in seconds.
    pub fn time_unit_s(&self) -> Result<f64> {
        let f = self
            .e_rec_hz
            .ok_or_else(|| Error::Input("conversion to seconds needs e_rec_hz".into()))?;
        Ok(1.0 / (2.0 * PI * f))
    }

    /// Length 1/k in nm.
    pub fn length_unit_nm(&self) -> Result<f64> {
        let l = self
            .lambda_nm
            .ok_or_else(|| Error::Input("conversion to nm needs lambda_nm".into()))?;
        Ok(l / (2.0 * PI))
    }

    /// Atomic mass implied by the two anchors, m = h/(2 λ² f_rec).
    pub fn mass_kg(&self) -> Result<f64> {
        let f = self
            .e_rec_hz
            .ok_or_else(|| Error::Input("mass needs e_rec_hz".into()))?;
        let l = self
            .lambda_nm
            .ok_or_else(|| Error::Input("mass needs lambda_nm".into()))?
            * 1e-9;
        Ok(PLANCK / (2.0 * l * l * f))
    }

    /// Largest trap-velocity magnitude (1/k per ℏ/E_rec) allowed by a phase
    /// slew limit in rad/µs. A phase of 2π moves the lattice by one site.
    pub fn velocity_from_slew(&self, slew_rad_per_us: f64) -> Result<f64> {
        let unit_us = self.time_unit_s()? * 1e6;
        Ok(0.5 * slew_rad_per_us * unit_us)
    }

    /// Phase slew in rad/µs produced by a trap velocity in recoil units.
    pub fn slew_from_velocity(&self, velocity: f64) -> Result<f64> {
        let unit_us = self.time_unit_s()? * 1e6;
        Ok(2.0 * velocity / unit_us)
    }
}

/// Spin-up conveyor-belt potential, −u0·cos²(x − x_trap).
#[inline]
pub fn potential_up(x: f64, x_trap: f64, u0: f64) -> f64 {
    let c = (x - x_trap).cos();
    -u0 * c * c
}

/// Optical phase that places a standing wave at `x` (φ = 4πx/λ = 2x).
pub fn phase_from_position(x: f64) -> f64 {
    2.0 * x
}

pub fn position_from_phase(phi: f64) -> f64 {
    0.5 * phi
}

/// Polarization-synthesized field seen by the spin-down state.
///
/// Intensities carry the polarizability, so a spin-up atom sees a depth
/// equal to `i_r`. The spin-down light shift weighs the two circular
/// components 7/8 (L) and 1/8 (R).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinDownField {
    pub i_l: f64,
    pub i_r: f64,
    pub phi_l: f64,
    pub phi_r: f64,
    #[serde(default)]
    pub phi_0: f64,
}

impl SpinDownField {
    /// Balanced intensities with both standing waves at the reference phase.
    pub fn balanced(u0: f64) -> Self {
        Self {
            i_l: u0,
            i_r: u0,
            phi_l: 0.0,
            phi_r: 0.0,
            phi_0: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.i_l < 0.0 || self.i_r < 0.0 || !self.i_l.is_finite() || !self.i_r.is_finite() {
            return Err(Error::Domain("intensities must be non-negative".into()));
        }
        if self.i_l == 0.0 && self.i_r == 0.0 {
            return Err(Error::Domain(
                "spin-down position is undefined without light".into(),
            ));
        }
        Ok(())
    }

    // 7·I_L·e^{iφL} + I_R·e^{iφR}; depth, offset and position all follow from it.
    fn phasor(&self) -> Complex64 {
        Complex64::from_polar(7.0 * self.i_l, self.phi_l - self.phi_0)
            + Complex64::from_polar(self.i_r, self.phi_r - self.phi_0)
    }

    /// Lattice contrast U_{0,↓}.
    pub fn depth(&self) -> f64 {
        self.phasor().norm() / 8.0
    }

    /// Constant offset U_offs,↓.
    pub fn offset(&self) -> f64 {
        (7.0 * self.i_l + self.i_r) / 16.0 - 0.5 * self.depth()
    }

    /// Well position x_↓ in 1/k.
    pub fn position(&self) -> f64 {
        0.5 * self.phasor().arg()
    }

    /// −U_offs − U_0·cos²(x − x_↓).
    pub fn potential(&self, x: f64) -> Result<f64> {
        self.validate()?;
        Ok(self.potential_unchecked(x))
    }

    #[inline]
    pub(crate) fn potential_unchecked(&self, x: f64) -> f64 {
        -self.offset() + potential_up(x, self.position(), self.depth())
    }
}

/// Phase φ_L that holds the spin-down lattice at `x_target` while the R
/// standing wave sits at `phi_r`.
///
/// The root is bracketed on the branch |φ_L − θ| ≤ π/2 (θ = 2·x_target),
/// where the phasor's imaginary part is monotone, and refined by bisection.
/// The result is unwrapped to lie closest to `field.phi_l`, so sweeping φ_R
/// and feeding back the last answer tracks a continuous branch.
pub fn compensation_phase(phi_r: f64, field: &SpinDownField, x_target: f64) -> Result<f64> {
    field.validate()?;
    if field.i_l == 0.0 {
        return Err(Error::InfeasibleCompensation { achievable: 0.0 });
    }
    let theta = phase_from_position(x_target);
    let r_term = field.i_r * (phi_r - field.phi_0 - theta).sin();
    // g(δ) = 7·I_L·sin δ + I_R·sin(φ_R − φ0 − θ), δ = φ_L − φ0 − θ
    let g = |delta: f64| 7.0 * field.i_l * delta.sin() + r_term;
    let (mut lo, mut hi) = (-0.5 * PI, 0.5 * PI);
    if g(lo) > 0.0 || g(hi) < 0.0 {
        let reach = (7.0 * field.i_l / field.i_r.max(f64::MIN_POSITIVE)).min(1.0).asin();
        return Err(Error::InfeasibleCompensation { achievable: reach });
    }
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let delta = 0.5 * (lo + hi);
    let raw = delta + field.phi_0 + theta;
    let turns = ((field.phi_l - raw) / (2.0 * PI)).round();
    Ok(raw + 2.0 * PI * turns)
}

/// Number of single-site levels below the barrier top, counted from the
/// band centres of the periodic Hamiltonian (zero quasi-momentum).
///
/// Built from a dense diagonalisation in a plane-wave basis; intended for
/// reporting, not for the hot path.
pub fn bound_level_count(params: &LatticeParams) -> usize {
    use nalgebra::DMatrix;
    // −u0 cos² x = −u0/2 − (u0/4)(e^{2ix} + e^{−2ix}); basis e^{2imx}.
    let m_max = 40i32;
    let n = (2 * m_max + 1) as usize;
    let mut h = DMatrix::<f64>::zeros(n, n);
    for a in 0..n {
        let m = a as i32 - m_max;
        h[(a, a)] = (2.0 * m as f64).powi(2) - 0.5 * params.u0;
        if a + 1 < n {
            h[(a, a + 1)] = -0.25 * params.u0;
            h[(a + 1, a)] = -0.25 * params.u0;
        }
    }
    let eig = h.symmetric_eigenvalues();
    eig.iter().filter(|&&e| e < 0.0).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn harmonic_period_values() {
        let p = LatticeParams::new(1.0).unwrap();
        assert_relative_eq!(p.harmonic_period().unwrap(), PI, max_relative = 1e-15);
        let p = LatticeParams::new(150.0).unwrap();
        assert_relative_eq!(p.tau_ho(), 0.256_509_966, max_relative = 1e-8);
        let p = LatticeParams::with_si(150.0, 2000.0, 865.9).unwrap();
        let t = p.harmonic_period_s().unwrap();
        assert!((t * 1e6 - 20.41).abs() < 0.01, "{t}");
    }

    #[test]
    fn non_positive_depth_rejected() {
        assert!(matches!(LatticeParams::new(0.0), Err(Error::Domain(_))));
        assert!(matches!(LatticeParams::new(-3.0), Err(Error::Domain(_))));
        let bad = LatticeParams {
            u0: -1.0,
            e_rec_hz: None,
            lambda_nm: None,
        };
        assert!(bad.harmonic_period().is_err());
    }

    #[test]
    fn harmonic_widths() {
        let p = LatticeParams::new(150.0).unwrap();
        assert_relative_eq!(p.delta_x() * p.delta_p(), 0.5, max_relative = 1e-14);
        assert_relative_eq!(p.delta_x(), (4.0f64 * 150.0).powf(-0.25), max_relative = 1e-14);
        // one site is about fifteen packet widths
        assert!((SITE / p.delta_x() - 15.5).abs() < 0.1);
    }

    #[test]
    fn cesium_mass_and_width() {
        let p = LatticeParams::cesium(150.0).unwrap();
        let m = p.mass_kg().unwrap();
        assert!((m / 2.2069e-25 - 1.0).abs() < 0.01, "{m}");
        let dx_nm = p.delta_x() * p.length_unit_nm().unwrap();
        assert!((dx_nm - 27.8).abs() < 0.2, "{dx_nm}");
    }

    #[test]
    fn spin_up_potential_shape() {
        let u0 = 150.0;
        assert_relative_eq!(potential_up(0.3, 0.3, u0), -u0);
        assert!(potential_up(0.3 + PI / 2.0, 0.3, u0).abs() < 1e-12);
        // periodic with one site
        for &x in &[-1.2, 0.0, 0.7, 2.9] {
            assert!((potential_up(x, 0.1, u0) - potential_up(x + PI, 0.1, u0)).abs() < 1e-11);
        }
        // steepest slope u0 at ±λ/8
        let h = 1e-6;
        let slope = (potential_up(PI / 4.0 + h, 0.0, u0) - potential_up(PI / 4.0 - h, 0.0, u0)) / (2.0 * h);
        assert!((slope - u0).abs() < 1e-5);
        // curvature at the minimum is 2·u0 (ω² = 4u0 with m = ½)
        let curv = (potential_up(h * 100.0, 0.0, u0) - 2.0 * potential_up(0.0, 0.0, u0)
            + potential_up(-h * 100.0, 0.0, u0))
            / (h * 100.0).powi(2);
        assert!((curv - 2.0 * u0).abs() < 1e-3);
    }

    #[test]
    fn spin_down_pure_l_lattice() {
        let f = SpinDownField {
            i_l: 40.0,
            i_r: 0.0,
            phi_l: 0.8,
            phi_r: 2.0,
            phi_0: 0.0,
        };
        assert_relative_eq!(f.depth(), 7.0 * 40.0 / 8.0, max_relative = 1e-14);
        assert_relative_eq!(f.position(), 0.4, max_relative = 1e-14);
        assert!(f.offset().abs() < 1e-12);
    }

    #[test]
    fn spin_down_balanced_depth_and_offset() {
        // i_l = 7 i_r with equal phases: |49 i_r + i_r| / 8
        let f = SpinDownField {
            i_l: 7.0,
            i_r: 1.0,
            phi_l: 0.3,
            phi_r: 0.3,
            phi_0: 0.0,
        };
        assert_relative_eq!(f.depth(), 50.0 / 8.0, max_relative = 1e-14);
        assert_relative_eq!(f.offset(), 50.0 / 16.0 - 25.0 / 8.0, epsilon = 1e-14);
        let z = SpinDownField::balanced(150.0);
        assert_eq!(z.position(), 0.0);
        assert_relative_eq!(z.depth(), 150.0, max_relative = 1e-14);
        assert!(z.offset() >= 0.0);
    }

    #[test]
    fn spin_down_needs_light() {
        let f = SpinDownField {
            i_l: 0.0,
            i_r: 0.0,
            phi_l: 0.0,
            phi_r: 0.0,
            phi_0: 0.0,
        };
        assert!(matches!(f.potential(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn compensation_trivial_and_ramp() {
        let mut f = SpinDownField::balanced(150.0);
        assert!(compensation_phase(0.0, &f, 0.0).unwrap().abs() < 1e-14);
        // ramp φ_R through one full site of spin-up motion and back
        let mut worst: f64 = 0.0;
        for k in 0..=400 {
            let phi_r = 2.0 * PI * (k as f64 / 200.0);
            f.phi_r = phi_r;
            f.phi_l = compensation_phase(phi_r, &f, 0.0).unwrap();
            worst = worst.max(f.position().abs());
            // closed form on this branch
            let closed = -(phi_r.sin() / 7.0).asin();
            assert!((f.phi_l - closed).abs() < 1e-12, "{k}: {} vs {closed}", f.phi_l);
            assert!(f.phi_l.abs() < PI / 7.0);
        }
        assert!(worst < 1e-6 * WAVELENGTH, "{worst}");
    }

    #[test]
    fn compensation_infeasible_when_r_dominates() {
        let f = SpinDownField {
            i_l: 1.0,
            i_r: 20.0,
            phi_l: 0.0,
            phi_r: 0.0,
            phi_0: 0.0,
        };
        let err = compensation_phase(PI / 2.0, &f, 0.0).unwrap_err();
        assert!(matches!(err, Error::InfeasibleCompensation { .. }));
    }

    #[test]
    fn bound_levels_grow_with_depth() {
        let counts: Vec<usize> = [70.0, 150.0, 300.0]
            .iter()
            .map(|&u| bound_level_count(&LatticeParams::new(u).unwrap()))
            .collect();
        assert!(counts[0] < counts[1] && counts[1] < counts[2], "{counts:?}");
    }

    #[test]
    fn slew_velocity_round_trip() {
        let p = LatticeParams::cesium(150.0).unwrap();
        let v = p.velocity_from_slew(0.84).unwrap();
        assert_relative_eq!(p.slew_from_velocity(v).unwrap(), 0.84, max_relative = 1e-14);
        // 0.84 rad/µs is 0.13 sites per µs
        let sites_per_us = 0.84 / (2.0 * PI);
        assert!((sites_per_us - 0.134).abs() < 0.001);
    }
}
