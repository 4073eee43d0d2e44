//! Averaging the transport fidelity over the transverse thermal distribution.
//!
//! An atom at radial distance r from the lattice axis sees the reduced depth
//! u0·exp(−2r²/w²). Transverse motion is slow compared with transport, so r is
//! frozen and distributed as P(r) = (r/σ²)·exp(−r²/(2σ²)) with
//! σ² = k_B·T / (m·ω⊥²).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeParams;
use crate::par;
use crate::protocols::Trajectory;
use crate::transport::{SimConfig, TransportSim};

const BOLTZMANN: f64 = 1.380_649e-23;
/// r_max is where P(r) has fallen to this fraction of its maximum.
const TAIL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalConfig {
    /// Transverse temperature in µK.
    pub t_perp_uk: f64,
    /// Transverse trap frequency ω⊥/2π in Hz.
    #[serde(default = "default_omega_perp")]
    pub omega_perp_hz: f64,
    /// Lattice beam waist in µm.
    #[serde(default = "default_waist")]
    pub waist_um: f64,
    #[serde(default = "default_radii")]
    pub n_radii: usize,
}

fn default_omega_perp() -> f64 {
    1e3
}

fn default_waist() -> f64 {
    20.0
}

fn default_radii() -> usize {
    10
}

/// Radial sample points and normalized trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub radii_um: Vec<f64>,
    pub depths: Vec<f64>,
    pub weights: Vec<f64>,
    /// Σ P(r)·dr before normalization.
    pub raw_sum: f64,
}

impl ThermalConfig {
    pub fn new(t_perp_uk: f64) -> Self {
        Self {
            t_perp_uk,
            omega_perp_hz: default_omega_perp(),
            waist_um: default_waist(),
            n_radii: default_radii(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.t_perp_uk) || !ok(self.omega_perp_hz) || !ok(self.waist_um) {
            return Err(Error::Domain(
                "temperature, transverse frequency and waist must be positive".into(),
            ));
        }
        if self.n_radii < 2 {
            return Err(Error::Domain("at least two radial points are needed".into()));
        }
        Ok(())
    }

    /// Rayleigh width σ in µm.
    pub fn sigma_um(&self, params: &LatticeParams) -> Result<f64> {
        self.validate()?;
        let m = params.mass_kg()?;
        let omega = 2.0 * std::f64::consts::PI * self.omega_perp_hz;
        let var = BOLTZMANN * self.t_perp_uk * 1e-6 / (m * omega * omega);
        Ok(var.sqrt() * 1e6)
    }

    /// Lattice depth at radius `r_um`.
    pub fn depth_at(&self, u0: f64, r_um: f64) -> f64 {
        u0 * (-2.0 * r_um * r_um / (self.waist_um * self.waist_um)).exp()
    }

    /// Trapezoid rule on [0, r_max] with `n_radii` points.
    pub fn quadrature(&self, params: &LatticeParams) -> Result<Quadrature> {
        self.quadrature_with(params, self.n_radii)
    }

    pub fn quadrature_with(&self, params: &LatticeParams, n: usize) -> Result<Quadrature> {
        if n < 2 {
            return Err(Error::Domain("at least two radial points are needed".into()));
        }
        let sigma = self.sigma_um(params)?;
        let r_max = tail_radius() * sigma;
        let h = r_max / (n - 1) as f64;
        let radii_um: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let mut weights: Vec<f64> = radii_um
            .iter()
            .map(|&r| r / (sigma * sigma) * (-r * r / (2.0 * sigma * sigma)).exp() * h)
            .collect();
        weights[0] *= 0.5;
        weights[n - 1] *= 0.5;
        let raw_sum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= raw_sum);
        let depths = radii_um.iter().map(|&r| self.depth_at(params.u0, r)).collect();
        Ok(Quadrature {
            radii_um,
            depths,
            weights,
            raw_sum,
        })
    }
}

/// s = r/σ > 1 where s·exp(−(s² − 1)/2) = TAIL.
fn tail_radius() -> f64 {
    let g = |s: f64| s.ln() - 0.5 * (s * s - 1.0) - TAIL.ln();
    let (mut lo, mut hi) = (1.0, 20.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalResult {
    pub fidelity: f64,
    pub detection_fidelity: f64,
    /// Site-resolved fidelity at each quadrature radius.
    pub per_radius: Vec<f64>,
}

/// One simulator per quadrature radius, reused across trajectories.
#[derive(Debug, Clone)]
pub struct ThermalEnsemble {
    quadrature: Quadrature,
    sims: Vec<TransportSim>,
}

impl ThermalEnsemble {
    pub fn new(
        params: &LatticeParams,
        thermal: &ThermalConfig,
        sim: SimConfig,
        n_radii: usize,
    ) -> Result<Self> {
        let quadrature = thermal.quadrature_with(params, n_radii)?;
        let built = par::map(&quadrature.depths, |&u| {
            TransportSim::new(&params.with_depth(u), sim)
        });
        let sims = built.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(Self { quadrature, sims })
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quadrature
    }

    /// Weighted site-resolved fidelity.
    pub fn fidelity(&self, traj: &Trajectory) -> Result<f64> {
        let fs = par::map(&self.sims, |s| s.fidelity(traj));
        let mut acc = 0.0;
        for (f, w) in fs.into_iter().zip(&self.quadrature.weights) {
            acc += w * f?;
        }
        Ok(acc)
    }

    /// Weighted site-resolved and detection fidelities.
    pub fn evaluate(&self, traj: &Trajectory) -> Result<ThermalResult> {
        let runs = par::map(&self.sims, |s| s.run(traj));
        let (mut f, mut det) = (0.0, 0.0);
        let mut per_radius = Vec::with_capacity(runs.len());
        for (r, w) in runs.into_iter().zip(&self.quadrature.weights) {
            let r = r?;
            f += w * r.fidelity;
            det += w * r.detection_fidelity;
            per_radius.push(r.fidelity);
        }
        Ok(ThermalResult {
            fidelity: f,
            detection_fidelity: det,
            per_radius,
        })
    }
}

/// Thermally averaged fidelity with the configured number of radii.
pub fn thermal_fidelity(
    traj: &Trajectory,
    params: &LatticeParams,
    thermal: &ThermalConfig,
    sim: SimConfig,
) -> Result<ThermalResult> {
    let sim = SimConfig {
        grid: sim.grid_for(traj.tau(), params),
        ..sim
    };
    ThermalEnsemble::new(params, thermal, sim, thermal.n_radii)?.evaluate(traj)
}
