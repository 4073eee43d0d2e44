//! Periodic spatial grid and wave functions sampled on it.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::SITE;

/// Size of the periodic box, in lattice sites and samples per site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_sites: usize,
    pub pts_per_site: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_sites: 16,
            pts_per_site: 64,
        }
    }
}

impl GridSpec {
    pub fn refined(self) -> Self {
        Self {
            pts_per_site: self.pts_per_site * 2,
            ..self
        }
    }
}

/// Sample positions x_k = (k − N/2)·dx on a box of `n_sites` sites; site 0
/// is centred on x = 0, so the box spans sites −n/2 … n/2 − 1.
#[derive(Clone)]
pub struct Grid {
    spec: GridSpec,
    dx: f64,
    x: Vec<f64>,
    p: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n_sites", &self.spec.n_sites)
            .field("pts_per_site", &self.spec.pts_per_site)
            .field("dx", &self.dx)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        let n = spec.n_sites * spec.pts_per_site;
        if spec.n_sites < 2 || spec.pts_per_site < 4 || !n.is_power_of_two() {
            return Err(Error::Input(format!(
                "grid needs ≥ 2 sites, ≥ 4 points per site and a power-of-two total, got {}×{}",
                spec.n_sites, spec.pts_per_site
            )));
        }
        let dx = SITE / spec.pts_per_site as f64;
        let half = (n / 2) as f64;
        let x = (0..n).map(|k| (k as f64 - half) * dx).collect();
        let dp = 2.0 * PI / (n as f64 * dx);
        let p = (0..n)
            .map(|k| {
                let k = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
                k * dp
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            spec,
            dx,
            x,
            p,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Momentum samples in FFT order.
    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn box_length(&self) -> f64 {
        self.spec.n_sites as f64 * SITE
    }

    /// Largest representable momentum π/dx.
    pub fn p_max(&self) -> f64 {
        PI / self.dx
    }

    /// Lowest and highest site index inside the box.
    pub fn site_range(&self) -> (i64, i64) {
        let half = (self.spec.n_sites / 2) as i64;
        (-half, half - 1)
    }

    pub(crate) fn fft_forward(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, scratch);
    }

    /// Unnormalized inverse transform; callers divide by N.
    pub(crate) fn fft_inverse(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, scratch);
    }

    pub(crate) fn scratch_len(&self) -> usize {
        self.forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len())
    }
}

/// Complex amplitudes on a [`Grid`], normalized so that Σ|ψ|²·dx = 1.
#[derive(Debug, Clone)]
pub struct WaveFunction {
    grid: Arc<Grid>,
    amps: Vec<Complex64>,
}

impl WaveFunction {
    /// Wraps raw amplitudes and normalizes them.
    pub fn new(grid: Arc<Grid>, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} amplitudes for a grid of {} points",
                amps.len(),
                grid.len()
            )));
        }
        let mut psi = Self { grid, amps };
        if psi.norm_sq() == 0.0 {
            return Err(Error::Input("cannot normalize a zero wave function".into()));
        }
        psi.normalize();
        Ok(psi)
    }

    /// Normalized Gaussian centred at `x0` with position spread `width`.
    pub fn gaussian(grid: Arc<Grid>, x0: f64, width: f64) -> Self {
        let l = grid.box_length();
        let amps = grid
            .x()
            .iter()
            .map(|&x| {
                let d = wrap(x - x0, l);
                Complex64::new((-d * d / (4.0 * width * width)).exp(), 0.0)
            })
            .collect();
        let mut psi = Self { grid, amps };
        psi.normalize();
        psi
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn normalize(&mut self) {
        let s = self.norm_sq().sqrt();
        let inv = 1.0 / s;
        for a in &mut self.amps {
            *a *= inv;
        }
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &WaveFunction) -> Result<Complex64> {
        self.check_grid(other)?;
        Ok(self.inner_unchecked(other))
    }

    pub(crate) fn inner_unchecked(&self, other: &WaveFunction) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (a, b) in self.amps.iter().zip(&other.amps) {
            s += a.conj() * b;
        }
        s * self.grid.dx()
    }

    pub(crate) fn check_grid(&self, other: &WaveFunction) -> Result<()> {
        if *self.grid != *other.grid {
            return Err(Error::Shape(format!(
                "wave functions live on different grids ({:?} vs {:?})",
                self.grid.spec(),
                other.grid.spec()
            )));
        }
        Ok(())
    }

    /// Probability density |ψ(x)|².
    pub fn density(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// ⟨x⟩ relative to `center`, with positions wrapped into the box around it.
    pub fn mean_position(&self, center: f64) -> f64 {
        let l = self.grid.box_length();
        let dx = self.grid.dx();
        self.grid
            .x()
            .iter()
            .zip(&self.amps)
            .map(|(&x, a)| (center + wrap(x - center, l)) * a.norm_sqr())
            .sum::<f64>()
            * dx
    }

    /// Position spread around `center` (periodic wrap as in [`mean_position`](Self::mean_position)).
    pub fn position_spread(&self, center: f64) -> f64 {
        let mean = self.mean_position(center);
        let l = self.grid.box_length();
        let var: f64 = self
            .grid
            .x()
            .iter()
            .zip(&self.amps)
            .map(|(&x, a)| {
                let d = wrap(x - mean, l);
                d * d * a.norm_sqr()
            })
            .sum::<f64>()
            * self.grid.dx();
        var.sqrt()
    }

    /// Momentum-space amplitudes in FFT order, scaled so Σ|φ|² = 1.
    pub fn momentum_amps(&self) -> Vec<Complex64> {
        let mut buf = self.amps.clone();
        let mut scratch = vec![Complex64::default(); self.grid.scratch_len()];
        self.grid.fft_forward(&mut buf, &mut scratch);
        let s = (self.grid.dx() / self.grid.len() as f64).sqrt();
        buf.iter_mut().for_each(|a| *a *= s);
        buf
    }

    /// Momentum spread √(⟨p²⟩ − ⟨p⟩²).
    pub fn momentum_spread(&self) -> f64 {
        let phi = self.momentum_amps();
        let (mut m1, mut m2) = (0.0, 0.0);
        for (a, &p) in phi.iter().zip(self.grid.p()) {
            let w = a.norm_sqr();
            m1 += w * p;
            m2 += w * p * p;
        }
        (m2 - m1 * m1).max(0.0).sqrt()
    }

    /// Largest momentum-space weight at |p| > `fraction`·p_max relative to the peak.
    pub fn high_momentum_ratio(&self, fraction: f64) -> f64 {
        let phi = self.momentum_amps();
        let cut = fraction * self.grid.p_max();
        let mut peak: f64 = 0.0;
        let mut tail: f64 = 0.0;
        for (a, &p) in phi.iter().zip(self.grid.p()) {
            let m = a.norm();
            peak = peak.max(m);
            if p.abs() > cut {
                tail = tail.max(m);
            }
        }
        if peak == 0.0 {
            0.0
        } else {
            tail / peak
        }
    }

    /// Copy displaced by `shift` (any real distance, periodic).
    ///
    /// Whole-sample shifts are exact index rotations; other shifts apply the
    /// Fourier phase e^{−ip·shift}.
    pub fn translated(&self, shift: f64) -> WaveFunction {
        let n = self.grid.len();
        let steps = shift / self.grid.dx();
        if (steps - steps.round()).abs() < 1e-9 {
            let s = (steps.round() as i64).rem_euclid(n as i64) as usize;
            let mut amps = vec![Complex64::default(); n];
            for (k, a) in self.amps.iter().enumerate() {
                amps[(k + s) % n] = *a;
            }
            return WaveFunction {
                grid: self.grid.clone(),
                amps,
            };
        }
        let mut buf = self.amps.clone();
        let mut scratch = vec![Complex64::default(); self.grid.scratch_len()];
        self.grid.fft_forward(&mut buf, &mut scratch);
        for (a, &p) in buf.iter_mut().zip(self.grid.p()) {
            *a *= Complex64::from_polar(1.0 / n as f64, -p * shift);
        }
        self.grid.fft_inverse(&mut buf, &mut scratch);
        WaveFunction {
            grid: self.grid.clone(),
            amps: buf,
        }
    }
}

/// Wrap a displacement into [−L/2, L/2).
pub(crate) fn wrap(d: f64, l: f64) -> f64 {
    d - l * (d / l + 0.5).floor()
}
