//! Fidelity maximization over the Fourier coefficients of the trajectory.
//!
//! The search minimizes J = 1 − F + w·P, where P penalizes trap speeds above
//! 98% of the slew limit. A quasi-Newton (BFGS) descent on central
//! finite-difference gradients is followed by a Nelder–Mead polish. Every
//! evaluated point that respects the hard slew limit is a candidate answer;
//! the best of them is returned. If the search ends outside the limit the
//! penalty weight is raised tenfold and the search resumes.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{bound_level_count, LatticeParams};
use crate::par;
use crate::protocols::{
    default_j_max, feasibility_check, max_speed, project_to_fourier, tau_cb, FeasibilityLimits,
    Trajectory,
};
use crate::thermal::{ThermalConfig, ThermalEnsemble};
use crate::transport::{SimConfig, TransportSim};

/// Penalty starts at this fraction of the slew limit.
const SLEW_MARGIN: f64 = 0.98;
/// Velocity samples used by the penalty.
const PENALTY_SAMPLES: usize = 512;
/// Finite-difference step on the coefficients (1/k).
const FD_STEP: f64 = 1e-5;
/// Radii in the thermal objective during the search.
const SEARCH_RADII: usize = 5;
/// Velocity samples of the hard slew check, and the margin covering the
/// peaks missed between samples.
const HARD_SAMPLES: usize = 4096;
const HARD_MARGIN: f64 = 0.9999;
/// Penalty escalations after the first search.
const ESCALATIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    /// Highest Fourier index; derived from the bandwidth when absent.
    pub j_max: Option<usize>,
    pub even_only: bool,
    pub penalty_weight: f64,
    /// Objective evaluations per start.
    pub max_evals: usize,
    /// Extra starts from randomly perturbed seeds.
    pub restarts: usize,
    pub seed: u64,
    /// Convergence tolerance on F.
    pub tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            j_max: None,
            even_only: true,
            penalty_weight: 10.0,
            max_evals: 4000,
            restarts: 0,
            seed: 0,
            tol: 1e-5,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.j_max.is_some_and(|j| j < 2) {
            return Err(Error::Input("j_max must be at least 2".into()));
        }
        if self.max_evals == 0 || !(self.tol > 0.0) || !(self.penalty_weight >= 0.0) {
            return Err(Error::Input(
                "max_evals and tol must be positive, penalty_weight non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub d: f64,
    pub tau: f64,
    pub j_max: usize,
    /// b_1 … b_jmax.
    pub coeffs: Vec<f64>,
    pub fidelity: f64,
    pub detection_fidelity: f64,
    /// Fidelity of the starting trajectory.
    pub start_fidelity: f64,
    pub evals: usize,
    pub feasible: bool,
    pub budget_exhausted: bool,
    /// Best fidelity among the feasible trajectories evaluated so far, after
    /// each iteration; non-decreasing.
    pub trace: Vec<f64>,
}

impl OptimResult {
    pub fn trajectory(&self) -> Result<Trajectory> {
        Trajectory::fourier(self.d, self.tau, self.coeffs.clone())
    }
}

/// What the search maximizes: the on-axis or the thermally averaged fidelity.
#[derive(Debug, Clone)]
pub enum Objective {
    OnAxis(TransportSim),
    Thermal {
        search: ThermalEnsemble,
        full: ThermalEnsemble,
    },
}

impl Objective {
    pub fn new(
        params: &LatticeParams,
        thermal: Option<&ThermalConfig>,
        sim: SimConfig,
        tau: f64,
    ) -> Result<Self> {
        let sim = SimConfig {
            grid: sim.grid_for(tau, params),
            ..sim
        };
        Ok(match thermal {
            None => Objective::OnAxis(TransportSim::new(params, sim)?),
            Some(t) => Objective::Thermal {
                search: ThermalEnsemble::new(params, t, sim, SEARCH_RADII.min(t.n_radii))?,
                full: ThermalEnsemble::new(params, t, sim, t.n_radii)?,
            },
        })
    }

    fn search_fidelity(&self, traj: &Trajectory) -> Result<f64> {
        match self {
            Objective::OnAxis(s) => s.fidelity(traj),
            Objective::Thermal { search, .. } => search.fidelity(traj),
        }
    }

    /// (fidelity, detection fidelity) with the full evaluation.
    pub fn evaluate(&self, traj: &Trajectory) -> Result<(f64, f64)> {
        match self {
            Objective::OnAxis(s) => {
                let r = s.run(traj)?;
                Ok((r.fidelity, r.detection_fidelity))
            }
            Objective::Thermal { full, .. } => {
                let r = full.evaluate(traj)?;
                Ok((r.fidelity, r.detection_fidelity))
            }
        }
    }
}

struct Problem<'a> {
    d: f64,
    tau: f64,
    j_max: usize,
    active: Vec<usize>,
    v_soft: f64,
    v_max: f64,
    weight: AtomicU64,
    objective: &'a Objective,
    evals: AtomicUsize,
    incumbent: Mutex<Option<(f64, DVector<f64>)>>,
}

impl Problem<'_> {
    fn coeffs(&self, x: &DVector<f64>) -> Vec<f64> {
        let mut c = vec![0.0; self.j_max];
        for (k, &j) in self.active.iter().enumerate() {
            c[j - 1] = x[k];
        }
        c
    }

    fn pack(&self, coeffs: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.active.len(),
            self.active.iter().map(|&j| coeffs.get(j - 1).copied().unwrap_or(0.0)),
        )
    }

    fn trajectory(&self, x: &DVector<f64>) -> Result<Trajectory> {
        Trajectory::fourier(self.d, self.tau, self.coeffs(x))
    }

    fn penalty(&self, traj: &Trajectory) -> f64 {
        let n = PENALTY_SAMPLES;
        let mut acc = 0.0;
        for i in 0..=n {
            let v = traj.velocity(self.tau * i as f64 / n as f64).abs();
            if v > self.v_soft {
                acc += ((v - self.v_soft) / self.v_soft).powi(2);
            }
        }
        acc / (n + 1) as f64
    }

    /// (J, F)
    fn cost(&self, x: &DVector<f64>) -> Result<(f64, f64)> {
        self.evals.fetch_add(1, Ordering::Relaxed);
        let traj = self.trajectory(x)?;
        let f = self.objective.search_fidelity(&traj)?;
        if max_speed(&traj, HARD_SAMPLES) <= HARD_MARGIN * self.v_max {
            self.offer(f, x);
        }
        Ok((1.0 - f + self.weight() * self.penalty(&traj), f))
    }

    fn offer(&self, f: f64, x: &DVector<f64>) {
        let mut inc = self.incumbent.lock().expect("incumbent lock");
        let better = match inc.as_ref() {
            None => true,
            // ties broken on the coefficients so parallel order cannot matter
            Some((fb, xb)) => {
                f > *fb || (f == *fb && x.iter().zip(xb.iter()).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne()) == Some(std::cmp::Ordering::Less))
            }
        };
        if better {
            *inc = Some((f, x.clone()));
        }
    }

    /// Best feasible fidelity so far (0 before any feasible point).
    fn best_f(&self) -> f64 {
        self.incumbent.lock().expect("incumbent lock").as_ref().map_or(0.0, |b| b.0)
    }

    fn weight(&self) -> f64 {
        f64::from_bits(self.weight.load(Ordering::Relaxed))
    }

    fn set_weight(&self, w: f64) {
        self.weight.store(w.to_bits(), Ordering::Relaxed);
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let n = x.len();
        let points: Vec<DVector<f64>> = (0..2 * n)
            .map(|k| {
                let mut p = x.clone();
                p[k / 2] += if k % 2 == 0 { FD_STEP } else { -FD_STEP };
                p
            })
            .collect();
        let costs = par::map(&points, |p| self.cost(p).map(|c| c.0))
            .into_iter()
            .collect::<Result<Vec<f64>>>()?;
        Ok(DVector::from_fn(n, |i, _| {
            (costs[2 * i] - costs[2 * i + 1]) / (2.0 * FD_STEP)
        }))
    }

    fn evals(&self) -> usize {
        self.evals.load(Ordering::Relaxed)
    }
}

struct Search {
    x: DVector<f64>,
    j: f64,
    trace: Vec<f64>,
    exhausted: bool,
}

fn bfgs(prob: &Problem, x0: DVector<f64>, j0: f64, budget: usize, tol: f64) -> Result<Search> {
    let n = x0.len();
    let mut x = x0;
    let mut j = j0;
    let mut trace = vec![prob.best_f()];
    let mut g = prob.gradient(&x)?;
    let mut h: Option<DMatrix<f64>> = None;
    let mut stalls = 0;
    let exhausted = loop {
        if prob.evals() + 2 * n + 1 > budget {
            break true;
        }
        let gnorm = g.norm();
        if gnorm < 1e-10 {
            break false;
        }
        let mut p = match &h {
            Some(h) => -(h * &g),
            None => -&g * (0.05 / gnorm),
        };
        if p.dot(&g) >= 0.0 {
            h = None;
            p = -&g * (0.05 / gnorm);
        }
        // backtracking line search with the Armijo condition
        let slope = p.dot(&g);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            if prob.evals() >= budget {
                break;
            }
            let trial = &x + &p * alpha;
            let (jt, _) = prob.cost(&trial)?;
            if jt <= j + 1e-4 * alpha * slope {
                accepted = Some((trial, jt));
                break;
            }
            alpha *= 0.5;
        }
        let Some((x_new, j_new)) = accepted else {
            if h.is_some() {
                h = None;
                continue;
            }
            break prob.evals() >= budget;
        };
        if prob.evals() + 2 * n > budget {
            x = x_new;
            j = j_new;
            trace.push(prob.best_f());
            break true;
        }
        let g_new = prob.gradient(&x_new)?;
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-14 {
            let hm = h.take().unwrap_or_else(|| DMatrix::identity(n, n) * (sy / y.dot(&y)));
            let rho = 1.0 / sy;
            let hy = &hm * &y;
            let yhy = y.dot(&hy);
            // H ← H + ρ²(sᵀy + yᵀHy)ssᵀ − ρ(Hy sᵀ + s yᵀH)
            let updated = &hm + (&s * s.transpose()) * (rho * rho * (sy + yhy))
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
            h = Some(updated);
        } else {
            h = None;
        }
        let gain = j - j_new;
        x = x_new;
        j = j_new;
        g = g_new;
        trace.push(prob.best_f());
        stalls = if gain < 0.1 * tol { stalls + 1 } else { 0 };
        if stalls >= 2 {
            break false;
        }
    };
    Ok(Search {
        x,
        j,
        trace,
        exhausted,
    })
}

fn nelder_mead(prob: &Problem, start: &Search, budget: usize, tol: f64) -> Result<Search> {
    let n = start.x.len();
    let mut trace = Vec::new();
    let mut simplex: Vec<(DVector<f64>, f64)> = vec![(start.x.clone(), start.j)];
    let scale = 1e-3 * start.x.amax().max(0.05);
    for i in 0..n {
        if prob.evals() >= budget {
            break;
        }
        let mut v = start.x.clone();
        v[i] += scale;
        let (jv, _) = prob.cost(&v)?;
        simplex.push((v, jv));
    }
    if simplex.len() < n + 1 {
        return Ok(Search {
            x: start.x.clone(),
            j: start.j,
            trace,
            exhausted: true,
        });
    }
    let mut exhausted = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        trace.push(prob.best_f());
        if simplex[n].1 - simplex[0].1 < 0.01 * tol {
            break;
        }
        if prob.evals() + 2 > budget {
            exhausted = true;
            break;
        }
        let centroid = simplex[..n].iter().fold(DVector::zeros(n), |acc, v| acc + &v.0) / n as f64;
        let worst = simplex[n].clone();
        let reflect = &centroid + (&centroid - &worst.0);
        let (jr, _) = prob.cost(&reflect)?;
        if jr < simplex[0].1 {
            let expand = &centroid + (&reflect - &centroid) * 2.0;
            let (je, _) = prob.cost(&expand)?;
            simplex[n] = if je < jr { (expand, je) } else { (reflect, jr) };
        } else if jr < simplex[n - 1].1 {
            simplex[n] = (reflect, jr);
        } else {
            let contract = if jr < worst.1 {
                &centroid + (&reflect - &centroid) * 0.5
            } else {
                &centroid + (&worst.0 - &centroid) * 0.5
            };
            let (jc, _) = prob.cost(&contract)?;
            if jc < worst.1.min(jr) {
                simplex[n] = (contract, jc);
            } else {
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    if prob.evals() >= budget {
                        break;
                    }
                    let shrunk = &best + (&v.0 - &best) * 0.5;
                    let (js, _) = prob.cost(&shrunk)?;
                    *v = (shrunk, js);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, j) = simplex.swap_remove(0);
    Ok(Search {
        x,
        j,
        trace,
        exhausted,
    })
}

/// Largest s ∈ [0, 1] with max |ẋ| of `base + s·(x − base)` below `v`.
fn feasible_blend(prob: &Problem, base: &DVector<f64>, x: &DVector<f64>, v: f64) -> Result<DVector<f64>> {
    let speed = |y: &DVector<f64>| -> Result<f64> { Ok(max_speed(&prob.trajectory(y)?, 4096)) };
    if speed(x)? <= v {
        return Ok(x.clone());
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if speed(&(base + (x - base) * mid))? <= v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(base + (x - base) * lo)
}

/// Coefficients of the starting trajectory: the classical ansatz projected
/// onto the basis, or the linear ramp when τ is below the classical limit.
pub fn seed_coefficients(d: f64, tau: f64, params: &LatticeParams, j_max: usize, even_only: bool) -> Result<Vec<f64>> {
    let traj = if tau >= tau_cb(d, params) {
        Trajectory::classical_ansatz(d, tau, params)?
    } else {
        Trajectory::linear(d, tau)?
    };
    Ok(project_to_fourier(&traj, j_max, even_only)?.coeffs)
}

/// Maximizes the fidelity of a transport over distance `d` in time `tau`.
pub fn optimize(
    tau: f64,
    d: f64,
    params: &LatticeParams,
    thermal: Option<&ThermalConfig>,
    limits: &FeasibilityLimits,
    sim: SimConfig,
    config: &OptimizerConfig,
) -> Result<OptimResult> {
    let objective = Objective::new(params, thermal, sim, tau)?;
    optimize_with(&objective, tau, d, params, limits, config, &[])
}

/// Optimization with a prepared objective and extra candidate seeds (full
/// coefficient vectors). The best of the ansatz seed and the candidates
/// starts the search.
pub fn optimize_with(
    objective: &Objective,
    tau: f64,
    d: f64,
    params: &LatticeParams,
    limits: &FeasibilityLimits,
    config: &OptimizerConfig,
    candidates: &[Vec<f64>],
) -> Result<OptimResult> {
    config.validate()?;
    limits.validate()?;
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("duration must be positive, got {tau}")));
    }
    let j_max = config.j_max.unwrap_or_else(|| default_j_max(tau, params, limits));
    let active: Vec<usize> = (1..=j_max).filter(|j| !config.even_only || j % 2 == 0).collect();
    let v_max = params.velocity_from_slew(limits.max_slew).unwrap_or(f64::INFINITY);
    let prob = Problem {
        d,
        tau,
        j_max,
        active,
        v_soft: SLEW_MARGIN * v_max,
        v_max,
        weight: AtomicU64::new(config.penalty_weight.to_bits()),
        objective,
        evals: AtomicUsize::new(0),
        incumbent: Mutex::new(None),
    };

    // ansatz seed, shrunk toward the plain cosine ramp until it respects the slew margin
    let ansatz = prob.pack(&seed_coefficients(d, tau, params, j_max, config.even_only)?);
    let zero = DVector::zeros(ansatz.len());
    let mut seeds = vec![feasible_blend(&prob, &zero, &ansatz, prob.v_soft)?];
    for c in candidates {
        let c = prob.pack(c);
        let blended = feasible_blend(&prob, &zero, &c, prob.v_soft)?;
        if blended != c {
            seeds.push(blended);
        }
        seeds.push(c);
    }
    let mut start: Option<(DVector<f64>, f64, f64)> = None;
    for s in seeds {
        let (j, f) = prob.cost(&s)?;
        if start.as_ref().is_none_or(|b| j < b.1) {
            start = Some((s, j, f));
        }
    }
    let (x0, j0, f0) = start.expect("at least one seed");

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = vec![prob.best_f()];
    let mut best: Option<Search> = None;
    let mut exhausted = false;
    let descend = |xs: DVector<f64>, js: f64, evals: usize| -> Result<Search> {
        let budget = prob.evals() + evals;
        let mut run = bfgs(&prob, xs, js, budget, config.tol)?;
        let polish_budget = budget.min(prob.evals() + 60 * run.x.len().max(1));
        let polished = nelder_mead(&prob, &run, polish_budget, config.tol)?;
        run.trace.extend(polished.trace);
        if polished.j < run.j {
            run.x = polished.x;
            run.j = polished.j;
        }
        run.exhausted |= polished.exhausted && prob.evals() >= budget;
        Ok(run)
    };
    for attempt in 0..=config.restarts {
        let (xs, js) = if attempt == 0 {
            (x0.clone(), j0)
        } else {
            let spread = 0.05 * x0.amax().max(0.05);
            let normal = Normal::new(0.0, spread).expect("positive spread");
            let x = x0.map(|v| v + normal.sample(&mut rng));
            let (j, _) = prob.cost(&x)?;
            (x, j)
        };
        let run = descend(xs, js, config.max_evals)?;
        exhausted |= run.exhausted;
        trace.extend_from_slice(&run.trace);
        if best.as_ref().is_none_or(|b| run.j < b.j) {
            best = Some(run);
        }
    }
    let mut x = best.expect("at least one attempt").x;

    // penalty continuation while the search ends outside the hard limit
    let mut weight = config.penalty_weight.max(1.0);
    for _ in 0..ESCALATIONS {
        if max_speed(&prob.trajectory(&x)?, HARD_SAMPLES) <= HARD_MARGIN * v_max {
            break;
        }
        weight *= 10.0;
        prob.set_weight(weight);
        let (j, _) = prob.cost(&x)?;
        let run = descend(x, j, config.max_evals / 2)?;
        exhausted |= run.exhausted;
        trace.extend_from_slice(&run.trace);
        x = run.x;
    }
    let incumbent = prob.incumbent.lock().expect("incumbent lock").take();
    if let Some((_, xi)) = incumbent {
        x = xi;
    }
    let traj = prob.trajectory(&x)?;
    let report = feasibility_check(&traj, limits, params)?;
    let (fidelity, detection_fidelity) = objective.evaluate(&traj)?;
    Ok(OptimResult {
        d,
        tau,
        j_max,
        coeffs: prob.coeffs(&x),
        fidelity,
        detection_fidelity,
        start_fidelity: f0,
        evals: prob.evals(),
        feasible: report.feasible,
        budget_exhausted: exhausted,
        trace,
    })
}

/// Optimizes along decreasing durations, seeding each run with the previous
/// coefficients (same shape on the new time axis).
pub fn warm_start_chain(
    taus: &[f64],
    d: f64,
    params: &LatticeParams,
    thermal: Option<&ThermalConfig>,
    limits: &FeasibilityLimits,
    sim: SimConfig,
    config: &OptimizerConfig,
) -> Result<Vec<OptimResult>> {
    if taus.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Input("durations must be strictly decreasing".into()));
    }
    let mut out: Vec<OptimResult> = Vec::with_capacity(taus.len());
    for &tau in taus {
        let objective = Objective::new(params, thermal, sim, tau)?;
        let candidates: Vec<Vec<f64>> = out.last().map(|r| r.coeffs.clone()).into_iter().collect();
        let res = optimize_with(&objective, tau, d, params, limits, config, &candidates)?;
        log::info!(
            "u0 = {} τ/τ_HO = {:.3}: F = {:.6}, detection {:.6}",
            params.u0,
            tau / params.tau_ho(),
            res.fidelity,
            res.detection_fidelity
        );
        out.push(res);
    }
    Ok(out)
}

/// τ where `values` (sampled at ascending `taus`) first rises through
/// `threshold`, scanning down from the longest duration; linear interpolation.
pub fn crossing(taus: &[f64], values: &[f64], threshold: f64) -> Option<f64> {
    let n = taus.len().min(values.len());
    if n == 0 || values[n - 1] < threshold {
        return None;
    }
    for k in (0..n - 1).rev() {
        if values[k] < threshold {
            let (t0, t1, v0, v1) = (taus[k], taus[k + 1], values[k], values[k + 1]);
            return Some(t0 + (threshold - v0) * (t1 - t0) / (v1 - v0));
        }
    }
    None
}

/// Result of a speed-limit scan at one depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QslRow {
    pub u0: f64,
    pub tau_ho: f64,
    /// Bound levels below the barrier top.
    pub levels: usize,
    /// Ascending durations and the optimized results there.
    pub results: Vec<OptimResult>,
    /// Duration where the detection fidelity crosses the threshold.
    pub transition: Option<f64>,
}

impl QslRow {
    pub fn taus(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.tau).collect()
    }

    /// Shortest duration reaching `threshold` in site-resolved fidelity.
    pub fn fidelity_crossing(&self, threshold: f64) -> Option<f64> {
        let f: Vec<f64> = self.results.iter().map(|r| r.fidelity).collect();
        crossing(&self.taus(), &f, threshold)
    }
}

/// For each depth, optimizes over `tau_fracs`·τ_HO(u0) with a warm-start
/// chain and locates the detection-fidelity transition.
#[allow(clippy::too_many_arguments)]
pub fn scan_qsl(
    u0_list: &[f64],
    tau_fracs: &[f64],
    threshold: f64,
    d: f64,
    base: &LatticeParams,
    limits: &FeasibilityLimits,
    sim: SimConfig,
    config: &OptimizerConfig,
) -> Result<Vec<QslRow>> {
    let mut fracs = tau_fracs.to_vec();
    fracs.sort_by(|a, b| b.total_cmp(a));
    fracs.dedup();
    let rows = par::map(u0_list, |&u0| -> Result<QslRow> {
        let params = base.with_depth(u0);
        params.validate()?;
        let taus: Vec<f64> = fracs.iter().map(|f| f * params.tau_ho()).collect();
        let mut results = warm_start_chain(&taus, d, &params, None, limits, sim, config)?;
        results.reverse();
        let asc: Vec<f64> = results.iter().map(|r| r.tau).collect();
        let det: Vec<f64> = results.iter().map(|r| r.detection_fidelity).collect();
        let transition = crossing(&asc, &det, threshold);
        if transition.is_none() {
            log::warn!("u0 = {u0}: no crossing of {threshold} in the duration grid");
        }
        Ok(QslRow {
            u0,
            tau_ho: params.tau_ho(),
            levels: bound_level_count(&params),
            results,
            transition,
        })
    });
    rows.into_iter().collect()
}
