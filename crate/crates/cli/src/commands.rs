//! The six subcommands. Each returns the number of failed cells.

use std::path::PathBuf;

use conveyor::control::{
    apply_plant, iterate_compensation, plant_fidelity, ImpulseResponse, Plant, Signal, SITE_LAMBDA,
};
use conveyor::geometry::{bound_report, record_run, GeometryReport};
use conveyor::interferometer::interferometer_contrast;
use conveyor::lattice::bound_level_count;
use conveyor::optimizer::{crossing, warm_start_chain, OptimResult};
use conveyor::protocols::{Trajectory, TrajectoryRecord};
use conveyor::thermal::{thermal_fidelity, ThermalConfig};
use conveyor::transport::TransportSim;
use conveyor::{LatticeParams, SpinDownField};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Format, KernelSource, ProtocolKind, ProtocolSpec, RunConfig};
use crate::error::CliError;
use crate::output::{read_pairs, write_gnuplot, write_json, write_matrix, Cell, Table};

pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub format: Format,
}

/// A trajectory together with the optimizer record that produced it.
struct Run {
    frac: f64,
    traj: Trajectory,
    optim: Option<OptimResult>,
}

fn fracs_descending(fracs: &[f64]) -> Vec<f64> {
    let mut f = fracs.to_vec();
    f.sort_by(|a, b| b.total_cmp(a));
    f.dedup();
    f
}

fn optimal_runs(
    cfg: &RunConfig,
    params: &LatticeParams,
    thermal: Option<&ThermalConfig>,
    fracs: &[f64],
) -> conveyor::Result<Vec<Run>> {
    let fracs = fracs_descending(fracs);
    let taus: Vec<f64> = fracs.iter().map(|f| f * params.tau_ho()).collect();
    let results = warm_start_chain(&taus, cfg.distance(), params, thermal, &cfg.limits, cfg.sim(), &cfg.optimizer())?;
    let mut runs = fracs
        .into_iter()
        .zip(results)
        .map(|(frac, r)| {
            Ok(Run {
                frac,
                traj: r.trajectory()?,
                optim: Some(r),
            })
        })
        .collect::<conveyor::Result<Vec<_>>>()?;
    runs.reverse();
    Ok(runs)
}

/// Trajectories of the configured protocol (optimized when absent) at
/// ascending durations.
fn protocol_runs(cfg: &RunConfig, fracs: &[f64]) -> conveyor::Result<Vec<Run>> {
    let params = cfg.lattice;
    let d = cfg.distance();
    let spec = cfg.protocol.clone().unwrap_or(ProtocolSpec::Optimal {});
    let mut ascending = fracs_descending(fracs);
    ascending.reverse();
    match spec {
        ProtocolSpec::Optimal {} => optimal_runs(cfg, &params, None, fracs),
        ProtocolSpec::Trajectory { trajectory } => {
            let traj = Trajectory::try_from(trajectory)?;
            Ok(vec![Run {
                frac: traj.tau() / params.tau_ho(),
                traj,
                optim: None,
            }])
        }
        ProtocolSpec::Fourier { coefficients } => ascending
            .into_iter()
            .map(|frac| {
                Ok(Run {
                    frac,
                    traj: Trajectory::fourier(d, frac * params.tau_ho(), coefficients.clone())?,
                    optim: None,
                })
            })
            .collect(),
        named => {
            let kind = named.kind().expect("named protocol");
            ascending
                .into_iter()
                .map(|frac| {
                    let traj = kind.trajectory(d, frac * params.tau_ho(), &params).expect("analytic")?;
                    Ok(Run { frac, traj, optim: None })
                })
                .collect()
        }
    }
}

fn protocol_name(cfg: &RunConfig) -> &'static str {
    cfg.protocol.as_ref().map_or("optimal", |p| p.name())
}

fn field_for(cfg: &RunConfig, u0: f64) -> SpinDownField {
    cfg.interferometer.field.unwrap_or_else(|| SpinDownField::balanced(u0))
}

fn write_run_info(ctx: &Context, command: &str) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Info<'a> {
        command: &'a str,
        version: &'a str,
        config: &'a RunConfig,
    }
    write_json(
        &ctx.out.join("run.json"),
        &Info {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config: &ctx.config,
        },
    )
}

#[derive(Debug, Clone)]
struct CellData {
    fidelity: f64,
    detection: f64,
    contrast: Option<f64>,
    geometry: Option<GeometryReport>,
}

struct SweepRow {
    protocol: ProtocolKind,
    u0: f64,
    t_perp: f64,
    frac: f64,
    tau: f64,
    data: Result<CellData, String>,
}

fn evaluate_cell(
    cfg: &RunConfig,
    params: &LatticeParams,
    t_perp: f64,
    traj: &Trajectory,
    optim: Option<&OptimResult>,
) -> conveyor::Result<CellData> {
    let sim = TransportSim::for_duration(params, cfg.sim(), traj.tau())?;
    let (fidelity, detection) = match (optim, t_perp > 0.0) {
        (Some(r), _) => (r.fidelity, r.detection_fidelity),
        (None, false) => {
            let r = sim.run(traj)?;
            (r.fidelity, r.detection_fidelity)
        }
        (None, true) => {
            let th = thermal_for(cfg, t_perp);
            let r = thermal_fidelity(traj, params, &th, cfg.sim())?;
            (r.fidelity, r.detection_fidelity)
        }
    };
    let contrast = if cfg.sweep.contrast {
        Some(interferometer_contrast(traj, params, &field_for(cfg, params.u0), true, cfg.sim())?.contrast)
    } else {
        None
    };
    let geometry = if cfg.sweep.geometry {
        Some(bound_report(&record_run(&sim, traj, cfg.geometry.stride)?)?)
    } else {
        None
    };
    Ok(CellData {
        fidelity,
        detection,
        contrast,
        geometry,
    })
}

fn thermal_for(cfg: &RunConfig, t_perp: f64) -> ThermalConfig {
    let base = cfg.thermal.unwrap_or_else(|| ThermalConfig::new(t_perp));
    ThermalConfig {
        t_perp_uk: t_perp,
        ..base
    }
}

enum Job {
    Cell {
        protocol: ProtocolKind,
        u0: f64,
        t_perp: f64,
        frac: f64,
    },
    Chain {
        u0: f64,
        t_perp: f64,
    },
}

fn progress(cmd: &str, protocol: &str, u0: f64, frac: f64, outcome: &Result<CellData, String>) {
    match outcome {
        Ok(c) => eprintln!(
            "[{cmd}] {protocol} u0={u0} tau/tau_HO={frac:.4} F={:.6} detection={:.6}",
            c.fidelity, c.detection
        ),
        Err(e) => eprintln!("[{cmd}] {protocol} u0={u0} tau/tau_HO={frac:.4} failed: {e}"),
    }
}

pub fn sweep(ctx: &Context) -> Result<usize, CliError> {
    let cfg = &ctx.config;
    let s = &cfg.sweep;
    let u0s = if s.u0.is_empty() { vec![cfg.lattice.u0] } else { s.u0.clone() };
    let mut protocols = s.protocols.clone();
    protocols.sort();
    protocols.dedup();
    let fracs = fracs_descending(&s.tau_fracs);
    let mut jobs = Vec::new();
    for &protocol in &protocols {
        for &u0 in &u0s {
            for &t_perp in &s.t_perp_uk {
                if protocol == ProtocolKind::Optimal {
                    jobs.push(Job::Chain { u0, t_perp });
                } else {
                    for &frac in &fracs {
                        jobs.push(Job::Cell {
                            protocol,
                            u0,
                            t_perp,
                            frac,
                        });
                    }
                }
            }
        }
    }
    let d = cfg.distance();
    let mut rows: Vec<SweepRow> = jobs
        .par_iter()
        .flat_map_iter(|job| -> Vec<SweepRow> {
            match *job {
                Job::Cell {
                    protocol,
                    u0,
                    t_perp,
                    frac,
                } => {
                    let params = cfg.lattice.with_depth(u0);
                    let tau = frac * params.tau_ho();
                    let data = protocol
                        .trajectory(d, tau, &params)
                        .expect("analytic protocol")
                        .and_then(|traj| evaluate_cell(cfg, &params, t_perp, &traj, None))
                        .map_err(|e| e.to_string());
                    progress("sweep", protocol.name(), u0, frac, &data);
                    vec![SweepRow {
                        protocol,
                        u0,
                        t_perp,
                        frac,
                        tau,
                        data,
                    }]
                }
                Job::Chain { u0, t_perp } => {
                    let params = cfg.lattice.with_depth(u0);
                    let thermal = (t_perp > 0.0).then(|| thermal_for(cfg, t_perp));
                    match optimal_runs(cfg, &params, thermal.as_ref(), &fracs) {
                        Ok(runs) => runs
                            .into_iter()
                            .map(|run| {
                                let data = evaluate_cell(cfg, &params, t_perp, &run.traj, run.optim.as_ref())
                                    .map_err(|e| e.to_string());
                                progress("sweep", "optimal", u0, run.frac, &data);
                                SweepRow {
                                    protocol: ProtocolKind::Optimal,
                                    u0,
                                    t_perp,
                                    frac: run.frac,
                                    tau: run.traj.tau(),
                                    data,
                                }
                            })
                            .collect(),
                        Err(e) => fracs
                            .iter()
                            .map(|&frac| {
                                let data = Err(e.to_string());
                                progress("sweep", "optimal", u0, frac, &data);
                                SweepRow {
                                    protocol: ProtocolKind::Optimal,
                                    u0,
                                    t_perp,
                                    frac,
                                    tau: frac * params.tau_ho(),
                                    data,
                                }
                            })
                            .collect(),
                    }
                }
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        (a.protocol, a.u0, a.t_perp, a.frac)
            .partial_cmp(&(b.protocol, b.u0, b.t_perp, b.frac))
            .expect("finite keys")
    });

    let mut table = Table::new("sweep");
    let mut failed = 0;
    for r in &rows {
        let mut row: Vec<Cell> = vec![
            r.protocol.name().into(),
            r.u0.into(),
            r.t_perp.into(),
            r.frac.into(),
            r.tau.into(),
        ];
        match &r.data {
            Ok(c) => {
                let g = c.geometry.as_ref();
                row.extend([
                    "ok".into(),
                    c.fidelity.into(),
                    c.detection.into(),
                    c.contrast.into(),
                    g.map(|g| g.ell).into(),
                    g.map(|g| g.delta_e).into(),
                    g.map(|g| g.ell_qgt).into(),
                    g.map(|g| g.ell_qb_est).into(),
                    g.map(|g| g.aa_residual).into(),
                    Cell::Empty,
                ]);
            }
            Err(e) => {
                failed += 1;
                row.push("failed".into());
                row.extend(std::iter::repeat_n(Cell::Empty, 8));
                row.push(e.clone().into());
            }
        }
        table.push(row);
    }
    table.write(&ctx.out, ctx.format)?;

    let mut blocks: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
    for r in &rows {
        let title = format!("{} u0={} t_perp_uk={}", r.protocol.name(), r.u0, r.t_perp);
        if blocks.last().is_none_or(|b| b.0 != title) {
            blocks.push((title, Vec::new()));
        }
        if let Ok(c) = &r.data {
            blocks.last_mut().expect("block").1.push(vec![r.frac, c.fidelity, c.detection]);
        }
    }
    write_gnuplot(
        &ctx.out.join("sweep.dat"),
        &["tau_over_tau_ho", "fidelity", "detection_fidelity"],
        &blocks,
    )?;
    write_run_info(ctx, "sweep")?;
    Ok(failed)
}

pub fn landscape(ctx: &Context) -> Result<usize, CliError> {
    let cfg = &ctx.config;
    let l = &cfg.landscape;
    let fracs = fracs_descending(&l.tau_fracs);
    let mut ascending = fracs.clone();
    ascending.reverse();
    let d = cfg.distance();
    let mut u0s = l.u0.clone();
    u0s.sort_by(f64::total_cmp);
    u0s.dedup();

    struct Row {
        u0: f64,
        runs: Result<Vec<Run>, String>,
        adiabatic: Vec<Option<f64>>,
    }
    let rows: Vec<Row> = u0s
        .par_iter()
        .map(|&u0| {
            let params = cfg.lattice.with_depth(u0);
            let runs = optimal_runs(cfg, &params, None, &fracs).map_err(|e| e.to_string());
            if let Ok(runs) = &runs {
                for run in runs {
                    let o = run.optim.as_ref().expect("optimized");
                    eprintln!(
                        "[landscape] u0={u0} tau/tau_HO={:.4} F={:.6} detection={:.6}",
                        run.frac, o.fidelity, o.detection_fidelity
                    );
                }
            } else if let Err(e) = &runs {
                eprintln!("[landscape] u0={u0} failed: {e}");
            }
            let adiabatic = ascending
                .iter()
                .map(|frac| {
                    if !l.adiabatic {
                        return None;
                    }
                    Trajectory::adiabatic_sine(d, frac * params.tau_ho())
                        .and_then(|t| {
                            TransportSim::for_duration(&params, cfg.sim(), t.tau())?.run(&t).map(|r| r.fidelity)
                        })
                        .ok()
                })
                .collect();
            Row { u0, runs, adiabatic }
        })
        .collect();

    let mut table = Table::new("landscape");
    let mut transitions = Table::new("transition");
    let mut failed = 0;
    let mut matrix = Vec::new();
    let mut adiabatic_matrix = Vec::new();
    for row in &rows {
        let params = cfg.lattice.with_depth(row.u0);
        match &row.runs {
            Ok(runs) => {
                for (run, adi) in runs.iter().zip(&row.adiabatic) {
                    let o = run.optim.as_ref().expect("optimized");
                    table.push(vec![
                        row.u0.into(),
                        run.frac.into(),
                        run.traj.tau().into(),
                        "ok".into(),
                        o.fidelity.into(),
                        o.detection_fidelity.into(),
                        (*adi).into(),
                        o.feasible.into(),
                    ]);
                }
                let taus: Vec<f64> = runs.iter().map(|r| r.traj.tau()).collect();
                let det: Vec<f64> = runs.iter().map(|r| r.optim.as_ref().unwrap().detection_fidelity).collect();
                let fid: Vec<f64> = runs.iter().map(|r| r.optim.as_ref().unwrap().fidelity).collect();
                let transition = crossing(&taus, &det, l.threshold);
                let f99 = crossing(&taus, &fid, 0.99);
                transitions.push(vec![
                    row.u0.into(),
                    params.tau_ho().into(),
                    bound_level_count(&params).into(),
                    transition.into(),
                    transition.map(|t| t / params.tau_ho()).into(),
                    f99.map(|t| t / params.tau_ho()).into(),
                ]);
                matrix.push(det);
            }
            Err(_) => {
                failed += ascending.len();
                for frac in &ascending {
                    table.push(vec![
                        row.u0.into(),
                        (*frac).into(),
                        (frac * params.tau_ho()).into(),
                        "failed".into(),
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                    ]);
                }
                matrix.push(vec![f64::NAN; ascending.len()]);
            }
        }
        adiabatic_matrix.push(row.adiabatic.iter().map(|v| v.unwrap_or(f64::NAN)).collect());
    }
    table.write(&ctx.out, ctx.format)?;
    transitions.write(&ctx.out, ctx.format)?;
    write_matrix(&ctx.out.join("landscape_matrix.dat"), &ascending, &u0s, &matrix)?;
    if l.adiabatic {
        write_matrix(&ctx.out.join("adiabatic_matrix.dat"), &ascending, &u0s, &adiabatic_matrix)?;
    }
    write_run_info(ctx, "landscape")?;
    Ok(failed)
}

#[derive(Serialize)]
struct SavedTrajectory {
    tau_over_tau_ho: f64,
    trajectory: TrajectoryRecord,
}

pub fn optimize(ctx: &Context) -> Result<usize, CliError> {
    let cfg = &ctx.config;
    let params = cfg.lattice;
    let runs = optimal_runs(cfg, &params, cfg.thermal.as_ref(), &cfg.optimize.tau_fracs)?;
    let mut table = Table::new("optimize");
    let mut saved = Vec::new();
    for run in &runs {
        let o = run.optim.as_ref().expect("optimized");
        eprintln!(
            "[optimize] tau/tau_HO={:.4} F={:.6} detection={:.6} feasible={}",
            run.frac, o.fidelity, o.detection_fidelity, o.feasible
        );
        table.push(vec![
            params.u0.into(),
            run.frac.into(),
            o.tau.into(),
            o.j_max.into(),
            o.fidelity.into(),
            o.detection_fidelity.into(),
            o.start_fidelity.into(),
            o.evals.into(),
            o.feasible.into(),
            o.budget_exhausted.into(),
        ]);
        saved.push(SavedTrajectory {
            tau_over_tau_ho: run.frac,
            trajectory: run.traj.clone().into(),
        });
    }
    table.write(&ctx.out, ctx.format)?;
    write_json(&ctx.out.join("trajectories.json"), &saved)?;
    write_run_info(ctx, "optimize")?;
    Ok(0)
}

/// Fidelity, compensated contrast, √F² and uncompensated contrast.
type ContrastRow = (f64, f64, f64, Option<f64>);

pub fn interferometer(ctx: &Context) -> Result<usize, CliError> {
    let cfg = &ctx.config;
    let params = cfg.lattice;
    let field = field_for(cfg, params.u0);
    let runs = protocol_runs(cfg, &cfg.interferometer.tau_fracs)?;
    let results: Vec<conveyor::Result<ContrastRow>> = runs
        .par_iter()
        .map(|run| {
            let f = match &run.optim {
                Some(o) => o.fidelity,
                None => TransportSim::for_duration(&params, cfg.sim(), run.traj.tau())?.run(&run.traj)?.fidelity,
            };
            let on = interferometer_contrast(&run.traj, &params, &field, true, cfg.sim())?;
            let off = if cfg.interferometer.uncompensated {
                Some(interferometer_contrast(&run.traj, &params, &field, false, cfg.sim())?.contrast)
            } else {
                None
            };
            eprintln!(
                "[interferometer] tau/tau_HO={:.4} F={f:.6} C={:.6}",
                run.frac, on.contrast
            );
            Ok((f, on.contrast, on.sqrt_f2, off))
        })
        .collect();
    let mut table = Table::new("interferometer");
    for (run, r) in runs.iter().zip(results) {
        let (f, c, s, off) = r?;
        table.push(vec![
            protocol_name(cfg).into(),
            run.frac.into(),
            run.traj.tau().into(),
            f.into(),
            c.into(),
            s.into(),
            off.into(),
        ]);
    }
    table.write(&ctx.out, ctx.format)?;
    write_run_info(ctx, "interferometer")?;
    Ok(0)
}

pub fn geometry(ctx: &Context) -> Result<usize, CliError> {
    let cfg = &ctx.config;
    let params = cfg.lattice;
    let runs = protocol_runs(cfg, &cfg.geometry.tau_fracs)?;
    let reports: Vec<conveyor::Result<(f64, GeometryReport)>> = runs
        .par_iter()
        .map(|run| {
            let sim = TransportSim::for_duration(&params, cfg.sim(), run.traj.tau())?;
            let f = sim.run(&run.traj)?.fidelity;
            let report = bound_report(&record_run(&sim, &run.traj, cfg.geometry.stride)?)?;
            eprintln!(
                "[geometry] tau/tau_HO={:.4} ell={:.6} delta_e*tau={:.6}",
                run.frac,
                report.ell,
                report.delta_e * run.traj.tau()
            );
            Ok((f, report))
        })
        .collect();
    #[derive(Serialize)]
    struct Entry<'a> {
        protocol: &'a str,
        tau_over_tau_ho: f64,
        tau: f64,
        fidelity: f64,
        report: GeometryReport,
    }
    let mut table = Table::new("geometry");
    let mut entries = Vec::new();
    for (run, r) in runs.iter().zip(reports) {
        let (f, g) = r?;
        let b = g.bound_flags;
        table.push(vec![
            protocol_name(cfg).into(),
            run.frac.into(),
            run.traj.tau().into(),
            f.into(),
            g.ell.into(),
            g.delta_e.into(),
            g.ell_geo.into(),
            g.ell_qgt.into(),
            g.ell_qb_est.into(),
            g.delta_e_upper.into(),
            g.tau_mt.into(),
            g.aa_residual.into(),
            b.eq7_flag.into(),
            b.eq3_flag.into(),
            b.tau_over_tau_cb.into(),
            b.eq8_flag.into(),
            b.mt_flag.into(),
            b.ell_over_ell_geo.into(),
        ]);
        entries.push(Entry {
            protocol: protocol_name(cfg),
            tau_over_tau_ho: run.frac,
            tau: run.traj.tau(),
            fidelity: f,
            report: g,
        });
    }
    table.write(&ctx.out, ctx.format)?;
    write_json(&ctx.out.join("geometry_reports.json"), &entries)?;
    write_run_info(ctx, "geometry")?;
    Ok(0)
}

pub fn control(ctx: &Context) -> Result<usize, CliError> {
    let cfg = &ctx.config;
    let c = &cfg.control;
    let params = cfg.lattice;
    if params.e_rec_hz.is_none() {
        return Err(CliError::Config("control needs lattice.e_rec_hz for the time axis".into()));
    }
    let kernel = match &c.kernel {
        KernelSource::Model(m) => m.build()?,
        KernelSource::File { path } => {
            let (t, v) = read_pairs(path)?;
            ImpulseResponse::from_pairs(&t, &v)?
        }
    };
    let mut plant = if c.saturate {
        Plant::new(kernel.clone(), cfg.limits.max_slew)?
    } else {
        Plant::linear(kernel.clone())
    };
    if let Some(nm) = c.noise_nm {
        let lambda = params
            .lambda_nm
            .ok_or_else(|| CliError::Config("position noise in nm needs lattice.lambda_nm".into()))?;
        plant = plant.with_noise(nm, lambda, cfg.seed)?;
    }
    let (target, ideal) = match &c.target_file {
        Some(path) => {
            let (t, x) = read_pairs(path)?;
            (Signal::from_pairs(&t, &x)?, None)
        }
        None => {
            let run = protocol_runs(cfg, &[c.tau_frac])?.into_iter().next().expect("one run");
            let signal = Signal::from_trajectory(&run.traj, &params, kernel.dt_us(), c.pad_us)?;
            (signal, Some(run.traj))
        }
    };

    let write_history = |history: &[f64]| -> Result<(), CliError> {
        let mut t = Table::new("history");
        for (k, r) in history.iter().enumerate() {
            t.push(vec![(k + 1).into(), (*r).into(), (r / SITE_LAMBDA).into()]);
        }
        t.write(&ctx.out, ctx.format)?;
        Ok(())
    };
    let comp = match iterate_compensation(&target, &plant, &c.compensation) {
        Ok(comp) => comp,
        Err(conveyor::Error::Instability { history }) => {
            write_history(&history)?;
            write_run_info(ctx, "control")?;
            return Err(conveyor::Error::Instability { history }.into());
        }
        Err(e) => return Err(e.into()),
    };
    for (k, r) in comp.history.iter().enumerate() {
        eprintln!("[control] iteration {} residual {:.3e} sites", k + 1, r / SITE_LAMBDA);
    }
    write_history(&comp.history)?;

    let mut drive = Table::new("drive");
    for (t, x) in comp.drive.times().into_iter().zip(&comp.drive.values) {
        drive.push(vec![t.into(), (*x).into()]);
    }
    drive.write(&ctx.out, ctx.format)?;
    let mut response = Table::new("response");
    for ((t, x), y) in target.times().into_iter().zip(&target.values).zip(&comp.output.values) {
        response.push(vec![t.into(), (*x).into(), (*y).into()]);
    }
    response.write(&ctx.out, ctx.format)?;

    #[derive(Serialize)]
    struct Summary {
        converged: bool,
        iterations: usize,
        final_residual_lambda: f64,
        final_residual_sites: f64,
        uncompensated_residual_lambda: f64,
        ideal_fidelity: Option<f64>,
        plant_fidelity: Option<f64>,
    }
    let uncompensated = apply_plant(&target, &plant)?.max_deviation(&target)?;
    let (ideal_fidelity, plant_f) = match &ideal {
        Some(traj) => {
            let sim = TransportSim::for_duration(&params, cfg.sim(), traj.tau())?;
            (Some(sim.fidelity(traj)?), Some(plant_fidelity(&sim, traj, &comp.output)?))
        }
        None => (None, None),
    };
    let last = *comp.history.last().expect("at least one iteration");
    write_json(
        &ctx.out.join("control.json"),
        &Summary {
            converged: comp.converged,
            iterations: comp.history.len(),
            final_residual_lambda: last,
            final_residual_sites: last / SITE_LAMBDA,
            uncompensated_residual_lambda: uncompensated,
            ideal_fidelity,
            plant_fidelity: plant_f,
        },
    )?;
    write_run_info(ctx, "control")?;
    Ok(0)
}
