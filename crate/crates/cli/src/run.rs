use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use greedyjump::export::{
    density_csv, histogram_csv, region_csv, reservoir_csv, table_csv, trajectory_csv, write_atomic, write_json,
};
use greedyjump::geometry::{
    hitting_bound, hitting_time, is_periodic_start, predicted_stop_cycle, region_raster, simulated_stop_cycle,
    stall_start, triangle_region, HitOutcome, ViolationKind,
};
use greedyjump::radial::{
    identity_residual_d3, kernel, kernel_row_integral, mc_invariant, reachable, solve_stationary, stationary_mean,
    GridSpec, McConfig, SolverConfig,
};
use greedyjump::validation::{run_suite, SuiteOptions};
use greedyjump::walk::harmonic_first_crossing;
use greedyjump::{greedy_harmonic, simulate_with, DirectionSource, Point, SimulateOptions, SourceKind, Storage, TieMode, TiePolicy};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;

const FULL_STORAGE_LIMIT: u64 = 1_000_000;
const ORBIT_STEP_CAP: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    /// A walk reached an indeterminate step.
    Indeterminate,
    /// At least one acceptance criterion failed.
    Failed,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Failed => 1,
            Status::Indeterminate => 2,
        }
    }
}

pub struct Ctx {
    pub out: PathBuf,
    pub header: Vec<String>,
    pub files: Vec<String>,
}

impl Ctx {
    pub fn new(out: &Path, header: Vec<String>) -> Result<Ctx> {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Ctx {
            out: out.to_path_buf(),
            header,
            files: Vec::new(),
        })
    }

    fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out.join(name);
        write_atomic(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.out.join(name);
        write_json(&path, value).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn header_with(&self, extra: &[String]) -> Vec<String> {
        self.header.iter().chain(extra).cloned().collect()
    }
}

pub fn execute(cmd: &Command, seed: u64, ctx: &mut Ctx) -> Result<Status> {
    match cmd {
        Command::Simulate(a) => simulate(a, seed, ctx),
        Command::Invariant(a) => invariant(a, seed, ctx),
        Command::Solve(a) => solve(a, ctx),
        Command::Kernel(a) => kernel_cmd(a, ctx),
        Command::VdcPeriodic(a) => vdc_periodic(a, ctx),
        Command::VdcRegion(a) => vdc_region(a, ctx),
        Command::Hitting(a) => hitting(a, ctx),
        Command::Stall(a) => stall(a, ctx),
        Command::Stopcycle(a) => stopcycle(a, ctx),
        Command::Harmonic(a) => harmonic(a, ctx),
        Command::Validate(a) => validate(a, seed, ctx),
    }
}

fn point(coords: &[f64]) -> Result<Point> {
    if coords.is_empty() {
        bail!("--start needs at least one coordinate");
    }
    Ok(Point::new(coords.to_vec())?)
}

fn planar(coords: &[f64]) -> Result<Point> {
    if coords.len() != 2 {
        bail!("--start needs two coordinates, got {}", coords.len());
    }
    point(coords)
}

/// Prints to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn say(v: &Value) {
    emit(&serde_json::to_string_pretty(v).expect("json value"));
}

fn simulate(a: &SimulateArgs, seed: u64, ctx: &mut Ctx) -> Result<Status> {
    let kind = SourceKind::from_str(&a.source)?.with_default_seed(seed);
    let mut source = DirectionSource::new(kind.clone())?;
    let x0 = point(&a.start)?;
    let mode = match a.tie {
        TieArg::Halt => TieMode::Halt,
        TieArg::ChoosePlus => TieMode::ChoosePlus,
    };
    let norms_only = a.norms_only || (!a.full && a.n > FULL_STORAGE_LIMIT);
    let storage = if norms_only {
        Storage::NormsOnly {
            reservoir: a.reservoir,
            seed,
        }
    } else {
        Storage::Full
    };
    let opts = SimulateOptions {
        policy: TiePolicy::new(a.tie_tol, mode)?,
        storage,
    };
    let traj = simulate_with(&x0, &mut source, a.n, &opts)?;
    if norms_only {
        ctx.bytes("norms.csv", &trajectory_csv(&traj, &ctx.header)?)?;
        ctx.bytes("reservoir.csv", &reservoir_csv(&traj, &ctx.header)?)?;
    } else {
        ctx.bytes("trajectory.csv", &trajectory_csv(&traj, &ctx.header)?)?;
    }
    let norms = traj.norms();
    let summary = json!({
        "source": kind,
        "dim": traj.dim(),
        "start": x0,
        "start_index": traj.start_index,
        "steps_requested": a.n,
        "steps": traj.steps(),
        "storage": storage,
        "tie_policy": opts.policy,
        "halted": traj.halted(),
        "indeterminate_at": traj.indeterminate_at,
        "tie_overrides": traj.tie_overrides.len(),
        "final_label": traj.label(traj.len() - 1),
        "final_point": traj.last(),
        "final_norm": norms[norms.len() - 1],
        "max_norm": norms.iter().copied().fold(0.0, f64::max),
        "mean_norm": norms.iter().sum::<f64>() / norms.len() as f64,
    });
    ctx.json("trajectory.json", &summary)?;
    say(&summary);
    Ok(if traj.halted() { Status::Indeterminate } else { Status::Ok })
}

fn invariant(a: &InvariantArgs, seed: u64, ctx: &mut Ctx) -> Result<Status> {
    let mut cfg = McConfig::new(a.d, a.steps + a.burnin, seed);
    cfg.burn_in = a.burnin;
    cfg.bins = a.bins;
    cfg.shards = a.shards;
    cfg.r0 = a.r0;
    cfg.r_max = a.r_max;
    cfg.alphas = a.alphas.clone();
    let h = mc_invariant(&cfg)?;
    let exact = stationary_mean(a.d)?;
    let header = ctx.header_with(&[format!("mean: {} (exact {exact})", h.mean)]);
    ctx.bytes("histogram.csv", &histogram_csv(&h, &header)?)?;
    let summary = json!({
        "d": h.d,
        "samples": h.n_samples,
        "burn_in": h.burn_in,
        "shards": h.shards,
        "mean": h.mean,
        "exact_mean": exact,
        "variance": h.variance,
        "naive_standard_error": h.naive_standard_error(),
        "max_r": h.max_r,
        "overflow": h.overflow,
        "tail_threshold": h.tail_threshold,
        "tail_fraction": h.tail_fraction(),
        "exp_moments": h.exp_moments,
    });
    ctx.json("invariant.json", &summary)?;
    say(&summary);
    Ok(Status::Ok)
}

fn solve(a: &SolveArgs, ctx: &mut Ctx) -> Result<Status> {
    let cfg = SolverConfig {
        d: a.d,
        grid: GridSpec {
            n_nodes: a.nodes,
            r_max: a.r_max,
        },
        max_iters: a.max_iters,
        tol: a.tol,
    };
    let g = solve_stationary(&cfg)?;
    ctx.bytes("density.csv", &density_csv(&g, &ctx.header)?)?;
    let identity = if a.d == 3 {
        let hi = (g.nodes[g.nodes.len() - 1] - 1.0).min(5.0);
        let pts = identity_residual_d3(&g, 1.0, hi)?;
        let worst = pts.iter().map(|p| (p.lhs - p.rhs).abs()).fold(0.0, f64::max);
        Some(json!({ "y_range": [1.0, hi], "points": pts.len(), "max_residual": worst }))
    } else {
        None
    };
    let summary = json!({
        "d": g.d,
        "nodes": g.nodes.len(),
        "iterations": g.iterations,
        "residual": g.residual,
        "eigenvalue": g.eigenvalue,
        "discretization_error": g.discretization_error,
        "total_mass": g.total_mass(),
        "mean": g.mean(),
        "exact_mean": stationary_mean(a.d)?,
        "variance": g.variance(),
        "tail_mass": g.tail_mass,
        "identity": identity,
    });
    ctx.json("solve.json", &summary)?;
    say(&summary);
    Ok(Status::Ok)
}

fn kernel_cmd(a: &KernelArgs, ctx: &mut Ctx) -> Result<Status> {
    if a.points < 2 {
        bail!("--points must be at least 2");
    }
    let row = kernel_row_integral(a.d, a.x)?;
    let (lo, hi) = reachable(a.x);
    let rows = (0..a.points)
        .map(|i| {
            let y = lo + (hi - lo) * i as f64 / (a.points - 1) as f64;
            Ok([y, kernel(a.d, a.x, y)?])
        })
        .collect::<greedyjump::Result<Vec<_>>>()?;
    ctx.bytes("kernel.csv", &table_csv(&["y", "density"], &rows, &ctx.header)?)?;
    let summary = json!({
        "d": a.d,
        "x": a.x,
        "support": [lo, hi],
        "integral": row.value,
        "integral_error": row.error,
        "converged": row.converged,
    });
    ctx.json("kernel.json", &summary)?;
    say(&summary);
    Ok(Status::Ok)
}

fn vdc_periodic(a: &VdcPeriodicArgs, ctx: &mut Ctx) -> Result<Status> {
    let rep = is_periodic_start(&planar(&a.start)?, a.b, a.cycles, a.tol)?;
    ctx.json("periodic.json", &rep)?;
    say(&serde_json::to_value(&rep)?);
    let tie = rep.violation.is_some_and(|v| v.kind == ViolationKind::Indeterminate);
    Ok(if tie { Status::Indeterminate } else { Status::Ok })
}

fn vdc_region(a: &VdcRegionArgs, ctx: &mut Ctx) -> Result<Status> {
    let r = region_raster(a.b, a.resolution, a.half_width, a.steps, a.threshold)?;
    ctx.bytes("region.csv", &region_csv(&r, &ctx.header)?)?;
    let triangles = if a.b >= 5 && a.b % 2 == 1 {
        let (t1, t2) = triangle_region(a.b)?;
        json!([t1, t2])
    } else {
        Value::Null
    };
    let summary = json!({
        "b": r.b,
        "resolution": r.resolution,
        "half_width": r.half_width,
        "steps": r.steps,
        "threshold": r.threshold,
        "cells": r.cells.len(),
        "periodic_cells": r.cells.iter().filter(|c| c.periodic).count(),
        "periodic_fraction": r.periodic_fraction(),
        "triangles": triangles,
    });
    ctx.json("region.json", &summary)?;
    say(&summary);
    Ok(Status::Ok)
}

fn hitting(a: &HittingArgs, ctx: &mut Ctx) -> Result<Status> {
    let z = planar(&a.start)?;
    let outcome = hitting_time(&z, a.b, a.target, a.max_steps)?;
    let summary = json!({
        "b": a.b,
        "start": z,
        "start_norm": z.norm(),
        "target_radius": a.target,
        "max_steps": a.max_steps,
        "result": outcome,
        "bound": if a.b == 2 { Some(hitting_bound(&z)) } else { None },
    });
    ctx.json("hitting.json", &summary)?;
    say(&summary);
    Ok(match outcome {
        HitOutcome::Indeterminate { .. } => Status::Indeterminate,
        _ => Status::Ok,
    })
}

fn stall(a: &StallArgs, ctx: &mut Ctx) -> Result<Status> {
    let s = stall_start(a.n)?;
    ctx.json("stall.json", &s)?;
    say(&serde_json::to_value(&s)?);
    Ok(Status::Ok)
}

fn stopcycle(a: &StopcycleArgs, ctx: &mut Ctx) -> Result<Status> {
    let p = predicted_stop_cycle(a.b, a.eps)?;
    let sim = simulated_stop_cycle(a.b, a.eps, a.max_cycles, 1e-9)?;
    let steps = ((p.k + 2) * a.b).min(ORBIT_STEP_CAP);
    let mut src = DirectionSource::vdc(a.b)?;
    let orbit = greedyjump::simulate(&p.start, &mut src, steps, TiePolicy::halt())?;
    ctx.bytes("orbit.csv", &trajectory_csv(&orbit, &ctx.header)?)?;
    let summary = json!({
        "prediction": p,
        "simulated_k": sim,
        "max_cycles": a.max_cycles,
        "agree": sim == Some(p.k),
        "orbit_steps": orbit.steps(),
    });
    ctx.json("stopcycle.json", &summary)?;
    say(&summary);
    Ok(if orbit.halted() { Status::Indeterminate } else { Status::Ok })
}

fn harmonic(a: &HarmonicArgs, ctx: &mut Ctx) -> Result<Status> {
    let xs = greedy_harmonic(a.target, a.n)?;
    let rows: Vec<[f64; 2]> = xs.iter().enumerate().map(|(i, x)| [(i + 1) as f64, *x]).collect();
    ctx.bytes("harmonic.csv", &table_csv(&["k", "x"], &rows, &ctx.header)?)?;
    let crossing = harmonic_first_crossing(&xs, a.target);
    let after = crossing.map(|k| xs[k - 1..].iter().map(|x| (x - a.target).abs()).fold(0.0, f64::max));
    let last = xs[xs.len() - 1];
    let summary = json!({
        "target": a.target,
        "n": a.n,
        "first_crossing": crossing,
        "max_deviation_after_crossing": after,
        "final": last,
        "final_error": (last - a.target).abs(),
    });
    ctx.json("harmonic.json", &summary)?;
    say(&summary);
    Ok(Status::Ok)
}

fn validate(a: &ValidateArgs, seed: u64, ctx: &mut Ctx) -> Result<Status> {
    for id in &a.only {
        if greedyjump::validation::select(std::slice::from_ref(id)).is_empty() {
            bail!("unknown criterion or group `{id}`");
        }
    }
    let opts = SuiteOptions { quick: a.quick, seed };
    let results = run_suite(&a.only, &opts);
    for r in &results {
        emit(&r.line());
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    emit(&format!("{} passed, {failed} failed", results.len() - failed));
    ctx.json(
        "validate.json",
        &json!({ "quick": a.quick, "seed": seed, "passed": failed == 0, "results": results }),
    )?;
    Ok(if failed == 0 { Status::Ok } else { Status::Failed })
}
