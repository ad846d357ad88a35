//! One function per subcommand. Each writes its payloads and then the manifest.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use stablefp::analysis::{classify_scaling, parse_q, rate_experiment, RateWindow};
use stablefp::fpe::{duality_gap_from, fpe_solve, gaussian_density, kbe_solve, SolveOptions, Trajectory};
use stablefp::io::{read_field, write_ensemble, write_field};
use stablefp::particles::{
    drift_lipschitz, estimate_density, gronwall_envelope, pathwise_gap, self_convergence_ladder, smooth,
    strong_error_order, Ensemble, McKeanStepper,
};
use stablefp::spectral::{besov_norm, build_partition, shell_norms, synth_besov_field, BesovIndex};
use stablefp::stable::{empirical_charfn, sample_many, StreamKey};
use stablefp::suite::{run_criterion, CRITERIA};
use stablefp::{Field, Grid};

use crate::config::{ExperimentConfig, FieldSource};
use crate::output::{real, resolve_dir, RunDir};
use crate::CliError;

/// Negativity tolerated under the `report` policy before it is flagged.
const NEGATIVITY_FLOOR: f64 = -1e-6;

fn run_dir(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<RunDir, CliError> {
    RunDir::create(resolve_dir(out, cfg.output_dir.as_deref(), &cfg.name))
}

fn coord_header(grid: &Grid) -> Vec<String> {
    ["x", "y"][..grid.dim()].iter().map(|s| s.to_string()).collect()
}

fn coord_cells(grid: &Grid, flat: usize) -> Vec<String> {
    grid.coordinate(flat)[..grid.dim()].iter().map(|&x| real(x)).collect()
}

/// Columns of `fields` (scalar, same grid) keyed by grid point.
fn field_rows(grid: &Grid, fields: &[&Field]) -> Vec<Vec<String>> {
    (0..grid.len())
        .map(|i| {
            let mut r = coord_cells(grid, i);
            r.extend(fields.iter().map(|f| real(f.values()[i])));
            r
        })
        .collect()
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// Requested times plus `0` and the horizon, sorted and deduplicated.
fn observation_times(requested: &[f64], horizon: f64) -> Vec<f64> {
    let mut t: Vec<f64> = requested.iter().copied().filter(|&t| (0.0..=horizon).contains(&t)).collect();
    t.extend([0.0, horizon]);
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

fn solve(cfg: &ExperimentConfig, observe_at: Vec<f64>, record_drift: bool) -> Result<(Grid, Trajectory), CliError> {
    let grid = cfg.grid()?;
    let rho0 = gaussian_density(&grid, cfg.initial.width)?;
    let opts = SolveOptions { observe_at, record_drift };
    let traj = fpe_solve(
        &rho0,
        cfg.alpha,
        &cfg.kernel_spec(),
        cfg.solver.horizon,
        cfg.solver_config(),
        &opts,
        |_| Ok(()),
    )?;
    Ok((grid, traj))
}

/// `cos(2 pi m . x / side)`.
fn cosine_mode(grid: &Grid, mode: &[i64]) -> Field {
    let k = 2.0 * PI / grid.side_length();
    Field::from_fn(*grid, |x| (k * mode.iter().zip(x).map(|(&m, &xi)| m as f64 * xi).sum::<f64>()).cos())
}

fn required<'a, T>(block: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    block.as_ref().ok_or_else(|| CliError::config(format!("this subcommand needs a [{name}] block")))
}

pub fn sample_stable(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<(), CliError> {
    let s = required(&cfg.sampling, "sampling")?;
    let params = cfg.params();
    let samples = sample_many(&params, s.dt, StreamKey::new(cfg.seed, 0, 0), s.count)?;
    let tol = s.tolerance_factor / (s.count as f64).sqrt();
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for xi in &s.frequencies {
        let emp = empirical_charfn(&samples, xi)?;
        let exact = params.charfn(s.dt, xi);
        let err = (emp - exact).norm();
        worst = worst.max(err);
        let mut r: Vec<String> = xi.iter().map(|&v| real(v)).collect();
        r.extend([real(emp.re), real(emp.im), real(exact), real(err), real(tol), u8::from(err <= tol).to_string()]);
        rows.push(r);
    }
    let mut cols: Vec<String> = (0..cfg.dim).map(|i| format!("xi_{i}")).collect();
    cols.extend(header(&["re", "im", "exact", "error", "tolerance", "pass"]));
    let passed = worst <= tol;
    let mut dir = run_dir(cfg, out)?;
    dir.csv("charfn.csv", &cols, &rows)?;
    dir.json("summary.json", &json!({ "count": s.count, "dt": s.dt, "max_error": worst, "tolerance": tol, "passed": passed }))?;
    dir.finish("sample-stable", Some(cfg), Value::Null)?;
    if !passed {
        return Err(CliError::check(format!("characteristic function error {worst:.3e} exceeds {tol:.3e}")));
    }
    Ok(())
}

pub fn besov(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<(), CliError> {
    let b = required(&cfg.besov, "besov")?;
    let grid = cfg.grid()?;
    let field = match &b.source {
        FieldSource::Synthetic { beta, seed } => synth_besov_field(*beta, *seed, &grid)?,
        FieldSource::Initial => gaussian_density(&grid, cfg.initial.width)?,
        FieldSource::File { path } => {
            let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
            read_field(&mut std::io::BufReader::new(file))?
        }
    };
    if field.components() != 1 || field.grid() != &grid {
        return Err(CliError::config("besov field must be scalar and live on the configured grid"));
    }
    let part = build_partition(&grid)?;
    #[derive(Serialize)]
    struct Norm {
        s: f64,
        p: f64,
        q: f64,
        norm: f64,
    }
    let norms = b
        .indices
        .iter()
        .map(|&[s, p, q]| Ok(Norm { s, p, q, norm: besov_norm(&field, BesovIndex::new(s, p, q)?, &part)? }))
        .collect::<Result<Vec<_>, CliError>>()?;
    let per_p = [1.0, 2.0, f64::INFINITY].map(|p| shell_norms(&field, p, &part));
    let [l1, l2, linf] = per_p;
    let (l1, l2, linf) = (l1?, l2?, linf?);
    let rows: Vec<Vec<String>> = (0..l1.len())
        .map(|i| vec![(i as i32 - 1).to_string(), real(l1[i]), real(l2[i]), real(linf[i])])
        .collect();
    let mut dir = run_dir(cfg, out)?;
    dir.csv("shells.csv", &header(&["j", "l1", "l2", "linf"]), &rows)?;
    // q = inf is written as the string "inf"
    let norms_json: Vec<Value> = norms
        .iter()
        .map(|n| {
            let fmt = |v: f64| if v.is_infinite() { json!("inf") } else { json!(v) };
            json!({ "s": n.s, "p": fmt(n.p), "q": fmt(n.q), "norm": n.norm })
        })
        .collect();
    dir.json("besov.json", &json!({ "j_max": part.j_max(), "norms": norms_json }))?;
    dir.finish("besov", Some(cfg), Value::Null)?;
    Ok(())
}

pub fn fpe(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<(), CliError> {
    let grid = cfg.grid()?;
    let part = build_partition(&grid)?;
    let a = cfg.analysis();
    let rho0 = gaussian_density(&grid, cfg.initial.width)?;
    let opts = SolveOptions { observe_at: observation_times(&a.observe, cfg.solver.horizon), record_drift: false };
    let mut rows = Vec::new();
    let traj = fpe_solve(
        &rho0,
        cfg.alpha,
        &cfg.kernel_spec(),
        cfg.solver.horizon,
        cfg.solver_config(),
        &opts,
        |s| {
            let rho = s.rho();
            let mut r = vec![
                real(s.t),
                s.step.to_string(),
                real(s.mass()),
                real(rho.min()),
                real(rho.lp_norm(1.0)),
                real(rho.lp_norm(2.0)),
                real(rho.sup_norm()),
            ];
            for &d in &a.deltas {
                r.push(real(besov_norm(&rho, BesovIndex::new(d, 1.0, f64::INFINITY)?, &part)?));
            }
            rows.push(r);
            Ok(())
        },
    )?;
    let mut cols = header(&["t", "step", "mass", "min_rho", "l1", "l2", "linf"]);
    cols.extend(a.deltas.iter().map(|d| format!("besov_{d}_1_inf")));
    let rho = traj.final_state.rho();
    let violation = traj.stats.min_rho < NEGATIVITY_FLOOR;
    let mut dir = run_dir(cfg, out)?;
    dir.csv("fpe.csv", &cols, &rows)?;
    let mut density_cols = coord_header(&grid);
    density_cols.push("rho".into());
    dir.csv("density.csv", &density_cols, &field_rows(&grid, &[&rho]))?;
    dir.binary("density.bin", |w| write_field(w, &rho))?;
    dir.json(
        "stats.json",
        &json!({
            "stats": traj.stats,
            "final_mass": traj.final_state.mass(),
            "negativity_floor": NEGATIVITY_FLOOR,
            "negativity_violation": violation,
        }),
    )?;
    dir.finish("fpe", Some(cfg), Value::Null)?;
    Ok(())
}

pub fn kbe(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<(), CliError> {
    let k = required(&cfg.kbe, "kbe")?;
    let (grid, traj) = solve(cfg, Vec::new(), true)?;
    let phi = cosine_mode(&grid, &k.mode);
    let drift = traj.drift.as_ref().expect("drift recorded");
    let u0 = kbe_solve(&phi, cfg.alpha, drift, cfg.solver.horizon, cfg.solver_config())?;
    let mut dir = run_dir(cfg, out)?;
    let mut cols = coord_header(&grid);
    cols.extend(header(&["phi", "u0"]));
    dir.csv("kbe.csv", &cols, &field_rows(&grid, &[&phi, &u0]))?;
    dir.binary("u0.bin", |w| write_field(w, &u0))?;
    dir.json(
        "kbe.json",
        &json!({ "mode": k.mode, "horizon": cfg.solver.horizon, "u0_min": u0.min(), "u0_sup": u0.sup_norm() }),
    )?;
    dir.finish("kbe", Some(cfg), Value::Null)?;
    Ok(())
}

pub fn duality(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<(), CliError> {
    let k = required(&cfg.kbe, "kbe")?;
    let (grid, traj) = solve(cfg, Vec::new(), true)?;
    let phi = cosine_mode(&grid, &k.mode);
    let report = duality_gap_from(&traj, &phi, cfg.alpha, cfg.solver.horizon, cfg.solver_config())?;
    let mut dir = run_dir(cfg, out)?;
    dir.json("duality.json", &json!({ "mode": k.mode, "horizon": cfg.solver.horizon, "report": report }))?;
    dir.finish("duality", Some(cfg), Value::Null)?;
    Ok(())
}

pub fn particles(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<(), CliError> {
    let p = required(&cfg.particles, "particles")?;
    let euler = cfg.euler_config().expect("particles block present");
    let grid = cfg.grid()?;
    let dt = cfg.solver.dt;
    let total = cfg.solver_config().steps_for(cfg.solver.horizon)?;
    let mut obs_steps: Vec<usize> = observation_times(&p.observe, cfg.solver.horizon)
        .iter()
        .map(|t| ((t / dt).round() as usize).min(total))
        .collect();
    obs_steps.dedup();
    let times: Vec<f64> = obs_steps.iter().map(|&k| k as f64 * dt).collect();

    let mut reference = Vec::new();
    let rho0 = gaussian_density(&grid, cfg.initial.width)?;
    let opts = SolveOptions { observe_at: times.clone(), record_drift: false };
    let kernel = cfg.kernel_spec();
    fpe_solve(&rho0, cfg.alpha, &kernel, cfg.solver.horizon, cfg.solver_config(), &opts, |s| {
        reference.push(smooth(&s.rho(), p.bandwidth));
        Ok(())
    })?;

    let origin = vec![0.0; cfg.dim];
    let mut ens = Ensemble::gaussian(grid, p.count, &origin, cfg.initial.width, StreamKey::new(cfg.seed, 0, 0))?;
    let stepper = McKeanStepper::new(&grid, cfg.params(), &kernel, euler)?;
    let mut rows = Vec::new();
    let mut last = None;
    let mut next = 0;
    for k in 0..=total {
        if obs_steps.get(next) == Some(&k) {
            let est = estimate_density(&ens, &grid, p.bandwidth)?;
            let l1 = est.sub(&reference[next])?.lp_norm(1.0);
            rows.push(vec![real(times[next]), k.to_string(), real(l1)]);
            last = Some((est, l1));
            next += 1;
        }
        if k < total {
            stepper.step(&mut ens)?;
        }
    }
    let (est, l1) = last.expect("horizon observed");
    let fpe_final = reference.last().expect("horizon observed");
    let mut dir = run_dir(cfg, out)?;
    dir.csv("particles.csv", &header(&["t", "step", "l1_distance"]), &rows)?;
    let mut cols = coord_header(&grid);
    cols.extend(header(&["particles", "fpe"]));
    dir.csv("density.csv", &cols, &field_rows(&grid, &[&est, fpe_final]))?;
    dir.binary("ensemble.bin", |w| write_ensemble(w, &ens))?;
    dir.json(
        "summary.json",
        &json!({ "count": p.count, "bandwidth": p.bandwidth, "drift_mode": p.drift_mode, "final_l1_distance": l1 }),
    )?;
    dir.finish("particles", Some(cfg), Value::Null)?;
    Ok(())
}

pub fn pathwise(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<(), CliError> {
    let p = required(&cfg.pathwise, "pathwise")?;
    let (grid, traj) = solve(cfg, Vec::new(), true)?;
    let drift = traj.drift.as_ref().expect("drift recorded");
    let params = cfg.params();
    let horizon = cfg.solver.horizon;
    let ladder = self_convergence_ladder(&p.x0, drift, params, horizon, p.h0, p.levels, p.samples, cfg.seed)?;
    let order = if ladder.steps.len() >= 4 { Some(strong_error_order(&ladder.gaps, &ladder.steps)?) } else { None };
    let mut dir = run_dir(cfg, out)?;
    let rows: Vec<Vec<String>> = ladder.steps.iter().zip(&ladder.gaps).map(|(h, g)| vec![real(*h), real(*g)]).collect();
    dir.csv("ladder.csv", &header(&["h", "mean_gap"]), &rows)?;
    let mut gap_json = Value::Null;
    if let Some(other) = &p.x0_other {
        let h = p.h0 * 0.5f64.powi(p.levels as i32);
        let gaps = pathwise_gap(&p.x0, other, drift, params, horizon, h, StreamKey::new(cfg.seed, 0, 0))?;
        let eps = grid.torus_distance(&p.x0, other);
        let lip = drift_lipschitz(drift);
        let envelope = gronwall_envelope(eps, lip, horizon);
        let max_gap = gaps.iter().copied().fold(0.0, f64::max);
        let rows: Vec<Vec<String>> =
            gaps.iter().enumerate().map(|(k, g)| vec![real(k as f64 * h), real(*g)]).collect();
        dir.csv("gap.csv", &header(&["t", "gap"]), &rows)?;
        gap_json = json!({
            "h": h,
            "initial_gap": eps,
            "lipschitz": lip,
            "envelope": envelope,
            "max_gap": max_gap,
            "within_envelope": max_gap <= envelope,
        });
    }
    dir.json("pathwise.json", &json!({ "ladder": ladder, "order": order, "gap": gap_json }))?;
    dir.finish("pathwise", Some(cfg), Value::Null)?;
    Ok(())
}

pub fn rate(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<(), CliError> {
    let a = cfg.analysis();
    if a.deltas.is_empty() {
        return Err(CliError::config("rate needs analysis.deltas"));
    }
    let spread_max = a.spread_max.ok_or_else(|| CliError::config("rate needs analysis.spread_max"))?;
    let grid = cfg.grid()?;
    let window = a.window.unwrap_or_else(|| RateWindow::default_for(cfg.alpha, &grid, cfg.solver.dt));
    let reports = rate_experiment(cfg.alpha, &cfg.kernel_spec(), &a.deltas, &grid, cfg.solver_config(), window)?;
    let passed = reports.iter().all(|r| r.passes(spread_max, a.slope_slack));
    let mut rows = Vec::new();
    for r in &reports {
        for ((t, n), c) in r.times.iter().zip(&r.norms).zip(&r.compensated) {
            rows.push(vec![real(r.delta), real(*t), real(*n), real(*c)]);
        }
    }
    let mut dir = run_dir(cfg, out)?;
    dir.csv("rate.csv", &header(&["delta", "t", "norm", "compensated"]), &rows)?;
    dir.json(
        "rate.json",
        &json!({
            "spread_max": spread_max,
            "slope_slack": a.slope_slack,
            "window": window,
            "passed": passed,
            "reports": reports,
        }),
    )?;
    dir.finish("rate", Some(cfg), Value::Null)?;
    if !passed {
        return Err(CliError::check("a rate report exceeds the configured spread or slope limits"));
    }
    Ok(())
}

pub fn classify(
    alpha: Option<f64>,
    beta: Option<f64>,
    q: Option<&str>,
    cfg: Option<&ExperimentConfig>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let analysis = cfg.map(|c| c.analysis());
    let alpha = alpha.or(cfg.map(|c| c.alpha)).ok_or_else(|| CliError::config("classify needs --alpha"))?;
    let beta = beta
        .or(analysis.as_ref().and_then(|a| a.beta))
        .ok_or_else(|| CliError::config("classify needs --beta"))?;
    let q = match q {
        Some(s) => parse_q(s)?,
        None => analysis.and_then(|a| a.q).ok_or_else(|| CliError::config("classify needs --q"))?,
    };
    let verdict = classify_scaling(alpha, beta, q)?;
    println!("{}", serde_json::to_string_pretty(&verdict).expect("verdict serializes"));
    let name = cfg.map_or("classify", |c| c.name.as_str());
    let mut dir = RunDir::create(resolve_dir(out, cfg.and_then(|c| c.output_dir.as_deref()), name))?;
    dir.json("verdict.json", &verdict)?;
    dir.finish("classify", cfg, Value::Null)?;
    Ok(())
}

pub fn all(only: &[u8], out: Option<&Path>) -> Result<(), CliError> {
    let ids: Vec<u8> = if only.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { only.to_vec() };
    if let Some(bad) = ids.iter().find(|id| !CRITERIA.iter().any(|c| c.0 == **id)) {
        return Err(CliError::config(format!("no acceptance criterion {bad}; ids run from 1 to {}", CRITERIA.len())));
    }
    let reports: Vec<_> = ids.par_iter().map(|&id| run_criterion(id)).collect();
    for r in &reports {
        println!("{r}");
    }
    let failed: Vec<u8> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    let payload: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "id": r.id,
                "name": r.name,
                "passed": r.passed,
                "detail": r.detail,
                "metrics": r.metrics,
                "budget_seconds": r.budget_seconds,
            })
        })
        .collect();
    let timings: Vec<Value> = reports.iter().map(|r| json!({ "id": r.id, "seconds": r.seconds })).collect();
    let mut dir = RunDir::create(resolve_dir(out, None, "acceptance"))?;
    dir.json("acceptance.json", &json!({ "passed": failed.is_empty(), "criteria": payload }))?;
    dir.finish("all", None, json!({ "timings": timings }))?;
    if !failed.is_empty() {
        return Err(CliError::check(format!("criteria {failed:?} failed")));
    }
    Ok(())
}
