//! One function per subcommand. Each writes its artifacts and returns the
//! summary; the caller writes `summary.json`.

use serde::Serialize;
use serde_json::json;
use stagflow::diagnostics::{drift_report, DiagnosticsRecord, InitialBounds};
use stagflow::eulerian::{convergence_study, evolve, grid_distance, solve_to_end, temporal_order};
use stagflow::lagrangian::{
    accumulated_jacobian, evolve_flow, flow_jacobian, reconstruct_on_grid, transported_uxx, uxx_on_labels,
    FlowOptions,
};
use stagflow::lift::{euler_residual, random_points, residual_report, ResidualReport, TwoPhaseSource};
use stagflow::ode::rk4_step;
use stagflow::operators::{deriv, evolution_rhs};
use stagflow::separable::{
    exact_derivative_identity, implied_lambda, riccati_blowup_time, riccati_t, separable_residual, SeparableConfig,
};
use stagflow::twophase::{closed_form_report, csv_row, polar_mismatch, rh_check, CSV_HEADER};
use stagflow::{evolve_twophase, Field, SimState, TwoPhaseState};

use crate::config::{Command, RunConfig};
use crate::failure::Failure;
use crate::output::{Check, Output, Summary};
use crate::plot::{Plot, Series};

const MAX_CURVES: usize = 6;

pub fn run(command: Command, cfg: &RunConfig, out: &Output) -> Result<Summary, Failure> {
    match command {
        Command::Simulate => simulate(cfg, out),
        Command::Lagrangian => lagrangian(cfg, out),
        Command::Twophase => twophase(cfg, out),
        Command::Separable => separable(cfg, out),
        Command::LiftCheck => lift_check(cfg, out),
        Command::Convergence => convergence(cfg, out),
        Command::Sweep => crate::sweep::sweep(cfg, out),
    }
}

/// Up to `k` evenly spread entries, always including the first and last.
fn spread<T>(items: &[T], k: usize) -> Vec<&T> {
    if items.len() <= k {
        return items.iter().collect();
    }
    (0..k).map(|i| &items[i * (items.len() - 1) / (k - 1)]).collect()
}

fn profile_points(u: &Field) -> Vec<(f64, f64)> {
    let g = u.grid();
    let mut pts: Vec<(f64, f64)> = (0..u.len()).map(|j| (g.node(j), u.values()[j])).collect();
    // close the period
    pts.push((1.0, u.values()[0]));
    pts
}

/// An Eulerian run that keeps whatever it produced before a blow-up.
pub struct SimRun {
    pub u0: Field,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<SimState>,
    pub gradient_history: Vec<(f64, f64)>,
    pub last: SimState,
    pub blow_up: Option<(f64, f64)>,
}

pub fn simulate_run(cfg: &RunConfig) -> Result<SimRun, Failure> {
    let sc = cfg.sim_config()?;
    let u0 = cfg.u0.sample(&sc.grid()?)?;
    Ok(match evolve(&u0, &sc, |_| {}) {
        Ok(tr) => SimRun {
            u0,
            records: tr.records,
            snapshots: tr.snapshots,
            gradient_history: tr.gradient_history,
            last: tr.state,
            blow_up: None,
        },
        Err(e) => SimRun {
            u0,
            records: e.records,
            snapshots: vec![e.last_state.clone()],
            gradient_history: e.gradient_history,
            last: e.last_state,
            blow_up: Some((e.t, e.max_abs_dxu)),
        },
    })
}

fn simulate(cfg: &RunConfig, out: &Output) -> Result<Summary, Failure> {
    let dim = cfg.dimension()?;
    let run = simulate_run(cfg)?;
    out.diagnostics(&DiagnosticsRecord::<f64>::CSV_HEADER, &run.records)?;

    let mut summary = Summary::new(Command::Simulate, cfg);
    let bounds = InitialBounds::from_initial(&run.u0, dim);
    let cfl_limit = cfg.sim_config()?.cfl_advisory(&run.u0);
    if let Some((t, g)) = run.blow_up {
        summary.blow_up(t, Some(g));
    }
    if let Some(d) = drift_report(&run.records, &bounds, 1e-3) {
        summary.check(Check::at_most("mean_drift", d.mean_abs_drift, 1e-10));
        if let Some(rel) = d.uxx_rel_drift.filter(|_| dim.conserved_exponent().is_some()) {
            summary.check(Check::at_most("uxx_norm_relative_drift", rel, 1e-5));
        }
        if bounds.c1_bound.is_some() {
            summary.check(Check::holds(
                "c1_bound",
                !d.c1_bound.is_violated(),
                format!("max C1 norm {:.6} against the initial-data bound", d.max_c1_norm),
            ));
        }
        summary.drifts = serde_json::to_value(&d)?;
    }
    let min_dxu = run.gradient_history.iter().map(|h| h.1).fold(f64::INFINITY, f64::min);
    summary.results = json!({
        "t_reached": run.last.t,
        "initial_bounds": bounds,
        "min_dxu_overall": min_dxu,
        "final_sup_abs_u": run.last.u.sup_norm(),
        "final_sup_abs_dxu": deriv(&run.last.u, 1)?.sup_norm(),
        "cfl_advisory_limit": cfl_limit,
    });

    let mut snaps = Plot::new("u(x, t)", "x", "u");
    for s in spread(&run.snapshots, MAX_CURVES) {
        snaps = snaps.with(Series::new(format!("t = {:.3}", s.t), profile_points(&s.u)));
    }
    out.plot("u_snapshots", &snaps)?;
    let first = run.records.first();
    let drift = |f: fn(&DiagnosticsRecord) -> f64| -> Vec<(f64, f64)> {
        run.records
            .iter()
            .map(|r| (r.t, (f(r) - first.map_or(0.0, f)).abs()))
            .collect()
    };
    out.plot(
        "invariants",
        &Plot::new("Drift of conserved quantities", "t", "|drift|")
            .log_y()
            .with(Series::new("mean u", drift(|r| r.mean_u)))
            .with(Series::new("u_xx norm", drift(|r| r.uxx_norm))),
    )?;
    out.plot(
        "gradient",
        &Plot::new("Steepest gradient", "t", "min u_x").with(Series::new("min u_x", run.gradient_history.clone())),
    )?;
    Ok(summary)
}

#[derive(Serialize)]
struct FlowRow {
    t: f64,
    degree_defect: f64,
    min_jacobian: f64,
    jacobian_gap: f64,
    transport_gap: f64,
    max_abs_velocity: f64,
}

fn lagrangian(cfg: &RunConfig, out: &Output) -> Result<Summary, Failure> {
    let dim = cfg.dimension()?;
    let sc = cfg.sim_config()?;
    let u0 = cfg.u0.sample(&sc.grid()?)?;
    let opts = FlowOptions {
        route: cfg.route.into(),
        ..FlowOptions::default()
    };
    let states = evolve_flow(&u0, &sc, opts)?;
    let u0xx = deriv(&u0, 2)?;
    let rows = states
        .iter()
        .map(|fs| {
            let j = flow_jacobian(fs)?;
            let transported = transported_uxx(fs, &u0xx, dim)?;
            Ok(FlowRow {
                t: fs.t,
                degree_defect: fs.degree_defect(),
                min_jacobian: j.min(),
                jacobian_gap: j.add_scaled(&accumulated_jacobian(fs), -1.0).sup_norm(),
                transport_gap: uxx_on_labels(fs)?.add_scaled(&transported, -1.0).sup_norm(),
                max_abs_velocity: fs.gdot.sup_norm(),
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    out.diagnostics(
        &["t", "degree_defect", "min_jacobian", "jacobian_gap", "transport_gap", "max_abs_velocity"],
        &rows,
    )?;

    let last = states.last().expect("the flow records its initial state");
    let eulerian = solve_to_end(&u0, &sc).map_err(stagflow::Error::from)?;
    let reconstructed = reconstruct_on_grid(last)?;
    let gap = grid_distance(&reconstructed, &eulerian);
    let transport = rows.iter().map(|r| r.transport_gap).fold(0.0, f64::max);
    let mut summary = Summary::new(Command::Lagrangian, cfg);
    summary.check(Check::at_most("eulerian_agreement", gap, 1e-3));
    summary.check(Check::at_most(
        "transport_identity",
        transport,
        if cfg.n == 3.0 { 1e-4 } else { 1e-3 },
    ));
    summary.results = json!({
        "route": opts.route.to_string(),
        "t_reached": last.t,
        "min_jacobian": rows.iter().map(|r| r.min_jacobian).fold(f64::INFINITY, f64::min),
        "max_transport_gap": transport,
        "eulerian_linf_gap": gap,
    });

    let mut vel = Plot::new("u(x, t) from the flow map", "x", "u");
    for fs in spread(&states, MAX_CURVES) {
        vel = vel.with(Series::new(format!("t = {:.3}", fs.t), profile_points(&reconstruct_on_grid(fs)?)));
    }
    out.plot("velocity", &vel)?;
    out.plot(
        "transport_gap",
        &Plot::new("Transport identity for u_xx", "t", "sup gap")
            .log_y()
            .with(Series::new("gap", rows.iter().map(|r| (r.t, r.transport_gap)).collect())),
    )?;
    Ok(summary)
}

fn twophase(cfg: &RunConfig, out: &Output) -> Result<Summary, Failure> {
    let s0 = cfg.twophase_state()?;
    let series = evolve_twophase(&s0, cfg.dt, cfg.t_end, cfg.record_every)?;
    out.diagnostics(&CSV_HEADER, series.iter().map(|s| csv_row(&s0, s)))?;

    let mut summary = Summary::new(Command::Twophase, cfg);
    let report = closed_form_report(&series).expect("series starts with the initial state");
    summary.check(Check::at_most("n_residual", report.n_residual, 1e-12));
    summary.check(Check::at_most("partition_identity", report.partition_residual, 1e-8));
    summary.check(Check::at_most("phi_formula", report.phi_formula, 1e-8));
    summary.check(Check::at_most("psi_formula", report.psi_formula, 1e-8));
    summary.check(Check::holds("sign_of_p_minus_q", report.sign_preserved, "p - q keeps its sign"));
    summary.check(Check::holds(
        "phases_bracketed",
        report.phases_bracketed,
        "phi and psi stay between their initial values and the midpoint",
    ));
    let polar = if s0.p > 0.0 && s0.q < 0.0 {
        let m = polar_mismatch(&series)?;
        summary.check(Check::at_most("polar_oracle", m, 1e-6));
        Some(m)
    } else {
        None
    };
    // the finite differences need uniform spacing; the final record may be off the stride
    let uniform = match series.len() {
        n if n >= 3 && (series[n - 1].t - series[n - 2].t - (series[1].t - series[0].t)).abs() > 1e-9 * cfg.dt => {
            &series[..n - 1]
        }
        _ => &series[..],
    };
    let rh = rh_check(uniform);
    summary.check(Check::at_most("interface_speed", rh, 1e-6));

    let last = series.last().expect("non-empty series");
    let collapsing_center = s0.p > s0.q;
    let phi_limit = collapsing_center.then_some(0.5 * (s0.phi + s0.psi));
    summary.results = json!({
        "t_reached": last.t,
        "final": last,
        "phi_limit": phi_limit,
        "psi_limit": phi_limit,
        "int_p_limit": collapsing_center.then(|| -s0.outer_fraction().ln()),
        "phi_gap": phi_limit.map(|l| (last.phi - l).abs()),
        "psi_gap": phi_limit.map(|l| (last.psi - l).abs()),
        "closed_form": report,
        "polar_mismatch": polar,
        "interface_speed_gap": rh,
    });

    out.plot(
        "phases",
        &Plot::new("Interfaces", "t", "position")
            .with(Series::new("phi", series.iter().map(|s| (s.t, s.phi)).collect()))
            .with(Series::new("psi", series.iter().map(|s| (s.t, s.psi)).collect())),
    )?;
    out.plot(
        "slopes",
        &Plot::new("Slopes", "t", "slope")
            .with(Series::new("p", series.iter().map(|s| (s.t, s.p)).collect()))
            .with(Series::new("q", series.iter().map(|s| (s.t, s.q)).collect())),
    )?;
    Ok(summary)
}

#[derive(Serialize)]
struct RiccatiRow {
    t: f64,
    closed_form: f64,
    rk4: f64,
    relative_gap: f64,
}

fn separable(cfg: &RunConfig, out: &Output) -> Result<Summary, Failure> {
    let dim = cfg.dimension()?;
    let sp = &cfg.separable;
    let t_star = riccati_blowup_time(sp.lambda, sp.t0);
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut rows = Vec::new();
    let mut y = [sp.t0];
    for k in 0..=steps {
        let t = cfg.dt * k as f64;
        let Some(closed) = riccati_t(sp.lambda, sp.t0, t).finite() else {
            break;
        };
        rows.push(RiccatiRow {
            t,
            closed_form: closed,
            rk4: y[0],
            relative_gap: (y[0] - closed).abs() / closed.abs().max(f64::MIN_POSITIVE),
        });
        y = rk4_step(&y, cfg.dt, |z: &[f64; 1], _| Ok::<_, Failure>([sp.lambda * z[0] * z[0]]))?;
    }
    out.diagnostics(&["t", "closed_form", "rk4", "relative_gap"], &rows)?;

    let mut summary = Summary::new(Command::Separable, cfg);
    let horizon = t_star.map_or(f64::INFINITY, |ts| 0.9 * ts);
    let gap = rows
        .iter()
        .filter(|r| r.t <= horizon)
        .map(|r| r.relative_gap)
        .fold(0.0, f64::max);
    summary.check(Check::at_most("riccati_rk4_agreement", gap, 1e-6));
    if let Some(ts) = t_star.filter(|ts| *ts <= cfg.t_end) {
        summary.blow_up(ts, None);
    }

    let identity = if dim.conserved_exponent().is_some() {
        let sc = cfg.sim_config()?;
        let x = cfg.u0.sample(&sc.grid()?)?;
        let value = exact_derivative_identity(&x, dim)?;
        let residual = separable_residual(&SeparableConfig {
            lambda: sp.lambda,
            t0: sp.t0,
            x: x.clone(),
            dim,
        });
        let implied = implied_lambda(&x, &residual, dim)?;
        summary.check(Check::at_most("exact_derivative_identity", value.abs(), 1e-8));
        if let Some(l) = implied {
            summary.check(Check::at_most(
                "implied_lambda",
                (l - sp.lambda).abs(),
                1e-8 * sp.lambda.abs().max(1.0),
            ));
        }
        json!({ "integral": value, "implied_lambda": implied })
    } else {
        serde_json::Value::Null
    };
    summary.results = json!({
        "t_star": t_star,
        "rows": rows.len(),
        "final": rows.last().map(|r| r.closed_form),
        "identity": identity,
    });

    out.plot(
        "riccati",
        &Plot::new("Riccati time factor", "t", "T(t)")
            .with(Series::new("closed form", rows.iter().map(|r| (r.t, r.closed_form)).collect()))
            .with(Series::new("RK4", rows.iter().map(|r| (r.t, r.rk4)).collect())),
    )?;
    Ok(summary)
}

#[derive(Serialize)]
struct LiftRow {
    source: &'static str,
    x: f64,
    xprime_norm: f64,
    momentum: f64,
    divergence: f64,
}

fn lift_rows<'a>(source: &'static str, rep: &'a ResidualReport) -> impl Iterator<Item = LiftRow> + 'a {
    rep.points.iter().map(move |p| LiftRow {
        source,
        x: p.x,
        xprime_norm: p.xprime.iter().map(|v| v * v).sum::<f64>().sqrt(),
        momentum: p.momentum_norm(),
        divergence: p.divergence.abs(),
    })
}

fn lift_check(cfg: &RunConfig, out: &Output) -> Result<Summary, Failure> {
    let dim = cfg.dimension()?;
    let lp = &cfg.lift;
    let run = simulate_run(cfg)?;
    let mut summary = Summary::new(Command::LiftCheck, cfg);
    if let Some((t, g)) = run.blow_up {
        summary.blow_up(t, Some(g));
        out.diagnostics(&["source", "x", "xprime_norm", "momentum", "divergence"], Vec::<LiftRow>::new())?;
        return Ok(summary);
    }
    let u = &run.last.u;
    let pts = random_points(lp.points, dim, lp.seed)?;
    let spectral = euler_residual(u, &evolution_rhs(u, dim), dim, &pts)?;

    let s0 = cfg.twophase_state()?;
    let series = evolve_twophase(&s0, cfg.dt, cfg.t_end, usize::MAX)?;
    let state: TwoPhaseState = *series.last().expect("non-empty series");
    let src = TwoPhaseSource::new(state)?;
    let away: Vec<_> = random_points(20 * lp.points, dim, lp.seed.wrapping_add(1))?
        .into_iter()
        .filter(|p| src.interface_distance(p.x) > lp.interface_margin)
        .take(lp.points)
        .collect();
    let exact = residual_report(&src, &away)?;
    let compat = src.compatibility_mean()?;

    out.diagnostics(
        &["source", "x", "xprime_norm", "momentum", "divergence"],
        lift_rows("spectral", &spectral).chain(lift_rows("two-phase", &exact)),
    )?;
    summary.check(Check::at_most("divergence", spectral.max_divergence, 1e-8));
    summary.check(Check::at_most("momentum", spectral.max_momentum, 1e-4));
    summary.check(Check::at_most("two_phase_divergence", exact.max_divergence, 1e-8));
    summary.check(Check::at_most("two_phase_momentum", exact.max_momentum, 1e-6));
    summary.check(Check::at_most("two_phase_compatibility", compat.abs(), 1e-8));
    summary.results = json!({
        "snapshot_t": run.last.t,
        "points": pts.len(),
        "two_phase_points": away.len(),
        "max_momentum": spectral.max_momentum,
        "mean_momentum": spectral.mean_momentum,
        "max_divergence": spectral.max_divergence,
        "two_phase_max_momentum": exact.max_momentum,
        "two_phase_compatibility": compat,
    });

    let sorted = |rep: &ResidualReport| {
        let mut v: Vec<(f64, f64)> = rep.points.iter().map(|p| (p.x, p.momentum_norm())).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    };
    out.plot(
        "residual",
        &Plot::new("Momentum residual of the lifted flow", "x", "residual")
            .log_y()
            .with(Series::new("spectral snapshot", sorted(&spectral)))
            .with(Series::new("two-phase", sorted(&exact))),
    )?;
    Ok(summary)
}

#[derive(Serialize)]
struct ConvergenceRow {
    kind: &'static str,
    parameter: f64,
    error: f64,
    order: Option<f64>,
}

fn convergence(cfg: &RunConfig, out: &Output) -> Result<Summary, Failure> {
    let sc = cfg.sim_config()?;
    let cp = &cfg.convergence;
    let spatial = convergence_study(
        |g| cfg.u0.sample(g).expect("profile checked against every grid"),
        &sc,
        &cp.grids,
        cp.reference,
    )?;
    let u0 = cfg.u0.sample(&sc.grid()?)?;
    let (diffs, orders) = temporal_order(&u0, &sc, &cp.dts)?;

    let mut rows: Vec<ConvergenceRow> = spatial
        .iter()
        .map(|r| ConvergenceRow {
            kind: "spatial",
            parameter: r.m as f64,
            error: r.linf_error,
            order: None,
        })
        .collect();
    rows.extend(diffs.iter().enumerate().map(|(i, d)| ConvergenceRow {
        kind: "temporal",
        parameter: cp.dts[i],
        error: *d,
        order: i.checked_sub(1).map(|k| orders[k]),
    }));
    out.diagnostics(&["kind", "parameter", "error", "order"], &rows)?;

    let errors: Vec<f64> = spatial.iter().map(|r| r.linf_error).collect();
    let mut summary = Summary::new(Command::Convergence, cfg);
    summary.check(Check::holds(
        "spatial_error_decreasing",
        errors.windows(2).all(|w| w[1] < w[0]),
        format!("errors against M = {}: {errors:?}", cp.reference),
    ));
    if let Some(min) = orders.iter().copied().reduce(f64::min) {
        summary.check(Check::at_least("temporal_order", min, 3.8));
    }
    summary.results = json!({
        "grids": cp.grids,
        "spatial_errors": errors,
        "step_sizes": cp.dts,
        "temporal_differences": diffs,
        "temporal_orders": orders,
    });

    out.plot(
        "convergence",
        &Plot::new("Self-convergence", "log2 M", "sup error")
            .log_y()
            .with(Series::new(
                "spatial",
                spatial.iter().map(|r| ((r.m as f64).log2(), r.linf_error)).collect(),
            )),
    )?;
    Ok(summary)
}
