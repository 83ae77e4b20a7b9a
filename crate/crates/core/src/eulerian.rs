//! Method-of-lines solver: Fourier collocation in space, classical RK4 in
//! time, with gradient-based blow-up detection.

use std::convert::Infallible;

use thiserror::Error;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::ode::rk4_step;
use crate::operators::{deriv_unchecked, evolution_rhs, Dimension, Field, PeriodicGrid};
use crate::scalar::{c, Real};

/// Time and solution of the Eulerian solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState<T: Real = f64> {
    pub t: T,
    pub u: Field<T>,
}

impl<T: Real> SimState<T> {
    pub fn new(u: Field<T>) -> Self {
        Self { t: T::zero(), u }
    }
}

/// How the step size reacts to the solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepControl {
    /// Every step uses `dt`.
    Fixed,
    /// Each macro step of size `dt` is split into `2^k` substeps, with `k`
    /// the smallest value for which the advective and gradient rates satisfy
    /// `h * rate <= cfl_factor`. A step producing non-finite values is
    /// retried with one more halving, up to `max_halvings`.
    Halving { max_halvings: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T: Real = f64> {
    pub dim: Dimension<T>,
    pub m: usize,
    pub dt: T,
    pub t_end: T,
    pub blowup_threshold: T,
    pub record_every: usize,
    pub cfl_factor: T,
    pub step_control: StepControl,
}

impl<T: Real> SimConfig<T> {
    pub fn new(dim: Dimension<T>, m: usize, dt: T, t_end: T) -> Self {
        Self {
            dim,
            m,
            dt,
            t_end,
            blowup_threshold: c(1e6),
            record_every: 1,
            cfl_factor: T::one(),
            step_control: StepControl::Fixed,
        }
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn with_step_control(mut self, control: StepControl) -> Self {
        self.step_control = control;
        self
    }

    pub fn with_blowup_threshold(mut self, threshold: T) -> Self {
        self.blowup_threshold = threshold;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= T::zero() && self.t_end.is_finite()) {
            return Err(Error::InvalidConfig(format!("T_end must be non-negative, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be at least 1".into()));
        }
        if !(self.blowup_threshold > T::zero()) {
            return Err(Error::InvalidConfig("blowup_threshold must be positive".into()));
        }
        if self.m < 8 || !self.m.is_multiple_of(2) {
            return Err(Error::InvalidGrid(self.m));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<PeriodicGrid<T>> {
        PeriodicGrid::new(self.m)
    }

    /// Advisory guard `dt <= cfl_factor / max(1, ||u0_x||_inf * M)`; returns
    /// the limit when `dt` exceeds it.
    pub fn cfl_advisory(&self, u0: &Field<T>) -> Option<T> {
        let grad = deriv_unchecked(u0, 1).sup_norm();
        let limit = self.cfl_factor / (grad * T::from_usize_lossy(u0.len())).max(T::one());
        (self.dt > limit).then_some(limit)
    }

    fn steps(&self) -> usize {
        (self.t_end / self.dt).round().to_usize().unwrap_or(0)
    }
}

/// Raised when `|u|` or `|u_x|` passes the threshold or stops being finite.
/// Carries the last finite state and the diagnostics recorded so far.
#[derive(Debug, Clone, Error)]
#[error("blow-up at t = {t}: sup |u_x| = {max_abs_dxu}")]
pub struct BlowUpError<T: Real = f64> {
    pub t: T,
    pub max_abs_dxu: T,
    pub last_state: SimState<T>,
    pub records: Vec<DiagnosticsRecord<T>>,
    /// `(t, min u_x)` after every accepted step.
    pub gradient_history: Vec<(T, T)>,
}

impl<T: Real> From<BlowUpError<T>> for Error {
    fn from(e: BlowUpError<T>) -> Self {
        Error::BlowUp {
            t: e.t.as_f64(),
            max_abs_dxu: e.max_abs_dxu.as_f64(),
        }
    }
}

/// Successful run: final state plus recorded diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Real = f64> {
    pub state: SimState<T>,
    pub records: Vec<DiagnosticsRecord<T>>,
    pub gradient_history: Vec<(T, T)>,
    /// Snapshots of `u` taken with the records.
    pub snapshots: Vec<SimState<T>>,
}

fn rk4_substep<T: Real>(u: &Field<T>, h: T, dim: Dimension<T>) -> Field<T> {
    match rk4_step(u, h, |s: &Field<T>, _| Ok::<_, Infallible>(evolution_rhs(s, dim))) {
        Ok(v) => v,
        Err(never) => match never {},
    }
}

/// Checks a candidate state; returns `sup |u_x|` and `min u_x` when healthy.
fn inspect<T: Real>(u: &Field<T>, threshold: T) -> std::result::Result<(T, T), T> {
    if u.first_non_finite().is_some() {
        return Err(T::infinity());
    }
    let ux = deriv_unchecked(u, 1);
    let sup = ux.sup_norm();
    if !sup.is_finite() || sup > threshold || u.sup_norm() > threshold {
        return Err(if sup.is_finite() { sup } else { T::infinity() });
    }
    Ok((sup, ux.min()))
}

/// One RK4 step of size `cfg.dt` (fixed step, no halving).
pub fn step_rk4<T: Real>(s: &SimState<T>, cfg: &SimConfig<T>) -> Result<SimState<T>> {
    let u = rk4_substep(&s.u, cfg.dt, cfg.dim);
    let t = s.t + cfg.dt;
    match inspect(&u, cfg.blowup_threshold) {
        Ok(_) => Ok(SimState { t, u }),
        Err(g) => Err(Error::BlowUp {
            t: t.as_f64(),
            max_abs_dxu: g.as_f64(),
        }),
    }
}

fn substep_count<T: Real>(u: &Field<T>, cfg: &SimConfig<T>, max_halvings: u32) -> u32 {
    let grad = deriv_unchecked(u, 1).sup_norm();
    let k_max = T::two_pi() * T::from_usize_lossy(u.grid().dealias_cutoff());
    let rate = grad + k_max * u.sup_norm();
    let mut k = 0;
    let mut h = cfg.dt;
    while k < max_halvings && h * rate > cfg.cfl_factor {
        h *= c(0.5);
        k += 1;
    }
    k
}

/// One macro step of size `dt` under the configured step control.
fn macro_step<T: Real>(
    s: &SimState<T>,
    cfg: &SimConfig<T>,
    history: &mut Vec<(T, T)>,
) -> std::result::Result<SimState<T>, (T, T)> {
    match cfg.step_control {
        StepControl::Fixed => {
            let u = rk4_substep(&s.u, cfg.dt, cfg.dim);
            let t = s.t + cfg.dt;
            let (_, min) = inspect(&u, cfg.blowup_threshold).map_err(|g| (t, g))?;
            history.push((t, min));
            Ok(SimState { t, u })
        }
        StepControl::Halving { max_halvings } => {
            let mut k = substep_count(&s.u, cfg, max_halvings);
            'retry: loop {
                let n_sub = 1usize << k;
                let h = cfg.dt / T::from_usize_lossy(n_sub);
                let mut cur = s.clone();
                let mut local = Vec::with_capacity(n_sub);
                for i in 0..n_sub {
                    let u = rk4_substep(&cur.u, h, cfg.dim);
                    let t = s.t + h * T::from_usize_lossy(i + 1);
                    match inspect(&u, cfg.blowup_threshold) {
                        Ok((_, min)) => {
                            local.push((t, min));
                            cur = SimState { t, u };
                        }
                        Err(g) if !g.is_finite() && k < max_halvings => {
                            k += 1;
                            continue 'retry;
                        }
                        Err(g) => {
                            history.extend(local);
                            return Err((t, g));
                        }
                    }
                }
                history.extend(local);
                cur.t = s.t + cfg.dt;
                return Ok(cur);
            }
        }
    }
}

/// Integrates from `u0` to `cfg.t_end`, calling `observer` with a
/// diagnostics record at `t = 0`, every `record_every` steps and at the end.
pub fn evolve<T: Real>(
    u0: &Field<T>,
    cfg: &SimConfig<T>,
    mut observer: impl FnMut(&DiagnosticsRecord<T>),
) -> std::result::Result<Trajectory<T>, BlowUpError<T>> {
    cfg.validate().expect("invalid SimConfig");
    assert_eq!(u0.len(), cfg.m, "initial field does not match the configured grid");
    if let Some(limit) = cfg.cfl_advisory(u0) {
        log::warn!("dt = {} exceeds the advisory limit {}", cfg.dt, limit);
    }
    let mut state = SimState::new(u0.clone());
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut history = vec![(T::zero(), deriv_unchecked(u0, 1).min())];
    let mut push = |s: &SimState<T>, records: &mut Vec<_>, snapshots: &mut Vec<_>| {
        let r = DiagnosticsRecord::compute(s.t, &s.u, cfg.dim);
        observer(&r);
        records.push(r);
        snapshots.push(s.clone());
    };
    push(&state, &mut records, &mut snapshots);
    let steps = cfg.steps();
    for i in 1..=steps {
        match macro_step(&state, cfg, &mut history) {
            Ok(next) => {
                state = next;
                // pin the clock to the step grid
                state.t = cfg.dt * T::from_usize_lossy(i);
            }
            Err((t, g)) => {
                return Err(BlowUpError {
                    t,
                    max_abs_dxu: g,
                    last_state: state,
                    records,
                    gradient_history: history,
                });
            }
        }
        if i % cfg.record_every == 0 || i == steps {
            push(&state, &mut records, &mut snapshots);
        }
    }
    Ok(Trajectory {
        state,
        records,
        gradient_history: history,
        snapshots,
    })
}

/// Runs [`evolve`] without an observer and returns the final field.
pub fn solve_to_end<T: Real>(u0: &Field<T>, cfg: &SimConfig<T>) -> std::result::Result<Field<T>, BlowUpError<T>> {
    let cfg = SimConfig {
        record_every: usize::MAX,
        ..cfg.clone()
    };
    evolve(u0, &cfg, |_| {}).map(|tr| tr.state.u)
}

/// Sup-norm distance between `coarse` and `fine` at the coarse nodes, with
/// `fine` evaluated through its trigonometric interpolant.
pub fn grid_distance<T: Real>(coarse: &Field<T>, fine: &Field<T>) -> T {
    let it = fine.interpolant();
    coarse
        .grid()
        .nodes()
        .into_iter()
        .zip(coarse.values())
        .map(|(x, &v)| (v - it.eval(x)).abs())
        .fold(T::zero(), T::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow<T: Real = f64> {
    pub m: usize,
    pub linf_error: T,
}

/// Spatial self-convergence: evolves the datum produced by `u0` on each
/// grid in `ms` and on `reference_m`, then reports the sup-norm error of
/// each against the reference at `cfg.t_end`.
pub fn convergence_study<T: Real>(
    u0: impl Fn(&PeriodicGrid<T>) -> Field<T>,
    cfg: &SimConfig<T>,
    ms: &[usize],
    reference_m: usize,
) -> Result<Vec<ConvergenceRow<T>>> {
    if ms.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("grid sizes must be strictly increasing".into()));
    }
    if ms.last().is_some_and(|&m| m >= reference_m) {
        return Err(Error::InvalidConfig("reference grid must be finer than every study grid".into()));
    }
    let run = |m: usize| -> Result<Field<T>> {
        let c = SimConfig { m, ..cfg.clone() };
        c.validate()?;
        let g = c.grid()?;
        Ok(solve_to_end(&u0(&g), &c)?)
    };
    let reference = run(reference_m)?;
    ms.iter()
        .map(|&m| {
            let u = run(m)?;
            Ok(ConvergenceRow {
                m,
                linf_error: grid_distance(&u, &reference),
            })
        })
        .collect()
}

/// Temporal self-convergence at fixed `M`: for each step size, the sup-norm
/// difference between the runs with `dt` and `dt/2`, and the observed order
/// from consecutive differences (`log2` of their ratio).
pub fn temporal_order<T: Real>(u0: &Field<T>, cfg: &SimConfig<T>, dts: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    let finals = dts
        .iter()
        .map(|&dt| {
            let c = SimConfig { dt, ..cfg.clone() };
            c.validate()?;
            Ok(solve_to_end(u0, &c)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let diffs: Vec<T> = finals
        .windows(2)
        .map(|w| w[0].add_scaled(&w[1], -T::one()).sup_norm())
        .collect();
    let orders = diffs.windows(2).map(|d| (d[0] / d[1]).log2()).collect();
    Ok((diffs, orders))
}
