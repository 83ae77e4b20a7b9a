//! Characteristics solver. Particles labelled by the grid nodes carry their
//! position `gamma`, velocity `gdot = u o gamma` and the logarithm of the
//! Jacobian `gamma_x`; the acceleration is the nonlocal forcing evaluated
//! along the flow.

use std::fmt;

use crate::error::{Error, Result};
use crate::eulerian::SimConfig;
use crate::interp::PeriodicPchip;
use crate::ode::{rk4_step, LinearState};
use crate::operators::{deriv_unchecked, mean, nonlocal, Dimension, Field, PeriodicGrid};
use crate::scalar::{c, Real};

/// Threshold on `min gamma_x` below which the flow counts as degenerate.
pub const JACOBIAN_FLOOR: f64 = 1e-6;

/// How the forcing is evaluated at the particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForcingRoute {
    /// Pull the forcing back to labels with the change of variables
    /// `dx = gamma_x da`; no interpolation involved.
    #[default]
    LabelSpace,
    /// Rebuild `u` on the fixed grid by monotone cubic interpolation of the
    /// graph `(gamma, gdot)`, apply the nonlocal operator there and compose
    /// back at the particle positions with the trigonometric interpolant.
    GridInterpolation,
}

impl fmt::Display for ForcingRoute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ForcingRoute::LabelSpace => "label-space",
            ForcingRoute::GridInterpolation => "grid-interpolation",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions<T: Real = f64> {
    pub route: ForcingRoute,
    pub eps_jac: T,
}

impl<T: Real> Default for FlowOptions<T> {
    fn default() -> Self {
        Self {
            route: ForcingRoute::default(),
            eps_jac: c(JACOBIAN_FLOOR),
        }
    }
}

/// Particle state at time `t`. Particle `j` started at grid node `x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState<T: Real = f64> {
    pub t: T,
    /// Lifted positions: `gamma(x + 1) = gamma(x) + 1`.
    pub gamma: Vec<T>,
    /// Particle velocities `u(gamma, t)`.
    pub gdot: Field<T>,
    /// `log gamma_x`, accumulated as the time integral of `u_x o gamma`.
    pub log_jacobian: Field<T>,
}

impl<T: Real> FlowState<T> {
    pub fn initial(u0: &Field<T>) -> Self {
        Self {
            t: T::zero(),
            gamma: u0.grid().nodes(),
            gdot: u0.clone(),
            log_jacobian: Field::zeros(u0.grid()),
        }
    }

    pub fn labels(&self) -> &PeriodicGrid<T> {
        self.gdot.grid()
    }

    /// `gamma - x`, periodic in the label.
    pub fn displacement(&self) -> Field<T> {
        let g = self.labels();
        Field::raw(
            g,
            self.gamma.iter().enumerate().map(|(j, &y)| y - g.node(j)).collect(),
        )
    }

    /// Departure from `gamma(x_0 + 1) = gamma(x_0) + 1` after wrapping the
    /// last particle around; zero unless the ordering broke.
    pub fn degree_defect(&self) -> T {
        let m = self.gamma.len();
        let gap = self.gamma[0] + T::one() - self.gamma[m - 1];
        let h = self.labels().spacing();
        // the wrapped gap must be a genuine positive spacing
        if gap > T::zero() && gap < T::one() {
            T::zero()
        } else {
            (gap - h).abs()
        }
    }
}

#[derive(Clone)]
struct Vars<T: Real> {
    disp: Field<T>,
    vel: Field<T>,
    logj: Field<T>,
}

impl<T: Real> LinearState<T> for Vars<T> {
    fn add_scaled(&self, o: &Self, s: T) -> Self {
        Self {
            disp: self.disp.add_scaled(&o.disp, s),
            vel: self.vel.add_scaled(&o.vel, s),
            logj: self.logj.add_scaled(&o.logj, s),
        }
    }
}

fn jacobian_of<T: Real>(disp: &Field<T>) -> Field<T> {
    deriv_unchecked(disp, 1).map(|v| T::one() + v)
}

fn rhs_labels<T: Real>(v: &Vars<T>, dim: Dimension<T>) -> Vars<T> {
    let ga = jacobian_of(&v.disp);
    // u_x o gamma
    let w = deriv_unchecked(&v.vel, 1).zip_with(&ga, |d, j| d / j);
    let msq = mean(&w.zip_with(&ga, |w, j| w * w * j));
    let g = w.zip_with(&ga, |w, j| (w * w - msq) * j);
    let big = nonlocal(&g);
    // fix the additive constant so the forcing has zero mean in x
    let shift = mean(&big.zip_with(&ga, |f, j| f * j));
    let acc = big.map(|f| dim.a() * (f - shift));
    Vars {
        disp: v.vel.clone(),
        vel: acc,
        logj: w,
    }
}

fn rhs_grid<T: Real>(v: &Vars<T>, dim: Dimension<T>) -> Result<Vars<T>> {
    let labels = v.vel.grid();
    let gamma: Vec<T> = v
        .disp
        .values()
        .iter()
        .enumerate()
        .map(|(j, &d)| labels.node(j) + d)
        .collect();
    let graph = PeriodicPchip::new(&gamma, v.vel.values(), T::zero())?;
    let u = Field::raw(labels, labels.nodes().into_iter().map(|x| graph.eval(x)).collect());
    let ux = deriv_unchecked(&u, 1);
    let forcing = nonlocal(&ux.map(|g| g * g));
    let fi = forcing.interpolant();
    let gi = ux.interpolant();
    let acc = Field::raw(labels, gamma.iter().map(|&y| dim.a() * fi.eval(y)).collect());
    let w = Field::raw(labels, gamma.iter().map(|&y| gi.eval(y)).collect());
    Ok(Vars {
        disp: v.vel.clone(),
        vel: acc,
        logj: w,
    })
}

fn to_vars<T: Real>(fs: &FlowState<T>) -> Vars<T> {
    Vars {
        disp: fs.displacement(),
        vel: fs.gdot.clone(),
        logj: fs.log_jacobian.clone(),
    }
}

fn from_vars<T: Real>(t: T, v: Vars<T>) -> FlowState<T> {
    let labels = v.vel.grid().clone();
    let gamma = v
        .disp
        .values()
        .iter()
        .enumerate()
        .map(|(j, &d)| labels.node(j) + d)
        .collect();
    FlowState {
        t,
        gamma,
        gdot: v.vel,
        log_jacobian: v.logj,
    }
}

fn check_flow<T: Real>(fs: &FlowState<T>, eps_jac: T) -> Result<()> {
    let degenerate = |min: T| Error::FlowDegenerate {
        t: fs.t.as_f64(),
        min_jacobian: min.as_f64(),
    };
    if fs.gdot.first_non_finite().is_some() || fs.gamma.iter().any(|v| !v.is_finite()) {
        return Err(degenerate(T::nan()));
    }
    let min = jacobian_of(&fs.displacement()).min();
    let ordered = fs.gamma.windows(2).all(|w| w[1] > w[0]) && fs.degree_defect() == T::zero();
    if !(min >= eps_jac) || !ordered {
        return Err(degenerate(min));
    }
    Ok(())
}

/// One RK4 step of size `h`.
pub fn step_flow<T: Real>(fs: &FlowState<T>, h: T, dim: Dimension<T>, opts: FlowOptions<T>) -> Result<FlowState<T>> {
    let y = to_vars(fs);
    let next = match opts.route {
        ForcingRoute::LabelSpace => rk4_step(&y, h, |v: &Vars<T>, _| Ok::<_, Error>(rhs_labels(v, dim)))?,
        ForcingRoute::GridInterpolation => rk4_step(&y, h, |v: &Vars<T>, _| rhs_grid(v, dim))?,
    };
    let out = from_vars(fs.t + h, next);
    check_flow(&out, opts.eps_jac)?;
    Ok(out)
}

/// Integrates the particle system from `u0` with fixed step `cfg.dt` up to
/// `cfg.t_end`. Returns the states at `t = 0`, every `record_every` steps
/// and at the end.
pub fn evolve_flow<T: Real>(u0: &Field<T>, cfg: &SimConfig<T>, opts: FlowOptions<T>) -> Result<Vec<FlowState<T>>> {
    cfg.validate()?;
    if u0.len() != cfg.m {
        return Err(Error::LengthMismatch {
            expected: cfg.m,
            got: u0.len(),
        });
    }
    let steps = (cfg.t_end / cfg.dt).round().to_usize().unwrap_or(0);
    let mut state = FlowState::initial(u0);
    let mut out = vec![state.clone()];
    for i in 1..=steps {
        state = step_flow(&state, cfg.dt, cfg.dim, opts)?;
        state.t = cfg.dt * T::from_usize_lossy(i);
        if i % cfg.record_every == 0 || i == steps {
            out.push(state.clone());
        }
    }
    Ok(out)
}

/// `gamma_x` on the labels from the spectral derivative of the positions.
/// Fails with [`Error::FlowDegenerate`] below [`JACOBIAN_FLOOR`].
pub fn flow_jacobian<T: Real>(fs: &FlowState<T>) -> Result<Field<T>> {
    let j = jacobian_of(&fs.displacement());
    let min = j.min();
    if !(min >= c(JACOBIAN_FLOOR)) {
        return Err(Error::FlowDegenerate {
            t: fs.t.as_f64(),
            min_jacobian: min.as_f64(),
        });
    }
    Ok(j)
}

/// `gamma_x` from the accumulated exponential form `exp(int u_x o gamma)`.
pub fn accumulated_jacobian<T: Real>(fs: &FlowState<T>) -> Field<T> {
    fs.log_jacobian.map(T::exp)
}

/// `u_x o gamma` from the particle velocities: `d(gdot)/dx / gamma_x`.
pub fn gradient_on_labels<T: Real>(fs: &FlowState<T>) -> Result<Field<T>> {
    let j = flow_jacobian(fs)?;
    Ok(deriv_unchecked(&fs.gdot, 1).zip_with(&j, |d, j| d / j))
}

/// `u_xx o gamma` computed from the particle state alone.
pub fn uxx_on_labels<T: Real>(fs: &FlowState<T>) -> Result<Field<T>> {
    let j = flow_jacobian(fs)?;
    let w = deriv_unchecked(&fs.gdot, 1).zip_with(&j, |d, j| d / j);
    Ok(deriv_unchecked(&w, 1).zip_with(&j, |d, j| d / j))
}

/// `u0'' * gamma_x^{-(n-3)/(n-1)}`: the value of `u_xx` carried by each
/// particle according to the transport law.
pub fn transported_uxx<T: Real>(fs: &FlowState<T>, u0_xx: &Field<T>, dim: Dimension<T>) -> Result<Field<T>> {
    if u0_xx.len() != fs.gdot.len() {
        return Err(Error::LengthMismatch {
            expected: fs.gdot.len(),
            got: u0_xx.len(),
        });
    }
    let j = flow_jacobian(fs)?;
    let b = dim.b();
    Ok(u0_xx.zip_with(&j, |v, j| v * j.powf(-b)))
}

/// `||u_xx(t)||_p` by change of variables: `(int |u_xx o gamma|^p gamma_x)^{1/p}`.
pub fn uxx_lp_norm_on_labels<T: Real>(fs: &FlowState<T>, p: T) -> Result<T> {
    let j = flow_jacobian(fs)?;
    let uxx = uxx_on_labels(fs)?;
    Ok(mean(&uxx.zip_with(&j, |v, j| v.abs().powf(p) * j)).powf(p.recip()))
}

/// `u(., t)` on the fixed grid: the label of each node is found by monotone
/// cubic inversion of `gamma`, then the velocity is read off the
/// trigonometric interpolant of `gdot` in the labels.
pub fn reconstruct_on_grid<T: Real>(fs: &FlowState<T>) -> Result<Field<T>> {
    check_flow(fs, c(JACOBIAN_FLOOR))?;
    let labels = fs.labels();
    let inverse = PeriodicPchip::new(&fs.gamma, &labels.nodes(), T::one())?;
    let v = fs.gdot.interpolant();
    Ok(Field::raw(
        labels,
        labels.nodes().into_iter().map(|x| v.eval(inverse.eval(x))).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eulerian::solve_to_end;
    use std::f64::consts::PI;

    fn cfg(n: f64, m: usize, dt: f64, t_end: f64) -> (PeriodicGrid, SimConfig) {
        let c = SimConfig::new(Dimension::<f64>::new(n).unwrap(), m, dt, t_end);
        (c.grid().unwrap(), c)
    }

    fn sine(g: &PeriodicGrid, amp: f64) -> Field {
        Field::sample(g, |x: f64| amp * (2.0 * PI * x).sin()).unwrap()
    }

    #[test]
    fn constant_velocity_translates() {
        let (g, cfg) = cfg(3.0, 32, 1e-2, 1.0);
        let traj = evolve_flow(&Field::constant(&g, 0.3), &cfg, FlowOptions::default()).unwrap();
        let last = traj.last().unwrap();
        for (j, &y) in last.gamma.iter().enumerate() {
            assert!((y - g.node(j) - 0.3).abs() < 1e-12);
        }
        assert!(last.gdot.add_scaled(&Field::constant(&g, 0.3), -1.0).sup_norm() < 1e-14);
        let jac = flow_jacobian(last).unwrap();
        assert!(jac.add_scaled(&Field::constant(&g, 1.0), -1.0).sup_norm() < 1e-12);
    }

    #[test]
    fn zero_velocity_is_identity() {
        let (g, cfg) = cfg(5.0, 16, 0.1, 1.0);
        let traj = evolve_flow(&Field::zeros(&g), &cfg, FlowOptions::default()).unwrap();
        assert_eq!(traj.len(), 11);
        assert_eq!(traj.last().unwrap().gamma, g.nodes());
    }

    #[test]
    fn identity_flow_transports_nothing() {
        let (g, _) = cfg(5.0, 64, 1e-3, 0.0);
        let u0 = sine(&g, 0.1);
        let fs = FlowState::initial(&u0);
        let uxx0 = deriv_unchecked(&u0, 2);
        for n in [3.0, 5.0, 7.5] {
            let out = transported_uxx(&fs, &uxx0, Dimension::new(n).unwrap()).unwrap();
            assert!(out.add_scaled(&uxx0, -1.0).sup_norm() < 1e-12);
        }
        assert!(uxx_on_labels(&fs).unwrap().add_scaled(&uxx0, -1.0).sup_norm() < 1e-9);
    }

    #[test]
    fn jacobian_forms_agree() {
        let (g, cfg) = cfg(3.0, 128, 1e-3, 0.5);
        let traj = evolve_flow(&sine(&g, 0.1), &cfg.with_record_every(100), FlowOptions::default()).unwrap();
        for fs in &traj {
            let a = flow_jacobian(fs).unwrap();
            let b = accumulated_jacobian(fs);
            assert!(a.add_scaled(&b, -1.0).sup_norm() < 1e-8);
            assert_eq!(fs.degree_defect(), 0.0);
        }
    }

    #[test]
    fn agrees_with_eulerian_at_particles() {
        let (g, cfg) = cfg(3.0, 64, 1e-3, 0.3);
        let u0 = sine(&g, 0.3);
        let fs = evolve_flow(&u0, &cfg, FlowOptions::default()).unwrap().pop().unwrap();
        let ue = solve_to_end(&u0, &cfg).unwrap().interpolant();
        let gap = fs
            .gamma
            .iter()
            .zip(fs.gdot.values())
            .map(|(&y, &v)| (ue.eval(y) - v).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-9, "gap {gap:e}");
        let rebuilt = reconstruct_on_grid(&fs).unwrap();
        let direct = solve_to_end(&u0, &cfg).unwrap();
        assert!(rebuilt.add_scaled(&direct, -1.0).sup_norm() < 1e-5);
    }

    #[test]
    fn grid_route_tracks_label_route() {
        let (g, cfg) = cfg(3.0, 64, 1e-2, 0.3);
        let u0 = sine(&g, 0.3);
        let a = evolve_flow(&u0, &cfg, FlowOptions::default()).unwrap().pop().unwrap();
        let opts = FlowOptions {
            route: ForcingRoute::GridInterpolation,
            ..FlowOptions::default()
        };
        let b = evolve_flow(&u0, &cfg, opts).unwrap().pop().unwrap();
        let gap = a.gdot.add_scaled(&b.gdot, -1.0).sup_norm();
        assert!(gap < 1e-3, "gap {gap:e}");
    }

    #[test]
    fn degenerate_flow_is_reported() {
        let (g, _) = cfg(3.0, 32, 1e-2, 1.0);
        let mut fs = FlowState::initial(&sine(&g, 0.1));
        fs.gamma.swap(3, 4);
        assert!(matches!(reconstruct_on_grid(&fs), Err(Error::FlowDegenerate { .. })));
        let opts = FlowOptions { eps_jac: 2.0, ..FlowOptions::default() };
        let fs = FlowState::initial(&sine(&g, 0.1));
        assert!(matches!(step_flow(&fs, 1e-2, Dimension::new(3.0).unwrap(), opts), Err(Error::FlowDegenerate { .. })));
    }
}
