//! Periodic piecewise-affine solutions with two phases: slope `p` on
//! `[0, phi) U [psi, 1)` and slope `q` on `[phi, psi)`, offset `alpha`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{integrate_scalar_adaptive, rk4_step, AdaptiveTolerance};
use crate::operators::Dimension;
use crate::scalar::{c, Real};

/// Smallest phase fraction tolerated before reporting a collapse.
pub const PHASE_FLOOR: f64 = 1e-12;

/// Initial data. `mean` is the spatial average of `u`, which must be zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhaseInit<T: Real = f64> {
    pub p: T,
    pub q: T,
    pub phi: T,
    pub psi: T,
    pub mean: T,
}

impl<T: Real> TwoPhaseInit<T> {
    pub fn new(p: T, q: T, phi: T, psi: T) -> Self {
        Self {
            p,
            q,
            phi,
            psi,
            mean: T::zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoPhaseState<T: Real = f64> {
    pub t: T,
    pub p: T,
    pub q: T,
    pub phi: T,
    pub psi: T,
    pub alpha: T,
    pub int_p: T,
    pub int_q: T,
    #[serde(skip)]
    pub dim: Dimension<T>,
}

/// `alpha` for zero mean: `-(p/2)(phi + psi - 1)`.
fn offset<T: Real>(p: T, phi: T, psi: T) -> T {
    -(p * c(0.5)) * (phi + psi - T::one())
}

fn periodicity_defect<T: Real>(p: T, q: T, phi: T, psi: T) -> T {
    phi * p + (psi - phi) * q + (T::one() - psi) * p
}

impl<T: Real> TwoPhaseState<T> {
    pub fn new(init: TwoPhaseInit<T>, dim: Dimension<T>) -> Result<Self> {
        let TwoPhaseInit { p, q, phi, psi, mean } = init;
        if [p, q, phi, psi, mean].iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("two-phase data must be finite".into()));
        }
        if mean != T::zero() {
            return Err(Error::InvalidConfig(format!(
                "two-phase solutions are set up with zero mean, got {mean}"
            )));
        }
        if !(T::zero() < phi && phi < psi && psi < T::one()) {
            return Err(Error::InvalidConfig(format!(
                "interfaces must satisfy 0 < phi < psi < 1, got phi = {phi}, psi = {psi}"
            )));
        }
        let rest = p == T::zero() && q == T::zero();
        if !rest && !(p * q < T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "slopes must have opposite signs, got p = {p}, q = {q}"
            )));
        }
        let n = periodicity_defect(p, q, phi, psi);
        if n.abs() > c::<T>(1e-12) * (p.abs() + q.abs()).max(T::one()) {
            return Err(Error::InvalidConfig(format!(
                "profile is not periodic: phi p + (psi - phi) q + (1 - psi) p = {n}"
            )));
        }
        Ok(Self {
            t: T::zero(),
            p,
            q,
            phi,
            psi,
            alpha: offset(p, phi, psi),
            int_p: T::zero(),
            int_q: T::zero(),
            dim,
        })
    }

    /// `phi p + (psi - phi) q + (1 - psi) p`, zero for periodic profiles.
    pub fn periodicity_defect(&self) -> T {
        periodicity_defect(self.p, self.q, self.phi, self.psi)
    }

    pub fn center_fraction(&self) -> T {
        self.psi - self.phi
    }

    pub fn outer_fraction(&self) -> T {
        self.phi + T::one() - self.psi
    }

    /// The forcing `f = (n/(n-1)) p q`.
    pub fn forcing(&self) -> T {
        self.dim.a() * self.p * self.q
    }

    /// The forcing from its defining integral `-(n/(n-1)) int u_x^2`.
    pub fn forcing_from_profile(&self) -> T {
        let (p, q) = (self.p, self.q);
        -self.dim.a() * (self.outer_fraction() * p * p + self.center_fraction() * q * q)
    }

    fn as_array(&self) -> [T; 6] {
        [self.p, self.q, self.phi, self.psi, self.int_p, self.int_q]
    }

    fn from_array(t: T, y: [T; 6], dim: Dimension<T>) -> Self {
        let [p, q, phi, psi, int_p, int_q] = y;
        Self {
            t,
            p,
            q,
            phi,
            psi,
            alpha: offset(p, phi, psi),
            int_p,
            int_q,
            dim,
        }
    }
}

/// Time derivatives of the two-phase state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhaseRates<T: Real = f64> {
    pub p: T,
    pub q: T,
    pub phi: T,
    pub psi: T,
    pub alpha: T,
}

fn rates_of<T: Real>(y: &[T; 6], dim: Dimension<T>, t: T) -> Result<[T; 6]> {
    let [p, q, phi, psi, _, _] = *y;
    let center = psi - phi;
    let outer = phi + T::one() - psi;
    let floor = c::<T>(PHASE_FLOOR);
    if !(center >= floor && outer >= floor) {
        return Err(Error::PhaseCollapse {
            t: t.as_f64(),
            center: center.as_f64(),
            outer: outer.as_f64(),
        });
    }
    let n = dim.n();
    let k = (n - T::one()).recip();
    let alpha = offset(p, phi, psi);
    let dphi = alpha + phi * p;
    Ok([
        k * (p * p + n * p * q),
        k * (q * q + n * p * q),
        dphi,
        dphi + center * q,
        p,
        q,
    ])
}

pub fn twophase_rhs<T: Real>(s: &TwoPhaseState<T>) -> Result<TwoPhaseRates<T>> {
    let [p, q, phi, psi, _, _] = rates_of(&s.as_array(), s.dim, s.t)?;
    let alpha = -(p * c(0.5)) * (s.phi + s.psi - T::one()) - s.p * c(0.5) * (phi + psi);
    Ok(TwoPhaseRates { p, q, phi, psi, alpha })
}

/// RK4 with fixed step `dt` up to `t_end`; returns the state after every
/// `record_every` steps (and at `t = 0` and the end).
pub fn evolve_twophase<T: Real>(
    s0: &TwoPhaseState<T>,
    dt: T,
    t_end: T,
    record_every: usize,
) -> Result<Vec<TwoPhaseState<T>>> {
    if !(dt > T::zero()) || !(t_end >= T::zero()) || record_every == 0 {
        return Err(Error::InvalidConfig("need dt > 0, T_end >= 0 and record_every >= 1".into()));
    }
    let steps = (t_end / dt).round().to_usize().unwrap_or(0);
    let dim = s0.dim;
    let mut y = s0.as_array();
    let mut out = vec![*s0];
    for i in 1..=steps {
        let t0 = s0.t + dt * T::from_usize_lossy(i - 1);
        y = rk4_step(&y, dt, |z: &[T; 6], h| rates_of(z, dim, t0 + h))?;
        if i % record_every == 0 || i == steps {
            let t = s0.t + dt * T::from_usize_lossy(i);
            out.push(TwoPhaseState::from_array(t, y, dim));
        }
    }
    Ok(out)
}

/// Velocity of the piecewise-affine profile at `x` (taken modulo 1).
pub fn sample_profile<T: Real>(s: &TwoPhaseState<T>, x: T) -> T {
    let x = x - x.floor();
    if x < s.phi {
        s.alpha + x * s.p
    } else if x < s.psi {
        s.alpha + s.phi * s.p + (x - s.phi) * s.q
    } else {
        s.alpha + s.phi * s.p + (s.psi - s.phi) * s.q + (x - s.psi) * s.p
    }
}

/// Slope of the profile at `x`: `p` in the outer phase, `q` in the centre.
pub fn profile_slope<T: Real>(s: &TwoPhaseState<T>, x: T) -> T {
    let x = x - x.floor();
    if x < s.phi || x >= s.psi {
        s.p
    } else {
        s.q
    }
}

/// `u_t` at a fixed position `x` away from the interfaces.
pub fn profile_time_derivative<T: Real>(s: &TwoPhaseState<T>, x: T) -> Result<T> {
    let r = twophase_rhs(s)?;
    let x = x - x.floor();
    Ok(if x < s.phi {
        r.alpha + x * r.p
    } else if x < s.psi {
        r.alpha + r.phi * s.p + s.phi * r.p + (x - s.phi) * r.q - r.phi * s.q
    } else {
        r.alpha + r.phi * s.p + s.phi * r.p + (r.psi - r.phi) * s.q + (s.psi - s.phi) * r.q
            + (x - s.psi) * r.p
            - r.psi * s.p
    })
}

/// Radius and angle of `(p, q)` in the plane.
pub fn polar<T: Real>(p: T, q: T) -> (T, T) {
    (p.hypot(q), q.atan2(p))
}

fn polar_shape<T: Real>(theta: T, n: T) -> T {
    let (s, co) = theta.sin_cos();
    let e = (n - T::one()).recip();
    (co * s).abs().powf(e) * (co - s).abs().powf(-(n + T::one()) * e)
}

/// Trajectory constant `C` with `r = C |cos sin|^{1/(n-1)} |cos - sin|^{-(n+1)/(n-1)}`.
pub fn polar_constant<T: Real>(s0: &TwoPhaseState<T>) -> Result<T> {
    if !(s0.p > T::zero() && s0.q < T::zero()) {
        return Err(Error::InvalidConfig("the polar form needs p > 0 > q".into()));
    }
    let (r, theta) = polar(s0.p, s0.q);
    Ok(r / polar_shape(theta, s0.dim.n()))
}

/// Radius from the implicit polar solution at angle `theta`.
pub fn polar_radius<T: Real>(constant: T, theta: T, dim: Dimension<T>) -> T {
    constant * polar_shape(theta, dim.n())
}

/// `(r, theta)` at time `t` after `s0`, from the scalar angle equation
/// `theta' = -C |cos sin|^{n/(n-1)} |cos - sin|^{-2/(n-1)}` and the
/// implicit radius. Requires `p > 0 > q` initially.
pub fn polar_oracle<T: Real>(s0: &TwoPhaseState<T>, t: T) -> Result<(T, T)> {
    let constant = polar_constant(s0)?;
    let (r0, theta0) = polar(s0.p, s0.q);
    if t == T::zero() {
        return Ok((r0, theta0));
    }
    let n = s0.dim.n();
    let e = (n - T::one()).recip();
    let rate = |th: T| {
        let (s, co) = th.sin_cos();
        -constant * (co * s).abs().powf(n * e) * (co - s).abs().powf(-c::<T>(2.0) * e)
    };
    let theta = integrate_scalar_adaptive(rate, theta0, t, AdaptiveTolerance::default())
        .ok_or_else(|| Error::InvalidConfig("angle integration did not converge".into()))?;
    Ok((polar_radius(constant, theta, s0.dim), theta))
}

/// Largest relative mismatch between `sqrt(p^2 + q^2)` along `series` and
/// the polar oracle started from `series[0]`.
pub fn polar_mismatch<T: Real>(series: &[TwoPhaseState<T>]) -> Result<T> {
    let s0 = series.first().ok_or_else(|| Error::InvalidConfig("empty series".into()))?;
    let mut worst = T::zero();
    for s in series {
        let (r, _) = polar_oracle(s0, s.t - s0.t)?;
        let direct = s.p.hypot(s.q);
        worst = worst.max((r - direct).abs() / direct);
    }
    Ok(worst)
}

/// Largest gap between the interface speeds and the fluid velocity at the
/// interfaces, `|psi' - u(psi)|` and `|phi' - u(phi)|`. The speeds are
/// taken from the series itself by fourth-order central differences, so
/// the series must be uniformly spaced in time with at least five entries.
pub fn rh_check<T: Real>(series: &[TwoPhaseState<T>]) -> T {
    if series.len() < 5 {
        return T::zero();
    }
    let h = series[1].t - series[0].t;
    let eight = c::<T>(8.0);
    let denom = c::<T>(12.0) * h;
    let mut worst = T::zero();
    for w in series.windows(5) {
        let mid = &w[2];
        let speed = |f: fn(&TwoPhaseState<T>) -> T| (f(&w[0]) - eight * f(&w[1]) + eight * f(&w[3]) - f(&w[4])) / denom;
        let dphi = speed(|s| s.phi);
        let dpsi = speed(|s| s.psi);
        // left limits; the profile is continuous so either side will do
        let u_phi = mid.alpha + mid.phi * mid.p;
        let u_psi = u_phi + (mid.psi - mid.phi) * mid.q;
        worst = worst.max((dphi - u_phi).abs()).max((dpsi - u_psi).abs());
    }
    worst
}

/// Worst deviations from the closed-form relations along a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormReport<T: Real = f64> {
    pub n_residual: T,
    pub partition_residual: T,
    pub center_fraction: T,
    pub outer_fraction: T,
    /// Relative mismatch of `p - q` against the exponential formula.
    pub slope_gap: T,
    pub phi_formula: T,
    pub psi_formula: T,
    pub sign_preserved: bool,
    pub phases_bracketed: bool,
}

/// Residual of `(phi0 + 1 - psi0) e^{int p} + (psi0 - phi0) e^{int q} = 1`.
pub fn partition_residual<T: Real>(s0: &TwoPhaseState<T>, s: &TwoPhaseState<T>) -> T {
    s0.outer_fraction() * s.int_p.exp() + s0.center_fraction() * s.int_q.exp() - T::one()
}

pub fn closed_form_report<T: Real>(series: &[TwoPhaseState<T>]) -> Option<ClosedFormReport<T>> {
    let s0 = series.first()?;
    let k = (s0.dim.n() - T::one()).recip();
    let mid = (s0.phi + s0.psi) * c(0.5);
    let half_outer = s0.outer_fraction() * c(0.5);
    let sign0 = (s0.p - s0.q).signum();
    let mut r = ClosedFormReport {
        n_residual: T::zero(),
        partition_residual: T::zero(),
        center_fraction: T::zero(),
        outer_fraction: T::zero(),
        slope_gap: T::zero(),
        phi_formula: T::zero(),
        psi_formula: T::zero(),
        sign_preserved: true,
        phases_bracketed: true,
    };
    for s in series {
        let ep = s.int_p.exp();
        r.n_residual = r.n_residual.max(s.periodicity_defect().abs());
        r.partition_residual = r.partition_residual.max(partition_residual(s0, s).abs());
        r.center_fraction = r
            .center_fraction
            .max((s.center_fraction() - s0.center_fraction() * s.int_q.exp()).abs());
        r.outer_fraction = r.outer_fraction.max((s.outer_fraction() - s0.outer_fraction() * ep).abs());
        let predicted = (s0.p - s0.q) * (k * (s.int_p + s.int_q)).exp();
        if predicted != T::zero() {
            r.slope_gap = r.slope_gap.max(((s.p - s.q) - predicted).abs() / predicted.abs());
        }
        r.phi_formula = r.phi_formula.max((s.phi - (s0.phi + half_outer * (ep - T::one()))).abs());
        r.psi_formula = r.psi_formula.max((s.psi - (s0.psi - half_outer * (ep - T::one()))).abs());
        r.sign_preserved &= (s.p - s.q).signum() == sign0;
        if s.t > s0.t && sign0 > T::zero() {
            r.phases_bracketed &= s.phi >= s0.phi && s.phi < mid && s.psi > mid && s.psi <= s0.psi;
        }
    }
    Some(r)
}

/// One CSV row: `t, p, q, phi, psi, alpha, int_p, int_q, N_residual, partition_residual`.
pub const CSV_HEADER: [&str; 10] = [
    "t",
    "p",
    "q",
    "phi",
    "psi",
    "alpha",
    "int_p",
    "int_q",
    "N_residual",
    "partition_residual",
];

pub fn csv_row<T: Real>(s0: &TwoPhaseState<T>, s: &TwoPhaseState<T>) -> [T; 10] {
    [
        s.t,
        s.p,
        s.q,
        s.phi,
        s.psi,
        s.alpha,
        s.int_p,
        s.int_q,
        s.periodicity_defect(),
        partition_residual(s0, s),
    ]
}
