//! Time stepping shared by the solvers: classical RK4 over any vector-like
//! state, and an embedded Dormand–Prince 5(4) integrator for scalar ODEs.

use crate::operators::Field;
use crate::scalar::{c, Real};

/// State that can take part in a linear combination.
pub trait LinearState<T: Real>: Clone {
    /// `self + s * other`
    fn add_scaled(&self, other: &Self, s: T) -> Self;
}

impl<T: Real> LinearState<T> for Field<T> {
    fn add_scaled(&self, other: &Self, s: T) -> Self {
        Field::add_scaled(self, other, s)
    }
}

impl<T: Real> LinearState<T> for Vec<T> {
    fn add_scaled(&self, other: &Self, s: T) -> Self {
        self.iter().zip(other).map(|(&a, &b)| a + s * b).collect()
    }
}

impl<T: Real, const N: usize> LinearState<T> for [T; N] {
    fn add_scaled(&self, other: &Self, s: T) -> Self {
        let mut out = *self;
        for (o, &b) in out.iter_mut().zip(other) {
            *o += s * b;
        }
        out
    }
}

/// One classical RK4 step of size `h`. The right-hand side receives the
/// stage state and the stage time offset (`0`, `h/2` or `h`).
pub fn rk4_step<T, S, E>(
    y: &S,
    h: T,
    mut rhs: impl FnMut(&S, T) -> Result<S, E>,
) -> Result<S, E>
where
    T: Real,
    S: LinearState<T>,
{
    let half = h * c(0.5);
    let k1 = rhs(y, T::zero())?;
    let k2 = rhs(&y.add_scaled(&k1, half), half)?;
    let k3 = rhs(&y.add_scaled(&k2, half), half)?;
    let k4 = rhs(&y.add_scaled(&k3, h), h)?;
    let sixth = h / c(6.0);
    let third = h / c(3.0);
    Ok(y
        .add_scaled(&k1, sixth)
        .add_scaled(&k2, third)
        .add_scaled(&k3, third)
        .add_scaled(&k4, sixth))
}

/// Tolerances and step limits for [`integrate_scalar_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveTolerance<T: Real> {
    pub rtol: T,
    pub atol: T,
    pub h_min: T,
    pub max_steps: usize,
}

impl<T: Real> Default for AdaptiveTolerance<T> {
    fn default() -> Self {
        Self {
            rtol: c(1e-12),
            atol: c(1e-14),
            h_min: c(1e-14),
            max_steps: 1_000_000,
        }
    }
}

/// Integrates `y' = f(y)` from `t = 0` to `t_end` with Dormand–Prince 5(4)
/// and standard step-size control. Returns `None` if the step size
/// underflows or the step budget runs out.
pub fn integrate_scalar_adaptive<T: Real>(
    f: impl Fn(T) -> T,
    y0: T,
    t_end: T,
    tol: AdaptiveTolerance<T>,
) -> Option<T> {
    if t_end <= T::zero() {
        return Some(y0);
    }
    // Butcher tableau
    let a21 = c::<T>(1.0 / 5.0);
    let (a31, a32) = (c::<T>(3.0 / 40.0), c::<T>(9.0 / 40.0));
    let (a41, a42, a43) = (c::<T>(44.0 / 45.0), c::<T>(-56.0 / 15.0), c::<T>(32.0 / 9.0));
    let (a51, a52, a53, a54) = (
        c::<T>(19372.0 / 6561.0),
        c::<T>(-25360.0 / 2187.0),
        c::<T>(64448.0 / 6561.0),
        c::<T>(-212.0 / 729.0),
    );
    let (a61, a62, a63, a64, a65) = (
        c::<T>(9017.0 / 3168.0),
        c::<T>(-355.0 / 33.0),
        c::<T>(46732.0 / 5247.0),
        c::<T>(49.0 / 176.0),
        c::<T>(-5103.0 / 18656.0),
    );
    let (b1, b3, b4, b5, b6) = (
        c::<T>(35.0 / 384.0),
        c::<T>(500.0 / 1113.0),
        c::<T>(125.0 / 192.0),
        c::<T>(-2187.0 / 6784.0),
        c::<T>(11.0 / 84.0),
    );
    // 5th minus 4th order weights
    let (e1, e3, e4, e5, e6, e7) = (
        c::<T>(71.0 / 57600.0),
        c::<T>(-71.0 / 16695.0),
        c::<T>(71.0 / 1920.0),
        c::<T>(-17253.0 / 339200.0),
        c::<T>(22.0 / 525.0),
        c::<T>(-1.0 / 40.0),
    );

    let mut t = T::zero();
    let mut y = y0;
    let mut h = (t_end * c(1e-3)).max(tol.h_min);
    let mut k1 = f(y);
    for _ in 0..tol.max_steps {
        if t >= t_end {
            return Some(y);
        }
        if t + h > t_end {
            h = t_end - t;
        }
        let k2 = f(y + h * a21 * k1);
        let k3 = f(y + h * (a31 * k1 + a32 * k2));
        let k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        let k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        let k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        let y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        let k7 = f(y_new);
        let err = (h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7)).abs();
        let scale = tol.atol + tol.rtol * y.abs().max(y_new.abs());
        let ratio = err / scale;
        if ratio <= T::one() || h <= tol.h_min {
            t += h;
            y = y_new;
            k1 = k7;
        }
        let factor = if ratio == T::zero() {
            c(5.0)
        } else {
            (c::<T>(0.9) * ratio.powf(c(-0.2))).min(c(5.0)).max(c(0.2))
        };
        h *= factor;
        if h < tol.h_min && t < t_end {
            if ratio > T::one() {
                return None;
            }
            h = tol.h_min;
        }
        if !y.is_finite() {
            return None;
        }
    }
    None
}
