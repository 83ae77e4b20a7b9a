//! Reconstruction of the `n`-dimensional Euler flow from a 1D solution:
//! velocity `(u, -u_x x'/(n-1))`, pressure `P(x) + f |x'|^2 / (2(n-1))`,
//! and pointwise certification of the momentum and continuity equations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{deriv_unchecked, forcing_f, inv_dx_with_tolerance, Dimension, Field, SpectralInterpolant};
use crate::scalar::{c, Real};
use crate::twophase::{profile_slope, profile_time_derivative, sample_profile, twophase_rhs, TwoPhaseState};

/// Largest `|mean(u_t + u u_x)|` accepted when building the pressure.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-8;

/// A point `(x, x')` of `T x R^{n-1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftPoint<T: Real = f64> {
    pub x: T,
    pub xprime: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftedSample<T: Real = f64> {
    pub x: T,
    pub xprime: Vec<T>,
    pub velocity: Vec<T>,
    pub pressure: T,
}

/// Mean-zero `x`-dependent pressure `P` and the forcing `f` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureModel<T: Real = f64> {
    pub p: Field<T>,
    pub f: T,
}

impl<T: Real> PressureModel<T> {
    /// `Delta p = P'' + f` on the grid.
    pub fn laplacian(&self) -> Field<T> {
        deriv_unchecked(&self.p, 2).map(|v| v + self.f)
    }

    pub fn eval(&self, x: T, xprime: &[T], dim: Dimension<T>) -> T {
        self.p.interpolant().eval(x) + transverse_pressure(self.f, xprime, dim)
    }
}

fn transverse_pressure<T: Real>(f: T, xprime: &[T], dim: Dimension<T>) -> T {
    let r2 = xprime.iter().fold(T::zero(), |a, &v| a + v * v);
    f * r2 / (c::<T>(2.0) * (dim.n() - T::one()))
}

fn integer_dimension<T: Real>(dim: Dimension<T>) -> Result<usize> {
    if !dim.is_integer() || dim.n() < c(2.0) {
        return Err(Error::DimensionUnsupported {
            n: dim.n().as_f64(),
            reason: "the lifted flow lives in an integer dimension n >= 2",
        });
    }
    Ok(dim.n().round().to_usize().unwrap_or(0))
}

fn check_points<T: Real>(points: &[LiftPoint<T>], n: usize) -> Result<()> {
    for p in points {
        if p.xprime.len() != n - 1 {
            return Err(Error::LengthMismatch {
                expected: n - 1,
                got: p.xprime.len(),
            });
        }
        if !p.x.is_finite() || p.xprime.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("sample points must be finite".into()));
        }
    }
    Ok(())
}

/// `P = D^{-1}(-(u_t + u u_x))` and `f = -(n/(n-1)) int u_x^2`. Fails with
/// [`Error::NonZeroMean`] when `u_t + u u_x` has mean above
/// [`COMPATIBILITY_TOLERANCE`], i.e. the pair `(u, u_t)` is inconsistent.
pub fn pressure_model<T: Real>(u: &Field<T>, ut: &Field<T>, dim: Dimension<T>) -> Result<PressureModel<T>> {
    if u.grid() != ut.grid() {
        return Err(Error::LengthMismatch {
            expected: u.len(),
            got: ut.len(),
        });
    }
    let ux = deriv_unchecked(u, 1);
    let g = Field::raw(
        u.grid(),
        (0..u.len())
            .map(|j| -(ut.values()[j] + u.values()[j] * ux.values()[j]))
            .collect(),
    );
    let p = inv_dx_with_tolerance(&g, c(COMPATIBILITY_TOLERANCE))?;
    Ok(PressureModel { p, f: forcing_f(u, dim) })
}

/// Values of the 1D fields at one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalJet<T: Real = f64> {
    pub u: T,
    pub ux: T,
    pub uxx: T,
    pub ut: T,
    pub uxt: T,
    /// `P(x)` and `P'(x)`.
    pub p: T,
    pub px: T,
}

/// Anything that can supply the 1D jet at arbitrary `x` plus the forcing.
pub trait LiftSource<T: Real> {
    fn dim(&self) -> Dimension<T>;
    fn forcing(&self) -> T;
    fn jet(&self, x: T) -> LocalJet<T>;
}

/// Grid snapshot `(u, u_t)` evaluated through trigonometric interpolation.
#[derive(Debug, Clone)]
pub struct SpectralSource<T: Real = f64> {
    dim: Dimension<T>,
    u: SpectralInterpolant<T>,
    ut: SpectralInterpolant<T>,
    pressure: SpectralInterpolant<T>,
    model: PressureModel<T>,
}

impl<T: Real> SpectralSource<T> {
    pub fn new(u: &Field<T>, ut: &Field<T>, dim: Dimension<T>) -> Result<Self> {
        integer_dimension(dim)?;
        let model = pressure_model(u, ut, dim)?;
        Ok(Self {
            dim,
            u: u.interpolant(),
            ut: ut.interpolant(),
            pressure: model.p.interpolant(),
            model,
        })
    }

    pub fn pressure_model(&self) -> &PressureModel<T> {
        &self.model
    }
}

impl<T: Real> LiftSource<T> for SpectralSource<T> {
    fn dim(&self) -> Dimension<T> {
        self.dim
    }

    fn forcing(&self) -> T {
        self.model.f
    }

    fn jet(&self, x: T) -> LocalJet<T> {
        LocalJet {
            u: self.u.eval(x),
            ux: self.u.eval_derivative(x, 1),
            uxx: self.u.eval_derivative(x, 2),
            ut: self.ut.eval(x),
            uxt: self.ut.eval_derivative(x, 1),
            p: self.pressure.eval(x),
            px: self.pressure.eval_derivative(x, 1),
        }
    }
}

/// The exact piecewise-affine two-phase solution, valid away from the
/// interfaces. `P'` is `-(u_t + u u_x)`, whose periodicity is checked by
/// integrating it exactly over each phase.
#[derive(Debug, Clone)]
pub struct TwoPhaseSource<T: Real = f64> {
    state: TwoPhaseState<T>,
}

impl<T: Real> TwoPhaseSource<T> {
    pub fn new(state: TwoPhaseState<T>) -> Result<Self> {
        integer_dimension(state.dim)?;
        twophase_rhs(&state)?;
        let src = Self { state };
        let mean = src.compatibility_mean()?;
        if mean.abs() > c(COMPATIBILITY_TOLERANCE) {
            return Err(Error::NonZeroMean {
                mean: mean.as_f64(),
                tol: COMPATIBILITY_TOLERANCE,
            });
        }
        Ok(src)
    }

    /// `int_0^1 (u_t + u u_x) dx`, exact: the integrand is affine on each
    /// phase, so the midpoint rule is exact there.
    pub fn compatibility_mean(&self) -> Result<T> {
        let s = &self.state;
        let pieces = [(T::zero(), s.phi), (s.phi, s.psi), (s.psi, T::one())];
        let mut total = T::zero();
        for (a, b) in pieces {
            let mid = (a + b) * c(0.5);
            let g = profile_time_derivative(s, mid)? + sample_profile(s, mid) * profile_slope(s, mid);
            total += g * (b - a);
        }
        Ok(total)
    }

    /// Distance from `x` to the nearer interface, on the circle.
    pub fn interface_distance(&self, x: T) -> T {
        let x = x - x.floor();
        let d = |y: T| {
            let e = (x - y).abs();
            e.min(T::one() - e)
        };
        d(self.state.phi).min(d(self.state.psi))
    }
}

impl<T: Real> LiftSource<T> for TwoPhaseSource<T> {
    fn dim(&self) -> Dimension<T> {
        self.state.dim
    }

    fn forcing(&self) -> T {
        self.state.forcing()
    }

    fn jet(&self, x: T) -> LocalJet<T> {
        let s = &self.state;
        let r = twophase_rhs(s).expect("state validated at construction");
        let u = sample_profile(s, x);
        let ux = profile_slope(s, x);
        let ut = profile_time_derivative(s, x).expect("state validated at construction");
        let xr = x - x.floor();
        let uxt = if xr < s.phi || xr >= s.psi { r.p } else { r.q };
        LocalJet {
            u,
            ux,
            uxx: T::zero(),
            ut,
            uxt,
            // P itself is not needed for the momentum balance
            p: T::nan(),
            px: -(ut + u * ux),
        }
    }
}

/// Velocity and pressure of the lifted flow at each point. The pressure
/// uses `u_t` from the evolution equation.
pub fn lift_velocity<T: Real>(u: &Field<T>, points: &[LiftPoint<T>], dim: Dimension<T>) -> Result<Vec<LiftedSample<T>>> {
    let n = integer_dimension(dim)?;
    check_points(points, n)?;
    let ut = crate::operators::evolution_rhs(u, dim);
    let src = SpectralSource::new(u, &ut, dim)?;
    Ok(points
        .iter()
        .map(|pt| {
            let j = src.jet(pt.x);
            let k = (dim.n() - T::one()).recip();
            let mut velocity = Vec::with_capacity(n);
            velocity.push(j.u);
            velocity.extend(pt.xprime.iter().map(|&y| -j.ux * y * k));
            LiftedSample {
                x: pt.x,
                xprime: pt.xprime.clone(),
                velocity,
                pressure: j.p + transverse_pressure(src.forcing(), &pt.xprime, dim),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointResidual<T: Real = f64> {
    pub x: T,
    pub xprime: Vec<T>,
    /// Components of `u_t + (u . grad) u + grad p`.
    pub momentum: Vec<T>,
    pub divergence: T,
}

impl<T: Real> PointResidual<T> {
    pub fn momentum_norm(&self) -> T {
        self.momentum.iter().fold(T::zero(), |a, &v| a.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport<T: Real = f64> {
    pub n: T,
    pub max_momentum: T,
    pub mean_momentum: T,
    pub max_divergence: T,
    pub points: Vec<PointResidual<T>>,
}

/// Euler residuals of the lifted flow at one point, assembled from the
/// velocity gradient of the ansatz.
pub fn point_residual<T: Real>(src: &impl LiftSource<T>, pt: &LiftPoint<T>) -> PointResidual<T> {
    let dim = src.dim();
    let n = pt.xprime.len() + 1;
    let k = (dim.n() - T::one()).recip();
    let f = src.forcing();
    let j = src.jet(pt.x);

    let mut vel = vec![j.u];
    vel.extend(pt.xprime.iter().map(|&y| -j.ux * y * k));
    // grad[i][l] = d vel_i / d x_l
    let mut grad = vec![vec![T::zero(); n]; n];
    grad[0][0] = j.ux;
    for (i, row) in grad.iter_mut().enumerate().skip(1) {
        row[0] = -j.uxx * pt.xprime[i - 1] * k;
        row[i] = -j.ux * k;
    }
    let mut dt = vec![j.ut];
    dt.extend(pt.xprime.iter().map(|&y| -j.uxt * y * k));
    let mut dp = vec![j.px];
    dp.extend(pt.xprime.iter().map(|&y| f * y * k));

    let momentum = (0..n)
        .map(|i| {
            let adv = (0..n).fold(T::zero(), |a, l| a + vel[l] * grad[i][l]);
            dt[i] + adv + dp[i]
        })
        .collect();
    let divergence = (0..n).fold(T::zero(), |a, i| a + grad[i][i]);
    PointResidual {
        x: pt.x,
        xprime: pt.xprime.clone(),
        momentum,
        divergence,
    }
}

pub fn residual_report<T: Real>(src: &impl LiftSource<T>, points: &[LiftPoint<T>]) -> Result<ResidualReport<T>> {
    let n = integer_dimension(src.dim())?;
    check_points(points, n)?;
    let res: Vec<_> = points.iter().map(|p| point_residual(src, p)).collect();
    let max_momentum = res.iter().fold(T::zero(), |a, r| a.max(r.momentum_norm()));
    let total = res.iter().fold(T::zero(), |a, r| a + r.momentum_norm());
    let mean_momentum = if res.is_empty() {
        T::zero()
    } else {
        total / T::from_usize_lossy(res.len())
    };
    let max_divergence = res.iter().fold(T::zero(), |a, r| a.max(r.divergence.abs()));
    Ok(ResidualReport {
        n: src.dim().n(),
        max_momentum,
        mean_momentum,
        max_divergence,
        points: res,
    })
}

/// Residual report for a grid snapshot `(u, u_t)`.
pub fn euler_residual<T: Real>(
    u: &Field<T>,
    ut: &Field<T>,
    dim: Dimension<T>,
    points: &[LiftPoint<T>],
) -> Result<ResidualReport<T>> {
    residual_report(&SpectralSource::new(u, ut, dim)?, points)
}

/// `count` points with `x` uniform on `[0, 1)` and each transverse
/// coordinate uniform on `[-1, 1]`, reproducible from `seed`.
pub fn random_points<T: Real>(count: usize, dim: Dimension<T>, seed: u64) -> Result<Vec<LiftPoint<T>>> {
    let n = integer_dimension(dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| LiftPoint {
            x: c(rng.gen::<f64>()),
            xprime: (1..n).map(|_| c(rng.gen_range(-1.0..=1.0))).collect(),
        })
        .collect())
}
