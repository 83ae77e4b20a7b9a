//! Periodic grid, Fourier collocation and the nonlocal operators of the
//! reduced one-dimensional equation
//!
//! ```text
//! u_t + u u_x = a * D^{-2} D ((u_x)^2),      a = n / (n - 1)
//! ```
//!
//! on the unit torus. `D^{-1}` is the mean-zero periodic antiderivative and
//! `D^{-2} D f = D^{-1}(f - mean f)` acts on Fourier mode `k != 0` as
//! `1 / (2 pi i k)`.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::{c, sup_norm, Real};

/// Tolerance on `|mean f|` accepted by [`inv_dx`].
pub const MEAN_TOLERANCE: f64 = 1e-10;

struct GridInner<T: Real> {
    m: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    /// Signed integer wavenumber of each FFT bin, as a scalar.
    wavenumbers: Vec<T>,
}

/// Uniform grid `x_j = j / M` on the unit torus, with cached FFT plans.
///
/// Cloning is cheap; clones share the plans.
#[derive(Clone)]
pub struct PeriodicGrid<T: Real = f64> {
    inner: Arc<GridInner<T>>,
}

impl<T: Real> fmt::Debug for PeriodicGrid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid").field("m", &self.inner.m).finish()
    }
}

impl<T: Real> PartialEq for PeriodicGrid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.inner.m == other.inner.m
    }
}

impl<T: Real> PeriodicGrid<T> {
    pub fn new(m: usize) -> Result<Self> {
        if m < 8 || !m.is_multiple_of(2) {
            return Err(Error::InvalidGrid(m));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let wavenumbers = (0..m)
            .map(|j| {
                let k = if j <= m / 2 { j as i64 } else { j as i64 - m as i64 };
                T::from_i64(k).expect("wavenumber representable")
            })
            .collect();
        Ok(Self {
            inner: Arc::new(GridInner {
                m,
                forward,
                inverse,
                wavenumbers,
            }),
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.inner.m
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn spacing(&self) -> T {
        T::one() / T::from_usize_lossy(self.inner.m)
    }

    #[inline]
    pub fn node(&self, j: usize) -> T {
        T::from_usize_lossy(j) / T::from_usize_lossy(self.inner.m)
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.len()).map(|j| self.node(j)).collect()
    }

    /// Largest wavenumber kept by the 2/3 dealiasing rule.
    #[inline]
    pub fn dealias_cutoff(&self) -> usize {
        self.inner.m / 3
    }

    #[inline]
    pub(crate) fn wavenumbers(&self) -> &[T] {
        &self.inner.wavenumbers
    }

    #[inline]
    pub(crate) fn nyquist(&self) -> usize {
        self.inner.m / 2
    }

    pub(crate) fn forward(&self, values: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.inner.forward.process(&mut buf);
        buf
    }

    /// Inverse transform, normalised, real part only.
    pub(crate) fn inverse(&self, mut spec: Vec<Complex<T>>) -> Vec<T> {
        self.inner.inverse.process(&mut spec);
        let scale = T::one() / T::from_usize_lossy(self.inner.m);
        spec.into_iter().map(|z| z.re * scale).collect()
    }

    /// Zeroes every mode above the 2/3 cutoff, Nyquist included.
    pub(crate) fn dealias(&self, spec: &mut [Complex<T>]) {
        let cut = T::from_usize_lossy(self.dealias_cutoff());
        for (z, &k) in spec.iter_mut().zip(self.wavenumbers()) {
            if k.abs() > cut {
                *z = Complex::new(T::zero(), T::zero());
            }
        }
    }

    /// Multiplies a spectrum by `(2 pi i k)^order`; the Nyquist bin is
    /// dropped for odd orders.
    pub(crate) fn differentiate_spectrum(&self, spec: &mut [Complex<T>], order: u32) {
        let nyq = self.nyquist();
        for (j, (z, &k)) in spec.iter_mut().zip(self.wavenumbers()).enumerate() {
            if order % 2 == 1 && j == nyq {
                *z = Complex::new(T::zero(), T::zero());
                continue;
            }
            let ik = Complex::new(T::zero(), T::two_pi() * k);
            *z *= ik.powu(order);
        }
    }

    /// Multiplies a spectrum by `1 / (2 pi i k)` and annihilates `k = 0`
    /// and the Nyquist bin.
    pub(crate) fn integrate_spectrum(&self, spec: &mut [Complex<T>]) {
        let nyq = self.nyquist();
        for (j, (z, &k)) in spec.iter_mut().zip(self.wavenumbers()).enumerate() {
            if j == 0 || j == nyq {
                *z = Complex::new(T::zero(), T::zero());
            } else {
                *z /= Complex::new(T::zero(), T::two_pi() * k);
            }
        }
    }
}

/// Dimension parameter `n > 1` of the underlying Euler flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimension<T: Real = f64> {
    n: T,
}

impl<T: Real> Dimension<T> {
    pub fn new(n: T) -> Result<Self> {
        if !n.is_finite() || n <= T::one() {
            return Err(Error::DimensionUnsupported {
                n: n.as_f64(),
                reason: "need a finite n > 1",
            });
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn n(&self) -> T {
        self.n
    }

    /// Coefficient `n / (n - 1)` of the nonlocal term.
    #[inline]
    pub fn a(&self) -> T {
        self.n / (self.n - T::one())
    }

    /// Coefficient `(n - 3) / (n - 1)` of the `u_x u_xx` term.
    #[inline]
    pub fn b(&self) -> T {
        (self.n - c::<T>(3.0)) / (self.n - T::one())
    }

    pub fn is_integer(&self) -> bool {
        self.n.fract() == T::zero()
    }

    /// Exponent `p = (n - 1) / (n - 3)` of the conserved `L^p` norm of
    /// `u_xx`; `None` at `n = 3` (where the sup norm is conserved) and below.
    pub fn conserved_exponent(&self) -> Option<T> {
        if self.n > c(3.0) {
            Some((self.n - T::one()) / (self.n - c(3.0)))
        } else {
            None
        }
    }
}

/// Periodic real function sampled on a [`PeriodicGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T: Real = f64> {
    grid: PeriodicGrid<T>,
    values: Vec<T>,
}

impl<T: Real> Field<T> {
    /// Builds a field, rejecting wrong lengths and non-finite values.
    pub fn from_values(grid: &PeriodicGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Samples `f` at the grid nodes.
    pub fn sample(grid: &PeriodicGrid<T>, f: impl Fn(T) -> T) -> Result<Self> {
        Self::from_values(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn zeros(grid: &PeriodicGrid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: &PeriodicGrid<T>, v: T) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![v; grid.len()],
        }
    }

    /// Unchecked constructor for values produced by arithmetic on finite
    /// fields; callers that can overflow check [`Field::first_non_finite`].
    pub(crate) fn raw(grid: &PeriodicGrid<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    #[inline]
    pub fn grid(&self) -> &PeriodicGrid<T> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }

    pub fn sup_norm(&self) -> T {
        sup_norm(&self.values)
    }

    pub fn min(&self) -> T {
        crate::scalar::min_of(&self.values)
    }

    pub fn max(&self) -> T {
        crate::scalar::max_of(&self.values)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Self::raw(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Self, s: T) -> Self {
        self.zip_with(other, |a, b| a + s * b)
    }

    /// Trigonometric interpolant through the samples.
    pub fn interpolant(&self) -> SpectralInterpolant<T> {
        SpectralInterpolant::new(self)
    }
}

/// Trigonometric interpolant of a [`Field`]; exact for resolved
/// trigonometric polynomials, evaluable anywhere on the real line.
#[derive(Clone, Debug)]
pub struct SpectralInterpolant<T: Real = f64> {
    /// `(k, Re c_k, Im c_k)` for `0 <= k <= M/2`, already normalised.
    coeffs: Vec<(T, T, T)>,
    m: usize,
}

impl<T: Real> SpectralInterpolant<T> {
    fn new(f: &Field<T>) -> Self {
        let m = f.len();
        let spec = f.grid.forward(&f.values);
        let inv_m = T::one() / T::from_usize_lossy(m);
        let coeffs = (0..=m / 2)
            .map(|k| {
                let z = spec[k] * inv_m;
                (T::from_usize_lossy(k), z.re, z.im)
            })
            .collect();
        Self { coeffs, m }
    }

    /// Value of the `order`-th derivative at `x`.
    pub fn eval_derivative(&self, x: T, order: u32) -> T {
        let nyq = self.m / 2;
        let mut acc = T::zero();
        for (j, &(k, re, im)) in self.coeffs.iter().enumerate() {
            let omega = T::two_pi() * k;
            let theta = omega * x;
            // d^order/dx^order of exp(i theta) = (i omega)^order exp(i theta)
            let (s, co) = theta.sin_cos();
            let rot = Complex::new(T::zero(), omega).powu(order);
            let e = Complex::new(co, s) * rot;
            let term = Complex::new(re, im) * e;
            if j == 0 {
                acc += term.re;
            } else if j == nyq {
                // Nyquist mode interpolated as a cosine.
                let mag = re;
                let val = match order % 4 {
                    0 => co,
                    1 => -s,
                    2 => -co,
                    _ => s,
                };
                acc += mag * omega.powi(order as i32) * val;
            } else {
                acc += c::<T>(2.0) * term.re;
            }
        }
        acc
    }

    pub fn eval(&self, x: T) -> T {
        self.eval_derivative(x, 0)
    }
}

/// Grid average `(1/M) sum f_j`; spectrally accurate on periodic data.
pub fn mean<T: Real>(f: &Field<T>) -> T {
    let mut s = T::zero();
    for &v in f.values() {
        s += v;
    }
    s / T::from_usize_lossy(f.len())
}

/// Fourier-collocation derivative of order 1, 2 or 3.
pub fn deriv<T: Real>(f: &Field<T>, order: u32) -> Result<Field<T>> {
    if !(1..=3).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    Ok(deriv_unchecked(f, order))
}

pub(crate) fn deriv_unchecked<T: Real>(f: &Field<T>, order: u32) -> Field<T> {
    let grid = f.grid();
    let mut spec = grid.forward(f.values());
    grid.differentiate_spectrum(&mut spec, order);
    Field::raw(grid, grid.inverse(spec))
}

/// Mean-zero periodic antiderivative. Fails with [`Error::NonZeroMean`] when
/// `|mean f|` exceeds [`MEAN_TOLERANCE`].
pub fn inv_dx<T: Real>(f: &Field<T>) -> Result<Field<T>> {
    inv_dx_with_tolerance(f, c(MEAN_TOLERANCE))
}

pub fn inv_dx_with_tolerance<T: Real>(f: &Field<T>, tol: T) -> Result<Field<T>> {
    let m = mean(f);
    if m.abs() > tol {
        return Err(Error::NonZeroMean {
            mean: m.as_f64(),
            tol: tol.as_f64(),
        });
    }
    Ok(nonlocal(f))
}

/// `D^{-2} D f = D^{-1}(f - mean f)`: symbol `1/(2 pi i k)` off the zero mode.
pub fn nonlocal<T: Real>(f: &Field<T>) -> Field<T> {
    let grid = f.grid();
    let mut spec = grid.forward(f.values());
    grid.integrate_spectrum(&mut spec);
    Field::raw(grid, grid.inverse(spec))
}

/// Forcing `f(t) = -a * integral (u_x)^2`.
pub fn forcing_f<T: Real>(u: &Field<T>, dim: Dimension<T>) -> T {
    let ux = deriv_unchecked(u, 1);
    -dim.a() * mean(&ux.map(|v| v * v))
}

/// Right-hand side `u_t = a D^{-2}D((u_x)^2) - u u_x`, both quadratic
/// products dealiased with the 2/3 rule.
pub fn evolution_rhs<T: Real>(u: &Field<T>, dim: Dimension<T>) -> Field<T> {
    evolution_rhs_with_gradient(u, dim).0
}

/// [`evolution_rhs`] together with the collocation derivative `u_x` it used.
pub(crate) fn evolution_rhs_with_gradient<T: Real>(
    u: &Field<T>,
    dim: Dimension<T>,
) -> (Field<T>, Field<T>) {
    let grid = u.grid();
    let mut uhat = grid.forward(u.values());
    grid.differentiate_spectrum(&mut uhat, 1);
    let ux = grid.inverse(uhat);

    let sq: Vec<T> = ux.iter().map(|&g| g * g).collect();
    let adv: Vec<T> = u.values().iter().zip(&ux).map(|(&a, &g)| a * g).collect();
    let mut sq_hat = grid.forward(&sq);
    let mut adv_hat = grid.forward(&adv);
    grid.dealias(&mut sq_hat);
    grid.dealias(&mut adv_hat);
    grid.integrate_spectrum(&mut sq_hat);

    let a = dim.a();
    let rhs_hat: Vec<Complex<T>> = sq_hat
        .into_iter()
        .zip(adv_hat)
        .map(|(s, v)| s * a - v)
        .collect();
    (Field::raw(grid, grid.inverse(rhs_hat)), Field::raw(grid, ux))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn grid(m: usize) -> PeriodicGrid {
        PeriodicGrid::new(m).unwrap()
    }

    fn sin_k(g: &PeriodicGrid, k: f64) -> Field {
        Field::sample(g, |x| (2.0 * PI * k * x).sin()).unwrap()
    }

    fn max_diff(a: &Field, b: impl Fn(f64) -> f64) -> f64 {
        a.grid()
            .nodes()
            .iter()
            .zip(a.values())
            .map(|(&x, &v)| (v - b(x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn grid_rejects_odd_and_small_sizes() {
        assert_eq!(PeriodicGrid::<f64>::new(7).unwrap_err(), Error::InvalidGrid(7));
        assert_eq!(PeriodicGrid::<f64>::new(6).unwrap_err(), Error::InvalidGrid(6));
        assert!(PeriodicGrid::<f64>::new(8).is_ok());
        let g = grid(16);
        assert_eq!(g.spacing(), 1.0 / 16.0);
        let nodes = g.nodes();
        assert!(nodes.windows(2).all(|w| (w[1] - w[0] - 1.0 / 16.0).abs() < 1e-15));
    }

    #[test]
    fn field_rejects_bad_input() {
        let g = grid(8);
        assert!(matches!(
            Field::from_values(&g, vec![0.0; 7]),
            Err(Error::LengthMismatch { expected: 8, got: 7 })
        ));
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert_eq!(Field::from_values(&g, v).unwrap_err(), Error::NonFinite { index: 3 });
    }

    #[test]
    fn dimension_coefficients() {
        let d = Dimension::new(3.0).unwrap();
        assert_eq!(d.a(), 1.5);
        assert_eq!(d.b(), 0.0);
        assert!(d.conserved_exponent().is_none());
        assert_eq!(Dimension::new(5.0).unwrap().conserved_exponent(), Some(2.0));
        assert!(Dimension::new(1.0).is_err());
        assert!(Dimension::new(f64::NAN).is_err());
        assert!(!Dimension::new(2.5).unwrap().is_integer());
    }

    #[test]
    fn mean_examples() {
        let g = grid(64);
        assert_eq!(mean(&Field::constant(&g, 1.0)), 1.0);
        assert_abs_diff_eq!(mean(&sin_k(&g, 1.0)), 0.0, epsilon = 1e-14);
        let f = Field::sample(&g, |x| 2.0 + (2.0 * PI * x).cos()).unwrap();
        assert_abs_diff_eq!(mean(&f), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn deriv_examples() {
        let g = grid(64);
        let s = sin_k(&g, 1.0);
        let d1 = deriv(&s, 1).unwrap();
        assert!(max_diff(&d1, |x| 2.0 * PI * (2.0 * PI * x).cos()) < 1e-10);
        let d2 = deriv(&s, 2).unwrap();
        assert!(max_diff(&d2, |x| -4.0 * PI * PI * (2.0 * PI * x).sin()) < 1e-10);
        let d3 = deriv(&s, 3).unwrap();
        assert!(max_diff(&d3, |x| -8.0 * PI.powi(3) * (2.0 * PI * x).cos()) < 1e-8);
        assert!(deriv(&Field::constant(&g, 3.0), 1).unwrap().sup_norm() < 1e-13);
        assert_eq!(deriv(&s, 4).unwrap_err(), Error::UnsupportedOrder(4));
        assert_eq!(deriv(&s, 0).unwrap_err(), Error::UnsupportedOrder(0));
    }

    #[test]
    fn inv_dx_examples() {
        let g = grid(64);
        let c1 = Field::sample(&g, |x| (2.0 * PI * x).cos()).unwrap();
        let r = inv_dx(&c1).unwrap();
        assert!(max_diff(&r, |x| (2.0 * PI * x).sin() / (2.0 * PI)) < 1e-14);
        assert!(mean(&r).abs() < 1e-12);
        let r = inv_dx(&sin_k(&g, 1.0)).unwrap();
        assert!(max_diff(&r, |x| -(2.0 * PI * x).cos() / (2.0 * PI)) < 1e-14);
        assert!(matches!(
            inv_dx(&Field::constant(&g, 1.0)),
            Err(Error::NonZeroMean { .. })
        ));
    }

    /// Antiderivative by composite Simpson quadrature from a base point, then
    /// mean removal. Independent of the FFT path.
    fn quadrature_antiderivative(f: impl Fn(f64) -> f64, x0: f64, x: f64) -> f64 {
        let n = 2000;
        let h = (x - x0) / n as f64;
        let mut s = f(x0) + f(x);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(x0 + i as f64 * h);
        }
        s * h / 3.0
    }

    fn quadrature_nonlocal(f: impl Fn(f64) -> f64 + Copy, nodes: &[f64], x0: f64) -> Vec<f64> {
        let favg = quadrature_antiderivative(f, 0.0, 1.0);
        let g = move |y: f64| f(y) - favg;
        let raw: Vec<f64> = nodes.iter().map(|&x| quadrature_antiderivative(g, x0, x)).collect();
        let m = raw.iter().sum::<f64>() / raw.len() as f64;
        raw.into_iter().map(|v| v - m).collect()
    }

    #[test]
    fn nonlocal_matches_quadrature_oracle() {
        let g = grid(64);
        for (k, x0) in [(1.0, 0.0), (2.0, 0.37)] {
            let f = |x: f64| (2.0 * PI * k * x).cos() + 0.25;
            let field = Field::sample(&g, f).unwrap();
            let spectral = nonlocal(&field);
            let oracle = quadrature_nonlocal(f, &g.nodes(), x0);
            let err = spectral
                .values()
                .iter()
                .zip(&oracle)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "k={k}: {err}");
            // and the closed form sin(2 pi k x)/(2 pi k)
            assert!(max_diff(&spectral, |x| (2.0 * PI * k * x).sin() / (2.0 * PI * k)) < 1e-13);
        }
        assert!(nonlocal(&Field::constant(&g, 5.0)).sup_norm() < 1e-14);
    }

    #[test]
    fn forcing_examples() {
        let g = grid(64);
        let d3 = Dimension::new(3.0).unwrap();
        let d2 = Dimension::new(2.0).unwrap();
        assert_eq!(forcing_f(&Field::constant(&g, 2.0), d3).abs(), 0.0);
        let s = sin_k(&g, 1.0);
        // quadrature oracle: a * trapezoid of (2 pi cos)^2 on a fine grid
        let fine = 10_000;
        let integral: f64 = (0..fine)
            .map(|j| {
                let x = j as f64 / fine as f64;
                (2.0 * PI * (2.0 * PI * x).cos()).powi(2)
            })
            .sum::<f64>()
            / fine as f64;
        assert_abs_diff_eq!(forcing_f(&s, d3), -1.5 * integral, epsilon = 1e-10);
        assert_abs_diff_eq!(forcing_f(&s, d3), -3.0 * PI * PI, epsilon = 1e-10);
        assert_abs_diff_eq!(forcing_f(&s, d2), -4.0 * PI * PI, epsilon = 1e-10);
    }

    #[test]
    fn rhs_examples() {
        let g = grid(64);
        let d3 = Dimension::new(3.0).unwrap();
        assert!(evolution_rhs(&Field::constant(&g, 0.7), d3).sup_norm() < 1e-13);
        assert!(evolution_rhs(&Field::zeros(&g), d3).sup_norm() == 0.0);
        let r = evolution_rhs(&sin_k(&g, 1.0), d3);
        assert!(max_diff(&r, |x| -(PI / 4.0) * (4.0 * PI * x).sin()) < 1e-12);
    }

    #[test]
    fn sine_is_a_fixed_point_when_n_is_two() {
        // a = 2: a * nonlocal((u_x)^2) and u u_x are both pi A^2 sin(4 pi x)
        let g = grid(128);
        let d2 = Dimension::new(2.0).unwrap();
        let u = Field::sample(&g, |x| 2.0 * (2.0 * PI * x).sin()).unwrap();
        assert!(evolution_rhs(&u, d2).sup_norm() < 1e-11);
    }

    #[test]
    fn inverse_and_derivative_compose() {
        let g = grid(64);
        let f = Field::sample(&g, |x| (2.0 * PI * x).sin() + 0.3 * (6.0 * PI * x).cos() + 0.8).unwrap();
        let f0 = f.map(|v| v - 0.8);
        // D D^{-1} = id on mean-zero
        let back = deriv(&inv_dx(&f0).unwrap(), 1).unwrap();
        assert!(back.add_scaled(&f0, -1.0).sup_norm() < 1e-8);
        // D^{-1} D = id - mean
        let back = inv_dx(&deriv(&f, 1).unwrap()).unwrap();
        assert!(back.add_scaled(&f0, -1.0).sup_norm() < 1e-8);
        // commutator [D, D^{-1}] f = mean f, where D^{-1} is applied to the
        // raw (non mean-zero) integrand through the nonlocal operator plus the
        // linear part x * mean f
        let mf = mean(&f);
        let lhs = deriv(&nonlocal(&f), 1).unwrap().map(|v| v + mf);
        let rhs = nonlocal(&deriv(&f, 1).unwrap());
        let gap = lhs.add_scaled(&rhs, -1.0);
        for &v in gap.values() {
            assert!((v - mf).abs() < 1e-8);
        }
    }

    #[test]
    fn interpolant_is_exact_on_resolved_modes() {
        let g = grid(32);
        let f = Field::sample(&g, |x| 1.0 + (2.0 * PI * x).sin() - 0.5 * (6.0 * PI * x).cos()).unwrap();
        let it = f.interpolant();
        for &x in &[0.013, 0.377, 0.9, 1.25] {
            let exact = 1.0 + (2.0 * PI * x).sin() - 0.5 * (6.0 * PI * x).cos();
            assert_abs_diff_eq!(it.eval(x), exact, epsilon = 1e-12);
            let d1 = 2.0 * PI * (2.0 * PI * x).cos() + 0.5 * 6.0 * PI * (6.0 * PI * x).sin();
            assert_abs_diff_eq!(it.eval_derivative(x, 1), d1, epsilon = 1e-10);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let g = PeriodicGrid::<f32>::new(32).unwrap();
        let s = Field::sample(&g, |x| (std::f32::consts::TAU * x).sin()).unwrap();
        let d = deriv(&s, 1).unwrap();
        let err = g
            .nodes()
            .iter()
            .zip(d.values())
            .map(|(&x, &v)| (v - std::f32::consts::TAU * (std::f32::consts::TAU * x).cos()).abs())
            .fold(0.0f32, f32::max);
        assert!(err < 1e-4);
    }
}
