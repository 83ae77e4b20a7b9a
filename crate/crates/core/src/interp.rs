//! Periodic shape-preserving cubic Hermite interpolation with
//! Fritsch–Carlson slope limiting.

use crate::error::{Error, Result};
use crate::scalar::{c, Real};

/// Piecewise cubic through `(x_j, y_j)` extended by `y(x + 1) = y(x) + drift`.
///
/// Slopes are the weighted harmonic mean of neighbouring secants and vanish
/// at local extrema, so monotone data give a monotone interpolant.
#[derive(Debug, Clone)]
pub struct PeriodicPchip<T: Real = f64> {
    // one period plus the wrapped first node
    xs: Vec<T>,
    ys: Vec<T>,
    slopes: Vec<T>,
    drift: T,
}

impl<T: Real> PeriodicPchip<T> {
    /// `xs` must be strictly increasing with `xs[last] < xs[0] + 1`.
    pub fn new(xs: &[T], ys: &[T], drift: T) -> Result<Self> {
        let m = xs.len();
        if m < 2 || ys.len() != m {
            return Err(Error::LengthMismatch {
                expected: m.max(2),
                got: ys.len(),
            });
        }
        let monotone = xs.windows(2).all(|w| w[1] > w[0]) && xs[m - 1] < xs[0] + T::one();
        if !monotone || xs.iter().chain(ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "interpolation nodes must be finite and strictly increasing within one period".into(),
            ));
        }
        let mut x = xs.to_vec();
        let mut y = ys.to_vec();
        x.push(xs[0] + T::one());
        y.push(ys[0] + drift);

        // secant on interval j is between nodes j and j + 1, indices mod m
        let h: Vec<T> = (0..m).map(|j| x[j + 1] - x[j]).collect();
        let d: Vec<T> = (0..m).map(|j| (y[j + 1] - y[j]) / h[j]).collect();
        let mut slopes: Vec<T> = (0..m)
            .map(|j| {
                let jm = (j + m - 1) % m;
                let (h0, h1, d0, d1) = (h[jm], h[j], d[jm], d[j]);
                if d0 * d1 <= T::zero() {
                    T::zero()
                } else {
                    let three = c::<T>(3.0);
                    let two = c::<T>(2.0);
                    three * (h0 + h1) / ((two * h1 + h0) / d0 + (h1 + two * h0) / d1)
                }
            })
            .collect();
        slopes.push(slopes[0]);
        Ok(Self {
            xs: x,
            ys: y,
            slopes,
            drift,
        })
    }

    pub fn eval(&self, x: T) -> T {
        let x0 = self.xs[0];
        let mut shift = (x - x0).floor();
        let mut xr = x - shift;
        // rounding can leave xr on the far end of the period
        if xr >= x0 + T::one() {
            xr -= T::one();
            shift += T::one();
        }
        let m = self.xs.len() - 1;
        let j = (self.xs.partition_point(|&v| v <= xr).max(1) - 1).min(m - 1);
        let h = self.xs[j + 1] - self.xs[j];
        let s = (xr - self.xs[j]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let two = c::<T>(2.0);
        let three = c::<T>(3.0);
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = three * s2 - two * s3;
        let h11 = s3 - s2;
        let y = h00 * self.ys[j] + h10 * h * self.slopes[j] + h01 * self.ys[j + 1] + h11 * h * self.slopes[j + 1];
        y + shift * self.drift
    }
}
