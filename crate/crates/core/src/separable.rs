//! Separable solutions `u = X(x) T(t)`: the Riccati time factor and the
//! integral identity that rules out nonzero separation constants for `n > 3`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{deriv_unchecked, mean, Dimension, Field};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct SeparableConfig<T: Real = f64> {
    pub lambda: T,
    pub t0: T,
    pub x: Field<T>,
    pub dim: Dimension<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RiccatiValue<T: Real = f64> {
    Finite { value: T },
    BlowUpAt { t_star: T },
}

impl<T: Real> RiccatiValue<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            RiccatiValue::Finite { value } => Some(value),
            RiccatiValue::BlowUpAt { .. } => None,
        }
    }
}

/// `1/(lambda T0)` when the factor blows up forward in time.
pub fn riccati_blowup_time<T: Real>(lambda: T, t0: T) -> Option<T> {
    let k = lambda * t0;
    (k > T::zero()).then(|| k.recip())
}

/// `T(t) = T0 / (1 - lambda T0 t)`, the solution of `T' = lambda T^2`.
pub fn riccati_t<T: Real>(lambda: T, t0: T, t: T) -> RiccatiValue<T> {
    if let Some(t_star) = riccati_blowup_time(lambda, t0) {
        if t >= t_star {
            return RiccatiValue::BlowUpAt { t_star };
        }
    }
    RiccatiValue::Finite {
        value: t0 / (T::one() - lambda * t0 * t),
    }
}

/// `r = (n-1)/(n-3)`, the exponent of the conserved `L^r` norm of `X''`.
fn exponent<T: Real>(dim: Dimension<T>) -> Result<T> {
    dim.conserved_exponent().ok_or(Error::DimensionUnsupported {
        n: dim.n().as_f64(),
        reason: "the identity needs n > 3",
    })
}

/// `int (X' h + X h')` with `h = |X''|^r`, i.e. the integral of the exact
/// derivative `(X h)'`. The collocation derivative is skew-adjoint on the
/// grid, so the discrete value vanishes up to rounding for every profile.
pub fn exact_derivative_identity<T: Real>(x: &Field<T>, dim: Dimension<T>) -> Result<T> {
    let r = exponent(dim)?;
    let dx = deriv_unchecked(x, 1);
    let h = deriv_unchecked(x, 2).map(|v| v.abs().powf(r));
    let dh = deriv_unchecked(&h, 1);
    let a = mean(&dx.zip_with(&h, |d, h| d * h));
    let b = mean(&x.zip_with(&dh, |x, d| x * d));
    Ok(a + b)
}

/// Pointwise residual `lambda X'' + ((n-3)/(n-1)) X' X'' + X X'''`.
pub fn separable_residual<T: Real>(cfg: &SeparableConfig<T>) -> Field<T> {
    let x = &cfg.x;
    let d1 = deriv_unchecked(x, 1);
    let d2 = deriv_unchecked(x, 2);
    let d3 = deriv_unchecked(x, 3);
    let b = cfg.dim.b();
    let lam = cfg.lambda;
    Field::raw(
        x.grid(),
        (0..x.len())
            .map(|j| {
                lam * d2.values()[j] + b * d1.values()[j] * d2.values()[j] + x.values()[j] * d3.values()[j]
            })
            .collect(),
    )
}

/// Separation constant read back from a residual: testing the residual
/// against `|X''|^{r-2} X''` and dividing by `int |X''|^r`. The profile
/// terms integrate to zero, so this returns the `lambda` the residual was
/// built with, and a vanishing residual forces `lambda = 0`.
pub fn implied_lambda<T: Real>(x: &Field<T>, residual: &Field<T>, dim: Dimension<T>) -> Result<Option<T>> {
    let r = exponent(dim)?;
    let d2 = deriv_unchecked(x, 2);
    let denom = mean(&d2.map(|v| v.abs().powf(r)));
    if !(denom > T::zero()) {
        return Ok(None);
    }
    let weight = d2.map(|v| v.signum() * v.abs().powf(r - T::one()));
    Ok(Some(mean(&residual.zip_with(&weight, |a, w| a * w)) / denom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::PeriodicGrid;
    use std::f64::consts::PI;

    #[test]
    fn riccati_examples() {
        assert_eq!(riccati_blowup_time(1.0, 1.0), Some(1.0));
        assert_eq!(riccati_t(1.0, 1.0, 0.5).finite(), Some(2.0));
        assert_eq!(riccati_t(1.0, 1.0, 1.0), RiccatiValue::BlowUpAt { t_star: 1.0 });
        assert_eq!(riccati_t(0.0, 3.0, 100.0).finite(), Some(3.0));
        assert_eq!(riccati_t(-1.0, 1.0, 3.0).finite(), Some(0.25));
        assert_eq!(riccati_blowup_time(-1.0, 1.0), None);
        // negative data with positive lambda decays forward in time
        assert_eq!(riccati_blowup_time(1.0, -1.0), None);
    }

    #[test]
    fn riccati_satisfies_its_ode() {
        let h = 1e-5;
        for &(lam, t0) in &[(1.0, 1.0), (-1.0, 1.0), (0.3, -2.0), (2.0, 0.1)] {
            for &t in &[0.0, 0.3, 0.9] {
                let f = |s: f64| riccati_t(lam, t0, s).finite().unwrap();
                let d = (f(t + h) - f(t - h)) / (2.0 * h);
                let v = f(t);
                assert!((d - lam * v * v).abs() <= 1e-6 * (lam * v * v).abs().max(1e-12));
            }
        }
    }

    #[test]
    fn residual_of_sine() {
        let g = PeriodicGrid::new(64).unwrap();
        let x = Field::sample(&g, |x: f64| (2.0 * PI * x).sin()).unwrap();
        let cfg = SeparableConfig {
            lambda: 0.0,
            t0: 1.0,
            x,
            dim: Dimension::new(3.0).unwrap(),
        };
        let res = separable_residual(&cfg);
        let expected = Field::sample(&g, |x: f64| -4.0 * PI.powi(3) * (4.0 * PI * x).sin()).unwrap();
        assert!(res.add_scaled(&expected, -1.0).sup_norm() < 1e-9);

        let flat = SeparableConfig { x: Field::constant(&g, 2.0), lambda: 1.5, ..cfg.clone() };
        assert!(separable_residual(&flat).sup_norm() < 1e-12);
        let zero = SeparableConfig { x: Field::zeros(&g), ..cfg };
        assert_eq!(separable_residual(&zero).sup_norm(), 0.0);
    }

    #[test]
    fn identity_examples() {
        let g = PeriodicGrid::new(128).unwrap();
        let x = Field::sample(&g, |x: f64| (2.0 * PI * x).sin()).unwrap();
        let d5 = Dimension::new(5.0).unwrap();
        assert!(exact_derivative_identity(&x, d5).unwrap().abs() < 1e-8);
        assert_eq!(exact_derivative_identity(&Field::zeros(&g), d5).unwrap(), 0.0);
        assert!(matches!(
            exact_derivative_identity(&x, Dimension::new(3.0).unwrap()),
            Err(Error::DimensionUnsupported { .. })
        ));
    }

    #[test]
    fn implied_lambda_recovers_the_constant() {
        let g = PeriodicGrid::new(256).unwrap();
        let x = Field::sample(&g, |x: f64| 0.2 * (2.0 * PI * x).sin() + 0.05 * (6.0 * PI * x).cos()).unwrap();
        for n in [4.0, 5.0, 7.0] {
            let dim = Dimension::new(n).unwrap();
            for lam in [0.0, 0.7, -2.0] {
                let cfg = SeparableConfig { lambda: lam, t0: 1.0, x: x.clone(), dim };
                let got = implied_lambda(&x, &separable_residual(&cfg), dim).unwrap().unwrap();
                assert!((got - lam).abs() < 1e-6, "n = {n}, lambda = {lam}: {got}");
            }
        }
        assert_eq!(implied_lambda(&Field::zeros(&g), &Field::zeros(&g), Dimension::new(5.0).unwrap()).unwrap(), None);
    }
}
