//! Conserved and bounded quantities of the reduced equation, sampled as
//! time series, plus drift summaries.
//!
//! For `n > 3` the `L^p` norm of `u_xx` with `p = (n-1)/(n-3)` is an exact
//! invariant; for `n = 3` the sup norm of `u_xx` is. Both imply a-priori
//! bounds on `||u||_{C^1}` in terms of the initial data, which
//! [`InitialBounds`] evaluates once so every record can be checked against
//! them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{deriv_unchecked, evolution_rhs, forcing_f, mean, Dimension, Field};
use crate::scalar::{c, Real};

/// One row of diagnostics at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRecord<T: Real = f64> {
    pub t: T,
    pub mean_u: T,
    pub min_dxu: T,
    pub max_dxu: T,
    /// `||u||_inf + ||u_x||_inf`
    pub c1_norm_u: T,
    /// `||u_xx||_p` for `n > 3`; the sup norm otherwise.
    pub uxx_norm: T,
    pub f_value: T,
    /// `||u_t||_inf` with `u_t` from the evolution right-hand side.
    pub dt_u_sup: T,
}

impl<T: Real> DiagnosticsRecord<T> {
    pub const CSV_HEADER: [&'static str; 8] = [
        "t",
        "mean_u",
        "min_dxu",
        "max_dxu",
        "c1_norm_u",
        "uxx_norm",
        "f_value",
        "dt_u_sup",
    ];

    pub fn compute(t: T, u: &Field<T>, dim: Dimension<T>) -> Self {
        let ux = deriv_unchecked(u, 1);
        let uxx = deriv_unchecked(u, 2);
        let ut = evolution_rhs(u, dim);
        let uxx_norm = match dim.conserved_exponent() {
            Some(p) => lp_norm(&uxx, p),
            None => uxx.sup_norm(),
        };
        Self {
            t,
            mean_u: mean(u),
            min_dxu: ux.min(),
            max_dxu: ux.max(),
            c1_norm_u: u.sup_norm() + ux.sup_norm(),
            uxx_norm,
            f_value: forcing_f(u, dim),
            dt_u_sup: ut.sup_norm(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    pub fn as_array(&self) -> [T; 8] {
        [
            self.t,
            self.mean_u,
            self.min_dxu,
            self.max_dxu,
            self.c1_norm_u,
            self.uxx_norm,
            self.f_value,
            self.dt_u_sup,
        ]
    }
}

/// `(mean |f|^p)^(1/p)`.
pub fn lp_norm<T: Real>(f: &Field<T>, p: T) -> T {
    mean(&f.map(|v| v.abs().powf(p))).powf(T::one() / p)
}

/// Conserved norm of `u_xx`: sup norm at `n = 3`, `L^p` with
/// `p = (n-1)/(n-3)` above. Unsupported below `n = 3`.
pub fn uxx_norm<T: Real>(u: &Field<T>, dim: Dimension<T>) -> Result<T> {
    if dim.n() < c(3.0) {
        return Err(Error::DimensionUnsupported {
            n: dim.n().as_f64(),
            reason: "no conserved norm of u_xx below n = 3",
        });
    }
    let uxx = deriv_unchecked(u, 2);
    Ok(match dim.conserved_exponent() {
        Some(p) => lp_norm(&uxx, p),
        None => uxx.sup_norm(),
    })
}

/// `||u||_inf + ||u_x||_inf`.
pub fn c1_norm<T: Real>(u: &Field<T>) -> T {
    u.sup_norm() + deriv_unchecked(u, 1).sup_norm()
}

/// `||u||_inf + ||u_x||_inf + ||u_xx||_inf`.
pub fn c2_norm<T: Real>(u: &Field<T>) -> T {
    c1_norm(u) + deriv_unchecked(u, 2).sup_norm()
}

/// `integral |u_xx|^p`.
pub fn uxx_power_integral<T: Real>(u: &Field<T>, p: T) -> T {
    mean(&deriv_unchecked(u, 2).map(|v| v.abs().powf(p)))
}

/// `integral u_x |u_xx|^p`, the production term in the balance law
/// `d/dt integral |u_xx|^p + (p b - 1) integral u_x |u_xx|^p = 0`.
pub fn uxx_power_production<T: Real>(u: &Field<T>, p: T) -> T {
    let ux = deriv_unchecked(u, 1);
    let uxx = deriv_unchecked(u, 2);
    mean(&ux.zip_with(&uxx, |g, h| g * h.abs().powf(p)))
}

/// Coefficient `p b - 1` of the production term; zero exactly at the
/// conserved exponent.
pub fn balance_coefficient<T: Real>(p: T, dim: Dimension<T>) -> T {
    p * dim.b() - T::one()
}

/// A-priori bounds evaluated from the initial datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialBounds<T: Real = f64> {
    pub n: T,
    pub mean_u: T,
    pub uxx_norm: T,
    /// Bound on `||u(t)||_{C^1}`; `None` when no bound holds (`n < 3`).
    pub c1_bound: Option<T>,
    /// Bound on `||u_t(t)||_inf` derived from `c1_bound`.
    pub dt_u_bound: Option<T>,
}

impl<T: Real> InitialBounds<T> {
    pub fn from_initial(u0: &Field<T>, dim: Dimension<T>) -> Self {
        let c1 = c1_bound(u0, dim);
        let uxx = deriv_unchecked(u0, 2);
        Self {
            n: dim.n(),
            mean_u: mean(u0),
            uxx_norm: match dim.conserved_exponent() {
                Some(p) => lp_norm(&uxx, p),
                None => uxx.sup_norm(),
            },
            c1_bound: c1,
            dt_u_bound: c1.map(|b| (T::one() + c::<T>(2.0) * dim.a()) * b * b),
        }
    }
}

/// `||u0||_{C^2}` for `n = 3`, `||u0||_{C^1} + ||u0''||_p` for `n > 3`.
pub fn c1_bound<T: Real>(u0: &Field<T>, dim: Dimension<T>) -> Option<T> {
    if dim.n() == c(3.0) {
        Some(c2_norm(u0))
    } else {
        dim.conserved_exponent()
            .map(|p| c1_norm(u0) + lp_norm(&deriv_unchecked(u0, 2), p))
    }
}

/// Outcome of checking a run against an a-priori bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BoundCheck<T: Real = f64> {
    Satisfied { bound: T, max_value: T },
    Violated { bound: T, max_value: T, first_t: T },
    NotApplicable { reason: String },
}

impl<T: Real> BoundCheck<T> {
    pub fn is_violated(&self) -> bool {
        matches!(self, Self::Violated { .. })
    }
}

/// Drift statistics over a diagnostics series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport<T: Real = f64> {
    pub samples: usize,
    pub mean_abs_drift: T,
    /// `None` when the initial mean is zero.
    pub mean_rel_drift: Option<T>,
    pub uxx_abs_drift: T,
    pub uxx_rel_drift: Option<T>,
    pub max_c1_norm: T,
    pub max_dt_u_sup: T,
    pub c1_bound: BoundCheck<T>,
    pub dt_u_bound: BoundCheck<T>,
}

fn relative<T: Real>(abs: T, reference: T) -> Option<T> {
    if reference.abs() > T::epsilon() {
        Some(abs / reference.abs())
    } else {
        None
    }
}

fn check_bound<T: Real>(
    records: &[DiagnosticsRecord<T>],
    bound: Option<T>,
    slack: T,
    value: impl Fn(&DiagnosticsRecord<T>) -> T,
    n: T,
) -> BoundCheck<T> {
    let Some(bound) = bound else {
        return BoundCheck::NotApplicable {
            reason: format!("not applicable (n={n})"),
        };
    };
    let max_value = records.iter().map(&value).fold(T::zero(), T::max);
    match records.iter().find(|r| value(r) > bound + slack) {
        Some(r) => BoundCheck::Violated {
            bound,
            max_value,
            first_t: r.t,
        },
        None => BoundCheck::Satisfied { bound, max_value },
    }
}

/// Summarises a non-empty diagnostics series. The reference values are the
/// first record; `slack` is the additive tolerance applied to the bounds.
pub fn drift_report<T: Real>(
    records: &[DiagnosticsRecord<T>],
    bounds: &InitialBounds<T>,
    slack: T,
) -> Option<DriftReport<T>> {
    let first = records.first()?;
    let mean_abs_drift = records
        .iter()
        .map(|r| (r.mean_u - first.mean_u).abs())
        .fold(T::zero(), T::max);
    let uxx_abs_drift = records
        .iter()
        .map(|r| (r.uxx_norm - first.uxx_norm).abs())
        .fold(T::zero(), T::max);
    Some(DriftReport {
        samples: records.len(),
        mean_abs_drift,
        mean_rel_drift: relative(mean_abs_drift, first.mean_u),
        uxx_abs_drift,
        uxx_rel_drift: relative(uxx_abs_drift, first.uxx_norm),
        max_c1_norm: records.iter().map(|r| r.c1_norm_u).fold(T::zero(), T::max),
        max_dt_u_sup: records.iter().map(|r| r.dt_u_sup).fold(T::zero(), T::max),
        c1_bound: check_bound(records, bounds.c1_bound, slack, |r| r.c1_norm_u, bounds.n),
        dt_u_bound: check_bound(records, bounds.dt_u_bound, slack, |r| r.dt_u_sup, bounds.n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::PeriodicGrid;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn sine(m: usize, amp: f64) -> Field {
        let g = PeriodicGrid::new(m).unwrap();
        Field::sample(&g, |x: f64| amp * (2.0 * PI * x).sin()).unwrap()
    }

    #[test]
    fn uxx_norm_examples() {
        let u = sine(64, 1.0);
        let d3 = Dimension::<f64>::new(3.0).unwrap();
        let d5 = Dimension::<f64>::new(5.0).unwrap();
        // sup of |4 pi^2 sin| on the grid: attained at x = 1/4, a node
        assert_abs_diff_eq!(uxx_norm(&u, d3).unwrap(), 4.0 * PI * PI, epsilon = 1e-9);
        // L2 of 4 pi^2 sin = 4 pi^2 / sqrt 2
        assert_abs_diff_eq!(uxx_norm(&u, d5).unwrap(), 2.0 * 2f64.sqrt() * PI * PI, epsilon = 1e-9);
        let d2 = Dimension::<f64>::new(2.0).unwrap();
        assert!(matches!(uxx_norm(&u, d2), Err(Error::DimensionUnsupported { .. })));
    }

    #[test]
    fn record_of_constant_state() {
        let g = PeriodicGrid::new(32).unwrap();
        let u = Field::constant(&g, 0.4);
        let r = DiagnosticsRecord::<f64>::compute(1.0, &u, Dimension::<f64>::new(3.0).unwrap());
        assert!(r.is_finite());
        assert_abs_diff_eq!(r.mean_u, 0.4, epsilon = 1e-15);
        assert!(r.max_dxu.abs() < 1e-12 && r.min_dxu.abs() < 1e-12);
        assert!(r.f_value <= 0.0);
        assert!(r.dt_u_sup < 1e-12);
    }

    #[test]
    fn forcing_is_never_positive() {
        for amp in [0.0, 0.1, 1.0, 3.0] {
            let r = DiagnosticsRecord::<f64>::compute(0.0, &sine(32, amp), Dimension::<f64>::new(2.5).unwrap());
            assert!(r.f_value <= 0.0);
        }
    }

    #[test]
    fn bounds_by_dimension() {
        let u = sine(64, 0.5);
        let b3 = InitialBounds::from_initial(&u, Dimension::<f64>::new(3.0).unwrap());
        assert_abs_diff_eq!(b3.c1_bound.unwrap(), 0.5 + PI + 2.0 * PI * PI, epsilon = 1e-9);
        let b5 = InitialBounds::from_initial(&u, Dimension::<f64>::new(5.0).unwrap());
        assert_abs_diff_eq!(
            b5.c1_bound.unwrap(),
            0.5 + PI + 2.0 * PI * PI / 2f64.sqrt(),
            epsilon = 1e-9
        );
        let b2 = InitialBounds::from_initial(&u, Dimension::<f64>::new(2.0).unwrap());
        assert!(b2.c1_bound.is_none() && b2.dt_u_bound.is_none());
    }

    #[test]
    fn drift_of_constant_series_is_zero() {
        let g = PeriodicGrid::new(16).unwrap();
        let u = Field::constant(&g, 1.0);
        let d = Dimension::<f64>::new(3.0).unwrap();
        let recs: Vec<_> = (0..5).map(|i| DiagnosticsRecord::<f64>::compute(i as f64, &u, d)).collect();
        let rep = drift_report(&recs, &InitialBounds::from_initial(&u, d), 1e-3).unwrap();
        assert_eq!(rep.mean_abs_drift, 0.0);
        assert_eq!(rep.mean_rel_drift, Some(0.0));
        assert_eq!(rep.uxx_abs_drift, 0.0);
        assert!(matches!(rep.c1_bound, BoundCheck::Satisfied { .. }));
        assert!(drift_report::<f64>(&[], &InitialBounds::from_initial(&u, d), 0.0).is_none());
    }

    #[test]
    fn two_dimensional_bound_is_not_applicable() {
        let u = sine(16, 1.0);
        let d = Dimension::<f64>::new(2.0).unwrap();
        let recs = vec![DiagnosticsRecord::<f64>::compute(0.0, &u, d)];
        let rep = drift_report(&recs, &InitialBounds::from_initial(&u, d), 0.0).unwrap();
        match rep.c1_bound {
            BoundCheck::NotApplicable { reason } => assert_eq!(reason, "not applicable (n=2)"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn violation_is_flagged_with_time() {
        let u = sine(16, 1.0);
        let d = Dimension::<f64>::new(3.0).unwrap();
        let mut recs = vec![DiagnosticsRecord::<f64>::compute(0.0, &u, d)];
        let mut bad = recs[0];
        bad.t = 2.0;
        bad.c1_norm_u = 1e9;
        recs.push(bad);
        let rep = drift_report(&recs, &InitialBounds::from_initial(&u, d), 1e-3).unwrap();
        assert!(matches!(rep.c1_bound, BoundCheck::Violated { first_t, .. } if first_t == 2.0));
    }

    #[test]
    fn balance_coefficient_vanishes_at_conserved_exponent() {
        for n in [4.0, 5.0, 7.0, 10.0] {
            let d = Dimension::<f64>::new(n).unwrap();
            let p = d.conserved_exponent().unwrap();
            assert_abs_diff_eq!(balance_coefficient(p, d), 0.0, epsilon = 1e-14);
            assert!(balance_coefficient(p + 1.0, d).abs() > 0.1);
        }
    }
}
