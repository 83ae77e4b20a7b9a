//! Initial data: named presets and inline Fourier coefficients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{Field, PeriodicGrid};
use crate::scalar::{c, Real};

fn half() -> f64 {
    0.5
}

fn one() -> usize {
    1
}

fn four() -> usize {
    4
}

/// Description of `u0` as it appears in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialProfile {
    Zero,
    /// `amplitude * sin(2 pi mode x) + offset`
    Sine {
        amplitude: f64,
        #[serde(default = "one")]
        mode: usize,
        #[serde(default)]
        offset: f64,
    },
    /// `amplitude * (sin(2 pi x) + ratio * cos(4 pi x))`
    TwoMode {
        amplitude: f64,
        #[serde(default = "half")]
        ratio: f64,
    },
    /// `amplitude * sum_{k <= kmax} (a_k cos + b_k sin)(2 pi k x) / k^2`
    /// with `a_k, b_k` uniform on `[-1, 1]` drawn from `seed`.
    RandomBandlimited {
        amplitude: f64,
        #[serde(default = "four")]
        kmax: usize,
        seed: u64,
    },
    /// `mean + sum_k cos[k-1] cos(2 pi k x) + sin[k-1] sin(2 pi k x)`
    Fourier {
        #[serde(default)]
        mean: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

impl InitialProfile {
    pub fn sine(amplitude: f64) -> Self {
        InitialProfile::Sine {
            amplitude,
            mode: 1,
            offset: 0.0,
        }
    }

    pub fn random(amplitude: f64, kmax: usize, seed: u64) -> Self {
        InitialProfile::RandomBandlimited { amplitude, kmax, seed }
    }

    /// The profile as explicit Fourier coefficients.
    pub fn coefficients(&self) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        Ok(match self {
            InitialProfile::Zero => (0.0, vec![], vec![]),
            InitialProfile::Sine { amplitude, mode, offset } => {
                if *mode == 0 {
                    return Err(Error::InvalidConfig("sine mode must be at least 1".into()));
                }
                let mut s = vec![0.0; *mode];
                s[mode - 1] = *amplitude;
                (*offset, vec![], s)
            }
            InitialProfile::TwoMode { amplitude, ratio } => (0.0, vec![0.0, amplitude * ratio], vec![*amplitude]),
            InitialProfile::RandomBandlimited { amplitude, kmax, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut cs = Vec::with_capacity(*kmax);
                let mut ss = Vec::with_capacity(*kmax);
                for k in 1..=*kmax {
                    let w = amplitude / (k * k) as f64;
                    cs.push(w * rng.gen_range(-1.0..=1.0));
                    ss.push(w * rng.gen_range(-1.0..=1.0));
                }
                (0.0, cs, ss)
            }
            InitialProfile::Fourier { mean, cos, sin } => (*mean, cos.clone(), sin.clone()),
        })
    }

    /// Highest wavenumber present.
    pub fn bandwidth(&self) -> Result<usize> {
        let (_, cs, ss) = self.coefficients()?;
        Ok(cs.len().max(ss.len()))
    }

    pub fn sample<T: Real>(&self, grid: &PeriodicGrid<T>) -> Result<Field<T>> {
        let (mean, cs, ss) = self.coefficients()?;
        if cs.iter().chain(&ss).chain([&mean]).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("profile coefficients must be finite".into()));
        }
        let band = cs.len().max(ss.len());
        if band > grid.dealias_cutoff() {
            return Err(Error::InvalidConfig(format!(
                "profile has modes up to {band}, above the resolved band {} of the grid",
                grid.dealias_cutoff()
            )));
        }
        Field::sample(grid, |x| {
            let x = x.as_f64();
            let mut v = mean;
            for (k, a) in cs.iter().enumerate() {
                v += a * (std::f64::consts::TAU * (k + 1) as f64 * x).cos();
            }
            for (k, b) in ss.iter().enumerate() {
                v += b * (std::f64::consts::TAU * (k + 1) as f64 * x).sin();
            }
            c(v)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn presets_sample_as_documented() {
        let g = PeriodicGrid::new(32).unwrap();
        let u: Field = InitialProfile::sine(0.5).sample(&g).unwrap();
        let e = Field::sample(&g, |x: f64| 0.5 * (2.0 * PI * x).sin()).unwrap();
        assert!(u.add_scaled(&e, -1.0).sup_norm() < 1e-15);
        let z: Field = InitialProfile::Zero.sample(&g).unwrap();
        assert_eq!(z.sup_norm(), 0.0);
        let t: Field = InitialProfile::TwoMode { amplitude: 2.0, ratio: 0.5 }.sample(&g).unwrap();
        let e = Field::sample(&g, |x: f64| 2.0 * (2.0 * PI * x).sin() + (4.0 * PI * x).cos()).unwrap();
        assert!(t.add_scaled(&e, -1.0).sup_norm() < 1e-14);
    }

    #[test]
    fn random_profiles_are_reproducible() {
        let g = PeriodicGrid::new(64).unwrap();
        let a: Field = InitialProfile::random(1.0, 4, 9).sample(&g).unwrap();
        let b: Field = InitialProfile::random(1.0, 4, 9).sample(&g).unwrap();
        let c: Field = InitialProfile::random(1.0, 4, 10).sample(&g).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn parses_from_json() {
        let p: InitialProfile = serde_json::from_str(r#"{"preset":"sine","amplitude":2.0}"#).unwrap();
        assert_eq!(p, InitialProfile::sine(2.0));
        let p: InitialProfile = serde_json::from_str(r#"{"preset":"random-bandlimited","amplitude":1,"seed":3}"#).unwrap();
        assert_eq!(p, InitialProfile::random(1.0, 4, 3));
        let p: InitialProfile = serde_json::from_str(r#"{"preset":"fourier","sin":[0,1]}"#).unwrap();
        assert_eq!(p.bandwidth().unwrap(), 2);
        assert!(serde_json::from_str::<InitialProfile>(r#"{"preset":"sine"}"#).is_err());
    }

    #[test]
    fn unresolved_modes_are_rejected() {
        let g = PeriodicGrid::<f64>::new(8).unwrap();
        let p = InitialProfile::Sine { amplitude: 1.0, mode: 3, offset: 0.0 };
        assert!(p.sample(&g).is_err());
    }
}
