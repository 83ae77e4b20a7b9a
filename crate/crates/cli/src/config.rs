//! Run configuration: a JSON file merged with command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stagflow::lagrangian::ForcingRoute;
use stagflow::{Dimension, InitialProfile, SimConfig, StepControl, TwoPhaseInit, TwoPhaseState};

use crate::failure::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Lagrangian,
    Twophase,
    Separable,
    LiftCheck,
    Convergence,
    Sweep,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Simulate => "simulate",
            Command::Lagrangian => "lagrangian",
            Command::Twophase => "twophase",
            Command::Separable => "separable",
            Command::LiftCheck => "lift-check",
            Command::Convergence => "convergence",
            Command::Sweep => "sweep",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    #[default]
    LabelSpace,
    GridInterpolation,
}

impl From<Route> for ForcingRoute {
    fn from(r: Route) -> Self {
        match r {
            Route::LabelSpace => ForcingRoute::LabelSpace,
            Route::GridInterpolation => ForcingRoute::GridInterpolation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoPhaseParams {
    pub p: f64,
    pub q: f64,
    pub phi: f64,
    pub psi: f64,
}

impl Default for TwoPhaseParams {
    fn default() -> Self {
        Self {
            p: 1.0,
            q: -1.0,
            phi: 0.2,
            psi: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeparableParams {
    pub lambda: f64,
    pub t0: f64,
}

impl Default for SeparableParams {
    fn default() -> Self {
        Self { lambda: 1.0, t0: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiftParams {
    pub points: usize,
    pub seed: u64,
    /// Two-phase points closer than this to an interface are skipped.
    pub interface_margin: f64,
}

impl Default for LiftParams {
    fn default() -> Self {
        Self {
            points: 100,
            seed: 2024,
            interface_margin: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceParams {
    pub grids: Vec<usize>,
    pub reference: usize,
    pub dts: Vec<f64>,
}

impl Default for ConvergenceParams {
    fn default() -> Self {
        Self {
            grids: vec![32, 64, 128],
            reference: 256,
            dts: vec![0.004, 0.002, 0.001],
        }
    }
}

/// Sweep axes. A missing axis holds the base value; an empty list gives an
/// empty table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    pub n: Option<Vec<f64>>,
    pub amplitude: Option<Vec<f64>>,
    #[serde(rename = "M")]
    pub m: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub n: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub dt: f64,
    #[serde(rename = "T_end", alias = "T")]
    pub t_end: f64,
    pub u0: InitialProfile,
    pub out: PathBuf,
    pub record_every: usize,
    pub blowup_threshold: f64,
    /// Zero keeps the step fixed; otherwise the step may be halved this often.
    pub max_halvings: u32,
    pub route: Route,
    pub plots: bool,
    pub twophase: TwoPhaseParams,
    pub separable: SeparableParams,
    pub lift: LiftParams,
    pub convergence: ConvergenceParams,
    pub sweep: SweepAxes,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            n: 3.0,
            m: 256,
            dt: 1e-3,
            t_end: 1.0,
            u0: InitialProfile::sine(0.5),
            out: PathBuf::from("out"),
            record_every: 10,
            blowup_threshold: 1e6,
            max_halvings: 0,
            route: Route::LabelSpace,
            plots: true,
            twophase: TwoPhaseParams::default(),
            separable: SeparableParams::default(),
            lift: LiftParams::default(),
            convergence: ConvergenceParams::default(),
            sweep: SweepAxes::default(),
        }
    }
}

/// Values given on the command line; they win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n: Option<f64>,
    pub m: Option<usize>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub out: Option<PathBuf>,
    pub no_plots: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    }

    /// Loads the file (or the defaults), applies overrides and checks that
    /// the command named in the file, if any, matches.
    pub fn resolve(command: Command, path: Option<&Path>, ov: &Overrides) -> Result<Self, Failure> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(c) = cfg.command {
            if c != command {
                return Err(Failure::Config(format!(
                    "config is for `{c}` but `{command}` was requested"
                )));
            }
        }
        cfg.command = Some(command);
        if let Some(n) = ov.n {
            cfg.n = n;
        }
        if let Some(m) = ov.m {
            cfg.m = m;
        }
        if let Some(dt) = ov.dt {
            cfg.dt = dt;
        }
        if let Some(t) = ov.t_end {
            cfg.t_end = t;
        }
        if let Some(out) = &ov.out {
            cfg.out = out.clone();
        }
        if ov.no_plots {
            cfg.plots = false;
        }
        Ok(cfg)
    }

    pub fn dimension(&self) -> Result<Dimension, Failure> {
        Ok(Dimension::new(self.n)?)
    }

    pub fn sim_config(&self) -> Result<SimConfig, Failure> {
        let mut sc = SimConfig::new(self.dimension()?, self.m, self.dt, self.t_end)
            .with_record_every(self.record_every)
            .with_blowup_threshold(self.blowup_threshold);
        if self.max_halvings > 0 {
            sc = sc.with_step_control(StepControl::Halving {
                max_halvings: self.max_halvings,
            });
        }
        sc.validate()?;
        Ok(sc)
    }

    pub fn twophase_state(&self) -> Result<TwoPhaseState, Failure> {
        let tp = &self.twophase;
        Ok(TwoPhaseState::new(
            TwoPhaseInit::new(tp.p, tp.q, tp.phi, tp.psi),
            self.dimension()?,
        )?)
    }

    /// Everything that can be checked before a run starts.
    pub fn validate(&self, command: Command) -> Result<(), Failure> {
        let sc = self.sim_config()?;
        match command {
            Command::Twophase => {
                self.twophase_state()?;
            }
            Command::Separable => {
                let s = &self.separable;
                if !(s.lambda.is_finite() && s.t0.is_finite()) {
                    return Err(Failure::Config("lambda and t0 must be finite".into()));
                }
            }
            Command::LiftCheck => {
                if self.lift.points == 0 {
                    return Err(Failure::Config("lift.points must be at least 1".into()));
                }
                if !(self.lift.interface_margin >= 0.0 && self.lift.interface_margin < 0.25) {
                    return Err(Failure::Config("lift.interface_margin must lie in [0, 0.25)".into()));
                }
                stagflow::lift::random_points::<f64>(1, self.dimension()?, 0)?;
                self.twophase_state()?;
            }
            Command::Convergence => {
                let c = &self.convergence;
                if c.grids.is_empty() || c.dts.len() < 2 {
                    return Err(Failure::Config(
                        "convergence needs at least one grid and two step sizes".into(),
                    ));
                }
                if c.dts.iter().any(|dt| !(*dt > 0.0 && dt.is_finite())) {
                    return Err(Failure::Config("step sizes must be positive".into()));
                }
                for &m in c.grids.iter().chain([&c.reference]) {
                    SimConfig { m, ..sc.clone() }.validate()?;
                    self.u0.sample::<f64>(&stagflow::PeriodicGrid::new(m)?)?;
                }
                if c.grids.windows(2).any(|w| w[0] >= w[1]) || c.grids.iter().any(|&m| m >= c.reference) {
                    return Err(Failure::Config(
                        "grids must increase strictly and stay below the reference".into(),
                    ));
                }
            }
            Command::Sweep => {
                crate::sweep::worker_limit()?;
                return Ok(());
            }
            Command::Simulate | Command::Lagrangian => {}
        }
        self.u0.sample::<f64>(&sc.grid()?)?;
        Ok(())
    }
}

/// The profile with its overall amplitude replaced.
pub fn with_amplitude(u0: &InitialProfile, a: f64) -> Result<InitialProfile, String> {
    Ok(match u0.clone() {
        InitialProfile::Sine { mode, offset, .. } => InitialProfile::Sine {
            amplitude: a,
            mode,
            offset,
        },
        InitialProfile::TwoMode { ratio, .. } => InitialProfile::TwoMode { amplitude: a, ratio },
        InitialProfile::RandomBandlimited { kmax, seed, .. } => InitialProfile::RandomBandlimited {
            amplitude: a,
            kmax,
            seed,
        },
        other => return Err(format!("the amplitude axis needs a preset with an amplitude, got {other:?}")),
    })
}
