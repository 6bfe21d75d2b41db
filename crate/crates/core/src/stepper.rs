//! Integrating-factor IMEX time stepping.
//!
//! The floor diffusion `nu_min Lap u`, `kappa_min Lap theta` is integrated
//! exactly per mode through `E = exp(-floor |K|^2 dt)`; the remainder of the
//! right-hand side is explicit.
//!
//! ```text
//! Euler: c+ = E (c + dt N)
//! BDF2:  c+ = 4/3 E c - 1/3 E^2 c- + 2/3 dt (2 E N - E^2 N-)
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientModel;
use crate::diagnostics::{self, DiagnosticsRecord};
use crate::dynamics::{effective_wavevector, project_in_place, rhs_with_stats, Forcing, MeshStats, State, Tendency};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "IMEX_EULER")]
    ImexEuler,
    #[serde(rename = "IMEX_BDF2")]
    ImexBdf2,
}

impl Scheme {
    /// Largest stable `max (nu(theta) - nu_min) / nu_min` (and likewise for
    /// `kappa`) for the frozen-coefficient model problem, at any `dt`.
    pub fn excess_ratio_limit(self) -> f64 {
        match self {
            Scheme::ImexEuler => EULER_EXCESS_LIMIT,
            Scheme::ImexBdf2 => BDF2_EXCESS_LIMIT,
        }
    }
}

/// Root of `rho = exp(1 + 1/rho)`: beyond it some mode of
/// `exp(-z) (1 - rho z)` exceeds 1 in modulus.
pub const EULER_EXCESS_LIMIT: f64 = 3.591;
/// Same bound for the two-step scheme, found by scanning the roots of its
/// characteristic polynomial over `z >= 0`.
pub const BDF2_EXCESS_LIMIT: f64 = 2.581;

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::ImexEuler => "IMEX_EULER",
            Scheme::ImexBdf2 => "IMEX_BDF2",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "IMEX_EULER" => Ok(Scheme::ImexEuler),
            "IMEX_BDF2" => Ok(Scheme::ImexBdf2),
            other => Err(Error::Config(format!(
                "unknown scheme `{other}` (expected IMEX_EULER or IMEX_BDF2)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub cfl_safety: f64,
    pub adaptive: bool,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt: 1e-3,
            t_end: 1.0,
            scheme: Scheme::ImexBdf2,
            cfl_safety: 0.5,
            adaptive: false,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Config(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        Ok(())
    }
}

/// A time-step change made by adaptive mode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DtChange {
    pub t: f64,
    pub from: f64,
    pub to: f64,
    pub reason: &'static str,
}

/// Recorded diagnostics of a run, plus optional state snapshots.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    pub checkpoints: Vec<State>,
    pub final_state: Option<State>,
    /// Set when the run stopped early; the records up to that point are kept.
    pub failure: Option<String>,
    /// Nominal time step of the run.
    pub dt: f64,
    pub steps: usize,
    pub dt_changes: Vec<DtChange>,
}

impl Trajectory {
    /// `(t, f(record))` pairs.
    pub fn series(&self, f: impl Fn(&DiagnosticsRecord) -> f64) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, f(r))).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
}

struct Factors {
    dt: f64,
    velocity: Vec<f64>,
    theta: Vec<f64>,
}

impl Factors {
    fn new(grid: &Grid, floors: (f64, f64), dt: f64) -> Self {
        let nyp = grid.nyp();
        let mut velocity = vec![0.0; grid.len()];
        let mut theta = vec![0.0; grid.len()];
        for slot in 0..grid.nx() {
            let k = grid.wavenumber(slot);
            for n in 0..nyp {
                let (kx, ky) = effective_wavevector(grid, k, n);
                let k2 = kx * kx + ky * ky;
                velocity[slot * nyp + n] = (-floors.0 * k2 * dt).exp();
                theta[slot * nyp + n] = (-floors.1 * k2 * dt).exp();
            }
        }
        Factors { dt, velocity, theta }
    }
}

struct History {
    state: State,
    tendency: Tendency,
    dt: f64,
}

type ForcingFn = Box<dyn Fn(f64) -> Result<Forcing>>;

/// Time integrator for one trajectory. Holds the two-step history, so a
/// fresh stepper (or [`Stepper::reset`]) restarts with an Euler step.
pub struct Stepper {
    model: CoefficientModel,
    cfg: StepperConfig,
    floors: (f64, f64),
    dt: f64,
    factors: Option<Factors>,
    history: Option<History>,
    forcing: Option<ForcingFn>,
    checkpoint_every: Option<usize>,
    dt_changes: Vec<DtChange>,
}

/// One step from `s` without history (the first step of any scheme).
pub fn step(s: &State, model: &CoefficientModel, cfg: &StepperConfig) -> Result<State> {
    Stepper::new(model.clone(), cfg.clone())?.step(s)
}

impl Stepper {
    pub fn new(model: CoefficientModel, cfg: StepperConfig) -> Result<Self> {
        cfg.validate()?;
        if !(model.nu_min > 0.0 && model.kappa_min > 0.0) {
            return Err(Error::Config("diffusion floors must be positive".into()));
        }
        Ok(Stepper {
            floors: (model.nu_min, model.kappa_min),
            dt: cfg.dt,
            model,
            cfg,
            factors: None,
            history: None,
            forcing: None,
            checkpoint_every: None,
            dt_changes: Vec::new(),
        })
    }

    /// Adds a time-dependent body force to every right-hand side evaluation.
    pub fn with_forcing(mut self, f: impl Fn(f64) -> Result<Forcing> + 'static) -> Self {
        self.forcing = Some(Box::new(f));
        self
    }

    /// Keeps a copy of the state every `every` steps in the trajectory.
    pub fn with_checkpoints(mut self, every: usize) -> Self {
        self.checkpoint_every = Some(every.max(1));
        self
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn model(&self) -> &CoefficientModel {
        &self.model
    }

    /// Current step size (differs from the configured one in adaptive mode).
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Forgets the two-step history.
    pub fn reset(&mut self) {
        self.history = None;
    }

    pub fn dt_changes(&self) -> &[DtChange] {
        &self.dt_changes
    }

    fn check_excess(&self, stats: &MeshStats) -> Result<()> {
        let limit = self.cfg.scheme.excess_ratio_limit();
        let ratios = [
            ("viscosity excess ratio", (stats.max_nu - self.floors.0) / self.floors.0),
            ("diffusivity excess ratio", (stats.max_kappa - self.floors.1) / self.floors.1),
        ];
        for (constraint, r) in ratios {
            if r > limit {
                return Err(Error::Cfl {
                    constraint,
                    dt: self.dt,
                    limit,
                });
            }
        }
        // values below the floor act as explicit anti-diffusion, stable while
        // they stay positive
        for (constraint, lo) in [
            ("viscosity floor", stats.min_nu),
            ("diffusivity floor", stats.min_kappa),
        ] {
            if lo <= 0.0 {
                return Err(Error::Cfl {
                    constraint,
                    dt: self.dt,
                    limit: 0.0,
                });
            }
        }
        Ok(())
    }

    fn advective_limit(&self, grid: &Grid, stats: &MeshStats) -> f64 {
        if stats.max_speed > 0.0 {
            self.cfg.cfl_safety * grid.min_spacing() / stats.max_speed
        } else {
            f64::INFINITY
        }
    }

    fn set_dt(&mut self, t: f64, to: f64, reason: &'static str) {
        if to != self.dt {
            self.dt_changes.push(DtChange {
                t,
                from: self.dt,
                to,
                reason,
            });
            self.dt = to;
            self.history = None;
        }
    }

    /// Picks the step size for a step starting at `t`, not exceeding `max_dt`.
    fn choose_dt(&mut self, grid: &Grid, t: f64, stats: &MeshStats, max_dt: f64) -> Result<f64> {
        self.check_excess(stats)?;
        let limit = self.advective_limit(grid, stats);
        if !self.cfg.adaptive {
            if self.dt > limit {
                return Err(Error::Cfl {
                    constraint: "advective",
                    dt: self.dt,
                    limit,
                });
            }
            return Ok(self.dt.min(max_dt));
        }
        let mut dt = self.dt;
        while dt > limit {
            dt *= 0.5;
        }
        if dt < self.dt {
            self.set_dt(t, dt, "advective limit");
        } else if dt < self.cfg.dt {
            let grown = (1.1 * dt).min(self.cfg.dt);
            if grown <= limit {
                self.set_dt(t, grown, "growth");
            }
        }
        if self.dt > max_dt * (1.0 + 1e-12) {
            // the final step lands on t_end; the history is not reused after it
            self.history = None;
            return Ok(max_dt);
        }
        Ok(self.dt)
    }

    fn factors(&mut self, grid: &Grid, dt: f64) -> &Factors {
        if self.factors.as_ref().map(|f| f.dt) != Some(dt) {
            self.factors = Some(Factors::new(grid, self.floors, dt));
        }
        self.factors.as_ref().expect("factors just set")
    }

    /// Advances `s` by one step of the current size.
    pub fn step(&mut self, s: &State) -> Result<State> {
        self.step_capped(s, f64::INFINITY)
    }

    fn step_capped(&mut self, s: &State, max_dt: f64) -> Result<State> {
        let grid = *s.grid();
        let forcing = self.forcing.as_ref().map(|f| f(s.t)).transpose()?;
        let (n, stats) = rhs_with_stats(s, &self.model, self.floors, forcing.as_ref())?;
        let dt = self.choose_dt(&grid, s.t, &stats, max_dt)?;
        let history = match (self.cfg.scheme, self.history.take()) {
            (Scheme::ImexBdf2, Some(h)) if h.dt == dt => Some(h),
            _ => None,
        };
        let f = self.factors(&grid, dt);
        let mut next = match &history {
            None => State {
                u1: euler(&s.u1, &n.du1, &f.velocity, dt),
                u2: euler(&s.u2, &n.du2, &f.velocity, dt),
                theta: euler(&s.theta, &n.dtheta, &f.theta, dt),
                t: s.t + dt,
            },
            Some(h) => State {
                u1: bdf2(&s.u1, &h.state.u1, &n.du1, &h.tendency.du1, &f.velocity, dt),
                u2: bdf2(&s.u2, &h.state.u2, &n.du2, &h.tendency.du2, &f.velocity, dt),
                theta: bdf2(&s.theta, &h.state.theta, &n.dtheta, &h.tendency.dtheta, &f.theta, dt),
                t: s.t + dt,
            },
        };
        project_in_place(&mut next.u1, &mut next.u2);
        next.u1.dealias();
        next.u2.dealias();
        next.theta.dealias();
        if !next.is_finite() {
            return Err(Error::NonFiniteTerm { term: "updated state" });
        }
        if dt == self.dt {
            self.history = Some(History {
                state: s.clone(),
                tendency: n,
                dt,
            });
        }
        Ok(next)
    }

    /// Steps from `s0` to `t_end`, recording diagnostics every
    /// `record_every` steps (and at the start). Adaptive runs also record
    /// the state reached at `t_end`.
    pub fn run(&mut self, s0: State, record_every: usize) -> Trajectory {
        self.run_observed(s0, record_every, |_, _| Ok(()))
    }

    /// As [`Stepper::run`], calling `observer` on every recorded state.
    pub fn run_observed(
        &mut self,
        s0: State,
        record_every: usize,
        mut observer: impl FnMut(&State, &DiagnosticsRecord) -> Result<()>,
    ) -> Trajectory {
        let mut traj = Trajectory {
            dt: self.cfg.dt,
            ..Trajectory::default()
        };
        let result = self.drive(s0, record_every, &mut traj, &mut observer);
        if let Err(e) = result {
            traj.failure = Some(e.to_string());
        }
        traj.dt_changes = self.dt_changes.clone();
        traj
    }

    fn drive(
        &mut self,
        s0: State,
        record_every: usize,
        traj: &mut Trajectory,
        observer: &mut impl FnMut(&State, &DiagnosticsRecord) -> Result<()>,
    ) -> Result<()> {
        if record_every == 0 {
            return Err(Error::Config("record_every must be positive".into()));
        }
        let t0 = s0.t;
        let t_end = self.cfg.t_end;
        let fixed_steps = if self.cfg.adaptive {
            None
        } else {
            let n = (t_end - t0) / self.cfg.dt;
            let rounded = n.round();
            if (n - rounded).abs() > 1e-6 || rounded < 0.0 {
                return Err(Error::Config(format!(
                    "t_end - t0 = {} is not a multiple of dt = {}",
                    t_end - t0,
                    self.cfg.dt
                )));
            }
            Some(rounded as usize)
        };

        let mut state = s0;
        let mut push = |traj: &mut Trajectory, s: &State, model: &CoefficientModel| -> Result<()> {
            let r = diagnostics::record(s, model)?;
            observer(s, &r)?;
            traj.records.push(r);
            Ok(())
        };
        push(traj, &state, &self.model)?;
        if self.checkpoint_every.is_some() {
            traj.checkpoints.push(state.clone());
        }
        let mut steps = 0usize;
        loop {
            let done = match fixed_steps {
                Some(n) => steps >= n,
                None => state.t >= t_end - 1e-12 * t_end.max(1.0),
            };
            if done {
                break;
            }
            let next = match fixed_steps {
                Some(_) => self.step(&state).map(|mut s| {
                    // exact multiples of dt avoid drift in the recorded times
                    s.t = t0 + (steps + 1) as f64 * self.cfg.dt;
                    s
                }),
                None => self.step_capped(&state, t_end - state.t),
            };
            let next = match next {
                Ok(s) => s,
                Err(e) => {
                    traj.final_state = Some(state);
                    return Err(e);
                }
            };
            state = next;
            steps += 1;
            traj.steps = steps;
            if steps % record_every == 0 {
                if let Err(e) = push(traj, &state, &self.model) {
                    traj.final_state = Some(state);
                    return Err(e);
                }
            }
            if let Some(every) = self.checkpoint_every {
                if steps % every == 0 {
                    traj.checkpoints.push(state.clone());
                }
            }
        }
        if fixed_steps.is_none() && steps % record_every != 0 {
            if let Err(e) = push(traj, &state, &self.model) {
                traj.final_state = Some(state);
                return Err(e);
            }
        }
        traj.final_state = Some(state);
        Ok(())
    }
}

fn euler(c: &SpectralField, n: &SpectralField, e: &[f64], dt: f64) -> SpectralField {
    let mut out = c.clone();
    for ((o, nv), &ev) in out.coeffs_mut().iter_mut().zip(n.coeffs()).zip(e) {
        *o = (*o + nv * dt) * ev;
    }
    out
}

fn bdf2(c: &SpectralField, c_prev: &SpectralField, n: &SpectralField, n_prev: &SpectralField, e: &[f64], dt: f64) -> SpectralField {
    let mut out = c.clone();
    let coeffs = out.coeffs_mut();
    for i in 0..coeffs.len() {
        let e1 = e[i];
        let e2 = e1 * e1;
        coeffs[i] = (c.coeffs()[i] * (4.0 * e1) - c_prev.coeffs()[i] * e2) / 3.0
            + (n.coeffs()[i] * (2.0 * e1) - n_prev.coeffs()[i] * e2) * (2.0 * dt / 3.0);
    }
    out
}
