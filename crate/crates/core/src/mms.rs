//! Manufactured solution for verifying the time stepper and the spatial
//! discretization.
//!
//! With `g(t) = exp(-t)`:
//!
//! ```text
//! psi   = A g sin(2 pi x) sin(pi y),   u = (psi_y, -psi_x)
//! theta = B g sin(pi y)
//! ```
//!
//! The forcing is evaluated analytically on the mesh; gradient parts of the
//! momentum forcing are omitted since the projection removes them. The
//! exact fields are band-limited on purpose: with the floor diffusion
//! integrated exactly per mode, a forced mode whose decay rate is far above
//! `1 / dt` is not tracked accurately, so a manufactured solution with a
//! broad spectrum would hide the scheme's order behind that error.

use std::f64::consts::PI;

use serde::Serialize;

use crate::coefficients::CoefficientModel;
use crate::dynamics::{leray_project, Forcing, State};
use crate::error::{Error, Result};
use crate::field::{RealField, SpectralField};
use crate::grid::{Grid, Parity};
use crate::stepper::{Scheme, Stepper, StepperConfig};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManufacturedSolution {
    pub model: CoefficientModel,
    pub amp_u: f64,
    pub amp_theta: f64,
}

impl Default for ManufacturedSolution {
    fn default() -> Self {
        ManufacturedSolution {
            model: CoefficientModel::bounded_rational(1.0, 0.5, 1.0, 0.5).expect("valid preset"),
            amp_u: 0.1,
            amp_theta: 0.5,
        }
    }
}

/// Exact fields and the derivatives the forcing needs, at one point.
#[derive(Clone, Copy, Debug)]
struct Point {
    u1: f64,
    u2: f64,
    theta: f64,
    u1x: f64,
    u1y: f64,
    u2x: f64,
    u2y: f64,
    thx: f64,
    thy: f64,
    lap_u1: f64,
    lap_u2: f64,
    lap_th: f64,
}

impl ManufacturedSolution {
    fn point(&self, x: f64, y: f64, t: f64) -> Point {
        let g = (-t).exp();
        let a = self.amp_u * g;
        let b = self.amp_theta * g;
        let (sx, cx) = (2.0 * PI * x).sin_cos();
        let (sy, cy) = (PI * y).sin_cos();
        let pi2 = PI * PI;
        let u1 = a * PI * sx * cy;
        let u2 = -2.0 * a * PI * cx * sy;
        let theta = b * sy;
        Point {
            u1,
            u2,
            theta,
            u1x: 2.0 * a * pi2 * cx * cy,
            u1y: -a * pi2 * sx * sy,
            u2x: 4.0 * a * pi2 * sx * sy,
            u2y: -2.0 * a * pi2 * cx * cy,
            thx: 0.0,
            thy: b * PI * cy,
            lap_u1: -5.0 * pi2 * u1,
            lap_u2: -5.0 * pi2 * u2,
            lap_th: -pi2 * theta,
        }
    }

    fn sample(&self, grid: Grid, t: f64, f: impl Fn(&Point) -> f64, parity: Parity) -> Result<SpectralField> {
        let field = RealField::from_fn(grid, |x, y| f(&self.point(x, y, t)));
        Ok(field.to_spectral(parity)?.dealiased())
    }

    /// Exact solution at time `t`, projected onto the discrete
    /// divergence-free space.
    pub fn exact_state(&self, grid: Grid, t: f64) -> Result<State> {
        let u1 = self.sample(grid, t, |p| p.u1, Parity::Cosine)?;
        let u2 = self.sample(grid, t, |p| p.u2, Parity::Sine)?;
        let theta = self.sample(grid, t, |p| p.theta, Parity::Sine)?;
        let (u1, u2) = leray_project(&u1, &u2)?;
        State::new(u1, u2, theta, t)
    }

    /// Body forces that make the exact fields solve the system.
    pub fn forcing(&self, grid: Grid, t: f64) -> Result<Forcing> {
        let m = &self.model;
        let f1 = self.sample(
            grid,
            t,
            |p| {
                let nu = m.nu(p.theta);
                let dnu = m.nu_prime(p.theta);
                let diffusion = nu * p.lap_u1 + dnu * (p.thx * p.u1x + p.thy * p.u1y);
                -p.u1 - diffusion + p.u1 * p.u1x + p.u2 * p.u1y
            },
            Parity::Cosine,
        )?;
        let f2 = self.sample(
            grid,
            t,
            |p| {
                let nu = m.nu(p.theta);
                let dnu = m.nu_prime(p.theta);
                let diffusion = nu * p.lap_u2 + dnu * (p.thx * p.u2x + p.thy * p.u2y);
                -p.u2 - diffusion + p.u1 * p.u2x + p.u2 * p.u2y - p.theta
            },
            Parity::Sine,
        )?;
        let ftheta = self.sample(
            grid,
            t,
            |p| {
                let kappa = m.kappa(p.theta);
                let dkappa = m.kappa_prime(p.theta);
                let diffusion = kappa * p.lap_th + dkappa * (p.thx * p.thx + p.thy * p.thy);
                -p.theta - diffusion + p.u1 * p.thx + p.u2 * p.thy - p.u2 + dkappa * p.thy
            },
            Parity::Sine,
        )?;
        Ok(Forcing { f1, f2, ftheta })
    }

    /// `sqrt(||u - u*||^2 + ||theta - theta*||^2)` at the state's time.
    pub fn error(&self, s: &State) -> Result<f64> {
        let exact = self.exact_state(*s.grid(), s.t)?;
        let e = (&s.u1 - &exact.u1).weighted_energy(0)
            + (&s.u2 - &exact.u2).weighted_energy(0)
            + (&s.theta - &exact.theta).weighted_energy(0);
        Ok(e.sqrt())
    }

    /// `||u*(t)||^2 = 5 pi^2 A^2 exp(-2t) / 4`.
    pub fn exact_kinetic_energy(&self, t: f64) -> f64 {
        1.25 * PI * PI * self.amp_u * self.amp_u * (-2.0 * t).exp()
    }

    /// Largest error of the centered difference `1/2 d/dt ||u||^2` over the
    /// recorded interior points, against the exact rate `-||u*||^2`. This is
    /// the quantity the energy-inequality tolerance has to absorb.
    pub fn energy_rate_error(&self, run: &MmsRun) -> f64 {
        run.trajectory
            .records
            .windows(3)
            .map(|w| {
                let h = w[2].t - w[0].t;
                let rate = 0.5 * (w[2].norm_u_l2.powi(2) - w[0].norm_u_l2.powi(2)) / h;
                (rate + self.exact_kinetic_energy(w[1].t)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Energy-rate error constant `max err / dt^2` for records every
    /// `record_every` steps of size `dt` on a 32 x 16 grid up to `t = 1`.
    pub fn energy_constant(&self, dt: f64, record_every: usize) -> Result<f64> {
        let run = self.solve(Grid::new(32, 16)?, dt, 1.0, Scheme::ImexBdf2, record_every)?;
        Ok(self.energy_rate_error(&run) / (dt * dt))
    }

    /// `||N(u*) + F - d/dt u*||` at time `t`: the spatial consistency error
    /// of the discrete right-hand side, free of time-stepping error.
    pub fn spatial_residual(&self, grid: Grid, t: f64) -> Result<f64> {
        let s = self.exact_state(grid, t)?;
        let f = self.forcing(grid, t)?;
        let n = crate::dynamics::rhs_split(&s, &self.model, (0.0, 0.0), Some(&f))?;
        let r = (&n.du1 + &s.u1).weighted_energy(0)
            + (&n.du2 + &s.u2).weighted_energy(0)
            + (&n.dtheta + &s.theta).weighted_energy(0);
        Ok(r.sqrt())
    }

    /// Integrates from the exact initial state to `t_end` and returns the
    /// final error together with the trajectory.
    pub fn solve(&self, grid: Grid, dt: f64, t_end: f64, scheme: Scheme, record_every: usize) -> Result<MmsRun> {
        let cfg = StepperConfig {
            dt,
            t_end,
            scheme,
            cfl_safety: 1.0,
            adaptive: false,
        };
        let me = self.clone();
        let mut stepper = Stepper::new(self.model.clone(), cfg)?.with_forcing(move |t| me.forcing(grid, t));
        let traj = stepper.run(self.exact_state(grid, 0.0)?, record_every);
        if let Some(f) = &traj.failure {
            return Err(Error::InvalidArgument(format!("manufactured run failed: {f}")));
        }
        let last = traj.final_state.as_ref().expect("completed run has a final state");
        Ok(MmsRun {
            nx: grid.nx(),
            ny: grid.ny(),
            dt,
            error: self.error(last)?,
            trajectory: traj,
        })
    }
}

pub struct MmsRun {
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    pub error: f64,
    pub trajectory: crate::stepper::Trajectory,
}

/// Settings of the convergence study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MmsStudy {
    pub t_end: f64,
    pub temporal_grid: (usize, usize),
    pub temporal_dts: Vec<f64>,
    pub spatial_dt: f64,
    pub spatial_nx: Vec<usize>,
    pub min_order: f64,
    pub min_spatial_drop: f64,
}

impl Default for MmsStudy {
    fn default() -> Self {
        MmsStudy {
            t_end: 1.0,
            temporal_grid: (128, 64),
            temporal_dts: vec![4e-3, 2e-3, 1e-3],
            spatial_dt: 1e-3,
            spatial_nx: vec![32, 64, 128],
            min_order: 1.8,
            min_spatial_drop: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MmsReport {
    pub scheme: Scheme,
    /// `(dt, error)` on the temporal grid.
    pub temporal: Vec<(f64, f64)>,
    /// Observed order between consecutive step sizes.
    pub orders: Vec<f64>,
    /// `(nx, error)` at the spatial step size, `ny = nx / 2`.
    pub spatial: Vec<(usize, f64)>,
    /// Error ratio between consecutive grids.
    pub spatial_drops: Vec<f64>,
    /// Consistency residual of the right-hand side at `t = 0` per grid.
    pub spatial_residuals: Vec<f64>,
    pub temporal_pass: bool,
    pub spatial_pass: bool,
}

impl MmsReport {
    pub fn passed(&self) -> bool {
        self.temporal_pass && self.spatial_pass
    }

    /// Plain-text error table.
    pub fn table(&self) -> String {
        let mut out = format!("scheme {}\n      dt          error     order\n", self.scheme);
        for (i, (dt, e)) in self.temporal.iter().enumerate() {
            let order = if i == 0 { String::from("-") } else { format!("{:.3}", self.orders[i - 1]) };
            out += &format!("{dt:>9.1e}  {e:>12.4e}  {order:>8}\n");
        }
        out += "     nx          error      drop     residual\n";
        for (i, (nx, e)) in self.spatial.iter().enumerate() {
            let drop = if i == 0 { String::from("-") } else { format!("{:.3e}", self.spatial_drops[i - 1]) };
            let res = self.spatial_residuals[i];
            out += &format!("{nx:>7}  {e:>14.4e}  {drop:>9}  {res:>11.4e}\n");
        }
        out
    }
}

impl ManufacturedSolution {
    /// Temporal order under step halving and spatial error drop under grid
    /// doubling. A spatial pair also passes once the coarse error is within
    /// a factor `min_spatial_drop` of the finest one, i.e. at the temporal floor.
    pub fn convergence(&self, study: &MmsStudy, scheme: Scheme) -> Result<MmsReport> {
        let (nx, ny) = study.temporal_grid;
        let grid = Grid::new(nx, ny)?;
        let mut temporal = Vec::new();
        for &dt in &study.temporal_dts {
            let run = self.solve(grid, dt, study.t_end, scheme, usize::MAX)?;
            temporal.push((dt, run.error));
        }
        let orders: Vec<f64> = temporal
            .windows(2)
            .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
            .collect();
        let mut spatial = Vec::new();
        let mut spatial_residuals = Vec::new();
        for &n in &study.spatial_nx {
            let grid = Grid::new(n, n / 2)?;
            let run = self.solve(grid, study.spatial_dt, study.t_end, scheme, usize::MAX)?;
            spatial.push((n, run.error));
            spatial_residuals.push(self.spatial_residual(grid, 0.0)?);
        }
        let floor = spatial.last().map(|s| s.1).unwrap_or(0.0);
        let spatial_drops: Vec<f64> = spatial.windows(2).map(|w| w[0].1 / w[1].1).collect();
        let spatial_pass = spatial
            .windows(2)
            .all(|w| w[0].1 / w[1].1 >= study.min_spatial_drop || w[0].1 <= study.min_spatial_drop * floor);
        Ok(MmsReport {
            scheme,
            temporal_pass: orders.iter().all(|&o| o >= study.min_order),
            orders,
            spatial,
            spatial_drops,
            spatial_residuals,
            spatial_pass,
            temporal,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::ENERGY_TOL_C;
    use crate::dynamics::rhs;

    #[test]
    fn exact_velocity_is_solenoidal() {
        let m = ManufacturedSolution::default();
        for &(x, y) in &[(0.1, 0.2), (0.7, 0.9), (0.33, 0.5)] {
            let p = m.point(x, y, 0.3);
            assert!((p.u1x + p.u2y).abs() < 1e-14);
        }
        let s = m.exact_state(Grid::new(64, 32).unwrap(), 0.0).unwrap();
        assert!(s.mean_u1().abs() < 1e-15);
    }

    #[test]
    fn residual_of_exact_solution_is_the_time_derivative() {
        let m = ManufacturedSolution::default();
        let coarse = m.spatial_residual(Grid::new(16, 8).unwrap(), 0.4).unwrap();
        let fine = m.spatial_residual(Grid::new(64, 32).unwrap(), 0.4).unwrap();
        assert!(fine <= 1e-10, "{fine}");
        assert!(coarse > fine);
        // without the forcing the residual is order one
        let s = m.exact_state(Grid::new(64, 32).unwrap(), 0.4).unwrap();
        let plain = rhs(&s, &m.model).unwrap();
        assert!((&plain.dtheta + &s.theta).weighted_energy(0).sqrt() > 1e-3);
    }

    #[test]
    fn frozen_energy_constant_matches_calibration() {
        let m = ManufacturedSolution::default();
        let c = m.energy_constant(1e-3, 10).unwrap();
        assert!(c <= ENERGY_TOL_C && c >= 0.9 * ENERGY_TOL_C, "measured {c}");
    }

    #[test]
    fn zero_amplitude_gives_zero_error() {
        let m = ManufacturedSolution {
            amp_u: 0.0,
            amp_theta: 0.0,
            ..Default::default()
        };
        let run = m.solve(Grid::new(16, 8).unwrap(), 1e-2, 0.1, Scheme::ImexBdf2, 5).unwrap();
        assert_eq!(run.error, 0.0);
    }

    #[test]
    fn short_study_shows_second_order() {
        let m = ManufacturedSolution::default();
        let study = MmsStudy {
            t_end: 0.2,
            temporal_grid: (16, 8),
            temporal_dts: vec![4e-3, 2e-3, 1e-3],
            spatial_dt: 1e-3,
            spatial_nx: vec![8, 16],
            min_order: 1.8,
            min_spatial_drop: 10.0,
        };
        let r = m.convergence(&study, Scheme::ImexBdf2).unwrap();
        assert!(r.temporal_pass, "{}", r.table());
        let e = m.convergence(&study, Scheme::ImexEuler).unwrap();
        for o in &e.orders {
            assert!((o - 1.0).abs() < 0.2, "{}", e.table());
        }
    }
}

