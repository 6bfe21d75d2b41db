//! Norms, dissipation rates and decay fits of a state or a trajectory.

use serde::Serialize;

use crate::coefficients::{kirchhoff_hat, CoefficientModel};
use crate::dynamics::{recover_pressure, State};
use crate::error::{Error, Result};
use crate::field::{RealField, SpectralField};
use crate::grid::Parity;
use crate::stepper::Trajectory;

/// One row of diagnostics. Field order is the CSV column order.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub norm_u_l2: f64,
    pub norm_theta_l2: f64,
    pub norm_theta_l4: f64,
    pub norm_theta_linf: f64,
    pub norm_grad_u: f64,
    pub norm_grad_theta: f64,
    pub norm_lap_u: f64,
    pub norm_lap_theta: f64,
    pub norm_h3_u: f64,
    pub norm_h3_theta: f64,
    pub norm_grad_hat_theta: f64,
    pub overshoot_plus_2: f64,
    pub overshoot_minus_2: f64,
    pub overshoot_plus_4: f64,
    pub overshoot_minus_4: f64,
    pub dissipation_u: f64,
    pub dissipation_theta: f64,
    pub norm_pressure_l2: f64,
    pub mean_u1: f64,
    pub div_residual: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 21] = [
        "t",
        "norm_u_l2",
        "norm_theta_l2",
        "norm_theta_l4",
        "norm_theta_linf",
        "norm_grad_u",
        "norm_grad_theta",
        "norm_lap_u",
        "norm_lap_theta",
        "norm_h3_u",
        "norm_h3_theta",
        "norm_grad_hat_theta",
        "overshoot_plus_2",
        "overshoot_minus_2",
        "overshoot_plus_4",
        "overshoot_minus_4",
        "dissipation_u",
        "dissipation_theta",
        "norm_pressure_l2",
        "mean_u1",
        "div_residual",
    ];

    pub fn values(&self) -> [f64; 21] {
        [
            self.t,
            self.norm_u_l2,
            self.norm_theta_l2,
            self.norm_theta_l4,
            self.norm_theta_linf,
            self.norm_grad_u,
            self.norm_grad_theta,
            self.norm_lap_u,
            self.norm_lap_theta,
            self.norm_h3_u,
            self.norm_h3_theta,
            self.norm_grad_hat_theta,
            self.overshoot_plus_2,
            self.overshoot_minus_2,
            self.overshoot_plus_4,
            self.overshoot_minus_4,
            self.dissipation_u,
            self.dissipation_theta,
            self.norm_pressure_l2,
            self.mean_u1,
            self.div_residual,
        ]
    }

    pub fn from_values(v: [f64; 21]) -> Self {
        DiagnosticsRecord {
            t: v[0],
            norm_u_l2: v[1],
            norm_theta_l2: v[2],
            norm_theta_l4: v[3],
            norm_theta_linf: v[4],
            norm_grad_u: v[5],
            norm_grad_theta: v[6],
            norm_lap_u: v[7],
            norm_lap_theta: v[8],
            norm_h3_u: v[9],
            norm_h3_theta: v[10],
            norm_grad_hat_theta: v[11],
            overshoot_plus_2: v[12],
            overshoot_minus_2: v[13],
            overshoot_plus_4: v[14],
            overshoot_minus_4: v[15],
            dissipation_u: v[16],
            dissipation_theta: v[17],
            norm_pressure_l2: v[18],
            mean_u1: v[19],
            div_residual: v[20],
        }
    }

    /// `||(theta - 1)_+||_2 + ||(theta + 1)_-||_2`.
    pub fn overshoot_2(&self) -> f64 {
        self.overshoot_plus_2 + self.overshoot_minus_2
    }

    pub fn overshoot_4(&self) -> f64 {
        self.overshoot_plus_4 + self.overshoot_minus_4
    }

    /// `max(0, ||theta||_inf - 1)` on the mesh.
    pub fn mesh_overshoot(&self) -> f64 {
        (self.norm_theta_linf - 1.0).max(0.0)
    }

    /// `||u||_{H^2} + ||theta||_{H^2}` in the Laplacian seminorm.
    pub fn h2_size(&self) -> f64 {
        self.norm_lap_u + self.norm_lap_theta
    }
}

fn vector_norm(a: &SpectralField, b: &SpectralField, s: u32) -> f64 {
    (a.weighted_energy(s) + b.weighted_energy(s)).sqrt()
}

/// `int w(theta) |grad f|^2` over the listed components, by mesh quadrature.
fn dissipation(theta: &RealField, comps: &[&SpectralField], w: impl Fn(f64) -> f64) -> f64 {
    let g = *theta.grid();
    let weights: Vec<f64> = theta.values().iter().map(|&t| w(t)).collect();
    let mut total = 0.0;
    for c in comps {
        let dx = c.ddx().to_physical_unchecked();
        let dy = c.ddy().to_physical_unchecked();
        for (idx, wt) in weights.iter().enumerate() {
            let grad2 = dx.values()[idx].powi(2) + dy.values()[idx].powi(2);
            total += g.weight(idx % g.nyp()) * wt * grad2;
        }
    }
    total
}

/// Evaluates every diagnostic of `s`.
pub fn record(s: &State, model: &CoefficientModel) -> Result<DiagnosticsRecord> {
    let theta = s.theta.to_physical()?;
    let plus = theta.map(|t| (t - 1.0).max(0.0));
    let minus = theta.map(|t| (-(t + 1.0)).max(0.0));
    let hat = kirchhoff_hat(&theta, model).to_spectral(Parity::Sine)?;
    let pressure = recover_pressure(s, model)?;
    Ok(DiagnosticsRecord {
        t: s.t,
        norm_u_l2: s.velocity_norm(),
        norm_theta_l2: theta.norm_lp(2.0)?,
        norm_theta_l4: theta.norm_lp(4.0)?,
        norm_theta_linf: theta.max_abs(),
        norm_grad_u: vector_norm(&s.u1, &s.u2, 1),
        norm_grad_theta: s.theta.weighted_energy(1).sqrt(),
        norm_lap_u: vector_norm(&s.u1, &s.u2, 2),
        norm_lap_theta: s.theta.weighted_energy(2).sqrt(),
        norm_h3_u: vector_norm(&s.u1, &s.u2, 3),
        norm_h3_theta: s.theta.weighted_energy(3).sqrt(),
        norm_grad_hat_theta: hat.weighted_energy(1).sqrt(),
        overshoot_plus_2: plus.norm_lp(2.0)?,
        overshoot_minus_2: minus.norm_lp(2.0)?,
        overshoot_plus_4: plus.norm_lp(4.0)?,
        overshoot_minus_4: minus.norm_lp(4.0)?,
        dissipation_u: dissipation(&theta, &[&s.u1, &s.u2], |t| model.nu(t)),
        dissipation_theta: dissipation(&theta, &[&s.theta], |t| model.kappa(t)),
        norm_pressure_l2: pressure.norm(),
        mean_u1: s.mean_u1().abs(),
        div_residual: s.divergence_residual(),
    })
}

/// Values below this are treated as fully decayed when fitting rates.
pub const DECAY_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum DecayFit {
    /// `value ~ exp(-lambda t)`.
    Rate {
        lambda: f64,
        r_squared: f64,
        samples: usize,
    },
    /// Every sample in the window sits at or below [`DECAY_FLOOR`].
    FullyDecayed,
}

impl DecayFit {
    pub fn lambda(&self) -> Option<f64> {
        match self {
            DecayFit::Rate { lambda, .. } => Some(*lambda),
            DecayFit::FullyDecayed => None,
        }
    }
}

/// Least-squares slope of `ln value` against `t` over `window`.
pub fn fit_decay_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let in_window: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= window.0 && t <= window.1)
        .collect();
    let pts: Vec<(f64, f64)> = in_window
        .iter()
        .filter(|&&(_, v)| v > DECAY_FLOOR)
        .map(|&(t, v)| (t, v.ln()))
        .collect();
    if pts.is_empty() && !in_window.is_empty() {
        return Ok(DecayFit::FullyDecayed);
    }
    if pts.len() < 10 {
        return Err(Error::InvalidArgument(format!(
            "decay fit needs at least 10 samples above {DECAY_FLOOR} in [{}, {}], found {}",
            window.0,
            window.1,
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let stl: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    let sll: f64 = pts.iter().map(|p| (p.1 - ml).powi(2)).sum();
    let slope = stl / stt;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - ml - slope * (p.0 - mt)).powi(2))
        .sum();
    let r_squared = if sll > 0.0 { 1.0 - ss_res / sll } else { 1.0 };
    Ok(DecayFit::Rate {
        lambda: -slope,
        r_squared,
        samples: pts.len(),
    })
}

/// Below this gap between the two floors the envelope uses its limit form.
pub const DEGENERATE_FLOOR_GAP: f64 = 1e-10;

/// Upper bound for `||u(t)||` from the energy estimate, given the initial
/// velocity norm and the initial `L2` overshoot of the temperature.
pub fn l2_envelope(model: &CoefficientModel, t: f64, u0: f64, overshoot0: f64) -> f64 {
    let nu = model.nu_min;
    let kappa = model.kappa_min;
    let omega: f64 = 1.0;
    let decay = (-nu * t).exp();
    let mixed = if (nu - kappa).abs() < DEGENERATE_FLOOR_GAP {
        t * decay
    } else {
        ((-kappa * t).exp() - decay) / (nu - kappa)
    };
    decay * u0 + (1.0 / nu + omega.sqrt() / nu) * (1.0 - decay) + overshoot0 * mixed
}

/// Radius `1/nu_min + |Omega|^{1/2}/nu_min + |Omega|^{1/p} + 1` of the
/// absorbing ball in `L2` for `u` and `L^p` for `theta`.
pub fn absorbing_radius(model: &CoefficientModel) -> f64 {
    let omega: f64 = 1.0;
    1.0 / model.nu_min + omega.sqrt() / model.nu_min + omega + 1.0
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeReport {
    /// Largest `||u(t)|| - envelope(t)`; negative when strictly inside.
    pub max_violation: f64,
    /// Largest violation divided by the envelope.
    pub max_relative_violation: f64,
    pub worst_t: f64,
    pub records: usize,
}

impl EnvelopeReport {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.max_relative_violation <= rel_tol
    }
}

pub fn check_l2_envelope(traj: &Trajectory, model: &CoefficientModel) -> EnvelopeReport {
    let mut report = EnvelopeReport {
        max_violation: f64::NEG_INFINITY,
        max_relative_violation: f64::NEG_INFINITY,
        worst_t: 0.0,
        records: traj.records.len(),
    };
    let Some(first) = traj.records.first() else {
        report.max_violation = 0.0;
        report.max_relative_violation = 0.0;
        return report;
    };
    for r in &traj.records {
        let env = l2_envelope(model, r.t - first.t, first.norm_u_l2, first.overshoot_2());
        let v = r.norm_u_l2 - env;
        let rel = if env > 0.0 { v / env } else { v };
        if rel > report.max_relative_violation {
            report.max_relative_violation = rel;
            report.worst_t = r.t;
        }
        report.max_violation = report.max_violation.max(v);
    }
    report
}

/// Mean of a sampled series over `[start, start + length]`, by the
/// trapezoid rule with linear interpolation at the window ends.
pub fn time_average(series: &[(f64, f64)], start: f64, length: f64) -> Result<f64> {
    let end = start + length;
    let (Some(first), Some(last)) = (series.first(), series.last()) else {
        return Err(Error::InvalidArgument("empty series".into()));
    };
    let slack = 1e-9 * length.abs().max(1.0);
    if !(length > 0.0) || start < first.0 - slack || end > last.0 + slack {
        return Err(Error::InvalidArgument(format!(
            "window [{start}, {end}] not inside series span [{}, {}]",
            first.0, last.0
        )));
    }
    let at = |t: f64| -> f64 {
        let i = series.partition_point(|p| p.0 < t);
        if i == 0 {
            return series[0].1;
        }
        if i >= series.len() {
            return series[series.len() - 1].1;
        }
        let (t0, v0) = series[i - 1];
        let (t1, v1) = series[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    };
    let mut pts = vec![(start, at(start))];
    pts.extend(series.iter().copied().filter(|&(t, _)| t > start && t < end));
    pts.push((end, at(end)));
    let integral: f64 = pts
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum();
    Ok(integral / length)
}

/// Error constant of the centered-difference energy balance, measured on
/// the manufactured solution with `dt = 1e-3` and records every 10 steps
/// (`ManufacturedSolution::energy_constant`) and frozen here. Most of it
/// comes from the Euler startup step relaxing at the floor decay rate.
pub const ENERGY_TOL_C: f64 = 7.1e3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    /// Largest `1/2 d/dt ||u||^2 + int nu |grad u|^2 - ||theta|| ||u|| - ||u||`.
    pub max_residual: f64,
    pub worst_t: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Checks the energy inequality on interior records using centered
/// differences for `d/dt ||u||^2`.
pub fn check_energy_inequality(traj: &Trajectory) -> Result<EnergyReport> {
    let tolerance = (ENERGY_TOL_C * traj.dt * traj.dt).max(1e-6);
    let recs = &traj.records;
    let mut report = EnergyReport {
        max_residual: f64::NEG_INFINITY,
        worst_t: 0.0,
        tolerance,
        holds: true,
    };
    if recs.len() < 3 {
        report.max_residual = 0.0;
        return Ok(report);
    }
    for w in recs.windows(3) {
        let h = w[2].t - w[0].t;
        if h > 0.02 + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "records too sparse for the energy check: spacing {} > 0.01",
                h / 2.0
            )));
        }
        let ddt = (w[2].norm_u_l2.powi(2) - w[0].norm_u_l2.powi(2)) / h;
        let r = &w[1];
        let residual = 0.5 * ddt + r.dissipation_u - r.norm_theta_l2 * r.norm_u_l2 - r.norm_u_l2;
        if residual > report.max_residual {
            report.max_residual = residual;
            report.worst_t = r.t;
        }
    }
    report.holds = report.max_residual <= tolerance;
    Ok(report)
}
