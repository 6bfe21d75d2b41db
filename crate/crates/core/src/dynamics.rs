//! Semi-discrete Boussinesq system in the perturbative variables: velocity
//! `u = (u1, u2)` and temperature perturbation `theta` about the conduction
//! profile `1 - y`.
//!
//! ```text
//! u_t     = P[ div(nu(theta) grad u) - u.grad u + theta e2 + (1 - y) e2 ]
//! theta_t = div(kappa(theta) grad theta) - u.grad theta + u2 - kappa'(theta) theta_y
//! ```
//!
//! `P` is the Leray projector. Every pointwise product is formed on the
//! collocation mesh, transformed, and truncated by the 2/3 rule.

use num_complex::Complex64;

use crate::coefficients::{CoefficientModel, Profile};
use crate::error::{Error, Result};
use crate::field::{RealField, SpectralField};
use crate::grid::{Grid, Parity};

/// Velocity and temperature in coefficient space at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub u1: SpectralField,
    pub u2: SpectralField,
    pub theta: SpectralField,
    pub t: f64,
}

/// Time derivative of a [`State`]; same parities.
#[derive(Clone, Debug, PartialEq)]
pub struct Tendency {
    pub du1: SpectralField,
    pub du2: SpectralField,
    pub dtheta: SpectralField,
}

/// Zero-mean pressure, cosine expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct PressureField {
    pub p: SpectralField,
}

/// Body forces added to the momentum and temperature equations before the
/// projection. Used to inject manufactured-solution sources.
#[derive(Clone, Debug, PartialEq)]
pub struct Forcing {
    pub f1: SpectralField,
    pub f2: SpectralField,
    pub ftheta: SpectralField,
}

fn check_parity(f: &SpectralField, expected: Parity) -> Result<()> {
    if f.parity() != expected {
        return Err(Error::ParityMismatch {
            expected,
            found: f.parity(),
        });
    }
    Ok(())
}

fn check_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch {
            left: a.to_string(),
            right: b.to_string(),
        });
    }
    Ok(())
}

impl State {
    /// Checks parities and grids and truncates all fields to the 2/3 band.
    pub fn new(u1: SpectralField, u2: SpectralField, theta: SpectralField, t: f64) -> Result<Self> {
        check_parity(&u1, Parity::Cosine)?;
        check_parity(&u2, Parity::Sine)?;
        check_parity(&theta, Parity::Sine)?;
        check_grid(u1.grid(), u2.grid())?;
        check_grid(u1.grid(), theta.grid())?;
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("time must be finite, got {t}")));
        }
        Ok(State {
            u1: u1.dealiased(),
            u2: u2.dealiased(),
            theta: theta.dealiased(),
            t,
        })
    }

    /// The conduction state `u = 0`, `theta = 0`.
    pub fn conduction(grid: Grid) -> Self {
        State {
            u1: SpectralField::zeros(grid, Parity::Cosine),
            u2: SpectralField::zeros(grid, Parity::Sine),
            theta: SpectralField::zeros(grid, Parity::Sine),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u1.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u1.is_finite() && self.u2.is_finite() && self.theta.is_finite()
    }

    /// `||u||` by Parseval.
    pub fn velocity_norm(&self) -> f64 {
        (self.u1.weighted_energy(0) + self.u2.weighted_energy(0)).sqrt()
    }

    /// Coefficient-level `||div u||` relative to `||grad u||` (absolute when
    /// the velocity vanishes).
    pub fn divergence_residual(&self) -> f64 {
        let div = &self.u1.ddx() + &self.u2.ddy();
        let scale = (self.u1.weighted_energy(1) + self.u2.weighted_energy(1)).sqrt();
        let d = div.weighted_energy(0).sqrt();
        if scale > 0.0 {
            d / scale
        } else {
            d
        }
    }

    /// Coefficient `(0, 0)` of `u1`, the horizontal mean flow.
    pub fn mean_u1(&self) -> f64 {
        self.u1.coeffs()[0].re
    }
}

impl Tendency {
    /// `||(du1, du2)||` and `||dtheta||`.
    pub fn norms(&self) -> (f64, f64) {
        (
            (self.du1.weighted_energy(0) + self.du2.weighted_energy(0)).sqrt(),
            self.dtheta.weighted_energy(0).sqrt(),
        )
    }
}

/// Effective wavevector of mode `(k, n)`: the x-Nyquist slot is treated as
/// `k = 0`, matching [`SpectralField::ddx`].
pub(crate) fn effective_wavevector(g: &Grid, k: i64, n: usize) -> (f64, f64) {
    let k = if k == -(g.nx() as i64) / 2 { 0 } else { k };
    g.wavevector(k, n)
}

/// Leray projection onto divergence-free fields with `u2 = 0` on the walls
/// and zero horizontal mean flow.
pub fn leray_project(f1: &SpectralField, f2: &SpectralField) -> Result<(SpectralField, SpectralField)> {
    check_parity(f1, Parity::Cosine)?;
    check_parity(f2, Parity::Sine)?;
    check_grid(f1.grid(), f2.grid())?;
    let mut a = f1.clone();
    let mut b = f2.clone();
    project_in_place(&mut a, &mut b);
    Ok((a, b))
}

pub(crate) fn project_in_place(f1: &mut SpectralField, f2: &mut SpectralField) {
    let g = *f1.grid();
    let nyp = g.nyp();
    let ny = g.ny();
    let a = f1.coeffs_mut();
    for slot in 0..g.nx() {
        let k = g.wavenumber(slot);
        let (kx, _) = effective_wavevector(&g, k, 0);
        for n in 0..nyp {
            let idx = slot * nyp + n;
            if n == 0 {
                // u1 independent of y must be constant; the constant is pinned to 0
                a[idx] = Complex64::default();
            } else if n == ny {
                if kx != 0.0 {
                    a[idx] = Complex64::default();
                }
            } else if kx == 0.0 {
                // only the y-gradient direction; u2 is removed entirely
                f2.coeffs_mut()[idx] = Complex64::default();
            } else {
                let ky = std::f64::consts::PI * n as f64;
                let bv = f2.coeffs()[idx];
                let av = a[idx];
                // div = i kx a + ky b, phi = -div / |K|^2
                let div = Complex64::new(-kx * av.im + ky * bv.re, kx * av.re + ky * bv.im);
                let phi = -div / (kx * kx + ky * ky);
                a[idx] = av - Complex64::new(-kx * phi.im, kx * phi.re);
                f2.coeffs_mut()[idx] = bv + phi * ky;
            }
        }
    }
}

/// Mesh values of a product, checked and truncated in coefficient space.
fn transform_term(grid: Grid, values: Vec<f64>, parity: Parity, term: &'static str) -> Result<SpectralField> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteTerm { term });
    }
    let field = RealField::from_values(grid, values)?;
    Ok(field.to_spectral_unchecked(parity).dealiased())
}

/// Sine coefficients of the conduction buoyancy `1 - y`, truncated.
pub(crate) fn buoyancy(grid: Grid) -> SpectralField {
    let mut b = SpectralField::zeros(grid, Parity::Sine);
    for n in 1..grid.ny() {
        if grid.is_resolved(0, n) {
            b.set_mode(0, n, Complex64::new(2.0 / (std::f64::consts::PI * n as f64), 0.0));
        }
    }
    b
}

/// Unprojected momentum forcing `G = (g1, g2)` and temperature tendency,
/// with the floor diffusion `nu_s Lap`, `kappa_s Lap` left out.
pub(crate) struct Assembly {
    pub g1: SpectralField,
    pub g2: SpectralField,
    pub dtheta: SpectralField,
    pub stats: MeshStats,
}

/// Mesh extremes of the current state that limit explicit time steps.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct MeshStats {
    /// `max(|u1|, |u2|)` over the mesh.
    pub max_speed: f64,
    pub max_nu: f64,
    pub min_nu: f64,
    pub max_kappa: f64,
    pub min_kappa: f64,
}

pub(crate) fn assemble(
    s: &State,
    model: &CoefficientModel,
    floors: (f64, f64),
    forcing: Option<&Forcing>,
) -> Result<Assembly> {
    let grid = *s.grid();
    let len = grid.len();
    let (nu_s, kappa_s) = floors;

    let u1_x = s.u1.ddx();
    let u1_y = s.u1.ddy();
    let u2_x = s.u2.ddx();
    let u2_y = s.u2.ddy();
    let th_x = s.theta.ddx();
    let th_y = s.theta.ddy();

    let phys = |f: &SpectralField| f.to_physical_unchecked();
    let u1 = phys(&s.u1);
    let u2 = phys(&s.u2);
    let th = phys(&s.theta);
    let (u1x, u1y, u2x, u2y, thx, thy) = (
        phys(&u1_x),
        phys(&u1_y),
        phys(&u2_x),
        phys(&u2_y),
        phys(&th_x),
        phys(&th_y),
    );
    let (u1, u2, th) = (u1.values(), u2.values(), th.values());
    let (u1x, u1y, u2x, u2y, thx, thy) = (
        u1x.values(),
        u1y.values(),
        u2x.values(),
        u2y.values(),
        thx.values(),
        thy.values(),
    );

    // advection and the kappa' correction
    let mut adv1 = vec![0.0; len];
    let mut adv2 = vec![0.0; len];
    let mut advt = vec![0.0; len];
    for i in 0..len {
        adv1[i] = u1[i] * u1x[i] + u2[i] * u1y[i];
        adv2[i] = u1[i] * u2x[i] + u2[i] * u2y[i];
        advt[i] = u1[i] * thx[i] + u2[i] * thy[i] + model.kappa_prime(th[i]) * thy[i];
    }
    let mut g1 = -&transform_term(grid, adv1, Parity::Cosine, "advection of u1")?;
    let mut g2 = -&transform_term(grid, adv2, Parity::Sine, "advection of u2")?;
    let mut dtheta = -&transform_term(grid, advt, Parity::Sine, "advection of theta")?;

    // diffusion beyond the floors
    let nu_excess = Excess::new(&model.nu, nu_s, th);
    add_diffusion(&mut g1, &s.u1, u1x, u1y, &nu_excess, "viscous flux")?;
    add_diffusion(&mut g2, &s.u2, u2x, u2y, &nu_excess, "viscous flux")?;
    let kappa_excess = Excess::new(&model.kappa, kappa_s, th);
    add_diffusion(&mut dtheta, &s.theta, thx, thy, &kappa_excess, "thermal flux")?;

    g2.axpy(1.0, &s.theta);
    g2.axpy(1.0, &buoyancy(grid));
    dtheta.axpy(1.0, &s.u2);

    if let Some(f) = forcing {
        check_grid(f.f1.grid(), &grid)?;
        g1.axpy(1.0, &f.f1.clone().dealiased());
        g2.axpy(1.0, &f.f2.clone().dealiased());
        dtheta.axpy(1.0, &f.ftheta.clone().dealiased());
    }
    let mut stats = MeshStats {
        max_speed: 0.0,
        max_nu: f64::NEG_INFINITY,
        min_nu: f64::INFINITY,
        max_kappa: f64::NEG_INFINITY,
        min_kappa: f64::INFINITY,
    };
    for i in 0..len {
        stats.max_speed = stats.max_speed.max(u1[i].abs()).max(u2[i].abs());
    }
    for &t in th {
        let (nu, kappa) = (model.nu(t), model.kappa(t));
        stats.max_nu = stats.max_nu.max(nu);
        stats.min_nu = stats.min_nu.min(nu);
        stats.max_kappa = stats.max_kappa.max(kappa);
        stats.min_kappa = stats.min_kappa.min(kappa);
    }
    Ok(Assembly {
        g1,
        g2,
        dtheta,
        stats,
    })
}

/// Diffusivity in excess of its floor, constant or sampled on the mesh.
enum Excess {
    Constant(f64),
    Mesh(Vec<f64>),
}

impl Excess {
    fn new(profile: &Profile, floor: f64, theta: &[f64]) -> Self {
        match *profile {
            Profile::Constant(c) => Excess::Constant(c - floor),
            _ => Excess::Mesh(theta.iter().map(|&t| profile.value(t) - floor).collect()),
        }
    }
}

/// `target += div(excess grad f)`; constant excess reduces to a scaled
/// spectral Laplacian.
fn add_diffusion(
    target: &mut SpectralField,
    f: &SpectralField,
    fx: &[f64],
    fy: &[f64],
    excess: &Excess,
    term: &'static str,
) -> Result<()> {
    match excess {
        Excess::Constant(e) => {
            if *e != 0.0 {
                target.axpy(*e, &f.laplacian());
            }
        }
        Excess::Mesh(e) => {
            let grid = *f.grid();
            let flux_x = fx.iter().zip(e).map(|(a, w)| a * w).collect();
            let flux_y = fy.iter().zip(e).map(|(a, w)| a * w).collect();
            let flux_x = transform_term(grid, flux_x, f.parity(), term)?;
            let flux_y = transform_term(grid, flux_y, f.parity().flipped(), term)?;
            target.axpy(1.0, &flux_x.ddx());
            target.axpy(1.0, &flux_y.ddy());
        }
    }
    Ok(())
}

/// Full right-hand side of the semi-discrete system.
pub fn rhs(s: &State, model: &CoefficientModel) -> Result<Tendency> {
    rhs_split(s, model, (0.0, 0.0), None)
}

/// Right-hand side with the floor diffusion `nu_s Lap u`, `kappa_s Lap theta`
/// left out and an optional body force added.
pub(crate) fn rhs_split(
    s: &State,
    model: &CoefficientModel,
    floors: (f64, f64),
    forcing: Option<&Forcing>,
) -> Result<Tendency> {
    rhs_with_stats(s, model, floors, forcing).map(|(t, _)| t)
}

pub(crate) fn rhs_with_stats(
    s: &State,
    model: &CoefficientModel,
    floors: (f64, f64),
    forcing: Option<&Forcing>,
) -> Result<(Tendency, MeshStats)> {
    let Assembly {
        mut g1,
        mut g2,
        dtheta,
        stats,
    } = assemble(s, model, floors, forcing)?;
    project_in_place(&mut g1, &mut g2);
    Ok((
        Tendency {
            du1: g1,
            du2: g2,
            dtheta,
        },
        stats,
    ))
}

/// Pressure `p` with `Lap p = div G`, where `G` is the momentum forcing
/// before projection; `grad p = G - P G`.
pub fn recover_pressure(s: &State, model: &CoefficientModel) -> Result<PressureField> {
    let Assembly { g1, g2, .. } = assemble(s, model, (0.0, 0.0), None)?;
    Ok(PressureField {
        p: pressure_from_forcing(&g1, &g2),
    })
}

pub(crate) fn pressure_from_forcing(g1: &SpectralField, g2: &SpectralField) -> SpectralField {
    let g = *g1.grid();
    let nyp = g.nyp();
    let mut p = SpectralField::zeros(g, Parity::Cosine);
    let out = p.coeffs_mut();
    for slot in 0..g.nx() {
        let k = g.wavenumber(slot);
        for n in 0..g.ny() {
            let (kx, ky) = effective_wavevector(&g, k, n);
            let k2 = kx * kx + ky * ky;
            if k2 == 0.0 {
                continue;
            }
            let idx = slot * nyp + n;
            let a = g1.coeffs()[idx];
            let b = if n == 0 { Complex64::default() } else { g2.coeffs()[idx] };
            let div = Complex64::new(-kx * a.im + ky * b.re, kx * a.re + ky * b.im);
            out[idx] = -div / k2;
        }
    }
    p
}

impl PressureField {
    /// `||p||` in `L2 / R`; the mean is zero by construction.
    pub fn norm(&self) -> f64 {
        self.p.weighted_energy(0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::PresetParams;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(32, 24).unwrap()
    }

    fn physical(grid: Grid, f: impl Fn(f64, f64) -> f64, parity: Parity) -> SpectralField {
        RealField::from_fn(grid, f).to_spectral(parity).unwrap().dealiased()
    }

    /// Divergence-free field from a stream function sampled analytically.
    fn smooth_state(grid: Grid, amp: f64) -> State {
        // psi = amp sin(2 pi x + 0.3) sin(pi y) + 0.5 amp cos(4 pi x) sin(2 pi y)
        let u1 = physical(
            grid,
            |x, y| {
                amp * (2.0 * PI * x + 0.3).sin() * PI * (PI * y).cos()
                    + 0.5 * amp * (4.0 * PI * x).cos() * 2.0 * PI * (2.0 * PI * y).cos()
            },
            Parity::Cosine,
        );
        let u2 = physical(
            grid,
            |x, y| {
                -amp * 2.0 * PI * (2.0 * PI * x + 0.3).cos() * (PI * y).sin()
                    + 0.5 * amp * 4.0 * PI * (4.0 * PI * x).sin() * (2.0 * PI * y).sin()
            },
            Parity::Sine,
        );
        let theta = physical(
            grid,
            |x, y| 0.6 * (PI * y).sin() * (1.0 + 0.4 * (2.0 * PI * x).cos()) + 0.1 * (3.0 * PI * y).sin(),
            Parity::Sine,
        );
        State::new(u1, u2, theta, 0.0).unwrap()
    }

    fn models() -> Vec<CoefficientModel> {
        crate::coefficients::PRESETS
            .iter()
            .map(|n| CoefficientModel::preset(n, &PresetParams::default()).unwrap())
            .collect()
    }

    #[test]
    fn projection_fixes_divergence_free_fields() {
        let s = smooth_state(grid(), 1.0);
        let (a, b) = leray_project(&s.u1, &s.u2).unwrap();
        assert!(a.max_abs_diff(&s.u1) <= 1e-13 * s.u1.max_abs().max(1.0));
        assert!(b.max_abs_diff(&s.u2) <= 1e-13 * s.u2.max_abs().max(1.0));
    }

    #[test]
    fn projection_kills_gradients() {
        let g = grid();
        let phi = physical(g, |x, y| (2.0 * PI * x).cos() * (PI * y).cos(), Parity::Cosine);
        let (a, b) = leray_project(&phi.ddx(), &phi.ddy()).unwrap();
        assert!(a.max_abs() <= 1e-13 && b.max_abs() <= 1e-13);
    }

    #[test]
    fn projection_kills_conduction_buoyancy() {
        let g = Grid::new(16, 64).unwrap();
        let b = buoyancy(g);
        let (a, p2) = leray_project(&SpectralField::zeros(g, Parity::Cosine), &b).unwrap();
        assert_eq!(a.max_abs(), 0.0);
        assert!(p2.max_abs() <= 1e-12);
        assert!(b.max_abs() > 0.5);
    }

    #[test]
    fn projection_rejects_wrong_parity() {
        let g = grid();
        let c = SpectralField::zeros(g, Parity::Cosine);
        assert!(leray_project(&c, &c).is_err());
    }

    #[test]
    fn projection_is_idempotent_and_self_adjoint() {
        let g = grid();
        let f1 = physical(g, |x, y| (2.0 * PI * x).sin() * (PI * y).cos() + y * y, Parity::Cosine);
        let f2 = physical(g, |x, y| ((2.0 * PI * x).cos() + 2.0) * (3.0 * PI * y).sin(), Parity::Sine);
        let h1 = physical(g, |x, y| (4.0 * PI * x).cos() * (2.0 * PI * y).cos() + x.sin(), Parity::Cosine);
        let h2 = physical(g, |x, y| (2.0 * PI * x + 1.0).sin() * (PI * y).sin(), Parity::Sine);
        let (p1, p2) = leray_project(&f1, &f2).unwrap();
        let (q1, q2) = leray_project(&p1, &p2).unwrap();
        assert!(q1.max_abs_diff(&p1) <= 1e-12 && q2.max_abs_diff(&p2) <= 1e-12);
        let (r1, r2) = leray_project(&h1, &h2).unwrap();
        let lhs = p1.inner_product(&h1).unwrap() + p2.inner_product(&h2).unwrap();
        let rhs = f1.inner_product(&r1).unwrap() + f2.inner_product(&r2).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12);
        let div = &p1.ddx() + &p2.ddy();
        assert!(div.max_abs() <= 1e-12);
        assert_eq!(p1.get(0, 0).norm(), 0.0);
    }

    #[test]
    fn conduction_state_is_steady() {
        for m in models() {
            let t = rhs(&State::conduction(grid()), &m).unwrap();
            assert!(t.du1.max_abs() <= 1e-12, "{}", m.name);
            assert!(t.du2.max_abs() <= 1e-12, "{}", m.name);
            assert!(t.dtheta.max_abs() <= 1e-12, "{}", m.name);
        }
    }

    #[test]
    fn pure_conduction_of_first_mode() {
        let g = grid();
        let m = CoefficientModel::constant(1.0, 1.0).unwrap();
        let theta = physical(g, |_, y| (PI * y).sin(), Parity::Sine);
        let s = State::new(
            SpectralField::zeros(g, Parity::Cosine),
            SpectralField::zeros(g, Parity::Sine),
            theta.clone(),
            0.0,
        )
        .unwrap();
        let t = rhs(&s, &m).unwrap();
        let expected = theta.scale(-PI * PI);
        assert!(t.dtheta.max_abs_diff(&expected) <= 1e-12);
        // theta e2 depends on y only and is a gradient
        let (p1, p2) = leray_project(&SpectralField::zeros(g, Parity::Cosine), &theta).unwrap();
        assert!(t.du1.max_abs_diff(&p1) <= 1e-13 && t.du2.max_abs_diff(&p2) <= 1e-13);
        assert!(t.du2.max_abs() <= 1e-13);
    }

    #[test]
    fn tendency_preserves_invariants() {
        for m in models() {
            let s = smooth_state(grid(), 0.3);
            let t = rhs(&s, &m).unwrap();
            let div = &t.du1.ddx() + &t.du2.ddy();
            assert!(div.max_abs() <= 1e-11 * t.du1.max_abs().max(1.0), "{}", m.name);
            assert_eq!(t.du1.get(0, 0).norm(), 0.0);
        }
    }

    fn mesh_dissipation(s: &State, f: impl Fn(f64) -> f64, scalar: bool) -> f64 {
        let g = *s.grid();
        let th = s.theta.to_physical().unwrap();
        let comps: Vec<&SpectralField> = if scalar { vec![&s.theta] } else { vec![&s.u1, &s.u2] };
        let mut total = 0.0;
        for c in comps {
            let dx = c.ddx().to_physical().unwrap();
            let dy = c.ddy().to_physical().unwrap();
            for i in 0..g.len() {
                let w = g.weight(i % g.nyp());
                total += w * f(th.values()[i]) * (dx.values()[i].powi(2) + dy.values()[i].powi(2));
            }
        }
        total
    }

    #[test]
    fn energy_identity() {
        let g = Grid::new(48, 32).unwrap();
        for m in models() {
            let s = smooth_state(g, 0.2);
            let t = rhs(&s, &m).unwrap();
            let lhs = t.du1.inner_product(&s.u1).unwrap() + t.du2.inner_product(&s.u2).unwrap();
            let buoy = buoyancy(g);
            let rhs_val = -mesh_dissipation(&s, |th| m.nu(th), false)
                + s.theta.inner_product(&s.u2).unwrap()
                + buoy.inner_product(&s.u2).unwrap();
            let scale = mesh_dissipation(&s, |th| m.nu(th), false);
            assert!((lhs - rhs_val).abs() <= 1e-8 * scale, "{}: {lhs} vs {rhs_val}", m.name);
        }
    }

    #[test]
    fn temperature_weak_form() {
        let g = Grid::new(48, 32).unwrap();
        for m in models() {
            let s = smooth_state(g, 0.2);
            let t = rhs(&s, &m).unwrap();
            let th = s.theta.to_physical().unwrap();
            let thy = s.theta.ddy().to_physical().unwrap();
            let corr: f64 = (0..g.len())
                .map(|i| {
                    let v = th.values()[i];
                    g.weight(i % g.nyp()) * m.kappa_prime(v) * thy.values()[i] * v
                })
                .sum();
            let diss = mesh_dissipation(&s, |v| m.kappa(v), true);
            let residual = t.dtheta.inner_product(&s.theta).unwrap() + diss
                - s.u2.inner_product(&s.theta).unwrap()
                + corr;
            assert!(residual.abs() <= 1e-8 * diss, "{}: {residual}", m.name);
        }
    }

    #[test]
    fn hydrostatic_pressure() {
        let g = Grid::new(16, 48).unwrap();
        for m in models() {
            let p = recover_pressure(&State::conduction(g), &m).unwrap().p;
            for n in 1..g.ny() {
                let expected = if g.is_resolved(0, n) {
                    -2.0 / (PI * PI * (n * n) as f64)
                } else {
                    0.0
                };
                assert!((p.get(0, n).re - expected).abs() <= 1e-14, "{n}");
            }
            assert_eq!(p.get(0, 0).norm(), 0.0);
        }
        // and in physical space, up to the truncated tail
        let m = CoefficientModel::constant(1.0, 1.0).unwrap();
        let g = Grid::new(8, 256).unwrap();
        let p = recover_pressure(&State::conduction(g), &m).unwrap().p.to_physical().unwrap();
        let exact = RealField::from_fn(g, |_, y| y - y * y / 2.0 - 1.0 / 3.0);
        let err = p.zip_map(&exact, |a, b| a - b).unwrap().norm_lp(2.0).unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn pressure_gradient_is_the_removed_part() {
        let g = grid();
        for m in models() {
            let s = smooth_state(g, 0.5);
            let Assembly { g1, g2, .. } = assemble(&s, &m, (0.0, 0.0), None).unwrap();
            let (p1, p2) = leray_project(&g1, &g2).unwrap();
            let p = recover_pressure(&s, &m).unwrap().p;
            let r1 = &(&g1 - &p1) - &p.ddx();
            let r2 = &(&g2 - &p2) - &p.ddy();
            let res = (r1.weighted_energy(0) + r2.weighted_energy(0)).sqrt();
            let norm = (g1.weighted_energy(0) + g2.weighted_energy(0)).sqrt();
            assert!(res <= 1e-8 * norm, "{}: {res} vs {norm}", m.name);
        }
    }

    #[test]
    fn pressure_gradient_orthogonal_to_stokes_term() {
        let g = grid();
        let m = CoefficientModel::constant(1.0, 1.0).unwrap();
        let s = smooth_state(g, 0.5);
        let p = recover_pressure(&s, &m).unwrap().p;
        let (px, py) = (p.ddx(), p.ddy());
        let (l1, l2) = (s.u1.laplacian(), s.u2.laplacian());
        let ip = px.inner_product(&l1).unwrap() + py.inner_product(&l2).unwrap();
        let gp = (px.weighted_energy(0) + py.weighted_energy(0)).sqrt();
        let gl = (l1.weighted_energy(0) + l2.weighted_energy(0)).sqrt();
        assert!(ip.abs() <= 1e-10 * gp * gl);
    }

    #[test]
    fn split_rhs_recombines() {
        let g = grid();
        for m in models() {
            let s = smooth_state(g, 0.4);
            let full = rhs(&s, &m).unwrap();
            let floors = (m.nu_min, m.kappa_min);
            let split = rhs_split(&s, &m, floors, None).unwrap();
            let (l1, l2) = leray_project(&s.u1.laplacian(), &s.u2.laplacian()).unwrap();
            let back1 = &split.du1 + &l1.scale(floors.0);
            let back2 = &split.du2 + &l2.scale(floors.0);
            let backt = &split.dtheta + &s.theta.laplacian().scale(floors.1);
            let tol = 1e-10 * full.dtheta.max_abs().max(full.du1.max_abs()).max(1.0);
            assert!(back1.max_abs_diff(&full.du1) <= tol, "{}", m.name);
            assert!(back2.max_abs_diff(&full.du2) <= tol, "{}", m.name);
            assert!(backt.max_abs_diff(&full.dtheta) <= tol, "{}", m.name);
        }
    }

    #[test]
    fn non_finite_term_is_named() {
        let g = grid();
        let mut s = smooth_state(g, 0.1);
        let theta = physical(g, |_, y| 1e200 * (PI * y).sin(), Parity::Sine);
        s.theta = theta;
        let m = CoefficientModel::quadratic_kappa();
        match rhs(&s, &m) {
            Err(Error::NonFiniteTerm { term }) => assert!(!term.is_empty()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn state_invariant_helpers() {
        let s = smooth_state(grid(), 1.0);
        assert!(s.divergence_residual() <= 1e-13);
        assert!(s.mean_u1().abs() <= 1e-15);
        assert!(s.velocity_norm() > 0.0);
        assert_eq!(State::conduction(grid()).divergence_residual(), 0.0);
    }
}
