//! Temperature-dependent viscosity `nu` and diffusivity `kappa`, the
//! structural constants they must satisfy, and the Kirchhoff transforms
//! `K(theta) = int_0^theta kappa` and `B(theta) = int_0^theta sqrt(kappa)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::RealField;
use crate::grid::Parity;
use crate::quadrature;

/// Tolerance of the adaptive quadrature used when no closed form exists.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// A smooth scalar function of temperature with its first two derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    /// `c`
    Constant(f64),
    /// `base + bump / (1 + t^2)`
    Rational { base: f64, bump: f64 },
    /// `1 + t^2`
    Quadratic,
    /// `offset + sin t`
    ShiftedSine { offset: f64 },
    /// `exp t`
    Exponential,
}

impl Profile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Profile::Constant(c) => c,
            Profile::Rational { base, bump } => base + bump / (1.0 + t * t),
            Profile::Quadratic => 1.0 + t * t,
            Profile::ShiftedSine { offset } => offset + t.sin(),
            Profile::Exponential => t.exp(),
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match *self {
            Profile::Constant(_) => 0.0,
            Profile::Rational { bump, .. } => {
                let q = 1.0 + t * t;
                -2.0 * bump * t / (q * q)
            }
            Profile::Quadratic => 2.0 * t,
            Profile::ShiftedSine { .. } => t.cos(),
            Profile::Exponential => t.exp(),
        }
    }

    pub fn deriv2(&self, t: f64) -> f64 {
        match *self {
            Profile::Constant(_) => 0.0,
            Profile::Rational { bump, .. } => {
                let q = 1.0 + t * t;
                bump * (6.0 * t * t - 2.0) / (q * q * q)
            }
            Profile::Quadratic => 2.0,
            Profile::ShiftedSine { .. } => -t.sin(),
            Profile::Exponential => t.exp(),
        }
    }

    /// Closed form of `int_0^t value`, when one is known.
    pub fn integral(&self, t: f64) -> Option<f64> {
        Some(match *self {
            Profile::Constant(c) => c * t,
            Profile::Rational { base, bump } => base * t + bump * t.atan(),
            Profile::Quadratic => t + t * t * t / 3.0,
            Profile::ShiftedSine { offset } => offset * t + 1.0 - t.cos(),
            Profile::Exponential => t.exp_m1(),
        })
    }

    /// Closed form of `int_0^t sqrt(value)`, when one is known.
    pub fn sqrt_integral(&self, t: f64) -> Option<f64> {
        match *self {
            Profile::Constant(c) => Some(c.sqrt() * t),
            Profile::Rational { base, bump } if bump == 0.0 => Some(base.sqrt() * t),
            Profile::Quadratic => Some(0.5 * (t * (1.0 + t * t).sqrt() + t.asinh())),
            Profile::Exponential => Some(2.0 * (0.5 * t).exp_m1()),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Profile::Constant(_))
    }
}

/// Viscosity and diffusivity laws with the constants of the structural
/// assumptions: lower bounds `nu_min`, `kappa_min`; growth constants `c0`,
/// `r`; ratio constant `c0_tilde`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientModel {
    pub name: String,
    pub nu: Profile,
    pub kappa: Profile,
    pub nu_min: f64,
    pub kappa_min: f64,
    pub c0: f64,
    pub r: f64,
    pub c0_tilde: f64,
}

/// Names of the shipped presets.
pub const PRESETS: [&str; 3] = ["constant", "bounded-rational", "quadratic-kappa"];

impl CoefficientModel {
    pub fn constant(nu0: f64, kappa0: f64) -> Result<Self> {
        if !(nu0 > 0.0 && kappa0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "constant coefficients must be positive, got nu0 = {nu0}, kappa0 = {kappa0}"
            )));
        }
        Ok(CoefficientModel {
            name: "constant".into(),
            nu: Profile::Constant(nu0),
            kappa: Profile::Constant(kappa0),
            nu_min: nu0,
            kappa_min: kappa0,
            c0: nu0.max(kappa0),
            r: 0.0,
            c0_tilde: 1.0,
        })
    }

    /// `nu = a + b/(1+t^2)`, `kappa = c + d/(1+t^2)` with `a, c > 0`, `b, d >= 0`.
    pub fn bounded_rational(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if !(a > 0.0 && c > 0.0 && b >= 0.0 && d >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bounded-rational needs a, c > 0 and b, d >= 0, got ({a}, {b}, {c}, {d})"
            )));
        }
        // |nu'| <= b * 3 sqrt(3) / 8, |kappa''| / kappa <= 2 d / c
        let slope = 3.0 * 3f64.sqrt() / 8.0;
        Ok(CoefficientModel {
            name: "bounded-rational".into(),
            nu: Profile::Rational { base: a, bump: b },
            kappa: Profile::Rational { base: c, bump: d },
            nu_min: a,
            kappa_min: c,
            c0: (a + b).max(c + d),
            r: 0.0,
            c0_tilde: (slope * b.max(d) / c).max(2.0 * d / c).max(1e-3),
        })
    }

    /// `kappa = 1 + t^2`, `nu = 2 + sin t`.
    pub fn quadratic_kappa() -> Self {
        CoefficientModel {
            name: "quadratic-kappa".into(),
            nu: Profile::ShiftedSine { offset: 2.0 },
            kappa: Profile::Quadratic,
            nu_min: 1.0,
            kappa_min: 1.0,
            // nu = 2 + sin t exceeds 2 (t^2 + 1) near t = 0.3, so c0 = 2 is too small
            c0: 3.0,
            r: 1.0,
            c0_tilde: 2.0,
        }
    }

    /// Builds a preset by name. Unused parameters are ignored; missing ones
    /// take the defaults `nu0 = kappa0 = 1`, `(a, b, c, d) = (1, 0.5, 1, 0.5)`.
    pub fn preset(name: &str, params: &PresetParams) -> Result<Self> {
        match name {
            "constant" => Self::constant(params.nu0.unwrap_or(1.0), params.kappa0.unwrap_or(1.0)),
            "bounded-rational" => Self::bounded_rational(
                params.a.unwrap_or(1.0),
                params.b.unwrap_or(0.5),
                params.c.unwrap_or(1.0),
                params.d.unwrap_or(0.5),
            ),
            "quadratic-kappa" => Ok(Self::quadratic_kappa()),
            other => Err(Error::Config(format!(
                "unknown model preset `{other}` (known: {})",
                PRESETS.join(", ")
            ))),
        }
    }

    pub fn nu(&self, t: f64) -> f64 {
        self.nu.value(t)
    }

    pub fn nu_prime(&self, t: f64) -> f64 {
        self.nu.deriv(t)
    }

    pub fn kappa(&self, t: f64) -> f64 {
        self.kappa.value(t)
    }

    pub fn kappa_prime(&self, t: f64) -> f64 {
        self.kappa.deriv(t)
    }

    pub fn kappa_double_prime(&self, t: f64) -> f64 {
        self.kappa.deriv2(t)
    }

    /// `K(t) = int_0^t kappa`.
    pub fn kappa_antiderivative(&self, t: f64) -> f64 {
        self.kappa
            .integral(t)
            .unwrap_or_else(|| quadrature::integrate(|s| self.kappa.value(s), 0.0, t, QUADRATURE_TOL))
    }

    /// `B(t) = int_0^t sqrt(kappa)`.
    pub fn sqrt_kappa_antiderivative(&self, t: f64) -> f64 {
        self.kappa.sqrt_integral(t).unwrap_or_else(|| {
            quadrature::integrate(|s| self.kappa.value(s).sqrt(), 0.0, t, QUADRATURE_TOL)
        })
    }

    fn sqrt_kappa_between(&self, a: f64, b: f64) -> f64 {
        match (self.kappa.sqrt_integral(a), self.kappa.sqrt_integral(b)) {
            (Some(fa), Some(fb)) => fb - fa,
            _ => quadrature::integrate(|s| self.kappa.value(s).sqrt(), a, b, 1e-14),
        }
    }

    fn kappa_between(&self, a: f64, b: f64) -> f64 {
        match (self.kappa.integral(a), self.kappa.integral(b)) {
            (Some(fa), Some(fb)) => fb - fa,
            _ => quadrature::integrate(|s| self.kappa.value(s), a, b, 1e-14),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.nu.is_constant() && self.kappa.is_constant()
    }
}

/// Optional numeric parameters of the presets.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PresetParams {
    pub nu0: Option<f64>,
    pub kappa0: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub d: Option<f64>,
}

/// Worst margins found by [`audit_assumptions`]; all are nonnegative on
/// success. Derivative errors are relative.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionAudit {
    pub samples: usize,
    pub lower_bound_margin: f64,
    pub growth_margin: f64,
    pub ratio_margin: f64,
    pub max_derivative_error: f64,
    pub max_ratio: f64,
}

const FD_STEP: f64 = 1e-5;
const FD_TOL: f64 = 1e-6;

/// Samples the model on `samples` equispaced points of `[tau_lo, tau_hi]`
/// plus `{0, -1, 1}` and checks the lower bounds, growth bounds, ratio
/// bounds, and the consistency of all supplied derivatives and
/// antiderivatives against centered differences.
pub fn audit_assumptions(
    model: &CoefficientModel,
    tau_lo: f64,
    tau_hi: f64,
    samples: usize,
) -> Result<AssumptionAudit> {
    if !(tau_lo < tau_hi) || samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "audit needs tau_lo < tau_hi and samples >= 2, got [{tau_lo}, {tau_hi}] with {samples}"
        )));
    }
    let step = (tau_hi - tau_lo) / (samples - 1) as f64;
    let taus = (0..samples)
        .map(|i| tau_lo + step * i as f64)
        .chain([0.0, -1.0, 1.0]);

    let mut audit = AssumptionAudit {
        samples: samples + 3,
        lower_bound_margin: f64::INFINITY,
        growth_margin: f64::INFINITY,
        ratio_margin: f64::INFINITY,
        max_derivative_error: 0.0,
        max_ratio: 0.0,
    };

    let check = |name: &'static str, tau: f64, lhs: f64, rhs: f64, margin: &mut f64| -> Result<()> {
        if !(lhs <= rhs) {
            return Err(Error::AssumptionViolated {
                assumption: name,
                tau,
                lhs,
                rhs,
            });
        }
        *margin = margin.min(rhs - lhs);
        Ok(())
    };

    for tau in taus {
        let nu = model.nu(tau);
        let kappa = model.kappa(tau);
        let dnu = model.nu_prime(tau);
        let dkappa = model.kappa_prime(tau);
        let ddkappa = model.kappa_double_prime(tau);

        let m = &mut audit.lower_bound_margin;
        check("nu lower bound", tau, model.nu_min, nu, m)?;
        check("kappa lower bound", tau, model.kappa_min, kappa, m)?;

        let slope_bound = model.c0 * (tau.abs().powf(model.r) + 1.0);
        let value_bound = model.c0 * (tau.abs().powf(model.r + 1.0) + 1.0);
        let m = &mut audit.growth_margin;
        check("nu' growth", tau, dnu.abs(), slope_bound, m)?;
        check("kappa' growth", tau, dkappa.abs(), slope_bound, m)?;
        check("nu growth", tau, nu, value_bound, m)?;
        check("kappa growth", tau, kappa, value_bound, m)?;

        let m = &mut audit.ratio_margin;
        for (name, ratio) in [
            ("|nu'|/kappa ratio", dnu.abs() / kappa),
            ("|kappa'|/kappa ratio", dkappa.abs() / kappa),
            ("|kappa''|/kappa ratio", ddkappa.abs() / kappa),
        ] {
            check(name, tau, ratio, model.c0_tilde, m)?;
            audit.max_ratio = audit.max_ratio.max(ratio);
        }

        let h = FD_STEP;
        let fd = [
            ("nu' consistency", (model.nu(tau + h) - model.nu(tau - h)) / (2.0 * h), dnu),
            (
                "kappa' consistency",
                (model.kappa(tau + h) - model.kappa(tau - h)) / (2.0 * h),
                dkappa,
            ),
            (
                "kappa'' consistency",
                (model.kappa_prime(tau + h) - model.kappa_prime(tau - h)) / (2.0 * h),
                ddkappa,
            ),
            (
                "K' = kappa consistency",
                model.kappa_between(tau - h, tau + h) / (2.0 * h),
                kappa,
            ),
            (
                "B' = sqrt(kappa) consistency",
                model.sqrt_kappa_between(tau - h, tau + h) / (2.0 * h),
                kappa.sqrt(),
            ),
        ];
        for (name, approx, exact) in fd {
            let rel = (approx - exact).abs() / exact.abs().max(1.0);
            if !(rel <= FD_TOL) {
                return Err(Error::AssumptionViolated {
                    assumption: name,
                    tau,
                    lhs: rel,
                    rhs: FD_TOL,
                });
            }
            audit.max_derivative_error = audit.max_derivative_error.max(rel);
        }
    }
    Ok(audit)
}

/// Pointwise `K(theta)`.
pub fn kirchhoff_hat(theta: &RealField, model: &CoefficientModel) -> RealField {
    theta.map(|t| model.kappa_antiderivative(t))
}

/// Pointwise `B(theta)`.
pub fn kirchhoff_breve(theta: &RealField, model: &CoefficientModel) -> RealField {
    theta.map(|t| model.sqrt_kappa_antiderivative(t))
}

/// Relative L2 discrepancies of `grad K(theta) = kappa grad theta` and
/// `Lap K(theta) = kappa Lap theta + kappa' |grad theta|^2`, with the left
/// sides differentiated spectrally and the right sides formed pointwise.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KirchhoffReport {
    pub max_rel_err_grad: f64,
    pub max_rel_err_lap: f64,
    /// Set when either discrepancy exceeds [`KirchhoffReport::ALIASING_THRESHOLD`].
    pub aliasing_suspected: bool,
}

impl KirchhoffReport {
    pub const ALIASING_THRESHOLD: f64 = 1e-3;
}

pub fn verify_kirchhoff_identities(theta: &RealField, model: &CoefficientModel) -> Result<KirchhoffReport> {
    let hat = kirchhoff_hat(theta, model).to_spectral(Parity::Sine)?;
    let th = theta.to_spectral(Parity::Sine)?;

    let hat_x = hat.ddx().to_physical()?;
    let hat_y = hat.ddy().to_physical()?;
    let hat_lap = hat.laplacian().to_physical()?;
    let tx = th.ddx().to_physical()?;
    let ty = th.ddy().to_physical()?;
    let tlap = th.laplacian().to_physical()?;

    let grid = *theta.grid();
    let mut grad_num = 0.0;
    let mut grad_den = 0.0;
    let mut lap_num = 0.0;
    let mut lap_den = 0.0;
    for idx in 0..grid.len() {
        let w = grid.weight(idx % grid.nyp());
        let t = theta.values()[idx];
        let kappa = model.kappa(t);
        let gx = kappa * tx.values()[idx];
        let gy = kappa * ty.values()[idx];
        let ex = hat_x.values()[idx] - gx;
        let ey = hat_y.values()[idx] - gy;
        grad_num += w * (ex * ex + ey * ey);
        grad_den += w * (gx * gx + gy * gy);

        let grad2 = tx.values()[idx].powi(2) + ty.values()[idx].powi(2);
        let rhs = kappa * tlap.values()[idx] + model.kappa_prime(t) * grad2;
        let el = hat_lap.values()[idx] - rhs;
        lap_num += w * el * el;
        lap_den += w * rhs * rhs;
    }
    let rel = |num: f64, den: f64| {
        if den > 0.0 {
            (num / den).sqrt()
        } else {
            num.sqrt()
        }
    };
    let grad = rel(grad_num, grad_den);
    let lap = rel(lap_num, lap_den);
    Ok(KirchhoffReport {
        max_rel_err_grad: grad,
        max_rel_err_lap: lap,
        aliasing_suspected: grad > KirchhoffReport::ALIASING_THRESHOLD
            || lap > KirchhoffReport::ALIASING_THRESHOLD,
    })
}
