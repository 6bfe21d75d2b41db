//! Acceptance suite: one PASS/FAIL line per criterion, printed straight to
//! stdout so it shows up without `--nocapture`.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use boussinesq::coefficients::verify_kirchhoff_identities;
use boussinesq::config::{ScenarioConfig, ScenarioKind};
use boussinesq::diagnostics::{absorbing_radius, record};
use boussinesq::initial::{random_smooth, InitialPreset};
use boussinesq::io::{load_checkpoint, save_checkpoint};
use boussinesq::mms::{ManufacturedSolution, MmsStudy};
use boussinesq::scenarios::{run_scenario, ScenarioReport};
use boussinesq::stepper::{Scheme, Stepper, StepperConfig};
use boussinesq::{leray_project, CoefficientModel, Grid, RealField};

fn verdict(n: usize, title: &str, passed: bool, detail: &str) {
    let line = format!(
        "[{n}] {title}: {} {}\n",
        if passed { "PASS" } else { "FAIL" },
        detail.trim_end()
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn failing_lines(r: &ScenarioReport) -> String {
    r.checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.line())
        .collect::<Vec<_>>()
        .join("; ")
}

fn config(kind: ScenarioKind, nx: usize, ny: usize, model: &str) -> ScenarioConfig {
    let mut c = ScenarioConfig::new(kind);
    c.nx = nx;
    c.ny = ny;
    c.model.preset = model.into();
    c
}

#[test]
fn overshoot_decay_rate() {
    let mut passed = true;
    let mut detail = Vec::new();
    for kappa0 in [1.0, 2.0] {
        let mut c = config(ScenarioKind::OvershootDecay, 128, 64, "constant");
        c.model.params.kappa0 = Some(kappa0);
        c.stepper.dt = 1e-3;
        c.stepper.t_end = 5.0;
        c.record_every = 1;
        c.initial.preset = InitialPreset::Overshoot;
        c.initial.theta_amplitude = 10.0;
        let clock = Instant::now();
        let r = run_scenario(&c, None).unwrap();
        let secs = clock.elapsed().as_secs_f64();
        let fit = r.check("decay rate p=2").unwrap();
        let ok = r.passed() && secs <= 120.0;
        passed &= ok;
        detail.push(format!(
            "kappa0={kappa0}: lambda={:.4} >= {:.4}, {secs:.0}s{}",
            fit.value,
            fit.limit,
            if r.passed() { String::new() } else { format!(" ({})", failing_lines(&r)) }
        ));
    }
    verdict(1, "overshoot decay rate", passed, &detail.join("; "));
    assert!(passed);
}

#[test]
fn maximum_principle() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(ScenarioKind::MaxPrinciple, 128, 64, "quadratic-kappa");
    c.stepper.dt = 1e-3;
    c.stepper.t_end = 10.0;
    c.record_every = 10;
    c.initial.preset = InitialPreset::RandomVelocity;
    c.initial.amplitude = 0.1;
    c.initial.theta_amplitude = 1.0;
    c.initial.seed = 7;
    c.options.check_doubling = true;
    let r = run_scenario(&c, Some(dir.path())).unwrap();
    let coarse = r.check("mesh overshoot 128x64").unwrap().value;
    let fine = r.check("mesh overshoot 256x128").unwrap().value;
    verdict(
        2,
        "maximum principle",
        r.passed(),
        &format!("max mesh overshoot 128x64 {coarse:.3e}, 256x128 {fine:.3e}, tol 1e-3 {}", failing_lines(&r)),
    );
    assert!(r.passed());
}

#[test]
fn l2_envelope_and_absorbing_ball() {
    let mut c = config(ScenarioKind::AbsorbingBall, 64, 32, "constant");
    let model = c.model.build().unwrap();
    let c0 = absorbing_radius(&model);
    c.stepper.dt = 2e-3;
    c.stepper.t_end = 20.0;
    c.stepper.adaptive = true;
    c.record_every = 5;
    c.initial.preset = InitialPreset::RandomSmooth;
    c.initial.theta_amplitude = 0.5;
    c.initial.seed = 11;
    c.options.amplitudes = vec![0.1, 10.0 * c0];
    let r = run_scenario(&c, None).unwrap();
    let passed = r.passed() && c0 == 4.0;
    let env = |a: f64| r.check(&format!("L2 envelope a={a}")).unwrap().value;
    let entry = r.check(&format!("ball entry a={}", 10.0 * c0)).unwrap().value;
    verdict(
        3,
        "L2 envelope and absorbing ball",
        passed,
        &format!(
            "C0={c0}, relative violation {:.2e} / {:.2e}, entry time for ||u0||=40: {entry:.4} {}",
            env(0.1),
            env(10.0 * c0),
            failing_lines(&r)
        ),
    );
    assert!(passed);
}

#[test]
fn discrete_energy_inequality() {
    let mut c = config(ScenarioKind::AbsorbingBall, 64, 32, "quadratic-kappa");
    c.stepper.dt = 1e-3;
    c.stepper.t_end = 5.0;
    c.record_every = 10;
    c.initial.preset = InitialPreset::SingleMode;
    c.initial.amplitude = 1.0;
    c.initial.theta_amplitude = 0.8;
    let r = run_scenario(&c, None).unwrap();
    let e = r.check("energy inequality a=1").expect("energy check ran");
    verdict(
        4,
        "discrete energy inequality",
        r.passed(),
        &format!("worst residual {:.3e} <= tol {:.3e} {}", e.value, e.limit, failing_lines(&r)),
    );
    assert!(r.passed());
}

#[test]
fn kirchhoff_identities() {
    let grid = Grid::new(128, 64).unwrap();
    let theta = RealField::from_fn(grid, |x, y| 0.8 * (PI * y).sin() * (1.0 + 0.2 * (2.0 * PI * x).cos()));
    let quad = verify_kirchhoff_identities(&theta, &CoefficientModel::quadratic_kappa()).unwrap();
    let cons = verify_kirchhoff_identities(&theta, &CoefficientModel::constant(1.0, 2.0).unwrap()).unwrap();
    let q = quad.max_rel_err_grad.max(quad.max_rel_err_lap);
    let k = cons.max_rel_err_grad.max(cons.max_rel_err_lap);
    let passed = q <= 1e-6 && k <= 1e-12;
    verdict(
        5,
        "Kirchhoff identities",
        passed,
        &format!("quadratic-kappa {q:.3e} (tol 1e-6), constant {k:.3e} (tol 1e-12)"),
    );
    assert!(passed);
}

#[test]
fn structural_invariants() {
    let grid = Grid::new(64, 32).unwrap();
    let model = CoefficientModel::quadratic_kappa();
    let s0 = random_smooth(grid, 0.5, 0.5, 17).unwrap();
    let cfg = StepperConfig {
        dt: 1e-3,
        t_end: 10.0,
        ..StepperConfig::default()
    };

    // 10^4 steps of the default scheme
    let (mut div, mut mean, mut idem) = (0.0f64, 0.0f64, 0.0f64);
    let mut stepper = Stepper::new(model.clone(), cfg.clone()).unwrap();
    let traj = stepper.run_observed(s0.clone(), 100, |s, r| {
        div = div.max(r.div_residual);
        mean = mean.max(r.mean_u1.abs());
        let (p1, p2) = leray_project(&s.u1, &s.u2)?;
        let scale = s.u1.max_abs().max(s.u2.max_abs()).max(f64::MIN_POSITIVE);
        idem = idem.max(p1.max_abs_diff(&s.u1).max(p2.max_abs_diff(&s.u2)) / scale);
        Ok(())
    });
    assert!(traj.is_complete(), "{:?}", traj.failure);
    assert_eq!(traj.steps, 10_000);

    // restart halfway through a checkpoint file; the checkpoint carries no
    // multistep history, so this comparison uses the one-step scheme
    let euler = StepperConfig {
        scheme: Scheme::ImexEuler,
        ..cfg.clone()
    };
    let full = Stepper::new(model.clone(), euler.clone()).unwrap().run(s0.clone(), 10_000);
    let half = Stepper::new(model.clone(), StepperConfig { t_end: 5.0, ..euler.clone() })
        .unwrap()
        .run(s0, 10_000);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mid.bqchk");
    save_checkpoint(half.final_state.as_ref().unwrap(), &path).unwrap();
    let resumed = Stepper::new(model.clone(), euler).unwrap().run(load_checkpoint(&path).unwrap(), 10_000);
    let a = record(full.final_state.as_ref().unwrap(), &model).unwrap().values();
    let b = record(resumed.final_state.as_ref().unwrap(), &model).unwrap().values();
    let restart = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);

    let passed = div <= 1e-11 && mean <= 1e-12 && idem <= 1e-12 && restart <= 1e-12;
    verdict(
        6,
        "structural invariants",
        passed,
        &format!(
            "div residual {div:.2e}, |mean u1| {mean:.2e}, projection idempotence {idem:.2e}, restart {restart:.2e} over 1e4 steps"
        ),
    );
    assert!(passed);
}

#[test]
fn manufactured_solution_convergence() {
    let clock = Instant::now();
    let r = ManufacturedSolution::default()
        .convergence(&MmsStudy::default(), Scheme::ImexBdf2)
        .unwrap();
    let secs = clock.elapsed().as_secs_f64();
    let passed = r.passed() && secs <= 300.0;
    let orders: Vec<String> = r.orders.iter().map(|o| format!("{o:.3}")).collect();
    let errors: Vec<String> = r.spatial.iter().map(|(n, e)| format!("{n}:{e:.2e}")).collect();
    let residuals: Vec<String> = r.spatial_residuals.iter().map(|e| format!("{e:.1e}")).collect();
    verdict(
        7,
        "manufactured-solution convergence",
        passed,
        &format!(
            "BDF2 orders [{}], spatial errors [{}], rhs residuals [{}], {secs:.0}s",
            orders.join(", "),
            errors.join(", "),
            residuals.join(", ")
        ),
    );
    assert!(passed, "{}", r.table());
}

#[test]
fn lipschitz_continuity() {
    let mut passed = true;
    let mut detail = Vec::new();
    for model in ["constant", "quadratic-kappa"] {
        let mut c = config(ScenarioKind::ContinuityLipschitz, 64, 32, model);
        c.stepper.dt = 1e-3;
        c.stepper.t_end = 5.0;
        c.record_every = 50;
        c.initial.preset = InitialPreset::RandomSmooth;
        c.initial.amplitude = 0.5;
        c.initial.theta_amplitude = 0.5;
        c.initial.seed = 21;
        c.options.deltas = vec![1e-6, 1e-7];
        c.options.sample_every = 50;
        let r = run_scenario(&c, None).unwrap();
        passed &= r.passed();
        let spread = r.check("ratio agreement delta #1 vs #2").unwrap().value;
        let slope = r.check("affine log-growth envelope delta=1e-6").unwrap().value;
        detail.push(format!("{model}: ratio spread {spread:.2e}, fitted C {slope:.3} {}", failing_lines(&r)));
    }
    verdict(8, "Lipschitz continuity", passed, &detail.join("; "));
    assert!(passed);
}

#[test]
fn plateau_independence() {
    let clock = Instant::now();
    let mut passed = true;
    let mut detail = Vec::new();
    for model in ["constant", "quadratic-kappa"] {
        let mut c = config(ScenarioKind::AttractorProbe, 64, 32, model);
        c.stepper.dt = 2e-3;
        c.stepper.t_end = 20.0;
        c.record_every = 50;
        c.initial.preset = InitialPreset::RandomSmooth;
        c.initial.amplitude = 1.0;
        c.initial.theta_amplitude = 0.8;
        c.options.seeds = vec![1, 2, 3, 4];
        c.options.plateau_tol = 0.2;
        c.options.sample_every = 500;
        let r = run_scenario(&c, None).unwrap();
        passed &= r.passed();
        let p = r.check("late H2 plateau agreement").unwrap();
        detail.push(format!("{model}: mismatch {:.2e} [{}] {}", p.value, p.detail, failing_lines(&r)));
    }
    let secs = clock.elapsed().as_secs_f64();
    passed &= secs <= 600.0;
    verdict(9, "initial-data independence of plateaus", passed, &format!("{}; {secs:.0}s", detail.join("; ")));
    assert!(passed);
}
