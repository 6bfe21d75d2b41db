use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use boussinesq::coefficients::{audit_assumptions, verify_kirchhoff_identities, PresetParams};
use boussinesq::config::{ScenarioConfig, ScenarioKind};
use boussinesq::mms::{ManufacturedSolution, MmsStudy};
use boussinesq::scenarios::execute;
use boussinesq::stepper::Scheme;
use boussinesq::{CoefficientModel, Error, Grid, RealField};

/// Boussinesq simulator and estimate checks.
#[derive(Parser)]
#[command(name = "bq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check a coefficient model against its assumptions.
    #[command(allow_negative_numbers = true)]
    Audit {
        #[arg(long)]
        model: String,
        #[arg(long)]
        nu0: Option<f64>,
        #[arg(long)]
        kappa0: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        d: Option<f64>,
        /// Half-width of the audited temperature range.
        #[arg(long, default_value_t = 2.0)]
        range: f64,
        #[arg(long, default_value_t = 801)]
        samples: usize,
    },
    /// Convergence study on the manufactured solution.
    Mms {
        #[arg(long, default_value = "IMEX_BDF2")]
        scheme: Scheme,
    },
    /// List the available scenarios.
    ListScenarios,
}

/// Usage and configuration problems exit with 2, failed checks with 1.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::AssumptionViolated { .. } | Error::Cfl { .. } | Error::NonFinite { .. } | Error::NonFiniteTerm { .. } => 1,
        _ => 2,
    }
}

fn run(config: PathBuf) -> Result<bool, Error> {
    let cfg = ScenarioConfig::from_file(&config)?;
    let (manifest, report) = execute(&cfg)?;
    print!("{}", report.summary());
    println!("outputs in {}", cfg.output.dir.display());
    Ok(manifest.passed)
}

fn audit(model: &CoefficientModel, range: f64, samples: usize) -> Result<bool, Error> {
    let a = audit_assumptions(model, -range, range, samples)?;
    println!("model {} on [{}, {}], {} samples", model.name, -range, range, a.samples);
    println!("  lower-bound margin   {:.6e}", a.lower_bound_margin);
    println!("  growth margin        {:.6e}", a.growth_margin);
    println!("  ratio margin         {:.6e}", a.ratio_margin);
    println!("  max ratio            {:.6e}", a.max_ratio);
    println!("  derivative rel. err  {:.6e}", a.max_derivative_error);
    let grid = Grid::new(128, 64)?;
    let theta = RealField::from_fn(grid, |x, y| 0.8 * (PI * y).sin() * (1.0 + 0.2 * (2.0 * PI * x).cos()));
    let k = verify_kirchhoff_identities(&theta, model)?;
    println!(
        "  transform identities on 128x64: gradient {:.3e}, laplacian {:.3e}{}",
        k.max_rel_err_grad,
        k.max_rel_err_lap,
        if k.aliasing_suspected { " (aliasing suspected)" } else { "" }
    );
    Ok(true)
}

fn mms(scheme: Scheme) -> Result<bool, Error> {
    let study = MmsStudy {
        min_order: if scheme == Scheme::ImexBdf2 { 1.8 } else { 0.9 },
        ..MmsStudy::default()
    };
    let r = ManufacturedSolution::default().convergence(&study, scheme)?;
    print!("{}", r.table());
    println!("temporal {}, spatial {}", verdict(r.temporal_pass), verdict(r.spatial_pass));
    Ok(r.passed())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => run(config),
        Command::Audit {
            model,
            nu0,
            kappa0,
            a,
            b,
            c,
            d,
            range,
            samples,
        } => {
            let params = PresetParams { nu0, kappa0, a, b, c, d };
            CoefficientModel::preset(&model, &params).and_then(|m| audit(&m, range, samples))
        }
        Command::Mms { scheme } => mms(scheme),
        Command::ListScenarios => {
            for k in ScenarioKind::ALL {
                println!("{:<22} {}", k.name(), k.description());
            }
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
