//! Scenario configuration files.
//!
//! One `section.key = value` assignment per line; `#` starts a comment.
//! Sections are `grid`, `model`, `stepper`, `initial`, `scenario` and
//! `output`. Unknown or repeated keys are errors. List values are comma
//! separated.
//!
//! ```text
//! scenario.name = overshoot_decay
//! grid.nx = 128
//! grid.ny = 64
//! model.preset = constant
//! model.kappa0 = 2
//! stepper.t_end = 5
//! initial.preset = overshoot
//! initial.theta_amplitude = 10
//! output.dir = out/overshoot
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::coefficients::{audit_assumptions, CoefficientModel, PresetParams};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::initial::{InitialPreset, InitialSpec};
use crate::stepper::{Scheme, StepperConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    MaxPrinciple,
    OvershootDecay,
    AbsorbingBall,
    UniformBounds,
    ContinuityLipschitz,
    AttractorProbe,
    MmsConvergence,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 7] = [
        ScenarioKind::MaxPrinciple,
        ScenarioKind::OvershootDecay,
        ScenarioKind::AbsorbingBall,
        ScenarioKind::UniformBounds,
        ScenarioKind::ContinuityLipschitz,
        ScenarioKind::AttractorProbe,
        ScenarioKind::MmsConvergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::MaxPrinciple => "max_principle",
            ScenarioKind::OvershootDecay => "overshoot_decay",
            ScenarioKind::AbsorbingBall => "absorbing_ball",
            ScenarioKind::UniformBounds => "uniform_bounds",
            ScenarioKind::ContinuityLipschitz => "continuity_lipschitz",
            ScenarioKind::AttractorProbe => "attractor_probe",
            ScenarioKind::MmsConvergence => "mms_convergence",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ScenarioKind::MaxPrinciple => "mesh overshoot of theta stays below tol_mp for data in [-1, 1]",
            ScenarioKind::OvershootDecay => "overshoot norms decay at least at rate 4(p-1)/p^2 kappa_min",
            ScenarioKind::AbsorbingBall => "L2 envelope of ||u|| and entry into the absorbing ball",
            ScenarioKind::UniformBounds => "higher norms stay bounded and forget the initial amplitude",
            ScenarioKind::ContinuityLipschitz => "growth of the H1 separation of nearby trajectories",
            ScenarioKind::AttractorProbe => "seeded ensemble settles into a common H2 ball",
            ScenarioKind::MmsConvergence => "temporal and spatial convergence on a manufactured solution",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSpec {
    pub preset: String,
    pub params: PresetParams,
}

impl ModelSpec {
    pub fn build(&self) -> Result<CoefficientModel> {
        CoefficientModel::preset(&self.preset, &self.params)
    }
}

/// Knobs read by individual scenarios; each ignores the ones it does not use.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioOptions {
    /// Mesh overshoot tolerance of the maximum principle.
    pub tol_mp: f64,
    /// Repeat the maximum-principle run on the doubled grid.
    pub check_doubling: bool,
    /// Start of the decay-rate fitting window.
    pub fit_start: f64,
    /// Relative tolerance of the L2 envelope.
    pub envelope_tol: f64,
    /// Initial velocity norms of the absorbing-ball runs; empty means
    /// `initial.amplitude` only.
    pub amplitudes: Vec<f64>,
    /// Velocity amplitude of the second uniform-bounds run; `None` means
    /// twice `initial.amplitude`.
    pub second_amplitude: Option<f64>,
    /// Relative plateau tolerance.
    pub plateau_tol: f64,
    /// Plateaus below this size count as equal.
    pub plateau_floor: f64,
    /// Length of the late-time window ending at `t_end`.
    pub plateau_window: f64,
    /// H1 sizes of the Lipschitz perturbations.
    pub deltas: Vec<f64>,
    /// Tolerance on the spread of the amplification ratios.
    pub ratio_tol: f64,
    /// Ensemble seeds of the attractor probe.
    pub seeds: Vec<u64>,
    /// Steps between the states kept for trajectory distances.
    pub sample_every: usize,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        ScenarioOptions {
            tol_mp: 1e-3,
            check_doubling: false,
            fit_start: 0.1,
            envelope_tol: 1e-2,
            amplitudes: Vec::new(),
            second_amplitude: None,
            plateau_tol: 0.1,
            plateau_floor: 1e-8,
            plateau_window: 5.0,
            deltas: vec![1e-6, 1e-7],
            ratio_tol: 0.1,
            seeds: vec![1, 2, 3, 4],
            sample_every: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Save the final state of every run as a checkpoint.
    pub checkpoint: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("bq-out"),
            checkpoint: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub nx: usize,
    pub ny: usize,
    pub model: ModelSpec,
    pub stepper: StepperConfig,
    pub record_every: usize,
    pub initial: InitialSpec,
    pub options: ScenarioOptions,
    pub output: OutputSpec,
}

impl ScenarioConfig {
    /// Defaults for everything but the scenario.
    pub fn new(scenario: ScenarioKind) -> Self {
        ScenarioConfig {
            scenario,
            nx: 64,
            ny: 32,
            model: ModelSpec {
                preset: "constant".into(),
                params: PresetParams::default(),
            },
            stepper: StepperConfig::default(),
            record_every: 10,
            initial: InitialSpec::default(),
            options: ScenarioOptions::default(),
            output: OutputSpec::default(),
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.nx, self.ny)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }

    /// Checks that the grid, stepper and model are usable and that the model
    /// satisfies its assumptions on the range the initial data can reach.
    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.stepper.validate()?;
        if self.record_every == 0 {
            return Err(Error::Config("stepper.record_every must be positive".into()));
        }
        let model = self.model.build()?;
        let reach = self.initial.theta_amplitude.abs().max(1.0) * 1.5;
        audit_assumptions(&model, -reach, reach, 601)?;
        let o = &self.options;
        for (key, v) in [
            ("tol_mp", o.tol_mp),
            ("envelope_tol", o.envelope_tol),
            ("plateau_tol", o.plateau_tol),
            ("plateau_window", o.plateau_window),
            ("ratio_tol", o.ratio_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("scenario.{key} must be positive, got {v}")));
            }
        }
        if o.deltas.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::Config("scenario.deltas must be positive".into()));
        }
        if o.sample_every == 0 {
            return Err(Error::Config("scenario.sample_every must be positive".into()));
        }
        Ok(())
    }
}

struct Entry {
    value: String,
    line: usize,
}

struct Assignments {
    entries: BTreeMap<String, Entry>,
}

impl Assignments {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line}: expected `section.key = value`")))?;
            let key = key.trim();
            let (section, name) = key
                .split_once('.')
                .ok_or_else(|| Error::Config(format!("line {line}: key `{key}` has no section")))?;
            if !["grid", "model", "stepper", "initial", "scenario", "output"].contains(&section) {
                return Err(Error::Config(format!("line {line}: unknown section `{section}`")));
            }
            if name.is_empty() {
                return Err(Error::Config(format!("line {line}: empty key in section `{section}`")));
            }
            let entry = Entry {
                value: value.trim().to_string(),
                line,
            };
            if let Some(prev) = entries.insert(key.to_string(), entry) {
                return Err(Error::Config(format!(
                    "line {line}: `{key}` already set on line {}",
                    prev.line
                )));
            }
        }
        Ok(Assignments { entries })
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        let Some(e) = self.entries.remove(key) else {
            return Ok(None);
        };
        e.value
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("line {}: cannot parse `{}` for `{key}`", e.line, e.value)))
    }

    fn set<T: FromStr>(&mut self, key: &str, slot: &mut T) -> Result<()> {
        if let Some(v) = self.take(key)? {
            *slot = v;
        }
        Ok(())
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(e) = self.entries.remove(key) else {
            return Ok(None);
        };
        e.value
            .split(',')
            .map(|item| {
                item.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("line {}: cannot parse `{}` in `{key}`", e.line, item.trim())))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    fn finish(self) -> Result<()> {
        match self.entries.iter().min_by_key(|(_, e)| e.line) {
            Some((key, e)) => Err(Error::Config(format!("line {}: unknown key `{key}`", e.line))),
            None => Ok(()),
        }
    }
}

impl FromStr for ScenarioConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut a = Assignments::parse(text)?;
        let scenario: ScenarioKind = a
            .take::<String>("scenario.name")?
            .ok_or_else(|| Error::Config("missing `scenario.name`".into()))?
            .parse()?;
        let mut c = ScenarioConfig::new(scenario);

        a.set("grid.nx", &mut c.nx)?;
        a.set("grid.ny", &mut c.ny)?;

        a.set("model.preset", &mut c.model.preset)?;
        let p = &mut c.model.params;
        p.nu0 = a.take("model.nu0")?;
        p.kappa0 = a.take("model.kappa0")?;
        p.a = a.take("model.a")?;
        p.b = a.take("model.b")?;
        p.c = a.take("model.c")?;
        p.d = a.take("model.d")?;

        a.set("stepper.dt", &mut c.stepper.dt)?;
        a.set("stepper.t_end", &mut c.stepper.t_end)?;
        if let Some(s) = a.take::<String>("stepper.scheme")? {
            c.stepper.scheme = s.parse::<Scheme>()?;
        }
        a.set("stepper.cfl_safety", &mut c.stepper.cfl_safety)?;
        a.set("stepper.adaptive", &mut c.stepper.adaptive)?;
        a.set("stepper.record_every", &mut c.record_every)?;

        if let Some(s) = a.take::<String>("initial.preset")? {
            c.initial.preset = s.parse::<InitialPreset>()?;
        }
        a.set("initial.amplitude", &mut c.initial.amplitude)?;
        a.set("initial.theta_amplitude", &mut c.initial.theta_amplitude)?;
        a.set("initial.seed", &mut c.initial.seed)?;

        let o = &mut c.options;
        a.set("scenario.tol_mp", &mut o.tol_mp)?;
        a.set("scenario.check_doubling", &mut o.check_doubling)?;
        a.set("scenario.fit_start", &mut o.fit_start)?;
        a.set("scenario.envelope_tol", &mut o.envelope_tol)?;
        if let Some(v) = a.list("scenario.amplitudes")? {
            o.amplitudes = v;
        }
        o.second_amplitude = a.take("scenario.second_amplitude")?;
        a.set("scenario.plateau_tol", &mut o.plateau_tol)?;
        a.set("scenario.plateau_floor", &mut o.plateau_floor)?;
        a.set("scenario.plateau_window", &mut o.plateau_window)?;
        if let Some(v) = a.list("scenario.deltas")? {
            o.deltas = v;
        }
        a.set("scenario.ratio_tol", &mut o.ratio_tol)?;
        if let Some(v) = a.list("scenario.seeds")? {
            o.seeds = v;
        }
        a.set("scenario.sample_every", &mut o.sample_every)?;

        a.set("output.dir", &mut c.output.dir)?;
        a.set("output.checkpoint", &mut c.output.checkpoint)?;

        a.finish()?;
        c.validate()?;
        Ok(c)
    }
}
