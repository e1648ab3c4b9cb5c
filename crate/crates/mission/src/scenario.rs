use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use skyweave_enactor::ModuleChange;
use skyweave_simworld::{ModuleSpec, WorldConfig};

/// A scenario directory holds `scenario.toml`, the world config and the
/// `.fsl` files it names.
///
/// ```toml
/// name = "patrol"
/// seed = 1
/// ticks = 2000
/// world = "world.toml"
/// spec = "patrol.fsl"
/// problem = "Old"
/// home = 0
///
/// [[steps]]
/// tick = 300
/// update = { problem = "Switch", ready_after = 10 }
///
/// [[steps]]
/// tick = 2000
/// assert = { check = "never", events = ["at.2"] }
/// ```
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default)]
    seed: u64,
    ticks: u64,
    world: String,
    spec: String,
    problem: String,
    #[serde(default)]
    home: Option<u32>,
    #[serde(default)]
    steps: Vec<StepFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepFile {
    tick: u64,
    #[serde(default)]
    update: Option<UpdateFile>,
    #[serde(default)]
    inject: Option<String>,
    #[serde(default)]
    upload: Option<ModuleSpec>,
    #[serde(default)]
    assert: Option<Check>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UpdateFile {
    problem: String,
    /// Defaults to the scenario's spec.
    #[serde(default)]
    spec: Option<String>,
    #[serde(default)]
    ready_after: u64,
    #[serde(default)]
    manifest: Vec<ChangeFile>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChangeFile {
    #[serde(default)]
    pub bind: Option<String>,
    #[serde(default)]
    pub unbind: Option<String>,
}

impl From<&ChangeFile> for ModuleChange {
    fn from(c: &ChangeFile) -> Self {
        ModuleChange { bind: c.bind.clone(), unbind: c.unbind.clone() }
    }
}

/// A property of a finished (or partial) run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum Check {
    /// None of `events` occurs inside the window.
    Never {
        events: Vec<String>,
        #[serde(default)]
        after: Vec<String>,
        #[serde(default)]
        before: Option<String>,
    },
    /// Only `cells` are visited inside the window.
    OnlyVisit {
        cells: Vec<u32>,
        #[serde(default)]
        after: Vec<String>,
        #[serde(default)]
        before: Option<String>,
    },
    /// Every cell of `region` is visited inside the window.
    Covered {
        region: String,
        #[serde(default)]
        after: Vec<String>,
        #[serde(default)]
        before: Option<String>,
    },
    /// Each of `events` occurs within the last `window` ticks.
    Recurs { events: Vec<String>, window: u64 },
    /// `fluent` has `value` whenever `at` is about to happen.
    Fluent { fluent: String, at: String, value: bool },
    Mode { mode: String },
    Fallbacks { count: usize },
    Bound { module: String },
}

#[derive(Clone, Debug)]
pub enum Action {
    Update { problem: String, spec: String, ready_after: u64, manifest: Vec<ModuleChange> },
    Inject(String),
    Upload(ModuleSpec),
    Assert(Check),
}

#[derive(Clone, Debug)]
pub struct Step {
    pub tick: u64,
    pub action: Action,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub ticks: u64,
    pub world: WorldConfig,
    pub spec: String,
    pub problem: String,
    /// Fallback flies here before landing; lands in place when absent.
    pub home: Option<u32>,
    pub steps: Vec<Step>,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}: {1}")]
    Toml(PathBuf, toml::de::Error),
    #[error("{0}: {1}")]
    World(PathBuf, skyweave_simworld::ConfigError),
    #[error("step {0}: {1}")]
    Step(usize, String),
}

fn read(p: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(p).map_err(|e| LoadError::Io(p.to_path_buf(), e))
}

impl Scenario {
    /// Reads `dir/scenario.toml` and everything it names.
    pub fn load(dir: &Path) -> Result<Scenario, LoadError> {
        let path = dir.join("scenario.toml");
        let f: ScenarioFile = toml::from_str(&read(&path)?).map_err(|e| LoadError::Toml(path.clone(), e))?;
        let wpath = dir.join(&f.world);
        let mut world = WorldConfig::parse(&read(&wpath)?).map_err(|e| LoadError::World(wpath, e))?;
        world.seed = f.seed;
        let spec = read(&dir.join(&f.spec))?;
        let mut steps = Vec::new();
        for (i, s) in f.steps.iter().enumerate() {
            let mut actions = Vec::new();
            if let Some(u) = &s.update {
                let text = match &u.spec {
                    Some(p) => read(&dir.join(p))?,
                    None => spec.clone(),
                };
                let manifest = u.manifest.iter().map(ModuleChange::from).collect();
                actions.push(Action::Update { problem: u.problem.clone(), spec: text, ready_after: u.ready_after, manifest });
            }
            if let Some(e) = &s.inject {
                actions.push(Action::Inject(e.clone()));
            }
            if let Some(m) = &s.upload {
                actions.push(Action::Upload(m.clone()));
            }
            if let Some(c) = &s.assert {
                actions.push(Action::Assert(c.clone()));
            }
            if actions.len() != 1 {
                return Err(LoadError::Step(i, "a step needs exactly one of update, inject, upload, assert".into()));
            }
            steps.push(Step { tick: s.tick, action: actions.pop().unwrap() });
        }
        let sc = Scenario { name: f.name, seed: f.seed, ticks: f.ticks, world, spec, problem: f.problem, home: f.home, steps };
        sc.check_timeline()?;
        Ok(sc)
    }

    /// Ticks must strictly increase and stay within the run.
    pub fn check_timeline(&self) -> Result<(), LoadError> {
        let mut last = None;
        for (i, s) in self.steps.iter().enumerate() {
            if last.is_some_and(|t| s.tick <= t) {
                return Err(LoadError::Step(i, "step ticks must strictly increase".into()));
            }
            if s.tick > self.ticks {
                return Err(LoadError::Step(i, format!("tick {} is past the end of the run", s.tick)));
            }
            last = Some(s.tick);
        }
        Ok(())
    }

    /// Adds a step keeping the timeline sorted; fails on a clash.
    pub fn insert_step(&mut self, step: Step) -> Result<(), LoadError> {
        let at = self.steps.partition_point(|s| s.tick < step.tick);
        self.steps.insert(at, step);
        self.check_timeline()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, scenario: &str) {
        std::fs::write(dir.join("scenario.toml"), scenario).unwrap();
        std::fs::write(dir.join("world.toml"), "[grid]\ncell_size = 10.0\nrows = 1\ncols = 2\n").unwrap();
        std::fs::write(dir.join("s.fsl"), "Move = grid(1, 2, 0).\n").unwrap();
    }

    fn tmp(name: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("skyweave-scenario-{name}-{}", std::process::id()));
        std::fs::create_dir_all(&d).unwrap();
        d
    }

    const HEAD: &str = "name = \"t\"\nseed = 5\nticks = 100\nworld = \"world.toml\"\nspec = \"s.fsl\"\nproblem = \"P\"\n";

    #[test]
    fn loads_steps() {
        let d = tmp("ok");
        write(&d, &format!("{HEAD}[[steps]]\ntick = 3\ninject = \"at.1\"\n[[steps]]\ntick = 9\nassert = {{ check = \"mode\", mode = \"running\" }}\n"));
        let s = Scenario::load(&d).unwrap();
        assert_eq!(s.world.seed, 5);
        assert_eq!(s.steps.len(), 2);
        assert!(matches!(&s.steps[1].action, Action::Assert(Check::Mode { mode }) if mode == "running"));
    }

    #[test]
    fn rejects_unordered_and_mixed_steps() {
        let d = tmp("bad");
        write(&d, &format!("{HEAD}[[steps]]\ntick = 3\ninject = \"at.1\"\n[[steps]]\ntick = 3\ninject = \"at.0\"\n"));
        assert!(matches!(Scenario::load(&d), Err(LoadError::Step(1, _))));
        write(&d, &format!("{HEAD}[[steps]]\ntick = 3\ninject = \"at.1\"\nupdate = {{ problem = \"U\" }}\n"));
        assert!(matches!(Scenario::load(&d), Err(LoadError::Step(0, _))));
    }
}
