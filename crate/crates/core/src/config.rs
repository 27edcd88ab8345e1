//! Flat `key = value` run configuration.
//!
//! ```text
//! # desk-scale perturbation run
//! scenario = perturbation
//! dt = 0.02
//! dx = 0.02
//! dv = 0.02
//! L = 10
//! Q = 1
//! T = 8
//! R = 1
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{
    neutral_scenario, perturbation_scenario, steady_state_scenario, Scenario, SimConfig,
};
use crate::particles::ForceSign;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    SteadyState,
    Perturbation,
    Neutral,
}

impl ScenarioKind {
    pub fn build(self, cfg: &SimConfig) -> Scenario {
        match self {
            ScenarioKind::SteadyState => steady_state_scenario(),
            ScenarioKind::Perturbation => perturbation_scenario(cfg.dv, cfg.velocity_half_width),
            ScenarioKind::Neutral => neutral_scenario(cfg.dv, cfg.velocity_half_width),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioKind::SteadyState => "steady_state",
            ScenarioKind::Perturbation => "perturbation",
            ScenarioKind::Neutral => "neutral",
        })
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "steady_state" | "steady" => Ok(ScenarioKind::SteadyState),
            "perturbation" => Ok(ScenarioKind::Perturbation),
            "neutral" => Ok(ScenarioKind::Neutral),
            other => Err(format!(
                "unknown scenario `{other}` (expected steady_state, perturbation or neutral)"
            )),
        }
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub scenario: ScenarioKind,
    pub force_sign: ForceSign,
    /// Steps between field snapshots; 0 disables them.
    pub snapshot_stride: usize,
    pub output_dir: PathBuf,
    /// Keep stepping after the valid interval is exhausted.
    pub continue_past_exhaustion: bool,
    /// Half-width `I` of the fixed window `[-I, I]` monitored regardless of validity; defaults to `R`.
    pub monitor_half_width: Option<f64>,
}

const KEYS: [&str; 13] = [
    "scenario",
    "dt",
    "dx",
    "dv",
    "L",
    "Q",
    "T",
    "R",
    "force_sign",
    "snapshot_stride",
    "output_dir",
    "continue_past_exhaustion",
    "monitor_half_width",
];

impl RunConfig {
    pub fn new(sim: SimConfig, scenario: ScenarioKind) -> Self {
        RunConfig {
            sim,
            scenario,
            force_sign: ForceSign::Negative,
            snapshot_stride: 0,
            output_dir: PathBuf::from("output"),
            continue_past_exhaustion: false,
            monitor_half_width: None,
        }
    }

    /// Seconds-scale perturbation run: mesh 0.02, `L = 10`, `T = 8`.
    pub fn desk() -> Self {
        RunConfig::new(
            SimConfig::uniform(0.02, 10.0, 1.0, 8.0, 1.0),
            ScenarioKind::Perturbation,
        )
    }

    /// Full-size perturbation run: mesh 0.01, `L = 50`, `T = 30`.
    pub fn full() -> Self {
        RunConfig::new(
            SimConfig::uniform(0.01, 50.0, 1.0, 30.0, 1.0),
            ScenarioKind::Perturbation,
        )
    }

    /// Steady-state validation run on the coarsest table mesh.
    pub fn steady() -> Self {
        RunConfig::new(
            SimConfig::uniform(0.04, 2.0, 1.0, 0.48, 1.0),
            ScenarioKind::SteadyState,
        )
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(RunConfig::desk()),
            "full" => Ok(RunConfig::full()),
            "steady" => Ok(RunConfig::steady()),
            other => Err(Error::InvalidConfig(format!(
                "unknown preset `{other}` (expected desk, full or steady)"
            ))),
        }
    }

    pub fn monitor_half_width(&self) -> f64 {
        self.monitor_half_width
            .unwrap_or(self.sim.neutrality_radius)
    }

    pub fn build_scenario(&self) -> Scenario {
        self.scenario.build(&self.sim)
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        let i = self.monitor_half_width();
        if !(i.is_finite() && i >= 0.0 && i <= self.sim.half_length) {
            return Err(Error::InvalidConfig(format!(
                "monitor_half_width must lie in [0, L], got {i}"
            )));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }

    /// Renders the configuration in the format accepted by [`FromStr`].
    pub fn render(&self) -> String {
        let s = &self.sim;
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        line("scenario", self.scenario.to_string());
        line("dt", s.dt.to_string());
        line("dx", s.dx.to_string());
        line("dv", s.dv.to_string());
        line("L", s.half_length.to_string());
        line("Q", s.velocity_half_width.to_string());
        line("T", s.stop_time.to_string());
        line("R", s.neutrality_radius.to_string());
        line("force_sign", self.force_sign.to_string());
        line("snapshot_stride", self.snapshot_stride.to_string());
        line("output_dir", self.output_dir.display().to_string());
        line(
            "continue_past_exhaustion",
            self.continue_past_exhaustion.to_string(),
        );
        if let Some(i) = self.monitor_half_width {
            line("monitor_half_width", i.to_string());
        }
        out
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unknown key `{key}`"),
                });
            }
            if entries.insert(key, (line_no, value)).is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }

        let lookup = |key: &str| entries.get(key).copied();
        fn parse_value<T: FromStr>(key: &str, entry: (usize, &str)) -> Result<T>
        where
            T::Err: fmt::Display,
        {
            entry.1.parse::<T>().map_err(|e| Error::Parse {
                line: entry.0,
                message: format!("bad value for `{key}`: {e}"),
            })
        }
        let required = |key: &str| -> Result<f64> {
            let entry =
                lookup(key).ok_or_else(|| Error::InvalidConfig(format!("missing key `{key}`")))?;
            parse_value(key, entry)
        };

        let sim = SimConfig {
            dt: required("dt")?,
            dx: required("dx")?,
            dv: required("dv")?,
            half_length: required("L")?,
            velocity_half_width: required("Q")?,
            stop_time: required("T")?,
            neutrality_radius: required("R")?,
        };
        let scenario = match lookup("scenario") {
            Some(entry) => parse_value("scenario", entry)?,
            None => return Err(Error::InvalidConfig("missing key `scenario`".into())),
        };
        let mut cfg = RunConfig::new(sim, scenario);
        if let Some(entry) = lookup("force_sign") {
            cfg.force_sign = parse_value("force_sign", entry)?;
        }
        if let Some(entry) = lookup("snapshot_stride") {
            cfg.snapshot_stride = parse_value("snapshot_stride", entry)?;
        }
        if let Some(entry) = lookup("output_dir") {
            cfg.output_dir = PathBuf::from(entry.1);
        }
        if let Some(entry) = lookup("continue_past_exhaustion") {
            cfg.continue_past_exhaustion = parse_value("continue_past_exhaustion", entry)?;
        }
        if let Some(entry) = lookup("monitor_half_width") {
            cfg.monitor_half_width = Some(parse_value("monitor_half_width", entry)?);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
