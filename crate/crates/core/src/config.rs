//! Experiment configuration: flat `block.key = value` lines.
//!
//! ```text
//! # doubling map, rare perturbations
//! map.kind = doubling
//! perturbation.kind = R
//! perturbation.epsilon = 0.01
//! perturbation.D = 1
//! perturbation.window = 100000
//! perturbation.seed = 42
//! run.task = shadow
//! ```
//!
//! Blank lines and text after `#` are ignored. Every key may appear once.
//! Unknown keys are rejected so that typos do not silently fall back to
//! defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gluing::GluePolicy;
use crate::maps::{HyperbolicAffine2D, Map, NeutralMap, PiecewiseBijectiveMap, PiecewiseLinearMap, TorusLinearMap};
use crate::perturbation::{PerturbationKind, PerturbationSpec};
use crate::roots::ROOT_TOL;
use crate::shadowing::MergeMethod;
use crate::GAP_THRESHOLD;

const KNOWN_KEYS: &[&str] = &[
    "map.kind",
    "map.a",
    "map.b",
    "map.c",
    "map.alpha",
    "map.lambda1",
    "map.lambda2",
    "map.e1",
    "map.e2",
    "map.offset",
    "map.matrix",
    "perturbation.kind",
    "perturbation.epsilon",
    "perturbation.D",
    "perturbation.window",
    "perturbation.neg_window",
    "perturbation.seed",
    "run.task",
    "run.output",
    "run.method",
    "tolerance.root",
    "tolerance.defect",
    "tolerance.gap_threshold",
    "glue.x0",
    "glue.y0",
    "glue.back_len",
    "glue.fwd_len",
    "glue.x_path",
    "glue.policy",
    "rates.pairs",
    "lemmas.alphas",
    "lemmas.R",
    "lemmas.n_max",
    "envelope.blocks",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Glue,
    Shadow,
    Rates,
    Lemmas,
    Envelope,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Glue => "glue",
            Task::Shadow => "shadow",
            Task::Rates => "rates",
            Task::Lemmas => "lemmas",
            Task::Envelope => "envelope",
        }
    }

    fn needs_seed(self) -> bool {
        matches!(self, Task::Shadow | Task::Rates)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "glue" => Task::Glue,
            "shadow" => Task::Shadow,
            "rates" => Task::Rates,
            "lemmas" => Task::Lemmas,
            "envelope" => Task::Envelope,
            _ => return Err(format!("unknown task '{s}' (glue, shadow, rates, lemmas, envelope)")),
        })
    }
}

/// Branch choice when pulling the initial point of `x` back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XPath {
    /// Always the first branch.
    Left,
    /// Always the last branch.
    Right,
    /// Branches drawn from the seeded generator.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub root: f64,
    pub defect: f64,
    pub gap_threshold: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            root: ROOT_TOL,
            defect: 1e-10,
            gap_threshold: GAP_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlueConfig {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub back_len: usize,
    pub fwd_len: usize,
    pub x_path: XPath,
    pub policy: GluePolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaConfig {
    pub alphas: Vec<f64>,
    pub r: f64,
    pub n_max: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub map: Map,
    pub task: Task,
    pub output: Option<PathBuf>,
    pub method: MergeMethod,
    pub perturbation: Option<PerturbationSpec>,
    pub seed: Option<u64>,
    pub tolerances: Tolerances,
    pub glue: GlueConfig,
    pub rate_pairs: usize,
    pub lemmas: LemmaConfig,
    pub envelope_blocks: u64,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw = Raw::parse(text)?;
        raw.build()
    }

    /// Replaces the seed (used for `--seed`).
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        if let Some(p) = self.perturbation.as_mut() {
            p.seed = seed;
        }
        self
    }
}

/// Parsed but untyped key/value pairs with their line numbers.
struct Raw {
    entries: BTreeMap<String, (usize, String)>,
}

fn cfg_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

impl Raw {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, full) in text.lines().enumerate() {
            let line = i + 1;
            let content = full.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| cfg_err(line, format!("expected 'block.key = value', got '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KNOWN_KEYS.contains(&key) {
                return Err(cfg_err(line, format!("unknown key '{key}'")));
            }
            if value.is_empty() {
                return Err(cfg_err(line, format!("empty value for '{key}'")));
            }
            if let Some((prev, _)) = entries.get(key) {
                return Err(cfg_err(
                    line,
                    format!("duplicate key '{key}' (first set on line {prev})"),
                ));
            }
            entries.insert(key.to_string(), (line, value.to_string()));
        }
        Ok(Raw { entries })
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.0)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| cfg_err(*line, format!("bad value '{v}' for '{key}': {e}"))),
        }
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?.ok_or_else(|| Error::ConfigMissing(key.to_string()))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| cfg_err(*line, format!("bad number '{}' in '{key}': {e}", s.trim())))
                })
                .collect::<Result<Vec<f64>>>()
                .map(Some),
        }
    }

    fn vec2(&self, key: &str, default: [f64; 2]) -> Result<[f64; 2]> {
        match self.list(key)? {
            None => Ok(default),
            Some(v) if v.len() == 2 => Ok([v[0], v[1]]),
            Some(_) => Err(cfg_err(
                self.line_of(key),
                format!("'{key}' needs two comma-separated numbers"),
            )),
        }
    }

    /// Re-tags a construction error with the line of the block's kind.
    fn at<T>(&self, key: &str, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            Error::InvalidParameters(m) => cfg_err(self.line_of(key), m),
            other => other,
        })
    }

    fn build_map(&self, root_tol: f64) -> Result<Map> {
        let kind: String = self.require("map.kind")?;
        let map = match kind.as_str() {
            "doubling" => Map::from(PiecewiseLinearMap::doubling()),
            "piecewise_linear" => {
                let a = self.require("map.a")?;
                let b = self.require("map.b")?;
                let c = self.require("map.c")?;
                Map::from(self.at("map.kind", PiecewiseLinearMap::new(a, b, c))?)
            }
            "neutral" => {
                let alpha = self.require("map.alpha")?;
                let c = self.get("map.c")?.unwrap_or(0.5);
                Map::from(self.at("map.kind", NeutralMap::with_tolerance(alpha, c, root_tol))?)
            }
            "affine" => {
                let l1 = self.require("map.lambda1")?;
                let l2 = self.require("map.lambda2")?;
                let e1 = self.vec2("map.e1", [1.0, 0.0])?;
                let e2 = self.vec2("map.e2", [0.0, 1.0])?;
                let off = self.vec2("map.offset", [0.0, 0.0])?;
                Map::from(self.at("map.kind", HyperbolicAffine2D::new(l1, l2, e1, e2, off))?)
            }
            "torus" => {
                let m = match self.list("map.matrix")? {
                    None => [[2, 1], [1, 1]],
                    Some(v) if v.len() == 4 && v.iter().all(|x| x.fract() == 0.0) => {
                        [[v[0] as i64, v[1] as i64], [v[2] as i64, v[3] as i64]]
                    }
                    Some(_) => return Err(cfg_err(self.line_of("map.matrix"), "map.matrix needs four integers")),
                };
                Map::from(self.at("map.matrix", TorusLinearMap::new(m))?)
            }
            other => {
                return Err(cfg_err(
                    self.line_of("map.kind"),
                    format!("unknown map kind '{other}' (doubling, piecewise_linear, neutral, affine, torus)"),
                ))
            }
        };
        Ok(map)
    }

    fn build(self) -> Result<ExperimentConfig> {
        let task: Task = self.require("run.task")?;
        let mut tolerances = Tolerances::default();
        if let Some(v) = self.get("tolerance.root")? {
            tolerances.root = v;
        }
        if let Some(v) = self.get("tolerance.defect")? {
            tolerances.defect = v;
        }
        if let Some(v) = self.get("tolerance.gap_threshold")? {
            tolerances.gap_threshold = v;
        }
        let map = self.build_map(tolerances.root)?;
        let seed: Option<u64> = self.get("perturbation.seed")?;
        if task.needs_seed() && seed.is_none() {
            return Err(Error::ConfigMissing("perturbation.seed".into()));
        }
        let perturbation = if task == Task::Shadow {
            let kind: PerturbationKind = self.require("perturbation.kind")?;
            let eps = self.require("perturbation.epsilon")?;
            let d = self.get("perturbation.D")?.unwrap_or(1.0);
            let window = self.require("perturbation.window")?;
            let neg = self.get("perturbation.neg_window")?.unwrap_or(0);
            let spec = PerturbationSpec::new(kind, eps, d, seed.unwrap_or_default(), window).with_neg_len(neg);
            self.at("perturbation.kind", spec.validate())?;
            Some(spec)
        } else {
            None
        };
        let method = match self.get::<String>("run.method")?.as_deref() {
            None | Some("parallel") => MergeMethod::Parallel,
            Some("consecutive") => MergeMethod::Consecutive,
            Some(other) => {
                return Err(cfg_err(
                    self.line_of("run.method"),
                    format!("unknown method '{other}' (parallel, consecutive)"),
                ))
            }
        };
        let dim = map.space().dim();
        let point = |key: &str, default: Vec<f64>| -> Result<Vec<f64>> {
            let v = self.list(key)?.unwrap_or(default);
            if v.len() != dim {
                return Err(cfg_err(self.line_of(key), format!("'{key}' needs {dim} coordinate(s)")));
            }
            Ok(v)
        };
        let x_path = match self.get::<String>("glue.x_path")?.as_deref() {
            None | Some("left") => XPath::Left,
            Some("right") => XPath::Right,
            Some("random") => XPath::Random,
            Some(other) => {
                return Err(cfg_err(
                    self.line_of("glue.x_path"),
                    format!("unknown path '{other}' (left, right, random)"),
                ))
            }
        };
        if x_path == XPath::Random && seed.is_none() {
            return Err(Error::ConfigMissing("perturbation.seed".into()));
        }
        let policy = match self.get::<String>("glue.policy")?.as_deref() {
            None | Some("strict") => GluePolicy::Strict,
            Some("nearest") => GluePolicy::NearestPreimage,
            Some(other) => {
                return Err(cfg_err(
                    self.line_of("glue.policy"),
                    format!("unknown policy '{other}' (strict, nearest)"),
                ))
            }
        };
        let glue = GlueConfig {
            x0: point("glue.x0", vec![0.3; dim])?,
            y0: point("glue.y0", vec![0.4; dim])?,
            back_len: self.get("glue.back_len")?.unwrap_or(40),
            fwd_len: self.get("glue.fwd_len")?.unwrap_or(40),
            x_path,
            policy,
        };
        let lemmas = LemmaConfig {
            alphas: self
                .list("lemmas.alphas")?
                .unwrap_or_else(|| vec![0.25, 0.5, 0.75, 1.0]),
            r: self.get("lemmas.R")?.unwrap_or(1.0),
            n_max: self.get("lemmas.n_max")?.unwrap_or(10_000),
        };
        Ok(ExperimentConfig {
            map,
            task,
            output: self.get::<String>("run.output")?.map(PathBuf::from),
            method,
            perturbation,
            seed,
            tolerances,
            glue,
            rate_pairs: self.get("rates.pairs")?.unwrap_or(10),
            lemmas,
            envelope_blocks: self.get("envelope.blocks")?.unwrap_or(2000),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_shadow_config() {
        let cfg = ExperimentConfig::parse(
            "# comment\nmap.kind = doubling\n\nperturbation.kind = R  # rare\nperturbation.epsilon = 0.01\n\
             perturbation.window = 1000\nperturbation.seed = 42\nrun.task = shadow\n",
        )
        .unwrap();
        assert_eq!(cfg.task, Task::Shadow);
        assert_eq!(cfg.map.kind(), "doubling");
        let p = cfg.perturbation.unwrap();
        assert_eq!(
            (p.kind, p.epsilon, p.seed, p.pos_len),
            (PerturbationKind::Rare, 0.01, 42, 1000)
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = ExperimentConfig::parse("run.task = glue\nmap.kind = doubling\nmap.colour = red\n").unwrap_err();
        assert_eq!(
            e,
            Error::Config {
                line: 3,
                message: "unknown key 'map.colour'".into()
            }
        );
        let e = ExperimentConfig::parse(
            "run.task = glue\nmap.kind = piecewise_linear\nmap.a = 0.5\nmap.b = 2\nmap.c = x\n",
        )
        .unwrap_err();
        assert!(matches!(e, Error::Config { line: 5, .. }), "{e:?}");
        let e = ExperimentConfig::parse("run.task = glue\nmap.kind = neutral\nmap.alpha = -1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }), "{e:?}");
        let e = ExperimentConfig::parse("run.task = glue\nrun.task = shadow\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }));
        let e = ExperimentConfig::parse("just text\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 1, .. }));
    }

    #[test]
    fn missing_seed_for_stochastic_task() {
        let e = ExperimentConfig::parse("run.task = rates\nmap.kind = doubling\n").unwrap_err();
        assert_eq!(e, Error::ConfigMissing("perturbation.seed".into()));
    }

    #[test]
    fn two_dimensional_points() {
        let cfg = ExperimentConfig::parse(
            "run.task = glue\nmap.kind = affine\nmap.lambda1 = 2\nmap.lambda2 = 0.5\nmap.e2 = 1,1\nglue.x0 = 0.1,0.2\n",
        )
        .unwrap();
        assert_eq!(cfg.glue.x0, vec![0.1, 0.2]);
        let e = ExperimentConfig::parse("run.task = glue\nmap.kind = torus\nglue.x0 = 0.1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 3, .. }));
    }

    #[test]
    fn seed_override() {
        let cfg = ExperimentConfig::parse(
            "map.kind = doubling\nperturbation.kind = U\nperturbation.epsilon = 0.01\nperturbation.window = 10\n\
             perturbation.seed = 1\nrun.task = shadow\n",
        )
        .unwrap()
        .with_seed(7);
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.perturbation.unwrap().seed, 7);
    }
}
