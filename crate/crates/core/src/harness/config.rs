//! Experiment configuration: a flat `key = value` file whose entries can be
//! overridden one by one (the CLI applies its flags after the file).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "WINGVOL_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    BsSanity,
    ParetoWing,
    Substitute,
    Symmetry,
    ModelWing,
    LeeIndex,
    RvSuite,
    Validate,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::BsSanity,
        Scenario::ParetoWing,
        Scenario::Substitute,
        Scenario::Symmetry,
        Scenario::ModelWing,
        Scenario::LeeIndex,
        Scenario::RvSuite,
        Scenario::Validate,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Scenario::BsSanity => "bs-sanity",
            Scenario::ParetoWing => "pareto-wing",
            Scenario::Substitute => "substitute",
            Scenario::Symmetry => "symmetry",
            Scenario::ModelWing => "model-wing",
            Scenario::LeeIndex => "lee-index",
            Scenario::RvSuite => "rv-suite",
            Scenario::Validate => "validate",
        }
    }

    /// Default strike ladder in `log K`.
    pub fn default_ladder(self) -> Ladder {
        let (start, end, count) = match self {
            Scenario::BsSanity => (10.0, 80.0, 8),
            Scenario::ParetoWing => (10.0, 40.0, 16),
            Scenario::Substitute => (10.0, 80.0, 8),
            Scenario::Symmetry => (-4.0, 4.0, 20),
            Scenario::ModelWing => (60.0, 200.0, 8),
            Scenario::LeeIndex => (2.0, 40.0, 24),
            Scenario::RvSuite => (10.0, 200.0, 20),
            Scenario::Validate => (0.0, 1.0, 8),
        };
        Ladder { start, end, count }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.tag() == s.trim())
            .ok_or_else(|| {
                let tags: Vec<&str> = Scenario::ALL.iter().map(|s| s.tag()).collect();
                Error::Config(format!("unknown scenario '{s}'; expected one of {}", tags.join(", ")))
            })
    }
}

/// Log-spaced strikes `K = e^{start} .. e^{end}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ladder {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Ladder {
    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.end.is_finite() && self.start < self.end) {
            return Err(Error::Config(format!(
                "ladder exponents must increase: start = {}, end = {}",
                self.start, self.end
            )));
        }
        if self.count < 8 {
            return Err(Error::Config(format!(
                "ladder.count = {} is too small; use at least 8 points",
                self.count
            )));
        }
        Ok(())
    }

    /// The exponents `log K`.
    pub fn log_strikes(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|i| self.start + (self.end - self.start) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub params: BTreeMap<String, String>,
    pub ladder: Ladder,
    /// Report path; defaults to `<scenario>.csv` in `$WINGVOL_OUT_DIR` or
    /// the working directory.
    pub output: Option<PathBuf>,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            params: BTreeMap::new(),
            ladder: scenario.default_ladder(),
            output: None,
            seed: 0,
        }
    }

    /// Parses `key = value` lines; `#` starts a comment. Keys `scenario`,
    /// `seed`, `output`, `ladder.start`, `ladder.end` and `ladder.count` are
    /// structural, everything else is a scenario parameter.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value', got '{line}'", n + 1)))?;
            entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        let scenario = entries
            .iter()
            .find(|(k, _)| k == "scenario")
            .ok_or_else(|| Error::Config("missing 'scenario = ...' entry".into()))?
            .1
            .parse()?;
        let mut cfg = Self::new(scenario);
        for (k, v) in entries {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets one entry, with the same keys as the file format.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("{key} = '{v}' is not a number")))
        };
        match key {
            "scenario" => {
                let sc: Scenario = value.parse()?;
                if sc != self.scenario {
                    self.scenario = sc;
                    self.ladder = sc.default_ladder();
                }
            }
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::Config(format!("seed = '{value}' is not an unsigned integer")))?
            }
            "output" => self.output = Some(PathBuf::from(value)),
            "ladder.start" => self.ladder.start = num(value)?,
            "ladder.end" => self.ladder.end = num(value)?,
            "ladder.count" => {
                self.ladder.count = value
                    .parse()
                    .map_err(|_| Error::Config(format!("ladder.count = '{value}' is not a count")))?
            }
            _ => {
                self.params.insert(key.to_string(), value.to_string());
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.ladder.validate()
    }

    pub fn f64_param(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("parameter {key} = '{v}' is not a number"))),
        }
    }

    pub fn str_param<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.params.get(key).map(String::as_str).unwrap_or(default)
    }

    /// Where the report goes.
    pub fn output_path(&self) -> PathBuf {
        if let Some(p) = &self.output {
            return p.clone();
        }
        let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_default();
        dir.join(format!("{}.csv", self.scenario))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let text = "# sanity run\nscenario = bs-sanity\nsigma = 0.25\nladder.count = 10\nseed = 7 # trailing\n";
        let mut c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.scenario, Scenario::BsSanity);
        assert_eq!(c.ladder.count, 10);
        assert_eq!(c.seed, 7);
        assert_eq!(c.f64_param("sigma", 0.2).unwrap(), 0.25);
        c.set("sigma", "0.3").unwrap();
        assert_eq!(c.f64_param("sigma", 0.2).unwrap(), 0.3);
        assert_eq!(c.f64_param("t", 1.0).unwrap(), 1.0);
    }

    #[test]
    fn errors_are_actionable() {
        assert!(matches!(ExperimentConfig::parse("sigma = 1"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::parse("scenario = nope"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::parse("scenario bs-sanity"), Err(Error::Config(_))));
        let mut c = ExperimentConfig::new(Scenario::BsSanity);
        c.set("ladder.count", "4").unwrap();
        assert!(c.validate().is_err());
        c.set("ladder.count", "8").unwrap();
        c.set("ladder.end", "5").unwrap();
        assert!(c.validate().is_err());
        assert!(c.set("seed", "-1").is_err());
    }

    #[test]
    fn ladder_points() {
        let l = Ladder { start: 10.0, end: 80.0, count: 8 };
        assert_eq!(l.log_strikes(), vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0]);
    }
}
