//! Scenario files: INI-style `key = value` text in the sections below. Every
//! key is optional; missing keys take the listed defaults. Unknown sections
//! and keys are rejected.
//!
//! ```ini
//! [model]
//! gamma = 1            ; >= 0
//! kappa = quadratic    ; quadratic | triple_well
//! k = 1                ; > 0
//! mu1 = 1              ; well location for triple_well, > 0
//! c = 1                ; rate coefficient, > 0
//! p = 2                ; rate exponent, >= 2
//! theta_a = 0.1        ; threshold at zero, > 0
//! theta_b = 0          ; threshold growth, >= 0
//!
//! [grid]
//! n = 200              ; intervals, >= 8
//!
//! [time]
//! t_end = 100
//! rel_tol = 1e-8
//! abs_tol = 1e-8
//! eq_tol = 1e-10       ; stop once ||F|| < eq_tol
//! dt_max = 0.05
//! max_steps = 1000000
//!
//! [initial]
//! mu = cosine          ; zeros | constant | cosine | nodes
//! value = 0            ; for constant
//! amplitude = 0.5      ; for cosine: mu0(s) = amplitude * cos(pi s / 2)
//! nodes =              ; for nodes: n + 1 comma-separated values
//! mu_nat = 0
//!
//! [output]
//! directory = out
//! formats = svg        ; comma list of svg, modes (csv is always written)
//! snapshot_stride = 10
//!
//! [equilibria]
//! alpha_min = -1
//! alpha_max = 1
//! n_points = 101
//!
//! [spectrum]
//! alpha = 0
//!
//! [sweep]
//! gamma_min = 0
//! gamma_max = 4
//! n_points = 9
//! ```

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::{Ini, Properties};

use crate::constitutive::{ConstitutiveSet, Kappa, Rate, Threshold};
use crate::dynamics::{Model, ModelParams, RodState, SimulateOptions, Tolerances};
use crate::error::ConfigError;
use crate::grid::{Field, Grid, MIN_INTERVALS};

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "model",
        &["gamma", "kappa", "k", "mu1", "c", "p", "theta_a", "theta_b"],
    ),
    ("grid", &["n"]),
    (
        "time",
        &[
            "t_end",
            "rel_tol",
            "abs_tol",
            "eq_tol",
            "dt_max",
            "max_steps",
        ],
    ),
    ("initial", &["mu", "value", "amplitude", "nodes", "mu_nat"]),
    ("output", &["directory", "formats", "snapshot_stride"]),
    ("equilibria", &["alpha_min", "alpha_max", "n_points"]),
    ("spectrum", &["alpha"]),
    ("sweep", &["gamma_min", "gamma_max", "n_points"]),
];

/// `n` uniformly spaced values from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl SweepRange {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self, ConfigError> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(ConfigError::Bound {
                key: "range".into(),
                value: format!("{min},{max}"),
                bound: "finite min < max",
            });
        }
        if n < 2 {
            return Err(ConfigError::Bound {
                key: "range points".into(),
                value: n.to_string(),
                bound: "n >= 2",
            });
        }
        Ok(SweepRange { min, max, n })
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                if i + 1 == self.n {
                    self.max
                } else {
                    self.min + (self.max - self.min) * i as f64 / (self.n - 1) as f64
                }
            })
            .collect()
    }
}

impl FromStr for SweepRange {
    type Err = ConfigError;

    /// Parses `a,b,n`.
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let invalid = |reason: &str| ConfigError::Invalid {
            key: "range".into(),
            value: s.into(),
            reason: reason.into(),
        };
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(invalid("expected a,b,n"));
        }
        let min = parts[0]
            .parse::<f64>()
            .map_err(|_| invalid("bad lower end"))?;
        let max = parts[1]
            .parse::<f64>()
            .map_err(|_| invalid("bad upper end"))?;
        let n = parts[2]
            .parse::<usize>()
            .map_err(|_| invalid("bad point count"))?;
        SweepRange::new(min, max, n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCurvature {
    Zeros,
    Constant(f64),
    /// `amplitude * cos(pi s / 2)`
    Cosine(f64),
    Nodes(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConfig {
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub eq_tol: f64,
    pub dt_max: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub svg: bool,
    pub modes: bool,
    /// Every `snapshot_stride`-th record goes to `snapshots.csv` (the last one always does).
    pub snapshot_stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub gamma: f64,
    pub constitutive: ConstitutiveSet,
    pub n: usize,
    pub time: TimeConfig,
    pub initial: InitialCurvature,
    pub mu_nat: f64,
    pub output: OutputConfig,
    pub alpha_range: SweepRange,
    pub spectrum_alpha: f64,
    pub gamma_range: SweepRange,
}

struct Section<'a> {
    name: &'static str,
    props: Option<&'a Properties>,
}

impl<'a> Section<'a> {
    fn raw(&self, key: &str) -> Option<&'a str> {
        self.props.and_then(|p| p.get(key)).map(str::trim)
    }

    fn invalid(&self, key: &str, value: &str, reason: &str) -> ConfigError {
        ConfigError::Invalid {
            key: format!("{}.{key}", self.name),
            value: value.into(),
            reason: reason.into(),
        }
    }

    fn bound(&self, key: &str, value: impl ToString, bound: &'static str) -> ConfigError {
        ConfigError::Bound {
            key: format!("{}.{key}", self.name),
            value: value.to_string(),
            bound,
        }
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let Some(raw) = self.raw(key) else {
            return Ok(default);
        };
        let v: f64 = raw
            .parse()
            .map_err(|_| self.invalid(key, raw, "not a number"))?;
        if !v.is_finite() {
            return Err(self.invalid(key, raw, "must be finite"));
        }
        Ok(v)
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.f64(key, default)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.bound(key, v, "> 0"))
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|_| self.invalid(key, raw, "not a non-negative integer")),
        }
    }

    fn list(&self, key: &str) -> Vec<&'a str> {
        self.raw(key)
            .map(|s| {
                s.split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .collect()
            })
            .unwrap_or_default()
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        text.parse()
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.n).expect("n validated at parse")
    }

    pub fn model(&self) -> Model {
        let params =
            ModelParams::new(self.gamma, self.constitutive).expect("gamma validated at parse");
        Model::new(self.grid(), params)
    }

    pub fn initial_state(&self, grid: &Grid) -> RodState {
        let mu = match &self.initial {
            InitialCurvature::Zeros => grid.zeros(),
            InitialCurvature::Constant(c) => grid.sample(|_| *c),
            InitialCurvature::Cosine(a) => grid.sample(|s| a * (PI * s / 2.0).cos()),
            InitialCurvature::Nodes(v) => Field::new(v.clone()),
        };
        RodState::new(mu, self.mu_nat)
    }

    pub fn simulate_options(&self) -> SimulateOptions {
        SimulateOptions {
            t_end: self.time.t_end,
            tol: Tolerances {
                dt_max: self.time.dt_max,
                ..Tolerances::new(self.time.rel_tol, self.time.abs_tol).expect("validated at parse")
            },
            eq_tol: self.time.eq_tol,
            max_steps: self.time.max_steps,
            ..Default::default()
        }
    }

    fn from_ini(ini: &Ini) -> Result<Self, ConfigError> {
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if let Some((key, _)) = props.iter().next() {
                    return Err(ConfigError::UnknownKey {
                        section: "(none)".into(),
                        key: key.into(),
                    });
                }
                continue;
            };
            let Some((_, keys)) = SECTIONS.iter().find(|(s, _)| *s == name) else {
                return Err(ConfigError::UnknownSection(name.into()));
            };
            if let Some((key, _)) = props.iter().find(|(k, _)| !keys.contains(k)) {
                return Err(ConfigError::UnknownKey {
                    section: name.into(),
                    key: key.into(),
                });
            }
        }
        let section = |name: &'static str| Section {
            name,
            props: ini.section(Some(name)),
        };

        let model = section("model");
        let gamma = model.f64("gamma", 1.0)?;
        if gamma < 0.0 {
            return Err(model.bound("gamma", gamma, "gamma >= 0"));
        }
        let kappa = match model.raw("kappa").unwrap_or("quadratic") {
            "quadratic" => Kappa::quadratic(model.f64("k", 1.0)?)?,
            "triple_well" => Kappa::triple_well(model.f64("k", 1.0)?, model.f64("mu1", 1.0)?)?,
            other => {
                return Err(model.invalid("kappa", other, "expected quadratic or triple_well"))
            }
        };
        let rate = Rate::new(model.f64("c", 1.0)?, model.f64("p", 2.0)?)?;
        let threshold = Threshold::new(model.f64("theta_a", 0.1)?, model.f64("theta_b", 0.0)?)?;
        let constitutive = ConstitutiveSet::new(kappa, rate, threshold);

        let grid = section("grid");
        let n = grid.usize("n", 200)?;
        if n < MIN_INTERVALS {
            return Err(grid.bound("n", n, "n >= 8"));
        }

        let t = section("time");
        let time = TimeConfig {
            t_end: t.positive("t_end", 100.0)?,
            rel_tol: t.positive("rel_tol", 1e-8)?,
            abs_tol: t.positive("abs_tol", 1e-8)?,
            eq_tol: t.positive("eq_tol", 1e-10)?,
            dt_max: t.positive("dt_max", 0.05)?,
            max_steps: t.usize("max_steps", 1_000_000)?,
        };
        if time.max_steps == 0 {
            return Err(t.bound("max_steps", 0, "max_steps >= 1"));
        }

        let init = section("initial");
        let initial = match init.raw("mu").unwrap_or("cosine") {
            "zeros" => InitialCurvature::Zeros,
            "constant" => InitialCurvature::Constant(init.f64("value", 0.0)?),
            "cosine" => InitialCurvature::Cosine(init.f64("amplitude", 0.5)?),
            "nodes" => {
                let raw = init.list("nodes");
                let values = raw
                    .iter()
                    .map(|r| match r.parse::<f64>() {
                        Ok(v) if v.is_finite() => Ok(v),
                        _ => Err(init.invalid("nodes", r, "not a finite number")),
                    })
                    .collect::<Result<Vec<f64>, _>>()?;
                if values.len() != n + 1 {
                    return Err(init.bound(
                        "nodes",
                        format!("{} values", values.len()),
                        "one value per node (n + 1)",
                    ));
                }
                InitialCurvature::Nodes(values)
            }
            other => {
                return Err(init.invalid("mu", other, "expected zeros, constant, cosine or nodes"));
            }
        };
        let mu_nat = init.f64("mu_nat", 0.0)?;

        let out = section("output");
        let mut svg = out.raw("formats").is_none();
        let mut modes = false;
        for f in out.list("formats") {
            match f {
                "csv" => {}
                "svg" => svg = true,
                "modes" => modes = true,
                other => return Err(out.invalid("formats", other, "expected csv, svg or modes")),
            }
        }
        let snapshot_stride = out.usize("snapshot_stride", 10)?;
        if snapshot_stride == 0 {
            return Err(out.bound("snapshot_stride", 0, "snapshot_stride >= 1"));
        }
        let output = OutputConfig {
            directory: PathBuf::from(out.raw("directory").unwrap_or("out")),
            svg,
            modes,
            snapshot_stride,
        };

        let eq = section("equilibria");
        let alpha_range = SweepRange::new(
            eq.f64("alpha_min", -1.0)?,
            eq.f64("alpha_max", 1.0)?,
            eq.usize("n_points", 101)?,
        )?;
        let spectrum_alpha = section("spectrum").f64("alpha", 0.0)?;
        let sw = section("sweep");
        let gamma_range = SweepRange::new(
            sw.f64("gamma_min", 0.0)?,
            sw.f64("gamma_max", 4.0)?,
            sw.usize("n_points", 9)?,
        )?;
        if gamma_range.min < 0.0 {
            return Err(sw.bound("gamma_min", gamma_range.min, "gamma >= 0"));
        }

        Ok(ScenarioConfig {
            gamma,
            constitutive,
            n,
            time,
            initial,
            mu_nat,
            output,
            alpha_range,
            spectrum_alpha,
            gamma_range,
        })
    }
}

impl FromStr for ScenarioConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        // values never contain ';' or '#', so everything after one is a comment
        let stripped: String = text
            .lines()
            .map(|l| l.split([';', '#']).next().unwrap_or(""))
            .collect::<Vec<_>>()
            .join("\n");
        let ini = Ini::load_from_str_noescape(&stripped)
            .map_err(|e| ConfigError::Syntax(e.to_string()))?;
        ScenarioConfig::from_ini(&ini)
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        "".parse().expect("defaults are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ScenarioConfig::default();
        assert_eq!(c.gamma, 1.0);
        assert_eq!(c.n, 200);
        assert_eq!(c.constitutive, ConstitutiveSet::default());
        assert_eq!(c.initial, InitialCurvature::Cosine(0.5));
        assert!(c.output.svg && !c.output.modes);
        assert_eq!(c.time.eq_tol, 1e-10);
    }

    #[test]
    fn small_grid_names_the_bound() {
        let err = "[grid]\nn = 4\n".parse::<ScenarioConfig>().unwrap_err();
        assert!(err.to_string().contains("n >= 8"), "{err}");
    }

    #[test]
    fn zero_threshold_rejected() {
        let err = "[model]\ntheta_a = 0\n"
            .parse::<ScenarioConfig>()
            .unwrap_err();
        assert!(matches!(err, ConfigError::Constitutive(_)));
        assert!(err.to_string().contains("inf theta > 0"), "{err}");
    }

    #[test]
    fn unknown_keys_and_sections_rejected() {
        assert!(matches!(
            "[model]\ngama = 1\n".parse::<ScenarioConfig>(),
            Err(ConfigError::UnknownKey { .. })
        ));
        assert!(matches!(
            "[modle]\ngamma = 1\n".parse::<ScenarioConfig>(),
            Err(ConfigError::UnknownSection(_))
        ));
        assert!(matches!(
            "gamma = 1\n".parse::<ScenarioConfig>(),
            Err(ConfigError::UnknownKey { .. })
        ));
    }

    #[test]
    fn rejects_non_finite_and_non_positive_tolerances() {
        assert!("[model]\ngamma = nan\n".parse::<ScenarioConfig>().is_err());
        assert!("[model]\ngamma = -1\n".parse::<ScenarioConfig>().is_err());
        assert!("[time]\nrel_tol = 0\n".parse::<ScenarioConfig>().is_err());
        assert!("[time]\nabs_tol = -1e-9\n"
            .parse::<ScenarioConfig>()
            .is_err());
    }

    #[test]
    fn parses_full_scenario() {
        let text = "\
[model]
gamma = 4
kappa = triple_well
k = 2
mu1 = 0.5
c = 3
p = 3
theta_a = 0.2
theta_b = 0.1
[grid]
n = 8
[initial]
mu = nodes
nodes = 0, 1, 2, 3, 4, 5, 6, 7, 8
mu_nat = 0.25
[output]
directory = runs/a
formats = csv, modes
";
        let c: ScenarioConfig = text.parse().unwrap();
        assert_eq!(c.constitutive.kappa, Kappa::triple_well(2.0, 0.5).unwrap());
        assert_eq!(c.constitutive.rate, Rate::new(3.0, 3.0).unwrap());
        assert_eq!(c.constitutive.threshold, Threshold::new(0.2, 0.1).unwrap());
        let s = c.initial_state(&c.grid());
        assert_eq!(s.mu[8], 8.0);
        assert_eq!(s.mu_nat, 0.25);
        assert!(!c.output.svg && c.output.modes);
        assert_eq!(c.output.directory, PathBuf::from("runs/a"));
    }

    #[test]
    fn documented_schema_parses() {
        let doc = include_str!("config.rs")
            .lines()
            .skip_while(|l| !l.starts_with("//! ```ini"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start())
            .collect::<Vec<_>>()
            .join("\n");
        let c: ScenarioConfig = doc.parse().unwrap();
        assert_eq!(c, ScenarioConfig::default());
    }

    #[test]
    fn node_count_must_match_grid() {
        let err = "[grid]\nn = 8\n[initial]\nmu = nodes\nnodes = 1, 2\n"
            .parse::<ScenarioConfig>()
            .unwrap_err();
        assert!(err.to_string().contains("n + 1"), "{err}");
    }

    #[test]
    fn sweep_range_parsing() {
        let r: SweepRange = "-0.5, 0.5, 3".parse().unwrap();
        assert_eq!(r.values(), vec![-0.5, 0.0, 0.5]);
        assert!("1,0,3".parse::<SweepRange>().is_err());
        assert!("0,1,1".parse::<SweepRange>().is_err());
        assert!("0,1".parse::<SweepRange>().is_err());
    }
}
