//! Experiment configuration files.
//!
//! A config is a TOML document with a `kind`, an optional master `seed`,
//! `replicas` and `output`, and one table named after the kind:
//!
//! ```toml
//! kind = "cca1d"
//! seed = 7
//!
//! [cca1d]
//! width = 7
//! rule = "30-1"
//! mode = "display"
//! steps = 20
//! ```
//!
//! Every field of the kind's table has a default, so the table may be omitted.
//! Tables for other kinds are rejected.

use std::path::{Path, PathBuf};

use chemcomp::cca1d::{Mode, Rule1D};
use chemcomp::cca2d::PopulationParams;
use chemcomp::chemodel::{ChemModel1DParams, ChemModel2DParams};
use chemcomp::hybrid::{Consistency, SolverParams};
use chemcomp::qubo::ProblemSpec;
use chemcomp::signal::ClockMode;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Count,
    Cca1d,
    Cca2d,
    Solve,
    Markov,
    ClockDemo,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Count => "count",
            Kind::Cca1d => "cca1d",
            Kind::Cca2d => "cca2d",
            Kind::Solve => "solve",
            Kind::Markov => "markov",
            Kind::ClockDemo => "clock-demo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replicas: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<CountConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cca1d: Option<Cca1dConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cca2d: Option<Cca2dConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub markov: Option<MarkovConfig>,
    #[serde(
        default,
        rename = "clock-demo",
        skip_serializing_if = "Option::is_none"
    )]
    pub clock_demo: Option<ClockDemoConfig>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountConfig {
    /// Grid side.
    pub n: u32,
    /// Cell stirrer levels.
    pub p: u32,
    /// Interface stirrer levels.
    pub q: u32,
    /// Chemical states per cell.
    pub k: u32,
    /// Significant figures in the printed approximation.
    pub digits: usize,
}

impl Default for CountConfig {
    fn default() -> Self {
        CountConfig {
            n: 7,
            p: 4,
            q: 2,
            k: 2,
            digits: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Cca1dConfig {
    pub width: usize,
    pub periodic: bool,
    /// Label such as `30-1`.
    pub rule: String,
    pub mode: Mode,
    pub steps: usize,
    /// `center` for a single middle seed, or a string of `0`/`1` per cell.
    pub init: String,
    pub model: ChemModel1DParams,
}

impl Default for Cca1dConfig {
    fn default() -> Self {
        Cca1dConfig {
            width: 7,
            periodic: false,
            rule: "30-1".into(),
            mode: Mode::DisplayScreen,
            steps: 20,
            init: "center".into(),
            model: ChemModel1DParams::default(),
        }
    }
}

impl Cca1dConfig {
    pub fn rule(&self) -> Result<Rule1D> {
        self.rule
            .parse()
            .map_err(|e: chemcomp::Error| HarnessError::config("cca1d.rule", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Cca2dConfig {
    pub side: usize,
    pub initial_chemits: usize,
    pub steps: usize,
    /// Write class and chemical-state snapshots of replica 0 every this many
    /// steps; 0 disables them.
    pub snapshot_every: usize,
    /// Also write snapshots as PPM images.
    pub ppm: bool,
    /// Fraction of all cells made fluctuation cells each step.
    pub fluct_ratio: f64,
    pub model: ChemModel2DParams,
}

impl Default for Cca2dConfig {
    fn default() -> Self {
        Cca2dConfig {
            side: 50,
            initial_chemits: 10,
            steps: 2000,
            snapshot_every: 0,
            ppm: false,
            fluct_ratio: PopulationParams::default().fluct_ratio,
            model: ChemModel2DParams::default(),
        }
    }
}

impl Cca2dConfig {
    pub fn population(&self) -> PopulationParams {
        PopulationParams {
            model: self.model,
            fluct_ratio: self.fluct_ratio,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Type1,
    #[default]
    Type2,
}

/// Stopping target of a solve.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// The exhaustive minimum (problems of at most 24 variables).
    #[default]
    Oracle,
    /// Stop on patience only.
    None,
    Energy(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub solver: SolverKind,
    pub problem: ProblemSpec,
    pub target: Target,
    /// Initial spins as 0/1 per variable; random when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<u8>>,
    pub params: SolverParams,
    pub consistency: Consistency,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            solver: SolverKind::Type2,
            problem: ProblemSpec::Partition {
                numbers: vec![1, 3, 4, 8],
                a: 1.0,
            },
            target: Target::Oracle,
            init: None,
            params: SolverParams::default(),
            consistency: Consistency::Bernoulli,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarkovConfig {
    pub problem: ProblemSpec,
    pub p_chem: Vec<f64>,
    /// Proposals; `100 · n` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    pub bins: usize,
    /// Length of one sampled trajectory per index; 0 disables them.
    pub trajectory_steps: usize,
    /// Start of the sampled trajectories as 0/1 per variable; all zeros when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory_init: Option<Vec<u8>>,
}

impl Default for MarkovConfig {
    fn default() -> Self {
        MarkovConfig {
            problem: ProblemSpec::Partition {
                numbers: vec![1, 3, 4, 9, 3, 5, 3, 6],
                a: 1.0,
            },
            p_chem: vec![1.0, 0.99, 0.95, 0.5],
            horizon: None,
            bins: 10,
            trajectory_steps: 0,
            trajectory_init: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClockDemoConfig {
    pub cells: usize,
    pub mode: ClockMode,
    pub period_frames: usize,
    pub jitter: usize,
    /// Per-frame probability of a mislabelled colour.
    pub noise: f64,
    pub cycles: usize,
    pub confirm_tocks: u32,
}

impl Default for ClockDemoConfig {
    fn default() -> Self {
        ClockDemoConfig {
            cells: 7,
            mode: ClockMode::OneD,
            period_frames: 12,
            jitter: 0,
            noise: 0.0,
            cycles: 20,
            confirm_tocks: 2,
        }
    }
}

impl ExperimentConfig {
    /// Defaults for `kind`.
    pub fn new(kind: Kind) -> Self {
        let mut c = ExperimentConfig {
            kind,
            seed: 0,
            replicas: 1,
            output: None,
            count: None,
            cca1d: None,
            cca2d: None,
            solve: None,
            markov: None,
            clock_demo: None,
        };
        c.fill_section();
        c
    }

    /// Parse, reporting the field path of the first error.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            HarnessError::config(path, e.into_inner().message().trim().to_string())
        })?;
        cfg.fill_section();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn fill_section(&mut self) {
        match self.kind {
            Kind::Count => {
                self.count.get_or_insert_with(Default::default);
            }
            Kind::Cca1d => {
                self.cca1d.get_or_insert_with(Default::default);
            }
            Kind::Cca2d => {
                self.cca2d.get_or_insert_with(Default::default);
            }
            Kind::Solve => {
                self.solve.get_or_insert_with(Default::default);
            }
            Kind::Markov => {
                self.markov.get_or_insert_with(Default::default);
            }
            Kind::ClockDemo => {
                self.clock_demo.get_or_insert_with(Default::default);
            }
        }
    }

    /// Kind-specific checks that the type system does not cover.
    pub fn validate(&self) -> Result<()> {
        let present = [
            (Kind::Count, self.count.is_some()),
            (Kind::Cca1d, self.cca1d.is_some()),
            (Kind::Cca2d, self.cca2d.is_some()),
            (Kind::Solve, self.solve.is_some()),
            (Kind::Markov, self.markov.is_some()),
            (Kind::ClockDemo, self.clock_demo.is_some()),
        ];
        for (k, there) in present {
            if there && k != self.kind {
                return Err(HarnessError::config(
                    k.name(),
                    format!("table does not apply to kind `{}`", self.kind.name()),
                ));
            }
        }
        if self.replicas == 0 {
            return Err(HarnessError::config("replicas", "must be at least 1"));
        }
        let bad = |path: &str, e: chemcomp::Error| HarnessError::config(path, e.to_string());
        match self.kind {
            Kind::Count => {
                let c = self.count.as_ref().expect("filled");
                if c.n == 0 || c.p == 0 || c.q == 0 || c.k == 0 {
                    return Err(HarnessError::config(
                        "count",
                        "n, p, q and k must be positive",
                    ));
                }
            }
            Kind::Cca1d => {
                let c = self.cca1d.as_ref().expect("filled");
                c.rule()?;
                if c.width == 0 {
                    return Err(HarnessError::config("cca1d.width", "must be positive"));
                }
                if c.init != "center"
                    && (c.init.len() != c.width || !c.init.chars().all(|ch| ch == '0' || ch == '1'))
                {
                    return Err(HarnessError::config(
                        "cca1d.init",
                        "expected `center` or one 0/1 character per cell",
                    ));
                }
                c.model.validate().map_err(|e| bad("cca1d.model", e))?;
            }
            Kind::Cca2d => {
                let c = self.cca2d.as_ref().expect("filled");
                c.population().validate().map_err(|e| bad("cca2d", e))?;
                if c.initial_chemits > c.side * c.side {
                    return Err(HarnessError::config(
                        "cca2d.initial_chemits",
                        "more Chemits than cells",
                    ));
                }
            }
            Kind::Solve => {
                let c = self.solve.as_ref().expect("filled");
                c.params.validate().map_err(|e| bad("solve.params", e))?;
                check_bits("solve.init", c.init.as_deref())?;
            }
            Kind::Markov => {
                let c = self.markov.as_ref().expect("filled");
                if c.p_chem.is_empty() {
                    return Err(HarnessError::config(
                        "markov.p_chem",
                        "needs at least one index",
                    ));
                }
                if let Some(p) = c.p_chem.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    return Err(HarnessError::config(
                        "markov.p_chem",
                        format!("{p} outside [0, 1]"),
                    ));
                }
                check_bits("markov.trajectory_init", c.trajectory_init.as_deref())?;
            }
            Kind::ClockDemo => {
                let c = self.clock_demo.as_ref().expect("filled");
                if c.cells == 0 {
                    return Err(HarnessError::config("clock-demo.cells", "must be positive"));
                }
                if c.period_frames < 4 {
                    return Err(HarnessError::config(
                        "clock-demo.period_frames",
                        "must be at least 4",
                    ));
                }
                if !(0.0..=1.0).contains(&c.noise) {
                    return Err(HarnessError::config("clock-demo.noise", "outside [0, 1]"));
                }
            }
        }
        Ok(())
    }
}

fn check_bits(path: &str, bits: Option<&[u8]>) -> Result<()> {
    if bits.is_some_and(|b| b.iter().any(|&v| v > 1)) {
        return Err(HarnessError::config(path, "values must be 0 or 1"));
    }
    Ok(())
}
