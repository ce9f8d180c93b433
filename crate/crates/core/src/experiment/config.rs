//! Experiment configuration.
//!
//! One TOML document describes a run. Every table is optional; omitted keys
//! take the defaults below. Example:
//!
//! ```toml
//! scenario = "entropy-scan"
//! seed = 7
//!
//! [[sources]]
//! kind = "bernoulli"
//! rho = [[0.75, 0.0], [0.0, 0.0], [0.0, 0.0], [0.25, 0.0]]
//!
//! [[sources]]
//! kind = "pauli-r"
//! a = 0.3
//! b = 0.05
//! c = 0.05
//!
//! [pom]
//! kind = "eigenbasis"
//!
//! [params]
//! n_max = 8
//!
//! [budget]
//! max_dim = 4096
//! ```

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::measurement::Pom;
use crate::sources::{Budget, DensityMatrix, FamilySpec, SourceFamily};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Consistency,
    Positivity,
    EntropyScan,
    BoundCheck,
    Aep,
    Ergodicity,
    CertifyAppendix,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Consistency,
        Scenario::Positivity,
        Scenario::EntropyScan,
        Scenario::BoundCheck,
        Scenario::Aep,
        Scenario::Ergodicity,
        Scenario::CertifyAppendix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Consistency => "consistency",
            Scenario::Positivity => "positivity",
            Scenario::EntropyScan => "entropy-scan",
            Scenario::BoundCheck => "bound-check",
            Scenario::Aep => "aep",
            Scenario::Ergodicity => "ergodicity",
            Scenario::CertifyAppendix => "certify-appendix",
        }
    }
}

/// Measurement used by the scenarios that need one.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PomSpec {
    /// Rank-one projectors onto the eigenvectors of `ρ`.
    #[default]
    Eigenbasis,
    Computational,
    /// `outcomes` copies of `I/outcomes`; defaults to `d` outcomes.
    Uniform {
        #[serde(default)]
        outcomes: Option<usize>,
    },
    /// Coordinate projectors onto groups of basis states.
    Groups { groups: Vec<Vec<usize>> },
    /// Row-major `[re, im]` entries, one list per operator.
    Explicit { operators: Vec<Vec<[f64; 2]>> },
    RandomProjective,
    RandomGeneric { outcomes: usize },
}

impl PomSpec {
    pub fn build<R: Rng + ?Sized>(&self, rho: &DensityMatrix, rng: &mut R) -> Result<Pom> {
        let d = rho.dim();
        match self {
            PomSpec::Eigenbasis => Pom::eigenbasis(rho),
            PomSpec::Computational => Ok(Pom::computational(d)),
            PomSpec::Uniform { outcomes } => {
                let r = outcomes.unwrap_or(d);
                if r == 0 {
                    return Err(Error::Config("uniform POM needs at least one outcome".into()));
                }
                Ok(Pom::uniform(d, r))
            }
            PomSpec::Groups { groups } => {
                let mut seen: Vec<usize> = groups.iter().flatten().copied().collect();
                seen.sort_unstable();
                if seen != (0..d).collect::<Vec<_>>() {
                    return Err(Error::Config(format!("POM groups must partition 0..{d}")));
                }
                Pom::coordinate_groups(d, groups)
            }
            PomSpec::Explicit { operators } => {
                let ops = operators
                    .iter()
                    .map(|pairs| {
                        if pairs.len() != d * d {
                            return Err(Error::Config(format!(
                                "POM operator needs {} [re, im] entries, found {}",
                                d * d,
                                pairs.len()
                            )));
                        }
                        ComplexMatrix::new(d, d, pairs.iter().map(|&[re, im]| C64::new(re, im)).collect())
                    })
                    .collect::<Result<Vec<_>>>()?;
                Pom::new(ops)
            }
            PomSpec::RandomProjective => Ok(Pom::random_projective(d, rng)),
            PomSpec::RandomGeneric { outcomes } => {
                if *outcomes == 0 {
                    return Err(Error::Config("random POM needs at least one outcome".into()));
                }
                Ok(Pom::random_generic(d, *outcomes, rng))
            }
        }
    }
}

/// Numeric knobs. Each scenario reads the subset it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub n_min: usize,
    pub n_max: usize,
    /// Block lengths for the typical-subspace scenario.
    pub aep_n: Vec<usize>,
    pub delta: f64,
    /// `None`: atypical mass plus `1e-9`.
    pub epsilon: Option<f64>,
    /// `None`: closed form where one exists, else `H_n^A / n`.
    pub h_ref: Option<f64>,
    /// Random observables per expectation check.
    pub trials: usize,
    /// Monte-Carlo message length and count; `samples = 0` skips it.
    pub message_len: usize,
    pub samples: usize,
    /// Allowed `|f_n − h|` for Monte-Carlo messages, and the fraction of
    /// messages allowed outside it.
    pub message_tolerance: f64,
    pub message_fraction: f64,
    /// Random (density, POM) pairs and Klein pairs in the bound check.
    pub pom_trials: usize,
    pub pom_dims: Vec<usize>,
    pub klein_pairs: usize,
    pub klein_dims: (usize, usize),
    /// Shift counts and window for the ergodicity probes.
    pub shifts: Vec<usize>,
    pub window: usize,
    pub classical_shifts: usize,
    pub factorization_trials: usize,
    pub a_grid: Vec<f64>,
    pub b_grid: Vec<f64>,
    pub c_grid: Vec<f64>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            n_min: 1,
            n_max: 6,
            aep_n: vec![12],
            delta: 0.1,
            epsilon: None,
            h_ref: None,
            trials: 50,
            message_len: 2000,
            samples: 0,
            message_tolerance: 0.02,
            message_fraction: 0.01,
            pom_trials: 200,
            pom_dims: vec![2, 3, 4],
            klein_pairs: 100,
            klein_dims: (2, 16),
            shifts: vec![4, 8, 12],
            window: 12,
            classical_shifts: 50,
            factorization_trials: 100,
            a_grid: vec![-0.3, 0.0, 0.3],
            b_grid: vec![-0.03, 0.01, 0.03],
            c_grid: vec![-0.03, 0.01, 0.03],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the subcommand when both are given.
    #[serde(default)]
    pub scenario: Option<Scenario>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sources: Vec<FamilySpec>,
    #[serde(default)]
    pub pom: PomSpec,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub budget: Budget,
    /// Output directory, relative to the working directory.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks every parameter the scenario reads and builds every source,
    /// before any block is allocated.
    pub fn validate(&self, scenario: Scenario) -> Result<Vec<SourceFamily>> {
        if let Some(s) = self.scenario {
            if s != scenario {
                return Err(Error::Config(format!(
                    "config is for scenario `{}`, not `{}`",
                    s.name(),
                    scenario.name()
                )));
            }
        }
        let p = &self.params;
        let fail = |msg: String| Err(Error::Config(msg));
        if self.budget.max_dim == 0 || self.budget.max_words == 0 {
            return fail("budgets must be positive".into());
        }
        let families = self
            .sources
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.build()
                    .map(|f| f.with_budget(self.budget))
                    .map_err(|e| Error::Config(format!("sources[{i}]: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let needs_range = matches!(
            scenario,
            Scenario::Consistency | Scenario::Positivity | Scenario::EntropyScan | Scenario::BoundCheck
        );
        if needs_range {
            if p.n_min == 0 || p.n_min > p.n_max {
                return fail(format!("need 1 <= n_min <= n_max, got {}..{}", p.n_min, p.n_max));
            }
            for f in &families {
                f.budget().check_dim(f.d(), p.n_max)?;
            }
        }
        match scenario {
            Scenario::Consistency if p.n_max < 2 => return fail("consistency needs n_max >= 2".into()),
            Scenario::EntropyScan if p.n_max < 2 => return fail("entropy-scan needs n_max >= 2".into()),
            Scenario::BoundCheck => {
                if p.pom_dims.is_empty() || p.pom_dims.iter().any(|&d| d < 2) {
                    return fail("pom_dims must be non-empty and >= 2".into());
                }
                if p.klein_dims.0 < 1 || p.klein_dims.0 > p.klein_dims.1 {
                    return fail("klein_dims must be an increasing pair".into());
                }
            }
            Scenario::Aep => {
                if !(p.delta > 0.0) {
                    return fail(format!("delta must be > 0, got {}", p.delta));
                }
                if let Some(e) = p.epsilon {
                    if !(e > 0.0 && e < 1.0) {
                        return fail(format!("epsilon must lie in (0, 1), got {e}"));
                    }
                }
                if p.aep_n.is_empty() || p.aep_n.contains(&0) {
                    return fail("aep_n must list block lengths >= 1".into());
                }
                if p.samples > 0 && p.message_len == 0 {
                    return fail("message_len must be >= 1".into());
                }
                for f in &families {
                    for &n in &p.aep_n {
                        f.budget().check_words(f.d(), n)?;
                    }
                }
            }
            Scenario::Ergodicity => {
                if p.shifts.is_empty() || p.shifts.contains(&0) {
                    return fail("shifts must list counts >= 1".into());
                }
                if p.shifts.iter().any(|&n| n > p.window) {
                    return fail(format!("every shift count must fit the window of {}", p.window));
                }
                if p.classical_shifts == 0 {
                    return fail("classical_shifts must be >= 1".into());
                }
                for f in &families {
                    f.budget().check_dim(f.d(), p.window)?;
                }
            }
            Scenario::CertifyAppendix => {
                if p.n_max < 2 {
                    return fail("certify-appendix needs n_max >= 2".into());
                }
                if let Some(a) = p.a_grid.iter().find(|a| !(a.abs() < 1.0)) {
                    return fail(format!("a_grid entries need |a| < 1, got {a}"));
                }
                self.budget.check_dim(2, p.n_max)?;
            }
            _ => {}
        }
        Ok(families)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(c.params, Params::default());
        assert_eq!(c.pom, PomSpec::Eigenbasis);
        assert_eq!(c.budget, Budget::default());
    }

    #[test]
    fn parses_sources_and_pom() {
        let c = ExperimentConfig::from_toml(
            r#"
            scenario = "aep"
            seed = 3
            [[sources]]
            kind = "pauli-r"
            a = 0.3
            b = 0.05
            c = 0.05
            [pom]
            kind = "uniform"
            outcomes = 3
            [params]
            aep_n = [8]
            [budget]
            max_dim = 256
            "#,
        )
        .unwrap();
        assert_eq!(c.scenario, Some(Scenario::Aep));
        assert_eq!(c.pom, PomSpec::Uniform { outcomes: Some(3) });
        assert_eq!(c.budget.max_words, 1 << 20);
        assert_eq!(c.validate(Scenario::Aep).unwrap().len(), 1);
        assert!(c.validate(Scenario::Consistency).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_toml("unknown = 1").is_err());
        assert!(ExperimentConfig::from_toml("[params]\nn_max = \"x\"").is_err());
        let c = ExperimentConfig::from_toml("[params]\nn_min = 5\nn_max = 3").unwrap();
        assert!(c.validate(Scenario::EntropyScan).is_err());
        let c = ExperimentConfig::from_toml("[[sources]]\nkind = \"pauli-r\"\na = 0.3").unwrap();
        assert!(matches!(c.validate(Scenario::Positivity), Err(Error::Config(_))));
        let c = ExperimentConfig::from_toml(
            "[[sources]]\nkind = \"pauli-r\"\na = 0.0\nb = 0.0\nc = 0.0\n[params]\nn_max = 13",
        )
        .unwrap();
        assert!(matches!(c.validate(Scenario::Positivity), Err(Error::BudgetExceeded { .. })));
    }
}
