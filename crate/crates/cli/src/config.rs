//! Experiment configuration, read from a TOML file.

use std::path::{Path, PathBuf};

use lrlab::bounds::NormRoute;
use lrlab::interactions::{ModelSpec, PerturbationSpec};
use lrlab::lppl::ObservableSpec;
use lrlab::spectral_flow::{GeneratorKind, Window};
use lrlab::LatticeSpec;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Measured commutators against every bound curve on random instances.
    LrVerify,
    /// Bound curves alone on an `(r, δt)` grid.
    BoundCurves,
    /// Spectral flow of a gapped family, optionally with the generator's decay envelope.
    SpectralFlow,
    /// Distance dependence of a local perturbation's effect on the gapped state.
    Lppl,
    /// Spin-chain commutators against the localization-trick curves.
    SpinCompare,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::LrVerify => "lr-verify",
            Self::BoundCurves => "bound-curves",
            Self::SpectralFlow => "spectral-flow",
            Self::Lppl => "lppl",
            Self::SpinCompare => "spin-compare",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub lattice: LatticeSpec,
    /// Fermion modes per site.
    #[serde(default = "one")]
    pub spin: usize,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub grid: Grids,
    #[serde(default)]
    pub bounds: BoundsOptions,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub flow: FlowOptions,
    #[serde(default)]
    pub lppl: Option<LpplOptions>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    #[serde(default = "default_alphas")]
    pub alpha: Vec<f64>,
    /// Overrides the default σ grids of the root-cone and iterated curves.
    #[serde(default)]
    pub sigma: Vec<f64>,
    /// Explicit elapsed times; when empty, `t_points` uniform steps up to `t_max`.
    #[serde(default)]
    pub times: Vec<f64>,
    /// Defaults to `2(1 + r)/v` per instance.
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default = "default_t_points")]
    pub t_points: usize,
    /// Largest distance tabulated by `bound-curves`; defaults to the lattice diameter.
    #[serde(default)]
    pub max_distance: Option<usize>,
    #[serde(default = "default_depth")]
    pub depth: usize,
    /// Samples of `s ∈ [0, 1]` for `lppl`, endpoints included.
    #[serde(default = "default_s_points")]
    pub s_points: usize,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            alpha: default_alphas(),
            sigma: Vec::new(),
            times: Vec::new(),
            t_max: None,
            t_points: default_t_points(),
            max_distance: None,
            depth: default_depth(),
            s_points: default_s_points(),
        }
    }
}

impl Grids {
    /// The time grid, falling back to `horizon` when no range was configured.
    pub fn times_or(&self, horizon: f64) -> Vec<f64> {
        if !self.times.is_empty() {
            return self.times.clone();
        }
        let top = self.t_max.unwrap_or(horizon);
        (1..=self.t_points).map(|j| top * j as f64 / self.t_points as f64).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveName {
    FiniteRange,
    FiniteRangeSharp,
    LongRange,
    RootCone,
    IteratedCertified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsOptions {
    /// Empty selects the experiment's default set.
    #[serde(default)]
    pub curves: Vec<CurveName>,
    #[serde(default = "exact_route")]
    pub route: NormRoute,
    #[serde(default = "one")]
    pub size_x: usize,
    #[serde(default = "one")]
    pub size_y: usize,
    /// Synthetic `‖Φ‖_{α,0}` for `bound-curves` without a model.
    #[serde(default)]
    pub norm0: Option<f64>,
    /// Synthetic `‖Φ‖_{α,1}`; defaults to `norm0`.
    #[serde(default)]
    pub norm1: Option<f64>,
}

impl Default for BoundsOptions {
    fn default() -> Self {
        Self { curves: Vec::new(), route: NormRoute::Exact, size_x: 1, size_y: 1, norm0: None, norm1: None }
    }
}

/// Which of the two observables is drawn from the even algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ParityChoice {
    /// One of the two at random.
    #[default]
    Either,
    AEven,
    BEven,
    BothEven,
    Neither,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    #[serde(default = "default_instances")]
    pub instances: usize,
    /// Range of the overall coupling of random interactions.
    #[serde(default = "default_coupling")]
    pub coupling: [f64; 2],
    #[serde(default)]
    pub parity: ParityChoice,
    /// Decay exponents of random spin chains, used round-robin.
    #[serde(default = "default_alpha_tb")]
    pub alpha_tb: Vec<f64>,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { instances: default_instances(), coupling: default_coupling(), parity: ParityChoice::Either, alpha_tb: default_alpha_tb() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowOptions {
    #[serde(default = "default_generators")]
    pub generators: Vec<GeneratorKind>,
    /// Filter gap `g`.
    #[serde(default = "unit")]
    pub g: f64,
    /// Points of the `s` grid, endpoints included.
    #[serde(default = "default_flow_grid")]
    pub grid: usize,
    /// Window width `δ` of the weight used for envelope extraction.
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "lowest_one")]
    pub window: Window,
    /// Also extract the local decomposition of the generator at `s = 0`.
    #[serde(default)]
    pub envelope: bool,
    /// First diameter of the envelope fit.
    #[serde(default = "default_fit_from")]
    pub fit_from: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { generators: default_generators(), g: 1.0, grid: default_flow_grid(), delta: 0.0, window: lowest_one(), envelope: false, fit_from: default_fit_from() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpplOptions {
    pub perturbation: PerturbationSpec,
    #[serde(default)]
    pub observable: ObservableSpec,
    #[serde(default = "lowest_one")]
    pub window: Window,
    #[serde(default = "unit")]
    pub min_gap: f64,
    #[serde(default = "default_fit_from")]
    pub fit_from: usize,
    #[serde(default)]
    pub energy_shift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed excess of a measured commutator over a bound.
    #[serde(default = "default_bound_slack")]
    pub bound_slack: f64,
    /// Largest accepted `‖P(s) − U(s)P(0)U(s)*‖`.
    #[serde(default = "default_flow")]
    pub flow: f64,
    /// Required upper limit on a fitted log-log slope, when set.
    #[serde(default)]
    pub max_slope: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { bound_slack: default_bound_slack(), flow: default_flow(), max_slope: None }
    }
}

fn one() -> usize {
    1
}
fn unit() -> f64 {
    1.0
}
fn default_alphas() -> Vec<f64> {
    vec![3.0]
}
fn default_t_points() -> usize {
    20
}
fn default_depth() -> usize {
    3
}
fn default_s_points() -> usize {
    2
}
fn exact_route() -> NormRoute {
    NormRoute::Exact
}
fn default_instances() -> usize {
    10
}
fn default_coupling() -> [f64; 2] {
    [0.2, 1.0]
}
fn default_alpha_tb() -> Vec<f64> {
    vec![2.0, 3.0, 4.0]
}
fn default_generators() -> Vec<GeneratorKind> {
    vec![GeneratorKind::Hastings, GeneratorKind::Kato]
}
fn default_flow_grid() -> usize {
    21
}
fn lowest_one() -> Window {
    Window::Lowest { count: 1 }
}
fn default_fit_from() -> usize {
    2
}
fn default_bound_slack() -> f64 {
    1e-9
}
fn default_flow() -> f64 {
    1e-6
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// The configuration with run-environment fields removed, as recorded in provenance.
    pub fn canonical(&self) -> Self {
        Self { threads: None, out: None, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ExperimentConfig::parse("experiment = \"lr-verify\"\n[lattice]\nfamily = \"path\"\nn = 5\n").unwrap();
        assert_eq!(c.lattice, LatticeSpec::Path { n: 5 });
        assert_eq!(c.grid.alpha, vec![3.0]);
        assert_eq!(c.sampling.instances, 10);
        assert_eq!(c.tolerances.bound_slack, 1e-9);
        assert_eq!(c.grid.times_or(2.0).len(), 20);
    }

    #[test]
    fn nested_models_parse() {
        let text = r#"
experiment = "spectral-flow"
[lattice]
family = "path"
n = 4
[model]
model = "interpolation"
[model.from]
model = "atomic_limit"
mu = 2.0
pattern = "staggered"
[model.to]
model = "atomic_limit"
mu = 2.0
j = 0.3
pattern = "staggered"
"#;
        let c = ExperimentConfig::parse(text).unwrap();
        match c.model.unwrap() {
            ModelSpec::Interpolation { to, .. } => assert!(matches!(*to, ModelSpec::AtomicLimit { j, .. } if j == 0.3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::parse("experiment = \"lppl\"\nbogus = 1\n[lattice]\nfamily = \"path\"\nn = 3\n").is_err());
    }
}
