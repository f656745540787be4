//! Solver strategies, registered by name and selected at runtime.
//!
//! Each algorithm kind (`tabular`, `wls_f1`, `wls_oracle`, `vwls`) is a
//! [`Solver`] behind a common interface that turns an [`AlgorithmSpec`] into
//! a sequence of checkpoints. Extra kinds can be added with
//! [`SolverRegistry::register`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::design::WeightingFunction;
use crate::error::{Error, Result};
use crate::linear_mdp::{oracle_weighting, LinearMdp};
use crate::mdvi::{
    tabular_mdvi, vwls_mdvi, vwls_sample_count, wls_mdvi, Checkpoint, SamplerMode, VwlsParams,
};
use crate::rng::{tag, Streams};

/// Sampling mode as written in configuration files.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    #[default]
    MonteCarlo,
    Exact,
}

fn default_alpha() -> f64 {
    0.9
}

fn default_m() -> usize {
    100
}

fn default_m_sigma() -> usize {
    100_000
}

fn default_eps_fw() -> f64 {
    0.01
}

/// One algorithm entry of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub label: String,
    pub kind: String,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M", default = "default_m")]
    pub m: usize,
    /// Defaults to `K`.
    #[serde(rename = "K_tilde", default)]
    pub k_tilde: Option<usize>,
    /// Defaults to `M`.
    #[serde(rename = "M_tilde", default)]
    pub m_tilde: Option<usize>,
    #[serde(rename = "M_sigma", default = "default_m_sigma")]
    pub m_sigma: usize,
    #[serde(default = "default_eps_fw")]
    pub eps_fw: f64,
    #[serde(default)]
    pub mode: ModeName,
}

impl AlgorithmSpec {
    pub fn new(label: impl Into<String>, kind: impl Into<String>, k: usize, m: usize) -> Self {
        Self {
            label: label.into(),
            kind: kind.into(),
            alpha: default_alpha(),
            k,
            m,
            k_tilde: None,
            m_tilde: None,
            m_sigma: default_m_sigma(),
            eps_fw: default_eps_fw(),
            mode: ModeName::MonteCarlo,
        }
    }

    pub fn sampler(&self) -> Result<SamplerMode> {
        match self.mode {
            ModeName::MonteCarlo => SamplerMode::monte_carlo(self.m),
            ModeName::Exact => Ok(SamplerMode::ExactExpectation),
        }
    }

    pub fn vwls_params(&self) -> VwlsParams {
        VwlsParams {
            alpha: self.alpha,
            k: self.k,
            m: self.m,
            k_tilde: self.k_tilde.unwrap_or(self.k),
            m_tilde: self.m_tilde.unwrap_or(self.m),
            m_sigma: self.m_sigma,
            eps_fw: self.eps_fw,
            exact: self.mode == ModeName::Exact,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.label.is_empty() {
            return Err(Error::invalid("algorithm label must not be empty"));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!(
                "{}: alpha must lie in [0, 1)",
                self.label
            )));
        }
        if self.k == 0 || self.m == 0 || self.m_sigma == 0 {
            return Err(Error::invalid(format!(
                "{}: K, M and M_sigma must be >= 1",
                self.label
            )));
        }
        if self.k_tilde == Some(0) || self.m_tilde == Some(0) {
            return Err(Error::invalid(format!(
                "{}: K_tilde and M_tilde must be >= 1",
                self.label
            )));
        }
        if !(self.eps_fw > 0.0) {
            return Err(Error::invalid(format!(
                "{}: eps_fw must be positive",
                self.label
            )));
        }
        Ok(())
    }
}

/// Checkpoints of one solver run.
#[derive(Debug, Clone)]
pub struct SolverRun {
    pub checkpoints: Vec<Checkpoint>,
    pub samples_used: u64,
    /// Closed-form draw count for the configuration and the core sets it used.
    pub expected_samples: u64,
    /// Iteration index of the first checkpoint after a phase switch.
    pub phase_boundary: Option<usize>,
}

impl SolverRun {
    pub fn last(&self) -> &Checkpoint {
        self.checkpoints
            .last()
            .expect("solver runs have at least one checkpoint")
    }
}

/// A solver strategy.
pub trait Solver: Send + Sync {
    /// Registry key.
    fn kind(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn run(&self, mdp: &LinearMdp, spec: &AlgorithmSpec, streams: &Streams) -> Result<SolverRun>;
}

pub struct TabularSolver;

impl Solver for TabularSolver {
    fn kind(&self) -> &'static str {
        "tabular"
    }

    fn description(&self) -> &'static str {
        "Tabular MDVI, sampling every state-action pair"
    }

    fn run(&self, mdp: &LinearMdp, spec: &AlgorithmSpec, streams: &Streams) -> Result<SolverRun> {
        let mode = spec.sampler()?;
        let out = tabular_mdvi(mdp, spec.alpha, spec.k, mode, &streams.child(tag::TABULAR))?;
        Ok(SolverRun {
            checkpoints: out.checkpoints(),
            samples_used: out.samples_used,
            expected_samples: mdp.num_pairs() as u64 * spec.k as u64 * mode.draws(),
            phase_boundary: None,
        })
    }
}

/// WLS-MDVI with a fixed weighting chosen per MDP.
pub struct WlsSolver {
    kind: &'static str,
    description: &'static str,
    weighting: fn(&LinearMdp) -> Result<WeightingFunction>,
}

impl WlsSolver {
    pub fn unweighted() -> Self {
        Self {
            kind: "wls_f1",
            description: "WLS-MDVI with f = 1",
            weighting: |m| Ok(WeightingFunction::ones(m)),
        }
    }

    pub fn oracle() -> Self {
        Self {
            kind: "wls_oracle",
            description: "WLS-MDVI with the oracle weighting min(sigma(v*) + sqrt(H), H)",
            weighting: oracle_weighting,
        }
    }
}

impl Solver for WlsSolver {
    fn kind(&self) -> &'static str {
        self.kind
    }

    fn description(&self) -> &'static str {
        self.description
    }

    fn run(&self, mdp: &LinearMdp, spec: &AlgorithmSpec, streams: &Streams) -> Result<SolverRun> {
        let mode = spec.sampler()?;
        let f = (self.weighting)(mdp)?;
        let out = wls_mdvi(
            mdp,
            spec.alpha,
            &f,
            spec.k,
            mode,
            spec.eps_fw,
            &streams.child(tag::WLS),
        )?;
        Ok(SolverRun {
            checkpoints: out.checkpoints(crate::mdvi::Phase::Single, 0, 0),
            samples_used: out.state.samples_used,
            expected_samples: out.design.len() as u64 * spec.k as u64 * mode.draws(),
            phase_boundary: None,
        })
    }
}

pub struct VwlsSolver;

impl Solver for VwlsSolver {
    fn kind(&self) -> &'static str {
        "vwls"
    }

    fn description(&self) -> &'static str {
        "VWLS-MDVI: unweighted warm-up, variance estimation, variance-weighted run"
    }

    fn run(&self, mdp: &LinearMdp, spec: &AlgorithmSpec, streams: &Streams) -> Result<SolverRun> {
        let params = spec.vwls_params();
        let out = vwls_mdvi(mdp, &params, streams)?;
        Ok(SolverRun {
            checkpoints: out.checkpoints(),
            samples_used: out.samples_used,
            expected_samples: vwls_sample_count(
                &params,
                out.warmup.design.len(),
                out.weighted.design.len(),
            ),
            phase_boundary: Some(out.phase_boundary()),
        })
    }
}

/// Name-to-strategy map.
pub struct SolverRegistry {
    solvers: BTreeMap<&'static str, Box<dyn Solver>>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self {
            solvers: BTreeMap::new(),
        }
    }

    /// Registry with `tabular`, `wls_f1`, `wls_oracle` and `vwls`.
    pub fn with_builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(TabularSolver));
        r.register(Box::new(WlsSolver::unweighted()));
        r.register(Box::new(WlsSolver::oracle()));
        r.register(Box::new(VwlsSolver));
        r
    }

    /// Adds a solver, replacing any previous one with the same kind.
    pub fn register(&mut self, solver: Box<dyn Solver>) {
        self.solvers.insert(solver.kind(), solver);
    }

    pub fn get(&self, kind: &str) -> Result<&dyn Solver> {
        self.solvers
            .get(kind)
            .map(|s| s.as_ref())
            .ok_or_else(|| Error::UnknownAlgorithm(kind.to_string()))
    }

    pub fn kinds(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.solvers.keys().copied()
    }
}

impl Default for SolverRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}
