//! Finite linear MDPs.
//!
//! A [`LinearMdp`] is defined by a feature map `phi(x, a) in R^d`, `d` signed
//! measures `mu` over next states and a reward parameter `psi`. Rewards and
//! transition tables are derived as `r = phi^T psi` and `P(y|x,a) = phi^T mu(y)`
//! and validated on construction.
//!
//! State-action pairs are addressed by the linear index `x * A + a` everywhere
//! in this crate.

mod hard;
mod oracle;

pub use hard::{make_hard_linear_mdp, HARD_TRANSITION_SCALE};
pub use oracle::{
    bellman_q, evaluate_nonstationary, evaluate_policy, exact_optimal_values, normalized_gap,
    oracle_weighting, variance_of_value, GapOracle, OptimalSolution, DEFAULT_ORACLE_TOL,
};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NEGATIVE_CLAMP: f64 = 1e-12;
const ROW_SUM_TOL: f64 = 1e-9;
const REWARD_TOL: f64 = 1e-12;
const FIT_TOL: f64 = 1e-9;

/// A finite linear MDP with exact derived tables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMdp {
    num_states: usize,
    num_actions: usize,
    dim: usize,
    gamma: f64,
    phi: Vec<f64>,
    mu: Vec<f64>,
    psi: Vec<f64>,
    rewards: Vec<f64>,
    transitions: Vec<f64>,
}

impl LinearMdp {
    /// Builds an MDP from its linear parameters.
    ///
    /// `phi` is laid out as `[(x * A + a) * d + i]`, `mu` as `[i * X + y]`.
    pub fn from_features(
        num_states: usize,
        num_actions: usize,
        dim: usize,
        gamma: f64,
        phi: Vec<f64>,
        mu: Vec<f64>,
        psi: Vec<f64>,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 || dim == 0 {
            return Err(Error::invalid(
                "num_states, num_actions and dim must be positive",
            ));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::invalid(format!(
                "gamma must lie in [0, 1), got {gamma}"
            )));
        }
        let pairs = num_states * num_actions;
        if phi.len() != pairs * dim {
            return Err(Error::invalid(format!(
                "phi has {} entries, expected {}",
                phi.len(),
                pairs * dim
            )));
        }
        if mu.len() != dim * num_states {
            return Err(Error::invalid(format!(
                "mu has {} entries, expected {}",
                mu.len(),
                dim * num_states
            )));
        }
        if psi.len() != dim {
            return Err(Error::invalid(format!(
                "psi has {} entries, expected {dim}",
                psi.len()
            )));
        }
        if phi.iter().chain(&mu).chain(&psi).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite parameter".into()));
        }

        let mut rewards = vec![0.0; pairs];
        let mut transitions = vec![0.0; pairs * num_states];
        for p in 0..pairs {
            let f = &phi[p * dim..(p + 1) * dim];
            rewards[p] = dot(f, &psi);
            for y in 0..num_states {
                transitions[p * num_states + y] =
                    (0..dim).map(|i| f[i] * mu[i * num_states + y]).sum();
            }
        }

        for p in 0..pairs {
            let r = rewards[p];
            if !(-1.0 - REWARD_TOL..=1.0 + REWARD_TOL).contains(&r) {
                return Err(Error::InvalidModel(format!(
                    "reward {r} at pair {p} outside [-1, 1]"
                )));
            }
            let row = &mut transitions[p * num_states..(p + 1) * num_states];
            for (y, v) in row.iter_mut().enumerate() {
                if *v < -NEGATIVE_CLAMP {
                    return Err(Error::InvalidModel(format!(
                        "negative transition probability {v} at pair {p}, next state {y}"
                    )));
                }
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidModel(format!(
                    "transition row at pair {p} sums to {sum}"
                )));
            }
        }

        let features = DMatrix::from_row_slice(pairs, dim, &phi);
        let rank = numerical_rank(&features);
        if rank < dim {
            return Err(Error::InvalidModel(format!(
                "feature vectors span a {rank}-dimensional subspace of R^{dim}"
            )));
        }

        Ok(Self {
            num_states,
            num_actions,
            dim,
            gamma,
            phi,
            mu,
            psi,
            rewards,
            transitions,
        })
    }

    /// Builds an MDP from explicit reward and transition tables.
    ///
    /// Without features, one-hot features (`d = X * A`) are used and the MDP
    /// is tabular. With features, `mu` and `psi` are fitted by least squares
    /// and the tables must be reproduced to within `1e-9`.
    pub fn from_tables(
        num_states: usize,
        num_actions: usize,
        gamma: f64,
        rewards: Vec<f64>,
        transitions: Vec<f64>,
        features: Option<(usize, Vec<f64>)>,
    ) -> Result<Self> {
        let pairs = num_states * num_actions;
        if rewards.len() != pairs || transitions.len() != pairs * num_states {
            return Err(Error::invalid(
                "table shapes do not match num_states/num_actions",
            ));
        }
        let Some((dim, phi)) = features else {
            let mut phi = vec![0.0; pairs * pairs];
            for p in 0..pairs {
                phi[p * pairs + p] = 1.0;
            }
            return Self::from_features(
                num_states,
                num_actions,
                pairs,
                gamma,
                phi,
                transitions,
                rewards,
            );
        };
        if phi.len() != pairs * dim {
            return Err(Error::invalid("phi shape does not match (X*A, d)"));
        }
        let features = DMatrix::from_row_slice(pairs, dim, &phi);
        let targets = {
            let mut m = DMatrix::zeros(pairs, num_states + 1);
            for p in 0..pairs {
                m[(p, 0)] = rewards[p];
                for y in 0..num_states {
                    m[(p, y + 1)] = transitions[p * num_states + y];
                }
            }
            m
        };
        let svd = features.clone().svd(true, true);
        let fitted = svd
            .solve(&targets, 1e-12)
            .map_err(|e| Error::NumericalFailure(e.to_string()))?;
        let residual = (&features * &fitted - &targets).amax();
        if residual > FIT_TOL {
            return Err(Error::InvalidModel(format!(
                "tables are not linear in the supplied features (residual {residual:.3e})"
            )));
        }
        let psi = (0..dim).map(|i| fitted[(i, 0)]).collect();
        let mut mu = vec![0.0; dim * num_states];
        for i in 0..dim {
            for y in 0..num_states {
                mu[i * num_states + y] = fitted[(i, y + 1)];
            }
        }
        Self::from_features(num_states, num_actions, dim, gamma, phi, mu, psi)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_pairs(&self) -> usize {
        self.num_states * self.num_actions
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Effective horizon `1 / (1 - gamma)`.
    pub fn horizon(&self) -> f64 {
        1.0 / (1.0 - self.gamma)
    }

    pub fn pair_index(&self, x: usize, a: usize) -> usize {
        x * self.num_actions + a
    }

    pub fn pair(&self, index: usize) -> (usize, usize) {
        (index / self.num_actions, index % self.num_actions)
    }

    /// Feature vector of the pair with linear index `p`.
    pub fn feature(&self, p: usize) -> &[f64] {
        &self.phi[p * self.dim..(p + 1) * self.dim]
    }

    pub fn phi(&self, x: usize, a: usize) -> &[f64] {
        self.feature(self.pair_index(x, a))
    }

    pub fn features(&self) -> &[f64] {
        &self.phi
    }

    /// `mu[i][y]`, flattened row-major as `(d, X)`.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn reward(&self, x: usize, a: usize) -> f64 {
        self.rewards[self.pair_index(x, a)]
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    /// Next-state distribution of pair `p`.
    pub fn transition_row(&self, p: usize) -> &[f64] {
        &self.transitions[p * self.num_states..(p + 1) * self.num_states]
    }

    pub fn transition(&self, x: usize, a: usize, y: usize) -> f64 {
        self.transition_row(self.pair_index(x, a))[y]
    }

    /// `(P v)(p)`.
    pub fn expected(&self, p: usize, v: &[f64]) -> f64 {
        dot(self.transition_row(p), v)
    }

    /// One draw from `P(.|p)` by inverse-CDF.
    pub fn sample_next_state<R: Rng + ?Sized>(&self, p: usize, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let row = self.transition_row(p);
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (y, &prob) in row.iter().enumerate() {
            if prob > 0.0 {
                acc += prob;
                last_positive = y;
                if u < acc {
                    return y;
                }
            }
        }
        last_positive
    }

    /// `count` independent draws from `P(.|x,a)`.
    pub fn sample_next_states<R: Rng + ?Sized>(
        &self,
        x: usize,
        a: usize,
        count: usize,
        rng: &mut R,
    ) -> Vec<usize> {
        let p = self.pair_index(x, a);
        (0..count).map(|_| self.sample_next_state(p, rng)).collect()
    }

    /// Mean of `v` over `count` draws from `P(.|p)`.
    pub fn sampled_mean<R: Rng + ?Sized>(
        &self,
        p: usize,
        v: &[f64],
        count: usize,
        rng: &mut R,
    ) -> f64 {
        let total: f64 = (0..count).map(|_| v[self.sample_next_state(p, rng)]).sum();
        total / count as f64
    }

    /// Features as an `(X*A, d)` matrix.
    pub fn feature_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.num_pairs(), self.dim, &self.phi)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&MdpDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MdpDocument = serde_json::from_str(text)?;
        doc.try_into()
    }
}

/// On-disk form of a [`LinearMdp`]; derived tables are not stored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdpDocument {
    pub num_states: usize,
    pub num_actions: usize,
    pub dim: usize,
    pub gamma: f64,
    /// `phi[x][a][i]`
    pub phi: Vec<Vec<Vec<f64>>>,
    /// `mu[i][y]`
    pub mu: Vec<Vec<f64>>,
    pub psi: Vec<f64>,
}

impl From<&LinearMdp> for MdpDocument {
    fn from(m: &LinearMdp) -> Self {
        let phi = (0..m.num_states)
            .map(|x| (0..m.num_actions).map(|a| m.phi(x, a).to_vec()).collect())
            .collect();
        let mu = m.mu.chunks(m.num_states).map(<[f64]>::to_vec).collect();
        Self {
            num_states: m.num_states,
            num_actions: m.num_actions,
            dim: m.dim,
            gamma: m.gamma,
            phi,
            mu,
            psi: m.psi.clone(),
        }
    }
}

impl TryFrom<MdpDocument> for LinearMdp {
    type Error = Error;

    fn try_from(doc: MdpDocument) -> Result<Self> {
        let bad = |what: &str| Error::InvalidModel(format!("{what} has the wrong shape"));
        if doc.phi.len() != doc.num_states
            || doc
                .phi
                .iter()
                .any(|row| row.len() != doc.num_actions || row.iter().any(|f| f.len() != doc.dim))
        {
            return Err(bad("phi"));
        }
        if doc.mu.len() != doc.dim || doc.mu.iter().any(|row| row.len() != doc.num_states) {
            return Err(bad("mu"));
        }
        let phi = doc.phi.into_iter().flatten().flatten().collect();
        let mu = doc.mu.into_iter().flatten().collect();
        LinearMdp::from_features(
            doc.num_states,
            doc.num_actions,
            doc.dim,
            doc.gamma,
            phi,
            mu,
            doc.psi,
        )
    }
}

/// A deterministic policy: one action per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Policy(Vec<usize>);

impl Policy {
    pub fn new(actions: Vec<usize>, num_actions: usize) -> Result<Self> {
        if let Some(&bad) = actions.iter().find(|&&a| a >= num_actions) {
            return Err(Error::invalid(format!(
                "action {bad} out of range 0..{num_actions}"
            )));
        }
        Ok(Self(actions))
    }

    /// Greedy policy w.r.t. a q-table laid out by pair index; lowest index wins ties.
    pub fn greedy(q: &[f64], num_actions: usize) -> Self {
        Self(q.chunks(num_actions).map(argmax_first).collect())
    }

    pub fn constant(num_states: usize, action: usize) -> Self {
        Self(vec![action; num_states])
    }

    pub fn action(&self, x: usize) -> usize {
        self.0[x]
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// State values `v(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFunction(pub Vec<f64>);

impl ValueFunction {
    pub fn zeros(num_states: usize) -> Self {
        Self(vec![0.0; num_states])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &ValueFunction) -> f64 {
        sup_distance(&self.0, &other.0)
    }
}

/// Action values `q(x, a)` laid out by pair index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QFunction {
    num_actions: usize,
    values: Vec<f64>,
}

impl QFunction {
    pub fn new(values: Vec<f64>, num_actions: usize) -> Self {
        debug_assert!(num_actions > 0 && values.len().is_multiple_of(num_actions));
        Self {
            num_actions,
            values,
        }
    }

    pub fn get(&self, x: usize, a: usize) -> f64 {
        self.values[x * self.num_actions + a]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn greedy(&self) -> Policy {
        Policy::greedy(&self.values, self.num_actions)
    }

    /// `max_a q(x, a)` for every state.
    pub fn max_reduce(&self) -> ValueFunction {
        ValueFunction(
            self.values
                .chunks(self.num_actions)
                .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .collect(),
        )
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Index of the first maximal entry.
pub(crate) fn argmax_first(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate().skip(1) {
        if v > xs[best] {
            best = i;
        }
    }
    best
}

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let largest = sv.iter().copied().fold(0.0, f64::max);
    if largest == 0.0 {
        return 0;
    }
    let tol = largest * 1e-10 * (m.nrows().max(m.ncols()) as f64);
    sv.iter().filter(|&&s| s > tol).count()
}
