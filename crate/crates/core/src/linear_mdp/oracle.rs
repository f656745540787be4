//! Exact dynamic-programming oracles on the derived tables.

use nalgebra::{DMatrix, DVector};

use super::{sup_distance, LinearMdp, Policy, QFunction, ValueFunction};
use crate::design::WeightingFunction;
use crate::error::{Error, Result};

/// Bellman-residual target used by the ground-truth oracles.
pub const DEFAULT_ORACLE_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100_000_000;

#[derive(Debug, Clone)]
pub struct OptimalSolution {
    pub values: ValueFunction,
    pub q: QFunction,
    pub policy: Policy,
}

/// `r + gamma * P v`.
pub fn bellman_q(mdp: &LinearMdp, v: &[f64]) -> QFunction {
    let q = (0..mdp.num_pairs())
        .map(|p| mdp.rewards()[p] + mdp.gamma() * mdp.expected(p, v))
        .collect();
    QFunction::new(q, mdp.num_actions())
}

/// Value iteration on the exact tables.
///
/// Stops once successive iterates are within `tol * (1 - gamma) / (2 gamma)`,
/// which bounds the Bellman residual of the result by `tol`.
pub fn exact_optimal_values(mdp: &LinearMdp, tol: f64) -> Result<OptimalSolution> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tol must be positive, got {tol}")));
    }
    let gamma = mdp.gamma();
    let threshold = if gamma > 0.0 {
        tol * (1.0 - gamma) / (2.0 * gamma)
    } else {
        f64::INFINITY
    };
    let mut v = vec![0.0; mdp.num_states()];
    for _ in 0..MAX_SWEEPS {
        let next = bellman_q(mdp, &v).max_reduce().0;
        let change = sup_distance(&next, &v);
        v = next;
        if change <= threshold {
            let q = bellman_q(mdp, &v);
            let policy = q.greedy();
            return Ok(OptimalSolution {
                values: ValueFunction(v),
                q,
                policy,
            });
        }
    }
    Err(Error::NumericalFailure(
        "value iteration did not converge".into(),
    ))
}

/// Solves `(I - gamma P_pi) v = r_pi` directly.
pub fn evaluate_policy(mdp: &LinearMdp, policy: &Policy) -> Result<ValueFunction> {
    let n = mdp.num_states();
    if policy.len() != n || policy.actions().iter().any(|&a| a >= mdp.num_actions()) {
        return Err(Error::invalid("policy does not match the MDP"));
    }
    let gamma = mdp.gamma();
    let mut system = DMatrix::<f64>::identity(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for x in 0..n {
        let p = mdp.pair_index(x, policy.action(x));
        rhs[x] = mdp.rewards()[p];
        for (y, prob) in mdp.transition_row(p).iter().enumerate() {
            system[(x, y)] -= gamma * prob;
        }
    }
    let lu = system.clone().lu();
    let v = lu
        .solve(&rhs)
        .ok_or_else(|| Error::NumericalFailure("singular policy-evaluation system".into()))?;
    let residual = (&system * &v - &rhs).amax();
    if residual > 1e-9 {
        return Err(Error::NumericalFailure(format!(
            "policy-evaluation residual {residual:.3e}"
        )));
    }
    Ok(ValueFunction(v.iter().copied().collect()))
}

/// Value of the non-stationary policy that plays `policies[k]` first, then
/// `policies[k-1]`, ..., then `policies[0]` forever.
pub fn evaluate_nonstationary(mdp: &LinearMdp, policies: &[Policy]) -> Result<ValueFunction> {
    let (first, rest) = policies
        .split_first()
        .ok_or_else(|| Error::invalid("need at least one policy"))?;
    let v0 = evaluate_policy(mdp, first)?;
    let mut q = bellman_q(mdp, v0.values());
    let Some((last, middle)) = rest.split_last() else {
        return Ok(v0);
    };
    for pi in middle {
        let v = pick(&q, pi);
        q = bellman_q(mdp, &v);
    }
    Ok(ValueFunction(pick(&q, last)))
}

fn pick(q: &QFunction, pi: &Policy) -> Vec<f64> {
    (0..pi.len()).map(|x| q.get(x, pi.action(x))).collect()
}

/// `Var(v)(x,a) = (P v^2)(x,a) - (P v)(x,a)^2`, clamped at zero.
pub fn variance_of_value(mdp: &LinearMdp, v: &[f64]) -> QFunction {
    let vals = (0..mdp.num_pairs())
        .map(|p| {
            let row = mdp.transition_row(p);
            // Shift by a value in the support; exact zero for point masses and constants.
            let shift = row
                .iter()
                .zip(v)
                .find(|(pr, _)| **pr > 0.0)
                .map_or(0.0, |(_, vy)| *vy);
            let mean: f64 = row.iter().zip(v).map(|(pr, vy)| pr * (vy - shift)).sum();
            let second: f64 = row
                .iter()
                .zip(v)
                .map(|(pr, vy)| pr * (vy - shift).powi(2))
                .sum();
            (second - mean * mean).max(0.0)
        })
        .collect();
    QFunction::new(vals, mdp.num_actions())
}

/// `f* = min(sigma(v*) + sqrt(H), H)` entrywise.
pub fn oracle_weighting(mdp: &LinearMdp) -> Result<WeightingFunction> {
    let opt = exact_optimal_values(mdp, DEFAULT_ORACLE_TOL)?;
    let var = variance_of_value(mdp, opt.values.values());
    let h = mdp.horizon();
    let root_h = h.sqrt();
    let f = var
        .values()
        .iter()
        .map(|s2| (s2.sqrt() + root_h).min(h))
        .collect();
    WeightingFunction::new(f, mdp.num_actions())
}

/// `||v* - v_pi||_inf / ||v*||_inf`.
pub fn normalized_gap(mdp: &LinearMdp, policy: &Policy) -> Result<f64> {
    GapOracle::new(mdp)?.gap(mdp, policy)
}

/// Caches `v*` for repeated gap evaluations on one MDP.
#[derive(Debug, Clone)]
pub struct GapOracle {
    optimal: ValueFunction,
    scale: f64,
}

impl GapOracle {
    pub fn new(mdp: &LinearMdp) -> Result<Self> {
        let opt = exact_optimal_values(mdp, DEFAULT_ORACLE_TOL)?;
        let scale = opt.values.sup_norm();
        if scale <= 1e-12 {
            return Err(Error::DegenerateInstance(scale));
        }
        Ok(Self {
            optimal: opt.values,
            scale,
        })
    }

    pub fn optimal(&self) -> &ValueFunction {
        &self.optimal
    }

    pub fn gap(&self, mdp: &LinearMdp, policy: &Policy) -> Result<f64> {
        let v = evaluate_policy(mdp, policy)?;
        Ok(self.optimal.sup_distance(&v) / self.scale)
    }
}
