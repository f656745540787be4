//! Mirror-descent value iteration solvers against a generative model.
//!
//! All solvers use the averaged (beta -> infinity) form of MDVI:
//! `s_{k+1} = q_{k+1} + alpha s_k`, `w_k(x) = max_a s_k(x, a)` and
//! `v_k = w_k - alpha w_{k-1}`, acting greedily with respect to `s_k`.
//! The least-squares variants fit each `q_{k+1}` on the core set of a
//! (weighted) optimal design and keep the average in parameter space,
//! `theta_bar_{k+1} = theta_{k+1} + alpha theta_bar_k`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::design::{frank_wolfe, Design, RegressionOperator, WeightingFunction};
use crate::error::{Error, Result};
use crate::linear_mdp::{variance_of_value, LinearMdp, Policy, QFunction, ValueFunction};
use crate::rng::{tag, Streams};

/// How next-state expectations `P v` are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMode {
    /// Mean over `samples` generative-model draws per pair.
    MonteCarlo { samples: usize },
    /// Exact `P v` from the transition table; draws nothing.
    ExactExpectation,
}

impl SamplerMode {
    pub fn monte_carlo(samples: usize) -> Result<Self> {
        if samples == 0 {
            return Err(Error::invalid("monte_carlo mode needs at least one sample"));
        }
        Ok(Self::MonteCarlo { samples })
    }

    /// Draws per pair per iteration.
    pub fn draws(&self) -> u64 {
        match self {
            Self::MonteCarlo { samples } => *samples as u64,
            Self::ExactExpectation => 0,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::MonteCarlo { samples: 0 } => {
                Err(Error::invalid("monte_carlo mode needs at least one sample"))
            }
            _ => Ok(()),
        }
    }

    /// Estimate of `(P v)(pair)` drawn from the stream `(iteration, pair)`.
    fn expectation(
        &self,
        mdp: &LinearMdp,
        pair: usize,
        v: &[f64],
        streams: &Streams,
        iteration: usize,
    ) -> f64 {
        match *self {
            Self::MonteCarlo { samples } => {
                let mut rng = streams.stream(iteration as u64, pair as u64);
                mdp.sampled_mean(pair, v, samples, &mut rng)
            }
            Self::ExactExpectation => mdp.expected(pair, v),
        }
    }
}

/// Which run of a multi-phase solver a checkpoint belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Single,
    /// First WLS-MDVI run of VWLS-MDVI (`f = 1`).
    Warmup,
    /// Second WLS-MDVI run of VWLS-MDVI (`f = sigma-tilde`).
    Weighted,
}

/// The greedy policy after an iteration and the samples drawn so far.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub iteration: usize,
    pub samples_used: u64,
    pub phase: Phase,
    pub policy: Policy,
}

/// Solver state after the last completed iteration.
#[derive(Debug, Clone)]
pub struct MdviState {
    pub iteration: usize,
    pub theta: DVector<f64>,
    pub theta_bar: DVector<f64>,
    pub s: QFunction,
    pub w: Vec<f64>,
    pub w_prev: Vec<f64>,
    pub v: ValueFunction,
    pub greedy_policy: Policy,
    pub samples_used: u64,
    /// Iterations whose `||v_k||_inf` exceeded `2H + 1`.
    pub bound_violations: usize,
}

impl MdviState {
    fn initial(mdp: &LinearMdp) -> Self {
        let (x, d) = (mdp.num_states(), mdp.dim());
        Self {
            iteration: 0,
            theta: DVector::zeros(d),
            theta_bar: DVector::zeros(d),
            s: QFunction::new(vec![0.0; mdp.num_pairs()], mdp.num_actions()),
            w: vec![0.0; x],
            w_prev: vec![0.0; x],
            v: ValueFunction::zeros(x),
            greedy_policy: Policy::constant(x, 0),
            samples_used: 0,
            bound_violations: 0,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid(format!(
            "alpha must lie in [0, 1), got {alpha}"
        )));
    }
    Ok(())
}

fn check_iterations(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("iteration count must be at least 1"));
    }
    Ok(())
}

fn next_v(w: &[f64], w_prev: &[f64], alpha: f64) -> Vec<f64> {
    w.iter().zip(w_prev).map(|(a, b)| a - alpha * b).collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Result of a Tabular MDVI run.
#[derive(Debug, Clone)]
pub struct TabularOutcome {
    /// `v_K`.
    pub values: ValueFunction,
    /// `pi_0 .. pi_K`, greedy w.r.t. `s_0 .. s_K`.
    pub policies: Vec<Policy>,
    pub s: QFunction,
    pub samples_used: u64,
}

impl TabularOutcome {
    pub fn checkpoints(&self) -> Vec<Checkpoint> {
        let per_iter = self.samples_used / (self.policies.len() as u64 - 1);
        self.policies
            .iter()
            .enumerate()
            .map(|(k, pi)| Checkpoint {
                iteration: k,
                samples_used: per_iter * k as u64,
                phase: Phase::Single,
                policy: pi.clone(),
            })
            .collect()
    }
}

/// Tabular MDVI: `q_{k+1} = r + gamma P_hat v_k` on every pair.
pub fn tabular_mdvi(
    mdp: &LinearMdp,
    alpha: f64,
    iterations: usize,
    mode: SamplerMode,
    streams: &Streams,
) -> Result<TabularOutcome> {
    check_alpha(alpha)?;
    check_iterations(iterations)?;
    mode.validate()?;
    let (n, x_count, na) = (mdp.num_pairs(), mdp.num_states(), mdp.num_actions());
    let gamma = mdp.gamma();
    let mut s = vec![0.0; n];
    let mut w = vec![0.0; x_count];
    let mut w_prev = vec![0.0; x_count];
    let mut policies = vec![Policy::constant(x_count, 0)];

    for k in 0..iterations {
        let v = next_v(&w, &w_prev, alpha);
        for (p, sp) in s.iter_mut().enumerate() {
            let q = mdp.rewards()[p] + gamma * mode.expectation(mdp, p, &v, streams, k);
            *sp = q + alpha * *sp;
        }
        let q = QFunction::new(s.clone(), na);
        w_prev = std::mem::replace(&mut w, q.max_reduce().0);
        policies.push(q.greedy());
    }

    Ok(TabularOutcome {
        values: ValueFunction(next_v(&w, &w_prev, alpha)),
        policies,
        s: QFunction::new(s, na),
        samples_used: (n as u64) * mode.draws() * iterations as u64,
    })
}

/// Result of a WLS-MDVI run.
#[derive(Debug, Clone)]
pub struct WlsOutcome {
    /// `v_K`.
    pub values: ValueFunction,
    /// `pi_0 .. pi_K`.
    pub policies: Vec<Policy>,
    /// `theta_1 .. theta_K`.
    pub thetas: Vec<DVector<f64>>,
    pub state: MdviState,
    pub design: Design,
    /// Draws per iteration: `|C_f| * M`.
    pub samples_per_iteration: u64,
}

impl WlsOutcome {
    pub fn checkpoints(
        &self,
        phase: Phase,
        first_iteration: usize,
        offset: u64,
    ) -> Vec<Checkpoint> {
        self.policies
            .iter()
            .enumerate()
            .map(|(k, pi)| Checkpoint {
                iteration: first_iteration + k,
                samples_used: offset + self.samples_per_iteration * k as u64,
                phase,
                policy: pi.clone(),
            })
            .collect()
    }
}

/// WLS-MDVI with weighting `f`; computes its own design.
pub fn wls_mdvi(
    mdp: &LinearMdp,
    alpha: f64,
    f: &WeightingFunction,
    iterations: usize,
    mode: SamplerMode,
    eps_fw: f64,
    streams: &Streams,
) -> Result<WlsOutcome> {
    check_alpha(alpha)?;
    check_iterations(iterations)?;
    mode.validate()?;
    let design = frank_wolfe(mdp, f, eps_fw, None)?;
    wls_mdvi_with_design(mdp, alpha, f, design, iterations, mode, streams)
}

/// WLS-MDVI on a precomputed design for `f`.
pub fn wls_mdvi_with_design(
    mdp: &LinearMdp,
    alpha: f64,
    f: &WeightingFunction,
    design: Design,
    iterations: usize,
    mode: SamplerMode,
    streams: &Streams,
) -> Result<WlsOutcome> {
    check_alpha(alpha)?;
    check_iterations(iterations)?;
    mode.validate()?;
    let operator = design.regression_operator(mdp, f)?;
    let core = design.core_pairs();
    let gamma = mdp.gamma();
    let bound = 2.0 * mdp.horizon() + 1.0;

    let mut state = MdviState::initial(mdp);
    let mut policies = vec![state.greedy_policy.clone()];
    let mut thetas = Vec::with_capacity(iterations);
    let mut targets = vec![0.0; core.len()];

    for k in 0..iterations {
        let v = next_v(&state.w, &state.w_prev, alpha);
        if sup(&v) > bound {
            state.bound_violations += 1;
        }
        for (t, &p) in targets.iter_mut().zip(&core) {
            *t = mdp.rewards()[p] + gamma * mode.expectation(mdp, p, &v, streams, k);
        }
        state.v = ValueFunction(v);
        step(mdp, &operator, &targets, alpha, &mut state)?;
        state.samples_used += core.len() as u64 * mode.draws();
        thetas.push(state.theta.clone());
        policies.push(state.greedy_policy.clone());
    }
    state.v = ValueFunction(next_v(&state.w, &state.w_prev, alpha));

    Ok(WlsOutcome {
        values: state.v.clone(),
        policies,
        thetas,
        samples_per_iteration: core.len() as u64 * mode.draws(),
        state,
        design,
    })
}

fn step(
    mdp: &LinearMdp,
    operator: &RegressionOperator,
    targets: &[f64],
    alpha: f64,
    state: &mut MdviState,
) -> Result<()> {
    let theta = operator.apply(targets)?;
    let theta_bar = &theta + &state.theta_bar * alpha;
    let s: Vec<f64> = (0..mdp.num_pairs())
        .map(|p| {
            mdp.feature(p)
                .iter()
                .zip(theta_bar.iter())
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect();
    let s = QFunction::new(s, mdp.num_actions());
    state.w_prev = std::mem::replace(&mut state.w, s.max_reduce().0);
    state.greedy_policy = s.greedy();
    state.s = s;
    state.theta = theta;
    state.theta_bar = theta_bar;
    state.iteration += 1;
    Ok(())
}

/// Output of variance estimation.
#[derive(Debug, Clone)]
pub struct VarianceEstimate {
    /// Linear variance parameter: `Var(v)(x,a) ~ phi(x,a)^T omega`.
    pub omega: DVector<f64>,
    /// Per-core-pair paired-difference estimates, in core-set order.
    pub estimates: Vec<f64>,
    pub design: Design,
    pub samples_used: u64,
}

/// Learns `omega` with the unweighted design.
///
/// Each core pair draws two independent batches `y_m`, `z_m` of size
/// `samples` and uses `(1 / 2M) sum (v(y_m) - v(z_m))^2`. In exact mode the
/// estimate is replaced by its expectation `Var(v)`.
pub fn variance_estimation(
    mdp: &LinearMdp,
    v_sigma: &[f64],
    mode: SamplerMode,
    eps_fw: f64,
    streams: &Streams,
) -> Result<VarianceEstimate> {
    let design = frank_wolfe(mdp, &WeightingFunction::ones(mdp), eps_fw, None)?;
    variance_estimation_with_design(mdp, v_sigma, mode, design, streams)
}

/// Variance estimation on a precomputed unweighted design.
pub fn variance_estimation_with_design(
    mdp: &LinearMdp,
    v_sigma: &[f64],
    mode: SamplerMode,
    design: Design,
    streams: &Streams,
) -> Result<VarianceEstimate> {
    mode.validate()?;
    if v_sigma.len() != mdp.num_states() || v_sigma.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(
            "v_sigma must be a finite vector over states",
        ));
    }
    let core = design.core_pairs();
    let estimates: Vec<f64> = match mode {
        SamplerMode::MonteCarlo { samples } => {
            let ys = streams.child(tag::VARIANCE_Y);
            let zs = streams.child(tag::VARIANCE_Z);
            core.iter()
                .map(|&p| {
                    let mut ry = ys.stream(0, p as u64);
                    let mut rz = zs.stream(0, p as u64);
                    let total: f64 = (0..samples)
                        .map(|_| {
                            let y = mdp.sample_next_state(p, &mut ry);
                            let z = mdp.sample_next_state(p, &mut rz);
                            (v_sigma[y] - v_sigma[z]).powi(2)
                        })
                        .sum();
                    total / (2.0 * samples as f64)
                })
                .collect()
        }
        SamplerMode::ExactExpectation => {
            let var = variance_of_value(mdp, v_sigma);
            core.iter().map(|&p| var.values()[p]).collect()
        }
    };
    let omega = design
        .regression_operator(mdp, &WeightingFunction::ones(mdp))?
        .apply(&estimates)?;
    Ok(VarianceEstimate {
        omega,
        estimates,
        samples_used: 2 * core.len() as u64 * mode.draws(),
        design,
    })
}

/// `sigma-tilde = min(sqrt(max(phi^T omega, 0)) + sqrt(H), H)`.
pub fn make_sigma_weighting(mdp: &LinearMdp, omega: &DVector<f64>) -> Result<WeightingFunction> {
    if omega.len() != mdp.dim() {
        return Err(Error::invalid("omega has the wrong dimension"));
    }
    let h = mdp.horizon();
    let root_h = h.sqrt();
    let values = (0..mdp.num_pairs())
        .map(|p| {
            let lin: f64 = mdp
                .feature(p)
                .iter()
                .zip(omega.iter())
                .map(|(a, b)| a * b)
                .sum();
            (lin.max(0.0).sqrt() + root_h).min(h)
        })
        .collect();
    WeightingFunction::new(values, mdp.num_actions())
}

/// Parameters of a VWLS-MDVI run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VwlsParams {
    pub alpha: f64,
    /// Iterations of the unweighted warm-up run.
    pub k: usize,
    /// Draws per pair in the warm-up run.
    pub m: usize,
    /// Iterations of the variance-weighted run.
    pub k_tilde: usize,
    /// Draws per pair in the variance-weighted run.
    pub m_tilde: usize,
    /// Draws per batch in variance estimation.
    pub m_sigma: usize,
    pub eps_fw: f64,
    /// Replace every sampled expectation by its exact value.
    #[serde(default)]
    pub exact: bool,
}

impl VwlsParams {
    fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if [self.k, self.m, self.k_tilde, self.m_tilde, self.m_sigma].contains(&0) {
            return Err(Error::invalid("all VWLS-MDVI counts must be at least 1"));
        }
        Ok(())
    }

    fn mode(&self, samples: usize) -> SamplerMode {
        if self.exact {
            SamplerMode::ExactExpectation
        } else {
            SamplerMode::MonteCarlo { samples }
        }
    }
}

/// Result of a VWLS-MDVI run.
#[derive(Debug, Clone)]
pub struct VwlsOutcome {
    pub warmup: WlsOutcome,
    pub variance: VarianceEstimate,
    pub sigma: WeightingFunction,
    pub weighted: WlsOutcome,
    pub samples_used: u64,
}

impl VwlsOutcome {
    /// Policies of the variance-weighted run.
    pub fn policies(&self) -> &[Policy] {
        &self.weighted.policies
    }

    pub fn state(&self) -> &MdviState {
        &self.weighted.state
    }

    /// Warm-up iterations `0..=K`, then weighted iterations `1..=K_tilde`
    /// numbered `K+1 ..= K+K_tilde`. The first weighted checkpoint marks the
    /// phase switch and already includes the variance-estimation draws.
    pub fn checkpoints(&self) -> Vec<Checkpoint> {
        let k = self.warmup.policies.len() - 1;
        let warm_samples = self.warmup.state.samples_used;
        let mut out = self.warmup.checkpoints(Phase::Warmup, 0, 0);
        let offset = warm_samples + self.variance.samples_used;
        out.extend(
            self.weighted
                .checkpoints(Phase::Weighted, k, offset)
                .into_iter()
                .skip(1),
        );
        out
    }

    /// Iteration index of the first weighted checkpoint.
    pub fn phase_boundary(&self) -> usize {
        self.warmup.policies.len()
    }
}

/// VWLS-MDVI: unweighted WLS-MDVI, variance estimation on its `v_K`, then
/// WLS-MDVI weighted by `sigma-tilde`.
pub fn vwls_mdvi(mdp: &LinearMdp, params: &VwlsParams, streams: &Streams) -> Result<VwlsOutcome> {
    params.validate()?;
    let ones = WeightingFunction::ones(mdp);
    let design = frank_wolfe(mdp, &ones, params.eps_fw, None)?;
    let warmup = wls_mdvi_with_design(
        mdp,
        params.alpha,
        &ones,
        design.clone(),
        params.k,
        params.mode(params.m),
        &streams.child(tag::WLS_PHASE_ONE),
    )?;
    let variance = variance_estimation_with_design(
        mdp,
        warmup.values.values(),
        params.mode(params.m_sigma),
        design,
        streams,
    )?;
    let sigma = make_sigma_weighting(mdp, &variance.omega)?;
    let weighted = wls_mdvi(
        mdp,
        params.alpha,
        &sigma,
        params.k_tilde,
        params.mode(params.m_tilde),
        params.eps_fw,
        &streams.child(tag::WLS_PHASE_THREE),
    )?;
    let samples_used =
        warmup.state.samples_used + variance.samples_used + weighted.state.samples_used;
    Ok(VwlsOutcome {
        warmup,
        variance,
        sigma,
        weighted,
        samples_used,
    })
}

/// Closed-form draw count of a VWLS-MDVI run given both core-set sizes.
pub fn vwls_sample_count(params: &VwlsParams, warm_core: usize, weighted_core: usize) -> u64 {
    if params.exact {
        return 0;
    }
    let (c1, c3) = (warm_core as u64, weighted_core as u64);
    c1 * params.k as u64 * params.m as u64
        + 2 * c1 * params.m_sigma as u64
        + c3 * params.k_tilde as u64 * params.m_tilde as u64
}

/// Iteration and sample counts shaped like the sample-complexity bounds,
/// with every unspecified constant set to 1 (and the confidence constant
/// `c0 = 6`). Heuristic only: the true constants are unknown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeuristicCounts {
    pub core_set_bound: f64,
    pub k_unweighted: u64,
    pub m_unweighted: u64,
    pub k_weighted: u64,
    pub m_weighted: u64,
    pub m_sigma: u64,
}

pub fn heuristic_counts(dim: usize, horizon: f64, eps: f64, delta: f64) -> Result<HeuristicCounts> {
    if dim == 0 || !(horizon >= 1.0) || !(eps > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(
            "need dim >= 1, horizon >= 1, eps > 0 and delta in (0, 1)",
        ));
    }
    let c0 = 6.0;
    let d = dim as f64;
    let core = 4.0 * d * (d + 4.0).ln().ln() + 28.0;
    let k = (3.0 * horizon * horizon.ln() + 1.0).ceil().max(1.0);
    let log_term = |c: f64| (2.0 * c0 * c0 * core * k / (c * delta)).ln();
    let m_unweighted = (d * horizon * horizon / eps * log_term(c0 - 5.0)).ceil();
    let inner = (16.0 * k * horizon * horizon / ((c0 - 5.0) * delta)).log2();
    let m_weighted =
        (d * horizon * horizon / (eps * eps) * (log_term(c0 - 5.0).exp() * inner).ln()).ceil();
    let m_sigma = (d * horizon * horizon * log_term(c0 - 3.0)).ceil();
    Ok(HeuristicCounts {
        core_set_bound: core,
        k_unweighted: k as u64,
        m_unweighted: m_unweighted as u64,
        k_weighted: k as u64,
        m_weighted: m_weighted as u64,
        m_sigma: m_sigma as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_mdp::{bellman_q, make_hard_linear_mdp, normalized_gap, oracle_weighting};

    fn hard(seed: u64) -> LinearMdp {
        make_hard_linear_mdp(30, 4, 0.9, seed).unwrap()
    }

    #[test]
    fn tabular_alpha_zero_is_value_iteration() {
        let m = hard(1);
        let out =
            tabular_mdvi(&m, 0.0, 5, SamplerMode::ExactExpectation, &Streams::new(0)).unwrap();
        let mut v = vec![0.0; 2];
        for _ in 0..5 {
            v = bellman_q(&m, &v).max_reduce().0;
        }
        assert!(crate::linear_mdp::sup_distance(&v, out.values.values()) < 1e-12);
        assert_eq!(out.samples_used, 0);
    }

    #[test]
    fn tabular_first_policy_is_reward_greedy() {
        let m = LinearMdp::from_tables(1, 3, 0.9, vec![0.1, 0.5, 0.5], vec![1.0, 1.0, 1.0], None)
            .unwrap();
        let out =
            tabular_mdvi(&m, 0.5, 1, SamplerMode::ExactExpectation, &Streams::new(0)).unwrap();
        assert_eq!(out.policies.len(), 2);
        assert_eq!(out.policies[1].actions(), &[1]);
    }

    #[test]
    fn tabular_exact_converges_on_hard_instance() {
        let m = hard(3);
        let out = tabular_mdvi(
            &m,
            0.9,
            300,
            SamplerMode::ExactExpectation,
            &Streams::new(0),
        )
        .unwrap();
        assert!(normalized_gap(&m, out.policies.last().unwrap()).unwrap() <= 1e-3);
    }

    #[test]
    fn tabular_sample_count() {
        let m = hard(3);
        let mode = SamplerMode::monte_carlo(7).unwrap();
        let out = tabular_mdvi(&m, 0.9, 4, mode, &Streams::new(0)).unwrap();
        assert_eq!(out.samples_used, 60 * 7 * 4);
        assert_eq!(out.checkpoints().last().unwrap().samples_used, 60 * 7 * 4);
    }

    #[test]
    fn wls_exact_mode_recovers_bellman_targets() {
        let m = hard(4);
        let f = oracle_weighting(&m).unwrap();
        let out = wls_mdvi(
            &m,
            0.9,
            &f,
            30,
            SamplerMode::ExactExpectation,
            0.01,
            &Streams::new(0),
        )
        .unwrap();
        // Replay: phi^T theta_{k+1} = r + gamma P v_k on every pair.
        let alpha = 0.9;
        let mut w = vec![0.0; 2];
        let mut w_prev = vec![0.0; 2];
        let mut theta_bar = DVector::zeros(4);
        for theta in &out.thetas {
            let v = next_v(&w, &w_prev, alpha);
            let target = bellman_q(&m, &v);
            for p in 0..m.num_pairs() {
                let fit: f64 = m
                    .feature(p)
                    .iter()
                    .zip(theta.iter())
                    .map(|(a, b)| a * b)
                    .sum();
                assert!((fit - target.values()[p]).abs() < 1e-9);
            }
            theta_bar = theta + theta_bar * alpha;
            let s: Vec<f64> = (0..m.num_pairs())
                .map(|p| {
                    m.feature(p)
                        .iter()
                        .zip(theta_bar.iter())
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect();
            w_prev = std::mem::replace(&mut w, QFunction::new(s, 30).max_reduce().0);
        }
        assert_eq!(out.state.samples_used, 0);
    }

    #[test]
    fn moving_average_identity() {
        let m = hard(5);
        let f = WeightingFunction::ones(&m);
        let mode = SamplerMode::monte_carlo(10).unwrap();
        let out = wls_mdvi(&m, 0.9, &f, 25, mode, 0.01, &Streams::new(8)).unwrap();
        let k = out.thetas.len();
        let mut replay = DVector::zeros(4);
        for (j, theta) in out.thetas.iter().enumerate() {
            replay += theta * 0.9f64.powi((k - 1 - j) as i32);
        }
        assert!((replay - &out.state.theta_bar).amax() < 1e-9);
        for x in 0..2 {
            let row = &out.state.s.values()[x * 30..(x + 1) * 30];
            let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(out.state.w[x], best);
            assert_eq!(row[out.state.greedy_policy.action(x)], best);
        }
    }

    #[test]
    fn wls_sample_accounting() {
        let m = hard(6);
        let f = WeightingFunction::ones(&m);
        let mode = SamplerMode::monte_carlo(13).unwrap();
        let out = wls_mdvi(&m, 0.9, &f, 9, mode, 0.01, &Streams::new(1)).unwrap();
        assert_eq!(out.state.samples_used, out.design.len() as u64 * 13 * 9);
        assert_eq!(out.policies.len(), 10);
        assert_eq!(out.thetas.len(), 9);
    }

    #[test]
    fn wls_rejects_bad_arguments() {
        let m = hard(6);
        let f = WeightingFunction::ones(&m);
        let s = Streams::new(0);
        let exact = SamplerMode::ExactExpectation;
        assert!(wls_mdvi(&m, 1.0, &f, 3, exact, 0.01, &s).is_err());
        assert!(wls_mdvi(&m, 0.5, &f, 0, exact, 0.01, &s).is_err());
        assert!(wls_mdvi(
            &m,
            0.5,
            &f,
            3,
            SamplerMode::MonteCarlo { samples: 0 },
            0.01,
            &s
        )
        .is_err());
        assert!(SamplerMode::monte_carlo(0).is_err());
    }

    #[test]
    fn constant_value_has_zero_variance_estimate() {
        let m = hard(2);
        let mode = SamplerMode::monte_carlo(50).unwrap();
        let est = variance_estimation(&m, &[4.0, 4.0], mode, 0.01, &Streams::new(0)).unwrap();
        assert!(est.estimates.iter().all(|&v| v == 0.0));
        assert!(est.omega.iter().all(|&v| v == 0.0));
        assert_eq!(est.samples_used, 2 * est.design.len() as u64 * 50);
    }

    #[test]
    fn sigma_weighting_clips() {
        let m = hard(2);
        let h = m.horizon();
        let zero = make_sigma_weighting(&m, &DVector::zeros(4)).unwrap();
        assert!(zero.values().iter().all(|&v| (v - h.sqrt()).abs() < 1e-12));
        let huge = make_sigma_weighting(&m, &DVector::from_element(4, 1e6)).unwrap();
        assert!(huge.values().iter().all(|&v| v == h));
        let negative = make_sigma_weighting(&m, &DVector::from_element(4, -3.0)).unwrap();
        assert!(negative
            .values()
            .iter()
            .all(|&v| (v - h.sqrt()).abs() < 1e-12));
    }

    #[test]
    fn vwls_accounting_and_checkpoints() {
        let m = hard(7);
        let params = VwlsParams {
            alpha: 0.9,
            k: 6,
            m: 5,
            k_tilde: 4,
            m_tilde: 3,
            m_sigma: 11,
            eps_fw: 0.01,
            exact: false,
        };
        let out = vwls_mdvi(&m, &params, &Streams::new(3)).unwrap();
        let expected =
            vwls_sample_count(&params, out.warmup.design.len(), out.weighted.design.len());
        assert_eq!(out.samples_used, expected);
        let cps = out.checkpoints();
        assert_eq!(cps.len(), 7 + 4);
        assert_eq!(cps.last().unwrap().samples_used, expected);
        assert_eq!(cps.last().unwrap().iteration, 10);
        assert_eq!(cps[out.phase_boundary()].phase, Phase::Weighted);
        assert!(cps
            .windows(2)
            .all(|w| w[0].samples_used <= w[1].samples_used));
    }

    #[test]
    fn heuristic_counts_shape() {
        let c = heuristic_counts(4, 10.0, 0.1, 0.1).unwrap();
        assert_eq!(c.k_unweighted, (30.0 * 10f64.ln() + 1.0).ceil() as u64);
        assert!(c.m_weighted > c.m_unweighted);
        assert!(heuristic_counts(4, 0.5, 0.1, 0.1).is_err());
    }
}
