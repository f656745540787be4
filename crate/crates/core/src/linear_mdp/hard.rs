//! Randomized two-state hard instance.
//!
//! States: `x0` (rewarding, index 0) and `x1` (absorbing, index 1). Each action
//! carries a vector `a in [0,1]^(d-2)`; action 0's vector doubles as the
//! preferred direction `a0`, so `P(x0 | x0, a) = gamma + 0.01 * a0 . a`.

use rand::Rng;

use super::LinearMdp;
use crate::error::{Error, Result};
use crate::rng::{tag, Streams};

/// Coefficient on `a0 . a` in the `x0 -> x0` transition probability.
pub const HARD_TRANSITION_SCALE: f64 = 0.01;

const MAX_ATTEMPTS: usize = 1000;

pub fn make_hard_linear_mdp(
    num_actions: usize,
    dim: usize,
    gamma: f64,
    seed: u64,
) -> Result<LinearMdp> {
    if dim < 3 {
        return Err(Error::invalid(format!(
            "hard instance needs dim >= 3, got {dim}"
        )));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    if num_actions + 1 < dim {
        return Err(Error::invalid(format!(
            "features span R^{dim} only with at least {} actions, got {num_actions}",
            dim - 1
        )));
    }

    let streams = Streams::new(seed).child(tag::HARD_MDP);
    let tail = dim - 2;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = streams.stream(attempt as u64, 0);
        let actions: Vec<Vec<f64>> = (0..num_actions)
            .map(|_| (0..tail).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let a0 = &actions[0];
        let stays_valid = actions.iter().all(|a| {
            let p = gamma + HARD_TRANSITION_SCALE * super::dot(a0, a);
            (0.0..=1.0).contains(&p)
        });
        if !stays_valid {
            continue;
        }

        let mut phi = Vec::with_capacity(2 * num_actions * dim);
        for a in &actions {
            phi.extend([1.0, 0.0]);
            phi.extend_from_slice(a);
        }
        for _ in 0..num_actions {
            phi.extend([0.0, 1.0]);
            phi.extend(std::iter::repeat_n(0.0, tail));
        }

        // mu laid out as [i * X + y] with X = 2.
        let mut mu = vec![0.0; dim * 2];
        mu[0] = gamma;
        mu[1] = 1.0 - gamma;
        mu[2] = 0.0;
        mu[3] = 1.0;
        for (j, &c) in a0.iter().enumerate() {
            mu[(j + 2) * 2] = HARD_TRANSITION_SCALE * c;
            mu[(j + 2) * 2 + 1] = -HARD_TRANSITION_SCALE * c;
        }

        let mut psi = vec![0.0; dim];
        psi[0] = 1.0;

        match LinearMdp::from_features(2, num_actions, dim, gamma, phi, mu, psi) {
            Ok(m) => return Ok(m),
            // A degenerate draw (e.g. collinear action vectors) is resampled too.
            Err(Error::InvalidModel(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ConstructionFailure {
        attempts: MAX_ATTEMPTS,
    })
}
