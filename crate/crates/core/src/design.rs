//! Weighted G-optimal experimental design.
//!
//! Everything here operates on the weighted feature map `phi_f = phi / f`.
//! A design is a distribution `rho` over state-action pairs; its design matrix
//! is `G_f = sum rho(p) phi_f(p) phi_f(p)^T` and its g-value is
//! `max_p phi_f(p)^T G_f^{-1} phi_f(p)`, which is at least `d` for every design
//! and exactly `d` at the optimum.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear_mdp::LinearMdp;

const MIN_WEIGHT: f64 = 1e-12;
const DIRECTION_TOL: f64 = 1e-12;
const RIDGE_SCALE: f64 = 1e-10;
/// Slack on the pruning threshold so exact-optimum support points survive rounding.
const PRUNE_SLACK: f64 = 1e-9;

/// A strictly positive function over state-action pairs, laid out by pair index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightingFunction {
    num_actions: usize,
    values: Vec<f64>,
}

impl WeightingFunction {
    /// Rejects entries below `1e-12` and non-finite entries.
    pub fn new(values: Vec<f64>, num_actions: usize) -> Result<Self> {
        if num_actions == 0 || values.is_empty() || !values.len().is_multiple_of(num_actions) {
            return Err(Error::invalid("weighting table has the wrong shape"));
        }
        if let Some((p, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < MIN_WEIGHT)
        {
            return Err(Error::invalid(format!(
                "weighting must be finite and at least {MIN_WEIGHT:e}; got {v} at pair {p}"
            )));
        }
        Ok(Self {
            num_actions,
            values,
        })
    }

    pub fn ones(mdp: &LinearMdp) -> Self {
        Self {
            num_actions: mdp.num_actions(),
            values: vec![1.0; mdp.num_pairs()],
        }
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.values.iter().map(|v| v * c).collect(),
            self.num_actions,
        )
    }

    pub fn get(&self, x: usize, a: usize) -> f64 {
        self.values[x * self.num_actions + a]
    }

    pub fn at(&self, pair: usize) -> f64 {
        self.values[pair]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn check(&self, mdp: &LinearMdp) -> Result<()> {
        if self.values.len() != mdp.num_pairs() || self.num_actions != mdp.num_actions() {
            return Err(Error::invalid(
                "weighting does not match the MDP's state-action grid",
            ));
        }
        Ok(())
    }
}

/// One support point of a design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignPoint {
    pub pair: usize,
    pub state: usize,
    pub action: usize,
    pub mass: f64,
}

/// A design with its core set and inverted design matrix.
#[derive(Debug, Clone)]
pub struct Design {
    dim: usize,
    points: Vec<DesignPoint>,
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    g_value: f64,
    eps_fw: f64,
}

impl Design {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Core set in increasing pair order, with masses.
    pub fn points(&self) -> &[DesignPoint] {
        &self.points
    }

    pub fn core_set(&self) -> Vec<(usize, usize)> {
        self.points.iter().map(|p| (p.state, p.action)).collect()
    }

    pub fn core_pairs(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.pair).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn design_matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn g_value(&self) -> f64 {
        self.g_value
    }

    /// Tolerance the design was computed with; `0` for an initial design.
    pub fn eps_fw(&self) -> f64 {
        self.eps_fw
    }

    pub fn to_document(&self) -> DesignDocument {
        DesignDocument {
            points: self
                .points
                .iter()
                .map(|p| PointDocument {
                    state: p.state,
                    action: p.action,
                    mass: p.mass,
                })
                .collect(),
            design_matrix: (0..self.dim)
                .map(|r| (0..self.dim).map(|c| self.matrix[(r, c)]).collect())
                .collect(),
            g_value: self.g_value,
            eps_fw: self.eps_fw,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    /// The linear map `z -> Z(f, z)` from core-set targets to parameters.
    pub fn regression_operator(
        &self,
        mdp: &LinearMdp,
        f: &WeightingFunction,
    ) -> Result<RegressionOperator> {
        f.check(mdp)?;
        let mut columns = DMatrix::zeros(self.dim, self.points.len());
        for (j, pt) in self.points.iter().enumerate() {
            let w = pt.mass / (f.at(pt.pair) * f.at(pt.pair));
            let phi = DVector::from_column_slice(mdp.feature(pt.pair));
            columns.set_column(j, &(&self.inverse * phi * w));
        }
        Ok(RegressionOperator { matrix: columns })
    }
}

/// Serialized design: support points, design matrix, g-value and tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDocument {
    pub points: Vec<PointDocument>,
    pub design_matrix: Vec<Vec<f64>>,
    pub g_value: f64,
    pub eps_fw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDocument {
    pub state: usize,
    pub action: usize,
    pub mass: f64,
}

/// `G_f^{-1} diag(rho / f^2) Phi_C`, precomputed for a fixed design.
#[derive(Debug, Clone)]
pub struct RegressionOperator {
    matrix: DMatrix<f64>,
}

impl RegressionOperator {
    pub fn apply(&self, z: &[f64]) -> Result<DVector<f64>> {
        if z.len() != self.matrix.ncols() {
            return Err(Error::invalid(format!(
                "expected {} core-set targets, got {}",
                self.matrix.ncols(),
                z.len()
            )));
        }
        Ok(&self.matrix * DVector::from_column_slice(z))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// Weighted least-squares solution `Z(f, z)` for targets on the core set.
pub fn weighted_ls_solve(
    mdp: &LinearMdp,
    design: &Design,
    f: &WeightingFunction,
    z: &[f64],
) -> Result<DVector<f64>> {
    design.regression_operator(mdp, f)?.apply(z)
}

/// Exact `g_f(rho)` over the full grid.
pub fn g_value(mdp: &LinearMdp, f: &WeightingFunction, design: &Design) -> Result<f64> {
    f.check(mdp)?;
    let wf = WeightedFeatures::new(mdp, f);
    Ok(wf
        .leverages(&design.inverse)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Kumar-Yildirim initial design on the weighted features.
///
/// The sweep runs on the symmetrized set `{+phi_f, -phi_f}`: at step `j` the
/// pair maximizing `|c_j . phi_f|` is selected (both the argmax and argmin of
/// the symmetrized set map to it), and `c_{j+1}` is the first canonical basis
/// vector with a nonzero component orthogonal to the directions chosen so far.
pub fn initialize_design(mdp: &LinearMdp, f: &WeightingFunction) -> Result<Design> {
    f.check(mdp)?;
    let wf = WeightedFeatures::new(mdp, f);
    let selected = wf.kumar_yildirim()?;
    let mut rho = vec![0.0; wf.n];
    for &p in &selected {
        rho[p] = 1.0 / selected.len() as f64;
    }
    wf.finish(&rho, 0.0)
}

/// Default iteration cap: `100 d ln(d+1) / eps`, at most one million.
pub fn default_max_iters(dim: usize, eps_fw: f64) -> usize {
    let d = dim as f64;
    let raw = 100.0 * d * (d + 1.0).ln() / eps_fw;
    raw.clamp(1.0, 1e6).ceil() as usize
}

/// Per-iteration record of a Frank-Wolfe run.
#[derive(Debug, Clone, Default)]
pub struct FrankWolfeTrace {
    /// `delta(rho)` at every check, the last one being the terminal value.
    pub deltas: Vec<f64>,
    /// `log det G_f(rho)` at every check; non-decreasing across steps.
    pub log_dets: Vec<f64>,
    pub steps: usize,
    /// Number of positive-mass points before pruning.
    pub support_before_prune: usize,
    /// `g` before pruning.
    pub g_before_prune: f64,
}

/// Frank-Wolfe (Fedorov-Wynn) iteration from the initial design, followed by
/// core-set pruning. Stops once `(max omega - d) / d <= eps_fw`.
pub fn frank_wolfe(
    mdp: &LinearMdp,
    f: &WeightingFunction,
    eps_fw: f64,
    max_iters: Option<usize>,
) -> Result<Design> {
    frank_wolfe_traced(mdp, f, eps_fw, max_iters).map(|(d, _)| d)
}

pub fn frank_wolfe_traced(
    mdp: &LinearMdp,
    f: &WeightingFunction,
    eps_fw: f64,
    max_iters: Option<usize>,
) -> Result<(Design, FrankWolfeTrace)> {
    if !(eps_fw > 0.0) {
        return Err(Error::invalid(format!(
            "eps_fw must be positive, got {eps_fw}"
        )));
    }
    let max_iters = max_iters.unwrap_or_else(|| default_max_iters(mdp.dim(), eps_fw));
    if max_iters == 0 {
        return Err(Error::invalid("max_iters must be at least 1"));
    }
    f.check(mdp)?;
    let wf = WeightedFeatures::new(mdp, f);
    let d = wf.d as f64;

    let mut rho = vec![0.0; wf.n];
    let init = wf.kumar_yildirim()?;
    for &p in &init {
        rho[p] = 1.0 / init.len() as f64;
    }

    let mut trace = FrankWolfeTrace::default();
    let (omega, delta) = loop {
        let gram = wf.gram(&rho);
        trace.log_dets.push(log_det(&gram));
        let inverse = invert_spd(&gram)?;
        let omega = wf.leverages(&inverse);
        let best = crate::linear_mdp::argmax_first(&omega);
        let delta = (omega[best] - d) / d;
        trace.deltas.push(delta);
        if delta <= eps_fw {
            break (omega, delta);
        }
        if trace.steps >= max_iters {
            return Err(Error::NotConverged {
                iterations: trace.steps,
                delta,
            });
        }
        trace.steps += 1;
        if wf.d == 1 {
            // One dimension: the point mass on the largest |phi_f| is optimal.
            rho.iter_mut().for_each(|r| *r = 0.0);
            rho[best] = 1.0;
            continue;
        }
        let step = (omega[best] - d) / ((d - 1.0) * omega[best]);
        if step <= 0.0 {
            break (omega, delta);
        }
        rho[best] += step;
        let scale = 1.0 + step;
        rho.iter_mut().for_each(|r| *r /= scale);
    };

    trace.support_before_prune = rho.iter().filter(|&&r| r > 0.0).count();
    trace.g_before_prune = omega.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let dl = delta.max(0.0);
    let threshold = d * (1.0 + dl * d / 2.0 - (dl * (d - 1.0) + dl * dl * d * d / 4.0).sqrt())
        - PRUNE_SLACK * d;
    let pruned: Vec<f64> = rho
        .iter()
        .zip(&omega)
        .map(|(&r, &w)| if r > 0.0 && w >= threshold { r } else { 0.0 })
        .collect();
    let design = match wf.finish(&pruned, eps_fw) {
        Ok(design) => design,
        // Pruning removed a direction the remaining support cannot cover.
        Err(Error::SingularDesign) => wf.finish(&rho, eps_fw)?,
        Err(e) => return Err(e),
    };
    Ok((design, trace))
}

fn log_det(m: &DMatrix<f64>) -> f64 {
    nalgebra::Cholesky::new(m.clone()).map_or(f64::NEG_INFINITY, |c| {
        2.0 * c.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
    })
}

struct WeightedFeatures {
    n: usize,
    d: usize,
    num_actions: usize,
    rows: Vec<f64>,
}

impl WeightedFeatures {
    fn new(mdp: &LinearMdp, f: &WeightingFunction) -> Self {
        let (n, d) = (mdp.num_pairs(), mdp.dim());
        let mut rows = Vec::with_capacity(n * d);
        for p in 0..n {
            let w = f.at(p);
            rows.extend(mdp.feature(p).iter().map(|v| v / w));
        }
        Self {
            n,
            d,
            num_actions: mdp.num_actions(),
            rows,
        }
    }

    fn row(&self, p: usize) -> &[f64] {
        &self.rows[p * self.d..(p + 1) * self.d]
    }

    fn kumar_yildirim(&self) -> Result<Vec<usize>> {
        let d = self.d;
        let scale = self.rows.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(d);
        let mut c = DVector::<f64>::zeros(d);
        c[0] = 1.0;
        let mut selected = Vec::with_capacity(d);
        for step in 0..d {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for p in 0..self.n {
                let s = self
                    .row(p)
                    .iter()
                    .zip(c.iter())
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    .abs();
                if s > best_score {
                    best_score = s;
                    best = p;
                }
            }
            if best_score <= DIRECTION_TOL * scale.max(1.0) {
                return Err(Error::RankDeficiency { dim: d, step });
            }
            selected.push(best);
            let mut y = DVector::from_column_slice(self.row(best));
            orthogonalize(&mut y, &basis);
            let norm = y.norm();
            if norm <= DIRECTION_TOL * scale.max(1.0) {
                return Err(Error::RankDeficiency { dim: d, step });
            }
            basis.push(y / norm);
            if step + 1 < d {
                c = next_direction(&basis, d).ok_or(Error::RankDeficiency { dim: d, step })?;
            }
        }
        selected.sort_unstable();
        selected.dedup();
        Ok(selected)
    }

    fn gram(&self, rho: &[f64]) -> DMatrix<f64> {
        let d = self.d;
        let mut g = DMatrix::zeros(d, d);
        for (p, &r) in rho.iter().enumerate() {
            if r <= 0.0 {
                continue;
            }
            let row = self.row(p);
            for i in 0..d {
                let ri = r * row[i];
                for j in 0..d {
                    g[(i, j)] += ri * row[j];
                }
            }
        }
        g
    }

    /// `phi_f(p)^T H phi_f(p)` for every pair.
    fn leverages(&self, inverse: &DMatrix<f64>) -> Vec<f64> {
        let d = self.d;
        (0..self.n)
            .map(|p| {
                let row = self.row(p);
                let mut total = 0.0;
                for i in 0..d {
                    let mut acc = 0.0;
                    for j in 0..d {
                        acc += inverse[(i, j)] * row[j];
                    }
                    total += row[i] * acc;
                }
                total
            })
            .collect()
    }

    /// Renormalizes `rho` over its support and packages the design.
    fn finish(&self, rho: &[f64], eps_fw: f64) -> Result<Design> {
        let total: f64 = rho.iter().filter(|&&r| r > 0.0).sum();
        if !(total > 0.0) {
            return Err(Error::SingularDesign);
        }
        let normalized: Vec<f64> = rho
            .iter()
            .map(|&r| if r > 0.0 { r / total } else { 0.0 })
            .collect();
        let matrix = self.gram(&normalized);
        let inverse = invert_spd(&matrix)?;
        let g = self
            .leverages(&inverse)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        let points = normalized
            .iter()
            .enumerate()
            .filter(|(_, &r)| r > 0.0)
            .map(|(p, &mass)| DesignPoint {
                pair: p,
                state: p / self.num_actions,
                action: p % self.num_actions,
                mass,
            })
            .collect();
        Ok(Design {
            dim: self.d,
            points,
            matrix,
            inverse,
            g_value: g,
            eps_fw,
        })
    }
}

fn orthogonalize(v: &mut DVector<f64>, basis: &[DVector<f64>]) {
    // Two passes of modified Gram-Schmidt.
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(v);
            v.axpy(-c, b, 1.0);
        }
    }
}

fn next_direction(basis: &[DVector<f64>], d: usize) -> Option<DVector<f64>> {
    (0..d).find_map(|k| {
        let mut e = DVector::zeros(d);
        e[k] = 1.0;
        orthogonalize(&mut e, basis);
        let n = e.norm();
        (n > 1e-8).then(|| e / n)
    })
}

/// Inverse of a symmetric positive definite matrix via Cholesky, retrying once
/// with a `1e-10 * trace / d` ridge.
pub(crate) fn invert_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.inverse());
    }
    let d = m.nrows();
    let ridge = RIDGE_SCALE * m.trace() / d as f64;
    if !(ridge > 0.0) {
        return Err(Error::SingularDesign);
    }
    let shifted = m + DMatrix::identity(d, d) * ridge;
    shifted
        .cholesky()
        .map(|ch| ch.inverse())
        .ok_or(Error::SingularDesign)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_mdp::make_hard_linear_mdp;

    /// MDP whose X*A features are the standard basis of R^d (one state, d actions).
    fn basis_mdp(d: usize) -> LinearMdp {
        let mut phi = vec![0.0; d * d];
        for i in 0..d {
            phi[i * d + i] = 1.0;
        }
        LinearMdp::from_features(1, d, d, 0.5, phi, vec![1.0; d], vec![0.0; d]).unwrap()
    }

    /// One state, three actions, constant scalar feature 1.
    fn scalar_mdp() -> LinearMdp {
        LinearMdp::from_features(1, 3, 1, 0.5, vec![1.0; 3], vec![1.0], vec![0.0]).unwrap()
    }

    #[test]
    fn basis_initialization_is_uniform() {
        let m = basis_mdp(5);
        let f = WeightingFunction::ones(&m);
        let des = initialize_design(&m, &f).unwrap();
        assert_eq!(des.len(), 5);
        assert!(des.points().iter().all(|p| (p.mass - 0.2).abs() < 1e-15));
        let diff = des.design_matrix() - DMatrix::<f64>::identity(5, 5) / 5.0;
        assert!(diff.amax() < 1e-15);
        assert!((des.g_value() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_picks_largest_magnitude() {
        // The weighting makes |phi / f| distinct across the three actions.
        let m = scalar_mdp();
        let f = WeightingFunction::new(vec![2.0, 0.5, 1.0], 3).unwrap();
        let des = initialize_design(&m, &f).unwrap();
        assert_eq!(des.core_set(), vec![(0, 1)]);
        assert_eq!(des.points()[0].mass, 1.0);
        assert!((des.g_value() - 1.0).abs() < 1e-12);
        let fw = frank_wolfe(&m, &f, 0.01, None).unwrap();
        assert_eq!(fw.core_set(), vec![(0, 1)]);
    }

    #[test]
    fn hard_initialization_size() {
        for seed in 0..20 {
            let m = make_hard_linear_mdp(30, 4, 0.9, seed).unwrap();
            let des = initialize_design(&m, &WeightingFunction::ones(&m)).unwrap();
            assert!((4..=8).contains(&des.len()));
            let eig = des.design_matrix().clone().symmetric_eigenvalues();
            assert!(eig.min() > 1e-12);
        }
    }

    #[test]
    fn rank_deficient_features() {
        // Every row lies on the first axis.
        let wf = WeightedFeatures {
            n: 3,
            d: 2,
            num_actions: 3,
            rows: vec![1.0, 0.0, 2.0, 0.0, -1.0, 0.0],
        };
        assert!(matches!(
            wf.kumar_yildirim(),
            Err(Error::RankDeficiency { step: 1, .. })
        ));
    }

    #[test]
    fn basis_frank_wolfe_terminates_immediately() {
        let m = basis_mdp(4);
        let f = WeightingFunction::ones(&m);
        let (des, trace) = frank_wolfe_traced(&m, &f, 0.01, None).unwrap();
        assert_eq!(trace.steps, 0);
        assert!((des.g_value() - 4.0).abs() < 1e-12);
        assert_eq!(des.len(), 4);
    }

    #[test]
    fn frank_wolfe_hard_table_settings() {
        let m = make_hard_linear_mdp(30, 4, 0.9, 2).unwrap();
        let (des, trace) =
            frank_wolfe_traced(&m, &WeightingFunction::ones(&m), 0.01, None).unwrap();
        assert!(trace.g_before_prune <= 4.0 * 1.01 + 1e-12);
        assert!(des.g_value() <= 8.0);
        assert!(des.g_value() >= 4.0 - 1e-6);
        let bound = 4.0 * 4.0 * (8.0f64).ln().ln() + 28.0;
        assert!((des.len() as f64) <= bound);
        let mass: f64 = des.points().iter().map(|p| p.mass).sum();
        assert!((mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn not_converged_error() {
        let m = make_hard_linear_mdp(30, 4, 0.9, 2).unwrap();
        let r = frank_wolfe(&m, &WeightingFunction::ones(&m), 1e-9, Some(3));
        assert!(matches!(r, Err(Error::NotConverged { iterations: 3, .. })));
    }

    #[test]
    fn rejects_bad_arguments() {
        let m = basis_mdp(3);
        let f = WeightingFunction::ones(&m);
        assert!(frank_wolfe(&m, &f, 0.0, None).is_err());
        assert!(frank_wolfe(&m, &f, 0.1, Some(0)).is_err());
        assert!(WeightingFunction::new(vec![1.0, 0.0, 1.0], 3).is_err());
        assert!(WeightingFunction::new(vec![1.0, f64::NAN, 1.0], 3).is_err());
        let wrong = WeightingFunction::new(vec![1.0; 6], 3).unwrap();
        assert!(initialize_design(&m, &wrong).is_err());
    }

    #[test]
    fn g_value_invariant_under_joint_scaling() {
        let m = make_hard_linear_mdp(30, 4, 0.9, 4).unwrap();
        let f = crate::linear_mdp::oracle_weighting(&m).unwrap();
        let des = frank_wolfe(&m, &f, 0.01, None).unwrap();
        let g = g_value(&m, &f, &des).unwrap();
        assert!((g - des.g_value()).abs() < 1e-12);
        // Scaling phi and f by the same c leaves phi / f unchanged.
        let c = 3.0;
        let scaled_phi: Vec<f64> = m.features().iter().map(|v| v * c).collect();
        let scaled_mu: Vec<f64> = m.mu().iter().map(|v| v / c).collect();
        let scaled_psi: Vec<f64> = m.psi().iter().map(|v| v / c).collect();
        let m2 =
            LinearMdp::from_features(2, 30, 4, 0.9, scaled_phi, scaled_mu, scaled_psi).unwrap();
        let f2 = f.scaled(c).unwrap();
        let des2 = frank_wolfe(&m2, &f2, 0.01, None).unwrap();
        assert!((g_value(&m2, &f2, &des2).unwrap() - g).abs() < 1e-9);
    }

    #[test]
    fn exact_recovery_of_linear_targets() {
        let m = make_hard_linear_mdp(30, 4, 0.9, 9).unwrap();
        let f = crate::linear_mdp::oracle_weighting(&m).unwrap();
        let des = frank_wolfe(&m, &f, 0.01, None).unwrap();
        let theta = [0.3, -1.2, 2.5, 0.7];
        let z: Vec<f64> = des
            .core_pairs()
            .iter()
            .map(|&p| crate::linear_mdp::dot(m.feature(p), &theta))
            .collect();
        let got = weighted_ls_solve(&m, &des, &f, &z).unwrap();
        for i in 0..4 {
            assert!((got[i] - theta[i]).abs() < 1e-9);
        }
        assert!(weighted_ls_solve(&m, &des, &f, &z[1..]).is_err());
    }

    #[test]
    fn uniform_weight_scaling_cancels() {
        let m = make_hard_linear_mdp(30, 4, 0.9, 9).unwrap();
        let f = crate::linear_mdp::oracle_weighting(&m).unwrap();
        let f3 = f.scaled(3.0).unwrap();
        let d1 = frank_wolfe(&m, &f, 0.01, None).unwrap();
        let d3 = frank_wolfe(&m, &f3, 0.01, None).unwrap();
        assert_eq!(d1.core_pairs(), d3.core_pairs());
        let z: Vec<f64> = (0..d1.len()).map(|i| (i as f64 * 1.7).sin()).collect();
        let a = weighted_ls_solve(&m, &d1, &f, &z).unwrap();
        let b = weighted_ls_solve(&m, &d3, &f3, &z).unwrap();
        assert!((a - b).amax() < 1e-9);
    }

    #[test]
    fn default_iteration_cap() {
        assert_eq!(default_max_iters(4, 0.01), 64378);
        assert_eq!(default_max_iters(64, 1e-9), 1_000_000);
    }

    #[test]
    fn document_shape() {
        let m = basis_mdp(3);
        let des = frank_wolfe(&m, &WeightingFunction::ones(&m), 0.5, None).unwrap();
        let doc = des.to_document();
        assert_eq!(doc.points.len(), 3);
        assert_eq!(doc.design_matrix.len(), 3);
        assert_eq!(doc.eps_fw, 0.5);
        let back: DesignDocument = serde_json::from_str(&des.to_json().unwrap()).unwrap();
        assert_eq!(back, doc);
    }
}
