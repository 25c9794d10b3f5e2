//! Learning the frame-2 relevance profile from a handful of demonstrations.
//!
//! The objective reproduces every demonstration from every other one with
//! the frame-weighted transform and averages the DTW dissimilarity over the
//! `M (M − 1)` ordered pairs. The weights are constrained so that the profile
//! stays in `[0, 1]` on a uniform grid of progress values.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relevance::{fit_targets, uniform_grid, RbfBasis, RelevanceProfile};
use crate::trajectory::{dtw_distance, Demonstration, DEFAULT_RESAMPLE_POINTS};
use crate::transform::generate;

mod sqp;

pub use sqp::{SqpOptions, SqpOutcome};

/// Grid violation accepted when reporting a profile as feasible.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizeConfig {
    /// Number of uniform progress values carrying the `0 ≤ f ≤ 1` constraint.
    pub constraint_grid: usize,
    pub max_iterations: usize,
    /// Stop once an accepted step improves the objective by less than this.
    pub tolerance: f64,
    /// Recorded for provenance; the solver itself is deterministic.
    pub seed: u64,
    /// Demonstrations are resampled to this many points before evaluation.
    pub resample_points: usize,
    /// Central-difference step in weight space.
    pub gradient_step: f64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            constraint_grid: 101,
            max_iterations: 200,
            tolerance: 1e-6,
            seed: 0,
            resample_points: DEFAULT_RESAMPLE_POINTS,
            gradient_step: 1e-4,
        }
    }
}

impl OptimizeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.constraint_grid < 2 {
            return Err(Error::invalid("constraint_grid must be at least 2"));
        }
        if self.max_iterations < 1 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        if self.resample_points < 2 {
            return Err(Error::invalid("resample_points must be at least 2"));
        }
        if !(self.gradient_step > 0.0) {
            return Err(Error::invalid("gradient_step must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub omega: Vec<f64>,
    pub objective_value: f64,
    /// Objective at the initial point followed by every accepted iterate.
    pub objective_trace: Vec<f64>,
    pub feasible: bool,
    pub max_violation: f64,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
}

impl OptimizeReport {
    pub fn profile(&self, basis: &RbfBasis) -> Result<RelevanceProfile> {
        RelevanceProfile::new(basis.clone(), DVector::from_row_slice(&self.omega))
    }
}

/// Pairwise reproduction objective over a fixed, pre-resampled dataset.
pub struct ReproductionObjective {
    demos: Vec<Demonstration>,
    basis: RbfBasis,
}

impl ReproductionObjective {
    pub fn new(dataset: &[Demonstration], basis: &RbfBasis, resample_points: usize) -> Result<Self> {
        if dataset.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "the reproduction objective needs at least 2 demonstrations, got {}",
                dataset.len()
            )));
        }
        let dim = dataset[0].dim();
        if dataset
            .iter()
            .any(|d| d.dim() != dim || d.situation().len() != 2)
        {
            return Err(Error::invalid(
                "demonstrations must share their dimension and have two-frame situations",
            ));
        }
        let demos = dataset
            .iter()
            .map(|d| {
                if d.trajectory().len() == resample_points {
                    Ok(d.clone())
                } else {
                    d.resampled(resample_points)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ReproductionObjective {
            demos,
            basis: basis.clone(),
        })
    }

    pub fn pair_count(&self) -> usize {
        self.demos.len() * (self.demos.len() - 1)
    }

    /// DTW between each demonstration `i` and its reproduction from `k`,
    /// in i-major, k-minor order.
    pub fn pair_terms(&self, omega: &DVector<f64>) -> Result<Vec<f64>> {
        let profile = RelevanceProfile::new(self.basis.clone(), omega.clone())?;
        let m = self.demos.len();
        let pairs: Vec<(usize, usize)> = (0..m)
            .flat_map(|i| (0..m).filter(move |&k| k != i).map(move |k| (i, k)))
            .collect();
        pairs
            .par_iter()
            .map(|&(i, k)| {
                let target = &self.demos[i];
                let reproduced = generate(&self.demos[k], target.situation(), &profile)?;
                dtw_distance(target.trajectory().points(), reproduced.points())
            })
            .collect()
    }

    pub fn value(&self, omega: &DVector<f64>) -> Result<f64> {
        let terms = self.pair_terms(omega)?;
        // fixed-order reduction keeps the value bitwise reproducible
        let total: f64 = terms.iter().sum();
        Ok(total / terms.len() as f64)
    }
}

/// Mean DTW dissimilarity between each demonstration and its reproductions
/// from all other demonstrations, with the default resampling length.
pub fn reproduction_objective(
    dataset: &[Demonstration],
    omega: &DVector<f64>,
    basis: &RbfBasis,
) -> Result<f64> {
    ReproductionObjective::new(dataset, basis, DEFAULT_RESAMPLE_POINTS)?.value(omega)
}

/// Feasible starting weights: the ramp `f(d) = d` with targets clipped to
/// `[0.01, 0.99]`, projected onto the grid constraints if the fit overshoots.
pub fn initial_weights(basis: &RbfBasis, grid: &[f64]) -> Result<DVector<f64>> {
    let targets: Vec<f64> = grid.iter().map(|d| d.clamp(0.01, 0.99)).collect();
    let omega = fit_targets(basis, grid, &targets)?;
    let constraints = basis.design_matrix(grid)?;
    if max_violation(&constraints, &omega) <= 0.0 {
        return Ok(omega);
    }
    sqp::project_least_squares(&constraints, &DVector::from_vec(targets))
}

fn max_violation(constraints: &DMatrix<f64>, omega: &DVector<f64>) -> f64 {
    (constraints * omega)
        .iter()
        .fold(0.0f64, |acc, &f| acc.max(-f).max(f - 1.0))
}

/// Minimizes the reproduction objective subject to `0 ≤ f ≤ 1` on the
/// constraint grid, starting from [`initial_weights`].
pub fn optimize_weights(
    dataset: &[Demonstration],
    basis: &RbfBasis,
    config: &OptimizeConfig,
) -> Result<OptimizeReport> {
    config.validate()?;
    let objective = ReproductionObjective::new(dataset, basis, config.resample_points)?;
    let grid = uniform_grid(config.constraint_grid);
    let constraints = basis.design_matrix(&grid)?;
    let start = initial_weights(basis, &grid)?;
    if max_violation(&constraints, &start) > FEASIBILITY_TOLERANCE {
        return Err(Error::Infeasible(
            "could not find feasible initial relevance weights".to_string(),
        ));
    }

    let options = SqpOptions {
        max_iterations: config.max_iterations,
        tolerance: config.tolerance,
        gradient_step: config.gradient_step,
    };
    let outcome = sqp::minimize(|w| objective.value(w), &constraints, start, &options)?;
    let violation = max_violation(&constraints, &outcome.x);
    log::debug!(
        "relevance optimization: {} iterations, objective {:.6e}, violation {:.2e}",
        outcome.iterations,
        outcome.value,
        violation
    );
    Ok(OptimizeReport {
        omega: outcome.x.iter().copied().collect(),
        objective_value: outcome.value,
        objective_trace: outcome.trace,
        feasible: violation <= FEASIBILITY_TOLERANCE,
        max_violation: violation,
        iterations: outcome.iterations,
        converged: outcome.converged,
        seed: config.seed,
    })
}
