//! Dense SQP for a smooth objective under two-sided linear constraints
//! `0 ≤ C x ≤ 1`, started from a feasible point.
//!
//! Each iteration solves the quadratic model with a damped-BFGS Hessian
//! (Goldfarb–Idnani dual active set, via `quadprog`) and backtracks along the
//! step until the Armijo condition holds. Since every iterate is a convex
//! combination of feasible points, the accepted sequence stays feasible and
//! the objective never increases.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 12;
/// Violation tolerated on a trial point before it is rejected outright.
const TRIAL_VIOLATION: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqpOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub gradient_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqpOutcome {
    pub x: DVector<f64>,
    pub value: f64,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn violation(constraints: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    (constraints * x)
        .iter()
        .fold(0.0f64, |acc, &f| acc.max(-f).max(f - 1.0))
}

fn central_gradient<F>(f: &F, x: &DVector<f64>, h: f64) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<f64> + Sync,
{
    let parts = (0..x.len())
        .into_par_iter()
        .map(|i| {
            let mut up = x.clone();
            let mut down = x.clone();
            up[i] += h;
            down[i] -= h;
            Ok((f(&up)? - f(&down)?) / (2.0 * h))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DVector::from_vec(parts))
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

/// Solves `min ½ pᵀ B p + gᵀ p` subject to `0 ≤ C (x + p) ≤ 1`.
fn qp_step(
    hessian: &DMatrix<f64>,
    gradient: &DVector<f64>,
    constraints: &DMatrix<f64>,
    x: &DVector<f64>,
) -> Option<DVector<f64>> {
    let values = constraints * x;
    let rows = constraints.nrows();
    let mut a = DMatrix::zeros(2 * rows, x.len());
    let mut b = Vec::with_capacity(2 * rows);
    for r in 0..rows {
        a.set_row(r, &constraints.row(r));
        b.push((1.0 - values[r]).max(0.0));
    }
    for r in 0..rows {
        a.set_row(rows + r, &(-constraints.row(r)));
        b.push(values[r].max(0.0));
    }
    let mut q = row_major(hessian);
    let solution = quadprog::solve_qp(&mut q, gradient.as_slice(), &row_major(&a), &b, 0, false).ok()?;
    let step = DVector::from_vec(solution.sol);
    step.iter().all(|v| v.is_finite()).then_some(step)
}

/// Closest point to `targets` (least squares in `C x`) with `0 ≤ C x ≤ 1`.
pub(crate) fn project_least_squares(
    constraints: &DMatrix<f64>,
    targets: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = constraints.ncols();
    let mut hessian = constraints.tr_mul(constraints);
    for i in 0..n {
        hessian[(i, i)] += 1e-8;
    }
    let linear = -constraints.tr_mul(targets);
    let zero = DVector::zeros(n);
    // with x = 0 the step is the point itself
    let point = qp_step(&hessian, &linear, constraints, &zero)
        .ok_or_else(|| Error::Infeasible("projection onto the relevance constraints failed".to_string()))?;
    Ok(point)
}

fn damped_bfgs(b: &mut DMatrix<f64>, s: &DVector<f64>, y: &DVector<f64>) {
    let bs = &*b * s;
    let sbs = s.dot(&bs);
    if !(sbs > 0.0) {
        return;
    }
    let sy = s.dot(y);
    let theta = if sy >= 0.2 * sbs {
        1.0
    } else {
        0.8 * sbs / (sbs - sy)
    };
    let r = y * theta + &bs * (1.0 - theta);
    let sr = s.dot(&r);
    if !(sr > 0.0) {
        return;
    }
    *b -= &bs * bs.transpose() / sbs;
    *b += &r * r.transpose() / sr;
    // keep it exactly symmetric
    *b = (&*b + b.transpose()) * 0.5;
}

pub(crate) fn minimize<F>(
    f: F,
    constraints: &DMatrix<f64>,
    x0: DVector<f64>,
    options: &SqpOptions,
) -> Result<SqpOutcome>
where
    F: Fn(&DVector<f64>) -> Result<f64> + Sync,
{
    let n = x0.len();
    let mut x = x0;
    let mut value = f(&x)?;
    let mut trace = vec![value];
    let mut gradient = central_gradient(&f, &x, options.gradient_step)?;
    let mut scale = 1.0;
    let mut hessian = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut scaled = false;
    let mut small_steps = 0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < options.max_iterations {
        if value == 0.0 || gradient.amax() == 0.0 {
            converged = true;
            break;
        }

        let step = qp_step(&hessian, &gradient, constraints, &x);
        let slope = step.as_ref().map_or(0.0, |p| gradient.dot(p));
        let Some(step) = step.filter(|p| slope < 0.0 && p.amax() > 1e-14) else {
            if fresh {
                converged = true;
                break;
            }
            hessian = DMatrix::identity(n, n) * scale;
            fresh = true;
            continue;
        };

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = &x + &step * alpha;
            if violation(constraints, &trial) <= TRIAL_VIOLATION {
                let trial_value = f(&trial)?;
                if trial_value <= value + ARMIJO * alpha * slope {
                    accepted = Some((trial, trial_value));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((next, next_value)) = accepted else {
            if fresh {
                converged = true;
                break;
            }
            hessian = DMatrix::identity(n, n) * scale;
            fresh = true;
            continue;
        };

        let next_gradient = central_gradient(&f, &next, options.gradient_step)?;
        let s = &next - &x;
        let y = &next_gradient - &gradient;
        let sy = s.dot(&y);
        if !scaled && sy > 0.0 {
            scale = y.dot(&y) / sy;
            hessian = DMatrix::identity(n, n) * scale;
            scaled = true;
        }
        damped_bfgs(&mut hessian, &s, &y);
        fresh = false;

        let improvement = value - next_value;
        x = next;
        value = next_value;
        gradient = next_gradient;
        trace.push(value);
        iterations += 1;

        if improvement < options.tolerance {
            small_steps += 1;
            if small_steps >= 2 {
                converged = true;
                break;
            }
        } else {
            small_steps = 0;
        }
    }

    Ok(SqpOutcome {
        x,
        value,
        trace,
        iterations,
        converged,
    })
}
