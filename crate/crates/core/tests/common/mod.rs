//! Independent reference computations and fixtures shared by the
//! integration tests.

#![allow(dead_code)]

use fwmg::geometry::Frame;
use fwmg::relevance::{fit_targets, uniform_grid, RbfBasis, RelevanceProfile};
use fwmg::trajectory::{Demonstration, Trajectory};
use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += (x - y) * (x - y);
    }
    acc.sqrt()
}

/// Minimum warping cost over every monotone path, found by exhaustive
/// recursion, divided by `N + M`.
pub fn brute_force_dtw(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    fn walk(x: &[Vec<f64>], y: &[Vec<f64>], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + euclid(&x[i], &y[j]);
        if i + 1 == x.len() && j + 1 == y.len() {
            *best = best.min(acc);
            return;
        }
        if i + 1 < x.len() {
            walk(x, y, i + 1, j, acc, best);
        }
        if j + 1 < y.len() {
            walk(x, y, i, j + 1, acc, best);
        }
        if i + 1 < x.len() && j + 1 < y.len() {
            walk(x, y, i + 1, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(x, y, 0, 0, 0.0, &mut best);
    best / (x.len() + y.len()) as f64
}

/// Arc-length fractions computed with plain scalar loops.
pub fn scalar_progress(rows: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut total = 0.0;
    for w in rows.windows(2) {
        total += euclid(&w[0], &w[1]);
        out.push(total);
    }
    out.iter().map(|c| c / total).collect()
}

/// Rodrigues' formula written out entry by entry.
pub fn rodrigues(axis: [f64; 3], angle: f64) -> DMatrix<f64> {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let (x, y, z) = (axis[0] / n, axis[1] / n, axis[2] / n);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    DMatrix::from_row_slice(
        3,
        3,
        &[
            t * x * x + c,
            t * x * y - s * z,
            t * x * z + s * y,
            t * x * y + s * z,
            t * y * y + c,
            t * y * z - s * x,
            t * x * z - s * y,
            t * y * z + s * x,
            t * z * z + c,
        ],
    )
}

pub fn random_axis(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

pub fn random_frame(rng: &mut impl Rng, dim: usize) -> Frame {
    let angle = rng.random_range(-3.0..3.0);
    if dim == 2 {
        Frame::planar(angle, rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))
    } else {
        let origin = [
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        ];
        Frame::new(rodrigues(random_axis(rng), angle), DVector::from_row_slice(&origin)).unwrap()
    }
}

pub fn random_situation(rng: &mut impl Rng, dim: usize) -> Vec<Frame> {
    vec![random_frame(rng, dim), random_frame(rng, dim)]
}

/// Smooth random curve of `n` points.
pub fn random_trajectory(rng: &mut impl Rng, dim: usize, n: usize) -> Trajectory {
    let coeffs: Vec<[f64; 3]> = (0..dim)
        .map(|_| {
            [
                rng.random_range(-1.0..1.0),
                rng.random_range(0.5..2.0),
                rng.random_range(-0.5..0.5),
            ]
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            coeffs
                .iter()
                .map(|c| c[0] + c[1] * s + c[2] * (3.0 * s).sin())
                .collect()
        })
        .collect();
    Trajectory::from_rows(&rows).unwrap()
}

pub fn random_demo(rng: &mut impl Rng, dim: usize, n: usize) -> Demonstration {
    let traj = random_trajectory(rng, dim, n);
    Demonstration::new(traj, random_situation(rng, dim)).unwrap()
}

/// Profile whose value is `value` everywhere on `[0, 1]`.
pub fn constant_profile(value: f64) -> RelevanceProfile {
    // a single extremely wide bump is flat to machine precision
    let basis = RbfBasis::new(vec![0.5], 1e-300).unwrap();
    RelevanceProfile::new(basis, DVector::from_element(1, value)).unwrap()
}

/// Default basis fitted to the logistic curve `1 / (1 + exp(-10 (d - 0.5)))`.
pub fn sigmoid_profile() -> RelevanceProfile {
    let basis = RbfBasis::default();
    let grid = uniform_grid(101);
    let targets: Vec<f64> = grid.iter().map(|d| 1.0 / (1.0 + (-10.0 * (d - 0.5)).exp())).collect();
    let omega = fit_targets(&basis, &grid, &targets).unwrap();
    RelevanceProfile::new(basis, omega).unwrap()
}

/// Weighted-free sample mean and biased covariance of `samples`.
pub fn sample_moments(samples: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let n = samples.len() as f64;
    let dim = samples[0].len();
    let mut mean = vec![0.0; dim];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s.iter()) {
            *m += v / n;
        }
    }
    let mut cov = DMatrix::zeros(dim, dim);
    for s in samples {
        for a in 0..dim {
            for b in 0..dim {
                cov[(a, b)] += (s[a] - mean[a]) * (s[b] - mean[b]) / n;
            }
        }
    }
    (DVector::from_vec(mean), cov)
}

pub fn max_point_error(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(p, q)| (p - q).amax()).fold(0.0, f64::max)
}

pub fn vec3(v: [f64; 3]) -> Vector3<f64> {
    Vector3::from(v)
}
