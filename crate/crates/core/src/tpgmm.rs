//! Task-parameterized GMM baseline.
//!
//! Each demonstration point is observed from every task frame as the vector
//! `(d, A_j⁻¹ (ξ − b_j))`. A mixture is fitted jointly over all frames by EM,
//! mapped into a new situation frame by frame, fused per component with a
//! product of Gaussians, and decoded with Gaussian mixture regression on the
//! progress index.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmark::SituationSampler;
use crate::error::{Error, Result};
use crate::geometry::Frame;
use crate::relevance::RelevanceProfile;
use crate::trajectory::{Demonstration, Trajectory};
use crate::transform::{generate, select_reference, DEFAULT_SELECTION_LAMBDA};

/// Lower bound on covariance eigenvalues after every M-step.
pub const COVARIANCE_FLOOR: f64 = 1e-6;
/// Eigenvalue floor used when inverting fused covariances.
pub const INVERSION_FLOOR: f64 = 1e-9;
pub const DEFAULT_COMPONENTS: usize = 6;

const MAX_EM_ITERATIONS: usize = 300;
const EM_RELATIVE_TOLERANCE: f64 = 1e-6;

/// A Gaussian over `(progress, position)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Mixture with one Gaussian per component and frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct TpGmmModel {
    priors: Vec<f64>,
    /// `components[k][j]` is component `k` seen from frame `j`.
    components: Vec<Vec<Gaussian>>,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "D")]
    d: usize,
    frames: usize,
    priors: Vec<f64>,
    /// `[k][j]`, each of length `1 + D`
    means: Vec<Vec<Vec<f64>>>,
    /// `[k][j]`, row-major `(1 + D) × (1 + D)`
    covariances: Vec<Vec<Vec<f64>>>,
}

impl From<TpGmmModel> for ModelRepr {
    fn from(m: TpGmmModel) -> Self {
        ModelRepr {
            k: m.priors.len(),
            d: m.dim(),
            frames: m.frame_count(),
            priors: m.priors.clone(),
            means: m
                .components
                .iter()
                .map(|c| c.iter().map(|g| g.mean.iter().copied().collect()).collect())
                .collect(),
            covariances: m
                .components
                .iter()
                .map(|c| c.iter().map(|g| g.cov.transpose().as_slice().to_vec()).collect())
                .collect(),
        }
    }
}

impl TryFrom<ModelRepr> for TpGmmModel {
    type Error = Error;

    fn try_from(r: ModelRepr) -> Result<Self> {
        let n = r.d + 1;
        if r.priors.len() != r.k || r.means.len() != r.k || r.covariances.len() != r.k {
            return Err(Error::invalid("model arrays disagree with K"));
        }
        let mut components = Vec::with_capacity(r.k);
        for (means, covs) in r.means.iter().zip(&r.covariances) {
            if means.len() != r.frames || covs.len() != r.frames {
                return Err(Error::invalid("model arrays disagree with the frame count"));
            }
            let mut frames = Vec::with_capacity(r.frames);
            for (mean, cov) in means.iter().zip(covs) {
                if mean.len() != n || cov.len() != n * n {
                    return Err(Error::invalid("model mean or covariance has the wrong size"));
                }
                frames.push(Gaussian {
                    mean: DVector::from_row_slice(mean),
                    cov: DMatrix::from_row_slice(n, n, cov),
                });
            }
            components.push(frames);
        }
        TpGmmModel::new(r.priors, components)
    }
}

impl TpGmmModel {
    pub fn new(priors: Vec<f64>, components: Vec<Vec<Gaussian>>) -> Result<Self> {
        if priors.is_empty() || priors.len() != components.len() {
            return Err(Error::invalid("need one prior per component"));
        }
        if priors.iter().any(|&p| !(p >= 0.0)) || (priors.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("priors must be non-negative and sum to 1"));
        }
        let frames = components[0].len();
        let n = components[0].first().map(|g| g.mean.len()).unwrap_or(0);
        if frames == 0 || n < 2 {
            return Err(Error::invalid("components need at least one frame of dimension ≥ 2"));
        }
        for g in components.iter().flatten() {
            if g.mean.len() != n || g.cov.nrows() != n || g.cov.ncols() != n {
                return Err(Error::invalid("inconsistent Gaussian sizes"));
            }
            if Cholesky::new(g.cov.clone()).is_none() {
                return Err(Error::invalid("covariance is not positive definite"));
            }
        }
        if components.iter().any(|c| c.len() != frames) {
            return Err(Error::invalid("components have different frame counts"));
        }
        Ok(TpGmmModel { priors, components })
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn component(&self, k: usize, frame: usize) -> &Gaussian {
        &self.components[k][frame]
    }

    pub fn component_count(&self) -> usize {
        self.priors.len()
    }

    pub fn frame_count(&self) -> usize {
        self.components[0].len()
    }

    /// Spatial dimension `D` (Gaussians live in `1 + D`).
    pub fn dim(&self) -> usize {
        self.components[0][0].mean.len() - 1
    }
}

/// Per-frame observations `(d, local position)` of a dataset.
#[derive(Debug, Clone)]
pub struct FrameObservations {
    /// `samples[j][n]`
    samples: Vec<Vec<DVector<f64>>>,
    progress: Vec<f64>,
}

impl FrameObservations {
    pub fn from_dataset(dataset: &[Demonstration]) -> Result<Self> {
        let first = dataset
            .first()
            .ok_or_else(|| Error::InsufficientData("empty dataset".to_string()))?;
        let frames = first.situation().len();
        let dim = first.dim();
        if dataset
            .iter()
            .any(|d| d.situation().len() != frames || d.dim() != dim)
        {
            return Err(Error::invalid(
                "demonstrations must share frame count and dimension",
            ));
        }
        let mut samples = vec![Vec::new(); frames];
        let mut progress = Vec::new();
        for demo in dataset {
            let traj = demo.trajectory();
            for (p, &d) in traj.points().iter().zip(traj.progress()) {
                progress.push(d);
                for (j, frame) in demo.situation().iter().enumerate() {
                    let local = frame.to_local(p)?;
                    let mut z = DVector::zeros(dim + 1);
                    z[0] = d;
                    z.rows_mut(1, dim).copy_from(&local);
                    samples[j].push(z);
                }
            }
        }
        Ok(FrameObservations { samples, progress })
    }

    pub fn len(&self) -> usize {
        self.progress.len()
    }

    pub fn is_empty(&self) -> bool {
        self.progress.is_empty()
    }

    pub fn frame_count(&self) -> usize {
        self.samples.len()
    }

    pub fn frame(&self, j: usize) -> &[DVector<f64>] {
        &self.samples[j]
    }
}

struct Factorized {
    chol: Cholesky<f64, Dyn>,
    log_norm: f64,
}

impl Factorized {
    fn new(g: &Gaussian) -> Result<Self> {
        let chol = Cholesky::new(g.cov.clone())
            .ok_or_else(|| Error::Numerical("covariance lost positive definiteness".to_string()))?;
        let n = g.mean.len() as f64;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Factorized {
            chol,
            log_norm: -0.5 * (n * (2.0 * PI).ln() + log_det),
        })
    }

    fn log_pdf(&self, mean: &DVector<f64>, z: &DVector<f64>) -> f64 {
        let diff = z - mean;
        let y = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&diff)
            .unwrap_or_else(|| diff.clone());
        self.log_norm - 0.5 * y.norm_squared()
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Clamps eigenvalues of a symmetric matrix from below.
pub fn floor_eigenvalues(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    if eig.eigenvalues.min() >= floor {
        return sym;
    }
    let clamped = eig.eigenvalues.map(|l| l.max(floor));
    let out = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    (&out + out.transpose()) * 0.5
}

/// Inverse of a symmetric matrix with eigenvalues floored at `floor`.
pub fn regularized_inverse(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let inv = eig.eigenvalues.map(|l| 1.0 / l.max(floor));
    let out = &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose();
    (&out + out.transpose()) * 0.5
}

fn log_weights(model: &TpGmmModel, factors: &[Vec<Factorized>], obs: &FrameObservations, n: usize) -> Vec<f64> {
    (0..model.component_count())
        .map(|k| {
            let mut lw = model.priors[k].ln();
            for (j, factor) in factors[k].iter().enumerate() {
                lw += factor.log_pdf(&model.components[k][j].mean, &obs.samples[j][n]);
            }
            lw
        })
        .collect()
}

fn factorize(model: &TpGmmModel) -> Result<Vec<Vec<Factorized>>> {
    model
        .components
        .iter()
        .map(|c| c.iter().map(Factorized::new).collect())
        .collect()
}

/// E-step: responsibilities (rows sum to 1) and the joint log-likelihood.
fn expectation(model: &TpGmmModel, obs: &FrameObservations) -> Result<(DMatrix<f64>, f64)> {
    let factors = factorize(model)?;
    let k = model.component_count();
    let rows: Vec<(Vec<f64>, f64)> = (0..obs.len())
        .into_par_iter()
        .map(|n| {
            let lw = log_weights(model, &factors, obs, n);
            let total = log_sum_exp(&lw);
            (lw.iter().map(|v| (v - total).exp()).collect(), total)
        })
        .collect();
    let mut resp = DMatrix::zeros(obs.len(), k);
    let mut ll = 0.0;
    for (n, (r, total)) in rows.into_iter().enumerate() {
        let sum: f64 = r.iter().sum();
        for (c, v) in r.into_iter().enumerate() {
            resp[(n, c)] = v / sum;
        }
        ll += total;
    }
    if !ll.is_finite() {
        return Err(Error::Numerical("log-likelihood is not finite".to_string()));
    }
    Ok((resp, ll))
}

fn maximization(previous: &TpGmmModel, obs: &FrameObservations, resp: &DMatrix<f64>) -> Result<TpGmmModel> {
    let n = obs.len() as f64;
    let mut priors = Vec::with_capacity(previous.component_count());
    let mut components = Vec::with_capacity(previous.component_count());
    for k in 0..previous.component_count() {
        let weight: f64 = resp.column(k).sum();
        priors.push(weight / n);
        if weight < 1e-300 {
            components.push(previous.components[k].clone());
            continue;
        }
        let frames = (0..obs.frame_count())
            .map(|j| weighted_gaussian(obs.frame(j), |i| resp[(i, k)], weight))
            .collect();
        components.push(frames);
    }
    let total: f64 = priors.iter().sum();
    for p in priors.iter_mut() {
        *p /= total;
    }
    Ok(TpGmmModel { priors, components })
}

fn weighted_gaussian(samples: &[DVector<f64>], weight_of: impl Fn(usize) -> f64, total: f64) -> Gaussian {
    let dim = samples[0].len();
    let mut mean = DVector::zeros(dim);
    for (i, z) in samples.iter().enumerate() {
        mean += z * weight_of(i);
    }
    mean /= total;
    let mut cov = DMatrix::zeros(dim, dim);
    for (i, z) in samples.iter().enumerate() {
        let diff = z - &mean;
        cov += &diff * diff.transpose() * weight_of(i);
    }
    cov /= total;
    Gaussian {
        mean,
        cov: floor_eigenvalues(&cov, COVARIANCE_FLOOR),
    }
}

/// Progress-binned initialization. Points are ordered by progress with
/// seeded tie-breaking; uniform progress bins are used when each holds enough
/// points, equal-count groups of the ordering otherwise.
fn initialize(obs: &FrameObservations, k: usize, seed: u64) -> Result<TpGmmModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<(f64, u64, usize)> = obs
        .progress
        .iter()
        .enumerate()
        .map(|(i, &d)| (d, rng.random::<u64>(), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let min_members = obs.frame(0)[0].len() + 1;
    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); k];
    for &(d, _, i) in &order {
        let b = ((d * k as f64).floor() as usize).min(k - 1);
        bins[b].push(i);
    }
    if bins.iter().any(|b| b.len() < min_members) {
        let per = order.len() as f64 / k as f64;
        bins = (0..k)
            .map(|b| {
                let lo = (b as f64 * per).round() as usize;
                let hi = (((b + 1) as f64) * per).round() as usize;
                order[lo..hi.min(order.len())].iter().map(|t| t.2).collect()
            })
            .collect();
    }

    let total = obs.len() as f64;
    let mut priors = Vec::with_capacity(k);
    let mut components = Vec::with_capacity(k);
    for members in &bins {
        priors.push(members.len() as f64 / total);
        let frames = (0..obs.frame_count())
            .map(|j| {
                let subset: Vec<DVector<f64>> = members.iter().map(|&i| obs.frame(j)[i].clone()).collect();
                weighted_gaussian(&subset, |_| 1.0, subset.len() as f64)
            })
            .collect();
        components.push(frames);
    }
    TpGmmModel::new(priors, components)
}

/// Result of an EM fit together with its log-likelihood history.
#[derive(Debug, Clone)]
pub struct TpGmmFit {
    pub model: TpGmmModel,
    /// Joint log-likelihood before the first and after every M-step.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Fits a `k`-component TP-GMM by EM and keeps the likelihood trace.
pub fn fit_tpgmm_traced(dataset: &[Demonstration], k: usize, seed: u64) -> Result<TpGmmFit> {
    let mut em = EmState::new(dataset, k, seed)?;
    let mut trace = vec![em.log_likelihood()];
    let mut converged = false;
    while em.iterations() < MAX_EM_ITERATIONS {
        let previous = em.log_likelihood();
        let ll = em.step()?;
        trace.push(ll);
        if (ll - previous).abs() / previous.abs().max(1e-300) < EM_RELATIVE_TOLERANCE {
            converged = true;
            break;
        }
    }
    Ok(TpGmmFit {
        iterations: em.iterations(),
        model: em.model,
        log_likelihood: trace,
        converged,
    })
}

/// EM iterate that can be advanced one step at a time.
pub struct EmState {
    obs: FrameObservations,
    model: TpGmmModel,
    resp: DMatrix<f64>,
    log_likelihood: f64,
    iterations: usize,
}

impl EmState {
    /// Initialized model and its E-step.
    pub fn new(dataset: &[Demonstration], k: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("component count must be positive"));
        }
        let obs = FrameObservations::from_dataset(dataset)?;
        let dim = dataset[0].dim();
        if obs.len() < k * (dim + 2) {
            return Err(Error::InsufficientData(format!(
                "{} points cannot support {k} components in dimension {dim}",
                obs.len()
            )));
        }
        let model = initialize(&obs, k, seed)?;
        let (resp, log_likelihood) = expectation(&model, &obs)?;
        Ok(EmState {
            obs,
            model,
            resp,
            log_likelihood,
            iterations: 0,
        })
    }

    /// One M-step followed by an E-step; returns the new log-likelihood.
    pub fn step(&mut self) -> Result<f64> {
        self.model = maximization(&self.model, &self.obs, &self.resp)?;
        let (resp, ll) = expectation(&self.model, &self.obs)?;
        self.resp = resp;
        self.log_likelihood = ll;
        self.iterations += 1;
        Ok(ll)
    }

    pub fn model(&self) -> &TpGmmModel {
        &self.model
    }

    /// Responsibilities of the current model, one row per point.
    pub fn responsibilities(&self) -> &DMatrix<f64> {
        &self.resp
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn observations(&self) -> &FrameObservations {
        &self.obs
    }
}

pub fn fit_tpgmm(dataset: &[Demonstration], k: usize, seed: u64) -> Result<TpGmmModel> {
    Ok(fit_tpgmm_traced(dataset, k, seed)?.model)
}

/// Posterior component probabilities for every point of `dataset`.
pub fn responsibilities(model: &TpGmmModel, dataset: &[Demonstration]) -> Result<DMatrix<f64>> {
    let obs = FrameObservations::from_dataset(dataset)?;
    if obs.frame_count() != model.frame_count() {
        return Err(Error::invalid("dataset and model have different frame counts"));
    }
    Ok(expectation(model, &obs)?.0)
}

/// Joint log-likelihood of `dataset` under the model.
pub fn log_likelihood(model: &TpGmmModel, dataset: &[Demonstration]) -> Result<f64> {
    let obs = FrameObservations::from_dataset(dataset)?;
    Ok(expectation(model, &obs)?.1)
}

/// Maps a local Gaussian into global coordinates through `frame`, leaving
/// the progress coordinate unchanged.
pub fn to_global_gaussian(g: &Gaussian, frame: &Frame) -> Result<Gaussian> {
    let dim = frame.dim();
    if g.mean.len() != dim + 1 {
        return Err(Error::invalid("Gaussian and frame dimensions differ"));
    }
    let mut map = DMatrix::identity(dim + 1, dim + 1);
    map.view_mut((1, 1), (dim, dim)).copy_from(frame.rotation());
    let mut mean = &map * &g.mean;
    let mut shifted = mean.rows_mut(1, dim);
    shifted += frame.origin();
    mean = mean.clone();
    Ok(Gaussian {
        mean,
        cov: &map * &g.cov * map.transpose(),
    })
}

/// Product of Gaussians: precision is the sum of the factor precisions.
pub fn gaussian_product(factors: &[Gaussian]) -> Result<Gaussian> {
    let first = factors
        .first()
        .ok_or_else(|| Error::invalid("product of zero Gaussians"))?;
    let n = first.mean.len();
    let mut precision = DMatrix::zeros(n, n);
    let mut info = DVector::zeros(n);
    for g in factors {
        let p = regularized_inverse(&g.cov, INVERSION_FLOOR);
        info += &p * &g.mean;
        precision += p;
    }
    let cov = regularized_inverse(&precision, INVERSION_FLOOR);
    Ok(Gaussian {
        mean: &cov * info,
        cov,
    })
}

/// Component `k` of `model` fused over all frames of `situation`.
pub fn fuse_component(model: &TpGmmModel, k: usize, situation: &[Frame]) -> Result<Gaussian> {
    if situation.len() != model.frame_count() {
        return Err(Error::invalid(format!(
            "model has {} frames, situation has {}",
            model.frame_count(),
            situation.len()
        )));
    }
    let mapped = model.components[k]
        .iter()
        .zip(situation)
        .map(|(g, f)| to_global_gaussian(g, f))
        .collect::<Result<Vec<_>>>()?;
    gaussian_product(&mapped)
}

/// Expected position at each progress value of `grid` in `situation`.
pub fn gmr_generate(model: &TpGmmModel, situation: &[Frame], grid: &[f64]) -> Result<Trajectory> {
    if grid.len() < 2 {
        return Err(Error::invalid("GMR grid needs at least 2 points"));
    }
    if grid.iter().any(|d| !(0.0..=1.0).contains(d)) || grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("GMR grid must be non-decreasing within [0, 1]"));
    }
    let dim = model.dim();
    let fused = (0..model.component_count())
        .map(|k| fuse_component(model, k, situation))
        .collect::<Result<Vec<_>>>()?;

    let mut points = Vec::with_capacity(grid.len());
    for &d in grid {
        let mut lw = Vec::with_capacity(fused.len());
        let mut conditionals = Vec::with_capacity(fused.len());
        for (prior, g) in model.priors.iter().zip(&fused) {
            let var = g.cov[(0, 0)].max(INVERSION_FLOOR);
            let diff = d - g.mean[0];
            lw.push(prior.ln() - 0.5 * ((2.0 * PI * var).ln() + diff * diff / var));
            let gain = g.cov.view((1, 0), (dim, 1)) / var;
            conditionals.push(g.mean.rows(1, dim) + gain * diff);
        }
        let total = log_sum_exp(&lw);
        let mut x = DVector::zeros(dim);
        for (w, c) in lw.iter().zip(&conditionals) {
            x += c * (w - total).exp();
        }
        points.push(x);
    }
    Trajectory::new(points)
}

/// Settings for synthetic data augmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    /// Dataset size after augmentation, originals included.
    pub target_count: usize,
    pub sampler: SituationSampler,
    pub seed: u64,
    pub selection_lambda: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            target_count: 9,
            sampler: SituationSampler::default(),
            seed: 0,
            selection_lambda: DEFAULT_SELECTION_LAMBDA,
        }
    }
}

/// Appends frame-weighted trajectories generated in freshly sampled
/// situations until the dataset holds `target_count` demonstrations.
pub fn augment_dataset(
    dataset: &[Demonstration],
    profile: &RelevanceProfile,
    config: &AugmentConfig,
) -> Result<Vec<Demonstration>> {
    if dataset.is_empty() {
        return Err(Error::invalid("cannot augment an empty dataset"));
    }
    if config.target_count < dataset.len() {
        return Err(Error::invalid(format!(
            "target_count {} is below the dataset size {}",
            config.target_count,
            dataset.len()
        )));
    }
    config.sampler.validate()?;
    if config.sampler.dim != dataset[0].dim() {
        return Err(Error::invalid("sampler dimension differs from the dataset"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = dataset.to_vec();
    for _ in dataset.len()..config.target_count {
        let situation = config.sampler.sample_with(&mut rng)?;
        let reference = select_reference(dataset, &situation, config.selection_lambda)?;
        let traj = generate(&dataset[reference], &situation, profile)?;
        out.push(Demonstration::new(traj, situation)?.marked_synthetic());
    }
    Ok(out)
}
