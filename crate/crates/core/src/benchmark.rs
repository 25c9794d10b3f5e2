//! Synthetic pick-and-transfer benchmark.
//!
//! Demonstrations lift off frame 1 along its local up axis, travel to frame 2
//! along a curve whose frame dependence blends from frame 1 to frame 2 with a
//! sigmoid relevance, and descend into frame 2 along its local up axis. The
//! harness compares frame-weighted generation with TP-GMM and augmented
//! TP-GMM on held-out situations and on randomly sampled ones.

use itertools::Itertools;
use nalgebra::{DVector, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotation_2d, rotation_3d, Frame};
use crate::optimize::{optimize_weights, OptimizeConfig, OptimizeReport};
use crate::relevance::{uniform_grid, RbfBasis, RelevanceProfile, DEFAULT_BASIS_COUNT, DEFAULT_SPREAD};
use crate::tpgmm::{augment_dataset, fit_tpgmm, gmr_generate, AugmentConfig, TpGmmModel, DEFAULT_COMPONENTS};
use crate::trajectory::{dtw_distance, resample, Demonstration, Trajectory, DEFAULT_RESAMPLE_POINTS};
use crate::transform::{generate, select_reference, DEFAULT_SELECTION_LAMBDA};

/// Sampling ranges for one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRange {
    /// `[low, high]` per axis.
    pub position: Vec<[f64; 2]>,
    /// `[low, high]` rotation angle in radians.
    pub angle: [f64; 2],
}

impl FrameRange {
    pub fn fixed(position: &[f64], angle: f64) -> Self {
        FrameRange {
            position: position.iter().map(|&p| [p, p]).collect(),
            angle: [angle, angle],
        }
    }
}

/// Random situations: uniform positions per axis and uniform rotation angles
/// about a common axis (ignored in 2D).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SituationSampler {
    pub dim: usize,
    pub frames: Vec<FrameRange>,
    pub axis: [f64; 3],
    pub seed: u64,
}

impl Default for SituationSampler {
    fn default() -> Self {
        SituationSampler {
            dim: 3,
            frames: vec![
                FrameRange {
                    position: vec![[-0.1, 0.1], [-0.2, 0.2], [0.0, 0.0]],
                    angle: [-0.2, 0.2],
                },
                FrameRange {
                    position: vec![[0.7, 1.2], [-0.4, 0.4], [-0.1, 0.3]],
                    angle: [-0.6, 0.6],
                },
            ],
            axis: [1.0, 0.0, 0.0],
            seed: 0,
        }
    }
}

fn check_range(range: [f64; 2], field: &str) -> Result<()> {
    if !range[0].is_finite() || !range[1].is_finite() {
        return Err(Error::invalid(format!("{field}: bounds must be finite")));
    }
    if range[0] > range[1] {
        return Err(Error::invalid(format!(
            "{field}: low {} exceeds high {}",
            range[0], range[1]
        )));
    }
    Ok(())
}

fn draw(rng: &mut impl Rng, range: [f64; 2]) -> f64 {
    range[0] + (range[1] - range[0]) * rng.random::<f64>()
}

impl SituationSampler {
    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::invalid(format!("sampler.dim must be 2 or 3, got {}", self.dim)));
        }
        if self.frames.len() < 2 {
            return Err(Error::invalid("sampler.frames needs at least 2 entries"));
        }
        for (j, frame) in self.frames.iter().enumerate() {
            if frame.position.len() != self.dim {
                return Err(Error::invalid(format!(
                    "sampler.frames[{j}].position has {} axes, expected {}",
                    frame.position.len(),
                    self.dim
                )));
            }
            for (a, &range) in frame.position.iter().enumerate() {
                check_range(range, &format!("sampler.frames[{j}].position[{a}]"))?;
            }
            check_range(frame.angle, &format!("sampler.frames[{j}].angle"))?;
        }
        if self.dim == 3 && Vector3::from(self.axis).norm() < 1e-12 {
            return Err(Error::invalid("sampler.axis must be non-zero"));
        }
        Ok(())
    }

    /// Draws one situation from `rng`.
    pub fn sample_with(&self, rng: &mut impl Rng) -> Result<Vec<Frame>> {
        self.validate()?;
        self.frames
            .iter()
            .map(|range| {
                let origin: Vec<f64> = range.position.iter().map(|&r| draw(rng, r)).collect();
                let angle = draw(rng, range.angle);
                let rotation = if self.dim == 2 {
                    rotation_2d(angle)
                } else {
                    rotation_3d(Vector3::from(self.axis), angle)?
                };
                Frame::new(rotation, DVector::from_vec(origin))
            })
            .collect()
    }
}

/// First situation of the sampler's seeded sequence.
pub fn sample_situation(sampler: &SituationSampler) -> Result<Vec<Frame>> {
    Ok(sample_situations(sampler, 1)?.remove(0))
}

/// The first `n` situations of the sampler's seeded sequence.
pub fn sample_situations(sampler: &SituationSampler, n: usize) -> Result<Vec<Vec<Frame>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    (0..n).map(|_| sampler.sample_with(&mut rng)).collect()
}

/// Geometry of the scripted pick-and-transfer motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PickTask {
    /// Frame-2 offset along local x in the canonical layout.
    pub span: f64,
    /// Height of the vertical lift and insertion.
    pub lift: f64,
    /// Tangent magnitude of the transfer arc.
    pub arc_tangent: f64,
    /// Slope of the ground-truth sigmoid relevance.
    pub steepness: f64,
    /// Samples of the dense transfer arc before resampling.
    pub dense_samples: usize,
    pub points: usize,
}

impl Default for PickTask {
    fn default() -> Self {
        PickTask {
            span: 1.0,
            lift: 0.1,
            arc_tangent: 0.8,
            steepness: 10.0,
            dense_samples: 2000,
            points: DEFAULT_RESAMPLE_POINTS,
        }
    }
}

impl PickTask {
    pub fn validate(&self) -> Result<()> {
        if !(self.span > 0.0 && self.lift > 0.0 && self.arc_tangent >= 0.0 && self.steepness > 0.0) {
            return Err(Error::invalid("task span, lift and steepness must be positive"));
        }
        if self.dense_samples < 10 || self.points < 2 {
            return Err(Error::invalid("task needs dense_samples >= 10 and points >= 2"));
        }
        Ok(())
    }

    /// Sigmoid relevance of frame 2, rescaled to hit 0 and 1 exactly.
    pub fn ground_truth_relevance(&self, s: f64) -> f64 {
        let sigma = |t: f64| 1.0 / (1.0 + (-self.steepness * (t - 0.5)).exp());
        (sigma(s) - sigma(0.0)) / (sigma(1.0) - sigma(0.0))
    }
}

fn unit(dim: usize, axis: usize) -> DVector<f64> {
    let mut v = DVector::zeros(dim);
    v[axis] = 1.0;
    v
}

/// Direction of motion expected when entering `frame`: down its last local axis.
pub fn approach_axis(frame: &Frame) -> DVector<f64> {
    -frame.rotation().column(frame.dim() - 1).into_owned()
}

/// Scripted demonstration in a two-frame situation with Gaussian noise of
/// standard deviation `noise` on all but the first and last points.
pub fn scripted_demo(task: &PickTask, situation: &[Frame], noise: f64, seed: u64) -> Result<Demonstration> {
    task.validate()?;
    if situation.len() != 2 {
        return Err(Error::invalid("scripted demonstrations need a two-frame situation"));
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(Error::invalid("noise must be a non-negative number"));
    }
    let (f1, f2) = (&situation[0], &situation[1]);
    let dim = f1.dim();
    if f2.dim() != dim {
        return Err(Error::invalid("situation frames have different dimensions"));
    }
    let up = unit(dim, dim - 1);
    let goal = unit(dim, 0) * task.span;
    let lifted = &up * task.lift;
    let edge = (task.dense_samples / 10).max(2);

    let mut dense = Vec::with_capacity(task.dense_samples + 2 * edge + 1);
    for i in 0..edge {
        let t = i as f64 / edge as f64;
        dense.push(f1.to_global(&(&lifted * t))?);
    }
    let n = task.dense_samples;
    for i in 0..=n {
        let s = i as f64 / n as f64;
        let (s2, s3) = (s * s, s * s * s);
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        // cubic Hermite from the lifted start to above the goal, vertical tangents
        let c = &lifted + &goal * h01 + &up * (task.arc_tangent * (h10 - h11));
        let w = task.ground_truth_relevance(s);
        let g1 = f1.to_global(&c)?;
        let g2 = f2.to_global(&(&c - &goal))?;
        dense.push(g1 * (1.0 - w) + g2 * w);
    }
    for i in 1..=edge {
        let t = i as f64 / edge as f64;
        dense.push(f2.to_global(&(&lifted * (1.0 - t)))?);
    }

    let mut points = resample(&Trajectory::new(dense)?, task.points)?.points().to_vec();
    if noise > 0.0 {
        let normal = Normal::new(0.0, noise).map_err(|e| Error::invalid(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let last = points.len() - 1;
        for p in &mut points[1..last] {
            for v in p.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }
    Demonstration::new(Trajectory::new(points)?, situation.to_vec())
}

/// Mean DTW distance between paired truths and predictions.
pub fn model_error(truths: &[Trajectory], predictions: &[Trajectory]) -> Result<f64> {
    if truths.len() != predictions.len() {
        return Err(Error::invalid(format!(
            "{} truths but {} predictions",
            truths.len(),
            predictions.len()
        )));
    }
    if truths.is_empty() {
        return Err(Error::invalid("model error needs at least one pair"));
    }
    let terms = truths
        .par_iter()
        .zip(predictions)
        .map(|(t, p)| dtw_distance(t.points(), p.points()))
        .collect::<Result<Vec<_>>>()?;
    Ok(terms.iter().sum::<f64>() / terms.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessCriteria {
    pub endpoint_tolerance: f64,
    pub approach_tolerance: f64,
}

impl Default for SuccessCriteria {
    fn default() -> Self {
        SuccessCriteria {
            endpoint_tolerance: 0.03,
            approach_tolerance: 0.35,
        }
    }
}

impl SuccessCriteria {
    pub fn validate(&self) -> Result<()> {
        if !(self.endpoint_tolerance > 0.0 && self.approach_tolerance > 0.0) {
            return Err(Error::invalid("success tolerances must be positive"));
        }
        Ok(())
    }
}

/// Whether the trajectory ends at frame 2's origin while moving along its
/// approach axis. Both thresholds are inclusive.
pub fn success_check(traj: &Trajectory, situation: &[Frame], criteria: &SuccessCriteria) -> Result<bool> {
    criteria.validate()?;
    let target = situation
        .get(1)
        .ok_or_else(|| Error::invalid("success check needs a two-frame situation"))?;
    if target.dim() != traj.dim() {
        return Err(Error::invalid("trajectory and situation dimensions differ"));
    }
    let points = traj.points();
    let last = &points[points.len() - 1];
    if (last - target.origin()).norm() > criteria.endpoint_tolerance {
        return Ok(false);
    }
    let step = last - &points[points.len() - 2];
    let norm = step.norm();
    if norm == 0.0 {
        return Ok(false);
    }
    let cos = (step.dot(&approach_axis(target)) / norm).clamp(-1.0, 1.0);
    Ok(cos.acos() <= criteria.approach_tolerance)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    FrameWeighted,
    Tpgmm,
    AugmentedTpgmm,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::FrameWeighted, Method::Tpgmm, Method::AugmentedTpgmm];

    pub fn name(self) -> &'static str {
        match self {
            Method::FrameWeighted => "frame-weighted",
            Method::Tpgmm => "tpgmm",
            Method::AugmentedTpgmm => "augmented-tpgmm",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method `{s}`")))
    }
}

/// Everything needed to run the benchmark reproducibly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub task: PickTask,
    pub sampler: SituationSampler,
    pub noise: f64,
    pub train_count: usize,
    pub validation_count: usize,
    pub components: usize,
    pub augment_target: usize,
    pub success_trials: usize,
    pub criteria: SuccessCriteria,
    pub basis_count: usize,
    pub spread: f64,
    pub optimizer: OptimizeConfig,
    pub selection_lambda: f64,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            task: PickTask::default(),
            sampler: SituationSampler::default(),
            noise: 5e-4,
            train_count: 2,
            validation_count: 4,
            components: DEFAULT_COMPONENTS,
            augment_target: 9,
            success_trials: 20,
            criteria: SuccessCriteria::default(),
            basis_count: DEFAULT_BASIS_COUNT,
            spread: DEFAULT_SPREAD,
            optimizer: OptimizeConfig::default(),
            selection_lambda: DEFAULT_SELECTION_LAMBDA,
            seed: 0,
        }
    }
}

// Independent streams derived from the run seed.
const DATASET_STREAM: u64 = 0x5eed_0001;
const SUCCESS_STREAM: u64 = 0x5eed_0002;
const AUGMENT_STREAM: u64 = 0x5eed_0003;
const SUBSET_STREAM: u64 = 0x5eed_0004;

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        self.task.validate()?;
        self.sampler.validate()?;
        self.criteria.validate()?;
        self.optimizer.validate()?;
        if self.sampler.frames.len() != 2 {
            return Err(Error::invalid("the benchmark task uses exactly two frames"));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::invalid("noise must be non-negative"));
        }
        if self.train_count < 2 {
            return Err(Error::invalid("train_count must be at least 2"));
        }
        if self.components == 0 {
            return Err(Error::invalid("components must be positive"));
        }
        Ok(())
    }

    pub fn basis(&self) -> Result<RbfBasis> {
        RbfBasis::uniform(self.basis_count, self.spread)
    }

    fn stream(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// `count` scripted demonstrations in freshly sampled situations.
    pub fn scripted_dataset(&self, count: usize) -> Result<Vec<Demonstration>> {
        let mut rng = self.stream(DATASET_STREAM);
        (0..count)
            .map(|_| {
                let situation = self.sampler.sample_with(&mut rng)?;
                let noise_seed = rng.random::<u64>();
                scripted_demo(&self.task, &situation, self.noise, noise_seed)
            })
            .collect()
    }

    /// Training and validation splits, in that order.
    pub fn split_dataset(&self) -> Result<(Vec<Demonstration>, Vec<Demonstration>)> {
        self.validate()?;
        let mut all = self.scripted_dataset(self.train_count + self.validation_count)?;
        let validation = all.split_off(self.train_count);
        Ok((all, validation))
    }

    /// Situations used for the success-rate experiment.
    pub fn success_situations(&self) -> Result<Vec<Vec<Frame>>> {
        let mut rng = self.stream(SUCCESS_STREAM);
        (0..self.success_trials)
            .map(|_| self.sampler.sample_with(&mut rng))
            .collect()
    }

    fn augment_config(&self, target_count: usize, repetition: u64) -> AugmentConfig {
        let mut rng = self.stream(AUGMENT_STREAM);
        rng.set_word_pos(u128::from(repetition) * 64);
        AugmentConfig {
            target_count,
            sampler: self.sampler.clone(),
            seed: rng.random(),
            selection_lambda: self.selection_lambda,
        }
    }
}

/// A fitted generator for one method.
#[derive(Debug, Clone)]
pub enum FittedModel {
    FrameWeighted {
        dataset: Vec<Demonstration>,
        profile: RelevanceProfile,
        lambda: f64,
    },
    Gmm(TpGmmModel),
}

impl FittedModel {
    pub fn generate(&self, situation: &[Frame], points: usize) -> Result<Trajectory> {
        match self {
            FittedModel::FrameWeighted { dataset, profile, lambda } => {
                let reference = select_reference(dataset, situation, *lambda)?;
                generate(&dataset[reference], situation, profile)
            }
            FittedModel::Gmm(model) => gmr_generate(model, situation, &uniform_grid(points)),
        }
    }

    /// Mean DTW error against the demonstrations' own trajectories.
    pub fn error_on(&self, demos: &[Demonstration], points: usize) -> Result<f64> {
        let predictions = demos
            .par_iter()
            .map(|d| self.generate(d.situation(), points))
            .collect::<Result<Vec<_>>>()?;
        let truths: Vec<Trajectory> = demos.iter().map(|d| d.trajectory().clone()).collect();
        model_error(&truths, &predictions)
    }

    pub fn success_rate(&self, situations: &[Vec<Frame>], criteria: &SuccessCriteria, points: usize) -> Result<f64> {
        if situations.is_empty() {
            return Ok(0.0);
        }
        let hits = situations
            .par_iter()
            .map(|s| success_check(&self.generate(s, points)?, s, criteria))
            .collect::<Result<Vec<bool>>>()?;
        Ok(hits.iter().filter(|&&h| h).count() as f64 / situations.len() as f64)
    }
}

/// Fits the frame-weighted relevance profile on `train`.
pub fn fit_frame_weighted(train: &[Demonstration], config: &BenchmarkConfig) -> Result<(FittedModel, OptimizeReport)> {
    let basis = config.basis()?;
    let report = optimize_weights(train, &basis, &config.optimizer)?;
    let profile = report.profile(&basis)?;
    Ok((
        FittedModel::FrameWeighted {
            dataset: train.to_vec(),
            profile,
            lambda: config.selection_lambda,
        },
        report,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub training_error: f64,
    pub validation_error: f64,
    pub success_rate: f64,
    /// Percent of TP-GMM's training error, when TP-GMM was evaluated.
    pub training_ratio: Option<f64>,
    pub validation_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub results: Vec<MethodResult>,
    /// Present when a relevance profile was fitted.
    pub profile: Option<RelevanceProfile>,
    pub optimization: Option<OptimizeReport>,
    pub success_trials: usize,
    pub seed: u64,
    /// Fitted generators in result order; not serialized.
    #[serde(skip)]
    pub fitted: Vec<(Method, FittedModel)>,
}

impl ComparisonReport {
    pub fn result(&self, method: Method) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.method == method)
    }
}

/// Fits the requested methods on `train` and scores them on the training
/// situations, the validation demonstrations and sampled situations.
pub fn run_comparison(
    train: &[Demonstration],
    validation: &[Demonstration],
    methods: &[Method],
    config: &BenchmarkConfig,
) -> Result<ComparisonReport> {
    config.validate()?;
    if train.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "comparison needs at least 2 training demonstrations, got {}",
            train.len()
        )));
    }
    if validation.is_empty() {
        return Err(Error::invalid("validation set is empty"));
    }
    if methods.is_empty() {
        return Err(Error::invalid("no methods requested"));
    }
    let methods: Vec<Method> = methods.iter().copied().sorted().dedup().collect();
    let points = config.task.points;

    let needs_profile = methods.iter().any(|m| *m != Method::Tpgmm);
    let weighted = if needs_profile {
        Some(fit_frame_weighted(train, config)?)
    } else {
        None
    };
    let situations = config.success_situations()?;

    let mut results = Vec::with_capacity(methods.len());
    let mut fitted = Vec::with_capacity(methods.len());
    for &method in &methods {
        let model = match method {
            Method::FrameWeighted => weighted.as_ref().map(|w| w.0.clone()).expect("profile fitted"),
            Method::Tpgmm => FittedModel::Gmm(fit_tpgmm(train, config.components, config.seed)?),
            Method::AugmentedTpgmm => {
                let Some((FittedModel::FrameWeighted { profile, .. }, _)) = &weighted else {
                    unreachable!("augmentation always has a profile")
                };
                let augmented = augment_dataset(train, profile, &config.augment_config(config.augment_target, 0))?;
                FittedModel::Gmm(fit_tpgmm(&augmented, config.components, config.seed)?)
            }
        };
        let result = MethodResult {
            method,
            training_error: model.error_on(train, points)?,
            validation_error: model.error_on(validation, points)?,
            success_rate: model.success_rate(&situations, &config.criteria, points)?,
            training_ratio: None,
            validation_ratio: None,
        };
        log::info!(
            "{method}: training {:.5}, validation {:.5}, success {:.0}%",
            result.training_error,
            result.validation_error,
            100.0 * result.success_rate
        );
        results.push(result);
        fitted.push((method, model));
    }

    if let Some(reference) = results.iter().find(|r| r.method == Method::Tpgmm).cloned() {
        for r in &mut results {
            r.training_ratio = Some(percent(r.training_error, reference.training_error));
            r.validation_ratio = Some(percent(r.validation_error, reference.validation_error));
        }
    }

    let (profile, optimization) = match weighted {
        Some((FittedModel::FrameWeighted { profile, .. }, report)) => (Some(profile), Some(report)),
        _ => (None, None),
    };
    Ok(ComparisonReport {
        results,
        profile,
        optimization,
        success_trials: situations.len(),
        seed: config.seed,
        fitted,
    })
}

fn percent(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        if value == 0.0 {
            100.0
        } else {
            f64::INFINITY
        }
    } else {
        100.0 * value / reference
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub benchmark: BenchmarkConfig,
    /// Training-set sizes for the demonstration-count sweep.
    pub demo_counts: Vec<usize>,
    /// Demonstrations available to draw training sets from.
    pub pool_size: usize,
    /// Upper bound on training-set combinations per count.
    pub max_combinations: usize,
    /// Synthetic demonstrations added in the augmentation sweep.
    pub augment_counts: Vec<usize>,
    /// Independent augmentation draws per count.
    pub augment_repetitions: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            benchmark: BenchmarkConfig::default(),
            demo_counts: vec![2, 3, 4, 6, 8],
            pool_size: 8,
            max_combinations: 100,
            augment_counts: vec![0, 3, 7, 15],
            augment_repetitions: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub method: Method,
    pub count: usize,
    pub mean_error: f64,
    pub runs: usize,
}

/// Pool of training demonstrations followed by the validation split.
pub fn sweep_data(config: &SweepConfig) -> Result<(Vec<Demonstration>, Vec<Demonstration>)> {
    let bench = &config.benchmark;
    bench.validate()?;
    let mut all = bench.scripted_dataset(config.pool_size + bench.validation_count)?;
    let validation = all.split_off(config.pool_size);
    Ok((all, validation))
}

/// Index sets of size `count` from `0..pool`: every combination when there
/// are at most `limit`, otherwise a seeded sample of distinct ones.
pub fn training_subsets(pool: usize, count: usize, limit: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = (0..pool).combinations(count).collect();
    if all.len() > limit {
        all.shuffle(rng);
        all.truncate(limit);
        all.sort();
    }
    all
}

/// Mean validation error of frame-weighted generation and TP-GMM against
/// the number of training demonstrations.
pub fn sweep_demo_count(config: &SweepConfig) -> Result<Vec<CurvePoint>> {
    if config.demo_counts.is_empty() || config.max_combinations == 0 {
        return Err(Error::invalid("sweep needs counts and at least one combination"));
    }
    if let Some(&c) = config.demo_counts.iter().find(|&&c| c > config.pool_size || c < 2) {
        return Err(Error::invalid(format!(
            "demo count {c} is outside 2..={} available demonstrations",
            config.pool_size
        )));
    }
    let bench = &config.benchmark;
    let (pool, validation) = sweep_data(config)?;
    let mut rng = bench.stream(SUBSET_STREAM);
    let mut curve = Vec::new();
    for &count in &config.demo_counts {
        let subsets = training_subsets(pool.len(), count, config.max_combinations, &mut rng);
        let mut fw = 0.0;
        let mut gmm = 0.0;
        for subset in &subsets {
            let train: Vec<Demonstration> = subset.iter().map(|&i| pool[i].clone()).collect();
            let (model, _) = fit_frame_weighted(&train, bench)?;
            fw += model.error_on(&validation, bench.task.points)?;
            let gmm_model = FittedModel::Gmm(fit_tpgmm(&train, bench.components, bench.seed)?);
            gmm += gmm_model.error_on(&validation, bench.task.points)?;
        }
        let runs = subsets.len();
        log::info!("demo count {count}: frame-weighted {:.5}, tpgmm {:.5} over {runs} sets", fw / runs as f64, gmm / runs as f64);
        curve.push(CurvePoint { method: Method::FrameWeighted, count, mean_error: fw / runs as f64, runs });
        curve.push(CurvePoint { method: Method::Tpgmm, count, mean_error: gmm / runs as f64, runs });
    }
    Ok(curve)
}

/// Mean validation error of augmented TP-GMM against the number of
/// synthetic demonstrations added to the default training split.
pub fn sweep_augment_count(config: &SweepConfig) -> Result<Vec<CurvePoint>> {
    if config.augment_counts.is_empty() || config.augment_repetitions == 0 {
        return Err(Error::invalid("sweep needs augmentation counts and repetitions"));
    }
    let bench = &config.benchmark;
    let (train, validation) = bench.split_dataset()?;
    let (weighted, _) = fit_frame_weighted(&train, bench)?;
    let FittedModel::FrameWeighted { profile, .. } = &weighted else {
        unreachable!("frame-weighted fit")
    };
    let mut curve = Vec::new();
    for &extra in &config.augment_counts {
        let runs = if extra == 0 { 1 } else { config.augment_repetitions };
        let mut total = 0.0;
        for r in 0..runs {
            let augmented = augment_dataset(&train, profile, &bench.augment_config(train.len() + extra, r as u64))?;
            let model = FittedModel::Gmm(fit_tpgmm(&augmented, bench.components, bench.seed)?);
            total += model.error_on(&validation, bench.task.points)?;
        }
        log::info!("augment count {extra}: {:.5} over {runs} runs", total / runs as f64);
        curve.push(CurvePoint { method: Method::AugmentedTpgmm, count: extra, mean_error: total / runs as f64, runs });
    }
    Ok(curve)
}
