//! Trajectories, arc-length progress indices and DTW dissimilarity.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Frame;

/// Default number of points demonstrations are resampled to.
pub const DEFAULT_RESAMPLE_POINTS: usize = 200;

/// Ordered sequence of D-dimensional points with their progress indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<DVector<f64>>,
    progress: Vec<f64>,
}

impl Trajectory {
    pub fn new(points: Vec<DVector<f64>>) -> Result<Self> {
        let progress = progress_index(&points)?;
        Ok(Trajectory { points, progress })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Trajectory::new(rows.iter().map(|r| DVector::from_row_slice(r)).collect())
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn progress(&self) -> &[f64] {
        &self.progress
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn first(&self) -> &DVector<f64> {
        &self.points[0]
    }

    pub fn last(&self) -> &DVector<f64> {
        &self.points[self.points.len() - 1]
    }

    pub fn path_length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].metric_distance(&w[1])).sum()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.iter().copied().collect()).collect()
    }
}

/// Relative arc-length index of every point: 0 at the start, 1 at the end.
pub fn progress_index(points: &[DVector<f64>]) -> Result<Vec<f64>> {
    if points.len() < 2 {
        return Err(Error::DegenerateTrajectory(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::invalid("trajectory points have mixed dimensions"));
    }
    let mut cumulative = Vec::with_capacity(points.len());
    let mut total = 0.0;
    cumulative.push(0.0);
    for w in points.windows(2) {
        total += w[0].metric_distance(&w[1]);
        cumulative.push(total);
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::DegenerateTrajectory(
            "total path length is zero".to_string(),
        ));
    }
    let last = cumulative.len() - 1;
    for c in cumulative.iter_mut() {
        *c /= total;
    }
    cumulative[last] = 1.0;
    Ok(cumulative)
}

/// DTW distance with Euclidean point cost and steps `(1,0)`, `(0,1)`, `(1,1)`,
/// normalized by `len(x) + len(y)`.
pub fn dtw_distance(x: &[DVector<f64>], y: &[DVector<f64>]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::invalid("DTW needs non-empty sequences"));
    }
    let dim = x[0].len();
    if x.iter().chain(y.iter()).any(|p| p.len() != dim) {
        return Err(Error::invalid("DTW sequences have mismatched dimensions"));
    }

    let m = y.len();
    let mut prev = vec![f64::INFINITY; m];
    let mut curr = vec![0.0; m];
    for (i, xi) in x.iter().enumerate() {
        for (j, yj) in y.iter().enumerate() {
            let cost = xi.metric_distance(yj);
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => curr[j - 1],
                (_, 0) => prev[0],
                _ => prev[j].min(curr[j - 1]).min(prev[j - 1]),
            };
            curr[j] = cost + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m - 1] / (x.len() + y.len()) as f64)
}

/// Resamples to `n` points spaced uniformly in arc length.
pub fn resample(traj: &Trajectory, n: usize) -> Result<Trajectory> {
    if n < 2 {
        return Err(Error::invalid(format!("resample needs n >= 2, got {n}")));
    }
    let points = traj.points();
    let progress = traj.progress();
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for i in 0..n {
        let target = i as f64 / (n - 1) as f64;
        if i == 0 {
            out.push(points[0].clone());
            continue;
        }
        if i == n - 1 {
            out.push(traj.last().clone());
            continue;
        }
        while seg + 1 < progress.len() - 1 && progress[seg + 1] < target {
            seg += 1;
        }
        let (d0, d1) = (progress[seg], progress[seg + 1]);
        let t = if d1 > d0 { (target - d0) / (d1 - d0) } else { 0.0 };
        out.push(&points[seg] + (&points[seg + 1] - &points[seg]) * t.clamp(0.0, 1.0));
    }
    Trajectory::new(out)
}

/// A trajectory bound to the frames of the situation it was recorded in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DemonstrationRepr", into = "DemonstrationRepr")]
pub struct Demonstration {
    trajectory: Trajectory,
    situation: Vec<Frame>,
    segments: Option<Vec<usize>>,
    synthetic: bool,
}

#[derive(Serialize, Deserialize)]
struct DemonstrationRepr {
    points: Vec<Vec<f64>>,
    frames: Vec<Frame>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    segments: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    synthetic: bool,
}

impl TryFrom<DemonstrationRepr> for Demonstration {
    type Error = Error;

    fn try_from(repr: DemonstrationRepr) -> Result<Self> {
        let trajectory = Trajectory::from_rows(&repr.points)?;
        let mut demo = Demonstration::new(trajectory, repr.frames)?;
        if let Some(segments) = repr.segments {
            demo = demo.with_segments(segments)?;
        }
        demo.synthetic = repr.synthetic;
        Ok(demo)
    }
}

impl From<Demonstration> for DemonstrationRepr {
    fn from(demo: Demonstration) -> Self {
        DemonstrationRepr {
            points: demo.trajectory.to_rows(),
            frames: demo.situation,
            segments: demo.segments,
            synthetic: demo.synthetic,
        }
    }
}

impl Demonstration {
    pub fn new(trajectory: Trajectory, situation: Vec<Frame>) -> Result<Self> {
        if situation.len() < 2 {
            return Err(Error::invalid(format!(
                "a situation needs at least 2 frames, got {}",
                situation.len()
            )));
        }
        let dim = trajectory.dim();
        if situation.iter().any(|f| f.dim() != dim) {
            return Err(Error::invalid(format!(
                "situation frames must have the trajectory dimension {dim}"
            )));
        }
        Ok(Demonstration {
            trajectory,
            situation,
            segments: None,
            synthetic: false,
        })
    }

    /// Attaches segment boundaries: strictly increasing interior point indices.
    pub fn with_segments(mut self, segments: Vec<usize>) -> Result<Self> {
        let n = self.trajectory.len();
        if segments.iter().any(|&s| s == 0 || s >= n - 1) {
            return Err(Error::invalid(format!(
                "segment boundaries must lie strictly inside 0..{}",
                n - 1
            )));
        }
        if segments.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("segment boundaries must be strictly increasing"));
        }
        self.segments = Some(segments);
        Ok(self)
    }

    pub fn marked_synthetic(mut self) -> Self {
        self.synthetic = true;
        self
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn situation(&self) -> &[Frame] {
        &self.situation
    }

    pub fn segments(&self) -> Option<&[usize]> {
        self.segments.as_deref()
    }

    pub fn is_synthetic(&self) -> bool {
        self.synthetic
    }

    pub fn dim(&self) -> usize {
        self.trajectory.dim()
    }

    /// Same situation and tags, trajectory resampled to `n` points. Segment
    /// boundaries are dropped since point indices no longer apply.
    pub fn resampled(&self, n: usize) -> Result<Demonstration> {
        Ok(Demonstration {
            trajectory: resample(&self.trajectory, n)?,
            situation: self.situation.clone(),
            segments: None,
            synthetic: self.synthetic,
        })
    }
}
