//! Frame-weighted transformation of a reference demonstration into a new
//! situation.
//!
//! Everything happens in the coordinates of frame 1, where the demonstrated
//! and the new situation differ only by the pose of frame 2. Each point is
//! shifted by a weighted share of frame 2's displacement, then rotated about
//! the new frame-2 origin by the same share of frame 2's relative rotation,
//! and finally mapped back to global coordinates through the new frame 1.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{axis_angle_to_rotation, rotation_to_axis_angle, Frame};
use crate::relevance::RelevanceProfile;
use crate::trajectory::{Demonstration, Trajectory};

/// Default weight of the rotation term in the reference selection metric,
/// in length units per radian.
pub const DEFAULT_SELECTION_LAMBDA: f64 = 0.1;

/// Pose of frame 2 expressed in frame 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSituation {
    pub b2_local: DVector<f64>,
    pub a2_local: DMatrix<f64>,
}

pub fn localize_situation(f1: &Frame, f2: &Frame) -> Result<LocalSituation> {
    let rel = f1.relative(f2)?;
    Ok(LocalSituation {
        b2_local: rel.origin().clone(),
        a2_local: rel.rotation().clone(),
    })
}

fn frame_pair<'a>(situation: &'a [Frame], what: &str) -> Result<(&'a Frame, &'a Frame)> {
    match situation {
        [f1, f2] => Ok((f1, f2)),
        _ => Err(Error::invalid(format!(
            "{what} has {} frames; two-frame generation needs exactly 2 (use segmented generation otherwise)",
            situation.len()
        ))),
    }
}

/// Transforms `points` recorded in `reference` into `target`, using one
/// relevance weight per point. Weights are used as given, without clamping.
pub fn weighted_transform(
    points: &[DVector<f64>],
    reference: &[Frame],
    target: &[Frame],
    weights: &[f64],
) -> Result<Vec<DVector<f64>>> {
    let (f1, f2) = frame_pair(reference, "reference situation")?;
    let (g1, g2) = frame_pair(target, "new situation")?;
    if points.len() != weights.len() {
        return Err(Error::invalid("one weight per point is required"));
    }
    let dim = f1.dim();
    if f2.dim() != dim || g1.dim() != dim || g2.dim() != dim {
        return Err(Error::invalid("situation frames have mismatched dimensions"));
    }
    if reference == target {
        // the transform is the identity for every weight; skip the rounding
        return Ok(points.to_vec());
    }

    let old = localize_situation(f1, f2)?;
    let new = localize_situation(g1, g2)?;
    let shift = &new.b2_local - &old.b2_local;
    let relative = rotation_to_axis_angle(&(&new.a2_local * old.a2_local.transpose()))?;

    points
        .iter()
        .zip(weights)
        .map(|(p, &f)| {
            let local = f1.to_local(p)?;
            let shifted = local + &shift * f;
            let turn = axis_angle_to_rotation(&relative.scaled(f));
            let rotated = turn * (shifted - &new.b2_local) + &new.b2_local;
            g1.to_global(&rotated)
        })
        .collect()
}

/// Generates the reference trajectory in `new_situation`, weighting frame 2
/// by `profile` evaluated at the reference's own progress indices.
pub fn generate(
    reference: &Demonstration,
    new_situation: &[Frame],
    profile: &RelevanceProfile,
) -> Result<Trajectory> {
    let traj = reference.trajectory();
    let weights = traj
        .progress()
        .iter()
        .map(|&d| profile.evaluate(d))
        .collect::<Result<Vec<_>>>()?;
    let points = weighted_transform(traj.points(), reference.situation(), new_situation, &weights)?;
    Trajectory::new(points)
}

/// Distance between the localized frame-2 poses of two situations:
/// translation gap plus `lambda` times the relative rotation angle.
pub fn situation_distance(a: &[Frame], b: &[Frame], lambda: f64) -> Result<f64> {
    let (a1, a2) = frame_pair(a, "situation")?;
    let (b1, b2) = frame_pair(b, "situation")?;
    let la = localize_situation(a1, a2)?;
    let lb = localize_situation(b1, b2)?;
    if la.b2_local.len() != lb.b2_local.len() {
        return Err(Error::invalid("situations have different dimensions"));
    }
    let angle = rotation_to_axis_angle(&(&lb.a2_local * la.a2_local.transpose()))?.theta();
    Ok((&lb.b2_local - &la.b2_local).norm() + lambda * angle)
}

/// Index of the demonstration whose situation is closest to `new_situation`.
/// Ties go to the lowest index.
pub fn select_reference(
    dataset: &[Demonstration],
    new_situation: &[Frame],
    lambda: f64,
) -> Result<usize> {
    if dataset.is_empty() {
        return Err(Error::invalid("cannot select a reference from an empty dataset"));
    }
    let mut best = (0, f64::INFINITY);
    for (i, demo) in dataset.iter().enumerate() {
        let dist = situation_distance(demo.situation(), new_situation, lambda)?;
        if dist < best.1 {
            best = (i, dist);
        }
    }
    Ok(best.0)
}

/// Generates a multi-frame task segment by segment. Segment `s` runs between
/// consecutive boundaries and is driven by frames `s` and `s + 1` with
/// `profiles[s]`; junction points appear once in the output.
pub fn generate_segmented(
    reference: &Demonstration,
    new_frames: &[Frame],
    profiles: &[RelevanceProfile],
) -> Result<Trajectory> {
    let traj = reference.trajectory();
    let interior = reference.segments().unwrap_or(&[]);
    let count = interior.len() + 1;
    if profiles.len() != count {
        return Err(Error::invalid(format!(
            "{count} segments need {count} profiles, got {}",
            profiles.len()
        )));
    }
    if new_frames.len() != count + 1 || reference.situation().len() != count + 1 {
        return Err(Error::invalid(format!(
            "{count} segments need {} frames (reference has {}, new situation has {})",
            count + 1,
            reference.situation().len(),
            new_frames.len()
        )));
    }

    let mut bounds = Vec::with_capacity(count + 1);
    bounds.push(0);
    bounds.extend_from_slice(interior);
    bounds.push(traj.len() - 1);

    let mut out: Vec<DVector<f64>> = Vec::with_capacity(traj.len());
    for s in 0..count {
        let piece = Trajectory::new(traj.points()[bounds[s]..=bounds[s + 1]].to_vec())?;
        let piece = Demonstration::new(piece, reference.situation()[s..s + 2].to_vec())?;
        let generated = generate(&piece, &new_frames[s..s + 2], &profiles[s])?;
        let skip = usize::from(s > 0);
        out.extend(generated.points().iter().skip(skip).cloned());
    }
    Trajectory::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation_3d;
    use crate::relevance::RbfBasis;
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector3;
    use std::f64::consts::FRAC_PI_2;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    fn constant_profile(value: f64) -> RelevanceProfile {
        // a single very flat bump scaled to hit `value` everywhere is not exact,
        // so use Q = 1 with spread close to zero
        let basis = RbfBasis::new(vec![0.5], 1e-300).unwrap();
        RelevanceProfile::new(basis, DVector::from_element(1, value)).unwrap()
    }

    fn arc_demo(situation: Vec<Frame>) -> Demonstration {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let s = i as f64 / 29.0;
                vec![s * 1.2, 0.4 * (std::f64::consts::PI * s).sin(), 0.1 * s]
            })
            .collect();
        Demonstration::new(Trajectory::from_rows(&rows).unwrap(), situation).unwrap()
    }

    #[test]
    fn localize_examples() {
        let f2 = Frame::spatial(Vector3::z(), 0.3, [1.0, 2.0, 3.0]).unwrap();
        let id = Frame::identity(3).unwrap();
        let loc = localize_situation(&id, &f2).unwrap();
        assert_abs_diff_eq!(loc.b2_local, f2.origin().clone(), epsilon = 1e-15);
        assert_abs_diff_eq!(loc.a2_local, f2.rotation().clone(), epsilon = 1e-15);

        let same = localize_situation(&f2, &f2).unwrap();
        assert_abs_diff_eq!(same.b2_local, DVector::zeros(3), epsilon = 1e-15);
        assert_abs_diff_eq!(same.a2_local, DMatrix::identity(3, 3), epsilon = 1e-15);

        let f1 = Frame::spatial(Vector3::z(), FRAC_PI_2, [0.0; 3]).unwrap();
        let f2 = Frame::new(DMatrix::identity(3, 3), v(&[0.0, 1.0, 0.0])).unwrap();
        let loc = localize_situation(&f1, &f2).unwrap();
        assert_abs_diff_eq!(loc.b2_local, v(&[1.0, 0.0, 0.0]), epsilon = 1e-15);
        assert_abs_diff_eq!(
            loc.a2_local,
            rotation_3d(Vector3::z(), -FRAC_PI_2).unwrap(),
            epsilon = 1e-15
        );
        assert!(localize_situation(&f1, &Frame::identity(2).unwrap()).is_err());
    }

    #[test]
    fn constant_profile_is_flat() {
        let p = constant_profile(0.7);
        assert_abs_diff_eq!(p.evaluate(0.0).unwrap(), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(p.evaluate(1.0).unwrap(), 0.7, epsilon = 1e-15);
    }

    #[test]
    fn identical_situation_reproduces_reference() {
        let situation = vec![
            Frame::spatial(Vector3::new(0.2, 1.0, 0.1), 0.4, [0.1, -0.2, 0.0]).unwrap(),
            Frame::spatial(Vector3::x(), -0.8, [1.1, 0.3, 0.2]).unwrap(),
        ];
        let demo = arc_demo(situation.clone());
        for value in [0.0, 0.3, 1.0, 1.4] {
            let out = generate(&demo, &situation, &constant_profile(value)).unwrap();
            for (a, b) in out.points().iter().zip(demo.trajectory().points()) {
                assert!((a - b).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn extreme_profiles_preserve_local_coordinates() {
        let old = vec![
            Frame::spatial(Vector3::z(), 0.1, [0.0, 0.0, 0.0]).unwrap(),
            Frame::spatial(Vector3::z(), 0.5, [1.0, 0.2, 0.0]).unwrap(),
        ];
        let new = vec![
            Frame::spatial(Vector3::y(), -0.3, [0.2, 0.5, 0.1]).unwrap(),
            Frame::spatial(Vector3::x(), 1.1, [0.7, -0.4, 0.6]).unwrap(),
        ];
        let demo = arc_demo(old.clone());

        let zero = generate(&demo, &new, &constant_profile(0.0)).unwrap();
        for (a, b) in zero.points().iter().zip(demo.trajectory().points()) {
            let lhs = new[0].to_local(a).unwrap();
            let rhs = old[0].to_local(b).unwrap();
            assert!((lhs - rhs).amax() < 1e-9);
        }

        let one = generate(&demo, &new, &constant_profile(1.0)).unwrap();
        for (a, b) in one.points().iter().zip(demo.trajectory().points()) {
            let lhs = new[1].to_local(a).unwrap();
            let rhs = old[1].to_local(b).unwrap();
            assert!((lhs - rhs).amax() < 1e-9);
        }
    }

    #[test]
    fn generate_requires_two_frames() {
        let f = Frame::identity(3).unwrap();
        let demo = arc_demo(vec![f.clone(), f.clone(), f.clone()]);
        assert!(generate(&demo, &[f.clone(), f.clone()], &constant_profile(0.5)).is_err());
        let demo = arc_demo(vec![f.clone(), f.clone()]);
        assert!(generate(&demo, &[f.clone()], &constant_profile(0.5)).is_err());
        let planar = Frame::identity(2).unwrap();
        assert!(generate(&demo, &[planar.clone(), planar], &constant_profile(0.5)).is_err());
    }

    #[test]
    fn reference_selection() {
        let base = Frame::identity(3).unwrap();
        let at = |x: f64| Frame::new(DMatrix::identity(3, 3), v(&[x, 0.0, 0.0])).unwrap();
        let near = arc_demo(vec![base.clone(), at(2.0)]);
        let far = arc_demo(vec![base.clone(), at(3.0)]);
        let query = vec![base.clone(), at(1.0)];
        assert_eq!(select_reference(&[far.clone(), near.clone()], &query, 0.1).unwrap(), 1);
        assert_eq!(select_reference(&[near.clone(), far.clone()], &query, 0.1).unwrap(), 0);
        assert_eq!(select_reference(&[far.clone()], &query, 0.1).unwrap(), 0);
        assert_eq!(
            select_reference(&[near.clone(), far.clone()], far.situation(), 0.1).unwrap(),
            1
        );
        // ties resolve to the first index
        assert_eq!(select_reference(&[near.clone(), near], &query, 0.1).unwrap(), 0);
        assert!(select_reference(&[], &query, 0.1).is_err());
    }

    #[test]
    fn segment_counts_are_checked() {
        let f = Frame::identity(3).unwrap();
        let demo = arc_demo(vec![f.clone(), f.clone(), f.clone()])
            .with_segments(vec![10])
            .unwrap();
        let p = constant_profile(0.5);
        assert!(generate_segmented(&demo, &[f.clone(), f.clone(), f.clone()], &[p.clone()]).is_err());
        assert!(generate_segmented(&demo, &[f.clone(), f.clone()], &[p.clone(), p.clone()]).is_err());
        let out = generate_segmented(&demo, &[f.clone(), f.clone(), f], &[p.clone(), p]).unwrap();
        assert_eq!(out.len(), demo.trajectory().len());
    }
}
