mod common;

use approx::assert_abs_diff_eq;
use fwmg::benchmark::*;
use fwmg::geometry::Frame;
use fwmg::trajectory::{dtw_distance, Trajectory};
use nalgebra::{DVector, Vector3};

use common::rng;

fn situation(f1_angle: f64, f2_angle: f64, f2_origin: [f64; 3]) -> Vec<Frame> {
    vec![
        Frame::spatial(Vector3::x(), f1_angle, [0.05, -0.1, 0.0]).unwrap(),
        Frame::spatial(Vector3::x(), f2_angle, f2_origin).unwrap(),
    ]
}

#[test]
fn sampled_situations_stay_in_range() {
    let sampler = SituationSampler::default();
    let draws = sample_situations(&sampler, 1000).unwrap();
    for s in &draws {
        for (frame, range) in s.iter().zip(&sampler.frames) {
            for (a, r) in range.position.iter().enumerate() {
                assert!((r[0]..=r[1]).contains(&frame.origin()[a]));
            }
            let aa = fwmg::geometry::rotation_to_axis_angle(frame.rotation()).unwrap();
            let signed = aa.theta() * aa.axis().dot(&Vector3::x()).signum();
            assert!(signed >= range.angle[0] - 1e-12 && signed <= range.angle[1] + 1e-12);
            // rotations stay about the x axis
            assert_abs_diff_eq!(frame.rotation()[(0, 0)], 1.0, epsilon = 1e-15);
        }
    }
    assert_eq!(draws, sample_situations(&sampler, 1000).unwrap());
    let other = SituationSampler { seed: 1, ..sampler };
    assert_ne!(draws[0], sample_situation(&other).unwrap());
}

#[test]
fn zero_width_ranges_are_constant() {
    let sampler = SituationSampler {
        frames: vec![
            FrameRange::fixed(&[0.0, 0.0, 0.0], 0.0),
            FrameRange::fixed(&[1.0, 0.5, 0.2], 0.3),
        ],
        ..Default::default()
    };
    let draws = sample_situations(&sampler, 5).unwrap();
    assert!(draws.iter().all(|s| s == &draws[0]));
    assert_eq!(draws[0][1].origin(), &DVector::from_vec(vec![1.0, 0.5, 0.2]));
}

#[test]
fn invalid_sampler_names_the_field() {
    let mut sampler = SituationSampler::default();
    sampler.frames[1].position[2] = [0.5, 0.1];
    let err = sampler.validate().unwrap_err().to_string();
    assert!(err.contains("sampler.frames[1].position[2]"), "{err}");
    sampler.frames[1].position[2] = [0.0, 0.1];
    sampler.frames[0].angle = [f64::NAN, 0.0];
    assert!(sampler.validate().unwrap_err().to_string().contains("sampler.frames[0].angle"));
}

#[test]
fn noiseless_demo_reaches_frame_two() {
    let task = PickTask::default();
    let s = situation(0.15, -0.4, [1.0, 0.2, 0.1]);
    let demo = scripted_demo(&task, &s, 0.0, 0).unwrap();
    let traj = demo.trajectory();
    assert_eq!(traj.len(), 200);
    assert!((traj.first() - s[0].origin()).amax() < 1e-9);
    assert!((traj.last() - s[1].origin()).amax() < 1e-9);
}

#[test]
fn approach_direction_turns_with_frame_two() {
    let task = PickTask::default();
    for angle in [-0.5, 0.0, 0.35] {
        let s = situation(0.1, angle, [0.9, -0.1, 0.0]);
        let traj = scripted_demo(&task, &s, 0.0, 0).unwrap().trajectory().clone();
        let p = traj.points();
        let step = &p[p.len() - 1] - &p[p.len() - 2];
        let expected = approach_axis(&s[1]);
        assert!((step.normalize() - &expected).amax() < 1e-9);
        assert_abs_diff_eq!(expected, -Frame::spatial(Vector3::x(), angle, [0.0; 3]).unwrap().rotation().column(2).into_owned(), epsilon = 1e-15);
    }
}

#[test]
fn early_motion_is_a_lift_off_frame_one() {
    let task = PickTask::default();
    let s = situation(0.2, 0.5, [1.1, 0.3, 0.2]);
    let traj = scripted_demo(&task, &s, 0.0, 0).unwrap().trajectory().clone();
    let total = traj.path_length();
    let mut travelled = 0.0;
    for w in traj.points().windows(2) {
        travelled += (&w[1] - &w[0]).norm();
        if travelled >= 0.95 * task.lift {
            break;
        }
        let local = s[0].to_local(&w[1]).unwrap();
        assert!(local[0].abs() < 1e-9 && local[1].abs() < 1e-9, "{local}");
        assert!(local[2] > 0.0);
    }
    assert!(total > task.span);
}

#[test]
fn noise_is_seeded_and_spares_the_endpoints() {
    let task = PickTask::default();
    let s = situation(0.0, 0.0, [1.0, 0.0, 0.0]);
    let clean = scripted_demo(&task, &s, 0.0, 0).unwrap();
    let a = scripted_demo(&task, &s, 5e-4, 9).unwrap();
    let b = scripted_demo(&task, &s, 5e-4, 9).unwrap();
    assert_eq!(a.trajectory(), b.trajectory());
    assert_eq!(a.trajectory().first(), clean.trajectory().first());
    assert_eq!(a.trajectory().last(), clean.trajectory().last());
    let diffs: Vec<f64> = a.trajectory().points()[1..199]
        .iter()
        .zip(&clean.trajectory().points()[1..199])
        .flat_map(|(p, q)| (p - q).iter().copied().collect::<Vec<_>>())
        .collect();
    let sd = (diffs.iter().map(|v| v * v).sum::<f64>() / diffs.len() as f64).sqrt();
    assert!((sd - 5e-4).abs() < 5e-5, "noise sd {sd}");
}

#[test]
fn ground_truth_relevance_hits_both_ends() {
    let task = PickTask::default();
    assert_eq!(task.ground_truth_relevance(0.0), 0.0);
    assert_abs_diff_eq!(task.ground_truth_relevance(1.0), 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(task.ground_truth_relevance(0.5), 0.5, epsilon = 1e-15);
}

#[test]
fn model_error_is_the_mean_of_pairwise_distances() {
    let mut r = rng(71);
    let truths: Vec<Trajectory> = (0..4).map(|_| common::random_trajectory(&mut r, 3, 30)).collect();
    let preds: Vec<Trajectory> = (0..4).map(|_| common::random_trajectory(&mut r, 3, 25)).collect();
    let expected = truths
        .iter()
        .zip(&preds)
        .map(|(t, p)| dtw_distance(t.points(), p.points()).unwrap())
        .sum::<f64>()
        / 4.0;
    assert_abs_diff_eq!(model_error(&truths, &preds).unwrap(), expected, epsilon = 1e-15);
    assert!(model_error(&truths, &preds[..3]).is_err());
    assert!(model_error(&[], &[]).is_err());
}

fn ending(last: [f64; 3], step: [f64; 3]) -> Trajectory {
    let end = DVector::from_row_slice(&last);
    let before = &end - DVector::from_row_slice(&step);
    let start = &end + DVector::from_vec(vec![0.0, 0.0, 0.2]);
    Trajectory::new(vec![start, before, end]).unwrap()
}

#[test]
fn success_thresholds_are_inclusive() {
    let s = vec![Frame::identity(3).unwrap(), Frame::identity(3).unwrap()];
    let criteria = SuccessCriteria::default();
    // straight down into the origin
    assert!(success_check(&ending([0.0; 3], [0.0, 0.0, -0.01]), &s, &criteria).unwrap());
    // exactly on the endpoint tolerance
    assert!(success_check(&ending([0.03, 0.0, 0.0], [0.0, 0.0, -0.01]), &s, &criteria).unwrap());
    assert!(!success_check(&ending([0.3, 0.0, 0.0], [0.0, 0.0, -0.01]), &s, &criteria).unwrap());
    // approach just inside and well outside the angular tolerance
    let inside: f64 = 0.35 - 1e-9;
    assert!(success_check(&ending([0.0; 3], [inside.sin(), 0.0, -inside.cos()]), &s, &criteria).unwrap());
    assert!(!success_check(&ending([0.0; 3], [3.5f64.sin(), 0.0, -3.5f64.cos()]), &s, &criteria).unwrap());
    // a stalled final step has no direction
    assert!(!success_check(&ending([0.0; 3], [0.0; 3]), &s, &criteria).unwrap());
}

#[test]
fn success_is_invariant_under_rigid_motion() {
    let mut r = rng(72);
    let config = BenchmarkConfig::default();
    let criteria = SuccessCriteria::default();
    for i in 0..20 {
        let s = config.sampler.sample_with(&mut r).unwrap();
        let noise = if i % 2 == 0 { 0.0 } else { 0.02 };
        let traj = scripted_demo(&config.task, &s, noise, i).unwrap().trajectory().clone();
        let expected = success_check(&traj, &s, &criteria).unwrap();
        let motion = common::random_frame(&mut r, 3);
        let moved_s: Vec<Frame> = s.iter().map(|f| motion.compose(f).unwrap()).collect();
        let moved = Trajectory::new(traj.points().iter().map(|p| motion.to_global(p).unwrap()).collect()).unwrap();
        assert_eq!(success_check(&moved, &moved_s, &criteria).unwrap(), expected);
    }
}

#[test]
fn comparison_on_its_own_training_set() {
    let config = BenchmarkConfig {
        success_trials: 5,
        ..Default::default()
    };
    let (train, _) = config.split_dataset().unwrap();
    let report = run_comparison(&train, &train, &Method::ALL, &config).unwrap();
    assert_eq!(report.results.len(), 3);
    assert_eq!(report.success_trials, 5);
    let fw = report.result(Method::FrameWeighted).unwrap();
    assert_eq!(fw.training_error, fw.validation_error);
    let gmm = report.result(Method::Tpgmm).unwrap();
    assert_eq!(gmm.training_ratio, Some(100.0));
    assert_eq!(gmm.validation_ratio, Some(100.0));
    for r in &report.results {
        assert!((0.0..=1.0).contains(&r.success_rate));
        assert!((r.success_rate * 5.0).fract() == 0.0);
    }
    assert!(report.profile.is_some() && report.optimization.is_some());

    let only = run_comparison(&train, &train, &[Method::Tpgmm], &config).unwrap();
    assert_eq!(only.results.len(), 1);
    assert!(only.profile.is_none());
    assert_eq!(only.results[0].training_error, gmm.training_error);

    let no_baseline = run_comparison(&train, &train, &[Method::FrameWeighted], &config).unwrap();
    assert_eq!(no_baseline.results[0].training_ratio, None);
}

#[test]
fn method_names_round_trip() {
    for m in Method::ALL {
        assert_eq!(m.name().parse::<Method>().unwrap(), m);
    }
    assert!("gmm".parse::<Method>().is_err());
}

#[test]
fn sweep_edge_cases() {
    let config = SweepConfig {
        benchmark: BenchmarkConfig {
            validation_count: 2,
            ..Default::default()
        },
        demo_counts: vec![2],
        pool_size: 2,
        ..Default::default()
    };
    let curve = sweep_demo_count(&config).unwrap();
    assert_eq!(curve.len(), 2);
    assert!(curve.iter().all(|p| p.runs == 1 && p.count == 2));

    let too_many = SweepConfig {
        demo_counts: vec![2, 3],
        ..config.clone()
    };
    assert!(sweep_demo_count(&too_many).is_err());
    let too_few = SweepConfig {
        demo_counts: vec![1],
        ..config
    };
    assert!(sweep_demo_count(&too_few).is_err());
}

#[test]
fn subsets_are_exhaustive_or_sampled() {
    let mut r = rng(73);
    assert_eq!(training_subsets(8, 3, 100, &mut r).len(), 56);
    let sampled = training_subsets(8, 4, 10, &mut r);
    assert_eq!(sampled.len(), 10);
    let mut unique = sampled.clone();
    unique.dedup();
    assert_eq!(unique.len(), 10);
    assert!(sampled.iter().all(|s| s.len() == 4 && s.windows(2).all(|w| w[0] < w[1])));
}
