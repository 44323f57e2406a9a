use crate::error::EvalError;

use super::phases::PointTrace;

/// Summary of one eye's POG-target distances, in metres.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EyeStats {
    pub mean: f64,
    pub max: f64,
    pub min: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl EyeStats {
    /// Order-independent: samples are sorted before summation.
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let (lo, hi) = (s[0], s[s.len() - 1]);
        if lo == hi {
            return Some(EyeStats {
                mean: lo,
                max: hi,
                min: lo,
                std: 0.0,
            });
        }
        let n = s.len() as f64;
        let mean = s.iter().sum::<f64>() / n;
        let mut dev: Vec<f64> = s.iter().map(|x| (x - mean) * (x - mean)).collect();
        dev.sort_by(f64::total_cmp);
        let var = dev.iter().sum::<f64>() / n;
        Some(EyeStats {
            mean: mean.clamp(lo, hi),
            max: hi,
            min: lo,
            std: var.sqrt(),
        })
    }
}

/// One row of the fixation table; `point` is `None` for the pooled row.
#[derive(Clone, Debug, PartialEq)]
pub struct StatsRow {
    pub point: Option<(f64, f64)>,
    pub right: EyeStats,
    pub left: EyeStats,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixationStats {
    pub points: Vec<StatsRow>,
    pub overall: StatsRow,
    /// Episodes that ended early through a plant or geometry failure.
    pub failed_episodes: usize,
}

/// Drops the first `warmup_drop` steps of every episode, then summarises
/// each point and the pooled samples of all points.
pub fn aggregate_stats(points: &[PointTrace], warmup_drop: usize) -> Result<FixationStats, EvalError> {
    let mut all_r = Vec::new();
    let mut all_l = Vec::new();
    let mut rows = Vec::with_capacity(points.len());
    let mut failed = 0;
    for p in points {
        let mut r = Vec::new();
        let mut l = Vec::new();
        for ep in &p.episodes {
            failed += ep.failed as usize;
            r.extend(ep.dist_r.iter().skip(warmup_drop));
            l.extend(ep.dist_l.iter().skip(warmup_drop));
        }
        let (Some(right), Some(left)) = (EyeStats::from_samples(&r), EyeStats::from_samples(&l)) else {
            return Err(EvalError::EmptyAfterDrop { drop: warmup_drop });
        };
        rows.push(StatsRow {
            point: Some((p.dy, p.dz)),
            right,
            left,
            samples: r.len(),
        });
        all_r.extend(r);
        all_l.extend(l);
    }
    let (Some(right), Some(left)) = (EyeStats::from_samples(&all_r), EyeStats::from_samples(&all_l)) else {
        return Err(EvalError::EmptyAfterDrop { drop: warmup_drop });
    };
    Ok(FixationStats {
        points: rows,
        overall: StatsRow {
            point: None,
            right,
            left,
            samples: all_r.len(),
        },
        failed_episodes: failed,
    })
}

/// Visual angle in degrees subtended by `distance_m` at `depth_m`.
pub fn deviation_angle(distance_m: f64, depth_m: f64) -> f64 {
    (distance_m / depth_m).atan().to_degrees()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalkit::phases::EpisodeTrace;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn constant_episode(d: f64, steps: usize) -> EpisodeTrace {
        EpisodeTrace {
            dist_r: vec![d; steps],
            dist_l: vec![d; steps],
            activations: vec![[0.0; 12]; steps],
            rewards: vec![0.0; steps],
            failed: false,
        }
    }

    #[test]
    fn constant_traces() {
        let p = PointTrace {
            dy: 0.0,
            dz: 0.0,
            episodes: vec![constant_episode(0.04, 100); 3],
        };
        let s = aggregate_stats(&[p], 20).unwrap();
        let r = s.points[0].right;
        assert_eq!((r.mean, r.max, r.min, r.std), (0.04, 0.04, 0.04, 0.0));
        assert_eq!(s.points[0].samples, 240);
    }

    #[test]
    fn drop_leaves_eighty_per_episode() {
        let p = PointTrace {
            dy: 0.1,
            dz: -0.1,
            episodes: vec![constant_episode(0.01, 100)],
        };
        assert_eq!(aggregate_stats(&[p], 20).unwrap().overall.samples, 80);
    }

    #[test]
    fn two_levels() {
        let p = PointTrace {
            dy: 0.0,
            dz: 0.0,
            episodes: vec![constant_episode(0.03, 50), constant_episode(0.05, 50)],
        };
        let r = aggregate_stats(&[p], 0).unwrap().points[0].right;
        assert_abs_diff_eq!(r.mean, 0.04, epsilon = 1e-15);
        assert_eq!((r.min, r.max), (0.03, 0.05));
        assert_abs_diff_eq!(r.std, 0.01, epsilon = 1e-15);
    }

    #[test]
    fn overall_pools_points() {
        let a = PointTrace {
            dy: 0.0,
            dz: 0.0,
            episodes: vec![constant_episode(0.02, 30)],
        };
        let b = PointTrace {
            dy: 0.1,
            dz: 0.0,
            episodes: vec![constant_episode(0.06, 30), constant_episode(0.06, 30)],
        };
        let s = aggregate_stats(&[a, b], 10).unwrap();
        assert_eq!(s.overall.samples, 60);
        assert_abs_diff_eq!(s.overall.right.mean, (20.0 * 0.02 + 40.0 * 0.06) / 60.0, epsilon = 1e-15);
        assert_eq!(s.overall.right.min, 0.02);
    }

    #[test]
    fn empty_after_drop() {
        let p = PointTrace {
            dy: 0.0,
            dz: 0.0,
            episodes: vec![constant_episode(0.02, 20)],
        };
        assert!(matches!(aggregate_stats(&[p], 20), Err(EvalError::EmptyAfterDrop { drop: 20 })));
    }

    #[test]
    fn angle_cases() {
        assert_eq!(deviation_angle(0.0, 1.0), 0.0);
        assert_abs_diff_eq!(deviation_angle(0.061, 1.0), 3.49, epsilon = 5e-3);
        assert_abs_diff_eq!(deviation_angle(1.0, 1.0), 45.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn ordering_holds(samples in proptest::collection::vec(0.0f64..0.5, 1..200)) {
            let s = EyeStats::from_samples(&samples).unwrap();
            prop_assert!(s.min <= s.mean && s.mean <= s.max);
            prop_assert!(s.std >= 0.0);
        }

        #[test]
        fn permutation_invariant(mut samples in proptest::collection::vec(0.0f64..0.5, 1..200), seed in any::<u64>()) {
            let a = EyeStats::from_samples(&samples).unwrap();
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            samples.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(a, EyeStats::from_samples(&samples).unwrap());
        }

        #[test]
        fn angle_monotone(a in 0.0f64..2.0, b in 0.0f64..2.0) {
            prop_assume!(a < b);
            prop_assert!(deviation_angle(a, 1.0) < deviation_angle(b, 1.0));
        }

        #[test]
        fn mean_angle_jensen_gap(samples in proptest::collection::vec(0.0f64..0.2, 1..100)) {
            let mean_d = samples.iter().sum::<f64>() / samples.len() as f64;
            let mean_angle = samples.iter().map(|&d| deviation_angle(d, 1.0)).sum::<f64>() / samples.len() as f64;
            prop_assert!((deviation_angle(mean_d, 1.0) - mean_angle).abs() < 0.1);
        }
    }
}
