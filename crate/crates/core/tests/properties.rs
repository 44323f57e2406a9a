use oculorl_core::checkpoint::{self, Checkpoint};
use oculorl_core::config::parse_config;
use oculorl_core::ddpg::{TrainConfig, Trainer};
use oculorl_core::env::{compute_reward, ActionVector, EpisodeConfig, OcularEnv, ResetOptions, RewardTerms, RewardWeights};
use oculorl_core::error::CheckpointError;
use oculorl_core::evalkit::{parse_series_csv, Series};
use oculorl_core::plant::Plant;
use proptest::prelude::*;

fn tiny_checkpoint() -> Checkpoint {
    let cfg = TrainConfig {
        episodes: 1,
        actor_hidden: vec![4, 4, 4],
        critic_hidden: vec![4, 4, 4],
        warmup_batches: 1,
        batch: 8,
        ..TrainConfig::default()
    };
    let mut t = Trainer::new(cfg, Plant::default(), EpisodeConfig::default());
    t.run(None).unwrap();
    t.checkpoint("tiny", true)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reward_is_never_positive(
        ro in 0.0..2.0f64, lo in 0.0..2.0f64, lr in 0.0..2.0f64, y in -1.0..1.0f64, crossed in any::<bool>(),
        w in prop::array::uniform5(0.0..100.0f64),
    ) {
        let t = RewardTerms { dist_ro: ro, dist_lo: lo, dist_lr: lr, lr_y: y, lr_z: if crossed { 1.0 } else { 0.0 }, r: 0.0 };
        prop_assert!(compute_reward(&t, &RewardWeights(w)) <= 0.0);
    }

    #[test]
    fn env_observations_stay_in_bounds(seed in any::<u64>(), a in prop::array::uniform12(-0.5..1.5f64)) {
        let mut env = OcularEnv::new(Plant::default(), EpisodeConfig { steps: 10, ..EpisodeConfig::default() }, seed);
        env.reset(ResetOptions::default());
        let action = ActionVector::new(a);
        for _ in 0..10 {
            let out = env.step(&action).unwrap();
            prop_assert!(out.observation.0.iter().all(|v| v.is_finite()));
            prop_assert!(out.observation.activations().iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(out.reward <= 0.0);
            if out.done { break; }
        }
    }

    #[test]
    fn series_csv_round_trips(rows in prop::collection::vec(prop::array::uniform3(-1e3..1e3f64), 1..20)) {
        let s = Series {
            x_label: "step".into(),
            x: (0..rows.len()).map(|i| i as f64).collect(),
            columns: vec![
                ("a_mean".into(), rows.iter().map(|r| r[0]).collect()),
                ("a_std".into(), rows.iter().map(|r| r[1].abs()).collect()),
                ("b".into(), rows.iter().map(|r| r[2]).collect()),
            ],
        };
        let back = parse_series_csv(&s.to_csv()).unwrap();
        prop_assert_eq!(back.columns.len(), 3);
        for ((_, a), (_, b)) in s.columns.iter().zip(&back.columns) {
            for (x, y) in a.iter().zip(b) {
                prop_assert!((x - y).abs() <= 5e-7);
            }
        }
        prop_assert_eq!(back.to_csv(), s.to_csv());
    }

    #[test]
    fn arbitrary_config_text_never_panics(text in "[ -~\n]{0,200}") {
        let _ = parse_config(&text);
    }

    #[test]
    fn arbitrary_series_text_never_panics(text in "[0-9a-z,.\\-\n ]{0,200}") {
        let _ = parse_series_csv(&text);
    }
}

#[test]
fn checkpoint_bytes_survive_round_trip_and_reject_damage() {
    let ckpt = tiny_checkpoint();
    let bytes = checkpoint::encode(&ckpt);
    assert_eq!(checkpoint::encode(&checkpoint::decode(&bytes).unwrap()), bytes);

    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig::with_cases(200));
    runner
        .run(&(0..bytes.len(), 0u8..8), |(pos, bit)| {
            let mut damaged = bytes.clone();
            damaged[pos] ^= 1 << bit;
            prop_assert!(checkpoint::decode(&damaged).is_err());
            Ok(())
        })
        .unwrap();
    runner
        .run(&(0..bytes.len()), |cut| {
            prop_assert!(matches!(checkpoint::decode(&bytes[..cut]), Err(CheckpointError::CorruptChecksum)));
            Ok(())
        })
        .unwrap();
    runner
        .run(&prop::collection::vec(any::<u8>(), 0..512), |junk| {
            prop_assert!(checkpoint::decode(&junk).is_err());
            Ok(())
        })
        .unwrap();
}

#[test]
fn checkpoint_file_round_trip() {
    let ckpt = tiny_checkpoint();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.ckpt");
    checkpoint::save(&ckpt, &path).unwrap();
    let back = checkpoint::load(&path).unwrap();
    assert_eq!(back.agent, ckpt.agent);
    assert_eq!(back.history, ckpt.history);
    assert!(matches!(checkpoint::load(&dir.path().join("missing.ckpt")), Err(CheckpointError::Io(_))));
}
