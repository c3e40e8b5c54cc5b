use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use psram_core::device::{ArrayConfig, ReadMode};
use psram_core::mapping::{
    hadamard_on_array, map_cp1, mttkrp_on_array, mttkrp_schedule, quantized_reference,
    scale_accumulate_on_array, tile_plan, ArrayRunOptions, ChannelMap, OpKind, Schedule,
};
use psram_core::tensor::{random_dense, random_factors};

fn ideal() -> ArrayRunOptions {
    ArrayRunOptions::default()
}

fn config_strategy() -> impl Strategy<Value = ArrayConfig> {
    (
        1usize..=12,
        1usize..=6,
        1usize..=8,
        prop::option::of(1usize..=10),
    )
        .prop_map(|(rows, word_cols, channels, w)| ArrayConfig {
            rows,
            bit_cols: 8 * word_cols,
            channels,
            words_per_write_cycle: w,
            ..Default::default()
        })
}

fn codes(rng: &mut ChaCha8Rng, n: usize) -> Vec<i64> {
    (0..n).map(|_| rng.random_range(-255..=255)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn array_matches_quantized_reference(
        shape in prop::collection::vec(1usize..=6, 3),
        rank in 1usize..=64,
        seed in any::<u64>(),
    ) {
        let t = random_dense(&shape, seed).unwrap();
        let f = random_factors(&shape, rank, seed ^ 0xabcd);
        let cfg = ArrayConfig::default();
        for mode in 0..3 {
            let res = mttkrp_on_array(&t, &f, mode, &cfg, &ideal()).unwrap();
            let (want, scale) = quantized_reference(&t, &f, mode, cfg.word_bits).unwrap();
            prop_assert_eq!(&res.codes, &want);
            prop_assert_eq!(res.scale, scale);
        }
    }

    #[test]
    fn small_arrays_match_reference_and_plan(
        cfg in config_strategy(),
        shape in prop::collection::vec(1usize..=5, 3),
        rank in 1usize..=9,
        db in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let t = random_dense(&shape, seed).unwrap();
        let f = random_factors(&shape, rank, seed.wrapping_mul(3));
        let opts = ArrayRunOptions { double_buffering: db, ..ideal() };
        for mode in 0..3 {
            let res = mttkrp_on_array(&t, &f, mode, &cfg, &opts).unwrap();
            let plan = tile_plan(&shape, rank, mode, &cfg, db).unwrap();
            prop_assert_eq!(res.run.timing, plan.timing);
            prop_assert_eq!(res.run.active_slots, plan.active_slots);
            prop_assert_eq!(res.run.ledger.words_written as u128, plan.words_written);
            prop_assert_eq!(res.run.ledger.compute_cycles as u128, plan.timing.compute_cycles);
            prop_assert_eq!(res.run.ledger.write_cycles as u128, plan.timing.write_cycles);
            prop_assert_eq!(res.schedule.ops.len() as u128, plan.ops);
            let (want, _) = quantized_reference(&t, &f, mode, cfg.word_bits).unwrap();
            prop_assert_eq!(&res.codes, &want);
        }
    }

    #[test]
    fn schedules_are_well_formed(
        cfg in config_strategy(),
        shape in prop::collection::vec(1usize..=7, 3),
        rank in 1usize..=20,
        mode in 0usize..3,
    ) {
        let s = mttkrp_schedule(&shape, mode, rank, &cfg).unwrap();
        s.validate(&cfg).unwrap();
        for op in &s.ops {
            prop_assert!(op.rows.end <= cfg.rows && op.cols.end <= cfg.word_cols());
            match op.kind {
                OpKind::Write => prop_assert!(op.channels.is_none()),
                OpKind::Cp1 => {
                    prop_assert_eq!(op.channels, Some(ChannelMap::Interleaved));
                    prop_assert_eq!(op.fan_in(), 1);
                    prop_assert!(op.channel_count() <= cfg.channels);
                }
                OpKind::Cp2Cp3 => {
                    prop_assert!(matches!(op.channels, Some(ChannelMap::Broadcast(_))));
                    prop_assert!(op.channel_count() <= cfg.channels);
                    prop_assert_eq!(op.fan_in(), op.rows.len());
                }
            }
            if op.is_compute() {
                let dep = op.depends_on.unwrap();
                prop_assert_eq!(s.ops[dep].kind, OpKind::Write);
            }
        }
    }

    #[test]
    fn schedule_text_round_trips(
        cfg in config_strategy(),
        shape in prop::collection::vec(1usize..=5, 3),
        rank in 1usize..=10,
        mode in 0usize..3,
    ) {
        let s = mttkrp_schedule(&shape, mode, rank, &cfg).unwrap();
        let text = s.to_string();
        let back = Schedule::parse(&text, "schedule.txt").unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn hadamard_is_commutative(seed in any::<u64>(), len in 1usize..=60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = codes(&mut rng, len);
        let c = codes(&mut rng, len);
        let cfg = ArrayConfig::default();
        let bc = hadamard_on_array(&b, std::slice::from_ref(&c), &cfg, &ideal()).unwrap();
        let cb = hadamard_on_array(&c, std::slice::from_ref(&b), &cfg, &ideal()).unwrap();
        prop_assert_eq!(&bc, &cb);
        let want: Vec<i64> = b.iter().zip(&c).map(|(x, y)| x * y).collect();
        prop_assert_eq!(bc.row(0), &want[..]);
    }

    #[test]
    fn scale_accumulate_matches_dot_products(
        seed in any::<u64>(),
        rank in 1usize..=16,
        terms in 1usize..=40,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = (0..rank).map(|_| rng.random_range(-1_000_000..=1_000_000)).collect::<Vec<i64>>();
        let xs = codes(&mut rng, terms);
        let h: Vec<Vec<i64>> = (0..terms)
            .map(|_| (0..rank).map(|_| rng.random_range(-65025..=65025)).collect())
            .collect();
        let cfg = ArrayConfig { rows: 7, bit_cols: 32, channels: 5, ..Default::default() };
        let out = scale_accumulate_on_array(&a, &xs, &h, &cfg, &ideal()).unwrap();
        for r in 0..rank {
            let dot: i64 = xs.iter().zip(&h).map(|(x, y)| x * y[r]).sum();
            prop_assert_eq!(out[r], a[r] + dot);
        }
    }
}

#[test]
fn length_52_hadamard_on_default_array() {
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    let cfg = ArrayConfig::default();
    let b = codes(&mut rng, 52);
    let cs: Vec<Vec<i64>> = (0..5).map(|_| codes(&mut rng, 52)).collect();
    let out = hadamard_on_array(&b, &cs, &cfg, &ideal()).unwrap();
    for (k, c) in cs.iter().enumerate() {
        let want: Vec<i64> = b.iter().zip(c).map(|(x, y)| x * y).collect();
        assert_eq!(out.row(k), &want[..]);
    }
    // One pass per streamed row, all 52 products on distinct channels.
    let s = map_cp1(&b, &cs, &cfg).unwrap();
    let computes: Vec<_> = s.ops.iter().filter(|o| o.is_compute()).collect();
    assert_eq!(computes.len(), 5);
    assert!(computes
        .iter()
        .all(|o| o.channel_count() == 52 && o.fan_in() == 1));
}

#[test]
fn analog_errors_stay_within_noise_bound() {
    let shape = [4, 5, 6];
    let t = random_dense(&shape, 7).unwrap();
    let f = random_factors(&shape, 8, 8);
    let cfg = ArrayConfig::default();
    let (mut ok, mut total) = (0usize, 0usize);
    for seed in 0..25 {
        let opts = ArrayRunOptions {
            read_mode: ReadMode::Analog { sigma: 0.001 },
            seed,
            ..ideal()
        };
        for mode in 0..3 {
            let res = mttkrp_on_array(&t, &f, mode, &cfg, &opts).unwrap();
            let bound = res.run.noise_bound.as_ref().unwrap();
            let (want, _) = quantized_reference(&t, &f, mode, cfg.word_bits).unwrap();
            for i in 0..want.rows() {
                for r in 0..want.cols() {
                    total += 1;
                    let err = (res.codes.get(i, r) - want.get(i, r)).abs() as f64;
                    if err <= bound.get(i, r) {
                        ok += 1;
                    }
                }
            }
        }
    }
    assert!(ok as f64 >= 0.99 * total as f64, "{ok}/{total}");
}

#[test]
fn analog_runs_are_reproducible() {
    let t = random_dense(&[3, 3, 3], 1).unwrap();
    let f = random_factors(&[3, 3, 3], 4, 2);
    let opts = ArrayRunOptions {
        read_mode: ReadMode::Analog { sigma: 0.01 },
        seed: 9,
        ..ideal()
    };
    let cfg = ArrayConfig::default();
    let a = mttkrp_on_array(&t, &f, 1, &cfg, &opts).unwrap();
    let b = mttkrp_on_array(&t, &f, 1, &cfg, &opts).unwrap();
    assert_eq!(a.codes, b.codes);
}
