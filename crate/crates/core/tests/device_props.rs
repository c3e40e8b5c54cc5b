use proptest::prelude::*;

use psram_core::device::{
    ArrayConfig, ArrayState, EnergyLedger, OpCost, ReadMode, WavelengthInput, WordWrite,
};

fn small() -> ArrayConfig {
    ArrayConfig {
        rows: 6,
        bit_cols: 40,
        channels: 4,
        ..Default::default()
    }
}

fn full_array_writes(cfg: &ArrayConfig) -> Vec<WordWrite> {
    (0..cfg.rows)
        .flat_map(|row| {
            (0..cfg.word_cols()).map(move |col| WordWrite {
                row,
                col,
                value: ((row * 31 + col * 7) % 256) as u32,
            })
        })
        .collect()
}

#[test]
fn full_array_write_one_word_per_cycle() {
    let cfg = ArrayConfig {
        words_per_write_cycle: Some(1),
        ..Default::default()
    };
    let mut s = ArrayState::new(cfg.clone(), 0).unwrap();
    let cost = s.write_words(&full_array_writes(&cfg)).unwrap();
    assert_eq!(cost.write_cycles, 8192);
    let seconds = cost.write_cycles as f64 / cfg.write_freq_hz;
    assert!((seconds - 409.6e-9).abs() < 1e-18);
}

#[test]
fn full_array_write_energy() {
    let cfg = ArrayConfig::default();
    let mut s = ArrayState::new(cfg.clone(), 0).unwrap();
    let cost = s.write_words(&full_array_writes(&cfg)).unwrap();
    assert_eq!(cost.words_written, 8192);
    assert!((cost.write_j - 8192.0 * 8.0 * 1.04e-12).abs() < 1e-21);
    assert_eq!(cost.write_cycles, 1);
    let per_line = ArrayConfig {
        words_per_write_cycle: Some(32),
        ..cfg
    };
    let mut s = ArrayState::new(per_line.clone(), 0).unwrap();
    assert_eq!(
        s.write_words(&full_array_writes(&per_line))
            .unwrap()
            .write_cycles,
        256
    );
}

fn words(cfg: &ArrayConfig) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..=255, cfg.rows * cfg.word_cols())
}

/// Each row gets a level on one channel.
fn drives(cfg: &ArrayConfig) -> impl Strategy<Value = Vec<(usize, u32)>> {
    prop::collection::vec((0..cfg.channels, 0u32..=127), cfg.rows)
}

fn load(cfg: &ArrayConfig, w: &[u32]) -> ArrayState {
    let mut s = ArrayState::new(cfg.clone(), 0).unwrap();
    let wc = cfg.word_cols();
    let ups: Vec<WordWrite> = w
        .iter()
        .enumerate()
        .map(|(i, &value)| WordWrite {
            row: i / wc,
            col: i % wc,
            value,
        })
        .collect();
    s.write_words(&ups).unwrap();
    s
}

fn input(d: &[(usize, u32)]) -> WavelengthInput {
    let mut inp = WavelengthInput::new();
    for (row, &(ch, level)) in d.iter().enumerate() {
        inp.drive(row, ch, level);
    }
    inp
}

proptest! {
    #[test]
    fn readouts_equal_dot_product_oracle(w in words(&small()), d in drives(&small())) {
        let cfg = small();
        let mut s = load(&cfg, &w);
        let fs = (cfg.rows * 255 * 255) as f64;
        let (out, _) = s.compute_cycle(&input(&d), ReadMode::Ideal, fs).unwrap();
        let wc = cfg.word_cols();
        for col in 0..wc {
            for ch in 0..cfg.channels {
                let want: u64 = d.iter().enumerate()
                    .filter(|(_, (c, _))| *c == ch)
                    .map(|(row, (_, lvl))| *lvl as u64 * w[row * wc + col] as u64)
                    .sum();
                prop_assert_eq!(out.exact(col, ch), want);
                prop_assert_eq!(out.level(col, ch), want);
            }
        }
    }

    #[test]
    fn superposition_in_inputs(w in words(&small()), a in drives(&small()), b in prop::collection::vec(0u32..=127, 6)) {
        let cfg = small();
        // Same channels as `a`, different levels.
        let b: Vec<(usize, u32)> = a.iter().zip(&b).map(|(&(c, _), &l)| (c, l)).collect();
        let sum: Vec<(usize, u32)> = a.iter().zip(&b).map(|(&(c, x), &(_, y))| (c, x + y)).collect();
        let mut s = load(&cfg, &w);
        let (oa, _) = s.compute_cycle(&input(&a), ReadMode::Ideal, 1.0).unwrap();
        let (ob, _) = s.compute_cycle(&input(&b), ReadMode::Ideal, 1.0).unwrap();
        let (os, _) = s.compute_cycle(&input(&sum), ReadMode::Ideal, 1.0).unwrap();
        for i in 0..os.exact.len() {
            prop_assert_eq!(os.exact[i], oa.exact[i] + ob.exact[i]);
        }
    }

    #[test]
    fn superposition_in_stored_words(
        w1 in prop::collection::vec(0u32..=127, 30),
        w2 in prop::collection::vec(0u32..=127, 30),
        d in drives(&small()),
    ) {
        let cfg = small();
        let ws: Vec<u32> = w1.iter().zip(&w2).map(|(a, b)| a + b).collect();
        let run = |w: &[u32]| {
            let mut s = load(&cfg, w);
            s.compute_cycle(&input(&d), ReadMode::Ideal, 1.0).unwrap().0.exact
        };
        let (r1, r2, rs) = (run(&w1), run(&w2), run(&ws));
        for i in 0..rs.len() {
            prop_assert_eq!(rs[i], r1[i] + r2[i]);
        }
    }

    #[test]
    fn channels_are_isolated(w in words(&small()), d in drives(&small()), bump in 1u32..=100) {
        let cfg = small();
        let target = d[0].0;
        let changed: Vec<(usize, u32)> = d.iter()
            .map(|&(c, l)| if c == target { (c, (l + bump).min(255)) } else { (c, l) })
            .collect();
        let mut s = load(&cfg, &w);
        let (o1, _) = s.compute_cycle(&input(&d), ReadMode::Ideal, 1.0).unwrap();
        let (o2, _) = s.compute_cycle(&input(&changed), ReadMode::Ideal, 1.0).unwrap();
        for col in 0..cfg.word_cols() {
            for ch in (0..cfg.channels).filter(|&c| c != target) {
                prop_assert_eq!(o1.exact(col, ch), o2.exact(col, ch));
            }
        }
    }

    #[test]
    fn ledger_is_sum_of_costs(ops in prop::collection::vec((any::<bool>(), 0usize..6, 0usize..5, 0u32..=255), 0..40)) {
        let cfg = ArrayConfig { words_per_write_cycle: Some(3), ..small() };
        let mut s = ArrayState::new(cfg, 0).unwrap();
        let mut sum = EnergyLedger::default();
        let mut costs: Vec<OpCost> = Vec::new();
        for &(is_write, row, col, v) in &ops {
            let c = if is_write {
                s.write_words(&[WordWrite { row, col, value: v }, WordWrite { row: (row + 1) % 6, col, value: v }]).unwrap()
            } else {
                let mut inp = WavelengthInput::new();
                inp.drive(row, col % 4, v);
                s.compute_cycle(&inp, ReadMode::Ideal, 1.0).unwrap().1
            };
            costs.push(c);
        }
        for c in &costs {
            sum += c;
        }
        let l = s.ledger();
        prop_assert_eq!(l.compute_cycles, sum.compute_cycles);
        prop_assert_eq!(l.write_cycles, sum.write_cycles);
        prop_assert_eq!(l.words_written, sum.words_written);
        prop_assert!((l.write_j - sum.write_j).abs() <= 1e-24 * (1 + costs.len()) as f64);
        prop_assert!((l.static_j - sum.static_j).abs() <= 1e-27 * (1 + costs.len()) as f64);
        prop_assert!((l.total_j() - (l.write_j + l.static_j)).abs() == 0.0);
    }
}

#[test]
fn analog_error_stays_within_three_sigma() {
    let cfg = ArrayConfig {
        rows: 8,
        bit_cols: 64,
        channels: 2,
        ..Default::default()
    };
    let w: Vec<u32> = (0..64).map(|i| (i * 37 % 256) as u32).collect();
    let mut s = load(&cfg, &w);
    let d: Vec<(usize, u32)> = (0..8).map(|r| (r % 2, (r * 29 % 256) as u32)).collect();
    let fs = (8 * 255 * 255) as f64;
    for sigma in [1e-4, 1e-3, 1e-2] {
        let bound = (3.0 * sigma * fs).ceil() as i64;
        let (mut ok, mut total) = (0usize, 0usize);
        for _ in 0..200 {
            let (out, _) = s
                .compute_cycle(&input(&d), ReadMode::Analog { sigma }, fs)
                .unwrap();
            for col in 0..cfg.word_cols() {
                for ch in 0..cfg.channels {
                    total += 1;
                    let err = out.level(col, ch) as i64 - out.exact(col, ch) as i64;
                    if err.abs() <= bound {
                        ok += 1;
                    }
                }
            }
        }
        assert!(
            ok as f64 >= 0.99 * total as f64,
            "sigma {sigma}: {ok}/{total}"
        );
    }
}

#[test]
fn analog_noise_is_seeded() {
    let cfg = small();
    let run = |seed| {
        let mut s = ArrayState::new(cfg.clone(), seed).unwrap();
        s.write_words(&[WordWrite {
            row: 0,
            col: 0,
            value: 200,
        }])
        .unwrap();
        let mut inp = WavelengthInput::new();
        inp.drive(0, 0, 100);
        s.compute_cycle(&inp, ReadMode::Analog { sigma: 0.01 }, 65025.0)
            .unwrap()
            .0
            .analog
    };
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));
}
