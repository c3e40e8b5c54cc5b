use crate::device::ArrayConfig;
use crate::error::Result;

use super::schedule::{three_mode_extents, LANES_PER_RANK};

/// Write cycles that fit under `compute_cycles` of the preceding step.
pub fn hidden_write_cycles(compute_cycles: u128, cfg: &ArrayConfig) -> u128 {
    (compute_cycles as f64 * cfg.write_freq_hz / cfg.compute_freq_hz).floor() as u128
}

/// Cycle and wall-clock totals of a run.
///
/// Work proceeds in steps of one write followed by the computes that read it.
/// With double buffering a step's write overlaps the previous step's compute;
/// without it every write stalls the array.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timing {
    pub write_cycles: u128,
    pub compute_cycles: u128,
    pub exposed_write_cycles: u128,
    /// Compute cycles plus exposed write cycles.
    pub total_cycles: u128,
    pub time_s: f64,
}

impl Timing {
    fn new(write: u128, compute: u128, exposed: u128, cfg: &ArrayConfig) -> Self {
        Self {
            write_cycles: write,
            compute_cycles: compute,
            exposed_write_cycles: exposed,
            total_cycles: compute + exposed,
            time_s: compute as f64 / cfg.compute_freq_hz + exposed as f64 / cfg.write_freq_hz,
        }
    }

    /// Timing of an explicit `(write_cycles, compute_cycles)` step list.
    pub fn from_steps(steps: &[(u128, u128)], cfg: &ArrayConfig, double_buffering: bool) -> Self {
        let write = steps.iter().map(|s| s.0).sum();
        let compute = steps.iter().map(|s| s.1).sum();
        let exposed = if double_buffering {
            let mut prev = None;
            let mut total = 0;
            for &(w, c) in steps {
                total += match prev {
                    None => w,
                    Some(pc) => w.saturating_sub(hidden_write_cycles(pc, cfg)),
                };
                prev = Some(c);
            }
            total
        } else {
            write
        };
        Self::new(write, compute, exposed, cfg)
    }
}

/// Summary of a run of consecutive steps, composable without enumerating
/// them.
#[derive(Debug, Clone, Copy, Default)]
struct Span {
    steps: u128,
    first_write: u128,
    last_compute: u128,
    write: u128,
    compute: u128,
    /// Exposed write cycles over internal step boundaries.
    exposed: u128,
    words: u128,
    slots: u128,
    compute_ops: u128,
}

impl Span {
    fn step(write: u128, compute: u128, words: u128, slots: u128) -> Self {
        Self {
            steps: 1,
            first_write: write,
            last_compute: compute,
            write,
            compute,
            exposed: 0,
            words,
            slots,
            compute_ops: compute,
        }
    }

    fn then(self, next: Span, cfg: &ArrayConfig) -> Span {
        if self.steps == 0 {
            return next;
        }
        if next.steps == 0 {
            return self;
        }
        let seam = next
            .first_write
            .saturating_sub(hidden_write_cycles(self.last_compute, cfg));
        Span {
            steps: self.steps + next.steps,
            first_write: self.first_write,
            last_compute: next.last_compute,
            write: self.write + next.write,
            compute: self.compute + next.compute,
            exposed: self.exposed + next.exposed + seam,
            words: self.words + next.words,
            slots: self.slots + next.slots,
            compute_ops: self.compute_ops + next.compute_ops,
        }
    }

    fn repeat(self, n: u128, cfg: &ArrayConfig) -> Span {
        if n == 0 || self.steps == 0 {
            return Span::default();
        }
        let seam = self
            .first_write
            .saturating_sub(hidden_write_cycles(self.last_compute, cfg));
        Span {
            steps: self.steps * n,
            first_write: self.first_write,
            last_compute: self.last_compute,
            write: self.write * n,
            compute: self.compute * n,
            exposed: self.exposed * n + seam * (n - 1),
            words: self.words * n,
            slots: self.slots * n,
            compute_ops: self.compute_ops * n,
        }
    }
}

/// `n` split into `size`-wide tiles as `(count, width)` runs.
fn tiles(n: u128, size: u128) -> Vec<(u128, u128)> {
    let mut out = Vec::with_capacity(2);
    if n / size > 0 {
        out.push((n / size, size));
    }
    if !n.is_multiple_of(size) {
        out.push((1, n % size));
    }
    out
}

fn over<F: Fn(u128) -> Span>(runs: &[(u128, u128)], cfg: &ArrayConfig, f: F) -> Span {
    runs.iter().fold(Span::default(), |acc, &(count, width)| {
        acc.then(f(width).repeat(count, cfg), cfg)
    })
}

/// Per-stage counts of a plan.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StagePlan {
    /// Distinct array tiles (column groups x row tiles).
    pub tiles: u128,
    /// Wavelength passes per streamed row of a full tile.
    pub passes: u128,
    pub steps: u128,
    pub write_ops: u128,
    pub write_cycles: u128,
    pub compute_cycles: u128,
    pub words_written: u128,
    pub active_slots: u128,
}

impl StagePlan {
    fn from_span(tiles: u128, passes: u128, s: &Span) -> Self {
        Self {
            tiles,
            passes,
            steps: s.steps,
            write_ops: s.steps,
            write_cycles: s.write,
            compute_cycles: s.compute,
            words_written: s.words,
            active_slots: s.slots,
        }
    }
}

/// Analytic tiling and cycle counts of the array schedule, matching what
/// execution measures.
#[derive(Debug, Clone, PartialEq)]
pub struct TilePlan {
    pub dims: Vec<usize>,
    pub mode: usize,
    pub rank: usize,
    pub double_buffering: bool,
    pub cp1: StagePlan,
    pub cp2_cp3: StagePlan,
    pub timing: Timing,
    pub words_written: u128,
    pub active_slots: u128,
    /// Total schedule length in ops.
    pub ops: u128,
}

impl TilePlan {
    /// Average fraction of word-channel slots busy per compute cycle.
    pub fn compute_utilization(&self, cfg: &ArrayConfig) -> f64 {
        if self.timing.compute_cycles == 0 {
            return 0.0;
        }
        let cap = (cfg.rows * cfg.word_cols() * cfg.channels) as f64;
        self.active_slots as f64 / (cap * self.timing.compute_cycles as f64)
    }
}

/// Plans MTTKRP on a 3-mode `dims` tensor without building the schedule.
pub fn tile_plan(
    dims: &[usize],
    rank: usize,
    mode: usize,
    cfg: &ArrayConfig,
    double_buffering: bool,
) -> Result<TilePlan> {
    cfg.validate()?;
    let (i, j, k) = three_mode_extents(dims, mode)?;
    if rank == 0 {
        return Err(crate::Error::invalid("rank must be at least 1"));
    }
    let (i, j, k, r) = (i as u128, j as u128, k as u128, rank as u128);
    let rows = cfg.rows as u128;
    let cols = cfg.word_cols() as u128;
    let ch = cfg.channels as u128;
    let wblock = |h: u128, w: u128| cfg.write_cycles_block(h as usize, w as usize) as u128;

    let groups = tiles(j, cols);
    let rank_tiles = tiles(r, rows);
    let cp1 = over(&groups, cfg, |gc| {
        over(&rank_tiles, cfg, |rt| {
            Span::step(wblock(rt, gc), k * rt.div_ceil(ch), rt * gc, k * rt * gc)
        })
    });

    let lanes = r * LANES_PER_RANK as u128;
    let out_tiles = tiles(i, cols);
    let pair_tiles = tiles(j * k, rows);
    let cp2 = over(&out_tiles, cfg, |wi| {
        over(&pair_tiles, cfg, |lp| {
            Span::step(wblock(lp, wi), lanes.div_ceil(ch), lp * wi, lp * wi * lanes).repeat(2, cfg)
        })
    });

    let all = cp1.then(cp2, cfg);
    let exposed = if double_buffering {
        all.first_write + all.exposed
    } else {
        all.write
    };
    let count = |runs: &[(u128, u128)]| runs.iter().map(|t| t.0).sum::<u128>();
    Ok(TilePlan {
        dims: dims.to_vec(),
        mode,
        rank,
        double_buffering,
        cp1: StagePlan::from_span(
            count(&groups) * count(&rank_tiles),
            r.min(rows).div_ceil(ch),
            &cp1,
        ),
        cp2_cp3: StagePlan::from_span(
            count(&out_tiles) * count(&pair_tiles),
            lanes.div_ceil(ch),
            &cp2,
        ),
        timing: Timing::new(all.write, all.compute, exposed, cfg),
        words_written: all.words,
        active_slots: all.slots,
        ops: all.steps + all.compute_ops,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_problem_is_one_tile_per_stage() {
        let p = tile_plan(&[4, 4, 4], 4, 0, &ArrayConfig::default(), true).unwrap();
        assert_eq!(p.cp1.tiles, 1);
        assert_eq!(p.cp2_cp3.tiles, 1);
    }

    #[test]
    fn rank_twice_the_channels_takes_two_passes() {
        let p = tile_plan(&[4, 4, 4], 104, 0, &ArrayConfig::default(), true).unwrap();
        assert_eq!(p.cp1.passes, 2);
    }

    #[test]
    fn step_timing() {
        let cfg = ArrayConfig::default();
        let t = Timing::from_steps(&[(3, 1), (3, 2), (1, 5)], &cfg, true);
        // first write fully exposed, then 3-1, then 1-2 -> 0
        assert_eq!(t.exposed_write_cycles, 5);
        assert_eq!(t.total_cycles, 13);
        let t = Timing::from_steps(&[(3, 1), (3, 2), (1, 5)], &cfg, false);
        assert_eq!(t.exposed_write_cycles, 7);
    }

    #[test]
    fn million_cubed_counts() {
        let p = tile_plan(&[1_000_000; 3], 52, 0, &ArrayConfig::default(), true).unwrap();
        // 31250 output tiles x 1e12/256 pair tiles x 2 signs x 4 lane passes
        assert_eq!(p.cp2_cp3.compute_cycles, 976_562_500_000_000);
        // 31250 column groups x 1e6 streamed rows x 1 pass
        assert_eq!(p.cp1.compute_cycles, 31_250_000_000);
        assert_eq!(p.timing.exposed_write_cycles, 1);
    }
}
