use crate::device::ArrayConfig;
use crate::error::{Error, Result};
use crate::mapping::{tile_plan, OpKind, TilePlan};

/// How many operations a multiply-accumulate counts as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OpsConvention {
    /// Multiply and accumulate are two operations.
    #[default]
    MacAsTwo,
    MacAsOne,
}

impl OpsConvention {
    pub fn ops_per_mac(self) -> f64 {
        match self {
            OpsConvention::MacAsTwo => 2.0,
            OpsConvention::MacAsOne => 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            OpsConvention::MacAsTwo => "mac=2",
            OpsConvention::MacAsOne => "mac=1",
        }
    }
}

/// Every word multiplying every channel each compute cycle:
/// `rows * word_cols * channels * ops_per_mac * compute_freq_hz`.
pub fn peak_throughput(cfg: &ArrayConfig, convention: OpsConvention) -> f64 {
    (cfg.rows * cfg.word_cols() * cfg.channels) as f64
        * convention.ops_per_mac()
        * cfg.compute_freq_hz
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerfQuery {
    pub config: ArrayConfig,
    pub dims: Vec<usize>,
    pub rank: usize,
    /// Target mode of the MTTKRP.
    pub mode: usize,
    pub convention: OpsConvention,
    pub double_buffering: bool,
}

impl PerfQuery {
    pub fn new(config: ArrayConfig, dims: Vec<usize>, rank: usize) -> Self {
        Self {
            config,
            dims,
            rank,
            mode: 0,
            convention: OpsConvention::default(),
            double_buffering: true,
        }
    }
}

/// Cycles, slots and energy attributed to one primitive kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KindCost {
    pub kind: OpKind,
    pub compute_cycles: u128,
    pub write_cycles: u128,
    pub active_slots: u128,
    pub energy_j: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerfReport {
    pub peak_ops_per_s: f64,
    /// Busy word-channel slots times ops per MAC, over wall-clock time.
    pub sustained_ops_per_s: f64,
    /// `sustained / peak`.
    pub utilization: f64,
    /// `2 * I * J * K * R` useful MTTKRP operations over wall-clock time
    /// (scaled by the ops convention).
    pub effective_ops_per_s: f64,
    pub total_cycles: u128,
    pub time_s: f64,
    pub write_energy_j: f64,
    pub static_energy_j: f64,
    pub total_energy_j: f64,
    pub breakdown: [KindCost; 3],
    pub convention: OpsConvention,
    pub plan: TilePlan,
}

/// Wall-clock time in compute-cycle units over the array's slot capacity.
fn cycle_fraction(slots: u128, plan: &TilePlan, cfg: &ArrayConfig) -> f64 {
    let cap = (cfg.rows * cfg.word_cols() * cfg.channels) as u128;
    let t = &plan.timing;
    if t.exposed_write_cycles == 0 || cfg.compute_freq_hz == cfg.write_freq_hz {
        slots as f64 / (cap * t.total_cycles) as f64
    } else {
        let cycles = t.compute_cycles as f64
            + t.exposed_write_cycles as f64 * cfg.compute_freq_hz / cfg.write_freq_hz;
        slots as f64 / (cap as f64 * cycles)
    }
}

/// Analytic MTTKRP performance from the tile plan; no simulation.
pub fn sustained_mttkrp(query: &PerfQuery) -> Result<PerfReport> {
    let cfg = &query.config;
    if query.dims.contains(&0) || query.rank == 0 {
        return Err(Error::invalid("dims and rank must be positive"));
    }
    let plan = tile_plan(
        &query.dims,
        query.rank,
        query.mode,
        cfg,
        query.double_buffering,
    )?;
    let peak = peak_throughput(cfg, query.convention);
    let utilization = if plan.timing.total_cycles == 0 {
        0.0
    } else {
        cycle_fraction(plan.active_slots, &plan, cfg)
    };
    let time_s = plan.timing.time_s;
    let useful_macs = query.dims.iter().map(|&d| d as f64).product::<f64>() * query.rank as f64;
    let static_per_cycle = cfg.static_energy(1);
    let write_energy_j = plan.words_written as f64 * cfg.word_bits as f64 * cfg.e_write_per_bit_j;
    let static_energy_j = plan.timing.compute_cycles as f64 * static_per_cycle;
    let breakdown = [
        KindCost {
            kind: OpKind::Write,
            compute_cycles: 0,
            write_cycles: plan.timing.write_cycles,
            active_slots: 0,
            energy_j: write_energy_j,
        },
        KindCost {
            kind: OpKind::Cp1,
            compute_cycles: plan.cp1.compute_cycles,
            write_cycles: plan.cp1.write_cycles,
            active_slots: plan.cp1.active_slots,
            energy_j: plan.cp1.compute_cycles as f64 * static_per_cycle,
        },
        KindCost {
            kind: OpKind::Cp2Cp3,
            compute_cycles: plan.cp2_cp3.compute_cycles,
            write_cycles: plan.cp2_cp3.write_cycles,
            active_slots: plan.cp2_cp3.active_slots,
            energy_j: plan.cp2_cp3.compute_cycles as f64 * static_per_cycle,
        },
    ];
    Ok(PerfReport {
        peak_ops_per_s: peak,
        sustained_ops_per_s: peak * utilization,
        utilization,
        effective_ops_per_s: useful_macs * query.convention.ops_per_mac() / time_s,
        total_cycles: plan.timing.total_cycles,
        time_s,
        write_energy_j,
        static_energy_j,
        total_energy_j: write_energy_j + static_energy_j,
        breakdown,
        convention: query.convention,
        plan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_peak() {
        let cfg = ArrayConfig::default();
        assert_eq!(
            peak_throughput(&cfg, OpsConvention::MacAsTwo),
            8192.0 * 52.0 * 2.0 * 20e9
        );
        assert_eq!(
            peak_throughput(&cfg, OpsConvention::MacAsOne),
            8192.0 * 52.0 * 20e9
        );
    }

    #[test]
    fn halving_channels_or_clock_halves_peak() {
        let cfg = ArrayConfig::default();
        let full = peak_throughput(&cfg, OpsConvention::MacAsTwo);
        let c26 = ArrayConfig {
            channels: 26,
            ..cfg.clone()
        };
        let f10 = ArrayConfig {
            compute_freq_hz: 10e9,
            ..cfg
        };
        assert_eq!(peak_throughput(&c26, OpsConvention::MacAsTwo), full / 2.0);
        assert_eq!(peak_throughput(&f10, OpsConvention::MacAsTwo), full / 2.0);
    }

    #[test]
    fn tiny_tensor_underfills() {
        let r =
            sustained_mttkrp(&PerfQuery::new(ArrayConfig::default(), vec![4, 4, 4], 4)).unwrap();
        assert!(r.utilization < 0.05, "{}", r.utilization);
        assert!(r.sustained_ops_per_s <= r.peak_ops_per_s);
    }

    #[test]
    fn double_buffering_helps() {
        let mut q = PerfQuery::new(ArrayConfig::default(), vec![64, 64, 64], 16);
        let on = sustained_mttkrp(&q).unwrap();
        q.double_buffering = false;
        let off = sustained_mttkrp(&q).unwrap();
        assert!(off.sustained_ops_per_s < on.sustained_ops_per_s);
    }
}
