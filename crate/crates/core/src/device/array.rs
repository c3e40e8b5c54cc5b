use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::adc::{adc_quantize, adc_value};
use super::config::ArrayConfig;
use super::ledger::{EnergyLedger, OpCost};
use crate::error::{Error, Result};

/// One word update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordWrite {
    pub row: usize,
    pub col: usize,
    pub value: u32,
}

/// One modulated comb line on one wordline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Drive {
    pub row: usize,
    pub channel: usize,
    pub level: u32,
}

/// Intensity-encoded inputs for one compute cycle. A wordline may carry
/// several channels, each at most once.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WavelengthInput {
    pub drives: Vec<Drive>,
}

impl WavelengthInput {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn drive(&mut self, row: usize, channel: usize, level: u32) -> &mut Self {
        self.drives.push(Drive {
            row,
            channel,
            level,
        });
        self
    }
}

/// How column photocurrents are read out.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ReadMode {
    /// Exact integer accumulation.
    #[default]
    Ideal,
    /// Adds zero-mean Gaussian noise with standard deviation
    /// `sigma * full_scale` to every readout before the ADC.
    Analog { sigma: f64 },
}

/// Per (word column, channel) results of a compute cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnReadout {
    pub word_cols: usize,
    pub channels: usize,
    pub adc_bits: u32,
    pub full_scale: f64,
    /// Noiseless accumulation.
    pub exact: Vec<u64>,
    /// Accumulation seen by the ADC (equals `exact` in ideal mode).
    pub analog: Vec<f64>,
    pub codes: Vec<u64>,
}

impl ColumnReadout {
    fn idx(&self, col: usize, channel: usize) -> usize {
        col * self.channels + channel
    }

    pub fn exact(&self, col: usize, channel: usize) -> u64 {
        self.exact[self.idx(col, channel)]
    }

    pub fn analog(&self, col: usize, channel: usize) -> f64 {
        self.analog[self.idx(col, channel)]
    }

    pub fn code(&self, col: usize, channel: usize) -> u64 {
        self.codes[self.idx(col, channel)]
    }

    /// Post-ADC value in readout units.
    pub fn digital(&self, col: usize, channel: usize) -> f64 {
        adc_value(self.code(col, channel), self.adc_bits, self.full_scale)
    }

    /// Post-ADC value rounded to the nearest integer accumulation. Exact in
    /// ideal mode whenever `full_scale <= 2^adc_bits - 1`.
    pub fn level(&self, col: usize, channel: usize) -> u64 {
        self.digital(col, channel).round() as u64
    }
}

/// Stored contents and accumulated costs of one array.
#[derive(Debug, Clone)]
pub struct ArrayState {
    config: ArrayConfig,
    stored: Vec<u32>,
    dirty_rows: Vec<bool>,
    ledger: EnergyLedger,
    rng: ChaCha8Rng,
}

impl ArrayState {
    /// Zero-initialized array; `seed` drives analog-mode noise.
    pub fn new(config: ArrayConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            stored: vec![0; config.words()],
            dirty_rows: vec![false; config.rows],
            ledger: EnergyLedger::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            config,
        })
    }

    pub fn config(&self) -> &ArrayConfig {
        &self.config
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn word(&self, row: usize, col: usize) -> u32 {
        self.stored[row * self.config.word_cols() + col]
    }

    /// Wordlines written since the last compute cycle.
    pub fn dirty_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.dirty_rows
            .iter()
            .enumerate()
            .filter_map(|(r, &d)| d.then_some(r))
    }

    /// Applies `updates` atomically. Charges write cycles per touched
    /// wordline group and switching energy per distinct word written.
    pub fn write_words(&mut self, updates: &[WordWrite]) -> Result<OpCost> {
        let cols = self.config.word_cols();
        let max = self.config.max_level();
        let mut per_row: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for u in updates {
            if u.row >= self.config.rows || u.col >= cols {
                return Err(Error::invalid(format!(
                    "write to ({}, {}) outside {}x{} words",
                    u.row, u.col, self.config.rows, cols
                )));
            }
            if u.value > max {
                return Err(Error::invalid(format!(
                    "value {} does not fit {} bits",
                    u.value, self.config.word_bits
                )));
            }
            per_row.entry(u.row).or_default().push(u.col);
        }
        for u in updates {
            self.stored[u.row * cols + u.col] = u.value;
            self.dirty_rows[u.row] = true;
        }
        let counts: Vec<usize> = per_row
            .into_values()
            .map(|mut c| {
                c.sort_unstable();
                c.dedup();
                c.len()
            })
            .collect();
        let words: u64 = counts.iter().map(|&n| n as u64).sum();
        let cost = OpCost {
            write_cycles: self.config.write_cycles(counts),
            compute_cycles: 0,
            words_written: words,
            write_j: self.config.write_energy(words),
            static_j: 0.0,
        };
        self.ledger.charge(&cost);
        Ok(cost)
    }

    fn check_input(&self, input: &WavelengthInput) -> Result<()> {
        let mut seen = std::collections::HashSet::with_capacity(input.drives.len());
        for d in &input.drives {
            if d.row >= self.config.rows {
                return Err(Error::invalid(format!(
                    "drive on missing wordline {}",
                    d.row
                )));
            }
            if d.channel >= self.config.channels {
                return Err(Error::invalid(format!(
                    "channel {} exceeds the {} available wavelengths",
                    d.channel, self.config.channels
                )));
            }
            if d.level > self.config.max_level() {
                return Err(Error::invalid(format!(
                    "intensity level {} exceeds {} bits",
                    d.level, self.config.word_bits
                )));
            }
            if !seen.insert((d.row, d.channel)) {
                return Err(Error::invalid(format!(
                    "channel {} driven twice on wordline {}",
                    d.channel, d.row
                )));
            }
        }
        Ok(())
    }

    /// One compute cycle: every word multiplies each wavelength on its
    /// wordline, and each bitline column sums identical wavelengths.
    ///
    /// Bit-significance scaling of the per-bit optical outputs recombines into
    /// the stored word's value, so the exact accumulation on (column, channel)
    /// is `sum(level * word)` over the rows driving that channel.
    pub fn compute_cycle(
        &mut self,
        input: &WavelengthInput,
        mode: ReadMode,
        full_scale: f64,
    ) -> Result<(ColumnReadout, OpCost)> {
        self.check_input(input)?;
        let cols = self.config.word_cols();
        let channels = self.config.channels;
        let mut exact = vec![0u64; cols * channels];
        for d in &input.drives {
            if d.level == 0 {
                continue;
            }
            let row = &self.stored[d.row * cols..(d.row + 1) * cols];
            for (c, &w) in row.iter().enumerate() {
                exact[c * channels + d.channel] += d.level as u64 * w as u64;
            }
        }
        let analog: Vec<f64> = match mode {
            ReadMode::Ideal => exact.iter().map(|&v| v as f64).collect(),
            ReadMode::Analog { sigma } => {
                if !(sigma.is_finite() && sigma >= 0.0) {
                    return Err(Error::invalid(format!(
                        "noise sigma must be >= 0, got {sigma}"
                    )));
                }
                let noise = Normal::new(0.0, sigma * full_scale)
                    .map_err(|e| Error::invalid(format!("noise model: {e}")))?;
                exact
                    .iter()
                    .map(|&v| v as f64 + noise.sample(&mut self.rng))
                    .collect()
            }
        };
        let adc_bits = self.config.adc_bits;
        let codes = analog
            .iter()
            .map(|&a| adc_quantize(a, adc_bits, full_scale))
            .collect::<Result<Vec<_>>>()?;

        self.dirty_rows.fill(false);
        let cost = OpCost {
            write_cycles: 0,
            compute_cycles: 1,
            words_written: 0,
            write_j: 0.0,
            static_j: self.config.static_energy(1),
        };
        self.ledger.charge(&cost);
        Ok((
            ColumnReadout {
                word_cols: cols,
                channels,
                adc_bits,
                full_scale,
                exact,
                analog,
                codes,
            },
            cost,
        ))
    }
}
