use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry, clocks and energy coefficients of one pSRAM array.
///
/// Loaded from a flat TOML file whose keys are the field names; missing keys
/// take the defaults below (256x256 bits, 8-bit words, 52 channels, 20 GHz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    /// Wordline count.
    pub rows: usize,
    /// Bitcell columns; grouped into words of `word_bits` cells.
    pub bit_cols: usize,
    pub word_bits: u32,
    /// Usable WDM channels.
    pub channels: usize,
    pub compute_freq_hz: f64,
    pub write_freq_hz: f64,
    pub adc_bits: u32,
    /// Switching energy per written bit.
    pub e_write_per_bit_j: f64,
    /// Static energy per stored bit per compute cycle.
    pub e_static_per_bit_j: f64,
    /// Words committed per write cycle; `None` means the whole array.
    /// Values of at least `word_cols` write whole wordlines.
    pub words_per_write_cycle: Option<usize>,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            rows: 256,
            bit_cols: 256,
            word_bits: 8,
            channels: 52,
            compute_freq_hz: 20e9,
            write_freq_hz: 20e9,
            adc_bits: 24,
            e_write_per_bit_j: 1.04e-12,
            e_static_per_bit_j: 16.7e-18,
            words_per_write_cycle: None,
        }
    }
}

impl ArrayConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.rows == 0 {
            return bad("rows must be at least 1".into());
        }
        if self.word_bits == 0 || self.word_bits > 16 {
            return bad(format!(
                "word_bits must be in 1..=16, got {}",
                self.word_bits
            ));
        }
        if self.bit_cols == 0 || !self.bit_cols.is_multiple_of(self.word_bits as usize) {
            return bad(format!(
                "bit_cols ({}) must be a positive multiple of word_bits ({})",
                self.bit_cols, self.word_bits
            ));
        }
        if self.channels == 0 {
            return bad("channels must be at least 1".into());
        }
        if self.adc_bits == 0 || self.adc_bits > 48 {
            return bad(format!("adc_bits must be in 1..=48, got {}", self.adc_bits));
        }
        for (name, v) in [
            ("compute_freq_hz", self.compute_freq_hz),
            ("write_freq_hz", self.write_freq_hz),
            ("e_write_per_bit_j", self.e_write_per_bit_j),
            ("e_static_per_bit_j", self.e_static_per_bit_j),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be finite and positive, got {v}"));
            }
        }
        if self.words_per_write_cycle == Some(0) {
            return bad("words_per_write_cycle must be at least 1".into());
        }
        Ok(())
    }

    pub fn word_cols(&self) -> usize {
        self.bit_cols / self.word_bits as usize
    }

    pub fn words(&self) -> usize {
        self.rows * self.word_cols()
    }

    /// Largest value a word (or an input intensity level) can hold.
    pub fn max_level(&self) -> u32 {
        (1u32 << self.word_bits) - 1
    }

    pub fn adc_max_code(&self) -> u64 {
        (1u64 << self.adc_bits) - 1
    }

    pub fn write_parallelism(&self) -> usize {
        self.words_per_write_cycle.unwrap_or_else(|| self.words())
    }

    /// Write cycles for a batch that touches `words_per_row[i]` distinct
    /// words on each listed wordline.
    pub fn write_cycles<I: IntoIterator<Item = usize>>(&self, words_per_row: I) -> u64 {
        let w = self.write_parallelism();
        let cols = self.word_cols();
        if w >= cols {
            let wordlines = (w / cols) as u64;
            let touched = words_per_row.into_iter().filter(|&n| n > 0).count() as u64;
            touched.div_ceil(wordlines)
        } else {
            words_per_row
                .into_iter()
                .map(|n| n.div_ceil(w) as u64)
                .sum()
        }
    }

    /// Write cycles for a dense `rows x cols` block of words.
    pub fn write_cycles_block(&self, rows: usize, cols: usize) -> u64 {
        if rows == 0 || cols == 0 {
            return 0;
        }
        self.write_cycles(std::iter::repeat_n(cols, rows))
    }

    pub fn write_energy(&self, words: u64) -> f64 {
        words as f64 * self.word_bits as f64 * self.e_write_per_bit_j
    }

    pub fn static_energy(&self, compute_cycles: u64) -> f64 {
        compute_cycles as f64 * (self.rows * self.bit_cols) as f64 * self.e_static_per_bit_j
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ArrayConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_geometry() {
        let c = ArrayConfig::default();
        c.validate().unwrap();
        assert_eq!(c.word_cols(), 32);
        assert_eq!(c.words(), 8192);
        assert_eq!(c.max_level(), 255);
    }

    #[test]
    fn write_parallelism_modes() {
        let mut c = ArrayConfig::default();
        assert_eq!(c.write_cycles_block(256, 32), 1);
        c.words_per_write_cycle = Some(32);
        assert_eq!(c.write_cycles_block(256, 32), 256);
        assert_eq!(c.write_cycles_block(3, 5), 3);
        c.words_per_write_cycle = Some(1);
        assert_eq!(c.write_cycles_block(256, 32), 8192);
        c.words_per_write_cycle = Some(64);
        assert_eq!(c.write_cycles_block(5, 32), 3);
        assert_eq!(c.write_cycles_block(0, 32), 0);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let c = ArrayConfig {
            channels: 26,
            words_per_write_cycle: Some(32),
            ..Default::default()
        };
        let back = ArrayConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn config_rejects_bad_values() {
        assert!(ArrayConfig::from_toml_str("bit_cols = 250").is_err());
        assert!(ArrayConfig::from_toml_str("channels = 0").is_err());
        assert!(ArrayConfig::from_toml_str("compute_freq_hz = -1.0").is_err());
        assert!(ArrayConfig::from_toml_str("adc_bits = 0").is_err());
        assert!(ArrayConfig::from_toml_str("bogus = 1").is_err());
        let partial = ArrayConfig::from_toml_str("rows = 4\nbit_cols = 32\n").unwrap();
        assert_eq!(partial.word_cols(), 4);
        assert_eq!(partial.channels, 52);
    }
}
