use crate::error::{Error, Result};

/// Ideal ADC: `round(readout / full_scale * (2^bits - 1))`, clamped to the
/// code range. Halves round up.
pub fn adc_quantize(readout: f64, adc_bits: u32, full_scale: f64) -> Result<u64> {
    if !(full_scale.is_finite() && full_scale > 0.0) {
        return Err(Error::invalid(format!(
            "ADC full scale must be positive, got {full_scale}"
        )));
    }
    if adc_bits == 0 || adc_bits > 52 {
        return Err(Error::invalid(format!("unsupported ADC width {adc_bits}")));
    }
    let top = ((1u64 << adc_bits) - 1) as f64;
    let code = (readout / full_scale * top + 0.5).floor();
    Ok(code.clamp(0.0, top) as u64)
}

/// Readout value represented by an ADC code.
pub fn adc_value(code: u64, adc_bits: u32, full_scale: f64) -> f64 {
    let top = ((1u64 << adc_bits) - 1) as f64;
    code as f64 * full_scale / top
}

/// Identity encoding of a value onto the discrete intensity scale.
pub fn encode_intensity(value: u64, bits: u32) -> Result<u32> {
    if bits == 0 || bits > 16 {
        return Err(Error::invalid(format!(
            "unsupported intensity width {bits}"
        )));
    }
    if value >= 1u64 << bits {
        return Err(Error::invalid(format!(
            "value {value} does not fit a {bits}-bit intensity level"
        )));
    }
    Ok(value as u32)
}
