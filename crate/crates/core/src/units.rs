//! Time and size units shared across the crate.
//!
//! Simulated time is integer microseconds. Byte sizes use binary prefixes
//! (`MIB`, `GIB`, ...), and the cost model's "GB" is one GiB so that one PiB
//! is exactly 2^20 GB.

use std::str::FromStr;

use thiserror::Error;

/// Microseconds since simulation start.
pub type Micros = u64;

pub const MICROS_PER_MILLI: Micros = 1_000;
pub const MICROS_PER_SECOND: Micros = 1_000_000;
pub const MICROS_PER_MINUTE: Micros = 60 * MICROS_PER_SECOND;
pub const MICROS_PER_HOUR: Micros = 60 * MICROS_PER_MINUTE;
pub const MICROS_PER_DAY: Micros = 24 * MICROS_PER_HOUR;
/// Storage is billed in 30-day months.
pub const MICROS_PER_MONTH: Micros = 30 * MICROS_PER_DAY;

pub const KIB: u64 = 1 << 10;
pub const MIB: u64 = 1 << 20;
pub const GIB: u64 = 1 << 30;
pub const TIB: u64 = 1 << 40;
pub const PIB: u64 = 1 << 50;

/// Bytes per billing GB.
pub const BYTES_PER_GB: u64 = GIB;

/// One binary petabyte expressed in billing GB.
pub const PIB_IN_GB: f64 = 1_048_576.0;
/// One decimal petabyte expressed in billing GB.
pub const PB_DECIMAL_IN_GB: f64 = 1_000_000.0;

pub fn seconds(s: f64) -> Micros {
    (s * MICROS_PER_SECOND as f64).round() as Micros
}

pub fn millis(ms: f64) -> Micros {
    (ms * MICROS_PER_MILLI as f64).round() as Micros
}

pub fn as_seconds(t: Micros) -> f64 {
    t as f64 / MICROS_PER_SECOND as f64
}

pub fn bytes_to_gb(bytes: u64) -> f64 {
    bytes as f64 / BYTES_PER_GB as f64
}

/// Time to move `bytes` at `mb_per_s` (MiB/s), rounded up to a whole microsecond.
pub fn transfer_time(bytes: u64, mb_per_s: f64) -> Micros {
    if bytes == 0 {
        return 0;
    }
    let secs = bytes as f64 / (mb_per_s * MIB as f64);
    (secs * MICROS_PER_SECOND as f64).ceil() as Micros
}

#[derive(Debug, Error, PartialEq)]
#[error("invalid capacity {input:?}: {reason}")]
pub struct CapacityParseError {
    pub input: String,
    pub reason: &'static str,
}

/// A capacity in billing GB, parsed from strings such as `1PiB`, `256MiB`,
/// `1PB` or a bare number of GB.
///
/// Binary suffixes (`KiB`..`PiB`) scale by powers of 1024 relative to one GB,
/// decimal suffixes (`KB`..`PB`) by powers of 1000.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityGb(pub f64);

impl FromStr for CapacityGb {
    type Err = CapacityParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason| CapacityParseError {
            input: s.to_owned(),
            reason,
        };
        let trimmed = s.trim();
        let split = trimmed
            .find(|c: char| c.is_ascii_alphabetic())
            .unwrap_or(trimmed.len());
        let (num, suffix) = trimmed.split_at(split);
        let value: f64 = num.trim().parse().map_err(|_| err("not a number"))?;
        if !value.is_finite() || value < 0.0 {
            return Err(err("must be a non-negative finite number"));
        }
        let scale = match suffix.trim().to_ascii_lowercase().as_str() {
            "" | "gb" | "gib" | "g" => 1.0,
            "kib" => 1.0 / (1024.0 * 1024.0),
            "mib" => 1.0 / 1024.0,
            "tib" => 1024.0,
            "pib" => PIB_IN_GB,
            "kb" => 1e-6,
            "mb" => 1e-3,
            "tb" => 1e3,
            "pb" => PB_DECIMAL_IN_GB,
            _ => return Err(err("unknown unit suffix")),
        };
        Ok(CapacityGb(value * scale))
    }
}
