//! Unit conversions. Decimal SI throughout: 1 KB = 8000 bits, 1 GB = 8e9 bits.

pub const BITS_PER_KB: f64 = 8.0e3;
pub const BITS_PER_GB: f64 = 8.0e9;
pub const HZ_PER_MHZ: f64 = 1.0e6;
pub const HZ_PER_GHZ: f64 = 1.0e9;
pub const BPS_PER_MBPS: f64 = 1.0e6;

pub fn kb_to_bits(kb: f64) -> f64 {
    kb * BITS_PER_KB
}

pub fn gb_to_bits(gb: f64) -> f64 {
    gb * BITS_PER_GB
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1.0e-3
}
