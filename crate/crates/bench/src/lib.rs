// SPDX-License-Identifier: Apache-2.0

//! Shared fixtures for the benchmarks.

use prefixsyn::{ArrivalProfile, DelayModel};

/// Widths every benchmark group sweeps.
pub const WIDTHS: [usize; 3] = [16, 32, 64];

/// Seeded random arrivals spread over `N/8` node steps.
pub fn random_profile(width: usize) -> ArrivalProfile {
    let step = DelayModel::default().step();
    ArrivalProfile::random(width, width as f64 / 8.0 * step, width as u64)
}

/// 64 seeded operand pairs in bit-lane form: word `i` holds bit `i` of
/// every operand.
pub fn lane_operands(width: usize, seed: u64) -> (Vec<u64>, Vec<u64>) {
    let mut x = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    let mut next = move || {
        // xorshift64; quality is irrelevant for timing.
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        x
    };
    let a = (0..width).map(|_| next()).collect();
    let b = (0..width).map(|_| next()).collect();
    (a, b)
}
