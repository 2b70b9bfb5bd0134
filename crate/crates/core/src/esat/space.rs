// SPDX-License-Identifier: Apache-2.0

//! Counting backbone shapes.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

/// `C(n) = (2n)! / ((n+1)! n!)`: full binary trees with `n + 1` leaves.
pub fn catalan(n: u32) -> BigUint {
    let mut c = BigUint::one();
    for i in 0..n {
        c = c * (2u32 * (2 * i + 1)) / (i + 2);
    }
    c
}

/// Backbone shapes for an adder of `width` bits.
pub fn backbone_count(width: usize) -> BigUint {
    catalan(width.saturating_sub(1) as u32)
}

/// Number of prefix structures when every output carry picks its tree
/// independently: `prod_{i=1}^{n} C(i)`.
pub fn independent_space(n: u32) -> BigUint {
    (1..=n).map(catalan).product()
}

pub fn log10(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).log10();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(0.0);
    top.log10() + shift as f64 * std::f64::consts::LOG10_2
}
