// SPDX-License-Identifier: Apache-2.0

//! Bit-parallel functional simulation: every `u64` word carries 64
//! independent input vectors, one per lane.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NodeId, PrefixGraph};
use crate::error::{Error, Result};

impl PrefixGraph {
    /// Evaluates the adder on 64 vectors at once. `a[i]`/`b[i]` hold bit `i`
    /// of every lane; returns the sum words per bit and the carry-out word.
    pub fn simulate_lanes(&self, a: &[u64], b: &[u64]) -> Result<(Vec<u64>, u64)> {
        Evaluator::compile(self)?.eval(a, b)
    }

    /// Adds two integers of at most 128 bits through the prefix network.
    pub fn simulate(&self, a: u128, b: u128) -> Result<(u128, bool)> {
        let n = self.width();
        if n > 128 {
            return Err(Error::InvalidArgument(format!(
                "scalar simulation supports at most 128 bits, graph has {n}"
            )));
        }
        let bits = |x: u128| (0..n).map(|i| ((x >> i) & 1) as u64).collect::<Vec<_>>();
        let (sum, cout) = self.simulate_lanes(&bits(a), &bits(b))?;
        let s = sum
            .iter()
            .enumerate()
            .fold(0u128, |acc, (i, w)| acc | (((w & 1) as u128) << i));
        Ok((s, cout & 1 == 1))
    }
}

/// A graph flattened into index form so repeated evaluation avoids map
/// lookups.
struct Evaluator {
    width: usize,
    /// `(up, lp)` slot indices; slot `i < width` is input `i`.
    ops: Vec<(usize, usize)>,
    /// Slot holding `G[i:0]` for each bit.
    carries: Vec<usize>,
}

impl Evaluator {
    fn compile(g: &PrefixGraph) -> Result<Self> {
        g.ensure_complete()?;
        let n = g.width();
        let mut slot: HashMap<NodeId, usize> = (0..n).map(|i| (NodeId::input(i), i)).collect();
        let mut ops = Vec::new();
        for node in g.topo_order() {
            let Some(p) = g.parents(&node) else {
                continue;
            };
            let up = *slot.get(&p.up).ok_or(Error::UnknownNode(p.up))?;
            let lp = *slot.get(&p.lp).ok_or(Error::UnknownNode(p.lp))?;
            slot.insert(node, n + ops.len());
            ops.push((up, lp));
        }
        let carries = (0..n).map(|i| slot[&PrefixGraph::output(i)]).collect();
        Ok(Self {
            width: n,
            ops,
            carries,
        })
    }

    fn eval(&self, a: &[u64], b: &[u64]) -> Result<(Vec<u64>, u64)> {
        let n = self.width;
        if a.len() != n || b.len() != n {
            return Err(Error::InvalidArgument(format!(
                "operand words {} / {} for width {n}",
                a.len(),
                b.len()
            )));
        }
        // (G, P) per slot.
        let mut sig: Vec<(u64, u64)> = Vec::with_capacity(n + self.ops.len());
        sig.extend((0..n).map(|i| (a[i] & b[i], a[i] ^ b[i])));
        for &(up, lp) in &self.ops {
            let (gu, pu) = sig[up];
            let (gl, pl) = sig[lp];
            sig.push((gu | (pu & gl), pu & pl));
        }
        let sum = (0..n)
            .map(|i| {
                let p = a[i] ^ b[i];
                if i == 0 {
                    p
                } else {
                    p ^ sig[self.carries[i - 1]].0
                }
            })
            .collect();
        Ok((sum, sig[self.carries[n - 1]].0))
    }
}

/// Which input vectors to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coverage {
    /// All `4^N` operand pairs. Only sensible for small widths.
    Exhaustive,
    /// Seeded uniformly random operand pairs.
    Random { vectors: usize, seed: u64 },
}

impl Coverage {
    /// Exhaustive up to 10 bits, otherwise `10^5` seeded vectors.
    pub fn for_width(width: usize, seed: u64) -> Self {
        if width <= 10 {
            Coverage::Exhaustive
        } else {
            Coverage::Random {
                vectors: 100_000,
                seed,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    /// Operands as little-endian 64-bit limbs.
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    pub expected_sum: Vec<u64>,
    pub expected_cout: bool,
    pub got_sum: Vec<u64>,
    pub got_cout: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub vectors: u64,
    pub mismatch: Option<Mismatch>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.mismatch.is_none()
    }
}

/// Compares the graph against plain integer addition.
pub fn check_adder(graph: &PrefixGraph, coverage: Coverage) -> Result<VerifyReport> {
    graph.ensure_valid()?;
    graph.ensure_complete()?;
    let n = graph.width();
    let limbs = n.div_ceil(64);
    let eval = Evaluator::compile(graph)?;
    let mut checked = 0u64;

    let mut run_batch = |pairs: &[(Vec<u64>, Vec<u64>)]| -> Result<Option<Mismatch>> {
        let mut a = vec![0u64; n];
        let mut b = vec![0u64; n];
        for (lane, (x, y)) in pairs.iter().enumerate() {
            for i in 0..n {
                a[i] |= ((x[i / 64] >> (i % 64)) & 1) << lane;
                b[i] |= ((y[i / 64] >> (i % 64)) & 1) << lane;
            }
        }
        let (sum, cout) = eval.eval(&a, &b)?;
        checked += pairs.len() as u64;
        for (lane, (x, y)) in pairs.iter().enumerate() {
            let (expected_sum, expected_cout) = add_limbs(x, y, n);
            let mut got_sum = vec![0u64; limbs];
            for (i, w) in sum.iter().enumerate() {
                got_sum[i / 64] |= ((w >> lane) & 1) << (i % 64);
            }
            let got_cout = (cout >> lane) & 1 == 1;
            if got_sum != expected_sum || got_cout != expected_cout {
                return Ok(Some(Mismatch {
                    a: x.clone(),
                    b: y.clone(),
                    expected_sum,
                    expected_cout,
                    got_sum,
                    got_cout,
                }));
            }
        }
        Ok(None)
    };

    let mut batch: Vec<(Vec<u64>, Vec<u64>)> = Vec::with_capacity(64);
    let mut flush = |batch: &mut Vec<(Vec<u64>, Vec<u64>)>| -> Result<Option<Mismatch>> {
        let r = if batch.is_empty() {
            None
        } else {
            run_batch(batch)?
        };
        batch.clear();
        Ok(r)
    };

    match coverage {
        Coverage::Exhaustive => {
            if n > 16 {
                return Err(Error::InvalidArgument(format!(
                    "exhaustive check over {n} bits is infeasible"
                )));
            }
            let top = 1u64 << n;
            for x in 0..top {
                for y in 0..top {
                    batch.push((vec![x], vec![y]));
                    if batch.len() == 64 {
                        if let Some(m) = flush(&mut batch)? {
                            return Ok(VerifyReport {
                                vectors: checked,
                                mismatch: Some(m),
                            });
                        }
                    }
                }
            }
        }
        Coverage::Random { vectors, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..vectors {
                let x = random_operand(&mut rng, n);
                let y = random_operand(&mut rng, n);
                batch.push((x, y));
                if batch.len() == 64 {
                    if let Some(m) = flush(&mut batch)? {
                        return Ok(VerifyReport {
                            vectors: checked,
                            mismatch: Some(m),
                        });
                    }
                }
            }
        }
    }
    let mismatch = flush(&mut batch)?;
    Ok(VerifyReport {
        vectors: checked,
        mismatch,
    })
}

fn random_operand(rng: &mut impl Rng, n: usize) -> Vec<u64> {
    let mut v: Vec<u64> = (0..n.div_ceil(64)).map(|_| rng.random()).collect();
    mask_top(&mut v, n);
    v
}

fn mask_top(v: &mut [u64], n: usize) {
    if !n.is_multiple_of(64) {
        if let Some(last) = v.last_mut() {
            *last &= (1u64 << (n % 64)) - 1;
        }
    }
}

/// Reference multi-limb addition modulo `2^n`, returning the carry-out.
fn add_limbs(x: &[u64], y: &[u64], n: usize) -> (Vec<u64>, bool) {
    let mut out = Vec::with_capacity(x.len());
    let mut carry = false;
    for (a, b) in x.iter().zip(y) {
        let (s1, c1) = a.overflowing_add(*b);
        let (s2, c2) = s1.overflowing_add(carry as u64);
        out.push(s2);
        carry = c1 || c2;
    }
    let cout = if n.is_multiple_of(64) {
        carry
    } else {
        let last = *out.last().expect("at least one limb");
        (last >> (n % 64)) & 1 == 1
    };
    mask_top(&mut out, n);
    (out, cout)
}
