// SPDX-License-Identifier: Apache-2.0

//! Classic prefix structures, used as references in tests and benches.

use super::{NodeId, PrefixGraph};
use crate::error::Result;

/// Divide-and-conquer adder: minimum depth, high fanout.
pub fn sklansky(width: usize) -> Result<PrefixGraph> {
    let mut g = PrefixGraph::new(width)?;
    let mut l = 0;
    while (1usize << l) < width {
        for i in 0..width {
            if (i >> l) & 1 == 1 {
                let block = (i >> (l + 1)) << (l + 1);
                let k = (i >> l) << l;
                g.insert_raw(
                    NodeId::new(i, block),
                    Some(super::Parents {
                        up: NodeId::new(i, k),
                        lp: NodeId::new(k - 1, block),
                    }),
                );
            }
        }
        l += 1;
    }
    g.refresh();
    Ok(g)
}

/// Minimum depth with unit fanout per level, at the cost of size.
pub fn kogge_stone(width: usize) -> Result<PrefixGraph> {
    let mut g = PrefixGraph::new(width)?;
    let mut cur: Vec<usize> = (0..width).collect();
    while cur.iter().any(|&c| c > 0) {
        let prev = cur.clone();
        for i in 0..width {
            if prev[i] > 0 {
                let j = prev[i] - 1;
                let lsb = prev[j];
                g.insert_raw(
                    NodeId::new(i, lsb),
                    Some(super::Parents {
                        up: NodeId::new(i, prev[i]),
                        lp: NodeId::new(j, prev[j]),
                    }),
                );
                cur[i] = lsb;
            }
        }
    }
    g.refresh();
    Ok(g)
}

/// Up-sweep tree followed by a carry-distribution down-sweep.
pub fn brent_kung(width: usize) -> Result<PrefixGraph> {
    let mut g = PrefixGraph::new(width)?;
    let mut d = 1;
    while 2 * d <= width {
        let mut i = 2 * d - 1;
        while i < width {
            g.insert_raw(
                NodeId::new(i, i + 1 - 2 * d),
                Some(super::Parents {
                    up: NodeId::new(i, i + 1 - d),
                    lp: NodeId::new(i - d, i + 1 - 2 * d),
                }),
            );
            i += 2 * d;
        }
        d *= 2;
    }
    g.refresh();
    for i in 1..width {
        if g.has_output(i) {
            continue;
        }
        let top = g
            .nodes()
            .filter(|n| n.msb == i && n.instance == 0)
            .min_by_key(|n| n.lsb)
            .copied()
            .expect("input node always present");
        g.insert_raw(
            NodeId::new(i, 0),
            Some(super::Parents {
                up: top,
                lp: NodeId::new(top.lsb - 1, 0),
            }),
        );
        g.refresh();
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_depths() {
        let s = sklansky(8).unwrap();
        assert_eq!((s.size(), s.depth()), (12, 3));
        let k = kogge_stone(8).unwrap();
        assert_eq!((k.size(), k.depth()), (17, 3));
        let b = brent_kung(8).unwrap();
        assert_eq!((b.size(), b.depth()), (11, 4));
        for w in 2..=20 {
            for g in [
                sklansky(w).unwrap(),
                kogge_stone(w).unwrap(),
                brent_kung(w).unwrap(),
            ] {
                assert!(g.is_valid(), "width {w}: {:?}", g.validate());
                assert!(g.is_complete());
            }
        }
    }
}
