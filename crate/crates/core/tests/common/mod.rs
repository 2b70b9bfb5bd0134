// SPDX-License-Identifier: Apache-2.0

//! Reference models shared by the integration suites. They are written from
//! the definitions only and never call the library's own evaluators.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use prefixsyn::{Backbone, NodeId, Parents, PrefixGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A full binary tree over a contiguous bit range. `Node(high, low)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tree {
    Leaf(usize),
    Node(Box<Tree>, Box<Tree>),
}

impl Tree {
    pub fn msb(&self) -> usize {
        match self {
            Tree::Leaf(i) => *i,
            Tree::Node(h, _) => h.msb(),
        }
    }

    pub fn lsb(&self) -> usize {
        match self {
            Tree::Leaf(i) => *i,
            Tree::Node(_, l) => l.lsb(),
        }
    }

    pub fn level(&self) -> usize {
        match self {
            Tree::Leaf(_) => 0,
            Tree::Node(h, l) => 1 + h.level().max(l.level()),
        }
    }

    /// Internal nodes reached from the root by always taking the low child.
    pub fn ridge_len(&self) -> usize {
        match self {
            Tree::Leaf(_) => 0,
            Tree::Node(_, l) => 1 + l.ridge_len(),
        }
    }

    /// Leaf arrival `t[i]`, every operator adds `step` after the later input.
    pub fn cost(&self, t: &[f64], step: f64) -> f64 {
        match self {
            Tree::Leaf(i) => t[*i],
            Tree::Node(h, l) => h.cost(t, step).max(l.cost(t, step)) + step,
        }
    }

    fn collect(&self, out: &mut BTreeMap<NodeId, Parents>) {
        if let Tree::Node(h, l) = self {
            out.insert(
                NodeId::new(self.msb(), self.lsb()),
                Parents {
                    up: NodeId::new(h.msb(), h.lsb()),
                    lp: NodeId::new(l.msb(), l.lsb()),
                },
            );
            h.collect(out);
            l.collect(out);
        }
    }

    pub fn to_backbone(&self) -> Backbone {
        assert_eq!(self.lsb(), 0, "backbones start at bit 0");
        let mut nodes = BTreeMap::new();
        self.collect(&mut nodes);
        Backbone::from_nodes(self.msb() + 1, nodes).expect("a full binary tree is a backbone")
    }

    pub fn from_backbone(b: &Backbone) -> Tree {
        fn go(b: &Backbone, n: NodeId) -> Tree {
            match b.parents(&n) {
                None => Tree::Leaf(n.msb),
                Some(p) => Tree::Node(Box::new(go(b, p.up)), Box::new(go(b, p.lp))),
            }
        }
        go(b, b.root())
    }
}

/// Every full binary tree over leaves `lo..=hi`.
pub fn all_trees(lo: usize, hi: usize) -> Vec<Tree> {
    if lo == hi {
        return vec![Tree::Leaf(lo)];
    }
    let mut out = Vec::new();
    for k in lo + 1..=hi {
        let lows = all_trees(lo, k - 1);
        let highs = all_trees(k, hi);
        for h in &highs {
            for l in &lows {
                out.push(Tree::Node(Box::new(h.clone()), Box::new(l.clone())));
            }
        }
    }
    out
}

/// Uniform split point at every node; not uniform over shapes, which is fine
/// for coverage.
pub fn random_tree(lo: usize, hi: usize, rng: &mut impl Rng) -> Tree {
    if lo == hi {
        return Tree::Leaf(lo);
    }
    let k = rng.random_range(lo + 1..=hi);
    Tree::Node(
        Box::new(random_tree(k, hi, rng)),
        Box::new(random_tree(lo, k - 1, rng)),
    )
}

/// Catalan numbers by the convolution recurrence.
pub fn catalan_u64(n: usize) -> u64 {
    let mut c = vec![1u64; n + 1];
    for m in 1..=n {
        c[m] = (0..m).map(|i| c[i] * c[m - 1 - i]).sum();
    }
    c[n]
}

/// Sum and carry-out lanes: bit `i` of every operand lives in word `i`,
/// one operand pair per bit position of the word.
pub type Lanes = (Vec<u64>, u64);

/// Direct recursive (G, P) evaluation of a complete prefix graph.
pub fn eval_graph(g: &PrefixGraph, a: &[u64], b: &[u64]) -> Lanes {
    fn gp(
        g: &PrefixGraph,
        n: NodeId,
        a: &[u64],
        b: &[u64],
        memo: &mut HashMap<NodeId, (u64, u64)>,
    ) -> (u64, u64) {
        if let Some(v) = memo.get(&n) {
            return *v;
        }
        let v = match g.parents(&n) {
            None => {
                assert!(n.is_input(), "{n} has no parents");
                (a[n.msb] & b[n.msb], a[n.msb] ^ b[n.msb])
            }
            Some(p) => {
                let (gu, pu) = gp(g, p.up, a, b, memo);
                let (gl, pl) = gp(g, p.lp, a, b, memo);
                assert_eq!(p.up.lsb, p.lp.msb + 1, "{n}: parents are not adjacent");
                assert_eq!(
                    (p.up.msb, p.lp.lsb),
                    (n.msb, n.lsb),
                    "{n}: parents do not span it"
                );
                (gu | (pu & gl), pu & pl)
            }
        };
        memo.insert(n, v);
        v
    }
    let n = g.width();
    let mut memo = HashMap::new();
    let mut sum = Vec::with_capacity(n);
    for i in 0..n {
        let p = a[i] ^ b[i];
        if i == 0 {
            sum.push(p);
        } else {
            let (carry, _) = gp(g, NodeId::new(i - 1, 0), a, b, &mut memo);
            sum.push(p ^ carry);
        }
    }
    let (cout, _) = gp(g, NodeId::new(n - 1, 0), a, b, &mut memo);
    (sum, cout)
}

/// Operand pairs for a width: every pair up to 8 bits, otherwise `10^5`
/// seeded pairs.
pub fn vectors(width: usize, seed: u64) -> Vec<(u64, u64)> {
    assert!(width <= 64);
    let mask = if width == 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    };
    if width <= 8 {
        let m = 1u64 << width;
        (0..m).flat_map(|a| (0..m).map(move |b| (a, b))).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..100_000)
            .map(|_| (rng.random::<u64>() & mask, rng.random::<u64>() & mask))
            .collect()
    }
}

/// Compares a lane-parallel adder against integer addition on `pairs`.
/// Returns the number of vectors checked.
pub fn check_against_addition(
    width: usize,
    pairs: &[(u64, u64)],
    mut dut: impl FnMut(&[u64], &[u64]) -> Lanes,
) -> Result<u64, String> {
    for chunk in pairs.chunks(64) {
        let mut a = vec![0u64; width];
        let mut b = vec![0u64; width];
        for (lane, (x, y)) in chunk.iter().enumerate() {
            for i in 0..width {
                a[i] |= ((x >> i) & 1) << lane;
                b[i] |= ((y >> i) & 1) << lane;
            }
        }
        let (sum, cout) = dut(&a, &b);
        for (lane, (x, y)) in chunk.iter().enumerate() {
            let want = *x as u128 + *y as u128;
            let mut got = 0u128;
            for (i, s) in sum.iter().enumerate() {
                got |= (((s >> lane) & 1) as u128) << i;
            }
            got |= (((cout >> lane) & 1) as u128) << width;
            if got != want {
                return Err(format!("{x} + {y}: expected {want}, got {got}"));
            }
        }
    }
    Ok(pairs.len() as u64)
}

/// Integer-addition check of a graph through the reference evaluator.
pub fn graph_adds(g: &PrefixGraph, seed: u64) -> Result<u64, String> {
    if !g.is_complete() {
        return Err("graph is not complete".into());
    }
    let pairs = vectors(g.width(), seed);
    check_against_addition(g.width(), &pairs, |a, b| eval_graph(g, a, b))
}
