// SPDX-License-Identifier: Apache-2.0

//! Prefix-graph data model.
//!
//! A node `(i,j)` computes the group generate/propagate pair over bits
//! `j..=i`. Every non-input node has an upper parent `(i,k)` and a lower
//! parent `(k-1,j)` with `i >= k > j`. Input nodes `(i,i)` carry the per-bit
//! `p`/`g` signals, and output `(i,0)` carries the carry out of bit `i`.
//!
//! Levels and fanout lists are caches that are recomputed from scratch after
//! every mutation.

mod build;
mod critical;
mod epr;
mod sim;

pub use build::{brent_kung, kogge_stone, sklansky};
pub use critical::{critical_path, theoretical_min_level, CriticalPath, PathEntry};
pub use epr::{parse_epr, render_epr};
pub use sim::{check_adder, Coverage, Mismatch, VerifyReport};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identity of a prefix node. `instance` is non-zero only for clones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId {
    pub msb: usize,
    pub lsb: usize,
    pub instance: u32,
}

impl NodeId {
    pub const fn new(msb: usize, lsb: usize) -> Self {
        Self {
            msb,
            lsb,
            instance: 0,
        }
    }

    pub const fn input(bit: usize) -> Self {
        Self::new(bit, bit)
    }

    pub const fn with_instance(self, instance: u32) -> Self {
        Self { instance, ..self }
    }

    pub fn is_input(&self) -> bool {
        self.msb == self.lsb
    }

    /// Number of bits covered.
    pub fn span(&self) -> usize {
        self.msb - self.lsb + 1
    }

    /// Same bit range, ignoring the clone instance.
    pub fn same_range(&self, other: &NodeId) -> bool {
        self.msb == other.msb && self.lsb == other.lsb
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.msb, self.lsb)?;
        if self.instance > 0 {
            write!(f, "#{}", self.instance)?;
        }
        Ok(())
    }
}

impl FromStr for NodeId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        let (range, instance) = match s.split_once('#') {
            Some((r, i)) => (
                r,
                i.trim()
                    .parse::<u32>()
                    .map_err(|e| format!("bad clone instance in {s:?}: {e}"))?,
            ),
            None => (s, 0),
        };
        let inner = range
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| format!("expected (msb,lsb), got {s:?}"))?;
        let (msb, lsb) = inner
            .split_once(',')
            .ok_or_else(|| format!("expected (msb,lsb), got {s:?}"))?;
        let msb = msb
            .trim()
            .parse()
            .map_err(|e| format!("bad msb in {s:?}: {e}"))?;
        let lsb = lsb
            .trim()
            .parse()
            .map_err(|e| format!("bad lsb in {s:?}: {e}"))?;
        Ok(NodeId { msb, lsb, instance })
    }
}

impl Serialize for NodeId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Parents {
    pub up: NodeId,
    pub lp: NodeId,
}

/// A broken structural rule, attributed to a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub node: NodeId,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {}: {}", self.node, self.rule)
    }
}

/// Fanout edge classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FanoutKind {
    /// Consumer shares the producer's MSB.
    Trivial,
    /// Consumer has a larger MSB.
    NonTrivial,
}

#[derive(Debug, Clone, Default)]
struct Caches {
    level: BTreeMap<NodeId, usize>,
    consumers: BTreeMap<NodeId, Vec<NodeId>>,
}

#[derive(Debug, Clone)]
pub struct PrefixGraph {
    width: usize,
    nodes: BTreeMap<NodeId, Option<Parents>>,
    cache: Caches,
}

impl PartialEq for PrefixGraph {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width && self.nodes == other.nodes
    }
}

impl Eq for PrefixGraph {}

impl PrefixGraph {
    /// A graph holding only the `width` input nodes.
    pub fn new(width: usize) -> Result<Self> {
        if width < 1 {
            return Err(Error::InvalidWidth(width));
        }
        let nodes = (0..width).map(|i| (NodeId::input(i), None)).collect();
        let mut g = Self {
            width,
            nodes,
            cache: Caches::default(),
        };
        g.refresh();
        Ok(g)
    }

    /// An empty graph with no nodes at all, for parsers that add inputs
    /// themselves.
    pub(crate) fn empty(width: usize) -> Self {
        Self {
            width,
            nodes: BTreeMap::new(),
            cache: Caches::default(),
        }
    }

    /// The ripple-carry graph: `(i,0) = (i,i) o (i-1,0)`.
    pub fn serial(width: usize) -> Result<Self> {
        let mut g = Self::new(width)?;
        for i in 1..width {
            g.nodes.insert(
                NodeId::new(i, 0),
                Some(Parents {
                    up: NodeId::input(i),
                    lp: NodeId::new(i - 1, 0),
                }),
            );
        }
        g.refresh();
        Ok(g)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn contains(&self, n: &NodeId) -> bool {
        self.nodes.contains_key(n)
    }

    pub fn parents(&self, n: &NodeId) -> Option<Parents> {
        self.nodes.get(n).copied().flatten()
    }

    /// All nodes in `NodeId` order.
    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.keys()
    }

    pub fn non_input_nodes(&self) -> impl Iterator<Item = (&NodeId, &Parents)> {
        self.nodes
            .iter()
            .filter_map(|(n, p)| p.as_ref().map(|p| (n, p)))
    }

    /// Size `s_C`: number of non-input nodes.
    pub fn size(&self) -> usize {
        self.nodes.values().filter(|p| p.is_some()).count()
    }

    pub fn level(&self, n: &NodeId) -> usize {
        self.cache.level.get(n).copied().unwrap_or(0)
    }

    /// Depth `d_C`: the maximum node level.
    pub fn depth(&self) -> usize {
        self.cache.level.values().copied().max().unwrap_or(0)
    }

    pub fn consumers(&self, n: &NodeId) -> &[NodeId] {
        self.cache
            .consumers
            .get(n)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn fanout(&self, n: &NodeId) -> usize {
        self.consumers(n).len()
    }

    pub fn max_fanout(&self) -> usize {
        self.nodes.keys().map(|n| self.fanout(n)).max().unwrap_or(0)
    }

    pub fn fanout_kind(producer: &NodeId, consumer: &NodeId) -> FanoutKind {
        if consumer.msb == producer.msb {
            FanoutKind::Trivial
        } else {
            FanoutKind::NonTrivial
        }
    }

    /// Consumers sharing the producer's MSB.
    pub fn tf(&self, n: &NodeId) -> Vec<NodeId> {
        self.consumers(n)
            .iter()
            .filter(|c| Self::fanout_kind(n, c) == FanoutKind::Trivial)
            .copied()
            .collect()
    }

    /// Consumers with a larger MSB.
    pub fn ntf(&self, n: &NodeId) -> Vec<NodeId> {
        self.consumers(n)
            .iter()
            .filter(|c| Self::fanout_kind(n, c) == FanoutKind::NonTrivial)
            .copied()
            .collect()
    }

    pub fn output(bit: usize) -> NodeId {
        NodeId::new(bit, 0)
    }

    /// The node carrying `G[i:0]` for bit `i`, if present.
    pub fn has_output(&self, bit: usize) -> bool {
        self.nodes.contains_key(&Self::output(bit))
    }

    pub fn is_output(n: &NodeId) -> bool {
        n.lsb == 0 && n.instance == 0
    }

    /// First bit `i >= 1` lacking its output node.
    pub fn missing_output(&self) -> Option<usize> {
        (1..self.width).find(|&i| !self.has_output(i))
    }

    pub fn is_complete(&self) -> bool {
        self.missing_output().is_none()
    }

    /// Inserts or re-parents a non-input node.
    pub fn insert(&mut self, node: NodeId, up: NodeId, lp: NodeId) {
        self.nodes.insert(node, Some(Parents { up, lp }));
        self.refresh();
    }

    pub(crate) fn insert_raw(&mut self, node: NodeId, parents: Option<Parents>) {
        self.nodes.insert(node, parents);
    }

    /// Removes a node. Consumers referencing it become invalid.
    pub fn remove(&mut self, node: &NodeId) -> bool {
        let removed = self.nodes.remove(node).is_some();
        self.refresh();
        removed
    }

    /// Re-points every consumer edge from `from` to `to` for the listed
    /// consumers.
    pub(crate) fn redirect(&mut self, consumers: &[NodeId], from: NodeId, to: NodeId) {
        for c in consumers {
            if let Some(Some(p)) = self.nodes.get_mut(c) {
                if p.up == from {
                    p.up = to;
                }
                if p.lp == from {
                    p.lp = to;
                }
            }
        }
        self.refresh();
    }

    /// Removes non-input, non-output nodes with no consumers, starting from
    /// `seeds` and walking up their parents. Returns the removed nodes.
    pub(crate) fn prune_dead(&mut self, seeds: impl IntoIterator<Item = NodeId>) -> Vec<NodeId> {
        let mut work: Vec<NodeId> = seeds.into_iter().collect();
        let mut removed = Vec::new();
        while let Some(n) = work.pop() {
            if n.is_input() || Self::is_output(&n) || !self.contains(&n) || self.fanout(&n) > 0 {
                continue;
            }
            if let Some(p) = self.parents(&n) {
                work.push(p.up);
                work.push(p.lp);
            }
            self.nodes.remove(&n);
            removed.push(n);
            self.refresh();
        }
        removed
    }

    /// Recomputes level and fanout caches.
    pub(crate) fn refresh(&mut self) {
        let mut consumers: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (n, p) in &self.nodes {
            if let Some(p) = p {
                for parent in [p.up, p.lp] {
                    if self.nodes.contains_key(&parent) {
                        let list = consumers.entry(parent).or_default();
                        if !list.contains(n) {
                            list.push(*n);
                        }
                    }
                }
            }
        }
        for list in consumers.values_mut() {
            list.sort();
        }

        // Parents of well-formed nodes have strictly smaller spans; the
        // visiting set only guards malformed input against looping.
        let mut level = BTreeMap::new();
        let mut visiting = BTreeSet::new();
        let keys: Vec<NodeId> = self.nodes.keys().copied().collect();
        for n in keys {
            self.level_of(n, &mut level, &mut visiting);
        }
        self.cache = Caches { level, consumers };
    }

    fn level_of(
        &self,
        n: NodeId,
        memo: &mut BTreeMap<NodeId, usize>,
        visiting: &mut BTreeSet<NodeId>,
    ) -> usize {
        if let Some(&l) = memo.get(&n) {
            return l;
        }
        let l = match self.nodes.get(&n) {
            Some(Some(p)) if visiting.insert(n) => {
                let up = self.level_of(p.up, memo, visiting);
                let lp = self.level_of(p.lp, memo, visiting);
                visiting.remove(&n);
                up.max(lp) + 1
            }
            _ => 0,
        };
        memo.insert(n, l);
        l
    }

    /// Checks every structural rule and reports each breach.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut flag = |node: NodeId, rule: &str| {
            out.push(Violation {
                node,
                rule: rule.to_string(),
            })
        };
        for i in 0..self.width {
            if !self.nodes.contains_key(&NodeId::input(i)) {
                flag(NodeId::input(i), "missing input node");
            }
        }
        for (n, p) in &self.nodes {
            if n.msb >= self.width || n.lsb > n.msb {
                flag(*n, "bit range out of bounds");
                continue;
            }
            match p {
                None if !n.is_input() => flag(*n, "non-input node lacks parents"),
                None if n.instance != 0 => flag(*n, "input node cannot be cloned"),
                None => {}
                Some(_) if n.is_input() => flag(*n, "input node has parents"),
                Some(p) => {
                    if !self.nodes.contains_key(&p.up) {
                        flag(*n, &format!("up parent {} missing", p.up));
                    }
                    if !self.nodes.contains_key(&p.lp) {
                        flag(*n, &format!("lp parent {} missing", p.lp));
                    }
                    if p.up.msb != n.msb {
                        flag(*n, "up.msb ≠ msb");
                    }
                    if p.lp.lsb != n.lsb {
                        flag(*n, "lp.lsb ≠ lsb");
                    }
                    if p.up.lsb <= n.lsb || p.up.lsb > n.msb {
                        flag(*n, "split point outside (lsb, msb]");
                    } else if p.lp.msb + 1 != p.up.lsb {
                        flag(*n, "lp.msb ≠ up.lsb−1");
                    }
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidGraph(v))
        }
    }

    pub fn ensure_complete(&self) -> Result<()> {
        match self.missing_output() {
            Some(bit) => Err(Error::Incomplete { bit }),
            None => Ok(()),
        }
    }

    /// Excess of `size + depth` over the `2n - 2` lower bound.
    pub fn deficiency(&self) -> i64 {
        self.size() as i64 + self.depth() as i64 - (2 * self.width as i64 - 2)
    }

    /// Nodes in an order where every parent precedes its consumers.
    pub fn topo_order(&self) -> Vec<NodeId> {
        let mut order: Vec<NodeId> = self.nodes.keys().copied().collect();
        order.sort_by_key(|n| (n.span(), self.level(n), *n));
        order
    }
}
