// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::expr::BackboneExpr;
use crate::error::{Error, Result};

/// E-class handle. Only canonical after [`EGraph::find`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassId(u32);

impl ClassId {
    fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ENode {
    Leaf(usize),
    Op { high: ClassId, low: ClassId },
}

#[derive(Debug, Clone)]
struct EClass {
    nodes: Vec<ENode>,
    /// `(msb, lsb)` of every expression in the class.
    range: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_iterations: usize,
    pub max_nodes: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_iterations: 64,
            max_nodes: 500_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Saturated,
    IterationLimit,
    NodeLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SaturationReport {
    pub iterations: usize,
    pub nodes: usize,
    pub classes: usize,
    pub stop: StopReason,
}

impl SaturationReport {
    pub fn saturated(&self) -> bool {
        self.stop == StopReason::Saturated
    }
}

/// E-graph over the single associative operator.
///
/// Every class holds expressions over one bit range; reassociation never
/// changes the range, so unions only ever join classes with equal ranges.
#[derive(Debug, Clone)]
pub struct EGraph {
    parent: Vec<ClassId>,
    classes: Vec<Option<EClass>>,
    memo: HashMap<ENode, ClassId>,
    root: ClassId,
    report: Option<SaturationReport>,
}

impl EGraph {
    pub fn from_expr(expr: &BackboneExpr) -> Result<Self> {
        expr.validate(expr.msb() + 1)?;
        let mut g = EGraph {
            parent: Vec::new(),
            classes: Vec::new(),
            memo: HashMap::new(),
            root: ClassId(0),
            report: None,
        };
        g.root = g.add_expr(expr);
        Ok(g)
    }

    fn add_expr(&mut self, e: &BackboneExpr) -> ClassId {
        match e {
            BackboneExpr::Leaf(i) => self.add(ENode::Leaf(*i)),
            BackboneExpr::Op(h, l) => {
                let high = self.add_expr(h);
                let low = self.add_expr(l);
                self.add(ENode::Op { high, low })
            }
        }
    }

    pub fn find(&self, mut id: ClassId) -> ClassId {
        while self.parent[id.index()] != id {
            id = self.parent[id.index()];
        }
        id
    }

    fn find_compress(&mut self, id: ClassId) -> ClassId {
        let root = self.find(id);
        let mut cur = id;
        while self.parent[cur.index()] != root {
            let next = self.parent[cur.index()];
            self.parent[cur.index()] = root;
            cur = next;
        }
        root
    }

    fn canonical(&self, n: ENode) -> ENode {
        match n {
            ENode::Leaf(_) => n,
            ENode::Op { high, low } => ENode::Op {
                high: self.find(high),
                low: self.find(low),
            },
        }
    }

    /// Adds an e-node, returning its (canonical) class.
    pub fn add(&mut self, n: ENode) -> ClassId {
        let n = self.canonical(n);
        if let Some(&id) = self.memo.get(&n) {
            return self.find(id);
        }
        let range = match n {
            ENode::Leaf(i) => (i, i),
            ENode::Op { high, low } => (self.range(high).0, self.range(low).1),
        };
        let id = ClassId(self.classes.len() as u32);
        self.parent.push(id);
        self.classes.push(Some(EClass {
            nodes: vec![n],
            range,
        }));
        self.memo.insert(n, id);
        id
    }

    /// Merges two classes. Returns whether anything changed.
    pub fn union(&mut self, a: ClassId, b: ClassId) -> Result<bool> {
        let (a, b) = (self.find_compress(a), self.find_compress(b));
        if a == b {
            return Ok(false);
        }
        let (ra, rb) = (self.range(a), self.range(b));
        if ra != rb {
            return Err(Error::InvalidArgument(format!(
                "cannot merge classes over ({},{}) and ({},{})",
                ra.0, ra.1, rb.0, rb.1
            )));
        }
        let (keep, gone) = if self.class(a).nodes.len() >= self.class(b).nodes.len() {
            (a, b)
        } else {
            (b, a)
        };
        let moved = self.classes[gone.index()].take().expect("live class");
        self.parent[gone.index()] = keep;
        self.classes[keep.index()]
            .as_mut()
            .expect("live class")
            .nodes
            .extend(moved.nodes);
        Ok(true)
    }

    /// Restores congruence closure: canonicalizes every e-node and merges
    /// classes that end up holding identical nodes.
    pub fn rebuild(&mut self) -> Result<()> {
        loop {
            let mut memo: HashMap<ENode, ClassId> = HashMap::with_capacity(self.memo.len());
            let mut pending = Vec::new();
            for idx in 0..self.classes.len() {
                let Some(class) = self.classes[idx].take() else {
                    continue;
                };
                let id = ClassId(idx as u32);
                let mut nodes: Vec<ENode> =
                    class.nodes.iter().map(|n| self.canonical(*n)).collect();
                nodes.sort_unstable();
                nodes.dedup();
                for n in &nodes {
                    if let Some(&other) = memo.get(n) {
                        if other != id {
                            pending.push((other, id));
                        }
                    } else {
                        memo.insert(*n, id);
                    }
                }
                self.classes[idx] = Some(EClass {
                    nodes,
                    range: class.range,
                });
            }
            self.memo = memo;
            let mut merged = false;
            for (a, b) in pending {
                merged |= self.union(a, b)?;
            }
            if !merged {
                return Ok(());
            }
        }
    }

    fn class(&self, id: ClassId) -> &EClass {
        self.classes[self.find(id).index()]
            .as_ref()
            .expect("canonical class is live")
    }

    pub fn root(&self) -> ClassId {
        self.find(self.root)
    }

    /// `(msb, lsb)` covered by a class.
    pub fn range(&self, id: ClassId) -> (usize, usize) {
        self.class(id).range
    }

    pub fn nodes(&self, id: ClassId) -> &[ENode] {
        &self.class(id).nodes
    }

    /// Canonical classes ordered by span, then LSB. Children always precede
    /// their parents in this order.
    pub fn class_ids(&self) -> Vec<ClassId> {
        let mut ids: Vec<ClassId> = self
            .classes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_some())
            .map(|(i, _)| ClassId(i as u32))
            .collect();
        ids.sort_by_key(|id| {
            let (m, l) = self.range(*id);
            (m - l, l, *id)
        });
        ids
    }

    pub fn class_count(&self) -> usize {
        self.classes.iter().filter(|c| c.is_some()).count()
    }

    pub fn node_count(&self) -> usize {
        self.classes.iter().flatten().map(|c| c.nodes.len()).sum()
    }

    /// Outcome of the last [`EGraph::saturate`] call.
    pub fn report(&self) -> Option<SaturationReport> {
        self.report
    }

    pub fn is_saturated(&self) -> bool {
        self.report.is_some_and(|r| r.saturated())
    }

    /// Applies associativity in both directions until nothing changes or a
    /// limit is reached.
    pub fn saturate(&mut self, limits: Limits) -> Result<SaturationReport> {
        let mut iterations = 0;
        let stop = loop {
            if iterations >= limits.max_iterations {
                break StopReason::IterationLimit;
            }
            iterations += 1;
            let before = self.node_count();
            let mut changed = false;
            for (class, node) in self.matches() {
                let id = self.add_rewrite(node);
                changed |= self.union(class, id)?;
                if self.memo.len() > limits.max_nodes {
                    break;
                }
            }
            self.rebuild()?;
            if self.node_count() > limits.max_nodes {
                break StopReason::NodeLimit;
            }
            if !changed && self.node_count() == before {
                break StopReason::Saturated;
            }
        };
        let report = SaturationReport {
            iterations,
            nodes: self.node_count(),
            classes: self.class_count(),
            stop,
        };
        self.report = Some(report);
        Ok(report)
    }

    fn add_rewrite(&mut self, r: Rewrite) -> ClassId {
        match r {
            // (o (o x y) z) => (o x (o y z))
            Rewrite::RotateLow { z, y, x } => {
                let yz = self.add(ENode::Op { high: z, low: y });
                self.add(ENode::Op { high: yz, low: x })
            }
            // (o x (o y z)) => (o (o x y) z)
            Rewrite::RotateHigh { z, y, x } => {
                let xy = self.add(ENode::Op { high: y, low: x });
                self.add(ENode::Op { high: z, low: xy })
            }
        }
    }

    fn matches(&self) -> Vec<(ClassId, Rewrite)> {
        let mut out = Vec::new();
        for id in self.class_ids() {
            for n in self.nodes(id) {
                let ENode::Op { high, low } = *n else {
                    continue;
                };
                for inner in self.nodes(low) {
                    if let ENode::Op { high: y, low: x } = *inner {
                        out.push((id, Rewrite::RotateLow { z: high, y, x }));
                    }
                }
                for inner in self.nodes(high) {
                    if let ENode::Op { high: z, low: y } = *inner {
                        out.push((id, Rewrite::RotateHigh { z, y, x: low }));
                    }
                }
            }
        }
        out
    }

    /// Number of distinct trees represented by the root class.
    pub fn count_trees(&self) -> BigUint {
        let mut counts: HashMap<ClassId, BigUint> = HashMap::new();
        for id in self.class_ids() {
            let mut total = BigUint::zero();
            for n in self.nodes(id) {
                total += match n {
                    ENode::Leaf(_) => BigUint::one(),
                    ENode::Op { high, low } => {
                        &counts[&self.find(*high)] * &counts[&self.find(*low)]
                    }
                };
            }
            counts.insert(id, total);
        }
        counts.remove(&self.root()).unwrap_or_default()
    }
}

/// A match of the associativity rule; `x`, `y`, `z` are in ascending
/// significance.
#[derive(Debug, Clone, Copy)]
enum Rewrite {
    RotateLow { z: ClassId, y: ClassId, x: ClassId },
    RotateHigh { z: ClassId, y: ClassId, x: ClassId },
}

/// Builds the e-graph of `expr` and saturates it.
pub fn saturate(expr: &BackboneExpr, limits: Limits) -> Result<EGraph> {
    let mut g = EGraph::from_expr(expr)?;
    g.saturate(limits)?;
    Ok(g)
}
