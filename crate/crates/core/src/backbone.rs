// SPDX-License-Identifier: Apache-2.0

//! The backbone: the full binary tree of prefix nodes that computes the MSB
//! carry `(N-1,0)`.
//!
//! The lower-parent chain from the root, `(N-1,0) -> (k-1,0) -> ...`, is the
//! ridge. Regrouping rotates two consecutive ridge nodes: with
//! `(i,0) = a o (k-1,0)` and `(k-1,0) = b o (m-1,0)` it builds
//! `(i,m) = a o b` and rewires `(i,0) = (i,m) o (m-1,0)`, dropping `(k-1,0)`.

use std::collections::BTreeMap;
use std::fmt::{self, Write};

use crate::error::{Error, Result};
use crate::graph::{NodeId, Parents, PrefixGraph};
use crate::timing::{ArrivalCost, ArrivalProfile, DelayModel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Backbone {
    width: usize,
    nodes: BTreeMap<NodeId, Parents>,
}

/// A pair of subtrees that can be regrouped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegroupCandidate {
    pub a: NodeId,
    pub b: NodeId,
}

impl RegroupCandidate {
    pub fn new(a: NodeId, b: NodeId) -> Self {
        Self { a, b }
    }

    /// The node a regroup adds.
    pub fn created(&self) -> NodeId {
        NodeId::new(self.a.msb, self.b.lsb)
    }

    /// The node a regroup removes.
    pub fn removed(&self) -> NodeId {
        NodeId::new(self.b.msb, 0)
    }
}

impl fmt::Display for RegroupCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a, self.b)
    }
}

impl Backbone {
    /// `(m,0) = (m,m) o (m-1,0)` for every `m`.
    pub fn serial(width: usize) -> Result<Self> {
        if width < 2 {
            return Err(Error::InvalidWidth(width));
        }
        let nodes = (1..width)
            .map(|m| {
                (
                    NodeId::new(m, 0),
                    Parents {
                        up: NodeId::input(m),
                        lp: NodeId::new(m - 1, 0),
                    },
                )
            })
            .collect();
        Ok(Self { width, nodes })
    }

    /// Midpoint splits, lower half taking the extra bit on odd spans.
    pub fn balanced(width: usize) -> Result<Self> {
        if width < 2 {
            return Err(Error::InvalidWidth(width));
        }
        fn split(msb: usize, lsb: usize, out: &mut BTreeMap<NodeId, Parents>) {
            if msb == lsb {
                return;
            }
            let k = lsb + (msb - lsb + 2) / 2;
            out.insert(
                NodeId::new(msb, lsb),
                Parents {
                    up: NodeId::new(msb, k),
                    lp: NodeId::new(k - 1, lsb),
                },
            );
            split(msb, k, out);
            split(k - 1, lsb, out);
        }
        let mut nodes = BTreeMap::new();
        split(width - 1, 0, &mut nodes);
        Ok(Self { width, nodes })
    }

    /// Builds and validates a backbone from its internal nodes.
    pub fn from_nodes(width: usize, nodes: BTreeMap<NodeId, Parents>) -> Result<Self> {
        let b = Self { width, nodes };
        b.validate()?;
        Ok(b)
    }

    /// The backbone embedded in a prefix graph: the cone of `(N-1,0)`.
    pub fn from_graph(g: &PrefixGraph) -> Result<Self> {
        let mut nodes = BTreeMap::new();
        let mut stack = vec![PrefixGraph::output(g.width() - 1)];
        while let Some(n) = stack.pop() {
            if n.is_input() {
                continue;
            }
            let p = g.parents(&n).ok_or(Error::UnknownNode(n))?;
            if n.instance != 0 || nodes.insert(n, p).is_some() {
                return Err(Error::InvalidBackbone(format!(
                    "node {n} is not part of a tree-shaped MSB cone"
                )));
            }
            stack.push(p.up);
            stack.push(p.lp);
        }
        Self::from_nodes(g.width(), nodes)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn root(&self) -> NodeId {
        NodeId::new(self.width - 1, 0)
    }

    pub fn contains(&self, n: &NodeId) -> bool {
        self.nodes.contains_key(n)
    }

    pub fn parents(&self, n: &NodeId) -> Option<Parents> {
        self.nodes.get(n).copied()
    }

    /// Internal nodes.
    pub fn nodes(&self) -> impl Iterator<Item = (&NodeId, &Parents)> {
        self.nodes.iter()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.keys()
    }

    /// `S_B`, always `N - 1`.
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    /// Level of `n` inside the tree (inputs are 0).
    pub fn node_level(&self, n: &NodeId) -> usize {
        match self.nodes.get(n) {
            None => 0,
            Some(p) => self.node_level(&p.up).max(self.node_level(&p.lp)) + 1,
        }
    }

    /// `L_B`, the level of the root.
    pub fn level(&self) -> usize {
        self.node_level(&self.root())
    }

    /// `(S_B, L_B)`.
    pub fn stats(&self) -> (usize, usize) {
        (self.size(), self.level())
    }

    /// Output nodes `(i,0)` on the lower-parent chain from the root.
    pub fn ridge(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut cur = self.root();
        while let Some(p) = self.nodes.get(&cur) {
            out.push(cur);
            cur = p.lp;
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidBackbone(m));
        if self.width < 2 {
            return bad(format!("width {} below 2", self.width));
        }
        if self.nodes.len() != self.width - 1 {
            return bad(format!(
                "{} internal nodes, expected {}",
                self.nodes.len(),
                self.width - 1
            ));
        }
        for (n, p) in &self.nodes {
            let ok = n.instance == 0
                && n.msb < self.width
                && n.msb > n.lsb
                && p.up.msb == n.msb
                && p.lp.lsb == n.lsb
                && p.up.lsb > n.lsb
                && p.up.lsb <= n.msb
                && p.lp.msb + 1 == p.up.lsb;
            if !ok {
                return bad(format!(
                    "node {n} has malformed parents {} / {}",
                    p.up, p.lp
                ));
            }
        }
        let mut seen = 0;
        let mut stack = vec![self.root()];
        while let Some(n) = stack.pop() {
            if n.is_input() {
                continue;
            }
            let Some(p) = self.nodes.get(&n) else {
                return bad(format!("node {n} is referenced but missing"));
            };
            seen += 1;
            stack.push(p.up);
            stack.push(p.lp);
        }
        if seen != self.nodes.len() {
            return bad("some nodes are not on a path to the root".into());
        }
        Ok(())
    }

    /// Regroup candidates, scanning columns from the MSB down. Column `i`
    /// contributes `(a, b)` where `a` is the upper parent of `(i,0)` and `b`
    /// is the upper parent of the next ridge node `(a.lsb-1,0)`.
    pub fn find_candidates(&self) -> Vec<RegroupCandidate> {
        let mut out = Vec::new();
        for i in (1..self.width).rev() {
            let Some(top) = self.nodes.get(&NodeId::new(i, 0)) else {
                continue;
            };
            let a = top.up;
            let Some(next) = self.nodes.get(&top.lp) else {
                continue;
            };
            let c = RegroupCandidate::new(a, next.up);
            if self.check_candidate(&c).is_ok() {
                out.push(c);
            }
        }
        out
    }

    fn check_candidate(&self, c: &RegroupCandidate) -> std::result::Result<(), String> {
        let RegroupCandidate { a, b } = *c;
        if a.lsb == 0 || b.lsb == 0 {
            return Err("both nodes need lsb > 0".into());
        }
        if b.msb + 1 != a.lsb {
            return Err(format!("b.msb ≠ a.lsb−1 ({b} does not abut {a})"));
        }
        let top = NodeId::new(a.msb, 0);
        match self.nodes.get(&top) {
            Some(p) if p.up == a => {}
            _ => return Err(format!("{a} is not the upper parent of {top}")),
        }
        let removed = c.removed();
        match self.nodes.get(&removed) {
            Some(p) if p.up == b => {}
            Some(_) => return Err(format!("{b} is not the upper parent of {removed}")),
            None => return Err(format!("node {removed} is absent")),
        }
        if self.nodes.contains_key(&c.created()) {
            return Err(format!("node {} already present", c.created()));
        }
        Ok(())
    }

    /// Applies one regroup, returning the rotated backbone.
    pub fn regroup(&self, a: NodeId, b: NodeId) -> Result<Backbone> {
        let c = RegroupCandidate::new(a, b);
        self.check_candidate(&c).map_err(Error::Regroup)?;
        let mut nodes = self.nodes.clone();
        let created = c.created();
        let lower = self.nodes[&c.removed()].lp;
        nodes.remove(&c.removed());
        nodes.insert(created, Parents { up: a, lp: b });
        nodes.insert(
            NodeId::new(a.msb, 0),
            Parents {
                up: created,
                lp: lower,
            },
        );
        Ok(Backbone {
            width: self.width,
            nodes,
        })
    }

    /// The backbone alone as a prefix graph (generally incomplete).
    pub fn to_graph(&self) -> PrefixGraph {
        let mut g = PrefixGraph::new(self.width).expect("width >= 2");
        for (n, p) in &self.nodes {
            g.insert_raw(*n, Some(*p));
        }
        g.refresh();
        g
    }

    /// Adds an output node for every bit that lacks one. Bits are filled in
    /// ascending order; bit `i` uses the node with MSB `i` and the smallest
    /// LSB `k` as upper parent and `(k-1,0)` as lower parent.
    ///
    /// The backbone already provides one output per ridge node, so the number
    /// of auxiliary nodes is `N - 1 - |ridge|`. That equals `N - 1 - L_B`
    /// whenever the ridge is a longest root path.
    pub fn complete(&self) -> Completion {
        let mut g = self.to_graph();
        let mut auxiliary = Vec::new();
        for i in 1..self.width {
            if g.has_output(i) {
                continue;
            }
            let k = self
                .nodes
                .keys()
                .filter(|n| n.msb == i)
                .map(|n| n.lsb)
                .min()
                .unwrap_or(i);
            let node = NodeId::new(i, 0);
            g.insert_raw(
                node,
                Some(Parents {
                    up: NodeId::new(i, k),
                    lp: NodeId::new(k - 1, 0),
                }),
            );
            auxiliary.push(node);
        }
        g.refresh();
        Completion {
            graph: g,
            auxiliary,
        }
    }

    /// Arrival time of every internal node and input under the backbone cost.
    pub fn arrivals(&self, profile: &ArrivalProfile, model: &DelayModel) -> BTreeMap<NodeId, f64> {
        fn walk(
            b: &Backbone,
            n: NodeId,
            profile: &ArrivalProfile,
            step: f64,
            out: &mut BTreeMap<NodeId, f64>,
        ) -> f64 {
            let t = match b.nodes.get(&n) {
                None => profile.at(n.msb),
                Some(p) => {
                    let up = walk(b, p.up, profile, step, out);
                    let lp = walk(b, p.lp, profile, step, out);
                    up.max(lp) + step
                }
            };
            out.insert(n, t);
            t
        }
        let mut out = BTreeMap::new();
        walk(self, self.root(), profile, model.step(), &mut out);
        out
    }

    /// Nested `group(...)` rendering with an arrival on every node.
    pub fn to_timed_sexpr(&self, profile: &ArrivalProfile, model: &DelayModel) -> String {
        let arrivals = self.arrivals(profile, model);
        let mut out = String::new();
        self.render_timed(self.root(), 0, true, true, &arrivals, &mut out);
        out
    }

    fn render_timed(
        &self,
        n: NodeId,
        indent: usize,
        is_root: bool,
        last_on_spine: bool,
        arrivals: &BTreeMap<NodeId, f64>,
        out: &mut String,
    ) {
        let pad = " ".repeat(indent);
        let t = arrivals[&n];
        let Some(p) = self.nodes.get(&n) else {
            let _ = write!(out, "{pad}input {n} [arrival={t:.4}]");
            return;
        };
        if is_root {
            let _ = write!(out, "{n} [arrival={t:.4}]\ngroup(\n");
        } else {
            let _ = write!(out, "{pad}{n} [arrival={t:.4}] =\n{pad}group(\n");
        }
        let child = if is_root { 2 } else { indent + 2 };
        self.render_timed(p.up, child, false, false, arrivals, out);
        out.push_str(",\n");
        self.render_timed(p.lp, child, false, last_on_spine, arrivals, out);
        // The closing parens of the final subtree hug its last leaf.
        if last_on_spine {
            out.push(')');
        } else {
            let _ = write!(out, "\n{pad})");
        }
    }
}

impl ArrivalCost for Backbone {
    fn leaf_count(&self) -> usize {
        self.width
    }

    fn arrival_cost(&self, profile: &ArrivalProfile, model: &DelayModel) -> f64 {
        self.arrivals(profile, model)[&self.root()]
    }
}

/// A completed adder and the auxiliary outputs added to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub graph: PrefixGraph,
    pub auxiliary: Vec<NodeId>,
}
