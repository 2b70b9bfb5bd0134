// SPDX-License-Identifier: Apache-2.0

//! Local, function-preserving edits on a complete prefix graph.
//!
//! Each tool returns the edited graph together with the nodes it inserted
//! and removed; a rejected edit returns an error and leaves the input alone.
//! Edits that orphan intermediate nodes prune them.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{theoretical_min_level, NodeId, PrefixGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineKind {
    LevelOpt,
    FanoutOpt,
    NodeClone,
}

impl RefineKind {
    pub fn name(self) -> &'static str {
        match self {
            RefineKind::LevelOpt => "level_opt",
            RefineKind::FanoutOpt => "fanout_opt",
            RefineKind::NodeClone => "node_clone",
        }
    }
}

/// One refinement step: `tool target [consumer]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RefineAction {
    pub kind: RefineKind,
    pub target: NodeId,
    pub consumer: Option<NodeId>,
}

impl RefineAction {
    pub fn apply(
        &self,
        g: &PrefixGraph,
        critical: Option<&BTreeSet<NodeId>>,
    ) -> Result<EditOutcome> {
        match self.kind {
            RefineKind::LevelOpt => level_opt(g, self.target),
            RefineKind::FanoutOpt => {
                let consumer = self.consumer.ok_or_else(|| Error::Rejected {
                    tool: "fanout_opt",
                    reason: "no consumer given".into(),
                })?;
                fanout_opt(g, self.target, consumer)
            }
            RefineKind::NodeClone => node_clone(g, self.target, critical),
        }
    }
}

impl fmt::Display for RefineAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind.name(), self.target)?;
        if let Some(c) = self.consumer {
            write!(f, " {c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EditOutcome {
    pub graph: PrefixGraph,
    pub inserted: Vec<NodeId>,
    pub removed: Vec<NodeId>,
}

impl EditOutcome {
    /// One-line summary suitable as tool feedback.
    pub fn summary(&self) -> String {
        let list = |v: &[NodeId]| {
            if v.is_empty() {
                "none".to_string()
            } else {
                v.iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(", ")
            }
        };
        format!(
            "inserted: {}; removed: {}; nodes: {}",
            list(&self.inserted),
            list(&self.removed),
            self.graph.size()
        )
    }
}

fn reject(tool: &'static str, reason: impl Into<String>) -> Error {
    Error::Rejected {
        tool,
        reason: reason.into(),
    }
}

fn require_node(g: &PrefixGraph, tool: &'static str, n: &NodeId) -> Result<()> {
    if g.contains(n) {
        Ok(())
    } else {
        Err(reject(tool, format!("node {n} is not in the graph")))
    }
}

/// Best achievable level for every range inside one target, reusing existing
/// (non-clone) nodes and building the rest.
struct LevelPlanner<'a> {
    g: &'a PrefixGraph,
    memo: HashMap<(usize, usize), (usize, usize)>,
}

impl<'a> LevelPlanner<'a> {
    fn new(g: &'a PrefixGraph) -> Self {
        Self {
            g,
            memo: HashMap::new(),
        }
    }

    /// `(level, split)`; split is meaningless for existing nodes.
    fn plan(&mut self, msb: usize, lsb: usize) -> (usize, usize) {
        let id = NodeId::new(msb, lsb);
        if self.g.contains(&id) {
            return (self.g.level(&id), 0);
        }
        if let Some(&r) = self.memo.get(&(msb, lsb)) {
            return r;
        }
        let r = self.best_split(msb, lsb);
        self.memo.insert((msb, lsb), r);
        r
    }

    /// Split minimizing the level, ties going to the higher split point.
    fn best_split(&mut self, msb: usize, lsb: usize) -> (usize, usize) {
        let mut best = (usize::MAX, 0);
        for k in (lsb + 1..=msb).rev() {
            let l = self.plan(msb, k).0.max(self.plan(k - 1, lsb).0) + 1;
            if l < best.0 {
                best = (l, k);
            }
        }
        best
    }

    /// Inserts `(msb,lsb)` and any missing ancestors following the plan.
    fn build(&mut self, g: &mut PrefixGraph, msb: usize, lsb: usize, out: &mut Vec<NodeId>) {
        let id = NodeId::new(msb, lsb);
        if g.contains(&id) {
            return;
        }
        let (_, k) = self.plan(msb, lsb);
        self.build(g, msb, k, out);
        self.build(g, k - 1, lsb, out);
        g.insert_raw(
            id,
            Some(crate::graph::Parents {
                up: NodeId::new(msb, k),
                lp: NodeId::new(k - 1, lsb),
            }),
        );
        out.push(id);
    }
}

/// Re-parents `target` on the split with the lowest achievable level,
/// building missing parents at their own minimal level.
pub fn level_opt(g: &PrefixGraph, target: NodeId) -> Result<EditOutcome> {
    const TOOL: &str = "level_opt";
    require_node(g, TOOL, &target)?;
    if target.is_input() {
        return Err(reject(TOOL, format!("{target} is an input")));
    }
    let level = g.level(&target);
    let min = theoretical_min_level(target.span());
    if level <= min {
        return Err(reject(
            TOOL,
            format!("{target} is already at the minimum level {min}"),
        ));
    }
    let (new_level, k) = LevelPlanner::new(g).best_split(target.msb, target.lsb);
    if new_level >= level {
        return Err(reject(
            TOOL,
            format!("no split brings {target} below level {level}"),
        ));
    }

    let old = g.parents(&target).expect("non-input has parents");
    let mut out = g.clone();
    let mut inserted = Vec::new();
    let mut planner = LevelPlanner::new(g);
    planner.build(&mut out, target.msb, k, &mut inserted);
    planner.build(&mut out, k - 1, target.lsb, &mut inserted);
    out.insert_raw(
        target,
        Some(crate::graph::Parents {
            up: NodeId::new(target.msb, k),
            lp: NodeId::new(k - 1, target.lsb),
        }),
    );
    out.refresh();
    let removed = out.prune_dead([old.up, old.lp]);
    Ok(EditOutcome {
        graph: out,
        inserted,
        removed,
    })
}

/// Moves `consumer` off `target` by splitting it elsewhere. The new lower
/// parent must already exist; the new upper parent may be built from one
/// fresh node over existing parents.
pub fn fanout_opt(g: &PrefixGraph, target: NodeId, consumer: NodeId) -> Result<EditOutcome> {
    const TOOL: &str = "fanout_opt";
    require_node(g, TOOL, &target)?;
    require_node(g, TOOL, &consumer)?;
    if g.fanout(&target) < 2 {
        return Err(reject(
            TOOL,
            format!(
                "{target} has fanout {}, nothing to relieve",
                g.fanout(&target)
            ),
        ));
    }
    let cp = match g.parents(&consumer) {
        Some(p) if p.lp == target => p,
        _ => {
            return Err(reject(
                TOOL,
                format!("{consumer} is not an ntf consumer of {target}"),
            ))
        }
    };

    let (i, j) = (consumer.msb, consumer.lsb);
    // (resulting consumer level, split, new node to insert)
    type Choice = (usize, usize, Option<(NodeId, usize)>);
    let mut best: Option<Choice> = None;
    for k in j + 1..=i {
        if k == cp.up.lsb {
            continue;
        }
        let lp = NodeId::new(k - 1, j);
        if lp == target || !g.contains(&lp) {
            continue;
        }
        let up = NodeId::new(i, k);
        let (up_level, build) = if g.contains(&up) {
            (g.level(&up), None)
        } else {
            let mut pick: Option<(usize, usize)> = None;
            for m in k + 1..=i {
                let (a, b) = (NodeId::new(i, m), NodeId::new(m - 1, k));
                if !g.contains(&a) || !g.contains(&b) || a == target || b == target {
                    continue;
                }
                let l = g.level(&a).max(g.level(&b)) + 1;
                if pick.is_none_or(|(pl, _)| l < pl) {
                    pick = Some((l, m));
                }
            }
            match pick {
                Some((l, m)) => (l, Some((up, m))),
                None => continue,
            }
        };
        let level = up_level.max(g.level(&lp)) + 1;
        if best.as_ref().is_none_or(|(bl, _, _)| level < *bl) {
            best = Some((level, k, build));
        }
    }
    let (_, k, build) = best.ok_or_else(|| {
        reject(
            TOOL,
            format!("no alternative split for {consumer} avoids {target}"),
        )
    })?;

    let mut out = g.clone();
    let mut inserted = Vec::new();
    if let Some((node, m)) = build {
        out.insert_raw(
            node,
            Some(crate::graph::Parents {
                up: NodeId::new(i, m),
                lp: NodeId::new(m - 1, k),
            }),
        );
        inserted.push(node);
    }
    out.insert_raw(
        consumer,
        Some(crate::graph::Parents {
            up: NodeId::new(i, k),
            lp: NodeId::new(k - 1, j),
        }),
    );
    out.refresh();
    let removed = out.prune_dead([cp.up]);
    Ok(EditOutcome {
        graph: out,
        inserted,
        removed,
    })
}

/// Duplicates `target` and splits its consumers between the two copies.
///
/// With a critical set, consumers on it stay with the original and the rest
/// move to the clone. Otherwise, or when that would leave either copy idle,
/// the clone takes the upper half of the sorted consumers.
pub fn node_clone(
    g: &PrefixGraph,
    target: NodeId,
    critical: Option<&BTreeSet<NodeId>>,
) -> Result<EditOutcome> {
    const TOOL: &str = "node_clone";
    require_node(g, TOOL, &target)?;
    if target.is_input() {
        return Err(reject(TOOL, format!("{target} is an input")));
    }
    let consumers = g.consumers(&target).to_vec();
    if consumers.len() < 2 {
        return Err(reject(
            TOOL,
            format!("{target} has fanout {}, needs at least 2", consumers.len()),
        ));
    }
    let split = critical.map(|c| {
        consumers
            .iter()
            .partition::<Vec<NodeId>, _>(|n| c.contains(n))
    });
    let moved = match split {
        Some((stay, moved)) if !stay.is_empty() && !moved.is_empty() => moved,
        _ => consumers[consumers.len() / 2..].to_vec(),
    };

    let instance = g
        .nodes()
        .filter(|n| n.same_range(&target))
        .map(|n| n.instance)
        .max()
        .unwrap_or(0)
        + 1;
    let clone = target.with_instance(instance);
    let mut out = g.clone();
    out.insert_raw(clone, g.parents(&target));
    out.redirect(&moved, target, clone);
    Ok(EditOutcome {
        graph: out,
        inserted: vec![clone],
        removed: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{check_adder, sklansky, Coverage};

    fn parents(g: &PrefixGraph, n: NodeId) -> (NodeId, NodeId) {
        let p = g.parents(&n).unwrap();
        (p.up, p.lp)
    }

    fn assert_adds(g: &PrefixGraph) {
        assert!(g.is_valid(), "{:?}", g.validate());
        assert!(check_adder(g, Coverage::Exhaustive).unwrap().passed());
    }

    /// (3,0) over (3,2),(1,0) and (2,0) over (2,2),(1,0).
    fn shared_low_pair() -> PrefixGraph {
        let mut g = PrefixGraph::new(4).unwrap();
        g.insert(NodeId::new(1, 0), NodeId::input(1), NodeId::input(0));
        g.insert(NodeId::new(3, 2), NodeId::input(3), NodeId::input(2));
        g.insert(NodeId::new(3, 0), NodeId::new(3, 2), NodeId::new(1, 0));
        g.insert(NodeId::new(2, 0), NodeId::input(2), NodeId::new(1, 0));
        g
    }

    #[test]
    fn level_opt_on_serial_msb() {
        let g = PrefixGraph::serial(4).unwrap();
        let r = level_opt(&g, NodeId::new(3, 0)).unwrap();
        assert_eq!(
            parents(&r.graph, NodeId::new(3, 0)),
            (NodeId::new(3, 2), NodeId::new(1, 0))
        );
        assert_eq!(r.inserted, [NodeId::new(3, 2)]);
        assert!(r.removed.is_empty());
        assert_eq!(r.graph.level(&NodeId::new(3, 0)), 2);
        assert_adds(&r.graph);
    }

    #[test]
    fn level_opt_rejections() {
        let g = PrefixGraph::serial(4).unwrap();
        let e = level_opt(&g, NodeId::new(1, 0)).unwrap_err();
        assert!(e.to_string().contains("minimum level"), "{e}");
        assert!(level_opt(&g, NodeId::input(2)).is_err());
        assert!(level_opt(&g, NodeId::new(3, 1)).is_err());
    }

    #[test]
    fn level_opt_builds_deep_chains() {
        let g = PrefixGraph::serial(16).unwrap();
        let r = level_opt(&g, NodeId::new(15, 0)).unwrap();
        // Split at 5: (4,0) is at level 4 and (15,5) can be built at level 4.
        assert_eq!(parents(&r.graph, NodeId::new(15, 0)).1, NodeId::new(4, 0));
        assert_eq!(r.graph.level(&NodeId::new(15, 0)), 5);
        assert_eq!(r.inserted.len(), 10);
        assert!(check_adder(
            &r.graph,
            Coverage::Random {
                vectors: 5_000,
                seed: 1
            }
        )
        .unwrap()
        .passed());
    }

    #[test]
    fn fanout_opt_worked_example() {
        let g = shared_low_pair();
        let r = fanout_opt(&g, NodeId::new(1, 0), NodeId::new(3, 0)).unwrap();
        assert_eq!(
            parents(&r.graph, NodeId::new(3, 0)),
            (NodeId::new(3, 1), NodeId::input(0))
        );
        assert_eq!(
            parents(&r.graph, NodeId::new(3, 1)),
            (NodeId::new(3, 2), NodeId::input(1))
        );
        assert_eq!(r.graph.ntf(&NodeId::new(1, 0)), [NodeId::new(2, 0)]);
        assert_eq!(r.graph.fanout(&NodeId::new(1, 0)), 1);
        assert_adds(&r.graph);
    }

    #[test]
    fn fanout_opt_rejections() {
        let g = shared_low_pair();
        // (3,2) is an upper parent of (3,0): a tf edge.
        assert!(fanout_opt(&g, NodeId::new(3, 2), NodeId::new(3, 0)).is_err());
        let s = PrefixGraph::serial(4).unwrap();
        let e = fanout_opt(&s, NodeId::new(1, 0), NodeId::new(2, 0)).unwrap_err();
        assert!(e.to_string().contains("fanout 1"), "{e}");
    }

    #[test]
    fn clone_splits_consumers() {
        let g = sklansky(8).unwrap();
        let t = NodeId::new(3, 0);
        assert_eq!(g.fanout(&t), 4);
        let r = node_clone(&g, t, None).unwrap();
        let c = t.with_instance(1);
        assert_eq!(r.inserted, [c]);
        assert_eq!(r.graph.fanout(&t), 2);
        assert_eq!(r.graph.fanout(&c), 2);
        assert_eq!(
            r.graph.fanout(&NodeId::new(3, 2)),
            g.fanout(&NodeId::new(3, 2)) + 1
        );
        assert_adds(&r.graph);

        let again = node_clone(&r.graph, c, None).unwrap();
        assert_eq!(again.inserted, [t.with_instance(2)]);
        assert!(crate::graph::render_epr(&again.graph).contains("(3,0)#2,lvl:"));
    }

    #[test]
    fn clone_of_three_moves_two() {
        let mut g = PrefixGraph::serial(5).unwrap();
        let t = NodeId::new(1, 0);
        g.insert(NodeId::new(3, 2), NodeId::input(3), NodeId::input(2));
        g.insert(NodeId::new(4, 2), NodeId::input(4), NodeId::new(3, 2));
        g.insert(NodeId::new(3, 0), NodeId::new(3, 2), t);
        g.insert(NodeId::new(4, 0), NodeId::new(4, 2), t);
        assert_eq!(
            g.consumers(&t),
            [NodeId::new(2, 0), NodeId::new(3, 0), NodeId::new(4, 0)]
        );

        let r = node_clone(&g, t, None).unwrap();
        assert_eq!(r.graph.consumers(&t), [NodeId::new(2, 0)]);
        assert_eq!(r.graph.fanout(&t.with_instance(1)), 2);
        assert!(check_adder(&r.graph, Coverage::Exhaustive)
            .unwrap()
            .passed());

        let critical = BTreeSet::from([NodeId::new(4, 0)]);
        let r = node_clone(&g, t, Some(&critical)).unwrap();
        assert_eq!(r.graph.consumers(&t), [NodeId::new(4, 0)]);
        assert_eq!(r.graph.fanout(&t.with_instance(1)), 2);
    }

    #[test]
    fn clone_needs_fanout_two() {
        let g = PrefixGraph::serial(4).unwrap();
        let e = node_clone(&g, NodeId::new(2, 0), None).unwrap_err();
        assert!(e.to_string().contains("fanout 1"), "{e}");
    }

    #[test]
    fn action_display() {
        let a = RefineAction {
            kind: RefineKind::FanoutOpt,
            target: NodeId::new(1, 0),
            consumer: Some(NodeId::new(3, 0)),
        };
        assert_eq!(a.to_string(), "fanout_opt (1,0) (3,0)");
    }
}
