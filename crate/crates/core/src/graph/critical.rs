// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::fmt::Write;

use super::epr::node_list;
use super::{NodeId, Parents, PrefixGraph};
use crate::error::{Error, Result};
use crate::timing::TimingReport;

/// `ceil(log2(span))`, the fewest levels able to cover `span` bits.
pub fn theoretical_min_level(span: usize) -> usize {
    match span {
        0 | 1 => 0,
        s => (usize::BITS - (s - 1).leading_zeros()) as usize,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEntry {
    pub node: NodeId,
    pub level: usize,
    pub span: usize,
    pub parents: Option<Parents>,
    pub tf: Vec<NodeId>,
    pub ntf: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPath {
    /// From the start input to the end node, parent before child.
    pub entries: Vec<PathEntry>,
    pub min_levels: usize,
    pub actual_levels: usize,
}

impl CriticalPath {
    pub fn start(&self) -> NodeId {
        self.entries[0].node
    }

    pub fn end(&self) -> NodeId {
        self.entries[self.entries.len() - 1].node
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries.iter().map(|e| e.node)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            match e.parents {
                None => {
                    let _ = writeln!(
                        out,
                        "Lvl {}: {}, [INPUT] tf: {}, ntf: {}",
                        e.level,
                        e.node,
                        node_list(&e.tf),
                        node_list(&e.ntf)
                    );
                }
                Some(p) => {
                    let _ = writeln!(
                        out,
                        "Lvl {}:{},up:{},lp:{}, tf:{}, ntf:{}",
                        e.level,
                        e.node,
                        p.up,
                        p.lp,
                        node_list(&e.tf),
                        node_list(&e.ntf)
                    );
                }
            }
        }
        let _ = write!(
            out,
            "\n- Lvl efficiency:{min}/{act}(theoretical min:{min}, actual:{act})",
            min = self.min_levels,
            act = self.actual_levels
        );
        out
    }
}

/// Rebuilds the chain from `start` to `end` by following, from `end`
/// backwards, the parent whose arrival dominates among those reachable from
/// `start`. Ties go to the lower parent.
pub fn critical_path(
    g: &PrefixGraph,
    report: &TimingReport,
    start: NodeId,
    end: NodeId,
) -> Result<CriticalPath> {
    for n in [start, end] {
        if !g.contains(&n) {
            return Err(Error::UnknownNode(n));
        }
    }

    let mut reach = BTreeSet::from([start]);
    let mut frontier = vec![start];
    while let Some(n) = frontier.pop() {
        for c in g.consumers(&n) {
            if reach.insert(*c) {
                frontier.push(*c);
            }
        }
    }
    if !reach.contains(&end) {
        return Err(Error::NoPath { start, end });
    }

    let mut chain = vec![end];
    let mut cur = end;
    while cur != start {
        let p = g.parents(&cur).ok_or(Error::NoPath { start, end })?;
        let pick = [p.lp, p.up]
            .into_iter()
            .filter(|x| reach.contains(x))
            .fold(None::<(NodeId, f64)>, |best, x| {
                let t = report.edge_arrival(g, &x);
                match best {
                    Some((_, bt)) if bt >= t => best,
                    _ => Some((x, t)),
                }
            })
            .map(|(x, _)| x)
            .ok_or(Error::NoPath { start, end })?;
        chain.push(pick);
        cur = pick;
    }
    chain.reverse();

    let entries = chain
        .iter()
        .map(|n| PathEntry {
            node: *n,
            level: g.level(n),
            span: n.span(),
            parents: g.parents(n),
            tf: g.tf(n),
            ntf: g.ntf(n),
        })
        .collect();
    Ok(CriticalPath {
        entries,
        min_levels: theoretical_min_level(end.span()),
        actual_levels: g.level(&end) - g.level(&start),
    })
}
