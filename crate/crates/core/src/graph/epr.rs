// SPDX-License-Identifier: Apache-2.0

//! Enhanced prefix representation: a per-node text dump of levels, parents
//! and trivial/non-trivial fanout.
//!
//! ```text
//! Bitwidth: 4
//! Non-input nodes: 3
//! Max level: 3
//! Max fanout: 1
//!
//! Input nodes:
//! (0,0), tf: [], ntf: [(1,0)]
//! ...
//!
//! Non-input nodes:
//! (3,0),lvl:3,up:(3,3),lp:(2,0),tf:[],ntf: []
//! ...
//! ```
//!
//! Levels and fanout lists are derived data; the parser reads them for
//! well-formedness but rebuilds the graph from the parent fields alone.

use std::fmt::Write;

use super::{NodeId, Parents, PrefixGraph};
use crate::error::{Error, Result};

pub(crate) fn node_list(nodes: &[NodeId]) -> String {
    let items: Vec<String> = nodes.iter().map(ToString::to_string).collect();
    format!("[{}]", items.join(", "))
}

pub fn render_epr(g: &PrefixGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Bitwidth: {}", g.width());
    let _ = writeln!(out, "Non-input nodes: {}", g.size());
    let _ = writeln!(out, "Max level: {}", g.depth());
    let _ = writeln!(out, "Max fanout: {}", g.max_fanout());
    out.push('\n');
    out.push_str("Input nodes:\n");
    for i in 0..g.width() {
        let n = NodeId::input(i);
        let _ = writeln!(
            out,
            "{n}, tf: {}, ntf: {}",
            node_list(&g.tf(&n)),
            node_list(&g.ntf(&n))
        );
    }
    out.push('\n');
    out.push_str("Non-input nodes:");
    let mut rows: Vec<(&NodeId, &Parents)> = g.non_input_nodes().collect();
    rows.sort_by(|(a, _), (b, _)| {
        b.msb
            .cmp(&a.msb)
            .then(a.lsb.cmp(&b.lsb))
            .then(a.instance.cmp(&b.instance))
    });
    for (n, p) in rows {
        let _ = write!(
            out,
            "\n{n},lvl:{},up:{},lp:{},tf:{},ntf: {}",
            g.level(n),
            p.up,
            p.lp,
            node_list(&g.tf(n)),
            node_list(&g.ntf(n))
        );
    }
    out
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn header(line: usize, text: &str, key: &str) -> Result<usize> {
    let v = text
        .strip_prefix(key)
        .ok_or_else(|| err(line, format!("expected {key:?}")))?;
    v.trim()
        .parse()
        .map_err(|e| err(line, format!("bad value for {key:?}: {e}")))
}

fn parse_node(line: usize, s: &str) -> Result<NodeId> {
    s.parse().map_err(|e: String| err(line, e))
}

/// Parses `[(a,b), (c,d)#1]`.
pub(crate) fn parse_list(line: usize, s: &str) -> Result<Vec<NodeId>> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| err(line, format!("expected [..] list, got {s:?}")))?;
    let mut out = Vec::new();
    let mut rest = inner.trim();
    while !rest.is_empty() {
        let close = rest
            .find(')')
            .ok_or_else(|| err(line, format!("unterminated node in {s:?}")))?;
        let mut end = close + 1;
        if rest[end..].starts_with('#') {
            end += 1 + rest[end + 1..]
                .find(|c: char| !c.is_ascii_digit())
                .unwrap_or(rest.len() - end - 1);
        }
        out.push(parse_node(line, &rest[..end])?);
        rest = rest[end..].trim_start();
        if let Some(r) = rest.strip_prefix(',') {
            rest = r.trim_start();
            if rest.is_empty() {
                return Err(err(line, "trailing comma in list"));
            }
        } else if !rest.is_empty() {
            return Err(err(line, format!("unexpected {rest:?} in list")));
        }
    }
    Ok(out)
}

fn split_field<'a>(line: usize, s: &'a str, key: &str) -> Result<(&'a str, &'a str)> {
    s.split_once(key)
        .ok_or_else(|| err(line, format!("missing field {key:?}")))
}

pub fn parse_epr(text: &str) -> Result<PrefixGraph> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .collect();
    let mut it = lines
        .iter()
        .copied()
        .filter(|(_, l)| !l.is_empty())
        .peekable();
    let mut next = |what: &str| {
        it.next().ok_or_else(|| {
            err(
                lines.len().max(1),
                format!("unexpected end of input, expected {what}"),
            )
        })
    };

    let (ln, l) = next("Bitwidth")?;
    let width = header(ln, l, "Bitwidth:")?;
    if width == 0 {
        return Err(err(ln, "bit width must be positive"));
    }
    let (ln, l) = next("Non-input nodes")?;
    let declared = header(ln, l, "Non-input nodes:")?;
    let (ln, l) = next("Max level")?;
    header(ln, l, "Max level:")?;
    let (ln, l) = next("Max fanout")?;
    header(ln, l, "Max fanout:")?;
    let (ln, l) = next("Input nodes:")?;
    if l != "Input nodes:" {
        return Err(err(ln, "expected \"Input nodes:\""));
    }

    let mut g = PrefixGraph::empty(width);
    for i in 0..width {
        let (ln, l) = next("input node line")?;
        let (node, rest) = split_field(ln, l, ", tf: ")?;
        let node = parse_node(ln, node)?;
        if node != NodeId::input(i) {
            return Err(err(
                ln,
                format!("expected input {}, got {node}", NodeId::input(i)),
            ));
        }
        let (tf, ntf) = split_field(ln, rest, ", ntf: ")?;
        parse_list(ln, tf)?;
        parse_list(ln, ntf)?;
        g.insert_raw(node, None);
    }

    let (ln, l) = next("Non-input nodes:")?;
    if l != "Non-input nodes:" {
        return Err(err(ln, "expected \"Non-input nodes:\""));
    }
    let mut count = 0;
    for (ln, l) in it {
        let (node, rest) = split_field(ln, l, ",lvl:")?;
        let node = parse_node(ln, node)?;
        let (lvl, rest) = split_field(ln, rest, ",up:")?;
        lvl.trim()
            .parse::<usize>()
            .map_err(|e| err(ln, format!("bad level: {e}")))?;
        let (up, rest) = split_field(ln, rest, ",lp:")?;
        let (lp, rest) = split_field(ln, rest, ",tf:")?;
        let (tf, ntf) = split_field(ln, rest, ",ntf:")?;
        parse_list(ln, tf)?;
        parse_list(ln, ntf)?;
        let parents = Parents {
            up: parse_node(ln, up)?,
            lp: parse_node(ln, lp)?,
        };
        if g.contains(&node) {
            return Err(err(ln, format!("duplicate node {node}")));
        }
        g.insert_raw(node, Some(parents));
        count += 1;
    }
    if count != declared {
        return Err(err(
            2,
            format!("header declares {declared} non-input nodes, found {count}"),
        ));
    }
    g.refresh();
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{kogge_stone, sklansky};

    #[test]
    fn serial_four_block() {
        let g = PrefixGraph::serial(4).unwrap();
        let text = render_epr(&g);
        let expected = "\
Bitwidth: 4
Non-input nodes: 3
Max level: 3
Max fanout: 1

Input nodes:
(0,0), tf: [], ntf: [(1,0)]
(1,1), tf: [(1,0)], ntf: []
(2,2), tf: [(2,0)], ntf: []
(3,3), tf: [(3,0)], ntf: []

Non-input nodes:
(3,0),lvl:3,up:(3,3),lp:(2,0),tf:[],ntf: []
(2,0),lvl:2,up:(2,2),lp:(1,0),tf:[],ntf: [(3,0)]
(1,0),lvl:1,up:(1,1),lp:(0,0),tf:[],ntf: [(2,0)]";
        assert_eq!(text, expected);
        assert!(text.contains("(2,0),lvl:2,up:(2,2),lp:(1,0)"));
    }

    #[test]
    fn round_trip_classic_graphs() {
        for g in [sklansky(8).unwrap(), kogge_stone(11).unwrap()] {
            assert_eq!(parse_epr(&render_epr(&g)).unwrap(), g);
        }
    }

    #[test]
    fn clone_suffix_round_trips() {
        let mut g = sklansky(4).unwrap();
        let c = NodeId::new(1, 0).with_instance(2);
        g.insert(c, NodeId::input(1), NodeId::input(0));
        let text = render_epr(&g);
        assert!(text.contains("(1,0)#2,lvl:1"));
        assert_eq!(parse_epr(&text).unwrap(), g);
    }

    #[test]
    fn malformed_lines_carry_numbers() {
        let good = render_epr(&PrefixGraph::serial(4).unwrap());
        let bad = good.replace("(2,0),lvl:2,up:(2,2)", "(2,0),lvl:x,up:(2,2)");
        match parse_epr(&bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 14),
            other => panic!("{other:?}"),
        }
        let bad = good.replace("ntf: [(1,0)]", "ntf: [(1,0]");
        assert!(matches!(parse_epr(&bad), Err(Error::Parse { line: 7, .. })));
        assert!(parse_epr("Bitwidth: 4\n").is_err());
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list(1, "[]").unwrap(), vec![]);
        assert_eq!(
            parse_list(1, "[(1,0), (2,0)#3]").unwrap(),
            vec![NodeId::new(1, 0), NodeId::new(2, 0).with_instance(3)]
        );
        assert!(parse_list(1, "[(1,0),]").is_err());
    }
}
