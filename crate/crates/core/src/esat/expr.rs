// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::backbone::Backbone;
use crate::error::{Error, Result};
use crate::graph::{NodeId, Parents};
use crate::timing::{ArrivalCost, ArrivalProfile, DelayModel};

/// A backbone as an expression tree. `Op(high, low)` groups two adjacent
/// ranges with the more significant one first, matching the prefix operator.
/// The text form lists the lower operand first: `(o i0 i1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BackboneExpr {
    Leaf(usize),
    Op(Box<BackboneExpr>, Box<BackboneExpr>),
}

impl BackboneExpr {
    pub fn leaf(bit: usize) -> Self {
        BackboneExpr::Leaf(bit)
    }

    pub fn op(high: BackboneExpr, low: BackboneExpr) -> Self {
        BackboneExpr::Op(Box::new(high), Box::new(low))
    }

    /// `(o (o (o i0 i1) i2) ...)`.
    pub fn serial(width: usize) -> Result<Self> {
        if width < 2 {
            return Err(Error::InvalidWidth(width));
        }
        Ok((1..width).fold(Self::leaf(0), |acc, i| Self::op(Self::leaf(i), acc)))
    }

    pub fn msb(&self) -> usize {
        match self {
            BackboneExpr::Leaf(i) => *i,
            BackboneExpr::Op(h, _) => h.msb(),
        }
    }

    pub fn lsb(&self) -> usize {
        match self {
            BackboneExpr::Leaf(i) => *i,
            BackboneExpr::Op(_, l) => l.lsb(),
        }
    }

    pub fn node_id(&self) -> NodeId {
        NodeId::new(self.msb(), self.lsb())
    }

    pub fn leaves(&self) -> usize {
        match self {
            BackboneExpr::Leaf(_) => 1,
            BackboneExpr::Op(h, l) => h.leaves() + l.leaves(),
        }
    }

    /// Checks that operands cover adjacent ranges and the whole tree spans
    /// `0..width`.
    pub fn validate(&self, width: usize) -> Result<()> {
        fn walk(e: &BackboneExpr) -> Result<()> {
            if let BackboneExpr::Op(h, l) = e {
                if l.msb() + 1 != h.lsb() {
                    return Err(Error::Syntax(format!(
                        "operands {} and {} are not adjacent",
                        l.node_id(),
                        h.node_id()
                    )));
                }
                walk(h)?;
                walk(l)?;
            }
            Ok(())
        }
        walk(self)?;
        if self.lsb() != 0 || self.msb() + 1 != width {
            return Err(Error::InvalidBackbone(format!(
                "expression covers {}, expected (0..{width})",
                self.node_id()
            )));
        }
        Ok(())
    }

    /// Level of the root (leaves are 0).
    pub fn level(&self) -> usize {
        match self {
            BackboneExpr::Leaf(_) => 0,
            BackboneExpr::Op(h, l) => h.level().max(l.level()) + 1,
        }
    }

    pub fn from_backbone(b: &Backbone) -> Self {
        fn build(b: &Backbone, n: NodeId) -> BackboneExpr {
            match b.parents(&n) {
                None => BackboneExpr::leaf(n.msb),
                Some(p) => BackboneExpr::op(build(b, p.up), build(b, p.lp)),
            }
        }
        build(b, b.root())
    }

    pub fn to_backbone(&self) -> Result<Backbone> {
        let width = self.msb() + 1;
        self.validate(width)?;
        let mut nodes = BTreeMap::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            if let BackboneExpr::Op(h, l) = e {
                nodes.insert(
                    e.node_id(),
                    Parents {
                        up: h.node_id(),
                        lp: l.node_id(),
                    },
                );
                stack.push(h);
                stack.push(l);
            }
        }
        Backbone::from_nodes(width, nodes)
    }
}

impl ArrivalCost for BackboneExpr {
    fn leaf_count(&self) -> usize {
        self.leaves()
    }

    fn arrival_cost(&self, profile: &ArrivalProfile, model: &DelayModel) -> f64 {
        match self {
            BackboneExpr::Leaf(i) => profile.at(*i),
            BackboneExpr::Op(h, l) => {
                h.arrival_cost(profile, model)
                    .max(l.arrival_cost(profile, model))
                    + model.step()
            }
        }
    }
}

impl fmt::Display for BackboneExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackboneExpr::Leaf(i) => write!(f, "i{i}"),
            BackboneExpr::Op(h, l) => write!(f, "(o {l} {h})"),
        }
    }
}

impl FromStr for BackboneExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spaced = s.replace('(', " ( ").replace(')', " ) ");
        let tokens: Vec<&str> = spaced.split_whitespace().collect();
        let mut pos = 0;
        let e = parse_tokens(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(Error::Syntax(format!(
                "trailing input after expression: {:?}",
                tokens[pos..].join(" ")
            )));
        }
        e.validate(e.msb() + 1)?;
        Ok(e)
    }
}

fn parse_tokens(tokens: &[&str], pos: &mut usize) -> Result<BackboneExpr> {
    let tok = |p: usize| {
        tokens
            .get(p)
            .copied()
            .ok_or_else(|| Error::Syntax("unexpected end of expression".into()))
    };
    match tok(*pos)? {
        "(" => {
            if tok(*pos + 1)? != "o" {
                return Err(Error::Syntax(format!(
                    "expected operator `o`, got {:?}",
                    tokens[*pos + 1]
                )));
            }
            *pos += 2;
            let low = parse_tokens(tokens, pos)?;
            let high = parse_tokens(tokens, pos)?;
            if tok(*pos)? != ")" {
                return Err(Error::Syntax(format!(
                    "expected `)`, got {:?}",
                    tokens[*pos]
                )));
            }
            *pos += 1;
            if low.msb() + 1 != high.lsb() {
                return Err(Error::Syntax(format!(
                    "operands {} and {} are not adjacent",
                    low.node_id(),
                    high.node_id()
                )));
            }
            Ok(BackboneExpr::op(high, low))
        }
        t => {
            let bit = t
                .strip_prefix('i')
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| Error::Syntax(format!("expected leaf `iN`, got {t:?}")))?;
            *pos += 1;
            Ok(BackboneExpr::Leaf(bit))
        }
    }
}
