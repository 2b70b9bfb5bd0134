// SPDX-License-Identifier: Apache-2.0

//! Linear delay model, backbone arrival cost and a fanout-aware static timing
//! pass over complete prefix graphs.
//!
//! Path delay is modelled as `y = k*x + b` with `x` the number of nodes on
//! the path. Each node contributes a fixed step `d + lambda` (which is the
//! slope `k`), and `b` is added once at the outputs. The full-graph pass adds
//! `beta` per extra fanout of the driving node.

use std::collections::BTreeMap;
use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, PrefixGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DelayModel {
    /// Slope of the linear path-delay model (ns per node).
    pub k: f64,
    /// Intercept added to output arrivals (ns).
    pub b: f64,
    /// Intrinsic node delay (ns).
    pub d: f64,
    /// Per-node timing margin (ns).
    pub lambda: f64,
    /// Penalty per fanout beyond the first (ns).
    pub beta: f64,
}

impl Default for DelayModel {
    fn default() -> Self {
        Self {
            k: 0.035,
            b: 0.0,
            d: 0.030,
            lambda: 0.005,
            beta: 0.005,
        }
    }
}

impl DelayModel {
    /// Unit-step model without fanout penalty, handy for counting levels.
    pub fn unit() -> Self {
        Self {
            k: 1.0,
            b: 0.0,
            d: 1.0,
            lambda: 0.0,
            beta: 0.0,
        }
    }

    /// Delay contributed by one prefix node.
    pub fn step(&self) -> f64 {
        self.d + self.lambda
    }

    /// Re-derives the node delay so the step matches slope `k`.
    pub fn with_slope(mut self, k: f64) -> Self {
        self.k = k;
        self.d = (k - self.lambda).max(0.0);
        self
    }

    /// `k*x + b` for a path of `nodes` nodes.
    pub fn path_delay(&self, nodes: usize) -> f64 {
        self.k * nodes as f64 + self.b
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("k", self.k),
            ("b", self.b),
            ("d", self.d),
            ("lambda", self.lambda),
            ("beta", self.beta),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "delay model {name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-bit input arrival times in ns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalProfile(Vec<f64>);

impl ArrivalProfile {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if let Some((i, t)) = times
            .iter()
            .enumerate()
            .find(|(_, t)| !(t.is_finite() && **t >= 0.0))
        {
            return Err(Error::InvalidArgument(format!(
                "arrival time for bit {i} must be finite and non-negative, got {t}"
            )));
        }
        Ok(Self(times))
    }

    pub fn uniform(width: usize, t: f64) -> Self {
        Self(vec![t; width])
    }

    /// Lower half arrives at 0, upper half at `offset`.
    pub fn lsb_first(width: usize, offset: f64) -> Self {
        Self(
            (0..width)
                .map(|i| if i < width / 2 { 0.0 } else { offset })
                .collect(),
        )
    }

    /// Seeded uniform draws from `[0, max]`.
    pub fn random(width: usize, max: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self((0..width).map(|_| rng.random::<f64>() * max).collect())
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn at(&self, bit: usize) -> f64 {
        self.0[bit]
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn ensure_width(&self, width: usize) -> Result<()> {
        if self.width() == width {
            Ok(())
        } else {
            Err(Error::ProfileWidth {
                expected: width,
                got: self.width(),
            })
        }
    }

    /// Parses `bit, arrival` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let (bit, t) = line
                .split_once(',')
                .ok_or_else(|| perr(format!("expected \"bit, arrival\", got {line:?}")))?;
            let bit: usize = bit
                .trim()
                .parse()
                .map_err(|e| perr(format!("bad bit index: {e}")))?;
            let t: f64 = t
                .trim()
                .parse()
                .map_err(|e| perr(format!("bad arrival time: {e}")))?;
            if entries.insert(bit, t).is_some() {
                return Err(perr(format!("bit {bit} listed twice")));
            }
        }
        let width = entries.len();
        if let Some((&bit, _)) = entries.iter().find(|(b, _)| **b >= width) {
            return Err(Error::InvalidArgument(format!(
                "profile is not contiguous: bit {bit} present with only {width} entries"
            )));
        }
        Self::new(entries.into_values().collect())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.0.iter().enumerate() {
            let _ = writeln!(out, "{i}, {t}");
        }
        out
    }
}

/// Trees with a timing cost under the backbone recurrence
/// `C(leaf i) = t_i`, `C(op(l, r)) = max(C(l), C(r)) + d + lambda`.
pub trait ArrivalCost {
    fn leaf_count(&self) -> usize;
    fn arrival_cost(&self, profile: &ArrivalProfile, model: &DelayModel) -> f64;
}

/// Arrival time at the root of a backbone tree.
pub fn backbone_cost<T: ArrivalCost + ?Sized>(
    tree: &T,
    profile: &ArrivalProfile,
    model: &DelayModel,
) -> Result<f64> {
    profile.ensure_width(tree.leaf_count())?;
    Ok(tree.arrival_cost(profile, model))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub arrivals: BTreeMap<NodeId, f64>,
    /// Latest output arrival.
    pub worst_arrival: f64,
    /// `worst_arrival + b`.
    pub delay: f64,
    pub critical_start: NodeId,
    pub critical_end: NodeId,
    /// Non-input node count.
    pub area: usize,
    step: f64,
    beta: f64,
}

impl TimingReport {
    pub fn slack(&self, target: f64) -> f64 {
        target - self.delay
    }

    pub fn arrival(&self, n: &NodeId) -> f64 {
        self.arrivals.get(n).copied().unwrap_or(0.0)
    }

    /// Time at which `parent`'s signal is available to a consumer.
    pub fn edge_arrival(&self, g: &PrefixGraph, parent: &NodeId) -> f64 {
        self.arrival(parent) + edge_delay(self.step, self.beta, g.fanout(parent))
    }
}

fn edge_delay(step: f64, beta: f64, fanout: usize) -> f64 {
    step + beta * fanout.saturating_sub(1) as f64
}

/// Static timing over a complete prefix graph.
pub fn graph_arrivals(
    g: &PrefixGraph,
    profile: &ArrivalProfile,
    model: &DelayModel,
) -> Result<TimingReport> {
    profile.ensure_width(g.width())?;
    g.ensure_complete()?;
    let (step, beta) = (model.step(), model.beta);

    let mut arrivals = BTreeMap::new();
    for n in g.topo_order() {
        let t = match g.parents(&n) {
            None => profile.at(n.msb),
            Some(p) => {
                let via = |x: &NodeId| -> Result<f64> {
                    let a = arrivals.get(x).copied().ok_or(Error::UnknownNode(*x))?;
                    Ok(a + edge_delay(step, beta, g.fanout(x)))
                };
                via(&p.up)?.max(via(&p.lp)?)
            }
        };
        arrivals.insert(n, t);
    }

    let mut end = PrefixGraph::output(0);
    for i in 0..g.width() {
        let o = PrefixGraph::output(i);
        if arrivals[&o] >= arrivals[&end] {
            end = o;
        }
    }
    let worst_arrival = arrivals[&end];

    let mut report = TimingReport {
        arrivals,
        worst_arrival,
        delay: worst_arrival + model.b,
        critical_start: end,
        critical_end: end,
        area: g.size(),
        step,
        beta,
    };
    let mut cur = end;
    while let Some(p) = g.parents(&cur) {
        let (lp, up) = (report.edge_arrival(g, &p.lp), report.edge_arrival(g, &p.up));
        cur = if lp >= up { p.lp } else { p.up };
    }
    report.critical_start = cur;
    Ok(report)
}

/// One evaluated design of an area/delay sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub target: f64,
    pub area: usize,
    pub delay: f64,
    pub slack: f64,
    pub size: usize,
    pub level: usize,
    pub deficiency: i64,
}

impl SweepRow {
    pub fn evaluate(
        g: &PrefixGraph,
        target: f64,
        profile: &ArrivalProfile,
        model: &DelayModel,
    ) -> Result<Self> {
        let r = graph_arrivals(g, profile, model)?;
        Ok(Self {
            target,
            area: r.area,
            delay: r.delay,
            slack: r.slack(target),
            size: g.size(),
            level: g.depth(),
            deficiency: g.deficiency(),
        })
    }

    /// Strictly better on one axis and no worse on the other.
    pub fn dominates(&self, other: &SweepRow) -> bool {
        (self.area <= other.area && self.delay <= other.delay)
            && (self.area < other.area || self.delay < other.delay)
    }
}

/// Synthesizes one design per target delay and evaluates each.
pub fn pareto_sweep<F>(
    mut synthesize: F,
    targets: &[f64],
    profile: &ArrivalProfile,
    model: &DelayModel,
) -> Result<Vec<SweepRow>>
where
    F: FnMut(f64) -> Result<PrefixGraph>,
{
    if targets.is_empty() {
        return Err(Error::InvalidArgument("no target delays given".into()));
    }
    targets
        .iter()
        .map(|&t| {
            let g = synthesize(t)?;
            SweepRow::evaluate(&g, t, profile, model)
        })
        .collect()
}

/// Rows not dominated by any other row, sorted by delay.
pub fn pareto_front(rows: &[SweepRow]) -> Vec<SweepRow> {
    let mut front: Vec<SweepRow> = rows
        .iter()
        .filter(|r| !rows.iter().any(|o| o.dominates(r)))
        .cloned()
        .collect();
    front.sort_by(|a, b| a.delay.total_cmp(&b.delay).then(a.area.cmp(&b.area)));
    front.dedup_by(|a, b| a.area == b.area && a.delay == b.delay);
    front
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn serial_chain_arrival() {
        let g = PrefixGraph::serial(4).unwrap();
        let model = DelayModel {
            beta: 0.0,
            ..DelayModel::default()
        };
        let r = graph_arrivals(&g, &ArrivalProfile::uniform(4, 0.0), &model).unwrap();
        assert!(close(r.worst_arrival, 0.105));
        assert_eq!(r.critical_end, NodeId::new(3, 0));
        assert_eq!(r.critical_start, NodeId::input(0));
        assert_eq!(r.area, 3);
    }

    #[test]
    fn fanout_penalty_applies_per_extra_consumer() {
        // (1,0) feeds both (2,0) and (3,0).
        let mut g = PrefixGraph::new(4).unwrap();
        g.insert(NodeId::new(1, 0), NodeId::input(1), NodeId::input(0));
        g.insert(NodeId::new(2, 0), NodeId::input(2), NodeId::new(1, 0));
        g.insert(NodeId::new(3, 2), NodeId::input(3), NodeId::input(2));
        g.insert(NodeId::new(3, 0), NodeId::new(3, 2), NodeId::new(1, 0));
        let model = DelayModel::default();
        let r = graph_arrivals(&g, &ArrivalProfile::uniform(4, 0.0), &model).unwrap();
        assert_eq!(g.fanout(&NodeId::new(1, 0)), 2);
        assert!(close(r.arrival(&NodeId::new(2, 0)), 0.035 + 0.035 + 0.005));
        // (2,2) also has two consumers.
        assert!(close(r.arrival(&NodeId::new(3, 2)), 0.035 + 0.005));
    }

    #[test]
    fn slack_and_delay_sum_to_target() {
        let g = PrefixGraph::serial(6).unwrap();
        let r = graph_arrivals(
            &g,
            &ArrivalProfile::random(6, 0.2, 3),
            &DelayModel::default(),
        )
        .unwrap();
        for t in [0.0, 0.1, 0.2, 1.0, 0.123456789] {
            let s = r.slack(t);
            assert!((s + r.delay - t).abs() <= f64::EPSILON * t.abs().max(1.0));
        }
    }

    #[test]
    fn profile_text_round_trip_and_errors() {
        let p = ArrivalProfile::random(9, 1.0, 11);
        assert_eq!(ArrivalProfile::parse(&p.to_text()).unwrap(), p);
        assert!(ArrivalProfile::parse("0, 0.1\n2, 0.3\n").is_err());
        assert!(ArrivalProfile::parse("0, 0.1\n0, 0.3\n").is_err());
        assert!(matches!(
            ArrivalProfile::parse("0, 0.1\n1 0.3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(ArrivalProfile::parse("0, -1\n").is_err());
        let q = ArrivalProfile::parse("# header\n1, 0.5\n0, 0.25 # lsb\n\n").unwrap();
        assert_eq!(q.times(), &[0.25, 0.5]);
    }

    #[test]
    fn presets() {
        let p = ArrivalProfile::lsb_first(8, 0.14);
        assert_eq!(p.times(), &[0.0, 0.0, 0.0, 0.0, 0.14, 0.14, 0.14, 0.14]);
        let r = ArrivalProfile::random(16, 0.07, 5);
        assert!(r.times().iter().all(|t| (0.0..=0.07).contains(t)));
        assert_eq!(r, ArrivalProfile::random(16, 0.07, 5));
        assert_ne!(r, ArrivalProfile::random(16, 0.07, 6));
    }

    #[test]
    fn empty_sweep_is_rejected() {
        let r = pareto_sweep(
            |_| PrefixGraph::serial(4),
            &[],
            &ArrivalProfile::uniform(4, 0.0),
            &DelayModel::default(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn front_drops_dominated_rows() {
        let row = |area, delay| SweepRow {
            target: 0.0,
            area,
            delay,
            slack: 0.0,
            size: area,
            level: 0,
            deficiency: 0,
        };
        let rows = [row(10, 1.0), row(12, 0.8), row(12, 1.0), row(9, 1.5)];
        let front = pareto_front(&rows);
        assert_eq!(front.len(), 3);
        assert!(front
            .windows(2)
            .all(|w| w[0].delay <= w[1].delay && w[0].area >= w[1].area));
    }

    #[test]
    fn default_step_is_slope() {
        let m = DelayModel::default();
        assert!(close(m.step(), m.k));
        assert!(close(m.path_delay(3), 0.105));
        assert!(close(DelayModel::default().with_slope(0.05).step(), 0.05));
    }
}
