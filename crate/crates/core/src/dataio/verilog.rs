// SPDX-License-Identifier: Apache-2.0

//! Structural Verilog export and a small interpreter for the emitted subset.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Write};
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::graph::{NodeId, PrefixGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Style {
    /// AND/OR/XOR gates, every signal in true polarity.
    #[default]
    Plain,
    /// AOI21/OAI21 carry cells on alternating levels with NAND/NOR for the
    /// propagate terms. Inverters appear only where two parents disagree in
    /// polarity.
    Inverting,
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Style::Plain => "plain",
            Style::Inverting => "inverting",
        })
    }
}

impl FromStr for Style {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Style::Plain),
            "inverting" => Ok(Style::Inverting),
            other => Err(Error::InvalidArgument(format!(
                "unknown netlist style {other:?} (expected plain or inverting)"
            ))),
        }
    }
}

const CELLS: &str = "\
module AOI21 (y, a0, a1, b);
  output y;
  input a0, a1, b;
  wire t;
  and (t, a0, a1);
  nor (y, t, b);
endmodule

module OAI21 (y, a0, a1, b);
  output y;
  input a0, a1, b;
  wire t;
  or (t, a0, a1);
  nand (y, t, b);
endmodule

";

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Kind {
    G,
    P,
}

fn signal(kind: Kind, n: &NodeId, inverted: bool) -> String {
    let k = match kind {
        Kind::G => 'G',
        Kind::P => 'P',
    };
    let mut s = format!("{k}{}_{}", n.msb, n.lsb);
    if n.instance > 0 {
        let _ = write!(s, "_c{}", n.instance);
    }
    if inverted {
        s.push_str("_n");
    }
    s
}

struct Emitter {
    wires: Vec<String>,
    body: Vec<String>,
    /// Signals already driven, by kind, node and polarity.
    driven: HashSet<(Kind, NodeId, bool)>,
}

impl Emitter {
    fn gate(&mut self, cell: &str, out: String, ins: &[&str]) {
        self.body
            .push(format!("  {cell} ({out}, {});", ins.join(", ")));
    }

    fn drive(&mut self, kind: Kind, n: NodeId, inverted: bool) -> String {
        let s = signal(kind, &n, inverted);
        self.wires.push(s.clone());
        self.driven.insert((kind, n, inverted));
        s
    }

    /// The signal in the requested polarity, adding an inverter if only the
    /// opposite one exists.
    fn get(&mut self, kind: Kind, n: NodeId, inverted: bool) -> String {
        if !self.driven.contains(&(kind, n, inverted)) {
            let src = signal(kind, &n, !inverted);
            let out = self.drive(kind, n, inverted);
            self.gate("not", out, &[&src]);
        }
        signal(kind, &n, inverted)
    }

    fn native(&self, kind: Kind, n: NodeId) -> bool {
        !self.driven.contains(&(kind, n, false))
    }
}

/// Nodes whose group propagate feeds some consumer.
fn propagate_needed(g: &PrefixGraph) -> HashSet<NodeId> {
    let mut need = HashSet::new();
    for n in g.topo_order().into_iter().rev() {
        if n.is_input() {
            continue;
        }
        let used = g.consumers(&n).iter().any(|c| {
            g.parents(c)
                .is_some_and(|p| p.up == n || (p.lp == n && need.contains(c)))
        });
        if used {
            need.insert(n);
        }
    }
    need
}

/// Structural netlist with ports `a`, `b`, `s` and `cout`.
pub fn emit_verilog(g: &PrefixGraph, style: Style) -> Result<String> {
    g.ensure_valid()?;
    g.ensure_complete()?;
    let n = g.width();
    let need_p = propagate_needed(g);
    let mut e = Emitter {
        wires: Vec::new(),
        body: Vec::new(),
        driven: HashSet::new(),
    };

    for i in 0..n {
        let x = NodeId::input(i);
        let gi = e.drive(Kind::G, x, false);
        e.gate("and", gi, &[&format!("a[{i}]"), &format!("b[{i}]")]);
        let pi = e.drive(Kind::P, x, false);
        e.gate("xor", pi, &[&format!("a[{i}]"), &format!("b[{i}]")]);
    }

    let mut pol: HashMap<NodeId, bool> = (0..n).map(|i| (NodeId::input(i), false)).collect();
    for node in g.topo_order() {
        let Some(p) = g.parents(&node) else {
            continue;
        };
        match style {
            Style::Plain => {
                let t = format!("T{}", &signal(Kind::G, &node, false)[1..]);
                e.wires.push(t.clone());
                let (pu, gl, gu) = (
                    signal(Kind::P, &p.up, false),
                    signal(Kind::G, &p.lp, false),
                    signal(Kind::G, &p.up, false),
                );
                e.gate("and", t.clone(), &[&pu, &gl]);
                let gn = e.drive(Kind::G, node, false);
                e.gate("or", gn, &[&gu, &t]);
                if need_p.contains(&node) {
                    let pl = signal(Kind::P, &p.lp, false);
                    let pn = e.drive(Kind::P, node, false);
                    e.gate("and", pn, &[&pu, &pl]);
                }
            }
            Style::Inverting => {
                // Follow the later parent's polarity so any inverter lands on
                // the earlier one.
                let inv = if g.level(&p.lp) > g.level(&p.up) {
                    pol[&p.lp]
                } else {
                    pol[&p.up]
                };
                let pu = e.get(Kind::P, p.up, inv);
                let gl = e.get(Kind::G, p.lp, inv);
                let gu = e.get(Kind::G, p.up, inv);
                let (cell, prop) = if inv {
                    ("OAI21", "nor")
                } else {
                    ("AOI21", "nand")
                };
                let gn = e.drive(Kind::G, node, !inv);
                e.gate(cell, gn, &[&pu, &gl, &gu]);
                if need_p.contains(&node) {
                    let pl = e.get(Kind::P, p.lp, inv);
                    let pn = e.drive(Kind::P, node, !inv);
                    e.gate(prop, pn, &[&pu, &pl]);
                }
                pol.insert(node, !inv);
            }
        }
    }

    let p0 = signal(Kind::P, &NodeId::input(0), false);
    e.body.push(format!("  buf (s[0], {p0});"));
    for i in 1..n {
        let c = PrefixGraph::output(i - 1);
        let inv = e.native(Kind::G, c);
        let cs = signal(Kind::G, &c, inv);
        let pi = signal(Kind::P, &NodeId::input(i), false);
        let cell = if inv { "xnor" } else { "xor" };
        e.body.push(format!("  {cell} (s[{i}], {pi}, {cs});"));
    }
    let top = PrefixGraph::output(n - 1);
    let inv = e.native(Kind::G, top);
    let cell = if inv { "not" } else { "buf" };
    e.body
        .push(format!("  {cell} (cout, {});", signal(Kind::G, &top, inv)));

    let mut out = String::new();
    let _ = writeln!(
        out,
        "// {n}-bit prefix adder, {} prefix nodes, depth {}, {style} style",
        g.size(),
        g.depth()
    );
    if style == Style::Inverting {
        out.push_str(CELLS);
    }
    let _ = writeln!(out, "module prefix_adder_{n} (a, b, s, cout);");
    let _ = writeln!(out, "  input [{}:0] a;", n - 1);
    let _ = writeln!(out, "  input [{}:0] b;", n - 1);
    let _ = writeln!(out, "  output [{}:0] s;", n - 1);
    let _ = writeln!(out, "  output cout;");
    for chunk in e.wires.chunks(8) {
        let _ = writeln!(out, "  wire {};", chunk.join(", "));
    }
    for line in &e.body {
        out.push_str(line);
        out.push('\n');
    }
    out.push_str("endmodule\n");
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Pin {
    name: String,
    bit: Option<usize>,
}

#[derive(Debug, Clone)]
struct Instance {
    cell: String,
    pins: Vec<Pin>,
    line: usize,
}

#[derive(Debug, Clone, Default)]
struct Module {
    ports: Vec<String>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    widths: HashMap<String, usize>,
    instances: Vec<Instance>,
}

/// A parsed structural netlist: gate primitives plus instances of modules
/// defined earlier in the same text. The last module is the top.
#[derive(Debug, Clone)]
pub struct Netlist {
    modules: BTreeMap<String, Module>,
    top: String,
    program: OnceLock<Located<Program>>,
}

const PRIMITIVES: [&str; 8] = ["and", "or", "nand", "nor", "xor", "xnor", "not", "buf"];

fn tokenize(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split("//").next().unwrap_or_default();
        let mut chars = line.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            if c.is_whitespace() {
                continue;
            }
            if c.is_ascii_alphanumeric() || c == '_' || c == '$' {
                let mut end = i + c.len_utf8();
                while let Some(&(j, d)) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' || d == '$' {
                        end = j + d.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push((ln + 1, line[i..end].to_owned()));
            } else {
                out.push((ln + 1, c.to_string()));
            }
        }
    }
    out
}

struct Parser {
    toks: Vec<(usize, String)>,
    pos: usize,
}

impl Parser {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or(self.toks.last())
            .map_or(0, |t| t.0)
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line(),
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&str> {
        self.toks.get(self.pos).map(|t| t.1.as_str())
    }

    fn next(&mut self) -> Result<String> {
        let t = self
            .toks
            .get(self.pos)
            .map(|t| t.1.clone())
            .ok_or_else(|| self.err("unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, want: &str) -> Result<()> {
        let got = self.next()?;
        if got == want {
            Ok(())
        } else {
            self.pos -= 1;
            Err(self.err(format!("expected {want:?}, found {got:?}")))
        }
    }

    fn ident(&mut self) -> Result<String> {
        let t = self.next()?;
        if t.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
            Ok(t)
        } else {
            self.pos -= 1;
            Err(self.err(format!("expected identifier, found {t:?}")))
        }
    }

    fn number(&mut self) -> Result<usize> {
        let t = self.next()?;
        t.parse().map_err(|_| {
            self.pos -= 1;
            self.err(format!("expected number, found {t:?}"))
        })
    }

    fn module(&mut self) -> Result<(String, Module)> {
        self.expect("module")?;
        let name = self.ident()?;
        let mut m = Module::default();
        self.expect("(")?;
        loop {
            m.ports.push(self.ident()?);
            if self.next()? == ")" {
                break;
            }
        }
        self.expect(";")?;
        loop {
            let line = self.line();
            let kw = self.ident()?;
            match kw.as_str() {
                "endmodule" => break,
                "input" | "output" | "wire" => {
                    let mut width = 1;
                    if self.peek() == Some("[") {
                        self.next()?;
                        let hi = self.number()?;
                        self.expect(":")?;
                        let lo = self.number()?;
                        self.expect("]")?;
                        if lo != 0 {
                            return Err(self.err("only [hi:0] ranges are supported"));
                        }
                        width = hi + 1;
                    }
                    loop {
                        let n = self.ident()?;
                        m.widths.insert(n.clone(), width);
                        match kw.as_str() {
                            "input" => m.inputs.push(n),
                            "output" => m.outputs.push(n),
                            _ => {}
                        }
                        if self.next()? == ";" {
                            break;
                        }
                    }
                }
                _ => {
                    if self.peek() != Some("(") {
                        self.ident()?;
                    }
                    self.expect("(")?;
                    let mut pins = Vec::new();
                    loop {
                        let name = self.ident()?;
                        let mut bit = None;
                        if self.peek() == Some("[") {
                            self.next()?;
                            bit = Some(self.number()?);
                            self.expect("]")?;
                        }
                        pins.push(Pin { name, bit });
                        if self.next()? == ")" {
                            break;
                        }
                    }
                    self.expect(";")?;
                    m.instances.push(Instance {
                        cell: kw,
                        pins,
                        line,
                    });
                }
            }
        }
        Ok((name, m))
    }
}

impl Netlist {
    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Parser {
            toks: tokenize(text),
            pos: 0,
        };
        let mut modules = BTreeMap::new();
        let mut last = None;
        while p.peek().is_some() {
            let (name, m) = p.module()?;
            // Cells must be defined before use, which also rules out recursion.
            for inst in &m.instances {
                if !PRIMITIVES.contains(&inst.cell.as_str()) && !modules.contains_key(&inst.cell) {
                    return Err(Error::Parse {
                        line: inst.line,
                        message: format!("unknown cell {:?}", inst.cell),
                    });
                }
            }
            last = Some(name.clone());
            modules.insert(name, m);
        }
        let Some(top) = last else {
            return Err(Error::Parse {
                line: 0,
                message: "no module found".into(),
            });
        };
        let net = Self {
            modules,
            top,
            program: OnceLock::new(),
        };
        let m = &net.modules[&net.top];
        for port in ["a", "b", "s", "cout"] {
            if !m.ports.iter().any(|p| p == port) {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("top module lacks port {port}"),
                });
            }
        }
        Ok(net)
    }

    pub fn top(&self) -> &str {
        &self.top
    }

    /// Width of operand `a`.
    pub fn width(&self) -> usize {
        self.modules[&self.top]
            .widths
            .get("a")
            .copied()
            .unwrap_or(0)
    }

    fn program(&self) -> Result<&Program> {
        self.program
            .get_or_init(|| {
                let mut b = Builder::default();
                let top = &self.modules[&self.top];
                let mut binds = HashMap::new();
                for port in ["a", "b"] {
                    let w = top.widths.get(port).copied().unwrap_or(0);
                    binds.insert(port.to_string(), b.alloc(w, true));
                }
                b.flatten(self, &self.top, &mut binds)?;
                let slots = |name: &str| binds.get(name).cloned().unwrap_or_default();
                let (s, cout) = (slots("s"), slots("cout"));
                for (i, slot) in s.iter().chain(&cout).enumerate() {
                    if !b.driven[*slot] {
                        let what = if i < s.len() {
                            format!("s[{i}]")
                        } else {
                            "cout".into()
                        };
                        return Err((0, format!("{what} is undriven")));
                    }
                }
                Ok(Program {
                    slots: b.driven.len(),
                    a: slots("a"),
                    b: slots("b"),
                    s,
                    cout: cout
                        .first()
                        .copied()
                        .ok_or((0, "cout is undeclared".to_string()))?,
                    gates: b.gates,
                })
            })
            .as_ref()
            .map_err(|(line, message)| Error::Parse {
                line: *line,
                message: message.clone(),
            })
    }

    /// Same contract as [`PrefixGraph::simulate_lanes`].
    pub fn simulate_lanes(&self, a: &[u64], b: &[u64]) -> Result<(Vec<u64>, u64)> {
        let n = self.width();
        if a.len() != n || b.len() != n {
            return Err(Error::InvalidArgument(format!(
                "netlist is {n} bits wide, got {} and {} operand bits",
                a.len(),
                b.len()
            )));
        }
        let p = self.program()?;
        let mut v = vec![0u64; p.slots];
        for (slot, x) in p.a.iter().zip(a).chain(p.b.iter().zip(b)) {
            v[*slot] = *x;
        }
        for g in &p.gates {
            let ins = g.ins.iter().map(|i| v[*i]);
            v[g.out] = match g.op {
                Op::And => ins.fold(!0, |x, y| x & y),
                Op::Nand => !ins.fold(!0, |x, y| x & y),
                Op::Or => ins.fold(0, |x, y| x | y),
                Op::Nor => !ins.fold(0, |x, y| x | y),
                Op::Xor => ins.fold(0, |x, y| x ^ y),
                Op::Xnor => !ins.fold(0, |x, y| x ^ y),
                Op::Buf => v[g.ins[0]],
                Op::Not => !v[g.ins[0]],
            };
        }
        Ok((p.s.iter().map(|i| v[*i]).collect(), v[p.cout]))
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
}

impl Op {
    fn from_cell(cell: &str) -> Option<Op> {
        Some(match cell {
            "and" => Op::And,
            "nand" => Op::Nand,
            "or" => Op::Or,
            "nor" => Op::Nor,
            "xor" => Op::Xor,
            "xnor" => Op::Xnor,
            "not" => Op::Not,
            "buf" => Op::Buf,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
struct Gate {
    op: Op,
    ins: Vec<usize>,
    out: usize,
}

/// The netlist flattened to primitive gates over numbered signal slots.
#[derive(Debug, Clone)]
struct Program {
    slots: usize,
    a: Vec<usize>,
    b: Vec<usize>,
    s: Vec<usize>,
    cout: usize,
    gates: Vec<Gate>,
}

type Located<T> = std::result::Result<T, (usize, String)>;

#[derive(Default)]
struct Builder {
    driven: Vec<bool>,
    gates: Vec<Gate>,
}

impl Builder {
    fn alloc(&mut self, width: usize, driven: bool) -> Vec<usize> {
        let start = self.driven.len();
        self.driven.resize(start + width, driven);
        (start..start + width).collect()
    }

    /// Inlines module `name`; `binds` maps its ports to caller slots and
    /// receives slots for its other signals.
    fn flatten(
        &mut self,
        net: &Netlist,
        name: &str,
        binds: &mut HashMap<String, Vec<usize>>,
    ) -> Located<()> {
        let m = &net.modules[name];
        let mut sigs: Vec<_> = m.widths.iter().collect();
        sigs.sort();
        for (sig, w) in sigs {
            if !binds.contains_key(sig) {
                let slots = self.alloc(*w, false);
                binds.insert(sig.clone(), slots);
            }
        }
        for inst in &m.instances {
            let line = inst.line;
            let slot = |p: &Pin| -> Located<usize> {
                binds
                    .get(&p.name)
                    .and_then(|v| v.get(p.bit.unwrap_or(0)).copied())
                    .ok_or_else(|| (line, format!("undeclared signal {}", p.name)))
            };
            let (out, ins) = inst
                .pins
                .split_first()
                .ok_or_else(|| (line, "instance without pins".to_string()))?;
            if let Some(op) = Op::from_cell(&inst.cell) {
                if matches!(op, Op::Not | Op::Buf) && ins.len() != 1 {
                    return Err((line, format!("{} takes one input", inst.cell)));
                }
                let ins = ins
                    .iter()
                    .map(|p| self.read(slot(p)?, p, line))
                    .collect::<Located<Vec<_>>>()?;
                let out_slot = slot(out)?;
                self.drive(out_slot, out, line)?;
                self.gates.push(Gate {
                    op,
                    ins,
                    out: out_slot,
                });
                continue;
            }
            let sub = &net.modules[&inst.cell];
            if sub.ports.len() != inst.pins.len() {
                return Err((
                    line,
                    format!("{} takes {} pins", inst.cell, sub.ports.len()),
                ));
            }
            let mut local = HashMap::new();
            let mut outs = Vec::new();
            for (port, pin) in sub.ports.iter().zip(&inst.pins) {
                let s = slot(pin)?;
                if sub.inputs.contains(port) {
                    self.read(s, pin, line)?;
                } else if sub.outputs.contains(port) {
                    if self.driven[s] {
                        return Err((line, format!("{} has more than one driver", pin.name)));
                    }
                    outs.push((port, s));
                }
                local.insert(port.clone(), vec![s]);
            }
            self.flatten(net, &inst.cell, &mut local)?;
            for (port, s) in outs {
                if !self.driven[s] {
                    return Err((line, format!("{} leaves {port} undriven", inst.cell)));
                }
            }
        }
        Ok(())
    }

    fn read(&self, slot: usize, pin: &Pin, line: usize) -> Located<usize> {
        if self.driven[slot] {
            Ok(slot)
        } else {
            Err((line, format!("{} read before it is driven", pin.name)))
        }
    }

    fn drive(&mut self, slot: usize, pin: &Pin, line: usize) -> Located<()> {
        if std::mem::replace(&mut self.driven[slot], true) {
            return Err((line, format!("{} has more than one driver", pin.name)));
        }
        Ok(())
    }
}
