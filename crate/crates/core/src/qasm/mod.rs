//! OpenQASM 2.0 compilation.
//!
//! The interpreter drives a [`CircuitBuilder`] instead of the simulator;
//! every quantum operation is lowered to gates from `qelib1.inc`. Classical
//! functions reach the circuit only through truth tables enumerated over
//! registers of at most [`SYNTHESIS_CAP`] qubits.

mod builder;
pub mod parse;
pub mod refsim;
mod synth;

use std::f64::consts::PI;
use std::fmt::Write as _;

pub use builder::{compile, CircuitBuilder, Compiled};

/// Largest register width whose truth tables are synthesized.
pub const SYNTHESIS_CAP: u32 = 16;

/// A qubit as `(qreg index, bit)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Qubit {
    pub reg: usize,
    pub bit: u32,
}

/// One gate application on absolute qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    H(Qubit),
    X(Qubit),
    Z(Qubit),
    Cx(Qubit, Qubit),
    Ccx(Qubit, Qubit, Qubit),
    U1(f64, Qubit),
    U3(f64, f64, f64, Qubit),
    Barrier,
    /// `measure q -> creg[bit]`.
    Measure(Qubit, usize, u32),
}

impl Op {
    pub fn qubits(&self) -> Vec<Qubit> {
        match *self {
            Op::H(q) | Op::X(q) | Op::Z(q) | Op::U1(_, q) | Op::U3(_, _, _, q) => vec![q],
            Op::Cx(a, b) => vec![a, b],
            Op::Ccx(a, b, c) => vec![a, b, c],
            Op::Measure(q, _, _) => vec![q],
            Op::Barrier => Vec::new(),
        }
    }
}

/// A gate list together with its register declarations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Circuit {
    pub qregs: Vec<(String, u32)>,
    pub cregs: Vec<(String, u32)>,
    pub ops: Vec<Op>,
}

impl Circuit {
    pub fn num_qubits(&self) -> u32 {
        self.qregs.iter().map(|(_, w)| w).sum()
    }

    /// Renders the circuit as OpenQASM 2.0 source.
    pub fn to_qasm(&self) -> String {
        let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
        for (name, w) in &self.qregs {
            let _ = writeln!(out, "qreg {name}[{w}];");
        }
        for (name, w) in &self.cregs {
            let _ = writeln!(out, "creg {name}[{w}];");
        }
        let q = |q: Qubit| format!("{}[{}]", self.qregs[q.reg].0, q.bit);
        for op in &self.ops {
            let _ = match *op {
                Op::H(a) => writeln!(out, "h {};", q(a)),
                Op::X(a) => writeln!(out, "x {};", q(a)),
                Op::Z(a) => writeln!(out, "z {};", q(a)),
                Op::Cx(a, b) => writeln!(out, "cx {},{};", q(a), q(b)),
                Op::Ccx(a, b, c) => writeln!(out, "ccx {},{},{};", q(a), q(b), q(c)),
                Op::U1(l, a) => writeln!(out, "u1({}) {};", angle(l), q(a)),
                Op::U3(t, p, l, a) => {
                    writeln!(out, "u3({},{},{}) {};", angle(t), angle(p), angle(l), q(a))
                }
                Op::Barrier => {
                    let all: Vec<String> = self.qregs.iter().map(|(n, _)| n.clone()).collect();
                    writeln!(out, "barrier {};", all.join(","))
                }
                Op::Measure(a, c, bit) => {
                    writeln!(out, "measure {} -> {}[{bit}];", q(a), self.cregs[c].0)
                }
            };
        }
        out
    }
}

/// Removes adjacent pairs of identical self-inverse gates.
pub(crate) fn cancel_involutions(ops: Vec<Op>) -> Vec<Op> {
    let mut out: Vec<Op> = Vec::with_capacity(ops.len());
    for op in ops {
        let involution = matches!(op, Op::H(_) | Op::X(_) | Op::Z(_) | Op::Cx(..) | Op::Ccx(..));
        if involution && out.last() == Some(&op) {
            out.pop();
        } else {
            out.push(op);
        }
    }
    out
}

/// Renders an angle, as a rational multiple of `pi` when it is one.
pub fn angle(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let r = x / PI;
    for den in [1i64, 2, 3, 4, 6, 8, 12, 16, 32, 64] {
        let num = r * den as f64;
        let n = num.round();
        if (num - n).abs() < 1e-12 && n != 0.0 {
            let n = n as i64;
            let head = match n {
                1 => "pi".to_string(),
                -1 => "-pi".to_string(),
                _ => format!("{n}*pi"),
            };
            return if den == 1 { head } else { format!("{head}/{den}") };
        }
    }
    format!("{x:?}")
}

/// Turns a variable name into a QASM identifier (lowercase first letter).
pub(crate) fn sanitize(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    match s.chars().next() {
        Some(c) if c.is_ascii_lowercase() => {}
        Some(c) if c.is_ascii_uppercase() => {
            s.replace_range(0..1, &c.to_ascii_lowercase().to_string());
        }
        _ => s.insert(0, 'r'),
    }
    if parse::is_reserved(&s) {
        s.push('_');
    }
    s
}
