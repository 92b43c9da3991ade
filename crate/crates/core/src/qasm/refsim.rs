//! Reference state-vector simulator for parsed OpenQASM 2.0.
//!
//! Independent of the engine: it only knows `U`, `CX` and gate expansion.
//! A handful of `qelib1` gates have direct matrices for speed; they are
//! tested against their library definitions.

use std::collections::HashMap;

use num_complex::Complex64 as C64;

use super::parse::{Arg, GateCall, QStmt, QasmProgram};

#[derive(Debug, Clone)]
pub struct RefState {
    pub amps: Vec<C64>,
    /// `(qreg name, first global qubit, width)` in declaration order.
    pub layout: Vec<(String, usize, u32)>,
    /// True if simulation stopped at a measurement.
    pub measured: bool,
}

impl RefState {
    /// Global qubit index of `reg[bit]`.
    pub fn qubit(&self, reg: &str, bit: u32) -> Option<usize> {
        self.layout
            .iter()
            .find(|(n, _, w)| n == reg && bit < *w)
            .map(|(_, off, _)| off + bit as usize)
    }

    pub fn num_qubits(&self) -> usize {
        self.layout.iter().map(|(_, _, w)| *w as usize).sum()
    }
}

type Mat = [[C64; 2]; 2];

fn u_matrix(theta: f64, phi: f64, lambda: f64) -> Mat {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    [
        [C64::new(c, 0.0), -C64::from_polar(s, lambda)],
        [C64::from_polar(s, phi), C64::from_polar(c, phi + lambda)],
    ]
}

struct Sim<'a> {
    prog: &'a QasmProgram,
    amps: Vec<C64>,
    native: bool,
}

impl Sim<'_> {
    fn apply1(&mut self, m: &Mat, q: usize) {
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a, b) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[i | bit] = m[1][0] * a + m[1][1] * b;
            }
        }
    }

    fn mcx(&mut self, ctrls: &[usize], t: usize) {
        let mask: usize = ctrls.iter().map(|c| 1usize << c).sum();
        let bit = 1usize << t;
        for i in 0..self.amps.len() {
            if i & bit == 0 && i & mask == mask {
                self.amps.swap(i, i | bit);
            }
        }
    }

    /// Applies `name` directly if it has a built-in matrix.
    fn native_gate(&mut self, name: &str, p: &[f64], q: &[usize]) -> bool {
        let h = std::f64::consts::FRAC_PI_2;
        match (name, self.native) {
            ("U", _) | ("u3", true) => self.apply1(&u_matrix(p[0], p[1], p[2]), q[0]),
            ("CX", _) | ("cx", true) => self.mcx(&q[..1], q[1]),
            ("u2", true) => self.apply1(&u_matrix(h, p[0], p[1]), q[0]),
            ("u1", true) => self.apply1(&u_matrix(0.0, 0.0, p[0]), q[0]),
            ("h", true) => self.apply1(&u_matrix(h, 0.0, 2.0 * h), q[0]),
            ("x", true) => self.mcx(&[], q[0]),
            ("z", true) => self.apply1(&u_matrix(0.0, 0.0, 2.0 * h), q[0]),
            ("ccx", true) => self.mcx(&q[..2], q[2]),
            _ => return false,
        }
        true
    }

    fn gate(&mut self, name: &str, p: &[f64], q: &[usize], depth: u32) -> Result<(), String> {
        if depth > 64 {
            return Err("gate definitions nest too deeply".into());
        }
        if self.native_gate(name, p, q) {
            return Ok(());
        }
        let def = self
            .prog
            .gates
            .get(name)
            .ok_or_else(|| format!("unknown gate `{name}`"))?;
        let body = def
            .body
            .as_ref()
            .ok_or_else(|| format!("opaque gate `{name}` cannot be simulated"))?;
        let env: HashMap<String, f64> = def.params.iter().cloned().zip(p.iter().copied()).collect();
        let qmap: HashMap<&str, usize> = def.args.iter().map(String::as_str).zip(q.iter().copied()).collect();
        for call in body {
            let ps = call
                .params
                .iter()
                .map(|e| e.eval(&env))
                .collect::<Result<Vec<_>, _>>()?;
            let qs: Vec<usize> = call
                .args
                .iter()
                .map(|a| match a {
                    Arg::Reg(n) | Arg::Bit(n, _) => qmap[n.as_str()],
                })
                .collect();
            self.gate(&call.name, &ps, &qs, depth + 1)?;
        }
        Ok(())
    }

    fn top_call(&mut self, call: &GateCall, layout: &HashMap<&str, (usize, u32)>) -> Result<(), String> {
        let ps = call
            .params
            .iter()
            .map(|e| e.eval(&HashMap::new()))
            .collect::<Result<Vec<_>, _>>()?;
        let reps = call
            .args
            .iter()
            .map(|a| match a {
                Arg::Reg(n) => layout[n.as_str()].1,
                Arg::Bit(..) => 1,
            })
            .max()
            .unwrap_or(1);
        for i in 0..reps {
            let qs: Vec<usize> = call
                .args
                .iter()
                .map(|a| match a {
                    Arg::Reg(n) => layout[n.as_str()].0 + i as usize,
                    Arg::Bit(n, b) => layout[n.as_str()].0 + *b as usize,
                })
                .collect();
            self.gate(&call.name, &ps, &qs, 0)?;
        }
        Ok(())
    }
}

/// Simulates `prog` from |0…0⟩ up to its first measurement.
pub fn simulate(prog: &QasmProgram, max_qubits: u32) -> Result<RefState, String> {
    simulate_with(prog, max_qubits, true)
}

/// As [`simulate`]; with `native = false` every library gate is expanded
/// down to `U` and `CX`.
pub fn simulate_with(prog: &QasmProgram, max_qubits: u32, native: bool) -> Result<RefState, String> {
    let mut layout = Vec::new();
    let mut off = 0usize;
    for (n, w) in &prog.qregs {
        layout.push((n.clone(), off, *w));
        off += *w as usize;
    }
    if off > max_qubits as usize {
        return Err(format!("{off} qubits exceed the simulator limit of {max_qubits}"));
    }
    let index: HashMap<&str, (usize, u32)> = layout.iter().map(|(n, o, w)| (n.as_str(), (*o, *w))).collect();
    let mut amps = vec![C64::new(0.0, 0.0); 1usize << off];
    amps[0] = C64::new(1.0, 0.0);
    let mut sim = Sim { prog, amps, native };
    let mut measured = false;
    for stmt in &prog.stmts {
        match stmt {
            QStmt::Gate(call) => sim.top_call(call, &index)?,
            QStmt::Barrier(_) => {}
            QStmt::Measure(..) => {
                measured = true;
                break;
            }
            QStmt::Reset(_) => return Err("reset is not supported by the reference simulator".into()),
            QStmt::If(..) => return Err("classically controlled gates are not supported".into()),
        }
    }
    Ok(RefState {
        amps: sim.amps,
        layout,
        measured,
    })
}
