use std::collections::HashSet;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::engine::{Control, Gate, RegId};
use crate::sema::CheckedProgram;
use crate::semantics::{
    execute, MeasureOutcome, PhaseTable, QuantumBackend, RuntimeError, RuntimeErrorKind,
};
use crate::types::BasisIndex;

use super::synth::{hadamard, Synth, SCRATCH};
use super::{cancel_involutions, sanitize, Circuit, Op, Qubit, SYNTHESIS_CAP};

/// Result of compiling a program.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub circuit: Circuit,
    /// Quantum variable registers and their qreg names, in allocation order.
    pub registers: Vec<(RegId, String)>,
    /// Name of the scratch qreg, if any scratch qubits were needed.
    pub scratch: Option<String>,
}

impl Compiled {
    pub fn to_qasm(&self) -> String {
        self.circuit.to_qasm()
    }
}

/// Compiles a checked program to a circuit.
pub fn compile(program: &CheckedProgram) -> Result<Compiled, RuntimeError> {
    let mut b = CircuitBuilder::default();
    execute(program, &mut b)?;
    Ok(b.finish())
}

enum Guard {
    /// The condition holds on every pattern.
    Always,
    /// The condition holds on no pattern; guarded operations are dropped.
    Never,
    /// Predicate computed into a scratch qubit by the recorded gates.
    Ancilla(Qubit, Vec<Op>),
}

/// [`QuantumBackend`] that records gates instead of simulating.
#[derive(Default)]
pub struct CircuitBuilder {
    synth: Synth,
    qregs: Vec<(String, u32)>,
    regs: Vec<(RegId, usize)>,
    cregs: Vec<(String, u32)>,
    guards: Vec<Guard>,
    measured: bool,
}

fn not_expressible(what: &str) -> RuntimeError {
    RuntimeError::new(
        RuntimeErrorKind::NotGateExpressible,
        format!("{what} is not expressible in OpenQASM 2.0; use `rhyme run` to simulate this program"),
    )
}

impl CircuitBuilder {
    fn qreg(&self, id: RegId) -> Result<(usize, u32), RuntimeError> {
        self.regs
            .iter()
            .find(|(r, _)| *r == id)
            .map(|&(_, i)| (i, self.qregs[i].1))
            .ok_or_else(|| RuntimeError::new(RuntimeErrorKind::Quantum, format!("unknown register {id:?}")))
    }

    fn qubits(&self, id: RegId) -> Result<Vec<Qubit>, RuntimeError> {
        let (reg, w) = self.qreg(id)?;
        Ok((0..w).map(|bit| Qubit { reg, bit }).collect())
    }

    /// Controls of the active guards, or `None` if a guard never holds.
    fn controls(&self, op: &str) -> Result<Option<Vec<Qubit>>, RuntimeError> {
        if self.measured {
            return Err(not_expressible(&format!(
                "{op} after a measurement (classical feedback)"
            )));
        }
        let mut out = Vec::new();
        for g in &self.guards {
            match g {
                Guard::Always => {}
                Guard::Never => return Ok(None),
                Guard::Ancilla(q, _) => out.push(*q),
            }
        }
        Ok(Some(out))
    }

    fn unique_name(&self, base: &str) -> String {
        let taken: HashSet<&str> = self
            .qregs
            .iter()
            .chain(&self.cregs)
            .map(|(n, _)| n.as_str())
            .collect();
        let base = sanitize(base);
        if !taken.contains(base.as_str()) {
            return base;
        }
        (1..)
            .map(|i| format!("{base}_{i}"))
            .find(|n| !taken.contains(n.as_str()))
            .expect("unbounded")
    }

    fn synthesis_cap(&self, width: u32, what: &str) -> Result<(), RuntimeError> {
        if width > SYNTHESIS_CAP {
            return Err(RuntimeError::new(
                RuntimeErrorKind::Synthesis,
                format!("{what} synthesis table too large: {width} qubits exceed the {SYNTHESIS_CAP}-qubit cap"),
            ));
        }
        Ok(())
    }

    pub fn finish(mut self) -> Compiled {
        let mut circuit = Circuit {
            qregs: self.qregs.clone(),
            cregs: std::mem::take(&mut self.cregs),
            ops: cancel_involutions(std::mem::take(&mut self.synth.ops)),
        };
        let scratch = if self.synth.scratch_size > 0 {
            let name = self.unique_name("anc");
            circuit.qregs.push((name.clone(), self.synth.scratch_size));
            let idx = circuit.qregs.len() - 1;
            let fix = |q: &mut Qubit| {
                if q.reg == SCRATCH {
                    q.reg = idx;
                }
            };
            for op in &mut circuit.ops {
                match op {
                    Op::H(q) | Op::X(q) | Op::Z(q) | Op::U1(_, q) | Op::U3(_, _, _, q) => fix(q),
                    Op::Cx(a, b) => {
                        fix(a);
                        fix(b)
                    }
                    Op::Ccx(a, b, t) => {
                        fix(a);
                        fix(b);
                        fix(t)
                    }
                    Op::Measure(q, _, _) => fix(q),
                    Op::Barrier => {}
                }
            }
            Some(name)
        } else {
            None
        };
        Compiled {
            circuit,
            registers: self
                .regs
                .iter()
                .map(|&(r, i)| (r, self.qregs[i].0.clone()))
                .collect(),
            scratch,
        }
    }
}

impl QuantumBackend for CircuitBuilder {
    fn allocate(&mut self, id: RegId, width: u32, name: &str) -> Result<(), RuntimeError> {
        let n = self.unique_name(name);
        self.qregs.push((n, width));
        self.regs.push((id, self.qregs.len() - 1));
        Ok(())
    }

    fn release_if_clean(&mut self, _id: RegId) -> Result<bool, RuntimeError> {
        Ok(false)
    }

    fn prepare(&mut self, id: RegId, values: &[BasisIndex]) -> Result<(), RuntimeError> {
        let Some(ctrls) = self.controls("state preparation")? else {
            return Ok(());
        };
        let qs = self.qubits(id)?;
        let mut vals: Vec<u64> = values.iter().map(|v| v.0).collect();
        vals.sort_unstable();
        vals.dedup();
        if vals.len() != values.len() {
            return Err(RuntimeError::new(RuntimeErrorKind::Quantum, "duplicate value in superposition"));
        }
        self.synth.prepare(&qs, &vals, &ctrls);
        Ok(())
    }

    fn prepare_all(&mut self, id: RegId) -> Result<(), RuntimeError> {
        let Some(ctrls) = self.controls("state preparation")? else {
            return Ok(());
        };
        for q in self.qubits(id)? {
            self.synth.mcu(&hadamard(), &ctrls, q);
        }
        Ok(())
    }

    fn phase(&mut self, id: RegId, table: &PhaseTable) -> Result<(), RuntimeError> {
        let Some(ctrls) = self.controls("addPhase")? else {
            return Ok(());
        };
        let qs = self.qubits(id)?;
        self.synthesis_cap(qs.len() as u32, "diagonal")?;
        let mut all = ctrls.clone();
        all.extend(&qs);
        let ones = (1u64 << ctrls.len()) - 1;
        for &(p, k) in &table.entries {
            let lambda = 2.0 * PI * k as f64 / table.modulus as f64;
            let pattern = ones | p << ctrls.len();
            self.synth
                .matching(&all, pattern, |s| s.mcphase(lambda, &all));
        }
        Ok(())
    }

    fn bipartite(
        &mut self,
        id: RegId,
        pairs: &[(u64, u64)],
        matrix: [[Complex64; 2]; 2],
    ) -> Result<(), RuntimeError> {
        let Some(ctrls) = self.controls("applyBipartiteInterference")? else {
            return Ok(());
        };
        let qs = self.qubits(id)?;
        let w = qs.len() as u32;
        self.synthesis_cap(w, "interference")?;
        // a pairing across one bit in a fixed direction over the whole
        // register is a single controlled 2x2 on that bit
        if let Some(&(x0, y0)) = pairs.first() {
            let d = x0 ^ y0;
            if d.is_power_of_two() && pairs.len() as u64 == 1u64 << (w - 1) {
                let uniform = pairs.iter().all(|&(x, y)| x ^ y == d && x & d == x0 & d);
                if uniform {
                    let j = d.trailing_zeros() as usize;
                    let u = if x0 & d == 0 {
                        matrix
                    } else {
                        [[matrix[1][1], matrix[1][0]], [matrix[0][1], matrix[0][0]]]
                    };
                    self.synth.mcu(&u, &ctrls, qs[j]);
                    return Ok(());
                }
            }
        }
        for &(x, y) in pairs {
            self.synth.two_level(&qs, x, y, &matrix, &ctrls);
        }
        Ok(())
    }

    fn add_constant(&mut self, id: RegId, delta: i64) -> Result<(), RuntimeError> {
        let Some(ctrls) = self.controls("increment")? else {
            return Ok(());
        };
        let qs = self.qubits(id)?;
        let w = qs.len();
        let steps = delta.unsigned_abs() % (1u64 << w.min(63));
        for _ in 0..steps {
            let order: Vec<usize> = if delta > 0 {
                (0..w).rev().collect()
            } else {
                (0..w).collect()
            };
            for i in order {
                let mut c = ctrls.clone();
                c.extend(&qs[..i]);
                self.synth.mcx(&c, qs[i]);
            }
        }
        Ok(())
    }

    fn invert_about_mean(&mut self, id: RegId) -> Result<(), RuntimeError> {
        let Some(ctrls) = self.controls("invertAboutMean")? else {
            return Ok(());
        };
        let qs = self.qubits(id)?;
        // H X (phase -1 on |1..1>) X H is I - 2|s><s|; the sign is fixed
        // by a -1 on the controls, which is only global when uncontrolled
        for &q in &qs {
            self.synth.ops.push(Op::H(q));
            self.synth.x(q);
        }
        let mut all = ctrls.clone();
        all.extend(&qs);
        self.synth.mcphase(PI, &all);
        for &q in &qs {
            self.synth.x(q);
            self.synth.ops.push(Op::H(q));
        }
        self.synth.mcphase(PI, &ctrls);
        Ok(())
    }

    fn gate(&mut self, gate: Gate, qubits: &[(RegId, u32)]) -> Result<(), RuntimeError> {
        let Some(mut ctrls) = self.controls("gate")? else {
            return Ok(());
        };
        if qubits.len() != gate.arity() {
            return Err(RuntimeError::new(RuntimeErrorKind::Quantum, "wrong number of gate operands"));
        }
        let mut qs = Vec::new();
        for &(r, b) in qubits {
            let (reg, w) = self.qreg(r)?;
            if b >= w {
                return Err(RuntimeError::new(RuntimeErrorKind::Quantum, format!("qubit {b} out of range")));
            }
            let q = Qubit { reg, bit: b };
            if qs.contains(&q) {
                return Err(RuntimeError::new(RuntimeErrorKind::Quantum, "gate operands must be distinct qubits"));
            }
            qs.push(q);
        }
        let t = *qs.last().expect("arity >= 1");
        ctrls.extend(&qs[..qs.len() - 1]);
        match gate {
            Gate::H => self.synth.mcu(&hadamard(), &ctrls, t),
            Gate::Z => {
                ctrls.push(t);
                self.synth.mcphase(PI, &ctrls);
            }
            Gate::X | Gate::Cnot | Gate::Ccnot => self.synth.mcx(&ctrls, t),
        }
        Ok(())
    }

    fn push_control(&mut self, control: Control) -> Result<(), RuntimeError> {
        if self.measured {
            return Err(not_expressible("a quantum condition after a measurement"));
        }
        let mut qs = Vec::new();
        for r in &control.regs {
            qs.extend(self.qubits(*r)?);
        }
        self.synthesis_cap(qs.len() as u32, "predicate")?;
        let trues = control.table.iter().filter(|b| **b).count();
        let guard = if trues == control.table.len() {
            Guard::Always
        } else if trues == 0 {
            Guard::Never
        } else {
            let anc = self.synth.alloc();
            let start = self.synth.ops.len();
            // mark the smaller side and flip if that was the false side
            let want = trues * 2 <= control.table.len();
            for (p, &v) in control.table.iter().enumerate() {
                if v == want {
                    let qs2 = qs.clone();
                    self.synth
                        .matching(&qs, p as u64, |s| s.mcx(&qs2, anc));
                }
            }
            if !want {
                self.synth.x(anc);
            }
            let recorded = self.synth.ops[start..].to_vec();
            Guard::Ancilla(anc, recorded)
        };
        self.guards.push(guard);
        Ok(())
    }

    fn pop_control(&mut self) {
        if let Some(Guard::Ancilla(anc, ops)) = self.guards.pop() {
            self.synth.ops.extend(ops.into_iter().rev());
            self.synth.release(anc);
        }
    }

    fn measure(&mut self, id: RegId, label: &str) -> Result<MeasureOutcome, RuntimeError> {
        if !self.guards.is_empty() {
            return Err(not_expressible("measurement inside a quantum condition"));
        }
        let qs = self.qubits(id)?;
        let name = self.unique_name(label);
        self.cregs.push((name, qs.len() as u32));
        let c = self.cregs.len() - 1;
        self.measured = true;
        for (i, q) in qs.into_iter().enumerate() {
            self.synth.ops.push(Op::Measure(q, c, i as u32));
        }
        Ok(MeasureOutcome::Deferred)
    }

    fn definite_pattern(&mut self, _id: RegId) -> Result<Option<BasisIndex>, RuntimeError> {
        Ok(None)
    }

    fn table_cap(&self) -> u32 {
        SYNTHESIS_CAP
    }

    fn is_compiler(&self) -> bool {
        true
    }
}
