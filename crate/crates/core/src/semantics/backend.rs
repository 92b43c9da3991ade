use std::sync::Arc;

use num_complex::Complex64;

use crate::engine::{Control, Engine, Gate, MeasurementRng, PrefixSnapshot, RegId};
use crate::types::BasisIndex;

use super::tables::PhaseTable;
use super::RuntimeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureOutcome {
    Known(BasisIndex),
    /// The result only exists at circuit run time (compile mode).
    Deferred,
}

/// Quantum operations as issued by the interpreter.
///
/// Qubit operands are `(register, bit)`; gate operands list controls first
/// and the target last.
pub trait QuantumBackend {
    fn allocate(&mut self, id: RegId, width: u32, name: &str) -> Result<(), RuntimeError>;
    /// Drops a scoped register if it is back in `|0...0>`.
    fn release_if_clean(&mut self, id: RegId) -> Result<bool, RuntimeError>;
    fn prepare(&mut self, id: RegId, values: &[BasisIndex]) -> Result<(), RuntimeError>;
    fn prepare_all(&mut self, id: RegId) -> Result<(), RuntimeError>;
    fn phase(&mut self, id: RegId, table: &PhaseTable) -> Result<(), RuntimeError>;
    fn bipartite(
        &mut self,
        id: RegId,
        pairs: &[(u64, u64)],
        matrix: [[Complex64; 2]; 2],
    ) -> Result<(), RuntimeError>;
    fn add_constant(&mut self, id: RegId, delta: i64) -> Result<(), RuntimeError>;
    fn invert_about_mean(&mut self, id: RegId) -> Result<(), RuntimeError>;
    fn gate(&mut self, gate: Gate, qubits: &[(RegId, u32)]) -> Result<(), RuntimeError>;
    fn push_control(&mut self, control: Control) -> Result<(), RuntimeError>;
    fn pop_control(&mut self);
    fn measure(&mut self, id: RegId, label: &str) -> Result<MeasureOutcome, RuntimeError>;
    /// The register's pattern if it is certainly in one basis state.
    fn definite_pattern(&mut self, id: RegId) -> Result<Option<BasisIndex>, RuntimeError>;
    /// Largest register width whose truth tables may be enumerated.
    fn table_cap(&self) -> u32;
    /// True while amplitude work is being skipped (prefix replay).
    fn skipping(&self) -> bool {
        false
    }
    /// True for backends that emit circuits instead of simulating.
    fn is_compiler(&self) -> bool {
        false
    }
}

/// `exp(2 pi i k / n)`, exact at multiples of a quarter turn.
pub fn phase_factor(k: i64, n: i64) -> Complex64 {
    let k = k.rem_euclid(n);
    if (4 * k) % n == 0 {
        return match 4 * k / n {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64)
}

/// Statevector execution on an [`Engine`].
pub struct SimBackend {
    pub engine: Engine,
    rng: MeasurementRng,
}

impl std::fmt::Debug for SimBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimBackend")
            .field("qubits", &self.engine.layout().total_bits())
            .finish_non_exhaustive()
    }
}

impl SimBackend {
    pub fn new(engine: Engine, seed: u64) -> Self {
        SimBackend {
            engine,
            rng: MeasurementRng::from_seed(seed),
        }
    }

    pub fn recording(cap: u32, seed: u64) -> Self {
        let mut engine = Engine::new(cap);
        engine.record_prefix();
        Self::new(engine, seed)
    }

    pub fn replaying(cap: u32, seed: u64, snapshot: Arc<PrefixSnapshot>) -> Self {
        let mut engine = Engine::new(cap);
        engine.replay_prefix(snapshot);
        Self::new(engine, seed)
    }

    fn qubits(&self, qs: &[(RegId, u32)]) -> Result<Vec<usize>, RuntimeError> {
        qs.iter()
            .map(|(r, b)| self.engine.qubit(*r, *b).map_err(RuntimeError::from))
            .collect()
    }
}

impl QuantumBackend for SimBackend {
    fn allocate(&mut self, id: RegId, width: u32, _name: &str) -> Result<(), RuntimeError> {
        Ok(self.engine.allocate(id, width)?)
    }

    fn release_if_clean(&mut self, id: RegId) -> Result<bool, RuntimeError> {
        Ok(self.engine.release_if_clean(id)?)
    }

    fn prepare(&mut self, id: RegId, values: &[BasisIndex]) -> Result<(), RuntimeError> {
        Ok(self.engine.prepare_superposition(id, values)?)
    }

    fn prepare_all(&mut self, id: RegId) -> Result<(), RuntimeError> {
        Ok(self.engine.prepare_all(id)?)
    }

    fn phase(&mut self, id: RegId, table: &PhaseTable) -> Result<(), RuntimeError> {
        let factors: Vec<(u64, Complex64)> = table
            .entries
            .iter()
            .map(|&(p, k)| (p, phase_factor(k, table.modulus)))
            .collect();
        Ok(self.engine.apply_diagonal(id, &factors)?)
    }

    fn bipartite(
        &mut self,
        id: RegId,
        pairs: &[(u64, u64)],
        matrix: [[Complex64; 2]; 2],
    ) -> Result<(), RuntimeError> {
        Ok(self.engine.apply_pairs(id, pairs, matrix)?)
    }

    fn add_constant(&mut self, id: RegId, delta: i64) -> Result<(), RuntimeError> {
        Ok(self.engine.add_modular(id, delta)?)
    }

    fn invert_about_mean(&mut self, id: RegId) -> Result<(), RuntimeError> {
        Ok(self.engine.invert_about_mean(id)?)
    }

    fn gate(&mut self, gate: Gate, qubits: &[(RegId, u32)]) -> Result<(), RuntimeError> {
        let qs = self.qubits(qubits)?;
        Ok(self.engine.apply_gate(gate, &qs)?)
    }

    fn push_control(&mut self, control: Control) -> Result<(), RuntimeError> {
        Ok(self.engine.push_control(control)?)
    }

    fn pop_control(&mut self) {
        self.engine.pop_control();
    }

    fn measure(&mut self, id: RegId, _label: &str) -> Result<MeasureOutcome, RuntimeError> {
        Ok(MeasureOutcome::Known(self.engine.measure(id, &mut self.rng)?))
    }

    fn definite_pattern(&mut self, id: RegId) -> Result<Option<BasisIndex>, RuntimeError> {
        Ok(self.engine.definite_pattern(id)?)
    }

    fn table_cap(&self) -> u32 {
        self.engine.cap()
    }

    fn skipping(&self) -> bool {
        self.engine.skipping()
    }
}
