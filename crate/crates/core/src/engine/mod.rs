//! Dense statevector over every live quantum register.
//!
//! Registers are bit slices of one global basis index. A register allocated
//! later occupies higher bits, so allocation is a tensor product with
//! `|0...0>` and never moves existing amplitudes.
//!
//! Operations can be restricted by a stack of [`Control`]s: a branch (full
//! basis index) is acted on only if every control predicate holds for it.
//! This is how quantum-conditioned blocks act on a superposition.

mod layout;
pub mod rng;

use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

pub use layout::{RegId, RegisterEntry, RegisterLayout};
pub use rng::{shot_seed, MeasurementRng};

use crate::types::BasisIndex;

/// Default simulation capacity in qubits.
pub const DEFAULT_CAP: u32 = 24;

const NORM_TOLERANCE: f64 = 1e-9;
const UNITARY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("simulation capacity exceeded; use compile backend or reduce widths ({requested} qubits requested, cap is {cap})")]
    CapacityExceeded { requested: u32, cap: u32 },
    #[error("unknown register {0:?}")]
    UnknownRegister(RegId),
    #[error("register {0:?} is already allocated")]
    DuplicateRegister(RegId),
    #[error("initializer applied to non-fresh register")]
    NonFresh,
    #[error("superposition needs at least one value")]
    EmptySuperposition,
    #[error("superposition value {0} appears twice")]
    DuplicateValue(u64),
    #[error("pattern {pattern} does not fit a {width}-qubit register")]
    PatternOutOfRange { pattern: u64, width: u32 },
    #[error("matrix is not unitary (max deviation from identity {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("matrix dimension {got} does not match register dimension {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("invalid qubit operands: {0}")]
    BadQubits(String),
    #[error("degenerate state (norm {norm:.3e}); internal invariant failure")]
    Degenerate { norm: f64 },
    #[error("state norm drifted to {norm} after {op}; internal invariant failure")]
    Normalization { norm: f64, op: &'static str },
    #[error("operation acts on a register that also controls it")]
    ControlOverlap,
    #[error("registers cannot be released inside a conditioned block")]
    ReleaseUnderControl,
    #[error("replayed execution diverged from the recorded prefix")]
    ReplayDiverged,
    #[error("amplitude vector has length {got}, expected {expected}")]
    BadStateLength { got: usize, expected: usize },
}

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn new(dim: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), dim * dim, "matrix data must be dim*dim");
        DenseMatrix { dim, data }
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        DenseMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    /// Largest entry of `|U^dagger U - I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    s += self.get(k, i).conj() * self.get(k, j);
                }
                if i == j {
                    s -= 1.0;
                }
                worst = worst.max(s.norm());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    H,
    X,
    Z,
    /// operands: control, target
    Cnot,
    /// operands: control, control, target
    Ccnot,
}

impl Gate {
    pub fn arity(self) -> usize {
        match self {
            Gate::H | Gate::X | Gate::Z => 1,
            Gate::Cnot => 2,
            Gate::Ccnot => 3,
        }
    }
}

/// Predicate over the joint pattern of some registers. The first register
/// supplies the low bits of the table index.
#[derive(Debug, Clone)]
pub struct Control {
    pub regs: Vec<RegId>,
    pub table: Arc<Vec<bool>>,
}

#[derive(Debug, Clone)]
struct ResolvedControl {
    regs: Vec<RegId>,
    slices: Vec<(u32, u32)>,
    table: Arc<Vec<bool>>,
}

impl ResolvedControl {
    fn holds(&self, idx: usize) -> bool {
        let mut pattern = 0usize;
        let mut shift = 0;
        for &(offset, width) in &self.slices {
            pattern |= ((idx >> offset) & ((1usize << width) - 1)) << shift;
            shift += width;
        }
        self.table[pattern]
    }
}

/// Amplitudes and layout captured at the first measurement of an execution.
#[derive(Debug, Clone)]
pub struct PrefixSnapshot {
    layout: RegisterLayout,
    amps: Vec<Complex64>,
    reads: Vec<ReadRecord>,
}

impl PrefixSnapshot {
    /// Register layout at the first measurement.
    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    /// State immediately before the first measurement.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ReadRecord {
    Released(bool),
    Definite(Option<u64>),
}

#[derive(Debug, Clone)]
enum PrefixMode {
    Off,
    Record(Vec<ReadRecord>),
    Replay {
        snapshot: Arc<PrefixSnapshot>,
        cursor: usize,
    },
}

/// Position of a register inside the global index.
#[derive(Debug, Clone, Copy)]
struct Slice {
    offset: u32,
    width: u32,
    total: u32,
}

impl Slice {
    fn low_mask(&self) -> usize {
        (1usize << self.offset) - 1
    }

    fn pattern(&self, idx: usize) -> usize {
        (idx >> self.offset) & ((1usize << self.width) - 1)
    }

    fn rest(&self, idx: usize) -> usize {
        (idx & self.low_mask()) | ((idx >> (self.offset + self.width)) << self.offset)
    }

    fn insert(&self, rest: usize, pattern: usize) -> usize {
        (rest & self.low_mask())
            | (pattern << self.offset)
            | ((rest >> self.offset) << (self.offset + self.width))
    }

    fn rest_count(&self) -> usize {
        1usize << (self.total - self.width)
    }
}

#[derive(Debug, Clone)]
pub struct Engine {
    layout: RegisterLayout,
    amps: Vec<Complex64>,
    cap: u32,
    controls: Vec<ResolvedControl>,
    check_norm: bool,
    prefix: PrefixMode,
    recorded: Option<Arc<PrefixSnapshot>>,
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new(DEFAULT_CAP)
    }
}

impl Engine {
    pub fn new(cap: u32) -> Self {
        Engine {
            layout: RegisterLayout::default(),
            amps: vec![Complex64::new(1.0, 0.0)],
            cap,
            controls: Vec::new(),
            check_norm: cfg!(debug_assertions),
            prefix: PrefixMode::Off,
            recorded: None,
        }
    }

    /// Verifies normalization after every operation when enabled.
    pub fn set_norm_check(&mut self, on: bool) {
        self.check_norm = on;
    }

    /// Records a snapshot at the first measurement (see [`recorded_prefix`](Self::recorded_prefix)).
    pub fn record_prefix(&mut self) {
        self.prefix = PrefixMode::Record(Vec::new());
    }

    /// Skips all amplitude work until the first measurement, then resumes
    /// from `snapshot`. The caller must drive the same deterministic
    /// operation sequence that produced the snapshot.
    pub fn replay_prefix(&mut self, snapshot: Arc<PrefixSnapshot>) {
        self.amps = Vec::new();
        self.prefix = PrefixMode::Replay {
            snapshot,
            cursor: 0,
        };
    }

    pub fn recorded_prefix(&self) -> Option<Arc<PrefixSnapshot>> {
        self.recorded.clone()
    }

    /// True while replaying a prefix: amplitude-changing calls are no-ops.
    pub fn skipping(&self) -> bool {
        matches!(self.prefix, PrefixMode::Replay { .. })
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Replaces the whole state (testing and differential checks).
    pub fn set_amplitudes(&mut self, amps: Vec<Complex64>) -> Result<(), EngineError> {
        let expected = 1usize << self.layout.total_bits();
        if amps.len() != expected {
            return Err(EngineError::BadStateLength {
                got: amps.len(),
                expected,
            });
        }
        self.amps = amps;
        self.verify("set_amplitudes")
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    fn verify(&self, op: &'static str) -> Result<(), EngineError> {
        if !self.check_norm || self.skipping() {
            return Ok(());
        }
        let norm = self.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(EngineError::Normalization { norm, op });
        }
        Ok(())
    }

    fn slice(&self, id: RegId) -> Result<Slice, EngineError> {
        let e = self
            .layout
            .get(id)
            .ok_or(EngineError::UnknownRegister(id))?;
        Ok(Slice {
            offset: e.offset,
            width: e.width,
            total: self.layout.total_bits(),
        })
    }

    /// Absolute qubit index of bit `bit` of register `id`.
    pub fn qubit(&self, id: RegId, bit: u32) -> Result<usize, EngineError> {
        let e = self
            .layout
            .get(id)
            .ok_or(EngineError::UnknownRegister(id))?;
        if bit >= e.width {
            return Err(EngineError::BadQubits(format!(
                "bit {bit} of a {}-qubit register",
                e.width
            )));
        }
        Ok((e.offset + bit) as usize)
    }

    fn check_not_controlling(&self, id: RegId) -> Result<(), EngineError> {
        if self.controls.iter().any(|c| c.regs.contains(&id)) {
            return Err(EngineError::ControlOverlap);
        }
        Ok(())
    }

    fn controlled(&self, idx: usize) -> bool {
        self.controls.iter().all(|c| c.holds(idx))
    }

    pub fn allocate(&mut self, id: RegId, width: u32) -> Result<(), EngineError> {
        if self.layout.get(id).is_some() {
            return Err(EngineError::DuplicateRegister(id));
        }
        let requested = self.layout.total_bits() + width;
        if requested > self.cap {
            return Err(EngineError::CapacityExceeded {
                requested,
                cap: self.cap,
            });
        }
        self.layout.push(id, width);
        if !self.skipping() {
            self.amps
                .resize(1usize << requested, Complex64::new(0.0, 0.0));
        }
        self.verify("allocate")
    }

    fn next_read(&mut self) -> Result<ReadRecord, EngineError> {
        match &mut self.prefix {
            PrefixMode::Replay { snapshot, cursor } => {
                let r = snapshot
                    .reads
                    .get(*cursor)
                    .copied()
                    .ok_or(EngineError::ReplayDiverged)?;
                *cursor += 1;
                Ok(r)
            }
            _ => unreachable!("only called while replaying"),
        }
    }

    fn log_read(&mut self, r: ReadRecord) {
        if let PrefixMode::Record(reads) = &mut self.prefix {
            reads.push(r);
        }
    }

    /// Removes a register if it is (numerically) back in `|0...0>`.
    /// Returns whether it was released.
    pub fn release_if_clean(&mut self, id: RegId) -> Result<bool, EngineError> {
        if !self.controls.is_empty() {
            return Err(EngineError::ReleaseUnderControl);
        }
        let s = self.slice(id)?;
        let clean = if self.skipping() {
            match self.next_read()? {
                ReadRecord::Released(b) => b,
                _ => return Err(EngineError::ReplayDiverged),
            }
        } else {
            let dirty: f64 = self
                .amps
                .iter()
                .enumerate()
                .filter(|(i, _)| s.pattern(*i) != 0)
                .map(|(_, a)| a.norm_sqr())
                .sum();
            dirty < 1e-18
        };
        self.log_read(ReadRecord::Released(clean));
        if !clean {
            return Ok(false);
        }
        if !self.skipping() {
            let mut kept = vec![Complex64::new(0.0, 0.0); s.rest_count()];
            for (rest, slot) in kept.iter_mut().enumerate() {
                *slot = self.amps[s.insert(rest, 0)];
            }
            let norm = kept.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
            kept.iter_mut().for_each(|a| *a /= norm);
            self.amps = kept;
        }
        self.layout.remove(id);
        self.verify("release")?;
        Ok(true)
    }

    fn check_fresh(&self, s: &Slice) -> Result<(), EngineError> {
        let dirty: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| s.pattern(*i) != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        if dirty > 1e-12 {
            return Err(EngineError::NonFresh);
        }
        Ok(())
    }

    /// Equal real superposition `sum_i |v_i> / sqrt(k)` on a fresh register.
    pub fn prepare_superposition(
        &mut self,
        id: RegId,
        values: &[BasisIndex],
    ) -> Result<(), EngineError> {
        let s = self.slice(id)?;
        if values.is_empty() {
            return Err(EngineError::EmptySuperposition);
        }
        let mut seen = std::collections::HashSet::new();
        for v in values {
            if v.0 >> s.width != 0 {
                return Err(EngineError::PatternOutOfRange {
                    pattern: v.0,
                    width: s.width,
                });
            }
            if !seen.insert(v.0) {
                return Err(EngineError::DuplicateValue(v.0));
            }
        }
        if self.skipping() {
            return Ok(());
        }
        self.check_not_controlling(id)?;
        self.check_fresh(&s)?;
        let scale = 1.0 / (values.len() as f64).sqrt();
        for rest in 0..s.rest_count() {
            let base = s.insert(rest, 0);
            let a = self.amps[base];
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            self.amps[base] = Complex64::new(0.0, 0.0);
            for v in values {
                self.amps[s.insert(rest, v.0 as usize)] = a * scale;
            }
        }
        self.verify("prepare_superposition")
    }

    /// Uniform superposition over every pattern of a fresh register.
    pub fn prepare_all(&mut self, id: RegId) -> Result<(), EngineError> {
        let s = self.slice(id)?;
        if self.skipping() {
            return Ok(());
        }
        self.check_not_controlling(id)?;
        self.check_fresh(&s)?;
        let d = 1usize << s.width;
        let scale = 1.0 / (d as f64).sqrt();
        for rest in 0..s.rest_count() {
            let base = s.insert(rest, 0);
            let a = self.amps[base];
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for p in 0..d {
                self.amps[s.insert(rest, p)] = a * scale;
            }
        }
        self.verify("prepare_all")
    }

    /// Born probabilities of each pattern of register `id`.
    pub fn marginal(&self, id: RegId) -> Result<Vec<f64>, EngineError> {
        let s = self.slice(id)?;
        let mut probs = vec![0.0; 1usize << s.width];
        for (i, a) in self.amps.iter().enumerate() {
            probs[s.pattern(i)] += a.norm_sqr();
        }
        Ok(probs)
    }

    fn take_snapshot_or_resume(&mut self) -> Result<(), EngineError> {
        match std::mem::replace(&mut self.prefix, PrefixMode::Off) {
            PrefixMode::Off => {}
            PrefixMode::Record(reads) => {
                self.recorded = Some(Arc::new(PrefixSnapshot {
                    layout: self.layout.clone(),
                    amps: self.amps.clone(),
                    reads,
                }));
            }
            PrefixMode::Replay { snapshot, cursor } => {
                if snapshot.layout != self.layout || cursor != snapshot.reads.len() {
                    return Err(EngineError::ReplayDiverged);
                }
                self.amps = snapshot.amps.clone();
            }
        }
        Ok(())
    }

    /// Samples a pattern of register `id` by the Born rule and collapses the
    /// state onto it.
    pub fn measure(
        &mut self,
        id: RegId,
        rng: &mut MeasurementRng,
    ) -> Result<BasisIndex, EngineError> {
        self.take_snapshot_or_resume()?;
        let s = self.slice(id)?;
        let probs = self.marginal(id)?;
        let total: f64 = probs.iter().sum();
        if total.is_nan() || total <= 1e-12 {
            return Err(EngineError::Degenerate { norm: total });
        }
        let r = rng.uniform() * total;
        let mut acc = 0.0;
        let mut outcome = None;
        for (p, &prob) in probs.iter().enumerate() {
            if prob == 0.0 {
                continue;
            }
            acc += prob;
            outcome = Some(p);
            if r < acc {
                break;
            }
        }
        let outcome = outcome.expect("total > 0 implies a nonzero pattern");
        let scale = 1.0 / probs[outcome].sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if s.pattern(i) == outcome {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        self.verify("measure")?;
        Ok(BasisIndex(outcome as u64))
    }

    /// The pattern of `id` if the register is (numerically) in a basis state.
    pub fn definite_pattern(&mut self, id: RegId) -> Result<Option<BasisIndex>, EngineError> {
        let result = if self.skipping() {
            match self.next_read()? {
                ReadRecord::Definite(p) => p,
                _ => return Err(EngineError::ReplayDiverged),
            }
        } else {
            let probs = self.marginal(id)?;
            probs
                .iter()
                .position(|&p| p > 1.0 - 1e-9)
                .map(|p| p as u64)
        };
        self.log_read(ReadRecord::Definite(result));
        Ok(result.map(BasisIndex))
    }

    /// Applies a `2^w x 2^w` unitary to register `id`, identity elsewhere.
    pub fn apply_register_unitary(
        &mut self,
        id: RegId,
        u: &DenseMatrix,
    ) -> Result<(), EngineError> {
        let s = self.slice(id)?;
        let d = 1usize << s.width;
        if u.dim() != d {
            return Err(EngineError::DimensionMismatch {
                got: u.dim(),
                expected: d,
            });
        }
        let deviation = u.unitarity_deviation();
        if deviation > UNITARY_TOLERANCE {
            return Err(EngineError::NotUnitary { deviation });
        }
        if self.skipping() {
            return Ok(());
        }
        self.check_not_controlling(id)?;
        let mut column = vec![Complex64::new(0.0, 0.0); d];
        for rest in 0..s.rest_count() {
            if !self.controlled(s.insert(rest, 0)) {
                continue;
            }
            for (p, c) in column.iter_mut().enumerate() {
                *c = self.amps[s.insert(rest, p)];
            }
            for row in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for (col, c) in column.iter().enumerate() {
                    acc += u.get(row, col) * c;
                }
                self.amps[s.insert(rest, row)] = acc;
            }
        }
        self.verify("apply_register_unitary")
    }

    /// Applies a standard gate on absolute qubit indices (controls first,
    /// target last).
    pub fn apply_gate(&mut self, gate: Gate, qubits: &[usize]) -> Result<(), EngineError> {
        if qubits.len() != gate.arity() {
            return Err(EngineError::BadQubits(format!(
                "{gate:?} takes {} qubits, got {}",
                gate.arity(),
                qubits.len()
            )));
        }
        let total = self.layout.total_bits() as usize;
        for (i, q) in qubits.iter().enumerate() {
            if *q >= total {
                return Err(EngineError::BadQubits(format!("qubit {q} out of range")));
            }
            if qubits[..i].contains(q) {
                return Err(EngineError::BadQubits(format!("qubit {q} repeated")));
            }
        }
        let target = *qubits.last().expect("arity >= 1");
        for c in &self.controls {
            for &(offset, width) in &c.slices {
                if qubits
                    .iter()
                    .any(|q| (offset as usize..(offset + width) as usize).contains(q))
                {
                    return Err(EngineError::ControlOverlap);
                }
            }
        }
        if self.skipping() {
            return Ok(());
        }
        let control_mask: usize = qubits[..qubits.len() - 1]
            .iter()
            .fold(0, |m, q| m | (1usize << q));
        let tbit = 1usize << target;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..self.amps.len() {
            if i & tbit != 0 || i & control_mask != control_mask || !self.controlled(i) {
                continue;
            }
            let j = i | tbit;
            let (a, b) = (self.amps[i], self.amps[j]);
            match gate {
                Gate::H => {
                    self.amps[i] = (a + b) * h;
                    self.amps[j] = (a - b) * h;
                }
                Gate::X | Gate::Cnot | Gate::Ccnot => {
                    self.amps[i] = b;
                    self.amps[j] = a;
                }
                Gate::Z => self.amps[j] = -b,
            }
        }
        self.verify("apply_gate")
    }

    /// Multiplies the amplitude of each listed pattern of `id` by its factor.
    pub fn apply_diagonal(
        &mut self,
        id: RegId,
        factors: &[(u64, Complex64)],
    ) -> Result<(), EngineError> {
        let s = self.slice(id)?;
        if self.skipping() {
            return Ok(());
        }
        self.check_not_controlling(id)?;
        let unconditioned = self.controls.is_empty();
        for &(p, f) in factors {
            if p >> s.width != 0 {
                return Err(EngineError::PatternOutOfRange {
                    pattern: p,
                    width: s.width,
                });
            }
            for rest in 0..s.rest_count() {
                let i = s.insert(rest, p as usize);
                if unconditioned || self.controlled(i) {
                    self.amps[i] *= f;
                }
            }
        }
        self.verify("apply_diagonal")
    }

    /// Mixes each pair `(x, y)` of patterns of `id` by the 2x2 matrix `m`:
    /// `a_x' = m00 a_x + m01 a_y`, `a_y' = m10 a_x + m11 a_y`.
    pub fn apply_pairs(
        &mut self,
        id: RegId,
        pairs: &[(u64, u64)],
        m: [[Complex64; 2]; 2],
    ) -> Result<(), EngineError> {
        let s = self.slice(id)?;
        let two = DenseMatrix::new(2, vec![m[0][0], m[0][1], m[1][0], m[1][1]]);
        let deviation = two.unitarity_deviation();
        if deviation > UNITARY_TOLERANCE {
            return Err(EngineError::NotUnitary { deviation });
        }
        if self.skipping() {
            return Ok(());
        }
        self.check_not_controlling(id)?;
        for &(x, y) in pairs {
            if x >> s.width != 0 || y >> s.width != 0 || x == y {
                return Err(EngineError::BadQubits(format!("invalid pair ({x}, {y})")));
            }
            for rest in 0..s.rest_count() {
                let ix = s.insert(rest, x as usize);
                if !self.controlled(ix) {
                    continue;
                }
                let iy = s.insert(rest, y as usize);
                let (ax, ay) = (self.amps[ix], self.amps[iy]);
                self.amps[ix] = m[0][0] * ax + m[0][1] * ay;
                self.amps[iy] = m[1][0] * ax + m[1][1] * ay;
            }
        }
        self.verify("apply_pairs")
    }

    /// Maps each pattern `p` of `id` to `(p + delta) mod 2^w`.
    pub fn add_modular(&mut self, id: RegId, delta: i64) -> Result<(), EngineError> {
        let s = self.slice(id)?;
        if self.skipping() {
            return Ok(());
        }
        self.check_not_controlling(id)?;
        let mask = (1usize << s.width) - 1;
        let shift = (delta as usize) & mask;
        let mut next = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let j = if self.controlled(i) {
                s.insert(s.rest(i), (s.pattern(i) + shift) & mask)
            } else {
                i
            };
            next[j] = *a;
        }
        self.amps = next;
        self.verify("add_modular")
    }

    /// Reflects the amplitudes of `id` about their mean, separately for
    /// every configuration of the other registers: `a -> 2*mean - a`.
    pub fn invert_about_mean(&mut self, id: RegId) -> Result<(), EngineError> {
        let s = self.slice(id)?;
        if self.skipping() {
            return Ok(());
        }
        self.check_not_controlling(id)?;
        let d = (1usize << s.width) as f64;
        if s.width == s.total {
            let mean = pairwise_sum(&self.amps) / d;
            if self.controls.is_empty() || self.controlled(0) {
                self.amps.iter_mut().for_each(|a| *a = 2.0 * mean - *a);
            }
        } else {
            let mut means = vec![Complex64::new(0.0, 0.0); s.rest_count()];
            for (i, a) in self.amps.iter().enumerate() {
                means[s.rest(i)] += a;
            }
            means.iter_mut().for_each(|m| *m /= d);
            for i in 0..self.amps.len() {
                if self.controlled(i) {
                    self.amps[i] = 2.0 * means[s.rest(i)] - self.amps[i];
                }
            }
        }
        self.verify("invert_about_mean")
    }

    pub fn push_control(&mut self, control: Control) -> Result<(), EngineError> {
        let mut slices = Vec::with_capacity(control.regs.len());
        let mut width = 0;
        for id in &control.regs {
            let s = self.slice(*id)?;
            slices.push((s.offset, s.width));
            width += s.width;
        }
        if !self.skipping() && control.table.len() != 1usize << width {
            return Err(EngineError::DimensionMismatch {
                got: control.table.len(),
                expected: 1usize << width,
            });
        }
        self.controls.push(ResolvedControl {
            regs: control.regs,
            slices,
            table: control.table,
        });
        Ok(())
    }

    pub fn pop_control(&mut self) {
        self.controls.pop();
    }
}

/// Sum with `O(log n)` rounding growth; plain left folds drift visibly
/// over thousands of Grover iterations on 2^21 amplitudes.
fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= 256 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[cfg(test)]
mod tests;
