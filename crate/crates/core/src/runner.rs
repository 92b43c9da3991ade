//! Multi-shot execution on the statevector backend.
//!
//! Everything before a program's first measurement is deterministic, so
//! shot 0 records the state at that point and later shots replay the
//! classical work only, resuming amplitude simulation from the snapshot.
//! Shot `i` draws its outcomes from `MeasurementRng::from_seed(shot_seed(seed, i))`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::shot_seed;
use crate::sema::CheckedProgram;
use crate::semantics::{execute, ExecutionResult, RuntimeError, SimBackend};
use crate::types::TypeConfig;

/// Type widths as echoed in serialized histograms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Widths {
    pub int: u32,
    pub float_total: u32,
    pub float_frac: u32,
    pub string: u32,
    #[serde(rename = "ref")]
    pub reference: u32,
}

impl From<&TypeConfig> for Widths {
    fn from(c: &TypeConfig) -> Self {
        Widths {
            int: c.int_bits,
            float_total: c.float_total_bits,
            float_frac: c.float_frac_bits,
            string: c.string_max_len,
            reference: c.ref_bits,
        }
    }
}

/// Outcome counts keyed by a shot's printed lines joined with spaces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub seed: u64,
    pub shots: u64,
    pub widths: Widths,
    pub outcomes: BTreeMap<String, u64>,
}

impl Histogram {
    pub fn count(&self, key: &str) -> u64 {
        self.outcomes.get(key).copied().unwrap_or(0)
    }

    /// Plain-text rendering: one `count<TAB>outcome` line per key.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, n) in &self.outcomes {
            out.push_str(&format!("{n}\t{k}\n"));
        }
        out
    }
}

/// Executes one shot with full simulation and returns the backend for
/// state inspection.
pub fn run_once(
    program: &CheckedProgram,
    seed: u64,
    cap: u32,
) -> Result<(ExecutionResult, SimBackend), RuntimeError> {
    let mut backend = SimBackend::recording(cap, seed);
    let result = execute(program, &mut backend)?;
    Ok((result, backend))
}

/// Runs `shots` executions and tallies their printed output.
///
/// The first error aborts the run. Warnings are collected from shot 0.
pub fn run_shots(
    program: &CheckedProgram,
    shots: u64,
    seed: u64,
    cap: u32,
) -> Result<(Histogram, ExecutionResult), RuntimeError> {
    assert!(shots >= 1, "at least one shot");
    let mut outcomes = BTreeMap::new();
    let (first, backend) = run_once(program, shot_seed(seed, 0), cap)?;
    *outcomes.entry(first.outcome_key()).or_insert(0) += 1;
    match backend.engine.recorded_prefix() {
        None => {
            // nothing was measured: every shot behaves like shot 0
            *outcomes.get_mut(&first.outcome_key()).expect("inserted") += shots - 1;
        }
        Some(snapshot) => {
            for i in 1..shots {
                let mut b = SimBackend::replaying(cap, shot_seed(seed, i), snapshot.clone());
                let r = execute(program, &mut b)?;
                *outcomes.entry(r.outcome_key()).or_insert(0) += 1;
            }
        }
    }
    let hist = Histogram {
        seed,
        shots,
        widths: Widths::from(&program.config),
        outcomes,
    };
    Ok((hist, first))
}
