#![allow(dead_code)]

pub mod props;

use std::path::PathBuf;

use num_complex::Complex64;
use rhyme_core::engine::{Engine, RegId};
use rhyme_core::sema::{check_source, CheckedProgram};
use rhyme_core::types::TypeConfig;

pub const EXAMPLE_PROGRAMS: [&str; 10] = [
    "classical_types",
    "quantum_types",
    "measurement",
    "phase",
    "interference",
    "interference_general",
    "entanglement",
    "grover",
    "invert_gates",
    "invert_native",
];

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

/// Source and widths of a corpus program. A first line `// widths: ...`
/// overrides the defaults.
pub fn load(name: &str) -> (String, TypeConfig) {
    let path = corpus_dir().join(format!("{name}.rh"));
    let src = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let cfg = match src.lines().next().and_then(|l| l.strip_prefix("// widths: ")) {
        Some(list) => TypeConfig::default().with_overrides(list.trim()).unwrap(),
        None => TypeConfig::default(),
    };
    (src, cfg)
}

pub fn checked(name: &str) -> CheckedProgram {
    let (src, cfg) = load(name);
    check_source(&src, &cfg).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

pub fn checked_src(src: &str, cfg: &TypeConfig) -> CheckedProgram {
    check_source(src, cfg).unwrap_or_else(|d| panic!("{d:?}"))
}

/// Amplitude of the joint basis state given as `(register, pattern)` pairs;
/// registers not listed are taken at pattern 0.
pub fn amp(engine: &Engine, pats: &[(u32, u64)]) -> Complex64 {
    let mut idx = 0usize;
    for &(r, p) in pats {
        let e = engine.layout().get(RegId(r)).expect("register");
        idx |= (p as usize) << e.offset;
    }
    engine.amplitudes()[idx]
}

pub fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

/// Max deviation between two states after removing one global phase.
pub fn phase_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (k, _) = a
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .expect("nonempty");
    if a[k].norm() < 1e-12 || b[k].norm() < 1e-12 {
        return a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    }
    let phase = (a[k] / b[k]) / (a[k] / b[k]).norm();
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y * phase).norm())
        .fold(0.0, f64::max)
}

/// Interpreter state over its live registers: `(amplitudes, [(register, offset, width)])`.
/// Taken at the first measurement if there is one, else at the end.
pub fn interpreter_state(program: &CheckedProgram, seed: u64) -> (Vec<Complex64>, Vec<(RegId, u32, u32)>) {
    let (_, backend) = rhyme_core::runner::run_once(program, seed, 24).expect("runs");
    let (amps, layout) = match backend.engine.recorded_prefix() {
        Some(snap) => (snap.amplitudes().to_vec(), snap.layout().clone()),
        None => (backend.engine.amplitudes().to_vec(), backend.engine.layout().clone()),
    };
    let regs = layout.entries().iter().map(|e| (e.id, e.offset, e.width)).collect();
    (amps, regs)
}

/// Compiles `program`, re-parses the emitted text, simulates it with the
/// reference simulator and returns the max deviation (mod global phase)
/// from the interpreter's state.
///
/// Qubits the interpreter no longer tracks must factor out in one basis
/// state; scratch qubits must be back at zero.
pub fn differential(program: &CheckedProgram) -> Result<f64, String> {
    use rhyme_core::qasm::{compile, parse, refsim};
    let compiled = compile(program).map_err(|e| e.message)?;
    let text = compiled.to_qasm();
    let parsed = parse::parse(&text).map_err(|e| format!("emitted QASM rejected: {e}"))?;
    let ref_state = refsim::simulate(&parsed, 24)?;
    let (amps, regs) = interpreter_state(program, 0);

    // reference qubit -> interpreter qubit
    let n = ref_state.num_qubits();
    let mut map: Vec<Option<usize>> = vec![None; n];
    for &(id, off, w) in &regs {
        let name = compiled
            .registers
            .iter()
            .find(|(r, _)| *r == id)
            .map(|(_, n)| n.as_str())
            .ok_or_else(|| format!("register {id:?} missing from the circuit"))?;
        for b in 0..w {
            let q = ref_state.qubit(name, b).ok_or("qreg missing")?;
            map[q] = Some((off + b) as usize);
        }
    }
    let scratch: Vec<usize> = match &compiled.scratch {
        Some(s) => (0..).map_while(|b| ref_state.qubit(s, b)).collect(),
        None => Vec::new(),
    };

    let split = |i: usize| {
        let (mut j, mut rest) = (0usize, 0usize);
        for (q, m) in map.iter().enumerate() {
            let bit = i >> q & 1;
            match m {
                Some(t) => j |= bit << t,
                None => rest |= bit << q,
            }
        }
        (j, rest)
    };
    let (kmax, _) = ref_state
        .amps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .unwrap();
    let rest0 = split(kmax).1;
    if scratch.iter().any(|&q| rest0 >> q & 1 == 1) {
        return Err("scratch qubits not returned to zero".into());
    }
    let mut reduced = vec![Complex64::new(0.0, 0.0); amps.len()];
    let mut leak = 0.0f64;
    for (i, a) in ref_state.amps.iter().enumerate() {
        let (j, rest) = split(i);
        if rest == rest0 {
            reduced[j] = *a;
        } else {
            leak = leak.max(a.norm());
        }
    }
    if leak > 1e-9 {
        return Err(format!("untracked qubits are entangled (stray amplitude {leak:e})"));
    }
    Ok(phase_distance(&reduced, &amps))
}
