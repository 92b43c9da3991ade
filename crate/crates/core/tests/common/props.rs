//! Property checks shared by the `properties` and `acceptance` targets.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rhyme_core::engine::{shot_seed, Control, Engine, Gate, MeasurementRng, RegId};
use rhyme_core::runner::{run_once, run_shots};
use rhyme_core::types::{decode, encode, BasisIndex, ClassicalValue, RhymeType, TypeConfig};

use super::{checked, checked_src};

type Outcome = Result<(), TestCaseError>;

const CAP: u32 = 24;

pub fn u2(theta: f64, phi: f64, lambda: f64, alpha: f64) -> [[C; 2]; 2] {
    let g = C::from_polar(1.0, alpha);
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    [
        [g * c, -g * C::from_polar(s, lambda)],
        [g * C::from_polar(s, phi), g * C::from_polar(c, phi + lambda)],
    ]
}

pub fn random_state(len: usize, seed: u64) -> Vec<C> {
    let mut s = seed;
    let mut next = || rhyme_core::engine::rng::splitmix64(&mut s) as f64 / u64::MAX as f64 - 0.5;
    let v: Vec<C> = (0..len).map(|_| C::new(next(), next())).collect();
    let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

pub fn matvec(m: &[Vec<C>], v: &[C]) -> Vec<C> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn identity(d: usize) -> Vec<Vec<C>> {
    (0..d)
        .map(|i| (0..d).map(|j| C::new(f64::from(u8::from(i == j)), 0.0)).collect())
        .collect()
}

pub fn twos(v: i64, w: u32) -> usize {
    (v as u64 & ((1u64 << w) - 1)) as usize
}

pub fn signed(p: usize, w: u32) -> i64 {
    let p = p as i64;
    if p >= 1 << (w - 1) {
        p - (1 << w)
    } else {
        p
    }
}

pub fn max_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn literal(values: &BTreeSet<i64>) -> String {
    values.iter().map(i64::to_string).collect::<Vec<_>>().join(" || ")
}

pub fn complex_lit(z: C) -> String {
    let sign = if z.im < 0.0 { '-' } else { '+' };
    format!("{:.17} {sign} {:.17}i", z.re, z.im.abs())
}

// uniform superposition over `values` on a `w`-bit register
pub fn uniform(values: &BTreeSet<i64>, w: u32) -> Vec<C> {
    let mut v = vec![C::new(0.0, 0.0); 1 << w];
    let a = 1.0 / (values.len() as f64).sqrt();
    for &x in values {
        v[twos(x, w)] = C::new(a, 0.0);
    }
    v
}

pub fn phase_oracle(w: u32, n: i64, k: impl Fn(i64) -> i64) -> Vec<Vec<C>> {
    let d = 1usize << w;
    let mut m = identity(d);
    for (p, row) in m.iter_mut().enumerate() {
        row[p] = C::from_polar(1.0, 2.0 * PI * k(signed(p, w)) as f64 / n as f64);
    }
    m
}

pub fn values(w: u32) -> impl Strategy<Value = BTreeSet<i64>> {
    let lo = -(1i64 << (w - 1));
    let hi = (1i64 << (w - 1)) - 1;
    proptest::collection::btree_set(lo..=hi, 1..=(1usize << w).min(12))
}

#[derive(Debug, Clone)]
pub enum EngineOp {
    Gate(Gate, [usize; 3]),
    Diagonal(Vec<(u64, f64)>),
    Pairs(Vec<u64>, [f64; 4]),
    Add(i64),
    Invert,
    Measure,
    Controlled(Vec<bool>, Box<EngineOp>),
}

pub fn engine_op() -> impl Strategy<Value = EngineOp> {
    let leaf = prop_oneof![
        (prop_oneof![Just(Gate::H), Just(Gate::X), Just(Gate::Z), Just(Gate::Cnot), Just(Gate::Ccnot)],
            proptest::sample::subsequence((0..6usize).collect::<Vec<_>>(), 3).prop_shuffle())
            .prop_map(|(g, q)| EngineOp::Gate(g, [q[0], q[1], q[2]])),
        proptest::collection::vec((0u64..8, -PI..PI), 0..8).prop_map(EngineOp::Diagonal),
        (Just((0u64..8).collect::<Vec<_>>()).prop_shuffle(), proptest::array::uniform4(-PI..PI))
            .prop_map(|(perm, a)| EngineOp::Pairs(perm, a)),
        (-9i64..9).prop_map(EngineOp::Add),
        Just(EngineOp::Invert),
        Just(EngineOp::Measure),
    ];
    leaf.prop_recursive(1, 4, 1, |inner| {
        (proptest::collection::vec(any::<bool>(), 8), inner)
            .prop_map(|(t, op)| EngineOp::Controlled(t, Box::new(op)))
    })
}

// register 0 (3 bits) is the target; register 1 (3 bits) supplies controls
pub fn apply(e: &mut Engine, op: &EngineOp, rng: &mut MeasurementRng, controlled: bool) {
    let (a, b) = (RegId(0), RegId(1));
    match op {
        EngineOp::Gate(g, q) => {
            let qs: Vec<usize> = q[..g.arity()].iter().map(|&i| if controlled { i % 3 } else { i }).collect();
            let distinct: BTreeSet<_> = qs.iter().collect();
            if distinct.len() == qs.len() {
                e.apply_gate(*g, &qs).unwrap();
            }
        }
        EngineOp::Diagonal(f) => {
            let factors: Vec<(u64, C)> = f.iter().map(|&(p, t)| (p, C::from_polar(1.0, t))).collect();
            e.apply_diagonal(a, &factors).unwrap();
        }
        EngineOp::Pairs(perm, t) => {
            let pairs: Vec<(u64, u64)> = perm.chunks(2).take(3).map(|c| (c[0], c[1])).collect();
            e.apply_pairs(a, &pairs, u2(t[0], t[1], t[2], t[3])).unwrap();
        }
        EngineOp::Add(d) => e.add_modular(a, *d).unwrap(),
        EngineOp::Invert => e.invert_about_mean(a).unwrap(),
        EngineOp::Measure => {
            if !controlled {
                e.measure(b, rng).unwrap();
            }
        }
        EngineOp::Controlled(table, inner) => {
            e.push_control(Control {
                regs: vec![b],
                table: Arc::new(table.clone()),
            })
            .unwrap();
            apply(e, inner, rng, true);
            e.pop_control();
        }
    }
}

pub fn state_stays_normalized_strategy() -> impl Strategy<Value = (u64, Vec<EngineOp>)> {
    (any::<u64>(), proptest::collection::vec(engine_op(), 1..40))
}

pub fn state_stays_normalized((seed, ops): (u64, Vec<EngineOp>)) -> Outcome {
    let mut e = Engine::new(CAP);
    e.allocate(RegId(0), 3).unwrap();
    e.allocate(RegId(1), 3).unwrap();
    e.set_amplitudes(random_state(64, seed)).unwrap();
    let mut rng = MeasurementRng::from_seed(seed);
    for op in &ops {
        apply(&mut e, op, &mut rng, false);
        prop_assert!((e.norm_sqr() - 1.0).abs() < 1e-9, "after {op:?}: {}", e.norm_sqr());
    }
    Ok(())
}

pub fn add_phase_matches_dense_oracle_strategy() -> impl Strategy<Value = ((u32, BTreeSet<i64>), i64, i64, i64)> {
    ((2u32..=8).prop_flat_map(|w| (Just(w), values(w))), -3i64..=3, -5i64..=5, 1i64..=16)
}

pub fn add_phase_matches_dense_oracle(((w, vals), a, b, n): ((u32, BTreeSet<i64>), i64, i64, i64)) -> Outcome {
    let cfg = TypeConfig::default().with_overrides(&format!("int={w}")).unwrap();
    let src = format!(
        "qint k = {};\nk.addPhase(f, {n});\ndef f(int v) -> int {{ return v * {a} + {b}; }}\n",
        literal(&vals)
    );
    let (_, be) = run_once(&checked_src(&src, &cfg), 0, CAP).unwrap();
    let expected = matvec(&phase_oracle(w, n, |v| v * a + b), &uniform(&vals, w));
    prop_assert!(max_diff(be.engine.amplitudes(), &expected) < 1e-10);
    Ok(())
}

pub fn interference_matches_dense_oracle_strategy() -> impl Strategy<Value = ((u32, BTreeSet<i64>), i64, [f64; 4])> {
    ((2u32..=8).prop_flat_map(|w| (Just(w), values(w))), -8i64..=8, proptest::array::uniform4(-PI..PI))
}

pub fn interference_matches_dense_oracle(((w, vals), c, t): ((u32, BTreeSet<i64>), i64, [f64; 4])) -> Outcome {
    let cfg = TypeConfig::default().with_overrides(&format!("int={w}")).unwrap();
    let (lo, hi) = (-(1i64 << (w - 1)), (1i64 << (w - 1)) - 1);
    let u = u2(t[0], t[1], t[2], t[3]);
    let src = format!(
        "qint k = {vals};\nk.addPhase(g, 5);\n\
         complex u11 = {}; complex u12 = {}; complex u21 = {}; complex u22 = {};\n\
         k.applyBipartiteInterference(sp, pr, u11, u12, u21, u22);\n\
         def g(int v) -> int {{ return v; }}\n\
         def sp(int v) -> bool {{ return v < {c} - v && {c} - v <= {hi}; }}\n\
         def pr(int v) -> int {{ if ({c} - v >= {lo} && {c} - v <= {hi}) {{ return {c} - v; }} else {{ return v; }} }}\n",
        complex_lit(u[0][0]), complex_lit(u[0][1]), complex_lit(u[1][0]), complex_lit(u[1][1]),
        vals = literal(&vals),
    );
    let (_, be) = run_once(&checked_src(&src, &cfg), 0, CAP).unwrap();

    let d = 1usize << w;
    let mut m = identity(d);
    for x in lo..=hi {
        let y = c - x;
        if x < y && y <= hi {
            let (px, py) = (twos(x, w), twos(y, w));
            m[px][px] = u[0][0];
            m[px][py] = u[0][1];
            m[py][px] = u[1][0];
            m[py][py] = u[1][1];
        }
    }
    let before = matvec(&phase_oracle(w, 5, |v| v), &uniform(&vals, w));
    let expected = matvec(&m, &before);
    prop_assert!(max_diff(be.engine.amplitudes(), &expected) < 1e-10);
    Ok(())
}

pub fn conditional_matches_dense_oracle_strategy() -> impl Strategy<Value = ((u32, BTreeSet<i64>), u32, i64, i64)> {
    ((2u32..=4).prop_flat_map(|w| (Just(w), values(w))), 2u32..=4, -2i64..=1, -3i64..=3)
}

pub fn conditional_matches_dense_oracle(((wa, avals), wt, t0, c): ((u32, BTreeSet<i64>), u32, i64, i64)) -> Outcome {
    // qint widths are shared, so use one width for both registers
    let w = wa.max(wt);
    let cfg = TypeConfig::default().with_overrides(&format!("int={w}")).unwrap();
    let src = format!(
        "qint a = {};\nqint t = {t0};\nif (a < {c}) {{ t.increment(); }} else {{ t.decrement(); }}\n",
        literal(&avals)
    );
    let (_, be) = run_once(&checked_src(&src, &cfg), 0, CAP).unwrap();

    let d = 1usize << (2 * w);
    let mut m = vec![vec![C::new(0.0, 0.0); d]; d];
    let image = (0..d).map(|col| {
        let (pa, pt) = (col & ((1 << w) - 1), col >> w);
        let t = signed(pt, w);
        let t2 = if signed(pa, w) < c { t + 1 } else { t - 1 };
        pa | twos(t2, w) << w
    });
    for (col, row) in image.enumerate() {
        m[row][col] = C::new(1.0, 0.0);
    }
    let mut before = vec![C::new(0.0, 0.0); d];
    for (p, amp) in uniform(&avals, w).iter().enumerate() {
        before[p | twos(t0, w) << w] = *amp;
    }
    prop_assert!(max_diff(be.engine.amplitudes(), &matvec(&m, &before)) < 1e-10);
    Ok(())
}

pub fn gates_are_involutions_strategy() -> impl Strategy<Value = (u64, u32, usize, usize)> {
    (any::<u64>(), 1u32..=5, 0usize..5, 0usize..3)
}

pub fn gates_are_involutions((seed, w, q, g): (u64, u32, usize, usize)) -> Outcome {
    let q = q % w as usize;
    let gate = [Gate::H, Gate::X, Gate::Z][g];
    let mut e = Engine::new(CAP);
    e.allocate(RegId(0), w).unwrap();
    let start = random_state(1 << w, seed);
    e.set_amplitudes(start.clone()).unwrap();
    e.apply_gate(gate, &[q]).unwrap();
    e.apply_gate(gate, &[q]).unwrap();
    prop_assert!(max_diff(e.amplitudes(), &start) < 1e-10);
    Ok(())
}

pub fn default_interference_twice_is_identity_strategy() -> impl Strategy<Value = ((u32, BTreeSet<i64>), i64)> {
    ((2u32..=6).prop_flat_map(|w| (Just(w), values(w))), -4i64..=4)
}

pub fn default_interference_twice_is_identity(((w, vals), c): ((u32, BTreeSet<i64>), i64)) -> Outcome {
    let cfg = TypeConfig::default().with_overrides(&format!("int={w}")).unwrap();
    let hi = (1i64 << (w - 1)) - 1;
    let lo = -hi - 1;
    let prefix = format!(
        "qint k = {};\nk.addPhase(g, 7);\n\
         def g(int v) -> int {{ return v * v; }}\n\
         def sp(int v) -> bool {{ return v < {c} - v && {c} - v <= {hi}; }}\n\
         def pr(int v) -> int {{ if ({c} - v >= {lo} && {c} - v <= {hi}) {{ return {c} - v; }} else {{ return v; }} }}\n",
        literal(&vals)
    );
    let twice = format!("{prefix}k.applyBipartiteInterference(sp, pr);\nk.applyBipartiteInterference(sp, pr);\n");
    let (_, a) = run_once(&checked_src(&prefix, &cfg), 0, CAP).unwrap();
    let (_, b) = run_once(&checked_src(&twice, &cfg), 0, CAP).unwrap();
    prop_assert!(max_diff(a.engine.amplitudes(), b.engine.amplitudes()) < 1e-10);
    Ok(())
}

/// Exhaustive round trip for qchar, qbool, qbit and 8-bit qint.
pub fn encode_decode_bijection() -> Result<(), String> {
    let cfg = TypeConfig::default().with_overrides("int=8").unwrap();
    for (t, width) in [(RhymeType::QChar, 7), (RhymeType::QBool, 1), (RhymeType::QBit, 1), (RhymeType::QInt, 8)] {
        let mut seen = BTreeSet::new();
        for p in 0..1u64 << width {
            let v = decode(BasisIndex(p), t, &cfg);
            let back = encode(&v, t, &cfg).map_err(|e| format!("{t:?} {v:?}: {e}"))?;
            if back.index != BasisIndex(p) || back.rounded {
                return Err(format!("{t:?}: pattern {p} round-trips to {:?}", back.index));
            }
            if !seen.insert(format!("{v:?}")) {
                return Err(format!("{t:?}: {v:?} decoded twice"));
            }
        }
    }
    for v in -128i64..=127 {
        let e = encode(&ClassicalValue::Int(v), RhymeType::QInt, &cfg).map_err(|e| e.to_string())?;
        if decode(e.index, RhymeType::QInt, &cfg) != ClassicalValue::Int(v) {
            return Err(format!("int {v} does not round-trip"));
        }
    }
    for ch in 0u8..128 {
        let e = encode(&ClassicalValue::Char(ch), RhymeType::QChar, &cfg).map_err(|e| e.to_string())?;
        if e.index != BasisIndex(u64::from(ch)) {
            return Err(format!("char {ch} encodes to {:?}", e.index));
        }
    }
    Ok(())
}

/// Chi-square critical value at the two-sided 5-sigma tail probability.
pub fn chi2_critical(df: usize) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
    let tail = 2.0 * Normal::new(0.0, 1.0).unwrap().cdf(-5.0);
    ChiSquared::new(df as f64).unwrap().inverse_cdf(1.0 - tail)
}

/// Pearson statistic and degrees of freedom; bins expected below 5 counts
/// are pooled.
pub fn chi2(observed: &[u64], probs: &[f64], shots: u64) -> (f64, usize) {
    let (mut stat, mut bins) = (0.0, 0);
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * shots as f64;
        if e < 5.0 {
            pool_o += o as f64;
            pool_e += e;
        } else {
            stat += (o as f64 - e).powi(2) / e;
            bins += 1;
        }
    }
    if pool_e > 0.0 {
        stat += (pool_o - pool_e).powi(2) / pool_e.max(1e-12);
        bins += 1;
    }
    (stat, bins - 1)
}

/// 10,000-shot Born-rule test on random 4-qubit states and on the
/// measurement example.
pub fn born_rule() -> Result<(), String> {
    const SHOTS: u64 = 10_000;
    for seed in 0..4u64 {
        let mut e = Engine::new(CAP);
        e.allocate(RegId(0), 4).unwrap();
        let state = random_state(16, 1000 + seed);
        e.set_amplitudes(state.clone()).unwrap();
        let mut counts = vec![0u64; 16];
        for shot in 0..SHOTS {
            let mut trial = e.clone();
            let mut rng = MeasurementRng::from_seed(shot_seed(seed, shot));
            counts[trial.measure(RegId(0), &mut rng).unwrap().0 as usize] += 1;
        }
        let probs: Vec<f64> = state.iter().map(|a| a.norm_sqr()).collect();
        let (stat, df) = chi2(&counts, &probs, SHOTS);
        if stat >= chi2_critical(df) {
            return Err(format!("random state {seed}: chi2 {stat:.2} with {df} dof"));
        }
    }
    let (h, _) = run_shots(&checked("measurement"), SHOTS, 11, CAP).map_err(|e| e.message)?;
    let counts: Vec<u64> = ["2.5", "3.5", "3.125", "2.75"].iter().map(|k| h.count(k)).collect();
    if counts.iter().sum::<u64>() != SHOTS {
        return Err(format!("unexpected outcomes {:?}", h.outcomes));
    }
    let (stat, df) = chi2(&counts, &[0.25; 4], SHOTS);
    if stat >= chi2_critical(df) {
        return Err(format!("measurement example: chi2 {stat:.2} with {df} dof"));
    }
    Ok(())
}

fn run_prop<S: Strategy>(cases: u32, strategy: S, f: impl Fn(S::Value) -> Outcome) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, f).map_err(|e| e.to_string())
}

/// Every property, named, with `cases` random cases each.
pub fn suite(cases: u32) -> Vec<(&'static str, Result<(), String>)> {
    vec![
        ("normalization", run_prop(cases, state_stays_normalized_strategy(), state_stays_normalized)),
        ("encode/decode", encode_decode_bijection()),
        ("addPhase oracle", run_prop(cases, add_phase_matches_dense_oracle_strategy(), add_phase_matches_dense_oracle)),
        ("interference oracle", run_prop(cases, interference_matches_dense_oracle_strategy(), interference_matches_dense_oracle)),
        ("conditional oracle", run_prop(cases, conditional_matches_dense_oracle_strategy(), conditional_matches_dense_oracle)),
        ("gate involutions", run_prop(cases, gates_are_involutions_strategy(), gates_are_involutions)),
        ("interference twice", run_prop(cases, default_interference_twice_is_identity_strategy(), default_interference_twice_is_identity)),
        ("Born rule", born_rule()),
    ]
}
