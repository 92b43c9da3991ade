use super::*;
use std::f64::consts::FRAC_1_SQRT_2;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
}

fn random_state(rng: &mut MeasurementRng, qubits: u32) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..1usize << qubits)
        .map(|_| c(rng.uniform() * 2.0 - 1.0, rng.uniform() * 2.0 - 1.0))
        .collect();
    let n = v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= n);
    v
}

/// Gram-Schmidt on a random complex matrix (columns).
fn random_unitary(rng: &mut MeasurementRng, dim: usize) -> DenseMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    while cols.len() < dim {
        let mut v: Vec<Complex64> = (0..dim)
            .map(|_| c(rng.uniform() - 0.5, rng.uniform() - 0.5))
            .collect();
        for u in &cols {
            let dot: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= dot * y;
            }
        }
        let n = v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if n > 1e-6 {
            cols.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    let mut data = vec![c(0.0, 0.0); dim * dim];
    for (j, col) in cols.iter().enumerate() {
        for (i, x) in col.iter().enumerate() {
            data[i * dim + j] = *x;
        }
    }
    DenseMatrix::new(dim, data)
}

fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (n, m) = (a.dim(), b.dim());
    let dim = n * m;
    let mut data = vec![c(0.0, 0.0); dim * dim];
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                for l in 0..m {
                    data[(i * m + k) * dim + (j * m + l)] = a.get(i, j) * b.get(k, l);
                }
            }
        }
    }
    DenseMatrix::new(dim, data)
}

fn matvec(m: &DenseMatrix, v: &[Complex64]) -> Vec<Complex64> {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| m.get(i, j) * v[j]).sum())
        .collect()
}

fn engine_with(widths: &[u32]) -> Engine {
    let mut e = Engine::new(DEFAULT_CAP);
    e.set_norm_check(true);
    for (i, w) in widths.iter().enumerate() {
        e.allocate(RegId(i as u32), *w).unwrap();
    }
    e
}

#[test]
fn first_qbit_is_zero_state() {
    let e = engine_with(&[1]);
    assert_eq!(e.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);
}

#[test]
fn allocation_tensors_with_zeros() {
    let mut e = engine_with(&[1]);
    e.apply_gate(Gate::X, &[0]).unwrap();
    e.allocate(RegId(1), 7).unwrap();
    assert_eq!(e.amplitudes().len(), 256);
    for (i, a) in e.amplitudes().iter().enumerate() {
        let want = if i == 1 { 1.0 } else { 0.0 };
        assert_eq!(*a, c(want, 0.0), "index {i}");
    }
}

#[test]
fn capacity_is_enforced() {
    let mut e = Engine::new(DEFAULT_CAP);
    let err = e.allocate(RegId(0), 28).unwrap_err();
    assert!(matches!(err, EngineError::CapacityExceeded { requested: 28, cap: 24 }));
    assert!(err.to_string().starts_with(
        "simulation capacity exceeded; use compile backend or reduce widths"
    ));
}

#[test]
fn superposition_examples() {
    let mut e = engine_with(&[1]);
    e.prepare_superposition(RegId(0), &[BasisIndex(0), BasisIndex(1)])
        .unwrap();
    assert!(close(
        e.amplitudes(),
        &[c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)],
        1e-15
    ));

    let mut e = engine_with(&[16]);
    e.prepare_superposition(RegId(0), &[BasisIndex(15)]).unwrap();
    assert_eq!(e.amplitudes()[15], c(1.0, 0.0));

    let mut e = engine_with(&[16]);
    let vals = [1u64, 30, 160].map(BasisIndex);
    e.prepare_superposition(RegId(0), &vals).unwrap();
    let s = 1.0 / 3f64.sqrt();
    for (i, a) in e.amplitudes().iter().enumerate() {
        let want = if [1, 30, 160].contains(&i) { s } else { 0.0 };
        assert!((a - c(want, 0.0)).norm() < 1e-15);
    }
}

#[test]
fn superposition_rejects_bad_input() {
    let mut e = engine_with(&[2]);
    assert_eq!(
        e.prepare_superposition(RegId(0), &[]),
        Err(EngineError::EmptySuperposition)
    );
    assert_eq!(
        e.prepare_superposition(RegId(0), &[BasisIndex(1), BasisIndex(1)]),
        Err(EngineError::DuplicateValue(1))
    );
    assert!(matches!(
        e.prepare_superposition(RegId(0), &[BasisIndex(4)]),
        Err(EngineError::PatternOutOfRange { .. })
    ));
    e.prepare_superposition(RegId(0), &[BasisIndex(2)]).unwrap();
    let err = e.prepare_all(RegId(0)).unwrap_err();
    assert_eq!(err.to_string(), "initializer applied to non-fresh register");
}

#[test]
fn prepare_all_examples() {
    let mut e = engine_with(&[7]);
    e.prepare_all(RegId(0)).unwrap();
    assert!(e
        .amplitudes()
        .iter()
        .all(|a| (a - c(1.0 / 128f64.sqrt(), 0.0)).norm() < 1e-15));

    let mut e = engine_with(&[14]);
    e.prepare_all(RegId(0)).unwrap();
    assert_eq!(e.amplitudes().len(), 1 << 14);
    assert!(e
        .amplitudes()
        .iter()
        .all(|a| (a - c(1.0 / 128.0, 0.0)).norm() < 1e-15));

    // matches H on every qubit
    let mut h = engine_with(&[3]);
    for q in 0..3 {
        h.apply_gate(Gate::H, &[q]).unwrap();
    }
    let mut a = engine_with(&[3]);
    a.prepare_all(RegId(0)).unwrap();
    assert!(close(a.amplitudes(), h.amplitudes(), 1e-15));
}

#[test]
fn measuring_a_basis_state_is_certain() {
    let mut e = engine_with(&[16]);
    e.prepare_superposition(RegId(0), &[BasisIndex(15)]).unwrap();
    let before = e.amplitudes().to_vec();
    let mut rng = MeasurementRng::from_seed(3);
    assert_eq!(e.measure(RegId(0), &mut rng).unwrap(), BasisIndex(15));
    assert_eq!(e.amplitudes(), &before[..]);
}

#[test]
fn measurement_collapses_entangled_partner() {
    // (|A>|A> + |B>|B>)/sqrt2 over two 7-bit registers
    for seed in 0..20 {
        let mut e = engine_with(&[7, 7]);
        let mut amps = vec![c(0.0, 0.0); 1 << 14];
        amps[65 | (65 << 7)] = c(FRAC_1_SQRT_2, 0.0);
        amps[66 | (66 << 7)] = c(FRAC_1_SQRT_2, 0.0);
        e.set_amplitudes(amps).unwrap();
        let mut rng = MeasurementRng::from_seed(seed);
        let first = e.measure(RegId(0), &mut rng).unwrap();
        assert_eq!(e.marginal(RegId(1)).unwrap()[first.0 as usize], 1.0);
        assert_eq!(e.measure(RegId(1), &mut rng).unwrap(), first);
    }
}

#[test]
fn phase_flipped_qubit_measures_evenly() {
    let mut counts = [0u32; 2];
    for shot in 0..4000 {
        let mut e = engine_with(&[1]);
        e.set_amplitudes(vec![c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)])
            .unwrap();
        let mut rng = MeasurementRng::from_seed(shot_seed(11, shot));
        counts[e.measure(RegId(0), &mut rng).unwrap().0 as usize] += 1;
    }
    let sigma = (0.25f64 / 4000.0).sqrt() * 4000.0;
    assert!((counts[0] as f64 - 2000.0).abs() < 5.0 * sigma, "{counts:?}");
}

#[test]
fn superposition_frequencies_within_five_sigma() {
    let values = [3u64, 9, 10, 17, 30];
    let k = values.len() as f64;
    let shots = 10_000u64;
    let mut counts = std::collections::HashMap::new();
    for shot in 0..shots {
        let mut e = engine_with(&[5]);
        e.prepare_superposition(RegId(0), &values.map(BasisIndex))
            .unwrap();
        let mut rng = MeasurementRng::from_seed(shot_seed(0, shot));
        *counts.entry(e.measure(RegId(0), &mut rng).unwrap().0).or_insert(0u64) += 1;
    }
    let p = 1.0 / k;
    let sigma = (p * (1.0 - p) / shots as f64).sqrt();
    assert_eq!(counts.len(), values.len(), "zero-amplitude outcome observed");
    for v in values {
        let f = counts[&v] as f64 / shots as f64;
        assert!((f - p).abs() <= 5.0 * sigma, "value {v}: {f}");
    }
}

#[test]
fn register_unitary_examples() {
    let mut rng = MeasurementRng::from_seed(5);
    let mut e = engine_with(&[3]);
    let s = random_state(&mut rng, 3);
    e.set_amplitudes(s.clone()).unwrap();
    e.apply_register_unitary(RegId(0), &DenseMatrix::identity(8))
        .unwrap();
    assert!(close(e.amplitudes(), &s, 1e-15));

    let h = DenseMatrix::new(
        2,
        vec![
            c(FRAC_1_SQRT_2, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
            c(-FRAC_1_SQRT_2, 0.0),
        ],
    );
    let mut e = engine_with(&[1]);
    e.apply_register_unitary(RegId(0), &h).unwrap();
    assert!(close(
        e.amplitudes(),
        &[c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)],
        1e-15
    ));
}

#[test]
fn register_unitary_matches_tensor_oracle() {
    let mut rng = MeasurementRng::from_seed(99);
    // registers: low (2 bits), target (2 bits), high (3 bits)
    for _ in 0..10 {
        let u = random_unitary(&mut rng, 4);
        let state = random_state(&mut rng, 7);
        let mut e = engine_with(&[2, 2, 3]);
        e.set_amplitudes(state.clone()).unwrap();
        e.apply_register_unitary(RegId(1), &u).unwrap();
        let full = kron(&kron(&DenseMatrix::identity(8), &u), &DenseMatrix::identity(4));
        assert!(close(e.amplitudes(), &matvec(&full, &state), 1e-12));
    }
}

#[test]
fn non_unitary_matrix_is_rejected() {
    let mut e = engine_with(&[1]);
    let m = DenseMatrix::new(2, vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    match e.apply_register_unitary(RegId(0), &m) {
        Err(EngineError::NotUnitary { deviation }) => assert!(deviation >= 1.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn gate_examples() {
    let mut e = engine_with(&[1]);
    e.apply_gate(Gate::X, &[0]).unwrap();
    assert_eq!(e.amplitudes(), &[c(0.0, 0.0), c(1.0, 0.0)]);

    let mut e = engine_with(&[1, 1]);
    e.apply_gate(Gate::H, &[0]).unwrap();
    e.apply_gate(Gate::Cnot, &[0, 1]).unwrap();
    let h = FRAC_1_SQRT_2;
    assert!(close(
        e.amplitudes(),
        &[c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)],
        1e-15
    ));

    let mut e = engine_with(&[1]);
    e.apply_gate(Gate::H, &[0]).unwrap();
    e.apply_gate(Gate::Z, &[0]).unwrap();
    assert!(close(e.amplitudes(), &[c(h, 0.0), c(-h, 0.0)], 1e-15));
}

#[test]
fn gate_operand_errors() {
    let mut e = engine_with(&[2]);
    assert!(matches!(
        e.apply_gate(Gate::Cnot, &[1, 1]),
        Err(EngineError::BadQubits(_))
    ));
    assert!(matches!(
        e.apply_gate(Gate::X, &[2]),
        Err(EngineError::BadQubits(_))
    ));
    assert!(matches!(
        e.apply_gate(Gate::Ccnot, &[0, 1]),
        Err(EngineError::BadQubits(_))
    ));
}

#[test]
fn gates_are_involutions() {
    let mut rng = MeasurementRng::from_seed(1234);
    for n in 3..=8u32 {
        for _ in 0..5 {
            let state = random_state(&mut rng, n);
            let pick = |rng: &mut MeasurementRng, taken: &[usize]| loop {
                let q = (rng.uniform() * n as f64) as usize;
                if !taken.contains(&q) {
                    break q;
                }
            };
            for gate in [Gate::H, Gate::X, Gate::Z, Gate::Cnot, Gate::Ccnot] {
                let mut qs = Vec::new();
                for _ in 0..gate.arity() {
                    let q = pick(&mut rng, &qs);
                    qs.push(q);
                }
                let mut e = engine_with(&[n]);
                e.set_amplitudes(state.clone()).unwrap();
                e.apply_gate(gate, &qs).unwrap();
                e.apply_gate(gate, &qs).unwrap();
                assert!(close(e.amplitudes(), &state, 1e-10), "{gate:?} {qs:?}");
            }
        }
    }
}

#[test]
fn modular_add_wraps() {
    let mut e = engine_with(&[3]);
    e.prepare_superposition(RegId(0), &[BasisIndex(7)]).unwrap();
    e.add_modular(RegId(0), 1).unwrap();
    assert_eq!(e.amplitudes()[0], c(1.0, 0.0));
    e.add_modular(RegId(0), -1).unwrap();
    assert_eq!(e.amplitudes()[7], c(1.0, 0.0));
}

#[test]
fn inversion_about_mean_closed_form() {
    for w in 1..=6u32 {
        let d = (1usize << w) as f64;
        for k in [0usize, (1 << w) - 1] {
            let mut e = engine_with(&[w]);
            e.prepare_superposition(RegId(0), &[BasisIndex(k as u64)])
                .unwrap();
            e.invert_about_mean(RegId(0)).unwrap();
            for (i, a) in e.amplitudes().iter().enumerate() {
                let want = if i == k { 2.0 / d - 1.0 } else { 2.0 / d };
                assert!((a - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }
    let mut e = engine_with(&[4]);
    e.prepare_all(RegId(0)).unwrap();
    let before = e.amplitudes().to_vec();
    e.invert_about_mean(RegId(0)).unwrap();
    assert!(close(e.amplitudes(), &before, 1e-12));
}

#[test]
fn inversion_about_mean_is_per_branch() {
    // target register in low bits, partner register above it
    let mut rng = MeasurementRng::from_seed(8);
    let state = random_state(&mut rng, 5);
    let mut e = engine_with(&[3, 2]);
    e.set_amplitudes(state.clone()).unwrap();
    e.invert_about_mean(RegId(0)).unwrap();
    let s = DenseMatrix::new(
        8,
        (0..64)
            .map(|i| c(if i / 8 == i % 8 { 2.0 / 8.0 - 1.0 } else { 2.0 / 8.0 }, 0.0))
            .collect(),
    );
    let full = kron(&DenseMatrix::identity(4), &s);
    assert!(close(e.amplitudes(), &matvec(&full, &state), 1e-12));
}

#[test]
fn controls_restrict_operations() {
    // control qbit in (|0>+|1>)/sqrt2, target qbit: X under control == CNOT
    let mut e = engine_with(&[1, 1]);
    e.apply_gate(Gate::H, &[0]).unwrap();
    e.push_control(Control {
        regs: vec![RegId(0)],
        table: Arc::new(vec![false, true]),
    })
    .unwrap();
    e.add_modular(RegId(1), 1).unwrap();
    assert_eq!(e.add_modular(RegId(0), 1), Err(EngineError::ControlOverlap));
    assert_eq!(e.release_if_clean(RegId(1)), Err(EngineError::ReleaseUnderControl));
    e.pop_control();

    let mut g = engine_with(&[1, 1]);
    g.apply_gate(Gate::H, &[0]).unwrap();
    g.apply_gate(Gate::Cnot, &[0, 1]).unwrap();
    assert!(close(e.amplitudes(), g.amplitudes(), 1e-12));
}

#[test]
fn release_compacts_clean_registers() {
    let mut e = engine_with(&[1, 2, 1]);
    e.apply_gate(Gate::H, &[0]).unwrap();
    e.apply_gate(Gate::X, &[3]).unwrap();
    assert!(e.release_if_clean(RegId(1)).unwrap());
    assert_eq!(e.layout().total_bits(), 2);
    let h = FRAC_1_SQRT_2;
    assert!(close(
        e.amplitudes(),
        &[c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0), c(h, 0.0)],
        1e-15
    ));
    assert!(!e.release_if_clean(RegId(2)).unwrap());
}

#[test]
fn replayed_prefix_matches_full_run() {
    fn program(e: &mut Engine, rng: &mut MeasurementRng) -> (u64, u64) {
        e.allocate(RegId(0), 3).unwrap();
        e.prepare_all(RegId(0)).unwrap();
        e.allocate(RegId(1), 2).unwrap();
        e.add_modular(RegId(1), 2).unwrap();
        let _ = e.definite_pattern(RegId(1)).unwrap();
        let a = e.measure(RegId(0), rng).unwrap().0;
        e.add_modular(RegId(1), a as i64).unwrap();
        let b = e.measure(RegId(1), rng).unwrap().0;
        (a, b)
    }
    let mut first = Engine::new(DEFAULT_CAP);
    first.record_prefix();
    program(&mut first, &mut MeasurementRng::from_seed(0));
    let snap = first.recorded_prefix().unwrap();
    for seed in 1..30 {
        let mut full = Engine::new(DEFAULT_CAP);
        let want = program(&mut full, &mut MeasurementRng::from_seed(seed));
        let mut replay = Engine::new(DEFAULT_CAP);
        replay.replay_prefix(snap.clone());
        let got = program(&mut replay, &mut MeasurementRng::from_seed(seed));
        assert_eq!(got, want);
        assert_eq!(replay.amplitudes(), full.amplitudes());
    }
}
