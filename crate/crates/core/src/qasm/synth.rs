//! Gate-level constructions over `qelib1.inc`: multi-controlled gates via
//! AND ladders into scratch qubits, ZYZ-decomposed controlled unitaries,
//! state preparation, diagonals and two-level unitaries.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::{Op, Qubit};

/// Placeholder qreg index of the scratch register until it is placed.
pub(super) const SCRATCH: usize = usize::MAX;

pub(super) type Mat2 = [[Complex64; 2]; 2];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub(super) fn ry(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
}

pub(super) fn hadamard() -> Mat2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]]
}

/// `U = e^{i alpha} Rz(beta) Ry(gamma) Rz(delta)`.
#[derive(Debug, Clone, Copy)]
pub(super) struct Zyz {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

pub(super) fn zyz(u: &Mat2) -> Zyz {
    let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
    let alpha = det.arg() / 2.0;
    let ph = Complex64::from_polar(1.0, -alpha);
    let v = [[u[0][0] * ph, u[0][1] * ph], [u[1][0] * ph, u[1][1] * ph]];
    let gamma = 2.0 * v[1][0].norm().atan2(v[0][0].norm());
    let eps = 1e-14;
    let (sum, diff) = if v[1][0].norm() < eps {
        (2.0 * v[1][1].arg(), 0.0)
    } else if v[0][0].norm() < eps {
        (0.0, 2.0 * v[1][0].arg())
    } else {
        (2.0 * v[1][1].arg(), 2.0 * v[1][0].arg())
    };
    Zyz {
        alpha,
        beta: (sum + diff) / 2.0,
        gamma,
        delta: (sum - diff) / 2.0,
    }
}

/// Gate emitter with a pool of scratch qubits that are always returned
/// to `|0>`.
#[derive(Debug, Default)]
pub(super) struct Synth {
    pub ops: Vec<Op>,
    free: BTreeSet<u32>,
    pub scratch_size: u32,
}

impl Synth {
    pub fn alloc(&mut self) -> Qubit {
        let bit = match self.free.pop_first() {
            Some(b) => b,
            None => {
                self.scratch_size += 1;
                self.scratch_size - 1
            }
        };
        Qubit { reg: SCRATCH, bit }
    }

    pub fn release(&mut self, q: Qubit) {
        debug_assert_eq!(q.reg, SCRATCH);
        self.free.insert(q.bit);
    }

    pub fn x(&mut self, q: Qubit) {
        self.ops.push(Op::X(q));
    }

    fn u1(&mut self, lambda: f64, q: Qubit) {
        let l = lambda.rem_euclid(2.0 * PI);
        if l.abs() < 1e-15 || (2.0 * PI - l).abs() < 1e-15 {
            return;
        }
        if (l - PI).abs() < 1e-15 {
            self.ops.push(Op::Z(q));
        } else {
            self.ops.push(Op::U1(wrap_angle(lambda), q));
        }
    }

    fn cu1(&mut self, lambda: f64, a: Qubit, b: Qubit) {
        self.u1(lambda / 2.0, a);
        self.ops.push(Op::Cx(a, b));
        self.u1(-lambda / 2.0, b);
        self.ops.push(Op::Cx(a, b));
        self.u1(lambda / 2.0, b);
    }

    /// Runs `f` with one qubit holding the AND of `ctrls` (`None` when
    /// there are no controls), uncomputing any ladder afterwards.
    pub fn with_and(&mut self, ctrls: &[Qubit], f: impl FnOnce(&mut Self, Option<Qubit>)) {
        match ctrls {
            [] => f(self, None),
            [q] => f(self, Some(*q)),
            _ => {
                let start = self.ops.len();
                let mut acc = self.alloc();
                self.ops.push(Op::Ccx(ctrls[0], ctrls[1], acc));
                let mut used = vec![acc];
                for &q in &ctrls[2..] {
                    let next = self.alloc();
                    self.ops.push(Op::Ccx(q, acc, next));
                    used.push(next);
                    acc = next;
                }
                let ladder: Vec<Op> = self.ops[start..].to_vec();
                f(self, Some(acc));
                self.ops.extend(ladder.into_iter().rev());
                for q in used {
                    self.release(q);
                }
            }
        }
    }

    /// X on `t` when every control is `|1>`.
    pub fn mcx(&mut self, ctrls: &[Qubit], t: Qubit) {
        match ctrls {
            [] => self.ops.push(Op::X(t)),
            [a] => self.ops.push(Op::Cx(*a, t)),
            [a, b] => self.ops.push(Op::Ccx(*a, *b, t)),
            [rest @ .., last] => {
                let last = *last;
                self.with_and(rest, |s, acc| {
                    s.ops.push(Op::Ccx(acc.expect("two or more controls"), last, t))
                });
            }
        }
    }

    /// Phase `e^{i lambda}` on the all-ones pattern of `qs`.
    pub fn mcphase(&mut self, lambda: f64, qs: &[Qubit]) {
        match qs {
            [] => {}
            [a] => self.u1(lambda, *a),
            [a, b] => self.cu1(lambda, *a, *b),
            [rest @ .., last] => {
                let last = *last;
                self.with_and(rest, |s, acc| s.cu1(lambda, acc.expect("controls"), last));
            }
        }
    }

    /// Applies `u` to `t` when every control is `|1>`; uncontrolled global
    /// phase is dropped.
    pub fn mcu(&mut self, u: &Mat2, ctrls: &[Qubit], t: Qubit) {
        let d = zyz(u);
        self.with_and(ctrls, |s, ctl| match ctl {
            None => s.u3(d.gamma, d.beta, d.delta, t),
            Some(ctl) => {
                // A X B X C with ABC = I, plus the phase on the control
                s.u1((d.delta - d.beta) / 2.0, t);
                s.ops.push(Op::Cx(ctl, t));
                s.u3(-d.gamma / 2.0, 0.0, -(d.delta + d.beta) / 2.0, t);
                s.ops.push(Op::Cx(ctl, t));
                s.u3(d.gamma / 2.0, d.beta, 0.0, t);
                s.u1(d.alpha, ctl);
            }
        });
    }

    fn u3(&mut self, theta: f64, phi: f64, lambda: f64, q: Qubit) {
        if theta.abs() < 1e-15 {
            return self.u1(phi + lambda, q);
        }
        let (theta, phi, lambda) = (wrap_angle(theta), wrap_angle(phi), wrap_angle(lambda));
        let near = |a: f64, b: f64| (a - b).abs() < 1e-12;
        if phi.abs() < 1e-12 && near(lambda, PI) {
            if near(theta, PI / 2.0) {
                return self.ops.push(Op::H(q));
            }
            if near(theta, PI) {
                return self.ops.push(Op::X(q));
            }
        }
        self.ops.push(Op::U3(theta, phi, lambda, q));
    }

    /// Runs `f` with the qubits of `pattern`'s zero bits flipped, so that a
    /// control on all ones matches `pattern`.
    pub fn matching(&mut self, qs: &[Qubit], pattern: u64, f: impl FnOnce(&mut Self)) {
        let zeros: Vec<Qubit> = qs
            .iter()
            .enumerate()
            .filter(|(i, _)| pattern >> i & 1 == 0)
            .map(|(_, q)| *q)
            .collect();
        for &q in &zeros {
            self.x(q);
        }
        f(self);
        for &q in &zeros {
            self.x(q);
        }
    }

    /// Prepares the equal superposition of `values` on `qs` (LSB first)
    /// from `|0...0>`, splitting on the most significant bit first.
    pub fn prepare(&mut self, qs: &[Qubit], values: &[u64], ctrls: &[Qubit]) {
        let mut prefix: Vec<(Qubit, bool)> = Vec::new();
        self.prepare_rec(qs, values, qs.len(), &mut prefix, ctrls);
    }

    fn prepare_rec(
        &mut self,
        qs: &[Qubit],
        values: &[u64],
        bits_left: usize,
        prefix: &mut Vec<(Qubit, bool)>,
        ctrls: &[Qubit],
    ) {
        if bits_left == 0 {
            return;
        }
        let b = bits_left - 1;
        let q = qs[b];
        let (ones, zeros): (Vec<u64>, Vec<u64>) = values.iter().partition(|v| *v >> b & 1 == 1);
        let mut all: Vec<Qubit> = ctrls.to_vec();
        all.extend(prefix.iter().map(|(q, _)| *q));
        let pattern: u64 = ctrls.iter().enumerate().map(|(i, _)| 1u64 << i).sum::<u64>()
            | prefix
                .iter()
                .enumerate()
                .map(|(i, (_, one))| u64::from(*one) << (i + ctrls.len()))
                .sum::<u64>();
        if zeros.is_empty() || ones.is_empty() {
            if zeros.is_empty() {
                self.matching(&all, pattern, |s| s.mcx(&all, q));
            }
            return self.prepare_rec(qs, values, b, prefix, ctrls);
        }
        let (k0, k1) = (zeros.len() as f64, ones.len() as f64);
        let theta = 2.0 * k1.sqrt().atan2(k0.sqrt());
        if all.is_empty() && zeros.len() == ones.len() {
            self.ops.push(Op::H(q));
        } else {
            let u = ry(theta);
            self.matching(&all, pattern, |s| s.mcu(&u, &all, q));
        }
        prefix.push((q, false));
        self.prepare_rec(qs, &zeros, b, prefix, ctrls);
        prefix.last_mut().expect("pushed").1 = true;
        self.prepare_rec(qs, &ones, b, prefix, ctrls);
        prefix.pop();
    }

    /// Two-level unitary `m` on the basis states `x` (row 0) and `y`
    /// (row 1) of `qs`, under `ctrls`.
    pub fn two_level(&mut self, qs: &[Qubit], x: u64, y: u64, m: &Mat2, ctrls: &[Qubit]) {
        let diff = x ^ y;
        let j = diff.trailing_zeros() as usize;
        let others: Vec<usize> = (0..qs.len()).filter(|&i| i != j && diff >> i & 1 == 1).collect();
        // flip the other differing bits when bit j matches y, so y lands on x ^ (1 << j)
        let y_j = y >> j & 1;
        let remap = |s: &mut Self| {
            for &i in &others {
                if y_j == 0 {
                    s.x(qs[j]);
                }
                s.ops.push(Op::Cx(qs[j], qs[i]));
                if y_j == 0 {
                    s.x(qs[j]);
                }
            }
        };
        remap(self);
        let mut all: Vec<Qubit> = ctrls.to_vec();
        let mut pattern: u64 = (1u64 << ctrls.len()) - 1;
        for (i, &q) in qs.iter().enumerate() {
            if i != j {
                pattern |= (x >> i & 1) << all.len();
                all.push(q);
            }
        }
        let u = if x >> j & 1 == 0 {
            *m
        } else {
            [[m[1][1], m[1][0]], [m[0][1], m[0][0]]]
        };
        self.matching(&all, pattern, |s| s.mcu(&u, &all, qs[j]));
        remap(self);
    }
}

/// Angle reduced to `(-pi, pi]`.
fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
        let mut r = [[c(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    r[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        r
    }

    fn rz(t: f64) -> Mat2 {
        [
            [Complex64::from_polar(1.0, -t / 2.0), c(0.0, 0.0)],
            [c(0.0, 0.0), Complex64::from_polar(1.0, t / 2.0)],
        ]
    }

    #[test]
    fn zyz_reconstructs_the_matrix() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let cases: Vec<Mat2> = vec![
            hadamard(),
            ry(0.7),
            [[c(0.6, 0.0), c(0.0, 0.8)], [c(0.0, 0.8), c(0.6, 0.0)]],
            [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
            [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]],
            [[c(s, 0.0), c(0.0, -s)], [c(0.5, 0.5), c(-0.5, 0.5)]],
        ];
        for u in cases {
            let d = zyz(&u);
            let r = mul(&mul(&rz(d.beta), &ry(d.gamma)), &rz(d.delta));
            let ph = Complex64::from_polar(1.0, d.alpha);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((r[i][j] * ph - u[i][j]).norm() < 1e-12, "{u:?}");
                }
            }
        }
    }

    #[test]
    fn scratch_qubits_are_recycled() {
        let mut s = Synth::default();
        let q = |b| Qubit { reg: 0, bit: b };
        s.mcx(&[q(0), q(1), q(2), q(3)], q(4));
        s.mcx(&[q(0), q(1), q(2), q(3)], q(4));
        assert_eq!(s.scratch_size, 2);
    }

    #[test]
    fn basis_state_prep_is_x_gates_only() {
        let mut s = Synth::default();
        let qs: Vec<Qubit> = (0..16).map(|b| Qubit { reg: 0, bit: b }).collect();
        s.prepare(&qs, &[15], &[]);
        let want: Vec<Op> = (0..4).rev().map(|b| Op::X(qs[b])).collect();
        assert_eq!(s.ops, want);
    }

    #[test]
    fn equal_split_is_a_hadamard() {
        let mut s = Synth::default();
        let q = Qubit { reg: 0, bit: 0 };
        s.prepare(&[q], &[0, 1], &[]);
        assert_eq!(s.ops, vec![Op::H(q)]);
    }
}
