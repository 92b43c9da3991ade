//! Enumerates classical functions over every basis pattern of a register.

use crate::types::{decode, encode, wrap_int, ClassicalValue as CV, RhymeType, TypeConfig};

use super::classical::PureEvaluator;
use super::{RuntimeError, RuntimeErrorKind};

/// Nonzero entries `(pattern, k mod n)` of a phase map `exp(2 pi i k / n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseTable {
    pub modulus: i64,
    pub entries: Vec<(u64, i64)>,
}

impl PhaseTable {
    /// Phase -1 on every listed pattern.
    pub fn oracle(patterns: Vec<u64>) -> Self {
        PhaseTable {
            modulus: 2,
            entries: patterns.into_iter().map(|p| (p, 1)).collect(),
        }
    }
}

fn decode_arg(p: u64, ty: RhymeType, width: u32, cfg: &TypeConfig) -> CV {
    match ty {
        RhymeType::QBitArray(_) | RhymeType::BitArray(_) => {
            decode(crate::types::BasisIndex(p), RhymeType::BitArray(Some(width)), cfg)
        }
        _ => decode(crate::types::BasisIndex(p), ty, cfg),
    }
}

fn shift_amount(v: &CV) -> Option<i64> {
    match v {
        CV::Int(i) => Some(*i),
        CV::Bit(b) => Some(i64::from(*b)),
        CV::Bool(b) => Some(i64::from(*b)),
        _ => None,
    }
}

fn fail(msg: String) -> RuntimeError {
    RuntimeError::new(RuntimeErrorKind::Evaluation, msg)
}

/// Phase table of `shift` over all patterns of a `width`-qubit register of type `ty`.
pub fn phase_table(
    ev: &mut PureEvaluator<'_>,
    shift: &str,
    ty: RhymeType,
    width: u32,
    cfg: &TypeConfig,
    modulus: i64,
) -> Result<PhaseTable, RuntimeError> {
    let mut entries = Vec::new();
    for p in 0..1u64 << width {
        let arg = decode_arg(p, ty, width, cfg);
        let out = ev
            .call(shift, vec![arg.clone()])
            .map_err(|e| e.with_context(format!("in {shift}({arg})")))?;
        let k = shift_amount(&out).ok_or_else(|| {
            fail(format!("{shift}({arg}) returned {}, expected an integer", out.type_of()))
        })?;
        let k = k.rem_euclid(modulus);
        if k != 0 {
            entries.push((p, k));
        }
    }
    Ok(PhaseTable { modulus, entries })
}

/// Patterns on which `predicate` holds.
pub fn true_patterns(
    ev: &mut PureEvaluator<'_>,
    predicate: &str,
    ty: RhymeType,
    width: u32,
    cfg: &TypeConfig,
) -> Result<Vec<u64>, RuntimeError> {
    let mut out = Vec::new();
    for p in 0..1u64 << width {
        let arg = decode_arg(p, ty, width, cfg);
        match ev
            .call(predicate, vec![arg.clone()])
            .map_err(|e| e.with_context(format!("in {predicate}({arg})")))?
        {
            CV::Bool(true) => out.push(p),
            CV::Bool(false) => {}
            other => {
                return Err(fail(format!(
                    "{predicate}({arg}) returned {}, expected bool",
                    other.type_of()
                )))
            }
        }
    }
    Ok(out)
}

/// Result of validating a split/pair bipartition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    /// `(x, y)` with `x` on the true side and `y = pair(x)` on the false side.
    pub pairs: Vec<(u64, u64)>,
    /// Set when some `pair` result had to be wrapped into the integer range.
    pub wrapped: Option<String>,
}

/// Enumerates `split`/`pair` and checks that, away from fixed points,
/// `pair` is an involution between the true and false sides.
pub fn bipartition(
    ev: &mut PureEvaluator<'_>,
    split: &str,
    pair: &str,
    ty: RhymeType,
    width: u32,
    cfg: &TypeConfig,
) -> Result<Bipartition, RuntimeError> {
    let n = 1usize << width;
    let mut side = Vec::with_capacity(n);
    let mut image = Vec::with_capacity(n);
    let mut wrapped = None;
    for p in 0..n as u64 {
        let arg = decode_arg(p, ty, width, cfg);
        let s = ev
            .call(split, vec![arg.clone()])
            .map_err(|e| e.with_context(format!("in {split}({arg})")))?;
        side.push(match s {
            CV::Bool(b) => b,
            other => {
                return Err(fail(format!(
                    "{split}({arg}) returned {}, expected bool",
                    other.type_of()
                )))
            }
        });
        let mut q = ev
            .call(pair, vec![arg.clone()])
            .map_err(|e| e.with_context(format!("in {pair}({arg})")))?;
        if let (CV::Int(i), RhymeType::Int | RhymeType::QInt) = (&q, ty) {
            let w = wrap_int(*i, cfg.int_bits);
            if w != *i {
                wrapped.get_or_insert_with(|| format!("{pair}({arg}) = {i} wrapped to {w}"));
                q = CV::Int(w);
            }
        }
        let encoded = match ty {
            RhymeType::QBitArray(_) | RhymeType::BitArray(_) => {
                encode(&q, RhymeType::BitArray(Some(width)), cfg)
            }
            _ => encode(&q, ty, cfg),
        }
        .map_err(|e| fail(format!("{pair}({arg}) = {q} is not a value of the register: {e}")))?;
        image.push(encoded.index.0);
    }
    let show = |p: u64| decode_arg(p, ty, width, cfg);
    let mut pairs = Vec::new();
    for p in 0..n as u64 {
        let q = image[p as usize];
        if q == p {
            continue;
        }
        let back = image[q as usize];
        if back != p {
            return Err(fail(format!(
                "split/pair do not form a one-to-one bipartition: {pair}({}) = {} but {pair}({}) = {}",
                show(p),
                show(q),
                show(q),
                show(back)
            ))
            .kind(RuntimeErrorKind::Bipartition));
        }
        if side[p as usize] == side[q as usize] {
            return Err(fail(format!(
                "split/pair do not form a one-to-one bipartition: {} and its pair {} are both on the {} side of {split}",
                show(p),
                show(q),
                side[p as usize]
            ))
            .kind(RuntimeErrorKind::Bipartition));
        }
        if side[p as usize] {
            pairs.push((p, q));
        }
    }
    Ok(Bipartition { pairs, wrapped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;
    use std::collections::HashMap;

    fn fns(src: &str) -> HashMap<String, crate::frontend::ast::FnDef> {
        parse_source(src)
            .unwrap()
            .functions()
            .map(|f| (f.name.clone(), f.clone()))
            .collect()
    }

    #[test]
    fn parity_split_pair_is_a_bipartition() {
        let f = fns(
            "def split(int i) -> bool { if (i % 2 == 0) { return true; } else { return false; } }\n\
             def pair(int i) -> int { if (i % 2 == 0) { return i + 1; } else { return i - 1; } }",
        );
        let cfg = TypeConfig {
            int_bits: 8,
            ..TypeConfig::default()
        };
        let mut ev = PureEvaluator::new(&f);
        let b = bipartition(&mut ev, "split", "pair", RhymeType::QInt, 8, &cfg).unwrap();
        assert_eq!(b.pairs.len(), 128);
        assert!(b.pairs.contains(&(80, 81)));
        assert!(b.pairs.contains(&(144, 145)));
        assert_eq!(b.wrapped, None);
    }

    #[test]
    fn broken_pairs_are_named() {
        let f = fns(
            "def split(int i) -> bool { return i < 2; }\n\
             def pair(int i) -> int { if (i == 0) { return 2; } else { return 0; } }\n\
             def same(int i) -> bool { return true; }\n\
             def swap(int i) -> int { if (i == 0) { return 1; } else { if (i == 1) { return 0; } else { return i; } } }",
        );
        let cfg = TypeConfig {
            int_bits: 3,
            ..TypeConfig::default()
        };
        let mut ev = PureEvaluator::new(&f);
        let e = bipartition(&mut ev, "split", "pair", RhymeType::QInt, 3, &cfg).unwrap_err();
        assert_eq!(e.kind, RuntimeErrorKind::Bipartition);
        assert!(e.message.contains("pair(1) = 0"), "{}", e.message);
        let e = bipartition(&mut ev, "same", "swap", RhymeType::QInt, 3, &cfg).unwrap_err();
        assert!(e.message.contains("both on the true side"), "{}", e.message);
    }

    #[test]
    fn phase_table_reduces_modulo() {
        let f = fns("def ident(int v) -> int { return v; }");
        let cfg = TypeConfig {
            int_bits: 5,
            ..TypeConfig::default()
        };
        let mut ev = PureEvaluator::new(&f);
        let t = phase_table(&mut ev, "ident", RhymeType::QInt, 5, &cfg, 4).unwrap();
        // pattern 30 decodes to -2, which is 2 mod 4
        assert!(t.entries.contains(&(1, 1)));
        assert!(t.entries.contains(&(30, 2)));
        assert!(!t.entries.iter().any(|(p, _)| *p == 4));
    }
}
