//! Classical and quantum types, compile-time widths, and the bijection
//! between classical values and basis-state bit patterns.
//!
//! Every quantum type is the quantum extension of one classical type; its
//! basis states are exactly the encodings of that classical type's values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bits per character slot (7-bit ASCII).
pub const CHAR_BITS: u32 = 7;

/// Compile-time widths for every numeric and text type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TypeConfig {
    pub int_bits: u32,
    pub float_total_bits: u32,
    pub float_frac_bits: u32,
    pub string_max_len: u32,
    pub ref_bits: u32,
}

impl Default for TypeConfig {
    fn default() -> Self {
        TypeConfig {
            int_bits: 16,
            float_total_bits: 16,
            float_frac_bits: 8,
            string_max_len: 3,
            ref_bits: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("malformed width override `{0}` (expected key=value)")]
    Malformed(String),
    #[error("unknown width key `{0}` (expected int, float, string or ref)")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("{0}")]
    Invariant(String),
}

impl TypeConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: &str| Err(ConfigError::Invariant(m.to_string()));
        if self.int_bits == 0 || self.int_bits > 62 {
            return fail("int width must be between 1 and 62 bits");
        }
        if self.float_total_bits == 0 || self.float_total_bits > 31 {
            return fail("float width must be between 1 and 31 bits");
        }
        if self.float_frac_bits >= self.float_total_bits {
            return fail("float fractional bits must be fewer than total bits");
        }
        if self.string_max_len == 0 || self.string_max_len > 8 {
            return fail("string length must be between 1 and 8 characters");
        }
        if self.ref_bits == 0 || self.ref_bits > 16 {
            return fail("ref width must be between 1 and 16 bits");
        }
        Ok(())
    }

    /// Applies overrides in the form `int=16,float=16.8,string=3,ref=4`.
    /// Keys may appear in any order; omitted keys keep their current value.
    pub fn with_overrides(mut self, list: &str) -> Result<Self, ConfigError> {
        for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| ConfigError::Malformed(part.to_string()))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || ConfigError::BadValue {
                key: key.to_string(),
                value: value.to_string(),
            };
            match key {
                "int" => self.int_bits = value.parse().map_err(|_| bad())?,
                "string" => self.string_max_len = value.parse().map_err(|_| bad())?,
                "ref" => self.ref_bits = value.parse().map_err(|_| bad())?,
                "float" => {
                    let (total, frac) = value.split_once('.').ok_or_else(bad)?;
                    self.float_total_bits = total.parse().map_err(|_| bad())?;
                    self.float_frac_bits = frac.parse().map_err(|_| bad())?;
                }
                other => return Err(ConfigError::UnknownKey(other.to_string())),
            }
        }
        self.validate()?;
        Ok(self)
    }

    /// Renders the config in the same syntax accepted by [`with_overrides`](Self::with_overrides).
    pub fn to_override_string(&self) -> String {
        format!(
            "int={},float={}.{},string={},ref={}",
            self.int_bits,
            self.float_total_bits,
            self.float_frac_bits,
            self.string_max_len,
            self.ref_bits
        )
    }
}

impl FromStr for TypeConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TypeConfig::default().with_overrides(s)
    }
}

/// A Rhyme type. Array lengths are `None` when only known at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RhymeType {
    Bit,
    BitArray(Option<u32>),
    Int,
    Float,
    Complex,
    Char,
    Str,
    Bool,
    Ref,
    QBit,
    QBitArray(Option<u32>),
    QInt,
    QFloat,
    QComplex,
    QChar,
    QString,
    QBool,
    QRef,
}

impl RhymeType {
    pub fn is_quantum(self) -> bool {
        matches!(
            self,
            RhymeType::QBit
                | RhymeType::QBitArray(_)
                | RhymeType::QInt
                | RhymeType::QFloat
                | RhymeType::QComplex
                | RhymeType::QChar
                | RhymeType::QString
                | RhymeType::QBool
                | RhymeType::QRef
        )
    }

    pub fn classical_counterpart(self) -> RhymeType {
        match self {
            RhymeType::QBit => RhymeType::Bit,
            RhymeType::QBitArray(n) => RhymeType::BitArray(n),
            RhymeType::QInt => RhymeType::Int,
            RhymeType::QFloat => RhymeType::Float,
            RhymeType::QComplex => RhymeType::Complex,
            RhymeType::QChar => RhymeType::Char,
            RhymeType::QString => RhymeType::Str,
            RhymeType::QBool => RhymeType::Bool,
            RhymeType::QRef => RhymeType::Ref,
            classical => classical,
        }
    }

    pub fn quantum_counterpart(self) -> RhymeType {
        match self {
            RhymeType::Bit => RhymeType::QBit,
            RhymeType::BitArray(n) => RhymeType::QBitArray(n),
            RhymeType::Int => RhymeType::QInt,
            RhymeType::Float => RhymeType::QFloat,
            RhymeType::Complex => RhymeType::QComplex,
            RhymeType::Char => RhymeType::QChar,
            RhymeType::Str => RhymeType::QString,
            RhymeType::Bool => RhymeType::QBool,
            RhymeType::Ref => RhymeType::QRef,
            quantum => quantum,
        }
    }

    /// Width in qubits of the quantum counterpart; `None` for arrays of unknown length.
    pub fn width(self, cfg: &TypeConfig) -> Option<u32> {
        Some(match self.quantum_counterpart() {
            RhymeType::QBit | RhymeType::QBool => 1,
            RhymeType::QBitArray(n) => return n,
            RhymeType::QInt => cfg.int_bits,
            RhymeType::QFloat => cfg.float_total_bits,
            RhymeType::QComplex => 2 * cfg.float_total_bits,
            RhymeType::QChar => CHAR_BITS,
            RhymeType::QString => CHAR_BITS * cfg.string_max_len,
            RhymeType::QRef => cfg.ref_bits,
            _ => unreachable!("quantum_counterpart returns a quantum type"),
        })
    }

    pub fn keyword(self) -> &'static str {
        match self {
            RhymeType::Bit | RhymeType::BitArray(_) => "bit",
            RhymeType::Int => "int",
            RhymeType::Float => "float",
            RhymeType::Complex => "complex",
            RhymeType::Char => "char",
            RhymeType::Str => "string",
            RhymeType::Bool => "bool",
            RhymeType::Ref => "ref",
            RhymeType::QBit | RhymeType::QBitArray(_) => "qbit",
            RhymeType::QInt => "qint",
            RhymeType::QFloat => "qfloat",
            RhymeType::QComplex => "qcomplex",
            RhymeType::QChar => "qchar",
            RhymeType::QString => "qstring",
            RhymeType::QBool => "qbool",
            RhymeType::QRef => "qref",
        }
    }

    pub fn from_keyword(kw: &str) -> Option<RhymeType> {
        Some(match kw {
            "bit" => RhymeType::Bit,
            "int" => RhymeType::Int,
            "float" => RhymeType::Float,
            "complex" => RhymeType::Complex,
            "char" => RhymeType::Char,
            "string" => RhymeType::Str,
            "bool" => RhymeType::Bool,
            "ref" => RhymeType::Ref,
            "qbit" => RhymeType::QBit,
            "qint" => RhymeType::QInt,
            "qfloat" => RhymeType::QFloat,
            "qcomplex" => RhymeType::QComplex,
            "qchar" => RhymeType::QChar,
            "qstring" => RhymeType::QString,
            "qbool" => RhymeType::QBool,
            "qref" => RhymeType::QRef,
            _ => return None,
        })
    }

    pub fn is_array(self) -> bool {
        matches!(self, RhymeType::BitArray(_) | RhymeType::QBitArray(_))
    }

    /// The array type with this element type (`bit` -> `bit[]`).
    pub fn array_of(self) -> Option<RhymeType> {
        match self {
            RhymeType::Bit => Some(RhymeType::BitArray(None)),
            RhymeType::QBit => Some(RhymeType::QBitArray(None)),
            _ => None,
        }
    }
}

impl fmt::Display for RhymeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())?;
        if self.is_array() {
            f.write_str("[]")?;
        }
        Ok(())
    }
}

/// Target of a `ref`/`qref`: a symbol-table index. Quantum addresses are the
/// dense declaration-order indices of quantum variables; those are the only
/// addresses that have a basis encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Address {
    Quantum(u64),
    Classical(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassicalValue {
    Bit(u8),
    Bits(Vec<u8>),
    Int(i64),
    Float(f64),
    Complex(f64, f64),
    Char(u8),
    Str(String),
    Bool(bool),
    Ref(Address),
}

impl ClassicalValue {
    pub fn type_of(&self) -> RhymeType {
        match self {
            ClassicalValue::Bit(_) => RhymeType::Bit,
            ClassicalValue::Bits(b) => RhymeType::BitArray(Some(b.len() as u32)),
            ClassicalValue::Int(_) => RhymeType::Int,
            ClassicalValue::Float(_) => RhymeType::Float,
            ClassicalValue::Complex(..) => RhymeType::Complex,
            ClassicalValue::Char(_) => RhymeType::Char,
            ClassicalValue::Str(_) => RhymeType::Str,
            ClassicalValue::Bool(_) => RhymeType::Bool,
            ClassicalValue::Ref(_) => RhymeType::Ref,
        }
    }
}

/// Formats a real number the way `print` shows it: shortest round-trip form.
pub(crate) fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x}")
}

impl fmt::Display for ClassicalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassicalValue::Bit(b) => write!(f, "{b}"),
            ClassicalValue::Bits(bits) => {
                f.write_str("[")?;
                for (i, b) in bits.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{b}")?;
                }
                f.write_str("]")
            }
            ClassicalValue::Int(i) => write!(f, "{i}"),
            ClassicalValue::Float(x) => f.write_str(&format_real(*x)),
            ClassicalValue::Complex(re, im) => {
                if *im < 0.0 {
                    write!(f, "{}-{}i", format_real(*re), format_real(-im))
                } else {
                    write!(f, "{}+{}i", format_real(*re), format_real(*im))
                }
            }
            ClassicalValue::Char(c) => write!(f, "{}", *c as char),
            ClassicalValue::Str(s) => f.write_str(s),
            ClassicalValue::Bool(b) => write!(f, "{b}"),
            ClassicalValue::Ref(Address::Quantum(i)) => write!(f, "&q{i}"),
            ClassicalValue::Ref(Address::Classical(i)) => write!(f, "&c{i}"),
        }
    }
}

/// Bit pattern labeling one basis state of a register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisIndex(pub u64);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncodeError {
    #[error("integer {value} is outside the {bits}-bit two's-complement range")]
    IntOutOfRange { value: i64, bits: u32 },
    #[error("float {value} is outside the representable fixed-point range")]
    FloatOutOfRange { value: f64 },
    #[error("string \"{value}\" is longer than the maximum of {max} characters")]
    StringTooLong { value: String, max: u32 },
    #[error("character code {0} is outside 7-bit ASCII")]
    NonAscii(u32),
    #[error("address {0} does not fit the ref width")]
    AddressOutOfRange(u64),
    #[error("classical addresses have no basis encoding")]
    ClassicalAddress,
    #[error("bit array of length {got} does not match register width {expected}")]
    ArrayLength { got: usize, expected: u32 },
    #[error("value of type {value} cannot be encoded as {target}")]
    TypeMismatch { value: RhymeType, target: RhymeType },
    #[error("type {0} has no fixed width")]
    UnknownWidth(RhymeType),
    #[error("dimension() requires a quantum type, found {0}")]
    NotQuantum(RhymeType),
}

/// Result of encoding: the pattern plus whether the value had to be rounded
/// onto the fixed-point grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Encoded {
    pub index: BasisIndex,
    pub rounded: bool,
}

fn mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

fn sign_extend(raw: u64, bits: u32) -> i64 {
    let shift = 64 - bits;
    ((raw << shift) as i64) >> shift
}

fn encode_twos(value: i64, bits: u32) -> Result<u64, EncodeError> {
    let lo = -(1i64 << (bits - 1));
    let hi = (1i64 << (bits - 1)) - 1;
    if value < lo || value > hi {
        return Err(EncodeError::IntOutOfRange { value, bits });
    }
    Ok((value as u64) & mask(bits))
}

/// Wraps an integer into the `bits`-wide two's-complement range.
pub fn wrap_int(value: i64, bits: u32) -> i64 {
    sign_extend((value as u64) & mask(bits), bits)
}

fn encode_fixed(value: f64, cfg: &TypeConfig) -> Result<(u64, bool), EncodeError> {
    if !value.is_finite() {
        return Err(EncodeError::FloatOutOfRange { value });
    }
    let scale = (1u64 << cfg.float_frac_bits) as f64;
    let scaled = value * scale;
    let raw = scaled.round();
    let bits = cfg.float_total_bits;
    let lo = -((1i64 << (bits - 1)) as f64);
    let hi = ((1i64 << (bits - 1)) - 1) as f64;
    if raw < lo || raw > hi {
        return Err(EncodeError::FloatOutOfRange { value });
    }
    Ok(((raw as i64 as u64) & mask(bits), raw != scaled))
}

fn decode_fixed(pattern: u64, cfg: &TypeConfig) -> f64 {
    let raw = sign_extend(pattern & mask(cfg.float_total_bits), cfg.float_total_bits);
    raw as f64 / (1u64 << cfg.float_frac_bits) as f64
}

/// Encodes a classical value as a basis pattern of type `t` (classical or quantum).
pub fn encode(
    value: &ClassicalValue,
    t: RhymeType,
    cfg: &TypeConfig,
) -> Result<Encoded, EncodeError> {
    let exact = |p: u64| Encoded {
        index: BasisIndex(p),
        rounded: false,
    };
    let target = t.classical_counterpart();
    let mismatch = || EncodeError::TypeMismatch {
        value: value.type_of(),
        target,
    };
    match (target, value) {
        (RhymeType::Bit, ClassicalValue::Bit(b)) => Ok(exact(u64::from(*b & 1))),
        (RhymeType::Bit, ClassicalValue::Int(i)) if *i == 0 || *i == 1 => Ok(exact(*i as u64)),
        (RhymeType::Bool, ClassicalValue::Bool(b)) => Ok(exact(u64::from(*b))),
        (RhymeType::BitArray(n), ClassicalValue::Bits(bits)) => {
            if let Some(n) = n {
                if bits.len() != n as usize {
                    return Err(EncodeError::ArrayLength {
                        got: bits.len(),
                        expected: n,
                    });
                }
            }
            let p = bits
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, b)| acc | (u64::from(*b & 1) << i));
            Ok(exact(p))
        }
        (RhymeType::Int, ClassicalValue::Int(i)) => Ok(exact(encode_twos(*i, cfg.int_bits)?)),
        (RhymeType::Int, ClassicalValue::Bit(b)) => Ok(exact(u64::from(*b))),
        (RhymeType::Float, v) => {
            let x = match v {
                ClassicalValue::Float(x) => *x,
                ClassicalValue::Int(i) => *i as f64,
                _ => return Err(mismatch()),
            };
            let (p, rounded) = encode_fixed(x, cfg)?;
            Ok(Encoded {
                index: BasisIndex(p),
                rounded,
            })
        }
        (RhymeType::Complex, v) => {
            let (re, im) = match v {
                ClassicalValue::Complex(re, im) => (*re, *im),
                ClassicalValue::Float(x) => (*x, 0.0),
                ClassicalValue::Int(i) => (*i as f64, 0.0),
                _ => return Err(mismatch()),
            };
            let (pr, rr) = encode_fixed(re, cfg)?;
            let (pi, ri) = encode_fixed(im, cfg)?;
            Ok(Encoded {
                index: BasisIndex((pr << cfg.float_total_bits) | pi),
                rounded: rr || ri,
            })
        }
        (RhymeType::Char, ClassicalValue::Char(c)) => {
            if *c >= 128 {
                return Err(EncodeError::NonAscii(u32::from(*c)));
            }
            Ok(exact(u64::from(*c)))
        }
        (RhymeType::Str, ClassicalValue::Str(s)) => {
            let max = cfg.string_max_len;
            if s.len() > max as usize {
                return Err(EncodeError::StringTooLong {
                    value: s.clone(),
                    max,
                });
            }
            let mut p = 0u64;
            let bytes = s.as_bytes();
            for slot in 0..max as usize {
                let c = bytes.get(slot).copied().unwrap_or(0);
                if c >= 128 {
                    return Err(EncodeError::NonAscii(u32::from(c)));
                }
                p = (p << CHAR_BITS) | u64::from(c);
            }
            Ok(exact(p))
        }
        (RhymeType::Ref, ClassicalValue::Ref(Address::Quantum(id))) => {
            if *id > mask(cfg.ref_bits) {
                return Err(EncodeError::AddressOutOfRange(*id));
            }
            Ok(exact(*id))
        }
        (RhymeType::Ref, ClassicalValue::Ref(Address::Classical(_))) => {
            Err(EncodeError::ClassicalAddress)
        }
        _ => Err(mismatch()),
    }
}

/// Decodes a basis pattern of type `t`. Total: every pattern decodes.
///
/// Strings drop trailing NUL slots only; an interior NUL is kept as a `\0`
/// character so that `encode(decode(b)) == b` holds for every pattern.
pub fn decode(index: BasisIndex, t: RhymeType, cfg: &TypeConfig) -> ClassicalValue {
    let p = index.0;
    match t.classical_counterpart() {
        RhymeType::Bit => ClassicalValue::Bit((p & 1) as u8),
        RhymeType::Bool => ClassicalValue::Bool(p & 1 == 1),
        RhymeType::BitArray(n) => {
            let n = n.unwrap_or(64 - p.leading_zeros());
            ClassicalValue::Bits((0..n).map(|i| ((p >> i) & 1) as u8).collect())
        }
        RhymeType::Int => ClassicalValue::Int(sign_extend(p & mask(cfg.int_bits), cfg.int_bits)),
        RhymeType::Float => ClassicalValue::Float(decode_fixed(p, cfg)),
        RhymeType::Complex => ClassicalValue::Complex(
            decode_fixed(p >> cfg.float_total_bits, cfg),
            decode_fixed(p, cfg),
        ),
        RhymeType::Char => ClassicalValue::Char((p & mask(CHAR_BITS)) as u8),
        RhymeType::Str => {
            let max = cfg.string_max_len;
            let mut bytes: Vec<u8> = (0..max)
                .map(|slot| ((p >> (CHAR_BITS * (max - 1 - slot))) & mask(CHAR_BITS)) as u8)
                .collect();
            while bytes.last() == Some(&0) {
                bytes.pop();
            }
            ClassicalValue::Str(bytes.into_iter().map(char::from).collect())
        }
        RhymeType::Ref => ClassicalValue::Ref(Address::Quantum(p & mask(cfg.ref_bits))),
        _ => unreachable!("classical_counterpart returns a classical type"),
    }
}

/// Number of basis states of a quantum type: `2^width`.
pub fn dimension(t: RhymeType, cfg: &TypeConfig) -> Result<u64, EncodeError> {
    if !t.is_quantum() {
        return Err(EncodeError::NotQuantum(t));
    }
    let w = t.width(cfg).ok_or(EncodeError::UnknownWidth(t))?;
    Ok(1u64 << w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> TypeConfig {
        TypeConfig::default()
    }

    fn enc(v: ClassicalValue, t: RhymeType) -> u64 {
        encode(&v, t, &cfg()).unwrap().index.0
    }

    #[test]
    fn int_fifteen_is_low_nibble() {
        assert_eq!(enc(ClassicalValue::Int(15), RhymeType::QInt), 0x000F);
        assert_eq!(
            decode(BasisIndex(0x000F), RhymeType::QInt, &cfg()),
            ClassicalValue::Int(15)
        );
    }

    #[test]
    fn one_sixty_fits_default_int() {
        let p = enc(ClassicalValue::Int(160), RhymeType::QInt);
        assert_eq!(decode(BasisIndex(p), RhymeType::QInt, &cfg()), ClassicalValue::Int(160));
    }

    #[test]
    fn negative_ints_are_twos_complement() {
        assert_eq!(enc(ClassicalValue::Int(-1), RhymeType::QInt), 0xFFFF);
        assert_eq!(enc(ClassicalValue::Int(-32768), RhymeType::QInt), 0x8000);
        assert!(matches!(
            encode(&ClassicalValue::Int(32768), RhymeType::QInt, &cfg()),
            Err(EncodeError::IntOutOfRange { .. })
        ));
    }

    #[test]
    fn bit_zero_is_identity() {
        assert_eq!(enc(ClassicalValue::Bit(0), RhymeType::QBit), 0);
        assert_eq!(enc(ClassicalValue::Bit(1), RhymeType::QBit), 1);
    }

    #[test]
    fn string_slots_are_msb_first_and_nul_padded() {
        assert_eq!(
            enc(ClassicalValue::Str("AB".into()), RhymeType::QString),
            (65 << 14) | (66 << 7)
        );
        assert_eq!(
            decode(BasisIndex(0), RhymeType::QString, &cfg()),
            ClassicalValue::Str(String::new())
        );
        assert!(matches!(
            encode(&ClassicalValue::Str("ABCD".into()), RhymeType::QString, &cfg()),
            Err(EncodeError::StringTooLong { .. })
        ));
    }

    // Independent oracle: pack characters by base-128 positional arithmetic.
    fn pack_oracle(s: &str, max: usize) -> u64 {
        let mut digits: Vec<u64> = s.bytes().map(u64::from).collect();
        digits.resize(max, 0);
        digits.iter().fold(0, |acc, d| acc * 128 + d)
    }

    #[test]
    fn string_pack_matches_positional_oracle() {
        let alphabet = ['A', 'B', 'C'];
        let mut strings = vec![];
        for a in alphabet {
            strings.push(a.to_string());
            for b in alphabet {
                strings.push(format!("{a}{b}"));
                for c in alphabet {
                    strings.push(format!("{a}{b}{c}"));
                }
            }
        }
        assert_eq!(strings.len(), 39);
        for s in strings {
            let p = enc(ClassicalValue::Str(s.clone()), RhymeType::QString);
            assert_eq!(p, pack_oracle(&s, 3), "{s}");
            assert_eq!(
                decode(BasisIndex(p), RhymeType::QString, &cfg()),
                ClassicalValue::Str(s)
            );
        }
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn fixed_point_rounds_to_grid() {
        let e = encode(&ClassicalValue::Float(3.14159), RhymeType::QFloat, &cfg()).unwrap();
        assert!(e.rounded);
        assert_eq!(e.index.0, 804);
        assert_eq!(
            decode(e.index, RhymeType::QFloat, &cfg()),
            ClassicalValue::Float(3.140625)
        );
        let e = encode(&ClassicalValue::Float(2.5), RhymeType::QFloat, &cfg()).unwrap();
        assert!(!e.rounded);
        assert!(encode(&ClassicalValue::Float(200.0), RhymeType::QFloat, &cfg()).is_err());
    }

    #[test]
    fn complex_real_part_is_high_half() {
        let e = encode(&ClassicalValue::Complex(1.0, -1.0), RhymeType::QComplex, &cfg()).unwrap();
        assert_eq!(e.index.0 >> 16, 256);
        assert_eq!(e.index.0 & 0xFFFF, 0xFF00);
    }

    #[test]
    fn char_rejects_non_ascii() {
        assert!(matches!(
            encode(&ClassicalValue::Char(200), RhymeType::QChar, &cfg()),
            Err(EncodeError::NonAscii(200))
        ));
    }

    #[test]
    fn dimensions() {
        assert_eq!(dimension(RhymeType::QChar, &cfg()).unwrap(), 128);
        assert_eq!(dimension(RhymeType::QBit, &cfg()).unwrap(), 2);
        assert_eq!(dimension(RhymeType::QString, &cfg()).unwrap(), 1 << 21);
        assert!(dimension(RhymeType::Int, &cfg()).is_err());
    }

    #[test]
    fn widths_follow_config() {
        let c = cfg();
        assert_eq!(RhymeType::QComplex.width(&c), Some(32));
        assert_eq!(RhymeType::QString.width(&c), Some(21));
        assert_eq!(RhymeType::QRef.width(&c), Some(4));
        assert_eq!(RhymeType::QBitArray(None).width(&c), None);
    }

    #[test]
    fn override_syntax() {
        let c: TypeConfig = "int=8,float=12.4,string=2,ref=3".parse().unwrap();
        assert_eq!(c.int_bits, 8);
        assert_eq!((c.float_total_bits, c.float_frac_bits), (12, 4));
        assert_eq!(c.string_max_len, 2);
        assert_eq!(c.ref_bits, 3);
        assert_eq!(c.to_override_string(), "int=8,float=12.4,string=2,ref=3");
        assert!("float=8.8".parse::<TypeConfig>().is_err());
        assert!("depth=3".parse::<TypeConfig>().is_err());
        assert!("int".parse::<TypeConfig>().is_err());
    }

    fn roundtrip_all(t: RhymeType, c: &TypeConfig) {
        let w = t.width(c).unwrap();
        for p in 0..(1u64 << w) {
            let v = decode(BasisIndex(p), t, c);
            assert_eq!(encode(&v, t, c).unwrap().index.0, p, "{t} pattern {p}");
        }
    }

    #[test]
    fn exhaustive_bijection_small_types() {
        let c = cfg();
        roundtrip_all(RhymeType::QChar, &c);
        roundtrip_all(RhymeType::QBool, &c);
        roundtrip_all(RhymeType::QBit, &c);
        let c8 = TypeConfig {
            int_bits: 8,
            ..cfg()
        };
        roundtrip_all(RhymeType::QInt, &c8);
        for v in -128..128 {
            let p = encode(&ClassicalValue::Int(v), RhymeType::QInt, &c8).unwrap().index;
            assert_eq!(decode(p, RhymeType::QInt, &c8), ClassicalValue::Int(v));
        }
    }

    proptest! {
        #[test]
        fn float_and_complex_patterns_are_fixed_points(p in 0u64..(1 << 16), q in 0u64..(1 << 32)) {
            let c = cfg();
            let v = decode(BasisIndex(p), RhymeType::QFloat, &c);
            let e = encode(&v, RhymeType::QFloat, &c).unwrap();
            prop_assert_eq!(e.index.0, p);
            prop_assert!(!e.rounded);
            let v = decode(BasisIndex(q), RhymeType::QComplex, &c);
            prop_assert_eq!(encode(&v, RhymeType::QComplex, &c).unwrap().index.0, q);
        }

        #[test]
        fn string_patterns_roundtrip(p in 0u64..(1 << 21)) {
            let c = cfg();
            let v = decode(BasisIndex(p), RhymeType::QString, &c);
            prop_assert_eq!(encode(&v, RhymeType::QString, &c).unwrap().index.0, p);
        }

        #[test]
        fn complex_width_doubles_float(total in 2u32..20, frac in 0u32..20) {
            prop_assume!(frac < total);
            let c = TypeConfig { float_total_bits: total, float_frac_bits: frac, ..cfg() };
            prop_assert_eq!(
                RhymeType::QComplex.width(&c).unwrap(),
                2 * RhymeType::QFloat.width(&c).unwrap()
            );
        }
    }
}
