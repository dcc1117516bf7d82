//! Operand decoding and register identities.

use serde::{Deserialize, Serialize};

use super::opcodes::{adjacent_register, RZ_NUMBER};

/// A register identity usable in def/use sets. The zero/true registers
/// (RZ, URZ, PT, UPT) are represented but excluded from dependency tracking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Register {
    General(u16),
    Uniform(u16),
    Predicate(u16),
    UniformPredicate(u16),
}

pub const PT_NUMBER: u16 = 7;

impl Register {
    /// RZ / URZ / PT / UPT carry constant values, so they never create
    /// dependencies.
    pub fn is_constant(&self) -> bool {
        match *self {
            Register::General(n) | Register::Uniform(n) => n == RZ_NUMBER,
            Register::Predicate(n) | Register::UniformPredicate(n) => n == PT_NUMBER,
        }
    }

    /// The other half of a 64-bit pair, when one exists for this class.
    pub fn pair(&self) -> Option<Register> {
        match *self {
            Register::General(n) => adjacent_register(n).ok().map(Register::General),
            Register::Uniform(n) => adjacent_register(n).ok().map(Register::Uniform),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Register::General(RZ_NUMBER) => "RZ".to_string(),
            Register::General(n) => format!("R{n}"),
            Register::Uniform(RZ_NUMBER) => "URZ".to_string(),
            Register::Uniform(n) => format!("UR{n}"),
            Register::Predicate(PT_NUMBER) => "PT".to_string(),
            Register::Predicate(n) => format!("P{n}"),
            Register::UniformPredicate(PT_NUMBER) => "UPT".to_string(),
            Register::UniformPredicate(n) => format!("UP{n}"),
        }
    }

    /// Parses a bare register token ("R4", "URZ", "!P0", "-R2"), ignoring
    /// sign/negation decorations. Returns None for non-register tokens.
    pub fn parse(token: &str) -> Option<Register> {
        let t = token
            .trim_start_matches(['-', '!', '~', '|'])
            .trim_end_matches('|');
        match t {
            "RZ" => return Some(Register::General(RZ_NUMBER)),
            "URZ" => return Some(Register::Uniform(RZ_NUMBER)),
            "PT" => return Some(Register::Predicate(PT_NUMBER)),
            "UPT" => return Some(Register::UniformPredicate(PT_NUMBER)),
            _ => {}
        }
        let (class, digits) = if let Some(rest) = t.strip_prefix("UR") {
            (Register::Uniform as fn(u16) -> Register, rest)
        } else if let Some(rest) = t.strip_prefix("UP") {
            (Register::UniformPredicate as fn(u16) -> Register, rest)
        } else if let Some(rest) = t.strip_prefix('R') {
            (Register::General as fn(u16) -> Register, rest)
        } else if let Some(rest) = t.strip_prefix('P') {
            (Register::Predicate as fn(u16) -> Register, rest)
        } else {
            return None;
        };
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        digits.parse::<u16>().ok().filter(|&n| n <= 255).map(class)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperandKind {
    Register,
    UniformRegister,
    Predicate,
    Immediate,
    MemoryRef,
    ConstantBank,
    Special,
}

/// One decoded operand. `raw_text` keeps the original token for lossless
/// serialization; registers referenced anywhere in the token (address bases,
/// descriptors) are collected in `registers` with 64-bit pairs expanded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Operand {
    pub kind: OperandKind,
    pub base_register: Option<Register>,
    pub paired_register: Option<Register>,
    /// Every register the token touches, pairs included.
    pub registers: Vec<Register>,
    /// Immediate byte offset of a memory reference ("[R219+0x4000]").
    pub offset: Option<i64>,
    pub raw_text: String,
}

impl Operand {
    pub fn parse(token: &str) -> Operand {
        let raw = token.trim().to_string();
        let t = raw.as_str();

        if t.starts_with('[') || t.starts_with("desc[") {
            return parse_memory_ref(&raw);
        }
        if t.starts_with("c[") || t.starts_with("cx[") {
            return Operand {
                kind: OperandKind::ConstantBank,
                base_register: None,
                paired_register: None,
                registers: Vec::new(),
                offset: None,
                raw_text: raw,
            };
        }
        if is_immediate(t) {
            return Operand {
                kind: OperandKind::Immediate,
                base_register: None,
                paired_register: None,
                registers: Vec::new(),
                offset: None,
                raw_text: raw,
            };
        }
        if let Some((reg, paired)) = parse_register_token(t) {
            let kind = match reg {
                Register::General(_) => OperandKind::Register,
                Register::Uniform(_) => OperandKind::UniformRegister,
                Register::Predicate(_) | Register::UniformPredicate(_) => OperandKind::Predicate,
            };
            let mut registers = vec![reg];
            registers.extend(paired);
            return Operand {
                kind,
                base_register: Some(reg),
                paired_register: paired,
                registers,
                offset: None,
                raw_text: raw,
            };
        }
        Operand {
            kind: OperandKind::Special,
            base_register: None,
            paired_register: None,
            registers: Vec::new(),
            offset: None,
            raw_text: raw,
        }
    }
}

/// Splits a register token into (register, 64-bit partner). The partner is
/// present exactly when the token carries the `.64` suffix and the register
/// class has pairs.
fn parse_register_token(token: &str) -> Option<(Register, Option<Register>)> {
    let stripped = token
        .trim_start_matches(['-', '!', '~', '|'])
        .trim_end_matches('|');
    let mut parts = stripped.split('.');
    let base = parts.next()?;
    let reg = Register::parse(base)?;
    let has_64 = parts.any(|suffix| suffix == "64");
    let paired = if has_64 { reg.pair() } else { None };
    Some((reg, paired))
}

fn is_immediate(t: &str) -> bool {
    let body = t.strip_prefix('-').unwrap_or(t);
    if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        return !hex.is_empty() && hex.bytes().all(|b| b.is_ascii_hexdigit());
    }
    if body.is_empty() {
        return false;
    }
    // decimal or simple float literal
    body.bytes().all(|b| b.is_ascii_digit() || b == b'.')
        && body.bytes().any(|b| b.is_ascii_digit())
}

/// Memory references: `[R2.64]`, `[R219+0x4000]`, `desc[UR16][R10.64]`.
/// The base register is the one inside the final bracket group; descriptor
/// registers join `registers` as additional reads.
fn parse_memory_ref(raw: &str) -> Operand {
    let mut registers = Vec::new();
    let mut base_register = None;
    let mut paired_register = None;
    let mut offset = None;

    let mut groups = Vec::new();
    let mut rest = raw;
    while let Some(open) = rest.find('[') {
        match rest[open..].find(']') {
            Some(close_rel) => {
                groups.push(&rest[open + 1..open + close_rel]);
                rest = &rest[open + close_rel + 1..];
            }
            None => break,
        }
    }

    for (gi, group) in groups.iter().enumerate() {
        let is_last = gi + 1 == groups.len();
        for part in group.split('+') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            if is_immediate(part) {
                if is_last {
                    offset = parse_int(part);
                }
                continue;
            }
            if let Some((reg, paired)) = parse_register_token(part) {
                registers.push(reg);
                registers.extend(paired);
                if is_last && base_register.is_none() {
                    base_register = Some(reg);
                    paired_register = paired;
                }
            }
        }
    }

    Operand {
        kind: OperandKind::MemoryRef,
        base_register,
        paired_register,
        registers,
        offset,
        raw_text: raw.to_string(),
    }
}

fn parse_int(t: &str) -> Option<i64> {
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let value = if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        i64::from_str_radix(hex, 16).ok()?
    } else {
        body.parse::<i64>().ok()?
    };
    Some(if neg { -value } else { value })
}
