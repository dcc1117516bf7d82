//! A decoded SASS instruction line and its def/use sets.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::control::ControlCode;
use super::opcodes::{is_known_opcode, is_memory_opcode, is_store_opcode, is_sync_opcode};
use super::operand::{Operand, OperandKind, Register};

/// Guard predicate prefix, e.g. `@!P0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Guard {
    pub register: Register,
    pub negated: bool,
}

impl Guard {
    pub fn serialize(&self) -> String {
        format!("@{}{}", if self.negated { "!" } else { "" }, self.register.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub control: ControlCode,
    pub guard: Option<Guard>,
    /// Mnemonic root, e.g. `LDG` for `LDG.E.128`.
    pub opcode: String,
    /// Dot-separated suffixes in order, e.g. `["E", "128"]`.
    pub modifiers: Vec<String>,
    pub operands: Vec<Operand>,
    /// Registers written, pairs expanded.
    pub defs: BTreeSet<Register>,
    /// Registers read, pairs expanded; includes the guard register.
    pub uses: BTreeSet<Register>,
    /// Item index in the kernel at parse time; stable identity across swaps.
    pub line_index: usize,
}

impl Instruction {
    /// `LDG.E.128` — opcode root plus modifiers.
    pub fn qualified_opcode(&self) -> String {
        if self.modifiers.is_empty() {
            self.opcode.clone()
        } else {
            format!("{}.{}", self.opcode, self.modifiers.join("."))
        }
    }

    pub fn is_memory(&self) -> bool {
        is_memory_opcode(&self.opcode)
    }

    pub fn is_sync(&self) -> bool {
        is_sync_opcode(&self.opcode)
    }

    pub fn is_known_opcode(&self) -> bool {
        is_known_opcode(&self.opcode)
    }

    /// Variable-latency instructions resolve hazards via barriers; everything
    /// else is fixed-latency and resolves them via stall counts.
    pub fn is_variable_latency(&self) -> bool {
        self.is_memory() || self.control.read_barrier.is_some() || self.control.write_barrier.is_some()
    }

    /// Registers read through operands only (guard excluded); the set the
    /// producer scan of the analysis pass resolves.
    pub fn operand_uses(&self) -> BTreeSet<Register> {
        let mut guardless = self.uses.clone();
        if let Some(g) = self.guard {
            if !self.operand_reads_register(g.register) {
                guardless.remove(&g.register);
            }
        }
        guardless
    }

    fn operand_reads_register(&self, reg: Register) -> bool {
        // true when `reg` is read by an operand, not only by the guard
        let defs_first = self.first_def_slots();
        self.operands
            .iter()
            .enumerate()
            .any(|(i, op)| !defs_first.contains(&i) && op.registers.contains(&reg))
    }

    /// Operand slots that are destinations under the position convention:
    /// the leading register-like operand, plus up to two non-negated
    /// predicate slots directly after it (carry-out / flag destinations,
    /// e.g. `IADD3 R6, P0, -R2, R6, RZ` or `ISETP.GE.AND P0, PT, R4, ...`).
    fn first_def_slots(&self) -> Vec<usize> {
        if is_store_opcode(&self.opcode) || self.is_sync() || self.opcode == "LDGSTS" || self.opcode == "NOP" {
            return Vec::new();
        }
        let mut slots = Vec::new();
        let mut predicate_defs = 0usize;
        for (i, op) in self.operands.iter().enumerate() {
            let is_reg_like = matches!(
                op.kind,
                OperandKind::Register | OperandKind::UniformRegister | OperandKind::Predicate
            );
            if i == 0 {
                if !is_reg_like {
                    break;
                }
                slots.push(0);
                if op.kind == OperandKind::Predicate {
                    predicate_defs += 1;
                }
            } else if op.kind == OperandKind::Predicate
                && !op.raw_text.starts_with('!')
                && predicate_defs < 2
            {
                slots.push(i);
                predicate_defs += 1;
            } else {
                break;
            }
        }
        slots
    }

    /// Recomputes `defs`/`uses` from operands, guard, and opcode conventions.
    pub(crate) fn compute_def_use(&mut self) {
        let def_slots = self.first_def_slots();
        let mut defs = BTreeSet::new();
        let mut uses = BTreeSet::new();

        for (i, op) in self.operands.iter().enumerate() {
            if def_slots.contains(&i) {
                // destination slot: the base register (plus pair) is written,
                // memory-ref/descriptor reads cannot appear here
                for r in &op.registers {
                    if !r.is_constant() {
                        defs.insert(*r);
                    }
                }
            } else {
                for r in &op.registers {
                    if !r.is_constant() {
                        uses.insert(*r);
                    }
                }
            }
        }
        if let Some(g) = self.guard {
            if !g.register.is_constant() {
                uses.insert(g.register);
            }
        }
        self.defs = defs;
        self.uses = uses;
    }

    /// Parses one instruction line (control code mandatory, trailing `;`
    /// optional). `line_index` is recorded as the instruction's identity.
    pub fn parse(line: &str, line_index: usize) -> Result<Instruction, InstructionError> {
        let trimmed = line.trim();
        if !trimmed.starts_with('[') {
            return Err(InstructionError::new(line, "missing control code"));
        }
        let close = trimmed
            .find(']')
            .ok_or_else(|| InstructionError::new(line, "unbalanced control-code bracket"))?;
        let control = ControlCode::parse(&trimmed[..=close])
            .map_err(|e| InstructionError::new(line, e.reason))?;

        let mut rest = trimmed[close + 1..].trim();
        if let Some(stripped) = rest.strip_suffix(';') {
            rest = stripped.trim_end();
        }

        let mut guard = None;
        if let Some(after_at) = rest.strip_prefix('@') {
            let (token, tail) = split_token(after_at);
            let negated = token.starts_with('!');
            let reg_token = token.trim_start_matches('!');
            let register = Register::parse(reg_token)
                .ok_or_else(|| InstructionError::new(line, format!("bad guard predicate {token:?}")))?;
            guard = Some(Guard { register, negated });
            rest = tail.trim_start();
        }

        let (mnemonic, tail) = split_token(rest);
        if mnemonic.is_empty() {
            return Err(InstructionError::new(line, "missing opcode"));
        }
        let mut parts = mnemonic.split('.');
        let opcode = parts.next().unwrap().to_string();
        let modifiers: Vec<String> = parts.map(str::to_string).collect();

        let operand_text = tail.trim();
        let operands: Vec<Operand> = if operand_text.is_empty() {
            Vec::new()
        } else {
            operand_text
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(Operand::parse)
                .collect()
        };

        let mut inst = Instruction {
            control,
            guard,
            opcode,
            modifiers,
            operands,
            defs: BTreeSet::new(),
            uses: BTreeSet::new(),
            line_index,
        };
        inst.compute_def_use();
        Ok(inst)
    }

    /// Canonical text: single spaces between tokens, `, `-separated operands,
    /// ` ;` terminator.
    pub fn serialize(&self) -> String {
        let mut out = self.control.serialize();
        out.push(' ');
        if let Some(g) = &self.guard {
            out.push_str(&g.serialize());
            out.push(' ');
        }
        out.push_str(&self.qualified_opcode());
        if !self.operands.is_empty() {
            out.push(' ');
            let ops: Vec<&str> = self.operands.iter().map(|o| o.raw_text.as_str()).collect();
            out.push_str(&ops.join(", "));
        }
        out.push_str(" ;");
        out
    }
}

fn split_token(s: &str) -> (&str, &str) {
    match s.find(char::is_whitespace) {
        Some(i) => (&s[..i], &s[i..]),
        None => (s, ""),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstructionError {
    pub line: String,
    pub reason: String,
}

impl InstructionError {
    fn new(line: &str, reason: impl Into<String>) -> Self {
        InstructionError {
            line: line.to_string(),
            reason: reason.into(),
        }
    }
}

impl std::fmt::Display for InstructionError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "bad instruction {:?}: {}", self.line, self.reason)
    }
}

impl std::error::Error for InstructionError {}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(line: &str) -> Instruction {
        Instruction::parse(line, 0).unwrap()
    }

    fn regs(names: &[&str]) -> BTreeSet<Register> {
        names.iter().map(|n| Register::parse(n).unwrap()).collect()
    }

    #[test]
    fn ldg_with_paired_address() {
        let inst = parse("[B------:R-:W2:Y:S02] LDG.E R0, [R2.64] ;");
        assert_eq!(inst.opcode, "LDG");
        assert_eq!(inst.modifiers, vec!["E"]);
        assert_eq!(inst.control.write_barrier, Some(2));
        assert!(inst.control.yield_flag);
        assert_eq!(inst.control.stall_count, 2);
        assert!(inst.is_memory());
        assert_eq!(inst.defs, regs(&["R0"]));
        assert_eq!(inst.uses, regs(&["R2", "R3"]));
    }

    #[test]
    fn mov_immediate() {
        let inst = parse("[B------:R-:W-:-:S04] MOV R15, 0x1 ;");
        assert_eq!(inst.opcode, "MOV");
        assert_eq!(inst.control.stall_count, 4);
        assert_eq!(inst.defs, regs(&["R15"]));
        assert!(inst.uses.is_empty());
    }

    #[test]
    fn store_has_no_defs() {
        let inst = parse("[B------:R-:W-:-:S04] STG.E desc[UR4][R4.64], R15 ;");
        assert!(inst.defs.is_empty());
        assert_eq!(inst.uses, regs(&["R4", "R5", "R15", "UR4"]));
    }

    #[test]
    fn ldgsts_reads_both_addresses() {
        let inst =
            parse("[B------:R-:W0:-:S02] LDGSTS.E.BYPASS.128 [R219+0x4000], desc[UR16][R10.64], P0 ;");
        assert!(inst.is_memory());
        assert!(inst.defs.is_empty());
        assert_eq!(inst.uses, regs(&["R219", "R10", "R11", "UR16", "P0"]));
        assert_eq!(inst.operands[0].offset, Some(0x4000));
    }

    #[test]
    fn guard_predicate_is_a_use_not_an_operand() {
        let inst = parse("[B------:R-:W1:-:S01] @!P1 LDS.U R8, [R30] ;");
        let g = inst.guard.unwrap();
        assert!(g.negated);
        assert_eq!(g.register, Register::Predicate(1));
        assert_eq!(inst.operands.len(), 2);
        assert!(inst.uses.contains(&Register::Predicate(1)));
        // the guard is not part of the operand-resolved read set
        assert!(!inst.operand_uses().contains(&Register::Predicate(1)));
        assert!(inst.operand_uses().contains(&Register::General(30)));
    }

    #[test]
    fn carry_out_predicate_is_a_def() {
        let inst = parse("[B------:R-:W-:-:S04] IADD3 R6, P0, -R2, R6, RZ ;");
        assert_eq!(inst.defs, regs(&["R6", "P0"]));
        assert_eq!(inst.uses, regs(&["R2", "R6"]));
    }

    #[test]
    fn trailing_predicate_is_a_use() {
        let inst = parse("[B------:R-:W-:-:S04] SEL R5, R6, 0x1, !P0 ;");
        assert_eq!(inst.defs, regs(&["R5"]));
        assert_eq!(inst.uses, regs(&["R6", "P0"]));
    }

    #[test]
    fn setp_defines_leading_predicates() {
        let inst = parse("[B------:R-:W-:-:S04] ISETP.GE.AND P0, PT, R4, 0x1, PT ;");
        assert_eq!(inst.defs, regs(&["P0"]));
        assert_eq!(inst.uses, regs(&["R4"]));
    }

    #[test]
    fn unknown_opcode_is_accepted_verbatim() {
        let inst = parse("[B------:R-:W-:-:S01] FROBNICATE.X R1, R2 ;");
        assert_eq!(inst.opcode, "FROBNICATE");
        assert!(!inst.is_memory());
        assert!(!inst.is_known_opcode());
        assert_eq!(inst.defs, regs(&["R1"]));
    }

    #[test]
    fn serialize_round_trips_canonical_text() {
        for line in [
            "[B------:R-:W2:Y:S02] LDG.E R0, [R2.64] ;",
            "[B------:R-:W-:-:S04] MOV R15, 0x1 ;",
            "[B0-----:R-:W-:-:S04] @!P1 IADD3 R6, P0, -R2, R6, RZ ;",
            "[B------:R-:W-:-:S05] IMAD.WIDE R14, R84, R8, c[0x0][0x160] ;",
            "[B------:R-:W-:-:S01] EXIT ;",
        ] {
            let inst = Instruction::parse(line, 3).unwrap();
            assert_eq!(inst.serialize(), line);
            let again = Instruction::parse(&inst.serialize(), 3).unwrap();
            assert_eq!(again, inst);
        }
    }

    #[test]
    fn listing_style_without_spaces_parses() {
        let inst = Instruction::parse("[B------:R-:W-:-:S04]MOV R15, 0x1;", 0).unwrap();
        assert_eq!(inst.opcode, "MOV");
        assert_eq!(inst.serialize(), "[B------:R-:W-:-:S04] MOV R15, 0x1 ;");
    }

    #[test]
    fn malformed_lines_error() {
        assert!(Instruction::parse("MOV R15, 0x1 ;", 0).is_err());
        assert!(Instruction::parse("[B------:R-:W-:-:S04 MOV R15, 0x1 ;", 0).is_err());
        assert!(Instruction::parse("[B------:R-:W-:-:S04] ;", 0).is_err());
    }
}
