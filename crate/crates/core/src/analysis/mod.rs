//! Pre-game static analysis: stall-count inference, embedding-table
//! construction, memory-instruction enumeration with denylisting, and
//! detection of frozen LDGSTS groups.

pub mod dataflow;
pub mod stall_table;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::sass::{Instruction, Kernel, OperandKind};
use dataflow::{accumulated_stall, nearest_producer, InstructionSeq, ProducerLookup};
pub use stall_table::{Provenance, StallCountTable, TableEntry, TableIoError};

/// Dense ids in first-appearance order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IndexTable {
    names: Vec<String>,
}

impl IndexTable {
    pub fn insert(&mut self, name: &str) -> usize {
        match self.index_of(name) {
            Some(i) => i,
            None => {
                self.names.push(name.to_string());
                self.names.len() - 1
            }
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// How each fixed-latency-producer / memory-consumer pair was resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PairAccounting {
    pub builtin_pairs: usize,
    pub inferred_pairs: usize,
    pub denylisted_pairs: usize,
}

impl PairAccounting {
    pub fn total(&self) -> usize {
        self.builtin_pairs + self.inferred_pairs + self.denylisted_pairs
    }

    pub fn fractions(&self) -> (f64, f64, f64) {
        let total = self.total();
        if total == 0 {
            return (0.0, 0.0, 0.0);
        }
        let t = total as f64;
        (
            self.builtin_pairs as f64 / t,
            self.inferred_pairs as f64 / t,
            self.denylisted_pairs as f64 / t,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    /// Builtin table merged with schedule-inferred minima.
    pub stall_table: StallCountTable,
    /// Item indices of memory instructions excluded from the action space.
    pub denylist: BTreeSet<usize>,
    /// Item indices of reorderable memory instructions, in order; defines
    /// the action space size.
    pub memory_indices: Vec<usize>,
    pub register_table: IndexTable,
    pub memory_table: IndexTable,
    pub max_operands: usize,
    pub accounting: PairAccounting,
    /// Runs of LDGSTS instructions writing consecutive offsets off one base
    /// register; their members are never reordered.
    pub frozen_groups: Vec<Vec<usize>>,
}

impl AnalysisReport {
    pub fn frozen_members(&self) -> BTreeSet<usize> {
        self.frozen_groups.iter().flatten().copied().collect()
    }
}

/// Runs all pre-game passes on a kernel.
pub fn analyze(kernel: &Kernel, builtin: &StallCountTable) -> AnalysisReport {
    let (stall_table, denylist, accounting) = infer_stall_counts(kernel, builtin);
    let (register_table, memory_table, max_operands) = build_embedding_tables(kernel);
    let memory_indices = enumerate_memory_instructions(kernel, &denylist);
    let frozen_groups = ldgsts_groups(kernel);
    AnalysisReport {
        stall_table,
        denylist,
        memory_indices,
        register_table,
        memory_table,
        max_operands,
        accounting,
        frozen_groups,
    }
}

/// Stall-count inference: for every memory instruction, resolve the nearest
/// in-block producer of each operand register. Fixed-latency producers
/// contribute their accumulated stall separation as an inferred minimum
/// (merged by minimum); an unresolvable register (definition above the block
/// start, or an unknown-opcode producer) denylists the memory instruction and
/// aborts its scan.
pub fn infer_stall_counts(
    kernel: &Kernel,
    builtin: &StallCountTable,
) -> (StallCountTable, BTreeSet<usize>, PairAccounting) {
    let mut table = builtin.clone();
    let mut denylist = BTreeSet::new();
    let mut accounting = PairAccounting::default();

    for (idx, inst) in kernel.instructions() {
        if !inst.is_memory() {
            continue;
        }
        for reg in inst.operand_uses() {
            match nearest_producer(kernel, idx, reg) {
                ProducerLookup::NotInBlock => {
                    accounting.denylisted_pairs += 1;
                    denylist.insert(idx);
                    break;
                }
                ProducerLookup::Found(p_idx) => {
                    let producer = kernel.instruction_at(p_idx).unwrap();
                    if !producer.is_known_opcode() {
                        accounting.denylisted_pairs += 1;
                        denylist.insert(idx);
                        break;
                    }
                    if producer.is_variable_latency() {
                        // barrier-resolved dependency; not a stall pair
                        continue;
                    }
                    let key = producer.qualified_opcode();
                    if builtin.contains(&key) {
                        accounting.builtin_pairs += 1;
                    } else {
                        accounting.inferred_pairs += 1;
                    }
                    table.merge_inferred(&key, accumulated_stall(kernel, p_idx, idx));
                }
            }
        }
    }
    (table, denylist, accounting)
}

/// Embedding preparation: operand registers and memory-location tokens get
/// dense ids in first-appearance order, and the widest operand count is
/// recorded for padding.
pub fn build_embedding_tables(kernel: &Kernel) -> (IndexTable, IndexTable, usize) {
    let mut registers = IndexTable::default();
    let mut memory = IndexTable::default();
    let mut max_operands = 0;
    for (_, inst) in kernel.instructions() {
        max_operands = max_operands.max(inst.operands.len());
        for op in &inst.operands {
            match op.kind {
                OperandKind::Register | OperandKind::UniformRegister | OperandKind::Predicate => {
                    if let Some(base) = op.base_register {
                        registers.insert(&base.name());
                    }
                }
                OperandKind::MemoryRef | OperandKind::ConstantBank => {
                    memory.insert(&op.raw_text);
                }
                OperandKind::Immediate | OperandKind::Special => {}
            }
        }
    }
    (registers, memory, max_operands)
}

/// Reorderable memory instructions: all memory instructions minus the
/// denylist, in schedule order.
pub fn enumerate_memory_instructions(kernel: &Kernel, denylist: &BTreeSet<usize>) -> Vec<usize> {
    kernel
        .instructions()
        .filter(|(idx, inst)| inst.is_memory() && !denylist.contains(idx))
        .map(|(idx, _)| idx)
        .collect()
}

/// Detects frozen LDGSTS groups: within a block, maximal runs (over the
/// LDGSTS subsequence) whose destination addresses share one base register
/// with strictly increasing immediate offsets. Runs shorter than two are not
/// groups.
pub fn ldgsts_groups(kernel: &Kernel) -> Vec<Vec<usize>> {
    let mut groups = Vec::new();
    for block in &kernel.blocks {
        let members: Vec<(usize, &Instruction)> = (block.start..block.end)
            .filter_map(|i| kernel.instruction_at(i).map(|inst| (i, inst)))
            .filter(|(_, inst)| inst.opcode == "LDGSTS")
            .collect();
        let mut run: Vec<usize> = Vec::new();
        let mut last: Option<(crate::sass::Register, i64)> = None;
        for (idx, inst) in members {
            let dest = inst
                .operands
                .first()
                .filter(|op| op.kind == OperandKind::MemoryRef);
            let key = dest.and_then(|op| op.base_register.map(|r| (r, op.offset.unwrap_or(0))));
            let extends = match (key, last) {
                (Some((base, off)), Some((prev_base, prev_off))) => {
                    base == prev_base && off > prev_off
                }
                _ => false,
            };
            if extends {
                run.push(idx);
            } else {
                if run.len() >= 2 {
                    groups.push(std::mem::take(&mut run));
                } else {
                    run.clear();
                }
                if key.is_some() {
                    run.push(idx);
                }
            }
            last = key;
        }
        if run.len() >= 2 {
            groups.push(run);
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sass::parse_kernel;

    #[test]
    fn infers_producer_latency_from_separation() {
        // IADD3.X defines R6, one stall-1 instruction in between, then a
        // memory user: accumulated 4 + 1 = 5
        let k = parse_kernel(
            "[B------:R-:W-:-:S04] IADD3.X R6, R6, 0x4, RZ ;\n\
             [B------:R-:W-:-:S01] MOV R9, 0x0 ;\n\
             [B------:R-:W0:-:S02] LDG.E R4, [R6.64] ;\n",
        )
        .unwrap();
        let (table, denylist, acc) = infer_stall_counts(&k, &StallCountTable::empty());
        assert_eq!(table.lookup("IADD3.X"), Some(5));
        assert!(denylist.is_empty());
        // R6 resolved against IADD3.X, R7 (pair) also resolved against it
        assert_eq!(acc.inferred_pairs, 2);
    }

    #[test]
    fn builtin_minimum_wins_over_larger_observation() {
        let k = parse_kernel(
            "[B------:R-:W-:-:S04] IADD3 R6, R4, 0x4, RZ ;\n\
             [B------:R-:W-:-:S02] NOP ;\n\
             [B------:R-:W0:-:S02] LDG.E R4, [R6.64] ;\n",
        )
        .unwrap();
        let (table, _, acc) = infer_stall_counts(&k, &StallCountTable::builtin());
        assert_eq!(table.lookup("IADD3"), Some(4));
        assert_eq!(acc.builtin_pairs, 2);
        // R4 use feeding the IADD3 does not resolve in-block, but IADD3 is
        // not a memory instruction so nothing is denylisted
        assert!(acc.denylisted_pairs == 0);
    }

    #[test]
    fn definition_above_block_start_denylists() {
        let k = parse_kernel(
            "[B------:R-:W-:-:S04] MOV R2, 0x10 ;\n\
             .L_loop:\n\
             [B------:R-:W0:-:S02] LDG.E R4, [R2.64] ;\n",
        )
        .unwrap();
        let (_, denylist, acc) = infer_stall_counts(&k, &StallCountTable::builtin());
        assert_eq!(denylist, BTreeSet::from([2]));
        assert_eq!(acc.denylisted_pairs, 1);
    }

    #[test]
    fn unknown_opcode_producer_denylists() {
        let k = parse_kernel(
            "[B------:R-:W-:-:S04] FROBNICATE R2, 0x10 ;\n\
             [B------:R-:W0:-:S02] LDG.E R4, [R2.64] ;\n",
        )
        .unwrap();
        let (_, denylist, _) = infer_stall_counts(&k, &StallCountTable::builtin());
        assert_eq!(denylist, BTreeSet::from([1]));
    }

    #[test]
    fn variable_latency_producer_is_not_a_stall_pair() {
        let k = parse_kernel(
            "[B------:R-:W1:-:S02] LDG.E R2, [R8.64] ;\n\
             [B1-----:R-:W0:-:S02] LDG.E R4, [R2.64] ;\n",
        )
        .unwrap();
        // R8 is not defined in block -> first LDG untouched (not memory-use
        // resolution failure for the SECOND one); second LDG's R2 producer is
        // the first LDG: variable latency, no denylist, no pair
        let (_, denylist, acc) = infer_stall_counts(&k, &StallCountTable::builtin());
        assert_eq!(acc.builtin_pairs + acc.inferred_pairs, 0);
        // the first LDG itself fails to resolve R8 -> denylisted
        assert_eq!(denylist, BTreeSet::from([0]));
    }

    #[test]
    fn embedding_tables_first_appearance_order() {
        let k = parse_kernel(
            "[B------:R-:W-:-:S04] IADD3 R0, R2, R4, RZ ;\n\
             [B------:R-:W0:-:S02] LDG.E R2, [R0.64] ;\n\
             [B------:R-:W-:-:S04] MOV R4, c[0x0][0x160] ;\n",
        )
        .unwrap();
        let (regs, mem, max_ops) = build_embedding_tables(&k);
        assert_eq!(regs.names(), ["R0", "R2", "R4"]);
        assert_eq!(regs.index_of("R0"), Some(0));
        assert_eq!(regs.index_of("R2"), Some(1));
        assert_eq!(mem.names(), ["[R0.64]", "c[0x0][0x160]"]);
        assert_eq!(max_ops, 4);
    }

    #[test]
    fn empty_kernel_yields_empty_tables() {
        let k = parse_kernel("").unwrap();
        let (regs, mem, max_ops) = build_embedding_tables(&k);
        assert!(regs.is_empty());
        assert!(mem.is_empty());
        assert_eq!(max_ops, 0);
    }

    #[test]
    fn memory_enumeration_excludes_denylist() {
        let k = parse_kernel(
            "[B------:R-:W-:-:S04] MOV R2, 0x10 ;\n\
             [B------:R-:W0:-:S02] LDG.E R4, [R2.64] ;\n\
             [B------:R-:W1:-:S02] LDG.E R6, [R2.64] ;\n",
        )
        .unwrap();
        let deny = BTreeSet::from([2]);
        assert_eq!(enumerate_memory_instructions(&k, &deny), vec![1]);
        assert_eq!(
            enumerate_memory_instructions(&k, &BTreeSet::new()),
            vec![1, 2]
        );
    }

    #[test]
    fn ldgsts_group_detection_spans_interleaved_arithmetic() {
        let k = parse_kernel(
            "[B------:R-:W-:-:S04] MOV R219, 0x0 ;\n\
             [B------:R-:W-:-:S04] MOV R10, 0x0 ;\n\
             [B------:R-:W0:-:S02] LDGSTS.E.BYPASS.128 [R219+0x4000], desc[UR16][R10.64] ;\n\
             [B------:R-:W-:-:S05] IMAD.WIDE R18, R9, 0x80, R10 ;\n\
             [B------:R-:W0:-:S02] LDGSTS.E.BYPASS.128 [R219+0x4800], desc[UR16][R10.64] ;\n\
             [B------:R-:W0:-:S02] LDGSTS.E.BYPASS.128 [R219+0x5000], desc[UR16][R10.64] ;\n",
        )
        .unwrap();
        let groups = ldgsts_groups(&k);
        assert_eq!(groups, vec![vec![2, 4, 5]]);
    }

    #[test]
    fn ldgsts_runs_break_on_base_change_or_non_increasing_offset() {
        let k = parse_kernel(
            "[B------:R-:W0:-:S02] LDGSTS.E [R219+0x400], desc[UR16][R10.64] ;\n\
             [B------:R-:W0:-:S02] LDGSTS.E [R219+0x200], desc[UR16][R10.64] ;\n\
             [B------:R-:W0:-:S02] LDGSTS.E [R100+0x300], desc[UR16][R10.64] ;\n",
        )
        .unwrap();
        assert!(ldgsts_groups(&k).is_empty());
    }

    #[test]
    fn analyze_invariants_hold() {
        let k = parse_kernel(
            "[B------:R-:W-:-:S04] MOV R2, 0x10 ;\n\
             [B------:R-:W0:-:S02] LDG.E R4, [R2.64] ;\n\
             .L_1:\n\
             [B------:R-:W1:-:S02] LDG.E R6, [R2.64] ;\n",
        )
        .unwrap();
        let report = analyze(&k, &StallCountTable::builtin());
        // denylist and memory_indices partition the memory instructions
        assert!(report.denylist.iter().all(|i| !report.memory_indices.contains(i)));
        let all_memory: BTreeSet<usize> = k
            .instructions()
            .filter(|(_, i)| i.is_memory())
            .map(|(i, _)| i)
            .collect();
        let mut union: BTreeSet<usize> = report.memory_indices.iter().copied().collect();
        union.extend(&report.denylist);
        assert_eq!(union, all_memory);
        for (_, inst) in k.instructions() {
            assert!(report.max_operands >= inst.operands.len());
        }
        // determinism
        assert_eq!(report, analyze(&k, &StallCountTable::builtin()));
    }
}
