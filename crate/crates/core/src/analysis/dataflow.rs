//! Def/use scans over an instruction sequence, shared by the analysis
//! passes, the action mask, and the dataflow oracle.

use crate::sass::{Instruction, Item, Kernel, Register};

/// Read access to an ordered item sequence with block bounds. Implemented by
/// `Kernel` directly and by `SwappedView` for evaluating a hypothetical
/// adjacent swap without mutating the kernel.
pub trait InstructionSeq {
    fn item_count(&self) -> usize;
    fn instruction(&self, idx: usize) -> Option<&Instruction>;
    /// Bounds (start, end) of the block containing item `idx`.
    fn block_bounds(&self, idx: usize) -> Option<(usize, usize)>;
}

impl InstructionSeq for Kernel {
    fn item_count(&self) -> usize {
        self.items.len()
    }

    fn instruction(&self, idx: usize) -> Option<&Instruction> {
        self.instruction_at(idx)
    }

    fn block_bounds(&self, idx: usize) -> Option<(usize, usize)> {
        self.block_of(idx).map(|b| {
            let blk = self.blocks[b];
            (blk.start, blk.end)
        })
    }
}

/// A kernel with two item positions exchanged, for what-if dependency checks.
pub struct SwappedView<'a> {
    kernel: &'a Kernel,
    a: usize,
    b: usize,
}

impl<'a> SwappedView<'a> {
    pub fn new(kernel: &'a Kernel, a: usize, b: usize) -> Self {
        SwappedView { kernel, a, b }
    }

    fn translate(&self, idx: usize) -> usize {
        if idx == self.a {
            self.b
        } else if idx == self.b {
            self.a
        } else {
            idx
        }
    }
}

impl InstructionSeq for SwappedView<'_> {
    fn item_count(&self) -> usize {
        self.kernel.items.len()
    }

    fn instruction(&self, idx: usize) -> Option<&Instruction> {
        self.kernel.instruction_at(self.translate(idx))
    }

    fn block_bounds(&self, idx: usize) -> Option<(usize, usize)> {
        // swaps are only evaluated within one block, so bounds are unchanged
        self.kernel.block_bounds(idx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProducerLookup {
    /// Item index of the nearest in-block instruction defining the register.
    Found(usize),
    /// The block start was reached without finding a definition.
    NotInBlock,
}

/// Scans upward from `consumer_idx` (exclusive) to the block start for the
/// nearest definition of `reg`.
pub fn nearest_producer<S: InstructionSeq>(seq: &S, consumer_idx: usize, reg: Register) -> ProducerLookup {
    let Some((block_start, _)) = seq.block_bounds(consumer_idx) else {
        return ProducerLookup::NotInBlock;
    };
    let mut idx = consumer_idx;
    while idx > block_start {
        idx -= 1;
        if let Some(inst) = seq.instruction(idx) {
            if inst.defs.contains(&reg) {
                return ProducerLookup::Found(idx);
            }
        }
    }
    ProducerLookup::NotInBlock
}

/// Scans downward from `producer_idx` (exclusive) to the block end for the
/// nearest read of `reg`. Stops early at a redefinition; an instruction that
/// both reads and redefines counts as a consumer.
pub fn nearest_consumer<S: InstructionSeq>(seq: &S, producer_idx: usize, reg: Register) -> Option<usize> {
    let (_, block_end) = seq.block_bounds(producer_idx)?;
    for idx in producer_idx + 1..block_end {
        if let Some(inst) = seq.instruction(idx) {
            if inst.uses.contains(&reg) {
                return Some(idx);
            }
            if inst.defs.contains(&reg) {
                return None;
            }
        }
    }
    None
}

/// Accumulated stall cycles between a producer and a consumer: the producer's
/// own stall field plus those of every instruction strictly between them.
pub fn accumulated_stall<S: InstructionSeq>(seq: &S, producer_idx: usize, consumer_idx: usize) -> u32 {
    debug_assert!(producer_idx < consumer_idx);
    (producer_idx..consumer_idx)
        .filter_map(|i| seq.instruction(i))
        .map(|inst| inst.control.stall_count as u32)
        .sum()
}

impl Kernel {
    fn block_bounds(&self, idx: usize) -> Option<(usize, usize)> {
        <Kernel as InstructionSeq>::block_bounds(self, idx)
    }
}
