//! Kernel text model: ordered instructions, labels, and directives, plus the
//! basic-block partition used by every reordering rule.

use serde::{Deserialize, Serialize};

use super::instruction::Instruction;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "item", rename_all = "kebab-case")]
pub enum Item {
    Instruction(Instruction),
    /// Branch target or section label; echoed verbatim.
    Label { text: String },
    /// Anything else (assembler directives, comments, blank lines); echoed
    /// verbatim.
    Directive { text: String },
}

impl Item {
    pub fn as_instruction(&self) -> Option<&Instruction> {
        match self {
            Item::Instruction(inst) => Some(inst),
            _ => None,
        }
    }
}

/// Half-open index range of kernel items forming one basic block. Only
/// instruction items inside the range belong to the block; label and
/// directive items never join a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Kernel {
    pub items: Vec<Item>,
    pub blocks: Vec<Block>,
}

impl Kernel {
    pub fn parse(text: &str) -> Result<Kernel, KernelParseError> {
        let mut items = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.starts_with('[') {
                let inst = Instruction::parse(line, items.len()).map_err(|e| KernelParseError {
                    line_number: lineno + 1,
                    reason: e.reason,
                    line: line.to_string(),
                })?;
                items.push(Item::Instruction(inst));
            } else if is_label(trimmed) {
                items.push(Item::Label {
                    text: line.to_string(),
                });
            } else {
                items.push(Item::Directive {
                    text: line.to_string(),
                });
            }
        }
        let blocks = compute_blocks(&items);
        Ok(Kernel { items, blocks })
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            match item {
                Item::Instruction(inst) => out.push_str(&inst.serialize()),
                Item::Label { text } | Item::Directive { text } => out.push_str(text),
            }
            out.push('\n');
        }
        out
    }

    pub fn instructions(&self) -> impl Iterator<Item = (usize, &Instruction)> {
        self.items.iter().enumerate().filter_map(|(i, item)| {
            item.as_instruction().map(|inst| (i, inst))
        })
    }

    pub fn instruction_at(&self, index: usize) -> Option<&Instruction> {
        self.items.get(index).and_then(Item::as_instruction)
    }

    /// Index of the block containing item `index`, if any.
    pub fn block_of(&self, index: usize) -> Option<usize> {
        self.blocks
            .iter()
            .position(|b| index >= b.start && index < b.end)
    }

    /// Swaps two items; callers are responsible for keeping the swap legal
    /// (both instructions, same block). Identity tags (`line_index`) travel
    /// with the instructions.
    pub fn swap(&mut self, a: usize, b: usize) {
        self.items.swap(a, b);
    }

    /// Recomputes the block partition; needed only if items were edited in
    /// ways other than intra-block swaps.
    pub fn recompute_blocks(&mut self) {
        self.blocks = compute_blocks(&self.items);
    }
}

fn is_label(trimmed: &str) -> bool {
    if !trimmed.ends_with(':') {
        return false;
    }
    let name = &trimmed[..trimmed.len() - 1];
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '$')
}

/// Blocks end at labels and directly after barrier/synchronization
/// instructions; the delimiting sync instruction is the last member of its
/// block.
fn compute_blocks(items: &[Item]) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut start: Option<usize> = None;
    for (i, item) in items.iter().enumerate() {
        match item {
            Item::Instruction(inst) => {
                if start.is_none() {
                    start = Some(i);
                }
                if inst.is_sync() {
                    blocks.push(Block {
                        start: start.take().unwrap(),
                        end: i + 1,
                    });
                }
            }
            Item::Label { .. } => {
                if let Some(s) = start.take() {
                    blocks.push(Block { start: s, end: i });
                }
            }
            Item::Directive { .. } => {}
        }
    }
    if let Some(s) = start {
        blocks.push(Block {
            start: s,
            end: items.len(),
        });
    }
    blocks
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelParseError {
    pub line_number: usize,
    pub reason: String,
    pub line: String,
}

impl std::fmt::Display for KernelParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "parse error at line {}: {} in {:?}",
            self.line_number, self.reason, self.line
        )
    }
}

impl std::error::Error for KernelParseError {}

/// Parses the kernel section of a SASS listing.
pub fn parse_kernel(text: &str) -> Result<Kernel, KernelParseError> {
    Kernel::parse(text)
}

/// Canonical text for a kernel; labels and directives byte-identical to the
/// input, instructions normalized to single-space token separation.
pub fn serialize_kernel(kernel: &Kernel) -> String {
    kernel.serialize()
}
