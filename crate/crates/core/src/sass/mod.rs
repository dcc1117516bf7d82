//! Lossless parse/serialize of textual SASS and the structural model the
//! rest of the crate consumes.

pub mod control;
pub mod instruction;
pub mod kernel;
pub mod opcodes;
pub mod operand;

pub use control::{ControlCode, ControlCodeError, MAX_STALL, NUM_BARRIERS};
pub use instruction::{Guard, Instruction, InstructionError};
pub use kernel::{parse_kernel, serialize_kernel, Block, Item, Kernel, KernelParseError};
pub use opcodes::{adjacent_register, AdjacentRegisterError};
pub use operand::{Operand, OperandKind, Register};

/// True iff the opcode root belongs to the memory load/store families.
pub fn is_memory(inst: &Instruction) -> bool {
    inst.is_memory()
}
