//! Opcode classification tables.
//!
//! SASS mnemonics are only vaguely documented, so classification works on the
//! opcode root (the part before the first `.` modifier). Roots outside every
//! table below are accepted verbatim by the parser and treated as unknown,
//! which downstream analysis handles by denylisting dependent memory
//! instructions.

/// Memory load/store opcode roots. Instructions with these roots are the
/// reorderable candidates of the scheduling game.
pub const MEMORY_OPCODES: &[&str] = &["LD", "LDG", "LDS", "LDSM", "LDGSTS", "ST", "STG", "STS"];

/// Barrier / synchronization / control-transfer roots. These delimit basic
/// blocks and are never crossed by a reordering action.
pub const SYNC_OPCODES: &[&str] = &[
    "BAR", "BSYNC", "DEPBAR", "LDGDEPBAR", "MEMBAR", "ERRBAR", "WARPSYNC", "BRA", "BRX", "JMP",
    "JMX", "CAL", "CALL", "RET", "EXIT", "KILL", "BREAK", "YIELD", "NANOSLEEP",
];

/// Pure-store roots: no general-register destination, every register operand
/// is a read.
pub const STORE_OPCODES: &[&str] = &["ST", "STG", "STS", "STL", "RED", "SUST"];

/// Roots we recognize as real instructions. Producers outside this registry
/// are "unknown opcodes": their latency class cannot be established, so
/// memory instructions consuming their outputs are denylisted.
pub const KNOWN_OPCODES: &[&str] = &[
    // memory + sync families
    "LD", "LDG", "LDS", "LDSM", "LDGSTS", "ST", "STG", "STS", "STL", "LDL", "LDC", "RED", "SUST",
    "BAR", "BSYNC", "DEPBAR", "LDGDEPBAR", "MEMBAR", "ERRBAR", "WARPSYNC", "BRA", "BRX", "JMP",
    "JMX", "CAL", "CALL", "RET", "EXIT", "KILL", "BREAK", "YIELD", "NANOSLEEP",
    // integer / address arithmetic
    "IADD3", "IMAD", "IABS", "IMNMX", "ISETP", "LEA", "LOP3", "PLOP3", "SHF", "SHL", "SHR",
    "POPC", "FLO", "BREV", "PRMT", "SGXT", "VABSDIFF",
    // float / half / tensor
    "FADD", "FMUL", "FFMA", "FSEL", "FMNMX", "FSETP", "FCHK", "MUFU", "HADD2", "HMUL2", "HFMA2",
    "HSETP2", "HMNMX2", "HMMA", "IMMA", "BMMA",
    // conversion / movement
    "MOV", "MOV32I", "SEL", "I2F", "F2I", "F2F", "I2I", "FRND", "CS2R", "S2R", "S2UR", "P2R",
    "R2P", "NOP", "VOTE", "VOTEU",
    // uniform datapath
    "UMOV", "ULDC", "UIADD3", "UIMAD", "ULOP3", "ULEA", "USHF", "USEL", "UISETP", "UPLOP3",
    "R2UR", "UPOPC", "UFLO", "USGXT", "UP2UR",
];

pub fn is_memory_opcode(root: &str) -> bool {
    MEMORY_OPCODES.contains(&root)
}

pub fn is_sync_opcode(root: &str) -> bool {
    SYNC_OPCODES.contains(&root)
}

pub fn is_store_opcode(root: &str) -> bool {
    STORE_OPCODES.contains(&root)
}

pub fn is_known_opcode(root: &str) -> bool {
    KNOWN_OPCODES.contains(&root)
}

/// Register number of the zero register RZ, which has no pair.
pub const RZ_NUMBER: u16 = 255;

/// Computes the partner of a general-purpose register in a 64-bit pair.
/// Registers pair up as {2k, 2k+1}: the partner of an even register is the
/// next odd one and vice versa.
///
/// Returns an error for RZ (255), which has no pair.
pub fn adjacent_register(reg_no: u16) -> Result<u16, AdjacentRegisterError> {
    if reg_no >= RZ_NUMBER {
        return Err(AdjacentRegisterError { reg_no });
    }
    let base = reg_no / 2;
    let flip = 1 - reg_no % 2;
    Ok(base * 2 + flip)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacentRegisterError {
    pub reg_no: u16,
}

impl std::fmt::Display for AdjacentRegisterError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "register R{} has no 64-bit pair", self.reg_no)
    }
}

impl std::error::Error for AdjacentRegisterError {}
