//! Minimum stall counts for fixed-latency instructions, keyed by the
//! modifier-qualified mnemonic. Lookups are exact: `IMAD.WIDE` and `IMAD`
//! are distinct entries because modifiers change the latency class.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Microbenchmarked (or loaded from a measured table file).
    Builtin,
    /// Recovered by the schedule-scan analysis pass.
    Inferred,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub cycles: u32,
    pub provenance: Provenance,
}

/// Measured stall counts for common A100 fixed-latency instructions.
const BUILTIN_STALLS: &[(&str, u32)] = &[
    ("IADD3", 4),
    ("IMAD.IADD", 4),
    ("IADD3.X", 4),
    ("MOV", 4),
    ("IABS", 4),
    ("IMAD", 4),
    ("FADD", 4),
    ("HADD2", 4),
    ("IMNMX", 4),
    ("SEL", 4),
    ("LEA", 4),
    ("IMAD.WIDE", 5),
    ("IMAD.WIDE.U32", 5),
];

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StallCountTable {
    pub entries: BTreeMap<String, TableEntry>,
}

impl StallCountTable {
    pub fn empty() -> Self {
        StallCountTable::default()
    }

    pub fn builtin() -> Self {
        let entries = BUILTIN_STALLS
            .iter()
            .map(|&(name, cycles)| {
                (
                    name.to_string(),
                    TableEntry {
                        cycles,
                        provenance: Provenance::Builtin,
                    },
                )
            })
            .collect();
        StallCountTable { entries }
    }

    /// Exact-match lookup on the qualified mnemonic.
    pub fn lookup(&self, qualified: &str) -> Option<u32> {
        self.entries.get(qualified).map(|e| e.cycles)
    }

    pub fn contains(&self, qualified: &str) -> bool {
        self.entries.contains_key(qualified)
    }

    /// Merges an observed separation; an existing entry keeps the minimum of
    /// the two values and only yields its provenance when lowered.
    pub fn merge_inferred(&mut self, qualified: &str, cycles: u32) {
        match self.entries.get_mut(qualified) {
            Some(entry) => {
                if cycles < entry.cycles {
                    entry.cycles = cycles;
                    entry.provenance = Provenance::Inferred;
                }
            }
            None => {
                self.entries.insert(
                    qualified.to_string(),
                    TableEntry {
                        cycles,
                        provenance: Provenance::Inferred,
                    },
                );
            }
        }
    }

    /// Adds a measured entry (microbenchmark result), replacing any inferred
    /// value.
    pub fn insert_measured(&mut self, qualified: &str, cycles: u32) {
        self.entries.insert(
            qualified.to_string(),
            TableEntry {
                cycles,
                provenance: Provenance::Builtin,
            },
        );
    }

    /// Table file format: a flat JSON object `{ "IADD3": 4, ... }`. Loaded
    /// entries count as measured.
    pub fn load(path: &Path) -> Result<Self, TableIoError> {
        let text = std::fs::read_to_string(path).map_err(|e| TableIoError {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let raw: BTreeMap<String, u32> = serde_json::from_str(&text).map_err(|e| TableIoError {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let mut table = StallCountTable::empty();
        for (name, cycles) in raw {
            table.insert_measured(&name, cycles);
        }
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<(), TableIoError> {
        let raw: BTreeMap<&str, u32> = self
            .entries
            .iter()
            .map(|(k, v)| (k.as_str(), v.cycles))
            .collect();
        let text = serde_json::to_string_pretty(&raw).expect("table serialization");
        std::fs::write(path, text).map_err(|e| TableIoError {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct TableIoError {
    pub path: String,
    pub reason: String,
}

impl fmt::Display for TableIoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stall table {}: {}", self.path, self.reason)
    }
}

impl std::error::Error for TableIoError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_table_values() {
        let t = StallCountTable::builtin();
        for op in [
            "IADD3", "IMAD.IADD", "IADD3.X", "MOV", "IABS", "IMAD", "FADD", "HADD2", "IMNMX",
            "SEL", "LEA",
        ] {
            assert_eq!(t.lookup(op), Some(4), "{op}");
        }
        assert_eq!(t.lookup("IMAD.WIDE"), Some(5));
        assert_eq!(t.lookup("IMAD.WIDE.U32"), Some(5));
        assert_eq!(t.entries.len(), 13);
    }

    #[test]
    fn lookup_is_exact_not_prefix() {
        let t = StallCountTable::builtin();
        assert_eq!(t.lookup("IMAD.MOV"), None);
        assert_eq!(t.lookup("IMAD.MOV.U32"), None);
        assert_eq!(t.lookup("LEA.HI.X"), None);
    }

    #[test]
    fn merge_keeps_minimum() {
        let mut t = StallCountTable::builtin();
        t.merge_inferred("IADD3", 6);
        assert_eq!(t.lookup("IADD3"), Some(4));
        assert_eq!(t.entries["IADD3"].provenance, Provenance::Builtin);

        t.merge_inferred("ISETP.GE.AND", 7);
        t.merge_inferred("ISETP.GE.AND", 5);
        t.merge_inferred("ISETP.GE.AND", 9);
        assert_eq!(t.lookup("ISETP.GE.AND"), Some(5));
        assert_eq!(t.entries["ISETP.GE.AND"].provenance, Provenance::Inferred);
    }
}
