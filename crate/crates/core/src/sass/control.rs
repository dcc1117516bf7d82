//! Per-instruction control codes: `[B--2---:R-:W1:Y:S04]`.
//!
//! Five colon-separated fields inside square brackets: the wait-barrier mask
//! (six slots, one per barrier B0..B5), the read barrier, the write barrier,
//! the yield flag, and the stall count.

use serde::{Deserialize, Serialize};

pub const NUM_BARRIERS: usize = 6;
pub const MAX_STALL: u8 = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ControlCode {
    /// wait_mask[i] is true when the instruction waits on barrier i.
    pub wait_mask: [bool; NUM_BARRIERS],
    /// Barrier armed when the instruction's operands have been read.
    pub read_barrier: Option<u8>,
    /// Barrier armed when the instruction's result has been written.
    pub write_barrier: Option<u8>,
    /// Carried verbatim; believed to hint warp-scheduler load balancing.
    pub yield_flag: bool,
    /// Cycles the issue pipeline stalls before issuing the next instruction.
    pub stall_count: u8,
}

impl ControlCode {
    pub fn new(stall_count: u8) -> Self {
        ControlCode {
            wait_mask: [false; NUM_BARRIERS],
            read_barrier: None,
            write_barrier: None,
            yield_flag: false,
            stall_count,
        }
    }

    /// Barriers this instruction arms (read or write), if any.
    pub fn barriers_set(&self) -> impl Iterator<Item = u8> + '_ {
        self.read_barrier.into_iter().chain(self.write_barrier)
    }

    pub fn waits_on(&self, barrier: u8) -> bool {
        (barrier as usize) < NUM_BARRIERS && self.wait_mask[barrier as usize]
    }

    pub fn waits_any(&self) -> bool {
        self.wait_mask.iter().any(|&b| b)
    }

    pub fn parse(text: &str) -> Result<Self, ControlCodeError> {
        let inner = text
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .ok_or_else(|| ControlCodeError::new(text, "missing enclosing brackets"))?;
        let fields: Vec<&str> = inner.split(':').collect();
        if fields.len() != 5 {
            return Err(ControlCodeError::new(
                text,
                format!("expected 5 colon-separated fields, found {}", fields.len()),
            ));
        }

        let wait = fields[0]
            .strip_prefix('B')
            .ok_or_else(|| ControlCodeError::new(text, "wait mask must start with 'B'"))?;
        if wait.chars().count() != NUM_BARRIERS {
            return Err(ControlCodeError::new(text, "wait mask must have 6 slots"));
        }
        let mut wait_mask = [false; NUM_BARRIERS];
        for (i, ch) in wait.chars().enumerate() {
            match ch {
                '-' => {}
                d if d.is_ascii_digit() && d as usize - '0' as usize == i => wait_mask[i] = true,
                _ => {
                    return Err(ControlCodeError::new(
                        text,
                        format!("wait slot {i} must be '-' or '{i}'"),
                    ))
                }
            }
        }

        let read_barrier = parse_barrier_field(fields[1], 'R', text)?;
        let write_barrier = parse_barrier_field(fields[2], 'W', text)?;

        let yield_flag = match fields[3] {
            "Y" => true,
            "-" => false,
            other => {
                return Err(ControlCodeError::new(
                    text,
                    format!("yield field must be 'Y' or '-', found {other:?}"),
                ))
            }
        };

        let stall_digits = fields[4]
            .strip_prefix('S')
            .ok_or_else(|| ControlCodeError::new(text, "stall field must start with 'S'"))?;
        if stall_digits.len() != 2 || !stall_digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ControlCodeError::new(text, "stall field must be two digits"));
        }
        let stall_count: u8 = stall_digits
            .parse()
            .map_err(|_| ControlCodeError::new(text, "stall count out of range"))?;
        if stall_count > MAX_STALL {
            return Err(ControlCodeError::new(
                text,
                format!("stall count {stall_count} exceeds {MAX_STALL}"),
            ));
        }

        Ok(ControlCode {
            wait_mask,
            read_barrier,
            write_barrier,
            yield_flag,
            stall_count,
        })
    }

    pub fn serialize(&self) -> String {
        let mut out = String::with_capacity(22);
        out.push('[');
        out.push('B');
        for (i, &set) in self.wait_mask.iter().enumerate() {
            out.push(if set { (b'0' + i as u8) as char } else { '-' });
        }
        out.push_str(":R");
        push_barrier(&mut out, self.read_barrier);
        out.push_str(":W");
        push_barrier(&mut out, self.write_barrier);
        out.push(':');
        out.push(if self.yield_flag { 'Y' } else { '-' });
        out.push_str(&format!(":S{:02}", self.stall_count));
        out.push(']');
        out
    }
}

fn push_barrier(out: &mut String, barrier: Option<u8>) {
    match barrier {
        Some(b) => out.push((b'0' + b) as char),
        None => out.push('-'),
    }
}

fn parse_barrier_field(field: &str, prefix: char, whole: &str) -> Result<Option<u8>, ControlCodeError> {
    let rest = field.strip_prefix(prefix).ok_or_else(|| {
        ControlCodeError::new(whole, format!("barrier field must start with '{prefix}'"))
    })?;
    match rest {
        "-" => Ok(None),
        d if d.len() == 1 && d.as_bytes()[0].is_ascii_digit() => {
            let b = d.as_bytes()[0] - b'0';
            if b as usize >= NUM_BARRIERS {
                Err(ControlCodeError::new(
                    whole,
                    format!("barrier index {b} out of range 0..5"),
                ))
            } else {
                Ok(Some(b))
            }
        }
        other => Err(ControlCodeError::new(
            whole,
            format!("barrier field must be '-' or a digit, found {other:?}"),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlCodeError {
    pub text: String,
    pub reason: String,
}

impl ControlCodeError {
    fn new(text: &str, reason: impl Into<String>) -> Self {
        ControlCodeError {
            text: text.to_string(),
            reason: reason.into(),
        }
    }
}

impl std::fmt::Display for ControlCodeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "bad control code {:?}: {}", self.text, self.reason)
    }
}

impl std::error::Error for ControlCodeError {}
