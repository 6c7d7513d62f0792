//! Named benchmark targets (adders, multipliers, demultiplexer, comparator,
//! even-parity) and a plain text format for user-supplied truth tables.

use std::fmt::Write as _;

use thiserror::Error;

use crate::semantics::{TruthTable, MAX_INPUTS};

/// A search target: a named boolean function given as a complete table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSpec {
    pub name: String,
    pub inputs: usize,
    pub outputs: usize,
    pub table: TruthTable,
}

/// Every built-in problem name, in the order reports list them.
pub const PROBLEM_NAMES: [&str; 12] = [
    "1-Add", "2-Add", "3-Add", "2-Mul", "3-Mul", "DeMux", "Comp", "3-EP", "4-EP", "5-EP", "6-EP",
    "7-EP",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown problem {name:?}; known problems: {}", PROBLEM_NAMES.join(", "))]
pub struct UnknownProblem {
    pub name: String,
}

/// Builds the table for a built-in problem. Names match case-insensitively.
pub fn target_for(name: &str) -> Result<TargetSpec, UnknownProblem> {
    let lower = name.to_ascii_lowercase();
    let spec = match lower.as_str() {
        "1-add" => adder(1),
        "2-add" => adder(2),
        "3-add" => adder(3),
        "2-mul" => multiplier(2),
        "3-mul" => multiplier(3),
        "demux" => demux(),
        "comp" => comparator(),
        "3-ep" => parity(3),
        "4-ep" => parity(4),
        "5-ep" => parity(5),
        "6-ep" => parity(6),
        "7-ep" => parity(7),
        _ => {
            return Err(UnknownProblem {
                name: name.to_string(),
            })
        }
    };
    Ok(spec)
}

fn build(name: &str, inputs: usize, outputs: usize, f: impl Fn(usize, usize) -> bool) -> TargetSpec {
    let mut table = TruthTable::new_zeroed(inputs, outputs);
    for row in 0..1usize << inputs {
        for output in 0..outputs {
            if f(row, output) {
                table.set_bit(output, row, true);
            }
        }
    }
    TargetSpec {
        name: name.to_string(),
        inputs,
        outputs,
        table,
    }
}

/// n-bit ripple-carry adder: inputs (a0..a_{n-1}, b0..b_{n-1}, cin), outputs
/// (s0..s_{n-1}, cout), all least-significant-bit first.
fn adder(n: usize) -> TargetSpec {
    let low_mask = (1usize << n) - 1;
    build(&format!("{n}-Add"), 2 * n + 1, n + 1, move |row, output| {
        let a = row & low_mask;
        let b = row >> n & low_mask;
        let cin = row >> (2 * n) & 1;
        (a + b + cin) >> output & 1 == 1
    })
}

/// n-bit unsigned multiplier: inputs (a0.., b0..), outputs the 2n product
/// bits, least-significant first.
fn multiplier(n: usize) -> TargetSpec {
    let low_mask = (1usize << n) - 1;
    build(&format!("{n}-Mul"), 2 * n, 2 * n, move |row, output| {
        let a = row & low_mask;
        let b = row >> n & low_mask;
        a * b >> output & 1 == 1
    })
}

/// 3-to-8 demultiplexer: output j is high exactly when the input word is j.
fn demux() -> TargetSpec {
    build("DeMux", 3, 8, |row, output| row == output)
}

/// One-bit four-way comparator: for each unordered index pair, three outputs
/// flag less-than, equal and greater-than of the two input bits.
fn comparator() -> TargetSpec {
    const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    build("Comp", 4, 18, |row, output| {
        let (p, q) = PAIRS[output / 3];
        let xp = row >> p & 1;
        let xq = row >> q & 1;
        match output % 3 {
            0 => xp < xq,
            1 => xp == xq,
            _ => xp > xq,
        }
    })
}

/// n-bit even parity: the single output is high when an even number of
/// inputs are high.
fn parity(n: usize) -> TargetSpec {
    build(&format!("{n}-EP"), n, 1, |row, _| row.count_ones() % 2 == 0)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableParseError {
    #[error("missing header line `inputs <i> outputs <o>`")]
    MissingHeader,
    #[error("line {line}: malformed header, expected `inputs <i> outputs <o>`")]
    BadHeader { line: usize },
    #[error("line {line}: input count must be between 1 and {MAX_INPUTS}, got {inputs}")]
    BadInputCount { line: usize, inputs: usize },
    #[error("line {line}: output count must be at least 1")]
    BadOutputCount { line: usize },
    #[error("line {line}: expected {expected} bits, found {actual}")]
    WrongTokenCount {
        line: usize,
        expected: usize,
        actual: usize,
    },
    #[error("line {line}: {token:?} is not a bit (expected 0 or 1)")]
    BadToken { line: usize, token: String },
    #[error("line {line}: row for input assignment {row} appears twice")]
    DuplicateRow { line: usize, row: usize },
    #[error("table is incomplete: {missing} of {expected} rows are absent")]
    MissingRows { missing: usize, expected: usize },
}

/// Parses the plain text table format:
///
/// ```text
/// # optional comments
/// inputs 2 outputs 1
/// 0 0  1
/// 1 0  0
/// 0 1  0
/// 1 1  1
/// ```
///
/// Every assignment must appear exactly once, in any order; bit k of a row's
/// input half is input slot k. The parsed name is "custom"; callers rename.
pub fn parse_truth_table(text: &str) -> Result<TargetSpec, TableParseError> {
    let mut header: Option<(usize, usize)> = None;
    let mut table = TruthTable::new_zeroed(0, 0);
    let mut seen: Vec<Option<usize>> = Vec::new();
    let mut remaining = 0usize;
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let Some((inputs, outputs)) = header else {
            if tokens.len() != 4 || tokens[0] != "inputs" || tokens[2] != "outputs" {
                return Err(TableParseError::BadHeader { line });
            }
            let inputs: usize = tokens[1]
                .parse()
                .map_err(|_| TableParseError::BadHeader { line })?;
            let outputs: usize = tokens[3]
                .parse()
                .map_err(|_| TableParseError::BadHeader { line })?;
            if inputs < 1 || inputs > MAX_INPUTS {
                return Err(TableParseError::BadInputCount { line, inputs });
            }
            if outputs < 1 {
                return Err(TableParseError::BadOutputCount { line });
            }
            header = Some((inputs, outputs));
            table = TruthTable::new_zeroed(inputs, outputs);
            remaining = 1 << inputs;
            seen = vec![None; remaining];
            continue;
        };
        if tokens.len() != inputs + outputs {
            return Err(TableParseError::WrongTokenCount {
                line,
                expected: inputs + outputs,
                actual: tokens.len(),
            });
        }
        let mut bits = Vec::with_capacity(inputs + outputs);
        for token in &tokens {
            match *token {
                "0" => bits.push(false),
                "1" => bits.push(true),
                other => {
                    return Err(TableParseError::BadToken {
                        line,
                        token: other.to_string(),
                    })
                }
            }
        }
        let row = bits[..inputs]
            .iter()
            .enumerate()
            .fold(0usize, |acc, (k, &bit)| acc | (bit as usize) << k);
        if seen[row].is_some() {
            return Err(TableParseError::DuplicateRow { line, row });
        }
        seen[row] = Some(line);
        remaining -= 1;
        for (output, &bit) in bits[inputs..].iter().enumerate() {
            table.set_bit(output, row, bit);
        }
    }
    let Some((inputs, outputs)) = header else {
        return Err(TableParseError::MissingHeader);
    };
    if remaining > 0 {
        return Err(TableParseError::MissingRows {
            missing: remaining,
            expected: 1 << inputs,
        });
    }
    Ok(TargetSpec {
        name: "custom".to_string(),
        inputs,
        outputs,
        table,
    })
}

/// Renders a target in the format [`parse_truth_table`] accepts.
pub fn format_truth_table(spec: &TargetSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {}", spec.name);
    let _ = writeln!(out, "inputs {} outputs {}", spec.inputs, spec.outputs);
    for row in 0..spec.table.rows() {
        let mut tokens = Vec::with_capacity(spec.inputs + spec.outputs);
        for k in 0..spec.inputs {
            tokens.push(if row >> k & 1 == 1 { "1" } else { "0" });
        }
        for output in 0..spec.outputs {
            tokens.push(if spec.table.bit(output, row) { "1" } else { "0" });
        }
        let _ = writeln!(out, "{}", tokens.join(" "));
    }
    out
}
