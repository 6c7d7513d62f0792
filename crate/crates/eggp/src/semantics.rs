//! Bit-parallel circuit semantics: truth tables over packed words and
//! fitness as the Hamming distance between tables.
//!
//! Row `r` of a table is the assignment whose input slot `k` carries bit `k`
//! of `r`, slot 0 least significant. Column bits pack 64 rows per word, so a
//! whole column of a small circuit is a handful of bitwise operations.

use std::fmt;

use thiserror::Error;

use crate::circuit::{Individual, NodeId, NodeKind, Violation};

pub type Word = u64;
pub const WORD_BITS: usize = 64;

/// Hard cap on input count; beyond this, exhaustive tables stop being cheap.
pub const MAX_INPUTS: usize = 16;

/// Number of errors a circuit makes against a target, over all rows and
/// output columns. Zero means the circuit implements the target exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fitness(pub u64);

impl Fitness {
    pub fn is_perfect(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Fitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("individual is structurally invalid: {}", format_violations(.0))]
    InvalidIndividual(Vec<Violation>),
    #[error("{inputs} inputs exceeds the supported maximum of {MAX_INPUTS}")]
    TooManyInputs { inputs: usize },
    #[error(
        "table shape {table_inputs}x{table_outputs} does not match \
         circuit shape {circuit_inputs}x{circuit_outputs}"
    )]
    DimensionMismatch {
        circuit_inputs: usize,
        circuit_outputs: usize,
        table_inputs: usize,
        table_outputs: usize,
    },
}

fn format_violations(violations: &[Violation]) -> String {
    let parts: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
    parts.join("; ")
}

/// Complete boolean function table: one packed column of `2^inputs` bits per
/// output. Bits past the last row are always zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    inputs: usize,
    outputs: usize,
    words_per_column: usize,
    bits: Vec<Word>,
}

impl TruthTable {
    pub fn new_zeroed(inputs: usize, outputs: usize) -> Self {
        assert!(inputs <= MAX_INPUTS, "too many inputs for a dense table");
        let words_per_column = words_for(inputs);
        TruthTable {
            inputs,
            outputs,
            words_per_column,
            bits: vec![0; words_per_column * outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn rows(&self) -> usize {
        1 << self.inputs
    }

    pub fn words_per_column(&self) -> usize {
        self.words_per_column
    }

    pub fn column(&self, output: usize) -> &[Word] {
        let start = output * self.words_per_column;
        &self.bits[start..start + self.words_per_column]
    }

    pub fn column_mut(&mut self, output: usize) -> &mut [Word] {
        let start = output * self.words_per_column;
        &mut self.bits[start..start + self.words_per_column]
    }

    pub fn bit(&self, output: usize, row: usize) -> bool {
        debug_assert!(row < self.rows());
        self.column(output)[row / WORD_BITS] >> (row % WORD_BITS) & 1 == 1
    }

    pub fn set_bit(&mut self, output: usize, row: usize, value: bool) {
        debug_assert!(row < self.rows());
        let word = &mut self.column_mut(output)[row / WORD_BITS];
        let bit = 1 << (row % WORD_BITS);
        if value {
            *word |= bit;
        } else {
            *word &= !bit;
        }
    }

    /// Number of differing bits. Both tables must have the same shape.
    pub fn hamming_distance(&self, other: &TruthTable) -> u64 {
        assert_eq!(self.inputs, other.inputs, "table shapes differ");
        assert_eq!(self.outputs, other.outputs, "table shapes differ");
        self.bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| (a ^ b).count_ones() as u64)
            .sum()
    }
}

fn words_for(inputs: usize) -> usize {
    ((1usize << inputs) + WORD_BITS - 1) / WORD_BITS
}

/// Mask selecting the live bits of a column's last word.
fn tail_mask(inputs: usize) -> Word {
    let rows = 1usize << inputs;
    if rows % WORD_BITS == 0 {
        !0
    } else {
        (1 << rows) - 1
    }
}

/// Bit pattern of input slot `slot` within column word `word_index`.
fn input_pattern(slot: usize, word_index: usize) -> Word {
    const LOW: [Word; 6] = [
        0xAAAA_AAAA_AAAA_AAAA,
        0xCCCC_CCCC_CCCC_CCCC,
        0xF0F0_F0F0_F0F0_F0F0,
        0xFF00_FF00_FF00_FF00,
        0xFFFF_0000_FFFF_0000,
        0xFFFF_FFFF_0000_0000,
    ];
    if slot < 6 {
        LOW[slot]
    } else if word_index >> (slot - 6) & 1 == 1 {
        !0
    } else {
        0
    }
}

/// Evaluates a validated individual to its complete truth table.
pub fn evaluate(ind: &Individual) -> Result<TruthTable, EvalError> {
    Evaluator::new().evaluate(ind)
}

/// Errors the individual makes against `target` over every row and column.
pub fn fitness(ind: &Individual, target: &TruthTable) -> Result<Fitness, EvalError> {
    Evaluator::new().fitness(ind, target)
}

/// Reusable evaluation scratch. One instance amortises traversal and value
/// buffers across the many evaluations of a search run.
#[derive(Debug, Default)]
pub struct Evaluator {
    state: Vec<u8>,
    stack: Vec<(u32, u8)>,
    values: Vec<Word>,
}

const NEW: u8 = 0;
const OPEN: u8 = 1;
const DONE: u8 = 2;

impl Evaluator {
    pub fn new() -> Self {
        Evaluator::default()
    }

    pub fn evaluate(&mut self, ind: &Individual) -> Result<TruthTable, EvalError> {
        self.check(ind)?;
        let mut table = TruthTable::new_zeroed(ind.input_count(), ind.output_count());
        self.run(ind);
        let words = table.words_per_column();
        for slot in 0..ind.output_count() {
            let source = ind.edge_target(crate::circuit::EdgeRef {
                source: ind.output_id(slot),
                position: 0,
            });
            let start = source.index() * words;
            table
                .column_mut(slot)
                .copy_from_slice(&self.values[start..start + words]);
        }
        Ok(table)
    }

    pub fn fitness(&mut self, ind: &Individual, target: &TruthTable) -> Result<Fitness, EvalError> {
        self.check(ind)?;
        if target.inputs() != ind.input_count() || target.outputs() != ind.output_count() {
            return Err(EvalError::DimensionMismatch {
                circuit_inputs: ind.input_count(),
                circuit_outputs: ind.output_count(),
                table_inputs: target.inputs(),
                table_outputs: target.outputs(),
            });
        }
        Ok(self.fitness_unchecked(ind, target))
    }

    /// Fitness without structural validation. The caller guarantees the
    /// individual is valid and its shape matches the target.
    pub fn fitness_unchecked(&mut self, ind: &Individual, target: &TruthTable) -> Fitness {
        debug_assert!(ind.validate().is_ok());
        debug_assert_eq!(target.inputs(), ind.input_count());
        debug_assert_eq!(target.outputs(), ind.output_count());
        self.run(ind);
        let words = target.words_per_column();
        let mut errors = 0u64;
        for slot in 0..ind.output_count() {
            let source = ind.edge_target(crate::circuit::EdgeRef {
                source: ind.output_id(slot),
                position: 0,
            });
            let start = source.index() * words;
            let column = target.column(slot);
            for w in 0..words {
                errors += (self.values[start + w] ^ column[w]).count_ones() as u64;
            }
        }
        Fitness(errors)
    }

    fn check(&self, ind: &Individual) -> Result<(), EvalError> {
        if ind.input_count() > MAX_INPUTS {
            return Err(EvalError::TooManyInputs {
                inputs: ind.input_count(),
            });
        }
        ind.validate().map_err(EvalError::InvalidIndividual)
    }

    /// Fills `self.values` for every node reachable from an output, visiting
    /// each active node exactly once in dependency order.
    fn run(&mut self, ind: &Individual) {
        let inputs = ind.input_count();
        let words = words_for(inputs);
        let mask = tail_mask(inputs);
        let total = ind.node_count();
        self.state.clear();
        self.state.resize(total, NEW);
        self.values.resize(total * words, 0);
        self.stack.clear();
        for slot in 0..ind.output_count() {
            let root = ind.node(ind.output_id(slot)).out_edges[0];
            if self.state[root.index()] == DONE {
                continue;
            }
            self.state[root.index()] = OPEN;
            self.stack.push((root.index() as u32, 0));
            while let Some(&(v, child)) = self.stack.last() {
                let node = ind.node(NodeId(v as usize));
                if (child as usize) < node.out_edges.len() {
                    self.stack.last_mut().unwrap().1 += 1;
                    let target = node.out_edges[child as usize];
                    match self.state[target.index()] {
                        NEW => {
                            self.state[target.index()] = OPEN;
                            self.stack.push((target.index() as u32, 0));
                        }
                        OPEN => debug_assert!(false, "cycle reached from an output"),
                        _ => {}
                    }
                } else {
                    self.compute(ind, v as usize, words, mask);
                    self.state[v as usize] = DONE;
                    self.stack.pop();
                }
            }
        }
    }

    fn compute(&mut self, ind: &Individual, v: usize, words: usize, mask: Word) {
        let node = ind.node(NodeId(v));
        let start = v * words;
        match node.kind {
            NodeKind::Input(slot) => {
                for w in 0..words {
                    self.values[start + w] = input_pattern(slot, w);
                }
                self.values[start + words - 1] &= mask;
            }
            NodeKind::Function(kind) => {
                use crate::circuit::FunctionKind::*;
                let a = node.out_edges[0].index() * words;
                let b = node.out_edges.last().unwrap().index() * words;
                for w in 0..words {
                    let x = self.values[a + w];
                    let y = self.values[b + w];
                    self.values[start + w] = match kind {
                        And => x & y,
                        Or => x | y,
                        Not => !x,
                        Nand => !(x & y),
                        Nor => !(x | y),
                    };
                }
                self.values[start + words - 1] &= mask;
            }
            NodeKind::Output(_) => unreachable!("outputs are never evaluated"),
        }
    }
}
