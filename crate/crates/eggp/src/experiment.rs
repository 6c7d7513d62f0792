//! Experiment orchestration: runs a grid of search configurations across
//! seeds on a worker pool, emits per-run CSV rows and summarises cells
//! against their drift-free baselines.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::benchmarks::TargetSpec;
use crate::circuit::FunctionKind;
use crate::evolution::{evolve, evolve_traced, EvolutionConfig, GenerationTrace, RunRecord};
use crate::mutation::{AON, AONN};
use crate::rewrites::RuleSet;
use crate::stats::{mann_whitney_u, median_iqr, vargha_delaney_a, SampleSummary};

/// Named gate repertoires offered by the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionSetChoice {
    /// AND, OR, NOT.
    Aon,
    /// AND, OR, NAND, NOR.
    Aonn,
}

impl FunctionSetChoice {
    pub fn kinds(self) -> &'static [FunctionKind] {
        match self {
            FunctionSetChoice::Aon => &AON,
            FunctionSetChoice::Aonn => &AONN,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FunctionSetChoice::Aon => "aon",
            FunctionSetChoice::Aonn => "aonn",
        }
    }
}

impl fmt::Display for FunctionSetChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown function set {0:?}; expected aon or aonn")]
pub struct UnknownFunctionSet(pub String);

impl FromStr for FunctionSetChoice {
    type Err = UnknownFunctionSet;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "aon" => Ok(FunctionSetChoice::Aon),
            "aonn" => Ok(FunctionSetChoice::Aonn),
            _ => Err(UnknownFunctionSet(s.to_string())),
        }
    }
}

/// A grid of configurations: every problem crossed with every rule-set and
/// node budget, each cell replicated over consecutive seeds.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub targets: Vec<TargetSpec>,
    pub rulesets: Vec<RuleSet>,
    pub function_set: FunctionSetChoice,
    pub node_budgets: Vec<usize>,
    pub lambda: usize,
    pub rate: f64,
    pub runs: usize,
    pub base_seed: u64,
    pub max_evaluations: u64,
}

/// One finished run with the configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub problem: String,
    pub ruleset: RuleSet,
    pub function_set: FunctionSetChoice,
    pub nodes: usize,
    pub lambda: usize,
    pub rate: f64,
    pub seed: u64,
    pub record: RunRecord,
}

/// One generation of one run, for trace output.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub problem: String,
    pub ruleset: RuleSet,
    pub nodes: usize,
    pub seed: u64,
    pub trace: GenerationTrace,
}

fn configs(plan: &ExperimentPlan) -> Vec<EvolutionConfig> {
    let mut out = Vec::new();
    for target in &plan.targets {
        for &ruleset in &plan.rulesets {
            for &nodes in &plan.node_budgets {
                for run in 0..plan.runs {
                    out.push(EvolutionConfig {
                        target: target.clone(),
                        function_set: plan.function_set.kinds().to_vec(),
                        nodes,
                        lambda: plan.lambda,
                        rate: plan.rate,
                        ruleset,
                        max_evaluations: plan.max_evaluations,
                        seed: plan.base_seed + run as u64,
                    });
                }
            }
        }
    }
    out
}

fn row_for(plan: &ExperimentPlan, cfg: &EvolutionConfig, record: RunRecord) -> RunRow {
    RunRow {
        problem: cfg.target.name.clone(),
        ruleset: cfg.ruleset,
        function_set: plan.function_set,
        nodes: cfg.nodes,
        lambda: cfg.lambda,
        rate: cfg.rate,
        seed: cfg.seed,
        record,
    }
}

fn sort_rows(rows: &mut [RunRow]) {
    rows.sort_by(|a, b| {
        (&a.problem, a.ruleset.name(), a.nodes, a.seed)
            .cmp(&(&b.problem, b.ruleset.name(), b.nodes, b.seed))
    });
}

/// Runs the whole grid in parallel. Output order and content depend only on
/// the plan, never on scheduling.
pub fn run_experiment(plan: &ExperimentPlan) -> Vec<RunRow> {
    let mut rows: Vec<RunRow> = configs(plan)
        .par_iter()
        .map(|cfg| row_for(plan, cfg, evolve(cfg)))
        .collect();
    sort_rows(&mut rows);
    rows
}

/// Like [`run_experiment`], additionally collecting every generation of
/// every run. Traces grow with generation counts, so keep budgets small.
pub fn run_experiment_traced(plan: &ExperimentPlan) -> (Vec<RunRow>, Vec<TraceRow>) {
    let mut per_run: Vec<(RunRow, Vec<TraceRow>)> = configs(plan)
        .par_iter()
        .map(|cfg| {
            let mut traces = Vec::new();
            let record = evolve_traced(cfg, |t| {
                traces.push(TraceRow {
                    problem: cfg.target.name.clone(),
                    ruleset: cfg.ruleset,
                    nodes: cfg.nodes,
                    seed: cfg.seed,
                    trace: *t,
                });
            });
            (row_for(plan, cfg, record), traces)
        })
        .collect();
    per_run.sort_by(|a, b| {
        (&a.0.problem, a.0.ruleset.name(), a.0.nodes, a.0.seed)
            .cmp(&(&b.0.problem, b.0.ruleset.name(), b.0.nodes, b.0.seed))
    });
    let mut rows = Vec::with_capacity(per_run.len());
    let mut traces = Vec::new();
    for (row, mut t) in per_run {
        rows.push(row);
        traces.append(&mut t);
    }
    (rows, traces)
}

pub const CSV_HEADER: &str = "problem,ruleset,function_set,nodes,lambda,rate,seed,\
evaluations,success,final_fitness,mean_active_size,snd_applications";

/// Writes one CSV line per run.
pub fn write_csv(rows: &[RunRow], out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.problem,
            r.ruleset,
            r.function_set,
            r.nodes,
            r.lambda,
            r.rate,
            r.seed,
            r.record.evaluations,
            r.record.success,
            r.record.best_fitness,
            r.record.mean_active_size,
            r.record.snd_applications,
        )?;
    }
    Ok(())
}

pub const TRACE_CSV_HEADER: &str =
    "problem,ruleset,nodes,seed,generation,evaluations,fitness,active_functions,snd_rule";

/// Writes one CSV line per traced generation.
pub fn write_trace_csv(rows: &[TraceRow], out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "{TRACE_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.problem,
            r.ruleset,
            r.nodes,
            r.seed,
            r.trace.generation,
            r.trace.evaluations,
            r.trace.parent_fitness,
            r.trace.active_functions,
            r.trace.snd_rule.map(|r| r.name()).unwrap_or(""),
        )?;
    }
    Ok(())
}

/// Comparison of a cell against the drift-free baseline with the same
/// problem, function set and node budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineComparison {
    /// Two-tailed Mann-Whitney p-value on evaluation counts.
    pub p_value: f64,
    /// Probability that a baseline run uses more evaluations than a run
    /// from this cell, counting ties as half.
    pub effect: f64,
}

/// Aggregates for one cell of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub problem: String,
    pub ruleset: RuleSet,
    pub function_set: FunctionSetChoice,
    pub nodes: usize,
    pub runs: usize,
    pub success_rate: f64,
    /// Median and interquartile range of evaluation counts, unsuccessful
    /// runs included at their spent budgets.
    pub evaluations: SampleSummary,
    pub mean_active_size: f64,
    /// Present for non-baseline cells whose baseline exists in the rows.
    pub vs_baseline: Option<BaselineComparison>,
}

/// Summarises rows cell by cell, ordered by problem, node budget and
/// rule-set name.
pub fn summarize(rows: &[RunRow]) -> Vec<CellSummary> {
    let mut keys: Vec<(&str, FunctionSetChoice, usize, RuleSet)> = rows
        .iter()
        .map(|r| (r.problem.as_str(), r.function_set, r.nodes, r.ruleset))
        .collect();
    keys.sort_by(|a, b| {
        (a.0, a.2, a.3.name(), a.1.name()).cmp(&(b.0, b.2, b.3.name(), b.1.name()))
    });
    keys.dedup();

    let cell_evals = |key: (&str, FunctionSetChoice, usize, RuleSet)| -> Vec<f64> {
        rows.iter()
            .filter(|r| {
                (r.problem.as_str(), r.function_set, r.nodes, r.ruleset) == key
            })
            .map(|r| r.record.evaluations as f64)
            .collect()
    };

    keys.into_iter()
        .map(|key| {
            let (problem, function_set, nodes, ruleset) = key;
            let members: Vec<&RunRow> = rows
                .iter()
                .filter(|r| {
                    (r.problem.as_str(), r.function_set, r.nodes, r.ruleset) == key
                })
                .collect();
            let evals: Vec<f64> = members
                .iter()
                .map(|r| r.record.evaluations as f64)
                .collect();
            let successes = members.iter().filter(|r| r.record.success).count();
            let active_mean = members
                .iter()
                .map(|r| r.record.mean_active_size)
                .sum::<f64>()
                / members.len() as f64;
            let vs_baseline = if ruleset == RuleSet::None {
                None
            } else {
                let baseline = cell_evals((problem, function_set, nodes, RuleSet::None));
                (!baseline.is_empty()).then(|| {
                    let (_, p_value) = mann_whitney_u(&baseline, &evals);
                    BaselineComparison {
                        p_value,
                        effect: vargha_delaney_a(&baseline, &evals),
                    }
                })
            };
            CellSummary {
                problem: problem.to_string(),
                ruleset,
                function_set,
                nodes,
                runs: members.len(),
                success_rate: successes as f64 / members.len() as f64,
                evaluations: median_iqr(&evals),
                mean_active_size: active_mean,
                vs_baseline,
            }
        })
        .collect()
}

/// Renders summaries as an aligned text table. Effect sizes are shown only
/// for comparisons significant at the 0.05 level.
pub fn render_summary(summaries: &[CellSummary]) -> String {
    let mut table = vec![vec![
        "problem".to_string(),
        "ruleset".to_string(),
        "set".to_string(),
        "nodes".to_string(),
        "runs".to_string(),
        "success".to_string(),
        "median_evals".to_string(),
        "iqr".to_string(),
        "mean_active".to_string(),
        "p_vs_none".to_string(),
        "effect".to_string(),
    ]];
    for s in summaries {
        let (p, a) = match s.vs_baseline {
            None => ("-".to_string(), "-".to_string()),
            Some(c) => (
                format!("{:.4}", c.p_value),
                if c.p_value < 0.05 {
                    format!("{:.3}", c.effect)
                } else {
                    "-".to_string()
                },
            ),
        };
        table.push(vec![
            s.problem.clone(),
            s.ruleset.to_string(),
            s.function_set.to_string(),
            s.nodes.to_string(),
            s.runs.to_string(),
            format!("{:.2}", s.success_rate),
            format!("{:.1}", s.evaluations.median),
            format!("{:.1}", s.evaluations.iqr),
            format!("{:.2}", s.mean_active_size),
            p,
            a,
        ]);
    }
    let widths: Vec<usize> = (0..table[0].len())
        .map(|c| table.iter().map(|row| row[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &table {
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                out.push_str("  ");
            }
            out.push_str(&format!("{cell:>width$}", width = widths[c]));
        }
        out.push('\n');
    }
    out
}
