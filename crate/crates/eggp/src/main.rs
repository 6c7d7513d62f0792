use std::error::Error;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;

use eggp::benchmarks::{format_truth_table, parse_truth_table, target_for, TargetSpec, PROBLEM_NAMES};
use eggp::experiment::{
    render_summary, run_experiment, run_experiment_traced, summarize, write_csv,
    write_trace_csv, ExperimentPlan, FunctionSetChoice,
};
use eggp::rewrites::RuleSet;

/// Evolutionary search over logic circuits, with optional neutral drift
/// rewrites between generations.
#[derive(Parser, Debug)]
#[command(name = "eggp", version)]
struct Args {
    /// Problems to run: built-in names, "all", or paths to truth-table
    /// files. Comma separated.
    #[arg(long, value_delimiter = ',')]
    problem: Vec<String>,

    /// Rule-sets to drift with: none, dm, dmn, id, cc, dmid. Comma
    /// separated; each forms its own experiment cell.
    #[arg(long, value_delimiter = ',', default_value = "none")]
    ruleset: Vec<RuleSet>,

    /// Gate repertoire: aon (AND, OR, NOT) or aonn (AND, OR, NAND, NOR).
    #[arg(long, default_value = "aon")]
    function_set: FunctionSetChoice,

    /// Function node budgets. Comma separated; each forms its own cell.
    #[arg(long, value_delimiter = ',', default_value = "100")]
    nodes: Vec<usize>,

    /// Children bred per generation.
    #[arg(long, default_value_t = 4)]
    lambda: usize,

    /// Per-gene mutation rate.
    #[arg(long, default_value_t = 0.01)]
    rate: f64,

    /// Replicate runs per cell, seeded consecutively from --seed.
    #[arg(long, default_value_t = 30)]
    runs: usize,

    /// Seed of the first replicate.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Fitness evaluation budget per run.
    #[arg(long, default_value_t = 20_000_000)]
    max_evals: u64,

    /// Write per-run CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Print a per-cell summary table with baseline comparisons.
    #[arg(long)]
    summary: bool,

    /// Print a built-in problem as a truth-table file and exit.
    #[arg(long, value_name = "NAME")]
    dump_target: Option<String>,

    /// Also write per-generation traces to <out>.trace.csv. Requires --out.
    #[arg(long)]
    trace: bool,
}

fn main() {
    if let Err(e) = run(Args::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(args: Args) -> Result<(), Box<dyn Error>> {
    if let Some(name) = &args.dump_target {
        let text = format_truth_table(&target_for(name)?);
        return Ok(emit(args.out.as_deref(), &text)?);
    }
    if args.problem.is_empty() {
        return Err("no problems given; pass --problem or --dump-target".into());
    }
    if args.trace && args.out.is_none() {
        return Err("--trace needs --out to name the trace file".into());
    }

    let mut targets: Vec<TargetSpec> = Vec::new();
    for token in &args.problem {
        if token.eq_ignore_ascii_case("all") {
            for name in PROBLEM_NAMES {
                targets.push(target_for(name)?);
            }
        } else if let Ok(spec) = target_for(token) {
            targets.push(spec);
        } else if Path::new(token).is_file() {
            let mut spec = parse_truth_table(&fs::read_to_string(token)?)
                .map_err(|e| format!("{token}: {e}"))?;
            spec.name = Path::new(token)
                .file_stem()
                .map(|s| s.to_string_lossy().replace(',', "_"))
                .unwrap_or_else(|| "custom".to_string());
            targets.push(spec);
        } else {
            return Err(format!(
                "unknown problem {token:?}; not a built-in name, \"all\", or a file"
            )
            .into());
        }
    }
    let mut seen = std::collections::HashSet::new();
    targets.retain(|t| seen.insert(t.name.clone()));

    let plan = ExperimentPlan {
        targets,
        rulesets: args.ruleset.clone(),
        function_set: args.function_set,
        node_budgets: args.nodes.clone(),
        lambda: args.lambda,
        rate: args.rate,
        runs: args.runs,
        base_seed: args.seed,
        max_evaluations: args.max_evals,
    };

    let rows = if args.trace {
        let (rows, traces) = run_experiment_traced(&plan);
        let out = args.out.as_ref().expect("checked above");
        let mut trace_path = out.clone().into_os_string();
        trace_path.push(".trace.csv");
        let mut file = fs::File::create(&trace_path)?;
        write_trace_csv(&traces, &mut file)?;
        rows
    } else {
        run_experiment(&plan)
    };

    match &args.out {
        Some(path) => {
            let mut file = fs::File::create(path)?;
            write_csv(&rows, &mut file)?;
        }
        None => {
            let stdout = std::io::stdout();
            write_csv(&rows, &mut stdout.lock())?;
        }
    }

    if args.summary {
        if args.out.is_none() {
            println!();
        }
        print!("{}", render_summary(&summarize(&rows)));
    }
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> std::io::Result<()> {
    match out {
        Some(path) => fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}
