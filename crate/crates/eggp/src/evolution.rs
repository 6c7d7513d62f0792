//! The 1+lambda evolutionary loop with optional neutral drift between
//! generations.
//!
//! Each generation clones the surviving parent into lambda children, point
//! mutates them and keeps the best child whenever it is at least as fit as
//! the parent, so neutral moves are always accepted. When a rule-set is
//! configured, one rewrite is attempted on the parent at the start of every
//! generation; rewrites never change fitness, only the genotype's shape.

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::benchmarks::TargetSpec;
use crate::circuit::{FunctionKind, Individual};
use crate::mutation::{init_circuit, point_mutate, MutationParams};
use crate::rewrites::{apply_ruleset, RuleId, RuleSet};
use crate::semantics::{Evaluator, Fitness};

/// Full description of one search run. Equal configs replay identically.
#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    pub target: TargetSpec,
    pub function_set: Vec<FunctionKind>,
    pub nodes: usize,
    pub lambda: usize,
    pub rate: f64,
    pub ruleset: RuleSet,
    pub max_evaluations: u64,
    pub seed: u64,
}

impl EvolutionConfig {
    /// Standard search parameters: 100 function nodes, four children per
    /// generation, mutation rate 0.01, AND/OR/NOT gates, a twenty million
    /// evaluation budget.
    pub fn new(target: TargetSpec, ruleset: RuleSet) -> Self {
        EvolutionConfig {
            target,
            function_set: crate::mutation::AON.to_vec(),
            nodes: 100,
            lambda: 4,
            rate: 0.01,
            ruleset,
            max_evaluations: 20_000_000,
            seed: 0,
        }
    }
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Fitness evaluations spent: one for the initial individual plus
    /// lambda per generation.
    pub evaluations: u64,
    /// Whether a perfect individual was found within the budget.
    pub success: bool,
    pub best_fitness: Fitness,
    /// Mean number of active function nodes over the initial individual and
    /// every generation's survivor.
    pub mean_active_size: f64,
    /// Number of generations in which a rewrite fired.
    pub snd_applications: u64,
}

/// One generation's state, as reported to the trace callback after
/// selection. Generation zero describes the initial individual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationTrace {
    pub generation: u64,
    pub evaluations: u64,
    pub parent_fitness: Fitness,
    pub active_functions: usize,
    /// Rewrite applied at the start of this generation, if any.
    pub snd_rule: Option<RuleId>,
}

/// Index of the surviving child, or `None` when the parent out-ranks every
/// child. A child is kept whenever its fitness is at most the parent's, so
/// equal fitness drifts away from the parent; equally-best children are
/// chosen uniformly, without consuming randomness when the best is unique.
pub fn select_survivor<R: Rng + ?Sized>(
    parent: Fitness,
    children: &[Fitness],
    rng: &mut R,
) -> Option<usize> {
    let best = children.iter().copied().min()?;
    if best > parent {
        return None;
    }
    let tied = children.iter().filter(|&&f| f == best).count();
    let pick = if tied == 1 {
        0
    } else {
        rng.random_range(0..tied)
    };
    children
        .iter()
        .enumerate()
        .filter(|&(_, &f)| f == best)
        .nth(pick)
        .map(|(i, _)| i)
}

/// Runs the search to a perfect solution or to the evaluation budget.
pub fn evolve(cfg: &EvolutionConfig) -> RunRecord {
    evolve_traced(cfg, |_| {})
}

/// Like [`evolve`], invoking `on_generation` after the initial evaluation
/// and after each generation's selection.
pub fn evolve_traced(
    cfg: &EvolutionConfig,
    mut on_generation: impl FnMut(&GenerationTrace),
) -> RunRecord {
    assert!(cfg.lambda >= 1, "lambda must be at least 1");
    assert!(cfg.max_evaluations >= 1, "budget must allow the initial evaluation");
    let params = MutationParams::new(cfg.rate, cfg.function_set.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut evaluator = Evaluator::new();

    let mut parent = init_circuit(
        cfg.target.inputs,
        cfg.target.outputs,
        cfg.nodes,
        &cfg.function_set,
        &mut rng,
    );
    let mut parent_fitness = evaluator.fitness_unchecked(&parent, &cfg.target.table);
    let mut evaluations = 1u64;
    let mut generation = 0u64;
    let mut snd_applications = 0u64;
    let mut active_sum = parent.active_function_count() as f64;
    let mut active_samples = 1u64;
    on_generation(&GenerationTrace {
        generation,
        evaluations,
        parent_fitness,
        active_functions: parent.active_function_count(),
        snd_rule: None,
    });

    let lambda = cfg.lambda;
    let mut children: Vec<Individual> = vec![parent.clone(); lambda];
    let mut child_fitness: Vec<Fitness> = vec![parent_fitness; lambda];

    while !parent_fitness.is_perfect() && evaluations + lambda as u64 <= cfg.max_evaluations {
        generation += 1;
        let mut snd_rule = None;
        if cfg.ruleset != RuleSet::None {
            snd_rule = apply_ruleset(&mut parent, cfg.ruleset, &mut rng);
            if snd_rule.is_some() {
                snd_applications += 1;
                debug_assert_eq!(
                    evaluator.fitness_unchecked(&parent, &cfg.target.table),
                    parent_fitness,
                    "rewrites must preserve fitness"
                );
            }
        }
        for c in 0..lambda {
            children[c].clone_from(&parent);
            point_mutate(&mut children[c], &params, &mut rng);
            child_fitness[c] = evaluator.fitness_unchecked(&children[c], &cfg.target.table);
        }
        evaluations += lambda as u64;
        if let Some(i) = select_survivor(parent_fitness, &child_fitness, &mut rng) {
            std::mem::swap(&mut parent, &mut children[i]);
            parent_fitness = child_fitness[i];
        }
        active_sum += parent.active_function_count() as f64;
        active_samples += 1;
        on_generation(&GenerationTrace {
            generation,
            evaluations,
            parent_fitness,
            active_functions: parent.active_function_count(),
            snd_rule,
        });
    }

    RunRecord {
        evaluations,
        success: parent_fitness.is_perfect(),
        best_fitness: parent_fitness,
        mean_active_size: active_sum / active_samples as f64,
        snd_applications,
    }
}
