//! Acceptance suite: one test per promised property of the system, each
//! checked against an independent reference or a pinned statistical bound
//! and reporting a PASS line with its evidence.
//!
//! Search-effort checks share one set of replication cells, computed once
//! and reused across tests, with consecutive seeds starting at zero.

mod common;

use std::sync::OnceLock;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{
    chi_square, chi_square_critical_01, exact_mwu_oracle, probe_candidates, scalar_table,
    vd_a_pairs,
};
use eggp::benchmarks::target_for;
use eggp::circuit::{EdgeRef, FunctionKind, Individual, Node, NodeId, NodeKind, OutEdges};
use eggp::experiment::{run_experiment, ExperimentPlan, FunctionSetChoice, RunRow};
use eggp::mutation::{edge_candidates, init_circuit, mutate_edge, point_mutate, MutationParams};
use eggp::rewrites::{
    apply_match, apply_ruleset, apply_ruleset_match, enumerate_matches, RuleId, RuleSet,
};
use eggp::semantics::evaluate;
use eggp::stats::{mann_whitney_u, median_iqr, vargha_delaney_a};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gate(kind: FunctionKind, targets: &[usize]) -> Node {
    Node::new(
        NodeKind::Function(kind),
        targets.iter().map(|&t| NodeId(t)).collect(),
    )
}

fn input(slot: usize) -> Node {
    Node::new(NodeKind::Input(slot), OutEdges::new())
}

fn output(slot: usize, target: usize) -> Node {
    Node::new(
        NodeKind::Output(slot),
        std::iter::once(NodeId(target)).collect(),
    )
}

/// Random individuals of assorted shapes, all with at most `max_inputs`
/// inputs so scalar reference evaluation stays exhaustive.
fn corpus(count: usize, max_inputs: usize, seed: u64) -> Vec<Individual> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let inputs = r.random_range(2..=max_inputs);
            let outputs = r.random_range(1..=2);
            let nodes = r.random_range(8..=16);
            init_circuit(inputs, outputs, nodes, &FunctionKind::ALL, &mut r)
        })
        .collect()
}

#[test]
fn rewrites_preserve_semantics_on_every_applicable_match() {
    // Uniform random graphs rarely contain reverse-rule patterns (a gate
    // whose inputs happen to be matched negations, say), so half the corpus
    // is drifted first: forward applications plant the configurations their
    // reverse counterparts consume, exactly as search trajectories do.
    let mut drifted = Vec::new();
    let mut r = rng(400);
    for ind in corpus(600, 4, 405) {
        for set in [RuleSet::Dm, RuleSet::Dmid, RuleSet::Cc] {
            let mut g = ind.clone();
            for _ in 0..3 {
                apply_ruleset(&mut g, set, &mut r);
            }
            drifted.push(g);
        }
    }

    let mut applications = [0u64; 14];
    let mut changed = 0u64;
    for ind in corpus(1000, 4, 401).iter().chain(&drifted) {
        let before = evaluate(ind).unwrap();
        for (ri, rule) in RuleId::ALL.into_iter().enumerate() {
            for m in enumerate_matches(ind, rule) {
                let mut probe = ind.clone();
                apply_match(&mut probe, &m).unwrap();
                applications[ri] += 1;
                if evaluate(&probe).unwrap() != before {
                    changed += 1;
                }
            }
        }
    }
    let total: u64 = applications.iter().sum();
    assert_eq!(changed, 0, "{changed} of {total} rewrites changed semantics");
    for (ri, rule) in RuleId::ALL.into_iter().enumerate() {
        assert!(
            applications[ri] >= 200,
            "rule {rule} exercised only {} times of {applications:?}",
            applications[ri]
        );
    }
    println!(
        "PASS rewrite semantic preservation: {total} applications across 14 rules, \
         0 truth-table changes (rarest rule seen {} times)",
        applications.iter().min().unwrap()
    );
}

#[test]
fn structure_survives_a_mutation_and_drift_fuzz() {
    let mut r = rng(402);
    let params = MutationParams::new(0.08, FunctionKind::ALL.to_vec());
    let mut pool = corpus(16, 5, 403);
    let sets = [RuleSet::Dm, RuleSet::Dmn, RuleSet::Id, RuleSet::Cc, RuleSet::Dmid];
    let steps = 100_000;
    for step in 0..steps {
        let which = r.random_range(0..pool.len());
        let roll = r.random_range(0..100);
        if roll < 5 {
            let inputs = r.random_range(2..=5);
            let outputs = r.random_range(1..=2);
            let nodes = r.random_range(8..=16);
            pool[which] = init_circuit(inputs, outputs, nodes, &FunctionKind::ALL, &mut r);
        } else if roll < 60 {
            point_mutate(&mut pool[which], &params, &mut r);
        } else {
            let set = sets[r.random_range(0..sets.len())];
            apply_ruleset(&mut pool[which], set, &mut r);
        }
        if let Err(violations) = pool[which].validate() {
            panic!("step {step} broke individual {which}: {violations:?}");
        }
    }
    println!("PASS structural fuzz: {steps} interleaved init/mutate/rewrite steps, 0 violations");
}

#[test]
fn bit_parallel_evaluation_matches_the_scalar_reference() {
    let individuals = corpus(500, 4, 404);
    for (i, ind) in individuals.iter().enumerate() {
        assert_eq!(
            evaluate(ind).unwrap(),
            scalar_table(ind),
            "individual {i} disagrees with the row-by-row reference"
        );
    }
    println!(
        "PASS evaluator equivalence: {} individuals, every output column identical \
         to row-by-row recursion",
        individuals.len()
    );
}

#[test]
fn edge_mutation_is_uniform_over_exactly_the_legal_targets() {
    // in0 in1 | AND(0,1) OR(2,1) AND(3,3) NOT(4) | out0->5 out1->5
    let ind = Individual::from_parts(
        2,
        2,
        vec![
            input(0),
            input(1),
            gate(FunctionKind::And, &[0, 1]),
            gate(FunctionKind::Or, &[2, 1]),
            gate(FunctionKind::And, &[3, 3]),
            gate(FunctionKind::Not, &[4]),
            output(0, 5),
            output(1, 5),
        ],
    );
    ind.validate().unwrap();
    let edge = EdgeRef {
        source: NodeId(5),
        position: 0,
    };
    let legal = edge_candidates(&ind, edge);
    assert_eq!(legal, probe_candidates(&ind, edge), "candidate sets disagree");
    assert_eq!(legal.len(), 4, "fixture should offer four targets");

    let trials = 100_000u64;
    let mut counts = vec![0u64; legal.len()];
    let mut r = rng(406);
    for _ in 0..trials {
        let mut probe = ind.clone();
        assert!(mutate_edge(&mut probe, edge, &mut r));
        let t = probe.edge_target(edge);
        counts[legal.iter().position(|&c| c == t).expect("legal target")] += 1;
    }
    let expected = vec![trials as f64 / legal.len() as f64; legal.len()];
    let statistic = chi_square(&counts, &expected);
    let critical = chi_square_critical_01(legal.len() - 1);
    assert!(
        statistic < critical,
        "chi-square {statistic:.2} over {counts:?} exceeds {critical}"
    );
    println!(
        "PASS edge mutation uniformity: {trials} draws over {} probed targets, \
         chi-square {statistic:.2} < {critical}",
        legal.len()
    );
}

#[test]
fn rank_statistics_match_independent_references() {
    let mut r = rng(406);
    let mut exact_checks = 0u64;
    for n1 in 1..=8usize {
        for n2 in 1..=8usize {
            for tie_heavy in [true, true, true, false] {
                let draw = |r: &mut ChaCha8Rng| -> f64 {
                    if tie_heavy {
                        r.random_range(0..6) as f64
                    } else {
                        r.random::<f64>()
                    }
                };
                let xs: Vec<f64> = (0..n1).map(|_| draw(&mut r)).collect();
                let ys: Vec<f64> = (0..n2).map(|_| draw(&mut r)).collect();
                let (_, p) = mann_whitney_u(&xs, &ys);
                let reference = exact_mwu_oracle(&xs, &ys);
                assert!(
                    (p - reference).abs() < 1e-12,
                    "sizes ({n1},{n2}), {xs:?} vs {ys:?}: p {p} != oracle {reference}"
                );
                exact_checks += 1;
            }
        }
    }

    let mut effect_checks = 0u64;
    for _ in 0..1000 {
        let n1 = r.random_range(1..30);
        let n2 = r.random_range(1..30);
        let xs: Vec<f64> = (0..n1).map(|_| r.random_range(0..10) as f64).collect();
        let ys: Vec<f64> = (0..n2).map(|_| r.random_range(0..10) as f64).collect();
        let a = vargha_delaney_a(&xs, &ys);
        assert_eq!(a, vd_a_pairs(&xs, &ys), "{xs:?} vs {ys:?}");
        effect_checks += 1;
    }
    println!(
        "PASS rank statistics: {exact_checks} exact test p-values equal the \
         enumeration oracle, {effect_checks} effect sizes bit-equal the pair count"
    );
}

#[test]
fn drift_rule_and_match_are_each_chosen_uniformly() {
    // OUT -> NOT -> AND(in0, in1) with two spare OR gates. Under the
    // DeMorgan and negation rules exactly two rules match: pushing the NOT
    // through the AND (2 role orders of the spares) and inserting a double
    // negation on one of the 4 active-source edges (8 ordered variants).
    let ind = Individual::from_parts(
        2,
        1,
        vec![
            input(0),
            input(1),
            gate(FunctionKind::And, &[0, 1]),
            gate(FunctionKind::Not, &[2]),
            gate(FunctionKind::Or, &[0, 1]),
            gate(FunctionKind::Or, &[0, 1]),
            output(0, 3),
        ],
    );
    ind.validate().unwrap();
    let demorgan = enumerate_matches(&ind, RuleId::DeMorganF1);
    let negation = enumerate_matches(&ind, RuleId::IdNotF);
    assert_eq!(demorgan.len(), 2);
    assert_eq!(negation.len(), 8);
    for rule in RuleSet::Dmn.rules() {
        let n = enumerate_matches(&ind, *rule).len();
        match rule {
            RuleId::DeMorganF1 => assert_eq!(n, 2),
            RuleId::IdNotF => assert_eq!(n, 8),
            _ => assert_eq!(n, 0, "{rule} should not match the fixture"),
        }
    }

    let trials = 40_000u64;
    let mut rule_counts = [0u64; 2];
    let mut demorgan_counts = vec![0u64; demorgan.len()];
    let mut negation_counts = vec![0u64; negation.len()];
    let mut r = rng(407);
    for _ in 0..trials {
        let mut probe = ind.clone();
        let m = apply_ruleset_match(&mut probe, RuleSet::Dmn, &mut r).expect("fixture matches");
        match m.rule {
            RuleId::DeMorganF1 => {
                rule_counts[0] += 1;
                demorgan_counts[demorgan.iter().position(|x| *x == m).unwrap()] += 1;
            }
            RuleId::IdNotF => {
                rule_counts[1] += 1;
                negation_counts[negation.iter().position(|x| *x == m).unwrap()] += 1;
            }
            other => panic!("unexpected rule {other}"),
        }
    }

    let rule_stat = chi_square(&rule_counts, &[trials as f64 / 2.0; 2]);
    assert!(
        rule_stat < chi_square_critical_01(1),
        "rule split {rule_counts:?} gives chi-square {rule_stat:.2}"
    );
    let dm_expected = vec![rule_counts[0] as f64 / 2.0; 2];
    let dm_stat = chi_square(&demorgan_counts, &dm_expected);
    assert!(
        dm_stat < chi_square_critical_01(1),
        "push-through split {demorgan_counts:?} gives chi-square {dm_stat:.2}"
    );
    let neg_expected = vec![rule_counts[1] as f64 / 8.0; 8];
    let neg_stat = chi_square(&negation_counts, &neg_expected);
    assert!(
        neg_stat < chi_square_critical_01(7),
        "double-negation split {negation_counts:?} gives chi-square {neg_stat:.2}"
    );
    println!(
        "PASS two-stage drift selection: {trials} draws, rule split chi-square \
         {rule_stat:.2} (df 1), within-rule {dm_stat:.2} (df 1) and {neg_stat:.2} (df 7)"
    );
}

/// Replication cells shared by the search-effort criteria.
fn cells() -> &'static Vec<RunRow> {
    static CELLS: OnceLock<Vec<RunRow>> = OnceLock::new();
    CELLS.get_or_init(|| {
        let plan = |problem: &str,
                    rulesets: Vec<RuleSet>,
                    set: FunctionSetChoice,
                    nodes: Vec<usize>,
                    runs: usize| ExperimentPlan {
            targets: vec![target_for(problem).unwrap()],
            rulesets,
            function_set: set,
            node_budgets: nodes,
            lambda: 4,
            rate: 0.01,
            runs,
            base_seed: 0,
            max_evaluations: 20_000_000,
        };
        let mut rows = Vec::new();
        let aon = FunctionSetChoice::Aon;
        rows.extend(run_experiment(&plan("1-Add", vec![RuleSet::None], aon, vec![100], 50)));
        rows.extend(run_experiment(&plan(
            "1-Add",
            vec![RuleSet::None],
            FunctionSetChoice::Aonn,
            vec![100],
            50,
        )));
        rows.extend(run_experiment(&plan("3-EP", vec![RuleSet::None], aon, vec![100], 50)));
        rows.extend(run_experiment(&plan(
            "2-Add",
            vec![RuleSet::None, RuleSet::Dmn, RuleSet::Dmid],
            aon,
            vec![100],
            50,
        )));
        rows.extend(run_experiment(&plan("2-Add", vec![RuleSet::None], aon, vec![50], 30)));
        rows.extend(run_experiment(&plan("2-Add", vec![RuleSet::Dmn], aon, vec![150], 30)));
        rows.extend(run_experiment(&plan(
            "3-Add",
            vec![RuleSet::None, RuleSet::Dmn],
            aon,
            vec![100],
            50,
        )));
        rows
    })
}

fn cell(problem: &str, ruleset: RuleSet, set: FunctionSetChoice, nodes: usize) -> Vec<&'static RunRow> {
    let rows: Vec<&RunRow> = cells()
        .iter()
        .filter(|r| {
            r.problem == problem && r.ruleset == ruleset && r.function_set == set && r.nodes == nodes
        })
        .collect();
    assert!(!rows.is_empty(), "no cell for {problem}/{ruleset}/{set}/{nodes}");
    rows
}

fn evaluations(rows: &[&RunRow]) -> Vec<f64> {
    rows.iter().map(|r| r.record.evaluations as f64).collect()
}

const AON: FunctionSetChoice = FunctionSetChoice::Aon;

#[test]
fn baseline_search_effort_sits_in_the_expected_bands() {
    let adder = evaluations(&cell("1-Add", RuleSet::None, AON, 100));
    let parity = evaluations(&cell("3-EP", RuleSet::None, AON, 100));
    let adder_median = median_iqr(&adder).median;
    let parity_median = median_iqr(&parity).median;
    assert!(adder.len() >= 50 && parity.len() >= 50);
    assert!(
        (5_000.0..=47_000.0).contains(&adder_median),
        "one-bit adder median {adder_median} outside [5000, 47000]"
    );
    assert!(
        (2_000.0..=23_000.0).contains(&parity_median),
        "three-bit parity median {parity_median} outside [2000, 23000]"
    );
    println!(
        "PASS baseline effort bands: 1-Add median {adder_median} in [5000, 47000], \
         3-EP median {parity_median} in [2000, 23000] over 50 runs each"
    );
}

#[test]
fn nand_nor_repertoire_beats_and_or_not_on_the_one_bit_adder() {
    let aon = evaluations(&cell("1-Add", RuleSet::None, AON, 100));
    let aonn = evaluations(&cell("1-Add", RuleSet::None, FunctionSetChoice::Aonn, 100));
    let aon_median = median_iqr(&aon).median;
    let aonn_median = median_iqr(&aonn).median;
    let (_, p) = mann_whitney_u(&aon, &aonn);
    assert!(
        aonn_median < aon_median,
        "aonn median {aonn_median} not below aon median {aon_median}"
    );
    assert!(p < 0.05, "repertoire difference not significant: p = {p}");
    println!(
        "PASS repertoire comparison: 1-Add medians aonn {aonn_median} < aon {aon_median}, \
         p = {p:.2e}"
    );
}

#[test]
fn demorgan_negation_drift_accelerates_the_larger_adders() {
    for problem in ["2-Add", "3-Add"] {
        let baseline = evaluations(&cell(problem, RuleSet::None, AON, 100));
        let drifted = evaluations(&cell(problem, RuleSet::Dmn, AON, 100));
        let baseline_median = median_iqr(&baseline).median;
        let drifted_median = median_iqr(&drifted).median;
        let (_, p) = mann_whitney_u(&baseline, &drifted);
        let a = vargha_delaney_a(&baseline, &drifted);
        assert!(
            drifted_median < baseline_median,
            "{problem}: drifted median {drifted_median} not below baseline {baseline_median}"
        );
        assert!(p < 0.05, "{problem}: not significant, p = {p}");
        assert!(a > 0.6, "{problem}: effect size {a} too small");
        println!(
            "PASS drift speed-up on {problem}: medians {drifted_median} vs \
             {baseline_median}, p = {p:.2e}, effect {a:.3}"
        );
    }
}

#[test]
fn demorgan_identity_drift_accelerates_the_two_bit_adder() {
    let baseline = evaluations(&cell("2-Add", RuleSet::None, AON, 100));
    let drifted = evaluations(&cell("2-Add", RuleSet::Dmid, AON, 100));
    let baseline_median = median_iqr(&baseline).median;
    let drifted_median = median_iqr(&drifted).median;
    let (_, p) = mann_whitney_u(&baseline, &drifted);
    assert!(
        drifted_median < baseline_median,
        "drifted median {drifted_median} not below baseline {baseline_median}"
    );
    assert!(p < 0.05, "not significant: p = {p}");
    println!(
        "PASS extended drift speed-up: 2-Add medians {drifted_median} vs \
         {baseline_median}, p = {p:.2e}"
    );
}

#[test]
fn drift_runs_grow_larger_active_circuits() {
    let sizes = |ruleset| -> Vec<f64> {
        cell("3-Add", ruleset, AON, 100)
            .iter()
            .map(|r| r.record.mean_active_size)
            .collect()
    };
    let baseline = sizes(RuleSet::None);
    let drifted = sizes(RuleSet::Dmn);
    let baseline_median = median_iqr(&baseline).median;
    let drifted_median = median_iqr(&drifted).median;
    let (_, p) = mann_whitney_u(&baseline, &drifted);
    assert!(baseline.len() >= 30 && drifted.len() >= 30);
    assert!(
        drifted_median > baseline_median,
        "drifted active size {drifted_median} not above baseline {baseline_median}"
    );
    assert!(p < 0.05, "active size difference not significant: p = {p}");
    println!(
        "PASS drift bloat: 3-Add mean active sizes {drifted_median:.1} vs \
         {baseline_median:.1}, p = {p:.2e}"
    );
}

#[test]
fn node_budget_moves_search_effort_in_the_reported_directions() {
    let take30 = |rows: Vec<&'static RunRow>| -> Vec<f64> { evaluations(&rows[..30]) };
    let none_small = take30(cell("2-Add", RuleSet::None, AON, 50));
    let none_standard = take30(cell("2-Add", RuleSet::None, AON, 100));
    let small_median = median_iqr(&none_small).median;
    let standard_median = median_iqr(&none_standard).median;
    assert!(
        small_median > standard_median,
        "50-node median {small_median} not above 100-node median {standard_median}"
    );

    let dmn_large = take30(cell("2-Add", RuleSet::Dmn, AON, 150));
    let dmn_standard = take30(cell("2-Add", RuleSet::Dmn, AON, 100));
    let large_median = median_iqr(&dmn_large).median;
    let dmn_standard_median = median_iqr(&dmn_standard).median;
    assert!(
        large_median > dmn_standard_median,
        "150-node drift median {large_median} not above 100-node {dmn_standard_median}"
    );
    println!(
        "PASS node budget effects: drift-free 2-Add medians {small_median} (50 nodes) > \
         {standard_median} (100), drifted {large_median} (150 nodes) > \
         {dmn_standard_median} (100), 30 runs per cell"
    );
}
