//! Reference implementations the acceptance suite checks the library
//! against. Each one takes the most direct route available, trading speed
//! for obviousness, and shares no code with the implementations under test.

use eggp::circuit::{EdgeRef, FunctionKind, Individual, NodeId, NodeKind};
use eggp::semantics::TruthTable;

/// Evaluates one node for one row of input bits by plain recursion.
fn scalar_node(ind: &Individual, id: NodeId, row: usize, memo: &mut [Option<bool>]) -> bool {
    if let Some(v) = memo[id.index()] {
        return v;
    }
    let node = ind.node(id);
    let v = match node.kind {
        NodeKind::Input(slot) => (row >> slot) & 1 == 1,
        NodeKind::Output(_) => scalar_node(ind, node.out_edges[0], row, memo),
        NodeKind::Function(kind) => {
            let a = scalar_node(ind, node.out_edges[0], row, memo);
            match kind {
                FunctionKind::Not => !a,
                _ => {
                    let b = scalar_node(ind, node.out_edges[1], row, memo);
                    match kind {
                        FunctionKind::And => a && b,
                        FunctionKind::Or => a || b,
                        FunctionKind::Nand => !(a && b),
                        FunctionKind::Nor => !(a || b),
                        FunctionKind::Not => unreachable!(),
                    }
                }
            }
        }
    };
    memo[id.index()] = Some(v);
    v
}

/// Full truth table computed row by row, one recursive walk per row.
pub fn scalar_table(ind: &Individual) -> TruthTable {
    let mut table = TruthTable::new_zeroed(ind.input_count(), ind.output_count());
    for row in 0..1usize << ind.input_count() {
        let mut memo = vec![None; ind.node_count()];
        for (slot, out) in ind.output_ids().enumerate() {
            if scalar_node(ind, out, row, &mut memo) {
                table.set_bit(slot, row, true);
            }
        }
    }
    table
}

/// Legal retargets for `edge`, found by probing: a node is a candidate
/// exactly when pointing the edge at it leaves the individual valid and
/// actually moves it.
pub fn probe_candidates(ind: &Individual, edge: EdgeRef) -> Vec<NodeId> {
    let old = ind.edge_target(edge);
    ind.node_ids()
        .filter(|&t| {
            if t == old {
                return false;
            }
            let mut probe = ind.clone();
            probe.set_edge_target(edge, t);
            probe.validate().is_ok()
        })
        .collect()
}

/// Pearson's chi-square statistic against the given expected counts.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            assert!(e > 0.0, "expected count must be positive");
            let d = o as f64 - e;
            d * d / e
        })
        .sum()
}

/// Upper percentage points of the chi-square distribution at the 0.01
/// level, indexed by degrees of freedom.
pub fn chi_square_critical_01(df: usize) -> f64 {
    [
        6.63, 9.21, 11.34, 13.28, 15.09, 16.81, 18.48, 20.09, 21.67, 23.21,
    ][df - 1]
}

/// Effect size by counting every pair outright.
pub fn vd_a_pairs(xs: &[f64], ys: &[f64]) -> f64 {
    let mut wins = 0u64;
    let mut ties = 0u64;
    for &x in xs {
        for &y in ys {
            if x > y {
                wins += 1;
            } else if x == y {
                ties += 1;
            }
        }
    }
    (wins as f64 + 0.5 * ties as f64) / (xs.len() as f64 * ys.len() as f64)
}

/// U statistic of `group` against the rest of `pool`, by direct pair
/// comparison with ties counted as half.
fn pairwise_u(pool: &[f64], group: &[usize]) -> f64 {
    let mut u = 0.0;
    for (j, &y) in pool.iter().enumerate() {
        if group.contains(&j) {
            continue;
        }
        for &i in group {
            let x = pool[i];
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}

/// Exact two-sided Mann-Whitney p-value by enumerating every assignment of
/// positions to the first group and comparing pairwise U deviations.
pub fn exact_mwu_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let pool: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let n = pool.len();
    let k = xs.len().min(ys.len());
    let small_is_first = xs.len() <= ys.len();
    let observed_group: Vec<usize> = if small_is_first {
        (0..xs.len()).collect()
    } else {
        (xs.len()..n).collect()
    };
    let mu = (k * (n - k)) as f64 / 2.0;
    let observed_dev = (pairwise_u(&pool, &observed_group) - mu).abs();

    let mut extreme = 0u64;
    let mut total = 0u64;
    let mut group: Vec<usize> = (0..k).collect();
    loop {
        total += 1;
        if (pairwise_u(&pool, &group) - mu).abs() >= observed_dev - 1e-9 {
            extreme += 1;
        }
        // Advance to the next combination in lexicographic order.
        let mut i = k;
        loop {
            if i == 0 {
                return extreme as f64 / total as f64;
            }
            i -= 1;
            if group[i] != i + n - k {
                break;
            }
        }
        group[i] += 1;
        for j in i + 1..k {
            group[j] = group[j - 1] + 1;
        }
    }
}
