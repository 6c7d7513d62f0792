//! Point mutation: random genotype construction, edge retargeting that
//! preserves acyclicity, and function-kind resampling with arity repair.

use rand::{Rng, RngExt};

use crate::circuit::{EdgeRef, FunctionKind, Individual, Node, NodeId, NodeKind, OutEdges};

/// Per-gene mutation probability and the gate repertoire to draw from.
#[derive(Debug, Clone, PartialEq)]
pub struct MutationParams {
    pub rate: f64,
    pub function_set: Vec<FunctionKind>,
}

impl MutationParams {
    pub fn new(rate: f64, function_set: Vec<FunctionKind>) -> Self {
        assert!((0.0..=1.0).contains(&rate), "rate must be in [0, 1]");
        assert!(!function_set.is_empty(), "function set must be non-empty");
        MutationParams {
            rate,
            function_set,
        }
    }
}

/// The classic repertoire {AND, OR, NOT}.
pub const AON: [FunctionKind; 3] = [FunctionKind::And, FunctionKind::Or, FunctionKind::Not];

/// The inverting two-input repertoire {AND, OR, NAND, NOR}.
pub const AONN: [FunctionKind; 4] = [
    FunctionKind::And,
    FunctionKind::Or,
    FunctionKind::Nand,
    FunctionKind::Nor,
];

/// Builds a random valid genotype. Function nodes are created in index
/// order, each wired to uniformly random already-created nodes, so the
/// result is acyclic by construction; every output is wired to a uniformly
/// random non-output node.
pub fn init_circuit<R: Rng + ?Sized>(
    inputs: usize,
    outputs: usize,
    function_nodes: usize,
    function_set: &[FunctionKind],
    rng: &mut R,
) -> Individual {
    assert!(inputs >= 1 && outputs >= 1 && function_nodes >= 1);
    assert!(!function_set.is_empty());
    let mut nodes = Vec::with_capacity(inputs + function_nodes + outputs);
    for slot in 0..inputs {
        nodes.push(Node::new(NodeKind::Input(slot), OutEdges::new()));
    }
    for k in 0..function_nodes {
        let kind = function_set[rng.random_range(0..function_set.len())];
        let mut edges = OutEdges::new();
        for _ in 0..kind.arity() {
            edges.push(NodeId(rng.random_range(0..inputs + k)));
        }
        nodes.push(Node::new(NodeKind::Function(kind), edges));
    }
    for slot in 0..outputs {
        let mut edges = OutEdges::new();
        edges.push(NodeId(rng.random_range(0..inputs + function_nodes)));
        nodes.push(Node::new(NodeKind::Output(slot), edges));
    }
    Individual::from_parts(inputs, outputs, nodes)
}

/// Marks `from` and every node with a directed path to it.
fn mark_self_and_ancestors(ind: &Individual, from: NodeId, marked: &mut [bool]) {
    let total = ind.node_count();
    let mut offsets = vec![0u32; total + 1];
    for id in ind.node_ids() {
        for &target in &ind.node(id).out_edges {
            offsets[target.index() + 1] += 1;
        }
    }
    for i in 0..total {
        offsets[i + 1] += offsets[i];
    }
    let mut sources = vec![0u32; offsets[total] as usize];
    let mut cursor = offsets.clone();
    for id in ind.node_ids() {
        for &target in &ind.node(id).out_edges {
            sources[cursor[target.index()] as usize] = id.index() as u32;
            cursor[target.index()] += 1;
        }
    }
    marked[from.index()] = true;
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        let range = offsets[v.index()] as usize..offsets[v.index() + 1] as usize;
        for &source in &sources[range] {
            if !marked[source as usize] {
                marked[source as usize] = true;
                stack.push(NodeId(source as usize));
            }
        }
    }
}

/// Legal retarget destinations for an edge: every node except outputs, the
/// current target, the source itself, and the source's ancestors (whose
/// selection would close a directed cycle). Ascending id order.
pub fn edge_candidates(ind: &Individual, edge: EdgeRef) -> Vec<NodeId> {
    let mut marked = vec![false; ind.node_count()];
    mark_self_and_ancestors(ind, edge.source, &mut marked);
    let old_target = ind.edge_target(edge);
    ind.node_ids()
        .filter(|&id| !ind.is_output(id) && id != old_target && !marked[id.index()])
        .collect()
}

/// Moves one edge to a uniformly random legal destination. Returns false
/// when no destination exists, leaving the individual untouched.
pub fn mutate_edge<R: Rng + ?Sized>(ind: &mut Individual, edge: EdgeRef, rng: &mut R) -> bool {
    let mut marked = vec![false; ind.node_count()];
    mark_self_and_ancestors(ind, edge.source, &mut marked);
    let old_target = ind.edge_target(edge);
    let eligible =
        |id: NodeId| !ind.is_output(id) && id != old_target && !marked[id.index()];
    let count = ind.node_ids().filter(|&id| eligible(id)).count();
    if count == 0 {
        return false;
    }
    let choice = rng.random_range(0..count);
    let target = ind
        .node_ids()
        .filter(|&id| eligible(id))
        .nth(choice)
        .expect("choice is within the candidate count");
    ind.set_edge_target(edge, target);
    true
}

/// Resamples a function node's kind from the repertoire minus its current
/// kind, then repairs arity: grown nodes gain edges to uniformly random
/// acyclicity-safe non-output targets, shrunk ones lose uniformly chosen
/// edges. Returns false when the repertoire offers no alternative.
pub fn mutate_function<R: Rng + ?Sized>(
    ind: &mut Individual,
    node: NodeId,
    function_set: &[FunctionKind],
    rng: &mut R,
) -> bool {
    let current = ind
        .node(node)
        .function_kind()
        .expect("mutate_function requires a function node");
    let alternatives: Vec<FunctionKind> = function_set
        .iter()
        .copied()
        .filter(|&k| k != current)
        .collect();
    if alternatives.is_empty() {
        return false;
    }
    let kind = alternatives[rng.random_range(0..alternatives.len())];
    ind.node_mut(node).kind = NodeKind::Function(kind);
    let arity = kind.arity();
    while ind.node(node).out_edges.len() > arity {
        let len = ind.node(node).out_edges.len();
        let position = rng.random_range(0..len);
        ind.node_mut(node).out_edges.remove(position);
    }
    if ind.node(node).out_edges.len() < arity {
        let mut marked = vec![false; ind.node_count()];
        mark_self_and_ancestors(ind, node, &mut marked);
        let eligible: Vec<NodeId> = ind
            .node_ids()
            .filter(|&id| !ind.is_output(id) && !marked[id.index()])
            .collect();
        debug_assert!(!eligible.is_empty(), "inputs are always eligible targets");
        while ind.node(node).out_edges.len() < arity {
            let target = eligible[rng.random_range(0..eligible.len())];
            ind.node_mut(node).out_edges.push(target);
        }
    }
    true
}

/// Visits each index of `0..len` independently with probability `rate`,
/// using geometric gap sampling so the cost is proportional to the hits.
fn sparse_hits<R: Rng + ?Sized>(len: usize, rate: f64, rng: &mut R, mut f: impl FnMut(usize)) {
    if len == 0 || rate <= 0.0 {
        return;
    }
    if rate >= 1.0 {
        for i in 0..len {
            f(i);
        }
        return;
    }
    let log_miss = (1.0 - rate).ln();
    let mut position = 0usize;
    loop {
        let u = 1.0 - rng.random::<f64>();
        let gap = u.ln() / log_miss;
        if gap >= (len - position) as f64 {
            return;
        }
        position += gap as usize;
        f(position);
        position += 1;
        if position >= len {
            return;
        }
    }
}

/// Point mutation: every function node, then every edge (output edges
/// included), is hit independently with probability `params.rate`. Kind
/// mutations land first, in index order, so edge genes refer to the
/// repaired graph. Returns the number of attempted mutations, counting
/// attempts that changed nothing.
pub fn point_mutate<R: Rng + ?Sized>(
    ind: &mut Individual,
    params: &MutationParams,
    rng: &mut R,
) -> usize {
    debug_assert!((0.0..=1.0).contains(&params.rate));
    debug_assert!(!params.function_set.is_empty());
    let mut attempts = 0;
    let functions = ind.function_count();
    let mut kind_hits: Vec<usize> = Vec::new();
    sparse_hits(functions, params.rate, rng, |k| kind_hits.push(k));
    for &k in &kind_hits {
        mutate_function(ind, ind.function_id(k), &params.function_set, rng);
        attempts += 1;
    }
    let edge_total = ind.edge_count();
    let mut edge_hits: Vec<usize> = Vec::new();
    sparse_hits(edge_total, params.rate, rng, |e| edge_hits.push(e));
    for &e in &edge_hits {
        mutate_edge(ind, nth_edge(ind, e), rng);
        attempts += 1;
    }
    attempts
}

/// Edge at position `index` in canonical (source, position) order.
fn nth_edge(ind: &Individual, index: usize) -> EdgeRef {
    let mut remaining = index;
    for id in ind.node_ids() {
        let degree = ind.node(id).out_edges.len();
        if remaining < degree {
            return EdgeRef {
                source: id,
                position: remaining,
            };
        }
        remaining -= degree;
    }
    unreachable!("edge index out of range")
}
