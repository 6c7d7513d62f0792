//! Circuit genotypes: fixed-shape directed acyclic graphs over boolean gates.
//!
//! A genotype holds `i` input nodes, `n` function nodes and `o` output nodes in
//! one dense index space. Out-edges point at the nodes a value is read *from*,
//! so reachability from the outputs walks towards the inputs.

use std::fmt;

use arrayvec::ArrayVec;
use thiserror::Error;

/// Largest gate arity in the function repertoire.
pub const MAX_ARITY: usize = 2;

/// Gate repertoire. All two-input gates are input-symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FunctionKind {
    And,
    Or,
    Not,
    Nand,
    Nor,
}

impl FunctionKind {
    pub const ALL: [FunctionKind; 5] = [
        FunctionKind::And,
        FunctionKind::Or,
        FunctionKind::Not,
        FunctionKind::Nand,
        FunctionKind::Nor,
    ];

    pub fn arity(self) -> usize {
        match self {
            FunctionKind::Not => 1,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FunctionKind::And => "AND",
            FunctionKind::Or => "OR",
            FunctionKind::Not => "NOT",
            FunctionKind::Nand => "NAND",
            FunctionKind::Nor => "NOR",
        }
    }
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Dense node index, stable for the lifetime of an individual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Node role. Input and output slots are positions in the external interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Input(usize),
    Output(usize),
    Function(FunctionKind),
}

impl NodeKind {
    /// Number of out-edges the role requires.
    pub fn required_arity(self) -> usize {
        match self {
            NodeKind::Input(_) => 0,
            NodeKind::Output(_) => 1,
            NodeKind::Function(k) => k.arity(),
        }
    }
}

/// Ordered out-edge list. Position within the list is part of edge identity.
pub type OutEdges = ArrayVec<NodeId, MAX_ARITY>;

/// One node: a role plus its ordered out-edges. Parallel edges are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    pub out_edges: OutEdges,
}

impl Node {
    pub fn new(kind: NodeKind, out_edges: OutEdges) -> Self {
        Node { kind, out_edges }
    }

    pub fn function_kind(&self) -> Option<FunctionKind> {
        match self.kind {
            NodeKind::Function(k) => Some(k),
            _ => None,
        }
    }
}

/// Edge identity: source node plus position in its out-edge list. Positions
/// are stable under retargeting, which never reorders the list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeRef {
    pub source: NodeId,
    pub position: usize,
}

impl fmt::Display for EdgeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.source, self.position)
    }
}

/// A structural invariant broken by an individual, naming the node at fault.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("{node} is an input but has out-edges")]
    InputWithEdges { node: NodeId },
    #[error("{node} has {actual} out-edges but its role requires {required}")]
    WrongArity {
        node: NodeId,
        required: usize,
        actual: usize,
    },
    #[error("edge {edge} targets output node {target}")]
    EdgeIntoOutput { edge: EdgeRef, target: NodeId },
    #[error("edge {edge} targets {target}, which is out of range")]
    DanglingEdge { edge: EdgeRef, target: NodeId },
    #[error("{node} has kind {actual:?} but the layout slot requires {expected}")]
    LayoutMismatch {
        node: NodeId,
        expected: &'static str,
        actual: NodeKind,
    },
    #[error("{node} lies on or above a directed cycle")]
    CycleInvolvement { node: NodeId },
}

/// A circuit genotype with fixed node counts.
///
/// Layout: indices `[0, i)` are inputs (slot = index), `[i, i + n)` are
/// function nodes and `[i + n, i + n + o)` are outputs (slot = index - i - n).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Individual {
    inputs: usize,
    outputs: usize,
    nodes: Vec<Node>,
}

impl Individual {
    /// Assembles an individual without validating it; pair with [`validate`].
    ///
    /// [`validate`]: Individual::validate
    pub fn from_parts(inputs: usize, outputs: usize, nodes: Vec<Node>) -> Self {
        assert!(
            nodes.len() >= inputs + outputs,
            "node list shorter than inputs + outputs"
        );
        Individual {
            inputs,
            outputs,
            nodes,
        }
    }

    pub fn input_count(&self) -> usize {
        self.inputs
    }

    pub fn output_count(&self) -> usize {
        self.outputs
    }

    pub fn function_count(&self) -> usize {
        self.nodes.len() - self.inputs - self.outputs
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn input_id(&self, slot: usize) -> NodeId {
        debug_assert!(slot < self.inputs);
        NodeId(slot)
    }

    pub fn function_id(&self, k: usize) -> NodeId {
        debug_assert!(k < self.function_count());
        NodeId(self.inputs + k)
    }

    pub fn output_id(&self, slot: usize) -> NodeId {
        debug_assert!(slot < self.outputs);
        NodeId(self.inputs + self.function_count() + slot)
    }

    pub fn is_input(&self, id: NodeId) -> bool {
        id.0 < self.inputs
    }

    pub fn is_function(&self, id: NodeId) -> bool {
        id.0 >= self.inputs && id.0 < self.inputs + self.function_count()
    }

    pub fn is_output(&self, id: NodeId) -> bool {
        id.0 >= self.inputs + self.function_count() && id.0 < self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut Node {
        &mut self.nodes[id.0]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn function_ids(&self) -> impl Iterator<Item = NodeId> {
        (self.inputs..self.inputs + self.function_count()).map(NodeId)
    }

    pub fn output_ids(&self) -> impl Iterator<Item = NodeId> {
        (self.inputs + self.function_count()..self.nodes.len()).map(NodeId)
    }

    pub fn edge_target(&self, edge: EdgeRef) -> NodeId {
        self.nodes[edge.source.0].out_edges[edge.position]
    }

    pub fn set_edge_target(&mut self, edge: EdgeRef, target: NodeId) {
        self.nodes[edge.source.0].out_edges[edge.position] = target;
    }

    /// All edges in (source index, position) order.
    pub fn edges(&self) -> impl Iterator<Item = EdgeRef> + '_ {
        self.nodes.iter().enumerate().flat_map(|(i, node)| {
            (0..node.out_edges.len()).map(move |position| EdgeRef {
                source: NodeId(i),
                position,
            })
        })
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.out_edges.len()).sum()
    }

    /// Marks every node reachable from an output by following out-edges.
    /// Outputs themselves are active; unreferenced inputs are not.
    pub fn active_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.nodes.len()];
        let mut stack: Vec<NodeId> = self.output_ids().collect();
        for id in &stack {
            mask[id.0] = true;
        }
        while let Some(id) = stack.pop() {
            for &target in &self.nodes[id.0].out_edges {
                if !mask[target.0] {
                    mask[target.0] = true;
                    stack.push(target);
                }
            }
        }
        mask
    }

    /// Active nodes in ascending id order.
    pub fn active_set(&self) -> Vec<NodeId> {
        self.active_mask()
            .iter()
            .enumerate()
            .filter_map(|(i, &active)| active.then_some(NodeId(i)))
            .collect()
    }

    /// Function nodes not reachable from any output, in ascending id order.
    /// Inputs and outputs never appear here regardless of reachability.
    pub fn neutral_pool(&self) -> Vec<NodeId> {
        let mask = self.active_mask();
        self.function_ids().filter(|id| !mask[id.0]).collect()
    }

    /// Number of active function nodes (inputs and outputs not counted).
    pub fn active_function_count(&self) -> usize {
        let mask = self.active_mask();
        self.function_ids().filter(|id| mask[id.0]).count()
    }

    /// Checks every structural invariant, reporting all violations found.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut violations = Vec::new();
        let total = self.nodes.len();
        for (i, node) in self.nodes.iter().enumerate() {
            let id = NodeId(i);
            let expected = if i < self.inputs {
                ("input", matches!(node.kind, NodeKind::Input(slot) if slot == i))
            } else if i < self.inputs + self.function_count() {
                ("function", matches!(node.kind, NodeKind::Function(_)))
            } else {
                let slot = i - self.inputs - self.function_count();
                ("output", matches!(node.kind, NodeKind::Output(s) if s == slot))
            };
            if !expected.1 {
                violations.push(Violation::LayoutMismatch {
                    node: id,
                    expected: expected.0,
                    actual: node.kind,
                });
                continue;
            }
            let required = node.kind.required_arity();
            let actual = node.out_edges.len();
            if actual != required {
                if matches!(node.kind, NodeKind::Input(_)) {
                    violations.push(Violation::InputWithEdges { node: id });
                } else {
                    violations.push(Violation::WrongArity {
                        node: id,
                        required,
                        actual,
                    });
                }
            }
            for position in 0..actual {
                let edge = EdgeRef {
                    source: id,
                    position,
                };
                let target = node.out_edges[position];
                if target.0 >= total {
                    violations.push(Violation::DanglingEdge { edge, target });
                } else if self.is_output(target) {
                    violations.push(Violation::EdgeIntoOutput { edge, target });
                }
            }
        }
        for node in self.unsortable_nodes() {
            violations.push(Violation::CycleInvolvement { node });
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    /// Nodes that cannot be placed in dependency order: members of directed
    /// cycles and everything that can reach one. Ignores dangling edges.
    fn unsortable_nodes(&self) -> Vec<NodeId> {
        let total = self.nodes.len();
        let mut remaining_deps: Vec<usize> = self
            .nodes
            .iter()
            .map(|n| n.out_edges.iter().filter(|t| t.0 < total).count())
            .collect();
        let mut consumers: Vec<Vec<NodeId>> = vec![Vec::new(); total];
        for (i, node) in self.nodes.iter().enumerate() {
            for &target in &node.out_edges {
                if target.0 < total {
                    consumers[target.0].push(NodeId(i));
                }
            }
        }
        let mut ready: Vec<NodeId> = (0..total)
            .filter(|&i| remaining_deps[i] == 0)
            .map(NodeId)
            .collect();
        let mut sorted = 0;
        while let Some(id) = ready.pop() {
            sorted += 1;
            for &consumer in &consumers[id.0] {
                remaining_deps[consumer.0] -= 1;
                if remaining_deps[consumer.0] == 0 {
                    ready.push(consumer);
                }
            }
        }
        if sorted == total {
            Vec::new()
        } else {
            (0..total)
                .filter(|&i| remaining_deps[i] > 0)
                .map(NodeId)
                .collect()
        }
    }
}
