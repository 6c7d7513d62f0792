//! Neutral drift rewrites: semantics-preserving graph rules that restructure
//! the active circuit by absorbing or releasing neutral nodes.
//!
//! Rule application follows probabilistic rule-set semantics: first a rule is
//! chosen uniformly among the rules that currently have at least one match,
//! then one of that rule's matches is chosen uniformly. Matches bind pattern
//! roles injectively, and multiplicity counts ordered role assignments, so a
//! rule needing two neutral nodes has k(k-1) variants per configuration.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngExt};
use thiserror::Error;

use crate::circuit::{EdgeRef, FunctionKind, Individual, NodeId, NodeKind, OutEdges};

/// The fourteen rewrite rules. Forward rules grow the active graph by
/// absorbing neutral nodes; reverse rules contract it back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleId {
    DeMorganF1,
    DeMorganF2,
    DeMorganR1,
    DeMorganR2,
    IdAndF,
    IdAndR,
    IdOrF,
    IdOrR,
    IdNotF,
    IdNotR,
    Copy1,
    Copy2,
    Collapse1,
    Collapse2,
}

impl RuleId {
    pub const ALL: [RuleId; 14] = [
        RuleId::DeMorganF1,
        RuleId::DeMorganF2,
        RuleId::DeMorganR1,
        RuleId::DeMorganR2,
        RuleId::IdAndF,
        RuleId::IdAndR,
        RuleId::IdOrF,
        RuleId::IdOrR,
        RuleId::IdNotF,
        RuleId::IdNotR,
        RuleId::Copy1,
        RuleId::Copy2,
        RuleId::Collapse1,
        RuleId::Collapse2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleId::DeMorganF1 => "demorgan_f1",
            RuleId::DeMorganF2 => "demorgan_f2",
            RuleId::DeMorganR1 => "demorgan_r1",
            RuleId::DeMorganR2 => "demorgan_r2",
            RuleId::IdAndF => "id_and_f",
            RuleId::IdAndR => "id_and_r",
            RuleId::IdOrF => "id_or_f",
            RuleId::IdOrR => "id_or_r",
            RuleId::IdNotF => "id_not_f",
            RuleId::IdNotR => "id_not_r",
            RuleId::Copy1 => "copy_1",
            RuleId::Copy2 => "copy_2",
            RuleId::Collapse1 => "collapse_1",
            RuleId::Collapse2 => "collapse_2",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Named rule collections used by the search configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleSet {
    None,
    Dm,
    Dmn,
    Id,
    Cc,
    Dmid,
}

impl RuleSet {
    pub const ALL: [RuleSet; 6] = [
        RuleSet::None,
        RuleSet::Dm,
        RuleSet::Dmn,
        RuleSet::Id,
        RuleSet::Cc,
        RuleSet::Dmid,
    ];

    pub fn rules(self) -> &'static [RuleId] {
        use RuleId::*;
        match self {
            RuleSet::None => &[],
            RuleSet::Dm => &[DeMorganF1, DeMorganF2, DeMorganR1, DeMorganR2],
            RuleSet::Dmn => &[DeMorganF1, DeMorganF2, DeMorganR1, DeMorganR2, IdNotF, IdNotR],
            RuleSet::Id => &[IdAndF, IdAndR, IdOrF, IdOrR, IdNotF, IdNotR],
            RuleSet::Cc => &[Copy1, Copy2, Collapse1, Collapse2],
            RuleSet::Dmid => &[
                DeMorganF1, DeMorganF2, DeMorganR1, DeMorganR2, IdAndF, IdAndR, IdOrF, IdOrR,
                IdNotF, IdNotR,
            ],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RuleSet::None => "none",
            RuleSet::Dm => "dm",
            RuleSet::Dmn => "dmn",
            RuleSet::Id => "id",
            RuleSet::Cc => "cc",
            RuleSet::Dmid => "dmid",
        }
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown rule-set {0:?}; expected one of none, dm, dmn, id, cc, dmid")]
pub struct UnknownRuleSet(pub String);

impl FromStr for RuleSet {
    type Err = UnknownRuleSet;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(RuleSet::None),
            "dm" => Ok(RuleSet::Dm),
            "dmn" => Ok(RuleSet::Dmn),
            "id" => Ok(RuleSet::Id),
            "cc" => Ok(RuleSet::Cc),
            "dmid" => Ok(RuleSet::Dmid),
            _ => Err(UnknownRuleSet(s.to_string())),
        }
    }
}

/// Role bindings of one match. Node roles bind injectively; which concrete
/// relabelling applies is carried by the rule id alongside.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    /// NOT `r` over a two-input gate `m` with distinct targets `a`, `b`;
    /// neutrals `w1`, `w2` become the pushed-down negations.
    DeMorganForward {
        r: NodeId,
        m: NodeId,
        a: NodeId,
        b: NodeId,
        w1: NodeId,
        w2: NodeId,
    },
    /// Gate `r` over NOTs `n1`, `n2` with targets `a`, `b`; neutral `w`
    /// becomes the shared inner gate under a single negation.
    DeMorganReverse {
        r: NodeId,
        n1: NodeId,
        n2: NodeId,
        a: NodeId,
        b: NodeId,
        w: NodeId,
    },
    /// Edge `e` to `v` detours through neutral `w` as IDENT(v, v).
    IdentityForward { e: EdgeRef, v: NodeId, w: NodeId },
    /// Edge `e` to `v` detours through a double negation of neutrals.
    IdentityNotForward {
        e: EdgeRef,
        v: NodeId,
        w1: NodeId,
        w2: NodeId,
    },
    /// Edge `e` into gate `x` whose both out-edges hit `v`; shortcut to `v`.
    IdentityReverse { e: EdgeRef, x: NodeId, v: NodeId },
    /// Edge `e` into a double negation ending at `v`; shortcut to `v`.
    IdentityNotReverse {
        e: EdgeRef,
        n1: NodeId,
        n2: NodeId,
        v: NodeId,
    },
    /// Neutral `w` becomes a copy of `x`; the `redirected` in-edge moves to
    /// it while the `kept` in-edge stays, their sources distinct.
    Copy {
        x: NodeId,
        kept: EdgeRef,
        redirected: EdgeRef,
        w: NodeId,
    },
    /// `x` and `y` compute the same gate over the same targets; the
    /// `redirected` in-edge of `y` moves to `x`.
    Collapse {
        x: NodeId,
        y: NodeId,
        redirected: EdgeRef,
    },
}

/// One concrete applicable rewrite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Match {
    pub rule: RuleId,
    pub binding: Binding,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("stale match for {rule}: {reason}")]
pub struct StaleMatch {
    pub rule: RuleId,
    pub reason: String,
}

/// Per-call context: activity, the neutral pool and an in-edge index.
struct Ctx {
    active: Vec<bool>,
    neutrals: Vec<NodeId>,
    in_offsets: Vec<u32>,
    in_edges: Vec<EdgeRef>,
}

impl Ctx {
    fn build(ind: &Individual) -> Ctx {
        let active = ind.active_mask();
        let neutrals: Vec<NodeId> = ind
            .function_ids()
            .filter(|id| !active[id.index()])
            .collect();
        let total = ind.node_count();
        let mut in_offsets = vec![0u32; total + 1];
        for id in ind.node_ids() {
            for &target in &ind.node(id).out_edges {
                in_offsets[target.index() + 1] += 1;
            }
        }
        for i in 0..total {
            in_offsets[i + 1] += in_offsets[i];
        }
        let mut in_edges = vec![
            EdgeRef {
                source: NodeId(0),
                position: 0
            };
            in_offsets[total] as usize
        ];
        let mut cursor = in_offsets.clone();
        for id in ind.node_ids() {
            for (position, &target) in ind.node(id).out_edges.iter().enumerate() {
                in_edges[cursor[target.index()] as usize] = EdgeRef {
                    source: id,
                    position,
                };
                cursor[target.index()] += 1;
            }
        }
        Ctx {
            active,
            neutrals,
            in_offsets,
            in_edges,
        }
    }

    fn is_active(&self, id: NodeId) -> bool {
        self.active[id.index()]
    }

    /// In-edges of `id` in canonical (source, position) order.
    fn in_edges(&self, id: NodeId) -> &[EdgeRef] {
        let range = self.in_offsets[id.index()] as usize..self.in_offsets[id.index() + 1] as usize;
        &self.in_edges[range]
    }

    /// Decodes an index in `0..k(k-1)` to an ordered pair of distinct
    /// neutral nodes, pairs ordered lexicographically by pool position.
    fn neutral_pair(&self, p: u64) -> (NodeId, NodeId) {
        let k = self.neutrals.len() as u64;
        let i = p / (k - 1);
        let r = p % (k - 1);
        let j = if r >= i { r + 1 } else { r };
        (self.neutrals[i as usize], self.neutrals[j as usize])
    }
}

fn active_gate(ind: &Individual, ctx: &Ctx, id: NodeId, kind: FunctionKind) -> bool {
    ctx.is_active(id) && ind.node(id).function_kind() == Some(kind)
}

/// Calls `f` for every configuration of `rule` (role bindings excluding the
/// neutral choice), passing the neutral multiplicity alongside.
fn for_each_config(
    ind: &Individual,
    ctx: &Ctx,
    rule: RuleId,
    mut f: impl FnMut(Binding, u64),
) {
    use FunctionKind::{And, Not, Or};
    let k = ctx.neutrals.len() as u64;
    let pairs = k * k.saturating_sub(1);
    match rule {
        RuleId::DeMorganF1 | RuleId::DeMorganF2 => {
            let root = if rule == RuleId::DeMorganF1 { And } else { Or };
            if pairs == 0 {
                return;
            }
            for r in ind.function_ids() {
                if !active_gate(ind, ctx, r, Not) {
                    continue;
                }
                let m = ind.node(r).out_edges[0];
                if !ind.is_function(m) || ind.node(m).function_kind() != Some(root) {
                    continue;
                }
                let a = ind.node(m).out_edges[0];
                let b = ind.node(m).out_edges[1];
                if a == b {
                    continue;
                }
                debug_assert!(ctx.is_active(m));
                f(
                    Binding::DeMorganForward {
                        r,
                        m,
                        a,
                        b,
                        w1: NodeId(usize::MAX),
                        w2: NodeId(usize::MAX),
                    },
                    pairs,
                );
            }
        }
        RuleId::DeMorganR1 | RuleId::DeMorganR2 => {
            let root = if rule == RuleId::DeMorganR1 { Or } else { And };
            if k == 0 {
                return;
            }
            for r in ind.function_ids() {
                if !active_gate(ind, ctx, r, root) {
                    continue;
                }
                let n1 = ind.node(r).out_edges[0];
                let n2 = ind.node(r).out_edges[1];
                if n1 == n2
                    || !ind.is_function(n1)
                    || !ind.is_function(n2)
                    || ind.node(n1).function_kind() != Some(Not)
                    || ind.node(n2).function_kind() != Some(Not)
                {
                    continue;
                }
                let a = ind.node(n1).out_edges[0];
                let b = ind.node(n2).out_edges[0];
                if a == b || a == n2 || b == n1 {
                    continue;
                }
                f(
                    Binding::DeMorganReverse {
                        r,
                        n1,
                        n2,
                        a,
                        b,
                        w: NodeId(usize::MAX),
                    },
                    k,
                );
            }
        }
        RuleId::IdAndF | RuleId::IdOrF | RuleId::IdNotF => {
            let multiplicity = if rule == RuleId::IdNotF { pairs } else { k };
            if multiplicity == 0 {
                return;
            }
            for source in ind.node_ids() {
                if !ctx.is_active(source) {
                    continue;
                }
                for position in 0..ind.node(source).out_edges.len() {
                    let e = EdgeRef { source, position };
                    let v = ind.edge_target(e);
                    let binding = if rule == RuleId::IdNotF {
                        Binding::IdentityNotForward {
                            e,
                            v,
                            w1: NodeId(usize::MAX),
                            w2: NodeId(usize::MAX),
                        }
                    } else {
                        Binding::IdentityForward {
                            e,
                            v,
                            w: NodeId(usize::MAX),
                        }
                    };
                    f(binding, multiplicity);
                }
            }
        }
        RuleId::IdAndR | RuleId::IdOrR => {
            let root = if rule == RuleId::IdAndR { And } else { Or };
            for x in ind.function_ids() {
                if !active_gate(ind, ctx, x, root) {
                    continue;
                }
                let v = ind.node(x).out_edges[0];
                if ind.node(x).out_edges[1] != v {
                    continue;
                }
                for &e in ctx.in_edges(x) {
                    if ctx.is_active(e.source) {
                        f(Binding::IdentityReverse { e, x, v }, 1);
                    }
                }
            }
        }
        RuleId::IdNotR => {
            for n1 in ind.function_ids() {
                if !active_gate(ind, ctx, n1, Not) {
                    continue;
                }
                let n2 = ind.node(n1).out_edges[0];
                if !ind.is_function(n2) || ind.node(n2).function_kind() != Some(Not) {
                    continue;
                }
                let v = ind.node(n2).out_edges[0];
                for &e in ctx.in_edges(n1) {
                    if ctx.is_active(e.source) {
                        f(Binding::IdentityNotReverse { e, n1, n2, v }, 1);
                    }
                }
            }
        }
        RuleId::Copy1 | RuleId::Copy2 => {
            let arity = if rule == RuleId::Copy1 { 1 } else { 2 };
            if k == 0 {
                return;
            }
            for x in ind.function_ids() {
                if !ctx.is_active(x) {
                    continue;
                }
                let node = ind.node(x);
                let Some(kind) = node.function_kind() else {
                    continue;
                };
                if kind.arity() != arity {
                    continue;
                }
                if arity == 2 && node.out_edges[0] == node.out_edges[1] {
                    continue;
                }
                let in_edges = ctx.in_edges(x);
                for &kept in in_edges {
                    if !ctx.is_active(kept.source) {
                        continue;
                    }
                    for &redirected in in_edges {
                        if redirected == kept
                            || redirected.source == kept.source
                            || !ctx.is_active(redirected.source)
                        {
                            continue;
                        }
                        f(
                            Binding::Copy {
                                x,
                                kept,
                                redirected,
                                w: NodeId(usize::MAX),
                            },
                            k,
                        );
                    }
                }
            }
        }
        RuleId::Collapse1 | RuleId::Collapse2 => {
            let arity = if rule == RuleId::Collapse1 { 1 } else { 2 };
            for x in ind.function_ids() {
                if !ctx.is_active(x) {
                    continue;
                }
                let Some(kind) = ind.node(x).function_kind() else {
                    continue;
                };
                if kind.arity() != arity {
                    continue;
                }
                if arity == 2 && ind.node(x).out_edges[0] == ind.node(x).out_edges[1] {
                    continue;
                }
                for y in ind.function_ids() {
                    if y == x || !active_gate(ind, ctx, y, kind) {
                        continue;
                    }
                    if !same_target_multiset(ind, x, y) {
                        continue;
                    }
                    for &e in ctx.in_edges(y) {
                        if ctx.is_active(e.source) {
                            f(Binding::Collapse { x, y, redirected: e }, 1);
                        }
                    }
                }
            }
        }
    }
}

fn same_target_multiset(ind: &Individual, x: NodeId, y: NodeId) -> bool {
    let xs = &ind.node(x).out_edges;
    let ys = &ind.node(y).out_edges;
    match xs.len() {
        1 => xs[0] == ys[0],
        2 => {
            (xs[0] == ys[0] && xs[1] == ys[1]) || (xs[0] == ys[1] && xs[1] == ys[0])
        }
        _ => false,
    }
}

/// Fills the neutral roles of a configuration binding from a multiplicity
/// index in `0..multiplicity`.
fn bind_neutrals(ctx: &Ctx, binding: Binding, index: u64) -> Binding {
    match binding {
        Binding::DeMorganForward { r, m, a, b, .. } => {
            let (w1, w2) = ctx.neutral_pair(index);
            Binding::DeMorganForward { r, m, a, b, w1, w2 }
        }
        Binding::DeMorganReverse { r, n1, n2, a, b, .. } => Binding::DeMorganReverse {
            r,
            n1,
            n2,
            a,
            b,
            w: ctx.neutrals[index as usize],
        },
        Binding::IdentityForward { e, v, .. } => Binding::IdentityForward {
            e,
            v,
            w: ctx.neutrals[index as usize],
        },
        Binding::IdentityNotForward { e, v, .. } => {
            let (w1, w2) = ctx.neutral_pair(index);
            Binding::IdentityNotForward { e, v, w1, w2 }
        }
        Binding::Copy {
            x,
            kept,
            redirected,
            ..
        } => Binding::Copy {
            x,
            kept,
            redirected,
            w: ctx.neutrals[index as usize],
        },
        other => {
            debug_assert_eq!(index, 0);
            other
        }
    }
}

/// Number of matches of `rule`, counted without materialising them.
pub fn count_matches(ind: &Individual, rule: RuleId) -> u64 {
    let ctx = Ctx::build(ind);
    count_with_ctx(ind, &ctx, rule)
}

fn count_with_ctx(ind: &Individual, ctx: &Ctx, rule: RuleId) -> u64 {
    let mut total = 0;
    for_each_config(ind, ctx, rule, |_, multiplicity| total += multiplicity);
    total
}

/// Every match of `rule`, in a canonical deterministic order.
pub fn enumerate_matches(ind: &Individual, rule: RuleId) -> Vec<Match> {
    let ctx = Ctx::build(ind);
    let mut matches = Vec::new();
    for_each_config(ind, &ctx, rule, |binding, multiplicity| {
        for index in 0..multiplicity {
            matches.push(Match {
                rule,
                binding: bind_neutrals(&ctx, binding, index),
            });
        }
    });
    matches
}

/// Match at position `target` of the canonical enumeration, without
/// materialising the rest.
fn decode_match(ind: &Individual, ctx: &Ctx, rule: RuleId, target: u64) -> Match {
    let mut remaining = target;
    let mut found = None;
    for_each_config(ind, ctx, rule, |binding, multiplicity| {
        if found.is_some() {
            return;
        }
        if remaining < multiplicity {
            found = Some(Match {
                rule,
                binding: bind_neutrals(ctx, binding, remaining),
            });
        } else {
            remaining -= multiplicity;
        }
    });
    found.expect("match index within count")
}

/// Applies a previously enumerated match after checking it still matches the
/// current graph; a graph changed since enumeration yields a stale error.
pub fn apply_match(ind: &mut Individual, m: &Match) -> Result<(), StaleMatch> {
    check_fresh(ind, m).map_err(|reason| StaleMatch {
        rule: m.rule,
        reason,
    })?;
    apply_unchecked(ind, m);
    Ok(())
}

fn check_fresh(ind: &Individual, m: &Match) -> Result<(), String> {
    use FunctionKind::{And, Not, Or};
    let ctx = Ctx::build(ind);
    let gate = |id: NodeId, kind: FunctionKind, role: &str| -> Result<(), String> {
        if !ind.is_function(id) || ind.node(id).function_kind() != Some(kind) {
            return Err(format!("{role} {id} is no longer a {} gate", kind.name()));
        }
        Ok(())
    };
    let active = |id: NodeId, role: &str| -> Result<(), String> {
        if !ctx.is_active(id) {
            return Err(format!("{role} {id} is no longer active"));
        }
        Ok(())
    };
    let neutral = |id: NodeId, role: &str| -> Result<(), String> {
        if !ind.is_function(id) || ctx.is_active(id) {
            return Err(format!("{role} {id} is no longer neutral"));
        }
        Ok(())
    };
    let edge_ok = |e: EdgeRef, to: NodeId, role: &str| -> Result<(), String> {
        if e.position >= ind.node(e.source).out_edges.len() || ind.edge_target(e) != to {
            return Err(format!("{role} edge {e} no longer targets {to}"));
        }
        Ok(())
    };
    match (m.rule, m.binding) {
        (RuleId::DeMorganF1 | RuleId::DeMorganF2, Binding::DeMorganForward { r, m: mid, a, b, w1, w2 }) => {
            let root = if m.rule == RuleId::DeMorganF1 { And } else { Or };
            gate(r, Not, "root")?;
            active(r, "root")?;
            gate(mid, root, "inner gate")?;
            if ind.node(r).out_edges[0] != mid {
                return Err(format!("root {r} no longer feeds from {mid}"));
            }
            if ind.node(mid).out_edges.as_slice() != [a, b] || a == b {
                return Err(format!("inner gate {mid} no longer targets {a}, {b}"));
            }
            neutral(w1, "first neutral")?;
            neutral(w2, "second neutral")?;
            if w1 == w2 {
                return Err("neutral roles must be distinct".to_string());
            }
        }
        (RuleId::DeMorganR1 | RuleId::DeMorganR2, Binding::DeMorganReverse { r, n1, n2, a, b, w }) => {
            let root = if m.rule == RuleId::DeMorganR1 { Or } else { And };
            gate(r, root, "root")?;
            active(r, "root")?;
            gate(n1, Not, "first negation")?;
            gate(n2, Not, "second negation")?;
            if ind.node(r).out_edges.as_slice() != [n1, n2] || n1 == n2 {
                return Err(format!("root {r} no longer targets {n1}, {n2}"));
            }
            if ind.node(n1).out_edges[0] != a || ind.node(n2).out_edges[0] != b {
                return Err("negation targets changed".to_string());
            }
            if a == b || a == n2 || b == n1 {
                return Err("role injectivity no longer holds".to_string());
            }
            neutral(w, "neutral")?;
        }
        (RuleId::IdAndF | RuleId::IdOrF, Binding::IdentityForward { e, v, w }) => {
            active(e.source, "edge source")?;
            edge_ok(e, v, "rewired")?;
            neutral(w, "neutral")?;
        }
        (RuleId::IdNotF, Binding::IdentityNotForward { e, v, w1, w2 }) => {
            active(e.source, "edge source")?;
            edge_ok(e, v, "rewired")?;
            neutral(w1, "first neutral")?;
            neutral(w2, "second neutral")?;
            if w1 == w2 {
                return Err("neutral roles must be distinct".to_string());
            }
        }
        (RuleId::IdAndR | RuleId::IdOrR, Binding::IdentityReverse { e, x, v }) => {
            let root = if m.rule == RuleId::IdAndR { And } else { Or };
            gate(x, root, "gate")?;
            active(x, "gate")?;
            active(e.source, "edge source")?;
            edge_ok(e, x, "rewired")?;
            if ind.node(x).out_edges.as_slice() != [v, v] {
                return Err(format!("gate {x} no longer doubles {v}"));
            }
        }
        (RuleId::IdNotR, Binding::IdentityNotReverse { e, n1, n2, v }) => {
            gate(n1, Not, "first negation")?;
            gate(n2, Not, "second negation")?;
            active(n1, "first negation")?;
            active(e.source, "edge source")?;
            edge_ok(e, n1, "rewired")?;
            if ind.node(n1).out_edges[0] != n2 || ind.node(n2).out_edges[0] != v {
                return Err("negation chain changed".to_string());
            }
        }
        (RuleId::Copy1 | RuleId::Copy2, Binding::Copy { x, kept, redirected, w }) => {
            let arity = if m.rule == RuleId::Copy1 { 1 } else { 2 };
            if !ind.is_function(x)
                || ind.node(x).function_kind().map(|k| k.arity()) != Some(arity)
            {
                return Err(format!("copied node {x} no longer has arity {arity}"));
            }
            active(x, "copied node")?;
            if arity == 2 && ind.node(x).out_edges[0] == ind.node(x).out_edges[1] {
                return Err(format!("copied node {x} targets are no longer distinct"));
            }
            active(kept.source, "kept edge source")?;
            active(redirected.source, "redirected edge source")?;
            edge_ok(kept, x, "kept")?;
            edge_ok(redirected, x, "redirected")?;
            if kept == redirected || kept.source == redirected.source {
                return Err("in-edge roles must have distinct sources".to_string());
            }
            neutral(w, "neutral")?;
        }
        (RuleId::Collapse1 | RuleId::Collapse2, Binding::Collapse { x, y, redirected }) => {
            let arity = if m.rule == RuleId::Collapse1 { 1 } else { 2 };
            if x == y {
                return Err("collapse roles must be distinct".to_string());
            }
            let (Some(kx), Some(ky)) = (
                ind.is_function(x).then(|| ind.node(x).function_kind()).flatten(),
                ind.is_function(y).then(|| ind.node(y).function_kind()).flatten(),
            ) else {
                return Err("collapse roles must be function nodes".to_string());
            };
            if kx != ky || kx.arity() != arity {
                return Err("collapse roles no longer agree on kind".to_string());
            }
            active(x, "surviving node")?;
            active(y, "collapsed node")?;
            if !same_target_multiset(ind, x, y) {
                return Err("collapse roles no longer share targets".to_string());
            }
            if arity == 2 && ind.node(x).out_edges[0] == ind.node(x).out_edges[1] {
                return Err("collapse targets are no longer distinct".to_string());
            }
            active(redirected.source, "redirected edge source")?;
            edge_ok(redirected, y, "redirected")?;
        }
        (rule, binding) => {
            panic!("binding shape {binding:?} does not belong to rule {rule}")
        }
    }
    Ok(())
}

fn set_gate(ind: &mut Individual, id: NodeId, kind: FunctionKind, targets: &[NodeId]) {
    let node = ind.node_mut(id);
    node.kind = NodeKind::Function(kind);
    node.out_edges = targets.iter().copied().collect::<OutEdges>();
}

fn apply_unchecked(ind: &mut Individual, m: &Match) {
    use FunctionKind::{And, Not, Or};
    match (m.rule, m.binding) {
        (rule @ (RuleId::DeMorganF1 | RuleId::DeMorganF2), Binding::DeMorganForward { r, a, b, w1, w2, .. }) => {
            let relabel = if rule == RuleId::DeMorganF1 { Or } else { And };
            set_gate(ind, r, relabel, &[w1, w2]);
            set_gate(ind, w1, Not, &[a]);
            set_gate(ind, w2, Not, &[b]);
        }
        (rule @ (RuleId::DeMorganR1 | RuleId::DeMorganR2), Binding::DeMorganReverse { r, a, b, w, .. }) => {
            let relabel = if rule == RuleId::DeMorganR1 { And } else { Or };
            set_gate(ind, r, Not, &[w]);
            set_gate(ind, w, relabel, &[a, b]);
        }
        (rule @ (RuleId::IdAndF | RuleId::IdOrF), Binding::IdentityForward { e, v, w }) => {
            let relabel = if rule == RuleId::IdAndF { And } else { Or };
            set_gate(ind, w, relabel, &[v, v]);
            ind.set_edge_target(e, w);
        }
        (RuleId::IdNotF, Binding::IdentityNotForward { e, v, w1, w2 }) => {
            set_gate(ind, w1, Not, &[w2]);
            set_gate(ind, w2, Not, &[v]);
            ind.set_edge_target(e, w1);
        }
        (RuleId::IdAndR | RuleId::IdOrR, Binding::IdentityReverse { e, v, .. }) => {
            ind.set_edge_target(e, v);
        }
        (RuleId::IdNotR, Binding::IdentityNotReverse { e, v, .. }) => {
            ind.set_edge_target(e, v);
        }
        (RuleId::Copy1 | RuleId::Copy2, Binding::Copy { x, redirected, w, .. }) => {
            let kind = ind.node(x).function_kind().expect("copied node is a gate");
            let targets = ind.node(x).out_edges.clone();
            set_gate(ind, w, kind, &targets);
            ind.set_edge_target(redirected, w);
        }
        (RuleId::Collapse1 | RuleId::Collapse2, Binding::Collapse { x, redirected, .. }) => {
            ind.set_edge_target(redirected, x);
        }
        (rule, binding) => panic!("binding shape {binding:?} does not belong to rule {rule}"),
    }
}

/// One step of probabilistic rule-set application: a uniformly random
/// applicable rule, then a uniformly random match of that rule. Returns the
/// applied rule, or `None` when nothing in the set matches.
pub fn apply_ruleset<R: Rng + ?Sized>(
    ind: &mut Individual,
    rules: RuleSet,
    rng: &mut R,
) -> Option<RuleId> {
    apply_ruleset_match(ind, rules, rng).map(|m| m.rule)
}

/// Like [`apply_ruleset`] but reports the full sampled match.
pub fn apply_ruleset_match<R: Rng + ?Sized>(
    ind: &mut Individual,
    rules: RuleSet,
    rng: &mut R,
) -> Option<Match> {
    let ctx = Ctx::build(ind);
    let applicable: Vec<(RuleId, u64)> = rules
        .rules()
        .iter()
        .map(|&rule| (rule, count_with_ctx(ind, &ctx, rule)))
        .filter(|&(_, count)| count > 0)
        .collect();
    if applicable.is_empty() {
        return None;
    }
    let (rule, count) = applicable[rng.random_range(0..applicable.len())];
    let m = decode_match(ind, &ctx, rule, rng.random_range(0..count));
    apply_unchecked(ind, &m);
    Some(m)
}
