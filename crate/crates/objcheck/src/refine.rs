//! Compliance: behavioural refinement of a declared abstraction.
//!
//! The observable labelled transition system of a system is its reachability
//! graph with internal send/receive steps made silent and external steps
//! labelled (peer, polarity, label, payload). Refinement is decided by a weak
//! alternating simulation: contravariant on offered services (the refined
//! system must match every receive the abstraction offers) and covariant on
//! consumed services (the abstraction must match every send the refined
//! system demands), with silent moves answered by silent moves. Payloads
//! match componentwise, Unknown acting as a wildcard.

use crate::automata::Polarity;
use crate::compat::{explore, ExploreOptions, ReachGraph};
use crate::diag::{Diagnostic, DiagnosticKind, Step, StepKind};
use crate::source::Span;
use crate::syntax::ResolvedSystem;
use crate::value::{payloads_compatible, Value};
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

/// Label of an observable edge.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ObsLabel {
    pub peer: String,
    pub polarity: Polarity,
    pub label: String,
    pub payload: Vec<Value>,
}

impl ObsLabel {
    fn matches(&self, other: &ObsLabel) -> bool {
        self.peer == other.peer
            && self.polarity == other.polarity
            && self.label == other.label
            && payloads_compatible(&self.payload, &other.payload)
    }
}

#[derive(Clone, Debug)]
pub struct ObsEdge {
    pub target: usize,
    /// `None` for silent (internal) steps.
    pub label: Option<ObsLabel>,
    pub step: Step,
}

/// Observable LTS over the asynchronous reachability graph.
#[derive(Clone, Debug)]
pub struct ObservableLTS {
    pub system: String,
    pub name_span: Span,
    pub n_states: usize,
    pub initial: usize,
    pub edges: Vec<Vec<ObsEdge>>,
    pub complete: bool,
    pub explore_diags: Vec<Diagnostic>,
}

pub fn observable_lts(sys: &ResolvedSystem, opts: &ExploreOptions) -> ObservableLTS {
    let g: ReachGraph = explore(sys, opts);
    let edges = g
        .edges
        .iter()
        .map(|outs| {
            outs.iter()
                .map(|(step, target)| {
                    let label = match step.kind {
                        StepKind::InternalSend | StepKind::InternalReceive => None,
                        StepKind::ExternalSend => Some(ObsLabel {
                            peer: step.receiver.clone(),
                            polarity: Polarity::Send,
                            label: step.label.clone(),
                            payload: step.payload.clone(),
                        }),
                        StepKind::ExternalReceive => Some(ObsLabel {
                            peer: step.sender.clone(),
                            polarity: Polarity::Receive,
                            label: step.label.clone(),
                            payload: step.payload.clone(),
                        }),
                    };
                    ObsEdge { target: *target, label, step: step.clone() }
                })
                .collect()
        })
        .collect();
    ObservableLTS {
        system: sys.name.clone(),
        name_span: sys.name_span,
        n_states: g.configs.len(),
        initial: 0,
        edges,
        complete: g.complete,
        explore_diags: g.explore_diags,
    }
}

impl ObservableLTS {
    /// The observable alphabet: (peer, polarity, label, arity) triples of
    /// every labelled edge.
    pub fn alphabet(&self) -> BTreeSet<(String, Polarity, String, usize)> {
        let mut out = BTreeSet::new();
        for outs in &self.edges {
            for e in outs {
                if let Some(l) = &e.label {
                    out.insert((l.peer.clone(), l.polarity, l.label.clone(), l.payload.len()));
                }
            }
        }
        out
    }

    /// Forward closure under silent edges, including the state itself.
    fn silent_closure(&self, from: usize) -> Vec<usize> {
        let mut seen = vec![false; self.n_states];
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        seen[from] = true;
        queue.push_back(from);
        while let Some(s) = queue.pop_front() {
            order.push(s);
            for e in &self.edges[s] {
                if e.label.is_none() && !seen[e.target] {
                    seen[e.target] = true;
                    queue.push_back(e.target);
                }
            }
        }
        order
    }

    /// Shortest silent step path between two states of the closure.
    fn silent_path(&self, from: usize, to: usize) -> Vec<Step> {
        if from == to {
            return Vec::new();
        }
        let mut pred: HashMap<usize, (usize, usize)> = HashMap::new();
        let mut queue = VecDeque::new();
        queue.push_back(from);
        'bfs: while let Some(s) = queue.pop_front() {
            for (i, e) in self.edges[s].iter().enumerate() {
                if e.label.is_none() && e.target != from && !pred.contains_key(&e.target) {
                    pred.insert(e.target, (s, i));
                    if e.target == to {
                        break 'bfs;
                    }
                    queue.push_back(e.target);
                }
            }
        }
        let mut steps = Vec::new();
        let mut cur = to;
        while cur != from {
            let (p, i) = pred[&cur];
            steps.push(self.edges[p][i].step.clone());
            cur = p;
        }
        steps.reverse();
        steps
    }

    /// Weak observable edges from `state` with the given polarity: a silent
    /// prefix target and the labelled edge available there.
    fn weak_edges(&self, state: usize, polarity: Polarity) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for s in self.silent_closure(state) {
            for (i, e) in self.edges[s].iter().enumerate() {
                if e.label.as_ref().is_some_and(|l| l.polarity == polarity) {
                    out.push((s, i));
                }
            }
        }
        out
    }

    /// True when some cycle consists entirely of silent edges. Every stored
    /// state is reachable, so a silent cycle anywhere is a real divergence.
    pub fn has_silent_divergence(&self) -> bool {
        const WHITE: u8 = 0;
        const GREY: u8 = 1;
        const BLACK: u8 = 2;
        let mut color = vec![WHITE; self.n_states];
        for root in 0..self.n_states {
            if color[root] != WHITE {
                continue;
            }
            // Iterative DFS over silent edges only; grey = on current path.
            let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
            color[root] = GREY;
            while let Some((s, i)) = stack.pop() {
                let mut advanced = false;
                for (j, e) in self.edges[s].iter().enumerate().skip(i) {
                    if e.label.is_some() {
                        continue;
                    }
                    match color[e.target] {
                        GREY => return true,
                        WHITE => {
                            stack.push((s, j + 1));
                            color[e.target] = GREY;
                            stack.push((e.target, 0));
                            advanced = true;
                            break;
                        }
                        _ => {}
                    }
                }
                if !advanced {
                    color[s] = BLACK;
                }
            }
        }
        false
    }
}

/// Result of the simulation check: the greatest relation on success (it
/// contains the pair of initial states and is closed under the transfer
/// conditions), or the minimal counterexamples on failure.
#[derive(Clone, Debug)]
pub enum SimOutcome {
    Holds { relation: Vec<(usize, usize)> },
    Fails { violations: Vec<SimViolation> },
}

impl SimOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, SimOutcome::Holds { .. })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum ViolationKind {
    /// The abstraction offers a receive the refined system cannot match.
    MissingOffer,
    /// The refined system demands a send the abstraction cannot match.
    ExcessDemand,
}

#[derive(Clone, Debug)]
pub struct SimViolation {
    pub kind: ViolationKind,
    /// The unmatched edge's branch label span: in the abstract source for
    /// missing offers, in the refined source for excess demands.
    pub span: Span,
    pub label: String,
    pub peer: String,
    /// Replayable path in the respective system, ending in the state where
    /// the unmatched edge is enabled.
    pub witness: Vec<Step>,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
struct Pair(usize, usize);

/// Decide the weak alternating simulation `refined <= abstract` as a greatest
/// fixpoint over the pairs reachable in the joint game.
pub fn weak_alt_sim(refined: &ObservableLTS, abstr: &ObservableLTS) -> SimOutcome {
    let game = Game::new(refined, abstr);
    game.run()
}

struct Game<'a> {
    refined: &'a ObservableLTS,
    abstr: &'a ObservableLTS,
    r_closure: Vec<Vec<usize>>,
    a_closure: Vec<Vec<usize>>,
}

/// Continuations of one transfer condition at a pair: the structural matches,
/// regardless of the current relation. An empty set is a direct violation.
struct Condition {
    /// (silent-prefix state, edge index) of the premise edge, on the premise
    /// side (abstract for offers, refined for demands; the refined silent
    /// edge itself for silent moves).
    premise: (usize, usize),
    kind: CondKind,
    continuations: Vec<Pair>,
    /// For offer/demand continuations, the matching response edge per
    /// continuation, aligned with `continuations`.
    responses: Vec<(usize, usize)>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum CondKind {
    Offer,
    Demand,
    Silent,
}

impl<'a> Game<'a> {
    fn new(refined: &'a ObservableLTS, abstr: &'a ObservableLTS) -> Self {
        let r_closure = (0..refined.n_states).map(|s| refined.silent_closure(s)).collect();
        let a_closure = (0..abstr.n_states).map(|s| abstr.silent_closure(s)).collect();
        Game { refined, abstr, r_closure, a_closure }
    }

    fn conditions(&self, p: Pair) -> Vec<Condition> {
        let Pair(r, a) = p;
        let mut out = Vec::new();
        // Offers: every receive the abstraction weakly offers must be matched
        // by a weakly reachable refined receive with compatible payload.
        for (a1, ei) in self.abstr.weak_edges(a, Polarity::Receive) {
            let edge = &self.abstr.edges[a1][ei];
            let lbl = edge.label.as_ref().unwrap();
            let mut continuations = Vec::new();
            let mut responses = Vec::new();
            for &r1 in &self.r_closure[r] {
                for (fi, f) in self.refined.edges[r1].iter().enumerate() {
                    if f.label.as_ref().is_some_and(|l| l.matches(lbl)) {
                        continuations.push(Pair(f.target, edge.target));
                        responses.push((r1, fi));
                    }
                }
            }
            out.push(Condition { premise: (a1, ei), kind: CondKind::Offer, continuations, responses });
        }
        // Demands: every send the refined system weakly demands must be
        // matched by a weakly reachable abstract send.
        for (r1, ei) in self.refined.weak_edges(r, Polarity::Send) {
            let edge = &self.refined.edges[r1][ei];
            let lbl = edge.label.as_ref().unwrap();
            let mut continuations = Vec::new();
            let mut responses = Vec::new();
            for &a1 in &self.a_closure[a] {
                for (fi, f) in self.abstr.edges[a1].iter().enumerate() {
                    if f.label.as_ref().is_some_and(|l| l.matches(lbl)) {
                        continuations.push(Pair(edge.target, f.target));
                        responses.push((a1, fi));
                    }
                }
            }
            out.push(Condition { premise: (r1, ei), kind: CondKind::Demand, continuations, responses });
        }
        // Silent refined moves preserve relatedness, with the abstraction
        // free to answer by silent moves of its own.
        for (ei, e) in self.refined.edges[r].iter().enumerate() {
            if e.label.is_some() {
                continue;
            }
            let continuations = self.a_closure[a].iter().map(|&a2| Pair(e.target, a2)).collect();
            out.push(Condition {
                premise: (r, ei),
                kind: CondKind::Silent,
                continuations,
                responses: Vec::new(),
            });
        }
        out
    }

    fn run(&self) -> SimOutcome {
        if self.refined.n_states == 0 || self.abstr.n_states == 0 {
            return SimOutcome::Holds { relation: Vec::new() };
        }
        let root = Pair(self.refined.initial, self.abstr.initial);

        // Reachable pair space, closed under every condition's continuations.
        let mut pairs: Vec<Pair> = vec![root];
        let mut index: HashMap<Pair, usize> = HashMap::new();
        index.insert(root, 0);
        let mut conds: Vec<Vec<Condition>> = Vec::new();
        let mut frontier = 0;
        while frontier < pairs.len() {
            let cs = self.conditions(pairs[frontier]);
            for c in &cs {
                for &q in &c.continuations {
                    if let std::collections::hash_map::Entry::Vacant(e) = index.entry(q) {
                        e.insert(pairs.len());
                        pairs.push(q);
                    }
                }
            }
            conds.push(cs);
            frontier += 1;
        }

        // Greatest fixpoint: repeatedly remove pairs with a violated
        // condition until stable.
        let mut alive = vec![true; pairs.len()];
        loop {
            let mut changed = false;
            for i in 0..pairs.len() {
                if !alive[i] {
                    continue;
                }
                let violated = conds[i].iter().any(|c| {
                    if c.continuations.is_empty() {
                        // A structurally unmatched offer or demand; silent
                        // conditions always have the stay-put continuation.
                        c.kind != CondKind::Silent
                    } else {
                        !c.continuations.iter().any(|q| alive[index[q]])
                    }
                });
                if violated {
                    alive[i] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        if alive[index[&root]] {
            let relation = pairs
                .iter()
                .zip(&alive)
                .filter(|(_, &a)| a)
                .map(|(p, _)| (p.0, p.1))
                .collect();
            return SimOutcome::Holds { relation };
        }

        // Walk the failure certificates from the root, collecting every
        // direct violation reachable through failing continuations.
        let mut violations: Vec<SimViolation> = Vec::new();
        let mut seen_spans: HashSet<(ViolationKind, Span)> = HashSet::new();
        let mut visited: HashSet<Pair> = HashSet::new();
        // (pair, refined path, abstract path)
        let mut stack: Vec<(Pair, Vec<Step>, Vec<Step>)> = vec![(root, Vec::new(), Vec::new())];
        visited.insert(root);
        while let Some((p, r_path, a_path)) = stack.pop() {
            for c in &conds[index[&p]] {
                match c.kind {
                    CondKind::Offer => {
                        let (a1, ei) = c.premise;
                        let edge = &self.abstr.edges[a1][ei];
                        let lbl = edge.label.as_ref().unwrap();
                        if c.continuations.is_empty() {
                            if seen_spans.insert((ViolationKind::MissingOffer, edge.step.span)) {
                                let mut witness = a_path.clone();
                                witness.extend(self.abstr.silent_path(p.1, a1));
                                violations.push(SimViolation {
                                    kind: ViolationKind::MissingOffer,
                                    span: edge.step.span,
                                    label: lbl.label.clone(),
                                    peer: lbl.peer.clone(),
                                    witness,
                                });
                            }
                            continue;
                        }
                        for (q, &(r1, fi)) in c.continuations.iter().zip(&c.responses) {
                            if alive[index[q]] || !visited.insert(*q) {
                                continue;
                            }
                            let mut nr = r_path.clone();
                            nr.extend(self.refined.silent_path(p.0, r1));
                            nr.push(self.refined.edges[r1][fi].step.clone());
                            let mut na = a_path.clone();
                            na.extend(self.abstr.silent_path(p.1, a1));
                            na.push(edge.step.clone());
                            stack.push((*q, nr, na));
                        }
                    }
                    CondKind::Demand => {
                        let (r1, ei) = c.premise;
                        let edge = &self.refined.edges[r1][ei];
                        let lbl = edge.label.as_ref().unwrap();
                        if c.continuations.is_empty() {
                            if seen_spans.insert((ViolationKind::ExcessDemand, edge.step.span)) {
                                let mut witness = r_path.clone();
                                witness.extend(self.refined.silent_path(p.0, r1));
                                violations.push(SimViolation {
                                    kind: ViolationKind::ExcessDemand,
                                    span: edge.step.span,
                                    label: lbl.label.clone(),
                                    peer: lbl.peer.clone(),
                                    witness,
                                });
                            }
                            continue;
                        }
                        for (q, &(a1, fi)) in c.continuations.iter().zip(&c.responses) {
                            if alive[index[q]] || !visited.insert(*q) {
                                continue;
                            }
                            let mut nr = r_path.clone();
                            nr.extend(self.refined.silent_path(p.0, r1));
                            nr.push(edge.step.clone());
                            let mut na = a_path.clone();
                            na.extend(self.abstr.silent_path(p.1, a1));
                            na.push(self.abstr.edges[a1][fi].step.clone());
                            stack.push((*q, nr, na));
                        }
                    }
                    CondKind::Silent => {
                        let (r0, ei) = c.premise;
                        let edge = &self.refined.edges[r0][ei];
                        // Violated only when every abstract answer is dead;
                        // following the stay-put answer covers the premises of
                        // every other answer, because silent reachability is
                        // transitive.
                        let all_dead =
                            c.continuations.iter().all(|q| !alive[index[q]]);
                        if !all_dead {
                            continue;
                        }
                        let q = Pair(edge.target, p.1);
                        if !visited.insert(q) {
                            continue;
                        }
                        let mut nr = r_path.clone();
                        nr.push(edge.step.clone());
                        stack.push((q, nr, a_path.clone()));
                    }
                }
            }
        }
        SimOutcome::Fails { violations }
    }
}

/// Compliance verdict for `refined` against `abstr`. Offer failures point
/// into the abstract source, demand failures into the refined source; an
/// internal-only infinite run in the refined system is a warning.
pub fn check_compliance(
    refined_sys: &ResolvedSystem,
    abstract_sys: &ResolvedSystem,
    opts: &ExploreOptions,
) -> Vec<Diagnostic> {
    let refined = observable_lts(refined_sys, opts);
    let abstr = observable_lts(abstract_sys, opts);
    let mut diags = Vec::new();
    diags.extend(refined.explore_diags.iter().cloned());
    diags.extend(abstr.explore_diags.iter().cloned());
    if !refined.complete || !abstr.complete {
        crate::diag::sort_diagnostics(&mut diags);
        return diags;
    }
    if let SimOutcome::Fails { violations } = weak_alt_sim(&refined, &abstr) {
        for v in violations {
            let d = match v.kind {
                ViolationKind::MissingOffer => Diagnostic::new(
                    DiagnosticKind::MissingOffer,
                    v.span,
                    refined_sys.name.clone(),
                    format!(
                        "unmet obligation of `{}` required by `{}`: the `{}` message from `{}` \
                         is not handled",
                        abstract_sys.name, refined_sys.name, v.label, v.peer
                    ),
                ),
                ViolationKind::ExcessDemand => Diagnostic::new(
                    DiagnosticKind::ExcessDemand,
                    v.span,
                    refined_sys.name.clone(),
                    format!(
                        "`{}` demands `{}` of `{}`, which `{}` does not send here",
                        refined_sys.name, v.label, v.peer, abstract_sys.name
                    ),
                ),
            };
            diags.push(d.with_witness(v.witness));
        }
    }
    if refined.has_silent_divergence() {
        diags.push(Diagnostic::new(
            DiagnosticKind::DivergenceWarning,
            refined_sys.name_span,
            refined_sys.name.clone(),
            format!(
                "`{}` can run forever on internal steps alone (silent divergence)",
                refined_sys.name
            ),
        ));
    }
    crate::diag::sort_diagnostics(&mut diags);
    diags
}
