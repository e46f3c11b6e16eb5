//! The composite-automaton operator: classify actions as internal or external
//! relative to a member set and build the synchronous product, in which
//! internal actions are rendezvous transitions and internal send/receive
//! transitions with no matching partner in the current state are pruned.
//!
//! Pruning at one state is not itself an error: under the asynchronous
//! semantics the message may synchronise in a later state, and the error
//! analysis lives in the compatibility checker. The product here feeds the
//! DOT export.

use crate::automata::{build_automaton, Action, AutomataError, LocalState, ObjectAutomaton, Polarity};
use crate::source::Span;
use crate::syntax::ResolvedSystem;
use crate::value::Value;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComposeError {
    #[error("composite state limit of {0} exceeded")]
    StateLimit(usize),
    #[error(transparent)]
    Automata(#[from] AutomataError),
}

/// The members of a composite, each with its automaton. Members are kept as a
/// flat set so that composing composites flattens: the result cannot depend
/// on bracketing.
pub struct CompositeSpec {
    members: BTreeMap<String, ObjectAutomaton>,
}

impl CompositeSpec {
    pub fn new(members: BTreeMap<String, ObjectAutomaton>) -> Self {
        assert!(!members.is_empty(), "a composite needs at least one member");
        CompositeSpec { members }
    }

    /// All objects of a resolved system as one composite.
    pub fn from_system(sys: &ResolvedSystem, invoke_depth: usize) -> Self {
        let members = sys
            .objects
            .iter()
            .map(|(name, obj)| (name.clone(), build_automaton(obj, invoke_depth)))
            .collect();
        CompositeSpec::new(members)
    }

    pub fn member_names(&self) -> BTreeSet<String> {
        self.members.keys().cloned().collect()
    }

    pub fn automaton(&self, member: &str) -> &ObjectAutomaton {
        &self.members[member]
    }

    pub fn automata(&self) -> &BTreeMap<String, ObjectAutomaton> {
        &self.members
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Classification {
    Internal,
    External,
}

/// A message is internal iff both endpoints belong to the composite.
pub fn classify(action: &Action, members: &BTreeSet<String>) -> Classification {
    if members.contains(&action.subject) && members.contains(&action.peer) {
        Classification::Internal
    } else {
        Classification::External
    }
}

/// A product transition: either a rendezvous of a send with its matching
/// receive (the data is kept; rendering as plain tau is a display choice), or
/// an external action of a single member.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ClassifiedAction {
    Internal {
        sender: String,
        receiver: String,
        label: String,
        payload: Vec<Value>,
        send_span: Span,
        recv_span: Span,
    },
    External(Action),
}

/// One local state per member, keyed by participant.
pub type CompositeState = BTreeMap<String, LocalState>;

/// True iff the receive is a potential rendezvous partner for the send:
/// opposite endpoints, equal labels, equal arities.
pub fn rendezvous_match(send: &Action, recv: &Action) -> bool {
    debug_assert_eq!(send.polarity, Polarity::Send);
    debug_assert_eq!(recv.polarity, Polarity::Receive);
    send.peer == recv.subject
        && recv.peer == send.subject
        && send.label == recv.label
        && send.arity() == recv.arity()
}

/// The reachable synchronous product.
#[derive(Clone, Debug)]
pub struct CompositeAutomaton {
    pub members: BTreeSet<String>,
    pub states: Vec<CompositeState>,
    pub edges: Vec<Vec<(ClassifiedAction, usize)>>,
    pub initial: usize,
}

/// Explore the reachable product of the composite, breadth-first, up to
/// `max_states` states.
pub fn compose(spec: &CompositeSpec, max_states: usize) -> Result<CompositeAutomaton, ComposeError> {
    let members = spec.member_names();
    let mut initial: CompositeState = BTreeMap::new();
    for (name, auto) in spec.automata() {
        initial.insert(name.clone(), auto.initial()?);
    }

    let mut states: Vec<CompositeState> = vec![initial.clone()];
    let mut index: HashMap<CompositeState, usize> = HashMap::new();
    index.insert(initial, 0);
    let mut edges: Vec<Vec<(ClassifiedAction, usize)>> = vec![Vec::new()];
    let mut frontier = 0usize;

    while frontier < states.len() {
        let state = states[frontier].clone();
        let mut out = Vec::new();
        for (name, local) in &state {
            let auto = spec.automaton(name);
            for (action, succ) in auto.local_successors(local)? {
                match classify(&action, &members) {
                    Classification::External => {
                        let mut next = state.clone();
                        next.insert(name.clone(), succ);
                        out.push((ClassifiedAction::External(action), next));
                    }
                    Classification::Internal => {
                        if action.polarity != Polarity::Send {
                            // Internal receives advance as the passive half
                            // of a rendezvous found from the sender's side.
                            continue;
                        }
                        let peer_auto = spec.automaton(&action.peer);
                        let peer_state = &state[&action.peer];
                        for (peer_action, _) in peer_auto.local_successors(peer_state)? {
                            if peer_action.polarity == Polarity::Receive
                                && rendezvous_match(&action, &peer_action)
                            {
                                let receiver_succ = peer_auto.fire_receive(
                                    peer_state,
                                    &action.label,
                                    action.values(),
                                )?;
                                let mut next = state.clone();
                                next.insert(name.clone(), succ.clone());
                                next.insert(action.peer.clone(), receiver_succ);
                                out.push((
                                    ClassifiedAction::Internal {
                                        sender: action.subject.clone(),
                                        receiver: action.peer.clone(),
                                        label: action.label.clone(),
                                        payload: action.values().to_vec(),
                                        send_span: action.span,
                                        recv_span: peer_action.span,
                                    },
                                    next,
                                ));
                            }
                        }
                    }
                }
            }
        }
        for (labelled, next) in out {
            let target = match index.get(&next) {
                Some(&id) => id,
                None => {
                    if states.len() >= max_states {
                        return Err(ComposeError::StateLimit(max_states));
                    }
                    let id = states.len();
                    states.push(next.clone());
                    index.insert(next, id);
                    edges.push(Vec::new());
                    id
                }
            };
            edges[frontier].push((labelled, target));
        }
        frontier += 1;
    }

    Ok(CompositeAutomaton { members, states, edges, initial: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::FileId;
    use crate::syntax::{parse, resolve};

    // Three basic objects exercising the composition operator: p sends i or
    // j to q, then i/j to s and r; q receives from p and either sends k to r
    // or receives l from s; r receives i or j from p, and after i waits for m
    // from q. k never pairs with m.
    const TRIO: &str = "\
system trio
obj p
q ! {
   i
      s ! i
      r ! i.
   j
      s ! j
      r ! j.
}
obj q
p ? {
   i
      r ! k.
   j
      s ? l.
}
obj r
p ? {
   i
      q ? m.
   j.
}
";

    fn system(src: &str, root: &str) -> ResolvedSystem {
        let decls = parse(src, FileId(0)).unwrap();
        resolve(&decls, root).unwrap()
    }

    fn spec_of(sys: &ResolvedSystem, members: &[&str]) -> CompositeSpec {
        let selected = sys
            .objects
            .iter()
            .filter(|(name, _)| members.contains(&name.as_str()))
            .map(|(name, obj)| (name.clone(), build_automaton(obj, 1000)))
            .collect();
        CompositeSpec::new(selected)
    }

    #[test]
    fn classification_follows_the_member_set() {
        let sys = system(TRIO, "trio");
        let spec = spec_of(&sys, &["p", "q"]);
        let members = spec.member_names();
        let auto = spec.automaton("p");
        let init = auto.initial().unwrap();
        for (action, _) in auto.local_successors(&init).unwrap() {
            assert_eq!(classify(&action, &members), Classification::Internal);
        }
        // p -> s stays external, and a singleton member set externalises all.
        let singleton: BTreeSet<String> = ["p".to_string()].into();
        let (action, _) = &auto.local_successors(&init).unwrap()[0];
        assert_eq!(classify(action, &singleton), Classification::External);
    }

    #[test]
    fn rendezvous_requires_opposite_endpoints_equal_labels_and_arities() {
        let action = |subject: &str, peer: &str, polarity, label: &str, arity: usize| {
            crate::automata::Action {
                subject: subject.into(),
                peer: peer.into(),
                polarity,
                label: label.into(),
                payload: match polarity {
                    Polarity::Send => {
                        crate::automata::ActionPayload::Values(vec![
                            crate::value::Value::Unknown;
                            arity
                        ])
                    }
                    Polarity::Receive => crate::automata::ActionPayload::Binders(arity),
                },
                span: crate::source::Span::dummy(),
            }
        };
        // The continue handshake pairs up.
        let send = action("teamLead", "devTeam", Polarity::Send, "continue", 0);
        let recv = action("devTeam", "teamLead", Polarity::Receive, "continue", 0);
        assert!(rendezvous_match(&send, &recv));
        // The undeliverable stop does not.
        let stop = action("teamLead", "devTeam", Polarity::Send, "stop", 0);
        assert!(!rendezvous_match(&stop, &recv));
        // Label mismatch between k and m.
        let k = action("q", "r", Polarity::Send, "k", 0);
        let m = action("r", "q", Polarity::Receive, "m", 0);
        assert!(!rendezvous_match(&k, &m));
        // Arity is part of a message's identity.
        let wide = action("teamLead", "devTeam", Polarity::Send, "continue", 1);
        assert!(!rendezvous_match(&wide, &recv));
    }

    #[test]
    fn product_of_p_and_q_starts_with_two_rendezvous() {
        let sys = system(TRIO, "trio");
        let product = compose(&spec_of(&sys, &["p", "q"]), 10_000).unwrap();
        let initial_edges = &product.edges[product.initial];
        assert_eq!(initial_edges.len(), 2);
        let mut labels: Vec<&str> = initial_edges
            .iter()
            .map(|(a, _)| match a {
                ClassifiedAction::Internal { label, .. } => label.as_str(),
                ClassifiedAction::External(_) => panic!("expected rendezvous"),
            })
            .collect();
        labels.sort();
        assert_eq!(labels, vec!["i", "j"]);
    }

    #[test]
    fn unsynchronisable_k_sends_are_pruned_from_the_triple_product() {
        let sys = system(TRIO, "trio");
        let product = compose(&spec_of(&sys, &["p", "q", "r"]), 10_000).unwrap();
        for edges in &product.edges {
            for (action, _) in edges {
                let label = match action {
                    ClassifiedAction::Internal { label, .. } => label,
                    ClassifiedAction::External(a) => &a.label,
                };
                assert_ne!(label, "k", "the k send cannot synchronise with q ? m");
            }
        }
    }

    #[test]
    fn singleton_composition_is_the_object_with_external_actions() {
        let sys = system(TRIO, "trio");
        let product = compose(&spec_of(&sys, &["r"]), 10_000).unwrap();
        // r alone: every transition is external, and the shape matches the
        // object automaton (4 states: choice, after-i, after-j/stop, stop).
        for edges in &product.edges {
            for (action, _) in edges {
                assert!(matches!(action, ClassifiedAction::External(_)));
            }
        }
        assert_eq!(product.edges[product.initial].len(), 2);
    }

    #[test]
    fn composition_is_flat_and_order_insensitive() {
        let sys = system(TRIO, "trio");
        let abc = compose(&spec_of(&sys, &["p", "q", "r"]), 10_000).unwrap();
        let cba = compose(&spec_of(&sys, &["r", "q", "p"]), 10_000).unwrap();
        assert_eq!(abc.states.len(), cba.states.len());
        assert_eq!(abc.states, cba.states);
        assert_eq!(abc.edges.len(), cba.edges.len());
        for (a, b) in abc.edges.iter().zip(&cba.edges) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn pruning_soundness_every_edge_is_locally_enabled() {
        let sys = system(TRIO, "trio");
        let spec = spec_of(&sys, &["p", "q", "r"]);
        let product = compose(&spec, 10_000).unwrap();
        for (state, edges) in product.states.iter().zip(&product.edges) {
            for (action, _) in edges {
                match action {
                    ClassifiedAction::External(a) => {
                        let succs =
                            spec.automaton(&a.subject).local_successors(&state[&a.subject]);
                        assert!(succs
                            .unwrap()
                            .iter()
                            .any(|(x, _)| x.label == a.label && x.polarity == a.polarity));
                    }
                    ClassifiedAction::Internal { sender, receiver, label, .. } => {
                        let s = spec.automaton(sender).local_successors(&state[sender]).unwrap();
                        assert!(s
                            .iter()
                            .any(|(x, _)| &x.label == label && x.polarity == Polarity::Send));
                        let r =
                            spec.automaton(receiver).local_successors(&state[receiver]).unwrap();
                        assert!(r
                            .iter()
                            .any(|(x, _)| &x.label == label && x.polarity == Polarity::Receive));
                    }
                }
            }
        }
    }

    #[test]
    fn enlarging_members_never_externalises_an_internal_action() {
        let sys = system(TRIO, "trio");
        let spec = spec_of(&sys, &["p", "q", "r"]);
        let small: BTreeSet<String> = ["p".to_string(), "q".to_string()].into();
        let large: BTreeSet<String> =
            ["p".to_string(), "q".to_string(), "r".to_string(), "s".to_string()].into();
        for name in ["p", "q", "r"] {
            let auto = spec.automaton(name);
            let mut stack = vec![auto.initial().unwrap()];
            let mut seen = stack.clone();
            while let Some(state) = stack.pop() {
                for (action, succ) in auto.local_successors(&state).unwrap() {
                    if classify(&action, &small) == Classification::Internal {
                        assert_eq!(classify(&action, &large), Classification::Internal);
                    }
                    if !seen.contains(&succ) {
                        seen.push(succ.clone());
                        stack.push(succ);
                    }
                }
            }
        }
    }
}
