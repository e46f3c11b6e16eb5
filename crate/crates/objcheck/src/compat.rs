//! Multiparty compatibility: exhaustive exploration of the asynchronous
//! configuration space and the analyses over it.
//!
//! Configurations pair the members' local states with one FIFO queue per
//! ordered pair of members; only internal channels have queues. External
//! sends disappear into the ether and external receives never block. The
//! analyses flag sends whose message some reachable configuration can never
//! deliver, receive branches that can never fire once blocked, and deadlocked
//! configurations, each with a replayable witness.

use crate::automata::{build_automaton, AutomataError, LocalState, ObjectAutomaton, Polarity};
use crate::diag::{Diagnostic, DiagnosticKind, Severity, Step, StepKind};
use crate::source::Span;
use crate::syntax::ResolvedSystem;
use crate::value::Value;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

/// An ordered pair of members: the unidirectional FIFO channel from `sender`
/// to `receiver`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ChannelId {
    pub sender: String,
    pub receiver: String,
}

/// A queued message. `origin` is the span of the send that produced it, which
/// is where an undeliverable-send diagnostic points.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Message {
    pub label: String,
    pub payload: Vec<Value>,
    pub origin: Span,
}

/// One state of the asynchronous system. Only non-empty queues are stored, so
/// structural equality is canonical.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Configuration {
    pub locals: BTreeMap<String, LocalState>,
    pub queues: BTreeMap<ChannelId, VecDeque<Message>>,
}

#[derive(Clone, Debug)]
pub struct ExploreOptions {
    pub queue_bound: usize,
    pub max_configs: usize,
    pub invoke_depth: usize,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions { queue_bound: 2, max_configs: 100_000, invoke_depth: 1000 }
    }
}

/// The explored reachability graph. `complete` is false when a queue
/// overflow, the configuration limit, or an invoke-depth error cut the
/// exploration short; the error analyses require a complete graph.
#[derive(Clone, Debug)]
pub struct ReachGraph {
    pub system: String,
    pub configs: Vec<Configuration>,
    pub edges: Vec<Vec<(Step, usize)>>,
    /// BFS tree: predecessor config and edge index, for shortest witnesses.
    pub parent: Vec<Option<(usize, usize)>>,
    pub complete: bool,
    pub explore_diags: Vec<Diagnostic>,
}

impl ReachGraph {
    /// Shortest step path from the initial configuration to `config`.
    pub fn path_to(&self, mut config: usize) -> Vec<Step> {
        let mut steps = Vec::new();
        while let Some((pred, edge)) = self.parent[config] {
            steps.push(self.edges[pred][edge].0.clone());
            config = pred;
        }
        steps.reverse();
        steps
    }
}

/// Successor computation for one system, shared by the exhaustive explorer,
/// the random simulator, and witness replay.
pub struct Explorer {
    system: String,
    system_span: Span,
    automata: BTreeMap<String, ObjectAutomaton>,
    members: BTreeSet<String>,
    queue_bound: usize,
}

/// A problem noticed while computing successors: the semantics simply omits
/// the step, and the problem is reported as a diagnostic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SideIssue {
    QueueOverflow { span: Span, message: String },
    ArityMismatch { span: Span, message: String },
}

impl Explorer {
    pub fn new(sys: &ResolvedSystem, opts: &ExploreOptions) -> Self {
        let automata = sys
            .objects
            .iter()
            .map(|(name, obj)| (name.clone(), build_automaton(obj, opts.invoke_depth)))
            .collect();
        Explorer {
            system: sys.name.clone(),
            system_span: sys.name_span,
            automata,
            members: sys.member_names(),
            queue_bound: opts.queue_bound,
        }
    }

    pub fn system(&self) -> &str {
        &self.system
    }

    pub fn automata(&self) -> &BTreeMap<String, ObjectAutomaton> {
        &self.automata
    }

    fn depth_diag(&self, err: AutomataError) -> Diagnostic {
        let AutomataError::InvokeDepthExceeded { ref object, span, limit } = err;
        Diagnostic::new(
            DiagnosticKind::InvokeDepthExceeded,
            span,
            self.system.clone(),
            format!("object `{object}`: recursion without an action exceeded {limit} invocations"),
        )
    }

    pub fn initial(&self) -> Result<Configuration, Diagnostic> {
        let mut locals = BTreeMap::new();
        for (name, auto) in &self.automata {
            let init = auto.initial().map_err(|e| self.depth_diag(e))?;
            locals.insert(name.clone(), init);
        }
        Ok(Configuration { locals, queues: BTreeMap::new() })
    }

    fn is_internal(&self, participant: &str) -> bool {
        self.members.contains(participant)
    }

    /// All enabled steps from a configuration, in deterministic order:
    /// members alphabetically, branches in source order.
    pub fn successors(
        &self,
        cfg: &Configuration,
        issues: &mut Vec<SideIssue>,
    ) -> Result<Vec<(Step, Configuration)>, Diagnostic> {
        let mut out = Vec::new();
        for (name, local) in &cfg.locals {
            let auto = &self.automata[name];
            let succs = auto.local_successors(local).map_err(|e| self.depth_diag(e))?;
            for (action, succ) in succs {
                match (action.polarity, self.is_internal(&action.peer)) {
                    (Polarity::Send, true) => {
                        let ch = ChannelId { sender: name.clone(), receiver: action.peer.clone() };
                        let len = cfg.queues.get(&ch).map_or(0, |q| q.len());
                        if len >= self.queue_bound {
                            issues.push(SideIssue::QueueOverflow {
                                span: action.span,
                                message: format!(
                                    "sending `{}` to `{}` exceeds the queue bound {}",
                                    action.label, action.peer, self.queue_bound
                                ),
                            });
                            continue;
                        }
                        let mut next = cfg.clone();
                        next.locals.insert(name.clone(), succ);
                        next.queues.entry(ch).or_default().push_back(Message {
                            label: action.label.clone(),
                            payload: action.values().to_vec(),
                            origin: action.span,
                        });
                        out.push((
                            Step {
                                kind: StepKind::InternalSend,
                                sender: name.clone(),
                                receiver: action.peer.clone(),
                                label: action.label.clone(),
                                payload: action.values().to_vec(),
                                span: action.span,
                            },
                            next,
                        ));
                    }
                    (Polarity::Send, false) => {
                        let mut next = cfg.clone();
                        next.locals.insert(name.clone(), succ);
                        out.push((
                            Step {
                                kind: StepKind::ExternalSend,
                                sender: name.clone(),
                                receiver: action.peer.clone(),
                                label: action.label.clone(),
                                payload: action.values().to_vec(),
                                span: action.span,
                            },
                            next,
                        ));
                    }
                    (Polarity::Receive, true) => {
                        let ch = ChannelId { sender: action.peer.clone(), receiver: name.clone() };
                        let Some(queue) = cfg.queues.get(&ch) else { continue };
                        let head = queue.front().expect("stored queues are non-empty");
                        if head.label != action.label {
                            continue;
                        }
                        if head.payload.len() != action.arity() {
                            issues.push(SideIssue::ArityMismatch {
                                span: action.span,
                                message: format!(
                                    "`{}` from `{}` carries {} value(s) but the branch binds {}",
                                    head.label,
                                    action.peer,
                                    head.payload.len(),
                                    action.arity()
                                ),
                            });
                            continue;
                        }
                        let bound = auto
                            .fire_receive(local, &action.label, &head.payload)
                            .map_err(|e| self.depth_diag(e))?;
                        let mut next = cfg.clone();
                        next.locals.insert(name.clone(), bound);
                        let payload = head.payload.clone();
                        {
                            let q = next.queues.get_mut(&ch).expect("queue present");
                            q.pop_front();
                            if q.is_empty() {
                                next.queues.remove(&ch);
                            }
                        }
                        out.push((
                            Step {
                                kind: StepKind::InternalReceive,
                                sender: action.peer.clone(),
                                receiver: name.clone(),
                                label: action.label.clone(),
                                payload,
                                span: action.span,
                            },
                            next,
                        ));
                    }
                    (Polarity::Receive, false) => {
                        let mut next = cfg.clone();
                        next.locals.insert(name.clone(), succ);
                        out.push((
                            Step {
                                kind: StepKind::ExternalReceive,
                                sender: action.peer.clone(),
                                receiver: name.clone(),
                                label: action.label.clone(),
                                payload: vec![Value::Unknown; action.arity()],
                                span: action.span,
                            },
                            next,
                        ));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Exhaustively explore the reachable configurations, deduplicated,
/// breadth-first.
pub fn explore(sys: &ResolvedSystem, opts: &ExploreOptions) -> ReachGraph {
    let explorer = Explorer::new(sys, opts);
    explore_with(&explorer, opts)
}

pub fn explore_with(explorer: &Explorer, opts: &ExploreOptions) -> ReachGraph {
    let system = explorer.system.clone();
    let initial = match explorer.initial() {
        Ok(c) => c,
        Err(d) => {
            return ReachGraph {
                system,
                configs: Vec::new(),
                edges: Vec::new(),
                parent: Vec::new(),
                complete: false,
                explore_diags: vec![d],
            }
        }
    };

    let mut configs = vec![initial.clone()];
    let mut index: HashMap<Configuration, usize> = HashMap::new();
    index.insert(initial, 0);
    let mut edges: Vec<Vec<(Step, usize)>> = vec![Vec::new()];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None];
    let mut complete = true;
    // (kind, span) -> (config reached, message); first hit kept (shortest
    // witness, BFS order).
    let mut issue_sites: Vec<(DiagnosticKind, Span, usize, String)> = Vec::new();
    let mut seen_issues: HashSet<(DiagnosticKind, Span)> = HashSet::new();
    let mut limit_diag: Option<Diagnostic> = None;

    let mut frontier = 0usize;
    'bfs: while frontier < configs.len() {
        let cfg = configs[frontier].clone();
        let mut issues = Vec::new();
        let succs = match explorer.successors(&cfg, &mut issues) {
            Ok(s) => s,
            Err(d) => {
                complete = false;
                limit_diag = Some(d);
                break 'bfs;
            }
        };
        for issue in issues {
            let (kind, span, message) = match issue {
                SideIssue::QueueOverflow { span, message } => {
                    complete = false;
                    (DiagnosticKind::QueueOverflow, span, message)
                }
                SideIssue::ArityMismatch { span, message } => {
                    (DiagnosticKind::ArityMismatch, span, message)
                }
            };
            if seen_issues.insert((kind, span)) {
                issue_sites.push((kind, span, frontier, message));
            }
        }
        for (step, next) in succs {
            let target = match index.get(&next) {
                Some(&id) => id,
                None => {
                    if configs.len() >= opts.max_configs {
                        complete = false;
                        limit_diag = Some(Diagnostic::new(
                            DiagnosticKind::StateLimitExceeded,
                            explorer.system_span,
                            system.clone(),
                            format!(
                                "exploration stopped after {} configurations; \
                                 raise the limit to verify exhaustively",
                                opts.max_configs
                            ),
                        ));
                        break 'bfs;
                    }
                    let id = configs.len();
                    configs.push(next.clone());
                    index.insert(next, id);
                    edges.push(Vec::new());
                    parent.push(Some((frontier, edges[frontier].len())));
                    id
                }
            };
            edges[frontier].push((step, target));
        }
        frontier += 1;
    }

    let mut graph = ReachGraph {
        system,
        configs,
        edges,
        parent,
        complete,
        explore_diags: Vec::new(),
    };
    for (kind, span, cfg, message) in issue_sites {
        let witness = graph.path_to(cfg);
        graph.explore_diags.push(
            Diagnostic::new(kind, span, graph.system.clone(), message).with_witness(witness),
        );
    }
    if let Some(d) = limit_diag {
        graph.explore_diags.push(d);
    }
    graph
}

/// A send site is flagged iff some reachable configuration holds a queued
/// message from that site that no configuration reachable from it ever
/// dequeues. Message instances are tracked by queue position through a
/// backward fixpoint.
pub fn find_undeliverable(explorer: &Explorer, g: &ReachGraph) -> Vec<Diagnostic> {
    debug_assert!(g.complete);
    let mut rev: Vec<Vec<(usize, usize)>> = vec![Vec::new(); g.configs.len()];
    for (c, outs) in g.edges.iter().enumerate() {
        for (i, (_, target)) in outs.iter().enumerate() {
            rev[*target].push((c, i));
        }
    }
    let queue_len = |c: usize, ch: &ChannelId| g.configs[c].queues.get(ch).map_or(0, |q| q.len());

    // Least fixpoint of "this instance can eventually be dequeued".
    let mut good: HashSet<(usize, ChannelId, usize)> = HashSet::new();
    let mut worklist: Vec<(usize, ChannelId, usize)> = Vec::new();
    for (c, outs) in g.edges.iter().enumerate() {
        for (step, _) in outs {
            if step.kind == StepKind::InternalReceive {
                let ch = ChannelId { sender: step.sender.clone(), receiver: step.receiver.clone() };
                let node = (c, ch, 0usize);
                if good.insert(node.clone()) {
                    worklist.push(node);
                }
            }
        }
    }
    while let Some((c2, ch, pos)) = worklist.pop() {
        for &(c1, edge) in &rev[c2] {
            let step = &g.edges[c1][edge].0;
            let dequeues_ch = step.kind == StepKind::InternalReceive
                && step.sender == ch.sender
                && step.receiver == ch.receiver;
            let prior = if dequeues_ch { pos + 1 } else { pos };
            if prior < queue_len(c1, &ch) {
                let node = (c1, ch.clone(), prior);
                if good.insert(node.clone()) {
                    worklist.push(node);
                }
            }
        }
    }

    // Report each doomed send site once, with the shortest witness.
    let mut hits: BTreeMap<Span, (usize, String)> = BTreeMap::new();
    for (c, cfg) in g.configs.iter().enumerate() {
        for (ch, queue) in &cfg.queues {
            for (pos, msg) in queue.iter().enumerate() {
                if good.contains(&(c, ch.clone(), pos)) {
                    continue;
                }
                hits.entry(msg.origin).or_insert_with(|| {
                    (
                        c,
                        format!(
                            "the `{}` message sent to `{}` can never be delivered",
                            msg.label, ch.receiver
                        ),
                    )
                });
                let entry = hits.get_mut(&msg.origin).unwrap();
                if c < entry.0 {
                    entry.0 = c;
                }
            }
        }
    }
    hits.into_iter()
        .map(|(span, (c, message))| {
            Diagnostic::new(DiagnosticKind::UndeliverableSend, span, explorer.system.clone(), message)
                .with_witness(g.path_to(c))
        })
        .collect()
}

/// Members with no enabled step in a configuration, restricted to those
/// waiting at an internal receive choice (anything else always has a step in
/// a complete graph).
fn blocked_members<'a>(
    explorer: &'a Explorer,
    g: &ReachGraph,
    c: usize,
) -> Vec<(&'a str, &'a ObjectAutomaton, LocalState)> {
    let cfg = &g.configs[c];
    let mut acted: BTreeSet<&str> = BTreeSet::new();
    for (step, _) in &g.edges[c] {
        acted.insert(step.actor());
    }
    let mut out = Vec::new();
    for (name, auto) in explorer.automata() {
        let local = &cfg.locals[name];
        if auto.is_terminated(local) || acted.contains(name.as_str()) {
            continue;
        }
        if auto.receive_source(local).is_some() {
            out.push((name.as_str(), auto, local.clone()));
        }
    }
    out
}

/// Stuck receives. A blocked object can only move by firing one of the
/// branches of the choice it waits at; when some reachable configuration
/// blocks it there and no configuration reachable from that one ever fires
/// any of those branches, the object is stuck for good and each branch is
/// flagged individually. A branch that merely loses its sender while a
/// sibling branch can still fire is not an error: the object still proceeds.
pub fn find_stuck_receives(explorer: &Explorer, g: &ReachGraph) -> Vec<Diagnostic> {
    debug_assert!(g.complete);
    struct Choice {
        object: String,
        peer: String,
        branches: Vec<(String, Span)>,
        blocked_at: Vec<usize>,
    }
    // Keyed by the span of the choice, which identifies it syntactically.
    let mut choices: BTreeMap<Span, Choice> = BTreeMap::new();
    for c in 0..g.configs.len() {
        for (name, auto, local) in blocked_members(explorer, g, c) {
            let key = auto.point_span(&local).expect("receive points have spans");
            let entry = choices.entry(key).or_insert_with(|| Choice {
                object: name.to_string(),
                peer: auto.receive_source(&local).expect("blocked at a receive").to_string(),
                branches: auto
                    .receive_branches(&local)
                    .iter()
                    .map(|(l, _, s)| (l.to_string(), *s))
                    .collect(),
                blocked_at: Vec::new(),
            });
            entry.blocked_at.push(c);
        }
    }
    if choices.is_empty() {
        return Vec::new();
    }

    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); g.configs.len()];
    for (c, outs) in g.edges.iter().enumerate() {
        for (_, target) in outs {
            rev[*target].push(c);
        }
    }
    // Configurations from which an edge with the given branch span can still
    // eventually fire: backward closure from the configurations firing it.
    let can_fire = |span: Span| -> Vec<bool> {
        let mut can = vec![false; g.configs.len()];
        let mut stack = Vec::new();
        for (c, outs) in g.edges.iter().enumerate() {
            if outs.iter().any(|(s, _)| s.kind == StepKind::InternalReceive && s.span == span) {
                can[c] = true;
                stack.push(c);
            }
        }
        while let Some(c) = stack.pop() {
            for &p in &rev[c] {
                if !can[p] {
                    can[p] = true;
                    stack.push(p);
                }
            }
        }
        can
    };

    let mut diags = Vec::new();
    for choice in choices.values() {
        let fire_sets: Vec<Vec<bool>> =
            choice.branches.iter().map(|(_, span)| can_fire(*span)).collect();
        let Some(&stuck_cfg) = choice
            .blocked_at
            .iter()
            .find(|&&c| fire_sets.iter().all(|can| !can[c]))
        else {
            continue;
        };
        for (label, span) in &choice.branches {
            diags.push(
                Diagnostic::new(
                    DiagnosticKind::StuckReceive,
                    *span,
                    explorer.system.clone(),
                    format!(
                        "the `{label}` message that `{}` is waiting for from `{}` \
                         will never arrive",
                        choice.object, choice.peer
                    ),
                )
                .with_witness(g.path_to(stuck_cfg)),
            );
        }
    }
    diags
}

/// Configurations with no outgoing step in which some member has not
/// terminated. When the blocked receive is already reported as stuck the
/// deadlock is informational, so headline counts are not double-counted.
pub fn find_deadlocks(
    explorer: &Explorer,
    g: &ReachGraph,
    stuck_spans: &BTreeSet<Span>,
) -> Vec<Diagnostic> {
    debug_assert!(g.complete);
    let mut diags = Vec::new();
    for c in 0..g.configs.len() {
        if !g.edges[c].is_empty() {
            continue;
        }
        let blocked = blocked_members(explorer, g, c);
        let Some((name, auto, local)) = blocked.first() else { continue };
        let peer = auto.receive_source(local).expect("blocked at a receive");
        let span = auto.point_span(local).expect("receive points have spans");
        let subsumed = auto
            .receive_branches(local)
            .iter()
            .any(|(_, _, s)| stuck_spans.contains(s));
        let severity = if subsumed { Severity::Info } else { Severity::Error };
        diags.push(
            Diagnostic::new(
                DiagnosticKind::Deadlock,
                span,
                explorer.system.clone(),
                format!(
                    "deadlock: no step is enabled and `{name}` has not terminated \
                     (blocked receiving from `{peer}`)"
                ),
            )
            .with_severity(severity)
            .with_witness(g.path_to(c)),
        );
    }
    diags
}

/// The compatibility verdict: an empty list means the system's members are
/// multiparty compatible at the explored bounds.
pub fn check_compatibility(sys: &ResolvedSystem, opts: &ExploreOptions) -> Vec<Diagnostic> {
    let explorer = Explorer::new(sys, opts);
    let g = explore_with(&explorer, opts);
    let mut diags = g.explore_diags.clone();
    if g.complete {
        let stuck = find_stuck_receives(&explorer, &g);
        let stuck_spans: BTreeSet<Span> = stuck.iter().map(|d| d.span).collect();
        diags.extend(find_undeliverable(&explorer, &g));
        diags.extend(stuck);
        diags.extend(find_deadlocks(&explorer, &g, &stuck_spans));
    }
    crate::diag::sort_diagnostics(&mut diags);
    diags
}

/// A recorded run of the pseudorandom scheduler.
#[derive(Clone, Debug)]
pub struct Trace {
    pub steps: Vec<Step>,
    pub final_config: Configuration,
}

/// Resolve scheduling non-determinism with a seeded RNG; deterministic for a
/// fixed seed. Limits truncate rather than fail.
pub fn simulate(
    sys: &ResolvedSystem,
    seed: u64,
    max_steps: usize,
    opts: &ExploreOptions,
) -> Result<Trace, Diagnostic> {
    let explorer = Explorer::new(sys, opts);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut config = explorer.initial()?;
    let mut steps = Vec::new();
    for _ in 0..max_steps {
        let mut issues = Vec::new();
        let succs = explorer.successors(&config, &mut issues)?;
        if succs.is_empty() {
            break;
        }
        let pick = rng.random_range(0..succs.len());
        let (step, next) = succs.into_iter().nth(pick).expect("index in range");
        steps.push(step);
        config = next;
    }
    Ok(Trace { steps, final_config: config })
}

/// Replay a witness from the initial configuration; used to validate that
/// every reported error is reproducible.
pub fn replay(explorer: &Explorer, steps: &[Step]) -> Result<Configuration, String> {
    let mut config = explorer.initial().map_err(|d| d.message)?;
    for (i, step) in steps.iter().enumerate() {
        let mut issues = Vec::new();
        let succs = explorer.successors(&config, &mut issues).map_err(|d| d.message)?;
        match succs.into_iter().find(|(s, _)| s == step) {
            Some((_, next)) => config = next,
            None => return Err(format!("step {} ({step}) is not enabled", i + 1)),
        }
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::FileId;
    use crate::syntax::{parse, resolve};

    pub(crate) fn system_from(src: &str, root: &str) -> ResolvedSystem {
        let decls = parse(src, FileId(0)).unwrap();
        resolve(&decls, root).unwrap()
    }

    const DEV: &str = "\
system dev

obj teamLead
behaviour ReleaseCycle
   devTeam ? releaseCandidate
   business ! evaluate
   business ? {
      iterate(tag)
         repository ! tagRC(tag)
         devTeam ! continue
         ReleaseCycle
      accept(tag)
         repository ! tagRelease(tag)
         devTeam ! stop.
   }
ReleaseCycle

obj devTeam
repository ! commit
repository ? revision(n)
behaviour ReleaseCycle
   teamLead ! releaseCandidate
   teamLead ? {
      continue
         repository ! commit
         repository ? revision(n)
         ReleaseCycle
   }
ReleaseCycle
";

    const PING_PONG: &str = "\
system pp
obj a
behaviour Loop
   b ! m
   b ? ack
   Loop
Loop
obj b
behaviour Loop
   a ? m
   a ! ack
   Loop
Loop
";

    #[test]
    fn dev_reaches_a_configuration_with_an_undelivered_stop() {
        let sys = system_from(DEV, "dev");
        let opts = ExploreOptions::default();
        let g = explore(&sys, &opts);
        assert!(g.complete);
        let found = g.configs.iter().any(|c| {
            c.queues.iter().any(|(ch, q)| {
                ch.sender == "teamLead"
                    && ch.receiver == "devTeam"
                    && q.iter().any(|m| m.label == "stop")
            })
        });
        assert!(found, "expected a reachable configuration with stop queued");
    }

    #[test]
    fn dev_has_exactly_the_two_reported_compatibility_errors() {
        let sys = system_from(DEV, "dev");
        let diags = check_compatibility(&sys, &ExploreOptions::default());
        let errors: Vec<_> = diags.iter().filter(|d| d.severity == Severity::Error).collect();
        assert_eq!(errors.len(), 2, "diags: {diags:#?}");
        assert_eq!(errors[0].kind, DiagnosticKind::UndeliverableSend);
        assert!(errors[0].message.contains("stop"));
        assert_eq!(errors[1].kind, DiagnosticKind::StuckReceive);
        assert!(errors[1].message.contains("continue"));
        // The accept-path terminal also appears as an informational deadlock.
        assert!(diags
            .iter()
            .any(|d| d.kind == DiagnosticKind::Deadlock && d.severity == Severity::Info));
    }

    #[test]
    fn dev_witnesses_replay_to_the_cited_configurations() {
        let sys = system_from(DEV, "dev");
        let opts = ExploreOptions::default();
        let explorer = Explorer::new(&sys, &opts);
        let diags = check_compatibility(&sys, &opts);
        for d in diags.iter().filter(|d| !d.witness.is_empty()) {
            let cfg = replay(&explorer, &d.witness).expect("witness must replay");
            match d.kind {
                DiagnosticKind::UndeliverableSend => {
                    assert!(cfg
                        .queues
                        .values()
                        .any(|q| q.iter().any(|m| m.origin == d.span)));
                }
                DiagnosticKind::Deadlock => {
                    let mut issues = Vec::new();
                    assert!(explorer.successors(&cfg, &mut issues).unwrap().is_empty());
                }
                DiagnosticKind::StuckReceive => {
                    // The object is blocked at the choice containing the span.
                    let g = explore(&sys, &opts);
                    let idx = g.configs.iter().position(|c| *c == cfg).unwrap();
                    assert!(blocked_members(&explorer, &g, idx)
                        .iter()
                        .any(|(_, auto, local)| auto
                            .receive_branches(local)
                            .iter()
                            .any(|(_, _, s)| *s == d.span)));
                }
                _ => {}
            }
        }
    }

    #[test]
    fn ping_pong_is_clean_and_queues_drain() {
        let sys = system_from(PING_PONG, "pp");
        let opts = ExploreOptions { queue_bound: 1, ..Default::default() };
        let g = explore(&sys, &opts);
        assert!(g.complete);
        let diags = check_compatibility(&sys, &opts);
        assert!(diags.is_empty(), "{diags:#?}");
        // The loop head (both at their behaviour tops) has empty queues.
        assert!(g.configs.iter().any(|c| c.queues.is_empty()));
    }

    #[test]
    fn cyclic_wait_deadlocks_immediately() {
        let src = "\
system cyc
obj a
b ? x
b ! y.
obj b
a ? y
a ! x.
";
        let sys = system_from(src, "cyc");
        let diags = check_compatibility(&sys, &ExploreOptions::default());
        let deadlock = diags.iter().find(|d| d.kind == DiagnosticKind::Deadlock).unwrap();
        assert!(deadlock.witness.is_empty(), "deadlock at the initial configuration");
        assert!(diags.iter().any(|d| d.kind == DiagnosticKind::StuckReceive));
    }

    #[test]
    fn external_receives_never_block() {
        let src = "system s\nobj a\nghost ? m.\n";
        let sys = system_from(src, "s");
        let diags = check_compatibility(&sys, &ExploreOptions::default());
        assert!(diags.is_empty(), "{diags:#?}");
    }

    #[test]
    fn arity_mismatch_is_reported_and_blocks_the_branch() {
        let src = "\
system s
obj a
b ! m(1, 2).
obj b
a ? m(x).
";
        let sys = system_from(src, "s");
        let diags = check_compatibility(&sys, &ExploreOptions::default());
        assert!(diags.iter().any(|d| d.kind == DiagnosticKind::ArityMismatch), "{diags:#?}");
    }

    #[test]
    fn queue_overflow_is_an_error_and_marks_the_graph_incomplete() {
        let src = "\
system s
obj a
behaviour Flood
   b ! m
   Flood
Flood
obj b
c ? never.
";
        let sys = system_from(src, "s");
        let opts = ExploreOptions { queue_bound: 2, ..Default::default() };
        let g = explore(&sys, &opts);
        assert!(!g.complete);
        assert!(g
            .explore_diags
            .iter()
            .any(|d| d.kind == DiagnosticKind::QueueOverflow));
    }

    #[test]
    fn empty_system_is_vacuously_compatible() {
        let sys = system_from("system empty", "empty");
        assert!(check_compatibility(&sys, &ExploreOptions::default()).is_empty());
    }

    #[test]
    fn exceeding_the_configuration_limit_stops_with_a_state_limit_diagnostic() {
        let sys = system_from(DEV, "dev");
        let opts = ExploreOptions { max_configs: 4, ..Default::default() };
        let g = explore(&sys, &opts);
        assert!(!g.complete);
        assert!(g
            .explore_diags
            .iter()
            .any(|d| d.kind == DiagnosticKind::StateLimitExceeded));
        // The verdict reports only the limit; the analyses need a complete
        // graph.
        let diags = check_compatibility(&sys, &opts);
        assert!(diags.iter().all(|d| d.kind == DiagnosticKind::StateLimitExceeded));
    }

    #[test]
    fn simulate_is_deterministic_and_zero_steps_is_the_initial_configuration() {
        let sys = system_from(DEV, "dev");
        let opts = ExploreOptions::default();
        let t0 = simulate(&sys, 1, 0, &opts).unwrap();
        assert!(t0.steps.is_empty());
        let explorer = Explorer::new(&sys, &opts);
        assert_eq!(t0.final_config, explorer.initial().unwrap());
        let a = simulate(&sys, 42, 50, &opts).unwrap();
        let b = simulate(&sys, 42, 50, &opts).unwrap();
        assert_eq!(a.steps, b.steps);
        assert_eq!(a.final_config, b.final_config);
    }

    #[test]
    fn ping_pong_simulation_alternates_on_any_seed() {
        let sys = system_from(PING_PONG, "pp");
        let opts = ExploreOptions::default();
        for seed in 0..5 {
            let t = simulate(&sys, seed, 4, &opts).unwrap();
            let kinds: Vec<StepKind> = t.steps.iter().map(|s| s.kind).collect();
            assert_eq!(
                kinds,
                vec![
                    StepKind::InternalSend,
                    StepKind::InternalReceive,
                    StepKind::InternalSend,
                    StepKind::InternalReceive
                ]
            );
        }
    }

    #[test]
    fn dev_simulations_end_in_the_loop_or_the_deadlock() {
        let sys = system_from(DEV, "dev");
        let opts = ExploreOptions::default();
        let g = explore(&sys, &opts);
        let explorer = Explorer::new(&sys, &opts);
        let mut still_looping = false;
        let mut deadlocked = false;
        for seed in 0..40 {
            let t = simulate(&sys, seed, 20, &opts).unwrap();
            // Every simulated configuration is a reachable one.
            assert!(g.configs.contains(&t.final_config));
            let mut issues = Vec::new();
            if explorer.successors(&t.final_config, &mut issues).unwrap().is_empty() {
                deadlocked = true;
            } else if t.steps.len() == 20 {
                still_looping = true;
            }
        }
        assert!(still_looping && deadlocked, "both outcomes occur across 40 seeds");
    }

    /// Comparison key for diagnostic sets: everything except the witness,
    /// whose interleaving may legitimately include steps of unrelated objects.
    pub(crate) fn diag_keys(
        diags: &[Diagnostic],
    ) -> Vec<(DiagnosticKind, Severity, Span, String)> {
        diags.iter().map(|d| (d.kind, d.severity, d.span, d.message.clone())).collect()
    }

    #[test]
    fn a_fresh_uncoupled_object_leaves_the_verdict_unchanged() {
        let base = system_from(DEV, "dev");
        let extended_src = format!("{DEV}\nobj loner\nelsewhere ! ping.\n");
        let extended = system_from(&extended_src, "dev");
        let opts = ExploreOptions::default();
        let a = check_compatibility(&base, &opts);
        let b = check_compatibility(&extended, &opts);
        assert_eq!(diag_keys(&a), diag_keys(&b));
    }
}
