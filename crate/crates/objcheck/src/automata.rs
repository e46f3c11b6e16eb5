//! Per-object communicating automata.
//!
//! A local state is a (program point, value environment) pair. Send and
//! receive choices produce one action per branch; behaviour invocations are
//! silent and are resolved away, so every stored state points at a send
//! choice, a receive choice, or stop. Successor computation is lazy because
//! parameterised behaviours can induce unbounded state.

use crate::source::Span;
use crate::syntax::{Behaviour, Expr, ExprKind, ObjectDecl, Proc, ProcKind};
use crate::value::Value;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutomataError {
    /// A chain of invocations with no intervening action exceeded the
    /// configured limit, signalling trivially divergent recursion.
    #[error("object `{object}`: behaviour recursion without an action exceeded {limit} steps")]
    InvokeDepthExceeded { object: String, span: Span, limit: usize },
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Polarity {
    Send,
    Receive,
}

/// Payload of an action: evaluated values for sends, a binder count for
/// receives.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ActionPayload {
    Values(Vec<Value>),
    Binders(usize),
}

/// A transition label: `subject` acts, `peer` is the other endpoint. The span
/// points at the branch label in the source.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Action {
    pub subject: String,
    pub peer: String,
    pub polarity: Polarity,
    pub label: String,
    pub payload: ActionPayload,
    pub span: Span,
}

impl Action {
    pub fn arity(&self) -> usize {
        match &self.payload {
            ActionPayload::Values(vs) => vs.len(),
            ActionPayload::Binders(n) => *n,
        }
    }

    pub fn values(&self) -> &[Value] {
        match &self.payload {
            ActionPayload::Values(vs) => vs,
            ActionPayload::Binders(_) => &[],
        }
    }
}

/// Program point in the automaton's node arena.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(u32);

/// A local state: program point plus the environment of binders in scope
/// there. States are canonical: the point is never an invocation node.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct LocalState {
    pub node: NodeId,
    pub env: BTreeMap<String, Value>,
}

#[derive(Clone, Debug)]
struct SendArm {
    label: String,
    label_span: Span,
    args: Vec<Expr>,
    body: NodeId,
}

#[derive(Clone, Debug)]
struct RecvArm {
    label: String,
    label_span: Span,
    binders: Vec<String>,
    body: NodeId,
}

#[derive(Clone, Debug)]
enum Node {
    Send { target: String, arms: Vec<SendArm>, span: Span },
    Recv { source: String, arms: Vec<RecvArm>, span: Span },
    Invoke { name: String, args: Vec<Expr>, span: Span },
    Stop,
}

/// The communicating automaton of one object. Immutable after construction;
/// identical declarations yield identical behaviour.
#[derive(Clone, Debug)]
pub struct ObjectAutomaton {
    object: String,
    nodes: Vec<Node>,
    behaviours: BTreeMap<String, (Vec<String>, NodeId)>,
    main_entry: NodeId,
    invoke_depth: usize,
}

/// Evaluate an expression: literals evaluate to themselves, variables to
/// their binding. Free variables were scope-checked at parse time.
pub fn eval_expr(env: &BTreeMap<String, Value>, expr: &Expr) -> Value {
    match &expr.kind {
        ExprKind::Int(n) => Value::Int(*n),
        ExprKind::Str(s) => Value::Str(s.clone()),
        ExprKind::Var(v) => env
            .get(v)
            .cloned()
            .unwrap_or_else(|| panic!("unbound variable `{v}` escaped validation")),
    }
}

/// Build the automaton for a validated object declaration.
pub fn build_automaton(obj: &ObjectDecl, invoke_depth: usize) -> ObjectAutomaton {
    let mut builder = Builder { nodes: Vec::new() };
    let behaviour_entries: Vec<(String, Vec<String>, NodeId)> = obj
        .behaviours
        .iter()
        .map(|b: &Behaviour| {
            let entry = builder.lower(&b.body);
            let params = b.params.iter().map(|(p, _)| p.clone()).collect();
            (b.name.clone(), params, entry)
        })
        .collect();
    let main_entry = builder.lower(&obj.main);
    let behaviours = behaviour_entries
        .into_iter()
        .map(|(name, params, entry)| (name, (params, entry)))
        .collect();
    ObjectAutomaton {
        object: obj.name.clone(),
        nodes: builder.nodes,
        behaviours,
        main_entry,
        invoke_depth,
    }
}

struct Builder {
    nodes: Vec<Node>,
}

impl Builder {
    fn push(&mut self, node: Node) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(node);
        id
    }

    fn lower(&mut self, proc: &Proc) -> NodeId {
        match &proc.kind {
            ProcKind::Stop => self.push(Node::Stop),
            ProcKind::Invoke { name, args } => self.push(Node::Invoke {
                name: name.clone(),
                args: args.clone(),
                span: proc.span,
            }),
            ProcKind::Send { target, branches } => {
                let arms = branches
                    .iter()
                    .map(|br| SendArm {
                        label: br.label.clone(),
                        label_span: br.label_span,
                        args: br.args.clone(),
                        body: self.lower(&br.body),
                    })
                    .collect();
                self.push(Node::Send { target: target.clone(), arms, span: proc.span })
            }
            ProcKind::Recv { source, branches } => {
                let arms = branches
                    .iter()
                    .map(|br| RecvArm {
                        label: br.label.clone(),
                        label_span: br.label_span,
                        binders: br.binders.iter().map(|(b, _)| b.clone()).collect(),
                        body: self.lower(&br.body),
                    })
                    .collect();
                self.push(Node::Recv { source: source.clone(), arms, span: proc.span })
            }
        }
    }
}

impl ObjectAutomaton {
    pub fn object(&self) -> &str {
        &self.object
    }

    /// The initial state: the entry of the object's main process under the
    /// empty environment, with leading invocations resolved.
    pub fn initial(&self) -> Result<LocalState, AutomataError> {
        self.canonicalize(self.main_entry, BTreeMap::new())
    }

    /// A state is terminated when its point is stop.
    pub fn is_terminated(&self, state: &LocalState) -> bool {
        matches!(self.nodes[state.node.0 as usize], Node::Stop)
    }

    /// Resolve invocation nodes silently, substituting evaluated arguments
    /// for parameters, until an action point or stop is reached.
    fn canonicalize(
        &self,
        mut node: NodeId,
        mut env: BTreeMap<String, Value>,
    ) -> Result<LocalState, AutomataError> {
        let mut depth = 0usize;
        loop {
            match &self.nodes[node.0 as usize] {
                Node::Invoke { name, args, span } => {
                    depth += 1;
                    if depth > self.invoke_depth {
                        return Err(AutomataError::InvokeDepthExceeded {
                            object: self.object.clone(),
                            span: *span,
                            limit: self.invoke_depth,
                        });
                    }
                    let (params, entry) = self
                        .behaviours
                        .get(name)
                        .unwrap_or_else(|| panic!("behaviour `{name}` escaped validation"));
                    let values: Vec<Value> = args.iter().map(|a| eval_expr(&env, a)).collect();
                    env = params.iter().cloned().zip(values).collect();
                    node = *entry;
                }
                _ => return Ok(LocalState { node, env }),
            }
        }
    }

    /// All enabled local transitions. Sends carry evaluated payloads;
    /// receive successors bind the branch binders to Unknown (callers that
    /// know the transferred values use [`fire_receive`] instead).
    ///
    /// [`fire_receive`]: ObjectAutomaton::fire_receive
    pub fn local_successors(
        &self,
        state: &LocalState,
    ) -> Result<Vec<(Action, LocalState)>, AutomataError> {
        let state = match &self.nodes[state.node.0 as usize] {
            Node::Invoke { .. } => self.canonicalize(state.node, state.env.clone())?,
            _ => state.clone(),
        };
        match &self.nodes[state.node.0 as usize] {
            Node::Stop => Ok(Vec::new()),
            Node::Invoke { .. } => unreachable!("canonicalized above"),
            Node::Send { target, arms, .. } => {
                let mut out = Vec::with_capacity(arms.len());
                for arm in arms {
                    let payload: Vec<Value> =
                        arm.args.iter().map(|a| eval_expr(&state.env, a)).collect();
                    let action = Action {
                        subject: self.object.clone(),
                        peer: target.clone(),
                        polarity: Polarity::Send,
                        label: arm.label.clone(),
                        payload: ActionPayload::Values(payload),
                        span: arm.label_span,
                    };
                    let succ = self.canonicalize(arm.body, state.env.clone())?;
                    out.push((action, succ));
                }
                Ok(out)
            }
            Node::Recv { source, arms, .. } => {
                let mut out = Vec::with_capacity(arms.len());
                for arm in arms {
                    let action = Action {
                        subject: self.object.clone(),
                        peer: source.clone(),
                        polarity: Polarity::Receive,
                        label: arm.label.clone(),
                        payload: ActionPayload::Binders(arm.binders.len()),
                        span: arm.label_span,
                    };
                    let mut env = state.env.clone();
                    for binder in &arm.binders {
                        env.insert(binder.clone(), Value::Unknown);
                    }
                    let succ = self.canonicalize(arm.body, env)?;
                    out.push((action, succ));
                }
                Ok(out)
            }
        }
    }

    /// The peer an in-flight receive choice is waiting on, if the state is a
    /// receive point.
    pub fn receive_source(&self, state: &LocalState) -> Option<&str> {
        match &self.nodes[state.node.0 as usize] {
            Node::Recv { source, .. } => Some(source),
            _ => None,
        }
    }

    /// Receive branches available at a receive point: (label, arity, span).
    pub fn receive_branches(&self, state: &LocalState) -> Vec<(&str, usize, Span)> {
        match &self.nodes[state.node.0 as usize] {
            Node::Recv { arms, .. } => arms
                .iter()
                .map(|a| (a.label.as_str(), a.binders.len(), a.label_span))
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Span of the choice at the state's point, starting at the participant
    /// identifier in the source.
    pub fn point_span(&self, state: &LocalState) -> Option<Span> {
        match &self.nodes[state.node.0 as usize] {
            Node::Recv { span, .. } | Node::Send { span, .. } => Some(*span),
            _ => None,
        }
    }

    /// Fire a receive branch with the actual transferred values. The branch
    /// is identified by label; branch labels are unique within a choice.
    pub fn fire_receive(
        &self,
        state: &LocalState,
        label: &str,
        values: &[Value],
    ) -> Result<LocalState, AutomataError> {
        match &self.nodes[state.node.0 as usize] {
            Node::Recv { arms, .. } => {
                let arm = arms
                    .iter()
                    .find(|a| a.label == label && a.binders.len() == values.len())
                    .unwrap_or_else(|| panic!("no branch `{label}`/{} here", values.len()));
                let mut env = state.env.clone();
                for (binder, value) in arm.binders.iter().zip(values) {
                    env.insert(binder.clone(), value.clone());
                }
                self.canonicalize(arm.body, env)
            }
            _ => panic!("fire_receive on a non-receive point"),
        }
    }
}
