//! The concurrent-object language: lexer, parser, pretty-printer, and
//! workspace resolution.
//!
//! Concrete syntax uses `!` for send and `?` for receive. Message labels and
//! participant names are lowercase-initial, behaviour names uppercase-initial;
//! this convention is what lets a branch header be told apart from a statement
//! inside a choice block. Every process ends in `.`, a behaviour invocation,
//! or a choice; continuations live inside choice branches.

mod lexer;
mod parser;
mod pretty;
mod resolve;

pub use parser::parse;
pub use pretty::{pretty_file, pretty_system};
pub use resolve::{resolve, ResolvedSystem};

use crate::source::Span;

#[derive(Clone, Debug)]
pub struct SystemDecl {
    pub name: String,
    pub name_span: Span,
    /// Declared abstraction, as in `system dev-refactored: dev`.
    pub parent: Option<(String, Span)>,
    pub usings: Vec<(String, Span)>,
    pub objects: Vec<ObjectDecl>,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct ObjectDecl {
    pub name: String,
    pub name_span: Span,
    /// In declaration order; behaviour declarations may be interleaved with
    /// statements in the source but are hoisted to object scope.
    pub behaviours: Vec<Behaviour>,
    /// Concatenation of the object's non-declaration statements.
    pub main: Proc,
    pub span: Span,
}

impl ObjectDecl {
    pub fn behaviour(&self, name: &str) -> Option<&Behaviour> {
        self.behaviours.iter().find(|b| b.name == name)
    }
}

#[derive(Clone, Debug)]
pub struct Behaviour {
    pub name: String,
    pub name_span: Span,
    pub params: Vec<(String, Span)>,
    pub body: Proc,
    pub span: Span,
}

/// A process. A single-label send `p ! m(e) P` or receive `p ? m(x) P` is a
/// one-branch choice whose branch body is `P`.
#[derive(Clone, Debug)]
pub struct Proc {
    pub kind: ProcKind,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub enum ProcKind {
    Send { target: String, branches: Vec<SendBranch> },
    Recv { source: String, branches: Vec<RecvBranch> },
    Invoke { name: String, args: Vec<Expr> },
    Stop,
}

#[derive(Clone, Debug)]
pub struct SendBranch {
    pub label: String,
    pub label_span: Span,
    pub args: Vec<Expr>,
    pub body: Proc,
}

#[derive(Clone, Debug)]
pub struct RecvBranch {
    pub label: String,
    pub label_span: Span,
    pub binders: Vec<(String, Span)>,
    pub body: Proc,
}

#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Var(String),
    Int(i64),
    Str(String),
}

impl Proc {
    /// Span-insensitive structural equality.
    pub fn structurally_eq(&self, other: &Proc) -> bool {
        match (&self.kind, &other.kind) {
            (
                ProcKind::Send { target: t1, branches: b1 },
                ProcKind::Send { target: t2, branches: b2 },
            ) => {
                t1 == t2
                    && b1.len() == b2.len()
                    && b1.iter().zip(b2).all(|(x, y)| {
                        x.label == y.label
                            && x.args.len() == y.args.len()
                            && x.args.iter().zip(&y.args).all(|(a, b)| a.kind == b.kind)
                            && x.body.structurally_eq(&y.body)
                    })
            }
            (
                ProcKind::Recv { source: s1, branches: b1 },
                ProcKind::Recv { source: s2, branches: b2 },
            ) => {
                s1 == s2
                    && b1.len() == b2.len()
                    && b1.iter().zip(b2).all(|(x, y)| {
                        x.label == y.label
                            && x.binders.len() == y.binders.len()
                            && x.binders.iter().zip(&y.binders).all(|(a, b)| a.0 == b.0)
                            && x.body.structurally_eq(&y.body)
                    })
            }
            (
                ProcKind::Invoke { name: n1, args: a1 },
                ProcKind::Invoke { name: n2, args: a2 },
            ) => {
                n1 == n2
                    && a1.len() == a2.len()
                    && a1.iter().zip(a2).all(|(a, b)| a.kind == b.kind)
            }
            (ProcKind::Stop, ProcKind::Stop) => true,
            _ => false,
        }
    }
}

impl ObjectDecl {
    pub fn structurally_eq(&self, other: &ObjectDecl) -> bool {
        self.name == other.name
            && self.behaviours.len() == other.behaviours.len()
            && self.behaviours.iter().zip(&other.behaviours).all(|(a, b)| {
                a.name == b.name
                    && a.params.len() == b.params.len()
                    && a.params.iter().zip(&b.params).all(|(x, y)| x.0 == y.0)
                    && a.body.structurally_eq(&b.body)
            })
            && self.main.structurally_eq(&other.main)
    }
}

impl SystemDecl {
    pub fn structurally_eq(&self, other: &SystemDecl) -> bool {
        self.name == other.name
            && self.parent.as_ref().map(|p| &p.0) == other.parent.as_ref().map(|p| &p.0)
            && self.usings.len() == other.usings.len()
            && self.usings.iter().zip(&other.usings).all(|(a, b)| a.0 == b.0)
            && self.objects.len() == other.objects.len()
            && self
                .objects
                .iter()
                .zip(&other.objects)
                .all(|(a, b)| a.structurally_eq(b))
    }
}

/// Iteration over a process and everything nested below it, in source order.
pub(crate) fn walk_procs<'a>(proc: &'a Proc, f: &mut impl FnMut(&'a Proc)) {
    f(proc);
    match &proc.kind {
        ProcKind::Send { branches, .. } => {
            for b in branches {
                walk_procs(&b.body, f);
            }
        }
        ProcKind::Recv { branches, .. } => {
            for b in branches {
                walk_procs(&b.body, f);
            }
        }
        ProcKind::Invoke { .. } | ProcKind::Stop => {}
    }
}

/// All processes of an object: main first, then behaviour bodies in
/// declaration order.
pub(crate) fn object_procs<'a>(obj: &'a ObjectDecl, f: &mut impl FnMut(&'a Proc)) {
    walk_procs(&obj.main, f);
    for b in &obj.behaviours {
        walk_procs(&b.body, f);
    }
}
