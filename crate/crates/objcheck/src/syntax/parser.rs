//! Recursive-descent parser.
//!
//! Disambiguation inside a choice block: a branch header is a
//! lowercase-initial identifier *not* followed by `!` or `?`; statements begin
//! with an identifier followed by `!`/`?`, an uppercase-initial identifier
//! (invocation), or `.`. Behaviour declarations may appear between statements
//! of an object body and are hoisted to object scope.

use super::lexer::{lex, Token, TokenKind};
use super::{
    Behaviour, Expr, ExprKind, ObjectDecl, Proc, ProcKind, RecvBranch, SendBranch, SystemDecl,
};
use crate::diag::{Diagnostic, DiagnosticKind};
use crate::source::{FileId, Span};
use std::collections::BTreeSet;

type PResult<T> = Result<T, Diagnostic>;

/// Parse one `.obj` file, which may declare several systems.
///
/// Either every declaration parses and validates, or at least one diagnostic
/// is returned and no partial results are produced.
pub fn parse(src: &str, file: FileId) -> Result<Vec<SystemDecl>, Vec<Diagnostic>> {
    let tokens = lex(src, file).map_err(|d| vec![d])?;
    let mut parser = Parser { tokens, pos: 0, system: String::new() };
    let decls = parser.parse_file().map_err(|d| vec![d])?;
    let diags = validate(&decls);
    if diags.is_empty() {
        Ok(decls)
    } else {
        Err(diags)
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    system: String,
}

/// A pending action prefix: `p ! m(e…)` or `p ? m(x…)` awaiting its
/// continuation.
struct Prefix {
    participant: String,
    participant_span: Span,
    is_send: bool,
    label: String,
    label_span: Span,
    args: Vec<Expr>,
    binders: Vec<(String, Span)>,
}

enum StepOutcome {
    Prefix(Prefix),
    Terminator(Proc),
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek2(&self) -> &Token {
        &self.tokens[(self.pos + 1).min(self.tokens.len() - 1)]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, kind: &TokenKind) -> bool {
        &self.peek().kind == kind
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.next();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &str) -> Diagnostic {
        let tok = self.peek();
        Diagnostic::new(
            DiagnosticKind::UnexpectedToken,
            tok.span,
            self.system.clone(),
            format!("expected {expected}, found {}", tok.kind.describe()),
        )
    }

    fn expect_lident(&mut self, what: &str) -> PResult<(String, Span)> {
        match &self.peek().kind {
            TokenKind::LIdent(s) => {
                let s = s.clone();
                let span = self.peek().span;
                self.next();
                Ok((s, span))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn parse_file(&mut self) -> PResult<Vec<SystemDecl>> {
        let mut decls = Vec::new();
        while !self.at(&TokenKind::Eof) {
            if !self.at(&TokenKind::KwSystem) {
                return Err(self.unexpected("`system`"));
            }
            decls.push(self.parse_system()?);
        }
        Ok(decls)
    }

    fn parse_system(&mut self) -> PResult<SystemDecl> {
        let kw = self.next(); // `system`
        let (name, name_span) =
            self.expect_lident("a system name (lowercase-initial identifier)")?;
        self.system = name.clone();
        let parent = if self.eat(&TokenKind::Colon) {
            Some(self.expect_lident("the name of the abstracted system after `:`")?)
        } else {
            None
        };
        let mut usings = Vec::new();
        while self.at(&TokenKind::KwUsing) {
            self.next();
            usings.push(self.expect_lident("a system name after `using`")?);
        }
        let mut objects = Vec::new();
        let mut end = parent
            .as_ref()
            .map(|p| p.1)
            .or_else(|| usings.last().map(|u| u.1))
            .unwrap_or(name_span);
        while self.at(&TokenKind::KwObj) {
            let obj = self.parse_object()?;
            end = obj.span;
            objects.push(obj);
        }
        Ok(SystemDecl {
            name,
            name_span,
            parent,
            usings,
            objects,
            span: kw.span.to(end),
        })
    }

    fn parse_object(&mut self) -> PResult<ObjectDecl> {
        let kw = self.next(); // `obj`
        let (name, name_span) =
            self.expect_lident("an object name (lowercase-initial identifier)")?;
        let mut behaviours = Vec::new();
        let mut prefixes: Vec<Prefix> = Vec::new();
        let mut main: Option<Proc> = None;
        let mut end = name_span;
        loop {
            match self.peek().kind {
                TokenKind::KwBehaviour => {
                    let b = self.parse_behaviour()?;
                    end = b.span;
                    behaviours.push(b);
                }
                TokenKind::KwObj | TokenKind::KwSystem | TokenKind::Eof => break,
                _ => {
                    if main.is_some() {
                        return Err(Diagnostic::new(
                            DiagnosticKind::UnexpectedToken,
                            self.peek().span,
                            self.system.clone(),
                            format!(
                                "the process of object `{name}` has already ended; \
                                 nothing may follow its terminator"
                            ),
                        ));
                    }
                    match self.parse_step()? {
                        StepOutcome::Prefix(p) => prefixes.push(p),
                        StepOutcome::Terminator(t) => {
                            let m = fold_prefixes(prefixes, t);
                            prefixes = Vec::new();
                            end = m.span;
                            main = Some(m);
                        }
                    }
                }
            }
        }
        let main = match main {
            Some(m) => m,
            None => {
                let (span, msg) = if let Some(last) = prefixes.last() {
                    (
                        last.participant_span,
                        format!(
                            "process of object `{name}` does not end in `.`, \
                             an invocation, or a choice"
                        ),
                    )
                } else {
                    (
                        name_span,
                        format!(
                            "object `{name}` has no process; its body must end in `.`, \
                             an invocation, or a choice"
                        ),
                    )
                };
                return Err(Diagnostic::new(
                    DiagnosticKind::MissingTerminator,
                    span,
                    self.system.clone(),
                    msg,
                ));
            }
        };
        Ok(ObjectDecl { name, name_span, behaviours, main, span: kw.span.to(end) })
    }

    fn parse_behaviour(&mut self) -> PResult<Behaviour> {
        let kw = self.next(); // `behaviour`
        let (name, name_span) = match &self.peek().kind {
            TokenKind::UIdent(s) => {
                let s = s.clone();
                let span = self.peek().span;
                self.next();
                (s, span)
            }
            _ => return Err(self.unexpected("a behaviour name (uppercase-initial identifier)")),
        };
        let mut params = Vec::new();
        if self.eat(&TokenKind::LParen) {
            loop {
                params.push(self.expect_lident("a parameter name")?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
            if !self.eat(&TokenKind::RParen) {
                return Err(self.unexpected("`,` or `)`"));
            }
        }
        let body = self.parse_proc()?;
        let span = kw.span.to(body.span);
        Ok(Behaviour { name, name_span, params, body, span })
    }

    /// One statement of a process: either an action prefix or a terminator
    /// (stop, invocation, or choice).
    fn parse_step(&mut self) -> PResult<StepOutcome> {
        match self.peek().kind.clone() {
            TokenKind::Dot => {
                let t = self.next();
                Ok(StepOutcome::Terminator(Proc { kind: ProcKind::Stop, span: t.span }))
            }
            TokenKind::UIdent(_) => Ok(StepOutcome::Terminator(self.parse_invoke()?)),
            TokenKind::LIdent(p) => {
                if !matches!(self.peek2().kind, TokenKind::Bang | TokenKind::Query) {
                    return Err(Diagnostic::new(
                        DiagnosticKind::MissingTerminator,
                        self.peek().span,
                        self.system.clone(),
                        format!(
                            "expected an action, `.`, an invocation, or a choice; \
                             `{p}` is not followed by `!` or `?`"
                        ),
                    ));
                }
                let participant_span = self.next().span;
                let is_send = matches!(self.next().kind, TokenKind::Bang);
                if self.at(&TokenKind::LBrace) {
                    let choice = self.parse_choice(p, participant_span, is_send)?;
                    return Ok(StepOutcome::Terminator(choice));
                }
                let (label, label_span) = self.expect_lident("a message label")?;
                let mut args = Vec::new();
                let mut binders = Vec::new();
                if self.at(&TokenKind::LParen) {
                    if is_send {
                        args = self.parse_arg_exprs()?;
                    } else {
                        binders = self.parse_binders()?;
                    }
                }
                Ok(StepOutcome::Prefix(Prefix {
                    participant: p,
                    participant_span,
                    is_send,
                    label,
                    label_span,
                    args,
                    binders,
                }))
            }
            _ => Err(Diagnostic::new(
                DiagnosticKind::MissingTerminator,
                self.peek().span,
                self.system.clone(),
                format!(
                    "expected an action, `.`, an invocation, or a choice, found {}",
                    self.peek().kind.describe()
                ),
            )),
        }
    }

    /// A complete process: action prefixes followed by a terminator.
    fn parse_proc(&mut self) -> PResult<Proc> {
        let mut prefixes = Vec::new();
        loop {
            match self.parse_step()? {
                StepOutcome::Prefix(p) => prefixes.push(p),
                StepOutcome::Terminator(t) => return Ok(fold_prefixes(prefixes, t)),
            }
        }
    }

    fn parse_invoke(&mut self) -> PResult<Proc> {
        let tok = self.next();
        let name = match tok.kind {
            TokenKind::UIdent(s) => s,
            _ => unreachable!("parse_invoke called on non-UIdent"),
        };
        let mut span = tok.span;
        let mut args = Vec::new();
        if self.at(&TokenKind::LParen) {
            args = self.parse_arg_exprs()?;
            span = span.to(self.tokens[self.pos - 1].span);
        }
        Ok(Proc { kind: ProcKind::Invoke { name, args }, span })
    }

    fn parse_choice(&mut self, participant: String, pspan: Span, is_send: bool) -> PResult<Proc> {
        self.next(); // `{`
        let mut send_branches: Vec<SendBranch> = Vec::new();
        let mut recv_branches: Vec<RecvBranch> = Vec::new();
        loop {
            match self.peek().kind.clone() {
                TokenKind::RBrace => {
                    if send_branches.is_empty() && recv_branches.is_empty() {
                        return Err(self.unexpected("at least one branch"));
                    }
                    break;
                }
                TokenKind::LIdent(label)
                    if !matches!(self.peek2().kind, TokenKind::Bang | TokenKind::Query) =>
                {
                    let label_span = self.next().span;
                    let mut args = Vec::new();
                    let mut binders = Vec::new();
                    if self.at(&TokenKind::LParen) {
                        if is_send {
                            args = self.parse_arg_exprs()?;
                        } else {
                            binders = self.parse_binders()?;
                        }
                    }
                    let body = self.parse_proc()?;
                    if is_send {
                        send_branches.push(SendBranch { label, label_span, args, body });
                    } else {
                        recv_branches.push(RecvBranch { label, label_span, binders, body });
                    }
                }
                _ => {
                    return Err(self.unexpected(
                        "a branch label (a lowercase-initial identifier not followed by \
                         `!` or `?`) or `}`",
                    ))
                }
            }
        }
        let close = self.next(); // `}`
        let span = pspan.to(close.span);
        let kind = if is_send {
            ProcKind::Send { target: participant, branches: send_branches }
        } else {
            ProcKind::Recv { source: participant, branches: recv_branches }
        };
        Ok(Proc { kind, span })
    }

    fn parse_arg_exprs(&mut self) -> PResult<Vec<Expr>> {
        self.next(); // `(`
        let mut args = Vec::new();
        loop {
            let tok = self.peek().clone();
            let kind = match tok.kind {
                TokenKind::LIdent(s) => ExprKind::Var(s),
                TokenKind::Int(n) => ExprKind::Int(n),
                TokenKind::Str(s) => ExprKind::Str(s),
                _ => {
                    return Err(
                        self.unexpected("an argument (variable, integer, or string literal)")
                    )
                }
            };
            self.next();
            args.push(Expr { kind, span: tok.span });
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        if !self.eat(&TokenKind::RParen) {
            return Err(self.unexpected("`,` or `)`"));
        }
        Ok(args)
    }

    fn parse_binders(&mut self) -> PResult<Vec<(String, Span)>> {
        self.next(); // `(`
        let mut binders = Vec::new();
        loop {
            binders.push(self.expect_lident("a binder name")?);
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        if !self.eat(&TokenKind::RParen) {
            return Err(self.unexpected("`,` or `)`"));
        }
        Ok(binders)
    }
}

/// Wrap pending action prefixes around a terminator, innermost last. Each
/// prefix becomes a one-branch choice whose span starts at the participant
/// identifier and extends over the whole continuation.
fn fold_prefixes(prefixes: Vec<Prefix>, terminator: Proc) -> Proc {
    let mut proc = terminator;
    for p in prefixes.into_iter().rev() {
        let span = p.participant_span.to(proc.span);
        let kind = if p.is_send {
            ProcKind::Send {
                target: p.participant,
                branches: vec![SendBranch {
                    label: p.label,
                    label_span: p.label_span,
                    args: p.args,
                    body: proc,
                }],
            }
        } else {
            ProcKind::Recv {
                source: p.participant,
                branches: vec![RecvBranch {
                    label: p.label,
                    label_span: p.label_span,
                    binders: p.binders,
                    body: proc,
                }],
            }
        };
        proc = Proc { kind, span };
    }
    proc
}

/// Post-parse checks: label uniqueness, behaviour resolution, scoping, object
/// name uniqueness, and the no-self-messaging rule.
fn validate(decls: &[SystemDecl]) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for sys in decls {
        if let Some((parent, pspan)) = &sys.parent {
            if parent == &sys.name {
                diags.push(Diagnostic::new(
                    DiagnosticKind::ImportCycle,
                    *pspan,
                    sys.name.clone(),
                    format!("system `{}` declares itself as its own abstraction", sys.name),
                ));
            }
        }
        for (i, obj) in sys.objects.iter().enumerate() {
            if let Some(first) = sys.objects[..i].iter().find(|o| o.name == obj.name) {
                diags.push(Diagnostic::new(
                    DiagnosticKind::DuplicateObject,
                    obj.name_span,
                    sys.name.clone(),
                    format!(
                        "object `{}` is declared twice in system `{}` (first at {})",
                        obj.name, sys.name, first.name_span.start
                    ),
                ));
            }
            validate_object(sys, obj, &mut diags);
        }
    }
    diags
}

fn validate_object(sys: &SystemDecl, obj: &ObjectDecl, diags: &mut Vec<Diagnostic>) {
    for (i, b) in obj.behaviours.iter().enumerate() {
        if let Some(first) = obj.behaviours[..i].iter().find(|x| x.name == b.name) {
            diags.push(Diagnostic::new(
                DiagnosticKind::DuplicateBehaviour,
                b.name_span,
                sys.name.clone(),
                format!(
                    "behaviour `{}` is declared twice in object `{}` (first at {})",
                    b.name, obj.name, first.name_span.start
                ),
            ));
        }
    }
    let scope: BTreeSet<String> = BTreeSet::new();
    check_proc(sys, obj, &obj.main, &scope, diags);
    for b in &obj.behaviours {
        let scope: BTreeSet<String> = b.params.iter().map(|(p, _)| p.clone()).collect();
        check_proc(sys, obj, &b.body, &scope, diags);
    }
    // Duplicate branch labels and self-messaging, over every nested proc.
    let mut check_shape = |proc: &Proc| {
        match &proc.kind {
            ProcKind::Send { target, branches } => {
                if target == &obj.name {
                    diags.push(Diagnostic::new(
                        DiagnosticKind::SelfMessage,
                        proc.span,
                        sys.name.clone(),
                        format!("object `{}` sends a message to itself", obj.name),
                    ));
                }
                let mut seen: Vec<&str> = Vec::new();
                for br in branches {
                    if seen.contains(&br.label.as_str()) {
                        diags.push(Diagnostic::new(
                            DiagnosticKind::DuplicateLabel,
                            br.label_span,
                            sys.name.clone(),
                            format!("duplicate branch label `{}` in send choice", br.label),
                        ));
                    }
                    seen.push(&br.label);
                }
            }
            ProcKind::Recv { source, branches } => {
                if source == &obj.name {
                    diags.push(Diagnostic::new(
                        DiagnosticKind::SelfMessage,
                        proc.span,
                        sys.name.clone(),
                        format!("object `{}` receives a message from itself", obj.name),
                    ));
                }
                let mut seen: Vec<&str> = Vec::new();
                for br in branches {
                    if seen.contains(&br.label.as_str()) {
                        diags.push(Diagnostic::new(
                            DiagnosticKind::DuplicateLabel,
                            br.label_span,
                            sys.name.clone(),
                            format!("duplicate branch label `{}` in receive choice", br.label),
                        ));
                    }
                    seen.push(&br.label);
                }
            }
            _ => {}
        }
    };
    super::object_procs(obj, &mut check_shape);
}

/// Scope checking plus behaviour-invocation resolution, recursing into branch
/// bodies with their binders added.
fn check_proc(
    sys: &SystemDecl,
    obj: &ObjectDecl,
    proc: &Proc,
    scope: &BTreeSet<String>,
    diags: &mut Vec<Diagnostic>,
) {
    match &proc.kind {
        ProcKind::Send { branches, .. } => {
            for br in branches {
                for arg in &br.args {
                    check_expr(sys, arg, scope, diags);
                }
                check_proc(sys, obj, &br.body, scope, diags);
            }
        }
        ProcKind::Recv { branches, .. } => {
            for br in branches {
                let mut inner = scope.clone();
                inner.extend(br.binders.iter().map(|(b, _)| b.clone()));
                check_proc(sys, obj, &br.body, &inner, diags);
            }
        }
        ProcKind::Invoke { name, args } => {
            for arg in args {
                check_expr(sys, arg, scope, diags);
            }
            match obj.behaviour(name) {
                None => diags.push(Diagnostic::new(
                    DiagnosticKind::UndeclaredBehaviour,
                    proc.span,
                    sys.name.clone(),
                    format!("object `{}` has no behaviour named `{}`", obj.name, name),
                )),
                Some(b) if b.params.len() != args.len() => diags.push(Diagnostic::new(
                    DiagnosticKind::UndeclaredBehaviour,
                    proc.span,
                    sys.name.clone(),
                    format!(
                        "behaviour `{}` of object `{}` takes {} argument(s), {} given",
                        name,
                        obj.name,
                        b.params.len(),
                        args.len()
                    ),
                )),
                Some(_) => {}
            }
        }
        ProcKind::Stop => {}
    }
}

fn check_expr(sys: &SystemDecl, expr: &Expr, scope: &BTreeSet<String>, diags: &mut Vec<Diagnostic>) {
    if let ExprKind::Var(v) = &expr.kind {
        if !scope.contains(v) {
            diags.push(Diagnostic::new(
                DiagnosticKind::UnboundVariable,
                expr.span,
                sys.name.clone(),
                format!("variable `{v}` is not bound by a behaviour parameter or receive binder"),
            ));
        }
    }
}

/// Span fidelity helper used in tests: the source slice at a proc's span must
/// begin with the participant identifier, the behaviour name, or `.`.
#[cfg(test)]
pub(crate) fn span_leader(proc: &Proc) -> &str {
    match &proc.kind {
        ProcKind::Send { target, .. } => target,
        ProcKind::Recv { source, .. } => source,
        ProcKind::Invoke { name, .. } => name,
        ProcKind::Stop => ".",
    }
}
