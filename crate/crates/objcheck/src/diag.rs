//! Diagnostics: kinds, severities, and replayable witness steps.
//!
//! Every error found by the checkers is reported as a [`Diagnostic`] carrying
//! a source span. Compatibility and compliance diagnostics additionally carry
//! a witness: a step sequence from the initial configuration that reproduces
//! the offending configuration when replayed.

use crate::source::Span;
use crate::value::Value;
use std::fmt;

/// Diagnostic class, which also selects the underline glyph in human output:
/// `~` for compatibility, `^` for compliance and syntax.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum DiagClass {
    Syntax,
    Compatibility,
    Compliance,
}

impl DiagClass {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagClass::Syntax => "syntax",
            DiagClass::Compatibility => "compatibility",
            DiagClass::Compliance => "compliance",
        }
    }
}

/// Whether a diagnostic points at a send site, a receive site, or neither.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum DiagPolarity {
    Send,
    Receive,
    None,
}

impl DiagPolarity {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagPolarity::Send => "send",
            DiagPolarity::Receive => "receive",
            DiagPolarity::None => "none",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum DiagnosticKind {
    // Lexing and parsing.
    UnexpectedToken,
    UnterminatedString,
    DuplicateLabel,
    MissingTerminator,
    UndeclaredBehaviour,
    UnboundVariable,
    SelfMessage,
    DuplicateObject,
    DuplicateBehaviour,
    // Workspace resolution.
    UnknownSystem,
    DuplicateSystem,
    ImportCycle,
    // Exploration limits.
    QueueOverflow,
    ArityMismatch,
    StateLimitExceeded,
    InvokeDepthExceeded,
    // Compatibility.
    UndeliverableSend,
    StuckReceive,
    Deadlock,
    // Compliance.
    MissingOffer,
    ExcessDemand,
    DivergenceWarning,
}

impl DiagnosticKind {
    pub fn class(self) -> DiagClass {
        use DiagnosticKind::*;
        match self {
            UnexpectedToken | UnterminatedString | DuplicateLabel | MissingTerminator
            | UndeclaredBehaviour | UnboundVariable | SelfMessage | DuplicateObject
            | DuplicateBehaviour | UnknownSystem | DuplicateSystem | ImportCycle => {
                DiagClass::Syntax
            }
            QueueOverflow | ArityMismatch | StateLimitExceeded | InvokeDepthExceeded
            | UndeliverableSend | StuckReceive | Deadlock => DiagClass::Compatibility,
            MissingOffer | ExcessDemand | DivergenceWarning => DiagClass::Compliance,
        }
    }

    /// The polarity is determined by the kind: undeliverable sends and excess
    /// demands point at send sites, stuck receives and missing offers at
    /// receive sites.
    pub fn polarity(self) -> DiagPolarity {
        use DiagnosticKind::*;
        match self {
            UndeliverableSend | ExcessDemand | QueueOverflow => DiagPolarity::Send,
            StuckReceive | MissingOffer | ArityMismatch | Deadlock => DiagPolarity::Receive,
            _ => DiagPolarity::None,
        }
    }

    pub fn as_str(self) -> &'static str {
        use DiagnosticKind::*;
        match self {
            UnexpectedToken => "unexpected-token",
            UnterminatedString => "unterminated-string",
            DuplicateLabel => "duplicate-label",
            MissingTerminator => "missing-terminator",
            UndeclaredBehaviour => "undeclared-behaviour",
            UnboundVariable => "unbound-variable",
            SelfMessage => "self-message",
            DuplicateObject => "duplicate-object",
            DuplicateBehaviour => "duplicate-behaviour",
            UnknownSystem => "unknown-system",
            DuplicateSystem => "duplicate-system",
            ImportCycle => "import-cycle",
            QueueOverflow => "queue-overflow",
            ArityMismatch => "arity-mismatch",
            StateLimitExceeded => "state-limit-exceeded",
            InvokeDepthExceeded => "invoke-depth-exceeded",
            UndeliverableSend => "undeliverable-send",
            StuckReceive => "stuck-receive",
            Deadlock => "deadlock",
            MissingOffer => "missing-offer",
            ExcessDemand => "excess-demand",
            DivergenceWarning => "divergence-warning",
        }
    }
}

/// The four step shapes of the asynchronous semantics. Internal steps move a
/// message through a FIFO queue; external sends vanish into the ether and
/// external receives never block.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum StepKind {
    InternalSend,
    InternalReceive,
    ExternalSend,
    ExternalReceive,
}

impl StepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StepKind::InternalSend => "internal-send",
            StepKind::InternalReceive => "internal-receive",
            StepKind::ExternalSend => "external-send",
            StepKind::ExternalReceive => "external-receive",
        }
    }

    pub fn is_internal(self) -> bool {
        matches!(self, StepKind::InternalSend | StepKind::InternalReceive)
    }

    pub fn is_send(self) -> bool {
        matches!(self, StepKind::InternalSend | StepKind::ExternalSend)
    }
}

/// One replayable step of a witness trace.
///
/// `sender`/`receiver` are in channel order; the acting object is the sender
/// for send steps and the receiver for receive steps.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Step {
    pub kind: StepKind,
    pub sender: String,
    pub receiver: String,
    pub label: String,
    pub payload: Vec<Value>,
    pub span: Span,
}

impl Step {
    pub fn actor(&self) -> &str {
        if self.kind.is_send() {
            &self.sender
        } else {
            &self.receiver
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = if self.kind.is_send() { '!' } else { '?' };
        write!(f, "{}\u{2192}{}{}{}", self.sender, self.receiver, op, self.label)?;
        if !self.payload.is_empty() {
            let args: Vec<String> = self.payload.iter().map(|v| v.to_string()).collect();
            write!(f, "({})", args.join(", "))?;
        }
        if !self.kind.is_internal() {
            write!(f, " (ext)")?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub severity: Severity,
    pub span: Span,
    pub message: String,
    pub system: String,
    pub witness: Vec<Step>,
}

impl Diagnostic {
    pub fn new(
        kind: DiagnosticKind,
        span: Span,
        system: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        let severity = match kind {
            DiagnosticKind::DivergenceWarning => Severity::Warning,
            _ => Severity::Error,
        };
        Diagnostic {
            kind,
            severity,
            span,
            message: message.into(),
            system: system.into(),
            witness: Vec::new(),
        }
    }

    pub fn with_witness(mut self, witness: Vec<Step>) -> Self {
        self.witness = witness;
        self
    }

    pub fn with_severity(mut self, severity: Severity) -> Self {
        self.severity = severity;
        self
    }

    pub fn class(&self) -> DiagClass {
        self.kind.class()
    }

    pub fn polarity(&self) -> DiagPolarity {
        self.kind.polarity()
    }
}

/// Canonical report order: by file, then span, then kind, then message.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        (a.span.file, a.span.start, a.span.end, a.kind, &a.message, &a.system).cmp(&(
            b.span.file,
            b.span.start,
            b.span.end,
            b.kind,
            &b.message,
            &b.system,
        ))
    });
}
