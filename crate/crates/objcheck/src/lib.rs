//! Compatibility and compliance checking for systems of communicating
//! objects.
//!
//! The library parses a small concurrent-object language in which an object
//! is a communicating state machine: it sends and receives labelled messages
//! over per-sender FIFO queues, with non-deterministic send and receive
//! choices and recursive behaviours. Systems of objects are verified two
//! ways:
//!
//! - **Compatibility** ([`compat`]): exhaustive exploration of the
//!   asynchronous configuration space, flagging sends whose message can never
//!   be delivered, receive branches that can never fire, deadlocks, and queue
//!   overflows. Participants referenced but not defined are external: their
//!   sends vanish into the ether and receives from them never block.
//! - **Compliance** ([`refine`]): a system declared as `system x: y` must
//!   refine the observable behaviour of `y` under a weak alternating
//!   simulation, contravariant on offered receives and covariant on demanded
//!   sends.
//!
//! [`composition`] houses the composite-automaton operator the analyses rest
//! on, [`cli`] the command-line front end, and [`render`] the human and JSON
//! diagnostic formats.

pub mod automata;
pub mod cli;
pub mod compat;
pub mod composition;
pub mod diag;
pub mod dot;
pub mod refine;
pub mod render;
pub mod source;
pub mod syntax;
pub mod value;

pub use compat::{check_compatibility, explore, simulate, ExploreOptions};
pub use diag::{Diagnostic, DiagnosticKind, Severity};
pub use refine::{check_compliance, observable_lts, weak_alt_sim};
pub use source::{FileId, SourceMap, Span};
pub use syntax::{parse, pretty_file, resolve, ResolvedSystem, SystemDecl};
pub use value::Value;
