//! Diagnostic rendering: human-readable underlined source excerpts, and a
//! machine-readable JSON document.
//!
//! Human output underlines compatibility findings with `~` and compliance
//! (and syntax) findings with `^`, tags the polarity as `[send]`/`[recv]`,
//! and numbers the witness trace. Informational findings are rendered in the
//! human view but excluded from the JSON document and from the exit-code
//! verdict. Both formats are byte-deterministic.

use crate::diag::{DiagClass, DiagPolarity, Diagnostic, Severity, Step, StepKind};
use crate::source::SourceMap;
use crate::value::Value;
use serde::{Deserialize, Serialize};
use std::fmt::Write;

#[derive(Serialize, Deserialize, PartialEq, Debug)]
pub struct JsonDoc {
    pub version: u32,
    pub diagnostics: Vec<JsonDiagnostic>,
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
pub struct JsonDiagnostic {
    pub kind: String,
    pub class: String,
    pub polarity: String,
    pub system: String,
    pub file: String,
    pub range: JsonRange,
    pub message: String,
    pub witness: Vec<JsonStep>,
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
pub struct JsonRange {
    pub start: JsonPos,
    pub end: JsonPos,
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
pub struct JsonPos {
    pub line: u32,
    pub col: u32,
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
pub struct JsonStep {
    pub kind: String,
    pub from: String,
    pub to: String,
    pub label: String,
    /// Integers as numbers, strings as strings, the unknown value as null.
    pub payload: Vec<serde_json::Value>,
}

fn json_value(v: &Value) -> serde_json::Value {
    match v {
        Value::Int(n) => serde_json::Value::from(*n),
        Value::Str(s) => serde_json::Value::from(s.clone()),
        Value::Unknown => serde_json::Value::Null,
    }
}

fn json_step(step: &Step) -> JsonStep {
    JsonStep {
        kind: step.kind.as_str().to_string(),
        from: step.sender.clone(),
        to: step.receiver.clone(),
        label: step.label.clone(),
        payload: step.payload.iter().map(json_value).collect(),
    }
}

pub fn to_json_doc(diags: &[Diagnostic], sources: &SourceMap) -> JsonDoc {
    let diagnostics = diags
        .iter()
        .filter(|d| d.severity != Severity::Info)
        .map(|d| JsonDiagnostic {
            kind: d.kind.as_str().to_string(),
            class: d.class().as_str().to_string(),
            polarity: d.polarity().as_str().to_string(),
            system: d.system.clone(),
            file: sources.name(d.span.file).to_string(),
            range: JsonRange {
                start: JsonPos { line: d.span.start.line, col: d.span.start.col },
                end: JsonPos { line: d.span.end.line, col: d.span.end.col },
            },
            message: d.message.clone(),
            witness: d.witness.iter().map(json_step).collect(),
        })
        .collect();
    JsonDoc { version: 1, diagnostics }
}

pub fn render_json(diags: &[Diagnostic], sources: &SourceMap) -> String {
    serde_json::to_string(&to_json_doc(diags, sources)).expect("serialization cannot fail")
}

const RESET: &str = "\x1b[0m";

fn severity_color(sev: Severity) -> &'static str {
    match sev {
        Severity::Error => "\x1b[31m",
        Severity::Warning => "\x1b[33m",
        Severity::Info => "\x1b[36m",
    }
}

/// Render diagnostics as underlined source excerpts. An empty list renders
/// the clean-run line for the number of systems verified.
pub fn render_human(
    diags: &[Diagnostic],
    sources: &SourceMap,
    systems_checked: usize,
    color: bool,
) -> String {
    if diags.is_empty() {
        return format!("ok: {systems_checked} system(s) verified\n");
    }
    let mut out = String::new();
    for (i, d) in diags.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        render_one(&mut out, d, sources, color);
    }
    let errors = diags.iter().filter(|d| d.severity == Severity::Error).count();
    let warnings = diags.iter().filter(|d| d.severity == Severity::Warning).count();
    out.push('\n');
    writeln!(out, "{errors} error(s), {warnings} warning(s)").unwrap();
    out
}

fn render_one(out: &mut String, d: &Diagnostic, sources: &SourceMap, color: bool) {
    let file = sources.name(d.span.file);
    let sev = d.severity.as_str();
    let polarity = match d.polarity() {
        DiagPolarity::Send => " [send]",
        DiagPolarity::Receive => " [recv]",
        DiagPolarity::None => "",
    };
    if color {
        writeln!(
            out,
            "{file}:{}:{}: {}{sev}{RESET}: {}{polarity}",
            d.span.start.line,
            d.span.start.col,
            severity_color(d.severity),
            d.message
        )
        .unwrap();
    } else {
        writeln!(
            out,
            "{file}:{}:{}: {sev}: {}{polarity}",
            d.span.start.line, d.span.start.col, d.message
        )
        .unwrap();
    }

    let line_text = sources.file(d.span.file).line_text(d.span.start.line);
    if !line_text.is_empty() {
        writeln!(out, "    {line_text}").unwrap();
        let glyph = match d.class() {
            DiagClass::Compatibility => '~',
            DiagClass::Compliance | DiagClass::Syntax => '^',
        };
        let start_col = d.span.start.col as usize;
        let width = if d.span.end.line == d.span.start.line {
            (d.span.end.col.saturating_sub(d.span.start.col)) as usize
        } else {
            line_text.chars().count().saturating_sub(start_col - 1)
        }
        .max(1);
        let pad = " ".repeat(start_col - 1);
        let marks = glyph.to_string().repeat(width);
        if color {
            writeln!(out, "    {pad}{}{marks}{RESET}", severity_color(d.severity)).unwrap();
        } else {
            writeln!(out, "    {pad}{marks}").unwrap();
        }
    }
    if !d.witness.is_empty() {
        writeln!(out, "  witness:").unwrap();
        for (i, step) in d.witness.iter().enumerate() {
            writeln!(out, "    {}. {step}", i + 1).unwrap();
        }
    }
}

/// Human rendering of a simulation step (same shape as witness lines).
pub fn render_step_line(i: usize, step: &Step) -> String {
    format!("{}. {step}", i + 1)
}

/// Step kind marker used by the trace printer.
pub fn step_kind_tag(kind: StepKind) -> &'static str {
    kind.as_str()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::DiagnosticKind;
    use crate::source::{Pos, Span};

    fn sample() -> (SourceMap, Vec<Diagnostic>) {
        let mut sources = SourceMap::new();
        let id = sources.add("dev.obj", "system dev\nobj a\n   devTeam ! stop.\n");
        // Span of `stop` on line 3, cols 14..18.
        let span = Span::new(
            id,
            Pos { line: 3, col: 14, byte: 31 },
            Pos { line: 3, col: 18, byte: 35 },
        );
        let d = Diagnostic::new(
            DiagnosticKind::UndeliverableSend,
            span,
            "dev",
            "the `stop` message sent to `devTeam` can never be delivered",
        );
        (sources, vec![d])
    }

    #[test]
    fn human_output_underlines_the_token_with_wavy_marks() {
        let (sources, diags) = sample();
        let text = render_human(&diags, &sources, 1, false);
        assert!(text.contains("dev.obj:3:14: error:"));
        assert!(text.contains("[send]"));
        let lines: Vec<&str> = text.lines().collect();
        let src_line = lines.iter().position(|l| l.contains("devTeam ! stop.")).unwrap();
        let underline = lines[src_line + 1];
        assert_eq!(underline, format!("    {}~~~~", " ".repeat(13)));
    }

    #[test]
    fn empty_list_renders_the_ok_line() {
        let sources = SourceMap::new();
        assert_eq!(render_human(&[], &sources, 3, false), "ok: 3 system(s) verified\n");
    }

    #[test]
    fn json_round_trips_byte_identically() {
        let (sources, diags) = sample();
        let text = render_json(&diags, &sources);
        let doc: JsonDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&doc).unwrap(), text);
        assert!(text.starts_with("{\"version\":1,\"diagnostics\":["));
    }

    #[test]
    fn empty_json_document_is_the_fixed_form() {
        let sources = SourceMap::new();
        assert_eq!(render_json(&[], &sources), "{\"version\":1,\"diagnostics\":[]}");
    }

    #[test]
    fn info_diagnostics_stay_out_of_the_json_document() {
        let (sources, mut diags) = sample();
        diags[0].severity = Severity::Info;
        assert_eq!(render_json(&diags, &sources), "{\"version\":1,\"diagnostics\":[]}");
    }
}
