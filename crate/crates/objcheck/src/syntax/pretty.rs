//! Pretty-printer. Re-parsing printed output yields a structurally identical
//! declaration; one-branch choices are printed back in their unbraced form.

use super::{Behaviour, Expr, ExprKind, ObjectDecl, Proc, ProcKind, SystemDecl};
use std::fmt::Write;

const INDENT: &str = "   ";

pub fn pretty_file(decls: &[SystemDecl]) -> String {
    let mut out = String::new();
    for (i, sys) in decls.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&pretty_system(sys));
    }
    out
}

pub fn pretty_system(sys: &SystemDecl) -> String {
    let mut out = String::new();
    match &sys.parent {
        Some((p, _)) => writeln!(out, "system {}: {}", sys.name, p).unwrap(),
        None => writeln!(out, "system {}", sys.name).unwrap(),
    }
    for (u, _) in &sys.usings {
        writeln!(out, "using {u}").unwrap();
    }
    for obj in &sys.objects {
        out.push('\n');
        pretty_object(&mut out, obj);
    }
    out
}

fn pretty_object(out: &mut String, obj: &ObjectDecl) {
    writeln!(out, "obj {}", obj.name).unwrap();
    for b in &obj.behaviours {
        pretty_behaviour(out, b);
    }
    pretty_proc(out, &obj.main, 0);
}

fn pretty_behaviour(out: &mut String, b: &Behaviour) {
    out.push_str("behaviour ");
    out.push_str(&b.name);
    if !b.params.is_empty() {
        let params: Vec<&str> = b.params.iter().map(|(p, _)| p.as_str()).collect();
        write!(out, "({})", params.join(", ")).unwrap();
    }
    out.push('\n');
    pretty_proc(out, &b.body, 1);
}

fn pretty_proc(out: &mut String, proc: &Proc, level: usize) {
    let pad = INDENT.repeat(level);
    match &proc.kind {
        ProcKind::Stop => writeln!(out, "{pad}.").unwrap(),
        ProcKind::Invoke { name, args } => {
            write!(out, "{pad}{name}").unwrap();
            write_args(out, args);
            out.push('\n');
        }
        ProcKind::Send { target, branches } if branches.len() == 1 => {
            let br = &branches[0];
            write!(out, "{pad}{target} ! {}", br.label).unwrap();
            write_args(out, &br.args);
            out.push('\n');
            pretty_proc(out, &br.body, level);
        }
        ProcKind::Send { target, branches } => {
            writeln!(out, "{pad}{target} ! {{").unwrap();
            for br in branches {
                write!(out, "{pad}{INDENT}{}", br.label).unwrap();
                write_args(out, &br.args);
                out.push('\n');
                pretty_proc(out, &br.body, level + 2);
            }
            writeln!(out, "{pad}}}").unwrap();
        }
        ProcKind::Recv { source, branches } if branches.len() == 1 => {
            let br = &branches[0];
            write!(out, "{pad}{source} ? {}", br.label).unwrap();
            write_binders(out, &br.binders);
            out.push('\n');
            pretty_proc(out, &br.body, level);
        }
        ProcKind::Recv { source, branches } => {
            writeln!(out, "{pad}{source} ? {{").unwrap();
            for br in branches {
                write!(out, "{pad}{INDENT}{}", br.label).unwrap();
                write_binders(out, &br.binders);
                out.push('\n');
                pretty_proc(out, &br.body, level + 2);
            }
            writeln!(out, "{pad}}}").unwrap();
        }
    }
}

fn write_args(out: &mut String, args: &[Expr]) {
    if args.is_empty() {
        return;
    }
    let rendered: Vec<String> = args
        .iter()
        .map(|e| match &e.kind {
            ExprKind::Var(v) => v.clone(),
            ExprKind::Int(n) => n.to_string(),
            ExprKind::Str(s) => format!("{s:?}"),
        })
        .collect();
    write!(out, "({})", rendered.join(", ")).unwrap();
}

fn write_binders(out: &mut String, binders: &[(String, crate::source::Span)]) {
    if binders.is_empty() {
        return;
    }
    let names: Vec<&str> = binders.iter().map(|(b, _)| b.as_str()).collect();
    write!(out, "({})", names.join(", ")).unwrap();
}
