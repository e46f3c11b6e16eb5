//! Workspace resolution: merge `using` imports, infer external participants,
//! and resolve the declared abstraction chain.

use super::{ObjectDecl, ProcKind, SystemDecl};
use crate::diag::{Diagnostic, DiagnosticKind};
use crate::source::Span;
use std::collections::{BTreeMap, BTreeSet};

/// A system with its imports flattened. `objects` and `externals` are
/// disjoint; every participant mentioned in any process is in one of the two.
#[derive(Clone, Debug)]
pub struct ResolvedSystem {
    pub name: String,
    pub name_span: Span,
    pub decl_span: Span,
    pub objects: BTreeMap<String, ObjectDecl>,
    /// System each object was declared in (diagnostics context).
    pub object_origin: BTreeMap<String, String>,
    pub externals: BTreeSet<String>,
    pub parent: Option<Box<ResolvedSystem>>,
}

impl ResolvedSystem {
    pub fn is_member(&self, participant: &str) -> bool {
        self.objects.contains_key(participant)
    }

    pub fn member_names(&self) -> BTreeSet<String> {
        self.objects.keys().cloned().collect()
    }
}

/// Resolve `root` against a workspace of declarations. Deterministic and
/// independent of the order of `decls`.
pub fn resolve(decls: &[SystemDecl], root: &str) -> Result<ResolvedSystem, Vec<Diagnostic>> {
    let mut index: BTreeMap<&str, &SystemDecl> = BTreeMap::new();
    let mut diags = Vec::new();
    for decl in decls {
        if let Some(first) = index.get(decl.name.as_str()) {
            diags.push(Diagnostic::new(
                DiagnosticKind::DuplicateSystem,
                decl.name_span,
                decl.name.clone(),
                format!(
                    "system `{}` is declared twice in the workspace (first at {})",
                    decl.name, first.name_span.start
                ),
            ));
        } else {
            index.insert(&decl.name, decl);
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    let mut parent_chain = Vec::new();
    resolve_inner(&index, root, None, &mut parent_chain)
}

fn resolve_inner(
    index: &BTreeMap<&str, &SystemDecl>,
    name: &str,
    use_site: Option<Span>,
    parent_chain: &mut Vec<String>,
) -> Result<ResolvedSystem, Vec<Diagnostic>> {
    let decl = match index.get(name) {
        Some(d) => *d,
        None => {
            let span = use_site.unwrap_or_else(Span::dummy);
            return Err(vec![Diagnostic::new(
                DiagnosticKind::UnknownSystem,
                span,
                name.to_string(),
                format!("unknown system `{name}`"),
            )]);
        }
    };

    let mut diags = Vec::new();
    let mut objects: BTreeMap<String, ObjectDecl> = BTreeMap::new();
    let mut origin: BTreeMap<String, String> = BTreeMap::new();
    let mut visiting = Vec::new();
    let mut done = BTreeSet::new();
    collect_objects(index, decl, &mut objects, &mut origin, &mut visiting, &mut done, &mut diags);
    if !diags.is_empty() {
        return Err(diags);
    }

    // Any participant referenced as a send target or receive source but not
    // defined is an external agent.
    let mut externals = BTreeSet::new();
    for obj in objects.values() {
        let mut visit = |proc: &super::Proc| {
            let peer = match &proc.kind {
                ProcKind::Send { target, .. } => target,
                ProcKind::Recv { source, .. } => source,
                _ => return,
            };
            if !objects.contains_key(peer) {
                externals.insert(peer.clone());
            }
        };
        super::object_procs(obj, &mut visit);
    }

    let parent = match &decl.parent {
        None => None,
        Some((pname, pspan)) => {
            if parent_chain.iter().any(|n| n == pname) || pname == name {
                return Err(vec![Diagnostic::new(
                    DiagnosticKind::ImportCycle,
                    *pspan,
                    name.to_string(),
                    format!("cyclic abstraction chain through `{pname}`"),
                )]);
            }
            parent_chain.push(name.to_string());
            let resolved = resolve_inner(index, pname, Some(*pspan), parent_chain)?;
            parent_chain.pop();
            Some(Box::new(resolved))
        }
    };

    Ok(ResolvedSystem {
        name: decl.name.clone(),
        name_span: decl.name_span,
        decl_span: decl.span,
        objects,
        object_origin: origin,
        externals,
        parent,
    })
}

/// Depth-first import walk in declaration order. Re-visiting a system already
/// on the stack is an import cycle; re-visiting a completed one is harmless
/// (diamond imports are allowed, duplicate objects are not).
fn collect_objects(
    index: &BTreeMap<&str, &SystemDecl>,
    decl: &SystemDecl,
    objects: &mut BTreeMap<String, ObjectDecl>,
    origin: &mut BTreeMap<String, String>,
    visiting: &mut Vec<String>,
    done: &mut BTreeSet<String>,
    diags: &mut Vec<Diagnostic>,
) {
    if done.contains(&decl.name) {
        return;
    }
    if visiting.iter().any(|n| n == &decl.name) {
        let span = decl.usings.first().map(|u| u.1).unwrap_or(decl.name_span);
        diags.push(Diagnostic::new(
            DiagnosticKind::ImportCycle,
            span,
            decl.name.clone(),
            format!(
                "import cycle: {} -> {}",
                visiting.join(" -> "),
                decl.name
            ),
        ));
        return;
    }
    visiting.push(decl.name.clone());
    for (uname, uspan) in &decl.usings {
        match index.get(uname.as_str()) {
            None => diags.push(Diagnostic::new(
                DiagnosticKind::UnknownSystem,
                *uspan,
                decl.name.clone(),
                format!("unknown system `{uname}` in `using`"),
            )),
            Some(used) => {
                collect_objects(index, used, objects, origin, visiting, done, diags);
            }
        }
    }
    for obj in &decl.objects {
        if let Some(prev_origin) = origin.get(&obj.name) {
            let prev = &objects[&obj.name];
            diags.push(Diagnostic::new(
                DiagnosticKind::DuplicateObject,
                obj.name_span,
                decl.name.clone(),
                format!(
                    "object `{}` of system `{}` is already defined by system `{}` at {}",
                    obj.name, decl.name, prev_origin, prev.name_span.start
                ),
            ));
        } else {
            objects.insert(obj.name.clone(), obj.clone());
            origin.insert(obj.name.clone(), decl.name.clone());
        }
    }
    visiting.pop();
    done.insert(decl.name.clone());
}
