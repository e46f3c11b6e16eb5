//! Python bindings: check, simulate, pretty-print, and export `.obj` sources
//! from Python. Sources are passed as `(name, text)` pairs so callers can
//! check editor buffers without touching the filesystem; diagnostics come
//! back as the same JSON document the CLI emits with `--format json`.

use objcheck::compat::{check_compatibility, simulate, ExploreOptions};
use objcheck::composition::{compose, CompositeSpec};
use objcheck::diag::{sort_diagnostics, Diagnostic, Severity};
use objcheck::dot::product_dot;
use objcheck::refine::check_compliance;
use objcheck::render::render_json;
use objcheck::source::SourceMap;
use objcheck::syntax::{parse, pretty_file, resolve, SystemDecl};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn options(queue_bound: usize, max_configs: usize, invoke_depth: usize) -> ExploreOptions {
    ExploreOptions { queue_bound, max_configs, invoke_depth }
}

struct Workspace {
    sources: SourceMap,
    decls: Vec<SystemDecl>,
    parse_diags: Vec<Diagnostic>,
}

fn load(files: Vec<(String, String)>) -> Workspace {
    let mut sources = SourceMap::new();
    let mut decls = Vec::new();
    let mut parse_diags = Vec::new();
    for (name, text) in files {
        let id = sources.add(name, text.clone());
        match parse(&text, id) {
            Ok(ds) => decls.extend(ds),
            Err(ds) => parse_diags.extend(ds),
        }
    }
    Workspace { sources, decls, parse_diags }
}

fn resolve_or_err(ws: &Workspace, system: &str) -> PyResult<objcheck::ResolvedSystem> {
    if !ws.decls.iter().any(|d| d.name == system) {
        return Err(PyValueError::new_err(format!("unknown system `{system}`")));
    }
    resolve(&ws.decls, system).map_err(|ds| {
        let msgs: Vec<String> = ds.iter().map(|d| d.message.clone()).collect();
        PyValueError::new_err(msgs.join("; "))
    })
}

/// Check every system (and every declared abstraction pair) in a workspace of
/// `(file name, source text)` pairs. Returns the JSON diagnostics document.
#[pyfunction]
#[pyo3(signature = (files, queue_bound=2, max_configs=100_000, invoke_depth=1000))]
fn check(
    files: Vec<(String, String)>,
    queue_bound: usize,
    max_configs: usize,
    invoke_depth: usize,
) -> PyResult<String> {
    let ws = load(files);
    let mut diags = ws.parse_diags.clone();
    if diags.is_empty() {
        let opts = options(queue_bound, max_configs, invoke_depth);
        for decl in &ws.decls {
            match resolve(&ws.decls, &decl.name) {
                Err(ds) => diags.extend(ds),
                Ok(sys) => {
                    diags.extend(check_compatibility(&sys, &opts));
                    if let Some(parent) = &sys.parent {
                        diags.extend(check_compliance(&sys, parent, &opts));
                    }
                }
            }
        }
    }
    sort_diagnostics(&mut diags);
    diags.dedup();
    Ok(render_json(&diags, &ws.sources))
}

/// True when `check` would report nothing above informational severity.
#[pyfunction]
#[pyo3(signature = (files, queue_bound=2, max_configs=100_000, invoke_depth=1000))]
fn verifies(
    files: Vec<(String, String)>,
    queue_bound: usize,
    max_configs: usize,
    invoke_depth: usize,
) -> PyResult<bool> {
    let ws = load(files);
    if !ws.parse_diags.is_empty() {
        return Ok(false);
    }
    let opts = options(queue_bound, max_configs, invoke_depth);
    for decl in &ws.decls {
        match resolve(&ws.decls, &decl.name) {
            Err(_) => return Ok(false),
            Ok(sys) => {
                let mut diags = check_compatibility(&sys, &opts);
                if let Some(parent) = &sys.parent {
                    diags.extend(check_compliance(&sys, parent, &opts));
                }
                if diags.iter().any(|d| d.severity != Severity::Info) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Parse and pretty-print a source file; raises ValueError on parse errors.
#[pyfunction]
fn pretty(source: &str) -> PyResult<String> {
    let mut sources = SourceMap::new();
    let id = sources.add("<string>", source.to_string());
    match parse(source, id) {
        Ok(decls) => Ok(pretty_file(&decls)),
        Err(diags) => {
            let msgs: Vec<String> = diags
                .iter()
                .map(|d| format!("{}:{}: {}", d.span.start.line, d.span.start.col, d.message))
                .collect();
            Err(PyValueError::new_err(msgs.join("; ")))
        }
    }
}

/// Run one seeded execution of a system; returns the rendered step lines.
#[pyfunction]
#[pyo3(signature = (files, system, seed=0, steps=100, queue_bound=2, invoke_depth=1000))]
fn simulate_trace(
    files: Vec<(String, String)>,
    system: &str,
    seed: u64,
    steps: usize,
    queue_bound: usize,
    invoke_depth: usize,
) -> PyResult<Vec<String>> {
    let ws = load(files);
    if let Some(d) = ws.parse_diags.first() {
        return Err(PyValueError::new_err(d.message.clone()));
    }
    let sys = resolve_or_err(&ws, system)?;
    let opts = options(queue_bound, 100_000, invoke_depth);
    let trace = simulate(&sys, seed, steps, &opts)
        .map_err(|d| PyValueError::new_err(d.message))?;
    Ok(trace.steps.iter().map(|s| s.to_string()).collect())
}

/// DOT rendering of the reachable synchronous product of a system.
#[pyfunction]
#[pyo3(signature = (files, system, max_states=100_000, invoke_depth=1000))]
fn lts_dot(
    files: Vec<(String, String)>,
    system: &str,
    max_states: usize,
    invoke_depth: usize,
) -> PyResult<String> {
    let ws = load(files);
    if let Some(d) = ws.parse_diags.first() {
        return Err(PyValueError::new_err(d.message.clone()));
    }
    let sys = resolve_or_err(&ws, system)?;
    let spec = CompositeSpec::from_system(&sys, invoke_depth);
    let product = compose(&spec, max_states).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(product_dot(&product))
}

#[pymodule]
fn objcheck_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(verifies, m)?)?;
    m.add_function(wrap_pyfunction!(pretty, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_trace, m)?)?;
    m.add_function(wrap_pyfunction!(lts_dot, m)?)?;
    Ok(())
}
