//! Property tests: parser round-trips over generated programs, FIFO queue
//! discipline along witnesses, stability of verdicts under uncoupled
//! extension, the receive-alphabet necessary condition, and finiteness of
//! abstracted state spaces.

use objcheck::automata::{build_automaton, Polarity};
use objcheck::compat::{check_compatibility, explore, replay, ExploreOptions, Explorer};
use objcheck::diag::{Diagnostic, DiagnosticKind, Severity, StepKind};
use objcheck::refine::{check_compliance, observable_lts, weak_alt_sim, SimOutcome};
use objcheck::render::render_json;
use objcheck::source::{FileId, SourceMap, Span};
use objcheck::syntax::{
    parse, pretty_file, resolve, Behaviour, Expr, ExprKind, ObjectDecl, Proc, ProcKind,
    RecvBranch, ResolvedSystem, SendBranch, SystemDecl,
};
use objcheck::value::Value;
use proptest::prelude::*;
use std::collections::VecDeque;
use std::path::PathBuf;

fn fixture_text(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    std::fs::read_to_string(path).expect("fixture exists")
}

fn load(files: &[&str]) -> (SourceMap, Vec<SystemDecl>) {
    let mut sources = SourceMap::new();
    let mut decls = Vec::new();
    for name in files {
        let text = fixture_text(name);
        let id = sources.add(*name, text.clone());
        decls.extend(parse(&text, id).unwrap());
    }
    (sources, decls)
}

fn resolved(files: &[&str], root: &str) -> ResolvedSystem {
    let (_, decls) = load(files);
    resolve(&decls, root).unwrap()
}

// ---------------------------------------------------------------------------
// Round-trip over generated programs.

fn arb_expr() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0i64..1000).prop_map(|n| Expr { kind: ExprKind::Int(n), span: Span::dummy() }),
        prop::sample::select(vec!["1.0", "1.0RC", "x y", ""]).prop_map(|s| Expr {
            kind: ExprKind::Str(s.to_string()),
            span: Span::dummy()
        }),
    ]
}

fn proc_leaf() -> impl Strategy<Value = Proc> {
    prop_oneof![
        Just(Proc { kind: ProcKind::Stop, span: Span::dummy() }),
        prop::sample::select(vec!["Alpha", "Beta"]).prop_map(|name| Proc {
            kind: ProcKind::Invoke { name: name.to_string(), args: Vec::new() },
            span: Span::dummy()
        }),
    ]
}

fn arb_proc() -> impl Strategy<Value = Proc> {
    let labels = || {
        prop::sample::subsequence(
            vec!["alert", "bump", "crash", "dent", "edge"],
            1..=3,
        )
    };
    proc_leaf().prop_recursive(4, 24, 3, move |inner| {
        let send = (
            prop::sample::select(vec!["px", "py"]),
            labels(),
            prop::collection::vec((prop::collection::vec(arb_expr(), 0..3), inner.clone()), 3),
        )
            .prop_map(|(target, picked, mut payloads)| {
                let branches = picked
                    .into_iter()
                    .map(|label| {
                        let (args, body) = payloads.pop().expect("three payloads generated");
                        SendBranch {
                            label: label.to_string(),
                            label_span: Span::dummy(),
                            args,
                            body,
                        }
                    })
                    .collect();
                Proc {
                    kind: ProcKind::Send { target: target.to_string(), branches },
                    span: Span::dummy(),
                }
            });
        let recv = (
            prop::sample::select(vec!["px", "pz"]),
            labels(),
            prop::collection::vec(
                (prop::sample::subsequence(vec!["u", "v"], 0..=2), inner.clone()),
                3,
            ),
        )
            .prop_map(|(source, picked, mut bodies)| {
                let branches = picked
                    .into_iter()
                    .map(|label| {
                        let (binders, body) = bodies.pop().expect("three bodies generated");
                        RecvBranch {
                            label: label.to_string(),
                            label_span: Span::dummy(),
                            binders: binders
                                .into_iter()
                                .map(|b| (b.to_string(), Span::dummy()))
                                .collect(),
                            body,
                        }
                    })
                    .collect();
                Proc {
                    kind: ProcKind::Recv { source: source.to_string(), branches },
                    span: Span::dummy(),
                }
            });
        prop_oneof![send, recv]
    })
}

fn arb_system() -> impl Strategy<Value = SystemDecl> {
    (arb_proc(), arb_proc(), arb_proc()).prop_map(|(alpha_body, beta_body, main)| {
        let behaviour = |name: &str, body: Proc| Behaviour {
            name: name.to_string(),
            name_span: Span::dummy(),
            params: Vec::new(),
            body,
            span: Span::dummy(),
        };
        SystemDecl {
            name: "gen".to_string(),
            name_span: Span::dummy(),
            parent: None,
            usings: Vec::new(),
            objects: vec![ObjectDecl {
                name: "a".to_string(),
                name_span: Span::dummy(),
                behaviours: vec![
                    behaviour("Alpha", alpha_body),
                    behaviour("Beta", beta_body),
                ],
                main,
                span: Span::dummy(),
            }],
            span: Span::dummy(),
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pretty_printed_programs_reparse_to_the_same_ast(sys in arb_system()) {
        let printed = pretty_file(std::slice::from_ref(&sys));
        let reparsed = parse(&printed, FileId(0))
            .unwrap_or_else(|e| panic!("generated program must parse: {e:#?}\n{printed}"));
        prop_assert_eq!(reparsed.len(), 1);
        prop_assert!(sys.structurally_eq(&reparsed[0]), "round trip changed:\n{}", printed);
        // Printing is idempotent on the reparse.
        prop_assert_eq!(printed, pretty_file(&reparsed));
    }
}

// ---------------------------------------------------------------------------
// Queue discipline: witnesses replay with FIFO order intact.

#[test]
fn witness_replay_respects_fifo_order() {
    let cases: &[(&[&str], &str)] = &[
        (&["dev.obj"], "dev"),
        (&["repo.obj", "repo-test-discard.obj"], "repo-test-discard"),
    ];
    let opts = ExploreOptions::default();
    for (files, root) in cases {
        let sys = resolved(files, root);
        let explorer = Explorer::new(&sys, &opts);
        let diags = check_compatibility(&sys, &opts);
        for d in diags.iter().filter(|d| !d.witness.is_empty()) {
            // Shadow model: a plain FIFO per channel, fed by the steps alone.
            type Shadow = std::collections::BTreeMap<(String, String), VecDeque<(String, Vec<Value>)>>;
            let mut shadow: Shadow = Default::default();
            for (i, step) in d.witness.iter().enumerate() {
                match step.kind {
                    StepKind::InternalSend => {
                        shadow
                            .entry((step.sender.clone(), step.receiver.clone()))
                            .or_default()
                            .push_back((step.label.clone(), step.payload.clone()));
                    }
                    StepKind::InternalReceive => {
                        let q = shadow
                            .get_mut(&(step.sender.clone(), step.receiver.clone()))
                            .expect("channel has traffic");
                        let (label, payload) = q.pop_front().expect("queue non-empty");
                        assert_eq!(label, step.label, "step {i} dequeues the head");
                        assert_eq!(payload, step.payload);
                    }
                    _ => {}
                }
            }
            // The replayed configuration agrees with the shadow queues.
            let cfg = replay(&explorer, &d.witness).expect("witness replays");
            for (ch, queue) in &cfg.queues {
                let shadow_q = shadow
                    .get(&(ch.sender.clone(), ch.receiver.clone()))
                    .cloned()
                    .unwrap_or_default();
                let got: Vec<(String, Vec<Value>)> =
                    queue.iter().map(|m| (m.label.clone(), m.payload.clone())).collect();
                assert_eq!(got, Vec::from(shadow_q), "channel {}->{}", ch.sender, ch.receiver);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Monotone extension: an uncoupled fresh object changes no verdict.

#[test]
fn uncoupled_objects_never_change_a_verdict() {
    let keys = |diags: &[Diagnostic]| -> Vec<(DiagnosticKind, Severity, Span, String)> {
        diags.iter().map(|d| (d.kind, d.severity, d.span, d.message.clone())).collect()
    };
    let cases: &[(&[&str], &str)] = &[
        (&["dev.obj"], "dev"),
        (&["dev-fixed.obj"], "dev-fixed"),
        (&["repo.obj"], "repo"),
        (&["repo.obj", "dev-fixed.obj", "repo-test.obj"], "repo-test"),
        (&["repo.obj", "repo-test-discard.obj"], "repo-test-discard"),
        (&["trio.obj"], "trio"),
    ];
    let opts = ExploreOptions::default();
    for (files, root) in cases {
        // Re-parse the workspace with the loner appended to the root's file,
        // so every original span is unchanged.
        let mut plain_decls = Vec::new();
        let mut extended_decls = Vec::new();
        for (i, name) in files.iter().enumerate() {
            let text = fixture_text(name);
            plain_decls.extend(parse(&text, FileId(i as u32)).unwrap());
            let is_root_file = text.contains(&format!("system {root}"));
            let text = if is_root_file {
                format!("{text}\nobj loner\nelsewhere ! ping.\n")
            } else {
                text
            };
            extended_decls.extend(parse(&text, FileId(i as u32)).unwrap());
        }
        let plain = resolve(&plain_decls, root).unwrap();
        let extended = resolve(&extended_decls, root).unwrap();
        assert!(extended.objects.contains_key("loner"));
        assert_eq!(
            keys(&check_compatibility(&plain, &opts)),
            keys(&check_compatibility(&extended, &opts)),
            "{root}: verdict must not change"
        );
    }
}

// ---------------------------------------------------------------------------
// Alphabet necessary condition.

#[test]
fn missing_receive_alphabet_fails_with_one_missing_offer_per_absent_triple() {
    let abstr_src = "\
system wide
obj x
e ? {
   go.
   more.
}
";
    let refined_src = "\
system narrow: wide
obj x
e ? go.
";
    let mut decls = parse(abstr_src, FileId(0)).unwrap();
    decls.extend(parse(refined_src, FileId(1)).unwrap());
    let abstr = resolve(&decls, "wide").unwrap();
    let refined = resolve(&decls, "narrow").unwrap();
    let opts = ExploreOptions::default();

    let a_lts = observable_lts(&abstr, &opts);
    let r_lts = observable_lts(&refined, &opts);
    let a_receives: Vec<_> =
        a_lts.alphabet().into_iter().filter(|(_, p, _, _)| *p == Polarity::Receive).collect();
    let r_receives: Vec<_> =
        r_lts.alphabet().into_iter().filter(|(_, p, _, _)| *p == Polarity::Receive).collect();
    assert!(!a_receives.iter().all(|t| r_receives.contains(t)));
    assert!(!weak_alt_sim(&r_lts, &a_lts).holds());

    let diags = check_compliance(&refined, &abstr, &opts);
    let offers: Vec<&Diagnostic> =
        diags.iter().filter(|d| d.kind == DiagnosticKind::MissingOffer).collect();
    assert_eq!(offers.len(), 1, "{diags:#?}");
    assert!(offers[0].message.contains("more"));
    assert_eq!(diags.len(), 1, "it fails only for the absent triple: {diags:#?}");
}

// ---------------------------------------------------------------------------
// Finiteness under the Unknown abstraction.

#[test]
fn repository_state_space_is_finite_under_the_unknown_abstraction() {
    let (_, decls) = load(&["repo.obj"]);
    let obj = decls[0].objects[0].clone();
    let auto = build_automaton(&obj, 1000);
    let mut seen = vec![auto.initial().unwrap()];
    let mut frontier = seen.clone();
    while let Some(state) = frontier.pop() {
        assert!(seen.len() < 1000, "state space must stay finite");
        for (_, succ) in auto.local_successors(&state).unwrap() {
            if !seen.contains(&succ) {
                seen.push(succ.clone());
                frontier.push(succ);
            }
        }
    }
    // The revision counter collapses to {Int 0, Unknown}.
    for state in &seen {
        if let Some(n) = state.env.get("n") {
            assert!(matches!(n, Value::Int(0) | Value::Unknown), "{n:?}");
        }
    }
}

// ---------------------------------------------------------------------------
// The hand-enumeration oracle behind the clean repo-test run: the mock
// business admits finitely many schedules, every terminal configuration is
// all-stop with drained queues, and the reach graph is acyclic.

#[test]
fn repo_test_terminals_are_clean_and_the_graph_is_acyclic() {
    let sys = resolved(&["repo.obj", "dev-fixed.obj", "repo-test.obj"], "repo-test");
    let opts = ExploreOptions::default();
    let explorer = Explorer::new(&sys, &opts);
    let g = explore(&sys, &opts);
    assert!(g.complete);

    let mut terminals = 0;
    for (c, edges) in g.edges.iter().enumerate() {
        if !edges.is_empty() {
            continue;
        }
        terminals += 1;
        let cfg = &g.configs[c];
        assert!(cfg.queues.is_empty(), "terminal queues are drained");
        for (name, auto) in explorer.automata() {
            assert!(auto.is_terminated(&cfg.locals[name]), "{name} has terminated");
        }
    }
    assert!(terminals >= 1);

    // The mock business only ever decides accept or iterate-then-accept.
    for edges in &g.edges {
        for (step, _) in edges {
            if step.kind == StepKind::InternalSend && step.sender == "business" {
                assert!(["accept", "iterate"].contains(&step.label.as_str()));
            }
        }
    }

    // Acyclic: the finite mock admits finitely many schedules.
    const WHITE: u8 = 0;
    const GREY: u8 = 1;
    const BLACK: u8 = 2;
    let mut color = vec![WHITE; g.configs.len()];
    let mut stack = vec![(0usize, 0usize)];
    color[0] = GREY;
    while let Some((s, i)) = stack.pop() {
        if let Some((_, t)) = g.edges[s].get(i) {
            stack.push((s, i + 1));
            match color[*t] {
                GREY => panic!("cycle in the repo-test reach graph"),
                WHITE => {
                    color[*t] = GREY;
                    stack.push((*t, 0));
                }
                _ => {}
            }
        } else {
            color[s] = BLACK;
        }
    }
}

// ---------------------------------------------------------------------------
// Brute-force trace oracle: the consolidated loop body is behaviour
// preserving because both systems have identical sets of observable traces
// up to depth 12, enumerated independently of the simulation checker.

type ObsTrace = Vec<(String, Polarity, String, Vec<Value>)>;

fn observable_traces(
    lts: &objcheck::refine::ObservableLTS,
    depth: usize,
) -> std::collections::BTreeSet<ObsTrace> {
    fn silent_closure(lts: &objcheck::refine::ObservableLTS, from: usize) -> Vec<usize> {
        let mut seen = vec![from];
        let mut stack = vec![from];
        while let Some(s) = stack.pop() {
            for e in &lts.edges[s] {
                if e.label.is_none() && !seen.contains(&e.target) {
                    seen.push(e.target);
                    stack.push(e.target);
                }
            }
        }
        seen
    }
    fn go(
        lts: &objcheck::refine::ObservableLTS,
        state: usize,
        depth: usize,
        memo: &mut std::collections::HashMap<(usize, usize), std::collections::BTreeSet<ObsTrace>>,
    ) -> std::collections::BTreeSet<ObsTrace> {
        if let Some(t) = memo.get(&(state, depth)) {
            return t.clone();
        }
        let mut out: std::collections::BTreeSet<ObsTrace> = [Vec::new().into_iter().collect()]
            .into_iter()
            .collect();
        if depth > 0 {
            for s in silent_closure(lts, state) {
                for e in &lts.edges[s] {
                    let Some(l) = &e.label else { continue };
                    let head =
                        (l.peer.clone(), l.polarity, l.label.clone(), l.payload.clone());
                    for tail in go(lts, e.target, depth - 1, memo) {
                        let mut t = vec![head.clone()];
                        t.extend(tail);
                        out.insert(t);
                    }
                }
            }
        }
        memo.insert((state, depth), out.clone());
        out
    }
    go(lts, lts.initial, depth, &mut Default::default())
}

#[test]
fn loop_unrollings_have_identical_observable_traces_to_depth_12() {
    let opts = ExploreOptions::default();
    let abstr = resolved(&["dev-fixed.obj", "dev-refactored-fixed.obj"], "dev-fixed");
    let refined =
        resolved(&["dev-fixed.obj", "dev-refactored-fixed.obj"], "dev-refactored-fixed");
    let a = observable_traces(&observable_lts(&abstr, &opts), 12);
    let r = observable_traces(&observable_lts(&refined, &opts), 12);
    // Sanity: the enumeration reaches full depth and sees the branch point.
    assert_eq!(a.iter().map(Vec::len).max(), Some(12));
    assert!(a.len() >= 10, "the enumeration is non-trivial: {}", a.len());
    assert_eq!(a, r, "consolidating commit/revision must preserve observable traces");

    // The same oracle distinguishes the genuinely divergent refactoring.
    let broken = resolved(&["dev.obj", "dev-refactored.obj"], "dev-refactored");
    let b = observable_traces(&observable_lts(&broken, &opts), 12);
    assert_ne!(a, b);
}

// ---------------------------------------------------------------------------
// Determinism of rendered output at the library level.

#[test]
fn rendered_diagnostics_are_byte_identical_across_repeated_runs() {
    let (sources, decls) = load(&["dev.obj", "dev-refactored.obj"]);
    let opts = ExploreOptions::default();
    let render = || {
        let refined = resolve(&decls, "dev-refactored").unwrap();
        let abstr = resolve(&decls, "dev").unwrap();
        let mut diags = check_compatibility(&abstr, &opts);
        diags.extend(check_compatibility(&refined, &opts));
        diags.extend(check_compliance(&refined, &abstr, &opts));
        objcheck::diag::sort_diagnostics(&mut diags);
        render_json(&diags, &sources)
    };
    let first = render();
    for _ in 0..4 {
        assert_eq!(render(), first);
    }
    match weak_alt_sim(
        &observable_lts(&resolve(&decls, "dev-refactored").unwrap(), &opts),
        &observable_lts(&resolve(&decls, "dev").unwrap(), &opts),
    ) {
        SimOutcome::Fails { violations } => assert_eq!(violations.len(), 2),
        SimOutcome::Holds { .. } => panic!("dev-refactored must not refine dev"),
    }
}
