mod common;

use std::collections::{BTreeSet, HashSet};

use common::*;
use lola_core::analysis::{
    analyze, build_graph, check_well_defined, efficiently_monitorable, memory_bounds,
    DependencyGraph, Edge,
};
use lola_core::ast::{mangle_name, MangleParam};
use lola_core::compile_with_bundles;
use lola_core::engine::{oracle_evaluate, Engine, EngineError, EngineOptions};
use lola_core::frontend::{expand, parse_spec, DEFAULT_MAX_DEPTH};
use lola_core::stdlib::{boolean_period_height, boolean_period_width, smooth_period_width};
use lola_core::value::Value;
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// Every simple cycle of `g`, as edge lists.
fn simple_cycles(g: &DependencyGraph) -> Vec<Vec<Edge>> {
    fn walk(
        g: &DependencyGraph,
        start: &str,
        at: &str,
        path: &mut Vec<Edge>,
        seen: &mut Vec<String>,
        out: &mut Vec<Vec<Edge>>,
    ) {
        for e in g.edges().iter().filter(|e| e.from == at) {
            if e.to == start {
                let mut c = path.clone();
                c.push(e.clone());
                out.push(c);
            } else if !seen.contains(&e.to) && e.to.as_str() > start {
                seen.push(e.to.clone());
                path.push(e.clone());
                walk(g, start, &e.to, path, seen, out);
                path.pop();
                seen.pop();
            }
        }
    }
    let mut out = Vec::new();
    for v in g.vertices() {
        walk(g, v, v, &mut Vec::new(), &mut vec![v.clone()], &mut out);
    }
    out
}

fn reaches(g: &DependencyGraph, from: &str, to: &str) -> bool {
    let mut seen = HashSet::from([from.to_owned()]);
    let mut stack = vec![from.to_owned()];
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        for e in g.edges().iter().filter(|e| e.from == v) {
            if seen.insert(e.to.clone()) {
                stack.push(e.to.clone());
            }
        }
    }
    false
}

/// A closed walk of weight zero exists iff some simple cycle has weight
/// zero, or cycles of both signs lie in one strongly connected component.
fn brute_zero_walk(g: &DependencyGraph) -> bool {
    let cycles = simple_cycles(g);
    let weight = |c: &Vec<Edge>| c.iter().map(|e| e.weight).sum::<i64>();
    if cycles.iter().any(|c| weight(c) == 0) {
        return true;
    }
    let (pos, neg): (Vec<_>, Vec<_>) = cycles.iter().partition(|c| weight(c) > 0);
    pos.iter().any(|p| {
        neg.iter()
            .any(|n| reaches(g, &p[0].from, &n[0].from) && reaches(g, &n[0].from, &p[0].from))
    })
}

fn random_graph_spec(seed: u64) -> lola_core::ast::TypedSpec {
    let src = random_source(&mut rng(seed), false);
    compile_with_bundles::<&str>(&src, &[]).unwrap_or_else(|e| panic!("{e}\n{src}"))
}

/// Longest path weight from any output, in a graph without positive cycles.
fn path_latency(g: &DependencyGraph) -> i64 {
    let n = g.vertices().len();
    let mut dist = vec![0i64; n];
    for _ in 0..n {
        for e in g.edges() {
            let (f, t) = (g.index_of(&e.from).unwrap(), g.index_of(&e.to).unwrap());
            dist[f] = dist[f].max(dist[t] + e.weight);
        }
    }
    dist.into_iter().max().unwrap_or(0).max(0)
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn engine_matches_oracle(seed in any::<u64>(), simplify in any::<bool>()) {
        let (spec, src) = random_monitorable(seed);
        let trace = random_trace(&mut rng(seed ^ 0x5eed), 32);
        let expected = oracle_evaluate(&spec, &trace).unwrap();
        let (rows, _) = run_engine(&spec, &trace, simplify).unwrap();
        prop_assert_eq!(rows, expected, "{}", src);
    }

    #[test]
    fn well_definedness_matches_brute_force(seed in any::<u64>()) {
        let spec = random_graph_spec(seed);
        let g = build_graph(&spec);
        let brute = brute_zero_walk(&g);
        match check_well_defined(&g) {
            Ok(()) => prop_assert!(!brute, "missed zero walk in\n{}", spec.spec()),
            Err(w) => {
                prop_assert!(brute, "spurious zero walk {} in\n{}", w, spec.spec());
                let c = &w.cycle;
                prop_assert_eq!(c.iter().map(|e| e.weight).sum::<i64>(), 0);
                for (a, b) in c.iter().zip(c.iter().cycle().skip(1)) {
                    prop_assert_eq!(&a.to, &b.from);
                    prop_assert!(g.edges().contains(a));
                }
            }
        }
        let positive = simple_cycles(&g).iter().any(|c| c.iter().map(|e| e.weight).sum::<i64>() > 0);
        prop_assert_eq!(efficiently_monitorable(&g), !positive);
    }

    #[test]
    fn adding_an_edge_never_shrinks_the_window(seed in any::<u64>(), w in -5i64..=5, a in 0usize..6, b in 0usize..6) {
        let g = build_graph(&random_graph_spec(seed));
        let vs = g.vertices();
        let vertices: Vec<(String, bool)> = vs.iter().map(|v| (v.clone(), g.is_input(v))).collect();
        let outputs: Vec<&String> = vs.iter().filter(|v| !g.is_input(v)).collect();
        let extra = Edge { from: outputs[a % outputs.len()].clone(), to: vs[b % vs.len()].clone(), weight: w };
        let bigger = DependencyGraph::from_parts(vertices, g.edges().iter().cloned().chain([extra]));
        let span = |(m, l): (i64, i64)| l - m;
        prop_assert!(span(memory_bounds(&bigger)) >= span(memory_bounds(&g)));
    }

    #[test]
    fn engine_refusal_matches_analysis(seed in any::<u64>()) {
        let spec = random_graph_spec(seed);
        let g = build_graph(&spec);
        match Engine::new(spec.clone(), EngineOptions::default()) {
            Ok(_) => prop_assert!(check_well_defined(&g).is_ok() && efficiently_monitorable(&g)),
            Err(EngineError::ZeroCycle(_)) => prop_assert!(check_well_defined(&g).is_err()),
            Err(EngineError::NotEfficientlyMonitorable { .. }) => prop_assert!(!efficiently_monitorable(&g)),
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn retention_is_bounded(seed in any::<u64>(), simplify in any::<bool>()) {
        let (spec, src) = random_monitorable(seed);
        let a = analyze(&spec).unwrap();
        let latency = path_latency(&a.graph) as u64;
        let trace = random_trace(&mut rng(seed ^ 1), 32);
        let (_, stats) = run_engine(&spec, &trace, simplify).unwrap();
        prop_assert!(stats.max_lookahead <= latency, "{:?} vs {latency}\n{src}", stats);
        prop_assert!(stats.max_retained <= a.window() + 1 + latency, "{:?}\n{src}", stats);
    }

    #[test]
    fn rows_are_emitted_in_order(seed in any::<u64>(), simplify in any::<bool>()) {
        let (spec, _) = random_monitorable(seed);
        let trace = random_trace(&mut rng(seed ^ 2), 32);
        let mut e = Engine::new(spec, EngineOptions { simplify }).unwrap();
        let mut next = 0;
        for (k, ev) in trace.iter().enumerate() {
            for row in e.push_values(ev.clone()).unwrap() {
                prop_assert_eq!(row.instant, next);
                prop_assert!(row.instant <= k as u64);
                next += 1;
            }
        }
        for row in e.finish().unwrap() {
            prop_assert_eq!(row.instant, next);
            next += 1;
        }
        prop_assert_eq!(next, trace.len() as u64);
    }

    #[test]
    fn runs_are_deterministic(seed in any::<u64>()) {
        let (spec, _) = random_monitorable(seed);
        let trace = random_trace(&mut rng(seed ^ 3), 32);
        prop_assert_eq!(run_engine(&spec, &trace, true).unwrap(), run_engine(&spec, &trace, true).unwrap());
        let (again, _) = random_monitorable(seed);
        prop_assert_eq!(oracle_evaluate(&spec, &trace).unwrap(), oracle_evaluate(&again, &trace).unwrap());
    }

    #[test]
    fn printed_specs_round_trip(seed in any::<u64>(), monitorable in any::<bool>()) {
        let src = random_source(&mut rng(seed), monitorable);
        let spec = expand(&parse_spec(&src).unwrap(), DEFAULT_MAX_DEPTH).unwrap();
        let printed = spec.to_string();
        let again = expand(&parse_spec(&printed).unwrap(), DEFAULT_MAX_DEPTH).unwrap();
        prop_assert_eq!(again, spec, "{}", printed);
    }
}

fn mangle_param() -> impl Strategy<Value = MangleParam> {
    prop_oneof![
        (-20i64..20).prop_map(MangleParam::Int),
        "[a-z_]{1,4}".prop_map(MangleParam::Stream),
        "[0-9a-z<>\\\\ +]{1,5}".prop_map(MangleParam::Value),
    ]
}

proptest! {
    #![proptest_config(config(500))]

    #[test]
    fn mangling_is_injective_on_values(
        a in prop::collection::vec(mangle_param(), 0..4),
        b in prop::collection::vec(mangle_param(), 0..4),
    ) {
        let text = |ps: &Vec<MangleParam>| ps.iter().map(ToString::to_string).collect::<Vec<_>>();
        // Values print as written, so only their text identifies them.
        if text(&a) != text(&b) {
            prop_assert_ne!(mangle_name("t", &a), mangle_name("t", &b));
        }
    }

    #[test]
    fn historically_boundary(len in 0usize..=64, seed in any::<u64>(), density in 0.5f64..1.0) {
        let p = bool_trace(&mut rng(seed), len, density);
        let spec = compile_with_bundles("input bool p\noutput bool h = historically(p)", &["ltl_past"]).unwrap();
        let (rows, _) = run_engine(&spec, &as_events(&p), true).unwrap();
        let h = bools(&column(&rows, "h"));
        let first_false = p.iter().position(|&x| !x).unwrap_or(len) as i64;
        let last_true = h.iter().rposition(|&x| x).map_or(-1, |i| i as i64);
        prop_assert_eq!(first_false, last_true + 1);
    }

    #[test]
    fn until_with_equal_bounds_is_a_shift(a in -3i64..=5, seed in any::<u64>()) {
        let src = format!("input bool p\ninput bool q\noutput bool u = until({a}, {a}, p, q)\noutput bool s = q[{a}, false]");
        let spec = compile_with_bundles(&src, &["mtl"]).unwrap();
        let mut r = rng(seed);
        let len = r.random_range(0..=32);
        let trace: Vec<_> = (0..len).map(|_| vec![Value::Bool(r.random_bool(0.5)), Value::Bool(r.random_bool(0.5))]).collect();
        let rows = oracle_evaluate(&spec, &trace).unwrap();
        prop_assert_eq!(column(&rows, "u"), column(&rows, "s"));
    }

    #[test]
    fn until_and_eventually_match_bounded_semantics(a in -3i64..=5, width in 0i64..=8, seed in any::<u64>()) {
        let b = (a + width).min(5);
        let src = format!(
            "input bool p\ninput bool q\noutput bool u = until({a}, {b}, p, q)\noutput bool e = eventually({a}, {b}, p)"
        );
        let spec = compile_with_bundles(&src, &["mtl"]).unwrap();
        let mut r = rng(seed);
        let len = r.random_range(0..=32);
        let p = bool_trace(&mut r, len, 0.6);
        let q = bool_trace(&mut r, len, 0.3);
        let trace: Vec<_> = p.iter().zip(&q).map(|(&p, &q)| vec![Value::Bool(p), Value::Bool(q)]).collect();
        let (rows, _) = run_engine(&spec, &trace, true).unwrap();
        for (j, row) in rows.iter().enumerate() {
            prop_assert_eq!(row.get("u"), Some(&Value::Bool(until_reference(&p, &q, a, b, j))));
            prop_assert_eq!(row.get("e"), Some(&Value::Bool(eventually_reference(&p, a, b, j))));
        }
    }
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn period_width_and_height_agree(n in prop::sample::select(vec![1u32, 2, 5]), len in 0usize..=48, seed in any::<u64>()) {
        let mut r = rng(seed);
        // Mostly periodic traces, so both outcomes occur.
        let base = bool_trace(&mut r, n as usize, 0.5);
        let p: Vec<bool> = (0..len).map(|i| if r.random_bool(0.1) { !base[i % n as usize] } else { base[i % n as usize] }).collect();
        let width = lola_core::compile_example(&boolean_period_width(n)).unwrap();
        let height = lola_core::compile_example(&boolean_period_height(n)).unwrap();
        let (w, _) = run_engine(&width, &as_events(&p), true).unwrap();
        let (h, _) = run_engine(&height, &as_events(&p), true).unwrap();
        prop_assert_eq!(column(&w, "periodic_width"), column(&h, "periodic_height"));
    }

    #[test]
    fn smooth_width_grades(n in 1u32..=6, len in 0usize..=48, seed in any::<u64>()) {
        let p = bool_trace(&mut rng(seed), len, 0.5);
        let spec = lola_core::compile_example(&smooth_period_width(n)).unwrap();
        let (rows, _) = run_engine(&spec, &as_events(&p), true).unwrap();
        let grades: BTreeSet<i64> = column(&rows, "smooth_period_width").iter().map(|v| v.as_int().unwrap()).collect();
        prop_assert!(grades.is_subset(&BTreeSet::from([0, 25, 50, 100])), "{:?}", grades);
    }
}
