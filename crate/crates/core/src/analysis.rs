//! Dependency graph, well-definedness and memory bounds.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::ast::{free_streams, Specification};
use crate::frontend::quote_name;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub weight: i64,
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -[{}]-> {}", self.from, self.weight, self.to)
    }
}

/// Weighted dependency multigraph: `from` reads `to` at offset `weight`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    vertices: Vec<String>,
    inputs: Vec<bool>,
    edges: Vec<Edge>,
    index: HashMap<String, usize>,
}

impl DependencyGraph {
    /// Builds a graph directly; duplicate edges are dropped.
    ///
    /// Panics if an edge mentions an unknown vertex or leaves an input.
    pub fn from_parts(
        vertices: Vec<(String, bool)>,
        edges: impl IntoIterator<Item = Edge>,
    ) -> Self {
        let index: HashMap<_, _> = vertices
            .iter()
            .enumerate()
            .map(|(i, (v, _))| (v.clone(), i))
            .collect();
        let mut seen = BTreeSet::new();
        let mut kept = Vec::new();
        for e in edges {
            let from = index[&e.from];
            assert!(
                index.contains_key(&e.to),
                "edge to unknown vertex `{}`",
                e.to
            );
            assert!(!vertices[from].1, "edge leaves input `{}`", e.from);
            if seen.insert(e.clone()) {
                kept.push(e);
            }
        }
        let (vertices, inputs) = vertices.into_iter().unzip();
        DependencyGraph {
            vertices,
            inputs,
            edges: kept,
            index,
        }
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_input(&self, v: &str) -> bool {
        self.index.get(v).is_some_and(|&i| self.inputs[i])
    }

    pub fn index_of(&self, v: &str) -> Option<usize> {
        self.index.get(v).copied()
    }

    fn indexed_edges(&self) -> Vec<(usize, usize, i64)> {
        self.edges
            .iter()
            .map(|e| (self.index[&e.from], self.index[&e.to], e.weight))
            .collect()
    }

    /// Graphviz rendering; inputs are boxes, edges are labelled by offset.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph lola {\n");
        for (v, &input) in self.vertices.iter().zip(&self.inputs) {
            let shape = if input { "box" } else { "ellipse" };
            out.push_str(&format!("  {} [shape={shape}];\n", dot_id(v)));
        }
        for e in &self.edges {
            out.push_str(&format!(
                "  {} -> {} [label=\"{}\"];\n",
                dot_id(&e.from),
                dot_id(&e.to),
                e.weight
            ));
        }
        out.push_str("}\n");
        out
    }
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn build_graph(spec: &Specification) -> DependencyGraph {
    let vertices = spec
        .decls()
        .iter()
        .map(|d| (d.name().to_owned(), d.is_input()))
        .collect();
    let edges = spec.outputs().flat_map(|d| {
        let from = d.name().to_owned();
        free_streams(d.body().expect("output has a body"))
            .into_iter()
            .map(move |(to, weight)| Edge {
                from: from.clone(),
                to,
                weight,
            })
    });
    DependencyGraph::from_parts(vertices, edges)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("specification is not well-defined: closed dependency path of weight 0: {}", fmt_edges(.cycle))]
pub struct ZeroCycle {
    /// A closed walk; consecutive edges connect and the weights sum to 0.
    pub cycle: Vec<Edge>,
}

pub fn fmt_edges(walk: &[Edge]) -> String {
    walk.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Strongly connected components, each listed by vertex index.
fn sccs(n: usize, edges: &[(usize, usize, i64)]) -> Vec<Vec<usize>> {
    let mut succ = vec![Vec::new(); n];
    let mut pred = vec![Vec::new(); n];
    for &(u, v, _) in edges {
        succ[u].push(v);
        pred[v].push(u);
    }
    // Kosaraju, iteratively: finishing order on the graph, then sweeps on the
    // transpose.
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for root in 0..n {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        let mut stack = vec![(root, 0usize)];
        while let Some((u, next)) = stack.last_mut() {
            if let Some(&v) = succ[*u].get(*next) {
                *next += 1;
                if !visited[v] {
                    visited[v] = true;
                    stack.push((v, 0));
                }
            } else {
                order.push(*u);
                stack.pop();
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    for &root in order.iter().rev() {
        if comp[root] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![root];
        comp[root] = id;
        let mut i = 0;
        while i < members.len() {
            let u = members[i];
            i += 1;
            for &v in &pred[u] {
                if comp[v] == usize::MAX {
                    comp[v] = id;
                    members.push(v);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

struct Component {
    vertices: Vec<usize>,
    /// Edge indices with both endpoints inside.
    edges: Vec<usize>,
}

fn components(g: &DependencyGraph) -> (Vec<(usize, usize, i64)>, Vec<Component>) {
    let edges = g.indexed_edges();
    let mut comp_of = vec![0; g.vertices.len()];
    let parts = sccs(g.vertices.len(), &edges);
    for (c, members) in parts.iter().enumerate() {
        for &v in members {
            comp_of[v] = c;
        }
    }
    let mut comps: Vec<_> = parts
        .into_iter()
        .map(|vertices| Component {
            vertices,
            edges: Vec::new(),
        })
        .collect();
    for (i, &(u, v, _)) in edges.iter().enumerate() {
        if comp_of[u] == comp_of[v] {
            comps[comp_of[u]].edges.push(i);
        }
    }
    comps.retain(|c| !c.edges.is_empty());
    // Deterministic reporting: components in order of their first vertex.
    comps.sort_by_key(|c| c.vertices[0]);
    (edges, comps)
}

/// A cycle of negative total weight under `sign * weight`, as edge indices in
/// walk order. Bellman-Ford from a virtual source.
fn negative_cycle(
    comp: &Component,
    edges: &[(usize, usize, i64)],
    sign: i64,
) -> Option<Vec<usize>> {
    let local: HashMap<usize, usize> = comp
        .vertices
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i))
        .collect();
    let n = comp.vertices.len();
    let mut dist = vec![0i128; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut last = None;
    for _ in 0..n {
        last = None;
        for &ei in &comp.edges {
            let (u, v, w) = edges[ei];
            let (u, v) = (local[&u], local[&v]);
            let cand = dist[u] + i128::from(sign) * i128::from(w);
            if cand < dist[v] {
                dist[v] = cand;
                pred[v] = Some(ei);
                last = Some(v);
            }
        }
        last?;
    }
    // A relaxation in round n: walking predecessors n times lands on a cycle.
    let mut x = last?;
    for _ in 0..n {
        x = local[&edges[pred[x].expect("relaxed vertex has a predecessor")].0];
    }
    let start = x;
    let mut cycle = Vec::new();
    loop {
        let ei = pred[x].expect("cycle vertex has a predecessor");
        cycle.push(ei);
        x = local[&edges[ei].0];
        if x == start {
            break;
        }
    }
    cycle.reverse();
    Some(cycle)
}

/// Shortest-path potentials under `sign * weight`; requires no negative cycle.
fn potentials(comp: &Component, edges: &[(usize, usize, i64)], sign: i64) -> HashMap<usize, i128> {
    let mut dist: HashMap<usize, i128> = comp.vertices.iter().map(|&v| (v, 0)).collect();
    for _ in 0..comp.vertices.len() {
        let mut changed = false;
        for &ei in &comp.edges {
            let (u, v, w) = edges[ei];
            let cand = dist[&u] + i128::from(sign) * i128::from(w);
            if cand < dist[&v] {
                dist.insert(v, cand);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

/// A cycle among edges whose reduced weight is 0: with no negative cycle,
/// these are exactly the edges that can lie on a zero-weight cycle.
fn tight_cycle(comp: &Component, edges: &[(usize, usize, i64)], sign: i64) -> Option<Vec<usize>> {
    let phi = potentials(comp, edges, sign);
    let mut succ: HashMap<usize, Vec<usize>> = HashMap::new();
    for &ei in &comp.edges {
        let (u, v, w) = edges[ei];
        if phi[&u] + i128::from(sign) * i128::from(w) - phi[&v] == 0 {
            succ.entry(u).or_default().push(ei);
        }
    }
    // Iterative DFS with colours; a grey target closes a cycle.
    let mut colour: HashMap<usize, u8> = HashMap::new();
    for &root in &comp.vertices {
        if colour.contains_key(&root) {
            continue;
        }
        colour.insert(root, 1);
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        let mut path: Vec<usize> = Vec::new();
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            let out = succ.get(&u).map(Vec::as_slice).unwrap_or(&[]);
            if let Some(&ei) = out.get(*next) {
                *next += 1;
                let v = edges[ei].1;
                match colour.get(&v) {
                    None => {
                        colour.insert(v, 1);
                        path.push(ei);
                        stack.push((v, 0));
                    }
                    Some(1) => {
                        let mut cycle = vec![ei];
                        let mut at = u;
                        while at != v {
                            let back = path.pop().expect("grey vertex is on the path");
                            cycle.push(back);
                            at = edges[back].0;
                        }
                        cycle.reverse();
                        return Some(cycle);
                    }
                    Some(_) => {}
                }
            } else {
                colour.insert(u, 2);
                stack.pop();
                path.pop();
            }
        }
    }
    None
}

/// Shortest path between two vertices of a component, as edge indices.
fn path_within(
    comp: &Component,
    edges: &[(usize, usize, i64)],
    from: usize,
    to: usize,
) -> Vec<usize> {
    let mut via: HashMap<usize, usize> = HashMap::new();
    let mut queue = std::collections::VecDeque::from([from]);
    let mut seen = std::collections::HashSet::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        for &ei in &comp.edges {
            let (a, b, _) = edges[ei];
            if a == u && seen.insert(b) {
                via.insert(b, ei);
                queue.push_back(b);
            }
        }
    }
    let mut path = Vec::new();
    let mut at = to;
    while at != from {
        let ei = via[&at];
        path.push(ei);
        at = edges[ei].0;
    }
    path.reverse();
    path
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn weight_of(walk: &[usize], edges: &[(usize, usize, i64)]) -> i128 {
    walk.iter().map(|&ei| i128::from(edges[ei].2)).sum()
}

/// Combines a positive and a negative cycle of one component into a closed
/// walk of weight 0.
fn balance(
    comp: &Component,
    edges: &[(usize, usize, i64)],
    pos: Vec<usize>,
    neg: Vec<usize>,
) -> Vec<usize> {
    let u = edges[pos[0]].0;
    let v = edges[neg[0]].0;
    let there = path_within(comp, edges, u, v);
    let back = path_within(comp, edges, v, u);
    let p = weight_of(&pos, edges);
    let n = -weight_of(&neg, edges);
    let detour = weight_of(&there, edges) + weight_of(&back, edges);
    // Loop the negative cycle until the detour through it is negative.
    let m = if detour < 0 { 0 } else { detour / n + 1 };
    let mut q = there;
    for _ in 0..m {
        q.extend_from_slice(&neg);
    }
    q.extend(back);
    let y = -weight_of(&q, edges);
    debug_assert!(y > 0);
    let g = gcd(p, y);
    let mut walk = Vec::new();
    for _ in 0..y / g {
        walk.extend_from_slice(&pos);
    }
    for _ in 0..p / g {
        walk.extend_from_slice(&q);
    }
    walk
}

fn to_edges(g: &DependencyGraph, walk: Vec<usize>) -> Vec<Edge> {
    walk.into_iter().map(|i| g.edges[i].clone()).collect()
}

/// Exact check for closed walks of total weight 0.
///
/// Within a strongly connected component such a walk exists iff there is a
/// zero-weight simple cycle, or there are both a positive and a negative one.
pub fn check_well_defined(g: &DependencyGraph) -> Result<(), ZeroCycle> {
    let (edges, comps) = components(g);
    for comp in &comps {
        let neg = negative_cycle(comp, &edges, 1);
        let pos = negative_cycle(comp, &edges, -1);
        let walk = match (pos, neg) {
            (Some(p), Some(n)) => Some(balance(comp, &edges, p, n)),
            (None, _) => tight_cycle(comp, &edges, -1),
            (Some(_), None) => tight_cycle(comp, &edges, 1),
        };
        if let Some(walk) = walk {
            return Err(ZeroCycle {
                cycle: to_edges(g, walk),
            });
        }
    }
    Ok(())
}

/// A cycle of positive total weight, if any.
pub fn positive_cycle(g: &DependencyGraph) -> Option<Vec<Edge>> {
    let (edges, comps) = components(g);
    comps
        .iter()
        .find_map(|c| negative_cycle(c, &edges, -1))
        .map(|w| to_edges(g, w))
}

pub fn efficiently_monitorable(g: &DependencyGraph) -> bool {
    positive_cycle(g).is_none()
}

/// `(min_back_ref, max_latency)` over edge weights, clamped around 0.
pub fn memory_bounds(g: &DependencyGraph) -> (i64, i64) {
    let min = g.edges.iter().map(|e| e.weight).min().unwrap_or(0).min(0);
    let max = g.edges.iter().map(|e| e.weight).max().unwrap_or(0).max(0);
    (min, max)
}

/// Evaluation order within one instant: inputs in declaration order, then
/// outputs after everything they read at offset 0, ties by declaration order.
/// `None` if the offset-0 edges form a cycle.
pub fn zero_order(g: &DependencyGraph) -> Option<Vec<String>> {
    let n = g.vertices.len();
    let mut pending = vec![0usize; n];
    let mut readers = vec![Vec::new(); n];
    for (u, v, w) in g.indexed_edges() {
        if w == 0 && u != v {
            pending[u] += 1;
            readers[v].push(u);
        } else if w == 0 {
            return None;
        }
    }
    let mut order: Vec<usize> = (0..n).filter(|&i| g.inputs[i]).collect();
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n)
        .filter(|&i| !g.inputs[i] && pending[i] == 0)
        .map(Reverse)
        .collect();
    for &i in &order {
        for &r in &readers[i] {
            pending[r] -= 1;
            if pending[r] == 0 {
                ready.push(Reverse(r));
            }
        }
    }
    while let Some(Reverse(u)) = ready.pop() {
        order.push(u);
        for &r in &readers[u] {
            pending[r] -= 1;
            if pending[r] == 0 {
                ready.push(Reverse(r));
            }
        }
    }
    (order.len() == n).then(|| order.into_iter().map(|i| g.vertices[i].clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisResult {
    pub graph: DependencyGraph,
    pub min_back_ref: i64,
    pub max_latency: i64,
    pub zero_order: Vec<String>,
    pub efficiently_monitorable: bool,
    pub positive_cycle: Option<Vec<Edge>>,
}

impl AnalysisResult {
    /// Past instants that must stay resolved behind the focus.
    pub fn window(&self) -> u64 {
        (i128::from(self.max_latency) - i128::from(self.min_back_ref)) as u64
    }
}

pub fn analyze(spec: &Specification) -> Result<AnalysisResult, ZeroCycle> {
    let graph = build_graph(spec);
    check_well_defined(&graph)?;
    let (min_back_ref, max_latency) = memory_bounds(&graph);
    let zero_order =
        zero_order(&graph).expect("well-defined graphs have an acyclic offset-0 subgraph");
    let positive_cycle = positive_cycle(&graph);
    Ok(AnalysisResult {
        efficiently_monitorable: positive_cycle.is_none(),
        positive_cycle,
        graph,
        min_back_ref,
        max_latency,
        zero_order,
    })
}

impl fmt::Display for AnalysisResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "streams:")?;
        for v in self.graph.vertices() {
            let kind = if self.graph.is_input(v) {
                "input"
            } else {
                "output"
            };
            writeln!(f, "  {kind} {}", quote_name(v))?;
        }
        writeln!(f, "edges:")?;
        for e in self.graph.edges() {
            writeln!(f, "  {e}")?;
        }
        writeln!(f, "evaluation order: {}", self.zero_order.join(", "))?;
        writeln!(f, "minBackRef: {}", self.min_back_ref)?;
        writeln!(f, "maxLatency: {}", self.max_latency)?;
        write!(
            f,
            "efficiently monitorable: {}",
            self.efficiently_monitorable
        )?;
        if let Some(c) = &self.positive_cycle {
            write!(f, "\npositive cycle: {}", fmt_edges(c))?;
        }
        Ok(())
    }
}
