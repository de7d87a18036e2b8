//! Undirected working skeleton, frozen per-level adjacency snapshots, the
//! separating-set store, DAGs for oracles and synthesis, and the mixed-edge
//! CPDAG produced by orientation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum GraphError {
    #[error("node {node} out of range for graph with {p} nodes")]
    NodeOutOfRange { node: usize, p: usize },
    #[error("self-loop on node {node}")]
    SelfLoop { node: usize },
    #[error("duplicate edge {x}-{y}")]
    DuplicateEdge { x: usize, y: usize },
    #[error("directed graph contains a cycle")]
    Cycle,
}

/// Mutable undirected skeleton over nodes `0..p`, backed by a symmetric
/// boolean adjacency matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    p: usize,
    adj: Vec<bool>,
    edge_count: usize,
}

impl Graph {
    /// Graph with no edges.
    pub fn empty(p: usize) -> Self {
        Graph {
            p,
            adj: vec![false; p * p],
            edge_count: 0,
        }
    }

    /// Graph with all p(p-1)/2 edges present.
    pub fn complete(p: usize) -> Self {
        let mut g = Graph {
            p,
            adj: vec![true; p * p],
            edge_count: p * (p.max(1) - 1) / 2,
        };
        for v in 0..p {
            g.adj[v * p + v] = false;
        }
        g
    }

    pub fn node_count(&self) -> usize {
        self.p
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn has_edge(&self, x: usize, y: usize) -> bool {
        self.adj[x * self.p + y]
    }

    pub fn add_edge(&mut self, x: usize, y: usize) {
        assert!(x != y, "self-loops are not allowed");
        if !self.has_edge(x, y) {
            self.adj[x * self.p + y] = true;
            self.adj[y * self.p + x] = true;
            self.edge_count += 1;
        }
    }

    /// Removes the edge if present; returns whether a removal happened.
    pub fn remove_edge(&mut self, x: usize, y: usize) -> bool {
        if self.has_edge(x, y) {
            self.adj[x * self.p + y] = false;
            self.adj[y * self.p + x] = false;
            self.edge_count -= 1;
            true
        } else {
            false
        }
    }

    pub fn degree(&self, x: usize) -> usize {
        (0..self.p).filter(|&v| self.has_edge(x, v)).count()
    }

    /// Current neighbours of `x`, ascending.
    pub fn neighbors(&self, x: usize) -> Vec<usize> {
        (0..self.p).filter(|&v| self.has_edge(x, v)).collect()
    }

    /// Current neighbours of `x` with `excluded` filtered out, ascending.
    pub fn neighbors_excluding(&self, x: usize, excluded: usize) -> Vec<usize> {
        (0..self.p)
            .filter(|&v| v != excluded && self.has_edge(x, v))
            .collect()
    }

    /// Freezes every node's neighbour set as of now.
    pub fn snapshot(&self) -> AdjacencySnapshot {
        AdjacencySnapshot {
            adj: (0..self.p).map(|x| self.neighbors(x)).collect(),
        }
    }

    /// All adjacent unordered pairs `(x, y)` with `x < y`, sorted
    /// lexicographically. This is the canonical edge enumeration order used
    /// throughout skeleton learning.
    pub fn adjacent_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::with_capacity(self.edge_count);
        for x in 0..self.p {
            for y in x + 1..self.p {
                if self.has_edge(x, y) {
                    pairs.push((x, y));
                }
            }
        }
        pairs
    }

    /// Edge list as TSV, one `nameX<TAB>nameY` line per edge with
    /// `nameX < nameY` lexicographically; lines sorted the same way.
    pub fn edges_tsv(&self, names: &[String]) -> String {
        assert_eq!(names.len(), self.p);
        let mut lines: Vec<(String, String)> = self
            .adjacent_pairs()
            .into_iter()
            .map(|(x, y)| order_by_name(&names[x], &names[y]))
            .collect();
        lines.sort();
        let mut out = String::new();
        for (a, b) in lines {
            let _ = writeln!(out, "{a}\t{b}");
        }
        out
    }
}

fn order_by_name(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// Immutable copy of every node's neighbour set, taken at the start of a
/// level. Edge removals during the level never alter it.
#[derive(Debug, Clone)]
pub struct AdjacencySnapshot {
    adj: Vec<Vec<usize>>,
}

impl AdjacencySnapshot {
    /// Frozen neighbours of `x`, ascending.
    pub fn adjacent(&self, x: usize) -> &[usize] {
        &self.adj[x]
    }

    /// Frozen neighbours of `x` with `excluded` filtered out.
    pub fn adjacent_excluding(&self, x: usize, excluded: usize) -> Vec<usize> {
        self.adj[x]
            .iter()
            .copied()
            .filter(|&v| v != excluded)
            .collect()
    }
}

/// Separating set recorded for each edge removed by a CI test.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SepsetStore {
    map: BTreeMap<(usize, usize), Vec<usize>>,
}

impl SepsetStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `z` as the set separating `x` and `y`.
    pub fn insert(&mut self, x: usize, y: usize, z: Vec<usize>) {
        debug_assert!(!z.contains(&x) && !z.contains(&y));
        self.map.insert(key(x, y), z);
    }

    pub fn get(&self, x: usize, y: usize) -> Option<&[usize]> {
        self.map.get(&key(x, y)).map(Vec::as_slice)
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.map.contains_key(&key(x, y))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Pairs and sets in ascending pair order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &[usize])> {
        self.map.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    /// Dump as TSV: `nameX<TAB>nameY<TAB>comma-joined Z names`, empty third
    /// field for marginal independence; lines sorted by name pair.
    pub fn to_tsv(&self, names: &[String]) -> String {
        let mut lines: Vec<(String, String, String)> = self
            .map
            .iter()
            .map(|(&(x, y), z)| {
                let (a, b) = order_by_name(&names[x], &names[y]);
                let zs = z
                    .iter()
                    .map(|&v| names[v].as_str())
                    .collect::<Vec<_>>()
                    .join(",");
                (a, b, zs)
            })
            .collect();
        lines.sort();
        let mut out = String::new();
        for (a, b, zs) in lines {
            let _ = writeln!(out, "{a}\t{b}\t{zs}");
        }
        out
    }
}

fn key(x: usize, y: usize) -> (usize, usize) {
    if x < y {
        (x, y)
    } else {
        (y, x)
    }
}

/// Directed acyclic graph; edge lists validated and sorted at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    p: usize,
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl Dag {
    pub fn new(p: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut parents = vec![Vec::new(); p];
        let mut children = vec![Vec::new(); p];
        let mut sorted: Vec<(usize, usize)> = edges.to_vec();
        sorted.sort_unstable();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(GraphError::DuplicateEdge {
                    x: w[0].0,
                    y: w[0].1,
                });
            }
        }
        for &(src, dst) in &sorted {
            if src >= p || dst >= p {
                return Err(GraphError::NodeOutOfRange {
                    node: src.max(dst),
                    p,
                });
            }
            if src == dst {
                return Err(GraphError::SelfLoop { node: src });
            }
            children[src].push(dst);
            parents[dst].push(src);
        }
        let dag = Dag {
            p,
            edges: sorted,
            parents,
            children,
        };
        if dag.topological_order().is_none() {
            return Err(GraphError::Cycle);
        }
        Ok(dag)
    }

    pub fn node_count(&self) -> usize {
        self.p
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn parents_of(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children_of(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Kahn's algorithm, smallest-index-first for determinism; `None` on a
    /// cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indegree: Vec<usize> = (0..self.p).map(|v| self.parents[v].len()).collect();
        let mut ready: Vec<usize> = (0..self.p).filter(|&v| indegree[v] == 0).collect();
        ready.sort_unstable_by(|a, b| b.cmp(a));
        let mut order = Vec::with_capacity(self.p);
        while let Some(v) = ready.pop() {
            order.push(v);
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    // keep the ready stack sorted descending so pops ascend
                    let pos = ready.binary_search_by(|x| c.cmp(x)).unwrap_or_else(|e| e);
                    ready.insert(pos, c);
                }
            }
        }
        (order.len() == self.p).then_some(order)
    }

    /// Undirected skeleton of the DAG.
    pub fn skeleton(&self) -> Graph {
        let mut g = Graph::empty(self.p);
        for &(src, dst) in &self.edges {
            g.add_edge(src, dst);
        }
        g
    }

    /// All v-structures `a -> c <- b` with `a < b` and `a`, `b` non-adjacent,
    /// sorted.
    pub fn v_structures(&self) -> Vec<(usize, usize, usize)> {
        let skel = self.skeleton();
        let mut out = Vec::new();
        for c in 0..self.p {
            let pa = &self.parents[c];
            for i in 0..pa.len() {
                for j in i + 1..pa.len() {
                    let (a, b) = key(pa[i], pa[j]);
                    if !skel.has_edge(a, b) {
                        out.push((a, c, b));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mark {
    None,
    Undirected,
    /// Row node points at column node.
    Out,
    /// Column node points at row node.
    In,
}

/// Mixed graph with directed and undirected edges; the output of CPDAG
/// orientation and the input to IDA.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CpdagGraph {
    p: usize,
    marks: Vec<Mark>,
}

impl CpdagGraph {
    pub fn new(p: usize) -> Self {
        CpdagGraph {
            p,
            marks: vec![Mark::None; p * p],
        }
    }

    /// Every skeleton edge carried over as undirected.
    pub fn from_skeleton(skeleton: &Graph) -> Self {
        let p = skeleton.node_count();
        let mut g = CpdagGraph::new(p);
        for (x, y) in skeleton.adjacent_pairs() {
            g.add_undirected(x, y);
        }
        g
    }

    pub fn node_count(&self) -> usize {
        self.p
    }

    fn mark(&self, x: usize, y: usize) -> Mark {
        self.marks[x * self.p + y]
    }

    fn set_mark(&mut self, x: usize, y: usize, m: Mark) {
        self.marks[x * self.p + y] = m;
    }

    pub fn is_adjacent(&self, x: usize, y: usize) -> bool {
        self.mark(x, y) != Mark::None
    }

    pub fn is_undirected(&self, x: usize, y: usize) -> bool {
        self.mark(x, y) == Mark::Undirected
    }

    pub fn has_directed(&self, from: usize, to: usize) -> bool {
        self.mark(from, to) == Mark::Out
    }

    pub fn add_undirected(&mut self, x: usize, y: usize) {
        assert!(x != y && !self.is_adjacent(x, y));
        self.set_mark(x, y, Mark::Undirected);
        self.set_mark(y, x, Mark::Undirected);
    }

    pub fn add_directed(&mut self, from: usize, to: usize) {
        assert!(from != to && !self.is_adjacent(from, to));
        self.set_mark(from, to, Mark::Out);
        self.set_mark(to, from, Mark::In);
    }

    /// Turns the existing undirected edge `from - to` into `from -> to`.
    pub fn orient(&mut self, from: usize, to: usize) {
        assert!(
            self.is_undirected(from, to),
            "orient requires an undirected edge"
        );
        self.set_mark(from, to, Mark::Out);
        self.set_mark(to, from, Mark::In);
    }

    /// Nodes with a directed edge into `x`, ascending.
    pub fn parents_of(&self, x: usize) -> Vec<usize> {
        (0..self.p)
            .filter(|&v| self.mark(x, v) == Mark::In)
            .collect()
    }

    /// Nodes `x` points at, ascending.
    pub fn children_of(&self, x: usize) -> Vec<usize> {
        (0..self.p)
            .filter(|&v| self.mark(x, v) == Mark::Out)
            .collect()
    }

    /// Undirected neighbours of `x`, ascending.
    pub fn undirected_neighbors_of(&self, x: usize) -> Vec<usize> {
        (0..self.p)
            .filter(|&v| self.mark(x, v) == Mark::Undirected)
            .collect()
    }

    /// Directed edges `(from, to)`, sorted.
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for x in 0..self.p {
            for y in 0..self.p {
                if self.mark(x, y) == Mark::Out {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Undirected edges `(x, y)` with `x < y`, sorted.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for x in 0..self.p {
            for y in x + 1..self.p {
                if self.mark(x, y) == Mark::Undirected {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Undirected skeleton obtained by forgetting directions.
    pub fn skeleton(&self) -> Graph {
        let mut g = Graph::empty(self.p);
        for x in 0..self.p {
            for y in x + 1..self.p {
                if self.is_adjacent(x, y) {
                    g.add_edge(x, y);
                }
            }
        }
        g
    }

    pub fn is_fully_directed(&self) -> bool {
        self.undirected_edges().is_empty()
    }

    /// V-structures `a -> c <- b` among the directed edges, `a < b` with
    /// `a`, `b` non-adjacent, sorted.
    pub fn v_structures(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for c in 0..self.p {
            let pa = self.parents_of(c);
            for i in 0..pa.len() {
                for j in i + 1..pa.len() {
                    if !self.is_adjacent(pa[i], pa[j]) {
                        out.push((pa[i], c, pa[j]));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Topological check over the directed part only.
    pub fn directed_part_is_acyclic(&self) -> bool {
        let mut indegree = vec![0usize; self.p];
        for &(_, to) in &self.directed_edges() {
            indegree[to] += 1;
        }
        let mut ready: Vec<usize> = (0..self.p).filter(|&v| indegree[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = ready.pop() {
            seen += 1;
            for c in self.children_of(v) {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(c);
                }
            }
        }
        seen == self.p
    }

    /// DOT rendering: `->` for directed edges, `dir=none` for undirected
    /// ones; isolated nodes listed explicitly.
    pub fn to_dot(&self, names: &[String]) -> String {
        assert_eq!(names.len(), self.p);
        let mut out = String::from("digraph cpdag {\n");
        for name in names {
            let _ = writeln!(out, "  \"{name}\";");
        }
        for (from, to) in self.directed_edges() {
            let _ = writeln!(out, "  \"{}\" -> \"{}\";", names[from], names[to]);
        }
        for (x, y) in self.undirected_edges() {
            let _ = writeln!(out, "  \"{}\" -> \"{}\" [dir=none];", names[x], names[y]);
        }
        out.push_str("}\n");
        out
    }
}
