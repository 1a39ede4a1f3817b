//! Road network, congestion-zone speeds and time-shortest routing.
//!
//! Coordinates are planar metres. Inputs loaded from files must already be
//! projected; no geodesic conversion happens here.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::GraphError;

/// Speed every edge carries before [`RoadGraph::classify_speeds`] runs.
pub const DEFAULT_OUTER_SPEED_KMH: f64 = 36.0;

/// Relative tolerance used when deciding whether an edge lies on a shortest path.
const ON_PATH_TOL: f64 = 1e-9;

pub fn kmh_to_mps(kmh: f64) -> f64 {
    kmh / 3.6
}

/// Dense node index, `0..graph.node_count()`. Ordering follows external node ids.
pub type NodeIx = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: u64,
    pub x_m: f64,
    pub y_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: u64,
    pub from: NodeIx,
    pub to: NodeIx,
    pub length_m: f64,
    pub speed_mps: f64,
}

impl Edge {
    pub fn travel_time_s(&self) -> f64 {
        self.length_m / self.speed_mps
    }
}

/// Directed road graph. Immutable once built; strongly connected by construction.
#[derive(Debug, Clone)]
pub struct RoadGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    index_of: HashMap<u64, NodeIx>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub nodes: Vec<NodeIx>,
    pub distance_m: f64,
    pub time_s: f64,
}

#[derive(Debug, Deserialize)]
struct NodeRow {
    node_id: u64,
    x_m: f64,
    y_m: f64,
}

#[derive(Debug, Deserialize)]
struct EdgeRow {
    edge_id: u64,
    from_node: u64,
    to_node: u64,
    length_m: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    time: f64,
    node: NodeIx,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (time, node)
        other.time.total_cmp(&self.time).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl RoadGraph {
    /// Build from raw parts, validating endpoints, lengths and strong connectivity.
    ///
    /// Edge endpoints are given as external node ids. Nodes are re-ordered by id.
    pub fn from_parts(mut nodes: Vec<Node>, edges: Vec<(u64, u64, u64, f64)>) -> Result<Self, GraphError> {
        if nodes.is_empty() {
            return Err(GraphError::Validation("graph has no nodes".into()));
        }
        nodes.sort_by_key(|n| n.id);
        let mut index_of = HashMap::with_capacity(nodes.len());
        for (ix, n) in nodes.iter().enumerate() {
            if !(n.x_m.is_finite() && n.y_m.is_finite()) {
                return Err(GraphError::Schema(format!("node {} has non-finite coordinates", n.id)));
            }
            if index_of.insert(n.id, ix).is_some() {
                return Err(GraphError::Schema(format!("duplicate node id {}", n.id)));
            }
        }
        let speed = kmh_to_mps(DEFAULT_OUTER_SPEED_KMH);
        let mut seen_edge_ids = HashSet::new();
        let mut built = Vec::with_capacity(edges.len());
        for (id, from, to, length_m) in edges {
            if !seen_edge_ids.insert(id) {
                return Err(GraphError::Schema(format!("duplicate edge id {id}")));
            }
            let from_ix = *index_of
                .get(&from)
                .ok_or_else(|| GraphError::Schema(format!("edge {id} references unknown node {from}")))?;
            let to_ix = *index_of
                .get(&to)
                .ok_or_else(|| GraphError::Schema(format!("edge {id} references unknown node {to}")))?;
            if !(length_m.is_finite() && length_m > 0.0) {
                return Err(GraphError::Schema(format!("edge {id} has nonpositive length {length_m}")));
            }
            built.push(Edge { id, from: from_ix, to: to_ix, length_m, speed_mps: speed });
        }
        let graph = Self::assemble(nodes, built, index_of);
        if !graph.is_strongly_connected() {
            return Err(GraphError::Validation("graph is not strongly connected".into()));
        }
        Ok(graph)
    }

    fn assemble(nodes: Vec<Node>, edges: Vec<Edge>, index_of: HashMap<u64, NodeIx>) -> Self {
        let n = nodes.len();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (e_ix, e) in edges.iter().enumerate() {
            out_edges[e.from].push(e_ix);
            in_edges[e.to].push(e_ix);
        }
        // deterministic neighbour order: by far endpoint, then edge index
        for list in out_edges.iter_mut() {
            list.sort_by_key(|&e| (edges[e].to, e));
        }
        for list in in_edges.iter_mut() {
            list.sort_by_key(|&e| (edges[e].from, e));
        }
        Self { nodes, edges, out_edges, in_edges, index_of }
    }

    /// Bidirectional `rows x cols` lattice with `edge_len_m` spacing.
    pub fn generate_grid(rows: usize, cols: usize, edge_len_m: f64) -> Result<Self, GraphError> {
        if rows < 2 || cols < 2 {
            return Err(GraphError::Config(format!("grid needs at least 2 rows and 2 cols, got {rows}x{cols}")));
        }
        if !(edge_len_m.is_finite() && edge_len_m > 0.0) {
            return Err(GraphError::Config(format!("grid edge length must be > 0, got {edge_len_m}")));
        }
        let id = |r: usize, c: usize| (r * cols + c) as u64;
        let mut nodes = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                nodes.push(Node { id: id(r, c), x_m: c as f64 * edge_len_m, y_m: r as f64 * edge_len_m });
            }
        }
        let mut edges = Vec::new();
        let mut next_id = 0u64;
        for r in 0..rows {
            for c in 0..cols {
                let mut push = |to: u64| {
                    edges.push((next_id, id(r, c), to, edge_len_m));
                    next_id += 1;
                };
                if r > 0 {
                    push(id(r - 1, c));
                }
                if c > 0 {
                    push(id(r, c - 1));
                }
                if c + 1 < cols {
                    push(id(r, c + 1));
                }
                if r + 1 < rows {
                    push(id(r + 1, c));
                }
            }
        }
        Self::from_parts(nodes, edges)
    }

    /// Load from the `node_id,x_m,y_m` and `edge_id,from_node,to_node,length_m` CSV pair.
    pub fn load_csv(nodes_file: &Path, edges_file: &Path) -> Result<Self, GraphError> {
        let mut nodes = Vec::new();
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_path(nodes_file)?;
        check_header(&mut rdr, &["node_id", "x_m", "y_m"], nodes_file)?;
        for row in rdr.deserialize::<NodeRow>() {
            let row = row?;
            nodes.push(Node { id: row.node_id, x_m: row.x_m, y_m: row.y_m });
        }
        let mut edges = Vec::new();
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_path(edges_file)?;
        check_header(&mut rdr, &["edge_id", "from_node", "to_node", "length_m"], edges_file)?;
        for row in rdr.deserialize::<EdgeRow>() {
            let row = row?;
            edges.push((row.edge_id, row.from_node, row.to_node, row.length_m));
        }
        Self::from_parts(nodes, edges)
    }

    /// Assign `central_kmh` to edges whose midpoint lies within `radius_m` of
    /// `centre`, `outer_kmh` to all others.
    pub fn classify_speeds(
        mut self,
        centre: (f64, f64),
        radius_m: f64,
        central_kmh: f64,
        outer_kmh: f64,
    ) -> Result<Self, GraphError> {
        if !(radius_m.is_finite() && radius_m > 0.0) {
            return Err(GraphError::Config(format!("central radius must be > 0, got {radius_m}")));
        }
        for (name, v) in [("central speed", central_kmh), ("outer speed", outer_kmh)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(GraphError::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        let (central, outer) = (kmh_to_mps(central_kmh), kmh_to_mps(outer_kmh));
        for e in self.edges.iter_mut() {
            let a = &self.nodes[e.from];
            let b = &self.nodes[e.to];
            let mid = ((a.x_m + b.x_m) / 2.0, (a.y_m + b.y_m) / 2.0);
            let d = (mid.0 - centre.0).hypot(mid.1 - centre.1);
            e.speed_mps = if d <= radius_m { central } else { outer };
        }
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, ix: NodeIx) -> &Node {
        &self.nodes[ix]
    }

    pub fn out_edges(&self, ix: NodeIx) -> impl Iterator<Item = &Edge> + '_ {
        self.out_edges[ix].iter().map(move |&e| &self.edges[e])
    }

    pub fn index_of(&self, node_id: u64) -> Option<NodeIx> {
        self.index_of.get(&node_id).copied()
    }

    /// Centre of the node bounding box.
    pub fn bbox_centre(&self) -> (f64, f64) {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for n in &self.nodes {
            x0 = x0.min(n.x_m);
            y0 = y0.min(n.y_m);
            x1 = x1.max(n.x_m);
            y1 = y1.max(n.y_m);
        }
        ((x0 + x1) / 2.0, (y0 + y1) / 2.0)
    }

    /// Replace one edge's speed. Used by tests and what-if analyses.
    pub fn with_edge_speed(mut self, edge_ix: usize, speed_mps: f64) -> Self {
        self.edges[edge_ix].speed_mps = speed_mps;
        self
    }

    fn check_node(&self, ix: NodeIx) -> Result<(), GraphError> {
        if ix < self.nodes.len() {
            Ok(())
        } else {
            Err(GraphError::UnknownNode(ix))
        }
    }

    fn is_strongly_connected(&self) -> bool {
        let reach = |adj: &Vec<Vec<usize>>, forward: bool| {
            let mut seen = vec![false; self.nodes.len()];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(u) = stack.pop() {
                for &e in &adj[u] {
                    let v = if forward { self.edges[e].to } else { self.edges[e].from };
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(&self.out_edges, true) && reach(&self.in_edges, false)
    }

    /// Travel times from `source` to every node.
    pub fn times_from(&self, source: NodeIx) -> Result<Vec<f64>, GraphError> {
        self.check_node(source)?;
        Ok(self.dijkstra(source, false))
    }

    /// Travel times from every node to `dest`.
    pub fn times_to(&self, dest: NodeIx) -> Result<Vec<f64>, GraphError> {
        self.check_node(dest)?;
        Ok(self.dijkstra(dest, true))
    }

    fn dijkstra(&self, source: NodeIx, reverse: bool) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.nodes.len()];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(HeapEntry { time: 0.0, node: source });
        let adj = if reverse { &self.in_edges } else { &self.out_edges };
        while let Some(HeapEntry { time, node }) = heap.pop() {
            if time > dist[node] {
                continue;
            }
            for &e_ix in &adj[node] {
                let e = &self.edges[e_ix];
                let next = if reverse { e.from } else { e.to };
                let t = time + e.travel_time_s();
                if t < dist[next] {
                    dist[next] = t;
                    heap.push(HeapEntry { time: t, node: next });
                }
            }
        }
        dist
    }

    /// Time-shortest route. Among equally fast routes the lexicographically
    /// smallest node sequence wins.
    pub fn shortest_route(&self, origin: NodeIx, dest: NodeIx) -> Result<Route, GraphError> {
        self.check_node(origin)?;
        let to_dest = self.times_to(dest)?;
        Ok(self.walk_route(origin, dest, &to_dest))
    }

    /// Follows the smallest successor on the shortest-path DAG toward `dest`.
    fn walk_route(&self, origin: NodeIx, dest: NodeIx, to_dest: &[f64]) -> Route {
        let mut nodes = vec![origin];
        let (mut distance_m, mut time_s) = (0.0, 0.0);
        let mut u = origin;
        while u != dest {
            let here = to_dest[u];
            let tol = ON_PATH_TOL * here.max(1.0);
            let step = self.out_edges[u]
                .iter()
                .map(|&e| &self.edges[e])
                .filter(|e| to_dest[e.to] < here && (e.travel_time_s() + to_dest[e.to] - here).abs() <= tol)
                .min_by(|a, b| a.to.cmp(&b.to).then(a.travel_time_s().total_cmp(&b.travel_time_s())))
                .expect("strongly connected graph always has a shortest-path successor");
            distance_m += step.length_m;
            time_s += step.travel_time_s();
            u = step.to;
            nodes.push(u);
            debug_assert!(nodes.len() <= self.nodes.len());
        }
        Route { nodes, distance_m, time_s }
    }
}

fn check_header<R: std::io::Read>(rdr: &mut csv::Reader<R>, expected: &[&str], path: &Path) -> Result<(), GraphError> {
    let headers = rdr.headers()?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(GraphError::Schema(format!(
            "{}: expected header `{}`, found `{}`",
            path.display(),
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

/// Routing front-end. Caches the full travel-time matrix for graphs up to
/// `cache_limit` nodes; larger graphs are searched on demand.
#[derive(Debug, Clone)]
pub struct Router {
    graph: RoadGraph,
    /// `to_dest[d][o]` = time from `o` to `d`.
    to_dest: Option<Vec<Vec<f64>>>,
}

pub const DEFAULT_CACHE_LIMIT: usize = 2_000;

impl Router {
    pub fn new(graph: RoadGraph, cache_limit: usize) -> Self {
        let to_dest = (graph.node_count() <= cache_limit)
            .then(|| (0..graph.node_count()).into_par_iter().map(|d| graph.dijkstra(d, true)).collect());
        Self { graph, to_dest }
    }

    pub fn graph(&self) -> &RoadGraph {
        &self.graph
    }

    pub fn is_cached(&self) -> bool {
        self.to_dest.is_some()
    }

    /// Travel times from every node to `dest`.
    pub fn times_to(&self, dest: NodeIx) -> Result<Cow<'_, [f64]>, GraphError> {
        match &self.to_dest {
            Some(m) => m.get(dest).map(|v| Cow::Borrowed(v.as_slice())).ok_or(GraphError::UnknownNode(dest)),
            None => self.graph.times_to(dest).map(Cow::Owned),
        }
    }

    pub fn time(&self, origin: NodeIx, dest: NodeIx) -> Result<f64, GraphError> {
        self.graph.check_node(origin)?;
        Ok(self.times_to(dest)?[origin])
    }

    pub fn route(&self, origin: NodeIx, dest: NodeIx) -> Result<Route, GraphError> {
        self.graph.check_node(origin)?;
        let to_dest = self.times_to(dest)?;
        Ok(self.graph.walk_route(origin, dest, &to_dest))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn line_graph(length_m: f64) -> RoadGraph {
        let nodes = vec![Node { id: 0, x_m: 0.0, y_m: 0.0 }, Node { id: 1, x_m: length_m, y_m: 0.0 }];
        RoadGraph::from_parts(nodes, vec![(0, 0, 1, length_m), (1, 1, 0, length_m)]).unwrap()
    }

    #[test]
    fn smallest_grid() {
        let g = RoadGraph::generate_grid(2, 2, 500.0).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 8);
    }

    #[test]
    fn ten_by_ten_grid_edge_count_matches_enumeration() {
        let (rows, cols) = (10usize, 10usize);
        let g = RoadGraph::generate_grid(rows, cols, 300.0).unwrap();
        // count ordered pairs of lattice neighbours directly
        let mut pairs = 0;
        for a in 0..rows * cols {
            for b in 0..rows * cols {
                let (ra, ca) = ((a / cols) as i64, (a % cols) as i64);
                let (rb, cb) = ((b / cols) as i64, (b % cols) as i64);
                if (ra - rb).abs() + (ca - cb).abs() == 1 {
                    pairs += 1;
                }
            }
        }
        assert_eq!(pairs, 360);
        assert_eq!(g.node_count(), 100);
        assert_eq!(g.edge_count(), pairs);
        assert!(g.edges().iter().all(|e| e.speed_mps == 10.0));
    }

    #[test]
    fn degenerate_grid_rejected() {
        assert!(matches!(RoadGraph::generate_grid(1, 5, 100.0), Err(GraphError::Config(_))));
        assert!(matches!(RoadGraph::generate_grid(3, 3, 0.0), Err(GraphError::Config(_))));
    }

    #[test]
    fn midpoint_rule_assigns_speeds() {
        // edge from (900,0) to (1100,0): midpoint 1.0 km from origin
        let nodes = vec![
            Node { id: 0, x_m: 900.0, y_m: 0.0 },
            Node { id: 1, x_m: 1100.0, y_m: 0.0 },
            Node { id: 2, x_m: 1900.0, y_m: 0.0 },
            Node { id: 3, x_m: 2100.0, y_m: 0.0 },
        ];
        let edges = vec![
            (0, 0, 1, 200.0),
            (1, 1, 0, 200.0),
            (2, 1, 2, 800.0),
            (3, 2, 1, 800.0),
            (4, 2, 3, 200.0),
            (5, 3, 2, 200.0),
        ];
        let g = RoadGraph::from_parts(nodes, edges).unwrap().classify_speeds((0.0, 0.0), 1500.0, 18.0, 36.0).unwrap();
        assert_eq!(g.edges()[0].speed_mps, 5.0);
        // 1100 -> 1900 midpoint at 1.5 km: boundary counts as central
        assert_eq!(g.edges()[2].speed_mps, 5.0);
        // midpoint 2.0 km
        assert_eq!(g.edges()[4].speed_mps, 10.0);
    }

    #[test]
    fn tiny_radius_leaves_everything_outer() {
        let g = RoadGraph::generate_grid(3, 3, 100.0).unwrap().classify_speeds((1.0, 1.0), 0.001, 18.0, 36.0).unwrap();
        assert!(g.edges().iter().all(|e| e.speed_mps == 10.0));
        assert!(RoadGraph::generate_grid(3, 3, 100.0).unwrap().classify_speeds((0.0, 0.0), 0.0, 18.0, 36.0).is_err());
    }

    #[test]
    fn identity_route() {
        let g = line_graph(600.0);
        let r = g.shortest_route(1, 1).unwrap();
        assert_eq!(r.nodes, vec![1]);
        assert_eq!((r.distance_m, r.time_s), (0.0, 0.0));
    }

    #[test]
    fn single_edge_times() {
        let g = line_graph(600.0);
        assert_eq!(g.shortest_route(0, 1).unwrap().time_s, 60.0);
        let slow = line_graph(600.0).classify_speeds((300.0, 0.0), 1000.0, 18.0, 36.0).unwrap();
        assert_eq!(slow.shortest_route(0, 1).unwrap().time_s, 120.0);
    }

    #[test]
    fn unknown_node_is_lookup_error() {
        let g = line_graph(600.0);
        assert!(matches!(g.shortest_route(0, 7), Err(GraphError::UnknownNode(7))));
        let router = Router::new(g, 10);
        assert!(router.route(9, 0).is_err());
    }

    #[test]
    fn tie_break_prefers_smaller_node_sequence() {
        // square 0-1-3 and 0-2-3, both 2 edges of equal length
        let g = RoadGraph::generate_grid(2, 2, 100.0).unwrap();
        let r = g.shortest_route(0, 3).unwrap();
        assert_eq!(r.nodes, vec![0, 1, 3]);
        let r = g.shortest_route(3, 0).unwrap();
        assert_eq!(r.nodes, vec![3, 1, 0]);
    }

    #[test]
    fn prefers_faster_over_shorter() {
        // direct 0->2 slow-ish long edge vs detour; speeds uniform so check time
        let nodes = vec![
            Node { id: 0, x_m: 0.0, y_m: 0.0 },
            Node { id: 1, x_m: 0.0, y_m: 0.0 },
            Node { id: 2, x_m: 5000.0, y_m: 0.0 },
        ];
        let edges = vec![
            (0, 0, 2, 1000.0),
            (1, 2, 0, 1000.0),
            (2, 0, 1, 300.0),
            (3, 1, 2, 300.0),
            (4, 1, 0, 300.0),
            (5, 2, 1, 300.0),
        ];
        // all edges near the origin are central (slow) except those whose midpoint is far
        let g = RoadGraph::from_parts(nodes, edges).unwrap();
        // make the direct edge slow: 1000 m at 5 m/s = 200 s vs detour 600 m at 10 m/s = 60 s
        let g = g.with_edge_speed(0, 5.0);
        let r = g.shortest_route(0, 2).unwrap();
        assert_eq!(r.nodes, vec![0, 1, 2]);
        assert_eq!(r.time_s, 60.0);
        assert_eq!(r.distance_m, 600.0);
    }

    #[test]
    fn router_cache_matches_on_demand() {
        let g =
            RoadGraph::generate_grid(4, 5, 250.0).unwrap().classify_speeds((500.0, 400.0), 450.0, 18.0, 36.0).unwrap();
        let cached = Router::new(g.clone(), 100);
        let lazy = Router::new(g, 0);
        assert!(cached.is_cached() && !lazy.is_cached());
        for o in 0..20 {
            for d in 0..20 {
                assert_eq!(cached.route(o, d).unwrap(), lazy.route(o, d).unwrap());
                assert_eq!(cached.time(o, d).unwrap(), lazy.time(o, d).unwrap());
            }
        }
    }

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    const SQUARE_NODES: &str = "node_id,x_m,y_m\n1,0,0\n2,100,0\n3,100,100\n4,0,100\n";
    const SQUARE_EDGES: &str = "edge_id,from_node,to_node,length_m\n1,1,2,100\n2,2,3,100\n3,3,4,100\n4,4,1,100\n";

    #[test]
    fn load_square() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "n.csv", SQUARE_NODES);
        let e = write(dir.path(), "e.csv", SQUARE_EDGES);
        let g = RoadGraph::load_csv(&n, &e).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.shortest_route(g.index_of(1).unwrap(), g.index_of(4).unwrap()).unwrap().time_s, 30.0);
    }

    #[test]
    fn load_rejects_dangling_endpoint() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "n.csv", SQUARE_NODES);
        let e = write(dir.path(), "e.csv", &format!("{SQUARE_EDGES}5,4,99,100\n"));
        assert!(matches!(RoadGraph::load_csv(&n, &e), Err(GraphError::Schema(_))));
    }

    #[test]
    fn load_rejects_nonpositive_length() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "n.csv", SQUARE_NODES);
        let e = write(
            dir.path(),
            "e.csv",
            "edge_id,from_node,to_node,length_m\n1,1,2,0\n2,2,3,100\n3,3,4,100\n4,4,1,100\n",
        );
        assert!(matches!(RoadGraph::load_csv(&n, &e), Err(GraphError::Schema(_))));
    }

    #[test]
    fn load_rejects_disjoint_squares() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "n.csv", &format!("{SQUARE_NODES}5,500,0\n6,600,0\n7,600,100\n8,500,100\n"));
        let e = write(dir.path(), "e.csv", &format!("{SQUARE_EDGES}5,5,6,100\n6,6,7,100\n7,7,8,100\n8,8,5,100\n"));
        assert!(matches!(RoadGraph::load_csv(&n, &e), Err(GraphError::Validation(_))));
    }

    #[test]
    fn load_rejects_wrong_header() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "n.csv", "id,x,y\n1,0,0\n");
        let e = write(dir.path(), "e.csv", SQUARE_EDGES);
        assert!(matches!(RoadGraph::load_csv(&n, &e), Err(GraphError::Schema(_))));
    }
}
