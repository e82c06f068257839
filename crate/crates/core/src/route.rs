//! Offline route provider: a small geographic graph, Dijkstra over haversine
//! edge lengths, and turn-by-turn instruction text.
//!
//! The graph arrives as line-oriented CSV, node records first:
//!
//! ```text
//! node,<id>,<name|->,<lat>,<lon>
//! edge,<a>,<b>,<way name|->
//! ```
//!
//! `-` stands for "unnamed". Edges are undirected and weighted by the
//! great-circle distance between their endpoints.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use thiserror::Error;

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Bearing change below which a leg continues straight rather than turning.
pub const TURN_THRESHOLD_DEG: f64 = 30.0;

const UNNAMED_WAY: &str = "the path";

#[derive(Debug, Error)]
pub enum RouteError {
    #[error("line {line}: {reason}")]
    BadRecord { line: usize, reason: String },
    #[error("line {line}: node id {id} already defined")]
    DuplicateNodeId { line: usize, id: u64 },
    #[error("line {line}: {reason}")]
    BadCoordinate { line: usize, reason: String },
    #[error("line {line}: edge references unknown node {node}")]
    DanglingEdge { line: usize, node: u64 },
    #[error("no node named {name:?}")]
    DestinationNotFound { name: String },
    #[error("{count} nodes named {name:?}, destination is ambiguous")]
    AmbiguousDestination { name: String, count: usize },
    #[error("node {id} does not exist")]
    UnknownNode { id: u64 },
    #[error("no route from {from} to {to}")]
    NoRoute { from: u64, to: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: u64,
    pub name: Option<String>,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub a: u64,
    pub b: u64,
    pub way: Option<String>,
    pub length_m: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RouteGraph {
    nodes: BTreeMap<u64, Node>,
    edges: Vec<Edge>,
    // Neighbor lists sorted by (neighbor id, edge index) so traversal order
    // never depends on input order.
    adjacency: BTreeMap<u64, Vec<(u64, usize)>>,
}

impl RouteGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, id: u64) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    fn neighbors(&self, id: u64) -> &[(u64, usize)] {
        self.adjacency.get(&id).map_or(&[], Vec::as_slice)
    }

    /// The edge joining two adjacent nodes (lowest-index edge when parallel
    /// edges exist).
    fn edge_between(&self, a: u64, b: u64) -> Option<&Edge> {
        self.neighbors(a)
            .iter()
            .find(|(n, _)| *n == b)
            .map(|&(_, i)| &self.edges[i])
    }
}

/// Great-circle distance in meters between two (lat, lon) positions given in
/// degrees.
pub fn haversine_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let p1 = lat1.to_radians();
    let p2 = lat2.to_radians();
    let dp = (lat2 - lat1).to_radians();
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().atan2((1.0 - a).max(0.0).sqrt())
}

/// Initial great-circle bearing from the first position toward the second,
/// degrees clockwise from north in [0, 360).
pub fn initial_bearing_deg(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let p1 = lat1.to_radians();
    let p2 = lat2.to_radians();
    let dl = (lon2 - lon1).to_radians();
    let y = dl.sin() * p2.cos();
    let x = p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos();
    let deg = y.atan2(x).to_degrees();
    deg.rem_euclid(360.0)
}

pub fn parse_route_graph(text: &str) -> Result<RouteGraph, RouteError> {
    let mut nodes: BTreeMap<u64, Node> = BTreeMap::new();
    let mut pending_edges: Vec<(usize, u64, u64, Option<String>)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        match fields[0] {
            "node" => {
                if fields.len() != 5 {
                    return Err(RouteError::BadRecord {
                        line,
                        reason: format!("expected node,<id>,<name>,<lat>,<lon>, got {} fields", fields.len()),
                    });
                }
                let id = parse_id(fields[1], line)?;
                let name = optional_name(fields[2]);
                let lat = parse_coord(fields[3], line, "lat")?;
                let lon = parse_coord(fields[4], line, "lon")?;
                if !(-90.0..=90.0).contains(&lat) {
                    return Err(RouteError::BadCoordinate {
                        line,
                        reason: format!("latitude {lat} outside [-90, 90]"),
                    });
                }
                if !(-180.0..=180.0).contains(&lon) {
                    return Err(RouteError::BadCoordinate {
                        line,
                        reason: format!("longitude {lon} outside [-180, 180]"),
                    });
                }
                if nodes.contains_key(&id) {
                    return Err(RouteError::DuplicateNodeId { line, id });
                }
                nodes.insert(id, Node { id, name, lat, lon });
            }
            "edge" => {
                if fields.len() != 4 {
                    return Err(RouteError::BadRecord {
                        line,
                        reason: format!("expected edge,<a>,<b>,<way>, got {} fields", fields.len()),
                    });
                }
                let a = parse_id(fields[1], line)?;
                let b = parse_id(fields[2], line)?;
                if a == b {
                    return Err(RouteError::BadRecord {
                        line,
                        reason: format!("self-loop on node {a}"),
                    });
                }
                pending_edges.push((line, a, b, optional_name(fields[3])));
            }
            other => {
                return Err(RouteError::BadRecord {
                    line,
                    reason: format!("unknown record kind {other:?}"),
                });
            }
        }
    }

    let mut edges = Vec::with_capacity(pending_edges.len());
    let mut adjacency: BTreeMap<u64, Vec<(u64, usize)>> = BTreeMap::new();
    for (line, a, b, way) in pending_edges {
        for endpoint in [a, b] {
            if !nodes.contains_key(&endpoint) {
                return Err(RouteError::DanglingEdge {
                    line,
                    node: endpoint,
                });
            }
        }
        let na = &nodes[&a];
        let nb = &nodes[&b];
        let length_m = haversine_m(na.lat, na.lon, nb.lat, nb.lon);
        let index = edges.len();
        edges.push(Edge { a, b, way, length_m });
        adjacency.entry(a).or_default().push((b, index));
        adjacency.entry(b).or_default().push((a, index));
    }
    for list in adjacency.values_mut() {
        list.sort_unstable();
    }

    Ok(RouteGraph {
        nodes,
        edges,
        adjacency,
    })
}

fn parse_id(field: &str, line: usize) -> Result<u64, RouteError> {
    field.parse().map_err(|_| RouteError::BadRecord {
        line,
        reason: format!("bad node id {field:?}"),
    })
}

fn parse_coord(field: &str, line: usize, what: &str) -> Result<f64, RouteError> {
    let value: f64 = field.parse().map_err(|_| RouteError::BadCoordinate {
        line,
        reason: format!("bad {what} {field:?}"),
    })?;
    if !value.is_finite() {
        return Err(RouteError::BadCoordinate {
            line,
            reason: format!("bad {what} {field:?}"),
        });
    }
    Ok(value)
}

fn optional_name(field: &str) -> Option<String> {
    if field.is_empty() || field == "-" {
        None
    } else {
        Some(field.to_string())
    }
}

/// Resolves a spoken destination to a node by case-insensitive exact name
/// match.
pub fn geocode(graph: &RouteGraph, destination_name: &str) -> Result<u64, RouteError> {
    let wanted = destination_name.to_lowercase();
    let matches: Vec<u64> = graph
        .nodes()
        .filter(|n| n.name.as_deref().is_some_and(|s| s.to_lowercase() == wanted))
        .map(|n| n.id)
        .collect();
    match matches.len() {
        0 => Err(RouteError::DestinationNotFound {
            name: destination_name.to_string(),
        }),
        1 => Ok(matches[0]),
        count => Err(RouteError::AmbiguousDestination {
            name: destination_name.to_string(),
            count,
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub nodes: Vec<u64>,
    pub total_m: f64,
}

// Min-heap entry: cheapest cost first, then smaller node id.
#[derive(PartialEq)]
struct QueueEntry {
    cost: f64,
    node: u64,
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn shortest_path(graph: &RouteGraph, src: u64, dst: u64) -> Result<PathResult, RouteError> {
    for id in [src, dst] {
        if graph.node(id).is_none() {
            return Err(RouteError::UnknownNode { id });
        }
    }

    let mut dist: HashMap<u64, f64> = HashMap::new();
    let mut prev: HashMap<u64, u64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(src, 0.0);
    heap.push(QueueEntry {
        cost: 0.0,
        node: src,
    });

    while let Some(QueueEntry { cost, node }) = heap.pop() {
        if cost > dist[&node] {
            continue;
        }
        if node == dst {
            break;
        }
        for &(next, edge_idx) in graph.neighbors(node) {
            let candidate = cost + graph.edges[edge_idx].length_m;
            if dist.get(&next).is_none_or(|&d| candidate < d) {
                dist.insert(next, candidate);
                prev.insert(next, node);
                heap.push(QueueEntry {
                    cost: candidate,
                    node: next,
                });
            }
        }
    }

    let Some(&total_m) = dist.get(&dst) else {
        return Err(RouteError::NoRoute { from: src, to: dst });
    };
    let mut nodes = vec![dst];
    while let Some(&p) = prev.get(nodes.last().unwrap()) {
        nodes.push(p);
    }
    nodes.reverse();
    debug_assert_eq!(nodes[0], src);
    Ok(PathResult { nodes, total_m })
}

/// One turn-by-turn instruction. `bearing` is the travel direction of the
/// leg the step begins, degrees clockwise from north.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteStep {
    pub text: String,
    pub distance_m: f64,
    pub bearing: f64,
}

const COMPASS: [&str; 8] = [
    "north",
    "northeast",
    "east",
    "southeast",
    "south",
    "southwest",
    "west",
    "northwest",
];

pub fn compass_sector(bearing_deg: f64) -> &'static str {
    let idx = (bearing_deg.rem_euclid(360.0) / 45.0).round() as usize % 8;
    COMPASS[idx]
}

/// Signed change of heading in (-180, 180]; positive turns clockwise.
fn bearing_delta(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

/// Renders a path as instructions: an initial compass heading, one step per
/// further edge (turn or continue), and an arrival step.
///
/// The path must be non-empty, its nodes must exist and consecutive nodes
/// must share an edge; `shortest_path` output always qualifies.
pub fn generate_instructions(graph: &RouteGraph, path: &[u64]) -> Vec<RouteStep> {
    assert!(!path.is_empty(), "cannot describe an empty path");
    let node = |id: u64| graph.node(id).expect("path node exists in graph");

    let destination = node(*path.last().unwrap());
    let arrival_name = destination
        .name
        .clone()
        .unwrap_or_else(|| format!("node {}", destination.id));

    let mut steps = Vec::with_capacity(path.len());
    let mut prev_bearing = 0.0;
    for (i, pair) in path.windows(2).enumerate() {
        let (from, to) = (node(pair[0]), node(pair[1]));
        let edge = graph
            .edge_between(pair[0], pair[1])
            .expect("consecutive path nodes share an edge");
        let way = edge.way.as_deref().unwrap_or(UNNAMED_WAY);
        let bearing = initial_bearing_deg(from.lat, from.lon, to.lat, to.lon);
        let text = if i == 0 {
            format!("Head {} on {}", compass_sector(bearing), way)
        } else {
            let delta = bearing_delta(prev_bearing, bearing);
            if delta > TURN_THRESHOLD_DEG {
                format!("Turn right onto {way}")
            } else if delta < -TURN_THRESHOLD_DEG {
                format!("Turn left onto {way}")
            } else {
                format!("Continue on {way}")
            }
        };
        steps.push(RouteStep {
            text,
            distance_m: edge.length_m,
            bearing,
        });
        prev_bearing = bearing;
    }
    steps.push(RouteStep {
        text: format!("You have arrived at {arrival_name}"),
        distance_m: 0.0,
        bearing: prev_bearing,
    });
    steps
}

/// Folds each "Continue on X" step into its predecessor when the predecessor
/// already travels on X, summing distances. Off by default; callers opt in.
pub fn merge_continue_runs(steps: &[RouteStep]) -> Vec<RouteStep> {
    let mut out: Vec<RouteStep> = Vec::with_capacity(steps.len());
    for step in steps {
        let same_way = step
            .text
            .strip_prefix("Continue on ")
            .zip(out.last())
            .is_some_and(|(way, prev)| {
                prev.text.ends_with(&format!(" on {way}"))
                    || prev.text.ends_with(&format!(" onto {way}"))
            });
        if same_way {
            out.last_mut().unwrap().distance_m += step.distance_m;
        } else {
            out.push(step.clone());
        }
    }
    out
}
