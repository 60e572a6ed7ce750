//! Epsilon-neighborhood graphs, hop and Euclidean graph distances, balls and
//! the empirical / degree-volume graph measures.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::manifold::{dist2, PointCloud};

pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Openness {
    Open,
    Closed,
}

/// Undirected simple graph in compressed adjacency form, neighbor lists sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl Graph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut lists = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return domain(format!("edge ({a}, {b}) out of range for {n} vertices"));
            }
            if a == b {
                return domain(format!("self loop at {a}"));
            }
            lists[a].push(b as u32);
            lists[b].push(a as u32);
        }
        Ok(Self::from_lists(lists))
    }

    fn from_lists(mut lists: Vec<Vec<u32>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let mut neighbors = Vec::new();
        for l in &mut lists {
            l.sort_unstable();
            l.dedup();
            neighbors.extend_from_slice(l);
            offsets.push(neighbors.len());
        }
        Self { offsets, neighbors }
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges).expect("valid path")
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Self::from_edges(n, &edges).expect("valid clique")
    }

    /// Star with hub 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Self {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Self::from_edges(leaves + 1, &edges).expect("valid star")
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|v| self.degree(v)).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors(a).binary_search(&(b as u32)).is_ok()
    }

    /// Edges (i, j) with i < j in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |i| {
            self.neighbors(i).iter().map(|&j| j as usize).filter(move |&j| j > i).map(move |j| (i, j))
        })
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn volume(&self, set: &[usize]) -> usize {
        set.iter().map(|&v| self.degree(v)).sum()
    }

    /// Hop distances from `source`, `UNREACHABLE` where no path exists.
    pub fn sp_distances_from(&self, source: usize) -> Vec<u32> {
        self.sp_distances_within(source, UNREACHABLE)
    }

    /// BFS that stops expanding beyond `max_hops`; farther vertices stay
    /// `UNREACHABLE`.
    pub fn sp_distances_within(&self, source: usize, max_hops: u32) -> Vec<u32> {
        let mut dist = vec![UNREACHABLE; self.n()];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v];
            if d >= max_hops {
                continue;
            }
            for &w in self.neighbors(v) {
                let w = w as usize;
                if dist[w] == UNREACHABLE {
                    dist[w] = d + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Vertices at hop distance below (`Open`) or up to (`Closed`) r, sorted.
    pub fn ball_sp(&self, center: usize, r: f64, openness: Openness) -> Result<Vec<usize>> {
        if r.is_nan() || r < 0.0 {
            return domain(format!("negative radius {r}"));
        }
        let cap = max_hops(r, openness);
        let Some(cap) = cap else { return Ok(Vec::new()) };
        let dist = self.sp_distances_within(center, cap);
        Ok((0..self.n()).filter(|&v| dist[v] <= cap).collect())
    }

    /// Component label per vertex, labels numbered in order of first vertex.
    pub fn connected_components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.n()];
        let mut next = 0;
        for s in 0..self.n() {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &w in self.neighbors(v) {
                    if label[w as usize] == usize::MAX {
                        label[w as usize] = next;
                        stack.push(w as usize);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn component_count(&self) -> usize {
        self.connected_components().iter().max().map_or(0, |m| m + 1)
    }

    pub fn require_connected(&self) -> Result<()> {
        match self.component_count() {
            0 | 1 => Ok(()),
            c => Err(Error::Disconnected { components: c }),
        }
    }

    /// Induced subgraph on `vertices` (must be sorted); vertex i of the
    /// result is `vertices[i]`.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let index: HashMap<usize, u32> = vertices.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
        let lists = vertices
            .iter()
            .map(|&v| self.neighbors(v).iter().filter_map(|w| index.get(&(*w as usize)).copied()).collect())
            .collect();
        Graph::from_lists(lists)
    }

    pub fn write_edge_list<W: Write>(&self, mut w: W, epsilon: f64) -> Result<()> {
        writeln!(w, "{} {}", self.n(), epsilon)?;
        for (i, j) in self.edges() {
            writeln!(w, "{i} {j}")?;
        }
        Ok(())
    }
}

/// Largest admissible hop count for a ball of radius r, None if empty.
pub fn max_hops(r: f64, openness: Openness) -> Option<u32> {
    let m = match openness {
        Openness::Closed => r.floor(),
        Openness::Open => r.ceil() - 1.0,
    };
    if m < 0.0 {
        None
    } else {
        Some(m.min(u32::MAX as f64 - 1.0) as u32)
    }
}

/// Graph built from points by the rule |x_i - x_j| <= epsilon.
#[derive(Clone, Debug)]
pub struct EpsilonGraph {
    points: PointCloud,
    epsilon: f64,
    graph: Graph,
}

impl EpsilonGraph {
    pub fn build(points: PointCloud, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        let dim = points.dim();
        if dim > 4 {
            return domain("cell grid supports ambient dimension up to 4");
        }
        // padded so that rounding in the cell index cannot separate a pair
        // at distance exactly epsilon by more than one cell
        let side = epsilon * (1.0 + 1e-9);
        let key = |p: &[f64]| {
            let mut k = [0i64; 4];
            for (d, x) in p.iter().enumerate() {
                k[d] = (x / side).floor() as i64;
            }
            k
        };
        let mut cells: HashMap<[i64; 4], Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(key(p)).or_default().push(i as u32);
        }
        let offsets = neighbor_offsets(dim);
        let mut lists = vec![Vec::new(); points.len()];
        for (i, p) in points.iter().enumerate() {
            let base = key(p);
            for off in &offsets {
                let mut cell = base;
                for d in 0..4 {
                    cell[d] += off[d];
                }
                let Some(members) = cells.get(&cell) else { continue };
                for &j in members {
                    let j = j as usize;
                    if j <= i {
                        continue;
                    }
                    let d2 = dist2(p, points.point(j));
                    if d2 == 0.0 {
                        return Err(Error::DuplicatePoint(i, j));
                    }
                    if d2.sqrt() <= epsilon {
                        lists[i].push(j as u32);
                        lists[j].push(i as u32);
                    }
                }
            }
        }
        Ok(Self { graph: Graph::from_lists(lists), points, epsilon })
    }

    /// O(n^2) double loop with the same edge rule; the reference for `build`.
    pub fn build_brute_force(points: PointCloud, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        let n = points.len();
        let mut lists = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                let d = dist2(points.point(i), points.point(j)).sqrt();
                if d == 0.0 {
                    return Err(Error::DuplicatePoint(i, j));
                }
                if d <= epsilon {
                    lists[i].push(j as u32);
                    lists[j].push(i as u32);
                }
            }
        }
        Ok(Self { graph: Graph::from_lists(lists), points, epsilon })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn points(&self) -> &PointCloud {
        &self.points
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn edge_length(&self, a: usize, b: usize) -> f64 {
        dist2(self.points.point(a), self.points.point(b)).sqrt()
    }

    /// Dijkstra with Euclidean edge lengths; infinity where unreachable.
    pub fn euclidean_distances_from(&self, source: usize) -> Vec<f64> {
        let n = self.n();
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(HeapEntry { d: 0.0, v: source });
        while let Some(HeapEntry { d, v }) = heap.pop() {
            if done[v] {
                continue;
            }
            done[v] = true;
            for &w in self.graph.neighbors(v) {
                let w = w as usize;
                let nd = d + self.edge_length(v, w);
                if nd < dist[w] {
                    dist[w] = nd;
                    heap.push(HeapEntry { d: nd, v: w });
                }
            }
        }
        dist
    }

    pub fn euclidean_graph_distance(&self, x: usize, y: usize) -> Result<f64> {
        let d = self.euclidean_distances_from(x)[y];
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::Disconnected { components: self.graph.component_count() })
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        domain(format!("epsilon must be positive, got {epsilon}"))
    }
}

fn neighbor_offsets(dim: usize) -> Vec<[i64; 4]> {
    let mut out = vec![[0i64; 4]];
    for d in 0..dim {
        out = out
            .into_iter()
            .flat_map(|o| {
                [-1, 0, 1].map(|s| {
                    let mut c = o;
                    c[d] = s;
                    c
                })
            })
            .collect();
    }
    out
}

#[derive(PartialEq)]
struct HeapEntry {
    d: f64,
    v: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, ties by smaller vertex index
        other.d.total_cmp(&self.d).then_with(|| other.v.cmp(&self.v))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Empirical,
    DegreeVolume,
}

/// Per-vertex probability weights.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphMeasure {
    pub kind: MeasureKind,
    pub weights: Vec<f64>,
}

impl GraphMeasure {
    pub fn empirical(n: usize) -> Self {
        Self { kind: MeasureKind::Empirical, weights: vec![1.0 / n as f64; n] }
    }

    pub fn degree_volume(graph: &Graph) -> Result<Self> {
        let vol: usize = graph.degrees().iter().sum();
        if vol == 0 {
            return domain("degree measure of an edgeless graph");
        }
        let weights = graph.degrees().iter().map(|&d| d as f64 / vol as f64).collect();
        Ok(Self { kind: MeasureKind::DegreeVolume, weights })
    }

    pub fn of(kind: MeasureKind, graph: &Graph) -> Result<Self> {
        match kind {
            MeasureKind::Empirical => Ok(Self::empirical(graph.n())),
            MeasureKind::DegreeVolume => Self::degree_volume(graph),
        }
    }

    pub fn measure_of(&self, set: &[usize]) -> f64 {
        set.iter().map(|&v| self.weights[v]).sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "vertex,weight")?;
        for (i, x) in self.weights.iter().enumerate() {
            writeln!(w, "{i},{x:.16e}")?;
        }
        Ok(())
    }
}
