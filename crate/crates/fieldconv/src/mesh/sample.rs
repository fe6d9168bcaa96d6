//! Farthest point sampling and graph geodesic distances on the mesh edge
//! graph (Dijkstra with 3D edge lengths).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::TriMesh;
use crate::{Error, Result};

/// Undirected edge adjacency with Euclidean edge lengths.
#[derive(Debug, Clone)]
pub struct EdgeGraph {
    offsets: Vec<usize>,
    neighbors: Vec<(u32, f64)>,
}

impl EdgeGraph {
    pub fn from_mesh(mesh: &TriMesh) -> Self {
        let edges = mesh.undirected_edges();
        let n = mesh.n_vertices();
        let mut degree = vec![0usize; n];
        for &(a, b) in &edges {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut cursor = offsets.clone();
        let mut neighbors = vec![(0u32, 0.0f64); edges.len() * 2];
        for &(a, b) in &edges {
            let len = (mesh.vertices[a as usize] - mesh.vertices[b as usize]).norm();
            neighbors[cursor[a as usize]] = (b, len);
            cursor[a as usize] += 1;
            neighbors[cursor[b as usize]] = (a, len);
            cursor[b as usize] += 1;
        }
        // Sorted neighbor lists keep relaxation order deterministic.
        for v in 0..n {
            neighbors[offsets[v]..offsets[v + 1]].sort_unstable_by(|a, b| a.0.cmp(&b.0));
        }
        EdgeGraph { offsets, neighbors }
    }

    pub fn n_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbors(&self, v: usize) -> &[(u32, f64)] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }
}

#[derive(PartialEq)]
struct HeapItem {
    dist: f64,
    vertex: u32,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (distance, vertex index) through BinaryHeap's max order.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from `source`; entries unreachable within `max_dist` stay at
/// `f64::INFINITY`.
pub fn dijkstra_distances(graph: &EdgeGraph, source: usize, max_dist: Option<f64>) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; graph.n_vertices()];
    relax_from(graph, source, max_dist, &mut dist);
    dist
}

/// Relaxes `dist` in place with paths from `source`; used both for plain
/// distance fields and for the running min-to-set array in FPS.
fn relax_from(graph: &EdgeGraph, source: usize, max_dist: Option<f64>, dist: &mut [f64]) {
    let mut heap = BinaryHeap::new();
    if dist[source] > 0.0 {
        dist[source] = 0.0;
    }
    heap.push(HeapItem {
        dist: 0.0,
        vertex: source as u32,
    });
    while let Some(item) = heap.pop() {
        let u = item.vertex as usize;
        if item.dist > dist[u] {
            continue;
        }
        if let Some(limit) = max_dist {
            if item.dist > limit {
                break;
            }
        }
        for &(v, len) in graph.neighbors(u) {
            let nd = item.dist + len;
            if nd < dist[v as usize] {
                dist[v as usize] = nd;
                heap.push(HeapItem {
                    dist: nd,
                    vertex: v,
                });
            }
        }
    }
}

/// Farthest point sampling on the mesh edge graph. The first point is drawn
/// from a seeded RNG; each subsequent point maximizes the minimum graph
/// distance to the chosen set, ties broken by smallest vertex index. The
/// result is identical across runs and thread counts for a fixed seed.
pub fn farthest_point_sample(mesh: &TriMesh, k: usize, seed: u64) -> Result<Vec<usize>> {
    let graph = EdgeGraph::from_mesh(mesh);
    let n = graph.n_vertices();
    if k == 0 || k > n {
        return Err(Error::SampleCountOutOfRange {
            requested: k,
            n_vertices: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.gen_range(0..n);
    Ok(fps_from(&graph, k, first))
}

pub(crate) fn fps_from(graph: &EdgeGraph, k: usize, first: usize) -> Vec<usize> {
    let n = graph.n_vertices();
    let mut chosen = Vec::with_capacity(k);
    let mut min_dist = vec![f64::INFINITY; n];
    let mut picked = vec![false; n];
    let mut current = first;
    for _ in 0..k {
        chosen.push(current);
        picked[current] = true;
        min_dist[current] = 0.0;
        relax_from(graph, current, None, &mut min_dist);
        let mut best = None::<(f64, usize)>;
        for v in 0..n {
            if picked[v] {
                continue;
            }
            let better = match best {
                None => true,
                Some((bd, _)) => min_dist[v] > bd,
            };
            if better {
                best = Some((min_dist[v], v));
            }
        }
        match best {
            Some((_, v)) => current = v,
            None => break,
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::synth;

    #[test]
    fn k_equal_to_vertex_count_is_exhaustive() {
        let m = synth::icosahedron();
        let sample = farthest_point_sample(&m, 12, 3).unwrap();
        let mut sorted = sample.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 12);
    }

    #[test]
    fn k_one_returns_seeded_vertex() {
        let m = synth::icosahedron();
        let a = farthest_point_sample(&m, 1, 9).unwrap();
        let b = farthest_point_sample(&m, 1, 9).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a, b);
    }

    #[test]
    fn k_out_of_range_errors() {
        let m = synth::icosahedron();
        assert!(farthest_point_sample(&m, 13, 0).is_err());
        assert!(farthest_point_sample(&m, 0, 0).is_err());
    }

    #[test]
    fn path_graph_picks_far_end() {
        // Five collinear vertices joined by unit edges.
        let mut offsets = vec![0usize];
        let mut neighbors = Vec::new();
        for v in 0..5i64 {
            for d in [-1i64, 1] {
                let u = v + d;
                if (0..5).contains(&u) {
                    neighbors.push((u as u32, 1.0));
                }
            }
            offsets.push(neighbors.len());
        }
        let graph = EdgeGraph { offsets, neighbors };
        let sample = fps_from(&graph, 2, 0);
        assert_eq!(sample, vec![0, 4]);
    }

    #[test]
    fn fps_is_reproducible() {
        let m = synth::uv_sphere(8, 10);
        let a = farthest_point_sample(&m, 20, 42).unwrap();
        let b = farthest_point_sample(&m, 20, 42).unwrap();
        assert_eq!(a, b);
    }
}
