//! Intrinsic precomputation: per-vertex tangent frames, geodesic
//! epsilon-balls with polar log-map coordinates, parallel-transport angles,
//! and the serializable cache consumed by the convolution kernels.
//!
//! The logarithm map runs a Dijkstra wavefront from each source vertex and
//! propagates a 2D displacement by unfolding each relaxed edge into the
//! source tangent plane: the edge direction is measured in the current
//! vertex's frame and rotated back to the source frame by the accumulated
//! edge-wise transport. On planar meshes the accumulated displacement is the
//! exact Euclidean offset regardless of the Dijkstra path taken.
//!
//! Transport angles are derived from the two log maps of a symmetrized pair:
//! transport along the connecting geodesic maps `log_q p` to `-log_p q`, so
//! `phi_pq = theta_pq + pi - theta_qp` (wrapped). The reciprocity identity
//! `theta_pq = theta_qp + phi_pq + pi (mod 2 pi)` therefore holds exactly by
//! construction.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::mesh::{AreaWeights, TriMesh};
use crate::par;
use crate::{Error, Result};

pub mod io;

/// Exploration slack: Dijkstra runs until the popped graph distance exceeds
/// `EXPLORE_SLACK * epsilon`, because the unfolded radius of a vertex is
/// bounded by (and usually well below) its graph distance.
const EXPLORE_SLACK: f64 = 1.5;

/// Wraps an angle to (-pi, pi].
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a % TAU;
    if x <= -PI {
        x += TAU;
    } else if x > PI {
        x -= TAU;
    }
    x
}

/// Orthonormal tangent frames: `e1` is the in-plane projection of the edge
/// to the lowest-index neighbor, `e2 = normal x e1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrames {
    pub e1: Vec<Vector3<f64>>,
    pub e2: Vec<Vector3<f64>>,
    pub normal: Vec<Vector3<f64>>,
}

impl TangentFrames {
    pub fn n_vertices(&self) -> usize {
        self.e1.len()
    }

    /// Rotates the frame at every vertex by `alphas[v]` in its tangent plane
    /// (counterclockwise about the normal).
    pub fn rotated(&self, alphas: &[f64]) -> TangentFrames {
        assert_eq!(alphas.len(), self.n_vertices());
        let mut out = self.clone();
        for v in 0..self.n_vertices() {
            let (s, c) = alphas[v].sin_cos();
            out.e1[v] = c * self.e1[v] + s * self.e2[v];
            out.e2[v] = -s * self.e1[v] + c * self.e2[v];
        }
        out
    }
}

/// Builds per-vertex frames from area-weighted face normals. Deterministic:
/// `e1` always points toward the lowest-index neighbor.
pub fn build_frames(mesh: &TriMesh) -> Result<TangentFrames> {
    let n = mesh.n_vertices();
    let mut normal = vec![Vector3::zeros(); n];
    for f in &mesh.faces {
        let p0 = mesh.vertices[f[0] as usize];
        let p1 = mesh.vertices[f[1] as usize];
        let p2 = mesh.vertices[f[2] as usize];
        let fnorm = (p1 - p0).cross(&(p2 - p0));
        for &v in f {
            normal[v as usize] += fnorm;
        }
    }
    let mut lowest_neighbor = vec![u32::MAX; n];
    for &(a, b) in &mesh.undirected_edges() {
        let (a, b) = (a as usize, b as usize);
        lowest_neighbor[a] = lowest_neighbor[a].min(b as u32);
        lowest_neighbor[b] = lowest_neighbor[b].min(a as u32);
    }
    let mut e1 = vec![Vector3::zeros(); n];
    let mut e2 = vec![Vector3::zeros(); n];
    for v in 0..n {
        if lowest_neighbor[v] == u32::MAX {
            return Err(Error::IsolatedVertex { vertex: v });
        }
        let nv = normal[v].norm();
        if nv < 1e-300 {
            return Err(Error::DegenerateFrame { vertex: v });
        }
        normal[v] /= nv;
        let edge = mesh.vertices[lowest_neighbor[v] as usize] - mesh.vertices[v];
        let proj = edge - normal[v] * normal[v].dot(&edge);
        let pl = proj.norm();
        if pl < 1e-300 {
            return Err(Error::DegenerateFrame { vertex: v });
        }
        e1[v] = proj / pl;
        e2[v] = normal[v].cross(&e1[v]);
    }
    Ok(TangentFrames { e1, e2, normal })
}

/// One neighbor of a ball center: polar log-map coordinates and transport.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborRecord {
    /// Neighbor vertex index.
    pub q: u32,
    /// Normalized integration weight; per center they sum to 1.
    pub w: f64,
    /// Symmetrized geodesic distance estimate, 0 < r <= epsilon.
    pub r: f64,
    /// Angle of `log_q p` in q's frame (filter argument direction).
    pub theta_qp: f64,
    /// Angle of `log_p q` in p's frame (gradient-lift direction).
    pub theta_pq: f64,
    /// Transport angle q -> p: `wrap(theta_pq + pi - theta_qp)`.
    pub phi_pq: f64,
}

/// Per-vertex geodesic epsilon-ball records plus the frames they are
/// expressed in. Immutable after construction; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicCache {
    pub epsilon: f64,
    pub frames: TangentFrames,
    /// CSR offsets into `records`, length `n_vertices + 1`.
    pub offsets: Vec<usize>,
    /// Neighbor records, sorted by ascending `q` within each center.
    pub records: Vec<NeighborRecord>,
    /// SHA-256 of the source mesh's vertex and face buffers.
    pub mesh_hash: [u8; 32],
    /// Transpose adjacency: for each vertex q, the (center p, record index)
    /// pairs in which q appears. Derived; used by backward gathers.
    rev_offsets: Vec<usize>,
    rev_entries: Vec<(u32, u32)>,
}

impl IntrinsicCache {
    pub fn n_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbors(&self, p: usize) -> &[NeighborRecord] {
        &self.records[self.offsets[p]..self.offsets[p + 1]]
    }

    /// Record indices (into `records`) of the balls that contain `q`,
    /// paired with the ball center.
    pub fn incoming(&self, q: usize) -> &[(u32, u32)] {
        &self.rev_entries[self.rev_offsets[q]..self.rev_offsets[q + 1]]
    }

    pub fn mean_neighbor_count(&self) -> f64 {
        self.records.len() as f64 / self.n_vertices() as f64
    }

    pub fn verify_mesh(&self, mesh: &TriMesh) -> Result<()> {
        if mesh_hash(mesh) != self.mesh_hash {
            return Err(Error::MeshHashMismatch);
        }
        Ok(())
    }

    pub(crate) fn from_parts(
        epsilon: f64,
        frames: TangentFrames,
        offsets: Vec<usize>,
        records: Vec<NeighborRecord>,
        mesh_hash: [u8; 32],
    ) -> Self {
        let n = offsets.len() - 1;
        let mut rev_count = vec![0usize; n];
        for rec in &records {
            rev_count[rec.q as usize] += 1;
        }
        let mut rev_offsets = vec![0usize; n + 1];
        for v in 0..n {
            rev_offsets[v + 1] = rev_offsets[v] + rev_count[v];
        }
        let mut cursor = rev_offsets.clone();
        let mut rev_entries = vec![(0u32, 0u32); records.len()];
        for p in 0..n {
            for idx in offsets[p]..offsets[p + 1] {
                let q = records[idx].q as usize;
                rev_entries[cursor[q]] = (p as u32, idx as u32);
                cursor[q] += 1;
            }
        }
        IntrinsicCache {
            epsilon,
            frames,
            offsets,
            records,
            mesh_hash,
            rev_offsets,
            rev_entries,
        }
    }

    /// Applies a per-vertex gauge rotation: frames rotate by `alphas[v]`,
    /// the stored angles transform accordingly (`theta_pq -> theta_pq -
    /// alpha_p`, `theta_qp -> theta_qp - alpha_q`, `phi_pq -> phi_pq +
    /// alpha_q - alpha_p`). Weights, radii, and membership are unchanged.
    pub fn rotated_gauge(&self, alphas: &[f64]) -> IntrinsicCache {
        assert_eq!(alphas.len(), self.n_vertices());
        let mut out = self.clone();
        out.frames = self.frames.rotated(alphas);
        for p in 0..self.n_vertices() {
            for idx in self.offsets[p]..self.offsets[p + 1] {
                let rec = &mut out.records[idx];
                let q = rec.q as usize;
                rec.theta_pq = wrap_angle(rec.theta_pq - alphas[p]);
                rec.theta_qp = wrap_angle(rec.theta_qp - alphas[q]);
                rec.phi_pq = wrap_angle(rec.phi_pq + alphas[q] - alphas[p]);
            }
        }
        out
    }
}

/// SHA-256 over the little-endian vertex coordinate and face index buffers.
pub fn mesh_hash(mesh: &TriMesh) -> [u8; 32] {
    let mut hasher = Sha256::new();
    for p in &mesh.vertices {
        for c in [p.x, p.y, p.z] {
            hasher.update(c.to_le_bytes());
        }
    }
    for f in &mesh.faces {
        for &v in f {
            hasher.update(v.to_le_bytes());
        }
    }
    hasher.finalize().into()
}

/// Per-edge geometry for the wavefront propagation: the edge's angle in the
/// tail vertex's frame, its length, and the frame-to-frame transport angle.
#[derive(Debug, Clone)]
pub(crate) struct Connection {
    offsets: Vec<usize>,
    edges: Vec<ConnEdge>,
}

#[derive(Debug, Clone, Copy)]
struct ConnEdge {
    to: u32,
    len: f64,
    /// Angle of the edge direction in the tail vertex's frame.
    alpha: f64,
    /// Transport of angles from the tail's frame to the head's frame.
    delta: f64,
}

impl Connection {
    pub(crate) fn build(mesh: &TriMesh, frames: &TangentFrames) -> Connection {
        let n = mesh.n_vertices();
        let undirected = mesh.undirected_edges();
        let mut degree = vec![0usize; n];
        for &(a, b) in &undirected {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut cursor = offsets.clone();
        let mut edges = vec![
            ConnEdge {
                to: 0,
                len: 0.0,
                alpha: 0.0,
                delta: 0.0
            };
            undirected.len() * 2
        ];
        let angle_in_frame = |v: usize, d: &Vector3<f64>| -> f64 {
            let x = frames.e1[v].dot(d);
            let y = frames.e2[v].dot(d);
            y.atan2(x)
        };
        for &(a, b) in &undirected {
            let (ai, bi) = (a as usize, b as usize);
            let d = mesh.vertices[bi] - mesh.vertices[ai];
            let len = d.norm();
            let alpha_ab = angle_in_frame(ai, &d);
            let alpha_ba = angle_in_frame(bi, &(-d));
            let delta_ab = wrap_angle(alpha_ba + PI - alpha_ab);
            let delta_ba = wrap_angle(alpha_ab + PI - alpha_ba);
            edges[cursor[ai]] = ConnEdge {
                to: b,
                len,
                alpha: alpha_ab,
                delta: delta_ab,
            };
            cursor[ai] += 1;
            edges[cursor[bi]] = ConnEdge {
                to: a,
                len,
                alpha: alpha_ba,
                delta: delta_ba,
            };
            cursor[bi] += 1;
        }
        for v in 0..n {
            edges[offsets[v]..offsets[v + 1]].sort_unstable_by(|x, y| x.to.cmp(&y.to));
        }
        Connection { offsets, edges }
    }

    fn neighbors(&self, v: usize) -> &[ConnEdge] {
        &self.edges[self.offsets[v]..self.offsets[v + 1]]
    }
}

/// One entry of a log-map ball: polar coordinates of `log_source q` in the
/// source's frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub q: u32,
    pub r: f64,
    pub theta: f64,
}

#[derive(PartialEq)]
struct WaveItem {
    dist: f64,
    vertex: u32,
}

impl Eq for WaveItem {}
impl Ord for WaveItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}
impl PartialOrd for WaveItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All vertices whose unfolded geodesic estimate from `source` is at most
/// `epsilon`, with polar log-map coordinates in the source's frame. The
/// source itself is excluded. Entries are sorted by vertex index.
pub fn log_map_ball(
    mesh: &TriMesh,
    frames: &TangentFrames,
    source: usize,
    epsilon: f64,
) -> Vec<LogEntry> {
    let conn = Connection::build(mesh, frames);
    ball_from(&conn, mesh.n_vertices(), source, epsilon)
}

pub(crate) fn ball_from(
    conn: &Connection,
    n_vertices: usize,
    source: usize,
    epsilon: f64,
) -> Vec<LogEntry> {
    let mut dist = vec![f64::INFINITY; n_vertices];
    let mut done = vec![false; n_vertices];
    let mut log2d = vec![Complex64::new(0.0, 0.0); n_vertices];
    // Rotation taking angles in v's frame to angles in the source frame.
    let mut omega = vec![0.0f64; n_vertices];
    let limit = EXPLORE_SLACK * epsilon;
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(WaveItem {
        dist: 0.0,
        vertex: source as u32,
    });
    let mut out = Vec::new();
    while let Some(item) = heap.pop() {
        let u = item.vertex as usize;
        if done[u] || item.dist > dist[u] {
            continue;
        }
        if item.dist > limit {
            break;
        }
        done[u] = true;
        if u != source {
            let r = log2d[u].norm();
            if r > 1e-15 && r <= epsilon {
                out.push(LogEntry {
                    q: u as u32,
                    r,
                    theta: log2d[u].im.atan2(log2d[u].re),
                });
            }
        }
        for edge in conn.neighbors(u) {
            let v = edge.to as usize;
            if done[v] {
                continue;
            }
            let nd = item.dist + edge.len;
            if nd < dist[v] {
                dist[v] = nd;
                let step = Complex64::from_polar(edge.len, edge.alpha + omega[u]);
                log2d[v] = log2d[u] + step;
                omega[v] = omega[u] - edge.delta;
                heap.push(WaveItem {
                    dist: nd,
                    vertex: v as u32,
                });
            }
        }
    }
    out.sort_unstable_by_key(|e| e.q);
    out
}

/// What to do with vertices whose epsilon-ball is empty after
/// symmetrization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsolatedPolicy {
    /// Report an error naming the vertices.
    Error,
    /// Locally expand the support to the vertex's one-ring (membership is
    /// kept symmetric by inserting the mirrored records as well).
    ExpandOneRing,
}

/// Runs the log map from every vertex, keeps a pair (p, q) only when each
/// ball found the other, averages the two radius estimates, derives the
/// transport angle from the two log directions, and normalizes the area
/// weights per center. Deterministic for any thread count.
pub fn assemble_cache(
    mesh: &TriMesh,
    frames: &TangentFrames,
    weights: &AreaWeights,
    epsilon: f64,
    isolated: IsolatedPolicy,
) -> Result<IntrinsicCache> {
    let n = mesh.n_vertices();
    if !(epsilon > 0.0) {
        return Err(Error::EmptyNeighborhood {
            count: n,
            first: 0,
            epsilon,
        });
    }
    let conn = Connection::build(mesh, frames);
    let balls = par::map_indexed(n, |p| ball_from(&conn, n, p, epsilon));

    // Symmetrized raw records: (q, r_sym, theta_pq, theta_qp) per center p.
    let mut raw: Vec<Vec<(u32, f64, f64, f64)>> = par::map_indexed(n, |p| {
        let mut list = Vec::with_capacity(balls[p].len());
        for entry in &balls[p] {
            let q = entry.q as usize;
            if let Ok(pos) = balls[q].binary_search_by_key(&(p as u32), |e| e.q) {
                let back = &balls[q][pos];
                list.push((entry.q, 0.5 * (entry.r + back.r), entry.theta, back.theta));
            }
        }
        list
    });

    if raw.iter().any(|l| l.is_empty()) {
        match isolated {
            IsolatedPolicy::Error => {
                let lonely: Vec<usize> = (0..n).filter(|&p| raw[p].is_empty()).collect();
                return Err(Error::EmptyNeighborhood {
                    count: lonely.len(),
                    first: lonely[0],
                    epsilon,
                });
            }
            IsolatedPolicy::ExpandOneRing => {
                let lonely: Vec<usize> = (0..n).filter(|&p| raw[p].is_empty()).collect();
                for p in lonely {
                    for edge in conn.neighbors(p) {
                        let q = edge.to as usize;
                        let back = conn
                            .neighbors(q)
                            .iter()
                            .find(|e| e.to as usize == p)
                            .expect("edge adjacency is symmetric");
                        raw[p].push((edge.to, edge.len, edge.alpha, back.alpha));
                        if raw[q].binary_search_by_key(&(p as u32), |e| e.0).is_err() {
                            raw[q].push((p as u32, edge.len, back.alpha, edge.alpha));
                            raw[q].sort_unstable_by_key(|e| e.0);
                        }
                    }
                    raw[p].sort_unstable_by_key(|e| e.0);
                }
            }
        }
    }

    let mut offsets = vec![0usize; n + 1];
    for p in 0..n {
        offsets[p + 1] = offsets[p] + raw[p].len();
    }
    let mut records = Vec::with_capacity(offsets[n]);
    for p in 0..n {
        let wsum: f64 = raw[p].iter().map(|e| weights.w[e.0 as usize]).sum();
        for &(q, r, theta_pq, theta_qp) in &raw[p] {
            records.push(NeighborRecord {
                q,
                w: weights.w[q as usize] / wsum,
                r,
                theta_qp,
                theta_pq,
                phi_pq: wrap_angle(theta_pq + PI - theta_qp),
            });
        }
    }
    Ok(IntrinsicCache::from_parts(
        epsilon,
        frames.clone(),
        offsets,
        records,
        mesh_hash(mesh),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{synth, vertex_area_weights};

    fn aligned_frames(n: usize) -> TangentFrames {
        TangentFrames {
            e1: vec![Vector3::x(); n],
            e2: vec![Vector3::y(); n],
            normal: vec![Vector3::z(); n],
        }
    }

    #[test]
    fn wrap_angle_range() {
        for a in [-7.0, -PI, -0.1, 0.0, 0.1, PI, 7.0, 100.0] {
            let w = wrap_angle(a);
            assert!(w > -PI - 1e-15 && w <= PI + 1e-15, "{a} -> {w}");
            assert!(((w - a) / TAU).fract().abs() < 1e-12 || ((w - a) / TAU).fract().abs() > 1.0 - 1e-12);
        }
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
    }

    #[test]
    fn flat_mesh_frames_lie_in_plane() {
        let m = synth::grid_plane(4, 4, 1.0);
        let f = build_frames(&m).unwrap();
        for v in 0..m.n_vertices() {
            assert!(f.normal[v].x.abs() < 1e-12 && f.normal[v].y.abs() < 1e-12);
            assert!((f.normal[v].z.abs() - 1.0).abs() < 1e-12);
            assert!(f.e1[v].z.abs() < 1e-12);
            assert!(f.e2[v].z.abs() < 1e-12);
            assert!(f.e1[v].dot(&f.e2[v]).abs() < 1e-10);
            assert!((f.e1[v].norm() - 1.0).abs() < 1e-10);
            assert!((f.e1[v].cross(&f.e2[v]) - f.normal[v]).norm() < 1e-10);
        }
    }

    #[test]
    fn e1_points_to_lowest_index_neighbor() {
        // Vertex 3's lowest neighbor (vertex 0) lies along +x in the plane.
        let m = crate::mesh::TriMesh::new(
            vec![
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(2.0, 1.0, 0.0),
                Vector3::new(-1.0, 1.0, 0.0),
                Vector3::new(0.0, 0.0, 0.0),
            ],
            vec![[3, 0, 1], [3, 1, 2]],
        )
        .unwrap();
        let f = build_frames(&m).unwrap();
        assert!((f.e1[3] - Vector3::x()).norm() < 1e-12);
    }

    #[test]
    fn sphere_frames_orthogonal_to_position() {
        let m = synth::icosphere(2);
        let f = build_frames(&m).unwrap();
        for v in 0..m.n_vertices() {
            let radial = m.vertices[v].normalize();
            let angle = f.normal[v].dot(&radial).clamp(-1.0, 1.0).acos();
            assert!(angle < 0.1, "vertex {v}: normal off radial by {angle}");
            assert!(f.e1[v].dot(&radial).abs() < 0.1);
        }
    }

    #[test]
    fn flat_one_ring_log_is_exact() {
        let h = 0.25;
        let m = synth::grid_plane(5, 5, h);
        let f = build_frames(&m).unwrap();
        let p = 2 * 5 + 2;
        let ball = log_map_ball(&m, &f, p, 1.9 * h);
        assert!(!ball.is_empty());
        for entry in &ball {
            let d = m.vertices[entry.q as usize] - m.vertices[p];
            let expected_r = d.norm();
            let expected_theta = f.e2[p].dot(&d).atan2(f.e1[p].dot(&d));
            assert!((entry.r - expected_r).abs() < 1e-9);
            assert!(wrap_angle(entry.theta - expected_theta).abs() < 1e-9);
        }
        // The neighbor one edge along e1 has theta = 0.
        let e1_neighbor = ball
            .iter()
            .find(|e| {
                let d = m.vertices[e.q as usize] - m.vertices[p];
                (d.normalize() - f.e1[p]).norm() < 1e-9
            })
            .expect("grid interior has a neighbor along e1");
        assert!((e1_neighbor.r - h * 2f64.sqrt()).abs() < 1e-9);
        assert!(e1_neighbor.theta.abs() < 1e-9);
    }

    #[test]
    fn epsilon_below_shortest_edge_gives_empty_ball() {
        let m = synth::grid_plane(4, 4, 1.0);
        let f = build_frames(&m).unwrap();
        assert!(log_map_ball(&m, &f, 5, 0.5).is_empty());
    }

    #[test]
    fn flat_fine_grid_matches_euclidean_log() {
        let h = 0.1;
        let eps = 1.0;
        let m = synth::grid_plane(21, 21, h);
        let f = build_frames(&m).unwrap();
        let p = 10 * 21 + 10;
        let ball = log_map_ball(&m, &f, p, eps);
        assert!(ball.len() > 200);
        for entry in &ball {
            let d = m.vertices[entry.q as usize] - m.vertices[p];
            let er = d.norm();
            let et = f.e2[p].dot(&d).atan2(f.e1[p].dot(&d));
            assert!((entry.r - er).abs() / er < 0.05, "radius error at q={}", entry.q);
            assert!(wrap_angle(entry.theta - et).abs() < 0.05);
        }
    }

    #[test]
    fn flat_grid_aligned_frames_have_zero_transport() {
        let m = synth::grid_plane(6, 6, 0.5);
        let frames = aligned_frames(m.n_vertices());
        let w = vertex_area_weights(&m);
        let cache = assemble_cache(&m, &frames, &w, 1.1, IsolatedPolicy::Error).unwrap();
        for rec in &cache.records {
            assert!(rec.phi_pq.abs() < 1e-9, "phi = {}", rec.phi_pq);
        }
        // Frames from the deterministic edge rule are aligned on the grid
        // interior; interior-interior pairs transport trivially as well.
        let built = build_frames(&m).unwrap();
        let cache2 = assemble_cache(&m, &built, &w, 1.1, IsolatedPolicy::Error).unwrap();
        let interior = |v: usize| !m.boundary[v];
        for p in 0..m.n_vertices() {
            if !interior(p) {
                continue;
            }
            for rec in cache2.neighbors(p) {
                if interior(rec.q as usize) {
                    assert!(rec.phi_pq.abs() < 0.02);
                }
            }
        }
    }

    #[test]
    fn weights_sum_to_one_per_center() {
        let m = synth::icosphere(1);
        let f = build_frames(&m).unwrap();
        let w = vertex_area_weights(&m);
        let cache = assemble_cache(&m, &f, &w, 0.8, IsolatedPolicy::Error).unwrap();
        for p in 0..m.n_vertices() {
            let sum: f64 = cache.neighbors(p).iter().map(|r| r.w).sum();
            assert!((sum - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn reciprocity_holds_exactly() {
        let m = synth::uv_sphere(8, 12);
        let f = build_frames(&m).unwrap();
        let w = vertex_area_weights(&m);
        let cache = assemble_cache(&m, &f, &w, 0.7, IsolatedPolicy::Error).unwrap();
        assert!(!cache.records.is_empty());
        for rec in &cache.records {
            // Defining construction: phi is exactly the stored formula.
            let phi = wrap_angle(rec.theta_pq + PI - rec.theta_qp);
            assert_eq!(rec.phi_pq.to_bits(), phi.to_bits());
            // Rearranged mod-2pi identity, up to rounding from re-wrapping.
            let rhs = wrap_angle(rec.theta_qp + rec.phi_pq + PI);
            assert!(wrap_angle(rec.theta_pq - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn membership_is_symmetric_and_sorted() {
        let m = synth::uv_sphere(7, 11);
        let f = build_frames(&m).unwrap();
        let w = vertex_area_weights(&m);
        let cache = assemble_cache(&m, &f, &w, 0.8, IsolatedPolicy::Error).unwrap();
        for p in 0..m.n_vertices() {
            let recs = cache.neighbors(p);
            for pair in recs.windows(2) {
                assert!(pair[0].q < pair[1].q);
            }
            for rec in recs {
                let back = cache.neighbors(rec.q as usize);
                assert!(back.binary_search_by_key(&(p as u32), |r| r.q).is_ok());
            }
        }
    }

    #[test]
    fn cone_holonomy_matches_angle_deficit() {
        let deficit = 0.8;
        let cols = 16;
        let m = cone_mesh(deficit, cols);
        let f = build_frames(&m).unwrap();
        let w = vertex_area_weights(&m);
        // Support radius that safely covers adjacent ring-1 vertices.
        let ring_gap = (m.vertices[1] - m.vertices[2]).norm();
        let cache =
            assemble_cache(&m, &f, &w, 1.6 * ring_gap, IsolatedPolicy::ExpandOneRing).unwrap();
        let mut holonomy = 0.0;
        for j in 0..cols {
            let p = 1 + (j + 1) % cols; // center
            let q = 1 + j; // previous ring vertex
            let rec = cache
                .neighbors(p)
                .iter()
                .find(|r| r.q as usize == q)
                .expect("adjacent ring vertices share a ball");
            holonomy += rec.phi_pq;
        }
        // Frames wind around the apex, so the raw sum sits in another 2*pi
        // branch; the wrapped total is the physical holonomy.
        let hol = wrap_angle(holonomy).abs();
        let err = (hol - deficit).abs() / deficit;
        assert!(err < 0.10, "holonomy {hol} vs deficit {deficit}");
    }

    fn cone_mesh(deficit: f64, cols: usize) -> crate::mesh::TriMesh {
        synth::cone(deficit, cols, &[0.5, 1.0, 1.5])
    }

    #[test]
    fn empty_ball_policy() {
        let m = synth::grid_plane(4, 4, 1.0);
        let f = build_frames(&m).unwrap();
        let w = vertex_area_weights(&m);
        let err = assemble_cache(&m, &f, &w, 0.2, IsolatedPolicy::Error).unwrap_err();
        assert!(matches!(err, Error::EmptyNeighborhood { .. }));
        let cache = assemble_cache(&m, &f, &w, 0.2, IsolatedPolicy::ExpandOneRing).unwrap();
        for p in 0..m.n_vertices() {
            assert!(!cache.neighbors(p).is_empty());
            let sum: f64 = cache.neighbors(p).iter().map(|r| r.w).sum();
            assert!((sum - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn cache_is_deterministic() {
        let m = synth::uv_sphere(9, 13);
        let f = build_frames(&m).unwrap();
        let w = vertex_area_weights(&m);
        let a = assemble_cache(&m, &f, &w, 0.6, IsolatedPolicy::Error).unwrap();
        let b = assemble_cache(&m, &f, &w, 0.6, IsolatedPolicy::Error).unwrap();
        assert_eq!(a, b);
    }
}
