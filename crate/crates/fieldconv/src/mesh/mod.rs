//! Triangle-mesh representation and the geometry utilities shared by the
//! intrinsic precomputation and the task pipelines.

use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};

use crate::{Error, Result};

pub mod io;
pub mod sample;
pub mod synth;

pub use sample::farthest_point_sample;

/// An indexed triangle mesh. Construction goes through [`TriMesh::new`],
/// which validates connectivity: in-range indices, no degenerate faces, no
/// isolated vertices, edge-manifoldness, and consistent orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub faces: Vec<[u32; 3]>,
    /// True for vertices on a boundary edge (an edge with one incident face).
    pub boundary: Vec<bool>,
}

/// Per-vertex area weights: one third of the incident one-ring area.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaWeights {
    pub w: Vec<f64>,
}

impl TriMesh {
    /// Builds and validates a mesh from raw buffers.
    pub fn new(vertices: Vec<Vector3<f64>>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len();
        let mut referenced = vec![false; n];
        // Undirected edge -> (face count, directed (a,b) seen).
        let mut edges: HashMap<(u32, u32), (u8, bool, bool)> = HashMap::new();
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v as usize >= n {
                    return Err(Error::FaceIndexOutOfRange {
                        face: fi,
                        index: v as usize,
                        n_vertices: n,
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::DegenerateFace { face: fi });
            }
            for &v in f {
                referenced[v as usize] = true;
            }
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                let entry = edges.entry(key).or_insert((0, false, false));
                entry.0 += 1;
                if entry.0 > 2 {
                    return Err(Error::NonManifoldEdge {
                        a: key.0 as usize,
                        b: key.1 as usize,
                    });
                }
                let forward = a < b;
                let seen = if forward { &mut entry.1 } else { &mut entry.2 };
                if *seen {
                    return Err(Error::InconsistentOrientation {
                        a: a as usize,
                        b: b as usize,
                    });
                }
                *seen = true;
            }
        }
        if let Some(v) = referenced.iter().position(|r| !r) {
            return Err(Error::IsolatedVertex { vertex: v });
        }
        let mut boundary = vec![false; n];
        for (&(a, b), &(count, _, _)) in edges.iter() {
            if count == 1 {
                boundary[a as usize] = true;
                boundary[b as usize] = true;
            }
        }
        Ok(TriMesh {
            vertices,
            faces,
            boundary,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        let p0 = self.vertices[a as usize];
        let p1 = self.vertices[b as usize];
        let p2 = self.vertices[c as usize];
        0.5 * (p1 - p0).cross(&(p2 - p0)).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_faces()).map(|f| self.face_area(f)).sum()
    }

    /// Axis-aligned bounding-box diagonal length.
    pub fn bbox_diagonal(&self) -> f64 {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for p in &self.vertices {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (hi - lo).norm()
    }

    /// Undirected edges as sorted `(a, b)` pairs with `a < b`, ascending.
    pub fn undirected_edges(&self) -> Vec<(u32, u32)> {
        let mut edges: Vec<(u32, u32)> = Vec::with_capacity(self.n_faces() * 3 / 2);
        for f in &self.faces {
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }
}

/// Scales the mesh so its total surface area is 1. Returns the scaled mesh
/// and the applied factor `1/sqrt(area)`, which callers keep to undo the
/// normalization.
pub fn normalize_unit_area(mesh: &TriMesh) -> Result<(TriMesh, f64)> {
    let area = mesh.total_area();
    if !(area > 0.0) {
        return Err(Error::ZeroArea);
    }
    let scale = 1.0 / area.sqrt();
    let mut out = mesh.clone();
    for p in &mut out.vertices {
        *p *= scale;
    }
    Ok((out, scale))
}

/// One third of each vertex's one-ring area. The weights sum to the total
/// mesh area because every face contributes a third to exactly three vertices.
pub fn vertex_area_weights(mesh: &TriMesh) -> AreaWeights {
    let mut w = vec![0.0; mesh.n_vertices()];
    for (fi, f) in mesh.faces.iter().enumerate() {
        let third = mesh.face_area(fi) / 3.0;
        for &v in f {
            w[v as usize] += third;
        }
    }
    AreaWeights { w }
}

/// Applies `p -> R p + t` to all vertex positions. `rotation` must be
/// orthonormal with positive determinant within 1e-10.
pub fn rigid_transform(
    mesh: &TriMesh,
    rotation: &Matrix3<f64>,
    translation: &Vector3<f64>,
) -> Result<TriMesh> {
    let gram = rotation.transpose() * rotation;
    let dev = (gram - Matrix3::identity()).abs().max();
    if dev > 1e-10 || rotation.determinant() <= 0.0 {
        return Err(Error::NonOrthonormalRotation);
    }
    let mut out = mesh.clone();
    for p in &mut out.vertices {
        *p = rotation * *p + translation;
    }
    Ok(out)
}
