//! Procedural meshes used by tests, benchmarks, and the synthetic datasets:
//! planar grids, icosahedra/icospheres, lathe surfaces (UV spheres,
//! capsules), and cones with a prescribed apex angle deficit.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::Vector3;

use super::TriMesh;

/// Regular triangulated grid in the z = 0 plane: `nx * ny` vertices with
/// spacing `h`, each quad split along its (i, j) -> (i+1, j+1) diagonal.
/// Vertex (i, j) has index `i * ny + j`; interior vertices therefore have six
/// incident triangles and their lowest-index neighbor lies along (-1, -1).
pub fn grid_plane(nx: usize, ny: usize, h: f64) -> TriMesh {
    assert!(nx >= 2 && ny >= 2);
    let mut vertices = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            vertices.push(Vector3::new(i as f64 * h, j as f64 * h, 0.0));
        }
    }
    let at = |i: usize, j: usize| (i * ny + j) as u32;
    let mut faces = Vec::with_capacity((nx - 1) * (ny - 1) * 2);
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            faces.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
            faces.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
        }
    }
    TriMesh::new(vertices, faces).expect("grid construction is manifold")
}

/// Unit-circumradius icosahedron.
pub fn icosahedron() -> TriMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let s = 1.0 / (1.0 + phi * phi).sqrt();
    let a = s;
    let b = phi * s;
    let vertices = vec![
        Vector3::new(-a, b, 0.0),
        Vector3::new(a, b, 0.0),
        Vector3::new(-a, -b, 0.0),
        Vector3::new(a, -b, 0.0),
        Vector3::new(0.0, -a, b),
        Vector3::new(0.0, a, b),
        Vector3::new(0.0, -a, -b),
        Vector3::new(0.0, a, -b),
        Vector3::new(b, 0.0, -a),
        Vector3::new(b, 0.0, a),
        Vector3::new(-b, 0.0, -a),
        Vector3::new(-b, 0.0, a),
    ];
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    TriMesh::new(vertices, faces).expect("icosahedron is manifold")
}

/// Icosphere from `subdivisions` rounds of midpoint refinement, vertices on
/// the unit sphere.
pub fn icosphere(subdivisions: usize) -> TriMesh {
    let mut mesh = icosahedron();
    for _ in 0..subdivisions {
        let mut midpoints: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        let mut vertices = mesh.vertices.clone();
        let mut faces = Vec::with_capacity(mesh.faces.len() * 4);
        let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<Vector3<f64>>| -> u32 {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let p = (vertices[a as usize] + vertices[b as usize]).normalize();
                vertices.push(p);
                (vertices.len() - 1) as u32
            })
        };
        for f in &mesh.faces {
            let [a, b, c] = *f;
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            faces.push([a, ab, ca]);
            faces.push([b, bc, ab]);
            faces.push([c, ca, bc]);
            faces.push([ab, bc, ca]);
        }
        mesh = TriMesh::new(vertices, faces).expect("subdivision preserves manifoldness");
    }
    mesh
}

/// Surface of revolution: `rings` lists (radius, z) from top to bottom, a
/// pole vertex is added above the first ring and below the last. Each ring
/// has `cols` vertices; ring `r`, column `j` has index `1 + r * cols + j`.
pub fn lathe(rings: &[(f64, f64)], cols: usize, north_z: f64, south_z: f64) -> TriMesh {
    assert!(rings.len() >= 2 && cols >= 3);
    let n_rings = rings.len();
    let mut vertices = Vec::with_capacity(2 + n_rings * cols);
    vertices.push(Vector3::new(0.0, 0.0, north_z));
    for &(radius, z) in rings {
        for j in 0..cols {
            let a = 2.0 * PI * j as f64 / cols as f64;
            vertices.push(Vector3::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    let south = vertices.len() as u32;
    vertices.push(Vector3::new(0.0, 0.0, south_z));
    let at = |r: usize, j: usize| (1 + r * cols + j % cols) as u32;
    let mut faces = Vec::new();
    for j in 0..cols {
        faces.push([0, at(0, j), at(0, j + 1)]);
    }
    for r in 0..n_rings - 1 {
        for j in 0..cols {
            faces.push([at(r, j), at(r + 1, j), at(r + 1, j + 1)]);
            faces.push([at(r, j), at(r + 1, j + 1), at(r, j + 1)]);
        }
    }
    for j in 0..cols {
        faces.push([south, at(n_rings - 1, j + 1), at(n_rings - 1, j)]);
    }
    TriMesh::new(vertices, faces).expect("lathe surface is manifold")
}

/// UV sphere with `rows` latitude rings and `cols` longitudes (unit radius).
pub fn uv_sphere(rows: usize, cols: usize) -> TriMesh {
    let rings: Vec<(f64, f64)> = (1..=rows)
        .map(|i| {
            let theta = PI * i as f64 / (rows + 1) as f64;
            (theta.sin(), theta.cos())
        })
        .collect();
    lathe(&rings, cols, 1.0, -1.0)
}

/// Capsule: cylinder of half-length `half_len` and radius `radius` with
/// hemispherical caps. Returns the mesh and a per-vertex flag that is true
/// on the caps (junction circles included) and false on the open cylinder.
pub fn capsule(
    radius: f64,
    half_len: f64,
    cols: usize,
    cap_rows: usize,
    cyl_rows: usize,
) -> (TriMesh, Vec<bool>) {
    assert!(cap_rows >= 1 && cyl_rows >= 1);
    let mut rings = Vec::new();
    let mut ring_is_cap = Vec::new();
    for k in 1..=cap_rows {
        let a = 0.5 * PI * k as f64 / cap_rows as f64;
        rings.push((radius * a.sin(), half_len + radius * a.cos()));
        ring_is_cap.push(true);
    }
    for j in 1..=cyl_rows {
        let z = half_len - 2.0 * half_len * j as f64 / (cyl_rows + 1) as f64;
        rings.push((radius, z));
        ring_is_cap.push(false);
    }
    rings.push((radius, -half_len));
    ring_is_cap.push(true);
    for k in 1..cap_rows {
        let a = 0.5 * PI * k as f64 / cap_rows as f64;
        rings.push((radius * a.cos(), -half_len - radius * a.sin()));
        ring_is_cap.push(true);
    }
    let cols_total = rings.len() * cols;
    let mesh = lathe(&rings, cols, half_len + radius, -half_len - radius);
    let mut flags = vec![true; mesh.n_vertices()];
    for (r, &cap) in ring_is_cap.iter().enumerate() {
        for j in 0..cols {
            flags[1 + r * cols + j] = cap;
        }
    }
    debug_assert_eq!(mesh.n_vertices(), 2 + cols_total);
    (mesh, flags)
}

/// Cone with apex angle deficit `deficit`: the intrinsic angle around the
/// apex is `2*pi - deficit`. `ring_slants` gives the slant distances of the
/// vertex rings (ascending), each with `cols` vertices; the outermost ring is
/// an open boundary. The lateral surface is intrinsically flat away from the
/// apex, so transport composed around a ring encircling the apex accumulates
/// holonomy equal to the deficit.
pub fn cone(deficit: f64, cols: usize, ring_slants: &[f64]) -> TriMesh {
    assert!(deficit > 0.0 && deficit < 2.0 * PI);
    assert!(cols >= 3 && !ring_slants.is_empty());
    let kappa = 1.0 - deficit / (2.0 * PI);
    let cos_gamma = (1.0 - kappa * kappa).sqrt();
    let mut vertices = vec![Vector3::zeros()];
    for &s in ring_slants {
        for j in 0..cols {
            let a = 2.0 * PI * j as f64 / cols as f64;
            vertices.push(Vector3::new(
                s * kappa * a.cos(),
                s * kappa * a.sin(),
                -s * cos_gamma,
            ));
        }
    }
    let at = |r: usize, j: usize| (1 + r * cols + j % cols) as u32;
    let mut faces = Vec::new();
    for j in 0..cols {
        faces.push([0, at(0, j), at(0, j + 1)]);
    }
    for r in 0..ring_slants.len() - 1 {
        for j in 0..cols {
            faces.push([at(r, j), at(r + 1, j), at(r + 1, j + 1)]);
            faces.push([at(r, j), at(r + 1, j + 1), at(r, j + 1)]);
        }
    }
    TriMesh::new(vertices, faces).expect("cone fan is manifold")
}
