//! OBJ and OFF readers plus an OFF writer. Only geometry is read: OBJ
//! `v`/`f` records (texture/normal references in face corners are stripped),
//! OFF header, vertex, and triangle lines. Floats are written with shortest
//! round-trip formatting, which carries at least 15 significant digits
//! whenever they are needed.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Vector3;

use crate::{Error, Result};

/// Supported mesh file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Off,
}

impl MeshFormat {
    /// Picks a format from the file extension (`.obj` / `.off`, any case).
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("obj") => Ok(MeshFormat::Obj),
            Some("off") => Ok(MeshFormat::Off),
            other => Err(Error::InvalidArgument(format!(
                "cannot infer mesh format from extension {:?}",
                other
            ))),
        }
    }
}

/// Loads and validates a mesh file.
pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<super::TriMesh> {
    let text = fs::read_to_string(path)?;
    match format {
        MeshFormat::Obj => parse_obj(&text),
        MeshFormat::Off => parse_off(&text),
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| parse_err(line, format!("invalid float {tok:?}")))
}

/// Parses OBJ text (`v` and `f` records; 1-based face indices).
pub fn parse_obj(text: &str) -> Result<super::TriMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in coords.iter_mut() {
                    let tok = toks
                        .next()
                        .ok_or_else(|| parse_err(line_no, "vertex needs three coordinates"))?;
                    *c = parse_f64(tok, line_no)?;
                }
                vertices.push(Vector3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let corners: Vec<&str> = toks.collect();
                if corners.len() != 3 {
                    return Err(parse_err(
                        line_no,
                        format!("expected a triangle, got {} corners", corners.len()),
                    ));
                }
                let mut idx = [0u32; 3];
                for (k, corner) in corners.iter().enumerate() {
                    let first = corner.split('/').next().unwrap_or("");
                    let v: i64 = first
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("invalid face index {first:?}")))?;
                    if v < 1 {
                        return Err(parse_err(
                            line_no,
                            format!("face index {v} out of range (OBJ indices are 1-based)"),
                        ));
                    }
                    idx[k] = (v - 1) as u32;
                }
                faces.push(idx);
            }
            // vn, vt, usemtl, mtllib, s, o, g and friends are ignored.
            _ => {}
        }
    }
    super::TriMesh::new(vertices, faces)
}

/// Parses OFF text. Trailing tokens after the three coordinates or the three
/// face indices (e.g. face colors) are ignored.
pub fn parse_off(text: &str) -> Result<super::TriMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (first_no, mut header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty OFF file"))?;
    if header == "OFF" {
        let (no, counts) = lines
            .next()
            .ok_or_else(|| parse_err(first_no, "missing OFF counts line"))?;
        header = counts;
        return parse_off_body(header, no, lines);
    }
    // Header and counts may share the first line ("OFF 8 12 18" is rare but legal).
    if let Some(rest) = header.strip_prefix("OFF") {
        if !rest.trim().is_empty() {
            return parse_off_body(rest.trim(), first_no, lines);
        }
    }
    parse_off_body(header, first_no, lines)
}

fn parse_off_body<'a>(
    counts: &str,
    counts_line: usize,
    mut lines: impl Iterator<Item = (usize, &'a str)>,
) -> Result<super::TriMesh> {
    let toks: Vec<&str> = counts.split_whitespace().collect();
    if toks.len() < 2 {
        return Err(parse_err(counts_line, "OFF counts line needs |V| and |F|"));
    }
    let nv: usize = toks[0]
        .parse()
        .map_err(|_| parse_err(counts_line, "invalid vertex count"))?;
    let nf: usize = toks[1]
        .parse()
        .map_err(|_| parse_err(counts_line, "invalid face count"))?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (no, line) = lines
            .next()
            .ok_or_else(|| parse_err(counts_line, "unexpected end of file in vertex list"))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(parse_err(no, "vertex line needs three coordinates"));
        }
        vertices.push(Vector3::new(
            parse_f64(toks[0], no)?,
            parse_f64(toks[1], no)?,
            parse_f64(toks[2], no)?,
        ));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (no, line) = lines
            .next()
            .ok_or_else(|| parse_err(counts_line, "unexpected end of file in face list"))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            return Err(parse_err(no, "empty face line"));
        }
        let arity: usize = toks[0]
            .parse()
            .map_err(|_| parse_err(no, "invalid face arity"))?;
        if arity != 3 {
            return Err(parse_err(no, format!("expected triangles, got arity {arity}")));
        }
        if toks.len() < 4 {
            return Err(parse_err(no, "face line needs three indices"));
        }
        let mut idx = [0u32; 3];
        for k in 0..3 {
            idx[k] = toks[k + 1]
                .parse()
                .map_err(|_| parse_err(no, format!("invalid face index {:?}", toks[k + 1])))?;
        }
        faces.push(idx);
    }
    super::TriMesh::new(vertices, faces)
}

/// Serializes a mesh as OFF text.
pub fn format_off(mesh: &super::TriMesh) -> String {
    let mut out = String::new();
    out.push_str("OFF\n");
    let _ = writeln!(out, "{} {} 0", mesh.n_vertices(), mesh.n_faces());
    for p in &mesh.vertices {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
    for f in &mesh.faces {
        let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
    }
    out
}

/// Writes a mesh to an OFF file.
pub fn save_off(mesh: &super::TriMesh, path: &Path) -> Result<()> {
    fs::write(path, format_off(mesh))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::synth;

    #[test]
    fn single_triangle_off() {
        let text = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        let m = parse_off(text).unwrap();
        assert_eq!(m.n_vertices(), 3);
        assert_eq!(m.n_faces(), 1);
    }

    #[test]
    fn obj_zero_index_is_parse_error() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n";
        let err = parse_obj(text).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }));
    }

    #[test]
    fn obj_with_corner_attributes() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2/2/1 3/3/1\n";
        let m = parse_obj(text).unwrap();
        assert_eq!(m.n_faces(), 1);
        assert_eq!(m.faces[0], [0, 1, 2]);
    }

    #[test]
    fn icosahedron_roundtrips_through_off() {
        let m = synth::icosahedron();
        assert_eq!(m.n_vertices(), 12);
        assert_eq!(m.n_faces(), 20);
        let text = format_off(&m);
        let back = parse_off(&text).unwrap();
        assert_eq!(back.faces, m.faces);
        for (a, b) in back.vertices.iter().zip(m.vertices.iter()) {
            // Shortest round-trip float formatting is exact.
            assert_eq!(a, b);
        }
    }

    #[test]
    fn off_quad_face_rejected() {
        let text = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        assert!(matches!(parse_off(text), Err(Error::Parse { .. })));
    }
}
