//! Binary cache format (little-endian):
//!
//! ```text
//! magic "FCPC" | version u32 = 1 | |V| u32 | epsilon f64 | mesh hash 32 B
//! per vertex: e1 (3 f64), e2 (3 f64), neighbor count u32,
//!   per neighbor: q u32, w f64, r f64, theta_qp f64, theta_pq f64, phi_pq f64
//! ```
//!
//! Floats round-trip bitwise.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;

use super::{IntrinsicCache, NeighborRecord, TangentFrames};
use crate::{Error, Result};

const MAGIC: [u8; 4] = *b"FCPC";
const VERSION: u32 = 1;

pub fn save_cache(cache: &IntrinsicCache, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(cache.n_vertices() as u32).to_le_bytes())?;
    w.write_all(&cache.epsilon.to_le_bytes())?;
    w.write_all(&cache.mesh_hash)?;
    for v in 0..cache.n_vertices() {
        for vec in [&cache.frames.e1[v], &cache.frames.e2[v]] {
            for c in [vec.x, vec.y, vec.z] {
                w.write_all(&c.to_le_bytes())?;
            }
        }
        let recs = cache.neighbors(v);
        w.write_all(&(recs.len() as u32).to_le_bytes())?;
        for rec in recs {
            w.write_all(&rec.q.to_le_bytes())?;
            for f in [rec.w, rec.r, rec.theta_qp, rec.theta_pq, rec.phi_pq] {
                w.write_all(&f.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_cache(path: &Path) -> Result<IntrinsicCache> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic)?;
    if magic != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: VERSION,
        });
    }
    let n = read_u32(&mut r)? as usize;
    let epsilon = read_f64(&mut r)?;
    let mut mesh_hash = [0u8; 32];
    read_exact(&mut r, &mut mesh_hash)?;
    let mut frames = TangentFrames {
        e1: Vec::with_capacity(n),
        e2: Vec::with_capacity(n),
        normal: Vec::with_capacity(n),
    };
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0usize);
    let mut records = Vec::new();
    for _ in 0..n {
        let e1 = read_vec3(&mut r)?;
        let e2 = read_vec3(&mut r)?;
        frames.normal.push(e1.cross(&e2));
        frames.e1.push(e1);
        frames.e2.push(e2);
        let count = read_u32(&mut r)? as usize;
        for _ in 0..count {
            let q = read_u32(&mut r)?;
            let w = read_f64(&mut r)?;
            let rr = read_f64(&mut r)?;
            let theta_qp = read_f64(&mut r)?;
            let theta_pq = read_f64(&mut r)?;
            let phi_pq = read_f64(&mut r)?;
            records.push(NeighborRecord {
                q,
                w,
                r: rr,
                theta_qp,
                theta_pq,
                phi_pq,
            });
        }
        offsets.push(records.len());
    }
    Ok(IntrinsicCache::from_parts(
        epsilon, frames, offsets, records, mesh_hash,
    ))
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Truncated
        } else {
            Error::Io(e)
        }
    })
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_vec3(r: &mut impl Read) -> Result<Vector3<f64>> {
    Ok(Vector3::new(read_f64(r)?, read_f64(r)?, read_f64(r)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intrinsic::{assemble_cache, build_frames, IsolatedPolicy};
    use crate::mesh::{synth, vertex_area_weights};

    fn sample_cache() -> IntrinsicCache {
        let m = synth::icosphere(1);
        let f = build_frames(&m).unwrap();
        let w = vertex_area_weights(&m);
        assemble_cache(&m, &f, &w, 0.8, IsolatedPolicy::Error).unwrap()
    }

    #[test]
    fn roundtrip_is_bitwise() {
        let cache = sample_cache();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ball.fcpc");
        save_cache(&cache, &path).unwrap();
        let back = load_cache(&path).unwrap();
        assert_eq!(back.epsilon.to_bits(), cache.epsilon.to_bits());
        assert_eq!(back.offsets, cache.offsets);
        assert_eq!(back.mesh_hash, cache.mesh_hash);
        for (a, b) in back.records.iter().zip(cache.records.iter()) {
            assert_eq!(a.q, b.q);
            for (x, y) in [
                (a.w, b.w),
                (a.r, b.r),
                (a.theta_qp, b.theta_qp),
                (a.theta_pq, b.theta_pq),
                (a.phi_pq, b.phi_pq),
            ] {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.fcpc");
        std::fs::write(&path, b"NOPE0000").unwrap();
        assert!(matches!(load_cache(&path), Err(Error::BadMagic)));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let cache = sample_cache();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cut.fcpc");
        save_cache(&cache, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load_cache(&path), Err(Error::Truncated)));
    }

    #[test]
    fn hash_mismatch_against_other_mesh() {
        let cache = sample_cache();
        let other = synth::uv_sphere(6, 9);
        assert!(matches!(
            cache.verify_mesh(&other),
            Err(Error::MeshHashMismatch)
        ));
    }
}
