use thiserror::Error;

/// Errors raised by mesh loading, intrinsic precomputation, and the
/// operator/network kernels. Variants that point at a specific element carry
/// its index so callers can report the offending primitive.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("face {face} references vertex {index} but the mesh has {n_vertices} vertices")]
    FaceIndexOutOfRange {
        face: usize,
        index: usize,
        n_vertices: usize,
    },

    #[error("face {face} is degenerate (repeated vertex index)")]
    DegenerateFace { face: usize },

    #[error("vertex {vertex} is not referenced by any face")]
    IsolatedVertex { vertex: usize },

    #[error("edge ({a}, {b}) is shared by more than two faces")]
    NonManifoldEdge { a: usize, b: usize },

    #[error("edge ({a}, {b}) is traversed twice in the same direction (inconsistent orientation)")]
    InconsistentOrientation { a: usize, b: usize },

    #[error("mesh has zero surface area")]
    ZeroArea,

    #[error("rotation matrix is not orthonormal within 1e-10")]
    NonOrthonormalRotation,

    #[error("sample count {requested} out of range for {n_vertices} vertices")]
    SampleCountOutOfRange {
        requested: usize,
        n_vertices: usize,
    },

    #[error("vertex {vertex} has a degenerate tangent frame")]
    DegenerateFrame { vertex: usize },

    #[error(
        "{count} vertices have empty neighborhoods at radius {epsilon} (first: vertex {first})"
    )]
    EmptyNeighborhood {
        count: usize,
        first: usize,
        epsilon: f64,
    },

    #[error("cache file has wrong magic bytes")]
    BadMagic,

    #[error("cache file version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("cache file is truncated")]
    Truncated,

    #[error("cache mesh hash does not match the provided mesh")]
    MeshHashMismatch,

    #[error("filter evaluated at |z| = {radius} outside support radius {epsilon}")]
    OutsideSupport { radius: f64, epsilon: f64 },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("filter support radius {filter} does not match cache radius {cache}")]
    EpsilonMismatch { filter: f64, cache: f64 },

    #[error("backward target is not a scalar (length {len})")]
    LossNotScalar { len: usize },

    #[error("node {node} is not on this tape")]
    DetachedNode { node: usize },

    #[error("invalid class index {class} for {n_classes} classes")]
    InvalidClass { class: usize, n_classes: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn dim(context: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
        }
    }
}
