//! Thin wrappers that run per-index work on rayon when the `parallel`
//! feature is enabled and sequentially otherwise. Every reduction stays
//! ordered per output element, so both modes produce identical bytes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, preserving index order in the result.
pub(crate) fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Runs `f(row_index, row)` over consecutive chunks of `buf`.
pub(crate) fn for_each_row<T, F>(buf: &mut [T], stride: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    debug_assert!(stride > 0 && buf.len() % stride == 0);
    #[cfg(feature = "parallel")]
    {
        buf.par_chunks_mut(stride)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, row) in buf.chunks_mut(stride).enumerate() {
            f(i, row);
        }
    }
}

/// Runs `f(row_index, row_a, row_b)` over zipped chunks of two buffers.
pub(crate) fn for_each_row2<A, B, F>(
    a: &mut [A],
    stride_a: usize,
    b: &mut [B],
    stride_b: usize,
    f: F,
) where
    A: Send,
    B: Send,
    F: Fn(usize, &mut [A], &mut [B]) + Sync + Send,
{
    debug_assert!(a.len() / stride_a == b.len() / stride_b);
    #[cfg(feature = "parallel")]
    {
        a.par_chunks_mut(stride_a)
            .zip(b.par_chunks_mut(stride_b))
            .enumerate()
            .for_each(|(i, (ra, rb))| f(i, ra, rb));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, (ra, rb)) in a.chunks_mut(stride_a).zip(b.chunks_mut(stride_b)).enumerate() {
            f(i, ra, rb);
        }
    }
}

/// Runs `f(row_index, row_a, row_b, row_c)` over zipped chunks of three buffers.
pub(crate) fn for_each_row3<A, B, C, F>(
    a: &mut [A],
    stride_a: usize,
    b: &mut [B],
    stride_b: usize,
    c: &mut [C],
    stride_c: usize,
    f: F,
) where
    A: Send,
    B: Send,
    C: Send,
    F: Fn(usize, &mut [A], &mut [B], &mut [C]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        a.par_chunks_mut(stride_a)
            .zip(b.par_chunks_mut(stride_b))
            .zip(c.par_chunks_mut(stride_c))
            .enumerate()
            .for_each(|(i, ((ra, rb), rc))| f(i, ra, rb, rc));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, ((ra, rb), rc)) in a
            .chunks_mut(stride_a)
            .zip(b.chunks_mut(stride_b))
            .zip(c.chunks_mut(stride_c))
            .enumerate()
        {
            f(i, ra, rb, rc);
        }
    }
}
