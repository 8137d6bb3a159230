//! Minimal dense-vector helpers shared across modules.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sq_norm(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    sq_norm(a).sqrt()
}

pub(crate) fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Largest Euclidean block norm over consecutive blocks of length `n`.
pub(crate) fn max_block_norm(a: &[f64], n: usize) -> f64 {
    a.chunks_exact(n).map(norm).fold(0.0_f64, f64::max)
}
