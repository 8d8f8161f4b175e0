use std::sync::Arc;

use rand::Rng;

use crate::scalar::{lit, Scalar};

use super::glorot_limit;

/// Fully connected layer whose weight rows are shared copy-on-write.
///
/// Cloning a layer clones row handles only; a row is copied the first time a
/// clone writes to it. Agents forked from one checkpoint therefore share the
/// bulk of their weights.
#[derive(Debug, Clone)]
pub struct DenseLayer<T> {
    in_dim: usize,
    rows: Vec<Arc<Vec<T>>>,
    biases: Vec<T>,
}

impl<T: Scalar> PartialEq for DenseLayer<T> {
    fn eq(&self, other: &Self) -> bool {
        self.in_dim == other.in_dim
            && self.biases == other.biases
            && self.rows.iter().zip(&other.rows).all(|(a, b)| Arc::ptr_eq(a, b) || a == b)
    }
}

impl<T: Scalar> DenseLayer<T> {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        let zero = Arc::new(vec![T::zero(); in_dim]);
        Self { in_dim, rows: vec![zero; out_dim], biases: vec![T::zero(); out_dim] }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng>(out_dim: usize, in_dim: usize, rng: &mut R) -> Self {
        let limit = glorot_limit(in_dim, out_dim);
        // One 32-bit draw per weight keeps initialising the 19200-wide head cheap.
        let scale = 2.0 * limit / f64::from(u32::MAX);
        let rows = (0..out_dim)
            .map(|_| Arc::new((0..in_dim).map(|_| lit::<T>(f64::from(rng.next_u32()) * scale - limit)).collect()))
            .collect();
        Self { in_dim, rows, biases: vec![T::zero(); out_dim] }
    }

    pub fn from_rows(in_dim: usize, rows: Vec<Vec<T>>, biases: Vec<T>) -> Option<Self> {
        if rows.len() != biases.len() || rows.iter().any(|r| r.len() != in_dim) {
            return None;
        }
        Some(Self { in_dim, rows: rows.into_iter().map(Arc::new).collect(), biases })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.rows[r]
    }

    /// Mutable access to one row, copying it first if it is shared.
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        Arc::make_mut(&mut self.rows[r]).as_mut_slice()
    }

    pub fn biases(&self) -> &[T] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [T] {
        &mut self.biases
    }

    pub fn param_count(&self) -> usize {
        self.rows.len() * self.in_dim + self.biases.len()
    }

    /// Number of rows not shared with any other layer.
    pub fn unique_rows(&self) -> usize {
        self.rows.iter().filter(|r| Arc::strong_count(r) == 1).count()
    }

    /// Pre-activation value of output `r`.
    #[inline]
    pub fn output(&self, r: usize, input: &[T]) -> T {
        self.biases[r] + dot(&self.rows[r], input)
    }
}

/// Dot product with a fixed eight-lane accumulation order.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 8];
    let chunks = a.len() / 8;
    for (ca, cb) in a.chunks_exact(8).zip(b.chunks_exact(8)) {
        for k in 0..8 {
            acc[k] = acc[k] + ca[k] * cb[k];
        }
    }
    let mut tail = T::zero();
    for i in chunks * 8..a.len() {
        tail = tail + a[i] * b[i];
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}
