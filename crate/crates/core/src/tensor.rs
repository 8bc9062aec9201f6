//! Dense coordinate tensors with jet-valued or plain entries.
//!
//! Storage is row-major over `n^rank` entries; n stays small (charts are
//! capped at dimension 8) so density is the right trade.

use crate::expr::{Jet, JetSpace};
use std::sync::Arc;

pub fn flat_index(n: usize, idx: &[usize]) -> usize {
    let mut r = 0;
    for &i in idx {
        debug_assert!(i < n);
        r = r * n + i;
    }
    r
}

#[derive(Clone)]
pub struct JetTensor {
    pub n: usize,
    pub rank: usize,
    pub data: Vec<Jet>,
}

impl JetTensor {
    pub fn from_fn(n: usize, rank: usize, mut f: impl FnMut(&[usize]) -> Jet) -> JetTensor {
        let len = n.pow(rank as u32);
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; rank];
        for flat in 0..len {
            let mut rem = flat;
            for k in (0..rank).rev() {
                idx[k] = rem % n;
                rem /= n;
            }
            data.push(f(&idx));
        }
        JetTensor { n, rank, data }
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.data[flat_index(self.n, idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: Jet) {
        let i = flat_index(self.n, idx);
        self.data[i] = v;
    }

    pub fn order(&self) -> usize {
        self.data[0].order()
    }

    pub fn values(&self) -> Tensor {
        Tensor {
            n: self.n,
            rank: self.rank,
            data: self.data.iter().map(|j| j.value()).collect(),
        }
    }

    /// Truncate every entry to the given jet order.
    pub fn truncate(&self, order: usize) -> JetTensor {
        JetTensor {
            n: self.n,
            rank: self.rank,
            data: self.data.iter().map(|j| j.truncate(order)).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Tensor {
    pub n: usize,
    pub rank: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(n: usize, rank: usize) -> Tensor {
        Tensor {
            n,
            rank,
            data: vec![0.0; n.pow(rank as u32)],
        }
    }

    pub fn from_fn(n: usize, rank: usize, mut f: impl FnMut(&[usize]) -> f64) -> Tensor {
        let len = n.pow(rank as u32);
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; rank];
        for flat in 0..len {
            let mut rem = flat;
            for k in (0..rank).rev() {
                idx[k] = rem % n;
                rem /= n;
            }
            data.push(f(&idx));
        }
        Tensor { n, rank, data }
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[flat_index(self.n, idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let i = flat_index(self.n, idx);
        self.data[i] = v;
    }

    /// Euclidean norm of the raw coordinate components.
    pub fn coord_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Norm of the tensor with every slot contracted against a
    /// pseudo-orthonormal frame: sqrt of the sum of squared frame
    /// components. Positive definite in any signature.
    pub fn frame_norm(&self, frame_cols: &nalgebra::DMatrix<f64>) -> f64 {
        let n = self.n;
        let mut cur = self.data.clone();
        // contract one slot at a time with the frame columns
        for _slot in 0..self.rank {
            let stride = cur.len() / n;
            let mut next = vec![0.0; cur.len()];
            // treat the leading index as the slot being transformed, then
            // rotate so each slot is transformed exactly once
            for k in 0..n {
                for rest in 0..stride {
                    let mut acc = 0.0;
                    for a in 0..n {
                        acc += frame_cols[(a, k)] * cur[a * stride + rest];
                    }
                    // rotate indices: output layout puts the transformed slot last
                    next[rest * n + k] = acc;
                }
            }
            cur = next;
        }
        cur.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Convenience: jet space shared by all entries of a chart evaluation.
pub fn space_for(n: usize, order: usize) -> Arc<JetSpace> {
    JetSpace::get(n, order)
}
