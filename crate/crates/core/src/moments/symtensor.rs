use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::index::{multiset_count, multiset_rank, multisets, Multisets};

/// Dense symmetric tensor stored once per nondecreasing index tuple (colex).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    order: usize,
    dim: usize,
    data: Vec<f64>,
}

impl SymTensor {
    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        if !matches!(order, 2 | 3 | 4 | 6) {
            return Err(Error::UnsupportedOrder(order));
        }
        Ok(Self { order, dim, data: vec![0.0; multiset_count(dim, order)] })
    }

    pub fn from_data(order: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        let t = Self::zeros(order, dim)?;
        if data.len() != t.data.len() {
            return Err(Error::Format(format!(
                "order-{order} tensor over dim {dim} needs {} entries, got {}",
                t.data.len(),
                data.len()
            )));
        }
        Ok(Self { data, ..t })
    }

    /// Evaluates `f` at every canonical tuple.
    pub fn from_fn<F>(order: usize, dim: usize, f: F) -> Result<Self>
    where
        F: Fn(&[usize]) -> f64 + Sync + Send,
    {
        let t = Self::zeros(order, dim)?;
        let tuples: Vec<Vec<usize>> = multisets(dim, order).collect();
        let data = tuples.par_iter().map(|idx| f(idx)).collect();
        Ok(Self { data, ..t })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn tuples(&self) -> Multisets {
        multisets(self.dim, self.order)
    }

    fn position(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order);
        let mut buf = [0usize; 6];
        let t = &mut buf[..self.order];
        t.copy_from_slice(idx);
        t.sort_unstable();
        multiset_rank(t)
    }

    /// Entry at an arbitrary index order. Panics on out-of-range indices.
    pub fn get(&self, idx: &[usize]) -> f64 {
        assert!(idx.iter().all(|&i| i < self.dim), "index out of range");
        self.data[self.position(idx)]
    }

    pub fn entry(&self, idx: &[usize]) -> Result<f64> {
        if idx.len() != self.order {
            return Err(Error::Format(format!("expected {} indices", self.order)));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.dim) {
            return Err(Error::IndexOutOfRange { index: bad, dim: self.dim });
        }
        Ok(self.data[self.position(idx)])
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let p = self.position(idx);
        self.data[p] = value;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &SymTensor) -> f64 {
        assert_eq!((self.order, self.dim), (other.order, other.dim));
        self.data.iter().zip(&other.data).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Full `dim^order` array in row-major index order.
    pub fn to_dense(&self) -> Vec<f64> {
        let total = self.dim.pow(self.order as u32);
        let mut out = vec![0.0; total];
        let mut idx = vec![0usize; self.order];
        for (flat, slot) in out.iter_mut().enumerate() {
            let mut rem = flat;
            for r in (0..self.order).rev() {
                idx[r] = rem % self.dim;
                rem /= self.dim;
            }
            *slot = self.data[self.position(&idx)];
        }
        out
    }

    /// Multilinear contraction `T(F, .., F)` with `F` of shape `dim x m`.
    ///
    /// Goes through the dense array, so it is limited to moderate `dim^order`.
    pub fn contract(&self, frame: &DMatrix<f64>) -> Result<SymTensor> {
        if frame.nrows() != self.dim {
            return Err(Error::Format("frame rows must equal tensor dimension".into()));
        }
        let (d, m) = (self.dim, frame.ncols());
        if d.pow(self.order as u32) > 50_000_000 {
            return Err(Error::Unsupported(format!("contract an order-{} tensor over dim {d}", self.order)));
        }
        // mode products, one axis at a time; the working array has shape
        // (m,)*t + (d,)*(order-t) in row-major order
        let mut cur = self.to_dense();
        for t in 0..self.order {
            let lead = m.pow(t as u32);
            let tail = d.pow((self.order - t - 1) as u32);
            let mut next = vec![0.0; lead * m * tail];
            for a in 0..lead {
                for i in 0..d {
                    let src = &cur[(a * d + i) * tail..(a * d + i + 1) * tail];
                    for c in 0..m {
                        let f = frame[(i, c)];
                        if f == 0.0 {
                            continue;
                        }
                        let dst = &mut next[(a * m + c) * tail..(a * m + c + 1) * tail];
                        for (x, y) in dst.iter_mut().zip(src) {
                            *x += f * y;
                        }
                    }
                }
            }
            cur = next;
        }
        let out = SymTensor::from_fn(self.order, m, |idx| {
            let mut flat = 0;
            for &i in idx {
                flat = flat * m + i;
            }
            cur[flat]
        })?;
        Ok(out)
    }
}
