//! Dense real tensors.
//!
//! Storage is row-major: the last axis varies fastest. A tensor with
//! `dims = [d0, d1, d2]` stores element `(i, j, k)` at offset
//! `(i * d1 + j) * d2 + k`. Axes carry no names; each call site documents
//! its own axis convention.

use faer::linalg::matmul::matmul;
use faer::{Accum, MatMut, MatRef, Par};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(dims: &[usize]) -> Self {
        let len = dims.iter().product();
        Self { dims: dims.to_vec(), data: vec![0.0; len] }
    }

    pub fn from_vec(dims: &[usize], data: Vec<f64>) -> Result<Self> {
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(Error::Dimension(format!(
                "dims {dims:?} hold {len} scalars but {} were given",
                data.len()
            )));
        }
        Ok(Self { dims: dims.to_vec(), data })
    }

    /// Builds a tensor by evaluating `f` at every multi-index in storage order.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let len: usize = dims.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..len {
            data.push(f(&idx));
            for ax in (0..dims.len()).rev() {
                idx[ax] += 1;
                if idx[ax] < dims[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        Self { dims: dims.to_vec(), data }
    }

    /// `n × n` identity matrix.
    pub fn identity(n: usize) -> Self {
        Self::from_fn(&[n, n], |i| if i[0] == i[1] { 1.0 } else { 0.0 })
    }

    /// Rank-2 tensor from nested rows.
    pub fn matrix<const R: usize, const C: usize>(rows: [[f64; C]; R]) -> Self {
        Self { dims: vec![R, C], data: rows.iter().flatten().copied().collect() }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
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

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        idx.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| {
            debug_assert!(i < d);
            acc * d + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let off = self.offset(idx);
        self.data[off] = value;
    }

    pub fn reshape(self, dims: &[usize]) -> Result<Self> {
        Self::from_vec(dims, self.data)
    }

    /// Returns the tensor with axes reordered so that output axis `k` is
    /// input axis `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        let rank = self.dims.len();
        assert_eq!(perm.len(), rank, "permutation length must equal rank");
        debug_assert!({
            let mut seen = vec![false; rank];
            perm.iter().all(|&p| p < rank && !std::mem::replace(&mut seen[p], true))
        });
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return self.clone();
        }

        let mut in_strides = vec![1usize; rank];
        for ax in (0..rank.saturating_sub(1)).rev() {
            in_strides[ax] = in_strides[ax + 1] * self.dims[ax + 1];
        }
        let out_dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();

        let mut data = Vec::with_capacity(self.data.len());
        if self.data.is_empty() {
            return Self { dims: out_dims, data };
        }
        // Innermost output axis handled as a strided run.
        let last = rank - 1;
        let (run, run_stride) = (out_dims[last], strides[last]);
        let mut idx = vec![0usize; rank];
        let mut base = 0usize;
        loop {
            data.extend((0..run).map(|k| self.data[base + k * run_stride]));
            let mut ax = last;
            loop {
                if ax == 0 {
                    return Self { dims: out_dims, data };
                }
                ax -= 1;
                idx[ax] += 1;
                base += strides[ax];
                if idx[ax] < out_dims[ax] {
                    break;
                }
                base -= strides[ax] * out_dims[ax];
                idx[ax] = 0;
            }
        }
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }

    pub fn scaled(mut self, alpha: f64) -> Self {
        self.scale(alpha);
        self
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &Tensor) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::Dimension(format!("{:?} vs {:?}", self.dims, other.dims)));
        }
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += alpha * b);
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        assert_eq!(self.dims, other.dims);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Views the storage as an `rows × (len / rows)` row-major matrix.
    pub fn as_mat(&self, rows: usize) -> MatRef<'_, f64> {
        let cols = if rows == 0 { 0 } else { self.data.len() / rows };
        assert_eq!(rows * cols, self.data.len());
        MatRef::from_row_major_slice(&self.data, rows, cols)
    }
}

/// Dense `a (m×k) · b (k×n)` over row-major slices, written into a fresh buffer.
pub(crate) fn matmul_slices(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    if m == 0 || n == 0 {
        return out;
    }
    if k == 0 {
        return out;
    }
    let lhs = MatRef::from_row_major_slice(a, m, k);
    let rhs = MatRef::from_row_major_slice(b, k, n);
    let dst = MatMut::from_row_major_slice_mut(&mut out, m, n);
    matmul(dst, Accum::Replace, lhs, rhs, 1.0, Par::Seq);
    out
}

/// Copies a faer matrix into a row-major rank-2 tensor.
pub(crate) fn tensor_from_mat(m: MatRef<'_, f64>) -> Tensor {
    let (r, c) = (m.nrows(), m.ncols());
    let mut data = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            data.push(m[(i, j)]);
        }
    }
    Tensor { dims: vec![r, c], data }
}

/// Contracts `a` with `b` over the given `(axis of a, axis of b)` pairs.
///
/// The result carries the unpaired axes of `a` in order, followed by the
/// unpaired axes of `b` in order. The reduction is a single GEMM after
/// permuting, so its summation order is fixed for given shapes.
pub fn contract(a: &Tensor, b: &Tensor, pairs: &[(usize, usize)]) -> Result<Tensor> {
    let mut a_paired = vec![false; a.rank()];
    let mut b_paired = vec![false; b.rank()];
    for &(ia, ib) in pairs {
        if ia >= a.rank() || ib >= b.rank() {
            return Err(Error::Dimension(format!(
                "axis pair ({ia}, {ib}) out of range for ranks {} and {}",
                a.rank(),
                b.rank()
            )));
        }
        if a_paired[ia] || b_paired[ib] {
            return Err(Error::Dimension(format!("axis pair ({ia}, {ib}) repeats an axis")));
        }
        if a.dims[ia] != b.dims[ib] {
            return Err(Error::Dimension(format!(
                "axis {ia} of a has extent {} but axis {ib} of b has extent {}",
                a.dims[ia], b.dims[ib]
            )));
        }
        a_paired[ia] = true;
        b_paired[ib] = true;
    }

    let a_free: Vec<usize> = (0..a.rank()).filter(|&i| !a_paired[i]).collect();
    let b_free: Vec<usize> = (0..b.rank()).filter(|&i| !b_paired[i]).collect();

    let a_perm: Vec<usize> = a_free.iter().copied().chain(pairs.iter().map(|p| p.0)).collect();
    let b_perm: Vec<usize> = pairs.iter().map(|p| p.1).chain(b_free.iter().copied()).collect();

    let m: usize = a_free.iter().map(|&i| a.dims[i]).product();
    let k: usize = pairs.iter().map(|p| a.dims[p.0]).product();
    let n: usize = b_free.iter().map(|&i| b.dims[i]).product();

    let ap = a.permute(&a_perm);
    let bp = b.permute(&b_perm);
    let data = matmul_slices(&ap.data, &bp.data, m, k, n);

    let dims: Vec<usize> = a_free
        .iter()
        .map(|&i| a.dims[i])
        .chain(b_free.iter().map(|&i| b.dims[i]))
        .collect();
    Tensor::from_vec(&dims, data)
}
