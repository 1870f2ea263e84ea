//! Dense complex N-way tensors, CP factor sets and sampling masks.
//!
//! Storage is flat with the first index varying fastest. Modes are zero-based
//! throughout: mode `n` of an order-`N` tensor satisfies `n < N`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Dense N-way array of complex doubles.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexTensor {
    dims: Vec<usize>,
    data: Vec<C64>,
}

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::Shape("tensor order must be at least 1".into()));
    }
    if dims.contains(&0) {
        return Err(Error::Shape(format!("every dimension must be positive, got {dims:?}")));
    }
    Ok(dims.iter().product())
}

/// Advances a first-index-fastest multi-index by one position.
#[inline]
pub(crate) fn increment(idx: &mut [usize], dims: &[usize]) {
    for (i, &d) in idx.iter_mut().zip(dims) {
        *i += 1;
        if *i < d {
            return;
        }
        *i = 0;
    }
}

impl ComplexTensor {
    pub fn new(dims: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        let len = check_dims(&dims)?;
        if data.len() != len {
            return Err(Error::Shape(format!(
                "data length {} does not match dims {:?} (expected {len})",
                data.len(),
                dims
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let len = check_dims(dims)?;
        Ok(Self { dims: dims.to_vec(), data: vec![C64::new(0.0, 0.0); len] })
    }

    /// Builds a tensor by evaluating `f` at every multi-index in canonical order.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> C64) -> Result<Self> {
        let len = check_dims(dims)?;
        let mut idx = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, dims);
        }
        Ok(Self { dims: dims.to_vec(), data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn linear_index(&self, idx: &[usize]) -> Result<usize> {
        linear_index(&self.dims, idx)
    }

    pub fn get(&self, idx: &[usize]) -> Result<C64> {
        Ok(self.data[self.linear_index(idx)?])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scaled(&self, alpha: C64) -> Self {
        Self { dims: self.dims.clone(), data: self.data.iter().map(|&z| z * alpha).collect() }
    }

    /// Element-wise difference `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_dims(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { dims: self.dims.clone(), data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dims(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { dims: self.dims.clone(), data })
    }

    pub(crate) fn same_dims(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimMismatch { expected: self.dims.clone(), found: other.dims.clone() });
        }
        Ok(())
    }

    /// Frobenius norm: square root of the sum of squared moduli.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Mode-`n` matricization, an `I_n × ∏_{k≠n} I_k` matrix.
    pub fn unfold(&self, n: usize) -> Result<CMatrix> {
        let order = self.order();
        if n >= order {
            return Err(Error::OutOfRange(format!("mode {n} for a tensor of order {order}")));
        }
        let rows = self.dims[n];
        let cols = self.len() / rows;
        let strides = unfold_strides(&self.dims, n);
        let mut m = CMatrix::zeros(rows, cols);
        let mut idx = vec![0usize; order];
        for &v in &self.data {
            let j: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
            m[(idx[n], j)] = v;
            increment(&mut idx, &self.dims);
        }
        Ok(m)
    }

    /// Inverse of [`ComplexTensor::unfold`].
    pub fn fold(m: &CMatrix, dims: &[usize], n: usize) -> Result<Self> {
        let len = check_dims(dims)?;
        if n >= dims.len() {
            return Err(Error::OutOfRange(format!("mode {n} for a tensor of order {}", dims.len())));
        }
        let rows = dims[n];
        let cols = len / rows;
        if m.nrows() != rows || m.ncols() != cols {
            return Err(Error::Shape(format!(
                "matrix is {}x{}, mode-{n} unfolding of {dims:?} is {rows}x{cols}",
                m.nrows(),
                m.ncols()
            )));
        }
        let strides = unfold_strides(dims, n);
        Self::from_fn(dims, |idx| {
            let j: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
            m[(idx[n], j)]
        })
    }

    /// Copies the observed entries and zeroes the rest.
    pub fn apply_mask(&self, mask: &SamplingMask) -> Result<Self> {
        if self.dims != mask.dims {
            return Err(Error::DimMismatch { expected: self.dims.clone(), found: mask.dims.clone() });
        }
        let mut data = vec![C64::new(0.0, 0.0); self.len()];
        for &l in &mask.linear {
            data[l] = self.data[l];
        }
        Ok(Self { dims: self.dims.clone(), data })
    }
}

/// Column strides of the mode-`n` unfolding; the stride for mode `n` itself is 0.
pub(crate) fn unfold_strides(dims: &[usize], n: usize) -> Vec<usize> {
    let mut strides = vec![0usize; dims.len()];
    let mut acc = 1usize;
    for (k, &d) in dims.iter().enumerate() {
        if k != n {
            strides[k] = acc;
            acc *= d;
        }
    }
    strides
}

pub(crate) fn linear_index(dims: &[usize], idx: &[usize]) -> Result<usize> {
    if idx.len() != dims.len() {
        return Err(Error::OutOfRange(format!("index {idx:?} has wrong order for dims {dims:?}")));
    }
    let mut lin = 0usize;
    let mut stride = 1usize;
    for (&i, &d) in idx.iter().zip(dims) {
        if i >= d {
            return Err(Error::OutOfRange(format!("index {idx:?} outside dims {dims:?}")));
        }
        lin += i * stride;
        stride *= d;
    }
    Ok(lin)
}

pub(crate) fn multi_index(dims: &[usize], mut lin: usize) -> Vec<usize> {
    dims.iter()
        .map(|&d| {
            let i = lin % d;
            lin /= d;
            i
        })
        .collect()
}

/// Column-wise Kronecker product of a `p×k` and a `q×k` matrix.
pub fn khatri_rao(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.ncols() != b.ncols() {
        return Err(Error::Shape(format!(
            "khatri-rao operands have {} and {} columns",
            a.ncols(),
            b.ncols()
        )));
    }
    let (p, q) = (a.nrows(), b.nrows());
    Ok(CMatrix::from_fn(p * q, a.ncols(), |row, col| a[(row / q, col)] * b[(row % q, col)]))
}

/// A set of CP factor matrices `U^(n)` (each `I_n × R`) with per-component weights.
#[derive(Clone, Debug, PartialEq)]
pub struct CpFactors {
    factors: Vec<CMatrix>,
    weights: Vec<C64>,
}

impl CpFactors {
    /// Factors with all-ones weights.
    pub fn new(factors: Vec<CMatrix>) -> Result<Self> {
        let rank = factors.first().map(|f| f.ncols()).unwrap_or(0);
        Self::with_weights(factors, vec![C64::new(1.0, 0.0); rank])
    }

    pub fn with_weights(factors: Vec<CMatrix>, weights: Vec<C64>) -> Result<Self> {
        let Some(first) = factors.first() else {
            return Err(Error::Shape("CP factors need at least one mode".into()));
        };
        let rank = first.ncols();
        if rank == 0 {
            return Err(Error::Shape("CP rank must be at least 1".into()));
        }
        if let Some((n, f)) = factors.iter().enumerate().find(|(_, f)| f.ncols() != rank) {
            return Err(Error::Shape(format!(
                "factor {n} has {} columns, factor 0 has {rank}",
                f.ncols()
            )));
        }
        if factors.iter().any(|f| f.nrows() == 0) {
            return Err(Error::Shape("factor matrices need at least one row".into()));
        }
        if weights.len() != rank {
            return Err(Error::Shape(format!("{} weights for rank {rank}", weights.len())));
        }
        Ok(Self { factors, weights })
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    pub fn factors(&self) -> &[CMatrix] {
        &self.factors
    }

    pub fn factors_mut(&mut self) -> &mut [CMatrix] {
        &mut self.factors
    }

    pub fn weights(&self) -> &[C64] {
        &self.weights
    }

    pub fn into_factors(self) -> Vec<CMatrix> {
        self.factors
    }

    /// Folds the weights into the first factor and resets them to one.
    pub fn absorb_weights(&mut self) {
        for (r, w) in self.weights.iter_mut().enumerate() {
            for v in self.factors[0].column_mut(r).iter_mut() {
                *v *= *w;
            }
            *w = C64::new(1.0, 0.0);
        }
    }

    /// Sum of weighted rank-1 outer products.
    pub fn synthesize(&self) -> ComplexTensor {
        let dims = self.dims();
        let rank = self.rank();
        let order = dims.len();
        let len: usize = dims.iter().product();
        let mut data = Vec::with_capacity(len);
        // Products over modes 1..N for the current outer index, refreshed only
        // when a slower index changes.
        let mut idx = vec![0usize; order];
        let mut tail = vec![C64::new(0.0, 0.0); rank];
        let refresh_tail = |idx: &[usize], tail: &mut [C64]| {
            for (r, t) in tail.iter_mut().enumerate() {
                let mut p = self.weights[r];
                for (n, f) in self.factors.iter().enumerate().skip(1) {
                    p *= f[(idx[n], r)];
                }
                *t = p;
            }
        };
        refresh_tail(&idx, &mut tail);
        let first = &self.factors[0];
        let i0 = dims[0];
        for _ in 0..len / i0 {
            for i in 0..i0 {
                let mut acc = C64::new(0.0, 0.0);
                for (r, t) in tail.iter().enumerate() {
                    acc += first[(i, r)] * t;
                }
                data.push(acc);
            }
            idx[0] = i0 - 1;
            increment(&mut idx, &dims);
            refresh_tail(&idx, &mut tail);
        }
        ComplexTensor { dims, data }
    }
}

/// Mode-`n` view of a sampling mask: observed `(row, col)` pairs of the unfolding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixMask {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize)>,
}

impl MatrixMask {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.entries.binary_search(&(row, col)).is_ok()
    }

    pub fn apply(&self, m: &CMatrix) -> Result<CMatrix> {
        if m.nrows() != self.rows || m.ncols() != self.cols {
            return Err(Error::Shape(format!(
                "matrix is {}x{}, mask is {}x{}",
                m.nrows(),
                m.ncols(),
                self.rows,
                self.cols
            )));
        }
        let mut out = CMatrix::zeros(self.rows, self.cols);
        for &(i, j) in &self.entries {
            out[(i, j)] = m[(i, j)];
        }
        Ok(out)
    }
}

/// Set of observed multi-indices, stored as sorted canonical linear indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplingMask {
    dims: Vec<usize>,
    linear: Vec<usize>,
}

impl SamplingMask {
    /// Builds a mask from zero-based multi-indices; duplicates are merged.
    pub fn new(dims: &[usize], indices: &[Vec<usize>]) -> Result<Self> {
        check_dims(dims)?;
        let linear = indices
            .iter()
            .map(|idx| linear_index(dims, idx))
            .collect::<Result<Vec<_>>>()?;
        Self::from_linear(dims, linear)
    }

    pub fn from_linear(dims: &[usize], mut linear: Vec<usize>) -> Result<Self> {
        let len = check_dims(dims)?;
        if let Some(&bad) = linear.iter().find(|&&l| l >= len) {
            return Err(Error::OutOfRange(format!("linear index {bad} outside dims {dims:?}")));
        }
        linear.sort_unstable();
        linear.dedup();
        Ok(Self { dims: dims.to_vec(), linear })
    }

    pub fn full(dims: &[usize]) -> Result<Self> {
        let len = check_dims(dims)?;
        Ok(Self { dims: dims.to_vec(), linear: (0..len).collect() })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.linear.len()
    }

    pub fn is_empty(&self) -> bool {
        self.linear.is_empty()
    }

    pub fn linear_indices(&self) -> &[usize] {
        &self.linear
    }

    pub fn multi_indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        self.linear.iter().map(|&l| multi_index(&self.dims, l))
    }

    pub fn contains(&self, idx: &[usize]) -> bool {
        linear_index(&self.dims, idx).map(|l| self.linear.binary_search(&l).is_ok()).unwrap_or(false)
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn sampling_ratio(&self) -> f64 {
        self.len() as f64 / self.total() as f64
    }

    pub fn complement(&self) -> Self {
        let mut linear = Vec::with_capacity(self.total() - self.len());
        let mut it = self.linear.iter().peekable();
        for l in 0..self.total() {
            if it.peek() == Some(&&l) {
                it.next();
            } else {
                linear.push(l);
            }
        }
        Self { dims: self.dims.clone(), linear }
    }

    /// Mode-`n` matricized mask, consistent with [`ComplexTensor::unfold`].
    pub fn matricize(&self, n: usize) -> Result<MatrixMask> {
        if n >= self.dims.len() {
            return Err(Error::OutOfRange(format!("mode {n} for a mask of order {}", self.dims.len())));
        }
        let strides = unfold_strides(&self.dims, n);
        let mut entries: Vec<(usize, usize)> = self
            .multi_indices()
            .map(|idx| (idx[n], idx.iter().zip(&strides).map(|(i, s)| i * s).sum()))
            .collect();
        entries.sort_unstable();
        let rows = self.dims[n];
        Ok(MatrixMask { rows, cols: self.total() / rows, entries })
    }
}
