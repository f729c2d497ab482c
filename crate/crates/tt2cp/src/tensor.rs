//! Dense tensors and the multilinear primitives everything else builds on.
//!
//! The linear layout is first-index-fastest (column-major for matrices), so
//! the mode-1 unfolding is a copy-free reinterpretation of the buffer. The
//! mode-n unfolding follows the row convention of tensor matricization: row
//! `i` of `X_(n)` is the vectorization of the subtensor `X(:,..,i,..,:)`,
//! running the remaining modes in ascending order with the earlier mode
//! fastest.

use ndarray::{Array1, Array2, ShapeBuilder};

use crate::error::{Error, Result};
use crate::scalar::Field;

/// Order-N dense tensor over a real or complex scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor<S: Field> {
    shape: Vec<usize>,
    data: Vec<S>,
}

impl<S: Field> DenseTensor<S> {
    pub fn new(shape: Vec<usize>, data: Vec<S>) -> Result<Self> {
        if shape.is_empty() || shape.iter().any(|&e| e == 0) {
            return Err(Error::InvalidArgument(format!(
                "invalid tensor shape {shape:?}"
            )));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::ElementCountMismatch {
                from: data.len(),
                to: n,
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![S::zero(); n],
        }
    }

    /// Build from a function of the 0-based multi-index.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> S) -> Self {
        let n: usize = shape.iter().product();
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f(&idx));
            for (i, e) in idx.iter_mut().zip(&shape) {
                *i += 1;
                if *i < *e {
                    break;
                }
                *i = 0;
            }
        }
        Self { shape, data }
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<S> {
        self.data
    }

    fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut l = 0;
        let mut stride = 1;
        for (i, e) in idx.iter().zip(&self.shape) {
            debug_assert!(i < e);
            l += i * stride;
            stride *= e;
        }
        l
    }

    pub fn get(&self, idx: &[usize]) -> S {
        self.data[self.linear_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: S) {
        let l = self.linear_index(idx);
        self.data[l] = v;
    }

    /// Mode-n unfolding (1-based mode) into an `I_n x prod(I_k, k != n)` matrix.
    pub fn unfold(&self, mode: usize) -> Result<Array2<S>> {
        let n = self.order();
        if mode == 0 || mode > n {
            return Err(Error::ModeOutOfRange { mode, order: n });
        }
        let m = mode - 1;
        let left: usize = self.shape[..m].iter().product();
        let extent = self.shape[m];
        let right: usize = self.shape[m + 1..].iter().product();
        let mut out = Array2::zeros((extent, left * right).f());
        for b in 0..right {
            for i in 0..extent {
                let base = left * (i + extent * b);
                for a in 0..left {
                    out[(i, a + left * b)] = self.data[a + base];
                }
            }
        }
        Ok(out)
    }

    /// Inverse of [`unfold`]: refold a mode-n unfolding into `shape`.
    pub fn fold(m: &Array2<S>, mode: usize, shape: &[usize]) -> Result<Self> {
        let n = shape.len();
        if mode == 0 || mode > n {
            return Err(Error::ModeOutOfRange { mode, order: n });
        }
        let mm = mode - 1;
        let left: usize = shape[..mm].iter().product();
        let extent = shape[mm];
        let right: usize = shape[mm + 1..].iter().product();
        if m.nrows() != extent || m.ncols() != left * right {
            return Err(Error::ShapeMismatch(format!(
                "cannot fold {}x{} matrix into {:?} along mode {}",
                m.nrows(),
                m.ncols(),
                shape,
                mode
            )));
        }
        let mut data = vec![S::zero(); left * extent * right];
        for b in 0..right {
            for i in 0..extent {
                let base = left * (i + extent * b);
                for a in 0..left {
                    data[a + base] = m[(i, a + left * b)];
                }
            }
        }
        Self::new(shape.to_vec(), data)
    }

    /// Reinterpret the buffer under a new shape with the same element count.
    pub fn reshape(&self, new_shape: &[usize]) -> Result<Self> {
        let n: usize = new_shape.iter().product();
        if n != self.data.len() || new_shape.iter().any(|&e| e == 0) {
            return Err(Error::ElementCountMismatch {
                from: self.data.len(),
                to: n,
            });
        }
        Ok(Self {
            shape: new_shape.to_vec(),
            data: self.data.clone(),
        })
    }

    /// Train contraction: contract the last mode of `self` with the first
    /// mode of `other`.
    pub fn train_contract(&self, other: &Self) -> Result<Self> {
        let bond = *self.shape.last().unwrap();
        if bond != other.shape[0] {
            return Err(Error::BondMismatch {
                left: bond,
                right: other.shape[0],
            });
        }
        let p: usize = self.shape[..self.order() - 1].iter().product();
        let q: usize = other.shape[1..].iter().product();
        let a = ndarray::ArrayView2::from_shape((p, bond).f(), &self.data).unwrap();
        let b = ndarray::ArrayView2::from_shape((bond, q).f(), &other.data).unwrap();
        let c = a.dot(&b);
        let mut shape: Vec<usize> = self.shape[..self.order() - 1].to_vec();
        shape.extend_from_slice(&other.shape[1..]);
        if shape.is_empty() {
            // scalar result of a vector-vector contraction
            shape.push(1);
        }
        let mut data = Vec::with_capacity(p * q);
        for j in 0..q {
            for i in 0..p {
                data.push(c[(i, j)]);
            }
        }
        Self::new(shape, data)
    }

    /// Inner product, conjugate-linear in the second argument.
    pub fn inner(&self, other: &Self) -> Result<S> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "inner product of {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(S::zero(), |acc, (&x, &y)| acc + x * y.conj()))
    }

    pub fn fro_norm(&self) -> f64 {
        self.data
            .iter()
            .map(|x| x.square())
            .sum::<f64>()
            .sqrt()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "subtraction of {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&x, &y)| x - y)
            .collect();
        Self::new(self.shape.clone(), data)
    }

    pub fn scaled(&self, c: S) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| x * c).collect(),
        }
    }

    /// View an order-2 tensor as a matrix.
    pub fn as_matrix(&self) -> Result<Array2<S>> {
        if self.order() != 2 {
            return Err(Error::ShapeMismatch(format!(
                "expected order-2 tensor, got order {}",
                self.order()
            )));
        }
        Ok(
            ndarray::ArrayView2::from_shape((self.shape[0], self.shape[1]).f(), &self.data)
                .unwrap()
                .to_owned(),
        )
    }

    pub fn from_matrix(m: &Array2<S>) -> Self {
        let (r, c) = m.dim();
        let mut data = Vec::with_capacity(r * c);
        for j in 0..c {
            for i in 0..r {
                data.push(m[(i, j)]);
            }
        }
        Self {
            shape: vec![r, c],
            data,
        }
    }
}

/// Columnwise Kronecker (Khatri-Rao) product.
pub fn khatri_rao<S: Field>(a: &Array2<S>, b: &Array2<S>) -> Result<Array2<S>> {
    if a.ncols() != b.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "khatri_rao column counts {} and {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let (ia, r) = a.dim();
    let ib = b.nrows();
    let mut out = Array2::zeros((ia * ib, r).f());
    for c in 0..r {
        for i in 0..ia {
            for j in 0..ib {
                out[(j + ib * i, c)] = a[(i, c)] * b[(j, c)];
            }
        }
    }
    Ok(out)
}

pub fn kronecker<S: Field>(a: &Array2<S>, b: &Array2<S>) -> Array2<S> {
    let (ia, ja) = a.dim();
    let (ib, jb) = b.dim();
    let mut out = Array2::zeros((ia * ib, ja * jb).f());
    for p in 0..ia {
        for q in 0..ja {
            for i in 0..ib {
                for j in 0..jb {
                    out[(i + ib * p, j + jb * q)] = a[(p, q)] * b[(i, j)];
                }
            }
        }
    }
    out
}

pub fn hadamard<S: Field>(a: &Array2<S>, b: &Array2<S>) -> Result<Array2<S>> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch(format!(
            "hadamard of {:?} and {:?}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(a * b)
}

/// Khatri-Rao product of a list of matrices in descending order:
/// `mats[last] (.) ... (.) mats[first]`.
pub fn khatri_rao_descending<S: Field>(mats: &[&Array2<S>]) -> Result<Array2<S>> {
    assert!(!mats.is_empty());
    let mut acc: Array2<S> = (*mats.last().unwrap()).clone();
    for m in mats[..mats.len() - 1].iter().rev() {
        acc = khatri_rao(&acc, *m)?;
    }
    Ok(acc)
}

pub fn column_norms<S: Field>(a: &Array2<S>) -> Array1<f64> {
    Array1::from_iter(
        a.columns()
            .into_iter()
            .map(|c| c.iter().map(|x| x.square()).sum::<f64>().sqrt()),
    )
}
