//! Dense vectors, small dense matrices and block-diagonal stepsize matrices.
//!
//! Every problem in this crate lives in a handful of dimensions, so all
//! storage is dense and eigenvalues come from a cyclic Jacobi sweep.

use std::ops::{Add, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating that stepsize blocks are symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A point in R^n.
///
/// [`Vector::new`] rejects NaN and infinite entries. The arithmetic operators
/// do not re-check; iteration drivers test [`Vector::is_finite`] instead.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some(index) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Vector(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        Vector(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist_sq(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// First `n` coordinates.
    pub fn head(&self, n: usize) -> Vector {
        Vector(self.0[..n].to_vec())
    }

    /// Coordinates from index `n` on.
    pub fn tail(&self, n: usize) -> Vector {
        Vector(self.0[n..].to_vec())
    }

    pub fn concat(head: &Vector, tail: &Vector) -> Vector {
        let mut v = Vec::with_capacity(head.dim() + tail.dim());
        v.extend_from_slice(&head.0);
        v.extend_from_slice(&tail.0);
        Vector(v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Vector(self.0.iter().map(|&x| f(x)).collect())
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: self.dim(),
            });
        }
        Ok(())
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl<const N: usize> From<[f64; N]> for Vector {
    fn from(v: [f64; N]) -> Self {
        Vector(v.to_vec())
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), rhs.dim());
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), rhs.dim());
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul<f64> for &Vector {
    type Output = Vector;
    fn mul(self, s: f64) -> Vector {
        Vector(self.0.iter().map(|a| s * a).collect())
    }
}

impl Mul<&Vector> for f64 {
    type Output = Vector;
    fn mul(self, v: &Vector) -> Vector {
        v * self
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        Vector(self.0.iter().map(|a| -a).collect())
    }
}

/// Square dense matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::invalid("matrix", "matrix must be non-empty"));
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            if let Some(index) = row.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    index: data.len() + index,
                });
            }
            data.extend(row);
        }
        Ok(DenseMatrix { n, data })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            data[i * n + i] = *d;
        }
        DenseMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = self.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        self.data
            .chunks(self.n)
            .map(|row| {
                let mut acc = row[0] * v[0];
                for j in 1..self.n {
                    acc += row[j] * v[j];
                }
                acc
            })
            .collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Self {
        assert_eq!(self.n, other.n, "matmul dimension mismatch");
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                for j in 0..n {
                    out[i * n + j] += a * other.get(k, j);
                }
            }
        }
        DenseMatrix { n, data: out }
    }

    pub fn add_scaled(&self, s: f64, other: &DenseMatrix) -> Self {
        assert_eq!(self.n, other.n, "add dimension mismatch");
        DenseMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        DenseMatrix {
            n: self.n,
            data: self.data.iter().map(|a| s * a).collect(),
        }
    }

    /// `(A + Aᵀ) / 2`
    pub fn symmetric_part(&self) -> Self {
        let mut s = self.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                s.set(i, j, 0.5 * (self.get(i, j) + self.get(j, i)));
            }
        }
        s
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues in ascending order and the matching eigenvectors as
    /// columns of the second matrix.
    pub fn symmetric_eigen(&self) -> Result<(Vec<f64>, DenseMatrix)> {
        let asym = self.max_asymmetry();
        let scale = self.data.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric {
                block: 0,
                asymmetry: asym,
            });
        }
        Ok(jacobi_eigen(&self.symmetric_part()))
    }

    pub fn min_symmetric_eigenvalue(&self) -> Result<f64> {
        self.symmetric_eigen().map(|(vals, _)| vals[0])
    }

    pub fn max_symmetric_eigenvalue(&self) -> Result<f64> {
        self.symmetric_eigen().map(|(vals, _)| vals[vals.len() - 1])
    }

    /// Spectral norm, the square root of the largest eigenvalue of `AᵀA`.
    pub fn spectral_norm(&self) -> f64 {
        let gram = self.transpose().matmul(self).symmetric_part();
        let (vals, _) = jacobi_eigen(&gram);
        vals[vals.len() - 1].max(0.0).sqrt()
    }
}

impl TryFrom<Vec<Vec<f64>>> for DenseMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        DenseMatrix::from_rows(rows)
    }
}

impl From<DenseMatrix> for Vec<Vec<f64>> {
    fn from(m: DenseMatrix) -> Self {
        m.rows()
    }
}

fn jacobi_eigen(a: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = a.n;
    let mut m = a.clone();
    let mut v = DenseMatrix::identity(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j).powi(2))
            .sum();
        let diag: f64 = (0..n).map(|i| m.get(i, i).powi(2)).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).total_cmp(&m.get(j, j)));
    let vals = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vecs = DenseMatrix::identity(n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vecs.set(row, col, v.get(row, src));
        }
    }
    (vals, vecs)
}

/// Symmetric positive-definite block-diagonal matrix, e.g. a stepsize
/// `Γ = blockdiag(Γ₁, Γ₂)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<DenseMatrix>", into = "Vec<DenseMatrix>")]
pub struct BlockDiagMatrix {
    blocks: Vec<DenseMatrix>,
    /// Start index of each block, followed by the total dimension.
    offsets: Vec<usize>,
}

impl BlockDiagMatrix {
    /// Validates that every block is symmetric (within [`SYMMETRY_TOL`]) and
    /// positive definite.
    pub fn new(blocks: Vec<DenseMatrix>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::invalid("blocks", "at least one block is required"));
        }
        for (b, block) in blocks.iter().enumerate() {
            let asymmetry = block.max_asymmetry();
            if asymmetry > SYMMETRY_TOL {
                return Err(Error::NotSymmetric { block: b, asymmetry });
            }
            let min_eigenvalue = jacobi_eigen(&block.symmetric_part()).0[0];
            if !(min_eigenvalue > 0.0) {
                return Err(Error::NotPositiveDefinite {
                    block: b,
                    min_eigenvalue,
                });
            }
        }
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut at = 0;
        for block in &blocks {
            offsets.push(at);
            at += block.dim();
        }
        offsets.push(at);
        Ok(BlockDiagMatrix { blocks, offsets })
    }

    /// `γ·I` stored as `n` scalar blocks.
    pub fn scalar(gamma: f64, n: usize) -> Result<Self> {
        Self::diagonal(&vec![gamma; n])
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(diag.iter().map(|&d| DenseMatrix::diagonal(&[d])).collect())
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n]).expect("identity is positive definite")
    }

    /// `blockdiag(self, other)`
    pub fn stack(&self, other: &BlockDiagMatrix) -> Self {
        let mut blocks = self.blocks.clone();
        blocks.extend(other.blocks.iter().cloned());
        Self::new(blocks).expect("stacking valid blocks stays valid")
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().expect("offsets are never empty")
    }

    pub fn blocks(&self) -> &[DenseMatrix] {
        &self.blocks
    }

    pub fn matvec(&self, v: &Vector) -> Vector {
        debug_assert_eq!(v.dim(), self.dim());
        let mut out = Vec::with_capacity(v.dim());
        for (block, &start) in self.blocks.iter().zip(&self.offsets) {
            out.extend(block.matvec(&v.as_slice()[start..start + block.dim()]));
        }
        Vector(out)
    }

    fn eigenvalues(&self) -> impl Iterator<Item = f64> + '_ {
        self.blocks
            .iter()
            .flat_map(|b| jacobi_eigen(&b.symmetric_part()).0)
    }

    pub fn smallest_eigenvalue(&self) -> f64 {
        self.eigenvalues().fold(f64::INFINITY, f64::min)
    }

    /// Largest eigenvalue, which is also the spectral norm for SPD matrices.
    pub fn largest_eigenvalue(&self) -> f64 {
        self.eigenvalues().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inverse(&self) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let (vals, vecs) = jacobi_eigen(&b.symmetric_part());
                let n = b.dim();
                let mut inv = DenseMatrix {
                    n,
                    data: vec![0.0; n * n],
                };
                for i in 0..n {
                    for j in 0..n {
                        let s: f64 = (0..n)
                            .map(|k| vecs.get(i, k) * vecs.get(j, k) / vals[k])
                            .sum();
                        inv.set(i, j, s);
                    }
                }
                inv.symmetric_part()
            })
            .collect();
        BlockDiagMatrix::new(blocks).expect("inverse of an SPD matrix is SPD")
    }

    /// Splits into `(first n coordinates, rest)` when `n` falls on a block
    /// boundary.
    pub fn split_at(&self, n: usize) -> Option<(Self, Self)> {
        let idx = self.offsets.iter().position(|&o| o == n)?;
        if idx == 0 || idx == self.blocks.len() {
            return None;
        }
        let (a, b) = self.blocks.split_at(idx);
        Some((Self::new(a.to_vec()).ok()?, Self::new(b.to_vec()).ok()?))
    }

    /// Dense representation of the whole matrix.
    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        let mut m = DenseMatrix {
            n,
            data: vec![0.0; n * n],
        };
        for (block, &start) in self.blocks.iter().zip(&self.offsets) {
            for i in 0..block.dim() {
                for j in 0..block.dim() {
                    m.set(start + i, start + j, block.get(i, j));
                }
            }
        }
        m
    }
}

impl TryFrom<Vec<DenseMatrix>> for BlockDiagMatrix {
    type Error = Error;
    fn try_from(blocks: Vec<DenseMatrix>) -> Result<Self> {
        BlockDiagMatrix::new(blocks)
    }
}

impl From<BlockDiagMatrix> for Vec<DenseMatrix> {
    fn from(m: BlockDiagMatrix) -> Self {
        m.blocks
    }
}

/// `⟨a, W b⟩`
pub fn weighted_dot(a: &Vector, b: &Vector, w: &BlockDiagMatrix) -> Result<f64> {
    a.check_dim(w.dim())?;
    b.check_dim(w.dim())?;
    Ok(a.dot(&w.matvec(b)))
}

/// `‖a‖²_W = ⟨a, W a⟩`
pub fn weighted_norm_sq(a: &Vector, w: &BlockDiagMatrix) -> Result<f64> {
    weighted_dot(a, a, w)
}

/// Smallest eigenvalue over all blocks of `w`.
pub fn smallest_eigenvalue(w: &BlockDiagMatrix) -> f64 {
    w.smallest_eigenvalue()
}
