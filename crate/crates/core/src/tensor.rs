//! Dense row-major f32 tensors and the numeric kernels the layers build on.

use std::fmt;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Tensor dimensions, outermost first. Every dim is at least 1 and the
/// element count fits in `usize`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("shape must have at least one dim".into()));
        }
        let mut numel: usize = 1;
        for &d in dims {
            if d == 0 {
                return Err(Error::InvalidShape(format!(
                    "zero dim in {:?}",
                    dims
                )));
            }
            numel = numel
                .checked_mul(d)
                .ok_or_else(|| Error::InvalidShape(format!("element count overflow in {:?}", dims)))?;
        }
        Ok(Shape(dims.to_vec()))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn numel(&self) -> usize {
        self.0.iter().product()
    }

    /// Row-major strides (innermost stride is 1).
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.0.len()];
        for i in (0..self.0.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.0[i + 1];
        }
        strides
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "]")
    }
}

/// Reduction applied along one axis by [`Tensor::reduce`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceOp {
    Sum,
    Mean,
    Max,
    /// Index of the maximum; ties resolve to the lowest index.
    ArgMax,
}

/// Dense rank-N array of f32 in row-major layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Shape,
    data: Vec<f32>,
}

impl Tensor {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let shape = Shape::new(dims)?;
        let n = shape.numel();
        Ok(Tensor {
            shape,
            data: vec![0.0; n],
        })
    }

    pub fn filled(dims: &[usize], value: f32) -> Result<Self> {
        let shape = Shape::new(dims)?;
        let n = shape.numel();
        Ok(Tensor {
            shape,
            data: vec![value; n],
        })
    }

    pub fn from_vec(data: Vec<f32>, dims: &[usize]) -> Result<Self> {
        let shape = Shape::new(dims)?;
        if shape.numel() != data.len() {
            return Err(Error::InvalidShape(format!(
                "shape {shape} implies {} elements, got {}",
                shape.numel(),
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    /// 2-D tensor from rows; all rows must have equal length.
    pub fn from_rows(rows: &[&[f32]]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidShape("no rows".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidShape("ragged rows".into()));
        }
        let data: Vec<f32> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Tensor::from_vec(data, &[rows.len(), cols])
    }

    /// n×n identity matrix.
    pub fn eye(n: usize) -> Result<Self> {
        let mut t = Tensor::zeros(&[n, n])?;
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        Ok(t)
    }

    /// I.i.d. uniform samples in `[lo, hi)` drawn from `rng`.
    pub fn rand_uniform(rng: &mut Rng, dims: &[usize], lo: f32, hi: f32) -> Result<Self> {
        if lo >= hi {
            return Err(Error::InvalidArgument(format!(
                "uniform range requires lo < hi, got [{lo}, {hi})"
            )));
        }
        let shape = Shape::new(dims)?;
        let data = (0..shape.numel()).map(|_| rng.uniform(lo, hi)).collect();
        Ok(Tensor { shape, data })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn rank(&self) -> usize {
        self.shape.rank()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// Element at a multi-dimensional index.
    pub fn at(&self, index: &[usize]) -> f32 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f32) {
        let off = self.offset(index);
        self.data[off] = value;
    }

    fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.rank(), "index rank mismatch");
        let strides = self.shape.strides();
        index.iter().zip(&strides).map(|(i, s)| i * s).sum()
    }

    /// Same data, new shape; element counts must match.
    pub fn reshape(&self, dims: &[usize]) -> Result<Tensor> {
        let shape = Shape::new(dims)?;
        if shape.numel() != self.len() {
            return Err(Error::shape_mismatch("reshape", &self.shape, &shape));
        }
        Ok(Tensor {
            shape,
            data: self.data.clone(),
        })
    }

    // ── Elementwise ops ──────────────────────────────────────────────

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "mul", |a, b| a * b)
    }

    pub fn scale(&self, factor: f32) -> Tensor {
        self.map(|v| v * factor)
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_with(&self, other: &Tensor, op: &str, f: impl Fn(f32, f32) -> f32) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::shape_mismatch(op, &self.shape, &other.shape));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Tensor {
            shape: self.shape.clone(),
            data,
        })
    }

    // ── Reductions ───────────────────────────────────────────────────

    /// Apply `op` along `axis`; the axis is removed from the result.
    /// Reducing a rank-1 tensor yields a rank-1 tensor of length 1.
    pub fn reduce(&self, op: ReduceOp, axis: usize) -> Result<Tensor> {
        let rank = self.rank();
        if axis >= rank {
            return Err(Error::AxisOutOfRange { axis, rank });
        }
        let dims = self.dims();
        let axis_len = dims[axis];
        let outer: usize = dims[..axis].iter().product();
        let inner: usize = dims[axis + 1..].iter().product();

        let mut out_dims: Vec<usize> = dims[..axis]
            .iter()
            .chain(dims[axis + 1..].iter())
            .copied()
            .collect();
        if out_dims.is_empty() {
            out_dims.push(1);
        }
        let mut out = Tensor::zeros(&out_dims)?;

        for o in 0..outer {
            for i in 0..inner {
                let base = o * axis_len * inner + i;
                let mut best = self.data[base];
                let mut best_idx = 0usize;
                let mut acc = 0.0f64;
                for a in 0..axis_len {
                    let v = self.data[base + a * inner];
                    acc += v as f64;
                    if v > best {
                        best = v;
                        best_idx = a;
                    }
                }
                out.data[o * inner + i] = match op {
                    ReduceOp::Sum => acc as f32,
                    ReduceOp::Mean => (acc / axis_len as f64) as f32,
                    ReduceOp::Max => best,
                    ReduceOp::ArgMax => best_idx as f32,
                };
            }
        }
        Ok(out)
    }

    /// Sum of all elements, accumulated in f64.
    pub fn sum_all(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum()
    }

    // ── Matrix multiplication ────────────────────────────────────────

    /// `self[m,k] · other[k,n] -> [m,n]`.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        let (m, k) = as_2d(self, "matmul lhs")?;
        let (k2, n) = as_2d(other, "matmul rhs")?;
        if k != k2 {
            return Err(Error::shape_mismatch("matmul", &self.shape, &other.shape));
        }
        let mut out = Tensor::zeros(&[m, n])?;
        gemm(&self.data, &other.data, &mut out.data, m, k, n);
        Ok(out)
    }
}

fn as_2d(t: &Tensor, context: &str) -> Result<(usize, usize)> {
    if t.rank() != 2 {
        return Err(Error::InvalidShape(format!(
            "{context}: expected rank 2, got {}",
            t.shape()
        )));
    }
    Ok((t.dims()[0], t.dims()[1]))
}

// ── Raw gemm kernels ─────────────────────────────────────────────────
//
// All loops accumulate in a fixed order, so results are bit-identical
// across runs. The loop order is chosen so that either B or C stays
// cache-resident; both cases cover every matrix this crate multiplies.

/// How many f32 elements we assume fit comfortably in cache.
const RESIDENT_LIMIT: usize = 1 << 16;

#[inline]
fn axpy(c: &mut [f32], s: f32, b: &[f32]) {
    for (ci, bi) in c.iter_mut().zip(b) {
        *ci += s * *bi;
    }
}

#[inline]
fn dot(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0.0f32; 8];
    let mut ab = a.chunks_exact(8).zip(b.chunks_exact(8));
    for (ca, cb) in &mut ab {
        for l in 0..8 {
            acc[l] += ca[l] * cb[l];
        }
    }
    let ra = a.chunks_exact(8).remainder();
    let rb = b.chunks_exact(8).remainder();
    for (l, (x, y)) in ra.iter().zip(rb).enumerate() {
        acc[l] += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))
}

/// c[m,n] = a[m,k] · b[k,n]
pub(crate) fn gemm(a: &[f32], b: &[f32], c: &mut [f32], m: usize, k: usize, n: usize) {
    c.fill(0.0);
    if k * n <= RESIDENT_LIMIT {
        // B stays resident: walk output rows.
        for i in 0..m {
            let c_row = &mut c[i * n..(i + 1) * n];
            let a_row = &a[i * k..(i + 1) * k];
            for (p, &aip) in a_row.iter().enumerate() {
                axpy(c_row, aip, &b[p * n..(p + 1) * n]);
            }
        }
    } else {
        // B is streamed once; C must stay resident instead.
        for p in 0..k {
            let b_row = &b[p * n..(p + 1) * n];
            for i in 0..m {
                axpy(&mut c[i * n..(i + 1) * n], a[i * k + p], b_row);
            }
        }
    }
}

/// c[m,n] += a[s,m]ᵀ · b[s,n]  (sum over the shared leading dim)
pub(crate) fn gemm_acc_at(a: &[f32], b: &[f32], c: &mut [f32], s_dim: usize, m: usize, n: usize) {
    for i in 0..m {
        let c_row = &mut c[i * n..(i + 1) * n];
        for s in 0..s_dim {
            axpy(c_row, a[s * m + i], &b[s * n..(s + 1) * n]);
        }
    }
}

/// c[m,n] = a[m,k] · b[n,k]ᵀ
pub(crate) fn gemm_bt(a: &[f32], b: &[f32], c: &mut [f32], m: usize, k: usize, n: usize) {
    if n * k <= RESIDENT_LIMIT {
        for i in 0..m {
            let a_row = &a[i * k..(i + 1) * k];
            let c_row = &mut c[i * n..(i + 1) * n];
            for (j, cj) in c_row.iter_mut().enumerate() {
                *cj = dot(a_row, &b[j * k..(j + 1) * k]);
            }
        }
    } else {
        // Stream B once, keeping A resident.
        for j in 0..n {
            let b_row = &b[j * k..(j + 1) * k];
            for i in 0..m {
                c[i * n + j] = dot(&a[i * k..(i + 1) * k], b_row);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_examples() {
        let t = Tensor::zeros(&[2, 2]).unwrap();
        assert_eq!(t.data(), &[0.0; 4]);
        let t = Tensor::zeros(&[1]).unwrap();
        assert_eq!(t.data(), &[0.0]);
        assert_eq!(Tensor::zeros(&[3, 1, 2]).unwrap().len(), 6);
    }

    #[test]
    fn zero_dim_rejected() {
        assert!(Shape::new(&[2, 0, 3]).is_err());
    }

    #[test]
    fn element_count_overflow_rejected() {
        assert!(Shape::new(&[usize::MAX, 2]).is_err());
    }

    #[test]
    fn strides_are_row_major() {
        let s = Shape::new(&[2, 3, 4]).unwrap();
        assert_eq!(s.strides(), vec![12, 4, 1]);
    }

    #[test]
    fn matmul_identity_exact() {
        let a = Tensor::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let i = Tensor::eye(2).unwrap();
        assert_eq!(i.matmul(&a).unwrap(), a);
        assert_eq!(a.matmul(&i).unwrap(), a);
    }

    #[test]
    fn matmul_direct_evaluation() {
        let a = Tensor::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let b = Tensor::from_rows(&[&[5.0], &[6.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.dims(), &[2, 1]);
        assert_eq!(c.data(), &[17.0, 39.0]);
    }

    #[test]
    fn matmul_shape_rule() {
        let a = Tensor::zeros(&[1, 3]).unwrap();
        let b = Tensor::zeros(&[3, 2]).unwrap();
        assert_eq!(a.matmul(&b).unwrap().dims(), &[1, 2]);
    }

    #[test]
    fn matmul_mismatch_names_both_shapes() {
        let a = Tensor::zeros(&[2, 3]).unwrap();
        let b = Tensor::zeros(&[4, 2]).unwrap();
        let err = a.matmul(&b).unwrap_err().to_string();
        assert!(err.contains("[2, 3]") && err.contains("[4, 2]"), "{err}");
    }

    #[test]
    fn big_matmul_matches_naive() {
        // Exercises the streamed-B path (k*n above the resident limit).
        let mut rng = Rng::new(5);
        let m = 7;
        let k = 600;
        let n = 130;
        let a = Tensor::rand_uniform(&mut rng, &[m, k], -1.0, 1.0).unwrap();
        let b = Tensor::rand_uniform(&mut rng, &[k, n], -1.0, 1.0).unwrap();
        let c = a.matmul(&b).unwrap();
        // Force the other kernel path for comparison.
        let mut reference = vec![0.0f32; m * n];
        for i in 0..m {
            for j in 0..n {
                let mut acc = 0.0f64;
                for p in 0..k {
                    acc += a.data()[i * k + p] as f64 * b.data()[p * n + j] as f64;
                }
                reference[i * n + j] = acc as f32;
            }
        }
        for (x, y) in c.data().iter().zip(&reference) {
            assert!((x - y).abs() < 1e-3, "{x} vs {y}");
        }
    }

    #[test]
    fn gemm_variants_agree_with_matmul() {
        let mut rng = Rng::new(11);
        let a = Tensor::rand_uniform(&mut rng, &[5, 4], -1.0, 1.0).unwrap();
        let b = Tensor::rand_uniform(&mut rng, &[5, 3], -1.0, 1.0).unwrap();
        // aᵀ·b via gemm_acc_at
        let mut c = vec![0.0f32; 4 * 3];
        gemm_acc_at(a.data(), b.data(), &mut c, 5, 4, 3);
        // reference: transpose then matmul
        let mut at = Tensor::zeros(&[4, 5]).unwrap();
        for i in 0..5 {
            for j in 0..4 {
                at.data_mut()[j * 5 + i] = a.data()[i * 4 + j];
            }
        }
        let expected = at.matmul(&b).unwrap();
        for (x, y) in c.iter().zip(expected.data()) {
            assert!((x - y).abs() < 1e-5);
        }

        // a·bᵀ via gemm_bt
        let d = Tensor::rand_uniform(&mut rng, &[6, 4], -1.0, 1.0).unwrap();
        let mut e = vec![0.0f32; 5 * 6];
        gemm_bt(a.data(), d.data(), &mut e, 5, 4, 6);
        let mut dt = Tensor::zeros(&[4, 6]).unwrap();
        for i in 0..6 {
            for j in 0..4 {
                dt.data_mut()[j * 6 + i] = d.data()[i * 4 + j];
            }
        }
        let expected = a.matmul(&dt).unwrap();
        for (x, y) in e.iter().zip(expected.data()) {
            assert!((x - y).abs() < 1e-5);
        }
    }

    #[test]
    fn elementwise_examples() {
        let a = Tensor::from_vec(vec![1.0, 2.0], &[2]).unwrap();
        let b = Tensor::from_vec(vec![3.0, 4.0], &[2]).unwrap();
        assert_eq!(a.add(&b).unwrap().data(), &[4.0, 6.0]);
        assert_eq!(a.scale(0.0).data(), &[0.0, 0.0]);
        let c = Tensor::from_vec(vec![2.0, 3.0], &[2]).unwrap();
        let d = Tensor::from_vec(vec![4.0, 5.0], &[2]).unwrap();
        assert_eq!(c.mul(&d).unwrap().data(), &[8.0, 15.0]);
    }

    #[test]
    fn elementwise_shape_mismatch() {
        let a = Tensor::zeros(&[2]).unwrap();
        let b = Tensor::zeros(&[3]).unwrap();
        assert!(a.add(&b).is_err());
    }

    #[test]
    fn reduce_examples() {
        let t = Tensor::from_rows(&[&[0.0, 2.0]]).unwrap();
        let mean = t.reduce(ReduceOp::Mean, 1).unwrap();
        assert_eq!(mean.data(), &[1.0]);

        let t = Tensor::from_vec(vec![0.3, 0.7], &[2]).unwrap();
        assert_eq!(t.reduce(ReduceOp::ArgMax, 0).unwrap().data(), &[1.0]);

        // Tie-break: lowest index wins.
        let t = Tensor::from_vec(vec![0.5, 0.5], &[2]).unwrap();
        assert_eq!(t.reduce(ReduceOp::ArgMax, 0).unwrap().data(), &[0.0]);
    }

    #[test]
    fn reduce_axis_out_of_range() {
        let t = Tensor::zeros(&[2, 2]).unwrap();
        assert!(matches!(
            t.reduce(ReduceOp::Sum, 2),
            Err(Error::AxisOutOfRange { axis: 2, rank: 2 })
        ));
    }

    #[test]
    fn reduce_sum_matches_flat_sum() {
        let mut rng = Rng::new(21);
        let t = Tensor::rand_uniform(&mut rng, &[4, 5, 6], -2.0, 2.0).unwrap();
        let total = t
            .reduce(ReduceOp::Sum, 2)
            .unwrap()
            .reduce(ReduceOp::Sum, 1)
            .unwrap()
            .reduce(ReduceOp::Sum, 0)
            .unwrap()
            .data()[0] as f64;
        let flat = t.sum_all();
        assert!((total - flat).abs() <= 1e-5 * flat.abs().max(1.0));
    }

    #[test]
    fn rand_uniform_determinism_and_range() {
        let mut a = Rng::new(42);
        let mut b = Rng::new(42);
        let ta = Tensor::rand_uniform(&mut a, &[100], -1.0, 1.0).unwrap();
        let tb = Tensor::rand_uniform(&mut b, &[100], -1.0, 1.0).unwrap();
        assert_eq!(ta, tb);
        assert!(ta.data().iter().all(|v| (-1.0..1.0).contains(v)));
    }

    #[test]
    fn rand_uniform_monte_carlo_mean() {
        let mut rng = Rng::new(1);
        let t = Tensor::rand_uniform(&mut rng, &[100_000], 0.0, 1.0).unwrap();
        let mean = t.sum_all() / t.len() as f64;
        assert!((0.49..=0.51).contains(&mean), "mean {mean}");
    }

    #[test]
    fn rand_uniform_rejects_bad_range() {
        let mut rng = Rng::new(1);
        assert!(Tensor::rand_uniform(&mut rng, &[2], 1.0, 1.0).is_err());
        assert!(Tensor::rand_uniform(&mut rng, &[2], 2.0, 1.0).is_err());
    }
}
