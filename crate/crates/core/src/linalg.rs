//! Complex linear algebra over labeled tensor-product spaces.
//!
//! Small problems are handled with dense matrices and nalgebra's Hermitian
//! eigensolver. Larger ones go through [`LinearOperator`] implementations
//! that apply embedded local terms directly to state vectors, combined with
//! a restarted Lanczos iteration for extreme eigenvalues.

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{input_err, Error, Result};
use crate::graph::Vertex;
use crate::scalar::{cplx, Real, C};

pub type CMatrix<T> = DMatrix<C<T>>;
pub type CVector<T> = DVector<C<T>>;

/// Numerical settings for spectral computations.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Eigenvalues below this are treated as ground energy.
    pub ground_tol: f64,
    /// Largest dimension handled with dense eigendecompositions.
    pub dense_limit: usize,
    /// Largest Hilbert-space dimension accepted at all.
    pub max_dim: usize,
    /// Relative residual tolerance for Lanczos eigenpairs.
    pub lanczos_tol: f64,
    pub krylov_dim: usize,
    pub max_restarts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            ground_tol: 1e-9,
            dense_limit: 1024,
            max_dim: 8192,
            lanczos_tol: 1e-11,
            krylov_dim: 160,
            max_restarts: 400,
        }
    }
}

impl SolverOptions {
    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if dim > self.max_dim {
            return Err(Error::Resource(format!(
                "Hilbert space dimension {dim} exceeds the limit {} (raise FFV_MAX_DIM to allow it)",
                self.max_dim
            )));
        }
        Ok(())
    }

    pub fn use_dense(&self, dim: usize) -> bool {
        dim <= self.dense_limit
    }
}

/// Ordered list of nodes with their local dimensions.
///
/// The first node is the most significant tensor factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorLayout {
    nodes: Vec<Vertex>,
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl TensorLayout {
    pub fn new(nodes: Vec<Vertex>, dims: Vec<usize>) -> Result<Self> {
        if nodes.len() != dims.len() {
            return Err(input_err!(
                "{} nodes but {} dimensions",
                nodes.len(),
                dims.len()
            ));
        }
        if dims.contains(&0) {
            return Err(input_err!("node dimensions must be positive"));
        }
        let mut sorted = nodes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != nodes.len() {
            return Err(input_err!("duplicate node in layout"));
        }
        let mut strides = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1]
                .checked_mul(dims[i + 1])
                .ok_or_else(|| Error::Resource("tensor dimension overflows usize".into()))?;
        }
        if let Some(&d0) = dims.first() {
            strides[0]
                .checked_mul(d0)
                .ok_or_else(|| Error::Resource("tensor dimension overflows usize".into()))?;
        }
        Ok(Self {
            nodes,
            dims,
            strides,
        })
    }

    pub fn nodes(&self) -> &[Vertex] {
        &self.nodes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn position(&self, node: Vertex) -> Option<usize> {
        self.nodes.iter().position(|&n| n == node)
    }

    pub fn dim_of(&self, node: Vertex) -> Option<usize> {
        self.position(node).map(|p| self.dims[p])
    }

    /// Same nodes in a different order.
    pub fn reordered(&self, order: &[Vertex]) -> Result<Self> {
        let dims = order
            .iter()
            .map(|&n| self.dim_of(n).ok_or_else(|| input_err!("unknown node {n}")))
            .collect::<Result<Vec<_>>>()?;
        if order.len() != self.nodes.len() {
            return Err(input_err!("reordering must list every node once"));
        }
        Self::new(order.to_vec(), dims)
    }
}

/// Operator acting on an ordered subset of nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator<T: Real> {
    pub matrix: CMatrix<T>,
    pub support: Vec<Vertex>,
    pub dims: Vec<usize>,
}

impl<T: Real> LocalOperator<T> {
    pub fn new(matrix: CMatrix<T>, support: Vec<Vertex>, dims: Vec<usize>) -> Result<Self> {
        if support.len() != dims.len() {
            return Err(input_err!("support and dimension lists differ in length"));
        }
        let d: usize = dims.iter().product();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(input_err!(
                "local matrix is {}x{} but the support has dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            ));
        }
        Ok(Self {
            matrix,
            support,
            dims,
        })
    }

    /// Checks Hermiticity within `tol` (max entry of `A - A†`).
    pub fn is_hermitian(&self, tol: T) -> bool {
        hermitian_defect(&self.matrix) < tol
    }
}

/// A local matrix bound to positions of a layout, applied without ever
/// forming the full matrix.
#[derive(Clone, Debug)]
pub struct EmbeddedOp<T: Real> {
    matrix: CMatrix<T>,
    offsets: Vec<usize>,
    bases: Vec<usize>,
    dim: usize,
}

impl<T: Real> EmbeddedOp<T> {
    pub fn new(op: &LocalOperator<T>, layout: &TensorLayout) -> Result<Self> {
        let mut positions = Vec::with_capacity(op.support.len());
        for (node, &d) in op.support.iter().zip(&op.dims) {
            let p = layout
                .position(*node)
                .ok_or_else(|| input_err!("support node {node} is not in the layout"))?;
            if layout.dims[p] != d {
                return Err(input_err!(
                    "node {node} has dimension {} in the layout but {d} in the operator",
                    layout.dims[p]
                ));
            }
            if positions.contains(&p) {
                return Err(input_err!("support lists node {node} twice"));
            }
            positions.push(p);
        }
        let local_dim: usize = op.dims.iter().product();
        let offsets = (0..local_dim)
            .map(|mut a| {
                let mut off = 0;
                for (k, &p) in positions.iter().enumerate().rev() {
                    let d = op.dims[k];
                    off += (a % d) * layout.strides[p];
                    a /= d;
                }
                off
            })
            .collect();
        let dim = layout.total_dim();
        let bases = (0..dim)
            .filter(|&i| {
                positions
                    .iter()
                    .all(|&p| (i / layout.strides[p]).is_multiple_of(layout.dims[p]))
            })
            .collect();
        Ok(Self {
            matrix: op.matrix.clone(),
            offsets,
            bases,
            dim,
        })
    }

    pub fn local(&self) -> &CMatrix<T> {
        &self.matrix
    }

    /// Offsets of the local basis states inside one block.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// First index of every block; blocks are `base + offsets`.
    pub fn bases(&self) -> &[usize] {
        &self.bases
    }

    pub fn apply_into(&self, x: &CVector<T>, y: &mut CVector<T>) {
        let d = self.offsets.len();
        let mut buf = vec![C::<T>::default(); d];
        for &base in &self.bases {
            for (b, off) in self.offsets.iter().enumerate() {
                buf[b] = x[base + off];
            }
            for (a, off) in self.offsets.iter().enumerate() {
                let mut acc = C::<T>::default();
                for (b, xb) in buf.iter().enumerate() {
                    acc += self.matrix[(a, b)] * xb;
                }
                y[base + off] = acc;
            }
        }
    }

    pub fn to_dense(&self) -> CMatrix<T> {
        let mut full = CMatrix::<T>::zeros(self.dim, self.dim);
        for &base in &self.bases {
            for (a, oa) in self.offsets.iter().enumerate() {
                for (b, ob) in self.offsets.iter().enumerate() {
                    full[(base + oa, base + ob)] = self.matrix[(a, b)];
                }
            }
        }
        full
    }
}

impl<T: Real> LinearOperator<T> for EmbeddedOp<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &CVector<T>) -> CVector<T> {
        let mut y = CVector::zeros(self.dim);
        self.apply_into(x, &mut y);
        y
    }
}

/// `Σ_l w_l · A_{l,1} A_{l,2} ⋯` over embedded local terms.
///
/// Covers a Hamiltonian (one term per group) and verification operators
/// (one group per matching). Terms inside a group act right to left.
#[derive(Clone, Debug)]
pub struct ProductSum<T: Real> {
    dim: usize,
    groups: Vec<(T, Vec<EmbeddedOp<T>>)>,
}

impl<T: Real> ProductSum<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            groups: Vec::new(),
        }
    }

    pub fn push(&mut self, weight: T, factors: Vec<EmbeddedOp<T>>) -> Result<()> {
        if factors.iter().any(|f| f.dim != self.dim) {
            return Err(input_err!("factor dimension does not match {}", self.dim));
        }
        self.groups.push((weight, factors));
        Ok(())
    }

    pub fn groups(&self) -> &[(T, Vec<EmbeddedOp<T>>)] {
        &self.groups
    }
}

impl<T: Real> LinearOperator<T> for ProductSum<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &CVector<T>) -> CVector<T> {
        self.groups
            .par_iter()
            .map(|(w, factors)| {
                let mut cur = x.clone();
                let mut tmp = CVector::zeros(self.dim);
                for f in factors.iter().rev() {
                    f.apply_into(&cur, &mut tmp);
                    std::mem::swap(&mut cur, &mut tmp);
                }
                cur * cplx(*w)
            })
            .reduce(|| CVector::zeros(self.dim), |a, b| a + b)
    }
}

/// `op ⊗ 1` on the complement, with factors arranged in layout order.
pub fn embed<T: Real>(op: &LocalOperator<T>, layout: &TensorLayout) -> Result<CMatrix<T>> {
    Ok(EmbeddedOp::new(op, layout)?.to_dense())
}

/// Linear map on a finite-dimensional complex space.
pub trait LinearOperator<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &CVector<T>) -> CVector<T>;
}

impl<T: Real> LinearOperator<T> for CMatrix<T> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &CVector<T>) -> CVector<T> {
        self * x
    }
}

/// Wraps a closure as a [`LinearOperator`].
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<T: Real, F> LinearOperator<T> for FnOperator<F>
where
    F: Fn(&CVector<T>) -> CVector<T> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &CVector<T>) -> CVector<T> {
        (self.f)(x)
    }
}

/// Materializes an operator column by column.
pub fn to_dense<T: Real, A: LinearOperator<T> + ?Sized>(op: &A) -> CMatrix<T> {
    let n = op.dim();
    let cols: Vec<CVector<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut e = CVector::<T>::zeros(n);
            e[i] = cplx(T::one());
            op.apply(&e)
        })
        .collect();
    CMatrix::from_columns(&cols)
}

pub fn identity<T: Real>(n: usize) -> CMatrix<T> {
    CMatrix::identity(n, n)
}

/// Kronecker product `a ⊗ b`.
pub fn kron<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kronecker(b)
}

pub fn adjoint<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    m.adjoint()
}

pub fn commutator<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b - b * a
}

/// Largest entry modulus.
pub fn max_abs<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()))
}

pub fn hermitian_defect<T: Real>(m: &CMatrix<T>) -> T {
    if m.nrows() != m.ncols() {
        return T::max_value().unwrap_or_else(T::one);
    }
    max_abs(&(m - m.adjoint()))
}

/// `‖P² − P‖` (max entry) plus the Hermiticity defect.
pub fn projector_defect<T: Real>(m: &CMatrix<T>) -> T {
    if m.nrows() != m.ncols() {
        return T::max_value().unwrap_or_else(T::one);
    }
    max_abs(&(m * m - m)).max(hermitian_defect(m))
}

pub fn is_projector<T: Real>(m: &CMatrix<T>, tol: T) -> bool {
    projector_defect(m) < tol
}

pub fn trace<T: Real>(m: &CMatrix<T>) -> C<T> {
    m.diagonal().iter().fold(C::default(), |a, &b| a + b)
}

/// Outer product `|a⟩⟨b|`.
pub fn outer<T: Real>(a: &CVector<T>, b: &CVector<T>) -> CMatrix<T> {
    a * b.adjoint()
}

/// Hermitian eigendecomposition with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct Eigh<T: Real> {
    pub values: Vec<T>,
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: CMatrix<T>,
}

impl<T: Real> Eigh<T> {
    pub fn vector(&self, i: usize) -> CVector<T> {
        self.vectors.column(i).into_owned()
    }
}

pub fn eigh<T: Real>(m: &CMatrix<T>) -> Result<Eigh<T>> {
    if m.nrows() != m.ncols() {
        return Err(input_err!("eigh needs a square matrix"));
    }
    if m.nrows() == 0 {
        return Err(input_err!("eigh of an empty matrix"));
    }
    let scale = T::one().max(max_abs(m));
    if hermitian_defect(m) > T::tol(1e-10) * scale {
        return Err(input_err!("matrix is not Hermitian"));
    }
    let herm = (m + m.adjoint()) * cplx(T::lit(0.5));
    let dec = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..dec.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        dec.eigenvalues[a]
            .partial_cmp(&dec.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| dec.eigenvalues[i]).collect();
    let cols: Vec<CVector<T>> = order
        .iter()
        .map(|&i| dec.eigenvectors.column(i).into_owned())
        .collect();
    Ok(Eigh {
        values,
        vectors: CMatrix::from_columns(&cols),
    })
}

/// Singular values in descending order.
pub fn singular_values<T: Real>(m: &CMatrix<T>) -> Result<Vec<T>> {
    if m.is_empty() {
        return Err(input_err!("singular values of an empty matrix"));
    }
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(input_err!("matrix has non-finite entries"));
    }
    let mut sv: Vec<T> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(sv)
}

/// Largest singular value.
pub fn operator_norm<T: Real>(m: &CMatrix<T>) -> Result<T> {
    Ok(singular_values(m)?[0])
}

/// Operator norm of a Hermitian matrix, from its extreme eigenvalues.
pub fn hermitian_norm<T: Real>(m: &CMatrix<T>) -> Result<T> {
    let e = eigh(m)?;
    Ok(e.values[0].abs().max(e.values[e.values.len() - 1].abs()))
}

/// Second entry of the descending eigenvalue list (multiplicity counted).
pub fn second_largest_eigenvalue<T: Real>(m: &CMatrix<T>) -> Result<T> {
    let e = eigh(m)?;
    if e.values.len() < 2 {
        return Err(input_err!("need at least a 2x2 matrix"));
    }
    Ok(e.values[e.values.len() - 2])
}

/// Orthonormal basis of a subspace, used for deflation.
#[derive(Clone, Debug)]
pub struct Subspace<T: Real> {
    dim: usize,
    basis: Vec<CVector<T>>,
}

impl<T: Real> Subspace<T> {
    /// Gram–Schmidt orthonormalizes `vectors`, dropping dependent ones.
    pub fn from_vectors(dim: usize, vectors: Vec<CVector<T>>) -> Result<Self> {
        let mut s = Self {
            dim,
            basis: Vec::new(),
        };
        for v in vectors {
            if v.len() != dim {
                return Err(input_err!("vector length {} does not match {dim}", v.len()));
            }
            s.push(v);
        }
        Ok(s)
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            basis: Vec::new(),
        }
    }

    /// Adds a vector after orthogonalizing it; returns false if it was
    /// (numerically) already in the span.
    pub fn push(&mut self, v: CVector<T>) -> bool {
        let norm0 = v.norm();
        let mut w = self.project_out(&v);
        w = self.project_out(&w);
        let n = w.norm();
        if n <= T::tol(1e-10) * norm0.max(T::one()) {
            return false;
        }
        self.basis.push(w.unscale(n));
        true
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CVector<T>] {
        &self.basis
    }

    pub fn project(&self, v: &CVector<T>) -> CVector<T> {
        let mut out = CVector::zeros(v.len());
        for b in &self.basis {
            out.axpy(b.dotc(v), b, C::new(T::one(), T::zero()));
        }
        out
    }

    pub fn project_out(&self, v: &CVector<T>) -> CVector<T> {
        let mut w = v.clone();
        for b in &self.basis {
            let c = b.dotc(&w);
            w.axpy(-c, b, C::new(T::one(), T::zero()));
        }
        w
    }

    pub fn projector(&self) -> CMatrix<T> {
        let mut p = CMatrix::zeros(self.dim, self.dim);
        for b in &self.basis {
            p += outer(b, b);
        }
        p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extreme {
    Smallest,
    Largest,
}

#[derive(Clone, Debug)]
pub struct Eigenpair<T: Real> {
    pub value: T,
    pub vector: CVector<T>,
    /// `‖A x − θ x‖` for the returned pair.
    pub residual: T,
}

fn start_vector<T: Real>(dim: usize, seed: u64) -> CVector<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CVector::from_fn(dim, |_, _| {
        C::new(
            T::lit(rng.random::<f64>() - 0.5),
            T::lit(rng.random::<f64>() - 0.5),
        )
    })
}

/// Extreme eigenpair of a Hermitian operator restricted to the orthogonal
/// complement of `deflate`, by restarted Lanczos with full
/// reorthogonalization.
///
/// The operator must leave the span of `deflate` invariant. Convergence is
/// declared when the true residual drops below `lanczos_tol · max(1, |θ|)`,
/// which bounds the eigenvalue error by the same amount.
pub fn lanczos_extreme<T: Real, A: LinearOperator<T> + ?Sized>(
    op: &A,
    which: Extreme,
    deflate: &Subspace<T>,
    opts: &SolverOptions,
    seed: u64,
) -> Result<Eigenpair<T>> {
    let n = op.dim();
    let free = n.saturating_sub(deflate.rank());
    if free == 0 {
        return Err(input_err!("nothing left after deflation"));
    }
    let tol = T::tol(opts.lanczos_tol);
    let mut v = deflate.project_out(&start_vector(n, seed));
    v = deflate.project_out(&v);
    let mut best: Option<Eigenpair<T>> = None;
    for _ in 0..opts.max_restarts.max(1) {
        let nv = v.norm();
        if nv <= T::tol(1e-14) {
            v = deflate.project_out(&start_vector(n, seed.wrapping_add(1)));
            continue;
        }
        v.unscale_mut(nv);
        let kmax = opts.krylov_dim.min(free).max(1);
        let mut q: Vec<CVector<T>> = vec![v.clone()];
        let mut alpha: Vec<T> = Vec::with_capacity(kmax);
        let mut beta: Vec<T> = Vec::with_capacity(kmax);
        for j in 0..kmax {
            let mut w = deflate.project_out(&op.apply(&q[j]));
            let a = q[j].dotc(&w).re;
            alpha.push(a);
            // Full reorthogonalization, applied twice.
            for _ in 0..2 {
                for qi in &q {
                    let c = qi.dotc(&w);
                    w.axpy(-c, qi, C::new(T::one(), T::zero()));
                }
                w = deflate.project_out(&w);
            }
            let b = w.norm();
            if j + 1 == kmax || b <= T::tol(1e-13) * a.abs().max(T::one()) {
                break;
            }
            beta.push(b);
            q.push(w.unscale(b));
        }
        let k = alpha.len();
        let mut tri = DMatrix::<T>::zeros(k, k);
        for i in 0..k {
            tri[(i, i)] = alpha[i];
            if i + 1 < k {
                tri[(i, i + 1)] = beta[i];
                tri[(i + 1, i)] = beta[i];
            }
        }
        let dec = SymmetricEigen::new(tri);
        let idx = (0..k)
            .reduce(|a, b| {
                let better = match which {
                    Extreme::Smallest => dec.eigenvalues[b] < dec.eigenvalues[a],
                    Extreme::Largest => dec.eigenvalues[b] > dec.eigenvalues[a],
                };
                if better {
                    b
                } else {
                    a
                }
            })
            .unwrap();
        let theta = dec.eigenvalues[idx];
        let mut x = CVector::<T>::zeros(n);
        for (i, qi) in q.iter().enumerate().take(k) {
            x.axpy(
                cplx(dec.eigenvectors[(i, idx)]),
                qi,
                C::new(T::one(), T::zero()),
            );
        }
        x = deflate.project_out(&x);
        let xn = x.norm();
        x.unscale_mut(xn);
        let r = deflate.project_out(&op.apply(&x)) - &x * cplx(theta);
        let residual = r.norm();
        let pair = Eigenpair {
            value: theta,
            vector: x.clone(),
            residual,
        };
        if residual <= tol * theta.abs().max(T::one()) {
            return Ok(pair);
        }
        best = Some(pair);
        v = x;
    }
    let best = best.expect("at least one restart");
    Err(Error::NoConvergence(format!(
        "Lanczos residual {} after {} restarts",
        best.residual.as_f64(),
        opts.max_restarts
    )))
}

/// All eigenpairs of a Hermitian operator with eigenvalue below `threshold`,
/// found one at a time by deflated Lanczos.
pub fn lanczos_low_subspace<T: Real, A: LinearOperator<T> + ?Sized>(
    op: &A,
    threshold: T,
    opts: &SolverOptions,
    seed: u64,
) -> Result<(Subspace<T>, Option<T>)> {
    let mut space = Subspace::empty(op.dim());
    loop {
        if space.rank() == op.dim() {
            return Ok((space, None));
        }
        let pair = lanczos_extreme(
            op,
            Extreme::Smallest,
            &space,
            opts,
            seed + space.rank() as u64,
        )?;
        if pair.value >= threshold {
            return Ok((space, Some(pair.value)));
        }
        if !space.push(pair.vector) {
            return Err(Error::NoConvergence("deflation lost orthogonality".into()));
        }
    }
}

/// Random Hermitian matrix with standard normal entries (test helper).
pub fn random_hermitian<T: Real>(n: usize, rng: &mut impl Rng) -> CMatrix<T> {
    use rand_distr::StandardNormal;
    let g = CMatrix::<T>::from_fn(n, n, |_, _| {
        C::new(
            T::lit(rng.sample(StandardNormal)),
            T::lit(rng.sample(StandardNormal)),
        )
    });
    (&g + g.adjoint()) * cplx(T::lit(0.5))
}

/// Haar-ish random orthonormal vectors spanning a `rank`-dimensional subspace.
pub fn random_orthonormal<T: Real>(n: usize, rank: usize, rng: &mut impl Rng) -> Vec<CVector<T>> {
    use rand_distr::StandardNormal;
    let mut s = Subspace::empty(n);
    while s.rank() < rank.min(n) {
        let v = CVector::<T>::from_fn(n, |_, _| {
            C::new(
                T::lit(rng.sample(StandardNormal)),
                T::lit(rng.sample(StandardNormal)),
            )
        });
        s.push(v);
    }
    s.basis
}

/// Projector onto a random `rank`-dimensional subspace.
pub fn random_projector<T: Real>(n: usize, rank: usize, rng: &mut impl Rng) -> CMatrix<T> {
    let basis = random_orthonormal::<T>(n, rank, rng);
    Subspace::from_vectors(n, basis).unwrap().projector()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_z() -> CMatrix<f64> {
        CMatrix::from_diagonal(&CVector::from_vec(vec![cplx(1.0), cplx(-1.0)]))
    }

    fn pauli_x() -> CMatrix<f64> {
        CMatrix::from_row_slice(2, 2, &[cplx(0.0), cplx(1.0), cplx(1.0), cplx(0.0)])
    }

    #[test]
    fn embed_identity_and_pauli() {
        let layout = TensorLayout::new(vec![1, 2], vec![2, 2]).unwrap();
        let id = LocalOperator::new(identity::<f64>(2), vec![2], vec![2]).unwrap();
        assert!(max_abs(&(embed(&id, &layout).unwrap() - identity(4))) < 1e-15);
        let z = LocalOperator::new(pauli_z(), vec![1], vec![2]).unwrap();
        let full = embed(&z, &layout).unwrap();
        assert!(max_abs(&(full - kron(&pauli_z(), &identity(2)))) < 1e-15);
        let z2 = LocalOperator::new(pauli_z(), vec![2], vec![2]).unwrap();
        let full2 = embed(&z2, &layout).unwrap();
        assert!(max_abs(&(full2 - kron(&identity(2), &pauli_z()))) < 1e-15);
    }

    #[test]
    fn embed_permutes_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian::<f64>(2, &mut rng);
        let b = random_hermitian::<f64>(3, &mut rng);
        let layout = TensorLayout::new(vec![5, 7, 9], vec![2, 4, 3]).unwrap();
        // Support listed in reverse layout order.
        let op = LocalOperator::new(kron(&b, &a), vec![9, 5], vec![3, 2]).unwrap();
        let expect = kron(&kron(&a, &identity(4)), &b);
        assert!(max_abs(&(embed(&op, &layout).unwrap() - expect)) < 1e-12);
    }

    #[test]
    fn embed_disjoint_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let layout = TensorLayout::new(vec![0, 1, 2], vec![2, 3, 2]).unwrap();
        let a = LocalOperator::new(random_hermitian::<f64>(2, &mut rng), vec![0], vec![2]).unwrap();
        let b = LocalOperator::new(random_hermitian::<f64>(6, &mut rng), vec![1, 2], vec![3, 2])
            .unwrap();
        let (fa, fb) = (embed(&a, &layout).unwrap(), embed(&b, &layout).unwrap());
        assert!(max_abs(&commutator(&fa, &fb)) < 1e-12);
    }

    #[test]
    fn embedded_apply_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let layout = TensorLayout::new(vec![0, 1, 2, 3], vec![2, 3, 2, 3]).unwrap();
        let op = LocalOperator::new(random_hermitian::<f64>(9, &mut rng), vec![3, 1], vec![3, 3])
            .unwrap();
        let e = EmbeddedOp::new(&op, &layout).unwrap();
        let v = start_vector::<f64>(36, 1);
        assert!((e.apply(&v) - e.to_dense() * &v).norm() < 1e-12);
    }

    #[test]
    fn embed_dimension_mismatch() {
        let layout = TensorLayout::new(vec![1, 2], vec![2, 3]).unwrap();
        let op = LocalOperator::new(identity::<f64>(2), vec![2], vec![2]).unwrap();
        assert!(embed(&op, &layout).is_err());
        assert!(LocalOperator::new(identity::<f64>(3), vec![2], vec![2]).is_err());
    }

    #[test]
    fn eigh_basics() {
        let e = eigh(&pauli_x()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-12 && (e.values[1] - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = random_projector::<f64>(6, 2, &mut rng);
        for v in eigh(&p).unwrap().values {
            assert!(v.abs() < 1e-10 || (v - 1.0).abs() < 1e-10);
        }
        let a = random_hermitian::<f64>(12, &mut rng);
        let e = eigh(&a).unwrap();
        let lam = CMatrix::from_diagonal(&CVector::from_iterator(
            12,
            e.values.iter().map(|&x| cplx(x)),
        ));
        let rec = &e.vectors * lam * e.vectors.adjoint();
        assert!(max_abs(&(rec - &a)) < 1e-9);
        let gram = e.vectors.adjoint() * &e.vectors;
        assert!(max_abs(&(gram - identity(12))) < 1e-9);
        for w in e.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
        let nonherm = CMatrix::from_row_slice(2, 2, &[cplx(0.0), cplx(1.0), cplx(0.0), cplx(0.0)]);
        assert!(eigh(&nonherm).is_err());
    }

    #[test]
    fn norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = random_projector::<f64>(5, 2, &mut rng);
        assert!((operator_norm(&p).unwrap() - 1.0).abs() < 1e-12);
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![cplx(1.0), cplx(1.0), cplx(0.5)]));
        assert_eq!(second_largest_eigenvalue(&d).unwrap(), 1.0);
        // Two rank-1 qubit projectors with overlap |<a|b>| = c: ‖|a⟩⟨a|b⟩⟨b|‖ = c.
        let theta: f64 = 0.7;
        let a = CVector::from_vec(vec![cplx(1.0), cplx(0.0)]);
        let b = CVector::from_vec(vec![cplx(theta.cos()), cplx(theta.sin())]);
        let prod = outer(&a, &a) * outer(&b, &b);
        assert!((operator_norm(&prod).unwrap() - theta.cos()).abs() < 1e-12);
        assert!(operator_norm(&CMatrix::<f64>::zeros(0, 0)).is_err());
    }

    #[test]
    fn lanczos_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_hermitian::<f64>(300, &mut rng);
        let e = eigh(&a).unwrap();
        let opts = SolverOptions {
            krylov_dim: 60,
            ..Default::default()
        };
        let lo = lanczos_extreme(&a, Extreme::Smallest, &Subspace::empty(300), &opts, 1).unwrap();
        let hi = lanczos_extreme(&a, Extreme::Largest, &Subspace::empty(300), &opts, 1).unwrap();
        assert!((lo.value - e.values[0]).abs() < 1e-9);
        assert!((hi.value - e.values[299]).abs() < 1e-9);
        let defl = Subspace::from_vectors(300, vec![e.vector(0)]).unwrap();
        let second = lanczos_extreme(&a, Extreme::Smallest, &defl, &opts, 2).unwrap();
        assert!((second.value - e.values[1]).abs() < 1e-9);
    }

    #[test]
    fn low_subspace_of_projector_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = random_projector::<f64>(40, 37, &mut rng);
        let (space, next) = lanczos_low_subspace(&p, 1e-8, &SolverOptions::default(), 3).unwrap();
        assert_eq!(space.rank(), 3);
        assert!((next.unwrap() - 1.0).abs() < 1e-9);
    }
}
