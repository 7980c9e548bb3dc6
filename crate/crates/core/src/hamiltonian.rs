//! Frustration-free Hamiltonians `H = Σ_e P_e` and the scalars that enter
//! the detectability and gap bounds.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{input_err, Error, Result};
use crate::graph::{Hypergraph, Vertex};
use crate::linalg::{
    self, eigh, lanczos_low_subspace, projector_defect, singular_values, CMatrix, CVector,
    EmbeddedOp, LocalOperator, ProductSum, SolverOptions, Subspace, TensorLayout,
};
use crate::scalar::{cplx, Real, C};

/// Commutator norms above this count as noncommuting.
pub const COMMUTE_TOL: f64 = 1e-10;
/// Singular values at or above `1 - UNIT_SV_TOL` count as equal to one.
pub const UNIT_SV_TOL: f64 = 1e-9;
/// Singular values below this count as zero.
pub const ZERO_SV_TOL: f64 = 1e-9;
/// Maximum `‖P² − P‖` entry accepted for an input projector.
pub const PROJECTOR_TOL: f64 = 1e-10;

/// `H = Σ_e P_e` with one local projector per hyperedge.
#[derive(Clone, Debug)]
pub struct FfHamiltonian<T: Real> {
    graph: Hypergraph,
    layout: TensorLayout,
    projectors: Vec<LocalOperator<T>>,
}

impl<T: Real> FfHamiltonian<T> {
    /// `node_dims` follows `graph.vertices()`; `projectors[i]` acts on
    /// `graph.edge(i)` with tensor factors in ascending vertex order.
    pub fn new(
        graph: Hypergraph,
        node_dims: &[usize],
        projectors: Vec<CMatrix<T>>,
    ) -> Result<Self> {
        if node_dims.len() != graph.vertex_count() {
            return Err(input_err!(
                "{} node dimensions for {} vertices",
                node_dims.len(),
                graph.vertex_count()
            ));
        }
        if projectors.len() != graph.edge_count() {
            return Err(input_err!(
                "{} projectors for {} edges",
                projectors.len(),
                graph.edge_count()
            ));
        }
        let layout = TensorLayout::new(graph.vertices().to_vec(), node_dims.to_vec())?;
        let mut ops = Vec::with_capacity(projectors.len());
        for (i, p) in projectors.into_iter().enumerate() {
            let support = graph.edge(i).to_vec();
            let dims = support
                .iter()
                .map(|&v| layout.dim_of(v).expect("edge vertex in layout"))
                .collect();
            let op = LocalOperator::new(p, support, dims)?;
            let defect = projector_defect(&op.matrix);
            if defect >= T::tol(PROJECTOR_TOL) {
                return Err(input_err!(
                    "term on edge {:?} is not a projector (defect {:.3e})",
                    graph.edge(i),
                    defect.as_f64()
                ));
            }
            ops.push(op);
        }
        Ok(Self {
            graph,
            layout,
            projectors: ops,
        })
    }

    /// Same Hamiltonian with the full tensor product arranged in `order`.
    pub fn with_node_order(&self, order: &[Vertex]) -> Result<Self> {
        Ok(Self {
            graph: self.graph.clone(),
            layout: self.layout.reordered(order)?,
            projectors: self.projectors.clone(),
        })
    }

    pub fn graph(&self) -> &Hypergraph {
        &self.graph
    }

    pub fn layout(&self) -> &TensorLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn node_dim(&self, v: Vertex) -> Option<usize> {
        self.layout.dim_of(v)
    }

    /// Node dimensions in `graph.vertices()` order.
    pub fn node_dims(&self) -> Vec<usize> {
        self.graph
            .vertices()
            .iter()
            .map(|&v| self.layout.dim_of(v).unwrap())
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.projectors.len()
    }

    pub fn projector(&self, e: usize) -> &LocalOperator<T> {
        &self.projectors[e]
    }

    pub fn projectors(&self) -> &[LocalOperator<T>] {
        &self.projectors
    }

    pub fn embedded(&self, e: usize) -> Result<EmbeddedOp<T>> {
        EmbeddedOp::new(&self.projectors[e], &self.layout)
    }

    /// Matrix-free `H`.
    pub fn operator(&self) -> Result<ProductSum<T>> {
        let mut op = ProductSum::new(self.dim());
        for e in 0..self.edge_count() {
            op.push(T::one(), vec![self.embedded(e)?])?;
        }
        Ok(op)
    }

    pub fn dense(&self, opts: &SolverOptions) -> Result<CMatrix<T>> {
        opts.check_dim(self.dim())?;
        let mut h = CMatrix::zeros(self.dim(), self.dim());
        for e in 0..self.edge_count() {
            h += self.embedded(e)?.to_dense();
        }
        Ok(h)
    }

    /// Ground space (eigenvalues below `opts.ground_tol`) and the next
    /// eigenvalue above it.
    pub fn ground_space(&self, opts: &SolverOptions) -> Result<GroundSpace<T>> {
        let n = self.dim();
        opts.check_dim(n)?;
        let tol = T::tol(opts.ground_tol);
        let (space, gamma, e0) = if opts.use_dense(n) {
            let e = eigh(&self.dense(opts)?)?;
            let rank = e.values.iter().take_while(|&&v| v < tol).count();
            let basis = (0..rank).map(|i| e.vector(i)).collect();
            (
                Subspace::from_vectors(n, basis)?,
                e.values.get(rank).copied(),
                e.values[0],
            )
        } else {
            let op = self.operator()?;
            let (space, next) = lanczos_low_subspace(&op, tol, opts, 17)?;
            let e0 = if space.rank() == 0 {
                next.unwrap_or_else(T::zero)
            } else {
                T::zero()
            };
            (space, next, e0)
        };
        if space.rank() == 0 {
            return Err(Error::NotFrustrationFree(format!(
                "smallest eigenvalue {:.3e} is not below {:.1e}",
                e0.as_f64(),
                opts.ground_tol
            )));
        }
        Ok(GroundSpace { space, gamma })
    }

    /// Dense ground projector `Q0` and its rank.
    pub fn ground_projector(&self, opts: &SolverOptions) -> Result<(CMatrix<T>, usize)> {
        let g = self.ground_space(opts)?;
        Ok((g.space.projector(), g.rank()))
    }

    pub fn spectral_gap_gamma(&self, opts: &SolverOptions) -> Result<T> {
        self.ground_space(opts)?.gamma()
    }

    /// Pairwise commutation data, computed on the union of each pair's
    /// supports.
    pub fn commutation_profile(&self) -> Result<CommutationProfile<T>> {
        let q = self.edge_count();
        let pairs: Vec<(usize, usize)> = (0..q)
            .flat_map(|j| (j + 1..q).map(move |k| (j, k)))
            .filter(|&(j, k)| {
                let a = self.graph.edge(j);
                self.graph.edge(k).iter().any(|v| a.contains(v))
            })
            .collect();
        let results: Vec<(usize, usize, bool, T)> = pairs
            .par_iter()
            .map(|&(j, k)| {
                let (pj, pk) = self.local_pair(j, k)?;
                let comm = linalg::operator_norm(&linalg::commutator(&pj, &pk))?;
                let s = sub_unit_singular_value(&(&pj * &pk))?;
                Ok((j, k, comm > T::tol(COMMUTE_TOL), s))
            })
            .collect::<Result<_>>()?;
        let mut noncommuting = vec![Vec::new(); q];
        let mut pair_s = BTreeMap::new();
        let mut s = T::zero();
        let mut s_all = T::zero();
        for (j, k, nc, sjk) in results {
            s_all = s_all.max(sjk);
            if nc {
                noncommuting[j].push(k);
                noncommuting[k].push(j);
                pair_s.insert((j, k), sjk);
                s = s.max(sjk);
            }
        }
        for list in &mut noncommuting {
            list.sort_unstable();
        }
        let g = noncommuting.iter().map(Vec::len).max().unwrap_or(0);
        Ok(CommutationProfile {
            noncommuting,
            pair_s,
            g,
            s,
            s_all,
        })
    }

    fn local_pair(&self, j: usize, k: usize) -> Result<(CMatrix<T>, CMatrix<T>)> {
        let mut union: Vec<Vertex> = self.graph.edge(j).to_vec();
        union.extend_from_slice(self.graph.edge(k));
        union.sort_unstable();
        union.dedup();
        let dims = union
            .iter()
            .map(|&v| self.layout.dim_of(v).unwrap())
            .collect();
        let local = TensorLayout::new(union, dims)?;
        Ok((
            linalg::embed(&self.projectors[j], &local)?,
            linalg::embed(&self.projectors[k], &local)?,
        ))
    }

    /// Full profile: ground data plus commutation data evaluated at
    /// `ordering` (input edge order when `None`).
    pub fn spectral_profile(
        &self,
        ordering: Option<&[usize]>,
        opts: &SolverOptions,
    ) -> Result<SpectralProfile<T>> {
        let ground = self.ground_space(opts)?;
        let comm = self.commutation_profile()?;
        SpectralProfile::assemble(&ground, &comm, ordering)
    }
}

/// Largest singular value of `m` that is not equal to one (zero if none).
pub fn sub_unit_singular_value<T: Real>(m: &CMatrix<T>) -> Result<T> {
    let cutoff = T::one() - T::tol(UNIT_SV_TOL);
    let s = singular_values(m)?
        .into_iter()
        .find(|&v| v < cutoff)
        .unwrap_or_else(T::zero);
    Ok(if s < T::tol(ZERO_SV_TOL) {
        T::zero()
    } else {
        s
    })
}

/// Orthonormal basis of the ground space with the gap above it.
#[derive(Clone, Debug)]
pub struct GroundSpace<T: Real> {
    pub space: Subspace<T>,
    /// Smallest eigenvalue above the ground cluster, if any.
    pub gamma: Option<T>,
}

impl<T: Real> GroundSpace<T> {
    pub fn rank(&self) -> usize {
        self.space.rank()
    }

    pub fn gamma(&self) -> Result<T> {
        self.gamma.ok_or_else(|| {
            Error::DegenerateSpectrum("every eigenvalue lies in the ground cluster (H = 0)".into())
        })
    }

    /// Unique ground state, if the ground space is one-dimensional.
    pub fn state(&self) -> Option<&CVector<T>> {
        (self.rank() == 1).then(|| &self.space.basis()[0])
    }
}

#[derive(Clone, Debug)]
pub struct CommutationProfile<T: Real> {
    /// For each edge, the edges whose projectors do not commute with it.
    pub noncommuting: Vec<Vec<usize>>,
    /// `s_jk` for each noncommuting pair `j < k`.
    pub pair_s: BTreeMap<(usize, usize), T>,
    pub g: usize,
    /// Max of `s_jk` over noncommuting pairs.
    pub s: T,
    /// Max of `s_jk` over all pairs.
    pub s_all: T,
}

impl<T: Real> CommutationProfile<T> {
    pub fn edge_count(&self) -> usize {
        self.noncommuting.len()
    }

    pub fn commute(&self, j: usize, k: usize) -> bool {
        !self.noncommuting[j].contains(&k)
    }

    pub fn s_jk(&self, j: usize, k: usize) -> T {
        let key = if j < k { (j, k) } else { (k, j) };
        self.pair_s.get(&key).copied().unwrap_or_else(T::zero)
    }

    /// `(ζ, g̃)` for an ordering given as a sequence of edge indices.
    pub fn zeta_for_ordering(&self, ordering: &[usize]) -> Result<(T, usize)> {
        let q = self.edge_count();
        let mut pos = vec![usize::MAX; q];
        if ordering.len() != q {
            return Err(input_err!(
                "ordering has {} entries for {q} edges",
                ordering.len()
            ));
        }
        for (i, &e) in ordering.iter().enumerate() {
            if e >= q || pos[e] != usize::MAX {
                return Err(input_err!("ordering is not a permutation of the edges"));
            }
            pos[e] = i;
        }
        // g_k = |{j before k : noncommuting}|
        let g_k: Vec<usize> = (0..q)
            .map(|k| {
                self.noncommuting[k]
                    .iter()
                    .filter(|&&j| pos[j] < pos[k])
                    .count()
            })
            .collect();
        let mut zeta = T::zero();
        let mut g_tilde = 0;
        for j in 0..q {
            let mut z = T::zero();
            let mut gt = 0;
            for &k in &self.noncommuting[j] {
                if pos[j] < pos[k] {
                    let s = self.s_jk(j, k);
                    z += T::from_count(g_k[k]) * s * s;
                    gt += g_k[k];
                }
            }
            zeta = zeta.max(z);
            g_tilde = g_tilde.max(gt);
        }
        Ok((zeta, g_tilde))
    }

    /// Ordering with the smallest `(ζ, g̃)`: exhaustive up to
    /// `exhaustive_limit` edges, otherwise greedy construction followed by
    /// adjacent-swap descent.
    pub fn min_zeta_ordering(&self, exhaustive_limit: usize) -> Result<(Vec<usize>, T, usize)> {
        let q = self.edge_count();
        let mut best: Vec<usize> = (0..q).collect();
        let (mut bz, mut bg) = self.zeta_for_ordering(&best)?;
        let better =
            |z: T, g: usize, bz: T, bg: usize| z < bz - T::tol(1e-14) || (z <= bz && g < bg);
        if q <= exhaustive_limit {
            let mut perm: Vec<usize> = (0..q).collect();
            let mut c = vec![0usize; q];
            let mut i = 0;
            while i < q {
                if c[i] < i {
                    if i % 2 == 0 {
                        perm.swap(0, i);
                    } else {
                        perm.swap(c[i], i);
                    }
                    let (z, g) = self.zeta_for_ordering(&perm)?;
                    if better(z, g, bz, bg) {
                        best = perm.clone();
                        bz = z;
                        bg = g;
                    }
                    c[i] += 1;
                    i = 0;
                } else {
                    c[i] = 0;
                    i += 1;
                }
            }
            return Ok((best, bz, bg));
        }
        loop {
            let mut improved = false;
            for i in 0..q.saturating_sub(1) {
                let mut cand = best.clone();
                cand.swap(i, i + 1);
                let (z, g) = self.zeta_for_ordering(&cand)?;
                if better(z, g, bz, bg) {
                    best = cand;
                    bz = z;
                    bg = g;
                    improved = true;
                }
            }
            if !improved {
                return Ok((best, bz, bg));
            }
        }
    }
}

/// Scalars entering the detectability lemma and the gap theorems.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SpectralProfile<T: Real> {
    pub gamma: T,
    pub ground_rank: usize,
    pub g: usize,
    pub s: T,
    pub s_all: T,
    pub g_tilde: usize,
    pub zeta: T,
    pub ordering: Vec<usize>,
}

impl<T: Real> SpectralProfile<T> {
    pub fn assemble(
        ground: &GroundSpace<T>,
        comm: &CommutationProfile<T>,
        ordering: Option<&[usize]>,
    ) -> Result<Self> {
        let ordering = ordering
            .map(<[usize]>::to_vec)
            .unwrap_or_else(|| (0..comm.edge_count()).collect());
        let (zeta, g_tilde) = comm.zeta_for_ordering(&ordering)?;
        Ok(Self {
            gamma: ground.gamma()?,
            ground_rank: ground.rank(),
            g: comm.g,
            s: comm.s,
            s_all: comm.s_all,
            g_tilde,
            zeta,
            ordering,
        })
    }

    /// Detectability upper bounds `x/(γ+x)` for `x = ζ, s²g̃, s²g², g²`, at a
    /// given energy (γ for the norm version, ε_φ for the state version).
    pub fn dl_bounds(&self, energy: T) -> [T; 4] {
        let s2 = self.s * self.s;
        let xs = [
            self.zeta,
            s2 * T::from_count(self.g_tilde),
            s2 * T::from_count(self.g * self.g),
            T::from_count(self.g * self.g),
        ];
        xs.map(|x| {
            if x == T::zero() {
                T::zero()
            } else {
                x / (energy + x)
            }
        })
    }
}

/// Random frustration-free instance whose ground space contains
/// `ground_rank` random product states.
///
/// Each `P_e` is a projector of random positive rank inside the orthogonal
/// complement of the span of the product states' local factors on `e`; if
/// that complement is empty `P_e = 0`. The resulting ground space can be
/// larger than `ground_rank` when the constraints happen to be weak.
pub fn random_ff_instance<T: Real>(
    seed: u64,
    graph: Hypergraph,
    node_dims: &[usize],
    ground_rank: usize,
) -> Result<FfHamiltonian<T>> {
    if node_dims.len() != graph.vertex_count() {
        return Err(input_err!("one dimension per vertex required"));
    }
    let total: usize = node_dims.iter().product();
    if ground_rank == 0 || ground_rank > total {
        return Err(input_err!(
            "ground rank {ground_rank} is infeasible for dimension {total}"
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = |rng: &mut ChaCha8Rng, d: usize| -> CVector<T> {
        let v = CVector::<T>::from_fn(d, |_, _| {
            C::new(
                T::lit(rng.sample(StandardNormal)),
                T::lit(rng.sample(StandardNormal)),
            )
        });
        let n = v.norm();
        v.unscale(n)
    };
    // factors[i][v] is the local state of product state i on vertex index v
    let factors: Vec<Vec<CVector<T>>> = (0..ground_rank)
        .map(|_| node_dims.iter().map(|&d| gauss(&mut rng, d)).collect())
        .collect();
    let mut projectors = Vec::with_capacity(graph.edge_count());
    for e in graph.edges() {
        let idx: Vec<usize> = e.iter().map(|&v| graph.vertex_index(v).unwrap()).collect();
        let d: usize = idx.iter().map(|&i| node_dims[i]).product();
        let locals: Vec<CVector<T>> = factors
            .iter()
            .map(|f| {
                idx.iter()
                    .map(|&i| f[i].clone())
                    .reduce(|a, b| a.kronecker(&b))
                    .unwrap()
            })
            .collect();
        let mut span = Subspace::from_vectors(d, locals)?;
        let free = d - span.rank();
        if free == 0 {
            projectors.push(CMatrix::zeros(d, d));
            continue;
        }
        let rank = rng.random_range(1..=free);
        let base = span.rank();
        while span.rank() < base + rank {
            span.push(gauss(&mut rng, d));
        }
        let mut p = CMatrix::<T>::zeros(d, d);
        for b in &span.basis()[base..] {
            p += linalg::outer(b, b);
        }
        projectors.push(p);
    }
    FfHamiltonian::new(graph, node_dims, projectors)
}

/// Rank-one projector `|v⟩⟨v|/⟨v|v⟩`.
pub fn rank_one<T: Real>(v: &CVector<T>) -> CMatrix<T> {
    let n2 = v.norm_squared();
    linalg::outer(v, v) * cplx(T::one() / n2)
}
