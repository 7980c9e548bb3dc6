//! Matching and coloring protocols: assembly, exact spectral gaps, the
//! closed-form gap bounds, sample counts, and competitor sample costs.

use rayon::prelude::*;
use serde::Serialize;

use crate::aklt::{bond_of, Bond, BondOperator, BondSource, DirectionDistribution};
use crate::error::{input_err, Error, Result};
use crate::graph::{Hypergraph, MatchingCover};
use crate::hamiltonian::{CommutationProfile, FfHamiltonian, GroundSpace, SpectralProfile};
use crate::linalg::{
    self, hermitian_norm, lanczos_extreme, max_abs, to_dense, CMatrix, EmbeddedOp, Extreme,
    LinearOperator, LocalOperator, ProductSum, SolverOptions,
};
use crate::scalar::{cplx, Real};

/// Slack allowed when comparing a measured gap with a lower bound.
pub const BOUND_TOL: f64 = 1e-9;
/// Allowed `‖ΩQ0 − Q0‖` entry.
pub const FIXES_GROUND_TOL: f64 = 1e-9;

/// How bond operators are built for every edge.
#[derive(Clone, Debug)]
pub enum BondSpec<T: Real> {
    /// Spin tests with directions drawn from a distribution.
    Design(DirectionDistribution<T>),
    /// Exact isotropic operator `Q_e + (2S_e−1)/(2S_e+1) P_e`.
    Isotropic,
    /// Measure `{Q_e, P_e}` directly (`ν_e = 1`).
    Projective,
}

/// Matching cover, matching probabilities and per-edge bond operators.
#[derive(Clone, Debug)]
pub struct Protocol<T: Real> {
    hamiltonian: FfHamiltonian<T>,
    cover: MatchingCover<T>,
    bond_ops: Vec<BondOperator<T>>,
    nu_e: T,
}

impl<T: Real> Protocol<T> {
    pub fn new(
        hamiltonian: FfHamiltonian<T>,
        cover: MatchingCover<T>,
        spec: &BondSpec<T>,
    ) -> Result<Self> {
        let g = hamiltonian.graph();
        let bond_ops = match spec {
            BondSpec::Projective => (0..g.edge_count())
                .into_par_iter()
                .map(|e| BondOperator::projective(e, &hamiltonian.projector(e).matrix))
                .collect::<Result<Vec<_>>>()?,
            _ => {
                let bonds = aklt_bonds(&hamiltonian)?;
                let mut kinds: Vec<Bond> = Vec::new();
                for b in &bonds {
                    if !kinds.contains(b) {
                        kinds.push(*b);
                    }
                }
                let built: Vec<(Bond, BondOperator<T>)> = kinds
                    .into_par_iter()
                    .map(|b| {
                        let op = match spec {
                            BondSpec::Design(mu) => BondOperator::from_design(0, b, mu)?,
                            _ => BondOperator::isotropic(0, b)?,
                        };
                        Ok((b, op))
                    })
                    .collect::<Result<_>>()?;
                bonds
                    .iter()
                    .enumerate()
                    .map(|(e, b)| {
                        let mut op = built.iter().find(|(k, _)| k == b).unwrap().1.clone();
                        op.edge = e;
                        op
                    })
                    .collect()
            }
        };
        Self::from_bond_ops(hamiltonian, cover, bond_ops)
    }

    /// Protocol from explicit bond operators, one per edge in edge order.
    pub fn from_bond_ops(
        hamiltonian: FfHamiltonian<T>,
        cover: MatchingCover<T>,
        bond_ops: Vec<BondOperator<T>>,
    ) -> Result<Self> {
        let g = hamiltonian.graph();
        if bond_ops.len() != g.edge_count() {
            return Err(input_err!(
                "{} bond operators for {} edges",
                bond_ops.len(),
                g.edge_count()
            ));
        }
        // Re-validating the cover against this graph catches covers built
        // for a different one.
        let cover = MatchingCover::new(
            g,
            cover.matchings().to_vec(),
            cover.probabilities().to_vec(),
        )?;
        for (e, op) in bond_ops.iter().enumerate() {
            if op.edge != e {
                return Err(input_err!(
                    "bond operator {e} is labeled with edge {}",
                    op.edge
                ));
            }
            let p = &hamiltonian.projector(e).matrix;
            if op.omega.nrows() != p.nrows() {
                return Err(input_err!("bond operator {e} has the wrong dimension"));
            }
            let q = linalg::identity::<T>(p.nrows()) - p;
            if max_abs(&(&op.omega * &q - &q)) > T::tol(1e-10) {
                return Err(input_err!(
                    "bond operator {e} does not fix the local ground space"
                ));
            }
        }
        let nu_e = bond_ops
            .iter()
            .map(|b| b.nu)
            .fold(T::one(), |a, b| a.min(b));
        Ok(Self {
            hamiltonian,
            cover,
            bond_ops,
            nu_e,
        })
    }

    pub fn hamiltonian(&self) -> &FfHamiltonian<T> {
        &self.hamiltonian
    }

    pub fn cover(&self) -> &MatchingCover<T> {
        &self.cover
    }

    pub fn bond_ops(&self) -> &[BondOperator<T>] {
        &self.bond_ops
    }

    /// `ν_E = min_e ν_e`.
    pub fn nu_e(&self) -> T {
        self.nu_e
    }

    pub fn m(&self) -> usize {
        self.cover.len()
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn embedded_bond(&self, e: usize) -> Result<EmbeddedOp<T>> {
        let p = self.hamiltonian.projector(e);
        let op = LocalOperator::new(
            self.bond_ops[e].omega.clone(),
            p.support.clone(),
            p.dims.clone(),
        )?;
        EmbeddedOp::new(&op, self.hamiltonian.layout())
    }

    /// Matrix-free `T_M = Π_{e∈M} Ω_e`.
    pub fn test_op(&self, matching: &[usize]) -> Result<ProductSum<T>> {
        if !self.hamiltonian.graph().is_matching(matching)? {
            return Err(input_err!("{matching:?} is not a matching"));
        }
        let mut op = ProductSum::new(self.dim());
        op.push(
            T::one(),
            matching
                .iter()
                .map(|&e| self.embedded_bond(e))
                .collect::<Result<_>>()?,
        )?;
        Ok(op)
    }

    /// Dense `T_M`, after checking that its factors commute.
    pub fn test_operator(&self, matching: &[usize], opts: &SolverOptions) -> Result<CMatrix<T>> {
        opts.check_dim(self.dim())?;
        let op = self.test_op(matching)?;
        let factors: Vec<CMatrix<T>> = op.groups()[0].1.iter().map(EmbeddedOp::to_dense).collect();
        for (i, a) in factors.iter().enumerate() {
            for b in &factors[i + 1..] {
                if linalg::operator_norm(&linalg::commutator(a, b))? > T::tol(1e-10) {
                    return Err(Error::Input(
                        "bond operators in a matching do not commute".into(),
                    ));
                }
            }
        }
        Ok(to_dense(&op))
    }

    /// Matrix-free `Ω = Σ_l p_l T_{M_l}`.
    pub fn verification_op(&self) -> Result<ProductSum<T>> {
        let mut op = ProductSum::new(self.dim());
        for (m, &p) in self
            .cover
            .matchings()
            .iter()
            .zip(self.cover.probabilities())
        {
            if p == T::zero() {
                continue;
            }
            op.push(
                p,
                m.iter()
                    .map(|&e| self.embedded_bond(e))
                    .collect::<Result<_>>()?,
            )?;
        }
        Ok(op)
    }

    pub fn verification_operator(&self, opts: &SolverOptions) -> Result<CMatrix<T>> {
        opts.check_dim(self.dim())?;
        Ok(to_dense(&self.verification_op()?))
    }

    /// Gap `ν(Ω)` relative to the Hamiltonian's ground space.
    pub fn spectral_gap(&self, ground: &GroundSpace<T>, opts: &SolverOptions) -> Result<T> {
        let n = self.dim();
        opts.check_dim(n)?;
        if opts.use_dense(n) {
            spectral_gap_nu(
                &self.verification_operator(opts)?,
                &ground.space.projector(),
            )
        } else {
            spectral_gap_nu_op(&self.verification_op()?, ground, opts)
        }
    }

    /// Measured gap with every applicable bound.
    pub fn evaluate(&self, opts: &SolverOptions) -> Result<GapReport<T>> {
        let ground = self.hamiltonian.ground_space(opts)?;
        let comm = self.hamiltonian.commutation_profile()?;
        self.evaluate_with(&ground, &comm, opts)
    }

    pub fn evaluate_with(
        &self,
        ground: &GroundSpace<T>,
        comm: &CommutationProfile<T>,
        opts: &SolverOptions,
    ) -> Result<GapReport<T>> {
        let profile = SpectralProfile::assemble(ground, comm, None)?;
        let nu_measured = self.spectral_gap(ground, opts)?;
        let g = self.hamiltonian.graph();
        let m = self.m();
        let uniform = self.cover.is_uniform();
        let coloring = self.cover.is_coloring();
        let proportional = coloring && self.cover.is_proportional(g);
        let (thm1_strong, thm1_weak) = if uniform && m >= 2 {
            let b = theorem1_bounds(m, self.nu_e, profile.gamma, profile.s, profile.g)?;
            (Some(b.strong), Some(b.weak))
        } else {
            (None, None)
        };
        let thm2 = proportional.then(|| theorem2_bound(self.nu_e, profile.gamma, g.edge_count()));
        let best = [thm1_strong, thm1_weak, thm2]
            .into_iter()
            .flatten()
            .fold(T::zero(), |a, b| a.max(b));
        let mut warnings = Vec::new();
        if let Ok(half) = crate::aklt::half_integer_bonds(g) {
            if !half.is_empty() && self.bond_ops.iter().any(|b| b.bond.is_some()) {
                warnings.push(format!(
                    "edges {half:?} have half-integer S_e (odd-degree endpoints); spins follow deg(j)/2"
                ));
            }
        }
        for b in &self.bond_ops {
            if let (Some(bond), BondSource::Design(mu)) = (b.bond, &b.source) {
                if !mu.is_design(bond.s_e().twice(), T::tol(1e-9)) {
                    warnings.push(format!(
                        "direction distribution is not a {}-design; bond gaps fall below 2/(2S_e+1)",
                        bond.s_e().twice()
                    ));
                    break;
                }
            }
        }
        Ok(GapReport {
            n: g.vertex_count(),
            edges: g.edge_count(),
            dim: self.dim(),
            m,
            coloring,
            probabilities: if uniform {
                "uniform"
            } else if proportional {
                "proportional"
            } else {
                "custom"
            }
            .to_string(),
            gamma: profile.gamma,
            ground_rank: profile.ground_rank,
            g: profile.g,
            s: profile.s,
            g_tilde: profile.g_tilde,
            zeta: profile.zeta,
            nu_e: self.nu_e,
            nu_measured,
            thm1_strong,
            thm1_weak,
            thm2,
            pass: nu_measured >= best - T::tol(BOUND_TOL),
            warnings,
        })
    }
}

/// Spins of every edge, after checking that `h` is the AKLT model of its graph.
pub fn aklt_bonds<T: Real>(h: &FfHamiltonian<T>) -> Result<Vec<Bond>> {
    let g = h.graph();
    let mut out = Vec::with_capacity(g.edge_count());
    let mut cache: Vec<(Bond, CMatrix<T>)> = Vec::new();
    for e in 0..g.edge_count() {
        let b = bond_of(g, e).map_err(|_| input_err!("spin tests need an AKLT Hamiltonian"))?;
        let p = h.projector(e);
        if p.dims != [b.j.dim(), b.k.dim()] {
            return Err(input_err!(
                "spin tests need an AKLT Hamiltonian (node dimensions differ)"
            ));
        }
        let reference = match cache.iter().position(|(c, _)| *c == b) {
            Some(i) => &cache[i].1,
            None => {
                cache.push((b, b.projector_pe::<T>()?));
                &cache.last().unwrap().1
            }
        };
        if max_abs(&(reference - &p.matrix)) > T::tol(1e-9) {
            return Err(input_err!(
                "spin tests need an AKLT Hamiltonian (edge {e} differs)"
            ));
        }
        out.push(b);
    }
    Ok(out)
}

/// `ν = 1 − ‖(1−Q0) Ω (1−Q0)‖` for a Hermitian `Ω` with `Ω Q0 = Q0`.
pub fn spectral_gap_nu<T: Real>(omega: &CMatrix<T>, q0: &CMatrix<T>) -> Result<T> {
    if omega.shape() != q0.shape() {
        return Err(input_err!("Ω and Q0 have different shapes"));
    }
    if max_abs(&(omega * q0 - q0)) > T::tol(FIXES_GROUND_TOL) {
        return Err(input_err!("Ω does not fix the ground space (ΩQ0 ≠ Q0)"));
    }
    let c = linalg::identity::<T>(q0.nrows()) - q0;
    Ok(T::one() - hermitian_norm(&(&c * omega * &c))?)
}

/// Matrix-free version of [`spectral_gap_nu`]; `Ω` must be positive.
pub fn spectral_gap_nu_op<T: Real, A: LinearOperator<T> + ?Sized>(
    omega: &A,
    ground: &GroundSpace<T>,
    opts: &SolverOptions,
) -> Result<T> {
    for v in ground.space.basis() {
        if (omega.apply(v) - v).norm() > T::tol(FIXES_GROUND_TOL) {
            return Err(input_err!("Ω does not fix the ground space (ΩQ0 ≠ Q0)"));
        }
    }
    if ground.rank() == omega.dim() {
        return Ok(T::one());
    }
    let top = lanczos_extreme(omega, Extreme::Largest, &ground.space, opts, 31)?;
    Ok(T::one() - top.value)
}

/// `f_2(x) = (√(1+x)−1)/√(1+x)`, `f_m(x) = (√(1+x)−1)/(√(1+x)+1)` for
/// `m ≥ 3`; `x = ∞` gives the limit 1.
pub fn f_m<T: Real>(m: usize, x: T) -> Result<T> {
    if m < 2 {
        return Err(input_err!("f_m needs m >= 2, got {m}"));
    }
    if matches!(
        x.partial_cmp(&T::zero()),
        None | Some(std::cmp::Ordering::Less)
    ) {
        return Err(input_err!("f_m needs x >= 0"));
    }
    if !x.is_finite() {
        return Ok(T::one());
    }
    let r = (T::one() + x).sqrt();
    Ok(if m == 2 {
        (r - T::one()) / r
    } else {
        (r - T::one()) / (r + T::one())
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Theorem1Bounds<T: Real> {
    /// `(ν_E/m) f_m(γ/(s²g²))`.
    pub strong: T,
    /// `ν_E γ/(6 m g²)`.
    pub weak: T,
}

/// Gap lower bounds for a matching cover of size `m` under uniform
/// probabilities.
///
/// With `s = 0` or `g = 0` the argument of `f_m` is infinite and the
/// strong bound becomes `ν_E/m`; with `g = 0` the weak bound is taken as
/// `ν_E/(6m)`.
pub fn theorem1_bounds<T: Real>(
    m: usize,
    nu_e: T,
    gamma: T,
    s: T,
    g: usize,
) -> Result<Theorem1Bounds<T>> {
    if m < 2 {
        return Err(input_err!("the matching-cover bound needs m >= 2"));
    }
    if !(nu_e > T::zero() && nu_e <= T::one() + T::tol(1e-12)) {
        return Err(input_err!("ν_E must lie in (0, 1]"));
    }
    if !gamma.is_finite() || gamma <= T::zero() {
        return Err(input_err!("γ must be positive"));
    }
    if s < T::zero() || s >= T::one() {
        return Err(input_err!("s must lie in [0, 1)"));
    }
    let mf = T::from_count(m);
    let g2 = T::from_count(g * g);
    let denom = s * s * g2;
    let x = if denom == T::zero() {
        T::max_value().unwrap() * T::lit(2.0)
    } else {
        gamma / denom
    };
    let strong = nu_e / mf * f_m(m, x)?;
    let weak = if g == 0 {
        nu_e / (T::lit(6.0) * mf)
    } else {
        nu_e * gamma / (T::lit(6.0) * mf * g2)
    };
    Ok(Theorem1Bounds { strong, weak })
}

/// Weak bound with `g = 2Δ − 2` for 2-local Hamiltonians:
/// `ν_E γ/(24 m (Δ−1)²)`.
pub fn theorem1_two_local<T: Real>(m: usize, nu_e: T, gamma: T, max_degree: usize) -> Result<T> {
    if max_degree < 2 {
        return Err(input_err!("the 2-local form needs Δ >= 2"));
    }
    Ok(theorem1_bounds(m, nu_e, gamma, T::zero(), 2 * max_degree - 2)?.weak)
}

/// `ν_E γ/|E|` for colorings with `p_l = |M_l|/|E|`.
pub fn theorem2_bound<T: Real>(nu_e: T, gamma: T, edge_count: usize) -> T {
    nu_e * gamma / T::from_count(edge_count)
}

fn check_eps_delta(epsilon: f64, delta: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(input_err!("ε must lie in (0, 1), got {epsilon}"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(input_err!("δ must lie in (0, 1), got {delta}"));
    }
    Ok(())
}

fn ceil_count(x: f64) -> Result<u64> {
    if !x.is_finite() || x < 0.0 || x > u64::MAX as f64 {
        return Err(input_err!("sample count {x} is out of range"));
    }
    Ok(x.ceil() as u64)
}

/// Minimum number of tests `⌈ln δ / ln(1 − νε)⌉`.
pub fn sample_count(nu: f64, epsilon: f64, delta: f64) -> Result<u64> {
    check_eps_delta(epsilon, delta)?;
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(input_err!("ν must lie in (0, 1], got {nu}"));
    }
    ceil_count(delta.ln() / (-nu * epsilon).ln_1p())
}

/// Test count from a gap lower bound: `⌈ln(1/δ)/(ν ε)⌉`.
pub fn sample_count_from_gap(nu: f64, epsilon: f64, delta: f64) -> Result<u64> {
    check_eps_delta(epsilon, delta)?;
    if nu.is_nan() || nu <= 0.0 {
        return Err(input_err!("gap must be positive"));
    }
    ceil_count((1.0 / delta).ln() / (nu * epsilon))
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
pub struct Theorem1Counts {
    pub n_strong: u64,
    pub n_weak: u64,
}

/// `(⌈m ln(1/δ)/(ν_E ε f_m(γ/(s²g²)))⌉, ⌈6mg² ln(1/δ)/(ν_E γ ε)⌉)`.
pub fn sample_count_thm1(
    m: usize,
    nu_e: f64,
    epsilon: f64,
    delta: f64,
    gamma: f64,
    s: f64,
    g: usize,
) -> Result<Theorem1Counts> {
    let b = theorem1_bounds(m, nu_e, gamma, s, g)?;
    Ok(Theorem1Counts {
        n_strong: sample_count_from_gap(b.strong, epsilon, delta)?,
        n_weak: sample_count_from_gap(b.weak, epsilon, delta)?,
    })
}

/// Inputs for the competitor sample-cost formulas; each formula is
/// evaluated only when its inputs are present.
#[derive(Clone, Debug, Default, Serialize)]
pub struct CompetitorParams {
    pub epsilon: f64,
    pub delta: f64,
    pub gamma: f64,
    /// Number of local projectors `|E|`.
    pub edges: Option<usize>,
    /// Number of nodes `n`.
    pub n: Option<usize>,
    pub kappa: Option<f64>,
    pub alpha: Option<f64>,
    /// Gap-dependent polynomial factor of the TM protocol.
    pub r: Option<f64>,
    /// Number of fermionic modes.
    pub modes: Option<usize>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CompetitorCosts {
    /// `|E|³/(2γ²ε²) · ln[−(|E|+1)/ln(1−δ)]`.
    pub hkse: Option<f64>,
    /// `|E|³/(2γ²ε²) · ln(|E|/δ)`.
    pub hkse_approx: Option<f64>,
    /// `n²/(2γ²ε²) · ln((κ+1)/δ)`.
    pub bhsre_lower: Option<f64>,
    /// `n²α²κ²/(2γ²ε²) · ln((κ+1)/δ)`.
    pub bhsre: Option<f64>,
    /// `32R²n⁵ + 2¹¹ n¹⁵ R⁴ ln 2`.
    pub tm_lower: Option<f64>,
    /// `⌈2L⁴ ln(2/δ)/ε²⌉`.
    pub gkea_general: Option<f64>,
    /// `⌈L²(ln L)² ln(2/δ)/(2ε²)⌉`.
    pub gkea_gapped: Option<f64>,
}

pub fn competitor_costs(p: &CompetitorParams) -> Result<CompetitorCosts> {
    check_eps_delta(p.epsilon, p.delta)?;
    let (eps, delta) = (p.epsilon, p.delta);
    let mut out = CompetitorCosts::default();
    let gamma_ok = p.gamma > 0.0 && p.gamma.is_finite();
    if let Some(e) = p.edges.filter(|_| gamma_ok) {
        let e = e as f64;
        let pre = e.powi(3) / (2.0 * p.gamma * p.gamma * eps * eps);
        out.hkse = Some(pre * (-(e + 1.0) / (-delta).ln_1p()).ln());
        out.hkse_approx = Some(pre * (e / delta).ln());
    }
    if let (Some(n), Some(kappa)) = (p.n, p.kappa) {
        if kappa < 2.0 {
            return Err(input_err!("κ must be at least 2, got {kappa}"));
        }
        if gamma_ok {
            let n = n as f64;
            let lower =
                n * n / (2.0 * p.gamma * p.gamma * eps * eps) * ((kappa + 1.0) / delta).ln();
            out.bhsre_lower = Some(lower);
            if let Some(alpha) = p.alpha {
                if alpha * kappa < 1.0 {
                    return Err(input_err!("ακ must be at least 1, got {}", alpha * kappa));
                }
                out.bhsre = Some(lower * alpha * alpha * kappa * kappa);
            }
        }
    } else if let Some(alpha) = p.alpha {
        if let Some(kappa) = p.kappa {
            if alpha * kappa < 1.0 {
                return Err(input_err!("ακ must be at least 1"));
            }
        }
    }
    if let Some(kappa) = p.kappa {
        if kappa < 2.0 {
            return Err(input_err!("κ must be at least 2, got {kappa}"));
        }
    }
    if let (Some(n), Some(r)) = (p.n, p.r) {
        let n = n as f64;
        out.tm_lower =
            Some(32.0 * r * r * n.powi(5) + 2f64.powi(11) * n.powi(15) * r.powi(4) * 2f64.ln());
    }
    if let Some(l) = p.modes {
        let l = l as f64;
        let log = (2.0 / delta).ln();
        out.gkea_general = Some((2.0 * l.powi(4) * log / (eps * eps)).ceil());
        out.gkea_gapped = Some((l * l * l.ln().powi(2) * log / (2.0 * eps * eps)).ceil());
    }
    Ok(out)
}

/// AKLT closed forms that depend only on `Δ(G)`, `n` and `γ`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AkltBounds {
    /// `γ/(24Δ⁴)`.
    pub gap_floor: f64,
    /// `⌈24Δ⁴ ln(1/δ)/(γε)⌉`.
    pub n_ceiling: u64,
    /// `4γ/(nΔ(2Δ+1))`.
    pub large_degree_gap: f64,
    /// `⌈n³ ln(1/δ)/(2γε)⌉`.
    pub large_degree_n: u64,
}

pub fn aklt_bounds(g: &Hypergraph, gamma: f64, epsilon: f64, delta: f64) -> Result<AkltBounds> {
    check_eps_delta(epsilon, delta)?;
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(input_err!("γ must be positive"));
    }
    let d = g.max_degree() as f64;
    let n = g.vertex_count() as f64;
    if d == 0.0 {
        return Err(input_err!("graph has no edges"));
    }
    let log = (1.0 / delta).ln();
    Ok(AkltBounds {
        gap_floor: gamma / (24.0 * d.powi(4)),
        n_ceiling: ceil_count(24.0 * d.powi(4) * log / (gamma * epsilon))?,
        large_degree_gap: 4.0 * gamma / (n * d * (2.0 * d + 1.0)),
        large_degree_n: ceil_count(n.powi(3) * log / (2.0 * gamma * epsilon))?,
    })
}

/// Measured gap of a protocol next to every applicable lower bound.
#[derive(Clone, Debug, Serialize)]
pub struct GapReport<T: Real> {
    pub n: usize,
    pub edges: usize,
    pub dim: usize,
    pub m: usize,
    pub coloring: bool,
    pub probabilities: String,
    pub gamma: T,
    pub ground_rank: usize,
    pub g: usize,
    pub s: T,
    pub g_tilde: usize,
    pub zeta: T,
    pub nu_e: T,
    pub nu_measured: T,
    pub thm1_strong: Option<T>,
    pub thm1_weak: Option<T>,
    pub thm2: Option<T>,
    pub pass: bool,
    pub warnings: Vec<String>,
}

/// One CSV/JSON row: gap data, sample counts and competitor costs.
#[derive(Clone, Debug, Serialize)]
pub struct ReportRow {
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
    pub nu_measured: Option<f64>,
    pub thm1_strong: Option<f64>,
    pub thm1_weak: Option<f64>,
    pub thm2: Option<f64>,
    #[serde(rename = "N")]
    pub n_tests: Option<u64>,
    #[serde(rename = "N_strong")]
    pub n_strong: Option<u64>,
    #[serde(rename = "N_weak")]
    pub n_weak: Option<u64>,
    #[serde(rename = "HKSE")]
    pub hkse: Option<f64>,
    #[serde(rename = "BHSRE")]
    pub bhsre: Option<f64>,
}

impl ReportRow {
    /// Builds the row for a measured report at precision `(ε, δ)`; BHSRE
    /// uses `kappa` (and `alpha` when given).
    pub fn from_report<T: Real>(
        r: &GapReport<T>,
        epsilon: f64,
        delta: f64,
        kappa: f64,
        alpha: Option<f64>,
    ) -> Result<Self> {
        let f = |x: Option<T>| x.map(Real::as_f64);
        let strong = f(r.thm1_strong);
        let weak = f(r.thm1_weak);
        let gamma = r.gamma.as_f64();
        let costs = competitor_costs(&CompetitorParams {
            epsilon,
            delta,
            gamma,
            edges: Some(r.edges),
            n: Some(r.n),
            kappa: Some(kappa),
            alpha,
            ..Default::default()
        })?;
        let nu = r.nu_measured.as_f64().min(1.0);
        Ok(Self {
            n: r.n,
            m: r.m,
            gamma,
            nu_measured: Some(nu),
            thm1_strong: strong,
            thm1_weak: weak,
            thm2: f(r.thm2),
            n_tests: if nu > 0.0 {
                Some(sample_count(nu, epsilon, delta)?)
            } else {
                None
            },
            n_strong: strong
                .map(|b| sample_count_from_gap(b, epsilon, delta))
                .transpose()?,
            n_weak: weak
                .map(|b| sample_count_from_gap(b, epsilon, delta))
                .transpose()?,
            hkse: costs.hkse,
            bhsre: alpha.map_or(costs.bhsre_lower, |_| costs.bhsre),
        })
    }
}

/// Writes rows as CSV with a header line.
pub fn write_csv<W: std::io::Write, R: Serialize>(out: W, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Gap of a homogeneous-scaled operator `Q0 + λ(1−Q0)`, for tests.
pub fn homogeneous<T: Real>(q0: &CMatrix<T>, lambda: T) -> CMatrix<T> {
    let n = q0.nrows();
    q0 + (linalg::identity::<T>(n) - q0) * cplx(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aklt::{aklt_hamiltonian, design_catalog};
    use crate::graph::generators;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    fn chain_protocol(n: usize, spec: BondSpec<f64>) -> Protocol<f64> {
        let g = generators::chain(n, true).unwrap();
        let h = aklt_hamiltonian::<f64>(&g).unwrap();
        let cover = g.edge_coloring::<f64>().unwrap();
        Protocol::new(h, cover, &spec).unwrap()
    }

    #[test]
    fn f_m_values() {
        assert!((f_m::<f64>(2, 0.35).unwrap() - 0.139_337).abs() < 1e-6);
        assert!((f_m::<f64>(3, 0.025).unwrap() - 0.006_173_07).abs() < 1e-8);
        assert_eq!(f_m::<f64>(2, 0.0).unwrap(), 0.0);
        assert_eq!(f_m::<f64>(4, f64::INFINITY).unwrap(), 1.0);
        assert!(f_m::<f64>(1, 0.5).is_err());
        assert!(f_m::<f64>(2, -0.5).is_err());
    }

    #[test]
    fn chain_and_honeycomb_values() {
        let b = theorem1_bounds::<f64>(2, 0.4, 0.35, 0.5, 2).unwrap();
        assert!((b.strong - 0.027_867_4).abs() < 1e-7);
        assert!(b.strong >= b.weak);
        let b = theorem1_bounds::<f64>(3, 2.0 / 7.0, 0.10, 0.5, 4).unwrap();
        assert!((b.strong - 5.879e-4).abs() < 1e-6);
        let two_local = theorem1_two_local::<f64>(3, 0.4, 0.35, 3).unwrap();
        assert!((two_local - 0.4 * 0.35 / (24.0 * 3.0 * 4.0)).abs() < 1e-15);
        let degenerate = theorem1_bounds::<f64>(2, 0.4, 0.35, 0.0, 0).unwrap();
        assert!((degenerate.strong - 0.2).abs() < 1e-15);
    }

    #[test]
    fn sample_counts() {
        assert_eq!(sample_count(1.0, 0.01, 0.01).unwrap(), 459);
        assert_eq!(sample_count(1.0, 0.5, 0.5).unwrap(), 1);
        assert!(sample_count(1.0, 1.0, 0.5).is_err());
        assert!(sample_count(0.0, 0.1, 0.5).is_err());
        let c = sample_count_thm1(2, 0.4, 0.01, 0.01, 0.35, 0.5, 2).unwrap();
        assert_eq!(c.n_strong, 16526);
        assert!(c.n_strong <= c.n_weak);
        let c = sample_count_thm1(3, 2.0 / 7.0, 0.01, 0.01, 0.10, 0.5, 4).unwrap();
        assert_eq!(c.n_strong, 783_310);
    }

    #[test]
    fn competitor_values() {
        let p = CompetitorParams {
            epsilon: 0.01,
            delta: 0.01,
            gamma: 0.35,
            edges: Some(100),
            n: Some(100),
            kappa: Some(2.0),
            ..Default::default()
        };
        let c = competitor_costs(&p).unwrap();
        assert!((c.hkse.unwrap() / 3.76e11 - 1.0).abs() < 0.01);
        assert!((c.bhsre_lower.unwrap() / 2.32e9 - 1.0).abs() < 0.01);
        let bad = CompetitorParams {
            kappa: Some(1.5),
            ..p.clone()
        };
        assert!(competitor_costs(&bad).is_err());
        let bad = CompetitorParams {
            alpha: Some(0.1),
            ..p
        };
        assert!(competitor_costs(&bad).is_err());
        let tm = competitor_costs(&CompetitorParams {
            epsilon: 0.01,
            delta: 0.01,
            n: Some(100),
            r: Some(1.0),
            ..Default::default()
        })
        .unwrap();
        assert!(tm.tm_lower.unwrap() >= 1e33);
    }

    #[test]
    fn aklt_closed_forms() {
        let chain = generators::chain(10, true).unwrap();
        let b = aklt_bounds(&chain, 0.35, 0.01, 0.01).unwrap();
        assert!((b.gap_floor - 0.35 / 384.0).abs() < 1e-15);
        assert_eq!(
            b.n_ceiling,
            (384.0 * 100f64.ln() / (0.35 * 0.01)).ceil() as u64
        );
        let honey = generators::honeycomb(4, 4, (true, true)).unwrap();
        let b = aklt_bounds(&honey, 0.10, 0.01, 0.01).unwrap();
        assert!((b.gap_floor - 5.144e-5).abs() < 1e-8);
    }

    #[test]
    fn gap_helpers() {
        let q0 = linalg::random_projector::<f64>(6, 2, &mut rand::rng());
        let omega = homogeneous(&q0, 0.3);
        assert!((spectral_gap_nu(&omega, &q0).unwrap() - 0.7).abs() < 1e-12);
        assert!((spectral_gap_nu(&q0, &q0).unwrap() - 1.0).abs() < 1e-12);
        assert!(spectral_gap_nu(&linalg::identity::<f64>(6), &q0).is_ok());
        let bad = linalg::identity::<f64>(6) * cplx(0.5);
        assert!(spectral_gap_nu(&bad, &q0).is_err());
    }

    #[test]
    fn chain_protocol_bounds() {
        let p = chain_protocol(4, BondSpec::Design(design_catalog("icosahedron").unwrap()));
        assert!((p.nu_e() - 0.4).abs() < 1e-10);
        let r = p.evaluate(&opts()).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.nu_measured >= r.thm1_strong.unwrap() - 1e-9);
        assert!(r.thm1_strong.unwrap() >= r.thm1_weak.unwrap());
        let ground = p.hamiltonian().ground_space(&opts()).unwrap();
        let psi = ground.state().unwrap();
        for m in p.cover().matchings() {
            let t = p.test_operator(m, &opts()).unwrap();
            assert!((&t * psi - psi).norm() < 1e-9);
        }
        assert!(p.test_operator(&[0, 1], &opts()).is_err());
    }

    #[test]
    fn trivial_coloring_saturates() {
        let g = generators::chain(4, true).unwrap();
        let h = aklt_hamiltonian::<f64>(&g).unwrap();
        let trivial = MatchingCover::<f64>::trivial(&g)
            .unwrap()
            .to_proportional(&g)
            .unwrap();
        let p = Protocol::new(h, trivial, &BondSpec::Isotropic).unwrap();
        let r = p.evaluate(&opts()).unwrap();
        assert!((r.nu_measured - r.thm2.unwrap()).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn matrix_free_gap_matches_dense() {
        let p = chain_protocol(4, BondSpec::Design(design_catalog("icosahedron").unwrap()));
        let ground = p.hamiltonian().ground_space(&opts()).unwrap();
        let dense = p.spectral_gap(&ground, &opts()).unwrap();
        let sparse = spectral_gap_nu_op(&p.verification_op().unwrap(), &ground, &opts()).unwrap();
        assert!((dense - sparse).abs() < 1e-9);
    }

    #[test]
    fn projective_protocol_on_random_instance() {
        let g = generators::chain(4, false).unwrap();
        let h =
            crate::hamiltonian::random_ff_instance::<f64>(3, g.clone(), &[2, 2, 2, 2], 1).unwrap();
        let cover = g.edge_coloring::<f64>().unwrap();
        let p = Protocol::new(h, cover, &BondSpec::Projective).unwrap();
        assert_eq!(p.nu_e(), 1.0);
        let r = p.evaluate(&opts()).unwrap();
        assert!(r.pass, "{r:?}");
        let h2 =
            crate::hamiltonian::random_ff_instance::<f64>(3, g.clone(), &[2, 2, 2, 2], 1).unwrap();
        let spin = Protocol::new(h2, g.edge_coloring::<f64>().unwrap(), &BondSpec::Isotropic);
        assert!(spin.is_err());
    }
}
