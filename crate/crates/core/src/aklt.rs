//! AKLT Hamiltonians on loopless graphs and spin-measurement bond tests.
//!
//! Each vertex `j` carries spin `S_j = deg(j)/2`. A bond `e = {j, k}` is
//! penalized by the projector `P_e` onto total spin `S_e = S_j + S_k`, and
//! tested by measuring both spins along a common direction `r`:
//! the test fails iff both outcomes are maximal or both are minimal.

use std::path::Path;

use nalgebra::ComplexField;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{input_err, Result};
use crate::graph::Hypergraph;
use crate::hamiltonian::FfHamiltonian;
use crate::linalg::{self, eigh, max_abs, operator_norm, CMatrix, CVector};
use crate::scalar::{cplx, Real, C};

/// Eigenvalues of `(S_j + S_k)²` within this distance are clustered.
pub const SPIN_CLUSTER_TOL: f64 = 1e-8;

/// A spin value stored as `2S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpinValue {
    twice_s: u32,
}

impl SpinValue {
    pub fn new(twice_s: u32) -> Result<Self> {
        if twice_s == 0 {
            return Err(input_err!("spin value must be at least 1/2"));
        }
        Ok(Self { twice_s })
    }

    pub fn twice(self) -> u32 {
        self.twice_s
    }

    pub fn dim(self) -> usize {
        self.twice_s as usize + 1
    }

    pub fn value<T: Real>(self) -> T {
        T::lit(f64::from(self.twice_s) / 2.0)
    }

    pub fn is_integer(self) -> bool {
        self.twice_s.is_multiple_of(2)
    }
}

impl std::ops::Add for SpinValue {
    type Output = Self;

    fn add(self, other: Self) -> Self {
        Self {
            twice_s: self.twice_s + other.twice_s,
        }
    }
}

impl std::fmt::Display for SpinValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice_s / 2)
        } else {
            write!(f, "{}/2", self.twice_s)
        }
    }
}

/// `(S_x, S_y, S_z)` in the basis `m = S, S−1, …, −S`.
pub fn spin_operators<T: Real>(s: SpinValue) -> [CMatrix<T>; 3] {
    let d = s.dim();
    let sv = f64::from(s.twice_s) / 2.0;
    let mut raise = CMatrix::<T>::zeros(d, d);
    for a in 1..d {
        let m = sv - a as f64;
        raise[(a - 1, a)] = cplx(T::lit((sv * (sv + 1.0) - m * (m + 1.0)).sqrt()));
    }
    let lower = raise.adjoint();
    let sx = (&raise + &lower) * cplx(T::lit(0.5));
    let sy = (&raise - &lower) * C::new(T::zero(), T::lit(-0.5));
    let sz = CMatrix::from_diagonal(&CVector::from_fn(d, |a, _| cplx(T::lit(sv - a as f64))));
    [sx, sy, sz]
}

/// `r · S` for a unit vector `r`.
pub fn spin_along<T: Real>(s: SpinValue, r: &[T; 3]) -> CMatrix<T> {
    let [sx, sy, sz] = spin_operators::<T>(s);
    sx * cplx(r[0]) + sy * cplx(r[1]) + sz * cplx(r[2])
}

fn check_unit<T: Real>(r: &[T; 3]) -> Result<()> {
    let n = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    if !n.is_finite() || (n - T::one()).abs() > T::tol(1e-12) {
        return Err(input_err!(
            "direction must be a unit vector (norm {})",
            n.as_f64()
        ));
    }
    Ok(())
}

/// Multiplies `v` by a phase so its largest-magnitude amplitude (first one
/// on ties) is real and positive.
pub fn fix_phase<T: Real>(v: &mut CVector<T>) {
    let max = v.iter().fold(T::zero(), |m, z| m.max(z.modulus()));
    if max == T::zero() {
        return;
    }
    let slack = T::tol(1e-12);
    let z = *v.iter().find(|z| z.modulus() >= max - slack).unwrap();
    let phase = z.conj() / cplx(z.modulus());
    for x in v.iter_mut() {
        *x *= phase;
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

fn coherent_plus<T: Real>(s: SpinValue, r: &[T; 3]) -> CVector<T> {
    let z = r[2].max(-T::one()).min(T::one());
    let half = z.acos() * T::lit(0.5);
    let phi = r[1].atan2(r[0]);
    let (c, sn) = (half.cos(), half.sin());
    let e = C::new(phi.cos(), phi.sin()) * cplx(sn);
    let n = s.twice_s;
    let mut v = CVector::from_fn(s.dim(), |a, _| {
        let a = a as u32;
        cplx(T::lit(binomial(n, a).sqrt()) * c.powi((n - a) as i32)) * e.powi(a as i32)
    });
    fix_phase(&mut v);
    v
}

/// Extremal eigenvectors `(|+⟩_r, |−⟩_r)` of `r · S` (eigenvalues `±S`),
/// from the closed-form spin-coherent amplitudes.
pub fn coherent_extremes<T: Real>(s: SpinValue, r: &[T; 3]) -> Result<(CVector<T>, CVector<T>)> {
    check_unit(r)?;
    let minus_r = [-r[0], -r[1], -r[2]];
    Ok((coherent_plus(s, r), coherent_plus(s, &minus_r)))
}

/// Spins on the two ends of a bond, ordered as the tensor factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    pub j: SpinValue,
    pub k: SpinValue,
}

impl Bond {
    pub fn new(j: SpinValue, k: SpinValue) -> Self {
        Self { j, k }
    }

    pub fn s_e(&self) -> SpinValue {
        self.j + self.k
    }

    pub fn dim(&self) -> usize {
        self.j.dim() * self.k.dim()
    }

    /// Optimal gap `2/(2S_e+1)`.
    pub fn isotropic_gap<T: Real>(&self) -> T {
        T::lit(2.0) / T::from_count(self.s_e().dim())
    }

    /// Projector onto total spin `S_e`, from the spectrum of `(S_j+S_k)²`.
    pub fn projector_pe<T: Real>(&self) -> Result<CMatrix<T>> {
        let a = spin_operators::<T>(self.j);
        let b = spin_operators::<T>(self.k);
        let (ij, ik) = (
            linalg::identity::<T>(self.j.dim()),
            linalg::identity::<T>(self.k.dim()),
        );
        let mut total = CMatrix::<T>::zeros(self.dim(), self.dim());
        for (sa, sb) in a.iter().zip(&b) {
            let s = linalg::kron(sa, &ik) + linalg::kron(&ij, sb);
            total += &s * &s;
        }
        let se: f64 = self.s_e().value();
        let target = T::lit(se * (se + 1.0));
        let e = eigh(&total)?;
        let mut p = CMatrix::<T>::zeros(self.dim(), self.dim());
        let mut rank = 0;
        for (i, &v) in e.values.iter().enumerate() {
            if (v - target).abs() < T::tol(SPIN_CLUSTER_TOL) {
                let u = e.vector(i);
                p += linalg::outer(&u, &u);
                rank += 1;
            }
        }
        if rank != self.s_e().dim() {
            return Err(input_err!(
                "spin-{} subspace has rank {rank}, expected {}",
                self.s_e(),
                self.s_e().dim()
            ));
        }
        Ok(p)
    }

    /// `Q_e = 1 − P_e`.
    pub fn q_e<T: Real>(&self) -> Result<CMatrix<T>> {
        Ok(linalg::identity::<T>(self.dim()) - self.projector_pe()?)
    }

    /// Product kets `|+⟩_{e,r}` and `|−⟩_{e,r}`.
    pub fn extremal_kets<T: Real>(&self, r: &[T; 3]) -> Result<(CVector<T>, CVector<T>)> {
        let (pj, mj) = coherent_extremes(self.j, r)?;
        let (pk, mk) = coherent_extremes(self.k, r)?;
        Ok((pj.kronecker(&pk), mj.kronecker(&mk)))
    }

    /// `R_{e,r} = 1 − |+⟩⟨+| − |−⟩⟨−|`.
    pub fn test_projector<T: Real>(&self, r: &[T; 3]) -> Result<CMatrix<T>> {
        let (p, m) = self.extremal_kets(r)?;
        Ok(linalg::identity::<T>(self.dim()) - linalg::outer(&p, &p) - linalg::outer(&m, &m))
    }

    /// `Ω_e(μ) = Σ_i w_i R_{e,r_i}`.
    pub fn operator<T: Real>(&self, mu: &DirectionDistribution<T>) -> Result<CMatrix<T>> {
        let mut omega = CMatrix::<T>::zeros(self.dim(), self.dim());
        for (r, &w) in mu.points().iter().zip(mu.weights()) {
            omega += self.test_projector(r)? * cplx(w);
        }
        Ok(omega)
    }

    /// `Ω_e^iso = Q_e + (2S_e−1)/(2S_e+1) P_e`.
    pub fn isotropic<T: Real>(&self) -> Result<CMatrix<T>> {
        let p = self.projector_pe::<T>()?;
        let d = T::from_count(self.s_e().dim());
        let lambda = (d - T::lit(2.0)) / d;
        Ok(linalg::identity::<T>(self.dim()) - &p + p * cplx(lambda))
    }

    /// Matrix form of `tr[(R_{e,r} − Q_e)(R_{e,s} − Q_e)]`.
    pub fn overlap_trace_matrix<T: Real>(&self, r: &[T; 3], s: &[T; 3]) -> Result<T> {
        let q = self.q_e::<T>()?;
        let a = self.test_projector(r)? - &q;
        let b = self.test_projector(s)? - &q;
        Ok(linalg::trace(&(a * b)).re)
    }

    pub fn theorem3_report<T: Real>(
        &self,
        mu: &DirectionDistribution<T>,
    ) -> Result<Theorem3Report<T>> {
        theorem3_report_for(self, &self.operator(mu)?, mu)
    }
}

/// Outcome of the four equivalent conditions for an optimal bond operator,
/// together with the trace inequality that characterizes them.
#[derive(Clone, Debug, Serialize)]
pub struct Theorem3Report<T: Real> {
    pub gap: T,
    pub optimal_gap: T,
    /// `ν = 2/(2S_e+1)`.
    pub gap_is_optimal: bool,
    /// `Ω = Q_e + (2S_e−1)/(2S_e+1) P_e`.
    pub equals_isotropic: bool,
    /// `Ω − Q_e` proportional to `P_e`.
    pub is_homogeneous: bool,
    /// Symmetrized distribution is a `2S_e`-design.
    pub is_design: bool,
    /// `tr(Ω − Q_e)²`.
    pub trace_sq: T,
    /// `(2S_e−1)²/(2S_e+1)`.
    pub lemma5_floor: T,
}

impl<T: Real> Theorem3Report<T> {
    /// All four statements agree.
    pub fn consistent(&self) -> bool {
        let s = [
            self.gap_is_optimal,
            self.equals_isotropic,
            self.is_homogeneous,
            self.is_design,
        ];
        s.iter().all(|&x| x) || s.iter().all(|&x| !x)
    }

    pub fn lemma5_holds(&self) -> bool {
        self.trace_sq >= self.lemma5_floor - T::tol(1e-10)
    }

    pub fn lemma5_saturated(&self) -> bool {
        (self.trace_sq - self.lemma5_floor).abs() <= T::tol(1e-10)
    }
}

/// Tolerance for the three operator statements.
pub const THEOREM3_TOL: f64 = 1e-9;

fn theorem3_report_for<T: Real>(
    bond: &Bond,
    omega: &CMatrix<T>,
    mu: &DirectionDistribution<T>,
) -> Result<Theorem3Report<T>> {
    let tol = T::tol(THEOREM3_TOL);
    let p = bond.projector_pe::<T>()?;
    let q = linalg::identity::<T>(bond.dim()) - &p;
    let o = omega - &q;
    let gap = T::one() - operator_norm(&o)?;
    let d = T::from_count(bond.s_e().dim());
    let optimal_gap = T::lit(2.0) / d;
    let iso_lambda = (d - T::lit(2.0)) / d;
    let fitted = linalg::trace(&o).re / d;
    let equals_isotropic = operator_norm(&(&o - &p * cplx(iso_lambda)))? < tol;
    let is_homogeneous = operator_norm(&(&o - &p * cplx(fitted)))? < tol;
    let trace_sq = linalg::trace(&(&o * &o)).re;
    let two_se_minus_one = d - T::lit(2.0);
    Ok(Theorem3Report {
        gap,
        optimal_gap,
        gap_is_optimal: (gap - optimal_gap).abs() < tol,
        equals_isotropic,
        is_homogeneous,
        is_design: mu.symmetrize().is_design(bond.s_e().twice(), tol),
        trace_sq,
        lemma5_floor: two_se_minus_one * two_se_minus_one / d,
    })
}

/// Closed-form overlap `2S_e − 3 + 2((1+c)/2)^{2S_e} + 2((1−c)/2)^{2S_e}`.
pub fn overlap_trace<T: Real>(s_e: SpinValue, c: T) -> Result<T> {
    check_cosine(c)?;
    let n = s_e.twice() as i32;
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    Ok(T::from_count(n as usize) - T::lit(3.0)
        + two * ((T::one() + c) * half).powi(n)
        + two * ((T::one() - c) * half).powi(n))
}

/// Same quantity in the binomial form `2S_e − 3 + 2^{2−2S_e} Σ_j C(2S_e, 2j) c^{2j}`.
pub fn overlap_trace_binomial<T: Real>(s_e: SpinValue, c: T) -> Result<T> {
    check_cosine(c)?;
    let n = s_e.twice();
    let sum = (0..=n / 2).fold(T::zero(), |acc, j| {
        acc + T::lit(binomial(n, 2 * j)) * c.powi(2 * j as i32)
    });
    Ok(T::from_count(n as usize) - T::lit(3.0) + T::lit(2.0).powi(2 - n as i32) * sum)
}

fn check_cosine<T: Real>(c: T) -> Result<()> {
    if !c.is_finite() || c.abs() > T::one() + T::tol(1e-12) {
        return Err(input_err!("cosine {} is outside [-1, 1]", c.as_f64()));
    }
    Ok(())
}

/// Finitely supported probability measure on the unit sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionDistribution<T: Real> {
    points: Vec<[T; 3]>,
    weights: Vec<T>,
}

/// JSON form `{"points": [[x, y, z], ...], "weights": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DesignFile {
    pub points: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

pub const DESIGN_NAMES: [&str; 5] = [
    "tetrahedron",
    "octahedron",
    "cube",
    "icosahedron",
    "dodecahedron",
];

impl<T: Real> DirectionDistribution<T> {
    pub fn new(points: Vec<[T; 3]>, weights: Vec<T>) -> Result<Self> {
        if points.is_empty() {
            return Err(input_err!("distribution needs at least one point"));
        }
        if points.len() != weights.len() {
            return Err(input_err!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            ));
        }
        for r in &points {
            check_unit(r)?;
        }
        if weights.iter().any(|&w| !w.is_finite() || w < T::zero()) {
            return Err(input_err!("weights must be finite and nonnegative"));
        }
        let total = weights.iter().fold(T::zero(), |a, &b| a + b);
        if (total - T::one()).abs() > T::tol(1e-12) {
            return Err(input_err!("weights sum to {}, not 1", total.as_f64()));
        }
        Ok(Self { points, weights })
    }

    /// Uniform weights on the given points after scaling each to unit length.
    pub fn uniform(points: &[[T; 3]]) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(input_err!("distribution needs at least one point"));
        }
        let w = T::one() / T::from_count(n);
        Self::normalized(points, &vec![w; n])
    }

    /// Scales points to unit length and weights to unit sum.
    pub fn normalized(points: &[[T; 3]], weights: &[T]) -> Result<Self> {
        let pts = points
            .iter()
            .map(|r| {
                let n = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
                if !n.is_finite() || n <= T::tol(1e-12) {
                    return Err(input_err!("direction has zero or non-finite length"));
                }
                Ok([r[0] / n, r[1] / n, r[2] / n])
            })
            .collect::<Result<Vec<_>>>()?;
        if weights.iter().any(|&w| !w.is_finite() || w < T::zero()) {
            return Err(input_err!("weights must be finite and nonnegative"));
        }
        let total = weights.iter().fold(T::zero(), |a, &b| a + b);
        if total <= T::zero() {
            return Err(input_err!("weights must have positive sum"));
        }
        Self::new(pts, weights.iter().map(|&w| w / total).collect())
    }

    pub fn points(&self) -> &[[T; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `p·self + (1−p)·other`.
    pub fn mix(&self, other: &Self, p: T) -> Result<Self> {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(input_err!("mixing weight must lie in [0, 1]"));
        }
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        let mut weights: Vec<T> = self.weights.iter().map(|&w| w * p).collect();
        weights.extend(other.weights.iter().map(|&w| w * (T::one() - p)));
        Self::normalized(&points, &weights)
    }

    /// Applies a 3×3 orthogonal matrix (row-major) to every point.
    pub fn transform(&self, m: &[[T; 3]; 3]) -> Result<Self> {
        let points: Vec<[T; 3]> = self
            .points
            .iter()
            .map(|r| {
                let mut out = [T::zero(); 3];
                for (i, row) in m.iter().enumerate() {
                    out[i] = row[0] * r[0] + row[1] * r[1] + row[2] * r[2];
                }
                out
            })
            .collect();
        Self::normalized(&points, &self.weights)
    }

    /// Average of the distribution and its center inversion.
    pub fn symmetrize(&self) -> Self {
        let half = T::lit(0.5);
        let mut points = self.points.clone();
        points.extend(self.points.iter().map(|r| [-r[0], -r[1], -r[2]]));
        let mut weights: Vec<T> = self.weights.iter().map(|&w| w * half).collect();
        weights.extend(self.weights.iter().map(|&w| w * half));
        Self { points, weights }
    }

    /// `F_t = Σ_ij w_i w_j (r_i · r_j)^t`.
    pub fn frame_potential(&self, t: u32) -> T {
        let mut f = T::zero();
        for (a, &wa) in self.points.iter().zip(&self.weights) {
            for (b, &wb) in self.points.iter().zip(&self.weights) {
                let c = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
                f += wa * wb * c.powi(t as i32);
            }
        }
        f
    }

    /// Whether the symmetrized distribution satisfies `F_k = 1/(k+1)`
    /// within `tol` for every even `k ≤ t`.
    ///
    /// Odd moments of a center-symmetric measure vanish, so for a symmetric
    /// input this is the usual `t`-design test.
    pub fn is_design(&self, t: u32, tol: T) -> bool {
        let sym = self.symmetrize();
        (0..=t).step_by(2).all(|k| {
            (sym.frame_potential(k) - T::one() / T::from_count(k as usize + 1)).abs() <= tol
        })
    }

    /// Points drawn uniformly on the sphere with random weights.
    pub fn random(rng: &mut impl Rng, n: usize) -> Self {
        let points: Vec<[T; 3]> = (0..n.max(1)).map(|_| random_direction(rng)).collect();
        let weights: Vec<T> = points
            .iter()
            .map(|_| T::lit(rng.random::<f64>() + 1e-3))
            .collect();
        Self::normalized(&points, &weights).expect("valid random distribution")
    }

    pub fn from_file(file: &DesignFile) -> Result<Self> {
        let points: Vec<[T; 3]> = file
            .points
            .iter()
            .map(|p| [T::lit(p[0]), T::lit(p[1]), T::lit(p[2])])
            .collect();
        match &file.weights {
            Some(w) => {
                if w.len() != points.len() {
                    return Err(input_err!(
                        "{} points but {} weights",
                        points.len(),
                        w.len()
                    ));
                }
                let total: f64 = w.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(input_err!("design weights sum to {total}, not 1"));
                }
                let w: Vec<T> = w.iter().map(|&x| T::lit(x)).collect();
                Self::normalized(&points, &w)
            }
            None => Self::uniform(&points),
        }
    }

    pub fn to_file(&self) -> DesignFile {
        DesignFile {
            points: self
                .points
                .iter()
                .map(|r| [r[0].as_f64(), r[1].as_f64(), r[2].as_f64()])
                .collect(),
            weights: Some(self.weights.iter().map(|w| w.as_f64()).collect()),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: DesignFile = serde_json::from_str(&text)?;
        Self::from_file(&file)
    }

    /// Catalog name, or a path to a design JSON file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        if DESIGN_NAMES.contains(&name_or_path) {
            design_catalog(name_or_path)
        } else if Path::new(name_or_path).exists() {
            Self::load(Path::new(name_or_path))
        } else {
            Err(input_err!(
                "unknown design '{name_or_path}' (expected one of {} or a JSON file)",
                DESIGN_NAMES.join("|")
            ))
        }
    }
}

/// Uniform random unit vector.
pub fn random_direction<T: Real>(rng: &mut impl Rng) -> [T; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-8 {
            return [T::lit(v[0] / n), T::lit(v[1] / n), T::lit(v[2] / n)];
        }
    }
}

/// Uniform random rotation matrix (row-major), via a random unit quaternion.
pub fn random_rotation<T: Real>(rng: &mut impl Rng) -> [[T; 3]; 3] {
    let q: [f64; 4] = loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            break q.map(|x| x / n);
        }
    };
    let [w, x, y, z] = q;
    let m = [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - z * w),
            2.0 * (x * z + y * w),
        ],
        [
            2.0 * (x * y + z * w),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - x * w),
        ],
        [
            2.0 * (x * z - y * w),
            2.0 * (y * z + x * w),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ];
    m.map(|row| row.map(T::lit))
}

/// Vertices of the platonic solids as uniform distributions.
pub fn design_catalog<T: Real>(name: &str) -> Result<DirectionDistribution<T>> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let signs = [1.0, -1.0];
    let mut pts: Vec<[f64; 3]> = Vec::new();
    match name {
        "tetrahedron" => {
            pts = vec![
                [1.0, 1.0, 1.0],
                [1.0, -1.0, -1.0],
                [-1.0, 1.0, -1.0],
                [-1.0, -1.0, 1.0],
            ];
        }
        "octahedron" => {
            for s in signs {
                pts.extend([[s, 0.0, 0.0], [0.0, s, 0.0], [0.0, 0.0, s]]);
            }
        }
        "cube" => {
            for a in signs {
                for b in signs {
                    for c in signs {
                        pts.push([a, b, c]);
                    }
                }
            }
        }
        "icosahedron" => {
            for a in signs {
                for b in signs {
                    pts.extend([[0.0, a, b * phi], [a, b * phi, 0.0], [b * phi, 0.0, a]]);
                }
            }
        }
        "dodecahedron" => {
            for a in signs {
                for b in signs {
                    for c in signs {
                        pts.push([a, b, c]);
                    }
                    pts.extend([
                        [0.0, a / phi, b * phi],
                        [a / phi, b * phi, 0.0],
                        [b * phi, 0.0, a / phi],
                    ]);
                }
            }
        }
        _ => {
            return Err(input_err!(
                "unknown design '{name}' (expected one of {})",
                DESIGN_NAMES.join("|")
            ))
        }
    }
    let pts: Vec<[T; 3]> = pts.iter().map(|p| p.map(T::lit)).collect();
    DirectionDistribution::uniform(&pts)
}

/// Where a bond operator's tests come from.
#[derive(Clone, Debug)]
pub enum BondSource<T: Real> {
    /// Spin tests `R_{e,r}` with `r` drawn from a finite distribution.
    Design(DirectionDistribution<T>),
    /// Spin tests with `r` uniform on the sphere.
    Isotropic,
    /// The projective test `{Q_e, P_e}` itself.
    Projective,
}

/// Bond verification operator `Ω_e` on the two-node space of one edge.
#[derive(Clone, Debug)]
pub struct BondOperator<T: Real> {
    pub edge: usize,
    /// Spins when the Hamiltonian is an AKLT model.
    pub bond: Option<Bond>,
    pub omega: CMatrix<T>,
    pub q_e: CMatrix<T>,
    pub source: BondSource<T>,
    /// `ν_e = 1 − ‖Ω_e − Q_e‖`.
    pub nu: T,
}

/// Tolerances for the bond-operator invariants.
pub const BOND_TOL: f64 = 1e-10;
pub const BOND_TRACE_TOL: f64 = 1e-9;

impl<T: Real> BondOperator<T> {
    fn build(
        edge: usize,
        bond: Option<Bond>,
        omega: CMatrix<T>,
        q_e: CMatrix<T>,
        source: BondSource<T>,
    ) -> Result<Self> {
        let nu = T::one() - operator_norm(&(&omega - &q_e))?;
        let op = Self {
            edge,
            bond,
            omega,
            q_e,
            source,
            nu,
        };
        op.check()?;
        Ok(op)
    }

    /// Spin tests drawn from `mu`.
    pub fn from_design(edge: usize, bond: Bond, mu: &DirectionDistribution<T>) -> Result<Self> {
        Self::build(
            edge,
            Some(bond),
            bond.operator(mu)?,
            bond.q_e()?,
            BondSource::Design(mu.clone()),
        )
    }

    pub fn isotropic(edge: usize, bond: Bond) -> Result<Self> {
        Self::build(
            edge,
            Some(bond),
            bond.isotropic()?,
            bond.q_e()?,
            BondSource::Isotropic,
        )
    }

    /// `Ω_e = Q_e = 1 − P_e` for an arbitrary local projector `P_e`.
    pub fn projective(edge: usize, p_e: &CMatrix<T>) -> Result<Self> {
        let q = linalg::identity::<T>(p_e.nrows()) - p_e;
        Self::build(edge, None, q.clone(), q, BondSource::Projective)
    }

    /// Checks `0 ≤ Ω ≤ 1`, `Ω Q_e = Q_e` and, for spin tests, the trace.
    pub fn check(&self) -> Result<()> {
        let tol = T::tol(BOND_TOL);
        if max_abs(&(&self.omega * &self.q_e - &self.q_e)) > tol {
            return Err(input_err!(
                "bond operator on edge {} does not fix Q_e",
                self.edge
            ));
        }
        let e = eigh(&self.omega)?;
        if e.values[0] < -tol || *e.values.last().unwrap() > T::one() + tol {
            return Err(input_err!(
                "bond operator on edge {} is not between 0 and 1",
                self.edge
            ));
        }
        if let (Some(b), false) = (self.bond, matches!(self.source, BondSource::Projective)) {
            let want = T::from_count(b.dim()) - T::lit(2.0);
            if (linalg::trace(&self.omega).re - want).abs() > T::tol(BOND_TRACE_TOL) {
                return Err(input_err!(
                    "bond operator on edge {} has the wrong trace",
                    self.edge
                ));
            }
        }
        Ok(())
    }

    pub fn theorem3_report(&self) -> Result<Option<Theorem3Report<T>>> {
        match (&self.source, self.bond) {
            (BondSource::Design(mu), Some(b)) => {
                Ok(Some(theorem3_report_for(&b, &self.omega, mu)?))
            }
            _ => Ok(None),
        }
    }
}

/// Spins of the two ends of edge `e` in an AKLT model on `g`.
pub fn bond_of(g: &Hypergraph, e: usize) -> Result<Bond> {
    let edge = g.edge(e);
    if edge.len() != 2 {
        return Err(input_err!(
            "AKLT models need 2-vertex edges, got {:?}",
            edge
        ));
    }
    Ok(Bond::new(
        SpinValue::new(g.degree(edge[0])? as u32)?,
        SpinValue::new(g.degree(edge[1])? as u32)?,
    ))
}

/// `H_G = Σ_e P_e` with `S_j = deg(j)/2`.
pub fn aklt_hamiltonian<T: Real>(g: &Hypergraph) -> Result<FfHamiltonian<T>> {
    if !g.is_simple() {
        return Err(input_err!("AKLT models need a loopless simple graph"));
    }
    let mut dims = Vec::with_capacity(g.vertex_count());
    for &v in g.vertices() {
        let d = g.degree(v)?;
        if d == 0 {
            return Err(input_err!("vertex {v} is isolated"));
        }
        dims.push(d + 1);
    }
    let mut cache: Vec<(Bond, CMatrix<T>)> = Vec::new();
    let mut projectors = Vec::with_capacity(g.edge_count());
    for e in 0..g.edge_count() {
        let b = bond_of(g, e)?;
        let p = match cache.iter().find(|(c, _)| *c == b) {
            Some((_, p)) => p.clone(),
            None => {
                let p = b.projector_pe::<T>()?;
                cache.push((b, p.clone()));
                p
            }
        };
        projectors.push(p);
    }
    FfHamiltonian::new(g.clone(), &dims, projectors)
}

/// Edges whose bond has half-integer `S_e` (the end bonds of open chains).
pub fn half_integer_bonds(g: &Hypergraph) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for e in 0..g.edge_count() {
        if !bond_of(g, e)?.s_e().is_integer() {
            out.push(e);
        }
    }
    Ok(out)
}
