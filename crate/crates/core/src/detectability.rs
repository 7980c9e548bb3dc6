//! Numeric checks of the detectability-lemma family of inequalities.
//!
//! Every check returns the measured quantity, the bounds it is compared
//! against and a pass flag; none of them panic on a violated inequality.

use serde::Serialize;

use crate::error::{input_err, Result};
use crate::hamiltonian::{sub_unit_singular_value, FfHamiltonian, GroundSpace, SpectralProfile};
use crate::linalg::{
    self, lanczos_extreme, operator_norm, projector_defect, CMatrix, CVector, EmbeddedOp, Extreme,
    FnOperator, LinearOperator, SolverOptions,
};
use crate::scalar::{cplx, Real};

/// Slack allowed in every inequality chain.
pub const CHAIN_TOL: f64 = 1e-9;

fn chain_ok<T: Real>(measured: T, bounds: &[T; 4], tol: T) -> bool {
    measured <= bounds[0] + tol && bounds.windows(2).all(|w| w[0] <= w[1] + tol)
}

/// `‖Q̄_1 ⋯ Q̄_q‖²` against the four bounds `x/(γ+x)`,
/// `x ∈ {ζ, s²g̃, s²g², g²}`.
#[derive(Clone, Debug, Serialize)]
pub struct DlReport<T: Real> {
    pub measured: T,
    pub bounds: [T; 4],
    pub gamma: T,
    pub ordering: Vec<usize>,
    pub pass: bool,
}

/// Applies `Q_{o_1} Q_{o_2} ⋯ Q_{o_q}` (rightmost first) to `x`.
fn apply_q_product<T: Real>(
    terms: &[EmbeddedOp<T>],
    ordering: &[usize],
    x: &CVector<T>,
    adjoint: bool,
) -> CVector<T> {
    let mut cur = x.clone();
    let mut tmp = CVector::zeros(x.len());
    let mut step = |e: usize, cur: &mut CVector<T>| {
        terms[e].apply_into(cur, &mut tmp);
        *cur -= &tmp;
    };
    if adjoint {
        for &e in ordering {
            step(e, &mut cur);
        }
    } else {
        for &e in ordering.iter().rev() {
            step(e, &mut cur);
        }
    }
    cur
}

/// Computes the report from precomputed ground data and profile.
pub fn dl_norm_check_with<T: Real>(
    h: &FfHamiltonian<T>,
    ground: &GroundSpace<T>,
    profile: &SpectralProfile<T>,
    opts: &SolverOptions,
) -> Result<DlReport<T>> {
    let n = h.dim();
    opts.check_dim(n)?;
    let terms = (0..h.edge_count())
        .map(|e| h.embedded(e))
        .collect::<Result<Vec<_>>>()?;
    let ordering = &profile.ordering;
    let measured = if ground.rank() == n {
        T::zero()
    } else if opts.use_dense(n) {
        let mut prod = linalg::identity::<T>(n) - ground.space.projector();
        for &e in ordering.iter().rev() {
            prod = &prod - terms[e].to_dense() * &prod;
        }
        let nrm = operator_norm(&prod)?;
        nrm * nrm
    } else {
        // Q0 commutes with every Q_k, so deflating the ground space of
        // A†A is the same as sandwiching with 1 − Q0.
        let op = FnOperator::new(n, |x: &CVector<T>| {
            let y = apply_q_product(&terms, ordering, x, false);
            apply_q_product(&terms, ordering, &y, true)
        });
        lanczos_extreme(&op, Extreme::Largest, &ground.space, opts, 23)?
            .value
            .max(T::zero())
    };
    let bounds = profile.dl_bounds(profile.gamma);
    let pass = chain_ok(measured, &bounds, T::tol(CHAIN_TOL));
    Ok(DlReport {
        measured,
        bounds,
        gamma: profile.gamma,
        ordering: ordering.clone(),
        pass,
    })
}

pub fn dl_norm_check<T: Real>(
    h: &FfHamiltonian<T>,
    ordering: Option<&[usize]>,
    opts: &SolverOptions,
) -> Result<DlReport<T>> {
    let ground = h.ground_space(opts)?;
    let comm = h.commutation_profile()?;
    let profile = SpectralProfile::assemble(&ground, &comm, ordering)?;
    dl_norm_check_with(h, &ground, &profile, opts)
}

/// State version: `φ = Q_1 ⋯ Q_q ψ` for `ψ` orthogonal to the ground space.
#[derive(Clone, Debug, Serialize)]
pub struct DlStateReport<T: Real> {
    pub phi_norm_sq: T,
    /// `⟨φ|H|φ⟩/‖φ‖²`, absent when `φ = 0`.
    pub eps_phi: Option<T>,
    /// Bounds at energy `ε_φ`, absent when `φ = 0`.
    pub bounds: Option<[T; 4]>,
    pub pass: bool,
}

pub fn dl_state_check<T: Real>(
    h: &FfHamiltonian<T>,
    ground: &GroundSpace<T>,
    profile: &SpectralProfile<T>,
    psi: &CVector<T>,
) -> Result<DlStateReport<T>> {
    if psi.len() != h.dim() {
        return Err(input_err!(
            "state has length {}, expected {}",
            psi.len(),
            h.dim()
        ));
    }
    if (psi.norm() - T::one()).abs() > T::tol(1e-10) {
        return Err(input_err!("state must be normalized"));
    }
    if ground.space.project(psi).norm_squared() >= T::tol(1e-10) {
        return Err(input_err!("state overlaps the ground space"));
    }
    let terms = (0..h.edge_count())
        .map(|e| h.embedded(e))
        .collect::<Result<Vec<_>>>()?;
    let phi = apply_q_product(&terms, &profile.ordering, psi, false);
    let phi_norm_sq = phi.norm_squared();
    if phi_norm_sq <= T::tol(1e-24) {
        return Ok(DlStateReport {
            phi_norm_sq,
            eps_phi: None,
            bounds: None,
            pass: true,
        });
    }
    let hphi = terms
        .iter()
        .fold(CVector::zeros(psi.len()), |acc, t| acc + t.apply(&phi));
    let eps = phi.dotc(&hphi).re / phi_norm_sq;
    let bounds = profile.dl_bounds(eps);
    Ok(DlStateReport {
        phi_norm_sq,
        eps_phi: Some(eps),
        bounds: Some(bounds),
        pass: chain_ok(phi_norm_sq, &bounds, T::tol(CHAIN_TOL)),
    })
}

fn check_projector<T: Real>(p: &CMatrix<T>, what: &str) -> Result<()> {
    if p.nrows() != p.ncols() || p.nrows() == 0 {
        return Err(input_err!("{what} must be a nonempty square matrix"));
    }
    if projector_defect(p) >= T::tol(1e-10) {
        return Err(input_err!("{what} is not a projector"));
    }
    Ok(())
}

/// `‖P(1−Q)ψ‖ ≤ ‖Pψ‖ + s‖Qψ‖`.
#[derive(Clone, Debug, Serialize)]
pub struct PqubReport<T: Real> {
    pub lhs: T,
    pub rhs: T,
    pub s: T,
    pub pass: bool,
}

pub fn pqub_check<T: Real>(
    p: &CMatrix<T>,
    q: &CMatrix<T>,
    psi: &CVector<T>,
) -> Result<PqubReport<T>> {
    check_projector(p, "P")?;
    check_projector(q, "Q")?;
    if p.nrows() != q.nrows() || psi.len() != p.nrows() {
        return Err(input_err!("dimension mismatch"));
    }
    let s = sub_unit_singular_value(&(p * q))?;
    let qpsi = q * psi;
    let lhs = (p * (psi - &qpsi)).norm();
    let rhs = (p * psi).norm() + s * qpsi.norm();
    Ok(PqubReport {
        lhs,
        rhs,
        s,
        pass: lhs <= rhs + T::tol(1e-10),
    })
}

/// `1 − ‖O‖ ≥ (1 − ‖P_1⋯P_m‖)/(m(1 + ‖P_1⋯P_m‖))` for `O = Σ P_j / m`.
#[derive(Clone, Debug, Serialize)]
pub struct UnionGapReport<T: Real> {
    pub m: usize,
    /// `1 − ‖O‖`.
    pub lhs: T,
    pub rhs: T,
    pub product_norm: T,
    /// `|lhs − (1 − ‖P_1P_2‖)/2|` for `m = 2`.
    pub equality_defect: Option<T>,
    pub pass: bool,
}

pub const UNION_TOL: f64 = 1e-10;

pub fn union_gap_check<T: Real>(projectors: &[CMatrix<T>]) -> Result<UnionGapReport<T>> {
    let m = projectors.len();
    if m < 2 {
        return Err(input_err!("need at least two projectors, got {m}"));
    }
    let n = projectors[0].nrows();
    for (i, p) in projectors.iter().enumerate() {
        check_projector(p, &format!("projector {i}"))?;
        if p.nrows() != n {
            return Err(input_err!("projector {i} has a different dimension"));
        }
    }
    let mf = T::from_count(m);
    let sum = projectors
        .iter()
        .fold(CMatrix::<T>::zeros(n, n), |a, p| a + p);
    let lhs = T::one() - operator_norm(&(sum * cplx(T::one() / mf)))?;
    let prod = projectors
        .iter()
        .skip(1)
        .fold(projectors[0].clone(), |a, p| a * p);
    let pn = operator_norm(&prod)?;
    let rhs = (T::one() - pn) / (mf * (T::one() + pn));
    let tol = T::tol(UNION_TOL);
    let equality_defect = (m == 2).then(|| (lhs - (T::one() - pn) / T::lit(2.0)).abs());
    let pass = lhs >= rhs - tol && equality_defect.is_none_or(|d| d <= tol);
    Ok(UnionGapReport {
        m,
        lhs,
        rhs,
        product_norm: pn,
        equality_defect,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aklt::aklt_hamiltonian;
    use crate::graph::{generators, Hypergraph};
    use crate::hamiltonian::{random_ff_instance, rank_one};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    fn ket(a: f64, b: f64) -> CVector<f64> {
        CVector::from_vec(vec![cplx(a), cplx(b)])
    }

    #[test]
    fn single_projector_dl() {
        let g = Hypergraph::new(vec![0], vec![vec![0]]).unwrap();
        let h = FfHamiltonian::new(g, &[2], vec![rank_one(&ket(1.0, 0.0))]).unwrap();
        let r = dl_norm_check(&h, None, &opts()).unwrap();
        assert!(r.measured.abs() < 1e-15);
        assert_eq!(r.bounds[0], 0.0);
        assert!(r.pass);
        let ground = h.ground_space(&opts()).unwrap();
        let prof = h.spectral_profile(None, &opts()).unwrap();
        let s = dl_state_check(&h, &ground, &prof, &ket(1.0, 0.0)).unwrap();
        assert!(s.phi_norm_sq < 1e-30 && s.eps_phi.is_none());
        assert!(dl_state_check(&h, &ground, &prof, &ket(0.0, 1.0)).is_err());
    }

    #[test]
    fn commuting_family_dl() {
        let g = generators::chain(3, false).unwrap();
        let z = rank_one(&ket(1.0, 0.0));
        let zz = linalg::kron(&z, &z);
        let h = FfHamiltonian::new(g, &[2, 2, 2], vec![zz.clone(), zz]).unwrap();
        let r = dl_norm_check(&h, None, &opts()).unwrap();
        assert!(r.measured.abs() < 1e-12);
    }

    #[test]
    fn aklt_chain_dl() {
        let h = aklt_hamiltonian::<f64>(&generators::chain(4, true).unwrap()).unwrap();
        let r = dl_norm_check(&h, None, &opts()).unwrap();
        assert!(r.pass, "{r:?}");
        let ground = h.ground_space(&opts()).unwrap();
        let prof = h.spectral_profile(None, &opts()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let v = linalg::random_orthonormal::<f64>(h.dim(), 1, &mut rng).remove(0);
            let mut psi = ground.space.project_out(&v);
            psi.unscale_mut(psi.norm());
            let s = dl_state_check(&h, &ground, &prof, &psi).unwrap();
            assert!(s.pass, "{s:?}");
        }
    }

    #[test]
    fn matrix_free_dl_matches_dense() {
        let g = generators::chain(5, true).unwrap();
        let h = random_ff_instance::<f64>(9, g, &[2, 2, 2, 2, 2], 1).unwrap();
        let dense = dl_norm_check(&h, None, &opts()).unwrap();
        let sparse = dl_norm_check(
            &h,
            None,
            &SolverOptions {
                dense_limit: 0,
                ..opts()
            },
        )
        .unwrap();
        assert!((dense.measured - sparse.measured).abs() < 1e-9);
    }

    #[test]
    fn pqub_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = linalg::random_projector::<f64>(4, 2, &mut rng);
        let psi = linalg::random_orthonormal::<f64>(4, 1, &mut rng).remove(0);
        let r = pqub_check(&p, &p, &psi).unwrap();
        assert!(r.lhs < 1e-12 && r.pass);
        let a = rank_one(&ket(1.0, 0.0));
        let b = rank_one(&ket(0.0, 1.0));
        let r = pqub_check(&a, &b, &ket(0.6, 0.8)).unwrap();
        assert_eq!(r.s, 0.0);
        assert!((r.lhs - r.rhs).abs() < 1e-12);
        // Bloch vectors at angle θ: |⟨a|b⟩| = cos(θ/2), and against the
        // complement of b the overlap is sin(θ/2).
        let theta: f64 = 1.1;
        let a = rank_one(&ket(1.0, 0.0));
        let b = rank_one(&ket((theta / 2.0).cos(), (theta / 2.0).sin()));
        let r = pqub_check(&a, &b, &psi.rows(0, 2).into_owned()).unwrap();
        assert!((r.s - (theta / 2.0).cos()).abs() < 1e-12);
        let bc = linalg::identity::<f64>(2) - &b;
        let v = ket(0.3, 0.4);
        let r = pqub_check(&a, &bc, &v).unwrap();
        assert!((r.s - (theta / 2.0).sin()).abs() < 1e-12 && r.pass);
        assert!(pqub_check(&(a * cplx(0.5)), &b, &v).is_err());
    }

    #[test]
    fn union_gap_cases() {
        let c: f64 = 0.3;
        let a = rank_one(&ket(1.0, 0.0));
        let b = rank_one(&ket(c, (1.0 - c * c).sqrt()));
        let r = union_gap_check(&[a.clone(), b]).unwrap();
        assert!((r.lhs - (1.0 - c) / 2.0).abs() < 1e-12 && r.pass);
        for m in 2..=5 {
            let p1 = rank_one(&ket(1.0, 0.0));
            let p2 = rank_one(&ket(0.0, 1.0));
            let mut ps = vec![p1];
            ps.extend(std::iter::repeat_n(p2, m - 1));
            let r = union_gap_check(&ps).unwrap();
            let mf = m as f64;
            assert!((1.0 - r.lhs - (mf - 1.0) / mf).abs() < 1e-12);
            assert!((r.lhs - r.rhs).abs() < 1e-12);
        }
        let r = union_gap_check(&[a.clone(), a.clone(), a.clone()]).unwrap();
        assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12);
        assert!(union_gap_check(&[a]).is_err());
    }
}
