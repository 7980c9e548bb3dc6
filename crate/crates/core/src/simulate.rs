//! Monte Carlo simulation of the verification procedure: noisy state
//! preparation, bond-by-bond test sampling and accept/reject runs.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aklt::{random_direction, Bond, BondSource};
use crate::error::{input_err, Error, Result};
use crate::hamiltonian::GroundSpace;
use crate::linalg::{
    eigh, lanczos_extreme, CMatrix, CVector, EmbeddedOp, Extreme, LinearOperator, LocalOperator,
    SolverOptions,
};
use crate::protocol::Protocol;
use crate::scalar::{cplx, Real, C};

/// Allowed trace and positivity defect of a prepared state.
pub const STATE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// `(1−ε)ρ_0 + ε|φ⟩⟨φ|` with `φ` the most likely bad state to pass.
    WorstCase,
    /// Mixture with the maximally mixed state.
    Depolarizing,
    /// Pure state `√(1−ε)|ψ⟩ + √ε|φ⟩` with a random `φ ⊥` ground space.
    CoherentRotation,
}

impl FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "worst_case" => Ok(Self::WorstCase),
            "depolarizing" => Ok(Self::Depolarizing),
            "coherent_rotation" => Ok(Self::CoherentRotation),
            _ => Err(input_err!(
                "unknown noise mode {s:?} (expected worst_case, depolarizing or coherent_rotation)"
            )),
        }
    }
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::WorstCase => "worst_case",
            Self::Depolarizing => "depolarizing",
            Self::CoherentRotation => "coherent_rotation",
        })
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mode: NoiseMode,
    /// Infidelity `1 − tr(Q0 σ)`.
    pub epsilon: f64,
}

impl NoiseSpec {
    pub fn new(mode: NoiseMode, epsilon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(input_err!("ε must lie in [0, 1), got {epsilon}"));
        }
        Ok(Self { mode, epsilon })
    }
}

/// Density matrix kept as an ensemble of pure states plus a maximally mixed
/// part, so large states never need a dense `D × D` matrix.
#[derive(Clone, Debug)]
pub struct NoisyState<T: Real> {
    dim: usize,
    components: Vec<(T, CVector<T>)>,
    mixed: T,
    picker: WeightedIndex<f64>,
}

impl<T: Real> NoisyState<T> {
    /// `Σ w_i |v_i⟩⟨v_i| + mixed · 1/D`; vectors must be normalized.
    pub fn new(dim: usize, components: Vec<(T, CVector<T>)>, mixed: T) -> Result<Self> {
        let mut total = mixed;
        for (w, v) in &components {
            if v.len() != dim {
                return Err(input_err!(
                    "state component has dimension {}, expected {dim}",
                    v.len()
                ));
            }
            if *w < T::zero() || mixed < T::zero() {
                return Err(input_err!("state weights must be nonnegative"));
            }
            if (v.norm() - T::one()).abs() > T::tol(STATE_TOL) {
                return Err(input_err!("state components must be normalized"));
            }
            total += *w;
        }
        if (total - T::one()).abs() > T::tol(STATE_TOL) {
            return Err(input_err!("state weights sum to {}, not 1", total.as_f64()));
        }
        let weights: Vec<f64> = components
            .iter()
            .map(|(w, _)| w.as_f64())
            .chain(std::iter::once(mixed.as_f64()))
            .collect();
        let picker = WeightedIndex::new(&weights).map_err(|e| input_err!("state weights: {e}"))?;
        Ok(Self {
            dim,
            components,
            mixed,
            picker,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[(T, CVector<T>)] {
        &self.components
    }

    pub fn mixed_weight(&self) -> T {
        self.mixed
    }

    pub fn density(&self) -> CMatrix<T> {
        let mut rho =
            CMatrix::<T>::identity(self.dim, self.dim) * cplx(self.mixed / T::from_count(self.dim));
        for (w, v) in &self.components {
            rho += v * v.adjoint() * cplx(*w);
        }
        rho
    }

    /// `tr(Q0 σ)`.
    pub fn fidelity(&self, ground: &GroundSpace<T>) -> T {
        let mut f = self.mixed * T::from_count(ground.rank()) / T::from_count(self.dim);
        for (w, v) in &self.components {
            let p = ground.space.project(v).norm();
            f += *w * p * p;
        }
        f
    }

    /// Expectation `tr(A σ)` of an operator that is Hermitian, with the
    /// maximally mixed part supplied as `tr(A)/D`.
    fn expectation<A: LinearOperator<T> + ?Sized>(&self, op: &A, normalized_trace: T) -> T {
        let mut e = self.mixed * normalized_trace;
        for (w, v) in &self.components {
            e += *w * v.dotc(&op.apply(v)).re;
        }
        e
    }

    /// One pure state drawn from the ensemble.
    pub fn sample(&self, rng: &mut impl Rng) -> Cow<'_, CVector<T>> {
        let i = self.picker.sample(rng);
        match self.components.get(i) {
            Some((_, v)) => Cow::Borrowed(v),
            None => {
                let mut v = CVector::<T>::zeros(self.dim);
                v[rng.random_range(0..self.dim)] = C::new(T::one(), T::zero());
                Cow::Owned(v)
            }
        }
    }
}

fn ground_mixture<T: Real>(ground: &GroundSpace<T>, weight: T) -> Vec<(T, CVector<T>)> {
    let w = weight / T::from_count(ground.rank());
    ground
        .space
        .basis()
        .iter()
        .map(|v| (w, v.clone()))
        .collect()
}

fn random_complement<T: Real>(ground: &GroundSpace<T>, seed: u64) -> Result<CVector<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = ground.space.ambient_dim();
    if ground.rank() == dim {
        return Err(input_err!("the ground space fills the whole space"));
    }
    loop {
        let v = CVector::<T>::from_fn(dim, |_, _| {
            let (re, im): (f64, f64) = (
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
            );
            C::new(T::lit(re), T::lit(im))
        });
        let v = ground.space.project_out(&v);
        let n = v.norm();
        if n > T::tol(1e-6) {
            return Ok(v / cplx(n));
        }
    }
}

/// Top eigenvector of `(1−Q0) Ω (1−Q0)` on the complement of the ground space.
pub fn worst_case_direction<T: Real>(
    protocol: &Protocol<T>,
    ground: &GroundSpace<T>,
    opts: &SolverOptions,
) -> Result<CVector<T>> {
    let n = protocol.dim();
    opts.check_dim(n)?;
    if opts.use_dense(n) {
        let q0 = ground.space.projector();
        let c = crate::linalg::identity::<T>(n) - &q0;
        let bar = &c * protocol.verification_operator(opts)? * &c;
        let e = eigh(&bar)?;
        let v = ground.space.project_out(&e.vector(n - 1));
        let norm = v.norm();
        if norm > T::lit(0.5) {
            return Ok(v / cplx(norm));
        }
        // Ω̄ vanishes on the complement; every vector there is extremal.
        random_complement(ground, 7)
    } else {
        let top = lanczos_extreme(
            &protocol.verification_op()?,
            Extreme::Largest,
            &ground.space,
            opts,
            17,
        )?;
        Ok(top.vector)
    }
}

/// Prepares `σ` with `tr(Q0 σ) = 1 − ε`.
pub fn prepare_state<T: Real>(
    protocol: &Protocol<T>,
    ground: &GroundSpace<T>,
    spec: &NoiseSpec,
    seed: u64,
    opts: &SolverOptions,
) -> Result<NoisyState<T>> {
    let spec = NoiseSpec::new(spec.mode, spec.epsilon)?;
    let n = protocol.dim();
    if ground.space.ambient_dim() != n {
        return Err(input_err!("ground space and protocol dimensions differ"));
    }
    let eps = T::lit(spec.epsilon);
    if spec.epsilon == 0.0 {
        return NoisyState::new(n, ground_mixture(ground, T::one()), T::zero());
    }
    match spec.mode {
        NoiseMode::WorstCase => {
            let phi = worst_case_direction(protocol, ground, opts)?;
            let mut comps = ground_mixture(ground, T::one() - eps);
            comps.push((eps, phi));
            NoisyState::new(n, comps, T::zero())
        }
        NoiseMode::Depolarizing => {
            // tr(Q0σ) = 1 − w(1 − r/D) for σ = (1−w)ρ_0 + w·1/D.
            let r_over_d = T::from_count(ground.rank()) / T::from_count(n);
            let w = eps / (T::one() - r_over_d);
            if w > T::one() {
                return Err(input_err!(
                    "depolarizing noise cannot reach ε = {} (maximum {})",
                    spec.epsilon,
                    (T::one() - r_over_d).as_f64()
                ));
            }
            NoisyState::new(n, ground_mixture(ground, T::one() - w), w)
        }
        NoiseMode::CoherentRotation => {
            let phi = random_complement(ground, seed)?;
            let psi = &ground.space.basis()[0];
            let v = psi * cplx((T::one() - eps).sqrt()) + phi * cplx(eps.sqrt());
            NoisyState::new(n, vec![(T::one(), v)], T::zero())
        }
    }
}

/// `tr(Ω σ)` computed without forming `Ω`.
pub fn acceptance_probability<T: Real>(protocol: &Protocol<T>, state: &NoisyState<T>) -> Result<T> {
    if state.dim() != protocol.dim() {
        return Err(input_err!(
            "state dimension {} does not match protocol dimension {}",
            state.dim(),
            protocol.dim()
        ));
    }
    // tr(T_M)/D = Π_{e∈M} tr(Ω_e)/d_e.
    let bond_ratio: Vec<T> = protocol
        .bond_ops()
        .iter()
        .map(|b| crate::linalg::trace(&b.omega).re / T::from_count(b.omega.nrows()))
        .collect();
    let mut normalized_trace = T::zero();
    for (m, &p) in protocol
        .cover()
        .matchings()
        .iter()
        .zip(protocol.cover().probabilities())
    {
        normalized_trace += p * m.iter().fold(T::one(), |a, &e| a * bond_ratio[e]);
    }
    Ok(state.expectation(&protocol.verification_op()?, normalized_trace))
}

/// `tr(Ω σ)` for dense matrices.
pub fn acceptance_probability_dense<T: Real>(omega: &CMatrix<T>, sigma: &CMatrix<T>) -> Result<T> {
    if omega.shape() != sigma.shape() || !omega.is_square() {
        return Err(input_err!("Ω and σ have incompatible shapes"));
    }
    Ok(crate::linalg::trace(&(omega * sigma)).re)
}

/// Orthonormal local kets spanning the failure projector `1 − R`.
type Failure<T> = Vec<CVector<T>>;

#[derive(Clone, Debug)]
enum BondDraw<T: Real> {
    Fixed {
        picker: WeightedIndex<f64>,
        failures: Vec<Failure<T>>,
    },
    Isotropic(Bond),
}

#[derive(Clone, Debug)]
struct BondSampler<T: Real> {
    offsets: Vec<usize>,
    bases: Vec<usize>,
    draw: BondDraw<T>,
}

impl<T: Real> BondSampler<T> {
    fn failure(&self, rng: &mut impl Rng) -> Result<Cow<'_, Failure<T>>> {
        match &self.draw {
            BondDraw::Fixed { picker, failures } => {
                Ok(Cow::Borrowed(&failures[picker.sample(rng)]))
            }
            BondDraw::Isotropic(b) => {
                let (p, m) = b.extremal_kets::<T>(&random_direction(rng))?;
                Ok(Cow::Owned(vec![p, m]))
            }
        }
    }

    /// Measures `{R, 1−R}` on `v` (normalized) and collapses it on a pass.
    fn measure(&self, v: &mut CVector<T>, rng: &mut impl Rng) -> Result<bool> {
        let failure = self.failure(rng)?;
        let mut amps = vec![C::<T>::default(); failure.len() * self.bases.len()];
        let mut p_fail = T::zero();
        for (bi, &base) in self.bases.iter().enumerate() {
            for (k, ket) in failure.iter().enumerate() {
                let mut a = C::<T>::default();
                for (off, kc) in self.offsets.iter().zip(ket.iter()) {
                    a += kc.conj() * v[base + off];
                }
                p_fail += a.norm_sqr();
                amps[bi * failure.len() + k] = a;
            }
        }
        if T::lit(rng.random::<f64>()) < p_fail {
            return Ok(false);
        }
        for (bi, &base) in self.bases.iter().enumerate() {
            for (k, ket) in failure.iter().enumerate() {
                let a = amps[bi * failure.len() + k];
                for (off, kc) in self.offsets.iter().zip(ket.iter()) {
                    v[base + off] -= *kc * a;
                }
            }
        }
        let keep = (T::one() - p_fail).max(T::zero()).sqrt();
        if keep > T::zero() {
            *v /= cplx(keep);
        }
        Ok(true)
    }
}

fn failure_kets<T: Real>(fail: &CMatrix<T>) -> Result<Failure<T>> {
    let e = eigh(fail)?;
    Ok((0..fail.nrows())
        .filter(|&i| e.values[i] > T::lit(0.5))
        .map(|i| e.vector(i))
        .collect())
}

/// Draws single tests `T_{M_l}` bond by bond.
#[derive(Clone, Debug)]
pub struct TestSampler<T: Real> {
    dim: usize,
    matchings: Vec<Vec<usize>>,
    picker: WeightedIndex<f64>,
    bonds: Vec<BondSampler<T>>,
}

impl<T: Real> TestSampler<T> {
    pub fn new(protocol: &Protocol<T>) -> Result<Self> {
        let h = protocol.hamiltonian();
        let mut bonds = Vec::with_capacity(protocol.bond_ops().len());
        for (e, op) in protocol.bond_ops().iter().enumerate() {
            let p = h.projector(e);
            let emb = EmbeddedOp::new(
                &LocalOperator::new(p.matrix.clone(), p.support.clone(), p.dims.clone())?,
                h.layout(),
            )?;
            let draw = match (&op.source, op.bond) {
                (BondSource::Design(mu), Some(b)) => {
                    let failures = mu
                        .points()
                        .iter()
                        .map(|r| {
                            let (p, m) = b.extremal_kets::<T>(r)?;
                            Ok(vec![p, m])
                        })
                        .collect::<Result<_>>()?;
                    let w: Vec<f64> = mu.weights().iter().map(|w| w.as_f64()).collect();
                    BondDraw::Fixed {
                        picker: WeightedIndex::new(&w)
                            .map_err(|e| input_err!("design weights: {e}"))?,
                        failures,
                    }
                }
                (BondSource::Isotropic, Some(b)) => BondDraw::Isotropic(b),
                _ => {
                    let fail = crate::linalg::identity::<T>(op.omega.nrows()) - &op.omega;
                    if crate::linalg::projector_defect(&fail) > T::tol(1e-9) {
                        return Err(input_err!(
                            "bond operator on edge {e} is not a projective test"
                        ));
                    }
                    BondDraw::Fixed {
                        picker: WeightedIndex::new([1.0]).expect("single weight"),
                        failures: vec![failure_kets(&fail)?],
                    }
                }
            };
            bonds.push(BondSampler {
                offsets: emb.offsets().to_vec(),
                bases: emb.bases().to_vec(),
                draw,
            });
        }
        let p: Vec<f64> = protocol
            .cover()
            .probabilities()
            .iter()
            .map(|p| p.as_f64())
            .collect();
        Ok(Self {
            dim: protocol.dim(),
            matchings: protocol.cover().matchings().to_vec(),
            picker: WeightedIndex::new(&p)
                .map_err(|e| input_err!("matching probabilities: {e}"))?,
            bonds,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// One test on one copy of `state`; `true` on pass.
    pub fn single_test(&self, state: &NoisyState<T>, rng: &mut impl Rng) -> Result<bool> {
        let mut v = state.sample(rng).into_owned();
        let l = self.picker.sample(rng);
        for &e in &self.matchings[l] {
            if !self.bonds[e].measure(&mut v, rng)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Independent generator for stream `index` of `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
pub struct RunResult {
    pub run: u64,
    pub seed: u64,
    /// Tests performed; fewer than requested when the run stopped early.
    pub n_tests: u64,
    pub n_passed: u64,
    pub accepted: bool,
}

/// `n_tests` i.i.d. tests on copies of `state`; accepted iff all pass.
///
/// With `stop_on_failure` the run ends at the first failed test, which
/// leaves `accepted` unchanged.
pub fn run_verification<T: Real>(
    sampler: &TestSampler<T>,
    state: &NoisyState<T>,
    n_tests: u64,
    seed: u64,
    run: u64,
    stop_on_failure: bool,
) -> Result<RunResult> {
    if n_tests == 0 {
        return Err(input_err!("a run needs at least one test"));
    }
    if state.dim() != sampler.dim() {
        return Err(input_err!("state dimension does not match the protocol"));
    }
    let mut rng = substream(seed, run);
    let (mut done, mut passed) = (0, 0);
    while done < n_tests {
        done += 1;
        if sampler.single_test(state, &mut rng)? {
            passed += 1;
        } else if stop_on_failure {
            break;
        }
    }
    Ok(RunResult {
        run,
        seed,
        n_tests: done,
        n_passed: passed,
        accepted: passed == n_tests,
    })
}

/// Runs `0..runs` in parallel, merged in run order.
pub fn simulate_runs<T: Real>(
    sampler: &TestSampler<T>,
    state: &NoisyState<T>,
    n_tests: u64,
    runs: u64,
    seed: u64,
    stop_on_failure: bool,
) -> Result<Vec<RunResult>> {
    (0..runs)
        .into_par_iter()
        .map(|r| run_verification(sampler, state, n_tests, seed, r, stop_on_failure))
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PassRate {
    pub draws: u64,
    pub passed: u64,
    pub rate: f64,
    pub std_error: f64,
}

impl PassRate {
    fn new(draws: u64, passed: u64) -> Self {
        let rate = if draws == 0 {
            0.0
        } else {
            passed as f64 / draws as f64
        };
        let std_error = if draws == 0 {
            0.0
        } else {
            (rate * (1.0 - rate) / draws as f64).sqrt()
        };
        Self {
            draws,
            passed,
            rate,
            std_error,
        }
    }
}

/// Monte Carlo estimate of the single-test pass probability `tr(Ω σ)`.
pub fn estimate_pass_rate<T: Real>(
    sampler: &TestSampler<T>,
    state: &NoisyState<T>,
    draws: u64,
    seed: u64,
) -> Result<PassRate> {
    const CHUNK: u64 = 4096;
    let chunks = draws.div_ceil(CHUNK);
    let passed = (0..chunks)
        .into_par_iter()
        .map(|c| {
            // Streams above 2^32 keep these disjoint from run streams.
            let mut rng = substream(seed, (1 << 32) + c);
            let n = CHUNK.min(draws - c * CHUNK);
            let mut ok = 0u64;
            for _ in 0..n {
                ok += sampler.single_test(state, &mut rng)? as u64;
            }
            Ok(ok)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(PassRate::new(draws, passed))
}

/// Aggregate of a batch of runs.
#[derive(Clone, Debug, Serialize)]
pub struct SimulationSummary {
    pub noise: NoiseSpec,
    pub fidelity: f64,
    /// Exact `tr(Ω σ)`.
    pub exact_pass_probability: f64,
    pub pass_rate: Option<PassRate>,
    pub n_tests: u64,
    pub runs: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    pub acceptance_std_error: f64,
    /// `tr(Ω σ)^N`.
    pub predicted_acceptance: f64,
    pub seed: u64,
}

impl SimulationSummary {
    pub fn new(
        noise: NoiseSpec,
        fidelity: f64,
        exact_pass_probability: f64,
        pass_rate: Option<PassRate>,
        n_tests: u64,
        results: &[RunResult],
        seed: u64,
    ) -> Self {
        let runs = results.len() as u64;
        let accepted = results.iter().filter(|r| r.accepted).count() as u64;
        let acc = PassRate::new(runs, accepted);
        Self {
            noise,
            fidelity,
            exact_pass_probability,
            pass_rate,
            n_tests,
            runs,
            accepted,
            acceptance_rate: acc.rate,
            acceptance_std_error: acc.std_error,
            predicted_acceptance: exact_pass_probability.clamp(0.0, 1.0).powf(n_tests as f64),
            seed,
        }
    }
}
