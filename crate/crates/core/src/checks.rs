//! Randomized invariant suite over random and AKLT instances.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::Serialize;

use crate::aklt::{aklt_hamiltonian, design_catalog, BondOperator, DESIGN_NAMES};
use crate::detectability::{dl_norm_check_with, dl_state_check, pqub_check, union_gap_check};
use crate::error::{Error, Result};
use crate::graph::{generators, Hypergraph};
use crate::hamiltonian::{random_ff_instance, rank_one, FfHamiltonian, SpectralProfile};
use crate::linalg::{random_orthonormal, random_projector, CVector, SolverOptions};
use crate::protocol::{BondSpec, Protocol};
use crate::scalar::cplx;
use crate::simulate::substream;

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    /// Instance index; `None` for the injected broken instance.
    pub instance: Option<u64>,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CheckSummary {
    pub instances: u64,
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
    pub skipped: Vec<String>,
}

impl CheckSummary {
    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn all_passed(&self) -> bool {
        self.failures().next().is_none()
    }

    /// `(name, passed, total)` per check name, in first-seen order.
    pub fn tally(&self) -> Vec<(String, usize, usize)> {
        let mut out: Vec<(String, usize, usize)> = Vec::new();
        for c in &self.checks {
            let i = match out.iter().position(|(n, _, _)| *n == c.name) {
                Some(i) => i,
                None => {
                    out.push((c.name.clone(), 0, 0));
                    out.len() - 1
                }
            };
            out[i].1 += c.pass as usize;
            out[i].2 += 1;
        }
        out
    }
}

struct Recorder<'a> {
    summary: &'a mut CheckSummary,
    instance: Option<u64>,
}

impl Recorder<'_> {
    fn record(&mut self, name: &str, outcome: Result<(bool, String)>) {
        let (pass, detail) = match outcome {
            Ok(r) => r,
            Err(e) => (false, e.to_string()),
        };
        self.summary.checks.push(CheckOutcome {
            name: name.to_string(),
            instance: self.instance,
            pass,
            detail,
        });
    }
}

fn random_graph(rng: &mut impl Rng) -> Result<Hypergraph> {
    match rng.random_range(0..4) {
        0 => generators::chain(rng.random_range(2..=4), false),
        1 => generators::chain(rng.random_range(3..=4), true),
        2 => generators::complete(3),
        _ => Hypergraph::new(
            vec![0, 1, 2, 3],
            vec![vec![0, 1, 2], vec![1, 2, 3], vec![0, 3]],
        ),
    }
}

fn random_instance(seed: u64, rng: &mut impl Rng) -> Result<FfHamiltonian<f64>> {
    let g = random_graph(rng)?;
    let dims: Vec<usize> = (0..g.vertex_count())
        .map(|_| rng.random_range(2..=3))
        .collect();
    random_ff_instance(seed, g, &dims, rng.random_range(1..=2))
}

fn random_instance_checks(
    rec: &mut Recorder,
    seed: u64,
    rng: &mut impl Rng,
    opts: &SolverOptions,
) -> Result<()> {
    let h = random_instance(seed, rng)?;
    let ground = match h.ground_space(opts) {
        Ok(g) if g.gamma.is_some() => g,
        Ok(_) | Err(Error::DegenerateSpectrum(_)) => {
            rec.summary.skipped.push(format!("instance {seed}: H = 0"));
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    let comm = h.commutation_profile()?;
    let profile = SpectralProfile::assemble(&ground, &comm, None)?;
    rec.record(
        "s_local_equals_global",
        Ok((
            (profile.s - profile.s_all).abs() < 1e-9,
            format!("s = {:.6}, s_all = {:.6}", profile.s, profile.s_all),
        )),
    );
    rec.record(
        "detectability_norm_chain",
        dl_norm_check_with(&h, &ground, &profile, opts)
            .map(|r| (r.pass, format!("{:.3e} <= {:?}", r.measured, r.bounds))),
    );
    let mut shuffled = profile.ordering.clone();
    for i in (1..shuffled.len()).rev() {
        shuffled.swap(i, rng.random_range(0..=i));
    }
    let reordered = SpectralProfile::assemble(&ground, &comm, Some(&shuffled))?;
    rec.record(
        "detectability_norm_chain_reordered",
        dl_norm_check_with(&h, &ground, &reordered, opts)
            .map(|r| (r.pass, format!("ordering {shuffled:?}"))),
    );
    if ground.rank() < h.dim() {
        let v = random_orthonormal::<f64>(h.dim(), 1, rng).remove(0);
        let v = ground.space.project_out(&v);
        let psi: CVector<f64> = v.clone() / cplx(v.norm());
        rec.record(
            "detectability_state_chain",
            dl_state_check(&h, &ground, &profile, &psi)
                .map(|r| (r.pass, format!("|phi|^2 = {:.3e}", r.phi_norm_sq))),
        );
    }
    if h.graph().edge_count() >= 2 {
        let cover = h.graph().edge_coloring::<f64>()?;
        let uniform = Protocol::new(
            h.clone(),
            cover.to_uniform(h.graph())?,
            &BondSpec::Projective,
        )?;
        rec.record(
            "projective_gap_bounds_uniform",
            uniform
                .evaluate_with(&ground, &comm, opts)
                .map(|r| (r.pass, format!("nu = {:.6}", r.nu_measured))),
        );
        let prop = Protocol::new(
            h.clone(),
            cover.to_proportional(h.graph())?,
            &BondSpec::Projective,
        )?;
        rec.record(
            "projective_gap_bounds_proportional",
            prop.evaluate_with(&ground, &comm, opts)
                .map(|r| (r.pass, format!("nu = {:.6}", r.nu_measured))),
        );
    }
    Ok(())
}

fn projector_checks(rec: &mut Recorder, rng: &mut impl Rng) -> Result<()> {
    let d = rng.random_range(2..=32);
    let m = rng.random_range(2..=5);
    let ps: Vec<_> = (0..m)
        .map(|_| random_projector::<f64>(d, rng.random_range(1..d), rng))
        .collect();
    rec.record(
        "union_gap",
        union_gap_check(&ps).map(|r| {
            (
                r.pass,
                format!("m = {m}, d = {d}, {:.6} >= {:.6}", r.lhs, r.rhs),
            )
        }),
    );
    let a = random_orthonormal::<f64>(d, 1, rng).remove(0);
    let b = random_orthonormal::<f64>(d, 1, rng).remove(0);
    let psi = random_orthonormal::<f64>(d, 1, rng).remove(0);
    rec.record(
        "pqub",
        pqub_check(&rank_one(&a), &rank_one(&b), &psi)
            .map(|r| (r.pass, format!("{:.6} <= {:.6}", r.lhs, r.rhs))),
    );
    Ok(())
}

fn aklt_checks(rec: &mut Recorder, rng: &mut impl Rng, opts: &SolverOptions) -> Result<()> {
    let n = rng.random_range(3..=6);
    let closed = rng.random_bool(0.5);
    let g = generators::chain(n, closed)?;
    let h = aklt_hamiltonian::<f64>(&g)?;
    let spec = if rng.random_bool(0.25) {
        BondSpec::Isotropic
    } else {
        BondSpec::Design(design_catalog(DESIGN_NAMES.choose(rng).expect("catalog"))?)
    };
    let ground = h.ground_space(opts)?;
    let comm = h.commutation_profile()?;
    let protocol = Protocol::new(h, g.edge_coloring::<f64>()?, &spec)?;
    rec.record(
        "aklt_gap_bounds",
        protocol.evaluate_with(&ground, &comm, opts).map(|r| {
            (
                r.pass,
                format!("n = {n}, closed = {closed}, nu = {:.6}", r.nu_measured),
            )
        }),
    );
    let b = &protocol.bond_ops()[0];
    rec.record(
        "bond_operator",
        b.check().map(|_| (true, format!("edge {}", b.edge))),
    );
    if let Some(r) = BondOperator::theorem3_report(b)? {
        rec.record(
            "bond_optimality_consistent",
            Ok((
                r.consistent() && r.lemma5_holds(),
                format!("gap {:.6}, optimal {}", r.gap, r.gap_is_optimal),
            )),
        );
    }
    Ok(())
}

/// A Hamiltonian whose first term is `P/2`, which is not a projector.
fn broken_instance(seed: u64) -> Result<FfHamiltonian<f64>> {
    let g = generators::chain(3, false)?;
    let good = random_ff_instance::<f64>(seed, g.clone(), &[2, 2, 2], 1)?;
    let mut ps: Vec<_> = good.projectors().iter().map(|p| p.matrix.clone()).collect();
    ps[0] = ps[0].clone() * cplx(0.5);
    ps[0][(0, 0)] += cplx(0.25);
    FfHamiltonian::new(g, &[2, 2, 2], ps)
}

/// Runs the suite over `instances` seeded instances. Instance `i` cycles
/// through random frustration-free Hamiltonians, random projector tuples
/// and AKLT chains.
pub fn run_checks(
    instances: u64,
    seed: u64,
    inject_broken_projector: bool,
    opts: &SolverOptions,
) -> CheckSummary {
    let mut summary = CheckSummary {
        instances,
        seed,
        ..Default::default()
    };
    for i in 0..instances {
        let mut rng = substream(seed, i);
        let mut rec = Recorder {
            summary: &mut summary,
            instance: Some(i),
        };
        let sub_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i);
        let r = match i % 3 {
            0 => random_instance_checks(&mut rec, sub_seed, &mut rng, opts),
            1 => projector_checks(&mut rec, &mut rng),
            _ => aklt_checks(&mut rec, &mut rng, opts),
        };
        if let Err(e) = r {
            rec.record("instance_setup", Err(e));
        }
    }
    if inject_broken_projector {
        let mut rec = Recorder {
            summary: &mut summary,
            instance: None,
        };
        rec.record(
            "projector_validity",
            broken_instance(seed).map(|_| (true, "broken projector accepted".into())),
        );
    }
    summary
}
