//! Acceptance suite: one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ffverify::aklt::{
    aklt_hamiltonian, design_catalog, overlap_trace, random_direction, Bond, BondOperator,
    SpinValue,
};
use ffverify::detectability::{dl_norm_check_with, union_gap_check};
use ffverify::graph::MatchingCover;
use ffverify::linalg::{self, identity, operator_norm, random_projector, CMatrix, CVector};
use ffverify::protocol::{competitor_costs, sample_count, sample_count_from_gap, theorem1_bounds};
use ffverify::simulate::{
    acceptance_probability, estimate_pass_rate, prepare_state, simulate_runs, TestSampler,
};
use ffverify::{
    generators, BondSpec, CompetitorParams, NoiseMode, NoiseSpec, Protocol, SolverOptions,
    SpectralProfile,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($fmt)+));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn sig_figs(x: f64, n: i32) -> f64 {
    let scale = 10f64.powi(n - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

fn within_rel(x: f64, target: f64, rel: f64) -> bool {
    ((x - target) / target).abs() <= rel
}

fn bond(twice_j: u32, twice_k: u32) -> Bond {
    Bond::new(
        SpinValue::new(twice_j).unwrap(),
        SpinValue::new(twice_k).unwrap(),
    )
}

/// Closed AKLT chain with the given direction design on every bond and the
/// Δ-edge coloring.
fn aklt_chain_protocol(n: usize, design: &str) -> Result<Protocol, String> {
    let g = generators::chain(n, true).map_err(err)?;
    let h = aklt_hamiltonian::<f64>(&g).map_err(err)?;
    let cover = g.edge_coloring::<f64>().map_err(err)?;
    let mu = design_catalog::<f64>(design).map_err(err)?;
    Protocol::new(h, cover, &BondSpec::Design(mu)).map_err(err)
}

fn c1_chain_comparison() -> Outcome {
    let (eps, delta, gamma) = (0.01, 0.01, 0.350);
    // m, g, s and ν_E read off a small instance; all are size independent.
    let p = aklt_chain_protocol(8, "icosahedron")?;
    let comm = p.hamiltonian().commutation_profile().map_err(err)?;
    let strong = theorem1_bounds(p.m(), p.nu_e(), gamma, comm.s, comm.g)
        .map_err(err)?
        .strong;
    let n_strong = sample_count_from_gap(strong, eps, delta).map_err(err)?;
    ensure!(
        sig_figs(n_strong as f64, 3) == 1.65e4 && n_strong as f64 <= 1.66e4,
        "N_strong = {n_strong}, expected 1.65e4 to 3 significant figures and at most 1.66e4"
    );
    let mut counts = Vec::new();
    for n in (20..=200).step_by(2) {
        let g = generators::chain(n, true).map_err(err)?;
        let m = g.edge_coloring::<f64>().map_err(err)?.len();
        let b = theorem1_bounds(m, p.nu_e(), gamma, comm.s, comm.g).map_err(err)?;
        counts.push(sample_count_from_gap(b.strong, eps, delta).map_err(err)?);
    }
    ensure!(
        counts.iter().all(|&c| c == n_strong),
        "coloring N varies with n: {counts:?}"
    );
    let c = competitor_costs(&CompetitorParams {
        epsilon: eps,
        delta,
        gamma,
        edges: Some(100),
        n: Some(100),
        kappa: Some(2.0),
        ..Default::default()
    })
    .map_err(err)?;
    let hkse = c.hkse.unwrap();
    let bhsre = c.bhsre_lower.unwrap();
    ensure!(within_rel(hkse, 3.76e11, 0.01), "HKSE(100) = {hkse:.4e}");
    ensure!(
        within_rel(bhsre, 2.32e9, 0.01),
        "BHSRE lower(100) = {bhsre:.4e}"
    );
    Ok(format!(
        "N_strong={n_strong} HKSE={hkse:.4e} BHSRE={bhsre:.4e}"
    ))
}

fn c2_honeycomb() -> Outcome {
    let b = theorem1_bounds(3, 2.0 / 7.0, 0.10, 0.5, 4).map_err(err)?;
    let n = sample_count_from_gap(b.strong, 0.01, 0.01).map_err(err)?;
    ensure!(
        sig_figs(b.strong, 2) == 5.9e-4 && sig_figs(b.strong, 3) == 5.88e-4,
        "strong bound {:.4e}",
        b.strong
    );
    ensure!(within_rel(n as f64, 7.9e5, 0.01), "N_strong = {n}");
    Ok(format!("strong={:.4e} N_strong={n}", b.strong))
}

fn c3_optimal_bond() -> Outcome {
    let b = bond(2, 2);
    let ico = BondOperator::from_design(0, b, &design_catalog::<f64>("icosahedron").map_err(err)?)
        .map_err(err)?;
    let p = b.projector_pe::<f64>().map_err(err)?;
    let target = identity::<f64>(b.dim()) - &p + &p * nalgebra::Complex::from(0.6);
    let dev = linalg::max_abs(&(&ico.omega - target));
    ensure!(dev <= 1e-10, "‖Ω_e − (Q_e + 3/5 P_e)‖_max = {dev:.3e}");
    ensure!((ico.nu - 0.4).abs() <= 1e-10, "ν_e = {}", ico.nu);
    let r = b
        .theorem3_report(&design_catalog::<f64>("tetrahedron").map_err(err)?)
        .map_err(err)?;
    ensure!(
        !r.gap_is_optimal && !r.equals_isotropic && !r.is_homogeneous && !r.is_design,
        "tetrahedron report {r:?}"
    );
    Ok(format!(
        "deviation={dev:.1e} ν_e={:.12} tetrahedron ν={:.6}",
        ico.nu, r.gap
    ))
}

fn c4_frame_potentials() -> Outcome {
    let ico = design_catalog::<f64>("icosahedron").map_err(err)?;
    let (f2, f4) = (ico.frame_potential(2), ico.frame_potential(4));
    ensure!((f2 - 1.0 / 3.0).abs() <= 1e-12, "F_2 = {f2}");
    ensure!((f4 - 0.2).abs() <= 1e-12, "F_4 = {f4}");
    let dod = design_catalog::<f64>("dodecahedron").map_err(err)?;
    ensure!(dod.is_design(5, 1e-12), "dodecahedron is not a 5-design");
    let cube = design_catalog::<f64>("cube").map_err(err)?;
    ensure!(cube.is_design(3, 1e-12), "cube is not a 3-design");
    ensure!(!cube.is_design(4, 1e-12), "cube passes as a 4-design");
    Ok(format!("F_2={f2:.15} F_4={f4:.15}"))
}

fn c5_trace_floor() -> Outcome {
    let b = bond(2, 2);
    let ico = b
        .theorem3_report(&design_catalog::<f64>("icosahedron").map_err(err)?)
        .map_err(err)?;
    ensure!(
        (ico.lemma5_floor - 1.8).abs() <= 1e-12,
        "floor {}",
        ico.lemma5_floor
    );
    ensure!(
        (ico.trace_sq - 1.8).abs() <= 1e-10,
        "icosahedron tr(Ω−Q)² = {}",
        ico.trace_sq
    );
    let tet = b
        .theorem3_report(&design_catalog::<f64>("tetrahedron").map_err(err)?)
        .map_err(err)?;
    let excess = tet.trace_sq - tet.lemma5_floor;
    ensure!(excess > 1e-3, "tetrahedron excess {excess:.3e}");
    Ok(format!(
        "icosahedron={:.12} tetrahedron excess={excess:.4}",
        ico.trace_sq
    ))
}

fn c6_overlap_trace() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0f64;
    // S_e = 1, 3/2, 2, 3.
    for b in [bond(1, 1), bond(2, 1), bond(2, 2), bond(3, 3)] {
        for _ in 0..20 {
            let r: [f64; 3] = random_direction(&mut rng);
            let s: [f64; 3] = random_direction(&mut rng);
            let c = r[0] * s[0] + r[1] * s[1] + r[2] * s[2];
            let direct = b.overlap_trace_matrix(&r, &s).map_err(err)?;
            let closed = overlap_trace::<f64>(b.s_e(), c).map_err(err)?;
            worst = worst.max((direct - closed).abs());
        }
    }
    ensure!(worst <= 1e-9, "max deviation {worst:.3e}");
    Ok(format!("max deviation={worst:.1e}"))
}

fn c7_exact_bounds() -> Outcome {
    let opts = SolverOptions::default();
    let mut lines = Vec::new();
    for n in [4usize, 6, 8] {
        let p = aklt_chain_protocol(n, "icosahedron")?;
        let h = p.hamiltonian();
        if n == 8 {
            ensure!(!opts.use_dense(h.dim()), "n=8 should run matrix-free");
        }
        let ground = h.ground_space(&opts).map_err(err)?;
        let comm = h.commutation_profile().map_err(err)?;
        let uniform = p.evaluate_with(&ground, &comm, &opts).map_err(err)?;
        let strong = uniform.thm1_strong.ok_or("no strong bound")?;
        ensure!(
            uniform.nu_measured >= strong - 1e-9,
            "n={n}: ν={} < strong {strong}",
            uniform.nu_measured
        );
        let prop = Protocol::from_bond_ops(
            h.clone(),
            p.cover().to_proportional(h.graph()).map_err(err)?,
            p.bond_ops().to_vec(),
        )
        .map_err(err)?
        .evaluate_with(&ground, &comm, &opts)
        .map_err(err)?;
        let thm2 = prop.thm2.ok_or("no edge-count bound")?;
        ensure!(
            prop.nu_measured >= thm2 - 1e-9,
            "n={n}: ν={} < thm2 {thm2}",
            prop.nu_measured
        );
        let profile = SpectralProfile::assemble(&ground, &comm, None).map_err(err)?;
        let dl = dl_norm_check_with(h, &ground, &profile, &opts).map_err(err)?;
        ensure!(dl.pass, "n={n}: detectability chain {dl:?}");
        lines.push(format!(
            "n={n} ν={:.5} strong={:.5} thm2={:.5} dl={:.4}",
            uniform.nu_measured, strong, thm2, dl.measured
        ));
    }
    Ok(lines.join("; "))
}

fn c8_trivial_coloring() -> Outcome {
    let opts = SolverOptions::default();
    let g = generators::chain(4, true).map_err(err)?;
    let h = aklt_hamiltonian::<f64>(&g).map_err(err)?;
    let cover = MatchingCover::trivial(&g).map_err(err)?;
    let p = Protocol::new(h, cover, &BondSpec::Isotropic).map_err(err)?;
    let r = p.evaluate(&opts).map_err(err)?;
    let predicted = r.nu_e * r.gamma / r.edges as f64;
    let dev = (r.nu_measured - predicted).abs();
    ensure!(dev <= 1e-9, "ν={} vs ν_Eγ/|E|={predicted}", r.nu_measured);
    Ok(format!("ν={:.12} ν_Eγ/|E|={predicted:.12}", r.nu_measured))
}

fn c9_union_gap() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_margin = f64::INFINITY;
    let mut worst_eq = 0f64;
    for _ in 0..200 {
        let d = rng.random_range(2..=32usize);
        let m = rng.random_range(2..=5usize);
        let ps: Vec<CMatrix<f64>> = (0..m)
            .map(|_| {
                let rank = rng.random_range(1..d);
                random_projector::<f64>(d, rank, &mut rng)
            })
            .collect();
        let r = union_gap_check(&ps).map_err(err)?;
        worst_margin = worst_margin.min(r.lhs - r.rhs);
        if let Some(e) = r.equality_defect {
            worst_eq = worst_eq.max(e);
        }
    }
    ensure!(worst_margin >= -1e-10, "1 − ‖O‖ − rhs = {worst_margin:.3e}");
    ensure!(worst_eq <= 1e-10, "m=2 equality defect {worst_eq:.3e}");
    // P_1 ⟂ P_2 = … = P_m, all rank one.
    for m in 2..=5usize {
        let ket = |i: usize| {
            let mut v = CVector::<f64>::zeros(2);
            v[i] = nalgebra::Complex::from(1.0);
            &v * v.adjoint()
        };
        let mut ps = vec![ket(0)];
        ps.extend((1..m).map(|_| ket(1)));
        let sum = ps.iter().fold(CMatrix::<f64>::zeros(2, 2), |a, p| a + p);
        let norm = operator_norm(&(sum / nalgebra::Complex::from(m as f64))).map_err(err)?;
        let expect = (m - 1) as f64 / m as f64;
        ensure!((norm - expect).abs() <= 1e-12, "m={m}: ‖O‖={norm}");
        let r = union_gap_check(&ps).map_err(err)?;
        ensure!((r.lhs - r.rhs).abs() <= 1e-12, "m={m}: not saturated {r:?}");
    }
    Ok(format!(
        "min margin={worst_margin:.3e} m=2 defect={worst_eq:.1e}"
    ))
}

fn c10_statistics() -> Outcome {
    const EPS: f64 = 0.05;
    const DELTA: f64 = 0.01;
    const RUNS: u64 = 10_000;
    const DRAWS: u64 = 100_000;
    let seed = 10;
    let opts = SolverOptions::default();
    let p = aklt_chain_protocol(4, "icosahedron")?;
    let ground = p.hamiltonian().ground_space(&opts).map_err(err)?;
    let nu = p.spectral_gap(&ground, &opts).map_err(err)?;
    let noise = NoiseSpec::new(NoiseMode::WorstCase, EPS).map_err(err)?;
    let state = prepare_state(&p, &ground, &noise, seed, &opts).map_err(err)?;
    let exact = acceptance_probability(&p, &state).map_err(err)?;
    ensure!(
        (exact - (1.0 - nu * EPS)).abs() <= 1e-10,
        "tr(Ωσ)={exact} vs 1−νε={}",
        1.0 - nu * EPS
    );
    let sampler = TestSampler::new(&p).map_err(err)?;
    let rate = estimate_pass_rate(&sampler, &state, DRAWS, seed).map_err(err)?;
    ensure!(
        (rate.rate - exact).abs() <= 3.0 * rate.std_error,
        "pass rate {} vs {exact} (3σ = {})",
        rate.rate,
        3.0 * rate.std_error
    );
    let n = sample_count(nu, EPS, DELTA).map_err(err)?;
    let runs = simulate_runs(&sampler, &state, n, RUNS, seed, true).map_err(err)?;
    let accepted = runs.iter().filter(|r| r.accepted).count() as f64 / RUNS as f64;
    let band = DELTA + 3.0 * (DELTA / RUNS as f64).sqrt();
    ensure!(accepted <= band, "acceptance {accepted} > {band}");
    Ok(format!(
        "ν={nu:.6} tr(Ωσ)={exact:.10} rate={:.5}±{:.5} N={n} accepted={accepted:.4} band={band:.4}",
        rate.rate, rate.std_error
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("chain sample costs and competitors", c1_chain_comparison),
        ("honeycomb bound and sample cost", c2_honeycomb),
        ("optimal bond operator conditions", c3_optimal_bond),
        ("frame potentials and designs", c4_frame_potentials),
        ("trace inequality saturation", c5_trace_floor),
        ("overlap trace closed form", c6_overlap_trace),
        ("exact-diagonalization bound suite", c7_exact_bounds),
        ("trivial-coloring saturation", c8_trivial_coloring),
        ("union gap inequality", c9_union_gap),
        ("statistical acceptance law", c10_statistics),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let t = fmt_duration(start.elapsed());
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} [{t}] {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} [{t}] {detail}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn fmt_duration(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}
