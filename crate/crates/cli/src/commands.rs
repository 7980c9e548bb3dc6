use std::fmt;

use anyhow::Result;
use ffverify::checks::run_checks;
use ffverify::protocol::{
    competitor_costs, sample_count, sample_count_from_gap, theorem1_bounds, ReportRow,
};
use ffverify::simulate::{
    acceptance_probability, estimate_pass_rate, prepare_state, simulate_runs, PassRate,
    SimulationSummary,
};
use ffverify::{
    BondSpec, CompetitorParams, DirectionDistribution, GapReport, MatchingCover, NoiseMode,
    NoiseSpec, Protocol, SolverOptions, TestSampler,
};
use serde::Serialize;

use crate::instance::Instance;
use crate::output::{emit, write_csv, write_json, Format};
use crate::{
    CheckArgs, Cli, ColoringChoice, Command, CompareArgs, GapArgs, Preset, Probabilities,
    ProtocolArgs, SamplesArgs, SimulateArgs,
};

/// A measured quantity broke a proven inequality.
#[derive(Debug)]
pub struct Violation(pub String);

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invariant violated: {}", self.0)
    }
}

impl std::error::Error for Violation {}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.downcast_ref::<Violation>().is_some() {
            return 4;
        }
        if let Some(err) = cause.downcast_ref::<ffverify::Error>() {
            return match err {
                ffverify::Error::Resource(_) | ffverify::Error::NoConvergence(_) => 3,
                _ => 2,
            };
        }
    }
    2
}

fn input(msg: impl Into<String>) -> anyhow::Error {
    ffverify::Error::Input(msg.into()).into()
}

/// Solver options with the `FFV_MAX_DIM` cap applied.
pub fn solver_options() -> Result<SolverOptions> {
    let mut opts = SolverOptions::default();
    if let Ok(v) = std::env::var("FFV_MAX_DIM") {
        opts.max_dim = v
            .trim()
            .parse()
            .map_err(|_| input(format!("FFV_MAX_DIM must be a positive integer, got {v:?}")))?;
    }
    Ok(opts)
}

pub fn run(cli: Cli) -> Result<()> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Gap(a) => gap(a, cli.format.unwrap_or(Format::Json), out),
        Command::Samples(a) => samples(a, cli.format.unwrap_or(Format::Json), out),
        Command::Compare(a) => compare(a, cli.format.unwrap_or(Format::Csv), out),
        Command::CheckBounds(a) => {
            check_bounds(a, cli.seed, cli.format.unwrap_or(Format::Json), out)
        }
        Command::Simulate(a) => simulate(a, cli.seed, cli.format.unwrap_or(Format::Json), out),
    }
}

fn build_protocol(
    inst: Instance,
    args: &ProtocolArgs,
    warnings: &mut Vec<String>,
) -> Result<Protocol> {
    let mut spec = match args.design.as_str() {
        "isotropic" => BondSpec::Isotropic,
        "projective" => BondSpec::Projective,
        other => BondSpec::Design(DirectionDistribution::resolve(other)?),
    };
    if !inst.aklt && !matches!(spec, BondSpec::Projective) {
        warnings
            .push("loaded Hamiltonians are tested with projective bond tests {Q_e, P_e}".into());
        spec = BondSpec::Projective;
    }
    let h = inst.hamiltonian;
    let g = h.graph().clone();
    let cover = match args.coloring {
        ColoringChoice::Auto => g.edge_coloring::<f64>()?,
        ColoringChoice::Trivial => MatchingCover::trivial(&g)?,
    };
    let cover = match args.probabilities {
        Probabilities::Uniform => cover.to_uniform(&g)?,
        Probabilities::Proportional => cover.to_proportional(&g)?,
    };
    Ok(Protocol::new(h, cover, &spec)?)
}

#[derive(Serialize)]
struct OrderingSearch {
    ordering: Vec<usize>,
    zeta: f64,
    g_tilde: usize,
}

#[derive(Serialize)]
struct GapOutput {
    design: String,
    report: GapReport,
    counts: ReportRow,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimized_ordering: Option<OrderingSearch>,
}

fn gap(a: GapArgs, format: Format, out: Option<&std::path::Path>) -> Result<()> {
    let opts = solver_options()?;
    let mut warnings = Vec::new();
    let inst = a.instance.build()?;
    opts.check_dim(inst.hamiltonian.dim())?;
    let protocol = build_protocol(inst, &a.protocol, &mut warnings)?;
    let mut report = protocol.evaluate(&opts)?;
    report.warnings.splice(0..0, warnings);
    let optimized_ordering = if a.optimize_ordering {
        let (ordering, zeta, g_tilde) = protocol
            .hamiltonian()
            .commutation_profile()?
            .min_zeta_ordering(8)?;
        Some(OrderingSearch {
            ordering,
            zeta,
            g_tilde,
        })
    } else {
        None
    };
    let counts = ReportRow::from_report(&report, a.epsilon, a.delta, a.kappa, a.alpha)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let pass = report.pass;
    let output = GapOutput {
        design: a.protocol.design.clone(),
        report,
        counts: counts.clone(),
        optimized_ordering,
    };
    emit(format, out, &output, &[counts])?;
    if !pass {
        return Err(Violation("measured gap is below a proven lower bound".into()).into());
    }
    Ok(())
}

#[derive(Serialize)]
struct SamplesRow {
    epsilon: f64,
    delta: f64,
    nu: Option<f64>,
    m: Option<usize>,
    nu_e: Option<f64>,
    gamma: Option<f64>,
    s: Option<f64>,
    g: Option<usize>,
    thm1_strong: Option<f64>,
    thm1_weak: Option<f64>,
    #[serde(rename = "N")]
    n_tests: Option<u64>,
    #[serde(rename = "N_strong")]
    n_strong: Option<u64>,
    #[serde(rename = "N_weak")]
    n_weak: Option<u64>,
}

fn samples(a: SamplesArgs, format: Format, out: Option<&std::path::Path>) -> Result<()> {
    let (m, nu_e, gamma, s, g) = match a.preset {
        Some(Preset::Chain) => (Some(2), Some(0.4), Some(0.350), Some(0.5), Some(2)),
        Some(Preset::Honeycomb) => (Some(3), Some(2.0 / 7.0), Some(0.10), Some(0.5), Some(4)),
        None => (None, None, None, None, None),
    };
    let m = a.m.or(m);
    let nu_e = a.nu_e.or(nu_e);
    let gamma = a.gamma.or(gamma);
    let s = a.s.or(s);
    let g = a.g.or(g);
    let mut row = SamplesRow {
        epsilon: a.epsilon,
        delta: a.delta,
        nu: a.nu,
        m,
        nu_e,
        gamma,
        s,
        g,
        thm1_strong: None,
        thm1_weak: None,
        n_tests: a
            .nu
            .map(|nu| sample_count(nu, a.epsilon, a.delta))
            .transpose()?,
        n_strong: None,
        n_weak: None,
    };
    match (m, nu_e, gamma, s, g) {
        (Some(m), Some(nu_e), Some(gamma), Some(s), Some(g)) => {
            let b = theorem1_bounds(m, nu_e, gamma, s, g)?;
            row.thm1_strong = Some(b.strong);
            row.thm1_weak = Some(b.weak);
            row.n_strong = Some(sample_count_from_gap(b.strong, a.epsilon, a.delta)?);
            row.n_weak = Some(sample_count_from_gap(b.weak, a.epsilon, a.delta)?);
        }
        (None, None, None, None, None) if a.nu.is_some() => {}
        _ => {
            return Err(input(
                "give --nu, a --preset, or all of --m --nu-e --gamma --s --g",
            ))
        }
    }
    emit(format, out, &row, std::slice::from_ref(&row))
}

#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub n: usize,
    #[serde(rename = "coloring_N")]
    pub coloring: u64,
    #[serde(rename = "HKSE_N")]
    pub hkse: u64,
    #[serde(rename = "BHSRE_N")]
    pub bhsre: u64,
}

/// Rows for even closed chains: the 2-coloring protocol with icosahedron
/// bonds against the HKSE and BHSRE costs.
pub fn compare_rows(a: &CompareArgs) -> Result<Vec<CompareRow>> {
    if a.n_min < 4
        || a.n_min > a.n_max
        || a.n_step == 0
        || !a.n_min.is_multiple_of(2)
        || !a.n_step.is_multiple_of(2)
    {
        return Err(input(
            "need an even n_min >= 4, n_min <= n_max and an even step",
        ));
    }
    let strong = theorem1_bounds(2, 0.4, a.gamma, 0.5, 2)?.strong;
    let coloring = sample_count_from_gap(strong, a.epsilon, a.delta)?;
    let mut rows = Vec::new();
    for n in (a.n_min..=a.n_max).step_by(a.n_step) {
        let c = competitor_costs(&CompetitorParams {
            epsilon: a.epsilon,
            delta: a.delta,
            gamma: a.gamma,
            edges: Some(n),
            n: Some(n),
            kappa: Some(a.kappa),
            alpha: a.alpha,
            ..Default::default()
        })?;
        let bhsre = if a.alpha.is_some() {
            c.bhsre
        } else {
            c.bhsre_lower
        };
        rows.push(CompareRow {
            n,
            coloring,
            hkse: c.hkse.expect("edges given").ceil() as u64,
            bhsre: bhsre.expect("n and kappa given").ceil() as u64,
        });
    }
    Ok(rows)
}

fn compare(a: CompareArgs, format: Format, out: Option<&std::path::Path>) -> Result<()> {
    let rows = compare_rows(&a)?;
    emit(format, out, &rows, &rows)
}

fn check_bounds(
    a: CheckArgs,
    seed: u64,
    format: Format,
    out: Option<&std::path::Path>,
) -> Result<()> {
    let opts = solver_options()?;
    let summary = run_checks(a.instances, seed, a.inject_broken_projector, &opts);
    for (name, passed, total) in summary.tally() {
        eprintln!("{name:<40} {passed}/{total}");
    }
    emit(format, out, &summary, &summary.checks)?;
    let failed: Vec<String> = summary
        .failures()
        .map(|c| match c.instance {
            Some(i) => format!("{} (instance {i}): {}", c.name, c.detail),
            None => format!("{}: {}", c.name, c.detail),
        })
        .collect();
    if !failed.is_empty() {
        return Err(Violation(failed.join("; ")).into());
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateOutput {
    nu: f64,
    delta: f64,
    /// `δ + 3√(δ/runs)`.
    acceptance_band: f64,
    within_band: bool,
    summary: SimulationSummary,
}

#[derive(Serialize)]
struct SimulateRow {
    noise: NoiseMode,
    epsilon: f64,
    fidelity: f64,
    nu: f64,
    exact_pass_probability: f64,
    pass_rate: Option<f64>,
    pass_rate_std_error: Option<f64>,
    n_tests: u64,
    runs: u64,
    accepted: u64,
    acceptance_rate: f64,
    predicted_acceptance: f64,
    delta: f64,
    acceptance_band: f64,
    seed: u64,
}

fn simulate(
    a: SimulateArgs,
    seed: u64,
    format: Format,
    out: Option<&std::path::Path>,
) -> Result<()> {
    let opts = solver_options()?;
    let mode: NoiseMode = a.noise.parse()?;
    let noise = NoiseSpec::new(mode, a.epsilon)?;
    if a.runs == 0 {
        return Err(input("--runs must be at least 1"));
    }
    let mut warnings = Vec::new();
    let inst = a.instance.build()?;
    opts.check_dim(inst.hamiltonian.dim())?;
    let protocol = build_protocol(inst, &a.protocol, &mut warnings)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let ground = protocol.hamiltonian().ground_space(&opts)?;
    let nu = protocol.spectral_gap(&ground, &opts)?;
    let n_tests = match a.n_tests {
        Some(n) => n,
        None if a.epsilon > 0.0 => {
            sample_count(nu.clamp(f64::MIN_POSITIVE, 1.0), a.epsilon, a.delta)?
        }
        None => return Err(input("ε = 0 gives no default test count; pass --tests")),
    };
    let state = prepare_state(&protocol, &ground, &noise, seed, &opts)?;
    let exact = acceptance_probability(&protocol, &state)?;
    let sampler = TestSampler::new(&protocol)?;
    let results = simulate_runs(&sampler, &state, n_tests, a.runs, seed, !a.full_runs)?;
    let pass_rate: Option<PassRate> = if a.draws > 0 {
        Some(estimate_pass_rate(&sampler, &state, a.draws, seed)?)
    } else {
        None
    };
    let summary = SimulationSummary::new(
        noise,
        state.fidelity(&ground),
        exact,
        pass_rate,
        n_tests,
        &results,
        seed,
    );
    if let Some(path) = &a.per_run {
        write_csv(Some(path), &results)?;
    }
    let band = a.delta + 3.0 * (a.delta / a.runs as f64).sqrt();
    let row = SimulateRow {
        noise: mode,
        epsilon: a.epsilon,
        fidelity: summary.fidelity,
        nu,
        exact_pass_probability: exact,
        pass_rate: pass_rate.map(|p| p.rate),
        pass_rate_std_error: pass_rate.map(|p| p.std_error),
        n_tests,
        runs: a.runs,
        accepted: summary.accepted,
        acceptance_rate: summary.acceptance_rate,
        predicted_acceptance: summary.predicted_acceptance,
        delta: a.delta,
        acceptance_band: band,
        seed,
    };
    let output = SimulateOutput {
        nu,
        delta: a.delta,
        acceptance_band: band,
        within_band: summary.acceptance_rate <= band,
        summary,
    };
    match format {
        Format::Json => write_json(out, &output),
        Format::Csv => write_csv(out, &[row]),
    }
}
