use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dqd_thermo::config::{ResolvedConfig, RunConfig, SweepSpec};
use dqd_thermo::fcs::{diffusion_tilted, CountingSpec, DEFAULT_CHI_STEP};
use dqd_thermo::model::EngineParams;
use dqd_thermo::sample::{random_engine, random_qpc};
use dqd_thermo::sweep::{
    default_tau_list, evaluate_point, law_violations, run_collision_compare, run_laws, run_sweep,
    SLOPE_BAND,
};
use dqd_thermo::thermo::{closed_form_current, gamma_zero, ThermoReport};
use dqd_thermo::Error;

const EXIT_VIOLATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

/// Relative agreement demanded of the two diffusion estimates.
const DIFFUSION_AGREEMENT: f64 = 1e-6;

/// Random parameter sets checked by `laws --seed`.
const RANDOM_CONFIGS: usize = 100;

#[derive(Parser)]
#[command(
    name = "dqd",
    version,
    about = "Thermodynamics of a measured double-quantum-dot engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Steady state and currents at the configured measurement strength.
    Ness(Common),
    /// CSV table over a measurement-strength grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Output file; defaults to the config's `output` or stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the number of grid points.
        #[arg(long)]
        gamma_points: Option<usize>,
    },
    /// First- and second-law checks, efficiency and naive accounting.
    Laws {
        #[command(flatten)]
        common: Common,
        /// Also check this many seeded random parameter sets.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Collision model against the master equation over a list of collision
    /// times.
    Collision(Common),
    /// Counting statistics of the hot exchange, Drazin formula against the
    /// tilted generator.
    Fcs(Common),
    /// Naive heat accounting against the collision-model accounting.
    DemoInconsistency(Common),
}

enum Failure {
    Violation(String),
    Config(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Io(_) => Failure::Config(e.to_string()),
            other => Failure::Solver(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(format!("i/o error: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ness(c) => ness(&c),
        Command::Sweep {
            common,
            out,
            gamma_points,
        } => sweep(&common, out, gamma_points),
        Command::Laws { common, seed } => laws(&common, seed),
        Command::Collision(c) => collision(&c),
        Command::Fcs(c) => fcs(&c),
        Command::DemoInconsistency(c) => demo(&c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(msg)) => {
            eprintln!("invariant violated: {msg}");
            ExitCode::from(EXIT_VIOLATION)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, Failure> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| Failure::Config("--config is required".into()))?;
    Ok(RunConfig::load(path)?)
}

fn print_report(out: &mut impl Write, r: &ThermoReport) -> io::Result<()> {
    let rows = [
        ("gamma", r.dephasing),
        ("J_N", r.j_n),
        ("n1", r.n1),
        ("n2", r.n2),
        ("coh_re", r.coh_re),
        ("coh_im", r.coh_im),
        ("Qdot_H", r.qdot_h),
        ("Qdot_C", r.qdot_c),
        ("Qdot_QPC", r.qdot_qpc),
        ("Wdot_H", r.wdot_h),
        ("Wdot_C", r.wdot_c),
        ("Wdot_QPC", r.wdot_qpc),
        ("Wdot_QPC_dqd", r.wdot_qpc_dqd),
        ("Wdot_QPC_watt", r.wdot_qpc_watt),
        ("Wdot_tot", r.wdot_tot),
        ("eta", r.eta),
        ("eta_carnot", r.eta_carnot),
        ("sigma_DQD", r.sigma_dqd),
        ("sigma_QPC", r.sigma_qpc),
        ("first_law_residual", r.first_law_residual),
    ];
    for (name, value) in rows {
        writeln!(out, "{name:<20} {value:.12e}")?;
    }
    Ok(())
}

fn ness(common: &Common) -> Outcome {
    let run = load(common)?.resolve()?;
    let e = evaluate_point(&run.params, &run.qpc)?;
    let mut out = io::stdout().lock();
    print_report(&mut out, &e.thermo)?;
    writeln!(out, "{:<20} {:.12e}", "M", e.fcs.m)?;
    writeln!(out, "{:<20} {:.12e}", "D", e.fcs.d)?;
    writeln!(
        out,
        "{:<20} {:.12e}",
        "turr",
        e.fcs.turr.unwrap_or(f64::NAN)
    )?;
    violations_to_failure(&law_violations(&run.params, &run.qpc, &e.thermo))
}

fn violations_to_failure(v: &[dqd_thermo::sweep::Violation]) -> Outcome {
    if v.is_empty() {
        Ok(())
    } else {
        let msg: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        Err(Failure::Violation(msg.join("; ")))
    }
}

// Without a sweep section: Γ from 0 to twice the larger of Γ₀ and γ̃.
fn default_sweep(p: &EngineParams) -> SweepSpec {
    SweepSpec {
        gamma_min: 0.0,
        gamma_max: 2.0 * gamma_zero(p).max(p.gamma_sum()),
        n_points: 101,
        spacing: Default::default(),
    }
}

fn sweep(common: &Common, out: Option<PathBuf>, gamma_points: Option<usize>) -> Outcome {
    let mut cfg = load(common)?;
    if let (Some(n), Some(s)) = (gamma_points, cfg.sweep.as_mut()) {
        s.n_points = n;
    }
    let run = cfg.resolve()?;
    let gammas = match &run.gammas {
        Some(g) => g.clone(),
        None => {
            let mut spec = default_sweep(&run.params);
            if let Some(n) = gamma_points {
                spec.n_points = n;
            }
            spec.grid(1.0)?
        }
    };
    let result = run_sweep(&run.params, &run.qpc, &gammas);
    match out.or_else(|| run.output.clone()) {
        Some(path) => result.write_csv(BufWriter::new(File::create(&path)?))?,
        None => result.write_csv(io::stdout().lock())?,
    }

    let mut err = io::stderr().lock();
    writeln!(err, "gamma_ext (closed form)  {:.12e}", result.gamma_ext)?;
    writeln!(err, "gamma_zero (closed form) {:.12e}", result.gamma_zero)?;
    let show = |name: &str, e: Option<dqd_thermo::sweep::Extremum>| match e {
        Some(e) => format!(
            "{name:<24} gamma {:.12e} value {:.12e}{}",
            e.gamma,
            e.value,
            if e.interior { "" } else { " (grid edge)" }
        ),
        None => format!("{name:<24} undefined"),
    };
    writeln!(err, "{}", show("argmax J_N", result.current_max))?;
    writeln!(err, "{}", show("argmin turr", result.turr_min))?;
    writeln!(err, "{}", show("argmin D/J^2", result.rel_fluct_min))?;
    let opt = |x: Option<f64>| x.map_or("beyond grid".to_string(), |g| format!("{g:.12e}"));
    writeln!(
        err,
        "turr back at gamma=0     {}",
        opt(result.turr_recovery)
    )?;
    writeln!(
        err,
        "D/J^2 back at gamma=0    {}",
        opt(result.rel_fluct_recovery)
    )?;
    for row in result.flagged() {
        for f in &row.flags {
            writeln!(err, "gamma {:.6e}: {f}", row.gamma)?;
        }
    }
    if result.has_solver_failure() {
        return Err(Failure::Solver("one or more sweep points failed".into()));
    }
    if result.flagged().next().is_some() {
        return Err(Failure::Violation(
            "law check failed at one or more sweep points".into(),
        ));
    }
    Ok(())
}

fn laws(common: &Common, seed: Option<u64>) -> Outcome {
    let run = load(common)?.resolve()?;
    let report = run_laws(&run.params, &run.qpc)?;
    let mut out = io::stdout().lock();
    let r = &report.thermo;
    writeln!(out, "first_law_residual   {:.6e}", r.first_law_residual)?;
    writeln!(out, "current_scale        {:.6e}", r.current_scale())?;
    writeln!(out, "sigma_DQD            {:.6e}", r.sigma_dqd)?;
    writeln!(out, "sigma_QPC            {:.6e}", r.sigma_qpc)?;
    writeln!(out, "eta                  {:.12}", r.eta)?;
    writeln!(out, "eta (closed form)    {:.12}", report.efficiency.eta)?;
    writeln!(
        out,
        "eta_carnot           {:.12}",
        report.efficiency.eta_carnot
    )?;
    writeln!(
        out,
        "engine_regime        {}",
        report.efficiency.engine_regime
    )?;
    if let Some(n) = report.naive {
        writeln!(out, "Qdot_H naive         {:.6e}", n.qdot_h)?;
        writeln!(out, "sigma naive          {:.6e}", n.sigma)?;
    }
    let mut violations: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
    if let Some(seed) = seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut failed = 0;
        for k in 0..RANDOM_CONFIGS {
            let (p, q) = (random_engine(&mut rng), random_qpc(&mut rng));
            let v = match evaluate_point(&p, &q) {
                Ok(e) => law_violations(&p, &q, &e.thermo),
                Err(e) => vec![dqd_thermo::sweep::Violation::Solver(e.to_string())],
            };
            if !v.is_empty() {
                failed += 1;
                violations.extend(v.iter().map(|x| format!("random set {k}: {x}")));
            }
        }
        writeln!(
            out,
            "random sets checked  {RANDOM_CONFIGS} (seed {seed}), failed {failed}"
        )?;
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(violations.join("; ")))
    }
}

fn collision(common: &Common) -> Outcome {
    let run: ResolvedConfig = load(common)?.resolve()?;
    let taus = run
        .tau_list
        .clone()
        .unwrap_or_else(|| default_tau_list(&run.params));
    let report = run_collision_compare(&run.params, &run.qpc, &taus, run.n_steps)?;
    let mut out = io::stdout().lock();
    writeln!(out, "tau,residual,residual_no_qpc,fixed_point_distance")?;
    for r in &report.rows {
        writeln!(
            out,
            "{:e},{:e},{:e},{:e}",
            r.tau,
            r.residual,
            r.residual_no_qpc,
            r.fixed_point_distance.unwrap_or(f64::NAN)
        )?;
    }
    let mut err = io::stderr().lock();
    writeln!(
        err,
        "dissipator max entry gap {:.3e}",
        report.dissipator_gap
    )?;
    writeln!(err, "fitted order with QPC    {:.4}", report.slope)?;
    writeln!(err, "fitted order without QPC {:.4}", report.slope_no_qpc)?;
    if report.slopes_in_band() {
        Ok(())
    } else {
        Err(Failure::Violation(format!(
            "convergence order outside [{}, {}]",
            SLOPE_BAND.0, SLOPE_BAND.1
        )))
    }
}

fn fcs(common: &Common) -> Outcome {
    let run = load(common)?.resolve()?;
    let e = evaluate_point(&run.params, &run.qpc)?;
    let tilted = diffusion_tilted(
        &CountingSpec::hot_exchange(&e.bundle),
        &e.bundle,
        DEFAULT_CHI_STEP,
    )?;
    let mut out = io::stdout().lock();
    writeln!(out, "J (jump superoperator) {:.12e}", e.fcs.j)?;
    writeln!(out, "J (tilted, lambda'(0)) {:.12e}", tilted.first)?;
    writeln!(out, "M                      {:.12e}", e.fcs.m)?;
    writeln!(out, "D (Drazin)             {:.12e}", e.fcs.d)?;
    writeln!(out, "D (tilted)             {:.12e}", tilted.second)?;
    writeln!(out, "counting-field step    {:.1e}", tilted.step)?;
    writeln!(
        out,
        "turr                   {:.12e}",
        e.fcs.turr.unwrap_or(f64::NAN)
    )?;
    let rel = (e.fcs.d - tilted.second).abs() / e.fcs.d.abs().max(f64::MIN_POSITIVE);
    if rel > DIFFUSION_AGREEMENT && (e.fcs.d - tilted.second).abs() > 1e-12 * e.fcs.m {
        return Err(Failure::Violation(format!(
            "diffusion estimates differ by {rel:.3e}"
        )));
    }
    Ok(())
}

fn demo(common: &Common) -> Outcome {
    let cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::from_json(include_str!("../../../configs/demo_inconsistency.json"))?,
    };
    let run = cfg.resolve()?;
    let (p, q) = (run.params, run.qpc);
    let report = run_laws(&p, &q)?;
    let naive = report
        .naive
        .ok_or_else(|| Failure::Config("the naive accounting needs mu_h = mu_c = 0".into()))?;
    let mut out = io::stdout().lock();
    writeln!(out, "f_H(eps1)            {:.6}", p.f_hot())?;
    writeln!(out, "f_C(eps2)            {:.6}", p.f_cold())?;
    writeln!(out, "J_N                  {:.6e}", report.thermo.j_n)?;
    writeln!(out, "J_N (closed form)    {:.6e}", closed_form_current(&p))?;
    writeln!(out, "Qdot_H naive         {:.6e}", naive.qdot_h)?;
    writeln!(out, "sigma naive          {:.6e}", naive.sigma)?;
    writeln!(out, "Qdot_H collision     {:.6e}", report.thermo.qdot_h)?;
    writeln!(out, "sigma_DQD collision  {:.6e}", report.thermo.sigma_dqd)?;
    violations_to_failure(&report.violations)
}
