//! `isasc`: run the sweeps and the oracle suite from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use isasc_core::experiments::{run_experiment, ExperimentKind, ExperimentSpec, RunOutput};
use isasc_core::optimizer::Scheme;
use isasc_core::system::{Scenario, ScenarioFile};
use isasc_core::Error;

const EXIT_VALIDATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "isasc", version, about = "Secure IRS-assisted sensing and semantic communication experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Scenario file (TOML); built-in desk scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Channel realizations per sweep point.
    #[arg(long, default_value_t = ExperimentSpec::DEFAULT_REALIZATIONS)]
    realizations: usize,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    /// Comma-separated baselines to run next to the proposed scheme
    /// (bl1,bl2,bl3,bl4 or `none`).
    #[arg(long, default_value = "bl1,bl2,bl3,bl4")]
    baselines: String,
    /// Points of the ε grid, from 0 to 0.95 of the SSR ceiling.
    #[arg(long, default_value_t = ExperimentSpec::DEFAULT_EPS_POINTS)]
    eps_points: usize,
    /// Worker threads (0: one per core).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// CRB vs SSR-floor trade-off.
    Pareto {
        #[command(flatten)]
        common: Common,
    },
    /// Per-iteration CRB traces of the alternating optimizer.
    Converge {
        #[command(flatten)]
        common: Common,
        /// (M, N) cases, e.g. `6x8,8x8`.
        #[arg(long, value_delimiter = ',')]
        cases: Option<Vec<String>>,
        /// SSR floor, suts/sec.
        #[arg(long, default_value_t = 1e4)]
        epsilon: f64,
    },
    /// CRB vs P_max at a fixed SSR floor.
    PowerSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        p_max_dbm: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1e4)]
        epsilon: f64,
    },
    /// CRB vs IRS size at a fixed SSR floor and P_max.
    ElementsSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long, default_value_t = 50.0)]
        p_max_dbm: f64,
        #[arg(long, default_value_t = 1e4)]
        epsilon: f64,
    },
    /// Semantic vs bit-oriented secrecy at a CRB target.
    BcCompare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        p_max_dbm: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        kappas: Option<Vec<usize>>,
        #[arg(long, default_value_t = -150.0, allow_hyphen_values = true)]
        crb_target_db: f64,
    },
    /// Identity and finite-difference oracles.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn parse_baselines(list: &str) -> anyhow::Result<Vec<Scheme>> {
    let mut schemes = vec![Scheme::Proposed];
    if list.trim().eq_ignore_ascii_case("none") || list.trim().is_empty() {
        return Ok(schemes);
    }
    for item in list.split(',') {
        let s: Scheme = item.parse()?;
        if !schemes.contains(&s) {
            schemes.push(s);
        }
    }
    Ok(schemes)
}

fn parse_case(text: &str) -> anyhow::Result<(usize, usize)> {
    let (m, n) = text
        .split_once(['x', 'X'])
        .with_context(|| format!("case `{text}` is not of the form MxN"))?;
    Ok((m.trim().parse()?, n.trim().parse()?))
}

fn build_spec(kind: ExperimentKind, common: &Common) -> anyhow::Result<ExperimentSpec> {
    let scenario = match &common.config {
        Some(path) => ScenarioFile::load(path)?,
        None => Scenario::desk_default(),
    };
    let mut spec = ExperimentSpec::new(kind, scenario).with_eps_points(common.eps_points);
    spec.master_seed = common.seed;
    spec.realizations = common.realizations;
    spec.schemes = parse_baselines(&common.baselines)?;
    spec.threads = common.threads;
    Ok(spec)
}

fn spec_from(command: &Command) -> anyhow::Result<(ExperimentSpec, Common)> {
    Ok(match command {
        Command::Pareto { common } => (build_spec(ExperimentKind::Pareto, common)?, common.clone()),
        Command::Converge { common, cases, epsilon } => {
            let mut spec = build_spec(ExperimentKind::Converge, common)?;
            if let Some(cases) = cases {
                spec.cases = cases.iter().map(|c| parse_case(c)).collect::<anyhow::Result<_>>()?;
            }
            spec.epsilon = *epsilon;
            (spec, common.clone())
        }
        Command::PowerSweep { common, p_max_dbm, epsilon } => {
            let mut spec = build_spec(ExperimentKind::PowerSweep, common)?;
            if let Some(p) = p_max_dbm {
                spec.p_max_dbm = p.clone();
            }
            spec.epsilon = *epsilon;
            (spec, common.clone())
        }
        Command::ElementsSweep { common, n_list, p_max_dbm, epsilon } => {
            let mut spec = build_spec(ExperimentKind::ElementsSweep, common)?;
            if let Some(n) = n_list {
                spec.n_list = n.clone();
            }
            spec.elements_p_max_dbm = *p_max_dbm;
            spec.epsilon = *epsilon;
            (spec, common.clone())
        }
        Command::BcCompare { common, p_max_dbm, kappas, crb_target_db } => {
            let mut spec = build_spec(ExperimentKind::BcCompare, common)?;
            if let Some(p) = p_max_dbm {
                spec.p_max_dbm = p.clone();
            }
            if let Some(k) = kappas {
                spec.kappas = k.clone();
            }
            spec.crb_target_db = *crb_target_db;
            (spec, common.clone())
        }
        Command::Validate { common } => (build_spec(ExperimentKind::Validate, common)?, common.clone()),
    })
}

fn report(spec: &ExperimentSpec, out: &RunOutput) {
    for o in &out.oracles {
        println!(
            "{:<24} {:<4} observed {:.3e} tol {:.1e}  {}",
            o.name,
            if o.passed { "pass" } else { "FAIL" },
            o.observed,
            o.tolerance,
            o.detail
        );
    }
    if let Some(s) = &out.summary {
        for g in &s.groups {
            let crb = g.crb_db.map_or("-".to_string(), |q| format!("{:.2} [{:.2}, {:.2}]", q.median, q.q1, q.q3));
            println!(
                "{:<18} {}={:<10} feasible {}/{}  CRB dB {}",
                g.scheme, g.sweep, g.x, g.feasible, g.rows, crb
            );
        }
        for (k, v) in &s.notes {
            println!("{k} = {v:.4}");
        }
    }
    log::info!("{} finished, config hash {}", spec.kind, spec.config_hash());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (spec, common) = match spec_from(&cli.command) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out = match run_experiment(&spec) {
        Ok(out) => out,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SOLVER);
        }
    };
    match out.write(&common.out_dir, spec.kind.as_str()) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: writing results: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    report(&spec, &out);
    if !out.oracles_passed() {
        return ExitCode::from(EXIT_VALIDATION);
    }
    let rate = out.failure_rate();
    if rate > 0.5 {
        eprintln!("error: {:.0}% of rows failed in the solver", 100.0 * rate);
        return ExitCode::from(EXIT_SOLVER);
    }
    ExitCode::SUCCESS
}
