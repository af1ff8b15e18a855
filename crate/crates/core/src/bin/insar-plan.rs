use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use insar_plan::ao::Scheme;
use insar_plan::experiments::{run_experiment, summarize, write_summary, ExperimentSpec, Figure, PsiChoice, SchemeSelection};
use insar_plan::scenario::Scenario;
use insar_plan::PlanError;

/// Runs one figure campaign and writes its CSV files.
#[derive(Debug, Parser)]
#[command(name = "insar-plan", version, about)]
struct Args {
    /// convergence, step_size, baseline_vs_pcom, coverage_vs_snr_min or velocity_vs_pcom
    #[arg(long)]
    figure: Figure,
    /// Scenario file (`key = value [unit]` lines); defaults apply otherwise.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Monte-Carlo realizations per grid point.
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Step size in [0, 1], or `auto` to search it.
    #[arg(long, default_value = "auto")]
    psi: PsiChoice,
    /// Run a single benchmark (1, 2 or 3), or `none` for the proposed scheme alone.
    #[arg(long, value_parser = parse_benchmark)]
    benchmark: Option<Scheme>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Keep the full swarm size, iteration count and realizations of the scenario.
    #[arg(long)]
    paper_scale: bool,
}

fn parse_benchmark(s: &str) -> Result<Scheme, String> {
    let k = match s {
        "none" => None,
        _ => Some(s.parse::<u8>().map_err(|_| format!("`{s}` is not 1, 2, 3 or none"))?),
    };
    Scheme::from_benchmark(k).ok_or_else(|| format!("no benchmark {s}"))
}

fn cause(e: &PlanError) -> (&'static str, u8) {
    match e {
        PlanError::Parse { .. } | PlanError::Invalid { .. } => ("invalid_input", 3),
        PlanError::Infeasible(_) => ("infeasible", 4),
        PlanError::Io { .. } | PlanError::Csv(_) => ("io", 5),
        PlanError::Geometry(_) | PlanError::Numerical(_) => ("numerical", 6),
    }
}

fn run(args: Args) -> insar_plan::Result<()> {
    let mut sc = match &args.scenario {
        Some(p) => Scenario::load(p)?.scenario,
        None => Scenario::default(),
    };
    if !args.paper_scale {
        sc = sc.desk_scale();
    }
    for key in sc.apply_env()? {
        log::info!("override from environment: {key}");
    }
    let spec = ExperimentSpec {
        figure: args.figure,
        realizations: args.realizations.unwrap_or(sc.algo.realizations),
        scenario: sc,
        seed: args.seed,
        psi: args.psi,
        schemes: args.benchmark.map_or(SchemeSelection::All, SchemeSelection::Only),
        out: args.out,
    };
    for p in run_experiment(&spec)? {
        println!("{}", p.display());
    }
    if spec.figure == Figure::Convergence {
        let rows = summarize(&spec.out)?;
        println!("{}", write_summary(&spec.out, &rows)?.display());
        for r in &rows {
            let gains: Vec<String> = r.gains.iter().map(|(o, g)| format!("{o} {g:+.2}%")).collect();
            eprintln!("{:<16} {:>10.1} m^2  {}", r.series, r.coverage, gains.join("  "));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, code) = cause(&e);
            eprintln!("error: cause={kind}: {e}");
            ExitCode::from(code)
        }
    }
}
