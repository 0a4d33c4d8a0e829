use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use weakminty::algorithms::{AlgorithmId, PdhgConfig, StepRule};
use weakminty::analysis::{
    check_seg_plus_affine, check_thm_bcsegplus_as, check_thm_bcsegplus_rate, check_thm_const, check_thm_pdhg,
    certify_negative_weak_mvi_linear, certify_weak_mvi_linear, weak_mvi_range, Setting, TheoremReport,
};
use weakminty::harness::{run_experiment, write_outputs, ExperimentConfig, OutputFormat};
use weakminty::{DenseMatrix, Error};

#[derive(Parser, Debug)]
#[command(name = "weakminty", version, about = "Stochastic extragradient solvers for weak Minty inclusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the committed config of a figure.
    Reproduce {
        figure: Figure,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Evaluate theorem conditions for a JSON file of problem constants.
    CheckConditions {
        /// Path to the constants JSON, or the JSON itself.
        constants: String,
        #[arg(long, value_enum, default_value_t = Theorem::All)]
        theorem: Theorem,
        /// Offset `r` of `α_k = 1/(k + r)` for the almost-sure check.
        #[arg(long)]
        r: Option<u64>,
        /// Preconditioner JSON for the primal-dual check.
        #[arg(long)]
        pdhg: Option<String>,
    },
    /// Decide whether a linear operator satisfies the weak MVI with a given ρ.
    Certify {
        /// Row-major matrix such as "[[0,1],[-1,0]]".
        #[arg(long)]
        matrix: String,
        #[arg(long, allow_negative_numbers = true)]
        rho: f64,
        /// Check the negative weak MVI ⟨Mz, z⟩ ≤ ρ‖Mz‖² instead.
        #[arg(long)]
        negative: bool,
    },
    /// List the available algorithms.
    ListAlgorithms,
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the number of seeds.
    #[arg(long)]
    seeds: Option<u32>,
    /// Override the number of iterations.
    #[arg(long)]
    iters: Option<u64>,
    /// Exit with status 2 when a series diverges.
    #[arg(long)]
    strict: bool,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Svg,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Figure {
    Fig1,
    #[value(name = "fig2-left")]
    Fig2Left,
    #[value(name = "fig2-right")]
    Fig2Right,
    Fig3,
    Fig4,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum Theorem {
    All,
    #[value(name = "bc-seg+")]
    BcSegPlus,
    #[value(name = "bc-seg+-as")]
    BcSegPlusAs,
    #[value(name = "bc-pseg+")]
    BcPsegPlus,
    #[value(name = "np-pdeg")]
    NpPdeg,
    #[value(name = "seg+")]
    SegPlus,
}

const FIG1: &str = include_str!("../../../configs/fig1.json");
const FIG2_LEFT: &str = include_str!("../../../configs/fig2-left.json");
const FIG2_RIGHT: &str = include_str!("../../../configs/fig2-right.json");
const FIG3: &str = include_str!("../../../configs/fig3.json");
const FIG4: [&str; 3] = [
    include_str!("../../../configs/fig4-monotone.json"),
    include_str!("../../../configs/fig4-quadratic.json"),
    include_str!("../../../configs/fig4-forsaken.json"),
];

impl Figure {
    fn configs(self) -> Vec<&'static str> {
        match self {
            Figure::Fig1 => vec![FIG1],
            Figure::Fig2Left => vec![FIG2_LEFT],
            Figure::Fig2Right => vec![FIG2_RIGHT],
            Figure::Fig3 => vec![FIG3],
            Figure::Fig4 => FIG4.to_vec(),
        }
    }
}

/// Failures that map to exit status 1 versus 2.
enum Failure {
    Usage(anyhow::Error),
    Diverged(Vec<String>),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Diverged(labels)) => {
            eprintln!("diverged: {}", labels.join(", "));
            ExitCode::from(2)
        }
    }
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("WEAKMINTY_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("WEAKMINTY_THREADS must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            run_configs(vec![cfg], &out)
        }
        Command::Reproduce { figure, out } => {
            let cfgs = figure
                .configs()
                .into_iter()
                .map(ExperimentConfig::from_json)
                .collect::<Result<Vec<_>, _>>()?;
            run_configs(cfgs, &out)
        }
        Command::CheckConditions {
            constants,
            theorem,
            r,
            pdhg,
        } => {
            let setting: Setting = serde_json::from_str(&json_arg(&constants)?).context("constants JSON")?;
            let pdhg: Option<PdhgConfig> = pdhg
                .map(|p| -> anyhow::Result<_> { Ok(serde_json::from_str(&json_arg(&p)?).context("pdhg JSON")?) })
                .transpose()?;
            let reports = check_conditions(&setting, theorem, r, pdhg.as_ref())?;
            println!("{}", serde_json::to_string_pretty(&reports).context("serializing reports")?);
            Ok(())
        }
        Command::Certify { matrix, rho, negative } => {
            let rows: Vec<Vec<f64>> = serde_json::from_str(&matrix).context("--matrix must be a JSON array of rows")?;
            let m = DenseMatrix::from_rows(rows)?;
            let ok = if negative {
                certify_negative_weak_mvi_linear(&m, rho)
            } else {
                certify_weak_mvi_linear(&m, rho)
            };
            println!("{}", if ok { "certified" } else { "not certified" });
            if !negative {
                match weak_mvi_range(&m) {
                    Some((lo, hi)) => println!("admissible rho range: [{lo}, {hi}]"),
                    None => println!("admissible rho range: empty"),
                }
            }
            Ok(())
        }
        Command::ListAlgorithms => {
            for id in AlgorithmId::ALL {
                println!("{:<10} {}", id.as_str(), id.description());
            }
            Ok(())
        }
    }
}

/// A JSON argument is either inline JSON or a path to a file.
fn json_arg(arg: &str) -> anyhow::Result<String> {
    let t = arg.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        return Ok(arg.to_string());
    }
    std::fs::read_to_string(arg).with_context(|| format!("{arg}: cannot read file"))
}

fn check_conditions(
    setting: &Setting,
    theorem: Theorem,
    r: Option<u64>,
    pdhg: Option<&PdhgConfig>,
) -> anyhow::Result<Vec<TheoremReport>> {
    let want = |t: Theorem| theorem == Theorem::All || theorem == t;
    let mut reports = Vec::new();
    if want(Theorem::BcSegPlus) {
        reports.push(check_thm_bcsegplus_rate(setting)?);
    }
    if want(Theorem::BcSegPlusAs) {
        let r = r.or(match setting.schedule.alpha {
            StepRule::RobbinsMonro { r } => Some(r.round() as u64),
            _ => None,
        });
        match r {
            Some(r) => reports.push(check_thm_bcsegplus_as(setting, r)?),
            None if theorem == Theorem::BcSegPlusAs => bail!("the almost-sure check needs --r"),
            None => {}
        }
    }
    if want(Theorem::BcPsegPlus) {
        reports.push(check_thm_const(setting)?);
    }
    if want(Theorem::NpPdeg) {
        match pdhg {
            Some(cfg) => reports.push(check_thm_pdhg(cfg, setting)?),
            None if theorem == Theorem::NpPdeg => bail!("the primal-dual check needs --pdhg"),
            None => {}
        }
    }
    if want(Theorem::SegPlus) {
        reports.push(check_seg_plus_affine(setting)?);
    }
    Ok(reports)
}

fn run_configs(cfgs: Vec<ExperimentConfig>, out: &OutputArgs) -> Result<(), Failure> {
    let format = match out.format {
        Format::Csv => OutputFormat::Csv,
        Format::Svg => OutputFormat::Svg,
        Format::Both => OutputFormat::Both,
    };
    let mut diverged = Vec::new();
    for mut cfg in cfgs {
        if let Some(n) = out.seeds {
            cfg.n_seeds = n;
        }
        if let Some(n) = out.iters {
            cfg.n_iters = n;
        }
        let result = run_experiment(&cfg)?;
        let files = write_outputs(&result, &out.out, format)?;
        report(&result, &files, &out.out);
        diverged.extend(
            result
                .series
                .iter()
                .filter(|s| s.status == weakminty::algorithms::Status::Diverged)
                .map(|s| format!("{}/{}", result.name, s.label)),
        );
    }
    if out.strict && !diverged.is_empty() {
        return Err(Failure::Diverged(diverged));
    }
    Ok(())
}

fn report(result: &weakminty::harness::AggregateResult, files: &[PathBuf], root: &Path) {
    let metric = result.metrics[0];
    println!("{} ({} seeds, {} iterations)", result.name, result.n_seeds, result.n_iters);
    for s in &result.series {
        let terminal = s.terminal(metric).map_or("n/a".to_string(), |v| format!("{v:.3e}"));
        println!(
            "  {:<24} {:<9} final mean {} = {}",
            s.label,
            format!("{:?}", s.status).to_lowercase(),
            metric.as_str(),
            terminal
        );
    }
    println!("  wrote {} files under {}", files.len(), root.join(&result.name).display());
}
