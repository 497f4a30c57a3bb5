use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use neutral_decorr::codinggain::EntropyUnit;
use neutral_decorr::composition::{build_plan, make_composition};
use neutral_decorr::distributions::{
    sample_dirichlet, sample_mixture, DirichletParams, MixtureParams,
};
use neutral_decorr::experiments::{run_experiment, ExperimentConfig, ExperimentResult, Scenario};
use neutral_decorr::independence::{
    independence_coefficient, pairwise_report_with_level, DEFAULT_ALPHA_LEVEL,
    DEFAULT_PERMUTATIONS, MIN_PERMUTATIONS,
};
use neutral_decorr::transforms::{
    fpnt_forward_values, pnt_forward_into, pnt_inverse_values, snt_forward_into, snt_inverse_values,
};

mod error;
mod io;

use error::CliError;
use io::{column_names, read_input, write_output, Dataset};

const THREADS_ENV: &str = "NEUTRAL_DECORR_THREADS";
const SCHEMA_VERSION: u32 = 1;
/// Rows whose sum is further than this from one are reported on stderr.
const SUM_WARN: f64 = 1e-6;

#[derive(Parser)]
#[command(
    name = "neutral-decorr",
    version,
    about = "Decorrelate compositional data and test independence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw samples from a Dirichlet distribution or a Dirichlet mixture
    Generate(GenerateArgs),
    /// Apply a transform row by row
    Transform(TransformArgs),
    /// Pairwise distance-correlation permutation tests
    Dctest(DctestArgs),
    /// Run one of the built-in experiments
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Concentrations, e.g. 2,5,6,3,7
    #[arg(long, conflicts_with = "mixture", required_unless_present = "mixture")]
    alpha: Option<String>,
    /// Mixture spec "w1:a,b,..;w2:c,d,.." (adds a label column, 1-based)
    #[arg(long)]
    mixture: Option<String>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Snt,
    Pnt,
    Fpnt,
    SntInv,
    PntInv,
}

#[derive(Args)]
struct TransformArgs {
    /// Input CSV (`-` for stdin)
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DctestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    n_perm: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_ALPHA_LEVEL)]
    alpha_level: f64,
    /// JSON report (stdout if omitted)
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Table1,
    Table2,
    Fig4,
    ComplexityTrend,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitArg {
    Bits,
    Nats,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    scenario: ScenarioArg,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sample sizes, comma separated
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    n_perm: Option<usize>,
    /// Degrees of freedom for fig4 / complexity-trend, comma separated
    #[arg(long, value_delimiter = ',')]
    dofs: Option<Vec<usize>>,
    /// Monte-Carlo draws per coding-gain estimate
    #[arg(long)]
    n_mc: Option<usize>,
    #[arg(long, value_enum)]
    entropy_unit: Option<UnitArg>,
    /// Uniform range of the concentrations for fig4, "low,high"
    #[arg(long)]
    alpha_range: Option<String>,
    #[arg(long)]
    json_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match configure_threads().and_then(|_| dispatch(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_ENV}={raw} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Generate(a) => cmd_generate(a),
        Command::Transform(a) => cmd_transform(a),
        Command::Dctest(a) => cmd_dctest(a),
        Command::Experiment(a) => cmd_experiment(a),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("'{t}' is not a number in '{s}'")))
        })
        .collect()
}

fn parse_alpha(s: &str) -> Result<DirichletParams, CliError> {
    DirichletParams::new(parse_list(s)?).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_mixture(s: &str) -> Result<MixtureParams, CliError> {
    let mut weights = Vec::new();
    let mut components = Vec::new();
    for part in s.split(';').filter(|p| !p.trim().is_empty()) {
        let (w, a) = part.split_once(':').ok_or_else(|| {
            CliError::Usage(format!("mixture component '{part}' needs weight:alpha"))
        })?;
        weights.push(
            w.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad mixture weight '{w}'")))?,
        );
        components.push(parse_alpha(a)?);
    }
    MixtureParams::new(weights, components).map_err(|e| CliError::Usage(e.to_string()))
}

fn cmd_generate(a: GenerateArgs) -> Result<(), CliError> {
    if a.n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    let ds = if let Some(spec) = &a.mixture {
        let params = parse_mixture(spec)?;
        let draws = sample_mixture(&params, a.n, a.seed)?;
        let labels = draws.iter().map(|(_, l)| (l + 1).to_string()).collect();
        let rows = draws.into_iter().map(|(c, _)| c.into_values()).collect();
        Dataset::new(column_names("x", params.dim()), rows, Some(labels))
    } else {
        let params = parse_alpha(a.alpha.as_deref().expect("clap requires alpha or mixture"))?;
        let rows = sample_dirichlet(&params, a.n, a.seed)?
            .into_iter()
            .map(|c| c.into_values())
            .collect();
        Dataset::new(column_names("x", params.dim()), rows, None)
    };
    write_output(a.out.as_deref(), &ds.to_csv()?)
}

fn cmd_transform(a: TransformArgs) -> Result<(), CliError> {
    let source = a.input.display().to_string();
    let ds = Dataset::from_csv(&read_input(&a.input)?, &source)?;
    let width = ds.width();
    let row_err = |i: usize, e: neutral_decorr::error::Error| {
        CliError::Data(format!("{source}: row {}: {e}", i + 2))
    };

    let rows: Vec<Vec<f64>> = match a.method {
        Method::Snt | Method::Pnt | Method::Fpnt => {
            let plan = build_plan(width).map_err(|e| CliError::Data(format!("{source}: {e}")))?;
            let mut scratch = vec![0.0; width];
            let mut out_rows = Vec::with_capacity(ds.rows.len());
            for (i, raw) in ds.rows.iter().enumerate() {
                let x = make_composition(raw).map_err(|e| row_err(i, e))?;
                let sum: f64 = raw.iter().sum();
                if (sum - 1.0).abs() > SUM_WARN {
                    eprintln!("warning: {source}: row {} sums to {sum}, normalized", i + 2);
                }
                if x.was_clamped() {
                    eprintln!("warning: {source}: row {} has zero parts, clamped", i + 2);
                }
                let mut out = vec![0.0; width - 1];
                match a.method {
                    Method::Snt => snt_forward_into(x.values(), &mut out, &mut scratch),
                    Method::Pnt => pnt_forward_into(&plan, x.values(), &mut out, &mut scratch),
                    _ => fpnt_forward_values(x.values()).map(|v| out = v),
                }
                .map_err(|e| row_err(i, e))?;
                out_rows.push(out);
            }
            out_rows
        }
        Method::SntInv => ds
            .rows
            .iter()
            .enumerate()
            .map(|(i, u)| snt_inverse_values(u).map_err(|e| row_err(i, e)))
            .collect::<Result<_, _>>()?,
        Method::PntInv => {
            let plan =
                build_plan(width + 1).map_err(|e| CliError::Data(format!("{source}: {e}")))?;
            ds.rows
                .iter()
                .enumerate()
                .map(|(i, u)| pnt_inverse_values(u, &plan).map_err(|e| row_err(i, e)))
                .collect::<Result<_, _>>()?
        }
    };
    let header = match a.method {
        Method::SntInv | Method::PntInv => column_names("x", width + 1),
        _ => column_names("u", width - 1),
    };
    let out = Dataset::new(header, rows, ds.labels);
    write_output(a.out.as_deref(), &out.to_csv()?)
}

#[derive(Debug, Serialize, Deserialize)]
struct DctestReport {
    schema_version: u32,
    columns: Vec<String>,
    n_samples: usize,
    n_perm: usize,
    seed: u64,
    alpha_level: f64,
    dcor: Vec<Vec<f64>>,
    pvalue: Vec<Vec<f64>>,
    independence_coefficient: f64,
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| CliError::Data(format!("json: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn cmd_dctest(a: DctestArgs) -> Result<(), CliError> {
    if !(a.alpha_level > 0.0 && a.alpha_level < 1.0) {
        return Err(CliError::Usage("--alpha-level must lie in (0, 1)".into()));
    }
    if a.n_perm < MIN_PERMUTATIONS {
        return Err(CliError::Usage(format!(
            "--n-perm must be at least {MIN_PERMUTATIONS}"
        )));
    }
    let source = a.input.display().to_string();
    let ds = Dataset::from_csv(&read_input(&a.input)?, &source)?;
    let report = pairwise_report_with_level(&ds.rows, a.n_perm, a.seed, a.alpha_level)
        .map_err(|e| CliError::Data(format!("{source}: {e}")))?;
    let out = DctestReport {
        schema_version: SCHEMA_VERSION,
        columns: ds.header.clone(),
        n_samples: ds.rows.len(),
        n_perm: a.n_perm,
        seed: a.seed,
        alpha_level: a.alpha_level,
        independence_coefficient: independence_coefficient(&report),
        dcor: report.dcor,
        pvalue: report.pvalue,
    };
    write_output(a.json_out.as_deref(), &to_json(&out)?)
}

#[derive(Debug, Serialize)]
struct ExperimentReport<'a> {
    schema_version: u32,
    config: &'a ExperimentConfig,
    passed: bool,
    #[serde(flatten)]
    result: &'a ExperimentResult,
}

fn experiment_config(a: &ExperimentArgs) -> Result<ExperimentConfig, CliError> {
    let scenario = match a.scenario {
        ScenarioArg::Table1 => Scenario::Table1,
        ScenarioArg::Table2 => Scenario::Table2,
        ScenarioArg::Fig4 => Scenario::Fig4,
        ScenarioArg::ComplexityTrend => Scenario::ComplexityTrend,
    };
    let mut cfg = ExperimentConfig::for_scenario(scenario);
    if let Some(r) = a.rounds {
        cfg.n_rounds = r;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(n) = &a.n {
        cfg.n_samples = n.clone();
    }
    if let Some(p) = a.n_perm {
        cfg.n_perm = p;
    }
    if let Some(d) = &a.dofs {
        cfg.dofs = d.clone();
    }
    if let Some(m) = a.n_mc {
        cfg.n_mc = m;
    }
    if let Some(u) = a.entropy_unit {
        cfg.entropy_unit = match u {
            UnitArg::Bits => EntropyUnit::Bits,
            UnitArg::Nats => EntropyUnit::Nats,
        };
    }
    if let Some(r) = &a.alpha_range {
        match parse_list(r)?.as_slice() {
            &[lo, hi] => cfg.alpha_range = (lo, hi),
            _ => {
                return Err(CliError::Usage(format!(
                    "--alpha-range '{r}' needs low,high"
                )))
            }
        }
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn cmd_experiment(a: ExperimentArgs) -> Result<(), CliError> {
    let cfg = experiment_config(&a)?;
    let result = run_experiment(&cfg)?;
    let passed = result.all_passed();
    let report = ExperimentReport {
        schema_version: SCHEMA_VERSION,
        config: &cfg,
        passed,
        result: &result,
    };
    write_output(a.json_out.as_deref(), &to_json(&report)?)?;
    for f in &result.flags {
        eprintln!(
            "[{}] {}: {}",
            if f.passed { "PASS" } else { "FAIL" },
            f.name,
            f.detail
        );
    }
    if passed {
        Ok(())
    } else {
        let failed: Vec<&str> = result
            .flags
            .iter()
            .filter(|f| !f.passed)
            .map(|f| f.name.as_str())
            .collect();
        Err(CliError::FlagFailure(failed.join(", ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture_spec_parses() {
        let m = parse_mixture("0.3:2,5,6,3,7;0.7:10,2,8,2,18").unwrap();
        assert_eq!(m.weights(), &[0.3, 0.7]);
        assert_eq!(m.components()[1].alpha(), &[10.0, 2.0, 8.0, 2.0, 18.0]);
    }

    #[test]
    fn bad_specs_are_usage_errors() {
        for s in ["0.3:2,5;0.6:1,1", "0.5-2,5;0.5:1,1", "1:2,x", "1:2,-1"] {
            assert!(matches!(parse_mixture(s), Err(CliError::Usage(_))), "{s}");
        }
        assert!(matches!(parse_alpha("3"), Err(CliError::Usage(_))));
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
