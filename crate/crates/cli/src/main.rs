//! `expgreedy`: run noisy submodular maximization from the command line.
//!
//! Exit codes: 0 on success, 1 on invariant or file errors, 2 on flag errors.

use std::fs;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use expgreedy::baselines::random_select;
use expgreedy::expgreedy::SelectionMode;
use expgreedy::function::{
    check_monotone_submodular, fixtures, gap_profile, greedy, AnyFunction, CheckMode, ItemId,
};
use expgreedy::harness::{
    self, expgreedy_config, query_distribution, records, run_budget_quality, run_cell,
    run_convergence, summarize, topl_trace, write_csv_file, Algorithm, BudgetSpec,
    ConvergenceSpec, RunParams, Setting, TraceStore,
};
use expgreedy::oracle::{NoiseModel, PreferenceOracle, ValueOracle};
use expgreedy::expgreedy::run_expgreedy;
use expgreedy::rng::algorithm_rng;
use expgreedy::SubmodularFunction;
use expgreedy_service::ServiceConfig;

#[derive(Parser)]
#[command(name = "expgreedy", version, about = "Noisy submodular maximization")]
struct Cli {
    /// Base seed of every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for output files.
    #[arg(long, global = true, env = "EXPGREEDY_OUT")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check monotonicity and submodularity of a function.
    Validate {
        #[arg(long)]
        function: String,
        /// Random triples to test instead of the exhaustive check.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Noise-free greedy solution and its value.
    Greedy {
        #[arg(long)]
        function: String,
        #[arg(long)]
        k: usize,
    },
    /// One seeded run with trace output.
    Run(RunArgs),
    /// Monte-Carlo experiments writing CSV files.
    #[command(subcommand)]
    Experiment(Experiment),
    /// Gap profile of the marginal gains.
    Gaps {
        #[arg(long)]
        function: String,
        /// Comma-separated ids already selected.
        #[arg(long, value_delimiter = ',')]
        context: Vec<usize>,
        #[arg(long, default_value_t = 0.01)]
        epsilon_prime: f64,
        #[arg(long, default_value_t = 4)]
        k_prime: usize,
        /// Sub-Gaussian parameter of one observation.
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 0.05)]
        delta_prime: f64,
    },
    /// Start the session service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Default catalog: a built-in selector or a function file.
        #[arg(long)]
        catalog: Option<String>,
        /// Persist sessions here and restore them on start.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Directory served at / instead of the built-in page.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Built-in selector (appendixB:<alpha>, fig2, venice-toy, desk:<n>) or function file.
    #[arg(long)]
    function: String,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Hard limit per run in query units.
    #[arg(long, default_value_t = expgreedy::expgreedy::DEFAULT_OBSERVATION_CAP)]
    cap: u64,
    /// Use R = 1/2 for preference observations.
    #[arg(long)]
    conservative_r: bool,
}

impl Common {
    fn params(&self) -> RunParams {
        RunParams {
            cap: self.cap,
            conservative_r: self.conservative_r,
            ..RunParams::new(self.k, self.epsilon, self.delta)
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "opt-compete")]
    mode: SelectionMode,
    /// ExpGreedy, ExpGreedy_G, ExpGreedy_O, Uniform, Random or Greedy; overrides --mode.
    #[arg(long)]
    algorithm: Option<Algorithm>,
    /// none, uniform:<sigma2> or gaussian:<sigma>.
    #[arg(long, default_value = "uniform:1")]
    noise: NoiseModel,
    /// Use BTL comparisons with this sharpness instead of value queries.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 3)]
    tau: u32,
    /// Average budget per item and iteration.
    #[arg(long)]
    budget: Option<f64>,
}

#[derive(Args, Clone)]
struct ExperimentCommon {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 10)]
    replicates: u64,
    /// Worker threads for replicates; results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Experiment {
    /// Queries and utility against value-noise variance.
    Convergence {
        #[command(flatten)]
        exp: ExperimentCommon,
        #[arg(long, value_delimiter = ',', default_value = "1,5")]
        sigma2: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "ExpGreedy,ExpGreedy_G,ExpGreedy_O,Uniform")]
        algorithms: Vec<Algorithm>,
    },
    /// Utility against the average budget per item and iteration.
    Budget {
        #[command(flatten)]
        exp: ExperimentCommon,
        #[arg(long, value_delimiter = ',', default_value = "1,3,5,10,25")]
        budgets: Vec<f64>,
        /// Value-noise settings.
        #[arg(long, value_delimiter = ',')]
        sigma2: Vec<f64>,
        /// Preference settings, combined with every --tau.
        #[arg(long, value_delimiter = ',')]
        beta: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "3")]
        tau: Vec<u32>,
        #[arg(long, default_value = "ExpGreedy")]
        algorithm: Algorithm,
    },
    /// Per-item query counts at one iteration.
    Distribution {
        #[command(flatten)]
        exp: ExperimentCommon,
        #[arg(long, default_value_t = 5.0)]
        sigma2: f64,
        #[arg(long, value_delimiter = ',', default_value = "ExpGreedy,Uniform")]
        algorithms: Vec<Algorithm>,
        #[arg(long, default_value_t = 1)]
        iteration: usize,
    },
    /// Chosen item and set size per iteration.
    Topl {
        #[command(flatten)]
        exp: ExperimentCommon,
        #[arg(long, default_value_t = 5.0)]
        sigma2: f64,
        #[arg(long, value_delimiter = ',', default_value = "ExpGreedy")]
        algorithms: Vec<Algorithm>,
    },
}

fn load_function(selector: &str) -> Result<AnyFunction> {
    fixtures::resolve(selector).with_context(|| format!("cannot load function {selector}"))
}

fn fmt_items(items: &[ItemId]) -> String {
    let parts: Vec<String> = items.iter().map(|i| i.0.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

fn out_dir(cli_out: &Option<PathBuf>) -> Result<PathBuf> {
    let dir = cli_out.clone().unwrap_or_else(|| PathBuf::from("results"));
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

fn set_jobs(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        if n == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot size the worker pool")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Validate { function, trials } => {
            let f = load_function(&function)?;
            let mode = match trials {
                Some(trials) => CheckMode::Randomized {
                    trials,
                    seed: cli.seed,
                },
                None => CheckMode::auto(f.ground_size()),
            };
            let report = check_monotone_submodular(&f, mode);
            writeln!(
                out,
                "{} triples checked ({}), {} violations",
                report.triples_checked,
                if report.exhaustive { "exhaustive" } else { "randomized" },
                report.violation_count
            )?;
            for v in &report.violations {
                writeln!(
                    out,
                    "{:?}: item {} gains {} on {} but {} on {}",
                    v.kind,
                    v.item.0,
                    v.gain_smaller,
                    fmt_items(&v.smaller),
                    v.gain_larger,
                    fmt_items(&v.larger)
                )?;
            }
            return Ok(if report.is_clean() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            });
        }
        Command::Greedy { function, k } => {
            let f = load_function(&function)?;
            let g = greedy(&f, k)?;
            writeln!(out, "selected: {}", fmt_items(&g.selected))?;
            writeln!(out, "value: {}", g.value)?;
        }
        Command::Run(args) => run(&cli.out, cli.seed, args, &mut out)?,
        Command::Experiment(exp) => experiment(&cli.out, cli.seed, exp, &mut out)?,
        Command::Gaps {
            function,
            context,
            epsilon_prime,
            k_prime,
            r,
            delta_prime,
        } => {
            let f = load_function(&function)?;
            let ctx: Vec<ItemId> = context.into_iter().map(ItemId).collect();
            let p = gap_profile(&f, &ctx, epsilon_prime, k_prime, r, delta_prime)?;
            writeln!(out, "rank\titem\tmarginal\tgap\thardness\tbound_term")?;
            for (i, (&item, &m)) in p.order.iter().zip(&p.sorted_marginals).enumerate() {
                let cell = |v: Option<&f64>| v.map_or(String::from("-"), |x| format!("{x:.6}"));
                writeln!(
                    out,
                    "{}\t{}\t{m:.6}\t{}\t{}\t{}",
                    i + 1,
                    item.0,
                    cell(p.gaps.get(i)),
                    cell(p.hardness.get(i)),
                    cell(p.bound_terms.get(i))
                )?;
            }
            match p.easiest_l() {
                Some(l) => writeln!(out, "easiest l: {l}")?,
                None => writeln!(out, "easiest l: -")?,
            }
            writeln!(out, "predicted bound: {:.6}", p.predicted_bound)?;
        }
        Command::Serve {
            port,
            host,
            catalog,
            data_dir,
            static_dir,
        } => {
            let catalog = catalog.as_deref().map(load_function).transpose()?;
            let config = ServiceConfig {
                data_dir,
                catalog,
                static_dir,
            };
            let addr = SocketAddr::new(host, port);
            eprintln!("listening on http://{addr}");
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(expgreedy_service::serve(addr, config))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run(out_flag: &Option<PathBuf>, seed: u64, args: RunArgs, out: &mut impl Write) -> Result<()> {
    let f = load_function(&args.common.function)?;
    let n = f.ground_size();
    let params = args.common.params();
    let algorithm = args.algorithm.unwrap_or(match args.mode {
        SelectionMode::OptCompete => Algorithm::ExpGreedy,
        SelectionMode::TopOne => Algorithm::ExpGreedyO,
        SelectionMode::GreedyCompete => Algorithm::ExpGreedyG,
    });
    let setting = match args.beta {
        Some(beta) => Setting::Preference {
            beta,
            tau: args.tau,
        },
        None => Setting::Value { noise: args.noise },
    };
    let (selected, queries, trace) = match algorithm {
        Algorithm::Random => (random_select(n, params.k, &mut algorithm_rng(seed))?, 0, None),
        Algorithm::Greedy => {
            let g = greedy(&f, params.k)?;
            (g.selected, (n * params.k) as u64, None)
        }
        _ => {
            let cfg = expgreedy_config(algorithm, &setting, &params, n, args.budget, seed)?;
            let mut result = match setting {
                Setting::Value { noise } => {
                    run_expgreedy(cfg, n, &mut ValueOracle::new(&f, noise, seed)?)?
                }
                Setting::Preference { beta, .. } => {
                    run_expgreedy(cfg, n, &mut PreferenceOracle::new(&f, beta, seed)?)?
                }
            };
            result.annotate(&f);
            (result.selected.clone(), result.queries, Some(result))
        }
    };
    writeln!(out, "algorithm: {algorithm}")?;
    writeln!(out, "selected: {}", fmt_items(&selected))?;
    writeln!(out, "value: {}", f.value(&selected))?;
    writeln!(out, "queries: {queries}")?;
    if let Some(run) = &trace {
        for rec in &run.trace {
            writeln!(
                out,
                "iteration {}: chose {} from {} (l={}, {:?}, {} queries)",
                rec.iteration,
                rec.chosen.0,
                fmt_items(&rec.returned),
                rec.l_chosen,
                rec.terminated_by,
                rec.queries_used
            )?;
        }
        if out_flag.is_some() {
            let dir = out_dir(out_flag)?;
            let path = dir.join("run-trace.jsonl");
            let mut w = fs::File::create(&path)?;
            for rec in &run.trace {
                serde_json::to_writer(&mut w, rec)?;
                w.write_all(b"\n")?;
            }
            writeln!(out, "trace: {}", path.display())?;
        }
    }
    Ok(())
}

fn write_runs(dir: &Path, name: &str, outcomes: &[harness::RunOutcome], out: &mut impl Write) -> Result<()> {
    let rows = records(outcomes);
    let runs = dir.join(format!("{name}.csv"));
    let summary = dir.join(format!("{name}-summary.csv"));
    write_csv_file(&rows, &runs)?;
    write_csv_file(&summarize(&rows), &summary)?;
    writeln!(out, "wrote {} and {}", runs.display(), summary.display())?;
    Ok(())
}

fn experiment(out_flag: &Option<PathBuf>, seed: u64, exp: Experiment, out: &mut impl Write) -> Result<()> {
    match exp {
        Experiment::Convergence {
            exp,
            sigma2,
            algorithms,
        } => {
            set_jobs(exp.jobs)?;
            let f = load_function(&exp.common.function)?;
            let spec = ConvergenceSpec {
                algorithms,
                sigma2,
                params: exp.common.params(),
                replicates: exp.replicates,
                base_seed: seed,
            };
            let outcomes = run_convergence(&f, &spec)?;
            write_runs(&out_dir(out_flag)?, "convergence", &outcomes, out)?;
        }
        Experiment::Budget {
            exp,
            budgets,
            sigma2,
            beta,
            tau,
            algorithm,
        } => {
            set_jobs(exp.jobs)?;
            let f = load_function(&exp.common.function)?;
            let mut settings: Vec<Setting> = sigma2.into_iter().map(Setting::uniform).collect();
            for &b in &beta {
                for &t in &tau {
                    settings.push(Setting::Preference { beta: b, tau: t });
                }
            }
            if settings.is_empty() {
                bail!("give at least one --sigma2 or --beta");
            }
            let spec = BudgetSpec {
                algorithm,
                settings,
                budgets,
                params: exp.common.params(),
                replicates: exp.replicates,
                base_seed: seed,
            };
            let outcomes = run_budget_quality(&f, &spec)?;
            write_runs(&out_dir(out_flag)?, "budget", &outcomes, out)?;
        }
        Experiment::Distribution {
            exp,
            sigma2,
            algorithms,
            iteration,
        } => {
            set_jobs(exp.jobs)?;
            let dir = out_dir(out_flag)?;
            let store = traced_runs(&exp, sigma2, &algorithms, seed, &dir, out)?;
            let (rows, skew) = query_distribution(&store.load()?, iteration)?;
            write_csv_file(&rows, &dir.join("distribution.csv"))?;
            write_csv_file(&skew, &dir.join("skew.csv"))?;
            for s in &skew {
                writeln!(out, "{} {}: max/mean {:.3}", s.algorithm, s.param, s.max_over_mean)?;
            }
        }
        Experiment::Topl {
            exp,
            sigma2,
            algorithms,
        } => {
            set_jobs(exp.jobs)?;
            let dir = out_dir(out_flag)?;
            let store = traced_runs(&exp, sigma2, &algorithms, seed, &dir, out)?;
            let rows = topl_trace(&store.load()?);
            write_csv_file(&rows, &dir.join("topl.csv"))?;
            writeln!(out, "wrote {}", dir.join("topl.csv").display())?;
        }
    }
    Ok(())
}

/// Runs every algorithm at one noise level and stores the iteration traces
/// under `dir/traces`.
fn traced_runs(
    exp: &ExperimentCommon,
    sigma2: f64,
    algorithms: &[Algorithm],
    seed: u64,
    dir: &Path,
    out: &mut impl Write,
) -> Result<TraceStore> {
    let f = load_function(&exp.common.function)?;
    let setting = Setting::uniform(sigma2);
    let params = exp.common.params();
    let mut outcomes = Vec::new();
    for &alg in algorithms {
        if matches!(alg, Algorithm::Random | Algorithm::Greedy) {
            bail!("{alg} issues no queries to trace");
        }
        outcomes.extend(run_cell(&f, alg, &setting, &params, None, exp.replicates, seed)?);
    }
    let store = TraceStore::new(dir.join("traces"));
    let traces = store.root().to_path_buf();
    if traces.exists() {
        fs::remove_dir_all(&traces)?;
    }
    store.save(&outcomes)?;
    write_runs(dir, "runs", &outcomes, out)?;
    Ok(store)
}
