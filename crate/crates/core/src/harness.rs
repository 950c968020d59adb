//! Seeded Monte-Carlo experiments.
//!
//! Every replicate owns its oracle and RNG, seeded from
//! [`replicate_seed`](crate::rng::replicate_seed), so results are identical
//! whatever the degree of parallelism. Replicates run on the ambient rayon
//! pool and are reduced in replicate order.
//!
//! Run tables have the columns
//! `algorithm,param,budget,replicate,utility,queries,capped`; summaries
//! aggregate them per `(algorithm, param, budget)` cell.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::random_select;
use crate::error::{Error, Result};
use crate::expgreedy::{
    run_expgreedy, ExpGreedyConfig, ExpGreedyRun, ExplorerKind, IterationRecord, SelectionMode,
    DEFAULT_OBSERVATION_CAP,
};
use crate::function::{greedy, SubmodularFunction};
use crate::oracle::{sub_gaussian_r, NoiseModel, ObservationChannel, PreferenceOracle, ValueOracle};
use crate::rng::{algorithm_rng, replicate_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "ExpGreedy")]
    ExpGreedy,
    #[serde(rename = "ExpGreedy_G")]
    ExpGreedyG,
    #[serde(rename = "ExpGreedy_O")]
    ExpGreedyO,
    Uniform,
    Random,
    Greedy,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::ExpGreedy,
        Algorithm::ExpGreedyG,
        Algorithm::ExpGreedyO,
        Algorithm::Uniform,
        Algorithm::Random,
        Algorithm::Greedy,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::ExpGreedy => "ExpGreedy",
            Algorithm::ExpGreedyG => "ExpGreedy_G",
            Algorithm::ExpGreedyO => "ExpGreedy_O",
            Algorithm::Uniform => "Uniform",
            Algorithm::Random => "Random",
            Algorithm::Greedy => "Greedy",
        }
    }

    /// Outer-loop mode and explorer, for the algorithms that query.
    fn expgreedy(&self) -> Option<(SelectionMode, ExplorerKind)> {
        match self {
            Algorithm::ExpGreedy => Some((SelectionMode::OptCompete, ExplorerKind::TopX)),
            Algorithm::ExpGreedyG => Some((SelectionMode::GreedyCompete, ExplorerKind::TopX)),
            Algorithm::ExpGreedyO => Some((SelectionMode::TopOne, ExplorerKind::TopX)),
            Algorithm::Uniform => Some((SelectionMode::TopOne, ExplorerKind::Uniform)),
            Algorithm::Random | Algorithm::Greedy => None,
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm {s:?}")))
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How queries are simulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "channel", rename_all = "snake_case")]
pub enum Setting {
    Value { noise: NoiseModel },
    /// BTL comparisons; `beta` may be infinite.
    Preference { beta: f64, tau: u32 },
}

impl Setting {
    pub fn uniform(sigma2: f64) -> Self {
        Setting::Value {
            noise: if sigma2 == 0.0 {
                NoiseModel::Noiseless
            } else {
                NoiseModel::UniformHalfRange { sigma2 }
            },
        }
    }

    pub fn label(&self) -> String {
        match self {
            Setting::Value {
                noise: NoiseModel::Noiseless,
            } => "sigma2=0".into(),
            Setting::Value {
                noise: NoiseModel::UniformHalfRange { sigma2 },
            } => format!("sigma2={sigma2}"),
            Setting::Value {
                noise: NoiseModel::Gaussian { sigma },
            } => format!("sigma={sigma}"),
            Setting::Preference { beta, tau } => format!("beta={beta};tau={tau}"),
        }
    }

    fn channel(&self) -> ObservationChannel {
        match *self {
            Setting::Value { .. } => ObservationChannel::Value,
            Setting::Preference { tau, .. } => ObservationChannel::Preference { tau },
        }
    }
}

/// Parameters shared by every run of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub k: usize,
    pub epsilon: f64,
    pub delta: f64,
    /// Hard limit per run in query units.
    pub cap: u64,
    /// Use the range bound 1/2 as R for preference observations.
    pub conservative_r: bool,
}

impl RunParams {
    pub fn new(k: usize, epsilon: f64, delta: f64) -> Self {
        RunParams {
            k,
            epsilon,
            delta,
            cap: DEFAULT_OBSERVATION_CAP,
            conservative_r: false,
        }
    }
}

/// One row of a run table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub param: String,
    /// Average budget per item and iteration; empty when unlimited.
    pub budget: Option<f64>,
    pub replicate: u64,
    pub utility: f64,
    pub queries: u64,
    pub capped: bool,
}

/// A run together with its iteration trace, when the algorithm has one.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub run: Option<ExpGreedyRun>,
}

/// Builds the outer-loop configuration an algorithm uses in `setting`.
pub fn expgreedy_config(
    algorithm: Algorithm,
    setting: &Setting,
    params: &RunParams,
    ground_size: usize,
    budget_per_item: Option<f64>,
    seed: u64,
) -> Result<ExpGreedyConfig> {
    let (mode, explorer) = algorithm.expgreedy().ok_or_else(|| {
        Error::InvalidParameter(format!("{algorithm} does not run the outer loop"))
    })?;
    let channel = setting.channel();
    let (r, beta) = match setting {
        Setting::Value { noise } => (sub_gaussian_r(&channel, Some(noise), false)?, None),
        Setting::Preference { beta, .. } => {
            (sub_gaussian_r(&channel, None, params.conservative_r)?, Some(*beta))
        }
    };
    let mut cfg = ExpGreedyConfig::new(params.k, params.epsilon, params.delta, mode, channel, r, seed);
    cfg.explorer = explorer;
    cfg.beta = beta;
    cfg.cap = Some(params.cap);
    cfg.budget = budget_per_item.map(|b| ExpGreedyConfig::average_budget(ground_size, params.k, b));
    Ok(cfg)
}

/// One seeded run of `algorithm`.
pub fn run_once(
    f: &dyn SubmodularFunction,
    algorithm: Algorithm,
    setting: &Setting,
    params: &RunParams,
    budget_per_item: Option<f64>,
    replicate: u64,
    seed: u64,
) -> Result<RunOutcome> {
    let n = f.ground_size();
    let record = |selected: &[crate::ItemId], queries: u64, capped: bool| RunRecord {
        algorithm,
        param: setting.label(),
        budget: budget_per_item,
        replicate,
        utility: f.value(selected),
        queries,
        capped,
    };
    match algorithm {
        Algorithm::Greedy => {
            let g = greedy(f, params.k)?;
            Ok(RunOutcome {
                record: record(&g.selected, (n * params.k) as u64, false),
                run: None,
            })
        }
        Algorithm::Random => {
            let s = random_select(n, params.k, &mut algorithm_rng(seed))?;
            Ok(RunOutcome {
                record: record(&s, 0, false),
                run: None,
            })
        }
        _ => {
            let cfg = expgreedy_config(algorithm, setting, params, n, budget_per_item, seed)?;
            let mut run = match *setting {
                Setting::Value { noise } => {
                    run_expgreedy(cfg, n, &mut ValueOracle::new(f, noise, seed)?)?
                }
                Setting::Preference { beta, .. } => {
                    run_expgreedy(cfg, n, &mut PreferenceOracle::new(f, beta, seed)?)?
                }
            };
            run.annotate(f);
            Ok(RunOutcome {
                record: record(&run.selected, run.queries, run.capped()),
                run: Some(run),
            })
        }
    }
}

/// `replicates` runs of one cell, seeded `base_seed·10⁶ + r`.
#[allow(clippy::too_many_arguments)]
pub fn run_cell(
    f: &dyn SubmodularFunction,
    algorithm: Algorithm,
    setting: &Setting,
    params: &RunParams,
    budget_per_item: Option<f64>,
    replicates: u64,
    base_seed: u64,
) -> Result<Vec<RunOutcome>> {
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            run_once(
                f,
                algorithm,
                setting,
                params,
                budget_per_item,
                r,
                replicate_seed(base_seed, r),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSpec {
    pub algorithms: Vec<Algorithm>,
    pub sigma2: Vec<f64>,
    pub params: RunParams,
    pub replicates: u64,
    pub base_seed: u64,
}

/// Queries to termination per algorithm and noise level, with one Greedy
/// reference row (`N·k` queries) per noise level.
pub fn run_convergence(f: &dyn SubmodularFunction, spec: &ConvergenceSpec) -> Result<Vec<RunOutcome>> {
    if spec.algorithms.is_empty() || spec.sigma2.is_empty() || spec.replicates == 0 {
        return Err(Error::InvalidParameter("empty experiment grid".into()));
    }
    let mut out = Vec::new();
    for &s2 in &spec.sigma2 {
        let setting = Setting::uniform(s2);
        for &alg in &spec.algorithms {
            if alg.expgreedy().is_none() {
                return Err(Error::InvalidParameter(format!(
                    "{alg} does not belong in a convergence experiment"
                )));
            }
            out.extend(run_cell(f, alg, &setting, &spec.params, None, spec.replicates, spec.base_seed)?);
        }
        out.push(run_once(f, Algorithm::Greedy, &setting, &spec.params, None, 0, spec.base_seed)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetSpec {
    pub algorithm: Algorithm,
    pub settings: Vec<Setting>,
    /// Average budgets per item and iteration.
    pub budgets: Vec<f64>,
    pub params: RunParams,
    pub replicates: u64,
    pub base_seed: u64,
}

/// Utility at budget exhaustion per setting and budget, followed by Random
/// and Greedy reference rows.
pub fn run_budget_quality(f: &dyn SubmodularFunction, spec: &BudgetSpec) -> Result<Vec<RunOutcome>> {
    if spec.settings.is_empty() || spec.budgets.is_empty() || spec.replicates == 0 {
        return Err(Error::InvalidParameter("empty experiment grid".into()));
    }
    if let Some(b) = spec.budgets.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
        return Err(Error::InvalidParameter(format!("invalid budget {b}")));
    }
    let mut out = Vec::new();
    for setting in &spec.settings {
        for &b in &spec.budgets {
            out.extend(run_cell(f, spec.algorithm, setting, &spec.params, Some(b), spec.replicates, spec.base_seed)?);
        }
    }
    let reference = spec.settings[0];
    out.extend(run_cell(f, Algorithm::Random, &reference, &spec.params, None, spec.replicates, spec.base_seed)?);
    out.push(run_once(f, Algorithm::Greedy, &reference, &spec.params, None, 0, spec.base_seed)?);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub algorithm: Algorithm,
    pub param: String,
    pub budget: Option<f64>,
    pub replicates: u64,
    pub utility_mean: f64,
    pub utility_se: f64,
    pub queries_mean: f64,
    pub queries_se: f64,
    pub capped: u64,
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Aggregates run rows per cell, in order of first appearance.
pub fn summarize(records: &[RunRecord]) -> Vec<CellSummary> {
    let mut cells: Vec<(Algorithm, String, Option<f64>, Vec<&RunRecord>)> = Vec::new();
    for r in records {
        match cells
            .iter_mut()
            .find(|c| c.0 == r.algorithm && c.1 == r.param && c.2 == r.budget)
        {
            Some(c) => c.3.push(r),
            None => cells.push((r.algorithm, r.param.clone(), r.budget, vec![r])),
        }
    }
    cells
        .into_iter()
        .map(|(algorithm, param, budget, rows)| {
            let u: Vec<f64> = rows.iter().map(|r| r.utility).collect();
            let q: Vec<f64> = rows.iter().map(|r| r.queries as f64).collect();
            let (utility_mean, utility_se) = mean_se(&u);
            let (queries_mean, queries_se) = mean_se(&q);
            CellSummary {
                algorithm,
                param,
                budget,
                replicates: rows.len() as u64,
                utility_mean,
                utility_se,
                queries_mean,
                queries_se,
                capped: rows.iter().filter(|r| r.capped).count() as u64,
            }
        })
        .collect()
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    write_csv(rows, BufWriter::new(File::create(path)?))
}

pub fn read_run_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Iteration traces on disk: `<root>/<algorithm>/<param>/replicate-<r>.jsonl`,
/// one [`IterationRecord`] per line.
#[derive(Debug, Clone)]
pub struct TraceStore {
    root: PathBuf,
}

/// A stored trace with the cell it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredTrace {
    pub algorithm: String,
    pub param: String,
    pub replicate: u64,
    pub records: Vec<IterationRecord>,
}

impl TraceStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        TraceStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes the trace of every outcome that has one.
    pub fn save(&self, outcomes: &[RunOutcome]) -> Result<()> {
        for o in outcomes {
            let Some(run) = &o.run else { continue };
            let mut param = o.record.param.clone();
            if let Some(b) = o.record.budget {
                param.push_str(&format!(";budget={b}"));
            }
            let dir = self.root.join(o.record.algorithm.name()).join(&param);
            fs::create_dir_all(&dir)?;
            let path = dir.join(format!("replicate-{}.jsonl", o.record.replicate));
            let mut w = BufWriter::new(File::create(path)?);
            for rec in &run.trace {
                serde_json::to_writer(&mut w, rec)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
        Ok(())
    }

    /// All stored traces, ordered by algorithm, param and replicate.
    pub fn load(&self) -> Result<Vec<StoredTrace>> {
        let mut out = Vec::new();
        for alg in sorted_entries(&self.root)? {
            for param in sorted_entries(&alg)? {
                for file in sorted_entries(&param)? {
                    let name = file.file_name().and_then(|n| n.to_str()).unwrap_or("");
                    let Some(rep) = name
                        .strip_prefix("replicate-")
                        .and_then(|s| s.strip_suffix(".jsonl"))
                        .and_then(|s| s.parse::<u64>().ok())
                    else {
                        continue;
                    };
                    let mut records = Vec::new();
                    for line in BufReader::new(File::open(&file)?).lines() {
                        let line = line?;
                        if !line.trim().is_empty() {
                            records.push(serde_json::from_str(&line)?);
                        }
                    }
                    out.push(StoredTrace {
                        algorithm: file_name(&alg),
                        param: file_name(&param),
                        replicate: rep,
                        records,
                    });
                }
            }
        }
        out.sort_by(|a, b| {
            (&a.algorithm, &a.param, a.replicate).cmp(&(&b.algorithm, &b.param, b.replicate))
        });
        Ok(out)
    }
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    v.sort();
    Ok(v)
}

/// Mean queries per item at one iteration, over replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub algorithm: String,
    pub param: String,
    pub item: usize,
    pub queries: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewRow {
    pub algorithm: String,
    pub param: String,
    pub max_over_mean: f64,
}

/// Per-item query histogram of `iteration` (1-based) and its max/mean skew.
pub fn query_distribution(
    traces: &[StoredTrace],
    iteration: usize,
) -> Result<(Vec<DistributionRow>, Vec<SkewRow>)> {
    let mut cells: BTreeMap<(String, String), (u64, BTreeMap<usize, u64>)> = BTreeMap::new();
    for t in traces {
        let Some(rec) = t.records.iter().find(|r| r.iteration == iteration) else {
            continue;
        };
        let cell = cells
            .entry((t.algorithm.clone(), t.param.clone()))
            .or_default();
        cell.0 += 1;
        for &(item, q) in &rec.per_item_queries {
            *cell.1.entry(item.0).or_default() += q;
        }
    }
    if cells.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no stored trace reaches iteration {iteration}"
        )));
    }
    let mut rows = Vec::new();
    let mut skew = Vec::new();
    for ((algorithm, param), (runs, hist)) in cells {
        let means: Vec<f64> = hist.values().map(|&q| q as f64 / runs as f64).collect();
        let avg = means.iter().sum::<f64>() / means.len() as f64;
        let max = means.iter().cloned().fold(0.0, f64::max);
        for (&item, &q) in &hist {
            rows.push(DistributionRow {
                algorithm: algorithm.clone(),
                param: param.clone(),
                item,
                queries: q as f64 / runs as f64,
            });
        }
        skew.push(SkewRow {
            algorithm,
            param,
            max_over_mean: if avg > 0.0 { max / avg } else { f64::NAN },
        });
    }
    Ok((rows, skew))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopLRow {
    pub algorithm: String,
    pub param: String,
    pub replicate: u64,
    pub iteration: usize,
    pub chosen: usize,
    pub true_marginal: Option<f64>,
    pub l_chosen: usize,
}

/// One row per stored iteration: the chosen item's true marginal and `|A|`.
pub fn topl_trace(traces: &[StoredTrace]) -> Vec<TopLRow> {
    traces
        .iter()
        .flat_map(|t| {
            t.records.iter().map(move |r| TopLRow {
                algorithm: t.algorithm.clone(),
                param: t.param.clone(),
                replicate: t.replicate,
                iteration: r.iteration,
                chosen: r.chosen.0,
                true_marginal: r.true_marginal,
                l_chosen: r.l_chosen,
            })
        })
        .collect()
}

/// The run rows of a set of outcomes.
pub fn records(outcomes: &[RunOutcome]) -> Vec<RunRecord> {
    outcomes.iter().map(|o| o.record.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::fixtures;

    fn params(k: usize) -> RunParams {
        RunParams::new(k, 0.1, 0.05)
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("Lazy".parse::<Algorithm>().is_err());
    }

    #[test]
    fn setting_labels() {
        assert_eq!(Setting::uniform(0.0).label(), "sigma2=0");
        assert_eq!(Setting::uniform(5.0).label(), "sigma2=5");
        assert_eq!(Setting::Preference { beta: 2.0, tau: 3 }.label(), "beta=2;tau=3");
    }

    #[test]
    fn noiseless_convergence_spends_one_pass_per_iteration() {
        let f = fixtures::desk_instance(12);
        let spec = ConvergenceSpec {
            algorithms: vec![Algorithm::ExpGreedy, Algorithm::ExpGreedyG, Algorithm::ExpGreedyO, Algorithm::Uniform],
            sigma2: vec![0.0],
            params: params(3),
            replicates: 2,
            base_seed: 1,
        };
        let out = run_convergence(&f, &spec).unwrap();
        assert_eq!(out.len(), 9);
        for o in &out[..8] {
            assert_eq!(o.record.queries, 12 + 11 + 10);
        }
        let g = &out[8].record;
        assert_eq!((g.algorithm, g.queries), (Algorithm::Greedy, 36));
    }

    #[test]
    fn full_size_greedy_reference_cost() {
        let f = fixtures::desk_instance(60);
        let g = run_once(&f, Algorithm::Greedy, &Setting::uniform(1.0), &params(6), None, 0, 0).unwrap();
        assert_eq!(g.record.queries, 360);
    }

    #[test]
    fn summaries_match_replicate_rows() {
        let f = fixtures::desk_instance(10);
        let spec = BudgetSpec {
            algorithm: Algorithm::ExpGreedy,
            settings: vec![Setting::uniform(2.0), Setting::Preference { beta: 1.0, tau: 2 }],
            budgets: vec![1.0, 4.0],
            params: params(2),
            replicates: 4,
            base_seed: 9,
        };
        let out = run_budget_quality(&f, &spec).unwrap();
        let rows = records(&out);
        let sums = summarize(&rows);
        assert_eq!(sums.len(), 2 * 2 + 2);
        for s in &sums {
            let cell: Vec<&RunRecord> = rows
                .iter()
                .filter(|r| r.algorithm == s.algorithm && r.param == s.param && r.budget == s.budget)
                .collect();
            let mean = cell.iter().map(|r| r.utility).sum::<f64>() / cell.len() as f64;
            assert!((mean - s.utility_mean).abs() < 1e-12);
            assert_eq!(s.replicates, cell.len() as u64);
        }
        for o in &out {
            if let Some(b) = o.record.budget {
                assert!(o.record.queries <= ExpGreedyConfig::average_budget(10, 2, b));
            }
        }
    }

    #[test]
    fn noiseless_budgeted_runs_equal_greedy() {
        let f = fixtures::desk_instance(10);
        let g = greedy(&f, 3).unwrap().value;
        for b in [1.0, 2.0, 7.0] {
            for rep in 0..3 {
                let o = run_once(&f, Algorithm::ExpGreedy, &Setting::uniform(0.0), &params(3), Some(b), rep, rep).unwrap();
                assert_eq!(o.record.utility, g);
            }
        }
    }

    #[test]
    fn cells_are_reproducible() {
        let f = fixtures::desk_instance(10);
        let run = || {
            let out = run_cell(&f, Algorithm::ExpGreedy, &Setting::uniform(1.0), &params(2), None, 3, 4).unwrap();
            records(&out)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn csv_round_trip_and_trace_store() {
        let dir = tempfile::tempdir().unwrap();
        let f = fixtures::desk_instance(10);
        let mut out = run_cell(&f, Algorithm::ExpGreedy, &Setting::uniform(1.0), &params(2), None, 2, 1).unwrap();
        out.extend(run_cell(&f, Algorithm::Uniform, &Setting::uniform(1.0), &params(2), None, 2, 1).unwrap());
        let rows = records(&out);
        let path = dir.path().join("runs.csv");
        write_csv_file(&rows, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("algorithm,param,budget,replicate,utility,queries,capped\n"));
        assert_eq!(read_run_csv(&path).unwrap(), rows);

        let store = TraceStore::new(dir.path().join("traces"));
        store.save(&out).unwrap();
        let traces = store.load().unwrap();
        assert_eq!(traces.len(), 4);
        assert_eq!(traces[0].records, out[0].run.as_ref().unwrap().trace);

        let (hist, skew) = query_distribution(&traces, 1).unwrap();
        assert_eq!(hist.len(), 20);
        let uniform = skew.iter().find(|s| s.algorithm == "Uniform").unwrap();
        let uniform_mean = hist
            .iter()
            .filter(|h| h.algorithm == "Uniform")
            .map(|h| h.queries)
            .sum::<f64>()
            / 10.0;
        assert!(uniform.max_over_mean <= 1.0 + 1.0 / uniform_mean + 1e-12);
        assert!(query_distribution(&traces, 3).is_err());

        let topl = topl_trace(&traces);
        assert_eq!(topl.len(), 8);
        assert!(topl.iter().all(|r| r.true_marginal.is_some()));
    }
}
