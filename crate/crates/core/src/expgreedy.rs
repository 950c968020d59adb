//! The greedy outer loop over noisy exploration.
//!
//! Each of the `k` iterations runs an explorer over the items not yet
//! selected, receives a set `A`, and adds a uniformly random member of `A`
//! to the selection. [`ExpGreedy`] is a resumable state machine at the
//! granularity of single queries, so a run can be driven by a simulated
//! oracle in process or by answers arriving over the network.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::UniformExplorer;
use crate::error::{Error, Result};
use crate::function::{ItemId, SubmodularFunction};
use crate::oracle::{borda_epsilon_transform, ObservationChannel, Query, Responder};
use crate::rng::{algorithm_rng, SimRng};
use crate::topx::{ObservationRequest, QueryRecord, TerminatedBy, TopX, TopXConfig, TopXResult};

/// Query units a run may spend before exploration is cut off.
pub const DEFAULT_OBSERVATION_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    /// `k′ = k`, `ε′ = ε/k`: competes with the optimum.
    OptCompete,
    /// `k′ = 1`, `ε′ = ε/k`.
    TopOne,
    /// `k′ = 1`, `ε′ = 0`: competes with noise-free greedy.
    GreedyCompete,
}

impl SelectionMode {
    pub fn algorithm_name(&self) -> &'static str {
        match self {
            SelectionMode::OptCompete => "ExpGreedy",
            SelectionMode::TopOne => "ExpGreedy_O",
            SelectionMode::GreedyCompete => "ExpGreedy_G",
        }
    }
}

impl FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "opt-compete" => Ok(SelectionMode::OptCompete),
            "top-one" => Ok(SelectionMode::TopOne),
            "greedy-compete" => Ok(SelectionMode::GreedyCompete),
            _ => Err(Error::InvalidParameter(format!(
                "unknown mode {s:?}; expected opt-compete, top-one or greedy-compete"
            ))),
        }
    }
}

impl fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionMode::OptCompete => "opt-compete",
            SelectionMode::TopOne => "top-one",
            SelectionMode::GreedyCompete => "greedy-compete",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopXParams {
    pub epsilon_prime: f64,
    pub delta_prime: f64,
    pub k_prime: usize,
}

pub fn derive_topx_params(mode: SelectionMode, k: usize, epsilon: f64, delta: f64) -> TopXParams {
    let kf = k as f64;
    let (epsilon_prime, k_prime) = match mode {
        SelectionMode::OptCompete => (epsilon / kf, k),
        SelectionMode::TopOne => (epsilon / kf, 1),
        SelectionMode::GreedyCompete => (0.0, 1),
    };
    TopXParams {
        epsilon_prime,
        delta_prime: delta / kf,
        k_prime,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplorerKind {
    TopX,
    /// Round-robin sampling with the single-item stopping rule.
    Uniform,
}

/// Where preference opponents are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpponentPool {
    /// The whole ground set; selected items act as zero-gain opponents.
    #[default]
    AllItems,
    /// Only the current candidates.
    Candidates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpGreedyConfig {
    pub k: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub mode: SelectionMode,
    pub channel: ObservationChannel,
    /// Sub-Gaussian parameter of one observation on `channel`.
    pub r: f64,
    /// BTL sharpness used to rescale ε′ for preference observations; when
    /// unknown the stopping slack is 0.
    pub beta: Option<f64>,
    /// Total budget in query units, split evenly over the iterations.
    pub budget: Option<u64>,
    /// Hard limit in query units, split like the budget.
    pub cap: Option<u64>,
    pub seed: u64,
    pub explorer: ExplorerKind,
    pub opponent_pool: OpponentPool,
    pub log_queries: bool,
}

impl ExpGreedyConfig {
    pub fn new(
        k: usize,
        epsilon: f64,
        delta: f64,
        mode: SelectionMode,
        channel: ObservationChannel,
        r: f64,
        seed: u64,
    ) -> Self {
        ExpGreedyConfig {
            k,
            epsilon,
            delta,
            mode,
            channel,
            r,
            beta: None,
            budget: None,
            cap: Some(DEFAULT_OBSERVATION_CAP),
            seed,
            explorer: ExplorerKind::TopX,
            opponent_pool: OpponentPool::AllItems,
            log_queries: false,
        }
    }

    pub fn validate(&self, ground_size: usize) -> Result<()> {
        if self.k == 0 || self.k > ground_size {
            return Err(Error::CardinalityOutOfRange {
                k: self.k,
                ground_size,
            });
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidParameter(format!("R must be >= 0, got {}", self.r)));
        }
        self.channel.validate()?;
        if self.channel != ObservationChannel::Value && ground_size < 2 {
            return Err(Error::InvalidParameter(
                "preference queries need at least two items".into(),
            ));
        }
        Ok(())
    }

    /// Slack of the stopping rule in observation units.
    pub fn termination_epsilon(&self, ground_size: usize) -> f64 {
        let eps = derive_topx_params(self.mode, self.k, self.epsilon, self.delta).epsilon_prime;
        match self.channel {
            ObservationChannel::Value => eps,
            _ => borda_epsilon_transform(eps, self.beta, ground_size),
        }
    }

    /// Total budget for an average of `per_item` query units per item and
    /// iteration.
    pub fn average_budget(ground_size: usize, k: usize, per_item: f64) -> u64 {
        (ground_size as f64 * k as f64 * per_item).floor() as u64
    }
}

/// One iteration of the outer loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// The set the chosen item was drawn from, in id order.
    pub returned: Vec<ItemId>,
    /// `|A|` as returned by the explorer; 0 when exploration could not be
    /// funded and the draw fell back to all candidates.
    pub l_chosen: usize,
    pub chosen: ItemId,
    pub estimated_marginal: Option<f64>,
    pub true_marginal: Option<f64>,
    pub queries_used: u64,
    pub observations: u64,
    pub rounds: u64,
    pub terminated_by: TerminatedBy,
    pub per_item_queries: Vec<(ItemId, u64)>,
}

#[derive(Debug, Clone)]
enum Explorer {
    TopX(TopX),
    Uniform(UniformExplorer),
}

impl Explorer {
    fn next_request(&mut self) -> Option<ObservationRequest> {
        match self {
            Explorer::TopX(t) => t.next_request(),
            Explorer::Uniform(u) => u.next_request(),
        }
    }

    fn record(&mut self, y: f64) -> Result<()> {
        match self {
            Explorer::TopX(t) => t.record(y),
            Explorer::Uniform(u) => u.record(y),
        }
    }

    fn result(&self) -> &TopXResult {
        match self {
            Explorer::TopX(t) => t.result(),
            Explorer::Uniform(u) => u.result(),
        }
        .expect("explorer finished")
    }

    fn candidates(&self) -> &[ItemId] {
        match self {
            Explorer::TopX(t) => t.candidates(),
            Explorer::Uniform(u) => u.candidates(),
        }
    }

    fn mean_of(&self, item: ItemId) -> Option<f64> {
        match self {
            Explorer::TopX(t) => t.mean_of(item),
            Explorer::Uniform(u) => u.mean_of(item),
        }
    }

    fn per_item_queries(&self, cost: u64) -> Vec<(ItemId, u64)> {
        match self {
            Explorer::TopX(t) => t.state().per_item_queries(cost),
            Explorer::Uniform(u) => u.state().per_item_queries(cost),
        }
    }

    fn take_log(&mut self) -> Vec<QueryRecord> {
        match self {
            Explorer::TopX(t) => t.take_log(),
            Explorer::Uniform(u) => u.take_log(),
        }
    }
}

/// Comparisons collected so far for one preference observation.
#[derive(Debug, Clone, Copy)]
struct BordaProgress {
    item: ItemId,
    remaining: u32,
    wins: u32,
}

#[derive(Debug, Clone)]
pub struct ExpGreedy {
    config: ExpGreedyConfig,
    ground_size: usize,
    termination_epsilon: f64,
    rng: SimRng,
    selected: Vec<ItemId>,
    trace: Vec<IterationRecord>,
    explorer: Option<Explorer>,
    borda: Option<BordaProgress>,
    pending: Option<Query>,
    spent: u64,
    query_logs: Vec<Vec<QueryRecord>>,
}

impl ExpGreedy {
    pub fn new(config: ExpGreedyConfig, ground_size: usize) -> Result<Self> {
        config.validate(ground_size)?;
        Ok(ExpGreedy {
            termination_epsilon: config.termination_epsilon(ground_size),
            rng: algorithm_rng(config.seed),
            config,
            ground_size,
            selected: Vec::new(),
            trace: Vec::new(),
            explorer: None,
            borda: None,
            pending: None,
            spent: 0,
            query_logs: Vec::new(),
        })
    }

    pub fn config(&self) -> &ExpGreedyConfig {
        &self.config
    }

    /// Items selected so far, in selection order; also the current context.
    pub fn selected(&self) -> &[ItemId] {
        &self.selected
    }

    pub fn trace(&self) -> &[IterationRecord] {
        &self.trace
    }

    /// Query units spent so far.
    pub fn spent(&self) -> u64 {
        self.spent
    }

    pub fn is_done(&self) -> bool {
        self.selected.len() == self.config.k
    }

    /// 1-based index of the current iteration, `k` once done.
    pub fn iteration(&self) -> usize {
        (self.selected.len() + 1).min(self.config.k)
    }

    pub fn pending(&self) -> Option<Query> {
        self.pending
    }

    /// The next query to answer, or `None` once `k` items are selected.
    /// Repeated calls return the same query until it is answered.
    pub fn next_query(&mut self) -> Option<Query> {
        loop {
            if let Some(q) = self.pending {
                return Some(q);
            }
            if self.is_done() {
                return None;
            }
            if self.explorer.is_none() {
                let explorer = self.start_iteration();
                self.explorer = Some(explorer);
            }
            if let Some(progress) = self.borda {
                let opponent = self.draw_opponent(progress.item);
                self.pending = Some(Query::Compare {
                    item: progress.item,
                    opponent,
                });
                continue;
            }
            let explorer = self.explorer.as_mut().expect("iteration started");
            match explorer.next_request() {
                Some(req) => match self.config.channel.tau() {
                    None => self.pending = Some(Query::Value { item: req.item }),
                    Some(tau) => {
                        self.borda = Some(BordaProgress {
                            item: req.item,
                            remaining: tau,
                            wins: 0,
                        })
                    }
                },
                None => self.finish_iteration(),
            }
        }
    }

    /// Answers the pending query: a real observation for value queries, 1
    /// (item preferred) or 0 for comparisons.
    pub fn submit(&mut self, response: f64) -> Result<()> {
        let query = self.pending.ok_or(Error::NothingPending)?;
        let explorer = self.explorer.as_mut().expect("pending implies explorer");
        match query {
            Query::Value { .. } => {
                explorer.record(response)?;
                self.spent += 1;
            }
            Query::Compare { .. } => {
                if response != 0.0 && response != 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "comparison answers are 0 or 1, got {response}"
                    )));
                }
                let progress = self.borda.as_mut().expect("comparison in progress");
                progress.wins += response as u32;
                progress.remaining -= 1;
                self.spent += 1;
                if progress.remaining == 0 {
                    let tau = self.config.channel.tau().expect("preference channel");
                    let mean = progress.wins as f64 / tau as f64;
                    self.borda = None;
                    explorer.record(mean)?;
                }
            }
        }
        self.pending = None;
        Ok(())
    }

    pub fn take_query_logs(&mut self) -> Vec<Vec<QueryRecord>> {
        std::mem::take(&mut self.query_logs)
    }

    fn start_iteration(&self) -> Explorer {
        let cfg = &self.config;
        let j = (self.selected.len() + 1) as u128;
        let k = cfg.k as u128;
        let allowance = |total: u64| ((total as u128 * j / k) as u64).saturating_sub(self.spent);
        let params = derive_topx_params(cfg.mode, cfg.k, cfg.epsilon, cfg.delta);
        let candidates = self.ground_size - self.selected.len();
        let topx_config = TopXConfig {
            epsilon_prime: params.epsilon_prime,
            delta_prime: params.delta_prime,
            k_prime: params.k_prime.min(candidates),
            r: cfg.r,
            termination_epsilon: self.termination_epsilon,
            channel: cfg.channel,
            budget: cfg.budget.map(allowance),
            cap: cfg.cap.map(allowance),
            fixed_l: None,
            log_queries: cfg.log_queries,
        };
        let built = match cfg.explorer {
            ExplorerKind::TopX => {
                TopX::new(topx_config, self.ground_size, &self.selected).map(Explorer::TopX)
            }
            ExplorerKind::Uniform => {
                UniformExplorer::new(topx_config, self.ground_size, &self.selected)
                    .map(Explorer::Uniform)
            }
        };
        built.expect("configuration validated up front")
    }

    fn draw_opponent(&mut self, item: ItemId) -> ItemId {
        match self.config.opponent_pool {
            OpponentPool::AllItems => {
                let j = self.rng.random_range(0..self.ground_size - 1);
                ItemId(if j >= item.0 { j + 1 } else { j })
            }
            OpponentPool::Candidates => {
                let pool = self.explorer.as_ref().expect("iteration started").candidates();
                let own = pool.binary_search(&item).expect("item is a candidate");
                let j = self.rng.random_range(0..pool.len() - 1);
                pool[if j >= own { j + 1 } else { j }]
            }
        }
    }

    fn finish_iteration(&mut self) {
        let mut explorer = self.explorer.take().expect("iteration started");
        let result = explorer.result().clone();
        let returned = if result.selected.is_empty() {
            explorer.candidates().to_vec()
        } else {
            result.selected.clone()
        };
        let chosen = returned[self.rng.random_range(0..returned.len())];
        let cost = self.config.channel.cost_per_observation();
        self.trace.push(IterationRecord {
            iteration: self.selected.len() + 1,
            l_chosen: result.selected.len(),
            returned,
            chosen,
            estimated_marginal: explorer.mean_of(chosen),
            true_marginal: None,
            queries_used: result.queries_used,
            observations: result.observations,
            rounds: result.rounds,
            terminated_by: result.terminated_by,
            per_item_queries: explorer.per_item_queries(cost),
        });
        if self.config.log_queries {
            self.query_logs.push(explorer.take_log());
        }
        self.selected.push(chosen);
    }
}

/// Outcome of a driven run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpGreedyRun {
    pub selected: Vec<ItemId>,
    pub trace: Vec<IterationRecord>,
    /// Query units spent.
    pub queries: u64,
    /// Per-iteration observation logs, when logging was enabled.
    #[serde(skip)]
    pub query_logs: Vec<Vec<QueryRecord>>,
}

impl ExpGreedyRun {
    /// Whether any iteration stopped at the hard cap.
    pub fn capped(&self) -> bool {
        self.trace
            .iter()
            .any(|r| r.terminated_by == TerminatedBy::Cap)
    }

    /// Fills `true_marginal` from the hidden function.
    pub fn annotate<F: SubmodularFunction + ?Sized>(&mut self, f: &F) {
        for (j, rec) in self.trace.iter_mut().enumerate() {
            rec.true_marginal = Some(f.gain(rec.chosen, &self.selected[..j]));
        }
    }
}

/// Runs the outer loop to completion against `responder`.
pub fn run_expgreedy<R: Responder + ?Sized>(
    config: ExpGreedyConfig,
    ground_size: usize,
    responder: &mut R,
) -> Result<ExpGreedyRun> {
    let mut eg = ExpGreedy::new(config, ground_size)?;
    while let Some(q) = eg.next_query() {
        let y = responder.respond(&q, eg.selected())?;
        eg.submit(y)?;
    }
    Ok(ExpGreedyRun {
        queries: eg.spent,
        query_logs: eg.take_query_logs(),
        selected: eg.selected,
        trace: eg.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::{fixtures, greedy, ids};
    use crate::oracle::{sub_gaussian_r, NoiseModel, PreferenceOracle, ValueOracle};

    fn value_config(k: usize, mode: SelectionMode, noise: &NoiseModel, seed: u64) -> ExpGreedyConfig {
        let r = sub_gaussian_r(&ObservationChannel::Value, Some(noise), false).unwrap();
        ExpGreedyConfig::new(k, 0.1, 0.05, mode, ObservationChannel::Value, r, seed)
    }

    fn value_run(f: &dyn SubmodularFunction, cfg: ExpGreedyConfig, noise: NoiseModel) -> ExpGreedyRun {
        let mut oracle = ValueOracle::new(f, noise, cfg.seed).unwrap();
        run_expgreedy(cfg, f.ground_size(), &mut oracle).unwrap()
    }

    #[test]
    fn parameter_derivation() {
        let p = derive_topx_params(SelectionMode::OptCompete, 6, 0.1, 0.05);
        assert!((p.epsilon_prime - 0.1 / 6.0).abs() < 1e-15);
        assert!((p.delta_prime - 0.05 / 6.0).abs() < 1e-15);
        assert_eq!(p.k_prime, 6);
        let g = derive_topx_params(SelectionMode::GreedyCompete, 6, 0.1, 0.05);
        assert_eq!((g.epsilon_prime, g.k_prime), (0.0, 1));
        let o = derive_topx_params(SelectionMode::TopOne, 4, 0.2, 0.05);
        assert_eq!(o.epsilon_prime, 0.05);
        assert_eq!(o.delta_prime, 0.05 / 4.0);
        assert_eq!(o.k_prime, 1);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [
            SelectionMode::OptCompete,
            SelectionMode::TopOne,
            SelectionMode::GreedyCompete,
        ] {
            assert_eq!(m.to_string().parse::<SelectionMode>().unwrap(), m);
        }
        assert!("best".parse::<SelectionMode>().is_err());
    }

    #[test]
    fn noiseless_greedy_compete_is_greedy() {
        let fs: Vec<Box<dyn SubmodularFunction>> = vec![
            Box::new(fixtures::appendix_b(0.1).unwrap()),
            Box::new(fixtures::appendix_b(0.25).unwrap()),
            Box::new(fixtures::venice_toy()),
            Box::new(fixtures::desk_instance(12)),
        ];
        for f in &fs {
            for k in 1..=f.ground_size().min(4) {
                let noise = NoiseModel::Noiseless;
                let run = value_run(f.as_ref(), value_config(k, SelectionMode::GreedyCompete, &noise, 3), noise);
                assert_eq!(run.selected, greedy(f.as_ref(), k).unwrap().selected);
            }
        }
    }

    #[test]
    fn uniform_explorer_noiseless_is_greedy() {
        let f = fixtures::venice_toy();
        let noise = NoiseModel::Noiseless;
        let mut cfg = value_config(3, SelectionMode::TopOne, &noise, 1);
        cfg.explorer = ExplorerKind::Uniform;
        let run = value_run(&f, cfg, noise);
        assert_eq!(run.selected, greedy(&f, 3).unwrap().selected);
    }

    #[test]
    fn trace_shape() {
        let f = fixtures::desk_instance(20);
        let noise = NoiseModel::UniformHalfRange { sigma2: 0.5 };
        let mut run = value_run(&f, value_config(4, SelectionMode::OptCompete, &noise, 8), noise);
        run.annotate(&f);
        assert_eq!(run.trace.len(), 4);
        let mut seen = std::collections::BTreeSet::new();
        for (j, rec) in run.trace.iter().enumerate() {
            assert_eq!(rec.iteration, j + 1);
            assert!(rec.returned.contains(&rec.chosen));
            assert!((1..=4).contains(&rec.l_chosen));
            assert!(seen.insert(rec.chosen));
            assert!(rec.true_marginal.unwrap() >= 0.0);
            let total: u64 = rec.per_item_queries.iter().map(|p| p.1).sum();
            assert_eq!(total, rec.queries_used);
        }
        assert_eq!(run.queries, run.trace.iter().map(|r| r.queries_used).sum::<u64>());
    }

    #[test]
    fn seeded_runs_repeat() {
        let f = fixtures::desk_instance(15);
        let noise = NoiseModel::UniformHalfRange { sigma2: 1.0 };
        let a = value_run(&f, value_config(3, SelectionMode::OptCompete, &noise, 5), noise);
        let b = value_run(&f, value_config(3, SelectionMode::OptCompete, &noise, 5), noise);
        assert_eq!(a, b);
    }

    #[test]
    fn budget_split_rolls_forward() {
        let f = fixtures::desk_instance(10);
        let noise = NoiseModel::UniformHalfRange { sigma2: 5.0 };
        let mut cfg = value_config(3, SelectionMode::GreedyCompete, &noise, 2);
        cfg.budget = Some(100);
        let run = value_run(&f, cfg, noise);
        assert!(run.queries <= 100);
        let mut spent = 0;
        for (j, rec) in run.trace.iter().enumerate() {
            spent += rec.queries_used;
            assert!(spent <= 100 * (j as u64 + 1) / 3);
        }
    }

    #[test]
    fn unfunded_iterations_draw_from_all_candidates() {
        let f = fixtures::desk_instance(10);
        let noise = NoiseModel::UniformHalfRange { sigma2: 1.0 };
        let mut cfg = value_config(2, SelectionMode::OptCompete, &noise, 2);
        cfg.budget = Some(0);
        let run = value_run(&f, cfg, noise);
        assert_eq!(run.queries, 0);
        assert_eq!(run.trace[0].l_chosen, 0);
        assert_eq!(run.trace[0].returned.len(), 10);
        assert_eq!(run.trace[1].returned.len(), 9);
        assert_eq!(run.trace[0].terminated_by, TerminatedBy::Budget);
    }

    #[test]
    fn preference_run_counts_comparisons() {
        let f = fixtures::venice_toy();
        let tau = 3;
        let channel = ObservationChannel::Preference { tau };
        let r = sub_gaussian_r(&channel, None, false).unwrap();
        let mut cfg = ExpGreedyConfig::new(2, 0.1, 0.05, SelectionMode::OptCompete, channel, r, 4);
        cfg.budget = Some(ExpGreedyConfig::average_budget(5, 2, 30.0));
        cfg.log_queries = true;
        let mut oracle = PreferenceOracle::new(&f, 2.0, 4).unwrap();
        let run = run_expgreedy(cfg, 5, &mut oracle).unwrap();
        assert_eq!(oracle.comparison_count(), run.queries);
        assert!(run.queries <= 300);
        for (rec, log) in run.trace.iter().zip(&run.query_logs) {
            assert_eq!(rec.queries_used, tau as u64 * log.len() as u64);
            for q in log {
                let wins = q.response * tau as f64;
                assert!((wins - wins.round()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn state_machine_protocol() {
        let channel = ObservationChannel::Preference { tau: 2 };
        let mut cfg = ExpGreedyConfig::new(1, 0.1, 0.05, SelectionMode::OptCompete, channel, 0.35, 1);
        cfg.opponent_pool = OpponentPool::Candidates;
        cfg.budget = Some(8);
        let mut eg = ExpGreedy::new(cfg, 3).unwrap();
        assert!(matches!(eg.submit(1.0), Err(Error::NothingPending)));
        let q = eg.next_query().unwrap();
        assert_eq!(eg.next_query().unwrap(), q);
        assert!(eg.submit(0.5).is_err());
        assert_eq!(eg.pending(), Some(q));
        let mut answered = 0;
        while let Some(q) = eg.next_query() {
            let Query::Compare { item, opponent } = q else {
                panic!("value query on preference channel")
            };
            assert_ne!(item, opponent);
            eg.submit((item.0 < opponent.0) as u8 as f64).unwrap();
            answered += 1;
        }
        assert_eq!(answered, 8);
        assert_eq!(eg.spent(), 8);
        assert!(eg.is_done());
        assert_eq!(eg.selected(), &ids(&[0]));
    }

    #[test]
    fn config_rejections() {
        let noise = NoiseModel::Noiseless;
        assert!(ExpGreedy::new(value_config(4, SelectionMode::OptCompete, &noise, 0), 3).is_err());
        assert!(ExpGreedy::new(value_config(0, SelectionMode::OptCompete, &noise, 0), 3).is_err());
        let mut cfg = value_config(1, SelectionMode::OptCompete, &noise, 0);
        cfg.delta = 0.0;
        assert!(ExpGreedy::new(cfg, 3).is_err());
    }
}
