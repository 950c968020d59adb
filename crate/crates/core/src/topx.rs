//! Adaptive top-l exploration.
//!
//! [`TopX`] races every top-l identification problem for `l = 1..k′` on
//! shared empirical means. Each round it computes confidence radii, and for
//! each `l` compares the empirical top-l set `M` with the top-l set `M̃` of
//! the perturbed values (means pushed down inside `M` and up outside it).
//! The first `l` whose slack is at most `l·ε` ends the run; otherwise every
//! unresolved `l` nominates the most uncertain item of `M △ M̃`, and all
//! nominees are observed once before the next round.
//!
//! The explorer is a resumable state machine: callers pull an
//! [`ObservationRequest`], answer it with [`TopX::record`], and repeat until
//! [`TopX::next_request`] returns `None`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{validate_set, ItemId};
use crate::oracle::ObservationChannel;

/// `R √(2 ln(4 N t³ / δ′) / count)`.
pub fn confidence_radius(r: f64, n: usize, t: u64, delta_prime: f64, count: u64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    r * (2.0 * log_term(n, t, delta_prime) / count as f64).sqrt()
}

fn log_term(n: usize, t: u64, delta_prime: f64) -> f64 {
    let t = t as f64;
    (4.0 * n as f64 * t * t * t / delta_prime).ln()
}

/// Descending by value, ascending by id on ties.
fn rank(a: (f64, usize), b: (f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// The `l` entries of `values` (indexed by item id) with the largest values,
/// lowest id first among ties. Returned in id order.
pub fn top_l(values: &[f64], l: usize) -> Result<Vec<ItemId>> {
    if l > values.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot take top {l} of {} values",
            values.len()
        )));
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| rank((values[a], a), (values[b], b)));
    let mut out: Vec<ItemId> = idx[..l].iter().map(|&i| ItemId(i)).collect();
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopXConfig {
    pub epsilon_prime: f64,
    pub delta_prime: f64,
    pub k_prime: usize,
    /// Sub-Gaussian parameter of one observation.
    pub r: f64,
    /// Per-item slack of the stopping rule: ε′ for value observations, the
    /// Borda-scale slack for preference observations.
    pub termination_epsilon: f64,
    pub channel: ObservationChannel,
    /// Spending limit in query units.
    pub budget: Option<u64>,
    /// Hard limit in query units, reported separately from the budget.
    pub cap: Option<u64>,
    /// Race a single top-l problem instead of all of `1..=k′`.
    pub fixed_l: Option<usize>,
    pub log_queries: bool,
}

impl TopXConfig {
    /// Value observations with the stopping slack equal to ε′.
    pub fn value(epsilon_prime: f64, delta_prime: f64, k_prime: usize, r: f64) -> Self {
        TopXConfig {
            epsilon_prime,
            delta_prime,
            k_prime,
            r,
            termination_epsilon: epsilon_prime,
            channel: ObservationChannel::Value,
            budget: None,
            cap: None,
            fixed_l: None,
            log_queries: false,
        }
    }

    pub fn with_fixed_l(mut self, l: usize) -> Self {
        self.fixed_l = Some(l);
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn validate(&self, candidates: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.epsilon_prime >= 0.0 && self.epsilon_prime.is_finite()) {
            return bad(format!("epsilon' must be >= 0, got {}", self.epsilon_prime));
        }
        if !(self.termination_epsilon >= 0.0 && self.termination_epsilon.is_finite()) {
            return bad(format!(
                "termination epsilon must be >= 0, got {}",
                self.termination_epsilon
            ));
        }
        if !(self.delta_prime > 0.0 && self.delta_prime < 1.0) {
            return bad(format!("delta' must lie in (0, 1), got {}", self.delta_prime));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return bad(format!("R must be >= 0, got {}", self.r));
        }
        self.channel.validate()?;
        if self.k_prime == 0 || self.k_prime > candidates {
            return bad(format!(
                "k' = {} must lie in 1..={candidates}",
                self.k_prime
            ));
        }
        if let Some(l) = self.fixed_l {
            if l == 0 || l > candidates {
                return bad(format!("fixed l = {l} must lie in 1..={candidates}"));
            }
        }
        Ok(())
    }

    fn cost(&self) -> u64 {
        self.channel.cost_per_observation()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminatedBy {
    Precision,
    Budget,
    Cap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopXResult {
    /// The returned set `A`, in id order.
    pub selected: Vec<ItemId>,
    pub l_chosen: usize,
    pub terminated_by: TerminatedBy,
    /// Query units spent.
    pub queries_used: u64,
    pub observations: u64,
    /// Rounds evaluated, counting the final one.
    pub rounds: u64,
}

/// Snapshot of the explorer's statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopXState {
    pub t: u64,
    pub context: Vec<ItemId>,
    /// Candidates in id order; `means` and `counts` are parallel to it.
    pub candidates: Vec<ItemId>,
    pub means: Vec<f64>,
    pub counts: Vec<u64>,
    /// Query units spent.
    pub spent: u64,
}

impl TopXState {
    pub fn per_item_queries(&self, cost: u64) -> Vec<(ItemId, u64)> {
        self.candidates
            .iter()
            .zip(&self.counts)
            .map(|(&i, &c)| (i, c * cost))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationRequest {
    pub item: ItemId,
    /// 0 during initialization.
    pub round: u64,
    pub l_proposer: Option<usize>,
}

/// One line of the query log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub round: u64,
    pub l_proposer: Option<usize>,
    pub item: ItemId,
    pub channel: String,
    pub cost: u64,
    pub response: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Init(usize),
    Rounds,
    Done,
}

#[derive(Debug, Clone)]
pub struct TopX {
    config: TopXConfig,
    ground_size: usize,
    context: Vec<ItemId>,
    candidates: Vec<ItemId>,
    means: Vec<f64>,
    counts: Vec<u64>,
    t: u64,
    spent: u64,
    observations: u64,
    phase: Phase,
    /// Nominations `(candidate index, l)` of the current round.
    queue: Vec<(usize, usize)>,
    queue_pos: usize,
    pending: Option<(usize, Option<usize>)>,
    result: Option<TopXResult>,
    log: Vec<QueryRecord>,
    // round scratch
    order: Vec<usize>,
    position: Vec<usize>,
    inv_sqrt_count: Vec<f64>,
    radius: Vec<f64>,
    lowered: Vec<f64>,
    raised: Vec<f64>,
    tilde: Vec<(f64, usize)>,
    in_tilde: Vec<bool>,
    slack: Vec<f64>,
}

impl TopX {
    /// Explorer over the items of `{0, .., ground_size-1}` outside `context`.
    pub fn new(config: TopXConfig, ground_size: usize, context: &[ItemId]) -> Result<Self> {
        validate_set(ground_size, context)?;
        let mut in_context = vec![false; ground_size];
        for s in context {
            in_context[s.0] = true;
        }
        let candidates: Vec<ItemId> = (0..ground_size)
            .filter(|&i| !in_context[i])
            .map(ItemId)
            .collect();
        if candidates.is_empty() {
            return Err(Error::NoCandidates);
        }
        config.validate(candidates.len())?;
        let n = candidates.len();
        let mut topx = TopX {
            config,
            ground_size,
            context: context.to_vec(),
            candidates,
            means: vec![0.0; n],
            counts: vec![0; n],
            t: 0,
            spent: 0,
            observations: 0,
            phase: Phase::Init(0),
            queue: Vec::new(),
            queue_pos: 0,
            pending: None,
            result: None,
            log: Vec::new(),
            order: (0..n).collect(),
            position: vec![0; n],
            inv_sqrt_count: vec![0.0; n],
            radius: vec![0.0; n],
            lowered: vec![0.0; n],
            raised: vec![0.0; n],
            tilde: Vec::with_capacity(n),
            in_tilde: vec![false; n],
            slack: vec![0.0; config.k_prime.max(config.fixed_l.unwrap_or(0)) + 1],
        };
        if n == 1 {
            topx.finish(vec![0], TerminatedBy::Precision);
        }
        Ok(topx)
    }

    pub fn config(&self) -> &TopXConfig {
        &self.config
    }

    pub fn candidates(&self) -> &[ItemId] {
        &self.candidates
    }

    pub fn result(&self) -> Option<&TopXResult> {
        self.result.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    pub fn spent(&self) -> u64 {
        self.spent
    }

    pub fn log(&self) -> &[QueryRecord] {
        &self.log
    }

    pub fn take_log(&mut self) -> Vec<QueryRecord> {
        std::mem::take(&mut self.log)
    }

    /// Empirical mean of `item`, if it is a candidate observed at least once.
    pub fn mean_of(&self, item: ItemId) -> Option<f64> {
        let c = self.candidates.binary_search(&item).ok()?;
        (self.counts[c] > 0).then(|| self.means[c])
    }

    pub fn state(&self) -> TopXState {
        TopXState {
            t: self.t,
            context: self.context.clone(),
            candidates: self.candidates.clone(),
            means: self.means.clone(),
            counts: self.counts.clone(),
            spent: self.spent,
        }
    }

    /// The next observation to make, or `None` once finished. Repeated calls
    /// return the same request until it is recorded.
    pub fn next_request(&mut self) -> Option<ObservationRequest> {
        loop {
            if let Some((c, l)) = self.pending {
                return Some(ObservationRequest {
                    item: self.candidates[c],
                    round: if self.phase == Phase::Rounds { self.t } else { 0 },
                    l_proposer: l,
                });
            }
            match self.phase {
                Phase::Done => return None,
                Phase::Init(c) if c < self.candidates.len() => {
                    if let Some(reason) = self.unfunded(1) {
                        let best = self.best_observed();
                        self.finish(best, reason);
                        continue;
                    }
                    self.pending = Some((c, None));
                }
                Phase::Init(_) => {
                    self.phase = Phase::Rounds;
                    self.t = 1;
                    self.plan_round();
                }
                Phase::Rounds => {
                    if self.queue_pos < self.queue.len() {
                        let (c, l) = self.queue[self.queue_pos];
                        self.pending = Some((c, Some(l)));
                    } else {
                        self.t += 1;
                        self.plan_round();
                    }
                }
            }
        }
    }

    /// Feeds the answer to the pending request.
    pub fn record(&mut self, response: f64) -> Result<()> {
        let Some((c, l)) = self.pending else {
            return Err(Error::NothingPending);
        };
        if !response.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "observation must be finite, got {response}"
            )));
        }
        self.pending = None;
        self.counts[c] += 1;
        self.means[c] += (response - self.means[c]) / self.counts[c] as f64;
        self.inv_sqrt_count[c] = 1.0 / (self.counts[c] as f64).sqrt();
        let cost = self.config.cost();
        self.spent += cost;
        self.observations += 1;
        if self.config.log_queries {
            self.log.push(QueryRecord {
                round: if self.phase == Phase::Rounds { self.t } else { 0 },
                l_proposer: l,
                item: self.candidates[c],
                channel: self.config.channel.label().to_string(),
                cost,
                response,
            });
        }
        match self.phase {
            Phase::Init(i) => self.phase = Phase::Init(i + 1),
            Phase::Rounds => self.queue_pos += 1,
            Phase::Done => unreachable!("no request is issued once done"),
        }
        Ok(())
    }

    /// Which limit, if any, prevents funding `observations` more.
    fn unfunded(&self, observations: u64) -> Option<TerminatedBy> {
        let need = self.spent + observations * self.config.cost();
        if self.config.budget.is_some_and(|b| need > b) {
            Some(TerminatedBy::Budget)
        } else if self.config.cap.is_some_and(|c| need > c) {
            Some(TerminatedBy::Cap)
        } else {
            None
        }
    }

    fn best_observed(&self) -> Vec<usize> {
        (0..self.candidates.len())
            .filter(|&c| self.counts[c] > 0)
            .min_by(|&a, &b| rank((self.means[a], a), (self.means[b], b)))
            .into_iter()
            .collect()
    }

    fn finish(&mut self, members: Vec<usize>, reason: TerminatedBy) {
        let selected: Vec<ItemId> = {
            let mut s: Vec<ItemId> = members.iter().map(|&c| self.candidates[c]).collect();
            s.sort();
            s
        };
        self.result = Some(TopXResult {
            l_chosen: selected.len(),
            selected,
            terminated_by: reason,
            queries_used: self.spent,
            observations: self.observations,
            rounds: self.t,
        });
        self.phase = Phase::Done;
        self.pending = None;
        self.queue.clear();
    }

    fn plan_round(&mut self) {
        let n = self.candidates.len();
        let cfg = self.config;
        if cfg.r > 0.0 {
            let scale = cfg.r * (2.0 * log_term(self.ground_size, self.t, cfg.delta_prime)).sqrt();
            for c in 0..n {
                self.radius[c] = scale * self.inv_sqrt_count[c];
            }
        }
        // only the few items observed last round have moved
        let means = &self.means;
        for i in 1..n {
            let mut j = i;
            while j > 0 {
                let (a, b) = (self.order[j - 1], self.order[j]);
                if rank((means[a], a), (means[b], b)) != Ordering::Greater {
                    break;
                }
                self.order.swap(j - 1, j);
                j -= 1;
            }
        }
        for (p, &c) in self.order.iter().enumerate() {
            self.position[c] = p;
        }

        self.queue.clear();
        self.queue_pos = 0;
        let (first, last) = match cfg.fixed_l {
            Some(l) => (l, l),
            None => (1, cfg.k_prime),
        };
        for c in 0..n {
            self.lowered[c] = self.means[c] - self.radius[c];
            self.raised[c] = self.means[c] + self.radius[c];
        }
        for l in first..=last {
            // M~: top l of the perturbed values, best first
            self.tilde.clear();
            for c in 0..n {
                let v = if self.position[c] < l {
                    self.lowered[c]
                } else {
                    self.raised[c]
                };
                if self.tilde.len() == l {
                    if v <= self.tilde[l - 1].0 {
                        continue;
                    }
                    self.tilde.pop();
                }
                let at = self.tilde.partition_point(|&(w, _)| w >= v);
                self.tilde.insert(at, (v, c));
            }
            let same = self.tilde.iter().all(|&(_, c)| self.position[c] < l);
            let slack = if same {
                0.0
            } else {
                let tilde_sum: f64 = self.tilde.iter().map(|e| e.0).sum();
                let top_sum: f64 = self.order[..l].iter().map(|&c| self.lowered[c]).sum();
                tilde_sum - top_sum
            };
            if slack <= l as f64 * cfg.termination_epsilon {
                let members = self.order[..l].to_vec();
                self.finish(members, TerminatedBy::Precision);
                return;
            }
            self.slack[l] = slack;
            for &(_, c) in &self.tilde {
                self.in_tilde[c] = true;
            }
            let outside = self.tilde.iter().map(|e| e.1).filter(|&c| self.position[c] >= l);
            let dropped = self.order[..l].iter().copied().filter(|&c| !self.in_tilde[c]);
            let radius = &self.radius;
            let q = outside
                .chain(dropped)
                .min_by(|&a, &b| radius[b].total_cmp(&radius[a]).then(a.cmp(&b)))
                .expect("nonzero slack implies M != M~");
            for &(_, c) in &self.tilde {
                self.in_tilde[c] = false;
            }
            self.queue.push((q, l));
        }

        if let Some(reason) = self.unfunded(self.queue.len() as u64) {
            let best_l = (first..=last)
                .min_by(|&a, &b| {
                    (self.slack[a] / a as f64)
                        .total_cmp(&(self.slack[b] / b as f64))
                        .then(a.cmp(&b))
                })
                .expect("at least one l");
            let members = self.order[..best_l].to_vec();
            self.finish(members, reason);
        }
    }
}

/// Result, final state and query log of a driven run.
#[derive(Debug, Clone)]
pub struct TopXRun {
    pub result: TopXResult,
    pub state: TopXState,
    pub log: Vec<QueryRecord>,
}

/// Drives a [`TopX`] to completion, answering each request with `observe`.
pub fn run_topx<F>(
    config: TopXConfig,
    ground_size: usize,
    context: &[ItemId],
    mut observe: F,
) -> Result<TopXRun>
where
    F: FnMut(ItemId) -> Result<f64>,
{
    let mut topx = TopX::new(config, ground_size, context)?;
    while let Some(req) = topx.next_request() {
        let y = observe(req.item)?;
        topx.record(y)?;
    }
    Ok(TopXRun {
        result: topx.result.clone().expect("finished"),
        state: topx.state(),
        log: topx.take_log(),
    })
}
