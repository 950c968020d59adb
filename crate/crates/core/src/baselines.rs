//! Non-adaptive comparison algorithms.

use rand::Rng;

use crate::error::{Error, Result};
use crate::function::{validate_set, ItemId};
use crate::topx::{
    confidence_radius, ObservationRequest, QueryRecord, TerminatedBy, TopXConfig, TopXResult,
    TopXState,
};

/// Round-robin exploration for best-item identification.
///
/// Every candidate is observed once per sweep. After each full sweep the
/// explorer applies the single-item stopping rule of [`TopX`](crate::topx::TopX)
/// with the sweep index as round counter, so the two differ only in where
/// they spend observations. Of the configuration, `k_prime` and `fixed_l`
/// are ignored.
#[derive(Debug, Clone)]
pub struct UniformExplorer {
    config: TopXConfig,
    ground_size: usize,
    context: Vec<ItemId>,
    candidates: Vec<ItemId>,
    means: Vec<f64>,
    counts: Vec<u64>,
    next: usize,
    sweep: u64,
    spent: u64,
    observations: u64,
    pending: bool,
    result: Option<TopXResult>,
    log: Vec<QueryRecord>,
}

impl UniformExplorer {
    pub fn new(config: TopXConfig, ground_size: usize, context: &[ItemId]) -> Result<Self> {
        validate_set(ground_size, context)?;
        let candidates: Vec<ItemId> = (0..ground_size)
            .map(ItemId)
            .filter(|i| !context.contains(i))
            .collect();
        if candidates.is_empty() {
            return Err(Error::NoCandidates);
        }
        TopXConfig {
            k_prime: 1,
            fixed_l: None,
            ..config
        }
        .validate(candidates.len())?;
        let n = candidates.len();
        let mut u = UniformExplorer {
            config,
            ground_size,
            context: context.to_vec(),
            candidates,
            means: vec![0.0; n],
            counts: vec![0; n],
            next: 0,
            sweep: 1,
            spent: 0,
            observations: 0,
            pending: false,
            result: None,
            log: Vec::new(),
        };
        if n == 1 {
            u.finish(Some(0), TerminatedBy::Precision);
        }
        Ok(u)
    }

    pub fn result(&self) -> Option<&TopXResult> {
        self.result.as_ref()
    }

    pub fn candidates(&self) -> &[ItemId] {
        &self.candidates
    }

    pub fn spent(&self) -> u64 {
        self.spent
    }

    pub fn take_log(&mut self) -> Vec<QueryRecord> {
        std::mem::take(&mut self.log)
    }

    pub fn mean_of(&self, item: ItemId) -> Option<f64> {
        let c = self.candidates.binary_search(&item).ok()?;
        (self.counts[c] > 0).then(|| self.means[c])
    }

    pub fn state(&self) -> TopXState {
        TopXState {
            t: self.sweep,
            context: self.context.clone(),
            candidates: self.candidates.clone(),
            means: self.means.clone(),
            counts: self.counts.clone(),
            spent: self.spent,
        }
    }

    pub fn next_request(&mut self) -> Option<ObservationRequest> {
        if self.result.is_some() {
            return None;
        }
        if !self.pending {
            let need = self.spent + self.config.channel.cost_per_observation();
            let reason = if self.config.budget.is_some_and(|b| need > b) {
                Some(TerminatedBy::Budget)
            } else if self.config.cap.is_some_and(|c| need > c) {
                Some(TerminatedBy::Cap)
            } else {
                None
            };
            if let Some(reason) = reason {
                self.finish(self.best_observed(), reason);
                return None;
            }
            self.pending = true;
        }
        Some(ObservationRequest {
            item: self.candidates[self.next],
            round: self.sweep,
            l_proposer: None,
        })
    }

    pub fn record(&mut self, response: f64) -> Result<()> {
        if !self.pending {
            return Err(Error::NothingPending);
        }
        if !response.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "observation must be finite, got {response}"
            )));
        }
        self.pending = false;
        let c = self.next;
        self.counts[c] += 1;
        self.means[c] += (response - self.means[c]) / self.counts[c] as f64;
        let cost = self.config.channel.cost_per_observation();
        self.spent += cost;
        self.observations += 1;
        if self.config.log_queries {
            self.log.push(QueryRecord {
                round: self.sweep,
                l_proposer: None,
                item: self.candidates[c],
                channel: self.config.channel.label().to_string(),
                cost,
                response,
            });
        }
        self.next += 1;
        if self.next == self.candidates.len() {
            self.next = 0;
            if let Some(best) = self.sweep_check() {
                self.finish(Some(best), TerminatedBy::Precision);
            } else {
                self.sweep += 1;
            }
        }
        Ok(())
    }

    fn best_observed(&self) -> Option<usize> {
        (0..self.candidates.len())
            .filter(|&c| self.counts[c] > 0)
            .min_by(|&a, &b| self.means[b].total_cmp(&self.means[a]).then(a.cmp(&b)))
    }

    /// The single-item stopping rule at the end of a sweep.
    fn sweep_check(&self) -> Option<usize> {
        let cfg = &self.config;
        let rad = |c: usize| {
            confidence_radius(cfg.r, self.ground_size, self.sweep, cfg.delta_prime, self.counts[c])
        };
        let best = self.best_observed()?;
        let lowered = self.means[best] - rad(best);
        let mut rival = best;
        let mut rival_value = lowered;
        for c in 0..self.candidates.len() {
            if c != best {
                let raised = self.means[c] + rad(c);
                if raised > rival_value || (raised == rival_value && c < rival) {
                    rival = c;
                    rival_value = raised;
                }
            }
        }
        let slack = if rival == best { 0.0 } else { rival_value - lowered };
        (slack <= cfg.termination_epsilon).then_some(best)
    }

    fn finish(&mut self, best: Option<usize>, reason: TerminatedBy) {
        let selected: Vec<ItemId> = best.map(|c| self.candidates[c]).into_iter().collect();
        self.result = Some(TopXResult {
            l_chosen: selected.len(),
            selected,
            terminated_by: reason,
            queries_used: self.spent,
            observations: self.observations,
            rounds: self.sweep,
        });
    }
}

/// Uniformly random `k`-subset of `{0, .., n-1}`, in id order.
pub fn random_select<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Vec<ItemId>> {
    if k > n {
        return Err(Error::CardinalityOutOfRange { k, ground_size: n });
    }
    let mut out: Vec<ItemId> = rand::seq::index::sample(rng, n, k)
        .into_iter()
        .map(ItemId)
        .collect();
    out.sort();
    Ok(out)
}
