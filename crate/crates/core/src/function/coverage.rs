//! Weighted probabilistic coverage over topics.
//!
//! Each item `s` carries a set of topics `T_s`, its tag count `n_s = |T_s|`
//! and a view count `v_s`. Topic weights follow the topic frequencies of the
//! corpus and the per-topic item scores are `log(v_s) / n_s` for the item's
//! topics, normalized jointly so the largest score over all (topic, item)
//! pairs is 1. A set covers topic `j` with probability
//! `1 − Π_{s∈S} (1 − f'_j(s))`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ItemId, SubmodularFunction};
use crate::error::{Error, Result};
use crate::rng::algorithm_rng;

/// Topic table of a Venice image corpus: the 20 most frequent tags and their
/// importance weights (they sum to 20 up to rounding).
pub const VENICE_TOPICS: [(&str, f64); 20] = [
    ("gondola", 1.91),
    ("water", 1.91),
    ("canal", 1.47),
    ("bridge", 1.32),
    ("art", 1.18),
    ("rialto", 1.18),
    ("ponte", 1.03),
    ("piazzasanmarco", 0.88),
    ("bw", 0.88),
    ("street", 0.88),
    ("night", 0.74),
    ("murano", 0.74),
    ("blackwhite", 0.74),
    ("boat", 0.74),
    ("blue", 0.74),
    ("grandcanal", 0.74),
    ("girl", 0.74),
    ("carnival", 0.74),
    ("architecture", 0.74),
    ("sunset", 0.74),
];

/// Catalog entry: topic membership plus optional display fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemMeta {
    pub id: ItemId,
    pub topics: Vec<usize>,
    pub tag_count: usize,
    pub view_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_url: Option<String>,
}

impl ItemMeta {
    pub fn new(id: usize, topics: &[usize], view_count: u64) -> Self {
        let mut topics = topics.to_vec();
        topics.sort_unstable();
        topics.dedup();
        ItemMeta {
            id: ItemId(id),
            tag_count: topics.len(),
            topics,
            view_count,
            label: None,
            image_url: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

#[derive(Debug, Clone)]
pub struct ProbabilisticCoverage {
    items: Vec<ItemMeta>,
    topic_weights: Vec<f64>,
    /// Row-major `[item][topic]` coverage probabilities in `[0, 1]`.
    scores: Vec<f64>,
    topic_count: usize,
}

/// Builds the coverage function with topic weights derived from the same
/// items, scaled to sum to `weight_total`.
pub fn build_probabilistic_coverage(
    items: Vec<ItemMeta>,
    topic_count: usize,
    weight_total: f64,
) -> Result<ProbabilisticCoverage> {
    validate_items(&items, topic_count)?;
    if !(weight_total.is_finite() && weight_total > 0.0) {
        return Err(Error::InvalidFunction(format!(
            "weight total must be positive, got {weight_total}"
        )));
    }
    let mut frequency = vec![0.0; topic_count];
    let mut tag_total = 0.0;
    for item in &items {
        for &j in &item.topics {
            frequency[j] += 1.0;
        }
        tag_total += item.tag_count as f64;
    }
    let raw: Vec<f64> = frequency.iter().map(|c| c / tag_total).collect();
    let raw_sum: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| weight_total * w / raw_sum).collect();
    ProbabilisticCoverage::assemble(items, weights)
}

fn validate_items(items: &[ItemMeta], topic_count: usize) -> Result<()> {
    if items.is_empty() {
        return Err(Error::InvalidFunction("empty item catalog".into()));
    }
    for (pos, item) in items.iter().enumerate() {
        if item.id.0 != pos {
            return Err(Error::InvalidFunction(format!(
                "item at position {pos} has id {}",
                item.id
            )));
        }
        if item.view_count < 1 {
            return Err(Error::InvalidFunction(format!(
                "item {pos} has view count 0"
            )));
        }
        if item.tag_count != item.topics.len() {
            return Err(Error::InvalidFunction(format!(
                "item {pos} has tag count {} but {} topics",
                item.tag_count,
                item.topics.len()
            )));
        }
        let mut sorted = item.topics.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != item.topics.len() {
            return Err(Error::InvalidFunction(format!(
                "item {pos} lists a topic twice"
            )));
        }
        if let Some(&j) = item.topics.iter().find(|&&j| j >= topic_count) {
            return Err(Error::InvalidFunction(format!(
                "item {pos} has topic {j} outside [0, {topic_count})"
            )));
        }
    }
    if items.iter().all(|item| item.topics.is_empty()) {
        return Err(Error::InvalidFunction("no item has any topic".into()));
    }
    Ok(())
}

impl ProbabilisticCoverage {
    /// Coverage function whose topic weights come from elsewhere, e.g. a
    /// larger training corpus; the weight vector fixes the topic count.
    pub fn with_topic_weights(items: Vec<ItemMeta>, topic_weights: Vec<f64>) -> Result<Self> {
        validate_items(&items, topic_weights.len())?;
        if topic_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidFunction(
                "topic weights must be finite and non-negative".into(),
            ));
        }
        Self::assemble(items, topic_weights)
    }

    fn assemble(items: Vec<ItemMeta>, topic_weights: Vec<f64>) -> Result<Self> {
        let topic_count = topic_weights.len();
        let mut scores = vec![0.0; items.len() * topic_count];
        let mut max = 0.0f64;
        for (s, item) in items.iter().enumerate() {
            if item.tag_count == 0 {
                continue;
            }
            let raw = (item.view_count as f64).ln() / item.tag_count as f64;
            for &j in &item.topics {
                scores[s * topic_count + j] = raw;
                max = max.max(raw);
            }
        }
        if max <= 0.0 {
            return Err(Error::InvalidFunction(
                "every item score is zero (all tagged items have view count 1)".into(),
            ));
        }
        for x in &mut scores {
            *x /= max;
        }
        Ok(ProbabilisticCoverage {
            items,
            topic_weights,
            scores,
            topic_count,
        })
    }

    pub fn items(&self) -> &[ItemMeta] {
        &self.items
    }

    pub fn topic_weights(&self) -> &[f64] {
        &self.topic_weights
    }

    pub fn topic_count(&self) -> usize {
        self.topic_count
    }

    /// `f'_j(s)`
    pub fn item_topic_score(&self, item: ItemId, topic: usize) -> f64 {
        self.scores[item.0 * self.topic_count + topic]
    }

    fn row(&self, item: ItemId) -> &[f64] {
        let start = item.0 * self.topic_count;
        &self.scores[start..start + self.topic_count]
    }

    /// Per-topic probability that `set` leaves the topic uncovered.
    fn uncovered(&self, set: &[ItemId]) -> Vec<f64> {
        let mut residual = vec![1.0; self.topic_count];
        for &s in set {
            for (r, p) in residual.iter_mut().zip(self.row(s)) {
                *r *= 1.0 - p;
            }
        }
        residual
    }
}

impl SubmodularFunction for ProbabilisticCoverage {
    fn ground_size(&self) -> usize {
        self.items.len()
    }

    fn value(&self, set: &[ItemId]) -> f64 {
        self.uncovered(set)
            .iter()
            .zip(&self.topic_weights)
            .map(|(r, w)| w * (1.0 - r))
            .sum()
    }

    fn gain(&self, item: ItemId, set: &[ItemId]) -> f64 {
        let residual = self.uncovered(set);
        self.row(item)
            .iter()
            .zip(&residual)
            .zip(&self.topic_weights)
            .map(|((p, r), w)| w * p * r)
            .sum()
    }

    fn gains(&self, set: &[ItemId]) -> Vec<f64> {
        let residual = self.uncovered(set);
        let weighted: Vec<f64> = residual
            .iter()
            .zip(&self.topic_weights)
            .map(|(r, w)| r * w)
            .collect();
        let mut out: Vec<f64> = (0..self.items.len())
            .map(|s| {
                self.row(ItemId(s))
                    .iter()
                    .zip(&weighted)
                    .map(|(p, rw)| p * rw)
                    .sum()
            })
            .collect();
        for s in set {
            out[s.0] = 0.0;
        }
        out
    }
}

/// A seeded Venice-like catalog: each item draws one to four topics with
/// probability proportional to the [`VENICE_TOPICS`] weights and a view count
/// log-uniform in `[10, 100000]`.
pub fn synthetic_catalog(n: usize, seed: u64) -> Vec<ItemMeta> {
    let mut rng = algorithm_rng(seed);
    (0..n)
        .map(|id| {
            let tags = rng.random_range(1..=4usize);
            let mut remaining: Vec<usize> = (0..VENICE_TOPICS.len()).collect();
            let mut topics = Vec::with_capacity(tags);
            for _ in 0..tags {
                let total: f64 = remaining.iter().map(|&j| VENICE_TOPICS[j].1).sum();
                let mut u = rng.random::<f64>() * total;
                let mut pick = remaining.len() - 1;
                for (pos, &j) in remaining.iter().enumerate() {
                    u -= VENICE_TOPICS[j].1;
                    if u < 0.0 {
                        pick = pos;
                        break;
                    }
                }
                topics.push(remaining.swap_remove(pick));
            }
            let log_views = rng.random_range(10f64.ln()..100_000f64.ln());
            let views = log_views.exp().round().max(2.0) as u64;
            let label = topics
                .iter()
                .map(|&j| VENICE_TOPICS[j].0)
                .collect::<Vec<_>>()
                .join(" ");
            ItemMeta::new(id, &topics, views).with_label(format!("#{id} {label}"))
        })
        .collect()
}
