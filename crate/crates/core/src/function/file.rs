//! JSON function files.
//!
//! ```json
//! {"type":"coverage","weight_total":20,"topics":20,"items":[{"id":0,"topics":[0,3],"tag_count":2,"view_count":120,"label":"...","image_url":"..."}]}
//! {"type":"tabular","n":3,"values":[{"set":[0,1],"value":2.0}]}
//! ```
//!
//! A coverage file may carry an explicit `weights` array (one entry per
//! topic); otherwise the weights are derived from the items. Structural
//! invariants are enforced on load; monotonicity and submodularity are left
//! to [`check_monotone_submodular`](super::check_monotone_submodular).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    build_probabilistic_coverage, AnyFunction, ItemId, ItemMeta, ProbabilisticCoverage,
    TabularFunction,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FunctionFile {
    Coverage {
        weight_total: f64,
        topics: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
        items: Vec<ItemMeta>,
    },
    Tabular {
        n: usize,
        values: Vec<TableEntry>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableEntry {
    pub set: Vec<ItemId>,
    pub value: f64,
}

impl FunctionFile {
    pub fn build(self) -> Result<AnyFunction> {
        match self {
            FunctionFile::Coverage {
                weight_total,
                topics,
                weights,
                items,
            } => {
                let f = match weights {
                    Some(w) => {
                        if w.len() != topics {
                            return Err(Error::InvalidFunction(format!(
                                "{} weights for {topics} topics",
                                w.len()
                            )));
                        }
                        ProbabilisticCoverage::with_topic_weights(items, w)?
                    }
                    None => build_probabilistic_coverage(items, topics, weight_total)?,
                };
                Ok(AnyFunction::Coverage(f))
            }
            FunctionFile::Tabular { n, values } => {
                let mut entries = Vec::with_capacity(values.len());
                for e in values {
                    let mut set = e.set;
                    set.sort();
                    entries.push((set, e.value));
                }
                Ok(AnyFunction::Tabular(TabularFunction::from_entries(
                    n, entries,
                )?))
            }
        }
    }

    pub fn from_function(f: &AnyFunction) -> Self {
        match f {
            AnyFunction::Coverage(c) => FunctionFile::Coverage {
                weight_total: c.topic_weights().iter().sum(),
                topics: c.topic_count(),
                weights: Some(c.topic_weights().to_vec()),
                items: c.items().to_vec(),
            },
            AnyFunction::Tabular(t) => FunctionFile::Tabular {
                n: super::SubmodularFunction::ground_size(t),
                values: t
                    .entries()
                    .map(|(set, value)| TableEntry { set, value })
                    .collect(),
            },
        }
    }
}

pub fn parse(json: &str) -> Result<AnyFunction> {
    serde_json::from_str::<FunctionFile>(json)?.build()
}

pub fn load(path: &Path) -> Result<AnyFunction> {
    parse(&fs::read_to_string(path)?)
}

pub fn to_json(f: &AnyFunction) -> Result<String> {
    Ok(serde_json::to_string_pretty(&FunctionFile::from_function(f))?)
}

pub fn save(f: &AnyFunction, path: &Path) -> Result<()> {
    fs::write(path, to_json(f)?)?;
    Ok(())
}
