//! Ground sets and monotone submodular set functions.

mod check;
mod coverage;
pub mod file;
pub mod fixtures;
mod reference;
mod tabular;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use check::{check_monotone_submodular, CheckMode, CheckReport, Violation, ViolationKind};
pub use coverage::{
    build_probabilistic_coverage, synthetic_catalog, ItemMeta, ProbabilisticCoverage,
    VENICE_TOPICS,
};
pub use reference::{
    exhaustive_opt, exhaustive_opt_with_cap, gap_profile, greedy, GapProfile, GreedyTrace,
    DEFAULT_ENUMERATION_CAP,
};
pub use tabular::TabularFunction;

/// Index of an item in the ground set `{0, .., N-1}`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct ItemId(pub usize);

impl ItemId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for ItemId {
    fn from(i: usize) -> Self {
        ItemId(i)
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Convenience for tests and fixtures.
pub fn ids(indices: &[usize]) -> Vec<ItemId> {
    indices.iter().copied().map(ItemId).collect()
}

/// A non-negative set function over the ground set `{0, .., N-1}`.
///
/// Implementations are expected to be normalized (`f(∅) = 0`), monotone and
/// submodular; [`check_monotone_submodular`] verifies the latter two.
///
/// `value` and `gain` trust their arguments. The checked entry points are
/// [`SubmodularFunction::eval`] and [`SubmodularFunction::marginal`].
pub trait SubmodularFunction: Send + Sync {
    fn ground_size(&self) -> usize;

    /// `f(set)` for a set of distinct in-range items.
    fn value(&self, set: &[ItemId]) -> f64;

    /// `f(item | set) = f(set ∪ {item}) − f(set)` for `item ∉ set`.
    fn gain(&self, item: ItemId, set: &[ItemId]) -> f64 {
        let mut with = Vec::with_capacity(set.len() + 1);
        with.extend_from_slice(set);
        with.push(item);
        self.value(&with) - self.value(set)
    }

    /// Marginal gains of every item given `set`; members of `set` get 0.
    fn gains(&self, set: &[ItemId]) -> Vec<f64> {
        let n = self.ground_size();
        let mut member = vec![false; n];
        for s in set {
            member[s.0] = true;
        }
        (0..n)
            .map(|i| {
                if member[i] {
                    0.0
                } else {
                    self.gain(ItemId(i), set)
                }
            })
            .collect()
    }

    fn eval(&self, set: &[ItemId]) -> Result<f64> {
        validate_set(self.ground_size(), set)?;
        Ok(self.value(set))
    }

    fn marginal(&self, item: ItemId, set: &[ItemId]) -> Result<f64> {
        validate_set(self.ground_size(), set)?;
        validate_item(self.ground_size(), item)?;
        if set.contains(&item) {
            return Err(Error::ItemInContext(item));
        }
        Ok(self.gain(item, set))
    }
}

impl<F: SubmodularFunction + ?Sized> SubmodularFunction for &F {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }
    fn value(&self, set: &[ItemId]) -> f64 {
        (**self).value(set)
    }
    fn gain(&self, item: ItemId, set: &[ItemId]) -> f64 {
        (**self).gain(item, set)
    }
    fn gains(&self, set: &[ItemId]) -> Vec<f64> {
        (**self).gains(set)
    }
}

pub(crate) fn validate_item(ground_size: usize, item: ItemId) -> Result<()> {
    if item.0 >= ground_size {
        return Err(Error::ItemOutOfRange { item, ground_size });
    }
    Ok(())
}

pub(crate) fn validate_set(ground_size: usize, set: &[ItemId]) -> Result<()> {
    let mut seen = vec![false; ground_size];
    for &item in set {
        validate_item(ground_size, item)?;
        if std::mem::replace(&mut seen[item.0], true) {
            return Err(Error::DuplicateItem(item));
        }
    }
    Ok(())
}

/// Either of the shipped function forms, as loaded from a function file.
#[derive(Debug, Clone)]
pub enum AnyFunction {
    Coverage(ProbabilisticCoverage),
    Tabular(TabularFunction),
}

impl SubmodularFunction for AnyFunction {
    fn ground_size(&self) -> usize {
        match self {
            AnyFunction::Coverage(f) => f.ground_size(),
            AnyFunction::Tabular(f) => f.ground_size(),
        }
    }
    fn value(&self, set: &[ItemId]) -> f64 {
        match self {
            AnyFunction::Coverage(f) => f.value(set),
            AnyFunction::Tabular(f) => f.value(set),
        }
    }
    fn gain(&self, item: ItemId, set: &[ItemId]) -> f64 {
        match self {
            AnyFunction::Coverage(f) => f.gain(item, set),
            AnyFunction::Tabular(f) => f.gain(item, set),
        }
    }
    fn gains(&self, set: &[ItemId]) -> Vec<f64> {
        match self {
            AnyFunction::Coverage(f) => f.gains(set),
            AnyFunction::Tabular(f) => f.gains(set),
        }
    }
}

impl AnyFunction {
    /// Display metadata, when the function was built from an item catalog.
    pub fn items(&self) -> Option<&[ItemMeta]> {
        match self {
            AnyFunction::Coverage(f) => Some(f.items()),
            AnyFunction::Tabular(_) => None,
        }
    }
}
