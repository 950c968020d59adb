use std::collections::BTreeMap;

use super::{ItemId, SubmodularFunction};
use crate::error::{Error, Result};

/// Largest ground set a table may describe.
pub const MAX_TABULAR_ITEMS: usize = 20;

/// A set function given explicitly on every subset of a small ground set.
///
/// Values are stored by bitmask; the canonical external key of a subset is
/// its sorted id list.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularFunction {
    n: usize,
    values: Vec<f64>,
}

fn mask_of(set: &[ItemId]) -> usize {
    set.iter().fold(0usize, |m, i| m | (1 << i.0))
}

fn members(n: usize, mask: usize) -> Vec<ItemId> {
    (0..n).filter(|i| mask & (1 << i) != 0).map(ItemId).collect()
}

impl TabularFunction {
    pub fn from_fn(n: usize, mut f: impl FnMut(&[ItemId]) -> f64) -> Result<Self> {
        check_size(n)?;
        let values = (0..1usize << n).map(|mask| f(&members(n, mask))).collect();
        Ok(TabularFunction { n, values })
    }

    /// Builds a table from `(subset, value)` entries, which must cover every
    /// subset exactly once.
    pub fn from_entries(
        n: usize,
        entries: impl IntoIterator<Item = (Vec<ItemId>, f64)>,
    ) -> Result<Self> {
        check_size(n)?;
        let mut table: BTreeMap<usize, f64> = BTreeMap::new();
        for (set, value) in entries {
            super::validate_set(n, &set).map_err(|e| Error::InvalidFunction(e.to_string()))?;
            if !value.is_finite() {
                return Err(Error::InvalidFunction(format!(
                    "value of {set:?} is not finite"
                )));
            }
            if table.insert(mask_of(&set), value).is_some() {
                return Err(Error::InvalidFunction(format!(
                    "subset {:?} listed twice",
                    set.iter().map(|i| i.0).collect::<Vec<_>>()
                )));
            }
        }
        if table.len() != 1 << n {
            let missing = (0..1usize << n)
                .find(|m| !table.contains_key(m))
                .map(|m| members(n, m))
                .unwrap_or_default();
            return Err(Error::InvalidFunction(format!(
                "table is incomplete: {} of {} subsets given, e.g. {:?} missing",
                table.len(),
                1usize << n,
                missing.iter().map(|i| i.0).collect::<Vec<_>>()
            )));
        }
        Ok(TabularFunction {
            n,
            values: table.into_values().collect(),
        })
    }

    /// Every `(sorted subset, value)` pair in bitmask order.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<ItemId>, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(mask, &v)| (members(self.n, mask), v))
    }

    /// Overwrites one entry; used to build counterexamples.
    pub fn set_value(&mut self, set: &[ItemId], value: f64) {
        self.values[mask_of(set)] = value;
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_TABULAR_ITEMS {
        return Err(Error::InvalidFunction(format!(
            "tabular functions support 1..={MAX_TABULAR_ITEMS} items, got {n}"
        )));
    }
    Ok(())
}

impl SubmodularFunction for TabularFunction {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn value(&self, set: &[ItemId]) -> f64 {
        self.values[mask_of(set)]
    }

    fn gain(&self, item: ItemId, set: &[ItemId]) -> f64 {
        let mask = mask_of(set);
        self.values[mask | (1 << item.0)] - self.values[mask]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::ids;

    #[test]
    fn rejects_incomplete_table() {
        let err = TabularFunction::from_entries(2, vec![(vec![], 0.0), (ids(&[0]), 1.0)]);
        assert!(matches!(err, Err(Error::InvalidFunction(_))));
    }

    #[test]
    fn rejects_duplicate_entry() {
        let entries = vec![
            (vec![], 0.0),
            (ids(&[0]), 1.0),
            (ids(&[0]), 1.0),
            (ids(&[1]), 1.0),
        ];
        assert!(TabularFunction::from_entries(2, entries).is_err());
    }

    #[test]
    fn entries_round_trip() {
        let f = TabularFunction::from_fn(3, |s| s.len() as f64).unwrap();
        let g = TabularFunction::from_entries(3, f.entries()).unwrap();
        assert_eq!(f, g);
    }
}
