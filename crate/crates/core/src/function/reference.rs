//! Noise-free reference algorithms.

use serde::Serialize;

use super::{validate_set, ItemId, SubmodularFunction};
use crate::error::{Error, Result};

pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedyTrace {
    /// Items in selection order.
    pub selected: Vec<ItemId>,
    /// Marginal gain of each pick at the time it was made.
    pub marginals: Vec<f64>,
    pub value: f64,
}

/// Classic greedy: repeatedly add the item of largest marginal gain, lowest
/// id first among ties.
pub fn greedy<F: SubmodularFunction + ?Sized>(f: &F, k: usize) -> Result<GreedyTrace> {
    let n = f.ground_size();
    if k < 1 || k > n {
        return Err(Error::CardinalityOutOfRange { k, ground_size: n });
    }
    let mut selected = Vec::with_capacity(k);
    let mut marginals = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    for _ in 0..k {
        let gains = f.gains(&selected);
        let mut best: Option<(usize, f64)> = None;
        for (i, &g) in gains.iter().enumerate() {
            if taken[i] {
                continue;
            }
            if best.is_none_or(|(_, b)| g > b) {
                best = Some((i, g));
            }
        }
        let (i, g) = best.expect("k <= n leaves a candidate");
        taken[i] = true;
        selected.push(ItemId(i));
        marginals.push(g);
    }
    let value = f.value(&selected);
    Ok(GreedyTrace {
        selected,
        marginals,
        value,
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `argmax_{|S| ≤ k} f(S)` by enumeration, with the default cap.
pub fn exhaustive_opt<F: SubmodularFunction + ?Sized>(
    f: &F,
    k: usize,
) -> Result<(Vec<ItemId>, f64)> {
    exhaustive_opt_with_cap(f, k, DEFAULT_ENUMERATION_CAP)
}

/// Enumerates every subset of size at most `k`. Ties go to the
/// lexicographically smallest id sequence.
pub fn exhaustive_opt_with_cap<F: SubmodularFunction + ?Sized>(
    f: &F,
    k: usize,
    cap: u64,
) -> Result<(Vec<ItemId>, f64)> {
    let n = f.ground_size();
    if k > n {
        return Err(Error::CardinalityOutOfRange { k, ground_size: n });
    }
    let count: u128 = (0..=k).map(|size| binomial(n, size)).sum();
    if count > cap as u128 {
        return Err(Error::EnumerationCap { count, cap });
    }
    let mut best: (Vec<ItemId>, f64) = (Vec::new(), f.value(&[]));
    let mut combo: Vec<ItemId> = Vec::with_capacity(k);
    for size in 1..=k {
        combo.clear();
        combo.extend((0..size).map(ItemId));
        loop {
            let v = f.value(&combo);
            if v > best.1 || (v == best.1 && combo < best.0) {
                best = (combo.clone(), v);
            }
            // next combination in lexicographic order
            let Some(pos) = (0..size).rev().find(|&p| combo[p].0 < n - size + p) else {
                break;
            };
            combo[pos].0 += 1;
            for q in pos + 1..size {
                combo[q] = ItemId(combo[q - 1].0 + 1);
            }
        }
    }
    Ok(best)
}

/// Sorted marginal gains, their gaps, and the per-l hardness terms that
/// govern the sample complexity of top-l identification.
///
/// `predicted_bound` evaluates
/// `k' · min_l R² H_l log(R² H_l / δ')` with the unknown constant set to 1;
/// it is a diagnostic, not a certified bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapProfile {
    /// Items ordered by decreasing marginal gain (ties by id).
    pub order: Vec<ItemId>,
    pub sorted_marginals: Vec<f64>,
    /// `gaps[l-1] = sorted[l-1] − sorted[l]`
    pub gaps: Vec<f64>,
    /// `hardness[l-1] = N · min(4/Δ_l², 1/ε'²)` for `l = 1..=k'`.
    pub hardness: Vec<f64>,
    /// `R² H_l log(R² H_l / δ')` per l.
    pub bound_terms: Vec<f64>,
    pub predicted_bound: f64,
}

impl GapProfile {
    /// Builds the profile from per-candidate marginal gains given in id
    /// order (`ids[i]` has gain `marginals[i]`).
    pub fn from_marginals(
        ids: &[ItemId],
        marginals: &[f64],
        ground_size: usize,
        epsilon_prime: f64,
        k_prime: usize,
        r: f64,
        delta_prime: f64,
    ) -> Self {
        let mut idx: Vec<usize> = (0..marginals.len()).collect();
        idx.sort_by(|&a, &b| marginals[b].total_cmp(&marginals[a]).then(ids[a].cmp(&ids[b])));
        let sorted_marginals: Vec<f64> = idx.iter().map(|&i| marginals[i]).collect();
        let gaps: Vec<f64> = sorted_marginals.windows(2).map(|w| w[0] - w[1]).collect();
        let n = ground_size as f64;
        let inv_eps2 = if epsilon_prime > 0.0 {
            1.0 / (epsilon_prime * epsilon_prime)
        } else {
            f64::INFINITY
        };
        let hardness: Vec<f64> = gaps
            .iter()
            .take(k_prime)
            .map(|&d| {
                let by_gap = if d > 0.0 { 4.0 / (d * d) } else { f64::INFINITY };
                n * by_gap.min(inv_eps2)
            })
            .collect();
        let r2 = r * r;
        let bound_terms: Vec<f64> = hardness
            .iter()
            .map(|&h| {
                if r2 == 0.0 {
                    0.0
                } else {
                    r2 * h * (r2 * h / delta_prime).ln()
                }
            })
            .collect();
        let predicted_bound = k_prime as f64
            * bound_terms
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
        GapProfile {
            order: idx.iter().map(|&i| ids[i]).collect(),
            sorted_marginals,
            gaps,
            hardness,
            bound_terms,
            predicted_bound,
        }
    }

    /// The `l` (1-based) with the smallest hardness, smallest `l` on ties.
    pub fn easiest_l(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &h) in self.hardness.iter().enumerate() {
            if best.is_none_or(|(_, b)| h < b) {
                best = Some((i + 1, h));
            }
        }
        best.map(|(l, _)| l)
    }
}

/// Exact gap profile of the marginals `f(· | context)` over `V ∖ context`.
pub fn gap_profile<F: SubmodularFunction + ?Sized>(
    f: &F,
    context: &[ItemId],
    epsilon_prime: f64,
    k_prime: usize,
    r: f64,
    delta_prime: f64,
) -> Result<GapProfile> {
    let n = f.ground_size();
    validate_set(n, context)?;
    let gains = f.gains(context);
    let ids: Vec<ItemId> = (0..n)
        .map(ItemId)
        .filter(|i| !context.contains(i))
        .collect();
    let marginals: Vec<f64> = ids.iter().map(|i| gains[i.0]).collect();
    Ok(GapProfile::from_marginals(
        &ids,
        &marginals,
        n,
        epsilon_prime,
        k_prime,
        r,
        delta_prime,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::{fixtures, ids, TabularFunction};
    use proptest::prelude::*;

    /// Independent enumerator: walk every bitmask.
    fn brute_force_opt<F: SubmodularFunction>(f: &F, k: usize) -> f64 {
        let n = f.ground_size();
        (0..1usize << n)
            .filter(|m| m.count_ones() as usize <= k)
            .map(|m| {
                let set: Vec<ItemId> = (0..n).filter(|i| m & (1 << i) != 0).map(ItemId).collect();
                f.value(&set)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn greedy_on_appendix_b_picks_a_then_b() {
        let f = fixtures::appendix_b(0.25).unwrap();
        let g = greedy(&f, 2).unwrap();
        assert_eq!(g.selected, ids(&[0, 1]));
        assert_eq!(g.value, 2.0);
        assert_eq!(g.marginals, vec![1.0, 1.0]);
    }

    #[test]
    fn greedy_k_equals_n_takes_everything() {
        let f = fixtures::venice_toy();
        let g = greedy(&f, 5).unwrap();
        let mut sorted = g.selected.clone();
        sorted.sort();
        assert_eq!(sorted, ids(&[0, 1, 2, 3, 4]));
    }

    #[test]
    fn greedy_ties_break_by_lowest_id() {
        let f = TabularFunction::from_fn(4, |s| s.len() as f64).unwrap();
        assert_eq!(greedy(&f, 4).unwrap().selected, ids(&[0, 1, 2, 3]));
    }

    #[test]
    fn greedy_rejects_bad_k() {
        let f = fixtures::appendix_b(0.25).unwrap();
        assert!(greedy(&f, 0).is_err());
        assert!(greedy(&f, 4).is_err());
    }

    #[test]
    fn exhaustive_on_appendix_b() {
        let f = fixtures::appendix_b(0.25).unwrap();
        assert_eq!(exhaustive_opt(&f, 2).unwrap(), (ids(&[0, 1]), 2.0));
        assert_eq!(exhaustive_opt(&f, 0).unwrap(), (vec![], 0.0));
    }

    #[test]
    fn exhaustive_respects_cap() {
        let f = fixtures::desk_instance(30);
        assert!(matches!(
            exhaustive_opt_with_cap(&f, 4, 1000),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn exhaustive_matches_independent_enumerator_on_random_coverage() {
        for seed in 0..5 {
            let f = fixtures::random_coverage(8, seed);
            let (set, value) = exhaustive_opt(&f, 3).unwrap();
            assert!(set.len() <= 3);
            assert!((value - brute_force_opt(&f, 3)).abs() < 1e-12);
            assert_eq!(f.value(&set), value);
        }
    }

    #[test]
    fn greedy_within_one_minus_inverse_e_on_venice_toy() {
        let f = fixtures::venice_toy();
        for k in 1..=5 {
            let g = greedy(&f, k).unwrap();
            let (_, opt) = exhaustive_opt(&f, k).unwrap();
            assert!(g.value >= (1.0 - (-1.0f64).exp()) * opt - 1e-12);
        }
    }

    #[test]
    fn gap_profile_from_given_marginals() {
        let m = [5.0, 4.0, 2.0, 1.0, 0.5];
        let p = GapProfile::from_marginals(&ids(&[0, 1, 2, 3, 4]), &m, 5, 0.1, 4, 1.0, 0.05);
        assert_eq!(p.gaps, vec![1.0, 2.0, 1.0, 0.5]);
        assert_eq!(p.sorted_marginals, m.to_vec());
        // H_l = 5 · min(4/Δ², 100)
        assert_eq!(p.hardness, vec![20.0, 5.0, 20.0, 80.0]);
        assert_eq!(p.easiest_l(), Some(2));
        let best = 5.0 * (5.0f64 / 0.05).ln();
        assert!((p.predicted_bound - 4.0 * best).abs() < 1e-9);
    }

    #[test]
    fn gap_profile_unsorted_input_is_sorted() {
        let m = [1.0, 5.0, 0.5, 4.0, 2.0];
        let p = GapProfile::from_marginals(&ids(&[0, 1, 2, 3, 4]), &m, 5, 0.0, 4, 1.0, 0.05);
        assert_eq!(p.order, ids(&[1, 3, 4, 0, 2]));
        assert_eq!(p.gaps, vec![1.0, 2.0, 1.0, 0.5]);
    }

    #[test]
    fn gap_profile_all_equal_uses_epsilon_branch() {
        let m = [0.7; 6];
        let p = GapProfile::from_marginals(&ids(&[0, 1, 2, 3, 4, 5]), &m, 6, 0.5, 3, 1.0, 0.1);
        assert!(p.gaps.iter().all(|&g| g == 0.0));
        assert!(p.hardness.iter().all(|&h| h == 6.0 / 0.25));
        let p0 = GapProfile::from_marginals(&ids(&[0, 1]), &[0.7, 0.7], 2, 0.0, 1, 1.0, 0.1);
        assert!(p0.hardness[0].is_infinite());
    }

    #[test]
    fn gap_profile_of_fig2_prefers_top_two() {
        let f = fixtures::fig2();
        let p = gap_profile(&f, &[], 0.01, 4, 1.0, 0.05).unwrap();
        assert_eq!(p.easiest_l(), Some(2));
        assert!(p.gaps[1] > 10.0 * p.gaps[0]);
        assert!(p.gaps[1] > 10.0 * p.gaps[2]);
        assert!(p.gaps[1] > 10.0 * p.gaps[3]);
    }

    #[test]
    fn gap_profile_excludes_context() {
        let f = fixtures::appendix_b(0.25).unwrap();
        let p = gap_profile(&f, &ids(&[0]), 0.0, 2, 0.0, 0.05).unwrap();
        assert_eq!(p.order, ids(&[1, 2]));
        assert_eq!(p.sorted_marginals, vec![1.0, 0.25]);
        assert_eq!(p.predicted_bound, 0.0);
    }

    proptest! {
        #[test]
        fn greedy_is_within_bound_of_opt(seed in 0u64..10_000, k in 1usize..=3) {
            let f = fixtures::random_coverage(7, seed);
            let g = greedy(&f, k).unwrap();
            let (_, opt) = exhaustive_opt(&f, k).unwrap();
            prop_assert!(g.value >= (1.0 - (-1.0f64).exp()) * opt - 1e-12);
        }

        #[test]
        fn gap_profile_sorted_and_nonnegative(m in proptest::collection::vec(0.0f64..10.0, 2..12)) {
            let idv: Vec<ItemId> = (0..m.len()).map(ItemId).collect();
            let p = GapProfile::from_marginals(&idv, &m, m.len(), 0.1, m.len() - 1, 1.0, 0.05);
            prop_assert!(p.sorted_marginals.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(p.gaps.iter().all(|&g| g >= 0.0));
            prop_assert!(p.hardness.iter().all(|h| h.is_finite()));
        }
    }
}
