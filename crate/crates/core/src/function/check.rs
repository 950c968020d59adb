use rand::Rng;
use serde::Serialize;

use super::{ItemId, SubmodularFunction};
use crate::rng::algorithm_rng;

/// Largest ground set checked exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 12;
pub const DEFAULT_TRIALS: usize = 10_000;
const MAX_RECORDED: usize = 100;
const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    /// All triples `(S, S', a)` with `S ⊆ S' ⊆ V∖{a}`. Ground sets above
    /// [`EXHAUSTIVE_LIMIT`] fall back to the randomized default.
    Exhaustive,
    Randomized { trials: usize, seed: u64 },
}

impl CheckMode {
    pub fn auto(ground_size: usize) -> Self {
        if ground_size <= EXHAUSTIVE_LIMIT {
            CheckMode::Exhaustive
        } else {
            CheckMode::Randomized {
                trials: DEFAULT_TRIALS,
                seed: 0,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `f(a | S) < 0`
    Monotonicity,
    /// `f(a | S) < f(a | S')` for `S ⊆ S'`
    Submodularity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub item: ItemId,
    pub smaller: Vec<ItemId>,
    pub larger: Vec<ItemId>,
    pub gain_smaller: f64,
    pub gain_larger: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub exhaustive: bool,
    pub triples_checked: u64,
    /// Total number of violations found; only the first 100 are kept.
    pub violation_count: u64,
    pub violations: Vec<Violation>,
}

impl CheckReport {
    pub fn is_clean(&self) -> bool {
        self.violation_count == 0
    }

    fn push(&mut self, v: Violation) {
        self.violation_count += 1;
        if self.violations.len() < MAX_RECORDED {
            self.violations.push(v);
        }
    }
}

fn tol(a: f64, b: f64) -> f64 {
    TOLERANCE * (1.0 + a.abs().max(b.abs()))
}

pub fn check_monotone_submodular<F: SubmodularFunction + ?Sized>(
    f: &F,
    mode: CheckMode,
) -> CheckReport {
    let n = f.ground_size();
    match mode {
        CheckMode::Exhaustive if n <= EXHAUSTIVE_LIMIT => exhaustive(f, n),
        CheckMode::Exhaustive => randomized(f, n, DEFAULT_TRIALS, 0),
        CheckMode::Randomized { trials, seed } => randomized(f, n, trials, seed),
    }
}

fn set_of(mask: usize, n: usize) -> Vec<ItemId> {
    (0..n).filter(|i| mask & (1 << i) != 0).map(ItemId).collect()
}

fn exhaustive<F: SubmodularFunction + ?Sized>(f: &F, n: usize) -> CheckReport {
    let mut report = CheckReport {
        exhaustive: true,
        triples_checked: 0,
        violation_count: 0,
        violations: Vec::new(),
    };
    let full = (1usize << n) - 1;
    let mut gains = vec![0.0; 1 << n];
    for a in 0..n {
        let bit = 1usize << a;
        let rest = full & !bit;
        // gains[m] = f(a | m) for every m ⊆ V∖{a}
        let mut m = rest;
        loop {
            gains[m] = f.gain(ItemId(a), &set_of(m, n));
            if m == 0 {
                break;
            }
            m = (m - 1) & rest;
        }
        let mut larger = rest;
        loop {
            let g_large = gains[larger];
            if g_large < -tol(g_large, 0.0) {
                report.push(Violation {
                    kind: ViolationKind::Monotonicity,
                    item: ItemId(a),
                    smaller: set_of(larger, n),
                    larger: set_of(larger, n),
                    gain_smaller: g_large,
                    gain_larger: g_large,
                });
            }
            let mut smaller = larger;
            loop {
                report.triples_checked += 1;
                let g_small = gains[smaller];
                if g_small < g_large - tol(g_small, g_large) {
                    report.push(Violation {
                        kind: ViolationKind::Submodularity,
                        item: ItemId(a),
                        smaller: set_of(smaller, n),
                        larger: set_of(larger, n),
                        gain_smaller: g_small,
                        gain_larger: g_large,
                    });
                }
                if smaller == 0 {
                    break;
                }
                smaller = (smaller - 1) & larger;
            }
            if larger == 0 {
                break;
            }
            larger = (larger - 1) & rest;
        }
    }
    report
}

fn randomized<F: SubmodularFunction + ?Sized>(
    f: &F,
    n: usize,
    trials: usize,
    seed: u64,
) -> CheckReport {
    let mut report = CheckReport {
        exhaustive: false,
        triples_checked: 0,
        violation_count: 0,
        violations: Vec::new(),
    };
    let mut rng = algorithm_rng(seed);
    for _ in 0..trials {
        let a = ItemId(rng.random_range(0..n));
        let p_large: f64 = rng.random();
        let p_small: f64 = rng.random();
        let mut larger = Vec::new();
        let mut smaller = Vec::new();
        for i in (0..n).map(ItemId).filter(|&i| i != a) {
            if rng.random::<f64>() < p_large {
                larger.push(i);
                if rng.random::<f64>() < p_small {
                    smaller.push(i);
                }
            }
        }
        report.triples_checked += 1;
        let g_small = f.gain(a, &smaller);
        let g_large = f.gain(a, &larger);
        for (set, g) in [(&smaller, g_small), (&larger, g_large)] {
            if g < -tol(g, 0.0) {
                report.push(Violation {
                    kind: ViolationKind::Monotonicity,
                    item: a,
                    smaller: set.clone(),
                    larger: set.clone(),
                    gain_smaller: g,
                    gain_larger: g,
                });
            }
        }
        if g_small < g_large - tol(g_small, g_large) {
            report.push(Violation {
                kind: ViolationKind::Submodularity,
                item: a,
                smaller,
                larger,
                gain_smaller: g_small,
                gain_larger: g_large,
            });
        }
    }
    report
}
