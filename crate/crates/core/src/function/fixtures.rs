//! Built-in instances, addressable by selector strings such as
//! `appendixB:0.25`, `fig2`, `venice-toy`, `desk` or `desk:15`.

use super::coverage::{synthetic_catalog, ItemMeta, ProbabilisticCoverage, VENICE_TOPICS};
use super::{build_probabilistic_coverage, file, AnyFunction, TabularFunction};
use crate::error::{Error, Result};

/// Seed of the synthetic catalog behind `desk`.
pub const DESK_CATALOG_SEED: u64 = 2016;

/// Three items `{a, b, c} = {0, 1, 2}` on which competing with greedy is
/// hard: `a` and `b` are interchangeable first picks and `c` trails them by
/// `2α`, yet picking `c` first caps the value of any pair at `1.5 − α`.
pub fn appendix_b(alpha: f64) -> Result<TabularFunction> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 0.5), got {alpha}"
        )));
    }
    // bitmask order: ∅, {a}, {b}, {a,b}, {c}, {a,c}, {b,c}, {a,b,c}
    let values = [
        0.0,
        1.0,
        1.0,
        2.0,
        1.0 - 2.0 * alpha,
        1.5 - alpha,
        1.5 - alpha,
        2.0,
    ];
    TabularFunction::from_fn(3, |set| {
        values[set.iter().fold(0usize, |m, i| m | (1 << i.0))]
    })
}

/// Marginal gains of the five items of [`fig2`].
pub const FIG2_WEIGHTS: [f64; 5] = [1.0, 0.96, 0.3, 0.27, 0.24];

/// Five additive items whose gaps make top-1 and top-4 identification hard
/// and top-2 identification easy.
pub fn fig2() -> TabularFunction {
    TabularFunction::from_fn(5, |set| set.iter().map(|i| FIG2_WEIGHTS[i.0]).sum())
        .expect("five items fit a table")
}

/// Five hand-tagged Venice photos; topic weights come from the same items.
pub fn venice_toy() -> ProbabilisticCoverage {
    let topic = |name: &str| {
        VENICE_TOPICS
            .iter()
            .position(|(t, _)| *t == name)
            .expect("known topic")
    };
    let spec: [(&[&str], u64, &str); 5] = [
        (&["gondola", "canal", "water"], 1200, "gondolas on a canal"),
        (&["bridge", "rialto", "grandcanal"], 800, "rialto bridge"),
        (&["carnival", "girl"], 3000, "carnival mask"),
        (
            &["piazzasanmarco", "architecture", "night"],
            500,
            "san marco at night",
        ),
        (&["gondola", "water", "sunset"], 150, "gondola at sunset"),
    ];
    let items = spec
        .iter()
        .enumerate()
        .map(|(id, (tags, views, label))| {
            let topics: Vec<usize> = tags.iter().map(|t| topic(t)).collect();
            ItemMeta::new(id, &topics, *views).with_label(*label)
        })
        .collect();
    build_probabilistic_coverage(items, VENICE_TOPICS.len(), 20.0).expect("valid toy corpus")
}

/// Coverage instance over a seeded synthetic catalog of `n` items, with the
/// Venice topic weights. `desk_instance(60)` is the full-size instance.
pub fn desk_instance(n: usize) -> ProbabilisticCoverage {
    let weights = VENICE_TOPICS.iter().map(|(_, w)| *w).collect();
    ProbabilisticCoverage::with_topic_weights(synthetic_catalog(n, DESK_CATALOG_SEED), weights)
        .expect("synthetic catalog is valid")
}

/// Random coverage instance for property tests; weights from its own items.
pub fn random_coverage(n: usize, seed: u64) -> ProbabilisticCoverage {
    build_probabilistic_coverage(synthetic_catalog(n, seed), VENICE_TOPICS.len(), 20.0)
        .expect("synthetic catalog is valid")
}

/// Resolves a built-in selector, or loads a function file otherwise.
pub fn resolve(selector: &str) -> Result<AnyFunction> {
    let (name, arg) = match selector.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (selector, None),
    };
    let parse_arg = |what: &str| -> Result<Option<f64>> {
        arg.map(|a| {
            a.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad {what} in selector {selector}")))
        })
        .transpose()
    };
    match name {
        "appendixB" | "appendix-b" => {
            let alpha = parse_arg("alpha")?.unwrap_or(0.25);
            Ok(AnyFunction::Tabular(appendix_b(alpha)?))
        }
        "fig2" => Ok(AnyFunction::Tabular(fig2())),
        "venice-toy" => Ok(AnyFunction::Coverage(venice_toy())),
        "desk" => {
            let n = parse_arg("item count")?.map_or(30, |x| x as usize);
            if n == 0 {
                return Err(Error::InvalidParameter("desk instance needs items".into()));
            }
            Ok(AnyFunction::Coverage(desk_instance(n)))
        }
        _ => file::load(std::path::Path::new(selector)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::{check_monotone_submodular, ids, CheckMode, SubmodularFunction};

    #[test]
    fn appendix_b_table_at_quarter() {
        let f = appendix_b(0.25).unwrap();
        let expect = [
            (vec![], 0.0),
            (ids(&[0]), 1.0),
            (ids(&[1]), 1.0),
            (ids(&[2]), 0.5),
            (ids(&[0, 1]), 2.0),
            (ids(&[0, 2]), 1.25),
            (ids(&[1, 2]), 1.25),
            (ids(&[0, 1, 2]), 2.0),
        ];
        for (set, v) in expect {
            assert_eq!(f.eval(&set).unwrap(), v, "{set:?}");
        }
        assert_eq!(f.marginal(super::super::ItemId(2), &ids(&[0])).unwrap(), 0.25);
    }

    #[test]
    fn appendix_b_other_alphas() {
        let f = appendix_b(0.1).unwrap();
        assert!((f.eval(&ids(&[1, 2])).unwrap() - 1.4).abs() < 1e-12);
        let tiny = appendix_b(1e-9).unwrap();
        assert!((tiny.eval(&ids(&[2])).unwrap() - 1.0).abs() < 1e-8);
        for alpha in [0.0, 0.5, -0.1, 0.7] {
            assert!(appendix_b(alpha).is_err());
        }
    }

    #[test]
    fn appendix_b_is_monotone_submodular_across_alpha() {
        for alpha in [1e-6, 0.01, 0.1, 0.25, 0.4, 0.499] {
            let f = appendix_b(alpha).unwrap();
            assert!(check_monotone_submodular(&f, CheckMode::Exhaustive).is_clean());
        }
    }

    #[test]
    fn shipped_fixtures_are_monotone_submodular() {
        assert!(check_monotone_submodular(&fig2(), CheckMode::Exhaustive).is_clean());
        assert!(check_monotone_submodular(&venice_toy(), CheckMode::Exhaustive).is_clean());
        assert!(check_monotone_submodular(&desk_instance(12), CheckMode::Exhaustive).is_clean());
    }

    #[test]
    fn selectors_resolve() {
        assert_eq!(resolve("appendixB:0.1").unwrap().ground_size(), 3);
        assert_eq!(resolve("fig2").unwrap().ground_size(), 5);
        assert_eq!(resolve("venice-toy").unwrap().ground_size(), 5);
        assert_eq!(resolve("desk").unwrap().ground_size(), 30);
        assert_eq!(resolve("desk:15").unwrap().ground_size(), 15);
        assert_eq!(resolve("desk:60").unwrap().ground_size(), 60);
        assert!(resolve("appendixB:0.9").is_err());
        assert!(resolve("/nonexistent/function.json").is_err());
    }
}
