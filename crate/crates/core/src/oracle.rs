//! Noisy observation models over a hidden set function.
//!
//! A value query on `(a, S)` returns `f(a | S)` plus zero-mean noise. A
//! preference query on `(a, b, S)` returns 1 when `a` is preferred, with the
//! Bradley-Terry-Luce probability `1 / (1 + exp(−β (f(a|S) − f(b|S))))`.
//! Averaging `τ` comparisons of `a` against uniformly drawn opponents gives
//! an unbiased estimate of the Borda score of `a`, which orders items the
//! same way as their marginal gains.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{validate_item, validate_set, ItemId, SubmodularFunction};
use crate::rng::{oracle_rng, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    Noiseless,
    /// Uniform on `[μ − σ², μ + σ²]`; the parameter is the half-width σ².
    UniformHalfRange { sigma2: f64 },
    Gaussian { sigma: f64 },
}

impl NoiseModel {
    /// Sub-Gaussian parameter of the centered noise.
    pub fn sub_gaussian_r(&self) -> f64 {
        match *self {
            NoiseModel::Noiseless => 0.0,
            NoiseModel::UniformHalfRange { sigma2 } => sigma2,
            NoiseModel::Gaussian { sigma } => sigma,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> f64 {
        match *self {
            NoiseModel::Noiseless => mean,
            NoiseModel::UniformHalfRange { sigma2 } => {
                let u: f64 = rng.random();
                mean + sigma2 * (2.0 * u - 1.0)
            }
            NoiseModel::Gaussian { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sigma * z
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let p = match *self {
            NoiseModel::Noiseless => 0.0,
            NoiseModel::UniformHalfRange { sigma2 } => sigma2,
            NoiseModel::Gaussian { sigma } => sigma,
        };
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise parameter must be finite and non-negative, got {p}"
            )));
        }
        Ok(())
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    /// `none`, `uniform:<σ²>` or `gaussian:<σ>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unrecognized noise model {s:?}"));
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        let value = || arg.parse::<f64>().map_err(|_| bad());
        let model = match kind {
            "none" | "noiseless" => NoiseModel::Noiseless,
            "uniform" => NoiseModel::UniformHalfRange { sigma2: value()? },
            "gaussian" => NoiseModel::Gaussian { sigma: value()? },
            _ => return Err(bad()),
        };
        model.validate()?;
        Ok(model)
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::Noiseless => write!(f, "none"),
            NoiseModel::UniformHalfRange { sigma2 } => write!(f, "uniform:{sigma2}"),
            NoiseModel::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
        }
    }
}

/// How the exploration module observes an item.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ObservationChannel {
    Value,
    /// Each observation is the mean of `tau` simulated comparisons.
    Preference { tau: u32 },
    /// Comparisons answered out of process, e.g. by a person.
    External {
        tau: u32,
        #[serde(default)]
        r_bound: Option<f64>,
    },
}

impl ObservationChannel {
    /// Cost of one observation in value-query units.
    pub fn cost_per_observation(&self) -> u64 {
        match *self {
            ObservationChannel::Value => 1,
            ObservationChannel::Preference { tau } | ObservationChannel::External { tau, .. } => {
                tau as u64
            }
        }
    }

    pub fn tau(&self) -> Option<u32> {
        match *self {
            ObservationChannel::Value => None,
            ObservationChannel::Preference { tau } | ObservationChannel::External { tau, .. } => {
                Some(tau)
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ObservationChannel::Value => "value",
            ObservationChannel::Preference { .. } => "preference",
            ObservationChannel::External { .. } => "external",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau() == Some(0) {
            return Err(Error::InvalidParameter("tau must be at least 1".into()));
        }
        Ok(())
    }
}

/// Sub-Gaussian parameter `R` of one observation on `channel`.
///
/// A preference observation is a mean of `τ` Bernoulli draws and is
/// `1/(2√τ)`-sub-Gaussian by Hoeffding's lemma; `conservative` falls back to
/// the range bound `1/2`.
pub fn sub_gaussian_r(
    channel: &ObservationChannel,
    noise: Option<&NoiseModel>,
    conservative: bool,
) -> Result<f64> {
    match *channel {
        ObservationChannel::Value => noise.map(NoiseModel::sub_gaussian_r).ok_or_else(|| {
            Error::InvalidParameter("value channel needs a noise model".into())
        }),
        ObservationChannel::Preference { tau } => {
            channel.validate()?;
            Ok(if conservative {
                0.5
            } else {
                0.5 / (tau as f64).sqrt()
            })
        }
        ObservationChannel::External { r_bound, .. } => r_bound.ok_or_else(|| {
            Error::InvalidParameter("external channel needs a configured R bound".into())
        }),
    }
}

/// Maps a slack on marginal gains to the matching slack on Borda scores
/// under a BTL model with sharpness `beta`; 0 when the model is unknown.
pub fn borda_epsilon_transform(epsilon_prime: f64, beta: Option<f64>, n: usize) -> f64 {
    match beta {
        Some(beta) if n >= 2 && beta.is_finite() => beta * epsilon_prime / (2.0 * (n - 1) as f64),
        _ => 0.0,
    }
}

/// `P(a preferred over b)` for a utility gap `f(a|S) − f(b|S)`.
pub fn btl_probability(beta: f64, gap: f64) -> f64 {
    if beta == 0.0 || gap == 0.0 {
        return 0.5;
    }
    if beta.is_infinite() {
        return if gap > 0.0 { 1.0 } else { 0.0 };
    }
    1.0 / (1.0 + (-beta * gap).exp())
}

/// Exact Borda score of `item`: its average BTL win probability against
/// every other item, members of `context` counting with gain 0.
pub fn exact_borda<F: SubmodularFunction + ?Sized>(
    f: &F,
    item: ItemId,
    context: &[ItemId],
    beta: f64,
) -> Result<f64> {
    let n = f.ground_size();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "Borda scores need at least two items".into(),
        ));
    }
    validate_set(n, context)?;
    validate_item(n, item)?;
    if context.contains(&item) {
        return Err(Error::ItemInContext(item));
    }
    let gains = f.gains(context);
    let total: f64 = (0..n)
        .filter(|&j| j != item.0)
        .map(|j| btl_probability(beta, gains[item.0] - gains[j]))
        .sum();
    Ok(total / (n - 1) as f64)
}

/// A query issued by the exploration machinery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Query {
    /// Noisy `f(item | context)`.
    Value { item: ItemId },
    /// Is `item` preferred over `opponent` in the given context? 1 or 0.
    Compare { item: ItemId, opponent: ItemId },
}

/// Anything able to answer queries: simulated oracles, scripted responders,
/// or a human behind the session service.
pub trait Responder {
    fn respond(&mut self, query: &Query, context: &[ItemId]) -> Result<f64>;
}

/// Marginal gains for the most recent context.
#[derive(Debug, Default)]
struct GainCache {
    context: Vec<ItemId>,
    gains: Vec<f64>,
}

impl GainCache {
    fn get<F: SubmodularFunction + ?Sized>(&mut self, f: &F, context: &[ItemId]) -> &[f64] {
        if self.gains.is_empty() || self.context != context {
            self.context = context.to_vec();
            self.gains = f.gains(context);
        }
        &self.gains
    }
}

/// Simulated value queries.
pub struct ValueOracle<'f> {
    f: &'f dyn SubmodularFunction,
    noise: NoiseModel,
    rng: SimRng,
    query_count: u64,
    cache: GainCache,
}

impl<'f> ValueOracle<'f> {
    pub fn new(f: &'f dyn SubmodularFunction, noise: NoiseModel, seed: u64) -> Result<Self> {
        noise.validate()?;
        Ok(ValueOracle {
            f,
            noise,
            rng: oracle_rng(seed),
            query_count: 0,
            cache: GainCache::default(),
        })
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn query_count(&self) -> u64 {
        self.query_count
    }

    /// One noisy draw with mean `f(item | context)`.
    pub fn sample_value(&mut self, item: ItemId, context: &[ItemId]) -> Result<f64> {
        let n = self.f.ground_size();
        validate_item(n, item)?;
        if context.contains(&item) {
            return Err(Error::ItemInContext(item));
        }
        if context != self.cache.context.as_slice() || self.cache.gains.is_empty() {
            validate_set(n, context)?;
        }
        let mean = self.cache.get(self.f, context)[item.0];
        self.query_count += 1;
        Ok(self.noise.sample(mean, &mut self.rng))
    }
}

impl Responder for ValueOracle<'_> {
    fn respond(&mut self, query: &Query, context: &[ItemId]) -> Result<f64> {
        match *query {
            Query::Value { item } => self.sample_value(item, context),
            Query::Compare { .. } => Err(Error::ChannelMismatch(
                "value oracle cannot answer comparisons".into(),
            )),
        }
    }
}

/// Simulated pairwise comparisons under a BTL model.
pub struct PreferenceOracle<'f> {
    f: &'f dyn SubmodularFunction,
    beta: f64,
    rng: SimRng,
    comparison_count: u64,
    cache: GainCache,
}

impl<'f> PreferenceOracle<'f> {
    /// `beta` may be `f64::INFINITY` for noise-free answers.
    pub fn new(f: &'f dyn SubmodularFunction, beta: f64, seed: u64) -> Result<Self> {
        if beta.is_nan() || beta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "beta must be non-negative, got {beta}"
            )));
        }
        Ok(PreferenceOracle {
            f,
            beta,
            rng: oracle_rng(seed),
            comparison_count: 0,
            cache: GainCache::default(),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn comparison_count(&self) -> u64 {
        self.comparison_count
    }

    /// One BTL draw: `true` when `a` is preferred over `b`. Members of the
    /// context count with gain 0.
    pub fn sample_preference(&mut self, a: ItemId, b: ItemId, context: &[ItemId]) -> Result<bool> {
        let n = self.f.ground_size();
        validate_item(n, a)?;
        validate_item(n, b)?;
        if a == b {
            return Err(Error::InvalidParameter(format!(
                "cannot compare item {a} with itself"
            )));
        }
        if context != self.cache.context.as_slice() || self.cache.gains.is_empty() {
            validate_set(n, context)?;
        }
        let gains = self.cache.get(self.f, context);
        let p = btl_probability(self.beta, gains[a.0] - gains[b.0]);
        self.comparison_count += 1;
        Ok(self.rng.random::<f64>() < p)
    }

    /// Mean of `tau` comparisons of `item` against opponents drawn
    /// uniformly with replacement from `V ∖ {item}`.
    pub fn sample_borda(&mut self, item: ItemId, context: &[ItemId], tau: u32) -> Result<f64> {
        let n = self.f.ground_size();
        if tau == 0 {
            return Err(Error::InvalidParameter("tau must be at least 1".into()));
        }
        if n < 2 {
            return Err(Error::InvalidParameter(
                "Borda scores need at least two items".into(),
            ));
        }
        validate_item(n, item)?;
        let mut wins = 0u32;
        for _ in 0..tau {
            let mut j = self.rng.random_range(0..n - 1);
            if j >= item.0 {
                j += 1;
            }
            wins += self.sample_preference(item, ItemId(j), context)? as u32;
        }
        Ok(wins as f64 / tau as f64)
    }
}

impl Responder for PreferenceOracle<'_> {
    fn respond(&mut self, query: &Query, context: &[ItemId]) -> Result<f64> {
        match *query {
            Query::Compare { item, opponent } => {
                Ok(self.sample_preference(item, opponent, context)? as u8 as f64)
            }
            Query::Value { .. } => Err(Error::ChannelMismatch(
                "preference oracle cannot answer value queries".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::{fixtures, ids};

    /// Brute-force Borda: the BTL formula written out per opponent.
    fn brute_force_borda(f: &dyn SubmodularFunction, i: usize, ctx: &[ItemId], beta: f64) -> f64 {
        let n = f.ground_size();
        let gain = |j: usize| {
            if ctx.contains(&ItemId(j)) {
                0.0
            } else {
                let mut with = ctx.to_vec();
                with.push(ItemId(j));
                f.value(&with) - f.value(ctx)
            }
        };
        let mut s = 0.0;
        for j in 0..n {
            if j != i {
                s += 1.0 / (1.0 + (-beta * (gain(i) - gain(j))).exp());
            }
        }
        s / (n as f64 - 1.0)
    }

    #[test]
    fn noiseless_value_is_exact_marginal() {
        let f = fixtures::appendix_b(0.25).unwrap();
        let mut o = ValueOracle::new(&f, NoiseModel::Noiseless, 1).unwrap();
        assert_eq!(o.sample_value(ItemId(0), &[]).unwrap(), 1.0);
        let mut z = ValueOracle::new(&f, NoiseModel::UniformHalfRange { sigma2: 0.0 }, 1).unwrap();
        assert_eq!(z.sample_value(ItemId(2), &ids(&[0])).unwrap(), 0.25);
        assert_eq!(o.query_count(), 1);
    }

    #[test]
    fn value_oracle_rejects_member() {
        let f = fixtures::appendix_b(0.25).unwrap();
        let mut o = ValueOracle::new(&f, NoiseModel::Noiseless, 1).unwrap();
        assert!(matches!(
            o.sample_value(ItemId(0), &ids(&[0])),
            Err(Error::ItemInContext(_))
        ));
        assert_eq!(o.query_count(), 0);
    }

    #[test]
    fn uniform_noise_is_unbiased_and_bounded() {
        let f = fixtures::appendix_b(0.25).unwrap();
        let mut o = ValueOracle::new(&f, NoiseModel::UniformHalfRange { sigma2: 5.0 }, 42).unwrap();
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let x = o.sample_value(ItemId(2), &[]).unwrap();
            assert!((0.5 - 5.0..=0.5 + 5.0).contains(&x));
            sum += x;
        }
        let stderr = 5.0 / (3.0 * n as f64).sqrt();
        assert!((sum / n as f64 - 0.5).abs() <= 3.0 * stderr);
        assert_eq!(o.query_count(), n);
    }

    #[test]
    fn gaussian_noise_is_unbiased() {
        let f = fixtures::venice_toy();
        let mu = f.marginal(ItemId(1), &ids(&[0])).unwrap();
        let mut o = ValueOracle::new(&f, NoiseModel::Gaussian { sigma: 2.0 }, 3).unwrap();
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| o.sample_value(ItemId(1), &ids(&[0])).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean - mu).abs() <= 3.0 * 2.0 / (n as f64).sqrt());
    }

    #[test]
    fn seeded_streams_repeat() {
        let f = fixtures::venice_toy();
        let draw = |seed| {
            let mut o = ValueOracle::new(&f, NoiseModel::UniformHalfRange { sigma2: 1.0 }, seed).unwrap();
            (0..20)
                .map(|i| o.sample_value(ItemId(i % 5), &[]).unwrap().to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn btl_probabilities() {
        assert_eq!(btl_probability(3.0, 0.0), 0.5);
        assert_eq!(btl_probability(0.0, 7.0), 0.5);
        assert!((btl_probability(2.0, 1.0) - 0.880_797_077_977_882_3).abs() < 1e-15);
        assert_eq!(btl_probability(f64::INFINITY, 0.1), 1.0);
        assert_eq!(btl_probability(f64::INFINITY, -0.1), 0.0);
    }

    #[test]
    fn preference_rejects_self_comparison() {
        let f = fixtures::venice_toy();
        let mut o = PreferenceOracle::new(&f, 1.0, 0).unwrap();
        assert!(o.sample_preference(ItemId(1), ItemId(1), &[]).is_err());
    }

    #[test]
    fn preference_frequency_matches_btl() {
        let f = fixtures::fig2();
        let mut o = PreferenceOracle::new(&f, 2.0, 5).unwrap();
        let n = 100_000;
        let wins = (0..n)
            .filter(|_| o.sample_preference(ItemId(0), ItemId(2), &[]).unwrap())
            .count();
        let p = btl_probability(2.0, 1.0 - 0.3);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((wins as f64 / n as f64 - p).abs() <= 3.0 * se);
        assert_eq!(o.comparison_count(), n as u64);
    }

    #[test]
    fn exact_borda_matches_brute_force() {
        let fs: Vec<Box<dyn SubmodularFunction>> = vec![
            Box::new(fixtures::appendix_b(0.25).unwrap()),
            Box::new(fixtures::fig2()),
            Box::new(fixtures::venice_toy()),
            Box::new(fixtures::random_coverage(8, 4)),
        ];
        for f in &fs {
            let n = f.ground_size();
            for ctx in [vec![], ids(&[1]), ids(&[0, 2])] {
                for beta in [0.0, 0.5, 2.0, 10.0] {
                    for i in (0..n).filter(|i| !ctx.contains(&ItemId(*i))) {
                        let e = exact_borda(f.as_ref(), ItemId(i), &ctx, beta).unwrap();
                        let b = brute_force_borda(f.as_ref(), i, &ctx, beta);
                        assert!((e - b).abs() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn exact_borda_special_cases() {
        let f = fixtures::appendix_b(0.25).unwrap();
        let expect = 0.5 * (0.5 + 1.0 / (1.0 + (-0.5f64).exp()));
        assert!((exact_borda(&f, ItemId(0), &[], 1.0).unwrap() - expect).abs() < 1e-15);
        for i in 0..3 {
            assert_eq!(exact_borda(&f, ItemId(i), &[], 0.0).unwrap(), 0.5);
        }
        let fig = fixtures::fig2();
        assert_eq!(exact_borda(&fig, ItemId(0), &[], f64::INFINITY).unwrap(), 1.0);
        let single = crate::function::TabularFunction::from_fn(1, |s| s.len() as f64).unwrap();
        assert!(exact_borda(&single, ItemId(0), &[], 1.0).is_err());
        assert!(exact_borda(&f, ItemId(0), &ids(&[0]), 1.0).is_err());
    }

    #[test]
    fn borda_order_matches_marginal_order() {
        let f = fixtures::desk_instance(20);
        let ctx = ids(&[3, 11]);
        let gains = f.gains(&ctx);
        let cands: Vec<usize> = (0..20).filter(|i| !ctx.contains(&ItemId(*i))).collect();
        for beta in [0.1, 1.0, 5.0] {
            let borda: Vec<f64> = cands
                .iter()
                .map(|&i| exact_borda(&f, ItemId(i), &ctx, beta).unwrap())
                .collect();
            for a in 0..cands.len() {
                for b in 0..cands.len() {
                    if gains[cands[a]] > gains[cands[b]] {
                        assert!(borda[a] > borda[b]);
                    }
                }
            }
        }
    }

    #[test]
    fn sample_borda_properties() {
        let f = fixtures::fig2();
        let mut o = PreferenceOracle::new(&f, 1.0, 8).unwrap();
        for _ in 0..50 {
            let x = o.sample_borda(ItemId(1), &[], 1).unwrap();
            assert!(x == 0.0 || x == 1.0);
        }
        assert_eq!(o.comparison_count(), 50);
        o.sample_borda(ItemId(1), &[], 4).unwrap();
        assert_eq!(o.comparison_count(), 54);
        let mut sharp = PreferenceOracle::new(&f, f64::INFINITY, 8).unwrap();
        for _ in 0..50 {
            assert_eq!(sharp.sample_borda(ItemId(0), &[], 3).unwrap(), 1.0);
        }
    }

    #[test]
    fn borda_epsilon() {
        let e = borda_epsilon_transform(0.1 / 6.0, Some(0.5), 60);
        assert!((e - 7.062_146_892_655_367e-5).abs() < 1e-15);
        assert_eq!(borda_epsilon_transform(0.0, Some(0.5), 60), 0.0);
        assert_eq!(borda_epsilon_transform(0.1, None, 60), 0.0);
    }

    #[test]
    fn sub_gaussian_parameters() {
        let u = NoiseModel::UniformHalfRange { sigma2: 10.0 };
        assert_eq!(sub_gaussian_r(&ObservationChannel::Value, Some(&u), false).unwrap(), 10.0);
        let g = NoiseModel::Gaussian { sigma: 0.3 };
        assert_eq!(sub_gaussian_r(&ObservationChannel::Value, Some(&g), false).unwrap(), 0.3);
        let p1 = ObservationChannel::Preference { tau: 1 };
        let p4 = ObservationChannel::Preference { tau: 4 };
        assert_eq!(sub_gaussian_r(&p1, None, false).unwrap(), 0.5);
        assert_eq!(sub_gaussian_r(&p4, None, false).unwrap(), 0.25);
        assert_eq!(sub_gaussian_r(&p4, None, true).unwrap(), 0.5);
        let ext = ObservationChannel::External { tau: 3, r_bound: None };
        assert!(sub_gaussian_r(&ext, None, false).is_err());
        let ext = ObservationChannel::External { tau: 3, r_bound: Some(0.4) };
        assert_eq!(sub_gaussian_r(&ext, None, false).unwrap(), 0.4);
        assert_eq!(ext.cost_per_observation(), 3);
        assert_eq!(ObservationChannel::Value.cost_per_observation(), 1);
    }

    #[test]
    fn noise_model_parsing() {
        assert_eq!("none".parse::<NoiseModel>().unwrap(), NoiseModel::Noiseless);
        assert_eq!(
            "uniform:0.1".parse::<NoiseModel>().unwrap(),
            NoiseModel::UniformHalfRange { sigma2: 0.1 }
        );
        assert!("uniform:-1".parse::<NoiseModel>().is_err());
        assert!("laplace:1".parse::<NoiseModel>().is_err());
        let m = NoiseModel::Gaussian { sigma: 2.5 };
        assert_eq!(m.to_string().parse::<NoiseModel>().unwrap(), m);
    }
}
