//! Folksonomy tag recommenders behind a single scoring interface.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::activation::{activation, base_level, context_profile, DecayParams};
use crate::data::{Folksonomy, Timestamp};
use crate::error::{Error, Result};

/// Item -> score. Ordered so that every reduction over it is deterministic.
pub type Scores = BTreeMap<String, f64>;

/// Top-k ranking ordered by score descending, then item id ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredList {
    pub items: Vec<(String, f64)>,
    pub k: usize,
}

impl ScoredList {
    pub fn top_k(scores: &Scores, k: usize) -> Self {
        let mut items: Vec<(String, f64)> = scores.iter().map(|(t, &s)| (t.clone(), s)).collect();
        items.sort_by(rank_order);
        items.truncate(k);
        ScoredList { items, k }
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|(t, _)| t.as_str())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// 0-based rank of `item`, if present.
    pub fn position(&self, item: &str) -> Option<usize> {
        self.items.iter().position(|(t, _)| t == item)
    }
}

fn rank_order(a: &(String, f64), b: &(String, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

/// Full ranking of a score map (no truncation).
pub fn ranking(scores: &Scores) -> Vec<String> {
    ScoredList::top_k(scores, usize::MAX)
        .items
        .into_iter()
        .map(|(t, _)| t)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridParams {
    /// Weight of the personal component; `1 - beta` goes to popularity.
    pub beta: f64,
    pub cf_neighbors: usize,
}

impl Default for HybridParams {
    fn default() -> Self {
        HybridParams {
            beta: 0.5,
            cf_neighbors: 20,
        }
    }
}

impl HybridParams {
    pub fn validate(&self) -> Result<()> {
        check_weight("beta", self.beta)?;
        if self.cf_neighbors == 0 {
            return Err(Error::param("cf_neighbors", "must be >= 1"));
        }
        Ok(())
    }
}

pub(crate) fn check_weight(name: &'static str, w: f64) -> Result<()> {
    if (0.0..=1.0).contains(&w) {
        Ok(())
    } else {
        Err(Error::param(name, format!("must lie in [0, 1], got {w}")))
    }
}

/// Overflow-safe softmax over the map's values.
pub fn softmax_norm(scores: &Scores) -> Scores {
    let Some(max) = scores.values().copied().reduce(f64::max) else {
        return Scores::new();
    };
    let exps: Vec<f64> = scores.values().map(|&s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    scores
        .keys()
        .zip(exps)
        .map(|(k, e)| (k.clone(), e / total))
        .collect()
}

/// `weight * a + (1 - weight) * b` over the union of keys; a missing key
/// counts as 0. A side with zero weight contributes no keys.
pub fn linear_mix(a: &Scores, b: &Scores, weight: f64) -> Scores {
    let mut out = Scores::new();
    if weight > 0.0 {
        for k in a.keys() {
            out.insert(k.clone(), 0.0);
        }
    }
    if weight < 1.0 {
        for k in b.keys() {
            out.insert(k.clone(), 0.0);
        }
    }
    for (k, v) in out.iter_mut() {
        let x = a.get(k).copied().unwrap_or(0.0);
        let y = b.get(k).copied().unwrap_or(0.0);
        *v = weight * x + (1.0 - weight) * y;
    }
    out
}

/// Softmax-normalize both components, then mix linearly.
pub fn softmax_mix(a: &Scores, b: &Scores, weight: f64) -> Scores {
    linear_mix(&softmax_norm(a), &softmax_norm(b), weight)
}

fn counts_to_scores(counts: Option<&BTreeMap<String, usize>>) -> Scores {
    counts
        .into_iter()
        .flatten()
        .map(|(t, &c)| (t.clone(), c as f64))
        .collect()
}

/// MP_u: how many of the user's posts carry each tag.
pub fn score_mp_u(train: &Folksonomy, user: &str) -> Scores {
    counts_to_scores(train.user_tags(user))
}

/// MP_r: how many posts on the resource carry each tag.
pub fn score_mp_r(train: &Folksonomy, resource: &str) -> Scores {
    counts_to_scores(train.resource_tags(resource))
}

pub fn score_mp_ur(train: &Folksonomy, user: &str, resource: &str, beta: f64) -> Scores {
    softmax_mix(&score_mp_u(train, user), &score_mp_r(train, resource), beta)
}

/// Occurrence times per tag for `user`, oldest first, ignoring anything
/// after `now`.
pub fn user_tag_history(
    train: &Folksonomy,
    user: &str,
    now: Timestamp,
) -> BTreeMap<String, Vec<Timestamp>> {
    let mut hist: BTreeMap<String, Vec<Timestamp>> = BTreeMap::new();
    for post in train.user_posts(user).filter(|p| p.timestamp <= now) {
        for tag in &post.tags {
            hist.entry(tag.clone()).or_default().push(post.timestamp);
        }
    }
    hist
}

pub(crate) fn base_levels(
    hist: &BTreeMap<String, Vec<Timestamp>>,
    now: Timestamp,
    params: &DecayParams,
) -> Scores {
    hist.iter()
        .map(|(tag, times)| {
            let b = base_level(times, now, params).expect("non-empty history, times <= now");
            (tag.clone(), b)
        })
        .collect()
}

/// BLL: base-level activation of each tag in the user's history.
pub fn score_bll(train: &Folksonomy, user: &str, now: Timestamp, params: &DecayParams) -> Scores {
    base_levels(&user_tag_history(train, user, now), now, params)
}

/// BLL_AC: base level plus associative activation from the resource's tags,
/// over the user's tags and the resource's tags.
pub fn score_bll_ac(
    train: &Folksonomy,
    user: &str,
    resource: &str,
    now: Timestamp,
    params: &DecayParams,
) -> Scores {
    let base = score_bll(train, user, now, params);
    let ctx = context_profile(train, resource);
    let mut candidates: BTreeSet<&str> = base.keys().map(String::as_str).collect();
    candidates.extend(ctx.elements.iter().map(|(t, _)| t.as_str()));
    candidates
        .into_iter()
        .map(|tag| {
            let a = activation(base.get(tag).copied(), &ctx, train, tag);
            (tag.to_string(), a)
        })
        .collect()
}

/// BLL_AC+MP_r: BLL_AC mixed with resource popularity.
pub fn score_bll_ac_mp_r(
    train: &Folksonomy,
    user: &str,
    resource: &str,
    now: Timestamp,
    params: &DecayParams,
    hybrid: &HybridParams,
) -> Scores {
    softmax_mix(
        &score_bll_ac(train, user, resource, now, params),
        &score_mp_r(train, resource),
        hybrid.beta,
    )
}

/// Cosine similarity of two binary tag-incidence vectors.
fn binary_cosine(a: &BTreeMap<String, usize>, b: &BTreeMap<String, usize>) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let shared = small.keys().filter(|t| large.contains_key(*t)).count();
    shared as f64 / ((a.len() * b.len()) as f64).sqrt()
}

/// User-based collaborative filtering.
///
/// Neighbors are the `neighbors` users most similar to `user` (cosine over
/// binary user-tag vectors) among those who bookmarked `resource`; each
/// contributes its similarity to the tags it put on the resource. If nobody
/// else bookmarked the resource, the most similar users overall are used and
/// contribute all their tags.
pub fn score_cf(train: &Folksonomy, user: &str, resource: &str, neighbors: usize) -> Scores {
    let mut scores = Scores::new();
    let Some(own) = train.user_tags(user) else {
        return scores;
    };
    let bookmarkers: Vec<&str> = train
        .resource_posts(resource)
        .map(|p| p.user.as_str())
        .filter(|&u| u != user)
        .collect();
    let restricted = !bookmarkers.is_empty();
    let pool: Vec<&str> = if restricted {
        bookmarkers
    } else {
        train.users().filter(|&u| u != user).collect()
    };

    let mut sims: Vec<(&str, f64)> = pool
        .into_iter()
        .filter_map(|other| {
            let sim = binary_cosine(own, train.user_tags(other)?);
            (sim > 0.0).then_some((other, sim))
        })
        .collect();
    sims.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    sims.truncate(neighbors);

    for (other, sim) in sims {
        if restricted {
            let post = train
                .resource_posts(resource)
                .find(|p| p.user == other)
                .expect("neighbor bookmarked the resource");
            for tag in &post.tags {
                *scores.entry(tag.clone()).or_default() += sim;
            }
        } else if let Some(tags) = train.user_tags(other) {
            for tag in tags.keys() {
                *scores.entry(tag.clone()).or_default() += sim;
            }
        }
    }
    scores
}

/// Registered tag recommendation algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    MpU,
    MpR,
    MpUr,
    Cf,
    Bll,
    BllAc,
    BllAcMpR,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::MpU,
        Algorithm::MpR,
        Algorithm::MpUr,
        Algorithm::Cf,
        Algorithm::Bll,
        Algorithm::BllAc,
        Algorithm::BllAcMpR,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::MpU => "mp_u",
            Algorithm::MpR => "mp_r",
            Algorithm::MpUr => "mp_ur",
            Algorithm::Cf => "cf",
            Algorithm::Bll => "bll",
            Algorithm::BllAc => "bll_ac",
            Algorithm::BllAcMpR => "bll_ac_mp_r",
        }
    }

    pub fn score(self, train: &Folksonomy, query: &Query, params: &RecParams) -> Scores {
        let Query {
            user,
            resource,
            now,
        } = query;
        let (user, resource, now) = (user.as_str(), resource.as_str(), *now);
        match self {
            Algorithm::MpU => score_mp_u(train, user),
            Algorithm::MpR => score_mp_r(train, resource),
            Algorithm::MpUr => score_mp_ur(train, user, resource, params.hybrid.beta),
            Algorithm::Cf => score_cf(train, user, resource, params.hybrid.cf_neighbors),
            Algorithm::Bll => score_bll(train, user, now, &params.decay),
            Algorithm::BllAc => score_bll_ac(train, user, resource, now, &params.decay),
            Algorithm::BllAcMpR => {
                score_bll_ac_mp_r(train, user, resource, now, &params.decay, &params.hybrid)
            }
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

pub(crate) fn id_list<T: fmt::Display>(all: &[T]) -> String {
    all.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| Error::UnknownAlgorithm {
                given: s.to_string(),
                valid: id_list(&Algorithm::ALL),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub user: String,
    pub resource: String,
    /// Reference time; for a held-out post this is the post's timestamp.
    pub now: Timestamp,
}

impl Query {
    pub fn new(user: &str, resource: &str, now: Timestamp) -> Self {
        Query {
            user: user.trim().to_lowercase(),
            resource: resource.trim().to_lowercase(),
            now,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RecParams {
    pub decay: DecayParams,
    pub hybrid: HybridParams,
}

impl RecParams {
    pub fn validate(&self) -> Result<()> {
        self.decay.validate()?;
        self.hybrid.validate()
    }
}

/// Deterministic top-k recommendation for one query.
pub fn recommend(
    algorithm: Algorithm,
    train: &Folksonomy,
    query: &Query,
    k: usize,
    params: &RecParams,
) -> Result<ScoredList> {
    if k == 0 {
        return Err(Error::param("k", "must be >= 1"));
    }
    params.validate()?;
    Ok(ScoredList::top_k(&algorithm.score(train, query, params), k))
}

/// [`recommend`] with the algorithm given by id.
pub fn recommend_by_id(
    algorithm: &str,
    train: &Folksonomy,
    query: &Query,
    k: usize,
    params: &RecParams,
) -> Result<ScoredList> {
    recommend(algorithm.parse()?, train, query, k, params)
}
