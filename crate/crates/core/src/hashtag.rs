//! Hashtag recommendation from individual and followee hashtag history, with
//! an optional TF-IDF match against the content of the tweet being written.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::activation::DecayParams;
use crate::data::{SocialGraph, Timestamp, TweetRecord};
use crate::error::{Error, Result};
use crate::recommenders::{base_levels, check_weight, id_list, softmax_mix, Scores};

/// Indexed tweets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TweetCorpus {
    tweets: Vec<TweetRecord>,
    /// user -> tweet indices, oldest first (ties by file order)
    user_index: BTreeMap<String, Vec<usize>>,
    hashtag_doc_freq: BTreeMap<String, usize>,
    /// hashtag -> term -> summed term frequency over tweets carrying the hashtag
    hashtag_term_profile: BTreeMap<String, BTreeMap<String, usize>>,
    /// term -> number of tweets containing it
    term_doc_freq: BTreeMap<String, usize>,
    /// term -> hashtag -> tf; the transpose of `hashtag_term_profile`
    term_index: BTreeMap<String, BTreeMap<String, usize>>,
}

impl TweetCorpus {
    pub fn new(tweets: Vec<TweetRecord>) -> Self {
        let mut c = TweetCorpus {
            tweets,
            ..Default::default()
        };
        for (idx, tw) in c.tweets.iter().enumerate() {
            c.user_index.entry(tw.user.clone()).or_default().push(idx);
            let distinct: BTreeSet<&String> = tw.terms.iter().collect();
            for term in distinct {
                *c.term_doc_freq.entry(term.clone()).or_default() += 1;
            }
            for h in &tw.hashtags {
                *c.hashtag_doc_freq.entry(h.clone()).or_default() += 1;
                let profile = c.hashtag_term_profile.entry(h.clone()).or_default();
                for term in &tw.terms {
                    *profile.entry(term.clone()).or_default() += 1;
                    *c.term_index
                        .entry(term.clone())
                        .or_default()
                        .entry(h.clone())
                        .or_default() += 1;
                }
            }
        }
        let tweets = &c.tweets;
        for idxs in c.user_index.values_mut() {
            idxs.sort_by_key(|&i| (tweets[i].timestamp, i));
        }
        c
    }

    pub fn tweets(&self) -> &[TweetRecord] {
        &self.tweets
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn users(&self) -> impl Iterator<Item = &str> {
        self.user_index.keys().map(String::as_str)
    }

    pub fn user_tweets<'a>(&'a self, user: &str) -> impl Iterator<Item = &'a TweetRecord> + 'a {
        self.user_index
            .get(user)
            .into_iter()
            .flatten()
            .map(move |&i| &self.tweets[i])
    }

    pub fn hashtag_doc_freq(&self, hashtag: &str) -> usize {
        self.hashtag_doc_freq.get(hashtag).copied().unwrap_or(0)
    }

    pub fn term_doc_freq(&self, term: &str) -> usize {
        self.term_doc_freq.get(term).copied().unwrap_or(0)
    }

    pub fn hashtag_profile(&self, hashtag: &str) -> Option<&BTreeMap<String, usize>> {
        self.hashtag_term_profile.get(hashtag)
    }

    /// Smoothed inverse document frequency `ln(1 + N / (1 + df))`.
    pub fn idf(&self, term: &str) -> f64 {
        (1.0 + self.tweets.len() as f64 / (1.0 + self.term_doc_freq(term) as f64)).ln()
    }
}

/// Appends the hashtag occurrences of `user`'s tweets at or before `now`.
fn collect_history(
    corpus: &TweetCorpus,
    user: &str,
    now: Timestamp,
    into: &mut BTreeMap<String, Vec<Timestamp>>,
) {
    for tw in corpus.user_tweets(user).filter(|t| t.timestamp <= now) {
        for h in &tw.hashtags {
            into.entry(h.clone()).or_default().push(tw.timestamp);
        }
    }
}

/// BLL_I: base-level activation of the user's own hashtags.
pub fn score_bll_i(
    corpus: &TweetCorpus,
    user: &str,
    now: Timestamp,
    params: &DecayParams,
) -> Scores {
    let mut hist = BTreeMap::new();
    collect_history(corpus, user, now, &mut hist);
    base_levels(&hist, now, params)
}

/// BLL_S: base-level activation over hashtag uses pooled across all
/// followees, unweighted.
pub fn score_bll_s(
    corpus: &TweetCorpus,
    graph: &SocialGraph,
    user: &str,
    now: Timestamp,
    params: &DecayParams,
) -> Scores {
    let mut hist = BTreeMap::new();
    for followee in graph.followees(user) {
        collect_history(corpus, followee, now, &mut hist);
    }
    base_levels(&hist, now, params)
}

pub fn score_bll_is(
    corpus: &TweetCorpus,
    graph: &SocialGraph,
    user: &str,
    now: Timestamp,
    params: &DecayParams,
    beta: f64,
) -> Scores {
    softmax_mix(
        &score_bll_i(corpus, user, now, params),
        &score_bll_s(corpus, graph, user, now, params),
        beta,
    )
}

/// TF-IDF match of the current tweet's terms against each hashtag's term
/// profile. Hashtags sharing no term are omitted.
pub fn score_content<S: AsRef<str>>(corpus: &TweetCorpus, current_terms: &[S]) -> Result<Scores> {
    if current_terms.is_empty() {
        return Err(Error::MissingContent);
    }
    let mut scores = Scores::new();
    for term in current_terms {
        let term = term.as_ref().to_lowercase();
        let Some(postings) = corpus.term_index.get(&term) else {
            continue;
        };
        let idf = corpus.idf(&term);
        for (h, &tf) in postings {
            *scores.entry(h.clone()).or_default() += tf as f64 * idf;
        }
    }
    scores.retain(|_, s| *s > 0.0);
    Ok(scores)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashtagQuery {
    pub user: String,
    pub now: Timestamp,
    /// Terms of the tweet being written; `None` when it is not available.
    pub current_terms: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HashtagParams {
    pub decay: DecayParams,
    /// Individual vs social weight.
    pub beta: f64,
    /// History vs content weight.
    pub gamma: f64,
}

impl Default for HashtagParams {
    fn default() -> Self {
        HashtagParams {
            decay: DecayParams::default(),
            beta: 0.5,
            gamma: 0.5,
        }
    }
}

impl HashtagParams {
    pub fn validate(&self) -> Result<()> {
        self.decay.validate()?;
        check_weight("beta", self.beta)?;
        check_weight("gamma", self.gamma)
    }
}

/// BLL_I,S,C: history mix blended with content evidence.
pub fn score_bll_isc(
    corpus: &TweetCorpus,
    graph: &SocialGraph,
    query: &HashtagQuery,
    params: &DecayParams,
    beta: f64,
    gamma: f64,
) -> Result<Scores> {
    let terms = query
        .current_terms
        .as_deref()
        .ok_or(Error::MissingContent)?;
    let content = score_content(corpus, terms)?;
    let history = score_bll_is(corpus, graph, &query.user, query.now, params, beta);
    Ok(softmax_mix(&history, &content, gamma))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HashtagAlgorithm {
    BllI,
    BllS,
    BllIs,
    BllIsc,
}

impl HashtagAlgorithm {
    pub const ALL: [HashtagAlgorithm; 4] = [
        HashtagAlgorithm::BllI,
        HashtagAlgorithm::BllS,
        HashtagAlgorithm::BllIs,
        HashtagAlgorithm::BllIsc,
    ];

    pub fn id(self) -> &'static str {
        match self {
            HashtagAlgorithm::BllI => "bll_i",
            HashtagAlgorithm::BllS => "bll_s",
            HashtagAlgorithm::BllIs => "bll_is",
            HashtagAlgorithm::BllIsc => "bll_isc",
        }
    }

    /// Whether the algorithm reads the current tweet's content.
    pub fn uses_content(self) -> bool {
        matches!(self, HashtagAlgorithm::BllIsc)
    }

    pub fn score(
        self,
        corpus: &TweetCorpus,
        graph: &SocialGraph,
        query: &HashtagQuery,
        params: &HashtagParams,
    ) -> Result<Scores> {
        let (user, now, decay) = (query.user.as_str(), query.now, &params.decay);
        Ok(match self {
            HashtagAlgorithm::BllI => score_bll_i(corpus, user, now, decay),
            HashtagAlgorithm::BllS => score_bll_s(corpus, graph, user, now, decay),
            HashtagAlgorithm::BllIs => score_bll_is(corpus, graph, user, now, decay, params.beta),
            HashtagAlgorithm::BllIsc => {
                score_bll_isc(corpus, graph, query, decay, params.beta, params.gamma)?
            }
        })
    }
}

impl fmt::Display for HashtagAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for HashtagAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        HashtagAlgorithm::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| Error::UnknownAlgorithm {
                given: s.to_string(),
                valid: id_list(&HashtagAlgorithm::ALL),
            })
    }
}

/// Share of hashtag assignments explained by earlier own use, earlier
/// followee use, both, or neither.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsageBreakdown {
    pub individual_only: f64,
    pub social_only: f64,
    pub both: f64,
    pub external: f64,
    pub assignments: usize,
}

impl UsageBreakdown {
    /// Fraction explained by individual or social history.
    pub fn explained(&self) -> f64 {
        self.individual_only + self.social_only + self.both
    }
}

/// Classifies every (tweet, hashtag) assignment by prior use. "Prior" means a
/// strictly smaller timestamp.
pub fn hashtag_usage_breakdown(
    corpus: &TweetCorpus,
    graph: &SocialGraph,
) -> Result<UsageBreakdown> {
    let mut first_use: HashMap<(&str, &str), Timestamp> = HashMap::new();
    for tw in corpus.tweets() {
        for h in &tw.hashtags {
            first_use
                .entry((tw.user.as_str(), h.as_str()))
                .and_modify(|t| *t = (*t).min(tw.timestamp))
                .or_insert(tw.timestamp);
        }
    }
    let used_before = |user: &str, h: &str, t: Timestamp| {
        first_use.get(&(user, h)).is_some_and(|&first| first < t)
    };

    let (mut ind, mut soc, mut both, mut ext) = (0usize, 0usize, 0usize, 0usize);
    for tw in corpus.tweets() {
        for h in &tw.hashtags {
            let own = used_before(&tw.user, h, tw.timestamp);
            let social = graph
                .followees(&tw.user)
                .iter()
                .any(|f| used_before(f, h, tw.timestamp));
            match (own, social) {
                (true, true) => both += 1,
                (true, false) => ind += 1,
                (false, true) => soc += 1,
                (false, false) => ext += 1,
            }
        }
    }
    let total = ind + soc + both + ext;
    if total == 0 {
        return Err(Error::EmptyCorpus("no hashtag assignments"));
    }
    let n = total as f64;
    Ok(UsageBreakdown {
        individual_only: ind as f64 / n,
        social_only: soc as f64 / n,
        both: both as f64 / n,
        external: ext as f64 / n,
        assignments: total,
    })
}

/// Leave-newest-out over hashtagged tweets: for every user with at least
/// `min_posts` hashtagged tweets the newest one (ties by file order) is held
/// out. Returns the training corpus (all remaining tweets) and the held-out
/// tweets ordered by user id.
pub fn leave_newest_out(
    tweets: &[TweetRecord],
    min_posts: usize,
) -> Result<(TweetCorpus, Vec<TweetRecord>)> {
    if min_posts < 2 {
        return Err(Error::param(
            "min_posts",
            format!("must be >= 2, got {min_posts}"),
        ));
    }
    let mut by_user: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, tw) in tweets.iter().enumerate() {
        if !tw.hashtags.is_empty() {
            by_user.entry(&tw.user).or_default().push(i);
        }
    }
    let mut held = BTreeSet::new();
    let mut test = Vec::new();
    for idxs in by_user.values() {
        if idxs.len() >= min_posts {
            let newest = *idxs
                .iter()
                .max_by_key(|&&i| (tweets[i].timestamp, i))
                .expect("non-empty");
            held.insert(newest);
            test.push(tweets[newest].clone());
        }
    }
    let train = tweets
        .iter()
        .enumerate()
        .filter(|(i, _)| !held.contains(i))
        .map(|(_, t)| t.clone())
        .collect();
    Ok((TweetCorpus::new(train), test))
}
