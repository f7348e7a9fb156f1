//! Seeded synthetic folksonomies whose tag choices follow a planted
//! power-law recency process.
//!
//! Each tag slot of a post is filled by one of three mechanisms: reuse of one
//! of the user's own tags with probability proportional to its decayed trace
//! strength `sum_j t_j^(-d)` (damped for tags outside the resource's topic),
//! imitation of the resource's characteristic tags, or a fresh Zipf draw from
//! the topic's vocabulary.

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Folksonomy, Post, Timestamp};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub users: usize,
    pub resources: usize,
    pub vocabulary: usize,
    /// Tags, resources and user interests are partitioned into topics.
    pub topics: usize,
    /// Topics each user is interested in.
    pub user_topics: usize,
    pub min_posts: usize,
    pub max_posts: usize,
    pub max_tags_per_post: usize,
    /// Probability that a slot reuses one of the user's own tags.
    pub reuse: f64,
    /// Probability that a slot imitates the resource's tags.
    pub imitation: f64,
    /// Reuse weight multiplier for own tags outside the resource's topic.
    pub off_topic: f64,
    /// Decay exponent of the planted reuse process.
    pub decay: f64,
    /// Characteristic tags per resource.
    pub resource_tags: usize,
    /// Bounds in seconds of the log-uniform gap between a user's posts.
    pub min_gap: f64,
    pub max_gap: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            users: 200,
            resources: 500,
            vocabulary: 1500,
            topics: 25,
            user_topics: 3,
            min_posts: 10,
            max_posts: 40,
            max_tags_per_post: 3,
            reuse: 0.55,
            imitation: 0.3,
            off_topic: 0.1,
            decay: 0.5,
            resource_tags: 4,
            min_gap: 60.0,
            max_gap: 60.0 * 10f64.powf(4.6),
            seed: 42,
        }
    }
}

fn zipf_weights(n: usize, exponent: f64) -> Vec<f64> {
    (1..=n).map(|r| (r as f64).powf(-exponent)).collect()
}

/// Items `0..n` grouped by `item % topics`, most popular first.
fn by_topic(n: usize, topics: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); topics];
    for i in 0..n {
        groups[i % topics].push(i);
    }
    groups
}

fn zipf_index(len: usize) -> WeightedIndex<f64> {
    WeightedIndex::new(zipf_weights(len.max(1), 1.0)).expect("non-empty weights")
}

/// Generates a folksonomy; identical configs give identical output.
///
/// Tag `t` and resource `r` belong to topic `t % topics` and `r % topics`.
/// Users mostly bookmark resources from their own topics.
pub fn generate_folksonomy(cfg: &SynthConfig) -> Result<Folksonomy> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let topics = cfg
        .topics
        .clamp(1, cfg.vocabulary.min(cfg.resources).max(1));
    let topic_tags = by_topic(cfg.vocabulary, topics);
    let topic_vocab: Vec<WeightedIndex<f64>> =
        topic_tags.iter().map(|t| zipf_index(t.len())).collect();
    let topic_resources = by_topic(cfg.resources, topics);
    let topic_popularity: Vec<WeightedIndex<f64>> = topic_resources
        .iter()
        .map(|r| WeightedIndex::new(zipf_weights(r.len(), 0.8)).expect("non-empty topic"))
        .collect();

    let resource_tags: Vec<Vec<usize>> = (0..cfg.resources)
        .map(|r| {
            let pool = &topic_tags[r % topics];
            let mut tags = BTreeSet::new();
            while tags.len() < cfg.resource_tags.min(pool.len()) {
                tags.insert(pool[topic_vocab[r % topics].sample(&mut rng)]);
            }
            tags.into_iter().collect()
        })
        .collect();
    // earlier-listed characteristic tags are more typical for the resource
    let imitation_weights = zipf_index(cfg.resource_tags);

    let mut posts = Vec::new();
    for u in 0..cfg.users {
        let user = format!("user{u:04}");
        let interests: Vec<usize> =
            rand::seq::index::sample(&mut rng, topics, cfg.user_topics.clamp(1, topics)).into_vec();
        let reachable: usize = interests.iter().map(|&k| topic_resources[k].len()).sum();
        let n_posts = rng.gen_range(cfg.min_posts..=cfg.max_posts).min(reachable);
        let mut now: Timestamp = rng.gen_range(0..10_000_000);
        let mut history: BTreeMap<usize, Vec<Timestamp>> = BTreeMap::new();
        let mut bookmarked = BTreeSet::new();
        for _ in 0..n_posts {
            now += rng
                .gen_range(cfg.min_gap.ln()..=cfg.max_gap.ln())
                .exp()
                .round() as Timestamp;
            let resource = loop {
                let k = interests[rng.gen_range(0..interests.len())];
                let r = topic_resources[k][topic_popularity[k].sample(&mut rng)];
                if bookmarked.insert(r) {
                    break r;
                }
            };
            let topic = resource % topics;
            let n_tags = rng.gen_range(1..=cfg.max_tags_per_post);
            let mut tags = BTreeSet::new();
            let mut chosen = Vec::new();
            for _ in 0..n_tags * 4 {
                if chosen.len() == n_tags {
                    break;
                }
                let roll: f64 = rng.gen();
                let tag = if roll < cfg.reuse && !history.is_empty() {
                    let (ids, weights): (Vec<usize>, Vec<f64>) = history
                        .iter()
                        .map(|(&t, times)| {
                            let trace: f64 = times
                                .iter()
                                .map(|&s| ((now - s).max(1) as f64).powf(-cfg.decay))
                                .sum();
                            let fit = if t % topics == topic {
                                1.0
                            } else {
                                cfg.off_topic
                            };
                            (t, trace * fit)
                        })
                        .unzip();
                    ids[WeightedIndex::new(weights)
                        .expect("positive weights")
                        .sample(&mut rng)]
                } else if roll < cfg.reuse + cfg.imitation {
                    resource_tags[resource][imitation_weights.sample(&mut rng)]
                } else {
                    topic_tags[topic][topic_vocab[topic].sample(&mut rng)]
                };
                if tags.insert(tag) {
                    chosen.push(tag);
                }
            }
            for &t in &chosen {
                history.entry(t).or_default().push(now);
            }
            let names: Vec<String> = chosen.iter().map(|t| format!("tag{t:04}")).collect();
            posts.push(Post::new(&user, &format!("res{resource:04}"), &names, now)?);
        }
    }
    Folksonomy::new(posts)
}
