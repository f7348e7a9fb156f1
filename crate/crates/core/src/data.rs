//! Domain records, file ingestion, and the indexed folksonomy.
//!
//! All ids (users, resources, tags, hashtags) are opaque strings lowercased at
//! ingest. Timestamps are integer seconds since the Unix epoch.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use crate::error::{DataError, Error, Result};

pub type Timestamp = i64;

/// One bookmark: a user tagging a resource at a point in time.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Post {
    pub user: String,
    pub resource: String,
    pub tags: Vec<String>,
    pub timestamp: Timestamp,
}

impl Post {
    /// Builds a post, lowercasing ids and collapsing repeated tags (first
    /// occurrence wins).
    pub fn new<S: AsRef<str>>(
        user: &str,
        resource: &str,
        tags: &[S],
        timestamp: Timestamp,
    ) -> Result<Self> {
        if timestamp < 0 {
            return Err(Error::InvalidPost(format!(
                "negative timestamp {timestamp}"
            )));
        }
        let user = normalize(user);
        let resource = normalize(resource);
        if user.is_empty() || resource.is_empty() {
            return Err(Error::InvalidPost("empty user or resource id".into()));
        }
        let tags = dedup_ids(tags.iter().map(|t| t.as_ref()));
        if tags.is_empty() {
            return Err(Error::InvalidPost("empty tag list".into()));
        }
        Ok(Post {
            user,
            resource,
            tags,
            timestamp,
        })
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t == tag)
    }
}

fn normalize(id: &str) -> String {
    id.trim().to_lowercase()
}

fn dedup_ids<'a>(ids: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for id in ids {
        let id = normalize(id);
        if !id.is_empty() && seen.insert(id.clone()) {
            out.push(id);
        }
    }
    out
}

type Counts = BTreeMap<String, usize>;

/// An indexed collection of posts.
///
/// Posts are stored in canonical `(timestamp, user, resource)` order, so the
/// structure does not depend on the order posts were supplied in. Every index
/// is a cache derivable from `posts`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Folksonomy {
    posts: Vec<Post>,
    user_index: BTreeMap<String, Vec<usize>>,
    resource_index: BTreeMap<String, Vec<usize>>,
    /// resource -> tag -> number of posts on the resource carrying the tag
    tag_resource_count: BTreeMap<String, Counts>,
    /// user -> tag -> number of the user's posts carrying the tag
    user_tag_count: BTreeMap<String, Counts>,
    cooccurrence: BTreeMap<String, Counts>,
    tag_count: Counts,
}

impl Folksonomy {
    /// Indexes `posts`. Fails if any (user, resource) pair is bookmarked twice;
    /// the reported line is the 1-based position of the second post.
    pub fn new(mut posts: Vec<Post>) -> Result<Self> {
        let mut seen: HashMap<(&str, &str), usize> = HashMap::with_capacity(posts.len());
        for (i, p) in posts.iter().enumerate() {
            if p.tags.is_empty() {
                return Err(DataError::EmptyTags { line: i + 1 }.into());
            }
            if seen.insert((&p.user, &p.resource), i).is_some() {
                return Err(DataError::DuplicateBookmark {
                    line: i + 1,
                    user: p.user.clone(),
                    resource: p.resource.clone(),
                }
                .into());
            }
        }
        drop(seen);
        posts.sort_by(|a, b| {
            (a.timestamp, &a.user, &a.resource).cmp(&(b.timestamp, &b.user, &b.resource))
        });

        let mut f = Folksonomy {
            posts,
            ..Default::default()
        };
        for (idx, post) in f.posts.iter().enumerate() {
            f.user_index.entry(post.user.clone()).or_default().push(idx);
            f.resource_index
                .entry(post.resource.clone())
                .or_default()
                .push(idx);
            let on_resource = f
                .tag_resource_count
                .entry(post.resource.clone())
                .or_default();
            let by_user = f.user_tag_count.entry(post.user.clone()).or_default();
            for tag in &post.tags {
                *on_resource.entry(tag.clone()).or_default() += 1;
                *by_user.entry(tag.clone()).or_default() += 1;
                *f.tag_count.entry(tag.clone()).or_default() += 1;
                let row = f.cooccurrence.entry(tag.clone()).or_default();
                for other in &post.tags {
                    *row.entry(other.clone()).or_default() += 1;
                }
            }
        }
        Ok(f)
    }

    /// Re-derives every index from the stored posts.
    pub fn rebuild(&self) -> Result<Self> {
        Folksonomy::new(self.posts.clone())
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn users(&self) -> impl Iterator<Item = &str> {
        self.user_index.keys().map(String::as_str)
    }

    pub fn resources(&self) -> impl Iterator<Item = &str> {
        self.resource_index.keys().map(String::as_str)
    }

    pub fn tags(&self) -> impl Iterator<Item = &str> {
        self.tag_count.keys().map(String::as_str)
    }

    /// The user's posts, oldest first (ties by resource id).
    pub fn user_posts<'a>(&'a self, user: &str) -> impl Iterator<Item = &'a Post> + 'a {
        self.user_index
            .get(user)
            .into_iter()
            .flatten()
            .map(move |&i| &self.posts[i])
    }

    /// Posts on the resource, oldest first (ties by user id).
    pub fn resource_posts<'a>(&'a self, resource: &str) -> impl Iterator<Item = &'a Post> + 'a {
        self.resource_index
            .get(resource)
            .into_iter()
            .flatten()
            .map(move |&i| &self.posts[i])
    }

    pub fn user_post_count(&self, user: &str) -> usize {
        self.user_index.get(user).map_or(0, Vec::len)
    }

    pub fn tag_resource_count(&self, tag: &str, resource: &str) -> usize {
        self.tag_resource_count
            .get(resource)
            .and_then(|m| m.get(tag))
            .copied()
            .unwrap_or(0)
    }

    /// Tag counts on a resource, or `None` for an unseen resource.
    pub fn resource_tags(&self, resource: &str) -> Option<&BTreeMap<String, usize>> {
        self.tag_resource_count.get(resource)
    }

    /// Per-tag post counts for a user, or `None` for an unknown user.
    pub fn user_tags(&self, user: &str) -> Option<&BTreeMap<String, usize>> {
        self.user_tag_count.get(user)
    }

    pub fn cooccurrence(&self, a: &str, b: &str) -> usize {
        self.cooccurrence
            .get(a)
            .and_then(|m| m.get(b))
            .copied()
            .unwrap_or(0)
    }

    pub fn tag_count(&self, tag: &str) -> usize {
        self.tag_count.get(tag).copied().unwrap_or(0)
    }

    pub fn max_timestamp(&self) -> Option<Timestamp> {
        self.posts.last().map(|p| p.timestamp)
    }
}

/// A hashtagged message and its content tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TweetRecord {
    pub user: String,
    pub hashtags: Vec<String>,
    pub terms: Vec<String>,
    pub timestamp: Timestamp,
}

impl TweetRecord {
    pub fn new<S: AsRef<str>, T: AsRef<str>>(
        user: &str,
        timestamp: Timestamp,
        hashtags: &[S],
        terms: &[T],
    ) -> Result<Self> {
        if timestamp < 0 {
            return Err(Error::InvalidPost(format!(
                "negative timestamp {timestamp}"
            )));
        }
        let user = normalize(user);
        if user.is_empty() {
            return Err(Error::InvalidPost("empty user id".into()));
        }
        Ok(TweetRecord {
            user,
            hashtags: dedup_ids(hashtags.iter().map(|h| h.as_ref())),
            terms: terms
                .iter()
                .map(|t| t.as_ref().to_lowercase())
                .filter(|t| !t.is_empty())
                .collect(),
            timestamp,
        })
    }
}

/// Follower -> followee edges.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SocialGraph {
    edges: BTreeMap<String, BTreeSet<String>>,
}

static NO_FOLLOWEES: BTreeSet<String> = BTreeSet::new();

impl SocialGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an edge; returns `false` for self-edges, which are not stored.
    pub fn add_edge(&mut self, follower: &str, followee: &str) -> bool {
        let (follower, followee) = (normalize(follower), normalize(followee));
        if follower == followee {
            return false;
        }
        self.edges.entry(follower).or_default().insert(followee);
        true
    }

    pub fn followees(&self, user: &str) -> &BTreeSet<String> {
        self.edges.get(user).unwrap_or(&NO_FOLLOWEES)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.values().map(BTreeSet::len).sum()
    }
}

/// Result of a leave-newest-out split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub train: Folksonomy,
    /// Held-out newest post of each qualifying user, ordered by user id.
    pub test: Vec<Post>,
}

/// Holds out the newest post of every user with at least `min_posts` posts.
///
/// A user's posts are ordered by `(timestamp, resource)`; the last one in that
/// order is held out, so same-second ties go to the greatest resource id.
pub fn chronological_split(f: &Folksonomy, min_posts: usize) -> Result<SplitSpec> {
    if min_posts < 2 {
        return Err(Error::param(
            "min_posts",
            format!("must be >= 2, got {min_posts}"),
        ));
    }
    let mut test = Vec::new();
    let mut held_out = BTreeSet::new();
    for (user, idxs) in &f.user_index {
        if idxs.len() >= min_posts {
            let last = *idxs.last().expect("non-empty user index");
            held_out.insert(last);
            test.push(f.posts[last].clone());
            debug_assert_eq!(&f.posts[last].user, user);
        }
    }
    let train_posts = f
        .posts
        .iter()
        .enumerate()
        .filter(|(i, _)| !held_out.contains(i))
        .map(|(_, p)| p.clone())
        .collect();
    Ok(SplitSpec {
        train: Folksonomy::new(train_posts)?,
        test,
    })
}

fn split_line(line: &str) -> Vec<&str> {
    line.strip_suffix('\r')
        .unwrap_or(line)
        .split('\t')
        .collect()
}

fn parse_timestamp(raw: &str, line: usize) -> Result<Timestamp, DataError> {
    match raw.trim().parse::<Timestamp>() {
        Ok(t) if t >= 0 => Ok(t),
        Ok(t) => Err(DataError::Malformed {
            line,
            reason: format!("negative timestamp {t}"),
        }),
        Err(_) => Err(DataError::Malformed {
            line,
            reason: format!("invalid timestamp `{raw}`"),
        }),
    }
}

fn is_blank(line: &str) -> bool {
    line.trim().is_empty()
}

/// Parses post TSV text: `user<TAB>resource<TAB>timestamp<TAB>tag1,tag2,...`.
pub fn posts_from_str(text: &str) -> Result<Folksonomy, DataError> {
    let mut posts = Vec::new();
    let mut seen: HashMap<(String, String), usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if is_blank(raw) {
            continue;
        }
        let fields = split_line(raw);
        if fields.len() != 4 {
            return Err(DataError::Malformed {
                line,
                reason: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        let timestamp = parse_timestamp(fields[2], line)?;
        let tags: Vec<&str> = fields[3]
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .collect();
        if tags.is_empty() {
            return Err(DataError::EmptyTags { line });
        }
        let post = Post::new(fields[0], fields[1], &tags, timestamp).map_err(|e| {
            DataError::Malformed {
                line,
                reason: e.to_string(),
            }
        })?;
        if seen
            .insert((post.user.clone(), post.resource.clone()), line)
            .is_some()
        {
            return Err(DataError::DuplicateBookmark {
                line,
                user: post.user,
                resource: post.resource,
            });
        }
        posts.push(post);
    }
    Ok(Folksonomy::new(posts).expect("duplicates and empty tag lists rejected above"))
}

/// Parses tweet TSV text:
/// `user<TAB>timestamp<TAB>comma-joined-hashtags<TAB>space-joined-terms`.
/// Records keep file order.
pub fn tweets_from_str(text: &str) -> Result<Vec<TweetRecord>, DataError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if is_blank(raw) {
            continue;
        }
        let fields = split_line(raw);
        if !(3..=4).contains(&fields.len()) {
            return Err(DataError::Malformed {
                line,
                reason: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        let timestamp = parse_timestamp(fields[1], line)?;
        let hashtags: Vec<&str> = fields[2].split(',').collect();
        let terms: Vec<&str> = fields
            .get(3)
            .map(|t| t.split_whitespace().collect())
            .unwrap_or_default();
        let rec = TweetRecord::new(fields[0], timestamp, &hashtags, &terms).map_err(|e| {
            DataError::Malformed {
                line,
                reason: e.to_string(),
            }
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Parses edge TSV text: `follower<TAB>followee`.
pub fn edges_from_str(text: &str) -> Result<SocialGraph, DataError> {
    let mut graph = SocialGraph::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if is_blank(raw) {
            continue;
        }
        let fields = split_line(raw);
        if fields.len() != 2 || fields.iter().any(|f| f.trim().is_empty()) {
            return Err(DataError::Malformed {
                line,
                reason: "expected `follower<TAB>followee`".into(),
            });
        }
        if !graph.add_edge(fields[0], fields[1]) {
            return Err(DataError::SelfEdge {
                line,
                user: normalize(fields[0]),
            });
        }
    }
    Ok(graph)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn in_file(path: &Path) -> impl FnOnce(DataError) -> Error + '_ {
    move |source| Error::InFile {
        path: path.to_path_buf(),
        source,
    }
}

pub fn parse_posts(path: impl AsRef<Path>) -> Result<Folksonomy> {
    let path = path.as_ref();
    posts_from_str(&read(path)?).map_err(in_file(path))
}

pub fn parse_tweets(path: impl AsRef<Path>) -> Result<Vec<TweetRecord>> {
    let path = path.as_ref();
    tweets_from_str(&read(path)?).map_err(in_file(path))
}

pub fn parse_edges(path: impl AsRef<Path>) -> Result<SocialGraph> {
    let path = path.as_ref();
    edges_from_str(&read(path)?).map_err(in_file(path))
}

/// Serializes posts back to post TSV, one line per post in canonical order.
pub fn posts_to_tsv(f: &Folksonomy) -> String {
    let mut out = String::new();
    for p in f.posts() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            p.user,
            p.resource,
            p.timestamp,
            p.tags.join(",")
        ));
    }
    out
}
