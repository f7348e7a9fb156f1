//! Offline top-k evaluation: leave-newest-out queries, Precision/Recall@k,
//! F1@k and nDCG@k, averaged uniformly over held-out posts.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::data::{Folksonomy, Post, SocialGraph, SplitSpec, TweetRecord};
use crate::error::{Error, Result};
use crate::hashtag::{
    hashtag_usage_breakdown, leave_newest_out, score_bll_is, HashtagAlgorithm, HashtagParams,
    HashtagQuery, TweetCorpus, UsageBreakdown,
};
use crate::recommenders::{softmax_mix, Algorithm, Query, RecParams, ScoredList, Scores};

/// Cutoff for the Precision/Recall curve (k = 1..=PR_CURVE_MAX).
pub const PR_CURVE_MAX: usize = 10;

/// What precision divides by when fewer than k items were recommended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrecisionDenominator {
    /// `min(k, |recommended|)`
    #[default]
    Returned,
    /// Always `k`.
    K,
}

fn check_inputs(relevant: &BTreeSet<String>, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::param("k", "must be >= 1"));
    }
    if relevant.is_empty() {
        return Err(Error::EmptyRelevant);
    }
    Ok(())
}

fn hits(recommended: &ScoredList, relevant: &BTreeSet<String>, k: usize) -> usize {
    recommended
        .ids()
        .take(k)
        .filter(|t| relevant.contains(*t))
        .count()
}

pub fn precision_recall_at_k_with(
    recommended: &ScoredList,
    relevant: &BTreeSet<String>,
    k: usize,
    denominator: PrecisionDenominator,
) -> Result<(f64, f64)> {
    check_inputs(relevant, k)?;
    let h = hits(recommended, relevant, k) as f64;
    let shown = match denominator {
        PrecisionDenominator::Returned => k.min(recommended.len()),
        PrecisionDenominator::K => k,
    };
    let precision = if shown == 0 { 0.0 } else { h / shown as f64 };
    Ok((precision, h / relevant.len() as f64))
}

pub fn precision_recall_at_k(
    recommended: &ScoredList,
    relevant: &BTreeSet<String>,
    k: usize,
) -> Result<(f64, f64)> {
    precision_recall_at_k_with(recommended, relevant, k, PrecisionDenominator::default())
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn f1_at_k(recommended: &ScoredList, relevant: &BTreeSet<String>, k: usize) -> Result<f64> {
    let (p, r) = precision_recall_at_k(recommended, relevant, k)?;
    Ok(harmonic(p, r))
}

/// Binary-relevance nDCG@k.
pub fn ndcg_at_k(recommended: &ScoredList, relevant: &BTreeSet<String>, k: usize) -> Result<f64> {
    check_inputs(relevant, k)?;
    let dcg: f64 = recommended
        .ids()
        .take(k)
        .enumerate()
        .filter(|(_, t)| relevant.contains(*t))
        .map(|(i, _)| 1.0 / ((i + 2) as f64).log2())
        .sum();
    let idcg: f64 = (0..k.min(relevant.len()))
        .map(|i| 1.0 / ((i + 2) as f64).log2())
        .sum();
    Ok(dcg / idcg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmReport {
    /// Mean F1@k per cutoff.
    pub f1: BTreeMap<usize, f64>,
    /// Mean nDCG@k per cutoff.
    pub ndcg: BTreeMap<usize, f64>,
    pub pr_curve: Vec<PrPoint>,
    pub users_evaluated: usize,
}

impl AlgorithmReport {
    pub fn f1_at_5(&self) -> f64 {
        self.f1[&5]
    }

    pub fn ndcg_at_10(&self) -> f64 {
        self.ndcg[&10]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// In the order the algorithms were requested.
    pub per_algorithm: Vec<(String, AlgorithmReport)>,
}

impl EvalReport {
    pub fn get(&self, algorithm: &str) -> Option<&AlgorithmReport> {
        self.per_algorithm
            .iter()
            .find(|(id, _)| id == algorithm)
            .map(|(_, r)| r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    /// Extra F1/nDCG cutoff reported next to F1@5 and nDCG@10.
    pub extra_k: Option<usize>,
    pub precision_denominator: PrecisionDenominator,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            extra_k: None,
            precision_denominator: PrecisionDenominator::Returned,
            jobs: None,
        }
    }
}

impl EvalOptions {
    fn cutoffs(&self) -> BTreeSet<usize> {
        let mut ks: BTreeSet<usize> = [5, 10].into();
        ks.extend(self.extra_k);
        ks
    }

    fn list_len(&self) -> usize {
        self.cutoffs()
            .into_iter()
            .max()
            .unwrap_or(0)
            .max(PR_CURVE_MAX)
    }

    fn validate(&self) -> Result<()> {
        if self.extra_k == Some(0) {
            return Err(Error::param("k", "must be >= 1"));
        }
        if self.jobs == Some(0) {
            return Err(Error::param("jobs", "must be >= 1"));
        }
        Ok(())
    }
}

/// Per-case metric values for one algorithm.
#[derive(Debug, Clone)]
struct CaseMetrics {
    f1: Vec<f64>,
    ndcg: Vec<f64>,
    precision: Vec<f64>,
    recall: Vec<f64>,
}

fn case_metrics(
    list: &ScoredList,
    relevant: &BTreeSet<String>,
    cutoffs: &BTreeSet<usize>,
    opts: &EvalOptions,
) -> Result<CaseMetrics> {
    let pr = |k| precision_recall_at_k_with(list, relevant, k, opts.precision_denominator);
    let mut m = CaseMetrics {
        f1: Vec::with_capacity(cutoffs.len()),
        ndcg: Vec::with_capacity(cutoffs.len()),
        precision: Vec::with_capacity(PR_CURVE_MAX),
        recall: Vec::with_capacity(PR_CURVE_MAX),
    };
    for &k in cutoffs {
        let (p, r) = pr(k)?;
        m.f1.push(harmonic(p, r));
        m.ndcg.push(ndcg_at_k(list, relevant, k)?);
    }
    for k in 1..=PR_CURVE_MAX {
        let (p, r) = pr(k)?;
        m.precision.push(p);
        m.recall.push(r);
    }
    Ok(m)
}

fn run_parallel<T, R, F>(items: &[T], jobs: Option<usize>, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    let work = || items.par_iter().map(&f).collect::<Result<Vec<R>>>();
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::param("jobs", e.to_string()))?
            .install(work),
        None => work(),
    }
}

/// Averages per-case metrics in case order, independent of how the cases
/// were computed.
fn aggregate(ids: &[String], cases: &[Vec<CaseMetrics>], cutoffs: &BTreeSet<usize>) -> EvalReport {
    let n = cases.len() as f64;
    let mean = |pick: &dyn Fn(&CaseMetrics) -> f64, a: usize| -> f64 {
        let mut sum = 0.0;
        for case in cases {
            sum += pick(&case[a]);
        }
        sum / n
    };
    let per_algorithm = ids
        .iter()
        .enumerate()
        .map(|(a, id)| {
            let f1 = cutoffs
                .iter()
                .enumerate()
                .map(|(ci, &k)| (k, mean(&|m| m.f1[ci], a)))
                .collect();
            let ndcg = cutoffs
                .iter()
                .enumerate()
                .map(|(ci, &k)| (k, mean(&|m| m.ndcg[ci], a)))
                .collect();
            let pr_curve = (0..PR_CURVE_MAX)
                .map(|i| PrPoint {
                    k: i + 1,
                    precision: mean(&|m| m.precision[i], a),
                    recall: mean(&|m| m.recall[i], a),
                })
                .collect();
            (
                id.clone(),
                AlgorithmReport {
                    f1,
                    ndcg,
                    pr_curve,
                    users_evaluated: cases.len(),
                },
            )
        })
        .collect();
    EvalReport { per_algorithm }
}

/// Evaluates tag recommenders on a leave-newest-out split.
pub fn evaluate(
    split: &SplitSpec,
    algorithms: &[Algorithm],
    params: &RecParams,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    evaluate_on(&split.train, &split.test, algorithms, params, opts)
}

/// Scores every test post against `train` with `now` set to the post's
/// timestamp.
pub fn evaluate_on(
    train: &Folksonomy,
    test: &[Post],
    algorithms: &[Algorithm],
    params: &RecParams,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    params.validate()?;
    opts.validate()?;
    let cutoffs = opts.cutoffs();
    let len = opts.list_len();
    let cases = run_parallel(test, opts.jobs, |post| {
        let relevant: BTreeSet<String> = post.tags.iter().cloned().collect();
        let query = Query::new(&post.user, &post.resource, post.timestamp);
        algorithms
            .iter()
            .map(|alg| {
                let list = ScoredList::top_k(&alg.score(train, &query, params), len);
                case_metrics(&list, &relevant, &cutoffs, opts)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let ids: Vec<String> = algorithms.iter().map(|a| a.id().to_string()).collect();
    Ok(aggregate(&ids, &cases, &cutoffs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HashtagReport {
    pub eval: EvalReport,
    /// Computed over the full tweet collection.
    pub breakdown: UsageBreakdown,
}

/// Leave-newest-out evaluation of hashtag recommenders over hashtagged
/// tweets. The held-out tweet's terms are the current content; when that
/// tweet has no terms the content half of BLL_I,S,C is empty.
pub fn evaluate_hashtags(
    tweets: &[TweetRecord],
    graph: &SocialGraph,
    algorithms: &[HashtagAlgorithm],
    params: &HashtagParams,
    min_posts: usize,
    opts: &EvalOptions,
) -> Result<HashtagReport> {
    params.validate()?;
    opts.validate()?;
    let breakdown = hashtag_usage_breakdown(&TweetCorpus::new(tweets.to_vec()), graph)?;
    let (train, test) = leave_newest_out(tweets, min_posts)?;
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let cutoffs = opts.cutoffs();
    let len = opts.list_len();
    let cases = run_parallel(&test, opts.jobs, |tw| {
        let relevant: BTreeSet<String> = tw.hashtags.iter().cloned().collect();
        let query = HashtagQuery {
            user: tw.user.clone(),
            now: tw.timestamp,
            current_terms: Some(tw.terms.clone()),
        };
        algorithms
            .iter()
            .map(|alg| {
                let scores = if alg.uses_content() && tw.terms.is_empty() {
                    let history = score_bll_is(
                        &train,
                        graph,
                        &query.user,
                        query.now,
                        &params.decay,
                        params.beta,
                    );
                    softmax_mix(&history, &Scores::new(), params.gamma)
                } else {
                    alg.score(&train, graph, &query, params)?
                };
                case_metrics(&ScoredList::top_k(&scores, len), &relevant, &cutoffs, opts)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let ids: Vec<String> = algorithms.iter().map(|a| a.id().to_string()).collect();
    Ok(HashtagReport {
        eval: aggregate(&ids, &cases, &cutoffs),
        breakdown,
    })
}

pub const REPORT_HEADER: &str = "algorithm,metric,k,value,support";

fn push_rows(out: &mut String, report: &EvalReport) {
    for (id, r) in &report.per_algorithm {
        let n = r.users_evaluated;
        for (k, v) in &r.f1 {
            out.push_str(&format!("{id},f1,{k},{v:.6},{n}\n"));
        }
        for (k, v) in &r.ndcg {
            out.push_str(&format!("{id},ndcg,{k},{v:.6},{n}\n"));
        }
        for pt in &r.pr_curve {
            out.push_str(&format!(
                "{id},precision,{},{:.6},{n}\n",
                pt.k, pt.precision
            ));
        }
        for pt in &r.pr_curve {
            out.push_str(&format!("{id},recall,{},{:.6},{n}\n", pt.k, pt.recall));
        }
    }
}

/// CSV with columns `algorithm,metric,k,value,support`.
pub fn report_csv(report: &EvalReport) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    push_rows(&mut out, report);
    out
}

/// Like [`report_csv`], followed by the usage breakdown as
/// `usage_breakdown,<class>,,<fraction>,<assignments>` rows.
pub fn hashtag_report_csv(report: &HashtagReport) -> String {
    let mut out = report_csv(&report.eval);
    let b = &report.breakdown;
    for (name, v) in [
        ("individual_only", b.individual_only),
        ("social_only", b.social_only),
        ("both", b.both),
        ("external", b.external),
    ] {
        out.push_str(&format!(
            "usage_breakdown,{name},,{v:.6},{}\n",
            b.assignments
        ));
    }
    out
}

/// Fixed-width summary table.
pub fn format_table(report: &EvalReport) -> String {
    let mut out = format!(
        "{:<14} {:>7} {:>8} {:>8} {:>8} {:>8}\n",
        "algorithm", "users", "F1@5", "nDCG@10", "P@5", "R@5"
    );
    for (id, r) in &report.per_algorithm {
        let p5 = r.pr_curve[4];
        out.push_str(&format!(
            "{:<14} {:>7} {:>8.4} {:>8.4} {:>8.4} {:>8.4}\n",
            id,
            r.users_evaluated,
            r.f1_at_5(),
            r.ndcg_at_10(),
            p5.precision,
            p5.recall
        ));
    }
    out
}
