//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero on failure.

use std::collections::{BTreeMap, BTreeSet};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tagrec::activation::{base_level, DecayParams};
use tagrec::analysis::{compare_decay, DecayModel, Dimension, ReuseCurve};
use tagrec::data::{chronological_split, posts_to_tsv, Folksonomy, Post, SocialGraph, TweetRecord};
use tagrec::evaluation::{evaluate, f1_at_k, ndcg_at_k, precision_recall_at_k, EvalOptions};
use tagrec::hashtag::{hashtag_usage_breakdown, score_bll_i, score_bll_s, TweetCorpus};
use tagrec::recommenders::{score_bll, score_bll_ac, Algorithm, RecParams, ScoredList, Scores};
use tagrec::synth::{generate_folksonomy, SynthConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("base-level oracle", base_level_oracle),
        ("activation oracle", activation_oracle),
        ("monotonicity suite", monotonicity_suite),
        ("metric oracles", metric_oracles),
        ("decay-model selection", decay_model_selection),
        ("directional recommendation check", directional_check),
        ("hashtag partition and pooling", hashtag_partition),
        ("evaluate determinism across --jobs", cli_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome =
            std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name:<38} {detail} ({secs:.2}s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name:<38} {detail} ({secs:.2}s)");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// base level: ln sum t^-d against an independent compensated evaluation

fn oracle_base_level(times: &[i64], now: i64, d: f64) -> f64 {
    // Kahan summation of exp(-d ln t), newest occurrence first
    let mut sorted = times.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for t in sorted {
        let elapsed = (now - t).max(1) as f64;
        let term = (-d * elapsed.ln()).exp() - comp;
        let next = sum + term;
        comp = (next - sum) - term;
        sum = next;
    }
    sum.ln()
}

fn base_level_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB11);
    let mut cases = Vec::with_capacity(1000);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=50);
        let span: i64 = rng.gen_range(1..=100_000_000);
        let start: i64 = rng.gen_range(0..1_000_000_000);
        let times: Vec<i64> = (0..n).map(|_| start + rng.gen_range(0..=span)).collect();
        let now = start + span + rng.gen_range(0..1000);
        let d = if rng.gen_bool(0.5) {
            0.5
        } else {
            rng.gen_range(0.05..2.0)
        };
        cases.push((times, now, d));
    }
    let start = Instant::now();
    let got: Vec<f64> = cases
        .iter()
        .map(|(times, now, d)| {
            base_level(times, *now, &DecayParams::with_decay(*d).unwrap()).unwrap()
        })
        .collect();
    let elapsed = start.elapsed();
    let mut worst = 0.0f64;
    for ((times, now, d), g) in cases.iter().zip(&got) {
        let want = oracle_base_level(times, *now, *d);
        let rel = if g == &want {
            0.0
        } else {
            (g - want).abs() / want.abs()
        };
        worst = worst.max(rel);
    }
    ensure(worst <= 1e-12, || {
        format!("max relative error {worst:e} > 1e-12")
    })?;
    ensure(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "1000 histories, max rel err {worst:.1e}, {:.1} ms",
        elapsed.as_secs_f64() * 1e3
    ))
}

// ---------------------------------------------------------------------------
// activation: brute-force evaluation straight from the post list

struct RawPost {
    user: usize,
    resource: usize,
    tags: BTreeSet<usize>,
    time: i64,
}

fn tag_name(t: usize) -> String {
    ["a", "b", "c", "d", "e", "f", "g", "h"][t].to_string()
}

fn to_folksonomy(raw: &[RawPost]) -> Folksonomy {
    let posts = raw
        .iter()
        .map(|p| {
            let tags: Vec<String> = p.tags.iter().map(|&t| tag_name(t)).collect();
            Post::new(
                &format!("u{}", p.user),
                &format!("r{}", p.resource),
                &tags,
                p.time,
            )
            .unwrap()
        })
        .collect();
    Folksonomy::new(posts).unwrap()
}

fn random_raw(
    rng: &mut ChaCha8Rng,
    max_posts: usize,
    users: usize,
    resources: usize,
    tags: usize,
) -> Vec<RawPost> {
    let n = rng.gen_range(1..=max_posts);
    let mut pairs: Vec<(usize, usize)> = (0..users)
        .flat_map(|u| (0..resources).map(move |r| (u, r)))
        .collect();
    pairs.shuffle(rng);
    pairs
        .into_iter()
        .take(n)
        .map(|(user, resource)| {
            let mut t = BTreeSet::new();
            let want = rng.gen_range(1..=tags);
            while t.len() < want {
                t.insert(rng.gen_range(0..tags));
            }
            RawPost {
                user,
                resource,
                tags: t,
                time: rng.gen_range(0..40),
            }
        })
        .collect()
}

fn brute_force_bll_ac(raw: &[RawPost], user: usize, resource: usize, now: i64, d: f64) -> Scores {
    let mut mine: Vec<&RawPost> = raw
        .iter()
        .filter(|p| p.user == user && p.time <= now)
        .collect();
    mine.sort_by_key(|p| p.time);
    let mut base: BTreeMap<usize, f64> = BTreeMap::new();
    for tag in mine
        .iter()
        .flat_map(|p| p.tags.iter().copied())
        .collect::<BTreeSet<_>>()
    {
        let mut sum = 0.0;
        for p in mine.iter().filter(|p| p.tags.contains(&tag)) {
            sum += (((now - p.time).max(1)) as f64).powf(-d);
        }
        base.insert(tag, sum.ln());
    }
    let on_resource: Vec<&RawPost> = raw.iter().filter(|p| p.resource == resource).collect();
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for p in &on_resource {
        for &t in &p.tags {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    let total: usize = counts.values().sum();
    let mut candidates: BTreeSet<usize> = base.keys().copied().collect();
    candidates.extend(counts.keys().copied());
    let mut out = Scores::new();
    for i in candidates {
        let b = base.get(&i).copied().unwrap_or(0.0);
        let value = if counts.is_empty() {
            b
        } else {
            let mut assoc = 0.0;
            for (&j, &c) in &counts {
                let w = c as f64 / total as f64;
                let with_j = raw.iter().filter(|p| p.tags.contains(&j)).count();
                let both = raw
                    .iter()
                    .filter(|p| p.tags.contains(&j) && p.tags.contains(&i))
                    .count();
                let s = if with_j == 0 {
                    0.0
                } else {
                    both as f64 / with_j as f64
                };
                assoc += w * s;
            }
            b + assoc
        };
        out.insert(tag_name(i), value);
    }
    out
}

fn activation_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC7);
    let d = DecayParams::default();
    let (mut folksonomies, mut queries) = (0, 0);
    while folksonomies < 1000 {
        let raw = random_raw(&mut rng, 6, 3, 3, 4);
        let f = to_folksonomy(&raw);
        let now = 40 + rng.gen_range(0..5);
        for user in 0..4 {
            for resource in 0..4 {
                let got = score_bll_ac(&f, &format!("u{user}"), &format!("r{resource}"), now, &d);
                let want = brute_force_bll_ac(&raw, user, resource, now, 0.5);
                let same = got.len() == want.len()
                    && got
                        .iter()
                        .zip(&want)
                        .all(|((ka, va), (kb, vb))| ka == kb && va.to_bits() == vb.to_bits());
                ensure(same, || {
                    format!("mismatch for u{user}/r{resource}: {got:?} vs {want:?}")
                })?;
                queries += 1;
            }
        }
        folksonomies += 1;
    }
    Ok(format!(
        "{folksonomies} folksonomies (<=6 posts, <=4 tags), {queries} queries, bit-exact"
    ))
}

// ---------------------------------------------------------------------------
// monotonicity

fn build_user(history: &BTreeMap<i64, BTreeSet<String>>) -> Folksonomy {
    let posts = history
        .iter()
        .enumerate()
        .map(|(i, (&t, tags))| {
            let tags: Vec<&str> = tags.iter().map(String::as_str).collect();
            Post::new("u", &format!("r{i}"), &tags, t).unwrap()
        })
        .collect();
    Folksonomy::new(posts).unwrap()
}

fn distinct_times(rng: &mut ChaCha8Rng, n: usize, lo: i64, hi: i64) -> BTreeSet<i64> {
    let mut s = BTreeSet::new();
    while s.len() < n {
        s.insert(rng.gen_range(lo..hi));
    }
    s
}

fn add_noise(rng: &mut ChaCha8Rng, hist: &mut BTreeMap<i64, BTreeSet<String>>, now: i64) {
    for n in 0..rng.gen_range(0..4) {
        let k = rng.gen_range(1..5);
        for t in distinct_times(rng, k, 0, now) {
            hist.entry(t).or_default().insert(format!("noise{n}"));
        }
    }
}

fn rank_of(scores: &Scores, tag: &str) -> usize {
    ScoredList::top_k(scores, usize::MAX)
        .position(tag)
        .expect("tag ranked")
}

fn frequency_case(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let now = 1_000_000;
    let (ns, ne) = (rng.gen_range(1..6), rng.gen_range(1..4));
    let shared = distinct_times(rng, ns, 0, now);
    let mut extra = distinct_times(rng, ne, 0, now);
    extra.retain(|t| !shared.contains(t));
    if extra.is_empty() {
        extra.insert(now);
    }
    let mut hist: BTreeMap<i64, BTreeSet<String>> = BTreeMap::new();
    for &t in &shared {
        hist.entry(t)
            .or_default()
            .extend(["often".to_string(), "rare".to_string()]);
    }
    for &t in &extra {
        hist.entry(t).or_default().insert("often".into());
    }
    add_noise(rng, &mut hist, now);
    let s = score_bll(&build_user(&hist), "u", now, &DecayParams::default());
    ensure(rank_of(&s, "often") < rank_of(&s, "rare"), || {
        format!("frequency violated: {s:?}")
    })
}

fn recency_case(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let now = 1_000_000;
    let n = rng.gen_range(1..6);
    let times: Vec<i64> = distinct_times(rng, n, 0, now - 3).into_iter().collect();
    let mut newer = times.clone();
    let moved = rng.gen_range(0..times.len());
    // move one occurrence strictly closer to `now`, keeping it unclamped-distinct
    newer[moved] = rng.gen_range(times[moved] + 1..now);
    let mut hist: BTreeMap<i64, BTreeSet<String>> = BTreeMap::new();
    for &t in &times {
        hist.entry(t).or_default().insert("old".into());
    }
    let newer_set: BTreeSet<i64> = newer.iter().copied().collect();
    if newer_set.len() != newer.len() {
        return Ok(()); // collided with another occurrence; frequency would differ
    }
    for &t in &newer_set {
        hist.entry(t).or_default().insert("new".into());
    }
    add_noise(rng, &mut hist, now);
    let s = score_bll(&build_user(&hist), "u", now, &DecayParams::default());
    ensure(rank_of(&s, "new") < rank_of(&s, "old"), || {
        format!("recency violated: {s:?}")
    })
}

fn context_case(rng: &mut ChaCha8Rng) -> Result<bool, String> {
    let raw = random_raw(rng, 12, 4, 4, 6);
    let f = to_folksonomy(&raw);
    let user = format!("u{}", rng.gen_range(0..4));
    let resource = format!("r{}", rng.gen_range(0..4));
    let now = 50;
    let d = DecayParams::default();
    let before = score_bll_ac(&f, &user, &resource, now, &d);
    let Some(ctx) = f.resource_tags(&resource) else {
        return Ok(false);
    };
    // co-occurrence is symmetric: for a context tag, a new co-use with `j`
    // would also raise `j`'s own association, so targets come from outside
    let candidates: Vec<&String> = before.keys().filter(|t| !ctx.contains_key(*t)).collect();
    if candidates.is_empty() {
        return Ok(false);
    }
    let target = candidates[rng.gen_range(0..candidates.len())].clone();
    let others: Vec<&String> = ctx.keys().collect();
    let j = others[rng.gen_range(0..others.len())].clone();
    let mut posts = f.posts().to_vec();
    posts.push(
        Post::new(
            "fresh",
            "elsewhere",
            &[j.as_str(), target.as_str()],
            rng.gen_range(0..now),
        )
        .unwrap(),
    );
    let g = Folksonomy::new(posts).unwrap();
    let after = score_bll_ac(&g, &user, &resource, now, &d);
    ensure(
        rank_of(&after, &target) <= rank_of(&before, &target),
        || format!("context violated for {target} via {j}: {before:?} -> {after:?}"),
    )?;
    Ok(true)
}

fn monotonicity_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3070);
    for _ in 0..10_000 {
        frequency_case(&mut rng)?;
    }
    let mut recency = 0;
    while recency < 10_000 {
        recency_case(&mut rng)?;
        recency += 1;
    }
    let mut context = 0;
    while context < 10_000 {
        if context_case(&mut rng)? {
            context += 1;
        }
    }
    Ok("10000 frequency, 10000 recency, 10000 context cases, 0 counterexamples".into())
}

// ---------------------------------------------------------------------------
// metrics against an independently coded oracle

fn list(ids: &[String]) -> ScoredList {
    ScoredList {
        items: ids
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), -(i as f64)))
            .collect(),
        k: ids.len(),
    }
}

fn oracle_metrics(rec: &[String], rel: &BTreeSet<String>, k: usize) -> (f64, f64, f64, f64) {
    let shown = &rec[..rec.len().min(k)];
    let mut hit_count = 0usize;
    let mut dcg = 0.0;
    for (pos, item) in shown.iter().enumerate() {
        if rel.contains(item) {
            hit_count += 1;
            dcg += std::f64::consts::LN_2 / ((pos + 2) as f64).ln();
        }
    }
    let mut idcg = 0.0;
    for pos in 0..rel.len().min(k) {
        idcg += std::f64::consts::LN_2 / ((pos + 2) as f64).ln();
    }
    let p = if shown.is_empty() {
        0.0
    } else {
        hit_count as f64 / shown.len() as f64
    };
    let r = hit_count as f64 / rel.len() as f64;
    let f1 = if hit_count == 0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    };
    (p, r, f1, dcg / idcg)
}

fn metric_oracles() -> Outcome {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let rec = list(&s(&["a", "b", "c", "d", "e"]));
    let rel: BTreeSet<String> = s(&["a", "c", "f"]).into_iter().collect();
    let (p, r) = precision_recall_at_k(&rec, &rel, 5).unwrap();
    ensure(
        (p - 0.4).abs() < 1e-12 && (r - 2.0 / 3.0).abs() < 1e-12,
        || format!("P/R = {p}, {r}"),
    )?;
    let f1 = f1_at_k(&rec, &rel, 5).unwrap();
    ensure((f1 - 0.5).abs() < 1e-12, || format!("F1@5 = {f1}"))?;
    let rel2: BTreeSet<String> = s(&["a", "c"]).into_iter().collect();
    let n = ndcg_at_k(&list(&s(&["a", "x", "c"])), &rel2, 10).unwrap();
    ensure((n - 0.919721).abs() < 1e-6, || format!("nDCG = {n}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x3E7);
    for case in 0..1000 {
        let mut pool: Vec<String> = (0..15).map(|i| format!("t{i}")).collect();
        pool.shuffle(&mut rng);
        let rec: Vec<String> = pool[..rng.gen_range(0..12)].to_vec();
        pool.shuffle(&mut rng);
        let rel: BTreeSet<String> = pool[..rng.gen_range(1..7)].iter().cloned().collect();
        let k = rng.gen_range(1..=12);
        let l = list(&rec);
        let (p, r) = precision_recall_at_k(&l, &rel, k).unwrap();
        let f = f1_at_k(&l, &rel, k).unwrap();
        let n = ndcg_at_k(&l, &rel, k).unwrap();
        let (op, or, of, on) = oracle_metrics(&rec, &rel, k);
        for (name, got, want) in [("P", p, op), ("R", r, or), ("F1", f, of), ("nDCG", n, on)] {
            ensure((got - want).abs() <= 1e-12, || {
                format!("case {case}: {name}@{k} {got} vs oracle {want}")
            })?;
        }
    }
    Ok("worked examples + 1000 randomized cases".into())
}

// ---------------------------------------------------------------------------
// decay model selection

fn decay_model_selection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xDECA);
    let labels: Vec<f64> = Dimension::Recency.default_edges()[..17].to_vec(); // 1 s .. 2^16 s
    let (mut correct, mut worst_r2, mut worst_slope) = (0, 1.0f64, 0.0f64);
    for _ in 0..100 {
        let c = rng.gen_range(0.05..1.0);
        let pts: Vec<(f64, f64)> = labels.iter().map(|&t| (t, c * t.powf(-0.5))).collect();
        let cmp = compare_decay(&ReuseCurve::from_points(Dimension::Recency, &pts))
            .map_err(|e| e.to_string())?;
        worst_r2 = worst_r2.min(cmp.power.r_squared);
        worst_slope = worst_slope.max((cmp.power.slope + 0.5).abs());
        if cmp.winner == DecayModel::Power
            && cmp.power.r_squared >= 0.999
            && (cmp.power.slope + 0.5).abs() <= 0.01
        {
            correct += 1;
        }
    }
    let mut exp_correct = 0;
    for _ in 0..100 {
        let c = rng.gen_range(0.05..1.0);
        let lambda = rng.gen_range(0.001..=0.1);
        let pts: Vec<(f64, f64)> = labels
            .iter()
            .map(|&t| (t, c * (-lambda * t).exp()))
            .collect();
        let cmp = compare_decay(&ReuseCurve::from_points(Dimension::Recency, &pts))
            .map_err(|e| e.to_string())?;
        if cmp.winner == DecayModel::Exponential {
            exp_correct += 1;
        }
    }
    ensure(correct == 100 && exp_correct == 100, || {
        format!("power {correct}/100 (min r2 {worst_r2}, max |slope+0.5| {worst_slope}), exponential {exp_correct}/100")
    })?;
    Ok(format!(
        "power 100/100 (min r2 {worst_r2:.6}), exponential 100/100"
    ))
}

// ---------------------------------------------------------------------------
// directional check on a planted power-law recency process

fn directional_check() -> Outcome {
    let start = Instant::now();
    let f = generate_folksonomy(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let split = chronological_split(&f, 2).map_err(|e| e.to_string())?;
    let algs = [
        Algorithm::MpU,
        Algorithm::Bll,
        Algorithm::MpUr,
        Algorithm::BllAcMpR,
    ];
    let report = evaluate(
        &split,
        &algs,
        &RecParams::default(),
        &EvalOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let f1 = |id: &str| report.get(id).unwrap().f1_at_5();
    let (mp_u, bll, mp_ur, hybrid) = (f1("mp_u"), f1("bll"), f1("mp_ur"), f1("bll_ac_mp_r"));
    let elapsed = start.elapsed();
    let detail = format!(
        "F1@5 bll {bll:.4} vs mp_u {mp_u:.4} (+{:.4}); bll_ac_mp_r {hybrid:.4} vs mp_ur {mp_ur:.4} (+{:.4}); {} users",
        bll - mp_u,
        hybrid - mp_ur,
        split.test.len()
    );
    ensure(bll - mp_u >= 0.02 && hybrid - mp_ur >= 0.02, || {
        detail.clone()
    })?;
    ensure(elapsed < Duration::from_secs(60), || {
        format!("{detail}; took {elapsed:?}")
    })?;
    Ok(detail)
}

// ---------------------------------------------------------------------------
// hashtags

fn random_tweets(rng: &mut ChaCha8Rng, users: usize) -> (Vec<TweetRecord>, SocialGraph) {
    let mut graph = SocialGraph::new();
    for a in 0..users {
        for b in 0..users {
            if a != b && rng.gen_bool(0.4) {
                graph.add_edge(&format!("u{a}"), &format!("u{b}"));
            }
        }
    }
    let n = rng.gen_range(1..=20);
    let tweets = (0..n)
        .map(|_| {
            let tags: Vec<String> = (0..rng.gen_range(0..4))
                .map(|_| format!("h{}", rng.gen_range(0..5)))
                .collect();
            TweetRecord::new(
                &format!("u{}", rng.gen_range(0..users)),
                rng.gen_range(0..30),
                &tags,
                &["w"],
            )
            .unwrap()
        })
        .collect();
    (tweets, graph)
}

fn hashtag_partition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4A54);
    let mut fixtures = 0;
    for _ in 0..2000 {
        let (tweets, graph) = random_tweets(&mut rng, 4);
        let Ok(b) = hashtag_usage_breakdown(&TweetCorpus::new(tweets), &graph) else {
            continue; // no assignments
        };
        let sum = b.individual_only + b.social_only + b.both + b.external;
        ensure((sum - 1.0).abs() <= 1e-12, || {
            format!("fractions sum to {sum}")
        })?;
        for v in [b.individual_only, b.social_only, b.both, b.external] {
            ensure((0.0..=1.0).contains(&v), || {
                format!("fraction {v} out of range")
            })?;
        }
        fixtures += 1;
    }

    let d = DecayParams::default();
    for _ in 0..1000 {
        let history: Vec<(i64, Vec<String>)> = (0..rng.gen_range(1..10))
            .map(|_| {
                let tags = (0..rng.gen_range(1..4))
                    .map(|_| format!("h{}", rng.gen_range(0..6)))
                    .collect();
                (rng.gen_range(0..10_000), tags)
            })
            .collect();
        let now = 10_000 + rng.gen_range(0..100);
        let as_followee: Vec<TweetRecord> = history
            .iter()
            .map(|(t, h)| TweetRecord::new("friend", *t, h, &["x"]).unwrap())
            .collect();
        let as_owner: Vec<TweetRecord> = history
            .iter()
            .map(|(t, h)| TweetRecord::new("me", *t, h, &["x"]).unwrap())
            .collect();
        let mut g = SocialGraph::new();
        g.add_edge("me", "friend");
        let social = score_bll_s(&TweetCorpus::new(as_followee), &g, "me", now, &d);
        let own = score_bll_i(&TweetCorpus::new(as_owner), "me", now, &d);
        ensure(social == own, || {
            format!("pooling differs: {social:?} vs {own:?}")
        })?;
    }
    Ok(format!(
        "{fixtures} corpora partition to 1 +- 1e-12; 1000 pooling cases exact"
    ))
}

// ---------------------------------------------------------------------------
// CLI determinism

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let f = generate_folksonomy(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let posts = dir.path().join("posts.tsv");
    std::fs::write(&posts, posts_to_tsv(&f)).map_err(|e| e.to_string())?;
    let run = |jobs: &str| -> Result<Vec<u8>, String> {
        let out = dir.path().join(format!("out{jobs}"));
        let status = Command::new(env!("CARGO_BIN_EXE_tagrec"))
            .arg("evaluate")
            .arg("--posts")
            .arg(&posts)
            .arg("--out")
            .arg(&out)
            .args(["--jobs", jobs])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || {
            String::from_utf8_lossy(&status.stderr).into_owned()
        })?;
        std::fs::read(out.join("eval_report.csv")).map_err(|e| e.to_string())
    };
    let one = run("1")?;
    let eight = run("8")?;
    ensure(one == eight, || {
        "eval_report.csv differs between --jobs 1 and --jobs 8".into()
    })?;
    Ok(format!(
        "{} byte CSV identical for --jobs 1 and 8",
        one.len()
    ))
}
