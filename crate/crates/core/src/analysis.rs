//! Tag reuse analysis: how past frequency, recency and resource context
//! predict whether a tag is reused in a user's newest post, and whether
//! reuse decays with recency as a power law or exponentially.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::activation::{association_strength, context_profile};
use crate::data::{chronological_split, Folksonomy, Timestamp};
use crate::error::{Error, Result};

/// One (user, past tag) pair checked against the user's newest post.
#[derive(Debug, Clone, PartialEq)]
pub struct ReuseObservation {
    pub user: String,
    pub tag: String,
    /// Number of earlier posts carrying the tag.
    pub frequency: usize,
    /// Seconds between the tag's last earlier use and the newest post.
    pub recency: Timestamp,
    /// Context-weighted association of the tag to the newest post's resource.
    pub context_sim: f64,
    pub reused: bool,
}

/// Builds one observation per distinct tag in the first `n - 1` posts of
/// every user with at least `min_posts` posts, compared against post `n`.
///
/// Context similarity is measured on the training part of a leave-newest-out
/// split, so the newest posts never contribute to their own context.
pub fn reuse_observations(f: &Folksonomy, min_posts: usize) -> Result<Vec<ReuseObservation>> {
    let split = chronological_split(f, min_posts)?;
    let train = &split.train;
    let mut out = Vec::new();
    for target in &split.test {
        let mut stats: BTreeMap<&str, (usize, Timestamp)> = BTreeMap::new();
        for post in train.user_posts(&target.user) {
            for tag in &post.tags {
                let e = stats.entry(tag.as_str()).or_insert((0, post.timestamp));
                e.0 += 1;
                e.1 = e.1.max(post.timestamp);
            }
        }
        let ctx = context_profile(train, &target.resource);
        for (tag, (frequency, last)) in stats {
            let context_sim = ctx
                .elements
                .iter()
                .map(|(j, w)| w * association_strength(train, j, tag))
                .sum();
            out.push(ReuseObservation {
                user: target.user.clone(),
                tag: tag.to_string(),
                frequency,
                recency: target.timestamp - last,
                context_sim,
                reused: target.has_tag(tag),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Frequency,
    Recency,
    Context,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::Frequency, Dimension::Recency, Dimension::Context];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Frequency => "frequency",
            Dimension::Recency => "recency",
            Dimension::Context => "context",
        }
    }

    fn value(self, obs: &ReuseObservation) -> f64 {
        match self {
            Dimension::Frequency => obs.frequency as f64,
            Dimension::Recency => obs.recency as f64,
            Dimension::Context => obs.context_sim,
        }
    }

    /// Default bin edges: unit frequency bins 1..=20, power-of-two recency
    /// bins in seconds, ten uniform context bins on [0, 1].
    pub fn default_edges(self) -> Vec<f64> {
        match self {
            Dimension::Frequency => (1..=21).map(f64::from).collect(),
            Dimension::Recency => (0..=32).map(|e| 2f64.powi(e)).collect(),
            Dimension::Context => (0..=10).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReuseBin {
    /// Lower edge of the bin.
    pub label: f64,
    pub reuse_probability: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReuseCurve {
    pub dimension: Dimension,
    pub bins: Vec<ReuseBin>,
}

impl ReuseCurve {
    /// A curve from `(label, probability)` points, each with support 1.
    pub fn from_points(dimension: Dimension, points: &[(f64, f64)]) -> Self {
        ReuseCurve {
            dimension,
            bins: points
                .iter()
                .map(|&(label, p)| ReuseBin {
                    label,
                    reuse_probability: p,
                    support: 1,
                })
                .collect(),
        }
    }
}

/// Bins observations along one dimension and reports the reuse rate per bin.
///
/// Bins are `[e_i, e_{i+1})`, except the last which also includes its upper
/// edge. Values outside the edges are ignored and empty bins are omitted.
pub fn bin_reuse(
    observations: &[ReuseObservation],
    dimension: Dimension,
    edges: &[f64],
) -> Result<ReuseCurve> {
    if edges.len() < 2
        || edges.iter().any(|e| !e.is_finite())
        || edges.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::InvalidBinEdges);
    }
    let nbins = edges.len() - 1;
    let mut reused = vec![0usize; nbins];
    let mut total = vec![0usize; nbins];
    for obs in observations {
        let v = dimension.value(obs);
        let last = edges[nbins];
        if !(v >= edges[0] && v <= last) {
            continue;
        }
        // index of the last edge <= v, capped into the final closed bin
        let bin = (edges.partition_point(|&e| e <= v) - 1).min(nbins - 1);
        total[bin] += 1;
        reused[bin] += usize::from(obs.reused);
    }
    let bins = (0..nbins)
        .filter(|&b| total[b] > 0)
        .map(|b| ReuseBin {
            label: edges[b],
            reuse_probability: reused[b] as f64 / total[b] as f64,
            support: total[b],
        })
        .collect();
    Ok(ReuseCurve { dimension, bins })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DecayModel {
    Power,
    Exponential,
}

impl DecayModel {
    pub fn name(self) -> &'static str {
        match self {
            DecayModel::Power => "power",
            DecayModel::Exponential => "exponential",
        }
    }
}

impl fmt::Display for DecayModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecayModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power" => Ok(DecayModel::Power),
            "exponential" => Ok(DecayModel::Exponential),
            _ => Err(Error::param("model", format!("unknown decay model `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub model: DecayModel,
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination on the log-transformed response.
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope * x + intercept`; returns
/// (slope, intercept, r²). Zero-variance responses get r² = 0.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    if syy == 0.0 {
        return (slope, intercept, 0.0);
    }
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    (slope, intercept, (1.0 - ss_res / syy).clamp(0.0, 1.0))
}

/// Fits `ln p = slope * ln t + c` (power) or `ln p = slope * t + c`
/// (exponential) over bins with positive label and probability.
pub fn fit_decay(curve: &ReuseCurve, model: DecayModel) -> Result<DecayFit> {
    let usable: Vec<&ReuseBin> = curve
        .bins
        .iter()
        .filter(|b| b.label > 0.0 && b.reuse_probability > 0.0)
        .collect();
    if usable.len() < 3 {
        return Err(Error::TooFewBins {
            usable: usable.len(),
        });
    }
    let xs: Vec<f64> = usable
        .iter()
        .map(|b| match model {
            DecayModel::Power => b.label.ln(),
            DecayModel::Exponential => b.label,
        })
        .collect();
    let ys: Vec<f64> = usable.iter().map(|b| b.reuse_probability.ln()).collect();
    let (slope, intercept, r_squared) = least_squares(&xs, &ys);
    Ok(DecayFit {
        model,
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayComparison {
    pub winner: DecayModel,
    pub power: DecayFit,
    pub exponential: DecayFit,
}

/// Fits both models; the higher r² wins and ties go to the power law.
pub fn compare_decay(curve: &ReuseCurve) -> Result<DecayComparison> {
    let power = fit_decay(curve, DecayModel::Power)?;
    let exponential = fit_decay(curve, DecayModel::Exponential)?;
    let winner = if exponential.r_squared > power.r_squared {
        DecayModel::Exponential
    } else {
        DecayModel::Power
    };
    Ok(DecayComparison {
        winner,
        power,
        exponential,
    })
}

pub fn curve_csv(curve: &ReuseCurve) -> String {
    let mut out = String::from("dimension,bin,probability,support\n");
    for b in &curve.bins {
        out.push_str(&format!(
            "{},{:.6},{:.6},{}\n",
            curve.dimension, b.label, b.reuse_probability, b.support
        ));
    }
    out
}

pub fn decay_csv(cmp: &DecayComparison) -> String {
    let mut out = String::from("model,slope,intercept,r_squared,winner\n");
    for fit in [cmp.power, cmp.exponential] {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{}\n",
            fit.model,
            fit.slope,
            fit.intercept,
            fit.r_squared,
            fit.model == cmp.winner
        ));
    }
    out
}
