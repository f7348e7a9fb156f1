//! ACT-R activation: base-level learning with power-law forgetting plus an
//! associative (context) component.
//!
//! ```text
//! A_i = B_i + sum_j W_j * S_ji
//! B_i = ln( sum_j t_j^(-d) )
//! ```
//!
//! `t_j` is the time in seconds since the j-th use of item `i`, clamped below
//! at `min_elapsed`. Context elements `j` are the tags already assigned to the
//! target resource: `W_j` is the relative frequency of `j` on the resource and
//! `S_ji` the fraction of posts containing `j` that also contain `i`.

use crate::data::{Folksonomy, Timestamp};
use crate::error::{Error, Result};

pub const DEFAULT_DECAY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayParams {
    /// Power-law decay exponent `d`.
    pub d: f64,
    /// Lower clamp on elapsed seconds.
    pub min_elapsed: i64,
}

impl Default for DecayParams {
    fn default() -> Self {
        DecayParams {
            d: DEFAULT_DECAY,
            min_elapsed: 1,
        }
    }
}

impl DecayParams {
    pub fn new(d: f64, min_elapsed: i64) -> Result<Self> {
        let p = DecayParams { d, min_elapsed };
        p.validate()?;
        Ok(p)
    }

    pub fn with_decay(d: f64) -> Result<Self> {
        Self::new(d, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(Error::param("d", format!("must be > 0, got {}", self.d)));
        }
        if self.min_elapsed < 1 {
            return Err(Error::param(
                "min_elapsed",
                format!("must be >= 1, got {}", self.min_elapsed),
            ));
        }
        Ok(())
    }

    /// Decayed trace strength of one occurrence `elapsed` seconds ago.
    #[inline]
    pub fn trace(&self, elapsed: i64) -> f64 {
        (elapsed.max(self.min_elapsed) as f64).powf(-self.d)
    }
}

/// Base-level activation of an item used at `times`, evaluated at `now`.
///
/// Occurrences are summed in the order given.
pub fn base_level(times: &[Timestamp], now: Timestamp, params: &DecayParams) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let mut sum = 0.0;
    for &t in times {
        if t > now {
            return Err(Error::OccurrenceAfterNow { time: t, now });
        }
        sum += params.trace(now - t);
    }
    Ok(sum.ln())
}

/// Weighted context elements of a target resource, ordered by tag id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContextProfile {
    pub elements: Vec<(String, f64)>,
}

impl ContextProfile {
    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Tags previously assigned to `resource`, weighted by relative frequency.
pub fn context_profile(f: &Folksonomy, resource: &str) -> ContextProfile {
    let Some(counts) = f.resource_tags(resource) else {
        return ContextProfile::default();
    };
    let total: usize = counts.values().sum();
    if total == 0 {
        return ContextProfile::default();
    }
    let total = total as f64;
    ContextProfile {
        elements: counts
            .iter()
            .map(|(tag, &c)| (tag.clone(), c as f64 / total))
            .collect(),
    }
}

/// Strength of association from context tag `j` to candidate `i`: the share
/// of posts carrying `j` that also carry `i`.
pub fn association_strength(f: &Folksonomy, j: &str, i: &str) -> f64 {
    let denom = f.tag_count(j);
    if denom == 0 {
        return 0.0;
    }
    f.cooccurrence(i, j) as f64 / denom as f64
}

/// `sum_j W_j * S_ji` over the context, in profile order.
pub fn associative_component(ctx: &ContextProfile, f: &Folksonomy, i: &str) -> f64 {
    ctx.elements
        .iter()
        .map(|(j, w)| w * association_strength(f, j, i))
        .sum()
}

/// Full activation of `i`. A missing base level counts as 0; an empty
/// context returns `base` unchanged.
pub fn activation(base: Option<f64>, ctx: &ContextProfile, f: &Folksonomy, i: &str) -> f64 {
    let base = base.unwrap_or(0.0);
    if ctx.is_empty() {
        return base;
    }
    base + associative_component(ctx, f, i)
}
