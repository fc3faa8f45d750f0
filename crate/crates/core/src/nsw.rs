//! Policies, reward matrices and the Nash social welfare.
//!
//! A [`Policy`] is a probability distribution over `K` arms. Under a reward
//! matrix `mu` (agents by arms), agent `i` receives expected utility
//! `sum_j p_j * mu[i][j]`, and the Nash social welfare of the policy is the
//! product of those utilities over all agents.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};

/// Tolerance on the weight sum of a [`Policy`].
pub const POLICY_SUM_TOLERANCE: f64 = 1e-9;

/// Default floor applied to agent utilities by [`log_nsw_eval`].
pub const DEFAULT_UTILITY_FLOOR: f64 = 1e-12;

const NEGATIVE_WEIGHT_SLACK: f64 = 1e-12;
const MIN_WEIGHT_SUM: f64 = 1e-12;

/// A point on the probability simplex over `K` arms.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    weights: Vec<f64>,
}

impl Policy {
    /// Builds a policy from nonnegative weights, normalizing them to sum to one.
    ///
    /// Entries in `[-1e-12, 0)` are treated as rounding noise and clamped to
    /// zero. Anything more negative, any non-finite entry, or a total below
    /// `1e-12` is rejected.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidPolicy("policy needs at least one arm".into()));
        }
        let mut weights = weights;
        for (j, w) in weights.iter_mut().enumerate() {
            if !w.is_finite() {
                return Err(Error::InvalidPolicy(format!("weight {j} is not finite")));
            }
            if *w < -NEGATIVE_WEIGHT_SLACK {
                return Err(Error::InvalidPolicy(format!("weight {j} is negative ({w})")));
            }
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let total: f64 = weights.iter().sum();
        if total < MIN_WEIGHT_SUM {
            return Err(Error::InvalidPolicy(format!(
                "weights sum to {total}, cannot normalize"
            )));
        }
        for w in &mut weights {
            *w /= total;
        }
        Ok(Policy { weights })
    }

    /// All mass on `arm`.
    pub fn point_mass(n_arms: usize, arm: usize) -> Result<Self> {
        if n_arms == 0 {
            return Err(Error::InvalidPolicy("policy needs at least one arm".into()));
        }
        if arm >= n_arms {
            return Err(Error::IndexOutOfRange {
                what: "arm",
                index: arm,
                len: n_arms,
            });
        }
        let mut weights = vec![0.0; n_arms];
        weights[arm] = 1.0;
        Ok(Policy { weights })
    }

    pub fn uniform(n_arms: usize) -> Result<Self> {
        if n_arms == 0 {
            return Err(Error::InvalidPolicy("policy needs at least one arm".into()));
        }
        Ok(Policy {
            weights: vec![1.0 / n_arms as f64; n_arms],
        })
    }

    pub fn n_arms(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, arm: usize) -> f64 {
        self.weights[arm]
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }
}

/// Matrix of mean rewards, one row per agent and one column per arm, with
/// every entry in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardMatrix {
    n_agents: usize,
    n_arms: usize,
    // row-major
    means: Vec<f64>,
}

impl RewardMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_agents = rows.len();
        if n_agents == 0 {
            return Err(Error::InvalidParameter("reward matrix needs at least one agent".into()));
        }
        let n_arms = rows[0].len();
        let mut means = Vec::with_capacity(n_agents * n_arms);
        for row in rows {
            if row.len() != n_arms {
                return Err(Error::DimensionMismatch {
                    expected: n_arms,
                    found: row.len(),
                });
            }
            means.extend_from_slice(row);
        }
        Self::from_row_major(n_agents, n_arms, means)
    }

    pub fn from_row_major(n_agents: usize, n_arms: usize, means: Vec<f64>) -> Result<Self> {
        if n_agents == 0 || n_arms == 0 {
            return Err(Error::InvalidParameter(format!(
                "reward matrix must be at least 1x1, got {n_agents}x{n_arms}"
            )));
        }
        if means.len() != n_agents * n_arms {
            return Err(Error::DimensionMismatch {
                expected: n_agents * n_arms,
                found: means.len(),
            });
        }
        if let Some(pos) = means.iter().position(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::InvalidParameter(format!(
                "reward mean at ({}, {}) is {}, outside [0, 1]",
                pos / n_arms,
                pos % n_arms,
                means[pos]
            )));
        }
        Ok(RewardMatrix {
            n_agents,
            n_arms,
            means,
        })
    }

    pub fn zeros(n_agents: usize, n_arms: usize) -> Result<Self> {
        Self::from_row_major(n_agents, n_arms, vec![0.0; n_agents * n_arms])
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    pub fn get(&self, agent: usize, arm: usize) -> f64 {
        self.means[agent * self.n_arms + arm]
    }

    pub(crate) fn set(&mut self, agent: usize, arm: usize, value: f64) {
        self.means[agent * self.n_arms + arm] = value.clamp(0.0, 1.0);
    }

    pub fn row(&self, agent: usize) -> &[f64] {
        let start = agent * self.n_arms;
        &self.means[start..start + self.n_arms]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.means.chunks_exact(self.n_arms)
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.means
    }
}

fn check_dims(p: &Policy, mu: &RewardMatrix) -> Result<()> {
    if p.n_arms() != mu.n_arms() {
        return Err(Error::DimensionMismatch {
            expected: mu.n_arms(),
            found: p.n_arms(),
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Expected reward of `agent` under policy `p`.
pub fn agent_utility(p: &Policy, mu: &RewardMatrix, agent: usize) -> Result<f64> {
    check_dims(p, mu)?;
    if agent >= mu.n_agents() {
        return Err(Error::IndexOutOfRange {
            what: "agent",
            index: agent,
            len: mu.n_agents(),
        });
    }
    Ok(dot(p.weights(), mu.row(agent)))
}

/// Nash social welfare: the product over agents of their expected rewards.
pub fn nsw_eval(p: &Policy, mu: &RewardMatrix) -> Result<f64> {
    check_dims(p, mu)?;
    Ok(nsw_unchecked(p.weights(), mu))
}

pub(crate) fn nsw_unchecked(weights: &[f64], mu: &RewardMatrix) -> f64 {
    mu.rows()
        .map(|row| dot(weights, row).clamp(0.0, 1.0))
        .product()
}

/// Sum of log utilities with each utility floored at `floor`.
pub fn log_nsw_eval(p: &Policy, mu: &RewardMatrix, floor: f64) -> Result<f64> {
    check_dims(p, mu)?;
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "utility floor must be positive, got {floor}"
        )));
    }
    Ok(log_nsw_unchecked(p.weights(), mu, floor))
}

pub(crate) fn log_nsw_unchecked(weights: &[f64], mu: &RewardMatrix, floor: f64) -> f64 {
    mu.rows().map(|row| dot(weights, row).max(floor).ln()).sum()
}

/// L1 distance between two policies; always in `[0, 2]`.
pub fn l1_distance(a: &Policy, b: &Policy) -> Result<f64> {
    if a.n_arms() != b.n_arms() {
        return Err(Error::DimensionMismatch {
            expected: a.n_arms(),
            found: b.n_arms(),
        });
    }
    Ok(a.weights()
        .iter()
        .zip(b.weights())
        .map(|(x, y)| (x - y).abs())
        .sum())
}

/// Draws a policy uniformly from the simplex (normalized exponential spacings).
pub fn sample_uniform_policy<R: Rng + ?Sized>(n_arms: usize, rng: &mut R) -> Result<Policy> {
    if n_arms == 0 {
        return Err(Error::InvalidPolicy("policy needs at least one arm".into()));
    }
    let draws: Vec<f64> = (0..n_arms).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    Policy::new(draws)
}

/// A finite set of policies such that every point of the simplex lies within
/// L1 distance `delta` of one of them.
#[derive(Debug, Clone)]
pub struct DeltaCover {
    points: Vec<Policy>,
    delta: f64,
    n_arms: usize,
    resolution: usize,
}

impl DeltaCover {
    pub fn points(&self) -> &[Policy] {
        &self.points
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Grid denominator: every coordinate is a multiple of `1 / resolution`.
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// `(1 + 2/delta)^K`, the size every cover must respect.
    pub fn size_bound(n_arms: usize, delta: f64) -> f64 {
        (1.0 + 2.0 / delta).powi(n_arms as i32)
    }

    /// Smallest L1 distance from `p` to a cover point.
    pub fn distance_to(&self, p: &Policy) -> Result<f64> {
        let mut best = f64::INFINITY;
        for s in &self.points {
            best = best.min(l1_distance(p, s)?);
        }
        Ok(best)
    }
}

/// Number of compositions of `total` into `parts` nonnegative parts, as f64.
pub(crate) fn composition_count(total: usize, parts: usize) -> f64 {
    // C(total + parts - 1, parts - 1)
    let k = parts.saturating_sub(1);
    (1..=k).fold(1.0, |acc, i| acc * (total + i) as f64 / i as f64)
}

/// Calls `f` with every vector of `parts` nonnegative integers summing to `total`,
/// in lexicographically decreasing order of the first coordinate.
pub(crate) fn for_each_composition(total: usize, parts: usize, mut f: impl FnMut(&[usize])) {
    fn rec(buf: &mut Vec<usize>, remaining: usize, parts_left: usize, f: &mut dyn FnMut(&[usize])) {
        if parts_left == 1 {
            buf.push(remaining);
            f(buf);
            buf.pop();
            return;
        }
        for first in (0..=remaining).rev() {
            buf.push(first);
            rec(buf, remaining - first, parts_left - 1, f);
            buf.pop();
        }
    }
    if parts == 0 {
        return;
    }
    let mut buf = Vec::with_capacity(parts);
    rec(&mut buf, total, parts, &mut f);
}

const MAX_COVER_POINTS: f64 = 5e6;

/// Builds a delta-cover of the simplex over `n_arms` arms from the grid of
/// compositions with step `1 / ceil(K / delta)`.
///
/// Every coordinate of a simplex point is within one step of its
/// largest-remainder rounding, so the grid covers at L1 radius `K * step <= delta`.
/// When that grid would exceed `(1 + 2/delta)^K` points (large `delta` relative
/// to `K`), the step `1 / ceil(K / (2 delta))` is used instead; largest-remainder
/// rounding moves a point by at most `K / (2 * resolution)` in L1.
pub fn make_delta_cover(n_arms: usize, delta: f64) -> Result<DeltaCover> {
    if n_arms == 0 {
        return Err(Error::InvalidParameter("cover needs at least one arm".into()));
    }
    if !(delta > 0.0 && delta <= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "cover radius must lie in (0, 2], got {delta}"
        )));
    }
    let bound = DeltaCover::size_bound(n_arms, delta);
    let k = n_arms as f64;
    let fine = (k / delta).ceil().max(1.0) as usize;
    let coarse = (k / (2.0 * delta)).ceil().max(1.0) as usize;
    let resolution = [fine, coarse]
        .into_iter()
        .find(|&r| composition_count(r, n_arms) <= bound)
        .ok_or_else(|| {
            Error::Invariant(format!(
                "no grid for K={n_arms}, delta={delta} fits the size bound {bound}"
            ))
        })?;
    if composition_count(resolution, n_arms) > MAX_COVER_POINTS {
        return Err(Error::InvalidParameter(format!(
            "cover for K={n_arms}, delta={delta} would have more than {MAX_COVER_POINTS} points"
        )));
    }
    let step = 1.0 / resolution as f64;
    let mut points = Vec::new();
    for_each_composition(resolution, n_arms, |c| {
        points.push(Policy {
            weights: c.iter().map(|&x| x as f64 * step).collect(),
        });
    });
    if points.len() as f64 > bound {
        return Err(Error::Invariant(format!(
            "cover has {} points, bound is {bound}",
            points.len()
        )));
    }
    Ok(DeltaCover {
        points,
        delta,
        n_arms,
        resolution,
    })
}
