//! Maximization over the probability simplex.
//!
//! Two objectives matter here. The Nash social welfare is log-concave, so
//! [`maximize_nsw`] runs projected gradient ascent on the floored log-NSW from
//! the uniform policy and any stationary point it reaches is global. The UCB
//! objective `NSW(p, mu) + alpha * <p, radii>` is not log-concave;
//! [`maximize_ucb_objective`] runs the same ascent on it (without the log)
//! from several structured and random starting points and keeps the best.
//! [`brute_force_maximize`] evaluates a grid and serves as an independent
//! oracle for both.

#[cfg(test)]
use rand::Rng;

use crate::env::RngStream;
use crate::error::{Error, Result};
use crate::nsw::{
    composition_count, dot, for_each_composition, log_nsw_unchecked, nsw_unchecked,
    sample_uniform_policy, Policy, RewardMatrix, DEFAULT_UTILITY_FLOOR,
};

/// Largest arm count accepted by [`brute_force_maximize`].
pub const BRUTE_FORCE_MAX_ARMS: usize = 6;

const ARMIJO_FRACTION: f64 = 1e-4;
const MAX_HALVINGS: usize = 80;
const MAX_STEP: f64 = 1e6;
const MIN_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// First trial step of every backtracking line search.
    pub step_init: f64,
    /// Stop once an accepted step improves the objective by less than this.
    pub tolerance: f64,
    /// Total starting points for the UCB objective (structured seeds are
    /// always used, random ones fill the remainder).
    pub restarts: usize,
    pub utility_floor: f64,
    /// Seed of the stream that draws random restart points.
    pub restart_seed: u64,
}

impl OptimizerConfig {
    /// Configuration used inside bandit loops, one call per round.
    pub fn in_loop() -> Self {
        OptimizerConfig {
            max_iterations: 5000,
            step_init: 1.0,
            tolerance: 1e-10,
            restarts: 4,
            utility_floor: DEFAULT_UTILITY_FLOOR,
            restart_seed: 0,
        }
    }

    /// Higher-accuracy configuration for computing the optimal policy of an
    /// instance and for offline validation.
    pub fn validation() -> Self {
        OptimizerConfig {
            restarts: 32,
            tolerance: 1e-12,
            ..Self::in_loop()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
        }
        if !(self.step_init > 0.0 && self.step_init.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step_init must be positive, got {}",
                self.step_init
            )));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be >= 1".into()));
        }
        if !(self.utility_floor > 0.0 && self.utility_floor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "utility_floor must be positive, got {}",
                self.utility_floor
            )));
        }
        Ok(())
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self::in_loop()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub policy: Policy,
    /// Objective evaluated at `policy`.
    pub objective_value: f64,
    pub iterations_used: usize,
    pub converged: bool,
}

/// Euclidean projection of `v` onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    project_into(v, &mut out, &mut Vec::with_capacity(v.len()));
    out
}

fn project_into(v: &[f64], out: &mut [f64], scratch: &mut Vec<f64>) {
    scratch.clear();
    scratch.extend_from_slice(v);
    scratch.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (idx, &u) in scratch.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (idx + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    for (o, &x) in out.iter_mut().zip(v) {
        *o = (x - theta).max(0.0);
    }
    // Renormalize away rounding so iterates satisfy the policy invariant.
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        out.iter_mut().for_each(|o| *o /= total);
    }
}

/// Gradient of `sum_i ln(max(u_i, floor))` with respect to the policy weights,
/// where `u_i = <p, mu_i>`. Agents at or below the floor contribute
/// `mu_i / floor`.
pub fn log_nsw_gradient(weights: &[f64], mu: &RewardMatrix, floor: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|g| *g = 0.0);
    for row in mu.rows() {
        let u = dot(weights, row).max(floor);
        for (g, &m) in out.iter_mut().zip(row) {
            *g += m / u;
        }
    }
}

/// Gradient of the (unlogged) Nash social welfare. Uses products that skip
/// each agent, so it stays exact when some utility is zero.
pub fn nsw_gradient(weights: &[f64], mu: &RewardMatrix, out: &mut [f64]) {
    out.iter_mut().for_each(|g| *g = 0.0);
    let utils: Vec<f64> = mu.rows().map(|row| dot(weights, row)).collect();
    let n = utils.len();
    let mut prefix = vec![1.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] * utils[i];
    }
    let mut suffix = 1.0;
    for i in (0..n).rev() {
        let others = prefix[i] * suffix;
        for (g, &m) in out.iter_mut().zip(mu.row(i)) {
            *g += m * others;
        }
        suffix *= utils[i];
    }
}

trait Objective {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
}

struct LogNsw<'a> {
    mu: &'a RewardMatrix,
    floor: f64,
}

impl Objective for LogNsw<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        log_nsw_unchecked(x, self.mu, self.floor)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        log_nsw_gradient(x, self.mu, self.floor, out)
    }
}

struct UcbObjective<'a> {
    mu: &'a RewardMatrix,
    // alpha * radius_j
    bonus: Vec<f64>,
}

impl Objective for UcbObjective<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        nsw_unchecked(x, self.mu) + dot(x, &self.bonus)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        nsw_gradient(x, self.mu, out);
        for (g, b) in out.iter_mut().zip(&self.bonus) {
            *g += b;
        }
    }
}

struct Ascent {
    point: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
}

/// Projected gradient ascent with backtracking. The first trial step is
/// `step_init`; later iterations start from the Barzilai-Borwein step where
/// the last move saw negative curvature, else from twice the last accepted
/// step, and halve until the projected step gives sufficient increase.
fn ascend(
    objective: &dyn Objective,
    start: &[f64],
    cfg: &OptimizerConfig,
    mut history: Option<&mut Vec<f64>>,
) -> Ascent {
    let k = start.len();
    let mut x = start.to_vec();
    let mut fx = objective.value(&x);
    let mut grad = vec![0.0; k];
    let mut trial = vec![0.0; k];
    let mut candidate = vec![0.0; k];
    let mut scratch = Vec::with_capacity(k);
    if let Some(h) = history.as_deref_mut() {
        h.push(fx);
    }

    let mut prev_x = x.clone();
    let mut prev_grad = vec![0.0; k];
    let mut last_step = cfg.step_init;
    for it in 1..=cfg.max_iterations {
        objective.gradient(&x, &mut grad);
        let mut step = cfg.step_init;
        if it > 1 {
            let (mut ss, mut sy) = (0.0, 0.0);
            for j in 0..k {
                let sj = x[j] - prev_x[j];
                ss += sj * sj;
                sy += sj * (grad[j] - prev_grad[j]);
            }
            step = if sy < 0.0 {
                ss / -sy
            } else {
                2.0 * last_step
            }
            .clamp(MIN_STEP, MAX_STEP);
        }
        prev_x.copy_from_slice(&x);
        prev_grad.copy_from_slice(&grad);
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            for j in 0..k {
                trial[j] = x[j] + step * grad[j];
            }
            project_into(&trial, &mut candidate, &mut scratch);
            let fc = objective.value(&candidate);
            let predicted: f64 = (0..k).map(|j| grad[j] * (candidate[j] - x[j])).sum();
            if fc >= fx + ARMIJO_FRACTION * predicted.max(0.0) {
                accepted = Some(fc);
                last_step = step;
                break;
            }
            step *= 0.5;
        }
        let Some(fc) = accepted else {
            // No ascent direction survives projection: stationary to working precision.
            return Ascent {
                point: x,
                value: fx,
                iterations: it,
                converged: true,
            };
        };
        let improvement = fc - fx;
        std::mem::swap(&mut x, &mut candidate);
        fx = fc;
        if let Some(h) = history.as_deref_mut() {
            h.push(fx);
        }
        if improvement < cfg.tolerance {
            return Ascent {
                point: x,
                value: fx,
                iterations: it,
                converged: true,
            };
        }
    }
    Ascent {
        point: x,
        value: fx,
        iterations: cfg.max_iterations,
        converged: false,
    }
}

fn has_zero_row(mu: &RewardMatrix) -> bool {
    mu.rows().any(|row| row.iter().all(|&m| m <= 0.0))
}

/// Finds a policy maximizing the Nash social welfare under `mu`.
///
/// If some agent's row is all zero every policy has welfare zero and the
/// uniform policy is returned. Hitting `max_iterations` is reported through
/// `converged = false` rather than as an error.
pub fn maximize_nsw(mu: &RewardMatrix, cfg: &OptimizerConfig) -> Result<OptResult> {
    cfg.validate()?;
    let k = mu.n_arms();
    let uniform = Policy::uniform(k)?;
    if has_zero_row(mu) || k == 1 {
        let value = nsw_unchecked(uniform.weights(), mu);
        return Ok(OptResult {
            policy: uniform,
            objective_value: value,
            iterations_used: 0,
            converged: true,
        });
    }
    let objective = LogNsw {
        mu,
        floor: cfg.utility_floor,
    };
    let run = ascend(&objective, uniform.weights(), cfg, None);
    let policy = Policy::new(run.point)?;
    let value = nsw_unchecked(policy.weights(), mu);
    Ok(OptResult {
        policy,
        objective_value: value,
        iterations_used: run.iterations,
        converged: run.converged,
    })
}

/// Value of `NSW(p, mu) + alpha * sum_j p_j * radii_j`.
pub fn ucb_objective(p: &Policy, mu: &RewardMatrix, radii: &[f64], alpha: f64) -> Result<f64> {
    check_ucb_inputs(mu, radii, alpha)?;
    if p.n_arms() != mu.n_arms() {
        return Err(Error::DimensionMismatch {
            expected: mu.n_arms(),
            found: p.n_arms(),
        });
    }
    Ok(nsw_unchecked(p.weights(), mu) + alpha * dot(p.weights(), radii))
}

fn check_ucb_inputs(mu: &RewardMatrix, radii: &[f64], alpha: f64) -> Result<()> {
    if radii.len() != mu.n_arms() {
        return Err(Error::DimensionMismatch {
            expected: mu.n_arms(),
            found: radii.len(),
        });
    }
    if let Some(r) = radii.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "radii must be finite and nonnegative, got {r}"
        )));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite and nonnegative, got {alpha}"
        )));
    }
    Ok(())
}

/// Starting points for the UCB objective, in restart-index order: uniform,
/// the `K` vertices, the NSW maximizer, then random simplex points.
fn ucb_starts(mu: &RewardMatrix, cfg: &OptimizerConfig) -> Result<Vec<Vec<f64>>> {
    let k = mu.n_arms();
    let mut starts = Vec::with_capacity(cfg.restarts.max(k + 2));
    starts.push(Policy::uniform(k)?.into_weights());
    for j in 0..k {
        starts.push(Policy::point_mass(k, j)?.into_weights());
    }
    starts.push(maximize_nsw(mu, cfg)?.policy.into_weights());
    let extra = cfg.restarts.saturating_sub(k + 2);
    if extra > 0 {
        let mut rng = RngStream::new(cfg.restart_seed, "optimizer-restarts", 0);
        for _ in 0..extra {
            starts.push(sample_uniform_policy(k, &mut rng)?.into_weights());
        }
    }
    Ok(starts)
}

/// Best-effort maximizer of `NSW(p, mu) + alpha * <p, radii>` by multi-start
/// projected gradient ascent. Ties between restarts go to the earliest start.
pub fn maximize_ucb_objective(
    mu: &RewardMatrix,
    radii: &[f64],
    alpha: f64,
    cfg: &OptimizerConfig,
) -> Result<OptResult> {
    cfg.validate()?;
    check_ucb_inputs(mu, radii, alpha)?;
    let objective = UcbObjective {
        mu,
        bonus: radii.iter().map(|r| alpha * r).collect(),
    };
    let mut best: Option<Ascent> = None;
    let mut iterations = 0;
    for start in ucb_starts(mu, cfg)? {
        let run = ascend(&objective, &start, cfg, None);
        iterations += run.iterations;
        if best.as_ref().is_none_or(|b| run.value > b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one start");
    let policy = Policy::new(best.point)?;
    let value = objective.value(policy.weights());
    Ok(OptResult {
        policy,
        objective_value: value,
        iterations_used: iterations,
        converged: best.converged,
    })
}

/// Evaluates `objective` on every policy whose coordinates are multiples of
/// `1 / resolution` and returns the best (earliest on ties). The grid is a
/// cover of L1 radius `K / resolution`.
pub fn brute_force_maximize<F>(objective: F, n_arms: usize, resolution: usize) -> Result<OptResult>
where
    F: Fn(&Policy) -> f64,
{
    if n_arms == 0 || n_arms > BRUTE_FORCE_MAX_ARMS {
        return Err(Error::InvalidParameter(format!(
            "brute force supports 1..={BRUTE_FORCE_MAX_ARMS} arms, got {n_arms}"
        )));
    }
    if resolution == 0 {
        return Err(Error::InvalidParameter("resolution must be >= 1".into()));
    }
    if composition_count(resolution, n_arms) > 5e7 {
        return Err(Error::InvalidParameter(format!(
            "grid with K={n_arms}, resolution={resolution} is too large"
        )));
    }
    let step = 1.0 / resolution as f64;
    let mut best: Option<(Policy, f64)> = None;
    let mut evaluated = 0;
    for_each_composition(resolution, n_arms, |c| {
        let p = Policy::new(c.iter().map(|&x| x as f64 * step).collect())
            .expect("grid points are valid policies");
        let v = objective(&p);
        evaluated += 1;
        let v = if v.is_nan() { f64::NEG_INFINITY } else { v };
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((p, v));
        }
    });
    let (policy, objective_value) = best.expect("grid is non-empty");
    Ok(OptResult {
        policy,
        objective_value,
        iterations_used: evaluated,
        converged: true,
    })
}

/// Draws `count` random interior points.
#[cfg(test)]
pub(crate) fn random_interior_points<R: Rng + ?Sized>(
    n_arms: usize,
    count: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let w: Vec<f64> = (0..n_arms).map(|_| 0.05 + rng.random::<f64>()).collect();
            Policy::new(w).expect("positive weights").into_weights()
        })
        .collect()
}
