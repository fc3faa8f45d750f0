//! Seeded episodes, regret curves, slope fits and the clean-event check.
//!
//! Randomness in an episode comes from three kinds of streams derived from
//! the episode seed: `arm-select` draws the arm from the played policy,
//! `env/arm-<j>` draws the rewards of the `j`-th arm, and `algo-coin` (owned
//! by the agent) flips Epsilon-Greedy's exploration coin. Because each arm
//! has its own reward stream, the `n`-th pull of an arm yields the same
//! reward vector under every algorithm run with the same seed.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::algorithms::{confidence_radius, AgentKind, BanditAgent, EstimatorState};
use crate::env::{sample_arm, sample_rewards_into, BanditInstance, RngStream};
use crate::error::{Error, Result};
use crate::nsw::{nsw_unchecked, Policy};
use crate::simplex::{brute_force_maximize, maximize_nsw, OptimizerConfig};

/// Tolerance on the agreement between the optimizer and the grid oracle
/// when computing an instance's optimal policy.
pub const OPTIMUM_ORACLE_TOLERANCE: f64 = 1e-2;
const OPTIMUM_ORACLE_RESOLUTION: usize = 200;
const OPTIMUM_ORACLE_MAX_ARMS: usize = 3;

/// The welfare-maximizing policy of an instance under its true means.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalPolicy {
    pub policy: Policy,
    pub value: f64,
    /// False if the optimizer stopped at its iteration cap.
    pub converged: bool,
    /// Grid-oracle value, when the instance is small enough to check.
    pub oracle_value: Option<f64>,
}

/// Computes the optimal policy with the validation optimizer configuration
/// and, for at most three arms, cross-checks it against a resolution-200 grid.
pub fn optimal_nsw(instance: &BanditInstance) -> Result<OptimalPolicy> {
    let mu = instance.true_means();
    let opt = maximize_nsw(mu, &OptimizerConfig::validation())?;
    let mut best = OptimalPolicy {
        policy: opt.policy,
        value: opt.objective_value,
        converged: opt.converged,
        oracle_value: None,
    };
    if instance.n_arms() <= OPTIMUM_ORACLE_MAX_ARMS {
        let grid = brute_force_maximize(
            |p| nsw_unchecked(p.weights(), mu),
            instance.n_arms(),
            OPTIMUM_ORACLE_RESOLUTION,
        )?;
        if grid.objective_value > best.value + OPTIMUM_ORACLE_TOLERANCE {
            return Err(Error::Invariant(format!(
                "optimizer value {} falls short of grid oracle {}",
                best.value, grid.objective_value
            )));
        }
        best.oracle_value = Some(grid.objective_value);
        if grid.objective_value > best.value {
            best.policy = grid.policy;
            best.value = grid.objective_value;
        }
    }
    Ok(best)
}

/// What happened in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: u64,
    pub policy: Policy,
    pub arm: usize,
    pub rewards: Vec<f64>,
    pub instant_regret: f64,
}

/// Borrowed view of a round handed to observers; `estimates` is the state at
/// the start of the round, before its rewards are recorded.
#[derive(Debug)]
pub struct RoundView<'a> {
    pub t: u64,
    pub estimates: &'a EstimatorState,
    pub policy: &'a Policy,
    pub arm: usize,
    pub rewards: &'a [f64],
    pub instant_regret: f64,
}

/// Every round of one seeded episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub seed: u64,
    pub agent: AgentKind,
    pub instance_id: String,
    pub optimal_value: f64,
    pub records: Vec<RoundRecord>,
}

impl RunTrace {
    /// Running sum of instantaneous regret, one entry per round.
    pub fn cumulative_regret(&self) -> Vec<f64> {
        self.records
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r.instant_regret;
                Some(*acc)
            })
            .collect()
    }

    pub fn total_regret(&self) -> f64 {
        self.records.iter().map(|r| r.instant_regret).sum()
    }
}

/// One checkpoint of a regret curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: u64,
    pub mean_cum_regret: f64,
    /// Standard error of the mean across seeds (0 for a single seed).
    pub stderr: f64,
    pub n_seeds: usize,
}

/// Mean cumulative regret across seeds at geometric checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretCurve {
    pub points: Vec<CurvePoint>,
}

impl RegretCurve {
    pub fn at(&self, t: u64) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.t == t)
    }

    pub fn last(&self) -> Option<&CurvePoint> {
        self.points.last()
    }
}

/// Ten checkpoints per decade (`ceil(10^(k/10))`, exact at powers of ten) up
/// to and including `horizon`.
pub fn geometric_checkpoints(horizon: u64) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    for k in 0.. {
        let v = 10f64.powf(k as f64 / 10.0);
        let t = if (v - v.round()).abs() <= 1e-9 * v {
            v.round()
        } else {
            v.ceil()
        } as u64;
        if t > horizon {
            break;
        }
        if out.last() != Some(&t) {
            out.push(t);
        }
    }
    if horizon >= 1 && out.last() != Some(&horizon) {
        out.push(horizon);
    }
    out
}

/// Runs episodes of one instance against its precomputed optimum.
#[derive(Debug, Clone)]
pub struct Harness<'a> {
    instance: &'a BanditInstance,
    optimum: OptimalPolicy,
    optimizer: OptimizerConfig,
    instance_id: String,
}

impl<'a> Harness<'a> {
    pub fn new(instance: &'a BanditInstance) -> Result<Self> {
        Ok(Harness {
            instance,
            optimum: optimal_nsw(instance)?,
            optimizer: OptimizerConfig::in_loop(),
            instance_id: "instance".to_owned(),
        })
    }

    /// Optimizer configuration handed to agents.
    pub fn with_optimizer(mut self, cfg: OptimizerConfig) -> Result<Self> {
        cfg.validate()?;
        self.optimizer = cfg;
        Ok(self)
    }

    pub fn with_instance_id(mut self, id: impl Into<String>) -> Self {
        self.instance_id = id.into();
        self
    }

    pub fn instance(&self) -> &BanditInstance {
        self.instance
    }

    pub fn optimum(&self) -> &OptimalPolicy {
        &self.optimum
    }

    pub fn instance_id(&self) -> &str {
        &self.instance_id
    }

    pub fn optimizer(&self) -> &OptimizerConfig {
        &self.optimizer
    }

    fn check_horizon(&self, kind: &AgentKind, horizon: u64) -> Result<()> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        if let AgentKind::ExploreFirst { horizon: h, .. } = kind {
            if horizon > *h {
                return Err(Error::InvalidParameter(format!(
                    "episode horizon {horizon} exceeds explore-first horizon {h}"
                )));
            }
        }
        Ok(())
    }

    /// Drives `agent` for `horizon` rounds, calling `observe` once per round.
    pub fn drive(
        &self,
        agent: &mut dyn BanditAgent,
        horizon: u64,
        seed: u64,
        mut observe: impl FnMut(&RoundView<'_>),
    ) -> Result<()> {
        let instance = self.instance;
        let n_arms = instance.n_arms();
        let mut est = EstimatorState::new(instance.n_agents(), n_arms)?;
        let mut arm_rng = RngStream::new(seed, "arm-select", 0);
        let mut env: Vec<RngStream> = (0..n_arms)
            .map(|j| RngStream::new(seed, &format!("env/arm-{j}"), 0))
            .collect();
        let mut rewards = vec![0.0; instance.n_agents()];
        for t in 1..=horizon {
            let policy = agent.select_policy(&est)?;
            if policy.n_arms() != n_arms {
                return Err(Error::DimensionMismatch {
                    expected: n_arms,
                    found: policy.n_arms(),
                });
            }
            let arm = sample_arm(&policy, &mut arm_rng);
            sample_rewards_into(instance, arm, &mut env[arm], &mut rewards)?;
            let instant_regret =
                self.optimum.value - nsw_unchecked(policy.weights(), instance.true_means());
            observe(&RoundView {
                t,
                estimates: &est,
                policy: &policy,
                arm,
                rewards: &rewards,
                instant_regret,
            });
            est.update(arm, &rewards)?;
        }
        Ok(())
    }

    /// Runs `agent` and records every round.
    pub fn run_agent(
        &self,
        agent: &mut dyn BanditAgent,
        kind: AgentKind,
        horizon: u64,
        seed: u64,
    ) -> Result<RunTrace> {
        let mut records = Vec::with_capacity(horizon.min(1 << 24) as usize);
        self.drive(agent, horizon, seed, |v| {
            records.push(RoundRecord {
                t: v.t,
                policy: v.policy.clone(),
                arm: v.arm,
                rewards: v.rewards.to_vec(),
                instant_regret: v.instant_regret,
            })
        })?;
        Ok(RunTrace {
            seed,
            agent: kind,
            instance_id: self.instance_id.clone(),
            optimal_value: self.optimum.value,
            records,
        })
    }

    pub fn run_episode(&self, kind: AgentKind, horizon: u64, seed: u64) -> Result<RunTrace> {
        self.check_horizon(&kind, horizon)?;
        let mut agent = self.build_agent(&kind, seed)?;
        self.run_agent(agent.as_mut(), kind, horizon, seed)
    }

    fn build_agent(&self, kind: &AgentKind, seed: u64) -> Result<Box<dyn BanditAgent>> {
        kind.build(
            self.instance.n_agents(),
            self.instance.n_arms(),
            seed,
            &self.optimizer,
        )
    }

    /// Cumulative regret of one episode at each of `checkpoints` (sorted).
    fn regret_at(&self, kind: &AgentKind, horizon: u64, seed: u64, checkpoints: &[u64]) -> Result<Vec<f64>> {
        let mut agent = self.build_agent(kind, seed)?;
        let mut cumulative = 0.0;
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut next = 0;
        self.drive(agent.as_mut(), horizon, seed, |v| {
            cumulative += v.instant_regret;
            if next < checkpoints.len() && checkpoints[next] == v.t {
                out.push(cumulative);
                next += 1;
            }
        })?;
        Ok(out)
    }

    /// Mean and standard error of cumulative regret across `seeds`. Episodes
    /// run in parallel; results are merged in seed-list order.
    pub fn ensemble_regret(&self, kind: AgentKind, horizon: u64, seeds: &[u64]) -> Result<RegretCurve> {
        if seeds.is_empty() {
            return Err(Error::InvalidParameter("at least one seed is required".into()));
        }
        self.check_horizon(&kind, horizon)?;
        let checkpoints = geometric_checkpoints(horizon);
        let runs: Vec<Vec<f64>> = seeds
            .par_iter()
            .map(|&seed| self.regret_at(&kind, horizon, seed, &checkpoints))
            .collect::<Result<_>>()?;
        Ok(aggregate(&checkpoints, &runs))
    }

    /// Empirical frequency, across seeds, of the event that every estimated
    /// mean lies within its confidence radius of the true mean at the start
    /// of each checkpoint round.
    pub fn validate_clean_event(
        &self,
        kind: AgentKind,
        horizon: u64,
        seeds: &[u64],
        checkpoints: &[u64],
    ) -> Result<CleanEventReport> {
        self.validate_clean_event_scaled(kind, horizon, seeds, checkpoints, 1.0)
    }

    /// [`Self::validate_clean_event`] with every radius multiplied by
    /// `radius_scale`; values below 1 inject a deliberately wrong radius.
    pub fn validate_clean_event_scaled(
        &self,
        kind: AgentKind,
        horizon: u64,
        seeds: &[u64],
        checkpoints: &[u64],
        radius_scale: f64,
    ) -> Result<CleanEventReport> {
        if seeds.is_empty() {
            return Err(Error::InvalidParameter("at least one seed is required".into()));
        }
        let mut sorted = checkpoints.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.first().is_some_and(|&t| t == 0) || sorted.last().is_some_and(|&t| t > horizon) {
            return Err(Error::InvalidParameter(format!(
                "checkpoints must lie in [1, {horizon}]"
            )));
        }
        let last = sorted.last().copied().unwrap_or(0);
        if last == 0 {
            return Ok(CleanEventReport { rows: Vec::new() });
        }
        self.check_horizon(&kind, horizon)?;
        let mu = self.instance.true_means();
        let (n_agents, n_arms) = (self.instance.n_agents(), self.instance.n_arms());
        let per_seed: Vec<Vec<bool>> = seeds
            .par_iter()
            .map(|&seed| {
                let mut agent = self.build_agent(&kind, seed)?;
                let mut hits = Vec::with_capacity(sorted.len());
                let mut next = 0;
                // Running to the last checkpoint is enough: later rounds cannot
                // change earlier estimates.
                self.drive(agent.as_mut(), last, seed, |v| {
                    if next < sorted.len() && sorted[next] == v.t {
                        let est = v.estimates;
                        let clean = (0..n_arms).all(|j| {
                            let r = radius_scale
                                * confidence_radius(est.pull_counts()[j], v.t, n_agents, n_arms);
                            (0..n_agents).all(|i| (est.means().get(i, j) - mu.get(i, j)).abs() <= r)
                        });
                        hits.push(clean);
                        next += 1;
                    }
                })?;
                Ok(hits)
            })
            .collect::<Result<_>>()?;
        let rows = sorted
            .iter()
            .enumerate()
            .map(|(idx, &t)| {
                let clean = per_seed.iter().filter(|h| h[idx]).count();
                CleanEventRow {
                    t,
                    frequency: clean as f64 / seeds.len() as f64,
                    bound: 1.0 - 2.0 / (t as f64).powi(3),
                    seeds: seeds.len(),
                }
            })
            .collect();
        Ok(CleanEventReport { rows })
    }
}

fn aggregate(checkpoints: &[u64], runs: &[Vec<f64>]) -> RegretCurve {
    let n = runs.len();
    let points = checkpoints
        .iter()
        .enumerate()
        .map(|(idx, &t)| {
            let mean = runs.iter().map(|r| r[idx]).sum::<f64>() / n as f64;
            let stderr = if n > 1 {
                let var = runs.iter().map(|r| (r[idx] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            CurvePoint {
                t,
                mean_cum_regret: mean,
                stderr,
                n_seeds: n,
            }
        })
        .collect();
    RegretCurve { points }
}

/// One seeded episode with the default in-loop optimizer.
pub fn run_episode(instance: &BanditInstance, kind: AgentKind, horizon: u64, seed: u64) -> Result<RunTrace> {
    Harness::new(instance)?.run_episode(kind, horizon, seed)
}

pub fn ensemble_regret(
    instance: &BanditInstance,
    kind: AgentKind,
    horizon: u64,
    seeds: &[u64],
) -> Result<RegretCurve> {
    Harness::new(instance)?.ensemble_regret(kind, horizon, seeds)
}

pub fn validate_clean_event(
    instance: &BanditInstance,
    kind: AgentKind,
    horizon: u64,
    seeds: &[u64],
    checkpoints: &[u64],
) -> Result<CleanEventReport> {
    Harness::new(instance)?.validate_clean_event(kind, horizon, seeds, checkpoints)
}

/// Least-squares slope of `ln(mean cumulative regret)` against `ln(t)` over
/// checkpoints in `[t_min, t_max]` with positive mean.
pub fn fit_regret_slope(curve: &RegretCurve, t_min: u64, t_max: u64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.t >= t_min && p.t <= t_max && p.mean_cum_regret > 0.0)
        .map(|p| ((p.t as f64).ln(), p.mean_cum_regret.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Analysis(format!(
            "slope fit over [{t_min}, {t_max}] needs 3 checkpoints with positive regret, found {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Analysis("checkpoints do not span a range of t".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CleanEventRow {
    pub t: u64,
    pub frequency: f64,
    /// `1 - 2 / t^3`.
    pub bound: f64,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanEventReport {
    pub rows: Vec<CleanEventRow>,
}

impl CleanEventReport {
    /// True if every checkpoint's frequency is at least `bound - slack`.
    pub fn holds_with_slack(&self, slack: f64) -> bool {
        self.rows.iter().all(|r| r.frequency >= r.bound - slack)
    }
}

/// Sidecar description of a trace export.
#[derive(Debug, Clone, Serialize)]
pub struct TraceMetadata {
    pub instance_id: String,
    pub agent: String,
    pub algo: String,
    pub mode: Option<String>,
    pub exploration_len: Option<u64>,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    /// Constant in front of every asymptotic schedule.
    pub schedule_constant: f64,
    /// Lower clamp applied to `ln(N*K*t)`.
    pub log_clamp: f64,
    pub optimal_value: f64,
    pub optimal_policy: Vec<f64>,
}

impl TraceMetadata {
    pub fn new(harness: &Harness<'_>, kind: &AgentKind, horizon: u64, seeds: &[u64]) -> Self {
        TraceMetadata {
            instance_id: harness.instance_id().to_owned(),
            agent: kind.to_string(),
            algo: kind.name().to_owned(),
            mode: kind.mode().map(|m| m.as_str().to_owned()),
            exploration_len: match kind {
                AgentKind::ExploreFirst { exploration_len, .. } => Some(*exploration_len),
                _ => None,
            },
            horizon,
            seeds: seeds.to_vec(),
            schedule_constant: 1.0,
            log_clamp: 1.0,
            optimal_value: harness.optimum().value,
            optimal_policy: harness.optimum().policy.weights().to_vec(),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("metadata is plain data")
    }
}

fn csv_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

fn write_header_comment<W: Write>(out: &mut W, header: Option<&str>) -> std::io::Result<()> {
    if let Some(h) = header {
        for line in h.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    Ok(())
}

/// Writes `seed,t,arm,instant_regret,cum_regret` rows, preceded by `header`
/// as `#`-comment lines. Arms are 0-based.
pub fn write_trace_csv<W: Write>(out: W, header: Option<&str>, traces: &[RunTrace]) -> std::io::Result<()> {
    let mut out = out;
    write_header_comment(&mut out, header)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "t", "arm", "instant_regret", "cum_regret"])
        .map_err(csv_err)?;
    for trace in traces {
        let mut cum = 0.0;
        for r in &trace.records {
            cum += r.instant_regret;
            w.write_record([
                trace.seed.to_string(),
                r.t.to_string(),
                r.arm.to_string(),
                r.instant_regret.to_string(),
                cum.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()
}

/// Writes `t,mean_cum_regret,stderr,n_seeds` rows.
pub fn write_curve_csv<W: Write>(out: W, header: Option<&str>, curve: &RegretCurve) -> std::io::Result<()> {
    let mut out = out;
    write_header_comment(&mut out, header)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "mean_cum_regret", "stderr", "n_seeds"])
        .map_err(csv_err)?;
    for p in &curve.points {
        w.write_record([
            p.t.to_string(),
            p.mean_cum_regret.to_string(),
            p.stderr.to_string(),
            p.n_seeds.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

/// Writes several labelled curves as `algo,t,mean_cum_regret,stderr,n_seeds`.
pub fn write_labelled_curves_csv<W: Write>(
    out: W,
    header: Option<&str>,
    curves: &[(String, RegretCurve)],
) -> std::io::Result<()> {
    let mut out = out;
    write_header_comment(&mut out, header)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algo", "t", "mean_cum_regret", "stderr", "n_seeds"])
        .map_err(csv_err)?;
    for (label, curve) in curves {
        for p in &curve.points {
            w.write_record([
                label.clone(),
                p.t.to_string(),
                p.mean_cum_regret.to_string(),
                p.stderr.to_string(),
                p.n_seeds.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::ScheduleMode;

    struct FixedPolicy(Policy);

    impl BanditAgent for FixedPolicy {
        fn select_policy(&mut self, _: &EstimatorState) -> Result<Policy> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn optimum_examples() {
        let split = optimal_nsw(&BanditInstance::majority_split()).unwrap();
        assert!((split.policy.weight(0) - 0.4).abs() < 1e-3);
        let expected = 0.4f64.powi(4) * 0.6f64.powi(6);
        assert!((split.value - expected).abs() < 1e-9);

        let single = optimal_nsw(&BanditInstance::bernoulli(&[vec![0.7, 0.3]]).unwrap()).unwrap();
        assert!((single.policy.weight(0) - 1.0).abs() < 1e-9);
        assert!((single.value - 0.7).abs() < 1e-12);

        let flat = optimal_nsw(&BanditInstance::bernoulli(&vec![vec![0.5, 0.5]; 4]).unwrap()).unwrap();
        assert!((flat.value - 0.5f64.powi(4)).abs() < 1e-15);
    }

    #[test]
    fn checkpoints_are_ten_per_decade() {
        let c = geometric_checkpoints(100);
        assert_eq!(c, vec![1, 2, 3, 4, 6, 7, 8, 10, 13, 16, 20, 26, 32, 40, 51, 64, 80, 100]);
        let c = geometric_checkpoints(100_000);
        for t in [1, 10, 100, 1000, 10_000, 100_000] {
            assert!(c.contains(&t));
        }
        assert_eq!(geometric_checkpoints(150).last(), Some(&150));
        assert_eq!(geometric_checkpoints(1), vec![1]);
    }

    #[test]
    fn slope_of_exact_power_laws() {
        let curve = |f: fn(f64) -> f64| RegretCurve {
            points: geometric_checkpoints(100_000)
                .into_iter()
                .map(|t| CurvePoint {
                    t,
                    mean_cum_regret: f(t as f64),
                    stderr: 0.0,
                    n_seeds: 1,
                })
                .collect(),
        };
        assert!((fit_regret_slope(&curve(|t| t), 1, 100_000).unwrap() - 1.0).abs() < 1e-9);
        assert!((fit_regret_slope(&curve(f64::sqrt), 1, 100_000).unwrap() - 0.5).abs() < 1e-9);
        let s = fit_regret_slope(&curve(|t| t.powf(2.0 / 3.0)), 10, 10_000).unwrap();
        assert!((s - 2.0 / 3.0).abs() < 1e-6);
        assert!(matches!(
            fit_regret_slope(&curve(|t| t), 50, 60),
            Err(Error::Analysis(_))
        ));
        assert!(fit_regret_slope(&curve(|_| 0.0), 1, 100_000).is_err());
    }

    #[test]
    fn optimal_stub_has_zero_regret() {
        let inst = BanditInstance::benchmark();
        let h = Harness::new(&inst).unwrap();
        let mut agent = FixedPolicy(h.optimum().policy.clone());
        let kind = AgentKind::Ucb { mode: ScheduleMode::A };
        let trace = h.run_agent(&mut agent, kind, 500, 3).unwrap();
        assert_eq!(trace.records.len(), 500);
        assert!(trace.total_regret().abs() <= 1e-6 * 500.0);
    }

    #[test]
    fn explore_first_on_majority_split() {
        let inst = BanditInstance::majority_split();
        let kind = AgentKind::ExploreFirst {
            horizon: 100,
            exploration_len: 5,
        };
        let trace = run_episode(&inst, kind, 100, 1).unwrap();
        for r in &trace.records[..10] {
            assert_eq!(r.policy.weight(r.arm), 1.0);
        }
        for r in &trace.records[10..] {
            assert!((r.policy.weight(0) - 0.4).abs() <= 1e-3);
            assert!(r.instant_regret <= 10.0 * 2e-3);
        }
    }

    #[test]
    fn episodes_are_deterministic_and_prefix_stable() {
        let inst = BanditInstance::benchmark();
        let h = Harness::new(&inst).unwrap();
        for kind in [
            AgentKind::EpsilonGreedy { mode: ScheduleMode::A },
            AgentKind::Ucb { mode: ScheduleMode::B },
        ] {
            let a = h.run_episode(kind, 300, 8).unwrap();
            let b = h.run_episode(kind, 300, 8).unwrap();
            assert_eq!(a, b);
            let longer = h.run_episode(kind, 600, 8).unwrap();
            assert_eq!(&longer.records[..300], &a.records[..]);
        }
    }

    #[test]
    fn traces_respect_regret_invariants() {
        let inst = BanditInstance::benchmark();
        let h = Harness::new(&inst).unwrap();
        for kind in [
            AgentKind::explore_first(ScheduleMode::B, 3, 3, 400).unwrap(),
            AgentKind::EpsilonGreedy { mode: ScheduleMode::B },
            AgentKind::Ucb { mode: ScheduleMode::A },
        ] {
            let trace = h.run_episode(kind, 400, 2).unwrap();
            assert_eq!(trace.records.len(), 400);
            for r in &trace.records {
                let direct = h.optimum().value - nsw_unchecked(r.policy.weights(), inst.true_means());
                assert!((r.instant_regret - direct).abs() <= 1e-9);
                assert!(r.instant_regret >= -1e-9);
                assert!(r.rewards.iter().all(|x| (0.0..=1.0).contains(x)));
            }
            assert!(trace.total_regret() <= 400.0);
        }
    }

    #[test]
    fn environment_streams_pair_across_algorithms() {
        let inst = BanditInstance::benchmark();
        let h = Harness::new(&inst).unwrap();
        let a = h.run_episode(AgentKind::Ucb { mode: ScheduleMode::A }, 300, 4).unwrap();
        let b = h.run_episode(AgentKind::EpsilonGreedy { mode: ScheduleMode::A }, 300, 4).unwrap();
        let by_pull = |trace: &RunTrace| {
            let mut per_arm: Vec<Vec<Vec<f64>>> = vec![Vec::new(); 3];
            for r in &trace.records {
                per_arm[r.arm].push(r.rewards.clone());
            }
            per_arm
        };
        let (pa, pb) = (by_pull(&a), by_pull(&b));
        let mut compared = 0;
        for arm in 0..3 {
            for (x, y) in pa[arm].iter().zip(&pb[arm]) {
                assert_eq!(x, y);
                compared += 1;
            }
        }
        assert!(compared > 100);
    }

    #[test]
    fn ensemble_single_seed_matches_episode() {
        let inst = BanditInstance::benchmark();
        let h = Harness::new(&inst).unwrap();
        let kind = AgentKind::EpsilonGreedy { mode: ScheduleMode::A };
        let curve = h.ensemble_regret(kind, 200, &[6]).unwrap();
        let cum = h.run_episode(kind, 200, 6).unwrap().cumulative_regret();
        for p in &curve.points {
            assert_eq!(p.mean_cum_regret, cum[p.t as usize - 1]);
            assert_eq!((p.stderr, p.n_seeds), (0.0, 1));
        }
        assert!(h.ensemble_regret(kind, 200, &[]).is_err());
    }

    #[test]
    fn clean_event_on_deterministic_rewards() {
        let inst = BanditInstance::majority_split();
        let h = Harness::new(&inst).unwrap();
        let report = h
            .validate_clean_event(AgentKind::Ucb { mode: ScheduleMode::A }, 200, &[1, 2, 3], &[1, 10, 100, 200])
            .unwrap();
        assert!(report.rows.iter().all(|r| r.frequency == 1.0));
        assert!(report.rows[0].bound < 0.0);
        assert!(h
            .validate_clean_event(AgentKind::Ucb { mode: ScheduleMode::A }, 100, &[1], &[101])
            .is_err());
    }

    #[test]
    fn curve_csv_layout() {
        let curve = RegretCurve {
            points: vec![CurvePoint {
                t: 10,
                mean_cum_regret: 0.5,
                stderr: 0.25,
                n_seeds: 2,
            }],
        };
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, Some("config_hash=abc"), &curve).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "# config_hash=abc\nt,mean_cum_regret,stderr,n_seeds\n10,0.5,0.25,2\n"
        );
    }
}
