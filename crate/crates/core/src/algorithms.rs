//! Explore-First, Epsilon-Greedy and UCB agents that select a policy each round.
//!
//! Every agent reads the shared [`EstimatorState`] (pull counts and running
//! mean rewards) and returns a [`Policy`]. The harness samples an arm from it,
//! draws rewards and calls [`EstimatorState::update`]; agents never mutate the
//! estimates themselves.
//!
//! All `log(NKt)` terms are evaluated as `max(ln(N*K*t), 1)` and all
//! asymptotic schedule constants are 1.

use std::fmt;

use rand::Rng;

use crate::env::RngStream;
use crate::error::{Error, Result};
use crate::nsw::{Policy, RewardMatrix};
use crate::simplex::{maximize_nsw, maximize_ucb_objective, OptimizerConfig};

/// Pull counts and running mean rewards at the start of a round.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pull_counts: Vec<u64>,
    means: RewardMatrix,
    round: u64,
}

impl EstimatorState {
    /// State at the start of round 1: nothing pulled, all estimates 0.
    pub fn new(n_agents: usize, n_arms: usize) -> Result<Self> {
        Ok(EstimatorState {
            pull_counts: vec![0; n_arms],
            means: RewardMatrix::zeros(n_agents, n_arms)?,
            round: 1,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.means.n_agents()
    }

    pub fn n_arms(&self) -> usize {
        self.means.n_arms()
    }

    /// Current round `t`, starting at 1.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn pull_counts(&self) -> &[u64] {
        &self.pull_counts
    }

    /// Estimated means; entries of never-pulled arms are 0.
    pub fn means(&self) -> &RewardMatrix {
        &self.means
    }

    /// Records the rewards observed for `arm` and advances the round.
    pub fn update(&mut self, arm: usize, rewards: &[f64]) -> Result<()> {
        if arm >= self.n_arms() {
            return Err(Error::IndexOutOfRange {
                what: "arm",
                index: arm,
                len: self.n_arms(),
            });
        }
        if rewards.len() != self.n_agents() {
            return Err(Error::DimensionMismatch {
                expected: self.n_agents(),
                found: rewards.len(),
            });
        }
        if let Some(bad) = rewards.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::Contract(format!("reward {bad} outside [0, 1]")));
        }
        self.pull_counts[arm] += 1;
        let n = self.pull_counts[arm] as f64;
        for (agent, &x) in rewards.iter().enumerate() {
            let old = self.means.get(agent, arm);
            self.means.set(agent, arm, old + (x - old) / n);
        }
        self.round += 1;
        Ok(())
    }
}

/// Which of the two parameter regimes to use for a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleMode {
    /// Favors the dependence on the number of arms.
    A,
    /// Favors the dependence on the number of agents.
    B,
}

impl ScheduleMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScheduleMode::A => "a",
            ScheduleMode::B => "b",
        }
    }
}

impl fmt::Display for ScheduleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ScheduleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(ScheduleMode::A),
            "b" => Ok(ScheduleMode::B),
            other => Err(Error::parse("mode", format!("expected `a` or `b`, got `{other}`"))),
        }
    }
}

/// `max(ln(N*K*t), 1)`.
pub fn clamped_log(n_agents: usize, n_arms: usize, t: u64) -> f64 {
    (n_agents as f64 * n_arms as f64 * t as f64).ln().max(1.0)
}

/// Confidence radius `sqrt(2 log(NKt) / n)`; infinite for an arm never pulled.
pub fn confidence_radius(pulls: u64, t: u64, n_agents: usize, n_arms: usize) -> f64 {
    if pulls == 0 {
        return f64::INFINITY;
    }
    (2.0 * clamped_log(n_agents, n_arms, t) / pulls as f64).sqrt()
}

/// Exploration length of Explore-First, clamped to `[1, floor(T / 2K)]`
/// (when `T < 2K` the upper clamp is empty and `L = 1`).
pub fn explore_first_len(
    mode: ScheduleMode,
    n_agents: usize,
    n_arms: usize,
    horizon: u64,
) -> Result<u64> {
    if n_agents == 0 || n_arms == 0 {
        return Err(Error::InvalidParameter("need at least one agent and one arm".into()));
    }
    if horizon < n_arms as u64 {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} is shorter than the number of arms {n_arms}"
        )));
    }
    let n = n_agents as f64;
    let k = n_arms as f64;
    let t = horizon as f64;
    let log = clamped_log(n_agents, n_arms, horizon);
    let raw = match mode {
        ScheduleMode::A => n.powf(2.0 / 3.0) * k.powf(-2.0 / 3.0) * t.powf(2.0 / 3.0) * log.cbrt(),
        ScheduleMode::B => n.cbrt() * k.powf(-1.0 / 3.0) * t.powf(2.0 / 3.0) * log.powf(2.0 / 3.0),
    };
    let upper = horizon / (2 * n_arms as u64);
    Ok((raw.ceil() as u64).min(upper).max(1))
}

/// Exploration probability of Epsilon-Greedy at round `t`, clamped to `[0, 1]`.
pub fn epsilon_schedule(mode: ScheduleMode, n_agents: usize, n_arms: usize, t: u64) -> f64 {
    let n = n_agents as f64;
    let k = n_arms as f64;
    let t_f = t.max(1) as f64;
    let log = clamped_log(n_agents, n_arms, t.max(1));
    let raw = match mode {
        ScheduleMode::A => n.powf(2.0 / 3.0) * k.cbrt() * t_f.powf(-1.0 / 3.0) * log.cbrt(),
        ScheduleMode::B => n.cbrt() * k.powf(2.0 / 3.0) * t_f.powf(-1.0 / 3.0) * log.powf(2.0 / 3.0),
    };
    raw.min(1.0)
}

/// Weight `alpha^t` of the confidence bonus in the UCB objective.
pub fn ucb_alpha(mode: ScheduleMode, n_agents: usize, n_arms: usize, t: u64) -> f64 {
    match mode {
        ScheduleMode::A => n_agents as f64,
        ScheduleMode::B => {
            (12.0 * n_agents as f64 * n_arms as f64 * clamped_log(n_agents, n_arms, t.max(1))).sqrt()
        }
    }
}

/// A bandit algorithm that picks a policy each round.
pub trait BanditAgent: Send {
    fn select_policy(&mut self, est: &EstimatorState) -> Result<Policy>;
}

/// Algorithm selection plus its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentKind {
    ExploreFirst { horizon: u64, exploration_len: u64 },
    EpsilonGreedy { mode: ScheduleMode },
    Ucb { mode: ScheduleMode },
}

impl AgentKind {
    /// Explore-First with the exploration length from [`explore_first_len`].
    pub fn explore_first(mode: ScheduleMode, n_agents: usize, n_arms: usize, horizon: u64) -> Result<Self> {
        Ok(AgentKind::ExploreFirst {
            horizon,
            exploration_len: explore_first_len(mode, n_agents, n_arms, horizon)?,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            AgentKind::ExploreFirst { .. } => "explorefirst",
            AgentKind::EpsilonGreedy { .. } => "epsgreedy",
            AgentKind::Ucb { .. } => "ucb",
        }
    }

    pub fn mode(&self) -> Option<ScheduleMode> {
        match self {
            AgentKind::ExploreFirst { .. } => None,
            AgentKind::EpsilonGreedy { mode } | AgentKind::Ucb { mode } => Some(*mode),
        }
    }

    /// Instantiates the agent. `seed` feeds the agent's own random stream
    /// (only Epsilon-Greedy flips coins).
    pub fn build(
        &self,
        n_agents: usize,
        n_arms: usize,
        seed: u64,
        cfg: &OptimizerConfig,
    ) -> Result<Box<dyn BanditAgent>> {
        cfg.validate()?;
        Ok(match *self {
            AgentKind::ExploreFirst {
                horizon,
                exploration_len,
            } => Box::new(ExploreFirst::new(n_arms, horizon, exploration_len, *cfg)?),
            AgentKind::EpsilonGreedy { mode } => Box::new(EpsilonGreedy::new(
                mode,
                n_agents,
                n_arms,
                RngStream::new(seed, "algo-coin", 0),
                *cfg,
            )?),
            AgentKind::Ucb { mode } => Box::new(Ucb::new(mode, n_agents, n_arms, *cfg)?),
        })
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentKind::ExploreFirst {
                horizon,
                exploration_len,
            } => write!(f, "explorefirst(T={horizon},L={exploration_len})"),
            AgentKind::EpsilonGreedy { mode } => write!(f, "epsgreedy-{mode}"),
            AgentKind::Ucb { mode } => write!(f, "ucb-{mode}"),
        }
    }
}

fn check_shape(est: &EstimatorState, n_arms: usize) -> Result<()> {
    if est.n_arms() != n_arms {
        return Err(Error::DimensionMismatch {
            expected: n_arms,
            found: est.n_arms(),
        });
    }
    Ok(())
}

/// Pulls each arm `L` times in blocks, then plays one fixed policy that
/// maximizes the estimated welfare.
#[derive(Debug, Clone)]
pub struct ExploreFirst {
    n_arms: usize,
    horizon: u64,
    exploration_len: u64,
    cfg: OptimizerConfig,
    exploit: Option<Policy>,
}

impl ExploreFirst {
    pub fn new(n_arms: usize, horizon: u64, exploration_len: u64, cfg: OptimizerConfig) -> Result<Self> {
        if n_arms == 0 {
            return Err(Error::InvalidParameter("need at least one arm".into()));
        }
        if horizon == 0 || exploration_len == 0 {
            return Err(Error::InvalidParameter(
                "explore-first needs horizon >= 1 and exploration length >= 1".into(),
            ));
        }
        let explore_rounds = (n_arms as u64).checked_mul(exploration_len);
        if explore_rounds.is_none_or(|r| r > horizon) {
            return Err(Error::InvalidParameter(format!(
                "K*L = {n_arms}*{exploration_len} exceeds horizon {horizon}"
            )));
        }
        Ok(ExploreFirst {
            n_arms,
            horizon,
            exploration_len,
            cfg,
            exploit: None,
        })
    }

    pub fn exploration_rounds(&self) -> u64 {
        self.n_arms as u64 * self.exploration_len
    }

    /// The cached exploitation policy, once computed.
    pub fn exploitation_policy(&self) -> Option<&Policy> {
        self.exploit.as_ref()
    }
}

impl BanditAgent for ExploreFirst {
    fn select_policy(&mut self, est: &EstimatorState) -> Result<Policy> {
        check_shape(est, self.n_arms)?;
        let t = est.round();
        if t > self.horizon {
            return Err(Error::Contract(format!(
                "round {t} is beyond the horizon {}",
                self.horizon
            )));
        }
        if t <= self.exploration_rounds() {
            let arm = ((t - 1) / self.exploration_len) as usize;
            return Policy::point_mass(self.n_arms, arm);
        }
        if self.exploit.is_none() {
            self.exploit = Some(maximize_nsw(est.means(), &self.cfg)?.policy);
        }
        Ok(self.exploit.clone().expect("just cached"))
    }
}

/// Explores round-robin with probability `epsilon^t`, otherwise plays the
/// welfare maximizer of the current estimates.
#[derive(Debug, Clone)]
pub struct EpsilonGreedy {
    mode: ScheduleMode,
    n_agents: usize,
    n_arms: usize,
    next_arm: usize,
    coin: RngStream,
    cfg: OptimizerConfig,
    last_explored: bool,
}

impl EpsilonGreedy {
    pub fn new(
        mode: ScheduleMode,
        n_agents: usize,
        n_arms: usize,
        coin: RngStream,
        cfg: OptimizerConfig,
    ) -> Result<Self> {
        if n_agents == 0 || n_arms == 0 {
            return Err(Error::InvalidParameter("need at least one agent and one arm".into()));
        }
        Ok(EpsilonGreedy {
            mode,
            n_agents,
            n_arms,
            next_arm: 0,
            coin,
            cfg,
            last_explored: false,
        })
    }

    /// Arm the next exploration round will pull.
    pub fn next_exploration_arm(&self) -> usize {
        self.next_arm
    }

    /// Whether the most recent call explored.
    pub fn last_explored(&self) -> bool {
        self.last_explored
    }
}

impl BanditAgent for EpsilonGreedy {
    fn select_policy(&mut self, est: &EstimatorState) -> Result<Policy> {
        check_shape(est, self.n_arms)?;
        let epsilon = epsilon_schedule(self.mode, self.n_agents, self.n_arms, est.round());
        // One coin per round, always drawn, so the stream stays aligned.
        let explore = self.coin.random::<f64>() < epsilon;
        self.last_explored = explore;
        if explore {
            let arm = self.next_arm;
            self.next_arm = (self.next_arm + 1) % self.n_arms;
            return Policy::point_mass(self.n_arms, arm);
        }
        Ok(maximize_nsw(est.means(), &self.cfg)?.policy)
    }
}

/// Pulls each arm once, then maximizes estimated welfare plus a confidence bonus.
#[derive(Debug, Clone)]
pub struct Ucb {
    mode: ScheduleMode,
    n_agents: usize,
    n_arms: usize,
    cfg: OptimizerConfig,
}

impl Ucb {
    pub fn new(mode: ScheduleMode, n_agents: usize, n_arms: usize, cfg: OptimizerConfig) -> Result<Self> {
        if n_agents == 0 || n_arms == 0 {
            return Err(Error::InvalidParameter("need at least one agent and one arm".into()));
        }
        Ok(Ucb {
            mode,
            n_agents,
            n_arms,
            cfg,
        })
    }

    /// Confidence radius of every arm at the state's round.
    pub fn radii(&self, est: &EstimatorState) -> Vec<f64> {
        est.pull_counts()
            .iter()
            .map(|&n| confidence_radius(n, est.round(), self.n_agents, self.n_arms))
            .collect()
    }
}

impl BanditAgent for Ucb {
    fn select_policy(&mut self, est: &EstimatorState) -> Result<Policy> {
        check_shape(est, self.n_arms)?;
        let t = est.round();
        if t <= self.n_arms as u64 {
            return Policy::point_mass(self.n_arms, (t - 1) as usize);
        }
        let radii = self.radii(est);
        if radii.iter().any(|r| !r.is_finite()) {
            return Err(Error::Contract(format!(
                "round {t}: every arm must be pulled before the UCB objective is used"
            )));
        }
        let alpha = ucb_alpha(self.mode, self.n_agents, self.n_arms, t);
        Ok(maximize_ucb_objective(est.means(), &radii, alpha, &self.cfg)?.policy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{sample_arm, sample_rewards, BanditInstance};
    use crate::simplex::brute_force_maximize;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn update_examples() {
        let mut est = EstimatorState::new(1, 2).unwrap();
        est.update(0, &[0.2]).unwrap();
        assert_eq!(est.means().get(0, 0), 0.2);
        assert_eq!(est.pull_counts(), &[1, 0]);
        est.update(0, &[0.4]).unwrap();
        assert!((est.means().get(0, 0) - 0.3).abs() < 1e-15);
        assert_eq!(est.means().get(0, 1), 0.0);
        assert_eq!(est.round(), 3);
        assert!(matches!(est.update(1, &[1.2]), Err(Error::Contract(_))));
        assert!(est.update(2, &[0.5]).is_err());
        assert!(est.update(1, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn radius_examples() {
        assert_eq!(confidence_radius(0, 10, 2, 2), f64::INFINITY);
        let r = confidence_radius(4, 25, 2, 2);
        let oracle = (2.0 * 100f64.ln() / 4.0).sqrt();
        assert!((r - oracle).abs() < 1e-12);
        assert!((r - 1.517427).abs() < 1e-6);
        let mut prev = f64::INFINITY;
        for n in [1, 10, 100, 10_000, 1_000_000_000] {
            let r = confidence_radius(n, 1000, 3, 3);
            assert!(r < prev);
            prev = r;
        }
        assert!(prev < 1e-3);
        // log clamp at N = K = t = 1
        assert_eq!(confidence_radius(2, 1, 1, 1), 1.0);
    }

    #[test]
    fn radius_times_sqrt_n_is_constant() {
        let base = confidence_radius(1, 77, 3, 4);
        for n in [2, 5, 40, 999] {
            assert!((confidence_radius(n, 77, 3, 4) * (n as f64).sqrt() - base).abs() < 1e-12);
        }
    }

    #[test]
    fn explore_first_len_examples() {
        for t in [2u64, 10, 100, 1000, 100_000] {
            let raw = ((t as f64).powf(2.0 / 3.0) * (t as f64).ln().max(1.0).cbrt()).ceil() as u64;
            let expected = raw.min(t / 2).max(1);
            assert_eq!(explore_first_len(ScheduleMode::A, 1, 1, t).unwrap(), expected);
        }
        assert_eq!(explore_first_len(ScheduleMode::A, 4, 5, 5).unwrap(), 1);
        assert_eq!(explore_first_len(ScheduleMode::B, 4, 5, 5).unwrap(), 1);
        for mode in [ScheduleMode::A, ScheduleMode::B] {
            for (n, k, t) in [(3, 3, 50), (1, 4, 1000), (10, 2, 12), (2, 7, 100_000)] {
                let l = explore_first_len(mode, n, k, t).unwrap();
                assert!(l >= 1 && k as u64 * l <= t / 2, "{mode} {n} {k} {t} -> {l}");
            }
        }
        assert!(explore_first_len(ScheduleMode::A, 1, 5, 4).is_err());
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon_schedule(ScheduleMode::A, 3, 3, 1), 1.0);
        assert_eq!(epsilon_schedule(ScheduleMode::B, 3, 3, 2), 1.0);
        let e = epsilon_schedule(ScheduleMode::A, 1, 1, 1_000_000);
        let oracle = 1e-2 * 1e6f64.ln().cbrt();
        assert!((e - oracle).abs() < 1e-12);
        assert!((e - 0.023_995_09).abs() < 1e-7);
        assert!(epsilon_schedule(ScheduleMode::A, 1, 1, 1 << 60) < 1e-5);
        for mode in [ScheduleMode::A, ScheduleMode::B] {
            let mut prev = 1.0;
            for t in (3..200_000).step_by(997) {
                let e = epsilon_schedule(mode, 3, 3, t);
                assert!(e <= prev + 1e-15 && (0.0..=1.0).contains(&e));
                prev = e;
            }
        }
    }

    #[test]
    fn alpha_examples() {
        for t in [1, 10, 1_000_000] {
            assert_eq!(ucb_alpha(ScheduleMode::A, 7, 3, t), 7.0);
        }
        assert!((ucb_alpha(ScheduleMode::B, 1, 1, 2) - 12f64.sqrt()).abs() < 1e-12);
        assert!((ucb_alpha(ScheduleMode::B, 1, 1, 2) - 3.4641).abs() < 1e-4);
        let mut prev = 0.0;
        for t in [1, 2, 5, 50, 5000, 5_000_000] {
            let a = ucb_alpha(ScheduleMode::B, 2, 3, t);
            assert!(a >= prev);
            prev = a;
        }
    }

    fn state_at(n_agents: usize, n_arms: usize, round: u64) -> EstimatorState {
        let mut est = EstimatorState::new(n_agents, n_arms).unwrap();
        for t in 1..round {
            est.update(((t - 1) % n_arms as u64) as usize, &vec![0.5; n_agents]).unwrap();
        }
        est
    }

    #[test]
    fn explore_first_blocks() {
        let cfg = OptimizerConfig::default();
        let mut agent = ExploreFirst::new(2, 10, 2, cfg).unwrap();
        assert_eq!(agent.select_policy(&state_at(1, 2, 3)).unwrap(), Policy::point_mass(2, 1).unwrap());
        let mut agent = ExploreFirst::new(3, 10, 1, cfg).unwrap();
        assert_eq!(agent.select_policy(&state_at(1, 3, 2)).unwrap(), Policy::point_mass(3, 1).unwrap());
        assert!(matches!(
            agent.select_policy(&state_at(1, 3, 11)),
            Err(Error::Contract(_))
        ));
        assert!(ExploreFirst::new(3, 5, 2, cfg).is_err());
    }

    #[test]
    fn explore_first_caches_welfare_maximizer() {
        let inst = BanditInstance::majority_split();
        let mut agent = ExploreFirst::new(2, 100, 5, OptimizerConfig::default()).unwrap();
        let mut est = EstimatorState::new(10, 2).unwrap();
        let mut env = RngStream::new(0, "env", 0);
        for _ in 0..10 {
            let p = agent.select_policy(&est).unwrap();
            let arm = p.weights().iter().position(|&w| w == 1.0).unwrap();
            est.update(arm, &sample_rewards(&inst, arm, &mut env).unwrap()).unwrap();
        }
        let first = agent.select_policy(&est).unwrap();
        assert!(close(first.weights(), &[0.4, 0.6], 1e-3));
        est.update(1, &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(agent.select_policy(&est).unwrap(), first);
        assert_eq!(agent.exploitation_policy(), Some(&first));
    }

    #[test]
    fn epsilon_greedy_explores_first_k_rounds_in_order() {
        let n = 3;
        let k = 3;
        for t in 1..=k as u64 {
            let oracle = (n as f64).powf(2.0 / 3.0) * (k as f64).cbrt() * (t as f64).powf(-1.0 / 3.0)
                * ((n * k) as f64 * t as f64).ln().max(1.0).cbrt();
            assert!(oracle >= 1.0);
        }
        let mut agent = EpsilonGreedy::new(
            ScheduleMode::A,
            n,
            k,
            RngStream::new(5, "algo-coin", 0),
            OptimizerConfig::default(),
        )
        .unwrap();
        let mut est = EstimatorState::new(n, k).unwrap();
        for arm in 0..k {
            let p = agent.select_policy(&est).unwrap();
            assert!(agent.last_explored());
            assert_eq!(p, Policy::point_mass(k, arm).unwrap());
            est.update(arm, &[0.5; 3]).unwrap();
        }
        assert_eq!(agent.next_exploration_arm(), 0);
    }

    #[test]
    fn epsilon_greedy_exploits_estimated_optimum() {
        let mut est = EstimatorState::new(10, 2).unwrap();
        est.update(0, &[1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        est.update(1, &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let mut agent = EpsilonGreedy::new(
            ScheduleMode::A,
            10,
            2,
            RngStream::new(0, "algo-coin", 0),
            OptimizerConfig::default(),
        )
        .unwrap();
        // At a late round epsilon is small; take the first exploitation.
        let late = EstimatorState {
            round: 1_000_000_000,
            ..est
        };
        let p = loop {
            let p = agent.select_policy(&late).unwrap();
            if !agent.last_explored() {
                break p;
            }
        };
        assert!(close(p.weights(), &[0.4, 0.6], 1e-3));
    }

    #[test]
    fn ucb_initialization_and_limit() {
        let cfg = OptimizerConfig::default();
        let mut agent = Ucb::new(ScheduleMode::A, 1, 3, cfg).unwrap();
        assert_eq!(agent.select_policy(&state_at(1, 3, 2)).unwrap(), Policy::point_mass(3, 1).unwrap());

        // Deterministic rewards with many pulls: radii vanish.
        let inst = BanditInstance::majority_split();
        let mut est = EstimatorState::new(10, 2).unwrap();
        let mut env = RngStream::new(0, "env", 0);
        for t in 0..2_000_000u64 {
            let arm = (t % 2) as usize;
            est.update(arm, &sample_rewards(&inst, arm, &mut env).unwrap()).unwrap();
        }
        let mut agent = Ucb::new(ScheduleMode::A, 10, 2, cfg).unwrap();
        let p = agent.select_policy(&est).unwrap();
        let target = maximize_nsw(inst.true_means(), &cfg).unwrap().policy;
        assert!(close(p.weights(), target.weights(), 1e-2), "{p:?}");
    }

    #[test]
    fn ucb_favors_stale_arm() {
        // N=1, K=2, equal estimates; arm 1 pulled once, arm 0 many times.
        let mut est = EstimatorState::new(1, 2).unwrap();
        est.update(0, &[0.5]).unwrap();
        est.update(1, &[0.5]).unwrap();
        for _ in 0..50 {
            est.update(0, &[0.5]).unwrap();
        }
        let mut agent = Ucb::new(ScheduleMode::A, 1, 2, OptimizerConfig::default()).unwrap();
        let radii = agent.radii(&est);
        assert!(radii[1] > radii[0]);
        let p = agent.select_policy(&est).unwrap();
        assert!(p.weight(1) >= 0.5);
        let alpha = ucb_alpha(ScheduleMode::A, 1, 2, est.round());
        let oracle = brute_force_maximize(
            |q| 0.5 + alpha * (q.weight(0) * radii[0] + q.weight(1) * radii[1]),
            2,
            100,
        )
        .unwrap();
        assert!(close(p.weights(), oracle.policy.weights(), 1e-9));
    }

    #[test]
    fn sum_identity_for_all_agents() {
        let inst = BanditInstance::benchmark();
        let cfg = OptimizerConfig::default();
        let kinds = [
            AgentKind::explore_first(ScheduleMode::A, 3, 3, 200).unwrap(),
            AgentKind::EpsilonGreedy { mode: ScheduleMode::B },
            AgentKind::Ucb { mode: ScheduleMode::A },
        ];
        for kind in kinds {
            let mut agent = kind.build(3, 3, 7, &cfg).unwrap();
            let mut est = EstimatorState::new(3, 3).unwrap();
            let mut env = RngStream::new(7, "env", 0);
            let mut arms = RngStream::new(7, "arm-select", 0);
            for t in 1..=200u64 {
                assert_eq!(est.pull_counts().iter().sum::<u64>(), t - 1);
                let p = agent.select_policy(&est).unwrap();
                let arm = sample_arm(&p, &mut arms);
                est.update(arm, &sample_rewards(&inst, arm, &mut env).unwrap()).unwrap();
            }
        }
    }
}
