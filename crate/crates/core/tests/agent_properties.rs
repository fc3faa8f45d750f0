use nswbandit::algorithms::{EpsilonGreedy, ExploreFirst, Ucb};
use nswbandit::{
    AgentKind, BanditAgent, BanditInstance, EstimatorState, Harness, OptimizerConfig, Policy, RewardDistribution,
    RngStream, ScheduleMode,
};
use proptest::prelude::*;

fn distribution() -> impl Strategy<Value = RewardDistribution> {
    prop_oneof![
        (0.0..=1.0f64).prop_map(|m| RewardDistribution::bernoulli(m).unwrap()),
        (0.0..=1.0f64).prop_map(|v| RewardDistribution::point_mass(v).unwrap()),
        (0.2..5.0f64, 0.2..5.0f64).prop_map(|(a, b)| RewardDistribution::beta(a, b).unwrap()),
        (0.0..=1.0f64, 0.0..=1.0f64)
            .prop_map(|(x, y)| RewardDistribution::uniform(x.min(y), x.max(y)).unwrap()),
    ]
}

fn instance() -> impl Strategy<Value = BanditInstance> {
    (1usize..=3, 1usize..=4).prop_flat_map(|(n, k)| {
        prop::collection::vec(distribution(), n * k)
            .prop_map(move |d| BanditInstance::new(n, k, d).unwrap())
    })
}

fn mode() -> impl Strategy<Value = ScheduleMode> {
    prop_oneof![Just(ScheduleMode::A), Just(ScheduleMode::B)]
}

/// Records each round's policy together with whether Epsilon-Greedy explored.
struct Recorder {
    inner: EpsilonGreedy,
    explored: Vec<(bool, Policy)>,
}

impl BanditAgent for Recorder {
    fn select_policy(&mut self, est: &EstimatorState) -> nswbandit::Result<Policy> {
        let p = self.inner.select_policy(est)?;
        self.explored.push((self.inner.last_explored(), p.clone()));
        Ok(p)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn episodes_respect_regret_and_count_invariants(
        inst in instance(),
        m in mode(),
        which in 0usize..3,
        horizon in 1u64..60,
        seed in any::<u64>(),
    ) {
        let h = Harness::new(&inst).unwrap();
        let kind = match which {
            0 if horizon >= inst.n_arms() as u64 => {
                AgentKind::explore_first(m, inst.n_agents(), inst.n_arms(), horizon).unwrap()
            }
            1 => AgentKind::EpsilonGreedy { mode: m },
            _ => AgentKind::Ucb { mode: m },
        };
        let trace = h.run_episode(kind, horizon, seed).unwrap();
        prop_assert_eq!(trace.records.len() as u64, horizon);
        let opt = h.optimum().value;
        for (idx, r) in trace.records.iter().enumerate() {
            prop_assert_eq!(r.t, idx as u64 + 1);
            prop_assert!(r.instant_regret >= -1e-9);
            let direct = opt - nswbandit::nsw_eval(&r.policy, inst.true_means()).unwrap();
            prop_assert!((r.instant_regret - direct).abs() <= 1e-9);
            prop_assert!(r.policy.weight(r.arm) > 0.0);
            prop_assert!(r.rewards.iter().all(|x| (0.0..=1.0).contains(x)));
        }
        let total = trace.total_regret();
        prop_assert!(total <= horizon as f64 + 1e-9);
        let cum = trace.cumulative_regret();
        prop_assert!(cum.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    }

    #[test]
    fn pull_counts_sum_to_rounds_played(
        inst in instance(),
        m in mode(),
        ucb in any::<bool>(),
        horizon in 1u64..50,
        seed in any::<u64>(),
    ) {
        let h = Harness::new(&inst).unwrap();
        let kind = if ucb { AgentKind::Ucb { mode: m } } else { AgentKind::EpsilonGreedy { mode: m } };
        let mut agent = kind.build(inst.n_agents(), inst.n_arms(), seed, &OptimizerConfig::in_loop()).unwrap();
        let mut ok = true;
        h.drive(agent.as_mut(), horizon, seed, |v| {
            ok &= v.estimates.pull_counts().iter().sum::<u64>() == v.t - 1;
            ok &= v.estimates.round() == v.t;
        })
        .unwrap();
        prop_assert!(ok);
    }

    #[test]
    fn explore_first_pulls_each_arm_in_blocks(
        inst in instance(),
        len in 1u64..6,
        extra in 0u64..20,
        seed in any::<u64>(),
    ) {
        let k = inst.n_arms() as u64;
        let horizon = k * len + extra;
        let h = Harness::new(&inst).unwrap();
        let mut agent = ExploreFirst::new(inst.n_arms(), horizon, len, OptimizerConfig::in_loop()).unwrap();
        let mut arms = Vec::new();
        let mut policies = Vec::new();
        h.drive(&mut agent, horizon, seed, |v| {
            arms.push(v.arm);
            policies.push(v.policy.clone());
        })
        .unwrap();
        for (idx, &arm) in arms.iter().take((k * len) as usize).enumerate() {
            prop_assert_eq!(arm as u64, idx as u64 / len);
        }
        // Exploitation plays one cached policy.
        let exploit = &policies[(k * len) as usize..];
        prop_assert!(exploit.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn epsilon_greedy_exploration_cycles_round_robin(
        inst in instance(),
        m in mode(),
        horizon in 1u64..80,
        seed in any::<u64>(),
    ) {
        let h = Harness::new(&inst).unwrap();
        let inner = EpsilonGreedy::new(
            m,
            inst.n_agents(),
            inst.n_arms(),
            RngStream::new(seed, "algo-coin", 0),
            OptimizerConfig::in_loop(),
        )
        .unwrap();
        let mut rec = Recorder { inner, explored: Vec::new() };
        h.drive(&mut rec, horizon, seed, |_| {}).unwrap();
        let k = inst.n_arms();
        let explored: Vec<&Policy> = rec.explored.iter().filter(|e| e.0).map(|e| &e.1).collect();
        for (idx, p) in explored.into_iter().enumerate() {
            prop_assert_eq!(p, &Policy::point_mass(k, idx % k).unwrap());
        }
    }

    #[test]
    fn ucb_pulls_every_arm_once_first(
        inst in instance(),
        m in mode(),
        extra in 0u64..30,
        seed in any::<u64>(),
    ) {
        let k = inst.n_arms();
        let horizon = k as u64 + extra;
        let h = Harness::new(&inst).unwrap();
        let mut agent = Ucb::new(m, inst.n_agents(), k, OptimizerConfig::in_loop()).unwrap();
        let mut ok = true;
        h.drive(&mut agent, horizon, seed, |v| {
            if v.t <= k as u64 {
                ok &= v.arm == (v.t - 1) as usize;
            } else {
                ok &= v.estimates.pull_counts().iter().all(|&n| n >= 1);
            }
        })
        .unwrap();
        prop_assert!(ok);
    }

    #[test]
    fn longer_horizons_extend_traces(
        inst in instance(),
        m in mode(),
        short in 1u64..30,
        extra in 1u64..30,
        seed in any::<u64>(),
    ) {
        let h = Harness::new(&inst).unwrap();
        for kind in [AgentKind::EpsilonGreedy { mode: m }, AgentKind::Ucb { mode: m }] {
            let a = h.run_episode(kind, short, seed).unwrap();
            let b = h.run_episode(kind, short + extra, seed).unwrap();
            prop_assert_eq!(&a.records[..], &b.records[..short as usize]);
        }
    }
}
