//! Randomized property suites: the welfare Lipschitz inequalities, cover
//! size and coverage, optimizer-versus-grid agreement and the clean-event
//! frequency. Each suite reports pass/fail plus its first counterexample.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algorithms::{AgentKind, ScheduleMode};
use crate::env::BanditInstance;
use crate::error::Result;
use crate::harness::Harness;
use crate::nsw::{l1_distance, make_delta_cover, nsw_eval, sample_uniform_policy, Policy, RewardMatrix};
use crate::simplex::{brute_force_maximize, maximize_nsw, maximize_ucb_objective, ucb_objective, OptimizerConfig};

/// Slack for floating-point rounding in inequalities that hold exactly in
/// real arithmetic.
pub const ROUNDING_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationConfig {
    pub seed: u64,
    /// Random draws per Lipschitz suite and uniform points per cover.
    pub samples: usize,
    pub cover_cases: Vec<(usize, f64)>,
    pub oracle_instances: usize,
    pub clean_event_seeds: usize,
    pub clean_event_checkpoints: Vec<u64>,
    pub clean_event_slack: f64,
    /// Multiplies every confidence radius in the clean-event suite.
    pub radius_scale: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            seed: 0,
            samples: 10_000,
            cover_cases: vec![(2, 0.5), (2, 0.25), (3, 0.5), (3, 0.25)],
            oracle_instances: 100,
            clean_event_seeds: 500,
            clean_event_checkpoints: vec![10, 100, 1000],
            clean_event_slack: 0.05,
            radius_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    pub summary: String,
    pub counterexample: Option<String>,
}

impl SuiteReport {
    fn new(name: &'static str, summary: String, counterexample: Option<String>) -> Self {
        SuiteReport {
            name,
            passed: counterexample.is_none(),
            summary,
            counterexample,
        }
    }
}

fn unit_vector(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    // Mix in exact 0s and 1s so boundary cases are exercised.
    (0..len)
        .map(|_| match rng.random_range(0..10) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random::<f64>(),
        })
        .collect()
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, k: usize) -> RewardMatrix {
    RewardMatrix::from_row_major(n, k, unit_vector(rng, n * k)).expect("entries in [0,1]")
}

/// `|prod a - prod b| <= sum |a - b|` for vectors in `[0,1]^N`, `N <= 10`.
pub fn product_difference_suite(cfg: &ValidationConfig) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x11);
    let mut violation = None;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..cfg.samples {
        let n = rng.random_range(1..=10);
        let a = unit_vector(&mut rng, n);
        let b = unit_vector(&mut rng, n);
        let lhs = (a.iter().product::<f64>() - b.iter().product::<f64>()).abs();
        let rhs: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        if rhs > 0.0 {
            worst_ratio = worst_ratio.max(lhs / rhs);
        }
        if lhs > rhs + ROUNDING_SLACK && violation.is_none() {
            violation = Some(format!("a={a:?} b={b:?}: {lhs} > {rhs}"));
        }
    }
    SuiteReport::new(
        "product-difference",
        format!("{} samples, max |diff|/bound = {worst_ratio:.6}", cfg.samples),
        violation,
    )
}

/// `|NSW(p1, mu) - NSW(p2, mu)| <= N * ||p1 - p2||_1`.
pub fn lipschitz_policy_suite(cfg: &ValidationConfig) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x22);
    let mut violation = None;
    for _ in 0..cfg.samples {
        let n = rng.random_range(1..=10);
        let k = rng.random_range(1..=6);
        let mu = random_matrix(&mut rng, n, k);
        let p1 = sample_uniform_policy(k, &mut rng)?;
        let p2 = sample_uniform_policy(k, &mut rng)?;
        let lhs = (nsw_eval(&p1, &mu)? - nsw_eval(&p2, &mu)?).abs();
        let rhs = n as f64 * l1_distance(&p1, &p2)?;
        if lhs > rhs + ROUNDING_SLACK && violation.is_none() {
            violation = Some(format!("mu={mu:?} p1={p1:?} p2={p2:?}: {lhs} > {rhs}"));
        }
    }
    Ok(SuiteReport::new(
        "lipschitz-in-policy",
        format!("{} samples", cfg.samples),
        violation,
    ))
}

/// `|NSW(p, mu1) - NSW(p, mu2)| <= sum_{i,j} p_j |mu1_ij - mu2_ij|`.
pub fn lipschitz_means_suite(cfg: &ValidationConfig) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x33);
    let mut violation = None;
    for _ in 0..cfg.samples {
        let n = rng.random_range(1..=10);
        let k = rng.random_range(1..=6);
        let mu1 = random_matrix(&mut rng, n, k);
        let mu2 = random_matrix(&mut rng, n, k);
        let p = sample_uniform_policy(k, &mut rng)?;
        let lhs = (nsw_eval(&p, &mu1)? - nsw_eval(&p, &mu2)?).abs();
        let rhs: f64 = (0..n)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .map(|(i, j)| p.weight(j) * (mu1.get(i, j) - mu2.get(i, j)).abs())
            .sum();
        if lhs > rhs + ROUNDING_SLACK && violation.is_none() {
            violation = Some(format!("mu1={mu1:?} mu2={mu2:?} p={p:?}: {lhs} > {rhs}"));
        }
    }
    Ok(SuiteReport::new(
        "lipschitz-in-means",
        format!("{} samples", cfg.samples),
        violation,
    ))
}

/// Size bound and statistical coverage of generated covers.
pub fn delta_cover_suite(cfg: &ValidationConfig) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x44);
    let mut violation = None;
    let mut lines = Vec::new();
    for &(k, delta) in &cfg.cover_cases {
        let cover = make_delta_cover(k, delta)?;
        let bound = crate::nsw::DeltaCover::size_bound(k, delta);
        let mut max_gap: f64 = 0.0;
        for _ in 0..cfg.samples {
            let p = sample_uniform_policy(k, &mut rng)?;
            let gap = cover.distance_to(&p)?;
            max_gap = max_gap.max(gap);
            if gap > delta && violation.is_none() {
                violation = Some(format!("K={k} delta={delta}: {p:?} is {gap} from the cover"));
            }
        }
        if cover.len() as f64 > bound && violation.is_none() {
            violation = Some(format!("K={k} delta={delta}: size {} > {bound}", cover.len()));
        }
        lines.push(format!(
            "K={k} delta={delta}: size {} (bound {bound:.0}), max gap {max_gap:.4}",
            cover.len()
        ));
    }
    Ok(SuiteReport::new("delta-cover", lines.join("; "), violation))
}

/// Optimizer results against the grid oracle on random small instances.
pub fn optimizer_oracle_suite(cfg: &ValidationConfig) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x55);
    let opt_cfg = OptimizerConfig::validation();
    let mut violation = None;
    let mut worst_nsw: f64 = f64::INFINITY;
    let mut worst_ucb: f64 = f64::INFINITY;
    for _ in 0..cfg.oracle_instances {
        let n = rng.random_range(1..=3);
        let k = rng.random_range(1..=3);
        let mu = RewardMatrix::from_row_major(n, k, (0..n * k).map(|_| rng.random::<f64>()).collect())?;
        let found = maximize_nsw(&mu, &opt_cfg)?;
        for (resolution, tol) in [(50, 5e-2), (200, 1e-2)] {
            let grid = brute_force_maximize(|p| nsw_eval(p, &mu).unwrap_or(0.0), k, resolution)?;
            worst_nsw = worst_nsw.min(found.objective_value - grid.objective_value);
            if found.objective_value < grid.objective_value - tol && violation.is_none() {
                violation = Some(format!(
                    "NSW mu={mu:?}: optimizer {} < grid({resolution}) {} - {tol}",
                    found.objective_value, grid.objective_value
                ));
            }
        }

        let radii: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let alpha = 2.0 * rng.random::<f64>();
        let found = maximize_ucb_objective(&mu, &radii, alpha, &opt_cfg)?;
        let grid = brute_force_maximize(
            |p: &Policy| ucb_objective(p, &mu, &radii, alpha).unwrap_or(f64::NEG_INFINITY),
            k,
            100,
        )?;
        worst_ucb = worst_ucb.min(found.objective_value - grid.objective_value);
        if found.objective_value < grid.objective_value - 2e-2 && violation.is_none() {
            violation = Some(format!(
                "UCB mu={mu:?} radii={radii:?} alpha={alpha}: optimizer {} < grid {} - 0.02",
                found.objective_value, grid.objective_value
            ));
        }
    }
    Ok(SuiteReport::new(
        "optimizer-vs-oracle",
        format!(
            "{} instances, min(optimizer - grid): NSW {worst_nsw:.3e}, UCB {worst_ucb:.3e}",
            cfg.oracle_instances
        ),
        violation,
    ))
}

/// Clean-event frequency for UCB (mode A) on the benchmark instance.
pub fn clean_event_suite(cfg: &ValidationConfig) -> Result<SuiteReport> {
    let instance = BanditInstance::benchmark();
    let harness = Harness::new(&instance)?.with_instance_id("benchmark");
    let horizon = cfg.clean_event_checkpoints.iter().copied().max().unwrap_or(1);
    let seeds: Vec<u64> = (0..cfg.clean_event_seeds as u64).map(|s| cfg.seed + s).collect();
    let report = harness.validate_clean_event_scaled(
        AgentKind::Ucb { mode: ScheduleMode::A },
        horizon,
        &seeds,
        &cfg.clean_event_checkpoints,
        cfg.radius_scale,
    )?;
    let violation = report
        .rows
        .iter()
        .find(|r| r.frequency < r.bound - cfg.clean_event_slack)
        .map(|r| {
            format!(
                "t={}: frequency {} < bound {} - {}",
                r.t, r.frequency, r.bound, cfg.clean_event_slack
            )
        });
    let summary = report
        .rows
        .iter()
        .map(|r| format!("t={} freq={:.3} bound={:.6}", r.t, r.frequency, r.bound))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(SuiteReport::new(
        "clean-event",
        format!("{} seeds, radius x{}: {summary}", seeds.len(), cfg.radius_scale),
        violation,
    ))
}

/// Runs every suite in a fixed order.
pub fn run_all(cfg: &ValidationConfig) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        product_difference_suite(cfg),
        lipschitz_policy_suite(cfg)?,
        lipschitz_means_suite(cfg)?,
        delta_cover_suite(cfg)?,
        optimizer_oracle_suite(cfg)?,
        clean_event_suite(cfg)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ValidationConfig {
        ValidationConfig {
            samples: 500,
            oracle_instances: 10,
            clean_event_seeds: 50,
            clean_event_checkpoints: vec![10, 100],
            ..ValidationConfig::default()
        }
    }

    #[test]
    fn small_suites_pass() {
        for report in run_all(&small()).unwrap() {
            assert!(report.passed, "{report:?}");
        }
    }

    #[test]
    fn shrunken_radius_breaks_clean_event() {
        let cfg = ValidationConfig {
            radius_scale: 0.1,
            ..small()
        };
        let report = clean_event_suite(&cfg).unwrap();
        assert!(!report.passed);
        assert!(report.counterexample.unwrap().contains("frequency"));
    }
}
