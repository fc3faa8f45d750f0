//! Bandit instances, reward sampling and seeded random streams.

use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::nsw::{Policy, RewardMatrix};

/// Reward distribution of one (agent, arm) pair; every kind is supported on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardDistribution {
    Bernoulli { mean: f64 },
    PointMass { value: f64 },
    Beta { a: f64, b: f64 },
    Uniform { lo: f64, hi: f64 },
}

fn unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

impl RewardDistribution {
    pub fn bernoulli(mean: f64) -> Result<Self> {
        Self::Bernoulli { mean }.validated()
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        Self::PointMass { value }.validated()
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        Self::Beta { a, b }.validated()
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::Uniform { lo, hi }.validated()
    }

    fn validated(self) -> Result<Self> {
        let problem = match self {
            Self::Bernoulli { mean } if !unit(mean) => Some(("mean", "mean out of [0,1]")),
            Self::PointMass { value } if !unit(value) => Some(("value", "value out of [0,1]")),
            Self::Beta { a, .. } if !(a > 0.0 && a.is_finite()) => Some(("a", "a must be positive")),
            Self::Beta { b, .. } if !(b > 0.0 && b.is_finite()) => Some(("b", "b must be positive")),
            Self::Uniform { lo, .. } if !unit(lo) => Some(("lo", "lo out of [0,1]")),
            Self::Uniform { hi, .. } if !unit(hi) => Some(("hi", "hi out of [0,1]")),
            Self::Uniform { lo, hi } if lo > hi => Some(("lo", "lo must not exceed hi")),
            _ => None,
        };
        match problem {
            Some((field, message)) => Err(Error::parse(field, message)),
            None => Ok(self),
        }
    }

    /// Closed-form mean.
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Bernoulli { mean } => mean,
            Self::PointMass { value } => value,
            Self::Beta { a, b } => a / (a + b),
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    /// Closed-form variance.
    pub fn variance(&self) -> f64 {
        match *self {
            Self::Bernoulli { mean } => mean * (1.0 - mean),
            Self::PointMass { .. } => 0.0,
            Self::Beta { a, b } => a * b / ((a + b).powi(2) * (a + b + 1.0)),
            Self::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Bernoulli { .. } => "bernoulli",
            Self::PointMass { .. } => "pointmass",
            Self::Beta { .. } => "beta",
            Self::Uniform { .. } => "uniform",
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Bernoulli { mean } => {
                if rng.random::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
            Self::PointMass { value } => value,
            Self::Beta { a, b } => Beta::new(a, b)
                .expect("validated parameters")
                .sample(rng)
                .clamp(0.0, 1.0),
            Self::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }
}

/// A seeded random stream. The generator state is derived by hashing
/// `(seed, stream_id, run_index)`, so streams with different labels are
/// independent and identical labels reproduce identical sequences on every
/// platform.
#[derive(Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: String,
    run_index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: &str, run_index: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update((stream_id.len() as u64).to_le_bytes());
        hasher.update(stream_id.as_bytes());
        hasher.update(run_index.to_le_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        RngStream {
            seed,
            stream_id: stream_id.to_owned(),
            run_index,
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> &str {
        &self.stream_id
    }

    pub fn run_index(&self) -> u64 {
        self.run_index
    }
}

impl fmt::Debug for RngStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RngStream")
            .field("seed", &self.seed)
            .field("stream_id", &self.stream_id)
            .field("run_index", &self.run_index)
            .finish_non_exhaustive()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Per-(agent, arm) reward distributions together with their means.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    n_agents: usize,
    n_arms: usize,
    // row-major, agent by arm
    distributions: Vec<RewardDistribution>,
    true_means: RewardMatrix,
}

impl BanditInstance {
    pub fn new(
        n_agents: usize,
        n_arms: usize,
        distributions: Vec<RewardDistribution>,
    ) -> Result<Self> {
        if n_agents == 0 || n_arms == 0 {
            return Err(Error::InvalidParameter(format!(
                "instance must have at least one agent and one arm, got {n_agents}x{n_arms}"
            )));
        }
        if distributions.len() != n_agents * n_arms {
            return Err(Error::DimensionMismatch {
                expected: n_agents * n_arms,
                found: distributions.len(),
            });
        }
        let distributions = distributions
            .into_iter()
            .map(RewardDistribution::validated)
            .collect::<Result<Vec<_>>>()?;
        let means = distributions.iter().map(RewardDistribution::mean).collect();
        let true_means = RewardMatrix::from_row_major(n_agents, n_arms, means)?;
        Ok(BanditInstance {
            n_agents,
            n_arms,
            distributions,
            true_means,
        })
    }

    /// Bernoulli rewards with the given mean matrix.
    pub fn bernoulli(rows: &[Vec<f64>]) -> Result<Self> {
        let mu = RewardMatrix::from_rows(rows)?;
        let dists = mu
            .as_row_major()
            .iter()
            .map(|&m| RewardDistribution::bernoulli(m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(mu.n_agents(), mu.n_arms(), dists)
    }

    /// Deterministic rewards equal to the given matrix.
    pub fn point_mass(rows: &[Vec<f64>]) -> Result<Self> {
        let mu = RewardMatrix::from_rows(rows)?;
        let dists = mu
            .as_row_major()
            .iter()
            .map(|&m| RewardDistribution::point_mass(m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(mu.n_agents(), mu.n_arms(), dists)
    }

    /// The repository's benchmark: three agents, three Bernoulli arms.
    pub fn benchmark() -> Self {
        Self::bernoulli(&[
            vec![0.9, 0.1, 0.5],
            vec![0.1, 0.9, 0.5],
            vec![0.5, 0.5, 0.6],
        ])
        .expect("benchmark means are valid")
    }

    /// Ten agents with deterministic rewards: four get 1 only from the first
    /// arm, six get 1 only from the second. The fair policy is (0.4, 0.6).
    pub fn majority_split() -> Self {
        let mut rows = vec![vec![1.0, 0.0]; 4];
        rows.extend(vec![vec![0.0, 1.0]; 6]);
        Self::point_mass(&rows).expect("valid")
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    pub fn true_means(&self) -> &RewardMatrix {
        &self.true_means
    }

    pub fn distribution(&self, agent: usize, arm: usize) -> &RewardDistribution {
        &self.distributions[agent * self.n_arms + arm]
    }

    pub fn distributions(&self) -> &[RewardDistribution] {
        &self.distributions
    }

    /// Renders the instance in the same TOML schema [`parse_instance`] reads.
    pub fn to_toml_string(&self) -> String {
        let mut out = format!(
            "agents = {}\narms = {}\ndistributions = [\n",
            self.n_agents, self.n_arms
        );
        for d in &self.distributions {
            let params = match *d {
                RewardDistribution::Bernoulli { mean } => format!("mean = {mean:?}"),
                RewardDistribution::PointMass { value } => format!("value = {value:?}"),
                RewardDistribution::Beta { a, b } => format!("a = {a:?}, b = {b:?}"),
                RewardDistribution::Uniform { lo, hi } => format!("lo = {lo:?}, hi = {hi:?}"),
            };
            out.push_str(&format!("  {{ kind = \"{}\", {params} }},\n", d.kind_name()));
        }
        out.push_str("]\n");
        out
    }
}

/// One independent reward draw per agent for `arm`.
pub fn sample_rewards(
    instance: &BanditInstance,
    arm: usize,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; instance.n_agents];
    sample_rewards_into(instance, arm, rng, &mut out)?;
    Ok(out)
}

pub(crate) fn sample_rewards_into(
    instance: &BanditInstance,
    arm: usize,
    rng: &mut RngStream,
    out: &mut [f64],
) -> Result<()> {
    if arm >= instance.n_arms {
        return Err(Error::IndexOutOfRange {
            what: "arm",
            index: arm,
            len: instance.n_arms,
        });
    }
    for (agent, slot) in out.iter_mut().enumerate() {
        *slot = instance.distribution(agent, arm).sample(rng);
    }
    Ok(())
}

/// Draws an arm index with probability equal to its policy weight
/// (inverse CDF over cumulative weights). Zero-weight arms are never drawn.
pub fn sample_arm<R: Rng + ?Sized>(p: &Policy, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (j, &w) in p.weights().iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        cumulative += w;
        last_positive = j;
        if u < cumulative {
            return j;
        }
    }
    last_positive
}

/// Parses an instance from TOML text.
///
/// ```toml
/// agents = 1
/// arms = 2
/// distributions = [
///   { kind = "bernoulli", mean = 0.7 },
///   { kind = "bernoulli", mean = 0.3 },
/// ]
/// ```
///
/// `distributions` is row-major (all arms of agent 0 first). Kinds are
/// `bernoulli` (`mean`), `pointmass` (`value`), `beta` (`a`, `b`) and
/// `uniform` (`lo`, `hi`). An optional top-level `name` string is allowed.
pub fn parse_instance(text: &str) -> Result<BanditInstance> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::parse("<document>", e.message().to_owned()))?;
    parse_instance_table(&table, "")
}

/// Parses an instance from an already-decoded TOML table. `prefix` is
/// prepended to field names in error messages.
pub fn parse_instance_table(table: &Table, prefix: &str) -> Result<BanditInstance> {
    let field = |name: &str| format!("{prefix}{name}");
    for key in table.keys() {
        if !matches!(key.as_str(), "agents" | "arms" | "distributions" | "name") {
            return Err(Error::parse(field(key), "unknown field"));
        }
    }
    if let Some(name) = table.get("name") {
        if !name.is_str() {
            return Err(Error::parse(field("name"), "expected a string"));
        }
    }
    let agents = read_count(table, "agents", &field("agents"))?;
    let arms = read_count(table, "arms", &field("arms"))?;
    let list = match table.get("distributions") {
        Some(Value::Array(list)) => list,
        Some(_) => return Err(Error::parse(field("distributions"), "expected an array")),
        None => return Err(Error::parse(field("distributions"), "missing field")),
    };
    let expected = agents
        .checked_mul(arms)
        .ok_or_else(|| Error::parse(field("agents"), "agents * arms overflows"))?;
    if list.len() != expected {
        return Err(Error::parse(
            field("distributions"),
            format!(
                "expected {expected} entries ({agents} agents x {arms} arms), found {}",
                list.len()
            ),
        ));
    }
    let dists = list
        .iter()
        .enumerate()
        .map(|(idx, v)| parse_distribution(v, &format!("{}[{idx}]", field("distributions"))))
        .collect::<Result<Vec<_>>>()?;
    BanditInstance::new(agents, arms, dists)
}

fn read_count(table: &Table, key: &str, field: &str) -> Result<usize> {
    match table.get(key) {
        Some(Value::Integer(n)) if *n >= 1 && *n <= 1_000_000 => Ok(*n as usize),
        Some(Value::Integer(n)) => Err(Error::parse(field, format!("must be in 1..=1000000, got {n}"))),
        Some(_) => Err(Error::parse(field, "expected an integer")),
        None => Err(Error::parse(field, "missing field")),
    }
}

fn read_number(entry: &Table, key: &str, prefix: &str) -> Result<f64> {
    let field = format!("{prefix}.{key}");
    match entry.get(key) {
        Some(Value::Float(x)) => Ok(*x),
        Some(Value::Integer(n)) => Ok(*n as f64),
        Some(_) => Err(Error::parse(field, "expected a number")),
        None => Err(Error::parse(field, "missing field")),
    }
}

fn parse_distribution(value: &Value, prefix: &str) -> Result<RewardDistribution> {
    let entry = value
        .as_table()
        .ok_or_else(|| Error::parse(prefix, "expected a table"))?;
    let kind = match entry.get("kind") {
        Some(Value::String(s)) => s.as_str(),
        Some(_) => return Err(Error::parse(format!("{prefix}.kind"), "expected a string")),
        None => return Err(Error::parse(format!("{prefix}.kind"), "missing field")),
    };
    let allowed: &[&str] = match kind {
        "bernoulli" => &["mean"],
        "pointmass" => &["value"],
        "beta" => &["a", "b"],
        "uniform" => &["lo", "hi"],
        other => {
            return Err(Error::parse(
                format!("{prefix}.kind"),
                format!("unknown kind `{other}` (expected bernoulli, pointmass, beta or uniform)"),
            ))
        }
    };
    for key in entry.keys() {
        if key != "kind" && !allowed.contains(&key.as_str()) {
            return Err(Error::parse(format!("{prefix}.{key}"), format!("not a parameter of `{kind}`")));
        }
    }
    let num = |key: &str| read_number(entry, key, prefix);
    let dist = match kind {
        "bernoulli" => RewardDistribution::Bernoulli { mean: num("mean")? },
        "pointmass" => RewardDistribution::PointMass { value: num("value")? },
        "beta" => RewardDistribution::Beta {
            a: num("a")?,
            b: num("b")?,
        },
        _ => RewardDistribution::Uniform {
            lo: num("lo")?,
            hi: num("hi")?,
        },
    };
    dist.validated().map_err(|e| match e {
        Error::Parse { field, message } => Error::parse(format!("{prefix}.{field}"), message),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_rewards_are_constant() {
        let inst = BanditInstance::point_mass(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let mut rng = RngStream::new(1, "env", 0);
        for arm in 0..2 {
            assert_eq!(sample_rewards(&inst, arm, &mut rng).unwrap(), vec![0.5, 0.5]);
        }
    }

    #[test]
    fn certain_bernoulli_always_pays() {
        let inst = BanditInstance::bernoulli(&[vec![1.0], vec![1.0]]).unwrap();
        let mut rng = RngStream::new(2, "env", 0);
        for _ in 0..1000 {
            assert_eq!(sample_rewards(&inst, 0, &mut rng).unwrap(), vec![1.0, 1.0]);
        }
    }

    #[test]
    fn bernoulli_frequency() {
        let inst = BanditInstance::bernoulli(&[vec![0.3]]).unwrap();
        let mut rng = RngStream::new(3, "env", 0);
        let n = 100_000;
        let total: f64 = (0..n).map(|_| sample_rewards(&inst, 0, &mut rng).unwrap()[0]).sum();
        assert!((total / n as f64 - 0.3).abs() < 0.01);
    }

    #[test]
    fn arm_out_of_range() {
        let inst = BanditInstance::benchmark();
        let mut rng = RngStream::new(0, "env", 0);
        assert!(matches!(
            sample_rewards(&inst, 3, &mut rng),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn arm_sampling() {
        let mut rng = RngStream::new(4, "arm-select", 0);
        let vertex = Policy::point_mass(3, 0).unwrap();
        let second = Policy::point_mass(2, 1).unwrap();
        for _ in 0..1000 {
            assert_eq!(sample_arm(&vertex, &mut rng), 0);
            assert_eq!(sample_arm(&second, &mut rng), 1);
        }
        let p = Policy::new(vec![0.4, 0.6]).unwrap();
        let n = 100_000;
        let first = (0..n).filter(|_| sample_arm(&p, &mut rng) == 0).count();
        assert!((first as f64 / n as f64 - 0.4).abs() < 0.01);
    }

    #[test]
    fn mean_consistency_for_every_kind() {
        let dists = [
            RewardDistribution::bernoulli(0.3).unwrap(),
            RewardDistribution::point_mass(0.42).unwrap(),
            RewardDistribution::beta(2.0, 5.0).unwrap(),
            RewardDistribution::beta(0.5, 0.5).unwrap(),
            RewardDistribution::uniform(0.2, 0.9).unwrap(),
        ];
        let n = 100_000;
        for (idx, d) in dists.iter().enumerate() {
            let mut rng = RngStream::new(10 + idx as u64, "env", 0);
            let draws: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
            assert!(draws.iter().all(|x| unit(*x)));
            let mean = draws.iter().sum::<f64>() / n as f64;
            let se = (d.variance() / n as f64).sqrt();
            assert!((mean - d.mean()).abs() <= 5.0 * se + 1e-9, "{d:?}: {mean}");
        }
    }

    #[test]
    fn streams_are_deterministic_and_isolated() {
        let mut a = RngStream::new(9, "env", 0);
        let mut b = RngStream::new(9, "env", 0);
        let mut coin = RngStream::new(9, "algo-coin", 0);
        let mut from_a = Vec::new();
        let mut from_b = Vec::new();
        for _ in 0..100 {
            from_a.push(a.next_u64());
            coin.next_u64();
            from_b.push(b.next_u64());
        }
        assert_eq!(from_a, from_b);
        let mut other = RngStream::new(9, "env", 1);
        assert_ne!(other.next_u64(), RngStream::new(9, "env", 0).next_u64());
        let mut c = RngStream::new(9, "algo-coin", 0);
        assert_ne!(c.next_u64(), RngStream::new(9, "env", 0).next_u64());
    }

    #[test]
    fn stream_values_are_pinned() {
        // Guards cross-platform reproducibility of the seed derivation.
        let mut s = RngStream::new(42, "env", 0);
        let first = s.next_u64();
        let mut again = RngStream::new(42, "env", 0);
        assert_eq!(first, again.next_u64());
        assert_eq!(first, PINNED_FIRST_DRAW);
    }

    const PINNED_FIRST_DRAW: u64 = 18_033_280_959_899_865_655;

    #[test]
    fn parse_examples() {
        let text = r#"
agents = 1
arms = 2
distributions = [
  { kind = "bernoulli", mean = 0.7 },
  { kind = "bernoulli", mean = 0.3 },
]
"#;
        let inst = parse_instance(text).unwrap();
        assert_eq!((inst.n_agents(), inst.n_arms()), (1, 2));
        assert_eq!(inst.true_means().row(0), &[0.7, 0.3]);

        let err = parse_instance(&text.replace("0.7", "1.3")).unwrap_err();
        assert_eq!(
            err,
            Error::parse("distributions[0].mean", "mean out of [0,1]")
        );
        assert!(err.to_string().contains("mean out of [0,1]"));

        let split = parse_instance(&BanditInstance::majority_split().to_toml_string()).unwrap();
        assert_eq!(split.n_agents(), 10);
        for i in 0..4 {
            assert_eq!(split.true_means().row(i), &[1.0, 0.0]);
        }
        for i in 4..10 {
            assert_eq!(split.true_means().row(i), &[0.0, 1.0]);
        }
    }

    #[test]
    fn parse_errors_name_the_field() {
        let cases = [
            ("arms = 2\ndistributions = []", "agents"),
            ("agents = 0\narms = 1\ndistributions = []", "agents"),
            ("agents = 1\narms = 2\ndistributions = [{ kind = \"bernoulli\", mean = 0.1 }]", "distributions"),
            ("agents = 1\narms = 1\ndistributions = [{ kind = \"gauss\", mean = 0.1 }]", "distributions[0].kind"),
            ("agents = 1\narms = 1\ndistributions = [{ kind = \"beta\", a = 1.0 }]", "distributions[0].b"),
            ("agents = 1\narms = 1\ndistributions = [{ kind = \"beta\", a = -1.0, b = 1 }]", "distributions[0].a"),
            ("agents = 1\narms = 1\ndistributions = [{ kind = \"uniform\", lo = 0.8, hi = 0.2 }]", "distributions[0].lo"),
            ("agents = 1\narms = 1\ndistributions = [{ kind = \"pointmass\", mean = 0.2 }]", "distributions[0].mean"),
            ("agents = 1\narms = 1\nextra = 3\ndistributions = []", "extra"),
            ("agents = \"two\"\narms = 1\ndistributions = []", "agents"),
            ("agents = [", "<document>"),
        ];
        for (text, expected_field) in cases {
            match parse_instance(text) {
                Err(Error::Parse { field, .. }) => assert_eq!(field, expected_field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn toml_round_trip_for_all_kinds() {
        let inst = BanditInstance::new(
            2,
            2,
            vec![
                RewardDistribution::bernoulli(0.25).unwrap(),
                RewardDistribution::point_mass(1.0).unwrap(),
                RewardDistribution::beta(2.0, 3.5).unwrap(),
                RewardDistribution::uniform(0.1, 0.3).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(parse_instance(&inst.to_toml_string()).unwrap(), inst);
        assert!((inst.true_means().get(1, 0) - 2.0 / 5.5).abs() < 1e-12);
    }
}
