//! TOML configuration files, one schema per subcommand.

use std::path::{Path, PathBuf};

use esnlab::experiments::{SweepConfig, TestKind};
use esnlab::infotheory::InfoConfig;
use esnlab::neuroevo::{EvolutionConfig, GenerationMonitor};
use esnlab::reservoir::{generate_random_esn, prune_random, NetworkDocument};
use esnlab::seed::derive_seed;
use esnlab::substrate::{generate_local_esn, random_spiral, LocalEsnConfig};
use esnlab::{LyapunovConfig, ReservoirNetwork, TaskKind, TaskSpec};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

const STREAM_NETWORK: u64 = 40;
const STREAM_SUBSTRATE: u64 = 41;
const STREAM_PRUNE: u64 = 42;

/// A loaded config file: its raw bytes (for the manifest hash) and the
/// directory relative paths inside it resolve against.
pub struct Loaded<T> {
    pub value: T,
    pub bytes: Vec<u8>,
    pub dir: PathBuf,
}

fn read(path: &Path) -> Result<(Vec<u8>, PathBuf), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((bytes, dir))
}

pub fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Parses a TOML config and checks its schema version.
pub fn load<T: DeserializeOwned + Versioned>(path: &Path) -> Result<Loaded<T>, CliError> {
    let (bytes, dir) = read(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|_| CliError::Config(format!("{} is not UTF-8", path.display())))?;
    let value: T = toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if value.schema_version() != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "{}: schema_version {} is not supported (expected {SCHEMA_VERSION})",
            path.display(),
            value.schema_version()
        )));
    }
    Ok(Loaded { value, bytes, dir })
}

/// Loads either a TOML config or, for `.json` paths, a bare network document
/// wrapped in a default config.
pub fn load_network_config<T>(path: &Path) -> Result<Loaded<T>, CliError>
where
    T: DeserializeOwned + Versioned + WithNetwork,
{
    if !is_json(path) {
        return load(path);
    }
    let (bytes, dir) = read(path)?;
    let doc: NetworkDocument =
        serde_json::from_slice(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(Loaded { value: T::from_document(doc), bytes, dir })
}

pub trait Versioned {
    fn schema_version(&self) -> u32;
}

pub trait WithNetwork: Sized {
    fn from_document(doc: NetworkDocument) -> Self;
}

macro_rules! versioned {
    ($($t:ty),*) => {$(
        impl Versioned for $t {
            fn schema_version(&self) -> u32 {
                self.schema_version
            }
        }
    )*};
}

versioned!(SweepFile, EvolveFile, EvalFile, LyapunovFile, InfoFile, CompareFile);

fn parse_tasks(names: &[String]) -> Result<Vec<TaskSpec>, CliError> {
    if names.is_empty() {
        return Err(CliError::Config("at least one task is required".into()));
    }
    names
        .iter()
        .map(|n| n.to_ascii_lowercase().parse::<TaskKind>().map(TaskSpec::new).map_err(CliError::Config))
        .collect()
}

fn all_tasks() -> Vec<String> {
    ["mc", "mmse", "narma", "nr"].map(String::from).to_vec()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub schema_version: u32,
    pub seed: Option<u64>,
    #[serde(default = "SweepFile::n")]
    pub n_neurons: usize,
    #[serde(default = "SweepFile::lo")]
    pub log_sigma_min: f64,
    #[serde(default = "SweepFile::hi")]
    pub log_sigma_max: f64,
    #[serde(default = "SweepFile::step")]
    pub log_sigma_step: f64,
    #[serde(default = "SweepFile::nets")]
    pub nets_per_sigma: usize,
    #[serde(default = "all_tasks")]
    pub tasks: Vec<String>,
    #[serde(default)]
    pub measure_info: bool,
    pub prune_to: Option<usize>,
    pub local_max_length: Option<f64>,
    #[serde(default = "default_input_range")]
    pub input_weight_range: [f64; 2],
    #[serde(default)]
    pub lyapunov: LyapunovConfig,
    #[serde(default)]
    pub info: InfoConfig,
}

impl SweepFile {
    fn n() -> usize {
        SweepConfig::default().n_neurons
    }
    fn lo() -> f64 {
        SweepConfig::default().log_sigma_min
    }
    fn hi() -> f64 {
        SweepConfig::default().log_sigma_max
    }
    fn step() -> f64 {
        SweepConfig::default().log_sigma_step
    }
    fn nets() -> usize {
        SweepConfig::default().nets_per_sigma
    }

    pub fn to_config(&self, seed: u64) -> Result<SweepConfig, CliError> {
        let cfg = SweepConfig {
            n_neurons: self.n_neurons,
            log_sigma_min: self.log_sigma_min,
            log_sigma_max: self.log_sigma_max,
            log_sigma_step: self.log_sigma_step,
            nets_per_sigma: self.nets_per_sigma,
            tasks: parse_tasks(&self.tasks)?,
            measure_info: self.measure_info,
            info: self.info,
            lyapunov: self.lyapunov,
            prune_to: self.prune_to,
            local_max_length: self.local_max_length,
            input_weight_range: (self.input_weight_range[0], self.input_weight_range[1]),
            master_seed: seed,
        };
        cfg.validate().map_err(CliError::Config)?;
        Ok(cfg)
    }
}

fn default_input_range() -> [f64; 2] {
    [-0.1, 0.1]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveFile {
    pub schema_version: u32,
    pub seed: Option<u64>,
    #[serde(default = "EvolveFile::runs")]
    pub runs: usize,
    #[serde(default = "SweepFile::n")]
    pub n_neurons: usize,
    /// Score each generation's best network on NR.
    #[serde(default = "yes")]
    pub monitor_nr: bool,
    /// Estimate lambda of each generation's best network.
    #[serde(default = "yes")]
    pub monitor_lyapunov: bool,
    #[serde(default)]
    pub evolution: EvolutionConfig,
}

fn yes() -> bool {
    true
}

impl EvolveFile {
    fn runs() -> usize {
        5
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.runs == 0 {
            return Err(CliError::Config("runs must be at least 1".into()));
        }
        if self.n_neurons < 2 {
            return Err(CliError::Config("n_neurons must be at least 2".into()));
        }
        self.evolution.validate().map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn monitor(&self) -> GenerationMonitor {
        let full = GenerationMonitor::full();
        GenerationMonitor {
            nr: full.nr.filter(|_| self.monitor_nr),
            lyapunov: full.lyapunov.filter(|_| self.monitor_lyapunov),
        }
    }
}

/// Where a subcommand's network comes from: a JSON document, or generated
/// from `sigma` as a random, pruned or locally connected reservoir.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    /// Path to a network JSON document, relative to the config file.
    pub path: Option<PathBuf>,
    #[serde(default = "SweepFile::n")]
    pub n_neurons: usize,
    pub sigma: Option<f64>,
    pub prune_to: Option<usize>,
    pub local_max_length: Option<f64>,
    #[serde(default = "default_input_range")]
    pub input_weight_range: [f64; 2],
    #[serde(skip)]
    pub document: Option<NetworkDocument>,
}

impl NetworkSpec {
    fn from_document(doc: NetworkDocument) -> Self {
        Self {
            path: None,
            n_neurons: doc.n,
            sigma: None,
            prune_to: None,
            local_max_length: None,
            input_weight_range: default_input_range(),
            document: Some(doc),
        }
    }

    /// Materialises the network; `slot` separates several generated networks
    /// under one master seed.
    pub fn build(&self, dir: &Path, seed: u64, slot: u64) -> Result<ReservoirNetwork, CliError> {
        let doc = match (&self.document, &self.path) {
            (Some(doc), _) => Some(doc.clone()),
            (None, Some(p)) => {
                let path = dir.join(p);
                let bytes = std::fs::read(&path)
                    .map_err(|e| CliError::Config(format!("cannot read network {}: {e}", path.display())))?;
                Some(
                    serde_json::from_slice(&bytes)
                        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
                )
            }
            (None, None) => None,
        };
        if let Some(doc) = doc {
            if self.sigma.is_some() {
                return Err(CliError::Config("give either a network path or sigma, not both".into()));
            }
            return ReservoirNetwork::try_from(doc).map_err(|e| CliError::Config(format!("invalid network: {e}")));
        }
        let sigma = self.sigma.ok_or_else(|| CliError::Config("network needs either `path` or `sigma`".into()))?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(CliError::Config(format!("sigma must be positive, got {sigma}")));
        }
        if self.n_neurons < 2 {
            return Err(CliError::Config("n_neurons must be at least 2".into()));
        }
        let [lo, hi] = self.input_weight_range;
        if !(lo <= hi) {
            return Err(CliError::Config("input_weight_range must be [low, high]".into()));
        }
        let net_seed = derive_seed(seed, &[STREAM_NETWORK, slot]);
        match (self.prune_to, self.local_max_length) {
            (Some(_), Some(_)) => Err(CliError::Config("prune_to and local_max_length are exclusive".into())),
            (None, Some(len)) => {
                let sub = random_spiral(self.n_neurons, derive_seed(seed, &[STREAM_SUBSTRATE, slot]));
                let cfg = LocalEsnConfig { input_weight_range: (lo, hi), ..LocalEsnConfig::new(len, sigma) };
                Ok(generate_local_esn(&sub, &cfg, net_seed))
            }
            (prune, None) => {
                let full = generate_random_esn(self.n_neurons, sigma, (lo, hi), net_seed);
                match prune {
                    Some(k) if k == 0 || k > self.n_neurons => {
                        Err(CliError::Config(format!("prune_to must be in 1..={}", self.n_neurons)))
                    }
                    Some(k) => Ok(prune_random(&full, k, derive_seed(seed, &[STREAM_PRUNE, slot]))),
                    None => Ok(full),
                }
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalFile {
    pub schema_version: u32,
    pub seed: Option<u64>,
    pub network: NetworkSpec,
    #[serde(default = "all_tasks")]
    pub tasks: Vec<String>,
    /// Independent evaluations, one output row each.
    #[serde(default = "one")]
    pub evaluations: usize,
    #[serde(default)]
    pub measure_info: bool,
    #[serde(default)]
    pub lyapunov: LyapunovConfig,
    #[serde(default)]
    pub info: InfoConfig,
}

fn one() -> usize {
    1
}

impl EvalFile {
    pub fn tasks(&self) -> Result<Vec<TaskSpec>, CliError> {
        if self.evaluations == 0 {
            return Err(CliError::Config("evaluations must be at least 1".into()));
        }
        parse_tasks(&self.tasks)
    }
}

impl WithNetwork for EvalFile {
    fn from_document(doc: NetworkDocument) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: None,
            network: NetworkSpec::from_document(doc),
            tasks: all_tasks(),
            evaluations: 1,
            measure_info: false,
            lyapunov: LyapunovConfig::default(),
            info: InfoConfig::default(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovFile {
    pub schema_version: u32,
    pub seed: Option<u64>,
    pub network: NetworkSpec,
    #[serde(default)]
    pub lyapunov: LyapunovConfig,
}

impl WithNetwork for LyapunovFile {
    fn from_document(doc: NetworkDocument) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: None,
            network: NetworkSpec::from_document(doc),
            lyapunov: LyapunovConfig::default(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfoFile {
    pub schema_version: u32,
    pub seed: Option<u64>,
    pub network: NetworkSpec,
    #[serde(default)]
    pub info: InfoConfig,
}

impl WithNetwork for InfoFile {
    fn from_document(doc: NetworkDocument) -> Self {
        Self { schema_version: SCHEMA_VERSION, seed: None, network: NetworkSpec::from_document(doc), info: InfoConfig::default() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareFile {
    pub schema_version: u32,
    pub seed: Option<u64>,
    pub a: NetworkSpec,
    pub b: NetworkSpec,
    #[serde(default = "CompareFile::cycles")]
    pub cycles: usize,
    #[serde(default = "CompareFile::tasks")]
    pub tasks: Vec<String>,
    #[serde(default = "CompareFile::test")]
    pub test: TestKind,
}

impl CompareFile {
    fn cycles() -> usize {
        50
    }
    fn tasks() -> Vec<String> {
        ["mmse", "narma", "nr"].map(String::from).to_vec()
    }
    fn test() -> TestKind {
        TestKind::OneTailed
    }

    pub fn task_specs(&self) -> Result<Vec<TaskSpec>, CliError> {
        if self.cycles < 2 {
            return Err(CliError::Config(format!("cycles must be at least 2, got {}", self.cycles)));
        }
        parse_tasks(&self.tasks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse<T: DeserializeOwned>(s: &str) -> Result<T, toml::de::Error> {
        toml::from_str(s)
    }

    #[test]
    fn sweep_defaults_follow_the_library() {
        let f: SweepFile = parse("schema_version = 1").unwrap();
        let cfg = f.to_config(3).unwrap();
        assert_eq!(cfg, SweepConfig { master_seed: 3, ..SweepConfig::default() });
    }

    #[test]
    fn unknown_keys_and_bad_tasks_are_rejected() {
        assert!(parse::<SweepFile>("schema_version = 1\nn_neurns = 5").is_err());
        let f: SweepFile = parse("schema_version = 1\ntasks = [\"MC\", \"foo\"]").unwrap();
        assert!(matches!(f.to_config(0), Err(CliError::Config(_))));
        assert!(parse::<EvolveFile>("schema_version = 1\n[evolution]\npopulaton = 3").is_err());
    }

    #[test]
    fn partial_nested_tables_keep_defaults() {
        let f: SweepFile = parse("schema_version = 1\n[lyapunov]\nwashout = 500").unwrap();
        assert_eq!(f.lyapunov, LyapunovConfig { washout: 500, ..LyapunovConfig::default() });
        let e: EvolveFile = parse("schema_version = 1\n[evolution]\npopulation = 20").unwrap();
        assert_eq!(e.evolution, EvolutionConfig { population: 20, ..EvolutionConfig::default() });
        assert!(e.monitor().nr.is_some() && e.monitor().lyapunov.is_some());
    }

    #[test]
    fn generated_networks_are_seeded() {
        let spec: NetworkSpec = parse("n_neurons = 12\nsigma = 0.01").unwrap();
        let a = spec.build(Path::new("."), 1, 0).unwrap();
        assert_eq!(a, spec.build(Path::new("."), 1, 0).unwrap());
        assert_ne!(a, spec.build(Path::new("."), 1, 1).unwrap());
        let pruned: NetworkSpec = parse("n_neurons = 12\nsigma = 0.01\nprune_to = 3").unwrap();
        assert_eq!(pruned.build(Path::new("."), 1, 0).unwrap().connection_count(), 36);
        let local: NetworkSpec = parse("n_neurons = 30\nsigma = 0.01\nlocal_max_length = 0.3").unwrap();
        assert!(local.build(Path::new("."), 1, 0).unwrap().input_index().is_some());
        let none: NetworkSpec = parse("n_neurons = 12").unwrap();
        assert!(matches!(none.build(Path::new("."), 1, 0), Err(CliError::Config(_))));
    }
}
