//! Experiment configuration: built-in profiles, config files and overrides.
//!
//! Config files are flat TOML documents with dotted keys, for example
//!
//! ```toml
//! profile = "desk"
//! array.num_antennas = 256
//! channel.gamma = 0.5
//! sweep.snr_db = [0, 2, 4, 6, 8, 10]
//! run.trials = 200
//! ```
//!
//! Every key is optional; missing keys take the selected profile's value.
//! Unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::channel::{check_gamma, PathRanges};
use crate::dictionary::PolarGridParams;
use crate::error::{bail, Error, Result};
use crate::estimators::RefitTarget;
use crate::geometry::ArrayConfig;
use crate::measurement::PilotKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    FfOmp,
    NfOmp,
    HfOmp,
    Mmse,
    Ls,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::FfOmp,
        EstimatorKind::NfOmp,
        EstimatorKind::HfOmp,
        EstimatorKind::Mmse,
        EstimatorKind::Ls,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::FfOmp => "ff-omp",
            EstimatorKind::NfOmp => "nf-omp",
            EstimatorKind::HfOmp => "hf-omp",
            EstimatorKind::Mmse => "mmse",
            EstimatorKind::Ls => "ls",
        }
    }

    /// Runs on the compressed pilot measurement (as opposed to the
    /// full-dimensional identity-pilot benchmark measurement).
    pub fn is_sparse(self) -> bool {
        matches!(self, EstimatorKind::FfOmp | EstimatorKind::NfOmp | EstimatorKind::HfOmp)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown estimator `{s}` (expected ff-omp, nf-omp, hf-omp, mmse or ls)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    /// N = 512, M = 256.
    Paper,
    /// N = 256, M = 128; same physics at a quarter of the polar dictionary cost.
    #[default]
    Desk,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            other => Err(Error::Config(format!("unknown profile `{other}` (expected paper or desk)"))),
        }
    }
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Paper => "paper",
            Profile::Desk => "desk",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub profile: Profile,
    pub array: ArrayConfig,
    pub num_paths: usize,
    /// Mixing ratio for SNR sweeps.
    pub gamma: f64,
    pub gamma_grid: Vec<f64>,
    /// SNR for mixing-ratio sweeps.
    pub snr_db: f64,
    pub snr_grid_db: Vec<f64>,
    pub num_pilots: usize,
    pub pilot_kind: PilotKind,
    pub estimators: Vec<EstimatorKind>,
    pub kappa: usize,
    pub refit: RefitTarget,
    pub trials: usize,
    pub seed: u64,
    pub polar: PolarGridParams,
    pub ranges: PathRanges,
    /// MMSE training set size as a multiple of `N`.
    pub training_factor: usize,
    pub parallel: bool,
}

pub const DEFAULT_SEED: u64 = 2022;

impl ExperimentConfig {
    pub fn profile(profile: Profile) -> Self {
        let (n, m) = match profile {
            Profile::Paper => (512, 256),
            Profile::Desk => (256, 128),
        };
        Self {
            profile,
            array: ArrayConfig::half_wavelength(n, 0.01).expect("valid built-in array"),
            num_paths: 6,
            gamma: 0.5,
            gamma_grid: (0..=6).map(|k| k as f64 / 6.0).collect(),
            snr_db: 5.0,
            snr_grid_db: vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            num_pilots: m,
            pilot_kind: PilotKind::Random,
            estimators: vec![
                EstimatorKind::FfOmp,
                EstimatorKind::NfOmp,
                EstimatorKind::HfOmp,
                EstimatorKind::Mmse,
            ],
            kappa: 12,
            refit: RefitTarget::Residual,
            trials: 500,
            seed: DEFAULT_SEED,
            polar: PolarGridParams {
                beta: 2.5,
                rho_min: 10.0,
                include_far_column: true,
            },
            ranges: PathRanges::default(),
            training_factor: 10,
            parallel: true,
        }
    }

    pub fn paper() -> Self {
        Self::profile(Profile::Paper)
    }

    pub fn desk() -> Self {
        Self::profile(Profile::Desk)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_paths == 0 {
            bail!(Config, "channel.num_paths must be at least 1");
        }
        check_gamma(self.gamma)?;
        if self.gamma_grid.is_empty() {
            bail!(Config, "sweep.gamma must not be empty");
        }
        for &g in &self.gamma_grid {
            check_gamma(g)?;
        }
        if self.snr_grid_db.is_empty() {
            bail!(Config, "sweep.snr_db must not be empty");
        }
        if self.snr_grid_db.iter().chain([&self.snr_db]).any(|s| !s.is_finite()) {
            bail!(Config, "SNR values must be finite");
        }
        if self.estimators.is_empty() {
            bail!(Config, "estimation.estimators must not be empty");
        }
        let n = self.array.num_antennas();
        match self.pilot_kind {
            PilotKind::Random => {
                if self.num_pilots == 0 || self.num_pilots > n {
                    bail!(Config, "pilots.count = {} must lie in [1, N = {n}]", self.num_pilots);
                }
            }
            PilotKind::Identity => {
                if self.num_pilots != n {
                    bail!(Config, "identity pilots need pilots.count = N = {n}, got {}", self.num_pilots);
                }
            }
            PilotKind::Custom => bail!(Config, "custom pilot matrices cannot be configured from a file"),
        }
        if self.kappa == 0 {
            bail!(Config, "estimation.kappa must be at least 1");
        }
        if self.estimators.iter().any(|e| e.is_sparse()) && self.kappa * self.num_paths > self.num_pilots.min(n) {
            bail!(
                Config,
                "sparsity budget kappa*L = {} exceeds min(M, N) = {}",
                self.kappa * self.num_paths,
                self.num_pilots.min(n)
            );
        }
        if self.trials == 0 {
            bail!(Config, "run.trials must be at least 1");
        }
        if self.training_factor == 0 {
            bail!(Config, "estimation.training_factor must be at least 1");
        }
        self.ranges.validate()?;
        if self.ranges.distance.0 < self.array.guard_radius() {
            bail!(
                Config,
                "channel.distance_min = {} m is below the guard radius d*N = {} m",
                self.ranges.distance.0,
                self.array.guard_radius()
            );
        }
        Ok(())
    }

    /// Effective configuration as ordered `key=value` pairs, using the same
    /// dotted keys as config files.
    pub fn entries(&self) -> Vec<(String, String)> {
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let pilot_kind = match self.pilot_kind {
            PilotKind::Random => "random",
            PilotKind::Identity => "identity",
            PilotKind::Custom => "custom",
        };
        let kv = |k: &str, v: String| (k.to_string(), v);
        vec![
            kv("profile", self.profile.name().into()),
            kv("array.num_antennas", self.array.num_antennas().to_string()),
            kv("array.wavelength", self.array.wavelength().to_string()),
            kv("array.spacing", self.array.spacing().to_string()),
            kv("channel.num_paths", self.num_paths.to_string()),
            kv("channel.gamma", self.gamma.to_string()),
            kv("channel.angle_min", self.ranges.angle.0.to_string()),
            kv("channel.angle_max", self.ranges.angle.1.to_string()),
            kv("channel.distance_min", self.ranges.distance.0.to_string()),
            kv("channel.distance_max", self.ranges.distance.1.to_string()),
            kv("pilots.count", self.num_pilots.to_string()),
            kv("pilots.kind", pilot_kind.into()),
            kv("dictionary.beta", self.polar.beta.to_string()),
            kv("dictionary.rho_min", self.polar.rho_min.to_string()),
            kv("dictionary.far_column", self.polar.include_far_column.to_string()),
            kv(
                "estimation.estimators",
                self.estimators.iter().map(|e| e.name()).collect::<Vec<_>>().join(","),
            ),
            kv("estimation.kappa", self.kappa.to_string()),
            kv("estimation.refit", self.refit.name().into()),
            kv("estimation.training_factor", self.training_factor.to_string()),
            kv("sweep.snr_db", list(&self.snr_grid_db)),
            kv("sweep.gamma", list(&self.gamma_grid)),
            kv("sweep.fixed_snr_db", self.snr_db.to_string()),
            kv("run.trials", self.trials.to_string()),
            kv("run.seed", self.seed.to_string()),
            kv("run.parallel", self.parallel.to_string()),
        ]
    }

    /// The effective configuration as a config file that loads back to
    /// the same value.
    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let value = match k.as_str() {
                "profile" | "pilots.kind" | "estimation.refit" => format!("\"{v}\""),
                "sweep.snr_db" | "sweep.gamma" => format!("[{}]", v.replace(',', ", ")),
                "estimation.estimators" => {
                    let items: Vec<String> = v.split(',').map(|e| format!("\"{e}\"")).collect();
                    format!("[{}]", items.join(", "))
                }
                _ => v,
            };
            out.push_str(&format!("{k} = {value}\n"));
        }
        out
    }

    /// SHA-256 over the numeric configuration. `run.parallel` is excluded
    /// since it does not change any result.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in self.entries() {
            if k == "run.parallel" {
                continue;
            }
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    profile: Option<String>,
    #[serde(default)]
    array: ArraySection,
    #[serde(default)]
    channel: ChannelSection,
    #[serde(default)]
    pilots: PilotSection,
    #[serde(default)]
    dictionary: DictionarySection,
    #[serde(default)]
    estimation: EstimationSection,
    #[serde(default)]
    sweep: SweepSection,
    #[serde(default)]
    run: RunSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArraySection {
    num_antennas: Option<usize>,
    wavelength: Option<f64>,
    spacing: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSection {
    num_paths: Option<usize>,
    gamma: Option<f64>,
    angle_min: Option<f64>,
    angle_max: Option<f64>,
    distance_min: Option<f64>,
    distance_max: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PilotSection {
    count: Option<usize>,
    kind: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DictionarySection {
    beta: Option<f64>,
    rho_min: Option<f64>,
    far_column: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimationSection {
    estimators: Option<Vec<String>>,
    kappa: Option<usize>,
    refit: Option<String>,
    training_factor: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    snr_db: Option<Vec<f64>>,
    gamma: Option<Vec<f64>>,
    fixed_snr_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    trials: Option<usize>,
    seed: Option<u64>,
    parallel: Option<bool>,
}

/// Command-line overrides, applied after the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub profile: Option<Profile>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub gamma_grid: Option<Vec<f64>>,
    pub snr_grid: Option<Vec<f64>>,
    pub estimators: Option<Vec<EstimatorKind>>,
    pub kappa: Option<usize>,
    pub serial: bool,
}

pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|e| Error::Config(format!("cannot parse list item `{}`: {e}", t.trim())))
        })
        .collect()
}

fn parse_refit(s: &str) -> Result<RefitTarget> {
    match s {
        "residual" => Ok(RefitTarget::Residual),
        "observation" => Ok(RefitTarget::Observation),
        other => Err(Error::Config(format!("unknown estimation.refit `{other}` (expected residual or observation)"))),
    }
}

fn parse_pilot_kind(s: &str) -> Result<PilotKind> {
    match s {
        "random" => Ok(PilotKind::Random),
        "identity" => Ok(PilotKind::Identity),
        other => Err(Error::Config(format!("unknown pilots.kind `{other}` (expected random or identity)"))),
    }
}

/// Parses config text and applies overrides on top of the selected profile.
pub fn from_str_with(text: &str, overrides: &Overrides) -> Result<ExperimentConfig> {
    let file: FileConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let profile = match (overrides.profile, &file.profile) {
        (Some(p), _) => p,
        (None, Some(p)) => p.parse()?,
        (None, None) => Profile::default(),
    };
    let mut cfg = ExperimentConfig::profile(profile);

    let a = &file.array;
    if a.num_antennas.is_some() || a.wavelength.is_some() || a.spacing.is_some() {
        let n = a.num_antennas.unwrap_or(cfg.array.num_antennas());
        let wavelength = a.wavelength.unwrap_or(cfg.array.wavelength());
        let spacing = a.spacing.unwrap_or(wavelength / 2.0);
        cfg.array = ArrayConfig::new(n, wavelength, spacing)?;
    }
    let c = &file.channel;
    if let Some(v) = c.num_paths {
        cfg.num_paths = v;
    }
    if let Some(v) = c.gamma {
        cfg.gamma = v;
    }
    cfg.ranges.angle.0 = c.angle_min.unwrap_or(cfg.ranges.angle.0);
    cfg.ranges.angle.1 = c.angle_max.unwrap_or(cfg.ranges.angle.1);
    cfg.ranges.distance.0 = c.distance_min.unwrap_or(cfg.ranges.distance.0);
    cfg.ranges.distance.1 = c.distance_max.unwrap_or(cfg.ranges.distance.1);
    if let Some(kind) = &file.pilots.kind {
        cfg.pilot_kind = parse_pilot_kind(kind)?;
        if cfg.pilot_kind == PilotKind::Identity {
            cfg.num_pilots = cfg.array.num_antennas();
        }
    }
    if let Some(v) = file.pilots.count {
        cfg.num_pilots = v;
    }
    let d = &file.dictionary;
    cfg.polar.beta = d.beta.unwrap_or(cfg.polar.beta);
    cfg.polar.rho_min = d.rho_min.unwrap_or(cfg.polar.rho_min);
    cfg.polar.include_far_column = d.far_column.unwrap_or(cfg.polar.include_far_column);
    let e = &file.estimation;
    if let Some(list) = &e.estimators {
        cfg.estimators = list.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    }
    if let Some(v) = e.kappa {
        cfg.kappa = v;
    }
    if let Some(v) = &e.refit {
        cfg.refit = parse_refit(v)?;
    }
    if let Some(v) = e.training_factor {
        cfg.training_factor = v;
    }
    let s = &file.sweep;
    if let Some(v) = &s.snr_db {
        cfg.snr_grid_db = v.clone();
    }
    if let Some(v) = &s.gamma {
        cfg.gamma_grid = v.clone();
    }
    if let Some(v) = s.fixed_snr_db {
        cfg.snr_db = v;
    }
    let r = &file.run;
    cfg.trials = r.trials.unwrap_or(cfg.trials);
    cfg.seed = r.seed.unwrap_or(cfg.seed);
    cfg.parallel = r.parallel.unwrap_or(cfg.parallel);

    apply_overrides(&mut cfg, overrides);
    cfg.validate()?;
    Ok(cfg)
}

fn apply_overrides(cfg: &mut ExperimentConfig, o: &Overrides) {
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.trials {
        cfg.trials = v;
    }
    if let Some(v) = &o.gamma_grid {
        cfg.gamma_grid = v.clone();
    }
    if let Some(v) = &o.snr_grid {
        cfg.snr_grid_db = v.clone();
    }
    if let Some(v) = &o.estimators {
        cfg.estimators = v.clone();
    }
    if let Some(v) = o.kappa {
        cfg.kappa = v;
    }
    if o.serial {
        cfg.parallel = false;
    }
}

/// Loads a config file, or the profile defaults when `path` is `None`.
pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", p.display())))?,
        None => String::new(),
    };
    from_str_with(&text, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_desk_profile() {
        let cfg = from_str_with("", &Overrides::default()).unwrap();
        assert_eq!(cfg, ExperimentConfig::desk());
    }

    #[test]
    fn paper_profile_values() {
        let cfg = from_str_with("profile = \"paper\"", &Overrides::default()).unwrap();
        assert_eq!(cfg.array.num_antennas(), 512);
        assert_eq!(cfg.array.wavelength(), 0.01);
        assert_eq!(cfg.array.spacing(), 0.005);
        assert_eq!(cfg.num_pilots, 256);
        assert_eq!(cfg.num_paths, 6);
        assert_eq!(cfg.kappa, 12);
        assert_eq!(cfg.gamma, 0.5);
        assert_eq!(cfg.snr_db, 5.0);
        assert_eq!(cfg.ranges, PathRanges { angle: (-1.0, 1.0), distance: (10.0, 80.0) });
    }

    #[test]
    fn dotted_keys_override_profile() {
        let text = "profile = \"desk\"\narray.num_antennas = 128\npilots.count = 96\nsweep.snr_db = [0, 5]\nrun.trials = 3\nestimation.estimators = [\"hf-omp\", \"ls\"]\n";
        let cfg = from_str_with(text, &Overrides::default()).unwrap();
        assert_eq!(cfg.array.num_antennas(), 128);
        assert_eq!(cfg.num_pilots, 96);
        assert_eq!(cfg.snr_grid_db, vec![0.0, 5.0]);
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.estimators, vec![EstimatorKind::HfOmp, EstimatorKind::Ls]);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = from_str_with("channel.gama = 0.5", &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("gama"), "{err}");
        let err = from_str_with("colour = 1", &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn overrides_win() {
        let o = Overrides {
            profile: Some(Profile::Paper),
            seed: Some(9),
            trials: Some(1),
            kappa: Some(2),
            serial: true,
            ..Default::default()
        };
        let cfg = from_str_with("profile = \"desk\"\nrun.seed = 4", &o).unwrap();
        assert_eq!(cfg.profile, Profile::Paper);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.trials, 1);
        assert_eq!(cfg.kappa, 2);
        assert!(!cfg.parallel);
    }

    #[test]
    fn invalid_values_rejected() {
        for text in [
            "channel.gamma = 1.5",
            "run.trials = 0",
            "pilots.count = 1000",
            "estimation.estimators = []",
            "estimation.estimators = [\"amp\"]",
            "estimation.kappa = 40",
            "profile = \"huge\"",
            "channel.distance_min = 0.5",
        ] {
            assert!(from_str_with(text, &Overrides::default()).is_err(), "{text}");
        }
    }

    #[test]
    fn toml_dump_round_trips() {
        let mut cfg = ExperimentConfig::paper();
        cfg.gamma_grid = vec![0.0, 1.0 / 3.0, 1.0];
        cfg.refit = RefitTarget::Observation;
        cfg.estimators = vec![EstimatorKind::Ls];
        cfg.parallel = false;
        let back = from_str_with(&cfg.to_toml(), &Overrides::default()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn hash_ignores_parallelism() {
        let a = ExperimentConfig::desk();
        let mut b = a.clone();
        b.parallel = false;
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list::<f64>("0,0.25, 0.5").unwrap(), vec![0.0, 0.25, 0.5]);
        assert!(parse_list::<f64>("0,x").is_err());
        let kinds: Vec<EstimatorKind> = parse_list("ff-omp,HF-OMP").unwrap();
        assert_eq!(kinds, vec![EstimatorKind::FfOmp, EstimatorKind::HfOmp]);
    }
}
