//! NMSE metric, Monte Carlo trials and the SNR / mixing-ratio sweeps.
//!
//! Each trial index `t` owns the child stream `stream(seed, t)`. Within a
//! trial the draw order is: pilot matrix, path parameters, noise for the
//! compressed record, noise for the identity-pilot record. All four draws
//! happen regardless of which estimators are configured, so adding or
//! removing an estimator never changes what the others see. Sweep points
//! reuse the same trial streams (common random numbers).

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::channel::random_channel;
use crate::config::{EstimatorKind, ExperimentConfig};
use crate::dictionary::{dft_dictionary, polar_dictionary, Dictionary};
use crate::error::{bail, Result};
use crate::estimators::hybrid::{ff_omp_sensed, nf_omp_sensed};
use crate::estimators::{sample_covariance, EstimatorReport, HybridOmp, MmseFilter, SensedDictionary, SparsityBudget};
use crate::measurement::{identity_pilots, observe, random_pilots, snr_to_sigma2, MeasurementRecord, PilotKind, PilotMatrix};
use crate::rng::{self, StreamRng, TRAINING_STREAM};
use crate::channel::ChannelRealization;
use crate::CVector;

fn unpack(report: EstimatorReport) -> (CVector, bool) {
    let rank_deficient = report.rank_deficient();
    (report.h_hat, rank_deficient)
}

/// `‖h − ĥ‖² / ‖h‖²`.
pub fn nmse(h_true: &CVector, h_hat: &CVector) -> Result<f64> {
    if h_true.len() != h_hat.len() {
        bail!(Domain, "length mismatch: {} vs {}", h_true.len(), h_hat.len());
    }
    let power = h_true.norm_squared();
    if power == 0.0 {
        bail!(Domain, "NMSE is undefined for a zero channel");
    }
    Ok((h_true - h_hat).norm_squared() / power)
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Snr,
    Gamma,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Snr => "snr_db",
            SweepVariable::Gamma => "gamma",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub gamma: f64,
    /// `+∞` gives a noiseless trial.
    pub snr_db: f64,
}

impl SweepPoint {
    pub fn noise_power(&self) -> f64 {
        snr_to_sigma2(self.snr_db)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorOutcome {
    pub estimator: EstimatorKind,
    /// NMSE, or the error message if the estimator failed.
    pub nmse: std::result::Result<f64, String>,
    pub rank_deficient: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub outcomes: Vec<EstimatorOutcome>,
}

impl TrialRecord {
    pub fn nmse(&self, estimator: EstimatorKind) -> Option<f64> {
        self.outcomes
            .iter()
            .find(|o| o.estimator == estimator)
            .and_then(|o| o.nmse.as_ref().ok().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub estimator: EstimatorKind,
    pub nmse_linear: f64,
    pub nmse_db: f64,
    /// Successful trials in the mean.
    pub trials: usize,
    /// Standard error of the mean, mapped to dB by the delta method.
    pub stderr_db: f64,
    pub failures: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub points: Vec<SweepPoint>,
    pub rows: Vec<SweepRow>,
    pub metadata: Vec<(String, String)>,
    /// `records[p][t]`: trial `t` at point `p`.
    pub records: Vec<Vec<TrialRecord>>,
}

impl SweepResult {
    pub fn row(&self, sweep_value: f64, estimator: EstimatorKind) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.sweep_value == sweep_value && r.estimator == estimator)
    }

    pub fn rows_for(&self, estimator: EstimatorKind) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.estimator == estimator).collect()
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().map(|r| r.failures).sum()
    }
}

/// Per-point state shared by every trial at that point.
#[derive(Debug, Clone)]
pub struct PointContext {
    pub point: SweepPoint,
    pub budget: Option<SparsityBudget>,
    mmse: Option<Arc<MmseFilter>>,
}

/// Sensing matrices for one pilot draw.
struct Sensed<'a> {
    angle: Option<SensedDictionary<'a>>,
    polar: Option<SensedDictionary<'a>>,
}

/// Validated configuration with its dictionaries built.
#[derive(Debug)]
pub struct Experiment {
    config: ExperimentConfig,
    angle: Option<Dictionary>,
    polar: Option<Dictionary>,
    identity: PilotMatrix,
    covariances: std::sync::Mutex<BTreeMap<u64, Arc<crate::CMatrix>>>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let needs = |k: EstimatorKind| config.estimators.contains(&k);
        let angle = if needs(EstimatorKind::FfOmp) || needs(EstimatorKind::HfOmp) {
            Some(dft_dictionary(&config.array)?)
        } else {
            None
        };
        let polar = if needs(EstimatorKind::NfOmp) || needs(EstimatorKind::HfOmp) {
            Some(polar_dictionary(&config.array, &config.polar)?)
        } else {
            None
        };
        for (dict, name) in [(&angle, "angle"), (&polar, "polar")] {
            if let Some(d) = dict {
                if config.kappa * config.num_paths > d.num_columns() {
                    bail!(
                        Config,
                        "sparsity budget kappa*L = {} exceeds the {name} dictionary size {}",
                        config.kappa * config.num_paths,
                        d.num_columns()
                    );
                }
            }
        }
        let identity = identity_pilots(config.array.num_antennas());
        Ok(Self {
            config,
            angle,
            polar,
            identity,
            covariances: Default::default(),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn angle_dictionary(&self) -> Option<&Dictionary> {
        self.angle.as_ref()
    }

    pub fn polar_dictionary(&self) -> Option<&Dictionary> {
        self.polar.as_ref()
    }

    pub fn training_samples(&self) -> usize {
        self.config.training_factor * self.config.array.num_antennas()
    }

    fn covariance(&self, gamma: f64) -> Result<Arc<crate::CMatrix>> {
        let mut cache = self.covariances.lock().expect("covariance cache poisoned");
        if let Some(r) = cache.get(&gamma.to_bits()) {
            return Ok(r.clone());
        }
        let c = &self.config;
        let est = sample_covariance(&c.array, c.num_paths, gamma, &c.ranges, self.training_samples(), c.seed)?;
        let r = Arc::new(est.matrix);
        cache.insert(gamma.to_bits(), r.clone());
        Ok(r)
    }

    /// Builds the per-point budget split and MMSE filter.
    pub fn prepare(&self, point: SweepPoint) -> Result<PointContext> {
        let c = &self.config;
        let budget = if c.estimators.contains(&EstimatorKind::HfOmp) {
            Some(SparsityBudget::split(c.num_paths, point.gamma, c.kappa)?)
        } else {
            None
        };
        let mmse = if c.estimators.contains(&EstimatorKind::Mmse) {
            let r = self.covariance(point.gamma)?;
            Some(Arc::new(MmseFilter::new(&r, &self.identity, point.noise_power())?))
        } else {
            None
        };
        Ok(PointContext { point, budget, mmse })
    }

    fn draw_pilots(&self, rng: &mut StreamRng) -> Result<PilotMatrix> {
        let c = &self.config;
        match c.pilot_kind {
            PilotKind::Identity => Ok(self.identity.clone()),
            _ => random_pilots(c.num_pilots, c.array.num_antennas(), rng),
        }
    }

    fn sense<'a>(&'a self, pilots: &PilotMatrix) -> Result<Sensed<'a>> {
        Ok(Sensed {
            angle: self.angle.as_ref().map(|d| SensedDictionary::new(d, pilots)).transpose()?,
            polar: self.polar.as_ref().map(|d| SensedDictionary::new(d, pilots)).transpose()?,
        })
    }

    /// One trial at one point, drawn from the trial's own stream.
    pub fn run_trial(&self, ctx: &PointContext, trial: usize) -> Result<TrialRecord> {
        let mut rng = rng::stream(self.config.seed, trial as u64);
        let pilots = self.draw_pilots(&mut rng)?;
        let sensed = self.sense(&pilots)?;
        let channel = random_channel(
            &self.config.array,
            self.config.num_paths,
            ctx.point.gamma,
            &self.config.ranges,
            &mut rng,
        )?;
        self.evaluate(ctx, trial, &pilots, &sensed, &channel, &mut rng)
    }

    /// Like [`Experiment::run_trial`] but with a caller-supplied channel in
    /// place of the random one. Pilots and noise still come from the trial
    /// stream.
    pub fn run_trial_with_channel(
        &self,
        ctx: &PointContext,
        trial: usize,
        channel: &ChannelRealization,
    ) -> Result<TrialRecord> {
        if channel.h.len() != self.config.array.num_antennas() {
            bail!(Domain, "channel length {} does not match N", channel.h.len());
        }
        let mut rng = rng::stream(self.config.seed, trial as u64);
        let pilots = self.draw_pilots(&mut rng)?;
        let sensed = self.sense(&pilots)?;
        self.evaluate(ctx, trial, &pilots, &sensed, channel, &mut rng)
    }

    /// The channel trial `trial` sees at mixing ratio `gamma`.
    pub fn trial_channel(&self, gamma: f64, trial: usize) -> Result<ChannelRealization> {
        let mut rng = rng::stream(self.config.seed, trial as u64);
        self.draw_pilots(&mut rng)?;
        random_channel(&self.config.array, self.config.num_paths, gamma, &self.config.ranges, &mut rng)
    }

    /// The compressed record and the identity-pilot record for one trial.
    pub fn measurements(
        &self,
        ctx: &PointContext,
        trial: usize,
    ) -> Result<(MeasurementRecord, MeasurementRecord)> {
        let mut rng = rng::stream(self.config.seed, trial as u64);
        let pilots = self.draw_pilots(&mut rng)?;
        let channel = random_channel(
            &self.config.array,
            self.config.num_paths,
            ctx.point.gamma,
            &self.config.ranges,
            &mut rng,
        )?;
        let sigma2 = ctx.point.noise_power();
        let rec = observe(&pilots, &channel, sigma2, &mut rng)?;
        let bench = observe(&self.identity, &channel, sigma2, &mut rng)?;
        Ok((rec, bench))
    }

    fn evaluate(
        &self,
        ctx: &PointContext,
        trial: usize,
        pilots: &PilotMatrix,
        sensed: &Sensed<'_>,
        channel: &ChannelRealization,
        rng: &mut StreamRng,
    ) -> Result<TrialRecord> {
        let c = &self.config;
        let sigma2 = ctx.point.noise_power();
        let rec = observe(pilots, channel, sigma2, rng)?;
        let bench = observe(&self.identity, channel, sigma2, rng)?;
        let k = c.kappa * c.num_paths;

        let outcomes = c
            .estimators
            .iter()
            .map(|&estimator| {
                let result: Result<(CVector, bool)> = match estimator {
                    EstimatorKind::FfOmp => {
                        let a = sensed.angle.as_ref().expect("angle dictionary built");
                        ff_omp_sensed(&rec.y, a, k).map(unpack)
                    }
                    EstimatorKind::NfOmp => {
                        let w = sensed.polar.as_ref().expect("polar dictionary built");
                        nf_omp_sensed(&rec.y, w, k).map(unpack)
                    }
                    EstimatorKind::HfOmp => {
                        let a = sensed.angle.as_ref().expect("angle dictionary built");
                        let w = sensed.polar.as_ref().expect("polar dictionary built");
                        let hf = HybridOmp {
                            budget: ctx.budget.expect("budget prepared"),
                            refit: c.refit,
                        };
                        hf.estimate(&rec.y, a, w)
                            .map(unpack)
                    }
                    EstimatorKind::Mmse => {
                        let g = ctx.mmse.as_ref().expect("mmse filter prepared");
                        g.apply(&bench.y).map(|h| (h, false))
                    }
                    // Identity pilots: the pseudo-inverse is the identity.
                    EstimatorKind::Ls => Ok((bench.y.clone(), false)),
                };
                match result.and_then(|(h_hat, rd)| nmse(&channel.h, &h_hat).map(|v| (v, rd))) {
                    Ok((v, rank_deficient)) => EstimatorOutcome {
                        estimator,
                        nmse: Ok(v),
                        rank_deficient,
                    },
                    Err(e) => EstimatorOutcome {
                        estimator,
                        nmse: Err(e.to_string()),
                        rank_deficient: false,
                    },
                }
            })
            .collect();
        Ok(TrialRecord { trial, outcomes })
    }

    /// All trials at all points, trial-major: each trial draws and senses
    /// its pilot matrix once and reuses it across points.
    fn run_points(&self, points: &[SweepPoint]) -> Result<(Vec<PointContext>, Vec<Vec<TrialRecord>>)> {
        let contexts = points.iter().map(|&p| self.prepare(p)).collect::<Result<Vec<_>>>()?;
        let c = &self.config;
        let one = |trial: usize| -> Result<Vec<TrialRecord>> {
            let mut base = rng::stream(c.seed, trial as u64);
            let pilots = self.draw_pilots(&mut base)?;
            let sensed = self.sense(&pilots)?;
            contexts
                .iter()
                .map(|ctx| {
                    let mut rng = base.clone();
                    let channel = random_channel(&c.array, c.num_paths, ctx.point.gamma, &c.ranges, &mut rng)?;
                    self.evaluate(ctx, trial, &pilots, &sensed, &channel, &mut rng)
                })
                .collect()
        };
        let by_trial: Vec<Vec<TrialRecord>> = if c.parallel {
            (0..c.trials).into_par_iter().map(one).collect::<Result<_>>()?
        } else {
            (0..c.trials).map(one).collect::<Result<_>>()?
        };
        let mut by_point: Vec<Vec<TrialRecord>> = vec![Vec::with_capacity(c.trials); points.len()];
        for trial in by_trial {
            for (p, rec) in trial.into_iter().enumerate() {
                by_point[p].push(rec);
            }
        }
        Ok((contexts, by_point))
    }

    pub fn run_snr_sweep(&self) -> Result<SweepResult> {
        let c = &self.config;
        let points: Vec<SweepPoint> = c
            .snr_grid_db
            .iter()
            .map(|&snr_db| SweepPoint { gamma: c.gamma, snr_db })
            .collect();
        self.sweep(SweepVariable::Snr, points)
    }

    pub fn run_gamma_sweep(&self) -> Result<SweepResult> {
        let c = &self.config;
        let points: Vec<SweepPoint> = c
            .gamma_grid
            .iter()
            .map(|&gamma| SweepPoint { gamma, snr_db: c.snr_db })
            .collect();
        self.sweep(SweepVariable::Gamma, points)
    }

    fn sweep(&self, variable: SweepVariable, points: Vec<SweepPoint>) -> Result<SweepResult> {
        let (contexts, records) = self.run_points(&points)?;
        let mut rows = Vec::with_capacity(points.len() * self.config.estimators.len());
        for (point, recs) in points.iter().zip(&records) {
            let value = match variable {
                SweepVariable::Snr => point.snr_db,
                SweepVariable::Gamma => point.gamma,
            };
            for &est in &self.config.estimators {
                rows.push(aggregate(value, est, recs));
            }
        }
        let metadata = self.metadata(variable, &contexts, &rows);
        Ok(SweepResult {
            variable,
            points,
            rows,
            metadata,
            records,
        })
    }

    fn metadata(&self, variable: SweepVariable, contexts: &[PointContext], rows: &[SweepRow]) -> Vec<(String, String)> {
        let c = &self.config;
        let mut m: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| m.push((k.to_string(), v));
        put("library", env!("CARGO_PKG_NAME").into());
        put("library_version", env!("CARGO_PKG_VERSION").into());
        put("sweep_variable", variable.name().into());
        put("config_hash", c.hash());
        put("base_seed", c.seed.to_string());
        put("trial_streams", format!("0..{}", c.trials));
        put("training_stream", TRAINING_STREAM.to_string());
        put("training_samples", self.training_samples().to_string());
        put(
            "angle_columns",
            self.angle.as_ref().map_or("none".into(), |d| d.num_columns().to_string()),
        );
        put(
            "polar_columns",
            self.polar.as_ref().map_or("none".into(), |d| d.num_columns().to_string()),
        );
        put("sparsity_total", (c.kappa * c.num_paths).to_string());
        put("refit", c.refit.name().into());
        put("noise_convention", "sigma2 = 10^(-snr_db/10), total variance per complex entry".into());
        put("linear_estimator_pilots", "identity".into());
        put("far_count_rounding", "floor(x + 0.5)".into());
        put("stderr", "delta method, 10/ln(10) * se/mean".into());
        for (i, ctx) in contexts.iter().enumerate() {
            put(&format!("point.{i}.gamma"), ctx.point.gamma.to_string());
            put(&format!("point.{i}.snr_db"), ctx.point.snr_db.to_string());
            if let Some(b) = ctx.budget {
                put(&format!("point.{i}.k_far"), b.far.to_string());
                put(&format!("point.{i}.k_near"), b.near.to_string());
            }
        }
        put("failures", rows.iter().map(|r| r.failures).sum::<usize>().to_string());
        // Execution mode is left out so serial and parallel runs agree.
        for (k, v) in c.entries().into_iter().filter(|(k, _)| k != "run.parallel") {
            put(&format!("config.{k}"), v);
        }
        m
    }
}

/// Mean and delta-method standard error over the successful trials, in
/// trial-index order.
fn aggregate(sweep_value: f64, estimator: EstimatorKind, recs: &[TrialRecord]) -> SweepRow {
    let values: Vec<f64> = recs.iter().filter_map(|r| r.nmse(estimator)).collect();
    let n = values.len();
    let failures = recs.len() - n;
    let mean = if n == 0 { f64::NAN } else { values.iter().sum::<f64>() / n as f64 };
    let stderr_db = if n < 2 {
        f64::NAN
    } else {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        10.0 / std::f64::consts::LN_10 * se / mean
    };
    SweepRow {
        sweep_value,
        estimator,
        nmse_linear: mean,
        nmse_db: to_db(mean),
        trials: n,
        stderr_db,
        failures,
    }
}

/// Runs a sweep with default construction; convenience for callers that
/// do not need the [`Experiment`] afterwards.
pub fn run_snr_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    Experiment::new(config.clone())?.run_snr_sweep()
}

pub fn run_gamma_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    Experiment::new(config.clone())?.run_gamma_sweep()
}
