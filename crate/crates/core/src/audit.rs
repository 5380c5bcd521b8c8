//! Shot-level sampling of detector clicks and the counterfactuality audit.
//!
//! Sampling is a multinomial draw realised as a chain of conditional binomials,
//! driven by a ChaCha stream keyed on `(seed, scenario, M, N)`. Runs with the
//! same key give the same counts on every platform and thread schedule.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

use crate::cqze::CqzeParams;
use crate::experiment::{
    run_scenario, simulate, Detector, ExperimentError, ExperimentResult, Scenario,
};
use crate::optics::Mode;
use crate::scalar::Scalar;

pub type Counts = BTreeMap<Detector, u64>;
pub type ZScores = BTreeMap<Detector, f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("shot count must be at least 1")]
    NoShots,
    #[error("invalid probability set: {0}")]
    InvalidProbabilities(String),
    #[error("audit undefined without channel")]
    NoChannel,
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShotConfig {
    shots: u64,
    seed: u64,
}

impl ShotConfig {
    pub fn new(shots: u64, seed: u64) -> Result<Self, AuditError> {
        if shots == 0 {
            return Err(AuditError::NoShots);
        }
        Ok(Self { shots, seed })
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// ChaCha stream id for one (scenario, M, N) point.
fn stream_id(scenario: Scenario, params: Option<CqzeParams>) -> u64 {
    let (m, n) = params.map_or((0, 0), |p| (p.outer(), p.inner()));
    let tag = Scenario::ALL
        .iter()
        .position(|&s| s == scenario)
        .unwrap_or(0) as u64;
    (tag << 62) | ((u64::from(m) & 0x7fff_ffff) << 31) | (u64::from(n) & 0x7fff_ffff)
}

/// Reproducible generator for one experiment point.
pub fn point_rng(seed: u64, scenario: Scenario, params: Option<CqzeParams>) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(scenario, params));
    rng
}

/// Draws `config.shots` detector clicks from the result's probabilities.
pub fn sample_outcomes<T: Scalar>(
    result: &ExperimentResult<T>,
    config: &ShotConfig,
) -> Result<Counts, AuditError> {
    let probs: Vec<f64> = Detector::ALL
        .iter()
        .map(|&d| result.probability(d).to_f64().unwrap_or(f64::NAN))
        .collect();
    if let Some(bad) = probs
        .iter()
        .find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0)
    {
        return Err(AuditError::InvalidProbabilities(format!(
            "probability {bad} outside [0, 1]"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(AuditError::InvalidProbabilities(format!(
            "probabilities sum to {total}"
        )));
    }

    let mut rng = point_rng(config.seed, result.scenario, result.params);
    let mut counts = Counts::new();
    let mut remaining = config.shots;
    for (i, &detector) in Detector::ALL.iter().enumerate() {
        let p = probs[i];
        // Suffix sum rather than 1 − prefix: a zero tail stays exactly zero.
        let tail: f64 = probs[i + 1..].iter().sum();
        let drawn = if remaining == 0 || p == 0.0 {
            0
        } else if tail == 0.0 {
            remaining
        } else {
            let conditional = (p / (p + tail)).min(1.0);
            Binomial::new(remaining, conditional)
                .map_err(|e| AuditError::InvalidProbabilities(e.to_string()))?
                .sample(&mut rng)
        };
        counts.insert(detector, drawn);
        remaining -= drawn;
    }
    debug_assert_eq!(remaining, 0);
    Ok(counts)
}

/// Per-detector `z = (count − shots·p) / √(shots·p·(1 − p))`.
///
/// Ports with `p ∈ {0, 1}` demand exact counts: any miss yields an infinite z.
pub fn compare_frequencies<T: Scalar>(counts: &Counts, result: &ExperimentResult<T>) -> ZScores {
    let shots: u64 = counts.values().sum();
    let shots_f = shots as f64;
    Detector::ALL
        .iter()
        .map(|&d| {
            let count = counts.get(&d).copied().unwrap_or(0);
            let p = result.probability(d).to_f64().unwrap_or(f64::NAN);
            let expected = shots_f * p;
            let z = if p <= 0.0 || p >= 1.0 {
                let exact = if p <= 0.0 { 0 } else { shots };
                match count.cmp(&exact) {
                    std::cmp::Ordering::Equal => 0.0,
                    std::cmp::Ordering::Greater => f64::INFINITY,
                    std::cmp::Ordering::Less => f64::NEG_INFINITY,
                }
            } else {
                (count as f64 - expected) / (expected * (1.0 - p)).sqrt()
            };
            (d, z)
        })
        .collect()
}

/// Detectors whose |z| exceeds `threshold`.
pub fn flagged(z_scores: &ZScores, threshold: f64) -> Vec<Detector> {
    z_scores
        .iter()
        .filter(|(_, z)| !(z.abs() <= threshold))
        .map(|(d, _)| *d)
        .collect()
}

/// Where the channel-visiting histories ended up, plus a shot-level
/// realisation of the detector statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport<T> {
    pub result: ExperimentResult<T>,
    pub counts: Counts,
    pub z_scores: ZScores,
    /// Weight of channel-visiting histories reaching D1.
    pub tagged_mass_d1: T,
    /// Weight of channel-visiting histories reaching D2.
    pub tagged_mass_d2: T,
    /// Weight of channel-visiting histories absorbed at D_B or D3.
    pub tagged_mass_lost: T,
    /// Physical probability arriving at each detector in the state-vector run.
    pub detector_mass: BTreeMap<Detector, T>,
}

impl<T: Scalar> AuditReport<T> {
    /// Sum of physical detector probabilities; 1 up to rounding.
    pub fn total_mass(&self) -> T {
        self.detector_mass
            .values()
            .fold(T::zero(), |acc, &p| acc + p)
    }
}

/// Runs the tagged state-vector circuit and samples shots from it.
pub fn counterfactual_audit<T: Scalar>(
    scenario: Scenario,
    params: CqzeParams,
    config: &ShotConfig,
) -> Result<AuditReport<T>, AuditError> {
    if !scenario.uses_cqze() {
        return Err(AuditError::NoChannel);
    }
    let state = simulate::<T>(scenario, Some(params))?;
    let result = run_scenario::<T>(scenario, Some(params))?;
    let detector_mass = Detector::ALL
        .iter()
        .map(|&d| {
            let mode = d.mode();
            let mass = if mode.is_sink() {
                state.sink_total(mode)
            } else {
                state.mode_probability(mode)
            };
            (d, mass)
        })
        .collect();
    let counts = sample_outcomes(&result, config)?;
    let z_scores = compare_frequencies(&counts, &result);
    Ok(AuditReport {
        tagged_mass_d1: state.tagged_weight(Mode::OutD1),
        tagged_mass_d2: state.tagged_weight(Mode::OutD2),
        tagged_mass_lost: state.tagged_loss(Mode::SinkDb) + state.tagged_loss(Mode::SinkD3),
        detector_mass,
        counts,
        z_scores,
        result,
    })
}
