//! The full eraser experiments: the bare Michelson interferometer with and
//! without a which-path tag, and the version whose Bob arm runs through the
//! CQZE with the channel blocked or open.
//!
//! Conventions: the central beam splitter sends `(a + b)/√2` to `D2` (bright)
//! and `(a − b)/√2` to `D1` (dark, reached through the circulator). Detectors
//! do not resolve polarization.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::cqze::{closed_form_blocked, ChannelPolicy, CqzeEngine, CqzeError, CqzeParams};
use crate::optics::{Mode, OpticsError, PhotonState, Polarization, RotationAngle};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scenario {
    /// Michelson interferometer, polarization rotator off.
    BaselineNoTag,
    /// Michelson interferometer, rotator flips the `ARM_A` return to V.
    BaselineTagged,
    /// Tagged interferometer with the CQZE in `ARM_B`, channel blocked.
    EraseBlocked,
    /// Tagged interferometer with the CQZE in `ARM_B`, channel open.
    NoEraseOpen,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::BaselineNoTag,
        Scenario::BaselineTagged,
        Scenario::EraseBlocked,
        Scenario::NoEraseOpen,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::BaselineNoTag => "baseline-no-tag",
            Scenario::BaselineTagged => "baseline-tagged",
            Scenario::EraseBlocked => "erase-blocked",
            Scenario::NoEraseOpen => "no-erase-open",
        }
    }

    /// Channel policy of the CQZE scenarios; `None` for the baselines.
    pub fn channel_policy(self) -> Option<ChannelPolicy> {
        match self {
            Scenario::BaselineNoTag | Scenario::BaselineTagged => None,
            Scenario::EraseBlocked => Some(ChannelPolicy::Blocked),
            Scenario::NoEraseOpen => Some(ChannelPolicy::Open),
        }
    }

    pub fn uses_cqze(self) -> bool {
        self.channel_policy().is_some()
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| ExperimentError::UnknownScenario(s.to_owned()))
    }
}

/// Alice's detectors and the two loss detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Detector {
    D1,
    D2,
    D3,
    Db,
}

impl Detector {
    pub const ALL: [Detector; 4] = [Detector::D1, Detector::D2, Detector::D3, Detector::Db];

    pub fn name(self) -> &'static str {
        match self {
            Detector::D1 => "D1",
            Detector::D2 => "D2",
            Detector::D3 => "D3",
            Detector::Db => "D_B",
        }
    }

    pub fn mode(self) -> Mode {
        match self {
            Detector::D1 => Mode::OutD1,
            Detector::D2 => Mode::OutD2,
            Detector::D3 => Mode::SinkD3,
            Detector::Db => Mode::SinkDb,
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExperimentError {
    #[error("scenario requires CQZE parameters")]
    MissingParams,
    #[error("unknown scenario: {0}")]
    UnknownScenario(String),
    #[error("sweep bounds must be at least 1")]
    EmptySweep,
    #[error(transparent)]
    Cqze(#[from] CqzeError),
    #[error(transparent)]
    Optics(#[from] OpticsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult<T> {
    pub scenario: Scenario,
    /// Present for the CQZE scenarios.
    pub params: Option<CqzeParams>,
    pub p_d1: T,
    pub p_d2: T,
    pub p_d3: T,
    pub p_db: T,
    pub visibility: T,
}

impl<T: Scalar> ExperimentResult<T> {
    pub fn probability(&self, detector: Detector) -> T {
        match detector {
            Detector::D1 => self.p_d1,
            Detector::D2 => self.p_d2,
            Detector::D3 => self.p_d3,
            Detector::Db => self.p_db,
        }
    }

    pub fn total_probability(&self) -> T {
        self.p_d1 + self.p_d2 + self.p_d3 + self.p_db
    }

    /// Probability of losing the photon to either sink.
    pub fn p_loss(&self) -> T {
        self.p_d3 + self.p_db
    }
}

const ALL_MODES: [Mode; 10] = [
    Mode::Source,
    Mode::Idle,
    Mode::ArmA,
    Mode::ArmB,
    Mode::Inner,
    Mode::Channel,
    Mode::OutD1,
    Mode::OutD2,
    Mode::SinkD3,
    Mode::SinkDb,
];

/// Propagates a single H photon from the source to the detectors and returns
/// the final state (detector ports live, sinks in the ledger).
pub fn simulate<T: Scalar>(
    scenario: Scenario,
    params: Option<CqzeParams>,
) -> Result<PhotonState<T>, ExperimentError> {
    let engine = match scenario.channel_policy() {
        None => None,
        Some(policy) => {
            let params = params.ok_or(ExperimentError::MissingParams)?;
            Some(CqzeEngine::<T>::new(params.with_policy(policy)))
        }
    };
    simulate_with(scenario, engine.as_ref())
}

/// As [`simulate`], with an explicit (possibly miscalibrated) CQZE engine.
pub fn simulate_with<T: Scalar>(
    scenario: Scenario,
    engine: Option<&CqzeEngine<T>>,
) -> Result<PhotonState<T>, ExperimentError> {
    let mut state =
        PhotonState::new(ALL_MODES).with_amplitude(Mode::Source, Polarization::H, T::one());
    state.apply_bs(Mode::Source, Mode::Idle, Mode::ArmA, Mode::ArmB)?;

    let tag_arm_a = scenario != Scenario::BaselineNoTag;
    if tag_arm_a {
        state.apply_rotation(Mode::ArmA, RotationAngle::quarter_turn())?;
    }
    if scenario.uses_cqze() {
        let engine = engine.ok_or(ExperimentError::MissingParams)?;
        engine.run_state(&mut state)?;
    }

    // Mirrors and delays are identities; both arms meet at the splitter again.
    state.apply_bs(Mode::ArmA, Mode::ArmB, Mode::OutD2, Mode::OutD1)?;
    Ok(state)
}

fn result_from_state<T: Scalar>(
    scenario: Scenario,
    params: Option<CqzeParams>,
    state: &PhotonState<T>,
) -> ExperimentResult<T> {
    let p_d1 = state.mode_probability(Mode::OutD1);
    let p_d2 = state.mode_probability(Mode::OutD2);
    ExperimentResult {
        scenario,
        params,
        p_d1,
        p_d2,
        p_d3: state.sink_total(Mode::SinkD3),
        p_db: state.sink_total(Mode::SinkDb),
        visibility: port_visibility(p_d1, p_d2),
    }
}

/// `(I_max − I_min)/(I_max + I_min)` with `I_max = p_d2`, `I_min = p_d1`.
pub fn port_visibility<T: Scalar>(p_d1: T, p_d2: T) -> T {
    let total = p_d1 + p_d2;
    if total > T::zero() {
        (p_d2 - p_d1) / total
    } else {
        T::zero()
    }
}

/// The bare Michelson interferometer, with the which-path rotator on or off.
pub fn baseline_probabilities<T: Scalar>(spr_on: bool) -> ExperimentResult<T> {
    let scenario = if spr_on {
        Scenario::BaselineTagged
    } else {
        Scenario::BaselineNoTag
    };
    let state = simulate::<T>(scenario, None).expect("baseline circuit is well formed");
    result_from_state(scenario, None, &state)
}

/// Runs one scenario element by element. The scenario fixes the channel
/// policy; the policy carried by `params` is ignored.
pub fn run_scenario<T: Scalar>(
    scenario: Scenario,
    params: Option<CqzeParams>,
) -> Result<ExperimentResult<T>, ExperimentError> {
    let params = match scenario.channel_policy() {
        Some(policy) => Some(
            params
                .ok_or(ExperimentError::MissingParams)?
                .with_policy(policy),
        ),
        None => None,
    };
    let state = simulate::<T>(scenario, params)?;
    Ok(result_from_state(scenario, params, &state))
}

/// Interference visibility from the blocked-channel CQZE amplitudes:
/// `2Y / (X² + Y² + 1)`.
pub fn visibility<T: Scalar>(x: T, y: T) -> T {
    (y + y) / (x * x + y * y + T::one())
}

/// Detector probabilities `(p_d1, p_d2, p_loss)` of the blocked-channel
/// experiment, given the CQZE output amplitudes.
pub fn blocked_port_probabilities<T: Scalar>(x: T, y: T) -> (T, T, T) {
    let quarter = T::lit(0.25);
    let one = T::one();
    let p_d1 = ((one - y) * (one - y) + x * x) * quarter;
    let p_d2 = ((one + y) * (one + y) + x * x) * quarter;
    let p_loss = (one - x * x - y * y) * T::lit(0.5);
    (p_d1, p_d2, p_loss)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRow<T> {
    pub outer: u32,
    pub inner: u32,
    pub x: T,
    pub y: T,
    pub p_d1: T,
    pub p_d2: T,
    pub p_loss: T,
    pub visibility: T,
}

/// Blocked-channel visibility over a rectangle of cycle counts, M-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityGrid<T> {
    pub rows: Vec<GridRow<T>>,
}

impl<T: Scalar> VisibilityGrid<T> {
    pub fn get(&self, outer: u32, inner: u32) -> Option<&GridRow<T>> {
        self.rows
            .iter()
            .find(|r| r.outer == outer && r.inner == inner)
    }
}

/// Evaluates the closed-form blocked-channel visibility for
/// `M ∈ 1..=outer_max`, `N ∈ 1..=inner_max`.
pub fn sweep_visibility<T: Scalar>(
    outer_max: u32,
    inner_max: u32,
) -> Result<VisibilityGrid<T>, ExperimentError> {
    if outer_max == 0 || inner_max == 0 {
        return Err(ExperimentError::EmptySweep);
    }
    let points: Vec<(u32, u32)> = (1..=outer_max)
        .flat_map(|m| (1..=inner_max).map(move |n| (m, n)))
        .collect();
    let rows = points
        .into_par_iter()
        .map(|(outer, inner)| {
            let (x, y) = closed_form_blocked::<T>(outer, inner);
            let (p_d1, p_d2, p_loss) = blocked_port_probabilities(x, y);
            GridRow {
                outer,
                inner,
                x,
                y,
                p_d1,
                p_d2,
                p_loss,
                visibility: visibility(x, y),
            }
        })
        .collect();
    Ok(VisibilityGrid { rows })
}
