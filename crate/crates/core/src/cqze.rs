//! Chained quantum Zeno effect (CQZE): `M` outer cycles, each nesting `N`
//! inner cycles, run element by element on a [`PhotonState`].
//!
//! Outer cycle `m`:
//! 1. rotate `ARM_B` by `π/2M`;
//! 2. a PBS sends the V part into the inner interferometer;
//! 3. `N` inner cycles: rotate `INNER` by `π/2N`, a PBS sends the H part into
//!    the channel, where it is either absorbed at `D_B` (blocked) or reflected
//!    back and recombined (open);
//! 4. blocked: the surviving V part rejoins `ARM_B`. Open: the inner content
//!    is dumped at `D3`.
//!
//! [`closed_form_blocked`] and [`closed_form_open`] evaluate the same
//! quantities without a state vector and serve as independent oracles.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::optics::{CycleIndex, Mode, OpticsError, PhotonState, Polarization, RotationAngle};
use crate::scalar::Scalar;

/// Bob's choice for the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChannelPolicy {
    Blocked,
    Open,
}

impl fmt::Display for ChannelPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelPolicy::Blocked => "blocked",
            ChannelPolicy::Open => "open",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CqzeError {
    #[error("outer and inner cycle counts must be at least 1 (got M={outer}, N={inner})")]
    InvalidCycles { outer: u32, inner: u32 },
    #[error("cycle index {index} outside 1..={count}")]
    CycleOutOfRange { index: u32, count: u32 },
    #[error("input amplitude must satisfy |a| <= 1")]
    InputAmplitude,
    #[error(transparent)]
    Optics(#[from] OpticsError),
}

/// Cycle counts and channel policy of one CQZE run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CqzeParams {
    outer: u32,
    inner: u32,
    policy: ChannelPolicy,
}

impl CqzeParams {
    pub fn new(outer: u32, inner: u32, policy: ChannelPolicy) -> Result<Self, CqzeError> {
        if outer == 0 || inner == 0 {
            return Err(CqzeError::InvalidCycles { outer, inner });
        }
        Ok(Self {
            outer,
            inner,
            policy,
        })
    }

    pub fn blocked(outer: u32, inner: u32) -> Result<Self, CqzeError> {
        Self::new(outer, inner, ChannelPolicy::Blocked)
    }

    pub fn open(outer: u32, inner: u32) -> Result<Self, CqzeError> {
        Self::new(outer, inner, ChannelPolicy::Open)
    }

    /// Number of outer cycles `M`.
    pub fn outer(&self) -> u32 {
        self.outer
    }

    /// Number of inner cycles `N`.
    pub fn inner(&self) -> u32 {
        self.inner
    }

    pub fn policy(&self) -> ChannelPolicy {
        self.policy
    }

    pub fn with_policy(self, policy: ChannelPolicy) -> Self {
        Self { policy, ..self }
    }
}

/// H/V amplitudes leaving the CQZE plus the loss ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct CqzeOutcome<T> {
    /// Unnormalised H amplitude (`X[M]` blocked, `W[M]` open).
    pub out_h: T,
    /// Unnormalised V amplitude (`Y[M]` blocked, zero open).
    pub out_v: T,
    pub ledger: BTreeMap<(Mode, CycleIndex), T>,
    /// Weight of channel-visiting histories in the exiting amplitude.
    pub tagged_exit: T,
}

impl<T: Scalar> CqzeOutcome<T> {
    pub fn ledger_total(&self) -> T {
        self.ledger.values().fold(T::zero(), |acc, &p| acc + p)
    }

    pub fn sink_total(&self, sink: Mode) -> T {
        self.ledger
            .iter()
            .filter(|((s, _), _)| *s == sink)
            .fold(T::zero(), |acc, (_, &p)| acc + p)
    }
}

/// Modes the CQZE touches.
pub const CQZE_MODES: [Mode; 5] = [
    Mode::ArmB,
    Mode::Inner,
    Mode::Channel,
    Mode::SinkD3,
    Mode::SinkDb,
];

/// Element-level CQZE machine for fixed parameters.
#[derive(Debug, Clone, Copy)]
pub struct CqzeEngine<T> {
    params: CqzeParams,
    outer_angle: RotationAngle<T>,
    inner_angle: RotationAngle<T>,
}

impl<T: Scalar> CqzeEngine<T> {
    pub fn new(params: CqzeParams) -> Self {
        Self {
            params,
            outer_angle: RotationAngle::fraction_of_quarter_turn(params.outer),
            inner_angle: RotationAngle::fraction_of_quarter_turn(params.inner),
        }
    }

    /// Adds `skew` radians to both rotator settings. Only useful to check that
    /// verification notices a miscalibrated machine.
    pub fn with_angle_skew(self, skew: T) -> Result<Self, CqzeError> {
        Ok(Self {
            outer_angle: RotationAngle::new(self.outer_angle.radians() + skew)?,
            inner_angle: RotationAngle::new(self.inner_angle.radians() + skew)?,
            ..self
        })
    }

    pub fn params(&self) -> CqzeParams {
        self.params
    }

    /// One pass of the inner interferometer (inner cycle `n` of outer cycle `m`).
    pub fn inner_cycle(&self, state: &mut PhotonState<T>, m: u32, n: u32) -> Result<(), CqzeError> {
        check_index(m, self.params.outer)?;
        check_index(n, self.params.inner)?;
        state.apply_rotation(Mode::Inner, self.inner_angle)?;
        state.apply_pbs(Mode::Inner, Mode::Channel, Mode::Inner)?;
        state.mark_channel_tag(Mode::Channel);
        match self.params.policy {
            ChannelPolicy::Blocked => {
                state.absorb(Mode::Channel, Mode::SinkDb, CycleIndex::inner(m, n))?;
            }
            ChannelPolicy::Open => {
                // Bob's mirror, then recombination at the inner PBS.
                state.apply_route(Mode::Channel, Mode::Inner)?;
            }
        }
        Ok(())
    }

    /// Outer cycle `m`, including its `N` inner cycles.
    pub fn outer_cycle(&self, state: &mut PhotonState<T>, m: u32) -> Result<(), CqzeError> {
        check_index(m, self.params.outer)?;
        state.apply_rotation(Mode::ArmB, self.outer_angle)?;
        state.apply_pbs(Mode::ArmB, Mode::ArmB, Mode::Inner)?;
        for n in 1..=self.params.inner {
            self.inner_cycle(state, m, n)?;
        }
        match self.params.policy {
            ChannelPolicy::Blocked => state.apply_route(Mode::Inner, Mode::ArmB)?,
            ChannelPolicy::Open => {
                state.absorb(Mode::Inner, Mode::SinkD3, CycleIndex::outer(m))?;
            }
        }
        Ok(())
    }

    /// Runs all `M` outer cycles on whatever `state` holds in `ARM_B`.
    pub fn run_state(&self, state: &mut PhotonState<T>) -> Result<(), CqzeError> {
        for m in 1..=self.params.outer {
            self.outer_cycle(state, m)?;
        }
        Ok(())
    }

    /// Runs the machine on an H photon of amplitude `in_amp`.
    pub fn run(&self, in_amp: T) -> Result<CqzeOutcome<T>, CqzeError> {
        if !(in_amp.abs() <= T::one()) {
            return Err(CqzeError::InputAmplitude);
        }
        let mut state =
            PhotonState::new(CQZE_MODES).with_amplitude(Mode::ArmB, Polarization::H, in_amp);
        self.run_state(&mut state)?;
        Ok(CqzeOutcome {
            out_h: state.amplitude(Mode::ArmB, Polarization::H).re,
            out_v: state.amplitude(Mode::ArmB, Polarization::V).re,
            ledger: state.ledger().collect(),
            tagged_exit: state.tagged_weight(Mode::ArmB),
        })
    }
}

fn check_index(index: u32, count: u32) -> Result<(), CqzeError> {
    if (1..=count).contains(&index) {
        Ok(())
    } else {
        Err(CqzeError::CycleOutOfRange { index, count })
    }
}

/// Runs the CQZE on an H input of amplitude `in_amp`.
pub fn run_cqze<T: Scalar>(params: CqzeParams, in_amp: T) -> Result<CqzeOutcome<T>, CqzeError> {
    CqzeEngine::new(params).run(in_amp)
}

/// Blocked-channel amplitudes `(X[M], Y[M])` from the outer-cycle recursion
/// with `X[0] = 1`, `Y[0] = 0`:
///
/// `X[m] = cos(π/2M)·X[m−1] − sin(π/2M)·Y[m−1]`
/// `Y[m] = (sin(π/2M)·X[m−1] + cos(π/2M)·Y[m−1])·cos^N(π/2N)`
pub fn closed_form_blocked<T: Scalar>(outer: u32, inner: u32) -> (T, T) {
    let outer_theta = T::FRAC_PI_2() / T::from_count(outer.max(1));
    let (c, s) = (outer_theta.cos(), outer_theta.sin());
    let survival = (T::FRAC_PI_2() / T::from_count(inner.max(1)))
        .cos()
        .powi(inner.max(1) as i32);
    (0..outer.max(1)).fold((T::one(), T::zero()), |(x, y), _| {
        (c * x - s * y, (s * x + c * y) * survival)
    })
}

/// Open-channel survival amplitude `W[M] = cos^M(π/2M)`.
pub fn closed_form_open<T: Scalar>(outer: u32) -> T {
    let outer = outer.max(1);
    (T::FRAC_PI_2() / T::from_count(outer))
        .cos()
        .powi(outer as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};
    use Polarization::{H, V};

    fn inner_only(params: CqzeParams, v_amp: f64) -> (CqzeEngine<f64>, PhotonState<f64>) {
        let state = PhotonState::new(CQZE_MODES).with_amplitude(Mode::Inner, V, v_amp);
        (CqzeEngine::new(params), state)
    }

    #[test]
    fn params_reject_zero_cycles() {
        assert_eq!(
            CqzeParams::blocked(0, 4),
            Err(CqzeError::InvalidCycles { outer: 0, inner: 4 })
        );
        assert!(CqzeParams::open(2, 0).is_err());
    }

    #[test]
    fn blocked_inner_cycle_at_two_steps() {
        let (engine, mut s) = inner_only(CqzeParams::blocked(1, 2).unwrap(), 1.0);
        engine.inner_cycle(&mut s, 1, 1).unwrap();
        assert_abs_diff_eq!(
            s.amplitude(Mode::Inner, V).re,
            FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
        assert_eq!(s.amplitude(Mode::Inner, H).re, 0.0);
        assert_abs_diff_eq!(
            s.ledger_entry(Mode::SinkDb, CycleIndex::inner(1, 1)),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn blocked_inner_cycle_approaches_identity_for_many_steps() {
        let (engine, mut s) = inner_only(CqzeParams::blocked(1, 10_000).unwrap(), 1.0);
        engine.inner_cycle(&mut s, 1, 1).unwrap();
        let v = s.amplitude(Mode::Inner, V).re;
        assert_abs_diff_eq!(v, (FRAC_PI_2 / 10_000.0).cos(), epsilon = 1e-15);
        assert!(v > 0.9999999);
    }

    #[test]
    fn blocked_inner_cycle_scales_loss_with_entering_probability() {
        let n = 7;
        let (engine, mut s) = inner_only(CqzeParams::blocked(1, n).unwrap(), 0.6);
        engine.inner_cycle(&mut s, 1, 3).unwrap();
        let theta = FRAC_PI_2 / n as f64;
        assert_abs_diff_eq!(
            s.ledger_entry(Mode::SinkDb, CycleIndex::inner(1, 3)),
            theta.sin().powi(2) * 0.36,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            s.amplitude(Mode::Inner, V).re,
            0.6 * theta.cos(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn open_inner_cycles_compose_to_quarter_turn() {
        for n in [1, 2, 4, 9, 50] {
            let (engine, mut s) = inner_only(CqzeParams::open(1, n).unwrap(), 1.0);
            for k in 1..=n {
                engine.inner_cycle(&mut s, 1, k).unwrap();
            }
            assert_abs_diff_eq!(s.amplitude(Mode::Inner, H).re, -1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.amplitude(Mode::Inner, V).re, 0.0, epsilon = 1e-12);
            assert_eq!(s.ledger_total(), 0.0);
        }
    }

    #[test]
    fn inner_cycle_rejects_out_of_range_indices() {
        let (engine, mut s) = inner_only(CqzeParams::blocked(2, 3).unwrap(), 1.0);
        assert_eq!(
            engine.inner_cycle(&mut s, 1, 4),
            Err(CqzeError::CycleOutOfRange { index: 4, count: 3 })
        );
        assert!(engine.outer_cycle(&mut s, 0).is_err());
    }

    #[test]
    fn blocked_outer_cycle_follows_recursion_once() {
        let n = 4;
        let engine = CqzeEngine::<f64>::new(CqzeParams::blocked(2, n).unwrap());
        let mut s = PhotonState::new(CQZE_MODES).with_amplitude(Mode::ArmB, H, 1.0);
        engine.outer_cycle(&mut s, 1).unwrap();
        let survival = (FRAC_PI_2 / n as f64).cos().powi(n as i32);
        assert_abs_diff_eq!(
            s.amplitude(Mode::ArmB, H).re,
            FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            s.amplitude(Mode::ArmB, V).re,
            FRAC_1_SQRT_2 * survival,
            epsilon = 1e-15
        );
    }

    #[test]
    fn open_outer_cycle_at_two_steps() {
        let engine = CqzeEngine::<f64>::new(CqzeParams::open(2, 5).unwrap());
        let mut s = PhotonState::new(CQZE_MODES).with_amplitude(Mode::ArmB, H, 1.0);
        engine.outer_cycle(&mut s, 1).unwrap();
        assert_abs_diff_eq!(
            s.amplitude(Mode::ArmB, H).re,
            FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
        assert_eq!(s.amplitude(Mode::ArmB, V).re, 0.0);
        assert_abs_diff_eq!(
            s.ledger_entry(Mode::SinkD3, CycleIndex::outer(1)),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn single_outer_cycle_blocked() {
        for n in [1, 3, 8] {
            let out = run_cqze(CqzeParams::blocked(1, n).unwrap(), 1.0f64).unwrap();
            assert_abs_diff_eq!(out.out_h, 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(
                out.out_v,
                (FRAC_PI_2 / n as f64).cos().powi(n as i32),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn run_blocked_two_by_four() {
        // 30-digit evaluation of the recursion.
        let out = run_cqze(CqzeParams::blocked(2, 4).unwrap(), 1.0f64).unwrap();
        assert_abs_diff_eq!(out.out_h, 0.135723304703363119, epsilon = 1e-12);
        assert_abs_diff_eq!(out.out_v, 0.629671716769114542, epsilon = 1e-12);
        assert_abs_diff_eq!(out.ledger_total(), 0.585092713661434047, epsilon = 1e-12);
        assert_eq!(out.tagged_exit, 0.0);
    }

    #[test]
    fn run_open_two_cycles() {
        let out = run_cqze(CqzeParams::open(2, 7).unwrap(), 1.0f64).unwrap();
        assert_abs_diff_eq!(out.out_h, 0.5, epsilon = 1e-15);
        assert_eq!(out.out_v, 0.0);
        assert_abs_diff_eq!(out.sink_total(Mode::SinkD3), 0.75, epsilon = 1e-15);
        assert_eq!(out.sink_total(Mode::SinkDb), 0.0);
    }

    #[test]
    fn run_one_by_one_loses_everything() {
        let out = run_cqze(CqzeParams::blocked(1, 1).unwrap(), 1.0f64).unwrap();
        assert_eq!((out.out_h, out.out_v), (0.0, 0.0));
        assert_abs_diff_eq!(out.ledger_total(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn run_scales_with_input_amplitude() {
        let params = CqzeParams::blocked(3, 6).unwrap();
        let unit = run_cqze(params, 1.0f64).unwrap();
        let half = run_cqze(params, FRAC_1_SQRT_2).unwrap();
        assert_abs_diff_eq!(half.out_h, unit.out_h * FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(half.out_v, unit.out_v * FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_eq!(run_cqze(params, 1.5f64), Err(CqzeError::InputAmplitude));
    }

    #[test]
    fn closed_forms_at_small_parameters() {
        let (x, y) = closed_form_blocked::<f64>(1, 5);
        assert_abs_diff_eq!(x, 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(y, (FRAC_PI_2 / 5.0).cos().powi(5), epsilon = 1e-16);

        let (x, y) = closed_form_blocked::<f64>(2, 1000);
        assert!(x.abs() < 0.01);
        assert_abs_diff_eq!(x, 0.000616470180591005101, epsilon = 1e-13);
        assert_abs_diff_eq!(y, 0.998151349529194101, epsilon = 1e-13);

        assert_abs_diff_eq!(closed_form_open::<f64>(1), 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(closed_form_open::<f64>(2), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            closed_form_open::<f64>(10),
            0.883485183679466223,
            epsilon = 1e-14
        );
    }

    #[test]
    fn skewed_engine_diverges_from_closed_form() {
        let params = CqzeParams::blocked(2, 14).unwrap();
        let out = CqzeEngine::new(params)
            .with_angle_skew(1e-6)
            .unwrap()
            .run(1.0f64)
            .unwrap();
        let (x, _) = closed_form_blocked::<f64>(2, 14);
        assert!((out.out_h - x).abs() > 1e-9);
    }

    #[test]
    fn f32_engine_tracks_closed_form() {
        let params = CqzeParams::blocked(3, 20).unwrap();
        let out = run_cqze(params, 1.0f32).unwrap();
        let (x, y) = closed_form_blocked::<f32>(3, 20);
        assert!((out.out_h - x).abs() < 1e-5);
        assert!((out.out_v - y).abs() < 1e-5);
    }
}
