//! Sparse single-photon state over (spatial mode, polarization, channel tag)
//! and the optical elements the eraser circuit is built from.
//!
//! Every element mutates a locally owned [`PhotonState`]. Absorbing elements
//! move probability into a loss ledger so that amplitude norm plus ledger total
//! stays equal to the input norm.
//!
//! Each (mode, polarization) amplitude is stored split into two parts: the sum
//! over histories that passed through the Alice-Bob channel (tagged) and the
//! sum over those that did not. Elements act linearly on both parts; the
//! physical amplitude is their sum.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Scalar;

pub type ComplexAmp<T> = Complex<T>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const ALL: [Polarization; 2] = [Polarization::H, Polarization::V];
}

/// Spatial mode labels of the Michelson + CQZE circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    /// Photon source, entering the central beam splitter.
    Source,
    /// Unused (vacuum) input port of the central beam splitter.
    Idle,
    /// Arm towards Alice's mirror, carrying the which-path rotator.
    ArmA,
    /// Arm towards Bob; hosts the outer CQZE loop.
    ArmB,
    /// Inner interferometer of the CQZE.
    Inner,
    /// Free-space channel between Alice and Bob.
    Channel,
    OutD1,
    OutD2,
    SinkD3,
    SinkDb,
}

impl Mode {
    pub fn is_sink(self) -> bool {
        matches!(self, Mode::SinkD3 | Mode::SinkDb)
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::Source => "SOURCE",
            Mode::Idle => "IDLE",
            Mode::ArmA => "ARM_A",
            Mode::ArmB => "ARM_B",
            Mode::Inner => "INNER",
            Mode::Channel => "CHANNEL",
            Mode::OutD1 => "OUT_D1",
            Mode::OutD2 => "OUT_D2",
            Mode::SinkD3 => "SINK_D3",
            Mode::SinkDb => "SINK_DB",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Position in the cycle schedule at which a loss happened.
///
/// `inner == 0` marks a loss at outer-cycle level (e.g. the D3 dump).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CycleIndex {
    pub outer: u32,
    pub inner: u32,
}

impl CycleIndex {
    pub fn outer(outer: u32) -> Self {
        Self { outer, inner: 0 }
    }

    pub fn inner(outer: u32, inner: u32) -> Self {
        Self { outer, inner }
    }
}

/// Key of one amplitude component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Component {
    pub mode: Mode,
    pub pol: Polarization,
    /// Part of the amplitude whose histories visited the channel.
    pub tagged: bool,
}

impl Component {
    pub fn new(mode: Mode, pol: Polarization, tagged: bool) -> Self {
        Self { mode, pol, tagged }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OpticsError {
    #[error("no such mode: {0}")]
    NoSuchMode(Mode),
    #[error("element on sink: {0}")]
    ElementOnSink(Mode),
    #[error("not a sink: {0}")]
    NotASink(Mode),
    #[error("element ports must be distinct: {0}")]
    SamePorts(Mode),
    #[error("mode collision at {mode} ({pol:?}, tagged={tagged})")]
    ModeCollision {
        mode: Mode,
        pol: Polarization,
        tagged: bool,
    },
    #[error("rotation angle must be finite")]
    NonFiniteAngle,
}

/// Polarization rotation angle in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RotationAngle<T>(T);

impl<T: Scalar> RotationAngle<T> {
    pub fn new(theta: T) -> Result<Self, OpticsError> {
        if theta.is_finite() {
            Ok(Self(theta))
        } else {
            Err(OpticsError::NonFiniteAngle)
        }
    }

    /// `π / (2·cycles)`, the per-step angle of a schedule with `cycles` steps.
    pub fn fraction_of_quarter_turn(cycles: u32) -> Self {
        Self(T::FRAC_PI_2() / T::from_count(cycles.max(1)))
    }

    pub fn quarter_turn() -> Self {
        Self(T::FRAC_PI_2())
    }

    pub fn radians(self) -> T {
        self.0
    }

    /// `(cos θ, sin θ)`, exact at multiples of a quarter turn.
    pub fn cos_sin(self) -> (T, T) {
        let theta = self.0;
        if theta == T::zero() {
            (T::one(), T::zero())
        } else if theta == T::FRAC_PI_2() {
            (T::zero(), T::one())
        } else if theta == -T::FRAC_PI_2() {
            (T::zero(), -T::one())
        } else if theta == T::PI() {
            (-T::one(), T::zero())
        } else {
            (theta.cos(), theta.sin())
        }
    }
}

/// Sparse photon state plus its loss ledger.
///
/// Modes absent from the amplitude map carry zero amplitude. Only declared
/// modes may be addressed by elements.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonState<T> {
    modes: BTreeSet<Mode>,
    amplitudes: BTreeMap<Component, ComplexAmp<T>>,
    ledger: BTreeMap<(Mode, CycleIndex), T>,
    tagged_losses: BTreeMap<Mode, T>,
}

impl<T: Scalar> PhotonState<T> {
    /// Empty (vacuum) state over the declared modes.
    pub fn new(modes: impl IntoIterator<Item = Mode>) -> Self {
        Self {
            modes: modes.into_iter().collect(),
            amplitudes: BTreeMap::new(),
            ledger: BTreeMap::new(),
            tagged_losses: BTreeMap::new(),
        }
    }

    /// Sets an untagged real amplitude, declaring the mode if needed.
    pub fn with_amplitude(mut self, mode: Mode, pol: Polarization, amp: T) -> Self {
        self.modes.insert(mode);
        self.amplitudes.insert(
            Component::new(mode, pol, false),
            Complex::new(amp, T::zero()),
        );
        self
    }

    pub fn set_amplitude(
        &mut self,
        component: Component,
        amp: ComplexAmp<T>,
    ) -> Result<(), OpticsError> {
        self.check_declared(component.mode)?;
        self.amplitudes.insert(component, amp);
        Ok(())
    }

    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        self.modes.iter().copied()
    }

    pub fn components(&self) -> impl Iterator<Item = (Component, ComplexAmp<T>)> + '_ {
        self.amplitudes.iter().map(|(k, v)| (*k, *v))
    }

    /// Amplitude of a single (mode, polarization, tag) component.
    pub fn component(&self, mode: Mode, pol: Polarization, tagged: bool) -> ComplexAmp<T> {
        self.amplitudes
            .get(&Component::new(mode, pol, tagged))
            .copied()
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    /// Physical amplitude: channel-visiting and non-visiting parts summed.
    pub fn amplitude(&self, mode: Mode, pol: Polarization) -> ComplexAmp<T> {
        self.component(mode, pol, false) + self.component(mode, pol, true)
    }

    /// Probability in `mode`, summed over polarization.
    pub fn mode_probability(&self, mode: Mode) -> T {
        Polarization::ALL.iter().fold(T::zero(), |acc, &pol| {
            acc + self.amplitude(mode, pol).norm_sqr()
        })
    }

    /// Weight of the channel-visiting part of `mode`.
    pub fn tagged_weight(&self, mode: Mode) -> T {
        self.sum_component_norms(|c| c.mode == mode && c.tagged)
    }

    /// Squared norm of the live photon state.
    pub fn norm_sq(&self) -> T {
        self.modes
            .iter()
            .fold(T::zero(), |acc, &mode| acc + self.mode_probability(mode))
    }

    /// Live weight carried by channel-visiting parts.
    pub fn tagged_mass(&self) -> T {
        self.sum_component_norms(|c| c.tagged)
    }

    pub fn ledger(&self) -> impl Iterator<Item = ((Mode, CycleIndex), T)> + '_ {
        self.ledger.iter().map(|(k, v)| (*k, *v))
    }

    pub fn ledger_entry(&self, sink: Mode, cycle: CycleIndex) -> T {
        self.ledger
            .get(&(sink, cycle))
            .copied()
            .unwrap_or_else(T::zero)
    }

    pub fn ledger_total(&self) -> T {
        self.ledger.values().fold(T::zero(), |acc, &p| acc + p)
    }

    pub fn sink_total(&self, sink: Mode) -> T {
        self.ledger
            .iter()
            .filter(|((s, _), _)| *s == sink)
            .fold(T::zero(), |acc, (_, &p)| acc + p)
    }

    /// Absorbed weight of channel-visiting parts.
    pub fn tagged_loss(&self, sink: Mode) -> T {
        self.tagged_losses
            .get(&sink)
            .copied()
            .unwrap_or_else(T::zero)
    }

    /// `norm_sq + ledger_total`; stays at the initial norm under every element.
    pub fn total_probability(&self) -> T {
        self.norm_sq() + self.ledger_total()
    }

    /// True when every amplitude has an exactly zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.amplitudes.values().all(|a| a.im == T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes
            .values()
            .all(|a| a.re.is_finite() && a.im.is_finite())
    }

    /// Rotates the polarization in `mode` by `angle`:
    /// `|H⟩ → cos θ|H⟩ + sin θ|V⟩`, `|V⟩ → −sin θ|H⟩ + cos θ|V⟩`.
    pub fn apply_rotation(
        &mut self,
        mode: Mode,
        angle: RotationAngle<T>,
    ) -> Result<(), OpticsError> {
        self.check_element_port(mode)?;
        let (c, s) = angle.cos_sin();
        for tagged in [false, true] {
            let h_key = Component::new(mode, Polarization::H, tagged);
            let v_key = Component::new(mode, Polarization::V, tagged);
            let h = self.amplitudes.get(&h_key).copied();
            let v = self.amplitudes.get(&v_key).copied();
            if h.is_none() && v.is_none() {
                continue;
            }
            let zero = Complex::new(T::zero(), T::zero());
            let (h, v) = (h.unwrap_or(zero), v.unwrap_or(zero));
            self.amplitudes.insert(h_key, h * c - v * s);
            self.amplitudes.insert(v_key, h * s + v * c);
        }
        debug_assert!(self.is_finite());
        Ok(())
    }

    /// Polarising beam splitter: H transmits to `h_out`, V reflects to `v_out`.
    pub fn apply_pbs(
        &mut self,
        in_mode: Mode,
        h_out: Mode,
        v_out: Mode,
    ) -> Result<(), OpticsError> {
        self.check_element_port(in_mode)?;
        self.check_declared(h_out)?;
        self.check_declared(v_out)?;
        if h_out == v_out {
            return Err(OpticsError::SamePorts(h_out));
        }
        let moved = self
            .components_in(in_mode)
            .map(|(c, amp)| {
                let out = match c.pol {
                    Polarization::H => h_out,
                    Polarization::V => v_out,
                };
                (Component::new(out, c.pol, c.tagged), amp)
            })
            .collect();
        self.commit(&[in_mode], moved)
    }

    /// Real symmetric 50/50 beam splitter:
    /// `bright = (a + b)/√2`, `dark = (a − b)/√2` per (polarization, tag).
    pub fn apply_bs(
        &mut self,
        mode_a: Mode,
        mode_b: Mode,
        out_bright: Mode,
        out_dark: Mode,
    ) -> Result<(), OpticsError> {
        self.check_element_port(mode_a)?;
        self.check_element_port(mode_b)?;
        self.check_declared(out_bright)?;
        self.check_declared(out_dark)?;
        if mode_a == mode_b {
            return Err(OpticsError::SamePorts(mode_a));
        }
        if out_bright == out_dark {
            return Err(OpticsError::SamePorts(out_bright));
        }
        let zero = Complex::new(T::zero(), T::zero());
        let mut outputs = Vec::new();
        for pol in Polarization::ALL {
            for tagged in [false, true] {
                let a = self
                    .amplitudes
                    .get(&Component::new(mode_a, pol, tagged))
                    .copied();
                let b = self
                    .amplitudes
                    .get(&Component::new(mode_b, pol, tagged))
                    .copied();
                if a.is_none() && b.is_none() {
                    continue;
                }
                let (a, b) = (a.unwrap_or(zero), b.unwrap_or(zero));
                outputs.push((Component::new(out_bright, pol, tagged), div_sqrt2(a + b)));
                outputs.push((Component::new(out_dark, pol, tagged), div_sqrt2(a - b)));
            }
        }
        self.commit(&[mode_a, mode_b], outputs)
    }

    /// Pure routing: mirrors, optical delays and the circulator.
    pub fn apply_route(&mut self, from: Mode, to: Mode) -> Result<(), OpticsError> {
        self.check_element_port(from)?;
        self.check_declared(to)?;
        if from == to {
            return Ok(());
        }
        if to.is_sink() {
            return Err(OpticsError::ElementOnSink(to));
        }
        let moved = self
            .components_in(from)
            .map(|(c, amp)| (Component::new(to, c.pol, c.tagged), amp))
            .collect();
        self.commit(&[from], moved)
    }

    /// Removes everything in `mode` and books its probability against
    /// `ledger[sink, cycle]`.
    pub fn absorb(&mut self, mode: Mode, sink: Mode, cycle: CycleIndex) -> Result<T, OpticsError> {
        self.check_element_port(mode)?;
        if !sink.is_sink() {
            return Err(OpticsError::NotASink(sink));
        }
        self.modes.insert(sink);
        let lost = self.mode_probability(mode);
        let lost_tagged = self.tagged_weight(mode);
        self.amplitudes.retain(|c, _| c.mode != mode);
        let entry = self.ledger.entry((sink, cycle)).or_insert_with(T::zero);
        *entry = *entry + lost;
        let tagged = self.tagged_losses.entry(sink).or_insert_with(T::zero);
        *tagged = *tagged + lost_tagged;
        Ok(lost)
    }

    /// Marks every component currently in `mode` as having used the channel.
    pub fn mark_channel_tag(&mut self, mode: Mode) {
        let untagged: Vec<_> = self
            .components_in(mode)
            .filter(|(c, _)| !c.tagged)
            .collect();
        for (c, amp) in untagged {
            self.amplitudes.remove(&c);
            let key = Component::new(c.mode, c.pol, true);
            let slot = self
                .amplitudes
                .entry(key)
                .or_insert_with(|| Complex::new(T::zero(), T::zero()));
            *slot = *slot + amp;
        }
    }

    fn components_in(&self, mode: Mode) -> impl Iterator<Item = (Component, ComplexAmp<T>)> + '_ {
        self.amplitudes
            .iter()
            .filter(move |(c, _)| c.mode == mode)
            .map(|(c, a)| (*c, *a))
    }

    fn sum_component_norms(&self, pred: impl Fn(&Component) -> bool) -> T {
        self.amplitudes
            .iter()
            .filter(|(c, _)| pred(c))
            .fold(T::zero(), |acc, (_, a)| acc + a.norm_sqr())
    }

    fn check_declared(&self, mode: Mode) -> Result<(), OpticsError> {
        if self.modes.contains(&mode) {
            Ok(())
        } else {
            Err(OpticsError::NoSuchMode(mode))
        }
    }

    fn check_element_port(&self, mode: Mode) -> Result<(), OpticsError> {
        self.check_declared(mode)?;
        if mode.is_sink() {
            return Err(OpticsError::ElementOnSink(mode));
        }
        Ok(())
    }

    /// Replaces the content of `inputs` with `outputs`, refusing to overwrite
    /// any component that was not consumed by the element.
    fn commit(
        &mut self,
        inputs: &[Mode],
        outputs: Vec<(Component, ComplexAmp<T>)>,
    ) -> Result<(), OpticsError> {
        for (c, _) in &outputs {
            if !inputs.contains(&c.mode) && self.amplitudes.contains_key(c) {
                return Err(OpticsError::ModeCollision {
                    mode: c.mode,
                    pol: c.pol,
                    tagged: c.tagged,
                });
            }
        }
        self.amplitudes.retain(|c, _| !inputs.contains(&c.mode));
        for (c, amp) in outputs {
            let slot = self
                .amplitudes
                .entry(c)
                .or_insert_with(|| Complex::new(T::zero(), T::zero()));
            *slot = *slot + amp;
        }
        debug_assert!(self.is_finite());
        Ok(())
    }
}

fn div_sqrt2<T: Scalar>(z: ComplexAmp<T>) -> ComplexAmp<T> {
    Complex::new(z.re.div_sqrt2(), z.im.div_sqrt2())
}
