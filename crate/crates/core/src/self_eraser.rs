//! Two-cavity self-eraser: the Quanton deposits its excitation in a nonlocal
//! superposition across M₁ and M₂, then the Erason either reads out M₂ alone
//! or crosses both cavities in reverse order and erases the which-way record.
//!
//! M₁ performs a θ₁ pulse with `sin θ₁ = s₁`; M₂ is twice as long and performs
//! a π-pulse. The Erason reuses the atom register, reset to the lower level,
//! since the Quanton factorizes from the fields at t_A.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::dynamics::{jc_apply, phase_shifter, CavityCrossing, PhaseShift};
use crate::error::{Error, Result};
use crate::fockspace::{
    clamp_probability, make_state, partial_trace, AtomLevel, FieldPreparation, FockCutoff, Mode, PureState,
    Subsystem,
};
use crate::fringe::{fit_fringe, linspace};

/// `δ` in `P_ge = c₁⁴ + s₁⁴ + 2c₁²s₁² cos(2φ + δ)`.
pub const ERASURE_PHASE_OFFSET: f64 = 0.0;
/// Offset between `arg(amp(l,1,0) / amp(l,0,1))` and `φ` at t_A, for `s₁ > 0`.
pub const NONLOCAL_PHASE_OFFSET: f64 = 0.0;
/// M₂ pulse area.
pub const THETA2: f64 = FRAC_PI_2;

const LEVEL_TOLERANCE: f64 = 1e-10;
const AGREEMENT_TOLERANCE: f64 = 1e-10;
const MATCHING_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErasonPath {
    BothCavities,
    M2Only,
}

impl ErasonPath {
    pub fn label(self) -> &'static str {
        match self {
            ErasonPath::BothCavities => "both",
            ErasonPath::M2Only => "m2-only",
        }
    }
}

impl std::str::FromStr for ErasonPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "both" | "both-cavities" | "both_cavities" => Ok(ErasonPath::BothCavities),
            "m2-only" | "m2_only" | "m2" => Ok(ErasonPath::M2Only),
            other => Err(Error::InvalidParameter(format!("unknown erason path `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EraserConfig {
    s1: f64,
    pub phi: PhaseShift,
    pub erason_path: ErasonPath,
    pub cutoff: FockCutoff,
}

impl EraserConfig {
    pub fn new(s1: f64, phi: f64, erason_path: ErasonPath, cutoff: FockCutoff) -> Result<Self> {
        if !s1.is_finite() || s1.abs() > 1.0 {
            return Err(Error::InvalidParameter(format!("s1 = {s1} must lie in [-1, 1]")));
        }
        if !phi.is_finite() {
            return Err(Error::InvalidParameter(format!("phi = {phi} must be finite")));
        }
        Ok(EraserConfig { s1, phi: PhaseShift::new(phi), erason_path, cutoff })
    }

    /// Non-negative root `s₁ = √(s₁²)`.
    pub fn from_s1_sq(s1_sq: f64, phi: f64, erason_path: ErasonPath, cutoff: FockCutoff) -> Result<Self> {
        if !(0.0..=1.0).contains(&s1_sq) {
            return Err(Error::InvalidParameter(format!("s1^2 = {s1_sq} must lie in [0, 1]")));
        }
        Self::new(s1_sq.sqrt(), phi, erason_path, cutoff)
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = PhaseShift::new(phi);
        self
    }

    pub fn with_path(mut self, path: ErasonPath) -> Self {
        self.erason_path = path;
        self
    }

    pub fn s1(&self) -> f64 {
        self.s1
    }

    /// Non-negative, with `s₁² + c₁² = 1`.
    pub fn c1(&self) -> f64 {
        (1.0 - self.s1 * self.s1).max(0.0).sqrt()
    }

    /// `θ₁ = asin s₁ ∈ [-π/2, π/2]`.
    pub fn theta1(&self) -> f64 {
        self.s1.asin()
    }
}

/// Protocol snapshots at t_A (after the Quanton) and t_E (after the Erason).
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolTrace {
    pub state_after_quanton: PureState,
    pub state_after_erason: PureState,
    pub quanton_level: AtomLevel,
    /// `(P(e), P(g))` of the Erason.
    pub probabilities: (f64, f64),
}

pub fn prepare_nonlocal(config: &EraserConfig) -> Result<PureState> {
    prepare_nonlocal_with(config, jc_apply)
}

pub fn prepare_nonlocal_with(config: &EraserConfig, crossing: CavityCrossing) -> Result<PureState> {
    let state = make_state(AtomLevel::Upper, FieldPreparation::Vacuum, FieldPreparation::Vacuum, config.cutoff)?;
    let state = crossing(&state, Mode::One, config.theta1())?;
    let state = phase_shifter(&state, config.phi)?;
    crossing(&state, Mode::Two, THETA2)
}

pub fn erason_passage(state: &PureState, config: &EraserConfig) -> Result<PureState> {
    erason_passage_with(state, config, jc_apply)
}

/// Injects the Erason in the lower level and runs it through M₂, the phase
/// shifter and, on the erasing path, M₁.
pub fn erason_passage_with(state: &PureState, config: &EraserConfig, crossing: CavityCrossing) -> Result<PureState> {
    if state.cutoff() != config.cutoff {
        return Err(Error::CutoffMismatch { left: state.cutoff().n_max(), right: config.cutoff.n_max() });
    }
    let upper = state.level_population(AtomLevel::Upper);
    if upper >= LEVEL_TOLERANCE {
        return Err(Error::Contract(format!("atom register not in the lower level at t_A (upper population {upper:.3e})")));
    }
    let state = state.reset_atom(AtomLevel::Lower)?;
    let state = crossing(&state, Mode::Two, THETA2)?;
    let state = phase_shifter(&state, config.phi)?;
    match config.erason_path {
        ErasonPath::M2Only => Ok(state),
        ErasonPath::BothCavities => crossing(&state, Mode::One, config.theta1()),
    }
}

pub fn run_protocol(config: &EraserConfig) -> Result<ProtocolTrace> {
    run_protocol_with(config, jc_apply)
}

pub fn run_protocol_with(config: &EraserConfig, crossing: CavityCrossing) -> Result<ProtocolTrace> {
    let at_a = prepare_nonlocal_with(config, crossing)?;
    let upper = at_a.level_population(AtomLevel::Upper);
    if upper >= LEVEL_TOLERANCE {
        return Err(Error::Contract(format!("Quanton not detected in the lower level (upper population {upper:.3e})")));
    }
    let at_e = erason_passage_with(&at_a, config, crossing)?;
    let p_e = at_e.level_population(AtomLevel::Upper);
    let p_g = at_e.level_population(AtomLevel::Lower);
    if (p_e + p_g - 1.0).abs() >= AGREEMENT_TOLERANCE {
        return Err(Error::Contract(format!("Erason probabilities sum to {}", p_e + p_g)));
    }
    Ok(ProtocolTrace {
        state_after_quanton: at_a,
        state_after_erason: at_e,
        quanton_level: AtomLevel::Lower,
        probabilities: (clamp_probability(p_e)?, clamp_probability(p_g)?),
    })
}

/// `(P_ge, P_gg)` from the closed form in the calibrated phase variable.
pub fn erason_probabilities_closed_form(s1: f64, phi: f64) -> (f64, f64) {
    let s2 = s1 * s1;
    let c2 = 1.0 - s2;
    let cross = 2.0 * c2 * s2 * (2.0 * phi + ERASURE_PHASE_OFFSET).cos();
    (c2 * c2 + s2 * s2 + cross, 2.0 * c2 * s2 - cross)
}

/// `(P_ge, P_gg)` for the erasing path; closed form and Born readout must agree
/// within 1e-10.
pub fn erason_probabilities(config: &EraserConfig) -> Result<(f64, f64)> {
    if config.erason_path != ErasonPath::BothCavities {
        return Err(Error::InvalidParameter("erasure probabilities require the both-cavities path".into()));
    }
    let (closed_e, closed_g) = erason_probabilities_closed_form(config.s1, config.phi.raw());
    let (born_e, born_g) = run_protocol(config)?.probabilities;
    let gap = (closed_e - born_e).abs().max((closed_g - born_g).abs());
    if gap >= AGREEMENT_TOLERANCE {
        return Err(Error::Contract(format!("closed-form and simulated erasure probabilities differ by {gap:.3e}")));
    }
    Ok((clamp_probability(closed_e)?, clamp_probability(closed_g)?))
}

/// `ν_ge = 2c₁²s₁² / (c₁⁴ + s₁⁴)`.
pub fn erasure_visibility(s1: f64) -> Result<f64> {
    if !s1.is_finite() || s1.abs() > 1.0 {
        return Err(Error::InvalidParameter(format!("s1 = {s1} must lie in [-1, 1]")));
    }
    let s2 = s1 * s1;
    let c2 = 1.0 - s2;
    Ok(2.0 * c2 * s2 / (c2 * c2 + s2 * s2))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchingVelocity {
    pub velocity: f64,
    pub theta1: f64,
    /// Pulse area in M₂ of length `2L₁`.
    pub theta2: f64,
}

/// Velocity for which M₁ is a `(2k+1)π/4` pulse, `v = 4ΩL₁ / ((2k+1)π)`.
pub fn matching_velocity(omega: f64, l1: f64, k: u32) -> Result<MatchingVelocity> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidParameter(format!("omega = {omega} must be positive")));
    }
    if !(l1.is_finite() && l1 > 0.0) {
        return Err(Error::InvalidParameter(format!("L1 = {l1} must be positive")));
    }
    let odd = (2 * k as u64 + 1) as f64;
    let velocity = 4.0 * omega * l1 / (odd * PI);
    let theta1 = omega * l1 / velocity;
    let theta2 = omega * 2.0 * l1 / velocity;
    let s_sq = theta1.sin().powi(2);
    if (s_sq - 0.5).abs() >= MATCHING_TOLERANCE {
        return Err(Error::Contract(format!("matched pulse has sin^2(theta1) = {s_sq}")));
    }
    Ok(MatchingVelocity { velocity, theta1, theta2 })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringeRow {
    pub phi: f64,
    pub p_ge: f64,
    pub p_gg: f64,
}

impl FringeRow {
    pub fn sum(&self) -> f64 {
        self.p_ge + self.p_gg
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FringeScan {
    pub s1: f64,
    pub rows: Vec<FringeRow>,
}

impl FringeScan {
    pub const COLUMNS: [&'static str; 4] = ["phi", "p_ge", "p_gg", "sum"];

    pub fn columns(&self) -> Vec<[f64; 4]> {
        self.rows.iter().map(|r| [r.phi, r.p_ge, r.p_gg, r.sum()]).collect()
    }
}

pub fn fringe_scan(template: &EraserConfig, phis: &[f64]) -> Result<FringeScan> {
    if phis.is_empty() {
        return Err(Error::InvalidParameter("phase grid is empty".into()));
    }
    let config = template.with_path(ErasonPath::BothCavities);
    let rows = phis
        .iter()
        .map(|&phi| {
            let (p_ge, p_gg) = erason_probabilities(&config.with_phi(phi))?;
            Ok(FringeRow { phi, p_ge, p_gg })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FringeScan { s1: template.s1, rows })
}

/// Von Neumann entropy (nats) of the atom's reduced state.
pub fn entanglement_entropy(state: &PureState) -> Result<f64> {
    Ok(partial_trace(state, Subsystem::Atom)?.von_neumann_entropy())
}

/// `arg(amp(l,1,0) · conj(amp(l,0,1)))` of a t_A state.
pub fn nonlocal_phase(state: &PureState) -> f64 {
    let a = state.amplitude(AtomLevel::Lower, 1, 0);
    let b = state.amplitude(AtomLevel::Lower, 0, 1);
    (a * b.conj()).arg()
}

/// Measures `δ` by fitting a `cos(2φ + δ)` fringe to simulated `P_ge`.
pub fn measured_erasure_offset(s1: f64, cutoff: FockCutoff) -> Result<f64> {
    if erasure_visibility(s1)? < 1e-6 {
        return Err(Error::InvalidParameter("no fringe to calibrate against when c1 s1 = 0".into()));
    }
    let template = EraserConfig::new(s1, 0.0, ErasonPath::BothCavities, cutoff)?;
    let phis = linspace(0.0, PI, 33);
    let values = phis
        .iter()
        .map(|&phi| Ok(run_protocol(&template.with_phi(phi))?.probabilities.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseShift::new(fit_fringe(&phis, &values, 2.0)?.phase).reduced())
}
