//! Temporal Bell inequality for the self-eraser.
//!
//! The dichotomic variable `χ(t)` is `+1` when the atom register is in the
//! upper level and `-1` in the lower one. The register holds the Quanton until
//! it leaves M₂ and the Erason afterwards, so the timeline stitches the two
//! passages into one trajectory.

use crate::dynamics::{jc_apply, phase_shifter};
use crate::error::{Error, Result};
use crate::fockspace::{make_state, AtomLevel, FieldPreparation, Mode, PureState};
use crate::self_eraser::{EraserConfig, THETA2};

/// `Δ` below `-1 - VIOLATION_TOLERANCE` counts as a violation.
pub const VIOLATION_TOLERANCE: f64 = 1e-12;
/// Grid values within this of the minimum tie; the smallest θ₁ wins.
pub const ARGMIN_TIE_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_GRID_POINTS: usize = 1024;

const RANGE_TOLERANCE: f64 = 1e-12;
/// Branches below this weight are dropped from sequential measurements.
const BRANCH_FLOOR: f64 = 1e-15;

/// Quanton enters M₁ at `t1`, leaves it at `t2`; the Erason leaves M₁ at `t3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Timeline {
    t1: f64,
    t2: f64,
    t3: f64,
}

impl Timeline {
    pub fn new(t1: f64, t2: f64, t3: f64) -> Result<Self> {
        if !(t1.is_finite() && t3.is_finite() && t1 < t2 && t2 < t3) {
            return Err(Error::InvalidParameter(format!("event times must satisfy t1 < t2 < t3, got {t1}, {t2}, {t3}")));
        }
        Ok(Timeline { t1, t2, t3 })
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    pub fn t3(&self) -> f64 {
        self.t3
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelatorTriple {
    pub k12: f64,
    pub k23: f64,
    pub k13: f64,
}

impl CorrelatorTriple {
    pub fn new(k12: f64, k23: f64, k13: f64) -> Result<Self> {
        for k in [k12, k23, k13] {
            if k.is_nan() || k.abs() > 1.0 + RANGE_TOLERANCE {
                return Err(Error::Contract(format!("correlator {k} outside [-1, 1]")));
            }
        }
        Ok(CorrelatorTriple { k12, k23, k13 })
    }

    /// `(Δ₊, Δ₋) = K₁₃ ± K₁₂ ± K₂₃`.
    pub fn deltas(&self) -> (f64, f64) {
        (self.k13 + self.k12 + self.k23, self.k13 - self.k12 - self.k23)
    }
}

/// `K₁₂ = c₁² - s₁²`, `K₂₃ = c₁⁴ - s₁⁴`, `K₁₃ = 1 - 8c₁²s₁²`.
pub fn correlators_closed_form(s1: f64) -> Result<CorrelatorTriple> {
    if !s1.is_finite() || s1.abs() > 1.0 {
        return Err(Error::InvalidParameter(format!("s1 = {s1} must lie in [-1, 1]")));
    }
    let s2 = s1 * s1;
    let c2 = 1.0 - s2;
    CorrelatorTriple::new(c2 - s2, c2 * c2 - s2 * s2, 1.0 - 8.0 * c2 * s2)
}

/// `(Δ₊, Δ₋)` at Rabi phase θ₁, with `s₁ = sin θ₁`.
pub fn delta(theta1: f64) -> (f64, f64) {
    let s2 = theta1.sin().powi(2);
    let c2 = theta1.cos().powi(2);
    let k12 = c2 - s2;
    let k23 = c2 * c2 - s2 * s2;
    let k13 = 1.0 - 8.0 * c2 * s2;
    (k13 + k12 + k23, k13 - k12 - k23)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BellRow {
    pub theta1: f64,
    pub delta_plus: f64,
    pub delta_minus: f64,
    pub violates_plus: bool,
    pub violates_minus: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BellScan {
    pub rows: Vec<BellRow>,
    /// Minimum of `min(Δ₊, Δ₋)` over the grid.
    pub minimum: f64,
    pub argmin: f64,
}

impl BellScan {
    pub const COLUMNS: [&'static str; 5] = ["theta1", "delta_plus", "delta_minus", "violates_plus", "violates_minus"];

    pub fn columns(&self) -> Vec<[f64; 5]> {
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        self.rows
            .iter()
            .map(|r| [r.theta1, r.delta_plus, r.delta_minus, flag(r.violates_plus), flag(r.violates_minus)])
            .collect()
    }
}

fn violates(d: f64) -> bool {
    d < -1.0 - VIOLATION_TOLERANCE
}

pub fn violation_scan(grid: &[f64]) -> Result<BellScan> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("Rabi phase grid is empty".into()));
    }
    let rows: Vec<BellRow> = grid
        .iter()
        .map(|&theta1| {
            let (delta_plus, delta_minus) = delta(theta1);
            BellRow {
                theta1,
                delta_plus,
                delta_minus,
                violates_plus: violates(delta_plus),
                violates_minus: violates(delta_minus),
            }
        })
        .collect();
    let lowest = |r: &BellRow| r.delta_plus.min(r.delta_minus);
    let minimum = rows.iter().map(lowest).fold(f64::INFINITY, f64::min);
    let argmin = rows
        .iter()
        .filter(|r| lowest(r) <= minimum + ARGMIN_TIE_TOLERANCE)
        .map(|r| r.theta1)
        .fold(f64::INFINITY, f64::min);
    Ok(BellScan { rows, minimum, argmin })
}

/// Observation points along the stitched protocol, in time order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ProtocolEvent {
    /// `t1`.
    QuantonEntersM1,
    /// `t2`.
    QuantonExitsM1,
    QuantonExitsPhaseShifter,
    ErasonExitsM2,
    ErasonEntersM1,
    /// `t3`.
    ErasonExitsM1,
}

impl ProtocolEvent {
    pub const ALL: [ProtocolEvent; 6] = [
        ProtocolEvent::QuantonEntersM1,
        ProtocolEvent::QuantonExitsM1,
        ProtocolEvent::QuantonExitsPhaseShifter,
        ProtocolEvent::ErasonExitsM2,
        ProtocolEvent::ErasonEntersM1,
        ProtocolEvent::ErasonExitsM1,
    ];

    fn ordinal(self) -> usize {
        self as usize
    }

    fn is_erason(self) -> bool {
        self >= ProtocolEvent::ErasonExitsM2
    }
}

/// Level-to-sign map for `χ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SignConvention {
    /// Upper → +1 for both atoms.
    #[default]
    Standard,
    /// Erason signs reversed.
    ErasonFlipped,
}

impl SignConvention {
    fn chi(self, event: ProtocolEvent, level: AtomLevel) -> f64 {
        let chi = level.sigma_z();
        if self == SignConvention::ErasonFlipped && event.is_erason() {
            -chi
        } else {
            chi
        }
    }
}

/// Unitary segment leading from event `k - 1` to event `k`.
fn advance(state: &PureState, to: ProtocolEvent, config: &EraserConfig) -> Result<PureState> {
    match to {
        ProtocolEvent::QuantonEntersM1 => Ok(state.clone()),
        ProtocolEvent::QuantonExitsM1 => jc_apply(state, Mode::One, config.theta1()),
        ProtocolEvent::QuantonExitsPhaseShifter => phase_shifter(state, config.phi),
        ProtocolEvent::ErasonExitsM2 => {
            let state = jc_apply(state, Mode::Two, THETA2)?.reset_atom(AtomLevel::Lower)?;
            jc_apply(&state, Mode::Two, THETA2)
        }
        ProtocolEvent::ErasonEntersM1 => phase_shifter(state, config.phi),
        ProtocolEvent::ErasonExitsM1 => jc_apply(state, Mode::One, config.theta1()),
    }
}

fn evolve(state: &PureState, from: ProtocolEvent, to: ProtocolEvent, config: &EraserConfig) -> Result<PureState> {
    let mut state = state.clone();
    for event in &ProtocolEvent::ALL[from.ordinal() + 1..=to.ordinal()] {
        state = advance(&state, *event, config)?;
    }
    Ok(state)
}

/// `K(i, j) = Σ χ_i χ_j P(χ_i, χ_j)` from projective measurements at events
/// `i < j` on the simulated protocol, starting from `|upper, 0, 0⟩`.
///
/// The erasing passage through both cavities is always simulated.
pub fn measured_correlator(
    i: ProtocolEvent,
    j: ProtocolEvent,
    config: &EraserConfig,
    convention: SignConvention,
) -> Result<f64> {
    if i >= j {
        return Err(Error::InvalidParameter(format!("correlator events must be time ordered, got {i:?} then {j:?}")));
    }
    let start = make_state(AtomLevel::Upper, FieldPreparation::Vacuum, FieldPreparation::Vacuum, config.cutoff)?;
    let at_i = evolve(&start, ProtocolEvent::QuantonEntersM1, i, config)?;
    let mut k = 0.0;
    for first in AtomLevel::ALL {
        let (p_i, branch) = at_i.project_level(first);
        let Some(branch) = branch.filter(|_| p_i >= BRANCH_FLOOR) else { continue };
        let at_j = evolve(&branch, i, j, config)?;
        for second in AtomLevel::ALL {
            let p_j = at_j.level_population(second);
            k += convention.chi(i, first) * convention.chi(j, second) * p_i * p_j;
        }
    }
    Ok(k)
}

/// `(K₁₂, K₂₃, K₁₃)` over `(t1, t2, t3)` by sequential measurement.
pub fn measured_correlators(config: &EraserConfig, convention: SignConvention) -> Result<CorrelatorTriple> {
    use ProtocolEvent::*;
    CorrelatorTriple::new(
        measured_correlator(QuantonEntersM1, QuantonExitsM1, config, convention)?,
        measured_correlator(QuantonExitsM1, ErasonExitsM1, config, convention)?,
        measured_correlator(QuantonEntersM1, ErasonExitsM1, config, convention)?,
    )
}
