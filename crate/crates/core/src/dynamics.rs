//! Unitary building blocks: resonant cavity crossing, classical pulse and Stark
//! phase shifter.
//!
//! Phase gauge used throughout the crate: a cavity crossing emits or absorbs
//! with amplitude `-i sin(θ√n)`, and the phase shifter puts the whole relative
//! phase `φ` on the upper level as `e^{-iφ}`.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fockspace::{AtomLevel, FockCutoff, Mode, PureState};

/// Largest population allowed on `|upper, n_max⟩` of the addressed mode.
pub const OVERFLOW_TOLERANCE: f64 = 1e-12;

/// Signature shared by [`jc_apply`] and [`jc_oracle`], so protocols can run on either.
pub type CavityCrossing = fn(&PureState, Mode, f64) -> Result<PureState>;

/// Vacuum Rabi frequency and interaction time of one crossing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteractionParams {
    omega: f64,
    tau: f64,
}

impl InteractionParams {
    pub fn new(omega: f64, tau: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) || !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need omega > 0 and tau >= 0, got omega={omega}, tau={tau}"
            )));
        }
        Ok(Self { omega, tau })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Rabi phase `Ωτ`.
    pub fn theta(&self) -> f64 {
        self.omega * self.tau
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseShift(f64);

impl PhaseShift {
    pub fn new(phi: f64) -> Self {
        Self(phi)
    }

    /// Raw value, as used by the dynamics.
    pub fn raw(self) -> f64 {
        self.0
    }

    /// Value reduced into `[0, 2π)` for reporting.
    pub fn reduced(self) -> f64 {
        let r = self.0.rem_euclid(TAU);
        if r >= TAU {
            0.0
        } else {
            r
        }
    }
}

/// Number-basis diagonals of `C = cos(θ√(aa†))` and `S = sin(θ√(aa†))/√(aa†)`.
pub fn sc_diagonals(theta: f64, cutoff: FockCutoff) -> (Vec<f64>, Vec<f64>) {
    (0..cutoff.mode_dim())
        .map(|n| {
            let r = ((n + 1) as f64).sqrt();
            ((theta * r).cos(), (theta * r).sin() / r)
        })
        .unzip()
}

fn mode_index(cutoff: FockCutoff, mode: Mode, level: AtomLevel, n: usize, spectator: usize) -> usize {
    match mode {
        Mode::One => cutoff.index(level, n, spectator),
        Mode::Two => cutoff.index(level, spectator, n),
    }
}

fn top_rung_population(state: &PureState, mode: Mode) -> f64 {
    let c = state.cutoff();
    (0..c.mode_dim())
        .map(|m| state.amplitudes()[mode_index(c, mode, AtomLevel::Upper, c.n_max(), m)].norm_sqr())
        .sum()
}

/// Resonant Jaynes–Cummings crossing of `mode` with Rabi phase `theta`, in closed
/// form on each two-dimensional manifold `{|upper, n⟩, |lower, n+1⟩}`.
pub fn jc_apply(state: &PureState, mode: Mode, theta: f64) -> Result<PureState> {
    let cutoff = state.cutoff();
    let top = top_rung_population(state, mode);
    if top > OVERFLOW_TOLERANCE {
        return Err(Error::CutoffOverflow { mode: mode.number(), population: top });
    }
    let amps = state.amplitudes();
    let mut out = amps.to_vec();
    let minus_i = C64::new(0.0, -1.0);
    for m in 0..cutoff.mode_dim() {
        for n in 0..cutoff.n_max() {
            let iu = mode_index(cutoff, mode, AtomLevel::Upper, n, m);
            let il = mode_index(cutoff, mode, AtomLevel::Lower, n + 1, m);
            let angle = theta * ((n + 1) as f64).sqrt();
            let (s, c) = angle.sin_cos();
            out[iu] = amps[iu] * c + minus_i * s * amps[il];
            out[il] = amps[il] * c + minus_i * s * amps[iu];
        }
    }
    PureState::from_unitary_image(out, cutoff)
}

/// Same map as [`jc_apply`], computed as `exp(-iθG)` with `G = aσ₊ + a†σ₋`
/// assembled on atom ⊗ mode and diagonalized numerically. The mode gets one
/// guard rung above `n_max`; population that reaches it is an overflow.
pub fn jc_oracle(state: &PureState, mode: Mode, theta: f64) -> Result<PureState> {
    let cutoff = state.cutoff();
    let d = cutoff.mode_dim() + 1;
    let local = |level: AtomLevel, n: usize| level.index() * d + n;

    let mut g = DMatrix::<f64>::zeros(2 * d, 2 * d);
    for n in 0..d - 1 {
        let r = ((n + 1) as f64).sqrt();
        let (u, l) = (local(AtomLevel::Upper, n), local(AtomLevel::Lower, n + 1));
        g[(u, l)] = r;
        g[(l, u)] = r;
    }
    let eig = g.symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases: Vec<C64> = eig.eigenvalues.iter().map(|&lam| C64::from_polar(1.0, -theta * lam)).collect();
    let u = DMatrix::<C64>::from_fn(2 * d, 2 * d, |j, k| {
        (0..2 * d).map(|m| phases[m] * (v[(j, m)] * v[(k, m)])).sum()
    });

    let amps = state.amplitudes();
    let mut out = vec![C64::from(0.0); amps.len()];
    let mut guard = 0.0;
    for spectator in 0..cutoff.mode_dim() {
        let mut slice = vec![C64::from(0.0); 2 * d];
        for level in AtomLevel::ALL {
            for n in 0..cutoff.mode_dim() {
                slice[local(level, n)] = amps[mode_index(cutoff, mode, level, n, spectator)];
            }
        }
        for level in AtomLevel::ALL {
            for n in 0..d {
                let row = local(level, n);
                let value: C64 = (0..2 * d).map(|k| u[(row, k)] * slice[k]).sum();
                if n == d - 1 {
                    guard += value.norm_sqr();
                } else {
                    out[mode_index(cutoff, mode, level, n, spectator)] = value;
                }
            }
        }
    }
    if guard > OVERFLOW_TOLERANCE {
        return Err(Error::CutoffOverflow { mode: mode.number(), population: guard });
    }
    PureState::normalized(out, cutoff)
}

/// Classical pulse on the atom only:
/// `|upper⟩ → cos θ |upper⟩ - i e^{-iβ} sin θ |lower⟩`,
/// `|lower⟩ → -i e^{iβ} sin θ |upper⟩ + cos θ |lower⟩`.
pub fn classical_pulse(state: &PureState, mixing_theta: f64, pulse_phase: f64) -> Result<PureState> {
    let cutoff = state.cutoff();
    let (s, c) = mixing_theta.sin_cos();
    let minus_i = C64::new(0.0, -1.0);
    let to_upper = minus_i * C64::from_polar(s, pulse_phase);
    let to_lower = minus_i * C64::from_polar(s, -pulse_phase);
    let amps = state.amplitudes();
    let mut out = amps.to_vec();
    for n1 in 0..cutoff.mode_dim() {
        for n2 in 0..cutoff.mode_dim() {
            let iu = cutoff.index(AtomLevel::Upper, n1, n2);
            let il = cutoff.index(AtomLevel::Lower, n1, n2);
            out[iu] = amps[iu] * c + to_upper * amps[il];
            out[il] = to_lower * amps[iu] + amps[il] * c;
        }
    }
    PureState::from_unitary_image(out, cutoff)
}

/// Multiplies every upper-level amplitude by `e^{-iφ}`.
pub fn phase_shifter(state: &PureState, phi: PhaseShift) -> Result<PureState> {
    let cutoff = state.cutoff();
    let factor = C64::from_polar(1.0, -phi.raw());
    let out = state
        .entries()
        .map(|(l, _, _, a)| if l == AtomLevel::Upper { a * factor } else { a })
        .collect();
    PureState::from_unitary_image(out, cutoff)
}
