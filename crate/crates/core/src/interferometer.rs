//! Single-cavity quantum optical Ramsey interferometer.
//!
//! The atom enters in the upper level, crosses a cavity prepared in `ρ_D^o`
//! (quantized beam splitter and which-way detector), picks up the Stark phase
//! `φ` and is recombined by a classical pulse. Detection probabilities follow
//! from the number-basis averages of `C`, `S` and the contrast factor
//! `𝒞 = 2⟨S a C⟩₀`.
//!
//! In this crate's gauge the beam merger sends the upper way to
//! `(|upper⟩ - i|lower⟩)/√2`, so the closed form reads
//!
//! ```text
//! P_aa = cos²m ⟨C²⟩₀ + sin²m ⟨S² a a†⟩₀ - ½ sin 2m · Re{𝒞 e^{-iφ}}
//! ```
//!
//! with `m` the merger mixing angle. At `m = π/4` this is the usual fringe
//! `½(1 + Re{𝒞 e^{-i(φ + π)}})`: a constant offset [`FRINGE_GAUGE_OFFSET`] of `π`
//! against conventions that write the fringe term with a plus sign.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64 as C64;

use crate::dynamics::{classical_pulse, jc_apply, phase_shifter, sc_diagonals, PhaseShift};
use crate::error::{Error, Result};
use crate::fockspace::{
    clamp_probability, make_state, partial_trace, AtomLevel, DensityOperator, FieldPreparation, FockCutoff,
    Mode, PureState, Subsystem,
};

pub const DEFAULT_BM_MIXING: f64 = FRAC_PI_4;
/// Phase offset between the simulated fringe and the plus-sign convention.
pub const FRINGE_GAUGE_OFFSET: f64 = PI;
/// Agreement required between closed-form and Born-rule probabilities.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QoriConfig {
    pub field: FieldPreparation,
    /// Rabi phase `Ωτ` of the cavity crossing.
    pub theta: f64,
    pub phi: PhaseShift,
    /// Mixing angle of the classical beam merger (`π/4` is the `-π/2` pulse).
    pub bm_mixing: f64,
    /// Cutoff the field preparation is admitted at.
    pub cutoff: FockCutoff,
}

impl QoriConfig {
    pub fn new(field: FieldPreparation, theta: f64, phi: f64, cutoff: FockCutoff) -> Self {
        Self {
            field,
            theta,
            phi: PhaseShift::new(phi),
            bm_mixing: DEFAULT_BM_MIXING,
            cutoff,
        }
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = PhaseShift::new(phi);
        self
    }

    pub fn with_bm_mixing(mut self, mixing: f64) -> Self {
        self.bm_mixing = mixing;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta.is_finite() || !self.phi.raw().is_finite() || !self.bm_mixing.is_finite() {
            return Err(Error::InvalidParameter("theta, phi and bm_mixing must be finite".into()));
        }
        self.field.validate(self.cutoff)
    }

    /// The simulation runs one rung above the admission cutoff, so the single
    /// crossing never leaves the truncated space.
    pub fn working_cutoff(&self) -> FockCutoff {
        FockCutoff::new(self.cutoff.n_max() + 1).expect("n_max + 1 >= 1")
    }

    /// Pure components `(weight, config)` of the preparation; a thermal field
    /// expands into its Fock-state mixture.
    pub fn components(&self) -> Result<Vec<(f64, QoriConfig)>> {
        self.validate()?;
        match self.field {
            FieldPreparation::Thermal(_) => Ok(self
                .field
                .populations(self.cutoff)?
                .into_iter()
                .enumerate()
                .filter(|(_, p)| *p > 0.0)
                .map(|(n, p)| (p, QoriConfig { field: FieldPreparation::Fock(n), ..*self }))
                .collect()),
            _ => Ok(vec![(1.0, *self)]),
        }
    }
}

/// Final joint state of the interferometer.
#[derive(Clone, Debug, PartialEq)]
pub enum QoriOutput {
    Pure(PureState),
    /// Thermal preparations: density operator on atom ⊗ mode 1 (mode 2 is never touched).
    Mixed(DensityOperator),
}

impl QoriOutput {
    pub fn upper_population(&self) -> f64 {
        match self {
            QoriOutput::Pure(s) => s.level_population(AtomLevel::Upper),
            QoriOutput::Mixed(rho) => {
                let d = rho.cutoff().mode_dim();
                (0..d).map(|n| rho.matrix()[(n, n)].re).sum()
            }
        }
    }

    /// Detector state `ρ_D^f` after tracing out the atom.
    pub fn detector_state(&self) -> Result<DensityOperator> {
        match self {
            QoriOutput::Pure(s) => partial_trace(s, Subsystem::Mode1),
            QoriOutput::Mixed(rho) => rho.partial_trace(Subsystem::Mode1),
        }
    }
}

fn initial_state(config: &QoriConfig) -> Result<PureState> {
    make_state(AtomLevel::Upper, config.field, FieldPreparation::Vacuum, config.cutoff)?.recut(config.working_cutoff())
}

/// Runs a pure preparation through the interferometer.
pub fn run_qori_pure(config: &QoriConfig) -> Result<PureState> {
    config.validate()?;
    let start = initial_state(config)?;
    let after_bs = jc_apply(&start, Mode::One, config.theta)?;
    let after_ps = phase_shifter(&after_bs, config.phi)?;
    classical_pulse(&after_ps, config.bm_mixing, 0.0)
}

pub fn run_qori(config: &QoriConfig) -> Result<QoriOutput> {
    if config.field.is_pure() {
        return run_qori_pure(config).map(QoriOutput::Pure);
    }
    let parts = config
        .components()?
        .into_iter()
        .map(|(w, c)| Ok((w, partial_trace(&run_qori_pure(&c)?, Subsystem::AtomMode1)?)))
        .collect::<Result<Vec<_>>>()?;
    DensityOperator::mixture(&parts).map(QoriOutput::Mixed)
}

/// `(⟨C²⟩₀, ⟨S² a a†⟩₀, ⟨S a C⟩₀)` over the initial field.
pub(crate) fn field_averages(field: FieldPreparation, theta: f64, cutoff: FockCutoff) -> Result<(f64, f64, C64)> {
    let rho = field.density(Mode::One, cutoff)?;
    let m = rho.matrix();
    let (c, s) = sc_diagonals(theta, cutoff);
    let mut c2 = 0.0;
    let mut s2 = 0.0;
    let mut sac = C64::from(0.0);
    for n in 0..cutoff.mode_dim() {
        let p = m[(n, n)].re;
        c2 += p * c[n] * c[n];
        s2 += p * s[n] * s[n] * (n + 1) as f64;
        if n >= 1 {
            // ⟨n-1| S a C |n⟩ = S_{n-1} √n C_n
            sac += m[(n, n - 1)] * s[n - 1] * (n as f64).sqrt() * c[n];
        }
    }
    Ok((c2, s2, sac))
}

/// Contrast factor `𝒞 = 2⟨S a C⟩₀`.
pub fn contrast_factor(field: FieldPreparation, theta: f64, cutoff: FockCutoff) -> Result<C64> {
    let (_, _, sac) = field_averages(field, theta, cutoff)?;
    let contrast = 2.0 * sac;
    if contrast.norm() > 1.0 + 1e-10 {
        return Err(Error::Contract(format!("|contrast factor| = {} exceeds 1", contrast.norm())));
    }
    Ok(contrast)
}

/// Closed-form `(P_aa, P_ab)` from the field averages.
pub fn detection_probabilities_closed_form(config: &QoriConfig) -> Result<(f64, f64)> {
    config.validate()?;
    let (c2, s2, sac) = field_averages(config.field, config.theta, config.cutoff)?;
    let m = config.bm_mixing;
    let contrast = 2.0 * sac;
    let fringe = (contrast * C64::from_polar(1.0, -config.phi.raw())).re;
    let p_aa = m.cos().powi(2) * c2 + m.sin().powi(2) * s2 - 0.5 * (2.0 * m).sin() * fringe;
    Ok((p_aa, 1.0 - p_aa))
}

/// `(P_aa, P_ab)` by projective measurement of the simulated final state.
pub fn detection_probabilities_born(config: &QoriConfig) -> Result<(f64, f64)> {
    let p_aa = run_qori(config)?.upper_population();
    Ok((p_aa, 1.0 - p_aa))
}

/// `(P_aa, P_ab)`; the closed form and the Born rule must agree within 1e-10.
pub fn detection_probabilities(config: &QoriConfig) -> Result<(f64, f64)> {
    let (closed, _) = detection_probabilities_closed_form(config)?;
    let (born, _) = detection_probabilities_born(config)?;
    if (closed - born).abs() > EQUIVALENCE_TOLERANCE {
        return Err(Error::Contract(format!(
            "closed-form P_aa {closed} disagrees with simulated {born}"
        )));
    }
    let p_aa = clamp_probability(closed)?;
    Ok((p_aa, clamp_probability(1.0 - closed)?))
}
