//! Complementarity quantifiers of the single-cavity interferometer: way
//! probabilities `w±`, predictability `P`, visibility `V`, detector quality `Q`
//! and distinguishability `D`.
//!
//! `w±` are the probabilities of the two ways after the cavity beam splitter.
//! They are read off the final state with the way projectors `U_BM Π± U_BM†`,
//! the images of the upper and lower level under the beam merger; with a merger
//! that maps the ways onto σ_x eigenstates these are the `(1 ∓ σ_x)/2`
//! projectors.
//!
//! `Q` is obtained by inverting the pure-state identity
//! `(1 - P²) Q² + P² + V² = 1`, and `D = √((1 - P²) Q² + P²)`.

use crate::dynamics::{classical_pulse, sc_diagonals};
use crate::error::{Error, Result};
use crate::fockspace::{clamp_probability, AtomLevel};
use crate::interferometer::{contrast_factor, run_qori_pure, QoriConfig};

/// `P` closer than this to 1 makes the inversion for `Q` degenerate.
pub const DEGENERATE_PREDICTABILITY: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualityReport {
    pub w_plus: f64,
    pub w_minus: f64,
    pub predictability: f64,
    pub visibility: f64,
    pub quality: f64,
    pub distinguishability: f64,
    /// `(1 - P²) Q² + P² + V² - 1`, or `P² + V² - 1` when degenerate.
    pub identity_residual: f64,
    /// `P` is within 1e-9 of 1; `Q` is then reported as 0 and `D = 1`.
    pub degenerate: bool,
}

/// `(w₊, w₋)` from the simulated final state.
pub fn way_probabilities(config: &QoriConfig) -> Result<(f64, f64)> {
    let mut w_plus = 0.0;
    for (weight, component) in config.components()? {
        let out = run_qori_pure(&component)?;
        let before_merger = classical_pulse(&out, -component.bm_mixing, 0.0)?;
        w_plus += weight * before_merger.level_population(AtomLevel::Upper);
    }
    let w_plus = clamp_probability(w_plus)?;
    Ok((w_plus, 1.0 - w_plus))
}

/// `(w₊, w₋) = (⟨C²⟩₀, ⟨S² a a†⟩₀)` summed over number-basis paths of the
/// initial field, without running the interferometer.
pub fn way_probabilities_by_paths(config: &QoriConfig) -> Result<(f64, f64)> {
    config.validate()?;
    let pops = config.field.populations(config.cutoff)?;
    let (c, s) = sc_diagonals(config.theta, config.cutoff);
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (n, p) in pops.iter().enumerate() {
        plus += p * c[n] * c[n];
        minus += p * s[n] * s[n] * (n + 1) as f64;
    }
    Ok((plus, minus))
}

pub fn predictability(config: &QoriConfig) -> Result<f64> {
    let (w_plus, w_minus) = way_probabilities(config)?;
    Ok((w_plus - w_minus).abs())
}

/// `V = |𝒞|`.
pub fn visibility(config: &QoriConfig) -> Result<f64> {
    config.validate()?;
    Ok(contrast_factor(config.field, config.theta, config.cutoff)?.norm().min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualityDistinguishability {
    pub quality: f64,
    pub distinguishability: f64,
    pub degenerate: bool,
}

fn quality_from(p: f64, v: f64) -> Result<QualityDistinguishability> {
    if p >= 1.0 - DEGENERATE_PREDICTABILITY {
        return Ok(QualityDistinguishability { quality: 0.0, distinguishability: 1.0, degenerate: true });
    }
    let q2 = clamp_probability((1.0 - p * p - v * v) / (1.0 - p * p))?;
    let d2 = clamp_probability((1.0 - p * p) * q2 + p * p)?;
    Ok(QualityDistinguishability {
        quality: q2.sqrt(),
        distinguishability: d2.sqrt(),
        degenerate: false,
    })
}

fn require_pure(config: &QoriConfig) -> Result<()> {
    if !config.field.is_pure() {
        return Err(Error::MixedPreparation("detector quality"));
    }
    Ok(())
}

pub fn quality_and_distinguishability(config: &QoriConfig) -> Result<QualityDistinguishability> {
    require_pure(config)?;
    quality_from(predictability(config)?, visibility(config)?)
}

pub fn duality_residual(config: &QoriConfig) -> Result<f64> {
    Ok(duality_report(config)?.identity_residual)
}

pub fn duality_report(config: &QoriConfig) -> Result<DualityReport> {
    require_pure(config)?;
    let (w_plus, w_minus) = way_probabilities(config)?;
    let p = (w_plus - w_minus).abs();
    let v = visibility(config)?;
    let qd = quality_from(p, v)?;
    let identity_residual = if qd.degenerate {
        p * p + v * v - 1.0
    } else {
        (1.0 - p * p) * qd.quality * qd.quality + p * p + v * v - 1.0
    };
    Ok(DualityReport {
        w_plus,
        w_minus,
        predictability: p,
        visibility: v,
        quality: qd.quality,
        distinguishability: qd.distinguishability,
        identity_residual,
        degenerate: qd.degenerate,
    })
}
