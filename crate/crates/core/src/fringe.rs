//! Phase grids and fringe fitting.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// `steps` evenly spaced points from `start` to `end`, both endpoints included.
pub fn linspace(start: f64, end: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let h = (end - start) / (steps - 1) as f64;
            (0..steps)
                .map(|k| if k == steps - 1 { end } else { start + h * k as f64 })
                .collect()
        }
    }
}

/// `offset + amplitude · cos(harmonic · φ + phase)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringeFit {
    pub offset: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub harmonic: f64,
}

impl FringeFit {
    /// `(max - min) / (max + min)` of the fitted sinusoid.
    pub fn visibility(&self) -> f64 {
        if self.offset == 0.0 {
            0.0
        } else {
            self.amplitude / self.offset
        }
    }

    pub fn eval(&self, phi: f64) -> f64 {
        self.offset + self.amplitude * (self.harmonic * phi + self.phase).cos()
    }
}

/// Least-squares fit of a single harmonic to `(φ, value)` samples.
pub fn fit_fringe(phis: &[f64], values: &[f64], harmonic: f64) -> Result<FringeFit> {
    if phis.len() != values.len() || phis.len() < 3 {
        return Err(Error::InvalidParameter("fringe fit needs >= 3 paired samples".into()));
    }
    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for (&phi, &y) in phis.iter().zip(values) {
        let (s, c) = (harmonic * phi).sin_cos();
        let basis = Vector3::new(1.0, c, s);
        normal += basis * basis.transpose();
        rhs += basis * y;
    }
    let coef = normal
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidParameter("phase grid does not resolve the harmonic".into()))?;
    let (a, b, c) = (coef[0], coef[1], coef[2]);
    Ok(FringeFit {
        offset: a,
        amplitude: b.hypot(c),
        phase: (-c).atan2(b),
        harmonic,
    })
}

/// `(max - min) / (max + min)` over raw samples.
pub fn extremal_visibility(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if max + min == 0.0 {
        0.0
    } else {
        (max - min) / (max + min)
    }
}
