//! Composite Hilbert space of one two-level atom and two truncated cavity modes.
//!
//! Basis vectors are `|level, n1, n2⟩` with `0 <= n1, n2 <= n_max`. The flat index
//! layout is atom-major, then mode 1, then mode 2:
//!
//! ```text
//! index = (level * (n_max + 1) + n1) * (n_max + 1) + n2,   upper = 0, lower = 1
//! ```
//!
//! Every other module and the state dump format rely on this layout.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};

/// Version tag written into state dumps; bump when the index layout changes.
pub const LAYOUT_VERSION: u32 = 1;
pub const DEFAULT_N_MAX: usize = 16;

/// Largest probability a field preparation may lose to truncation.
pub const TAIL_TOLERANCE: f64 = 1e-10;
pub const NORM_TOLERANCE: f64 = 1e-12;
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
pub const TRACE_TOLERANCE: f64 = 1e-12;
pub const EIGENVALUE_FLOOR: f64 = -1e-10;
/// Deviation outside `[0, 1]` tolerated before a probability is clamped.
pub const CLAMP_TOLERANCE: f64 = 1e-10;

/// Clamps `p` into `[0, 1]`, refusing to hide anything larger than rounding.
pub fn clamp_probability(p: f64) -> Result<f64> {
    if !(-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&p) || p.is_nan() {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    Ok(p.clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FockCutoff {
    n_max: usize,
}

impl FockCutoff {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidCutoff(n_max));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(self) -> usize {
        self.n_max
    }

    /// Number of Fock states per mode.
    pub fn mode_dim(self) -> usize {
        self.n_max + 1
    }

    /// Dimension of the full atom ⊗ mode ⊗ mode space.
    pub fn state_dim(self) -> usize {
        2 * self.mode_dim() * self.mode_dim()
    }

    pub fn index(self, level: AtomLevel, n1: usize, n2: usize) -> usize {
        let d = self.mode_dim();
        (level.index() * d + n1) * d + n2
    }

    pub fn decompose(self, index: usize) -> (AtomLevel, usize, usize) {
        let d = self.mode_dim();
        let n2 = index % d;
        let n1 = (index / d) % d;
        let level = AtomLevel::from_index(index / (d * d));
        (level, n1, n2)
    }

    fn check_n(self, n: usize) -> Result<()> {
        if n > self.n_max {
            return Err(Error::PhotonNumberOutOfRange { n, n_max: self.n_max });
        }
        Ok(())
    }

    fn ensure_same(self, other: FockCutoff) -> Result<()> {
        if self != other {
            return Err(Error::CutoffMismatch { left: self.n_max, right: other.n_max });
        }
        Ok(())
    }
}

impl Default for FockCutoff {
    fn default() -> Self {
        Self { n_max: DEFAULT_N_MAX }
    }
}

/// Internal level of a two-level atom. `Upper` is `|a⟩` (Quanton) or `|e⟩`
/// (Erason), `Lower` is `|b⟩` or `|g⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AtomLevel {
    Upper,
    Lower,
}

impl AtomLevel {
    pub const ALL: [AtomLevel; 2] = [AtomLevel::Upper, AtomLevel::Lower];

    pub fn index(self) -> usize {
        match self {
            AtomLevel::Upper => 0,
            AtomLevel::Lower => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            AtomLevel::Upper
        } else {
            AtomLevel::Lower
        }
    }

    /// σ_z eigenvalue.
    pub fn sigma_z(self) -> f64 {
        match self {
            AtomLevel::Upper => 1.0,
            AtomLevel::Lower => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AtomLevel::Upper => "upper",
            AtomLevel::Lower => "lower",
        }
    }
}

impl FromStr for AtomLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upper" => Ok(AtomLevel::Upper),
            "lower" => Ok(AtomLevel::Lower),
            other => Err(Error::InvalidParameter(format!("unknown atom level `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    One,
    Two,
}

impl Mode {
    pub fn number(self) -> u8 {
        match self {
            Mode::One => 1,
            Mode::Two => 2,
        }
    }
}

/// Initial state of a single cavity mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FieldPreparation {
    Vacuum,
    Fock(usize),
    Coherent(C64),
    /// Thermal state with mean photon number `n̄`.
    Thermal(f64),
}

impl FieldPreparation {
    pub fn is_pure(&self) -> bool {
        !matches!(self, FieldPreparation::Thermal(_))
    }

    /// Photon-number distribution on `0..=n_max`, before renormalization.
    fn distribution(&self, cutoff: FockCutoff) -> Vec<f64> {
        let d = cutoff.mode_dim();
        match *self {
            FieldPreparation::Vacuum => unit(d, 0),
            FieldPreparation::Fock(n) => unit(d, n),
            FieldPreparation::Coherent(alpha) => poisson(alpha.norm_sqr(), cutoff.n_max()),
            FieldPreparation::Thermal(nbar) => {
                let q = nbar / (1.0 + nbar);
                (0..d).map(|n| q.powi(n as i32) / (1.0 + nbar)).collect()
            }
        }
    }

    /// Probability carried by photon numbers above `n_max`.
    pub fn tail_probability(&self, cutoff: FockCutoff) -> f64 {
        let n_max = cutoff.n_max();
        match *self {
            FieldPreparation::Vacuum => 0.0,
            FieldPreparation::Fock(n) => {
                if n > n_max {
                    1.0
                } else {
                    0.0
                }
            }
            FieldPreparation::Coherent(alpha) => {
                // summed forward from the first discarded term; no 1 - Σ cancellation
                let lambda = alpha.norm_sqr();
                if lambda > 500.0 {
                    // e^{-λ} underflows; no representable cutoff is adequate
                    return 1.0;
                }
                let mut term = (-lambda).exp();
                for n in 1..=n_max + 1 {
                    term *= lambda / n as f64;
                }
                let mut tail = 0.0;
                let mut n = n_max + 1;
                loop {
                    tail += term;
                    n += 1;
                    term *= lambda / n as f64;
                    // past the Poisson mode the terms decay geometrically
                    if term == 0.0 || (n as f64 > lambda && term <= tail * 1e-20) {
                        break;
                    }
                }
                tail
            }
            FieldPreparation::Thermal(nbar) => (nbar / (1.0 + nbar)).powi(n_max as i32 + 1),
        }
    }

    pub fn validate(&self, cutoff: FockCutoff) -> Result<()> {
        match *self {
            FieldPreparation::Fock(n) => cutoff.check_n(n)?,
            FieldPreparation::Thermal(nbar) if !(nbar >= 0.0 && nbar.is_finite()) => {
                return Err(Error::InvalidParameter(format!(
                    "thermal mean photon number must be finite and >= 0, got {nbar}"
                )));
            }
            FieldPreparation::Coherent(alpha) if !(alpha.re.is_finite() && alpha.im.is_finite()) => {
                return Err(Error::InvalidParameter("coherent amplitude must be finite".into()));
            }
            _ => {}
        }
        let tail = self.tail_probability(cutoff);
        if tail >= TAIL_TOLERANCE {
            return Err(Error::InadequateCutoff { tail, n_max: cutoff.n_max() });
        }
        Ok(())
    }

    /// Normalized number-basis amplitudes of a pure preparation.
    pub fn amplitudes(&self, cutoff: FockCutoff) -> Result<Vec<C64>> {
        self.validate(cutoff)?;
        let d = cutoff.mode_dim();
        let amps: Vec<C64> = match *self {
            FieldPreparation::Thermal(_) => return Err(Error::ThermalNotPure),
            FieldPreparation::Vacuum => unit(d, 0).into_iter().map(C64::from).collect(),
            FieldPreparation::Fock(n) => unit(d, n).into_iter().map(C64::from).collect(),
            FieldPreparation::Coherent(alpha) => {
                let mut amps = Vec::with_capacity(d);
                let mut a = C64::from((-alpha.norm_sqr() / 2.0).exp());
                amps.push(a);
                for n in 1..d {
                    a = a * alpha / (n as f64).sqrt();
                    amps.push(a);
                }
                amps
            }
        };
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        Ok(amps.into_iter().map(|a| a / norm).collect())
    }

    /// Single-mode density operator `ρ_D^o`, labelled with `mode`.
    pub fn density(&self, mode: Mode, cutoff: FockCutoff) -> Result<DensityOperator> {
        self.validate(cutoff)?;
        let d = cutoff.mode_dim();
        let subsystem = match mode {
            Mode::One => Subsystem::Mode1,
            Mode::Two => Subsystem::Mode2,
        };
        let matrix = if self.is_pure() {
            let amps = self.amplitudes(cutoff)?;
            DMatrix::from_fn(d, d, |i, j| amps[i] * amps[j].conj())
        } else {
            let p = self.distribution(cutoff);
            let total: f64 = p.iter().sum();
            DMatrix::from_fn(d, d, |i, j| if i == j { C64::from(p[i] / total) } else { C64::from(0.0) })
        };
        DensityOperator::new(matrix, subsystem, cutoff)
    }

    /// Photon-number populations of the (renormalized) preparation.
    pub fn populations(&self, cutoff: FockCutoff) -> Result<Vec<f64>> {
        self.validate(cutoff)?;
        let p = self.distribution(cutoff);
        let total: f64 = p.iter().sum();
        Ok(p.into_iter().map(|x| x / total).collect())
    }
}

fn unit(d: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[n] = 1.0;
    v
}

fn poisson(lambda: f64, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut p = (-lambda).exp();
    out.push(p);
    for n in 1..=n_max {
        p *= lambda / n as f64;
        out.push(p);
    }
    out
}

impl fmt::Display for FieldPreparation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldPreparation::Vacuum => write!(f, "vacuum"),
            FieldPreparation::Fock(n) => write!(f, "fock:{n}"),
            FieldPreparation::Coherent(a) => write!(f, "coherent:{},{}", a.re, a.im),
            FieldPreparation::Thermal(nbar) => write!(f, "thermal:{nbar}"),
        }
    }
}

/// Parses `vacuum`, `fock:N`, `coherent:RE[,IM]` or `thermal:NBAR`.
impl FromStr for FieldPreparation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad field spec `{s}`"));
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
        match (kind, arg) {
            ("vacuum", None) => Ok(FieldPreparation::Vacuum),
            ("fock", Some(a)) => a.trim().parse().map(FieldPreparation::Fock).map_err(|_| bad()),
            ("coherent", Some(a)) => {
                let parts: Vec<&str> = a.split(',').collect();
                let alpha = match parts.as_slice() {
                    [re] => C64::new(num(re)?, 0.0),
                    [re, im] => C64::new(num(re)?, num(im)?),
                    _ => return Err(bad()),
                };
                if !(alpha.re.is_finite() && alpha.im.is_finite()) {
                    return Err(bad());
                }
                Ok(FieldPreparation::Coherent(alpha))
            }
            ("thermal", Some(a)) => {
                let nbar = num(a)?;
                if !(nbar >= 0.0 && nbar.is_finite()) {
                    return Err(bad());
                }
                Ok(FieldPreparation::Thermal(nbar))
            }
            _ => Err(bad()),
        }
    }
}

/// Normalized state vector over atom ⊗ mode 1 ⊗ mode 2.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: Vec<C64>,
    cutoff: FockCutoff,
}

impl PureState {
    pub fn basis(level: AtomLevel, n1: usize, n2: usize, cutoff: FockCutoff) -> Result<Self> {
        cutoff.check_n(n1)?;
        cutoff.check_n(n2)?;
        let mut amps = vec![C64::from(0.0); cutoff.state_dim()];
        amps[cutoff.index(level, n1, n2)] = C64::from(1.0);
        Ok(Self { amps, cutoff })
    }

    /// Wraps amplitudes that must already be normalized.
    pub fn from_amplitudes(amps: Vec<C64>, cutoff: FockCutoff) -> Result<Self> {
        if amps.len() != cutoff.state_dim() {
            return Err(Error::InvalidParameter(format!(
                "expected {} amplitudes for n_max={}, got {}",
                cutoff.state_dim(),
                cutoff.n_max(),
                amps.len()
            )));
        }
        let state = Self { amps, cutoff };
        let dev = (state.norm() - 1.0).abs();
        if dev.is_nan() || dev >= NORM_TOLERANCE {
            return Err(Error::NotNormalized(dev));
        }
        Ok(state)
    }

    pub fn normalized(amps: Vec<C64>, cutoff: FockCutoff) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter("cannot normalize a zero vector".into()));
        }
        Self::from_amplitudes(amps.into_iter().map(|a| a / norm).collect(), cutoff)
    }

    /// Unitary operations in this crate build results through here; the norm
    /// contract is re-checked on every step.
    pub(crate) fn from_unitary_image(amps: Vec<C64>, cutoff: FockCutoff) -> Result<Self> {
        let state = Self { amps, cutoff };
        let dev = (state.norm() - 1.0).abs();
        if dev >= NORM_TOLERANCE {
            return Err(Error::Contract(format!("unitary step changed the norm by {dev:.3e}")));
        }
        Ok(state)
    }

    /// Random normalized state with no upper-level population on the top rung
    /// of either mode, so any cavity crossing stays inside the truncated space.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, cutoff: FockCutoff) -> Self {
        let n_max = cutoff.n_max();
        let amps: Vec<C64> = (0..cutoff.state_dim())
            .map(|i| {
                let (level, n1, n2) = cutoff.decompose(i);
                if level == AtomLevel::Upper && (n1 == n_max || n2 == n_max) {
                    C64::from(0.0)
                } else {
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                }
            })
            .collect();
        Self::normalized(amps, cutoff).expect("random vector is nonzero")
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, level: AtomLevel, n1: usize, n2: usize) -> C64 {
        if n1 > self.cutoff.n_max() || n2 > self.cutoff.n_max() {
            return C64::from(0.0);
        }
        self.amps[self.cutoff.index(level, n1, n2)]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Born probability of finding the atom in `level`.
    pub fn level_population(&self, level: AtomLevel) -> f64 {
        self.entries().filter(|e| e.0 == level).map(|e| e.3.norm_sqr()).sum()
    }

    /// `(level, n1, n2, amplitude)` in index order.
    pub fn entries(&self) -> impl Iterator<Item = (AtomLevel, usize, usize, C64)> + '_ {
        self.amps.iter().enumerate().map(move |(i, a)| {
            let (level, n1, n2) = self.cutoff.decompose(i);
            (level, n1, n2, *a)
        })
    }

    /// Projects the atom onto `level` and renormalizes. Returns the Born
    /// probability together with the post-measurement state, or `None` when
    /// the outcome has zero probability.
    pub fn project_level(&self, level: AtomLevel) -> (f64, Option<PureState>) {
        let p = self.level_population(level);
        if p <= 0.0 {
            return (0.0, None);
        }
        let s = p.sqrt();
        let amps = self
            .entries()
            .map(|(l, _, _, a)| if l == level { a / s } else { C64::from(0.0) })
            .collect();
        (p, Some(Self { amps, cutoff: self.cutoff }))
    }

    /// Replaces the atom by a fresh one in `level`. Requires the atom to be
    /// unentangled; the field factor is read from the dominant atomic branch.
    pub fn reset_atom(&self, level: AtomLevel) -> Result<PureState> {
        let rho = partial_trace(self, Subsystem::Atom)?;
        let purity = rho.purity();
        if (1.0 - purity).abs() > 1e-10 {
            return Err(Error::Contract(format!(
                "atom is entangled with the field (purity {purity}); cannot reinject"
            )));
        }
        let from = if self.level_population(AtomLevel::Upper) >= 0.5 {
            AtomLevel::Upper
        } else {
            AtomLevel::Lower
        };
        let (_, branch) = self.project_level(from);
        let branch = branch.expect("dominant branch has weight >= 1/2");
        let mut amps = vec![C64::from(0.0); self.cutoff.state_dim()];
        for (l, n1, n2, a) in branch.entries() {
            if l == from {
                amps[self.cutoff.index(level, n1, n2)] = a;
            }
        }
        Self::normalized(amps, self.cutoff)
    }

    /// Re-expresses the state with a different cutoff. Shrinking fails if it
    /// would discard more than 1e-12 of population.
    pub fn recut(&self, cutoff: FockCutoff) -> Result<PureState> {
        let mut amps = vec![C64::from(0.0); cutoff.state_dim()];
        let mut lost = 0.0;
        for (l, n1, n2, a) in self.entries() {
            if n1 <= cutoff.n_max() && n2 <= cutoff.n_max() {
                amps[cutoff.index(l, n1, n2)] = a;
            } else {
                lost += a.norm_sqr();
            }
        }
        if lost > 1e-12 {
            return Err(Error::InadequateCutoff { tail: lost, n_max: cutoff.n_max() });
        }
        Self::normalized(amps, cutoff)
    }

    /// Text dump: a header line, then `level n1 n2 re im` for every nonzero
    /// amplitude in index order, numbers in fixed point with 17 significant digits.
    pub fn to_dump(&self) -> String {
        let mut out = format!(
            "# state n_max={} layout=v{} order=level,n1,n2\n",
            self.cutoff.n_max(),
            LAYOUT_VERSION
        );
        for (l, n1, n2, a) in self.entries() {
            if a.re != 0.0 || a.im != 0.0 {
                out.push_str(&format!(
                    "{} {} {} {} {}\n",
                    l.label(),
                    n1,
                    n2,
                    format_sig17(a.re),
                    format_sig17(a.im)
                ));
            }
        }
        out
    }

    pub fn from_dump(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidParameter(format!("malformed state dump: {msg}"));
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty"))?;
        let mut n_max = None;
        let mut version = None;
        for tok in header.trim_start_matches('#').split_whitespace() {
            if let Some(v) = tok.strip_prefix("n_max=") {
                n_max = v.parse::<usize>().ok();
            } else if let Some(v) = tok.strip_prefix("layout=v") {
                version = v.parse::<u32>().ok();
            }
        }
        if version != Some(LAYOUT_VERSION) {
            return Err(bad("unsupported layout version"));
        }
        let cutoff = FockCutoff::new(n_max.ok_or_else(|| bad("missing n_max"))?)?;
        let mut amps = vec![C64::from(0.0); cutoff.state_dim()];
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                return Err(bad(line));
            }
            let level: AtomLevel = f[0].parse()?;
            let n1: usize = f[1].parse().map_err(|_| bad(line))?;
            let n2: usize = f[2].parse().map_err(|_| bad(line))?;
            cutoff.check_n(n1)?;
            cutoff.check_n(n2)?;
            let re: f64 = f[3].parse().map_err(|_| bad(line))?;
            let im: f64 = f[4].parse().map_err(|_| bad(line))?;
            amps[cutoff.index(level, n1, n2)] = C64::new(re, im);
        }
        Self::from_amplitudes(amps, cutoff)
    }
}

/// Fixed-point rendering with 17 significant digits.
pub fn format_sig17(x: f64) -> String {
    if x == 0.0 {
        return format!("{:.16}", 0.0);
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (16 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

/// `|field1⟩ ⊗ |field2⟩ ⊗ |atom⟩` in the crate's index layout.
pub fn make_state(
    atom: AtomLevel,
    field1: FieldPreparation,
    field2: FieldPreparation,
    cutoff: FockCutoff,
) -> Result<PureState> {
    let f1 = field1.amplitudes(cutoff)?;
    let f2 = field2.amplitudes(cutoff)?;
    let mut amps = vec![C64::from(0.0); cutoff.state_dim()];
    for (n1, a1) in f1.iter().enumerate() {
        for (n2, a2) in f2.iter().enumerate() {
            amps[cutoff.index(atom, n1, n2)] = a1 * a2;
        }
    }
    PureState::normalized(amps, cutoff)
}

/// `⟨x|y⟩`.
pub fn inner(x: &PureState, y: &PureState) -> Result<C64> {
    x.cutoff.ensure_same(y.cutoff)?;
    Ok(x.amps.iter().zip(&y.amps).map(|(a, b)| a.conj() * b).sum())
}

/// A tensor factor selection of atom ⊗ mode 1 ⊗ mode 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subsystem {
    Atom,
    Mode1,
    Mode2,
    /// mode 1 ⊗ mode 2
    Modes,
    /// atom ⊗ mode 1
    AtomMode1,
    Full,
}

impl Subsystem {
    /// Which of (atom, mode 1, mode 2) are present.
    pub fn factors(self) -> [bool; 3] {
        match self {
            Subsystem::Atom => [true, false, false],
            Subsystem::Mode1 => [false, true, false],
            Subsystem::Mode2 => [false, false, true],
            Subsystem::Modes => [false, true, true],
            Subsystem::AtomMode1 => [true, true, false],
            Subsystem::Full => [true, true, true],
        }
    }

    fn factor_dims(self, cutoff: FockCutoff) -> Vec<usize> {
        let full = [2, cutoff.mode_dim(), cutoff.mode_dim()];
        self.factors()
            .iter()
            .zip(full)
            .filter(|(present, _)| **present)
            .map(|(_, d)| d)
            .collect()
    }

    pub fn dim(self, cutoff: FockCutoff) -> usize {
        self.factor_dims(cutoff).iter().product()
    }

    /// Splits a subsystem index into (atom, n1, n2) with absent factors `None`.
    pub fn decompose(self, index: usize, cutoff: FockCutoff) -> [Option<usize>; 3] {
        let dims = self.factor_dims(cutoff);
        let mut digits = vec![0; dims.len()];
        let mut rest = index;
        for k in (0..dims.len()).rev() {
            digits[k] = rest % dims[k];
            rest /= dims[k];
        }
        let mut out = [None; 3];
        let mut it = digits.into_iter();
        for (slot, present) in out.iter_mut().zip(self.factors()) {
            if present {
                *slot = it.next();
            }
        }
        out
    }

    fn compose(self, parts: [usize; 3], cutoff: FockCutoff) -> usize {
        compose_masked(self.factors(), parts, cutoff)
    }

    fn contains(self, other: Subsystem) -> bool {
        self.factors().iter().zip(other.factors()).all(|(s, o)| *s || !o)
    }
}

impl fmt::Display for Subsystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Subsystem::Atom => "atom",
            Subsystem::Mode1 => "mode1",
            Subsystem::Mode2 => "mode2",
            Subsystem::Modes => "mode1⊗mode2",
            Subsystem::AtomMode1 => "atom⊗mode1",
            Subsystem::Full => "atom⊗mode1⊗mode2",
        };
        f.write_str(s)
    }
}

/// Hermitian, unit-trace, positive semidefinite operator on a subsystem.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: DMatrix<C64>,
    subsystem: Subsystem,
    cutoff: FockCutoff,
}

impl DensityOperator {
    pub fn new(matrix: DMatrix<C64>, subsystem: Subsystem, cutoff: FockCutoff) -> Result<Self> {
        let d = subsystem.dim(cutoff);
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::InvalidDensity(format!(
                "{}x{} matrix for {} (dim {d})",
                matrix.nrows(),
                matrix.ncols(),
                subsystem
            )));
        }
        let herm = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| (matrix[(i, j)] - matrix[(j, i)].conj()).norm())
            .fold(0.0, f64::max);
        if herm > HERMITIAN_TOLERANCE {
            return Err(Error::InvalidDensity(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let trace = matrix.trace();
        if (trace - C64::from(1.0)).norm() > TRACE_TOLERANCE {
            return Err(Error::InvalidDensity(format!("trace {trace} != 1")));
        }
        let rho = Self { matrix, subsystem, cutoff };
        let min_eig = rho.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < EIGENVALUE_FLOOR {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(rho)
    }

    pub fn from_pure(state: &PureState) -> Self {
        let a = &state.amps;
        let d = a.len();
        Self {
            matrix: DMatrix::from_fn(d, d, |i, j| a[i] * a[j].conj()),
            subsystem: Subsystem::Full,
            cutoff: state.cutoff,
        }
    }

    /// Convex combination `Σ w_k ρ_k`; weights must sum to one.
    pub fn mixture(parts: &[(f64, DensityOperator)]) -> Result<Self> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let mut m = DMatrix::zeros(first.matrix.nrows(), first.matrix.ncols());
        for (w, rho) in parts {
            rho.cutoff.ensure_same(first.cutoff)?;
            if rho.subsystem != first.subsystem {
                return Err(Error::InvalidSubsystem {
                    keep: rho.subsystem.to_string(),
                    from: first.subsystem.to_string(),
                });
            }
            m += &rho.matrix * C64::from(*w);
        }
        Self::new(m, first.subsystem, first.cutoff)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn subsystem(&self) -> Subsystem {
        self.subsystem
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `tr(ρ²)`
    pub fn purity(&self) -> f64 {
        // tr(ρ²) = Σ_ij |ρ_ij|² for Hermitian ρ
        self.matrix.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix.clone().symmetric_eigenvalues().iter().copied().collect()
    }

    /// Von Neumann entropy in nats.
    pub fn von_neumann_entropy(&self) -> f64 {
        self.eigenvalues()
            .into_iter()
            .filter(|&l| l > 0.0)
            .map(|l| -l * l.ln())
            .sum()
    }

    /// Reduces to `keep`, which must be a factor subset of this operator's subsystem.
    pub fn partial_trace(&self, keep: Subsystem) -> Result<DensityOperator> {
        if !self.subsystem.contains(keep) {
            return Err(Error::InvalidSubsystem {
                keep: keep.to_string(),
                from: self.subsystem.to_string(),
            });
        }
        let cutoff = self.cutoff;
        let d_from = self.subsystem.dim(cutoff);
        let d_keep = keep.dim(cutoff);
        let traced = complement(keep.factors(), self.subsystem.factors());
        let mut out = DMatrix::<C64>::zeros(d_keep, d_keep);
        // group source indices by their traced part, then sum the diagonal blocks
        let split = |i: usize| {
            let parts = self.subsystem.decompose(i, cutoff);
            let full = parts.map(|p| p.unwrap_or(0));
            let k = keep.compose(full, cutoff);
            let t = compose_masked(traced, full, cutoff);
            (k, t)
        };
        let labels: Vec<(usize, usize)> = (0..d_from).map(split).collect();
        for (i, &(ki, ti)) in labels.iter().enumerate() {
            for (j, &(kj, tj)) in labels.iter().enumerate() {
                if ti == tj {
                    out[(ki, kj)] += self.matrix[(i, j)];
                }
            }
        }
        DensityOperator::new(out, keep, cutoff)
    }

    pub fn expectation(&self, observable: Observable) -> Result<f64> {
        let needed = observable.support();
        if !self.subsystem.contains(needed) {
            return Err(Error::ObservableSubsystem {
                observable: observable.name(),
                subsystem: self.subsystem.to_string(),
            });
        }
        let d = self.matrix.nrows();
        let parts: Vec<[Option<usize>; 3]> =
            (0..d).map(|i| self.subsystem.decompose(i, self.cutoff)).collect();
        let mut acc = C64::from(0.0);
        for i in 0..d {
            for j in 0..d {
                let o = observable.element(parts[j], parts[i]);
                if o != C64::from(0.0) {
                    acc += self.matrix[(i, j)] * o;
                }
            }
        }
        real_part(acc, &observable)
    }
}

/// Flat index of the factors selected by `mask`, in atom, mode 1, mode 2 order.
fn compose_masked(mask: [bool; 3], parts: [usize; 3], cutoff: FockCutoff) -> usize {
    let full = [2, cutoff.mode_dim(), cutoff.mode_dim()];
    let mut idx = 0;
    for k in 0..3 {
        if mask[k] {
            idx = idx * full[k] + parts[k];
        }
    }
    idx
}

fn masked_dim(mask: [bool; 3], cutoff: FockCutoff) -> usize {
    let full = [2, cutoff.mode_dim(), cutoff.mode_dim()];
    (0..3).filter(|&k| mask[k]).map(|k| full[k]).product()
}

fn complement(keep: [bool; 3], from: [bool; 3]) -> [bool; 3] {
    [from[0] && !keep[0], from[1] && !keep[1], from[2] && !keep[2]]
}

/// Reduced density operator of a pure state on `keep`.
pub fn partial_trace(state: &PureState, keep: Subsystem) -> Result<DensityOperator> {
    let cutoff = state.cutoff;
    let d_keep = keep.dim(cutoff);
    let traced = complement(keep.factors(), [true; 3]);
    let n_traced = masked_dim(traced, cutoff);
    // columns of `blocks` are the kept-space vectors for each traced basis state
    let mut blocks = DMatrix::<C64>::zeros(d_keep, n_traced);
    for (i, a) in state.amps.iter().enumerate() {
        let (l, n1, n2) = cutoff.decompose(i);
        let full = [l.index(), n1, n2];
        let k = keep.compose(full, cutoff);
        let t = compose_masked(traced, full, cutoff);
        blocks[(k, t)] = *a;
    }
    let mut out = DMatrix::<C64>::zeros(d_keep, d_keep);
    for i in 0..d_keep {
        for j in 0..d_keep {
            let mut s = C64::from(0.0);
            for t in 0..n_traced {
                s += blocks[(i, t)] * blocks[(j, t)].conj();
            }
            out[(i, j)] = s;
        }
    }
    DensityOperator::new(out, keep, cutoff)
}

/// Named Hermitian observables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    SigmaX,
    SigmaY,
    SigmaZ,
    /// `a†a` of one mode.
    Number(Mode),
    /// Upper-level indicator plus `a†a` of one mode, conserved by a crossing of that mode.
    Excitation(Mode),
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::SigmaX => "sigma_x".into(),
            Observable::SigmaY => "sigma_y".into(),
            Observable::SigmaZ => "sigma_z".into(),
            Observable::Number(m) => format!("n{}", m.number()),
            Observable::Excitation(m) => format!("excitation{}", m.number()),
        }
    }

    fn support(&self) -> Subsystem {
        match self {
            Observable::SigmaX | Observable::SigmaY | Observable::SigmaZ => Subsystem::Atom,
            Observable::Number(Mode::One) => Subsystem::Mode1,
            Observable::Number(Mode::Two) => Subsystem::Mode2,
            Observable::Excitation(Mode::One) => Subsystem::AtomMode1,
            Observable::Excitation(Mode::Two) => Subsystem::Full,
        }
    }

    /// Matrix element `⟨row|O|col⟩` between partially specified basis states;
    /// factors the observable does not touch must agree.
    fn element(&self, row: [Option<usize>; 3], col: [Option<usize>; 3]) -> C64 {
        let zero = C64::from(0.0);
        let same = |k: usize| row[k] == col[k];
        let i = C64::new(0.0, 1.0);
        match self {
            Observable::SigmaX | Observable::SigmaY | Observable::SigmaZ => {
                if !(same(1) && same(2)) {
                    return zero;
                }
                let (r, c) = (row[0].unwrap_or(0), col[0].unwrap_or(0));
                match (self, r, c) {
                    (Observable::SigmaZ, 0, 0) => C64::from(1.0),
                    (Observable::SigmaZ, 1, 1) => C64::from(-1.0),
                    (Observable::SigmaX, 0, 1) | (Observable::SigmaX, 1, 0) => C64::from(1.0),
                    (Observable::SigmaY, 0, 1) => -i,
                    (Observable::SigmaY, 1, 0) => i,
                    _ => zero,
                }
            }
            Observable::Number(m) | Observable::Excitation(m) => {
                if row != col {
                    return zero;
                }
                let k = if *m == Mode::One { 1 } else { 2 };
                let mut v = row[k].unwrap_or(0) as f64;
                if matches!(self, Observable::Excitation(_)) && row[0] == Some(0) {
                    v += 1.0;
                }
                C64::from(v)
            }
        }
    }

    fn apply(&self, state: &PureState) -> Vec<C64> {
        let cutoff = state.cutoff;
        let mut out = vec![C64::from(0.0); state.amps.len()];
        for (col, a) in state.amps.iter().enumerate() {
            if *a == C64::from(0.0) {
                continue;
            }
            let (l, n1, n2) = cutoff.decompose(col);
            let c = [Some(l.index()), Some(n1), Some(n2)];
            for other in AtomLevel::ALL {
                let r = [Some(other.index()), Some(n1), Some(n2)];
                let e = self.element(r, c);
                if e != C64::from(0.0) {
                    out[cutoff.index(other, n1, n2)] += e * a;
                }
            }
        }
        out
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigma_x" => Ok(Observable::SigmaX),
            "sigma_y" => Ok(Observable::SigmaY),
            "sigma_z" => Ok(Observable::SigmaZ),
            "n1" => Ok(Observable::Number(Mode::One)),
            "n2" => Ok(Observable::Number(Mode::Two)),
            "excitation1" => Ok(Observable::Excitation(Mode::One)),
            "excitation2" => Ok(Observable::Excitation(Mode::Two)),
            "a1" | "a2" | "a1_dag" | "a2_dag" | "sigma_plus" | "sigma_minus" => {
                Err(Error::NonHermitianObservable(s.into()))
            }
            other => Err(Error::UnknownObservable(other.into())),
        }
    }
}

fn real_part(value: C64, observable: &Observable) -> Result<f64> {
    if value.im.abs() >= 1e-12 {
        return Err(Error::Contract(format!(
            "expectation of {} has imaginary part {:.3e}",
            observable.name(),
            value.im
        )));
    }
    Ok(value.re)
}

/// `⟨ψ|O|ψ⟩`.
pub fn expectation(state: &PureState, observable: Observable) -> Result<f64> {
    let image = observable.apply(state);
    let v: C64 = state.amps.iter().zip(&image).map(|(a, b)| a.conj() * b).sum();
    real_part(v, &observable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cut(n: usize) -> FockCutoff {
        FockCutoff::new(n).unwrap()
    }

    #[test]
    fn cutoff_rejects_zero() {
        assert_eq!(FockCutoff::new(0), Err(Error::InvalidCutoff(0)));
        assert_eq!(FockCutoff::default().n_max(), 16);
    }

    #[test]
    fn index_layout_is_atom_major() {
        let c = cut(4);
        assert_eq!(c.index(AtomLevel::Upper, 0, 0), 0);
        assert_eq!(c.index(AtomLevel::Upper, 0, 1), 1);
        assert_eq!(c.index(AtomLevel::Upper, 1, 0), 5);
        assert_eq!(c.index(AtomLevel::Lower, 0, 0), 25);
        for i in 0..c.state_dim() {
            let (l, n1, n2) = c.decompose(i);
            assert_eq!(c.index(l, n1, n2), i);
        }
    }

    #[test]
    fn make_state_vacuum_and_fock() {
        let c = cut(4);
        let s = make_state(AtomLevel::Upper, FieldPreparation::Vacuum, FieldPreparation::Vacuum, c).unwrap();
        assert_eq!(s.amplitude(AtomLevel::Upper, 0, 0), C64::from(1.0));
        assert_eq!(s.amplitudes().iter().filter(|a| a.norm() > 0.0).count(), 1);

        let s = make_state(AtomLevel::Lower, FieldPreparation::Fock(1), FieldPreparation::Vacuum, c).unwrap();
        assert_eq!(s.amplitude(AtomLevel::Lower, 1, 0), C64::from(1.0));
    }

    #[test]
    fn make_state_coherent_matches_expansion() {
        let c = cut(12);
        let alpha = C64::new(0.5, 0.0);
        let s = make_state(AtomLevel::Upper, FieldPreparation::Coherent(alpha), FieldPreparation::Vacuum, c).unwrap();
        let mut fact = 1.0;
        for n in 0..=12usize {
            if n > 0 {
                fact *= n as f64;
            }
            let expected = (-alpha.norm_sqr() / 2.0).exp() * alpha.powi(n as i32) / fact.sqrt();
            assert_abs_diff_eq!(s.amplitude(AtomLevel::Upper, n, 0).re, expected.re, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn make_state_rejects_thermal_and_inadequate_cutoff() {
        let c = cut(4);
        assert_eq!(
            make_state(AtomLevel::Upper, FieldPreparation::Thermal(0.001), FieldPreparation::Vacuum, c),
            Err(Error::ThermalNotPure)
        );
        let r = make_state(AtomLevel::Upper, FieldPreparation::Coherent(C64::new(3.0, 0.0)), FieldPreparation::Vacuum, c);
        assert!(matches!(r, Err(Error::InadequateCutoff { .. })));
        assert!(FieldPreparation::Thermal(2.0).density(Mode::One, c).is_err());
        assert!(matches!(
            FieldPreparation::Fock(5).validate(c),
            Err(Error::PhotonNumberOutOfRange { n: 5, n_max: 4 })
        ));
    }

    #[test]
    fn inner_products() {
        let c = cut(4);
        let u = PureState::basis(AtomLevel::Upper, 0, 0, c).unwrap();
        let l = PureState::basis(AtomLevel::Lower, 0, 0, c).unwrap();
        assert_eq!(inner(&u, &l).unwrap(), C64::from(0.0));
        assert_abs_diff_eq!(inner(&u, &u).unwrap().re, 1.0);

        let c = cut(16);
        let alpha = C64::new(0.8, -0.3);
        let coh = make_state(AtomLevel::Upper, FieldPreparation::Coherent(alpha), FieldPreparation::Vacuum, c).unwrap();
        let vac = PureState::basis(AtomLevel::Upper, 0, 0, c).unwrap();
        let ov = inner(&coh, &vac).unwrap();
        assert_abs_diff_eq!(ov.re, (-alpha.norm_sqr() / 2.0).exp(), epsilon = 1e-10);
        assert_abs_diff_eq!(ov.im, 0.0, epsilon = 1e-10);

        let other = PureState::basis(AtomLevel::Upper, 0, 0, cut(3)).unwrap();
        assert_eq!(inner(&vac, &other), Err(Error::CutoffMismatch { left: 16, right: 3 }));
    }

    #[test]
    fn partial_trace_of_product_is_pure() {
        let c = cut(8);
        let s = make_state(
            AtomLevel::Upper,
            FieldPreparation::Coherent(C64::new(0.4, 0.2)),
            FieldPreparation::Fock(2),
            c,
        )
        .unwrap();
        for keep in [Subsystem::Modes, Subsystem::Atom, Subsystem::Mode1, Subsystem::AtomMode1] {
            let rho = partial_trace(&s, keep).unwrap();
            assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn partial_trace_of_bell_pair_is_maximally_mixed() {
        let c = cut(2);
        let mut amps = vec![C64::from(0.0); c.state_dim()];
        amps[c.index(AtomLevel::Upper, 0, 0)] = C64::from(0.5f64.sqrt());
        amps[c.index(AtomLevel::Lower, 1, 0)] = C64::from(0.5f64.sqrt());
        let s = PureState::from_amplitudes(amps, c).unwrap();
        let rho = partial_trace(&s, Subsystem::Atom).unwrap();
        assert_abs_diff_eq!(rho.matrix()[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.matrix()[(1, 1)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.matrix()[(0, 1)].norm(), 0.0);
        assert_abs_diff_eq!(rho.von_neumann_entropy(), std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn density_partial_trace_agrees_with_pure_route() {
        let c = cut(3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = PureState::random(&mut rng, c);
        let full = DensityOperator::from_pure(&s);
        for keep in [Subsystem::Atom, Subsystem::Mode1, Subsystem::Mode2, Subsystem::Modes, Subsystem::AtomMode1] {
            let a = partial_trace(&s, keep).unwrap();
            let b = full.partial_trace(keep).unwrap();
            assert!((a.matrix() - b.matrix()).iter().all(|x| x.norm() < 1e-14), "{keep}");
        }
        let modes = full.partial_trace(Subsystem::Modes).unwrap();
        let m1 = modes.partial_trace(Subsystem::Mode1).unwrap();
        assert!((m1.matrix() - partial_trace(&s, Subsystem::Mode1).unwrap().matrix()).iter().all(|x| x.norm() < 1e-14));
        assert!(matches!(
            m1.partial_trace(Subsystem::Atom),
            Err(Error::InvalidSubsystem { .. })
        ));
    }

    #[test]
    fn expectations() {
        let c = cut(6);
        let u = PureState::basis(AtomLevel::Upper, 0, 0, c).unwrap();
        assert_eq!(expectation(&u, Observable::SigmaZ).unwrap(), 1.0);
        let f3 = FieldPreparation::Fock(3).density(Mode::One, c).unwrap();
        assert_abs_diff_eq!(f3.expectation(Observable::Number(Mode::One)).unwrap(), 3.0);

        let c = cut(24);
        let alpha = C64::new(1.1, 0.7);
        let coh = FieldPreparation::Coherent(alpha).density(Mode::One, c).unwrap();
        assert_abs_diff_eq!(
            coh.expectation(Observable::Number(Mode::One)).unwrap(),
            alpha.norm_sqr(),
            epsilon = 1e-9
        );
        assert!(matches!(
            coh.expectation(Observable::SigmaZ),
            Err(Error::ObservableSubsystem { .. })
        ));
    }

    #[test]
    fn observable_names() {
        assert_eq!("sigma_z".parse::<Observable>().unwrap(), Observable::SigmaZ);
        assert_eq!("a1".parse::<Observable>(), Err(Error::NonHermitianObservable("a1".into())));
        assert!(matches!("foo".parse::<Observable>(), Err(Error::UnknownObservable(_))));
    }

    #[test]
    fn field_spec_parsing() {
        assert_eq!("vacuum".parse::<FieldPreparation>().unwrap(), FieldPreparation::Vacuum);
        assert_eq!("fock:3".parse::<FieldPreparation>().unwrap(), FieldPreparation::Fock(3));
        assert_eq!(
            "coherent:1.2,0".parse::<FieldPreparation>().unwrap(),
            FieldPreparation::Coherent(C64::new(1.2, 0.0))
        );
        assert_eq!("thermal:0.5".parse::<FieldPreparation>().unwrap(), FieldPreparation::Thermal(0.5));
        for bad in ["", "fock", "fock:-1", "coherent:x", "thermal:-1", "laser:2", "coherent:1,2,3"] {
            assert!(bad.parse::<FieldPreparation>().is_err(), "{bad}");
        }
    }

    #[test]
    fn thermal_density_is_geometric() {
        let c = cut(40);
        let rho = FieldPreparation::Thermal(0.3).density(Mode::One, c).unwrap();
        assert_abs_diff_eq!(rho.matrix()[(1, 1)].re, 0.3 / 1.3 / 1.3, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.expectation(Observable::Number(Mode::One)).unwrap(), 0.3, epsilon = 1e-9);
    }

    #[test]
    fn coherent_tail_matches_poisson() {
        let c = cut(24);
        // Poisson(λ=4) mass above 24, summed directly in extended precision order
        let mut term = (-4.0f64).exp();
        let mut tail = 0.0;
        for n in 1..200 {
            term *= 4.0 / n as f64;
            if n > 24 {
                tail += term;
            }
        }
        let got = FieldPreparation::Coherent(C64::new(2.0, 0.0)).tail_probability(c);
        assert!((got - tail).abs() < 1e-20, "{got} vs {tail}");
    }

    #[test]
    fn clamp_rule() {
        assert_eq!(clamp_probability(1.0 + 5e-11).unwrap(), 1.0);
        assert_eq!(clamp_probability(-5e-11).unwrap(), 0.0);
        assert!(clamp_probability(1.0 + 1e-9).is_err());
        assert!(clamp_probability(f64::NAN).is_err());
    }

    #[test]
    fn state_dump_format() {
        let c = cut(2);
        let mut amps = vec![C64::from(0.0); c.state_dim()];
        amps[c.index(AtomLevel::Lower, 1, 0)] = C64::new(0.6, 0.0);
        amps[c.index(AtomLevel::Lower, 0, 1)] = C64::new(0.0, -0.8);
        let s = PureState::from_amplitudes(amps, c).unwrap();
        let dump = s.to_dump();
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines[0], "# state n_max=2 layout=v1 order=level,n1,n2");
        assert_eq!(lines[1], "lower 0 1 0.0000000000000000 -0.80000000000000004");
        assert_eq!(lines[2], "lower 1 0 0.59999999999999998 0.0000000000000000");
        assert_eq!(PureState::from_dump(&dump).unwrap(), s);
    }

    #[test]
    fn sig17_formatting() {
        assert_eq!(format_sig17(0.5), "0.50000000000000000");
        assert_eq!(format_sig17(-1.5), "-1.5000000000000000");
        assert_eq!(format_sig17(123.25), "123.25000000000000");
        assert_eq!(format_sig17(1e-3), "0.0010000000000000000");
    }

    #[test]
    fn reset_atom_requires_factorization() {
        let c = cut(2);
        let s = PureState::basis(AtomLevel::Lower, 1, 0, c).unwrap();
        let r = s.reset_atom(AtomLevel::Upper).unwrap();
        assert_eq!(r.amplitude(AtomLevel::Upper, 1, 0), C64::from(1.0));

        let mut amps = vec![C64::from(0.0); c.state_dim()];
        amps[c.index(AtomLevel::Upper, 0, 0)] = C64::from(0.5f64.sqrt());
        amps[c.index(AtomLevel::Lower, 1, 0)] = C64::from(0.5f64.sqrt());
        let bell = PureState::from_amplitudes(amps, c).unwrap();
        assert!(matches!(bell.reset_atom(AtomLevel::Lower), Err(Error::Contract(_))));
    }
}
