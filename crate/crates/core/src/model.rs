//! Physical parameter containers shared by every pipeline.
//!
//! All rates and frequencies are stored as dimensionless multiples of a
//! [`UnitSystem`] reference rate: `gamma1` for spectral-memory work and
//! `Omega0` for transfer work. Collective couplings are rates,
//! `Omega_m^2 = N_m |g_m|^2`; atom numbers only enter the oracle discretizer.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Regime checks use this ratio for "much greater than".
pub const FAR_DETUNED_RATIO: f64 = 10.0;

/// Cavity coupling and loss rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    /// Waveguide (input/output channel) coupling rate.
    pub gamma1: f64,
    /// Free-space loss rate.
    pub gamma2: f64,
    /// Homogeneous linewidth of the atomic transitions.
    pub gamma21: f64,
}

impl RateParams {
    pub fn new(gamma1: f64, gamma2: f64, gamma21: f64) -> Self {
        Self {
            gamma1,
            gamma2,
            gamma21,
        }
    }

    /// Lossless cavity with unit waveguide coupling.
    pub fn lossless(gamma1: f64) -> Self {
        Self::new(gamma1, 0.0, 0.0)
    }

    /// Total cavity field decay rate `gamma1 + gamma2`.
    pub fn cavity_loss(&self) -> f64 {
        self.gamma1 + self.gamma2
    }
}

/// The inhomogeneously broadened memory ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryNodeSpec {
    /// Lorentzian inhomogeneous half-width.
    pub delta_in: f64,
    /// Collective coupling to the cavity mode.
    pub omega0: f64,
    /// Ensemble size, used only when discretizing for the oracle.
    pub n_atoms: usize,
}

impl MemoryNodeSpec {
    pub fn new(delta_in: f64, omega0: f64, n_atoms: usize) -> Self {
        Self {
            delta_in,
            omega0,
            n_atoms,
        }
    }

    /// Picks `omega0` so that the absorption rate `2 omega0^2 / (delta_in + gamma21)`
    /// equals `gamma_tot`.
    pub fn with_absorption_rate(delta_in: f64, gamma_tot: f64, gamma21: f64, n_atoms: usize) -> Self {
        let omega0 = (0.5 * gamma_tot * (delta_in + gamma21)).max(0.0).sqrt();
        Self::new(delta_in, omega0, n_atoms)
    }
}

/// A homogeneously broadened processing ensemble, treated collectively.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessingNodeSpec {
    /// Signed detuning from the cavity frequency.
    pub detuning: f64,
    /// Collective coupling.
    pub omega: f64,
}

impl ProcessingNodeSpec {
    pub fn new(detuning: f64, omega: f64) -> Self {
        Self { detuning, omega }
    }
}

/// One memory node plus an ordered list of processing nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub rates: RateParams,
    pub memory: MemoryNodeSpec,
    pub processors: Vec<ProcessingNodeSpec>,
}

impl NetworkSpec {
    pub fn new(rates: RateParams, memory: MemoryNodeSpec, processors: Vec<ProcessingNodeSpec>) -> Self {
        Self {
            rates,
            memory,
            processors,
        }
    }

    /// `m` idle nodes in pairs `(+detuning, -detuning)` with equal coupling.
    pub fn symmetric(
        rates: RateParams,
        memory: MemoryNodeSpec,
        m: usize,
        omega: f64,
        detuning: f64,
    ) -> Result<Self> {
        if !m.is_multiple_of(2) {
            return Err(Error::invalid(
                "processors",
                format!("symmetric configuration needs an even node count, got {m}"),
            ));
        }
        let processors = (0..m)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                ProcessingNodeSpec::new(sign * detuning, omega)
            })
            .collect();
        Ok(Self::new(rates, memory, processors))
    }

    /// Memory node tuned to the first matching condition `Gamma_tot = gamma1 + gamma2`.
    pub fn matched(rates: RateParams, delta_in: f64, n_atoms: usize, processors: Vec<ProcessingNodeSpec>) -> Self {
        let memory =
            MemoryNodeSpec::with_absorption_rate(delta_in, rates.cavity_loss(), rates.gamma21, n_atoms);
        Self::new(rates, memory, processors)
    }

    /// Same network with a different inhomogeneous width, keeping the
    /// absorption rate `Gamma_tot` fixed.
    pub fn with_delta_in_at_fixed_absorption(&self, delta_in: f64) -> Self {
        let gamma_tot = self.derived().gamma_tot;
        let memory = MemoryNodeSpec::with_absorption_rate(
            delta_in,
            gamma_tot,
            self.rates.gamma21,
            self.memory.n_atoms,
        );
        Self {
            memory,
            ..self.clone()
        }
    }

    pub fn derived(&self) -> DerivedQuantities {
        derived_quantities(self)
    }

    /// True when detunings pair up as `Delta_{2i-1} = -Delta_{2i}` with equal couplings.
    pub fn is_symmetric(&self) -> bool {
        self.processors.len().is_multiple_of(2)
            && self.processors.chunks(2).all(|pair| {
                let (a, b) = (pair[0], pair[1]);
                a.detuning == -b.detuning && a.omega == b.omega
            })
    }

    /// Shifts every processing detuning by the common offset that makes the
    /// static cavity pull `sum Omega_m^2 / Delta_m` vanish.
    pub fn rebalanced(&self) -> Result<Self> {
        if self.processors.is_empty() {
            return Ok(self.clone());
        }
        let shift_at = |offset: f64| -> f64 {
            self.processors
                .iter()
                .map(|p| p.omega * p.omega / (p.detuning + offset))
                .sum()
        };
        // Bracket a zero between the poles nearest to zero offset.
        let mut poles: Vec<f64> = self.processors.iter().map(|p| -p.detuning).collect();
        poles.sort_by(f64::total_cmp);
        poles.dedup();
        let nearest = poles
            .windows(2)
            .filter(|w| w[0] <= 0.0 && 0.0 <= w[1])
            .map(|w| (w[0], w[1]))
            .next();
        let (lo, hi) = nearest.ok_or_else(|| {
            Error::invalid(
                "processors",
                "static shift cannot be compensated: all detunings share one sign",
            )
        })?;
        let span = hi - lo;
        let (mut a, mut b) = (lo + 1e-12 * span, hi - 1e-12 * span);
        let (mut fa, fb) = (shift_at(a), shift_at(b));
        if fa.signum() == fb.signum() {
            return Err(Error::invalid("processors", "no compensating offset between poles"));
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            let fm = shift_at(mid);
            if fm == 0.0 || (b - a) < 1e-15 * span {
                a = mid;
                b = mid;
                break;
            }
            if fm.signum() == fa.signum() {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        let offset = 0.5 * (a + b);
        let processors = self
            .processors
            .iter()
            .map(|p| ProcessingNodeSpec::new(p.detuning + offset, p.omega))
            .collect();
        Ok(Self {
            processors,
            ..self.clone()
        })
    }
}

/// Lineshape of a signal photon's spectral amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralShape {
    /// Amplitude `~ 1 / (nu^2 + dw^2)`, i.e. a two-sided exponential pulse in time.
    Lorentzian,
    /// Amplitude `~ exp(-nu^2 / (2 dw^2))`.
    Gaussian,
}

/// One temporal signal mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalModeSpec {
    pub arrival_time: f64,
    /// Spectral half-width.
    pub width: f64,
    pub shape: SpectralShape,
    /// Carrier offset from the cavity frequency.
    pub carrier: f64,
    /// Mean photon number carried by the mode.
    pub photons: f64,
}

impl SignalModeSpec {
    pub fn lorentzian(arrival_time: f64, width: f64) -> Self {
        Self {
            arrival_time,
            width,
            shape: SpectralShape::Lorentzian,
            carrier: 0.0,
            photons: 1.0,
        }
    }

    pub fn gaussian(arrival_time: f64, width: f64) -> Self {
        Self {
            shape: SpectralShape::Gaussian,
            ..Self::lorentzian(arrival_time, width)
        }
    }

    pub fn with_carrier(self, carrier: f64) -> Self {
        Self { carrier, ..self }
    }

    /// Normalized spectral amplitude `f(nu)`, real for zero carrier, with
    /// `integral |f|^2 dnu = 1`.
    pub fn amplitude(&self, nu: f64) -> f64 {
        let x = nu - self.carrier;
        let w = self.width;
        match self.shape {
            SpectralShape::Lorentzian => (2.0 * w.powi(3) / PI).sqrt() / (x * x + w * w),
            SpectralShape::Gaussian => (PI * w * w).powf(-0.25) * (-x * x / (2.0 * w * w)).exp(),
        }
    }

    /// Normalized spectral intensity `|f(nu)|^2`.
    pub fn intensity(&self, nu: f64) -> f64 {
        let f = self.amplitude(nu);
        f * f
    }

    /// Waveguide amplitude envelope `b_in(t) = (2 pi)^{-1/2} integral f(nu) e^{-i nu (t - t_k)} dnu`,
    /// without the carrier phase.
    pub fn envelope(&self, t: f64) -> f64 {
        let s = t - self.arrival_time;
        let w = self.width;
        match self.shape {
            SpectralShape::Lorentzian => w.sqrt() * (-w * s.abs()).exp(),
            SpectralShape::Gaussian => (w * w / PI).powf(0.25) * (-0.5 * w * w * s * s).exp(),
        }
    }

    /// Half-duration outside of which the pulse carries less than `fraction` of its energy.
    pub fn half_duration(&self, fraction: f64) -> f64 {
        let w = self.width;
        match self.shape {
            SpectralShape::Lorentzian => -fraction.ln() / (2.0 * w),
            // erfc(w s) < fraction; the Chernoff bound is enough here
            SpectralShape::Gaussian => (-fraction.ln()).sqrt() / w,
        }
    }
}

/// The rate every dimensionless quantity is expressed in.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSystem {
    pub reference_rate: f64,
    pub label: String,
}

impl UnitSystem {
    pub fn new(reference_rate: f64, label: impl Into<String>) -> Result<Self> {
        if !(reference_rate > 0.0) {
            return Err(Error::invalid("reference_rate", "must be positive"));
        }
        Ok(Self {
            reference_rate,
            label: label.into(),
        })
    }

    /// `gamma1 = 1` units used for the spectral-memory figures.
    pub fn gamma1() -> Self {
        Self {
            reference_rate: 1.0,
            label: "gamma1".into(),
        }
    }

    /// `Omega0 = 1` units used for the transfer figures.
    pub fn omega0() -> Self {
        Self {
            reference_rate: 1.0,
            label: "Omega0".into(),
        }
    }

    pub fn to_dimensionless(&self, physical: f64) -> f64 {
        physical / self.reference_rate
    }

    pub fn to_physical(&self, dimensionless: f64) -> f64 {
        dimensionless * self.reference_rate
    }

    /// Header annotation for a frequency-like column, e.g. `nu [gamma1]`.
    pub fn rate_column(&self, name: &str) -> String {
        format!("{name} [{}]", self.label)
    }

    /// Header annotation for a time-like column, e.g. `t [1/Omega0]`.
    pub fn time_column(&self, name: &str) -> String {
        format!("{name} [1/{}]", self.label)
    }
}

/// Quantities that follow from a [`NetworkSpec`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedQuantities {
    /// Photon absorption rate of the memory ensemble, `2 Omega0^2 / Delta_tot`.
    pub gamma_tot: f64,
    /// `Delta_in + gamma21`.
    pub delta_tot: f64,
    /// Number of temporal modes the memory can hold; `None` means unbounded.
    pub mode_capacity: Option<u64>,
}

pub fn derived_quantities(net: &NetworkSpec) -> DerivedQuantities {
    let delta_tot = net.memory.delta_in + net.rates.gamma21;
    let gamma_tot = 2.0 * net.memory.omega0 * net.memory.omega0 / delta_tot;
    let mode_capacity = if net.rates.gamma21 > 0.0 {
        Some((net.memory.delta_in / net.rates.gamma21).floor() as u64)
    } else {
        None
    };
    DerivedQuantities {
        gamma_tot,
        delta_tot,
        mode_capacity,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    /// A type invariant is broken; results are meaningless.
    Error,
    /// An approximation regime is not satisfied; results are unreliable.
    Warning,
}

/// One failed check from [`validate_network`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub parameter: String,
    pub condition: String,
    pub severity: Severity,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.parameter, self.condition)
    }
}

impl Violation {
    fn error(parameter: impl Into<String>, condition: impl Into<String>) -> Self {
        Self {
            parameter: parameter.into(),
            condition: condition.into(),
            severity: Severity::Error,
        }
    }

    fn warning(parameter: impl Into<String>, condition: impl Into<String>) -> Self {
        Self {
            parameter: parameter.into(),
            condition: condition.into(),
            severity: Severity::Warning,
        }
    }
}

/// Checks type invariants and, for each declared signal width, the
/// far-detuned regime `|Delta_m| >= 10 max(dw, gamma21)`.
pub fn validate_network(net: &NetworkSpec, signal_widths: &[f64]) -> Vec<Violation> {
    let mut out = Vec::new();
    let r = &net.rates;
    if !(r.gamma1 > 0.0) {
        out.push(Violation::error("gamma1", "must be positive"));
    }
    if !(r.gamma2 >= 0.0) {
        out.push(Violation::error("gamma2", "must be non-negative"));
    }
    if !(r.gamma21 >= 0.0) {
        out.push(Violation::error("gamma21", "must be non-negative"));
    }
    let m = &net.memory;
    if !(m.delta_in > 0.0) {
        out.push(Violation::error("delta_in", "must be positive"));
    }
    if !(m.omega0 > 0.0) {
        out.push(Violation::error("omega0", "must be positive"));
    }
    if m.n_atoms < 1 {
        out.push(Violation::error("n_atoms", "must be at least 1"));
    }
    if r.gamma21 > 0.0 && m.delta_in < FAR_DETUNED_RATIO * r.gamma21 {
        out.push(Violation::warning(
            "delta_in",
            "should exceed gamma21 by the far-detuned ratio",
        ));
    }
    for (i, p) in net.processors.iter().enumerate() {
        let node = i + 1;
        if !(p.omega >= 0.0) {
            out.push(Violation::error(format!("omega[{node}]"), "must be non-negative"));
        }
        if p.detuning == 0.0 {
            out.push(Violation::error(
                format!("detuning[{node}]"),
                "must be non-zero for an idle node",
            ));
            continue;
        }
        let narrowest_ok = signal_widths
            .iter()
            .chain(std::iter::once(&r.gamma21))
            .filter(|w| **w > 0.0)
            .all(|w| p.detuning.abs() >= FAR_DETUNED_RATIO * w);
        if !narrowest_ok {
            out.push(Violation::warning(
                "far-detuned regime",
                format!("violated for node {node}"),
            ));
        }
    }
    out
}
