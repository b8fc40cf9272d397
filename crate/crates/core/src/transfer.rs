//! Transfer of a rephased memory excitation into a resonant processing node.
//!
//! With the waveguide decoupled, the cavity field obeys a causal response
//! whose poles are the roots of
//!
//! ```text
//! P(nu) = nu^3 + i Din nu^2 - (Omega0^2 + Omega1^2) nu - i Omega1^2 Din
//! ```
//!
//! Substituting `nu = -i w` turns `P` into `i R(w)` with the real cubic
//! `R(w) = w^3 - Din w^2 + (Omega0^2 + Omega1^2) w - Omega1^2 Din`, so the
//! roots are either purely imaginary or come in mirror pairs `-S - i n`, `S - i n`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::{self, CardanoBranch};
use crate::quadrature::Quadrature;

/// Transfer window in units of the slowest decay time.
pub const WINDOW_DECAY_TIMES: f64 = 20.0;
/// Roots closer than this, relative to the root scale, count as repeated.
const DEGENERACY_TOL: f64 = 1e-7;
/// Relative real part below which a root counts as purely imaginary.
const IMAGINARY_TOL: f64 = 1e-12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Memory node broadening and the two collective couplings; the processing
/// node is resonant with the cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferConfig {
    pub delta_in: f64,
    pub omega0: f64,
    pub omega1: f64,
}

impl TransferConfig {
    pub fn new(delta_in: f64, omega0: f64, omega1: f64) -> Result<Self> {
        if !(delta_in > 0.0) {
            return Err(Error::invalid("delta_in", "must be positive"));
        }
        if !(omega0 >= 0.0) || !(omega1 >= 0.0) {
            return Err(Error::invalid("omega", "couplings must be non-negative"));
        }
        Ok(Self {
            delta_in,
            omega0,
            omega1,
        })
    }

    /// The figure configuration `Omega0 = 1`, `Omega1 = 0.3`.
    pub fn reference(delta_in: f64) -> Self {
        Self {
            delta_in,
            omega0: 1.0,
            omega1: 0.3,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            delta_in: s * self.delta_in,
            omega0: s * self.omega0,
            omega1: s * self.omega1,
        }
    }

    /// Coefficients of `P(nu)`, highest power first.
    pub fn characteristic_polynomial(&self) -> [Complex64; 4] {
        let d = self.delta_in;
        let w0 = self.omega0 * self.omega0;
        let w1 = self.omega1 * self.omega1;
        [c(1.0, 0.0), c(0.0, d), c(-(w0 + w1), 0.0), c(0.0, -w1 * d)]
    }

    /// Natural frequency scale, used for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.delta_in.max(self.omega0).max(self.omega1)
    }

    fn is_trivial(&self) -> bool {
        self.omega0 == 0.0 || self.omega1 == 0.0
    }
}

/// How the three roots are arranged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RootStructure {
    /// `nu1 = -i(Din - 2n)`, `nu2 = -S - i n`, `nu3 = S - i n` with `S > 0`.
    MirrorPair { s: f64, n: f64 },
    /// Three purely imaginary roots, ordered by decreasing imaginary part.
    Imaginary,
}

/// Closed-form data of the depressed real cubic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CardanoData {
    /// `Omega0^2 + Omega1^2 - Din^2/3`.
    pub p: f64,
    /// `Din [Omega1^2 + 2 Din^2/27 - (Omega0^2 + Omega1^2)/3]`.
    pub q: f64,
    /// `(p/3)^3 + (q/2)^2`.
    pub d: f64,
    pub branch: CardanoBranch,
    /// Present when the roots form a mirror pair.
    pub b: Option<f64>,
    pub s: Option<f64>,
    pub n: Option<f64>,
    /// Roots from the closed form, in the same labeling as [`CubicRoots::nu`].
    pub roots: [Complex64; 3],
}

/// Closed-form roots of the characteristic cubic.
pub fn cardano(cfg: &TransferConfig) -> CardanoData {
    let d = cfg.delta_in;
    let w0 = cfg.omega0 * cfg.omega0;
    let w1 = cfg.omega1 * cfg.omega1;
    let p = w0 + w1 - d * d / 3.0;
    let q = d * (w1 + 2.0 * d * d / 27.0 - (w0 + w1) / 3.0);
    // R(w) with w = Din/3 + y is y^3 + p y - q.
    let cubic = poly::solve_depressed_cubic(p, -q);
    let to_nu = |y: Complex64| c(0.0, -1.0) * (y + d / 3.0);
    let (b, s, n, roots) = if cubic.disc > 0.0 {
        let y1 = cubic.roots[0].re;
        let b = 1.5 * y1;
        let s = cubic.roots[2].im;
        let n = d / 3.0 - b / 3.0;
        let roots = [c(0.0, -(d - 2.0 * n)), c(-s, -n), c(s, -n)];
        (Some(b), Some(s), Some(n), roots)
    } else {
        let mut r = cubic.roots.map(to_nu);
        r.sort_by(|a, b| b.im.total_cmp(&a.im));
        (None, None, None, r)
    };
    CardanoData {
        p,
        q,
        d: cubic.disc,
        branch: cubic.branch,
        b,
        s,
        n,
        roots,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubicRoots {
    pub delta_in: f64,
    /// Roots in the labeling of [`RootStructure`].
    pub nu: [Complex64; 3],
    pub structure: RootStructure,
    pub cardano: CardanoData,
}

impl CubicRoots {
    /// `P'(nu_m) = prod_{m' != m} (nu_m - nu_m')`.
    pub fn derivative_at(&self, m: usize) -> Complex64 {
        (0..3)
            .filter(|&k| k != m)
            .map(|k| self.nu[m] - self.nu[k])
            .product()
    }

    pub fn min_separation(&self) -> f64 {
        let n = &self.nu;
        (n[0] - n[1]).norm().min((n[0] - n[2]).norm()).min((n[1] - n[2]).norm())
    }

    /// Slowest decay rate `min(-Im nu_m)`.
    pub fn slowest_rate(&self) -> f64 {
        self.nu.iter().map(|z| -z.im).fold(f64::INFINITY, f64::min)
    }

    fn check_distinct(&self, scale: f64) -> Result<()> {
        let sep = self.min_separation();
        if sep < DEGENERACY_TOL * scale {
            return Err(Error::DegenerateRoots {
                separation: sep,
                scale,
            });
        }
        Ok(())
    }
}

/// Roots of the characteristic cubic from the numerical solver, labeled as
/// in [`RootStructure`].
pub fn characteristic_roots(cfg: &TransferConfig) -> Result<CubicRoots> {
    let found = poly::roots(&cfg.characteristic_polynomial())?;
    let scale = cfg.scale();
    let mut nu = [found[0], found[1], found[2]];
    let paired: Vec<usize> = (0..3)
        .filter(|&i| nu[i].re.abs() > IMAGINARY_TOL * scale)
        .collect();
    let structure = if paired.len() == 2 {
        let single = (0..3).find(|i| !paired.contains(i)).expect("one unpaired root");
        let (mut lo, mut hi) = (nu[paired[0]], nu[paired[1]]);
        if lo.re > hi.re {
            std::mem::swap(&mut lo, &mut hi);
        }
        nu = [nu[single], lo, hi];
        RootStructure::MirrorPair {
            s: 0.5 * (hi.re - lo.re),
            n: -0.5 * (hi.im + lo.im),
        }
    } else {
        nu.sort_by(|a, b| b.im.total_cmp(&a.im));
        RootStructure::Imaginary
    };
    Ok(CubicRoots {
        delta_in: cfg.delta_in,
        nu,
        structure,
        cardano: cardano(cfg),
    })
}

/// Field response kernel `Gamma(tau)`; zero for `tau < 0`.
pub fn response_kernel(roots: &CubicRoots, tau: f64) -> Result<Complex64> {
    if tau < 0.0 {
        return Ok(c(0.0, 0.0));
    }
    roots.check_distinct(roots.nu.iter().map(|z| z.norm()).fold(0.0, f64::max))?;
    let d = roots.delta_in;
    Ok((0..3)
        .map(|m| {
            let z = roots.nu[m];
            z * (z + c(0.0, d)) * (c(0.0, -1.0) * z * tau).exp() / roots.derivative_at(m)
        })
        .sum())
}

/// Constants of the self-mode closed form, available when the roots form a mirror pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub f: f64,
    pub alpha: f64,
    pub s: f64,
    pub b: f64,
    pub n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfModeParams {
    /// Normalization sum; real and positive.
    pub k: f64,
    /// `sqrt(2 Din / K)` in collective units.
    pub xi: f64,
    pub closed_form: Option<ClosedForm>,
}

/// `K` from the root sum, with the consistency check on its imaginary part.
pub fn normalization(cfg: &TransferConfig, roots: &CubicRoots) -> Result<SelfModeParams> {
    roots.check_distinct(cfg.scale())?;
    let d = cfg.delta_in;
    let k: Complex64 = (0..3)
        .map(|n| {
            let z = roots.nu[n];
            let conj_prod: Complex64 = roots.nu.iter().map(|w| z - w.conj()).product();
            (z * z + d * d).powi(2) / (roots.derivative_at(n) * conj_prod)
        })
        .sum::<Complex64>()
        * c(0.0, -1.0);
    let ratio = k.im.abs() / k.norm();
    if !(ratio <= 1e-8) || !(k.re > 0.0) {
        return Err(Error::Normalization { ratio });
    }
    let closed_form = match roots.structure {
        RootStructure::MirrorPair { s, n } => {
            let b = d - 3.0 * n;
            let f = ((s * s + b * (d - n)).powi(2) + s * s * (d - n - b).powi(2)).sqrt();
            // The +pi branch makes the mode start with positive slope.
            let alpha = (s * (d - n - b)).atan2(s * s + b * (d - n)) + std::f64::consts::PI;
            Some(ClosedForm { f, alpha, s, b, n })
        }
        RootStructure::Imaginary => None,
    };
    Ok(SelfModeParams {
        k: k.re,
        xi: (2.0 * d / k.re).sqrt(),
        closed_form,
    })
}

/// The temporal self-mode `Phi(tau)` as a sum of damped exponentials.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfMode {
    pub cfg: TransferConfig,
    pub roots: CubicRoots,
    pub params: SelfModeParams,
    /// `Phi(tau) = sum_m amp_m e^{-i nu_m tau}` for `tau >= 0`.
    amp: [Complex64; 3],
    /// `Gamma(tau) = sum_m kern_m e^{-i nu_m tau}` for `tau >= 0`.
    kern: [Complex64; 3],
}

impl SelfMode {
    pub fn new(cfg: &TransferConfig) -> Result<Self> {
        if cfg.is_trivial() {
            return Err(Error::invalid(
                "omega",
                "the self-mode needs both couplings to be non-zero",
            ));
        }
        let roots = characteristic_roots(cfg)?;
        let params = normalization(cfg, &roots)?;
        let d = cfg.delta_in;
        let amp = [0, 1, 2].map(|m| {
            let z = roots.nu[m];
            c(0.0, 1.0) * (z + c(0.0, d)) / roots.derivative_at(m)
        });
        let kern = [0, 1, 2].map(|m| {
            let z = roots.nu[m];
            z * (z + c(0.0, d)) / roots.derivative_at(m)
        });
        Ok(Self {
            cfg: *cfg,
            roots,
            params,
            amp,
            kern,
        })
    }

    /// `Phi(tau)`, equal to `integral_0^tau Gamma`; zero for `tau < 0`.
    pub fn phi(&self, tau: f64) -> f64 {
        if tau < 0.0 {
            return 0.0;
        }
        self.amp
            .iter()
            .zip(&self.roots.nu)
            .map(|(a, z)| a * (c(0.0, -1.0) * z * tau).exp())
            .sum::<Complex64>()
            .re
    }

    /// `Phi(tau)` from the trigonometric closed form; `None` when the roots
    /// have no mirror pair.
    pub fn phi_closed_form(&self, tau: f64) -> Option<f64> {
        let cf = self.params.closed_form?;
        if tau < 0.0 {
            return Some(0.0);
        }
        let d = self.cfg.delta_in;
        let pre = cf.f / (cf.s * (cf.b * cf.b + cf.s * cf.s));
        Some(
            pre * ((cf.alpha - cf.s * tau).sin() * (-cf.n * tau).exp()
                - cf.alpha.sin() * (-(d - 2.0 * cf.n) * tau).exp()),
        )
    }

    pub fn kernel(&self, tau: f64) -> Complex64 {
        if tau < 0.0 {
            return c(0.0, 0.0);
        }
        self.kern
            .iter()
            .zip(&self.roots.nu)
            .map(|(a, z)| a * (c(0.0, -1.0) * z * tau).exp())
            .sum()
    }

    /// Spectral amplitude of the memory coherence, normalized with `xi`.
    pub fn spectrum(&self, nu: f64) -> Result<Complex64> {
        let d = self.cfg.delta_in;
        let z = c(nu, 0.0);
        let p = poly::polyval(&self.cfg.characteristic_polynomial(), z);
        if p.norm() == 0.0 {
            return Err(Error::Singular {
                nu,
                what: "root of the characteristic polynomial".into(),
            });
        }
        Ok(self.params.xi * (z + c(0.0, d)) * (nu * nu + d * d) / (2.0 * d * p))
    }

    /// Time after which the mode has decayed by `e^-20`.
    pub fn transfer_time(&self) -> f64 {
        WINDOW_DECAY_TIMES / self.roots.slowest_rate()
    }

    /// Cavity field at time `t` after the transfer starts, for a transfer
    /// completing at `window`:
    /// `a(t) = Omega0 xi integral_0^t Gamma(t - s) Phi(window - s) ds`.
    pub fn field(&self, t: f64, window: f64) -> Complex64 {
        if t <= 0.0 {
            return c(0.0, 0.0);
        }
        let mut sum = c(0.0, 0.0);
        for m in 0..3 {
            for l in 0..3 {
                let (zm, zl) = (self.roots.nu[m], self.roots.nu[l]);
                let i = c(0.0, 1.0);
                let e1 = (-i * zl * (window - t)).exp();
                let e2 = (-i * (zm * t + zl * window)).exp();
                sum += self.kern[m] * self.amp[l] * (e1 - e2) / (i * (zm + zl));
            }
        }
        self.cfg.omega0 * self.params.xi * sum
    }

    /// `integral_0^inf Phi^2` by adaptive quadrature.
    pub fn overlap(&self) -> Result<f64> {
        let window = self.transfer_time();
        let panels = 64;
        let breaks: Vec<f64> = (0..=panels).map(|i| window * i as f64 / panels as f64).collect();
        let q = Quadrature::with_tolerance(1e-14, 1e-13);
        let body = q.integrate_with_breaks(|t| self.phi(t).powi(2), &breaks)?.value;
        let tail = q.integrate_to_infinity(|t| self.phi(t).powi(2), window)?.value;
        Ok(body + tail)
    }
}

/// `Phi(tau)` together with the mode constants.
pub fn self_mode(cfg: &TransferConfig, tau: f64) -> Result<(f64, SelfModeParams)> {
    let mode = SelfMode::new(cfg)?;
    Ok((mode.phi(tau), mode.params))
}

/// Normalized spectral amplitude `f(nu)` of the self-mode coherence.
pub fn mode_spectrum(cfg: &TransferConfig, nu: f64) -> Result<Complex64> {
    SelfMode::new(cfg)?.spectrum(nu)
}

/// Field left in the cavity at the end of the transfer.
#[derive(Debug, Clone, PartialEq)]
pub struct Depopulation {
    /// `|a|` at the rephasing instant.
    pub residual: f64,
    /// Largest `|a|` during the transfer.
    pub peak: f64,
    pub transfer_time: f64,
}

/// Residual cavity field at the rephasing instant, from the analytic field trace.
pub fn cavity_depopulation(cfg: &TransferConfig) -> Result<Depopulation> {
    if cfg.is_trivial() {
        return Ok(Depopulation {
            residual: 0.0,
            peak: 0.0,
            transfer_time: 0.0,
        });
    }
    let mode = SelfMode::new(cfg)?;
    let window = mode.transfer_time();
    let samples = 4001;
    let peak = (0..samples)
        .map(|i| mode.field(window * i as f64 / (samples - 1) as f64, window).norm())
        .fold(0.0, f64::max);
    Ok(Depopulation {
        residual: mode.field(window, window).norm(),
        peak,
        transfer_time: window,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferResult {
    pub cfg: TransferConfig,
    pub roots: Option<CubicRoots>,
    pub params: Option<SelfModeParams>,
    /// `integral_0^inf Phi^2`.
    pub p1: f64,
    pub q1: f64,
    pub transfer_time: f64,
    /// `(tau, Phi(tau))` samples over the transfer window.
    pub mode_trace: Vec<(f64, f64)>,
    /// `(t, a(t))` samples over the transfer window.
    pub field_trace: Vec<(f64, Complex64)>,
}

/// Number of trace samples stored in a [`TransferResult`].
pub const TRACE_POINTS: usize = 201;

/// Transfer efficiency `Q1 = (2 Din / K) Omega0^2 Omega1^2 P1^2`.
pub fn transfer_efficiency(cfg: &TransferConfig) -> Result<TransferResult> {
    if cfg.is_trivial() {
        return Ok(TransferResult {
            cfg: *cfg,
            roots: None,
            params: None,
            p1: 0.0,
            q1: 0.0,
            transfer_time: 0.0,
            mode_trace: Vec::new(),
            field_trace: Vec::new(),
        });
    }
    let mode = SelfMode::new(cfg)?;
    let p1 = mode.overlap()?;
    let q1 = 2.0 * cfg.delta_in / mode.params.k
        * (cfg.omega0 * cfg.omega1 * p1).powi(2);
    let window = mode.transfer_time();
    let times = (0..TRACE_POINTS).map(|i| window * i as f64 / (TRACE_POINTS - 1) as f64);
    let mode_trace = times.clone().map(|t| (t, mode.phi(t))).collect();
    let field_trace = times.map(|t| (t, mode.field(t, window))).collect();
    Ok(TransferResult {
        cfg: *cfg,
        roots: Some(mode.roots.clone()),
        params: Some(mode.params),
        p1,
        q1,
        transfer_time: window,
        mode_trace,
        field_trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeDirection {
    Forward,
    Backward,
}

impl TimeDirection {
    pub fn reversed(self) -> Self {
        match self {
            Self::Forward => Self::Backward,
            Self::Backward => Self::Forward,
        }
    }
}

/// Snapshot of the transfer dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicalState {
    pub field: Complex64,
    /// Detunings of every oscillator (memory atoms and processing nodes).
    pub detunings: Vec<f64>,
    pub coherences: Vec<Complex64>,
    pub direction: TimeDirection,
}

/// `t -> -t`, `Delta -> -Delta`, `a -> -a`. Coherences are left unchanged.
///
/// Evolving the mapped state forward retraces the original evolution
/// backward, provided the cavity is lossless.
pub fn time_reversal_map(state: &DynamicalState) -> DynamicalState {
    DynamicalState {
        field: -state.field,
        detunings: state.detunings.iter().map(|d| -d).collect(),
        coherences: state.coherences.clone(),
        direction: state.direction.reversed(),
    }
}
