//! Direct time-domain integration of the linearized cavity equations over a
//! discretized ensemble.
//!
//! All amplitudes are c-numbers normalized so that `|a|^2 + sum |c_j|^2` is
//! the excitation number and `|b|^2` a photon flux.

mod ensemble;
pub mod phi;
mod schedule;
mod system;

use std::ops::Range;

use num_complex::Complex64;

pub use ensemble::{sample_ensemble, DiscretizedEnsemble};
pub use schedule::{Action, Event, Schedule};
pub use system::{CavitySystem, Scheme, StepReport};
use system::Stepper;

use crate::error::{Error, Result};
use crate::model::{NetworkSpec, SignalModeSpec};
use crate::transfer::{time_reversal_map, DynamicalState, SelfMode, TimeDirection, TransferConfig};

/// Relative excess of excitation over what was injected that counts as a blow-up.
const INSTABILITY_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub dt: f64,
    pub scheme: Scheme,
    /// Record a sample every this many steps.
    pub record_every: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            dt: 0.05,
            scheme: Scheme::Collocation,
            record_every: 1,
        }
    }
}

impl OracleOptions {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            ..Self::default()
        }
    }
}

/// A signal mode injected through the waveguide, with an amplitude factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputPulse {
    pub mode: SignalModeSpec,
    pub scale: f64,
}

impl InputPulse {
    pub fn new(mode: SignalModeSpec) -> Self {
        Self { mode, scale: 1.0 }
    }

    /// `b_in(t)`, the time-domain counterpart of the mode's spectral amplitude.
    pub fn amplitude(&self, t: f64) -> Complex64 {
        let m = &self.mode;
        self.scale * m.envelope(t) * Complex64::cis(-m.carrier * (t - m.arrival_time))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub field: Complex64,
    /// `sum |c_j|^2` per node: memory first, then each processing node.
    pub node_norms: Vec<f64>,
    /// Output amplitude `b_out`.
    pub output: Complex64,
    /// Cumulative injected photon number.
    pub input_energy: f64,
    /// Cumulative emitted photon number.
    pub output_energy: f64,
}

impl TrajectorySample {
    pub fn excitation(&self) -> f64 {
        self.field.norm_sqr() + self.node_norms.iter().sum::<f64>()
    }

    /// Excitation plus emitted minus injected photons; constant without losses.
    pub fn balance(&self) -> f64 {
        self.excitation() + self.output_energy - self.input_energy
    }
}

/// Snapshot of the full state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryState {
    pub time: f64,
    pub field: Complex64,
    pub coherences: Vec<Complex64>,
    pub detunings: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub final_state: TrajectoryState,
    pub initial_excitation: f64,
    /// Node names in the order of [`TrajectorySample::node_norms`].
    pub node_labels: Vec<String>,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectories always hold the initial sample")
    }

    /// Photons emitted in `(t0, t1]`, from the cumulative record.
    pub fn emitted_between(&self, t0: f64, t1: f64) -> f64 {
        let at = |t: f64| {
            self.samples
                .iter()
                .take_while(|s| s.t <= t + 1e-9)
                .last()
                .map_or(0.0, |s| s.output_energy)
        };
        at(t1) - at(t0)
    }

    /// Sample with the largest `|b_out|` after `t`.
    pub fn output_peak_after(&self, t: f64) -> Option<&TrajectorySample> {
        self.samples
            .iter()
            .filter(|s| s.t > t)
            .max_by(|a, b| a.output.norm().total_cmp(&b.output.norm()))
    }

    /// Largest relative violation of excitation balance across the samples.
    pub fn max_balance_error(&self) -> f64 {
        let scale = self
            .initial_excitation
            .max(self.last().input_energy)
            .max(f64::MIN_POSITIVE);
        self.samples
            .iter()
            .map(|s| (s.balance() - self.initial_excitation).abs() / scale)
            .fold(0.0, f64::max)
    }
}

/// Oscillator layout: the memory ensemble followed by single-atom processing nodes.
struct Layout {
    memory: Range<usize>,
    total: usize,
}

impl Layout {
    fn norms(&self, c: &[Complex64]) -> Vec<f64> {
        let mut out = vec![c[self.memory.clone()].iter().map(|z| z.norm_sqr()).sum()];
        out.extend(c[self.memory.end..self.total].iter().map(|z| z.norm_sqr()));
        out
    }

    fn labels(&self) -> Vec<String> {
        let mut out = vec!["memory".to_string()];
        out.extend((1..=self.total - self.memory.end).map(|m| format!("node{m}")));
        out
    }
}

fn apply(action: Action, sys: &mut CavitySystem, layout: &Layout, a: &mut Complex64) -> Result<()> {
    let proc_index = |node: usize| -> Result<usize> {
        let idx = layout.memory.end + node;
        if idx >= layout.total {
            return Err(Error::Schedule(format!("no processing node {node}")));
        }
        Ok(idx)
    };
    match action {
        Action::CribFlip => {
            for d in &mut sys.detunings[layout.memory.clone()] {
                *d = -*d;
            }
        }
        Action::SetNodeDetuning { node, detuning } => {
            let i = proc_index(node)?;
            sys.detunings[i] = detuning;
        }
        Action::DecoupleWaveguide => sys.gamma1 = 0.0,
        Action::CoupleNode { node, omega } => {
            let i = proc_index(node)?;
            sys.couplings[i] = omega;
        }
        Action::Reversal => {
            let mapped = time_reversal_map(&DynamicalState {
                field: *a,
                detunings: sys.detunings.clone(),
                coherences: Vec::new(),
                direction: TimeDirection::Forward,
            });
            *a = mapped.field;
            sys.detunings = mapped.detunings;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn evolve(
    mut sys: CavitySystem,
    layout: Layout,
    mut a: Complex64,
    mut c: Vec<Complex64>,
    input: Option<&InputPulse>,
    schedule: &Schedule,
    t_start: f64,
    t_end: f64,
    extra_breaks: &[f64],
    opts: &OracleOptions,
) -> Result<Trajectory> {
    if !(opts.dt > 0.0) || opts.record_every == 0 {
        return Err(Error::invalid("dt", "step and record interval must be positive"));
    }
    if !(t_end > t_start) {
        return Err(Error::invalid("t_end", "must exceed the start time"));
    }
    let mut breaks: Vec<f64> = schedule
        .events()
        .iter()
        .map(|e| e.time)
        .chain(extra_breaks.iter().copied())
        .filter(|&t| t > t_start && t < t_end)
        .collect();
    breaks.push(t_end);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let b_in = |t: f64| input.map_or(Complex64::new(0.0, 0.0), |p| p.amplitude(t));
    let initial_excitation = a.norm_sqr() + c.iter().map(|z| z.norm_sqr()).sum::<f64>();
    // Photons the whole pulse will carry; sets the scale for the blow-up test.
    let pulse_energy = input.map_or(0.0, |p| p.scale * p.scale);
    let mut samples = vec![TrajectorySample {
        t: t_start,
        field: a,
        node_norms: layout.norms(&c),
        output: b_in(t_start) - sys.gamma1.sqrt() * a,
        input_energy: 0.0,
        output_energy: 0.0,
    }];
    let mut e_in = 0.0;
    let mut e_out = 0.0;
    let mut t = t_start;
    let mut step_count = 0usize;
    let mut pending = schedule.events().iter().peekable();
    let mut stepper: Option<Stepper> = None;

    for &seg_end in &breaks {
        let mut changed = false;
        while let Some(ev) = pending.peek() {
            if ev.time > t + 1e-12 {
                break;
            }
            if ev.time >= t_start - 1e-12 {
                apply(ev.action, &mut sys, &layout, &mut a)?;
                changed = true;
            }
            pending.next();
        }
        let len = seg_end - t;
        let n_steps = ((len / opts.dt) - 1e-9).ceil().max(1.0) as usize;
        let h = len / n_steps as f64;
        let rebuild = changed || stepper.as_ref().is_none_or(|s| (s.h() - h).abs() > 1e-15 * h);
        if rebuild {
            stepper = Some(
                Stepper::new(&sys, h, opts.scheme)
                    .ok_or_else(|| Error::invalid("dt", "singular collocation system"))?,
            );
        }
        let st = stepper.as_ref().expect("stepper built above");
        let seg_start = t;
        for k in 0..n_steps {
            let t0 = seg_start + k as f64 * h;
            let report = st.step(t0, &mut a, &mut c, &b_in);
            e_in += report.input_energy;
            e_out += report.output_energy;
            t = if k + 1 == n_steps { seg_end } else { t0 + h };
            step_count += 1;
            let excitation = a.norm_sqr() + c.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let reference = initial_excitation.max(pulse_energy).max(f64::MIN_POSITIVE);
            let total = excitation + e_out - e_in;
            if !total.is_finite() || total - initial_excitation > INSTABILITY_TOL * reference {
                return Err(Error::Unstable {
                    time: t,
                    from: initial_excitation,
                    to: total,
                });
            }
            if step_count.is_multiple_of(opts.record_every) || (k + 1 == n_steps && seg_end == t_end) {
                samples.push(TrajectorySample {
                    t,
                    field: a,
                    node_norms: layout.norms(&c),
                    output: report.output,
                    input_energy: e_in,
                    output_energy: e_out,
                });
            }
        }
    }
    // Events scheduled exactly at the end still apply to the final state.
    for ev in pending {
        if ev.time <= t_end + 1e-12 {
            apply(ev.action, &mut sys, &layout, &mut a)?;
        }
    }

    Ok(Trajectory {
        samples,
        final_state: TrajectoryState {
            time: t,
            field: a,
            coherences: c,
            detunings: sys.detunings,
        },
        initial_excitation,
        node_labels: layout.labels(),
    })
}

/// Memory ensemble of a network, sampled with its own atom count.
pub fn memory_ensemble(net: &NetworkSpec) -> Result<DiscretizedEnsemble> {
    sample_ensemble(net.memory.delta_in, net.memory.omega0, net.memory.n_atoms)
}

fn network_system(net: &NetworkSpec, ensemble: &DiscretizedEnsemble) -> (CavitySystem, Layout) {
    let n = ensemble.size();
    let mut detunings = ensemble.detunings.clone();
    let mut couplings = ensemble.couplings();
    for p in &net.processors {
        detunings.push(p.detuning);
        couplings.push(p.omega);
    }
    let total = detunings.len();
    (
        CavitySystem {
            gamma1: net.rates.gamma1,
            gamma2: net.rates.gamma2,
            gamma21: net.rates.gamma21,
            detunings,
            couplings,
        },
        Layout {
            memory: 0..n,
            total,
        },
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct StorageRun {
    pub trajectory: Trajectory,
    /// Memory-node excitation at the end of the run.
    pub stored_population: f64,
    pub input_energy: f64,
    /// `stored_population / input_energy`.
    pub storage_efficiency: f64,
}

/// Runs the memory from an empty cavity and ground-state atoms.
pub fn integrate_storage(
    net: &NetworkSpec,
    ensemble: &DiscretizedEnsemble,
    input: Option<&InputPulse>,
    schedule: &Schedule,
    t_end: f64,
    opts: &OracleOptions,
) -> Result<StorageRun> {
    let (sys, layout) = network_system(net, ensemble);
    let c = vec![Complex64::new(0.0, 0.0); layout.total];
    let kinks: Vec<f64> = input.iter().map(|p| p.mode.arrival_time).collect();
    let trajectory = evolve(
        sys,
        layout,
        Complex64::new(0.0, 0.0),
        c,
        input,
        schedule,
        0.0,
        t_end,
        &kinks,
        opts,
    )?;
    let last = trajectory.last();
    let stored_population = last.node_norms[0];
    let input_energy = last.input_energy;
    let storage_efficiency = if input_energy > 0.0 {
        stored_population / input_energy
    } else {
        0.0
    };
    Ok(StorageRun {
        stored_population,
        input_energy,
        storage_efficiency,
        trajectory,
    })
}

/// Drives the memory with a continuous wave `e^{-i nu t}` switched on at
/// `t = 0` and returns `a(t_probe) / b_in(t_probe)`.
pub fn probe_response(
    net: &NetworkSpec,
    ensemble: &DiscretizedEnsemble,
    nu: f64,
    t_probe: f64,
    opts: &OracleOptions,
) -> Result<Complex64> {
    let (sys, layout) = network_system(net, ensemble);
    let c = vec![Complex64::new(0.0, 0.0); layout.total];
    let g1 = sys.gamma1.sqrt();
    // A zero-width "mode" is not representable, so drive through a custom input.
    let probe = ContinuousWave { nu };
    let trajectory = evolve_with(sys, layout, c, &probe, t_probe, opts)?;
    let out = trajectory.last();
    let b = probe.amplitude(t_probe);
    // b_out = b_in - sqrt(g1) a
    Ok((b - out.output) / (g1 * b))
}

struct ContinuousWave {
    nu: f64,
}

impl ContinuousWave {
    fn amplitude(&self, t: f64) -> Complex64 {
        if t < 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::cis(-self.nu * t)
        }
    }
}

fn evolve_with(
    sys: CavitySystem,
    layout: Layout,
    c: Vec<Complex64>,
    probe: &ContinuousWave,
    t_end: f64,
    opts: &OracleOptions,
) -> Result<Trajectory> {
    let n_steps = (t_end / opts.dt).ceil().max(1.0) as usize;
    let h = t_end / n_steps as f64;
    let stepper = Stepper::new(&sys, h, opts.scheme)
        .ok_or_else(|| Error::invalid("dt", "singular collocation system"))?;
    let mut a = Complex64::new(0.0, 0.0);
    let mut c = c;
    let drive = |t: f64| probe.amplitude(t);
    let mut last = None;
    for k in 0..n_steps {
        last = Some(stepper.step(k as f64 * h, &mut a, &mut c, &drive));
    }
    let report = last.expect("at least one step");
    Ok(Trajectory {
        samples: vec![TrajectorySample {
            t: t_end,
            field: a,
            node_norms: layout.norms(&c),
            output: report.output,
            input_energy: 0.0,
            output_energy: 0.0,
        }],
        final_state: TrajectoryState {
            time: t_end,
            field: a,
            coherences: c,
            detunings: sys.detunings,
        },
        initial_excitation: 0.0,
        node_labels: layout.labels(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferRun {
    pub trajectory: Trajectory,
    /// Processing-node excitation at the end, `N1 |S1|^2`.
    pub q1: f64,
    /// `|a|` at the end of the run.
    pub residual_field: f64,
    /// Largest recorded `|a|`.
    pub peak_field: f64,
}

fn transfer_system(cfg: &TransferConfig, ensemble: &DiscretizedEnsemble) -> (CavitySystem, Layout) {
    let n = ensemble.size();
    let mut detunings = ensemble.detunings.clone();
    detunings.push(0.0);
    let mut couplings = ensemble.couplings();
    couplings.push(cfg.omega1);
    (
        CavitySystem {
            gamma1: 0.0,
            gamma2: 0.0,
            gamma21: 0.0,
            detunings,
            couplings,
        },
        Layout {
            memory: 0..n,
            total: n + 1,
        },
    )
}

/// Runs the transfer from a given memory coherence, with the waveguide
/// decoupled and the processing node resonant and empty.
pub fn integrate_transfer(
    cfg: &TransferConfig,
    ensemble: &DiscretizedEnsemble,
    initial_coherence: &[Complex64],
    schedule: &Schedule,
    t_end: f64,
    opts: &OracleOptions,
) -> Result<TransferRun> {
    if initial_coherence.len() != ensemble.size() {
        return Err(Error::invalid(
            "initial_coherence",
            format!("expected {} amplitudes, got {}", ensemble.size(), initial_coherence.len()),
        ));
    }
    let (sys, layout) = transfer_system(cfg, ensemble);
    let mut c = initial_coherence.to_vec();
    c.push(Complex64::new(0.0, 0.0));
    let trajectory = evolve(
        sys,
        layout,
        Complex64::new(0.0, 0.0),
        c,
        None,
        schedule,
        0.0,
        t_end,
        &[],
        opts,
    )?;
    Ok(transfer_run(trajectory))
}

fn transfer_run(trajectory: Trajectory) -> TransferRun {
    let last = trajectory.last();
    let q1 = *last.node_norms.last().expect("transfer layout has a processing node");
    let residual_field = last.field.norm();
    let peak_field = trajectory
        .samples
        .iter()
        .map(|s| s.field.norm())
        .fold(0.0, f64::max);
    TransferRun {
        q1,
        residual_field,
        peak_field,
        trajectory,
    }
}

/// Memory coherence that rephases into the self-mode at `window`:
/// `c_j ~ f(-Delta_j) e^{i Delta_j window}`, normalized to one excitation.
pub fn self_mode_coherence(
    mode: &SelfMode,
    ensemble: &DiscretizedEnsemble,
    window: f64,
) -> Result<Vec<Complex64>> {
    let mut c = ensemble
        .detunings
        .iter()
        .map(|&d| Ok(mode.spectrum(-d)? * Complex64::cis(d * window)))
        .collect::<Result<Vec<_>>>()?;
    let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut c {
        *z /= norm;
    }
    Ok(c)
}

/// Samples the memory ensemble, prepares the self-mode coherence and runs
/// the transfer over the analytic transfer window.
pub fn transfer_oracle(cfg: &TransferConfig, n_atoms: usize, opts: &OracleOptions) -> Result<TransferRun> {
    let ensemble = sample_ensemble(cfg.delta_in, cfg.omega0, n_atoms)?;
    let mode = SelfMode::new(cfg)?;
    let window = mode.transfer_time();
    let c0 = self_mode_coherence(&mode, &ensemble, window)?;
    integrate_transfer(cfg, &ensemble, &c0, &Schedule::empty(), window, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reversibility {
    /// `|<c_initial, c_recovered>|^2` over the memory atoms.
    pub fidelity: f64,
    /// Processing-node excitation after the forward run.
    pub forward_q1: f64,
    /// `|a|` at the reversal instant.
    pub field_at_reversal: f64,
}

/// Forward transfer, reversal map at the rephasing instant, then forward
/// evolution for the same duration. With `flip_field = false` the cavity
/// field keeps its sign at the reversal.
pub fn reversibility_check(
    cfg: &TransferConfig,
    n_atoms: usize,
    opts: &OracleOptions,
    flip_field: bool,
) -> Result<Reversibility> {
    let ensemble = sample_ensemble(cfg.delta_in, cfg.omega0, n_atoms)?;
    let (c0, window) = match SelfMode::new(cfg) {
        Ok(mode) => {
            let window = mode.transfer_time();
            (self_mode_coherence(&mode, &ensemble, window)?, window)
        }
        // Without coupling there is no self-mode; any profile will do.
        Err(_) => (
            vec![Complex64::new((n_atoms as f64).recip().sqrt(), 0.0); n_atoms],
            crate::transfer::WINDOW_DECAY_TIMES / cfg.delta_in,
        ),
    };
    let forward = integrate_transfer(cfg, &ensemble, &c0, &Schedule::empty(), window, opts)?;
    let state = &forward.trajectory.final_state;
    let mapped = time_reversal_map(&DynamicalState {
        field: state.field,
        detunings: state.detunings.clone(),
        coherences: state.coherences.clone(),
        direction: TimeDirection::Forward,
    });
    let field = if flip_field { mapped.field } else { state.field };

    let (mut sys, layout) = transfer_system(cfg, &ensemble);
    sys.detunings = mapped.detunings;
    let back = evolve(
        sys,
        layout,
        field,
        mapped.coherences,
        None,
        &Schedule::empty(),
        0.0,
        window,
        &[],
        opts,
    )?;
    let recovered = &back.final_state.coherences[..n_atoms];
    let overlap: Complex64 = c0.iter().zip(recovered).map(|(x, y)| x.conj() * y).sum();
    Ok(Reversibility {
        fidelity: overlap.norm_sqr(),
        forward_q1: forward.q1,
        field_at_reversal: state.field.norm(),
    })
}
