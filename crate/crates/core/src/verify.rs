//! Self-checks comparing the closed forms with each other and with the
//! time-domain oracle. Used by the `verify` command.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::model::{MemoryNodeSpec, NetworkSpec, RateParams, SignalModeSpec};
use crate::oracle::{
    integrate_storage, memory_ensemble, reversibility_check, transfer_oracle, InputPulse, OracleOptions, Schedule,
    StorageRun,
};
use crate::quadrature::Quadrature;
use crate::spectral::{
    bandwidth_metric, matched_spectral_efficiency, retrieval_efficiency_mode, spectral_efficiency,
    storage_efficiency_mode, SpectralResponse, DEFAULT_GRID_POINTS,
};
use crate::sweep::{fig1_network, figure_dataset, transfer_threshold, FigureId, FIG1_NODE_COUNTS};
use crate::transfer::{
    cavity_depopulation, characteristic_roots, time_reversal_map, transfer_efficiency, DynamicalState, SelfMode,
    TimeDirection, TransferConfig,
};

/// Outcome of one check: `value` compared against `reference` within `tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn within(name: &'static str, value: f64, reference: f64, tolerance: f64) -> Self {
        Self {
            name,
            value,
            reference,
            tolerance,
            passed: (value - reference).abs() <= tolerance,
            detail: String::new(),
        }
    }

    /// Passes when `value <= bound`.
    fn at_most(name: &'static str, value: f64, bound: f64) -> Self {
        Self {
            name,
            value,
            reference: bound,
            tolerance: 0.0,
            passed: value <= bound,
            detail: String::new(),
        }
    }

    /// Passes when `value >= bound`.
    fn at_least(name: &'static str, value: f64, bound: f64) -> Self {
        Self {
            name,
            value,
            reference: bound,
            tolerance: 0.0,
            passed: value >= bound,
            detail: String::new(),
        }
    }

    fn holds(name: &'static str, ok: bool, detail: String) -> Self {
        Self {
            name,
            value: f64::from(u8::from(ok)),
            reference: 1.0,
            tolerance: 0.0,
            passed: ok,
            detail,
        }
    }

    fn with_detail(mut self, detail: String) -> Self {
        self.detail = detail;
        self
    }

    fn failed(name: &'static str, err: &crate::Error) -> Self {
        Self {
            name,
            value: f64::NAN,
            reference: f64::NAN,
            tolerance: 0.0,
            passed: false,
            detail: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub atoms: usize,
    pub oracle: OracleOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            atoms: 4001,
            oracle: OracleOptions::default(),
        }
    }
}

/// Matched memory with `m` symmetric idle nodes at coupling ratio `ratio`.
fn matched(m: usize, ratio: f64, gamma2: f64) -> Result<NetworkSpec> {
    let base = fig1_network(m, ratio)?;
    let rates = RateParams::new(1.0, gamma2, 0.0);
    Ok(NetworkSpec::matched(rates, base.memory.delta_in, 1, base.processors))
}

/// Least-squares slope of `log(1 - Z)` against `log nu` on `[1e-3, 1e-2]`.
pub fn deficit_slope(net: &NetworkSpec) -> f64 {
    let pts: Vec<(f64, f64)> = (0..=20)
        .map(|i| {
            let nu = 10f64.powf(-3.0 + i as f64 / 20.0);
            (nu.ln(), (1.0 - spectral_efficiency(net, nu)).ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Memory with `Gamma_tot = gamma_tot` and a given atom count, lossless cavity.
pub fn storage_network(delta_in: f64, gamma_tot: f64, atoms: usize) -> NetworkSpec {
    NetworkSpec::new(
        RateParams::lossless(1.0),
        MemoryNodeSpec::with_absorption_rate(delta_in, gamma_tot, 0.0, atoms),
        vec![],
    )
}

/// Narrowband pulse arriving late enough that the truncated leading edge carries
/// less than `1e-6` of its energy.
pub fn narrowband_pulse(width: f64) -> SignalModeSpec {
    SignalModeSpec::lorentzian(7.0 / width, width)
}

/// Stores a pulse and returns the run together with its analytic counterpart.
pub fn storage_run(net: &NetworkSpec, mode: SignalModeSpec, opts: &OracleOptions) -> Result<(StorageRun, f64)> {
    let ens = memory_ensemble(net)?;
    let run = integrate_storage(
        net,
        &ens,
        Some(&InputPulse::new(mode)),
        &Schedule::empty(),
        2.0 * mode.arrival_time,
        opts,
    )?;
    Ok((run, storage_efficiency_mode(net, &mode)?))
}

/// Storage, detuning flip at `tau`, echo. Returns the run, echo energy over
/// input energy, the output peak time after `tau`, and the analytic retrieval
/// efficiency.
pub struct EchoOutcome {
    pub run: StorageRun,
    pub efficiency: f64,
    pub peak_time: f64,
    pub analytic: f64,
}

pub fn echo_run(net: &NetworkSpec, mode: SignalModeSpec, tau: f64, t_end: f64, opts: &OracleOptions) -> Result<EchoOutcome> {
    let ens = memory_ensemble(net)?;
    let run = integrate_storage(
        net,
        &ens,
        Some(&InputPulse::new(mode)),
        &Schedule::crib_at(tau),
        t_end,
        opts,
    )?;
    let echo = run.trajectory.emitted_between(tau, t_end);
    let peak_time = run.trajectory.output_peak_after(tau).map_or(f64::NAN, |s| s.t);
    Ok(EchoOutcome {
        efficiency: echo / run.input_energy,
        peak_time,
        analytic: retrieval_efficiency_mode(net, &mode, tau)?,
        run,
    })
}

/// Standard echo scenario: four idle nodes at coupling ratio 0.25, optimal
/// broadening, `dw = 0.05`, arrival 140, flip at 300.
pub fn standard_echo(atoms: usize, carrier: f64, opts: &OracleOptions) -> Result<EchoOutcome> {
    let base = fig1_network(4, 0.25)?;
    let mut net = NetworkSpec::matched(base.rates, base.memory.delta_in, atoms, base.processors);
    net.memory.n_atoms = atoms;
    let mode = SignalModeSpec::lorentzian(140.0, 0.05).with_carrier(carrier);
    echo_run(&net, mode, 300.0, 600.0, opts)
}

/// Mean frequency of `b(t)` in the `e^{-i nu t}` convention over `[t0, t1]`.
pub fn mean_frequency(samples: &[(f64, Complex64)]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for w in samples.windows(2) {
        let (t0, b0) = w[0];
        let (t1, b1) = w[1];
        let mid = 0.5 * (b0 + b1);
        let db = (b1 - b0) / (t1 - t0);
        num += -(mid.conj() * db).im * (t1 - t0);
        den += mid.norm_sqr() * (t1 - t0);
    }
    num / den
}

fn run_check(name: &'static str, f: impl FnOnce() -> Result<Vec<Check>>) -> Vec<Check> {
    f().unwrap_or_else(|e| vec![Check::failed(name, &e)])
}

type CheckFn = Box<dyn Fn(&VerifyOptions) -> Vec<Check> + Sync + Send>;

fn suite() -> Vec<CheckFn> {
    vec![
        Box::new(|_| {
            run_check("matched peak", || {
                let worst = FIG1_NODE_COUNTS
                    .iter()
                    .map(|&m| Ok((spectral_efficiency(&matched(m, 0.25, 0.0)?, 0.0) - 1.0).abs()))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .fold(0.0, f64::max);
                Ok(vec![Check::at_most("matched peak", worst, 1e-12)])
            })
        }),
        Box::new(|_| {
            run_check("flatness exponent", || {
                let at_opt = matched(4, 0.25, 0.0)?;
                let off = at_opt.with_delta_in_at_fixed_absorption(2.0 * at_opt.memory.delta_in);
                Ok(vec![
                    Check::within("flatness exponent at optimum", deficit_slope(&at_opt), 4.0, 0.1),
                    Check::within("flatness exponent off optimum", deficit_slope(&off), 2.0, 0.1),
                ])
            })
        }),
        Box::new(|_| {
            run_check("matched form identity", || {
                let mut worst: f64 = 0.0;
                for (m, g2) in [(0, 0.0), (4, 0.1), (16, 0.3)] {
                    let net = matched(m, 0.25, g2)?;
                    for i in 0..DEFAULT_GRID_POINTS {
                        let nu = -2.0 + 4.0 * i as f64 / (DEFAULT_GRID_POINTS - 1) as f64;
                        worst = worst.max((spectral_efficiency(&net, nu) - matched_spectral_efficiency(&net, nu)).abs());
                    }
                }
                Ok(vec![Check::at_most("matched form identity", worst, 1e-12)])
            })
        }),
        Box::new(|_| {
            run_check("bandwidth vs node count", || {
                let widths = |ratio: f64| -> Result<Vec<f64>> {
                    FIG1_NODE_COUNTS
                        .iter()
                        .map(|&m| {
                            let net = fig1_network(m, ratio)?;
                            bandwidth_metric(&SpectralResponse::sample_default(&net, 0.05)?, 0.99)
                        })
                        .collect()
                };
                let strong = widths(0.4)?;
                let weak = widths(0.1)?;
                Ok(vec![
                    Check::holds(
                        "bandwidth decreases with node count",
                        strong.windows(2).all(|w| w[1] < w[0]),
                        format!("{strong:?}"),
                    ),
                    Check::at_least("weak-coupling bandwidth ratio", weak[4] / weak[0], 0.8),
                ])
            })
        }),
        Box::new(|o| {
            run_check("oracle storage", || {
                let mut out = Vec::new();
                for (name, gamma_tot, expected) in [
                    ("oracle storage matched", 1.0, 1.0),
                    ("oracle storage mismatched", 0.5, 8.0 / 9.0),
                ] {
                    let net = storage_network(0.5, gamma_tot, o.atoms);
                    let (run, analytic) = storage_run(&net, narrowband_pulse(0.01), &o.oracle)?;
                    out.push(
                        Check::within(name, run.storage_efficiency, expected, 0.01 * expected)
                            .with_detail(format!("analytic {analytic:.9}")),
                    );
                }
                Ok(out)
            })
        }),
        Box::new(|o| {
            run_check("oracle echo", || {
                let e = standard_echo(o.atoms, 0.0, &o.oracle)?;
                let dt = o.oracle.dt * o.oracle.record_every as f64;
                let asym = standard_echo(o.atoms, 0.1, &o.oracle)?;
                let trace = |lo: f64, hi: f64| -> Vec<(f64, Complex64)> {
                    asym.run
                        .trajectory
                        .samples
                        .iter()
                        .filter(|s| s.t > lo && s.t < hi)
                        .map(|s| (s.t, s.output))
                        .collect()
                };
                let input_pulse = InputPulse::new(SignalModeSpec::lorentzian(140.0, 0.05).with_carrier(0.1));
                let input: Vec<(f64, Complex64)> = (0..=6000)
                    .map(|i| {
                        let t = 0.05 * i as f64;
                        (t, input_pulse.amplitude(t))
                    })
                    .collect();
                let f_in = mean_frequency(&input);
                let f_echo = mean_frequency(&trace(300.0, 600.0));
                Ok(vec![
                    Check::within("oracle echo efficiency", e.efficiency, e.analytic, 0.02 * e.analytic),
                    Check::within("echo peak time", e.peak_time, 2.0 * 300.0 - 140.0, dt),
                    Check::within("echo spectrum mirrored", f_echo, -f_in, 0.05 * f_in.abs())
                        .with_detail(format!("input {f_in:.6}, echo {f_echo:.6}")),
                ])
            })
        }),
        Box::new(|_| {
            run_check("root invariants", || {
                let mut residual: f64 = 0.0;
                let mut sum_err: f64 = 0.0;
                let mut max_im = f64::NEG_INFINITY;
                for i in 0..10 {
                    for j in 0..10 {
                        let d = 0.2 + 9.8 * i as f64 / 9.0;
                        let w1 = 0.05 + 0.95 * j as f64 / 9.0;
                        let cfg = TransferConfig::new(d, 1.0, w1)?;
                        let r = characteristic_roots(&cfg)?;
                        let p = cfg.characteristic_polynomial();
                        let s3 = cfg.scale().powi(3);
                        for z in r.nu {
                            residual = residual.max(crate::poly::polyval(&p, z).norm() / s3);
                            max_im = max_im.max(z.im);
                        }
                        let sum: Complex64 = r.nu.iter().sum();
                        sum_err = sum_err.max((sum + Complex64::new(0.0, d)).norm());
                    }
                }
                Ok(vec![
                    Check::at_most("root residual", residual, 1e-10),
                    Check::at_most("root sum rule", sum_err, 1e-12),
                    Check::holds("roots decay", max_im < 0.0, format!("largest imaginary part {max_im:e}")),
                ])
            })
        }),
        Box::new(|_| {
            run_check("self-mode", || {
                let cfg = TransferConfig::reference(1.0);
                let mode = SelfMode::new(&cfg)?;
                let d = cfg.delta_in;
                let q = Quadrature::with_tolerance(1e-13, 1e-12);
                let weight = |nu: f64| {
                    d / (std::f64::consts::PI * (nu * nu + d * d)) * mode.spectrum(nu).map_or(0.0, |f| f.norm_sqr())
                };
                let norm = q.integrate_from_neg_infinity(weight, 0.0)?.value + q.integrate_to_infinity(weight, 0.0)?.value;
                let mut worst: f64 = 0.0;
                for k in 1..=40 {
                    let tau = 0.5 * k as f64;
                    let integral = q.integrate(|s| mode.kernel(s).re, 0.0, tau)?.value;
                    worst = worst.max((integral - mode.phi(tau)).abs());
                }
                let causal = mode.phi(-0.5) == 0.0 && mode.phi(-1e-300) == 0.0;
                Ok(vec![
                    Check::holds("self-mode causal", causal, String::new()),
                    Check::within("self-mode normalization", norm, 1.0, 1e-9),
                    Check::at_most("self-mode from kernel", worst, 1e-6),
                ])
            })
        }),
        Box::new(|o| {
            run_check("transfer", || {
                let q = figure_dataset(FigureId::Fig4)?.column("Q1").unwrap_or_default();
                let threshold = transfer_threshold(1.0, 0.3, 0.9999, 0.2, 10.0)?;
                let cfg = TransferConfig::reference(6.0);
                let analytic = transfer_efficiency(&cfg)?.q1;
                let oracle = transfer_oracle(&cfg, o.atoms, &o.oracle)?.q1;
                Ok(vec![
                    Check::holds("transfer efficiency monotone", q.windows(2).all(|w| w[1] > w[0]), String::new()),
                    Check::within("transfer threshold", threshold, 5.5, 0.5),
                    Check::within("oracle transfer efficiency", oracle, analytic, 0.01 * analytic),
                ])
            })
        }),
        Box::new(|o| {
            run_check("reversal", || {
                let cfg = TransferConfig::reference(6.0);
                let dep = cavity_depopulation(&cfg)?;
                let rev = reversibility_check(&cfg, o.atoms, &o.oracle, true)?;
                let state = DynamicalState {
                    field: Complex64::new(0.3, -0.7),
                    detunings: vec![-1.5, 0.0, 2.25],
                    coherences: vec![Complex64::new(0.1, 0.2)],
                    direction: TimeDirection::Forward,
                };
                Ok(vec![
                    Check::at_most("cavity depopulation", dep.residual, 1e-3 * dep.peak),
                    Check::at_least("reversibility fidelity", rev.fidelity, 0.999),
                    Check::holds(
                        "reversal map involution",
                        time_reversal_map(&time_reversal_map(&state)) == state,
                        String::new(),
                    ),
                ])
            })
        }),
        Box::new(|o| {
            run_check("conservation", || {
                let half = OracleOptions {
                    dt: 0.5 * o.oracle.dt,
                    ..o.oracle
                };
                let net = storage_network(0.5, 0.5, o.atoms);
                let mode = narrowband_pulse(0.01);
                let (coarse, _) = storage_run(&net, mode, &o.oracle)?;
                let (fine, _) = storage_run(&net, mode, &half)?;
                let cfg = TransferConfig::reference(6.0);
                let t1 = transfer_oracle(&cfg, o.atoms, &o.oracle)?;
                let t2 = transfer_oracle(&cfg, o.atoms, &half)?;
                let balance = [&coarse.trajectory, &fine.trajectory, &t1.trajectory, &t2.trajectory]
                    .iter()
                    .map(|t| t.max_balance_error())
                    .fold(0.0, f64::max);
                let shift = (coarse.storage_efficiency - fine.storage_efficiency)
                    .abs()
                    .max((t1.q1 - t2.q1).abs());
                Ok(vec![
                    Check::at_most("excitation balance", balance, 1e-6),
                    Check::at_most("step-size convergence", shift, 1e-4),
                ])
            })
        }),
    ]
}

/// Runs every check; independent checks run in parallel, results keep suite order.
pub fn run_all(opts: &VerifyOptions) -> Vec<Check> {
    suite().par_iter().flat_map_iter(|f| f(opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_constructors_compare_correctly() {
        assert!(Check::within("x", 1.05, 1.0, 0.1).passed);
        assert!(!Check::within("x", 1.2, 1.0, 0.1).passed);
        assert!(Check::at_most("x", 1.0, 1.0).passed);
        assert!(!Check::at_least("x", 0.5, 1.0).passed);
        assert!(!Check::failed("x", &crate::Error::Config("bad".into())).passed);
    }

    #[test]
    fn mean_frequency_of_a_tone() {
        let s: Vec<(f64, Complex64)> = (0..1000).map(|i| (0.01 * i as f64, Complex64::cis(-0.3 * 0.01 * i as f64))).collect();
        assert!((mean_frequency(&s) - 0.3).abs() < 1e-6);
    }

    #[test]
    fn deficit_slope_of_the_plain_memory() {
        let net = NetworkSpec::matched(RateParams::lossless(1.0), 0.5, 1, vec![]);
        assert!((deficit_slope(&net) - 4.0).abs() < 0.1);
    }
}
