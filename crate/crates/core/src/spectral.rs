//! Frequency-domain storage and retrieval efficiencies of the memory node.
//!
//! `nu` is always the offset from the cavity frequency. Processing nodes
//! enter through the dispersion factor `Pi(nu) = 1 + sum Omega_m^2 / (Delta_m (Delta_m - nu))`,
//! which assumes the static pull `delta_M(0)` has been compensated (see
//! [`NetworkSpec::rebalanced`](crate::model::NetworkSpec::rebalanced)).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{NetworkSpec, RateParams, SignalModeSpec};
use crate::quadrature::Quadrature;

/// Frequency window half-width, in multiples of the widest rate involved.
pub const WINDOW_FACTOR: f64 = 40.0;
/// Default number of grid points for [`SpectralResponse::sample`].
pub const DEFAULT_GRID_POINTS: usize = 4001;

/// Relative distance to a processing-node pole treated as a hit when there
/// is no homogeneous broadening to regularize it.
const POLE_EPS: f64 = 1e-12;

fn pole_hit(detuning: f64, nu: f64, gamma21: f64) -> bool {
    let gap = (detuning - nu).abs();
    gamma21 == 0.0 && gap <= POLE_EPS * detuning.abs().max(1.0)
}

/// Complex cavity pull `delta_M(nu) = sum Omega_m^2 / (Delta_m - nu - i gamma21)`.
pub fn dispersion_shift(net: &NetworkSpec, nu: f64) -> Result<Complex64> {
    let g21 = net.rates.gamma21;
    let mut sum = Complex64::new(0.0, 0.0);
    for p in &net.processors {
        if pole_hit(p.detuning, nu, g21) {
            return Err(Error::Singular {
                nu,
                what: format!("processing node pole at {}", p.detuning),
            });
        }
        sum += p.omega * p.omega / Complex64::new(p.detuning - nu, -g21);
    }
    Ok(sum)
}

/// The real dispersion sum `M(nu)`, `Pi(nu) = 1 + M(nu)` and the Taylor data at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessingDispersion {
    pub m: f64,
    pub pi: f64,
    /// `Pi(0) = 1 + sum Omega_m^2 / Delta_m^2`.
    pub pi0: f64,
    /// `Pi'(0) = sum Omega_m^2 / Delta_m^3`.
    pub dpi0: f64,
}

pub fn processing_dispersion(net: &NetworkSpec, nu: f64) -> Result<ProcessingDispersion> {
    let mut m = 0.0;
    let mut pi0 = 1.0;
    let mut dpi0 = 0.0;
    for p in &net.processors {
        let d = p.detuning;
        if d == 0.0 || pole_hit(d, nu, 0.0) {
            return Err(Error::Singular {
                nu,
                what: format!("processing node pole at {d}"),
            });
        }
        let w = p.omega * p.omega;
        m += w / (d * (d - nu));
        pi0 += w / (d * d);
        dpi0 += w / (d * d * d);
    }
    Ok(ProcessingDispersion {
        m,
        pi: 1.0 + m,
        pi0,
        dpi0,
    })
}

fn pi_factor(net: &NetworkSpec, nu: f64) -> Option<f64> {
    processing_dispersion(net, nu).ok().map(|d| d.pi)
}

/// Cavity field per unit input amplitude, `a(nu) / b_in(nu)`.
pub fn cavity_response(net: &NetworkSpec, nu: f64) -> Result<Complex64> {
    let pi = processing_dispersion(net, nu)?.pi;
    let d = net.derived();
    let r = &net.rates;
    let absorption = d.gamma_tot / Complex64::new(1.0, -nu / d.delta_tot);
    let den = r.gamma1 + r.gamma2 + absorption - Complex64::new(0.0, 2.0 * nu * pi);
    Ok(2.0 * r.gamma1.sqrt() / den)
}

/// Spectral storage efficiency `Z^M(nu)`.
///
/// At a processing-node pole the cavity is fully detuned and the limit value 0 is returned.
pub fn spectral_efficiency(net: &NetworkSpec, nu: f64) -> f64 {
    let Some(pi) = pi_factor(net, nu) else {
        return 0.0;
    };
    let r = &net.rates;
    let gamma_tot = net.derived().gamma_tot;
    let din = net.memory.delta_in;
    let absorption = gamma_tot / Complex64::new(1.0, -nu / din);
    let den = r.gamma1 + r.gamma2 + absorption - Complex64::new(0.0, 2.0 * nu * pi);
    let lorentz = din * din / (din * din + nu * nu);
    lorentz * 4.0 * r.gamma1 * gamma_tot / den.norm_sqr()
}

/// `Z^M(nu)` in the form it takes once `Gamma_tot = gamma1 + gamma2`.
///
/// Uses `gamma1 + gamma2` in place of `Gamma_tot`, so it only agrees with
/// [`spectral_efficiency`] on matched networks.
pub fn matched_spectral_efficiency(net: &NetworkSpec, nu: f64) -> f64 {
    let Some(pi) = pi_factor(net, nu) else {
        return 0.0;
    };
    let r = &net.rates;
    let g = r.gamma1 + r.gamma2;
    let din = net.memory.delta_in;
    let bracket = 0.25 * (g - 2.0 * pi * din).powi(2) + pi * pi * nu * nu;
    (r.gamma1 / g) / (1.0 + nu * nu / (g * g * din * din) * bracket)
}

/// Storage efficiency of a narrowband pulse, `[g1/(g1+g2)] 4x/(1+x)^2` with `x = Gamma_tot/(g1+g2)`.
pub fn narrowband_storage(rates: &RateParams, gamma_tot: f64) -> f64 {
    let loss = rates.cavity_loss();
    let x = gamma_tot / loss;
    rates.gamma1 / loss * 4.0 * x / ((1.0 + x) * (1.0 + x))
}

fn window_half_width(net: &NetworkSpec, width: f64) -> f64 {
    WINDOW_FACTOR * width.max(net.rates.gamma1).max(net.memory.delta_in)
}

/// Integrates `g(nu) |f(nu)|^2` over the real line for one signal mode.
fn spectral_average(net: &NetworkSpec, mode: &SignalModeSpec, g: impl Fn(f64) -> f64) -> Result<f64> {
    let w = window_half_width(net, mode.width);
    let c = mode.carrier;
    let mut breaks = vec![-w, w, 0.0, c, c - mode.width, c + mode.width];
    for p in &net.processors {
        breaks.push(p.detuning);
    }
    breaks.retain(|x| x.abs() <= w);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let q = Quadrature::default();
    let f = |nu: f64| g(nu) * mode.intensity(nu);
    let core = q.integrate_with_breaks(f, &breaks)?.value;
    let right = q.integrate_to_infinity(f, w)?.value;
    let left = q.integrate_from_neg_infinity(f, -w)?.value;
    Ok(core + right + left)
}

/// Storage efficiency of one mode, `integral Z(nu) n(nu) dnu / n`.
pub fn storage_efficiency_mode(net: &NetworkSpec, mode: &SignalModeSpec) -> Result<f64> {
    spectral_average(net, mode, |nu| spectral_efficiency(net, nu))
}

/// Echo retrieval efficiency of one mode with flip time `tau`.
pub fn retrieval_efficiency_mode(net: &NetworkSpec, mode: &SignalModeSpec, tau: f64) -> Result<f64> {
    if tau < mode.arrival_time {
        return Err(Error::invalid(
            "tau",
            format!("flip time {tau} precedes arrival time {}", mode.arrival_time),
        ));
    }
    let decay = (-4.0 * net.rates.gamma21 * (tau - mode.arrival_time)).exp();
    let z2 = spectral_average(net, mode, |nu| spectral_efficiency(net, nu).powi(2))?;
    Ok(decay * z2)
}

/// Per-mode and photon-weighted memory efficiencies.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyReport {
    /// `(storage, retrieval)` per mode.
    pub per_mode: Vec<(f64, f64)>,
    pub total_storage: f64,
    pub total_memory: f64,
}

/// Minimum spacing between consecutive arrival times, in units of `1/width`.
pub const MODE_SEPARATION: f64 = 10.0;

pub fn total_memory_efficiency(
    net: &NetworkSpec,
    modes: &[SignalModeSpec],
    tau: f64,
) -> Result<EfficiencyReport> {
    if modes.is_empty() {
        return Err(Error::invalid("modes", "at least one signal mode is required"));
    }
    for (i, pair) in modes.windows(2).enumerate() {
        let gap = pair[1].arrival_time - pair[0].arrival_time;
        let required = MODE_SEPARATION / pair[0].width.min(pair[1].width);
        if gap < required {
            return Err(Error::OverlappingModes {
                first: i,
                second: i + 1,
                gap,
                required,
            });
        }
    }
    let per_mode = modes
        .iter()
        .map(|m| Ok((storage_efficiency_mode(net, m)?, retrieval_efficiency_mode(net, m, tau)?)))
        .collect::<Result<Vec<_>>>()?;
    let photons: f64 = modes.iter().map(|m| m.photons).sum();
    let weighted = |pick: fn(&(f64, f64)) -> f64| {
        modes
            .iter()
            .zip(&per_mode)
            .map(|(m, e)| m.photons * pick(e))
            .sum::<f64>()
            / photons
    };
    Ok(EfficiencyReport {
        total_storage: weighted(|e| e.0),
        total_memory: weighted(|e| e.1),
        per_mode,
    })
}

/// Sampled echo amplitude in the output waveguide.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoTrace {
    pub times: Vec<f64>,
    pub amplitude: Vec<Complex64>,
}

/// Echo emitted after a detuning flip at `tau`, on the given time samples.
///
/// Each mode contributes `-(2 pi)^{-1/2} e^{-2 gamma21 (t - tau)} integral Z(nu) f_k(nu) e^{i nu (t + t_k - 2 tau)} dnu`,
/// evaluated as a uniform-grid sum. Samples before `tau` are zero.
pub fn echo_time_trace(
    net: &NetworkSpec,
    modes: &[SignalModeSpec],
    tau: f64,
    times: &[f64],
) -> Result<EchoTrace> {
    if modes.is_empty() {
        return Err(Error::invalid("modes", "at least one signal mode is required"));
    }
    let narrowest = modes.iter().map(|m| m.width).fold(f64::INFINITY, f64::min);
    let widest = modes.iter().map(|m| m.width).fold(0.0, f64::max);
    let dnu = narrowest.min(net.memory.delta_in).min(net.rates.gamma1) / 8.0;
    let w = window_half_width(net, widest)
        + modes.iter().map(|m| m.carrier.abs()).fold(0.0, f64::max);
    let half = (w / dnu).ceil() as i64;
    let grid: Vec<f64> = (-half..=half).map(|k| k as f64 * dnu).collect();
    let z: Vec<f64> = grid.iter().map(|&nu| spectral_efficiency(net, nu)).collect();
    let weights: Vec<Vec<f64>> = modes
        .iter()
        .map(|m| grid.iter().zip(&z).map(|(&nu, &zv)| zv * m.amplitude(nu) * dnu).collect())
        .collect();
    let g21 = net.rates.gamma21;
    let norm = -1.0 / (2.0 * PI).sqrt();
    let amplitude = times
        .par_iter()
        .map(|&t| {
            if t < tau {
                return Complex64::new(0.0, 0.0);
            }
            let decay = (-2.0 * g21 * (t - tau)).exp();
            let mut sum = Complex64::new(0.0, 0.0);
            for (m, wts) in modes.iter().zip(&weights) {
                let s = t + m.arrival_time - 2.0 * tau;
                for (&nu, &wt) in grid.iter().zip(wts) {
                    sum += wt * Complex64::cis(nu * s);
                }
            }
            norm * decay * sum
        })
        .collect();
    Ok(EchoTrace {
        times: times.to_vec(),
        amplitude,
    })
}

/// Second matching condition `Delta_opt = Gamma_tot / (2 Pi(0))`.
pub fn optimal_broadening(net: &NetworkSpec) -> Result<f64> {
    let pi0 = processing_dispersion(net, 0.0)?.pi0;
    Ok(net.derived().gamma_tot / (2.0 * pi0))
}

/// Sampled `Z^M` and cavity response over a symmetric frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResponse {
    pub grid: Vec<f64>,
    pub z_values: Vec<f64>,
    pub response: Vec<Complex64>,
}

impl SpectralResponse {
    /// Uniform grid of `n` points on `[-half_width, half_width]`.
    pub fn sample(net: &NetworkSpec, half_width: f64, n: usize) -> Result<Self> {
        if n < 2 || !(half_width > 0.0) {
            return Err(Error::invalid("grid", "need n >= 2 points over a positive width"));
        }
        let step = 2.0 * half_width / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|i| -half_width + i as f64 * step).collect();
        let (z_values, response) = grid
            .par_iter()
            .map(|&nu| {
                let z = spectral_efficiency(net, nu);
                let a = cavity_response(net, nu).unwrap_or_default();
                (z, a)
            })
            .unzip();
        Ok(Self {
            grid,
            z_values,
            response,
        })
    }

    /// The default grid: 4001 points over `40 max(width, gamma1, Delta_in)`.
    pub fn sample_default(net: &NetworkSpec, signal_width: f64) -> Result<Self> {
        Self::sample(net, window_half_width(net, signal_width), DEFAULT_GRID_POINTS)
    }
}

/// Full width of the interval around `nu = 0` on which `Z^2 >= level`,
/// with linear interpolation between grid points.
pub fn bandwidth_metric(resp: &SpectralResponse, level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("level", "must lie in (0, 1)"));
    }
    let z2: Vec<f64> = resp.z_values.iter().map(|z| z * z).collect();
    let centre = resp
        .grid
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::invalid("grid", "empty"))?;
    if z2[centre] < level {
        return Err(Error::LevelNotAttained {
            level,
            peak: z2[centre],
        });
    }
    let edge = |step: isize| -> f64 {
        let mut i = centre as isize;
        loop {
            let j = i + step;
            if j < 0 || j as usize >= z2.len() {
                return resp.grid[i as usize];
            }
            let (iu, ju) = (i as usize, j as usize);
            if z2[ju] < level {
                let frac = (z2[iu] - level) / (z2[iu] - z2[ju]);
                return resp.grid[iu] + frac * (resp.grid[ju] - resp.grid[iu]);
            }
            i = j;
        }
    };
    Ok(edge(1) - edge(-1))
}

/// Bandwidth as in [`bandwidth_metric`], but with the crossings located by
/// bisection on the closed form instead of a sampled grid.
pub fn bandwidth_exact(net: &NetworkSpec, level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("level", "must lie in (0, 1)"));
    }
    let z2 = |nu: f64| spectral_efficiency(net, nu).powi(2);
    let peak = z2(0.0);
    if peak < level {
        return Err(Error::LevelNotAttained { level, peak });
    }
    let scale = net.rates.gamma1.max(net.memory.delta_in);
    let limit = WINDOW_FACTOR * scale;
    let crossing = |sign: f64| -> Result<f64> {
        // Geometric outward scan keeps the first (contiguous) crossing.
        let mut inside = 0.0;
        let mut probe = 1e-6 * scale;
        while z2(sign * probe) >= level {
            inside = probe;
            probe *= 1.01;
            if probe > limit {
                return Err(Error::NoCrossing {
                    level,
                    lo: 0.0,
                    hi: sign * limit,
                });
            }
        }
        let (mut lo, mut hi) = (inside, probe);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if z2(sign * mid) >= level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    Ok(crossing(1.0)? + crossing(-1.0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MemoryNodeSpec, ProcessingNodeSpec};


    const DELTA: f64 = 10.0 / 3.0;

    fn matched(m: usize, ratio: f64, delta_in: f64, gamma2: f64) -> NetworkSpec {
        let rates = RateParams::new(1.0, gamma2, 0.0);
        let procs = (0..m)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                ProcessingNodeSpec::new(s * DELTA, ratio * DELTA)
            })
            .collect();
        NetworkSpec::matched(rates, delta_in, 1, procs)
    }

    #[test]
    fn dispersion_examples() {
        let net = matched(0, 0.0, 0.5, 0.0);
        assert_eq!(dispersion_shift(&net, 0.7).unwrap(), Complex64::new(0.0, 0.0));
        let net = matched(2, 0.3, 0.5, 0.0);
        assert!(dispersion_shift(&net, 0.0).unwrap().norm() < 1e-15);
        let mut one = matched(0, 0.0, 0.5, 0.0);
        one.processors.push(ProcessingNodeSpec::new(10.0, 1.0));
        assert!((dispersion_shift(&one, 0.0).unwrap().re - 0.1).abs() < 1e-15);
        assert!(matches!(dispersion_shift(&one, 10.0), Err(Error::Singular { .. })));
    }

    #[test]
    fn pi_factor_examples() {
        let d = processing_dispersion(&matched(0, 0.0, 0.5, 0.0), 0.3).unwrap();
        assert_eq!((d.m, d.pi), (0.0, 1.0));
        let d = processing_dispersion(&matched(4, 0.25, 0.5, 0.0), 0.0).unwrap();
        assert!((d.pi0 - 1.25).abs() < 1e-14);
        assert!(d.dpi0.abs() < 1e-15);
        let d = processing_dispersion(&matched(16, 0.1, 0.5, 0.0), 0.0).unwrap();
        assert!((d.pi0 - 1.16).abs() < 1e-14);
        assert!(processing_dispersion(&matched(2, 0.1, 0.5, 0.0), DELTA).is_err());
    }

    #[test]
    fn cavity_response_limits() {
        let net = matched(4, 0.25, 0.4, 0.0);
        let a0 = cavity_response(&net, 0.0).unwrap();
        assert!((a0 - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(cavity_response(&net, 1e7).unwrap().norm() < 1e-6);
    }

    #[test]
    fn matched_peak_is_unity() {
        for m in [0, 2, 4, 8, 16] {
            let net = matched(m, 0.25, 0.3, 0.0);
            assert!((spectral_efficiency(&net, 0.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn no_coupling_no_storage() {
        let mut net = matched(2, 0.25, 0.5, 0.0);
        net.memory.omega0 = 0.0;
        for nu in [-1.0, 0.0, 0.2, 5.0] {
            assert_eq!(spectral_efficiency(&net, nu), 0.0);
        }
    }

    #[test]
    fn narrowband_examples() {
        let r = RateParams::lossless(1.0);
        assert!((narrowband_storage(&r, 1.0) - 1.0).abs() < 1e-15);
        assert!((narrowband_storage(&r, 0.5) - 8.0 / 9.0).abs() < 1e-15);
        assert_eq!(narrowband_storage(&r, 0.0), 0.0);
    }

    #[test]
    fn pole_gives_zero_efficiency() {
        let net = matched(2, 0.25, 0.4, 0.0);
        assert_eq!(spectral_efficiency(&net, DELTA), 0.0);
        assert!(spectral_efficiency(&net, DELTA * (1.0 + 1e-9)) < 1e-10);
    }

    #[test]
    fn optimal_broadening_examples() {
        assert!((optimal_broadening(&matched(0, 0.0, 0.5, 0.0)).unwrap() - 0.5).abs() < 1e-14);
        assert!((optimal_broadening(&matched(4, 0.25, 0.5, 0.0)).unwrap() - 0.4).abs() < 1e-14);
        let want = 1.0 / 2.32;
        assert!((optimal_broadening(&matched(16, 0.1, 0.5, 0.0)).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn bandwidth_of_flat_response_is_grid_width() {
        let resp = SpectralResponse {
            grid: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            z_values: vec![1.0; 5],
            response: vec![Complex64::new(1.0, 0.0); 5],
        };
        assert_eq!(bandwidth_metric(&resp, 0.5).unwrap(), 4.0);
        let low = SpectralResponse {
            z_values: vec![0.5; 5],
            ..resp
        };
        assert!(matches!(
            bandwidth_metric(&low, 0.9),
            Err(Error::LevelNotAttained { .. })
        ));
    }

    #[test]
    fn sampled_and_exact_bandwidths_agree() {
        let net = matched(4, 0.25, 0.4, 0.0);
        let resp = SpectralResponse::sample(&net, 2.0, DEFAULT_GRID_POINTS).unwrap();
        let grid = bandwidth_metric(&resp, 0.99).unwrap();
        let exact = bandwidth_exact(&net, 0.99).unwrap();
        assert!(((grid - exact) / exact).abs() < 1e-3, "{grid} {exact}");
    }

    #[test]
    fn retrieval_rejects_flip_before_arrival() {
        let net = matched(0, 0.0, 0.5, 0.0);
        let mode = SignalModeSpec::lorentzian(10.0, 0.05);
        assert!(retrieval_efficiency_mode(&net, &mode, 5.0).is_err());
    }

    #[test]
    fn overlapping_modes_are_rejected() {
        let net = matched(0, 0.0, 0.5, 0.0);
        let modes = [
            SignalModeSpec::lorentzian(0.0, 0.1),
            SignalModeSpec::lorentzian(50.0, 0.1),
        ];
        assert!(matches!(
            total_memory_efficiency(&net, &modes, 100.0),
            Err(Error::OverlappingModes { .. })
        ));
    }

    #[test]
    fn decoherence_factor_is_separable() {
        let net = NetworkSpec::new(
            RateParams::new(1.0, 0.0, 0.01),
            MemoryNodeSpec::with_absorption_rate(0.5, 1.0, 0.01, 1),
            vec![],
        );
        let mode = SignalModeSpec::lorentzian(0.0, 0.05);
        let clean = retrieval_efficiency_mode(&net, &mode, 0.0).unwrap();
        let decayed = retrieval_efficiency_mode(&net, &mode, 25.0).unwrap();
        assert!((decayed - clean * (-1.0f64).exp()).abs() < 1e-12);
    }
}
