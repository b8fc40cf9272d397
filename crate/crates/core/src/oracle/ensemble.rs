use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A Lorentzian ensemble sampled on its quantile grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedEnsemble {
    pub detunings: Vec<f64>,
    /// Squared single-atom couplings; they sum to `Omega^2`.
    pub weights: Vec<f64>,
}

impl DiscretizedEnsemble {
    pub fn size(&self) -> usize {
        self.detunings.len()
    }

    pub fn couplings(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.sqrt()).collect()
    }

    /// Negates every detuning in place; coherences are not touched.
    pub fn crib_flip(&mut self) {
        for d in &mut self.detunings {
            *d = -*d;
        }
    }

    /// `sum_j w_j e^{-i Delta_j t}`, the collective free-decay signal.
    pub fn free_decay(&self, t: f64) -> num_complex::Complex64 {
        self.detunings
            .iter()
            .zip(&self.weights)
            .map(|(d, w)| w * num_complex::Complex64::cis(-d * t))
            .sum()
    }
}

/// Deterministic quantile sampling: `Delta_j = Delta_in tan(pi (j/(n+1) - 1/2))`, `j = 1..n`,
/// with equal weights `Omega^2 / n`.
pub fn sample_ensemble(delta_in: f64, omega: f64, n: usize) -> Result<DiscretizedEnsemble> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::invalid("n_atoms", format!("must be odd and at least 3, got {n}")));
    }
    if !(delta_in > 0.0) {
        return Err(Error::invalid("delta_in", "must be positive"));
    }
    let mid = n.div_ceil(2);
    let detunings = (1..=n)
        .map(|j| {
            if j == mid {
                0.0
            } else {
                delta_in * (PI * (j as f64 / (n + 1) as f64 - 0.5)).tan()
            }
        })
        .collect();
    let weights = vec![omega * omega / n as f64; n];
    Ok(DiscretizedEnsemble { detunings, weights })
}
