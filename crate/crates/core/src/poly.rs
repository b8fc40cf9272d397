//! Polynomial roots by simultaneous Aberth–Ehrlich iteration, plus the
//! closed-form cubic used as a cross-check.

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_ABERTH_ITERS: usize = 500;

/// Evaluates a polynomial with coefficients ordered from the highest power down.
pub fn polyval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Value and first derivative in one Horner pass.
pub fn polyval_deriv(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    let mut p = zero;
    let mut dp = zero;
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Running error bound for Horner evaluation, `sum |c_k| |z|^k`.
fn horner_scale(coeffs: &[Complex64], z: Complex64) -> f64 {
    let r = z.norm();
    coeffs.iter().fold(0.0, |acc, c| acc * r + c.norm())
}

/// All roots of the polynomial with coefficients `coeffs` (highest power first).
///
/// Exact zero trailing coefficients are deflated to exact zero roots. The
/// remaining roots come from Aberth–Ehrlich iteration followed by two Newton
/// polishing steps.
pub fn roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let lead = coeffs
        .iter()
        .position(|c| *c != Complex64::new(0.0, 0.0))
        .ok_or_else(|| Error::invalid("coeffs", "zero polynomial"))?;
    let coeffs = &coeffs[lead..];
    let mut trailing = 0;
    while trailing < coeffs.len() - 1 && coeffs[coeffs.len() - 1 - trailing] == Complex64::new(0.0, 0.0) {
        trailing += 1;
    }
    let reduced: Vec<Complex64> = coeffs[..coeffs.len() - trailing]
        .iter()
        .map(|c| c / coeffs[0])
        .collect();
    let mut out = aberth(&reduced)?;
    out.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), trailing));
    Ok(out)
}

fn aberth(monic: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = monic.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![-monic[1]]);
    }
    // Fujiwara bound for the initial circle; the offset angle breaks symmetry.
    let bound = (1..=n)
        .map(|k| {
            let c = monic[k].norm();
            let c = if k == n { c / 2.0 } else { c };
            c.powf(1.0 / k as f64)
        })
        .fold(0.0, f64::max)
        * 2.0;
    let radius = if bound > 0.0 { bound } else { 1.0 };
    let centroid = -monic[1] / n as f64;
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            centroid + Complex64::from_polar(0.5 * radius, theta)
        })
        .collect();

    let mut converged = vec![false; n];
    for _ in 0..MAX_ABERTH_ITERS {
        for i in 0..n {
            if converged[i] {
                continue;
            }
            let (p, dp) = polyval_deriv(monic, z[i]);
            if p.norm() <= 4.0 * f64::EPSILON * horner_scale(monic, z[i]) {
                converged[i] = true;
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            z[i] -= step;
            if step.norm() <= 4.0 * f64::EPSILON * z[i].norm().max(f64::MIN_POSITIVE) {
                converged[i] = true;
            }
        }
        if converged.iter().all(|&c| c) {
            break;
        }
    }

    for root in z.iter_mut() {
        for _ in 0..2 {
            let (p, dp) = polyval_deriv(monic, *root);
            if dp.norm() > 0.0 && p.norm() > 0.0 {
                let next = *root - p / dp;
                if polyval(monic, next).norm() <= p.norm() {
                    *root = next;
                }
            }
        }
    }

    let residuals: Vec<f64> = z
        .iter()
        .map(|&r| polyval(monic, r).norm() / horner_scale(monic, r).max(f64::MIN_POSITIVE))
        .collect();
    if residuals.iter().any(|&r| !(r <= 1e-10)) {
        return Err(Error::RootPolish { residuals });
    }
    Ok(z)
}

/// Which closed-form branch produced a cubic's roots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CardanoBranch {
    /// One real root and a complex pair, written with cube roots `u`, `v`.
    CubeRoots { u: Complex64, v: Complex64 },
    /// One real root and a complex pair via the hyperbolic form.
    Hyperbolic { r: f64, phi: f64 },
    /// Three real roots via the trigonometric form.
    Trigonometric { r: f64, phi: f64 },
}

/// Roots of the real depressed cubic `y^3 + p y + q = 0`.
///
/// The first root is always real. For `disc > 0` the other two form the pair
/// `-y1/2 -+ i s` with `s >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepressedCubic {
    pub p: f64,
    pub q: f64,
    /// `(p/3)^3 + (q/2)^2`.
    pub disc: f64,
    pub branch: CardanoBranch,
    pub roots: [Complex64; 3],
}

/// Solves `y^3 + p y + q = 0` in closed form.
pub fn solve_depressed_cubic(p: f64, q: f64) -> DepressedCubic {
    let disc = (p / 3.0).powi(3) + (q / 2.0).powi(2);
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let (branch, roots) = if disc > 0.0 && p >= 0.0 {
        let sd = disc.sqrt();
        let u = (-q / 2.0 + sd).cbrt();
        let v = (-q / 2.0 - sd).cbrt();
        let y1 = u + v;
        let s = 3f64.sqrt() * (u - v).abs() / 2.0;
        (
            CardanoBranch::CubeRoots {
                u: c(u, 0.0),
                v: c(v, 0.0),
            },
            [c(y1, 0.0), c(-y1 / 2.0, -s), c(-y1 / 2.0, s)],
        )
    } else if disc > 0.0 {
        // p < 0 with one real root: cosh form
        let r = (-p / 3.0).sqrt();
        let phi = (q.abs() / (2.0 * r.powi(3))).acosh();
        let y1 = -q.signum() * 2.0 * r * (phi / 3.0).cosh();
        let s = 3f64.sqrt() * r * (phi / 3.0).sinh();
        (
            CardanoBranch::Hyperbolic { r, phi },
            [c(y1, 0.0), c(-y1 / 2.0, -s), c(-y1 / 2.0, s)],
        )
    } else if p == 0.0 {
        // disc <= 0 with p = 0 forces q = 0: triple root
        (
            CardanoBranch::Trigonometric { r: 0.0, phi: 0.0 },
            [c(0.0, 0.0); 3],
        )
    } else {
        let r = (-p / 3.0).sqrt();
        let arg = (-q / (2.0 * r.powi(3))).clamp(-1.0, 1.0);
        let phi = arg.acos();
        let y = |k: f64| 2.0 * r * ((phi - 2.0 * std::f64::consts::PI * k) / 3.0).cos();
        (
            CardanoBranch::Trigonometric { r, phi },
            [c(y(0.0), 0.0), c(y(1.0), 0.0), c(y(2.0), 0.0)],
        )
    };
    DepressedCubic {
        p,
        q,
        disc,
        branch,
        roots,
    }
}
