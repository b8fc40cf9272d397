//! Exponential integrator building blocks.
//!
//! `phi_0(z) = e^z`, `phi_{k+1}(z) = (phi_k(z) - 1/k!) / z`, so that
//! `integral_0^1 e^{(1-s) z} s^k ds = k! phi_{k+1}(z)`.

use num_complex::Complex64;

/// Highest order needed by the steppers.
pub const MAX_ORDER: usize = 6;

const SERIES_RADIUS: f64 = 2.0;
const SERIES_TERMS: usize = 60;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `[phi_0(z), ..., phi_MAX_ORDER(z)]`.
pub fn phi_all(z: Complex64) -> [Complex64; MAX_ORDER + 1] {
    let mut out = [Complex64::new(0.0, 0.0); MAX_ORDER + 1];
    out[0] = z.exp();
    if z.norm() < SERIES_RADIUS {
        // phi_k(z) = sum_n z^n / (n + k)!
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            let mut term = Complex64::new(1.0 / factorial(k), 0.0);
            let mut sum = Complex64::new(0.0, 0.0);
            for n in 0..SERIES_TERMS {
                sum += term;
                term = term * z / (n + k + 1) as f64;
            }
            *slot = sum;
        }
    } else {
        for k in 1..=MAX_ORDER {
            out[k] = (out[k - 1] - 1.0 / factorial(k - 1)) / z;
        }
    }
    out
}

/// Right Radau points of the 4-stage Radau IIA rule on `[0, 1]`.
pub const RADAU_NODES: [f64; 4] = [
    0.088_587_959_512_703_95,
    0.409_466_864_440_734_7,
    0.787_659_461_760_847,
    1.0,
];

/// Solves `m x = rhs` for a small dense system by Gaussian elimination
/// with partial pivoting. Returns `None` for a singular matrix.
pub fn solve_dense<const N: usize>(
    mut m: [[Complex64; N]; N],
    mut rhs: [Complex64; N],
) -> Option<[Complex64; N]> {
    for col in 0..N {
        let pivot = (col..N).max_by(|&a, &b| m[a][col].norm().total_cmp(&m[b][col].norm()))?;
        if m[pivot][col].norm() == 0.0 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..N {
            let f = m[row][col] / m[col][col];
            for k in col..N {
                let v = m[col][k];
                m[row][k] -= f * v;
            }
            let v = rhs[col];
            rhs[row] -= f * v;
        }
    }
    let mut x = [Complex64::new(0.0, 0.0); N];
    for row in (0..N).rev() {
        let mut acc = rhs[row];
        for k in row + 1..N {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Inverse of a small dense matrix, column by column.
pub fn invert_dense<const N: usize>(m: [[Complex64; N]; N]) -> Option<[[Complex64; N]; N]> {
    let mut inv = [[Complex64::new(0.0, 0.0); N]; N];
    for col in 0..N {
        let mut e = [Complex64::new(0.0, 0.0); N];
        e[col] = Complex64::new(1.0, 0.0);
        let x = solve_dense(m, e)?;
        for row in 0..N {
            inv[row][col] = x[row];
        }
    }
    Some(inv)
}
