//! Independent reference computations for the integration tests.
//!
//! Nothing here calls the library's numerics: quadrature, root finding and
//! time stepping are re-implemented in their plainest form.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::Matrix3;
use num_complex::Complex64;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Composite 20-point Gauss–Legendre over `panels` equal panels.
pub fn integrate<T>(f: impl Fn(f64) -> T, a: f64, b: f64, panels: usize) -> T
where
    T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
{
    let rule = gauss_legendre(20);
    let h = (b - a) / panels as f64;
    let mut acc = T::default();
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for &(x, w) in &rule {
            acc = acc + f(mid + 0.5 * h * x) * (0.5 * h * w);
        }
    }
    acc
}

/// `integral_R g(nu) dnu` through `nu = s tan(theta)`; `g` must decay at least like `1/nu^2`.
pub fn integrate_real_line(g: impl Fn(f64) -> f64, s: f64, panels: usize) -> f64 {
    let half = 0.5 * PI;
    integrate(
        |th: f64| {
            let t = th.tan();
            let sec2 = 1.0 + t * t;
            g(s * t) * s * sec2
        },
        -half,
        half,
        panels,
    )
}

/// Characteristic polynomial coefficients, highest degree first.
pub fn char_poly(delta: f64, omega0: f64, omega1: f64) -> [Complex64; 4] {
    let w2 = omega0 * omega0 + omega1 * omega1;
    [c(1.0, 0.0), c(0.0, delta), c(-w2, 0.0), c(0.0, -omega1 * omega1 * delta)]
}

pub fn poly_eval(p: &[Complex64], z: Complex64) -> Complex64 {
    p.iter().fold(c(0.0, 0.0), |acc, &a| acc * z + a)
}

/// Roots from the eigenvalues of a real companion matrix: with `nu = -i w`
/// the cubic becomes `w^3 - D w^2 + W^2 w - Omega1^2 D`.
pub fn companion_roots(delta: f64, omega0: f64, omega1: f64) -> Vec<Complex64> {
    let w2 = omega0 * omega0 + omega1 * omega1;
    let (a2, a1, a0) = (-delta, w2, -omega1 * omega1 * delta);
    let m = Matrix3::new(0.0, 0.0, -a0, 1.0, 0.0, -a1, 0.0, 1.0, -a2);
    m.complex_eigenvalues()
        .iter()
        .map(|w| c(0.0, -1.0) * w)
        .collect()
}

/// Residue form of the response kernel, built from the companion roots.
pub fn kernel_from_roots(roots: &[Complex64], delta: f64, tau: f64) -> Complex64 {
    if tau < 0.0 {
        return c(0.0, 0.0);
    }
    let mut sum = c(0.0, 0.0);
    for (m, &z) in roots.iter().enumerate() {
        let dp: Complex64 = roots
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != m)
            .map(|(_, &w)| z - w)
            .product();
        sum += z * (z + c(0.0, delta)) * (c(0.0, -1.0) * z * tau).exp() / dp;
    }
    sum
}

/// Direct inverse Fourier transform of the kernel spectrum
/// `i nu (nu + i D) / P(nu)`, with the `1/nu` and `1/nu^2` asymptotics
/// removed analytically.
pub fn kernel_by_fourier(delta: f64, omega0: f64, omega1: f64, tau: f64) -> Complex64 {
    let p = char_poly(delta, omega0, omega1);
    let lam = 1.0;
    let spec = |nu: f64| {
        let z = c(nu, 0.0);
        let full = c(0.0, 1.0) * z * (z + c(0.0, delta)) / poly_eval(&p, z);
        let d = z + c(0.0, lam);
        let asym = c(0.0, 1.0) / d - lam / (d * d);
        (full - asym) * (c(0.0, -1.0) * nu * tau).exp()
    };
    let l = 4000.0;
    let panels = 40_000;
    let body = integrate(|nu| C(spec(nu)), -l, l, panels).0 / (2.0 * PI);
    body + (-lam * tau).exp() * (1.0 + lam * tau)
}

/// Wrapper so complex values work with [`integrate`].
#[derive(Clone, Copy, Default)]
pub struct C(pub Complex64);

impl std::ops::Add for C {
    type Output = C;
    fn add(self, o: C) -> C {
        C(self.0 + o.0)
    }
}

impl std::ops::Mul<f64> for C {
    type Output = C;
    fn mul(self, s: f64) -> C {
        C(self.0 * s)
    }
}

/// Normalization sum from its defining integral:
/// `K = (1 / 2 pi) integral (nu^2 + D^2)^2 / |P(nu)|^2 dnu`.
pub fn k_by_quadrature(delta: f64, omega0: f64, omega1: f64) -> f64 {
    let p = char_poly(delta, omega0, omega1);
    let scale = delta.max(omega0).max(omega1);
    let g = |nu: f64| (nu * nu + delta * delta).powi(2) / poly_eval(&p, c(nu, 0.0)).norm_sqr();
    integrate_real_line(g, scale, 20_000) / (2.0 * PI)
}

/// Classical RK4 for the lossless cavity coupled to oscillators:
/// `a' = -kappa a + sum g_j c_j + sqrt(g1) b(t)`, `c_j' = -i D_j c_j - g_j a`.
pub struct Rk4System {
    pub kappa: f64,
    pub sqrt_g1: f64,
    pub detunings: Vec<f64>,
    pub couplings: Vec<f64>,
}

impl Rk4System {
    fn rhs(&self, t: f64, a: Complex64, cs: &[Complex64], b: &dyn Fn(f64) -> Complex64) -> (Complex64, Vec<Complex64>) {
        let mut da = -self.kappa * a + self.sqrt_g1 * b(t);
        let mut dc = Vec::with_capacity(cs.len());
        for ((&d, &g), &cj) in self.detunings.iter().zip(&self.couplings).zip(cs) {
            da += g * cj;
            dc.push(c(0.0, -d) * cj - g * a);
        }
        (da, dc)
    }

    pub fn run(
        &self,
        mut a: Complex64,
        mut cs: Vec<Complex64>,
        t_end: f64,
        steps: usize,
        b: &dyn Fn(f64) -> Complex64,
    ) -> (Complex64, Vec<Complex64>) {
        let h = t_end / steps as f64;
        for s in 0..steps {
            let t = s as f64 * h;
            let axpy = |a0: Complex64, c0: &[Complex64], k: &(Complex64, Vec<Complex64>), f: f64| {
                (a0 + k.0 * f, c0.iter().zip(&k.1).map(|(x, y)| x + y * f).collect::<Vec<_>>())
            };
            let k1 = self.rhs(t, a, &cs, b);
            let (a2, c2) = axpy(a, &cs, &k1, 0.5 * h);
            let k2 = self.rhs(t + 0.5 * h, a2, &c2, b);
            let (a3, c3) = axpy(a, &cs, &k2, 0.5 * h);
            let k3 = self.rhs(t + 0.5 * h, a3, &c3, b);
            let (a4, c4) = axpy(a, &cs, &k3, h);
            let k4 = self.rhs(t + h, a4, &c4, b);
            a += (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0) * (h / 6.0);
            for (j, cj) in cs.iter_mut().enumerate() {
                *cj += (k1.1[j] + 2.0 * k2.1[j] + 2.0 * k3.1[j] + k4.1[j]) * (h / 6.0);
            }
        }
        (a, cs)
    }
}

/// Quantile detunings of a Lorentzian of half-width `d`, `n` points.
pub fn lorentz_quantiles(d: f64, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|j| d * (PI * (j as f64 / (n + 1) as f64 - 0.5)).tan())
        .collect()
}

/// `Z` for the plain memory (no processing nodes), written out directly.
pub fn z_plain(gamma1: f64, gamma2: f64, gamma_tot: f64, delta_in: f64, nu: f64) -> f64 {
    let lor = delta_in * delta_in / (delta_in * delta_in + nu * nu);
    let den = c(gamma1 + gamma2, 0.0) + gamma_tot / c(1.0, -nu / delta_in) - c(0.0, 2.0 * nu);
    lor * 4.0 * gamma1 * gamma_tot / den.norm_sqr()
}

/// `Z` with idle processing nodes `(detuning, coupling)`, from eliminating each
/// node `c = i g a / (D - nu)` in the cavity equation. Only meaningful for
/// pairs `(+D, -D)`, where the static shift cancels.
pub fn z_general(gamma1: f64, gamma2: f64, gamma_tot: f64, delta_in: f64, nodes: &[(f64, f64)], nu: f64) -> f64 {
    let shift: f64 = nodes.iter().map(|&(d, g)| g * g / (d - nu)).sum();
    let lor = delta_in * delta_in / (delta_in * delta_in + nu * nu);
    let den = c(gamma1 + gamma2, 0.0) + gamma_tot / c(1.0, -nu / delta_in) - c(0.0, 2.0 * (nu + shift));
    lor * 4.0 * gamma1 * gamma_tot / den.norm_sqr()
}

/// Full width of the region around zero where `f >= level`, by bisection
/// from a fine outward scan.
pub fn crossing_width(f: impl Fn(f64) -> f64, level: f64, step: f64, limit: f64) -> f64 {
    let edge = |sign: f64| {
        let mut x = 0.0;
        while f(sign * (x + step)) >= level {
            x += step;
            assert!(x < limit, "no crossing below {limit}");
        }
        let (mut lo, mut hi) = (x, x + step);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f(sign * mid) >= level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    edge(1.0) + edge(-1.0)
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
