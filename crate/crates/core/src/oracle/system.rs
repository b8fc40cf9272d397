//! The linear cavity system and its time steppers.
//!
//! ```text
//! da/dt   = -kappa a + sum_j g_j c_j + sqrt(gamma1) b_in(t)
//! dc_j/dt = lambda_j c_j - g_j a,        lambda_j = -i Delta_j - gamma21
//! b_out   = b_in - sqrt(gamma1) a
//! ```
//!
//! Both steppers treat each oscillator's free evolution exactly, which is
//! what makes the far Lorentzian tail (|Delta_j| up to ~10^3 Delta_in)
//! affordable.

use num_complex::Complex64;

use super::phi::{invert_dense, phi_all, RADAU_NODES};

const STAGES: usize = RADAU_NODES.len();
const DEGREE: usize = STAGES;

/// Gauss–Legendre nodes and weights on `[-1, 1]` used for forcing integrals
/// and output-energy bookkeeping inside a step.
const GL_X: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_W: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Frozen coefficients of the equations of motion between two events.
#[derive(Debug, Clone, PartialEq)]
pub struct CavitySystem {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma21: f64,
    pub detunings: Vec<f64>,
    pub couplings: Vec<f64>,
}

impl CavitySystem {
    pub fn kappa(&self) -> f64 {
        0.5 * (self.gamma1 + self.gamma2)
    }

    pub fn lambda(&self, j: usize) -> Complex64 {
        Complex64::new(-self.gamma21, -self.detunings[j])
    }

    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }
}

/// Integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Field as a degree-4 polynomial collocated at the Radau IIA points,
    /// oscillators integrated exactly against it.
    Collocation,
    /// Cox–Matthews exponential Runge–Kutta of order 4.
    Etdrk4,
}

/// What one step produced besides the new state.
#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    pub input_energy: f64,
    pub output_energy: f64,
    /// Output amplitude at the end of the step.
    pub output: Complex64,
}

/// Per-oscillator collocation coefficients.
#[derive(Debug, Clone, Copy)]
struct AtomCoef {
    decay: Complex64,
    /// Contribution of `c_j(0)` to the field integral at each stage.
    stage: [Complex64; STAGES],
    /// Contribution of field coefficient `alpha_q` to `c_j(h)`.
    update: [Complex64; DEGREE + 1],
}

pub(crate) struct Stepper {
    h: f64,
    sqrt_g1: f64,
    kind: Kind,
}

enum Kind {
    Collocation {
        atoms: Vec<AtomCoef>,
        m0: [Complex64; STAGES],
        minv: [[Complex64; STAGES]; STAGES],
    },
    Etdrk4 {
        couplings: Vec<f64>,
        coef: Vec<EtdCoef>,
        field: EtdCoef,
    },
}

#[derive(Debug, Clone, Copy)]
struct EtdCoef {
    e: Complex64,
    e2: Complex64,
    q: Complex64,
    f1: Complex64,
    f2: Complex64,
    f3: Complex64,
}

impl EtdCoef {
    fn new(l: Complex64, h: f64) -> Self {
        let p = phi_all(l * h);
        let ph = phi_all(l * h * 0.5);
        Self {
            e: p[0],
            e2: ph[0],
            q: ph[1] * (0.5 * h),
            f1: (p[1] - 3.0 * p[2] + 4.0 * p[3]) * h,
            f2: (p[2] - 2.0 * p[3]) * h,
            f3: (4.0 * p[3] - p[2]) * h,
        }
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl Stepper {
    pub(crate) fn new(sys: &CavitySystem, h: f64, scheme: Scheme) -> Option<Self> {
        let sqrt_g1 = sys.gamma1.sqrt();
        let kind = match scheme {
            Scheme::Collocation => Self::collocation(sys, h)?,
            Scheme::Etdrk4 => Kind::Etdrk4 {
                couplings: sys.couplings.clone(),
                coef: (0..sys.len()).map(|j| EtdCoef::new(sys.lambda(j), h)).collect(),
                field: EtdCoef::new(Complex64::new(-sys.kappa(), 0.0), h),
            },
        };
        Some(Self { h, sqrt_g1, kind })
    }

    fn collocation(sys: &CavitySystem, h: f64) -> Option<Kind> {
        let nodes = RADAU_NODES.map(|c| c * h);
        let kappa = sys.kappa();
        let mut w = [[zero(); DEGREE + 1]; STAGES];
        let mut atoms = Vec::with_capacity(sys.len());
        for j in 0..sys.len() {
            let lam = sys.lambda(j);
            let g = sys.couplings[j];
            let full = phi_all(lam * h);
            let mut coef = AtomCoef {
                decay: full[0],
                stage: [zero(); STAGES],
                update: [zero(); DEGREE + 1],
            };
            for q in 0..=DEGREE {
                coef.update[q] = g * factorial(q) * h * full[q + 1];
            }
            for (k, &s) in nodes.iter().enumerate() {
                let p = phi_all(lam * s);
                coef.stage[k] = g * s * p[1];
                for q in 0..=DEGREE {
                    w[k][q] += g * g * factorial(q) * s.powi(q as i32 + 2) * p[q + 2] / h.powi(q as i32);
                }
            }
            atoms.push(coef);
        }
        let mut mx = [[zero(); DEGREE + 1]; STAGES];
        for (k, &s) in nodes.iter().enumerate() {
            for q in 0..=DEGREE {
                let r = s / h;
                mx[k][q] = Complex64::new(
                    r.powi(q as i32) + kappa * s * r.powi(q as i32) / (q + 1) as f64,
                    0.0,
                ) + w[k][q];
            }
        }
        let m0 = [0, 1, 2, 3].map(|k| mx[k][0]);
        let mut rest = [[zero(); STAGES]; STAGES];
        for k in 0..STAGES {
            for q in 0..STAGES {
                rest[k][q] = mx[k][q + 1];
            }
        }
        Some(Kind::Collocation {
            atoms,
            m0,
            minv: invert_dense(rest)?,
        })
    }

    pub(crate) fn h(&self) -> f64 {
        self.h
    }

    /// Advances `(a, c)` from `t0` to `t0 + h`. `b_in` is the waveguide input.
    pub(crate) fn step(
        &self,
        t0: f64,
        a: &mut Complex64,
        c: &mut [Complex64],
        b_in: &dyn Fn(f64) -> Complex64,
    ) -> StepReport {
        match &self.kind {
            Kind::Collocation { atoms, m0, minv } => {
                self.step_collocation(atoms, m0, minv, t0, a, c, b_in)
            }
            Kind::Etdrk4 {
                couplings,
                coef,
                field,
            } => self.step_etdrk4(couplings, coef, field, t0, a, c, b_in),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn step_collocation(
        &self,
        atoms: &[AtomCoef],
        m0: &[Complex64; STAGES],
        minv: &[[Complex64; STAGES]; STAGES],
        t0: f64,
        a: &mut Complex64,
        c: &mut [Complex64],
        b_in: &dyn Fn(f64) -> Complex64,
    ) -> StepReport {
        let h = self.h;
        let a0 = *a;
        let mut rhs = [zero(); STAGES];
        for (coef, &cj) in atoms.iter().zip(c.iter()) {
            for k in 0..STAGES {
                rhs[k] += coef.stage[k] * cj;
            }
        }
        for k in 0..STAGES {
            let s = RADAU_NODES[k] * h;
            let forcing: Complex64 = GL_X
                .iter()
                .zip(&GL_W)
                .map(|(&x, &w)| w * b_in(t0 + 0.5 * s * (x + 1.0)))
                .sum::<Complex64>()
                * (0.5 * s * self.sqrt_g1);
            rhs[k] += a0 - m0[k] * a0 + forcing;
        }
        let mut alpha = [zero(); DEGREE + 1];
        alpha[0] = a0;
        for q in 0..STAGES {
            alpha[q + 1] = (0..STAGES).map(|k| minv[q][k] * rhs[k]).sum();
        }
        for (coef, cj) in atoms.iter().zip(c.iter_mut()) {
            let mut next = coef.decay * *cj;
            for q in 0..=DEGREE {
                next -= coef.update[q] * alpha[q];
            }
            *cj = next;
        }
        *a = alpha.iter().sum();

        let field_at = |s: f64| {
            let r = s / h;
            alpha.iter().rev().fold(zero(), |acc, &x| acc * r + x)
        };
        let mut e_in = 0.0;
        let mut e_out = 0.0;
        for (&x, &w) in GL_X.iter().zip(&GL_W) {
            let s = 0.5 * h * (x + 1.0);
            let bi = b_in(t0 + s);
            let bo = bi - self.sqrt_g1 * field_at(s);
            e_in += w * bi.norm_sqr();
            e_out += w * bo.norm_sqr();
        }
        StepReport {
            input_energy: 0.5 * h * e_in,
            output_energy: 0.5 * h * e_out,
            output: b_in(t0 + h) - self.sqrt_g1 * *a,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn step_etdrk4(
        &self,
        couplings: &[f64],
        coef: &[EtdCoef],
        field: &EtdCoef,
        t0: f64,
        a: &mut Complex64,
        c: &mut [Complex64],
        b_in: &dyn Fn(f64) -> Complex64,
    ) -> StepReport {
        let h = self.h;
        let sg = self.sqrt_g1;
        let n = c.len();
        // Nonlinear part for the field: coupling sum plus drive.
        let drive = |cs: &[Complex64], t: f64| -> Complex64 {
            couplings.iter().zip(cs).map(|(g, x)| g * x).sum::<Complex64>() + sg * b_in(t)
        };
        let a0 = *a;
        let na_u = drive(c, t0);
        let a_a = field.e2 * a0 + field.q * na_u;
        let ca: Vec<Complex64> = (0..n)
            .map(|j| coef[j].e2 * c[j] + coef[j].q * (-couplings[j] * a0))
            .collect();

        let na_a = drive(&ca, t0 + 0.5 * h);
        let a_b = field.e2 * a0 + field.q * na_a;
        let cb: Vec<Complex64> = (0..n)
            .map(|j| coef[j].e2 * c[j] + coef[j].q * (-couplings[j] * a_a))
            .collect();

        let na_b = drive(&cb, t0 + 0.5 * h);
        let a_c = field.e2 * a_a + field.q * (2.0 * na_b - na_u);
        let cc: Vec<Complex64> = (0..n)
            .map(|j| {
                coef[j].e2 * ca[j] + coef[j].q * (-couplings[j] * (2.0 * a_b - a0))
            })
            .collect();
        let na_c = drive(&cc, t0 + h);

        let a1 = field.e * a0
            + field.f1 * na_u
            + 2.0 * field.f2 * (na_a + na_b)
            + field.f3 * na_c;
        for j in 0..n {
            let g = couplings[j];
            let k = &coef[j];
            c[j] = k.e * c[j]
                + k.f1 * (-g * a0)
                + 2.0 * k.f2 * (-g * (a_a + a_b))
                + k.f3 * (-g * a_c);
        }
        *a = a1;

        // Trapezoidal bookkeeping; this scheme has no dense output.
        let bi0 = b_in(t0);
        let bi1 = b_in(t0 + h);
        let bo0 = bi0 - sg * a0;
        let bo1 = bi1 - sg * a1;
        StepReport {
            input_energy: 0.5 * h * (bi0.norm_sqr() + bi1.norm_sqr()),
            output_energy: 0.5 * h * (bo0.norm_sqr() + bo1.norm_sqr()),
            output: bo1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_system(detunings: Vec<f64>, g: f64) -> CavitySystem {
        let n = detunings.len();
        CavitySystem {
            gamma1: 0.0,
            gamma2: 0.0,
            gamma21: 0.0,
            detunings,
            couplings: vec![g; n],
        }
    }

    fn no_input(_: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    /// Single oscillator resonant with the cavity: vacuum Rabi oscillation
    /// `a(t) = sin(g t)` from `c(0) = 1`.
    #[test]
    fn rabi_oscillation_is_reproduced() {
        for scheme in [Scheme::Collocation, Scheme::Etdrk4] {
            let sys = free_system(vec![0.0], 0.7);
            let st = Stepper::new(&sys, 0.01, scheme).unwrap();
            let mut a = Complex64::new(0.0, 0.0);
            let mut c = vec![Complex64::new(1.0, 0.0)];
            let mut t = 0.0;
            for _ in 0..1000 {
                st.step(t, &mut a, &mut c, &no_input);
                t += st.h();
            }
            assert!((a.re - (0.7 * t).sin()).abs() < 1e-8, "{scheme:?} {a}");
            assert!((c[0].re - (0.7 * t).cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn uncoupled_oscillators_precess_exactly() {
        let sys = free_system(vec![-250.0, 3.0], 0.0);
        let st = Stepper::new(&sys, 0.05, Scheme::Collocation).unwrap();
        let mut a = Complex64::new(0.0, 0.0);
        let mut c = vec![Complex64::new(1.0, 0.0); 2];
        for k in 0..100 {
            st.step(k as f64 * 0.05, &mut a, &mut c, &no_input);
        }
        let want = Complex64::cis(250.0 * 5.0);
        assert!((c[0] - want).norm() < 1e-12);
        assert_eq!(a, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn empty_cavity_reflects_input() {
        // kappa = gamma1/2 with no atoms: a' = -a/2 + b_in, steady state a = 2 b_in,
        // so b_out = -b_in for a constant drive.
        let sys = CavitySystem {
            gamma1: 1.0,
            gamma2: 0.0,
            gamma21: 0.0,
            detunings: vec![],
            couplings: vec![],
        };
        let st = Stepper::new(&sys, 0.1, Scheme::Collocation).unwrap();
        let mut a = Complex64::new(0.0, 0.0);
        let mut c: Vec<Complex64> = vec![];
        let drive = |_t: f64| Complex64::new(1.0, 0.0);
        let mut last = None;
        for k in 0..800 {
            last = Some(st.step(k as f64 * 0.1, &mut a, &mut c, &drive));
        }
        let out = last.unwrap().output;
        assert!((out + 1.0).norm() < 1e-12);
        assert!((a - 2.0).norm() < 1e-12);
    }
}
