//! Closed-form spectral quantities for a square well of depth `v0 < 0` on
//! `[0, a]` behind an l = 1 centrifugal barrier, in units hbar = m = 1.
//!
//! The initial state is the ground mode sqrt(2/a) sin(pi x / a) confined to
//! the well. Its continuum expansion is carried by the amplitude `phi(k)`;
//! everything downstream (survival probability, time moments) is built from
//! the kernel Phi(k,k') = phi(k) phi(k') chi(q,q') and the phase
//! f(k,k') = (k'^2 - k^2)/2.

use crate::error::{Error, Result};

/// The physical setup: well width, well depth, angular momentum.
///
/// All derived quantities depend on the dimensionless product `v0 * a^2`;
/// `a` alone fixes the length and time scales (natural time unit
/// `t0 = 2 a^2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec {
    a: f64,
    v0: f64,
    ell: u32,
}

impl PotentialSpec {
    /// Well of width `a > 0` and depth `v0 <= 0`, angular momentum `ell`.
    ///
    /// Only `ell = 1` is admitted: the continuum normalization below is the
    /// l = 1 form, and a silently wrong formula is worse than an error.
    pub fn new(a: f64, v0: f64, ell: u32) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidConfig(format!("well width a must be > 0, got {a}")));
        }
        if !(v0 <= 0.0) || !v0.is_finite() {
            return Err(Error::InvalidConfig(format!("well depth v0 must be <= 0, got {v0}")));
        }
        if ell != 1 {
            return Err(Error::InvalidConfig(format!(
                "only ell = 1 is supported, got {ell}"
            )));
        }
        Ok(Self { a, v0, ell })
    }

    /// Width `a` and depth `v0` with `ell = 1`.
    pub fn with_ell_one(a: f64, v0: f64) -> Result<Self> {
        Self::new(a, v0, 1)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    /// Natural time unit t0 = 2 a^2.
    pub fn t0(&self) -> f64 {
        2.0 * self.a * self.a
    }

    /// Centrifugal barrier height at the well edge: l(l+1) / (2 a^2).
    pub fn barrier_height(&self) -> f64 {
        (self.ell * (self.ell + 1)) as f64 / (2.0 * self.a * self.a)
    }

    /// The dimensionless well-depth parameter v0 * a^2.
    pub fn v0a2(&self) -> f64 {
        self.v0 * self.a * self.a
    }
}

/// sin(z)/z with a series branch near zero.
pub(crate) fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        let z2 = z * z;
        1.0 - z2 / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0))
    } else {
        z.sin() / z
    }
}

/// In-well overlap integral of sin(qx) sin(q'x) over [0, a].
///
/// Evaluated in the cancellation-free rearrangement
///     chi = (a/2) sinc((q'-q) a) - sin((q+q') a) / (2 (q+q')),
/// which is algebraically identical to the usual
/// [q' cos(q'a) sin(qa) - q cos(qa) sin(q'a)] / (q^2 - q'^2) off the
/// diagonal and continues it through q = q', where the value is
/// a/2 - sin(2qa)/(4q).
pub fn chi(q: f64, q_prime: f64, a: f64) -> f64 {
    let d = 0.5 * (q_prime - q) * a;
    let s = q + q_prime;
    0.5 * a * sinc(2.0 * d) - (s * a).sin() / (2.0 * s)
}

/// All spectral evaluations for one potential.
#[derive(Debug, Clone, Copy)]
pub struct SpectralKernel {
    spec: PotentialSpec,
}

impl SpectralKernel {
    pub fn new(spec: PotentialSpec) -> Self {
        Self { spec }
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    /// In-well wavenumber q(k) = sqrt(k^2 - 2 v0); real since v0 <= 0.
    pub fn q_of_k(&self, k: f64) -> f64 {
        (k * k - 2.0 * self.spec.v0).sqrt()
    }

    /// Dimensionless continuum normalization (f a)^2 for l = 1:
    ///     [(1+K^2) A^2 cos^2 A + (1-K^2+K^4) sin^2 A + A sin 2A] / K^2
    /// with K = k a, A = q a. Strictly positive for k > 0 (the quadratic
    /// form in (A cos A, sin A) has determinant K^6).
    pub fn f_squared(&self, k: f64) -> f64 {
        let kappa2 = (k * self.spec.a) * (k * self.spec.a);
        self.norm_bracket(k) / kappa2
    }

    /// The bracket (f a)^2 * K^2, shared by `f_squared`, `phi` and the
    /// spectral density.
    fn norm_bracket(&self, k: f64) -> f64 {
        let kappa = k * self.spec.a;
        let alpha = self.q_of_k(k) * self.spec.a;
        let k2 = kappa * kappa;
        let (s, c) = alpha.sin_cos();
        (1.0 + k2) * alpha * alpha * c * c
            + (1.0 - k2 + k2 * k2) * s * s
            + alpha * (2.0 * alpha).sin()
    }

    /// Spectral amplitude of the initial state:
    ///     phi(k) = 2 sqrt(2a) sin(qa)/[pi^2 - (qa)^2] * (ka)^4 / bracket.
    ///
    /// The removable point qa = pi is continued through
    /// sin(A)/(pi^2 - A^2) = sinc(A - pi)/(pi + A); the k = 0 endpoint is
    /// continued by zero. Even in k by construction (only k^2 enters).
    pub fn phi(&self, k: f64) -> f64 {
        if k == 0.0 {
            return 0.0;
        }
        let a = self.spec.a;
        let kappa = k * a;
        let alpha = self.q_of_k(k) * a;
        let shape = sinc(alpha - std::f64::consts::PI) / (std::f64::consts::PI + alpha);
        2.0 * (2.0 * a).sqrt() * shape * (kappa * kappa) * (kappa * kappa) / self.norm_bracket(k)
    }

    /// Overlap kernel Phi(k,k') = phi(k) phi(k') chi(q, q').
    /// Symmetric under k <-> k' and even in each argument.
    pub fn big_phi(&self, k: f64, k_prime: f64) -> f64 {
        self.phi(k) * self.phi(k_prime) * chi(self.q_of_k(k), self.q_of_k(k_prime), self.spec.a)
    }

    /// Psi(k,k') = Phi(k,k') / (k k'); continued by zero on the axes.
    pub fn psi_kernel(&self, k: f64, k_prime: f64) -> f64 {
        if k == 0.0 || k_prime == 0.0 {
            return 0.0;
        }
        self.big_phi(k, k_prime) / (k * k_prime)
    }

    /// Oscillation phase rate f(k,k') = [(k'a)^2 - (ka)^2] / t0
    /// = (k'^2 - k^2)/2 in natural units.
    pub fn phase_f(&self, k: f64, k_prime: f64) -> f64 {
        let a2 = self.spec.a * self.spec.a;
        (k_prime * k_prime - k * k) * a2 / self.spec.t0()
    }

    /// Norm density of the continuum expansion, |<psi_k|Psi_0>|^2:
    ///     rho(k) = phi^2(k) * pi * (f a)^2 / (2 (ka)^2).
    ///
    /// Integrates to 1 minus the bound-state occupation. This carries the
    /// normalization weight relating the amplitude phi (which multiplies
    /// the raw interior shape sin(qx)) to the delta-orthonormal states;
    /// verified by reconstructing the initial state at t = 0.
    pub fn spectral_density(&self, k: f64) -> f64 {
        if k == 0.0 {
            return 0.0;
        }
        let kappa = k * self.spec.a;
        let phi = self.phi(k);
        let k4 = kappa * kappa * kappa * kappa;
        phi * phi * std::f64::consts::PI * self.norm_bracket(k) / (2.0 * k4)
    }

    /// Kinetic-plus-potential eigenvalue of the continuum state labeled k.
    pub fn energy(&self, k: f64) -> f64 {
        0.5 * k * k
    }
}
