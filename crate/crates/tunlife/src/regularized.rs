//! Convergence-factor verification path: damp the time integrals with
//! e^{-alpha t}, do the time integration in closed form, evaluate the
//! remaining double wavenumber integral numerically, and extrapolate
//! alpha -> 0.
//!
//! The damped kernels are nascent deltas concentrated on the diagonal
//! k' = k with half-width sqrt(k^2 + 2 alpha) - k in k', so the inner
//! integral gets a refined panel window there and ordinary panels outside.

use crate::error::{Error, Result};
use crate::quad::{self, QuadratureConfig};
use crate::spectral::{PotentialSpec, SpectralKernel};
use std::cell::Cell;
use std::f64::consts::PI;

/// Decreasing positive damping rates, in units of 1/t0.
#[derive(Debug, Clone)]
pub struct AlphaSchedule {
    alphas: Vec<f64>,
}

impl AlphaSchedule {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.len() < 3 {
            return Err(Error::InvalidConfig(format!(
                "alpha schedule needs at least 3 entries, got {}",
                alphas.len()
            )));
        }
        for w in alphas.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::InvalidConfig("alpha schedule must be strictly decreasing".into()));
            }
        }
        if !(alphas[alphas.len() - 1] > 0.0) {
            return Err(Error::InvalidConfig("alpha schedule must be positive".into()));
        }
        Ok(Self { alphas })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Suits decay on the natural time scale t0.
    pub fn standard() -> Self {
        Self { alphas: vec![0.2, 0.1, 0.05, 0.025] }
    }

    /// Suits the slow decay near a bound-state threshold, where the damped
    /// moments vary on the scale of the inverse decay time and the standard
    /// schedule cannot be extrapolated.
    pub fn near_threshold() -> Self {
        Self { alphas: vec![4e-3, 2e-3, 1e-3, 5e-4] }
    }

    /// Standard schedule, switching to the near-threshold one within 0.5 of
    /// a bound-state opening in v0 a^2.
    pub fn for_spec(spec: &PotentialSpec) -> Self {
        let v = spec.v0a2();
        for thr in bound_state_thresholds_v0a2(4) {
            if (v - thr).abs() < 0.5 {
                return Self::near_threshold();
            }
        }
        Self::standard()
    }
}

impl Default for AlphaSchedule {
    fn default() -> Self {
        Self::standard()
    }
}

/// Well depths v0 a^2 at which the n-th bound state appears: the roots of
/// tan x = -x (matching sin(qa) inside to the decaying 1/x solution of the
/// l = 1 exterior at zero energy) via -2 v0 a^2 = x_n^2.
pub fn bound_state_thresholds_v0a2(count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let f = |x: f64| x.sin() + x * x.cos();
    for n in 1..=count {
        let mut lo = (2.0 * n as f64 - 1.0) * PI / 2.0 + 1e-9;
        let mut hi = n as f64 * PI - 1e-9;
        // f changes sign once in each such interval
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let x = 0.5 * (lo + hi);
        out.push(-x * x / 2.0);
    }
    out
}

/// Damped denominator: integral over (0,inf)^2 of
/// Phi(k,k') alpha / (alpha^2 + f^2), with alpha_bar in units 1/t0.
///
/// Equals integral dP(t) e^{-alpha t} dt for alpha > 0.
pub fn regularized_denominator(
    spec: &PotentialSpec,
    alpha_bar: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    double_integral(spec, alpha_bar, cfg, DampedKernel::Denominator)
}

/// Damped numerator: integral of Phi(k,k') * Re 2/(alpha - i f)^3
/// = Phi * 2 alpha (alpha^2 - 3 f^2) / (alpha^2 + f^2)^3.
///
/// Equals integral t^2 dP(t) e^{-alpha t} dt; the sharpest kernel of the
/// pair and the accuracy-critical path.
pub fn regularized_numerator(
    spec: &PotentialSpec,
    alpha_bar: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    double_integral(spec, alpha_bar, cfg, DampedKernel::Numerator)
}

#[derive(Clone, Copy)]
enum DampedKernel {
    Denominator,
    Numerator,
}

impl DampedKernel {
    fn eval(self, alpha: f64, f: f64) -> f64 {
        let d = alpha * alpha + f * f;
        match self {
            DampedKernel::Denominator => alpha / d,
            DampedKernel::Numerator => 2.0 * alpha * (alpha * alpha - 3.0 * f * f) / (d * d * d),
        }
    }
}

fn double_integral(
    spec: &PotentialSpec,
    alpha_bar: f64,
    cfg: &QuadratureConfig,
    kernel: DampedKernel,
) -> Result<f64> {
    if !(alpha_bar > 0.0) {
        return Err(Error::InvalidConfig(format!("alpha must be > 0, got {alpha_bar}")));
    }
    let kern = SpectralKernel::new(*spec);
    let a = spec.a();
    let alpha = alpha_bar / spec.t0();
    let upper = cfg.k_max / a;
    let inner_fail: Cell<Option<Error>> = Cell::new(None);

    // the outer adaptive pass cannot certify below the noise of the inner
    // evaluations, so the inner integrals run two orders tighter
    let inner_cfg = QuadratureConfig {
        rel_tol: (cfg.rel_tol * 1e-2).max(1e-13),
        max_panels: cfg.max_panels.min(4096),
        ..*cfg
    };

    let outer = quad::integrate_adaptive(
        |k| {
            if k <= 0.0 {
                return 0.0;
            }
            let phi_k = kern.phi(k);
            if phi_k == 0.0 {
                return 0.0;
            }
            let breaks = diagonal_partition(k, alpha, upper, a);
            let inner = quad::integrate_with_breakpoints(
                |kp| {
                    kern.big_phi(k, kp) * kernel.eval(alpha, kern.phase_f(k, kp))
                },
                &breaks,
                &inner_cfg,
            );
            match inner {
                Ok(q) => q.value,
                Err(e) => {
                    if inner_fail.take().is_none() {
                        inner_fail.set(Some(Error::PeakUnresolved { k, source: Box::new(e) }));
                    }
                    0.0
                }
            }
        },
        0.0,
        upper,
        Some(PI / a),
        cfg,
    )?;
    if let Some(e) = inner_fail.take() {
        return Err(e);
    }
    Ok(outer.value)
}

/// Breakpoints on [0, upper] for the inner k' integral: base panels of a
/// trig half-period, plus a window around k' = k refined to the width of
/// the nascent-delta peak, |f| <= alpha at |k' - k| <= w with
/// w = sqrt(k^2 + 2 alpha) - k.
fn diagonal_partition(k: f64, alpha: f64, upper: f64, a: f64) -> Vec<f64> {
    let w = (k * k + 2.0 * alpha).sqrt() - k;
    let win_lo = (k - 20.0 * w).max(0.0);
    let win_hi = (k + 20.0 * w).min(upper);
    let base = PI / a;

    let mut breaks = Vec::new();
    if win_lo > 0.0 {
        breaks.extend(quad::uniform_partition(0.0, win_lo, base));
        breaks.pop();
    }
    breaks.extend(quad::uniform_partition(win_lo, win_hi, w / 2.0));
    if win_hi < upper {
        breaks.pop();
        breaks.extend(quad::uniform_partition(win_hi, upper, base));
    }
    breaks
}

/// Extrapolated limit with the magnitude of the last correction as error
/// estimate.
#[derive(Debug, Clone, Copy)]
pub struct Extrapolated {
    pub value: f64,
    pub error: f64,
}

/// Polynomial (Neville) extrapolation of the damped values to alpha = 0.
///
/// The damped moments are smooth in alpha with a genuine linear term (the
/// first time moment), so the tableau runs in alpha itself; a model that is
/// exactly polynomial in alpha^2 is still reproduced to machine precision.
pub fn extrapolate_alpha(schedule: &AlphaSchedule, values: &[f64]) -> Result<Extrapolated> {
    let alphas = schedule.alphas();
    if values.len() != alphas.len() {
        return Err(Error::InvalidConfig(format!(
            "schedule has {} alphas but {} values were supplied",
            alphas.len(),
            values.len()
        )));
    }
    let n = alphas.len();
    // Neville tableau evaluated at alpha = 0; diag[m] is the extrapolation
    // through the first m+1 points.
    let mut row = values.to_vec();
    let mut diag = vec![row[0]];
    for m in 1..n {
        for i in 0..(n - m) {
            row[i] = ((0.0 - alphas[i + m]) * row[i] + (alphas[i] - 0.0) * row[i + 1])
                / (alphas[i] - alphas[i + m]);
        }
        diag.push(row[0]);
    }
    let value = diag[n - 1];
    let last = (diag[n - 1] - diag[n - 2]).abs();
    let prev = (diag[n - 2] - diag[n - 3]).abs();
    let floor = 1e3 * f64::EPSILON * value.abs().max(1e-300);
    if last > prev && last > floor {
        return Err(Error::NonContracting { previous: prev, last });
    }
    Ok(Extrapolated { value, error: last })
}

/// All per-alpha damped denominators plus their alpha -> 0 limit.
pub fn denominator_alpha_limit(
    spec: &PotentialSpec,
    schedule: &AlphaSchedule,
    cfg: &QuadratureConfig,
) -> Result<(Extrapolated, Vec<f64>)> {
    let values: Result<Vec<f64>> = schedule
        .alphas()
        .iter()
        .map(|&ab| regularized_denominator(spec, ab, cfg))
        .collect();
    let values = values?;
    let ex = extrapolate_alpha(schedule, &values)?;
    Ok((ex, values))
}

/// All per-alpha damped numerators plus their alpha -> 0 limit.
pub fn numerator_alpha_limit(
    spec: &PotentialSpec,
    schedule: &AlphaSchedule,
    cfg: &QuadratureConfig,
) -> Result<(Extrapolated, Vec<f64>)> {
    let values: Result<Vec<f64>> = schedule
        .alphas()
        .iter()
        .map(|&ab| regularized_numerator(spec, ab, cfg))
        .collect();
    let values = values?;
    let ex = extrapolate_alpha(schedule, &values)?;
    Ok((ex, values))
}
