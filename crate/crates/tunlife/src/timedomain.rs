//! Brute-force verification path: rebuild the unbound wavepacket on fixed
//! grids, integrate |Psi_u|^2 over the well at each time sample, and take
//! the time moments directly with an explicit cutoff.
//!
//! This is the rapidly-oscillating route the single-quadrature method
//! replaces. It is deliberately naive evaluation-wise, but the wavenumber
//! grid must resolve the e^{-i k^2 t / 2} chirp out to the cutoff time:
//! panels are sized so the phase change per panel stays below a fixed
//! budget, otherwise the discrete sum stops tracking the continuum integral
//! at late times and leaves a non-decaying noise floor.

use crate::error::{Error, Result};
use crate::spectral::{chi, PotentialSpec, SpectralKernel};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

// 16-point Gauss-Legendre nodes (positive half) and weights on [-1, 1].
const GL16_X: [f64; 8] = [
    0.095_012_509_837_637_440_185,
    0.281_603_550_779_258_913_230,
    0.458_016_777_657_227_386_342,
    0.617_876_244_402_643_748_447,
    0.755_404_408_355_003_033_895,
    0.865_631_202_387_831_743_880,
    0.944_575_023_073_232_576_078,
    0.989_400_934_991_649_932_596,
];
const GL16_W: [f64; 8] = [
    0.189_450_610_455_068_496_285,
    0.182_603_415_044_923_588_867,
    0.169_156_519_395_002_538_189,
    0.149_595_988_816_576_732_081,
    0.124_628_971_255_533_872_052,
    0.095_158_511_682_492_784_810,
    0.062_253_523_938_647_892_863,
    0.027_152_459_411_754_094_852,
];

/// Append the 16 Gauss-Legendre nodes/weights for `[lo, hi]`.
fn push_gl16(lo: f64, hi: f64, nodes: &mut Vec<f64>, weights: &mut Vec<f64>) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    for j in (0..8).rev() {
        nodes.push(c - h * GL16_X[j]);
        weights.push(h * GL16_W[j]);
    }
    for j in 0..8 {
        nodes.push(c + h * GL16_X[j]);
        weights.push(h * GL16_W[j]);
    }
}

/// Fixed grids for the time-domain reconstruction.
#[derive(Debug, Clone, Copy)]
pub struct TimeGridConfig {
    /// Cutoff time in units of t0.
    pub t_max: f64,
    /// Number of time samples on [0, t_max] (rounded up to odd for the
    /// composite Simpson rule).
    pub n_t: usize,
    /// Dimensionless wavenumber cutoff kappa = k a of the reconstruction
    /// grid. Kept well below the moment-quadrature cutoff: grid size grows
    /// like t_max * k_max^2.
    pub k_max: f64,
    /// Chirp phase budget per wavenumber panel, radians at t = t_max.
    pub phase_budget: f64,
    /// Number of 16-node panels on the x interval [0, a].
    pub x_panels: usize,
}

impl Default for TimeGridConfig {
    fn default() -> Self {
        Self { t_max: 50.0, n_t: 4096, k_max: 25.0, phase_budget: 6.0, x_panels: 8 }
    }
}

impl TimeGridConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0) {
            return Err(Error::InvalidConfig(format!("t_max must be > 0, got {}", self.t_max)));
        }
        if self.n_t < 9 {
            return Err(Error::InvalidConfig("n_t must be at least 9".into()));
        }
        if !(self.k_max > 0.0) || !(self.phase_budget > 0.0) || self.x_panels == 0 {
            return Err(Error::InvalidConfig("k_max, phase_budget, x_panels must be positive".into()));
        }
        Ok(())
    }
}

/// Wavenumber panel edges sized so that the chirp phase
/// ((k+w)^2 - k^2) t_max / 2 stays below `budget` radians per panel, and
/// never wider than pi/(2a) for the in-well trig factors.
pub fn chirp_panel_edges(k_max: f64, t_max: f64, budget: f64, a: f64) -> Vec<f64> {
    let cap = PI / (2.0 * a);
    let mut edges = vec![0.0f64];
    while *edges.last().unwrap() < k_max {
        let k = *edges.last().unwrap();
        let w_chirp = (k * k + 2.0 * budget / t_max).sqrt() - k;
        let w = w_chirp.min(cap).max(k_max * 1e-12);
        edges.push((k + w).min(k_max));
    }
    edges
}

/// Precomputed reconstruction machinery for one potential and one grid.
pub struct TimePropagator {
    spec: PotentialSpec,
    grid: TimeGridConfig,
    k_nodes: Vec<f64>,
    /// phi(k_i) * w_i, the coefficient each k node contributes.
    coeff: Vec<f64>,
    energies: Vec<f64>,
    x_nodes: Vec<f64>,
    x_weights: Vec<f64>,
    /// sin(q_i x_j), row-major (n_k rows of n_x).
    sin_qx: Vec<f64>,
}

impl TimePropagator {
    pub fn new(spec: PotentialSpec, grid: TimeGridConfig) -> Result<Self> {
        grid.validate()?;
        let kern = SpectralKernel::new(spec);
        let a = spec.a();
        let t_max_nat = grid.t_max * spec.t0();

        let edges = chirp_panel_edges(grid.k_max / a, t_max_nat, grid.phase_budget, a);
        let mut k_nodes = Vec::new();
        let mut k_weights = Vec::new();
        for w in edges.windows(2) {
            push_gl16(w[0], w[1], &mut k_nodes, &mut k_weights);
        }

        let mut x_nodes = Vec::new();
        let mut x_weights = Vec::new();
        for p in 0..grid.x_panels {
            let lo = a * p as f64 / grid.x_panels as f64;
            let hi = a * (p + 1) as f64 / grid.x_panels as f64;
            push_gl16(lo, hi, &mut x_nodes, &mut x_weights);
        }

        let coeff: Vec<f64> =
            k_nodes.iter().zip(&k_weights).map(|(&k, &w)| kern.phi(k) * w).collect();
        let energies: Vec<f64> = k_nodes.iter().map(|&k| kern.energy(k)).collect();

        let n_x = x_nodes.len();
        let mut sin_qx = vec![0.0f64; k_nodes.len() * n_x];
        for (i, &k) in k_nodes.iter().enumerate() {
            let q = kern.q_of_k(k);
            for (j, &x) in x_nodes.iter().enumerate() {
                sin_qx[i * n_x + j] = (q * x).sin();
            }
        }

        Ok(Self { spec, grid, k_nodes, coeff, energies, x_nodes, x_weights, sin_qx })
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn grid(&self) -> &TimeGridConfig {
        &self.grid
    }

    pub fn n_k(&self) -> usize {
        self.k_nodes.len()
    }

    /// Unbound wavepacket at (x, t), t in natural units:
    /// Psi_u = integral dk phi(k) sin(q x) e^{-i k^2 t / 2}.
    pub fn psi_u(&self, x: f64, t: f64) -> Complex64 {
        let kern = SpectralKernel::new(self.spec);
        let mut re = 0.0;
        let mut im = 0.0;
        for (i, &k) in self.k_nodes.iter().enumerate() {
            let s = (kern.q_of_k(k) * x).sin();
            let (ps, pc) = (self.energies[i] * t).sin_cos();
            re += self.coeff[i] * s * pc;
            im -= self.coeff[i] * s * ps;
        }
        Complex64::new(re, im)
    }

    /// Decaying part of the survival probability at time t (natural units):
    /// the norm of Psi_u inside the well. Nonnegative by construction.
    pub fn delta_p_in(&self, t: f64) -> f64 {
        let n_x = self.x_nodes.len();
        let mut acc_re = vec![0.0f64; n_x];
        let mut acc_im = vec![0.0f64; n_x];
        for i in 0..self.k_nodes.len() {
            let (ps, pc) = (self.energies[i] * t).sin_cos();
            let cr = self.coeff[i] * pc;
            let ci = -self.coeff[i] * ps;
            let row = &self.sin_qx[i * n_x..(i + 1) * n_x];
            for j in 0..n_x {
                acc_re[j] += cr * row[j];
                acc_im[j] += ci * row[j];
            }
        }
        let mut dp = 0.0;
        for j in 0..n_x {
            dp += self.x_weights[j] * (acc_re[j] * acc_re[j] + acc_im[j] * acc_im[j]);
        }
        debug_assert!(dp >= 0.0);
        dp
    }

    /// The same quantity through the double wavenumber sum
    /// Re sum_ij Phi(k_i, k_j) e^{i (E_j - E_i) t} on the same grid.
    /// O(n_k^2): meant for small verification grids, where it must agree
    /// with `delta_p_in` to the accuracy of the x quadrature.
    pub fn delta_p_in_double_k(&self, t: f64) -> f64 {
        let kern = SpectralKernel::new(self.spec);
        let n = self.k_nodes.len();
        let a = self.spec.a();
        let mut cos_e: Vec<f64> = Vec::with_capacity(n);
        let mut sin_e: Vec<f64> = Vec::with_capacity(n);
        for &e in &self.energies {
            let (s, c) = (e * t).sin_cos();
            cos_e.push(c);
            sin_e.push(s);
        }
        let qs: Vec<f64> = self.k_nodes.iter().map(|&k| kern.q_of_k(k)).collect();
        let mut dp = 0.0;
        for i in 0..n {
            for j in 0..n {
                let cc = cos_e[i] * cos_e[j] + sin_e[i] * sin_e[j];
                dp += self.coeff[i] * self.coeff[j] * chi(qs[i], qs[j], a) * cc;
            }
        }
        dp
    }
}

/// Time moments from the reconstruction, with the exponential-envelope tail
/// estimate beyond the cutoff.
#[derive(Debug, Clone, Copy)]
pub struct TimeDomainMoments {
    /// integral t^2 dP dt on [0, t_max] (natural units).
    pub num: f64,
    /// integral dP dt on [0, t_max].
    pub den: f64,
    /// Estimated truncated contributions beyond t_max.
    pub tail_num: f64,
    pub tail_den: f64,
    /// max(tail_num/num, tail_den/den).
    pub tail_bound: f64,
    /// Survival deficit at t = 0 (equals the in-well norm of Psi_u).
    pub dp0: f64,
    pub n_k: usize,
    pub n_t: usize,
}

/// Direct time quadrature of both moments on [0, t_max], composite Simpson
/// over n_t samples; errors with `TailDominated` when the envelope estimate
/// beyond the cutoff exceeds 5% of either moment.
pub fn moments_time_domain(spec: &PotentialSpec, grid: &TimeGridConfig) -> Result<TimeDomainMoments> {
    let prop = TimePropagator::new(*spec, *grid)?;
    moments_from_propagator(&prop)
}

/// Same as [`moments_time_domain`] but reusing a prebuilt propagator.
pub fn moments_from_propagator(prop: &TimePropagator) -> Result<TimeDomainMoments> {
    let grid = prop.grid();
    let t_max = grid.t_max * prop.spec().t0();
    let n_t = if grid.n_t % 2 == 1 { grid.n_t } else { grid.n_t + 1 };
    let dt = t_max / (n_t - 1) as f64;

    let dp: Vec<f64> = (0..n_t)
        .into_par_iter()
        .map(|i| prop.delta_p_in(dt * i as f64))
        .collect();

    // composite Simpson
    let mut num = dp[0] * 0.0;
    let mut den = dp[0];
    for (i, &v) in dp.iter().enumerate().take(n_t - 1).skip(1) {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        let t = dt * i as f64;
        num += w * t * t * v;
        den += w * v;
    }
    let t_end = dt * (n_t - 1) as f64;
    num += t_end * t_end * dp[n_t - 1];
    den += dp[n_t - 1];
    num *= dt / 3.0;
    den *= dt / 3.0;

    // exponential envelope fit on the last decade [t_max/10, t_max]
    let (tail_num, tail_den) = fit_exponential_tail(&dp, dt, t_max);
    let tail_bound = f64::max(tail_num / num.abs(), tail_den / den.abs());
    if !(tail_bound <= 0.05) {
        return Err(Error::TailDominated { tail: tail_bound, limit: 0.05 });
    }

    Ok(TimeDomainMoments {
        num,
        den,
        tail_num,
        tail_den,
        tail_bound,
        dp0: dp[0],
        n_k: prop.n_k(),
        n_t,
    })
}

/// Fit dP ~ C e^{-g t} from window maxima on [t_max/10, t_max] and integrate
/// the envelope beyond t_max. Returns (tail_num, tail_den); infinite when
/// the fitted envelope fails to decay.
fn fit_exponential_tail(dp: &[f64], dt: f64, t_max: f64) -> (f64, f64) {
    let start = ((t_max / 10.0) / dt).ceil() as usize;
    let m = dp.len() - start;
    const WINDOWS: usize = 20;
    if m < 2 * WINDOWS {
        return (f64::INFINITY, f64::INFINITY);
    }
    let per = m / WINDOWS;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    let mut n_pts = 0.0;
    for w in 0..WINDOWS {
        let lo = start + w * per;
        let hi = if w == WINDOWS - 1 { dp.len() } else { lo + per };
        let mut best_i = lo;
        let mut best = dp[lo];
        for i in lo..hi {
            if dp[i] > best {
                best = dp[i];
                best_i = i;
            }
        }
        let x = dt * best_i as f64;
        let y = best.max(1e-300).ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        n_pts += 1.0;
    }
    let slope = (n_pts * sxy - sx * sy) / (n_pts * sxx - sx * sx);
    let g = -slope;
    if !(g > 0.0) {
        return (f64::INFINITY, f64::INFINITY);
    }
    let c = ((sy - slope * sx) / n_pts).exp();
    let e = (-g * t_max).exp();
    let tail_den = c * e / g;
    let tail_num = c * e * (t_max * t_max / g + 2.0 * t_max / (g * g) + 2.0 / (g * g * g));
    (tail_num, tail_den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> TimeGridConfig {
        // coarse grid for identity checks: double-k sum is O(n^2)
        TimeGridConfig { t_max: 2.0, n_t: 65, k_max: 8.0, phase_budget: 12.0, x_panels: 8 }
    }

    #[test]
    fn psi_u_vanishes_at_origin() {
        let spec = PotentialSpec::with_ell_one(1.0, -4.0).unwrap();
        let prop = TimePropagator::new(spec, small_grid()).unwrap();
        for t in [0.0, 0.7, 3.0] {
            assert_eq!(prop.psi_u(0.0, t).norm(), 0.0);
        }
    }

    #[test]
    fn initial_norm_complete_without_well() {
        let spec = PotentialSpec::with_ell_one(1.0, 0.0).unwrap();
        let grid = TimeGridConfig { k_max: 25.0, ..small_grid() };
        let prop = TimePropagator::new(spec, grid).unwrap();
        let dp0 = prop.delta_p_in(0.0);
        assert!((dp0 - 1.0).abs() < 1e-3, "dp0 = {dp0}");
    }

    #[test]
    fn delta_p_nonnegative_and_bounded() {
        let spec = PotentialSpec::with_ell_one(1.0, -4.0).unwrap();
        let prop = TimePropagator::new(spec, small_grid()).unwrap();
        for i in 0..40 {
            let t = 0.1 * i as f64;
            let dp = prop.delta_p_in(t);
            assert!(dp >= 0.0);
            assert!(dp <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn x_integration_matches_double_k_sum() {
        let spec = PotentialSpec::with_ell_one(1.0, -4.0).unwrap();
        let prop = TimePropagator::new(spec, small_grid()).unwrap();
        for t in [0.0, 0.31, 1.7] {
            let via_x = prop.delta_p_in(t);
            let via_kk = prop.delta_p_in_double_k(t);
            assert!(
                (via_x - via_kk).abs() < 1e-8,
                "t={t}: {via_x} vs {via_kk}"
            );
        }
    }

    #[test]
    fn grid_refinement_is_stable() {
        let spec = PotentialSpec::with_ell_one(1.0, -4.0).unwrap();
        let g1 = TimeGridConfig { t_max: 5.0, n_t: 129, k_max: 20.0, phase_budget: 6.0, x_panels: 8 };
        let g2 = TimeGridConfig { phase_budget: 3.0, ..g1 };
        let p1 = TimePropagator::new(spec, g1).unwrap();
        let p2 = TimePropagator::new(spec, g2).unwrap();
        for t in [0.0, 2.0, 9.9] {
            let d = (p1.delta_p_in(t) - p2.delta_p_in(t)).abs();
            assert!(d < 1e-4, "t={t}: refinement moved dp by {d}");
        }
    }

    #[test]
    fn short_cutoff_is_tail_dominated() {
        let spec = PotentialSpec::with_ell_one(1.0, 0.0).unwrap();
        let grid = TimeGridConfig { t_max: 0.2, n_t: 129, k_max: 20.0, phase_budget: 6.0, x_panels: 8 };
        match moments_time_domain(&spec, &grid) {
            Err(Error::TailDominated { .. }) => {}
            other => panic!("expected TailDominated, got {other:?}"),
        }
    }

    #[test]
    fn halving_time_samples_barely_moves_moments() {
        let spec = PotentialSpec::with_ell_one(1.0, 0.0).unwrap();
        let g1 = TimeGridConfig { t_max: 10.0, n_t: 2049, k_max: 20.0, phase_budget: 6.0, x_panels: 8 };
        let g2 = TimeGridConfig { n_t: 1025, ..g1 };
        let m1 = moments_time_domain(&spec, &g1).unwrap();
        let m2 = moments_time_domain(&spec, &g2).unwrap();
        assert!(((m1.num - m2.num) / m1.num).abs() < 5e-3);
        assert!(((m1.den - m2.den) / m1.den).abs() < 5e-3);
    }
}
