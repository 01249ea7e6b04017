//! Adaptive quadrature on finite and semi-infinite intervals, plus
//! finite-difference mixed partial derivatives with Richardson extrapolation.
//!
//! The integrands this crate cares about oscillate with a known half-period
//! (trig factors of the in-well wavenumber), so the adaptive driver accepts
//! an initial partition seeded at that scale and refines from there with a
//! 15-point Gauss-Kronrod rule.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Controls every integral in the crate.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    /// Dimensionless truncation of the semi-infinite wavenumber integrals,
    /// in units of kappa = k*a.
    pub k_max: f64,
    /// Relative tolerance on each integral.
    pub rel_tol: f64,
    /// Absolute floor below which refinement stops.
    pub abs_tol: f64,
    /// Cap on adaptive subdivisions per integral.
    pub max_panels: usize,
    /// Initial panel width in units of the integrand's oscillation
    /// half-period (when the caller supplies one).
    pub panel_seed: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            k_max: 40.0 * std::f64::consts::PI,
            rel_tol: 1e-9,
            abs_tol: 1e-14,
            max_panels: 1 << 16,
            panel_seed: 1.0,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_max > 0.0) {
            return Err(Error::InvalidConfig(format!("k_max must be > 0, got {}", self.k_max)));
        }
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be > 0".into()));
        }
        if self.max_panels < 1 {
            return Err(Error::InvalidConfig("max_panels must be >= 1".into()));
        }
        if !(self.panel_seed > 0.0) {
            return Err(Error::InvalidConfig("panel_seed must be > 0".into()));
        }
        Ok(())
    }
}

/// Finite-difference configuration for the diagonal mixed partial.
#[derive(Debug, Clone, Copy)]
pub struct FDConfig {
    /// Base step, dimensionless relative to max(kappa, 1).
    pub h0: f64,
    /// Number of step-halving levels in the Richardson table.
    pub richardson_levels: usize,
}

impl Default for FDConfig {
    fn default() -> Self {
        Self { h0: 1e-3, richardson_levels: 3 }
    }
}

impl FDConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h0 > 0.0) {
            return Err(Error::InvalidConfig(format!("h0 must be > 0, got {}", self.h0)));
        }
        if self.richardson_levels < 2 {
            return Err(Error::InvalidConfig("richardson_levels must be >= 2".into()));
        }
        Ok(())
    }
}

/// Result of a finite-interval integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    /// Achieved absolute error estimate.
    pub error: f64,
    pub panels: usize,
}

/// Result of a semi-infinite integration: the `[0, upper]` part plus an
/// envelope-based estimate of what was truncated.
#[derive(Debug, Clone, Copy)]
pub struct SemiInfinite {
    /// Integral over `[0, upper]`.
    pub value: f64,
    /// Quadrature error estimate on `[0, upper]`.
    pub error: f64,
    /// Estimated magnitude of the discarded tail beyond `upper`, from a
    /// power-law fit of the integrand envelope on the last decade.
    pub tail: f64,
    /// Fitted decay exponent p of |f| ~ C k^-p.
    pub tail_exponent: f64,
    /// True when the tail estimate exceeds `rel_tol * |value|`, i.e. the
    /// truncation, not the quadrature, limits the accuracy.
    pub tail_dominated: bool,
    pub panels: usize,
}

// 15-point Kronrod nodes and weights with the embedded 7-point Gauss rule.
const XGK15: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WG7: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
const WGK15: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// One Gauss-Kronrod 15 application on `[a, b]`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);

    let mut fv1 = [0.0f64; 8];
    let mut fv2 = [0.0f64; 8];
    let mut res_gauss = fc * WG7[3];
    let mut res_kronrod = fc * WGK15[7];
    let mut res_abs = res_kronrod.abs();

    for j in 0..7 {
        let x = half * XGK15[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        let sum = f1 + f2;
        if j % 2 != 0 {
            res_gauss += WG7[j / 2] * sum;
        }
        res_kronrod += WGK15[j] * sum;
        res_abs += WGK15[j] * (f1.abs() + f2.abs());
    }

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK15[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK15[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let err = (res_kronrod - res_gauss) * half;
    let value = res_kronrod * half;
    (value, rescale_error(err, res_abs * half.abs(), res_asc * half.abs()))
}

#[derive(Debug)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive integration over the partition given by `breaks` (sorted,
/// including both endpoints). Panels are bisected worst-first until the
/// summed error estimate meets `max(rel_tol*|I|, abs_tol)`.
pub fn integrate_with_breakpoints<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Quadrature> {
    cfg.validate()?;
    if breaks.len() < 2 {
        return Err(Error::InvalidConfig("need at least two breakpoints".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut error = 0.0;
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if !(hi > lo) {
            return Err(Error::InvalidConfig(format!("breakpoints not increasing: {lo} >= {hi}")));
        }
        let (v, e) = gk15(&f, lo, hi);
        value += v;
        error += e;
        heap.push(Panel { lo, hi, value: v, error: e });
    }

    while error > f64::max(cfg.rel_tol * value.abs(), cfg.abs_tol) {
        if heap.len() >= cfg.max_panels {
            return Err(Error::NonConvergence {
                value,
                error,
                target: f64::max(cfg.rel_tol * value.abs(), cfg.abs_tol),
                panels: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap cannot be empty here");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // interval at floating-point resolution; keep its estimate
            error -= worst.error;
            value += 0.0;
            let mut kept = worst;
            kept.error = 0.0;
            heap.push(kept);
            continue;
        }
        let (v1, e1) = gk15(&f, worst.lo, mid);
        let (v2, e2) = gk15(&f, mid, worst.hi);
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Panel { lo: worst.lo, hi: mid, value: v1, error: e1 });
        heap.push(Panel { lo: mid, hi: worst.hi, value: v2, error: e2 });
    }

    Ok(Quadrature { value, error, panels: heap.len() })
}

/// Adaptive integration of `f` on `[lo, hi]`.
///
/// `half_period`, when given, is the oscillation half-period of the
/// integrand; the initial partition uses panels of `panel_seed` half-periods
/// so the subdivision never aliases the oscillation.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    half_period: Option<f64>,
    cfg: &QuadratureConfig,
) -> Result<Quadrature> {
    if !(hi > lo) {
        return Err(Error::InvalidConfig(format!("empty interval [{lo}, {hi}]")));
    }
    let breaks = match half_period {
        Some(hp) if hp > 0.0 => uniform_partition(lo, hi, cfg.panel_seed * hp),
        _ => vec![lo, hi],
    };
    integrate_with_breakpoints(f, &breaks, cfg)
}

/// Evenly spaced breakpoints covering `[lo, hi]` with panels at most
/// `width` wide.
pub fn uniform_partition(lo: f64, hi: f64, width: f64) -> Vec<f64> {
    let n = (((hi - lo) / width).ceil() as usize).max(1);
    let mut breaks = Vec::with_capacity(n + 1);
    for i in 0..=n {
        breaks.push(lo + (hi - lo) * (i as f64) / (n as f64));
    }
    breaks
}

/// Integrate `f` over `[0, upper]` and report a power-law tail estimate for
/// the discarded `[upper, inf)` part.
///
/// The integrand must decay at least like 1/k^2 beyond `upper`; the envelope
/// exponent is fitted on the last decade before the cutoff.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    upper: f64,
    half_period: Option<f64>,
    cfg: &QuadratureConfig,
) -> Result<SemiInfinite> {
    if !(upper > 0.0) {
        return Err(Error::InvalidConfig(format!("upper limit must be > 0, got {upper}")));
    }
    let q = integrate_adaptive(&f, 0.0, upper, half_period, cfg)?;
    let (tail, p) = tail_envelope(&f, upper);
    let tail_dominated = tail > f64::max(cfg.rel_tol * q.value.abs(), cfg.abs_tol);
    Ok(SemiInfinite {
        value: q.value,
        error: q.error,
        tail,
        tail_exponent: p,
        tail_dominated,
        panels: q.panels,
    })
}

/// Fit |f| ~ C k^-p on [upper/10, upper] from window maxima and integrate
/// the envelope beyond the cutoff. Returns (tail, p).
fn tail_envelope<F: Fn(f64) -> f64>(f: &F, upper: f64) -> (f64, f64) {
    const WINDOWS: usize = 8;
    const PER_WINDOW: usize = 8;
    let lo = upper / 10.0;
    let ratio = (upper / lo).powf(1.0 / (WINDOWS as f64));

    let mut pts = Vec::with_capacity(WINDOWS);
    let mut wlo = lo;
    for _ in 0..WINDOWS {
        let whi = wlo * ratio;
        let mut fmax: f64 = 0.0;
        for j in 0..PER_WINDOW {
            let x = wlo + (whi - wlo) * (j as f64 + 0.5) / (PER_WINDOW as f64);
            fmax = fmax.max(f(x).abs());
        }
        if fmax > 0.0 {
            pts.push((0.5 * (wlo + whi), fmax));
        }
        wlo = whi;
    }
    if pts.len() < 3 {
        // integrand is numerically zero out here; no meaningful tail
        return (0.0, f64::INFINITY);
    }

    // least-squares line through (ln k, ln fmax)
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(k, v) in &pts {
        let x = k.ln();
        let y = v.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let p = -slope;
    if !(p > 1.01) {
        // envelope too flat to bound the tail
        return (f64::INFINITY, p);
    }
    let c = intercept.exp();
    let tail = c * upper.powf(1.0 - p) / (p - 1.0);
    (tail, p)
}

/// Mixed partial result with its Richardson diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct MixedPartial {
    pub value: f64,
    /// Magnitude of the last Richardson correction.
    pub error: f64,
    /// Observed convergence order of the base stencil (about 2 for the
    /// central cross, about 1 for the forward-biased fallback).
    pub order: f64,
}

/// d^2 g / dk dk' on the diagonal (k, k), by a central cross stencil
/// Richardson-extrapolated over `richardson_levels` step halvings.
///
/// `k_scale` is the wavenumber unit that `fd.h0` is relative to: the base
/// step is `h0 * max(|k|, k_scale)`. Pass 1.0 for dimensionless arguments.
/// Near k = 0, where the central stencil would cross the axis, a
/// forward-biased cross stencil is used instead.
pub fn mixed_partial<G: Fn(f64, f64) -> f64>(
    g: G,
    k: f64,
    k_scale: f64,
    fd: &FDConfig,
) -> Result<MixedPartial> {
    fd.validate()?;
    let levels = fd.richardson_levels;
    let h_base = fd.h0 * k.abs().max(k_scale);
    let central = k > h_base;
    // base stencil order: central cross is O(h^2), forward cross is O(h)
    let (order_base, ratio): (f64, f64) = if central { (2.0, 4.0) } else { (1.0, 2.0) };

    let mut gmax: f64 = 0.0;
    let mut col = Vec::with_capacity(levels);
    for lvl in 0..levels {
        let h = h_base / (1u64 << lvl) as f64;
        let v = if central {
            let (a, b, c, d) = (
                g(k + h, k + h),
                g(k + h, k - h),
                g(k - h, k + h),
                g(k - h, k - h),
            );
            gmax = gmax.max(a.abs()).max(b.abs()).max(c.abs()).max(d.abs());
            (a - b - c + d) / (4.0 * h * h)
        } else {
            let (a, b, c, d) = (g(k + h, k + h), g(k + h, k), g(k, k + h), g(k, k));
            gmax = gmax.max(a.abs()).max(b.abs()).max(c.abs()).max(d.abs());
            (a - b - c + d) / (h * h)
        };
        col.push(v);
    }

    // Richardson table; error ratio `ratio` per halving for the base order.
    let mut table: Vec<Vec<f64>> = vec![col.clone()];
    for j in 1..levels {
        let fac = ratio.powi(j as i32);
        let prev = &table[j - 1];
        let mut next = Vec::with_capacity(levels - j);
        for i in 0..(levels - j) {
            next.push((fac * prev[i + 1] - prev[i]) / (fac - 1.0));
        }
        table.push(next);
    }
    let value = table[levels - 1][0];
    let prev_diag = table[levels - 2][0];
    let error = (value - prev_diag).abs();

    // observed order from the raw column
    let order = if levels >= 3 {
        let d1 = (col[1] - col[0]).abs();
        let d2 = (col[2] - col[1]).abs();
        if d2 > 0.0 && d1 > 0.0 {
            (d1 / d2).log2()
        } else {
            order_base
        }
    } else {
        order_base
    };

    // Non-contracting corrections flag a bad step size, but only when they
    // are a meaningful fraction of the value itself; sub-1% jitter is the
    // stencil's roundoff floor (eps * gmax / h^2 scale), not instability.
    let h_min = h_base / (1u64 << (levels - 1)) as f64;
    let floor = 4.0 * f64::EPSILON * gmax / (h_min * h_min);
    if levels >= 3 {
        let c_prev = (table[levels - 2][1] - table[levels - 2][0]).abs();
        if error > c_prev && error > (1e-2 * value.abs()).max(1e2 * floor) {
            return Err(Error::DerivativeUnstable { k, previous: c_prev, last: error });
        }
    }

    Ok(MixedPartial { value, error, order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn constant_integrates_exactly() {
        let q = integrate_adaptive(|_| 1.0, 0.0, 1.0, None, &cfg()).unwrap();
        assert!((q.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sine_over_half_period() {
        let q = integrate_adaptive(f64::sin, 0.0, PI, None, &cfg()).unwrap();
        assert!((q.value - 2.0).abs() < 1e-12, "got {}", q.value);
    }

    /// Independent oracle: fixed-grid composite Simpson with 1e7 points.
    fn simpson_oracle<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
        let n = if n % 2 == 0 { n + 1 } else { n };
        let h = (hi - lo) / (n - 1) as f64;
        let mut s = f(lo) + f(hi);
        for i in 1..n - 1 {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(lo + h * i as f64);
        }
        s * h / 3.0
    }

    #[test]
    fn oscillatory_matches_simpson_oracle() {
        let f = |x: f64| x.sin().powi(2) / (1.0 + x * x);
        let oracle = simpson_oracle(f, 0.0, 40.0 * PI, 10_000_000);
        let q = integrate_adaptive(f, 0.0, 40.0 * PI, Some(PI), &cfg()).unwrap();
        assert!(
            (q.value - oracle).abs() <= 1e-10 * oracle.abs(),
            "adaptive {} vs simpson {}",
            q.value,
            oracle
        );
    }

    #[test]
    fn semi_infinite_exponential() {
        // e^-x is not power-law; integrate over a wide window so the tail
        // fit sees an effectively super-polynomial (steep) envelope
        let s = integrate_semi_infinite(|x: f64| (-x).exp(), 60.0, None, &cfg()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-10, "got {}", s.value);
        assert!(!s.tail_dominated, "tail {} p {}", s.tail, s.tail_exponent);
    }

    #[test]
    fn semi_infinite_lorentzian() {
        let s = integrate_semi_infinite(|x: f64| 1.0 / (1.0 + x * x), 1e7, None, &cfg()).unwrap();
        let expected = PI / 2.0 - (1.0f64 / 1e7).atan();
        assert!((s.value - expected).abs() < 1e-9 * expected);
        // fitted envelope should see p ~ 2 and a tail ~ 1e-7
        assert!((s.tail_exponent - 2.0).abs() < 0.05, "p = {}", s.tail_exponent);
        assert!(s.tail > 0.5e-7 && s.tail < 2e-7, "tail = {}", s.tail);
    }

    #[test]
    fn non_convergence_reports_partial_value() {
        let tight = QuadratureConfig { max_panels: 4, rel_tol: 1e-15, abs_tol: 1e-300, ..cfg() };
        let err = integrate_adaptive(|x: f64| (50.0 * x).sin().abs(), 0.0, 10.0, None, &tight)
            .unwrap_err();
        match err {
            Error::NonConvergence { panels, .. } => assert!(panels >= 4),
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn mixed_partial_bilinear_is_exact() {
        let fd = FDConfig::default();
        for &k in &[0.0, 0.3, 0.7, 2.0, 100.0] {
            let mp = mixed_partial(|x, y| x * y, k, 1.0, &fd).unwrap();
            assert!((mp.value - 1.0).abs() < 1e-9, "k={k}: {}", mp.value);
        }
    }

    #[test]
    fn mixed_partial_product_of_sines() {
        // h large enough that truncation, not roundoff, is eliminated by
        // the Richardson passes
        let fd = FDConfig { h0: 1e-2, richardson_levels: 3 };
        let k = 0.7;
        let mp = mixed_partial(|x: f64, y: f64| x.sin() * y.sin(), k, 1.0, &fd).unwrap();
        let exact = k.cos().powi(2);
        assert!((mp.value - exact).abs() < 1e-10, "{} vs {exact}", mp.value);
        assert!((mp.order - 2.0).abs() < 1.0, "order {}", mp.order);
    }

    #[test]
    fn mixed_partial_richardson_ratio_near_four() {
        // on a smooth function the raw central stencil errors shrink ~4x
        // per halving; observed order ~2 within a factor of two
        let fd = FDConfig { h0: 1e-2, richardson_levels: 4 };
        let mp = mixed_partial(|x: f64, y: f64| (x * y).exp(), 0.8, 1.0, &fd).unwrap();
        let exact = (0.64f64).exp() * (1.0 + 0.64);
        assert!((mp.value - exact).abs() < 1e-9 * exact);
        assert!(mp.order > 1.0 && mp.order < 4.0, "order {}", mp.order);
    }

    #[test]
    fn linearity_of_integration() {
        let f = |x: f64| (1.3 * x).sin();
        let g = |x: f64| 1.0 / (1.0 + x * x);
        let (a, b) = (0.6, -2.3);
        let qf = integrate_adaptive(f, 0.0, 5.0, None, &cfg()).unwrap().value;
        let qg = integrate_adaptive(g, 0.0, 5.0, None, &cfg()).unwrap().value;
        let qc = integrate_adaptive(|x| a * f(x) + b * g(x), 0.0, 5.0, None, &cfg())
            .unwrap()
            .value;
        assert!((qc - (a * qf + b * qg)).abs() < 1e-11);
    }

    #[test]
    fn tightening_tolerance_never_worsens_error() {
        let f = |x: f64| (10.0 * x).sin() / (1.0 + x);
        let mut last = f64::INFINITY;
        for rt in [1e-4, 1e-6, 1e-8, 1e-10] {
            let c = QuadratureConfig { rel_tol: rt, ..cfg() };
            let q = integrate_adaptive(f, 0.0, 20.0, Some(PI / 10.0), &c).unwrap();
            assert!(q.error <= last * (1.0 + 1e-12), "rt={rt}: {} > {last}", q.error);
            last = q.error;
        }
    }
}
