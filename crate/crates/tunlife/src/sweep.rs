//! Parameter sweeps over the dimensionless well depth v0 a^2, producing one
//! lifetime record per grid point for tau_bar vs <e> curves, with CSV/JSON
//! serialization and an optional SVG rendering.

use crate::error::Result;
use crate::moments::{self, MomentResult};
use crate::quad::{FDConfig, QuadratureConfig};
use crate::spectral::PotentialSpec;
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

pub const CSV_HEADER: &str =
    "v0a2,e_mean,tau_bar,t2_mean,t_bar,deficit,bound_state,num,den,tail_flag,status";

/// One sweep grid point. Failed rows keep their grid location and carry the
/// failure text in `status`; numeric fields are NaN there.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub v0a2: f64,
    pub e_mean: f64,
    pub tau_bar: f64,
    pub t2_mean: f64,
    pub t_bar: f64,
    pub deficit: f64,
    pub bound_state: bool,
    pub num: f64,
    pub den: f64,
    pub tail_flag: bool,
    pub status: String,
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl SweepRow {
    fn from_result(v0a2: f64, r: &MomentResult, wall: f64) -> Self {
        Self {
            v0a2,
            e_mean: r.e_mean,
            tau_bar: r.tau_bar,
            t2_mean: r.t2_mean,
            t_bar: r.t_bar,
            deficit: r.deficit,
            bound_state: r.bound_state,
            num: r.numerator,
            den: r.denominator,
            tail_flag: r.tail_flag,
            status: "ok".into(),
            wall_time_s: wall,
        }
    }

    fn failed(v0a2: f64, e_mean: f64, msg: String, wall: f64) -> Self {
        Self {
            v0a2,
            e_mean,
            tau_bar: f64::NAN,
            t2_mean: f64::NAN,
            t_bar: f64::NAN,
            deficit: f64::NAN,
            bound_state: false,
            num: f64::NAN,
            den: f64::NAN,
            tail_flag: true,
            status: msg,
            wall_time_s: wall,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Full configuration echo; a run is reproducible from this record alone.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub artifact: &'static str,
    pub version: &'static str,
    pub timestamp: String,
    pub command: String,
    pub a: f64,
    pub v0a2_from: f64,
    pub v0a2_to: f64,
    pub step: f64,
    pub k_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
    pub panel_seed: f64,
    pub fd_h0: f64,
    pub richardson_levels: usize,
    pub threads: usize,
}

impl RunManifest {
    pub fn new(
        command: &str,
        timestamp: String,
        sweep: &SweepConfig,
        threads: usize,
    ) -> Self {
        Self {
            artifact: "tunlife",
            version: env!("CARGO_PKG_VERSION"),
            timestamp,
            command: command.to_string(),
            a: 1.0,
            v0a2_from: sweep.v0a2_from,
            v0a2_to: sweep.v0a2_to,
            step: sweep.step,
            k_max: sweep.cfg.k_max,
            rel_tol: sweep.cfg.rel_tol,
            abs_tol: sweep.cfg.abs_tol,
            max_panels: sweep.cfg.max_panels,
            panel_seed: sweep.cfg.panel_seed,
            fd_h0: sweep.fd.h0,
            richardson_levels: sweep.fd.richardson_levels,
            threads,
        }
    }
}

/// Sweep definition: a grid in v0 a^2 (at a = 1 the depth itself) plus the
/// shared quadrature and differentiation settings.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub v0a2_from: f64,
    pub v0a2_to: f64,
    pub step: f64,
    pub cfg: QuadratureConfig,
    pub fd: FDConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            v0a2_from: -12.0,
            v0a2_to: 0.0,
            step: 0.25,
            cfg: QuadratureConfig::default(),
            fd: FDConfig::default(),
        }
    }
}

impl SweepConfig {
    /// Grid points in ascending v0 a^2.
    pub fn grid(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if !(self.step > 0.0) || self.v0a2_to < self.v0a2_from {
            return out;
        }
        let n = ((self.v0a2_to - self.v0a2_from) / self.step).round() as usize;
        for i in 0..=n {
            let v = self.v0a2_from + self.step * i as f64;
            if v <= self.v0a2_to + 1e-12 && v <= 0.0 {
                out.push(v);
            }
        }
        out
    }
}

/// Compute every row of the sweep. Rows are independent pure evaluations
/// and are computed in parallel; the output order is fixed by the grid.
pub fn run_sweep(sw: &SweepConfig) -> Vec<SweepRow> {
    sw.grid()
        .par_iter()
        .map(|&v0a2| {
            let start = Instant::now();
            let row = PotentialSpec::with_ell_one(1.0, v0a2)
                .and_then(|spec| moments::lifetime(&spec, &sw.cfg, &sw.fd));
            let wall = start.elapsed().as_secs_f64();
            match row {
                Ok(r) => SweepRow::from_result(v0a2, &r, wall),
                Err(e) => {
                    let e_mean = std::f64::consts::PI * std::f64::consts::PI / 2.0 + v0a2;
                    SweepRow::failed(v0a2, e_mean, e.to_string(), wall)
                }
            }
        })
        .collect()
}

fn fmt(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.15e}")
    }
}

/// Render rows as CSV with the fixed column set.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt(r.v0a2),
            fmt(r.e_mean),
            fmt(r.tau_bar),
            fmt(r.t2_mean),
            fmt(r.t_bar),
            fmt(r.deficit),
            r.bound_state,
            fmt(r.num),
            fmt(r.den),
            r.tail_flag,
            r.status
        ));
    }
    out
}

/// Render rows plus the manifest as a JSON document.
pub fn rows_to_json(rows: &[SweepRow], manifest: &RunManifest) -> Result<String> {
    #[derive(Serialize)]
    struct Doc<'a> {
        manifest: &'a RunManifest,
        rows: &'a [SweepRow],
    }
    serde_json::to_string_pretty(&Doc { manifest, rows })
        .map_err(|e| crate::error::Error::InvalidConfig(format!("json serialization: {e}")))
}

/// Minimal SVG polyline of (e_mean, tau_bar) with a marker at the deficit
/// onset (first row, scanning from shallow wells, with deficit > 1e-2).
/// Convenience rendering only; tau is log-scaled since the curve spans
/// decades near the thresholds.
pub fn rows_to_svg(rows: &[SweepRow]) -> String {
    const W: f64 = 720.0;
    const H: f64 = 480.0;
    const M: f64 = 50.0;

    let ok: Vec<&SweepRow> =
        rows.iter().filter(|r| r.is_ok() && r.tau_bar.is_finite() && r.tau_bar > 0.0).collect();
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    if ok.len() < 2 {
        svg.push_str("<text x=\"20\" y=\"30\">insufficient data</text>\n</svg>\n");
        return svg;
    }

    let (mut e_lo, mut e_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut t_lo, mut t_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in &ok {
        e_lo = e_lo.min(r.e_mean);
        e_hi = e_hi.max(r.e_mean);
        t_lo = t_lo.min(r.tau_bar.ln());
        t_hi = t_hi.max(r.tau_bar.ln());
    }
    let sx = |e: f64| M + (W - 2.0 * M) * (e - e_lo) / (e_hi - e_lo);
    let sy = |tau: f64| H - M - (H - 2.0 * M) * (tau.ln() - t_lo) / (t_hi - t_lo);

    svg.push_str(&format!(
        "<rect x=\"{M}\" y=\"{M}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n",
        W - 2.0 * M,
        H - 2.0 * M
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\">e mean</text>\n",
        W / 2.0 - 20.0,
        H - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{}\" font-size=\"13\" transform=\"rotate(-90 14 {})\">tau bar (log)</text>\n",
        H / 2.0,
        H / 2.0
    ));

    let pts: Vec<String> =
        ok.iter().map(|r| format!("{:.2},{:.2}", sx(r.e_mean), sy(r.tau_bar))).collect();
    svg.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        pts.join(" ")
    ));
    for r in &ok {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.4\" fill=\"#1f77b4\"/>\n",
            sx(r.e_mean),
            sy(r.tau_bar)
        ));
    }

    // deficit onset marker: first row with deficit > 1e-2 when scanning
    // from the shallow (v0a2 -> 0) end
    if let Some(onset) = ok.iter().rev().find(|r| r.deficit > 1e-2) {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"6\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\"/>\n",
            sx(onset.e_mean),
            sy(onset.tau_bar)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" fill=\"#d62728\">deficit onset</text>\n",
            sx(onset.e_mean) + 8.0,
            sy(onset.tau_bar) - 8.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_sweep() -> SweepConfig {
        SweepConfig { v0a2_from: -1.0, v0a2_to: 0.0, step: 0.5, ..SweepConfig::default() }
    }

    #[test]
    fn grid_is_inclusive_and_ordered() {
        let g = SweepConfig::default().grid();
        assert_eq!(g.len(), 49);
        assert_eq!(g[0], -12.0);
        assert_eq!(*g.last().unwrap(), 0.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rows_are_ordered_and_complete() {
        let rows = run_sweep(&tiny_sweep());
        assert_eq!(rows.len(), 3);
        assert!(rows.windows(2).all(|w| w[0].v0a2 < w[1].v0a2));
        assert!(rows.iter().all(|r| r.is_ok()));
        // e_mean is the exact linear identity
        for r in &rows {
            assert_eq!(r.e_mean, std::f64::consts::PI.powi(2) / 2.0 + r.v0a2);
        }
    }

    #[test]
    fn determinism_rows_and_csv() {
        let sw = tiny_sweep();
        let a = rows_to_csv(&run_sweep(&sw));
        let b = rows_to_csv(&run_sweep(&sw));
        assert_eq!(a, b);
        assert!(a.starts_with(CSV_HEADER));
    }

    #[test]
    fn subset_matches_full_run() {
        let sw = tiny_sweep();
        let full = run_sweep(&sw);
        let single = run_sweep(&SweepConfig { v0a2_from: -0.5, v0a2_to: -0.5, ..sw });
        assert_eq!(single.len(), 1);
        let matching = full.iter().find(|r| r.v0a2 == -0.5).unwrap();
        assert_eq!(matching.tau_bar.to_bits(), single[0].tau_bar.to_bits());
    }

    #[test]
    fn json_has_manifest_and_rows() {
        let sw = tiny_sweep();
        let rows = run_sweep(&sw);
        let man = RunManifest::new("sweep", "2000-01-01T00:00:00Z".into(), &sw, 1);
        let js = rows_to_json(&rows, &man).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&js).unwrap();
        assert_eq!(doc["manifest"]["artifact"], "tunlife");
        assert_eq!(doc["rows"].as_array().unwrap().len(), 3);
        assert!(doc["rows"][0]["tau_bar"].is_number());
    }

    #[test]
    fn svg_smoke() {
        let rows = run_sweep(&tiny_sweep());
        let svg = rows_to_svg(&rows);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
    }
}
