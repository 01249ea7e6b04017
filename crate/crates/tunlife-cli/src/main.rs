//! Command-line front end: single lifetime evaluations, Fig-2-style sweeps,
//! the time-domain verification run, and the regularized-path validation
//! suite.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage error.

use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::process::ExitCode;
use tunlife::moments;
use tunlife::quad::{FDConfig, QuadratureConfig};
use tunlife::regularized::{self, AlphaSchedule};
use tunlife::spectral::PotentialSpec;
use tunlife::sweep::{self, RunManifest, SweepConfig};
use tunlife::timedomain::{self, TimeGridConfig};

#[derive(Parser)]
#[command(name = "tunlife", version, about = "Tunneling lifetimes behind an l=1 centrifugal barrier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Well width
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Well depth (<= 0)
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    v0: f64,
    /// Dimensionless wavenumber cutoff kappa = k a (default 40 pi)
    #[arg(long, default_value_t = 40.0 * std::f64::consts::PI)]
    kmax: f64,
    /// Relative quadrature tolerance
    #[arg(long, default_value_t = 1e-9)]
    rel_tol: f64,
    /// Base finite-difference step for the mixed partial
    #[arg(long, default_value_t = 1e-3)]
    fd_h0: f64,
    /// Worker threads (0 = rayon default)
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl CommonOpts {
    fn quad(&self) -> QuadratureConfig {
        QuadratureConfig { k_max: self.kmax, rel_tol: self.rel_tol, ..QuadratureConfig::default() }
    }

    fn fd(&self) -> FDConfig {
        FDConfig { h0: self.fd_h0, ..FDConfig::default() }
    }

    fn spec(&self) -> Result<PotentialSpec, tunlife::Error> {
        PotentialSpec::with_ell_one(self.a, self.v0)
    }

    fn init_threads(&self) {
        if self.threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(self.threads).build_global();
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Lifetime of one potential via the single-quadrature moment formulas
    Lifetime {
        #[command(flatten)]
        common: CommonOpts,
        /// Output format
        #[arg(long, default_value = "text", value_parser = ["text", "json"])]
        format: String,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
    /// Sweep v0 a^2 and emit one row per grid point
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Sweep start in v0 a^2
        #[arg(long, allow_hyphen_values = true, default_value_t = -12.0)]
        from: f64,
        /// Sweep end in v0 a^2
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        to: f64,
        /// Grid step
        #[arg(long, default_value_t = 0.25)]
        step: f64,
        #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
        format: String,
        /// Write rows here instead of stdout
        #[arg(long)]
        out: Option<std::path::PathBuf>,
        /// Also write an SVG rendering of (e_mean, tau_bar)
        #[arg(long)]
        svg: Option<std::path::PathBuf>,
    },
    /// Time-domain verification: reconstruct the survival probability and
    /// compare its direct moments against the quadrature method
    Oracle {
        #[command(flatten)]
        common: CommonOpts,
        /// Cutoff time in units of t0
        #[arg(long, default_value_t = 50.0)]
        tmax: f64,
        /// Time samples
        #[arg(long, default_value_t = 4096)]
        nt: usize,
        /// Reconstruction-grid wavenumber cutoff (dimensionless)
        #[arg(long, default_value_t = 25.0)]
        oracle_kmax: f64,
    },
    /// Regularized-path validation: damped double integrals extrapolated to
    /// alpha -> 0 must match the single quadratures
    Validate {
        #[command(flatten)]
        common: CommonOpts,
        /// Comma-separated damping schedule in units of 1/t0
        #[arg(long)]
        alphas: Option<String>,
        /// Comma-separated v0 a^2 grid
        #[arg(long, allow_hyphen_values = true, default_value = "0,-2,-4,-8,-16")]
        grid: String,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
}

fn emit(out: &Option<std::path::PathBuf>, text: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn run() -> Result<(), String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Lifetime { common, format, out } => {
            common.init_threads();
            let spec = common.spec().map_err(|e| e.to_string())?;
            let r = moments::lifetime(&spec, &common.quad(), &common.fd())
                .map_err(|e| e.to_string())?;
            let text = if format == "json" {
                let doc = serde_json::json!({
                    "a": spec.a(),
                    "v0": spec.v0(),
                    "v0a2": spec.v0a2(),
                    "t0": spec.t0(),
                    "tau_bar": r.tau_bar,
                    "t_bar": r.t_bar,
                    "t2_mean": r.t2_mean,
                    "e_mean": r.e_mean,
                    "energy_mean": r.energy_mean,
                    "deficit": r.deficit,
                    "bound_state": r.bound_state,
                    "num": r.numerator,
                    "den": r.denominator,
                    "tail_flag": r.tail_flag,
                    "num_error": r.numerator_error,
                    "den_error": r.denominator_error,
                });
                format!("{}\n", serde_json::to_string_pretty(&doc).unwrap())
            } else {
                format!(
                    "a        = {}\nv0       = {}\nv0 a^2   = {}\nt0       = {}\n\
                     tau_bar  = {:.10e}\nt_bar    = {:.10e}  (natural units)\n\
                     <t^2>    = {:.10e}\n<e>      = {:.10e}\n<E>      = {:.10e}\n\
                     deficit  = {:.6e}  bound_state = {}\n\
                     num      = {:.10e}  (err {:.2e})\nden      = {:.10e}  (err {:.2e})\n\
                     tail_flag = {}\n",
                    spec.a(),
                    spec.v0(),
                    spec.v0a2(),
                    spec.t0(),
                    r.tau_bar,
                    r.t_bar,
                    r.t2_mean,
                    r.e_mean,
                    r.energy_mean,
                    r.deficit,
                    r.bound_state,
                    r.numerator,
                    r.numerator_error,
                    r.denominator,
                    r.denominator_error,
                    r.tail_flag
                )
            };
            emit(&out, &text).map_err(|e| e.to_string())?;
            Ok(())
        }

        Command::Sweep { common, from, to, step, format, out, svg } => {
            common.init_threads();
            if !(step > 0.0) || to < from {
                // malformed range is a usage error, not a numerical one
                let mut cmd = <Cli as clap::CommandFactory>::command();
                cmd.error(
                    clap::error::ErrorKind::InvalidValue,
                    format!("invalid sweep range [{from}, {to}] step {step}"),
                )
                .exit();
            }
            let sw = SweepConfig {
                v0a2_from: from,
                v0a2_to: to,
                step,
                cfg: common.quad(),
                fd: common.fd(),
            };
            let rows = sweep::run_sweep(&sw);
            let text = if format == "json" {
                let man = RunManifest::new("sweep", timestamp(), &sw, rayon::current_num_threads());
                sweep::rows_to_json(&rows, &man).map_err(|e| e.to_string())? + "\n"
            } else {
                sweep::rows_to_csv(&rows)
            };
            emit(&out, &text).map_err(|e| e.to_string())?;
            if let Some(path) = svg {
                std::fs::write(path, sweep::rows_to_svg(&rows)).map_err(|e| e.to_string())?;
            }
            let failures: Vec<&str> =
                rows.iter().filter(|r| !r.is_ok()).map(|r| r.status.as_str()).collect();
            if failures.is_empty() {
                Ok(())
            } else {
                Err(format!("{} of {} rows failed: {}", failures.len(), rows.len(), failures[0]))
            }
        }

        Command::Oracle { common, tmax, nt, oracle_kmax } => {
            common.init_threads();
            let spec = common.spec().map_err(|e| e.to_string())?;
            let grid = TimeGridConfig {
                t_max: tmax,
                n_t: nt,
                k_max: oracle_kmax,
                ..TimeGridConfig::default()
            };
            let td = timedomain::moments_time_domain(&spec, &grid).map_err(|e| e.to_string())?;
            let den = moments::denominator(&spec, &common.quad()).map_err(|e| e.to_string())?;
            let num =
                moments::numerator(&spec, &common.quad(), &common.fd()).map_err(|e| e.to_string())?;

            let tau = |n: f64, d: f64, t0: f64| (n / d / 2.0).sqrt() / t0;
            let tau_td = tau(td.num, td.den, spec.t0());
            let tau_q = tau(num.value, den.value, spec.t0());
            println!("time-domain reconstruction vs single-quadrature moments");
            println!("  grid: n_k = {}, n_t = {}, t_max = {} t0", td.n_k, td.n_t, tmax);
            println!("  dP(0)      = {:.8}", td.dp0);
            println!(
                "  num : {:.8e} vs {:.8e}   delta = {:+.3}%",
                td.num,
                num.value,
                100.0 * (td.num / num.value - 1.0)
            );
            println!(
                "  den : {:.8e} vs {:.8e}   delta = {:+.3}%",
                td.den,
                den.value,
                100.0 * (td.den / den.value - 1.0)
            );
            println!(
                "  tau : {:.8e} vs {:.8e}   delta = {:+.3}%",
                tau_td,
                tau_q,
                100.0 * (tau_td / tau_q - 1.0)
            );
            println!(
                "  tail bound = {:.3e} (num {:.2e}, den {:.2e})",
                td.tail_bound, td.tail_num, td.tail_den
            );
            Ok(())
        }

        Command::Validate { common, alphas, grid, out } => {
            common.init_threads();
            let cfg = common.quad();
            let fd = common.fd();
            // the alpha -> 0 comparison needs each damped value to ~1e-6;
            // pushing the double integrals to the reference tolerance would
            // cost minutes per point for nothing
            let alpha_cfg = QuadratureConfig { rel_tol: cfg.rel_tol.max(1e-7), ..cfg };
            let explicit_schedule = match alphas {
                Some(s) => {
                    let vals: Result<Vec<f64>, _> =
                        s.split(',').map(|t| t.trim().parse::<f64>()).collect();
                    let vals = vals.map_err(|e| format!("bad --alphas: {e}"))?;
                    Some(AlphaSchedule::new(vals).map_err(|e| e.to_string())?)
                }
                None => None,
            };
            let points: Result<Vec<f64>, _> =
                grid.split(',').map(|t| t.trim().parse::<f64>()).collect();
            let points = points.map_err(|e| format!("bad --grid: {e}"))?;

            let mut report = Vec::new();
            let mut all_pass = true;
            for v0a2 in points {
                let spec = PotentialSpec::with_ell_one(common.a, v0a2 / (common.a * common.a))
                    .map_err(|e| e.to_string())?;
                let schedule =
                    explicit_schedule.clone().unwrap_or_else(|| AlphaSchedule::for_spec(&spec));
                let den_ref = moments::denominator(&spec, &cfg).map_err(|e| e.to_string())?;
                let num_ref = moments::numerator(&spec, &cfg, &fd).map_err(|e| e.to_string())?;
                let (dex, dvals) = regularized::denominator_alpha_limit(&spec, &schedule, &alpha_cfg)
                    .map_err(|e| e.to_string())?;
                let (nex, nvals) = regularized::numerator_alpha_limit(&spec, &schedule, &alpha_cfg)
                    .map_err(|e| e.to_string())?;
                let den_rel = (dex.value / den_ref.value - 1.0).abs();
                let num_rel = (nex.value / num_ref.value - 1.0).abs();
                let den_pass = den_rel < 1e-3;
                let num_pass = num_rel < 1e-2;
                all_pass &= den_pass && num_pass;
                println!(
                    "v0a2 = {v0a2:7.2}: den rel {den_rel:.3e} [{}]  num rel {num_rel:.3e} [{}]",
                    if den_pass { "PASS" } else { "FAIL" },
                    if num_pass { "PASS" } else { "FAIL" },
                );
                report.push(serde_json::json!({
                    "v0a2": v0a2,
                    "alphas": schedule.alphas(),
                    "den": { "reference": den_ref.value, "per_alpha": dvals,
                             "extrapolated": dex.value, "extrapolation_error": dex.error,
                             "rel_dev": den_rel, "pass": den_pass, "threshold": 1e-3 },
                    "num": { "reference": num_ref.value, "per_alpha": nvals,
                             "extrapolated": nex.value, "extrapolation_error": nex.error,
                             "rel_dev": num_rel, "pass": num_pass, "threshold": 1e-2 },
                }));
            }
            let doc = serde_json::json!({ "pass": all_pass, "points": report });
            if let Some(path) = out {
                std::fs::write(&path, format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
                    .map_err(|e| e.to_string())?;
            }
            if all_pass {
                Ok(())
            } else {
                Err("validation failed".into())
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
