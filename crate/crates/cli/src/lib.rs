//! Argument parsing and dispatch for the `frdiag` binary. Every subcommand
//! parses its flags, calls one library routine, and writes CSV plus a
//! `<out>.meta.json` sidecar.

// `!(x > 0)` is how NaN gets rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use frdiag::freeconv::{convolve_density, default_eta, DENSITY_MASS_TOL, STEP_TOL};
use frdiag::measure::{LineMeasure, MASS_TOL, REFINE_TOL, PositiveMeasure, SymmetricMeasure};
use frdiag::models::{lp_moment_xmk, radial_cdf_xmk, ModelSpec, X0Spec};
use frdiag::rdiag::{classify_grid, KERNEL_TOL, radial_cdf_from_s, radial_cdf_via_theta, REGION_TOL};
use frdiag::semigroup::{
    hj_residual, log_integrability_report, pde_points_to_csv, radial_pde_residual, radial_pde_residual_scaled,
    state_grid, states_to_csv, FD_STEP, MONOTONE_SLACK,
};
use frdiag::transforms::{CauchyTransform, ClosedLaw, GeneratingPair};
use frdiag::{Complex, Error};
use frdiag_mc::{
    commutator_oracle, free_add_oracle, free_add_reference, ks_distance, product_oracle, sample_xmk_eigen,
    uniform_grid, Bracket, DiagSpec, McConfig, McError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "frdiag", version, about = "Brown measures and free-convolution semigroups of R-diagonal elements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Route {
    /// S-transform inversion.
    S,
    /// Imaginary-axis θ parametrization.
    Theta,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum McKind {
    Xmk,
    FreeAdd,
    Commutator,
    Anticommutator,
    Product,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Radial CDF `F(r)` of the Brown measure of an R-diagonal model.
    BrownRadial {
        #[arg(long, value_parser = parse_model)]
        model: ModelSpec<f64>,
        #[arg(long, value_enum, default_value = "s")]
        route: Route,
        #[arg(long)]
        rmax: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Density of `a ⊞ b` on a grid.
    ConvolveAdd {
        #[arg(long, value_parser = parse_law)]
        a: Law,
        #[arg(long, value_parser = parse_law)]
        b: Law,
        #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 4.0)]
        hi: f64,
        #[arg(long, default_value_t = 801)]
        points: usize,
        /// Stieltjes-inversion height; defaults to 1e-3 of the grid half-width.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Semigroup states on the product of the `t` and `eps` lists.
    Semigroup {
        #[arg(long, value_parser = parse_model)]
        model: ModelSpec<f64>,
        #[arg(long, value_parser = parse_x0)]
        x0: X0Spec<f64>,
        #[arg(long, value_parser = parse_complex, default_value = "0", allow_hyphen_values = true)]
        lambda: Complex<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Hamilton–Jacobi residual of the regularized log-potential.
    HjCheck {
        #[arg(long, value_parser = parse_model)]
        model: ModelSpec<f64>,
        #[arg(long, value_parser = parse_x0)]
        x0: X0Spec<f64>,
        #[arg(long, value_parser = parse_complex, default_value = "0", allow_hyphen_values = true)]
        lambda: Complex<f64>,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        h: Option<f64>,
    },
    /// Residual of the radial-CDF PDE on the product of the `t` and `r` lists.
    RadialPdeCheck {
        #[arg(long, value_parser = parse_model)]
        model: ModelSpec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<f64>,
        /// Check the equation for `F(t, t·r)` instead.
        #[arg(long)]
        scaled: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Labels points `λ` as S, F1, F2 or Omega for `X₀ + Y`.
    SupportClassify {
        #[arg(long, value_parser = parse_model)]
        model: ModelSpec<f64>,
        #[arg(long, value_parser = parse_x0)]
        x0: X0Spec<f64>,
        /// Points `re,im` separated by `;`.
        #[arg(long, value_delimiter = ';', value_parser = parse_complex, required = true, allow_hyphen_values = true)]
        lambda: Vec<Complex<f64>>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// `τ(|X_{m,k}|^p)`.
    LpMoment {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        p: f64,
    },
    /// The five log-integrability diagnostics of a symmetric freely
    /// infinitely divisible law.
    LogIntReport {
        /// Free stable model, or omit and give `--sigma-atoms`.
        #[arg(long, value_parser = parse_model)]
        model: Option<ModelSpec<f64>>,
        /// Generating measure `x@m,...` (mirrored to `−x`).
        #[arg(long)]
        sigma_atoms: Option<String>,
        #[arg(long = "T", default_value_t = 1.0)]
        big_t: f64,
    },
    /// Finite-N random-matrix samples with their KS distance to the large-N law.
    Mc {
        #[arg(long, value_enum)]
        kind: McKind,
        #[arg(long, default_value_t = 1)]
        m: u32,
        #[arg(long, default_value_t = 0)]
        k: u32,
        /// Diagonal of `A` for `free-add`: `zero`, `scalar:a` or `pm:a`.
        #[arg(long, value_parser = parse_diag, default_value = "pm:1")]
        a: DiagSpec,
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Restrict the KS comparison to values at most this.
        #[arg(long)]
        rmax: Option<f64>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

/// A law for `convolve-add`.
#[derive(Debug, Clone)]
pub enum Law {
    Closed(ClosedLaw<f64>),
    Line(LineMeasure<f64>),
    Modulus(SymmetricMeasure<f64>),
}

impl Law {
    fn as_cauchy(&self) -> &dyn CauchyTransform<f64> {
        match self {
            Law::Closed(l) => l,
            Law::Line(l) => l,
            Law::Modulus(l) => l,
        }
    }
}

fn parse_model(s: &str) -> Result<ModelSpec<f64>, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_x0(s: &str) -> Result<X0Spec<f64>, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_complex(s: &str) -> Result<Complex<f64>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|_| format!("bad number '{p}'"));
    match parts.as_slice() {
        [re] => Ok(Complex::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex::new(num(re)?, num(im)?)),
        _ => Err(format!("expected re[,im], got '{s}'")),
    }
}

fn kv(body: &str, key: &str) -> Result<f64, String> {
    body.split(',')
        .find_map(|p| p.split_once('=').filter(|(k, _)| k.trim() == key).map(|(_, v)| v.trim().to_string()))
        .ok_or_else(|| format!("missing '{key}=' in '{body}'"))?
        .parse::<f64>()
        .map_err(|_| format!("bad value for '{key}' in '{body}'"))
}

fn parse_atoms(body: &str) -> Result<Vec<(f64, f64)>, String> {
    body.split(',')
        .map(|a| {
            let (x, m) = a.split_once('@').ok_or_else(|| format!("expected x@m, got '{a}'"))?;
            let x = x.trim().parse::<f64>().map_err(|_| format!("bad atom '{a}'"))?;
            let m = m.trim().parse::<f64>().map_err(|_| format!("bad atom '{a}'"))?;
            Ok((x, m))
        })
        .collect()
}

/// `semicircle:t=1`, `cauchy:t=1`, `arcsine`, `point:a=0`, `atoms:x@m,...`,
/// `modulus:<model>` (the symmetrized modulus law of a catalog model).
fn parse_law(s: &str) -> Result<Law, String> {
    let (name, body) = s.split_once(':').unwrap_or((s, ""));
    Ok(match name.trim() {
        "semicircle" => Law::Closed(ClosedLaw::Semicircle(kv(body, "t")?)),
        "cauchy" => Law::Closed(ClosedLaw::Cauchy(kv(body, "t")?)),
        "arcsine" => Law::Closed(ClosedLaw::Arcsine),
        "point" => Law::Closed(ClosedLaw::PointMass(kv(body, "a")?)),
        "atoms" => Law::Line(LineMeasure::from_atoms(parse_atoms(body)?).map_err(|e| e.to_string())?),
        "modulus" => Law::Modulus(parse_model(body)?.symmetrized_modulus().map_err(|e| e.to_string())?),
        other => return Err(format!("unknown law '{other}'")),
    })
}

fn parse_diag(s: &str) -> Result<DiagSpec, String> {
    let (name, body) = s.split_once(':').unwrap_or((s, ""));
    let a = || body.trim().parse::<f64>().map_err(|_| format!("bad diagonal value '{body}'"));
    match name.trim() {
        "zero" => Ok(DiagSpec::Zero),
        "scalar" => Ok(DiagSpec::Scalar(a()?)),
        "pm" => Ok(DiagSpec::PlusMinus(a()?)),
        other => Err(format!("unknown diagonal '{other}'")),
    }
}

/// Failure of a subcommand with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Convergence { .. } | Error::MassDefect { .. } | Error::MonotonicityViolation { .. } => EXIT_CONVERGENCE,
            Error::Parse(_) => EXIT_USAGE,
            _ => EXIT_DOMAIN,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<McError> for Failure {
    fn from(e: McError) -> Self {
        match e {
            McError::Core(inner) => inner.into(),
            McError::SingularDraw(_) | McError::Decomposition => Failure { code: EXIT_CONVERGENCE, message: e.to_string() },
            McError::Config { .. } | McError::EmptySample => Failure { code: EXIT_DOMAIN, message: e.to_string() },
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: EXIT_DOMAIN, message: format!("I/O error: {e}") }
    }
}

fn domain(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_DOMAIN, message: msg.into() }
}

/// `{:.16e}`: 17 significant digits; negative zero prints as zero.
fn num(x: f64) -> String {
    format!("{:.16e}", x + 0.0)
}

// argv of the current `run`, recorded in every sidecar.
static ARGV: Mutex<Vec<String>> = Mutex::new(Vec::new());

fn write_outputs(path: &Path, csv: &str, meta: Value) -> Result<(), Failure> {
    std::fs::write(path, csv)?;
    let mut side = path.as_os_str().to_owned();
    side.push(".meta.json");
    let full = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "git_describe": env!("FRDIAG_GIT_DESCRIBE"),
        "argv": ARGV.lock().map(|a| a.clone()).unwrap_or_default(),
        "threads": rayon::current_num_threads(),
        "tolerances": {
            "mass_tol": MASS_TOL,
            "refine_tol": REFINE_TOL,
            "subordination_step_tol": STEP_TOL,
            "density_mass_tol": DENSITY_MASS_TOL,
            "region_tol": REGION_TOL,
            "kernel_tol": KERNEL_TOL,
            "monotone_slack": MONOTONE_SLACK,
            "fd_step": FD_STEP,
        },
        "run": meta,
    });
    std::fs::write(PathBuf::from(side), serde_json::to_string_pretty(&full).expect("json") + "\n")?;
    Ok(())
}

fn law_json(l: &Law) -> String {
    match l {
        Law::Closed(c) => format!("{c:?}"),
        Law::Line(m) => format!("atoms({})", m.atoms().len()),
        Law::Modulus(_) => "symmetrized modulus".into(),
    }
}

/// Runs one parsed command, writing to `out` what is printed.
pub fn execute(cmd: Command, out: &mut dyn std::io::Write) -> Result<(), Failure> {
    match cmd {
        Command::BrownRadial { model, route, rmax, points, output } => {
            if !(rmax > 0.0) || points < 1 {
                return Err(domain("need rmax > 0 and points >= 1"));
            }
            let radii: Vec<f64> = (1..=points).map(|i| rmax * i as f64 / points as f64).collect();
            let f = match route {
                Route::S => radial_cdf_from_s(&model, &radii)?,
                Route::Theta => radial_cdf_via_theta(&model, &radii)?,
            };
            let mut csv = String::from("r,F\n");
            for (r, m) in f.radii.iter().zip(&f.mass) {
                let _ = writeln!(csv, "{},{}", num(*r), num(*m));
            }
            write_outputs(
                &output,
                &csv,
                json!({"command": "brown-radial", "model": model.to_string(), "route": format!("{route:?}"),
                       "rmax": rmax, "points": points, "inner_radius": f.inner_radius,
                       "outer_radius": f.outer_radius.to_real()}),
            )
        }
        Command::ConvolveAdd { a, b, lo, hi, points, eta, output } => {
            if !(hi > lo) || points < 2 {
                return Err(domain("need hi > lo and points >= 2"));
            }
            let grid = uniform_grid(lo, hi, points);
            let eta = eta.unwrap_or_else(|| default_eta(0.5 * (hi - lo)));
            let mu = convolve_density(a.as_cauchy(), b.as_cauchy(), &grid, eta)?;
            let mut csv = String::from("x,density\n");
            for n in mu.nodes() {
                let _ = writeln!(csv, "{},{}", num(n.x), num(n.f));
            }
            for &(x, m) in mu.atoms() {
                let _ = writeln!(out, "atom at {} with mass {}", num(x), num(m));
            }
            write_outputs(
                &output,
                &csv,
                json!({"command": "convolve-add", "a": law_json(&a), "b": law_json(&b), "eta": eta,
                       "subordination_step_tol": STEP_TOL, "mass_tol": DENSITY_MASS_TOL}),
            )
        }
        Command::Semigroup { model, x0, lambda, t, eps, output } => {
            let pts: Vec<(f64, Complex<f64>, f64)> =
                t.iter().flat_map(|&tt| eps.iter().map(move |&e| (tt, lambda, e))).collect();
            let states = state_grid(&x0, &model, &pts)?;
            let mut csv = String::from("t,lambda_re,lambda_im,eps,W1,W2,G,S\n");
            for s in &states {
                let row = [s.t, s.lambda.re, s.lambda.im, s.eps, s.w1, s.w2, s.gval, s.s_value];
                let _ = writeln!(csv, "{}", row.iter().map(|v| num(*v)).collect::<Vec<_>>().join(","));
            }
            debug_assert_eq!(csv.lines().count(), states_to_csv(&states).lines().count());
            write_outputs(&output, &csv, json!({"command": "semigroup", "model": model.to_string(), "points": pts.len()}))
        }
        Command::HjCheck { model, x0, lambda, t, eps, h } => {
            let r = hj_residual(&x0, lambda, &model, t, eps, h)?;
            let _ = writeln!(out, "h = {}", num(r.h));
            let _ = writeln!(out, "residual = {}", num(r.fd));
            let _ = writeln!(out, "residual_half_step = {}", num(r.fd_half));
            let _ = writeln!(out, "residual_richardson = {}", num(r.richardson));
            let _ = writeln!(out, "residual_exact_eps = {}", num(r.exact_eps));
            Ok(())
        }
        Command::RadialPdeCheck { model, t, r, scaled, output } => {
            let mut rows = Vec::new();
            for &tt in &t {
                for &rr in &r {
                    rows.push(if scaled {
                        radial_pde_residual_scaled(&model, tt, rr)?
                    } else {
                        radial_pde_residual(&model, tt, rr)?
                    });
                }
            }
            let mut csv = String::from("t,r,F,residual\n");
            for p in &rows {
                let _ = writeln!(csv, "{},{},{},{}", num(p.t), num(p.r), num(p.f), num(p.residual));
            }
            debug_assert_eq!(csv.lines().count(), pde_points_to_csv(&rows).lines().count());
            let max = rows.iter().map(|p| p.residual).fold(0.0, f64::max);
            let _ = writeln!(out, "max residual = {}", num(max));
            write_outputs(
                &output,
                &csv,
                json!({"command": "radial-pde-check", "model": model.to_string(), "scaled": scaled,
                       "fd_step": FD_STEP, "max_residual": max}),
            )
        }
        Command::SupportClassify { model, x0, lambda, output } => {
            let mu_sq = model.mu_sq()?;
            let labels = classify_grid(&x0, &mu_sq, &lambda)?;
            let mut csv = String::from("lambda_re,lambda_im,label\n");
            for (l, lab) in lambda.iter().zip(&labels) {
                let _ = writeln!(csv, "{},{},{lab}", num(l.re), num(l.im));
            }
            write_outputs(
                &output,
                &csv,
                json!({"command": "support-classify", "model": model.to_string(), "region_tol": REGION_TOL}),
            )
        }
        Command::LpMoment { m, k, p } => {
            let v = lp_moment_xmk(m, k, p)?;
            let _ = writeln!(out, "{v:.10}");
            Ok(())
        }
        Command::LogIntReport { model, sigma_atoms, big_t } => {
            let (pair, closed) = match (model, sigma_atoms) {
                (Some(m), None) => {
                    let pair = m.pair().ok_or_else(|| domain(format!("{m} has no closed generating pair")))?;
                    let closed = match m.free_stable_form() {
                        Some((0, t)) => Some(ClosedLaw::Semicircle(t)),
                        Some((1, t)) => Some(ClosedLaw::Cauchy(t)),
                        _ => None,
                    };
                    (pair, closed)
                }
                (None, Some(body)) => {
                    let atoms = parse_atoms(&body).map_err(|m| Failure { code: EXIT_USAGE, message: m })?;
                    let mass: f64 = atoms.iter().map(|a| a.1).sum();
                    let half = PositiveMeasure::from_atoms(atoms.iter().map(|&(x, m)| (x.abs(), m / mass)))?;
                    (GeneratingPair::new(0.0, mass, half.symmetrize())?, None)
                }
                _ => return Err(Failure { code: EXIT_USAGE, message: "give exactly one of --model and --sigma-atoms".into() }),
            };
            let rep = log_integrability_report(&pair, closed.as_ref().map(|c| c as &dyn CauchyTransform<f64>), big_t)?;
            let names = ["mu_log", "sigma_log", "phi_tail", "r_head", "f_tail"];
            for (name, v) in names.iter().zip(rep.values()) {
                let _ = writeln!(out, "{name} = {}", if v.is_finite() { num(v.to_real()) } else { "inf".into() });
            }
            let _ = writeln!(out, "agree = {}", rep.agree());
            Ok(())
        }
        Command::Mc { kind, m, k, a, n, trials, seed, rmax, output } => {
            let cfg = McConfig::new(n, trials, seed)?;
            let domain_restriction = rmax.map(|r| (f64::NEG_INFINITY, r));
            let (sample, ks) = match kind {
                McKind::Xmk => {
                    let s = sample_xmk_eigen(&cfg, m, k)?;
                    let d = ks_distance(&s, |r| radial_cdf_xmk(m, k, r), domain_restriction)?;
                    (s, d)
                }
                McKind::FreeAdd => {
                    let s = free_add_oracle(a, &cfg)?;
                    let reference = free_add_reference(a, &uniform_grid(-6.0, 6.0, 2401))?;
                    let d = ks_distance(&s, |x| reference.cdf(x), domain_restriction)?;
                    (s, d)
                }
                McKind::Commutator | McKind::Anticommutator => {
                    let b = if matches!(kind, McKind::Commutator) { Bracket::Commutator } else { Bracket::Anticommutator };
                    let (s, _, d) = commutator_oracle(b, &cfg)?;
                    (s, d)
                }
                McKind::Product => {
                    let (s, _, d) = product_oracle(&cfg)?;
                    (s, d)
                }
            };
            let _ = writeln!(out, "ks = {}", num(ks));
            write_outputs(
                &output,
                &sample.to_csv(),
                json!({"command": "mc", "kind": format!("{kind:?}"), "m": m, "k": k, "a": format!("{a:?}"),
                       "n": n, "trials": trials, "seed": seed, "rmax": rmax, "ks": ks,
                       "samples": sample.values.len()}),
            )
        }
    }
}

/// Parses `args`, honours `FRDIAG_THREADS`, runs the command and returns the exit code.
pub fn run<I, A>(args: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    if let Ok(mut slot) = ARGV.lock() {
        *slot = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    }
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let informational = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            if informational {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return if informational { EXIT_OK } else { EXIT_USAGE };
        }
    };
    if let Ok(v) = std::env::var("FRDIAG_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                // A global pool that already exists keeps its size.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                let _ = writeln!(err, "FRDIAG_THREADS must be a positive integer, got '{v}'");
                return EXIT_USAGE;
            }
        }
    }
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
