//! Experiment runner behind the `jacobi-lattice` binary.
//!
//! Every subcommand resolves a [`RunConfig`] (defaults, then `--config`
//! file, then flags), computes in parallel, and writes its artifacts in a
//! fixed order so that equal configs give byte-identical files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::decay::{
    free_decay_report, g_threshold_hypotheses_report, log_times, perturbed_decay_report,
};
use crate::eigenfunctions::{
    lemma_bound_suite, perturbed_eigen_residual, phi_values, resolvent_identity_residual,
    LemmaSuiteConfig, SpectralTables,
};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_schema_line, SCHEMA_VERSION};
use crate::lattice::{
    apply_l0, binomial_transform, binomial_transform_exact, random_finite_vectors,
    semi_analytic_bound_report, LatticeVector, OperatorSpec,
};
use crate::propagator::{kernel_free, kernel_table, oracle_kernel};
use crate::spectral::{bound_state_solve, completeness_check_scaled, g_factor, g_supremum, write_g_table};

#[derive(Parser, Debug)]
#[command(
    name = "jacobi-lattice",
    version,
    about = "Spectral calculus and dispersive decay for the half-lattice Laguerre operator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// Boundary coupling; 0 selects the free operator.
    #[arg(long, global = true)]
    pub q: Option<f64>,
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    #[arg(long, global = true)]
    pub tmin: Option<f64>,
    #[arg(long, global = true)]
    pub tmax: Option<f64>,
    #[arg(long, global = true)]
    pub tsamples: Option<usize>,
    #[arg(long, global = true)]
    pub xmax: Option<usize>,
    /// Truncation size of the matrix oracle.
    #[arg(long = "N", global = true)]
    pub n: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Flat `key = value` file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Any config key, e.g. `--set lambda_samples=60`; applied last.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// g-factor, spectral weight and eigenfunction tables.
    Spectrum,
    /// Bound state below the spectrum and a coupling sweep.
    Boundstate,
    /// Kernel tables of e^{-itH} with oracle and unitarity columns.
    Propagate,
    /// Weighted decay curves, fits and the explicit kernel bound.
    Decay,
    /// Runs the invariant suite and prints one line per check.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Default)]
pub struct VerifyArgs {
    /// Scale the spectral weight by 1.001 to check that the suite notices.
    #[arg(long)]
    pub corrupt_weight: bool,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Boundstate => "boundstate",
            Command::Propagate => "propagate",
            Command::Decay => "decay",
            Command::Verify(_) => "verify",
        }
    }
}

/// Exit status: 0 pass, 1 verification failure, 2 usage error.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Defaults, then the config file, then flags, then `--set`.
pub fn resolve_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        cfg = cfg.merge_kv(&text)?;
    }
    macro_rules! apply {
        ($($field:ident),*) => {
            $(if let Some(v) = common.$field.clone() { cfg.$field = v; })*
        };
    }
    apply!(q, kappa, tau, tmin, tmax, tsamples, xmax, n, out, seed);
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Invalid(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `args` and runs; human-readable output goes to `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match resolve_config(&cli.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match dispatch(&cli.command, &cfg, stdout) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::Invalid(_) | Error::Grid(_) | Error::Io(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

/// Runs one subcommand; `Ok(false)` means a check failed.
pub fn dispatch(command: &Command, cfg: &RunConfig, stdout: &mut dyn Write) -> Result<bool> {
    fs::create_dir_all(&cfg.out)?;
    match command {
        Command::Spectrum => cmd_spectrum(cfg, stdout),
        Command::Boundstate => cmd_boundstate(cfg, stdout),
        Command::Propagate => cmd_propagate(cfg, stdout),
        Command::Decay => cmd_decay(cfg, stdout),
        Command::Verify(v) => cmd_verify(cfg, v.corrupt_weight, stdout),
    }
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    fs::write(dir.join(name), bytes)?;
    Ok(())
}

/// JSON report with the resolved config embedded.
fn write_report(cfg: &RunConfig, command: &str, name: &str, body: serde_json::Value) -> Result<()> {
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": cfg,
        "report": body,
    });
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    write_file(&cfg.out, name, text.as_bytes())
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn status(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_spectrum(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<bool> {
    let lambdas = cfg.lambda_grid();
    let q = cfg.q;
    let (g_csv, tables) = rayon::join(
        || csv_bytes(|b| write_g_table(&lambdas, q, b)),
        || SpectralTables::build(&lambdas, cfg.table_xmax, (q > 0.0).then_some(q)),
    );
    let (g_csv, tables) = (g_csv?, tables?);
    write_file(&cfg.out, "g_table.csv", &g_csv)?;
    let mut quantities = vec!["phi", "xi"];
    if q > 0.0 {
        quantities.push("phi_perturbed");
    }
    for name in &quantities {
        let bytes = csv_bytes(|b| tables.write_csv(name, b))?;
        write_file(&cfg.out, &format!("{name}.csv"), &bytes)?;
    }
    let summary = if q > 0.0 {
        let (lam_sup, g_sup) = g_supremum(q, 2000)?;
        let l0 = lambdas[0];
        json!({
            "g_sup": {"lambda": lam_sup, "g": g_sup},
            "g_log2_at_lambda_min": g_factor(l0, q)?.value * l0.ln().powi(2),
            "limit_g_log2": 1.0 / (q * q),
        })
    } else {
        json!({"free": true})
    };
    write_report(cfg, "spectrum", "spectrum.json", summary)?;
    writeln!(
        stdout,
        "spectrum: {} lambda samples, tables up to x = {}, written to {}",
        lambdas.len(),
        cfg.table_xmax,
        cfg.out.display()
    )?;
    Ok(true)
}

fn cmd_boundstate(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<bool> {
    if cfg.q <= 0.0 {
        return Err(Error::Invalid("boundstate needs q > 0".into()));
    }
    let q = cfg.q;
    let bs = bound_state_solve(q)?;
    let residual = bs.truncated_residual(cfg.n)?;
    let qs = [q / 4.0, q / 2.0, q, 2.0 * q, 4.0 * q];
    let sweep: Result<Vec<(f64, f64, f64)>> = qs
        .par_iter()
        .map(|&qq| bound_state_solve(qq).map(|b| (qq, b.lambda0, b.secular_residual)))
        .collect();
    let sweep = sweep?;
    let monotone = sweep.windows(2).all(|p| p[1].1 < p[0].1);
    let secular_ok = bs.secular_residual.abs() < 1e-12;
    let residual_ok = residual < 1e-8;

    let sweep_csv = csv_bytes(|b| {
        write_schema_line(b, "bound-state sweep")?;
        writeln!(b, "q,lambda0,secular_residual")?;
        for (qq, l, r) in &sweep {
            writeln!(b, "{},{},{}", fmt_f64(*qq), fmt_f64(*l), fmt_f64(*r))?;
        }
        Ok(())
    })?;
    let vec_csv = csv_bytes(|b| {
        write_schema_line(b, &format!("bound-state vector q={}", fmt_f64(q)))?;
        writeln!(b, "x,re,im")?;
        for (x, v) in bs.vector.values().iter().enumerate() {
            writeln!(b, "{x},{},{}", fmt_f64(v.re), fmt_f64(v.im))?;
        }
        Ok(())
    })?;
    write_file(&cfg.out, "boundstate_sweep.csv", &sweep_csv)?;
    write_file(&cfg.out, "boundstate_vector.csv", &vec_csv)?;
    write_report(
        cfg,
        "boundstate",
        "boundstate.json",
        json!({
            "q": q,
            "lambda0": bs.lambda0,
            "secular_residual": bs.secular_residual,
            "psi_norm_sq": bs.psi_norm_sq,
            "truncated_n": cfg.n,
            "residual": residual,
            "sweep_monotone": monotone,
            "vector": bs.vector,
        }),
    )?;
    writeln!(stdout, "lambda0 = {:.15e} (q = {q})", bs.lambda0)?;
    writeln!(stdout, "{} secular residual {:.3e} < 1e-12", status(secular_ok), bs.secular_residual)?;
    writeln!(stdout, "{} truncated residual {residual:.3e} < 1e-8 at N = {}", status(residual_ok), cfg.n)?;
    writeln!(stdout, "{} lambda0 decreasing in q over the sweep", status(monotone))?;
    Ok(secular_ok && residual_ok && monotone)
}

#[derive(Debug, Clone, Serialize)]
struct PropagateCheck {
    t: f64,
    oracle_diff: f64,
    unitarity: f64,
    err_est: f64,
}

fn cmd_propagate(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<bool> {
    let spec = cfg.operator()?;
    let times = cfg.time_grid(false);
    let quad = cfg.quadrature();
    let (table, oracle) = rayon::join(
        || kernel_table(&spec, &times, cfg.xmax, &quad),
        || oracle_kernel(&spec, &times, cfg.xmax),
    );
    let (table, oracle) = (table?, oracle?);
    let m = cfg.xmax + 1;
    let checks: Vec<PropagateCheck> = times
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let mut diff = 0.0f64;
            let mut unit = 0.0f64;
            let mut err = 0.0f64;
            for x2 in 0..m {
                // column norms on the window; the oracle's deficit is the
                // mass a unitary evolution puts beyond it
                let (mut s_spec, mut s_orc) = (0.0, 0.0);
                for x1 in 0..m {
                    let a = table.get(ti, x1, x2);
                    let b = oracle.get(ti, x1, x2);
                    diff = diff.max((a - b).norm());
                    err = err.max(table.error(ti, x1, x2));
                    s_spec += a.norm_sqr();
                    s_orc += b.norm_sqr();
                }
                unit = unit.max((s_spec + (1.0 - s_orc) - 1.0).abs());
            }
            PropagateCheck {
                t,
                oracle_diff: diff,
                unitarity: unit,
                err_est: err,
            }
        })
        .collect();
    let kernel_csv = csv_bytes(|b| table.write_csv(b))?;
    let check_csv = csv_bytes(|b| {
        write_schema_line(b, &format!("propagator checks kind={} xmax={}", spec.kind, cfg.xmax))?;
        writeln!(b, "t,oracle_diff,unitarity,err_est")?;
        for c in &checks {
            writeln!(
                b,
                "{},{},{},{}",
                fmt_f64(c.t),
                fmt_f64(c.oracle_diff),
                fmt_f64(c.unitarity),
                fmt_f64(c.err_est)
            )?;
        }
        Ok(())
    })?;
    write_file(&cfg.out, "kernel.csv", &kernel_csv)?;
    write_file(&cfg.out, "propagate_check.csv", &check_csv)?;
    let worst_diff = checks.iter().map(|c| c.oracle_diff).fold(0.0, f64::max);
    let worst_unit = checks.iter().map(|c| c.unitarity).fold(0.0, f64::max);
    let ok_diff = worst_diff < 1e-6;
    let ok_unit = worst_unit < 1e-6;
    write_report(
        cfg,
        "propagate",
        "propagate.json",
        json!({
            "kind": spec.kind,
            "oracle_n": oracle.n,
            "oracle_doubling_discrepancy": oracle.doubling_discrepancy,
            "nodes": table.nodes,
            "checks": checks,
            "oracle_ok": ok_diff,
            "unitarity_ok": ok_unit,
        }),
    )?;
    writeln!(stdout, "{} kernel vs matrix oracle (N = {}): {worst_diff:.3e} < 1e-6", status(ok_diff), oracle.n)?;
    writeln!(stdout, "{} unitarity defect {worst_unit:.3e} < 1e-6", status(ok_unit))?;
    Ok(ok_diff && ok_unit)
}

fn cmd_decay(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<bool> {
    let weight = cfg.weight()?;
    let times = cfg.time_grid(true);
    let quad = cfg.quadrature();
    if cfg.q == 0.0 {
        let bound_times = log_times(1.0, cfg.tmax.max(10.0), 13)?;
        let r = free_decay_report(weight, cfg.xmax, &times, &bound_times, &quad)?;
        let curve_csv = csv_bytes(|b| r.curve.write_csv(b))?;
        write_file(&cfg.out, "decay.csv", &curve_csv)?;
        write_report(cfg, "decay", "decay_report.json", serde_json::to_value(&r)?)?;
        writeln!(stdout, "{} fitted exponent {:.4} within -1 +- 0.05", status(r.exponent_ok), r.fit.slope)?;
        writeln!(
            stdout,
            "{} explicit kernel bound: {} violations in {} samples (worst ratio {:.3e})",
            status(r.constant_73.violations == 0),
            r.constant_73.violations,
            r.constant_73.samples,
            r.constant_73.worst_ratio
        )?;
        return Ok(r.passed());
    }
    let (r, g) = rayon::join(
        || perturbed_decay_report(cfg.q, weight, cfg.xmax, &times, &quad),
        || g_threshold_hypotheses_report(cfg.q),
    );
    let (r, g) = (r?, g?);
    write_file(&cfg.out, "decay.csv", &csv_bytes(|b| r.curve.write_csv(b))?)?;
    write_file(&cfg.out, "decay_full.csv", &csv_bytes(|b| r.full.write_csv(b))?)?;
    write_report(
        cfg,
        "decay",
        "decay_report.json",
        json!({"decay": r, "g_threshold": g}),
    )?;
    writeln!(stdout, "{} t*D(t) strictly decreasing", status(r.scaled_decreasing))?;
    writeln!(
        stdout,
        "{} D(t^2)t^2/(D(t)t) = {:.4} at t = {} within [0.125, 0.375]",
        status(r.ratio_ok),
        r.log_ratio,
        r.ratio_time
    )?;
    writeln!(stdout, "{} pure-power exponent {:.4} in (-1.35, -1)", status(r.exponent_ok), r.pure_power.slope)?;
    writeln!(stdout, "     log-power exponent {:.4} (threshold law predicts -2)", r.power_log.slope)?;
    writeln!(stdout, "{} full kernel floor {:.3e}", status(r.has_floor), r.floor)?;
    writeln!(
        stdout,
        "     q^2 g log^2(lambda) at lambda = 1e-8: {:.4}",
        g.normalized_g_log2_at_min
    )?;
    Ok(r.passed())
}

/// Outcome of one verify check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type CheckFn<'a> = Box<dyn Fn() -> Result<(bool, String)> + Send + Sync + 'a>;

/// The invariant suite; `corrupt_weight` scales the spectral weight in the
/// completeness checks.
pub fn verify_suite(cfg: &RunConfig, corrupt_weight: bool) -> Vec<CheckResult> {
    let scale = if corrupt_weight { 1.001 } else { 1.0 };
    let qp = if cfg.q > 0.0 { cfg.q } else { 1.0 };
    let seed = cfg.seed;
    let quad = cfg.quadrature();
    let kappa = cfg.kappa;
    let n = cfg.n;
    let mut checks: Vec<(&'static str, CheckFn)> = Vec::new();

    checks.push((
        "completeness_free",
        Box::new(move || {
            let mut worst = 0.0f64;
            for x1 in 0..=10 {
                for x2 in x1..=10 {
                    worst = worst.max(completeness_check_scaled(None, x1, x2, scale)?);
                }
            }
            Ok((worst < 1e-9, format!("max deviation {worst:.3e} < 1e-9 (x <= 10)")))
        }),
    ));
    checks.push((
        "completeness_perturbed",
        Box::new(move || {
            let mut worst = 0.0f64;
            for x1 in 0..=5 {
                for x2 in x1..=5 {
                    worst = worst.max(completeness_check_scaled(Some(qp), x1, x2, scale)?);
                }
            }
            Ok((worst < 1e-9, format!("max deviation {worst:.3e} < 1e-9 (q = {qp}, x <= 5)")))
        }),
    ));
    checks.push((
        "binomial_involution",
        Box::new(move || {
            let mut bad = 0;
            for v in random_finite_vectors(50, 12, seed) {
                let ints: Vec<i64> = v.values().iter().map(|z| (z.re * 1000.0).round() as i64).collect();
                let k = 12;
                let tv: Vec<i64> = binomial_transform_exact(&ints, k)?
                    .into_iter()
                    .map(|a| i64::try_from(a).map_err(|_| Error::Invalid("overflow".into())))
                    .collect::<Result<_>>()?;
                let back = binomial_transform_exact(&tv, k)?;
                if (0..=k).any(|x| back[x] != ints.get(x).copied().unwrap_or(0) as i128) {
                    bad += 1;
                }
            }
            Ok((bad == 0, format!("{bad} of 50 integer vectors fail T^2 = I")))
        }),
    ));
    checks.push((
        "binomial_laguerre",
        Box::new(|| {
            let mut worst = 0.0f64;
            for lam in [0.5, 1.0, 5.0] {
                let phi = LatticeVector::from_real(&phi_values(lam, 15), false);
                let t = binomial_transform(&phi, 15)?;
                let mut term = 1.0;
                for k in 0..=15 {
                    if k > 0 {
                        term *= lam / k as f64;
                    }
                    worst = worst.max((t.get(k).re - term).abs() + t.get(k).im.abs());
                }
            }
            Ok((worst < 1e-10, format!("max |T phi(k) - lambda^k/k!| = {worst:.3e} < 1e-10")))
        }),
    ));
    checks.push((
        "binomial_intertwining",
        Box::new(move || {
            let mut worst = 0.0f64;
            for v in random_finite_vectors(50, 12, seed.wrapping_add(1)) {
                let u = v.resized(v.len() + 1);
                let tl = binomial_transform(&apply_l0(&u), 16)?;
                let tv = binomial_transform(&u, 17)?;
                for k in 0..=15 {
                    let rhs = tv.get(k + 1) * (k as f64 + 1.0);
                    let scale = 1.0 + tl.get(k).norm().max(rhs.norm());
                    worst = worst.max((tl.get(k) - rhs).norm() / scale);
                }
            }
            Ok((worst < 1e-9, format!("max residual of T(L0 v)(k) = (k+1)Tv(k+1): {worst:.3e}")))
        }),
    ));
    checks.push((
        "resolvent_identity",
        Box::new(|| {
            let zs = [
                Complex64::new(-1.0, 0.0),
                Complex64::new(-2.0, 0.0),
                Complex64::new(1.0, 1.0),
                Complex64::new(3.0, -2.0),
            ];
            let mut worst = 0.0f64;
            for z in zs {
                worst = worst.max(resolvent_identity_residual(z, 30)?);
            }
            Ok((worst < 1e-9, format!("max |(L0 - z)psi - chi0| = {worst:.3e} < 1e-9 (x <= 30)")))
        }),
    ));
    checks.push((
        "bound_state",
        Box::new(move || {
            let bs = bound_state_solve(qp)?;
            let r = bs.truncated_residual(n)?;
            Ok((
                bs.secular_residual.abs() < 1e-12 && r < 1e-8,
                format!(
                    "lambda0 = {:.12}, secular {:.2e}, truncated residual {r:.2e} (N = {n})",
                    bs.lambda0, bs.secular_residual
                ),
            ))
        }),
    ));
    checks.push((
        "perturbed_eigenfunctions",
        Box::new(move || {
            let mut worst = 0.0f64;
            let mut weight_gap = 0.0f64;
            for lam in [0.1, 1.0, 10.0] {
                worst = worst.max(perturbed_eigen_residual(lam, qp, 80)?);
                let g = g_factor(lam, qp)?;
                let composed = g.value * (-lam).exp();
                weight_gap = weight_gap.max((g.weight - composed).abs() / composed);
            }
            Ok((
                worst < 1e-8 && weight_gap <= 4.0 * f64::EPSILON,
                format!("eigen residual {worst:.3e} < 1e-8, weight gap {weight_gap:.1e}"),
            ))
        }),
    ));
    checks.push((
        "propagator_closed_form",
        Box::new(move || {
            let mut worst = 0.0f64;
            for t in [0.5, 1.0, 10.0, 100.0] {
                let k = kernel_free(t, 0, 0, &quad)?.value;
                worst = worst.max((k - 1.0 / Complex64::new(1.0, t)).norm());
            }
            Ok((worst < 1e-8, format!("max |K(t,0,0) - 1/(1+it)| = {worst:.3e} < 1e-8")))
        }),
    ));
    checks.push((
        "propagator_oracle",
        Box::new(move || {
            let times = [1.0, 5.0];
            let mut worst = 0.0f64;
            for spec in [OperatorSpec::free(n), OperatorSpec::perturbed(qp, n)?] {
                let a = kernel_table(&spec, &times, 5, &quad)?;
                let b = oracle_kernel(&spec, &times, 5)?;
                for ti in 0..times.len() {
                    for x1 in 0..=5 {
                        for x2 in 0..=5 {
                            worst = worst.max((a.get(ti, x1, x2) - b.get(ti, x1, x2)).norm());
                        }
                    }
                }
            }
            Ok((worst < 1e-6, format!("max |K - K_oracle| = {worst:.3e} < 1e-6 (t in {{1, 5}}, x <= 5)")))
        }),
    ));
    checks.push((
        "free_decay",
        Box::new(move || {
            let w = crate::lattice::WeightSpec::new(kappa, -3.0)?;
            let times = log_times(10.0, 1e3, 9)?;
            let bound_times = log_times(1.0, 1e3, 7)?;
            let r = free_decay_report(w, 40, &times, &bound_times, &quad)?;
            Ok((
                r.passed(),
                format!(
                    "exponent {:.4}, explicit-bound violations {}",
                    r.fit.slope, r.constant_73.violations
                ),
            ))
        }),
    ));
    checks.push((
        "perturbed_decay",
        Box::new(move || {
            let w = crate::lattice::WeightSpec::new(kappa, -3.0)?;
            let times = log_times(1e2, 1e4, 9)?;
            let r = perturbed_decay_report(qp, w, 40, &times, &quad)?;
            Ok((
                r.passed(),
                format!(
                    "tD decreasing {}, ratio {:.4}, exponent {:.4}, floor {:.2e}",
                    r.scaled_decreasing, r.log_ratio, r.pure_power.slope, r.floor
                ),
            ))
        }),
    ));
    checks.push((
        "generating_function_bounds",
        Box::new(move || {
            let r = lemma_bound_suite(&LemmaSuiteConfig::with_kappa(kappa))?;
            let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
            let samples: usize = r.checks.iter().map(|c| c.samples).sum();
            Ok((
                failed.is_empty(),
                if failed.is_empty() {
                    format!("{samples} samples, no violations (kappa = {kappa})")
                } else {
                    format!("violations in {}", failed.join(", "))
                },
            ))
        }),
    ));
    checks.push((
        "semi_analytic_bound",
        Box::new(move || {
            let mut worst = 0.0f64;
            for v in random_finite_vectors(100, 12, seed.wrapping_add(2)) {
                if v.support_hint().is_none() {
                    continue;
                }
                let r = semi_analytic_bound_report(&v, 10)?;
                worst = r.rows.iter().map(|row| row.ratio).fold(worst, f64::max);
            }
            Ok((worst <= 1.0, format!("largest norm/bound ratio {worst:.3e} over 100 vectors")))
        }),
    ));
    checks.push((
        "g_threshold_law",
        Box::new(move || {
            let r = g_threshold_hypotheses_report(qp)?;
            let ok = r.approaches_limit
                && r.dg_bounded
                && r.d2g_bounded
                && r.kernel_at_threshold == 0.0
                && r.kernel_decreasing
                && r.g_bounded_by_sup;
            Ok((
                ok,
                format!(
                    "q^2 g log^2 = {:.4} at 1e-8 and approaching 1: {}; derivative products bounded: {}",
                    r.normalized_g_log2_at_min,
                    r.approaches_limit,
                    r.dg_bounded && r.d2g_bounded
                ),
            ))
        }),
    ));

    checks
        .par_iter()
        .map(|(name, f)| match f() {
            Ok((passed, detail)) => CheckResult {
                name,
                passed,
                detail,
            },
            Err(e) => CheckResult {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        })
        .collect()
}

fn cmd_verify(cfg: &RunConfig, corrupt_weight: bool, stdout: &mut dyn Write) -> Result<bool> {
    let results = verify_suite(cfg, corrupt_weight);
    for r in &results {
        writeln!(stdout, "{} {}: {}", status(r.passed), r.name, r.detail)?;
    }
    let passed = results.iter().all(|r| r.passed);
    let failures = results.iter().filter(|r| !r.passed).count();
    writeln!(stdout, "{} of {} checks passed", results.len() - failures, results.len())?;
    write_report(
        cfg,
        "verify",
        "verify.json",
        json!({"corrupt_weight": corrupt_weight, "passed": passed, "checks": results}),
    )?;
    Ok(passed)
}
