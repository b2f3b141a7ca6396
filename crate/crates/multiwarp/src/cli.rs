//! The `multiwarp` command-line tool: `curvature`, `einstein`, `kasner`
//! and `verify` subcommands over TOML configs or named presets, with
//! deterministic JSON/CSV reports.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 mathematical domain error.

use crate::btz;
use crate::config::{
    resolve, GridConfig, OutputConfig, OutputFormat, Resolved, RunConfig,
};
use crate::curvature::{self, CurvaturePoint};
use crate::einstein::{self, Verdict};
use crate::error::{Error, Result};
use crate::kasner::{self, ConstantSolutionEq, OdeFamily, PowerTerm, RootScan, TableRow};
use crate::oracle::{self, OracleReport};
use crate::warp::Interval;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "multiwarp",
    about = "Curvature engine for multiply warped product space-times",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate scalar curvature and Ricci blocks over a grid.
    Curvature(CommonArgs),
    /// Decide the Einstein condition and infer the Ricci constant.
    Einstein {
        #[command(flatten)]
        common: CommonArgs,
        /// Ricci constant to test, or `auto` to infer it from the grid.
        #[arg(long, default_value = "auto")]
        lambda: String,
    },
    /// Kasner classification tables, ODE families and root counting.
    Kasner {
        #[command(subcommand)]
        command: KasnerCommand,
    },
    /// Cross-check the closed forms against the finite-difference oracle.
    Verify(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named preset: kasner, schwarzschild_interior, btz_static.
    #[arg(long)]
    pub preset: Option<String>,
    /// Preset mass parameter.
    #[arg(long)]
    pub m: Option<f64>,
    /// Preset curvature-radius parameter.
    #[arg(long)]
    pub l: Option<f64>,
    /// Grid `start:end:points`.
    #[arg(long)]
    pub grid: Option<String>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Tolerance override (also via the MULTIWARP_TOL environment variable).
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum KasnerCommand {
    /// Match parameters against the Einstein / constant-curvature tables.
    Classify {
        /// Model type: II (fibers of dimension 1 and 2) or III (1, 1, 1).
        #[arg(long = "type")]
        model_type: String,
        /// Classify against the constant-scalar-curvature table instead of
        /// the Einstein table.
        #[arg(long)]
        constant_tau: bool,
        #[arg(long, allow_hyphen_values = true)]
        zeta: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        eta: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
        #[arg(long = "lambda-f2", alias = "lambdaF2", allow_hyphen_values = true)]
        lambda_f2: Option<String>,
        #[arg(long = "tau-f2", alias = "tauF2", allow_hyphen_values = true)]
        tau_f2: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        p1: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        p2: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        p3: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve `(phi^sigma)'' = nu phi^sigma` (optionally the star-variant).
    Solve {
        #[arg(long)]
        sigma: f64,
        #[arg(long, allow_hyphen_values = true)]
        nu: f64,
        #[arg(long = "A", default_value_t = 1.0, allow_hyphen_values = true)]
        coeff_a: f64,
        #[arg(long = "B", default_value_t = 0.0, allow_hyphen_values = true)]
        coeff_b: f64,
        /// Solve the doubly-constrained system (pure exponential, nu > 0).
        #[arg(long)]
        star: bool,
        /// Working interval `start:end`.
        #[arg(long, default_value = "0:1")]
        interval: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count constant solutions of the curvature root equations.
    Roots {
        /// Equation family: `s3s2` (alias IIIs) couples a 3-sphere and a
        /// 2-sphere through u = phi^3; `s3s3` (alias IIIs2) couples two
        /// 3-spheres with the equation in phi itself.
        #[arg(long)]
        family: String,
        #[arg(long = "tau-s3", alias = "tauS3", default_value_t = 6.0)]
        tau_s3: f64,
        #[arg(long = "tau-s2", alias = "tauS2", default_value_t = 2.0)]
        tau_s2: f64,
        #[arg(long, allow_hyphen_values = true)]
        tau: f64,
        #[arg(long = "u-max", default_value_t = kasner::DEFAULT_U_MAX)]
        u_max: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Run the CLI, mapping errors to exit codes.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Curvature(common) => {
            let resolved = resolve_common(&common)?;
            let report = cmd_curvature(&resolved)?;
            match resolved.format {
                OutputFormat::Json => write_json(&report, resolved.output_path.as_deref())?,
                OutputFormat::Csv => {
                    write_text(&curvature_csv(&report), resolved.output_path.as_deref())?
                }
            }
            Ok(0)
        }
        Command::Einstein { common, lambda } => {
            let resolved = resolve_common(&common)?;
            let report = cmd_einstein(&resolved, &lambda)?;
            write_json(&report, resolved.output_path.as_deref())?;
            Ok(0)
        }
        Command::Kasner { command } => run_kasner(command),
        Command::Verify(common) => {
            let resolved = resolve_common(&common)?;
            let report = cmd_verify(&resolved)?;
            match resolved.format {
                OutputFormat::Json => write_json(&report, resolved.output_path.as_deref())?,
                OutputFormat::Csv => {
                    write_text(&verify_csv(&report), resolved.output_path.as_deref())?
                }
            }
            Ok(if report.pass { 0 } else { 1 })
        }
    }
}

/// Merge CLI flags over an optional config file and resolve.
pub fn resolve_common(common: &CommonArgs) -> Result<Resolved> {
    let mut config = match &common.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(preset) = &common.preset {
        config.preset = Some(preset.clone());
    }
    if common.m.is_some() || common.l.is_some() {
        let mut params = config.params.take().unwrap_or_default();
        if let Some(m) = common.m {
            params.insert("m".into(), m);
        }
        if let Some(l) = common.l {
            params.insert("l".into(), l);
        }
        config.params = Some(params);
    }
    if let Some(grid) = &common.grid {
        config.grid = Some(GridConfig { spec: grid.clone() });
    }
    if common.out.is_some() || common.format.is_some() {
        let output = config.output.get_or_insert(OutputConfig {
            path: None,
            format: None,
        });
        if let Some(out) = &common.out {
            output.path = Some(out.clone());
        }
        if common.format.is_some() {
            output.format = common.format;
        }
    }
    let mut resolved = resolve(&config)?;
    let env_tol = std::env::var("MULTIWARP_TOL")
        .ok()
        .and_then(|s| s.parse::<f64>().ok());
    if let Some(tol) = common.tol.or(env_tol) {
        resolved.einstein_tolerance = tol;
        resolved.oracle_tolerance = tol;
    }
    Ok(resolved)
}

// ---------------------------------------------------------------------------
// curvature
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct CurvatureRun {
    pub records: Vec<CurvaturePoint>,
}

pub fn cmd_curvature(resolved: &Resolved) -> Result<CurvatureRun> {
    let records = resolved
        .grid
        .iter()
        .map(|&t| curvature::curvature_point(&resolved.spacetime, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(CurvatureRun { records })
}

fn curvature_csv(run: &CurvatureRun) -> String {
    let fibers = run
        .records
        .first()
        .map(|r| r.ricci_fiber_coeff.len())
        .unwrap_or(0);
    let mut out = String::from("t,tau_form1,tau_form2,tau_psi_form,ricci_tt");
    for i in 0..fibers {
        out.push_str(&format!(",ricci_fiber_coeff_{i}"));
    }
    out.push('\n');
    for r in &run.records {
        out.push_str(&format!(
            "{},{},{},{},{}",
            r.t, r.tau_form1, r.tau_form2, r.tau_psi_form, r.ricci_tt
        ));
        for c in &r.ricci_fiber_coeff {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// einstein
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct EinsteinRun {
    pub lambda_mode: String,
    pub inferred_lambda: Option<f64>,
    pub constant_tau: Option<f64>,
    pub verdict: Verdict,
    pub report: Option<einstein::EinsteinReport>,
}

pub fn cmd_einstein(resolved: &Resolved, lambda_arg: &str) -> Result<EinsteinRun> {
    let st = &resolved.spacetime;
    let grid = &resolved.grid;
    let tol = resolved.einstein_tolerance;
    let lambda = if lambda_arg == "auto" {
        einstein::infer_lambda_with_tolerance(st, grid, tol)?
    } else {
        Some(lambda_arg.parse::<f64>().map_err(|_| {
            Error::Config(format!("--lambda must be a number or `auto`, got `{lambda_arg}`"))
        })?)
    };
    let constant_tau = einstein::constant_scalar_check_with_tolerance(st, grid, tol)?;
    match lambda {
        Some(lambda) => {
            let report = einstein::einstein_residuals_with_tolerance(st, lambda, grid, tol)?;
            Ok(EinsteinRun {
                lambda_mode: lambda_arg.to_string(),
                inferred_lambda: Some(lambda),
                constant_tau,
                verdict: report.verdict.clone(),
                report: Some(report),
            })
        }
        None => Ok(EinsteinRun {
            lambda_mode: lambda_arg.to_string(),
            inferred_lambda: None,
            constant_tau,
            verdict: Verdict::NotEinstein {
                reason: "sum s_i b_i''/b_i is not constant over the grid".into(),
            },
            report: None,
        }),
    }
}

// ---------------------------------------------------------------------------
// kasner
// ---------------------------------------------------------------------------

/// Parse a number that may be written as a fraction `a/b`, so table
/// parameters like `2/3` keep their structural relations exactly.
pub fn parse_number(text: &str) -> Result<f64> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let n: f64 = num
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("`{text}` is not a number")))?;
        let d: f64 = den
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("`{text}` is not a number")))?;
        if d == 0.0 {
            return Err(Error::Config(format!("`{text}` divides by zero")));
        }
        Ok(n / d)
    } else {
        text.parse()
            .map_err(|_| Error::Config(format!("`{text}` is not a number")))
    }
}

fn parse_opt(value: &Option<String>, default: f64) -> Result<f64> {
    match value {
        Some(s) => parse_number(s),
        None => Ok(default),
    }
}

#[derive(Debug, Serialize)]
pub struct ClassifyRun {
    pub zeta: f64,
    pub eta: f64,
    pub exponents: Vec<f64>,
    pub row: TableRow,
}

#[allow(clippy::too_many_arguments)]
fn run_classify(
    model_type: &str,
    constant_tau: bool,
    zeta: Option<f64>,
    eta: Option<f64>,
    lambda: f64,
    lambda_f2: f64,
    tau_f2: f64,
    p: [Option<f64>; 3],
) -> Result<ClassifyRun> {
    match model_type {
        "II" | "ii" | "2" => {
            let (p1, p2) = match (p[0], p[1]) {
                (Some(p1), Some(p2)) => (p1, p2),
                _ => derive_type2_exponents(zeta, eta)?,
            };
            let zeta = zeta.unwrap_or(p1 + 2.0 * p2);
            let eta = eta.unwrap_or(p1 * p1 + 2.0 * p2 * p2);
            let row = if constant_tau {
                kasner::classify_constant_tau_type2(zeta, eta, tau_f2, p1, p2)?
            } else {
                kasner::classify_einstein_type2(zeta, eta, lambda, lambda_f2, p1, p2)?
            };
            Ok(ClassifyRun {
                zeta,
                eta,
                exponents: vec![p1, p2],
                row,
            })
        }
        "III" | "iii" | "3" => {
            if constant_tau {
                return Err(Error::Config(
                    "no constant-curvature classification table for type III; \
                     use the scalar-curvature equation directly"
                        .into(),
                ));
            }
            let ps = match (p[0], p[1], p[2]) {
                (Some(a), Some(b), Some(c)) => [a, b, c],
                _ => derive_type3_exponents(zeta, eta)?,
            };
            let zeta = zeta.unwrap_or(ps.iter().sum());
            let eta = eta.unwrap_or(ps.iter().map(|p| p * p).sum());
            let row = kasner::classify_einstein_type3(zeta, eta, lambda, ps)?;
            Ok(ClassifyRun {
                zeta,
                eta,
                exponents: ps.to_vec(),
                row,
            })
        }
        other => Err(Error::Config(format!(
            "--type must be II or III, got `{other}`"
        ))),
    }
}

/// Recover `(p1, p2)` from `(zeta, eta)` for a type-II model:
/// `p1 = (zeta +- sqrt(6 eta - 2 zeta^2)) / 3`, `p2 = (zeta - p1)/2`.
/// Picks the branch with `p2 = 0` when `eta = zeta^2`.
fn derive_type2_exponents(zeta: Option<f64>, eta: Option<f64>) -> Result<(f64, f64)> {
    let (zeta, eta) = match (zeta, eta) {
        (Some(z), Some(e)) => (z, e),
        _ => {
            return Err(Error::Config(
                "give either --p1/--p2 or both --zeta and --eta".into(),
            ))
        }
    };
    let disc = 6.0 * eta - 2.0 * zeta * zeta;
    if disc < -1e-12 {
        return Err(Error::InconsistentParameters(format!(
            "no real exponents with zeta = {zeta}, eta = {eta}"
        )));
    }
    let root = disc.max(0.0).sqrt();
    let p1 = if zeta >= 0.0 {
        (zeta + root) / 3.0
    } else {
        (zeta - root) / 3.0
    };
    Ok((p1, (zeta - p1) / 2.0))
}

fn derive_type3_exponents(zeta: Option<f64>, eta: Option<f64>) -> Result<[f64; 3]> {
    let (zeta, eta) = match (zeta, eta) {
        (Some(z), Some(e)) => (z, e),
        _ => {
            return Err(Error::Config(
                "give --p1/--p2/--p3 or both --zeta and --eta".into(),
            ))
        }
    };
    if zeta.abs() <= kasner::STRUCTURAL_EPS && eta.abs() <= kasner::STRUCTURAL_EPS {
        return Ok([0.0; 3]);
    }
    if (eta - zeta * zeta / 3.0).abs() <= 1e-12 * (1.0 + zeta * zeta) {
        return Ok([zeta / 3.0; 3]);
    }
    Err(Error::Config(
        "type III exponents are underdetermined by (zeta, eta); give --p1 --p2 --p3".into(),
    ))
}

#[derive(Debug, Serialize)]
pub struct SolveRun {
    pub family: OdeFamily,
    pub max_residual: f64,
    pub max_star_residual: Option<f64>,
    pub samples: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize)]
pub struct RootsRun {
    pub family: String,
    pub equation: ConstantSolutionEq,
    pub scan: RootScan,
    /// Smallest `tau` admitting a positive root, for the mixed-sphere
    /// family.
    pub threshold: Option<f64>,
}

fn run_kasner(command: KasnerCommand) -> Result<i32> {
    match command {
        KasnerCommand::Classify {
            model_type,
            constant_tau,
            zeta,
            eta,
            lambda,
            lambda_f2,
            tau_f2,
            p1,
            p2,
            p3,
            out,
        } => {
            let parse_p = |v: &Option<String>| -> Result<Option<f64>> {
                v.as_ref().map(|s| parse_number(s)).transpose()
            };
            let report = run_classify(
                &model_type,
                constant_tau,
                parse_p(&zeta)?,
                parse_p(&eta)?,
                parse_opt(&lambda, 0.0)?,
                parse_opt(&lambda_f2, 0.0)?,
                parse_opt(&tau_f2, 0.0)?,
                [parse_p(&p1)?, parse_p(&p2)?, parse_p(&p3)?],
            )?;
            write_json(&report, out.as_deref())?;
            Ok(0)
        }
        KasnerCommand::Solve {
            sigma,
            nu,
            coeff_a,
            coeff_b,
            star,
            interval,
            out,
        } => {
            let (lo, hi) = parse_interval(&interval)?;
            let interval = Interval::new(lo, hi)?;
            let family = if star {
                let sign = if coeff_b != 0.0 && coeff_a == 0.0 {
                    kasner::ExpSign::Minus
                } else {
                    kasner::ExpSign::Plus
                };
                let amplitude = coeff_a.abs().max(coeff_b.abs());
                kasner::solve_star_system(sigma, nu, amplitude, sign, interval)?
            } else {
                kasner::solve_phi_sigma_nu(sigma, nu, coeff_a, coeff_b, interval)?
            };
            let grid = interval.grid(65);
            let max_residual = grid
                .iter()
                .map(|&t| family.residual(t).abs())
                .fold(0.0, f64::max);
            let max_star_residual = star.then(|| {
                grid.iter()
                    .map(|&t| family.star_residual(t).abs())
                    .fold(0.0, f64::max)
            });
            let samples: Vec<[f64; 2]> = grid
                .iter()
                .step_by(8)
                .map(|&t| [t, family.power_jet(t).value])
                .collect();
            let report = SolveRun {
                family,
                max_residual,
                max_star_residual,
                samples,
            };
            write_json(&report, out.as_deref())?;
            Ok(0)
        }
        KasnerCommand::Roots {
            family,
            tau_s3,
            tau_s2,
            tau,
            u_max,
            out,
        } => {
            let (equation, threshold) = match family.as_str() {
                // two 3-spheres: constant equation in phi itself
                "s3s3" | "IIIs2" | "iiis2" => (
                    ConstantSolutionEq {
                        tau,
                        terms: vec![
                            PowerTerm {
                                coeff: tau_s3,
                                exponent: -1.0,
                            },
                            PowerTerm {
                                coeff: tau_s3,
                                exponent: 3.0,
                            },
                        ],
                    },
                    None,
                ),
                // 3-sphere x 2-sphere: equation in u = phi^3
                "s3s2" | "IIIs" | "iiis" => {
                    let terms = vec![
                        PowerTerm {
                            coeff: tau_s3,
                            exponent: 1.0 / 3.0,
                        },
                        PowerTerm {
                            coeff: tau_s2,
                            exponent: 5.0 / 3.0,
                        },
                    ];
                    let threshold = kasner::constant_solution_threshold(&terms)?;
                    (ConstantSolutionEq { tau, terms }, Some(threshold))
                }
                other => {
                    return Err(Error::Config(format!(
                        "unknown root family `{other}` (expected s3s2/IIIs or s3s3/IIIs2)"
                    )))
                }
            };
            let scan = kasner::constant_solution_count(&equation, u_max)?;
            let report = RootsRun {
                family,
                equation,
                scan,
                threshold,
            };
            write_json(&report, out.as_deref())?;
            Ok(0)
        }
    }
}

fn parse_interval(text: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!(
            "interval `{text}` is not of the form start:end"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Config(format!("`{}` is not a number", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Config(format!("`{}` is not a number", parts[1])))?;
    Ok((lo, hi))
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct ExpectationCheck {
    pub name: String,
    pub expected: f64,
    pub observed: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct VerifyRun {
    pub oracle_reports: Vec<OracleReport>,
    pub expectations: Vec<ExpectationCheck>,
    pub lapse_checks: Vec<ExpectationCheck>,
    pub pass: bool,
}

/// Points per verify run; the finite-difference pipeline is the expensive
/// side, so the grid is subsampled.
const VERIFY_POINTS: usize = 16;

pub fn cmd_verify(resolved: &Resolved) -> Result<VerifyRun> {
    let st = &resolved.spacetime;
    let tol = resolved.oracle_tolerance;
    // keep the finite-difference stencil well inside the domain
    let interval = st.interval();
    let h = oracle::DEFAULT_STEP;
    let (lo, hi) = interval.finite_window();
    let margin = (4.0 * h).max(0.02 * (hi - lo));
    let grid = crate::quad::linspace(lo + margin, hi - margin, VERIFY_POINTS);

    let oracle_reports = oracle::compare(st, &grid, h, tol)?;
    let mut pass = oracle_reports.iter().all(|r| r.pass);

    let mut expectations = Vec::new();
    let e_tol = resolved.einstein_tolerance;
    if resolved.expect.ricci_flat == Some(true) {
        let report = einstein::einstein_residuals_with_tolerance(st, 0.0, &grid, e_tol)?;
        let worst = report
            .residual_condition2
            .max(report.residual_condition3.iter().cloned().fold(0.0, f64::max));
        expectations.push(ExpectationCheck {
            name: "ricci_flat_residual".into(),
            expected: 0.0,
            observed: worst,
            pass: worst <= report.tolerance,
        });
    }
    if let Some(tau) = resolved.expect.tau_constant {
        let observed = einstein::constant_scalar_check_with_tolerance(st, &grid, e_tol)?;
        let (value, ok) = match observed {
            Some(v) => (v, (v - tau).abs() <= e_tol * (1.0 + tau.abs())),
            None => (f64::MAX, false),
        };
        expectations.push(ExpectationCheck {
            name: "constant_tau".into(),
            expected: tau,
            observed: value,
            pass: ok,
        });
    }
    if let Some(lambda) = resolved.expect.lambda {
        let observed = einstein::infer_lambda_with_tolerance(st, &grid, e_tol)?;
        let (value, ok) = match observed {
            Some(v) => (v, (v - lambda).abs() <= e_tol * (1.0 + lambda.abs())),
            None => (f64::MAX, false),
        };
        expectations.push(ExpectationCheck {
            name: "einstein_lambda".into(),
            expected: lambda,
            observed: value,
            pass: ok,
        });
    }

    // when a lapse is present, cross-check the curvature operator in N^2
    // against the engine value at t = F(r)
    let mut lapse_checks = Vec::new();
    if let Some(spec) = &resolved.lapse {
        let warps = btz::lapse_to_warps(spec)?;
        let (rlo, rhi) = spec.r_domain.finite_window();
        let pad = 0.05 * (rhi - rlo);
        for &r in crate::quad::linspace(rlo + pad, rhi - pad, 8).iter() {
            if r.abs() < 1e-6 {
                continue;
            }
            let t = warps.f(r)?;
            if !(t > interval.lo + margin && t < interval.hi - margin) {
                continue;
            }
            let engine = curvature::scalar_curvature(st, t)?.form1;
            let lapse_tau = btz::tau_of_lapse(spec, r)?;
            let ok = (engine - lapse_tau).abs() <= 1e-7 * (1.0 + engine.abs());
            lapse_checks.push(ExpectationCheck {
                name: format!("tau_of_lapse_r_{r:.4}"),
                expected: lapse_tau,
                observed: engine,
                pass: ok,
            });
        }
    }

    pass = pass
        && expectations.iter().all(|c| c.pass)
        && lapse_checks.iter().all(|c| c.pass);
    Ok(VerifyRun {
        oracle_reports,
        expectations,
        lapse_checks,
        pass,
    })
}

fn verify_csv(run: &VerifyRun) -> String {
    let mut out = String::from("t,quantity,closed_form,oracle,abs_diff,rel_diff,pass\n");
    for report in &run.oracle_reports {
        for c in &report.comparisons {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                report.t, c.quantity, c.closed_form, c.oracle, c.abs_diff, c.rel_diff, c.pass
            ));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// output
// ---------------------------------------------------------------------------

fn write_json<T: Serialize>(value: &T, path: Option<&std::path::Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_text(&text, path)
}

fn write_text(text: &str, path: Option<&std::path::Path>) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Parameters map helper for building preset configs programmatically.
pub fn preset_config(name: &str, params: &[(&str, f64)]) -> RunConfig {
    RunConfig {
        preset: Some(name.to_string()),
        params: Some(
            params
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect::<BTreeMap<_, _>>(),
        ),
        ..Default::default()
    }
}
