//! Run configuration: TOML schema, preset expansion and grid handling for
//! the command-line tool.
//!
//! A config names exactly one subject — a `[spacetime]` table, a `[kasner]`
//! table, a `[lapse]` table, or a `preset` — plus optional `[grid]`,
//! `[output]`, `[tolerances]` and `[expect]` sections.

use crate::btz::{self, LapseSpec};
use crate::error::{Error, Result};
use crate::spacetime::{self, FiberModel, FiberSpec, KasnerSpec, WarpedSpacetime};
use crate::warp::{Expr, Interval, WarpFn, ENDPOINT_MARGIN};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const DEFAULT_GRID_POINTS: usize = 128;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    /// Parameters for the preset (`m`, `l`, ...).
    pub params: Option<BTreeMap<String, f64>>,
    pub spacetime: Option<SpacetimeConfig>,
    pub kasner: Option<KasnerConfig>,
    pub lapse: Option<LapseConfig>,
    pub grid: Option<GridConfig>,
    pub output: Option<OutputConfig>,
    pub tolerances: Option<ToleranceConfig>,
    pub expect: Option<ExpectConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacetimeConfig {
    pub interval: [f64; 2],
    pub fiber: Vec<FiberConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberConfig {
    pub dim: usize,
    pub lambda: Option<f64>,
    pub tau: Option<f64>,
    pub model: Option<FiberModel>,
    pub warp: Expr,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KasnerConfig {
    pub interval: [f64; 2],
    pub phi: Expr,
    pub exponents: Vec<f64>,
    pub fiber: Vec<KasnerFiberConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KasnerFiberConfig {
    pub dim: usize,
    pub lambda: Option<f64>,
    pub tau: Option<f64>,
    pub model: Option<FiberModel>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LapseConfig {
    pub n_squared: Expr,
    pub anchor: f64,
    pub r_domain: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// `"start:end:points"`, endpoints clipped by a 1e-9 margin.
    pub spec: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
#[clap(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub einstein: Option<f64>,
    pub oracle: Option<f64>,
}

/// Expected properties checked by `verify` in addition to oracle agreement.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectConfig {
    pub ricci_flat: Option<bool>,
    pub tau_constant: Option<f64>,
    pub lambda: Option<f64>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("TOML parse error: {e}")))
    }
}

/// Grid specification `start:end:n`.
pub fn parse_grid_spec(spec: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "grid `{spec}` is not of the form start:end:points"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Config(format!("grid start `{}` is not a number", parts[0])))?;
    let end: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Config(format!("grid end `{}` is not a number", parts[1])))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| Error::Config(format!("grid points `{}` is not an integer", parts[2])))?;
    if !(start < end) || n == 0 {
        return Err(Error::Config(format!("grid `{spec}` is empty")));
    }
    Ok((start, end, n))
}

/// The resolved subject of a run.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub spacetime: WarpedSpacetime,
    pub kasner: Option<KasnerSpec>,
    pub lapse: Option<LapseSpec>,
    pub expect: ExpectConfig,
    pub grid: Vec<f64>,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
    pub einstein_tolerance: f64,
    pub oracle_tolerance: f64,
}

fn param(params: &Option<BTreeMap<String, f64>>, name: &str, default: f64) -> f64 {
    params
        .as_ref()
        .and_then(|p| p.get(name).copied())
        .unwrap_or(default)
}

/// Resolve a config (already merged with CLI overrides) into a concrete
/// subject, grid and tolerances.
pub fn resolve(config: &RunConfig) -> Result<Resolved> {
    let subjects = [
        config.preset.is_some(),
        config.spacetime.is_some(),
        config.kasner.is_some(),
        config.lapse.is_some(),
    ]
    .iter()
    .filter(|&&b| b)
    .count();
    if subjects != 1 {
        return Err(Error::Config(format!(
            "expected exactly one of preset / [spacetime] / [kasner] / [lapse], found {subjects}"
        )));
    }

    let mut expect = config.expect.clone().unwrap_or_default();
    let mut kasner = None;
    let mut lapse = None;

    let spacetime = if let Some(name) = &config.preset {
        match name.as_str() {
            "kasner" => {
                let k = spacetime::classical_kasner();
                let st = spacetime::kasner_to_mgrw(&k)?;
                if expect.ricci_flat.is_none() {
                    expect.ricci_flat = Some(true);
                }
                kasner = Some(k);
                st
            }
            "schwarzschild_interior" => {
                let m = param(&config.params, "m", 1.0);
                let preset = btz::schwarzschild_interior(m)?;
                if expect.ricci_flat.is_none() {
                    expect.ricci_flat = Some(true);
                }
                let st = preset.spacetime()?;
                lapse = Some(preset.lapse);
                st
            }
            "btz_static" => {
                let m = param(&config.params, "m", 1.0);
                let l = param(&config.params, "l", 1.0);
                let preset = btz::btz_static(m, l)?;
                if expect.tau_constant.is_none() {
                    expect.tau_constant = Some(preset.expected_tau());
                }
                if expect.lambda.is_none() {
                    expect.lambda = Some(preset.expected_lambda());
                }
                let st = preset.spacetime()?;
                lapse = Some(preset.lapse);
                st
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown preset `{other}` (expected kasner, schwarzschild_interior or btz_static)"
                )))
            }
        }
    } else if let Some(sc) = &config.spacetime {
        let interval = Interval::new(sc.interval[0], sc.interval[1])?;
        let fibers = sc
            .fiber
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let spec = fiber_spec(f.dim, f.lambda, f.tau, f.model, i)?;
                Ok((spec, WarpFn::new(f.warp.clone(), interval)))
            })
            .collect::<Result<Vec<_>>>()?;
        WarpedSpacetime::new(interval, fibers)?
    } else if let Some(kc) = &config.kasner {
        let interval = Interval::new(kc.interval[0], kc.interval[1])?;
        let fibers = kc
            .fiber
            .iter()
            .enumerate()
            .map(|(i, f)| fiber_spec(f.dim, f.lambda, f.tau, f.model, i))
            .collect::<Result<Vec<_>>>()?;
        let k = KasnerSpec::new(
            WarpFn::new(kc.phi.clone(), interval),
            kc.exponents.clone(),
            fibers,
        )?;
        let st = spacetime::kasner_to_mgrw(&k)?;
        kasner = Some(k);
        st
    } else {
        let lc = config.lapse.as_ref().unwrap();
        let spec = LapseSpec::new(
            lc.n_squared.clone(),
            lc.anchor,
            Interval::new(lc.r_domain[0], lc.r_domain[1])?,
        )?;
        let warps = btz::lapse_to_warps(&spec)?;
        let st = WarpedSpacetime::new(
            warps.t_domain,
            vec![
                (FiberSpec::flat(1), warps.b1),
                (FiberSpec::from_model(FiberModel::Circle), warps.b2),
            ],
        )?;
        lapse = Some(spec);
        st
    };

    // grid: explicit spec, or the interior of the subject interval
    let grid = if let Some(gc) = &config.grid {
        let (start, end, n) = parse_grid_spec(&gc.spec)?;
        let interval = spacetime.interval();
        let lo = start.max(interval.lo + ENDPOINT_MARGIN);
        let hi = end.min(interval.hi - ENDPOINT_MARGIN);
        if !(lo < hi) {
            return Err(Error::Config(format!(
                "grid [{start}, {end}] does not intersect the interval ({}, {})",
                interval.lo, interval.hi
            )));
        }
        crate::quad::linspace(lo, hi, n)
    } else {
        default_grid(&spacetime)
    };

    let einstein_tolerance = config
        .tolerances
        .as_ref()
        .and_then(|t| t.einstein)
        .unwrap_or(crate::einstein::DEFAULT_TOLERANCE);
    let oracle_tolerance = config
        .tolerances
        .as_ref()
        .and_then(|t| t.oracle)
        .unwrap_or(crate::oracle::DEFAULT_TOLERANCE);

    Ok(Resolved {
        spacetime,
        kasner,
        lapse,
        expect,
        grid,
        output_path: config.output.as_ref().and_then(|o| o.path.clone()),
        format: config
            .output
            .as_ref()
            .and_then(|o| o.format)
            .unwrap_or_default(),
        einstein_tolerance,
        oracle_tolerance,
    })
}

fn fiber_spec(
    dim: usize,
    lambda: Option<f64>,
    tau: Option<f64>,
    model: Option<FiberModel>,
    index: usize,
) -> Result<FiberSpec> {
    // fill constants from the model when not given explicitly
    let lambda = lambda.or(model.map(|m| m.einstein_lambda()));
    let tau = tau.or(model.map(|m| m.tau()));
    FiberSpec::new(dim, lambda, tau, model).map_err(|e| match e {
        Error::Validation(msg) => Error::Validation(format!("fiber {index}: {msg}")),
        other => other,
    })
}

/// Interior default grid: 128 points on a window 5% inside each finite end
/// of the interval (so finite-difference stencils stay in-domain).
pub fn default_grid(st: &WarpedSpacetime) -> Vec<f64> {
    let (lo, hi) = st.interval().finite_window();
    let pad = 0.05 * (hi - lo);
    crate::quad::linspace(lo + pad, hi - pad, DEFAULT_GRID_POINTS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_grid() {
        assert_eq!(parse_grid_spec("0.1:1.4:32").unwrap(), (0.1, 1.4, 32));
        assert!(parse_grid_spec("1:0:5").is_err());
        assert!(parse_grid_spec("0:1").is_err());
    }

    #[test]
    fn preset_btz_resolves() {
        let cfg = RunConfig {
            preset: Some("btz_static".into()),
            params: Some([("m".to_string(), 1.0), ("l".to_string(), 1.0)].into()),
            grid: Some(GridConfig {
                spec: "0.1:1.4:32".into(),
            }),
            ..Default::default()
        };
        let r = resolve(&cfg).unwrap();
        assert_eq!(r.grid.len(), 32);
        assert_eq!(r.expect.tau_constant, Some(-6.0));
        assert_eq!(r.expect.lambda, Some(-2.0));
        assert!(r.lapse.is_some());
    }

    #[test]
    fn spacetime_toml_round_trip() {
        let text = r#"
[spacetime]
interval = [0.1, 2.0]

[[spacetime.fiber]]
dim = 1
warp = { kind = "t" }

[[spacetime.fiber]]
dim = 2
model = { kind = "sphere2", radius = 1.0 }
warp = { kind = "power", base = { kind = "t" }, p = 2.0 }

[grid]
spec = "0.5:1.5:4"
"#;
        let cfg = RunConfig::from_toml(text).unwrap();
        let r = resolve(&cfg).unwrap();
        assert_eq!(r.spacetime.dimension(), 4);
        assert_eq!(r.grid.len(), 4);
        // model constants were filled in
        assert_eq!(r.spacetime.fibers()[1].spec.tau, Some(2.0));
    }

    #[test]
    fn exactly_one_subject_enforced() {
        let cfg = RunConfig::default();
        assert!(matches!(resolve(&cfg), Err(Error::Config(_))));
        let cfg = RunConfig {
            preset: Some("kasner".into()),
            lapse: Some(LapseConfig {
                n_squared: Expr::constant(1.0),
                anchor: 0.0,
                r_domain: [0.0, 1.0],
            }),
            ..Default::default()
        };
        assert!(matches!(resolve(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn malformed_toml_is_config_error() {
        assert!(matches!(
            RunConfig::from_toml("[[[["),
            Err(Error::Config(_))
        ));
        // unknown fields are rejected
        assert!(matches!(
            RunConfig::from_toml("unknown_key = 3"),
            Err(Error::Config(_))
        ));
    }
}
