//! Data model for multiply generalized Robertson-Walker space-times and
//! generalized Kasner space-times.
//!
//! All fiber geometry enters the curvature conditions only through the
//! constants `lambda_F` (Einstein constant) and `tau_F` (scalar curvature),
//! so fibers are stored as dimension-plus-constants. A fiber may optionally
//! name a concrete model metric (flat space, circle, round spheres) which
//! the finite-difference oracle uses to realize an actual coordinate chart.

use crate::error::{Error, Result};
use crate::jet::ScalarJet;
use crate::warp::{Expr, Interval, WarpFn};
use serde::{Deserialize, Serialize};

/// Structural tolerance for checking stored constants against model values.
const CONST_EPS: f64 = 1e-12;

/// Number of sample points used by the positivity check.
const POSITIVITY_SAMPLES: usize = 1024;

/// Concrete fiber metrics available to the numerical oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FiberModel {
    /// Flat Euclidean space of the given dimension.
    Flat { dim: usize },
    /// Unit circle (one-dimensional, flat).
    Circle,
    /// Round 2-sphere of the given radius.
    Sphere2 { radius: f64 },
    /// Round 3-sphere of the given radius.
    Sphere3 { radius: f64 },
}

impl FiberModel {
    pub fn dim(&self) -> usize {
        match self {
            FiberModel::Flat { dim } => *dim,
            FiberModel::Circle => 1,
            FiberModel::Sphere2 { .. } => 2,
            FiberModel::Sphere3 { .. } => 3,
        }
    }

    /// Einstein constant: a space of constant sectional curvature k is
    /// Einstein with lambda = k (n - 1).
    pub fn einstein_lambda(&self) -> f64 {
        match self {
            FiberModel::Flat { .. } | FiberModel::Circle => 0.0,
            FiberModel::Sphere2 { radius } => 1.0 / (radius * radius),
            FiberModel::Sphere3 { radius } => 2.0 / (radius * radius),
        }
    }

    /// Scalar curvature: n (n - 1) k.
    pub fn tau(&self) -> f64 {
        match self {
            FiberModel::Flat { .. } | FiberModel::Circle => 0.0,
            FiberModel::Sphere2 { radius } => 2.0 / (radius * radius),
            FiberModel::Sphere3 { radius } => 6.0 / (radius * radius),
        }
    }
}

/// Dimension and curvature constants of one fiber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    pub dim: usize,
    /// Einstein constant of the fiber, when the fiber is Einstein.
    pub einstein_lambda: Option<f64>,
    /// Constant scalar curvature of the fiber.
    pub tau: Option<f64>,
    /// Optional concrete metric for the oracle.
    pub model: Option<FiberModel>,
}

impl FiberSpec {
    pub fn new(
        dim: usize,
        einstein_lambda: Option<f64>,
        tau: Option<f64>,
        model: Option<FiberModel>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("fiber dimension must be >= 1".into()));
        }
        // one-dimensional fibers are flat: both constants vanish
        if dim == 1 {
            if let Some(l) = einstein_lambda {
                if l != 0.0 {
                    return Err(Error::Validation(format!(
                        "dim-1 fiber must have lambda_F = 0, got {l}"
                    )));
                }
            }
            if let Some(t) = tau {
                if t != 0.0 {
                    return Err(Error::Validation(format!(
                        "dim-1 fiber must have tau_F = 0, got {t}"
                    )));
                }
            }
        }
        // Einstein trace identity tau_F = dim * lambda_F
        if let (Some(l), Some(t)) = (einstein_lambda, tau) {
            if (t - dim as f64 * l).abs() > CONST_EPS * (1.0 + t.abs() + l.abs()) {
                return Err(Error::Validation(format!(
                    "tau_F = {t} violates trace identity dim*lambda_F = {}",
                    dim as f64 * l
                )));
            }
        }
        if let Some(m) = &model {
            if m.dim() != dim {
                return Err(Error::Validation(format!(
                    "model dimension {} does not match fiber dimension {dim}",
                    m.dim()
                )));
            }
            if let Some(l) = einstein_lambda {
                if (l - m.einstein_lambda()).abs() > CONST_EPS * (1.0 + l.abs()) {
                    return Err(Error::Validation(format!(
                        "lambda_F = {l} does not match model value {}",
                        m.einstein_lambda()
                    )));
                }
            }
            if let Some(t) = tau {
                if (t - m.tau()).abs() > CONST_EPS * (1.0 + t.abs()) {
                    return Err(Error::Validation(format!(
                        "tau_F = {t} does not match model value {}",
                        m.tau()
                    )));
                }
            }
        }
        Ok(FiberSpec {
            dim,
            einstein_lambda,
            tau,
            model,
        })
    }

    /// Flat fiber of the given dimension, with a flat model attached.
    pub fn flat(dim: usize) -> Self {
        FiberSpec {
            dim,
            einstein_lambda: Some(0.0),
            tau: Some(0.0),
            model: Some(FiberModel::Flat { dim }),
        }
    }

    /// Fiber carrying the constants of a concrete model metric.
    pub fn from_model(model: FiberModel) -> Self {
        FiberSpec {
            dim: model.dim(),
            einstein_lambda: Some(model.einstein_lambda()),
            tau: Some(model.tau()),
            model: Some(model),
        }
    }

    /// Einstein fiber without a model; tau follows from the trace identity.
    pub fn einstein(dim: usize, lambda: f64) -> Result<Self> {
        FiberSpec::new(dim, Some(lambda), Some(dim as f64 * lambda), None)
    }

    pub fn require_lambda(&self, index: usize) -> Result<f64> {
        self.einstein_lambda.ok_or_else(|| {
            Error::MissingData(format!("fiber {index} has no Einstein constant lambda_F"))
        })
    }

    pub fn require_tau(&self, index: usize) -> Result<f64> {
        self.tau.ok_or_else(|| {
            Error::MissingData(format!("fiber {index} has no scalar curvature tau_F"))
        })
    }
}

/// One fiber together with its warping function.
#[derive(Debug, Clone)]
pub struct Fiber {
    pub spec: FiberSpec,
    pub warp: WarpFn,
}

/// Interval base `(t1, t2)` with metric `-dt^2`, plus warped fibers.
#[derive(Debug, Clone)]
pub struct WarpedSpacetime {
    interval: Interval,
    fibers: Vec<Fiber>,
}

impl WarpedSpacetime {
    /// Validate and build. Warp positivity is sampled on a 1024-point grid
    /// of the (finite part of the) interval; this is a sampling check, not
    /// a proof.
    pub fn new(interval: Interval, fibers: Vec<(FiberSpec, WarpFn)>) -> Result<Self> {
        if fibers.is_empty() {
            return Err(Error::Validation("need at least one fiber".into()));
        }
        for (i, (_, warp)) in fibers.iter().enumerate() {
            if !warp.domain().contains_interval(&interval) {
                return Err(Error::Validation(format!(
                    "warp {i} domain ({}, {}) does not cover the interval ({}, {})",
                    warp.domain().lo,
                    warp.domain().hi,
                    interval.lo,
                    interval.hi
                )));
            }
            for t in interval.grid(POSITIVITY_SAMPLES) {
                let jet = warp.jet(t).map_err(|e| match e {
                    Error::Domain { t, reason } => Error::Validation(format!(
                        "fiber {i}: warp undefined at t = {t}: {reason}"
                    )),
                    other => other,
                })?;
                if jet.value <= 0.0 {
                    return Err(Error::Positivity {
                        t,
                        value: jet.value,
                        context: format!("fiber {i} warp"),
                    });
                }
            }
        }
        Ok(WarpedSpacetime {
            interval,
            fibers: fibers
                .into_iter()
                .map(|(spec, warp)| Fiber { spec, warp })
                .collect(),
        })
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn fibers(&self) -> &[Fiber] {
        &self.fibers
    }

    /// Total dimension `n = 1 + sum s_i`.
    pub fn dimension(&self) -> usize {
        1 + self.fibers.iter().map(|f| f.spec.dim).sum::<usize>()
    }

    /// Jets of all warps at `t`, positivity-checked.
    pub fn warp_jets(&self, t: f64) -> Result<Vec<ScalarJet>> {
        if !self.interval.contains(t) {
            return Err(Error::Domain {
                t,
                reason: format!(
                    "outside space-time interval ({}, {})",
                    self.interval.lo, self.interval.hi
                ),
            });
        }
        self.fibers.iter().map(|f| f.warp.warp_jet(t)).collect()
    }
}

/// Generalized Kasner space-time: a single conformal factor `phi` warped
/// into each fiber with exponent `p_i`.
#[derive(Debug, Clone)]
pub struct KasnerSpec {
    pub phi: WarpFn,
    pub exponents: Vec<f64>,
    pub fibers: Vec<FiberSpec>,
    pub interval: Interval,
    /// `zeta = sum s_l p_l`.
    pub zeta: f64,
    /// `eta = sum s_l p_l^2`.
    pub eta: f64,
    /// `S = sum s_l`.
    pub total_fiber_dim: usize,
}

impl KasnerSpec {
    pub fn new(phi: WarpFn, exponents: Vec<f64>, fibers: Vec<FiberSpec>) -> Result<Self> {
        if exponents.len() != fibers.len() {
            return Err(Error::LengthMismatch(format!(
                "{} exponents vs {} fibers",
                exponents.len(),
                fibers.len()
            )));
        }
        if fibers.is_empty() {
            return Err(Error::Validation("need at least one fiber".into()));
        }
        let dims: Vec<usize> = fibers.iter().map(|f| f.dim).collect();
        let (zeta, eta, total) = crate::kasner::kasner_parameters(&dims, &exponents)?;
        let interval = phi.domain();
        // phi positive on the interval (sampled)
        for t in interval.grid(POSITIVITY_SAMPLES) {
            let v = phi.jet(t)?.value;
            if v <= 0.0 {
                return Err(Error::Positivity {
                    t,
                    value: v,
                    context: "conformal factor phi".into(),
                });
            }
        }
        Ok(KasnerSpec {
            phi,
            exponents,
            fibers,
            interval,
            zeta,
            eta,
            total_fiber_dim: total,
        })
    }

    pub fn fiber_dims(&self) -> Vec<usize> {
        self.fibers.iter().map(|f| f.dim).collect()
    }

    /// Jet of `phi^p` at `t`.
    pub fn warp_jet(&self, index: usize, t: f64) -> Result<ScalarJet> {
        let phi = self.phi.warp_jet(t)?;
        phi.powf(self.exponents[index])
    }
}

/// Expand a Kasner space-time into the general warped model with warps
/// `phi^{p_i}`. Curvature computed on the result must agree with the
/// Kasner-specific formulas.
pub fn kasner_to_mgrw(k: &KasnerSpec) -> Result<WarpedSpacetime> {
    let fibers = k
        .fibers
        .iter()
        .zip(&k.exponents)
        .map(|(spec, &p)| {
            let expr = Expr::Power {
                base: Box::new(k.phi.expr().clone()),
                p,
            };
            (spec.clone(), WarpFn::new(expr, k.interval))
        })
        .collect();
    WarpedSpacetime::new(k.interval, fibers)
}

/// The classical Kasner space-time with the unique equal-pair exponents
/// `p = (-1/3, 2/3, 2/3)` and `phi(t) = t` on `(0, inf)`; Ricci-flat.
pub fn classical_kasner() -> KasnerSpec {
    kasner_preset(&[-1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]).expect("classical exponents are valid")
}

/// Kasner space-time with given exponents, `phi(t) = t` on `(0, inf)` and
/// flat one-dimensional fibers.
pub fn kasner_preset(exponents: &[f64]) -> Result<KasnerSpec> {
    let interval = Interval::new(0.0, f64::INFINITY)?;
    let phi = WarpFn::new(Expr::t(), interval);
    let fibers = exponents.iter().map(|_| FiberSpec::flat(1)).collect();
    KasnerSpec::new(phi, exponents.to_vec(), fibers)
}
