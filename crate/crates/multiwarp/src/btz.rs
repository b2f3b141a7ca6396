//! Lapse-function machinery for static (2+1) black-hole interiors.
//!
//! A static line element `-N^{-2} dr^2 + N^2 dt^2 + r^2 dphi^2` with square
//! lapse `N^2(r) > 0` becomes a multiply generalized Robertson-Walker
//! space-time under the transform
//!
//! ```text
//! t = F(r) = int_a^r dmu / N(mu),    b1 = N(F^{-1}),    b2 = F^{-1}.
//! ```
//!
//! `F` is computed by adaptive quadrature, its inverse by monotone
//! root-finding, and the derived warps expose exact jets through the chain
//! identities `b2' = b1`, `b2'' = N'(b2) b1`, `b1'' = N''(b2) b1^2 +
//! (N'(b2))^2 b1`. The scalar curvature of the transformed metric is the
//! lapse operator `tau = (N^2)''(r) + 2 (N^2)'(r)/r`, which yields closed
//! characterizations of the Einstein and constant-scalar-curvature
//! families. The interior Schwarzschild and static BTZ presets live here.

use crate::error::{Error, Result};
use crate::quad::{integrate, least_squares, linspace};
use crate::spacetime::{FiberModel, FiberSpec, WarpedSpacetime};
use crate::warp::{Expr, Interval, JetSource, WarpFn};
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Absolute quadrature tolerance for the F-transform.
const QUAD_TOL: f64 = 1e-13;
/// Margin kept from a horizon (a zero of `N^2`) when tabulating.
const HORIZON_MARGIN: f64 = 1e-9;
/// Number of cumulative tabulation nodes for F.
const TABLE_NODES: usize = 513;
/// Verdict tolerance for the family fits, scaled by `max |N^2|`.
const FIT_TOL: f64 = 1e-8;
/// Grid size used by the least-squares family fits.
const FIT_GRID: usize = 64;

/// A square lapse function on an `r`-interval, with the anchor of the
/// `F`-integral and any named constants it was built from.
#[derive(Debug, Clone)]
pub struct LapseSpec {
    pub n_squared: WarpFn,
    pub anchor: f64,
    pub r_domain: Interval,
    pub params: BTreeMap<String, f64>,
}

impl LapseSpec {
    /// Validate that `N^2 > 0` on the interior of `r_domain` (sampled).
    pub fn new(n_squared: Expr, anchor: f64, r_domain: Interval) -> Result<Self> {
        let warp = WarpFn::new(n_squared, r_domain);
        for r in r_domain.grid(512) {
            let v = warp.jet(r)?.value;
            if v <= 0.0 {
                return Err(Error::NonInvertible(format!(
                    "N^2({r}) = {v} <= 0 inside the r-domain"
                )));
            }
        }
        if !(anchor >= r_domain.lo && anchor <= r_domain.hi) {
            return Err(Error::Validation(format!(
                "anchor {anchor} outside the closed r-domain"
            )));
        }
        Ok(LapseSpec {
            n_squared: warp,
            anchor,
            r_domain,
            params: BTreeMap::new(),
        })
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    fn n2_jet(&self, r: f64) -> Result<crate::jet::ScalarJet> {
        self.n_squared.expr().jet(r)
    }

    fn n_value(&self, r: f64) -> Result<f64> {
        let v = self.n2_jet(r)?.value;
        if v <= 0.0 {
            return Err(Error::NonInvertible(format!("N^2({r}) = {v} <= 0")));
        }
        Ok(v.sqrt())
    }

    /// Whether `N^2` vanishes (a horizon) at the given endpoint.
    fn endpoint_singular(&self, r: f64) -> bool {
        match self.n2_jet(r) {
            Ok(j) => j.value <= 1e-7 * (1.0 + j.value.abs()),
            Err(_) => true,
        }
    }
}

/// Cumulative table for `F(r) = int_a^r dmu/N(mu)` with monotone inversion.
#[derive(Debug)]
pub struct FMap {
    spec: LapseSpec,
    nodes_r: Vec<f64>,
    nodes_t: Vec<f64>,
    t_lo: f64,
    t_hi: f64,
    lo_singular: bool,
    hi_singular: bool,
}

impl FMap {
    fn build(spec: &LapseSpec) -> Result<Arc<FMap>> {
        let (r_lo, r_hi) = (spec.r_domain.lo, spec.r_domain.hi);
        if !(r_lo.is_finite() && r_hi.is_finite()) {
            return Err(Error::Validation(
                "lapse transform needs a finite r-domain".into(),
            ));
        }
        let lo_singular = spec.endpoint_singular(r_lo);
        let hi_singular = spec.endpoint_singular(r_hi);
        // tabulated nodes stand further off a degenerate endpoint so the raw
        // integrand stays mild; the outer zones are covered exactly by the
        // substituted tail integrals
        let width = r_hi - r_lo;
        let lo_off = if lo_singular { 1e-3 } else { HORIZON_MARGIN };
        let hi_off = if hi_singular { 1e-3 } else { HORIZON_MARGIN };
        let a = r_lo + lo_off * width;
        let b = r_hi - hi_off * width;
        let nodes_r = linspace(a, b, TABLE_NODES);

        let inv_n = |r: f64| -> Result<f64> { Ok(1.0 / spec.n_value(r)?) };

        // distances to the true endpoints, via sqrt substitution at
        // degenerate ends
        let head = if lo_singular {
            Self::singular_tail(spec, nodes_r[0], r_lo)?
        } else {
            integrate(&inv_n, r_lo, nodes_r[0], QUAD_TOL)?
        };
        let tail = if hi_singular {
            Self::singular_tail(spec, *nodes_r.last().unwrap(), r_hi)?
        } else {
            integrate(&inv_n, *nodes_r.last().unwrap(), r_hi, QUAD_TOL)?
        };

        // cumulative integral from the anchor to the first node (signed,
        // the anchor may sit anywhere in the closed domain)
        let f0 = if spec.anchor <= r_lo + f64::EPSILON * width {
            head
        } else {
            integrate(&inv_n, spec.anchor, nodes_r[0], QUAD_TOL)?
        };
        let mut nodes_t = Vec::with_capacity(TABLE_NODES);
        nodes_t.push(f0);
        for w in nodes_r.windows(2) {
            let panel = integrate(&inv_n, w[0], w[1], QUAD_TOL)?;
            let last = *nodes_t.last().unwrap();
            nodes_t.push(last + panel);
        }

        let t_lo = nodes_t[0] - head;
        let t_hi = nodes_t.last().unwrap() + tail;

        Ok(Arc::new(FMap {
            spec: spec.clone(),
            nodes_r,
            nodes_t,
            t_lo,
            t_hi,
            lo_singular,
            hi_singular,
        }))
    }

    /// Magnitude of `int dr/N` between `from` and the endpoint `to`, where
    /// `N^2` degenerates at `to` (a simple zero, or a blow-up like `2m/r`).
    /// Substituting `w = sqrt(|to - r|)` removes the `1/sqrt` endpoint
    /// singularity: `dr/N = 2 w dw / N(to -+ w^2)`. Below the resolution
    /// where `to -+ w^2` rounds onto `to` itself the integrand is replaced
    /// by its (finite) limiting value.
    fn singular_tail(spec: &LapseSpec, from: f64, to: f64) -> Result<f64> {
        let width = (to - from).abs();
        let sign = (to - from).signum();
        let w_max = width.sqrt();
        let w_floor = (f64::EPSILON * (to.abs() + width)).sqrt().max(1e-150);
        let w_probe = (4.0 * w_floor).min(0.5 * w_max).max(w_floor);
        let limit = {
            let r = to - sign * w_probe * w_probe;
            2.0 * w_probe / spec.n_value(r)?
        };
        let g = |w: f64| -> Result<f64> {
            if w <= w_probe {
                return Ok(limit);
            }
            let r = to - sign * w * w;
            match spec.n_value(r) {
                Ok(n) => Ok(2.0 * w / n),
                Err(_) => Ok(limit),
            }
        };
        integrate(&g, 0.0, w_max, QUAD_TOL)
    }

    /// `F(r)` for `r` in the open r-domain. Past the tabulated range the
    /// value is taken from the endpoint limit through the substituted
    /// (smooth) tail integral, which keeps near-horizon evaluation cheap.
    pub fn f(&self, r: f64) -> Result<f64> {
        if !self.spec.r_domain.contains(r) {
            return Err(Error::Domain {
                t: r,
                reason: "outside the r-domain".into(),
            });
        }
        let inv_n = |x: f64| -> Result<f64> { Ok(1.0 / self.spec.n_value(x)?) };
        let first = self.nodes_r[0];
        let last = *self.nodes_r.last().unwrap();
        if r <= first {
            if self.lo_singular {
                return Ok(self.t_lo + Self::singular_tail(&self.spec, r, self.spec.r_domain.lo)?);
            }
            return Ok(self.nodes_t[0] - integrate(&inv_n, r, first, QUAD_TOL)?);
        }
        if r >= last {
            if self.hi_singular {
                return Ok(self.t_hi - Self::singular_tail(&self.spec, r, self.spec.r_domain.hi)?);
            }
            return Ok(self.nodes_t.last().unwrap() + integrate(&inv_n, last, r, QUAD_TOL)?);
        }
        let j = match self
            .nodes_r
            .binary_search_by(|probe| probe.total_cmp(&r))
        {
            Ok(j) => return Ok(self.nodes_t[j]),
            Err(j) => j - 1,
        };
        Ok(self.nodes_t[j] + integrate(&inv_n, self.nodes_r[j], r, QUAD_TOL)?)
    }

    /// Limit of `F` at the upper end of the r-domain (improper when the
    /// endpoint is a horizon).
    pub fn f_limit_hi(&self) -> f64 {
        self.t_hi
    }

    pub fn f_limit_lo(&self) -> f64 {
        self.t_lo
    }

    /// Image interval `F(r_domain)`.
    pub fn t_domain(&self) -> Result<Interval> {
        Interval::new(self.t_lo, self.t_hi)
    }

    /// `F^{-1}(t)` by bracketed Newton iteration on the monotone table,
    /// seeded by linear interpolation between tabulated nodes.
    pub fn inverse(&self, t: f64) -> Result<f64> {
        if !(t > self.t_lo && t < self.t_hi) {
            return Err(Error::Domain {
                t,
                reason: format!("outside the image interval ({}, {})", self.t_lo, self.t_hi),
            });
        }
        let (r_lo, r_hi) = (self.spec.r_domain.lo, self.spec.r_domain.hi);
        let width = r_hi - r_lo;
        let (mut lo, mut hi, mut r) = match self
            .nodes_t
            .binary_search_by(|probe| probe.total_cmp(&t))
        {
            Ok(j) => return Ok(self.nodes_r[j]),
            Err(0) => {
                let hi = self.nodes_r[0];
                (r_lo + 1e-15 * width, hi, r_lo + 0.5 * (hi - r_lo))
            }
            Err(j) if j >= self.nodes_t.len() => {
                let lo = *self.nodes_r.last().unwrap();
                // near a horizon t ~ t_hi - 2 sqrt(r_hi - r)/|N^2'|^(1/2):
                // fall back to the bracket midpoint, Newton corrects fast
                (lo, r_hi - 1e-15 * width, lo + 0.5 * (r_hi - lo))
            }
            Err(j) => {
                let (t0, t1) = (self.nodes_t[j - 1], self.nodes_t[j]);
                let (a, b) = (self.nodes_r[j - 1], self.nodes_r[j]);
                (a, b, a + (t - t0) / (t1 - t0) * (b - a))
            }
        };
        for _ in 0..80 {
            let ft = self.f(r)? - t;
            if ft.abs() <= 1e-14 * (1.0 + t.abs()) {
                return Ok(r);
            }
            if ft > 0.0 {
                hi = r;
            } else {
                lo = r;
            }
            // Newton step using F' = 1/N, clamped to the bracket
            let step = ft * self.spec.n_value(r)?;
            let mut next = r - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - r).abs() <= 1e-16 * (1.0 + r.abs()) {
                return Ok(next);
            }
            r = next;
        }
        Ok(r)
    }
}

/// Jet source for `b2 = F^{-1}`: value `r`, then `b2' = N(r)` and
/// `b2'' = N'(r) N(r)` from the inverse-function identities.
struct InverseLapse {
    map: Arc<FMap>,
    n_expr: Expr,
}

impl JetSource for InverseLapse {
    fn jet(&self, t: f64) -> Result<crate::jet::ScalarJet> {
        let r = self.map.inverse(t)?;
        let n = self.n_expr.jet(r)?;
        Ok(crate::jet::ScalarJet::new(r, n.value, n.d1 * n.value))
    }
}

/// The two warps derived from a lapse, on the image interval.
#[derive(Debug, Clone)]
pub struct DerivedWarps {
    /// `b1 = N(F^{-1})`.
    pub b1: WarpFn,
    /// `b2 = F^{-1}`.
    pub b2: WarpFn,
    pub t_domain: Interval,
    map: Arc<FMap>,
}

impl DerivedWarps {
    pub fn f(&self, r: f64) -> Result<f64> {
        self.map.f(r)
    }

    pub fn f_limit_hi(&self) -> f64 {
        self.map.f_limit_hi()
    }

    pub fn inverse(&self, t: f64) -> Result<f64> {
        self.map.inverse(t)
    }
}

/// Build `b1`, `b2` from the lapse by quadrature and inversion.
pub fn lapse_to_warps(spec: &LapseSpec) -> Result<DerivedWarps> {
    let map = FMap::build(spec)?;
    let t_domain = map.t_domain()?;
    let n_expr = Expr::Sqrt {
        arg: Box::new(spec.n_squared.expr().clone()),
    };
    let b2_expr = Expr::opaque(
        "inverse_lapse_transform",
        Arc::new(InverseLapse {
            map: Arc::clone(&map),
            n_expr: n_expr.clone(),
        }),
    );
    let b1_expr = Expr::compose(n_expr, b2_expr.clone());
    Ok(DerivedWarps {
        b1: WarpFn::new(b1_expr, t_domain),
        b2: WarpFn::new(b2_expr, t_domain),
        t_domain,
        map,
    })
}

/// Scalar curvature of the transformed metric as an operator in the square
/// lapse: `tau(r) = (N^2)''(r) + 2 (N^2)'(r) / r`.
pub fn tau_of_lapse(spec: &LapseSpec, r: f64) -> Result<f64> {
    if !spec.r_domain.contains(r) {
        return Err(Error::Domain {
            t: r,
            reason: "outside the r-domain".into(),
        });
    }
    if r == 0.0 {
        return Err(Error::Domain {
            t: r,
            reason: "lapse curvature operator undefined at r = 0".into(),
        });
    }
    let j = spec.n2_jet(r)?;
    Ok(j.d2 + 2.0 * j.d1 / r)
}

/// Result of fitting the Einstein lapse family `N^2 = (lambda/2) r^2 + c2`.
#[derive(Debug, Clone, Serialize)]
pub struct EinsteinLapseFit {
    pub lambda: f64,
    pub c2: f64,
    /// Max `|N^2 - fit|` over the grid.
    pub fit_residual: f64,
    /// Max residual of `(N^2)'' + (N^2)'/r - 2 lambda` over the grid.
    pub residual_second_order: f64,
    /// Max residual of `(N^2)'/r - lambda` over the grid.
    pub residual_first_order: f64,
}

fn fit_grid(spec: &LapseSpec) -> Vec<f64> {
    let (lo, hi) = spec.r_domain.finite_window();
    let pad = 0.02 * (hi - lo);
    linspace(lo + pad, hi - pad, FIT_GRID)
}

/// Decide membership in the Einstein lapse family. Returns the fitted
/// `(lambda, c2)` when both the least-squares residual and the two
/// first-principles system residuals vanish within tolerance, else `None`.
pub fn is_einstein_lapse(spec: &LapseSpec, grid: &[f64]) -> Result<Option<EinsteinLapseFit>> {
    let grid = if grid.is_empty() {
        fit_grid(spec)
    } else {
        grid.to_vec()
    };
    let mut rows = Vec::with_capacity(grid.len());
    let mut y = Vec::with_capacity(grid.len());
    for &r in &grid {
        rows.push(vec![0.5 * r * r, 1.0]);
        y.push(spec.n2_jet(r)?.value);
    }
    let coeffs = least_squares(&rows, &y)?;
    let (lambda, c2) = (coeffs[0], coeffs[1]);
    let mut fit_residual = 0.0f64;
    let mut res2 = 0.0f64;
    let mut res1 = 0.0f64;
    let mut scale = 0.0f64;
    for (&r, &n2) in grid.iter().zip(&y) {
        scale = scale.max(n2.abs());
        fit_residual = fit_residual.max((n2 - 0.5 * lambda * r * r - c2).abs());
        let j = spec.n2_jet(r)?;
        res2 = res2.max((j.d2 + j.d1 / r - 2.0 * lambda).abs());
        res1 = res1.max((j.d1 / r - lambda).abs());
    }
    let fit = EinsteinLapseFit {
        lambda,
        c2,
        fit_residual,
        residual_second_order: res2,
        residual_first_order: res1,
    };
    let tol = FIT_TOL * (1.0 + scale);
    if fit_residual <= tol && res2 <= tol && res1 <= tol {
        Ok(Some(fit))
    } else {
        Ok(None)
    }
}

/// Result of the constant-scalar-curvature decision together with the fit
/// of the three-parameter family `N^2 = -c1/r + (lambda/6) r^2 + c2`.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantTauFit {
    pub tau: f64,
    pub c1: f64,
    pub lambda: f64,
    pub c2: f64,
    pub fit_residual: f64,
}

/// Decide constancy of the lapse curvature operator over the grid; on
/// success also fit the closed family (whose parameter `lambda` must equal
/// the constant `tau`).
pub fn constant_tau_lapse(spec: &LapseSpec, grid: &[f64]) -> Result<Option<ConstantTauFit>> {
    let grid = if grid.is_empty() {
        fit_grid(spec)
    } else {
        grid.to_vec()
    };
    let mut taus = Vec::with_capacity(grid.len());
    for &r in &grid {
        taus.push(tau_of_lapse(spec, r)?);
    }
    let max_abs = taus.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = taus.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = taus.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max - min > FIT_TOL * (1.0 + max_abs) {
        return Ok(None);
    }
    let tau = crate::quad::pairwise_mean(&taus);
    let mut rows = Vec::with_capacity(grid.len());
    let mut y = Vec::with_capacity(grid.len());
    for &r in &grid {
        rows.push(vec![-1.0 / r, r * r / 6.0, 1.0]);
        y.push(spec.n2_jet(r)?.value);
    }
    let coeffs = least_squares(&rows, &y)?;
    let mut fit_residual = 0.0f64;
    for (row, &n2) in rows.iter().zip(&y) {
        let fitted: f64 = row.iter().zip(&coeffs).map(|(a, c)| a * c).sum();
        fit_residual = fit_residual.max((n2 - fitted).abs());
    }
    Ok(Some(ConstantTauFit {
        tau,
        c1: coeffs[0],
        lambda: coeffs[1],
        c2: coeffs[2],
        fit_residual,
    }))
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

/// Interior Schwarzschild solution of mass `m`: `N^2 = 2m/r - 1` on
/// `(0, 2m)`, fibers `R x S^2(1)` with warps `b1 = sqrt(2m/F^{-1} - 1)`,
/// `b2 = F^{-1}`. Ricci-flat.
#[derive(Debug, Clone)]
pub struct SchwarzschildPreset {
    pub mass: f64,
    pub lapse: LapseSpec,
}

pub fn schwarzschild_interior(mass: f64) -> Result<SchwarzschildPreset> {
    if mass <= 0.0 {
        return Err(Error::Validation("mass must be positive".into()));
    }
    let n2 = Expr::quotient(Expr::constant(2.0 * mass), Expr::t()).add_const(-1.0);
    let lapse = LapseSpec::new(n2, 0.0, Interval::new(0.0, 2.0 * mass)?)?
        .with_param("m", mass);
    Ok(SchwarzschildPreset { mass, lapse })
}

impl SchwarzschildPreset {
    /// Closed form of the transform:
    /// `F(r) = 2m arccos(sqrt((2m - r)/(2m))) - sqrt(r (2m - r))`.
    pub fn f_closed(&self, r: f64) -> f64 {
        let m = self.mass;
        2.0 * m * ((2.0 * m - r) / (2.0 * m)).sqrt().acos() - (r * (2.0 * m - r)).sqrt()
    }

    /// `lim_{r -> 2m} F(r) = m pi`.
    pub fn horizon_t(&self) -> f64 {
        self.mass * std::f64::consts::PI
    }

    pub fn derived(&self) -> Result<DerivedWarps> {
        lapse_to_warps(&self.lapse)
    }

    pub fn spacetime(&self) -> Result<WarpedSpacetime> {
        let warps = self.derived()?;
        WarpedSpacetime::new(
            warps.t_domain,
            vec![
                (FiberSpec::flat(1), warps.b1),
                (
                    FiberSpec::from_model(FiberModel::Sphere2 { radius: 1.0 }),
                    warps.b2,
                ),
            ],
        )
    }
}

/// Static BTZ black-hole interior: `N^2 = m - r^2/l^2` on `(0, l sqrt(m))`.
/// In warped form the metric is `(1+1+1)`-dimensional with closed warps
/// `b1 = sqrt(m) cos(t/l)`, `b2 = l sqrt(m) sin(t/l)` on `(0, l pi/2)`;
/// Einstein with `lambda = -2/l^2` and `tau = -6/l^2`.
#[derive(Debug, Clone)]
pub struct BtzPreset {
    pub mass: f64,
    pub l: f64,
    pub lapse: LapseSpec,
}

pub fn btz_static(mass: f64, l: f64) -> Result<BtzPreset> {
    if mass <= 0.0 || l <= 0.0 {
        return Err(Error::Validation("mass and l must be positive".into()));
    }
    let n2 = Expr::sum(vec![
        Expr::constant(mass),
        Expr::t().power(2.0).scale(-1.0 / (l * l)),
    ]);
    let lapse = LapseSpec::new(n2, 0.0, Interval::new(0.0, l * mass.sqrt())?)?
        .with_param("m", mass)
        .with_param("l", l);
    Ok(BtzPreset { mass, l, lapse })
}

impl BtzPreset {
    pub fn horizon_r(&self) -> f64 {
        self.l * self.mass.sqrt()
    }

    /// Closed form `F(r) = l arcsin(r / r_H)`.
    pub fn f_closed(&self, r: f64) -> f64 {
        self.l * (r / self.horizon_r()).asin()
    }

    /// Image interval `(0, l pi/2)`.
    pub fn t_domain(&self) -> Interval {
        Interval::new(0.0, self.l * std::f64::consts::FRAC_PI_2).unwrap()
    }

    pub fn derived(&self) -> Result<DerivedWarps> {
        lapse_to_warps(&self.lapse)
    }

    /// The warped space-time with the closed-form warps (cross-checked
    /// against the quadrature path in tests).
    pub fn spacetime(&self) -> Result<WarpedSpacetime> {
        let t_domain = self.t_domain();
        let b1 = Expr::affine(1.0 / self.l, 0.0).cos().scale(self.mass.sqrt());
        let b2 = Expr::affine(1.0 / self.l, 0.0)
            .sin()
            .scale(self.l * self.mass.sqrt());
        WarpedSpacetime::new(
            t_domain,
            vec![
                (FiberSpec::flat(1), WarpFn::new(b1, t_domain)),
                (
                    FiberSpec::from_model(FiberModel::Circle),
                    WarpFn::new(b2, t_domain),
                ),
            ],
        )
    }

    pub fn expected_lambda(&self) -> f64 {
        -2.0 / (self.l * self.l)
    }

    pub fn expected_tau(&self) -> f64 {
        -6.0 / (self.l * self.l)
    }
}
