//! Independent ground truth: assemble the raw coordinate metric of a warped
//! space-time with model fibers, run the standard Levi-Civita pipeline
//! (Christoffel symbols, Riemann, Ricci, scalar) with central finite
//! differences, and compare against the closed-form engine.
//!
//! Nothing here reuses the jet machinery: the metric is sampled by value
//! only, so agreement with the closed forms is a genuine two-path check.

use crate::curvature;
use crate::error::{Error, Result};
use crate::spacetime::{FiberModel, WarpedSpacetime};
use nalgebra::DMatrix;
use serde::Serialize;

/// Default finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Default comparison tolerance (relative, with unit floor).
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Pole-avoidance margin for spherical coordinates.
const POLE_MARGIN: f64 = 0.05;

/// A coordinate chart for the full warped metric: `t` first, then the
/// coordinates of each model fiber in order.
pub struct CoordinateChart {
    st: WarpedSpacetime,
    models: Vec<FiberModel>,
    /// Offset of each fiber's first coordinate in the chart.
    offsets: Vec<usize>,
    pub dimension: usize,
    pub labels: Vec<String>,
}

impl CoordinateChart {
    /// Metric matrix at a chart point. Block diagonal: `-1` for `t`, then
    /// `b_i(t)^2` times the model fiber metric.
    pub fn metric(&self, point: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dimension;
        let t = point[0];
        let mut g = DMatrix::zeros(n, n);
        g[(0, 0)] = -1.0;
        for (fiber_idx, model) in self.models.iter().enumerate() {
            let b = self.st.fibers()[fiber_idx].warp.value(t)?;
            let off = self.offsets[fiber_idx];
            let coords = &point[off..off + model.dim()];
            let block = model_metric(model, coords);
            for a in 0..model.dim() {
                for c in 0..model.dim() {
                    g[(off + a, off + c)] = b * b * block[(a, c)];
                }
            }
        }
        Ok(g)
    }

    /// A generic evaluation point over `t`: spherical coordinates sit away
    /// from their poles, flat coordinates at small nonzero values.
    pub fn base_point(&self, t: f64) -> Vec<f64> {
        let mut point = vec![t];
        for model in &self.models {
            match model {
                FiberModel::Flat { dim } => {
                    for j in 0..*dim {
                        point.push(0.1 + 0.05 * j as f64);
                    }
                }
                FiberModel::Circle => point.push(0.4),
                FiberModel::Sphere2 { .. } => {
                    point.push(std::f64::consts::FRAC_PI_3);
                    point.push(0.7);
                }
                FiberModel::Sphere3 { .. } => {
                    point.push(1.2);
                    point.push(1.0);
                    point.push(0.8);
                }
            }
        }
        point
    }

    /// Chart coordinate index of the first coordinate of fiber `i`.
    pub fn fiber_offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    /// Model fiber metric entry `g_F[(a, a)]` at the base point, used to
    /// normalize closed-form fiber comparisons.
    fn fiber_metric_diag(&self, i: usize, point: &[f64]) -> f64 {
        let model = &self.models[i];
        let off = self.offsets[i];
        model_metric(model, &point[off..off + model.dim()])[(0, 0)]
    }

    /// Check the `(-,+,...,+)` signature at a sample point.
    pub fn signature_ok(&self, point: &[f64]) -> Result<bool> {
        let g = self.metric(point)?;
        let eig = nalgebra::SymmetricEigen::new(g);
        let negatives = eig.eigenvalues.iter().filter(|&&l| l < 0.0).count();
        let zeros = eig.eigenvalues.iter().filter(|&&l| l.abs() < 1e-12).count();
        Ok(negatives == 1 && zeros == 0)
    }
}

fn model_metric(model: &FiberModel, coords: &[f64]) -> DMatrix<f64> {
    match model {
        FiberModel::Flat { dim } => DMatrix::identity(*dim, *dim),
        FiberModel::Circle => DMatrix::identity(1, 1),
        FiberModel::Sphere2 { radius } => {
            let r2 = radius * radius;
            let theta = coords[0];
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                r2,
                r2 * theta.sin().powi(2),
            ]))
        }
        FiberModel::Sphere3 { radius } => {
            let r2 = radius * radius;
            let chi = coords[0];
            let theta = coords[1];
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                r2,
                r2 * chi.sin().powi(2),
                r2 * chi.sin().powi(2) * theta.sin().powi(2),
            ]))
        }
    }
}

/// Build a chart from a space-time whose fibers all carry model metrics.
pub fn build_chart(st: &WarpedSpacetime) -> Result<CoordinateChart> {
    let mut models = Vec::new();
    let mut offsets = Vec::new();
    let mut labels = vec!["t".to_string()];
    let mut next = 1;
    for (i, fiber) in st.fibers().iter().enumerate() {
        let model = fiber.spec.model.ok_or(Error::NoModel { index: i })?;
        offsets.push(next);
        let names: Vec<String> = match model {
            FiberModel::Flat { dim } => (0..dim).map(|j| format!("x{i}_{j}")).collect(),
            FiberModel::Circle => vec![format!("phi{i}")],
            FiberModel::Sphere2 { .. } => vec![format!("theta{i}"), format!("phi{i}")],
            FiberModel::Sphere3 { .. } => {
                vec![format!("chi{i}"), format!("theta{i}"), format!("phi{i}")]
            }
        };
        next += model.dim();
        labels.extend(names);
        models.push(model);
    }
    Ok(CoordinateChart {
        st: st.clone(),
        models,
        offsets,
        dimension: next,
        labels,
    })
}

/// Finite-difference curvature at a point, after Richardson extrapolation
/// over steps `h` and `h/2`.
pub struct FdCurvature {
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    /// Flattened `R^rho_{sigma mu nu}`, index `((rho*n + sigma)*n + mu)*n + nu`.
    pub riemann: Vec<f64>,
    /// Max componentwise disagreement between the two Richardson levels.
    pub disagreement: f64,
}

impl FdCurvature {
    pub fn riemann_at(&self, n: usize, rho: usize, sigma: usize, mu: usize, nu: usize) -> f64 {
        self.riemann[((rho * n + sigma) * n + mu) * n + nu]
    }
}

fn christoffel(chart: &CoordinateChart, point: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = chart.dimension;
    let g = chart.metric(point)?;
    let g_inv = g.clone().try_inverse().ok_or(Error::SingularMetric {
        point: point.to_vec(),
    })?;
    // dg[mu][(a, b)] = d_mu g_ab by central differences
    let mut dg = Vec::with_capacity(n);
    for mu in 0..n {
        let mut plus = point.to_vec();
        plus[mu] += h;
        let mut minus = point.to_vec();
        minus[mu] -= h;
        let diff = (chart.metric(&plus)? - chart.metric(&minus)?) / (2.0 * h);
        dg.push(diff);
    }
    let mut gamma = vec![0.0; n * n * n];
    for rho in 0..n {
        for mu in 0..n {
            for nu in 0..n {
                let mut sum = 0.0;
                for lam in 0..n {
                    sum += g_inv[(rho, lam)]
                        * (dg[mu][(lam, nu)] + dg[nu][(lam, mu)] - dg[lam][(mu, nu)]);
                }
                gamma[(rho * n + mu) * n + nu] = 0.5 * sum;
            }
        }
    }
    Ok(gamma)
}

fn curvature_once(
    chart: &CoordinateChart,
    point: &[f64],
    h: f64,
) -> Result<(Vec<f64>, DMatrix<f64>, f64)> {
    let n = chart.dimension;
    let gamma = christoffel(chart, point, h)?;
    // dgamma[mu][...] = d_mu Gamma by central differences of Gamma
    let mut dgamma = Vec::with_capacity(n);
    for mu in 0..n {
        let mut plus = point.to_vec();
        plus[mu] += h;
        let mut minus = point.to_vec();
        minus[mu] -= h;
        let gp = christoffel(chart, &plus, h)?;
        let gm = christoffel(chart, &minus, h)?;
        let diff: Vec<f64> = gp
            .iter()
            .zip(&gm)
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        dgamma.push(diff);
    }
    let gi = |v: &Vec<f64>, r: usize, m: usize, nu: usize| v[(r * n + m) * n + nu];
    let mut riemann = vec![0.0; n * n * n * n];
    for rho in 0..n {
        for sigma in 0..n {
            for mu in 0..n {
                for nu in 0..n {
                    let mut val = gi(&dgamma[mu], rho, nu, sigma) - gi(&dgamma[nu], rho, mu, sigma);
                    for lam in 0..n {
                        val += gi(&gamma, rho, mu, lam) * gi(&gamma, lam, nu, sigma)
                            - gi(&gamma, rho, nu, lam) * gi(&gamma, lam, mu, sigma);
                    }
                    riemann[((rho * n + sigma) * n + mu) * n + nu] = val;
                }
            }
        }
    }
    let mut ricci = DMatrix::zeros(n, n);
    for sigma in 0..n {
        for nu in 0..n {
            let mut sum = 0.0;
            for rho in 0..n {
                sum += riemann[((rho * n + sigma) * n + rho) * n + nu];
            }
            ricci[(sigma, nu)] = sum;
        }
    }
    let g = chart.metric(point)?;
    let g_inv = g.try_inverse().ok_or(Error::SingularMetric {
        point: point.to_vec(),
    })?;
    let scalar = (g_inv * &ricci).trace();
    Ok((riemann, ricci, scalar))
}

/// Curvature with Richardson extrapolation: combines the `h` and `h/2`
/// second-order evaluations into an `O(h^4)` result and reports their
/// disagreement. Errors if the two levels disagree by more than ten times
/// the stated tolerance (relative).
pub fn fd_curvature(
    chart: &CoordinateChart,
    point: &[f64],
    h: f64,
    tolerance: f64,
) -> Result<FdCurvature> {
    for (a, coord) in point.iter().enumerate() {
        if a > 0 && is_polar(chart, a) {
            let margin = POLE_MARGIN;
            if coord.rem_euclid(std::f64::consts::PI) < margin
                || coord.rem_euclid(std::f64::consts::PI) > std::f64::consts::PI - margin
            {
                return Err(Error::SingularMetric {
                    point: point.to_vec(),
                });
            }
        }
    }
    let (r1, ric1, s1) = curvature_once(chart, point, h)?;
    let (r2, ric2, s2) = curvature_once(chart, point, h / 2.0)?;
    let riemann: Vec<f64> = r1
        .iter()
        .zip(&r2)
        .map(|(a, b)| (4.0 * b - a) / 3.0)
        .collect();
    let ricci = (&ric2 * 4.0 - &ric1) / 3.0;
    let scalar = (4.0 * s2 - s1) / 3.0;
    let mut disagreement = (s1 - s2).abs() / (1.0 + s2.abs());
    for (a, b) in ric1.iter().zip(ric2.iter()) {
        disagreement = disagreement.max((a - b).abs() / (1.0 + b.abs()));
    }
    if disagreement > 10.0 * tolerance {
        return Err(Error::StepTooLarge(format!(
            "Richardson levels disagree by {disagreement:.3e} (tolerance {tolerance:.1e})"
        )));
    }
    Ok(FdCurvature {
        ricci,
        scalar,
        riemann,
        disagreement,
    })
}

fn is_polar(chart: &CoordinateChart, coord_index: usize) -> bool {
    for (i, model) in chart.models.iter().enumerate() {
        let off = chart.offsets[i];
        match model {
            FiberModel::Sphere2 { .. } if coord_index == off => return true,
            FiberModel::Sphere3 { .. } if coord_index == off || coord_index == off + 1 => {
                return true
            }
            _ => {}
        }
    }
    false
}

/// One closed-form-vs-oracle comparison.
#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub quantity: String,
    pub closed_form: f64,
    pub oracle: f64,
    pub abs_diff: f64,
    /// `abs_diff / max(1, |closed_form|)`.
    pub rel_diff: f64,
    pub pass: bool,
}

/// Per-point comparison report.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub t: f64,
    pub comparisons: Vec<Comparison>,
    pub pass: bool,
}

fn comparison(quantity: &str, closed: f64, oracle: f64, tol: f64) -> Comparison {
    let abs_diff = (closed - oracle).abs();
    let rel_diff = abs_diff / closed.abs().max(1.0);
    Comparison {
        quantity: quantity.to_string(),
        closed_form: closed,
        oracle,
        abs_diff,
        rel_diff,
        pass: rel_diff <= tol,
    }
}

/// Compare the closed-form scalar curvature, `Ric(dt, dt)` and every fiber
/// Ricci coefficient against the finite-difference pipeline on a `t` grid.
pub fn compare(
    st: &WarpedSpacetime,
    grid: &[f64],
    h: f64,
    tolerance: f64,
) -> Result<Vec<OracleReport>> {
    let chart = build_chart(st)?;
    let mut reports = Vec::with_capacity(grid.len());
    for &t in grid {
        let point = chart.base_point(t);
        let fd = fd_curvature(&chart, &point, h, tolerance)?;
        let mut comparisons = Vec::new();

        let closed_tau = curvature::scalar_curvature(st, t)?.form1;
        comparisons.push(comparison("tau", closed_tau, fd.scalar, tolerance));

        let closed_tt = curvature::ricci_tt(st, t)?;
        comparisons.push(comparison("ricci_tt", closed_tt, fd.ricci[(0, 0)], tolerance));

        for i in 0..st.fibers().len() {
            let lambda_f = st.fibers()[i].spec.require_lambda(i)?;
            let coeff = curvature::ricci_fiber_coeff(st, i, t)?;
            let gf = chart.fiber_metric_diag(i, &point);
            let closed = (lambda_f + coeff) * gf;
            let a = chart.fiber_offset(i);
            comparisons.push(comparison(
                &format!("ricci_fiber_{i}"),
                closed,
                fd.ricci[(a, a)],
                tolerance,
            ));
        }
        let pass = comparisons.iter().all(|c| c.pass);
        reports.push(OracleReport {
            t,
            comparisons,
            pass,
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::{classical_kasner, kasner_to_mgrw, FiberSpec};
    use crate::warp::{Expr, Interval, WarpFn};

    fn static_model(model: FiberModel) -> WarpedSpacetime {
        let interval = Interval::new(0.0, 2.0).unwrap();
        WarpedSpacetime::new(
            interval,
            vec![(
                FiberSpec::from_model(model),
                WarpFn::new(Expr::constant(1.0), interval),
            )],
        )
        .unwrap()
    }

    #[test]
    fn minkowski_is_flat() {
        let st = static_model(FiberModel::Flat { dim: 3 });
        let chart = build_chart(&st).unwrap();
        let fd = fd_curvature(&chart, &chart.base_point(1.0), DEFAULT_STEP, 1e-6).unwrap();
        assert!(fd.scalar.abs() < 1e-12);
        assert!(fd.ricci.iter().all(|v| v.abs() < 1e-12));
        assert!(chart.signature_ok(&chart.base_point(1.0)).unwrap());
    }

    #[test]
    fn model_fibers_reproduce_constant_curvatures() {
        // static product with one model fiber: total tau = tau_F
        for (model, expected) in [
            (FiberModel::Sphere2 { radius: 1.0 }, 2.0),
            (FiberModel::Sphere3 { radius: 1.0 }, 6.0),
            (FiberModel::Flat { dim: 2 }, 0.0),
            (FiberModel::Sphere2 { radius: 2.0 }, 0.5),
        ] {
            let st = static_model(model);
            let chart = build_chart(&st).unwrap();
            let fd = fd_curvature(&chart, &chart.base_point(0.7), DEFAULT_STEP, 1e-6).unwrap();
            assert!(
                (fd.scalar - expected).abs() < 1e-8,
                "{model:?}: {} vs {expected}",
                fd.scalar
            );
        }
    }

    #[test]
    fn kasner_chart_is_ricci_flat() {
        let st = kasner_to_mgrw(&classical_kasner()).unwrap();
        let chart = build_chart(&st).unwrap();
        let fd = fd_curvature(&chart, &chart.base_point(1.0), DEFAULT_STEP, 1e-6).unwrap();
        assert!(fd.scalar.abs() < 1e-6);
        assert!(fd.ricci.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn convergence_is_second_order() {
        // smooth curved example: e^{0.3 t} warp over a 2-sphere
        let interval = Interval::new(0.0, 2.0).unwrap();
        let st = WarpedSpacetime::new(
            interval,
            vec![(
                FiberSpec::from_model(FiberModel::Sphere2 { radius: 1.0 }),
                WarpFn::new(Expr::affine(0.3, 0.0).exp(), interval),
            )],
        )
        .unwrap();
        let chart = build_chart(&st).unwrap();
        let point = chart.base_point(1.0);
        let exact = curvature::scalar_curvature(&st, 1.0).unwrap().form1;
        let coarse = curvature_once(&chart, &point, 2e-3).unwrap().2;
        let fine = curvature_once(&chart, &point, 1e-3).unwrap().2;
        let ratio = (coarse - exact).abs() / (fine - exact).abs();
        assert!(
            (2.5..6.0).contains(&ratio),
            "expected ~4x error reduction, got {ratio}"
        );
    }

    #[test]
    fn two_fiber_example_matches_engine() {
        // s = (1, 2), b1 = t, b2 = t^2, unit 2-sphere: tau = 26 at t = 1
        let interval = Interval::new(0.2, 3.0).unwrap();
        let st = WarpedSpacetime::new(
            interval,
            vec![
                (FiberSpec::flat(1), WarpFn::new(Expr::t(), interval)),
                (
                    FiberSpec::from_model(FiberModel::Sphere2 { radius: 1.0 }),
                    WarpFn::new(Expr::t().power(2.0), interval),
                ),
            ],
        )
        .unwrap();
        let reports = compare(&st, &[1.0], DEFAULT_STEP, 1e-4).unwrap();
        assert!(reports[0].pass, "{:?}", reports[0]);
        let tau_row = &reports[0].comparisons[0];
        assert!((tau_row.closed_form - 26.0).abs() < 1e-10);
        assert!((tau_row.oracle - 26.0).abs() < 1e-4);
    }

    #[test]
    fn riemann_frame_signs_pinned_by_oracle() {
        // single flat 2-d fiber with b = t: engine internal coefficient
        // c9 = -(b'/b)^2 = -1/t^2; oracle R^1_{2 1 2} = -c9 * g_{22}
        let interval = Interval::new(0.2, 3.0).unwrap();
        let st = WarpedSpacetime::new(
            interval,
            vec![(
                FiberSpec::flat(2),
                WarpFn::new(Expr::t(), interval),
            )],
        )
        .unwrap();
        let chart = build_chart(&st).unwrap();
        let t = 1.0;
        let point = chart.base_point(t);
        let fd = fd_curvature(&chart, &point, DEFAULT_STEP, 1e-6).unwrap();
        let frame = curvature::riemann_frame(&st, t).unwrap();
        let n = chart.dimension;
        let g = chart.metric(&point).unwrap();
        // item 9: R^d_{c a b} with a=d=1, b=c=2
        let oracle = fd.riemann_at(n, 1, 2, 1, 2);
        assert!((oracle - (-frame.internal[0] * g[(2, 2)])).abs() < 1e-6);
        // item 2: R^a_{t b t} = c2 delta^a_b (zero here since b'' = 0)
        assert!(fd.riemann_at(n, 1, 0, 1, 0).abs() < 1e-6);

        // two one-dimensional fibers b1 = t, b2 = t^2 pin items 2, 7, 8
        let st2 = WarpedSpacetime::new(
            interval,
            vec![
                (FiberSpec::flat(1), WarpFn::new(Expr::t(), interval)),
                (FiberSpec::flat(1), WarpFn::new(Expr::t().power(2.0), interval)),
            ],
        )
        .unwrap();
        let chart2 = build_chart(&st2).unwrap();
        let point2 = chart2.base_point(t);
        let fd2 = fd_curvature(&chart2, &point2, DEFAULT_STEP, 1e-6).unwrap();
        let frame2 = curvature::riemann_frame(&st2, t).unwrap();
        let n2 = chart2.dimension;
        let g2 = chart2.metric(&point2).unwrap();
        // item 2 for fiber 2: R^a_{t a t} = -b2''/b2 = -2
        let oracle_item2 = fd2.riemann_at(n2, 2, 0, 2, 0);
        assert!((oracle_item2 - frame2.mixed_base[1]).abs() < 1e-6);
        // item 7: U in F_2 first: R^d_{b c a} = c7 g_{11} delta^d_c
        let oracle_item7 = fd2.riemann_at(n2, 2, 1, 2, 1);
        assert!((oracle_item7 - frame2.pairs[0].coeff * g2[(1, 1)]).abs() < 1e-6);
        // item 8 orientation R(V, dt)W: R^t_{b a t} = c8 g_{ab}
        let oracle_item8 = fd2.riemann_at(n2, 0, 2, 2, 0);
        assert!((oracle_item8 - frame2.time_block[1] * g2[(2, 2)]).abs() < 1e-5);
    }
}
