//! Closed-form curvature of a multiply generalized Robertson-Walker
//! space-time: scalar curvature in three equivalent forms, the Ricci blocks,
//! the Ricci quadratic form and the Riemann frame blocks.
//!
//! On the interval base the general warped-product formulas specialize via
//! `grad b = -b' d/dt`, `|grad b|^2 = -(b')^2`, `H^b(dt, dt) = b''` and
//! `Lap b = -b''`; the signs below are the specialization with those
//! substitutions applied, pinned empirically against the coordinate
//! finite-difference oracle.

use crate::error::{Error, Result};
use crate::jet::ScalarJet;
use crate::spacetime::WarpedSpacetime;
use serde::Serialize;

/// The three independent evaluations of the scalar curvature.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScalarForms {
    /// Fully expanded form: second derivatives, fiber scalars, squared
    /// log-derivatives and cross terms.
    pub form1: f64,
    /// Divergence form: `sum s b''/b + S' + S^2 + sum tau_F/b^2` with
    /// `S = sum s b'/b`.
    pub form2: f64,
    /// Substitution form through `psi_i = b_i^{(s_i+1)/2}`.
    pub psi_form: f64,
}

/// Scalar curvature at `t`, computed three ways; the forms agree to
/// roundoff for any admissible space-time. Requires every fiber to carry
/// `tau_F`.
pub fn scalar_curvature(st: &WarpedSpacetime, t: f64) -> Result<ScalarForms> {
    let jets = st.warp_jets(t)?;
    let fibers = st.fibers();
    let dims: Vec<f64> = fibers.iter().map(|f| f.spec.dim as f64).collect();
    let taus: Vec<f64> = fibers
        .iter()
        .enumerate()
        .map(|(i, f)| f.spec.require_tau(i))
        .collect::<Result<_>>()?;
    let m = jets.len();

    // cross sum: sum_i sum_{k != i} s_k s_i (b_i'/b_i)(b_k'/b_k)
    let log_d: Vec<f64> = jets.iter().map(|j| j.d1 / j.value).collect();
    let mut cross = 0.0;
    for i in 0..m {
        for k in 0..m {
            if i != k {
                cross += dims[k] * dims[i] * log_d[i] * log_d[k];
            }
        }
    }

    // form 1
    let mut form1 = cross;
    for i in 0..m {
        form1 += 2.0 * dims[i] * jets[i].d2 / jets[i].value;
        form1 += taus[i] / (jets[i].value * jets[i].value);
        form1 += dims[i] * (dims[i] - 1.0) * log_d[i] * log_d[i];
    }

    // form 2: S = sum s_i b_i'/b_i as a first-order jet
    let s_val: f64 = (0..m).map(|i| dims[i] * log_d[i]).sum();
    let s_d1: f64 = (0..m)
        .map(|i| dims[i] * (jets[i].d2 / jets[i].value - log_d[i] * log_d[i]))
        .sum();
    let mut form2 = s_d1 + s_val * s_val;
    for i in 0..m {
        form2 += dims[i] * jets[i].d2 / jets[i].value;
        form2 += taus[i] / (jets[i].value * jets[i].value);
    }

    // psi form: psi_i = b_i^{(s_i+1)/2}, evaluated through its own jets
    let mut psi_form = 0.0;
    let mut w = Vec::with_capacity(m);
    for i in 0..m {
        let gamma = (dims[i] + 1.0) / 2.0;
        let psi = jets[i].powf(gamma)?;
        psi_form += 4.0 * dims[i] / (dims[i] + 1.0) * psi.d2 / psi.value;
        psi_form += taus[i] / psi.value.powf(4.0 / (dims[i] + 1.0));
        w.push(psi.powf(2.0 / (dims[i] + 1.0))?);
    }
    for i in 0..m {
        for k in 0..m {
            if i != k {
                psi_form +=
                    dims[k] * dims[i] * (w[i].d1 / w[i].value) * (w[k].d1 / w[k].value);
            }
        }
    }

    Ok(ScalarForms {
        form1,
        form2,
        psi_form,
    })
}

/// `Ric(dt, dt) = -sum s_i b_i''/b_i`.
pub fn ricci_tt(st: &WarpedSpacetime, t: f64) -> Result<f64> {
    let jets = st.warp_jets(t)?;
    Ok(-st
        .fibers()
        .iter()
        .zip(&jets)
        .map(|(f, j)| f.spec.dim as f64 * j.d2 / j.value)
        .sum::<f64>())
}

/// The bracket multiplying `g_{F_i}(v, v)` in the fiber Ricci block:
/// `b_i b_i'' + (s_i - 1)(b_i')^2 + b_i b_i' sum_{k != i} s_k b_k'/b_k`.
/// The full block is `Ric_{F_i} + (bracket) g_{F_i}`.
pub fn ricci_fiber_coeff(st: &WarpedSpacetime, index: usize, t: f64) -> Result<f64> {
    let jets = st.warp_jets(t)?;
    if index >= jets.len() {
        return Err(Error::Validation(format!("no fiber with index {index}")));
    }
    Ok(fiber_coeff(st, &jets, index))
}

fn fiber_coeff(st: &WarpedSpacetime, jets: &[ScalarJet], i: usize) -> f64 {
    let fibers = st.fibers();
    let b = jets[i];
    let s = fibers[i].spec.dim as f64;
    let mut other = 0.0;
    for (k, jet) in jets.iter().enumerate() {
        if k != i {
            other += fibers[k].spec.dim as f64 * jet.d1 / jet.value;
        }
    }
    b.value * b.d2 + (s - 1.0) * b.d1 * b.d1 + b.value * b.d1 * other
}

/// `Ric(dt + v, dt + v)` for `v = sum v_i`, assembled from per-fiber data
/// `(Ric_{F_i}(v_i, v_i), g_{F_i}(v_i, v_i))`.
pub fn ricci_quadratic(
    st: &WarpedSpacetime,
    t: f64,
    fiber_data: &[(f64, f64)],
) -> Result<f64> {
    if fiber_data.len() != st.fibers().len() {
        return Err(Error::LengthMismatch(format!(
            "{} fiber data entries vs {} fibers",
            fiber_data.len(),
            st.fibers().len()
        )));
    }
    let jets = st.warp_jets(t)?;
    let mut total = 0.0;
    for (i, &(ric_f, metric_f)) in fiber_data.iter().enumerate() {
        let s = st.fibers()[i].spec.dim as f64;
        total += ric_f + fiber_coeff(st, &jets, i) * metric_f;
        total -= s * jets[i].d2 / jets[i].value;
    }
    Ok(total)
}

/// Coefficient of the curvature block coupling fibers `i` and `k`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PairBlock {
    pub i: usize,
    pub k: usize,
    /// `b_i' b_k' / (b_i b_k)`; for `U` in `F_k` and `V, W` in `F_i`,
    /// `R(U, V) W = coeff * g(V, W) U`.
    pub coeff: f64,
}

/// The nonzero Riemann blocks of the frame decomposition, specialized to the
/// interval base. All remaining mixed blocks vanish identically.
#[derive(Debug, Clone, Serialize)]
pub struct RiemannFrame {
    /// Per fiber: `R(V, dt) dt = mixed_base[i] * V`, value `-b_i''/b_i`.
    pub mixed_base: Vec<f64>,
    /// Per fiber: `R(V, dt) W = time_block[i] * g(V, W) dt`, value
    /// `-b_i''/b_i`. (The transposed slot `R(dt, V) W` carries the opposite
    /// sign by antisymmetry; this orientation is the one pinned by the
    /// coordinate oracle.)
    pub time_block: Vec<f64>,
    /// Per fiber: `R(V, W) U = R_{F_i}(V, W) U + internal[i] * (g(V, U) W -
    /// g(W, U) V)`, value `-(b_i')^2/b_i^2`.
    pub internal: Vec<f64>,
    /// Unordered pairs `i < k`.
    pub pairs: Vec<PairBlock>,
    /// Whether the fiber contributes its own internal curvature to the
    /// block above (nonzero `lambda_F`).
    pub fiber_curved: Vec<bool>,
    /// Mixed blocks with one leg in the base and mismatched fibers vanish.
    pub mixed_vanish: bool,
}

/// Evaluate the frame-block scalars at `t`.
pub fn riemann_frame(st: &WarpedSpacetime, t: f64) -> Result<RiemannFrame> {
    let jets = st.warp_jets(t)?;
    let m = jets.len();
    let mixed_base: Vec<f64> = jets.iter().map(|j| -j.d2 / j.value).collect();
    let internal: Vec<f64> = jets
        .iter()
        .map(|j| -(j.d1 * j.d1) / (j.value * j.value))
        .collect();
    let mut pairs = Vec::new();
    for i in 0..m {
        for k in i + 1..m {
            pairs.push(PairBlock {
                i,
                k,
                coeff: jets[i].d1 * jets[k].d1 / (jets[i].value * jets[k].value),
            });
        }
    }
    let fiber_curved = st
        .fibers()
        .iter()
        .map(|f| f.spec.einstein_lambda.map(|l| l != 0.0).unwrap_or(true))
        .collect();
    Ok(RiemannFrame {
        time_block: mixed_base.clone(),
        mixed_base,
        internal,
        pairs,
        fiber_curved,
        mixed_vanish: true,
    })
}

/// All curvature quantities at one grid point.
#[derive(Debug, Clone, Serialize)]
pub struct CurvaturePoint {
    pub t: f64,
    pub tau_form1: f64,
    pub tau_form2: f64,
    pub tau_psi_form: f64,
    pub ricci_tt: f64,
    pub ricci_fiber_coeff: Vec<f64>,
    pub riemann: RiemannFrame,
}

pub fn curvature_point(st: &WarpedSpacetime, t: f64) -> Result<CurvaturePoint> {
    let forms = scalar_curvature(st, t)?;
    let jets = st.warp_jets(t)?;
    let coeffs = (0..st.fibers().len())
        .map(|i| fiber_coeff(st, &jets, i))
        .collect();
    Ok(CurvaturePoint {
        t,
        tau_form1: forms.form1,
        tau_form2: forms.form2,
        tau_psi_form: forms.psi_form,
        ricci_tt: ricci_tt(st, t)?,
        ricci_fiber_coeff: coeffs,
        riemann: riemann_frame(st, t)?,
    })
}

/// Trace identity: `tau = -Ric(dt,dt) + sum_i s_i [lambda_Fi + coeff_i] /
/// b_i^2`, valid when every fiber is Einstein. Returns the reassembled
/// trace for comparison against the scalar forms.
pub fn trace_from_ricci(st: &WarpedSpacetime, t: f64) -> Result<f64> {
    let jets = st.warp_jets(t)?;
    let mut total = -ricci_tt(st, t)?;
    for (i, fiber) in st.fibers().iter().enumerate() {
        let lambda = fiber.spec.require_lambda(i)?;
        let s = fiber.spec.dim as f64;
        total += s * (lambda + fiber_coeff(st, &jets, i)) / (jets[i].value * jets[i].value);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::{classical_kasner, kasner_to_mgrw, FiberModel, FiberSpec};
    use crate::warp::{Expr, Interval, WarpFn};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    /// s = (1, 2), b1 = t, b2 = t^2, F2 carrying tau = 2 (unit 2-sphere).
    fn two_fiber_example() -> WarpedSpacetime {
        let interval = Interval::new(0.1, 10.0).unwrap();
        WarpedSpacetime::new(
            interval,
            vec![
                (FiberSpec::flat(1), WarpFn::new(Expr::t(), interval)),
                (
                    FiberSpec::from_model(FiberModel::Sphere2 { radius: 1.0 }),
                    WarpFn::new(Expr::t().power(2.0), interval),
                ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn static_flat_product_is_scalar_flat() {
        let interval = Interval::new(0.0, 1.0).unwrap();
        let st = WarpedSpacetime::new(
            interval,
            vec![
                (FiberSpec::flat(1), WarpFn::new(Expr::constant(1.0), interval)),
                (FiberSpec::flat(2), WarpFn::new(Expr::constant(1.0), interval)),
            ],
        )
        .unwrap();
        let f = scalar_curvature(&st, 0.5).unwrap();
        assert_eq!((f.form1, f.form2, f.psi_form), (0.0, 0.0, 0.0));
        assert_eq!(ricci_tt(&st, 0.5).unwrap(), 0.0);
        for i in 0..2 {
            assert_eq!(ricci_fiber_coeff(&st, i, 0.5).unwrap(), 0.0);
        }
    }

    #[test]
    fn two_fiber_example_tau_is_26() {
        // form 1 decomposes as 8 + 2 + 8 + 8, form 2 as 4 - 5 + 25 + 2
        let st = two_fiber_example();
        let f = scalar_curvature(&st, 1.0).unwrap();
        assert!(close(f.form1, 26.0, 1e-13));
        assert!(close(f.form2, 26.0, 1e-13));
        assert!(close(f.psi_form, 26.0, 1e-12));
    }

    #[test]
    fn two_fiber_example_ricci_blocks() {
        let st = two_fiber_example();
        assert!(close(ricci_tt(&st, 1.0).unwrap(), -4.0, 1e-14));
        assert!(close(ricci_fiber_coeff(&st, 0, 1.0).unwrap(), 4.0, 1e-14));
    }

    #[test]
    fn kasner_is_ricci_flat_on_grid() {
        let st = kasner_to_mgrw(&classical_kasner()).unwrap();
        for t in crate::quad::linspace(0.25, 4.0, 64) {
            assert!(ricci_tt(&st, t).unwrap().abs() < 1e-12);
            for i in 0..3 {
                assert!(ricci_fiber_coeff(&st, i, t).unwrap().abs() < 1e-12);
            }
            let f = scalar_curvature(&st, t).unwrap();
            assert!(f.form1.abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_form_reduces_to_tt_for_zero_vector() {
        let st = two_fiber_example();
        let q = ricci_quadratic(&st, 1.3, &[(0.0, 0.0), (0.0, 0.0)]).unwrap();
        assert!(close(q, ricci_tt(&st, 1.3).unwrap(), 1e-14));
    }

    #[test]
    fn quadratic_form_matches_three_fiber_expansion() {
        // s = (1,1,1): per-fiber coefficient b_i b_i'' + b_i b_i' sum b_k'/b_k
        let interval = Interval::new(0.2, 5.0).unwrap();
        let st = WarpedSpacetime::new(
            interval,
            vec![
                (FiberSpec::flat(1), WarpFn::new(Expr::t(), interval)),
                (FiberSpec::flat(1), WarpFn::new(Expr::t().power(2.0), interval)),
                (
                    FiberSpec::flat(1),
                    WarpFn::new(Expr::t().scale(0.5).exp(), interval),
                ),
            ],
        )
        .unwrap();
        let t = 1.1;
        let jets = st.warp_jets(t).unwrap();
        let g: Vec<f64> = vec![0.4, -0.3, 1.7];
        let expected: f64 = (0..3)
            .map(|i| {
                let b = jets[i];
                let mut sum = b.value * b.d2;
                for k in 0..3 {
                    if k != i {
                        sum += b.value * b.d1 * jets[k].d1 / jets[k].value;
                    }
                }
                sum * g[i] - b.d2 / b.value
            })
            .sum();
        let data: Vec<(f64, f64)> = g.iter().map(|&x| (0.0, x)).collect();
        let q = ricci_quadratic(&st, t, &data).unwrap();
        assert!(close(q, expected, 1e-13));
    }

    #[test]
    fn trace_identity_for_einstein_fibers() {
        let st = two_fiber_example();
        for t in [0.5, 1.0, 2.0] {
            let trace = trace_from_ricci(&st, t).unwrap();
            let f = scalar_curvature(&st, t).unwrap();
            assert!(close(trace, f.form1, 1e-11), "t={t}: {trace} vs {}", f.form1);
        }
    }

    #[test]
    fn riemann_frame_values() {
        let st = two_fiber_example();
        let fr = riemann_frame(&st, 1.0).unwrap();
        // b1 = t: -b''/b = 0; b2 = t^2: -2/t^2 = -2
        assert!(close(fr.mixed_base[0], 0.0, 1e-14));
        assert!(close(fr.mixed_base[1], -2.0, 1e-14));
        // item 7 coefficient: b1' b2' / (b1 b2) = 2
        assert_eq!(fr.pairs.len(), 1);
        assert!(close(fr.pairs[0].coeff, 2.0, 1e-14));
        // item 9: -(b')^2/b^2
        assert!(close(fr.internal[0], -1.0, 1e-14));
        assert!(close(fr.internal[1], -4.0, 1e-14));
    }
}
