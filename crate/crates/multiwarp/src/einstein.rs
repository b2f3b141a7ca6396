//! Einstein and constant-scalar-curvature decisions as residual systems.
//!
//! A multiply generalized Robertson-Walker space-time is Einstein with Ricci
//! constant `lambda` iff every fiber is Einstein and
//!
//! ```text
//! (2)  sum_i s_i b_i''/b_i = lambda
//! (3)  lambda_Fi + b_i b_i'' + (s_i - 1)(b_i')^2
//!        + b_i b_i' sum_{k != i} s_k b_k'/b_k = lambda b_i^2    for all i
//! ```
//!
//! Condition (3) is evaluated both as printed and in the equivalent
//! power-substituted form
//! `lambda_Fi/b_i^2 + (1/s_i)(b_i^{s_i})''/b_i^{s_i} + (b_i'/b_i) sum_{k!=i}
//! s_k b_k'/b_k = lambda`; the two evaluations must coincide to roundoff,
//! which checks the substitution algebra itself.

use crate::curvature::scalar_curvature;
use crate::error::{Error, Result};
use crate::quad::{pairwise_mean, pairwise_sum};
use crate::spacetime::WarpedSpacetime;
use serde::Serialize;

/// Default absolute tolerance before scaling.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Einstein { lambda: f64 },
    NotEinstein { reason: String },
}

/// Residual report for the Einstein conditions at a fixed `lambda`.
#[derive(Debug, Clone, Serialize)]
pub struct EinsteinReport {
    /// The tested Ricci constant.
    pub lambda: f64,
    /// Grid max of `|sum s_i b_i''/b_i - lambda|`.
    pub residual_condition2: f64,
    /// Per-fiber grid max of the condition-(3) residual, as printed.
    pub residual_condition3: Vec<f64>,
    /// Grid max disagreement between the printed and substituted forms of
    /// condition (3), after rescaling by `b_i^2`.
    pub form_agreement: f64,
    pub fibers_einstein: Vec<bool>,
    /// Total dimension 2: the Einstein constant need not be constant there.
    pub dimension_warning: bool,
    /// Scaled tolerance used for the verdict.
    pub tolerance: f64,
    pub verdict: Verdict,
}

fn scaled_tolerance(base: f64, lambda: f64, max_b_sq: f64) -> f64 {
    base * (1.0 + lambda.abs() + max_b_sq)
}

/// Evaluate the Einstein residual system over `grid` for a fixed `lambda`.
pub fn einstein_residuals(
    st: &WarpedSpacetime,
    lambda: f64,
    grid: &[f64],
) -> Result<EinsteinReport> {
    einstein_residuals_with_tolerance(st, lambda, grid, DEFAULT_TOLERANCE)
}

pub fn einstein_residuals_with_tolerance(
    st: &WarpedSpacetime,
    lambda: f64,
    grid: &[f64],
    base_tolerance: f64,
) -> Result<EinsteinReport> {
    if grid.is_empty() {
        return Err(Error::Validation("empty grid".into()));
    }
    let fibers = st.fibers();
    let m = fibers.len();
    let lambdas: Vec<f64> = fibers
        .iter()
        .enumerate()
        .map(|(i, f)| f.spec.require_lambda(i))
        .collect::<Result<_>>()?;

    let mut res2 = 0.0f64;
    let mut res3 = vec![0.0f64; m];
    let mut agreement = 0.0f64;
    let mut max_b_sq = 0.0f64;

    for &t in grid {
        let jets = st.warp_jets(t)?;
        let log_d: Vec<f64> = jets.iter().map(|j| j.d1 / j.value).collect();
        let cond2: f64 = jets
            .iter()
            .zip(fibers)
            .map(|(j, f)| f.spec.dim as f64 * j.d2 / j.value)
            .sum();
        res2 = res2.max((cond2 - lambda).abs());

        for i in 0..m {
            let b = jets[i];
            let s = fibers[i].spec.dim as f64;
            max_b_sq = max_b_sq.max(b.value * b.value);
            let other: f64 = (0..m)
                .filter(|&k| k != i)
                .map(|k| fibers[k].spec.dim as f64 * log_d[k])
                .sum();
            // printed form of condition (3)
            let direct = lambdas[i]
                + b.value * b.d2
                + (s - 1.0) * b.d1 * b.d1
                + b.value * b.d1 * other
                - lambda * b.value * b.value;
            res3[i] = res3[i].max(direct.abs());
            // substituted form through (b^s)''/b^s
            let bs = b.powf(s)?;
            let reduced = lambdas[i] / (b.value * b.value) + (1.0 / s) * bs.d2 / bs.value
                + log_d[i] * other
                - lambda;
            agreement = agreement.max((direct / (b.value * b.value) - reduced).abs());
        }
    }

    let tolerance = scaled_tolerance(base_tolerance, lambda, max_b_sq);
    let fibers_einstein: Vec<bool> = fibers
        .iter()
        .map(|f| f.spec.einstein_lambda.is_some())
        .collect();
    let all_fibers = fibers_einstein.iter().all(|&b| b);
    let worst3 = res3.iter().cloned().fold(0.0f64, f64::max);
    let verdict = if !all_fibers {
        Verdict::NotEinstein {
            reason: "some fiber is not Einstein".into(),
        }
    } else if res2 <= tolerance && worst3 <= tolerance {
        Verdict::Einstein { lambda }
    } else if res2 > tolerance {
        Verdict::NotEinstein {
            reason: format!("condition (2) residual {res2:.3e} exceeds tolerance"),
        }
    } else {
        Verdict::NotEinstein {
            reason: format!("condition (3) residual {worst3:.3e} exceeds tolerance"),
        }
    };

    Ok(EinsteinReport {
        lambda,
        residual_condition2: res2,
        residual_condition3: res3,
        form_agreement: agreement,
        fibers_einstein,
        dimension_warning: st.dimension() == 2,
        tolerance,
        verdict,
    })
}

/// Infer the Einstein constant from condition (2): evaluates
/// `sum s_i b_i''/b_i` over the grid and returns its mean when the grid
/// values are constant within tolerance, `None` otherwise.
pub fn infer_lambda(st: &WarpedSpacetime, grid: &[f64]) -> Result<Option<f64>> {
    infer_lambda_with_tolerance(st, grid, DEFAULT_TOLERANCE)
}

pub fn infer_lambda_with_tolerance(
    st: &WarpedSpacetime,
    grid: &[f64],
    base_tolerance: f64,
) -> Result<Option<f64>> {
    if grid.is_empty() {
        return Err(Error::Validation("empty grid".into()));
    }
    let mut values = Vec::with_capacity(grid.len());
    for &t in grid {
        let jets = st.warp_jets(t)?;
        values.push(
            jets.iter()
                .zip(st.fibers())
                .map(|(j, f)| f.spec.dim as f64 * j.d2 / j.value)
                .sum::<f64>(),
        );
    }
    let mean = pairwise_mean(&values);
    let spread = values
        .iter()
        .map(|v| (v - mean).abs())
        .fold(0.0f64, f64::max);
    let max_abs = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if spread <= base_tolerance * (1.0 + max_abs) {
        Ok(Some(mean))
    } else {
        Ok(None)
    }
}

/// Constant-scalar-curvature check: returns `tau` when the scalar curvature
/// is constant over the grid within tolerance, `None` otherwise.
pub fn constant_scalar_check(st: &WarpedSpacetime, grid: &[f64]) -> Result<Option<f64>> {
    constant_scalar_check_with_tolerance(st, grid, DEFAULT_TOLERANCE)
}

pub fn constant_scalar_check_with_tolerance(
    st: &WarpedSpacetime,
    grid: &[f64],
    base_tolerance: f64,
) -> Result<Option<f64>> {
    if grid.is_empty() {
        return Err(Error::Validation("empty grid".into()));
    }
    let mut values = Vec::with_capacity(grid.len());
    for &t in grid {
        values.push(scalar_curvature(st, t)?.form1);
    }
    let max_abs = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max - min <= base_tolerance * (1.0 + max_abs) {
        Ok(Some(pairwise_sum(&values) / values.len() as f64))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::{classical_kasner, kasner_to_mgrw, FiberSpec};
    use crate::warp::{Expr, Interval, WarpFn};

    fn grid(st: &WarpedSpacetime, n: usize) -> Vec<f64> {
        st.interval().grid(n)
    }

    fn trivial_product() -> WarpedSpacetime {
        let interval = Interval::new(0.0, 2.0).unwrap();
        WarpedSpacetime::new(
            interval,
            vec![
                (FiberSpec::flat(2), WarpFn::new(Expr::constant(1.0), interval)),
                (FiberSpec::flat(1), WarpFn::new(Expr::constant(1.0), interval)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn trivial_product_is_einstein_zero() {
        let st = trivial_product();
        let g = grid(&st, 64);
        let report = einstein_residuals(&st, 0.0, &g).unwrap();
        assert_eq!(report.residual_condition2, 0.0);
        assert!(report.residual_condition3.iter().all(|&r| r == 0.0));
        assert!(matches!(report.verdict, Verdict::Einstein { lambda } if lambda == 0.0));
        assert_eq!(constant_scalar_check(&st, &g).unwrap(), Some(0.0));
    }

    #[test]
    fn kasner_preset_is_einstein_zero() {
        let st = kasner_to_mgrw(&classical_kasner()).unwrap();
        let g = crate::quad::linspace(0.25, 4.0, 128);
        let report = einstein_residuals(&st, 0.0, &g).unwrap();
        assert!(report.residual_condition2 <= 1e-10);
        assert!(report.residual_condition3.iter().all(|&r| r <= 1e-10));
        assert!(report.form_agreement <= 1e-10);
        assert!(matches!(report.verdict, Verdict::Einstein { .. }));
        assert_eq!(infer_lambda(&st, &g).unwrap().map(|l| l.abs() < 1e-12), Some(true));
    }

    #[test]
    fn non_einstein_example_has_no_lambda() {
        // warps t, t^2 with s = (1, 2): sum s b''/b = -4/t^2 is not constant
        let interval = Interval::new(0.2, 3.0).unwrap();
        let st = WarpedSpacetime::new(
            interval,
            vec![
                (FiberSpec::flat(1), WarpFn::new(Expr::t(), interval)),
                (FiberSpec::flat(2), WarpFn::new(Expr::t().power(2.0), interval)),
            ],
        )
        .unwrap();
        assert_eq!(infer_lambda(&st, &grid(&st, 64)).unwrap(), None);
    }

    #[test]
    fn perturbed_lambda_is_detected() {
        let st = kasner_to_mgrw(&classical_kasner()).unwrap();
        let g = crate::quad::linspace(0.25, 4.0, 32);
        for delta in [0.1, -0.1] {
            let report = einstein_residuals(&st, delta, &g).unwrap();
            assert!(report.residual_condition2 >= delta.abs() / 2.0);
            assert!(matches!(report.verdict, Verdict::NotEinstein { .. }));
        }
    }

    #[test]
    fn kasner_zeta_zero_scalar_not_constant() {
        // phi = t, zeta = 0, eta = 6: tau = eta/t^2 is non-constant
        let k = crate::spacetime::kasner_preset(&[1.0, -1.0]).unwrap();
        let k = crate::spacetime::KasnerSpec::new(
            k.phi.clone(),
            vec![1.0, -1.0],
            vec![FiberSpec::flat(3), FiberSpec::flat(3)],
        )
        .unwrap();
        assert!((k.zeta - 0.0).abs() < 1e-15);
        assert!((k.eta - 6.0).abs() < 1e-15);
        let st = kasner_to_mgrw(&k).unwrap();
        let g = crate::quad::linspace(0.5, 3.0, 64);
        assert_eq!(constant_scalar_check(&st, &g).unwrap(), None);
        // spot check the closed value eta/t^2
        let f = scalar_curvature(&st, 1.5).unwrap();
        assert!((f.form1 - 6.0 / (1.5 * 1.5)).abs() < 1e-12);
    }
}
