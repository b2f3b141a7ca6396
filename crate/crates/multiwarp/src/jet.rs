//! Second-order jets: `(value, d1, d2)` triples propagated exactly through
//! arithmetic and elementary functions.
//!
//! Every curvature formula in this crate consumes warping functions only
//! through `b`, `b'`, `b''`, so a second-order forward jet is all the
//! differentiation machinery the engine needs. Propagation follows the
//! product, quotient and chain rules, which keeps derivatives exact to
//! roundoff instead of carrying finite-difference noise.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value, first and second derivative of a scalar function at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl ScalarJet {
    pub const fn new(value: f64, d1: f64, d2: f64) -> Self {
        ScalarJet { value, d1, d2 }
    }

    /// Jet of a constant function.
    pub const fn constant(c: f64) -> Self {
        ScalarJet::new(c, 0.0, 0.0)
    }

    /// Jet of the coordinate itself at `t`.
    pub const fn variable(t: f64) -> Self {
        ScalarJet::new(t, 1.0, 0.0)
    }

    /// Jet of `1/v`.
    pub fn recip(self) -> Result<Self> {
        if self.value == 0.0 {
            return Err(Error::Domain {
                t: f64::NAN,
                reason: "division by zero".into(),
            });
        }
        let v = self.value;
        let d1 = -self.d1 / (v * v);
        let d2 = (2.0 * self.d1 * self.d1 - v * self.d2) / (v * v * v);
        Ok(ScalarJet::new(1.0 / v, d1, d2))
    }

    /// Jet of `v^p` for real `p`. Requires `v > 0` except for `p = 0`
    /// (which is the constant 1) and `p = 1` (the identity).
    pub fn powf(self, p: f64) -> Result<Self> {
        if p == 0.0 {
            return Ok(ScalarJet::constant(1.0));
        }
        if p == 1.0 {
            return Ok(self);
        }
        if self.value <= 0.0 {
            return Err(Error::Domain {
                t: f64::NAN,
                reason: format!("power base {} not positive", self.value),
            });
        }
        let v = self.value;
        let vp = v.powf(p);
        let vp1 = v.powf(p - 1.0);
        let vp2 = v.powf(p - 2.0);
        let d1 = p * vp1 * self.d1;
        let d2 = p * ((p - 1.0) * vp2 * self.d1 * self.d1 + vp1 * self.d2);
        Ok(ScalarJet::new(vp, d1, d2))
    }

    pub fn sqrt(self) -> Result<Self> {
        self.powf(0.5)
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        ScalarJet::new(e, e * self.d1, e * (self.d2 + self.d1 * self.d1))
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        ScalarJet::new(s, c * self.d1, c * self.d2 - s * self.d1 * self.d1)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        ScalarJet::new(c, -s * self.d1, -s * self.d2 - c * self.d1 * self.d1)
    }

    pub fn asin(self) -> Result<Self> {
        let u = self.value;
        if u.abs() >= 1.0 {
            return Err(Error::Domain {
                t: f64::NAN,
                reason: format!("arcsin argument {u} outside (-1, 1)"),
            });
        }
        let s = (1.0 - u * u).sqrt();
        let d1 = self.d1 / s;
        let d2 = self.d2 / s + u * self.d1 * self.d1 / (s * s * s);
        Ok(ScalarJet::new(u.asin(), d1, d2))
    }

    pub fn acos(self) -> Result<Self> {
        let u = self.value;
        if u.abs() >= 1.0 {
            return Err(Error::Domain {
                t: f64::NAN,
                reason: format!("arccos argument {u} outside (-1, 1)"),
            });
        }
        let s = (1.0 - u * u).sqrt();
        let d1 = -self.d1 / s;
        let d2 = -self.d2 / s - u * self.d1 * self.d1 / (s * s * s);
        Ok(ScalarJet::new(u.acos(), d1, d2))
    }

    /// Chain rule: jet of `f(g(t))` from the jet of `f` at `g(t)` (`outer`)
    /// and the jet of `g` at `t` (`inner`).
    pub fn chain(outer: ScalarJet, inner: ScalarJet) -> ScalarJet {
        ScalarJet::new(
            outer.value,
            outer.d1 * inner.d1,
            outer.d2 * inner.d1 * inner.d1 + outer.d1 * inner.d2,
        )
    }
}

impl Add for ScalarJet {
    type Output = ScalarJet;
    fn add(self, rhs: ScalarJet) -> ScalarJet {
        ScalarJet::new(self.value + rhs.value, self.d1 + rhs.d1, self.d2 + rhs.d2)
    }
}

impl Sub for ScalarJet {
    type Output = ScalarJet;
    fn sub(self, rhs: ScalarJet) -> ScalarJet {
        ScalarJet::new(self.value - rhs.value, self.d1 - rhs.d1, self.d2 - rhs.d2)
    }
}

impl Mul for ScalarJet {
    type Output = ScalarJet;
    fn mul(self, rhs: ScalarJet) -> ScalarJet {
        ScalarJet::new(
            self.value * rhs.value,
            self.d1 * rhs.value + self.value * rhs.d1,
            self.d2 * rhs.value + 2.0 * self.d1 * rhs.d1 + self.value * rhs.d2,
        )
    }
}

impl Mul<f64> for ScalarJet {
    type Output = ScalarJet;
    fn mul(self, rhs: f64) -> ScalarJet {
        ScalarJet::new(self.value * rhs, self.d1 * rhs, self.d2 * rhs)
    }
}

impl Div for ScalarJet {
    type Output = ScalarJet;
    fn div(self, rhs: ScalarJet) -> ScalarJet {
        // quotient rule, written out so division by zero yields inf/nan
        // rather than a panic; domain checks live at the expression level
        let v = rhs.value;
        let w = self.value / v;
        let d1 = (self.d1 * v - self.value * rhs.d1) / (v * v);
        let d2 = ((self.d2 * v - self.value * rhs.d2) * v
            - 2.0 * rhs.d1 * (self.d1 * v - self.value * rhs.d1))
            / (v * v * v);
        ScalarJet::new(w, d1, d2)
    }
}

impl Neg for ScalarJet {
    type Output = ScalarJet;
    fn neg(self) -> ScalarJet {
        ScalarJet::new(-self.value, -self.d1, -self.d2)
    }
}

/// Gradient and Laplacian terms of `v^t` on a one-dimensional base, from the
/// power rules
/// `(v^t)' = t v^(t-1) v'` and
/// `(v^t)'' = t [(t-1) v^(t-2) (v')^2 + v^(t-1) v'']`.
///
/// Equals `(powf(v, t).d1, powf(v, t).d2)` componentwise.
pub fn power_rule_identities(v: ScalarJet, t_exp: f64) -> Result<(f64, f64)> {
    if v.value <= 0.0 {
        return Err(Error::Positivity {
            t: f64::NAN,
            value: v.value,
            context: "power rule identities".into(),
        });
    }
    let grad = t_exp * v.value.powf(t_exp - 1.0) * v.d1;
    let lap = t_exp
        * ((t_exp - 1.0) * v.value.powf(t_exp - 2.0) * v.d1 * v.d1
            + v.value.powf(t_exp - 1.0) * v.d2);
    Ok((grad, lap))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn square_at_three() {
        // f(t) = t^2 at t = 3
        let j = ScalarJet::variable(3.0) * ScalarJet::variable(3.0);
        assert_eq!((j.value, j.d1, j.d2), (9.0, 6.0, 2.0));
    }

    #[test]
    fn exponential_at_zero() {
        // f(t) = e^{2t} at t = 0
        let j = (ScalarJet::variable(0.0) * 2.0).exp();
        assert_eq!((j.value, j.d1, j.d2), (1.0, 2.0, 4.0));
    }

    #[test]
    fn quotient_rule_matches_recip_mul() {
        let a = ScalarJet::new(1.3, -0.4, 2.1);
        let b = ScalarJet::new(0.7, 1.9, -0.8);
        let q = a / b;
        let r = a * b.recip().unwrap();
        assert!(close(q.value, r.value, 1e-14));
        assert!(close(q.d1, r.d1, 1e-14));
        assert!(close(q.d2, r.d2, 1e-13));
    }

    #[test]
    fn power_rule_constant() {
        let (g, l) = power_rule_identities(ScalarJet::constant(1.0), 5.0).unwrap();
        assert_eq!((g, l), (0.0, 0.0));
    }

    #[test]
    fn power_rule_square_of_t() {
        // v = t at t = 2, exponent 2: (t^2)' = 2t = 4, (t^2)'' = 2
        let (g, l) = power_rule_identities(ScalarJet::variable(2.0), 2.0).unwrap();
        assert_eq!((g, l), (4.0, 2.0));
    }

    #[test]
    fn power_rule_exp_cubed() {
        // v = e^t at t = 1, exponent 3: (e^{3t})' = 3e^3, (e^{3t})'' = 9e^3
        let e = std::f64::consts::E;
        let v = ScalarJet::new(e, e, e);
        let (g, l) = power_rule_identities(v, 3.0).unwrap();
        let direct = v.powf(3.0).unwrap();
        assert!(close(g, 3.0 * e * e * e, 1e-14));
        assert!(close(l, 9.0 * e * e * e, 1e-14));
        assert!(close(g, direct.d1, 1e-12));
        assert!(close(l, direct.d2, 1e-12));
    }

    #[test]
    fn power_rule_rejects_nonpositive() {
        assert!(power_rule_identities(ScalarJet::constant(-1.0), 2.0).is_err());
        assert!(power_rule_identities(ScalarJet::constant(0.0), 2.0).is_err());
    }

    #[test]
    fn inverse_trig_jets() {
        // d/dt arcsin t = 1/sqrt(1-t^2); second derivative t/(1-t^2)^{3/2}
        let t = 0.4;
        let j = ScalarJet::variable(t).asin().unwrap();
        let s = (1.0 - t * t).sqrt();
        assert!(close(j.d1, 1.0 / s, 1e-14));
        assert!(close(j.d2, t / (s * s * s), 1e-14));

        let k = ScalarJet::variable(t).acos().unwrap();
        assert!(close(k.d1, -1.0 / s, 1e-14));
        assert!(close(k.d2, -t / (s * s * s), 1e-14));
    }
}
