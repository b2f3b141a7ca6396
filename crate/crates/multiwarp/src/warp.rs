//! Warping functions as expression trees over C² primitives, evaluated to
//! second-order jets.
//!
//! Trees built from the serializable primitives round-trip through the TOML
//! fragment schema used by run configs (`{ kind = "power", base = {...},
//! p = 0.5 }`). Functions that only exist numerically (the inverse of the
//! lapse transform) enter as opaque nodes that supply their own jets; those
//! do not serialize.

use crate::error::{Error, Result};
use crate::jet::ScalarJet;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Open interval `(lo, hi)`, allowing infinite endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Margin used to clip grids away from the open endpoints.
pub const ENDPOINT_MARGIN: f64 = 1e-9;

/// Width of the window substituted for an infinite endpoint when sampling.
const SAMPLING_SPAN: f64 = 1e3;

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::Validation(format!(
                "interval ({lo}, {hi}) is empty"
            )));
        }
        Ok(Interval { lo, hi })
    }

    /// Strict interior membership (endpoints are outside).
    pub fn contains(&self, t: f64) -> bool {
        t > self.lo && t < self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Finite closed window inside the interval, clipping open and infinite
    /// endpoints. Infinite ends are replaced by a window of width
    /// [`SAMPLING_SPAN`].
    pub fn finite_window(&self) -> (f64, f64) {
        let lo = if self.lo.is_finite() {
            self.lo + ENDPOINT_MARGIN
        } else if self.hi.is_finite() {
            self.hi - SAMPLING_SPAN
        } else {
            -SAMPLING_SPAN / 2.0
        };
        let hi = if self.hi.is_finite() {
            self.hi - ENDPOINT_MARGIN
        } else {
            lo + SAMPLING_SPAN
        };
        (lo, hi)
    }

    /// `n` evenly spaced points spanning the clipped interval (inclusive of
    /// the clipped endpoints).
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.finite_window();
        if n <= 1 {
            return vec![0.5 * (lo + hi)];
        }
        let step = (hi - lo) / (n - 1) as f64;
        (0..n).map(|i| lo + step * i as f64).collect()
    }
}

/// Supplier of jets for functions that are not expression trees.
pub trait JetSource: Send + Sync {
    fn jet(&self, t: f64) -> Result<ScalarJet>;
}

/// Named opaque node wrapping a [`JetSource`].
#[derive(Clone)]
pub struct OpaqueFn {
    pub name: String,
    source: Arc<dyn JetSource>,
}

impl OpaqueFn {
    pub fn new(name: impl Into<String>, source: Arc<dyn JetSource>) -> Self {
        OpaqueFn {
            name: name.into(),
            source,
        }
    }
}

impl fmt::Debug for OpaqueFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OpaqueFn({})", self.name)
    }
}

/// Expression tree over C² primitives.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expr {
    Const { value: f64 },
    /// The coordinate itself.
    T,
    /// `a*t + b`.
    Affine { a: f64, b: f64 },
    /// `base^p` for real `p`; requires `base > 0`.
    Power { base: Box<Expr>, p: f64 },
    Sqrt { arg: Box<Expr> },
    Exp { arg: Box<Expr> },
    Sin { arg: Box<Expr> },
    Cos { arg: Box<Expr> },
    ArcSin { arg: Box<Expr> },
    ArcCos { arg: Box<Expr> },
    Sum { terms: Vec<Expr> },
    Product { factors: Vec<Expr> },
    Quotient { num: Box<Expr>, den: Box<Expr> },
    /// `outer(inner(t))`; `outer` is an expression in its own coordinate.
    Compose { outer: Box<Expr>, inner: Box<Expr> },
    #[serde(skip)]
    Opaque(OpaqueFn),
}

impl Expr {
    pub fn t() -> Self {
        Expr::T
    }

    pub fn constant(value: f64) -> Self {
        Expr::Const { value }
    }

    pub fn affine(a: f64, b: f64) -> Self {
        Expr::Affine { a, b }
    }

    pub fn power(self, p: f64) -> Self {
        Expr::Power {
            base: Box::new(self),
            p,
        }
    }

    pub fn sqrt(self) -> Self {
        Expr::Sqrt {
            arg: Box::new(self),
        }
    }

    pub fn exp(self) -> Self {
        Expr::Exp {
            arg: Box::new(self),
        }
    }

    pub fn sin(self) -> Self {
        Expr::Sin {
            arg: Box::new(self),
        }
    }

    pub fn cos(self) -> Self {
        Expr::Cos {
            arg: Box::new(self),
        }
    }

    pub fn asin(self) -> Self {
        Expr::ArcSin {
            arg: Box::new(self),
        }
    }

    pub fn acos(self) -> Self {
        Expr::ArcCos {
            arg: Box::new(self),
        }
    }

    pub fn sum(terms: Vec<Expr>) -> Self {
        Expr::Sum { terms }
    }

    pub fn product(factors: Vec<Expr>) -> Self {
        Expr::Product { factors }
    }

    pub fn quotient(num: Expr, den: Expr) -> Self {
        Expr::Quotient {
            num: Box::new(num),
            den: Box::new(den),
        }
    }

    pub fn compose(outer: Expr, inner: Expr) -> Self {
        Expr::Compose {
            outer: Box::new(outer),
            inner: Box::new(inner),
        }
    }

    pub fn opaque(name: impl Into<String>, source: Arc<dyn JetSource>) -> Self {
        Expr::Opaque(OpaqueFn::new(name, source))
    }

    pub fn scale(self, c: f64) -> Self {
        Expr::product(vec![Expr::constant(c), self])
    }

    pub fn add_const(self, c: f64) -> Self {
        Expr::sum(vec![self, Expr::constant(c)])
    }

    /// Evaluate value and first two derivatives at `t`.
    pub fn jet(&self, t: f64) -> Result<ScalarJet> {
        let at = |e: Result<ScalarJet>| -> Result<ScalarJet> {
            e.map_err(|err| match err {
                Error::Domain { reason, .. } => Error::Domain { t, reason },
                other => other,
            })
        };
        match self {
            Expr::Const { value } => Ok(ScalarJet::constant(*value)),
            Expr::T => Ok(ScalarJet::variable(t)),
            Expr::Affine { a, b } => Ok(ScalarJet::new(a * t + b, *a, 0.0)),
            Expr::Power { base, p } => at(base.jet(t)?.powf(*p)),
            Expr::Sqrt { arg } => at(arg.jet(t)?.sqrt()),
            Expr::Exp { arg } => Ok(arg.jet(t)?.exp()),
            Expr::Sin { arg } => Ok(arg.jet(t)?.sin()),
            Expr::Cos { arg } => Ok(arg.jet(t)?.cos()),
            Expr::ArcSin { arg } => at(arg.jet(t)?.asin()),
            Expr::ArcCos { arg } => at(arg.jet(t)?.acos()),
            Expr::Sum { terms } => {
                let mut acc = ScalarJet::constant(0.0);
                for term in terms {
                    acc = acc + term.jet(t)?;
                }
                Ok(acc)
            }
            Expr::Product { factors } => {
                let mut acc = ScalarJet::constant(1.0);
                for factor in factors {
                    acc = acc * factor.jet(t)?;
                }
                Ok(acc)
            }
            Expr::Quotient { num, den } => {
                let d = den.jet(t)?;
                if d.value == 0.0 {
                    return Err(Error::Domain {
                        t,
                        reason: "quotient denominator vanishes".into(),
                    });
                }
                Ok(num.jet(t)? / d)
            }
            Expr::Compose { outer, inner } => {
                let ij = inner.jet(t)?;
                let oj = outer.jet(ij.value)?;
                Ok(ScalarJet::chain(oj, ij))
            }
            Expr::Opaque(op) => op.source.jet(t),
        }
    }
}

/// A warping function: an expression tree restricted to an open interval on
/// which it must stay positive.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WarpFn {
    expr: Expr,
    domain: Interval,
}

impl WarpFn {
    pub fn new(expr: Expr, domain: Interval) -> Self {
        WarpFn { expr, domain }
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// Jet at `t`, checking only the domain.
    pub fn jet(&self, t: f64) -> Result<ScalarJet> {
        if !self.domain.contains(t) {
            return Err(Error::Domain {
                t,
                reason: format!(
                    "outside open domain ({}, {})",
                    self.domain.lo, self.domain.hi
                ),
            });
        }
        self.expr.jet(t)
    }

    /// Jet at `t`, additionally requiring positivity of the value.
    pub fn warp_jet(&self, t: f64) -> Result<ScalarJet> {
        let jet = self.jet(t)?;
        if jet.value <= 0.0 {
            return Err(Error::Positivity {
                t,
                value: jet.value,
                context: "warping function".into(),
            });
        }
        Ok(jet)
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        Ok(self.jet(t)?.value)
    }
}

/// Spec-level alias for [`WarpFn::jet`].
pub fn eval_jet(f: &WarpFn, t: f64) -> Result<ScalarJet> {
    f.jet(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    /// Central finite differences of the value, with Richardson refinement
    /// over a step sweep. Used only as an oracle against exact jets.
    fn fd_check(expr: &Expr, t: f64) -> (f64, f64) {
        let mut best_d1 = f64::NAN;
        let mut best_d2 = f64::NAN;
        for h in [1e-3, 1e-4, 1e-5] {
            let f = |x: f64| expr.jet(x).unwrap().value;
            let d1 = (f(t + h) - f(t - h)) / (2.0 * h);
            let d1h = (f(t + h / 2.0) - f(t - h / 2.0)) / h;
            let d2 = (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
            let d2h = (f(t + h / 2.0) - 2.0 * f(t) + f(t - h / 2.0)) / (h * h / 4.0);
            let r1 = (4.0 * d1h - d1) / 3.0;
            let r2 = (4.0 * d2h - d2) / 3.0;
            if h == 1e-4 {
                best_d1 = r1;
                best_d2 = r2;
            }
        }
        (best_d1, best_d2)
    }

    #[test]
    fn affine_and_power_jets() {
        let e = Expr::t().power(2.0);
        let j = e.jet(3.0).unwrap();
        assert_eq!((j.value, j.d1, j.d2), (9.0, 6.0, 2.0));
    }

    #[test]
    fn composed_expression_matches_finite_differences() {
        // sqrt(2/t - 1) on (0, 2), the closed-form interior warp shape
        let e = Expr::quotient(Expr::constant(2.0), Expr::t())
            .add_const(-1.0)
            .sqrt();
        let t = 1.0;
        let j = e.jet(t).unwrap();
        assert!(close(j.value, 1.0, 1e-15));
        let (d1, d2) = fd_check(&e, t);
        assert!(close(j.d1, d1, 1e-6), "d1 {} vs fd {}", j.d1, d1);
        assert!(close(j.d2, d2, 1e-4), "d2 {} vs fd {}", j.d2, d2);
    }

    #[test]
    fn trig_composition_matches_finite_differences() {
        // 2*arccos(sqrt((2 - t)/2)) - sqrt(t(2 - t)), the closed F of the
        // interior preset with m = 1
        let e = Expr::sum(vec![
            Expr::quotient(Expr::affine(-1.0, 2.0), Expr::constant(2.0))
                .sqrt()
                .acos()
                .scale(2.0),
            Expr::product(vec![Expr::t(), Expr::affine(-1.0, 2.0)])
                .sqrt()
                .scale(-1.0),
        ]);
        for t in [0.4, 1.0, 1.5] {
            let j = e.jet(t).unwrap();
            let (d1, d2) = fd_check(&e, t);
            assert!(close(j.d1, d1, 1e-6));
            assert!(close(j.d2, d2, 1e-4));
        }
    }

    #[test]
    fn domain_and_positivity_checks() {
        let w = WarpFn::new(Expr::t(), Interval::new(-1.0, 1.0).unwrap());
        assert!(matches!(w.jet(2.0), Err(Error::Domain { .. })));
        assert!(matches!(w.jet(1.0), Err(Error::Domain { .. })));
        assert!(matches!(
            w.warp_jet(-0.5),
            Err(Error::Positivity { .. })
        ));
        assert!(w.warp_jet(0.5).is_ok());
    }

    #[test]
    fn toml_round_trip() {
        let e = Expr::t().power(0.5);
        let s = toml::to_string(&e).unwrap();
        assert!(s.contains("kind = \"power\""));
        let back: Expr = toml::from_str(&s).unwrap();
        let a = e.jet(2.0).unwrap();
        let b = back.jet(2.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn opaque_nodes_do_not_serialize() {
        struct Id;
        impl JetSource for Id {
            fn jet(&self, t: f64) -> Result<ScalarJet> {
                Ok(ScalarJet::variable(t))
            }
        }
        let e = Expr::opaque("identity", Arc::new(Id));
        assert!(toml::to_string(&e).is_err());
        assert_eq!(e.jet(1.5).unwrap(), ScalarJet::variable(1.5));
    }

    #[test]
    fn grid_respects_margins() {
        let i = Interval::new(0.0, 1.0).unwrap();
        let g = i.grid(8);
        assert_eq!(g.len(), 8);
        assert!(g[0] > 0.0 && g[7] < 1.0);
        let inf = Interval::new(0.0, f64::INFINITY).unwrap();
        let g = inf.grid(4);
        assert!(g.iter().all(|t| t.is_finite() && *t > 0.0));
    }
}
