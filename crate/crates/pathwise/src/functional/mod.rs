//! Causal functionals of stopped paths.
//!
//! A functional is evaluated as `F(t, x_t)` where only the path *stopped at
//! `t`* is passed in — causality is enforced by the interface shape, not by
//! inspection. Analytic derivatives are optional; the numeric probes in
//! [`probes`] compute (and cross-check) horizontal and vertical derivatives
//! from the evaluator alone.
//!
//! The built-in families in [`builtins`] carry the analytic derivatives and
//! regularity class their closed forms admit; linear combinations and
//! products inherit derivatives by linearity and the Leibniz rule.

pub mod builtins;
pub mod probes;

use crate::path::CadlagPath;
use std::sync::Arc;

/// Declared regularity class of a functional.
///
/// * `ClassM ⊂ ClassS ⊂ C12 ⊂ Generic`.
/// * `ClassS`: differentiable with strictly causal vertical derivative (the
///   second-order term of the change-of-variable formula vanishes).
/// * `ClassM`: class S with zero horizontal derivative — the pathwise
///   analogue of a martingale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FunctionalClass {
    ClassM,
    ClassS,
    C12,
    Generic,
}

impl FunctionalClass {
    /// Smallest class containing both (toward `Generic`).
    pub fn join(self, other: FunctionalClass) -> FunctionalClass {
        self.max(other)
    }
}

/// A causal functional `F(t, x_t)` with optional analytic derivatives.
///
/// The `path` argument is the stopped path `x_t` (or the left-stopped `x_{t-}`
/// where a formula calls for it); implementations must only read it.
/// Evaluations must be pure: the harness evaluates one functional at many
/// `(t, x)` points, possibly concurrently.
pub trait Functional: Send + Sync {
    fn value(&self, t: f64, path: &CadlagPath) -> f64;

    /// Analytic horizontal derivative `DF(t, x_t)`, if available.
    fn horizontal(&self, _t: f64, _path: &CadlagPath) -> Option<f64> {
        None
    }

    /// Analytic vertical derivative `∇_x F(t, x_t)`, if available.
    fn gradient(&self, _t: f64, _path: &CadlagPath) -> Option<Vec<f64>> {
        None
    }

    /// Analytic second vertical derivative, flattened row-major `m x m`.
    fn hessian(&self, _t: f64, _path: &CadlagPath) -> Option<Vec<f64>> {
        None
    }

    fn class(&self) -> FunctionalClass {
        FunctionalClass::Generic
    }

    fn name(&self) -> String {
        "functional".into()
    }
}

/// Scalar C² function with derivatives, for coordinate maps and weights.
#[derive(Clone)]
pub struct C2Fn {
    pub name: String,
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub df: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub d2f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl C2Fn {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        C2Fn {
            name: name.into(),
            f: Arc::new(f),
            df: Arc::new(df),
            d2f: Arc::new(d2f),
        }
    }

    pub fn identity() -> Self {
        C2Fn::new("identity", |u| u, |_| 1.0, |_| 0.0)
    }

    pub fn square() -> Self {
        C2Fn::new("square", |u| u * u, |u| 2.0 * u, |_| 2.0)
    }

    pub fn cube() -> Self {
        C2Fn::new("cube", |u| u * u * u, |u| 3.0 * u * u, |u| 6.0 * u)
    }

    pub fn sin() -> Self {
        C2Fn::new("sin", f64::sin, f64::cos, |u| -u.sin())
    }

    pub fn exp() -> Self {
        C2Fn::new("exp", f64::exp, f64::exp, f64::exp)
    }

    pub fn constant(c: f64) -> Self {
        C2Fn::new(format!("const({c})"), move |_| c, |_| 0.0, |_| 0.0)
    }

    pub fn affine(a: f64, b: f64) -> Self {
        C2Fn::new(
            format!("affine({a},{b})"),
            move |u| a + b * u,
            move |_| b,
            |_| 0.0,
        )
    }
}

/// C² function of a vector with gradient and Hessian (flattened row-major).
#[derive(Clone)]
pub struct VecC2Fn {
    pub name: String,
    pub f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub grad: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    pub hess: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl VecC2Fn {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        hess: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        VecC2Fn {
            name: name.into(),
            f: Arc::new(f),
            grad: Arc::new(grad),
            hess: Arc::new(hess),
        }
    }

    /// `|u|²` with gradient `2u` and Hessian `2I`.
    pub fn square_norm() -> Self {
        VecC2Fn::new(
            "square",
            |u| u.iter().map(|v| v * v).sum(),
            |u| u.iter().map(|v| 2.0 * v).collect(),
            |u| {
                let m = u.len();
                let mut h = vec![0.0; m * m];
                for d in 0..m {
                    h[d * m + d] = 2.0;
                }
                h
            },
        )
    }

    /// `Σ u_i` with unit gradient — its Föllmer primitive is `x(t) - x(0)`.
    pub fn coordinate_sum() -> Self {
        VecC2Fn::new(
            "sum",
            |u| u.iter().sum(),
            |u| vec![1.0; u.len()],
            |u| vec![0.0; u.len() * u.len()],
        )
    }

    /// Lift a scalar C² function applied to the first coordinate.
    pub fn from_scalar(g: C2Fn) -> Self {
        let name = g.name.clone();
        let f = g.f.clone();
        let df = g.df.clone();
        let d2f = g.d2f.clone();
        VecC2Fn::new(
            name,
            move |u: &[f64]| f(u[0]),
            move |u: &[f64]| {
                let mut out = vec![0.0; u.len()];
                out[0] = df(u[0]);
                out
            },
            move |u: &[f64]| {
                let m = u.len();
                let mut out = vec![0.0; m * m];
                out[0] = d2f(u[0]);
                out
            },
        )
    }
}

/// Ad-hoc functional from a closure, for tests and demos. Carries no
/// analytic derivatives unless attached.
pub struct ClosureFunctional {
    pub name: String,
    pub f: Box<dyn Fn(f64, &CadlagPath) -> f64 + Send + Sync>,
    pub declared: FunctionalClass,
}

impl ClosureFunctional {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64, &CadlagPath) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ClosureFunctional {
            name: name.into(),
            f: Box::new(f),
            declared: FunctionalClass::Generic,
        }
    }
}

impl Functional for ClosureFunctional {
    fn value(&self, t: f64, path: &CadlagPath) -> f64 {
        (self.f)(t, path)
    }

    fn class(&self) -> FunctionalClass {
        self.declared
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

/// `Σ c_k F_k`. Derivatives are combined when every term provides them.
pub struct LinComb {
    pub terms: Vec<(f64, Arc<dyn Functional>)>,
}

impl LinComb {
    pub fn new(terms: Vec<(f64, Arc<dyn Functional>)>) -> Self {
        LinComb { terms }
    }
}

impl Functional for LinComb {
    fn value(&self, t: f64, path: &CadlagPath) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.value(t, path)).sum()
    }

    fn horizontal(&self, t: f64, path: &CadlagPath) -> Option<f64> {
        let mut acc = 0.0;
        for (c, f) in &self.terms {
            acc += c * f.horizontal(t, path)?;
        }
        Some(acc)
    }

    fn gradient(&self, t: f64, path: &CadlagPath) -> Option<Vec<f64>> {
        let mut acc: Option<Vec<f64>> = None;
        for (c, f) in &self.terms {
            let g = f.gradient(t, path)?;
            match &mut acc {
                None => acc = Some(g.iter().map(|v| c * v).collect()),
                Some(a) => {
                    for (x, y) in a.iter_mut().zip(&g) {
                        *x += c * y;
                    }
                }
            }
        }
        acc
    }

    fn hessian(&self, t: f64, path: &CadlagPath) -> Option<Vec<f64>> {
        let mut acc: Option<Vec<f64>> = None;
        for (c, f) in &self.terms {
            let h = f.hessian(t, path)?;
            match &mut acc {
                None => acc = Some(h.iter().map(|v| c * v).collect()),
                Some(a) => {
                    for (x, y) in a.iter_mut().zip(&h) {
                        *x += c * y;
                    }
                }
            }
        }
        acc
    }

    fn class(&self) -> FunctionalClass {
        self.terms
            .iter()
            .map(|(_, f)| f.class())
            .fold(FunctionalClass::ClassM, FunctionalClass::join)
    }

    fn name(&self) -> String {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(c, f)| format!("{c}*{}", f.name()))
            .collect();
        parts.join(" + ")
    }
}

/// `F·G` with Leibniz-rule derivatives.
pub struct Product {
    pub a: Arc<dyn Functional>,
    pub b: Arc<dyn Functional>,
}

impl Product {
    pub fn new(a: Arc<dyn Functional>, b: Arc<dyn Functional>) -> Self {
        Product { a, b }
    }
}

impl Functional for Product {
    fn value(&self, t: f64, path: &CadlagPath) -> f64 {
        self.a.value(t, path) * self.b.value(t, path)
    }

    fn horizontal(&self, t: f64, path: &CadlagPath) -> Option<f64> {
        let (da, db) = (self.a.horizontal(t, path)?, self.b.horizontal(t, path)?);
        Some(self.a.value(t, path) * db + self.b.value(t, path) * da)
    }

    fn gradient(&self, t: f64, path: &CadlagPath) -> Option<Vec<f64>> {
        let (ga, gb) = (self.a.gradient(t, path)?, self.b.gradient(t, path)?);
        let (va, vb) = (self.a.value(t, path), self.b.value(t, path));
        Some(ga.iter().zip(&gb).map(|(x, y)| va * y + vb * x).collect())
    }

    fn hessian(&self, t: f64, path: &CadlagPath) -> Option<Vec<f64>> {
        let (ga, gb) = (self.a.gradient(t, path)?, self.b.gradient(t, path)?);
        let (ha, hb) = (self.a.hessian(t, path)?, self.b.hessian(t, path)?);
        let (va, vb) = (self.a.value(t, path), self.b.value(t, path));
        let m = ga.len();
        let mut out = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                out[i * m + j] =
                    va * hb[i * m + j] + vb * ha[i * m + j] + ga[i] * gb[j] + gb[i] * ga[j];
            }
        }
        Some(out)
    }

    fn class(&self) -> FunctionalClass {
        // products stay C^{1,2} (an algebra) but not class S/M
        self.a
            .class()
            .join(self.b.class())
            .join(FunctionalClass::C12)
    }

    fn name(&self) -> String {
        format!("({})*({})", self.a.name(), self.b.name())
    }
}
