//! Built-in functional families with analytic derivatives.
//!
//! The integral-type families (`qv_integral`, `follmer_grad`, `bracket_1form`,
//! `qv_eval`) are finite-level surrogates: their values are left Riemann /
//! quadratic sums along an internal partition carried by the functional, so a
//! builtin is a genuine causal functional of whatever stopped path it is
//! handed. Their attached derivative formulas are the closed forms of the
//! limits, expressed through the argument path's own one-sided values (e.g.
//! `∇_x ∫(∇f∘x)dx = ∇f(x(t-))`), which the numeric probes reproduce exactly
//! on step paths once the internal grid separates the jumps.

use super::{C2Fn, Functional, FunctionalClass, VecC2Fn};
use crate::partition::Partition;
use crate::path::CadlagPath;
use std::sync::Arc;

/// Matrix-valued integrand `φ(t, u)` for quadratic-variation integrals,
/// returning a flattened `m x m` matrix for a path value `u`.
#[derive(Clone)]
pub struct MatFn {
    pub name: String,
    pub f: Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>,
}

impl MatFn {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        MatFn {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    /// `φ ≡ I`.
    pub fn identity() -> Self {
        MatFn::new("identity", |_t, u: &[f64]| {
            let m = u.len();
            let mut out = vec![0.0; m * m];
            for d in 0..m {
                out[d * m + d] = 1.0;
            }
            out
        })
    }

    /// Scalar integrand `g(u_1)` as a 1x1 matrix function.
    pub fn from_scalar(g: C2Fn) -> Self {
        let f = g.f.clone();
        MatFn::new(g.name.clone(), move |_t, u: &[f64]| vec![f(u[0])])
    }
}

/// `F(t, x_t) = f(x(t))`.
pub struct Eval {
    f: VecC2Fn,
}

impl Functional for Eval {
    fn value(&self, t: f64, path: &CadlagPath) -> f64 {
        (self.f.f)(&path.eval(t))
    }

    fn horizontal(&self, _t: f64, _path: &CadlagPath) -> Option<f64> {
        // the stopped path is frozen after t
        Some(0.0)
    }

    fn gradient(&self, t: f64, path: &CadlagPath) -> Option<Vec<f64>> {
        Some((self.f.grad)(&path.eval(t)))
    }

    fn hessian(&self, t: f64, path: &CadlagPath) -> Option<Vec<f64>> {
        Some((self.f.hess)(&path.eval(t)))
    }

    fn class(&self) -> FunctionalClass {
        FunctionalClass::C12
    }

    fn name(&self) -> String {
        format!("eval({})", self.f.name)
    }
}

/// `F(t, x_t) = α + β·x(t)` — the only path-independent class-M family.
pub struct MarkovAffine {
    pub alpha: f64,
    pub beta: Vec<f64>,
}

impl Functional for MarkovAffine {
    fn value(&self, t: f64, path: &CadlagPath) -> f64 {
        let v = path.eval(t);
        self.alpha + self.beta.iter().zip(&v).map(|(b, x)| b * x).sum::<f64>()
    }

    fn horizontal(&self, _t: f64, _path: &CadlagPath) -> Option<f64> {
        Some(0.0)
    }

    fn gradient(&self, _t: f64, _path: &CadlagPath) -> Option<Vec<f64>> {
        Some(self.beta.clone())
    }

    fn hessian(&self, _t: f64, path: &CadlagPath) -> Option<Vec<f64>> {
        let m = path.dim();
        Some(vec![0.0; m * m])
    }

    fn class(&self) -> FunctionalClass {
        FunctionalClass::ClassM
    }

    fn name(&self) -> String {
        format!("affine({}, {:?})", self.alpha, self.beta)
    }
}

/// Path-independent time function `F(t, x_t) = g(t)`.
pub struct TimeFn {
    g: C2Fn,
}

impl Functional for TimeFn {
    fn value(&self, t: f64, _path: &CadlagPath) -> f64 {
        (self.g.f)(t)
    }

    fn horizontal(&self, t: f64, _path: &CadlagPath) -> Option<f64> {
        Some((self.g.df)(t))
    }

    fn gradient(&self, _t: f64, path: &CadlagPath) -> Option<Vec<f64>> {
        Some(vec![0.0; path.dim()])
    }

    fn hessian(&self, _t: f64, path: &CadlagPath) -> Option<Vec<f64>> {
        let m = path.dim();
        Some(vec![0.0; m * m])
    }

    fn class(&self) -> FunctionalClass {
        FunctionalClass::ClassS
    }

    fn name(&self) -> String {
        format!("time({})", self.g.name)
    }
}

fn outer(d: &[f64]) -> Vec<f64> {
    let m = d.len();
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            out[i * m + j] = d[i] * d[j];
        }
    }
    out
}

/// Quadratic sum of the argument path along the internal grid, up to its
/// stopping time (increments of a stopped path vanish beyond it).
fn qv_value(path: &CadlagPath, grid: &Partition, t: f64) -> Vec<f64> {
    let m = path.dim();
    let pts = grid.points();
    let vals = path.values_on_grid(pts);
    let mut acc = vec![0.0; m * m];
    for i in 0..pts.len() - 1 {
        if pts[i] > t {
            break;
        }
        for a in 0..m {
            let da = vals[(i + 1) * m + a] - vals[i * m + a];
            if da == 0.0 {
                continue;
            }
            for b in 0..m {
                let db = vals[(i + 1) * m + b] - vals[i * m + b];
                acc[a * m + b] += da * db;
            }
        }
    }
    acc
}

/// `F(t, x_t) = f([x](t))` with the quadratic variation evaluated along the
/// internal partition.
pub struct QvEval {
    f: VecC2Fn,
    grid: Partition,
}

impl Functional for QvEval {
    fn value(&self, t: f64, path: &CadlagPath) -> f64 {
        (self.f.f)(&qv_value(path, &self.grid, t))
    }

    fn horizontal(&self, _t: f64, _path: &CadlagPath) -> Option<f64> {
        Some(0.0)
    }

    fn gradient(&self, t: f64, path: &CadlagPath) -> Option<Vec<f64>> {
        let m = path.dim();
        let q = qv_value(path, &self.grid, t);
        let g = (self.f.grad)(&q);
        let jump = path.jump_at(t);
        let mut out = vec![0.0; m];
        for d in 0..m {
            for j in 0..m {
                out[d] += (g[d * m + j] + g[j * m + d]) * jump[j];
            }
        }
        Some(out)
    }

    fn hessian(&self, t: f64, path: &CadlagPath) -> Option<Vec<f64>> {
        if path.dim() != 1 {
            return None;
        }
        let q = qv_value(path, &self.grid, t);
        let dj = path.jump_at(t)[0];
        Some(vec![
            (self.f.hess)(&q)[0] * 4.0 * dj * dj + 2.0 * (self.f.grad)(&q)[0],
        ])
    }

    fn class(&self) -> FunctionalClass {
        FunctionalClass::C12
    }

    fn name(&self) -> String {
        format!("qv_eval({})", self.f.name)
    }
}

/// `F(t, x_t) = ∫_0^t φ(s, x_{s-}) d[x](s)` as a quadratic Riemann sum along
/// the internal grid: `Σ <φ(t_i, x(t_i)), Δ_i x Δ_i x'>`.
pub struct QvIntegral {
    phi: MatFn,
    grid: Partition,
}

impl Functional for QvIntegral {
    fn value(&self, t: f64, path: &CadlagPath) -> f64 {
        let m = path.dim();
        let pts = self.grid.points();
        let vals = path.values_on_grid(pts);
        let mut acc = 0.0;
        for i in 0..pts.len() - 1 {
            if pts[i] > t {
                break;
            }
            let d: Vec<f64> = (0..m)
                .map(|a| vals[(i + 1) * m + a] - vals[i * m + a])
                .collect();
            if d.iter().all(|v| *v == 0.0) {
                continue;
            }
            let w = (self.phi.f)(pts[i], &vals[i * m..(i + 1) * m]);
            let o = outer(&d);
            acc += w.iter().zip(&o).map(|(a, b)| a * b).sum::<f64>();
        }
        acc
    }

    fn horizontal(&self, _t: f64, _path: &CadlagPath) -> Option<f64> {
        Some(0.0)
    }

    fn gradient(&self, t: f64, path: &CadlagPath) -> Option<Vec<f64>> {
        let m = path.dim();
        let w = (self.phi.f)(t, &path.eval_left(t));
        let jump = path.jump_at(t);
        let mut out = vec![0.0; m];
        for d in 0..m {
            for j in 0..m {
                out[d] += (w[d * m + j] + w[j * m + d]) * jump[j];
            }
        }
        Some(out)
    }

    fn hessian(&self, t: f64, path: &CadlagPath) -> Option<Vec<f64>> {
        let m = path.dim();
        let w = (self.phi.f)(t, &path.eval_left(t));
        let mut out = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                out[i * m + j] = w[i * m + j] + w[j * m + i];
            }
        }
        Some(out)
    }

    fn class(&self) -> FunctionalClass {
        FunctionalClass::C12
    }

    fn name(&self) -> String {
        format!("qv_integral({})", self.phi.name)
    }
}

/// `F(t, x_t) = ∫_0^t (∇f∘x) dx` as a left Riemann sum along the internal
/// grid. Vertical derivative `∇f(x(t-))`; class M.
pub struct FollmerGrad {
    f: VecC2Fn,
    grid: Partition,
}

impl Functional for FollmerGrad {
    fn value(&self, t: f64, path: &CadlagPath) -> f64 {
        let m = path.dim();
        let pts = self.grid.points();
        let vals = path.values_on_grid(pts);
        let mut acc = 0.0;
        for i in 0..pts.len() - 1 {
            if pts[i] > t {
                break;
            }
            let u = &vals[i * m..(i + 1) * m];
            let g = (self.f.grad)(u);
            for a in 0..m {
                let da = vals[(i + 1) * m + a] - vals[i * m + a];
                if da != 0.0 {
                    acc += g[a] * da;
                }
            }
        }
        acc
    }

    fn horizontal(&self, _t: f64, _path: &CadlagPath) -> Option<f64> {
        Some(0.0)
    }

    fn gradient(&self, t: f64, path: &CadlagPath) -> Option<Vec<f64>> {
        Some((self.f.grad)(&path.eval_left(t)))
    }

    fn hessian(&self, _t: f64, path: &CadlagPath) -> Option<Vec<f64>> {
        let m = path.dim();
        Some(vec![0.0; m * m])
    }

    fn class(&self) -> FunctionalClass {
        FunctionalClass::ClassM
    }

    fn name(&self) -> String {
        format!("follmer_grad({})", self.f.name)
    }
}

/// The path-dependent 1-form primitive
/// `F(t, x_t) = Σ_i ( ∫_0^t (x_i(t) - x_i(s)) f_i(x_i(s)) dx_i - ∫_0^t f_i∘x_i d[x_i] )`,
/// evaluated through its expansion
/// `Σ_i ( x_i(t)·A_i - B_i - C_i )` with `A_i = ∫ f_i∘x_i dx_i`,
/// `B_i = ∫ x_i f_i∘x_i dx_i`, `C_i = ∫ f_i∘x_i d[x_i]` (all internal-grid
/// sums). Vertical derivative: component `i` is `A_i` evaluated at `t-`;
/// class M.
pub struct OneForm {
    fs: Vec<C2Fn>,
    grid: Partition,
}

impl OneForm {
    fn sums(&self, path: &CadlagPath) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let m = path.dim();
        assert_eq!(
            m,
            self.fs.len(),
            "one-form needs one function per coordinate"
        );
        let pts = self.grid.points();
        let vals = path.values_on_grid(pts);
        let mut a = vec![0.0; m];
        let mut b = vec![0.0; m];
        let mut c = vec![0.0; m];
        for i in 0..pts.len() - 1 {
            for d in 0..m {
                let u = vals[i * m + d];
                let inc = vals[(i + 1) * m + d] - u;
                if inc == 0.0 {
                    continue;
                }
                let fu = (self.fs[d].f)(u);
                a[d] += fu * inc;
                b[d] += u * fu * inc;
                c[d] += fu * inc * inc;
            }
        }
        (a, b, c)
    }
}

impl Functional for OneForm {
    fn value(&self, t: f64, path: &CadlagPath) -> f64 {
        let m = path.dim();
        let (a, b, c) = self.sums(path);
        let xt = path.eval(t);
        (0..m).map(|d| xt[d] * a[d] - b[d] - c[d]).sum()
    }

    fn horizontal(&self, _t: f64, _path: &CadlagPath) -> Option<f64> {
        Some(0.0)
    }

    fn gradient(&self, t: f64, path: &CadlagPath) -> Option<Vec<f64>> {
        // (∫ f_i ∘ x_i dx_i)(t-): the running sum along the left-stopped path
        let z = path.stop_left(t);
        let (a, _, _) = self.sums(&z);
        Some(a)
    }

    fn hessian(&self, _t: f64, path: &CadlagPath) -> Option<Vec<f64>> {
        let m = path.dim();
        Some(vec![0.0; m * m])
    }

    fn class(&self) -> FunctionalClass {
        FunctionalClass::ClassM
    }

    fn name(&self) -> String {
        let names: Vec<&str> = self.fs.iter().map(|f| f.name.as_str()).collect();
        format!("one_form({})", names.join(","))
    }
}

// --- constructors -----------------------------------------------------------

pub fn eval(f: VecC2Fn) -> Arc<dyn Functional> {
    Arc::new(Eval { f })
}

pub fn eval_scalar(f: C2Fn) -> Arc<dyn Functional> {
    eval(VecC2Fn::from_scalar(f))
}

pub fn markov_affine(alpha: f64, beta: Vec<f64>) -> Arc<dyn Functional> {
    Arc::new(MarkovAffine { alpha, beta })
}

pub fn time_fn(g: C2Fn) -> Arc<dyn Functional> {
    Arc::new(TimeFn { g })
}

pub fn qv_eval(f: VecC2Fn, grid: Partition) -> Arc<dyn Functional> {
    Arc::new(QvEval { f, grid })
}

pub fn qv_integral(phi: MatFn, grid: Partition) -> Arc<dyn Functional> {
    Arc::new(QvIntegral { phi, grid })
}

pub fn follmer_grad(f: VecC2Fn, grid: Partition) -> Arc<dyn Functional> {
    Arc::new(FollmerGrad { f, grid })
}

pub fn bracket_1form(fs: Vec<C2Fn>, grid: Partition) -> Arc<dyn Functional> {
    Arc::new(OneForm { fs, grid })
}

pub fn lin_comb(terms: Vec<(f64, Arc<dyn Functional>)>) -> Arc<dyn Functional> {
    Arc::new(super::LinComb::new(terms))
}

pub fn product(a: Arc<dyn Functional>, b: Arc<dyn Functional>) -> Arc<dyn Functional> {
    Arc::new(super::Product::new(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::Partition;
    use crate::quadvar::qv_level1;

    fn grid(n: u32) -> Partition {
        Partition::dyadic(1.0, n).unwrap()
    }

    #[test]
    fn markov_affine_example() {
        let f = markov_affine(1.0, vec![2.0]);
        let x = CadlagPath::indicator(0.5, 3.0, 1.0).unwrap();
        assert_eq!(f.value(0.7, &x.stop(0.7)), 7.0);
        assert_eq!(f.value(0.2, &x.stop(0.2)), 1.0);
        assert_eq!(f.class(), FunctionalClass::ClassM);
    }

    #[test]
    fn follmer_grad_left_values_kill_single_jump() {
        // integrand 2x(t-) sees only the pre-jump value on a single-jump path
        let f = follmer_grad(VecC2Fn::square_norm(), grid(8));
        let x = CadlagPath::indicator(0.5, 3.0, 1.0).unwrap();
        for t in [0.6, 1.0] {
            assert_eq!(f.value(t, &x.stop(t)), 0.0);
        }
        // gradient is 2x(t-)
        let g = f.gradient(0.5, &x.stop(0.5)).unwrap();
        assert_eq!(g, vec![0.0]);
        let g2 = f.gradient(0.9, &x.stop(0.9)).unwrap();
        assert_eq!(g2, vec![6.0]);
    }

    #[test]
    fn follmer_grad_telescopes_on_two_jump_path() {
        // Σ 2x(t_i)Δ_i x = x(T)² - x(0)² - Σ(Δ_i x)², exact once the grid
        // separates the jumps
        let x = CadlagPath::step_path(&[(0.25, vec![1.0]), (0.75, vec![2.0])], 1, 1.0).unwrap();
        let f = follmer_grad(VecC2Fn::square_norm(), grid(10));
        let value = f.value(1.0, &x);
        let q = qv_level1(&x, &grid(10), 1.0).unwrap();
        let expect = x.eval1(1.0).powi(2) - x.eval1(0.0).powi(2) - q;
        assert!((value - expect).abs() < 1e-12);
    }

    #[test]
    fn qv_integral_identity_reproduces_quadratic_sum() {
        let x = CadlagPath::step_path(&[(0.25, vec![1.0]), (0.75, vec![2.0])], 1, 1.0).unwrap();
        let f = qv_integral(MatFn::identity(), grid(9));
        for t in [0.3, 0.8, 1.0] {
            let v = f.value(t, &x.stop(t));
            let q = qv_level1(&x.stop(t), &grid(9), t).unwrap();
            assert_eq!(v, q);
        }
    }

    #[test]
    fn qv_integral_gradient_has_jump_factor() {
        let x = CadlagPath::indicator(0.5, 3.0, 1.0).unwrap();
        let f = qv_integral(MatFn::identity(), grid(8));
        // at the jump: (φ+φ')Δx = 2·3
        let g = f.gradient(0.5, &x.stop(0.5)).unwrap();
        assert_eq!(g, vec![6.0]);
        // on the left-stopped path the jump is gone
        let gl = f.gradient(0.5, &x.stop_left(0.5)).unwrap();
        assert_eq!(gl, vec![0.0]);
        // hessian is φ+φ'
        assert_eq!(f.hessian(0.9, &x.stop(0.9)).unwrap(), vec![2.0]);
    }

    #[test]
    fn qv_eval_trace_matches_qv_integral_identity() {
        let x = CadlagPath::step_path(&[(0.3, vec![1.5])], 1, 1.0).unwrap();
        let tr = qv_eval(VecC2Fn::from_scalar(C2Fn::identity()), grid(8));
        let qi = qv_integral(MatFn::identity(), grid(8));
        for t in [0.2, 0.5, 1.0] {
            assert_eq!(tr.value(t, &x.stop(t)), qi.value(t, &x.stop(t)));
        }
    }

    #[test]
    fn one_form_zero_function_vanishes() {
        let x = CadlagPath::step_path(&[(0.3, vec![1.5])], 1, 1.0).unwrap();
        let f = bracket_1form(vec![C2Fn::constant(0.0)], grid(8));
        assert_eq!(f.value(1.0, &x), 0.0);
        assert_eq!(f.gradient(0.7, &x.stop(0.7)).unwrap(), vec![0.0]);
    }

    #[test]
    fn one_form_gradient_is_left_running_integral() {
        // f ≡ 1: ∇F_i = (∫ 1 dx_i)(t-) = x_i(t-) - x_i(0)
        let x = CadlagPath::step_path(&[(0.3, vec![2.0]), (0.7, vec![-1.0])], 1, 1.0).unwrap();
        let f = bracket_1form(vec![C2Fn::constant(1.0)], grid(9));
        for t in [0.3, 0.5, 0.7, 1.0] {
            let g = f.gradient(t, &x.stop(t)).unwrap();
            let want = x.eval1_left(t) - x.eval1(0.0);
            assert!((g[0] - want).abs() < 1e-12, "t={t}: {} vs {want}", g[0]);
        }
    }

    #[test]
    fn product_and_lincomb_derivatives() {
        // F(t,x) = t·x(t): horizontal x(t), gradient t
        let f = product(time_fn(C2Fn::identity()), eval_scalar(C2Fn::identity()));
        let x = CadlagPath::indicator(0.5, 2.0, 1.0).unwrap();
        let y = x.stop(0.75);
        assert_eq!(f.value(0.75, &y), 1.5);
        assert_eq!(f.horizontal(0.75, &y).unwrap(), 2.0);
        assert_eq!(f.gradient(0.75, &y).unwrap(), vec![0.75]);

        let g = lin_comb(vec![
            (2.0, eval_scalar(C2Fn::square())),
            (-1.0, markov_affine(0.0, vec![1.0])),
        ]);
        assert_eq!(g.value(0.75, &y), 2.0 * 4.0 - 2.0);
        assert_eq!(g.gradient(0.75, &y).unwrap(), vec![2.0 * 2.0 * 2.0 - 1.0]);
        assert_eq!(g.class(), FunctionalClass::C12);
    }
}
