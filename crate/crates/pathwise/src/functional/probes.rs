//! Numeric probes for causal functionals: horizontal and vertical
//! derivatives from the evaluator alone, strict-causality and continuity
//! checks, and empirical modulus / boundedness scans.
//!
//! Derivatives are defined as limits; the probes evaluate difference
//! quotients over a dyadic bump schedule and Richardson-extrapolate,
//! declaring convergence when successive extrapolants agree to
//! [`DERIV_CONVERGENCE_TOL`]. A schedule that fails to settle is an error —
//! no sentinel values.

use super::Functional;
use crate::error::{invalid, Error, Result};
use crate::partition::PartitionSequence;
use crate::path::CadlagPath;

/// Bump magnitudes used by the derivative probes: `2^-k` for `k = 4..=12`.
#[derive(Debug, Clone)]
pub struct DerivSchedule {
    pub bumps: Vec<f64>,
}

impl Default for DerivSchedule {
    fn default() -> Self {
        DerivSchedule {
            bumps: (4..=12).map(|k| (2f64).powi(-k)).collect(),
        }
    }
}

/// Successive Richardson extrapolants must agree to this tolerance for a
/// derivative probe to report convergence.
pub const DERIV_CONVERGENCE_TOL: f64 = 1e-7;

/// Default tolerance for the sequential continuity criteria: the evaluation
/// sequences converge at the path's modulus-of-continuity rate, so the pass
/// threshold sits at the scale of coarse-level path oscillations.
pub const DEFAULT_CONTINUITY_TOL: f64 = 5e-2;

fn extrapolate_sequence(quotients: &[f64], order: f64) -> Result<f64> {
    // quotients[k] uses bump 2^-(k0+k); error O(h^order) shrinks by 2^order
    if quotients.is_empty() {
        return Err(Error::Diverged("empty derivative schedule".into()));
    }
    let w = (2f64).powf(order);
    let extr: Vec<f64> = quotients
        .windows(2)
        .map(|q| (w * q[1] - q[0]) / (w - 1.0))
        .collect();
    if extr.is_empty() {
        return Ok(quotients[0]);
    }
    if extr.len() == 1 {
        return Ok(extr[0]);
    }
    let mut best: Option<f64> = None;
    for pair in extr.windows(2) {
        if (pair[1] - pair[0]).abs() < DERIV_CONVERGENCE_TOL {
            best = Some(pair[1]);
        }
    }
    best.ok_or_else(|| {
        Error::Diverged(format!(
            "derivative schedule did not settle: extrapolants {extr:?}"
        ))
    })
}

/// Horizontal (time) derivative `DF(t, x_t)`: forward differences of
/// `h ↦ F(t + h, x_t)` with the path left stopped at `t`, extrapolated over
/// the schedule.
pub fn horizontal_derivative(
    f: &dyn Functional,
    t: f64,
    x: &CadlagPath,
    schedule: &DerivSchedule,
) -> Result<f64> {
    let horizon = x.horizon();
    let stopped = x.stop(t);
    let base = f.value(t, &stopped);
    let bumps: Vec<f64> = schedule
        .bumps
        .iter()
        .copied()
        .filter(|h| t + h <= horizon)
        .collect();
    if bumps.is_empty() {
        return invalid(format!(
            "no admissible horizontal bumps at t = {t} (horizon {horizon})"
        ));
    }
    let quotients: Vec<f64> = bumps
        .iter()
        .map(|h| (f.value(t + h, &stopped) - base) / h)
        .collect();
    extrapolate_sequence(&quotients, 1.0)
}

/// Vertical derivative `∇_x F(t, x_t)`: central differences of
/// `e ↦ F(t, x_t + e·1_{[t, ·]})` per coordinate, extrapolated.
pub fn vertical_derivative(
    f: &dyn Functional,
    t: f64,
    x: &CadlagPath,
    schedule: &DerivSchedule,
) -> Result<Vec<f64>> {
    let m = x.dim();
    let mut out = Vec::with_capacity(m);
    for d in 0..m {
        let quotients: Vec<f64> = schedule
            .bumps
            .iter()
            .map(|h| {
                let mut e = vec![0.0; m];
                e[d] = *h;
                let plus = f.value(t, &x.vertical_perturb(t, &e)?);
                e[d] = -h;
                let minus = f.value(t, &x.vertical_perturb(t, &e)?);
                Ok((plus - minus) / (2.0 * h))
            })
            .collect::<Result<_>>()?;
        out.push(extrapolate_sequence(&quotients, 2.0)?);
    }
    Ok(out)
}

/// Second vertical derivative, flattened row-major `m x m`.
pub fn vertical_hessian(
    f: &dyn Functional,
    t: f64,
    x: &CadlagPath,
    schedule: &DerivSchedule,
) -> Result<Vec<f64>> {
    let m = x.dim();
    let stopped = x.stop(t);
    let base = f.value(t, &stopped);
    let mut out = vec![0.0; m * m];
    let value_at = |e: &[f64]| -> Result<f64> { Ok(f.value(t, &x.vertical_perturb(t, e)?)) };
    for i in 0..m {
        // diagonal: (F(+h) - 2F(0) + F(-h)) / h²
        let quotients: Vec<f64> = schedule
            .bumps
            .iter()
            .map(|h| {
                let mut e = vec![0.0; m];
                e[i] = *h;
                let plus = value_at(&e)?;
                e[i] = -h;
                let minus = value_at(&e)?;
                Ok((plus - 2.0 * base + minus) / (h * h))
            })
            .collect::<Result<_>>()?;
        out[i * m + i] = extrapolate_sequence(&quotients, 2.0)?;
        for j in (i + 1)..m {
            let quotients: Vec<f64> = schedule
                .bumps
                .iter()
                .map(|h| {
                    let mut e = vec![0.0; m];
                    e[i] = *h;
                    e[j] = *h;
                    let pp = value_at(&e)?;
                    e[j] = -h;
                    let pm = value_at(&e)?;
                    e[i] = -h;
                    let mm = value_at(&e)?;
                    e[j] = *h;
                    let mp = value_at(&e)?;
                    Ok((pp - pm - mp + mm) / (4.0 * h * h))
                })
                .collect::<Result<_>>()?;
            let v = extrapolate_sequence(&quotients, 2.0)?;
            out[i * m + j] = v;
            out[j * m + i] = v;
        }
    }
    Ok(out)
}

/// The functional's analytic Hessian, or the numeric one when absent.
pub fn hessian_or_numeric(
    f: &dyn Functional,
    t: f64,
    x: &CadlagPath,
    schedule: &DerivSchedule,
) -> Result<Vec<f64>> {
    if let Some(h) = f.hessian(t, &x.stop(t)) {
        return Ok(h);
    }
    vertical_hessian(f, t, x, schedule)
}

/// The functional's analytic gradient at `(t, path)` (the path being whatever
/// stopping the caller chose), or the numeric one along the given path.
pub fn gradient_or_numeric(
    f: &dyn Functional,
    t: f64,
    path: &CadlagPath,
    schedule: &DerivSchedule,
) -> Result<Vec<f64>> {
    if let Some(g) = f.gradient(t, path) {
        return Ok(g);
    }
    vertical_derivative(f, t, path, schedule)
}

/// Strict causality at `(t, x_t)`: `F(t, x_t + e·1) = F(t, x_t)` for every
/// sampled bump and a vanishing numeric vertical derivative. Equivalent, for
/// causal functionals, to `F = F_-`.
pub fn strict_causality_probe(
    f: &dyn Functional,
    t: f64,
    x: &CadlagPath,
    bump_mags: &[f64],
    tol: f64,
) -> Result<bool> {
    if bump_mags.is_empty() {
        return invalid("strict_causality_probe needs at least one bump");
    }
    let m = x.dim();
    let base = f.value(t, &x.stop(t));
    for mag in bump_mags {
        for d in 0..m {
            for sign in [1.0, -1.0] {
                let mut e = vec![0.0; m];
                e[d] = sign * mag;
                let v = f.value(t, &x.vertical_perturb(t, &e)?);
                if (v - base).abs() > tol {
                    return Ok(false);
                }
            }
        }
    }
    let grad = vertical_derivative(f, t, x, &DerivSchedule::default())?;
    Ok(grad.iter().all(|g| g.abs() <= tol.max(1e-9)))
}

/// One of the eight sequential continuity criteria.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    /// `"1a"` .. `"2d"`.
    pub label: &'static str,
    /// `F(t, x_{t-})` for group 1, `F(t, x_t)` for group 2.
    pub target: f64,
    /// `(step-or-level, F value)` along the prescribed sequence.
    pub samples: Vec<(u32, f64)>,
    /// Last sample (the limit estimate); `None` when no admissible sequence
    /// exists (e.g. `t_n < t'_n` with `t'_n = 0`).
    pub estimate: Option<f64>,
    /// `|estimate - target| <= tol`; `None` when not applicable.
    pub pass: Option<bool>,
}

/// Results of the eight-criteria sequential continuity check.
#[derive(Debug, Clone)]
pub struct ContinuityReport {
    pub criteria: Vec<CriterionReport>,
    pub tol: f64,
}

impl ContinuityReport {
    pub fn criterion(&self, label: &str) -> &CriterionReport {
        self.criteria
            .iter()
            .find(|c| c.label == label)
            .expect("unknown criterion label")
    }

    /// All applicable criteria pass.
    pub fn all_pass(&self) -> bool {
        self.criteria.iter().all(|c| c.pass != Some(false))
    }
}

/// Evaluate the eight sequential continuity criteria of the partition
/// topology at `(t, x)`.
///
/// Group 1 drives sequences toward `F(t, x_{t-})`, group 2 toward
/// `F(t, x_t)`. Criteria (a)/(b) approach along the path itself
/// (`s ↑ t` resp. `s ↓ t` with plain or left stopping); criteria (c)/(d)
/// evaluate on piecewise-constant approximations at each level `n`, at times
/// positioned relative to `t'_n = max{grid < t}`:
///
/// * 1(c): `t_n = t'_n`, left-stopped;
/// * 1(d): `t_n` strictly below `t'_n` (midpoint of the preceding cell),
///   plain-stopped — not applicable at levels where `t'_n = 0`;
/// * 2(c): `t_n = t` (`>= t'_n`), plain-stopped;
/// * 2(d): `t_n = t` (`> t'_n`), left-stopped.
///
/// A pass is evidence of continuity along these sequences, not proof; the
/// per-level samples are kept so failures are auditable.
pub fn pi_continuity_report(
    f: &dyn Functional,
    x: &CadlagPath,
    t: f64,
    seq: &PartitionSequence,
    levels: &[u32],
    tol: f64,
) -> Result<ContinuityReport> {
    let horizon = x.horizon();
    if !(t > 0.0 && t < horizon) {
        return invalid(format!(
            "t = {t} must lie in the open interval (0, {horizon})"
        ));
    }
    if levels.is_empty() {
        return invalid("pi_continuity_report needs at least one level");
    }
    let target1 = f.value(t, &x.stop_left(t));
    let target2 = f.value(t, &x.stop(t));
    let offsets: Vec<f64> = (3..=12).map(|k| horizon * (2f64).powi(-k)).collect();

    let mut criteria = Vec::with_capacity(8);
    let finish = |label: &'static str, target: f64, samples: Vec<(u32, f64)>| {
        let estimate = samples.last().map(|(_, v)| *v);
        let pass = estimate.map(|e| (e - target).abs() <= tol);
        CriterionReport {
            label,
            target,
            samples,
            estimate,
            pass,
        }
    };

    // 1(a): s ↑ t, left-stopped
    let mut s1a = Vec::new();
    for (k, h) in offsets.iter().enumerate() {
        let s = t - h;
        if s >= 0.0 {
            s1a.push((k as u32, f.value(s, &x.stop_left(s))));
        }
    }
    criteria.push(finish("1a", target1, s1a));

    // 1(b): s ↑ t strictly, plain-stopped
    let mut s1b = Vec::new();
    for (k, h) in offsets.iter().enumerate() {
        let s = t - h;
        if s >= 0.0 && s < t {
            s1b.push((k as u32, f.value(s, &x.stop(s))));
        }
    }
    criteria.push(finish("1b", target1, s1b));

    // 1(c): t_n = t'_n, pc approximation left-stopped
    let mut s1c = Vec::new();
    for n in levels {
        let p = seq.level(*n)?;
        let tp = p.prev_point(t)?;
        let xn = x.pc_approx(&p)?;
        s1c.push((*n, f.value(tp, &xn.stop_left(tp))));
    }
    criteria.push(finish("1c", target1, s1c));

    // 1(d): t_n < t'_n (midpoint of the cell before t'_n), plain-stopped
    let mut s1d = Vec::new();
    for n in levels {
        let p = seq.level(*n)?;
        let tp = p.prev_point(t)?;
        if tp == 0.0 {
            continue; // no admissible t_n < t'_n at this level
        }
        let tpp = p.prev_point(tp)?;
        let tn = 0.5 * (tpp + tp);
        let xn = x.pc_approx(&p)?;
        s1d.push((*n, f.value(tn, &xn.stop(tn))));
    }
    criteria.push(finish("1d", target1, s1d));

    // 2(a): s ↓ t, plain-stopped
    let mut s2a = Vec::new();
    for (k, h) in offsets.iter().enumerate() {
        let s = t + h;
        if s <= horizon {
            s2a.push((k as u32, f.value(s, &x.stop(s))));
        }
    }
    criteria.push(finish("2a", target2, s2a));

    // 2(b): s ↓ t strictly, left-stopped
    let mut s2b = Vec::new();
    for (k, h) in offsets.iter().enumerate() {
        let s = t + h;
        if s <= horizon && s > t {
            s2b.push((k as u32, f.value(s, &x.stop_left(s))));
        }
    }
    criteria.push(finish("2b", target2, s2b));

    // 2(c): t_n = t >= t'_n, pc approximation plain-stopped
    let mut s2c = Vec::new();
    for n in levels {
        let p = seq.level(*n)?;
        let xn = x.pc_approx(&p)?;
        s2c.push((*n, f.value(t, &xn.stop(t))));
    }
    criteria.push(finish("2c", target2, s2c));

    // 2(d): t_n = t > t'_n, pc approximation left-stopped
    let mut s2d = Vec::new();
    for n in levels {
        let p = seq.level(*n)?;
        let xn = x.pc_approx(&p)?;
        s2d.push((*n, f.value(t, &xn.stop_left(t))));
    }
    criteria.push(finish("2d", target2, s2d));

    Ok(ContinuityReport { criteria, tol })
}

/// Uniform-topology continuity probe at `(t, x_t)`: evaluates `F` along
/// sequences that converge *uniformly* to the stopped path (vanishing
/// continuous perturbations, times approaching from the right) and reports
/// the largest value gap among samples that are genuinely uniformly close.
pub fn u_continuity_probe(f: &dyn Functional, x: &CadlagPath, t: f64, tol: f64) -> Result<bool> {
    let horizon = x.horizon();
    let target = f.value(t, &x.stop(t));
    let mut worst: f64 = 0.0;
    for k in 3..=10 {
        let eps = horizon * (2f64).powi(-k);
        // continuous wiggle of size eps (a tent over the whole horizon)
        let wiggle = CadlagPath::from_nodes(
            1,
            &[
                (0.0, vec![0.0]),
                (0.5 * horizon, vec![eps]),
                (horizon, vec![0.0]),
            ],
        )?;
        let wiggle = if x.dim() == 1 {
            wiggle
        } else {
            // lift to the path dimension on the first coordinate
            let mut knots = Vec::new();
            for kt in wiggle.knot_times() {
                let mut v = vec![0.0; x.dim()];
                v[0] = wiggle.eval(*kt)[0];
                knots.push((*kt, v.clone(), v));
            }
            CadlagPath::from_knots(x.dim(), knots)?
        };
        let y = x.add(&wiggle)?;
        let s = (t + eps).min(horizon);
        let stopped = y.stop(s);
        let d_u = stopped.sup_distance(&x.stop(t))?;
        // only count samples that did converge uniformly
        if d_u <= 4.0 * eps + 1e-12 {
            worst = worst.max((f.value(s, &stopped) - target).abs());
        }
    }
    Ok(worst <= tol)
}

/// Empirical modulus of vertical continuity: max oscillation of
/// `e ↦ F(t, x^n_{t-} + e·1)` over bump pairs within radius `r`, bucketed by
/// `|a - b|` with a monotone envelope.
#[derive(Debug, Clone)]
pub struct ModulusTable {
    /// `(δ, max oscillation over pairs with |a-b| <= δ)`, δ increasing.
    pub buckets: Vec<(f64, f64)>,
}

impl ModulusTable {
    /// Largest oscillation observed at separation at most `delta`.
    pub fn at(&self, delta: f64) -> f64 {
        let mut best = 0.0;
        for (d, o) in &self.buckets {
            if *d <= delta {
                best = *o;
            }
        }
        best
    }
}

/// Scan `|F(t, x^n_{t-} + a·1) - F(t, x^n_{t-} + b·1)|` over a bump grid in
/// `[-r, r]` and times `t <= t_end` on the level-`n` approximation
/// (scalar paths).
pub fn vertical_modulus_estimate(
    f: &dyn Functional,
    x: &CadlagPath,
    t_end: f64,
    r: f64,
    seq: &PartitionSequence,
    level: u32,
    grid_points: usize,
) -> Result<ModulusTable> {
    if !(r > 0.0) {
        return invalid("modulus radius must be positive");
    }
    if x.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: x.dim(),
        });
    }
    let p = seq.level(level)?;
    let xn = x.pc_approx(&p)?;
    let nb = grid_points.max(3);
    let bumps: Vec<f64> = (0..nb)
        .map(|k| -r + 2.0 * r * (k as f64) / ((nb - 1) as f64))
        .collect();
    let times: Vec<f64> = (1..=16)
        .map(|k| t_end * (k as f64) / 16.0)
        .filter(|s| *s <= x.horizon())
        .collect();
    let nbuckets = 8usize;
    let mut osc = vec![0.0f64; nbuckets];
    for t in &times {
        let values: Vec<f64> = bumps
            .iter()
            .map(|a| {
                let base = xn.stop_left(*t);
                Ok(f.value(*t, &base.vertical_perturb(*t, &[*a])?))
            })
            .collect::<Result<_>>()?;
        for i in 0..nb {
            for j in (i + 1)..nb {
                let sep = (bumps[j] - bumps[i]).abs();
                let gap = (values[j] - values[i]).abs();
                let bucket = ((sep / (2.0 * r)) * nbuckets as f64).ceil() as usize;
                let bucket = bucket.clamp(1, nbuckets) - 1;
                if gap > osc[bucket] {
                    osc[bucket] = gap;
                }
            }
        }
    }
    // monotone envelope
    let mut best = 0.0f64;
    let buckets = osc
        .iter()
        .enumerate()
        .map(|(k, o)| {
            best = best.max(*o);
            (2.0 * r * (k + 1) as f64 / nbuckets as f64, best)
        })
        .collect();
    Ok(ModulusTable { buckets })
}

/// Local-boundedness scan: `max_t |F(t, x^n_t)|` per level over a coarse
/// evaluation grid, with the growth ratio of the last two levels. A probe,
/// not a verdict: boundedness is only semi-decidable from samples.
#[derive(Debug, Clone)]
pub struct BoundednessScan {
    pub per_level: Vec<(u32, f64)>,
    /// max at top level / max at previous level.
    pub growth_ratio: f64,
}

pub fn local_boundedness_scan(
    f: &dyn Functional,
    x: &CadlagPath,
    seq: &PartitionSequence,
    levels: &[u32],
    t_end: f64,
) -> Result<BoundednessScan> {
    if levels.len() < 2 {
        return invalid("boundedness scan needs at least two levels");
    }
    let mut per_level = Vec::with_capacity(levels.len());
    for n in levels {
        let p = seq.level(*n)?;
        let xn = x.pc_approx(&p)?;
        let mut worst: f64 = 0.0;
        for k in 0..=32 {
            let t = t_end * (k as f64) / 32.0;
            worst = worst.max(f.value(t, &xn.stop(t)).abs());
        }
        per_level.push((*n, worst));
    }
    let a = per_level[per_level.len() - 2].1;
    let b = per_level[per_level.len() - 1].1;
    let growth_ratio = if a == 0.0 { 1.0 } else { b / a };
    Ok(BoundednessScan {
        per_level,
        growth_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::builtins::{self, MatFn};
    use crate::functional::{C2Fn, ClosureFunctional, VecC2Fn};
    use crate::partition::{dyadic_sequence, Partition};

    fn sched() -> DerivSchedule {
        DerivSchedule::default()
    }

    #[test]
    fn horizontal_derivative_examples() {
        let x = CadlagPath::indicator(0.5, 2.0, 1.0).unwrap();
        // frozen path: x(t)² has zero time derivative
        let f = builtins::eval_scalar(C2Fn::square());
        assert_eq!(
            horizontal_derivative(f.as_ref(), 0.6, &x, &sched()).unwrap(),
            0.0
        );
        // t·x(t): time derivative x(t)
        let g = builtins::product(
            builtins::time_fn(C2Fn::identity()),
            builtins::eval_scalar(C2Fn::identity()),
        );
        let d = horizontal_derivative(g.as_ref(), 0.6, &x, &sched()).unwrap();
        assert!((d - 2.0).abs() < 1e-9);
        // t²: derivative 2t (exact after one extrapolation step)
        let h = builtins::time_fn(C2Fn::square());
        let d2 = horizontal_derivative(h.as_ref(), 0.25, &x, &sched()).unwrap();
        assert!((d2 - 0.5).abs() < 1e-9);
    }

    #[test]
    fn vertical_derivative_examples() {
        let x = CadlagPath::indicator(0.5, 2.0, 1.0).unwrap();
        let f = builtins::eval_scalar(C2Fn::square());
        // F = x(t)²: gradient 2x(t), hessian 2
        let g = vertical_derivative(f.as_ref(), 0.75, &x, &sched()).unwrap();
        assert!((g[0] - 4.0).abs() < 1e-8);
        let h = vertical_hessian(f.as_ref(), 0.75, &x, &sched()).unwrap();
        assert!((h[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn numeric_matches_analytic_for_integral_builtins_on_steps() {
        let x = CadlagPath::step_path(&[(0.25, vec![1.0]), (0.75, vec![-2.0])], 1, 1.0).unwrap();
        let grid = Partition::dyadic(1.0, 8).unwrap();
        // ∫ φ d[x] with φ = identity: ∇F = 2Δx(t)
        let f = builtins::qv_integral(MatFn::identity(), grid.clone());
        for t in [0.25, 0.4, 0.75, 0.9] {
            let num = vertical_derivative(f.as_ref(), t, &x, &sched()).unwrap();
            let ana = f.gradient(t, &x.stop(t)).unwrap();
            assert!((num[0] - ana[0]).abs() < 1e-8, "t={t}: {num:?} vs {ana:?}");
        }
        // ∫ (∇f∘x) dx: ∇F = ∇f(x(t-))
        let g = builtins::follmer_grad(VecC2Fn::square_norm(), grid);
        for t in [0.3, 0.75, 1.0] {
            let num = vertical_derivative(g.as_ref(), t, &x, &sched()).unwrap();
            let ana = g.gradient(t, &x.stop(t)).unwrap();
            assert!((num[0] - ana[0]).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn causality_probe_examples() {
        let x = CadlagPath::indicator(0.5, 2.0, 1.0).unwrap();
        let bumps = [0.25, 0.5, 1.0];
        // left evaluation is strictly causal
        let left = ClosureFunctional::new("left-eval", |t, y: &CadlagPath| y.eval1_left(t));
        assert!(strict_causality_probe(&left, 0.5, &x, &bumps, 1e-10).unwrap());
        // plain evaluation is not
        let plain = ClosureFunctional::new("eval", |t, y: &CadlagPath| y.eval1(t));
        assert!(!strict_causality_probe(&plain, 0.5, &x, &bumps, 1e-10).unwrap());
        // gradient of a Föllmer primitive is strictly causal
        let grid = Partition::dyadic(1.0, 8).unwrap();
        let fg = builtins::follmer_grad(VecC2Fn::square_norm(), grid);
        let grad_f = ClosureFunctional::new("grad", move |t, y: &CadlagPath| {
            fg.gradient(t, y).unwrap()[0]
        });
        assert!(strict_causality_probe(&grad_f, 0.5, &x, &bumps, 1e-10).unwrap());
    }

    #[test]
    fn continuity_report_pointwise_functional_passes() {
        // f(x(t)) with continuous f on a step path: all criteria settle
        let x = CadlagPath::indicator(0.4, 1.0, 1.0).unwrap();
        let f = builtins::eval_scalar(C2Fn::square());
        let seq = dyadic_sequence(1.0, 12).unwrap();
        let r = pi_continuity_report(f.as_ref(), &x, 0.7, &seq, &[6, 8, 10, 12], 1e-6).unwrap();
        assert!(r.all_pass(), "{r:?}");
        // constant path: everything trivially passes
        let c = CadlagPath::constant(vec![3.0], 1.0).unwrap();
        let r2 = pi_continuity_report(f.as_ref(), &c, 0.5, &seq, &[4, 6], 1e-12).unwrap();
        assert!(r2.all_pass());
    }

    #[test]
    fn continuity_report_catches_off_grid_jump_detector() {
        // F(t,x) = |Δx_t(t_0)| with an off-grid jump time: 2(c) must fail
        let t0 = 1.0 / 3.0;
        let x = CadlagPath::indicator(t0, 1.0, 1.0).unwrap();
        let f = ClosureFunctional::new("jump-at-t0", move |_t, y: &CadlagPath| {
            y.jump_at(t0)[0].abs()
        });
        let seq = dyadic_sequence(1.0, 12).unwrap();
        let r = pi_continuity_report(&f, &x, t0, &seq, &[6, 8, 10, 12], 1e-3).unwrap();
        assert_eq!(r.criterion("2c").pass, Some(false));
        assert_eq!(r.criterion("2c").target, 1.0);
        assert_eq!(r.criterion("2c").estimate, Some(0.0));
        // but the functional is U-continuous at (t0, x)
        assert!(u_continuity_probe(&f, &x, t0, 1e-9).unwrap());
    }

    #[test]
    fn continuity_report_builtin_families_pass_on_rough_path() {
        // pointwise and integral builtins settle along all eight sequences
        // on a path with nondegenerate quadratic variation
        use crate::functional::builtins::MatFn;
        use crate::functional::VecC2Fn;
        use crate::path::faber_schauder_path;
        let seq = dyadic_sequence(1.0, 12).unwrap();
        let grid = seq.level(12).unwrap();
        let x = faber_schauder_path(12, 42, 1.0).unwrap();
        let fns: Vec<std::sync::Arc<dyn crate::functional::Functional>> = vec![
            builtins::eval_scalar(C2Fn::square()),
            builtins::qv_eval(VecC2Fn::from_scalar(C2Fn::identity()), grid.clone()),
            builtins::qv_integral(MatFn::identity(), grid.clone()),
            builtins::follmer_grad(VecC2Fn::square_norm(), grid.clone()),
        ];
        for f in &fns {
            let r = pi_continuity_report(
                f.as_ref(),
                &x,
                0.37,
                &seq,
                &[8, 10, 12],
                DEFAULT_CONTINUITY_TOL,
            )
            .unwrap();
            assert!(r.all_pass(), "{}: {r:?}", f.name());
        }
    }

    #[test]
    fn criterion_1d_not_applicable_near_zero() {
        let x = CadlagPath::indicator(0.9, 1.0, 1.0).unwrap();
        let f = builtins::eval_scalar(C2Fn::identity());
        let seq = dyadic_sequence(1.0, 6).unwrap();
        // t below the first positive grid point of every level in range
        let r = pi_continuity_report(f.as_ref(), &x, 0.01, &seq, &[1, 2, 3], 1e-6).unwrap();
        assert_eq!(r.criterion("1d").pass, None);
    }

    #[test]
    fn modulus_estimates() {
        let seq = dyadic_sequence(1.0, 8).unwrap();
        let x = CadlagPath::indicator(0.5, 1.0, 1.0).unwrap();
        // F = x(t): modulus(δ) = δ
        let f = builtins::eval_scalar(C2Fn::identity());
        let tab = vertical_modulus_estimate(f.as_ref(), &x, 1.0, 1.0, &seq, 6, 9).unwrap();
        for (delta, osc) in &tab.buckets {
            assert!((osc - delta).abs() < 1e-9, "δ={delta} osc={osc}");
        }
        // constant functional: modulus ≡ 0
        let c = builtins::markov_affine(2.0, vec![0.0]);
        let tab0 = vertical_modulus_estimate(c.as_ref(), &x, 1.0, 1.0, &seq, 6, 9).unwrap();
        assert!(tab0.buckets.iter().all(|(_, o)| *o == 0.0));
        // F = x(t)² on paths bounded by B, bumps in [-r, r]:
        // |F(a)-F(b)| = |a-b||2v + a + b| <= (2B + 2r)·δ
        let sq = builtins::eval_scalar(C2Fn::square());
        let r = 0.5;
        let tab2 = vertical_modulus_estimate(sq.as_ref(), &x, 1.0, r, &seq, 6, 9).unwrap();
        let b = 1.0;
        for (delta, osc) in &tab2.buckets {
            assert!(
                *osc <= (2.0 * b + 2.0 * r) * delta + 1e-9,
                "δ={delta} osc={osc}"
            );
        }
    }

    #[test]
    fn boundedness_scan_flat_for_bounded_functional() {
        let x = CadlagPath::indicator(0.5, 1.0, 1.0).unwrap();
        let f = builtins::eval_scalar(C2Fn::square());
        let seq = dyadic_sequence(1.0, 10).unwrap();
        let scan = local_boundedness_scan(f.as_ref(), &x, &seq, &[4, 6, 8, 10], 1.0).unwrap();
        assert!((scan.growth_ratio - 1.0).abs() < 1e-9);
        assert!(scan.per_level.iter().all(|(_, v)| *v == 1.0));
    }

    #[test]
    fn diverging_schedule_is_an_error() {
        // F(t,x) = max(Δx(t), 0)^(1/2): the one-sided square root makes the
        // central quotients blow up like h^(-1/2)
        let x = CadlagPath::indicator(0.5, 1.0, 1.0).unwrap();
        let f = ClosureFunctional::new("sqrt-jump", |t, y: &CadlagPath| {
            y.jump_at(t)[0].max(0.0).sqrt()
        });
        assert!(vertical_derivative(&f, 0.25, &x, &sched()).is_err());
    }
}
