//! Quadratic variation along a partition sequence.
//!
//! For a path `x` and partition level `n` the quadratic-sum process is the
//! step function
//!
//! ```text
//! q_n(t) = Σ_{t_i <= t} (x(t_{i+1}) - x(t_i)) (x(t_{i+1}) - x(t_i))'
//! ```
//!
//! (sum over grid points, matrix-valued for multidimensional paths; the last
//! grid point has an empty increment under the horizon-successor convention).
//! `x` has finite quadratic variation along the sequence when `q_n` converges
//! in the Skorokhod topology; convergence is therefore *diagnosed* here with
//! J1 Cauchy distances rather than pointwise limits, which would fail
//! spuriously near relocated jumps.
//!
//! Matrix values are flattened row-major: a `CadlagPath` of dimension `m*m`
//! carries an `m x m` matrix path.

use crate::error::{invalid, Error, Result};
use crate::partition::{Partition, PartitionSequence};
use crate::path::CadlagPath;
use crate::report::{richardson2, tail_below, ConvergenceReport, Verdict};
use crate::skorokhod::skorokhod_distance;

/// Quadratic-variation estimate along a partition sequence.
#[derive(Debug, Clone)]
pub struct QvResult {
    /// Path dimension `m` (the level paths have dimension `m*m`).
    pub dim: usize,
    /// Per-level quadratic-sum step paths `(n, q_n)`.
    pub levels: Vec<(u32, CadlagPath)>,
    /// `d_J1(q_n, q_{n+1})` for consecutive levels.
    pub cauchy_diags: Vec<f64>,
    /// Limit estimate: the highest-level `q_n` (no extrapolation).
    pub limit: CadlagPath,
    /// `limit` minus the accumulated jump masses (placed at the straddling
    /// grid points of the top partition, where the finite-level sums put
    /// them, so the three parts recombine exactly).
    pub continuous_part: CadlagPath,
    /// `(t, Δx(t) Δx(t)')` at the true jump times of `x`, flattened `m*m`.
    pub jump_part: Vec<(f64, Vec<f64>)>,
    pub tol: f64,
    pub verdict: Verdict,
}

impl QvResult {
    /// `[x](t)` estimate, flattened `m*m`.
    pub fn limit_at(&self, t: f64) -> Vec<f64> {
        self.limit.eval(t)
    }

    /// Scalar `[x](t)` estimate; panics unless the path was scalar.
    pub fn limit_at1(&self, t: f64) -> f64 {
        assert_eq!(self.dim, 1);
        self.limit.eval(t)[0]
    }

    /// Trace of `[x](T)`.
    pub fn trace_at(&self, t: f64) -> f64 {
        let v = self.limit.eval(t);
        (0..self.dim).map(|i| v[i * self.dim + i]).sum()
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

/// The quadratic-sum step path `q_n` of `x` along the partition `p`,
/// dimension `m*m`.
pub fn qv_path(x: &CadlagPath, p: &Partition) -> Result<CadlagPath> {
    if p.horizon() != x.horizon() {
        return Err(Error::GridMismatch(
            "partition and path must share a horizon".into(),
        ));
    }
    let m = x.dim();
    let mm = m * m;
    let grid = p.points();
    let vals = x.values_on_grid(grid);
    let n = grid.len();
    let mut cum = vec![0.0; mm];
    let mut times: Vec<f64> = Vec::new();
    let mut left: Vec<f64> = Vec::new();
    let mut right: Vec<f64> = Vec::new();
    // term at t_0 = 0 enters the value at 0 (jump(0) = 0 by convention)
    let d0: Vec<f64> = (0..m).map(|d| vals[m + d] - vals[d]).collect();
    for (c, o) in cum.iter_mut().zip(outer(&d0)) {
        *c += o;
    }
    times.push(0.0);
    left.extend_from_slice(&cum);
    right.extend_from_slice(&cum);
    for i in 1..n - 1 {
        let di: Vec<f64> = (0..m)
            .map(|d| vals[(i + 1) * m + d] - vals[i * m + d])
            .collect();
        if di.iter().any(|v| *v != 0.0) {
            times.push(grid[i]);
            left.extend_from_slice(&cum);
            for (c, o) in cum.iter_mut().zip(outer(&di)) {
                *c += o;
            }
            right.extend_from_slice(&cum);
        }
    }
    times.push(p.horizon());
    left.extend_from_slice(&cum);
    right.extend_from_slice(&cum);
    Ok(CadlagPath::from_raw(mm, times, left, right))
}

/// `q_n(t)` as a flattened `m x m` matrix.
pub fn qv_level(x: &CadlagPath, p: &Partition, t: f64) -> Result<Vec<f64>> {
    qv_path(x, p)?.try_eval(t)
}

/// Scalar `q_n(t)`.
pub fn qv_level1(x: &CadlagPath, p: &Partition, t: f64) -> Result<f64> {
    if x.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: x.dim(),
        });
    }
    Ok(qv_level(x, p, t)?[0])
}

/// Estimate `[x]` over the given levels with J1 Cauchy diagnostics.
/// Needs at least two levels. A non-convergent sweep is reported in the
/// verdict, never silently and never as a sentinel value.
pub fn qv_estimate(
    x: &CadlagPath,
    seq: &PartitionSequence,
    levels: &[u32],
    tol: f64,
) -> Result<QvResult> {
    if levels.len() < 2 {
        return invalid("qv_estimate needs at least two levels");
    }
    let mut per_level = Vec::with_capacity(levels.len());
    for n in levels {
        per_level.push((*n, qv_path(x, &seq.level(*n)?)?));
    }
    let mut diags = Vec::with_capacity(per_level.len() - 1);
    for w in per_level.windows(2) {
        diags.push(skorokhod_distance(&w[0].1, &w[1].1)?);
    }
    let verdict = if tail_below(&diags, tol) {
        Verdict::Converged
    } else {
        Verdict::Diverged
    };
    let limit = per_level.last().unwrap().1.clone();
    let top = seq.level(*levels.last().unwrap())?;
    let (continuous_part, jump_part) = decompose_qv(&limit, x, &top, 1e-8)?;
    Ok(QvResult {
        dim: x.dim(),
        levels: per_level,
        cauchy_diags: diags,
        limit,
        continuous_part,
        jump_part,
        tol,
        verdict,
    })
}

/// Split a quadratic-variation estimate into its continuous part and the
/// accumulated jump masses `Δx Δx'`.
///
/// At a finite level the sum books the mass of a jump at time `s` on the
/// straddling grid point `max{t_i < s}`; the subtraction uses that placement
/// so `continuous_part + jumps == limit` exactly, while `jump_part` reports
/// the masses at the true jump times.
pub fn decompose_qv(
    limit: &CadlagPath,
    x: &CadlagPath,
    p: &Partition,
    tol: f64,
) -> Result<(CadlagPath, Vec<(f64, Vec<f64>)>)> {
    let m = x.dim();
    if limit.dim() != m * m {
        return Err(Error::DimensionMismatch {
            expected: m * m,
            got: limit.dim(),
        });
    }
    let jumps = x.jumps();
    let jump_part: Vec<(f64, Vec<f64>)> = jumps.iter().map(|(s, d)| (*s, outer(d))).collect();
    // jumps sharing a straddling cell are booked by the level as one
    // combined increment; group their vector sums before squaring so the
    // subtraction matches what the sum actually recorded
    let mut grouped: Vec<(f64, Vec<f64>)> = Vec::with_capacity(jumps.len());
    for (s, d) in &jumps {
        let sigma = p.prev_point(*s)?;
        match grouped.last_mut() {
            Some((t, acc)) if *t == sigma => {
                for (a, b) in acc.iter_mut().zip(d) {
                    *a += b;
                }
            }
            _ => grouped.push((sigma, d.clone())),
        }
    }
    let placed: Vec<(f64, Vec<f64>)> = grouped
        .into_iter()
        .map(|(sigma, dsum)| (sigma, outer(&dsum)))
        .collect();
    // jumps at time 0 cannot occur (x(0-) = x(0)); straddle points of
    // jumps in (0, t_1] are 0 though, and a staircase cannot jump at 0 in
    // our representation, so fold such mass into the initial value.
    let staircase = {
        let mut knots: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
        let mut cum = vec![0.0; m * m];
        let mut at_zero = vec![0.0; m * m];
        for (t, mass) in &placed {
            if *t == 0.0 {
                for (a, b) in at_zero.iter_mut().zip(mass) {
                    *a += b;
                }
            }
        }
        for (a, b) in cum.iter_mut().zip(&at_zero) {
            *a += b;
        }
        knots.push((0.0, cum.clone(), cum.clone()));
        for (t, mass) in &placed {
            if *t > 0.0 {
                let before = cum.clone();
                for (a, b) in cum.iter_mut().zip(mass) {
                    *a += b;
                }
                knots.push((*t, before, cum.clone()));
            }
        }
        if placed.last().map(|(t, _)| *t) != Some(x.horizon()) {
            knots.push((x.horizon(), cum.clone(), cum.clone()));
        }
        CadlagPath::from_knots(m * m, knots)?
    };
    let continuous = limit.add(&staircase.scale(-1.0))?;
    // diagonal entries of a quadratic variation must stay nonnegative
    for k in 0..continuous.knot_times().len() {
        for d in 0..m {
            let v = continuous.right_at_knot(k)[d * m + d];
            if v < -tol {
                return Err(Error::Consistency(format!(
                    "continuous part of [x] is negative ({v:.3e} at t = {}): bad limit estimate",
                    continuous.knot_times()[k]
                )));
            }
        }
    }
    Ok((continuous, jump_part))
}

/// Polarisation: `[x_i, x_j] = (1/2) ([x_i + x_j] - [x_i] - [x_j])`,
/// applied pointwise to quadratic-sum paths on a common horizon.
pub fn polarise(q_i: &CadlagPath, q_j: &CadlagPath, q_ij_sum: &CadlagPath) -> Result<CadlagPath> {
    let s = q_ij_sum.add(&q_i.scale(-1.0))?.add(&q_j.scale(-1.0))?;
    Ok(s.scale(0.5))
}

/// Multidimensional quadratic variation: diagonal entries from the scalar
/// coordinate sums, off-diagonal entries by polarisation of `[x_i + x_j]`.
/// The output matrix paths are symmetric by construction.
pub fn qv_matrix(
    x: &CadlagPath,
    seq: &PartitionSequence,
    levels: &[u32],
    tol: f64,
) -> Result<QvResult> {
    let m = x.dim();
    if m == 1 {
        return qv_estimate(x, seq, levels, tol);
    }
    if levels.len() < 2 {
        return invalid("qv_matrix needs at least two levels");
    }
    let mut per_level: Vec<(u32, CadlagPath)> = Vec::with_capacity(levels.len());
    for n in levels {
        let p = seq.level(*n)?;
        let mut diag: Vec<CadlagPath> = Vec::with_capacity(m);
        for i in 0..m {
            diag.push(qv_path(&x.component(i)?, &p)?);
        }
        let mut entries: Vec<Vec<CadlagPath>> = vec![Vec::new(); m];
        for i in 0..m {
            entries[i] = (0..m).map(|_| diag[i].clone()).collect();
        }
        for i in 0..m {
            for j in (i + 1)..m {
                let q_sum = qv_path(&x.component_sum(i, j)?, &p)?;
                let cross = polarise(&diag[i], &diag[j], &q_sum)?;
                entries[i][j] = cross.clone();
                entries[j][i] = cross;
            }
        }
        for i in 0..m {
            entries[i][i] = diag[i].clone();
        }
        // merge the m*m scalar paths into one matrix path
        let mut times: Vec<f64> = Vec::new();
        for row in &entries {
            for e in row {
                times.extend_from_slice(e.knot_times());
            }
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        let mut left = Vec::with_capacity(times.len() * m * m);
        let mut right = Vec::with_capacity(times.len() * m * m);
        for t in &times {
            for row in entries.iter() {
                for e in row {
                    left.push(e.eval_left(*t)[0]);
                }
            }
            for row in entries.iter() {
                for e in row {
                    right.push(e.eval(*t)[0]);
                }
            }
        }
        per_level.push((*n, CadlagPath::from_raw(m * m, times, left, right)));
    }
    let mut diags = Vec::with_capacity(per_level.len() - 1);
    for w in per_level.windows(2) {
        diags.push(skorokhod_distance(&w[0].1, &w[1].1)?);
    }
    let verdict = if tail_below(&diags, tol) {
        Verdict::Converged
    } else {
        Verdict::Diverged
    };
    let limit = per_level.last().unwrap().1.clone();
    let top = seq.level(*levels.last().unwrap())?;
    let (continuous_part, jump_part) = decompose_qv(&limit, x, &top, 1e-8)?;
    Ok(QvResult {
        dim: m,
        levels: per_level,
        cauchy_diags: diags,
        limit,
        continuous_part,
        jump_part,
        tol,
        verdict,
    })
}

/// The four weighted quadratic Riemann sums over a partition level.
///
/// With increments `Δ_i = x(t_{i+1}) - x(t_i)`:
///
/// * `I`  : `Σ_{t_i <= T} f(t_i) Δ_i²`
/// * `II` : `Σ_{t_i <= T} f(t_{i+1} ∧ T) Δ_i²`
/// * `III`: `Σ_{t_i <  T} f(t_i) Δ_i²`
/// * `IV` : `Σ_{t_i <  T} f(t_{i+1} ∧ T) Δ_i²`
///
/// All four converge to `∫_0^T f d[x]` for left-continuous locally bounded
/// `f` when `x` has finite quadratic variation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QsVariant {
    I,
    II,
    III,
    IV,
}

impl QsVariant {
    pub const ALL: [QsVariant; 4] = [QsVariant::I, QsVariant::II, QsVariant::III, QsVariant::IV];
}

/// Weight for the quadratic sums: a fixed left-continuous function, or a
/// level-indexed sequence `f_n` converging pointwise to the target.
pub enum WeightFn<'a> {
    Fixed(&'a (dyn Fn(f64) -> f64 + Sync)),
    PerLevel(&'a (dyn Fn(u32, f64) -> f64 + Sync)),
}

impl WeightFn<'_> {
    fn at(&self, level: u32, t: f64) -> f64 {
        match self {
            WeightFn::Fixed(f) => f(t),
            WeightFn::PerLevel(f) => f(level, t),
        }
    }
}

/// Result of a weighted quadratic-sum sweep, with the Stieltjes reference
/// value `∫_0^T f d[x]` computed against the top-level quadratic sum.
#[derive(Debug, Clone)]
pub struct WeightedQsReport {
    pub report: ConvergenceReport,
    /// `∫_0^T f d[x]` with `[x]` the top-level estimate (atoms weighted by
    /// the left value of `f`).
    pub stieltjes_ref: f64,
    /// `|extrapolated - stieltjes_ref|`.
    pub gap: f64,
}

/// Evaluate one weighted quadratic-sum variant over a sweep of levels for a
/// scalar path.
pub fn weighted_quad_sum(
    f: &WeightFn,
    x: &CadlagPath,
    seq: &PartitionSequence,
    variant: QsVariant,
    t_end: f64,
    levels: &[u32],
    tol: f64,
) -> Result<WeightedQsReport> {
    if x.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: x.dim(),
        });
    }
    if levels.is_empty() {
        return invalid("weighted_quad_sum needs at least one level");
    }
    if !(0.0..=x.horizon()).contains(&t_end) {
        return invalid(format!("T = {t_end} outside path domain"));
    }
    let mut values = Vec::with_capacity(levels.len());
    for n in levels {
        let p = seq.level(*n)?;
        let grid = p.points();
        let vals = x.values_on_grid(grid);
        let mut sum = 0.0;
        for i in 0..grid.len() {
            let ti = grid[i];
            let include = match variant {
                QsVariant::I | QsVariant::II => ti <= t_end,
                QsVariant::III | QsVariant::IV => ti < t_end,
            };
            if !include {
                break;
            }
            let succ = p.successor(i);
            let d = if i + 1 < grid.len() {
                vals[i + 1] - vals[i]
            } else {
                0.0
            };
            let w = match variant {
                QsVariant::I | QsVariant::III => f.at(*n, ti),
                QsVariant::II | QsVariant::IV => f.at(*n, succ.min(t_end)),
            };
            sum += w * d * d;
        }
        values.push(sum);
    }
    let top_level = *levels.last().unwrap();
    let q_top = qv_path(x, &seq.level(top_level)?)?;
    let stieltjes_ref = stieltjes_integral(
        &|s: f64| vec![f.at(top_level, s)],
        &q_top,
        t_end,
        LeftLimitMode::Declared,
    )?;
    let report = ConvergenceReport::from_values(levels.to_vec(), values, Vec::new(), tol);
    let gap = (report.extrapolated - stieltjes_ref).abs();
    Ok(WeightedQsReport {
        report,
        stieltjes_ref,
        gap,
    })
}

/// How to obtain `f(s-)` for a Stieltjes integrand given as a closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeftLimitMode {
    /// The closure is left-continuous (or already evaluates its own left
    /// limit): use `f(s)` at atoms.
    Declared,
    /// Probe `f(s - h)` over a decreasing schedule of `h`.
    Probe,
}

fn left_value(f: &dyn Fn(f64) -> Vec<f64>, s: f64, scale: f64, mode: LeftLimitMode) -> Vec<f64> {
    match mode {
        LeftLimitMode::Declared => f(s),
        LeftLimitMode::Probe => {
            let mut h = 1e-6 * scale.max(1e-12);
            let mut prev = f((s - h).max(0.0));
            for _ in 0..6 {
                h *= 0.25;
                let cur = f((s - h).max(0.0));
                let diff = prev
                    .iter()
                    .zip(&cur)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if diff < 1e-12 {
                    return cur;
                }
                prev = cur;
            }
            prev
        }
    }
}

/// Lebesgue-Stieltjes integral `∫_0^t <f(s-), dg(s)>` against a finite-
/// variation path `g`: atoms are weighted by the left value of `f`, affine
/// segments integrate `f` against the slope with adaptive Simpson quadrature.
/// `f` must return vectors matching `g`'s (flattened) dimension; for scalar
/// `g` this is the ordinary Stieltjes integral.
pub fn stieltjes_integral(
    f: &dyn Fn(f64) -> Vec<f64>,
    g: &CadlagPath,
    t_end: f64,
    mode: LeftLimitMode,
) -> Result<f64> {
    if !(0.0..=g.horizon()).contains(&t_end) {
        return invalid(format!("T = {t_end} outside integrator domain"));
    }
    let dim = g.dim();
    let times = g.knot_times();
    let mut total = 0.0;
    // atoms
    for (k, tk) in times.iter().enumerate().skip(1) {
        if *tk > t_end {
            break;
        }
        let r = g.right_at_knot(k);
        let l = g.left_at_knot(k);
        if r != l {
            let w = left_value(f, *tk, g.horizon(), mode);
            if w.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: w.len(),
                });
            }
            for d in 0..dim {
                total += w[d] * (r[d] - l[d]);
            }
        }
    }
    // absolutely continuous part
    for k in 0..times.len() - 1 {
        let a = times[k];
        if a >= t_end {
            break;
        }
        let b = times[k + 1].min(t_end);
        let r = g.right_at_knot(k);
        let l = g.left_at_knot(k + 1);
        if r == l {
            continue;
        }
        let len = times[k + 1] - times[k];
        let slope: Vec<f64> = (0..dim).map(|d| (l[d] - r[d]) / len).collect();
        let integrand = |s: f64| -> f64 {
            let w = f(s);
            slope.iter().zip(&w).map(|(a, b)| a * b).sum()
        };
        total += adaptive_simpson(&integrand, a, b)?;
    }
    Ok(total)
}

/// Stieltjes integral against a quadratic-sum path, counting the first-cell
/// mass: a level-`n` quadratic sum books the increment straddling `0` as its
/// value *at* `0` (there is no jump at `0` by convention), so
/// `∫_{[0,t]} f dq = f(0)·q(0) + ∫_{(0,t]} f dq`.
pub fn qv_stieltjes(
    f: &dyn Fn(f64) -> Vec<f64>,
    q: &CadlagPath,
    t_end: f64,
    mode: LeftLimitMode,
) -> Result<f64> {
    let w0 = f(0.0);
    let q0 = q.eval(0.0);
    if w0.len() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            got: w0.len(),
        });
    }
    let initial: f64 = w0.iter().zip(&q0).map(|(a, b)| a * b).sum();
    Ok(initial + stieltjes_integral(f, q, t_end, mode)?)
}

/// Scalar convenience wrapper.
pub fn stieltjes_integral1(
    f: impl Fn(f64) -> f64,
    g: &CadlagPath,
    t_end: f64,
    mode: LeftLimitMode,
) -> Result<f64> {
    if g.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: g.dim(),
        });
    }
    stieltjes_integral(&|s| vec![f(s)], g, t_end, mode)
}

pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        fm: f64,
        eps: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (l, flm) = simpson(f, a, fa, m, fm);
        let (r, frm) = simpson(f, m, fm, b, fb);
        if (l + r - whole).abs() <= 15.0 * eps || (b - a) < 1e-14 {
            return Ok(l + r + (l + r - whole) / 15.0);
        }
        if depth == 0 {
            return Err(Error::Diverged(
                "adaptive quadrature did not converge".into(),
            ));
        }
        Ok(recurse(f, a, fa, m, fm, l, flm, eps / 2.0, depth - 1)?
            + recurse(f, m, fm, b, fb, r, frm, eps / 2.0, depth - 1)?)
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, fm) = simpson(f, a, fa, b, fb);
    let eps = 1e-12 * (1.0 + whole.abs());
    recurse(f, a, fa, b, fb, whole, fm, eps, 30)
}

/// Fold a matrix path's flattened values with a weight per entry — used for
/// traces. `weights` has length `dim`.
pub fn weighted_trace(v: &[f64], weights: &[f64]) -> f64 {
    v.iter().zip(weights).map(|(a, b)| a * b).sum()
}

// re-export used by reports
pub use crate::report::TAIL_WINDOW;

/// One-step Richardson extrapolation of a level sweep (dyadic error model).
pub fn extrapolate(values: &[f64]) -> f64 {
    richardson2(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::dyadic_sequence;
    use crate::path::faber_schauder_path;

    fn seq() -> PartitionSequence {
        dyadic_sequence(1.0, 14).unwrap()
    }

    #[test]
    fn single_jump_has_constant_quadratic_sum() {
        let x = CadlagPath::indicator(0.5, 2.0, 1.0).unwrap();
        for n in 1..10 {
            let q = qv_level1(&x, &seq().level(n).unwrap(), 1.0).unwrap();
            assert_eq!(q, 4.0, "level {n}");
        }
    }

    #[test]
    fn piecewise_linear_quadratic_sum_decays() {
        let x = faber_schauder_path(6, 11, 1.0).unwrap();
        let p6 = seq().level(6).unwrap();
        let pl = x.pl_approx(&p6).unwrap();
        // beyond the construction level the sums halve per level
        let q8 = qv_level1(&pl, &seq().level(8).unwrap(), 1.0).unwrap();
        let q9 = qv_level1(&pl, &seq().level(9).unwrap(), 1.0).unwrap();
        let q10 = qv_level1(&pl, &seq().level(10).unwrap(), 1.0).unwrap();
        assert!((q9 / q8 - 0.5).abs() < 1e-9);
        assert!((q10 / q9 - 0.5).abs() < 1e-9);
    }

    #[test]
    fn qv_estimate_step_path_exact() {
        // the J1 diagnostics decay like the mesh (the jump mass sits at the
        // straddling grid point, which moves one cell per level), so the
        // verdict tolerance is a mesh-scale quantity
        let x = CadlagPath::indicator(0.5, 2.0, 1.0).unwrap();
        let r = qv_estimate(&x, &seq(), &[8, 9, 10, 11, 12], 1e-2).unwrap();
        assert_eq!(r.verdict, Verdict::Converged);
        assert_eq!(r.limit_at1(1.0), 4.0);
        assert_eq!(r.jump_part.len(), 1);
        assert_eq!(r.jump_part[0], (0.5, vec![4.0]));
        // pure step path: continuous part vanishes identically
        for k in 0..r.continuous_part.knot_times().len() {
            assert_eq!(r.continuous_part.right_at_knot(k)[0], 0.0);
        }
    }

    #[test]
    fn qv_estimate_zero_path() {
        let x = CadlagPath::zero(1, 1.0).unwrap();
        let r = qv_estimate(&x, &seq(), &[3, 4, 5], 1e-12).unwrap();
        assert_eq!(r.verdict, Verdict::Converged);
        assert_eq!(r.limit_at1(1.0), 0.0);
    }

    #[test]
    fn qv_scalar_is_nondecreasing() {
        let x = faber_schauder_path(8, 21, 1.0).unwrap();
        let q = qv_path(&x, &seq().level(8).unwrap()).unwrap();
        let mut prev = -1.0;
        for t in q.knot_times() {
            let v = q.eval(*t)[0];
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn polarise_identities() {
        let x = faber_schauder_path(6, 3, 1.0).unwrap();
        let p = seq().level(6).unwrap();
        let q = qv_path(&x, &p).unwrap();
        // x_i = x_j: [x+x] = 4[x], polarised cross term equals [x]
        let q_sum = qv_path(&x.add(&x).unwrap(), &p).unwrap();
        let cross = polarise(&q, &q, &q_sum).unwrap();
        for t in [0.25, 0.5, 1.0] {
            assert!((cross.eval(t)[0] - q.eval(t)[0]).abs() < 1e-12);
        }
        // x_j = 0
        let zero = CadlagPath::zero(1, 1.0).unwrap();
        let q0 = qv_path(&zero, &p).unwrap();
        let cross0 = polarise(&q, &q0, &qv_path(&x.add(&zero).unwrap(), &p).unwrap()).unwrap();
        for t in [0.25, 1.0] {
            assert!(cross0.eval(t)[0].abs() < 1e-12);
        }
    }

    #[test]
    fn two_dim_step_cross_term() {
        let x = CadlagPath::step_path(&[(0.5, vec![2.0, -3.0])], 2, 1.0).unwrap();
        let r = qv_matrix(&x, &seq(), &[3, 4, 5], 0.2).unwrap();
        let m = r.limit_at(1.0);
        assert_eq!(m, vec![4.0, -6.0, -6.0, 9.0]);
        assert_eq!(r.verdict, Verdict::Converged);
    }

    #[test]
    fn duplicated_coordinate_cross_equals_diagonal() {
        let base = faber_schauder_path(6, 17, 1.0).unwrap();
        // build the 2-d path (x, x)
        let knots: Vec<(f64, Vec<f64>, Vec<f64>)> = base
            .knot_times()
            .iter()
            .map(|t| {
                let v = base.eval(*t);
                let l = base.eval_left(*t);
                (*t, vec![l[0], l[0]], vec![v[0], v[0]])
            })
            .collect();
        let x = CadlagPath::from_knots(2, knots).unwrap();
        let r = qv_matrix(&x, &seq(), &[4, 5, 6], 1e-2).unwrap();
        let m = r.limit_at(1.0);
        assert!((m[1] - m[0]).abs() < 1e-12);
        assert!((m[2] - m[0]).abs() < 1e-12);
    }

    #[test]
    fn matrix_increments_are_psd() {
        let x = CadlagPath::step_path(&[(0.25, vec![1.0, 0.5]), (0.6, vec![-0.5, 2.0])], 2, 1.0)
            .unwrap();
        let r = qv_matrix(&x, &seq(), &[4, 5, 6], 1e-9).unwrap();
        let q = &r.levels.last().unwrap().1;
        let times = q.knot_times().to_vec();
        for w in times.windows(2) {
            let a = q.eval(w[0]);
            let b = q.eval(w[1]);
            let d: Vec<f64> = b.iter().zip(&a).map(|(x, y)| x - y).collect();
            // 2x2 PSD check: nonnegative diagonal and determinant
            assert!(d[0] >= -1e-12 && d[3] >= -1e-12);
            assert!(d[0] * d[3] - d[1] * d[2] >= -1e-12);
        }
    }

    #[test]
    fn weighted_sum_constant_weight_reproduces_qn() {
        let x = CadlagPath::indicator(0.5, 2.0, 1.0).unwrap();
        let one = |_t: f64| 1.0;
        let r = weighted_quad_sum(
            &WeightFn::Fixed(&one),
            &x,
            &seq(),
            QsVariant::I,
            1.0,
            &[3, 4, 5],
            1e-12,
        )
        .unwrap();
        for v in &r.report.values {
            assert_eq!(*v, 4.0);
        }
        assert!(r.gap < 1e-12);
    }

    #[test]
    fn weighted_sum_single_atom_all_variants() {
        let a = 2.0;
        let x = CadlagPath::indicator(0.5, a, 1.0).unwrap();
        let id = |t: f64| t;
        for variant in QsVariant::ALL {
            let r = weighted_quad_sum(
                &WeightFn::Fixed(&id),
                &x,
                &seq(),
                variant,
                1.0,
                &[10, 11, 12],
                1e-3,
            )
            .unwrap();
            // dyadic jump time: the ratio-2 extrapolation recovers the atom
            // weighted at its left limit exactly
            assert!(
                (r.report.extrapolated - 0.5 * a * a).abs() < 1e-10,
                "{variant:?}: {}",
                r.report.extrapolated
            );
        }
    }

    #[test]
    fn weighted_sum_strict_vs_inclusive_at_interior_cutoff() {
        // jump exactly at the cutoff: variants I/II include the straddling
        // increment at t_i = T, III/IV exclude it
        let x = CadlagPath::indicator(0.5, 1.0, 1.0).unwrap();
        let one = |_t: f64| 1.0;
        // T = 0.4375 is a level-4+ grid point below the jump; pick T = prev of jump
        let t_end = 0.5 - (2f64).powi(-6);
        let rincl = weighted_quad_sum(
            &WeightFn::Fixed(&one),
            &x,
            &seq(),
            QsVariant::I,
            t_end,
            &[6],
            1e-3,
        )
        .unwrap();
        let rexcl = weighted_quad_sum(
            &WeightFn::Fixed(&one),
            &x,
            &seq(),
            QsVariant::III,
            t_end,
            &[6],
            1e-3,
        )
        .unwrap();
        assert_eq!(rincl.report.values[0], 1.0);
        assert_eq!(rexcl.report.values[0], 0.0);
    }

    #[test]
    fn weighted_variant_pairwise_bound_at_interior_cutoff() {
        // inclusive vs strict cutoff differ by exactly the straddling term:
        // |v_I - v_III| <= |f(T)| * (straddling increment)^2, and likewise
        // for the right-weighted pair
        let x = CadlagPath::step_path(&[(0.3, vec![1.5]), (0.7, vec![-1.0])], 1, 1.0).unwrap();
        let id = |t: f64| t;
        for n in [5u32, 7, 9] {
            let p = seq().level(n).unwrap();
            let t_end = p.prev_point(0.7).unwrap(); // a grid point below a jump
            let (_, _, next_strict) = p.straddle(t_end).unwrap();
            let straddle_sq = (x.eval1(next_strict) - x.eval1(t_end)).powi(2);
            let value = |variant| {
                weighted_quad_sum(
                    &WeightFn::Fixed(&id),
                    &x,
                    &seq(),
                    variant,
                    t_end,
                    &[n],
                    1e-3,
                )
                .unwrap()
                .report
                .values[0]
            };
            let vi = value(QsVariant::I);
            let viii = value(QsVariant::III);
            let vii = value(QsVariant::II);
            let viv = value(QsVariant::IV);
            assert!((vi - viii).abs() <= id(t_end) * straddle_sq + 1e-14);
            assert!((vii - viv).abs() <= id(t_end) * straddle_sq + 1e-14);
        }
    }

    #[test]
    fn weighted_sum_per_level_sequence() {
        let x = CadlagPath::indicator(0.5, 1.0, 1.0).unwrap();
        let fseq = |n: u32, t: f64| t + (2f64).powi(-(n as i32));
        let r = weighted_quad_sum(
            &WeightFn::PerLevel(&fseq),
            &x,
            &seq(),
            QsVariant::II,
            1.0,
            &[8, 9, 10, 11, 12],
            1e-3,
        )
        .unwrap();
        assert!((r.report.extrapolated - 0.5).abs() < 1e-9);
    }

    #[test]
    fn stieltjes_examples() {
        // constant integrand
        let g = CadlagPath::step_path(&[(0.3, vec![1.0]), (0.8, vec![2.0])], 1, 1.0).unwrap();
        let v = stieltjes_integral1(|_| 3.0, &g, 1.0, LeftLimitMode::Declared).unwrap();
        assert!((v - 3.0 * 3.0).abs() < 1e-12);
        // single atom weighted at the left value
        let g2 = CadlagPath::indicator(0.5, 1.0, 1.0).unwrap();
        let v2 = stieltjes_integral1(|t| t, &g2, 1.0, LeftLimitMode::Declared).unwrap();
        assert!((v2 - 0.5).abs() < 1e-12);
        // affine integrator
        let g3 = CadlagPath::from_nodes(1, &[(0.0, vec![0.0]), (1.0, vec![1.0])]).unwrap();
        let v3 = stieltjes_integral1(|t| t, &g3, 1.0, LeftLimitMode::Declared).unwrap();
        assert!((v3 - 0.5).abs() < 1e-12);
        // probe mode agrees for continuous integrands
        let v4 = stieltjes_integral1(|t| t, &g2, 1.0, LeftLimitMode::Probe).unwrap();
        assert!((v4 - 0.5).abs() < 1e-6);
    }

    #[test]
    fn stieltjes_partial_upper_limit() {
        let g = CadlagPath::step_path(&[(0.3, vec![1.0]), (0.8, vec![2.0])], 1, 1.0).unwrap();
        let v = stieltjes_integral1(|_| 1.0, &g, 0.5, LeftLimitMode::Declared).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn stieltjes_domain_errors() {
        let g = CadlagPath::indicator(0.5, 1.0, 1.0).unwrap();
        assert!(stieltjes_integral1(|t| t, &g, 1.5, LeftLimitMode::Declared).is_err());
        assert!(qv_estimate(&g, &seq(), &[5], 1e-3).is_err()); // needs >= 2 levels
    }

    #[test]
    fn decompose_mixed_path_recombines() {
        let fs = faber_schauder_path(8, 42, 1.0).unwrap();
        let alpha = 1.0 / std::f64::consts::PI;
        let x = fs
            .add(&CadlagPath::indicator(alpha, 1.0, 1.0).unwrap())
            .unwrap();
        let r = qv_estimate(&x, &seq(), &[6, 7, 8], 0.2).unwrap();
        assert_eq!(r.jump_part.len(), 1);
        assert!((r.jump_part[0].1[0] - 1.0).abs() < 1e-15);
        // recombination: continuous + straddle-placed jumps == limit at knots
        let p8 = seq().level(8).unwrap();
        let sigma = p8.prev_point(alpha).unwrap();
        for t in [0.1, sigma, 0.9, 1.0] {
            let total = r.continuous_part.eval(t)[0] + if t >= sigma { 1.0 } else { 0.0 };
            assert!((total - r.limit.eval(t)[0]).abs() < 1e-12, "t={t}");
        }
        // the unit jump mass is gone from the continuous part; what remains
        // at the straddle cell is the cross term 2δ + δ² with δ the local
        // fs increment, well below the removed mass
        for (_, j) in r.continuous_part.jumps() {
            assert!(j[0].abs() < 0.6, "jump {} left in continuous part", j[0]);
        }
    }
}
