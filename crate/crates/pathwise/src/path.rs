//! Right-continuous paths with left limits, represented exactly.
//!
//! A [`CadlagPath`] is a finite list of knots `(t, x(t-), x(t))` with affine
//! interpolation between consecutive knots. Both one-sided values are stored
//! explicitly, so jumps are exact data rather than numerical differences:
//! `jump(t) = x(t) - x(t-)` never suffers cancellation, a continuous path has
//! bit-for-bit equal one-sided values, and a step path stays a step path
//! under stopping, perturbation and piecewise-constant sampling.
//!
//! Conventions pinned here:
//! * `x(0-) := x(0)`, hence `jump(0) = 0` for every path;
//! * the stopped path is `x_t(s) = x(s ∧ t)` (it keeps a jump at `t`);
//! * the left-stopped path freezes at `x(t-)` from `t` on (no jump at `t`).

use crate::error::{invalid, Error, Result};
use crate::partition::Partition;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// An `m`-dimensional cadlag path on `[0, horizon]` with finitely many
/// breakpoints. Immutable after construction; all operations return new paths.
#[derive(Debug, Clone, PartialEq)]
pub struct CadlagPath {
    dim: usize,
    /// Strictly increasing knot times; first is `0`, last is the horizon.
    times: Vec<f64>,
    /// `x(t_k-)`, flattened `knots x dim`.
    left: Vec<f64>,
    /// `x(t_k)`, flattened `knots x dim`.
    right: Vec<f64>,
}

impl CadlagPath {
    /// Build from explicit knots `(t, x(t-), x(t))`. Times must be strictly
    /// increasing starting at `0`; a final knot at the horizon is required.
    /// The left value of the first knot is forced equal to its right value.
    pub fn from_knots(dim: usize, knots: Vec<(f64, Vec<f64>, Vec<f64>)>) -> Result<Self> {
        if dim == 0 {
            return invalid("path dimension must be positive");
        }
        if knots.len() < 2 {
            return invalid("path needs at least knots at 0 and the horizon");
        }
        let mut times = Vec::with_capacity(knots.len());
        let mut left = Vec::with_capacity(knots.len() * dim);
        let mut right = Vec::with_capacity(knots.len() * dim);
        for (t, l, r) in knots {
            if l.len() != dim || r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: l.len().max(r.len()),
                });
            }
            if !t.is_finite() || !l.iter().chain(r.iter()).all(|v| v.is_finite()) {
                return invalid("knot entries must be finite");
            }
            times.push(t);
            left.extend_from_slice(&l);
            right.extend_from_slice(&r);
        }
        if times[0] != 0.0 {
            return invalid(format!("first knot must be at 0, got {}", times[0]));
        }
        if !times.windows(2).all(|w| w[0] < w[1]) {
            return invalid("knot times must be strictly increasing");
        }
        // x(0-) := x(0)
        left[..dim].copy_from_slice(&right[..dim]);
        Ok(CadlagPath {
            dim,
            times,
            left,
            right,
        }
        .pruned())
    }

    /// Drop interior knots that carry no information: no jump, flat on both
    /// sides at the same value (bit-exact comparisons only, so affine
    /// segments are never merged). Keeps representations canonical, which is
    /// what makes identities like `stop(stop(x,t),s) == stop(x, min(s,t))`
    /// hold structurally.
    fn pruned(self) -> Self {
        let n = self.times.len();
        if n <= 2 {
            return self;
        }
        let dim = self.dim;
        let mut times = Vec::with_capacity(n);
        let mut left: Vec<f64> = Vec::with_capacity(n * dim);
        let mut right: Vec<f64> = Vec::with_capacity(n * dim);
        times.push(self.times[0]);
        left.extend_from_slice(self.val(&self.left, 0));
        right.extend_from_slice(self.val(&self.right, 0));
        for k in 1..n - 1 {
            let lv = self.val(&self.left, k);
            let rv = self.val(&self.right, k);
            let last_kept_right = &right[right.len() - dim..];
            let next_left = self.val(&self.left, k + 1);
            let redundant = lv == rv && lv == last_kept_right && next_left == rv;
            if !redundant {
                times.push(self.times[k]);
                left.extend_from_slice(lv);
                right.extend_from_slice(rv);
            }
        }
        times.push(self.times[n - 1]);
        left.extend_from_slice(self.val(&self.left, n - 1));
        right.extend_from_slice(self.val(&self.right, n - 1));
        CadlagPath {
            dim,
            times,
            left,
            right,
        }
    }

    pub(crate) fn from_raw(dim: usize, times: Vec<f64>, left: Vec<f64>, right: Vec<f64>) -> Self {
        debug_assert!(times.windows(2).all(|w| w[0] < w[1]));
        debug_assert_eq!(left.len(), times.len() * dim);
        debug_assert_eq!(right.len(), times.len() * dim);
        CadlagPath {
            dim,
            times,
            left,
            right,
        }
    }

    /// Constant path.
    pub fn constant(value: Vec<f64>, horizon: f64) -> Result<Self> {
        let dim = value.len();
        CadlagPath::from_knots(
            dim,
            vec![
                (0.0, value.clone(), value.clone()),
                (horizon, value.clone(), value),
            ],
        )
    }

    /// The zero path.
    pub fn zero(dim: usize, horizon: f64) -> Result<Self> {
        CadlagPath::constant(vec![0.0; dim], horizon)
    }

    /// Step path `x(t) = Σ_{s <= t} jump(s)` from jumps at strictly
    /// increasing times in `(0, horizon]`. Starts at zero.
    pub fn step_path(jumps: &[(f64, Vec<f64>)], dim: usize, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return invalid("horizon must be positive");
        }
        let mut knots = Vec::with_capacity(jumps.len() + 2);
        knots.push((0.0, vec![0.0; dim], vec![0.0; dim]));
        let mut cum = vec![0.0; dim];
        let mut prev_t = 0.0;
        for (t, j) in jumps {
            if *t <= prev_t {
                return invalid(format!(
                    "jump times must be strictly increasing in (0, horizon]; got {t} after {prev_t}"
                ));
            }
            if *t > horizon {
                return invalid(format!("jump time {t} beyond horizon {horizon}"));
            }
            if j.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: j.len(),
                });
            }
            let before = cum.clone();
            for d in 0..dim {
                cum[d] += j[d];
            }
            knots.push((*t, before, cum.clone()));
            prev_t = *t;
        }
        if prev_t < horizon {
            knots.push((horizon, cum.clone(), cum));
        }
        CadlagPath::from_knots(dim, knots)
    }

    /// Scalar step path with a single jump: `a * 1_{[s, horizon]}`.
    pub fn indicator(s: f64, a: f64, horizon: f64) -> Result<Self> {
        CadlagPath::step_path(&[(s, vec![a])], 1, horizon)
    }

    /// Continuous piecewise-linear path through `(t, value)` nodes. The first
    /// node must be at `0`; the last node sets the horizon.
    pub fn from_nodes(dim: usize, nodes: &[(f64, Vec<f64>)]) -> Result<Self> {
        let knots = nodes
            .iter()
            .map(|(t, v)| (*t, v.clone(), v.clone()))
            .collect();
        CadlagPath::from_knots(dim, knots)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn knot_times(&self) -> &[f64] {
        &self.times
    }

    fn val<'a>(&self, buf: &'a [f64], k: usize) -> &'a [f64] {
        &buf[k * self.dim..(k + 1) * self.dim]
    }

    pub(crate) fn right_at_knot(&self, k: usize) -> &[f64] {
        self.val(&self.right, k)
    }

    pub(crate) fn left_at_knot(&self, k: usize) -> &[f64] {
        self.val(&self.left, k)
    }

    fn assert_domain(&self, t: f64) {
        assert!(
            (0.0..=self.horizon()).contains(&t),
            "t = {t} outside path domain [0, {}]",
            self.horizon()
        );
    }

    /// Index of the last knot with time `<= t`.
    fn knot_before(&self, t: f64) -> usize {
        self.times.partition_point(|u| *u <= t) - 1
    }

    fn interp_into(&self, t: f64, out: &mut [f64]) {
        let k = self.knot_before(t);
        if self.times[k] == t {
            out.copy_from_slice(self.val(&self.right, k));
            return;
        }
        let t0 = self.times[k];
        let t1 = self.times[k + 1];
        let frac = (t - t0) / (t1 - t0);
        let r = self.val(&self.right, k);
        let l = self.val(&self.left, k + 1);
        for d in 0..self.dim {
            out[d] = r[d] + (l[d] - r[d]) * frac;
        }
    }

    /// `x(t)`. Panics if `t` is outside `[0, horizon]`; see [`Self::try_eval`].
    pub fn eval(&self, t: f64) -> Vec<f64> {
        self.assert_domain(t);
        let mut out = vec![0.0; self.dim];
        self.interp_into(t, &mut out);
        out
    }

    /// `x(t-)`, with `x(0-) = x(0)`.
    pub fn eval_left(&self, t: f64) -> Vec<f64> {
        self.assert_domain(t);
        let k = self.knot_before(t);
        if self.times[k] == t {
            return self.val(&self.left, k).to_vec();
        }
        self.eval(t)
    }

    /// `Δx(t) = x(t) - x(t-)`; exactly zero off the knot set and at `0`.
    pub fn jump_at(&self, t: f64) -> Vec<f64> {
        self.assert_domain(t);
        let k = self.knot_before(t);
        if self.times[k] == t {
            let r = self.val(&self.right, k);
            let l = self.val(&self.left, k);
            return r.iter().zip(l).map(|(a, b)| a - b).collect();
        }
        vec![0.0; self.dim]
    }

    /// Checked evaluation for untrusted input.
    pub fn try_eval(&self, t: f64) -> Result<Vec<f64>> {
        if !(0.0..=self.horizon()).contains(&t) {
            return invalid(format!("t = {t} outside [0, {}]", self.horizon()));
        }
        Ok(self.eval(t))
    }

    /// Scalar evaluation shorthand; panics unless `dim == 1`.
    pub fn eval1(&self, t: f64) -> f64 {
        assert_eq!(self.dim, 1, "eval1 requires a scalar path");
        self.eval(t)[0]
    }

    pub fn eval1_left(&self, t: f64) -> f64 {
        assert_eq!(self.dim, 1, "eval1_left requires a scalar path");
        self.eval_left(t)[0]
    }

    /// Nonzero jumps `(t, Δx(t))` in time order.
    pub fn jumps(&self) -> Vec<(f64, Vec<f64>)> {
        let mut out = Vec::new();
        for k in 1..self.times.len() {
            let r = self.val(&self.right, k);
            let l = self.val(&self.left, k);
            if r != l {
                out.push((self.times[k], r.iter().zip(l).map(|(a, b)| a - b).collect()));
            }
        }
        out
    }

    /// `true` when the path is piecewise constant (every inter-knot segment
    /// is flat, bit-exactly).
    pub fn is_step(&self) -> bool {
        (0..self.times.len() - 1).all(|k| self.val(&self.right, k) == self.val(&self.left, k + 1))
    }

    /// `x(· ∧ t)`: frozen at `x(t)` from `t` on. Keeps the jump at `t`.
    pub fn stop(&self, t: f64) -> CadlagPath {
        self.assert_domain(t);
        if t == self.horizon() {
            return self.clone();
        }
        let k = self.knot_before(t);
        let mut times = self.times[..=k].to_vec();
        let mut left = self.left[..(k + 1) * self.dim].to_vec();
        let mut right = self.right[..(k + 1) * self.dim].to_vec();
        let frozen = if self.times[k] == t {
            self.val(&self.right, k).to_vec()
        } else {
            let mut v = vec![0.0; self.dim];
            self.interp_into(t, &mut v);
            times.push(t);
            left.extend_from_slice(&v);
            right.extend_from_slice(&v);
            v
        };
        times.push(self.horizon());
        left.extend_from_slice(&frozen);
        right.extend_from_slice(&frozen);
        CadlagPath::from_raw(self.dim, times, left, right).pruned()
    }

    /// Frozen at `x(t-)` from `t` on; the jump at `t` (if any) is removed.
    pub fn stop_left(&self, t: f64) -> CadlagPath {
        self.assert_domain(t);
        if t == 0.0 {
            return CadlagPath::constant(self.val(&self.right, 0).to_vec(), self.horizon())
                .expect("constant path");
        }
        let lv = self.eval_left(t);
        let k = self.knot_before(t);
        let keep = if self.times[k] == t { k } else { k + 1 };
        let mut times = self.times[..keep].to_vec();
        let mut left = self.left[..keep * self.dim].to_vec();
        let mut right = self.right[..keep * self.dim].to_vec();
        times.push(t);
        left.extend_from_slice(&lv);
        right.extend_from_slice(&lv);
        if t < self.horizon() {
            times.push(self.horizon());
            left.extend_from_slice(&lv);
            right.extend_from_slice(&lv);
        }
        CadlagPath::from_raw(self.dim, times, left, right).pruned()
    }

    /// `x_t + e · 1_{[t, horizon]}`: the stopped path bumped by `e` from `t`
    /// on. The jump at `t` becomes `Δx(t) + e`.
    pub fn vertical_perturb(&self, t: f64, e: &[f64]) -> Result<CadlagPath> {
        if e.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: e.len(),
            });
        }
        self.assert_domain(t);
        let rv: Vec<f64> = self.eval(t).iter().zip(e).map(|(a, b)| a + b).collect();
        let lv = if t == 0.0 {
            rv.clone()
        } else {
            self.eval_left(t)
        };
        let k = self.knot_before(t);
        let keep = if self.times[k] == t { k } else { k + 1 };
        let mut times = self.times[..keep].to_vec();
        let mut left = self.left[..keep * self.dim].to_vec();
        let mut right = self.right[..keep * self.dim].to_vec();
        times.push(t);
        left.extend_from_slice(&lv);
        right.extend_from_slice(&rv);
        if t < self.horizon() {
            times.push(self.horizon());
            left.extend_from_slice(&rv);
            right.extend_from_slice(&rv);
        }
        Ok(CadlagPath::from_raw(self.dim, times, left, right).pruned())
    }

    /// Forward-sampled piecewise-constant approximation along a partition:
    /// constant `x(t_{i+1})` on `[t_i, t_{i+1})`, and `x(T)` at the horizon.
    pub fn pc_approx(&self, p: &Partition) -> Result<CadlagPath> {
        if p.horizon() != self.horizon() {
            return Err(Error::GridMismatch(format!(
                "partition horizon {} does not cover path horizon {}",
                p.horizon(),
                self.horizon()
            )));
        }
        let grid = p.points();
        let vals = self.values_on_grid(grid);
        let n = grid.len();
        let dim = self.dim;
        let mut times = Vec::with_capacity(n);
        let mut left = Vec::with_capacity(n * dim);
        let mut right = Vec::with_capacity(n * dim);
        let cell = |i: usize| &vals[(i + 1) * dim..(i + 2) * dim]; // value x(t_{i+1}) on cell i
        times.push(0.0);
        left.extend_from_slice(cell(0));
        right.extend_from_slice(cell(0));
        for (i, gt) in grid.iter().enumerate().take(n - 1).skip(1) {
            times.push(*gt);
            left.extend_from_slice(cell(i - 1));
            right.extend_from_slice(cell(i));
        }
        times.push(grid[n - 1]);
        left.extend_from_slice(cell(n - 2));
        right.extend_from_slice(&vals[(n - 1) * dim..n * dim]);
        Ok(CadlagPath::from_raw(dim, times, left, right).pruned())
    }

    /// Continuous piecewise-linear interpolation along a partition, through
    /// the left limits `x(t_i-)` (so a jump is ramped over the grid cell that
    /// follows it, never anticipated). Identical to interpolating the values
    /// for continuous paths.
    pub fn pl_approx(&self, p: &Partition) -> Result<CadlagPath> {
        if p.horizon() != self.horizon() {
            return Err(Error::GridMismatch(format!(
                "partition horizon {} does not cover path horizon {}",
                p.horizon(),
                self.horizon()
            )));
        }
        let grid = p.points();
        let dim = self.dim;
        let mut times = Vec::with_capacity(grid.len());
        let mut left = Vec::with_capacity(grid.len() * dim);
        let mut right = Vec::with_capacity(grid.len() * dim);
        for t in grid {
            let v = self.eval_left(*t);
            times.push(*t);
            left.extend_from_slice(&v);
            right.extend_from_slice(&v);
        }
        Ok(CadlagPath::from_raw(dim, times, left, right).pruned())
    }

    /// `x(g)` for a sorted grid `g`, flattened `grid.len() x dim`.
    /// Single merge pass over knots and grid.
    pub fn values_on_grid(&self, grid: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; grid.len() * self.dim];
        let mut k = 0usize;
        for (gi, t) in grid.iter().enumerate() {
            self.assert_domain(*t);
            while k + 1 < self.times.len() && self.times[k + 1] <= *t {
                k += 1;
            }
            let slot = &mut out[gi * self.dim..(gi + 1) * self.dim];
            if self.times[k] == *t {
                slot.copy_from_slice(self.val(&self.right, k));
            } else {
                let t0 = self.times[k];
                let t1 = self.times[k + 1];
                let frac = (*t - t0) / (t1 - t0);
                let r = self.val(&self.right, k);
                let l = self.val(&self.left, k + 1);
                for d in 0..self.dim {
                    slot[d] = r[d] + (l[d] - r[d]) * frac;
                }
            }
        }
        out
    }

    /// Pointwise sum of two paths on the same horizon.
    pub fn add(&self, other: &CadlagPath) -> Result<CadlagPath> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        if other.horizon() != self.horizon() {
            return Err(Error::GridMismatch(
                "paths must share a horizon to be added".into(),
            ));
        }
        let mut times: Vec<f64> = Vec::with_capacity(self.times.len() + other.times.len());
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.times.len() || j < other.times.len() {
            let a = self.times.get(i).copied().unwrap_or(f64::INFINITY);
            let b = other.times.get(j).copied().unwrap_or(f64::INFINITY);
            if a <= b {
                times.push(a);
                i += 1;
                if a == b {
                    j += 1;
                }
            } else {
                times.push(b);
                j += 1;
            }
        }
        let dim = self.dim;
        let mut left = Vec::with_capacity(times.len() * dim);
        let mut right = Vec::with_capacity(times.len() * dim);
        for t in &times {
            let la = self.eval_left(*t);
            let lb = other.eval_left(*t);
            let ra = self.eval(*t);
            let rb = other.eval(*t);
            for d in 0..dim {
                left.push(la[d] + lb[d]);
                right.push(ra[d] + rb[d]);
            }
        }
        Ok(CadlagPath::from_raw(dim, times, left, right).pruned())
    }

    /// Extract one coordinate as a scalar path.
    pub fn component(&self, d: usize) -> Result<CadlagPath> {
        if d >= self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: d,
            });
        }
        let n = self.times.len();
        let mut left = Vec::with_capacity(n);
        let mut right = Vec::with_capacity(n);
        for k in 0..n {
            left.push(self.left[k * self.dim + d]);
            right.push(self.right[k * self.dim + d]);
        }
        Ok(CadlagPath::from_raw(1, self.times.clone(), left, right).pruned())
    }

    /// Scalar path `x_i + x_j`.
    pub fn component_sum(&self, i: usize, j: usize) -> Result<CadlagPath> {
        if i >= self.dim || j >= self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: i.max(j),
            });
        }
        let n = self.times.len();
        let mut left = Vec::with_capacity(n);
        let mut right = Vec::with_capacity(n);
        for k in 0..n {
            left.push(self.left[k * self.dim + i] + self.left[k * self.dim + j]);
            right.push(self.right[k * self.dim + i] + self.right[k * self.dim + j]);
        }
        Ok(CadlagPath::from_raw(1, self.times.clone(), left, right).pruned())
    }

    /// Pointwise scalar multiple.
    pub fn scale(&self, a: f64) -> CadlagPath {
        let mut p = self.clone();
        for v in p.left.iter_mut().chain(p.right.iter_mut()) {
            *v *= a;
        }
        p
    }

    /// Uniform (sup) distance in the max norm, exact for piecewise-affine pairs.
    pub fn sup_distance(&self, other: &CadlagPath) -> Result<f64> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        if other.horizon() != self.horizon() {
            return Err(Error::GridMismatch("paths must share a horizon".into()));
        }
        let gap = |a: &[f64], b: &[f64]| -> f64 {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        };
        let mut best: f64 = 0.0;
        let mut push = |d: f64| best = best.max(d);
        let mut all_times: Vec<f64> = self
            .times
            .iter()
            .chain(other.times.iter())
            .copied()
            .collect();
        all_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        all_times.dedup();
        for t in &all_times {
            push(gap(&self.eval(*t), &other.eval(*t)));
            push(gap(&self.eval_left(*t), &other.eval_left(*t)));
        }
        Ok(best)
    }
}

/// Synthetic continuous path with unit quadratic-variation density along the
/// dyadic sequence, built by midpoint displacement with ±1 coefficients.
///
/// On `[0, 1]` the path is `x(t) = σ·t + Σ_{m<M} Σ_k σ_{m,k} 2^{-m/2} Λ(2^m t - k)`
/// with `Λ(u) = max(0, 1/2 - |u - 1/2|)`; for a general horizon `T` time is
/// scaled by `T` and values by `√T`, so the level-`n` dyadic quadratic sums
/// equal `T` exactly for every `n <= M`. Deterministic given the seed.
pub fn faber_schauder_path(levels: u32, seed: u64, horizon: f64) -> Result<CadlagPath> {
    if !(1..=24).contains(&levels) {
        return invalid(format!("levels must be in 1..=24, got {levels}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut signs = Vec::with_capacity(1usize << levels);
    // one sign for the linear top level, then 2^m per displacement level
    let total = 1 + ((1usize << levels) - 1);
    for _ in 0..total {
        signs.push(if rng.gen::<bool>() { 1.0 } else { -1.0 });
    }
    faber_schauder_path_with_signs(levels, &signs, horizon)
}

/// Deterministic variant with explicit signs: `signs[0]` drives the linear
/// term, followed by levels `m = 0..M` in order, `2^m` signs each.
pub fn faber_schauder_path_with_signs(
    levels: u32,
    signs: &[f64],
    horizon: f64,
) -> Result<CadlagPath> {
    if !(horizon > 0.0) {
        return invalid("horizon must be positive");
    }
    let m_levels = levels as usize;
    let n = 1usize << m_levels;
    let need = 1 + (n - 1);
    if signs.len() < need {
        return invalid(format!(
            "need {need} signs for {levels} levels, got {}",
            signs.len()
        ));
    }
    let mut u = vec![0.0f64; n + 1];
    u[n] = signs[0];
    let mut si = 1usize;
    for m in 0..m_levels {
        let step = n >> m;
        let half = step / 2;
        let amp = 0.5 * (2f64).powf(-(m as f64) / 2.0);
        for k in 0..(1usize << m) {
            let lo = k * step;
            let hi = lo + step;
            u[lo + half] = 0.5 * (u[lo] + u[hi]) + signs[si] * amp;
            si += 1;
        }
    }
    let vscale = horizon.sqrt();
    let knots: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..=n)
        .map(|k| {
            let t = horizon * (k as f64 / n as f64);
            let v = vec![vscale * u[k]];
            (t, v.clone(), v)
        })
        .collect();
    CadlagPath::from_knots(1, knots)
}

// ---------------------------------------------------------------------------
// Incremental left-stopped sweeps (crate internal)
// ---------------------------------------------------------------------------

/// Incrementally maintained `(x^n)_{t_i-}` along a grid: the left-stopped
/// forward-sampled piecewise-constant path the left Riemann sums evaluate
/// integrands on. Index 0 yields the constant-`x(0)` path, matching the
/// classical first Riemann term.
pub(crate) struct PcLeftSweep {
    path: CadlagPath,
    grid: Vec<f64>,
    vals: Vec<f64>, // x at grid points, flattened
    dim: usize,
    idx: usize,
}

impl PcLeftSweep {
    pub fn new(x: &CadlagPath, grid: &[f64]) -> Self {
        let vals = x.values_on_grid(grid);
        let dim = x.dim();
        let x0 = &vals[0..dim];
        let horizon = x.horizon();
        let path = CadlagPath::from_raw(
            dim,
            vec![0.0, horizon],
            [x0, x0].concat(),
            [x0, x0].concat(),
        );
        PcLeftSweep {
            path,
            grid: grid.to_vec(),
            vals,
            dim,
            idx: 0,
        }
    }

    pub fn grid_value(&self, i: usize) -> &[f64] {
        &self.vals[i * self.dim..(i + 1) * self.dim]
    }

    /// The left-stopped pc path for the current index.
    pub fn path(&self) -> &CadlagPath {
        &self.path
    }

    /// Advance from index `i` to `i + 1`.
    pub fn advance(&mut self) {
        let i = self.idx;
        let dim = self.dim;
        let horizon = *self.grid.last().unwrap();
        let pop = |p: &mut CadlagPath| {
            p.times.pop();
            p.left.truncate(p.left.len() - dim);
            p.right.truncate(p.right.len() - dim);
        };
        let push = |p: &mut CadlagPath, t: f64, l: &[f64], r: &[f64]| {
            p.times.push(t);
            p.left.extend_from_slice(l);
            p.right.extend_from_slice(r);
        };
        if i == 0 {
            // L_1 = constant x(t_1)
            let v1 = self.grid_value(1.min(self.grid.len() - 1)).to_vec();
            pop(&mut self.path);
            pop(&mut self.path);
            push(&mut self.path, 0.0, &v1, &v1);
            if horizon > 0.0 {
                push(&mut self.path, horizon, &v1, &v1);
            }
        } else if i + 1 < self.grid.len() {
            // replace frozen tail: add cell [t_i, t_{i+1}) with value x(t_{i+1})
            let t_i = self.grid[i];
            let vi = self.grid_value(i).to_vec();
            let vnext = self.grid_value(i + 1).to_vec();
            pop(&mut self.path); // horizon knot
            if t_i < horizon {
                push(&mut self.path, t_i, &vi, &vnext);
                push(&mut self.path, horizon, &vnext, &vnext);
            } else {
                push(&mut self.path, horizon, &vi, &vnext);
            }
        }
        self.idx += 1;
    }
}

/// Incrementally maintained plain stop `x_s` at nondecreasing times, for
/// integrands evaluated at `(s, x_s)` along many quadrature nodes.
pub(crate) struct RawStopSweep<'a> {
    x: &'a CadlagPath,
    built: CadlagPath,
    consumed: usize,
    last_s: f64,
}

impl<'a> RawStopSweep<'a> {
    pub fn new(x: &'a CadlagPath) -> Self {
        let v0 = x.right_at_knot(0).to_vec();
        let built = CadlagPath::constant(v0, x.horizon()).expect("constant path");
        RawStopSweep {
            x,
            built,
            consumed: 1,
            last_s: 0.0,
        }
    }

    /// The path stopped at `s`; calls must use nondecreasing `s`.
    pub fn at(&mut self, s: f64) -> &CadlagPath {
        assert!(s >= self.last_s, "RawStopSweep times must be nondecreasing");
        self.last_s = s;
        let dim = self.x.dim();
        let horizon = self.x.horizon();
        if s == 0.0 {
            return &self.built;
        }
        if s == horizon {
            self.built = self.x.clone();
            self.consumed = self.x.times.len();
            return &self.built;
        }
        let base = self.consumed;
        self.built.times.truncate(base);
        self.built.left.truncate(base * dim);
        self.built.right.truncate(base * dim);
        while self.consumed < self.x.times.len() && self.x.times[self.consumed] < s {
            let k = self.consumed;
            self.built.times.push(self.x.times[k]);
            self.built.left.extend_from_slice(self.x.left_at_knot(k));
            self.built.right.extend_from_slice(self.x.right_at_knot(k));
            self.consumed += 1;
        }
        let (lv, rv) = if self.consumed < self.x.times.len() && self.x.times[self.consumed] == s {
            (
                self.x.left_at_knot(self.consumed).to_vec(),
                self.x.right_at_knot(self.consumed).to_vec(),
            )
        } else {
            let v = self.x.eval(s);
            (v.clone(), v)
        };
        self.built.times.push(s);
        self.built.left.extend_from_slice(&lv);
        self.built.right.extend_from_slice(&rv);
        self.built.times.push(horizon);
        self.built.left.extend_from_slice(&rv);
        self.built.right.extend_from_slice(&rv);
        &self.built
    }
}

/// Incrementally maintained left-stop of the raw path at nondecreasing times,
/// for integrands evaluated at `(s, x_{s-})` along many atoms.
pub(crate) struct RawLeftStopSweep<'a> {
    x: &'a CadlagPath,
    built: CadlagPath,
    consumed: usize, // knots of x fully behind the current stop time
    last_s: f64,
}

impl<'a> RawLeftStopSweep<'a> {
    pub fn new(x: &'a CadlagPath) -> Self {
        let built =
            CadlagPath::constant(x.right_at_knot(0).to_vec(), x.horizon()).expect("constant path");
        RawLeftStopSweep {
            x,
            built,
            consumed: 1,
            last_s: 0.0,
        }
    }

    /// The path left-stopped at `s`; calls must use nondecreasing `s`.
    pub fn at(&mut self, s: f64) -> &CadlagPath {
        assert!(
            s >= self.last_s,
            "RawLeftStopSweep times must be nondecreasing"
        );
        self.last_s = s;
        if s == 0.0 {
            return &self.built;
        }
        let dim = self.x.dim();
        let horizon = self.x.horizon();
        // drop the frozen tail (stop knot + horizon knot, possibly equal)
        let base = self.consumed;
        self.built.times.truncate(base);
        self.built.left.truncate(base * dim);
        self.built.right.truncate(base * dim);
        // absorb knots strictly before s
        while self.consumed < self.x.times.len() && self.x.times[self.consumed] < s {
            let k = self.consumed;
            self.built.times.push(self.x.times[k]);
            self.built.left.extend_from_slice(self.x.left_at_knot(k));
            self.built.right.extend_from_slice(self.x.right_at_knot(k));
            self.consumed += 1;
        }
        let lv = self.x.eval_left(s);
        self.built.times.push(s);
        self.built.left.extend_from_slice(&lv);
        self.built.right.extend_from_slice(&lv);
        if s < horizon {
            self.built.times.push(horizon);
            self.built.left.extend_from_slice(&lv);
            self.built.right.extend_from_slice(&lv);
        }
        &self.built
    }
}
