//! Higher-level identities and demos built on the integration layer: the
//! product rule for pathwise integrals, the path-dependent 1-form identity,
//! harmonic-functional representation, the fair-game perturbation, and the
//! counterexample probes separating the topologies involved.

use crate::error::{invalid, Error, Result};
use crate::functional::probes::DerivSchedule;
use crate::functional::{C2Fn, Functional, FunctionalClass};
use crate::integrate::{riemann_sum, Integrand};
use crate::partition::{Partition, PartitionSequence};
use crate::path::{CadlagPath, PcLeftSweep, RawLeftStopSweep};
use crate::quadvar::{qv_estimate, qv_level1, QvResult};
use crate::report::Verdict;
use crate::skorokhod::skorokhod_distance;
use std::sync::Arc;

/// Per-level account of an identity `lhs = Σ rhs components`.
#[derive(Debug, Clone)]
pub struct IdentityResidual {
    pub levels: Vec<u32>,
    pub lhs: Vec<f64>,
    /// Named right-hand-side components per level (level-independent
    /// components are repeated).
    pub rhs_components: Vec<(String, Vec<f64>)>,
    /// `lhs - Σ components` per level.
    pub residuals: Vec<f64>,
    pub verdict: Verdict,
    pub tol: f64,
}

impl IdentityResidual {
    fn assemble(
        levels: &[u32],
        lhs: Vec<f64>,
        rhs_components: Vec<(String, Vec<f64>)>,
        tol: f64,
    ) -> Self {
        let residuals: Vec<f64> = (0..levels.len())
            .map(|k| {
                let rhs: f64 = rhs_components.iter().map(|(_, v)| v[k]).sum();
                lhs[k] - rhs
            })
            .collect();
        // the identity is asserted at the top level; coarser levels are
        // kept for the decay trace
        let verdict = if residuals.last().is_some_and(|r| r.abs() <= tol) {
            Verdict::Converged
        } else {
            Verdict::Diverged
        };
        IdentityResidual {
            levels: levels.to_vec(),
            lhs,
            rhs_components,
            residuals,
            verdict,
            tol,
        }
    }

    pub fn top_residual(&self) -> f64 {
        *self.residuals.last().expect("at least one level")
    }

    pub fn abs_residuals(&self) -> Vec<f64> {
        self.residuals.iter().map(|r| r.abs()).collect()
    }
}

/// The bracket `{φ, ψ}` as a scalar functional:
/// `(t, x) ↦ (ψ ∫φdx + φ ∫ψdx)(t, x_{t-})`, inner integrals at the supplied
/// partition level.
pub struct BracketFunctional {
    inner: Integrand,
}

/// Build `{φ, ψ}` for scalar paths. The integrand form (usable inside
/// `∫{φ,ψ}dx`, where inner integrals run at the ambient sweep level) is
/// `Integrand::Bracket`.
pub fn bracket(phi: Integrand, psi: Integrand, grid: Partition) -> BracketFunctional {
    BracketFunctional {
        inner: Integrand::Bracket(Box::new(phi), Box::new(psi), grid),
    }
}

impl Functional for BracketFunctional {
    fn value(&self, t: f64, path: &CadlagPath) -> f64 {
        let left = path.stop_left(t);
        self.inner
            .value(t, &left)
            .expect("bracket integrand evaluation")[0]
    }

    fn name(&self) -> String {
        "bracket".into()
    }
}

/// `∫_0^T <φψ', d[x]>` against a quadratic-variation estimate: atoms (and
/// the first-cell mass at 0) weighted by the integrand values on the
/// left-stopped raw path, in time order.
fn qv_pairing(
    phi: &Integrand,
    psi: &Integrand,
    x: &CadlagPath,
    qv: &QvResult,
    t_end: f64,
) -> Result<f64> {
    let m = x.dim();
    let q = &qv.limit;
    let mut sweep = RawLeftStopSweep::new(x);
    let mut total = 0.0;
    let mut add_mass = |t: f64, mass: &[f64], sweep: &mut RawLeftStopSweep| -> Result<()> {
        let y = sweep.at(t);
        let a = phi.value(t, y)?;
        let b = psi.value(t, y)?;
        for i in 0..m {
            for j in 0..m {
                total += a[i] * b[j] * mass[i * m + j];
            }
        }
        Ok(())
    };
    // first-cell mass sits in the value at 0
    let q0 = q.eval(0.0);
    add_mass(0.0, &q0, &mut sweep)?;
    let times = q.knot_times().to_vec();
    for (k, tk) in times.iter().enumerate().skip(1) {
        if *tk > t_end {
            break;
        }
        let r = q.right_at_knot(k);
        let l = q.left_at_knot(k);
        if r != l {
            let mass: Vec<f64> = r.iter().zip(l).map(|(a, b)| a - b).collect();
            add_mass(*tk, &mass, &mut sweep)?;
        }
    }
    Ok(total)
}

/// Product rule for pathwise integrals:
/// `(∫φdx)(∫ψdx) = ∫φψ'd[x] + ∫{φ,ψ}dx`, verified per level.
#[allow(clippy::too_many_arguments)]
pub fn kw_check(
    phi: &Integrand,
    psi: &Integrand,
    x: &CadlagPath,
    seq: &PartitionSequence,
    levels: &[u32],
    qv: &QvResult,
    t_end: f64,
    tol: f64,
) -> Result<IdentityResidual> {
    if levels.is_empty() {
        return invalid("kw_check needs at least one level");
    }
    if qv.verdict != Verdict::Converged {
        return Err(Error::Precondition(
            "kw_check needs a converged quadratic-variation estimate".into(),
        ));
    }
    let stieltjes_term = qv_pairing(phi, psi, x, qv, t_end)?;
    let mut lhs = Vec::with_capacity(levels.len());
    let mut bracket_terms = Vec::with_capacity(levels.len());
    for n in levels {
        let p = seq.level(*n)?;
        let ia = riemann_sum(phi, x, &p, t_end)?;
        let ib = riemann_sum(psi, x, &p, t_end)?;
        lhs.push(ia * ib);
        let br = Integrand::Bracket(Box::new(phi.clone()), Box::new(psi.clone()), p.clone());
        bracket_terms.push(riemann_sum(&br, x, &p, t_end)?);
    }
    Ok(IdentityResidual::assemble(
        levels,
        lhs,
        vec![
            ("stieltjes".into(), vec![stieltjes_term; levels.len()]),
            ("bracket_integral".into(), bracket_terms),
        ],
        tol,
    ))
}

/// The 1-form integral identity: for `f_i ∈ C¹`,
/// `∫ ((∫f_i∘x_i dx_i)(t-))' dx = Σ_i ( ∫ (x_i(T) - x_i) f_i∘x_i dx_i - ∫ f_i∘x_i d[x_i] )`.
pub fn one_form_identity_check(
    fs: &[C2Fn],
    x: &CadlagPath,
    seq: &PartitionSequence,
    levels: &[u32],
    qv: &QvResult,
    t_end: f64,
    tol: f64,
) -> Result<IdentityResidual> {
    let m = x.dim();
    if fs.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: fs.len(),
        });
    }
    if qv.verdict != Verdict::Converged {
        return Err(Error::Precondition(
            "one_form_identity_check needs a converged quadratic variation".into(),
        ));
    }
    // Σ_i ∫ f_i∘x_i d[x_i] against the diagonal of the qv estimate
    let mut d_qv_term = 0.0;
    for (d, f) in fs.iter().enumerate() {
        let q_dd = qv.limit.component(d * m + d)?;
        let x_d = x.component(d)?;
        let fd = f.f.clone();
        let weight = move |s: f64| vec![(fd)(x_d.eval_left(s)[0])];
        d_qv_term += crate::quadvar::qv_stieltjes(
            &weight,
            &q_dd,
            t_end,
            crate::quadvar::LeftLimitMode::Declared,
        )?;
    }
    let x_t_end = x.eval(t_end);
    let mut lhs = Vec::with_capacity(levels.len());
    let mut weighted_terms = Vec::with_capacity(levels.len());
    for n in levels {
        let p = seq.level(*n)?;
        let one_form = Integrand::OneForm(fs.to_vec());
        lhs.push(riemann_sum(&one_form, x, &p, t_end)?);
        // Σ_i ∫ (x_i(T) - x_i(s)) f_i(x_i(s)) dx_i as a left Riemann sum
        let fs_owned: Vec<C2Fn> = fs.to_vec();
        let xt = x_t_end.clone();
        let weighted = Integrand::LeftPoint(Arc::new(move |_t, u: &[f64]| {
            (0..u.len())
                .map(|d| (xt[d] - u[d]) * (fs_owned[d].f)(u[d]))
                .collect()
        }));
        weighted_terms.push(riemann_sum(&weighted, x, &p, t_end)?);
    }
    Ok(IdentityResidual::assemble(
        levels,
        lhs,
        vec![
            ("weighted_integral".into(), weighted_terms),
            ("minus_qv_integral".into(), vec![-d_qv_term; levels.len()]),
        ],
        tol,
    ))
}

/// A `C^{1,2}` function of `(t, u)` with the derivatives the harmonic check
/// needs (scalar state).
#[derive(Clone)]
pub struct HeatFn {
    pub name: String,
    pub f: std::sync::Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub ft: std::sync::Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub fu: std::sync::Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub fuu: std::sync::Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl HeatFn {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        ft: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        fu: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        fuu: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        HeatFn {
            name: name.into(),
            f: std::sync::Arc::new(f),
            ft: std::sync::Arc::new(ft),
            fu: std::sync::Arc::new(fu),
            fuu: std::sync::Arc::new(fuu),
        }
    }

    /// `u² - t`: harmonic for unit quadratic-variation density.
    pub fn square_minus_t() -> Self {
        HeatFn::new(
            "u^2 - t",
            |t, u| u * u - t,
            |_, _| -1.0,
            |_, u| 2.0 * u,
            |_, _| 2.0,
        )
    }

    /// `u³ - 3tu`: the degree-3 heat polynomial.
    pub fn cubic_heat() -> Self {
        HeatFn::new(
            "u^3 - 3tu",
            |t, u| u * u * u - 3.0 * t * u,
            |_, u| -3.0 * u,
            |t, u| 3.0 * u * u - 3.0 * t,
            |_, u| 6.0 * u,
        )
    }

    /// Affine in `u`: harmonic for every density.
    pub fn affine(alpha: f64, beta: f64) -> Self {
        HeatFn::new(
            format!("affine({alpha},{beta})"),
            move |_, u| alpha + beta * u,
            |_, _| 0.0,
            move |_, _| beta,
            |_, _| 0.0,
        )
    }
}

/// Outcome of the harmonicity check for a `C^{1,2}` function of `(t, x(t))`
/// on a path with quadratic-variation density `Σ`.
#[derive(Debug, Clone)]
pub struct HarmonicReport {
    /// `(t, D_tf + (1/2) f_uu Σ)` samples along the path.
    pub pde_samples: Vec<(f64, f64)>,
    pub pde_max_abs: f64,
    /// Residuals of `F(T, x_T) - F(0, x_0) = ∫ ∇F dx` per level.
    pub representation: IdentityResidual,
    /// Worst relative gap between the quadratic-variation increments and `Σ`
    /// over the membership windows.
    pub membership_gap: f64,
}

/// Verify that `f(t, x(t))` solves the harmonic equation
/// `D_t f + (1/2) f_uu Σ = 0` along the path and that it is represented by
/// its own pathwise integral, `f(T,x(T)) - f(0,x(0)) = ∫ f_u(t, x(t-)) dx`.
///
/// The path must lie in the `Σ`-density class: the quadratic-variation
/// estimate's coarse-window increments must match `Σ` within
/// `membership_rel_tol` (an empirical surrogate for `d[x]/dt = Σ`).
#[allow(clippy::too_many_arguments)]
pub fn harmonic_check(
    f: &HeatFn,
    sigma: &(dyn Fn(f64, f64) -> f64 + Sync),
    x: &CadlagPath,
    seq: &PartitionSequence,
    levels: &[u32],
    qv: &QvResult,
    t_end: f64,
    tol: f64,
    membership_rel_tol: f64,
) -> Result<HarmonicReport> {
    if x.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: x.dim(),
        });
    }
    if qv.verdict != Verdict::Converged {
        return Err(Error::Precondition(
            "harmonic_check needs a converged quadratic variation".into(),
        ));
    }
    // Σ-density membership over coarse windows
    let windows = 8usize;
    let mut membership_gap: f64 = 0.0;
    for k in 0..windows {
        let a = t_end * k as f64 / windows as f64;
        let b = t_end * (k + 1) as f64 / windows as f64;
        let q_inc = qv.limit.eval(b)[0] - qv.limit.eval(a)[0]
            + if k == 0 { qv.limit.eval(0.0)[0] } else { 0.0 };
        let mid = 0.5 * (a + b);
        let sig = sigma(mid, x.eval(mid)[0]);
        let expect = sig * (b - a);
        let rel = if expect.abs() > 1e-300 {
            (q_inc - expect).abs() / expect.abs()
        } else {
            q_inc.abs()
        };
        membership_gap = membership_gap.max(rel);
    }
    if membership_gap > membership_rel_tol {
        return Err(Error::Precondition(format!(
            "path is not in the Σ-density class: window increments deviate by {:.3}% (allowed {:.3}%)",
            100.0 * membership_gap,
            100.0 * membership_rel_tol
        )));
    }
    // PDE residual along the path
    let mut pde_samples = Vec::with_capacity(33);
    let mut pde_max_abs: f64 = 0.0;
    for k in 0..=32 {
        let t = t_end * k as f64 / 32.0;
        let u = x.eval(t)[0];
        let r = (f.ft)(t, u) + 0.5 * (f.fuu)(t, u) * sigma(t, u);
        pde_max_abs = pde_max_abs.max(r.abs());
        pde_samples.push((t, r));
    }
    // representation residual per level
    let lhs_val = (f.f)(t_end, x.eval(t_end)[0]) - (f.f)(0.0, x.eval(0.0)[0]);
    let mut integrals = Vec::with_capacity(levels.len());
    for n in levels {
        let p = seq.level(*n)?;
        let fu = f.fu.clone();
        let phi = Integrand::LeftPoint(Arc::new(move |t, u: &[f64]| vec![(fu)(t, u[0])]));
        integrals.push(riemann_sum(&phi, x, &p, t_end)?);
    }
    let representation = IdentityResidual::assemble(
        levels,
        vec![lhs_val; levels.len()],
        vec![("gradient_integral".into(), integrals)],
        tol,
    );
    Ok(HarmonicReport {
        pde_samples,
        pde_max_abs,
        representation,
        membership_gap,
    })
}

/// Outcome of the fair-game perturbation probe.
#[derive(Debug, Clone)]
pub struct FairGameReport {
    pub verdict: Verdict,
    /// First grid time where the discrete functional leaves its start value.
    pub t_star: f64,
    pub eps: f64,
    /// Value predicted by the telescoping construction.
    pub predicted: f64,
    /// `M(t*, z*) - M(0, x(0)-constant)` re-evaluated directly on the
    /// emitted path.
    pub certified: f64,
    /// The emitted perturbed path.
    pub perturbed: Option<CadlagPath>,
}

/// The fair-game construction: a class-M functional that moves along some
/// path admits a perturbed path on which it is strictly negative.
///
/// Discrete values `M(t_i, z^n_{t_i}) - M(0, ·)` telescope exactly through
/// the gradient (class M has zero horizontal increments and an exactly
/// linear vertical map); at the first grid time `t*` where the value leaves
/// zero, flipping an `ε`-fraction of the straddling increment produces the
/// loss path `z* = z^n_{t*-} - sign·ε·Δz(t*)·1_{[t*, ·]}`.
pub fn fair_game_probe(
    m_fn: &dyn Functional,
    x: &CadlagPath,
    p: &Partition,
    eps: f64,
    schedule: &DerivSchedule,
) -> Result<FairGameReport> {
    if m_fn.class() != FunctionalClass::ClassM {
        return Err(Error::Precondition(format!(
            "fair_game_probe needs a class-M functional, got {:?} for {}",
            m_fn.class(),
            m_fn.name()
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("eps must lie in (0,1), got {eps}"));
    }
    let dim = x.dim();
    let grid = p.points();
    let mut pc = PcLeftSweep::new(x, grid);
    let mut cum = 0.0;
    let mut found: Option<(usize, f64, Vec<f64>, f64)> = None; // (i*, N_{i*-1}, Δ, N_{i*})
    for (i, gt) in grid.iter().enumerate().take(grid.len() - 1) {
        let lo = pc.grid_value(i).to_vec();
        let hi = pc.grid_value(i + 1).to_vec();
        let before = cum;
        if lo != hi {
            let g = crate::functional::probes::gradient_or_numeric(m_fn, *gt, pc.path(), schedule)?;
            for d in 0..dim {
                cum += g[d] * (hi[d] - lo[d]);
            }
        }
        if cum.abs() > 1e-12 {
            let delta: Vec<f64> = (0..dim).map(|d| hi[d] - lo[d]).collect();
            found = Some((i, before, delta, cum));
            break;
        }
        pc.advance();
    }
    let Some((i_star, n_before, delta, n_after)) = found else {
        return Ok(FairGameReport {
            verdict: Verdict::NoOp,
            t_star: f64::NAN,
            eps,
            predicted: 0.0,
            certified: 0.0,
            perturbed: None,
        });
    };
    let t_star = grid[i_star];
    let step = n_after - n_before;
    let sign = step.signum();
    let e: Vec<f64> = delta.iter().map(|d| -sign * eps * d).collect();
    let xn = x.pc_approx(p)?;
    let base = if t_star == 0.0 {
        CadlagPath::constant(x.eval(0.0), x.horizon())?
    } else {
        xn.stop_left(t_star)
    };
    let z_star = base.vertical_perturb(t_star, &e)?;
    let predicted = n_before - sign * eps * step;
    let m0 = m_fn.value(0.0, &CadlagPath::constant(x.eval(0.0), x.horizon())?);
    let certified = m_fn.value(t_star, &z_star) - m0;
    Ok(FairGameReport {
        verdict: Verdict::Converged,
        t_star,
        eps,
        predicted,
        certified,
        perturbed: Some(z_star),
    })
}

/// Report of the off-grid-jump demo: a single-jump path whose jump time
/// never belongs to the dyadic grids still has convergent quadratic sums.
#[derive(Debug, Clone)]
pub struct OffGridJumpReport {
    pub alpha: f64,
    /// `(level, alpha ∈ π_n)` up to the membership scan depth.
    pub memberships: Vec<(u32, bool)>,
    pub ever_member: bool,
    pub qv: QvResult,
    /// Location of the top-level quadratic-sum jump.
    pub top_jump_location: f64,
    /// `|alpha - top_jump_location|`.
    pub location_gap: f64,
}

/// Quadratic variation of `1_{[alpha, ·]}` along dyadic grids that never
/// contain `alpha`: the grid-membership condition fails at every level while
/// the quadratic sums still converge in the Skorokhod distance (the unit
/// mass rides the straddling grid point toward `alpha`).
pub fn demo_off_grid_jump(
    alpha: f64,
    seq: &PartitionSequence,
    membership_levels: u32,
    qv_levels: &[u32],
    tol: f64,
) -> Result<OffGridJumpReport> {
    let horizon = seq.horizon();
    if !(alpha > 0.0 && alpha < horizon) {
        return invalid(format!("alpha must lie in (0, {horizon})"));
    }
    let mut memberships = Vec::with_capacity(membership_levels as usize);
    let mut ever = false;
    for n in 1..=membership_levels {
        let member = seq.level(n)?.contains(alpha);
        ever |= member;
        memberships.push((n, member));
    }
    let x = CadlagPath::indicator(alpha, 1.0, horizon)?;
    let qv = qv_estimate(&x, seq, qv_levels, tol)?;
    let top = seq.level(*qv_levels.last().unwrap())?;
    let top_jump_location = top.prev_point(alpha)?;
    Ok(OffGridJumpReport {
        alpha,
        memberships,
        ever_member: ever,
        location_gap: (alpha - top_jump_location).abs(),
        top_jump_location,
        qv,
    })
}

/// Report of the uniform-closeness counterexample: piecewise-linear
/// approximants converge uniformly while their quadratic sums stay at zero.
#[derive(Debug, Clone)]
pub struct UniformGapReport {
    /// `false` when the path has jumps (its piecewise-linear approximants do
    /// not converge uniformly near them) — the probe then reports nothing.
    pub applicable: bool,
    /// `‖x^{(n)} - x‖_∞` at the chosen approximation level.
    pub sup_distance: f64,
    /// Converged quadratic variation of `x` at the horizon (trace).
    pub qv_of_path: f64,
    /// Deep-level quadratic sum of the approximant (decays to zero).
    pub qv_of_approx: f64,
    /// `|qv_of_path - qv_of_approx|`.
    pub qv_gap: f64,
    /// Gap between the left Riemann sums of `2x dx` along the path and along
    /// its approximant.
    pub follmer_gap: f64,
}

/// Evaluate the uniform-topology discontinuity of the quadratic-variation
/// and pathwise-integral functionals: the level-`pl_level` piecewise-linear
/// approximant is uniformly close to `x`, yet its quadratic sums (evaluated
/// at `deep_level`) nearly vanish while those of `x` stay near `qv_plateau`.
pub fn demo_uniform_gap(
    x: &CadlagPath,
    seq: &PartitionSequence,
    pl_level: u32,
    deep_level: u32,
    qv: &QvResult,
    t_end: f64,
) -> Result<UniformGapReport> {
    if !x.jumps().is_empty() {
        return Ok(UniformGapReport {
            applicable: false,
            sup_distance: f64::NAN,
            qv_of_path: f64::NAN,
            qv_of_approx: f64::NAN,
            qv_gap: f64::NAN,
            follmer_gap: f64::NAN,
        });
    }
    let pl = x.pl_approx(&seq.level(pl_level)?)?;
    let sup_distance = pl.sup_distance(x)?;
    let deep = seq.level(deep_level)?;
    let qv_of_path = qv.trace_at(t_end);
    let qv_of_approx = qv_level1(&pl, &deep, t_end)?;
    let qv_gap = (qv_of_path - qv_of_approx).abs();
    let phi = Integrand::left_value(|u| 2.0 * u);
    let top = seq.level(*qv.levels.last().map(|(n, _)| n).unwrap_or(&deep_level))?;
    let i_path = riemann_sum(&phi, x, &top, t_end)?;
    let i_pl = riemann_sum(&phi, &pl, &deep, t_end)?;
    Ok(UniformGapReport {
        applicable: true,
        sup_distance,
        qv_of_path,
        qv_of_approx,
        qv_gap,
        follmer_gap: (i_path - i_pl).abs(),
    })
}

/// Cauchy diagnostics of the quadratic sums of a path in the J1 distance,
/// re-exported here for the demos' convergence reporting.
pub fn qv_j1_diags(x: &CadlagPath, seq: &PartitionSequence, levels: &[u32]) -> Result<Vec<f64>> {
    let mut prev: Option<CadlagPath> = None;
    let mut out = Vec::new();
    for n in levels {
        let q = crate::quadvar::qv_path(x, &seq.level(*n)?)?;
        if let Some(p) = prev {
            out.push(skorokhod_distance(&p, &q)?);
        }
        prev = Some(q);
    }
    Ok(out)
}
