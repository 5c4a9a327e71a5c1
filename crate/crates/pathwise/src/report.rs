//! Report types shared by the level-sweep operations.
//!
//! Every limiting quantity in this crate is approximated by a sweep over
//! partition levels. Sweeps never abort on non-convergence; they return the
//! per-level data together with a [`Verdict`] so a failed experiment is still
//! auditable.

/// Outcome of a convergence test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converged,
    Diverged,
    /// The probe had nothing to do (e.g. a functional constant along the path).
    NoOp,
}

impl Verdict {
    pub fn converged(self) -> bool {
        matches!(self, Verdict::Converged)
    }
}

/// Per-level values of a limiting quantity with successive differences,
/// an extrapolated limit and a pass/fail verdict at a given tolerance.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// Partition levels, in increasing order.
    pub levels: Vec<u32>,
    /// Value of the quantity at each level.
    pub values: Vec<f64>,
    /// `|values[k+1] - values[k]|`.
    pub diffs: Vec<f64>,
    /// Skorokhod distances between consecutive level functions, when the
    /// quantity is function-valued (empty otherwise).
    pub j1_dists: Vec<f64>,
    /// Richardson-extrapolated limit (ratio-2 step on the top pair, guarded
    /// against ties); equals the top value when the tail is already flat.
    pub extrapolated: f64,
    /// Tolerance the verdict was decided at.
    pub tol: f64,
    pub verdict: Verdict,
}

impl ConvergenceReport {
    /// Assemble a report from per-level values. The verdict is `Converged` iff
    /// every difference in the tail window (last `TAIL_WINDOW` diffs) is below
    /// `tol`; the J1 column, when provided, is checked the same way.
    pub fn from_values(levels: Vec<u32>, values: Vec<f64>, j1_dists: Vec<f64>, tol: f64) -> Self {
        assert_eq!(levels.len(), values.len());
        let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let verdict = if tail_below(&diffs, tol) && tail_below(&j1_dists, tol) {
            Verdict::Converged
        } else {
            Verdict::Diverged
        };
        let extrapolated = richardson2(&values);
        ConvergenceReport {
            levels,
            values,
            diffs,
            j1_dists,
            extrapolated,
            tol,
            verdict,
        }
    }

    /// Top-level value (the default limit estimate).
    pub fn top_value(&self) -> f64 {
        *self.values.last().expect("report has at least one level")
    }
}

/// Number of trailing differences that must sit below tolerance for a
/// `Converged` verdict.
pub const TAIL_WINDOW: usize = 3;

pub(crate) fn tail_below(diffs: &[f64], tol: f64) -> bool {
    let n = diffs.len().min(TAIL_WINDOW);
    diffs
        .iter()
        .rev()
        .take(n)
        .all(|d| d.is_finite() && *d < tol)
}

/// One Richardson step assuming the error halves per level (dyadic refinement).
/// Falls back to the top value when the tail is flat to rounding.
pub(crate) fn richardson2(values: &[f64]) -> f64 {
    match values {
        [] => f64::NAN,
        [v] => *v,
        [.., a, b] => {
            if (b - a).abs() < 1e-14 * (1.0 + b.abs()) {
                *b
            } else {
                2.0 * b - a
            }
        }
    }
}

/// `true` when the sequence is non-increasing up to an additive tolerance.
///
/// The numeric rendering of "residuals decrease across levels": once values
/// reach rounding noise a strict comparison is meaningless, so each step may
/// exceed its predecessor by at most `eps`.
pub fn decreasing_within(values: &[f64], eps: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + eps)
}
