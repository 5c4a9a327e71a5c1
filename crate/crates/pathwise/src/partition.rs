//! Refining interval partitions of a finite horizon `[0, T]`.
//!
//! All limiting procedures in this crate run along a fixed sequence of
//! partitions with vanishing mesh. Two conventions are used everywhere and
//! are pinned here once:
//!
//! * `max(∅) := 0` — the predecessor of a time with no grid point strictly
//!   below it is `0`;
//! * `min(∅) := T` — the successor of a time with no grid point at or above
//!   it is the last partition point.
//!
//! Under the successor convention the "increment" out of the final point is
//! empty, which is what makes the finite-horizon Riemann and quadratic sums
//! telescope exactly.

use crate::error::{invalid, Error, Result};

/// A single partition `0 = t_0 < t_1 < ... < t_k = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    points: Vec<f64>,
}

impl Partition {
    /// Build a partition from explicit points. Points must be strictly
    /// increasing, start at `0` and have a positive last point (the horizon).
    /// Duplicates are rejected rather than merged.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return invalid("partition needs at least two points");
        }
        if points[0] != 0.0 {
            return invalid(format!("partition must start at 0, got {}", points[0]));
        }
        if !points.iter().all(|p| p.is_finite()) {
            return invalid("partition points must be finite");
        }
        if !points.windows(2).all(|w| w[0] < w[1]) {
            return invalid("partition points must be strictly increasing (duplicates rejected)");
        }
        Ok(Partition { points })
    }

    /// Dyadic partition of `[0, horizon]` at `level`: points `k * horizon * 2^-level`.
    pub fn dyadic(horizon: f64, level: u32) -> Result<Self> {
        if !(horizon > 0.0) {
            return invalid(format!("horizon must be positive, got {horizon}"));
        }
        if level > 30 {
            return invalid(format!("dyadic level {level} too deep"));
        }
        let n = 1usize << level;
        let scale = 1.0 / n as f64;
        let points = (0..=n).map(|k| horizon * (k as f64 * scale)).collect();
        Ok(Partition { points })
    }

    /// Uniform partition of `[0, horizon]` into `n` intervals.
    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        if !(horizon > 0.0) {
            return invalid(format!("horizon must be positive, got {horizon}"));
        }
        if n == 0 {
            return invalid("uniform partition needs at least one interval");
        }
        let points = (0..=n).map(|k| horizon * (k as f64 / n as f64)).collect();
        Ok(Partition { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().unwrap()
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.points.len() - 1
    }

    /// Largest interval length.
    pub fn mesh(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if !(0.0..=self.horizon()).contains(&t) {
            return Err(Error::InvalidArgument(format!(
                "t = {t} outside [0, {}]",
                self.horizon()
            )));
        }
        Ok(())
    }

    /// `max { t_i < t }`, with `max(∅) := 0`.
    pub fn prev_point(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        // partition_point returns the count of points strictly below t
        let k = self.points.partition_point(|p| *p < t);
        Ok(if k == 0 { 0.0 } else { self.points[k - 1] })
    }

    /// `(max{t_i < t}, min{t_i >= t}, min{t_i > t})`; empty minima fall back
    /// to the last partition point.
    pub fn straddle(&self, t: f64) -> Result<(f64, f64, f64)> {
        self.check_domain(t)?;
        let last = self.horizon();
        let k = self.points.partition_point(|p| *p < t);
        let prev = if k == 0 { 0.0 } else { self.points[k - 1] };
        let next = if k < self.points.len() {
            self.points[k]
        } else {
            last
        };
        let j = self.points.partition_point(|p| *p <= t);
        let next_strict = if j < self.points.len() {
            self.points[j]
        } else {
            last
        };
        Ok((prev, next, next_strict))
    }

    /// Successor of the grid point at index `i`; the last point is its own
    /// successor (the `min(∅) := T` convention).
    pub(crate) fn successor(&self, i: usize) -> f64 {
        if i + 1 < self.points.len() {
            self.points[i + 1]
        } else {
            self.horizon()
        }
    }

    /// Exact membership test.
    pub fn contains(&self, t: f64) -> bool {
        self.points
            .binary_search_by(|p| p.partial_cmp(&t).unwrap())
            .is_ok()
    }
}

/// The partition families a sequence can be built from.
#[derive(Debug, Clone)]
pub enum PartitionKind {
    /// Level `n` is the dyadic grid with `2^n` intervals.
    Dyadic,
    /// Level `n` has `n0 * 2^n` intervals.
    Uniform { n0: usize },
    /// Explicit list; level `n` indexes into it.
    Custom(Vec<Partition>),
}

/// A refining sequence of partitions of `[0, horizon]` with vanishing mesh.
///
/// For the dyadic and uniform kinds the sequence is nested and the mesh
/// halves per level. Immutable after construction; levels are generated on
/// demand.
#[derive(Debug, Clone)]
pub struct PartitionSequence {
    kind: PartitionKind,
    horizon: f64,
}

/// `PartitionSequence` of dyadic grids; level `n` has points
/// `{ k * horizon * 2^-n : k = 0..2^n }`, so the mesh at level `n` is
/// `horizon * 2^-n`.
pub fn dyadic_sequence(horizon: f64, max_level: u32) -> Result<PartitionSequence> {
    if !(horizon > 0.0) {
        return invalid(format!("horizon must be positive, got {horizon}"));
    }
    if max_level < 1 {
        return invalid("max_level must be at least 1");
    }
    Ok(PartitionSequence {
        kind: PartitionKind::Dyadic,
        horizon,
    })
}

impl PartitionSequence {
    pub fn dyadic(horizon: f64) -> Result<Self> {
        dyadic_sequence(horizon, 1)
    }

    pub fn uniform(horizon: f64, n0: usize) -> Result<Self> {
        if !(horizon > 0.0) {
            return invalid(format!("horizon must be positive, got {horizon}"));
        }
        if n0 == 0 {
            return invalid("uniform base interval count must be positive");
        }
        Ok(PartitionSequence {
            kind: PartitionKind::Uniform { n0 },
            horizon,
        })
    }

    /// Custom sequence from explicit partitions (validated to share a horizon).
    pub fn custom(parts: Vec<Partition>) -> Result<Self> {
        let Some(first) = parts.first() else {
            return invalid("custom sequence needs at least one partition");
        };
        let horizon = first.horizon();
        if parts.iter().any(|p| p.horizon() != horizon) {
            return invalid("custom partitions must share a horizon");
        }
        Ok(PartitionSequence {
            kind: PartitionKind::Custom(parts),
            horizon,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// The partition at `level`.
    pub fn level(&self, level: u32) -> Result<Partition> {
        match &self.kind {
            PartitionKind::Dyadic => Partition::dyadic(self.horizon, level),
            PartitionKind::Uniform { n0 } => {
                let n = n0.checked_shl(level).ok_or_else(|| {
                    Error::InvalidArgument(format!("uniform level {level} overflows"))
                })?;
                Partition::uniform(self.horizon, n)
            }
            PartitionKind::Custom(parts) => parts.get(level as usize).cloned().ok_or_else(|| {
                Error::InvalidArgument(format!("custom sequence has no level {level}"))
            }),
        }
    }
}
