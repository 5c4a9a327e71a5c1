//! Shared fixtures and independent oracles for the integration suites.
//!
//! Oracles here recompute reference values through routes that do not share
//! code with the implementation they check (direct series evaluation, raw
//! cumulative sums), and the constants frozen from oracle runs live here.

// shared by several test targets; not every target uses every fixture
#![allow(dead_code)]

use pathwise::path::CadlagPath;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Frozen from the brute-force oracle run: the level-14 dyadic quadratic sum
/// at the horizon of the seed-42, 14-level synthetic path. The construction
/// pins it to 1 exactly; the value below is the accumulated f64 rounding.
pub const FS14_SEED42_Q14: f64 = 9.999_999_999_999_989e-1;

/// The sign sequence the library draws for `faber_schauder_path(levels, seed)`:
/// one sign for the linear term, then `2^m` per displacement level, from
/// `ChaCha8Rng::seed_from_u64(seed)`.
pub fn fs_signs(levels: u32, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = 1 + ((1usize << levels) - 1);
    (0..total)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Independent evaluator of the synthetic path: direct tent-series sum
/// `σ_0 t + Σ_m σ_{m,k(t)} 2^{-m/2} Λ(2^m t - k)`, no midpoint recursion.
pub fn fs_series_value(levels: u32, signs: &[f64], t: f64) -> f64 {
    let mut v = signs[0] * t;
    for m in 0..levels {
        let pow = (1u64 << m) as f64;
        let u = pow * t;
        let k = u.floor();
        if k < 0.0 || k >= pow {
            continue;
        }
        let frac = u - k;
        let tent = 0.5 - (frac - 0.5).abs();
        if tent > 0.0 {
            let idx = (1usize << m) + k as usize;
            v += signs[idx] * (2f64).powf(-(m as f64) / 2.0) * tent;
        }
    }
    v
}

/// Brute-force level-`n` quadratic sum at the horizon via the series
/// evaluator.
pub fn fs_series_quadratic_sum(levels: u32, signs: &[f64], n: u32) -> f64 {
    let cells = 1usize << n;
    let mut q = 0.0;
    let mut prev = fs_series_value(levels, signs, 0.0);
    for i in 1..=cells {
        let t = i as f64 / cells as f64;
        let cur = fs_series_value(levels, signs, t);
        q += (cur - prev) * (cur - prev);
        prev = cur;
    }
    q
}

/// Seeded scalar step paths with jumps at level-`time_level` dyadic times.
pub fn seeded_dyadic_step_paths(
    count: usize,
    max_jumps: usize,
    time_level: u32,
    seed: u64,
) -> Vec<CadlagPath> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slots = 1u64 << time_level;
    (0..count)
        .map(|_| {
            let njumps = rng.gen_range(1..=max_jumps);
            let mut ks: Vec<u64> = Vec::new();
            while ks.len() < njumps {
                let k = rng.gen_range(1..slots);
                if !ks.contains(&k) {
                    ks.push(k);
                }
            }
            ks.sort_unstable();
            let jumps: Vec<(f64, Vec<f64>)> = ks
                .iter()
                .map(|k| {
                    let mut a = 0.0;
                    while a == 0.0 {
                        a = rng.gen_range(-2.0..2.0);
                    }
                    (*k as f64 / slots as f64, vec![a])
                })
                .collect();
            CadlagPath::step_path(&jumps, 1, 1.0).expect("fixture path")
        })
        .collect()
}

/// Seeded 2-d step paths with generic (non-dyadic) jump times.
pub fn seeded_2d_step_paths(count: usize, max_jumps: usize, seed: u64) -> Vec<CadlagPath> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let njumps = rng.gen_range(1..=max_jumps);
            let mut times: Vec<f64> = (0..njumps).map(|_| rng.gen_range(0.02..0.98)).collect();
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            times.dedup();
            let jumps: Vec<(f64, Vec<f64>)> = times
                .iter()
                .map(|t| (*t, vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]))
                .collect();
            CadlagPath::step_path(&jumps, 2, 1.0).expect("fixture path")
        })
        .collect()
}

/// The named scalar step fixtures used across the acceptance criteria.
pub fn step_fixtures() -> Vec<CadlagPath> {
    vec![
        CadlagPath::indicator(0.5, 2.0, 1.0).unwrap(),
        CadlagPath::step_path(&[(1.0 / 3.0, vec![1.0]), (0.77, vec![-2.0])], 1, 1.0).unwrap(),
        CadlagPath::step_path(
            &[(0.25, vec![1.0]), (0.5, vec![-3.0]), (0.75, vec![1.0])],
            1,
            1.0,
        )
        .unwrap(),
    ]
}
