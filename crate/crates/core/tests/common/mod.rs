#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `sign sin(2ⁿπx)`, evaluated from the sine itself.
pub fn rademacher(n: usize, x: f64) -> f64 {
    let v = (2f64.powi(n as i32) * std::f64::consts::PI * x).sin();
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

pub fn walsh(n: usize, x: f64) -> f64 {
    (0..usize::BITS as usize).filter(|i| n >> i & 1 == 1).map(|i| rademacher(i + 1, x)).product()
}

/// Midpoints of `2^levels` equal pieces of `[0, 1]`; every Rademacher or
/// Walsh product of order ≤ `levels` is constant on each piece.
pub fn dyadic_midpoints(levels: u32) -> Vec<f64> {
    let n = 1usize << levels;
    (0..n).map(|j| (j as f64 + 0.5) / n as f64).collect()
}

/// Mean of `f` over the dyadic midpoints.
pub fn dyadic_mean(levels: u32, f: impl Fn(f64) -> f64) -> f64 {
    let pts = dyadic_midpoints(levels);
    pts.iter().map(|&x| f(x)).sum::<f64>() / pts.len() as f64
}

/// Equispaced rule with `n` nodes; exact for trigonometric polynomials of
/// degree below `n`.
pub fn periodic_mean(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    (0..n).map(|j| f(j as f64 / n as f64)).sum::<f64>() / n as f64
}

/// Brute-force `‖a‖_{Q(t)}`: every assignment of coordinates to `t` labelled
/// blocks.
pub fn q_norm_brute(a: &[f64], t: usize) -> f64 {
    let n = a.len();
    let mut best = 0.0f64;
    let mut labels = vec![0usize; n];
    loop {
        let mut sq = vec![0.0; t];
        for (i, &l) in labels.iter().enumerate() {
            sq[l] += a[i] * a[i];
        }
        best = best.max(sq.iter().map(|v| v.sqrt()).sum());
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if labels[i] < t {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

fn k_objective(a: &[f64], b: &[f64], t: f64) -> f64 {
    let l1: f64 = b.iter().map(|x| x.abs()).sum();
    let r: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    l1 + t * r
}

/// Grid search for `inf_b ‖b‖₁ + t‖a − b‖₂`. A minimiser can be taken with
/// `bᵢ` between 0 and `aᵢ`; a coarse pass is refined at pitch `1e-3` around
/// the best coarse node (the objective is convex).
pub fn k_grid(a: &[f64], t: f64) -> f64 {
    let n = a.len();
    let search = |centre: &[f64], half: f64, pitch: f64| -> (f64, Vec<f64>) {
        let steps = (2.0 * half / pitch).round() as i64;
        let mut best = (f64::INFINITY, centre.to_vec());
        let mut idx = vec![0i64; n];
        let mut b = vec![0.0; n];
        loop {
            for i in 0..n {
                let lo = (centre[i] - half).max(a[i].min(0.0));
                let hi = (centre[i] + half).min(a[i].max(0.0));
                b[i] = (lo + idx[i] as f64 * pitch).min(hi);
            }
            let v = k_objective(a, &b, t);
            if v < best.0 {
                best = (v, b.clone());
            }
            let mut i = 0;
            loop {
                if i == n {
                    return best;
                }
                idx[i] += 1;
                if idx[i] <= steps {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
        }
    };
    let span = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let centre: Vec<f64> = a.iter().map(|x| x / 2.0).collect();
    let (_, coarse) = search(&centre, span / 2.0 + 1e-2, 1e-2);
    search(&coarse, 2e-2, 1e-3).0
}

pub fn uniform_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exact Rademacher tail `P{|Σ aᵢrᵢ| > z}` by sign enumeration.
pub fn rademacher_tail(a: &[f64], z: f64) -> f64 {
    let m = a.len();
    let hits = (0u64..1 << m)
        .filter(|mask| {
            let s: f64 = a.iter().enumerate().map(|(i, &x)| if mask >> i & 1 == 1 { -x } else { x }).sum();
            s.abs() > z
        })
        .count();
    hits as f64 / (1u64 << m) as f64
}

/// All sums `Σ ±aᵢ`, sorted by absolute value.
pub fn rademacher_levels(a: &[f64]) -> Vec<f64> {
    let m = a.len();
    let mut v: Vec<f64> = (0u64..1 << m)
        .map(|mask| a.iter().enumerate().map(|(i, &x)| if mask >> i & 1 == 1 { -x } else { x }).sum::<f64>().abs())
        .collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}
