//! The partition norm `‖a‖_{Q(t)}`: the largest value of `Σⱼ ‖a|_{Aⱼ}‖₂`
//! over at most `t` pairwise disjoint index blocks.
//!
//! Adding an index to a block never decreases that block's `l2` norm, so the
//! supremum over disjoint subsets equals the supremum over partitions of
//! `{1..n}` into at most `t` blocks. Splitting a block never decreases the sum
//! either (`√(x+y) ≤ √x + √y`), so for `t ≤ n` an optimum uses exactly `t`
//! nonempty blocks. Maximizing is a balanced multiway partition of the
//! squared entries; the exact solver is a branch and bound over canonical
//! block assignments (largest entries first, a new block is only ever the
//! first empty one, blocks with equal load are interchangeable).

use serde::Serialize;

use crate::error::{LacunaError, Result};
use crate::kfunctional::{k_exact, CoefficientVector};

/// Enumeration bound for [`q_norm_exact`].
pub const EXACT_LIMIT: usize = 14;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionResult {
    pub value: f64,
    /// Disjoint blocks of 0-based indices. Each block is sorted and the blocks
    /// are ordered by their smallest index.
    pub blocks: Vec<Vec<usize>>,
}

fn block_value(a: &[f64], blocks: &[Vec<usize>]) -> f64 {
    blocks
        .iter()
        .map(|b| b.iter().map(|&i| a[i] * a[i]).sum::<f64>().sqrt())
        .sum()
}

fn canonical(mut blocks: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    blocks.retain(|b| !b.is_empty());
    for b in &mut blocks {
        b.sort_unstable();
    }
    blocks.sort_by_key(|b| b[0]);
    blocks
}

/// Indices sorted by decreasing `|a_i|`, ties by index.
fn order_by_magnitude(a: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| a[j].abs().total_cmp(&a[i].abs()).then(i.cmp(&j)));
    order
}

/// Upper bound for `Σ √(loadⱼ + δⱼ)` with `Σ δⱼ = rest`, `δ ≥ 0`, obtained by
/// water-filling the smallest loads (the continuous relaxation).
fn water_fill_bound(loads: &[f64], rest: f64) -> f64 {
    let mut sorted = loads.to_vec();
    sorted.sort_by(|x, y| x.total_cmp(y));
    let mut remaining = rest;
    let mut level = sorted[0];
    let mut k = 1;
    while k < sorted.len() {
        let need = (sorted[k] - level) * k as f64;
        if need >= remaining {
            break;
        }
        remaining -= need;
        level = sorted[k];
        k += 1;
    }
    level += remaining / k as f64;
    (k as f64) * level.sqrt() + sorted[k..].iter().map(|x| x.sqrt()).sum::<f64>()
}

struct Search<'a> {
    weights: Vec<f64>,
    suffix: Vec<f64>,
    abs_suffix: Vec<f64>,
    order: &'a [usize],
    blocks: usize,
    loads: Vec<f64>,
    assign: Vec<usize>,
    best: f64,
    best_assign: Vec<usize>,
}

impl Search<'_> {
    fn current(&self) -> f64 {
        self.loads.iter().map(|x| x.sqrt()).sum()
    }

    fn run(&mut self, pos: usize, used: usize) {
        let n = self.weights.len();
        if pos == n {
            let v = self.current();
            if v > self.best * (1.0 + 1e-13) {
                self.best = v;
                self.best_assign = self.assign.clone();
            }
            return;
        }
        // must leave enough items to open the remaining blocks
        if n - pos < self.blocks - used {
            return;
        }
        let bound = {
            let cur = self.current();
            let triangle = cur + self.abs_suffix[pos];
            triangle.min(water_fill_bound(&self.loads, self.suffix[pos]))
        };
        if bound <= self.best * (1.0 + 1e-13) {
            return;
        }
        let w = self.weights[pos];
        let limit = (used + 1).min(self.blocks);
        for j in 0..limit {
            if j < used && (0..j).any(|i| self.loads[i] == self.loads[j]) {
                continue;
            }
            self.loads[j] += w;
            self.assign[pos] = j;
            self.run(pos + 1, used.max(j + 1));
            self.loads[j] -= w;
        }
    }
}

fn assignment_to_blocks(order: &[usize], assign: &[usize], t: usize) -> Vec<Vec<usize>> {
    let mut blocks = vec![Vec::new(); t];
    for (pos, &j) in assign.iter().enumerate() {
        blocks[j].push(order[pos]);
    }
    canonical(blocks)
}

/// Exact `‖a‖_{Q(t)}` with a maximizing partition.
pub fn q_norm_exact(a: &CoefficientVector, t: usize) -> Result<PartitionResult> {
    let n = a.len();
    if n > EXACT_LIMIT {
        return Err(LacunaError::DimensionTooLarge { n, limit: EXACT_LIMIT });
    }
    if t == 0 {
        return Err(LacunaError::InvalidInput("t must be at least 1".into()));
    }
    let x = a.entries();
    if t >= n {
        let blocks = (0..n).map(|i| vec![i]).collect();
        return Ok(PartitionResult { value: a.l1(), blocks });
    }
    let order = order_by_magnitude(x);
    let weights: Vec<f64> = order.iter().map(|&i| x[i] * x[i]).collect();
    let mut suffix = vec![0.0; n + 1];
    let mut abs_suffix = vec![0.0; n + 1];
    for p in (0..n).rev() {
        suffix[p] = suffix[p + 1] + weights[p];
        abs_suffix[p] = abs_suffix[p + 1] + weights[p].sqrt();
    }

    // seed the incumbent with the heuristic so pruning starts immediately
    let seed = q_norm_heuristic(a, t)?;
    let mut position = vec![0; n];
    for (p, &i) in order.iter().enumerate() {
        position[i] = p;
    }
    let mut seed_assign = vec![0; n];
    for (j, block) in seed.blocks.iter().enumerate() {
        for &i in block {
            seed_assign[position[i]] = j;
        }
    }

    let mut search = Search {
        weights,
        suffix,
        abs_suffix,
        order: &order,
        blocks: t,
        loads: vec![0.0; t],
        assign: vec![0; n],
        best: seed.value * (1.0 - 1e-12),
        best_assign: seed_assign,
    };
    search.run(0, 0);
    let blocks = assignment_to_blocks(search.order, &search.best_assign, t);
    Ok(PartitionResult { value: block_value(x, &blocks), blocks })
}

/// Feasible lower bound: largest-first assignment to the lightest block,
/// then single-element moves while any move strictly improves the value.
pub fn q_norm_heuristic(a: &CoefficientVector, t: usize) -> Result<PartitionResult> {
    if t == 0 {
        return Err(LacunaError::InvalidInput("t must be at least 1".into()));
    }
    let x = a.entries();
    let n = x.len();
    let t = t.min(n);
    let order = order_by_magnitude(x);
    let mut loads = vec![0.0f64; t];
    let mut owner = vec![0; n];
    for &i in &order {
        let j = (0..t).min_by(|&p, &q| loads[p].total_cmp(&loads[q]).then(p.cmp(&q))).unwrap();
        loads[j] += x[i] * x[i];
        owner[i] = j;
    }
    loop {
        let mut best_gain = 1e-15;
        let mut best_move = None;
        for i in 0..n {
            let w = x[i] * x[i];
            let from = owner[i];
            let before_from = loads[from].sqrt();
            let after_from = (loads[from] - w).max(0.0).sqrt();
            for to in 0..t {
                if to == from {
                    continue;
                }
                let gain = after_from + (loads[to] + w).sqrt() - before_from - loads[to].sqrt();
                if gain > best_gain {
                    best_gain = gain;
                    best_move = Some((i, to));
                }
            }
        }
        match best_move {
            Some((i, to)) => {
                let w = x[i] * x[i];
                loads[owner[i]] -= w;
                loads[to] += w;
                owner[i] = to;
            }
            None => break,
        }
    }
    let mut blocks = vec![Vec::new(); t];
    for (i, &j) in owner.iter().enumerate() {
        blocks[j].push(i);
    }
    let blocks = canonical(blocks);
    Ok(PartitionResult { value: block_value(x, &blocks), blocks })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichReport {
    pub q: f64,
    pub k: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

/// Checks `‖a‖_{Q(t²)} ≤ K(t, a) ≤ √2·‖a‖_{Q(t²)}` for `t = √t_squared`.
pub fn sandwich_check(a: &CoefficientVector, t_squared: usize) -> Result<SandwichReport> {
    if t_squared == 0 {
        return Err(LacunaError::InvalidInput("t² must be a positive integer".into()));
    }
    let q = q_norm_exact(a, t_squared)?.value;
    let k = k_exact(a, (t_squared as f64).sqrt())?.value;
    Ok(SandwichReport {
        q,
        k,
        lower_ok: q <= k + 1e-9,
        upper_ok: k <= std::f64::consts::SQRT_2 * q + 1e-9,
    })
}
