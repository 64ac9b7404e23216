//! Subsystem selection and Riesz-product certificates.
//!
//! Two selection procedures are provided. [`kashin_select`] searches for `s`
//! indices whose normalized monomials of class `A_s` nearly vanish in mean
//! square; [`greedy_select`] scans candidates in order and accepts one when
//! the correlation sum against everything chosen so far fits a shrinking
//! budget. Both return a [`SelectionCertificate`] whose numbers are exact
//! elements of `ℚ(√2)` and can be re-checked with [`SelectionCertificate::verify`].

use num_traits::{One, Zero};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LacunaError, Result};
use crate::exact::{pow2_neg, rat_from_f64, rat_int, rat_to_f64, QSqrt2, Rational};
use crate::kfunctional::{kappa, CoefficientVector};
use crate::systems::trig::integrate_unit;
use crate::systems::{
    combine, trig_signed_count, ExponentPattern, Law, Polynomial, StepFunction, SystemKind, SystemSpec, Weight,
};

/// Largest index set handled by pattern and subset enumerations.
pub const MAX_SELECTION: usize = 12;

/// Decreasing tolerances `ε₁, ε₂, …` with `εᵢ < min(1, D)/16` and every
/// tail sum `Σ_{k>i} ε_k` strictly below `εᵢ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    eps: Vec<f64>,
}

impl EpsilonSchedule {
    pub fn new(eps: Vec<f64>, d: &QSqrt2) -> Result<Self> {
        if eps.is_empty() {
            return Err(LacunaError::InvalidSchedule("empty schedule".into()));
        }
        let cap = std::cmp::min(QSqrt2::one(), d.clone());
        let cap = &cap * &QSqrt2::rational(Rational::new(1.into(), 16.into()));
        let exact: Vec<Rational> = eps
            .iter()
            .map(|&e| {
                if !(e > 0.0) || !e.is_finite() {
                    return Err(LacunaError::InvalidSchedule(format!("entry {e} is not a positive number")));
                }
                rat_from_f64(e)
            })
            .collect::<Result<_>>()?;
        let mut tail = Rational::zero();
        for (i, e) in exact.iter().enumerate().rev() {
            if QSqrt2::rational(e.clone()) >= cap {
                return Err(LacunaError::InvalidSchedule(format!(
                    "entry {} = {} is not below min(1, D)/16",
                    i + 1,
                    eps[i]
                )));
            }
            if &tail >= e {
                return Err(LacunaError::InvalidSchedule(format!("tail after entry {} is not below it", i + 1)));
            }
            tail += e;
        }
        Ok(Self { eps })
    }

    /// `εᵢ = first·ratioⁱ⁻¹`; valid for `ratio < 1/2`.
    pub fn geometric(len: usize, first: f64, ratio: f64, d: &QSqrt2) -> Result<Self> {
        Self::new((0..len).map(|i| first * ratio.powi(i as i32)).collect(), d)
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.eps.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub seed: u64,
    pub budget: u64,
    pub restarts: u64,
    pub evaluations: u64,
}

/// One accepted index of a greedy run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyStep {
    /// 1-based acceptance order.
    pub position: usize,
    pub index: usize,
    pub sum: QSqrt2,
    pub sum_f64: f64,
    pub threshold: QSqrt2,
    pub threshold_f64: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionCertificate {
    pub method: String,
    pub system: SystemSpec,
    pub bound: QSqrt2,
    pub indices: Vec<usize>,
    pub condition_sum: QSqrt2,
    pub condition_sum_f64: f64,
    pub threshold: QSqrt2,
    pub threshold_f64: f64,
    pub worst_pattern: Option<ExponentPattern>,
    pub worst_value: Option<QSqrt2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchStats>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<GreedyStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<EpsilonSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<Weight>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl SelectionCertificate {
    /// Recomputes every certified sum from the expectation oracle.
    pub fn verify(&self) -> Result<bool> {
        match self.method.as_str() {
            "kashin" => {
                let (sum, _) = kashin_terms(&self.system, &self.indices, &self.bound)?;
                Ok(sum == self.condition_sum && sum <= self.threshold)
            }
            "greedy" => {
                let (Some(schedule), Some(h)) = (&self.schedule, &self.weight) else {
                    return Ok(false);
                };
                for (i, step) in self.steps.iter().enumerate() {
                    let limit = greedy_limit(schedule.eps()[i], i + 1, &self.bound)?;
                    let sum = greedy_step_sum(&self.system, &self.indices[..i], step.index, h, None)?
                        .expect("no early exit without a limit");
                    if sum != step.sum || sum > limit || step.index != self.indices[i] {
                        return Ok(false);
                    }
                }
                Ok(self.steps.len() == self.indices.len())
            }
            _ => Ok(false),
        }
    }
}

fn check_bound(d: &QSqrt2) -> Result<QSqrt2> {
    if d.signum() <= 0 {
        return Err(LacunaError::InvalidInput("D must be positive".into()));
    }
    Ok(d.recip().expect("nonzero"))
}

fn check_distinct(indices: &[usize]) -> Result<()> {
    let mut v = indices.to_vec();
    v.sort_unstable();
    if v.windows(2).any(|w| w[0] == w[1]) {
        return Err(LacunaError::InvalidInput("indices must be distinct".into()));
    }
    Ok(())
}

fn kashin_terms(
    system: &SystemSpec,
    indices: &[usize],
    d: &QSqrt2,
) -> Result<(QSqrt2, Option<(ExponentPattern, QSqrt2)>)> {
    if indices.len() > MAX_SELECTION {
        return Err(LacunaError::TooManyIndices { count: indices.len(), limit: MAX_SELECTION });
    }
    system.check_indices(indices)?;
    check_distinct(indices)?;
    let inv = check_bound(d)?;
    let powers: Vec<QSqrt2> = (0..=2 * indices.len() as u32).map(|k| inv.pow(k)).collect();
    let mut sum = QSqrt2::zero();
    let mut worst: Option<(ExponentPattern, QSqrt2)> = None;
    for theta in ExponentPattern::class_a(indices.len(), true) {
        let e = system.monomial_expectation(indices, &theta)?;
        if e.is_zero() {
            continue;
        }
        let deg: u32 = theta.entries().iter().map(|&x| x as u32).sum();
        let v = &e * &powers[deg as usize];
        sum = &sum + &(&v * &v);
        let abs = v.abs();
        if worst.as_ref().map_or(true, |(_, w)| abs > *w) {
            worst = Some((theta, abs));
        }
    }
    Ok((sum, worst))
}

/// `Σ_{θ ∈ A_s} (E[Π (f_{nᵢ}/D)^{θᵢ}])²`, exact.
pub fn kashin_condition_sum(system: &SystemSpec, indices: &[usize], d: &QSqrt2) -> Result<QSqrt2> {
    Ok(kashin_terms(system, indices, d)?.0)
}

/// Floating evaluation of the class-`A_s` expectations used to steer the
/// search; every reported result is re-derived exactly.
struct FastPatterns<'a> {
    system: &'a SystemSpec,
    patterns: Vec<ExponentPattern>,
    degrees: Vec<usize>,
    inv_d: f64,
    d: QSqrt2,
}

impl<'a> FastPatterns<'a> {
    fn new(system: &'a SystemSpec, s: usize, d: &QSqrt2) -> Self {
        let patterns: Vec<ExponentPattern> = ExponentPattern::class_a(s, true).collect();
        let degrees = patterns.iter().map(|p| p.entries().iter().map(|&x| x as usize).sum()).collect();
        Self { system, patterns, degrees, inv_d: 1.0 / d.to_f64(), d: d.clone() }
    }

    fn values(&self, indices: &[usize]) -> Result<Vec<f64>> {
        match self.system.kind() {
            SystemKind::Rademacher { .. } | SystemKind::Walsh { .. } => {
                let (_, masks) = self.system.dyadic_table(indices)?.expect("dyadic");
                Ok(self
                    .patterns
                    .iter()
                    .zip(&self.degrees)
                    .map(|(p, &deg)| {
                        let acc = p
                            .entries()
                            .iter()
                            .zip(&masks)
                            .filter(|(&e, _)| e % 2 == 1)
                            .fold(0u64, |a, (_, &m)| a ^ m);
                        if acc == 0 {
                            self.inv_d.powi(deg as i32)
                        } else {
                            0.0
                        }
                    })
                    .collect())
            }
            SystemKind::TrigSine { freqs, amplitude } | SystemKind::TrigCosine { freqs, amplitude } => {
                let cosine = matches!(self.system.kind(), SystemKind::TrigCosine { .. });
                let scale = amplitude.to_f64() * self.inv_d;
                let mut expanded = Vec::with_capacity(2 * indices.len());
                Ok(self
                    .patterns
                    .iter()
                    .zip(&self.degrees)
                    .map(|(p, &deg)| {
                        expanded.clear();
                        for (&n, &e) in indices.iter().zip(p.entries()) {
                            for _ in 0..e {
                                expanded.push(freqs[n - 1]);
                            }
                        }
                        let count = trig_signed_count(&expanded, cosine);
                        if count == 0 {
                            0.0
                        } else {
                            count as f64 / (1u64 << deg) as f64 * scale.powi(deg as i32)
                        }
                    })
                    .collect())
            }
            SystemKind::CustomStep { .. } => {
                let inv = self.d.recip().expect("nonzero");
                self.patterns
                    .iter()
                    .zip(&self.degrees)
                    .map(|(p, &deg)| {
                        let e = self.system.monomial_expectation(indices, p)?;
                        Ok((&e * &inv.pow(deg as u32)).to_f64())
                    })
                    .collect()
            }
        }
    }
}

/// Randomized restarts with greedy repair: the index contributing most to
/// the heaviest pattern is swapped for a random outsider while that lowers
/// the sum. Deterministic for a given seed.
pub fn kashin_select(
    system: &SystemSpec,
    n: usize,
    s: usize,
    d: &QSqrt2,
    budget: u64,
    seed: u64,
) -> Result<SelectionCertificate> {
    if n > system.len() {
        return Err(LacunaError::InvalidInput(format!("N = {n} exceeds the system size {}", system.len())));
    }
    if s == 0 || s > n {
        return Err(LacunaError::InvalidInput(format!("s must lie in 1..={n}")));
    }
    if s > MAX_SELECTION {
        return Err(LacunaError::TooManyIndices { count: s, limit: MAX_SELECTION });
    }
    check_bound(d)?;
    let threshold = QSqrt2::rational(Rational::new(1.into(), num_bigint::BigInt::from(10u32).pow(s as u32)));
    let threshold_f64 = threshold.to_f64();
    let fast = FastPatterns::new(system, s, d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = SearchStats { seed, budget, restarts: 0, evaluations: 0 };
    let mut best: (f64, Vec<usize>) = (f64::INFINITY, Vec::new());

    let score = |idx: &[usize], stats: &mut SearchStats| -> Result<(f64, Vec<f64>)> {
        stats.evaluations += 1;
        let v = fast.values(idx)?;
        Ok((v.iter().map(|x| x * x).sum(), v))
    };

    'restart: while stats.evaluations < budget {
        stats.restarts += 1;
        let mut current: Vec<usize> = sample(&mut rng, n, s).into_iter().map(|i| i + 1).collect();
        current.sort_unstable();
        let (mut sum, mut values) = score(&current, &mut stats)?;
        let mut stall = 0;
        loop {
            if sum < best.0 {
                best = (sum, current.clone());
            }
            if sum <= threshold_f64 * (1.0 + 1e-9) {
                let (exact, worst) = kashin_terms(system, &current, d)?;
                if exact <= threshold {
                    return Ok(SelectionCertificate {
                        method: "kashin".into(),
                        system: system.clone(),
                        bound: d.clone(),
                        indices: current,
                        condition_sum_f64: exact.to_f64(),
                        condition_sum: exact,
                        threshold_f64: threshold.to_f64(),
                        threshold,
                        worst_value: worst.as_ref().map(|w| w.1.clone()),
                        worst_pattern: worst.map(|w| w.0),
                        search: Some(stats),
                        steps: Vec::new(),
                        schedule: None,
                        weight: None,
                        notes: Vec::new(),
                    });
                }
            }
            if s == n {
                // the only candidate set has been scored
                break 'restart;
            }
            if stats.evaluations >= budget || stall > 4 * s {
                continue 'restart;
            }
            // position contributing most to the heaviest pattern
            let (worst, _) = values
                .iter()
                .enumerate()
                .fold((0, -1.0), |acc, (k, v)| if v * v > acc.1 { (k, v * v) } else { acc });
            let theta = fast.patterns[worst].entries();
            let mut load = vec![0.0; s];
            for (p, v) in fast.patterns.iter().zip(&values) {
                for (i, &e) in p.entries().iter().enumerate() {
                    if e > 0 {
                        load[i] += v * v;
                    }
                }
            }
            let victim = (0..s)
                .filter(|&i| theta[i] > 0)
                .fold(None, |acc: Option<usize>, i| match acc {
                    Some(j) if load[j] >= load[i] => Some(j),
                    _ => Some(i),
                })
                .expect("patterns have nonempty support");
            let replacement = loop {
                let c = rng.gen_range(1..=n);
                if !current.contains(&c) {
                    break c;
                }
            };
            let mut trial = current.clone();
            trial[victim] = replacement;
            trial.sort_unstable();
            let (trial_sum, trial_values) = score(&trial, &mut stats)?;
            if trial_sum < sum {
                current = trial;
                sum = trial_sum;
                values = trial_values;
                stall = 0;
            } else {
                stall += 1;
            }
        }
    }
    Err(LacunaError::NotFound { best_sum: best.0, best_indices: best.1 })
}

fn expect(system: &SystemSpec, idx: &[usize], theta: &[u8], h: Option<&Weight>) -> Result<QSqrt2> {
    let pattern = ExponentPattern::new(theta.to_vec())?;
    match h {
        None => system.monomial_expectation(idx, &pattern),
        Some(Weight::Constant(c)) => {
            if c.is_zero() {
                return Ok(QSqrt2::zero());
            }
            Ok(&QSqrt2::rational(c.clone()) * &system.monomial_expectation(idx, &pattern)?)
        }
        Some(Weight::Step(_)) if idx.is_empty() => {
            let Some(Weight::Step(f)) = h else { unreachable!() };
            Ok(QSqrt2::rational(f.expectation()))
        }
        Some(w) => Ok(QSqrt2::rational(system.weighted_expectation(idx, &pattern, w)?)),
    }
}

/// Sum of the correlation terms of `candidate` against every subset `J` of
/// `chosen` (the empty subset included):
/// `|E(φ_J φ)| + |E(hφ_J φ)| + |E[φ_J(φ² − h)]| + Σ_{l∈J} |E(φ_{J∖l} φ_l² φ)|`.
/// Returns `None` as soon as the partial sum exceeds `limit`.
fn greedy_step_sum(
    system: &SystemSpec,
    chosen: &[usize],
    candidate: usize,
    h: &Weight,
    limit: Option<&QSqrt2>,
) -> Result<Option<QSqrt2>> {
    let m = chosen.len();
    let mut total = QSqrt2::zero();
    let mut idx = Vec::with_capacity(m + 1);
    let mut theta = Vec::with_capacity(m + 1);
    for mask in 0u64..(1u64 << m) {
        idx.clear();
        idx.extend((0..m).filter(|j| mask >> j & 1 == 1).map(|j| chosen[j]));
        let js = idx.len();
        idx.push(candidate);
        theta.clear();
        theta.resize(js + 1, 1);

        let plain = expect(system, &idx, &theta, None)?;
        let weighted = expect(system, &idx, &theta, Some(h))?;
        theta[js] = 2;
        let square = expect(system, &idx, &theta, None)?;
        let h_only = expect(system, &idx[..js], &theta[..js], Some(h))?;
        theta[js] = 1;
        let mut term = &(&plain.abs() + &weighted.abs()) + &(&square - &h_only).abs();
        for l in 0..js {
            theta[l] = 2;
            term = &term + &expect(system, &idx, &theta, None)?.abs();
            theta[l] = 1;
        }
        total = &total + &term;
        if let Some(limit) = limit {
            if &total > limit {
                return Ok(None);
            }
        }
    }
    Ok(Some(total))
}

/// `2^{−i}·εᵢ/D` with `εᵢ` taken exactly from its binary value.
fn greedy_limit(eps: f64, position: usize, d: &QSqrt2) -> Result<QSqrt2> {
    let inv = check_bound(d)?;
    Ok(&QSqrt2::rational(rat_from_f64(eps)? * pow2_neg(position as u32)) * &inv)
}

/// Scans `1..=horizon` in order and accepts candidate `k` as the `i`-th
/// member when its correlation sum is at most `2^{−i}εᵢ/D`; stops after
/// `schedule.len()` acceptances.
pub fn greedy_select(
    system: &SystemSpec,
    horizon: usize,
    schedule: &EpsilonSchedule,
    h: &Weight,
    d: &QSqrt2,
) -> Result<SelectionCertificate> {
    if horizon > system.len() {
        return Err(LacunaError::InvalidInput(format!(
            "horizon {horizon} exceeds the system size {}",
            system.len()
        )));
    }
    let requested = schedule.len();
    if requested > MAX_SELECTION {
        return Err(LacunaError::TooManyIndices { count: requested, limit: MAX_SELECTION });
    }
    check_bound(d)?;
    if matches!(h, Weight::Step(_)) && !system.is_step_kind() {
        return Err(LacunaError::UnsupportedKind(format!("step weight on {}", system.name())));
    }
    let mut chosen: Vec<usize> = Vec::new();
    let mut steps = Vec::new();
    let mut evaluations = 0u64;
    for candidate in 1..=horizon {
        if chosen.len() == requested {
            break;
        }
        let position = chosen.len() + 1;
        let limit = greedy_limit(schedule.eps()[position - 1], position, d)?;
        evaluations += 1;
        if let Some(sum) = greedy_step_sum(system, &chosen, candidate, h, Some(&limit))? {
            steps.push(GreedyStep {
                position,
                index: candidate,
                sum_f64: sum.to_f64(),
                sum,
                threshold_f64: limit.to_f64(),
                threshold: limit,
            });
            chosen.push(candidate);
        }
    }
    if chosen.len() < requested {
        return Err(LacunaError::HorizonExhausted { accepted: chosen.len(), requested });
    }
    // report the step closest to its budget
    let tight = steps
        .iter()
        .max_by(|x, y| (x.sum_f64 / x.threshold_f64).total_cmp(&(y.sum_f64 / y.threshold_f64)))
        .cloned()
        .expect("at least one step");
    Ok(SelectionCertificate {
        method: "greedy".into(),
        system: system.clone(),
        bound: d.clone(),
        indices: chosen,
        condition_sum_f64: tight.sum_f64,
        condition_sum: tight.sum,
        threshold_f64: tight.threshold_f64,
        threshold: tight.threshold,
        worst_pattern: None,
        worst_value: None,
        search: Some(SearchStats { seed: 0, budget: horizon as u64, restarts: 0, evaluations }),
        steps,
        schedule: Some(schedule.clone()),
        weight: Some(h.clone()),
        notes: vec![
            "sums involving h bound the quantity for the supplied weight, which stands in for the weak limit of the squares"
                .into(),
        ],
    })
}

/// Round-robin partition of positions `0..s` into `t` blocks (empty blocks
/// dropped).
pub fn balanced_partition(s: usize, t: usize) -> Vec<Vec<usize>> {
    let t = t.max(1);
    let mut blocks = vec![Vec::new(); t];
    for i in 0..s {
        blocks[i % t].push(i);
    }
    blocks.retain(|b| !b.is_empty());
    blocks
}

#[derive(Clone, Debug)]
enum RieszRepr {
    /// Equally likely atoms of the joint sign table.
    Dyadic { values: Vec<Rational>, masks: Vec<u64> },
    Custom(StepFunction),
    Trig { omegas: Vec<f64>, coeffs: Vec<f64>, cosine: bool, degree: u64 },
}

/// `R = Π (1 + bᵢ f_{nᵢ})`.
#[derive(Clone, Debug)]
pub struct RieszProduct {
    repr: RieszRepr,
    weights: Vec<f64>,
}

/// Builds the product; `|bᵢ|·D ≤ 1` is required (up to rounding of `b`).
pub fn riesz_product(system: &SystemSpec, indices: &[usize], b: &[f64]) -> Result<RieszProduct> {
    if indices.len() != b.len() {
        return Err(LacunaError::InvalidInput(format!("{} indices but {} weights", indices.len(), b.len())));
    }
    system.check_indices(indices)?;
    let d = system.bound().to_f64();
    for (&n, &w) in indices.iter().zip(b) {
        if !w.is_finite() || w.abs() * d > 1.0 + 1e-12 {
            return Err(LacunaError::WeightTooLarge { index: n, value: w.abs() * d });
        }
    }
    let repr = match system.kind() {
        SystemKind::Rademacher { .. } | SystemKind::Walsh { .. } => {
            let (levels, masks) = system.dyadic_table(indices)?.expect("dyadic");
            let pieces = 1u64 << levels;
            if pieces as usize > crate::systems::PIECE_CAP {
                return Err(LacunaError::SizeExceeded { pieces: pieces as u128, cap: crate::systems::PIECE_CAP });
            }
            let exact: Vec<Rational> = b.iter().map(|&w| rat_from_f64(w)).collect::<Result<_>>()?;
            let values = (0..pieces)
                .map(|j| {
                    masks.iter().zip(&exact).fold(Rational::one(), |acc, (&m, w)| {
                        if (j & m).count_ones() % 2 == 0 {
                            acc * (Rational::one() + w)
                        } else {
                            acc * (Rational::one() - w)
                        }
                    })
                })
                .collect();
            RieszRepr::Dyadic { values, masks }
        }
        SystemKind::CustomStep { .. } => {
            let length = system.domain_length();
            let mut acc = StepFunction::constant(length, Rational::one())?;
            for (&n, &w) in indices.iter().zip(b) {
                let f = system.member_step(n)?;
                let w = rat_from_f64(w)?;
                acc = combine(&[&acc, &f], |v| v[0] * (Rational::one() + &w * v[1]))?;
            }
            RieszRepr::Custom(acc)
        }
        SystemKind::TrigSine { freqs, amplitude } | SystemKind::TrigCosine { freqs, amplitude } => {
            let a = amplitude.to_f64();
            let fs: Vec<u64> = indices.iter().map(|&n| freqs[n - 1]).collect();
            RieszRepr::Trig {
                omegas: fs.iter().map(|&k| std::f64::consts::TAU * k as f64).collect(),
                coeffs: b.iter().map(|w| w * a).collect(),
                cosine: matches!(system.kind(), SystemKind::TrigCosine { .. }),
                degree: fs.iter().sum(),
            }
        }
    };
    Ok(RieszProduct { repr, weights: b.to_vec() })
}

impl RieszProduct {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn trig_value(omegas: &[f64], coeffs: &[f64], cosine: bool, x: f64) -> f64 {
        omegas
            .iter()
            .zip(coeffs)
            .map(|(w, c)| 1.0 + c * if cosine { (w * x).cos() } else { (w * x).sin() })
            .product()
    }

    /// Equispaced average exact for trigonometric polynomials of degree `< n`.
    fn trig_average(&self, n: u64, g: impl Fn(f64, f64) -> f64) -> f64 {
        let RieszRepr::Trig { omegas, coeffs, cosine, .. } = &self.repr else { unreachable!() };
        (0..n)
            .map(|j| {
                let x = j as f64 / n as f64;
                g(x, Self::trig_value(omegas, coeffs, *cosine, x))
            })
            .sum::<f64>()
            / n as f64
    }

    /// Exact `E R` for step kinds.
    pub fn mean_exact(&self) -> Option<Rational> {
        match &self.repr {
            RieszRepr::Dyadic { values, .. } => {
                Some(values.iter().sum::<Rational>() / rat_int(values.len() as i64))
            }
            RieszRepr::Custom(f) => Some(f.expectation()),
            RieszRepr::Trig { .. } => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match &self.repr {
            RieszRepr::Trig { degree, .. } => self.trig_average(degree + 1, |_, r| r),
            _ => rat_to_f64(&self.mean_exact().unwrap()),
        }
    }

    /// Minimum of `R` (exact for step kinds, sampled on a fine grid for trig).
    pub fn min_value(&self) -> f64 {
        match &self.repr {
            RieszRepr::Dyadic { values, .. } => values.iter().map(rat_to_f64).fold(f64::INFINITY, f64::min),
            RieszRepr::Custom(f) => f.values().iter().map(rat_to_f64).fold(f64::INFINITY, f64::min),
            RieszRepr::Trig { degree, .. } => {
                let n = 64 * (degree + 1);
                let RieszRepr::Trig { omegas, coeffs, cosine, .. } = &self.repr else { unreachable!() };
                (0..n)
                    .map(|j| Self::trig_value(omegas, coeffs, *cosine, j as f64 / n as f64))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// `E R^p` for `p > 0`.
    pub fn moment(&self, p: f64) -> f64 {
        match &self.repr {
            RieszRepr::Dyadic { values, .. } => {
                values.iter().map(|v| rat_to_f64(v).max(0.0).powf(p)).sum::<f64>() / values.len() as f64
            }
            RieszRepr::Custom(f) => {
                let length = rat_to_f64(f.length());
                f.piece_lengths()
                    .zip(f.values())
                    .map(|(l, v)| rat_to_f64(&l) * rat_to_f64(v).max(0.0).powf(p))
                    .sum::<f64>()
                    / length
            }
            RieszRepr::Trig { omegas, coeffs, cosine, degree } => {
                let g = |x: f64| Self::trig_value(omegas, coeffs, *cosine, x).max(0.0).powf(p);
                integrate_unit(&g, 16 * (*degree).max(4) as usize, 1e-10)
            }
        }
    }

    /// `E[R·Σ aᵢ f_{nᵢ}]` over the same indices the product was built on:
    /// exact for step kinds, an exact quadrature rule for trig.
    fn pairing(&self, system: &SystemSpec, indices: &[usize], a: &[f64]) -> Result<f64> {
        match &self.repr {
            RieszRepr::Dyadic { values, masks } => {
                let coeffs: Vec<Rational> = a.iter().map(|&x| rat_from_f64(x)).collect::<Result<_>>()?;
                let mut total = Rational::zero();
                for (j, r) in values.iter().enumerate() {
                    let p: Rational = masks
                        .iter()
                        .zip(&coeffs)
                        .map(|(&m, c)| if (j as u64 & m).count_ones() % 2 == 0 { c.clone() } else { -c.clone() })
                        .sum();
                    total += r * p;
                }
                Ok(rat_to_f64(&(total / rat_int(values.len() as i64))))
            }
            RieszRepr::Custom(r) => {
                let mut refs: Vec<StepFunction> = vec![r.clone()];
                for &n in indices {
                    refs.push(system.member_step(n)?);
                }
                let coeffs: Vec<Rational> = a.iter().map(|&x| rat_from_f64(x)).collect::<Result<_>>()?;
                let prod = combine(&refs.iter().collect::<Vec<_>>(), |v| {
                    let p: Rational = v[1..].iter().zip(&coeffs).map(|(f, c)| *f * c).sum();
                    v[0] * p
                })?;
                Ok(rat_to_f64(&prod.expectation()))
            }
            RieszRepr::Trig { omegas, degree, cosine, .. } => {
                let amp = match system.kind() {
                    SystemKind::TrigSine { amplitude, .. } | SystemKind::TrigCosine { amplitude, .. } => {
                        amplitude.to_f64()
                    }
                    _ => unreachable!(),
                };
                let kmax = omegas.iter().fold(0.0f64, |m, w| m.max(*w)) / std::f64::consts::TAU;
                let n = degree + kmax.round() as u64 + 1;
                let cosine = *cosine;
                Ok(self.trig_average(n, |x, r| {
                    let p: f64 = omegas
                        .iter()
                        .zip(a)
                        .map(|(w, c)| c * amp * if cosine { (w * x).cos() } else { (w * x).sin() })
                        .sum();
                    r * p
                }))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualNormReport {
    pub t: u32,
    pub t_prime: f64,
    /// `E R^{t′}`.
    pub l_n: f64,
    /// `((t−1)/(t−2))^t`, the contribution of the constant terms.
    pub leading_term: f64,
    /// `4e·Σᵢ 2ⁱ Σ_J |E(φ_J φᵢ)|` over subsets `J` of earlier positions.
    pub correlation_sum: f64,
    /// `leading_term + correlation_sum`, an upper bound for `l_n`.
    pub bound: f64,
    pub below_two: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RieszCertificate {
    /// Blocks of positions into the index list.
    pub blocks: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
    pub integral: f64,
    pub lower_target: f64,
    pub holds: bool,
    pub mean: f64,
    pub min_value: f64,
    /// `E(R f_{nᵢ}) − bᵢ` per position.
    pub gamma_terms: Vec<f64>,
    pub block_norms: Vec<f64>,
}

fn check_partition(blocks: &[Vec<usize>], s: usize) -> Result<()> {
    let mut seen = vec![false; s];
    for &i in blocks.iter().flatten() {
        if i >= s || seen[i] {
            return Err(LacunaError::InvalidInput(format!("partition position {i} repeated or out of range")));
        }
        seen[i] = true;
    }
    if seen.iter().any(|x| !x) {
        return Err(LacunaError::InvalidInput("partition does not cover every position".into()));
    }
    Ok(())
}

/// Block weights `bᵢ = aᵢ / (D·‖a|_A‖₂)` so that `Σ_{A} aᵢbᵢ = ‖a|_A‖₂/D` and
/// `Σ_A bᵢ² = D⁻²`.
pub fn block_weights(a: &[f64], blocks: &[Vec<usize>], d: f64) -> Vec<f64> {
    let mut b = vec![0.0; a.len()];
    for block in blocks {
        let norm = block.iter().map(|&i| a[i] * a[i]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        for &i in block {
            let w = a[i] / (d * norm);
            b[i] = if w.abs() * d > 1.0 { w.signum() / d } else { w };
        }
    }
    b
}

/// Pairs `P = Σ aᵢ f_{nᵢ}` with the block Riesz product and compares the
/// result with `(1/(3D))·Σ_j ‖a|_{A_j}‖₂`.
pub fn riesz_lower_certificate(
    system: &SystemSpec,
    indices: &[usize],
    a: &CoefficientVector,
    blocks: &[Vec<usize>],
    d: &QSqrt2,
) -> Result<RieszCertificate> {
    if a.len() != indices.len() {
        return Err(LacunaError::InvalidInput("coefficients and indices differ in length".into()));
    }
    check_partition(blocks, indices.len())?;
    check_bound(d)?;
    let df = d.to_f64();
    let x = a.entries();
    let b = block_weights(x, blocks, df);
    let r = riesz_product(system, indices, &b)?;
    let integral = r.pairing(system, indices, x)?;
    let block_norms: Vec<f64> =
        blocks.iter().map(|blk| blk.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt()).collect();
    let lower_target = block_norms.iter().sum::<f64>() / (3.0 * df);
    let mut gamma_terms = Vec::with_capacity(indices.len());
    for i in 0..indices.len() {
        let mut unit = vec![0.0; indices.len()];
        unit[i] = 1.0;
        gamma_terms.push(r.pairing(system, indices, &unit)? - b[i]);
    }
    Ok(RieszCertificate {
        blocks: blocks.to_vec(),
        weights: b,
        integral,
        lower_target,
        holds: integral >= lower_target * (1.0 - 1e-12),
        mean: r.mean(),
        min_value: r.min_value(),
        gamma_terms,
        block_norms,
    })
}

/// `L_N = E R^{t′}`, `t′ = t/(t−1)`, for block weights satisfying
/// `Σ_{A_j} bᵢ² ≤ D⁻²`, together with the analytic bound.
pub fn riesz_dual_norm(
    system: &SystemSpec,
    indices: &[usize],
    b: &[f64],
    t: u32,
    blocks: &[Vec<usize>],
    d: &QSqrt2,
) -> Result<DualNormReport> {
    if t < 3 {
        return Err(LacunaError::InvalidInput(format!("t must be an integer ≥ 3, got {t}")));
    }
    if indices.len() > MAX_SELECTION {
        return Err(LacunaError::TooManyIndices { count: indices.len(), limit: MAX_SELECTION });
    }
    check_partition(blocks, indices.len())?;
    check_bound(d)?;
    let df = d.to_f64();
    for block in blocks {
        let mass: f64 = block.iter().map(|&i| b[i] * b[i]).sum();
        if mass * df * df > 1.0 + 1e-12 {
            return Err(LacunaError::InvalidInput(format!("block weight mass {mass} exceeds D^-2")));
        }
    }
    let r = riesz_product(system, indices, b)?;
    let tf = t as f64;
    let t_prime = tf / (tf - 1.0);
    let l_n = r.moment(t_prime);
    let leading_term = ((tf - 1.0) / (tf - 2.0)).powf(tf);
    let mut inner = 0.0;
    for i in 0..indices.len() {
        let mut sub = 0.0;
        let mut idx = Vec::with_capacity(i + 1);
        for mask in 0u64..(1u64 << i) {
            idx.clear();
            idx.extend((0..i).filter(|j| mask >> j & 1 == 1).map(|j| indices[j]));
            idx.push(indices[i]);
            let theta = ExponentPattern::new(vec![1; idx.len()])?;
            sub += system.monomial_expectation(&idx, &theta)?.abs().to_f64();
        }
        inner += 2f64.powi(i as i32 + 1) * sub;
    }
    let correlation_sum = 4.0 * std::f64::consts::E * inner;
    Ok(DualNormReport {
        t,
        t_prime,
        l_n,
        leading_term,
        correlation_sum,
        bound: leading_term + correlation_sum,
        below_two: l_n < 2.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandWitness {
    pub family_index: usize,
    pub t: f64,
    pub ratio: f64,
}

/// Extreme values of `‖Σ aᵢ f_{nᵢ}‖_t / κ(t, a)` over a family and a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentBand {
    pub c_lower: f64,
    pub c_upper: f64,
    /// `max(c_upper, 1/c_lower)`.
    pub beta: f64,
    pub lower_witness: BandWitness,
    pub upper_witness: BandWitness,
    /// `ratios[k][j]` for family member `k` at `t_grid[j]`.
    pub ratios: Vec<Vec<f64>>,
}

pub fn moment_band(
    system: &SystemSpec,
    indices: &[usize],
    family: &[CoefficientVector],
    t_grid: &[f64],
) -> Result<MomentBand> {
    if family.is_empty() || t_grid.is_empty() {
        return Err(LacunaError::InvalidInput("family and t-grid must be nonempty".into()));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t >= 1.0)) {
        return Err(LacunaError::InvalidInput(format!("t must be at least 1, got {t}")));
    }
    let ratios: Vec<Vec<f64>> = family
        .par_iter()
        .map(|a| {
            if a.is_zero() {
                return Err(LacunaError::ZeroVector);
            }
            let poly = Polynomial::with_indices(system, indices, a)?;
            let law = if system.is_step_kind() { Some(poly.law()?) } else { None };
            t_grid
                .iter()
                .map(|&t| {
                    let norm = match &law {
                        Some(Law::Exact(d)) => d.lt_norm(t),
                        _ => poly.lt_norm(t)?,
                    };
                    Ok(norm / kappa(a, t)?)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut lower = BandWitness { family_index: 0, t: t_grid[0], ratio: f64::INFINITY };
    let mut upper = BandWitness { family_index: 0, t: t_grid[0], ratio: f64::NEG_INFINITY };
    for (k, row) in ratios.iter().enumerate() {
        for (&t, &r) in t_grid.iter().zip(row) {
            if r < lower.ratio {
                lower = BandWitness { family_index: k, t, ratio: r };
            }
            if r > upper.ratio {
                upper = BandWitness { family_index: k, t, ratio: r };
            }
        }
    }
    Ok(MomentBand {
        c_lower: lower.ratio,
        c_upper: upper.ratio,
        beta: upper.ratio.max(1.0 / lower.ratio).max(1.0),
        lower_witness: lower,
        upper_witness: upper,
        ratios,
    })
}
