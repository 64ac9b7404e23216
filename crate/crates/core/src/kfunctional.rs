//! The K-functional of the couple `(l1, l2)`.
//!
//! `K(t, a) = inf { ‖b‖₁ + t‖a − b‖₂ }`. Every minimizer has soft-threshold
//! form: for some level `λ ≥ 0`, `r = clamp(a, −λ, λ)` and `b = a − r`. The
//! exact solver therefore minimizes the convex 1-D function
//!
//! ```text
//! g(λ) = Σ (|aᵢ| − λ)₊ + t·(Σ min(aᵢ², λ²))^{1/2}
//! ```
//!
//! piece by piece between consecutive values of the decreasing rearrangement,
//! where each piece has a closed-form stationary point.

use serde::{Deserialize, Serialize};

use crate::error::{LacunaError, Result};

/// A finite real sequence together with its decreasing rearrangement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CoefficientVector {
    entries: Vec<f64>,
    rearranged: Vec<f64>,
}

impl CoefficientVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(LacunaError::InvalidInput("coefficient vector must be nonempty".into()));
        }
        if let Some(x) = entries.iter().find(|x| !x.is_finite()) {
            return Err(LacunaError::InvalidInput(format!("non-finite coefficient {x}")));
        }
        let mut rearranged: Vec<f64> = entries.iter().map(|x| x.abs()).collect();
        rearranged.sort_by(|x, y| y.total_cmp(x));
        Ok(Self { entries, rearranged })
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(aᵢ*)`: absolute values sorted nonincreasing.
    pub fn rearranged(&self) -> &[f64] {
        &self.rearranged
    }

    pub fn l1(&self) -> f64 {
        self.rearranged.iter().rev().sum()
    }

    pub fn l2(&self) -> f64 {
        self.rearranged.iter().rev().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.rearranged[0]
    }

    pub fn is_zero(&self) -> bool {
        self.rearranged[0] == 0.0
    }

    pub fn nonzero_count(&self) -> usize {
        self.rearranged.iter().take_while(|x| **x > 0.0).count()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.entries.iter().map(|x| c * x).collect())
    }
}

impl TryFrom<Vec<f64>> for CoefficientVector {
    type Error = LacunaError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CoefficientVector> for Vec<f64> {
    fn from(a: CoefficientVector) -> Self {
        a.entries
    }
}

/// An optimal split `a = b + r` for `K(t, a)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KSplit {
    pub value: f64,
    /// soft-threshold level `λ`
    pub threshold: f64,
    pub l1_part: Vec<f64>,
    pub l2_part: Vec<f64>,
}

pub fn decreasing_rearrangement(a: &CoefficientVector) -> CoefficientVector {
    CoefficientVector::new(a.rearranged.clone()).expect("rearrangement of a valid vector")
}

/// `[t²]`, with `t²` snapped to an integer when within `1e-12` of one.
pub fn floor_t_squared(t: f64) -> usize {
    let t2 = t * t;
    let nearest = t2.round();
    let f = if (t2 - nearest).abs() <= 1e-12 * nearest.max(1.0) { nearest } else { t2.floor() };
    f.max(0.0) as usize
}

/// Holmstedt's expression: head sum of the `[t²]` largest entries plus `t`
/// times the `l2` norm of the remaining tail.
pub fn holmstedt(a: &CoefficientVector, t: f64) -> f64 {
    let head = floor_t_squared(t).min(a.len());
    let x = a.rearranged();
    let head_sum: f64 = x[..head].iter().sum();
    let tail_sq: f64 = x[head..].iter().rev().map(|v| v * v).sum();
    head_sum + t * tail_sq.sqrt()
}

fn objective(x: &[f64], t: f64, lambda: f64) -> f64 {
    let mut l1 = 0.0;
    let mut l2sq = 0.0;
    for &v in x.iter().rev() {
        if v > lambda {
            l1 += v - lambda;
            l2sq += lambda * lambda;
        } else {
            l2sq += v * v;
        }
    }
    l1 + t * l2sq.sqrt()
}

/// Exact `K(t, a; l1, l2)` with the realizing split.
pub fn k_exact(a: &CoefficientVector, t: f64) -> Result<KSplit> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(LacunaError::InvalidInput(format!("t must be positive and finite, got {t}")));
    }
    let x = a.rearranged();
    let n = x.len();
    if a.is_zero() {
        return Ok(KSplit { value: 0.0, threshold: 0.0, l1_part: vec![0.0; n], l2_part: vec![0.0; n] });
    }

    // suffix sums of squares T_k = Σ_{i≥k} x_i²
    let mut tail = vec![0.0; n + 1];
    for i in (0..n).rev() {
        tail[i] = tail[i + 1] + x[i] * x[i];
    }

    let t2 = t * t;
    let mut candidates: Vec<f64> = Vec::with_capacity(2 * n + 2);
    candidates.push(0.0);
    candidates.extend_from_slice(x);
    // On [x_k, x_{k-1}] exactly k entries exceed λ:
    // g(λ) = S_k − kλ + t·sqrt(kλ² + T_k), stationary where λ² (t² − k) = T_k.
    for k in 1..=n {
        let lo = x.get(k).copied().unwrap_or(0.0);
        let hi = x[k - 1];
        if hi <= lo {
            continue;
        }
        let kf = k as f64;
        if t2 > kf && tail[k] > 0.0 {
            let stat = (tail[k] / (t2 - kf)).sqrt();
            if stat > lo && stat < hi {
                candidates.push(stat);
            }
        }
    }

    let mut best_lambda = 0.0;
    let mut best = f64::INFINITY;
    for &lam in &candidates {
        let v = objective(x, t, lam);
        if v < best || (v == best && lam < best_lambda) {
            best = v;
            best_lambda = lam;
        }
    }

    let (l1_part, l2_part) = split_at_threshold(a.entries(), best_lambda);
    Ok(KSplit { value: best, threshold: best_lambda, l1_part, l2_part })
}

pub(crate) fn split_at_threshold(a: &[f64], lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let r: Vec<f64> = a.iter().map(|v| v.clamp(-lambda, lambda)).collect();
    let b = a.iter().zip(&r).map(|(v, ri)| v - ri).collect();
    (b, r)
}

/// `κ(t, a) = K(√t, a)`.
pub fn kappa(a: &CoefficientVector, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(LacunaError::InvalidInput(format!("t must be positive, got {t}")));
    }
    Ok(k_exact(a, t.sqrt())?.value)
}
