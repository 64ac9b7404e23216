//! Extension of a bounded set of step functions on `[0, 1]` to a
//! multiplicative set on `[0, 2]`.
//!
//! `[1, 2)` is cut into `2^s` intervals `Δ_k = [1 + (k−1)2^{−s}, 1 + k2^{−s})`.
//! The pattern `θ ∈ {0,1}^s \ {0}` owns `Δ_k` with `k = Σ θᵢ·2^{s−i}`; on it
//! the functions in the support of `θ` are built from rescaled Rademacher
//! signs so that the product over the support integrates to `−∫₀¹ Π gᵢ` and
//! every other product integrates to zero. `Δ_{2^s}` carries zeros.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{LacunaError, Result};
use crate::exact::{pow2_neg, rat_int, rat_to_f64, rational_serde, QSqrt2, Rational};
use crate::systems::{common_refinement, StepFunction};

pub const MAX_EXTENSION_SIZE: usize = 10;

/// Largest `|E Π_{i∈S} gᵢ/D|` over nonempty `S`, against `2^{−s}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionCheck {
    #[serde(with = "rational_serde")]
    pub max_abs: Rational,
    pub max_abs_f64: f64,
    #[serde(with = "rational_serde")]
    pub threshold: Rational,
    /// 1-based members of the worst subset.
    pub worst_subset: Vec<usize>,
    pub ok: bool,
}

/// What was placed on one interval `Δ_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalPlan {
    pub k: usize,
    /// 1-based support of the owning pattern.
    pub support: Vec<usize>,
    #[serde(with = "rational_serde")]
    pub start: Rational,
    #[serde(with = "rational_serde")]
    pub end: Rational,
    #[serde(with = "rational_serde")]
    pub alpha: Rational,
    /// `E Π_{i∈support} gᵢ/D` on `[0, 1]`.
    #[serde(with = "rational_serde")]
    pub mean: Rational,
    /// Dyadic pieces on each side of `alpha`.
    pub pieces_per_side: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionPlan {
    pub s: usize,
    #[serde(with = "rational_serde")]
    pub bound: Rational,
    pub intervals: Vec<IntervalPlan>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extension {
    pub plan: ExtensionPlan,
    pub functions: Vec<StepFunction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplicativityReport {
    pub ok: bool,
    pub checked: usize,
    /// Subset (1-based) with the largest nonzero `|∫ Π hᵢ|`, if any.
    pub worst_subset: Option<Vec<usize>>,
    #[serde(default, with = "opt_rational", skip_serializing_if = "Option::is_none")]
    pub worst_value: Option<Rational>,
}

mod opt_rational {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::exact::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(x: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(q) => s.serialize_str(&format_rational(q)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let s: Option<String> = Option::deserialize(d)?;
        s.map(|s| parse_rational(&s).map_err(serde::de::Error::custom)).transpose()
    }
}

fn subset_members(mask: u64, s: usize) -> Vec<usize> {
    (0..s).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).collect()
}

/// `∫ Π_{i∈S} fᵢ` for every nonempty `S ⊆ {1..s}`, indexed by bitmask
/// (bit `i−1` for member `i`). Entry 0 is the length of the domain.
fn subset_integrals(fs: &[StepFunction]) -> Result<Vec<Rational>> {
    let (breaks, idx) = common_refinement(&fs.iter().collect::<Vec<_>>())?;
    let lengths: Vec<Rational> = breaks.windows(2).map(|w| &w[1] - &w[0]).collect();
    let s = fs.len();
    let mut out = vec![Rational::zero(); 1 << s];
    // sparse product (piece, value) of the current subset
    fn rec(
        fs: &[StepFunction],
        idx: &[Vec<usize>],
        lengths: &[Rational],
        start: usize,
        mask: usize,
        prod: &[(usize, Rational)],
        out: &mut [Rational],
    ) {
        out[mask] = prod.iter().map(|(p, v)| &lengths[*p] * v).sum();
        for i in start..fs.len() {
            let values = fs[i].values();
            let next: Vec<(usize, Rational)> = prod
                .iter()
                .filter_map(|(p, v)| {
                    let w = &values[idx[*p][i]];
                    (!w.is_zero()).then(|| (*p, v * w))
                })
                .collect();
            rec(fs, idx, lengths, i + 1, mask | 1 << i, &next, out);
        }
    }
    let all: Vec<(usize, Rational)> = (0..lengths.len()).map(|p| (p, Rational::one())).collect();
    rec(fs, &idx, &lengths, 0, 0, &all, &mut out);
    Ok(out)
}

fn rational_bound(d: &QSqrt2) -> Result<Rational> {
    if !d.is_rational() {
        return Err(LacunaError::IrrationalData(format!("D = {d} is not rational")));
    }
    if !d.a.is_positive() {
        return Err(LacunaError::InvalidInput("D must be positive".into()));
    }
    Ok(d.a.clone())
}

fn check_inputs(g: &[StepFunction], d: &Rational) -> Result<()> {
    if g.is_empty() {
        return Err(LacunaError::InvalidInput("no functions given".into()));
    }
    if g.len() > MAX_EXTENSION_SIZE {
        return Err(LacunaError::TooManyIndices { count: g.len(), limit: MAX_EXTENSION_SIZE });
    }
    for (i, f) in g.iter().enumerate() {
        if !f.length().is_one() {
            return Err(LacunaError::InvalidInput(format!("function {} is not defined on [0, 1]", i + 1)));
        }
        if &f.sup_abs() > d {
            return Err(LacunaError::BoundViolated { index: i + 1 });
        }
    }
    Ok(())
}

fn condition(g: &[StepFunction], d: &Rational) -> Result<(ExtensionCheck, Vec<Rational>)> {
    check_inputs(g, d)?;
    let s = g.len();
    let raw = subset_integrals(g)?;
    let means: Vec<Rational> = raw
        .iter()
        .enumerate()
        .map(|(mask, v)| v / d.pow(mask.count_ones() as i32))
        .collect();
    let (worst, max_abs) = means
        .iter()
        .enumerate()
        .skip(1)
        .map(|(m, v)| (m, v.abs()))
        .fold((1usize, Rational::zero()), |acc, (m, v)| if v > acc.1 { (m, v) } else { acc });
    let threshold = pow2_neg(s as u32);
    Ok((
        ExtensionCheck {
            max_abs_f64: rat_to_f64(&max_abs),
            ok: max_abs < threshold,
            max_abs,
            threshold,
            worst_subset: subset_members(worst as u64, s),
        },
        means,
    ))
}

/// Checks `max_{θ ∈ {0,1}^s \ 0} |E Π (gᵢ/D)^{θᵢ}| < 2^{−s}` exactly.
pub fn check_extension_condition(g: &[StepFunction], d: &QSqrt2) -> Result<ExtensionCheck> {
    Ok(condition(g, &rational_bound(d)?)?.0)
}

/// Sign of the `j`-th Rademacher function (1-based) on piece `p` of `2^n`.
fn rademacher_sign(j: usize, n: usize, p: usize) -> i64 {
    if (p >> (n - j)) & 1 == 0 {
        1
    } else {
        -1
    }
}

/// Values of each support member on `n = 2^{m−1}` equal pieces of one side.
/// `last_sign` multiplies the product function of the last member.
fn side_values(m: usize, last_sign: i64) -> Vec<Vec<i64>> {
    let n = m - 1;
    let pieces = 1usize << n;
    let mut rows: Vec<Vec<i64>> = (1..=n).map(|j| (0..pieces).map(|p| rademacher_sign(j, n, p)).collect()).collect();
    let last = (0..pieces).map(|p| last_sign * rows.iter().map(|r| r[p]).product::<i64>()).collect();
    rows.push(last);
    rows
}

pub fn extend_multiplicative(g: &[StepFunction], d: &QSqrt2) -> Result<Extension> {
    let d = rational_bound(d)?;
    let (check, means) = condition(g, &d)?;
    if !check.ok {
        return Err(LacunaError::ConditionFailed { max_abs: check.max_abs_f64, threshold: rat_to_f64(&check.threshold) });
    }
    let s = g.len();
    let width = pow2_neg(s as u32);
    let mut breaks: Vec<Vec<Rational>> = g.iter().map(|f| f.breakpoints().to_vec()).collect();
    let mut values: Vec<Vec<Rational>> = g.iter().map(|f| f.values().to_vec()).collect();
    let mut intervals = Vec::with_capacity((1 << s) - 1);
    for k in 1..=(1usize << s) {
        let start = Rational::one() + &width * rat_int(k as i64 - 1);
        let end = Rational::one() + &width * rat_int(k as i64);
        if k == 1 << s {
            for i in 0..s {
                breaks[i].push(end.clone());
                values[i].push(Rational::zero());
            }
            break;
        }
        // bit s−i of k is θᵢ
        let support: Vec<usize> = (1..=s).filter(|&i| k >> (s - i) & 1 == 1).collect();
        let mask: usize = support.iter().map(|&i| 1 << (i - 1)).sum();
        let mean = means[mask].clone();
        let alpha = (&start + &end - &mean) / rat_int(2);
        let m = support.len();
        let pieces = 1usize << (m - 1);
        let left = side_values(m, 1);
        let right = side_values(m, -1);
        let left_step = (&alpha - &start) / rat_int(pieces as i64);
        let right_step = (&end - &alpha) / rat_int(pieces as i64);
        for i in 0..s {
            match support.iter().position(|&x| x == i + 1) {
                None => {
                    breaks[i].push(end.clone());
                    values[i].push(Rational::zero());
                }
                Some(j) => {
                    for p in 1..=pieces {
                        breaks[i].push(&start + &left_step * rat_int(p as i64));
                        values[i].push(&d * rat_int(left[j][p - 1]));
                    }
                    for p in 1..=pieces {
                        breaks[i].push(if p == pieces { end.clone() } else { &alpha + &right_step * rat_int(p as i64) });
                        values[i].push(&d * rat_int(right[j][p - 1]));
                    }
                }
            }
        }
        intervals.push(IntervalPlan { k, support, start, end, alpha, mean, pieces_per_side: pieces });
    }
    let functions = breaks
        .into_iter()
        .zip(values)
        .map(|(b, v)| StepFunction::new(b, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(Extension { plan: ExtensionPlan { s, bound: d, intervals }, functions })
}

/// Exhaustive check that `∫ Π_{i∈S} hᵢ = 0` for every nonempty `S`.
pub fn verify_multiplicative(h: &[StepFunction]) -> Result<MultiplicativityReport> {
    if h.is_empty() {
        return Err(LacunaError::InvalidInput("no functions given".into()));
    }
    if h.len() > MAX_EXTENSION_SIZE + 6 {
        return Err(LacunaError::TooManyIndices { count: h.len(), limit: MAX_EXTENSION_SIZE + 6 });
    }
    let ints = subset_integrals(h)?;
    let worst = ints
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, v)| !v.is_zero())
        .max_by(|a, b| a.1.abs().cmp(&b.1.abs()));
    Ok(MultiplicativityReport {
        ok: worst.is_none(),
        checked: ints.len() - 1,
        worst_subset: worst.map(|(m, _)| subset_members(m as u64, h.len())),
        worst_value: worst.map(|(_, v)| v.clone()),
    })
}

/// `x ↦ h(2x)`, moving a set on `[0, 2]` back to `[0, 1]`.
pub fn rescale_to_unit(h: &[StepFunction]) -> Result<Vec<StepFunction>> {
    h.iter()
        .map(|f| {
            let factor = f.length().clone();
            f.rescale_domain(&factor)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn sf(b: &[(i64, i64)], v: &[i64]) -> StepFunction {
        StepFunction::new(b.iter().map(|&(p, q)| rat(p, q)).collect(), v.iter().map(|&x| rat_int(x)).collect()).unwrap()
    }

    fn rad(j: u32) -> StepFunction {
        let n = 1i64 << j;
        StepFunction::new(
            (0..=n).map(|p| rat(p, n)).collect(),
            (0..n).map(|p| rat_int(if p % 2 == 0 { 1 } else { -1 })).collect(),
        )
        .unwrap()
    }

    /// pair with ∫ g₁g₂ = 1/8
    fn eighth_pair() -> Vec<StepFunction> {
        vec![rad(1), sf(&[(0, 1), (9, 32), (1, 2), (23, 32), (1, 1)], &[1, -1, 1, -1])]
    }

    #[test]
    fn condition_examples() {
        let one = QSqrt2::one();
        let c = check_extension_condition(&[rad(1), rad(2), rad(3)], &one).unwrap();
        assert!(c.ok && c.max_abs.is_zero());
        let c = check_extension_condition(&eighth_pair(), &one).unwrap();
        assert_eq!(c.max_abs, rat(1, 8));
        assert_eq!(c.worst_subset, vec![1, 2]);
        assert!(c.ok);
        let quarter = vec![rad(1), sf(&[(0, 1), (5, 16), (1, 2), (11, 16), (1, 1)], &[1, -1, 1, -1])];
        let c = check_extension_condition(&quarter, &one).unwrap();
        assert_eq!(c.max_abs, rat(1, 4));
        assert!(!c.ok);
        assert!(matches!(extend_multiplicative(&quarter, &one), Err(LacunaError::ConditionFailed { .. })));
        let big = vec![sf(&[(0, 1), (1, 1)], &[2])];
        assert!(matches!(check_extension_condition(&big, &one), Err(LacunaError::BoundViolated { index: 1 })));
        assert!(matches!(check_extension_condition(&[rad(1)], &QSqrt2::sqrt2()), Err(LacunaError::IrrationalData(_))));
    }

    #[test]
    fn singleton_extension() {
        let ext = extend_multiplicative(&[rad(1)], &QSqrt2::one()).unwrap();
        let h = &ext.functions[0];
        assert_eq!(h.integral(), Rational::zero());
        assert_eq!(ext.plan.intervals[0].alpha, rat(5, 4));
        assert_eq!(h.restrict_prefix(&Rational::one()).unwrap(), rad(1));
    }

    #[test]
    fn pair_extension() {
        let g = eighth_pair();
        let ext = extend_multiplicative(&g, &QSqrt2::one()).unwrap();
        let report = verify_multiplicative(&ext.functions).unwrap();
        assert!(report.ok, "{report:?}");
        assert_eq!(report.checked, 3);
        for (h, gi) in ext.functions.iter().zip(&g) {
            assert_eq!(h.restrict_prefix(&Rational::one()).unwrap(), *gi);
            assert!(h.sup_abs() <= Rational::one());
            assert_eq!(h.length(), &rat_int(2));
        }
        for iv in &ext.plan.intervals {
            assert_eq!(rat_int(2) * &iv.alpha - &iv.start - &iv.end, -iv.mean.clone());
            assert!(iv.alpha > iv.start && iv.alpha < iv.end);
        }
        let unit = rescale_to_unit(&ext.functions).unwrap();
        assert!(verify_multiplicative(&unit).unwrap().ok);
        let json = serde_json::to_string(&ext).unwrap();
        let back: Extension = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ext);
    }

    #[test]
    fn identical_functions_are_not_multiplicative() {
        let r = verify_multiplicative(&[rad(1), rad(1)]).unwrap();
        assert!(!r.ok);
        assert_eq!(r.worst_subset, Some(vec![1, 2]));
        assert_eq!(r.worst_value, Some(Rational::one()));
        assert!(verify_multiplicative(&[rad(1), rad(2), rad(3), rad(4)]).unwrap().ok);
    }

    #[test]
    fn larger_bound_and_triple() {
        let d = QSqrt2::rational(rat_int(2));
        let g = vec![
            sf(&[(0, 1), (21, 40), (1, 1)], &[1, -1]),
            rad(2),
            sf(&[(0, 1), (3, 20), (1, 4), (3, 8), (1, 2), (1, 1)], &[2, -2, 2, -2, 0]),
        ];
        assert_eq!(check_extension_condition(&g, &d).unwrap().max_abs, rat(1, 20));
        let ext = extend_multiplicative(&g, &d).unwrap();
        assert!(verify_multiplicative(&ext.functions).unwrap().ok);
        assert!(ext.functions.iter().all(|h| h.sup_abs() <= rat_int(2)));
    }
}
