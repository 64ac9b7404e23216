//! Finite-family verifiers for equivalence in distribution, the moment and
//! strong-multiplicativity criteria, Sidon constants and witness sets.
//!
//! Every constant reported here is measured over a finite family, so it is a
//! lower bound for the constant of the full system.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LacunaError, Result};
use crate::exact::QSqrt2;
use crate::kfunctional::CoefficientVector;
use crate::selection::{moment_band, MomentBand};
use crate::systems::{ExponentPattern, Law, Polynomial, SystemSpec};

pub const C_MAX: f64 = 1e6;
pub const C_TOL: f64 = 1e-6;
const MAX_WITNESSES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `C⁻¹·P{|P_F| > Cz} ≤ P{|P_G| > z}`
    Lower,
    /// `P{|P_G| > z} ≤ C·P{|P_F| > z/C}`
    Upper,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceWitness {
    pub family_index: usize,
    pub coefficients: Vec<f64>,
    pub z: f64,
    pub side: Side,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    /// Smallest `C ≥ 1` making the sandwich hold on the tested pairs; a lower
    /// bound for the equivalence constant.
    pub c_hat: f64,
    pub exact_one: bool,
    /// Pairs that fail just below `c_hat`.
    pub witnesses: Vec<EquivalenceWitness>,
    pub family_size: usize,
    pub z_grid_size: usize,
    /// Widest tail enclosure met (0 when both systems are step kinds).
    pub max_bracket_width: f64,
}

impl EquivalenceReport {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| LacunaError::InvalidInput(format!("csv: {e}"));
        out.write_record(["c_hat", "family_index", "z", "side", "coefficients"]).map_err(io)?;
        if self.witnesses.is_empty() {
            out.write_record([self.c_hat.to_string(), String::new(), String::new(), String::new(), String::new()])
                .map_err(io)?;
        }
        for wit in &self.witnesses {
            let side = match wit.side {
                Side::Lower => "lower",
                Side::Upper => "upper",
            };
            let coeffs: Vec<String> = wit.coefficients.iter().map(|c| c.to_string()).collect();
            out.write_record([
                self.c_hat.to_string(),
                wit.family_index.to_string(),
                wit.z.to_string(),
                side.to_string(),
                coeffs.join(";"),
            ])
            .map_err(io)?;
        }
        out.flush().map_err(|e| LacunaError::InvalidInput(format!("csv: {e}")))?;
        Ok(())
    }
}

/// Tail of `|P|`, evaluated at bracket midpoints for enclosed laws.
struct Tail {
    law: Law,
}

impl Tail {
    fn at(&self, z: f64) -> f64 {
        self.law.tail(z).mid()
    }

    fn width(&self, z: f64) -> f64 {
        self.law.tail(z).width()
    }
}

/// Distinct atoms of an exact law with the midpoints between neighbours.
fn quantile_grid(law: &Law) -> Vec<f64> {
    let mut grid = Vec::new();
    match law.as_exact() {
        Some(d) => {
            let m = d.magnitudes();
            for (k, &v) in m.iter().enumerate() {
                if v > 0.0 {
                    grid.push(v);
                }
                if let Some(&next) = m.get(k + 1) {
                    grid.push(0.5 * (v + next));
                }
            }
            if let Some(&smallest) = m.last() {
                if smallest > 0.0 {
                    grid.push(0.5 * smallest);
                }
            }
        }
        None => {
            let top = law.sup().hi;
            grid.extend((1..=32).map(|j| top * j as f64 / 33.0));
        }
    }
    grid.retain(|z| *z > 0.0);
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup();
    grid
}

struct Pair {
    family_index: usize,
    z: f64,
}

fn fails(tails_f: &[Tail], tails_g: &[Tail], p: &Pair, c: f64) -> Option<Side> {
    let (f, g) = (&tails_f[p.family_index], &tails_g[p.family_index]);
    let mid = g.at(p.z);
    if f.at(c * p.z) / c > mid {
        return Some(Side::Lower);
    }
    if mid > c * f.at(p.z / c) {
        return Some(Side::Upper);
    }
    None
}

/// Measures the constant of `C⁻¹P{|ΣaF| > Cz} ≤ P{|ΣaG| > z} ≤ C·P{|ΣaF| > z/C}`
/// over a family and a `z`-grid. Without an explicit grid each vector gets the
/// atoms of both exact laws plus midpoints (32 equispaced levels for
/// enclosed laws).
pub fn distribution_compare(
    sys_f: &SystemSpec,
    sys_g: &SystemSpec,
    indices_f: &[usize],
    indices_g: &[usize],
    family: &[CoefficientVector],
    z_grid: Option<&[f64]>,
) -> Result<EquivalenceReport> {
    if indices_f.len() != indices_g.len() {
        return Err(LacunaError::InvalidInput(format!(
            "index lists differ in length ({} vs {})",
            indices_f.len(),
            indices_g.len()
        )));
    }
    if family.is_empty() {
        return Err(LacunaError::InvalidInput("empty family".into()));
    }
    if let Some(z) = z_grid {
        if z.is_empty() || z.iter().any(|z| !(*z > 0.0)) {
            return Err(LacunaError::InvalidInput("z-grid must be nonempty and positive".into()));
        }
    }
    let laws: Vec<(Tail, Tail)> = family
        .par_iter()
        .map(|a| {
            let pf = Polynomial::with_indices(sys_f, indices_f, a)?;
            let pg = Polynomial::with_indices(sys_g, indices_g, a)?;
            Ok((Tail { law: pf.law()? }, Tail { law: pg.law()? }))
        })
        .collect::<Result<_>>()?;
    let (tails_f, tails_g): (Vec<Tail>, Vec<Tail>) = laws.into_iter().unzip();
    let mut pairs = Vec::new();
    for (k, tf) in tails_f.iter().enumerate() {
        let grid = match z_grid {
            Some(z) => z.to_vec(),
            None => {
                let mut g = quantile_grid(&tf.law);
                g.extend(quantile_grid(&tails_g[k].law));
                g.sort_by(|a, b| a.total_cmp(b));
                g.dedup();
                g
            }
        };
        pairs.extend(grid.into_iter().map(|z| Pair { family_index: k, z }));
    }
    let max_bracket_width = pairs
        .iter()
        .map(|p| tails_f[p.family_index].width(p.z).max(tails_g[p.family_index].width(p.z)))
        .fold(0.0, f64::max);
    let holds = |c: f64| pairs.par_iter().all(|p| fails(&tails_f, &tails_g, p, c).is_none());
    let witnesses_at = |c: f64| -> Vec<EquivalenceWitness> {
        pairs
            .iter()
            .filter_map(|p| {
                fails(&tails_f, &tails_g, p, c).map(|side| EquivalenceWitness {
                    family_index: p.family_index,
                    coefficients: family[p.family_index].entries().to_vec(),
                    z: p.z,
                    side,
                })
            })
            .take(MAX_WITNESSES)
            .collect()
    };
    if holds(1.0) {
        return Ok(EquivalenceReport {
            c_hat: 1.0,
            exact_one: true,
            witnesses: Vec::new(),
            family_size: family.len(),
            z_grid_size: pairs.len(),
            max_bracket_width,
        });
    }
    if !holds(C_MAX) {
        return Err(LacunaError::Unbounded(C_MAX));
    }
    let (mut lo, mut hi) = (1.0, C_MAX);
    while hi - lo > C_TOL * hi.max(1.0) {
        let mid = if hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(EquivalenceReport {
        c_hat: hi,
        exact_one: false,
        witnesses: witnesses_at(lo),
        family_size: family.len(),
        z_grid_size: pairs.len(),
        max_bracket_width,
    })
}

/// Moment growth `‖P‖_t ≍ κ(t, a)`: the band and `β = max(c_upper, 1/c_lower)`.
pub fn moment_criterion(
    system: &SystemSpec,
    indices: &[usize],
    family: &[CoefficientVector],
    t_grid: &[f64],
) -> Result<MomentBand> {
    moment_band(system, indices, family, t_grid)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrongMultReport {
    pub is_strong: bool,
    pub worst_pattern: Option<ExponentPattern>,
    pub worst_value: Option<QSqrt2>,
    /// Uniform bound `D`.
    pub d_bound: QSqrt2,
    pub d_bound_f64: f64,
    /// `min E f_n²` over the indices.
    pub d_min: QSqrt2,
    pub d_min_f64: f64,
}

pub fn strong_mult_criterion(system: &SystemSpec, indices: &[usize]) -> Result<StrongMultReport> {
    if indices.is_empty() {
        return Err(LacunaError::InvalidInput("no indices".into()));
    }
    let (is_strong, worst) = system.is_strongly_multiplicative(indices)?;
    let d_min = indices
        .iter()
        .map(|&n| system.member_second_moment(n))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .min()
        .expect("nonempty");
    Ok(StrongMultReport {
        is_strong,
        worst_value: worst.as_ref().map(|w| w.1.clone()),
        worst_pattern: worst.map(|w| w.0),
        d_bound_f64: system.bound().to_f64(),
        d_bound: system.bound().clone(),
        d_min_f64: d_min.to_f64(),
        d_min,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SidonReport {
    /// `max ‖a‖₁/‖P‖_∞` over nonzero members, with the sup-norm taken at the
    /// top of its enclosure.
    pub constant: f64,
    pub witness: usize,
    pub skipped_zero: usize,
}

pub fn sidon_constant(system: &SystemSpec, indices: &[usize], family: &[CoefficientVector]) -> Result<SidonReport> {
    if family.is_empty() {
        return Err(LacunaError::InvalidInput("empty family".into()));
    }
    let ratios: Vec<Option<f64>> = family
        .par_iter()
        .map(|a| {
            let p = Polynomial::with_indices(system, indices, a)?;
            let sup = p.sup_norm()?.hi;
            Ok((sup > 0.0).then(|| a.l1() / sup))
        })
        .collect::<Result<_>>()?;
    let best = ratios
        .iter()
        .enumerate()
        .filter_map(|(k, r)| r.map(|r| (k, r)))
        .fold(None, |acc: Option<(usize, f64)>, (k, r)| match acc {
            Some((_, b)) if b >= r => acc,
            _ => Some((k, r)),
        });
    let (witness, constant) = best.ok_or(LacunaError::ZeroPolynomial)?;
    Ok(SidonReport { constant, witness, skipped_zero: ratios.iter().filter(|r| r.is_none()).count() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessSetReport {
    /// Measure of `{|T| ≥ α₂‖T‖_∞}`.
    pub measure: f64,
    pub sup: f64,
    pub level: f64,
    /// `α₁·2^{−m}`.
    pub threshold: f64,
    pub threshold_holds: bool,
}

/// Level set of a step-kind polynomial at `α₂‖T‖_∞`, against `α₁·2^{−m}`.
pub fn witness_set(poly: &Polynomial, alpha1: f64, alpha2: f64) -> Result<WitnessSetReport> {
    if !(alpha2 > 0.0 && alpha2 <= 1.0) {
        return Err(LacunaError::InvalidInput(format!("α₂ must lie in (0, 1], got {alpha2}")));
    }
    let law = match poly.law()? {
        Law::Exact(d) => d,
        Law::Enclosed(_) => return Err(LacunaError::UnsupportedKind(poly.system().name().into())),
    };
    let sup = law.sup();
    let level = alpha2 * sup;
    let measure: f64 =
        law.magnitudes().iter().zip(law.weights()).filter(|(v, _)| **v >= level).map(|(_, w)| w).sum();
    let threshold = alpha1 * 2f64.powi(-(poly.indices().len() as i32));
    Ok(WitnessSetReport { measure, sup, level, threshold, threshold_holds: measure > threshold })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    /// A few nonzero entries of random size and sign.
    Sparse,
    /// Random signs, equal magnitudes.
    Flat,
    /// `±r^k` in random order.
    Geometric,
    /// Entries uniform on `[−1, 1]`.
    Uniform,
    /// Cycles through sparse, flat and geometric.
    Mixed,
}

impl std::str::FromStr for FamilyKind {
    type Err = LacunaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse" => Ok(Self::Sparse),
            "flat" => Ok(Self::Flat),
            "geometric" => Ok(Self::Geometric),
            "uniform" => Ok(Self::Uniform),
            "mixed" => Ok(Self::Mixed),
            other => Err(LacunaError::InvalidInput(format!("unknown family kind {other:?}"))),
        }
    }
}

fn sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Seeded family of `count` nonzero vectors of length `m`.
pub fn generate_family(kind: FamilyKind, m: usize, count: usize, seed: u64) -> Result<Vec<CoefficientVector>> {
    if m == 0 {
        return Err(LacunaError::InvalidInput("vector length must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let kind = match kind {
                FamilyKind::Mixed => [FamilyKind::Sparse, FamilyKind::Flat, FamilyKind::Geometric][k % 3],
                other => other,
            };
            let mut v = vec![0.0; m];
            match kind {
                FamilyKind::Sparse => {
                    let nnz = rng.gen_range(1..=m.min(3));
                    for i in rand::seq::index::sample(&mut rng, m, nnz) {
                        v[i] = sign(&mut rng) * rng.gen_range(0.1..=1.0);
                    }
                }
                FamilyKind::Flat => {
                    for x in &mut v {
                        *x = sign(&mut rng);
                    }
                }
                FamilyKind::Geometric => {
                    let r: f64 = rng.gen_range(0.3..0.9);
                    for (i, x) in v.iter_mut().enumerate() {
                        *x = sign(&mut rng) * r.powi(i as i32);
                    }
                    v.shuffle(&mut rng);
                }
                FamilyKind::Uniform => loop {
                    for x in v.iter_mut() {
                        *x = rng.gen_range(-1.0..=1.0);
                    }
                    if v.iter().any(|x| *x != 0.0) {
                        break;
                    }
                },
                FamilyKind::Mixed => unreachable!(),
            }
            CoefficientVector::new(v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_subsystems() {
        let r = SystemSpec::rademacher(12);
        let fam = generate_family(FamilyKind::Mixed, 3, 12, 1).unwrap();
        let same = distribution_compare(&r, &r, &[1, 2, 3], &[1, 2, 3], &fam, None).unwrap();
        assert!(same.exact_one && same.c_hat == 1.0);
        let sub = distribution_compare(&r, &r, &[1, 2, 3], &[4, 7, 9], &fam, None).unwrap();
        assert_eq!(sub.c_hat, 1.0);
        let t = SystemSpec::trig_sine(vec![1, 3, 9], false).unwrap();
        let tt = distribution_compare(&t, &t, &[1, 2], &[1, 2], &fam_of(2), None).unwrap();
        assert_eq!(tt.c_hat, 1.0);
    }

    fn fam_of(m: usize) -> Vec<CoefficientVector> {
        generate_family(FamilyKind::Mixed, m, 4, 3).unwrap()
    }

    #[test]
    fn doubled_system_needs_constant() {
        use crate::exact::{rat, rat_int};
        use crate::systems::StepFunction;
        let r1 = StepFunction::new(vec![rat(0, 1), rat(1, 2), rat(1, 1)], vec![rat_int(1), rat_int(-1)]).unwrap();
        let f = SystemSpec::custom(vec![r1.clone()]).unwrap();
        let g = SystemSpec::custom(vec![r1.map(|v| v * rat_int(2))]).unwrap();
        let fam = vec![CoefficientVector::new(vec![1.0]).unwrap()];
        // P{2|r| > 1.9} = 1 needs P{|r| > 1.9/C} > 0, i.e. C > 1.9
        let rep = distribution_compare(&f, &g, &[1], &[1], &fam, Some(&[1.9])).unwrap();
        assert!(!rep.exact_one);
        assert!((rep.c_hat - 1.9).abs() < 1e-5, "{}", rep.c_hat);
        assert_eq!(rep.witnesses[0].side, Side::Upper);
        let zero = SystemSpec::custom(vec![r1.map(|_| rat_int(0))]).unwrap();
        assert!(matches!(
            distribution_compare(&zero, &g, &[1], &[1], &fam, None),
            Err(LacunaError::Unbounded(_))
        ));
    }

    #[test]
    fn strong_mult_examples() {
        let rep = strong_mult_criterion(&SystemSpec::rademacher(4), &[1, 2, 3, 4]).unwrap();
        assert!(rep.is_strong);
        assert_eq!((rep.d_bound_f64, rep.d_min_f64), (1.0, 1.0));
        let t = SystemSpec::trig_sine(vec![1, 3, 9, 27], true).unwrap();
        let rep = strong_mult_criterion(&t, &[1, 2, 3, 4]).unwrap();
        assert!(rep.is_strong);
        assert_eq!(rep.d_min, QSqrt2::one());
        let t2 = SystemSpec::trig_sine(vec![1, 2, 4], false).unwrap();
        let rep = strong_mult_criterion(&t2, &[1, 2, 3]).unwrap();
        assert!(!rep.is_strong && rep.worst_pattern.is_some());
    }

    #[test]
    fn sidon_rademacher_is_one() {
        let r = SystemSpec::rademacher(5);
        let fam = generate_family(FamilyKind::Uniform, 5, 20, 9).unwrap();
        let rep = sidon_constant(&r, &[1, 2, 3, 4, 5], &fam).unwrap();
        assert!((rep.constant - 1.0).abs() < 1e-12);
        let zero = vec![CoefficientVector::new(vec![0.0; 5]).unwrap()];
        assert!(matches!(sidon_constant(&r, &[1, 2, 3, 4, 5], &zero), Err(LacunaError::ZeroPolynomial)));
    }

    #[test]
    fn witness_set_levels() {
        let r = SystemSpec::rademacher(3);
        let p = Polynomial::new(&r, vec![1, 2, 3], vec![1.0, 1.0, 1.0]).unwrap();
        let top = witness_set(&p, 1.0, 1.0).unwrap();
        assert_eq!(top.measure, 0.25);
        let half = witness_set(&p, 0.5, 0.5).unwrap();
        assert!(half.measure >= 0.125 && half.threshold_holds);
        let t = SystemSpec::trig_sine(vec![1], false).unwrap();
        let q = Polynomial::new(&t, vec![1], vec![1.0]).unwrap();
        assert!(matches!(witness_set(&q, 1.0, 0.5), Err(LacunaError::UnsupportedKind(_))));
    }

    #[test]
    fn families_are_seeded() {
        let a = generate_family(FamilyKind::Mixed, 6, 9, 5).unwrap();
        assert_eq!(a, generate_family(FamilyKind::Mixed, 6, 9, 5).unwrap());
        assert_ne!(a, generate_family(FamilyKind::Mixed, 6, 9, 6).unwrap());
        assert!(a.iter().all(|v| !v.is_zero() && v.len() == 6));
    }
}
