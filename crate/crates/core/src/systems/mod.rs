//! Finite function systems with exact monomial-expectation oracles.
//!
//! Members are indexed from 1. Step kinds (Rademacher, Walsh, custom step
//! functions) are evaluated in exact rational arithmetic; trigonometric kinds
//! evaluate `E[Π fᵢ^{θᵢ}]` exactly in `ℚ(√2)` by expanding every sine/cosine
//! into exponentials and counting the sign choices whose frequencies cancel.

pub mod law;
pub mod step;
pub mod trig;
mod wire;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{LacunaError, Result};
use crate::exact::{pow2_neg, rat_int, rat_to_f64, QSqrt2, Rational};
use crate::kfunctional::CoefficientVector;

pub use law::{Bracket, DiscreteLaw, Law, PanelLaw};
pub use step::{combine, common_refinement, StepFunction};
pub use trig::TrigPoly;

/// Cap on the number of pieces of any materialized step representation.
pub const PIECE_CAP: usize = 1 << 20;

/// Relative tolerance of trigonometric `L_t` quadrature.
pub const TRIG_NORM_TOL: f64 = 1e-10;

/// Absolute width target of trigonometric tail enclosures.
pub const TRIG_TAIL_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub enum SystemKind {
    /// `r_1, …, r_count` with `r_n(x) = sign sin(2ⁿπx)`.
    Rademacher { count: usize },
    /// `w_1, …, w_count` with `w_n = Π r_{i+1}` over the set bits `i` of `n`.
    Walsh { count: usize },
    TrigSine { freqs: Vec<u64>, amplitude: QSqrt2 },
    TrigCosine { freqs: Vec<u64>, amplitude: QSqrt2 },
    CustomStep { functions: Vec<StepFunction> },
}

/// A finite system together with a uniform bound `D` on its members.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    kind: SystemKind,
    bound: QSqrt2,
}

impl SystemSpec {
    pub fn rademacher(count: usize) -> Self {
        Self { kind: SystemKind::Rademacher { count }, bound: QSqrt2::one() }
    }

    pub fn walsh(count: usize) -> Self {
        Self { kind: SystemKind::Walsh { count }, bound: QSqrt2::one() }
    }

    /// `A·sin(2πkx)` with `A = √2` when `normalized`, else `A = 1`.
    pub fn trig_sine(freqs: Vec<u64>, normalized: bool) -> Result<Self> {
        check_freqs(&freqs)?;
        let amplitude = if normalized { QSqrt2::sqrt2() } else { QSqrt2::one() };
        Ok(Self { bound: amplitude.clone(), kind: SystemKind::TrigSine { freqs, amplitude } })
    }

    pub fn trig_cosine(freqs: Vec<u64>, normalized: bool) -> Result<Self> {
        check_freqs(&freqs)?;
        let amplitude = if normalized { QSqrt2::sqrt2() } else { QSqrt2::one() };
        Ok(Self { bound: amplitude.clone(), kind: SystemKind::TrigCosine { freqs, amplitude } })
    }

    pub fn custom(functions: Vec<StepFunction>) -> Result<Self> {
        if functions.is_empty() {
            return Err(LacunaError::InvalidInput("custom system needs at least one function".into()));
        }
        let length = functions[0].length().clone();
        if functions.iter().any(|f| f.length() != &length) {
            return Err(LacunaError::InvalidInput("custom functions must share a domain".into()));
        }
        let bound = functions.iter().map(|f| f.sup_abs()).max().unwrap();
        let bound = if bound.is_zero() { Rational::one() } else { bound };
        Ok(Self { kind: SystemKind::CustomStep { functions }, bound: QSqrt2::rational(bound) })
    }

    /// Replaces the uniform bound; fails if some member exceeds it.
    pub fn with_bound(mut self, bound: QSqrt2) -> Result<Self> {
        if bound.signum() <= 0 {
            return Err(LacunaError::InvalidInput("D must be positive".into()));
        }
        for n in 1..=self.len() {
            if self.member_sup(n)? > bound {
                return Err(LacunaError::BoundViolated { index: n });
            }
        }
        self.bound = bound;
        Ok(self)
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    /// The uniform bound `D`.
    pub fn bound(&self) -> &QSqrt2 {
        &self.bound
    }

    pub fn len(&self) -> usize {
        match &self.kind {
            SystemKind::Rademacher { count } | SystemKind::Walsh { count } => *count,
            SystemKind::TrigSine { freqs, .. } | SystemKind::TrigCosine { freqs, .. } => freqs.len(),
            SystemKind::CustomStep { functions } => functions.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_step_kind(&self) -> bool {
        !matches!(self.kind, SystemKind::TrigSine { .. } | SystemKind::TrigCosine { .. })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            SystemKind::Rademacher { .. } => "rademacher",
            SystemKind::Walsh { .. } => "walsh",
            SystemKind::TrigSine { .. } => "trig-sine",
            SystemKind::TrigCosine { .. } => "trig-cosine",
            SystemKind::CustomStep { .. } => "custom-step",
        }
    }

    /// Domain length of the members (1 except for custom systems).
    pub fn domain_length(&self) -> Rational {
        match &self.kind {
            SystemKind::CustomStep { functions } => functions[0].length().clone(),
            _ => Rational::one(),
        }
    }

    pub fn check_indices(&self, indices: &[usize]) -> Result<()> {
        for &n in indices {
            if n == 0 || n > self.len() {
                return Err(LacunaError::InvalidInput(format!(
                    "index {n} out of range 1..={} for {}",
                    self.len(),
                    self.name()
                )));
            }
        }
        Ok(())
    }

    fn check_distinct(indices: &[usize]) -> Result<()> {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(LacunaError::InvalidInput("indices must be distinct".into()));
        }
        Ok(())
    }

    pub(crate) fn trig_parts(&self) -> Option<(&[u64], &QSqrt2, bool)> {
        match &self.kind {
            SystemKind::TrigSine { freqs, amplitude } => Some((freqs, amplitude, false)),
            SystemKind::TrigCosine { freqs, amplitude } => Some((freqs, amplitude, true)),
            _ => None,
        }
    }

    /// Bit mask of member `n` on the dyadic grid with `2^bits` pieces: the
    /// member's sign on piece `j` is `(−1)^{popcount(j & mask)}`.
    pub(crate) fn dyadic_mask(&self, n: usize, bits: u32) -> u64 {
        match self.kind {
            SystemKind::Rademacher { .. } => 1u64 << (bits - n as u32),
            SystemKind::Walsh { .. } => {
                let mut mask = 0;
                let mut rest = n as u64;
                let mut i = 0;
                while rest > 0 {
                    if rest & 1 == 1 {
                        mask |= 1u64 << (bits - (i + 1));
                    }
                    rest >>= 1;
                    i += 1;
                }
                mask
            }
            _ => unreachable!("dyadic mask requested for a non-dyadic system"),
        }
    }

    /// Number of dyadic levels member `n` depends on.
    pub(crate) fn dyadic_bits(&self, n: usize) -> Option<u32> {
        match self.kind {
            SystemKind::Rademacher { .. } => Some(n as u32),
            SystemKind::Walsh { .. } => Some(usize::BITS - n.leading_zeros()),
            _ => None,
        }
    }

    /// Dyadic levels (1-based Rademacher factors) member `n` is built from.
    fn dyadic_levels(&self, n: usize) -> Vec<u32> {
        match self.kind {
            SystemKind::Rademacher { .. } => vec![n as u32],
            SystemKind::Walsh { .. } => (0..usize::BITS).filter(|i| n >> i & 1 == 1).map(|i| i + 1).collect(),
            _ => Vec::new(),
        }
    }

    /// Sign table of dyadic members restricted to the levels they use: with
    /// `L` levels, member `k` equals `(−1)^{popcount(j & masks[k])}` on atom
    /// `j` of `2^L` equally likely atoms. Joint laws (hence all expectations,
    /// norms and tails) agree with the full representation. `None` for
    /// non-dyadic kinds.
    pub(crate) fn dyadic_table(&self, indices: &[usize]) -> Result<Option<(u32, Vec<u64>)>> {
        if !matches!(self.kind, SystemKind::Rademacher { .. } | SystemKind::Walsh { .. }) {
            return Ok(None);
        }
        let per: Vec<Vec<u32>> = indices.iter().map(|&n| self.dyadic_levels(n)).collect();
        let mut levels: Vec<u32> = per.iter().flatten().copied().collect();
        levels.sort_unstable();
        levels.dedup();
        let l = levels.len() as u32;
        if l > 62 {
            return Err(LacunaError::SizeExceeded { pieces: u128::MAX, cap: PIECE_CAP });
        }
        let masks = per
            .iter()
            .map(|ls| {
                ls.iter().fold(0u64, |m, lv| {
                    let pos = levels.binary_search(lv).unwrap() as u32;
                    m | 1u64 << (l - 1 - pos)
                })
            })
            .collect();
        Ok(Some((l, masks)))
    }

    /// Exact step representation of member `n`.
    pub fn member_step(&self, n: usize) -> Result<StepFunction> {
        self.check_indices(&[n])?;
        if let SystemKind::CustomStep { functions } = &self.kind {
            return Ok(functions[n - 1].clone());
        }
        let bits = self.dyadic_bits(n).ok_or_else(|| LacunaError::UnsupportedKind(self.name().into()))?;
        let pieces = check_piece_count(bits)?;
        let mask = self.dyadic_mask(n, bits);
        let breakpoints = dyadic_breakpoints(bits);
        let values = (0..pieces as u64)
            .map(|j| if (j & mask).count_ones() % 2 == 0 { Rational::one() } else { -Rational::one() })
            .collect();
        StepFunction::new(breakpoints, values)
    }

    /// Exact `sup |f_n|`.
    pub fn member_sup(&self, n: usize) -> Result<QSqrt2> {
        self.check_indices(&[n])?;
        Ok(match &self.kind {
            SystemKind::Rademacher { .. } | SystemKind::Walsh { .. } => QSqrt2::one(),
            SystemKind::TrigSine { amplitude, .. } | SystemKind::TrigCosine { amplitude, .. } => amplitude.abs(),
            SystemKind::CustomStep { functions } => QSqrt2::rational(functions[n - 1].sup_abs()),
        })
    }

    /// Exact `E f_n²`.
    pub fn member_second_moment(&self, n: usize) -> Result<QSqrt2> {
        self.monomial_expectation(&[n], &ExponentPattern::new(vec![2])?)
    }

    /// Per-member `L2` norms.
    pub fn l2_norms(&self) -> Result<Vec<f64>> {
        (1..=self.len()).map(|n| Ok(self.member_second_moment(n)?.to_f64().sqrt())).collect()
    }

    /// `E[Π f_{nᵢ}^{θᵢ}]`, exact.
    pub fn monomial_expectation(&self, indices: &[usize], theta: &ExponentPattern) -> Result<QSqrt2> {
        if indices.len() != theta.len() {
            return Err(LacunaError::PatternMismatch { pattern: theta.len(), indices: indices.len() });
        }
        self.check_indices(indices)?;
        match &self.kind {
            SystemKind::Rademacher { .. } | SystemKind::Walsh { .. } => {
                // a product of characters is the character of the XOR of the
                // odd-exponent members; it has mean 1 iff that XOR is trivial
                let (_, masks) = self.dyadic_table(indices)?.unwrap();
                let mut acc = 0u64;
                for (m, &e) in masks.iter().zip(theta.entries()) {
                    if e % 2 == 1 {
                        acc ^= m;
                    }
                }
                Ok(if acc == 0 { QSqrt2::one() } else { QSqrt2::zero() })
            }
            SystemKind::TrigSine { .. } | SystemKind::TrigCosine { .. } => {
                let (freqs, amplitude, cosine) = self.trig_parts().unwrap();
                let mut expanded: Vec<u64> = Vec::new();
                for (&n, &e) in indices.iter().zip(theta.entries()) {
                    for _ in 0..e {
                        expanded.push(freqs[n - 1]);
                    }
                }
                let base = trig_unit_expectation(&expanded, cosine);
                Ok(&QSqrt2::rational(base) * &amplitude.pow(expanded.len() as u32))
            }
            SystemKind::CustomStep { .. } => Ok(QSqrt2::rational(self.monomial_expectation_by_integration(indices, theta)?)),
        }
    }

    /// Step kinds only: builds every factor's step representation, multiplies
    /// on the common refinement and integrates. Independent of the bit-mask
    /// shortcut used by [`Self::monomial_expectation`].
    pub fn monomial_expectation_by_integration(&self, indices: &[usize], theta: &ExponentPattern) -> Result<Rational> {
        self.weighted_expectation(indices, theta, &Weight::one())
    }

    /// `E[h · Π f_{nᵢ}^{θᵢ}]` for step kinds and a step or constant weight.
    pub fn weighted_expectation(&self, indices: &[usize], theta: &ExponentPattern, h: &Weight) -> Result<Rational> {
        if indices.len() != theta.len() {
            return Err(LacunaError::PatternMismatch { pattern: theta.len(), indices: indices.len() });
        }
        if !self.is_step_kind() {
            return Err(LacunaError::UnsupportedKind(self.name().into()));
        }
        self.check_indices(indices)?;
        let members: Vec<(StepFunction, u8)> = indices
            .iter()
            .zip(theta.entries())
            .filter(|(_, &e)| e > 0)
            .map(|(&n, &e)| Ok((self.member_step(n)?, e)))
            .collect::<Result<_>>()?;
        let length = self.domain_length();
        let constant;
        let weight = match h {
            Weight::Constant(c) => {
                constant = StepFunction::constant(length.clone(), c.clone())?;
                &constant
            }
            Weight::Step(f) => f,
        };
        if weight.length() != &length {
            return Err(LacunaError::InvalidInput("weight domain differs from the system domain".into()));
        }
        let mut refs: Vec<&StepFunction> = members.iter().map(|(f, _)| f).collect();
        refs.push(weight);
        let exps: Vec<u8> = members.iter().map(|(_, e)| *e).collect();
        let product = combine(&refs, |vals| {
            let mut p = vals[vals.len() - 1].clone();
            for (v, &e) in vals.iter().zip(&exps) {
                for _ in 0..e {
                    p *= *v;
                }
            }
            p
        })?;
        Ok(product.expectation())
    }

    /// Numeric value of member `n` at `x`.
    pub fn eval(&self, n: usize, x: f64) -> Result<f64> {
        self.check_indices(&[n])?;
        if let Some((freqs, amplitude, cosine)) = self.trig_parts() {
            let w = std::f64::consts::TAU * freqs[n - 1] as f64 * x;
            let a = amplitude.to_f64();
            return Ok(if cosine { a * w.cos() } else { a * w.sin() });
        }
        let q = crate::exact::rat_from_f64(x)?;
        let f = self.member_step(n)?;
        f.value_at(&q).map(rat_to_f64).ok_or_else(|| LacunaError::InvalidInput(format!("x = {x} outside the domain")))
    }

    /// Whether every pattern of the class `A_s` (entries in {0,1,2}, at least
    /// one 1, at most one 2) has zero expectation. Returns the pattern with the
    /// largest `|E|` when it does not.
    pub fn is_strongly_multiplicative(&self, indices: &[usize]) -> Result<(bool, Option<(ExponentPattern, QSqrt2)>)> {
        self.check_indices(indices)?;
        Self::check_distinct(indices)?;
        let mut worst: Option<(ExponentPattern, QSqrt2)> = None;
        for theta in ExponentPattern::class_a(indices.len(), true) {
            let e = self.monomial_expectation(indices, &theta)?;
            if !e.is_zero() {
                let abs = e.abs();
                if worst.as_ref().map_or(true, |(_, w)| abs > *w) {
                    worst = Some((theta, abs));
                }
            }
        }
        Ok((worst.is_none(), worst))
    }

    /// Whether every product of distinct members has zero expectation.
    pub fn is_multiplicative(&self, indices: &[usize]) -> Result<(bool, Option<(ExponentPattern, QSqrt2)>)> {
        self.check_indices(indices)?;
        Self::check_distinct(indices)?;
        for theta in ExponentPattern::class_a(indices.len(), false) {
            let e = self.monomial_expectation(indices, &theta)?;
            if !e.is_zero() {
                return Ok((false, Some((theta, e))));
            }
        }
        Ok((true, None))
    }
}

fn check_freqs(freqs: &[u64]) -> Result<()> {
    if freqs.is_empty() {
        return Err(LacunaError::InvalidInput("frequency list is empty".into()));
    }
    if freqs[0] == 0 || freqs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LacunaError::InvalidInput("frequencies must be strictly increasing positive integers".into()));
    }
    Ok(())
}

fn check_piece_count(bits: u32) -> Result<usize> {
    let pieces = 1u128 << bits.min(127);
    if bits > 20 || pieces as usize > PIECE_CAP {
        return Err(LacunaError::SizeExceeded { pieces, cap: PIECE_CAP });
    }
    Ok(pieces as usize)
}

fn dyadic_values(masks: &[u64], coefficients: &[f64], pieces: usize) -> Vec<f64> {
    (0..pieces as u64)
        .map(|j| {
            masks
                .iter()
                .zip(coefficients)
                .map(|(&m, &c)| if (j & m).count_ones() % 2 == 0 { c } else { -c })
                .sum()
        })
        .collect()
}

fn dyadic_breakpoints(bits: u32) -> Vec<Rational> {
    let step = pow2_neg(bits);
    (0..=(1u64 << bits)).map(|j| &step * rat_int(j as i64)).collect()
}

/// `E[Π sin(2πkⱼx)]` (or cos) over the expanded frequency list.
pub(crate) fn trig_unit_expectation(freqs: &[u64], cosine: bool) -> Rational {
    Rational::new(trig_signed_count(freqs, cosine).into(), num_bigint::BigInt::one() << freqs.len())
}

/// Numerator `N` with `E[Π sin(2πkⱼx)] = N / 2^K` (or cos): the signed number
/// of sign choices `ε` with `Σ εⱼkⱼ = 0`.
pub(crate) fn trig_signed_count(freqs: &[u64], cosine: bool) -> i64 {
    let k = freqs.len();
    if k == 0 {
        return 1;
    }
    if !cosine && k % 2 == 1 {
        return 0;
    }
    let mut sorted: Vec<i64> = freqs.iter().map(|&f| f as i64).collect();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut suffix = vec![0i64; k + 1];
    for i in (0..k).rev() {
        suffix[i] = suffix[i + 1] + sorted[i];
    }
    let signed = count_zero_sums(&sorted, &suffix, 0, 0, 1, cosine);
    // sin θ = (e^{iθ} − e^{−iθ})/(2i) contributes ε/i per factor
    if !cosine && (k / 2) % 2 == 1 {
        -signed
    } else {
        signed
    }
}

/// Σ over sign vectors with zero total of `Π εⱼ` (sine) or 1 (cosine).
fn count_zero_sums(f: &[i64], suffix: &[i64], pos: usize, partial: i64, sign: i64, cosine: bool) -> i64 {
    if pos == f.len() {
        return if partial == 0 { if cosine { 1 } else { sign } } else { 0 };
    }
    if partial.abs() > suffix[pos] {
        return 0;
    }
    count_zero_sums(f, suffix, pos + 1, partial + f[pos], sign, cosine)
        + count_zero_sums(f, suffix, pos + 1, partial - f[pos], -sign, cosine)
}

/// Exponents `θ ∈ {0, 1, 2}^s`, one per selected function.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct ExponentPattern(Vec<u8>);

impl ExponentPattern {
    pub fn new(theta: Vec<u8>) -> Result<Self> {
        if theta.iter().any(|&e| e > 2) {
            return Err(LacunaError::InvalidInput("exponents must lie in {0, 1, 2}".into()));
        }
        Ok(Self(theta))
    }

    pub fn entries(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Membership in `A_s` (`allow_square`) or in `A′_s` (entries in {0,1}),
    /// both requiring at least one entry equal to 1.
    pub fn in_class(&self, allow_square: bool) -> bool {
        let ones = self.0.iter().filter(|&&e| e == 1).count();
        let twos = self.0.iter().filter(|&&e| e == 2).count();
        ones >= 1 && twos <= usize::from(allow_square)
    }

    /// Enumerates `A_s` (or `A′_s`): first all 0/1 patterns, then the patterns
    /// with the square at position 0, 1, …; ones-masks in increasing order.
    pub fn class_a(s: usize, allow_square: bool) -> impl Iterator<Item = ExponentPattern> {
        let squares: Vec<Option<usize>> =
            std::iter::once(None).chain((0..s).map(Some).filter(move |_| allow_square)).collect();
        squares.into_iter().flat_map(move |sq| {
            (1u64..(1u64 << s)).filter_map(move |mask| {
                if let Some(p) = sq {
                    if mask >> p & 1 == 1 {
                        return None;
                    }
                }
                let theta = (0..s)
                    .map(|i| if Some(i) == sq { 2 } else { (mask >> i & 1) as u8 })
                    .collect();
                Some(ExponentPattern(theta))
            })
        })
    }

    pub fn class_size(s: usize, allow_square: bool) -> usize {
        let base = (1usize << s) - 1;
        if allow_square {
            base + s * ((1usize << s.saturating_sub(1)) - 1)
        } else {
            base
        }
    }
}

impl TryFrom<Vec<u8>> for ExponentPattern {
    type Error = LacunaError;
    fn try_from(v: Vec<u8>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ExponentPattern> for Vec<u8> {
    fn from(p: ExponentPattern) -> Self {
        p.0
    }
}

/// Weight `h` in `E[h·Π f^θ]`: a constant or a step function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weight {
    Constant(#[serde(with = "crate::exact::rational_serde")] Rational),
    Step(StepFunction),
}

impl Weight {
    pub fn one() -> Self {
        Weight::Constant(Rational::one())
    }
}

/// `Σ aᵢ f_{nᵢ}` over a system.
#[derive(Clone, Debug)]
pub struct Polynomial<'a> {
    system: &'a SystemSpec,
    indices: Vec<usize>,
    coefficients: Vec<f64>,
}

impl<'a> Polynomial<'a> {
    pub fn new(system: &'a SystemSpec, indices: Vec<usize>, coefficients: Vec<f64>) -> Result<Self> {
        if indices.len() != coefficients.len() {
            return Err(LacunaError::InvalidInput(format!(
                "{} indices but {} coefficients",
                indices.len(),
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(LacunaError::InvalidInput("non-finite coefficient".into()));
        }
        system.check_indices(&indices)?;
        Ok(Self { system, indices, coefficients })
    }

    /// `Σ aᵢ f_{nᵢ}` with `nᵢ = i` (the initial segment).
    pub fn initial(system: &'a SystemSpec, a: &CoefficientVector) -> Result<Self> {
        Self::new(system, (1..=a.len()).collect(), a.entries().to_vec())
    }

    pub fn with_indices(system: &'a SystemSpec, indices: &[usize], a: &CoefficientVector) -> Result<Self> {
        Self::new(system, indices.to_vec(), a.entries().to_vec())
    }

    pub fn system(&self) -> &SystemSpec {
        self.system
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficient_vector(&self) -> Result<CoefficientVector> {
        CoefficientVector::new(self.coefficients.clone())
    }

    fn trig_poly(&self) -> Option<TrigPoly> {
        let (freqs, amplitude, cosine) = self.system.trig_parts()?;
        let a = amplitude.to_f64();
        let fs: Vec<u64> = self.indices.iter().map(|&n| freqs[n - 1]).collect();
        let cs: Vec<f64> = self.coefficients.iter().map(|c| c * a).collect();
        Some(TrigPoly::new(&fs, &cs, cosine))
    }

    /// Piece values and weights of a step-kind polynomial (weights sum to 1).
    fn step_atoms(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        match self.system.kind() {
            SystemKind::Rademacher { .. } | SystemKind::Walsh { .. } => {
                let (levels, masks) = self.system.dyadic_table(&self.indices)?.unwrap();
                let pieces = check_piece_count(levels)?;
                Ok((dyadic_values(&masks, &self.coefficients, pieces), vec![1.0 / pieces as f64; pieces]))
            }
            SystemKind::CustomStep { .. } => {
                let f = self.polynomial_step()?;
                let length = rat_to_f64(f.length());
                let weights = f.piece_lengths().map(|l| rat_to_f64(&l) / length).collect();
                Ok((f.values().to_vec(), weights))
            }
            _ => Err(LacunaError::UnsupportedKind(self.system.name().into())),
        }
    }

    /// Exact piecewise-constant representation (step kinds only).
    pub fn polynomial_step(&self) -> Result<StepFunction<f64>> {
        match self.system.kind() {
            SystemKind::Rademacher { .. } | SystemKind::Walsh { .. } => {
                let bits =
                    self.indices.iter().map(|&n| self.system.dyadic_bits(n).unwrap()).max().unwrap_or(0);
                let pieces = check_piece_count(bits)?;
                let masks: Vec<u64> = self.indices.iter().map(|&n| self.system.dyadic_mask(n, bits)).collect();
                let values = dyadic_values(&masks, &self.coefficients, pieces);
                Ok(StepFunction::from_parts_unchecked(dyadic_breakpoints(bits), values))
            }
            SystemKind::CustomStep { functions } => {
                if self.indices.is_empty() {
                    return StepFunction::constant(functions[0].length().clone(), 0.0);
                }
                let refs: Vec<&StepFunction> = self.indices.iter().map(|&n| &functions[n - 1]).collect();
                let (breaks, _) = common_refinement(&refs)?;
                if breaks.len() - 1 > PIECE_CAP {
                    return Err(LacunaError::SizeExceeded { pieces: (breaks.len() - 1) as u128, cap: PIECE_CAP });
                }
                let coeffs = &self.coefficients;
                combine(&refs, |vals| vals.iter().zip(coeffs).map(|(v, c)| rat_to_f64(v) * c).sum())
            }
            _ => Err(LacunaError::UnsupportedKind(self.system.name().into())),
        }
    }

    /// Distribution of `|P|`: exact for step kinds, panel-enclosed for trig.
    pub fn law(&self) -> Result<Law> {
        if let Some(p) = self.trig_poly() {
            return Ok(Law::Enclosed(p.panel_law(p.default_law_panels())));
        }
        let (values, weights) = self.step_atoms()?;
        Ok(Law::Exact(DiscreteLaw::from_atoms(values.into_iter().zip(weights))))
    }

    /// `(E|P|^t)^{1/t}`.
    pub fn lt_norm(&self, t: f64) -> Result<f64> {
        if !(t >= 1.0) {
            return Err(LacunaError::InvalidInput(format!("t must be at least 1, got {t}")));
        }
        if let Some(p) = self.trig_poly() {
            return Ok(p.lt_norm(t, TRIG_NORM_TOL));
        }
        let (values, weights) = self.step_atoms()?;
        Ok(DiscreteLaw::from_atoms(values.into_iter().zip(weights)).lt_norm(t))
    }

    /// `P{|P| > z}`: exact for step kinds, an enclosure of width ≤ 1e-6 for trig.
    pub fn tail_probability(&self, z: f64) -> Result<Bracket> {
        if !(z >= 0.0) {
            return Err(LacunaError::InvalidInput(format!("z must be nonnegative, got {z}")));
        }
        if let Some(p) = self.trig_poly() {
            if self.coefficients.iter().all(|c| *c == 0.0) {
                return Ok(Bracket::exact(0.0));
            }
            return Ok(p.tail(z, TRIG_TAIL_TOL));
        }
        let (values, weights) = self.step_atoms()?;
        Ok(Bracket::exact(DiscreteLaw::from_atoms(values.into_iter().zip(weights)).tail(z)))
    }

    /// `‖P‖_∞`: exact for step kinds, enclosed for trig.
    pub fn sup_norm(&self) -> Result<Bracket> {
        if let Some(p) = self.trig_poly() {
            return Ok(p.sup_norm(1e-9));
        }
        let (values, _) = self.step_atoms()?;
        Ok(Bracket::exact(values.iter().fold(0.0, |m, v| m.max(v.abs()))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn pat(v: &[u8]) -> ExponentPattern {
        ExponentPattern::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rademacher_pieces() {
        let sys = SystemSpec::rademacher(3);
        let r1 = sys.member_step(1).unwrap();
        assert_eq!(r1.values(), &[rat_int(1), rat_int(-1)]);
        let r2 = sys.member_step(2).unwrap();
        assert_eq!(r2.values(), &[rat_int(1), rat_int(-1), rat_int(1), rat_int(-1)]);
        let p = Polynomial::new(&sys, vec![1, 2], vec![1.0, 1.0]).unwrap();
        assert_eq!(p.polynomial_step().unwrap().values(), &[2.0, 0.0, 0.0, -2.0]);
    }

    #[test]
    fn rademacher_matches_sign_sine() {
        let sys = SystemSpec::rademacher(4);
        for n in 1..=4 {
            for j in 0..64 {
                let x = (j as f64 + 0.5) / 64.0;
                let expected = (std::f64::consts::PI * (1u64 << n) as f64 * x).sin().signum();
                assert_eq!(sys.eval(n, x).unwrap(), expected);
            }
        }
    }

    #[test]
    fn walsh_is_product_of_rademachers() {
        let w = SystemSpec::walsh(16);
        let r = SystemSpec::rademacher(4);
        // w_11 = r_1 r_2 r_4 (bits 0, 1, 3)
        let lhs = w.member_step(11).unwrap();
        let f = [r.member_step(1).unwrap(), r.member_step(2).unwrap(), r.member_step(4).unwrap()];
        let rhs = combine(&f.iter().collect::<Vec<_>>(), |v| v[0] * v[1] * v[2]).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn expectation_examples() {
        let rad = SystemSpec::rademacher(3);
        assert!(rad.monomial_expectation(&[1, 2, 3], &pat(&[1, 1, 1])).unwrap().is_zero());
        let cos = SystemSpec::trig_cosine(vec![1, 2, 3], false).unwrap();
        assert_eq!(cos.monomial_expectation(&[1, 2, 3], &pat(&[1, 1, 1])).unwrap(), QSqrt2::rational(rat(1, 4)));
        let walsh = SystemSpec::walsh(8);
        assert!(walsh.monomial_expectation(&[1, 2, 4], &pat(&[1, 2, 1])).unwrap().is_zero());
        // dependent Walsh triple: w1 w2 w3 = 1
        assert!(walsh.monomial_expectation(&[1, 2, 3], &pat(&[1, 1, 1])).unwrap() == QSqrt2::one());
        assert!(matches!(
            rad.monomial_expectation(&[1, 2], &pat(&[1])),
            Err(LacunaError::PatternMismatch { .. })
        ));
    }

    #[test]
    fn normalized_sine_moments() {
        let sys = SystemSpec::trig_sine(vec![1, 3], true).unwrap();
        assert_eq!(sys.member_second_moment(1).unwrap(), QSqrt2::one());
        // E (√2 sin)^4 = 4 · 3/8
        let four = sys.monomial_expectation(&[1, 1], &pat(&[2, 2])).unwrap();
        assert_eq!(four, QSqrt2::rational(rat(3, 2)));
        // odd powers of the amplitude survive as √2 factors
        let cos = SystemSpec::trig_cosine(vec![1, 2, 3], true).unwrap();
        let e = cos.monomial_expectation(&[1, 2, 3], &pat(&[1, 1, 1])).unwrap();
        assert_eq!(e, QSqrt2::new(rat_int(0), rat(1, 2)));
    }

    #[test]
    fn strong_multiplicativity() {
        let sine = SystemSpec::trig_sine(vec![1, 3, 9], false).unwrap();
        assert!(sine.is_strongly_multiplicative(&[1, 2, 3]).unwrap().0);
        let rad = SystemSpec::rademacher(5);
        assert!(rad.is_strongly_multiplicative(&[1, 3, 5]).unwrap().0);
        let close = SystemSpec::trig_sine(vec![1, 2, 3], false).unwrap();
        let (ok, worst) = close.is_strongly_multiplicative(&[1, 2, 3]).unwrap();
        assert!(!ok);
        assert!(!worst.unwrap().1.is_zero());
    }

    #[test]
    fn pattern_classes() {
        assert_eq!(ExponentPattern::class_a(3, false).count(), 7);
        assert_eq!(ExponentPattern::class_a(3, true).count(), ExponentPattern::class_size(3, true));
        assert!(ExponentPattern::class_a(4, true).all(|p| p.in_class(true)));
        assert!(ExponentPattern::new(vec![3]).is_err());
        assert!(!pat(&[2, 0]).in_class(true));
        assert!(!pat(&[1, 2, 2]).in_class(true));
    }

    #[test]
    fn bit_shortcut_matches_integration() {
        for sys in [SystemSpec::rademacher(5), SystemSpec::walsh(20)] {
            let idx = [1usize, 3, 4];
            for theta in ExponentPattern::class_a(3, true) {
                let fast = sys.monomial_expectation(&idx, &theta).unwrap();
                let slow = sys.monomial_expectation_by_integration(&idx, &theta).unwrap();
                assert_eq!(fast, QSqrt2::rational(slow));
            }
        }
    }

    #[test]
    fn norms_and_tails() {
        let sys = SystemSpec::rademacher(4);
        let p = Polynomial::new(&sys, vec![1, 2], vec![1.0, 1.0]).unwrap();
        assert!((p.lt_norm(4.0).unwrap() - 8f64.powf(0.25)).abs() < 1e-15);
        assert_eq!(p.tail_probability(1.0).unwrap(), Bracket::exact(0.5));
        assert_eq!(p.tail_probability(2.0).unwrap(), Bracket::exact(0.0));
        assert_eq!(p.tail_probability(0.0).unwrap(), Bracket::exact(0.5));
        let q = Polynomial::new(&sys, vec![1, 2, 3], vec![0.3, -1.0, 2.0]).unwrap();
        assert!((q.lt_norm(2.0).unwrap() - (0.09f64 + 1.0 + 4.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn zero_and_constant_polynomials() {
        let sys = SystemSpec::rademacher(2);
        let p = Polynomial::new(&sys, vec![], vec![]).unwrap();
        assert_eq!(p.polynomial_step().unwrap().values(), &[0.0]);
        let one = StepFunction::constant(rat_int(1), rat(3, 2)).unwrap();
        let custom = SystemSpec::custom(vec![one]).unwrap();
        let c = Polynomial::new(&custom, vec![1], vec![2.0]).unwrap();
        assert_eq!(c.lt_norm(3.7).unwrap(), 3.0);
        assert_eq!(c.tail_probability(2.9).unwrap(), Bracket::exact(1.0));
    }

    #[test]
    fn trig_rejects_step_only_ops() {
        let sys = SystemSpec::trig_sine(vec![1, 2], false).unwrap();
        let p = Polynomial::new(&sys, vec![1, 2], vec![1.0, 1.0]).unwrap();
        assert!(matches!(p.polynomial_step(), Err(LacunaError::UnsupportedKind(_))));
    }

    #[test]
    fn bound_validation() {
        let sys = SystemSpec::trig_sine(vec![1], true).unwrap();
        assert!(matches!(sys.clone().with_bound(QSqrt2::one()), Err(LacunaError::BoundViolated { index: 1 })));
        assert!(sys.with_bound(QSqrt2::rational(rat_int(2))).is_ok());
        assert!(SystemSpec::trig_sine(vec![2, 1], false).is_err());
    }
}
