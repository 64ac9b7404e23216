//! Piecewise-constant functions on `[0, L)` with exact rational breakpoints.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{LacunaError, Result};
use crate::exact::{format_rational, rat_to_f64, rational_vec_serde, Rational};

/// A step function `Σ vₖ·χ_[xₖ, xₖ₊₁)` on `[0, L)`; the last piece is closed
/// at `L` so that `x = L` evaluates to the final value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepFunction<V = Rational> {
    breakpoints: Vec<Rational>,
    values: Vec<V>,
}

impl<V> StepFunction<V> {
    pub fn new(breakpoints: Vec<Rational>, values: Vec<V>) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints.len() != values.len() + 1 {
            return Err(LacunaError::InvalidInput(format!(
                "step function needs pieces + 1 breakpoints (got {} breakpoints, {} values)",
                breakpoints.len(),
                values.len()
            )));
        }
        if !breakpoints[0].is_zero() {
            return Err(LacunaError::InvalidInput("first breakpoint must be 0".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LacunaError::InvalidInput("breakpoints must be strictly increasing".into()));
        }
        Ok(Self { breakpoints, values })
    }

    /// Constructor for callers that maintain the invariants themselves.
    pub(crate) fn from_parts_unchecked(breakpoints: Vec<Rational>, values: Vec<V>) -> Self {
        debug_assert_eq!(breakpoints.len(), values.len() + 1);
        Self { breakpoints, values }
    }

    pub fn constant(length: Rational, value: V) -> Result<Self> {
        Self::new(vec![Rational::zero(), length], vec![value])
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn piece_count(&self) -> usize {
        self.values.len()
    }

    pub fn length(&self) -> &Rational {
        self.breakpoints.last().expect("nonempty breakpoints")
    }

    pub fn piece_lengths(&self) -> impl Iterator<Item = Rational> + '_ {
        self.breakpoints.windows(2).map(|w| &w[1] - &w[0])
    }

    /// Value at `x ∈ [0, L]`.
    pub fn value_at(&self, x: &Rational) -> Option<&V> {
        if x.is_negative() || x > self.length() {
            return None;
        }
        let k = match self.breakpoints.binary_search(x) {
            Ok(i) => i.min(self.values.len() - 1),
            Err(i) => i - 1,
        };
        self.values.get(k)
    }

    pub fn map<W>(&self, f: impl Fn(&V) -> W) -> StepFunction<W> {
        StepFunction { breakpoints: self.breakpoints.clone(), values: self.values.iter().map(f).collect() }
    }

    /// `x ↦ self(x·factor)` on `[0, L/factor)`.
    pub fn rescale_domain(&self, factor: &Rational) -> Result<Self>
    where
        V: Clone,
    {
        if !factor.is_positive() {
            return Err(LacunaError::InvalidInput("rescale factor must be positive".into()));
        }
        Ok(Self { breakpoints: self.breakpoints.iter().map(|b| b / factor).collect(), values: self.values.clone() })
    }

    /// Restriction to `[0, end)`, which must be a breakpoint.
    pub fn restrict_prefix(&self, end: &Rational) -> Result<Self>
    where
        V: Clone,
    {
        let k = self
            .breakpoints
            .binary_search(end)
            .map_err(|_| LacunaError::InvalidInput(format!("{} is not a breakpoint", format_rational(end))))?;
        if k == 0 {
            return Err(LacunaError::InvalidInput("empty restriction".into()));
        }
        Ok(Self { breakpoints: self.breakpoints[..=k].to_vec(), values: self.values[..k].to_vec() })
    }
}

/// Common refinement of several step functions on the same domain: returns
/// the merged breakpoints and, per merged piece, the piece index in each input.
pub fn common_refinement<V>(fs: &[&StepFunction<V>]) -> Result<(Vec<Rational>, Vec<Vec<usize>>)> {
    let Some(first) = fs.first() else {
        return Err(LacunaError::InvalidInput("no functions to refine".into()));
    };
    let length = first.length();
    if fs.iter().any(|f| f.length() != length) {
        return Err(LacunaError::InvalidInput("step functions have different domains".into()));
    }
    if fs.iter().all(|f| f.breakpoints == first.breakpoints) {
        let idx = (0..first.piece_count()).map(|k| vec![k; fs.len()]).collect();
        return Ok((first.breakpoints.clone(), idx));
    }
    let mut cursor = vec![0usize; fs.len()];
    let mut breaks = vec![Rational::zero()];
    let mut pieces = Vec::new();
    loop {
        pieces.push(cursor.clone());
        // next breakpoint is the smallest right end among current pieces
        let next = fs
            .iter()
            .zip(&cursor)
            .map(|(f, &c)| &f.breakpoints[c + 1])
            .min()
            .expect("nonempty")
            .clone();
        for (f, c) in fs.iter().zip(cursor.iter_mut()) {
            if f.breakpoints[*c + 1] == next {
                *c += 1;
            }
        }
        let done = &next == length;
        breaks.push(next);
        if done {
            break;
        }
    }
    Ok((breaks, pieces))
}

/// Pointwise combination of several step functions.
pub fn combine<V, W>(fs: &[&StepFunction<V>], f: impl Fn(&[&V]) -> W) -> Result<StepFunction<W>> {
    let (breaks, idx) = common_refinement(fs)?;
    let mut scratch: Vec<&V> = Vec::with_capacity(fs.len());
    let values = idx
        .iter()
        .map(|piece| {
            scratch.clear();
            scratch.extend(fs.iter().zip(piece).map(|(g, &k)| &g.values[k]));
            f(&scratch)
        })
        .collect();
    Ok(StepFunction { breakpoints: breaks, values })
}

impl StepFunction<Rational> {
    pub fn integral(&self) -> Rational {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .filter(|(_, v)| !v.is_zero())
            .map(|(w, v)| (&w[1] - &w[0]) * v)
            .sum()
    }

    /// Mean with respect to the normalized measure `dx / L`.
    pub fn expectation(&self) -> Rational {
        self.integral() / self.length()
    }

    pub fn sup_abs(&self) -> Rational {
        self.values.iter().map(|v| v.abs()).max().unwrap_or_else(Rational::zero)
    }

    pub fn to_f64(&self) -> StepFunction<f64> {
        self.map(rat_to_f64)
    }

    /// Concatenation: `self` on `[0, L)` followed by `other` shifted by `L`.
    pub fn concat(&self, other: &Self) -> Self {
        let shift = self.length().clone();
        let mut breakpoints = self.breakpoints.clone();
        breakpoints.extend(other.breakpoints[1..].iter().map(|b| b + &shift));
        let mut values = self.values.clone();
        values.extend(other.values.iter().cloned());
        Self { breakpoints, values }
    }
}

impl StepFunction<f64> {
    pub fn integral(&self) -> f64 {
        self.piece_lengths().zip(&self.values).map(|(len, v)| rat_to_f64(&len) * v).sum()
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Wire form: `{"breakpoints": ["0", "1/2", "1"], "values": ["1", "-1"]}`.
#[derive(Serialize, Deserialize)]
struct StepWire {
    #[serde(with = "rational_vec_serde")]
    breakpoints: Vec<Rational>,
    #[serde(with = "rational_vec_serde")]
    values: Vec<Rational>,
}

impl Serialize for StepFunction<Rational> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StepWire { breakpoints: self.breakpoints.clone(), values: self.values.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for StepFunction<Rational> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = StepWire::deserialize(d)?;
        StepFunction::new(w.breakpoints, w.values).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize)]
struct StepWireF64<'a> {
    #[serde(with = "rational_vec_serde")]
    breakpoints: Vec<Rational>,
    values: &'a [f64],
}

impl Serialize for StepFunction<f64> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StepWireF64 { breakpoints: self.breakpoints.clone(), values: &self.values }.serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, rat_int};

    fn sf(b: &[(i64, i64)], v: &[i64]) -> StepFunction {
        StepFunction::new(b.iter().map(|&(p, q)| rat(p, q)).collect(), v.iter().map(|&x| rat_int(x)).collect())
            .unwrap()
    }

    #[test]
    fn validation() {
        assert!(StepFunction::new(vec![rat(0, 1), rat(1, 1)], vec![rat_int(1), rat_int(2)]).is_err());
        assert!(StepFunction::new(vec![rat(1, 2), rat(1, 1)], vec![rat_int(1)]).is_err());
        assert!(StepFunction::new(vec![rat(0, 1), rat(1, 2), rat(1, 2), rat(1, 1)], vec![rat_int(1); 3]).is_err());
    }

    #[test]
    fn integral_and_expectation() {
        let f = sf(&[(0, 1), (1, 3), (2, 1)], &[3, -1]);
        assert_eq!(f.integral(), rat(1, 1) - rat(5, 3));
        assert_eq!(f.expectation(), (rat(1, 1) - rat(5, 3)) / rat_int(2));
        assert_eq!(f.sup_abs(), rat_int(3));
    }

    #[test]
    fn refinement_products() {
        let f = sf(&[(0, 1), (1, 2), (1, 1)], &[1, -1]);
        let g = sf(&[(0, 1), (1, 4), (3, 4), (1, 1)], &[1, -1, 1]);
        let p = combine(&[&f, &g], |v| v[0] * v[1]).unwrap();
        assert_eq!(p.piece_count(), 4);
        assert_eq!(p.integral(), rat(1, 4) - rat(1, 4) + rat(1, 4) - rat(1, 4));
        assert_eq!(p.value_at(&rat(1, 1)), Some(&rat_int(-1)));
        assert_eq!(p.value_at(&rat(1, 2)), Some(&rat_int(1)));
    }

    #[test]
    fn concat_restrict_rescale() {
        let f = sf(&[(0, 1), (1, 2), (1, 1)], &[1, -1]);
        let g = sf(&[(0, 1), (1, 1)], &[0]);
        let h = f.concat(&g);
        assert_eq!(h.length(), &rat_int(2));
        assert_eq!(h.restrict_prefix(&rat_int(1)).unwrap(), f);
        let r = h.rescale_domain(&rat_int(2)).unwrap();
        assert_eq!(r.length(), &rat_int(1));
        assert_eq!(r.breakpoints()[1], rat(1, 4));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let f = sf(&[(0, 1), (1, 3), (1, 1)], &[7, -2]);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"breakpoints":["0","1/3","1"],"values":["7","-2"]}"#);
        let back: StepFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        let from_numbers: StepFunction = serde_json::from_str(r#"{"breakpoints":["0","1"],"values":[0.5]}"#).unwrap();
        assert_eq!(from_numbers.values()[0], rat(1, 2));
    }
}
