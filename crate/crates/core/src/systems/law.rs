//! Distribution functions of polynomials.

use serde::Serialize;

/// A rigorous enclosure `lo ≤ x ≤ hi`. Exact results have `lo == hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn exact(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }
}

/// Finitely many atoms `(|value|, weight)`, grouped by value and sorted by
/// decreasing magnitude.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteLaw {
    magnitudes: Vec<f64>,
    weights: Vec<f64>,
    /// `cumulative[k]` = total weight of the `k` largest magnitudes
    cumulative: Vec<f64>,
}

impl DiscreteLaw {
    pub fn from_atoms(values: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut atoms: Vec<(f64, f64)> =
            values.into_iter().filter(|(_, w)| *w > 0.0).map(|(v, w)| (v.abs(), w)).collect();
        atoms.sort_by(|x, y| y.0.total_cmp(&x.0));
        let mut magnitudes: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (v, w) in atoms {
            match magnitudes.last() {
                Some(&last) if last == v => *weights.last_mut().unwrap() += w,
                _ => {
                    magnitudes.push(v);
                    weights.push(w);
                }
            }
        }
        let mut cumulative = Vec::with_capacity(weights.len() + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        Self { magnitudes, weights, cumulative }
    }

    /// `P{|X| > z}`.
    pub fn tail(&self, z: f64) -> f64 {
        let k = self.magnitudes.partition_point(|&v| v > z);
        self.cumulative[k]
    }

    pub fn total_mass(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn sup(&self) -> f64 {
        self.magnitudes.first().copied().unwrap_or(0.0)
    }

    /// `(E|X|^t)^{1/t}`, scaled by the sup to avoid overflow at large `t`.
    pub fn lt_norm(&self, t: f64) -> f64 {
        let m = self.sup();
        if m == 0.0 {
            return 0.0;
        }
        let mass = self.total_mass();
        let s: f64 = self.magnitudes.iter().zip(&self.weights).rev().map(|(v, w)| (v / m).powf(t) * w).sum();
        m * (s / mass).powf(1.0 / t)
    }

    /// Distinct magnitudes, largest first.
    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Panel enclosure of a continuous function's modulus: on panel `k` of
/// weight `wₖ`, `|P| ∈ [lowₖ, highₖ]`.
#[derive(Clone, Debug)]
pub struct PanelLaw {
    low_sorted: Vec<f64>,
    low_cum: Vec<f64>,
    high_sorted: Vec<f64>,
    high_cum: Vec<f64>,
    sup: Bracket,
}

impl PanelLaw {
    pub fn new(panels: &[(f64, f64)], weight: f64, sampled_max: f64) -> Self {
        let mut low: Vec<f64> = panels.iter().map(|p| p.0).collect();
        let mut high: Vec<f64> = panels.iter().map(|p| p.1).collect();
        low.sort_by(|x, y| y.total_cmp(x));
        high.sort_by(|x, y| y.total_cmp(x));
        let cum = |n: usize| (0..=n).map(|k| k as f64 * weight).collect::<Vec<_>>();
        let sup_hi = high.first().copied().unwrap_or(0.0);
        Self {
            low_cum: cum(low.len()),
            high_cum: cum(high.len()),
            low_sorted: low,
            high_sorted: high,
            sup: Bracket { lo: sampled_max, hi: sup_hi.max(sampled_max) },
        }
    }

    pub fn tail(&self, z: f64) -> Bracket {
        let lo = self.low_cum[self.low_sorted.partition_point(|&v| v > z)];
        let hi = self.high_cum[self.high_sorted.partition_point(|&v| v > z)];
        Bracket { lo: lo.min(1.0), hi: hi.min(1.0) }
    }

    pub fn sup(&self) -> Bracket {
        self.sup
    }
}

/// Distribution of a polynomial: exact for step systems, enclosed for trig.
#[derive(Clone, Debug)]
pub enum Law {
    Exact(DiscreteLaw),
    Enclosed(PanelLaw),
}

impl Law {
    pub fn tail(&self, z: f64) -> Bracket {
        match self {
            Law::Exact(d) => Bracket::exact(d.tail(z)),
            Law::Enclosed(p) => p.tail(z),
        }
    }

    pub fn sup(&self) -> Bracket {
        match self {
            Law::Exact(d) => Bracket::exact(d.sup()),
            Law::Enclosed(p) => p.sup(),
        }
    }

    pub fn as_exact(&self) -> Option<&DiscreteLaw> {
        match self {
            Law::Exact(d) => Some(d),
            Law::Enclosed(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_and_tails() {
        let law = DiscreteLaw::from_atoms([(2.0, 0.25), (0.0, 0.5), (-2.0, 0.25)]);
        assert_eq!(law.magnitudes(), &[2.0, 0.0]);
        assert_eq!(law.tail(1.0), 0.5);
        assert_eq!(law.tail(2.0), 0.0);
        assert_eq!(law.tail(0.0), 0.5);
        assert_eq!(law.sup(), 2.0);
        assert!((law.lt_norm(4.0) - 8f64.powf(0.25)).abs() < 1e-15);
    }

    #[test]
    fn panel_tail_brackets() {
        let law = PanelLaw::new(&[(0.0, 1.0), (2.0, 3.0)], 0.5, 2.9);
        let b = law.tail(1.5);
        assert_eq!((b.lo, b.hi), (0.5, 0.5));
        let b = law.tail(0.5);
        assert_eq!((b.lo, b.hi), (0.5, 1.0));
        assert_eq!(law.sup(), Bracket { lo: 2.9, hi: 3.0 });
    }
}
