//! Numerics for trigonometric polynomials `P(x) = Σ cᵢ·sin(2πkᵢx)` (or cos)
//! on `[0, 1]`.
//!
//! Every enclosure uses the Taylor bound on a panel of half-width `h` around
//! `c`: `|P(x) − P(c)| ≤ |P′(c)|·h + M₂h²/2` with `M₂ = Σ|cᵢ|(2πkᵢ)²`.

use std::f64::consts::TAU;

use super::law::{Bracket, PanelLaw};

#[derive(Clone, Debug)]
pub struct TrigPoly {
    omegas: Vec<f64>,
    coeffs: Vec<f64>,
    cosine: bool,
    m2: f64,
    max_freq: u64,
}

impl TrigPoly {
    pub fn new(freqs: &[u64], coeffs: &[f64], cosine: bool) -> Self {
        let omegas: Vec<f64> = freqs.iter().map(|&k| TAU * k as f64).collect();
        let m2 = omegas.iter().zip(coeffs).map(|(w, c)| c.abs() * w * w).sum();
        Self {
            omegas,
            coeffs: coeffs.to_vec(),
            cosine,
            m2,
            max_freq: freqs.iter().copied().max().unwrap_or(0),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.omegas
            .iter()
            .zip(&self.coeffs)
            .map(|(w, c)| if self.cosine { c * (w * x).cos() } else { c * (w * x).sin() })
            .sum()
    }

    fn value_and_slope(&self, x: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        for (w, c) in self.omegas.iter().zip(&self.coeffs) {
            let (s, co) = (w * x).sin_cos();
            if self.cosine {
                v += c * co;
                d -= c * w * s;
            } else {
                v += c * s;
                d += c * w * co;
            }
        }
        (v, d)
    }

    /// Enclosure of `P` on `[c − h, c + h]`.
    fn range(&self, c: f64, h: f64) -> (f64, f64, f64) {
        let (v, d) = self.value_and_slope(c);
        let r = d.abs() * h + 0.5 * self.m2 * h * h;
        // widen by a few ulps of the evaluation error
        let slack = 1e-14 * (1.0 + self.coeffs.iter().map(|c| c.abs()).sum::<f64>());
        (v - r - slack, v + r + slack, v)
    }

    /// Enclosure of `|P|` on the panel, plus `|P(c)|`.
    fn abs_range(&self, c: f64, h: f64) -> (f64, f64, f64) {
        let (lo, hi, v) = self.range(c, h);
        let max = lo.abs().max(hi.abs());
        let min = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { lo.abs().min(hi.abs()) };
        (min, max, v.abs())
    }

    fn base_panels(&self) -> usize {
        (16 * self.max_freq.max(4)) as usize
    }

    /// `(∫₀¹ |P|^t)^{1/t}` to relative tolerance `rel_tol`.
    pub fn lt_norm(&self, t: f64, rel_tol: f64) -> f64 {
        if self.coeffs.iter().all(|c| *c == 0.0) {
            return 0.0;
        }
        let even_int = t.fract() == 0.0 && (t as u64) % 2 == 0 && t <= 64.0;
        if even_int {
            // P^t is a trigonometric polynomial of degree t·kmax, so the
            // equispaced rule with more nodes than that degree is exact
            let n = (t as u64 * self.max_freq + 1) as usize;
            let s: f64 = (0..n).map(|j| self.value(j as f64 / n as f64).powf(t)).sum::<f64>() / n as f64;
            return s.powf(1.0 / t);
        }
        let f = |x: f64| self.value(x).abs().powf(t);
        integrate_unit(&f, self.base_panels(), rel_tol).powf(1.0 / t)
    }

    /// Enclosure of `‖P‖_∞` with relative width at most `rel_tol` when
    /// attainable within the refinement budget.
    pub fn sup_norm(&self, rel_tol: f64) -> Bracket {
        let panels = self.base_panels();
        let h0 = 0.5 / panels as f64;
        let mut live: Vec<(f64, f64)> = (0..panels).map(|p| ((2 * p + 1) as f64 * h0, h0)).collect();
        let mut best = 0.0f64;
        for _ in 0..60 {
            let mut upper = best;
            let mut next = Vec::new();
            let ranges: Vec<_> = live.iter().map(|&(c, h)| (c, h, self.abs_range(c, h))).collect();
            for &(_, _, (_, _, at)) in &ranges {
                best = best.max(at);
            }
            for (c, h, (_, max, _)) in ranges {
                if max > best * (1.0 + rel_tol) {
                    upper = upper.max(max);
                    next.push((c - 0.5 * h, 0.5 * h));
                    next.push((c + 0.5 * h, 0.5 * h));
                }
            }
            if next.is_empty() {
                return Bracket { lo: best, hi: best * (1.0 + rel_tol) };
            }
            if upper <= best * (1.0 + rel_tol) {
                return Bracket { lo: best, hi: upper.max(best) };
            }
            live = next;
            if live.len() > 4_000_000 {
                return Bracket { lo: best, hi: upper };
            }
        }
        let hi = live.iter().map(|&(c, h)| self.abs_range(c, h).1).fold(best, f64::max);
        Bracket { lo: best, hi }
    }

    /// Enclosure of `|{x : |P(x)| > z}|` with width at most `abs_tol` when
    /// attainable within the refinement budget.
    pub fn tail(&self, z: f64, abs_tol: f64) -> Bracket {
        let panels = self.base_panels();
        let h0 = 0.5 / panels as f64;
        let mut undecided: Vec<(f64, f64)> = (0..panels).map(|p| ((2 * p + 1) as f64 * h0, h0)).collect();
        let mut inside = 0.0;
        for _ in 0..64 {
            let mut next = Vec::new();
            for &(c, h) in &undecided {
                let (min, max, _) = self.abs_range(c, h);
                if min > z {
                    inside += 2.0 * h;
                } else if max > z {
                    next.push((c, h));
                }
            }
            let open: f64 = next.iter().map(|p| 2.0 * p.1).sum();
            if open <= abs_tol || next.len() > 2_000_000 {
                return Bracket { lo: inside.min(1.0), hi: (inside + open).min(1.0) };
            }
            undecided = next
                .into_iter()
                .flat_map(|(c, h)| [(c - 0.5 * h, 0.5 * h), (c + 0.5 * h, 0.5 * h)])
                .collect();
        }
        let open: f64 = undecided.iter().map(|p| 2.0 * p.1).sum();
        Bracket { lo: inside.min(1.0), hi: (inside + open).min(1.0) }
    }

    /// Uniform panel enclosure of the whole distribution of `|P|`.
    pub fn panel_law(&self, panels: usize) -> PanelLaw {
        let h = 0.5 / panels as f64;
        let mut sampled = 0.0f64;
        let ranges: Vec<(f64, f64)> = (0..panels)
            .map(|p| {
                let (lo, hi, at) = self.abs_range((2 * p + 1) as f64 * h, h);
                sampled = sampled.max(at);
                (lo, hi)
            })
            .collect();
        PanelLaw::new(&ranges, 1.0 / panels as f64, sampled)
    }

    pub fn default_law_panels(&self) -> usize {
        (4096 * self.max_freq.max(1)).next_power_of_two().min(1 << 22) as usize
    }
}

/// `∫₀¹ f` for a smooth nonnegative `f` by panelwise adaptive Simpson, to
/// relative tolerance `rel_tol` of a coarse first estimate.
pub(crate) fn integrate_unit(f: &impl Fn(f64) -> f64, panels: usize, rel_tol: f64) -> f64 {
    let h = 1.0 / panels as f64;
    let fine = 4 * panels;
    let rough: f64 = (0..fine).map(|j| f(j as f64 / fine as f64)).sum::<f64>() / fine as f64;
    let tol = (rel_tol * rough).max(1e-300);
    let mut total = 0.0;
    for p in 0..panels {
        let a = p as f64 * h;
        let b = a + h;
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        total += adaptive_simpson(f, a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol * h, 40);
    }
    total
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Adaptive Simpson with Richardson correction `(S₂ − S₁)/15`.
#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_norm_of_sine_sum() {
        let p = TrigPoly::new(&[1, 3, 9], &[1.0, -2.0, 0.5], false);
        let expected = ((1.0 + 4.0 + 0.25) / 2.0f64).sqrt();
        assert!((p.lt_norm(2.0, 1e-10) - expected).abs() < 1e-12);
        // non-even exponent goes through adaptive quadrature; compare at t=2 path
        let q = p.lt_norm(2.000_000_000_000_1, 1e-10);
        assert!((q - expected).abs() < 1e-8);
    }

    #[test]
    fn l1_norm_single_sine() {
        let p = TrigPoly::new(&[5], &[1.0], false);
        assert!((p.lt_norm(1.0, 1e-10) - 2.0 / std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn sup_and_tail_single_sine() {
        let p = TrigPoly::new(&[3], &[2.0], false);
        let s = p.sup_norm(1e-9);
        assert!(s.lo <= 2.0 + 1e-12 && s.hi >= 2.0 - 1e-12 && s.width() < 1e-8);
        // |{|2 sin| > 1}| = |{|sin| > 1/2}| = 2/3
        let b = p.tail(1.0, 1e-6);
        assert!(b.lo <= 2.0 / 3.0 && b.hi >= 2.0 / 3.0 && b.width() <= 1e-6);
        assert_eq!(p.tail(2.5, 1e-6).hi, 0.0);
    }

    #[test]
    fn panel_law_encloses_tail() {
        let p = TrigPoly::new(&[1, 3], &[1.0, 1.0], true);
        let law = p.panel_law(1 << 14);
        for z in [0.1, 0.5, 1.0, 1.5, 1.9] {
            let fine = p.tail(z, 1e-7);
            let coarse = law.tail(z);
            assert!(coarse.lo <= fine.hi + 1e-12 && coarse.hi >= fine.lo - 1e-12);
        }
    }
}
