//! Two-sided tail envelopes driven by moment growth.
//!
//! If a system's polynomials satisfy `β⁻¹κ(t,a) ≤ ‖P‖_t ≤ βκ(t,a)` for all
//! `t ≥ 1`, the tail `P{|P| > z}` is squeezed between
//! `C₁⁻¹·exp(−F(C₃z))` and `exp(1 − F(z/C₄))`, where `F` and `G` invert
//! `κ(·, a)` from above and below.

use serde::Serialize;

use crate::error::{LacunaError, Result};
use crate::kfunctional::{kappa, CoefficientVector};
use crate::systems::Polynomial;

const BISECTION_REL_TOL: f64 = 1e-9;

/// `(1 − 2^{−t})²·‖P‖_t^{2t}/‖P‖_{2t}^{2t}`, a lower bound for
/// `P{|P|^t ≥ 2^{−t}‖P‖_t^t}`.
pub fn paley_zygmund_lower(poly: &Polynomial, t: f64) -> Result<f64> {
    if !(t >= 1.0) {
        return Err(LacunaError::InvalidInput(format!("t must be at least 1, got {t}")));
    }
    let nt = poly.lt_norm(t)?;
    let n2t = poly.lt_norm(2.0 * t)?;
    if n2t == 0.0 {
        return Err(LacunaError::ZeroPolynomial);
    }
    let factor = (1.0 - 2f64.powf(-t)).powi(2);
    Ok(factor * (nt / n2t).powf(2.0 * t))
}

/// `min(1, (‖P‖_t / z)^t)`.
pub fn chebyshev_upper(poly: &Polynomial, z: f64, t: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(LacunaError::InvalidInput(format!("z must be positive, got {z}")));
    }
    if !(t >= 1.0) {
        return Err(LacunaError::InvalidInput(format!("t must be at least 1, got {t}")));
    }
    Ok((poly.lt_norm(t)? / z).powf(t).min(1.0))
}

#[derive(Clone, Copy)]
enum Side {
    /// `sup{t : κ(t) ≤ s}`
    Upper,
    /// `inf{t : κ(t) ≥ s}`
    Lower,
}

fn invert_kappa(a: &CoefficientVector, s: f64, side: Side) -> Result<f64> {
    if a.is_zero() {
        return Err(LacunaError::ZeroVector);
    }
    if !(s >= 0.0) {
        return Err(LacunaError::InvalidInput(format!("s must be positive, got {s}")));
    }
    let top = a.l1();
    // κ is continuous, nondecreasing, positive for t > 0 and equal to ‖a‖₁
    // from t = nnz(a) on
    match side {
        Side::Upper if s >= top => return Ok(f64::INFINITY),
        Side::Lower if s > top => return Ok(f64::INFINITY),
        _ => {}
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let inside = |t: f64| -> Result<bool> {
        let k = kappa(a, t)?;
        Ok(match side {
            Side::Upper => k <= s,
            Side::Lower => k < s,
        })
    };
    let n = a.len() as f64;
    let mut lo = 1e-12;
    let mut hi = 4.0 * (n * n).max(1.0);
    while !inside(lo)? {
        lo *= 0.25;
        if lo < f64::MIN_POSITIVE {
            return Ok(0.0);
        }
    }
    while inside(hi)? {
        hi *= 4.0;
    }
    while hi - lo > BISECTION_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if inside(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(match side {
        Side::Upper => lo,
        Side::Lower => hi,
    })
}

/// `F(s) = sup{t > 0 : κ(t, a) ≤ s}`, `+∞` once `s ≥ ‖a‖₁`.
pub fn f_functional(a: &CoefficientVector, s: f64) -> Result<f64> {
    invert_kappa(a, s, Side::Upper)
}

/// `G(s) = inf{t > 0 : κ(t, a) ≥ s}`, `+∞` once `s > ‖a‖₁`.
pub fn g_functional(a: &CoefficientVector, s: f64) -> Result<f64> {
    invert_kappa(a, s, Side::Lower)
}

/// Constants derived from one equivalence constant `β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnvelopeConstants {
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl EnvelopeConstants {
    pub fn from_beta(beta: f64) -> Result<Self> {
        if !(beta >= 1.0) || !beta.is_finite() {
            return Err(LacunaError::InvalidInput(format!("β must be a finite number ≥ 1, got {beta}")));
        }
        let c1 = (2.0 * beta).powi(4);
        let c2 = 4.0 * (2.0 * beta).ln();
        let c3 = 4.0 * std::f64::consts::SQRT_2 * c2 * beta;
        let c4 = 2.0 * beta * std::f64::consts::E;
        Ok(Self { beta, c1, c2, c3, c4 })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TailEnvelope {
    pub alpha: f64,
    pub system: EnvelopeConstants,
    pub reference: EnvelopeConstants,
    /// Comparison constant `A` between the system and the Rademacher reference.
    pub a_const: f64,
    #[serde(skip)]
    a: CoefficientVector,
    l1: f64,
}

/// Envelope for polynomials with coefficients `a` over a system with
/// equivalence constant `beta`; `beta_prime` is the Rademacher constant and
/// `alpha` the Holmstedt constant in use.
pub fn build_envelope(a: &CoefficientVector, beta: f64, alpha: f64, beta_prime: f64) -> Result<TailEnvelope> {
    if a.is_zero() {
        return Err(LacunaError::ZeroVector);
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(LacunaError::InvalidInput(format!("α must be positive, got {alpha}")));
    }
    let system = EnvelopeConstants::from_beta(beta)?;
    let reference = EnvelopeConstants::from_beta(beta_prime)?;
    let e = std::f64::consts::E;
    let a_const = [
        system.c1 * e,
        system.c3 * reference.c4,
        reference.c1 * e,
        reference.c3 * system.c4,
        4.0 * alpha * beta * beta_prime,
    ]
    .into_iter()
    .fold(f64::MIN, f64::max);
    Ok(TailEnvelope { alpha, system, reference, a_const, a: a.clone(), l1: a.l1() })
}

impl TailEnvelope {
    pub fn coefficients(&self) -> &CoefficientVector {
        &self.a
    }

    /// Below this level the lower bound is active.
    pub fn lower_cutoff(&self) -> f64 {
        self.l1 / (4.0 * self.alpha * self.system.beta)
    }

    /// From this level on the tail vanishes.
    pub fn upper_cutoff(&self) -> f64 {
        self.system.beta * self.l1
    }

    /// `C₁⁻¹·e^{−F(C₃z)}` below the lower cutoff, else 0.
    pub fn lower(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(LacunaError::InvalidInput(format!("z must be nonnegative, got {z}")));
        }
        if z >= self.lower_cutoff() {
            return Ok(0.0);
        }
        let f = f_functional(&self.a, self.system.c3 * z)?;
        Ok((-f).exp() / self.system.c1)
    }

    /// `min(1, e^{1−F(z/C₄)})`, and exactly 0 from the upper cutoff on.
    pub fn upper(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(LacunaError::InvalidInput(format!("z must be nonnegative, got {z}")));
        }
        if z >= self.upper_cutoff() {
            return Ok(0.0);
        }
        let f = f_functional(&self.a, z / self.system.c4)?;
        Ok((1.0 - f).exp().min(1.0))
    }

    /// Checks `κ(C₂·G(4βz)) ≤ C₃z`, the step that links the two functionals.
    /// Returns `None` when `G(4βz)` is infinite (nothing to check).
    pub fn chain_holds(&self, z: f64) -> Result<Option<bool>> {
        if !(z > 0.0) {
            return Ok(None);
        }
        let g = g_functional(&self.a, 4.0 * self.system.beta * z)?;
        if !g.is_finite() {
            return Ok(None);
        }
        let lhs = kappa(&self.a, self.system.c2 * g)?;
        Ok(Some(lhs <= self.system.c3 * z * (1.0 + 1e-9)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::SystemSpec;

    fn cv(v: &[f64]) -> CoefficientVector {
        CoefficientVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn functionals_single_coordinate() {
        let a = cv(&[1.0]);
        assert!((f_functional(&a, 0.5).unwrap() - 0.25).abs() < 1e-9);
        assert!((g_functional(&a, 0.5).unwrap() - 0.25).abs() < 1e-9);
        assert_eq!(f_functional(&a, 2.0).unwrap(), f64::INFINITY);
        assert_eq!(g_functional(&a, 2.0).unwrap(), f64::INFINITY);
        // κ reaches 1 at t = 1 and stays there
        assert_eq!(f_functional(&a, 1.0).unwrap(), f64::INFINITY);
        assert!((g_functional(&a, 1.0).unwrap() - 1.0).abs() < 1e-8);
        assert!(matches!(f_functional(&cv(&[0.0, 0.0]), 1.0), Err(LacunaError::ZeroVector)));
        assert!(matches!(g_functional(&cv(&[0.0]), 1.0), Err(LacunaError::ZeroVector)));
    }

    #[test]
    fn tiny_levels() {
        let a = cv(&[3.0, 4.0]);
        // κ(t) = 5√t for small t
        let f = f_functional(&a, 1e-9).unwrap();
        assert!((f - (1e-9f64 / 5.0).powi(2)).abs() <= 1e-9 * f + 1e-300);
    }

    #[test]
    fn paley_zygmund_two_signs() {
        let sys = SystemSpec::rademacher(2);
        let p = Polynomial::new(&sys, vec![1, 2], vec![1.0, 1.0]).unwrap();
        assert!((paley_zygmund_lower(&p, 2.0).unwrap() - 9.0 / 32.0).abs() < 1e-14);
        let zero = Polynomial::new(&sys, vec![1], vec![0.0]).unwrap();
        assert!(matches!(paley_zygmund_lower(&zero, 2.0), Err(LacunaError::ZeroPolynomial)));
    }

    #[test]
    fn chebyshev_examples() {
        let sys = SystemSpec::rademacher(2);
        let p = Polynomial::new(&sys, vec![1, 2], vec![1.0, 1.0]).unwrap();
        assert_eq!(chebyshev_upper(&p, 1.5, 4.0).unwrap(), 1.0);
        let n3 = p.lt_norm(3.0).unwrap();
        assert!((chebyshev_upper(&p, 2.0 * n3, 3.0).unwrap() - 0.125).abs() < 1e-14);
        assert_eq!(chebyshev_upper(&p, 0.5 * n3, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn envelope_shape() {
        let a = cv(&[1.0]);
        let env = build_envelope(&a, 1.1, 1.0, 1.0).unwrap();
        assert!(env.lower(0.01).unwrap() > 0.0);
        assert_eq!(env.lower(0.1).unwrap(), 0.0);
        assert_eq!(env.upper(1.1).unwrap(), 0.0);
        assert_eq!(env.upper(5.0).unwrap(), 0.0);
        assert_eq!(env.lower(env.lower_cutoff()).unwrap(), 0.0);
        assert!(env.a_const >= env.system.c1 * std::f64::consts::E);
        assert!(build_envelope(&a, 0.5, 1.0, 1.0).is_err());
    }
}
