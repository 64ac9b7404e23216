use lacuna::exact::{rat, QSqrt2};
use lacuna::kfunctional::{holmstedt, k_exact, kappa, CoefficientVector};
use lacuna::qnorm::{q_norm_exact, q_norm_heuristic, sandwich_check};
use lacuna::systems::{Polynomial, SystemSpec};
use proptest::prelude::*;

fn vector(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..=max_len)
}

fn cv(v: &[f64]) -> CoefficientVector {
    CoefficientVector::new(v.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn k_bounded_by_both_pure_splits(a in vector(10), t in 0.01f64..20.0) {
        let a = cv(&a);
        let k = k_exact(&a, t).unwrap().value;
        prop_assert!(k <= a.l1().min(t * a.l2()) * (1.0 + 1e-12) + 1e-15);
        prop_assert!(k <= holmstedt(&a, t) * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn k_split_reproduces_value(a in vector(10), t in 0.01f64..20.0) {
        let a = cv(&a);
        let split = k_exact(&a, t).unwrap();
        let l1: f64 = split.l1_part.iter().map(|x| x.abs()).sum();
        let l2: f64 = split.l2_part.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((l1 + t * l2 - split.value).abs() <= 1e-12 * split.value.max(1e-300));
        for ((b, r), x) in split.l1_part.iter().zip(&split.l2_part).zip(a.entries()) {
            prop_assert!((b + r - x).abs() <= 1e-15);
        }
    }

    #[test]
    fn k_homogeneous_and_permutation_invariant(a in vector(8), t in 0.05f64..5.0, c in 0.01f64..100.0) {
        let v = cv(&a);
        let k = k_exact(&v, t).unwrap().value;
        let scaled = k_exact(&v.scaled(c).unwrap(), t).unwrap().value;
        prop_assert!((scaled - c * k).abs() <= 1e-12 * (c * k).max(1e-300));
        let mut rev = a.clone();
        rev.reverse();
        let kr = k_exact(&cv(&rev), t).unwrap().value;
        prop_assert!((kr - k).abs() <= 1e-12 * k.max(1e-300));
    }

    #[test]
    fn k_monotone_concave_in_t(a in vector(8), t in 0.05f64..5.0, h in 0.001f64..1.0) {
        let v = cv(&a);
        let k = |s: f64| k_exact(&v, s).unwrap().value;
        let (lo, mid, hi) = (k(t), k(t + h), k(t + 2.0 * h));
        let tol = 1e-12 * hi.max(1e-300);
        prop_assert!(lo <= mid + tol && mid <= hi + tol);
        prop_assert!(mid + tol >= (lo + hi) / 2.0);
    }

    #[test]
    fn kappa_is_k_at_root(a in vector(8), t in 0.0f64..30.0) {
        let v = cv(&a);
        let lhs = kappa(&v, t).unwrap();
        let rhs = k_exact(&v, t.sqrt()).unwrap().value;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
    }

    #[test]
    fn q_norm_sandwich_and_heuristic(a in vector(9), t_frac in 0.0f64..1.0) {
        let v = cv(&a);
        let t2 = 1 + (t_frac * v.len() as f64) as usize;
        let t2 = t2.min(v.len());
        let r = sandwich_check(&v, t2).unwrap();
        prop_assert!(r.lower_ok && r.upper_ok);
        let exact = q_norm_exact(&v, t2).unwrap().value;
        let heur = q_norm_heuristic(&v, t2).unwrap().value;
        prop_assert!(heur <= exact + 1e-12);
        prop_assert!(exact <= v.l1() + 1e-12 && exact + 1e-12 >= v.l2());
    }

    #[test]
    fn rademacher_moments_increase_in_t(a in vector(8)) {
        let v = cv(&a);
        let sys = SystemSpec::rademacher(v.len());
        let poly = Polynomial::initial(&sys, &v).unwrap();
        let norms: Vec<f64> = [1.0, 2.0, 3.0, 6.0].iter().map(|&t| poly.lt_norm(t).unwrap()).collect();
        prop_assert!((norms[1] - v.l2()).abs() <= 1e-12 * v.l2().max(1e-300));
        prop_assert!(norms.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-12)));
        prop_assert!(norms[3] <= v.l1() * (1.0 + 1e-12));
    }

    #[test]
    fn qsqrt2_order_matches_floats(a in -50i64..50, b in -50i64..50, c in -50i64..50, d in -50i64..50) {
        let x = QSqrt2::new(rat(a, 7), rat(b, 5));
        let y = QSqrt2::new(rat(c, 7), rat(d, 5));
        let (fx, fy) = (x.to_f64(), y.to_f64());
        if (fx - fy).abs() > 1e-9 {
            prop_assert_eq!(x < y, fx < fy);
        }
        prop_assert_eq!(&x + &y, &y + &x);
        prop_assert!(((&x * &y).to_f64() - fx * fy).abs() <= 1e-9 * (1.0 + (fx * fy).abs()));
    }
}
