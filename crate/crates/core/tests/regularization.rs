mod common;

use common::*;
use proptest::prelude::*;
use stomo::Regularizer;

fn kinds(mu: f64) -> [Regularizer; 4] {
    [
        Regularizer::L1NonNeg { mu },
        Regularizer::L1 { mu },
        Regularizer::NonNeg,
        Regularizer::Zero,
    ]
}

#[test]
fn worked_example_matches_grid_search() {
    let reg = Regularizer::L1NonNeg { mu: 0.2 };
    let v = [0.5, -0.3, 0.1];
    let expected: Vec<f64> = v.iter().map(|&vi| brute_prox(&reg, vi, 1.0, 1e-5)).collect();
    let got = reg.prox(&v, 1.0).unwrap();
    for (g, e) in got.iter().zip(&expected) {
        assert!((g - e).abs() <= 2e-5);
    }
    assert!((got[0] - 0.3).abs() < 1e-15);
    assert_eq!(&got[1..], &[0.0, 0.0]);
}

#[test]
fn prox_of_zero_and_identity() {
    for reg in kinds(0.7) {
        assert_eq!(reg.prox(&[0.0; 4], 3.0).unwrap(), vec![0.0; 4]);
    }
    let v = [1.5, -2.0, 0.0, 1e-300];
    assert_eq!(Regularizer::Zero.prox(&v, 9.0).unwrap(), v.to_vec());
}

#[test]
fn eval_examples() {
    let reg = Regularizer::L1NonNeg { mu: 1.0 };
    assert_eq!(reg.eval(&[1.0, 2.0, 0.0]).unwrap(), 3.0);
    assert_eq!(reg.eval(&[1.0, -1e-9, 0.0]).unwrap(), f64::INFINITY);
    assert_eq!(Regularizer::NonNeg.eval(&[0.0, 4.0]).unwrap(), 0.0);
    assert!(reg.eval(&[f64::NAN]).is_err());
}

#[test]
fn zero_weight_reduces_to_projection() {
    let v = [-1.0, 0.5, 2.0];
    let a = Regularizer::L1NonNeg { mu: 0.0 }.prox(&v, 4.0).unwrap();
    let b = Regularizer::NonNeg.prox(&v, 4.0).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_brute_force(v in -2.0f64..2.0, step in 1e-3f64..10.0, mu in 0.0f64..1.0) {
        for reg in kinds(mu) {
            let u = reg.prox_scalar(v, step);
            let oracle = brute_prox(&reg, v, step, 1e-5);
            prop_assert!((u - oracle).abs() <= 2e-5, "{reg:?} v={v} step={step}: {u} vs {oracle}");
        }
    }

    #[test]
    fn feasible_and_nonexpansive(
        v1 in prop::collection::vec(-5.0f64..5.0, 8),
        v2 in prop::collection::vec(-5.0f64..5.0, 8),
        step in 1e-3f64..10.0,
        mu in 0.0f64..2.0,
    ) {
        for reg in kinds(mu) {
            let p1 = reg.prox(&v1, step).unwrap();
            let p2 = reg.prox(&v2, step).unwrap();
            if reg.has_nonnegativity() {
                prop_assert!(p1.iter().all(|u| *u >= 0.0));
            }
            let dp: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| a - b).collect();
            let dv: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| a - b).collect();
            prop_assert!(norm(&dp) <= norm(&dv) * (1.0 + 1e-15));
        }
    }

    #[test]
    fn l1_nonneg_optimality_conditions(v in -5.0f64..5.0, step in 1e-3f64..10.0, mu in 0.0f64..2.0) {
        let u = Regularizer::L1NonNeg { mu }.prox_scalar(v, step);
        let t = step * mu;
        if u > 0.0 {
            // v - u is exactly the gradient of t*|u| on u > 0
            prop_assert!(((v - u) - t).abs() <= 1e-12 * v.abs().max(1.0));
        } else {
            prop_assert_eq!(u, 0.0);
            // 0 in u - v + t*[-1, 1] + (-inf, 0]
            prop_assert!(v <= t);
        }
    }
}
